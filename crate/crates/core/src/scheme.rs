//! Integration schemes built from one or two [`MethodSpec`]s.
//!
//! On a linear field `f(y) = Ay` every scheme here reduces to a matrix
//! recurrence `sum_j C_j(hA) y_{n+j} = 0`; [`Scheme::linear_blocks`] exposes
//! the blocks `C_j` and [`Scheme::scalar_characteristic`] the scalar
//! polynomial obtained by replacing `hA` with an eigenvalue `mu`.

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::linalg::Complex64;
use crate::methods::MethodSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PcMode {
    /// predict, evaluate, correct, evaluate
    Pece,
    /// predict, evaluate, correct; the stored derivative is the predicted one
    Pec,
}

impl PcMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PcMode::Pece => "pece",
            PcMode::Pec => "pec",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pece" => Some(PcMode::Pece),
            "pec" => Some(PcMode::Pec),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemeError {
    #[error("predictor `{0}` is implicit")]
    ImplicitPredictor(String),
    #[error("partitioned methods must be explicit, `{0}` is implicit")]
    ImplicitPartition(String),
    #[error("PEC mode carries derivative history and has no state-only linear recurrence")]
    PecNotLinearRecurrence,
    #[error("system matrix is {rows}x{cols}, expected square of even size")]
    BadSystemMatrix { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PredictorCorrector {
    pub name: String,
    pub predictor: MethodSpec,
    pub corrector: MethodSpec,
    pub mode: PcMode,
}

impl PredictorCorrector {
    /// Pads both methods to a common step count.
    pub fn new(
        name: impl Into<String>,
        predictor: MethodSpec,
        corrector: MethodSpec,
        mode: PcMode,
    ) -> Result<Self, SchemeError> {
        if !predictor.is_explicit() {
            return Err(SchemeError::ImplicitPredictor(predictor.name().to_string()));
        }
        let k = predictor.k().max(corrector.k());
        Ok(PredictorCorrector {
            name: name.into(),
            predictor: predictor.padded_to(k),
            corrector: corrector.padded_to(k),
            mode,
        })
    }

    pub fn k(&self) -> usize {
        self.predictor.k()
    }
}

/// Different explicit methods for the position and momentum equations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionedPair {
    method_q: MethodSpec,
    method_p: MethodSpec,
    swapped: bool,
}

impl PartitionedPair {
    /// `first` drives the q-equation and `second` the p-equation, unless
    /// `swapped` exchanges them.
    pub fn new(first: MethodSpec, second: MethodSpec, swapped: bool) -> Result<Self, SchemeError> {
        for m in [&first, &second] {
            if !m.is_explicit() {
                return Err(SchemeError::ImplicitPartition(m.name().to_string()));
            }
        }
        let k = first.k().max(second.k());
        let (first, second) = (first.padded_to(k), second.padded_to(k));
        let (method_q, method_p) = if swapped { (second, first) } else { (first, second) };
        Ok(PartitionedPair {
            method_q,
            method_p,
            swapped,
        })
    }

    pub fn method_q(&self) -> &MethodSpec {
        &self.method_q
    }

    pub fn method_p(&self) -> &MethodSpec {
        &self.method_p
    }

    pub fn swapped(&self) -> bool {
        self.swapped
    }

    pub fn k(&self) -> usize {
        self.method_q.k()
    }

    pub fn name(&self) -> String {
        format!("{}+{}", self.method_q.name(), self.method_p.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Scheme {
    Method(MethodSpec),
    PredictorCorrector(PredictorCorrector),
    Partitioned(PartitionedPair),
}

impl Scheme {
    pub fn name(&self) -> String {
        match self {
            Scheme::Method(m) => m.name().to_string(),
            Scheme::PredictorCorrector(pc) => pc.name.clone(),
            Scheme::Partitioned(pair) => pair.name(),
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Scheme::Method(m) => m.k(),
            Scheme::PredictorCorrector(pc) => pc.k(),
            Scheme::Partitioned(pair) => pair.k(),
        }
    }

    /// The constituent methods, in a fixed order.
    pub fn methods(&self) -> Vec<&MethodSpec> {
        match self {
            Scheme::Method(m) => vec![m],
            Scheme::PredictorCorrector(pc) => vec![&pc.predictor, &pc.corrector],
            Scheme::Partitioned(pair) => vec![&pair.method_q, &pair.method_p],
        }
    }

    pub fn as_method(&self) -> Option<&MethodSpec> {
        match self {
            Scheme::Method(m) => Some(m),
            _ => None,
        }
    }

    /// Blocks `C_0..C_k` of the recurrence `sum_j C_j y_{n+j} = 0` on the
    /// linear field `f(y) = a y` with step `h`.
    pub fn linear_blocks(&self, a: &DMatrix<f64>, h: f64) -> Result<Vec<DMatrix<f64>>, SchemeError> {
        let d = a.nrows();
        if d != a.ncols() || !d.is_multiple_of(2) {
            return Err(SchemeError::BadSystemMatrix {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let eye = DMatrix::<f64>::identity(d, d);
        let ha = a * h;
        match self {
            Scheme::Method(m) => {
                let alpha = m.alpha_f64();
                let beta = m.effective_beta_f64();
                Ok((0..=m.k()).map(|j| &eye * alpha[j] - &ha * beta[j]).collect())
            }
            Scheme::PredictorCorrector(pc) => {
                if pc.mode == PcMode::Pec {
                    return Err(SchemeError::PecNotLinearRecurrence);
                }
                let k = pc.k();
                let (ap, bp) = (pc.predictor.alpha_f64(), pc.predictor.beta_f64());
                let (ac, bc) = (pc.corrector.alpha_f64(), pc.corrector.beta_f64());
                let ha2 = &ha * &ha;
                let mut blocks: Vec<DMatrix<f64>> = (0..k)
                    .map(|j| {
                        &eye * ac[j] - &ha * bc[j] + &ha * (bc[k] * ap[j] / ap[k])
                            - &ha2 * (bc[k] * bp[j] / ap[k])
                    })
                    .collect();
                blocks.push(&eye * ac[k]);
                Ok(blocks)
            }
            Scheme::Partitioned(pair) => {
                let n = d / 2;
                let (aq, bq) = (pair.method_q.alpha_f64(), pair.method_q.beta_f64());
                let (ap, bp) = (pair.method_p.alpha_f64(), pair.method_p.beta_f64());
                Ok((0..=pair.k())
                    .map(|j| {
                        let mut da = DMatrix::<f64>::zeros(d, d);
                        let mut db = DMatrix::<f64>::zeros(d, d);
                        for i in 0..n {
                            da[(i, i)] = aq[j];
                            db[(i, i)] = bq[j];
                            da[(n + i, n + i)] = ap[j];
                            db[(n + i, n + i)] = bp[j];
                        }
                        da - db * &ha
                    })
                    .collect())
            }
        }
    }

    /// Coefficients (ascending in `zeta`) of the scalar characteristic
    /// polynomial `sum_j c_j(mu) zeta^j`, or `None` when the scheme does not
    /// act as a scalar recurrence on eigencomponents (partitioned pairs with
    /// different methods, PEC mode).
    pub fn scalar_characteristic(&self, mu: Complex64) -> Option<Vec<Complex64>> {
        match self {
            Scheme::Method(m) => {
                let alpha = m.alpha_f64();
                let beta = m.effective_beta_f64();
                Some(alpha.iter().zip(&beta).map(|(&a, &b)| a - mu * b).collect())
            }
            Scheme::PredictorCorrector(pc) => {
                if pc.mode == PcMode::Pec {
                    return None;
                }
                let k = pc.k();
                let (ap, bp) = (pc.predictor.alpha_f64(), pc.predictor.beta_f64());
                let (ac, bc) = (pc.corrector.alpha_f64(), pc.corrector.beta_f64());
                let mut c: Vec<Complex64> = (0..k)
                    .map(|j| {
                        ac[j] - mu * bc[j] + mu * (bc[k] * ap[j] / ap[k])
                            - mu * mu * (bc[k] * bp[j] / ap[k])
                    })
                    .collect();
                c.push(Complex64::new(ac[k], 0.0));
                Some(c)
            }
            Scheme::Partitioned(pair) => {
                let same = pair.method_q.alpha() == pair.method_p.alpha()
                    && pair.method_q.beta() == pair.method_p.beta();
                same.then(|| Scheme::Method(pair.method_q.clone()).scalar_characteristic(mu))
                    .flatten()
            }
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}
