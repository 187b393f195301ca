use std::fmt;

use serde::Serialize;

use crate::rational::Rational;

/// How the coefficients of a [`MethodSpec`] are applied to the vector field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    /// `sum a_j y_{n+j} = h sum b_j f(y_{n+j})`
    Lmm,
    /// `sum a_j y_{n+j} = h f(sum b_j y_{n+j})`
    OneLeg,
    /// `sum a_j y_j = h sum b_j f(sum_l g_jl y_l)`
    Generalized,
}

impl MethodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::Lmm => "lmm",
            MethodKind::OneLeg => "one-leg",
            MethodKind::Generalized => "generalized",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lmm" => Some(MethodKind::Lmm),
            "one-leg" => Some(MethodKind::OneLeg),
            "generalized" => Some(MethodKind::Generalized),
            _ => None,
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Non-fatal findings attached to a method at construction time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodWarning {
    /// `|alpha_0| + |beta_0| = 0`: the method is really a method with fewer steps.
    VanishingStartCoefficients,
}

impl fmt::Display for MethodWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodWarning::VanishingStartCoefficients => {
                f.write_str("|alpha_0| + |beta_0| = 0 (step count is not minimal)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MethodError {
    #[error("line {line}: {source}")]
    Rational {
        line: usize,
        #[source]
        source: crate::rational::ParseRationalError,
    },
    #[error("line {line}: malformed line `{text}`")]
    MalformedLine { line: usize, text: String },
    #[error("line {line}: unknown field `{key}`")]
    UnknownField { line: usize, key: String },
    #[error("line {line}: field `{key}` given twice")]
    DuplicateField { line: usize, key: String },
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("invalid step count `{0}`")]
    BadStepCount(String),
    #[error("unknown method kind `{0}` (expected lmm, one-leg or generalized)")]
    UnknownKind(String),
    #[error("{field} has {found} coefficients, expected k+1 = {expected}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("gamma must be a {expected}x{expected} matrix")]
    GammaShape { expected: usize },
    #[error("gamma row {row} sums to {sum}, expected 1")]
    GammaRowSum { row: usize, sum: Rational },
    #[error("leading coefficient alpha_k is zero")]
    LeadingAlphaZero,
    #[error("one-leg method requires sigma(1) = 1, found {0}")]
    Normalization(Rational),
    #[error("one-leg method gamma rows must all equal beta")]
    OneLegGamma,
    #[error("generalized method requires a gamma matrix")]
    MissingGamma,
}

/// Exact coefficient record of a k-step method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MethodSpec {
    name: String,
    kind: MethodKind,
    alpha: Vec<Rational>,
    beta: Vec<Rational>,
    gamma: Option<Vec<Vec<Rational>>>,
    warnings: Vec<MethodWarning>,
}

impl MethodSpec {
    pub fn new(
        name: impl Into<String>,
        kind: MethodKind,
        alpha: Vec<Rational>,
        beta: Vec<Rational>,
        gamma: Option<Vec<Vec<Rational>>>,
    ) -> Result<Self, MethodError> {
        if alpha.len() < 2 {
            return Err(MethodError::BadStepCount(format!(
                "alpha has {} coefficients",
                alpha.len()
            )));
        }
        let k = alpha.len() - 1;
        if beta.len() != k + 1 {
            return Err(MethodError::LengthMismatch {
                field: "beta",
                expected: k + 1,
                found: beta.len(),
            });
        }
        if alpha[k].is_zero() {
            return Err(MethodError::LeadingAlphaZero);
        }
        if let Some(g) = &gamma {
            if g.len() != k + 1 || g.iter().any(|row| row.len() != k + 1) {
                return Err(MethodError::GammaShape { expected: k + 1 });
            }
            for (row, coeffs) in g.iter().enumerate() {
                let sum: Rational = coeffs.iter().cloned().sum();
                if sum != Rational::one() {
                    return Err(MethodError::GammaRowSum { row, sum });
                }
            }
        }
        match kind {
            MethodKind::OneLeg => {
                let s1: Rational = beta.iter().cloned().sum();
                if s1 != Rational::one() {
                    return Err(MethodError::Normalization(s1));
                }
                if let Some(g) = &gamma {
                    if g.iter().any(|row| row != &beta) {
                        return Err(MethodError::OneLegGamma);
                    }
                }
            }
            MethodKind::Generalized if gamma.is_none() => return Err(MethodError::MissingGamma),
            _ => {}
        }
        let mut warnings = Vec::new();
        if alpha[0].is_zero() && beta[0].is_zero() {
            warnings.push(MethodWarning::VanishingStartCoefficients);
        }
        Ok(MethodSpec {
            name: name.into(),
            kind,
            alpha,
            beta,
            gamma,
            warnings,
        })
    }

    /// Convenience constructor from string literals, for built-in tables.
    pub fn from_strs(name: &str, kind: MethodKind, alpha: &str, beta: &str) -> Result<Self, MethodError> {
        let row = |s: &str| -> Result<Vec<Rational>, MethodError> {
            s.split_whitespace()
                .map(|t| t.parse().map_err(|source| MethodError::Rational { line: 0, source }))
                .collect()
        };
        MethodSpec::new(name, kind, row(alpha)?, row(beta)?, None)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> MethodKind {
        self.kind
    }

    /// Step count `k`.
    pub fn k(&self) -> usize {
        self.alpha.len() - 1
    }

    pub fn alpha(&self) -> &[Rational] {
        &self.alpha
    }

    pub fn beta(&self) -> &[Rational] {
        &self.beta
    }

    pub fn gamma(&self) -> Option<&[Vec<Rational>]> {
        self.gamma.as_deref()
    }

    pub fn warnings(&self) -> &[MethodWarning] {
        &self.warnings
    }

    pub fn is_explicit(&self) -> bool {
        self.effective_beta()[self.k()].is_zero()
    }

    /// `sigma(1) = sum beta_j`.
    pub fn sigma_at_one(&self) -> Rational {
        self.beta.iter().cloned().sum()
    }

    /// Weights `b'_l` such that the method acts on a linear field `f(y) = Ay`
    /// as the multistep method `(alpha, b')`.
    ///
    /// For LMM and one-leg methods this is `beta`; for generalized methods it
    /// is `b'_l = sum_j beta_j gamma_jl`.
    pub fn effective_beta(&self) -> Vec<Rational> {
        match (&self.kind, &self.gamma) {
            (MethodKind::Generalized, Some(g)) => (0..=self.k())
                .map(|l| {
                    self.beta
                        .iter()
                        .zip(g.iter())
                        .map(|(b, row)| b * &row[l])
                        .sum()
                })
                .collect(),
            _ => self.beta.clone(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// The same method written as a `k`-step method by prepending zero
    /// coefficients (`k >= self.k()`).
    pub fn padded_to(&self, k: usize) -> MethodSpec {
        assert!(k >= self.k());
        let shift = k - self.k();
        let pad = |v: &[Rational]| {
            let mut out = vec![Rational::zero(); shift];
            out.extend_from_slice(v);
            out
        };
        let gamma = self.gamma.as_ref().map(|g| {
            let mut rows: Vec<Vec<Rational>> = (0..shift)
                .map(|i| {
                    let mut r = vec![Rational::zero(); k + 1];
                    r[i] = Rational::one();
                    r
                })
                .collect();
            rows.extend(g.iter().map(|r| pad(r)));
            rows
        });
        let mut warnings = self.warnings.clone();
        if shift > 0 && !warnings.contains(&MethodWarning::VanishingStartCoefficients) {
            warnings.push(MethodWarning::VanishingStartCoefficients);
        }
        MethodSpec {
            name: self.name.clone(),
            kind: self.kind,
            alpha: pad(&self.alpha),
            beta: pad(&self.beta),
            gamma,
            warnings,
        }
    }

    pub fn alpha_f64(&self) -> Vec<f64> {
        self.alpha.iter().map(Rational::to_f64).collect()
    }

    pub fn beta_f64(&self) -> Vec<f64> {
        self.beta.iter().map(Rational::to_f64).collect()
    }

    pub fn gamma_f64(&self) -> Option<Vec<Vec<f64>>> {
        self.gamma
            .as_ref()
            .map(|g| g.iter().map(|r| r.iter().map(Rational::to_f64).collect()).collect())
    }

    pub fn effective_beta_f64(&self) -> Vec<f64> {
        self.effective_beta().iter().map(Rational::to_f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_alpha_must_be_nonzero() {
        let err = MethodSpec::from_strs("x", MethodKind::Lmm, "1 0", "1 0").unwrap_err();
        assert_eq!(err, MethodError::LeadingAlphaZero);
    }

    #[test]
    fn vanishing_start_is_a_warning() {
        let m = MethodSpec::from_strs("am", MethodKind::Lmm, "0 0 0 -1 1", "0 1/24 -5/24 19/24 9/24")
            .unwrap();
        assert_eq!(m.warnings(), &[MethodWarning::VanishingStartCoefficients]);
    }

    #[test]
    fn one_leg_needs_normalization() {
        let err = MethodSpec::from_strs("x", MethodKind::OneLeg, "-1 0 1", "0 2 0").unwrap_err();
        assert!(matches!(err, MethodError::Normalization(_)));
    }

    #[test]
    fn padding_prepends_zeros() {
        let lf = MethodSpec::from_strs("lf", MethodKind::Lmm, "-1 0 1", "0 2 0").unwrap();
        let p = lf.padded_to(3);
        assert_eq!(p.k(), 3);
        assert_eq!(p.alpha()[0], Rational::zero());
        assert_eq!(p.beta()[2], Rational::from_integer(2));
    }

    #[test]
    fn generalized_effective_beta() {
        let g = vec![
            vec![Rational::one(), Rational::zero()],
            vec![Rational::new(1, 2), Rational::new(1, 2)],
        ];
        let m = MethodSpec::new(
            "mid",
            MethodKind::Generalized,
            vec![Rational::from_integer(-1), Rational::one()],
            vec![Rational::zero(), Rational::one()],
            Some(g),
        )
        .unwrap();
        assert_eq!(m.effective_beta(), vec![Rational::new(1, 2), Rational::new(1, 2)]);
        assert!(!m.is_explicit());
    }
}
