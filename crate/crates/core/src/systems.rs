//! Hamiltonian systems and their exact flows.
//!
//! States are ordered `(q_1..q_n, p_1..p_n)`. With the canonical structure
//! matrix `J = [[0, I], [-I, 0]]` Hamilton's equations read
//! `q' = dH/dp`, `p' = -dH/dq`, i.e. `y' = J grad H(y)` in this ordering.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

pub type StateVector = DVector<f64>;

/// Relative symmetry tolerance for Hessians.
pub const SYMMETRY_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SystemError {
    #[error("omega must be positive and finite, got {0}")]
    NonPositiveOmega(f64),
    #[error("matrix is {rows}x{cols}; expected a square matrix of even size")]
    BadShape { rows: usize, cols: usize },
    #[error("Hessian is not symmetric (max |S - S^T| = {0:e})")]
    NotSymmetric(f64),
    #[error("state has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("closed-form SHO solution needs one degree of freedom, got {0}")]
    NotSingleDof(usize),
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

/// `J = [[0, I_n], [-I_n, 0]]`.
pub fn structure_matrix(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// A Hamiltonian vector field `y -> J grad H(y)` together with `H`.
///
/// Implementations must be free of side effects so one instance can drive
/// several integrations concurrently.
pub trait HamiltonianField: Send + Sync {
    /// State dimension `2n`.
    fn dimension(&self) -> usize;
    fn evaluate(&self, y: &StateVector) -> StateVector;
    fn hamiltonian(&self, y: &StateVector) -> f64;
    /// The quadratic Hamiltonian behind this field, if it is linear.
    fn as_linear(&self) -> Option<&LinearHamiltonian> {
        None
    }
    fn label(&self) -> String;
}

/// Quadratic Hamiltonian `H(y) = y^T S y / 2` with field `A y`, `A = J S`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHamiltonian {
    s: DMatrix<f64>,
    a: DMatrix<f64>,
    /// set for the one-degree-of-freedom oscillator built by [`sho`]
    omega: Option<f64>,
}

impl LinearHamiltonian {
    pub fn new(s: DMatrix<f64>) -> Result<Self, SystemError> {
        let (rows, cols) = s.shape();
        if rows != cols || rows == 0 || rows % 2 != 0 {
            return Err(SystemError::BadShape { rows, cols });
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(SystemError::NonFinite);
        }
        let asym = (&s - s.transpose()).amax();
        if asym > SYMMETRY_TOLERANCE * s.amax().max(1.0) {
            return Err(SystemError::NotSymmetric(asym));
        }
        let s = (&s + s.transpose()) * 0.5;
        let a = structure_matrix(rows / 2) * &s;
        Ok(LinearHamiltonian { s, a, omega: None })
    }

    /// Parses a whitespace-separated matrix, one row per line; `#` comments allowed.
    pub fn from_matrix_text(text: &str) -> Result<Self, SystemError> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| SystemError::Parse {
                        line: i + 1,
                        message: format!("not a number: `{t}`"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(SystemError::Parse {
                        line: i + 1,
                        message: format!("row has {} entries, expected {}", row.len(), first.len()),
                    });
                }
            }
            rows.push(row);
        }
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if n != cols {
            return Err(SystemError::BadShape { rows: n, cols });
        }
        LinearHamiltonian::new(DMatrix::from_row_iterator(n, n, rows.into_iter().flatten()))
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn system_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn degrees_of_freedom(&self) -> usize {
        self.s.nrows() / 2
    }

    pub fn sho_omega(&self) -> Option<f64> {
        self.omega
    }

    /// `exp(tA)`; closed form for the oscillator, scaling-and-squaring otherwise.
    pub fn propagator(&self, t: f64) -> DMatrix<f64> {
        match self.omega {
            Some(w) => {
                let (s, c) = (w * t).sin_cos();
                DMatrix::from_row_slice(2, 2, &[c, s / w, -w * s, c])
            }
            None => (&self.a * t).exp(),
        }
    }

    pub fn exact_state(&self, y0: &StateVector, t: f64) -> StateVector {
        match self.omega {
            Some(w) => sho_closed_form(w, y0, t),
            None => self.propagator(t) * y0,
        }
    }
}

impl HamiltonianField for LinearHamiltonian {
    fn dimension(&self) -> usize {
        self.s.nrows()
    }

    fn evaluate(&self, y: &StateVector) -> StateVector {
        &self.a * y
    }

    fn hamiltonian(&self, y: &StateVector) -> f64 {
        0.5 * y.dot(&(&self.s * y))
    }

    fn as_linear(&self) -> Option<&LinearHamiltonian> {
        Some(self)
    }

    fn label(&self) -> String {
        match self.omega {
            Some(w) => format!("sho(omega={w})"),
            None => format!("quadratic(n={})", self.degrees_of_freedom()),
        }
    }
}

/// Simple harmonic oscillator `H = p^2/2 + omega^2 q^2/2`.
pub fn sho(omega: f64) -> Result<LinearHamiltonian, SystemError> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(SystemError::NonPositiveOmega(omega));
    }
    let mut sys = LinearHamiltonian::new(DMatrix::from_row_slice(2, 2, &[omega * omega, 0.0, 0.0, 1.0]))?;
    sys.omega = Some(omega);
    Ok(sys)
}

fn sho_closed_form(w: f64, y0: &StateVector, t: f64) -> StateVector {
    let (q0, p0) = (y0[0], y0[1]);
    let (s, c) = (w * t).sin_cos();
    DVector::from_vec(vec![q0 * c + p0 / w * s, p0 * c - w * q0 * s])
}

/// Exact oscillator state at time `t`.
pub fn sho_exact(omega: f64, y0: &StateVector, t: f64) -> Result<StateVector, SystemError> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(SystemError::NonPositiveOmega(omega));
    }
    if y0.len() != 2 {
        return Err(SystemError::NotSingleDof(y0.len() / 2));
    }
    Ok(sho_closed_form(omega, y0, t))
}

pub fn hamiltonian_energy(field: &dyn HamiltonianField, y: &StateVector) -> Result<f64, SystemError> {
    if y.len() != field.dimension() {
        return Err(SystemError::DimensionMismatch {
            expected: field.dimension(),
            found: y.len(),
        });
    }
    Ok(field.hamiltonian(y))
}

/// One-degree-of-freedom state from `(p0, q0)` in the `(q, p)` ordering.
pub fn state_from_pq(p0: f64, q0: f64) -> StateVector {
    DVector::from_vec(vec![q0, p0])
}

type ScalarFn = dyn Fn(&StateVector) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&StateVector) -> StateVector + Send + Sync;

/// A field defined by user-supplied `H` and `grad H`; the vector field is
/// `J grad H`.
#[derive(Clone)]
pub struct GradientField {
    label: String,
    dimension: usize,
    hamiltonian: Arc<ScalarFn>,
    gradient: Arc<VectorFn>,
}

impl GradientField {
    pub fn new(
        label: impl Into<String>,
        degrees_of_freedom: usize,
        hamiltonian: impl Fn(&StateVector) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&StateVector) -> StateVector + Send + Sync + 'static,
    ) -> Self {
        GradientField {
            label: label.into(),
            dimension: 2 * degrees_of_freedom,
            hamiltonian: Arc::new(hamiltonian),
            gradient: Arc::new(gradient),
        }
    }

    /// `H = 0`.
    pub fn zero(degrees_of_freedom: usize) -> Self {
        let d = 2 * degrees_of_freedom;
        GradientField::new("zero", degrees_of_freedom, |_| 0.0, move |_| DVector::zeros(d))
    }

    /// Mathematical pendulum `H = p^2/2 - cos q`.
    pub fn pendulum() -> Self {
        GradientField::new(
            "pendulum",
            1,
            |y| 0.5 * y[1] * y[1] - y[0].cos(),
            |y| DVector::from_vec(vec![y[0].sin(), y[1]]),
        )
    }

    pub fn gradient(&self, y: &StateVector) -> StateVector {
        (self.gradient)(y)
    }
}

impl fmt::Debug for GradientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GradientField")
            .field("label", &self.label)
            .field("dimension", &self.dimension)
            .finish_non_exhaustive()
    }
}

impl HamiltonianField for GradientField {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, y: &StateVector) -> StateVector {
        let g = (self.gradient)(y);
        let n = self.dimension / 2;
        let mut out = DVector::zeros(self.dimension);
        for i in 0..n {
            out[i] = g[n + i];
            out[n + i] = -g[i];
        }
        out
    }

    fn hamiltonian(&self, y: &StateVector) -> f64 {
        (self.hamiltonian)(y)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(x: &[f64]) -> StateVector {
        DVector::from_row_slice(x)
    }

    #[test]
    fn sho_field_and_energy() {
        let s = sho(1.0).unwrap();
        assert_eq!(s.evaluate(&v(&[1.0, 0.0])), v(&[0.0, -1.0]));
        assert_eq!(s.hamiltonian(&v(&[1.0, 0.0])), 0.5);
        assert_eq!(sho(2.0).unwrap().hamiltonian(&v(&[1.0, 1.0])), 2.5);
        assert_eq!(sho(3.0).unwrap().hamiltonian(&v(&[1.0, 0.0])), 4.5);
        assert_eq!(s.hamiltonian(&v(&[0.0, 0.0])), 0.0);
        assert_eq!(s.system_matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    }

    #[test]
    fn sho_matrix_is_hamiltonian() {
        let s = sho(1.0).unwrap();
        let j = structure_matrix(1);
        let a = s.system_matrix();
        assert_eq!(a.transpose() * &j + &j * a, DMatrix::zeros(2, 2));
    }

    #[test]
    fn omega_must_be_positive() {
        assert_eq!(sho(0.0), Err(SystemError::NonPositiveOmega(0.0)));
        assert!(sho(-1.0).is_err());
        assert!(sho(f64::NAN).is_err());
    }

    #[test]
    fn closed_form_quarter_and_full_period() {
        let y = sho_exact(1.0, &v(&[1.0, 0.0]), PI / 2.0).unwrap();
        assert!((y - v(&[0.0, -1.0])).norm() < 1e-15);
        let y = sho_exact(1.0, &v(&[1.0, 0.0]), 2.0 * PI).unwrap();
        assert!((y - v(&[1.0, 0.0])).norm() < 1e-15);
        let y0 = v(&[0.3, -0.7]);
        assert_eq!(sho_exact(1.0, &y0, 0.0).unwrap(), y0);
    }

    #[test]
    fn initial_value_mapping() {
        // (p0, q0) = (0, 1) gives H = 1/2
        let y = state_from_pq(0.0, 1.0);
        assert_eq!(y, v(&[1.0, 0.0]));
        assert_eq!(hamiltonian_energy(&sho(1.0).unwrap(), &y).unwrap(), 0.5);
    }

    #[test]
    fn energy_dimension_checked() {
        let err = hamiltonian_energy(&sho(1.0).unwrap(), &v(&[1.0])).unwrap_err();
        assert_eq!(err, SystemError::DimensionMismatch { expected: 2, found: 1 });
    }

    #[test]
    fn matrix_file_parsing() {
        let sys = LinearHamiltonian::from_matrix_text("# 2 dof\n2 0 0 0\n0 1 0 0\n0 0 1 0.5\n0 0 0.5 1\n").unwrap();
        assert_eq!(sys.degrees_of_freedom(), 2);
        assert!(matches!(
            LinearHamiltonian::from_matrix_text("1 2\n3 4\n"),
            Err(SystemError::NotSymmetric(_))
        ));
        assert!(matches!(
            LinearHamiltonian::from_matrix_text("1 0 0\n0 1 0\n0 0 1\n"),
            Err(SystemError::BadShape { .. })
        ));
        assert!(matches!(
            LinearHamiltonian::from_matrix_text("1 x\n0 1\n"),
            Err(SystemError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn general_propagator_matches_closed_form() {
        let closed = sho(1.7).unwrap();
        let general = LinearHamiltonian::new(closed.hessian().clone()).unwrap();
        let y0 = v(&[0.4, -1.1]);
        let d = closed.exact_state(&y0, 3.3) - general.exact_state(&y0, 3.3);
        assert!(d.norm() < 1e-13, "{}", d.norm());
    }

    #[test]
    fn gradient_field_matches_linear() {
        let g = GradientField::new("sho", 1, |y| 0.5 * y.norm_squared(), |y| y.clone());
        let s = sho(1.0).unwrap();
        let y = v(&[0.2, 0.9]);
        assert_eq!(g.evaluate(&y), s.evaluate(&y));
        assert!(g.as_linear().is_none());
    }
}
