use nalgebra::{DMatrix, Schur};

use crate::linalg::{condition_number, null_space, poly_roots, to_complex, Complex64};
use crate::scheme::Scheme;
use crate::systems::{LinearHamiltonian, StateVector};

use super::GeometryError;

/// Minimal separation between the closest and second-closest root to
/// `exp(h lambda)` for the principal root to count as well defined.
pub const AMBIGUITY_GAP: f64 = 1e-8;
pub const MAX_EIGENBASIS_CONDITION: f64 = 1e8;

/// Eigenvalues closer than this (relative) are treated as one cluster.
const CLUSTER_TOLERANCE: f64 = 1e-8;

/// Underlying one-step map `G` of a scheme on a linear system.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTransition {
    pub g: DMatrix<f64>,
    /// `|sum_j C_j(hA) G^j|_F`
    pub residual: f64,
    /// eigenvalues of `A` in eigenbasis order
    pub eigenvalues: Vec<Complex64>,
    /// principal root selected for each eigenvalue
    pub principal_roots: Vec<Complex64>,
    pub eigenbasis_condition: f64,
}

impl StepTransition {
    pub fn area_defect(&self) -> f64 {
        (self.g.determinant().abs() - 1.0).abs()
    }
}

/// Eigenvalues of `a` with an eigenvector matrix; errors when the basis is
/// ill-conditioned (defective or nearly defective `a`).
fn eigen_decomposition(a: &DMatrix<f64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>, f64), GeometryError> {
    let ac = to_complex(a);
    let d = a.nrows();
    let eig = Schur::new(ac.clone())
        .eigenvalues()
        .expect("complex Schur form is triangular");
    let scale = 1.0 + a.amax();
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for &z in eig.iter() {
        match clusters.iter_mut().find(|(c, _)| (c - z).norm() <= CLUSTER_TOLERANCE * scale) {
            Some((_, n)) => *n += 1,
            None => clusters.push((z, 1)),
        }
    }
    let mut values = Vec::with_capacity(d);
    let mut columns = Vec::with_capacity(d);
    for (lambda, mult) in clusters {
        let shifted = &ac - DMatrix::<Complex64>::identity(d, d) * lambda;
        let (vectors, worst) = null_space(&shifted, mult);
        if worst > 1e-6 * scale {
            return Err(GeometryError::IllConditioned(f64::INFINITY));
        }
        for v in vectors {
            values.push(lambda);
            columns.push(v);
        }
    }
    let v = DMatrix::from_columns(&columns);
    let cond = condition_number(&v);
    if !(cond < MAX_EIGENBASIS_CONDITION) {
        return Err(GeometryError::IllConditioned(cond));
    }
    Ok((values, v, cond))
}

fn principal_root(scheme: &Scheme, mu: Complex64) -> Result<Complex64, GeometryError> {
    let coeffs = scheme
        .scalar_characteristic(mu)
        .ok_or_else(|| GeometryError::NoScalarRecurrence(scheme.name()))?;
    let target = mu.exp();
    let mut roots: Vec<(f64, Complex64)> = poly_roots(&coeffs)
        .into_iter()
        .map(|z| ((z - target).norm(), z))
        .collect();
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    match roots.as_slice() {
        [] => Err(GeometryError::NoScalarRecurrence(scheme.name())),
        [(_, z)] => Ok(*z),
        [(d0, z), (d1, _), ..] => {
            if d1 - d0 <= AMBIGUITY_GAP {
                Err(GeometryError::AmbiguousRoot {
                    re: mu.re,
                    im: mu.im,
                    gap: d1 - d0,
                })
            } else {
                Ok(*z)
            }
        }
    }
}

/// Assembles `G = V diag(zeta) V^{-1}` from the principal root `zeta` of
/// each eigencomponent and reports how well `G` satisfies the recurrence.
pub fn step_transition(scheme: &Scheme, sys: &LinearHamiltonian, h: f64) -> Result<StepTransition, GeometryError> {
    let a = sys.system_matrix();
    let blocks = scheme.linear_blocks(a, h)?;
    let (eigenvalues, v, cond) = eigen_decomposition(a)?;
    let principal_roots = eigenvalues
        .iter()
        .map(|&l| principal_root(scheme, l * h))
        .collect::<Result<Vec<_>, _>>()?;
    let d = a.nrows();
    let v_inv = v.clone().try_inverse().ok_or(GeometryError::IllConditioned(cond))?;
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(principal_roots.clone()));
    let g = (&v * diag * v_inv).map(|z| z.re);
    let mut sum = DMatrix::<f64>::zeros(d, d);
    let mut power = DMatrix::<f64>::identity(d, d);
    for c in &blocks {
        sum += c * &power;
        power = &power * &g;
    }
    Ok(StepTransition {
        residual: sum.norm(),
        g,
        eigenvalues,
        principal_roots,
        eigenbasis_condition: cond,
    })
}

/// Largest recurrence residual along the orbit `y_j = G^j y0`, over
/// `windows` consecutive windows.
pub fn orbit_residual(
    scheme: &Scheme,
    sys: &LinearHamiltonian,
    h: f64,
    g: &DMatrix<f64>,
    y0: &StateVector,
    windows: usize,
) -> Result<f64, GeometryError> {
    let blocks = scheme.linear_blocks(sys.system_matrix(), h)?;
    let k = blocks.len() - 1;
    let mut orbit = vec![y0.clone()];
    for j in 1..windows + k {
        let next = g * &orbit[j - 1];
        orbit.push(next);
    }
    Ok((0..windows)
        .map(|n| {
            blocks
                .iter()
                .enumerate()
                .fold(StateVector::zeros(y0.len()), |acc, (j, c)| acc + c * &orbit[n + j])
                .norm()
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::transfer_matrix;
    use crate::methods::{builtin, BUILTIN_NAMES};
    use crate::systems::{sho, structure_matrix};

    #[test]
    fn midpoint_transition_is_cayley() {
        let sys = sho(1.0).unwrap();
        let s = builtin("midpoint").unwrap();
        let st = step_transition(&s, &sys, 0.1).unwrap();
        let m = transfer_matrix(&s, &sys, 0.1).unwrap().matrix;
        assert!((&st.g - m).amax() < 1e-12);
        let j = structure_matrix(1);
        assert!((st.g.transpose() * &j * &st.g - j).amax() < 1e-12);
    }

    #[test]
    fn leapfrog_principal_roots_on_unit_circle() {
        let h = 0.1;
        let st = step_transition(&builtin("leapfrog").unwrap(), &sho(1.0).unwrap(), h).unwrap();
        for (l, z) in st.eigenvalues.iter().zip(&st.principal_roots) {
            assert!((z.norm() - 1.0).abs() < 1e-12);
            // zeta = h lambda + sqrt(1 + (h lambda)^2) for lambda = +-i
            let expected = l * h + (Complex64::new(1.0, 0.0) + (l * h) * (l * h)).sqrt();
            assert!((z - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn builtins_satisfy_matrix_relation() {
        let sys = sho(1.0).unwrap();
        let y0 = StateVector::from_vec(vec![1.0, 0.0]);
        for name in BUILTIN_NAMES {
            let s = builtin(name).unwrap();
            let st = step_transition(&s, &sys, 0.1).unwrap();
            assert!(st.residual <= 1e-10, "{name}: {}", st.residual);
            assert!(orbit_residual(&s, &sys, 0.1, &st.g, &y0, 100).unwrap() <= 1e-10, "{name}");
        }
    }

    #[test]
    fn defective_matrix_rejected() {
        // S = diag(1, 0) gives A = [[0, 0], [-1, 0]], a Jordan block
        let sys = LinearHamiltonian::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
        let err = step_transition(&builtin("leapfrog").unwrap(), &sys, 0.1).unwrap_err();
        assert!(matches!(err, GeometryError::IllConditioned(_)), "{err:?}");
    }
}
