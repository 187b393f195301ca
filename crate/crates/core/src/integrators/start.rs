use crate::systems::{HamiltonianField, StateVector};

use super::{IntegrateError, SolverConfig, Starter};

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step(field: &dyn HamiltonianField, y: &StateVector, h: f64) -> StateVector {
    let k1 = field.evaluate(y);
    let k2 = field.evaluate(&(y + &k1 * (h / 2.0)));
    let k3 = field.evaluate(&(y + &k2 * (h / 2.0)));
    let k4 = field.evaluate(&(y + &k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// `y0` followed by `count` Runge–Kutta states.
pub fn rk4_start(
    field: &dyn HamiltonianField,
    y0: &StateVector,
    h: f64,
    count: usize,
) -> Result<Vec<StateVector>, IntegrateError> {
    let mut out = Vec::with_capacity(count + 1);
    out.push(y0.clone());
    for i in 1..=count {
        let next = rk4_step(field, &out[i - 1], h);
        if next.iter().any(|x| !x.is_finite()) {
            return Err(IntegrateError::NonFinite { index: i });
        }
        out.push(next);
    }
    Ok(out)
}

/// `y0` followed by `count` states of the exact flow at `t_j = j h`.
pub fn exact_start(
    field: &dyn HamiltonianField,
    y0: &StateVector,
    h: f64,
    count: usize,
) -> Result<Vec<StateVector>, IntegrateError> {
    let sys = field.as_linear().ok_or(IntegrateError::NotLinear)?;
    Ok((0..=count)
        .map(|j| {
            if j == 0 {
                y0.clone()
            } else {
                sys.exact_state(y0, j as f64 * h)
            }
        })
        .collect())
}

/// The `k` states `y_0..y_{k-1}` a k-step scheme needs before its first step.
pub fn starting_states(
    field: &dyn HamiltonianField,
    y0: &StateVector,
    h: f64,
    k: usize,
    cfg: &SolverConfig,
) -> Result<Vec<StateVector>, IntegrateError> {
    let count = k.saturating_sub(1);
    match cfg.starter {
        Starter::Rk4 => rk4_start(field, y0, h, count),
        Starter::Exact => exact_start(field, y0, h, count),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{sho, sho_exact, GradientField};
    use nalgebra::DVector;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_count_is_initial_value() {
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(rk4_start(&sho(1.0).unwrap(), &y0, 0.1, 0).unwrap(), vec![y0]);
    }

    #[test]
    fn rk4_one_step_accuracy() {
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let s = rk4_start(&sho(1.0).unwrap(), &y0, 0.1, 1).unwrap();
        let exact = sho_exact(1.0, &y0, 0.1).unwrap();
        assert!((&s[1] - exact).norm() < 1e-6);
    }

    #[test]
    fn zero_field_is_constant() {
        let y0 = DVector::from_vec(vec![0.3, -2.0]);
        for y in rk4_start(&GradientField::zero(1), &y0, 0.5, 4).unwrap() {
            assert_eq!(y, y0);
        }
    }

    #[test]
    fn exact_quarter_period() {
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let sys = sho(1.0).unwrap();
        let s = exact_start(&sys, &y0, FRAC_PI_2, 1).unwrap();
        assert!((&s[1] - DVector::from_vec(vec![0.0, -1.0])).norm() < 1e-13);
        let s = exact_start(&sys, &y0, 0.1, 3).unwrap();
        for y in &s {
            assert!((sys.hamiltonian(y) - 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn exact_start_needs_linear_field() {
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(
            exact_start(&GradientField::pendulum(), &y0, 0.1, 2),
            Err(IntegrateError::NotLinear)
        );
    }
}
