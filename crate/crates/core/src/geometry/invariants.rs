use nalgebra::DMatrix;
use serde::Serialize;

use crate::integrators::{method_residual, partitioned_residual, Trajectory};
use crate::methods::{lambda_matrix, MethodSpec};
use crate::scheme::Scheme;
use crate::systems::{structure_matrix, HamiltonianField, StateVector};

use super::GeometryError;

pub fn lambda_f64(m: &MethodSpec) -> DMatrix<f64> {
    let rows = lambda_matrix(m);
    let k = rows.len();
    DMatrix::from_fn(k, k, |i, j| rows[i][j].to_f64())
}

/// `sum_ij lambda_ij y_i^T J z_j` for two windows of equal length.
pub fn window_skew_form(lambda: &DMatrix<f64>, y: &[StateVector], z: &[StateVector]) -> f64 {
    let j = structure_matrix(y[0].len() / 2);
    let jz: Vec<StateVector> = z.iter().map(|v| &j * v).collect();
    bilinear(lambda, y, &jz)
}

/// `sum_ij lambda_ij y_i^T S y_j`; for a quadratic Hamiltonian `y^T S y / 2`
/// this is the window analogue of the energy.
pub fn window_energy_form(lambda: &DMatrix<f64>, s: &DMatrix<f64>, y: &[StateVector]) -> f64 {
    let sy: Vec<StateVector> = y.iter().map(|v| s * v).collect();
    bilinear(lambda, y, &sy)
}

fn bilinear(lambda: &DMatrix<f64>, y: &[StateVector], w: &[StateVector]) -> f64 {
    let mut acc = 0.0;
    for (i, yi) in y.iter().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            if lambda[(i, j)] != 0.0 {
                acc += lambda[(i, j)] * yi.dot(wj);
            }
        }
    }
    acc
}

/// Largest residual of the defining relation of `m` with `h -> -h` on the
/// reversed trajectory. Symmetric methods give round-off only.
pub fn reversibility_residual(
    m: &MethodSpec,
    field: &dyn HamiltonianField,
    traj: &Trajectory,
) -> Result<f64, GeometryError> {
    reversed_windows(m.k(), traj, |w| method_residual(m, field, w, -traj.h))
}

/// As [`reversibility_residual`], for methods and partitioned pairs.
pub fn scheme_reversibility_residual(
    scheme: &Scheme,
    field: &dyn HamiltonianField,
    traj: &Trajectory,
) -> Result<f64, GeometryError> {
    match scheme {
        Scheme::Method(m) => reversibility_residual(m, field, traj),
        Scheme::Partitioned(pair) => {
            reversed_windows(pair.k(), traj, |w| partitioned_residual(pair, field, w, -traj.h))
        }
        Scheme::PredictorCorrector(_) => Err(GeometryError::NoScalarRecurrence(scheme.name())),
    }
}

fn reversed_windows(
    k: usize,
    traj: &Trajectory,
    residual: impl Fn(&[StateVector]) -> f64,
) -> Result<f64, GeometryError> {
    if traj.len() < k + 1 {
        return Err(GeometryError::TooShort {
            found: traj.len(),
            needed: k + 1,
        });
    }
    let reversed: Vec<StateVector> = traj.states.iter().rev().cloned().collect();
    Ok(reversed.windows(k + 1).map(residual).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EnergyDrift {
    /// `max_j |H_j - H_0|`
    pub max_deviation: f64,
    /// least-squares slope of `H_j` against `t_j`
    pub slope: f64,
}

/// Streaming version of [`energy_drift`]; O(1) memory.
#[derive(Debug, Clone, Default)]
pub struct DriftAccumulator {
    count: u64,
    initial: Option<f64>,
    max_deviation: f64,
    mean_t: f64,
    mean_h: f64,
    var_t: f64,
    cov_th: f64,
}

impl DriftAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: f64, energy: f64) {
        let h0 = *self.initial.get_or_insert(energy);
        let dev = (energy - h0).abs();
        // NaN compares false, so keep it explicitly
        if dev > self.max_deviation || dev.is_nan() {
            self.max_deviation = dev;
        }
        self.count += 1;
        let n = self.count as f64;
        let dt = t - self.mean_t;
        self.mean_t += dt / n;
        self.mean_h += (energy - self.mean_h) / n;
        self.var_t += dt * (t - self.mean_t);
        self.cov_th += dt * (energy - self.mean_h);
    }

    pub fn initial(&self) -> Option<f64> {
        self.initial
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(&self) -> EnergyDrift {
        EnergyDrift {
            max_deviation: self.max_deviation,
            slope: if self.var_t > 0.0 { self.cov_th / self.var_t } else { 0.0 },
        }
    }
}

pub fn energy_drift(traj: &Trajectory) -> EnergyDrift {
    let mut acc = DriftAccumulator::new();
    for (j, e) in traj.energies.iter().enumerate() {
        acc.push(traj.time(j), *e);
    }
    acc.finish()
}
