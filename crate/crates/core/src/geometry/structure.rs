use nalgebra::DMatrix;
use serde::Serialize;

use crate::linalg::kron;
use crate::methods::MethodSpec;
use crate::scheme::Scheme;
use crate::systems::{structure_matrix, LinearHamiltonian, StateVector};

use super::invariants::lambda_f64;
use super::transfer::transfer_matrix;
use super::GeometryError;

/// Relative defects at or below this count as "preserved".
pub const PRESERVED_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StructureDefectReport {
    /// `|M^T K M - K|_F / |K|_F`
    pub defect: f64,
    /// `| |det M| - 1 |`
    pub area_defect: f64,
    /// which skew form `K` was used
    pub structure: String,
}

impl StructureDefectReport {
    pub fn to_text(&self) -> String {
        format!(
            "structure: {}\ndefect: {:e}\nareaDefect: {:e}\n",
            self.structure, self.defect, self.area_defect
        )
    }
}

pub fn symplecticity_defect(m: &DMatrix<f64>, k: &DMatrix<f64>) -> f64 {
    (m.transpose() * k * m - k).norm() / k.norm()
}

pub fn area_defect_matrix(m: &DMatrix<f64>) -> f64 {
    (m.determinant().abs() - 1.0).abs()
}

/// Central-difference Jacobian with step `1e-6 (1 + |y|)`.
pub fn finite_difference_jacobian(
    map: impl Fn(&StateVector) -> StateVector,
    y: &StateVector,
) -> Result<DMatrix<f64>, GeometryError> {
    let eps = 1e-6 * (1.0 + y.norm());
    let d = y.len();
    let mut jac = DMatrix::<f64>::zeros(map(y).len(), d);
    for i in 0..d {
        let mut plus = y.clone();
        let mut minus = y.clone();
        plus[i] += eps;
        minus[i] -= eps;
        // divide by the representable step so exact maps stay exact
        let col = (map(&plus) - map(&minus)) / (plus[i] - minus[i]);
        jac.set_column(i, &col);
    }
    if jac.iter().any(|x| !x.is_finite()) {
        return Err(GeometryError::NonFiniteJacobian);
    }
    Ok(jac)
}

/// `| |det Dmap(y)| - 1 |` with a finite-difference Jacobian.
pub fn area_defect_map(map: impl Fn(&StateVector) -> StateVector, y: &StateVector) -> Result<f64, GeometryError> {
    Ok(area_defect_matrix(&finite_difference_jacobian(map, y)?))
}

/// Transfer-map defect against `Lambda (x) J`.
pub fn g_symplecticity_defect(
    m: &MethodSpec,
    sys: &LinearHamiltonian,
    h: f64,
) -> Result<StructureDefectReport, GeometryError> {
    let lambda = lambda_f64(m);
    if lambda.iter().all(|x| *x == 0.0) {
        return Err(GeometryError::LambdaZero(m.name().to_string()));
    }
    let t = transfer_matrix(&Scheme::Method(m.clone()), sys, h)?;
    let k = kron(&lambda, &structure_matrix(sys.degrees_of_freedom()));
    Ok(StructureDefectReport {
        defect: symplecticity_defect(&t.matrix, &k),
        area_defect: area_defect_matrix(&t.matrix),
        structure: "Lambda (x) J".into(),
    })
}

/// Transfer-map defect against the canonical form `I_k (x) J`.
pub fn canonical_defect(scheme: &Scheme, sys: &LinearHamiltonian, h: f64) -> Result<StructureDefectReport, GeometryError> {
    let t = transfer_matrix(scheme, sys, h)?;
    let k = kron(
        &DMatrix::identity(t.k, t.k),
        &structure_matrix(sys.degrees_of_freedom()),
    );
    Ok(StructureDefectReport {
        defect: symplecticity_defect(&t.matrix, &k),
        area_defect: area_defect_matrix(&t.matrix),
        structure: "I (x) J".into(),
    })
}
