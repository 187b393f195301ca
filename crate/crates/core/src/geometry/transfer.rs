use nalgebra::DMatrix;

use crate::scheme::Scheme;
use crate::systems::{LinearHamiltonian, StateVector};

use super::GeometryError;

/// Block companion matrix mapping the window `(y_l, .., y_{l+k-1})` to
/// `(y_{l+1}, .., y_{l+k})`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub matrix: DMatrix<f64>,
    pub k: usize,
    /// state dimension `2n`
    pub dim: usize,
}

impl TransferMatrix {
    pub fn stack(window: &[StateVector]) -> StateVector {
        let d = window.first().map_or(0, |y| y.len());
        StateVector::from_iterator(window.len() * d, window.iter().flat_map(|y| y.iter().copied()))
    }

    /// Applies the map to a window of `k` states and returns the shifted window.
    pub fn apply(&self, window: &[StateVector]) -> Vec<StateVector> {
        let out = &self.matrix * Self::stack(window);
        (0..self.k)
            .map(|i| out.rows(i * self.dim, self.dim).into_owned())
            .collect()
    }
}

pub fn transfer_matrix(scheme: &Scheme, sys: &LinearHamiltonian, h: f64) -> Result<TransferMatrix, GeometryError> {
    let blocks = scheme.linear_blocks(sys.system_matrix(), h)?;
    let k = blocks.len() - 1;
    let d = sys.system_matrix().nrows();
    let lead = blocks[k].clone().lu();
    let mut m = DMatrix::<f64>::zeros(k * d, k * d);
    for i in 0..k.saturating_sub(1) {
        m.view_mut((i * d, (i + 1) * d), (d, d)).fill_with_identity();
    }
    for (j, c) in blocks[..k].iter().enumerate() {
        let x = lead.solve(c).ok_or(GeometryError::Singular { h })?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::Singular { h });
        }
        m.view_mut(((k - 1) * d, j * d), (d, d)).copy_from(&(-x));
    }
    Ok(TransferMatrix { matrix: m, k, dim: d })
}
