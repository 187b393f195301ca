//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Complex, DMatrix, DVector, Schur};

pub type Complex64 = Complex<f64>;

/// Roots of `sum_j coeffs[j] x^j` with complex coefficients.
///
/// Leading zero coefficients are dropped. Roots are eigenvalues of the
/// companion matrix, refined by a few guarded Newton steps.
pub fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|z| z.norm() == 0.0) {
        c.pop();
    }
    if c.len() <= 1 {
        return Vec::new();
    }
    let deg = c.len() - 1;
    // exact zero roots from vanishing low-order coefficients
    let zeros = c.iter().take_while(|z| z.norm() == 0.0).count();
    let c = &c[zeros..];
    let n = c.len() - 1;
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    if n > 0 {
        let lead = c[n];
        let mut companion = DMatrix::<Complex64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..n {
            companion[(i, n - 1)] = -c[i] / lead;
        }
        let eig = Schur::new(companion)
            .eigenvalues()
            .expect("complex Schur form is triangular");
        roots.extend(eig.iter().map(|&z| polish_root(c, z)));
    }
    debug_assert_eq!(roots.len(), deg);
    roots
}

fn eval_with_derivative(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

fn polish_root(c: &[Complex64], mut z: Complex64) -> Complex64 {
    let (mut p, _) = eval_with_derivative(c, z);
    for _ in 0..3 {
        let (_, dp) = eval_with_derivative(c, z);
        if dp.norm() == 0.0 {
            break;
        }
        let candidate = z - p / dp;
        let (pc, _) = eval_with_derivative(c, candidate);
        if !(pc.norm() < p.norm()) {
            break;
        }
        z = candidate;
        p = pc;
    }
    z
}

/// Evaluates a real-coefficient polynomial at a complex point.
pub fn eval_real_poly(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Right singular vectors spanning the numerical null space of `m`, taking
/// exactly `dim` vectors with the smallest singular values. Returns the
/// vectors and the largest singular value among them.
pub fn null_space(m: &DMatrix<Complex64>, dim: usize) -> (Vec<DVector<Complex64>>, f64) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let mut worst: f64 = 0.0;
    let vectors = order
        .iter()
        .take(dim)
        .map(|&i| {
            worst = worst.max(svd.singular_values[i]);
            v_t.row(i).adjoint()
        })
        .collect();
    (vectors, worst)
}

/// 2-norm condition number from the singular values.
pub fn condition_number(m: &DMatrix<Complex64>) -> f64 {
    let s = m.clone().singular_values();
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}
