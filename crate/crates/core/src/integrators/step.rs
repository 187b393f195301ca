use nalgebra::{DMatrix, DVector};

use crate::methods::{MethodKind, MethodSpec};
use crate::rational::Rational;
use crate::scheme::{PartitionedPair, PcMode, PredictorCorrector};
use crate::systems::{HamiltonianField, StateVector};

use super::{IntegrateError, SolverConfig};

/// Floating-point copy of a method's coefficients.
#[derive(Debug, Clone)]
pub(crate) struct Coeffs {
    pub kind: MethodKind,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Option<Vec<Vec<f64>>>,
    /// `b'_l = sum_j beta_j gamma_jl` (equal to beta without gamma)
    pub effective_beta: Vec<f64>,
}

impl Coeffs {
    pub fn of(m: &MethodSpec) -> Self {
        Coeffs {
            kind: m.kind(),
            alpha: m.alpha_f64(),
            beta: m.beta_f64(),
            gamma: m.gamma_f64(),
            effective_beta: m.effective_beta_f64(),
        }
    }

    pub fn k(&self) -> usize {
        self.alpha.len() - 1
    }
}

pub(crate) fn check_window(
    field: &dyn HamiltonianField,
    window: &[StateVector],
    k: usize,
) -> Result<(), IntegrateError> {
    if window.len() != k {
        return Err(IntegrateError::WindowLength {
            expected: k,
            found: window.len(),
        });
    }
    let d = field.dimension();
    if let Some(y) = window.iter().find(|y| y.len() != d) {
        return Err(IntegrateError::DimensionMismatch {
            expected: d,
            found: y.len(),
        });
    }
    Ok(())
}

/// `sum_j c_j v_j` over the first `vs.len()` coefficients.
fn combo<'a>(coeffs: &[f64], vs: impl IntoIterator<Item = &'a StateVector>, dim: usize) -> StateVector {
    let mut out = DVector::zeros(dim);
    for (c, v) in coeffs.iter().zip(vs) {
        if *c != 0.0 {
            out.axpy(*c, v, 1.0);
        }
    }
    out
}

fn evaluate_all(field: &dyn HamiltonianField, window: &[StateVector]) -> Vec<StateVector> {
    window.iter().map(|y| field.evaluate(y)).collect()
}

/// Solves `(alpha_k I - h beta_k A) y = rhs` directly.
pub fn solve_linear_implicit(
    a: &DMatrix<f64>,
    alpha_k: f64,
    beta_k: f64,
    h: f64,
    rhs: &StateVector,
) -> Result<StateVector, IntegrateError> {
    let d = a.nrows();
    let lead = DMatrix::<f64>::identity(d, d) * alpha_k - a * (h * beta_k);
    let singular = || IntegrateError::Singular {
        h,
        ratio: alpha_k / (h * beta_k),
    };
    let y = lead.lu().solve(rhs).ok_or_else(singular)?;
    if y.iter().any(|x| !x.is_finite()) {
        return Err(singular());
    }
    Ok(y)
}

/// Damped fixed-point iteration `y <- y + damping (phi(y) - y)` until the
/// update norm is at most `tolerance (1 + |y|)`.
pub fn implicit_solve(
    phi: impl Fn(&StateVector) -> StateVector,
    guess: &StateVector,
    cfg: &SolverConfig,
) -> Result<StateVector, IntegrateError> {
    let mut y = guess.clone();
    let mut first_update = None;
    for iteration in 1..=cfg.max_iterations {
        let target = phi(&y);
        let next = &y + (target - &y) * cfg.damping;
        let update = (&next - &y).norm();
        if !update.is_finite() {
            return Err(IntegrateError::Diverged { iteration, update });
        }
        y = next;
        if update <= cfg.tolerance * (1.0 + y.norm()) {
            return Ok(y);
        }
        let first = *first_update.get_or_insert(update);
        if update > 1e8 * first.max(f64::MIN_POSITIVE) {
            return Err(IntegrateError::Diverged { iteration, update });
        }
    }
    let update = (phi(&y) - &y).norm() * cfg.damping;
    Err(IntegrateError::NotConverged {
        iterations: cfg.max_iterations,
        update,
    })
}

/// Multistep step with precomputed derivatives `derivs[j] = f(window[j])`.
pub(crate) fn lmm_step_with(
    c: &Coeffs,
    field: &dyn HamiltonianField,
    window: &[StateVector],
    derivs: &[StateVector],
    h: f64,
    cfg: &SolverConfig,
) -> Result<StateVector, IntegrateError> {
    let k = c.k();
    let d = field.dimension();
    let (alpha, beta) = (&c.alpha, &c.effective_beta);
    let mut rhs = combo(&beta[..k], derivs, d) * h;
    rhs -= combo(&alpha[..k], window, d);
    let (ak, bk) = (alpha[k], beta[k]);
    if bk == 0.0 {
        return Ok(rhs / ak);
    }
    if let Some(sys) = field.as_linear() {
        return solve_linear_implicit(sys.system_matrix(), ak, bk, h, &rhs);
    }
    let guess = window.last().expect("k >= 1").clone();
    implicit_solve(|y| (&rhs + field.evaluate(y) * (h * bk)) / ak, &guess, cfg)
}

/// `sum_j alpha_j y_{n+j} = h sum_j beta_j f(y_{n+j})`, solved for `y_{n+k}`.
pub fn lmm_step(
    m: &MethodSpec,
    field: &dyn HamiltonianField,
    window: &[StateVector],
    h: f64,
    cfg: &SolverConfig,
) -> Result<StateVector, IntegrateError> {
    check_window(field, window, m.k())?;
    let mut c = Coeffs::of(m);
    c.effective_beta = c.beta.clone();
    lmm_step_with(&c, field, window, &evaluate_all(field, window), h, cfg)
}

pub(crate) fn oneleg_step_with(
    c: &Coeffs,
    field: &dyn HamiltonianField,
    window: &[StateVector],
    h: f64,
    cfg: &SolverConfig,
) -> Result<StateVector, IntegrateError> {
    let k = c.k();
    let d = field.dimension();
    let known_alpha = combo(&c.alpha[..k], window, d);
    let known_beta = combo(&c.beta[..k], window, d);
    let (ak, bk) = (c.alpha[k], c.beta[k]);
    if bk == 0.0 {
        return Ok((field.evaluate(&known_beta) * h - known_alpha) / ak);
    }
    if let Some(sys) = field.as_linear() {
        let rhs = sys.system_matrix() * &known_beta * h - &known_alpha;
        return solve_linear_implicit(sys.system_matrix(), ak, bk, h, &rhs);
    }
    let guess = window.last().expect("k >= 1").clone();
    // one field evaluation per iterate
    implicit_solve(
        |y| (field.evaluate(&(&known_beta + y * bk)) * h - &known_alpha) / ak,
        &guess,
        cfg,
    )
}

/// `sum_j alpha_j y_{n+j} = h f(sum_j beta_j y_{n+j})` with `sigma(1) = 1`.
pub fn oneleg_step(
    m: &MethodSpec,
    field: &dyn HamiltonianField,
    window: &[StateVector],
    h: f64,
    cfg: &SolverConfig,
) -> Result<StateVector, IntegrateError> {
    check_window(field, window, m.k())?;
    let s1 = m.sigma_at_one();
    if s1 != Rational::one() {
        return Err(IntegrateError::Normalization(s1));
    }
    oneleg_step_with(&Coeffs::of(m), field, window, h, cfg)
}

pub(crate) fn generalized_step_with(
    c: &Coeffs,
    field: &dyn HamiltonianField,
    window: &[StateVector],
    h: f64,
    cfg: &SolverConfig,
) -> Result<StateVector, IntegrateError> {
    let gamma = c.gamma.as_ref().ok_or(IntegrateError::MissingGamma)?;
    let k = c.k();
    let d = field.dimension();
    let known_alpha = combo(&c.alpha[..k], window, d);
    let ak = c.alpha[k];
    // known parts of each evaluation argument
    let args: Vec<StateVector> = gamma.iter().map(|row| combo(&row[..k], window, d)).collect();
    let implicit = (0..=k).any(|j| c.beta[j] != 0.0 && gamma[j][k] != 0.0);
    let rhs_at = |y: Option<&StateVector>| {
        let mut acc = DVector::zeros(d);
        for j in 0..=k {
            if c.beta[j] == 0.0 {
                continue;
            }
            let f = match y {
                Some(y) if gamma[j][k] != 0.0 => field.evaluate(&(&args[j] + y * gamma[j][k])),
                _ => field.evaluate(&args[j]),
            };
            acc.axpy(c.beta[j], &f, 1.0);
        }
        acc * h
    };
    if !implicit {
        return Ok((rhs_at(None) - known_alpha) / ak);
    }
    if let Some(sys) = field.as_linear() {
        let b = &c.effective_beta;
        let rhs = sys.system_matrix() * combo(&b[..k], window, d) * h - &known_alpha;
        return solve_linear_implicit(sys.system_matrix(), ak, b[k], h, &rhs);
    }
    let guess = window.last().expect("k >= 1").clone();
    implicit_solve(|y| (rhs_at(Some(y)) - &known_alpha) / ak, &guess, cfg)
}

/// `sum_j alpha_j y_j = h sum_j beta_j f(sum_l gamma_jl y_l)`, solved for `y_k`.
pub fn generalized_step(
    m: &MethodSpec,
    field: &dyn HamiltonianField,
    window: &[StateVector],
    h: f64,
    cfg: &SolverConfig,
) -> Result<StateVector, IntegrateError> {
    check_window(field, window, m.k())?;
    generalized_step_with(&Coeffs::of(m), field, window, h, cfg)
}

/// Dispatches on the method kind.
pub fn method_step(
    m: &MethodSpec,
    field: &dyn HamiltonianField,
    window: &[StateVector],
    h: f64,
    cfg: &SolverConfig,
) -> Result<StateVector, IntegrateError> {
    match m.kind() {
        MethodKind::Lmm => lmm_step(m, field, window, h, cfg),
        MethodKind::OneLeg => oneleg_step(m, field, window, h, cfg),
        MethodKind::Generalized => generalized_step(m, field, window, h, cfg),
    }
}

pub(crate) struct PcCoeffs {
    pub predictor: Coeffs,
    pub corrector: Coeffs,
    pub mode: PcMode,
}

impl PcCoeffs {
    pub fn of(pc: &PredictorCorrector) -> Self {
        PcCoeffs {
            predictor: Coeffs::of(&pc.predictor),
            corrector: Coeffs::of(&pc.corrector),
            mode: pc.mode,
        }
    }
}

/// Returns the new state and the derivative value to store for it.
pub(crate) fn pc_step_with(
    c: &PcCoeffs,
    field: &dyn HamiltonianField,
    window: &[StateVector],
    derivs: &[StateVector],
    h: f64,
) -> (StateVector, StateVector) {
    let (p, q) = (&c.predictor, &c.corrector);
    let k = p.k();
    let d = field.dimension();
    let predicted = (combo(&p.beta[..k], derivs, d) * h - combo(&p.alpha[..k], window, d)) / p.alpha[k];
    let f_pred = field.evaluate(&predicted);
    let mut rhs = combo(&q.beta[..k], derivs, d);
    rhs.axpy(q.beta[k], &f_pred, 1.0);
    let corrected = (rhs * h - combo(&q.alpha[..k], window, d)) / q.alpha[k];
    let stored = match c.mode {
        PcMode::Pece => field.evaluate(&corrected),
        PcMode::Pec => f_pred,
    };
    (corrected, stored)
}

/// One predictor-corrector step in PECE mode (window derivatives are
/// evaluated from the window states).
pub fn pc_step(
    pc: &PredictorCorrector,
    field: &dyn HamiltonianField,
    window: &[StateVector],
    h: f64,
) -> Result<StateVector, IntegrateError> {
    check_window(field, window, pc.k())?;
    let mut c = PcCoeffs::of(pc);
    c.mode = PcMode::Pece;
    let (y, _) = pc_step_with(&c, field, window, &evaluate_all(field, window), h);
    if y.iter().any(|x| !x.is_finite()) {
        return Err(IntegrateError::NonFinite { index: pc.k() });
    }
    Ok(y)
}

pub(crate) struct PairCoeffs {
    pub q: Coeffs,
    pub p: Coeffs,
}

impl PairCoeffs {
    pub fn of(pair: &PartitionedPair) -> Self {
        PairCoeffs {
            q: Coeffs::of(pair.method_q()),
            p: Coeffs::of(pair.method_p()),
        }
    }
}

pub(crate) fn partitioned_step_with(
    c: &PairCoeffs,
    field: &dyn HamiltonianField,
    window: &[StateVector],
    derivs: &[StateVector],
    h: f64,
) -> StateVector {
    let d = field.dimension();
    let n = d / 2;
    let k = c.q.k();
    let mut out = DVector::zeros(d);
    for (range, m) in [(0..n, &c.q), (n..d, &c.p)] {
        for i in range {
            let mut acc = 0.0;
            for j in 0..k {
                acc += h * m.beta[j] * derivs[j][i] - m.alpha[j] * window[j][i];
            }
            out[i] = acc / m.alpha[k];
        }
    }
    out
}

/// Position components follow `method_q` driven by `dH/dp`, momentum
/// components follow `method_p` driven by `-dH/dq`.
pub fn partitioned_step(
    pair: &PartitionedPair,
    field: &dyn HamiltonianField,
    window: &[StateVector],
    h: f64,
) -> Result<StateVector, IntegrateError> {
    check_window(field, window, pair.k())?;
    let y = partitioned_step_with(&PairCoeffs::of(pair), field, window, &evaluate_all(field, window), h);
    if y.iter().any(|x| !x.is_finite()) {
        return Err(IntegrateError::NonFinite { index: pair.k() });
    }
    Ok(y)
}

fn check_states(m_k: usize, states: &[StateVector]) {
    assert_eq!(states.len(), m_k + 1, "residual needs k+1 states");
}

/// `|sum alpha_j y_j - h sum beta_j f(y_j)|` over `k+1` states.
pub fn lmm_residual(m: &MethodSpec, field: &dyn HamiltonianField, states: &[StateVector], h: f64) -> f64 {
    check_states(m.k(), states);
    let d = field.dimension();
    let lhs = combo(&m.alpha_f64(), states, d);
    let rhs = combo(&m.beta_f64(), &evaluate_all(field, states), d) * h;
    (lhs - rhs).norm()
}

/// `|sum alpha_j y_j - h f(sum beta_j y_j)|`.
pub fn oneleg_residual(m: &MethodSpec, field: &dyn HamiltonianField, states: &[StateVector], h: f64) -> f64 {
    check_states(m.k(), states);
    let d = field.dimension();
    let lhs = combo(&m.alpha_f64(), states, d);
    let rhs = field.evaluate(&combo(&m.beta_f64(), states, d)) * h;
    (lhs - rhs).norm()
}

/// `|sum alpha_j y_j - h sum beta_j f(sum_l gamma_jl y_l)|`.
pub fn generalized_residual(
    m: &MethodSpec,
    field: &dyn HamiltonianField,
    states: &[StateVector],
    h: f64,
) -> Option<f64> {
    check_states(m.k(), states);
    let gamma = m.gamma_f64()?;
    let d = field.dimension();
    let lhs = combo(&m.alpha_f64(), states, d);
    let mut rhs = DVector::zeros(d);
    for (b, row) in m.beta_f64().iter().zip(&gamma) {
        if *b != 0.0 {
            rhs.axpy(*b, &field.evaluate(&combo(row, states, d)), 1.0);
        }
    }
    Some((lhs - rhs * h).norm())
}

/// Residual of the defining relation of `m` according to its kind.
pub fn method_residual(m: &MethodSpec, field: &dyn HamiltonianField, states: &[StateVector], h: f64) -> f64 {
    match m.kind() {
        MethodKind::Lmm => lmm_residual(m, field, states, h),
        MethodKind::OneLeg => oneleg_residual(m, field, states, h),
        MethodKind::Generalized => {
            generalized_residual(m, field, states, h).expect("generalized methods carry gamma")
        }
    }
}

/// Stacked residual of the two partitioned relations.
pub fn partitioned_residual(
    pair: &PartitionedPair,
    field: &dyn HamiltonianField,
    states: &[StateVector],
    h: f64,
) -> f64 {
    check_states(pair.k(), states);
    let d = field.dimension();
    let n = d / 2;
    let derivs = evaluate_all(field, states);
    let mut sq = 0.0;
    for (range, m) in [(0..n, pair.method_q()), (n..d, pair.method_p())] {
        let (a, b) = (m.alpha_f64(), m.beta_f64());
        for i in range {
            let r: f64 = (0..=pair.k())
                .map(|j| a[j] * states[j][i] - h * b[j] * derivs[j][i])
                .sum();
            sq += r * r;
        }
    }
    sq.sqrt()
}
