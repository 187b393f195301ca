use std::collections::VecDeque;

use crate::methods::MethodKind;
use crate::rational::Rational;
use crate::scheme::{PcMode, Scheme};
use crate::systems::{HamiltonianField, StateVector};

use super::start::starting_states;
use super::step::{
    check_window, generalized_step_with, lmm_step_with, oneleg_step_with, partitioned_step_with, pc_step_with,
    Coeffs, PairCoeffs, PcCoeffs,
};
use super::{IntegrateError, SolverConfig};

enum Engine {
    Method(Coeffs),
    Pc(PcCoeffs),
    Pair(PairCoeffs),
}

impl Engine {
    fn needs_derivatives(&self) -> bool {
        match self {
            Engine::Method(c) => c.kind == MethodKind::Lmm,
            _ => true,
        }
    }
}

/// Streams the states of a scheme one at a time, keeping only the last `k`
/// states (and their stored derivatives) in memory.
pub struct Propagator<'a> {
    engine: Engine,
    field: &'a dyn HamiltonianField,
    h: f64,
    cfg: SolverConfig,
    k: usize,
    start: Vec<StateVector>,
    window: VecDeque<StateVector>,
    derivs: VecDeque<StateVector>,
    next: usize,
}

impl<'a> Propagator<'a> {
    /// Validates the inputs and computes the `k` starting states.
    pub fn new(
        scheme: &Scheme,
        field: &'a dyn HamiltonianField,
        y0: &StateVector,
        h: f64,
        cfg: SolverConfig,
    ) -> Result<Self, IntegrateError> {
        if !h.is_finite() || h == 0.0 {
            return Err(IntegrateError::InvalidStep(h));
        }
        cfg.validate()?;
        if y0.len() != field.dimension() {
            return Err(IntegrateError::DimensionMismatch {
                expected: field.dimension(),
                found: y0.len(),
            });
        }
        let engine = match scheme {
            Scheme::Method(m) => {
                if m.kind() == MethodKind::OneLeg && m.sigma_at_one() != Rational::one() {
                    return Err(IntegrateError::Normalization(m.sigma_at_one()));
                }
                let mut c = Coeffs::of(m);
                if m.kind() == MethodKind::Lmm {
                    c.effective_beta = c.beta.clone();
                }
                Engine::Method(c)
            }
            Scheme::PredictorCorrector(pc) => Engine::Pc(PcCoeffs::of(pc)),
            Scheme::Partitioned(pair) => {
                if !field.dimension().is_multiple_of(2) {
                    return Err(IntegrateError::Unsupported(
                        "partitioned schemes need a (q, p) split state".into(),
                    ));
                }
                Engine::Pair(PairCoeffs::of(pair))
            }
        };
        let k = scheme.k();
        let start = starting_states(field, y0, h, k, &cfg)?;
        check_window(field, &start, k)?;
        let derivs = if engine.needs_derivatives() {
            start.iter().map(|y| field.evaluate(y)).collect()
        } else {
            VecDeque::new()
        };
        Ok(Propagator {
            engine,
            field,
            h,
            cfg,
            k,
            window: start.iter().cloned().collect(),
            start,
            derivs,
            next: k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn starter_states(&self) -> &[StateVector] {
        &self.start
    }

    /// Index of the state the next call to [`step`](Self::step) produces.
    pub fn next_index(&self) -> usize {
        self.next
    }

    pub fn window(&self) -> &VecDeque<StateVector> {
        &self.window
    }

    /// Computes the next state and slides the window.
    pub fn step(&mut self) -> Result<StateVector, IntegrateError> {
        let index = self.next;
        let window = self.window.make_contiguous();
        let derivs = self.derivs.make_contiguous();
        let (y, stored) = match &self.engine {
            Engine::Method(c) => {
                let y = match c.kind {
                    MethodKind::Lmm => lmm_step_with(c, self.field, window, derivs, self.h, &self.cfg),
                    MethodKind::OneLeg => oneleg_step_with(c, self.field, window, self.h, &self.cfg),
                    MethodKind::Generalized => generalized_step_with(c, self.field, window, self.h, &self.cfg),
                }
                .map_err(|e| IntegrateError::Aborted {
                    index,
                    source: Box::new(e),
                })?;
                (y, None)
            }
            Engine::Pc(c) => {
                let (y, f) = pc_step_with(c, self.field, window, derivs, self.h);
                (y, Some(f))
            }
            Engine::Pair(c) => (partitioned_step_with(c, self.field, window, derivs, self.h), None),
        };
        if y.iter().any(|x| !x.is_finite()) {
            return Err(IntegrateError::NonFinite { index });
        }
        if self.engine.needs_derivatives() {
            let f = stored.unwrap_or_else(|| self.field.evaluate(&y));
            self.derivs.pop_front();
            self.derivs.push_back(f);
        }
        self.window.pop_front();
        self.window.push_back(y.clone());
        self.next += 1;
        Ok(y)
    }

    /// PEC mode stores the predicted derivative, so its window is not a
    /// function of the states alone.
    pub fn carries_derivative_history(&self) -> bool {
        matches!(&self.engine, Engine::Pc(c) if c.mode == PcMode::Pec)
    }
}

/// States `y_0..y_N` on the grid `t_j = t0 + j h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub t0: f64,
    pub states: Vec<StateVector>,
    pub energies: Vec<f64>,
    /// `|y_j - y(t_j)|` when the exact flow is available
    pub errors: Option<Vec<f64>>,
    /// number of leading states produced by the starter
    pub start_count: usize,
}

impl Trajectory {
    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.h
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|j| self.time(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectories are nonempty")
    }
}

/// Runs `scheme` on the grid `t_0..t_{steps-1}`, returning `steps` states.
/// The first `k` come from the configured starter, so `steps = k` performs
/// no multistep step at all.
pub fn integrate(
    scheme: &Scheme,
    field: &dyn HamiltonianField,
    y0: &StateVector,
    h: f64,
    steps: usize,
    cfg: &SolverConfig,
) -> Result<Trajectory, IntegrateError> {
    let k = scheme.k();
    if steps < k {
        return Err(IntegrateError::TooFewSteps { steps, k });
    }
    let mut prop = Propagator::new(scheme, field, y0, h, *cfg)?;
    let mut states = prop.starter_states().to_vec();
    while states.len() < steps {
        states.push(prop.step()?);
    }
    let energies = states.iter().map(|y| field.hamiltonian(y)).collect();
    let errors = field.as_linear().map(|sys| {
        states
            .iter()
            .enumerate()
            .map(|(j, y)| (y - sys.exact_state(y0, j as f64 * h)).norm())
            .collect()
    });
    Ok(Trajectory {
        h,
        t0: 0.0,
        states,
        energies,
        errors,
        start_count: k,
    })
}
