use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::geometry::{DriftAccumulator, EnergyDrift};
use crate::integrators::{IntegrateError, Propagator, SolverConfig};
use crate::methods::analyze;
use crate::scheme::Scheme;
use crate::systems::{sho, state_from_pq, GradientField, HamiltonianField, LinearHamiltonian, StateVector};

use super::scenario::{Scenario, ScenarioError, SystemChoice};

/// Long-run runs must cover at least this many grid points.
pub const MIN_LONG_RUN_STEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Thresholds {
    /// bounded if `max |H - H0| <= bounded_fraction * H0`
    pub bounded_fraction: f64,
    /// exploding once `H > explode_factor * H0`
    pub explode_factor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            bounded_fraction: 0.01,
            explode_factor: 1e3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Behavior {
    Bounded,
    Drifting,
    Exploding,
}

impl Behavior {
    pub fn as_str(self) -> &'static str {
        match self {
            Behavior::Bounded => "bounded",
            Behavior::Drifting => "drifting",
            Behavior::Exploding => "exploding",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// directory for the CSV files; `None` runs without writing
    pub outdir: Option<PathBuf>,
    /// stop at the first state whose energy crosses the explosion threshold
    pub stop_on_explosion: bool,
    pub thresholds: Thresholds,
    /// solver settings; the scenario's starter takes precedence
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Abort {
    pub step: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunSummary {
    pub scenario: String,
    pub scheme: String,
    /// grid points actually computed
    pub states: usize,
    pub t_final: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub drift: EnergyDrift,
    pub final_error: Option<f64>,
    pub max_error: Option<f64>,
    /// `max_j | |y_j|^2 - |y_0|^2 |`
    pub radius_deviation: f64,
    /// first grid index with `H > explode_factor * H0`
    pub explosion_step: Option<usize>,
    pub aborted: Option<Abort>,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn classify(&self, t: &Thresholds) -> Behavior {
        if self.explosion_step.is_some() || self.aborted.is_some() || !self.drift.max_deviation.is_finite() {
            return Behavior::Exploding;
        }
        let limit = t.bounded_fraction * self.initial_energy.abs();
        if self.drift.max_deviation <= limit && self.drift.slope.abs() * self.t_final <= limit {
            Behavior::Bounded
        } else {
            Behavior::Drifting
        }
    }

    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:e}"));
        let mut s = format!(
            "scenario: {}\nscheme: {}\nstates: {}\ntFinal: {}\ninitialEnergy: {:e}\nfinalEnergy: {:e}\nmaxDeviation: {:e}\nslope: {:e}\nfinalError: {}\nmaxError: {}\nradiusDeviation: {:e}\nexplosionStep: {}\n",
            self.scenario,
            self.scheme,
            self.states,
            self.t_final,
            self.initial_energy,
            self.final_energy,
            self.drift.max_deviation,
            self.drift.slope,
            opt(self.final_error),
            opt(self.max_error),
            self.radius_deviation,
            self.explosion_step.map_or("none".to_string(), |j| j.to_string()),
        );
        if let Some(a) = &self.aborted {
            s.push_str(&format!("aborted: step {}: {}\n", a.step, a.message));
        }
        for w in &self.warnings {
            s.push_str(&format!("warning: {w}\n"));
        }
        s
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("could not start: {0}")]
    Start(#[from] IntegrateError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("long runs need at least {MIN_LONG_RUN_STEPS} steps, got {0}")]
    TooShort(usize),
}

enum Field {
    Linear(LinearHamiltonian),
    Nonlinear(GradientField),
}

impl Field {
    fn build(s: &Scenario) -> Result<Field, ScenarioError> {
        Ok(match s.system {
            SystemChoice::Sho => Field::Linear(sho(s.omega).map_err(|_| ScenarioError::BadOmega(s.omega))?),
            SystemChoice::Pendulum => Field::Nonlinear(GradientField::pendulum()),
        })
    }

    fn as_dyn(&self) -> &dyn HamiltonianField {
        match self {
            Field::Linear(f) => f,
            Field::Nonlinear(f) => f,
        }
    }
}

struct CsvSink {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvSink {
    fn create(dir: &Path, name: &str, kind: &str, header: &str) -> Result<Self, ExperimentError> {
        let path = dir.join(format!("{name}.{kind}.csv"));
        let io = |source| ExperimentError::Io {
            path: path.clone(),
            source,
        };
        let mut out = BufWriter::new(File::create(&path).map_err(io)?);
        writeln!(out, "{header}").map_err(io)?;
        Ok(CsvSink { path, out })
    }

    fn row(&mut self, values: impl IntoIterator<Item = String>) -> Result<(), ExperimentError> {
        let line = values.into_iter().collect::<Vec<_>>().join(",");
        writeln!(self.out, "{line}").map_err(|source| ExperimentError::Io {
            path: self.path.clone(),
            source,
        })
    }

    fn finish(mut self, trailer: Option<&str>) -> Result<PathBuf, ExperimentError> {
        let io = |source| ExperimentError::Io {
            path: self.path.clone(),
            source,
        };
        if let Some(t) = trailer {
            writeln!(self.out, "{t}").map_err(io)?;
        }
        self.out.flush().map_err(io)?;
        Ok(self.path)
    }
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn component_names(n: usize) -> Vec<String> {
    if n == 1 {
        return vec!["q".into(), "p".into()];
    }
    (1..=n)
        .map(|i| format!("q{i}"))
        .chain((1..=n).map(|i| format!("p{i}")))
        .collect()
}

fn scheme_warnings(scheme: &Scheme) -> Vec<String> {
    let mut out = Vec::new();
    for m in scheme.methods() {
        for w in analyze(m).warnings {
            let line = format!("{}: {w}", m.name());
            if !out.contains(&line) {
                out.push(line);
            }
        }
    }
    out
}

/// Runs a scenario, streaming rows to the requested CSV files. Stepper
/// failures end the run early: the summary records the failing step and the
/// files end with an `# aborted at step N` line.
pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<RunSummary, ExperimentError> {
    let scheme = s.validate()?;
    let field_owner = Field::build(s)?;
    let field = field_owner.as_dyn();
    let exact = match &field_owner {
        Field::Linear(sys) => Some(sys),
        Field::Nonlinear(_) => None,
    };
    let y0 = state_from_pq(s.p0, s.q0);
    let cfg = opts.solver.with_starter(s.starter);
    let mut prop = Propagator::new(&scheme, field, &y0, s.h, cfg)?;

    let mut phase = None;
    let mut energy = None;
    let mut error = None;
    if let Some(dir) = &opts.outdir {
        std::fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
            path: dir.clone(),
            source,
        })?;
        if s.outputs.phase {
            let header = ["step", "t"]
                .iter()
                .map(|x| x.to_string())
                .chain(component_names(field.dimension() / 2))
                .collect::<Vec<_>>()
                .join(",");
            phase = Some(CsvSink::create(dir, &s.name, "phase", &header)?);
        }
        if s.outputs.energy {
            energy = Some(CsvSink::create(dir, &s.name, "energy", "step,t,H,H-H0")?);
        }
        if s.outputs.error && exact.is_some() {
            error = Some(CsvSink::create(dir, &s.name, "error", "step,t,err")?);
        }
    }

    let h0 = field.hamiltonian(&y0);
    let r0 = y0.norm_squared();
    let explode_at = opts.thresholds.explode_factor * h0.abs();
    let mut drift = DriftAccumulator::new();
    let mut radius_deviation: f64 = 0.0;
    let mut max_error: Option<f64> = None;
    let mut final_error = None;
    let mut final_energy = h0;
    let mut explosion_step = None;
    let mut aborted = None;
    let mut computed = 0;
    let last = s.steps - 1;

    let mut pending: Vec<StateVector> = prop.starter_states().to_vec();
    pending.reverse();
    for j in 0..s.steps {
        let y = match pending.pop() {
            Some(y) => y,
            None => match prop.step() {
                Ok(y) => y,
                Err(e) => {
                    aborted = Some(Abort {
                        step: e.failing_index().unwrap_or(j),
                        message: e.to_string(),
                    });
                    break;
                }
            },
        };
        computed += 1;
        let t = j as f64 * s.h;
        let en = field.hamiltonian(&y);
        drift.push(t, en);
        final_energy = en;
        radius_deviation = radius_deviation.max((y.norm_squared() - r0).abs());
        let err = exact.map(|sys| (&y - sys.exact_state(&y0, t)).norm());
        if let Some(e) = err {
            max_error = Some(max_error.map_or(e, |m: f64| m.max(e)));
            final_error = Some(e);
        }
        if j % s.stride == 0 || j == last {
            if let Some(w) = phase.as_mut() {
                w.row([j.to_string(), real(t)].into_iter().chain(y.iter().map(|x| real(*x))))?;
            }
            if let Some(w) = energy.as_mut() {
                w.row([j.to_string(), real(t), real(en), real(en - h0)])?;
            }
            if let (Some(w), Some(e)) = (error.as_mut(), err) {
                w.row([j.to_string(), real(t), real(e)])?;
            }
        }
        if explosion_step.is_none() && !(en <= explode_at) {
            explosion_step = Some(j);
            if opts.stop_on_explosion {
                break;
            }
        }
    }

    let trailer = aborted.as_ref().map(|a| format!("# aborted at step {}", a.step));
    let mut files = Vec::new();
    for sink in [phase, energy, error].into_iter().flatten() {
        files.push(sink.finish(trailer.as_deref())?);
    }
    Ok(RunSummary {
        scenario: s.name.clone(),
        scheme: scheme.name(),
        states: computed,
        t_final: computed.saturating_sub(1) as f64 * s.h,
        initial_energy: h0,
        final_energy,
        drift: drift.finish(),
        final_error,
        max_error,
        radius_deviation,
        explosion_step,
        aborted,
        warnings: scheme_warnings(&scheme),
        files,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LongRunReport {
    pub behavior: Behavior,
    pub thresholds: Thresholds,
    pub summary: RunSummary,
}

/// Runs without file output, stopping early once the energy explodes, and
/// classifies the energy behaviour.
pub fn long_run_report(s: &Scenario, thresholds: Thresholds) -> Result<LongRunReport, ExperimentError> {
    if s.steps < MIN_LONG_RUN_STEPS {
        return Err(ExperimentError::TooShort(s.steps));
    }
    let opts = RunOptions {
        outdir: None,
        stop_on_explosion: true,
        thresholds,
        solver: SolverConfig::default(),
    };
    let summary = run_scenario(s, &opts)?;
    Ok(LongRunReport {
        behavior: summary.classify(&thresholds),
        thresholds,
        summary,
    })
}

/// Runs independent scenarios on separate threads; results keep the input
/// order.
pub fn run_scenarios(list: &[Scenario], opts: &RunOptions) -> Vec<Result<RunSummary, ExperimentError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = list
            .iter()
            .map(|s| scope.spawn(move || run_scenario(s, opts)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::builtin_scenario;

    fn read(path: &Path) -> Vec<String> {
        std::fs::read_to_string(path).unwrap().lines().map(String::from).collect()
    }

    #[test]
    fn explicit_euler_energy_column() {
        let dir = tempfile::tempdir().unwrap();
        let s = builtin_scenario("fig1-explicit-euler").unwrap();
        let opts = RunOptions {
            outdir: Some(dir.path().to_path_buf()),
            ..RunOptions::default()
        };
        let summary = run_scenario(&s, &opts).unwrap();
        assert_eq!(summary.files.len(), 3);
        let rows = read(&dir.path().join("fig1-explicit-euler.energy.csv"));
        assert_eq!(rows[0], "step,t,H,H-H0");
        assert_eq!(rows.len(), 1 + 1000);
        for (j, row) in rows[1..].iter().enumerate() {
            let h: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
            let expected = 0.5 * 1.01f64.powi(j as i32);
            assert!((h / expected - 1.0).abs() < 1e-9, "row {j}");
        }
        let phase = read(&dir.path().join("fig1-explicit-euler.phase.csv"));
        assert_eq!(phase[0], "step,t,q,p");
        assert!(phase.iter().all(|r| r.split(',').count() == 4));
    }

    #[test]
    fn boundary_run_has_only_starter_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = builtin_scenario("fig3-pc").unwrap().with_steps(4);
        s.stride = 1;
        let opts = RunOptions {
            outdir: Some(dir.path().to_path_buf()),
            ..RunOptions::default()
        };
        let summary = run_scenario(&s, &opts).unwrap();
        assert_eq!(summary.states, 4);
        assert_eq!(read(&dir.path().join("fig3-pc.energy.csv")).len(), 5);
    }

    #[test]
    fn implicit_euler_monotone() {
        let s = builtin_scenario("fig1-implicit-euler").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            outdir: Some(dir.path().to_path_buf()),
            ..RunOptions::default()
        };
        run_scenario(&s, &opts).unwrap();
        let h: Vec<f64> = read(&dir.path().join("fig1-implicit-euler.energy.csv"))[1..]
            .iter()
            .map(|r| r.split(',').nth(2).unwrap().parse().unwrap())
            .collect();
        assert!(h.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn explicit_euler_explodes_near_687() {
        let s = builtin_scenario("fig1-explicit-euler").unwrap().with_steps(10_000);
        let r = long_run_report(&s, Thresholds::default()).unwrap();
        assert_eq!(r.behavior, Behavior::Exploding);
        // (1 + h^2)^j = 1e3 at j = ln(1e3) / ln(1.01) = 694.2
        assert_eq!(r.summary.explosion_step, Some(695));
        assert!(matches!(
            long_run_report(&s.with_steps(100), Thresholds::default()),
            Err(ExperimentError::TooShort(100))
        ));
    }

    #[test]
    fn inconsistent_method_warns() {
        let s = builtin_scenario("fig2-m1").unwrap().with_steps(10);
        let summary = run_scenario(&s, &RunOptions::default()).unwrap();
        assert!(summary.warnings.iter().any(|w| w.contains("inconsistent")), "{:?}", summary.warnings);
    }

    #[test]
    fn concurrent_runs_keep_order() {
        let list: Vec<Scenario> = ["fig1-implicit-euler", "fig1-explicit-euler"]
            .iter()
            .map(|n| builtin_scenario(n).unwrap().with_steps(50))
            .collect();
        let out = run_scenarios(&list, &RunOptions::default());
        assert_eq!(out[0].as_ref().unwrap().scenario, "fig1-implicit-euler");
        assert_eq!(out[1].as_ref().unwrap().scenario, "fig1-explicit-euler");
    }
}
