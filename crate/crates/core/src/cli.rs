//! The `geostep` command line.
//!
//! Exit codes: 0 on success, 1 on usage or input errors (and aborted runs),
//! 2 when a command completed but reported warnings or failing checks.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::experiments::{
    builtin_scenarios, figure_scenarios, run_scenarios, Outputs, RunOptions, Scenario, SchemeChoice, SystemChoice,
};
use crate::geometry::{
    g_symplecticity_defect, reversibility_residual, scheme_reversibility_residual, step_transition, transfer_matrix,
    GeometryError,
};
use crate::integrators::{integrate, SolverConfig, Starter};
use crate::methods::{analyze, is_symmetric, order_analysis, resolve_scheme, BUILTIN_NAMES};
use crate::scheme::{PcMode, Scheme};
use crate::systems::{sho, state_from_pq, GradientField, HamiltonianField, LinearHamiltonian};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_WARNINGS: i32 = 2;

/// Default tolerance of `verify`, overridden by `GEOSTEP_TOL` or `--tol`.
pub const DEFAULT_VERIFY_TOLERANCE: f64 = 1e-10;
pub const TOLERANCE_ENV: &str = "GEOSTEP_TOL";

#[derive(Debug, Parser)]
#[command(name = "geostep", version, about = "Analyze and run multistep integrators for Hamiltonian systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact order, symmetry, root-condition and Lambda analysis of a method
    Analyze(AnalyzeArgs),
    /// Integrate one scheme and write phase, energy and error CSVs
    Integrate(IntegrateArgs),
    /// Numerical structure checks as CSV rows
    Verify(VerifyArgs),
    /// Reproduce a figure or run a scenario file
    Experiment(ExperimentArgs),
    /// List built-in methods (or scenarios)
    List(ListArgs),
}

#[derive(Debug, Args)]
struct SchemeArgs {
    /// built-in name, method file, or `first+second` for a partitioned pair
    #[arg(long)]
    method: String,
    /// let the second method of a pair drive the q-equation
    #[arg(long)]
    swap_partition: bool,
    /// run a predictor-corrector pair in PEC instead of PECE mode
    #[arg(long)]
    pec: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// built-in name or method file; composite schemes report each method
    #[arg(long)]
    method: String,
    /// print JSON instead of `key: value` lines
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct IntegrateArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, default_value = "sho")]
    system: String,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    /// grid points including the initial value
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    p0: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    q0: f64,
    #[arg(long, default_value = "rk4")]
    starter: String,
    /// output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// write every n-th row
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Order,
    Symmetry,
    GSymplectic,
    Area,
    Reversibility,
    StepTransition,
}

impl Check {
    fn name(self) -> &'static str {
        match self {
            Check::Order => "order",
            Check::Symmetry => "symmetry",
            Check::GSymplectic => "g-symplectic",
            Check::Area => "area",
            Check::Reversibility => "reversibility",
            Check::StepTransition => "step-transition",
        }
    }

    fn needs_linear(self) -> bool {
        matches!(self, Check::GSymplectic | Check::Area | Check::StepTransition)
    }
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// checks to run (repeatable)
    #[arg(long, value_enum, required = true)]
    check: Vec<Check>,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, default_value = "sho")]
    system: String,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    /// pass threshold for numerical checks
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// figure number 1-4
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    figure: Option<u32>,
    /// scenario definition file
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// override the number of grid points
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value = "results")]
    outdir: PathBuf,
}

#[derive(Debug, Args)]
struct ListArgs {
    /// list built-in scenarios instead of methods
    #[arg(long)]
    scenarios: bool,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run(args: impl IntoIterator<Item = OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(&a, out),
        Command::Integrate(a) => cmd_integrate(&a, out, err),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, out, err),
        Command::List(a) => cmd_list(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn scheme_choice(a: &SchemeArgs) -> Result<SchemeChoice, Failure> {
    if let Some((first, second)) = a.method.split_once('+') {
        if a.pec {
            return Err(Failure("--pec applies to predictor-corrector schemes only".into()));
        }
        return Ok(SchemeChoice::Partitioned {
            first: first.to_string(),
            second: second.to_string(),
            swap: a.swap_partition,
        });
    }
    if a.swap_partition {
        return Err(Failure("--swap-partition needs a `first+second` pair".into()));
    }
    if a.pec {
        return match resolve_scheme(&a.method)? {
            Scheme::PredictorCorrector(pc) => Ok(SchemeChoice::PredictorCorrector {
                predictor: pc.predictor.name().to_string(),
                corrector: pc.corrector.name().to_string(),
                mode: PcMode::Pec,
            }),
            _ => Err(Failure("--pec applies to predictor-corrector schemes only".into())),
        };
    }
    Ok(SchemeChoice::Single(a.method.clone()))
}

fn system_choice(name: &str) -> Result<SystemChoice, Failure> {
    SystemChoice::parse(name).ok_or_else(|| Failure(format!("unknown system `{name}` (expected sho or pendulum)")))
}

fn check_step(h: f64) -> Result<(), Failure> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Failure(format!("--h must be positive and finite, got {h}")))
    }
}

fn cmd_list(a: &ListArgs, out: &mut dyn Write) -> CmdResult {
    if a.scenarios {
        for s in builtin_scenarios() {
            writeln!(out, "{}", s.name)?;
        }
    } else {
        for n in BUILTIN_NAMES {
            writeln!(out, "{n}")?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> CmdResult {
    let scheme = resolve_scheme(&a.method)?;
    let reports: Vec<_> = scheme.methods().into_iter().map(analyze).collect();
    if a.json {
        let value = if reports.len() == 1 {
            serde_json::to_string_pretty(&reports[0])?
        } else {
            serde_json::to_string_pretty(&reports)?
        };
        writeln!(out, "{value}")?;
    } else {
        for (i, r) in reports.iter().enumerate() {
            if i > 0 {
                writeln!(out)?;
            }
            write!(out, "{}", r.to_text())?;
        }
    }
    let warned = reports.iter().any(|r| !r.warnings.is_empty());
    Ok(if warned { EXIT_WARNINGS } else { EXIT_OK })
}

fn cmd_integrate(a: &IntegrateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    check_step(a.h)?;
    let choice = scheme_choice(&a.scheme)?;
    let scheme = choice.build()?;
    let starter = Starter::parse(&a.starter)
        .ok_or_else(|| Failure(format!("unknown starter `{}` (expected rk4 or exact)", a.starter)))?;
    let scenario = Scenario {
        name: scheme.name().replace(['/', '+'], "_"),
        scheme: choice,
        system: system_choice(&a.system)?,
        omega: a.omega,
        h: a.h,
        steps: a.steps,
        p0: a.p0,
        q0: a.q0,
        starter,
        outputs: Outputs::ALL,
        stride: a.stride,
    };
    let opts = RunOptions {
        outdir: Some(a.out.clone()),
        ..RunOptions::default()
    };
    let summary = crate::experiments::run_scenario(&scenario, &opts)?;
    let final_error = summary.final_error.map_or("n/a".to_string(), |e| format!("{e:e}"));
    writeln!(
        out,
        "{}: states={} finalEnergyDeviation={:e} finalError={}",
        scenario.name,
        summary.states,
        summary.final_energy - summary.initial_energy,
        final_error
    )?;
    for w in &summary.warnings {
        writeln!(err, "warning: {w}")?;
    }
    if let Some(abort) = &summary.aborted {
        writeln!(err, "error: aborted at step {}: {}", abort.step, abort.message)?;
        return Ok(EXIT_USAGE);
    }
    Ok(if summary.warnings.is_empty() { EXIT_OK } else { EXIT_WARNINGS })
}

fn verify_tolerance(flag: Option<f64>) -> Result<f64, Failure> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var(TOLERANCE_ENV) {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|t| *t > 0.0)
            .ok_or_else(|| Failure(format!("{TOLERANCE_ENV} must be a positive decimal, got `{v}`"))),
        Err(_) => Ok(DEFAULT_VERIFY_TOLERANCE),
    }
}

struct Row {
    method: String,
    check: Check,
    value: f64,
    threshold: f64,
    pass: bool,
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    check_step(a.h)?;
    let tol = verify_tolerance(a.tol)?;
    let scheme = scheme_choice(&a.scheme)?.build()?;
    let system = system_choice(&a.system)?;
    let linear = match system {
        SystemChoice::Sho => Some(sho(a.omega)?),
        SystemChoice::Pendulum => None,
    };
    let pendulum = GradientField::pendulum();
    let field: &dyn HamiltonianField = match &linear {
        Some(sys) => sys,
        None => &pendulum,
    };

    let mut rows = Vec::new();
    for &check in &a.check {
        let sys = match (&linear, check.needs_linear()) {
            (None, true) => {
                return Err(Failure(format!(
                    "check `{}` needs a linear system (use --system sho)",
                    check.name()
                )))
            }
            (l, _) => l.as_ref(),
        };
        verify_one(check, &scheme, field, sys, a.h, tol, &mut rows)?;
    }
    rows.sort_by(|x, y| x.method.cmp(&y.method));

    writeln!(out, "method,system,omega,h,check,value,threshold,pass")?;
    for r in &rows {
        writeln!(
            out,
            "{},{},{},{},{},{:e},{:e},{}",
            r.method,
            system.as_str(),
            a.omega,
            a.h,
            r.check.name(),
            r.value,
            r.threshold,
            r.pass
        )?;
    }
    Ok(if rows.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_WARNINGS })
}

fn verify_one(
    check: Check,
    scheme: &Scheme,
    field: &dyn HamiltonianField,
    sys: Option<&LinearHamiltonian>,
    h: f64,
    tol: f64,
    rows: &mut Vec<Row>,
) -> Result<(), Failure> {
    let mut push = |method: String, value: f64, threshold: f64, pass: bool| {
        rows.push(Row {
            method,
            check,
            value,
            threshold,
            pass,
        })
    };
    let invalid = |what: &str| Failure(format!("check `{}` is not defined for {what}", check.name()));
    match check {
        Check::Order => {
            for m in scheme.methods() {
                let c = order_analysis(m);
                push(m.name().to_string(), c.order as f64, 1.0, c.consistent);
            }
        }
        Check::Symmetry => {
            for m in scheme.methods() {
                let s = is_symmetric(m);
                push(m.name().to_string(), if s { 1.0 } else { 0.0 }, 1.0, s);
            }
        }
        Check::GSymplectic => {
            let m = scheme.as_method().ok_or_else(|| invalid("composite schemes"))?;
            let r = g_symplecticity_defect(m, sys.expect("linear"), h).map_err(|e| match e {
                GeometryError::LambdaZero(_) => invalid("methods with a vanishing Lambda matrix"),
                other => Failure(other.to_string()),
            })?;
            push(scheme.name(), r.defect, tol, r.defect <= tol);
        }
        Check::Area => {
            let t = transfer_matrix(scheme, sys.expect("linear"), h)?;
            let d = crate::geometry::area_defect_matrix(&t.matrix);
            push(scheme.name(), d, tol, d <= tol);
        }
        Check::StepTransition => {
            let st = step_transition(scheme, sys.expect("linear"), h)?;
            push(scheme.name(), st.residual, tol, st.residual <= tol);
        }
        Check::Reversibility => {
            if matches!(scheme, Scheme::PredictorCorrector(_)) {
                return Err(invalid("predictor-corrector schemes"));
            }
            let cfg = SolverConfig::default().with_starter(if sys.is_some() { Starter::Exact } else { Starter::Rk4 });
            let y0 = state_from_pq(0.0, 1.0);
            let traj = integrate(scheme, field, &y0, h, 101, &cfg)?;
            let r = match scheme.as_method() {
                Some(m) => reversibility_residual(m, field, &traj)?,
                None => scheme_reversibility_residual(scheme, field, &traj)?,
            };
            push(scheme.name(), r, tol, r <= tol);
        }
    }
    Ok(())
}

fn cmd_experiment(a: &ExperimentArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let mut list = match (a.figure, &a.scenario) {
        (Some(f), _) => figure_scenarios(f).ok_or_else(|| Failure(format!("no figure {f} (expected 1-4)")))?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            vec![Scenario::parse(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))?]
        }
        (None, None) => return Err(Failure("give --figure or --scenario".into())),
    };
    if let Some(steps) = a.steps {
        list = list.into_iter().map(|s| s.with_steps(steps)).collect();
    }
    for s in &list {
        s.validate()?;
    }
    let opts = RunOptions {
        outdir: Some(a.outdir.clone()),
        ..RunOptions::default()
    };
    let mut code = EXIT_OK;
    for (s, result) in list.iter().zip(run_scenarios(&list, &opts)) {
        let summary = match result {
            Ok(x) => x,
            Err(e) => {
                writeln!(err, "error: {}: {e}", s.name)?;
                code = EXIT_USAGE;
                continue;
            }
        };
        let behavior = summary.classify(&opts.thresholds);
        writeln!(
            out,
            "{}: {} maxDeviation={:e} slope={:e} finalError={} radiusDeviation={:e} explosionStep={}",
            s.name,
            behavior.as_str(),
            summary.drift.max_deviation,
            summary.drift.slope,
            summary.final_error.map_or("n/a".to_string(), |e| format!("{e:e}")),
            summary.radius_deviation,
            summary.explosion_step.map_or("none".to_string(), |j| j.to_string()),
        )?;
        for w in &summary.warnings {
            writeln!(out, "  warning: {w}")?;
        }
        if let Some(abort) = &summary.aborted {
            writeln!(err, "error: {}: aborted at step {}: {}", s.name, abort.step, abort.message)?;
            code = EXIT_USAGE;
        } else if !summary.warnings.is_empty() && code == EXIT_OK {
            code = EXIT_WARNINGS;
        }
    }
    Ok(code)
}
