use std::fmt::{self, Write as _};

use crate::integrators::Starter;
use crate::methods::{resolve_method, resolve_scheme, ResolveError};
use crate::scheme::{PartitionedPair, PcMode, PredictorCorrector, Scheme, SchemeError};
use crate::textdoc::{entries, Entry};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemeChoice {
    /// built-in name or method file
    Single(String),
    Partitioned { first: String, second: String, swap: bool },
    PredictorCorrector { predictor: String, corrector: String, mode: PcMode },
}

impl SchemeChoice {
    pub fn build(&self) -> Result<Scheme, ScenarioError> {
        Ok(match self {
            SchemeChoice::Single(name) => resolve_scheme(name)?,
            SchemeChoice::Partitioned { first, second, swap } => Scheme::Partitioned(PartitionedPair::new(
                resolve_method(first)?,
                resolve_method(second)?,
                *swap,
            )?),
            SchemeChoice::PredictorCorrector {
                predictor,
                corrector,
                mode,
            } => Scheme::PredictorCorrector(PredictorCorrector::new(
                format!("{predictor}/{corrector}"),
                resolve_method(predictor)?,
                resolve_method(corrector)?,
                *mode,
            )?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemChoice {
    Sho,
    Pendulum,
}

impl SystemChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            SystemChoice::Sho => "sho",
            SystemChoice::Pendulum => "pendulum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sho" => Some(SystemChoice::Sho),
            "pendulum" => Some(SystemChoice::Pendulum),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outputs {
    pub phase: bool,
    pub energy: bool,
    pub error: bool,
}

impl Outputs {
    pub const ALL: Outputs = Outputs {
        phase: true,
        energy: true,
        error: true,
    };
    pub const NONE: Outputs = Outputs {
        phase: false,
        energy: false,
        error: false,
    };

    fn parse(s: &str) -> Option<Self> {
        let mut out = Outputs::NONE;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "phase" => out.phase = true,
                "energy" => out.energy = true,
                "error" => out.error = true,
                "none" => {}
                _ => return None,
            }
        }
        Some(out)
    }
}

impl fmt::Display for Outputs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [(self.phase, "phase"), (self.energy, "energy"), (self.error, "error")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| *n)
            .collect();
        if names.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&names.join(","))
        }
    }
}

/// One reproducible run: scheme, system, grid, initial value and outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub scheme: SchemeChoice,
    pub system: SystemChoice,
    pub omega: f64,
    pub h: f64,
    /// number of grid points `t_0..t_{steps-1}`
    pub steps: usize,
    pub p0: f64,
    pub q0: f64,
    pub starter: Starter,
    pub outputs: Outputs,
    /// write every `stride`-th row (the last row is always written)
    pub stride: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("conflicting scheme fields: {0}")]
    SchemeFields(String),
    #[error("h must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("omega must be positive and finite, got {0}")]
    BadOmega(f64),
    #[error("steps = {steps} is below the step count {k}")]
    TooFewSteps { steps: usize, k: usize },
    #[error("stride must be at least 1")]
    BadStride,
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

impl Scenario {
    /// Parses the `key: value` scenario format; see [`Scenario::to_document`].
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut fields: Vec<(usize, &str, &str)> = Vec::new();
        for e in entries(text) {
            match e {
                Entry::Field { line, key, value } => {
                    if fields.iter().any(|(_, k, _)| *k == key) {
                        return Err(ScenarioError::Syntax {
                            line,
                            message: format!("duplicate field `{key}`"),
                        });
                    }
                    fields.push((line, key, value));
                }
                Entry::Row { line, text } => {
                    return Err(ScenarioError::Syntax {
                        line,
                        message: format!("expected `key: value`, found `{text}`"),
                    })
                }
            }
        }
        const KNOWN: [&str; 17] = [
            "scenario",
            "method",
            "method-q",
            "method-p",
            "swap-partition",
            "predictor",
            "corrector",
            "pc-mode",
            "system",
            "omega",
            "h",
            "steps",
            "p0",
            "q0",
            "starter",
            "outputs",
            "stride",
        ];
        if let Some((line, key, _)) = fields.iter().find(|(_, k, _)| !KNOWN.contains(k)) {
            return Err(ScenarioError::Syntax {
                line: *line,
                message: format!("unknown field `{key}`"),
            });
        }
        let get = |key: &str| fields.iter().find(|(_, k, _)| *k == key).map(|(l, _, v)| (*l, *v));
        fn bad(line: usize, key: &str, value: &str) -> ScenarioError {
            ScenarioError::Syntax {
                line,
                message: format!("invalid {key} `{value}`"),
            }
        }
        let num = |key: &'static str, default: Option<f64>| -> Result<f64, ScenarioError> {
            match get(key) {
                Some((l, v)) => v.parse::<f64>().map_err(|_| bad(l, key, v)),
                None => default.ok_or(ScenarioError::MissingField(key)),
            }
        };
        let name = get("scenario").ok_or(ScenarioError::MissingField("scenario"))?.1.to_string();
        let present = |keys: &[&str]| keys.iter().any(|k| get(k).is_some());
        let families = [
            present(&["method"]),
            present(&["method-q", "method-p", "swap-partition"]),
            present(&["predictor", "corrector", "pc-mode"]),
        ];
        if families.iter().filter(|f| **f).count() != 1 {
            return Err(ScenarioError::SchemeFields(
                "give exactly one of `method`, `method-q`+`method-p`, `predictor`+`corrector`".into(),
            ));
        }
        let need = |key: &'static str| get(key).map(|(_, v)| v.to_string()).ok_or(ScenarioError::MissingField(key));
        let scheme = if families[0] {
            SchemeChoice::Single(need("method")?)
        } else if families[1] {
            let swap = match get("swap-partition") {
                None => false,
                Some((l, v)) => v.parse::<bool>().map_err(|_| bad(l, "swap-partition", v))?,
            };
            SchemeChoice::Partitioned {
                first: need("method-q")?,
                second: need("method-p")?,
                swap,
            }
        } else {
            let mode = match get("pc-mode") {
                None => PcMode::Pece,
                Some((l, v)) => PcMode::parse(v).ok_or_else(|| bad(l, "pc-mode", v))?,
            };
            SchemeChoice::PredictorCorrector {
                predictor: need("predictor")?,
                corrector: need("corrector")?,
                mode,
            }
        };
        let system = match get("system") {
            None => SystemChoice::Sho,
            Some((l, v)) => SystemChoice::parse(v).ok_or_else(|| bad(l, "system", v))?,
        };
        let steps = match get("steps") {
            None => return Err(ScenarioError::MissingField("steps")),
            Some((l, v)) => v.parse::<usize>().map_err(|_| bad(l, "steps", v))?,
        };
        let starter = match get("starter") {
            None => Starter::Rk4,
            Some((l, v)) => Starter::parse(v).ok_or_else(|| bad(l, "starter", v))?,
        };
        let outputs = match get("outputs") {
            None => Outputs::ALL,
            Some((l, v)) => Outputs::parse(v).ok_or_else(|| bad(l, "outputs", v))?,
        };
        let stride = match get("stride") {
            None => 1,
            Some((l, v)) => v.parse::<usize>().map_err(|_| bad(l, "stride", v))?,
        };
        let s = Scenario {
            name,
            scheme,
            system,
            omega: num("omega", Some(1.0))?,
            h: num("h", None)?,
            steps,
            p0: num("p0", Some(0.0))?,
            q0: num("q0", Some(1.0))?,
            starter,
            outputs,
            stride,
        };
        s.validate_fields()?;
        Ok(s)
    }

    fn validate_fields(&self) -> Result<(), ScenarioError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(ScenarioError::BadStep(self.h));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(ScenarioError::BadOmega(self.omega));
        }
        if self.stride == 0 {
            return Err(ScenarioError::BadStride);
        }
        Ok(())
    }

    /// Checks the fields and resolves the scheme.
    pub fn validate(&self) -> Result<Scheme, ScenarioError> {
        self.validate_fields()?;
        let scheme = self.scheme.build()?;
        if self.steps < scheme.k() {
            return Err(ScenarioError::TooFewSteps {
                steps: self.steps,
                k: scheme.k(),
            });
        }
        Ok(scheme)
    }

    pub fn to_document(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario: {}", self.name);
        match &self.scheme {
            SchemeChoice::Single(m) => {
                let _ = writeln!(out, "method: {m}");
            }
            SchemeChoice::Partitioned { first, second, swap } => {
                let _ = writeln!(out, "method-q: {first}\nmethod-p: {second}\nswap-partition: {swap}");
            }
            SchemeChoice::PredictorCorrector {
                predictor,
                corrector,
                mode,
            } => {
                let _ = writeln!(
                    out,
                    "predictor: {predictor}\ncorrector: {corrector}\npc-mode: {}",
                    mode.as_str()
                );
            }
        }
        let _ = write!(
            out,
            "system: {}\nomega: {}\nh: {}\nsteps: {}\np0: {}\nq0: {}\nstarter: {}\noutputs: {}\nstride: {}\n",
            self.system.as_str(),
            self.omega,
            self.h,
            self.steps,
            self.p0,
            self.q0,
            self.starter.as_str(),
            self.outputs,
            self.stride
        );
        out
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }
}

const LONG_RUN: usize = 1_000_000;

fn figure(name: &str, scheme: SchemeChoice, steps: usize, stride: usize) -> Scenario {
    Scenario {
        name: name.to_string(),
        scheme,
        system: SystemChoice::Sho,
        omega: 1.0,
        h: 0.1,
        steps,
        p0: 0.0,
        q0: 1.0,
        starter: Starter::Rk4,
        outputs: Outputs::ALL,
        stride,
    }
}

fn pair(first: &str, second: &str) -> SchemeChoice {
    SchemeChoice::Partitioned {
        first: first.into(),
        second: second.into(),
        swap: false,
    }
}

/// The figure scenarios in figure order.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let single = |m: &str| SchemeChoice::Single(m.to_string());
    vec![
        figure("fig1-explicit-euler", single("explicit-euler"), 1000, 1),
        figure("fig1-implicit-euler", single("implicit-euler"), 1000, 1),
        figure("fig2-m1", single("m1-as-printed"), LONG_RUN, 1000),
        figure("fig2-m1-corrected", single("m1-corrected"), LONG_RUN, 1000),
        figure(
            "fig3-pc",
            SchemeChoice::PredictorCorrector {
                predictor: "ab4".into(),
                corrector: "am4".into(),
                mode: PcMode::Pece,
            },
            LONG_RUN,
            1000,
        ),
        figure("fig4-partitioned", pair("m3-line1", "m3-line2-as-printed"), LONG_RUN, 1000),
        figure("fig4-partitioned-corrected", pair("m3-line1", "m3b-corrected"), LONG_RUN, 1000),
    ]
}

pub fn builtin_scenario(name: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

/// Scenarios reproducing one figure (1 to 4).
pub fn figure_scenarios(figure: u32) -> Option<Vec<Scenario>> {
    let prefix = format!("fig{figure}-");
    let v: Vec<Scenario> = builtin_scenarios()
        .into_iter()
        .filter(|s| s.name.starts_with(&prefix))
        .collect();
    (!v.is_empty()).then_some(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::state_from_pq;

    #[test]
    fn builtins_round_trip_and_validate() {
        for s in builtin_scenarios() {
            let doc = s.to_document();
            assert_eq!(Scenario::parse(&doc).unwrap(), s, "{doc}");
            assert!(s.validate().is_ok(), "{}", s.name);
            assert_eq!(s.h, 0.1);
            assert_eq!((s.p0, s.q0), (0.0, 1.0));
        }
    }

    #[test]
    fn figure_one_initial_value_mapping() {
        let s = builtin_scenario("fig1-explicit-euler").unwrap();
        assert_eq!(state_from_pq(s.p0, s.q0).as_slice(), &[1.0, 0.0]);
        assert_eq!(builtin_scenario("fig4-partitioned").unwrap().steps, 1_000_000);
    }

    #[test]
    fn figure_lookup() {
        assert_eq!(figure_scenarios(4).unwrap().len(), 2);
        assert_eq!(figure_scenarios(1).unwrap().len(), 2);
        assert!(figure_scenarios(9).is_none());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Scenario::parse("method: leapfrog\nh: 0.1\nsteps: 5\n"), Err(ScenarioError::MissingField("scenario"))));
        let both = "scenario: x\nmethod: leapfrog\nmethod-q: ab4\nmethod-p: ab4\nh: 0.1\nsteps: 5\n";
        assert!(matches!(Scenario::parse(both), Err(ScenarioError::SchemeFields(_))));
        assert!(matches!(
            Scenario::parse("scenario: x\nmethod: leapfrog\nh: 0\nsteps: 5\n"),
            Err(ScenarioError::BadStep(_))
        ));
        assert!(matches!(
            Scenario::parse("scenario: x\nmethod: leapfrog\nh: 0.1\nsteps: 5\ncolour: red\n"),
            Err(ScenarioError::Syntax { line: 5, .. })
        ));
        let few = Scenario::parse("scenario: x\nmethod: ab4\nh: 0.1\nsteps: 3\n").unwrap();
        assert!(matches!(few.validate(), Err(ScenarioError::TooFewSteps { steps: 3, k: 4 })));
    }
}
