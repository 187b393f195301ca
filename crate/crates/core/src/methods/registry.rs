//! Built-in methods.
//!
//! `m1-as-printed` and `m3-line2-as-printed` reproduce published coefficient
//! tables verbatim even though they fail the consistency conditions; the
//! `-corrected` entries are consistent variants.

use std::path::Path;

use crate::scheme::{PcMode, PredictorCorrector, Scheme};

use super::parse::parse_method;
use super::spec::{MethodError, MethodKind, MethodSpec};

/// Registry names in sorted order.
pub const BUILTIN_NAMES: [&str; 12] = [
    "ab4",
    "am4",
    "explicit-euler",
    "implicit-euler",
    "leapfrog",
    "m1-as-printed",
    "m1-corrected",
    "m3-line1",
    "m3-line2-as-printed",
    "m3b-corrected",
    "midpoint",
    "pc-m2",
];

fn lmm(name: &str, alpha: &str, beta: &str) -> MethodSpec {
    MethodSpec::from_strs(name, MethodKind::Lmm, alpha, beta).expect("valid built-in method")
}

/// Single-method built-ins; `None` for composite schemes and unknown names.
pub fn builtin_method(name: &str) -> Option<MethodSpec> {
    Some(match name {
        "explicit-euler" => lmm(name, "-1 1", "1 0"),
        "implicit-euler" => lmm(name, "-1 1", "0 1"),
        "midpoint" => MethodSpec::from_strs(name, MethodKind::OneLeg, "-1 1", "1/2 1/2")
            .expect("valid built-in method"),
        "leapfrog" => lmm(name, "-1 0 1", "0 2 0"),
        "m1-as-printed" => lmm(name, "-1 1 -1 1", "0 1/2 1/2 0"),
        "m1-corrected" => lmm(name, "-1 1 -1 1", "0 1 1 0"),
        "ab4" => lmm(name, "0 0 0 -1 1", "-9/24 37/24 -59/24 55/24 0"),
        "am4" => lmm(name, "0 0 0 -1 1", "0 1/24 -5/24 19/24 9/24"),
        "m3-line1" => lmm(name, "-1 1 -1 1", "0 1 1 0"),
        "m3-line2-as-printed" => lmm(name, "0 -1 0 1", "0 2 2 0"),
        "m3b-corrected" => lmm(name, "0 -1 0 1", "0 0 2 0"),
        _ => return None,
    })
}

pub fn builtin(name: &str) -> Option<Scheme> {
    if name == "pc-m2" {
        return Some(Scheme::PredictorCorrector(pc_m2(PcMode::Pece)));
    }
    builtin_method(name).map(Scheme::Method)
}

/// Adams–Bashforth 4 predicting for the Adams–Moulton corrector.
pub fn pc_m2(mode: PcMode) -> PredictorCorrector {
    PredictorCorrector::new(
        "pc-m2",
        builtin_method("ab4").expect("ab4"),
        builtin_method("am4").expect("am4"),
        mode,
    )
    .expect("explicit predictor")
}

pub fn builtin_schemes() -> Vec<Scheme> {
    BUILTIN_NAMES
        .iter()
        .map(|n| builtin(n).expect("registered"))
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum ResolveError {
    #[error("unknown method `{0}` (not a built-in name or a readable file)")]
    Unknown(String),
    #[error("`{0}` is a composite scheme, not a single method")]
    Composite(String),
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: MethodError,
    },
}

/// A built-in name, or else a path to a method file.
pub fn resolve_method(name_or_path: &str) -> Result<MethodSpec, ResolveError> {
    if let Some(m) = builtin_method(name_or_path) {
        return Ok(m);
    }
    if BUILTIN_NAMES.contains(&name_or_path) {
        return Err(ResolveError::Composite(name_or_path.to_string()));
    }
    let path = Path::new(name_or_path);
    let text = std::fs::read_to_string(path).map_err(|_| ResolveError::Unknown(name_or_path.to_string()))?;
    parse_method(&text).map_err(|source| ResolveError::Parse {
        path: name_or_path.to_string(),
        source,
    })
}

/// Like [`resolve_method`] but also accepts composite built-ins.
pub fn resolve_scheme(name_or_path: &str) -> Result<Scheme, ResolveError> {
    match builtin(name_or_path) {
        Some(s) => Ok(s),
        None => resolve_method(name_or_path).map(Scheme::Method),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_sorted_and_resolvable() {
        let mut sorted = BUILTIN_NAMES.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, BUILTIN_NAMES.to_vec());
        for n in BUILTIN_NAMES {
            assert_eq!(builtin(n).unwrap().name(), n);
        }
        assert!(builtin("nosuch").is_none());
    }

    #[test]
    fn resolution() {
        assert_eq!(resolve_scheme("pc-m2").unwrap().k(), 4);
        assert!(matches!(resolve_method("pc-m2"), Err(ResolveError::Composite(_))));
        assert!(matches!(resolve_method("nosuch"), Err(ResolveError::Unknown(_))));
        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, b"name: mine\nk: 1\nalpha: -1 1\nbeta: 1 0\n").unwrap();
        let m = resolve_method(f.path().to_str().unwrap()).unwrap();
        assert_eq!(m.name(), "mine");
    }
}
