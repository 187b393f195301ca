//! Reading and writing method-definition documents.
//!
//! ```text
//! name: leapfrog
//! k: 2
//! alpha: -1 0 1
//! beta: 0 2 0
//! kind: lmm            # optional: lmm | one-leg | generalized
//! gamma:               # optional, followed by k+1 rows of k+1 rationals
//!   1 0 0
//!   0 1 0
//!   0 0 1
//! ```

use std::fmt::Write as _;

use crate::rational::Rational;
use crate::textdoc::{entries, Entry};

use super::spec::{MethodError, MethodKind, MethodSpec};

fn parse_row(line: usize, text: &str) -> Result<Vec<Rational>, MethodError> {
    text.split_whitespace()
        .map(|t| t.parse().map_err(|source| MethodError::Rational { line, source }))
        .collect()
}

pub fn parse_method(text: &str) -> Result<MethodSpec, MethodError> {
    let mut name: Option<String> = None;
    let mut k: Option<usize> = None;
    let mut alpha: Option<Vec<Rational>> = None;
    let mut beta: Option<Vec<Rational>> = None;
    let mut kind: Option<MethodKind> = None;
    let mut gamma: Option<Vec<Vec<Rational>>> = None;
    let mut in_gamma = false;

    fn set<T>(slot: &mut Option<T>, value: T, line: usize, key: &str) -> Result<(), MethodError> {
        if slot.is_some() {
            return Err(MethodError::DuplicateField {
                line,
                key: key.to_string(),
            });
        }
        *slot = Some(value);
        Ok(())
    }

    for entry in entries(text) {
        match entry {
            Entry::Row { line, text } => {
                if !in_gamma {
                    return Err(MethodError::MalformedLine {
                        line,
                        text: text.to_string(),
                    });
                }
                gamma
                    .as_mut()
                    .expect("gamma started")
                    .push(parse_row(line, text)?);
            }
            Entry::Field { line, key, value } => {
                in_gamma = false;
                match key {
                    "name" => {
                        if value.is_empty() || value.contains(char::is_whitespace) {
                            return Err(MethodError::MalformedLine {
                                line,
                                text: format!("name: {value}"),
                            });
                        }
                        set(&mut name, value.to_string(), line, key)?
                    }
                    "k" => {
                        let v = value
                            .parse::<usize>()
                            .ok()
                            .filter(|&v| v >= 1)
                            .ok_or_else(|| MethodError::BadStepCount(value.to_string()))?;
                        set(&mut k, v, line, key)?
                    }
                    "alpha" => set(&mut alpha, parse_row(line, value)?, line, key)?,
                    "beta" => set(&mut beta, parse_row(line, value)?, line, key)?,
                    "kind" => {
                        let v = MethodKind::parse(value)
                            .ok_or_else(|| MethodError::UnknownKind(value.to_string()))?;
                        set(&mut kind, v, line, key)?
                    }
                    "gamma" => {
                        let mut rows = Vec::new();
                        if !value.is_empty() {
                            rows.push(parse_row(line, value)?);
                        }
                        set(&mut gamma, rows, line, key)?;
                        in_gamma = true;
                    }
                    _ => {
                        return Err(MethodError::UnknownField {
                            line,
                            key: key.to_string(),
                        })
                    }
                }
            }
        }
    }

    let name = name.ok_or(MethodError::MissingField("name"))?;
    let k = k.ok_or(MethodError::MissingField("k"))?;
    let alpha = alpha.ok_or(MethodError::MissingField("alpha"))?;
    let beta = beta.ok_or(MethodError::MissingField("beta"))?;
    for (field, v) in [("alpha", &alpha), ("beta", &beta)] {
        if v.len() != k + 1 {
            return Err(MethodError::LengthMismatch {
                field,
                expected: k + 1,
                found: v.len(),
            });
        }
    }
    let kind = kind.unwrap_or(if gamma.is_some() {
        MethodKind::Generalized
    } else {
        MethodKind::Lmm
    });
    MethodSpec::new(name, kind, alpha, beta, gamma)
}

fn join(v: &[Rational]) -> String {
    v.iter().map(Rational::to_string).collect::<Vec<_>>().join(" ")
}

/// Serializes a method in the document format accepted by [`parse_method`].
pub fn method_document(m: &MethodSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name: {}", m.name());
    let _ = writeln!(out, "k: {}", m.k());
    let _ = writeln!(out, "alpha: {}", join(m.alpha()));
    let _ = writeln!(out, "beta: {}", join(m.beta()));
    let _ = writeln!(out, "kind: {}", m.kind());
    if let Some(g) = m.gamma() {
        out.push_str("gamma:\n");
        for row in g {
            let _ = writeln!(out, "  {}", join(row));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_leapfrog() {
        let m = parse_method("name: leapfrog\nk: 2\nalpha: -1 0 1\nbeta: 0 2 0\n").unwrap();
        assert_eq!(m.name(), "leapfrog");
        assert_eq!(m.k(), 2);
        assert_eq!(m.kind(), MethodKind::Lmm);
        assert_eq!(m.beta()[1], Rational::from_integer(2));
        assert!(m.warnings().is_empty());
    }

    #[test]
    fn beta_arity_mismatch() {
        let err = parse_method("name: bad\nk: 1\nalpha: -1 1\nbeta: 1/3 1/3 1/3\n").unwrap_err();
        assert_eq!(
            err,
            MethodError::LengthMismatch {
                field: "beta",
                expected: 2,
                found: 3
            }
        );
    }

    #[test]
    fn midpoint_one_leg() {
        let m = parse_method("name: midpoint\nk: 1\nalpha: -1 1\nbeta: 1/2 1/2\nkind: one-leg\n").unwrap();
        assert_eq!(m.kind(), MethodKind::OneLeg);
        assert_eq!(m.sigma_at_one(), Rational::one());
    }

    #[test]
    fn gamma_block() {
        let doc = "name: gmid\nk: 1\nalpha: -1 1\nbeta: 0 1\ngamma:\n 1 0\n 1/2 1/2\n";
        let m = parse_method(doc).unwrap();
        assert_eq!(m.kind(), MethodKind::Generalized);
        assert_eq!(m.gamma().unwrap()[1][0], Rational::new(1, 2));
        assert_eq!(parse_method(&method_document(&m)).unwrap(), m);
    }

    #[test]
    fn gamma_row_sum_checked() {
        let doc = "name: g\nk: 1\nalpha: -1 1\nbeta: 0 1\ngamma:\n 1 0\n 1/2 1/3\n";
        assert!(matches!(parse_method(doc), Err(MethodError::GammaRowSum { row: 1, .. })));
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            parse_method("name: x\nk: 1\nalpha: -1 1/0\nbeta: 1 0\n"),
            Err(MethodError::Rational { line: 3, .. })
        ));
        assert!(matches!(
            parse_method("name: x\nk: 1\nalpha: 1 0\nbeta: 1 0\n"),
            Err(MethodError::LeadingAlphaZero)
        ));
        assert!(matches!(
            parse_method("name: x\nk: 1\nalpha: -1 1\n"),
            Err(MethodError::MissingField("beta"))
        ));
        assert!(matches!(
            parse_method("name: x\nk: 1\norder: 3\n"),
            Err(MethodError::UnknownField { line: 3, .. })
        ));
        assert!(matches!(
            parse_method("name: x\nk: 0\n"),
            Err(MethodError::BadStepCount(_))
        ));
        assert!(matches!(
            parse_method("name: x\n1 2\n"),
            Err(MethodError::MalformedLine { line: 2, .. })
        ));
    }
}
