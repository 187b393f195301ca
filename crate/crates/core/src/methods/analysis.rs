//! Structural certificates of multistep methods.
//!
//! Everything here except the root locations of `rho` is computed in exact
//! rational arithmetic.

use std::fmt::Write as _;

use serde::Serialize;

use crate::linalg::{poly_roots, Complex64};
use crate::poly::Poly;
use crate::rational::Rational;

use super::spec::MethodSpec;

/// Characteristic polynomials `rho(x) = sum alpha_j x^j`, `sigma(x) = sum beta_j x^j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyPair {
    pub rho: Poly,
    pub sigma: Poly,
}

/// Modulus bound and simplicity tolerances for the root condition.
pub const ROOT_MODULUS_SLACK: f64 = 1e-10;
pub const ROOT_SEPARATION: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
}

impl Root {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootCondition {
    pub satisfied: bool,
    pub roots: Vec<Root>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrderCertificate {
    pub order: usize,
    pub defects: Vec<Rational>,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisReport {
    pub method: String,
    pub kind: String,
    pub k: usize,
    pub order: usize,
    pub defects: Vec<Rational>,
    pub consistent: bool,
    pub symmetric: bool,
    pub irreducible: bool,
    pub root_condition_satisfied: bool,
    pub rho_roots: Vec<Root>,
    pub normalization: Rational,
    pub lambda: Option<Vec<Vec<Rational>>>,
    pub rho: String,
    pub sigma: String,
    pub warnings: Vec<String>,
}

pub fn characteristic_polynomials(m: &MethodSpec) -> PolyPair {
    PolyPair {
        rho: Poly::new(m.alpha().to_vec()),
        sigma: Poly::new(m.effective_beta()),
    }
}

/// Defect horizon `L = 2k + 4`.
pub fn defect_horizon(m: &MethodSpec) -> usize {
    2 * m.k() + 4
}

/// `C_0 = sum alpha_j`, `C_l = sum alpha_j j^l - l sum beta_j j^(l-1)` for `l = 1..=horizon`.
pub fn defects(m: &MethodSpec, horizon: usize) -> Vec<Rational> {
    let beta = m.effective_beta();
    (0..=horizon)
        .map(|l| {
            let mut c = Rational::zero();
            for (j, (a, b)) in m.alpha().iter().zip(beta.iter()).enumerate() {
                let jr = Rational::from_integer(j as i64);
                c = c + a * &jr.pow(l as u32);
                if l > 0 {
                    c = c - &(b * &jr.pow(l as u32 - 1)) * &Rational::from_integer(l as i64);
                }
            }
            c
        })
        .collect()
}

pub fn order_analysis(m: &MethodSpec) -> OrderCertificate {
    let defects = defects(m, defect_horizon(m));
    let consistent = defects[0].is_zero() && defects[1].is_zero();
    let order = if consistent {
        // C_0..C_s vanish; the horizon exceeds any attainable order
        defects.iter().take_while(|c| c.is_zero()).count() - 1
    } else {
        0
    };
    OrderCertificate {
        order,
        defects,
        consistent,
    }
}

/// `alpha_{k-j} = -alpha_j` and `beta_{k-j} = beta_j` for all `j`.
pub fn is_symmetric(m: &MethodSpec) -> bool {
    let k = m.k();
    let beta = m.effective_beta();
    (0..=k).all(|j| m.alpha()[k - j] == -&m.alpha()[j] && beta[k - j] == beta[j])
}

/// `rho` and `sigma` have no common root (their gcd over Q is constant).
pub fn is_irreducible(m: &MethodSpec) -> bool {
    let pp = characteristic_polynomials(m);
    pp.rho.gcd(&pp.sigma).is_constant()
}

pub fn rho_roots(m: &MethodSpec) -> Vec<Root> {
    let rho = characteristic_polynomials(m).rho;
    let mut roots = Vec::new();
    for (factor, multiplicity) in rho.square_free_factors() {
        let c: Vec<Complex64> = factor
            .to_f64()
            .into_iter()
            .map(|x| Complex64::new(x, 0.0))
            .collect();
        for z in poly_roots(&c) {
            // conjugate pairs of a real polynomial: snap tiny imaginary parts
            let im = if z.im.abs() < 1e-14 * (1.0 + z.re.abs()) { 0.0 } else { z.im };
            roots.push(Root {
                re: z.re,
                im,
                multiplicity,
            });
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

/// Zero stability: all roots of `rho` in the closed unit disk, those on the
/// unit circle simple.
pub fn root_condition(m: &MethodSpec) -> RootCondition {
    let roots = rho_roots(m);
    let inside = roots.iter().all(|r| r.modulus() <= 1.0 + ROOT_MODULUS_SLACK);
    let boundary: Vec<&Root> = roots
        .iter()
        .filter(|r| r.modulus() >= 1.0 - ROOT_MODULUS_SLACK)
        .collect();
    let simple = boundary.iter().all(|r| r.multiplicity == 1)
        && boundary.iter().enumerate().all(|(i, a)| {
            boundary[i + 1..]
                .iter()
                .all(|b| (a.re - b.re).hypot(a.im - b.im) > ROOT_SEPARATION)
        });
    RootCondition {
        satisfied: inside && simple,
        roots,
    }
}

/// `lambda_ij = sum_{m >= 0} (alpha_{i+m} beta_{j+m} + alpha_{j+m} beta_{i+m})`
/// for `i, j` in `1..=k`, coefficients beyond index `k` taken as zero.
/// Entry `[i-1][j-1]` of the result is `lambda_ij`.
pub fn lambda_matrix(m: &MethodSpec) -> Vec<Vec<Rational>> {
    let k = m.k();
    let alpha = m.alpha();
    let beta = m.effective_beta();
    let zero = Rational::zero();
    let a = |i: usize| alpha.get(i).unwrap_or(&zero);
    let b = |i: usize| beta.get(i).unwrap_or(&zero);
    (1..=k)
        .map(|i| {
            (1..=k)
                .map(|j| {
                    (0..=k)
                        .map(|s| a(i + s) * b(j + s) + a(j + s) * b(i + s))
                        .sum()
                })
                .collect()
        })
        .collect()
}

pub fn analyze(m: &MethodSpec) -> AnalysisReport {
    let cert = order_analysis(m);
    let pp = characteristic_polynomials(m);
    let rc = root_condition(m);
    let mut warnings: Vec<String> = m.warnings().iter().map(|w| w.to_string()).collect();
    if !cert.consistent {
        warnings.push(format!(
            "inconsistent: C_0 = {}, C_1 = {}",
            cert.defects[0], cert.defects[1]
        ));
    }
    AnalysisReport {
        method: m.name().to_string(),
        kind: m.kind().to_string(),
        k: m.k(),
        order: cert.order,
        defects: cert.defects,
        consistent: cert.consistent,
        symmetric: is_symmetric(m),
        irreducible: is_irreducible(m),
        root_condition_satisfied: rc.satisfied,
        rho_roots: rc.roots,
        normalization: m.sigma_at_one(),
        lambda: Some(lambda_matrix(m)),
        rho: pp.rho.to_string(),
        sigma: pp.sigma.to_string(),
        warnings,
    }
}

fn fmt_matrix(m: &[Vec<Rational>]) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    format!("[{}]", rows.join(","))
}

impl AnalysisReport {
    /// Flat `key: value` rendering, one field per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method: {}", self.method);
        let _ = writeln!(out, "kind: {}", self.kind);
        let _ = writeln!(out, "k: {}", self.k);
        let _ = writeln!(out, "rho: {}", self.rho);
        let _ = writeln!(out, "sigma: {}", self.sigma);
        let _ = writeln!(out, "order: {}", self.order);
        let _ = writeln!(
            out,
            "defects: {}",
            self.defects.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
        );
        let _ = writeln!(out, "consistent: {}", self.consistent);
        let _ = writeln!(out, "symmetric: {}", self.symmetric);
        let _ = writeln!(out, "irreducible: {}", self.irreducible);
        let _ = writeln!(out, "rootConditionSatisfied: {}", self.root_condition_satisfied);
        let roots: Vec<String> = self
            .rho_roots
            .iter()
            .map(|r| {
                let z = if r.im == 0.0 {
                    format!("{}", r.re)
                } else {
                    format!("{}{:+}i", r.re, r.im)
                };
                if r.multiplicity > 1 {
                    format!("{z} (x{})", r.multiplicity)
                } else {
                    z
                }
            })
            .collect();
        let _ = writeln!(out, "rhoRoots: {}", roots.join(", "));
        let _ = writeln!(out, "normalization: {}", self.normalization);
        match &self.lambda {
            Some(l) => {
                let _ = writeln!(out, "lambda: {}", fmt_matrix(l));
                // index convention for lambda_ij
                let _ = writeln!(out, "lambdaIndexing: i,j in 1..k");
            }
            None => {
                let _ = writeln!(out, "lambda: none");
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}
