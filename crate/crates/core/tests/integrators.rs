use geostep::integrators::{
    generalized_step, integrate, lmm_residual, lmm_step, method_residual, oneleg_step, partitioned_residual,
    partitioned_step, pc_step, IntegrateError, Propagator, SolverConfig, Starter,
};
use geostep::methods::{builtin, builtin_method, pc_m2, MethodKind};
use geostep::systems::{sho, sho_exact, GradientField, HamiltonianField, StateVector};
use geostep::{MethodSpec, PartitionedPair, PcMode, PredictorCorrector, Rational, Scheme};
use nalgebra::DMatrix;

fn v(x: &[f64]) -> StateVector {
    StateVector::from_row_slice(x)
}

fn exact_window(omega: f64, y0: &StateVector, h: f64, k: usize) -> Vec<StateVector> {
    (0..k).map(|j| sho_exact(omega, y0, j as f64 * h).unwrap()).collect()
}

#[test]
fn leapfrog_step_satisfies_relation() {
    let m = builtin_method("leapfrog").unwrap();
    let sys = sho(1.0).unwrap();
    let w = exact_window(1.0, &v(&[1.0, 0.0]), 0.1, 2);
    let y2 = lmm_step(&m, &sys, &w, 0.1, &SolverConfig::default()).unwrap();
    let states = [w[0].clone(), w[1].clone(), y2];
    assert!(lmm_residual(&m, &sys, &states, 0.1) <= 1e-13);
}

#[test]
fn midpoint_is_cayley_step() {
    let h = 0.1;
    let sys = sho(1.0).unwrap();
    let y0 = v(&[1.0, 0.0]);
    let y1 = oneleg_step(&builtin_method("midpoint").unwrap(), &sys, std::slice::from_ref(&y0), h, &SolverConfig::default()).unwrap();
    let eye = DMatrix::<f64>::identity(2, 2);
    let a = sys.system_matrix();
    let cayley = (&eye - a * (h / 2.0)).try_inverse().unwrap() * (&eye + a * (h / 2.0));
    assert!((y1 - cayley * y0).norm() < 1e-12);
}

fn gamma_rows(rows: &[&str]) -> Vec<Vec<Rational>> {
    rows.iter()
        .map(|r| r.split_whitespace().map(|t| t.parse().unwrap()).collect())
        .collect()
}

#[test]
fn generalized_midpoint_matches_implicit_midpoint() {
    let alpha = vec![Rational::from_integer(-1), Rational::one()];
    let beta = vec![Rational::zero(), Rational::one()];
    let g = MethodSpec::new(
        "gmid",
        MethodKind::Generalized,
        alpha,
        beta,
        Some(gamma_rows(&["1 0", "1/2 1/2"])),
    )
    .unwrap();
    let cfg = SolverConfig::default();
    let y0 = v(&[0.3, -0.8]);
    let mid = builtin_method("midpoint").unwrap();
    // linear and nonlinear fields
    let sys = sho(1.0).unwrap();
    let pend = GradientField::pendulum();
    let fields: [&dyn HamiltonianField; 2] = [&sys, &pend];
    for field in fields {
        let a = generalized_step(&g, field, std::slice::from_ref(&y0), 0.1, &cfg).unwrap();
        let b = oneleg_step(&mid, field, std::slice::from_ref(&y0), 0.1, &cfg).unwrap();
        assert!((&a - &b).norm() < 1e-12, "{}", field.label());
        // y1 - y0 = h f((y0 + y1)/2)
        let r = &a - &y0 - field.evaluate(&((&a + &y0) * 0.5)) * 0.1;
        assert!(r.norm() < 1e-12);
    }
}

#[test]
fn generalized_with_beta_rows_matches_oneleg() {
    let alpha: Vec<Rational> = ["-1", "0", "1"].iter().map(|s| s.parse().unwrap()).collect();
    let beta: Vec<Rational> = ["1/4", "1/2", "1/4"].iter().map(|s| s.parse().unwrap()).collect();
    let rows = gamma_rows(&["1/4 1/2 1/4", "1/4 1/2 1/4", "1/4 1/2 1/4"]);
    let g = MethodSpec::new("g", MethodKind::Generalized, alpha.clone(), beta.clone(), Some(rows)).unwrap();
    let o = MethodSpec::new("o", MethodKind::OneLeg, alpha, beta, None).unwrap();
    let field = GradientField::pendulum();
    let w = [v(&[0.2, 0.1]), v(&[0.25, 0.05])];
    let cfg = SolverConfig::default();
    let a = generalized_step(&g, &field, &w, 0.1, &cfg).unwrap();
    let b = oneleg_step(&o, &field, &w, 0.1, &cfg).unwrap();
    assert!((a - b).norm() < 1e-12);
}

#[test]
fn pc_zero_field_is_corrector_alpha_recurrence() {
    let pc = pc_m2(PcMode::Pece);
    let w = [v(&[1.0, 2.0]), v(&[0.5, -1.0]), v(&[0.0, 3.0]), v(&[2.0, 2.0])];
    let y = pc_step(&pc, &GradientField::zero(1), &w, 0.1).unwrap();
    // am4 alpha = (0, 0, 0, -1, 1): y4 = y3
    assert_eq!(y, w[3]);
}

#[test]
fn pc_local_error_is_fifth_order() {
    let pc = pc_m2(PcMode::Pece);
    let sys = sho(1.0).unwrap();
    let y0 = v(&[1.0, 0.0]);
    let local = |h: f64| {
        let w = exact_window(1.0, &y0, h, 4);
        let y = pc_step(&pc, &sys, &w, h).unwrap();
        (y - sho_exact(1.0, &y0, 4.0 * h).unwrap()).norm()
    };
    let ratio = local(0.1) / local(0.05);
    assert!((ratio - 32.0).abs() < 2.0, "ratio {ratio}");
}

#[test]
fn pc_with_copied_predictor_equals_predictor() {
    let ab4 = builtin_method("ab4").unwrap();
    let pc = PredictorCorrector::new("ab4/ab4", ab4.clone(), ab4.clone(), PcMode::Pece).unwrap();
    let sys = sho(1.0).unwrap();
    let w = exact_window(1.0, &v(&[1.0, 0.0]), 0.1, 4);
    let a = pc_step(&pc, &sys, &w, 0.1).unwrap();
    let b = lmm_step(&ab4, &sys, &w, 0.1, &SolverConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn partitioned_step_matches_scalar_recurrences() {
    let pair = PartitionedPair::new(
        builtin_method("m3-line1").unwrap(),
        builtin_method("m3-line2-as-printed").unwrap(),
        false,
    )
    .unwrap();
    let h = 0.1;
    let w = [v(&[1.0, 0.0]), v(&[0.99, -0.1]), v(&[0.98, -0.2])];
    let y = partitioned_step(&pair, &sho(1.0).unwrap(), &w, h).unwrap();
    // q3 = q0 - q1 + q2 + h (p1 + p2);  p3 = p1 - 2h (q1 + q2)
    let q = w[0][0] - w[1][0] + w[2][0] + h * (w[1][1] + w[2][1]);
    let p = w[1][1] - 2.0 * h * (w[1][0] + w[2][0]);
    assert!((y[0] - q).abs() < 1e-15 && (y[1] - p).abs() < 1e-15);
    assert!(partitioned_residual(&pair, &sho(1.0).unwrap(), &[w[0].clone(), w[1].clone(), w[2].clone(), y], h) < 1e-14);
}

#[test]
fn partition_swap_exchanges_recurrences() {
    let l1 = builtin_method("m3-line1").unwrap();
    let l2 = builtin_method("m3-line2-as-printed").unwrap();
    let plain = PartitionedPair::new(l1.clone(), l2.clone(), false).unwrap();
    let swapped = PartitionedPair::new(l1, l2, true).unwrap();
    let h = 0.1;
    let w = [v(&[1.0, 0.0]), v(&[0.99, -0.1]), v(&[0.98, -0.2])];
    let y = partitioned_step(&swapped, &sho(1.0).unwrap(), &w, h).unwrap();
    // now q follows the second line and p the first
    let q = w[1][0] + 2.0 * h * (w[1][1] + w[2][1]);
    let p = w[0][1] - w[1][1] + w[2][1] - h * (w[1][0] + w[2][0]);
    assert!((y[0] - q).abs() < 1e-15 && (y[1] - p).abs() < 1e-15);
    assert_ne!(y, partitioned_step(&plain, &sho(1.0).unwrap(), &w, h).unwrap());
}

#[test]
fn identical_partition_is_plain_leapfrog() {
    let lf = builtin_method("leapfrog").unwrap();
    let pair = PartitionedPair::new(lf.clone(), lf.clone(), false).unwrap();
    let sys = sho(1.0).unwrap();
    let w = [v(&[0.4, 0.9]), v(&[0.5, 0.85])];
    let a = partitioned_step(&pair, &sys, &w, 0.1).unwrap();
    let b = lmm_step(&lf, &sys, &w, 0.1, &SolverConfig::default()).unwrap();
    assert!((a - b).norm() < 1e-13);
}

#[test]
fn implicit_partition_rejected() {
    let err = PartitionedPair::new(builtin_method("am4").unwrap(), builtin_method("ab4").unwrap(), false);
    assert!(err.is_err());
}

#[test]
fn linear_lmm_and_oneleg_trajectories_agree() {
    let lmm = MethodSpec::from_strs("l", MethodKind::Lmm, "1 -2 1", "1/4 1/2 1/4").unwrap();
    let olm = MethodSpec::from_strs("o", MethodKind::OneLeg, "1 -2 1", "1/4 1/2 1/4");
    // sigma(1) = 1 here, so the one-leg twin exists
    let olm = olm.unwrap();
    let sys = sho(1.0).unwrap();
    let cfg = SolverConfig::default().with_starter(Starter::Exact);
    let y0 = v(&[1.0, 0.0]);
    let a = integrate(&Scheme::Method(lmm), &sys, &y0, 0.1, 1000, &cfg).unwrap();
    let b = integrate(&Scheme::Method(olm), &sys, &y0, 0.1, 1000, &cfg).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        assert!((x - y).norm() <= 1e-11);
    }
}

#[test]
fn every_accepted_step_satisfies_its_relation() {
    let cfg = SolverConfig::default();
    let y0 = v(&[1.0, 0.2]);
    let field = GradientField::pendulum();
    for name in ["implicit-euler", "midpoint", "am4", "leapfrog"] {
        let s = builtin(name).unwrap();
        let m = s.as_method().unwrap();
        let t = integrate(&s, &field, &y0, 0.05, 200, &cfg).unwrap();
        for w in t.states.windows(m.k() + 1) {
            let scale = 1.0 + w[m.k()].norm();
            assert!(method_residual(m, &field, w, 0.05) <= 1e-13 * scale, "{name}");
        }
    }
}

#[test]
fn exact_start_needs_linear_system() {
    let s = builtin("leapfrog").unwrap();
    let cfg = SolverConfig::default().with_starter(Starter::Exact);
    let err = Propagator::new(&s, &GradientField::pendulum(), &v(&[1.0, 0.0]), 0.1, cfg).err();
    assert_eq!(err, Some(IntegrateError::NotLinear));
}

#[test]
fn pec_differs_from_pece() {
    let sys = sho(1.0).unwrap();
    let y0 = v(&[1.0, 0.0]);
    let cfg = SolverConfig::default();
    let a = integrate(&Scheme::PredictorCorrector(pc_m2(PcMode::Pece)), &sys, &y0, 0.1, 50, &cfg).unwrap();
    let b = integrate(&Scheme::PredictorCorrector(pc_m2(PcMode::Pec)), &sys, &y0, 0.1, 50, &cfg).unwrap();
    assert_eq!(a.states[..5], b.states[..5]);
    assert_ne!(a.states[49], b.states[49]);
}
