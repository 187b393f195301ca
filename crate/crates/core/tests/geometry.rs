use geostep::geometry::{
    area_defect_map, area_defect_matrix, canonical_defect, energy_drift, g_symplecticity_defect, lambda_f64, orbit_residual,
    reversibility_residual, step_transition, symplecticity_defect, transfer_matrix, window_energy_form,
    window_skew_form,
};
use geostep::integrators::{integrate, lmm_step, oneleg_step, SolverConfig, Starter, Trajectory};
use geostep::methods::{builtin, builtin_method, builtin_schemes};
use geostep::systems::{sho, sho_exact, structure_matrix, StateVector};
use geostep::Scheme;
use nalgebra::DMatrix;

fn v(x: &[f64]) -> StateVector {
    StateVector::from_row_slice(x)
}

fn exact_cfg() -> SolverConfig {
    SolverConfig::default().with_starter(Starter::Exact)
}

fn cayley(h: f64) -> DMatrix<f64> {
    let sys = sho(1.0).unwrap();
    let eye = DMatrix::<f64>::identity(2, 2);
    let a = sys.system_matrix();
    (&eye - a * (h / 2.0)).try_inverse().unwrap() * (&eye + a * (h / 2.0))
}

#[test]
fn explicit_euler_transfer_is_i_plus_ha() {
    let sys = sho(1.0).unwrap();
    let t = transfer_matrix(&builtin("explicit-euler").unwrap(), &sys, 0.1).unwrap();
    let expect = DMatrix::identity(2, 2) + sys.system_matrix() * 0.1;
    assert!((&t.matrix - expect).amax() < 1e-15);
    assert!((t.matrix.determinant() - 1.01).abs() < 1e-14);
}

#[test]
fn midpoint_transfer_is_cayley() {
    let t = transfer_matrix(&builtin("midpoint").unwrap(), &sho(1.0).unwrap(), 0.1).unwrap();
    assert!((&t.matrix - cayley(0.1)).amax() < 1e-14);
    assert!((t.matrix.determinant() - 1.0).abs() < 1e-14);
}

#[test]
fn leapfrog_transfer_matches_step_on_exact_windows() {
    let sys = sho(1.0).unwrap();
    let m = builtin_method("leapfrog").unwrap();
    let t = transfer_matrix(&Scheme::Method(m.clone()), &sys, 0.1).unwrap();
    assert_eq!(t.matrix.shape(), (4, 4));
    for s in 0..20 {
        let y0 = v(&[(s as f64).cos(), (s as f64 * 0.7).sin()]);
        let w: Vec<_> = (0..2).map(|j| sho_exact(1.0, &y0, 0.1 * j as f64).unwrap()).collect();
        let next = lmm_step(&m, &sys, &w, 0.1, &SolverConfig::default()).unwrap();
        let shifted = t.apply(&w);
        assert!((&shifted[0] - &w[1]).norm() < 1e-15);
        assert!((&shifted[1] - next).norm() < 1e-12);
    }
}

#[test]
fn symmetric_methods_are_g_symplectic() {
    for name in ["leapfrog", "m3-line1"] {
        for h in [0.05, 0.1] {
            let r = g_symplecticity_defect(&builtin_method(name).unwrap(), &sho(1.0).unwrap(), h).unwrap();
            assert!(r.defect <= 1e-12, "{name} h={h}: {}", r.defect);
        }
    }
}

#[test]
fn explicit_euler_defect_is_h_squared() {
    let r = canonical_defect(&builtin("explicit-euler").unwrap(), &sho(1.0).unwrap(), 0.1).unwrap();
    assert!((r.defect - 0.01).abs() < 1e-12);
    let t = transfer_matrix(&builtin("explicit-euler").unwrap(), &sho(1.0).unwrap(), 0.1).unwrap();
    let j = structure_matrix(1);
    assert!((symplecticity_defect(&t.matrix, &j) - 0.01).abs() < 1e-12);
}

#[test]
fn area_of_one_step_maps() {
    let sys = sho(1.0).unwrap();
    let cfg = SolverConfig::default();
    let y = v(&[0.3, 0.9]);
    let mid = builtin_method("midpoint").unwrap();
    let a = area_defect_map(|x| oneleg_step(&mid, &sys, std::slice::from_ref(x), 0.1, &cfg).unwrap(), &y).unwrap();
    // finite differences carry ~eps/step noise; the analytic matrix is exact
    assert!(a <= 1e-9, "{a}");
    assert!(area_defect_matrix(&cayley(0.1)) <= 1e-12);
    let ee = builtin_method("explicit-euler").unwrap();
    let b = area_defect_map(|x| lmm_step(&ee, &sys, std::slice::from_ref(x), 0.1, &cfg).unwrap(), &y).unwrap();
    assert!((b - 0.01).abs() <= 1e-10, "{b}");
    assert_eq!(area_defect_map(|x| x.clone(), &y).unwrap(), 0.0);
}

#[test]
fn midpoint_transition_is_cayley_and_symplectic() {
    let g = step_transition(&builtin("midpoint").unwrap(), &sho(1.0).unwrap(), 0.1).unwrap();
    assert!((&g.g - cayley(0.1)).amax() < 1e-12);
    let j = structure_matrix(1);
    assert!((g.g.transpose() * &j * &g.g - &j).amax() < 1e-12);
}

#[test]
fn leapfrog_principal_roots_on_unit_circle() {
    let h = 0.1;
    let g = step_transition(&builtin("leapfrog").unwrap(), &sho(1.0).unwrap(), h).unwrap();
    for (lambda, z) in g.eigenvalues.iter().zip(&g.principal_roots) {
        // zeta = i h Im(lambda) + sqrt(1 - h^2)
        assert!((z.norm() - 1.0).abs() < 1e-12);
        assert!((z.re - (1.0f64 - h * h).sqrt()).abs() < 1e-12);
        assert!((z.im - h * lambda.im).abs() < 1e-12);
    }
}

#[test]
fn ab4_transition_is_not_area_preserving() {
    let g = step_transition(&builtin("ab4").unwrap(), &sho(1.0).unwrap(), 0.1).unwrap();
    assert!(g.residual <= 1e-10);
    let d = g.area_defect();
    // |det G| - 1 is O(h^6) here; positive but small
    assert!(d > 0.0 && d < 1e-4, "{d}");
}

#[test]
fn orbit_of_g_satisfies_recurrence() {
    let sys = sho(1.0).unwrap();
    for s in builtin_schemes() {
        let Ok(g) = step_transition(&s, &sys, 0.1) else {
            continue;
        };
        assert!(g.residual <= 1e-10, "{}", s.name());
        let r = orbit_residual(&s, &sys, 0.1, &g.g, &v(&[0.0, 1.0]), 100).unwrap();
        assert!(r <= 1e-10, "{}: {r}", s.name());
    }
}

fn run(name: &str, steps: usize) -> (Scheme, Trajectory) {
    let s = builtin(name).unwrap();
    let t = integrate(&s, &sho(1.0).unwrap(), &v(&[1.0, 0.0]), 0.1, steps, &exact_cfg()).unwrap();
    (s, t)
}

#[test]
fn reversibility_separates_symmetric_from_adams() {
    let sys = sho(1.0).unwrap();
    for name in ["leapfrog", "m3-line1", "m1-as-printed", "m1-corrected", "midpoint"] {
        let (s, t) = run(name, 101);
        let r = reversibility_residual(s.as_method().unwrap(), &sys, &t).unwrap();
        assert!(r <= 1e-11, "{name}: {r}");
    }
    let (s, t) = run("ab4", 101);
    let r = reversibility_residual(s.as_method().unwrap(), &sys, &t).unwrap();
    assert!(r > 1e-8, "{r}");
}

#[test]
fn window_forms_are_conserved_by_leapfrog() {
    let sys = sho(1.0).unwrap();
    let m = builtin_method("leapfrog").unwrap();
    let lambda = lambda_f64(&m);
    let (_, a) = run("leapfrog", 10_000);
    let b = integrate(&Scheme::Method(m), &sys, &v(&[0.3, 0.8]), 0.1, 10_000, &exact_cfg()).unwrap();
    let e0 = window_energy_form(&lambda, sys.hessian(), &a.states[0..2]);
    let s0 = window_skew_form(&lambda, &a.states[0..2], &b.states[0..2]);
    for l in 1..a.len() - 1 {
        let e = window_energy_form(&lambda, sys.hessian(), &a.states[l..l + 2]);
        let s = window_skew_form(&lambda, &a.states[l..l + 2], &b.states[l..l + 2]);
        assert!((e - e0).abs() <= 1e-9 * e0.abs());
        assert!((s - s0).abs() <= 1e-9 * s0.abs());
    }
}

#[test]
fn exact_flow_has_no_drift() {
    let sys = sho(1.0).unwrap();
    let mut t = integrate(&builtin("midpoint").unwrap(), &sys, &v(&[1.0, 0.0]), 0.1, 200, &exact_cfg()).unwrap();
    for j in 0..t.len() {
        t.states[j] = sys.exact_state(&v(&[1.0, 0.0]), t.time(j));
        t.energies[j] = 0.5 * t.states[j].norm_squared();
    }
    assert!(energy_drift(&t).max_deviation <= 1e-12);
}

#[test]
fn explicit_euler_drift_is_geometric() {
    let (_, t) = run("explicit-euler", 101);
    let d = energy_drift(&t);
    let expect = (1.01f64.powi(100) - 1.0) * 0.5;
    assert!((d.max_deviation - expect).abs() <= 1e-8 * expect);
    assert!(d.slope > 0.0);
}
