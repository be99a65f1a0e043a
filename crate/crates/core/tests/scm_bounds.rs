mod common;

use burgers_rb::model::{build_model, BuildOptions, ReducedModel};
use burgers_rb::params::sample_parameters;
use burgers_rb::simplex::{simplex_solve, two_phase_solve, LinearProgram};
use burgers_rb::{Error, ProblemConfig};
use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn trained() -> (ProblemConfig, ReducedModel) {
    let c = table1(24, 0.05, 0.5);
    let mut opts = BuildOptions::pod(5, 4);
    opts.enrich = true;
    opts.scm_sample_size = 6;
    (c.clone(), build_model(&c, &opts).unwrap())
}

/// Smallest eigenvalue of `ν a + c(u,·,·) + c(u,·,·)ᵀ` on `X₀`, all dense.
fn dense_stability(u: &[f64], nu: f64) -> f64 {
    let n = u.len() - 1;
    let c = DMatrix::from_fn(n + 1, n + 1, |i, j| trilinear_simpson(u, &hat(n, j), &hat(n, i)));
    let psi = dense_stiffness(n) * nu + &c + c.transpose();
    pencil_eigenvalues(&interior(&psi), &interior(&dense_mass(n)))[0]
}

#[test]
fn bounds_sandwich_exact_constant() {
    let (c, m) = trained();
    let scm = m.online.scm.as_ref().unwrap();
    let mut checked = 0;
    for mu in sample_parameters(&c.ranges, &c.freq, 5, 1234).unwrap() {
        let traj = m.online.solve_reduced(&mu).unwrap();
        for k in 1..=10 {
            let coeffs = &traj.states[k];
            let exact = dense_stability(&m.basis.reconstruct(coeffs), mu.nu);
            let lo = scm.lower(&mu.coordinates(), mu.nu, k, coeffs).unwrap();
            let hi = scm.upper(mu.nu, coeffs).unwrap();
            let slack = 1e-9 * (1.0 + exact.abs());
            assert!(lo <= exact + slack && exact <= hi + slack, "{lo} {exact} {hi}");
            checked += 1;
        }
    }
    assert_eq!(checked, 50);
}

#[test]
fn upper_bound_is_exact_at_constraints() {
    let (_, m) = trained();
    let scm = m.online.scm.as_ref().unwrap();
    let n = scm.basis_size();
    assert!(scm.constraints.len() > 1);
    for con in &scm.constraints {
        let coeffs: Vec<f64> = con.objective[..n].iter().map(|v| v / 2.0).collect();
        let nu = con.objective[n];
        let exact = dense_stability(&m.basis.reconstruct(&coeffs), nu);
        assert!((con.value - exact).abs() <= 1e-9 * (1.0 + exact.abs()));
        assert!((scm.upper(nu, &coeffs).unwrap() - exact).abs() <= 1e-9 * (1.0 + exact.abs()));
        let lo = scm.lower(&con.coords, nu, con.step, &coeffs).unwrap();
        assert!(lo <= exact + 1e-9 * (1.0 + exact.abs()));
        for (j, y) in con.y_star.iter().enumerate() {
            assert!(scm.sigma_min[j] - 1e-9 <= *y && *y <= scm.sigma_max[j] + 1e-9);
        }
    }
}

#[test]
fn warm_started_lower_bound_matches_cold() {
    let (c, m) = trained();
    let scm = m.online.scm.as_ref().unwrap();
    for mu in sample_parameters(&c.ranges, &c.freq, 3, 99).unwrap() {
        let traj = m.online.solve_reduced(&mu).unwrap();
        let coords = mu.coordinates();
        let mut q = scm.trajectory_query(&coords);
        for k in 1..traj.states.len() {
            let warm = scm.lower_along(&mut q, mu.nu, k, &traj.states[k]).unwrap();
            let cold = scm.lower(&coords, mu.nu, k, &traj.states[k]).unwrap();
            assert!((warm - cold).abs() <= 1e-10 * (1.0 + cold.abs()), "k {k}: {warm} vs {cold}");
        }
    }
}

/// Minimum over all feasible vertices, `None` when there are none.
fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let n = lp.objective.len();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..n {
        planes.push((hat(n - 1, i), lp.lower[i]));
        planes.push((hat(n - 1, i), lp.upper[i]));
    }
    for (r, b) in lp.rows.iter().zip(&lp.rhs) {
        planes.push((r.clone(), *b));
    }
    let feasible = |y: &DVector<f64>| {
        (0..n).all(|i| y[i] >= lp.lower[i] - 1e-9 && y[i] <= lp.upper[i] + 1e-9)
            && lp.rows.iter().zip(&lp.rhs).all(|(r, b)| r.iter().zip(y.iter()).map(|(a, x)| a * x).sum::<f64>() >= b - 1e-9)
    };
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n];
    fn rec(start: usize, depth: usize, pick: &mut Vec<usize>, total: usize, f: &mut dyn FnMut(&[usize])) {
        if depth == pick.len() {
            f(pick);
            return;
        }
        for i in start..total {
            pick[depth] = i;
            rec(i + 1, depth + 1, pick, total, f);
        }
    }
    rec(0, 0, &mut pick, planes.len(), &mut |sel| {
        let a = DMatrix::from_fn(n, n, |r, c| planes[sel[r]].0[c]);
        let b = DVector::from_fn(n, |r, _| planes[sel[r]].1);
        if a.determinant().abs() < 1e-10 {
            return;
        }
        if let Some(y) = a.lu().solve(&b) {
            if feasible(&y) {
                let v: f64 = lp.objective.iter().zip(y.iter()).map(|(c, x)| c * x).sum();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
    });
    best
}

fn small_lp() -> impl Strategy<Value = LinearProgram> {
    (1usize..=4, 0usize..=5).prop_flat_map(|(n, m)| {
        (
            proptest::collection::vec(-2.0f64..2.0, n),
            proptest::collection::vec((-1.0f64..0.5, 0.1f64..1.5), n),
            proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, n), m),
            proptest::collection::vec(-1.5f64..1.0, m),
        )
            .prop_map(|(objective, boxes, rows, rhs)| LinearProgram {
                objective,
                lower: boxes.iter().map(|b| b.0).collect(),
                upper: boxes.iter().map(|b| b.0 + b.1).collect(),
                rows,
                rhs,
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplex_matches_vertex_enumeration(lp in small_lp()) {
        let reference = vertex_enumeration(&lp);
        for result in [simplex_solve(&lp), two_phase_solve(&lp)] {
            match (reference, result) {
                (Some(v), Ok(sol)) => prop_assert!((sol.value - v).abs() <= 1e-8 * (1.0 + v.abs()), "{} vs {}", sol.value, v),
                (None, Err(Error::Infeasible)) => {}
                // feasible sets thinner than the enumeration tolerance
                (None, Ok(sol)) => prop_assert!(lp.rows.iter().zip(&lp.rhs).all(|(r, b)| r.iter().zip(&sol.x).map(|(a, x)| a * x).sum::<f64>() >= b - 1e-7)),
                (r, s) => prop_assert!(false, "{:?} vs {:?}", r, s),
            }
        }
    }
}
