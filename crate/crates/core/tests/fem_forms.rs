mod common;

use approx::assert_relative_eq;
use burgers_rb::linalg::{largest_pencil_eigen, smallest_pencil_eigen, Tridiagonal};
use burgers_rb::FemSpace;
use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn nodal(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, len)
}

fn mesh_and_vectors(count: usize) -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (2usize..=20).prop_flat_map(move |n| (Just(n), proptest::collection::vec(nodal(n + 1), count)))
}

#[test]
fn assembled_matrices_match_dense_assembly() {
    for n in [2, 7, 40] {
        let space = FemSpace::new(n).unwrap();
        let forms = space.assemble(1e7);
        let (m, a) = (forms.mass.to_dense(), forms.stiffness.to_dense());
        assert_relative_eq!(m, dense_mass(n), epsilon = 1e-15);
        assert_relative_eq!(a, dense_stiffness(n), epsilon = 1e-12);
        assert_eq!(m, m.transpose());
        assert_eq!(a, a.transpose());
    }
}

#[test]
fn mass_is_positive_definite() {
    for n in [2, 10, 50, 200] {
        let forms = FemSpace::new(n).unwrap().assemble(1.0);
        let ev = forms.mass.to_dense().symmetric_eigen().eigenvalues;
        assert!(ev.min() > 0.0, "n = {n}: {}", ev.min());
    }
}

#[test]
fn mesh_width_of_forty_intervals() {
    let s = FemSpace::new(40).unwrap();
    assert_eq!(s.dim(), 41);
    assert_eq!(s.mesh_width(), 0.025);
    assert!(FemSpace::new(1).is_err());
}

#[test]
fn thomas_agrees_with_dense_lu() {
    let n = 50;
    let mut t = Tridiagonal::zeros(n);
    for i in 0..n {
        t.diag[i] = 4.0 + (i as f64).sin();
        if i + 1 < n {
            t.upper[i] = -1.0 + 0.3 * (i as f64).cos();
            t.lower[i] = -1.2 + 0.1 * i as f64 / n as f64;
        }
    }
    let rhs: Vec<f64> = (0..n).map(|i| (0.37 * i as f64).cos()).collect();
    let x = t.solve(&rhs).unwrap();
    let y = t.to_dense().lu().solve(&to_dvec(&rhs)).unwrap();
    for i in 0..n {
        assert_relative_eq!(x[i], y[i], epsilon = 1e-12, max_relative = 1e-12);
    }
}

#[test]
fn pencil_extremes_match_dense_eigensolve() {
    let n = 30;
    let space = FemSpace::new(n).unwrap();
    let forms = space.assemble(1.0);
    let w: Vec<f64> = (0..=n).map(|i| 1.0 + (3.0 * i as f64 / n as f64).sin()).collect();
    let c = space.convection_matrix(&w);
    let psi = forms.stiffness.scaled(0.7).add_scaled(1.0, &c).add_scaled(1.0, &c.transpose());
    let a = psi.submatrix(1, n);
    let m = forms.interior_mass();
    let ev = pencil_eigenvalues(&a.to_dense(), &m.to_dense());
    let lo = smallest_pencil_eigen(&a, &m).unwrap();
    let hi = largest_pencil_eigen(&a, &m).unwrap();
    assert_relative_eq!(lo.value, ev[0], max_relative = 1e-10);
    assert_relative_eq!(hi.value, *ev.last().unwrap(), max_relative = 1e-10);
    assert_relative_eq!(m.bilinear(&lo.vector, &lo.vector), 1.0, epsilon = 1e-10);
}

#[test]
fn convection_matrix_entries_are_trilinear_values() {
    let n = 9;
    let space = FemSpace::new(n).unwrap();
    let w: Vec<f64> = (0..=n).map(|i| (i as f64 * 0.7).sin()).collect();
    let c = space.convection_matrix(&w);
    let dense: DMatrix<f64> = c.to_dense();
    for i in 0..=n {
        for j in 0..=n {
            let direct = trilinear_simpson(&w, &hat(n, j), &hat(n, i));
            assert_relative_eq!(dense[(i, j)], direct, epsilon = 1e-14);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trilinear_matches_quadrature((n, v) in mesh_and_vectors(3)) {
        let space = FemSpace::new(n).unwrap();
        let fast = space.trilinear(&v[0], &v[1], &v[2]).unwrap();
        let slow = trilinear_simpson(&v[0], &v[1], &v[2]);
        prop_assert!((fast - slow).abs() <= 1e-12 * (1.0 + slow.abs()));
    }

    #[test]
    fn trilinear_symmetric_in_first_two((n, v) in mesh_and_vectors(3)) {
        let space = FemSpace::new(n).unwrap();
        let a = space.trilinear(&v[0], &v[1], &v[2]).unwrap();
        let b = space.trilinear(&v[1], &v[0], &v[2]).unwrap();
        prop_assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()));
    }

    #[test]
    fn trilinear_with_constant_first_argument((n, v) in mesh_and_vectors(2)) {
        let space = FemSpace::new(n).unwrap();
        let one = vec![1.0; n + 1];
        let form = space.trilinear(&one, &v[0], &v[1]).unwrap();
        // −½ ∫ v z′ with v linear per element: midpoint is exact.
        let h = 1.0 / n as f64;
        let direct: f64 = (0..n).map(|e| -0.5 * 0.5 * (v[0][e] + v[0][e + 1]) * (v[1][e + 1] - v[1][e])).sum();
        prop_assert!((form - direct).abs() <= 1e-12 * (1.0 + direct.abs()), "{form} {direct} {h}");
    }

    #[test]
    fn stiffness_kills_constants(n in 2usize..200, c in -5.0f64..5.0) {
        let forms = FemSpace::new(n).unwrap().assemble(1.0);
        let r = forms.stiffness.mul_vec(&vec![c; n + 1]);
        let scale = (n as f64) * c.abs().max(1.0);
        prop_assert!(r.iter().all(|v| v.abs() <= 1e-13 * scale));
    }

    #[test]
    fn quadratic_splitting((n, v) in mesh_and_vectors(3)) {
        // c(u,u,v) − c(ũ,ũ,v) = 2 c(ũ,e,v) + c(e,e,v) with e = u − ũ.
        let space = FemSpace::new(n).unwrap();
        let (u, ut, z) = (&v[0], &v[1], &v[2]);
        let e: Vec<f64> = u.iter().zip(ut).map(|(a, b)| a - b).collect();
        let lhs = space.trilinear(u, u, z).unwrap() - space.trilinear(ut, ut, z).unwrap();
        let rhs = 2.0 * space.trilinear(ut, &e, z).unwrap() + space.trilinear(&e, &e, z).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn cubic_boundary_identity((n, v) in mesh_and_vectors(1)) {
        let space = FemSpace::new(n).unwrap();
        let e = &v[0];
        let c = space.trilinear(e, e, e).unwrap();
        let closed = -(e[n].powi(3) - e[0].powi(3)) / 6.0;
        prop_assert!((c - closed).abs() <= 1e-12 * (1.0 + closed.abs()));
    }

    #[test]
    fn tensor_entries_match_scalar_form((n, v) in mesh_and_vectors(3)) {
        let space = FemSpace::new(n).unwrap();
        let vs: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
        let t = space.trilinear_tensor(&vs, &vs, &vs);
        for p in 0..3 {
            for q in 0..3 {
                for r in 0..3 {
                    let direct = space.trilinear(vs[p], vs[q], vs[r]).unwrap();
                    prop_assert!((t[(p * 3 + q) * 3 + r] - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
                }
            }
        }
    }
}
