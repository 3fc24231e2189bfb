use derham_core::complexcheck::{appendix_nullity, naive_quad_diagnostic, Complex, Diagram, DiagramSpec};
use derham_core::exactla::{rank, rank_nullspace, span_compare, QMatrix, SpanRelation};
use derham_core::fespace::SpaceFamily;
use derham_core::hodge::HodgeSolver;
use derham_core::mesh::{Mesh, MeshKind};
use derham_core::poly::{Poly, RefCell, VecPoly};
use derham_core::rational::{q, qf, Q};
use derham_core::refcheck::{random_divfree, CellSpace, Decomposer};
use num_traits::Zero;
use proptest::prelude::*;

fn small_q() -> impl Strategy<Value = Q> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| qf(n, d))
}

fn poly(max_deg: u32) -> impl Strategy<Value = Poly> {
    prop::collection::vec(((0..=max_deg), (0..=max_deg), small_q()), 0..6).prop_map(|terms| {
        let mut p = Poly::zero();
        for (i, j, c) in terms {
            p.add_term(i, j, c);
        }
        p
    })
}

fn matrix(max_r: usize, max_c: usize) -> impl Strategy<Value = QMatrix> {
    (1..=max_r, 1..=max_c).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(-3i64..=3, c), r).prop_map(|rows| {
            QMatrix::from_dense(
                &rows
                    .into_iter()
                    .map(|r| r.into_iter().map(q).collect())
                    .collect::<Vec<_>>(),
            )
        })
    })
}

fn kind() -> impl Strategy<Value = MeshKind> {
    prop_oneof![Just(MeshKind::TriangularPeriodic), Just(MeshKind::CartesianPeriodic)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, .. ProptestConfig::default() })]

    #[test]
    fn torus_has_zero_euler_characteristic(k in kind(), nx in 2usize..8, ny in 2usize..8) {
        let m = Mesh::unit(k, nx, ny).unwrap();
        prop_assert_eq!(m.euler_characteristic(), 0);
        prop_assert_eq!(m.entity_counts(), Mesh::expected_counts(k, nx, ny));
        for f in &m.faces {
            prop_assert_ne!(f.left, f.right);
        }
    }

    #[test]
    fn div_of_rotated_gradient_vanishes(p in poly(4)) {
        prop_assert!(VecPoly::grad_perp(&p).div().is_zero());
        prop_assert!(VecPoly::grad(&p).curl_scalar().is_zero());
    }

    #[test]
    fn rotation_swaps_div_and_curl(px in poly(3), py in poly(3)) {
        let u = VecPoly::new(px, py);
        prop_assert_eq!(u.rotate().div(), u.curl_scalar());
        prop_assert_eq!(u.rotate().unrotate(), u);
    }

    #[test]
    fn integration_is_linear(a in poly(3), b in poly(3), c in small_q()) {
        for cell in [RefCell::UnitSquare, RefCell::UnitTriangle] {
            let lhs = (&a + &b.scale(&c)).integrate(cell);
            let rhs = a.integrate(cell) + c.clone() * b.integrate(cell);
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn rank_nullity(m in matrix(7, 7)) {
        let r = rank_nullspace(&m);
        prop_assert_eq!(r.rank + r.nullity, m.ncols());
        prop_assert_eq!(r.rank, rank(&m.transpose()));
        for v in &r.nullspace {
            prop_assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
        }
        let ns = QMatrix::from_cols(m.ncols(), &r.nullspace);
        prop_assert_eq!(rank(&ns), r.nullity);
    }

    #[test]
    fn span_is_invariant_under_column_operations(m in matrix(6, 4), c in small_q()) {
        let mut cols = m.cols();
        if cols.len() > 1 {
            let extra: Vec<Q> = cols[0].iter().zip(&cols[1]).map(|(a, b)| a + &c * b).collect();
            cols[0] = extra;
        }
        let m2 = QMatrix::from_cols(m.nrows(), &cols);
        prop_assert_eq!(span_compare(&m, &m2).unwrap().relation, SpanRelation::Equal);
    }

    #[test]
    fn naive_kernel_counts_strips(nx in 2usize..6, ny in 2usize..6) {
        let d = naive_quad_diagnostic(&Mesh::unit(MeshKind::CartesianPeriodic, nx, ny).unwrap()).unwrap();
        prop_assert_eq!(d.kernel_dim, nx + ny);
        prop_assert_eq!(d.rank, 2 * nx * ny - nx - ny);
        prop_assert!(d.report.passed());
    }

    #[test]
    fn appendix_nullity_is_n_plus_one(nx in 2usize..5, ny in 2usize..5) {
        let r = appendix_nullity(&Mesh::unit(MeshKind::CartesianPeriodic, nx, ny).unwrap()).unwrap();
        prop_assert_eq!(r.nullity, nx * ny + 1);
        prop_assert!(r.report.passed());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, .. ProptestConfig::default() })]

    #[test]
    fn composition_vanishes(d in 0usize..8, nx in 2usize..4, ny in 2usize..4, k in 0usize..2) {
        let spec = DiagramSpec::unit(Diagram::ALL[d], nx, ny, k).unwrap();
        let cx = Complex::build(&spec).unwrap();
        prop_assert!(cx.d2.matrix.mul(&cx.d1.matrix).unwrap().is_zero());
        let ker2 = rank_nullspace(&cx.d2.matrix).nullity;
        prop_assert_eq!(ker2, rank(&cx.d1.matrix) + 2);
    }

    #[test]
    fn hodge_parts_are_fixed_points(d in 0usize..8, seed in 0u64..1000) {
        let spec = DiagramSpec::unit(Diagram::ALL[d], 2, 2, 0).unwrap();
        let s = HodgeSolver::new(&spec).unwrap();
        let u = derham_core::hodge::random_fields(s.dim(), 1, seed).remove(0);
        let p = s.decompose(&u).unwrap();
        let again = s.decompose(&p.u_div).unwrap();
        prop_assert_eq!(&again.u_div, &p.u_div);
        prop_assert!(again.u_curl.iter().all(|x| x.is_zero()));
        prop_assert!(again.u_harm.iter().all(|x| x.is_zero()));
        prop_assert_eq!(s.rank_first + s.rank_adjoint + 2, s.dim());
    }

    #[test]
    fn decomposition_reassembles(k in 0usize..3, fam in 0usize..3, seed in 0u64..1000) {
        let (f, c) = [
            (SpaceFamily::DPkVec, RefCell::UnitTriangle),
            (SpaceFamily::DQhatDiv, RefCell::UnitSquare),
            (SpaceFamily::DQhatCurl, RefCell::UnitSquare),
        ][fam];
        let dec = Decomposer::new(k, f, c).unwrap();
        let space = CellSpace::new(f, k, c).unwrap();
        for u in random_divfree(&space, 3, seed).unwrap() {
            let d = dec.decompose(&u).unwrap();
            prop_assert!(d.residual.is_zero());
            prop_assert!(d.v1_coords.is_some());
        }
    }
}
