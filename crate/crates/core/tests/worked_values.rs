//! Concrete values on small meshes, each recomputed here by an independent count.

use derham_core::complexcheck::{
    appendix_nullity, dof_comparison, naive_operator, naive_quad_diagnostic, verify_diagram, Diagram, DiagramSpec,
    VerifyOptions,
};
use derham_core::error::DerhamError;
use derham_core::exactla::is_zero_vec;
use derham_core::fespace::{BasisFn, GlobalSpace, SpaceFamily};
use derham_core::mesh::{Mesh, MeshKind};
use derham_core::poly::{RefCell, VecPoly};
use derham_core::rational::Q;
use derham_core::refcheck::{boundary_curl_map, decompose_divfree, phi_basis, uniqueness_probe};
use num_traits::{One, Zero};

fn run(d: Diagram, nx: usize, ny: usize, k: usize) -> derham_core::complexcheck::CohomologyReport {
    let r = verify_diagram(&DiagramSpec::unit(d, nx, ny, k).unwrap(), &VerifyOptions::default()).unwrap();
    assert!(r.passed(), "{}", r.report.to_text());
    r
}

#[test]
fn tri_dp_eight_cells_lowest_order() {
    let r = run(Diagram::TriDp, 2, 2, 0);
    // P_1 on 4 points: rank 4 − 1; dP_0² on 8 cells = 16, minus rank(div) 11
    assert_eq!((r.rank_first, r.dim_ker_second, r.rank_second, r.dim_c), (3, 5, 11, 12));
}

#[test]
fn quad_enriched_four_cells_first_order() {
    let r = run(Diagram::QuadEnriched, 2, 2, 1);
    assert_eq!(r.dim_ker_second, 4 * 4 + 1);
}

#[test]
fn tri_drt_dimensions() {
    let r = run(Diagram::TriDrt, 2, 2, 0);
    // RT_1 is 3-dimensional on each cell
    assert_eq!(r.dim_b, 8 * 3);
    assert_eq!(r.betti, (1, 2, 1));
}

#[test]
fn naive_three_by_four() {
    let d = naive_quad_diagnostic(&Mesh::unit(MeshKind::CartesianPeriodic, 3, 4).unwrap()).unwrap();
    assert_eq!((d.rank, d.kernel_dim), (17, 7));
}

#[test]
fn naive_witness_on_a_two_by_three_grid() {
    let mesh = Mesh::unit(MeshKind::CartesianPeriodic, 2, 3).unwrap();
    let (b, _, d) = naive_operator(&mesh).unwrap();
    let field = |cx: i64, cy: i64, pick: &dyn Fn(usize, usize) -> bool| {
        b.interpolate_cellwise(&mesh, |c| {
            let on = pick(c.grid.0, c.grid.1);
            let v = |x: i64| if on { Q::from_integer(x.into()) } else { Q::zero() };
            BasisFn::Vector(VecPoly::constant(v(cx), v(cy)))
        })
        .unwrap()
    };
    // x-flux across horizontal faces is not measured, so a horizontal strip is jump-free
    assert!(is_zero_vec(&d.matrix.mul_vec(&field(1, 0, &|_, j| j == 1))));
    assert!(is_zero_vec(&d.matrix.mul_vec(&field(0, 1, &|i, _| i == 0))));
    assert!(!is_zero_vec(&d.matrix.mul_vec(&field(1, 0, &|i, _| i == 0))));
}

#[test]
fn appendix_grids() {
    for (nx, ny, n) in [(3, 3, 10), (2, 2, 5), (2, 4, 9)] {
        let r = appendix_nullity(&Mesh::unit(MeshKind::CartesianPeriodic, nx, ny).unwrap()).unwrap();
        assert_eq!(r.nullity, n);
        assert!(r.report.passed(), "{}", r.report.to_text());
    }
}

#[test]
fn dof_differences() {
    for k in 0..=4 {
        assert!(dof_comparison(k).unwrap().passed());
    }
    let quad = |f| {
        derham_core::fespace::local_basis(f, 2, RefCell::UnitSquare)
            .unwrap()
            .dim()
    };
    assert_eq!(quad(SpaceFamily::DRtQuad), 24);
    assert_eq!(quad(SpaceFamily::DQhatDiv), 23);
}

#[test]
fn boundary_curl_examples() {
    assert_eq!(boundary_curl_map(2, RefCell::UnitTriangle).unwrap().rank, 8);
    assert_eq!(boundary_curl_map(2, RefCell::UnitSquare).unwrap().rank, 11);
    assert_eq!(boundary_curl_map(3, RefCell::UnitTriangle).unwrap().rank, 11);
}

#[test]
fn phi_and_uniqueness() {
    assert_eq!(
        phi_basis(2, SpaceFamily::DPkVec, RefCell::UnitTriangle).unwrap().dim(),
        1
    );
    assert_eq!(
        phi_basis(1, SpaceFamily::DPkVec, RefCell::UnitTriangle).unwrap().dim(),
        0
    );
    for (k, f, c) in [
        (1, SpaceFamily::DPkVec, RefCell::UnitTriangle),
        (0, SpaceFamily::DQhatDiv, RefCell::UnitSquare),
        (0, SpaceFamily::DPkVec, RefCell::UnitTriangle),
    ] {
        let r = uniqueness_probe(k, f, c).unwrap();
        assert!(r.passed(), "{}", r.to_text());
    }
}

#[test]
fn quad_v1_closed_form() {
    // traces: bottom 1, right −1, top 1, left −1  ->  the bubble
    let bubble = derham_core::refcheck::v1_space(RefCell::UnitSquare)[2].clone();
    let d = decompose_divfree(&bubble, 1, SpaceFamily::DQhatDiv, RefCell::UnitSquare).unwrap();
    assert_eq!(d.edge_means, vec![Q::one(), -Q::one(), Q::one(), -Q::one()]);
    assert_eq!(d.v1, bubble);
    assert_eq!(d.quad_closed_form().unwrap(), bubble);
}

#[test]
fn mismatched_mesh_is_rejected() {
    let m = Mesh::unit(MeshKind::TriangularPeriodic, 2, 2).unwrap();
    assert!(matches!(
        DiagramSpec::new(Diagram::QuadDrt, m.clone(), 0),
        Err(DerhamError::IncompatibleFamily { .. })
    ));
    assert!(GlobalSpace::build(&m, SpaceFamily::DQhatDiv, 0).is_err());
}
