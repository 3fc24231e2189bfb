//! Global verification of the discrete complexes on periodic meshes.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DerhamError, Result};
use crate::exactla::{direct_sum_check, float_rank, rank, rank_nullspace, span_compare, QMatrix};
use crate::fespace::{
    expected_global_dim, expected_local_dim, BasisFn, CellFactor, ClassBasis, CodomainSpace, Coordinizer, FaceFactor,
    FaceMetric, GlobalSpace, SpaceFamily,
};
use crate::mesh::{Mesh, MeshKind};
use crate::operators::{assemble_face_jumps, assemble_first, assemble_second, FirstOp, OpMatrix, SecondOp};
use crate::poly::{Poly, VecPoly};
use crate::rational::{q, Q};
use crate::report::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Diagram {
    TriDp,
    TriDpGrad,
    QuadEnriched,
    QuadEnrichedGrad,
    TriDrt,
    TriDn,
    QuadDrt,
    QuadDn,
    QuadNaiveK0,
}

/// Spaces and operators of one diagram.
#[derive(Clone, Copy, Debug)]
pub struct DiagramParts {
    pub a: SpaceFamily,
    pub b: SpaceFamily,
    pub cell: CellFactor,
    pub face: FaceFactor,
    pub first: FirstOp,
    pub second: SecondOp,
}

impl Diagram {
    pub const ALL: [Diagram; 9] = [
        Diagram::TriDp,
        Diagram::TriDpGrad,
        Diagram::QuadEnriched,
        Diagram::QuadEnrichedGrad,
        Diagram::TriDrt,
        Diagram::TriDn,
        Diagram::QuadDrt,
        Diagram::QuadDn,
        Diagram::QuadNaiveK0,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Diagram::TriDp => "tri-dp",
            Diagram::TriDpGrad => "tri-dp-grad",
            Diagram::QuadEnriched => "quad-enriched",
            Diagram::QuadEnrichedGrad => "quad-enriched-grad",
            Diagram::TriDrt => "tri-drt",
            Diagram::TriDn => "tri-dn",
            Diagram::QuadDrt => "quad-drt",
            Diagram::QuadDn => "quad-dn",
            Diagram::QuadNaiveK0 => "quad-naive-k0",
        }
    }

    /// Human-readable statement name.
    pub fn title(self) -> &'static str {
        match self {
            Diagram::TriDp => "Tri-dP-curl/div: P_{k+1} -grad_perp-> dP_k^2 -div-> dP_{k-1}(C) x dP_k(F)",
            Diagram::TriDpGrad => "Tri-dP-grad/curl: P_{k+1} -grad-> dP_k^2 -curl-> dP_{k-1}(C) x dP_k(F)",
            Diagram::QuadEnriched => {
                "Quad-enriched-curl/div: Q_{k+1} -grad_perp-> dQhat_k^div -div-> dQhat_{k-1}(C) x dQ_k(F)"
            }
            Diagram::QuadEnrichedGrad => {
                "Quad-enriched-grad/curl: Q_{k+1} -grad-> dQhat_k^curl -curl-> dQhat_{k-1}(C) x dQ_k(F)"
            }
            Diagram::TriDrt => "Tri-dRT: P_{k+1} -grad_perp-> dRT_{k+1} -div-> dP_k(C) x dP_k(F)",
            Diagram::TriDn => "Tri-dN: P_{k+1} -grad-> dN_{k+1} -curl-> dP_k(C) x dP_k(F)",
            Diagram::QuadDrt => "Quad-dRT: Q_{k+1} -grad_perp-> dRT_{k+1} -div-> dQ_k(C) x dP_k(F)",
            Diagram::QuadDn => "Quad-dN: Q_{k+1} -grad-> dN_{k+1} -curl-> dQ_k(C) x dP_k(F)",
            Diagram::QuadNaiveK0 => "Quad-naive-k0: dQ_0^2 -div-> dP_0(F)",
        }
    }

    pub fn mesh_kind(self) -> MeshKind {
        match self {
            Diagram::TriDp | Diagram::TriDpGrad | Diagram::TriDrt | Diagram::TriDn => MeshKind::TriangularPeriodic,
            _ => MeshKind::CartesianPeriodic,
        }
    }

    /// `None` for the naive diagram, which has no scalar space.
    pub fn parts(self) -> Option<DiagramParts> {
        use CellFactor as C;
        use FaceFactor as F;
        use FirstOp::*;
        use SecondOp::*;
        use SpaceFamily as S;
        let p = |a, b, cell, face, first, second| DiagramParts {
            a,
            b,
            cell,
            face,
            first,
            second,
        };
        Some(match self {
            Diagram::TriDp => p(S::PkContinuous, S::DPkVec, C::DPkm1, F::DPk, GradPerp, Div),
            Diagram::TriDpGrad => p(S::PkContinuous, S::DPkVec, C::DPkm1, F::DPk, Grad, Curl),
            Diagram::QuadEnriched => p(S::QkContinuous, S::DQhatDiv, C::DQhatKm1, F::DQk, GradPerp, Div),
            Diagram::QuadEnrichedGrad => p(S::QkContinuous, S::DQhatCurl, C::DQhatKm1, F::DQk, Grad, Curl),
            Diagram::TriDrt => p(S::PkContinuous, S::DRtTri, C::DPk, F::DPk, GradPerp, Div),
            Diagram::TriDn => p(S::PkContinuous, S::DNTri, C::DPk, F::DPk, Grad, Curl),
            Diagram::QuadDrt => p(S::QkContinuous, S::DRtQuad, C::DQk, F::DPk, GradPerp, Div),
            Diagram::QuadDn => p(S::QkContinuous, S::DNQuad, C::DQk, F::DPk, Grad, Curl),
            Diagram::QuadNaiveK0 => return None,
        })
    }
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Diagram {
    type Err = DerhamError;
    fn from_str(s: &str) -> Result<Self> {
        Diagram::ALL
            .into_iter()
            .find(|d| d.tag() == s)
            .ok_or_else(|| DerhamError::InvalidInput(format!("unknown diagram {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct DiagramSpec {
    pub diagram: Diagram,
    pub mesh: Mesh,
    pub k: usize,
}

impl DiagramSpec {
    pub fn new(diagram: Diagram, mesh: Mesh, k: usize) -> Result<Self> {
        if mesh.kind != diagram.mesh_kind() {
            return Err(DerhamError::IncompatibleFamily {
                family: diagram.tag().into(),
                target: format!("{:?} mesh", mesh.kind),
            });
        }
        if diagram == Diagram::QuadNaiveK0 && k != 0 {
            return Err(DerhamError::InvalidInput(
                "quad-naive-k0 is defined for k = 0 only".into(),
            ));
        }
        Ok(Self { diagram, mesh, k })
    }

    pub fn unit(diagram: Diagram, nx: usize, ny: usize, k: usize) -> Result<Self> {
        Self::new(diagram, Mesh::unit(diagram.mesh_kind(), nx, ny)?, k)
    }

    pub fn label(&self) -> String {
        format!("{} {} k={}", self.diagram.tag(), self.mesh.describe(), self.k)
    }
}

/// Assembled spaces and operators of a diagram.
#[derive(Clone, Debug)]
pub struct Complex {
    pub spec: DiagramSpec,
    pub parts: DiagramParts,
    pub a: GlobalSpace,
    pub b: GlobalSpace,
    pub c: CodomainSpace,
    pub d1: OpMatrix,
    pub d2: OpMatrix,
}

impl Complex {
    pub fn build(spec: &DiagramSpec) -> Result<Self> {
        let parts = spec.diagram.parts().ok_or_else(|| {
            DerhamError::InvalidInput("the naive diagram has no scalar space; use naive_quad_diagnostic".into())
        })?;
        let m = &spec.mesh;
        let a = GlobalSpace::build(m, parts.a, spec.k)?;
        let b = GlobalSpace::build(m, parts.b, spec.k)?;
        let c = CodomainSpace::build(m, parts.cell, parts.face, spec.k)?;
        let d1 = assemble_first(m, &a, &b, parts.first)?;
        let d2 = assemble_second(m, &b, &c, parts.second)?;
        Ok(Self {
            spec: spec.clone(),
            parts,
            a,
            b,
            c,
            d1,
            d2,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.spec.mesh
    }

    /// Coefficients of the constant fields `(1,0)` and `(0,1)` in `B`.
    pub fn constant_fields(&self) -> Result<QMatrix> {
        let m = self.mesh();
        let ex = self.b.constant_field(m, &Q::one(), &Q::zero())?;
        let ey = self.b.constant_field(m, &Q::zero(), &Q::one())?;
        Ok(QMatrix::from_cols(self.b.dim, &[ex, ey]))
    }

    /// The uniform element in the parametric codomain metric, where it is rational.
    pub fn uniform_parametric(&self) -> Result<Vec<Q>> {
        let m = self.mesh();
        let mut u = vec![Q::zero(); self.c.dim];
        if let Some(cs) = &self.c.cell {
            let one = cs.interpolate_cellwise(m, |_| BasisFn::Scalar(Poly::one()))?;
            u[..cs.dim].clone_from_slice(&one);
        }
        let off = self.c.face_offset();
        for dofs in &self.c.face.face_dofs {
            u[off + dofs[0]] = Q::one();
        }
        Ok(u)
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Compare SVD ranks (at this relative tolerance) with the exact ranks.
    pub float_cross_check: Option<f64>,
    /// Above this many columns in `B`, ranks are computed in floating point only.
    pub max_exact_cols: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            float_cross_check: None,
            max_exact_cols: std::env::var("DERHAM_MAX_EXACT_COLS").ok().and_then(|v| v.parse().ok()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CohomologyReport {
    pub diagram: Diagram,
    pub mesh: String,
    pub k: usize,
    pub dim_a: usize,
    pub dim_b: usize,
    pub dim_c: usize,
    pub dim_ker_first: usize,
    pub rank_first: usize,
    pub dim_ker_second: usize,
    pub rank_second: usize,
    pub betti: (usize, usize, usize),
    pub backend: &'static str,
    pub report: Report,
}

impl CohomologyReport {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

fn expected_a(parts: &DiagramParts, k: usize, n: usize) -> usize {
    expected_global_dim(parts.a, k, n)
}

fn is_multiple_of_ones(v: &[Q]) -> bool {
    v.first().is_some_and(|x| !x.is_zero()) && v.iter().all(|x| *x == v[0])
}

/// Runs every check of a diagram.
pub fn verify_diagram(spec: &DiagramSpec, opts: &VerifyOptions) -> Result<CohomologyReport> {
    if spec.diagram == Diagram::QuadNaiveK0 {
        let r = naive_quad_diagnostic(&spec.mesh)?;
        return Ok(CohomologyReport {
            diagram: spec.diagram,
            mesh: spec.mesh.describe(),
            k: 0,
            dim_a: 0,
            dim_b: r.dim_b,
            dim_c: r.dim_c,
            dim_ker_first: 0,
            rank_first: 0,
            dim_ker_second: r.kernel_dim,
            rank_second: r.rank,
            betti: (0, r.kernel_dim, r.dim_c - r.rank),
            backend: "exact",
            report: r.report,
        });
    }
    let cx = Complex::build(spec)?;
    let mesh = &spec.mesh;
    let k = spec.k;
    let n = mesh.n_cells();
    let parts = cx.parts;
    let mut rep = Report::new(spec.label());
    rep.witness("title", spec.diagram.title());

    let (da, db, dc) = (cx.a.dim, cx.b.dim, cx.c.dim);
    rep.check("dim A", expected_a(&parts, k, n), da);
    rep.check("dim B", cx.b.expected_dim(), db);
    rep.check("dim C", cx.c.expected_dim(mesh), dc);

    let exact = opts.max_exact_cols.is_none_or(|cap| db <= cap);
    if !exact {
        let tol = opts.float_cross_check.unwrap_or(1e-10);
        let r1 = float_rank(&cx.d1.matrix.to_f64(), tol);
        let r2 = float_rank(&cx.d2.matrix.to_f64(), tol);
        rep.check("rank first (float)", da - 1, r1);
        rep.check("dim ker second (float)", r1 + 2, db - r2);
        rep.check("rank second (float)", dc - 1, r2);
        rep.witness("note", "exact budget exceeded; float ranks are advisory");
        return Ok(CohomologyReport {
            diagram: spec.diagram,
            mesh: mesh.describe(),
            k,
            dim_a: da,
            dim_b: db,
            dim_c: dc,
            dim_ker_first: da - r1,
            rank_first: r1,
            dim_ker_second: db - r2,
            rank_second: r2,
            betti: (da - r1, db - r2 - r1, dc - r2),
            backend: "float",
            report: rep.finish(),
        });
    }

    // (a) kernel of the first operator is the constants
    let rn1 = rank_nullspace(&cx.d1.matrix);
    rep.check("dim ker first", 1, rn1.nullity);
    rep.check("rank first", da - 1, rn1.rank);
    rep.check_true(
        "ker first = constants",
        rn1.nullspace.len() == 1 && is_multiple_of_ones(&rn1.nullspace[0]),
    );

    // (b) the composition vanishes
    let comp = cx.d2.matrix.mul(&cx.d1.matrix)?;
    rep.check_true("second o first = 0", comp.is_zero());

    // (c) ker second = Range first (+) constant fields
    let rn2 = rank_nullspace(&cx.d2.matrix);
    rep.check("dim ker second", rn1.rank + 2, rn2.nullity);
    let kfields = cx.constant_fields()?;
    let ker2 = QMatrix::from_cols(db, &rn2.nullspace);
    let range_plus_k = cx.d1.matrix.hstack(&kfields);
    let cert = span_compare(&range_plus_k, &ker2)?;
    rep.check(
        "ker second vs Range first + K",
        "Equal".to_string(),
        format!("{:?}", cert.relation),
    );
    let gb = cx.b.gram(mesh, FaceMetric::Parametric)?;
    let ds = direct_sum_check(&[cx.d1.matrix.clone(), kfields.clone()], Some(&gb))?;
    rep.check_true("Range first (+) K direct", ds.direct);
    rep.check_true("Range first _|_ K (L2)", ds.orthogonal == Some(true));
    rep.check("dim K", 2, ds.part_ranks[1]);

    // harmonic space: ker second ∩ Range(first)^⊥
    let h = harmonic_space(&cx.d1.matrix, &ker2, &gb)?;
    rep.check("dim harmonic", 2, h.ncols());
    let hc = span_compare(&h, &kfields)?;
    rep.check(
        "harmonic = constant fields",
        "Equal".to_string(),
        format!("{:?}", hc.relation),
    );

    // (d) codomain = Range second (+) uniform element
    rep.check("rank second", dc - 1, rn2.rank);
    let r = cx.c.uniform_functional(mesh);
    let annihilates = cx.d2.matrix.transpose().mul_vec(&r).iter().all(|v| v.is_zero());
    rep.check_true("uniform element _|_ Range second", annihilates);
    let kunif = cx.uniform_parametric()?;
    let gc_par = cx.c.gram(mesh, FaceMetric::Parametric)?;
    let ds2 = direct_sum_check(&[cx.d2.matrix.clone(), QMatrix::from_cols(dc, &[kunif])], Some(&gc_par))?;
    rep.check_true("Range second (+) k direct", ds2.direct);
    rep.check("dim Range second + k", dc, ds2.union_rank);
    rep.check_true(
        "Range second _|_ k (parametric face metric)",
        ds2.orthogonal == Some(true),
    );
    if let Ok(kunif_arc) = cx.c.uniform_element(mesh) {
        let g_arc = cx.c.stored_gram(mesh)?;
        let ds3 = direct_sum_check(
            &[cx.d2.matrix.clone(), QMatrix::from_cols(dc, &[kunif_arc])],
            Some(&g_arc),
        )?;
        rep.check_true(
            "Range second _|_ k (arc-length face metric)",
            ds3.orthogonal == Some(true),
        );
        rep.check("dim Range second + k (arc length)", dc, ds3.union_rank);
    }

    // (e) quotient identities and cohomology dimensions
    let betti = (rn1.nullity, rn2.nullity - rn1.rank, dc - rn2.rank);
    rep.check("b0", 1, betti.0);
    rep.check("b1", 2, betti.1);
    rep.check("b2", 1, betti.2);
    rep.check("rank first + rank second + 2 = dim B", db, rn1.rank + rn2.rank + 2);

    if let Some(tol) = opts.float_cross_check {
        rep.check("float rank first", rn1.rank, float_rank(&cx.d1.matrix.to_f64(), tol));
        rep.check("float rank second", rn2.rank, float_rank(&cx.d2.matrix.to_f64(), tol));
    }

    Ok(CohomologyReport {
        diagram: spec.diagram,
        mesh: mesh.describe(),
        k,
        dim_a: da,
        dim_b: db,
        dim_c: dc,
        dim_ker_first: rn1.nullity,
        rank_first: rn1.rank,
        dim_ker_second: rn2.nullity,
        rank_second: rn2.rank,
        betti,
        backend: "exact",
        report: rep.finish(),
    })
}

/// Columns spanning `ker2 ∩ Range(d1)^⊥` under the Gram matrix `g`.
pub fn harmonic_space(d1: &QMatrix, ker2: &QMatrix, g: &QMatrix) -> Result<QMatrix> {
    let constraint = d1.transpose().mul(g)?.mul(ker2)?;
    let ns = rank_nullspace(&constraint).nullspace;
    let cols: Vec<Vec<Q>> = ns.iter().map(|x| ker2.mul_vec(x)).collect();
    Ok(QMatrix::from_cols(ker2.nrows(), &cols))
}

/// Runs several specs concurrently; results keep the input order.
pub fn run_campaign(specs: &[DiagramSpec], opts: &VerifyOptions) -> Vec<Result<CohomologyReport>> {
    specs.par_iter().map(|s| verify_diagram(s, opts)).collect()
}

/// [`run_campaign`] on a dedicated pool of `workers` threads (0 = rayon default).
pub fn run_campaign_with_workers(
    specs: &[DiagramSpec],
    opts: &VerifyOptions,
    workers: usize,
) -> Result<Vec<Result<CohomologyReport>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| DerhamError::Backend(e.to_string()))?;
    Ok(pool.install(|| run_campaign(specs, opts)))
}

#[derive(Clone, Debug, Serialize)]
pub struct NaiveDiagnostic {
    pub nx: usize,
    pub ny: usize,
    pub dim_b: usize,
    pub dim_c: usize,
    pub rank: usize,
    pub kernel_dim: usize,
    /// `(2N − 1) − rank`
    pub rank_deficit: usize,
    /// `dim C − rank − 1`: extra cokernel dimensions beyond the single constant.
    pub harmonic_excess: usize,
    pub report: Report,
}

/// Coefficients of `(cx, cy)` on the cells selected by `pick`, zero elsewhere.
fn strip_field(mesh: &Mesh, b: &GlobalSpace, cx: i64, cy: i64, pick: impl Fn(usize, usize) -> bool) -> Result<Vec<Q>> {
    let mut out = vec![Q::zero(); b.dim];
    for (ci, c) in mesh.cells.iter().enumerate() {
        if pick(c.grid.0, c.grid.1) {
            let f = BasisFn::Vector(VecPoly::constant(q(cx), q(cy)));
            let coords = b.class_basis(c).coordinizer.coords(&f).expect("constants are in dQ_0");
            for (n, &g) in b.cell_dofs[ci].iter().enumerate() {
                out[g] = coords[n].clone();
            }
        }
    }
    Ok(out)
}

/// The operator `dQ_0² → dP_0(F)`, `u ↦ [[u·n_f]]`, on a Cartesian mesh.
pub fn naive_operator(mesh: &Mesh) -> Result<(GlobalSpace, CodomainSpace, OpMatrix)> {
    if mesh.kind != MeshKind::CartesianPeriodic {
        return Err(DerhamError::IncompatibleFamily {
            family: "quad-naive-k0".into(),
            target: "triangular mesh".into(),
        });
    }
    let b = GlobalSpace::build(mesh, SpaceFamily::DQkVecNaive, 0)?;
    let c = CodomainSpace::build(mesh, CellFactor::Empty, FaceFactor::DPk, 0)?;
    let d = assemble_second(mesh, &b, &c, SecondOp::Div)?;
    Ok((b, c, d))
}

pub fn naive_quad_diagnostic(mesh: &Mesh) -> Result<NaiveDiagnostic> {
    let (b, c, d) = naive_operator(mesh)?;
    let (nx, ny) = (mesh.nx, mesh.ny);
    let n = nx * ny;
    let mut rep = Report::new(format!("quad-naive-k0 {}", mesh.describe()));
    rep.expected_failure = true;
    let rn = rank_nullspace(&d.matrix);
    rep.check("rank = 2N - Nx - Ny", 2 * n - nx - ny, rn.rank);
    rep.check("dim ker = Nx + Ny", nx + ny, rn.nullity);
    rep.check("rank deficit vs 2N - 1", nx + ny - 1, 2 * n - 1 - rn.rank);
    rep.check("cokernel excess over 1", nx + ny - 1, c.dim - rn.rank - 1);

    // kernel = span of (1,0) on horizontal row strips and (0,1) on vertical column strips
    let mut strips = Vec::new();
    for j in 0..ny {
        strips.push(strip_field(mesh, &b, 1, 0, |_, jj| jj == j)?);
    }
    for i in 0..nx {
        strips.push(strip_field(mesh, &b, 0, 1, |ii, _| ii == i)?);
    }
    let w = &strips[0];
    rep.check_true(
        "(1,0) on row strip j=0 is in the kernel",
        d.matrix.mul_vec(w).iter().all(|v| v.is_zero()),
    );
    let bad = strip_field(mesh, &b, 1, 0, |i, _| i == 0)?;
    rep.check_true(
        "(1,0) on column strip i=0 is not in the kernel",
        d.matrix.mul_vec(&bad).iter().any(|v| !v.is_zero()),
    );
    let strip_m = QMatrix::from_cols(b.dim, &strips);
    let ker = QMatrix::from_cols(b.dim, &rn.nullspace);
    let cert = span_compare(&strip_m, &ker)?;
    rep.check(
        "kernel = strip fields",
        "Equal".to_string(),
        format!("{:?}", cert.relation),
    );
    rep.witness(
        "kernel_witness_row_strip_j0",
        w.iter().map(crate::rational::fmt_q).collect::<Vec<_>>(),
    );

    Ok(NaiveDiagnostic {
        nx,
        ny,
        dim_b: b.dim,
        dim_c: c.dim,
        rank: rn.rank,
        kernel_dim: rn.nullity,
        rank_deficit: 2 * n - 1 - rn.rank,
        harmonic_excess: c.dim - rn.rank - 1,
        report: rep.finish(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AppendixResult {
    pub n: usize,
    pub nullity: usize,
    pub nullity_closed_form: usize,
    pub report: Report,
}

/// Per-cell space `span{(1,0), (0,1), (2/Lx (m_x − x), 2/Ly (y − m_y))}` in local coordinates.
fn appendix_space(mesh: &Mesh) -> Result<GlobalSpace> {
    let c0 = &mesh.cells[0];
    let (hx, hy) = (&c0.sizes[0], &c0.sizes[1]);
    let bubble = VecPoly::new(
        &Poly::one() - &Poly::x().scale(&(q(2) / hx)),
        &Poly::y().scale(&(q(2) / hy)) - &Poly::one(),
    );
    let elements = vec![
        BasisFn::Vector(VecPoly::constant(Q::one(), Q::zero())),
        BasisFn::Vector(VecPoly::constant(Q::zero(), Q::one())),
        BasisFn::Vector(bubble),
    ];
    let coordinizer = Coordinizer::new(&elements)?;
    Ok(GlobalSpace {
        family: SpaceFamily::DQkVecNaive,
        k: 0,
        mesh_kind: mesh.kind,
        nx: mesh.nx,
        ny: mesh.ny,
        dim: 3 * mesh.n_cells(),
        classes: vec![ClassBasis { elements, coordinizer }],
        cell_dofs: (0..mesh.n_cells()).map(|c| vec![3 * c, 3 * c + 1, 3 * c + 2]).collect(),
        face_dofs: vec![],
    })
}

/// The jump equations written directly on the coefficients `(α, β, γ)`:
/// `α_{i+1,j} − α_{i,j} = −(γ_{i+1,j} + γ_{i,j})` across vertical faces and
/// `β_{i,j+1} − β_{i,j} = s·(γ_{i,j+1} + γ_{i,j})` across horizontal faces.
/// The trace computation gives `s = +1`; `s = −1` is the mirrored variant.
pub fn appendix_closed_form(nx: usize, ny: usize, beta_sign: i64) -> QMatrix {
    let n = nx * ny;
    let cell = |i: usize, j: usize| (j % ny) * nx + (i % nx);
    let mut m = QMatrix::zeros(2 * n, 3 * n);
    let mut row = 0;
    for j in 0..ny {
        for i in 0..nx {
            let (a, b) = (cell(i, j), cell(i + 1, j));
            m.add_to(row, 3 * b, &q(1));
            m.add_to(row, 3 * a, &q(-1));
            m.add_to(row, 3 * b + 2, &q(1));
            m.add_to(row, 3 * a + 2, &q(1));
            row += 1;
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            let (a, b) = (cell(i, j), cell(i, j + 1));
            m.add_to(row, 3 * b + 1, &q(1));
            m.add_to(row, 3 * a + 1, &q(-1));
            m.add_to(row, 3 * b + 2, &q(-beta_sign));
            m.add_to(row, 3 * a + 2, &q(-beta_sign));
            row += 1;
        }
    }
    m
}

pub fn appendix_nullity(mesh: &Mesh) -> Result<AppendixResult> {
    if mesh.kind != MeshKind::CartesianPeriodic {
        return Err(DerhamError::IncompatibleFamily {
            family: "appendix".into(),
            target: "triangular mesh".into(),
        });
    }
    let n = mesh.n_cells();
    let (nx, ny) = (mesh.nx, mesh.ny);
    let mut rep = Report::new(format!("appendix jump constraints {}", mesh.describe()));
    let space = appendix_space(mesh)?;
    let jumps = assemble_face_jumps(mesh, &space, 0, SecondOp::Div)?;
    let rn = rank_nullspace(&jumps);
    rep.check("nullity = N + 1", n + 1, rn.nullity);

    let closed = appendix_closed_form(nx, ny, 1);
    let cert = span_compare(&jumps.transpose(), &closed.transpose())?;
    rep.check(
        "trace equations = closed-form equations (row spaces)",
        "Equal".to_string(),
        format!("{:?}", cert.relation),
    );
    let mirrored = rank_nullspace(&appendix_closed_form(nx, ny, -1));
    rep.check("nullity of mirrored-sign equations", n + 1, mirrored.nullity);

    let gamma = |v: &[Q], i: usize, j: usize| v[3 * (j * nx + i) + 2].clone();
    let mut sums_ok = true;
    for v in &rn.nullspace {
        for j in 0..ny {
            sums_ok &= (0..nx).fold(Q::zero(), |acc, i| acc + gamma(v, i, j)).is_zero();
        }
        for i in 0..nx {
            sums_ok &= (0..ny).fold(Q::zero(), |acc, j| acc + gamma(v, i, j)).is_zero();
        }
    }
    rep.check_true(
        "sum_i gamma_ij = 0 and sum_j gamma_ij = 0 on every kernel vector",
        sums_ok,
    );
    rep.check("gamma free parameters N - Nx - Ny + 1", n + 1 - nx - ny, {
        let g_cols: Vec<Vec<Q>> = rn
            .nullspace
            .iter()
            .map(|v| (0..n).map(|c| v[3 * c + 2].clone()).collect())
            .collect();
        rank(&QMatrix::from_cols(n, &g_cols))
    });
    Ok(AppendixResult {
        n,
        nullity: rn.nullity,
        nullity_closed_form: rank_nullspace(&closed).nullity,
        report: rep.finish(),
    })
}

/// Per-cell dimension differences between the conforming-inspired and the
/// enriched or plain discontinuous spaces.
pub fn dof_comparison(k: usize) -> Result<Report> {
    use crate::fespace::local_basis;
    use crate::poly::RefCell;
    let mut rep = Report::new(format!("dof comparison k={k}"));
    let rt_q = local_basis(SpaceFamily::DRtQuad, k, RefCell::UnitSquare)?.dim();
    let hat = local_basis(SpaceFamily::DQhatDiv, k, RefCell::UnitSquare)?.dim();
    rep.check("dim dRT_{k+1}(quad) - dim dQhat_k^div", 1i64, rt_q as i64 - hat as i64);
    let rt_t = local_basis(SpaceFamily::DRtTri, k, RefCell::UnitTriangle)?.dim();
    let dp = local_basis(SpaceFamily::DPkVec, k, RefCell::UnitTriangle)?.dim();
    rep.check("dim dRT_{k+1}(tri) - dim dP_k^2", k as i64 + 1, rt_t as i64 - dp as i64);
    rep.check(
        "closed forms agree",
        expected_local_dim(SpaceFamily::DRtQuad, k) - 1,
        hat,
    );
    Ok(rep.finish())
}

/// Checks the two cellwise containments of rotated and plain gradients of
/// `Q_{k+1}` in the two enriched spaces; the pairing used by the quad diagrams.
pub fn enriched_pairing(k: usize) -> Result<Report> {
    let mesh = Mesh::unit(MeshKind::CartesianPeriodic, 2, 2)?;
    let a = GlobalSpace::build(&mesh, SpaceFamily::QkContinuous, k)?;
    let div = GlobalSpace::build(&mesh, SpaceFamily::DQhatDiv, k)?;
    let curl = GlobalSpace::build(&mesh, SpaceFamily::DQhatCurl, k)?;
    let mut rep = Report::new(format!("enriched pairing k={k}"));
    rep.check_true(
        "grad_perp Q_{k+1} in dQhat^div",
        assemble_first(&mesh, &a, &div, FirstOp::GradPerp).is_ok(),
    );
    rep.check_true(
        "grad Q_{k+1} in dQhat^curl",
        assemble_first(&mesh, &a, &curl, FirstOp::Grad).is_ok(),
    );
    rep.check_true(
        "grad_perp Q_{k+1} not in dQhat^curl",
        assemble_first(&mesh, &a, &curl, FirstOp::GradPerp).is_err(),
    );
    rep.check_true(
        "grad Q_{k+1} not in dQhat^div",
        assemble_first(&mesh, &a, &div, FirstOp::Grad).is_err(),
    );
    // rotation maps one enriched space onto the other
    let rot: Vec<Vec<Q>> = div.classes[0]
        .elements
        .iter()
        .map(|e| {
            let w = BasisFn::Vector(e.as_vector().expect("vector").unrotate());
            curl.classes[0].coordinizer.coords(&w).unwrap_or_default()
        })
        .collect();
    let all_in = rot.iter().all(|c| !c.is_empty());
    rep.check_true("rotation of dQhat^div lies in dQhat^curl", all_in);
    if all_in {
        let n = curl.classes[0].elements.len();
        rep.check(
            "rotation image has full dimension",
            n,
            rank(&QMatrix::from_cols(n, &rot)),
        );
    }
    Ok(rep.finish())
}
