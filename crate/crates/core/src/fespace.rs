//! Local bases and global finite element spaces.
//!
//! Every family is indexed by the complex degree `k`: the scalar space is of
//! degree `k+1`, the vector space of degree `k` (or its enrichment), and the
//! codomain factors are stated relative to `k` as well. Cell bases are written
//! in cell-local physical coordinates `X = x − offset`; for the Raviart–Thomas
//! and Nédélec families this is the intrinsic definition `P_k² + X·P̃_k`
//! rather than a plain pullback from the reference cell.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{DerhamError, Result};
use crate::exactla::{independent_cols, inverse, rank, QMatrix};
use crate::mesh::{Cell, CellShape, Mesh, MeshKind};
use crate::poly::{legendre_edge, EdgePoly, Poly, RefCell, VecPoly};
use crate::rational::{q, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CellFactor {
    /// `dP_{k−1}(C)`
    DPkm1,
    /// `dP_k(C)`
    DPk,
    /// `dQ_k(C)`
    DQk,
    /// `dQ_{k−1} + dQ_{k,k−1} + dQ_{k−1,k}` on cells
    DQhatKm1,
    /// no cell factor
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum FaceFactor {
    DPk,
    /// Same polynomial space as `DPk` on a one-dimensional face.
    DQk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SpaceFamily {
    PkContinuous,
    QkContinuous,
    DPkVec,
    DQkVecNaive,
    DQhatCurl,
    DQhatDiv,
    DRtTri,
    DNTri,
    DRtQuad,
    DNQuad,
    DPkFaces,
    DQkFaces,
    DPkCells,
    DQkCells,
    DQhatKm1Cells,
    CodomainProduct { cell: CellFactor, face: FaceFactor },
}

impl SpaceFamily {
    pub const ALL_SIMPLE: [SpaceFamily; 15] = [
        SpaceFamily::PkContinuous,
        SpaceFamily::QkContinuous,
        SpaceFamily::DPkVec,
        SpaceFamily::DQkVecNaive,
        SpaceFamily::DQhatCurl,
        SpaceFamily::DQhatDiv,
        SpaceFamily::DRtTri,
        SpaceFamily::DNTri,
        SpaceFamily::DRtQuad,
        SpaceFamily::DNQuad,
        SpaceFamily::DPkFaces,
        SpaceFamily::DQkFaces,
        SpaceFamily::DPkCells,
        SpaceFamily::DQkCells,
        SpaceFamily::DQhatKm1Cells,
    ];

    pub fn name(&self) -> String {
        match self {
            SpaceFamily::PkContinuous => "P_{k+1}".into(),
            SpaceFamily::QkContinuous => "Q_{k+1}".into(),
            SpaceFamily::DPkVec => "dP_k^2".into(),
            SpaceFamily::DQkVecNaive => "dQ_k^2".into(),
            SpaceFamily::DQhatCurl => "dQhat_k^curl".into(),
            SpaceFamily::DQhatDiv => "dQhat_k^div".into(),
            SpaceFamily::DRtTri => "dRT_{k+1}(tri)".into(),
            SpaceFamily::DNTri => "dN_{k+1}(tri)".into(),
            SpaceFamily::DRtQuad => "dRT_{k+1}(quad)".into(),
            SpaceFamily::DNQuad => "dN_{k+1}(quad)".into(),
            SpaceFamily::DPkFaces => "dP_k(F)".into(),
            SpaceFamily::DQkFaces => "dQ_k(F)".into(),
            SpaceFamily::DPkCells => "dP_k(C)".into(),
            SpaceFamily::DQkCells => "dQ_k(C)".into(),
            SpaceFamily::DQhatKm1Cells => "dQhat_{k-1}(C)".into(),
            SpaceFamily::CodomainProduct { cell, face } => {
                let c = match cell {
                    CellFactor::DPkm1 => "dP_{k-1}(C)",
                    CellFactor::DPk => "dP_k(C)",
                    CellFactor::DQk => "dQ_k(C)",
                    CellFactor::DQhatKm1 => "dQhat_{k-1}(C)",
                    CellFactor::Empty => "0",
                };
                let f = match face {
                    FaceFactor::DPk => "dP_k(F)",
                    FaceFactor::DQk => "dQ_k(F)",
                };
                format!("{c} x {f}")
            }
        }
    }

    pub fn is_vector(&self) -> bool {
        matches!(
            self,
            SpaceFamily::DPkVec
                | SpaceFamily::DQkVecNaive
                | SpaceFamily::DQhatCurl
                | SpaceFamily::DQhatDiv
                | SpaceFamily::DRtTri
                | SpaceFamily::DNTri
                | SpaceFamily::DRtQuad
                | SpaceFamily::DNQuad
        )
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, SpaceFamily::PkContinuous | SpaceFamily::QkContinuous)
    }

    pub fn is_face_space(&self) -> bool {
        matches!(self, SpaceFamily::DPkFaces | SpaceFamily::DQkFaces)
    }

    /// Whether the family can live on meshes of the given kind.
    pub fn compatible_with(&self, kind: MeshKind) -> bool {
        use SpaceFamily::*;
        match self {
            PkContinuous | DPkVec | DRtTri | DNTri | DPkCells => kind == MeshKind::TriangularPeriodic,
            QkContinuous | DQkVecNaive | DQhatCurl | DQhatDiv | DRtQuad | DNQuad | DQkCells | DQhatKm1Cells => {
                kind == MeshKind::CartesianPeriodic
            }
            DPkFaces | DQkFaces => true,
            CodomainProduct { cell, .. } => match cell {
                CellFactor::DPkm1 | CellFactor::DPk => kind == MeshKind::TriangularPeriodic,
                CellFactor::DQk | CellFactor::DQhatKm1 => kind == MeshKind::CartesianPeriodic,
                CellFactor::Empty => true,
            },
        }
    }
}

/// Closed-form dimension of a family on one cell (faces: on one face).
pub fn expected_local_dim(family: SpaceFamily, k: usize) -> usize {
    use SpaceFamily::*;
    match family {
        PkContinuous => (k + 2) * (k + 3) / 2,
        QkContinuous => (k + 2) * (k + 2),
        DPkVec => (k + 1) * (k + 2),
        DQkVecNaive => 2 * (k + 1) * (k + 1),
        DQhatCurl | DQhatDiv => 2 * (k + 1) * (k + 1) + 2 * k + 1,
        DRtTri | DNTri => (k + 1) * (k + 3),
        DRtQuad | DNQuad => 2 * (k + 1) * (k + 2),
        DPkFaces | DQkFaces => k + 1,
        DPkCells => (k + 1) * (k + 2) / 2,
        DQkCells => (k + 1) * (k + 1),
        DQhatKm1Cells => k * (k + 2),
        CodomainProduct { .. } => 0,
    }
}

/// Closed-form global dimension on a mesh with `n` cells.
pub fn expected_global_dim(family: SpaceFamily, k: usize, n: usize) -> usize {
    use SpaceFamily::*;
    match family {
        PkContinuous => n * (k + 1) * (k + 1) / 2,
        QkContinuous => n * (k + 1) * (k + 1),
        DPkVec => n * (k + 1) * (k + 2),
        DQkVecNaive => 2 * n * (k + 1) * (k + 1),
        DQhatCurl | DQhatDiv => n * (2 * (k + 1) * (k + 1) + 2 * k + 1),
        DRtTri | DNTri => n * (k + 1) * (k + 3),
        DRtQuad | DNQuad => 2 * n * (k + 1) * (k + 2),
        // faces: 3N/2 on triangles, 2N on quads; resolved by the caller's mesh kind
        DPkFaces | DQkFaces => unreachable!("face dimension depends on mesh kind"),
        DPkCells => n * (k + 1) * (k + 2) / 2,
        DQkCells => n * (k + 1) * (k + 1),
        DQhatKm1Cells => n * k * (k + 2),
        CodomainProduct { cell, face } => match (cell, face) {
            (CellFactor::DPkm1, _) => n * (k + 1) * (k + 3) / 2,
            (CellFactor::DPk, _) => n * (k + 1) * (k + 5) / 2,
            (CellFactor::DQhatKm1, _) => n * (k * k + 4 * k + 2),
            (CellFactor::DQk, _) => n * (k + 1) * (k + 3),
            (CellFactor::Empty, _) => unreachable!("face-only codomain depends on mesh kind"),
        },
    }
}

pub fn expected_face_dim(kind: MeshKind, k: usize, n: usize) -> usize {
    let nf = match kind {
        MeshKind::CartesianPeriodic => 2 * n,
        MeshKind::TriangularPeriodic => 3 * n / 2,
    };
    nf * (k + 1)
}

/// A scalar or vector basis function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BasisFn {
    Scalar(Poly),
    Vector(VecPoly),
}

type Key = (u8, u32, u32);

impl BasisFn {
    fn coeff_map(&self) -> BTreeMap<Key, Q> {
        let mut m = BTreeMap::new();
        match self {
            BasisFn::Scalar(p) => {
                for (&(i, j), c) in p.terms() {
                    m.insert((0, i, j), c.clone());
                }
            }
            BasisFn::Vector(v) => {
                for (&(i, j), c) in v.ux.terms() {
                    m.insert((0, i, j), c.clone());
                }
                for (&(i, j), c) in v.uy.terms() {
                    m.insert((1, i, j), c.clone());
                }
            }
        }
        m
    }

    pub fn as_scalar(&self) -> Option<&Poly> {
        match self {
            BasisFn::Scalar(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&VecPoly> {
        match self {
            BasisFn::Vector(v) => Some(v),
            _ => None,
        }
    }
}

/// Exact coordinates of polynomials in a fixed basis.
#[derive(Clone, Debug)]
pub struct Coordinizer {
    dim: usize,
    pivot_keys: Vec<Key>,
    inv: QMatrix,
    basis: Vec<BTreeMap<Key, Q>>,
}

impl Coordinizer {
    pub fn new(elems: &[BasisFn]) -> Result<Self> {
        let basis: Vec<BTreeMap<Key, Q>> = elems.iter().map(|e| e.coeff_map()).collect();
        let mut keys: Vec<Key> = basis.iter().flat_map(|m| m.keys().cloned()).collect();
        keys.sort_unstable();
        keys.dedup();
        let pos: HashMap<Key, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        // rows = basis functions, cols = keys; independent columns of this = pivot keys
        let mut m = QMatrix::zeros(basis.len(), keys.len());
        for (b, map) in basis.iter().enumerate() {
            for (k, c) in map {
                m.set(b, pos[k], c.clone());
            }
        }
        let piv = independent_cols(&m);
        if piv.len() != basis.len() {
            return Err(DerhamError::DimensionMismatch(format!(
                "basis of {} functions has rank {}",
                basis.len(),
                piv.len()
            )));
        }
        let sq = m.select_cols(&piv).transpose();
        let inv = inverse(&sq)?;
        Ok(Self {
            dim: basis.len(),
            pivot_keys: piv.iter().map(|&i| keys[i]).collect(),
            inv,
            basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinates of `f`, or `None` if `f` is not in the span.
    pub fn coords(&self, f: &BasisFn) -> Option<Vec<Q>> {
        let target = f.coeff_map();
        let rhs: Vec<Q> = self
            .pivot_keys
            .iter()
            .map(|k| target.get(k).cloned().unwrap_or_else(Q::zero))
            .collect();
        let x = self.inv.mul_vec(&rhs);
        let mut recon: BTreeMap<Key, Q> = BTreeMap::new();
        for (xi, b) in x.iter().zip(&self.basis) {
            if xi.is_zero() {
                continue;
            }
            for (k, c) in b {
                *recon.entry(*k).or_insert_with(Q::zero) += xi * c;
            }
        }
        recon.retain(|_, v| !v.is_zero());
        (recon == target).then_some(x)
    }
}

/// Graded monomials `(i, j)`: by total degree, then decreasing power of `x`.
fn graded(mut v: Vec<(u32, u32)>) -> Vec<(u32, u32)> {
    v.sort_by_key(|&(i, j)| (i + j, std::cmp::Reverse(i)));
    v.dedup();
    v
}

/// Monomials of total degree `≤ d` (empty for negative `d`).
pub fn p_monomials(d: i64) -> Vec<(u32, u32)> {
    let mut v = Vec::new();
    for t in 0..=d.max(-1) {
        for i in 0..=t {
            v.push((i as u32, (t - i) as u32));
        }
    }
    graded(v)
}

/// Monomials with `deg_x ≤ a`, `deg_y ≤ b`.
pub fn q_monomials(a: i64, b: i64) -> Vec<(u32, u32)> {
    let mut v = Vec::new();
    for i in 0..=a.max(-1) {
        for j in 0..=b.max(-1) {
            v.push((i as u32, j as u32));
        }
    }
    graded(v)
}

fn union(sets: &[Vec<(u32, u32)>]) -> Vec<(u32, u32)> {
    graded(sets.iter().flatten().cloned().collect())
}

fn scalars(m: &[(u32, u32)]) -> Vec<BasisFn> {
    m.iter().map(|&(i, j)| BasisFn::Scalar(Poly::monomial(i, j))).collect()
}

fn vectors(mx: &[(u32, u32)], my: &[(u32, u32)]) -> Vec<BasisFn> {
    let mut v: Vec<BasisFn> = mx
        .iter()
        .map(|&(i, j)| BasisFn::Vector(VecPoly::new(Poly::monomial(i, j), Poly::zero())))
        .collect();
    v.extend(
        my.iter()
            .map(|&(i, j)| BasisFn::Vector(VecPoly::new(Poly::zero(), Poly::monomial(i, j)))),
    );
    v
}

fn homogeneous(d: u32) -> Vec<(u32, u32)> {
    (0..=d).rev().map(|i| (i, d - i)).collect()
}

/// Lagrange basis of `P_m` (triangle) or `Q_m` (quad) on the cell with local
/// vertex map `X = A ξ`; returns the basis and each node's reference lattice
/// coordinates `(a, b)` (node at `ξ = (a/m, b/m)`).
fn lagrange(shape: CellShape, m: u32, a: &[[Q; 2]; 2]) -> Result<(Vec<BasisFn>, Vec<(u32, u32)>)> {
    let monos = match shape {
        CellShape::Tri => p_monomials(m as i64),
        CellShape::Quad => q_monomials(m as i64, m as i64),
    };
    let nodes: Vec<(u32, u32)> = match shape {
        CellShape::Tri => (0..=m).flat_map(|b| (0..=m - b).map(move |aa| (aa, b))).collect(),
        CellShape::Quad => (0..=m).flat_map(|b| (0..=m).map(move |aa| (aa, b))).collect(),
    };
    let mq = q(m as i64);
    let pts: Vec<[Q; 2]> = nodes
        .iter()
        .map(|&(na, nb)| {
            let xi = [q(na as i64) / &mq, q(nb as i64) / &mq];
            [
                &a[0][0] * &xi[0] + &a[0][1] * &xi[1],
                &a[1][0] * &xi[0] + &a[1][1] * &xi[1],
            ]
        })
        .collect();
    // V[node][mono]
    let vrows: Vec<Vec<Q>> = pts
        .iter()
        .map(|p| {
            monos
                .iter()
                .map(|&(i, j)| Poly::monomial(i, j).eval(&p[0], &p[1]))
                .collect()
        })
        .collect();
    let vinv = inverse(&QMatrix::from_dense(&vrows))?;
    let basis = (0..nodes.len())
        .map(|n| {
            let mut p = Poly::zero();
            for (r, &(i, j)) in monos.iter().enumerate() {
                p.add_term(i, j, vinv.get(r, n));
            }
            BasisFn::Scalar(p)
        })
        .collect();
    Ok((basis, nodes))
}

fn shape_of(cell: RefCell) -> CellShape {
    match cell {
        RefCell::UnitSquare => CellShape::Quad,
        RefCell::UnitTriangle => CellShape::Tri,
    }
}

fn family_ref(family: SpaceFamily) -> Option<RefCell> {
    use SpaceFamily::*;
    match family {
        PkContinuous | DPkVec | DRtTri | DNTri | DPkCells => Some(RefCell::UnitTriangle),
        QkContinuous | DQkVecNaive | DQhatCurl | DQhatDiv | DRtQuad | DNQuad | DQkCells | DQhatKm1Cells => {
            Some(RefCell::UnitSquare)
        }
        _ => None,
    }
}

/// Basis elements of a cell family on a cell with local linear map `a`.
fn cell_elems(family: SpaceFamily, k: usize, shape: CellShape, a: &[[Q; 2]; 2]) -> Result<Vec<BasisFn>> {
    use SpaceFamily::*;
    let ki = k as i64;
    let e = match family {
        PkContinuous | QkContinuous => lagrange(shape, k as u32 + 1, a)?.0,
        DPkVec => {
            let m = p_monomials(ki);
            vectors(&m, &m)
        }
        DQkVecNaive => {
            let m = q_monomials(ki, ki);
            vectors(&m, &m)
        }
        DQhatDiv | DQhatCurl => {
            let wide_x = union(&[q_monomials(ki, ki), q_monomials(ki + 1, ki - 1)]);
            let wide_y = union(&[q_monomials(ki, ki), q_monomials(ki - 1, ki + 1)]);
            let (k0, k1) = (k as u32, k as u32 + 1);
            if family == DQhatDiv {
                let mut v = vectors(&wide_x, &wide_y);
                v.push(BasisFn::Vector(VecPoly::new(
                    -&Poly::monomial(k1, k0),
                    Poly::monomial(k0, k1),
                )));
                v
            } else {
                let mut v = vectors(&wide_y, &wide_x);
                v.push(BasisFn::Vector(VecPoly::new(
                    Poly::monomial(k0, k1),
                    Poly::monomial(k1, k0),
                )));
                v
            }
        }
        DRtTri | DNTri => {
            let m = p_monomials(ki);
            let mut v = vectors(&m, &m);
            for (i, j) in homogeneous(k as u32) {
                let (x, y) = (Poly::monomial(i + 1, j), Poly::monomial(i, j + 1));
                v.push(BasisFn::Vector(if family == DRtTri {
                    VecPoly::new(x, y)
                } else {
                    VecPoly::new(-&y, x)
                }));
            }
            v
        }
        DRtQuad => vectors(&q_monomials(ki + 1, ki), &q_monomials(ki, ki + 1)),
        DNQuad => vectors(&q_monomials(ki, ki + 1), &q_monomials(ki + 1, ki)),
        DPkCells => scalars(&p_monomials(ki)),
        DQkCells => scalars(&q_monomials(ki, ki)),
        DQhatKm1Cells => scalars(&union(&[
            q_monomials(ki - 1, ki - 1),
            q_monomials(ki, ki - 1),
            q_monomials(ki - 1, ki),
        ])),
        other => {
            return Err(DerhamError::IncompatibleFamily {
                family: other.name(),
                target: "cell basis".into(),
            })
        }
    };
    Ok(e)
}

fn cell_factor_family(c: CellFactor, k: usize) -> Option<(SpaceFamily, usize)> {
    match c {
        CellFactor::DPkm1 => (k >= 1).then(|| (SpaceFamily::DPkCells, k - 1)),
        CellFactor::DPk => Some((SpaceFamily::DPkCells, k)),
        CellFactor::DQk => Some((SpaceFamily::DQkCells, k)),
        CellFactor::DQhatKm1 => Some((SpaceFamily::DQhatKm1Cells, k)),
        CellFactor::Empty => None,
    }
}

#[derive(Clone, Debug)]
pub struct LocalBasis {
    pub ref_cell: RefCell,
    pub family: SpaceFamily,
    pub k: usize,
    pub elements: Vec<BasisFn>,
}

impl LocalBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Exact rank of the coefficient matrix of the elements.
    pub fn rank(&self) -> usize {
        let maps: Vec<_> = self.elements.iter().map(|e| e.coeff_map()).collect();
        let mut keys: Vec<Key> = maps.iter().flat_map(|m| m.keys().cloned()).collect();
        keys.sort_unstable();
        keys.dedup();
        let pos: HashMap<Key, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let mut m = QMatrix::zeros(keys.len(), maps.len());
        for (b, map) in maps.iter().enumerate() {
            for (key, c) in map {
                m.set(pos[key], b, c.clone());
            }
        }
        rank(&m)
    }

    pub fn vectors(&self) -> Vec<VecPoly> {
        self.elements.iter().filter_map(|e| e.as_vector().cloned()).collect()
    }

    pub fn scalars(&self) -> Vec<Poly> {
        self.elements.iter().filter_map(|e| e.as_scalar().cloned()).collect()
    }
}

/// Local basis of a cell family on its reference cell.
pub fn local_basis(family: SpaceFamily, k: usize, cell: RefCell) -> Result<LocalBasis> {
    if family_ref(family) != Some(cell) {
        return Err(DerhamError::IncompatibleFamily {
            family: family.name(),
            target: cell.name().into(),
        });
    }
    let id = [[Q::one(), Q::zero()], [Q::zero(), Q::one()]];
    Ok(LocalBasis {
        ref_cell: cell,
        family,
        k,
        elements: cell_elems(family, k, shape_of(cell), &id)?,
    })
}

/// Basis of one congruence class of cells.
#[derive(Clone, Debug)]
pub struct ClassBasis {
    pub elements: Vec<BasisFn>,
    pub coordinizer: Coordinizer,
}

#[derive(Clone, Debug)]
pub struct GlobalSpace {
    pub family: SpaceFamily,
    pub k: usize,
    pub mesh_kind: MeshKind,
    pub nx: usize,
    pub ny: usize,
    pub dim: usize,
    /// Per congruence class; empty for face spaces.
    pub classes: Vec<ClassBasis>,
    /// Local-to-global map per cell; empty for face spaces.
    pub cell_dofs: Vec<Vec<usize>>,
    /// Local-to-global map per face; empty for cell spaces.
    pub face_dofs: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpaceDescriptor {
    pub family: String,
    pub k: usize,
    pub mesh: String,
    pub dim: usize,
    pub per_entity_counts: BTreeMap<String, usize>,
}

impl GlobalSpace {
    pub fn build(mesh: &Mesh, family: SpaceFamily, k: usize) -> Result<Self> {
        if !family.compatible_with(mesh.kind) || matches!(family, SpaceFamily::CodomainProduct { .. }) {
            return Err(DerhamError::IncompatibleFamily {
                family: family.name(),
                target: format!("{:?} mesh", mesh.kind),
            });
        }
        let mut sp = GlobalSpace {
            family,
            k,
            mesh_kind: mesh.kind,
            nx: mesh.nx,
            ny: mesh.ny,
            dim: 0,
            classes: Vec::new(),
            cell_dofs: Vec::new(),
            face_dofs: Vec::new(),
        };
        if family.is_face_space() {
            sp.face_dofs = (0..mesh.n_faces())
                .map(|f| (f * (k + 1)..(f + 1) * (k + 1)).collect())
                .collect();
            sp.dim = mesh.n_faces() * (k + 1);
            return Ok(sp);
        }
        let mut reps: Vec<Option<&Cell>> = vec![None; mesh.n_classes()];
        for c in &mesh.cells {
            reps[c.class].get_or_insert(c);
        }
        for rep in reps.into_iter().flatten() {
            let elements = cell_elems(family, k, rep.shape, &rep.linear)?;
            let coordinizer = Coordinizer::new(&elements)?;
            sp.classes.push(ClassBasis { elements, coordinizer });
        }
        if family.is_continuous() {
            let m = k + 1;
            let (gx, gy) = (mesh.nx * m, mesh.ny * m);
            let id = [[Q::one(), Q::zero()], [Q::zero(), Q::one()]];
            let shape = mesh.cells[0].shape;
            let (_, nodes) = lagrange(shape, m as u32, &id)?;
            let mut numbering: HashMap<(usize, usize), usize> = HashMap::new();
            for c in &mesh.cells {
                let (i, j) = c.grid;
                let dofs = nodes
                    .iter()
                    .map(|&(a, b)| {
                        let (a, b) = (a as usize, b as usize);
                        let (u, v) = match (shape, c.class) {
                            (CellShape::Quad, _) => (a, b),
                            (CellShape::Tri, 0) => (a + b, b),
                            (CellShape::Tri, _) => (a, a + b),
                        };
                        let key = ((i * m + u) % gx, (j * m + v) % gy);
                        let next = numbering.len();
                        *numbering.entry(key).or_insert(next)
                    })
                    .collect();
                sp.cell_dofs.push(dofs);
            }
            sp.dim = numbering.len();
        } else {
            let mut next = 0;
            for c in &mesh.cells {
                let n = sp.classes[c.class].elements.len();
                sp.cell_dofs.push((next..next + n).collect());
                next += n;
            }
            sp.dim = next;
        }
        Ok(sp)
    }

    pub fn class_basis(&self, cell: &Cell) -> &ClassBasis {
        &self.classes[cell.class]
    }

    pub fn local_dim(&self) -> usize {
        if self.family.is_face_space() {
            self.k + 1
        } else {
            self.classes[0].elements.len()
        }
    }

    /// Expected global dimension from the closed forms.
    pub fn expected_dim(&self) -> usize {
        let n = self.nx
            * self.ny
            * if self.mesh_kind == MeshKind::TriangularPeriodic {
                2
            } else {
                1
            };
        if self.family.is_face_space() {
            expected_face_dim(self.mesh_kind, self.k, n)
        } else {
            expected_global_dim(self.family, self.k, n)
        }
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        let mut per = BTreeMap::new();
        if self.family.is_face_space() {
            per.insert("face".into(), self.k + 1);
        } else if self.family.is_continuous() {
            let m = self.k + 1;
            let (pt, fa, ce) = match self.mesh_kind {
                // interior lattice nodes per entity of the fine Lagrange lattice
                MeshKind::TriangularPeriodic => (1, m - 1, (m - 1) * m.saturating_sub(2) / 2),
                MeshKind::CartesianPeriodic => (1, m - 1, (m - 1) * (m - 1)),
            };
            per.insert("point".into(), pt);
            per.insert("face".into(), fa);
            per.insert("cell".into(), ce);
        } else {
            per.insert("cell".into(), self.local_dim());
        }
        SpaceDescriptor {
            family: self.family.name(),
            k: self.k,
            mesh: format!("{}({}x{})", self.mesh_kind.short_name(), self.nx, self.ny),
            dim: self.dim,
            per_entity_counts: per,
        }
    }

    /// Restriction of a global coefficient vector to one cell.
    pub fn restrict(&self, mesh: &Mesh, coeffs: &[Q], cell: usize) -> BasisFn {
        let c = &mesh.cells[cell];
        let cb = self.class_basis(c);
        let mut s = Poly::zero();
        let mut v = VecPoly::zero();
        for (n, &g) in self.cell_dofs[cell].iter().enumerate() {
            if coeffs[g].is_zero() {
                continue;
            }
            match &cb.elements[n] {
                BasisFn::Scalar(p) => s = &s + &p.scale(&coeffs[g]),
                BasisFn::Vector(w) => v = &v + &w.scale(&coeffs[g]),
            }
        }
        if self.family.is_vector() {
            BasisFn::Vector(v)
        } else {
            BasisFn::Scalar(s)
        }
    }

    /// Global coefficients of a function given cell by cell (discontinuous spaces)
    /// or through a single global function in local coordinates.
    pub fn interpolate_cellwise<F>(&self, mesh: &Mesh, f: F) -> Result<Vec<Q>>
    where
        F: Fn(&Cell) -> BasisFn,
    {
        let mut out = vec![Q::zero(); self.dim];
        for (ci, c) in mesh.cells.iter().enumerate() {
            let target = f(c);
            let coords = self
                .class_basis(c)
                .coordinizer
                .coords(&target)
                .ok_or_else(|| DerhamError::Membership {
                    what: format!("function not in {}", self.family.name()),
                    entity: format!("cell {ci}"),
                    column: 0,
                })?;
            for (n, &g) in self.cell_dofs[ci].iter().enumerate() {
                if self.family.is_continuous() && !out[g].is_zero() && out[g] != coords[n] {
                    return Err(DerhamError::Membership {
                        what: "cellwise data is not continuous".into(),
                        entity: format!("cell {ci}"),
                        column: g,
                    });
                }
                out[g] = coords[n].clone();
            }
        }
        Ok(out)
    }

    /// Coefficients of the constant vector field `(cx, cy)`.
    pub fn constant_field(&self, mesh: &Mesh, cx: &Q, cy: &Q) -> Result<Vec<Q>> {
        let f = BasisFn::Vector(VecPoly::constant(cx.clone(), cy.clone()));
        self.interpolate_cellwise(mesh, |_| f.clone())
    }

    /// Checks that every global basis function of a continuous space has
    /// matching traces from both sides of every face, at `k+3` points per face.
    pub fn check_continuity(&self, mesh: &Mesh) -> bool {
        if !self.family.is_continuous() {
            return true;
        }
        let ns = self.k as i64 + 2;
        let samples: Vec<Q> = (0..=ns).map(|s| Q::new(s.into(), ns.into())).collect();
        // local traces on each face from each side, keyed by global dof
        let mut side_traces: Vec<[BTreeMap<usize, EdgePoly>; 2]> =
            vec![[BTreeMap::new(), BTreeMap::new()]; mesh.n_faces()];
        for (ci, c) in mesh.cells.iter().enumerate() {
            let cb = self.class_basis(c);
            for cf in &c.faces {
                let s = if cf.side == crate::mesh::Side::Left { 0 } else { 1 };
                for (n, &g) in self.cell_dofs[ci].iter().enumerate() {
                    let p = cb.elements[n].as_scalar().expect("scalar basis");
                    let tr = p.restrict(&cf.p_local, &cf.q_local);
                    let e = side_traces[cf.face][s].entry(g).or_insert_with(EdgePoly::zero);
                    *e = &*e + &tr;
                }
            }
        }
        side_traces.iter().all(|[l, r]| {
            let mut dofs: Vec<usize> = l.keys().chain(r.keys()).cloned().collect();
            dofs.sort_unstable();
            dofs.dedup();
            dofs.iter().all(|g| {
                let zero = EdgePoly::zero();
                let a = l.get(g).unwrap_or(&zero);
                let b = r.get(g).unwrap_or(&zero);
                samples.iter().all(|t| a.eval(t) == b.eval(t))
            })
        })
    }

    /// L² Gram matrix. Block diagonal for discontinuous cell spaces.
    pub fn gram(&self, mesh: &Mesh, metric: FaceMetric) -> Result<QMatrix> {
        let mut g = QMatrix::zeros(self.dim, self.dim);
        if self.family.is_face_space() {
            for (f, dofs) in self.face_dofs.iter().enumerate() {
                let len = face_measure(mesh, f, metric)?;
                for (i, &d) in dofs.iter().enumerate() {
                    g.set(d, d, &len / q(2 * i as i64 + 1));
                }
            }
            return Ok(g);
        }
        let z = [Q::zero(), Q::zero()];
        let mut local: Vec<Option<QMatrix>> = vec![None; self.classes.len()];
        for (ci, c) in mesh.cells.iter().enumerate() {
            let lg = local[c.class].get_or_insert_with(|| {
                let e = &self.classes[c.class].elements;
                let mut m = QMatrix::zeros(e.len(), e.len());
                for a in 0..e.len() {
                    for b in a..e.len() {
                        let prod = match (&e[a], &e[b]) {
                            (BasisFn::Scalar(p), BasisFn::Scalar(r)) => p * r,
                            (BasisFn::Vector(u), BasisFn::Vector(w)) => u.dot(w),
                            _ => unreachable!("mixed basis"),
                        };
                        let v = prod.integrate_affine(c.ref_cell(), &c.linear, &z);
                        m.set(a, b, v.clone());
                        m.set(b, a, v);
                    }
                }
                m
            });
            for (i, j, v) in lg.entries() {
                g.add_to(self.cell_dofs[ci][i], self.cell_dofs[ci][j], v);
            }
        }
        Ok(g)
    }
}

/// How face integrals are weighted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FaceMetric {
    /// True arc length; fails on faces with irrational length.
    ArcLength,
    /// Unit weight per face in the parameter `t ∈ [0,1]`.
    Parametric,
}

fn face_measure(mesh: &Mesh, f: usize, metric: FaceMetric) -> Result<Q> {
    match metric {
        FaceMetric::Parametric => Ok(Q::one()),
        FaceMetric::ArcLength => mesh.faces[f].length().ok_or_else(|| {
            DerhamError::InvalidInput(format!("face {f} has irrational length; use the parametric metric"))
        }),
    }
}

/// Product space `cell factor × face factor`; cell coordinates come first.
#[derive(Clone, Debug)]
pub struct CodomainSpace {
    pub cell_factor: CellFactor,
    pub face_factor: FaceFactor,
    pub k: usize,
    pub cell: Option<GlobalSpace>,
    pub face: GlobalSpace,
    pub dim: usize,
}

impl CodomainSpace {
    pub fn build(mesh: &Mesh, cell_factor: CellFactor, face_factor: FaceFactor, k: usize) -> Result<Self> {
        let fam = SpaceFamily::CodomainProduct {
            cell: cell_factor,
            face: face_factor,
        };
        if !fam.compatible_with(mesh.kind) {
            return Err(DerhamError::IncompatibleFamily {
                family: fam.name(),
                target: format!("{:?} mesh", mesh.kind),
            });
        }
        let cell = match cell_factor_family(cell_factor, k) {
            Some((f, d)) => {
                let s = GlobalSpace::build(mesh, f, d)?;
                (s.dim > 0).then_some(s)
            }
            None => None,
        };
        let ff = match face_factor {
            FaceFactor::DPk => SpaceFamily::DPkFaces,
            FaceFactor::DQk => SpaceFamily::DQkFaces,
        };
        let face = GlobalSpace::build(mesh, ff, k)?;
        let dim = cell.as_ref().map_or(0, |c| c.dim) + face.dim;
        Ok(Self {
            cell_factor,
            face_factor,
            k,
            cell,
            face,
            dim,
        })
    }

    pub fn family(&self) -> SpaceFamily {
        SpaceFamily::CodomainProduct {
            cell: self.cell_factor,
            face: self.face_factor,
        }
    }

    pub fn cell_dim(&self) -> usize {
        self.cell.as_ref().map_or(0, |c| c.dim)
    }

    pub fn face_offset(&self) -> usize {
        self.cell_dim()
    }

    pub fn expected_dim(&self, mesh: &Mesh) -> usize {
        match self.cell_factor {
            CellFactor::Empty => expected_face_dim(mesh.kind, self.k, mesh.n_cells()),
            _ => expected_global_dim(self.family(), self.k, mesh.n_cells()),
        }
    }

    /// Gram matrix of the product inner product: block diagonal, cells first.
    pub fn gram(&self, mesh: &Mesh, metric: FaceMetric) -> Result<QMatrix> {
        let fg = self.face.gram(mesh, metric)?;
        let mut g = QMatrix::zeros(self.dim, self.dim);
        if let Some(c) = &self.cell {
            for (i, j, v) in c.gram(mesh, metric)?.entries() {
                g.set(i, j, v.clone());
            }
        }
        let off = self.face_offset();
        for (i, j, v) in fg.entries() {
            g.set(off + i, off + j, v.clone());
        }
        Ok(g)
    }

    /// Riesz representative `G·𝕜` of the uniform element `𝕜` (value 1 on every
    /// cell and face), in the stored coordinates where face coordinates are
    /// Legendre coefficients of `[[u·n_f]]` with the unnormalized face normal.
    /// It is rational on every mesh: `∫_c φ` on cell functions and `δ_{i0}` on
    /// face modes.
    pub fn uniform_functional(&self, mesh: &Mesh) -> Vec<Q> {
        let mut r = vec![Q::zero(); self.dim];
        if let Some(c) = &self.cell {
            let z = [Q::zero(), Q::zero()];
            for (ci, cell) in mesh.cells.iter().enumerate() {
                for (n, &g) in c.cell_dofs[ci].iter().enumerate() {
                    let p = c.class_basis(cell).elements[n].as_scalar().expect("scalar");
                    r[g] = p.integrate_affine(cell.ref_cell(), &cell.linear, &z);
                }
            }
        }
        let off = self.face_offset();
        for dofs in &self.face.face_dofs {
            r[off + dofs[0]] = Q::one();
        }
        r
    }

    /// Coordinates of the uniform element when all face lengths are rational
    /// (face coordinates carry the factor `|f|` of the unnormalized normal).
    pub fn uniform_element(&self, mesh: &Mesh) -> Result<Vec<Q>> {
        let mut u = vec![Q::zero(); self.dim];
        if let Some(c) = &self.cell {
            let one = c.interpolate_cellwise(mesh, |_| BasisFn::Scalar(Poly::one()))?;
            u[..c.dim].clone_from_slice(&one);
        }
        let off = self.face_offset();
        for (f, dofs) in self.face.face_dofs.iter().enumerate() {
            u[off + dofs[0]] = face_measure(mesh, f, FaceMetric::ArcLength)?;
        }
        Ok(u)
    }

    /// Arc-length Gram in stored coordinates: face block `1/((2i+1)|f|)`.
    pub fn stored_gram(&self, mesh: &Mesh) -> Result<QMatrix> {
        let mut g = self.gram(mesh, FaceMetric::Parametric)?;
        let off = self.face_offset();
        for (f, dofs) in self.face.face_dofs.iter().enumerate() {
            let len = face_measure(mesh, f, FaceMetric::ArcLength)?;
            for (i, &d) in dofs.iter().enumerate() {
                g.set(off + d, off + d, Q::one() / (q(2 * i as i64 + 1) * &len));
            }
        }
        Ok(g)
    }
}

/// Legendre basis of a face factor, for reference.
pub fn face_basis(k: usize) -> Vec<EdgePoly> {
    (0..=k as u32).map(legendre_edge).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DimRow {
    pub space: String,
    pub k: usize,
    pub expected: usize,
    pub computed: usize,
}

/// Every applicable family on `mesh` for `k = 0..=k_max`, built and compared
/// against the closed-form dimension.
pub fn audit_dimensions(mesh: &Mesh, k_max: usize) -> Result<crate::report::Report> {
    let mut rep = crate::report::Report::new(format!("dimension audit {}", mesh.describe()));
    for k in 0..=k_max {
        for fam in SpaceFamily::ALL_SIMPLE {
            if !fam.compatible_with(mesh.kind) {
                continue;
            }
            let s = GlobalSpace::build(mesh, fam, k)?;
            rep.check(format!("k={k} dim {}", fam.name()), s.expected_dim(), s.dim);
            if !fam.is_face_space() {
                let lb = &s.classes[0];
                rep.check(
                    format!("k={k} local dim {}", fam.name()),
                    expected_local_dim(fam, k),
                    lb.elements.len(),
                );
            }
        }
        let codomains: &[(CellFactor, FaceFactor)] = match mesh.kind {
            MeshKind::TriangularPeriodic => &[(CellFactor::DPkm1, FaceFactor::DPk), (CellFactor::DPk, FaceFactor::DPk)],
            MeshKind::CartesianPeriodic => &[
                (CellFactor::DQhatKm1, FaceFactor::DQk),
                (CellFactor::DQk, FaceFactor::DPk),
            ],
        };
        for &(c, f) in codomains {
            let cs = CodomainSpace::build(mesh, c, f, k)?;
            rep.check(
                format!("k={k} dim {}", cs.family().name()),
                cs.expected_dim(mesh),
                cs.dim,
            );
        }
    }
    Ok(rep.finish())
}
