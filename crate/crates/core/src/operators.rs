//! Assembly of the discrete differential operators as exact sparse matrices.
//!
//! Local matrices are computed once per cell congruence class and scattered.
//! Face rows hold the shifted-Legendre coefficients of `[[u·n_f]]` in the face
//! parameter `t` running from `P` to `Q`, with the unnormalized normal `n_f`.

use std::collections::HashMap;
use std::io::Write;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{DerhamError, Result};
use crate::exactla::{inverse, QMatrix};
use crate::fespace::{BasisFn, CodomainSpace, GlobalSpace};
use crate::mesh::{Mesh, Side};
use crate::poly::VecPoly;
use crate::rational::fmt_q;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum FirstOp {
    /// `∇⊥ p = (−∂y p, ∂x p)`
    GradPerp,
    /// `∇ p`
    Grad,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SecondOp {
    /// Cellwise `∇·u` and face jumps `[[u·n_f]]`.
    Div,
    /// Cellwise `−∂y ux + ∂x uy` and face jumps of the tangential component
    /// `uy n_x − ux n_y`; this is `Div` applied to the rotated field `(uy, −ux)`.
    Curl,
}

impl FirstOp {
    pub fn name(self) -> &'static str {
        match self {
            FirstOp::GradPerp => "grad_perp",
            FirstOp::Grad => "grad",
        }
    }
}

impl SecondOp {
    pub fn name(self) -> &'static str {
        match self {
            SecondOp::Div => "div_D'",
            SecondOp::Curl => "curl_D'",
        }
    }

    fn prepare(self, u: &VecPoly) -> VecPoly {
        match self {
            SecondOp::Div => u.clone(),
            SecondOp::Curl => u.rotate(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OpMatrix {
    pub matrix: QMatrix,
    pub domain: String,
    pub codomain: String,
    pub name: String,
}

impl OpMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Matrix-Market coordinate format with exact `p/q` entries and a JSON header line.
    pub fn write_matrix_market<W: Write>(&self, mut w: W, rank: Option<usize>) -> Result<()> {
        let header = serde_json::json!({
            "name": self.name,
            "domain": self.domain,
            "codomain": self.codomain,
            "nnz": self.matrix.nnz(),
            "rank_if_computed": rank,
        });
        writeln!(w, "%%MatrixMarket matrix coordinate rational general")?;
        writeln!(w, "% {header}")?;
        writeln!(w, "{} {} {}", self.rows(), self.cols(), self.matrix.nnz())?;
        for (i, j, v) in self.matrix.entries() {
            writeln!(w, "{} {} {}", i + 1, j + 1, fmt_q(v))?;
        }
        Ok(())
    }
}

/// `∇⊥` or `∇` from a continuous scalar space into a discontinuous vector space.
/// Fails if the image of some basis function leaves the target space.
pub fn assemble_first(mesh: &Mesh, a: &GlobalSpace, b: &GlobalSpace, op: FirstOp) -> Result<OpMatrix> {
    if !a.family.is_continuous() || !b.family.is_vector() {
        return Err(DerhamError::IncompatibleFamily {
            family: format!("{} -> {}", a.family.name(), b.family.name()),
            target: op.name().into(),
        });
    }
    let mut local: HashMap<usize, Vec<Vec<crate::rational::Q>>> = HashMap::new();
    let mut m = QMatrix::zeros(b.dim, a.dim);
    for (ci, c) in mesh.cells.iter().enumerate() {
        if !local.contains_key(&c.class) {
            let ab = a.class_basis(c);
            let bb = b.class_basis(c);
            let mut cols = Vec::new();
            for (n, phi) in ab.elements.iter().enumerate() {
                let p = phi.as_scalar().expect("scalar basis");
                let img = match op {
                    FirstOp::GradPerp => VecPoly::grad_perp(p),
                    FirstOp::Grad => VecPoly::grad(p),
                };
                let coords = bb
                    .coordinizer
                    .coords(&BasisFn::Vector(img))
                    .ok_or_else(|| DerhamError::Containment {
                        op: op.name().into(),
                        space: b.family.name(),
                        cell: ci,
                        column: n,
                    })?;
                cols.push(coords);
            }
            local.insert(c.class, cols);
        }
        let cols = &local[&c.class];
        for (n, col) in cols.iter().enumerate() {
            let gj = a.cell_dofs[ci][n];
            for (r, v) in col.iter().enumerate() {
                if !v.is_zero() {
                    // shared scalar dofs see the same value from every cell
                    m.set(b.cell_dofs[ci][r], gj, v.clone());
                }
            }
        }
    }
    Ok(OpMatrix {
        matrix: m,
        domain: a.family.name(),
        codomain: b.family.name(),
        name: op.name().into(),
    })
}

/// Distributional divergence (or curl) from a discontinuous vector space into a
/// codomain product. Fails if a cellwise derivative leaves the cell factor or a
/// face jump exceeds the face degree.
pub fn assemble_second(mesh: &Mesh, b: &GlobalSpace, c: &CodomainSpace, op: SecondOp) -> Result<OpMatrix> {
    if !b.family.is_vector() {
        return Err(DerhamError::IncompatibleFamily {
            family: b.family.name(),
            target: op.name().into(),
        });
    }
    let k = c.k;
    let off = c.face_offset();
    let mut m = QMatrix::zeros(c.dim, b.dim);
    let mut cell_local: HashMap<usize, Vec<Vec<crate::rational::Q>>> = HashMap::new();
    for (ci, cell) in mesh.cells.iter().enumerate() {
        let bb = b.class_basis(cell);
        if !cell_local.contains_key(&cell.class) {
            let mut cols = Vec::new();
            for (n, e) in bb.elements.iter().enumerate() {
                let u = op.prepare(e.as_vector().expect("vector basis"));
                let d = u.div();
                let coords = match &c.cell {
                    Some(cs) => cs.class_basis(cell).coordinizer.coords(&BasisFn::Scalar(d)),
                    None => d.is_zero().then(Vec::new),
                };
                let coords = coords.ok_or_else(|| DerhamError::Membership {
                    what: format!("cellwise {} not in the cell factor", op.name()),
                    entity: format!("cell {ci}"),
                    column: n,
                })?;
                cols.push(coords);
            }
            cell_local.insert(cell.class, cols);
        }
        for (n, col) in cell_local[&cell.class].iter().enumerate() {
            let gj = b.cell_dofs[ci][n];
            if let Some(cs) = &c.cell {
                for (r, v) in col.iter().enumerate() {
                    m.add_to(cs.cell_dofs[ci][r], gj, v);
                }
            }
        }
    }
    let jumps = assemble_face_jumps(mesh, b, k, op)?;
    for (i, j, v) in jumps.entries() {
        m.add_to(off + i, j, v);
    }
    Ok(OpMatrix {
        matrix: m,
        domain: b.family.name(),
        codomain: c.family().name(),
        name: op.name().into(),
    })
}

/// Face rows only: Legendre coefficients (degree `≤ k`) of `[[u·n_f]]` for
/// every basis function of `b`, one block of `k+1` rows per face.
pub fn assemble_face_jumps(mesh: &Mesh, b: &GlobalSpace, k: usize, op: SecondOp) -> Result<QMatrix> {
    let mut m = QMatrix::zeros(mesh.n_faces() * (k + 1), b.dim);
    let mut face_local: HashMap<(usize, usize), Vec<Vec<crate::rational::Q>>> = HashMap::new();
    for (ci, cell) in mesh.cells.iter().enumerate() {
        let bb = b.class_basis(cell);
        for (lf, cf) in cell.faces.iter().enumerate() {
            let key = (cell.class, lf);
            if !face_local.contains_key(&key) {
                let normal = &mesh.faces[cf.face].normal;
                let mut cols = Vec::new();
                for (n, e) in bb.elements.iter().enumerate() {
                    let u = op.prepare(e.as_vector().expect("vector basis"));
                    let tr = u.dot_const(normal).restrict(&cf.p_local, &cf.q_local);
                    if tr.degree().is_some_and(|d| d > k) {
                        return Err(DerhamError::Membership {
                            what: format!("normal trace of degree {} > {k}", tr.degree().unwrap()),
                            entity: format!("face {} of cell {ci}", cf.face),
                            column: n,
                        });
                    }
                    let mut lc = tr.legendre_coeffs();
                    lc.resize(k + 1, crate::rational::Q::zero());
                    cols.push(lc);
                }
                face_local.insert(key, cols);
            }
            let sign = match cf.side {
                Side::Right => crate::rational::Q::one(),
                Side::Left => -crate::rational::Q::one(),
            };
            for (n, col) in face_local[&key].iter().enumerate() {
                let gj = b.cell_dofs[ci][n];
                for (i, v) in col.iter().enumerate() {
                    if !v.is_zero() {
                        m.add_to(cf.face * (k + 1) + i, gj, &(v * &sign));
                    }
                }
            }
        }
    }
    Ok(m)
}

/// Inverse of a matrix that is block diagonal up to a permutation; blocks are
/// the connected components of its sparsity graph.
pub fn block_inverse(g: &QMatrix) -> Result<QMatrix> {
    let n = g.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for (i, j, _) in g.entries() {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
        }
    }
    let mut blocks: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        blocks.entry(r).or_default().push(i);
    }
    let mut out = QMatrix::zeros(n, n);
    for idx in blocks.values() {
        let rows: Vec<Vec<crate::rational::Q>> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| g.get(i, j)).collect())
            .collect();
        let inv = inverse(&QMatrix::from_dense(&rows))?;
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out.set(i, j, inv.get(a, b));
            }
        }
    }
    Ok(out)
}

/// `D⋆ = G_dom⁻¹ Dᵀ G_cod`, so that `⟨D u, v⟩_cod = ⟨u, D⋆ v⟩_dom`.
pub fn adjoint(d: &QMatrix, g_dom: &QMatrix, g_cod: &QMatrix) -> Result<QMatrix> {
    if g_dom.nrows() != d.ncols() || g_cod.nrows() != d.nrows() {
        return Err(DerhamError::DimensionMismatch("adjoint: Gram sizes".into()));
    }
    block_inverse(g_dom)?.mul(&d.transpose().mul(g_cod)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::rank;
    use crate::fespace::{CellFactor, FaceFactor, SpaceFamily};
    use crate::mesh::MeshKind;
    use crate::rational::q;

    #[test]
    fn tri_grad_perp_rank() {
        let m = Mesh::unit(MeshKind::TriangularPeriodic, 2, 2).unwrap();
        let a = GlobalSpace::build(&m, SpaceFamily::PkContinuous, 1).unwrap();
        let b = GlobalSpace::build(&m, SpaceFamily::DPkVec, 1).unwrap();
        let d = assemble_first(&m, &a, &b, FirstOp::GradPerp).unwrap();
        assert_eq!(rank(&d.matrix), 15);
    }

    #[test]
    fn naive_rank() {
        let m = Mesh::unit(MeshKind::CartesianPeriodic, 2, 2).unwrap();
        let b = GlobalSpace::build(&m, SpaceFamily::DQkVecNaive, 0).unwrap();
        let c = CodomainSpace::build(&m, CellFactor::Empty, FaceFactor::DPk, 0).unwrap();
        let d = assemble_second(&m, &b, &c, SecondOp::Div).unwrap();
        assert_eq!(rank(&d.matrix), 4);
    }

    #[test]
    fn mispaired_space_is_rejected() {
        let m = Mesh::unit(MeshKind::CartesianPeriodic, 2, 2).unwrap();
        let b = GlobalSpace::build(&m, SpaceFamily::DQhatCurl, 1).unwrap();
        let c = CodomainSpace::build(&m, CellFactor::DQhatKm1, FaceFactor::DQk, 1).unwrap();
        assert!(matches!(
            assemble_second(&m, &b, &c, SecondOp::Div),
            Err(DerhamError::Membership { .. })
        ));
        assert!(assemble_second(&m, &b, &c, SecondOp::Curl).is_ok());
    }

    #[test]
    fn constant_field_has_zero_image() {
        let m = Mesh::unit(MeshKind::TriangularPeriodic, 2, 2).unwrap();
        let b = GlobalSpace::build(&m, SpaceFamily::DPkVec, 1).unwrap();
        let c = CodomainSpace::build(&m, CellFactor::DPkm1, FaceFactor::DPk, 1).unwrap();
        let d = assemble_second(&m, &b, &c, SecondOp::Div).unwrap();
        let u = b.constant_field(&m, &q(1), &q(0)).unwrap();
        assert!(d.matrix.mul_vec(&u).iter().all(|v| v.is_zero()));
    }

    #[test]
    fn matrix_market_export() {
        let mut mm = QMatrix::zeros(2, 2);
        mm.set(0, 1, Q::new(1.into(), 3.into()));
        let op = OpMatrix {
            matrix: mm,
            domain: "a".into(),
            codomain: "b".into(),
            name: "t".into(),
        };
        let mut buf = Vec::new();
        op.write_matrix_market(&mut buf, Some(1)).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("1 2 1/3"));
        assert!(s.contains("\"nnz\":1"));
    }

    use crate::rational::Q;
}
