//! Periodic structured meshes of the 2-torus.
//!
//! Numbering: point `(i, j)` is `j·nx + i`; quads are row-major; the triangle
//! `t ∈ {0, 1}` of grid square `(i, j)` is `2(j·nx + i) + t`, with `t = 0` the
//! lower-right and `t = 1` the upper-left half of the square cut along its
//! low-left to up-right diagonal. Faces: x-faces (vertical) `j·nx + i`, then
//! y-faces (horizontal), then diagonals.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{DerhamError, Result};
use crate::poly::RefCell;
use crate::rational::{fmt_q, q, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeshKind {
    CartesianPeriodic,
    TriangularPeriodic,
}

impl MeshKind {
    pub fn ref_cell(self) -> RefCell {
        match self {
            MeshKind::CartesianPeriodic => RefCell::UnitSquare,
            MeshKind::TriangularPeriodic => RefCell::UnitTriangle,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            MeshKind::CartesianPeriodic => "quad",
            MeshKind::TriangularPeriodic => "tri",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FaceKind {
    /// Vertical face `x = const`, normal along `+x`.
    X,
    /// Horizontal face `y = const`, normal along `+y`.
    Y,
    /// Triangle hypotenuse, normal along `(1, −1)` up to scale.
    Diagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug)]
pub struct Face {
    pub kind: FaceKind,
    pub p: usize,
    pub q: usize,
    /// Unnormalized normal: the +90° rotation `(−d_y, d_x)` of `d = Q − P`.
    pub normal: [Q; 2],
    pub length_sq: Q,
    pub left: usize,
    pub right: usize,
}

impl Face {
    /// Exact length when rational; diagonal faces of non-Pythagorean cells have none.
    pub fn length(&self) -> Option<Q> {
        crate::rational::sqrt_exact(&self.length_sq)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CellShape {
    Quad,
    Tri,
}

/// A face as seen from one of its two cells, in cell-local coordinates
/// (`X = x − offset`) so that periodic wrap-around never shows up.
#[derive(Clone, Debug)]
pub struct CellFace {
    pub face: usize,
    pub side: Side,
    pub p_local: [Q; 2],
    pub q_local: [Q; 2],
}

impl CellFace {
    /// `+1` if the face normal points outward from this cell.
    pub fn outward_sign(&self) -> i64 {
        match self.side {
            Side::Left => 1,
            Side::Right => -1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub shape: CellShape,
    /// Grid square `(i, j)` containing the cell.
    pub grid: (usize, usize),
    /// Counter-clockwise vertex ids.
    pub vertices: Vec<usize>,
    /// Physical position of local vertex 0.
    pub offset: [Q; 2],
    /// Linear part `A` of the map `x = A ξ + offset` from the reference cell.
    pub linear: [[Q; 2]; 2],
    /// Congruence class: cells of the same class differ by a translation.
    pub class: usize,
    /// Faces in counter-clockwise order.
    pub faces: Vec<CellFace>,
    pub midpoint: [Q; 2],
    pub sizes: [Q; 2],
}

impl Cell {
    pub fn area(&self) -> Q {
        let a = &self.linear;
        let det = (&a[0][0] * &a[1][1] - &a[0][1] * &a[1][0]).abs();
        match self.shape {
            CellShape::Quad => det,
            CellShape::Tri => det / q(2),
        }
    }

    pub fn ref_cell(&self) -> RefCell {
        match self.shape {
            CellShape::Quad => RefCell::UnitSquare,
            CellShape::Tri => RefCell::UnitTriangle,
        }
    }

    /// Local vertex coordinates `X = x − offset`.
    pub fn local_vertices(&self) -> Vec<[Q; 2]> {
        self.ref_cell()
            .vertices()
            .iter()
            .map(|v| {
                [
                    &self.linear[0][0] * &v[0] + &self.linear[0][1] * &v[1],
                    &self.linear[1][0] * &v[0] + &self.linear[1][1] * &v[1],
                ]
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub kind: MeshKind,
    pub nx: usize,
    pub ny: usize,
    pub lx: Q,
    pub ly: Q,
    pub cells: Vec<Cell>,
    pub faces: Vec<Face>,
    pub n_points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeshSummary {
    pub kind: MeshKind,
    pub nx: usize,
    pub ny: usize,
    pub lx: String,
    pub ly: String,
    pub counts: EntityCounts,
    pub euler_characteristic: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EntityCounts {
    pub cells: usize,
    pub faces: usize,
    pub points: usize,
}

fn pt(x: &Q, y: &Q) -> [Q; 2] {
    [x.clone(), y.clone()]
}

impl Mesh {
    pub fn build(kind: MeshKind, nx: usize, ny: usize, lx: Q, ly: Q) -> Result<Self> {
        if nx < 2 {
            return Err(DerhamError::InvalidMesh("nx must be >= 2".into()));
        }
        if ny < 2 {
            return Err(DerhamError::InvalidMesh("ny must be >= 2".into()));
        }
        if !lx.is_positive() || !ly.is_positive() {
            return Err(DerhamError::InvalidMesh("domain lengths must be positive".into()));
        }
        let hx = &lx / q(nx as i64);
        let hy = &ly / q(ny as i64);
        let z = Q::zero();
        let npq = nx * ny;
        let pid = |i: usize, j: usize| (j % ny) * nx + (i % nx);
        let xface = |i: usize, j: usize| (j % ny) * nx + (i % nx);
        let yface = |i: usize, j: usize| npq + (j % ny) * nx + (i % nx);
        let dface = |i: usize, j: usize| 2 * npq + (j % ny) * nx + (i % nx);
        let left_i = |i: usize| (i + nx - 1) % nx;
        let below_j = |j: usize| (j + ny - 1) % ny;

        let mut faces = Vec::new();
        let mut cells = Vec::new();
        let cell_of = |i: usize, j: usize, t: usize| match kind {
            MeshKind::CartesianPeriodic => j * nx + i,
            MeshKind::TriangularPeriodic => 2 * (j * nx + i) + t,
        };

        // x-faces: P = (i, j+1), Q = (i, j), n = (hy, 0)
        for j in 0..ny {
            for i in 0..nx {
                let (left, right) = match kind {
                    MeshKind::CartesianPeriodic => (cell_of(left_i(i), j, 0), cell_of(i, j, 0)),
                    MeshKind::TriangularPeriodic => (cell_of(left_i(i), j, 0), cell_of(i, j, 1)),
                };
                faces.push(Face {
                    kind: FaceKind::X,
                    p: pid(i, j + 1),
                    q: pid(i, j),
                    normal: [hy.clone(), z.clone()],
                    length_sq: &hy * &hy,
                    left,
                    right,
                });
            }
        }
        // y-faces: P = (i, j), Q = (i+1, j), n = (0, hx)
        for j in 0..ny {
            for i in 0..nx {
                let (left, right) = match kind {
                    MeshKind::CartesianPeriodic => (cell_of(i, below_j(j), 0), cell_of(i, j, 0)),
                    MeshKind::TriangularPeriodic => (cell_of(i, below_j(j), 1), cell_of(i, j, 0)),
                };
                faces.push(Face {
                    kind: FaceKind::Y,
                    p: pid(i, j),
                    q: pid(i + 1, j),
                    normal: [z.clone(), hx.clone()],
                    length_sq: &hx * &hx,
                    left,
                    right,
                });
            }
        }
        if kind == MeshKind::TriangularPeriodic {
            // diagonals: P = (i+1, j+1), Q = (i, j), n = (hy, −hx)
            for j in 0..ny {
                for i in 0..nx {
                    faces.push(Face {
                        kind: FaceKind::Diagonal,
                        p: pid(i + 1, j + 1),
                        q: pid(i, j),
                        normal: [hy.clone(), -hx.clone()],
                        length_sq: &hx * &hx + &hy * &hy,
                        left: cell_of(i, j, 1),
                        right: cell_of(i, j, 0),
                    });
                }
            }
        }

        let o = pt(&z, &z);
        let bx = pt(&hx, &z);
        let by = pt(&z, &hy);
        let bxy = pt(&hx, &hy);
        for j in 0..ny {
            for i in 0..nx {
                let offset = [q(i as i64) * &hx, q(j as i64) * &hy];
                let cf = |face, side, p: &[Q; 2], qq: &[Q; 2]| CellFace {
                    face,
                    side,
                    p_local: p.clone(),
                    q_local: qq.clone(),
                };
                let midpoint = [&offset[0] + &hx / q(2), &offset[1] + &hy / q(2)];
                let sizes = [hx.clone(), hy.clone()];
                match kind {
                    MeshKind::CartesianPeriodic => cells.push(Cell {
                        shape: CellShape::Quad,
                        grid: (i, j),
                        vertices: vec![pid(i, j), pid(i + 1, j), pid(i + 1, j + 1), pid(i, j + 1)],
                        offset,
                        linear: [[hx.clone(), z.clone()], [z.clone(), hy.clone()]],
                        class: 0,
                        faces: vec![
                            cf(yface(i, j), Side::Right, &o, &bx),
                            cf(xface(i + 1, j), Side::Left, &bxy, &bx),
                            cf(yface(i, j + 1), Side::Left, &by, &bxy),
                            cf(xface(i, j), Side::Right, &by, &o),
                        ],
                        midpoint,
                        sizes,
                    }),
                    MeshKind::TriangularPeriodic => {
                        cells.push(Cell {
                            shape: CellShape::Tri,
                            grid: (i, j),
                            vertices: vec![pid(i, j), pid(i + 1, j), pid(i + 1, j + 1)],
                            offset: offset.clone(),
                            linear: [[hx.clone(), hx.clone()], [z.clone(), hy.clone()]],
                            class: 0,
                            faces: vec![
                                cf(yface(i, j), Side::Right, &o, &bx),
                                cf(xface(i + 1, j), Side::Left, &bxy, &bx),
                                cf(dface(i, j), Side::Right, &bxy, &o),
                            ],
                            midpoint: midpoint.clone(),
                            sizes: sizes.clone(),
                        });
                        cells.push(Cell {
                            shape: CellShape::Tri,
                            grid: (i, j),
                            vertices: vec![pid(i, j), pid(i + 1, j + 1), pid(i, j + 1)],
                            offset,
                            linear: [[hx.clone(), z.clone()], [hy.clone(), hy.clone()]],
                            class: 1,
                            faces: vec![
                                cf(dface(i, j), Side::Left, &bxy, &o),
                                cf(yface(i, j + 1), Side::Left, &by, &bxy),
                                cf(xface(i, j), Side::Right, &by, &o),
                            ],
                            midpoint,
                            sizes,
                        });
                    }
                }
            }
        }
        Ok(Self {
            kind,
            nx,
            ny,
            lx,
            ly,
            cells,
            faces,
            n_points: npq,
        })
    }

    /// Unit-size torus `[0,1]²`.
    pub fn unit(kind: MeshKind, nx: usize, ny: usize) -> Result<Self> {
        Self::build(kind, nx, ny, Q::one(), Q::one())
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn entity_counts(&self) -> EntityCounts {
        EntityCounts {
            cells: self.cells.len(),
            faces: self.faces.len(),
            points: self.n_points,
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_points as i64 - self.faces.len() as i64 + self.cells.len() as i64
    }

    /// Closed-form counts `(cells, faces, points)` for the mesh family.
    pub fn expected_counts(kind: MeshKind, nx: usize, ny: usize) -> EntityCounts {
        match kind {
            MeshKind::CartesianPeriodic => {
                let n = nx * ny;
                EntityCounts {
                    cells: n,
                    faces: 2 * n,
                    points: n,
                }
            }
            MeshKind::TriangularPeriodic => {
                let n = 2 * nx * ny;
                EntityCounts {
                    cells: n,
                    faces: 3 * n / 2,
                    points: n / 2,
                }
            }
        }
    }

    pub fn face_adjacency(&self, face: usize) -> Result<(usize, usize, [Q; 2])> {
        let f = self.faces.get(face).ok_or(DerhamError::OutOfRange {
            what: "face",
            index: face,
            len: self.faces.len(),
        })?;
        Ok((f.left, f.right, f.normal.clone()))
    }

    /// Number of distinct cell congruence classes.
    pub fn n_classes(&self) -> usize {
        match self.kind {
            MeshKind::CartesianPeriodic => 1,
            MeshKind::TriangularPeriodic => 2,
        }
    }

    pub fn summary(&self) -> MeshSummary {
        MeshSummary {
            kind: self.kind,
            nx: self.nx,
            ny: self.ny,
            lx: fmt_q(&self.lx),
            ly: fmt_q(&self.ly),
            counts: self.entity_counts(),
            euler_characteristic: self.euler_characteristic(),
        }
    }

    pub fn describe(&self) -> String {
        format!("{}({}x{})", self.kind.short_name(), self.nx, self.ny)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        let m = Mesh::unit(MeshKind::TriangularPeriodic, 2, 2).unwrap();
        assert_eq!(
            m.entity_counts(),
            EntityCounts {
                cells: 8,
                faces: 12,
                points: 4
            }
        );
        let m = Mesh::unit(MeshKind::CartesianPeriodic, 3, 2).unwrap();
        assert_eq!(
            m.entity_counts(),
            EntityCounts {
                cells: 6,
                faces: 12,
                points: 6
            }
        );
    }

    #[test]
    fn rejects_degenerate() {
        assert!(Mesh::unit(MeshKind::CartesianPeriodic, 1, 3).is_err());
        assert!(Mesh::build(MeshKind::CartesianPeriodic, 2, 2, q(0), q(1)).is_err());
    }

    #[test]
    fn cartesian_orientation() {
        let m = Mesh::unit(MeshKind::CartesianPeriodic, 2, 2).unwrap();
        // vertical face x = 1/2 in the bottom row
        let (l, r, n) = m.face_adjacency(1).unwrap();
        assert_eq!((l, r), (0, 1));
        assert!(n[0].is_positive() && n[1].is_zero());
        // wrap-around face x = 0
        let (l, r, _) = m.face_adjacency(0).unwrap();
        assert_eq!((l, r), (1, 0));
        assert!(m.face_adjacency(99).is_err());
    }

    #[test]
    fn diagonal_normal_direction() {
        let m = Mesh::unit(MeshKind::TriangularPeriodic, 2, 2).unwrap();
        let (l, r, n) = m.face_adjacency(8).unwrap();
        assert_eq!(n, [q(1) / q(2), -q(1) / q(2)]);
        assert_eq!((l, r), (1, 0));
    }
}
