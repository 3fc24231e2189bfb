//! Reference-cell checks: the boundary-curl map, the bubble space Φ_k and the
//! constructive splitting of divergence-free fields.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{DerhamError, Result};
use crate::exactla::{direct_sum_check, rank, rank_nullspace, solve, solve_min_norm, span_compare, QMatrix};
use crate::fespace::{local_basis, p_monomials, q_monomials, BasisFn, Coordinizer, SpaceFamily};
use crate::poly::{trace_edge_normal, EdgePoly, Poly, RefCell, VecPoly};
use crate::rational::{q, Q};
use crate::report::Report;

/// Legendre coefficients of `g`, padded to `k + 1`; errors if `deg g > k`.
fn legendre_k(g: &EdgePoly, k: usize, edge: usize) -> Result<Vec<Q>> {
    if g.degree().is_some_and(|d| d > k) {
        return Err(DerhamError::Membership {
            what: format!("edge trace of degree {} in dP_{k}", g.degree().unwrap_or(0)),
            entity: format!("edge {edge}"),
            column: 0,
        });
    }
    let mut c = g.legendre_coeffs();
    c.resize(k + 1, Q::zero());
    Ok(c)
}

/// Boundary trace coordinates `(edge, mode) -> e*(k+1) + mode`.
fn boundary_coords(u: &VecPoly, cell: RefCell, k: usize) -> Result<Vec<Q>> {
    let mut out = Vec::with_capacity(cell.n_edges() * (k + 1));
    for e in 0..cell.n_edges() {
        out.extend(legendre_k(&trace_edge_normal(u, cell, e)?, k, e)?);
    }
    Ok(out)
}

/// `diag(1/(2i+1))` per edge: the boundary inner product in edge parameters.
fn boundary_gram(cell: RefCell, k: usize) -> QMatrix {
    let n = cell.n_edges() * (k + 1);
    let mut g = QMatrix::zeros(n, n);
    for r in 0..n {
        g.set(r, r, Q::new(1.into(), (2 * (r % (k + 1)) as i64 + 1).into()));
    }
    g
}

fn l2(u: &VecPoly, w: &VecPoly, cell: RefCell) -> Q {
    u.dot(w).integrate(cell)
}

fn combine(basis: &[VecPoly], c: &[Q]) -> VecPoly {
    basis
        .iter()
        .zip(c)
        .filter(|(_, ci)| !ci.is_zero())
        .fold(VecPoly::zero(), |acc, (b, ci)| &acc + &b.scale(ci))
}

/// Columns = coefficient maps; rows = the union of their keys.
fn matrix_of_maps<K: Ord + Clone>(maps: &[BTreeMap<K, Q>]) -> QMatrix {
    let keys: Vec<K> = {
        let mut s: Vec<K> = maps.iter().flat_map(|m| m.keys().cloned()).collect();
        s.sort();
        s.dedup();
        s
    };
    let mut m = QMatrix::zeros(keys.len(), maps.len());
    for (j, map) in maps.iter().enumerate() {
        for (key, v) in map {
            let i = keys.binary_search(key).expect("key present");
            m.set(i, j, v.clone());
        }
    }
    m
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryCurlMap {
    pub cell: RefCell,
    pub k: usize,
    /// Domain monomials `x^i y^j`.
    pub domain: Vec<(u32, u32)>,
    #[serde(skip)]
    pub matrix: QMatrix,
    pub rank: usize,
    pub report: Report,
}

/// `ψ ↦ bTr(∇⊥ψ)` from `P_{k+1}` (triangle) or `Q_{k+1}` (square) into
/// per-edge `P_k`, in edge-Legendre coordinates.
pub fn boundary_curl_map(k: usize, cell: RefCell) -> Result<BoundaryCurlMap> {
    let d = k as i64 + 1;
    let domain = match cell {
        RefCell::UnitTriangle => p_monomials(d),
        RefCell::UnitSquare => q_monomials(d, d),
    };
    let cols: Vec<Vec<Q>> = domain
        .iter()
        .map(|&(i, j)| boundary_coords(&VecPoly::grad_perp(&Poly::monomial(i, j)), cell, k))
        .collect::<Result<_>>()?;
    let nrows = cell.n_edges() * (k + 1);
    let matrix = QMatrix::from_cols(nrows, &cols);
    let r = rank(&matrix);
    let mut rep = Report::new(format!("boundary curl map {} k={k}", cell.name()));
    let expected = match cell {
        RefCell::UnitTriangle => 3 * k + 2,
        RefCell::UnitSquare => 4 * k + 3,
    };
    rep.check("rank", expected, r);
    rep.check("dim kernel", domain.len() - expected, domain.len() - r);
    // the constant boundary function: mode 0 equal to one on every edge
    let ones: Vec<Q> = (0..nrows)
        .map(|r| if r % (k + 1) == 0 { Q::one() } else { Q::zero() })
        .collect();
    let ds = direct_sum_check(
        &[matrix.clone(), QMatrix::from_cols(nrows, &[ones])],
        Some(&boundary_gram(cell, k)),
    )?;
    rep.check_true("Range (+) constants direct", ds.direct);
    rep.check("dim Range + constants = dim dP_k(boundary)", nrows, ds.union_rank);
    rep.check_true("Range _|_ constants", ds.orthogonal == Some(true));
    Ok(BoundaryCurlMap {
        cell,
        k,
        domain,
        matrix,
        rank: r,
        report: rep.finish(),
    })
}

/// Which differential constraint defines the bubbles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Twin {
    /// `∇·u = 0`, `u·n = 0`.
    Div,
    /// `curl u = 0`, `u·t = 0`; the quarter-turn image of [`Twin::Div`].
    Curl,
}

/// Local vector space of a family on its reference cell.
#[derive(Clone, Debug)]
pub struct CellSpace {
    pub family: SpaceFamily,
    pub k: usize,
    pub cell: RefCell,
    pub twin: Twin,
    pub basis: Vec<VecPoly>,
    pub coordinizer: Coordinizer,
}

impl CellSpace {
    pub fn new(family: SpaceFamily, k: usize, cell: RefCell) -> Result<Self> {
        let twin = match (family, cell) {
            (SpaceFamily::DPkVec, RefCell::UnitTriangle) | (SpaceFamily::DQhatDiv, RefCell::UnitSquare) => Twin::Div,
            (SpaceFamily::DQhatCurl, RefCell::UnitSquare) => Twin::Curl,
            _ => {
                return Err(DerhamError::IncompatibleFamily {
                    family: family.name(),
                    target: format!("divergence-free splitting on the {}", cell.name()),
                })
            }
        };
        let lb = local_basis(family, k, cell)?;
        let coordinizer = Coordinizer::new(&lb.elements)?;
        Ok(Self {
            family,
            k,
            cell,
            twin,
            basis: lb.vectors(),
            coordinizer,
        })
    }

    pub fn coords(&self, u: &VecPoly) -> Option<Vec<Q>> {
        self.coordinizer.coords(&BasisFn::Vector(u.clone()))
    }

    /// Brings a field of the curl twin to the divergence setting.
    fn to_div(&self, u: &VecPoly) -> VecPoly {
        match self.twin {
            Twin::Div => u.clone(),
            Twin::Curl => u.rotate(),
        }
    }

    fn out_of_div(&self, u: &VecPoly) -> VecPoly {
        match self.twin {
            Twin::Div => u.clone(),
            Twin::Curl => u.unrotate(),
        }
    }

    /// Differential constraint coefficients: `div` (or `curl`) monomials, then edge traces.
    fn constraint_map(&self, u: &VecPoly, with_traces: bool) -> Result<BTreeMap<(usize, u32, u32), Q>> {
        let w = self.to_div(u);
        let mut m = BTreeMap::new();
        for (&(i, j), c) in w.div().terms() {
            m.insert((0, i, j), c.clone());
        }
        if with_traces {
            for e in 0..self.cell.n_edges() {
                for (p, c) in trace_edge_normal(&w, self.cell, e)?.coeffs().iter().enumerate() {
                    if !c.is_zero() {
                        m.insert((e + 1, p as u32, 0), c.clone());
                    }
                }
            }
        }
        Ok(m)
    }

    fn constrained_subspace(&self, with_traces: bool) -> Result<Vec<VecPoly>> {
        let maps = self
            .basis
            .iter()
            .map(|b| self.constraint_map(b, with_traces))
            .collect::<Result<Vec<_>>>()?;
        let m = matrix_of_maps(&maps);
        Ok(rank_nullspace(&m)
            .nullspace
            .iter()
            .map(|c| combine(&self.basis, c))
            .collect())
    }

    /// Basis of the divergence-free (curl-free for the curl twin) subspace.
    pub fn divfree_basis(&self) -> Result<Vec<VecPoly>> {
        self.constrained_subspace(false)
    }

    fn coords_matrix(&self, fields: &[VecPoly]) -> Result<QMatrix> {
        let cols = fields
            .iter()
            .map(|f| {
                self.coords(f).ok_or_else(|| DerhamError::Membership {
                    what: format!("field {f} in {}", self.family.name()),
                    entity: "reference cell".into(),
                    column: 0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(QMatrix::from_cols(self.basis.len(), &cols))
    }

    fn satisfies_constraint(&self, u: &VecPoly) -> bool {
        self.to_div(u).div().is_zero()
    }
}

#[derive(Clone, Debug)]
pub struct PhiBasis {
    pub space: CellSpace,
    /// Bubbles in the divergence setting; see [`PhiBasis::fields`] for the family's own fields.
    pub elements: Vec<VecPoly>,
    /// L² Gram matrix of `elements`.
    pub gram: QMatrix,
}

impl PhiBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn fields(&self) -> Vec<VecPoly> {
        self.elements.iter().map(|u| self.space.out_of_div(u)).collect()
    }

    /// L²-orthogonal projection onto Φ_k.
    pub fn project(&self, u: &VecPoly) -> Result<VecPoly> {
        if self.elements.is_empty() {
            return Ok(VecPoly::zero());
        }
        let rhs: Vec<Q> = self.elements.iter().map(|p| l2(p, u, self.space.cell)).collect();
        let c = solve(&self.gram, &rhs)?.ok_or_else(|| DerhamError::Singular("Gram of Φ_k".into()))?;
        Ok(combine(&self.elements, &c))
    }
}

/// Exact basis of Φ_k inside `family`.
pub fn phi_basis(k: usize, family: SpaceFamily, cell: RefCell) -> Result<PhiBasis> {
    let space = CellSpace::new(family, k, cell)?;
    let elements: Vec<VecPoly> = space
        .constrained_subspace(true)?
        .iter()
        .map(|u| space.to_div(u))
        .collect();
    let n = elements.len();
    let mut gram = QMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gram.set(i, j, l2(&elements[i], &elements[j], cell));
        }
    }
    Ok(PhiBasis { space, elements, gram })
}

/// Closed-form dimension of Φ_k on each cell.
pub fn expected_phi_dim(k: usize, cell: RefCell) -> usize {
    match cell {
        RefCell::UnitTriangle => k * k.saturating_sub(1) / 2,
        RefCell::UnitSquare => k * k,
    }
}

/// `span{(1,0), (0,1), (1−2x, 2y−1)}` on the square; the constants on the triangle.
pub fn v1_space(cell: RefCell) -> Vec<VecPoly> {
    let mut v = vec![
        VecPoly::constant(Q::one(), Q::zero()),
        VecPoly::constant(Q::zero(), Q::one()),
    ];
    if cell == RefCell::UnitSquare {
        v.push(VecPoly::new(
            &Poly::one() - &Poly::x().scale(&q(2)),
            &Poly::y().scale(&q(2)) - &Poly::one(),
        ));
    }
    v
}

#[derive(Clone, Debug)]
pub struct EdgeMode {
    pub edge: usize,
    pub mode: usize,
    /// Divergence-free, orthogonal to Φ_k, normal trace `L_mode` on `edge` only.
    pub field: VecPoly,
}

/// Precomputed pieces shared by every decomposition on one `(family, k, cell)`.
#[derive(Clone, Debug)]
pub struct Decomposer {
    pub phi: PhiBasis,
    pub modes: Vec<EdgeMode>,
}

impl Decomposer {
    pub fn new(k: usize, family: SpaceFamily, cell: RefCell) -> Result<Self> {
        let phi = phi_basis(k, family, cell)?;
        let cmap = boundary_curl_map(k, cell)?;
        let mut modes = Vec::new();
        for edge in 0..cell.n_edges() {
            for mode in 1..=k {
                let mut target = vec![Q::zero(); cell.n_edges() * (k + 1)];
                target[edge * (k + 1) + mode] = Q::one();
                let psi_c = solve_min_norm(&cmap.matrix, &target)?
                    .ok_or_else(|| DerhamError::Singular(format!("no preimage for edge {edge} mode {mode}")))?;
                let psi = cmap
                    .domain
                    .iter()
                    .zip(&psi_c)
                    .fold(Poly::zero(), |acc, (&(i, j), c)| &acc + &Poly::term(c.clone(), i, j));
                let g = VecPoly::grad_perp(&psi);
                let field = &g - &phi.project(&g)?;
                modes.push(EdgeMode { edge, mode, field });
            }
        }
        Ok(Self { phi, modes })
    }

    fn cell(&self) -> RefCell {
        self.phi.space.cell
    }

    pub fn decompose(&self, u: &VecPoly) -> Result<DivFreeDecomposition> {
        let sp = &self.phi.space;
        if sp.coords(u).is_none() {
            return Err(DerhamError::Membership {
                what: format!("input field in {}", sp.family.name()),
                entity: "reference cell".into(),
                column: 0,
            });
        }
        if !sp.satisfies_constraint(u) {
            return Err(DerhamError::InvalidInput(match sp.twin {
                Twin::Div => "input field is not divergence-free".into(),
                Twin::Curl => "input field is not curl-free".into(),
            }));
        }
        let cell = self.cell();
        let w = sp.to_div(u);
        let k = sp.k;
        let traces = boundary_coords(&w, cell, k)?;
        let v0 = self.phi.project(&w)?;
        let mut rest = &w - &v0;
        let mut parts = Vec::new();
        for m in &self.modes {
            let lam = traces[m.edge * (k + 1) + m.mode].clone();
            let v = m.field.scale(&lam);
            rest = &rest - &v;
            parts.push(ModePart {
                edge: m.edge,
                mode: m.mode,
                lambda: lam,
                field: sp.out_of_div(&v),
            });
        }
        let v1 = rest;
        let v1_basis = v1_space(cell);
        let v1_coords = Coordinizer::new(&v1_basis.iter().cloned().map(BasisFn::Vector).collect::<Vec<_>>())?
            .coords(&BasisFn::Vector(v1.clone()));
        let edge_means: Vec<Q> = (0..cell.n_edges()).map(|e| traces[e * (k + 1)].clone()).collect();
        let mut residual = &(&sp.out_of_div(&v0) + &sp.out_of_div(&v1)) - u;
        for p in &parts {
            residual = &residual + &p.field;
        }
        Ok(DivFreeDecomposition {
            v0: sp.out_of_div(&v0),
            v1: sp.out_of_div(&v1),
            v1_coords,
            parts,
            edge_means,
            residual,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ModePart {
    pub edge: usize,
    pub mode: usize,
    /// `(2i+1) ∫ bTr(u) L_i` on the edge.
    pub lambda: Q,
    pub field: VecPoly,
}

#[derive(Clone, Debug)]
pub struct DivFreeDecomposition {
    pub v0: VecPoly,
    pub v1: VecPoly,
    /// Coordinates of `v1` in [`v1_space`], `None` if outside it.
    pub v1_coords: Option<Vec<Q>>,
    pub parts: Vec<ModePart>,
    /// Mean normal trace per edge, `b_e`.
    pub edge_means: Vec<Q>,
    pub residual: VecPoly,
}

impl DivFreeDecomposition {
    /// The closed form of `v1` on the square from the four edge means.
    pub fn quad_closed_form(&self) -> Option<VecPoly> {
        let [b0, b1, b2, b3] = <[Q; 4]>::try_from(self.edge_means.clone()).ok()?;
        let two = q(2);
        let basis = v1_space(RefCell::UnitSquare);
        Some(combine(
            &basis,
            &[(&b1 - &b3) / &two, (&b2 - &b0) / &two, (&b0 + &b2) / &two],
        ))
    }
}

/// Convenience wrapper building a fresh [`Decomposer`].
pub fn decompose_divfree(u: &VecPoly, k: usize, family: SpaceFamily, cell: RefCell) -> Result<DivFreeDecomposition> {
    Decomposer::new(k, family, cell)?.decompose(u)
}

/// Checks that `[Φ_k | v1-space | e^{f,i}]` is a basis of the divergence-free subspace.
pub fn uniqueness_probe(k: usize, family: SpaceFamily, cell: RefCell) -> Result<Report> {
    let dec = Decomposer::new(k, family, cell)?;
    let sp = &dec.phi.space;
    let mut rep = Report::new(format!("uniqueness {} {} k={k}", family.name(), cell.name()));
    let mut stacked: Vec<VecPoly> = dec.phi.elements.iter().map(|p| sp.out_of_div(p)).collect();
    stacked.extend(v1_space(cell).iter().map(|v| sp.out_of_div(v)));
    stacked.extend(dec.modes.iter().map(|m| sp.out_of_div(&m.field)));
    let m = sp.coords_matrix(&stacked)?;
    let divfree = sp.divfree_basis()?;
    let d = sp.coords_matrix(&divfree)?;
    rep.check("full column rank", stacked.len(), rank(&m));
    rep.check("dim divergence-free subspace", stacked.len(), divfree.len());
    let cert = span_compare(&m, &d)?;
    rep.check(
        "span = divergence-free subspace",
        "Equal".to_string(),
        format!("{:?}", cert.relation),
    );
    rep.check("dim Phi_k", expected_phi_dim(k, cell), dec.phi.dim());
    Ok(rep.finish())
}

/// Random rational with numerator in `[-9, 9]` and denominator in `[1, 5]`.
pub fn random_q(rng: &mut impl Rng) -> Q {
    Q::new(rng.gen_range(-9i64..=9).into(), rng.gen_range(1i64..=5).into())
}

/// Seeded random divergence-free (curl-free for the curl twin) fields.
pub fn random_divfree(space: &CellSpace, count: usize, seed: u64) -> Result<Vec<VecPoly>> {
    let basis = space.divfree_basis()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let c: Vec<Q> = basis.iter().map(|_| random_q(&mut rng)).collect();
            combine(&basis, &c)
        })
        .collect())
}

/// Round-trip and invariant checks on `samples` random fields.
pub fn decomposition_campaign(
    k: usize,
    family: SpaceFamily,
    cell: RefCell,
    samples: usize,
    seed: u64,
) -> Result<Report> {
    let dec = Decomposer::new(k, family, cell)?;
    let sp = &dec.phi.space;
    let mut rep = Report::new(format!("decomposition {} {} k={k}", family.name(), cell.name()));
    rep.check("dim Phi_k", expected_phi_dim(k, cell), dec.phi.dim());
    let phi_in_space = dec.phi.elements.iter().all(|p| sp.coords(&sp.out_of_div(p)).is_some());
    rep.check_true("Phi_k lies in the family", phi_in_space);

    let v1_basis = v1_space(cell);
    let v1_perp_phi = v1_basis
        .iter()
        .all(|v| dec.phi.elements.iter().all(|p| l2(v, p, cell).is_zero()));
    rep.check_true("v1-space _|_ Phi_k", v1_perp_phi);
    let modes_ok = dec.modes.iter().all(|m| {
        let perp = dec.phi.elements.iter().all(|p| l2(&m.field, p, cell).is_zero());
        let trace = boundary_coords(&m.field, cell, k).is_ok_and(|t| {
            t.iter().enumerate().all(|(r, v)| {
                let hit = r == m.edge * (k + 1) + m.mode;
                if hit {
                    v.is_one()
                } else {
                    v.is_zero()
                }
            })
        });
        perp && trace && m.field.div().is_zero()
    });
    rep.check_true("e^{f,i}: divergence-free, _|_ Phi_k, single trace mode", modes_ok);

    let fields = random_divfree(sp, samples, seed)?;
    let (mut exact, mut in_v1, mut sum_b) = (0, 0, 0);
    for u in &fields {
        let d = dec.decompose(u)?;
        exact += usize::from(d.residual.is_zero());
        in_v1 += usize::from(d.v1_coords.is_some());
        sum_b += usize::from(d.edge_means.iter().fold(Q::zero(), |a, b| a + b).is_zero());
    }
    rep.check("residual exactly zero", samples, exact);
    rep.check("v1 in its stated span", samples, in_v1);
    rep.check("sum of edge means = 0", samples, sum_b);

    // inputs whose traces are constant per edge: v1 must follow the closed form
    if cell == RefCell::UnitSquare {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut ok = 0;
        for _ in 0..samples {
            let c: Vec<Q> = v1_basis.iter().map(|_| random_q(&mut rng)).collect();
            let mut w = combine(&v1_basis, &c);
            for p in &dec.phi.elements {
                w = &w + &p.scale(&random_q(&mut rng));
            }
            let d = dec.decompose(&sp.out_of_div(&w))?;
            let cf = d.quad_closed_form().map(|v| sp.out_of_div(&v));
            ok += usize::from(cf.as_ref() == Some(&d.v1) && d.residual.is_zero());
        }
        rep.check("v1 closed form on constant-trace inputs", samples, ok);
    }
    Ok(rep.finish())
}

/// Reference-cell checks for one cell and one `k`.
pub fn refcheck_k(cell: RefCell, k: usize, samples: usize, seed: u64) -> Result<Report> {
    let mut rep = Report::new(format!("refcheck {} k={k}", cell.name()));
    let families: &[SpaceFamily] = match cell {
        RefCell::UnitTriangle => &[SpaceFamily::DPkVec],
        RefCell::UnitSquare => &[SpaceFamily::DQhatDiv, SpaceFamily::DQhatCurl],
    };
    rep.absorb("", boundary_curl_map(k, cell)?.report);
    for &f in families {
        let tag = format!("{} ", f.name());
        let phi = phi_basis(k, f, cell)?;
        if cell == RefCell::UnitSquare {
            let matches = match phi.dim() {
                d if d == k * k => "k^2",
                d if d == k * k + 1 => "k^2+1",
                _ => "neither",
            };
            rep.witness(
                format!("{} dim Phi", f.name()),
                serde_json::json!({ "dim": phi.dim(), "matches": matches }),
            );
        }
        rep.absorb(&tag, uniqueness_probe(k, f, cell)?);
        rep.absorb(&tag, decomposition_campaign(k, f, cell, samples, seed)?);
    }
    Ok(rep.finish())
}

/// All reference-cell checks for one cell up to `k_max`.
pub fn refcheck(cell: RefCell, k_max: usize, samples: usize, seed: u64) -> Result<Report> {
    let mut rep = Report::new(format!("refcheck {} k<={k_max}", cell.name()));
    for k in 0..=k_max {
        rep.absorb(&format!("k={k} "), refcheck_k(cell, k, samples, seed)?);
    }
    Ok(rep.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curl_map_ranks() {
        assert_eq!(boundary_curl_map(2, RefCell::UnitTriangle).unwrap().rank, 8);
        assert_eq!(boundary_curl_map(2, RefCell::UnitSquare).unwrap().rank, 11);
        let t0 = boundary_curl_map(0, RefCell::UnitTriangle).unwrap();
        assert_eq!(t0.domain.len() - t0.rank, 1);
        assert!(t0.report.passed());
    }

    #[test]
    fn phi_dims() {
        assert_eq!(
            phi_basis(2, SpaceFamily::DPkVec, RefCell::UnitTriangle).unwrap().dim(),
            1
        );
        assert_eq!(
            phi_basis(1, SpaceFamily::DPkVec, RefCell::UnitTriangle).unwrap().dim(),
            0
        );
        assert_eq!(
            phi_basis(1, SpaceFamily::DQhatDiv, RefCell::UnitSquare).unwrap().dim(),
            1
        );
    }

    #[test]
    fn trivial_decompositions() {
        let e = VecPoly::constant(Q::one(), Q::zero());
        let d = decompose_divfree(&e, 1, SpaceFamily::DPkVec, RefCell::UnitTriangle).unwrap();
        assert_eq!(d.v1, e);
        assert!(d.v0.is_zero() && d.parts.iter().all(|p| p.field.is_zero()));

        let phi = phi_basis(2, SpaceFamily::DPkVec, RefCell::UnitTriangle).unwrap();
        let d = decompose_divfree(&phi.elements[0], 2, SpaceFamily::DPkVec, RefCell::UnitTriangle).unwrap();
        assert_eq!(d.v0, phi.elements[0]);
        assert!(d.v1.is_zero());
    }

    #[test]
    fn rejects_non_divfree() {
        let u = VecPoly::new(Poly::x(), Poly::zero());
        assert!(matches!(
            decompose_divfree(&u, 1, SpaceFamily::DPkVec, RefCell::UnitTriangle),
            Err(DerhamError::InvalidInput(_))
        ));
    }

    #[test]
    fn small_campaigns() {
        for (f, c) in [
            (SpaceFamily::DPkVec, RefCell::UnitTriangle),
            (SpaceFamily::DQhatDiv, RefCell::UnitSquare),
            (SpaceFamily::DQhatCurl, RefCell::UnitSquare),
        ] {
            let r = decomposition_campaign(2, f, c, 5, 1).unwrap();
            assert!(r.passed(), "{}", r.to_text());
            let u = uniqueness_probe(2, f, c).unwrap();
            assert!(u.passed(), "{}", u.to_text());
        }
    }
}
