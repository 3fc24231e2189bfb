//! Bivariate polynomials with exact rational coefficients, their vector-valued
//! pairs, and univariate edge polynomials in the parameter `t ∈ [0,1]`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{DerhamError, Result};
use crate::rational::{binomial, factorial, fmt_q, q, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    X,
    Y,
}

/// Sparse map `(i, j) -> c` for `c·x^i·y^j`. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Poly {
    terms: BTreeMap<(u32, u32), Q>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Q) -> Self {
        Self::term(c, 0, 0)
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn monomial(i: u32, j: u32) -> Self {
        Self::term(Q::one(), i, j)
    }

    pub fn term(c: Q, i: u32, j: u32) -> Self {
        let mut p = Self::zero();
        p.add_term(i, j, c);
        p
    }

    pub fn x() -> Self {
        Self::monomial(1, 0)
    }

    pub fn y() -> Self {
        Self::monomial(0, 1)
    }

    pub fn add_term(&mut self, i: u32, j: u32, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry((i, j)) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, i: u32, j: u32) -> Q {
        self.terms.get(&(i, j)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Q)> {
        self.terms.iter()
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    /// Degree in `x`; `None` for the zero polynomial.
    pub fn deg_x(&self) -> Option<u32> {
        self.terms.keys().map(|&(i, _)| i).max()
    }

    pub fn deg_y(&self) -> Option<u32> {
        self.terms.keys().map(|&(_, j)| j).max()
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|&(i, j)| i + j).max()
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(&k, v)| (k, v * c)).collect(),
        }
    }

    pub fn diff(&self, var: Var) -> Self {
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            match var {
                Var::X if i > 0 => out.add_term(i - 1, j, c * q(i as i64)),
                Var::Y if j > 0 => out.add_term(i, j - 1, c * q(j as i64)),
                _ => {}
            }
        }
        out
    }

    pub fn eval(&self, x: &Q, y: &Q) -> Q {
        let mut acc = Q::zero();
        for (&(i, j), c) in &self.terms {
            acc += c * num_traits::pow(x.clone(), i as usize) * num_traits::pow(y.clone(), j as usize);
        }
        acc
    }

    /// Substitutes `x -> px`, `y -> py`.
    pub fn compose(&self, px: &Poly, py: &Poly) -> Self {
        let mut out = Self::zero();
        let mut xp: Vec<Poly> = vec![Poly::one()];
        let mut yp: Vec<Poly> = vec![Poly::one()];
        for (&(i, j), c) in &self.terms {
            while xp.len() <= i as usize {
                let next = xp.last().unwrap() * px;
                xp.push(next);
            }
            while yp.len() <= j as usize {
                let next = yp.last().unwrap() * py;
                yp.push(next);
            }
            out = &out + &(&xp[i as usize] * &yp[j as usize]).scale(c);
        }
        out
    }

    /// Composition with the affine map `X = A·ξ + b` written as `p(A ξ + b)`.
    pub fn compose_affine(&self, a: &[[Q; 2]; 2], b: &[Q; 2]) -> Self {
        let px = affine_component(&a[0], &b[0]);
        let py = affine_component(&a[1], &b[1]);
        self.compose(&px, &py)
    }

    /// Restriction to the segment `t -> P + t (Q - P)`.
    pub fn restrict(&self, p: &[Q; 2], qp: &[Q; 2]) -> EdgePoly {
        let dx = &qp[0] - &p[0];
        let dy = &qp[1] - &p[1];
        let px = EdgePoly::new(vec![p[0].clone(), dx]);
        let py = EdgePoly::new(vec![p[1].clone(), dy]);
        let mut out = EdgePoly::zero();
        for (&(i, j), c) in &self.terms {
            let t = &px.pow(i) * &py.pow(j);
            out = &out + &t.scale(c);
        }
        out
    }

    /// Exact integral over a reference cell.
    pub fn integrate(&self, cell: RefCell) -> Q {
        self.terms
            .iter()
            .map(|(&(i, j), c)| c * cell.monomial_moment(i, j))
            .fold(Q::zero(), |a, b| a + b)
    }

    /// Integral over the affine image `A·K̂ + b` of a reference cell.
    pub fn integrate_affine(&self, cell: RefCell, a: &[[Q; 2]; 2], b: &[Q; 2]) -> Q {
        let det = &a[0][0] * &a[1][1] - &a[0][1] * &a[1][0];
        let jac = if det < Q::zero() { -det } else { det };
        self.compose_affine(a, b).integrate(cell) * jac
    }
}

fn affine_component(row: &[Q; 2], b: &Q) -> Poly {
    let mut p = Poly::constant(b.clone());
    p.add_term(1, 0, row[0].clone());
    p.add_term(0, 1, row[1].clone());
    p
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(&(i, j), c)| {
                let mut s = fmt_q(c);
                if i > 0 {
                    s.push_str(&if i == 1 { "*x".into() } else { format!("*x^{i}") });
                }
                if j > 0 {
                    s.push_str(&if j == 1 { "*y".into() } else { format!("*y^{j}") });
                }
                s
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (&(i, j), c) in &rhs.terms {
            out.add_term(i, j, c.clone());
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (&(i, j), c) in &rhs.terms {
            out.add_term(i, j, -c.clone());
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Q::one())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (&(i, j), a) in &self.terms {
            for (&(k, l), b) in &rhs.terms {
                out.add_term(i + k, j + l, a * b);
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct VecPoly {
    pub ux: Poly,
    pub uy: Poly,
}

impl VecPoly {
    pub fn new(ux: Poly, uy: Poly) -> Self {
        Self { ux, uy }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(cx: Q, cy: Q) -> Self {
        Self::new(Poly::constant(cx), Poly::constant(cy))
    }

    pub fn is_zero(&self) -> bool {
        self.ux.is_zero() && self.uy.is_zero()
    }

    pub fn grad(p: &Poly) -> Self {
        Self::new(p.diff(Var::X), p.diff(Var::Y))
    }

    /// `(−∂y p, ∂x p)`.
    pub fn grad_perp(p: &Poly) -> Self {
        Self::new(-&p.diff(Var::Y), p.diff(Var::X))
    }

    pub fn div(&self) -> Poly {
        &self.ux.diff(Var::X) + &self.uy.diff(Var::Y)
    }

    /// `−∂y ux + ∂x uy`.
    pub fn curl_scalar(&self) -> Poly {
        &self.uy.diff(Var::X) - &self.ux.diff(Var::Y)
    }

    /// Quarter turn `(ux, uy) -> (uy, −ux)`; maps `curl` onto `div` and
    /// tangential traces onto normal traces.
    pub fn rotate(&self) -> Self {
        Self::new(self.uy.clone(), -&self.ux)
    }

    /// Inverse of [`VecPoly::rotate`].
    pub fn unrotate(&self) -> Self {
        Self::new(-&self.uy, self.ux.clone())
    }

    pub fn dot_const(&self, n: &[Q; 2]) -> Poly {
        &self.ux.scale(&n[0]) + &self.uy.scale(&n[1])
    }

    pub fn dot(&self, other: &VecPoly) -> Poly {
        &(&self.ux * &other.ux) + &(&self.uy * &other.uy)
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self::new(self.ux.scale(c), self.uy.scale(c))
    }

    pub fn compose_affine(&self, a: &[[Q; 2]; 2], b: &[Q; 2]) -> Self {
        Self::new(self.ux.compose_affine(a, b), self.uy.compose_affine(a, b))
    }

    pub fn eval(&self, x: &Q, y: &Q) -> [Q; 2] {
        [self.ux.eval(x, y), self.uy.eval(x, y)]
    }

    pub fn total_degree(&self) -> Option<u32> {
        match (self.ux.total_degree(), self.uy.total_degree()) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    /// Normal trace `u·n` restricted to the edge `P -> Q`, with `n` the
    /// unnormalized outward rotation `(dy, −dx)` of `Q − P`.
    pub fn normal_trace(&self, p: &[Q; 2], qp: &[Q; 2]) -> EdgePoly {
        let n = [&qp[1] - &p[1], &p[0] - &qp[0]];
        self.dot_const(&n).restrict(p, qp)
    }
}

impl fmt::Display for VecPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.ux, self.uy)
    }
}

impl Add for &VecPoly {
    type Output = VecPoly;
    fn add(self, rhs: &VecPoly) -> VecPoly {
        VecPoly::new(&self.ux + &rhs.ux, &self.uy + &rhs.uy)
    }
}

impl Sub for &VecPoly {
    type Output = VecPoly;
    fn sub(self, rhs: &VecPoly) -> VecPoly {
        VecPoly::new(&self.ux - &rhs.ux, &self.uy - &rhs.uy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RefCell {
    /// `[0,1]²`
    UnitSquare,
    /// `conv{(0,0), (1,0), (0,1)}`
    UnitTriangle,
}

impl RefCell {
    pub fn monomial_moment(self, i: u32, j: u32) -> Q {
        match self {
            RefCell::UnitSquare => Q::new(1.into(), ((i + 1) as i64 * (j + 1) as i64).into()),
            RefCell::UnitTriangle => Q::new(factorial(i) * factorial(j), factorial(i + j + 2)),
        }
    }

    pub fn vertices(self) -> Vec<[Q; 2]> {
        let v = |a: i64, b: i64| [q(a), q(b)];
        match self {
            RefCell::UnitSquare => vec![v(0, 0), v(1, 0), v(1, 1), v(0, 1)],
            RefCell::UnitTriangle => vec![v(0, 0), v(1, 0), v(0, 1)],
        }
    }

    /// Counter-clockwise edges `(P, Q)`. Square: bottom, right, top, left.
    pub fn edges(self) -> Vec<([Q; 2], [Q; 2])> {
        let v = self.vertices();
        let n = v.len();
        (0..n).map(|e| (v[e].clone(), v[(e + 1) % n].clone())).collect()
    }

    pub fn n_edges(self) -> usize {
        match self {
            RefCell::UnitSquare => 4,
            RefCell::UnitTriangle => 3,
        }
    }

    pub fn edge(self, e: usize) -> Result<([Q; 2], [Q; 2])> {
        let n = self.n_edges();
        if e >= n {
            return Err(DerhamError::OutOfRange {
                what: "reference edge",
                index: e,
                len: n,
            });
        }
        Ok(self.edges().swap_remove(e))
    }

    pub fn area(self) -> Q {
        Poly::one().integrate(self)
    }

    pub fn name(self) -> &'static str {
        match self {
            RefCell::UnitSquare => "square",
            RefCell::UnitTriangle => "triangle",
        }
    }
}

/// Scalar trace of `p` on reference edge `e`.
pub fn trace_edge_scalar(p: &Poly, cell: RefCell, e: usize) -> Result<EdgePoly> {
    let (a, b) = cell.edge(e)?;
    Ok(p.restrict(&a, &b))
}

/// Normal trace `u·n_e` on reference edge `e` with the unnormalized outward normal.
pub fn trace_edge_normal(u: &VecPoly, cell: RefCell, e: usize) -> Result<EdgePoly> {
    let (a, b) = cell.edge(e)?;
    Ok(u.normal_trace(&a, &b))
}

/// Dense univariate polynomial in `t`, lowest degree first, trailing zeros trimmed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct EdgePoly {
    coeffs: Vec<Q>,
}

impl EdgePoly {
    pub fn new(mut coeffs: Vec<Q>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Q) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(Q::one());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, t: &Q) -> Q {
        self.coeffs.iter().rev().fold(Q::zero(), |acc, c| acc * t + c)
    }

    /// `∫₀¹ p(t) dt`.
    pub fn integrate01(&self) -> Q {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c / q(i as i64 + 1))
            .fold(Q::zero(), |a, b| a + b)
    }

    /// `t -> 1 − t`.
    pub fn reversed(&self) -> Self {
        let one_minus_t = EdgePoly::new(vec![Q::one(), -Q::one()]);
        let mut out = EdgePoly::zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            out = &out + &one_minus_t.pow(i as u32).scale(c);
        }
        out
    }

    /// Coefficients `c_i` with `p = Σ c_i L_i`, `L_i` the shifted Legendre
    /// polynomials; `c_i = (2i+1) ∫₀¹ p L_i`.
    pub fn legendre_coeffs(&self) -> Vec<Q> {
        let n = self.coeffs.len();
        (0..n)
            .map(|i| (self * &legendre_edge(i as u32)).integrate01() * q(2 * i as i64 + 1))
            .collect()
    }
}

impl Add for &EdgePoly {
    type Output = EdgePoly;
    fn add(self, rhs: &EdgePoly) -> EdgePoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let get = |v: &Vec<Q>, i: usize| v.get(i).cloned().unwrap_or_else(Q::zero);
        EdgePoly::new((0..n).map(|i| get(&self.coeffs, i) + get(&rhs.coeffs, i)).collect())
    }
}

impl Sub for &EdgePoly {
    type Output = EdgePoly;
    fn sub(self, rhs: &EdgePoly) -> EdgePoly {
        self + &rhs.scale(&-Q::one())
    }
}

impl Mul for &EdgePoly {
    type Output = EdgePoly;
    fn mul(self, rhs: &EdgePoly) -> EdgePoly {
        if self.is_zero() || rhs.is_zero() {
            return EdgePoly::zero();
        }
        let mut out = vec![Q::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        EdgePoly::new(out)
    }
}

/// Shifted Legendre polynomial of degree `n` on `[0,1]`, `∫₀¹ L_n² = 1/(2n+1)`.
pub fn legendre_edge(n: u32) -> EdgePoly {
    let sign = if n.is_multiple_of(2) { 1 } else { -1 };
    EdgePoly::new(
        (0..=n)
            .map(|j| {
                let c = binomial(n, j) * binomial(n + j, j);
                let s = if j % 2 == 0 { sign } else { -sign };
                Q::from_integer(c) * q(s)
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qf;

    #[test]
    fn grad_perp_of_xy() {
        let p = &Poly::x() * &Poly::y();
        let g = VecPoly::grad_perp(&p);
        assert_eq!(g.ux, -&Poly::x());
        assert_eq!(g.uy, Poly::y());
    }

    #[test]
    fn div_grad_perp_vanishes() {
        let p = Poly::monomial(3, 2);
        assert!(VecPoly::grad_perp(&p).div().is_zero());
        let r = &Poly::monomial(2, 0) + &Poly::monomial(0, 2);
        assert!(VecPoly::grad(&r).curl_scalar().is_zero());
    }

    #[test]
    fn cell_moments() {
        assert_eq!(Poly::one().integrate(RefCell::UnitSquare), q(1));
        assert_eq!(Poly::one().integrate(RefCell::UnitTriangle), qf(1, 2));
        assert_eq!(Poly::monomial(1, 1).integrate(RefCell::UnitTriangle), qf(1, 24));
        // x² over the triangle by iterated integration: ∫₀¹ x²(1−x) dx
        assert_eq!(Poly::monomial(2, 0).integrate(RefCell::UnitTriangle), qf(1, 12));
    }

    #[test]
    fn traces() {
        let t = trace_edge_scalar(&Poly::x(), RefCell::UnitSquare, 1).unwrap();
        assert_eq!(t, EdgePoly::constant(q(1)));
        let u = VecPoly::constant(q(1), q(0));
        assert_eq!(
            trace_edge_normal(&u, RefCell::UnitTriangle, 1).unwrap(),
            EdgePoly::constant(q(1))
        );
        assert!(trace_edge_normal(&u, RefCell::UnitTriangle, 3).is_err());
    }

    #[test]
    fn normal_trace_of_rotated_gradient_is_tangential_derivative() {
        let psi = &(&Poly::monomial(2, 1) + &Poly::monomial(0, 3)) + &Poly::x();
        let u = VecPoly::grad_perp(&psi);
        for (a, b) in RefCell::UnitTriangle.edges() {
            let along = psi.restrict(&a, &b);
            let deriv = EdgePoly::new(
                along
                    .coeffs()
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, c)| c * q(i as i64))
                    .collect(),
            );
            // u·(dy,−dx) = −ψ_y dy − ψ_x dx = −d/dt ψ(P + t d)
            assert_eq!(u.normal_trace(&a, &b), deriv.scale(&q(-1)));
        }
    }

    #[test]
    fn legendre_family() {
        assert_eq!(legendre_edge(0), EdgePoly::constant(q(1)));
        assert_eq!(legendre_edge(1), EdgePoly::new(vec![q(-1), q(2)]));
        assert!((&legendre_edge(1) * &legendre_edge(2)).integrate01().is_zero());
        for n in 0..6 {
            let l = legendre_edge(n);
            assert_eq!((&l * &l).integrate01(), qf(1, 2 * n as i64 + 1));
        }
    }

    #[test]
    fn legendre_expansion_roundtrip() {
        let p = EdgePoly::new(vec![qf(1, 3), q(-2), q(5), qf(7, 2)]);
        let c = p.legendre_coeffs();
        let mut back = EdgePoly::zero();
        for (i, ci) in c.iter().enumerate() {
            back = &back + &legendre_edge(i as u32).scale(ci);
        }
        assert_eq!(back, p);
    }

    #[test]
    fn affine_integral_matches_area() {
        let a = [[q(2), q(0)], [q(0), q(3)]];
        let b = [q(1), q(1)];
        assert_eq!(Poly::one().integrate_affine(RefCell::UnitTriangle, &a, &b), q(3));
    }
}
