//! Exact rational linear algebra over sparse matrices.
//!
//! Elimination works on integer rows: every row is cleared of denominators and
//! kept primitive (gcd of entries = 1) after each update. Combined with a
//! small-pivot choice this keeps coefficient growth modest on the banded
//! operator matrices that appear here.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{DerhamError, Result};
use crate::rational::{to_f64, Q};

/// Sparse row-major rational matrix. Explicit zeros are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMatrix {
    nrows: usize,
    ncols: usize,
    rows: Vec<BTreeMap<usize, Q>>,
}

impl QMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: vec![BTreeMap::new(); nrows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    pub fn from_dense(rows: &[Vec<Q>]) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), ncols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), ncols, "ragged dense matrix");
            for (j, v) in r.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    /// Builds a matrix whose columns are the given dense vectors.
    pub fn from_cols(nrows: usize, cols: &[Vec<Q>]) -> Self {
        let mut m = Self::zeros(nrows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), nrows, "column length mismatch");
            for (i, v) in c.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> Q {
        self.rows[i].get(&j).cloned().unwrap_or_else(Q::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        assert!(i < self.nrows && j < self.ncols, "index out of bounds");
        if v.is_zero() {
            self.rows[i].remove(&j);
        } else {
            self.rows[i].insert(j, v);
        }
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: &Q) {
        if v.is_zero() {
            return;
        }
        let e = self.rows[i].entry(j).or_insert_with(Q::zero);
        *e += v;
        if e.is_zero() {
            self.rows[i].remove(&j);
        }
    }

    pub fn row(&self, i: usize) -> &BTreeMap<usize, Q> {
        &self.rows[i]
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Q)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |(&j, v)| (i, j, v)))
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.is_empty())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.ncols, self.nrows);
        for (i, j, v) in self.entries() {
            t.rows[j].insert(i, v.clone());
        }
        t
    }

    pub fn col(&self, j: usize) -> Vec<Q> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    pub fn cols(&self) -> Vec<Vec<Q>> {
        let t = self.transpose();
        (0..self.ncols)
            .map(|j| {
                let mut v = vec![Q::zero(); self.nrows];
                for (&i, x) in &t.rows[j] {
                    v[i] = x.clone();
                }
                v
            })
            .collect()
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        let pos: HashMap<usize, usize> = idx.iter().enumerate().map(|(k, &j)| (j, k)).collect();
        let mut m = Self::zeros(self.nrows, idx.len());
        for (i, j, v) in self.entries() {
            if let Some(&k) = pos.get(&j) {
                m.rows[i].insert(k, v.clone());
            }
        }
        m
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.nrows, other.nrows, "hstack row mismatch");
        let mut m = self.clone();
        m.ncols += other.ncols;
        for (i, r) in other.rows.iter().enumerate() {
            for (&j, v) in r {
                m.rows[i].insert(self.ncols + j, v.clone());
            }
        }
        m
    }

    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.ncols, "vstack column mismatch");
        let mut m = self.clone();
        m.nrows += other.nrows;
        m.rows.extend(other.rows.iter().cloned());
        m
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zeros(self.nrows, self.ncols);
        }
        let mut m = self.clone();
        for r in &mut m.rows {
            for v in r.values_mut() {
                *v *= c;
            }
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(DerhamError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut m = Self::zeros(self.nrows, other.ncols);
        for (i, r) in self.rows.iter().enumerate() {
            let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
            for (&k, a) in r {
                for (&j, b) in &other.rows[k] {
                    *acc.entry(j).or_insert_with(Q::zero) += a * b;
                }
            }
            acc.retain(|_, v| !v.is_zero());
            m.rows[i] = acc;
        }
        Ok(m)
    }

    pub fn mul_vec(&self, x: &[Q]) -> Vec<Q> {
        assert_eq!(x.len(), self.ncols, "vector length mismatch");
        self.rows
            .iter()
            .map(|r| r.iter().fold(Q::zero(), |acc, (&j, v)| acc + v * &x[j]))
            .collect()
    }

    /// `xᵀ M y`.
    pub fn bilinear(&self, x: &[Q], y: &[Q]) -> Q {
        let my = self.mul_vec(y);
        dot(x, &my)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.entries() {
            m[(i, j)] = to_f64(v);
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols && self.entries().all(|(i, j, v)| self.get(j, i) == *v)
    }
}

pub fn dot(x: &[Q], y: &[Q]) -> Q {
    x.iter().zip(y).fold(Q::zero(), |acc, (a, b)| acc + a * b)
}

pub fn axpy(a: &Q, x: &[Q], y: &[Q]) -> Vec<Q> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

pub fn vec_sub(x: &[Q], y: &[Q]) -> Vec<Q> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn vec_add(x: &[Q], y: &[Q]) -> Vec<Q> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

pub fn is_zero_vec(x: &[Q]) -> bool {
    x.iter().all(|v| v.is_zero())
}

/// Scales a rational vector to a primitive integer vector (first nonzero positive).
pub fn primitive(x: &[Q]) -> Vec<Q> {
    let mut l = BigInt::one();
    for v in x {
        l = l.lcm(v.denom());
    }
    let ints: Vec<BigInt> = x
        .iter()
        .map(|v| (v * Q::from_integer(l.clone())).to_integer())
        .collect();
    let mut g = BigInt::zero();
    for v in &ints {
        g = g.gcd(v);
    }
    if g.is_zero() {
        return x.to_vec();
    }
    let sign = match ints.iter().find(|v| !v.is_zero()) {
        Some(v) if v.is_negative() => -BigInt::one(),
        _ => BigInt::one(),
    };
    ints.into_iter().map(|v| Q::from_integer(v * &sign / &g)).collect()
}

type IRow = Vec<(usize, BigInt)>;

fn to_irow(row: &BTreeMap<usize, Q>) -> IRow {
    let mut l = BigInt::one();
    for v in row.values() {
        l = l.lcm(v.denom());
    }
    let mut r: IRow = row
        .iter()
        .map(|(&j, v)| (j, (v * Q::from_integer(l.clone())).to_integer()))
        .collect();
    make_primitive(&mut r);
    r
}

fn make_primitive(r: &mut IRow) {
    let mut g = BigInt::zero();
    for (_, v) in r.iter() {
        g = g.gcd(v);
        if g.is_one() {
            return;
        }
    }
    if g.is_zero() || g.is_one() {
        return;
    }
    for (_, v) in r.iter_mut() {
        *v /= &g;
    }
}

fn lookup(r: &IRow, c: usize) -> Option<&BigInt> {
    r.binary_search_by_key(&c, |e| e.0).ok().map(|k| &r[k].1)
}

/// `a·r − b·s`, made primitive.
fn combine(a: &BigInt, r: &IRow, b: &BigInt, s: &IRow) -> IRow {
    let mut out = Vec::with_capacity(r.len() + s.len());
    let (mut i, mut j) = (0, 0);
    while i < r.len() || j < s.len() {
        let take = match (r.get(i), s.get(j)) {
            (Some(x), Some(y)) => x.0.cmp(&y.0),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        match take {
            std::cmp::Ordering::Less => {
                out.push((r[i].0, a * &r[i].1));
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push((s[j].0, -(b * &s[j].1)));
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let v = a * &r[i].1 - b * &s[j].1;
                if !v.is_zero() {
                    out.push((r[i].0, v));
                }
                i += 1;
                j += 1;
            }
        }
    }
    make_primitive(&mut out);
    out
}

/// Incrementally built row-reduced basis of a row space.
///
/// Each stored row has a pivot column that is zero in every other stored row.
#[derive(Clone, Debug)]
pub struct RowSpace {
    ncols: usize,
    pivot_limit: usize,
    rows: Vec<IRow>,
    pivots: Vec<usize>,
    row_of_pivot: HashMap<usize, usize>,
    col_weight: Vec<usize>,
}

impl RowSpace {
    pub fn new(ncols: usize) -> Self {
        Self::with_pivot_limit(ncols, ncols)
    }

    /// Pivots are only taken in columns `< pivot_limit`; used for augmented systems.
    pub fn with_pivot_limit(ncols: usize, pivot_limit: usize) -> Self {
        Self {
            ncols,
            pivot_limit,
            rows: Vec::new(),
            pivots: Vec::new(),
            row_of_pivot: HashMap::new(),
            col_weight: vec![0; ncols],
        }
    }

    pub fn set_col_weights(&mut self, w: Vec<usize>) {
        assert_eq!(w.len(), self.ncols);
        self.col_weight = w;
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    fn reduce_irow(&self, mut r: IRow) -> IRow {
        let hits: Vec<usize> = r
            .iter()
            .filter(|(c, _)| self.row_of_pivot.contains_key(c))
            .map(|e| e.0)
            .collect();
        for c in hits {
            let Some(a) = lookup(&r, c).cloned() else { continue };
            let k = self.row_of_pivot[&c];
            let p = lookup(&self.rows[k], c).expect("pivot entry").clone();
            let g = a.gcd(&p);
            r = combine(&(&p / &g), &r, &(&a / &g), &self.rows[k]);
        }
        r
    }

    /// Residual of `row` after elimination against the basis; zero iff `row` is in the span.
    pub fn reduce(&self, row: &BTreeMap<usize, Q>) -> BTreeMap<usize, Q> {
        self.reduce_irow(to_irow(row))
            .into_iter()
            .map(|(c, v)| (c, Q::from_integer(v)))
            .collect()
    }

    pub fn contains(&self, row: &BTreeMap<usize, Q>) -> bool {
        self.reduce_irow(to_irow(row)).is_empty()
    }

    /// Adds a row. Returns `Ok(Some(pivot))` if the rank grew, `Ok(None)` if the
    /// row was dependent, and `Err(())` if the residual lives entirely in columns
    /// at or beyond the pivot limit.
    #[allow(clippy::result_unit_err)]
    pub fn insert(&mut self, row: &BTreeMap<usize, Q>) -> std::result::Result<Option<usize>, ()> {
        let r = self.reduce_irow(to_irow(row));
        if r.is_empty() {
            return Ok(None);
        }
        let best = r
            .iter()
            .filter(|(c, _)| *c < self.pivot_limit)
            .min_by_key(|(c, v)| (v.bits(), self.col_weight[*c], *c))
            .map(|e| e.0);
        let Some(c) = best else { return Err(()) };
        let p = lookup(&r, c).unwrap().clone();
        for k in 0..self.rows.len() {
            if let Some(a) = lookup(&self.rows[k], c).cloned() {
                let g = a.gcd(&p);
                self.rows[k] = combine(&(&p / &g), &self.rows[k], &(&a / &g), &r);
            }
        }
        self.row_of_pivot.insert(c, self.rows.len());
        self.pivots.push(c);
        self.rows.push(r);
        Ok(Some(c))
    }

    /// Value of a stored row at a column, as a rational.
    fn entry(&self, k: usize, c: usize) -> Q {
        lookup(&self.rows[k], c).map_or_else(Q::zero, |v| Q::from_integer(v.clone()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RankResult {
    pub rank: usize,
    pub nullity: usize,
    /// Primitive integer vectors, one per free column, in increasing free-column order.
    #[serde(skip)]
    pub nullspace: Vec<Vec<Q>>,
    /// `(row index, pivot column)` in elimination order.
    pub pivot_log: Vec<(usize, usize)>,
    /// Rows of the input that were independent, in input order.
    pub independent_rows: Vec<usize>,
}

fn build_rowspace(m: &QMatrix) -> (RowSpace, Vec<(usize, usize)>) {
    let mut weights = vec![0usize; m.ncols()];
    for (_, j, _) in m.entries() {
        weights[j] += 1;
    }
    let mut rs = RowSpace::new(m.ncols());
    rs.set_col_weights(weights);
    // sparse rows first: less fill
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by_key(|&i| (m.row(i).len(), i));
    let mut log = Vec::new();
    for i in order {
        if let Ok(Some(c)) = rs.insert(m.row(i)) {
            log.push((i, c));
        }
    }
    (rs, log)
}

/// Exact rank and nullspace basis.
pub fn rank_nullspace(m: &QMatrix) -> RankResult {
    let (rs, log) = build_rowspace(m);
    let rank = rs.rank();
    let mut pivot_col = vec![false; m.ncols()];
    for &c in rs.pivots() {
        pivot_col[c] = true;
    }
    let mut nullspace = Vec::new();
    for j in (0..m.ncols()).filter(|&j| !pivot_col[j]) {
        let mut x = vec![Q::zero(); m.ncols()];
        x[j] = Q::one();
        for (k, &c) in rs.pivots().iter().enumerate() {
            let rj = rs.entry(k, j);
            if !rj.is_zero() {
                x[c] = -rj / rs.entry(k, c);
            }
        }
        nullspace.push(primitive(&x));
    }
    let mut independent_rows: Vec<usize> = log.iter().map(|e| e.0).collect();
    independent_rows.sort_unstable();
    RankResult {
        rank,
        nullity: m.ncols() - rank,
        nullspace,
        pivot_log: log,
        independent_rows,
    }
}

pub fn rank(m: &QMatrix) -> usize {
    // rank of the smaller orientation is cheaper to eliminate
    if m.nrows() > 2 * m.ncols() {
        build_rowspace(&m.transpose()).0.rank()
    } else {
        build_rowspace(m).0.rank()
    }
}

/// Indices of a maximal set of linearly independent columns (lowest indices preferred).
pub fn independent_cols(m: &QMatrix) -> Vec<usize> {
    let t = m.transpose();
    let mut rs = RowSpace::new(m.nrows());
    (0..m.ncols())
        .filter(|&j| matches!(rs.insert(t.row(j)), Ok(Some(_))))
        .collect()
}

/// Any exact solution of `A x = b`, or `None` if the system is inconsistent.
pub fn solve(a: &QMatrix, b: &[Q]) -> Result<Option<Vec<Q>>> {
    if b.len() != a.nrows() {
        return Err(DerhamError::DimensionMismatch(format!(
            "rhs length {} vs {} rows",
            b.len(),
            a.nrows()
        )));
    }
    let n = a.ncols();
    let mut rs = RowSpace::with_pivot_limit(n + 1, n);
    for i in 0..a.nrows() {
        let mut row = a.row(i).clone();
        if !b[i].is_zero() {
            row.insert(n, b[i].clone());
        }
        if rs.insert(&row).is_err() {
            return Ok(None);
        }
    }
    let mut x = vec![Q::zero(); n];
    for (k, &c) in rs.pivots().iter().enumerate() {
        x[c] = rs.entry(k, n) / rs.entry(k, c);
    }
    Ok(Some(x))
}

/// Minimum-norm (Euclidean) solution `x = Aᵀ y` with `A Aᵀ y = b`.
pub fn solve_min_norm(a: &QMatrix, b: &[Q]) -> Result<Option<Vec<Q>>> {
    let at = a.transpose();
    let aat = a.mul(&at)?;
    Ok(solve(&aat, b)?.map(|y| at.mul_vec(&y)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpanRelation {
    Equal,
    LeftInRight,
    RightInLeft,
    Incomparable,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpanCert {
    pub relation: SpanRelation,
    pub rank_left: usize,
    pub rank_right: usize,
    pub rank_union: usize,
    /// Column indices of the left set that are not in the right span.
    pub left_outside: Vec<usize>,
    /// Column indices of the right set that are not in the left span.
    pub right_outside: Vec<usize>,
}

fn col_space(m: &QMatrix) -> (RowSpace, QMatrix) {
    let t = m.transpose();
    let mut rs = RowSpace::new(m.nrows());
    for j in 0..t.nrows() {
        let _ = rs.insert(t.row(j));
    }
    (rs, t)
}

/// Compares column spans of two matrices with the same number of rows.
pub fn span_compare(a: &QMatrix, b: &QMatrix) -> Result<SpanCert> {
    if a.nrows() != b.nrows() {
        return Err(DerhamError::DimensionMismatch(format!(
            "span_compare: {} vs {} rows",
            a.nrows(),
            b.nrows()
        )));
    }
    let (sa, at) = col_space(a);
    let (sb, bt) = col_space(b);
    let left_outside: Vec<usize> = (0..a.ncols()).filter(|&j| !sb.contains(at.row(j))).collect();
    let right_outside: Vec<usize> = (0..b.ncols()).filter(|&j| !sa.contains(bt.row(j))).collect();
    let relation = match (left_outside.is_empty(), right_outside.is_empty()) {
        (true, true) => SpanRelation::Equal,
        (true, false) => SpanRelation::LeftInRight,
        (false, true) => SpanRelation::RightInLeft,
        (false, false) => SpanRelation::Incomparable,
    };
    Ok(SpanCert {
        relation,
        rank_left: sa.rank(),
        rank_right: sb.rank(),
        rank_union: rank(&a.hstack(b)),
        left_outside,
        right_outside,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectSumCert {
    pub part_ranks: Vec<usize>,
    pub union_rank: usize,
    pub direct: bool,
    /// `None` when orthogonality was not requested.
    pub orthogonal: Option<bool>,
}

/// Checks that the column spans of `parts` form a direct sum, and optionally that
/// they are pairwise orthogonal under `gram`.
pub fn direct_sum_check(parts: &[QMatrix], gram: Option<&QMatrix>) -> Result<DirectSumCert> {
    let Some(first) = parts.first() else {
        return Ok(DirectSumCert {
            part_ranks: vec![],
            union_rank: 0,
            direct: true,
            orthogonal: gram.map(|_| true),
        });
    };
    let n = first.nrows();
    if parts.iter().any(|p| p.nrows() != n) {
        return Err(DerhamError::DimensionMismatch("direct_sum_check: row mismatch".into()));
    }
    let part_ranks: Vec<usize> = parts.iter().map(rank).collect();
    let union = parts[1..].iter().fold(first.clone(), |acc, p| acc.hstack(p));
    let union_rank = rank(&union);
    let orthogonal = match gram {
        None => None,
        Some(g) => {
            let mut ok = true;
            for i in 0..parts.len() {
                let gi = g.mul(&parts[i])?;
                let git = gi.transpose();
                for p in &parts[i + 1..] {
                    if !git.mul(p)?.is_zero() {
                        ok = false;
                    }
                }
            }
            Some(ok)
        }
    };
    Ok(DirectSumCert {
        direct: union_rank == part_ranks.iter().sum::<usize>(),
        part_ranks,
        union_rank,
        orthogonal,
    })
}

/// Numerical rank: number of singular values above `tol · σ_max`.
pub fn float_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Dense exact inverse by Gauss–Jordan.
pub fn inverse(m: &QMatrix) -> Result<QMatrix> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(DerhamError::DimensionMismatch("inverse of non-square matrix".into()));
    }
    let mut a: Vec<Vec<Q>> = (0..n)
        .map(|i| {
            let mut r: Vec<Q> = (0..n).map(|j| m.get(i, j)).collect();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .find(|&r| !a[r][c].is_zero())
            .ok_or_else(|| DerhamError::Singular(format!("no pivot in column {c}")))?;
        a.swap(c, p);
        let inv = Q::one() / &a[c][c];
        for v in a[c].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = a[c].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != c && !row[c].is_zero() {
                let f = row[c].clone();
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    if !pv.is_zero() {
                        *v -= &f * pv;
                    }
                }
            }
        }
    }
    let rows: Vec<Vec<Q>> = a.into_iter().map(|r| r[n..].to_vec()).collect();
    Ok(QMatrix::from_dense(&rows))
}

/// Exact `L D Lᵀ` factorization of a symmetric matrix (unit lower `L`).
#[derive(Clone, Debug)]
pub struct Ldlt {
    l: Vec<BTreeMap<usize, Q>>,
    d: Vec<Q>,
}

impl Ldlt {
    pub fn factor(m: &QMatrix) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() {
            return Err(DerhamError::DimensionMismatch("LDLt of non-square matrix".into()));
        }
        // dense working copy of the lower triangle
        let mut a: Vec<Vec<Q>> = (0..n).map(|i| (0..=i).map(|j| m.get(i, j)).collect()).collect();
        let mut d = Vec::with_capacity(n);
        let mut l: Vec<BTreeMap<usize, Q>> = vec![BTreeMap::new(); n];
        for j in 0..n {
            let dj = a[j][j].clone();
            if dj.is_zero() {
                return Err(DerhamError::Singular(format!("zero pivot at {j}")));
            }
            let col: Vec<(usize, Q)> = ((j + 1)..n)
                .filter(|&i| !a[i][j].is_zero())
                .map(|i| (i, &a[i][j] / &dj))
                .collect();
            for (idx, (i, lij)) in col.iter().enumerate() {
                for (k, lkj) in &col[..=idx] {
                    let upd = lij * lkj * &dj;
                    a[*i][*k] -= upd;
                }
            }
            for (i, lij) in col {
                l[i].insert(j, lij);
            }
            d.push(dj);
        }
        Ok(Self { l, d })
    }

    pub fn pivots(&self) -> &[Q] {
        &self.d
    }

    pub fn is_positive_definite(&self) -> bool {
        self.d.iter().all(|v| v.is_positive())
    }

    pub fn solve(&self, b: &[Q]) -> Vec<Q> {
        let n = self.d.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i].clone();
            for (&j, lij) in &self.l[i] {
                s -= lij * &y[j];
            }
            y[i] = s;
        }
        for i in 0..n {
            y[i] = &y[i] / &self.d[i];
        }
        // Lᵀ x = y, traversing L by rows
        let mut x = y;
        for i in (0..n).rev() {
            let xi = x[i].clone();
            for (&j, lij) in &self.l[i] {
                x[j] = &x[j] - lij * &xi;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};

    fn m(rows: &[&[i64]]) -> QMatrix {
        QMatrix::from_dense(
            &rows
                .iter()
                .map(|r| r.iter().map(|&v| q(v)).collect())
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn zero_matrix() {
        let r = rank_nullspace(&QMatrix::zeros(3, 4));
        assert_eq!((r.rank, r.nullity, r.nullspace.len()), (0, 4, 4));
    }

    #[test]
    fn nullspace_vectors_vanish() {
        let a = m(&[&[1, 2, 3, 4], &[2, 4, 6, 8], &[1, 0, 1, 0]]);
        let r = rank_nullspace(&a);
        assert_eq!(r.rank, 2);
        for v in &r.nullspace {
            assert!(is_zero_vec(&a.mul_vec(v)));
        }
    }

    #[test]
    fn solve_and_inconsistency() {
        let a = m(&[&[1, 1], &[1, -1], &[2, 0]]);
        let x = solve(&a, &[q(3), q(1), q(4)]).unwrap().unwrap();
        assert_eq!(x, vec![q(2), q(1)]);
        assert!(solve(&a, &[q(3), q(1), q(5)]).unwrap().is_none());
    }

    #[test]
    fn min_norm_solution() {
        let a = m(&[&[1, 1]]);
        let x = solve_min_norm(&a, &[q(2)]).unwrap().unwrap();
        assert_eq!(x, vec![q(1), q(1)]);
    }

    #[test]
    fn span_relations() {
        let a = m(&[&[1, 0], &[0, 1], &[0, 0]]);
        let b = m(&[&[1], &[1], &[0]]);
        assert_eq!(span_compare(&a, &a).unwrap().relation, SpanRelation::Equal);
        assert_eq!(span_compare(&b, &a).unwrap().relation, SpanRelation::LeftInRight);
        assert_eq!(span_compare(&a, &b).unwrap().relation, SpanRelation::RightInLeft);
        let c = m(&[&[0], &[0], &[1]]);
        assert_eq!(span_compare(&b, &c).unwrap().relation, SpanRelation::Incomparable);
    }

    #[test]
    fn identical_columns_are_not_direct() {
        let a = m(&[&[1], &[2]]);
        let cert = direct_sum_check(&[a.clone(), a], None).unwrap();
        assert!(!cert.direct);
    }

    #[test]
    fn float_rank_basics() {
        assert_eq!(float_rank(&DMatrix::identity(5, 5), 1e-12), 5);
        assert_eq!(float_rank(&DMatrix::zeros(3, 3), 1e-12), 0);
    }

    #[test]
    fn inverse_and_ldlt() {
        let a = QMatrix::from_dense(&[
            vec![q(4), q(2), qf(1, 2)],
            vec![q(2), q(3), q(1)],
            vec![qf(1, 2), q(1), q(2)],
        ]);
        let inv = inverse(&a).unwrap();
        assert_eq!(a.mul(&inv).unwrap(), QMatrix::identity(3));
        let f = Ldlt::factor(&a).unwrap();
        assert!(f.is_positive_definite());
        let b = vec![q(1), q(-2), qf(3, 7)];
        assert_eq!(a.mul_vec(&f.solve(&b)), b);
    }
}
