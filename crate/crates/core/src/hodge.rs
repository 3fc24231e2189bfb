//! Discrete Hodge–Helmholtz decomposition `B = Range(first) ⊕ Range(second*) ⊕ constants`.

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::complexcheck::{Complex, DiagramSpec};
use crate::error::{DerhamError, Result};
use crate::exactla::{dot, independent_cols, is_zero_vec, rank, rank_nullspace, vec_add, vec_sub, Ldlt, QMatrix};
use crate::fespace::{FaceMetric, SpaceDescriptor};
use crate::operators::adjoint;
use crate::rational::{fmt_q, parse_q, to_f64, Q};
use crate::refcheck::random_q;
use crate::report::Report;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Backend {
    Exact,
    Float { tol: f64 },
}

/// G-orthogonal projector onto the span of independent columns `r`.
#[derive(Clone, Debug)]
struct Projector {
    r: QMatrix,
    /// `rᵀ G`
    rtg: QMatrix,
    normal: Ldlt,
}

impl Projector {
    fn new(r: QMatrix, g: &QMatrix) -> Result<Self> {
        let rtg = r.transpose().mul(g)?;
        let normal = Ldlt::factor(&rtg.mul(&r)?)?;
        if !normal.is_positive_definite() {
            return Err(DerhamError::Singular("projected normal equations are not SPD".into()));
        }
        Ok(Self { r, rtg, normal })
    }

    fn apply(&self, u: &[Q]) -> Vec<Q> {
        if self.r.ncols() == 0 {
            return vec![Q::zero(); u.len()];
        }
        self.r.mul_vec(&self.normal.solve(&self.rtg.mul_vec(u)))
    }
}

/// Factorizations shared by every decomposition on one spec; safe to share across threads.
#[derive(Clone, Debug)]
pub struct HodgeSolver {
    pub complex: Complex,
    pub gram: QMatrix,
    /// `G_B⁻¹ D2ᵀ G_C`
    pub adjoint: QMatrix,
    pub rank_first: usize,
    pub rank_adjoint: usize,
    curl: Projector,
    div: Projector,
    harm: Projector,
}

#[derive(Clone, Debug)]
pub struct HodgeParts {
    pub u_curl: Vec<Q>,
    pub u_div: Vec<Q>,
    pub u_harm: Vec<Q>,
    pub backend: Backend,
}

impl HodgeParts {
    /// Parts as `"p/q"` strings.
    pub fn to_json(&self) -> serde_json::Value {
        let s = |v: &[Q]| v.iter().map(fmt_q).collect::<Vec<_>>();
        serde_json::json!({
            "u_curl": s(&self.u_curl),
            "u_div": s(&self.u_div),
            "u_harm": s(&self.u_harm),
            "backend": self.backend,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FloatHodgeParts {
    pub u_curl: Vec<f64>,
    pub u_div: Vec<f64>,
    pub u_harm: Vec<f64>,
    pub backend: Backend,
    /// Largest `|⟨a, b⟩_G| / ‖u‖²_G` over the three pairs.
    pub max_cross: f64,
}

/// Coefficients of the fields `(1,0)` and `(0,1)`, certified harmonic.
pub fn harmonic_basis(spec: &DiagramSpec) -> Result<[Vec<Q>; 2]> {
    if spec.diagram.parts().is_none() {
        let d = crate::complexcheck::naive_quad_diagnostic(&spec.mesh)?;
        return Err(DerhamError::Membership {
            what: format!("harmonic space of dimension {} (> 2)", d.kernel_dim),
            entity: spec.label(),
            column: 0,
        });
    }
    let cx = Complex::build(spec)?;
    let k = cx.constant_fields()?;
    let g = cx.b.gram(cx.mesh(), FaceMetric::Parametric)?;
    let (ex, ey) = (k.col(0), k.col(1));
    for (i, e) in [&ex, &ey].into_iter().enumerate() {
        let in_ker = is_zero_vec(&cx.d2.matrix.mul_vec(e));
        let perp = is_zero_vec(&cx.d1.matrix.transpose().mul_vec(&g.mul_vec(e)));
        if !(in_ker && perp) {
            return Err(DerhamError::Membership {
                what: "constant field outside ker(second) ∩ Range(first)^⊥".into(),
                entity: spec.label(),
                column: i,
            });
        }
    }
    Ok([ex, ey])
}

impl HodgeSolver {
    pub fn new(spec: &DiagramSpec) -> Result<Self> {
        let complex = Complex::build(spec)?;
        let mesh = complex.mesh();
        let gram = complex.b.gram(mesh, FaceMetric::Parametric)?;
        let gc = complex.c.gram(mesh, FaceMetric::Parametric)?;
        let adj = adjoint(&complex.d2.matrix, &gram, &gc)?;
        let r1 = complex.d1.matrix.select_cols(&independent_cols(&complex.d1.matrix));
        let r2 = adj.select_cols(&independent_cols(&adj));
        let kf = complex.constant_fields()?;
        Ok(Self {
            rank_first: r1.ncols(),
            rank_adjoint: r2.ncols(),
            curl: Projector::new(r1, &gram)?,
            div: Projector::new(r2, &gram)?,
            harm: Projector::new(kf, &gram)?,
            adjoint: adj,
            gram,
            complex,
        })
    }

    pub fn dim(&self) -> usize {
        self.complex.b.dim
    }

    pub fn decompose(&self, u: &[Q]) -> Result<HodgeParts> {
        if u.len() != self.dim() {
            return Err(DerhamError::DimensionMismatch(format!(
                "field of length {} vs dim B = {}",
                u.len(),
                self.dim()
            )));
        }
        let u_curl = self.curl.apply(u);
        let u_div = self.div.apply(u);
        let u_harm = vec_sub(&vec_sub(u, &u_curl), &u_div);
        Ok(HodgeParts {
            u_curl,
            u_div,
            u_harm,
            backend: Backend::Exact,
        })
    }

    /// Exact checks on one decomposition.
    pub fn certify(&self, u: &[Q], p: &HodgeParts, rep: &mut Report, tag: &str) {
        let ip = |a: &[Q], b: &[Q]| dot(a, &self.gram.mul_vec(b));
        rep.check_true(format!("{tag}<curl,div> = 0"), ip(&p.u_curl, &p.u_div).is_zero());
        rep.check_true(format!("{tag}<curl,harm> = 0"), ip(&p.u_curl, &p.u_harm).is_zero());
        rep.check_true(format!("{tag}<div,harm> = 0"), ip(&p.u_div, &p.u_harm).is_zero());
        let sum = vec_add(&vec_add(&p.u_curl, &p.u_div), &p.u_harm);
        rep.check_true(format!("{tag}parts sum to u"), sum == u);
        rep.check_true(
            format!("{tag}harm is a constant field"),
            self.harm.apply(&p.u_harm) == p.u_harm,
        );
        rep.check_true(
            format!("{tag}second(curl part) = 0"),
            is_zero_vec(&self.complex.d2.matrix.mul_vec(&p.u_curl)),
        );
    }

    pub fn decompose_float(&self, u: &[f64], tol: f64) -> Result<FloatHodgeParts> {
        let g = self.gram.to_f64();
        let uu = DVector::from_column_slice(u);
        let proj = |r: &DMatrix<f64>| -> Result<DVector<f64>> {
            if r.ncols() == 0 {
                return Ok(DVector::zeros(u.len()));
            }
            let rtg = r.transpose() * &g;
            let n = &rtg * r;
            let pinv = n.pseudo_inverse(tol).map_err(|e| DerhamError::Backend(e.to_string()))?;
            Ok(r * (pinv * (rtg * &uu)))
        };
        let c = proj(&self.complex.d1.matrix.to_f64())?;
        let d = proj(&self.adjoint.to_f64())?;
        let h = &uu - &c - &d;
        let ip = |a: &DVector<f64>, b: &DVector<f64>| a.dot(&(&g * b));
        let norm2 = ip(&uu, &uu).max(f64::MIN_POSITIVE);
        let max_cross = [ip(&c, &d), ip(&c, &h), ip(&d, &h)]
            .iter()
            .map(|v| v.abs() / norm2)
            .fold(0.0, f64::max);
        Ok(FloatHodgeParts {
            u_curl: c.as_slice().to_vec(),
            u_div: d.as_slice().to_vec(),
            u_harm: h.as_slice().to_vec(),
            backend: Backend::Float { tol },
            max_cross,
        })
    }
}

/// Seeded random coefficient vectors in `B`.
pub fn random_fields(dim: usize, count: usize, seed: u64) -> Vec<Vec<Q>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| random_q(&mut rng)).collect())
        .collect()
}

pub fn hodge_decompose(u: &[Q], spec: &DiagramSpec) -> Result<HodgeParts> {
    HodgeSolver::new(spec)?.decompose(u)
}

/// Decomposes `fields` random fields and certifies every identity.
pub fn hodge_check(spec: &DiagramSpec, fields: usize, seed: u64, backend: Backend) -> Result<Report> {
    let solver = HodgeSolver::new(spec)?;
    let mut rep = Report::new(format!("hodge {}", spec.label()));
    let db = solver.dim();
    rep.check(
        "rank first + rank adjoint + 2 = dim B",
        db,
        solver.rank_first + solver.rank_adjoint + 2,
    );
    rep.check(
        "rank adjoint = rank second",
        rank(&solver.complex.d2.matrix),
        solver.rank_adjoint,
    );
    let samples = random_fields(db, fields, seed);
    match backend {
        Backend::Exact => {
            let mut failures = 0usize;
            for (n, u) in samples.iter().enumerate() {
                let p = solver.decompose(u)?;
                let mut sub = Report::new("");
                solver.certify(u, &p, &mut sub, "");
                if !sub.passed() {
                    failures += 1;
                    rep.absorb(&format!("field {n}: "), sub);
                }
                if n == 0 {
                    for (name, part) in [("curl", &p.u_curl), ("div", &p.u_div), ("harm", &p.u_harm)] {
                        let again = solver.decompose(part)?;
                        let expect_same = |v: &Vec<Q>, own: bool| if own { v == part } else { is_zero_vec(v) };
                        rep.check_true(
                            format!("idempotent on {name} part"),
                            expect_same(&again.u_curl, name == "curl")
                                && expect_same(&again.u_div, name == "div")
                                && expect_same(&again.u_harm, name == "harm"),
                        );
                    }
                }
            }
            rep.check(format!("fields certified (of {fields})"), fields, fields - failures);
            let ker = rank_nullspace(&solver.complex.d1.matrix).nullity;
            rep.check("dim ker first", 1, ker);
        }
        Backend::Float { tol } => {
            let mut worst = 0.0f64;
            for u in &samples {
                let uf: Vec<f64> = u.iter().map(to_f64).collect();
                worst = worst.max(solver.decompose_float(&uf, tol)?.max_cross);
            }
            rep.check_true(format!("max relative cross term <= {tol:e}"), worst <= tol);
            rep.witness("max_relative_cross_term", worst);
        }
    }
    Ok(rep.finish())
}

fn json_q(v: &serde_json::Value) -> Result<Q> {
    match v {
        serde_json::Value::String(s) => parse_q(s),
        serde_json::Value::Number(n) => parse_q(&n.to_string()).or_else(|_| {
            n.as_f64()
                .and_then(Q::from_float)
                .ok_or_else(|| DerhamError::Parse(format!("not a finite number: {n}")))
        }),
        other => Err(DerhamError::Parse(format!(
            "expected a number or \"p/q\" string, got {other}"
        ))),
    }
}

/// Reads a coefficient vector: either a bare JSON array, or
/// `{"space": {"family": .., "dim": ..}, "coeffs": [..]}` checked against `expected`.
pub fn parse_field(v: &serde_json::Value, expected: &SpaceDescriptor) -> Result<Vec<Q>> {
    let coeffs = match v {
        serde_json::Value::Array(a) => a,
        serde_json::Value::Object(o) => {
            if let Some(space) = o.get("space") {
                let fam = space.get("family").and_then(|f| f.as_str());
                if fam.is_some_and(|f| f != expected.family) {
                    return Err(DerhamError::InvalidInput(format!(
                        "field is tagged {:?}, expected {}",
                        fam.unwrap_or_default(),
                        expected.family
                    )));
                }
            }
            o.get("coeffs")
                .and_then(|c| c.as_array())
                .ok_or_else(|| DerhamError::Parse("missing \"coeffs\" array".into()))?
        }
        _ => return Err(DerhamError::Parse("field must be an array or an object".into())),
    };
    if coeffs.len() != expected.dim {
        return Err(DerhamError::DimensionMismatch(format!(
            "field has {} coefficients, {} has dimension {}",
            coeffs.len(),
            expected.family,
            expected.dim
        )));
    }
    coeffs.iter().map(json_q).collect()
}

/// `⟨u, u⟩_G`, exposed for callers that want norms of parts.
pub fn energy(solver: &HodgeSolver, u: &[Q]) -> Q {
    dot(u, &solver.gram.mul_vec(u))
}

/// The constant field `(cx, cy)` in `B`.
pub fn constant_input(solver: &HodgeSolver, cx: i64, cy: i64) -> Result<Vec<Q>> {
    let c = &solver.complex;
    let mut u = c.b.constant_field(c.mesh(), &Q::from_integer(cx.into()), &Q::zero())?;
    let v = c.b.constant_field(c.mesh(), &Q::zero(), &Q::one())?;
    u = vec_add(
        &u,
        &v.iter().map(|x| x * Q::from_integer(cy.into())).collect::<Vec<_>>(),
    );
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexcheck::Diagram;

    #[test]
    fn trivial_inputs() {
        let spec = DiagramSpec::unit(Diagram::TriDp, 2, 2, 1).unwrap();
        let s = HodgeSolver::new(&spec).unwrap();
        let c = constant_input(&s, 2, -3).unwrap();
        let p = s.decompose(&c).unwrap();
        assert!(is_zero_vec(&p.u_curl) && is_zero_vec(&p.u_div));
        assert_eq!(p.u_harm, c);

        let psi = random_fields(s.complex.a.dim, 1, 3).remove(0);
        let g = s.complex.d1.matrix.mul_vec(&psi);
        let p = s.decompose(&g).unwrap();
        assert_eq!(p.u_curl, g);
        assert!(is_zero_vec(&p.u_div) && is_zero_vec(&p.u_harm));
    }

    #[test]
    fn random_exact_and_float() {
        let spec = DiagramSpec::unit(Diagram::QuadEnriched, 2, 2, 1).unwrap();
        let r = hodge_check(&spec, 3, 9, Backend::Exact).unwrap();
        assert!(r.passed(), "{}", r.to_text());
        let r = hodge_check(&spec, 3, 9, Backend::Float { tol: 1e-10 }).unwrap();
        assert!(r.passed(), "{}", r.to_text());
    }

    #[test]
    fn field_io() {
        let spec = DiagramSpec::unit(Diagram::TriDp, 2, 2, 0).unwrap();
        let s = HodgeSolver::new(&spec).unwrap();
        let d = s.complex.b.descriptor();
        let mut v: Vec<serde_json::Value> = vec![serde_json::json!("1/3"); d.dim];
        v[0] = serde_json::json!(0.25);
        let u = parse_field(&serde_json::Value::Array(v.clone()), &d).unwrap();
        assert_eq!(u[0], crate::rational::qf(1, 4));
        assert_eq!(u[1], crate::rational::qf(1, 3));
        let tagged = serde_json::json!({ "space": { "family": "nope" }, "coeffs": v });
        assert!(parse_field(&tagged, &d).is_err());
        assert!(parse_field(&serde_json::json!(["1"]), &d).is_err());
    }

    #[test]
    fn naive_refused() {
        let spec = DiagramSpec::unit(Diagram::QuadNaiveK0, 2, 3, 0).unwrap();
        assert!(matches!(harmonic_basis(&spec), Err(DerhamError::Membership { .. })));
        let ok = DiagramSpec::unit(Diagram::TriDrt, 2, 2, 0).unwrap();
        assert!(harmonic_basis(&ok).is_ok());
    }
}
