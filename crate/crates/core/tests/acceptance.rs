//! Acceptance suite: one line per criterion.
//!
//! `cargo test -p derham-core --test acceptance` runs all twelve; pass criterion
//! numbers (`-- 3 5`) to run a subset.

use std::time::Instant;

use derham_core::complexcheck::{
    appendix_nullity, dof_comparison, naive_operator, naive_quad_diagnostic, verify_diagram, Complex, Diagram,
    DiagramSpec, VerifyOptions,
};
use derham_core::exactla::{float_rank, rank};
use derham_core::fespace::{audit_dimensions, CellFactor, CodomainSpace, FaceFactor, GlobalSpace, SpaceFamily};
use derham_core::hodge::{hodge_check, Backend};
use derham_core::mesh::{Mesh, MeshKind};
use derham_core::poly::RefCell;
use derham_core::refcheck::{boundary_curl_map, decomposition_campaign, phi_basis};
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    summary: String,
    failures: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            summary: String::new(),
            failures: Vec::new(),
        }
    }

    fn expect<T: PartialEq + std::fmt::Debug>(&mut self, what: impl Into<String>, expected: T, computed: T) {
        if expected != computed {
            self.pass = false;
            self.failures
                .push(format!("{}: expected {expected:?}, computed {computed:?}", what.into()));
        }
    }

    fn report(&mut self, r: &derham_core::report::Report) {
        for c in r.failures() {
            self.pass = false;
            self.failures.push(format!(
                "{}: {} (expected {}, computed {})",
                r.spec, c.name, c.expected, c.computed
            ));
        }
    }

    fn err(&mut self, what: &str, e: impl std::fmt::Display) {
        self.pass = false;
        self.failures.push(format!("{what}: error {e}"));
    }
}

fn tri(nx: usize, ny: usize) -> Mesh {
    Mesh::unit(MeshKind::TriangularPeriodic, nx, ny).unwrap()
}

fn quad(nx: usize, ny: usize) -> Mesh {
    Mesh::unit(MeshKind::CartesianPeriodic, nx, ny).unwrap()
}

fn c1_entity_counts() -> Outcome {
    let mut o = Outcome::new();
    let mut n = 0;
    for nx in 2..=5 {
        for ny in 2..=5 {
            let p = nx * ny;
            let t = tri(nx, ny).entity_counts();
            o.expect(format!("tri {nx}x{ny} cells"), 2 * p, t.cells);
            o.expect(format!("tri {nx}x{ny} faces"), 3 * p, t.faces);
            o.expect(format!("tri {nx}x{ny} points"), p, t.points);
            o.expect(
                format!("tri {nx}x{ny} euler"),
                0i64,
                t.points as i64 - t.faces as i64 + t.cells as i64,
            );
            let q = quad(nx, ny).entity_counts();
            o.expect(format!("quad {nx}x{ny} cells"), p, q.cells);
            o.expect(format!("quad {nx}x{ny} faces"), 2 * p, q.faces);
            o.expect(format!("quad {nx}x{ny} points"), p, q.points);
            o.expect(
                format!("quad {nx}x{ny} euler"),
                0i64,
                q.points as i64 - q.faces as i64 + q.cells as i64,
            );
            n += 2;
        }
    }
    o.summary = format!("entity counts and Euler characteristic on {n} meshes");
    o
}

fn c2_dimensions() -> Outcome {
    let mut o = Outcome::new();
    let t = tri(2, 2);
    let qm = quad(2, 2);
    let (nt, nq) = (t.n_cells(), qm.n_cells());
    let dim = |m: &Mesh, f, k| GlobalSpace::build(m, f, k).map(|s| s.dim).unwrap_or(usize::MAX);
    let cdim = |m: &Mesh, c, f, k| CodomainSpace::build(m, c, f, k).map(|s| s.dim).unwrap_or(usize::MAX);
    for k in 0..=3 {
        let kk = k + 1;
        // triangles: P_{k+1}, dP_k², dP_{k−1}(C) × dP_k(F)
        o.expect(
            format!("tri k={k} P_(k+1)"),
            nt * kk * kk / 2,
            dim(&t, SpaceFamily::PkContinuous, k),
        );
        o.expect(
            format!("tri k={k} dP_k^2"),
            nt * kk * (k + 2),
            dim(&t, SpaceFamily::DPkVec, k),
        );
        o.expect(
            format!("tri k={k} codomain"),
            nt * kk * (k + 3) / 2,
            cdim(&t, CellFactor::DPkm1, FaceFactor::DPk, k),
        );
        // squares: Q_{k+1}, dQhat_k, dQhat_{k−1}(C) × dQ_k(F)
        o.expect(
            format!("quad k={k} Q_(k+1)"),
            nq * kk * kk,
            dim(&qm, SpaceFamily::QkContinuous, k),
        );
        o.expect(
            format!("quad k={k} dQhat_div"),
            nq * (2 * kk * kk + 2 * k + 1),
            dim(&qm, SpaceFamily::DQhatDiv, k),
        );
        o.expect(
            format!("quad k={k} dQhat_curl"),
            nq * (2 * kk * kk + 2 * k + 1),
            dim(&qm, SpaceFamily::DQhatCurl, k),
        );
        o.expect(
            format!("quad k={k} codomain"),
            nq * (k * k + 4 * k + 2),
            cdim(&qm, CellFactor::DQhatKm1, FaceFactor::DQk, k),
        );
        // the six non-conforming dimensions
        o.expect(
            format!("tri k={k} dRT"),
            nt * kk * (k + 3),
            dim(&t, SpaceFamily::DRtTri, k),
        );
        o.expect(
            format!("tri k={k} dN"),
            nt * kk * (k + 3),
            dim(&t, SpaceFamily::DNTri, k),
        );
        o.expect(
            format!("tri k={k} dP_k(C) x dP_k(F)"),
            nt * kk * (k + 5) / 2,
            cdim(&t, CellFactor::DPk, FaceFactor::DPk, k),
        );
        o.expect(
            format!("quad k={k} dRT"),
            2 * nq * kk * (k + 2),
            dim(&qm, SpaceFamily::DRtQuad, k),
        );
        o.expect(
            format!("quad k={k} dN"),
            2 * nq * kk * (k + 2),
            dim(&qm, SpaceFamily::DNQuad, k),
        );
        o.expect(
            format!("quad k={k} dQ_k(C) x dP_k(F)"),
            nq * kk * (k + 3),
            cdim(&qm, CellFactor::DQk, FaceFactor::DPk, k),
        );
    }
    for m in [&t, &qm] {
        match audit_dimensions(m, 3) {
            Ok(r) => o.report(&r),
            Err(e) => o.err("audit", e),
        }
    }
    o.summary = "closed-form dimensions for k = 0..3 on tri(2x2) and quad(2x2)".into();
    o
}

fn specs(diagrams: &[Diagram], ks: std::ops::RangeInclusive<usize>, grids: &[(usize, usize)]) -> Vec<DiagramSpec> {
    let mut v = Vec::new();
    for &d in diagrams {
        for k in ks.clone() {
            for &(nx, ny) in grids {
                v.push(DiagramSpec::unit(d, nx, ny, k).unwrap());
            }
        }
    }
    v
}

fn crit3_specs() -> Vec<DiagramSpec> {
    specs(&[Diagram::TriDp, Diagram::TriDpGrad], 0..=2, &[(2, 2), (3, 2)])
}

fn crit4_specs() -> Vec<DiagramSpec> {
    specs(
        &[Diagram::QuadEnriched, Diagram::QuadEnrichedGrad],
        0..=2,
        &[(2, 2), (3, 2)],
    )
}

fn crit9_specs() -> Vec<DiagramSpec> {
    let mut v = specs(&[Diagram::TriDrt, Diagram::TriDn], 0..=1, &[(2, 2), (3, 2)]);
    v.extend(specs(&[Diagram::QuadDrt, Diagram::QuadDn], 0..=1, &[(2, 2), (3, 2)]));
    v
}

/// Verifies each spec; `extra` adds criterion-specific expectations.
fn verify_all(specs: &[DiagramSpec], o: &mut Outcome, extra: impl Fn(&DiagramSpec, usize, usize, &mut Outcome)) {
    let results: Vec<_> = specs
        .par_iter()
        .map(|s| verify_diagram(s, &VerifyOptions::default()))
        .collect();
    for (s, r) in specs.iter().zip(results) {
        match r {
            Ok(r) => {
                o.report(&r.report);
                o.expect(format!("{} betti", s.label()), (1, 2, 1), r.betti);
                o.expect(format!("{} dim ker first", s.label()), 1, r.dim_ker_first);
                extra(s, r.rank_first, r.dim_ker_second, o);
            }
            Err(e) => o.err(&s.label(), e),
        }
    }
}

fn c3_triangle() -> Outcome {
    let mut o = Outcome::new();
    let sp = crit3_specs();
    verify_all(&sp, &mut o, |s, r1, _, o| {
        let n = s.mesh.n_cells();
        let k = s.k;
        o.expect(format!("{} rank first", s.label()), n * (k + 1) * (k + 1) / 2 - 1, r1);
    });
    o.summary = format!("triangular curl/div and grad/curl diagrams ({} specs)", sp.len());
    o
}

fn c4_enriched_quad() -> Outcome {
    let mut o = Outcome::new();
    let sp = crit4_specs();
    verify_all(&sp, &mut o, |s, _, ker2, o| {
        let n = s.mesh.n_cells();
        let k = s.k;
        o.expect(format!("{} dim ker second", s.label()), n * (k + 1) * (k + 1) + 1, ker2);
    });
    o.summary = format!("enriched quad diagrams ({} specs)", sp.len());
    o
}

fn c5_naive() -> Outcome {
    let mut o = Outcome::new();
    for (nx, ny) in [(2, 2), (3, 4), (4, 3)] {
        let n = nx * ny;
        match naive_quad_diagnostic(&quad(nx, ny)) {
            Ok(d) => {
                o.report(&d.report);
                o.expect(format!("{nx}x{ny} rank"), 2 * n - nx - ny, d.rank);
                o.expect(format!("{nx}x{ny} excess"), nx + ny - 1, d.harmonic_excess);
                o.expect(format!("{nx}x{ny} kernel"), nx + ny, d.kernel_dim);
            }
            Err(e) => o.err("naive", e),
        }
    }
    o.summary = "naive quad operator rank 2N - Nx - Ny and excess Nx + Ny - 1".into();
    o
}

fn c6_reference_cell() -> Outcome {
    let mut o = Outcome::new();
    for k in 0..=4 {
        for (cell, expected) in [(RefCell::UnitTriangle, 3 * k + 2), (RefCell::UnitSquare, 4 * k + 3)] {
            match boundary_curl_map(k, cell) {
                Ok(b) => {
                    o.expect(format!("{} k={k} rank", cell.name()), expected, b.rank);
                    o.report(&b.report);
                }
                Err(e) => o.err("boundary curl map", e),
            }
        }
        match phi_basis(k, SpaceFamily::DPkVec, RefCell::UnitTriangle) {
            Ok(p) => o.expect(format!("triangle k={k} dim Phi"), k * k.saturating_sub(1) / 2, p.dim()),
            Err(e) => o.err("phi", e),
        }
    }
    o.summary = "boundary-curl ranks 3k+2 / 4k+3, Range (+) constants, dim Phi_k for k = 0..4".into();
    o
}

fn c7_decomposition() -> Outcome {
    let mut o = Outcome::new();
    let mut jobs = Vec::new();
    for k in 0..=3 {
        jobs.push((k, SpaceFamily::DPkVec, RefCell::UnitTriangle));
        jobs.push((k, SpaceFamily::DQhatDiv, RefCell::UnitSquare));
        jobs.push((k, SpaceFamily::DQhatCurl, RefCell::UnitSquare));
    }
    let res: Vec<_> = jobs
        .par_iter()
        .map(|&(k, f, c)| decomposition_campaign(k, f, c, 50, 2024 + k as u64))
        .collect();
    for r in res {
        match r {
            Ok(r) => o.report(&r),
            Err(e) => o.err("decomposition", e),
        }
    }
    o.summary = format!(
        "50 random divergence-free fields per (cell, family, k<=3), {} campaigns",
        jobs.len()
    );
    o
}

fn c8_appendix() -> Outcome {
    let mut o = Outcome::new();
    for (nx, ny, expected) in [(2, 2, 5), (3, 3, 10), (2, 4, 9)] {
        match appendix_nullity(&quad(nx, ny)) {
            Ok(r) => {
                o.expect(format!("{nx}x{ny} nullity"), expected, r.nullity);
                o.expect(
                    format!("{nx}x{ny} closed-form nullity"),
                    expected,
                    r.nullity_closed_form,
                );
                o.report(&r.report);
            }
            Err(e) => o.err("appendix", e),
        }
    }
    o.summary = "jump-constraint nullity N+1 and gamma sum identities".into();
    o
}

fn c9_nonconforming() -> Outcome {
    let mut o = Outcome::new();
    let sp = crit9_specs();
    verify_all(&sp, &mut o, |_, _, _, _| {});
    o.summary = format!("dRT / dN diagrams on both mesh kinds ({} specs)", sp.len());
    o
}

fn c10_hodge() -> Outcome {
    let mut o = Outcome::new();
    let mut sp = crit3_specs();
    sp.extend(crit4_specs());
    sp.extend(crit9_specs());
    let res: Vec<_> = sp
        .par_iter()
        .enumerate()
        .map(|(i, s)| hodge_check(s, 20, 7 + i as u64, Backend::Exact))
        .collect();
    for (s, r) in sp.iter().zip(res) {
        match r {
            Ok(r) => o.report(&r),
            Err(e) => o.err(&s.label(), e),
        }
    }
    o.summary = format!("exact Hodge decomposition of 20 random fields on {} specs", sp.len());
    o
}

fn c11_dofs() -> Outcome {
    let mut o = Outcome::new();
    for k in 0..=4 {
        match dof_comparison(k) {
            Ok(r) => o.report(&r),
            Err(e) => o.err("dof comparison", e),
        }
    }
    o.summary = "per-cell dimension differences 1 (quad) and k+1 (tri) for k = 0..4".into();
    o
}

fn c12_float_rank() -> Outcome {
    let mut o = Outcome::new();
    let mut sp = crit3_specs();
    sp.extend(crit4_specs());
    sp.extend(crit9_specs());
    let res: Vec<Vec<(String, usize, usize)>> = sp
        .par_iter()
        .map(|s| {
            let cx = Complex::build(s).expect("buildable");
            [("first", &cx.d1.matrix), ("second", &cx.d2.matrix)]
                .into_iter()
                .map(|(n, m)| (format!("{} {n}", s.label()), rank(m), float_rank(&m.to_f64(), 1e-10)))
                .collect()
        })
        .collect();
    let mut count = 0;
    for (name, exact, float) in res.into_iter().flatten() {
        o.expect(name, exact, float);
        count += 1;
    }
    for (nx, ny) in [(2, 2), (3, 4), (4, 3)] {
        let (_, _, d) = naive_operator(&quad(nx, ny)).unwrap();
        o.expect(
            format!("naive {nx}x{ny}"),
            rank(&d.matrix),
            float_rank(&d.matrix.to_f64(), 1e-10),
        );
        count += 1;
    }
    o.summary = format!("SVD rank at 1e-10 equals exact rank on {count} matrices");
    o
}

fn main() {
    let criteria: [(usize, fn() -> Outcome); 12] = [
        (1, c1_entity_counts),
        (2, c2_dimensions),
        (3, c3_triangle),
        (4, c4_enriched_quad),
        (5, c5_naive),
        (6, c6_reference_cell),
        (7, c7_decomposition),
        (8, c8_appendix),
        (9, c9_nonconforming),
        (10, c10_hodge),
        (11, c11_dofs),
        (12, c12_float_rank),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut all_pass = true;
    for (n, f) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        let ms = t.elapsed().as_millis();
        println!(
            "criterion {n:>2}: {}  {} [{ms} ms]",
            if o.pass { "PASS" } else { "FAIL" },
            o.summary
        );
        for line in o.failures.iter().take(20) {
            println!("    {line}");
        }
        all_pass &= o.pass;
    }
    if !all_pass {
        std::process::exit(1);
    }
}
