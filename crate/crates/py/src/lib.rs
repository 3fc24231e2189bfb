//! Python bindings. Results come back as plain dicts and lists.

use derham_core::complexcheck::{
    appendix_nullity as core_appendix, dof_comparison as core_dofs, naive_quad_diagnostic, verify_diagram, Diagram,
    DiagramSpec, VerifyOptions,
};
use derham_core::error::DerhamError;
use derham_core::hodge::{hodge_check, parse_field, Backend, HodgeSolver};
use derham_core::mesh::{Mesh, MeshKind};
use derham_core::poly::RefCell;
use derham_core::refcheck::refcheck as core_refcheck;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::{json, Value};

fn err(e: DerhamError) -> PyErr {
    match e {
        DerhamError::Containment { .. }
        | DerhamError::Membership { .. }
        | DerhamError::Singular(_)
        | DerhamError::Backend(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py(py: Python<'_>, v: Value) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(&v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

fn mesh_kind(kind: &str) -> PyResult<MeshKind> {
    match kind {
        "tri" => Ok(MeshKind::TriangularPeriodic),
        "quad" => Ok(MeshKind::CartesianPeriodic),
        _ => Err(PyValueError::new_err(format!("unknown mesh kind {kind:?} (tri|quad)"))),
    }
}

fn spec(diagram: &str, nx: usize, ny: usize, k: usize) -> PyResult<DiagramSpec> {
    let d: Diagram = diagram.parse().map_err(err)?;
    DiagramSpec::unit(d, nx, ny, k).map_err(err)
}

/// Tags accepted by `verify` and `hodge`.
#[pyfunction]
fn diagrams() -> Vec<&'static str> {
    Diagram::ALL.iter().map(|d| d.tag()).collect()
}

#[pyfunction]
#[pyo3(signature = (kind, nx, ny))]
fn mesh_info(py: Python<'_>, kind: &str, nx: usize, ny: usize) -> PyResult<Py<PyAny>> {
    let mesh = Mesh::unit(mesh_kind(kind)?, nx, ny).map_err(err)?;
    to_py(py, json!(mesh.summary()))
}

/// Exact cohomology check of one diagram on the unit torus.
#[pyfunction]
#[pyo3(signature = (diagram, nx=2, ny=2, k=0))]
fn verify(py: Python<'_>, diagram: &str, nx: usize, ny: usize, k: usize) -> PyResult<Py<PyAny>> {
    let r = verify_diagram(&spec(diagram, nx, ny, k)?, &VerifyOptions::default()).map_err(err)?;
    let mut v = json!(r);
    v["passed"] = json!(r.passed());
    to_py(py, v)
}

#[pyfunction]
fn naive_diagnostic(py: Python<'_>, nx: usize, ny: usize) -> PyResult<Py<PyAny>> {
    let mesh = Mesh::unit(MeshKind::CartesianPeriodic, nx, ny).map_err(err)?;
    to_py(py, json!(naive_quad_diagnostic(&mesh).map_err(err)?))
}

#[pyfunction]
fn appendix_nullity(nx: usize, ny: usize) -> PyResult<usize> {
    let mesh = Mesh::unit(MeshKind::CartesianPeriodic, nx, ny).map_err(err)?;
    let r = core_appendix(&mesh).map_err(err)?;
    if !r.report.passed() {
        return Err(PyRuntimeError::new_err(r.report.to_text()));
    }
    Ok(r.nullity)
}

#[pyfunction]
#[pyo3(signature = (cell, k_max, samples=20, seed=0))]
fn refcheck(py: Python<'_>, cell: &str, k_max: usize, samples: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let cell = match mesh_kind(cell)? {
        MeshKind::TriangularPeriodic => RefCell::UnitTriangle,
        MeshKind::CartesianPeriodic => RefCell::UnitSquare,
    };
    to_py(py, json!(core_refcheck(cell, k_max, samples, seed).map_err(err)?))
}

#[pyfunction]
fn dof_comparison(py: Python<'_>, k: usize) -> PyResult<Py<PyAny>> {
    to_py(py, json!(core_dofs(k).map_err(err)?))
}

/// Decompose a field given as a list of coefficient strings ("p/q"),
/// or run a random campaign when `coeffs` is None.
#[pyfunction]
#[pyo3(signature = (diagram, coeffs=None, nx=2, ny=2, k=0, fields=3, seed=0))]
#[allow(clippy::too_many_arguments)]
fn hodge(
    py: Python<'_>,
    diagram: &str,
    coeffs: Option<Vec<String>>,
    nx: usize,
    ny: usize,
    k: usize,
    fields: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let spec = spec(diagram, nx, ny, k)?;
    let Some(coeffs) = coeffs else {
        return to_py(
            py,
            json!(hodge_check(&spec, fields, seed, Backend::Exact).map_err(err)?),
        );
    };
    let solver = HodgeSolver::new(&spec).map_err(err)?;
    let u = parse_field(&json!(coeffs), &solver.complex.b.descriptor()).map_err(err)?;
    let parts = solver.decompose(&u).map_err(err)?;
    to_py(py, parts.to_json())
}

#[pymodule]
fn derham(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(diagrams, m)?)?;
    m.add_function(wrap_pyfunction!(mesh_info, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(naive_diagnostic, m)?)?;
    m.add_function(wrap_pyfunction!(appendix_nullity, m)?)?;
    m.add_function(wrap_pyfunction!(refcheck, m)?)?;
    m.add_function(wrap_pyfunction!(dof_comparison, m)?)?;
    m.add_function(wrap_pyfunction!(hodge, m)?)?;
    Ok(())
}
