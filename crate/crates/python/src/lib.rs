//! Python bindings for `topo-purity`.

use std::sync::Arc;

use num_rational::BigRational;
use pyo3::exceptions::{PyMemoryError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use topo_purity::circuits::{classify, make_arch, make_bridge, make_cut, random_shallow_string, DomainShape};
use topo_purity::experiments::{format_region, parse_region, parse_string};
use topo_purity::group_purity::{ConstantOracle, GeometricOracle, GroupOracle, PurityOracle};
use topo_purity::oracle::{build_ground_state, mc_string_expectation, StatevectorOracle, DEFAULT_MEMORY_CAP};
use topo_purity::swap_dynamics::{apply_string, DEFAULT_TERM_CAP};
use topo_purity::topo::{evolved_topological_purity, TopoReport};
use topo_purity::{
    standard_partition, DomainString, Error, Lattice, LatticeConfig, Orientation, Partition, PartitionGeometry, Region,
    SwapCombo,
};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Budget(_) => PyMemoryError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Purity source selected by name: `group`, `geometric`, `statevector` or
/// `constant1`.
pub fn oracle_for<'a>(lattice: &'a Lattice, name: &str) -> topo_purity::Result<Box<dyn PurityOracle + 'a>> {
    Ok(match name {
        "group" => Box::new(GroupOracle::new(lattice)?),
        "geometric" => Box::new(GeometricOracle::new(lattice)),
        "statevector" => Box::new(StatevectorOracle::new(build_ground_state(lattice, DEFAULT_MEMORY_CAP)?)),
        "constant1" => Box::new(ConstantOracle),
        other => return Err(Error::Config(format!("unknown oracle `{other}`"))),
    })
}

/// Ratio report for `string` (empty for the static ratio).
pub fn ratio_report(
    lattice: &Lattice,
    partition: &Partition,
    string: &DomainString,
    oracle: &str,
    term_cap: usize,
) -> topo_purity::Result<TopoReport> {
    let o = oracle_for(lattice, oracle)?;
    evolved_topological_purity(lattice, o.as_ref(), partition, string, term_cap)
}

fn fraction<'py>(py: Python<'py>, x: &BigRational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((x.to_string(),))
}

fn orientation(symbol: &str) -> PyResult<Orientation> {
    Orientation::from_symbol(symbol).ok_or_else(|| PyValueError::new_err(format!("bad orientation `{symbol}`")))
}

#[pyclass(name = "Lattice", frozen)]
struct PyLattice {
    inner: Arc<Lattice>,
}

#[pymethods]
impl PyLattice {
    #[new]
    fn new(size: usize, dim: u32) -> PyResult<Self> {
        let inner = Lattice::new(LatticeConfig::new(size, dim)).map_err(py_err)?;
        Ok(PyLattice { inner: Arc::new(inner) })
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    #[getter]
    fn dim(&self) -> u32 {
        self.inner.dim()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn __repr__(&self) -> String {
        format!("Lattice(size={}, dim={})", self.inner.size(), self.inner.dim())
    }
}

/// A set of bonds on a fixed lattice.
#[pyclass(name = "Region", frozen, from_py_object)]
#[derive(Clone)]
struct PyRegion {
    lattice: Arc<Lattice>,
    inner: Region,
}

impl PyRegion {
    fn wrap(lattice: &PyLattice, inner: Region) -> Self {
        PyRegion {
            lattice: lattice.inner.clone(),
            inner,
        }
    }

    fn same_lattice(&self, other: &PyRegion) -> PyResult<()> {
        if Arc::ptr_eq(&self.lattice, &other.lattice) || self.lattice.config() == other.lattice.config() {
            Ok(())
        } else {
            Err(PyValueError::new_err("regions live on different lattices"))
        }
    }

    fn with(&self, inner: Region) -> Self {
        PyRegion {
            lattice: self.lattice.clone(),
            inner,
        }
    }
}

#[pymethods]
impl PyRegion {
    #[staticmethod]
    fn rectangle(lattice: &PyLattice, row: isize, col: isize, height: usize, width: usize) -> Self {
        Self::wrap(lattice, Region::rectangle(&lattice.inner, row, col, height, width))
    }

    #[staticmethod]
    fn annulus(lattice: &PyLattice, row: isize, col: isize, size: usize, thickness: usize) -> Self {
        Self::wrap(lattice, Region::annulus(&lattice.inner, row, col, size, thickness))
    }

    #[staticmethod]
    fn plaquette(lattice: &PyLattice, row: isize, col: isize) -> Self {
        Self::wrap(lattice, Region::plaquette(&lattice.inner, row, col))
    }

    #[staticmethod]
    fn disk(lattice: &PyLattice, row: isize, col: isize, radius: usize) -> Self {
        Self::wrap(lattice, Region::disk(&lattice.inner, row, col, radius))
    }

    /// From `(row, col, "h" | "v")` triples.
    #[staticmethod]
    fn from_bonds(lattice: &PyLattice, bonds: Vec<(isize, isize, String)>) -> PyResult<Self> {
        let triples = bonds
            .iter()
            .map(|(r, c, o)| Ok((*r, *c, orientation(o)?)))
            .collect::<PyResult<Vec<_>>>()?;
        let r = Region::from_triples(&lattice.inner, &triples).map_err(py_err)?;
        Ok(Self::wrap(lattice, r))
    }

    #[staticmethod]
    fn parse(lattice: &PyLattice, text: &str) -> PyResult<Self> {
        Ok(Self::wrap(
            lattice,
            parse_region(&lattice.inner, text, "<text>").map_err(py_err)?,
        ))
    }

    fn bonds(&self) -> Vec<(usize, usize, String)> {
        self.inner
            .to_triples(&self.lattice)
            .into_iter()
            .map(|(r, c, o)| (r, c, o.symbol().to_string()))
            .collect()
    }

    fn to_text(&self) -> String {
        format_region(&self.lattice, &self.inner)
    }

    fn complement(&self) -> Self {
        self.with(self.inner.complement())
    }

    fn __or__(&self, other: &PyRegion) -> PyResult<Self> {
        self.same_lattice(other)?;
        Ok(self.with(&self.inner | &other.inner))
    }

    fn __and__(&self, other: &PyRegion) -> PyResult<Self> {
        self.same_lattice(other)?;
        Ok(self.with(&self.inner & &other.inner))
    }

    fn __sub__(&self, other: &PyRegion) -> PyResult<Self> {
        self.same_lattice(other)?;
        Ok(self.with(&self.inner - &other.inner))
    }

    fn __eq__(&self, other: &PyRegion) -> bool {
        self.lattice.config() == other.lattice.config() && self.inner == other.inner
    }

    fn __len__(&self) -> usize {
        self.inner.count()
    }

    fn __repr__(&self) -> String {
        format!("Region({} bonds)", self.inner.count())
    }
}

/// The four-piece annular partition.
#[pyclass(name = "Partition", frozen)]
struct PyPartition {
    lattice: Arc<Lattice>,
    inner: Partition,
    geometry: PartitionGeometry,
}

impl PyPartition {
    fn region(&self, r: &Region) -> PyRegion {
        PyRegion {
            lattice: self.lattice.clone(),
            inner: r.clone(),
        }
    }
}

#[pymethods]
impl PyPartition {
    #[staticmethod]
    fn annulus(lattice: &PyLattice, row: isize, col: isize, size: usize, thickness: usize) -> PyResult<Self> {
        let geometry = PartitionGeometry {
            row,
            col,
            size,
            thickness,
        };
        let inner = standard_partition(&lattice.inner, geometry).map_err(py_err)?;
        Ok(PyPartition {
            lattice: lattice.inner.clone(),
            inner,
            geometry,
        })
    }

    #[getter]
    fn a(&self) -> PyRegion {
        self.region(&self.inner.a)
    }

    #[getter]
    fn b_left(&self) -> PyRegion {
        self.region(&self.inner.b_left)
    }

    #[getter]
    fn b_right(&self) -> PyRegion {
        self.region(&self.inner.b_right)
    }

    #[getter]
    fn c(&self) -> PyRegion {
        self.region(&self.inner.c)
    }

    #[getter]
    fn abc(&self) -> PyRegion {
        self.region(&self.inner.abc)
    }

    /// One of the named constructions: `cut`, `bridge` or `arch`.
    fn construction(&self, kind: &str) -> PyResult<PyDomainString> {
        let s = match kind {
            "cut" => make_cut(&self.lattice, self.geometry),
            "bridge" => make_bridge(&self.lattice, self.geometry),
            "arch" => make_arch(&self.lattice, self.geometry),
            other => return Err(PyValueError::new_err(format!("unknown construction `{other}`"))),
        }
        .map_err(py_err)?;
        Ok(PyDomainString {
            lattice: self.lattice.clone(),
            inner: s,
        })
    }

    /// A safe random string of `depth` plaquettes and radius-1 disks.
    #[pyo3(signature = (depth, seed, rejection_cap = 100_000))]
    fn random_safe_string(&self, depth: usize, seed: u64, rejection_cap: usize) -> PyResult<PyDomainString> {
        let shapes = [DomainShape::Plaquette, DomainShape::Disk { radius: 1 }];
        let (s, _) =
            random_shallow_string(&self.lattice, &self.inner, depth, &shapes, seed, rejection_cap).map_err(py_err)?;
        Ok(PyDomainString {
            lattice: self.lattice.clone(),
            inner: s,
        })
    }

    /// `(safe, condition tag or None)`.
    fn classify(&self, string: &PyDomainString) -> PyResult<(bool, Option<String>)> {
        let v = classify(&self.lattice, &string.inner, &self.inner).map_err(py_err)?;
        Ok((v.is_safe(), v.tag().map(str::to_string)))
    }

    /// Ratio report as a dict with `ratio`, `purities`, `terms` and `phase`.
    #[pyo3(signature = (string = None, oracle = "group", term_cap = DEFAULT_TERM_CAP))]
    fn topological_purity<'py>(
        &self,
        py: Python<'py>,
        string: Option<&PyDomainString>,
        oracle: &str,
        term_cap: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let empty = DomainString::empty();
        let s = string.map(|s| &s.inner).unwrap_or(&empty);
        let report = py
            .detach(|| ratio_report(&self.lattice, &self.inner, s, oracle, term_cap))
            .map_err(py_err)?;
        let out = PyDict::new(py);
        out.set_item("ratio", fraction(py, &report.ratio)?)?;
        let purities = PyDict::new(py);
        let terms = PyDict::new(py);
        for e in &report.entries {
            purities.set_item(e.composite.name(), fraction(py, &e.value)?)?;
            terms.set_item(e.composite.name(), e.terms)?;
        }
        out.set_item("purities", purities)?;
        out.set_item("terms", terms)?;
        out.set_item("phase", report.phase.name())?;
        Ok(out)
    }
}

/// Domains in circuit order.
#[pyclass(name = "DomainString", frozen)]
struct PyDomainString {
    lattice: Arc<Lattice>,
    inner: DomainString,
}

#[pymethods]
impl PyDomainString {
    #[new]
    fn new(domains: Vec<PyRegion>) -> PyResult<Self> {
        let lattice = match domains.first() {
            Some(d) => d.lattice.clone(),
            None => return Err(PyValueError::new_err("a string needs at least one domain")),
        };
        for d in &domains {
            d.same_lattice(&domains[0])?;
        }
        let inner = DomainString::new(domains.into_iter().map(|d| d.inner).collect()).map_err(py_err)?;
        Ok(PyDomainString { lattice, inner })
    }

    #[staticmethod]
    fn parse(lattice: &PyLattice, text: &str) -> PyResult<Self> {
        let inner = parse_string(&lattice.inner, text, "<text>").map_err(py_err)?;
        Ok(PyDomainString {
            lattice: lattice.inner.clone(),
            inner,
        })
    }

    fn domains(&self) -> Vec<PyRegion> {
        self.inner
            .domains()
            .iter()
            .map(|d| PyRegion {
                lattice: self.lattice.clone(),
                inner: d.clone(),
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("DomainString({} domains)", self.inner.len())
    }
}

/// Exact ground-state purity of `region`.
#[pyfunction]
#[pyo3(signature = (region, oracle = "group"))]
fn purity<'py>(py: Python<'py>, region: &PyRegion, oracle: &str) -> PyResult<Bound<'py, PyAny>> {
    let o = oracle_for(&region.lattice, oracle).map_err(py_err)?;
    let p = o.purity(&region.inner).map_err(py_err)?;
    fraction(py, &p)
}

/// Evolved swap operator of `region` as `[(Region, Fraction)]`.
#[pyfunction]
#[pyo3(signature = (region, string, term_cap = DEFAULT_TERM_CAP))]
fn evolve<'py>(
    py: Python<'py>,
    region: &PyRegion,
    string: &PyDomainString,
    term_cap: usize,
) -> PyResult<Vec<(PyRegion, Bound<'py, PyAny>)>> {
    let combo = SwapCombo::swap(&region.lattice, &region.inner)
        .and_then(|c| apply_string(&c, &string.inner, term_cap))
        .map_err(py_err)?;
    combo
        .terms()
        .map(|(r, m)| Ok((region.with(r.clone()), fraction(py, m)?)))
        .collect()
}

/// Monte-Carlo mean and standard error of the purity of `region` after Haar
/// unitaries on the domains of `string`, starting from the ground state.
#[pyfunction]
fn mc_purity(
    py: Python<'_>,
    region: &PyRegion,
    string: &PyDomainString,
    samples: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    py.detach(|| {
        let state = build_ground_state(&region.lattice, DEFAULT_MEMORY_CAP)?;
        mc_string_expectation(&state, &string.inner, &region.inner, samples, seed)
    })
    .map(|e| (e.mean, e.std_err))
    .map_err(py_err)
}

#[pymodule]
fn topo_purity_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLattice>()?;
    m.add_class::<PyRegion>()?;
    m.add_class::<PyPartition>()?;
    m.add_class::<PyDomainString>()?;
    m.add_function(wrap_pyfunction!(purity, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(mc_purity, m)?)?;
    Ok(())
}
