//! Python bindings. Field elements cross the boundary as integers in
//! base-p coefficient encoding (the same encoding bundles use).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rackmsr::codes::{subsets, Codeword, RackCode, SweepMode};
use rackmsr::config::{build_code, Bundle, RunConfig};
use rackmsr::gf::{Felt, Field};
use rackmsr::identities;
use rackmsr::params::{self, CodeParams, Theorem};
use rackmsr::repair;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn theorem(name: &str) -> PyResult<Theorem> {
    match name {
        "T1" | "t1" => Ok(Theorem::T1),
        "T2" | "t2" => Ok(Theorem::T2),
        other => Err(PyValueError::new_err(format!("unknown theorem {other:?}"))),
    }
}

#[pyclass(name = "Field", frozen)]
struct PyField {
    inner: Field,
}

#[pymethods]
impl PyField {
    #[new]
    #[pyo3(signature = (p, m=1, modulus=None))]
    fn new(p: u32, m: u32, modulus: Option<Vec<u32>>) -> PyResult<Self> {
        Ok(PyField { inner: Field::new(p, m, modulus.as_deref()).map_err(value_err)? })
    }

    #[getter]
    fn q(&self) -> u32 {
        self.inner.q()
    }

    #[getter]
    fn p(&self) -> u32 {
        self.inner.p()
    }

    #[getter]
    fn modulus(&self) -> Vec<u32> {
        self.inner.modulus().to_vec()
    }

    fn add(&self, a: u32, b: u32) -> PyResult<u32> {
        let f = &self.inner;
        Ok(f.index(f.add(self.elem(a)?, self.elem(b)?)))
    }

    fn mul(&self, a: u32, b: u32) -> PyResult<u32> {
        let f = &self.inner;
        Ok(f.index(f.mul(self.elem(a)?, self.elem(b)?)))
    }

    fn inv(&self, a: u32) -> PyResult<u32> {
        let f = &self.inner;
        Ok(f.index(f.inv(self.elem(a)?).map_err(value_err)?))
    }

    fn xi_pow(&self, e: i64) -> u32 {
        self.inner.index(self.inner.xi_pow(e))
    }

    fn __repr__(&self) -> String {
        format!("Field(q={}, modulus={:?})", self.inner.q(), self.inner.modulus())
    }
}

impl PyField {
    fn elem(&self, v: u32) -> PyResult<Felt> {
        self.inner.from_index(v).map_err(value_err)
    }
}

#[pyclass(name = "Params", frozen)]
struct PyParams {
    #[pyo3(get)]
    n: usize,
    #[pyo3(get)]
    k: usize,
    #[pyo3(get)]
    u: usize,
    #[pyo3(get)]
    n_bar: usize,
    #[pyo3(get)]
    k_bar: usize,
    #[pyo3(get)]
    v: usize,
    #[pyo3(get)]
    d_bar: usize,
    #[pyo3(get)]
    s: usize,
    #[pyo3(get)]
    r: usize,
    #[pyo3(get)]
    l: usize,
    #[pyo3(get)]
    h_max: usize,
    #[pyo3(get)]
    theorem: String,
    inner: CodeParams,
}

impl From<&CodeParams> for PyParams {
    fn from(p: &CodeParams) -> Self {
        PyParams {
            n: p.n,
            k: p.k,
            u: p.u,
            n_bar: p.n_bar,
            k_bar: p.k_bar,
            v: p.v,
            d_bar: p.d_bar,
            s: p.s,
            r: p.r,
            l: p.l,
            h_max: p.h_max,
            theorem: format!("{:?}", p.theorem),
            inner: p.clone(),
        }
    }
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (n, k, u, d_bar, theorem="T1"))]
    fn new(n: usize, k: usize, u: usize, d_bar: usize, theorem: &str) -> PyResult<Self> {
        let p = CodeParams::derive(n, k, u, d_bar, self::theorem(theorem)?).map_err(value_err)?;
        Ok(PyParams::from(&p))
    }

    fn bandwidth_bound(&self, h: usize) -> PyResult<usize> {
        self.inner.bandwidth_bound(h).map_err(value_err)
    }

    fn scheme_bandwidth(&self, h: usize) -> PyResult<usize> {
        self.inner.scheme_bandwidth(h).map_err(value_err)
    }

    /// Access bound as (numerator, denominator).
    fn access_bound(&self, h: usize) -> PyResult<(u64, u64)> {
        let r = self.inner.access_bound(h).map_err(value_err)?;
        Ok((*r.numer(), *r.denom()))
    }

    fn field_threshold(&self) -> u128 {
        self.inner.field_threshold()
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(n={}, k={}, u={}, d_bar={}, theorem={:?}, l={})",
            self.n, self.k, self.u, self.d_bar, self.theorem, self.l
        )
    }
}

#[pyclass(name = "Code", frozen)]
struct PyCode {
    inner: RackCode,
}

#[pymethods]
impl PyCode {
    /// Builds from a JSON run config (the same format the CLI reads).
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        let cfg = RunConfig::from_json(text).map_err(value_err)?;
        Ok(PyCode { inner: build_code(&cfg).map_err(value_err)? })
    }

    /// Rebuilds a code from bundle JSON and checks its parity hash.
    #[staticmethod]
    fn from_bundle(text: &str) -> PyResult<Self> {
        let b = Bundle::from_json(text).map_err(value_err)?;
        Ok(PyCode { inner: b.open().map_err(value_err)? })
    }

    fn bundle(&self) -> String {
        Bundle::from_code(&self.inner).to_json()
    }

    #[getter]
    fn params(&self) -> PyParams {
        PyParams::from(&self.inner.params)
    }

    #[getter]
    fn field(&self) -> PyField {
        PyField { inner: self.inner.field.clone() }
    }

    #[getter]
    fn parity_hash(&self) -> String {
        self.inner.parity_hash()
    }

    #[getter]
    fn lambdas(&self) -> Vec<u32> {
        self.inner.lambdas.lambdas.iter().map(|&x| self.inner.field.index(x)).collect()
    }

    /// Parity block H_i as a list of rows.
    fn block(&self, node: usize) -> PyResult<Vec<Vec<u32>>> {
        if node >= self.inner.params.n {
            return Err(PyValueError::new_err(format!("node {node} out of range")));
        }
        let h = self.inner.block(node);
        Ok((0..h.rows()).map(|i| (0..h.cols()).map(|j| self.inner.field.index(h.get(i, j))).collect()).collect())
    }

    fn random_message(&self, seed: u64) -> Vec<u32> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        self.inner.random_message(&mut rng).iter().map(|&x| self.inner.field.index(x)).collect()
    }

    /// Systematic encoding of k·l symbols into n node vectors.
    fn encode(&self, message: Vec<u32>) -> PyResult<Vec<Vec<u32>>> {
        let msg = self.elems(&message)?;
        let word = self.inner.encode(&msg).map_err(value_err)?;
        Ok(self.export(&word))
    }

    fn is_codeword(&self, word: Vec<Vec<u32>>) -> PyResult<bool> {
        self.inner.is_codeword(&self.import(&word)?).map_err(value_err)
    }

    /// Restores the listed nodes from the others; their given contents are ignored.
    fn erase_decode(&self, word: Vec<Vec<u32>>, erased: Vec<usize>) -> PyResult<Vec<Vec<u32>>> {
        let out = self.inner.erase_decode(&self.import(&word)?, &erased).map_err(value_err)?;
        Ok(self.export(&out))
    }

    /// Folded rack vectors at index w.
    fn fold(&self, word: Vec<Vec<u32>>, w: usize) -> PyResult<Vec<Vec<u32>>> {
        let view = self.inner.fold(&self.import(&word)?, w).map_err(value_err)?;
        Ok(view.nodes.iter().map(|c| c.iter().map(|&x| self.inner.field.index(x)).collect()).collect())
    }

    /// Returns (checked, failing patterns). `sample=None` means exhaustive.
    #[pyo3(signature = (sample=None, seed=0))]
    fn mds_sweep(&self, py: Python<'_>, sample: Option<usize>, seed: u64) -> (usize, Vec<Vec<usize>>) {
        let mode = match sample {
            Some(count) => SweepMode::Sample { count, seed },
            None => SweepMode::Exhaustive,
        };
        let rep = py.detach(|| self.inner.mds_sweep(mode));
        (rep.checked, rep.failures)
    }

    /// Erases `failed` in rack `host`, repairs them, and returns the ledger.
    #[pyo3(signature = (word, host, failed, helpers, extra=None))]
    fn repair<'py>(
        &self,
        py: Python<'py>,
        word: Vec<Vec<u32>>,
        host: usize,
        failed: Vec<usize>,
        helpers: Vec<usize>,
        extra: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let word = self.import(&word)?;
        let plan = repair::plan(&self.inner, host, &failed, &helpers, extra).map_err(value_err)?;
        let res = repair::repair(&self.inner, &word, &plan).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        let f = &self.inner.field;
        let d = PyDict::new(py);
        d.set_item("bandwidth", res.bandwidth)?;
        d.set_item("access", res.access)?;
        d.set_item("bound_bw", res.bound_bw)?;
        d.set_item("bound_access", (*res.bound_access.numer(), *res.bound_access.denom()))?;
        d.set_item("optimal_bw", res.optimal_bw)?;
        d.set_item("optimal_access", res.optimal_access)?;
        d.set_item("ratio", (*res.ratio.numer(), *res.ratio.denom()))?;
        d.set_item("exact", res.exact)?;
        d.set_item("per_rack_alpha", res.per_rack_alpha.clone())?;
        let recovered: Vec<(usize, Vec<u32>)> =
            res.recovered.iter().map(|(i, c)| (*i, c.iter().map(|&x| f.index(x)).collect())).collect();
        d.set_item("recovered", recovered)?;
        Ok(d)
    }

    fn default_extra(&self, host: usize, helpers: Vec<usize>) -> Option<usize> {
        repair::default_extra(&self.inner, host, &helpers)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner.params;
        format!(
            "Code(n={}, k={}, u={}, d_bar={}, {:?}, q={}, l={})",
            p.n,
            p.k,
            p.u,
            p.d_bar,
            p.theorem,
            self.inner.field.q(),
            p.l
        )
    }
}

impl PyCode {
    fn elems(&self, xs: &[u32]) -> PyResult<Vec<Felt>> {
        xs.iter().map(|&x| self.inner.field.from_index(x).map_err(value_err)).collect()
    }

    fn import(&self, word: &[Vec<u32>]) -> PyResult<Codeword> {
        let nodes = word.iter().map(|c| self.elems(c)).collect::<PyResult<Vec<_>>>()?;
        let w = Codeword { nodes };
        self.inner.check_word(&w).map_err(value_err)?;
        Ok(w)
    }

    fn export(&self, word: &Codeword) -> Vec<Vec<u32>> {
        word.nodes.iter().map(|c| c.iter().map(|&x| self.inner.field.index(x)).collect()).collect()
    }
}

#[pyfunction]
fn omega(s: u64, u: u64) -> u128 {
    params::omega(s, u)
}

/// Runs the randomized kernel identity suites; returns (name, cases, failures).
#[pyfunction]
#[pyo3(signature = (seed=0, instances=50))]
fn kernel_suites(py: Python<'_>, seed: u64, instances: usize) -> PyResult<Vec<(String, usize, Vec<String>)>> {
    let reps = py.detach(|| identities::run_all(seed, instances)).map_err(value_err)?;
    Ok(reps.into_iter().map(|r| (r.name, r.cases, r.failures)).collect())
}

/// All k-subsets of range(n), lexicographic.
#[pyfunction(name = "subsets")]
fn py_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    subsets(n, k)
}

#[pymodule]
#[pyo3(name = "rackmsr")]
fn rackmsr_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyCode>()?;
    m.add_function(wrap_pyfunction!(omega, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_suites, m)?)?;
    m.add_function(wrap_pyfunction!(py_subsets, m)?)?;
    Ok(())
}
