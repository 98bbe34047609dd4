//! Python bindings for the nordheim crate.
//!
//! The module mirrors the core surface: grids, distributions, the two
//! equilibrium/blow-up initial-data factories, collision rates, full runs
//! from a config document, the measure partition, and the exponent fit.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nordheim as nk;

fn err(e: nk::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_convention(s: &str) -> PyResult<nk::MomentConvention> {
    match s {
        "physical" => Ok(nk::MomentConvention::Physical),
        "plain" => Ok(nk::MomentConvention::Plain),
        _ => Err(PyValueError::new_err(format!(
            "convention must be \"physical\" or \"plain\", got \"{s}\""
        ))),
    }
}

/// Uniform energy grid on [0, eps_max].
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Grid {
    inner: Arc<nk::EnergyGrid>,
}

#[pymethods]
impl Grid {
    #[new]
    fn new(eps_max: f64, n: usize) -> PyResult<Self> {
        Ok(Grid { inner: nk::make_grid(eps_max, n).map_err(err)?.into_shared() })
    }

    /// Node count (including the origin).
    #[getter]
    fn n(&self) -> usize {
        self.inner.len()
    }

    /// Upper edge of the grid.
    #[getter]
    fn eps_max(&self) -> f64 {
        self.inner.eps_max()
    }

    /// Node spacing.
    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    /// All node energies.
    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Grid(eps_max={}, n={})", self.inner.eps_max(), self.inner.len())
    }
}

/// Nonnegative occupation numbers on a grid.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Distribution {
    inner: nk::Distribution,
}

#[pymethods]
impl Distribution {
    #[new]
    fn new(grid: &Grid, values: Vec<f64>) -> PyResult<Self> {
        Ok(Distribution {
            inner: nk::Distribution::new(grid.inner.clone(), values).map_err(err)?,
        })
    }

    #[getter]
    fn grid(&self) -> Grid {
        Grid { inner: self.inner.grid().clone() }
    }

    /// Occupation numbers f at the nodes.
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    /// Energy densities g = 4π√(2ε)·f at the nodes.
    fn densities(&self) -> Vec<f64> {
        self.inner.g_vec()
    }

    /// Supremum of the occupation.
    fn sup(&self) -> f64 {
        self.inner.sup()
    }

    /// Exactly conserved mass sum.
    fn conserved_mass(&self) -> f64 {
        nk::conserved_mass(&self.inner)
    }

    /// Exactly conserved energy sum.
    fn conserved_energy(&self) -> f64 {
        nk::conserved_energy(&self.inner)
    }

    /// Entropy of the occupation.
    fn entropy(&self) -> f64 {
        nk::entropy(&self.inner)
    }

    /// Trapezoid moment (kind: "mass" | "energy"; convention: "physical" |
    /// "plain").
    #[pyo3(signature = (kind, convention = "physical"))]
    fn moment(&self, kind: &str, convention: &str) -> PyResult<f64> {
        let kind = match kind {
            "mass" => nk::MomentKind::Mass,
            "energy" => nk::MomentKind::Energy,
            _ => {
                return Err(PyValueError::new_err(format!(
                    "kind must be \"mass\" or \"energy\", got \"{kind}\""
                )))
            }
        };
        Ok(nk::moment_with(&self.inner, kind, parse_convention(convention)?))
    }

    /// Physical mass carried by nodes with ε ≤ r.
    fn mass_below(&self, r: f64) -> f64 {
        nk::mass_below(&self.inner, r)
    }

    fn __repr__(&self) -> String {
        format!(
            "Distribution(n={}, eps_max={}, sup={})",
            self.inner.grid().len(),
            self.inner.grid().eps_max(),
            self.inner.sup()
        )
    }
}

/// Concentrated initial datum with solved mixing coefficients.
#[pyclass(frozen)]
struct BlowupData {
    inner: nk::BlowupData,
}

#[pymethods]
impl BlowupData {
    #[getter]
    fn kappa1(&self) -> f64 {
        self.inner.kappa1
    }

    #[getter]
    fn kappa2(&self) -> f64 {
        self.inner.kappa2
    }

    #[getter]
    fn mu1(&self) -> f64 {
        self.inner.mu1
    }

    #[getter]
    fn mu2(&self) -> f64 {
        self.inner.mu2
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    /// The constructed distribution.
    fn distribution(&self) -> Distribution {
        Distribution { inner: self.inner.distribution().clone() }
    }

    fn __repr__(&self) -> String {
        format!(
            "BlowupData(rho={}, beta={}, kappa1={}, kappa2={})",
            self.inner.rho, self.inner.beta, self.inner.kappa1, self.inner.kappa2
        )
    }
}

/// Bose–Einstein state 1/(exp(beta·eps + alpha) − 1) on the grid.
#[pyfunction]
fn bose_einstein(grid: &Grid, beta: f64, alpha: f64) -> PyResult<Distribution> {
    Ok(Distribution { inner: nk::make_bose_einstein(grid.inner.clone(), beta, alpha).map_err(err)? })
}

/// Concentrated three-piece initial datum hitting mass m and energy e.
#[pyfunction]
#[pyo3(signature = (grid, m, e, rho, beta, convention = "physical"))]
fn blowup_data(
    grid: &Grid,
    m: f64,
    e: f64,
    rho: f64,
    beta: f64,
    convention: &str,
) -> PyResult<BlowupData> {
    let conv = parse_convention(convention)?;
    Ok(BlowupData {
        inner: nk::make_blowup_data(grid.inner.clone(), m, e, rho, beta, conv).map_err(err)?,
    })
}

/// Collision rates of a state under the chosen operator.
#[pyfunction]
#[pyo3(signature = (dist, operator = "conservative", cubic_only = false))]
fn collision_rates<'py>(
    py: Python<'py>,
    dist: &Distribution,
    operator: &str,
    cubic_only: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let rates = match operator {
        "conservative" => nk::collide_conservative(&dist.inner, cubic_only),
        "collocation" => {
            if cubic_only {
                return Err(PyValueError::new_err(
                    "cubic_only applies to the conservative operator only",
                ));
            }
            nk::collide_collocation(&dist.inner)
        }
        _ => {
            return Err(PyValueError::new_err(format!(
                "operator must be \"conservative\" or \"collocation\", got \"{operator}\""
            )))
        }
    };
    let out = PyDict::new(py);
    out.set_item("dg_dt", rates.dg_dt().to_vec())?;
    out.set_item("df_dt", rates.df_dt().to_vec())?;
    out.set_item("mass_rate", rates.mass_rate())?;
    out.set_item("energy_rate", rates.energy_rate())?;
    out.set_item("abs_mass_scale", rates.abs_mass_scale())?;
    Ok(out)
}

/// Gain term and multiplicative loss coefficient at one node.
#[pyfunction]
fn gain_loss(dist: &Distribution, node: usize) -> PyResult<(f64, f64)> {
    if node >= dist.inner.grid().len() {
        return Err(PyValueError::new_err(format!(
            "node {node} out of range for a grid of {} nodes",
            dist.inner.grid().len()
        )));
    }
    let split = nk::gain_loss_split(&dist.inner, node);
    Ok((split.gain, split.loss_coeff))
}

/// Run a full simulation from a config document; returns the summary plus
/// the observable series and the final occupation.
#[pyfunction]
fn run_from_config<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = nk::parse_config(text).map_err(err)?;
    let (_, d0) = nk::build_initial(&cfg).map_err(err)?;
    let outcome = nk::run(d0.clone(), &cfg.to_run_params()).map_err(err)?;
    let summary = nk::RunSummary::new(&d0, &outcome, cfg.convention);

    let out = PyDict::new(py);
    out.set_item("status", &summary.status)?;
    out.set_item("exit_code", summary.exit_code)?;
    out.set_item("steps", summary.steps)?;
    out.set_item("t_final", summary.t_final)?;
    out.set_item("t_detect", summary.t_detect)?;
    out.set_item("f_cap_used", summary.f_cap_used)?;
    out.set_item("f_sup_initial", summary.f_sup_initial)?;
    out.set_item("f_sup_final", summary.f_sup_final)?;
    out.set_item("conserved_mass_initial", summary.conserved_mass_initial)?;
    out.set_item("conserved_mass_final", summary.conserved_mass_final)?;
    out.set_item("conserved_energy_initial", summary.conserved_energy_initial)?;
    out.set_item("conserved_energy_final", summary.conserved_energy_final)?;
    out.set_item("entropy_initial", summary.entropy_initial)?;
    out.set_item("entropy_final", summary.entropy_final)?;
    out.set_item("exponent_final", summary.exponent_final)?;

    let series = PyDict::new(py);
    series.set_item("t", outcome.series.iter().map(|r| r.t).collect::<Vec<_>>())?;
    series.set_item("mass", outcome.series.iter().map(|r| r.mass).collect::<Vec<_>>())?;
    series.set_item("energy", outcome.series.iter().map(|r| r.energy).collect::<Vec<_>>())?;
    series.set_item("entropy", outcome.series.iter().map(|r| r.entropy).collect::<Vec<_>>())?;
    series.set_item("f_sup", outcome.series.iter().map(|r| r.f_sup).collect::<Vec<_>>())?;
    out.set_item("series", series)?;
    out.set_item("final_f", outcome.final_state.distribution().values().to_vec())?;
    Ok(out)
}

/// Partition a list of (location, mass) atoms; the certificate is verified
/// before it is returned.
#[pyfunction]
#[pyo3(signature = (atoms, b = 2.0, delta = 0.4))]
fn partition<'py>(
    py: Python<'py>,
    atoms: Vec<(f64, f64)>,
    b: f64,
    delta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = nk::DiscreteMeasure::new(atoms).map_err(err)?;
    let p = nk::partition_measure(&m, b, delta).map_err(err)?;
    p.verify(&m).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("b", p.family.b())?;
    out.set_item("scale", p.family.scale())?;
    out.set_item("delta", p.delta)?;
    out.set_item("total", p.total)?;
    match &p.case {
        nk::PartitionCase::Concentrated { k, extended_mass } => {
            out.set_item("case", "concentrated")?;
            out.set_item("k", k)?;
            out.set_item("extended_mass", extended_mass)?;
        }
        nk::PartitionCase::Separated { u1, u2, eta, u1_mass, u2_mass } => {
            out.set_item("case", "separated")?;
            out.set_item("u1", u1.clone())?;
            out.set_item("u2", u2.clone())?;
            out.set_item("eta", eta)?;
            out.set_item("u1_mass", u1_mass)?;
            out.set_item("u2_mass", u2_mass)?;
        }
    }
    out.set_item("verified", true)?;
    Ok(out)
}

/// Least-squares power-law exponent of f on the energy window [lo, hi].
#[pyfunction]
fn fit_exponent<'py>(
    py: Python<'py>,
    dist: &Distribution,
    lo: f64,
    hi: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let fit = nk::fit_exponent(&dist.inner, lo, hi).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("exponent", fit.exponent)?;
    out.set_item("r_squared", fit.r_squared)?;
    out.set_item("nodes_used", fit.nodes_used)?;
    Ok(out)
}

#[pymodule]
fn nordheim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<Distribution>()?;
    m.add_class::<BlowupData>()?;
    m.add_function(wrap_pyfunction!(bose_einstein, m)?)?;
    m.add_function(wrap_pyfunction!(blowup_data, m)?)?;
    m.add_function(wrap_pyfunction!(collision_rates, m)?)?;
    m.add_function(wrap_pyfunction!(gain_loss, m)?)?;
    m.add_function(wrap_pyfunction!(run_from_config, m)?)?;
    m.add_function(wrap_pyfunction!(partition, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponent, m)?)?;
    Ok(())
}
