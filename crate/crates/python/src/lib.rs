//! Python bindings: systems, thresholds, spectra and the batch commands.

use std::path::PathBuf;

use hvz_core::run::{self, Command, ExecOptions, RunConfig};
use hvz_core::symgroup::{branch, CharacterTableExport, SpeciesGroup, SpeciesSplit, SymmetryType};
use hvz_core::system::{self, PotentialKind, PotentialSpec, SystemConfig};
use hvz_core::threshold::{self, EnergyCache, FiberGrid, Lemma1Region, ThresholdConfig};
use hvz_core::verify::{self, HvzConfig};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: hvz_core::Error) -> PyErr {
    if e.is_config_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

fn symmetry(label: &str) -> PyResult<SymmetryType> {
    SymmetryType::parse(label).map_err(err)
}

fn grid(points: usize, box_len: f64, tol: f64, seed: u64) -> FiberGrid {
    let mut g = FiberGrid {
        points,
        box_len,
        ..FiberGrid::default()
    };
    g.solver.tol = tol;
    g.solver.seed = seed;
    g
}

fn potential(kind: &str, strength: f64, range: f64, softening: f64) -> PyResult<PotentialSpec> {
    let kind = match kind {
        "zero" => PotentialKind::Zero,
        "gaussian-well" => PotentialKind::GaussianWell,
        "softened-coulomb" => PotentialKind::SoftenedCoulomb,
        "yukawa" => PotentialKind::Yukawa,
        other => return Err(PyValueError::new_err(format!("unknown potential kind {other:?}"))),
    };
    Ok(PotentialSpec {
        kind,
        strength,
        range,
        softening,
    })
}

/// A few-body system of pairwise interacting particles.
#[pyclass(frozen)]
struct ParticleSystem {
    inner: system::ParticleSystem,
}

#[pymethods]
impl ParticleSystem {
    /// `count` identical particles with one pair potential.
    #[staticmethod]
    #[pyo3(signature = (count, mass=1.0, kind="gaussian-well", strength=0.0, range=1.0, softening=1.0, dimension=1))]
    fn identical(
        count: usize,
        mass: f64,
        kind: &str,
        strength: f64,
        range: f64,
        softening: f64,
        dimension: usize,
    ) -> PyResult<Self> {
        let spec = potential(kind, strength, range, softening)?;
        let inner = system::ParticleSystem::identical(count, mass, spec, dimension);
        system::validate(&inner).map_err(err)?;
        Ok(Self { inner })
    }

    /// Parses the TOML system format.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = SystemConfig::from_toml(text).and_then(|c| c.build()).map_err(err)?;
        system::validate(&inner).map_err(err)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension
    }

    #[getter]
    fn masses(&self) -> Vec<f64> {
        (0..self.inner.len()).map(|i| self.inner.mass(i)).collect()
    }

    /// Symmetry types of the identical-particle group.
    fn symmetry_types(&self) -> PyResult<Vec<String>> {
        let group = self.inner.species_group().map_err(err)?;
        Ok(group.types().map_err(err)?.iter().map(SymmetryType::label).collect())
    }

    /// Two-cluster decompositions up to particle exchange.
    fn decompositions(&self) -> Vec<String> {
        system::decomposition_orbits(&self.inner).iter().map(|z| z.label()).collect()
    }

    fn __repr__(&self) -> String {
        format!("ParticleSystem(n={}, d={})", self.inner.len(), self.inner.dimension)
    }
}

/// Result of a threshold scan.
#[pyclass(frozen)]
struct ThresholdReport {
    inner: threshold::ThresholdReport,
}

#[pymethods]
impl ThresholdReport {
    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    #[getter]
    fn alpha(&self) -> String {
        self.inner.alpha.label()
    }

    /// Labels of the minimising decompositions.
    #[getter]
    fn minimizing(&self) -> Vec<String> {
        self.inner.minimizing.clone()
    }

    /// Minimiser estimates `(Q, lambda)`.
    fn gamma(&self) -> Vec<(Vec<f64>, f64)> {
        self.inner.gamma().iter().map(|g| (g.q.clone(), g.lambda)).collect()
    }

    /// Lambda curve of one decomposition as CSV.
    fn curve_csv(&self, decomposition: &str) -> PyResult<String> {
        self.inner
            .decomposition(decomposition)
            .and_then(|d| d.curve.as_ref())
            .map(|c| c.to_csv())
            .ok_or_else(|| PyValueError::new_err(format!("no curve for {decomposition}")))
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("ThresholdReport(alpha={}, mu={})", self.inner.alpha, self.inner.mu)
    }
}

type CharacterRows = (Vec<String>, Vec<String>, Vec<Vec<i64>>);

/// Character table of a product of symmetric groups: `(types, classes, rows)`.
#[pyfunction]
fn character_table(sizes: Vec<usize>) -> PyResult<CharacterRows> {
    let group = SpeciesGroup::from_sizes(&sizes).map_err(err)?;
    let t = CharacterTableExport::build(&group).map_err(err)?;
    let rows = t.rows();
    Ok((t.types, t.classes, rows))
}

/// Restriction of a type of `S_n` to `S_k x S_(n-k)`: `[(left, right, multiplicity)]`.
#[pyfunction]
fn branching(alpha: &str, n: usize, k: usize) -> PyResult<Vec<(String, String, u64)>> {
    if k == 0 || k >= n {
        return Err(PyValueError::new_err("need 0 < k < n"));
    }
    let group = SpeciesGroup::symmetric(n).map_err(err)?;
    let split = SpeciesSplit {
        species: vec![0],
        left: vec![k],
        right: vec![n - k],
    };
    let table = branch(&symmetry(alpha)?, &group, &split).map_err(err)?;
    Ok(table
        .entries
        .iter()
        .map(|e| (e.left.label(), e.right.label(), e.multiplicity))
        .collect())
}

/// Lowest energy of the cluster `members` of type `beta` at total momentum `momentum`.
#[pyfunction]
#[pyo3(signature = (system, members, beta, momentum, points=128, box_len=40.0, tol=1e-9, seed=42))]
#[allow(clippy::too_many_arguments)]
fn cluster_energy(
    py: Python<'_>,
    system: &ParticleSystem,
    members: Vec<usize>,
    beta: &str,
    momentum: Vec<f64>,
    points: usize,
    box_len: f64,
    tol: f64,
    seed: u64,
) -> PyResult<f64> {
    let beta = symmetry(beta)?;
    let g = grid(points, box_len, tol, seed);
    py.detach(|| threshold::cluster_energy(&system.inner, &members, &beta, &momentum, &g, None))
        .map(|e| e.energy)
        .map_err(err)
}

/// Bottom of the essential spectrum on the type-`alpha` subspace.
#[pyfunction]
#[pyo3(signature = (system, alpha, points=128, box_len=40.0, qmax=None, tol=1e-9, seed=42, cache=None))]
#[allow(clippy::too_many_arguments)]
fn mu_alpha(
    py: Python<'_>,
    system: &ParticleSystem,
    alpha: &str,
    points: usize,
    box_len: f64,
    qmax: Option<f64>,
    tol: f64,
    seed: u64,
    cache: Option<PathBuf>,
) -> PyResult<ThresholdReport> {
    let alpha = symmetry(alpha)?;
    let config = ThresholdConfig {
        grid: grid(points, box_len, tol, seed),
        qmax,
        ..ThresholdConfig::default()
    };
    let cache = match cache {
        Some(dir) => EnergyCache::with_dir(&dir).map_err(err)?,
        None => EnergyCache::new(),
    };
    let inner = py
        .detach(|| threshold::mu_alpha(&system.inner, &alpha, &config, Some(&cache)))
        .map_err(err)?;
    Ok(ThresholdReport { inner })
}

/// Eigenvalues `(value, residual)` of the full operator below `mu - atol`.
#[pyfunction]
#[pyo3(signature = (system, alpha, mu, points=128, box_len=40.0, kmax=4, atol=1e-6, tol=1e-9, seed=42))]
#[allow(clippy::too_many_arguments)]
fn discrete_spectrum(
    py: Python<'_>,
    system: &ParticleSystem,
    alpha: &str,
    mu: f64,
    points: usize,
    box_len: f64,
    kmax: usize,
    atol: f64,
    tol: f64,
    seed: u64,
) -> PyResult<Vec<(f64, f64)>> {
    let alpha = symmetry(alpha)?;
    let g = grid(points, box_len, tol, seed);
    py.detach(|| verify::discrete_spectrum_below(&system.inner, &alpha, mu, &g, atol, kmax))
        .map(|s| s.below)
        .map_err(err)
}

/// Weyl trial sequence for a threshold report; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (system, report, levels=None))]
fn hvz_check(
    py: Python<'_>,
    system: &ParticleSystem,
    report: &ThresholdReport,
    levels: Option<Vec<(f64, usize)>>,
) -> PyResult<String> {
    let mut cfg = HvzConfig::default();
    if let Some(levels) = levels {
        cfg.levels = levels
            .into_iter()
            .map(|(box_len, points)| verify::HvzLevel { box_len, points })
            .collect();
    }
    let template = report.inner.config.grid.clone();
    let out = py
        .detach(|| verify::hvz_check(&system.inner, &report.inner, &cfg, &template))
        .map_err(err)?;
    json(&out)
}

/// Finiteness diagnostics around `center`; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (system, report, decomposition, center, half_width=0.5, points=5))]
fn lemma1(
    py: Python<'_>,
    system: &ParticleSystem,
    report: &ThresholdReport,
    decomposition: &str,
    center: Vec<f64>,
    half_width: f64,
    points: usize,
) -> PyResult<String> {
    let z = report
        .inner
        .decomposition(decomposition)
        .ok_or_else(|| PyValueError::new_err(format!("unknown decomposition {decomposition}")))?
        .decomposition
        .clone();
    let region = Lemma1Region {
        center,
        half_width,
        points,
    };
    let out = py
        .detach(|| {
            threshold::lemma1_diagnostic(
                &system.inner,
                &report.inner.alpha,
                &z,
                &region,
                &report.inner.config,
                None,
            )
        })
        .map_err(err)?;
    json(&out)
}

/// Runs a batch command from a configuration file (TOML, JSON or manifest);
/// returns the printed summary.
#[pyfunction]
#[pyo3(signature = (command, config, inline=false))]
fn run_command(py: Python<'_>, command: &str, config: PathBuf, inline: bool) -> PyResult<String> {
    let cmd = match command {
        "chartab" => Command::Chartab,
        "threshold" => Command::Threshold,
        "hvz" => Command::Hvz,
        "lemma1" => Command::Lemma1,
        "spectrum" => Command::Spectrum,
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    };
    let cfg = RunConfig::load(&config)
        .and_then(|c| c.resolve(config.parent()))
        .map_err(err)?;
    py.detach(|| run::execute(cmd, &cfg, ExecOptions { inline }))
        .map(|o| o.summary)
        .map_err(err)
}

#[pymodule]
fn hvz(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ParticleSystem>()?;
    m.add_class::<ThresholdReport>()?;
    m.add_function(wrap_pyfunction!(character_table, m)?)?;
    m.add_function(wrap_pyfunction!(branching, m)?)?;
    m.add_function(wrap_pyfunction!(cluster_energy, m)?)?;
    m.add_function(wrap_pyfunction!(mu_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(hvz_check, m)?)?;
    m.add_function(wrap_pyfunction!(lemma1, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    Ok(())
}
