//! Two-cluster breakup thresholds.
//!
//! For a bipartition `(D1, D2)` with relative momentum `Q` the clusters sit on
//! the fibers `P1 = M1 Q0 / M - Q`, `P2 = M2 Q0 / M + Q`. The symmetry-resolved
//! fiber curve is
//!
//! `lambda(Q) = min over (b1, b2) in F0 of E(D1, b1, P1) + E(D2, b2, P2)`
//!
//! and the threshold `mu` is its minimum over `Q` and over decompositions.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eigensolve::{group_levels, lowest_eigenpairs, EigenOptions};
use crate::error::{Error, Result};
use crate::fourier_grid::{dot, Dispersion, FiberHamiltonian, GridSpec, MomentumGauge, SymmetryProjector, C64};
use crate::symgroup::{branch, BranchingEntry, BranchingTable, SpeciesGroup, SymmetryType};
use crate::system::{decomposition_orbits, species_members_of, validate, ClusterDecomposition, ParticleSystem};

/// Resolution to which cluster momenta are rounded before a grid solve.
pub const MOMENTUM_QUANTUM: f64 = 1e-10;

/// Discretisation of every cluster fiber problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberGrid {
    pub points: usize,
    pub box_len: f64,
    pub gauge: MomentumGauge,
    pub dispersion: Dispersion,
    pub solver: EigenOptions,
}

impl Default for FiberGrid {
    fn default() -> Self {
        Self {
            points: 128,
            box_len: 40.0,
            gauge: MomentumGauge::CenterOfMass,
            dispersion: Dispersion::Pseudorelativistic,
            solver: EigenOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub grid: FiberGrid,
    /// Half-width of the `Q` box; `None` means five times the largest mass.
    pub qmax: Option<f64>,
    /// Odd number of coarse samples per axis; `None` picks 41, 21, 11 for d = 1, 2, 3.
    pub coarse_points: Option<usize>,
    pub refine_rounds: usize,
    /// Tie tolerance for minimising decompositions and minimiser sets.
    pub atol: f64,
    /// Binding margin below the recursive breakup threshold.
    pub gap_tol: f64,
    /// Required rise of `lambda` on the box boundary above its minimum.
    pub boundary_margin: f64,
    pub degeneracy_tol: f64,
    /// Eigenpairs per cluster used to resolve the lowest eigenspace.
    pub levels: usize,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            grid: FiberGrid::default(),
            qmax: None,
            coarse_points: None,
            refine_rounds: 2,
            atol: 1e-6,
            gap_tol: 1e-3,
            boundary_margin: 1e-3,
            degeneracy_tol: crate::eigensolve::DEFAULT_DEGENERACY_TOL,
            levels: 6,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("atol", self.atol),
            ("gap_tol", self.gap_tol),
            ("boundary_margin", self.boundary_margin),
            ("degeneracy_tol", self.degeneracy_tol),
            ("solver.tol", self.grid.solver.tol),
            ("box_len", self.grid.box_len),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(q) = self.qmax {
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::Config(format!("qmax must be positive, got {q}")));
            }
        }
        if let Some(n) = self.coarse_points {
            if n < 3 || n % 2 == 0 {
                return Err(Error::Config(format!("coarse_points must be odd and at least 3, got {n}")));
            }
        }
        if self.levels == 0 {
            return Err(Error::Config("levels must be at least 1".into()));
        }
        if self.grid.points < 4 || !self.grid.points.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "grid points must be even and at least 4, got {}",
                self.grid.points
            )));
        }
        Ok(())
    }

    pub fn qmax_for(&self, sys: &ParticleSystem) -> f64 {
        self.qmax.unwrap_or(5.0 * sys.max_mass())
    }

    pub fn coarse_points_for(&self, dimension: usize) -> usize {
        self.coarse_points.unwrap_or(match dimension {
            1 => 41,
            2 => 21,
            _ => 11,
        })
    }
}

/// Internal ground energy of a cluster at fixed cluster momentum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberEnergy {
    pub members: Vec<usize>,
    pub beta: SymmetryType,
    pub momentum: Vec<f64>,
    pub energy: f64,
    pub residual: f64,
    /// Closed form (single particle or non-interacting cluster) rather than a grid solve.
    pub exact: bool,
    pub points: usize,
    pub box_len: f64,
}

/// Concurrent memo of cluster energies, optionally mirrored to a directory.
#[derive(Debug, Default)]
pub struct EnergyCache {
    energies: RwLock<HashMap<String, FiberEnergy>>,
    breakups: RwLock<HashMap<String, f64>>,
    dir: Option<PathBuf>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl EnergyCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_dir(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: Some(dir.to_path_buf()),
            ..Self::default()
        })
    }

    pub fn len(&self) -> usize {
        self.energies.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(hits, misses)` of grid-solved energies.
    pub fn stats(&self) -> (usize, usize) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    fn lookup(&self, key: &str) -> Option<FiberEnergy> {
        if let Some(e) = self.energies.read().unwrap().get(key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Some(e.clone());
        }
        let dir = self.dir.as_ref()?;
        let text = std::fs::read_to_string(dir.join(format!("{key}.json"))).ok()?;
        let e: FiberEnergy = serde_json::from_str(&text).ok()?;
        self.hits.fetch_add(1, Ordering::Relaxed);
        self.energies.write().unwrap().entry(key.to_string()).or_insert_with(|| e.clone());
        Some(e)
    }

    fn store(&self, key: &str, value: &FiberEnergy) {
        self.energies
            .write()
            .unwrap()
            .entry(key.to_string())
            .or_insert_with(|| value.clone());
        if let Some(dir) = &self.dir {
            let tmp = dir.join(format!("{key}.{}.tmp", std::process::id()));
            let done = dir.join(format!("{key}.json"));
            let write = serde_json::to_string(value)
                .map_err(std::io::Error::other)
                .and_then(|text| std::fs::write(&tmp, text))
                .and_then(|_| std::fs::rename(&tmp, &done));
            if let Err(e) = write {
                log::warn!("cache write {} failed: {e}", done.display());
            }
        }
    }
}

/// Cluster momenta for relative momentum `q`.
pub fn fiber_momenta(m1: f64, m2: f64, q0: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = m1 + m2;
    let p1 = q0.iter().zip(q).map(|(a, b)| m1 * a / m - b).collect();
    let p2 = q0.iter().zip(q).map(|(a, b)| m2 * a / m + b).collect();
    (p1, p2)
}

fn quantize(p: &[f64]) -> Vec<f64> {
    // adding 0.0 folds -0.0 into 0.0 so equal momenta hash equally
    p.iter().map(|x| (x / MOMENTUM_QUANTUM).round() * MOMENTUM_QUANTUM + 0.0).collect()
}

/// Members reordered by species so equivalent subsets give the same subsystem.
fn canonical_subsystem(sys: &ParticleSystem, members: &[usize], momentum: Vec<f64>) -> ParticleSystem {
    let mut order = members.to_vec();
    order.sort_by_key(|&i| (sys.particles[i].species, i));
    sys.subsystem(&order, momentum)
}

fn content_key(kind: &str, sub: &ParticleSystem, beta: &SymmetryType, grid: &FiberGrid) -> String {
    let payload = serde_json::json!({
        "kind": kind,
        "system": sub,
        "beta": beta.label(),
        "grid": grid,
    });
    let digest = Sha256::digest(payload.to_string().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn subset_group(sys: &ParticleSystem, members: &[usize]) -> Result<SpeciesGroup> {
    let (species, by) = species_members_of(sys, members);
    SpeciesGroup::new(species, by.iter().map(Vec::len).collect())
}

fn check_subset(sys: &ParticleSystem, members: &[usize], momentum: &[f64]) -> Result<()> {
    if members.is_empty() || members.windows(2).any(|w| w[0] >= w[1]) || members.iter().any(|&i| i >= sys.len()) {
        return Err(Error::Shape(format!(
            "subset {members:?} must be ascending indices below {}",
            sys.len()
        )));
    }
    if momentum.len() != sys.dimension || momentum.iter().any(|p| !p.is_finite()) {
        return Err(Error::Shape(format!(
            "momentum {momentum:?} is not a finite {}-vector",
            sys.dimension
        )));
    }
    Ok(())
}

fn fiber_problem(
    sub: &ParticleSystem,
    grid: &FiberGrid,
    momentum: Vec<f64>,
) -> Result<(GridSpec, FiberHamiltonian)> {
    let spec = GridSpec::new(sub.dimension, (0..sub.len()).collect(), grid.points, grid.box_len, momentum)?
        .with_gauge(grid.gauge);
    let h = FiberHamiltonian::for_subset(sub, spec.clone(), None, grid.dispersion)?;
    Ok((spec, h))
}

/// Lowest energy of the subset `members` in type `beta` at cluster momentum `momentum`.
pub fn cluster_energy(
    sys: &ParticleSystem,
    members: &[usize],
    beta: &SymmetryType,
    momentum: &[f64],
    grid: &FiberGrid,
    cache: Option<&EnergyCache>,
) -> Result<FiberEnergy> {
    check_subset(sys, members, momentum)?;
    subset_group(sys, members)?.check_type(beta)?;
    if members.len() == 1 || sys.subset_is_free(members) {
        let mass: f64 = members.iter().map(|&i| sys.mass(i)).sum();
        let p2: f64 = momentum.iter().map(|p| p * p).sum();
        return Ok(FiberEnergy {
            members: members.to_vec(),
            beta: beta.clone(),
            momentum: momentum.to_vec(),
            energy: grid.dispersion.energy(p2, mass),
            residual: 0.0,
            exact: true,
            points: grid.points,
            box_len: grid.box_len,
        });
    }
    let p = quantize(momentum);
    let sub = canonical_subsystem(sys, members, p.clone());
    let key = content_key("fiber-energy", &sub, beta, grid);
    if let Some(mut hit) = cache.and_then(|c| c.lookup(&key)) {
        hit.members = members.to_vec();
        return Ok(hit);
    }
    let (spec, h) = fiber_problem(&sub, grid, p.clone())?;
    let proj = SymmetryProjector::for_type(&sub, &spec, beta)?;
    let res = lowest_eigenpairs(&h, &proj, 1, &grid.solver).map_err(|e| match e {
        Error::EmptySubspace { context } => Error::EmptySubspace {
            context: format!("type {beta} on subset {members:?}: {context}"),
        },
        other => other,
    })?;
    let value = FiberEnergy {
        members: members.to_vec(),
        beta: beta.clone(),
        momentum: p,
        energy: res.eigenvalues[0],
        residual: res.residuals[0],
        exact: false,
        points: grid.points,
        box_len: grid.box_len,
    };
    if let Some(c) = cache {
        c.misses.fetch_add(1, Ordering::Relaxed);
        c.store(&key, &value);
    }
    Ok(value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSample {
    pub q: Vec<f64>,
    pub lambda: f64,
    pub beta1: SymmetryType,
    pub beta2: SymmetryType,
    pub e1: f64,
    pub e2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaCurve {
    pub decomposition: String,
    pub alpha: SymmetryType,
    pub samples: Vec<LambdaSample>,
    /// Branching pairs with an empty grid subspace.
    pub failed_pairs: Vec<String>,
}

impl LambdaCurve {
    pub fn to_csv(&self) -> String {
        let d = self.samples.first().map_or(1, |s| s.q.len());
        let axes = ["Qx", "Qy", "Qz"];
        let mut out = axes[..d].join(",");
        out.push_str(",lambda,argmin_beta1,argmin_beta2\n");
        for s in &self.samples {
            for q in &s.q {
                let _ = write!(out, "{q:.17e},");
            }
            let _ = writeln!(out, "{:.17e},{},{}", s.lambda, s.beta1, s.beta2);
        }
        out
    }

    pub fn minimum(&self) -> Option<&LambdaSample> {
        self.samples.iter().min_by(|a, b| a.lambda.total_cmp(&b.lambda))
    }
}

fn lambda_at(
    sys: &ParticleSystem,
    z: &ClusterDecomposition,
    table: &BranchingTable,
    q: &[f64],
    grid: &FiberGrid,
    cache: Option<&EnergyCache>,
) -> Result<(LambdaSample, Vec<String>)> {
    let (m1, m2) = z.masses(sys);
    let (p1, p2) = fiber_momenta(m1, m2, &sys.total_momentum, q);
    let mut best: Option<LambdaSample> = None;
    let mut failures = Vec::new();
    for entry in &table.entries {
        let pair = (
            cluster_energy(sys, &z.d1, &entry.left, &p1, grid, cache),
            cluster_energy(sys, &z.d2, &entry.right, &p2, grid, cache),
        );
        let (e1, e2) = match pair {
            (Ok(a), Ok(b)) => (a.energy, b.energy),
            (Err(Error::EmptySubspace { context }), _) | (_, Err(Error::EmptySubspace { context })) => {
                failures.push(format!("{}x{}: {context}", entry.left, entry.right));
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        if best.as_ref().is_none_or(|b| e1 + e2 < b.lambda) {
            best = Some(LambdaSample {
                q: q.to_vec(),
                lambda: e1 + e2,
                beta1: entry.left.clone(),
                beta2: entry.right.clone(),
                e1,
                e2,
            });
        }
    }
    match best {
        Some(s) => Ok((s, failures)),
        None => Err(Error::AllPairsFailed {
            decomposition: z.label(),
            failures,
        }),
    }
}

fn branching_for(sys: &ParticleSystem, alpha: &SymmetryType, z: &ClusterDecomposition) -> Result<BranchingTable> {
    branch(alpha, &sys.species_group()?, &z.species_split(sys))
}

/// `lambda(Q)` at the given samples.
pub fn lambda_curve(
    sys: &ParticleSystem,
    z: &ClusterDecomposition,
    alpha: &SymmetryType,
    q_samples: &[Vec<f64>],
    config: &ThresholdConfig,
    cache: Option<&EnergyCache>,
) -> Result<LambdaCurve> {
    let table = branching_for(sys, alpha, z)?;
    if table.is_empty() {
        return Err(Error::NoAdmissibleDecomposition {
            alpha: alpha.label(),
            details: format!("empty branching on {z}"),
        });
    }
    let results: Vec<(LambdaSample, Vec<String>)> = q_samples
        .par_iter()
        .map(|q| lambda_at(sys, z, &table, q, &config.grid, cache))
        .collect::<Result<_>>()?;
    let mut failed_pairs: Vec<String> = results.iter().flat_map(|(_, f)| f.clone()).collect();
    failed_pairs.sort();
    failed_pairs.dedup();
    Ok(LambdaCurve {
        decomposition: z.label(),
        alpha: alpha.clone(),
        samples: results.into_iter().map(|(s, _)| s).collect(),
        failed_pairs,
    })
}

/// Integer lattice used by the adaptive scan: `Q = spacing * index`.
struct ScanLattice {
    dimension: usize,
    spacing: f64,
}

impl ScanLattice {
    fn point(&self, idx: &[i64]) -> Vec<f64> {
        idx.iter().map(|&i| i as f64 * self.spacing + 0.0).collect()
    }
}

/// All integer vectors with entries `-half..=half` times `step`, around `center`.
fn cube(center: &[i64], half: i64, step: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(center.len())];
    for &c in center {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-half..=half).map(move |j| {
                    let mut p = prefix.clone();
                    p.push(c + j * step);
                    p
                })
            })
            .collect();
    }
    out
}

type Samples = BTreeMap<Vec<i64>, LambdaSample>;

fn evaluate_points(
    sys: &ParticleSystem,
    z: &ClusterDecomposition,
    table: &BranchingTable,
    lattice: &ScanLattice,
    points: Vec<Vec<i64>>,
    samples: &mut Samples,
    failures: &mut Vec<String>,
    grid: &FiberGrid,
    cache: Option<&EnergyCache>,
) -> Result<()> {
    let fresh: Vec<Vec<i64>> = points.into_iter().filter(|p| !samples.contains_key(p)).collect();
    let results: Vec<(LambdaSample, Vec<String>)> = fresh
        .par_iter()
        .map(|idx| lambda_at(sys, z, table, &lattice.point(idx), grid, cache))
        .collect::<Result<_>>()?;
    for (idx, (s, f)) in fresh.into_iter().zip(results) {
        failures.extend(f);
        samples.insert(idx, s);
    }
    Ok(())
}

/// Connected groups of lattice points (Chebyshev adjacency within `reach`).
fn components(points: &[Vec<i64>], reach: i64) -> Vec<Vec<usize>> {
    let mut label = vec![usize::MAX; points.len()];
    let mut groups = Vec::new();
    for start in 0..points.len() {
        if label[start] != usize::MAX {
            continue;
        }
        let g = groups.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        label[start] = g;
        while let Some(i) = stack.pop() {
            members.push(i);
            for j in 0..points.len() {
                if label[j] == usize::MAX
                    && points[i].iter().zip(&points[j]).all(|(a, b)| (a - b).abs() <= reach)
                {
                    label[j] = g;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }
    groups
}

/// One connected set of near-minimal samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub q: Vec<f64>,
    pub lambda: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub decomposition: ClusterDecomposition,
    pub label: String,
    pub branching: Vec<BranchingEntry>,
    /// Reason the decomposition was not scanned.
    pub skipped: Option<String>,
    pub minimum: Option<f64>,
    pub argmin: Option<Vec<f64>>,
    pub gamma: Vec<GammaEstimate>,
    pub boundary_minimum: Option<f64>,
    pub boundary_ok: Option<bool>,
    pub curve: Option<LambdaCurve>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub alpha: SymmetryType,
    pub mu: f64,
    /// Decompositions within `atol` of `mu`.
    pub minimizing: Vec<String>,
    pub decompositions: Vec<DecompositionReport>,
    pub qmax: f64,
    pub coarse_points: usize,
    pub finest_spacing: f64,
    pub config: ThresholdConfig,
    pub warnings: Vec<String>,
}

impl ThresholdReport {
    /// Near-minimal momenta of the first minimising decomposition.
    pub fn gamma(&self) -> &[GammaEstimate] {
        self.decompositions
            .iter()
            .find(|d| self.minimizing.first() == Some(&d.label))
            .map_or(&[], |d| &d.gamma)
    }

    pub fn decomposition(&self, label: &str) -> Option<&DecompositionReport> {
        self.decompositions.iter().find(|d| d.label == label)
    }
}

fn scan_decomposition(
    sys: &ParticleSystem,
    z: &ClusterDecomposition,
    table: &BranchingTable,
    alpha: &SymmetryType,
    config: &ThresholdConfig,
    cache: Option<&EnergyCache>,
) -> Result<DecompositionReport> {
    let d = sys.dimension;
    let qmax = config.qmax_for(sys);
    let n = config.coarse_points_for(d) as i64;
    let half = (n - 1) / 2;
    let scale = 1i64 << config.refine_rounds;
    let lattice = ScanLattice {
        dimension: d,
        spacing: qmax / (half * scale) as f64,
    };
    let mut samples = Samples::new();
    let mut failures = Vec::new();
    let origin = vec![0i64; d];
    evaluate_points(
        sys,
        z,
        table,
        &lattice,
        cube(&origin, half, scale),
        &mut samples,
        &mut failures,
        &config.grid,
        cache,
    )?;

    let global = samples.values().map(|s| s.lambda).fold(f64::INFINITY, f64::min);
    let mut centers: Vec<Vec<i64>> = Vec::new();
    for (idx, s) in &samples {
        let mut is_min = true;
        let mut spread: f64 = 0.0;
        for axis in 0..lattice.dimension {
            for dir in [-scale, scale] {
                let mut nb = idx.clone();
                nb[axis] += dir;
                if let Some(o) = samples.get(&nb) {
                    is_min &= s.lambda <= o.lambda;
                    spread = spread.max(o.lambda - s.lambda);
                }
            }
        }
        if is_min && s.lambda <= global + config.atol.max(spread) {
            centers.push(idx.clone());
        }
    }
    let mut step = scale;
    for _ in 0..config.refine_rounds {
        step /= 2;
        let window: Vec<Vec<i64>> = centers.iter().flat_map(|c| cube(c, 2, step)).collect();
        evaluate_points(sys, z, table, &lattice, window, &mut samples, &mut failures, &config.grid, cache)?;
        let mut next: Vec<Vec<i64>> = centers
            .iter()
            .map(|c| {
                cube(c, 2, step)
                    .into_iter()
                    .min_by(|a, b| samples[a].lambda.total_cmp(&samples[b].lambda))
                    .expect("non-empty window")
            })
            .collect();
        next.sort();
        next.dedup();
        centers = next;
    }

    let (best_idx, best) = samples
        .iter()
        .min_by(|a, b| a.1.lambda.total_cmp(&b.1.lambda))
        .expect("scan has samples");
    let minimum = best.lambda;
    let argmin = best.q.clone();
    let _ = best_idx;

    let near: Vec<Vec<i64>> = samples
        .iter()
        .filter(|(_, s)| s.lambda <= minimum + config.atol)
        .map(|(k, _)| k.clone())
        .collect();
    let gamma = components(&near, scale)
        .into_iter()
        .map(|g| {
            let rep = g
                .iter()
                .map(|&i| &samples[&near[i]])
                .min_by(|a, b| a.lambda.total_cmp(&b.lambda))
                .expect("non-empty component");
            GammaEstimate {
                q: rep.q.clone(),
                lambda: rep.lambda,
                samples: g.len(),
            }
        })
        .collect();

    let edge = half * scale;
    let boundary_minimum = samples
        .iter()
        .filter(|(k, _)| k.iter().any(|&i| i.abs() == edge))
        .map(|(_, s)| s.lambda)
        .fold(f64::INFINITY, f64::min);

    failures.sort();
    failures.dedup();
    Ok(DecompositionReport {
        decomposition: z.clone(),
        label: z.label(),
        branching: table.entries.clone(),
        skipped: None,
        minimum: Some(minimum),
        argmin: Some(argmin),
        gamma,
        boundary_minimum: Some(boundary_minimum),
        boundary_ok: Some(boundary_minimum > minimum + config.boundary_margin),
        curve: Some(LambdaCurve {
            decomposition: z.label(),
            alpha: alpha.clone(),
            samples: samples.into_values().collect(),
            failed_pairs: failures,
        }),
    })
}

/// Threshold `mu` of type `alpha` over all decomposition orbits.
pub fn mu_alpha(
    sys: &ParticleSystem,
    alpha: &SymmetryType,
    config: &ThresholdConfig,
    cache: Option<&EnergyCache>,
) -> Result<ThresholdReport> {
    config.validate()?;
    let validation = validate(sys)?;
    let group = sys.species_group()?;
    group.check_type(alpha)?;
    let mut reports = Vec::new();
    for z in decomposition_orbits(sys) {
        let table = branch(alpha, &group, &z.species_split(sys))?;
        let skipped = |reason: String| DecompositionReport {
            decomposition: z.clone(),
            label: z.label(),
            branching: table.entries.clone(),
            skipped: Some(reason),
            minimum: None,
            argmin: None,
            gamma: Vec::new(),
            boundary_minimum: None,
            boundary_ok: None,
            curve: None,
        };
        if table.is_empty() {
            reports.push(skipped("empty branching".into()));
            continue;
        }
        match scan_decomposition(sys, &z, &table, alpha, config, cache) {
            Ok(r) => reports.push(r),
            Err(Error::AllPairsFailed { failures, .. }) => {
                reports.push(skipped(format!("every branching pair is empty on the grid: {}", failures.join("; "))))
            }
            Err(e) => return Err(e),
        }
    }
    let mu = reports
        .iter()
        .filter_map(|r| r.minimum)
        .fold(f64::INFINITY, f64::min);
    if !mu.is_finite() {
        let details = reports
            .iter()
            .map(|r| format!("{}: {}", r.label, r.skipped.as_deref().unwrap_or("?")))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::NoAdmissibleDecomposition {
            alpha: alpha.label(),
            details,
        });
    }
    let minimizing = reports
        .iter()
        .filter(|r| r.minimum.is_some_and(|m| m <= mu + config.atol))
        .map(|r| r.label.clone())
        .collect();
    let mut warnings = validation.warnings;
    for r in &reports {
        if r.boundary_ok == Some(false) {
            warnings.push(format!(
                "{}: lambda on the Q-box boundary does not rise above its minimum; enlarge qmax",
                r.label
            ));
        }
    }
    let d = sys.dimension;
    let half = (config.coarse_points_for(d) as i64 - 1) / 2;
    Ok(ThresholdReport {
        alpha: alpha.clone(),
        mu,
        minimizing,
        decompositions: reports,
        qmax: config.qmax_for(sys),
        coarse_points: config.coarse_points_for(d),
        finest_spacing: config.qmax_for(sys) / (half * (1i64 << config.refine_rounds)) as f64,
        config: config.clone(),
        warnings,
    })
}

/// Breakup threshold of a cluster: its own `mu` at its fiber momentum.
///
/// A single particle cannot break up; its threshold is its dispersion.
pub fn breakup_threshold(
    sys: &ParticleSystem,
    members: &[usize],
    beta: &SymmetryType,
    momentum: &[f64],
    config: &ThresholdConfig,
    cache: Option<&EnergyCache>,
) -> Result<f64> {
    check_subset(sys, members, momentum)?;
    let mass: f64 = members.iter().map(|&i| sys.mass(i)).sum();
    let p2: f64 = momentum.iter().map(|p| p * p).sum();
    if members.len() <= 2 {
        // two free particles: minimum of the dispersion sum over the relative momentum
        return Ok(config.grid.dispersion.energy(p2, mass));
    }
    let p = quantize(momentum);
    let sub = canonical_subsystem(sys, members, p);
    let key = content_key("breakup", &sub, beta, &config.grid);
    if let Some(c) = cache {
        if let Some(v) = c.breakups.read().unwrap().get(&key) {
            return Ok(*v);
        }
    }
    let mu = mu_alpha(&sub, beta, config, cache)?.mu;
    if let Some(c) = cache {
        c.breakups.write().unwrap().entry(key).or_insert(mu);
    }
    Ok(mu)
}

/// A degenerate level of a cluster with its type content.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterLevel {
    pub energy: f64,
    /// `(type, number of irreducible copies)`.
    pub components: Vec<(SymmetryType, usize)>,
    pub dimension: usize,
}

/// Lowest levels of a cluster within the span of `types`, each decomposed by type.
pub fn cluster_levels(
    sys: &ParticleSystem,
    members: &[usize],
    types: &[SymmetryType],
    momentum: &[f64],
    config: &ThresholdConfig,
) -> Result<Vec<ClusterLevel>> {
    check_subset(sys, members, momentum)?;
    if members.len() == 1 {
        let p2: f64 = momentum.iter().map(|p| p * p).sum();
        return Ok(vec![ClusterLevel {
            energy: config.grid.dispersion.energy(p2, sys.mass(members[0])),
            components: types.iter().map(|t| (t.clone(), 1)).collect(),
            dimension: 1,
        }]);
    }
    let p = quantize(momentum);
    let sub = canonical_subsystem(sys, members, p.clone());
    let (spec, h) = fiber_problem(&sub, &config.grid, p)?;
    let span = SymmetryProjector::for_types(&sub, &spec, types)?;
    let single: Vec<SymmetryProjector> = types
        .iter()
        .map(|t| SymmetryProjector::for_type(&sub, &spec, t))
        .collect::<Result<_>>()?;
    let mut k = config.levels;
    loop {
        let res = lowest_eigenpairs(&h, &span, k, &config.grid.solver)?;
        let found = res.eigenvalues.len();
        let mut groups = group_levels(&res.eigenvalues, config.degeneracy_tol);
        let truncated = found == k;
        if truncated && groups.len() == 1 && k < 64 {
            k *= 2;
            continue;
        }
        if truncated && groups.len() > 1 {
            groups.pop();
        }
        let mut scratch = vec![C64::default(); h.len()];
        return Ok(groups
            .into_iter()
            .map(|g| {
                let components = types
                    .iter()
                    .zip(&single)
                    .filter_map(|(t, proj)| {
                        let trace: f64 = g
                            .iter()
                            .map(|&i| {
                                proj.apply(&res.eigenvectors[i], &mut scratch);
                                dot(&res.eigenvectors[i], &scratch).re
                            })
                            .sum();
                        let copies = (trace / t.dimension() as f64).round() as usize;
                        (copies > 0).then(|| (t.clone(), copies))
                    })
                    .collect();
                ClusterLevel {
                    energy: res.eigenvalues[g[0]],
                    components,
                    dimension: g.len(),
                }
            })
            .collect());
    }
}

/// Sampled box of relative momenta for the finiteness diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Region {
    pub center: Vec<f64>,
    pub half_width: f64,
    /// Odd number of samples per axis at the coarse level `h`.
    pub points: usize,
}

impl Lemma1Region {
    fn check(&self, dimension: usize) -> Result<()> {
        if self.center.len() != dimension || !(self.half_width > 0.0) || self.points < 3 || self.points.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "region needs a {dimension}-vector center, positive half width and an odd point count >= 3"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComponentCount {
    pub left: SymmetryType,
    pub right: SymmetryType,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Sample {
    pub q: Vec<f64>,
    pub lambda: f64,
    pub beta1: SymmetryType,
    pub beta2: SymmetryType,
    pub e1: f64,
    pub e2: f64,
    pub breakup1: f64,
    pub breakup2: f64,
    pub is_discrete: bool,
    pub eigenspace_dimension: usize,
    pub components: Vec<ComponentCount>,
    pub dominant: Option<ComponentCount>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub alpha: SymmetryType,
    pub decomposition: String,
    pub region: Lemma1Region,
    pub samples: Vec<Lemma1Sample>,
    /// Every sample is a discrete eigenvalue of the cluster fiber operator.
    pub hypothesis_i: bool,
    /// One component of multiplicity one, of the same type at every sample.
    pub hypothesis_ii: bool,
    pub dominant: Option<ComponentCount>,
    pub smoothness: f64,
    pub smoothness_median: f64,
    pub minimizers_h: usize,
    pub minimizers_half_h: usize,
    pub region_contains_minimizer: bool,
    pub warnings: Vec<String>,
}

fn eigenspace_components(
    table: &BranchingTable,
    levels1: &[ClusterLevel],
    levels2: &[ClusterLevel],
    rel_tol: f64,
) -> (usize, Vec<ComponentCount>) {
    let mut terms: Vec<(f64, ComponentCount, usize)> = Vec::new();
    for l1 in levels1 {
        for l2 in levels2 {
            for entry in &table.entries {
                let c1 = l1.components.iter().find(|(t, _)| *t == entry.left).map_or(0, |c| c.1);
                let c2 = l2.components.iter().find(|(t, _)| *t == entry.right).map_or(0, |c| c.1);
                if c1 * c2 == 0 {
                    continue;
                }
                let dim = c1 * c2 * (entry.left.dimension() * entry.right.dimension()) as usize;
                terms.push((
                    l1.energy + l2.energy,
                    ComponentCount {
                        left: entry.left.clone(),
                        right: entry.right.clone(),
                        multiplicity: c1 * c2,
                    },
                    dim,
                ));
            }
        }
    }
    let Some(low) = terms.iter().map(|t| t.0).min_by(f64::total_cmp) else {
        return (0, Vec::new());
    };
    let mut merged: Vec<ComponentCount> = Vec::new();
    let mut dimension = 0;
    for (e, c, dim) in terms {
        if (e - low).abs() > rel_tol * low.abs().max(1.0) {
            continue;
        }
        dimension += dim;
        match merged.iter_mut().find(|m| m.left == c.left && m.right == c.right) {
            Some(m) => m.multiplicity += c.multiplicity,
            None => merged.push(c),
        }
    }
    (dimension, merged)
}

fn region_lattice(region: &Lemma1Region, subdivide: i64) -> (ScanLattice, Vec<Vec<i64>>) {
    let half = (region.points as i64 - 1) / 2 * subdivide;
    let lattice = ScanLattice {
        dimension: region.center.len(),
        spacing: region.half_width / half as f64,
    };
    let points = cube(&vec![0; region.center.len()], half, 1);
    (lattice, points)
}

fn count_minimizers(samples: &BTreeMap<Vec<i64>, f64>, keep: impl Fn(&[i64]) -> bool, reach: i64, atol: f64) -> usize {
    let chosen: Vec<(&Vec<i64>, f64)> = samples.iter().filter(|(k, _)| keep(k)).map(|(k, v)| (k, *v)).collect();
    let low = chosen.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let near: Vec<Vec<i64>> = chosen
        .iter()
        .filter(|c| c.1 <= low + atol)
        .map(|c| c.0.clone())
        .collect();
    components(&near, reach).len()
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Finiteness diagnostics of the minimiser set: (i) the minimising cluster pair
/// is bound below its own breakup, (ii) the lowest eigenspace is a single
/// branching component of multiplicity one, sampled over a region of relative momenta.
pub fn lemma1_diagnostic(
    sys: &ParticleSystem,
    alpha: &SymmetryType,
    z: &ClusterDecomposition,
    region: &Lemma1Region,
    config: &ThresholdConfig,
    cache: Option<&EnergyCache>,
) -> Result<Lemma1Report> {
    config.validate()?;
    validate(sys)?;
    region.check(sys.dimension)?;
    let table = branching_for(sys, alpha, z)?;
    if table.is_empty() {
        return Err(Error::NoAdmissibleDecomposition {
            alpha: alpha.label(),
            details: format!("empty branching on {z}"),
        });
    }
    let mut types1: Vec<SymmetryType> = Vec::new();
    let mut types2: Vec<SymmetryType> = Vec::new();
    for e in &table.entries {
        if !types1.contains(&e.left) {
            types1.push(e.left.clone());
        }
        if !types2.contains(&e.right) {
            types2.push(e.right.clone());
        }
    }

    // lambda on the h/2 lattice; even indices form the h lattice
    let (fine, fine_points) = region_lattice(region, 2);
    let at = |idx: &[i64]| -> Vec<f64> {
        fine.point(idx)
            .iter()
            .zip(&region.center)
            .map(|(a, c)| a + c)
            .collect()
    };
    let lambdas: Vec<f64> = fine_points
        .par_iter()
        .map(|idx| lambda_at(sys, z, &table, &at(idx), &config.grid, cache).map(|(s, _)| s.lambda))
        .collect::<Result<_>>()?;
    let fine_map: BTreeMap<Vec<i64>, f64> = fine_points.iter().cloned().zip(lambdas).collect();
    let on_h = |k: &[i64]| k.iter().all(|i| i % 2 == 0);
    let minimizers_h = count_minimizers(&fine_map, on_h, 2, config.atol);
    let minimizers_half_h = count_minimizers(&fine_map, |_| true, 1, config.atol);

    let coarse: Vec<Vec<i64>> = fine_points.iter().filter(|k| on_h(k)).cloned().collect();
    let (m1, m2) = z.masses(sys);
    let samples: Vec<Lemma1Sample> = coarse
        .par_iter()
        .map(|idx| -> Result<Lemma1Sample> {
            let q = at(idx);
            let (s, _) = lambda_at(sys, z, &table, &q, &config.grid, cache)?;
            let (p1, p2) = fiber_momenta(m1, m2, &sys.total_momentum, &q);
            let breakup1 = breakup_threshold(sys, &z.d1, &s.beta1, &p1, config, cache)?;
            let breakup2 = breakup_threshold(sys, &z.d2, &s.beta2, &p2, config, cache)?;
            let bound = |members: &[usize], e: f64, b: f64| members.len() == 1 || e < b - config.gap_tol;
            let is_discrete = (z.d1.len() > 1 || z.d2.len() > 1)
                && bound(&z.d1, s.e1, breakup1)
                && bound(&z.d2, s.e2, breakup2);
            let levels1 = cluster_levels(sys, &z.d1, &types1, &p1, config)?;
            let levels2 = cluster_levels(sys, &z.d2, &types2, &p2, config)?;
            let (eigenspace_dimension, components) =
                eigenspace_components(&table, &levels1, &levels2, config.degeneracy_tol);
            let dominant = components
                .iter()
                .fold(None::<&ComponentCount>, |best, c| match best {
                    Some(b) if b.multiplicity >= c.multiplicity => Some(b),
                    _ => Some(c),
                })
                .cloned();
            Ok(Lemma1Sample {
                q,
                lambda: s.lambda,
                beta1: s.beta1,
                beta2: s.beta2,
                e1: s.e1,
                e2: s.e2,
                breakup1,
                breakup2,
                is_discrete,
                eigenspace_dimension,
                components,
                dominant,
            })
        })
        .collect::<Result<_>>()?;

    let hypothesis_i = samples.iter().all(|s| s.is_discrete);
    let first = samples.first().and_then(|s| s.dominant.clone());
    let hypothesis_ii = samples.iter().all(|s| {
        s.components.len() == 1 && s.components[0].multiplicity == 1 && s.dominant == first
    });

    let mut second = Vec::new();
    for idx in &coarse {
        for axis in 0..idx.len() {
            let mut lo = idx.clone();
            let mut hi = idx.clone();
            lo[axis] -= 2;
            hi[axis] += 2;
            if let (Some(a), Some(b)) = (fine_map.get(&lo), fine_map.get(&hi)) {
                second.push((a - 2.0 * fine_map[idx] + b).abs());
            }
        }
    }
    let smoothness = second.iter().cloned().fold(0.0, f64::max);
    let smoothness_median = median(second);

    let edge = (region.points as i64 - 1) / 2 * 2;
    let (argmin, _) = fine_map
        .iter()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("region has samples");
    let region_contains_minimizer = argmin.iter().all(|i| i.abs() < edge);
    let mut warnings = Vec::new();
    if !region_contains_minimizer {
        warnings.push("the sampled region does not contain the minimiser of lambda in its interior".into());
    }
    Ok(Lemma1Report {
        alpha: alpha.clone(),
        decomposition: z.label(),
        region: region.clone(),
        samples,
        hypothesis_i,
        hypothesis_ii,
        dominant: first,
        smoothness,
        smoothness_median,
        minimizers_h,
        minimizers_half_h,
        region_contains_minimizer,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::PotentialSpec;

    fn t(label: &str) -> SymmetryType {
        SymmetryType::parse(label).unwrap()
    }

    fn small() -> ThresholdConfig {
        ThresholdConfig {
            grid: FiberGrid {
                points: 64,
                box_len: 30.0,
                ..FiberGrid::default()
            },
            coarse_points: Some(21),
            ..ThresholdConfig::default()
        }
    }

    #[test]
    fn fiber_momenta_solve_both_constraints() {
        assert_eq!(fiber_momenta(1.0, 2.0, &[0.0], &[0.0]), (vec![0.0], vec![0.0]));
        assert_eq!(fiber_momenta(1.0, 2.0, &[0.0], &[0.7]), (vec![-0.7], vec![0.7]));
        let (m1, m2, q0, q) = (1.5, 1.5, [0.8, -0.2], [0.3, 0.1]);
        let (p1, p2) = fiber_momenta(m1, m2, &q0, &q);
        for a in 0..2 {
            assert!((p1[a] - (q0[a] / 2.0 - q[a])).abs() < 1e-15);
            assert!((p1[a] + p2[a] - q0[a]).abs() < 1e-14);
            assert!(((p2[a] * m1 - p1[a] * m2) / (m1 + m2) - q[a]).abs() < 1e-14);
        }
        let (m1, m2) = (0.3, 2.9);
        let (p1, p2) = fiber_momenta(m1, m2, &[1.7], &[-0.4]);
        assert!((p1[0] + p2[0] - 1.7).abs() < 1e-14);
        assert!(((p2[0] * m1 - p1[0] * m2) / (m1 + m2) + 0.4).abs() < 1e-14);
    }

    proptest::proptest! {
        #[test]
        fn fiber_momenta_substitution(
            m1 in 0.1f64..10.0,
            m2 in 0.1f64..10.0,
            q0 in proptest::collection::vec(-10.0f64..10.0, 3),
            q in proptest::collection::vec(-10.0f64..10.0, 3),
        ) {
            let (p1, p2) = fiber_momenta(m1, m2, &q0, &q);
            for a in 0..3 {
                proptest::prop_assert!((p1[a] + p2[a] - q0[a]).abs() < 1e-14 * q0[a].abs().max(1.0) * 4.0);
                proptest::prop_assert!(((p2[a] * m1 - p1[a] * m2) / (m1 + m2) - q[a]).abs() < 1e-14 * 4.0 * (q[a].abs() + q0[a].abs()).max(1.0));
            }
        }
    }

    #[test]
    fn singleton_energy_is_dispersion() {
        let sys = ParticleSystem::identical(2, 1.0, PotentialSpec::gaussian_well(-2.0, 1.0), 1);
        let grid = FiberGrid::default();
        let e = cluster_energy(&sys, &[0], &t("[1]"), &[0.0], &grid, None).unwrap();
        assert_eq!(e.energy, 0.0);
        let e = cluster_energy(&sys, &[1], &t("[1]"), &[3.0], &grid, None).unwrap();
        assert!((e.energy - (10f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!(e.exact);
    }

    #[test]
    fn cluster_type_is_checked() {
        let sys = ParticleSystem::identical(3, 1.0, PotentialSpec::gaussian_well(-2.0, 1.0), 1);
        let err = cluster_energy(&sys, &[0, 1], &t("[3]"), &[0.0], &FiberGrid::default(), None);
        assert!(err.is_err());
    }

    #[test]
    fn cache_is_transparent() {
        let sys = ParticleSystem::identical(3, 1.0, PotentialSpec::gaussian_well(-2.0, 1.0), 1);
        let grid = small().grid;
        let cache = EnergyCache::new();
        let plain = cluster_energy(&sys, &[0, 1], &t("[2]"), &[0.25], &grid, None).unwrap();
        let first = cluster_energy(&sys, &[0, 1], &t("[2]"), &[0.25], &grid, Some(&cache)).unwrap();
        // an equivalent subset hits the same entry
        let second = cluster_energy(&sys, &[1, 2], &t("[2]"), &[0.25], &grid, Some(&cache)).unwrap();
        assert_eq!(plain.energy.to_bits(), first.energy.to_bits());
        assert_eq!(first.energy.to_bits(), second.energy.to_bits());
        assert_eq!(second.members, vec![1, 2]);
        assert_eq!(cache.stats(), (1, 1));
    }

    #[test]
    fn disk_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let sys = ParticleSystem::identical(2, 1.0, PotentialSpec::gaussian_well(-2.0, 1.0), 1);
        let grid = small().grid;
        let a = {
            let cache = EnergyCache::with_dir(dir.path()).unwrap();
            cluster_energy(&sys, &[0, 1], &t("[2]"), &[0.5], &grid, Some(&cache)).unwrap()
        };
        let cache = EnergyCache::with_dir(dir.path()).unwrap();
        let b = cluster_energy(&sys, &[0, 1], &t("[2]"), &[0.5], &grid, Some(&cache)).unwrap();
        assert_eq!(a, b);
        assert_eq!(cache.stats(), (1, 0));
    }

    #[test]
    fn free_pair_curve() {
        let sys = ParticleSystem::identical(2, 1.0, PotentialSpec::ZERO, 1);
        let z = ClusterDecomposition::new(&sys, vec![0], vec![1]).unwrap();
        let qs = vec![vec![0.0], vec![1.0], vec![-1.0], vec![0.4]];
        let curve = lambda_curve(&sys, &z, &t("[2]"), &qs, &small(), None).unwrap();
        assert_eq!(curve.samples[0].lambda, 0.0);
        for s in &curve.samples[1..] {
            let q: f64 = s.q[0];
            assert!((s.lambda - 2.0 * ((q * q + 1.0).sqrt() - 1.0)).abs() < 1e-15);
        }
        assert!((curve.samples[1].lambda - 2.0 * (2f64.sqrt() - 1.0)).abs() < 1e-15);
        let csv = curve.to_csv();
        assert!(csv.starts_with("Qx,lambda,argmin_beta1,argmin_beta2\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn free_system_threshold_is_zero() {
        for (n, alphas) in [(2, vec!["[2]", "[1,1]"]), (3, vec!["[3]", "[2,1]", "[1,1,1]"])] {
            let sys = ParticleSystem::identical(n, 1.0, PotentialSpec::ZERO, 1);
            for a in alphas {
                let r = mu_alpha(&sys, &t(a), &small(), None).unwrap();
                assert_eq!(r.mu, 0.0, "{a}");
                for d in &r.decompositions {
                    assert_eq!(d.gamma.len(), 1);
                    assert_eq!(d.gamma[0].q, vec![0.0]);
                    assert_eq!(d.boundary_ok, Some(true));
                }
            }
        }
    }

    #[test]
    fn bound_pair_breaks_into_free_particles() {
        let sys = ParticleSystem::identical(2, 1.0, PotentialSpec::gaussian_well(-2.0, 1.0), 1);
        let r = mu_alpha(&sys, &t("[2]"), &small(), None).unwrap();
        assert_eq!(r.mu, 0.0);
        assert_eq!(r.minimizing, vec!["{0}|{1}".to_string()]);
    }

    #[test]
    fn conjugate_decompositions_agree() {
        let sys = ParticleSystem::identical(3, 1.0, PotentialSpec::gaussian_well(-2.0, 1.0), 1);
        let cfg = small();
        let qs: Vec<Vec<f64>> = (-4..=4).map(|i| vec![i as f64 * 0.3]).collect();
        let splits = [(vec![0], vec![1, 2]), (vec![0, 1], vec![2]), (vec![0, 2], vec![1])];
        let curves: Vec<LambdaCurve> = splits
            .iter()
            .map(|(a, b)| {
                let z = ClusterDecomposition::new(&sys, a.clone(), b.clone()).unwrap();
                lambda_curve(&sys, &z, &t("[3]"), &qs, &cfg, None).unwrap()
            })
            .collect();
        for c in &curves[1..] {
            for (a, b) in c.samples.iter().zip(&curves[0].samples) {
                // clusters swap sides, so Q flips sign
                let mirrored = curves[0].samples.iter().find(|s| (s.q[0] + a.q[0]).abs() < 1e-12).unwrap();
                let reference = if c.decomposition.starts_with("{0}|") { b } else { mirrored };
                assert!((a.lambda - reference.lambda).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn branching_subset_bounds_threshold() {
        let sys = ParticleSystem::identical(3, 1.0, PotentialSpec::gaussian_well(-2.0, 1.0), 1);
        let z = ClusterDecomposition::new(&sys, vec![0, 1], vec![2]).unwrap();
        let cfg = small();
        let qs: Vec<Vec<f64>> = (-3..=3).map(|i| vec![i as f64 * 0.25]).collect();
        let full = lambda_curve(&sys, &z, &t("[2,1]"), &qs, &cfg, None).unwrap();
        let table = branching_for(&sys, &t("[2,1]"), &z).unwrap();
        assert_eq!(table.len(), 2);
        for entry in &table.entries {
            let part = BranchingTable {
                alpha: table.alpha.clone(),
                entries: vec![entry.clone()],
            };
            for (q, f) in qs.iter().zip(&full.samples) {
                let (s, _) = lambda_at(&sys, &z, &part, q, &cfg.grid, None).unwrap();
                assert!(f.lambda <= s.lambda);
            }
        }
    }

    fn tiny_grid() -> ThresholdConfig {
        ThresholdConfig {
            grid: FiberGrid {
                points: 4,
                box_len: 4.0,
                ..FiberGrid::default()
            },
            coarse_points: Some(3),
            refine_rounds: 0,
            ..ThresholdConfig::default()
        }
    }

    #[test]
    fn empty_grid_subspace_is_skipped() {
        // k fermions need k distinct lattice momenta summing to 0 mod N: none for k = N = 4
        let sys = ParticleSystem::identical(5, 1.0, PotentialSpec::gaussian_well(-1.0, 1.0), 1);
        let r = mu_alpha(&sys, &t("[1,1,1,1,1]"), &tiny_grid(), None).unwrap();
        let skipped = r.decompositions.iter().find(|d| d.decomposition.d2.len() == 1).unwrap();
        assert!(skipped.skipped.as_deref().unwrap().contains("empty"));
        let scanned: Vec<_> = r.decompositions.iter().filter(|d| d.minimum.is_some()).collect();
        assert_eq!(scanned.len(), 1);
        assert_eq!(scanned[0].decomposition.d2.len() + scanned[0].decomposition.d1.len(), 5);
        assert_eq!(r.minimizing, vec![scanned[0].label.clone()]);
    }

    #[test]
    fn every_decomposition_empty() {
        let sys = ParticleSystem::identical(7, 1.0, PotentialSpec::gaussian_well(-1.0, 1.0), 1);
        let err = mu_alpha(&sys, &t("[1,1,1,1,1,1,1]"), &tiny_grid(), None).unwrap_err();
        assert!(matches!(err, Error::NoAdmissibleDecomposition { .. }), "{err}");
        assert!(err.to_string().contains("[1,1,1,1,1,1,1]"));
    }

    #[test]
    fn lemma1_free_system_is_not_discrete() {
        let sys = ParticleSystem::identical(3, 1.0, PotentialSpec::ZERO, 1);
        let z = ClusterDecomposition::new(&sys, vec![0, 1], vec![2]).unwrap();
        let region = Lemma1Region {
            center: vec![0.0],
            half_width: 0.5,
            points: 5,
        };
        let cfg = ThresholdConfig {
            grid: FiberGrid {
                points: 32,
                box_len: 20.0,
                ..FiberGrid::default()
            },
            ..ThresholdConfig::default()
        };
        let r = lemma1_diagnostic(&sys, &t("[3]"), &z, &region, &cfg, None).unwrap();
        assert!(r.samples.iter().all(|s| !s.is_discrete));
        assert!(!r.hypothesis_i);
        assert_eq!(r.minimizers_h, 1);
        assert_eq!(r.minimizers_half_h, 1);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ThresholdConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.atol = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = ThresholdConfig {
            coarse_points: Some(10),
            ..ThresholdConfig::default()
        };
        assert!(cfg.validate().is_err());
        let parsed: ThresholdConfig = toml::from_str("atol = 1e-7\n[grid]\npoints = 64\n").unwrap();
        assert_eq!(parsed.atol, 1e-7);
        assert_eq!(parsed.grid.points, 64);
        assert_eq!(parsed.grid.box_len, 40.0);
    }
}
