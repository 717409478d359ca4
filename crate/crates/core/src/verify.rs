//! Full-grid checks of a computed threshold.
//!
//! Weyl-type trial states (two cluster ground states, a plane wave in the
//! cluster separation and a Gaussian envelope) approach the threshold from
//! above; eigenvalues of the full operator below it are discrete spectrum.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{lowest_eigenpairs, IdentityProjection};
use crate::error::{Error, Result};
use crate::fourier_grid::{dot, norm, Dispersion, FiberHamiltonian, GridSpec, SymmetryProjector, C64};
use crate::symgroup::SymmetryType;
use crate::system::{validate, ClusterDecomposition, ParticleSystem, PotentialKind};
use crate::threshold::{fiber_momenta, lambda_curve, FiberGrid, ThresholdConfig, ThresholdReport};

/// A two-cluster trial state on the full grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylTrialConfig {
    pub decomposition: ClusterDecomposition,
    /// Relative momentum of the clusters.
    pub q: Vec<f64>,
    /// Displacement of cluster 2 along `axis`.
    pub separation: f64,
    /// Envelope width in the separation coordinate.
    pub width: f64,
    pub axis: usize,
    pub grid: FiberGrid,
}

impl WeylTrialConfig {
    fn check(&self, sys: &ParticleSystem) -> Result<()> {
        let half = self.grid.box_len / 2.0;
        if !(self.separation > 0.0) || !(self.width > 0.0) {
            return Err(Error::Config("separation and width must be positive".into()));
        }
        if self.width >= self.separation {
            return Err(Error::Config(format!(
                "envelope width {} must be below the separation {}",
                self.width, self.separation
            )));
        }
        if self.separation >= half {
            return Err(Error::Config(format!(
                "separation {} does not fit in half the box {half}",
                self.separation
            )));
        }
        if self.axis >= sys.dimension || self.q.len() != sys.dimension {
            return Err(Error::Config("axis or Q does not match the spatial dimension".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylQuotient {
    pub quotient: f64,
    /// `E1 + E2` of the cluster states used, on the same grid.
    pub lambda: f64,
    pub beta1: SymmetryType,
    pub beta2: SymmetryType,
    /// Norm of the projected trial relative to the unprojected one.
    pub projected_fraction: f64,
}

fn cluster_state(
    sys: &ParticleSystem,
    members: &[usize],
    beta: &SymmetryType,
    momentum: &[f64],
    grid: &FiberGrid,
) -> Result<(Vec<C64>, f64)> {
    if members.len() == 1 {
        let p2: f64 = momentum.iter().map(|p| p * p).sum();
        return Ok((vec![C64::new(1.0, 0.0)], grid.dispersion.energy(p2, sys.mass(members[0]))));
    }
    let spec = GridSpec::new(sys.dimension, members.to_vec(), grid.points, grid.box_len, momentum.to_vec())?
        .with_gauge(grid.gauge);
    let proj = SymmetryProjector::for_type(sys, &spec, beta)?;
    let h = FiberHamiltonian::for_subset(sys, spec, None, grid.dispersion)?;
    let res = lowest_eigenpairs(&h, &proj, 1, &grid.solver)?;
    Ok((res.eigenvectors.into_iter().next().expect("one eigenpair"), res.eigenvalues[0]))
}

fn full_problem(sys: &ParticleSystem, grid: &FiberGrid, law: Dispersion) -> Result<(GridSpec, FiberHamiltonian)> {
    let spec = GridSpec::new(
        sys.dimension,
        (0..sys.len()).collect(),
        grid.points,
        grid.box_len,
        sys.total_momentum.clone(),
    )?
    .with_gauge(grid.gauge);
    let h = FiberHamiltonian::for_subset(sys, spec.clone(), None, law)?;
    Ok((spec, h))
}

fn wrap(i: usize, n: usize) -> i64 {
    let i = i as i64;
    let n = n as i64;
    if i >= n / 2 {
        i - n
    } else {
        i
    }
}

/// Rayleigh quotient of the projected two-cluster trial state.
pub fn weyl_quotient(sys: &ParticleSystem, alpha: &SymmetryType, cfg: &WeylTrialConfig) -> Result<WeylQuotient> {
    validate(sys)?;
    cfg.check(sys)?;
    let z = &cfg.decomposition;
    let tcfg = ThresholdConfig {
        grid: cfg.grid.clone(),
        ..ThresholdConfig::default()
    };
    let curve = lambda_curve(sys, z, alpha, std::slice::from_ref(&cfg.q), &tcfg, None)?;
    let sample = &curve.samples[0];
    let (m1, m2) = z.masses(sys);
    let (p1, p2) = fiber_momenta(m1, m2, &sys.total_momentum, &cfg.q);
    let (phi1, e1) = cluster_state(sys, &z.d1, &sample.beta1, &p1, &cfg.grid)?;
    let (phi2, e2) = cluster_state(sys, &z.d2, &sample.beta2, &p2, &cfg.grid)?;

    let (spec, h) = full_problem(sys, &cfg.grid, cfg.grid.dispersion)?;
    let d = sys.dimension;
    let n = cfg.grid.points;
    let step = spec.spacing();
    let axes = spec.axes();
    let r2 = z.d2[0];
    let sub_index = |members: &[usize], idx: &[usize], origin: Option<usize>| -> usize {
        let mut flat = 0usize;
        for &j in &members[1..] {
            for c in 0..d {
                let base = origin.map_or(0, |o| idx[(o - 1) * d + c]);
                flat = flat * n + (idx[(j - 1) * d + c] + n - base) % n;
            }
        }
        flat
    };

    let mut idx = vec![0usize; axes];
    let mut trial = vec![C64::default(); spec.len()];
    for (f, out) in trial.iter_mut().enumerate() {
        spec.decode(f, &mut idx);
        let pos = |j: usize, c: usize, origin: Option<usize>| -> f64 {
            if j == 0 {
                return 0.0;
            }
            let base = origin.map_or(0, |o| idx[(o - 1) * d + c]);
            wrap((idx[(j - 1) * d + c] + n - base) % n, n) as f64 * step
        };
        let mut eta2 = 0.0;
        let mut phase = 0.0;
        for c in 0..d {
            let c1: f64 = z.d1.iter().map(|&j| sys.mass(j) * pos(j, c, None)).sum::<f64>() / m1;
            let c2: f64 = pos(r2, c, None)
                + z.d2.iter().map(|&j| sys.mass(j) * pos(j, c, Some(r2))).sum::<f64>() / m2;
            let eta = c2 - c1;
            let shift = if c == cfg.axis { cfg.separation } else { 0.0 };
            eta2 += (eta - shift) * (eta - shift);
            phase += cfg.q[c] * eta;
        }
        let envelope = (-eta2 / (2.0 * cfg.width * cfg.width)).exp();
        if envelope < 1e-300 {
            continue;
        }
        let a = if z.d1.len() > 1 { phi1[sub_index(&z.d1, &idx, None)] } else { phi1[0] };
        let b = if z.d2.len() > 1 { phi2[sub_index(&z.d2, &idx, Some(r2))] } else { phi2[0] };
        *out = a * b * C64::from_polar(envelope, phase);
    }

    let proj = SymmetryProjector::for_type(sys, &spec, alpha)?;
    let mut psi = vec![C64::default(); trial.len()];
    proj.apply(&trial, &mut psi);
    let before = norm(&trial);
    let after = norm(&psi);
    if before == 0.0 || after <= 1e-8 * before {
        return Err(Error::ZeroTrial(format!(
            "type {alpha} annihilates the {} trial state",
            z.label()
        )));
    }
    let mut hpsi = vec![C64::default(); psi.len()];
    h.apply_into(&psi, &mut hpsi);
    Ok(WeylQuotient {
        quotient: dot(&psi, &hpsi).re / dot(&psi, &psi).re,
        lambda: e1 + e2,
        beta1: sample.beta1.clone(),
        beta2: sample.beta2.clone(),
        projected_fraction: after / before,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpectrum {
    pub mu: f64,
    /// Eigenvalues below `mu - atol` with their residuals.
    pub below: Vec<(f64, f64)>,
    /// Lowest eigenvalue of the full operator on the type subspace.
    pub lowest: f64,
    /// All `kmax` computed eigenvalues were below the threshold.
    pub truncated: bool,
    pub points: usize,
    pub box_len: f64,
}

/// Exact ground energy of a potential-free operator on the type subspace:
/// the smallest kinetic value whose momentum eigenvector survives the projector.
fn free_ground(h: &FiberHamiltonian, proj: &SymmetryProjector) -> Option<f64> {
    let images: Vec<(Vec<u32>, f64)> = proj
        .terms
        .iter()
        .map(|(op, c)| {
            let mut dst = vec![0u32; op.momentum_source.len()];
            for (i, &s) in op.momentum_source.iter().enumerate() {
                dst[s as usize] = i as u32;
            }
            (dst, *c)
        })
        .collect();
    let mut order: Vec<usize> = (0..h.kinetic.len()).collect();
    order.sort_by(|&a, &b| h.kinetic[a].total_cmp(&h.kinetic[b]).then(a.cmp(&b)));
    let mut weights: Vec<(u32, f64)> = Vec::new();
    for k in order {
        weights.clear();
        for (dst, c) in &images {
            let at = dst[k];
            match weights.iter_mut().find(|w| w.0 == at) {
                Some(w) => w.1 += c,
                None => weights.push((at, *c)),
            }
        }
        if weights.iter().map(|w| w.1 * w.1).sum::<f64>() > 1e-12 {
            return Some(h.kinetic[k]);
        }
    }
    None
}

fn type_ground(sys: &ParticleSystem, alpha: &SymmetryType, grid: &FiberGrid, law: Dispersion) -> Result<f64> {
    let (spec, h) = full_problem(sys, grid, law)?;
    let proj = SymmetryProjector::for_type(sys, &spec, alpha)?;
    if sys.is_free() {
        return free_ground(&h, &proj).ok_or_else(|| Error::EmptySubspace {
            context: format!("type {alpha} on the full grid"),
        });
    }
    Ok(lowest_eigenpairs(&h, &proj, 1, &grid.solver)?.eigenvalues[0])
}

/// Eigenvalues of the full operator of type `alpha` below `mu - atol`.
pub fn discrete_spectrum_below(
    sys: &ParticleSystem,
    alpha: &SymmetryType,
    mu: f64,
    grid: &FiberGrid,
    atol: f64,
    kmax: usize,
) -> Result<DiscreteSpectrum> {
    validate(sys)?;
    sys.species_group()?.check_type(alpha)?;
    if sys.is_free() {
        // the operator is diagonal in momentum space and bounded below by mu
        let lowest = type_ground(sys, alpha, grid, grid.dispersion)?;
        return Ok(DiscreteSpectrum {
            mu,
            below: Vec::new(),
            lowest,
            truncated: false,
            points: grid.points,
            box_len: grid.box_len,
        });
    }
    let (spec, h) = full_problem(sys, grid, grid.dispersion)?;
    let proj = SymmetryProjector::for_type(sys, &spec, alpha)?;
    let res = lowest_eigenpairs(&h, &proj, kmax, &grid.solver)?;
    let below: Vec<(f64, f64)> = res
        .eigenvalues
        .iter()
        .zip(&res.residuals)
        .filter(|(e, _)| **e < mu - atol)
        .map(|(e, r)| (*e, *r))
        .collect();
    Ok(DiscreteSpectrum {
        mu,
        truncated: below.len() == kmax,
        below,
        lowest: res.eigenvalues[0],
        points: grid.points,
        box_len: grid.box_len,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonrelativisticComparison {
    pub sigma: f64,
    pub pseudorelativistic: f64,
    pub quadratic: f64,
    /// `|E_pr - E_nr| / |E_nr|`, zero when both vanish.
    pub deviation: f64,
}

/// Ground energies with masses scaled by `sigma` under both kinetic laws on one grid.
pub fn nonrelativistic_crosscheck(
    sys: &ParticleSystem,
    alpha: &SymmetryType,
    sigma: f64,
    grid: &FiberGrid,
) -> Result<NonrelativisticComparison> {
    if !(sigma >= 10.0) {
        return Err(Error::Config(format!("mass scale must be at least 10, got {sigma}")));
    }
    let scaled = sys.with_scaled_masses(sigma);
    validate(&scaled)?;
    scaled.species_group()?.check_type(alpha)?;
    let pr = type_ground(&scaled, alpha, grid, Dispersion::Pseudorelativistic)?;
    let nr = type_ground(&scaled, alpha, grid, Dispersion::Quadratic)?;
    let deviation = if pr == nr { 0.0 } else { (pr - nr).abs() / nr.abs() };
    Ok(NonrelativisticComparison {
        sigma,
        pseudorelativistic: pr,
        quadratic: nr,
        deviation,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub points: usize,
    pub spacing: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityProbe {
    pub pair: (usize, usize),
    pub strength: f64,
    pub points: Vec<ProbePoint>,
    /// The energy drop does not shrink under the last refinement.
    pub diverging: bool,
}

/// Two-body ground energy of the pair `(i, j)` under grid refinement with the
/// softening of Coulomb-like potentials tied to the grid spacing.
pub fn stability_probe(
    sys: &ParticleSystem,
    i: usize,
    j: usize,
    box_len: f64,
    grids: &[usize],
) -> Result<StabilityProbe> {
    if i == j || i >= sys.len() || j >= sys.len() || grids.len() < 3 {
        return Err(Error::Config("probe needs two distinct particles and at least three grids".into()));
    }
    let (a, b) = (i.min(j), i.max(j));
    let base = sys.subsystem(&[a, b], vec![0.0; sys.dimension]);
    let v = *base.potential(0, 1);
    let points = grids
        .par_iter()
        .map(|&n| -> Result<ProbePoint> {
            let spacing = box_len / n as f64;
            let mut pair = base.clone();
            if matches!(v.kind, PotentialKind::SoftenedCoulomb | PotentialKind::Yukawa) {
                pair.pair_potentials[0].softening = spacing / 2.0;
            }
            let grid = FiberGrid {
                points: n,
                box_len,
                ..FiberGrid::default()
            };
            let (_, h) = full_problem(&pair, &grid, grid.dispersion)?;
            let e = lowest_eigenpairs(&h, &IdentityProjection, 1, &grid.solver)?.eigenvalues[0];
            Ok(ProbePoint {
                points: n,
                spacing,
                energy: e,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = points.len();
    let last = points[k - 2].energy - points[k - 1].energy;
    let previous = points[k - 3].energy - points[k - 2].energy;
    Ok(StabilityProbe {
        pair: (a, b),
        strength: v.strength,
        diverging: last > 1e-6 && last >= previous,
        points,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvzLevel {
    pub box_len: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HvzConfig {
    pub levels: Vec<HvzLevel>,
    /// Separation as a fraction of the box length.
    pub separation_fraction: f64,
    /// Envelope width as a fraction of the separation.
    pub width_fraction: f64,
    pub axis: usize,
    /// Relative momentum of the trial; `None` takes the first minimiser estimate.
    pub q: Option<Vec<f64>>,
    pub kmax: usize,
    /// Repeat the discrete spectrum at twice the points of the last level.
    pub check_refinement: bool,
}

impl Default for HvzConfig {
    fn default() -> Self {
        Self {
            levels: vec![
                HvzLevel { box_len: 30.0, points: 64 },
                HvzLevel { box_len: 45.0, points: 96 },
                HvzLevel { box_len: 60.0, points: 128 },
            ],
            separation_fraction: 0.25,
            width_fraction: 0.25,
            axis: 0,
            q: None,
            kmax: 4,
            check_refinement: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvzPoint {
    pub separation: f64,
    pub box_len: f64,
    pub points: usize,
    pub width: f64,
    pub quotient: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvzReport {
    pub alpha: SymmetryType,
    pub mu: f64,
    pub decomposition: String,
    pub q: Vec<f64>,
    pub sequence: Vec<HvzPoint>,
    /// Least-squares slope of `log(quotient - mu)` against `log(L)`.
    pub slope: Option<f64>,
    pub monotone: bool,
    pub final_gap: f64,
    pub discrete: DiscreteSpectrum,
    /// Discrete eigenvalues recomputed at twice the points, when requested.
    pub refined: Option<DiscreteSpectrum>,
}

impl HvzReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,L,N,w,quotient,lambda,mu\n");
        for p in &self.sequence {
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e}",
                p.separation, p.box_len, p.points, p.width, p.quotient, p.lambda, self.mu
            );
        }
        out
    }

    /// Largest change of the discrete eigenvalues between `N` and `2N`.
    pub fn refinement_shift(&self) -> Option<f64> {
        let refined = self.refined.as_ref()?;
        if refined.below.len() < self.discrete.below.len() {
            return Some(f64::INFINITY);
        }
        Some(
            self.discrete
                .below
                .iter()
                .zip(&refined.below)
                .map(|(a, b)| (a.0 - b.0).abs())
                .fold(0.0, f64::max),
        )
    }
}

/// Weyl-quotient sequence and discrete spectrum for a computed threshold.
pub fn hvz_check(
    sys: &ParticleSystem,
    threshold: &ThresholdReport,
    cfg: &HvzConfig,
    template: &FiberGrid,
) -> Result<HvzReport> {
    if cfg.levels.is_empty() {
        return Err(Error::Config("at least one refinement level is required".into()));
    }
    let alpha = &threshold.alpha;
    let label = threshold
        .minimizing
        .first()
        .ok_or_else(|| Error::Config("threshold report has no minimising decomposition".into()))?;
    let z = threshold
        .decomposition(label)
        .ok_or_else(|| Error::Config(format!("decomposition {label} missing from report")))?
        .decomposition
        .clone();
    let q = match &cfg.q {
        Some(q) => q.clone(),
        None => threshold
            .gamma()
            .first()
            .map(|g| g.q.clone())
            .ok_or_else(|| Error::Config("threshold report has no minimiser estimate".into()))?,
    };
    let sequence = cfg
        .levels
        .par_iter()
        .map(|level| -> Result<HvzPoint> {
            let separation = cfg.separation_fraction * level.box_len;
            let width = cfg.width_fraction * separation;
            let trial = WeylTrialConfig {
                decomposition: z.clone(),
                q: q.clone(),
                separation,
                width,
                axis: cfg.axis,
                grid: FiberGrid {
                    points: level.points,
                    box_len: level.box_len,
                    ..template.clone()
                },
            };
            let w = weyl_quotient(sys, alpha, &trial)?;
            Ok(HvzPoint {
                separation,
                box_len: level.box_len,
                points: level.points,
                width,
                quotient: w.quotient,
                lambda: w.lambda,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mu = threshold.mu;
    let monotone = sequence.windows(2).all(|w| w[1].quotient < w[0].quotient);
    let final_gap = sequence.last().map_or(f64::NAN, |p| p.quotient - mu);
    let logs: Vec<(f64, f64)> = sequence
        .iter()
        .filter(|p| p.quotient > mu)
        .map(|p| (p.box_len.ln(), (p.quotient - mu).ln()))
        .collect();
    let slope = (logs.len() >= 2).then(|| {
        let k = logs.len() as f64;
        let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    });
    let last = cfg.levels.last().expect("non-empty levels");
    let grid = FiberGrid {
        points: last.points,
        box_len: last.box_len,
        ..template.clone()
    };
    let atol = threshold.config.atol;
    let discrete = discrete_spectrum_below(sys, alpha, mu, &grid, atol, cfg.kmax)?;
    let refined = if cfg.check_refinement {
        let fine = FiberGrid {
            points: 2 * last.points,
            ..grid
        };
        Some(discrete_spectrum_below(sys, alpha, mu, &fine, atol, cfg.kmax)?)
    } else {
        None
    };
    Ok(HvzReport {
        alpha: alpha.clone(),
        mu,
        decomposition: z.label(),
        q,
        sequence,
        slope,
        monotone,
        final_gap,
        discrete,
        refined,
    })
}
