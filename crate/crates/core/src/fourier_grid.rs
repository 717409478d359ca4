//! Periodic Fourier grids over the internal coordinates of a particle subset.
//!
//! Coordinates are differences `x_j = r_j - r_ref` to the subset's reference
//! particle (its smallest index). The wave function of the subset at total
//! momentum `P` is `exp(i P . xi) phi(x)` with `xi` the subset's centre of
//! mass, and `phi` is periodic on the box. In momentum space particle `j`
//! carries `p_j = k_j + (m_j / M) P` with lattice wavenumbers `k_j` and
//! `k_ref = -sum_{j != ref} k_j`, so permutations of identical particles
//! permute lattice vectors and act on the grid as exact integer maps. The
//! reference wavenumber is aliased into `[-N/2, N/2)` like all others.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symgroup::{projector_coefficients, GroupElement, SpeciesGroup, SymmetryType};
use crate::system::{evaluate_potential, species_members_of, ClusterDecomposition, ParticleSystem};

pub type C64 = Complex<f64>;

/// How the subset momentum `P` is shared among the particles in momentum space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentumGauge {
    /// `p_j = k_j + (m_j/M) P` for every member.
    #[default]
    CenterOfMass,
    /// `p_j = k_j` for non-reference members, `p_ref = P - sum k_j`.
    Reference,
}

/// Single-particle kinetic law.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dispersion {
    /// `sqrt(p^2 + m^2) - m`.
    #[default]
    Pseudorelativistic,
    /// `p^2 / 2m`.
    Quadratic,
}

impl Dispersion {
    pub fn energy(self, p2: f64, mass: f64) -> f64 {
        match self {
            // p^2 / (sqrt(p^2+m^2) + m) avoids cancellation for heavy particles
            Dispersion::Pseudorelativistic if p2 == 0.0 => 0.0,
            Dispersion::Pseudorelativistic => p2 / ((p2 + mass * mass).sqrt() + mass),
            Dispersion::Quadratic => p2 / (2.0 * mass),
        }
    }
}

/// `sqrt(|P|^2 + M^2) - M`, the kinetic energy of a free body of mass `M`.
pub fn dispersion(momentum: &[f64], mass: f64) -> f64 {
    let p2: f64 = momentum.iter().map(|p| p * p).sum();
    Dispersion::Pseudorelativistic.energy(p2, mass)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dimension: usize,
    /// Particle indices of the subset, ascending; the first is the reference.
    pub members: Vec<usize>,
    /// Points per axis.
    pub points: usize,
    pub box_len: f64,
    /// Total momentum of the subset.
    pub momentum: Vec<f64>,
    #[serde(default)]
    pub gauge: MomentumGauge,
}

impl GridSpec {
    pub fn new(dimension: usize, members: Vec<usize>, points: usize, box_len: f64, momentum: Vec<f64>) -> Result<Self> {
        let spec = Self {
            dimension,
            members,
            points,
            box_len,
            momentum,
            gauge: MomentumGauge::default(),
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn with_gauge(mut self, gauge: MomentumGauge) -> Self {
        self.gauge = gauge;
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.points < 4 || !self.points.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "grid points per axis must be even and >= 4, got {}",
                self.points
            )));
        }
        if !(self.box_len > 0.0 && self.box_len.is_finite()) {
            return Err(Error::Config(format!("box length must be positive, got {}", self.box_len)));
        }
        if !(1..=3).contains(&self.dimension) || self.momentum.len() != self.dimension {
            return Err(Error::Config(format!(
                "momentum {:?} does not match dimension {}",
                self.momentum, self.dimension
            )));
        }
        if self.members.is_empty() || self.members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "members {:?} must be non-empty and strictly ascending",
                self.members
            )));
        }
        let len = (self.points as f64).powi(self.axes() as i32);
        if len > 1u64.checked_shl(26).unwrap() as f64 {
            return Err(Error::Size {
                what: "grid points",
                value: len as u64,
                min: 1,
                max: 1 << 26,
            });
        }
        Ok(())
    }

    /// Number of internal coordinates, `(|D| - 1) d`.
    pub fn axes(&self) -> usize {
        (self.members.len() - 1) * self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.box_len / self.points as f64
    }

    pub fn momentum_quantum(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.box_len
    }

    /// Signed lattice wavenumber of FFT index `idx`, in `[-N/2, N/2)`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        let n = self.points as i64;
        let i = idx as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Decodes a flat index into per-axis indices (last axis fastest).
    pub fn decode(&self, mut flat: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = flat % self.points;
            flat /= self.points;
        }
    }

    pub fn encode(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points + i)
    }

    fn local_of(&self, particle: usize) -> Option<usize> {
        self.members.iter().position(|&m| m == particle)
    }
}

/// Multi-dimensional unitary DFT over all axes of a grid.
pub struct FftNd {
    points: usize,
    axes: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd")
            .field("points", &self.points)
            .field("axes", &self.axes)
            .finish()
    }
}

impl FftNd {
    pub fn new(points: usize, axes: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            points,
            axes,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        }
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.axes as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.run(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [C64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [C64], fft: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        if self.axes == 0 {
            return;
        }
        let n = self.points;
        let mut scratch = vec![C64::default(); fft.get_inplace_scratch_len()];
        let mut line = vec![C64::default(); n];
        for axis in 0..self.axes {
            let stride = n.pow((self.axes - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (t, v) in line.iter_mut().enumerate() {
                        *v = data[start + t * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (t, v) in line.iter().enumerate() {
                        data[start + t * stride] = *v;
                    }
                }
            }
        }
        let scale = 1.0 / (self.len() as f64).sqrt();
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// A grid specification with its FFT plan.
#[derive(Debug)]
pub struct Grid {
    pub spec: GridSpec,
    pub fft: FftNd,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.check()?;
        let fft = FftNd::new(spec.points, spec.axes());
        Ok(Self { spec, fft })
    }

    pub fn len(&self) -> usize {
        self.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    Coordinate,
    Momentum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    pub values: Vec<C64>,
    pub representation: Representation,
}

#[derive(Serialize, Deserialize)]
struct WaveFunctionSidecar {
    shape: Vec<usize>,
    representation: Representation,
    dtype: String,
    grid: GridSpec,
}

impl WaveFunction {
    pub fn coordinate(values: Vec<C64>) -> Self {
        Self {
            values,
            representation: Representation::Coordinate,
        }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    /// Transforms to the momentum representation (no-op if already there).
    pub fn to_momentum(&self, grid: &Grid) -> Self {
        let mut values = self.values.clone();
        if self.representation == Representation::Coordinate {
            grid.fft.forward(&mut values);
        }
        Self {
            values,
            representation: Representation::Momentum,
        }
    }

    pub fn to_coordinate(&self, grid: &Grid) -> Self {
        let mut values = self.values.clone();
        if self.representation == Representation::Momentum {
            grid.fft.inverse(&mut values);
        }
        Self {
            values,
            representation: Representation::Coordinate,
        }
    }

    /// Writes `<stem>.bin` (interleaved little-endian f64 re/im) and `<stem>.json`.
    pub fn export(&self, spec: &GridSpec, stem: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.values.len() * 16);
        for v in &self.values {
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
        std::fs::write(stem.with_extension("bin"), bytes)?;
        let sidecar = WaveFunctionSidecar {
            shape: vec![spec.points; spec.axes()],
            representation: self.representation,
            dtype: "complex128-le".into(),
            grid: spec.clone(),
        };
        std::fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn import(stem: &Path) -> Result<(Self, GridSpec)> {
        let sidecar: WaveFunctionSidecar =
            serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)?;
        let bytes = std::fs::read(stem.with_extension("bin"))?;
        if bytes.len() != sidecar.grid.len() * 16 {
            return Err(Error::Shape(format!(
                "binary holds {} bytes, grid needs {}",
                bytes.len(),
                sidecar.grid.len() * 16
            )));
        }
        let values = bytes
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        Ok((
            Self {
                values,
                representation: sidecar.representation,
            },
            sidecar.grid,
        ))
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Kinetic energy at every point of the momentum lattice.
pub fn kinetic_multiplier(spec: &GridSpec, masses: &[f64]) -> Result<Vec<f64>> {
    kinetic_multiplier_with(spec, masses, Dispersion::Pseudorelativistic)
}

pub fn kinetic_multiplier_with(spec: &GridSpec, masses: &[f64], law: Dispersion) -> Result<Vec<f64>> {
    spec.check()?;
    if masses.len() != spec.members.len() {
        return Err(Error::Shape(format!(
            "{} masses for {} members",
            masses.len(),
            spec.members.len()
        )));
    }
    let d = spec.dimension;
    let axes = spec.axes();
    let dk = spec.momentum_quantum();
    let total_mass: f64 = masses.iter().sum();
    let share: Vec<f64> = match spec.gauge {
        MomentumGauge::CenterOfMass if total_mass > 0.0 => masses.iter().map(|m| m / total_mass).collect(),
        MomentumGauge::CenterOfMass => vec![1.0 / masses.len() as f64; masses.len()],
        MomentumGauge::Reference => {
            let mut s = vec![0.0; masses.len()];
            s[0] = 1.0;
            s
        }
    };
    let n = spec.points;
    let mut idx = vec![0usize; axes];
    let mut out = Vec::with_capacity(spec.len());
    let mut k_ref = vec![0i64; d];
    for flat in 0..spec.len() {
        spec.decode(flat, &mut idx);
        let mut energy = 0.0;
        k_ref.iter_mut().for_each(|k| *k = 0);
        for (j, &mass) in masses.iter().enumerate().skip(1) {
            let mut p2 = 0.0;
            for c in 0..d {
                let i = idx[(j - 1) * d + c];
                let k = spec.wavenumber(i);
                k_ref[c] -= k;
                let p = dk * k as f64 + share[j] * spec.momentum[c];
                p2 += p * p;
            }
            energy += law.energy(p2, mass);
        }
        let mut p2 = 0.0;
        for c in 0..d {
            let k = match spec.gauge {
                // aliased into the zone so that all members are treated alike
                MomentumGauge::CenterOfMass => spec.wavenumber(k_ref[c].rem_euclid(n as i64) as usize),
                MomentumGauge::Reference => k_ref[c],
            };
            let p = dk * k as f64 + share[0] * spec.momentum[c];
            p2 += p * p;
        }
        energy += law.energy(p2, masses[0]);
        out.push(energy);
    }
    Ok(out)
}

/// Pair potential energy at every coordinate point. With a decomposition,
/// only pairs inside one cluster contribute.
pub fn potential_multiplier(
    sys: &ParticleSystem,
    spec: &GridSpec,
    decomposition: Option<&ClusterDecomposition>,
) -> Result<Vec<f64>> {
    spec.check()?;
    if spec.members.iter().any(|&m| m >= sys.len()) {
        return Err(Error::Shape(format!(
            "grid members {:?} exceed system of {} particles",
            spec.members,
            sys.len()
        )));
    }
    let d = spec.dimension;
    let s = spec.members.len();
    let mut pairs = Vec::new();
    for a in 0..s {
        for b in (a + 1)..s {
            let (i, j) = (spec.members[a], spec.members[b]);
            let v = sys.potential(i, j);
            if v.is_zero() || decomposition.is_some_and(|z| !z.contains_pair(i, j)) {
                continue;
            }
            pairs.push((a, b, *v));
        }
    }
    let mut out = vec![0.0; spec.len()];
    if pairs.is_empty() {
        return Ok(out);
    }
    let n = spec.points as i64;
    let h = spec.spacing();
    let mut idx = vec![0usize; spec.axes()];
    let coord = |idx: &[usize], local: usize, c: usize| -> i64 {
        if local == 0 {
            0
        } else {
            idx[(local - 1) * d + c] as i64
        }
    };
    for (flat, value) in out.iter_mut().enumerate() {
        spec.decode(flat, &mut idx);
        for &(a, b, ref v) in &pairs {
            let mut r2 = 0.0;
            for c in 0..d {
                let mut delta = (coord(&idx, a, c) - coord(&idx, b, c)).rem_euclid(n);
                if delta >= n / 2 {
                    delta -= n;
                }
                let x = delta as f64 * h;
                r2 += x * x;
            }
            *value += evaluate_potential(v, r2.sqrt());
        }
    }
    Ok(out)
}

/// Discrete fiber Hamiltonian `IDFT T DFT + V` on a grid.
#[derive(Debug)]
pub struct FiberHamiltonian {
    pub grid: Arc<Grid>,
    pub kinetic: Vec<f64>,
    pub potential: Vec<f64>,
}

impl FiberHamiltonian {
    pub fn new(grid: Arc<Grid>, kinetic: Vec<f64>, potential: Vec<f64>) -> Result<Self> {
        if kinetic.len() != grid.len() || potential.len() != grid.len() {
            return Err(Error::Shape(format!(
                "multipliers of length {}/{} on a grid of {} points",
                kinetic.len(),
                potential.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            kinetic,
            potential,
        })
    }

    /// Builds the operator of the subset `spec.members` of `sys`.
    pub fn for_subset(
        sys: &ParticleSystem,
        spec: GridSpec,
        decomposition: Option<&ClusterDecomposition>,
        law: Dispersion,
    ) -> Result<Self> {
        let masses: Vec<f64> = spec.members.iter().map(|&i| sys.mass(i)).collect();
        let kinetic = kinetic_multiplier_with(&spec, &masses, law)?;
        let potential = potential_multiplier(sys, &spec, decomposition)?;
        Self::new(Arc::new(Grid::new(spec)?), kinetic, potential)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spec(&self) -> &GridSpec {
        &self.grid.spec
    }

    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(x);
        self.grid.fft.forward(y);
        for (v, t) in y.iter_mut().zip(&self.kinetic) {
            *v *= *t;
        }
        self.grid.fft.inverse(y);
        for ((v, xi), pot) in y.iter_mut().zip(x).zip(&self.potential) {
            *v += xi * pot;
        }
    }

    /// Rayleigh quotient `<x, Hx> / <x, x>`.
    pub fn rayleigh_quotient(&self, x: &[C64]) -> f64 {
        let mut y = vec![C64::default(); x.len()];
        self.apply_into(x, &mut y);
        dot(x, &y).re / dot(x, x).re
    }

    /// Replaces `r` by `IDFT [DFT(r) / max(T(k) - shift, floor)]`.
    pub fn precondition_kinetic(&self, r: &mut [C64], shift: f64, floor: f64) {
        self.grid.fft.forward(r);
        for (v, t) in r.iter_mut().zip(&self.kinetic) {
            *v /= (t - shift).max(floor);
        }
        self.grid.fft.inverse(r);
    }
}

/// `IDFT(T . DFT(psi)) + V . psi`.
pub fn apply_hamiltonian(psi: &WaveFunction, hamiltonian: &FiberHamiltonian) -> Result<WaveFunction> {
    if psi.representation != Representation::Coordinate {
        return Err(Error::Shape("hamiltonian expects a coordinate-space wave function".into()));
    }
    if psi.values.len() != hamiltonian.len() {
        return Err(Error::Shape(format!(
            "wave function of length {} on a grid of {}",
            psi.values.len(),
            hamiltonian.len()
        )));
    }
    let mut out = vec![C64::default(); psi.values.len()];
    hamiltonian.apply_into(&psi.values, &mut out);
    Ok(WaveFunction::coordinate(out))
}

/// Exact action `T_g phi(x) = phi(g^{-1} x)` of a particle permutation on the grid.
#[derive(Clone, Debug)]
pub struct PermutationOperator {
    /// Permutation of the subset in local indices (`local[j]` is the image of member `j`).
    pub local: Vec<usize>,
    /// `(T_g phi)[i] = phi[source[i]]` in coordinate representation.
    pub source: Vec<u32>,
    /// `(T_g phi)[destination[i]] = phi[i]`; composes as the group does.
    pub destination: Vec<u32>,
    /// Source map in the momentum representation.
    pub momentum_source: Vec<u32>,
}

impl PermutationOperator {
    pub fn identity(spec: &GridSpec) -> Self {
        let id: Vec<u32> = (0..spec.len() as u32).collect();
        Self {
            local: (0..spec.members.len()).collect(),
            source: id.clone(),
            destination: id.clone(),
            momentum_source: id,
        }
    }

    /// Applies in coordinate representation.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (out, &s) in y.iter_mut().zip(&self.source) {
            *out = x[s as usize];
        }
    }

    pub fn apply_momentum(&self, x: &[C64], y: &mut [C64]) {
        for (out, &s) in y.iter_mut().zip(&self.momentum_source) {
            *out = x[s as usize];
        }
    }

    pub fn is_identity(&self) -> bool {
        self.local.iter().enumerate().all(|(i, &j)| i == j)
    }
}

/// Grid operator of a permutation `perm` of system particle indices.
///
/// `perm` must map the subset onto itself, fix all other particles and only
/// exchange particles of equal species (and hence equal mass).
pub fn permutation_operator(perm: &[usize], sys: &ParticleSystem, spec: &GridSpec) -> Result<PermutationOperator> {
    if perm.len() != sys.len() {
        return Err(Error::Domain(format!(
            "permutation of length {} for {} particles",
            perm.len(),
            sys.len()
        )));
    }
    let mut local = Vec::with_capacity(spec.members.len());
    for (i, &target) in perm.iter().enumerate() {
        let in_subset = spec.local_of(i).is_some();
        if !in_subset && target != i {
            return Err(Error::Domain(format!("permutation moves particle {i} outside the grid subset")));
        }
        if in_subset && sys.particles[i].species != sys.particles[target].species {
            return Err(Error::Domain(format!(
                "permutation maps particle {i} to {target} of a different species"
            )));
        }
    }
    for &m in &spec.members {
        let Some(l) = spec.local_of(perm[m]) else {
            return Err(Error::Domain(format!("permutation maps member {m} outside the subset")));
        };
        local.push(l);
    }
    let moves_reference = local[0] != 0;
    if moves_reference && spec.gauge == MomentumGauge::Reference && spec.momentum.iter().any(|&p| p != 0.0) {
        return Err(Error::Domain(
            "reference-gauge grids at nonzero momentum are not invariant under moves of the reference particle".into(),
        ));
    }
    Ok(build_index_maps(spec, local))
}

fn build_index_maps(spec: &GridSpec, local: Vec<usize>) -> PermutationOperator {
    let d = spec.dimension;
    let s = spec.members.len();
    let n = spec.points;
    let axes = spec.axes();
    let len = spec.len();
    let mut source = Vec::with_capacity(len);
    let mut momentum_source = Vec::with_capacity(len);
    let mut idx = vec![0usize; axes];
    let mut src = vec![0usize; axes];
    let at = |idx: &[usize], j: usize, c: usize| -> usize {
        if j == 0 {
            0
        } else {
            idx[(j - 1) * d + c]
        }
    };
    for flat in 0..len {
        spec.decode(flat, &mut idx);
        // x'_j = x_{g(j)} - x_{g(0)}
        for j in 1..s {
            for c in 0..d {
                src[(j - 1) * d + c] = (at(&idx, local[j], c) + n - at(&idx, local[0], c)) % n;
            }
        }
        source.push(spec.encode(&src) as u32);
        // k'_j = k_{g(j)} with k_0 = -sum_{j>0} k_j
        for j in 1..s {
            for c in 0..d {
                src[(j - 1) * d + c] = if local[j] == 0 {
                    let total: usize = (1..s).map(|l| idx[(l - 1) * d + c]).sum();
                    (n - total % n) % n
                } else {
                    idx[(local[j] - 1) * d + c]
                };
            }
        }
        momentum_source.push(spec.encode(&src) as u32);
    }
    let mut destination = vec![0u32; len];
    for (i, &s) in source.iter().enumerate() {
        destination[s as usize] = i as u32;
    }
    PermutationOperator {
        local,
        source,
        destination,
        momentum_source,
    }
}

/// `sum_g c_g T_g` on a grid: an isotypic projector or a sum of them.
#[derive(Clone, Debug)]
pub struct SymmetryProjector {
    pub terms: Vec<(PermutationOperator, f64)>,
}

impl SymmetryProjector {
    pub fn identity(spec: &GridSpec) -> Self {
        Self {
            terms: vec![(PermutationOperator::identity(spec), 1.0)],
        }
    }

    /// Projector onto type `beta` of the identical-particle group of `spec.members`.
    pub fn for_type(sys: &ParticleSystem, spec: &GridSpec, beta: &SymmetryType) -> Result<Self> {
        Self::for_types(sys, spec, std::slice::from_ref(beta))
    }

    /// Sum of the projectors of several distinct types of the subset group.
    pub fn for_types(sys: &ParticleSystem, spec: &GridSpec, types: &[SymmetryType]) -> Result<Self> {
        let (species, members) = species_members_of(sys, &spec.members);
        let group = SpeciesGroup::new(species, members.iter().map(Vec::len).collect())?;
        let mut coeffs: Vec<(GroupElement, f64)> = Vec::new();
        for (t, beta) in types.iter().enumerate() {
            if types[..t].contains(beta) {
                return Err(Error::Domain(format!("type {beta} listed twice")));
            }
            for (g, c) in projector_coefficients(beta, &group)? {
                let c = *c.numer() as f64 / *c.denom() as f64;
                match coeffs.iter_mut().find(|(h, _)| *h == g) {
                    Some(entry) => entry.1 += c,
                    None => coeffs.push((g, c)),
                }
            }
        }
        let terms = coeffs
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(g, c)| {
                let perm = g.to_particle_permutation(&members, sys.len());
                permutation_operator(&perm, sys, spec).map(|op| (op, c))
            })
            .collect::<Result<_>>()?;
        Ok(Self { terms })
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::default());
        for (op, c) in &self.terms {
            for (out, &s) in y.iter_mut().zip(&op.source) {
                *out += x[s as usize] * *c;
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_identity() && self.terms[0].1 == 1.0
    }
}

/// `sum_g c_g T_g psi` for explicit coefficients of the identical-particle group of the subset.
pub fn apply_projector(
    coeffs: &[(GroupElement, f64)],
    psi: &WaveFunction,
    sys: &ParticleSystem,
    spec: &GridSpec,
) -> Result<WaveFunction> {
    let (_, members) = species_members_of(sys, &spec.members);
    let mut out = vec![C64::default(); psi.values.len()];
    let mut tmp = vec![C64::default(); psi.values.len()];
    for (g, c) in coeffs {
        let op = permutation_operator(&g.to_particle_permutation(&members, sys.len()), sys, spec)?;
        match psi.representation {
            Representation::Coordinate => op.apply(&psi.values, &mut tmp),
            Representation::Momentum => op.apply_momentum(&psi.values, &mut tmp),
        }
        for (o, t) in out.iter_mut().zip(&tmp) {
            *o += t * *c;
        }
    }
    Ok(WaveFunction {
        values: out,
        representation: psi.representation,
    })
}
