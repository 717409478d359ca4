//! Particle systems: masses, species, pair potentials, total momentum and
//! the two-cluster decompositions of the particle set.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symgroup::{SpeciesGroup, SpeciesSplit};

/// Attractive softened-Coulomb couplings stronger than this are flagged.
///
/// `2/pi` is the critical coupling of `|p| - g/|x|` in three dimensions.
pub const DEFAULT_STABILITY_GUARD: f64 = std::f64::consts::FRAC_2_PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    SoftenedCoulomb,
    Yukawa,
    GaussianWell,
    Zero,
}

/// Parametric pair potential. `range` is used by yukawa and gaussian-well,
/// `softening` by softened-coulomb and yukawa.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    #[serde(default)]
    pub strength: f64,
    #[serde(default = "one")]
    pub range: f64,
    #[serde(default = "one")]
    pub softening: f64,
}

fn one() -> f64 {
    1.0
}

impl PotentialSpec {
    pub const ZERO: PotentialSpec = PotentialSpec {
        kind: PotentialKind::Zero,
        strength: 0.0,
        range: 1.0,
        softening: 1.0,
    };

    pub fn gaussian_well(strength: f64, range: f64) -> Self {
        Self {
            kind: PotentialKind::GaussianWell,
            strength,
            range,
            softening: 1.0,
        }
    }

    pub fn softened_coulomb(strength: f64, softening: f64) -> Self {
        Self {
            kind: PotentialKind::SoftenedCoulomb,
            strength,
            range: 1.0,
            softening,
        }
    }

    pub fn yukawa(strength: f64, range: f64, softening: f64) -> Self {
        Self {
            kind: PotentialKind::Yukawa,
            strength,
            range,
            softening,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.kind == PotentialKind::Zero || self.strength == 0.0
    }

    pub fn evaluate(&self, r: f64) -> f64 {
        evaluate_potential(self, r)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            strength: self.strength * factor,
            ..*self
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        if !self.strength.is_finite() {
            return Err(format!("non-finite strength in {self:?}"));
        }
        match self.kind {
            PotentialKind::SoftenedCoulomb if !(self.softening > 0.0) => {
                Err(format!("softening must be positive in {self:?}"))
            }
            PotentialKind::Yukawa if !(self.softening > 0.0 && self.range > 0.0) => {
                Err(format!("range and softening must be positive in {self:?}"))
            }
            PotentialKind::GaussianWell if !(self.range > 0.0) => {
                Err(format!("range must be positive in {self:?}"))
            }
            _ => Ok(()),
        }
    }
}

/// Value of a pair potential at separation `r >= 0`.
pub fn evaluate_potential(spec: &PotentialSpec, r: f64) -> f64 {
    match spec.kind {
        PotentialKind::Zero => 0.0,
        PotentialKind::SoftenedCoulomb => spec.strength / (r * r + spec.softening * spec.softening).sqrt(),
        PotentialKind::Yukawa => {
            spec.strength * (-r / spec.range).exp() / (r * r + spec.softening * spec.softening).sqrt()
        }
        PotentialKind::GaussianWell => spec.strength * (-(r * r) / (spec.range * spec.range)).exp(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub mass: f64,
    pub species: u32,
}

/// The interacting system `{0, ..., n}` at fixed total momentum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleSystem {
    pub particles: Vec<Particle>,
    /// Packed upper triangle: pair `(i, j)`, `i < j`.
    pub pair_potentials: Vec<PotentialSpec>,
    pub total_momentum: Vec<f64>,
    pub dimension: usize,
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

impl ParticleSystem {
    /// Builds a system whose pair table is filled from per-species-pair blocks.
    /// Pairs without a block do not interact.
    pub fn from_species_potentials(
        particles: Vec<Particle>,
        blocks: &[((u32, u32), PotentialSpec)],
        total_momentum: Vec<f64>,
        dimension: usize,
    ) -> Result<Self> {
        let mut lookup: BTreeMap<(u32, u32), PotentialSpec> = BTreeMap::new();
        for &((a, b), spec) in blocks {
            let key = (a.min(b), a.max(b));
            if lookup.insert(key, spec).is_some() {
                return Err(Error::Config(format!(
                    "duplicate potential block for species pair {key:?}"
                )));
            }
        }
        let n = particles.len();
        let mut table = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (particles[i].species, particles[j].species);
                table.push(
                    lookup
                        .get(&(a.min(b), a.max(b)))
                        .copied()
                        .unwrap_or(PotentialSpec::ZERO),
                );
            }
        }
        Ok(Self {
            particles,
            pair_potentials: table,
            total_momentum,
            dimension,
        })
    }

    /// `count` identical particles of mass `mass` with one pair potential.
    pub fn identical(count: usize, mass: f64, potential: PotentialSpec, dimension: usize) -> Self {
        let particles = vec![Particle { mass, species: 0 }; count];
        Self::from_species_potentials(particles, &[((0, 0), potential)], vec![0.0; dimension], dimension)
            .expect("single block")
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.particles[i].mass
    }

    pub fn total_mass(&self) -> f64 {
        self.particles.iter().map(|p| p.mass).sum()
    }

    pub fn max_mass(&self) -> f64 {
        self.particles.iter().map(|p| p.mass).fold(0.0, f64::max)
    }

    pub fn potential(&self, i: usize, j: usize) -> &PotentialSpec {
        assert_ne!(i, j, "no self interaction");
        &self.pair_potentials[pair_index(self.len(), i, j)]
    }

    pub fn is_free(&self) -> bool {
        self.pair_potentials.iter().all(PotentialSpec::is_zero)
    }

    /// True when no pair inside `members` interacts.
    pub fn subset_is_free(&self, members: &[usize]) -> bool {
        members.iter().enumerate().all(|(a, &i)| {
            members[a + 1..]
                .iter()
                .all(|&j| self.potential(i, j).is_zero())
        })
    }

    /// Distinct species labels in ascending order with their particle lists.
    pub fn species_members(&self) -> (Vec<u32>, Vec<Vec<usize>>) {
        species_members_of(self, &(0..self.len()).collect::<Vec<_>>())
    }

    /// The permutation group of identical particles.
    pub fn species_group(&self) -> Result<SpeciesGroup> {
        let (species, members) = self.species_members();
        SpeciesGroup::new(species, members.iter().map(Vec::len).collect())
    }

    /// Restriction to `members` (relabelled `0..k` in the given order) at total momentum `momentum`.
    pub fn subsystem(&self, members: &[usize], momentum: Vec<f64>) -> Self {
        let particles: Vec<Particle> = members.iter().map(|&i| self.particles[i]).collect();
        let mut table = Vec::new();
        for a in 0..members.len() {
            for b in (a + 1)..members.len() {
                table.push(*self.potential(members[a], members[b]));
            }
        }
        Self {
            particles,
            pair_potentials: table,
            total_momentum: momentum,
            dimension: self.dimension,
        }
    }

    pub fn with_scaled_masses(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.particles {
            p.mass *= factor;
        }
        out
    }

    /// Same system with every pair potential multiplied by `factor`.
    pub fn with_scaled_potentials(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.pair_potentials {
            *v = v.scaled(factor);
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        SystemConfig::from_toml(&text)?.build()
    }
}

pub(crate) fn species_members_of(sys: &ParticleSystem, members: &[usize]) -> (Vec<u32>, Vec<Vec<usize>>) {
    let mut by_species: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for &i in members {
        by_species.entry(sys.particles[i].species).or_default().push(i);
    }
    by_species.into_iter().unzip()
}

/// Structural check of a system plus stability warnings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub warnings: Vec<String>,
    pub interacting_pairs: Vec<(usize, usize)>,
}

/// Checks the structural invariants; the first violated rule rejects the system.
pub fn validate(sys: &ParticleSystem) -> Result<ValidationReport> {
    validate_with_guard(sys, DEFAULT_STABILITY_GUARD)
}

pub fn validate_with_guard(sys: &ParticleSystem, stability_guard: f64) -> Result<ValidationReport> {
    let reject = |msg: String| Err(Error::InvalidSystem(msg));
    let n = sys.len();
    if n < 2 {
        return reject(format!("need at least 2 particles, got {n}"));
    }
    if !(1..=3).contains(&sys.dimension) {
        return reject(format!("dimension must be 1, 2 or 3, got {}", sys.dimension));
    }
    if sys.total_momentum.len() != sys.dimension {
        return reject(format!(
            "total momentum has {} components, dimension is {}",
            sys.total_momentum.len(),
            sys.dimension
        ));
    }
    if sys.total_momentum.iter().any(|q| !q.is_finite()) {
        return reject("total momentum is not finite".into());
    }
    for (i, p) in sys.particles.iter().enumerate() {
        if !(p.mass > 0.0 && p.mass.is_finite()) {
            return reject(format!("particle {i} has non-positive mass {}", p.mass));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (&sys.particles[i], &sys.particles[j]);
            if a.species == b.species && a.mass != b.mass {
                return reject(format!(
                    "identical particles {i} and {j} (species {}) have unequal masses {} and {}",
                    a.species, a.mass, b.mass
                ));
            }
        }
    }
    if sys.pair_potentials.len() != n * (n - 1) / 2 {
        return reject(format!(
            "pair table has {} entries, expected {}",
            sys.pair_potentials.len(),
            n * (n - 1) / 2
        ));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if let Err(msg) = sys.potential(i, j).check() {
                return reject(format!("pair ({i},{j}): {msg}"));
            }
        }
    }
    // permutation invariance: identical i, j see every third particle alike
    for i in 0..n {
        for j in (i + 1)..n {
            if sys.particles[i].species != sys.particles[j].species {
                continue;
            }
            for k in (0..n).filter(|&k| k != i && k != j) {
                if sys.potential(i, k) != sys.potential(j, k) {
                    return reject(format!(
                        "potential not invariant under exchange of identical particles {i} and {j}: V({i},{k}) != V({j},{k})"
                    ));
                }
            }
        }
    }

    let mut report = ValidationReport::default();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = sys.potential(i, j);
            if v.is_zero() {
                continue;
            }
            report.interacting_pairs.push((i, j));
            let coulomb_like = matches!(v.kind, PotentialKind::SoftenedCoulomb | PotentialKind::Yukawa);
            if coulomb_like && v.strength < -stability_guard {
                report.warnings.push(format!(
                    "pair ({i},{j}): attractive coupling {} exceeds stability guard {stability_guard:.4}; the unsoftened operator may be unbounded below",
                    -v.strength
                ));
            }
        }
    }
    Ok(report)
}

/// A bipartition `(D1, D2)` of the particles; `D1` holds particle 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClusterDecomposition {
    pub d1: Vec<usize>,
    pub d2: Vec<usize>,
    /// Per-species particle counts in `(D1, D2)`, species ascending.
    pub signature: (Vec<usize>, Vec<usize>),
}

impl ClusterDecomposition {
    pub fn new(sys: &ParticleSystem, mut d1: Vec<usize>, mut d2: Vec<usize>) -> Result<Self> {
        d1.sort_unstable();
        d2.sort_unstable();
        let mut all: Vec<usize> = d1.iter().chain(&d2).copied().collect();
        all.sort_unstable();
        if d1.is_empty() || d2.is_empty() || all != (0..sys.len()).collect::<Vec<_>>() {
            return Err(Error::Shape(format!(
                "{d1:?} | {d2:?} is not a bipartition of 0..{}",
                sys.len()
            )));
        }
        if d2[0] < d1[0] {
            std::mem::swap(&mut d1, &mut d2);
        }
        let (species, _) = sys.species_members();
        let count = |set: &[usize]| -> Vec<usize> {
            species
                .iter()
                .map(|&s| set.iter().filter(|&&i| sys.particles[i].species == s).count())
                .collect()
        };
        let signature = (count(&d1), count(&d2));
        Ok(Self { d1, d2, signature })
    }

    pub fn masses(&self, sys: &ParticleSystem) -> (f64, f64) {
        let m = |set: &[usize]| set.iter().map(|&i| sys.mass(i)).sum();
        (m(&self.d1), m(&self.d2))
    }

    pub fn species_split(&self, sys: &ParticleSystem) -> SpeciesSplit {
        SpeciesSplit {
            species: sys.species_members().0,
            left: self.signature.0.clone(),
            right: self.signature.1.clone(),
        }
    }

    /// Orbit key under identical-particle permutations.
    pub fn orbit_key(&self) -> (Vec<usize>, Vec<usize>) {
        let (a, b) = self.signature.clone();
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    pub fn contains_pair(&self, i: usize, j: usize) -> bool {
        let same = |set: &[usize]| set.contains(&i) && set.contains(&j);
        same(&self.d1) || same(&self.d2)
    }
}

impl fmt::Display for ClusterDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |set: &[usize]| set.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{{{}}}|{{{}}}", show(&self.d1), show(&self.d2))
    }
}

/// All `2^n - 1` bipartitions of `n + 1` particles, ordered by the bitmask of `D2`.
pub fn enumerate_decompositions(sys: &ParticleSystem) -> Vec<ClusterDecomposition> {
    let n = sys.len();
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << (n - 1)) {
        let d2: Vec<usize> = (1..n).filter(|&i| mask & (1 << (i - 1)) != 0).collect();
        let d1: Vec<usize> = (0..n).filter(|i| !d2.contains(i)).collect();
        out.push(ClusterDecomposition::new(sys, d1, d2).expect("bipartition by construction"));
    }
    out
}

/// One representative per orbit of decompositions under identical-particle
/// permutations (first in enumeration order).
pub fn decomposition_orbits(sys: &ParticleSystem) -> Vec<ClusterDecomposition> {
    let mut seen = std::collections::HashSet::new();
    enumerate_decompositions(sys)
        .into_iter()
        .filter(|z| seen.insert(z.orbit_key()))
        .collect()
}

/// On-disk system description (TOML).
///
/// ```toml
/// dimension = 1
/// total_momentum = [0.0]
///
/// [[particles]]
/// mass = 1.0
/// species = 0
/// count = 3
///
/// [[potentials]]
/// species = [0, 0]
/// kind = "gaussian-well"
/// strength = -2.0
/// range = 1.0
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub dimension: usize,
    #[serde(default)]
    pub total_momentum: Option<Vec<f64>>,
    pub particles: Vec<ParticleEntry>,
    #[serde(default)]
    pub potentials: Vec<PotentialEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleEntry {
    pub mass: f64,
    pub species: u32,
    #[serde(default = "one_usize")]
    pub count: usize,
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialEntry {
    pub species: [u32; 2],
    #[serde(flatten)]
    pub spec: PotentialSpec,
}

impl SystemConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("system file: {e}")))
    }

    pub fn build(&self) -> Result<ParticleSystem> {
        let particles: Vec<Particle> = self
            .particles
            .iter()
            .flat_map(|e| {
                std::iter::repeat_n(
                    Particle {
                        mass: e.mass,
                        species: e.species,
                    },
                    e.count,
                )
            })
            .collect();
        let blocks: Vec<((u32, u32), PotentialSpec)> = self
            .potentials
            .iter()
            .map(|p| ((p.species[0], p.species[1]), p.spec))
            .collect();
        let momentum = self
            .total_momentum
            .clone()
            .unwrap_or_else(|| vec![0.0; self.dimension]);
        ParticleSystem::from_species_potentials(particles, &blocks, momentum, self.dimension)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symgroup::permutations;

    fn three_bosons() -> ParticleSystem {
        ParticleSystem::identical(3, 1.0, PotentialSpec::gaussian_well(-2.0, 1.0), 1)
    }

    #[test]
    fn potential_values() {
        assert_eq!(evaluate_potential(&PotentialSpec::ZERO, 3.7), 0.0);
        assert_eq!(evaluate_potential(&PotentialSpec::gaussian_well(-2.0, 1.0), 0.0), -2.0);
        assert_eq!(evaluate_potential(&PotentialSpec::softened_coulomb(-1.0, 1.0), 0.0), -1.0);
        let y = PotentialSpec::yukawa(-1.0, 2.0, 1.0);
        assert!((y.evaluate(1.0) - (-(-0.5f64).exp() / 2f64.sqrt())).abs() < 1e-15);
        for spec in [
            PotentialSpec::gaussian_well(-2.0, 1.0),
            PotentialSpec::softened_coulomb(-1.0, 0.5),
            y,
        ] {
            assert!(spec.evaluate(1e6).abs() < 1e-5);
        }
    }

    #[test]
    fn decomposition_counts() {
        for (n, expected) in [(2usize, 1usize), (3, 3), (4, 7), (5, 15)] {
            let sys = ParticleSystem::identical(n, 1.0, PotentialSpec::ZERO, 1);
            let all = enumerate_decompositions(&sys);
            assert_eq!(all.len(), expected);
            assert!(all.iter().all(|z| z.d1.contains(&0)));
        }
        let four = ParticleSystem::identical(4, 1.0, PotentialSpec::ZERO, 1);
        let reps = decomposition_orbits(&four);
        let sizes: Vec<(usize, usize)> = reps.iter().map(|z| (z.d1.len(), z.d2.len())).collect();
        assert_eq!(reps.len(), 2);
        assert!(sizes.contains(&(3, 1)) && sizes.contains(&(2, 2)));
    }

    #[test]
    fn orbits_are_closed_under_permutations() {
        let particles = vec![
            Particle { mass: 1.0, species: 0 },
            Particle { mass: 2.0, species: 1 },
            Particle { mass: 1.0, species: 0 },
            Particle { mass: 2.0, species: 1 },
        ];
        let sys = ParticleSystem::from_species_potentials(particles, &[], vec![0.0], 1).unwrap();
        let all = enumerate_decompositions(&sys);
        let reps = decomposition_orbits(&sys);
        let (_, members) = sys.species_members();
        for z in &all {
            for p0 in permutations(2) {
                for p1 in permutations(2) {
                    let mut g: Vec<usize> = (0..4).collect();
                    for (perm, list) in [(&p0, &members[0]), (&p1, &members[1])] {
                        for (i, &j) in perm.iter().enumerate() {
                            g[list[i]] = list[j];
                        }
                    }
                    let img = ClusterDecomposition::new(
                        &sys,
                        z.d1.iter().map(|&i| g[i]).collect(),
                        z.d2.iter().map(|&i| g[i]).collect(),
                    )
                    .unwrap();
                    assert_eq!(img.orbit_key(), z.orbit_key());
                }
            }
            assert!(reps.iter().any(|r| r.orbit_key() == z.orbit_key()));
        }
    }

    #[test]
    fn validation_rules() {
        assert!(validate(&three_bosons()).unwrap().warnings.is_empty());

        let mut bad = three_bosons();
        bad.particles[1].mass = 2.0;
        assert!(matches!(validate(&bad), Err(Error::InvalidSystem(_))));

        let mut broken = three_bosons();
        broken.pair_potentials[0] = PotentialSpec::gaussian_well(-1.0, 1.0);
        assert!(validate(&broken).is_err());

        let strong = ParticleSystem::identical(2, 1.0, PotentialSpec::softened_coulomb(-5.0, 0.5), 3);
        let report = validate(&strong).unwrap();
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.interacting_pairs, vec![(0, 1)]);

        let mut one = three_bosons();
        one.particles.truncate(1);
        one.pair_potentials.clear();
        assert!(validate(&one).is_err());
    }

    #[test]
    fn table_is_permutation_invariant() {
        let particles = vec![
            Particle { mass: 1.0, species: 0 },
            Particle { mass: 3.0, species: 1 },
            Particle { mass: 1.0, species: 0 },
        ];
        let sys = ParticleSystem::from_species_potentials(
            particles,
            &[
                ((0, 1), PotentialSpec::softened_coulomb(-1.0, 1.0)),
                ((0, 0), PotentialSpec::softened_coulomb(1.0, 1.0)),
            ],
            vec![0.0],
            1,
        )
        .unwrap();
        validate(&sys).unwrap();
        // swap of the identical particles 0 and 2
        let g = [2, 1, 0];
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(sys.potential(g[i], g[j]), sys.potential(i, j));
                }
            }
        }
    }

    #[test]
    fn config_round_trip() {
        let text = r#"
dimension = 1
total_momentum = [0.5]

[[particles]]
mass = 1.0
species = 0
count = 3

[[potentials]]
species = [0, 0]
kind = "gaussian-well"
strength = -2.0
range = 1.0
"#;
        let sys = SystemConfig::from_toml(text).unwrap().build().unwrap();
        assert_eq!(sys.len(), 3);
        assert_eq!(sys.total_momentum, vec![0.5]);
        assert_eq!(*sys.potential(0, 2), PotentialSpec::gaussian_well(-2.0, 1.0));
        let json = serde_json::to_string(&sys).unwrap();
        let back: ParticleSystem = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sys);
        assert!(SystemConfig::from_toml("dimension = \"x\"").is_err());
    }

    #[test]
    fn subsystem_restricts_pairs() {
        let particles = vec![
            Particle { mass: 1.0, species: 0 },
            Particle { mass: 1.0, species: 0 },
            Particle { mass: 4.0, species: 1 },
        ];
        let sys = ParticleSystem::from_species_potentials(
            particles,
            &[((0, 1), PotentialSpec::gaussian_well(-1.0, 1.0))],
            vec![0.0],
            1,
        )
        .unwrap();
        let sub = sys.subsystem(&[1, 2], vec![0.3]);
        assert_eq!(sub.len(), 2);
        assert_eq!(*sub.potential(0, 1), PotentialSpec::gaussian_well(-1.0, 1.0));
        assert!(sys.subset_is_free(&[0, 1]));
        assert!(!sys.subset_is_free(&[0, 2]));
    }
}
