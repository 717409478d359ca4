//! Integer representation theory of species-wise permutation groups.
//!
//! The group of a particle system permutes identical particles only, so it is
//! a direct product `S_{n_1} x S_{n_2} x ...` with one symmetric-group factor
//! per species. Irreducible types are tuples of partitions, characters are
//! products of per-species Murnaghan-Nakayama values, and restriction to a
//! cluster subgroup is computed from character inner products.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{OnceLock, RwLock};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest symmetric-group degree handled by default.
pub const DEFAULT_MAX_N: usize = 12;
/// Default cap on `|S|` for routines that enumerate elements or classes (10!).
pub const DEFAULT_MAX_ORDER: u64 = 3_628_800;

/// Weakly decreasing list of positive integers.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::Shape(format!("partition {parts:?} has a zero part")));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Shape(format!(
                "partition {parts:?} is not weakly decreasing"
            )));
        }
        Ok(Self { parts })
    }

    /// Sorts the parts and drops zeros.
    pub fn from_unsorted(mut parts: Vec<usize>) -> Self {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self { parts }
    }

    /// The one-row diagram `[n]`.
    pub fn row(n: usize) -> Self {
        if n == 0 {
            Self { parts: vec![] }
        } else {
            Self { parts: vec![n] }
        }
    }

    /// The one-column diagram `[1^n]`.
    pub fn column(n: usize) -> Self {
        Self { parts: vec![1; n] }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn conjugate(&self) -> Self {
        let width = self.parts.first().copied().unwrap_or(0);
        let parts = (1..=width)
            .map(|c| self.parts.iter().filter(|&&p| p >= c).count())
            .collect();
        Self { parts }
    }

    /// Dimension of the irreducible representation via the hook-length formula.
    pub fn hook_length_dimension(&self) -> u128 {
        let conj = self.conjugate();
        let mut hooks: u128 = 1;
        for (i, &row) in self.parts.iter().enumerate() {
            for j in 0..row {
                let arm = row - j - 1;
                let leg = conj.parts[j] - i - 1;
                hooks *= (arm + leg + 1) as u128;
            }
        }
        factorial(self.n()) / hooks
    }

    /// Centralizer order `z_rho = prod_i i^{m_i} m_i!` of the cycle type.
    pub fn centralizer_order(&self) -> u128 {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &p in &self.parts {
            *counts.entry(p).or_default() += 1;
        }
        counts
            .into_iter()
            .map(|(len, mult)| (len as u128).pow(mult as u32) * factorial(mult))
            .product()
    }

    /// Size of the conjugacy class of `S_n` with this cycle type.
    pub fn class_size(&self) -> u128 {
        factorial(self.n()) / self.centralizer_order()
    }

    pub fn parse(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches(['[', '(']).trim_end_matches([']', ')']);
        if inner.trim().is_empty() {
            return Ok(Self { parts: vec![] });
        }
        let mut parts = Vec::new();
        for tok in inner.split(',') {
            let tok = tok.trim();
            // `1^3` shorthand
            if let Some((base, exp)) = tok.split_once('^') {
                let b: usize = parse_usize(base)?;
                let e: usize = parse_usize(exp)?;
                parts.extend(std::iter::repeat_n(b, e));
            } else {
                parts.push(parse_usize(tok)?);
            }
        }
        Self::new(parts)
    }

    fn label_with(&self, open: char, close: char) -> String {
        let body: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        format!("{open}{}{close}", body.join(","))
    }
}

fn parse_usize(tok: &str) -> Result<usize> {
    tok.trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse partition entry {tok:?}")))
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;
    fn try_from(parts: Vec<usize>) -> Result<Self> {
        Self::new(parts)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.parts
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label_with('[', ']'))
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// All partitions of `n` in reverse-lexicographic order.
pub fn partitions_of(n: usize) -> Result<Vec<Partition>> {
    partitions_of_capped(n, DEFAULT_MAX_N)
}

pub fn partitions_of_capped(n: usize, max_n: usize) -> Result<Vec<Partition>> {
    if n == 0 || n > max_n {
        return Err(Error::Size {
            what: "partition size",
            value: n as u64,
            min: 1,
            max: max_n as u64,
        });
    }
    let mut out = Vec::new();
    let mut current = Vec::new();
    fill_partitions(n, n, &mut current, &mut out);
    Ok(out)
}

fn fill_partitions(rest: usize, max_part: usize, current: &mut Vec<usize>, out: &mut Vec<Partition>) {
    if rest == 0 {
        out.push(Partition {
            parts: current.clone(),
        });
        return;
    }
    for p in (1..=max_part.min(rest)).rev() {
        current.push(p);
        fill_partitions(rest - p, p, current, out);
        current.pop();
    }
}

type CharKey = (Partition, Partition);

fn character_cache() -> &'static RwLock<HashMap<CharKey, i64>> {
    static CACHE: OnceLock<RwLock<HashMap<CharKey, i64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Irreducible character `chi^alpha(rho)` of `S_n` by the Murnaghan-Nakayama rule.
pub fn character(alpha: &Partition, rho: &Partition) -> Result<i64> {
    if alpha.n() != rho.n() {
        return Err(Error::Shape(format!(
            "character of {alpha} (n={}) at class {rho} (n={})",
            alpha.n(),
            rho.n()
        )));
    }
    Ok(mn_character(alpha, rho.parts()))
}

fn mn_character(alpha: &Partition, rho: &[usize]) -> i64 {
    if rho.is_empty() {
        return 1;
    }
    let key = (alpha.clone(), Partition { parts: rho.to_vec() });
    if let Some(&v) = character_cache().read().unwrap().get(&key) {
        return v;
    }
    let hook = rho[0];
    let rest = &rho[1..];
    let len = alpha.len();
    let beta: Vec<usize> = alpha
        .parts
        .iter()
        .enumerate()
        .map(|(i, &p)| p + len - 1 - i)
        .collect();
    let mut total = 0i64;
    for (idx, &b) in beta.iter().enumerate() {
        if b < hook {
            continue;
        }
        let target = b - hook;
        if beta.contains(&target) {
            continue;
        }
        let height = beta.iter().filter(|&&c| c > target && c < b).count();
        let mut moved = beta.clone();
        moved[idx] = target;
        moved.sort_unstable_by(|a, b| b.cmp(a));
        let parts: Vec<usize> = moved
            .iter()
            .enumerate()
            .map(|(i, &c)| c - (len - 1 - i))
            .filter(|&p| p > 0)
            .collect();
        let sign = if height % 2 == 0 { 1 } else { -1 };
        total += sign * mn_character(&Partition { parts }, rest);
    }
    character_cache().write().unwrap().insert(key, total);
    total
}

/// Cycle type of a permutation in one-line notation.
pub fn cycle_type(perm: &[usize]) -> Partition {
    let mut seen = vec![false; perm.len()];
    let mut lengths = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        lengths.push(len);
    }
    Partition::from_unsorted(lengths)
}

/// All permutations of `0..n` in lexicographic order (identity first).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = vec![current.clone()];
    loop {
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
    out
}

/// Direct product of symmetric groups, one per species.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpeciesGroup {
    /// Species labels, ascending.
    pub species: Vec<u32>,
    /// Number of identical particles of each species (all >= 1).
    pub sizes: Vec<usize>,
}

impl SpeciesGroup {
    pub fn new(species: Vec<u32>, sizes: Vec<usize>) -> Result<Self> {
        if species.len() != sizes.len() {
            return Err(Error::Shape("species and sizes differ in length".into()));
        }
        if sizes.iter().any(|&s| s == 0 || s > DEFAULT_MAX_N) {
            return Err(Error::Size {
                what: "species count",
                value: sizes.iter().copied().max().unwrap_or(0) as u64,
                min: 1,
                max: DEFAULT_MAX_N as u64,
            });
        }
        if species.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Shape("species labels must be strictly ascending".into()));
        }
        Ok(Self { species, sizes })
    }

    /// Single symmetric group `S_n` (species label 0).
    pub fn symmetric(n: usize) -> Result<Self> {
        Self::new(vec![0], vec![n])
    }

    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        Self::new((0..sizes.len() as u32).collect(), sizes.to_vec())
    }

    pub fn order(&self) -> u128 {
        self.sizes.iter().map(|&n| factorial(n)).product()
    }

    fn check_order(&self, cap: u64) -> Result<()> {
        let order = self.order();
        if order > cap as u128 {
            return Err(Error::Size {
                what: "group order",
                value: order.min(u64::MAX as u128) as u64,
                min: 1,
                max: cap,
            });
        }
        Ok(())
    }

    /// All irreducible types, reverse-lexicographic per species.
    pub fn types(&self) -> Result<Vec<SymmetryType>> {
        let per: Vec<Vec<Partition>> = self
            .sizes
            .iter()
            .map(|&n| partitions_of(n))
            .collect::<Result<_>>()?;
        Ok(cartesian(&per)
            .into_iter()
            .map(|components| SymmetryType { components })
            .collect())
    }

    /// Group elements as tuples of per-species permutations.
    pub fn elements(&self) -> Result<Vec<GroupElement>> {
        self.check_order(DEFAULT_MAX_ORDER)?;
        let per: Vec<Vec<Vec<usize>>> = self.sizes.iter().map(|&n| permutations(n)).collect();
        Ok(cartesian(&per)
            .into_iter()
            .map(|perms| GroupElement { perms })
            .collect())
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            perms: self.sizes.iter().map(|&n| (0..n).collect()).collect(),
        }
    }

    pub fn contains_type(&self, alpha: &SymmetryType) -> bool {
        alpha.components.len() == self.sizes.len()
            && alpha
                .components
                .iter()
                .zip(&self.sizes)
                .all(|(p, &n)| p.n() == n)
    }

    pub fn check_type(&self, alpha: &SymmetryType) -> Result<()> {
        if self.contains_type(alpha) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "type {alpha} is not a type of the group with species sizes {:?}",
                self.sizes
            )))
        }
    }
}

fn cartesian<T: Clone>(factors: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for factor in factors {
        let mut next = Vec::with_capacity(out.len() * factor.len());
        for prefix in &out {
            for item in factor {
                let mut v = prefix.clone();
                v.push(item.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Element of a [`SpeciesGroup`]: one permutation per species in one-line notation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub perms: Vec<Vec<usize>>,
}

impl GroupElement {
    pub fn is_identity(&self) -> bool {
        self.perms
            .iter()
            .all(|p| p.iter().enumerate().all(|(i, &j)| i == j))
    }

    /// Product `self * other`, acting as `other` first.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let perms = self
            .perms
            .iter()
            .zip(&other.perms)
            .map(|(s, t)| t.iter().map(|&i| s[i]).collect())
            .collect();
        GroupElement { perms }
    }

    pub fn inverse(&self) -> GroupElement {
        let perms = self
            .perms
            .iter()
            .map(|p| {
                let mut inv = vec![0; p.len()];
                for (i, &j) in p.iter().enumerate() {
                    inv[j] = i;
                }
                inv
            })
            .collect();
        GroupElement { perms }
    }

    pub fn class(&self) -> Vec<Partition> {
        self.perms.iter().map(|p| cycle_type(p)).collect()
    }

    /// Permutation of particle indices `0..n_total`, where `members[k]` lists
    /// the particles of species `k` in the order the element's `k`-th
    /// permutation refers to. Particles not listed are fixed.
    pub fn to_particle_permutation(&self, members: &[Vec<usize>], n_total: usize) -> Vec<usize> {
        let mut global: Vec<usize> = (0..n_total).collect();
        for (perm, list) in self.perms.iter().zip(members) {
            for (i, &j) in perm.iter().enumerate() {
                global[list[i]] = list[j];
            }
        }
        global
    }
}

/// Tuple of partitions naming an irreducible type of a [`SpeciesGroup`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SymmetryType {
    pub components: Vec<Partition>,
}

impl SymmetryType {
    pub fn new(components: Vec<Partition>) -> Self {
        Self { components }
    }

    /// Parses labels such as `[2,1]`, `[2,1]x[1]` or `[1^3]x[2]`.
    pub fn parse(s: &str) -> Result<Self> {
        let components = s
            .split(['x', '*'])
            .map(Partition::parse)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    /// `l_alpha`, the product of per-species dimensions.
    pub fn dimension(&self) -> u128 {
        self.components
            .iter()
            .map(|p| character(p, &Partition::column(p.n())).expect("same n") as u128)
            .product()
    }

    /// Character at a class given as per-species cycle types.
    pub fn character(&self, class: &[Partition]) -> Result<i64> {
        if class.len() != self.components.len() {
            return Err(Error::Shape(format!(
                "class has {} species, type {self} has {}",
                class.len(),
                self.components.len()
            )));
        }
        let mut value = 1i64;
        for (alpha, rho) in self.components.iter().zip(class) {
            value *= character(alpha, rho)?;
        }
        Ok(value)
    }
}

impl fmt::Display for SymmetryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.components.iter().map(|p| p.to_string()).collect();
        f.write_str(&labels.join("x"))
    }
}

impl fmt::Debug for SymmetryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl TryFrom<String> for SymmetryType {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Self::parse(&s)
    }
}

impl From<SymmetryType> for String {
    fn from(t: SymmetryType) -> Self {
        t.to_string()
    }
}

/// `l_alpha = chi^alpha(identity)`.
pub fn dimension(alpha: &SymmetryType) -> u128 {
    alpha.dimension()
}

/// A conjugacy class: per-species cycle types and the class size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleType {
    pub cycles: Vec<Partition>,
    pub class_size: u128,
}

impl CycleType {
    pub fn label(&self) -> String {
        let labels: Vec<String> = self.cycles.iter().map(|p| p.label_with('(', ')')).collect();
        labels.join("x")
    }
}

/// Conjugacy classes of `group`, identity class first (cycle types in
/// lexicographic order per species).
pub fn conjugacy_classes(group: &SpeciesGroup) -> Result<Vec<CycleType>> {
    conjugacy_classes_capped(group, DEFAULT_MAX_ORDER)
}

pub fn conjugacy_classes_capped(group: &SpeciesGroup, cap: u64) -> Result<Vec<CycleType>> {
    group.check_order(cap)?;
    let per: Vec<Vec<Partition>> = group
        .sizes
        .iter()
        .map(|&n| {
            partitions_of(n).map(|mut v| {
                v.reverse();
                v
            })
        })
        .collect::<Result<_>>()?;
    Ok(cartesian(&per)
        .into_iter()
        .map(|cycles| {
            let class_size = cycles.iter().map(Partition::class_size).product();
            CycleType { cycles, class_size }
        })
        .collect())
}

/// Coefficients `l_alpha chi^alpha(g) / |S|` of the isotypic projector, one per element.
///
/// Characters of symmetric groups are real integers, so the complex
/// conjugate in the projector formula is the identity.
pub fn projector_coefficients(
    alpha: &SymmetryType,
    group: &SpeciesGroup,
) -> Result<Vec<(GroupElement, Ratio<i64>)>> {
    group.check_type(alpha)?;
    let order = group.order() as i64;
    let dim = alpha.dimension() as i64;
    group
        .elements()?
        .into_iter()
        .map(|g| {
            let chi = alpha.character(&g.class())?;
            Ok((g, Ratio::new(dim * chi, order)))
        })
        .collect()
}

/// Per-species split of particle counts between two clusters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpeciesSplit {
    pub species: Vec<u32>,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl SpeciesSplit {
    pub fn left_group(&self) -> Result<SpeciesGroup> {
        self.side_group(&self.left)
    }

    pub fn right_group(&self) -> Result<SpeciesGroup> {
        self.side_group(&self.right)
    }

    fn side_group(&self, counts: &[usize]) -> Result<SpeciesGroup> {
        let (species, sizes): (Vec<u32>, Vec<usize>) = self
            .species
            .iter()
            .zip(counts)
            .filter(|(_, &c)| c > 0)
            .map(|(&s, &c)| (s, c))
            .unzip();
        SpeciesGroup::new(species, sizes)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchingEntry {
    pub left: SymmetryType,
    pub right: SymmetryType,
    pub multiplicity: u64,
}

/// Irreducible types of `S[D1] x S[D2]` inside a type of `S`, with multiplicities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchingTable {
    pub alpha: SymmetryType,
    pub entries: Vec<BranchingEntry>,
}

impl BranchingTable {
    /// `sum m * l_beta1 * l_beta2`, which must equal `l_alpha`.
    pub fn restricted_dimension(&self) -> u128 {
        self.entries
            .iter()
            .map(|e| e.multiplicity as u128 * e.left.dimension() * e.right.dimension())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Restricts type `alpha` of `group` to the cluster subgroup described by `split`.
pub fn branch(alpha: &SymmetryType, group: &SpeciesGroup, split: &SpeciesSplit) -> Result<BranchingTable> {
    group.check_type(alpha)?;
    if split.species != group.species
        || split.left.len() != group.sizes.len()
        || split.right.len() != group.sizes.len()
        || split
            .left
            .iter()
            .zip(&split.right)
            .zip(&group.sizes)
            .any(|((l, r), n)| l + r != *n)
    {
        return Err(Error::Shape(format!(
            "split {split:?} is inconsistent with species sizes {:?}",
            group.sizes
        )));
    }
    let left = split.left_group()?;
    let right = split.right_group()?;
    let left_classes = conjugacy_classes_capped(&left, u64::MAX)?;
    let right_classes = conjugacy_classes_capped(&right, u64::MAX)?;
    let sub_order = (left.order() * right.order()) as i128;

    // Cycle type in S of a class of the subgroup: per species, union of both sides.
    let merged = |lc: &CycleType, rc: &CycleType| -> Vec<Partition> {
        let mut li = 0;
        let mut ri = 0;
        (0..group.sizes.len())
            .map(|k| {
                let mut parts = Vec::new();
                if split.left[k] > 0 {
                    parts.extend_from_slice(lc.cycles[li].parts());
                    li += 1;
                }
                if split.right[k] > 0 {
                    parts.extend_from_slice(rc.cycles[ri].parts());
                    ri += 1;
                }
                Partition::from_unsorted(parts)
            })
            .collect()
    };

    let mut alpha_values = Vec::with_capacity(left_classes.len() * right_classes.len());
    for lc in &left_classes {
        for rc in &right_classes {
            let size = (lc.class_size * rc.class_size) as i128;
            alpha_values.push((size, alpha.character(&merged(lc, rc))? as i128));
        }
    }

    let mut entries = Vec::new();
    for beta1 in left.types()? {
        let chi1: Vec<i128> = left_classes
            .iter()
            .map(|c| beta1.character(&c.cycles).map(|v| v as i128))
            .collect::<Result<_>>()?;
        for beta2 in right.types()? {
            let chi2: Vec<i128> = right_classes
                .iter()
                .map(|c| beta2.character(&c.cycles).map(|v| v as i128))
                .collect::<Result<_>>()?;
            let mut sum = 0i128;
            let mut idx = 0;
            for &c1 in &chi1 {
                for &c2 in &chi2 {
                    let (size, a) = alpha_values[idx];
                    sum += size * a * c1 * c2;
                    idx += 1;
                }
            }
            debug_assert_eq!(sum % sub_order, 0);
            let m = sum / sub_order;
            if m > 0 {
                entries.push(BranchingEntry {
                    left: beta1.clone(),
                    right: beta2,
                    multiplicity: m as u64,
                });
            }
        }
    }
    Ok(BranchingTable {
        alpha: alpha.clone(),
        entries,
    })
}

/// Character table export: type label -> class label -> value.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CharacterTableExport {
    pub species: Vec<u32>,
    pub sizes: Vec<usize>,
    pub order: u128,
    pub types: Vec<String>,
    pub classes: Vec<String>,
    pub class_sizes: Vec<u128>,
    pub table: BTreeMap<String, BTreeMap<String, i64>>,
}

impl CharacterTableExport {
    pub fn build(group: &SpeciesGroup) -> Result<Self> {
        let types = group.types()?;
        let classes = conjugacy_classes(group)?;
        let mut table = BTreeMap::new();
        for alpha in &types {
            let mut row = BTreeMap::new();
            for class in &classes {
                row.insert(class.label(), alpha.character(&class.cycles)?);
            }
            table.insert(alpha.label(), row);
        }
        Ok(Self {
            species: group.species.clone(),
            sizes: group.sizes.clone(),
            order: group.order(),
            types: types.iter().map(SymmetryType::label).collect(),
            classes: classes.iter().map(CycleType::label).collect(),
            class_sizes: classes.iter().map(|c| c.class_size).collect(),
            table,
        })
    }

    /// Rows in type order, columns in class order.
    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.types
            .iter()
            .map(|t| self.classes.iter().map(|c| self.table[t][c]).collect())
            .collect()
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let rows = self.rows();
        let mut widths: Vec<usize> = self.classes.iter().map(String::len).collect();
        for row in &rows {
            for (w, v) in widths.iter_mut().zip(row) {
                *w = (*w).max(v.to_string().len());
            }
        }
        let label_w = self.types.iter().map(String::len).max().unwrap_or(0).max(5);
        let mut out = format!("{:label_w$}", "type");
        for (c, w) in self.classes.iter().zip(&widths) {
            out.push_str(&format!("  {c:>w$}"));
        }
        out.push('\n');
        out.push_str(&format!("{:label_w$}", "size"));
        for (s, w) in self.class_sizes.iter().zip(&widths) {
            out.push_str(&format!("  {s:>w$}"));
        }
        out.push('\n');
        for (t, row) in self.types.iter().zip(&rows) {
            out.push_str(&format!("{t:label_w$}"));
            for (v, w) in row.iter().zip(&widths) {
                out.push_str(&format!("  {v:>w$}"));
            }
            out.push('\n');
        }
        out
    }
}
