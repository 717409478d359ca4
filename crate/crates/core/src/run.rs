//! Batch commands: configuration resolution, result files and run manifests.
//!
//! Every command writes its outputs below `out` plus a manifest
//! `<command>.manifest.json` holding the fully resolved configuration
//! (including the system definition). Feeding a manifest back as the
//! configuration file reproduces the run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symgroup::{CharacterTableExport, SpeciesGroup, SymmetryType};
use crate::system::{ClusterDecomposition, ParticleSystem, SystemConfig};
use crate::threshold::{
    lemma1_diagnostic, mu_alpha, EnergyCache, Lemma1Region, Lemma1Report, ThresholdConfig, ThresholdReport,
};
use crate::verify::{discrete_spectrum_below, hvz_check, DiscreteSpectrum, HvzConfig, HvzReport};

/// Prefix of the environment variables that mirror the command-line flags.
pub const ENV_PREFIX: &str = "HVZ_";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Chartab,
    Threshold,
    Hvz,
    Lemma1,
    Spectrum,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Chartab => "chartab",
            Command::Threshold => "threshold",
            Command::Hvz => "hvz",
            Command::Lemma1 => "lemma1",
            Command::Spectrum => "spectrum",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lemma1Settings {
    /// Decomposition label such as `{0,1}|{2}`; defaults to the first minimising one.
    pub decomposition: Option<String>,
    /// Region center; defaults to the first minimiser estimate.
    pub center: Option<Vec<f64>>,
    pub half_width: f64,
    pub points: usize,
}

impl Default for Lemma1Settings {
    fn default() -> Self {
        Self {
            decomposition: None,
            center: None,
            half_width: 0.5,
            points: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSettings {
    pub kmax: usize,
    /// Eigenvalues must lie this far below the threshold to be reported.
    pub atol: f64,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        Self { kmax: 4, atol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// System file (TOML). Ignored once `system_def` is filled in.
    pub system: Option<PathBuf>,
    pub system_def: Option<SystemConfig>,
    pub alpha: Option<String>,
    pub out: PathBuf,
    /// On-disk cluster energy cache.
    pub cache: Option<PathBuf>,
    /// Solver seed; overrides `threshold.grid.solver.seed`.
    pub seed: u64,
    pub threads: Option<usize>,
    /// Species sizes for `chartab`; defaults to the system's group.
    pub group: Option<Vec<usize>>,
    pub threshold: ThresholdConfig,
    pub hvz: HvzConfig,
    pub lemma1: Lemma1Settings,
    pub spectrum: SpectrumSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: None,
            system_def: None,
            alpha: None,
            out: PathBuf::from("out"),
            cache: None,
            seed: 42,
            threads: None,
            group: None,
            threshold: ThresholdConfig::default(),
            hvz: HvzConfig::default(),
            lemma1: Lemma1Settings::default(),
            spectrum: SpectrumSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: Command,
    pub version: String,
    /// `running`, `ok` or `failed: <message>`; anything but `ok` marks partial outputs.
    pub status: String,
    pub outputs: Vec<PathBuf>,
    pub config: RunConfig,
}

impl RunConfig {
    /// Reads a TOML configuration, a JSON configuration or a run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        if !is_json {
            return toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())));
        }
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let inner = match value.get("config") {
            Some(c) if value.get("command").is_some() => c.clone(),
            _ => value,
        };
        serde_json::from_value(inner).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Loads the system file into `system_def`, relative to `base` when the path is relative.
    pub fn resolve(mut self, base: Option<&Path>) -> Result<Self> {
        if self.system_def.is_none() {
            if let Some(p) = &self.system {
                let path = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                let text = fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("cannot read system file {}: {e}", path.display())))?;
                self.system_def = Some(SystemConfig::from_toml(&text)?);
            }
        }
        self.threshold.grid.solver.seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.threshold.validate()?;
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        let h = &self.hvz;
        if !(h.separation_fraction > 0.0 && h.separation_fraction < 0.5) || !(h.width_fraction > 0.0) {
            return Err(Error::Config("hvz fractions out of range".into()));
        }
        if !(self.spectrum.atol > 0.0) || !(self.lemma1.half_width > 0.0) {
            return Err(Error::Config("tolerances and widths must be positive".into()));
        }
        Ok(())
    }

    pub fn particle_system(&self) -> Result<ParticleSystem> {
        self.system_def
            .as_ref()
            .ok_or_else(|| Error::Config("no system given (set `system` or pass --config with a system file)".into()))?
            .build()
    }

    pub fn symmetry_type(&self) -> Result<SymmetryType> {
        let label = self
            .alpha
            .as_deref()
            .ok_or_else(|| Error::Config("no symmetry type given (set `alpha`, e.g. \"[2,1]\")".into()))?;
        SymmetryType::parse(label)
    }

    fn energy_cache(&self) -> Result<EnergyCache> {
        match &self.cache {
            Some(dir) => EnergyCache::with_dir(dir),
            None => Ok(EnergyCache::new()),
        }
    }
}

/// What a command produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: String,
    pub outputs: Vec<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ExecOptions {
    /// Compute the threshold in-process instead of reading a prior `threshold` run.
    pub inline: bool,
}

pub fn manifest_path(out: &Path, cmd: Command) -> PathBuf {
    out.join(format!("{}.manifest.json", cmd.name()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn write_manifest(cfg: &RunConfig, cmd: Command, status: &str, outputs: &[PathBuf]) -> Result<()> {
    let manifest = Manifest {
        command: cmd,
        version: env!("CARGO_PKG_VERSION").to_string(),
        status: status.to_string(),
        outputs: outputs.to_vec(),
        config: cfg.clone(),
    };
    write_json(&manifest_path(&cfg.out, cmd), &manifest)
}

/// Runs one command. The configuration must already be resolved.
pub fn execute(cmd: Command, cfg: &RunConfig, opts: ExecOptions) -> Result<Outcome> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    write_manifest(cfg, cmd, "running", &[])?;
    let result = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| dispatch(cmd, cfg, opts)),
        None => dispatch(cmd, cfg, opts),
    };
    match &result {
        Ok(o) => write_manifest(cfg, cmd, "ok", &o.outputs)?,
        Err(e) => write_manifest(cfg, cmd, &format!("failed: {e}"), &[])?,
    }
    result
}

fn dispatch(cmd: Command, cfg: &RunConfig, opts: ExecOptions) -> Result<Outcome> {
    match cmd {
        Command::Chartab => chartab(cfg),
        Command::Threshold => threshold(cfg).map(|(o, _)| o),
        Command::Hvz => hvz(cfg, opts),
        Command::Lemma1 => lemma1(cfg, opts),
        Command::Spectrum => spectrum(cfg, opts),
    }
}

fn chartab(cfg: &RunConfig) -> Result<Outcome> {
    let group = match (&cfg.group, &cfg.system_def) {
        (Some(sizes), _) => SpeciesGroup::from_sizes(sizes)?,
        (None, Some(_)) => cfg.particle_system()?.species_group()?,
        (None, None) => return Err(Error::Config("chartab needs species sizes or a system".into())),
    };
    let table = CharacterTableExport::build(&group)?;
    let json = cfg.out.join("chartab.json");
    let txt = cfg.out.join("chartab.txt");
    write_json(&json, &table)?;
    let text = table.to_text();
    fs::write(&txt, &text)?;
    Ok(Outcome {
        summary: text,
        outputs: vec![json, txt],
    })
}

fn curve_file(z: &ClusterDecomposition) -> String {
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join("-");
    format!("curve_{}_{}.csv", join(&z.d1), join(&z.d2))
}

fn threshold(cfg: &RunConfig) -> Result<(Outcome, ThresholdReport)> {
    let sys = cfg.particle_system()?;
    let alpha = cfg.symmetry_type()?;
    let cache = cfg.energy_cache()?;
    let report = mu_alpha(&sys, &alpha, &cfg.threshold, Some(&cache))?;
    let mut outputs = vec![cfg.out.join("threshold.json")];
    write_json(&outputs[0], &report)?;
    for d in &report.decompositions {
        if let Some(curve) = &d.curve {
            let path = cfg.out.join(curve_file(&d.decomposition));
            fs::write(&path, curve.to_csv())?;
            outputs.push(path);
        }
    }
    let mut summary = format!("alpha = {}\nmu = {:.12}\nA(alpha) = {}\n", alpha, report.mu, report.minimizing.join(" "));
    for g in report.gamma() {
        let _ = writeln!(summary, "Gamma: Q = {:?}, lambda = {:.12} ({} samples)", g.q, g.lambda, g.samples);
    }
    for w in &report.warnings {
        let _ = writeln!(summary, "warning: {w}");
    }
    Ok((Outcome { summary, outputs }, report))
}

/// Threshold report for the downstream commands: the prior `threshold` run in
/// `out`, checked against the current configuration, or a fresh computation.
fn threshold_input(cfg: &RunConfig, opts: ExecOptions) -> Result<ThresholdReport> {
    if opts.inline {
        let sys = cfg.particle_system()?;
        let alpha = cfg.symmetry_type()?;
        let cache = cfg.energy_cache()?;
        return mu_alpha(&sys, &alpha, &cfg.threshold, Some(&cache));
    }
    let missing = |why: &str| {
        Error::Config(format!(
            "{why} in {}; run the `threshold` command first (or pass --inline)",
            cfg.out.display()
        ))
    };
    let mpath = manifest_path(&cfg.out, Command::Threshold);
    if !mpath.exists() {
        return Err(missing("no threshold results"));
    }
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&mpath)?)?;
    if manifest.status != "ok" {
        return Err(missing("the threshold run did not complete"));
    }
    let prior = &manifest.config;
    if prior.system_def != cfg.system_def || prior.alpha != cfg.alpha || prior.threshold != cfg.threshold {
        return Err(missing("threshold results for a different system, type or configuration"));
    }
    let path = cfg.out.join("threshold.json");
    if !path.exists() {
        return Err(missing("no threshold results"));
    }
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn hvz(cfg: &RunConfig, opts: ExecOptions) -> Result<Outcome> {
    let sys = cfg.particle_system()?;
    let threshold = threshold_input(cfg, opts)?;
    let report: HvzReport = hvz_check(&sys, &threshold, &cfg.hvz, &cfg.threshold.grid)?;
    let json = cfg.out.join("hvz.json");
    let csv = cfg.out.join("hvz.csv");
    write_json(&json, &report)?;
    fs::write(&csv, report.to_csv())?;
    let mut summary = format!(
        "mu = {:.12}\ndecomposition = {}\nfinal gap = {:.3e}, monotone = {}\n",
        report.mu, report.decomposition, report.final_gap, report.monotone
    );
    let _ = writeln!(summary, "discrete eigenvalues below mu: {}", report.discrete.below.len());
    for (e, r) in &report.discrete.below {
        let _ = writeln!(summary, "  {e:.12}  (residual {r:.1e})");
    }
    Ok(Outcome {
        summary,
        outputs: vec![json, csv],
    })
}

fn lemma1_csv(report: &Lemma1Report) -> String {
    let d = report.region.center.len();
    let axes = ["Qx", "Qy", "Qz"];
    let mut out = axes[..d].join(",");
    out.push_str(",lambda,beta1,beta2,breakup1,breakup2,is_discrete,eigenspace_dimension\n");
    for s in &report.samples {
        for q in &s.q {
            let _ = write!(out, "{q:.17e},");
        }
        let _ = writeln!(
            out,
            "{:.17e},{},{},{:.17e},{:.17e},{},{}",
            s.lambda, s.beta1, s.beta2, s.breakup1, s.breakup2, s.is_discrete, s.eigenspace_dimension
        );
    }
    out
}

fn lemma1(cfg: &RunConfig, opts: ExecOptions) -> Result<Outcome> {
    let sys = cfg.particle_system()?;
    let threshold = threshold_input(cfg, opts)?;
    let label = match &cfg.lemma1.decomposition {
        Some(l) => l.clone(),
        None => threshold
            .minimizing
            .first()
            .cloned()
            .ok_or_else(|| Error::Config("threshold report has no minimising decomposition".into()))?,
    };
    let z = threshold
        .decomposition(&label)
        .ok_or_else(|| Error::Config(format!("decomposition {label} is not among the scanned ones")))?
        .decomposition
        .clone();
    let center = match &cfg.lemma1.center {
        Some(c) => c.clone(),
        None => threshold
            .gamma()
            .first()
            .map(|g| g.q.clone())
            .unwrap_or_else(|| vec![0.0; sys.dimension]),
    };
    let region = Lemma1Region {
        center,
        half_width: cfg.lemma1.half_width,
        points: cfg.lemma1.points,
    };
    let cache = cfg.energy_cache()?;
    let report = lemma1_diagnostic(&sys, &threshold.alpha, &z, &region, &cfg.threshold, Some(&cache))?;
    let json = cfg.out.join("lemma1.json");
    let csv = cfg.out.join("lemma1.csv");
    write_json(&json, &report)?;
    fs::write(&csv, lemma1_csv(&report))?;
    let dominant = report
        .dominant
        .as_ref()
        .map_or("none".to_string(), |c| format!("({}, {}) x{}", c.left, c.right, c.multiplicity));
    let mut summary = format!(
        "decomposition = {}\nhypothesis (i) discrete: {}\nhypothesis (ii) simple: {}\ndominant = {dominant}\n\
         smoothness = {:.3e} (median {:.3e})\nminimisers at h, h/2 = {}, {}\n",
        report.decomposition,
        report.hypothesis_i,
        report.hypothesis_ii,
        report.smoothness,
        report.smoothness_median,
        report.minimizers_h,
        report.minimizers_half_h
    );
    for w in &report.warnings {
        let _ = writeln!(summary, "warning: {w}");
    }
    Ok(Outcome {
        summary,
        outputs: vec![json, csv],
    })
}

fn spectrum(cfg: &RunConfig, opts: ExecOptions) -> Result<Outcome> {
    let sys = cfg.particle_system()?;
    let threshold = threshold_input(cfg, opts)?;
    let spec: DiscreteSpectrum = discrete_spectrum_below(
        &sys,
        &threshold.alpha,
        threshold.mu,
        &cfg.threshold.grid,
        cfg.spectrum.atol,
        cfg.spectrum.kmax,
    )?;
    let json = cfg.out.join("spectrum.json");
    let csv = cfg.out.join("spectrum.csv");
    write_json(&json, &spec)?;
    let mut table = String::from("index,eigenvalue,residual\n");
    for (i, (e, r)) in spec.below.iter().enumerate() {
        let _ = writeln!(table, "{i},{e:.17e},{r:.3e}");
    }
    fs::write(&csv, table)?;
    let mut summary = format!(
        "mu = {:.12}\nlowest = {:.12}\ndiscrete eigenvalues below mu: {}\n",
        spec.mu,
        spec.lowest,
        spec.below.len()
    );
    for (e, r) in &spec.below {
        let _ = writeln!(summary, "  {e:.12}  (residual {r:.1e})");
    }
    if spec.truncated {
        summary.push_str("warning: all requested eigenvalues lie below mu; raise spectrum.kmax\n");
    }
    Ok(Outcome {
        summary,
        outputs: vec![json, csv],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = r#"
dimension = 1

[[particles]]
mass = 1.0
species = 0
count = 2

[[potentials]]
species = [0, 0]
kind = "gaussian-well"
strength = -2.0
range = 1.0
"#;

    fn config(dir: &Path) -> RunConfig {
        fs::write(dir.join("pair.toml"), PAIR).unwrap();
        let mut cfg = RunConfig {
            system: Some(PathBuf::from("pair.toml")),
            alpha: Some("[2]".into()),
            out: dir.join("out"),
            ..RunConfig::default()
        };
        cfg.threshold.grid.points = 64;
        cfg.threshold.grid.box_len = 20.0;
        cfg.resolve(Some(dir)).unwrap()
    }

    #[test]
    fn toml_config_parses_and_rejects_unknown_keys() {
        let cfg: RunConfig = toml::from_str(
            "alpha = \"[2,1]\"\nseed = 7\n[threshold]\natol = 1e-7\n[threshold.grid]\npoints = 64\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.threshold.grid.points, 64);
        assert!(toml::from_str::<RunConfig>("alpah = \"[3]\"").is_err());
    }

    #[test]
    fn downstream_commands_need_a_threshold_run() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        let err = execute(Command::Spectrum, &cfg, ExecOptions::default()).unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("threshold"));
        let m: Manifest = serde_json::from_str(&fs::read_to_string(manifest_path(&cfg.out, Command::Spectrum)).unwrap())
            .unwrap();
        assert!(m.status.starts_with("failed"));

        execute(Command::Threshold, &cfg, ExecOptions::default()).unwrap();
        let out = execute(Command::Spectrum, &cfg, ExecOptions::default()).unwrap();
        assert!(out.summary.contains("discrete eigenvalues below mu: 1"));

        // a changed configuration invalidates the stored threshold
        let mut other = cfg.clone();
        other.threshold.atol = 1e-7;
        assert!(execute(Command::Spectrum, &other, ExecOptions::default()).is_err());
        assert!(execute(Command::Spectrum, &other, ExecOptions { inline: true }).is_ok());
    }

    #[test]
    fn manifest_reproduces_the_run() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        execute(Command::Threshold, &cfg, ExecOptions::default()).unwrap();
        let mut again = RunConfig::load(&manifest_path(&cfg.out, Command::Threshold)).unwrap();
        assert_eq!(again, cfg);
        again.out = dir.path().join("again");
        let again = again.resolve(None).unwrap();
        execute(Command::Threshold, &again, ExecOptions::default()).unwrap();
        let a: ThresholdReport =
            serde_json::from_str(&fs::read_to_string(cfg.out.join("threshold.json")).unwrap()).unwrap();
        let b: ThresholdReport =
            serde_json::from_str(&fs::read_to_string(again.out.join("threshold.json")).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
