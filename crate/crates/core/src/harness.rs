//! Experiment configuration, replicate-parallel Monte Carlo runs and the
//! files they leave behind (`structure.csv`, `report.json`, `manifest.json`).
//!
//! Every replicate draws from its own seeds, derived from the master seed,
//! so results do not depend on how replicates are scheduled across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cascade::{integrate_mrm, mrm_total, subordinate_brownian, MrmPath, MrwPath, Resolution};
use crate::error::{Error, Result};
use crate::estimate::{estimate_zeta, fixed_resolution_estimate, ScalingReport};
use crate::exponents::{Family, LevyExponent};
use crate::fields::{
    tilt_field, GridSpec, OmegaGrid, OmegaSampler, PoissonSampler, DEFAULT_POINT_CAP,
    MAX_EMBEDDING_LEN,
};
use crate::geometry::{
    mu_cone, mu_beta, mu_overlap, mu_theta, mu_tilde, oracle_mu, regions, Bounds, ConeSpec,
    PartitionSpec,
};
use crate::stats;
use crate::structure::{normalized_series, summarize, StructureKind, StructureSeries};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const OMEGA_STREAM: u64 = 1;
const XI_STREAM: u64 = 2;
const SHARED_LEVEL: u64 = 0xff;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one random stream of one replicate. Each stage is a bijection,
/// so distinct replicate ids never collide for a fixed master seed and tag.
pub fn derive_seed(master_seed: u64, replicate_id: u64, stream_tag: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ replicate_id) ^ stream_tag)
}

/// Tag of the ω stream; `level` is the analysis level for per-scale grids.
pub fn omega_tag(block: u32, level: Option<u32>) -> u64 {
    stream_tag(OMEGA_STREAM, block, level)
}

/// Tag of the Brownian stream driving the walk at analysis level `n`.
pub fn xi_tag(block: u32, n: u32) -> u64 {
    stream_tag(XI_STREAM, block, Some(n))
}

fn stream_tag(kind: u64, block: u32, level: Option<u32>) -> u64 {
    // Levels are validated to stay below SHARED_LEVEL.
    let level = level.map_or(SHARED_LEVEL, u64::from);
    kind | level << 8 | (block as u64) << 16
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// χ = 0, with the tilted measure of the same field alongside.
    FineResolution,
    /// One block per χ in `chi_sweep`.
    Mixed,
    /// A sweep of q across `q_chi`.
    ZetaRegimes,
    /// Two fixed resolutions over growing horizons `t_sweep`.
    ChiInfinity,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::FineResolution,
        Preset::Mixed,
        Preset::ZetaRegimes,
        Preset::ChiInfinity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::FineResolution => "fine-resolution",
            Preset::Mixed => "mixed",
            Preset::ZetaRegimes => "zeta-regimes",
            Preset::ChiInfinity => "chi-infinity",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown preset {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Mode {
    Simulate,
    Structure,
    Estimate,
    VerifyGeometry,
    Experiment(Preset),
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Simulate => f.write_str("simulate"),
            Mode::Structure => f.write_str("structure"),
            Mode::Estimate => f.write_str("estimate"),
            Mode::VerifyGeometry => f.write_str("verify-geometry"),
            Mode::Experiment(p) => write!(f, "experiment:{}", p.name()),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "simulate" => Mode::Simulate,
            "structure" => Mode::Structure,
            "estimate" => Mode::Estimate,
            "verify-geometry" => Mode::VerifyGeometry,
            other => match other.strip_prefix("experiment:") {
                Some(p) => Mode::Experiment(p.parse()?),
                None => return Err(Error::Usage(format!("unknown mode {other:?}"))),
            },
        })
    }
}

impl TryFrom<String> for Mode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Mode> for String {
    fn from(m: Mode) -> String {
        m.to_string()
    }
}

/// Where the ω grids come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// One grid at level `max n + oversampling` serves every `n`.
    Shared,
    /// An independent grid at level `n + oversampling` for each `n`, so the
    /// ratio of cutoff to cell width is the same at every resolution.
    PerScale,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    /// Fit the ensemble-mean series only.
    Ensemble,
    /// Also fit every replicate on its own.
    PerReplicate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: Family,
    pub integral_scale: f64,
    pub t: f64,
    pub chi: f64,
    pub n_values: Vec<u32>,
    pub q_values: Vec<f64>,
    pub replicates: u64,
    pub oversampling: u32,
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
    pub mode: Mode,
    pub sampling: Sampling,
    /// Build the walk and its structure function `S_n` too.
    pub walk: bool,
    /// Record `M^(q)_l` of the tilted field next to each `Sigma_n`.
    pub coupled: bool,
    pub fit: FitMode,
    pub chi_sweep: Vec<f64>,
    pub t_sweep: Vec<f64>,
    pub threads: usize,
    pub dump_omega: Option<PathBuf>,
}

/// On-disk form: a flat file of `key = value` lines (TOML syntax).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    family: Option<String>,
    variance: Option<f64>,
    intensity: Option<f64>,
    jump: Option<f64>,
    integral_scale: Option<f64>,
    t: Option<f64>,
    chi: Option<f64>,
    n_values: Option<Vec<u32>>,
    q_values: Option<Vec<f64>>,
    replicates: Option<u64>,
    oversampling: Option<u32>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    mode: Option<String>,
    sampling: Option<Sampling>,
    walk: Option<bool>,
    coupled: Option<bool>,
    fit: Option<FitMode>,
    chi_sweep: Option<Vec<f64>>,
    t_sweep: Option<Vec<f64>>,
    threads: Option<usize>,
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub master_seed: Option<u64>,
    pub replicates: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub dump_omega: Option<PathBuf>,
    pub threads: Option<usize>,
    pub t: Option<f64>,
    pub chi: Option<f64>,
    pub n_values: Option<Vec<u32>>,
    pub q_values: Option<Vec<f64>>,
    pub oversampling: Option<u32>,
    pub sampling: Option<Sampling>,
    pub walk: Option<bool>,
    pub fit: Option<FitMode>,
}

impl ExperimentConfig {
    /// Defaults for everything but the seed law.
    pub fn new(family: Family) -> Self {
        Self {
            family,
            integral_scale: 1.0,
            t: 1.0,
            chi: 0.0,
            n_values: (6..=12).collect(),
            q_values: vec![0.5, 1.0, 2.0],
            replicates: 100,
            oversampling: crate::cascade::DEFAULT_OVERSAMPLING,
            master_seed: 0,
            output_dir: None,
            mode: Mode::Estimate,
            sampling: Sampling::PerScale,
            walk: false,
            coupled: false,
            fit: FitMode::Ensemble,
            chi_sweep: Vec::new(),
            t_sweep: Vec::new(),
            threads: 1,
            dump_omega: None,
        }
    }

    pub fn parse_file_text(text: &str) -> Result<Self> {
        let raw: ConfigFile =
            toml::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))?;
        let family = match raw.family.as_deref() {
            Some("gaussian") => Family::Gaussian {
                variance: require(raw.variance, "variance")?,
            },
            Some("compound_poisson") => Family::CompoundPoisson {
                intensity: require(raw.intensity, "intensity")?,
                jump: require(raw.jump, "jump")?,
            },
            Some(other) => return Err(Error::Validation(format!("unknown family {other:?}"))),
            None => return Err(Error::Validation("config: missing key `family`".into())),
        };
        let mut cfg = Self::new(family);
        macro_rules! take {
            ($($field:ident <- $key:ident),* $(,)?) => {
                $(if let Some(v) = raw.$key { cfg.$field = v; })*
            };
        }
        take!(
            integral_scale <- integral_scale,
            t <- t,
            chi <- chi,
            n_values <- n_values,
            q_values <- q_values,
            replicates <- replicates,
            oversampling <- oversampling,
            master_seed <- seed,
            sampling <- sampling,
            walk <- walk,
            coupled <- coupled,
            fit <- fit,
            chi_sweep <- chi_sweep,
            t_sweep <- t_sweep,
            threads <- threads,
        );
        cfg.output_dir = raw.out;
        if let Some(m) = raw.mode {
            cfg.mode = m.parse()?;
        }
        Ok(cfg)
    }

    /// Reads a key-value config file, or the config echoed in a run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        if let Ok(manifest) = serde_json::from_str::<RunManifest>(&text) {
            return Ok(manifest.config);
        }
        Self::parse_file_text(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! put {
            ($($field:ident),*) => {
                $(if let Some(v) = o.$field.clone() { self.$field = v; })*
            };
        }
        put!(mode, master_seed, replicates, threads, t, chi, n_values, q_values, oversampling, sampling, walk, fit);
        if o.output_dir.is_some() {
            self.output_dir = o.output_dir.clone();
        }
        if o.dump_omega.is_some() {
            self.dump_omega = o.dump_omega.clone();
        }
    }

    pub fn exponent(&self) -> Result<LevyExponent> {
        LevyExponent::from_family(self.family)
            .map_err(|e| Error::Validation(format!("family: {e}")))
    }

    fn min_n(&self) -> u32 {
        self.n_values.iter().copied().min().unwrap_or(0)
    }

    fn max_n(&self) -> u32 {
        self.n_values.iter().copied().max().unwrap_or(0)
    }

    /// `(chi, t)` of every block the run will simulate.
    pub fn blocks(&self) -> Vec<(f64, f64)> {
        match self.mode {
            Mode::Experiment(Preset::Mixed) => self.chi_sweep.iter().map(|&c| (c, self.t)).collect(),
            Mode::Experiment(Preset::ChiInfinity) => {
                self.t_sweep.iter().map(|&t| (self.chi, t)).collect()
            }
            _ => vec![(self.chi, self.t)],
        }
    }

    /// Records `M^(q)` whenever asked to, and always for `fine-resolution`.
    pub fn wants_coupled(&self) -> bool {
        self.coupled || self.mode == Mode::Experiment(Preset::FineResolution)
    }

    /// Checks every invariant before any sampling happens.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        let exp = self.exponent()?;
        if !(self.integral_scale.is_finite() && self.integral_scale > 0.0) {
            return fail(format!("integral scale must be positive, got {}", self.integral_scale));
        }
        if self.mode == Mode::VerifyGeometry {
            return Ok(());
        }
        if self.replicates < 1 {
            return fail("replicates must be at least 1".into());
        }
        if self.threads < 1 {
            return fail("threads must be at least 1".into());
        }
        if self.n_values.is_empty() {
            return fail("n_values must not be empty".into());
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return fail(format!("n_values must be strictly increasing, got {:?}", self.n_values));
        }
        let finest = (-(self.min_n() as f64)).exp2();
        if finest > self.integral_scale {
            return fail(format!(
                "2^-n = {finest} exceeds T = {} at n = {}",
                self.integral_scale,
                self.min_n()
            ));
        }
        if self.max_n() + self.oversampling > 40 {
            return fail("grid level n + oversampling must not exceed 40".into());
        }
        if self.q_values.is_empty() {
            return fail("q_values must not be empty".into());
        }
        for &q in &self.q_values {
            let ok = q.is_finite() && q > 0.0 && exp.psi(q).is_ok_and(f64::is_finite);
            let walk_ok = !self.walk || exp.psi(2.0 * q).is_ok_and(f64::is_finite);
            if !ok || !walk_ok {
                return fail(format!("q = {q} is outside the domain of psi"));
            }
        }
        for (chi, t) in self.blocks() {
            if !(chi.is_finite() && chi >= 0.0) {
                return fail(format!("chi must be nonnegative, got {chi}"));
            }
            if !(t.is_finite() && t > 0.0) {
                return fail(format!("horizon t must be positive, got {t}"));
            }
        }
        match self.mode {
            Mode::Experiment(Preset::FineResolution) => {
                if self.chi != 0.0 {
                    return fail(format!("fine-resolution runs at chi = 0, got {}", self.chi));
                }
            }
            Mode::Experiment(Preset::Mixed) if self.chi_sweep.is_empty() => {
                return fail("mixed needs a nonempty chi_sweep".into());
            }
            Mode::Experiment(Preset::ChiInfinity) => {
                if self.t_sweep.is_empty() {
                    return fail("chi-infinity needs a nonempty t_sweep".into());
                }
                if self.n_values.len() != 2 {
                    return fail(format!(
                        "chi-infinity compares exactly two resolutions, got {:?}",
                        self.n_values
                    ));
                }
            }
            _ => {}
        }
        let fits = match self.mode {
            Mode::Estimate => true,
            Mode::Experiment(p) => p != Preset::ChiInfinity,
            _ => false,
        };
        if fits && self.n_values.len() < 3 {
            return fail("slope fits need at least three values of n".into());
        }
        if self.wants_coupled() && self.sampling != Sampling::Shared {
            return fail("the coupled tilted measure needs sampling = \"shared\"".into());
        }
        for (chi, t) in self.blocks() {
            for grid in grid_specs(self, chi, t)
                .map_err(|e| Error::Validation(format!("grid: {e}")))?
            {
                self.check_capacity(&exp, &grid)?;
            }
        }
        Ok(())
    }

    fn check_capacity(&self, exp: &LevyExponent, grid: &GridSpec) -> Result<()> {
        let cone = ConeSpec::new(self.integral_scale, grid.spacing())
            .map_err(|e| Error::Validation(format!("cone: {e}")))?;
        if exp.is_gaussian() {
            let pad = (2.0 * self.integral_scale / grid.spacing()).ceil() as usize;
            let period = (grid.n_points() + pad).next_power_of_two();
            if period > MAX_EMBEDDING_LEN {
                return Err(Error::Validation(format!(
                    "embedding period {period} at level {} exceeds {MAX_EMBEDDING_LEN}",
                    grid.level()
                )));
            }
        } else {
            let points = PoissonSampler::new(exp, &cone, grid)?.expected_points();
            if points > DEFAULT_POINT_CAP as f64 {
                return Err(Error::Validation(format!(
                    "{points:.3e} expected Poisson points at level {} exceed {DEFAULT_POINT_CAP}",
                    grid.level()
                )));
            }
        }
        Ok(())
    }
}

fn require(v: Option<f64>, key: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Validation(format!("config: missing key `{key}`")))
}

fn resolutions(cfg: &ExperimentConfig, chi: f64, t: f64) -> Result<Vec<Resolution>> {
    cfg.n_values.iter().map(|&n| Resolution::new(n, t, chi)).collect()
}

fn grid_for(level: u32, span: f64) -> Result<GridSpec> {
    GridSpec::new(level, span)
}

fn grid_specs(cfg: &ExperimentConfig, chi: f64, t: f64) -> Result<Vec<GridSpec>> {
    let res = resolutions(cfg, chi, t)?;
    match cfg.sampling {
        Sampling::Shared => {
            let span = res.iter().map(Resolution::span).fold(0.0, f64::max);
            Ok(vec![grid_for(cfg.max_n() + cfg.oversampling, span)?])
        }
        Sampling::PerScale => res
            .iter()
            .map(|r| grid_for(r.n + cfg.oversampling, r.span()))
            .collect(),
    }
}

/// Samplers for one `(chi, t)` block, built once and shared by all replicates.
pub struct BlockPlan {
    pub index: u32,
    pub chi: f64,
    pub t: f64,
    master_seed: u64,
    q_values: Vec<f64>,
    walk: bool,
    coupled: bool,
    sampling: Sampling,
    resolutions: Vec<Resolution>,
    samplers: Vec<OmegaSampler>,
}

impl BlockPlan {
    pub fn new(cfg: &ExperimentConfig, index: u32, chi: f64, t: f64) -> Result<Self> {
        let exp = cfg.exponent()?;
        let samplers = grid_specs(cfg, chi, t)?
            .iter()
            .map(|g| {
                let cone = ConeSpec::new(cfg.integral_scale, g.spacing())?;
                OmegaSampler::new(&exp, &cone, g)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            index,
            chi,
            t,
            master_seed: cfg.master_seed,
            q_values: cfg.q_values.clone(),
            walk: cfg.walk,
            coupled: cfg.wants_coupled(),
            sampling: cfg.sampling,
            resolutions: resolutions(cfg, chi, t)?,
            samplers,
        })
    }

    pub fn resolutions(&self) -> &[Resolution] {
        &self.resolutions
    }

    pub fn seeds(&self, replicate: u64) -> ReplicateSeeds {
        let omega = if self.sampling == Sampling::Shared {
            vec![derive_seed(self.master_seed, replicate, omega_tag(self.index, None))]
        } else {
            self.resolutions
                .iter()
                .map(|r| derive_seed(self.master_seed, replicate, omega_tag(self.index, Some(r.n))))
                .collect()
        };
        let xi = if self.walk {
            self.resolutions
                .iter()
                .map(|r| derive_seed(self.master_seed, replicate, xi_tag(self.index, r.n)))
                .collect()
        } else {
            Vec::new()
        };
        ReplicateSeeds {
            replicate,
            omega,
            xi,
        }
    }

    /// The ω grid that feeds resolution `ni` (the shared grid for every `ni`).
    pub fn omega(&self, replicate: u64, ni: usize) -> Result<OmegaGrid> {
        let seeds = self.seeds(replicate);
        let i = if self.sampling == Sampling::Shared { 0 } else { ni };
        self.samplers[i].sample(seeds.omega[i])
    }

    /// Measure paths (and walks, when enabled) at every resolution.
    pub fn paths(&self, replicate: u64) -> Result<Vec<(MrmPath, Option<MrwPath>)>> {
        let seeds = self.seeds(replicate);
        let mut shared = None;
        let mut out = Vec::with_capacity(self.resolutions.len());
        for (ni, &res) in self.resolutions.iter().enumerate() {
            let mrm = if self.sampling == Sampling::Shared {
                let omega = match shared.take() {
                    Some(o) => o,
                    None => self.samplers[0].sample(seeds.omega[0])?,
                };
                let mrm = integrate_mrm(&omega, res)?;
                shared = Some(omega);
                mrm
            } else {
                integrate_mrm(&self.samplers[ni].sample(seeds.omega[ni])?, res)?
            };
            let mrw = match seeds.xi.get(ni) {
                Some(&s) => Some(subordinate_brownian(&mrm, s)?),
                None => None,
            };
            out.push((mrm, mrw));
        }
        Ok(out)
    }

    /// Structure values of one replicate.
    pub fn replicate(&self, replicate: u64) -> Result<ReplicateRecord> {
        let paths = self.paths(replicate)?;
        let (mrm, mrw): (Vec<_>, Vec<_>) = paths.into_iter().unzip();
        let sigma = StructureSeries::sigma(&mrm, &self.q_values, replicate)?;
        let s = if self.walk {
            let walks: Vec<MrwPath> = mrw.into_iter().flatten().collect();
            Some(StructureSeries::s(&walks, &self.q_values, replicate)?)
        } else {
            None
        };
        let mq = if self.coupled {
            let omega = self.omega(replicate, 0)?;
            let rows = self
                .q_values
                .iter()
                .map(|&q| {
                    let tilted = tilt_field(&omega, q)?;
                    self.resolutions
                        .iter()
                        .map(|&r| Ok(mrm_total(&integrate_mrm(&tilted, r)?) / r.span()))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<_>>()?;
            Some(rows)
        } else {
            None
        };
        Ok(ReplicateRecord {
            seeds: self.seeds(replicate),
            sigma,
            s,
            mq,
        })
    }

    /// All replicates in id order, spread over the current rayon pool.
    pub fn run(&self, replicates: u64) -> Result<Vec<ReplicateRecord>> {
        (0..replicates)
            .into_par_iter()
            .map(|r| self.replicate(r))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicateSeeds {
    pub replicate: u64,
    pub omega: Vec<u64>,
    pub xi: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateRecord {
    pub seeds: ReplicateSeeds,
    pub sigma: StructureSeries,
    pub s: Option<StructureSeries>,
    /// `M^(q)_l` over each resolution's span divided by the span, `[q][n]`.
    pub mq: Option<Vec<Vec<f64>>>,
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSeeds {
    pub block: u32,
    pub chi: f64,
    pub t: f64,
    pub replicates: Vec<ReplicateSeeds>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<BlockSeeds>,
    pub wall_clock_seconds: f64,
    /// SHA-256 of each output file, keyed by file name.
    pub checksums: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedResolutionEntry {
    pub q: f64,
    pub kind: StructureKind,
    pub estimate: f64,
    /// Large-horizon limit `q - psi(q) - 1`.
    pub limit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledEntry {
    pub q: f64,
    pub n: u32,
    /// Median over replicates of `|Sigma_n / mean(Sigma_n) - M^(q)_l / span|`.
    pub median_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub chi: f64,
    pub t: f64,
    pub replicates: u64,
    pub sigma: Option<ScalingReport>,
    pub s: Option<ScalingReport>,
    pub sigma_per_replicate: Option<Vec<ScalingReport>>,
    pub s_per_replicate: Option<Vec<ScalingReport>>,
    pub fixed_resolution: Option<Vec<FixedResolutionEntry>>,
    pub coupled: Option<Vec<CoupledEntry>>,
    pub normalization_note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub blocks: Vec<BlockReport>,
}

/// Everything a run produced, before it is written out.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub report: Option<RunReport>,
    /// File name and contents, in write order.
    pub files: Vec<(String, Vec<u8>)>,
}

struct BlockResult {
    plan_index: u32,
    chi: f64,
    t: f64,
    records: Vec<ReplicateRecord>,
}

/// Validates `cfg`, runs it, and writes the outputs when `output_dir` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut files = Vec::new();
    let mut seeds = Vec::new();
    let mut report = None;

    if cfg.mode == Mode::VerifyGeometry {
        let rows = geometry_table(cfg.integral_scale, cfg.max_n().max(4))?;
        files.push(("geometry.csv".into(), geometry_csv(&rows)?));
    } else {
        let blocks = cfg
            .blocks()
            .into_iter()
            .enumerate()
            .map(|(i, (chi, t))| {
                let plan = BlockPlan::new(cfg, i as u32, chi, t)?;
                let records = if cfg.mode == Mode::Simulate {
                    write_paths(cfg, &plan, &mut files)?
                } else {
                    with_threads(cfg.threads, || plan.run(cfg.replicates))??
                };
                seeds.push(BlockSeeds {
                    block: i as u32,
                    chi,
                    t,
                    replicates: (0..cfg.replicates).map(|r| plan.seeds(r)).collect(),
                });
                Ok(BlockResult {
                    plan_index: i as u32,
                    chi,
                    t,
                    records,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        if cfg.mode != Mode::Simulate {
            let exp = cfg.exponent()?;
            let (csv, notes) = structure_csv(cfg, &exp, &blocks)?;
            files.push(("structure.csv".into(), csv));
            if cfg.mode != Mode::Structure {
                let r = RunReport {
                    mode: cfg.mode,
                    blocks: blocks
                        .iter()
                        .zip(notes)
                        .map(|(b, note)| block_report(cfg, &exp, b, note))
                        .collect::<Result<_>>()?,
                };
                files.push(("report.json".into(), serde_json::to_vec_pretty(&r)?));
                if cfg.mode == Mode::Estimate {
                    let mut buf = Vec::new();
                    for b in &r.blocks {
                        for rep in b.sigma.iter().chain(&b.s) {
                            rep.write_csv(&mut buf)?;
                        }
                    }
                    files.push(("report.csv".into(), buf));
                }
                report = Some(r);
            }
        }
    }

    let mut checksums = BTreeMap::new();
    for (name, bytes) in &files {
        checksums.insert(name.clone(), hex::encode(Sha256::digest(bytes)));
    }
    if let Some(path) = &cfg.dump_omega {
        let plan = BlockPlan::new(cfg, 0, cfg.blocks()[0].0, cfg.blocks()[0].1)?;
        let omega = plan.omega(0, plan.resolutions().len() - 1)?;
        let mut buf = Vec::new();
        omega.write_dump(&mut buf)?;
        fs::write(path, &buf)?;
        checksums.insert(path.display().to_string(), hex::encode(Sha256::digest(&buf)));
    }
    let manifest = RunManifest {
        version: VERSION.into(),
        config: cfg.clone(),
        seeds,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        checksums,
    };
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir)?;
        for (name, bytes) in &files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, bytes)?;
        }
        fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    }
    Ok(RunOutcome {
        manifest,
        report,
        files,
    })
}

/// Path CSVs of every replicate; simulate mode keeps no structure values.
fn write_paths(
    cfg: &ExperimentConfig,
    plan: &BlockPlan,
    files: &mut Vec<(String, Vec<u8>)>,
) -> Result<Vec<ReplicateRecord>> {
    let all = with_threads(cfg.threads, || {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|r| plan.paths(r))
            .collect::<Result<Vec<_>>>()
    })??;
    for (r, paths) in all.into_iter().enumerate() {
        for (mrm, mrw) in paths {
            let n = mrm.resolution().n;
            let stem = format!("paths/b{}_r{r}_n{n}", plan.index);
            let mut buf = Vec::new();
            mrm.write_csv(&mut buf)?;
            files.push((format!("{stem}_mrm.csv"), buf));
            if let Some(w) = mrw {
                let mut buf = Vec::new();
                w.write_csv(&mut buf)?;
                files.push((format!("{stem}_mrw.csv"), buf));
            }
        }
    }
    Ok(Vec::new())
}

fn normalize(
    series: Vec<StructureSeries>,
    exp: &LevyExponent,
    what: &str,
    notes: &mut Vec<String>,
) -> Option<Vec<StructureSeries>> {
    match normalized_series(&series, exp) {
        Ok(s) => Some(s),
        Err(e) => {
            notes.push(format!("{what} not normalized: {e}"));
            None
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn structure_csv(
    cfg: &ExperimentConfig,
    exp: &LevyExponent,
    blocks: &[BlockResult],
) -> Result<(Vec<u8>, Vec<Option<String>>)> {
    let mut w = BufWriter::new(Vec::new());
    writeln!(w, "# mfscale {VERSION} structure functions")?;
    writeln!(w, "# mode: {}", cfg.mode)?;
    writeln!(w, "# family: {}", serde_json::to_string(&cfg.family)?)?;
    writeln!(w, "# T: {:?}", cfg.integral_scale)?;
    writeln!(w, "# oversampling: {}", cfg.oversampling)?;
    writeln!(w, "# sampling: {}", serde_json::to_string(&cfg.sampling)?)?;
    writeln!(w, "# master_seed: {}", cfg.master_seed)?;
    writeln!(w, "# replicates: {}", cfg.replicates)?;
    let mut block_notes = Vec::new();
    let mut rows = Vec::new();
    for b in blocks {
        let mut notes = Vec::new();
        let sigma: Vec<_> = b.records.iter().map(|r| r.sigma.clone()).collect();
        let sigma_norm = normalize(sigma, exp, "sigma", &mut notes);
        let s_all: Option<Vec<_>> = b.records.iter().map(|r| r.s.clone()).collect();
        let s_norm = s_all.and_then(|s| normalize(s, exp, "s", &mut notes));
        for note in &notes {
            writeln!(w, "# block {} (chi {:?}, t {:?}): {note}", b.plan_index, b.chi, b.t)?;
        }
        block_notes.push((!notes.is_empty()).then(|| notes.join("; ")));
        for (ri, rec) in b.records.iter().enumerate() {
            for (qi, &q) in cfg.q_values.iter().enumerate() {
                for (ni, &n) in cfg.n_values.iter().enumerate() {
                    let at = |s: &StructureSeries| s.values[qi][ni];
                    rows.push(format!(
                        "{},{:?},{:?},{:?},{},{:?},{},{},{},{}",
                        rec.seeds.replicate,
                        b.chi,
                        b.t,
                        q,
                        n,
                        at(&rec.sigma),
                        fmt_opt(sigma_norm.as_ref().map(|s| at(&s[ri]))),
                        fmt_opt(rec.s.as_ref().map(at)),
                        fmt_opt(s_norm.as_ref().map(|s| at(&s[ri]))),
                        fmt_opt(rec.mq.as_ref().map(|m| m[qi][ni])),
                    ));
                }
            }
        }
    }
    writeln!(w, "replicate,chi,t,q,n,sigma,sigma_normalized,s,s_normalized,mq")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok((bytes, block_notes))
}

fn block_report(
    cfg: &ExperimentConfig,
    exp: &LevyExponent,
    b: &BlockResult,
    normalization_note: Option<String>,
) -> Result<BlockReport> {
    let sigma: Vec<_> = b.records.iter().map(|r| r.sigma.clone()).collect();
    let s: Option<Vec<_>> = b.records.iter().map(|r| r.s.clone()).collect();
    let fitted = cfg.mode != Mode::Experiment(Preset::ChiInfinity);
    let per_rep = fitted && cfg.fit == FitMode::PerReplicate;

    let ensemble_fit = |series: &[StructureSeries]| -> Result<ScalingReport> {
        estimate_zeta(&summarize(series)?.mean, exp)
    };
    let each_fit = |series: &[StructureSeries]| -> Result<Vec<ScalingReport>> {
        series.iter().map(|x| estimate_zeta(x, exp)).collect()
    };

    let fixed_resolution = if fitted {
        None
    } else {
        let mut entries = Vec::new();
        for series in std::iter::once(&sigma).chain(s.as_ref()) {
            let mean = summarize(series)?.mean;
            for (qi, &q) in cfg.q_values.iter().enumerate() {
                let order = mean.order(qi);
                entries.push(FixedResolutionEntry {
                    q,
                    kind: mean.kind,
                    estimate: fixed_resolution_estimate(
                        mean.values[qi][0],
                        mean.values[qi][1],
                        mean.n_values[0],
                        mean.n_values[1],
                    )?,
                    limit: match mean.kind {
                        StructureKind::Sigma => q - exp.psi(q)? - 1.0,
                        StructureKind::S => 0.5 * order - exp.psi(0.5 * order)? - 1.0,
                    },
                });
            }
        }
        Some(entries)
    };

    let coupled = match b.records.first().and_then(|r| r.mq.as_ref()) {
        Some(_) if sigma.len() >= 2 => {
            let summary = summarize(&sigma)?;
            let mut entries = Vec::new();
            for (qi, &q) in cfg.q_values.iter().enumerate() {
                for (ni, &n) in cfg.n_values.iter().enumerate() {
                    let m = summary.mean.values[qi][ni];
                    let gaps: Vec<f64> = b
                        .records
                        .iter()
                        .map(|r| {
                            let mq = r.mq.as_ref().expect("every record is coupled");
                            (r.sigma.values[qi][ni] / m - mq[qi][ni]).abs()
                        })
                        .collect();
                    entries.push(CoupledEntry {
                        q,
                        n,
                        median_gap: stats::median(&gaps),
                    });
                }
            }
            Some(entries)
        }
        _ => None,
    };

    Ok(BlockReport {
        chi: b.chi,
        t: b.t,
        replicates: b.records.len() as u64,
        sigma: if fitted { Some(ensemble_fit(&sigma)?) } else { None },
        s: match (&s, fitted) {
            (Some(s), true) => Some(ensemble_fit(s)?),
            _ => None,
        },
        sigma_per_replicate: if per_rep { Some(each_fit(&sigma)?) } else { None },
        s_per_replicate: match (&s, per_rep) {
            (Some(s), true) => Some(each_fit(s)?),
            _ => None,
        },
        fixed_resolution,
        coupled,
        normalization_note,
    })
}

/// One closed-form value and its quadrature counterpart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryRow {
    pub quantity: String,
    pub parameters: String,
    pub closed_form: f64,
    pub oracle: f64,
}

impl GeometryRow {
    pub fn abs_error(&self) -> f64 {
        (self.closed_form - self.oracle).abs()
    }
}

const ORACLE_TOL: f64 = 1e-8;

/// Closed-form measures next to `oracle_mu` for a fixed set of cases.
pub fn geometry_table(integral_scale: f64, n: u32) -> Result<Vec<GeometryRow>> {
    let big_t = integral_scale;
    let s = (-(n as f64)).exp2();
    let cone = ConeSpec::new(big_t, s.min(big_t))?;
    let window = |tau: f64| Bounds::around_cone(&cone, 0.0, tau, 1e-7);
    let mut rows = vec![GeometryRow {
        quantity: "mu_cone".into(),
        parameters: format!("T={big_t:?} l={:?}", cone.cutoff()),
        closed_form: mu_cone(&cone),
        oracle: oracle_mu(regions::cone(cone, 0.0), window(0.0), ORACLE_TOL)?,
    }];
    for frac in [0.0, 0.5, 1.0, 0.25 * big_t / cone.cutoff(), 0.5 * big_t / cone.cutoff()] {
        let tau = frac * cone.cutoff();
        rows.push(GeometryRow {
            quantity: "mu_overlap".into(),
            parameters: format!("T={big_t:?} l={:?} tau={tau:?}", cone.cutoff()),
            closed_form: mu_overlap(&cone, tau),
            oracle: oracle_mu(regions::overlap(cone, 0.0, tau), window(tau), ORACLE_TOL)?,
        });
    }
    if big_t * (n as f64).exp2() >= 1.0 {
        let cell = Bounds {
            t_lo: 0.0,
            t_hi: s,
            integral_scale: big_t,
            l_min: s,
            l_max: 10.0 * big_t / 1e-7,
        };
        rows.push(GeometryRow {
            quantity: "mu_tilde".into(),
            parameters: format!("T={big_t:?} n={n}"),
            closed_form: mu_tilde(big_t, n)?,
            oracle: oracle_mu(regions::cell_core(big_t, n, 0), cell, ORACLE_TOL)?,
        });
        let p = PartitionSpec::new(n, 0.5)?;
        if p.m() < n && p.split_height() <= big_t {
            let u = 0.3 * s;
            for (name, upper, closed) in [
                ("mu_theta", true, mu_theta(&p)?),
                ("mu_beta", false, mu_beta(&p)?),
            ] {
                rows.push(GeometryRow {
                    quantity: name.into(),
                    parameters: format!("T={big_t:?} n={n} delta=0.5 u={u:?}"),
                    closed_form: closed,
                    oracle: oracle_mu(regions::remainder(big_t, p, u, upper), cell, ORACLE_TOL)?,
                });
            }
        }
    }
    Ok(rows)
}

fn geometry_csv(rows: &[GeometryRow]) -> Result<Vec<u8>> {
    let mut w = Vec::new();
    writeln!(w, "# closed-form cone measures against nested quadrature")?;
    writeln!(w, "quantity,parameters,closed_form,oracle,abs_error")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:?},{:?},{:?}",
            r.quantity,
            r.parameters,
            r.closed_form,
            r.oracle,
            r.abs_error()
        )?;
    }
    Ok(w)
}

/// The data lines of a CSV, without `#` comments.
pub fn csv_body(bytes: &[u8]) -> Vec<&[u8]> {
    bytes
        .split(|&b| b == b'\n')
        .filter(|line| !line.starts_with(b"#"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn small(mode: Mode) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(Family::Gaussian { variance: 0.2 });
        cfg.n_values = vec![3, 4, 5];
        cfg.q_values = vec![1.0, 2.0];
        cfg.replicates = 4;
        cfg.oversampling = 2;
        cfg.mode = mode;
        cfg.master_seed = 11;
        cfg
    }

    #[test]
    fn seed_examples() {
        assert_eq!(derive_seed(7, 3, 1), derive_seed(7, 3, 1));
        assert_ne!(
            derive_seed(7, 0, omega_tag(0, None)),
            derive_seed(7, 0, xi_tag(0, 0))
        );
        assert_ne!(omega_tag(0, Some(6)), omega_tag(0, Some(7)));
        assert_ne!(omega_tag(0, None), omega_tag(1, None));
    }

    #[test]
    fn million_seeds_distinct() {
        let mut seen = HashSet::with_capacity(1 << 21);
        for r in 0..500_000u64 {
            assert!(seen.insert(derive_seed(42, r, omega_tag(0, None))));
            assert!(seen.insert(derive_seed(42, r, xi_tag(0, 6))));
        }
        assert_eq!(seen.len(), 1_000_000);
    }

    #[test]
    fn mode_round_trip() {
        for m in [Mode::Simulate, Mode::Structure, Mode::Estimate, Mode::VerifyGeometry]
            .into_iter()
            .chain(Preset::ALL.map(Mode::Experiment))
        {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        assert!("experiment:bogus".parse::<Mode>().is_err());
    }

    #[test]
    fn config_file_parses() {
        let cfg = ExperimentConfig::parse_file_text(
            "family = \"gaussian\"\nvariance = 0.2\nn_values = [6, 8, 10]\nq_values = [1.5]\n\
             replicates = 20\nseed = 9\nsampling = \"shared\"\nmode = \"experiment:fine-resolution\"\n",
        )
        .unwrap();
        assert_eq!(cfg.family, Family::Gaussian { variance: 0.2 });
        assert_eq!(cfg.n_values, vec![6, 8, 10]);
        assert_eq!(cfg.master_seed, 9);
        assert_eq!(cfg.mode, Mode::Experiment(Preset::FineResolution));
        cfg.validate().unwrap();
        assert!(ExperimentConfig::parse_file_text("family = \"gaussian\"\nvariance = 1\nbogus = 3\n").is_err());
        assert!(ExperimentConfig::parse_file_text("variance = 1\n").is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = small(Mode::Estimate);
        base.validate().unwrap();
        let cases: Vec<Box<dyn Fn(&mut ExperimentConfig)>> = vec![
            Box::new(|c| c.replicates = 0),
            Box::new(|c| c.n_values.clear()),
            Box::new(|c| c.n_values = vec![5, 4, 6]),
            Box::new(|c| c.q_values = vec![-1.0]),
            Box::new(|c| c.q_values = vec![f64::NAN]),
            Box::new(|c| c.chi = -0.5),
            Box::new(|c| c.t = 0.0),
            Box::new(|c| {
                c.integral_scale = 0.01;
                c.n_values = vec![3, 8, 9];
            }),
            Box::new(|c| c.family = Family::Gaussian { variance: -1.0 }),
            Box::new(|c| c.n_values = vec![3, 4]),
            Box::new(|c| c.coupled = true),
            Box::new(|c| c.mode = Mode::Experiment(Preset::Mixed)),
            Box::new(|c| c.mode = Mode::Experiment(Preset::ChiInfinity)),
            Box::new(|c| {
                c.mode = Mode::Experiment(Preset::FineResolution);
                c.sampling = Sampling::Shared;
                c.chi = 1.0;
            }),
            Box::new(|c| c.n_values = vec![24, 25, 26]),
        ];
        for (i, mutate) in cases.iter().enumerate() {
            let mut c = base.clone();
            mutate(&mut c);
            match run_experiment(&c) {
                Err(Error::Validation(_)) => {}
                Err(e) => panic!("case {i}: wrong error {e}"),
                Ok(_) => panic!("case {i} accepted"),
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut cfg = small(Mode::Estimate);
        cfg.walk = true;
        let one = run_experiment(&cfg).unwrap();
        cfg.threads = 3;
        let three = run_experiment(&cfg).unwrap();
        assert_eq!(one.files, three.files);
        assert_eq!(one.manifest.seeds, three.manifest.seeds);
    }

    #[test]
    fn shared_grid_feeds_every_resolution() {
        let mut cfg = small(Mode::Experiment(Preset::FineResolution));
        cfg.sampling = Sampling::Shared;
        let plan = BlockPlan::new(&cfg, 0, 0.0, 1.0).unwrap();
        assert_eq!(plan.seeds(0).omega.len(), 1);
        let paths = plan.paths(0).unwrap();
        // Coarse increments are sums of fine ones on the same field.
        let (fine, coarse) = (paths[1].0.increments(), paths[0].0.increments());
        for (k, c) in coarse.iter().enumerate() {
            let sum = fine[2 * k] + fine[2 * k + 1];
            assert!((c - sum).abs() < 1e-12 * c);
        }
        let rec = plan.replicate(0).unwrap();
        let mq = rec.mq.unwrap();
        // At q = 1 the tilted field is the field itself.
        for (ni, p) in paths.iter().enumerate() {
            assert!((mq[0][ni] - mrm_total(&p.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn presets_write_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(Mode::Experiment(Preset::Mixed));
        cfg.chi_sweep = vec![0.0, 1.0];
        cfg.walk = true;
        cfg.output_dir = Some(dir.path().to_path_buf());
        let out = run_experiment(&cfg).unwrap();
        let report = out.report.unwrap();
        assert_eq!(report.blocks.len(), 2);
        assert!(report.blocks.iter().all(|b| b.sigma.is_some() && b.s.is_some()));
        for name in ["structure.csv", "report.json", "manifest.json"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let manifest: RunManifest =
            serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        let csv = fs::read(dir.path().join("structure.csv")).unwrap();
        assert_eq!(manifest.checksums["structure.csv"], hex::encode(Sha256::digest(&csv)));
        let data_rows = csv_body(&csv).iter().filter(|l| !l.is_empty()).count() - 1;
        assert_eq!(data_rows, 2 * 4 * 2 * 3);

        let reloaded = ExperimentConfig::load(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(reloaded, cfg);
        let again = run_experiment(&ExperimentConfig {
            output_dir: None,
            ..reloaded
        })
        .unwrap();
        assert_eq!(again.files[0].1, csv);
    }

    #[test]
    fn chi_infinity_reports_fixed_resolution() {
        let mut cfg = small(Mode::Experiment(Preset::ChiInfinity));
        cfg.n_values = vec![3, 4];
        cfg.t_sweep = vec![2.0, 4.0];
        let report = run_experiment(&cfg).unwrap().report.unwrap();
        for b in &report.blocks {
            let fr = b.fixed_resolution.as_ref().unwrap();
            assert_eq!(fr.len(), 2);
            // q = 1 has limit 0 and E[Sigma_n(1)] = span for every n.
            assert_eq!(fr[0].limit, 0.0);
            assert!(fr[0].estimate.abs() < 0.2);
        }
    }

    #[test]
    fn geometry_rows_agree() {
        for row in geometry_table(1.0, 4).unwrap() {
            assert!(row.abs_error() < 1e-6, "{row:?}");
        }
    }

    #[test]
    fn simulate_writes_paths() {
        let mut cfg = small(Mode::Simulate);
        cfg.replicates = 2;
        cfg.walk = true;
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.files.len(), 2 * 3 * 2);
        assert!(out.files[0].0.starts_with("paths/b0_r0_n3"));
    }

    #[test]
    fn omega_dump_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(Mode::Structure);
        cfg.replicates = 1;
        cfg.dump_omega = Some(dir.path().join("omega.bin"));
        run_experiment(&cfg).unwrap();
        let bytes = fs::read(dir.path().join("omega.bin")).unwrap();
        let (header, values) = crate::fields::read_omega_dump(&bytes[..]).unwrap();
        let plan = BlockPlan::new(&cfg, 0, 0.0, 1.0).unwrap();
        assert_eq!(values, plan.omega(0, 2).unwrap().values());
        assert_eq!(header.seed, plan.seeds(0).omega[2]);
    }
}
