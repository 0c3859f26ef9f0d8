//! Run configuration, pipelines and their file outputs.
//!
//! Every runner takes a validated [`RunConfig`], writes its files into the
//! output directory and returns an [`Outcome`] with a JSON summary.  CSV files
//! start with a `#` comment line carrying the tool version, the config hash
//! and the seed; JSON files carry the same line in a `header` field.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::corrector::{
    assemble_projected_system, build_symmetric_basis, correct, BasisSpec, CorrectionReport, CorrectorOptions,
};
use crate::energy::{
    energy_direct, find_optimal_radius, reduced_constants, reduced_energy, residual_surrogate, FieldOptions,
    MultiBumpAnsatz, Probe, ReducedConstants,
};
use crate::error::{Error, Result};
use crate::geometry::{default_beta, inverse_distance_sum, radius_window, BumpConfiguration};
use crate::groundstate::{load_or_compute, GroundStateProfile, GroundStateSettings, TestField};
use crate::interactions::{
    default_fit_separations, fit_interaction, interaction_ep, linear_fit, InteractionFit, InteractionModel,
};
use crate::multipole::AxialGridSpec;
use crate::potentials::{PotentialModel, PotentialVariant};
use crate::quadrature::QuadratureSpec;
use crate::sector::SectorResolution;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shape name of the external potential in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantName {
    Shifted,
    Soft,
    Capped,
    Constant,
}

/// `V` as written in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub variant: VariantName,
    pub a: f64,
    pub m: f64,
    /// Cap of the `capped` variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

impl PotentialConfig {
    pub fn model(&self) -> Result<PotentialModel> {
        let variant = match self.variant {
            VariantName::Shifted => PotentialVariant::Shifted,
            VariantName::Soft => PotentialVariant::Soft,
            VariantName::Capped => PotentialVariant::Capped {
                cap: self.cap.unwrap_or(1.0),
            },
            VariantName::Constant => PotentialVariant::Constant,
        };
        PotentialModel::new(variant, self.a, self.m)
    }
}

/// Corrector settings of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectorConfig {
    /// Run the corrector in sweeps.
    pub enabled: bool,
    pub basis: BasisSpec,
    pub tol: f64,
    pub max_iter: usize,
    pub include_nonlocal_hessian: bool,
    pub relaxation: f64,
}

impl Default for CorrectorConfig {
    fn default() -> Self {
        let o = CorrectorOptions::default();
        Self {
            enabled: true,
            basis: o.basis,
            tol: o.tol,
            max_iter: o.max_iter,
            include_nonlocal_hessian: o.include_nonlocal_hessian,
            relaxation: o.relaxation,
        }
    }
}

fn default_k_list() -> Vec<usize> {
    vec![8, 12, 16]
}

fn default_sweep_k_list() -> Vec<usize> {
    vec![25, 50, 100, 200]
}

fn default_residual_k_list() -> Vec<usize> {
    vec![8, 12, 16, 24, 32, 48, 64]
}

fn default_r_samples() -> usize {
    200
}

fn default_landscape_k() -> usize {
    16
}

fn default_correct_k() -> usize {
    8
}

fn default_seed() -> u64 {
    20240611
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_neighbours() -> usize {
    2
}

fn default_pair_far() -> f64 {
    20.0
}

fn default_true() -> bool {
    true
}

/// Validated configuration of every pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p: f64,
    pub potential: PotentialConfig,
    /// Half-width of the window in units of `k log k`; defaults to `0.1 m/π`.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Configurations of the term-wise energy comparison.
    #[serde(default = "default_k_list")]
    pub k_list: Vec<usize>,
    /// Polygon sizes of the optimum sweep.
    #[serde(default = "default_sweep_k_list")]
    pub sweep_k_list: Vec<usize>,
    /// Polygon sizes of the residual sweep.
    #[serde(default = "default_residual_k_list")]
    pub residual_k_list: Vec<usize>,
    #[serde(default = "default_r_samples")]
    pub r_samples: usize,
    #[serde(default = "default_landscape_k")]
    pub landscape_k: usize,
    /// Compute the direct energy terms in landscape rows.
    #[serde(default = "default_true")]
    pub landscape_direct: bool,
    #[serde(default = "default_correct_k")]
    pub correct_k: usize,
    /// Use the fitted interaction beyond the fast threshold.
    #[serde(default = "default_true")]
    pub fast_interaction: bool,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub ground_state: GroundStateSettings,
    #[serde(default)]
    pub sector: SectorResolution,
    #[serde(default)]
    pub axial: AxialGridSpec,
    #[serde(default = "default_neighbours")]
    pub neighbours: usize,
    #[serde(default = "default_pair_far")]
    pub pair_far: f64,
    #[serde(default)]
    pub corrector: CorrectorConfig,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            p: 3.0,
            potential: PotentialConfig {
                variant: VariantName::Shifted,
                a: 1.0,
                m: 2.0,
                cap: None,
            },
            beta: None,
            k_list: default_k_list(),
            sweep_k_list: default_sweep_k_list(),
            residual_k_list: default_residual_k_list(),
            r_samples: default_r_samples(),
            landscape_k: default_landscape_k(),
            landscape_direct: true,
            correct_k: default_correct_k(),
            fast_interaction: true,
            quadrature: QuadratureSpec::default(),
            ground_state: GroundStateSettings::default(),
            sector: SectorResolution::default(),
            axial: AxialGridSpec::default(),
            neighbours: default_neighbours(),
            pair_far: default_pair_far(),
            corrector: CorrectorConfig::default(),
            cache_dir: None,
            seed: default_seed(),
            out_dir: default_out_dir(),
        }
    }
}

impl RunConfig {
    /// Field-level validation messages; empty when valid.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let m = self.potential.m;
        if !(self.p > 1.0 && self.p < 5.0) {
            out.push(format!("p: must satisfy 1 < p < 5, got {}", self.p));
        }
        if self.potential.variant != VariantName::Constant && !(m > 1.5) {
            out.push(format!("potential.m: must satisfy m > 3/2, got {m}"));
        }
        if !(self.potential.a > 0.0 && self.potential.a.is_finite()) {
            out.push(format!("potential.a: must be positive, got {}", self.potential.a));
        }
        if let Some(cap) = self.potential.cap {
            if self.potential.variant != VariantName::Capped {
                out.push("potential.cap: only valid for the capped variant".into());
            } else if !(cap > 0.0 && cap.is_finite()) {
                out.push(format!("potential.cap: must be positive, got {cap}"));
            }
        }
        if let Some(beta) = self.beta {
            if !(beta > 0.0 && beta < m / PI) {
                out.push(format!("beta: must satisfy 0 < beta < m/π = {}, got {beta}", m / PI));
            }
        }
        for (name, list) in [
            ("k_list", &self.k_list),
            ("sweep_k_list", &self.sweep_k_list),
            ("residual_k_list", &self.residual_k_list),
        ] {
            if list.is_empty() {
                out.push(format!("{name}: must not be empty"));
            }
            if let Some(k) = list.iter().find(|&&k| k < 2) {
                out.push(format!("{name}: entries must be at least 2, got {k}"));
            }
        }
        for (name, k) in [("landscape_k", self.landscape_k), ("correct_k", self.correct_k)] {
            if k < 2 {
                out.push(format!("{name}: must be at least 2, got {k}"));
            }
        }
        if self.r_samples < 3 {
            out.push(format!("r_samples: must be at least 3, got {}", self.r_samples));
        }
        if !(self.quadrature.rel_tol > 0.0 && self.quadrature.rel_tol < 1.0) {
            out.push(format!("quadrature.rel_tol: must lie in (0, 1), got {}", self.quadrature.rel_tol));
        }
        if !(self.ground_state.h > 0.0 && self.ground_state.r_max >= 20.0 && self.ground_state.tol > 0.0) {
            out.push("ground_state: need h > 0, r_max >= 20 and tol > 0".into());
        }
        if !(self.corrector.tol > 0.0) || self.corrector.max_iter == 0 {
            out.push("corrector: need tol > 0 and max_iter >= 1".into());
        }
        if !(self.corrector.relaxation > 0.0 && self.corrector.relaxation <= 1.0) {
            out.push(format!(
                "corrector.relaxation: must lie in (0, 1], got {}",
                self.corrector.relaxation
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(problems))
        }
    }

    pub fn m(&self) -> f64 {
        self.potential.m
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or_else(|| default_beta(self.m()))
    }

    /// Sets the evaluation budget of every quadrature.
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.quadrature.max_evals = budget;
        self
    }

    pub fn field_options(&self) -> FieldOptions {
        FieldOptions {
            spec: self.quadrature,
            sector: self.sector,
            axial: self.axial,
            neighbours: self.neighbours,
            pair_far: self.pair_far,
        }
    }

    pub fn corrector_options(&self) -> CorrectorOptions {
        CorrectorOptions {
            fields: self.field_options(),
            basis: self.corrector.basis,
            tol: self.corrector.tol,
            max_iter: self.corrector.max_iter,
            include_nonlocal_hessian: self.corrector.include_nonlocal_hessian,
            relaxation: self.corrector.relaxation,
        }
    }

    /// SHA-256 of the canonical JSON of the configuration, output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        let text = serde_json::to_string(&c).expect("configuration serialises");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Comment line identifying the tool, the configuration and the seed.
    pub fn header(&self) -> String {
        format!("spmb {TOOL_VERSION} config={} seed={}", &self.hash()[..16], self.seed)
    }
}

/// Reads and validates a JSON configuration; `None` gives the defaults.
pub fn parse_config(path: Option<&Path>) -> Result<RunConfig> {
    let config = match path {
        None => RunConfig::default(),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::ConfigInvalid(vec![format!("{}: {e}", path.display())]))?;
            parse_config_str(&text)?
        }
    };
    config.validate()?;
    Ok(config)
}

/// Parses and validates configuration text.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(vec![e.to_string()]))?;
    config.validate()?;
    Ok(config)
}

/// Result of one pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_json(config: &RunConfig, name: &str, body: Value) -> Result<PathBuf> {
    ensure_dir(&config.out_dir)?;
    let path = config.out_dir.join(name);
    let doc = json!({ "header": config.header(), "body": body });
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_string_pretty(&doc)? + "\n")?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

fn write_csv(config: &RunConfig, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    ensure_dir(&config.out_dir)?;
    let path = config.out_dir.join(name);
    let mut file = fs::File::create(&path)?;
    writeln!(file, "# {}", config.header())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(columns)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(path)
}

/// Profile, interaction model inputs and constants shared by the pipelines.
pub struct Context {
    pub config: RunConfig,
    pub profile: GroundStateProfile,
    pub potential: PotentialModel,
}

impl Context {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let profile = load_or_compute(config.p, config.ground_state, config.cache_dir.as_deref())?;
        Ok(Self {
            config: config.clone(),
            potential: config.potential.model()?,
            profile,
        })
    }

    pub fn fit(&self) -> Result<InteractionFit> {
        fit_interaction(&self.profile, &default_fit_separations(), &self.config.quadrature)
    }

    pub fn model(&self, fit: Option<InteractionFit>) -> InteractionModel<'_> {
        match fit {
            Some(fit) if self.config.fast_interaction => InteractionModel::fast(&self.profile, fit, self.config.quadrature),
            _ => InteractionModel::quadrature(&self.profile, self.config.quadrature),
        }
    }

    pub fn constants(&self) -> Result<ReducedConstants> {
        reduced_constants(&self.profile, &self.config.quadrature)
    }

    /// `r = (m/π) k log k`.
    pub fn central_radius(&self, k: usize) -> f64 {
        let kf = k as f64;
        self.config.m() / PI * kf * kf.ln()
    }

    pub fn ansatz(&self, k: usize, r: f64) -> Result<MultiBumpAnsatz<'_>> {
        Ok(MultiBumpAnsatz::new(BumpConfiguration::new(k, r)?, &self.profile, self.potential))
    }
}

/// Profile file and its identities.
pub fn run_ground_state(config: &RunConfig) -> Result<Outcome> {
    let ctx = Context::new(config)?;
    let u = &ctx.profile;
    ensure_dir(&config.out_dir)?;
    let profile_path = config.out_dir.join(format!("ground_state_p{}.spmbu", config.p));
    u.write_to(&profile_path)?;
    let norm = u.energy_norm_sq();
    let summary = json!({
        "p": u.exponent(),
        "center_value": u.center_value(),
        "decay_constant": u.decay_constant(),
        "energy_norm_sq": norm,
        "mass": u.integral_moment(2.0),
        "energy_identity_residual": u.energy_identity_residual(),
        "pohozaev_residual": u.pohozaev_residual(),
        "decay_plateau": u.decay_plateau(u.r_max() - 5.0),
        "ode_residual_max": u.ode_residual_max(),
        "q_u_ratio": u.quadratic_form_q(&TestField::Profile) / norm,
        "q_u1_ratio": u.quadratic_form_q(&TestField::Derivative) / u.field_norm_sq(&TestField::Derivative),
    });
    let json_path = write_json(config, "ground_state.json", summary.clone())?;
    Ok(Outcome {
        passed: true,
        files: vec![profile_path, json_path],
        summary,
    })
}

/// Reduced constants with the interaction fit.
pub fn run_constants(config: &RunConfig) -> Result<Outcome> {
    let ctx = Context::new(config)?;
    let constants = ctx.constants()?;
    let fit = ctx.fit()?;
    let summary = json!({
        "constants": constants,
        "interaction_prefactor": fit.prefactor,
        "analytic_interaction_prefactor": fit.analytic_prefactor,
    });
    let path = write_json(config, "constants.json", summary.clone())?;
    Ok(Outcome {
        passed: [constants.c0, constants.b1, constants.b2, constants.b3].iter().all(|&c| c > 0.0),
        files: vec![path],
        summary,
    })
}

/// Interaction samples over the fit window and the fitted law.
pub fn run_interaction(config: &RunConfig) -> Result<Outcome> {
    let ctx = Context::new(config)?;
    let fit = ctx.fit()?;
    let ds: Vec<f64> = (0..=24).map(|i| 6.0 + 0.5 * i as f64).collect();
    let values = ds
        .par_iter()
        .map(|&d| interaction_ep(&ctx.profile, d, &config.quadrature))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<String>> = ds
        .iter()
        .zip(&values)
        .map(|(&d, &v)| {
            vec![
                fmt_f64(d),
                fmt_f64(v),
                fmt_f64(d * d.exp() * v),
                fmt_f64(fit.prefactor * (-d).exp() / d),
            ]
        })
        .collect();
    let csv = write_csv(config, "interaction.csv", &["d", "I", "d_exp_d_I", "fit"], &rows)?;
    let summary = json!({ "fit": fit });
    let json = write_json(config, "interaction_fit.json", summary.clone())?;
    Ok(Outcome {
        passed: true,
        files: vec![csv, json],
        summary,
    })
}

/// Landscape columns.
pub const LANDSCAPE_COLUMNS: [&str; 8] = [
    "k",
    "r",
    "F_reduced",
    "F_bar",
    "kinetic_mass",
    "nonlocal",
    "nonlinear",
    "neglected_bound",
];

/// `F̄(r)` over the window of one `k`.
pub fn run_landscape(config: &RunConfig, k: usize) -> Result<Outcome> {
    let ctx = Context::new(config)?;
    let constants = ctx.constants()?;
    let fit = ctx.fit()?;
    let model = ctx.model(Some(fit));
    let m = config.m();
    let window = radius_window(m, config.beta(), k)?;
    let radii = window.samples(config.r_samples);
    let opts = ctx.config.field_options();
    let rows = radii
        .par_iter()
        .map(|&r| -> Result<(f64, Vec<String>)> {
            let e = reduced_energy(k, r, &constants, m, &model)?;
            let mut row = vec![k.to_string(), fmt_f64(r), fmt_f64(e.total), fmt_f64(e.fbar)];
            let direct = if config.landscape_direct {
                match energy_direct(&ctx.ansatz(k, r)?, &model, &opts) {
                    Ok(d) => Some(d),
                    Err(Error::GapTooSmall { .. }) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            match direct {
                Some(d) => row.extend([d.kinetic_mass, d.nonlocal, d.nonlinear, d.neglected_bound].map(fmt_f64)),
                None => row.extend(std::iter::repeat(String::new()).take(4)),
            }
            Ok((e.fbar, row))
        })
        .collect::<Result<Vec<_>>>()?;
    let fbar: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let slopes: Vec<f64> = fbar.windows(2).map(|w| w[1] - w[0]).collect();
    let sign_changes = slopes
        .windows(2)
        .filter(|w| w[0] != 0.0 && w[1] != 0.0 && w[0].signum() != w[1].signum())
        .count();
    let name = format!("landscape_k{k}.csv");
    let rows: Vec<Vec<String>> = rows.into_iter().map(|r| r.1).collect();
    let path = write_csv(config, &name, &LANDSCAPE_COLUMNS, &rows)?;
    let opt = find_optimal_radius(&window, &constants, m, &model, config.r_samples)?;
    Ok(Outcome {
        passed: true,
        files: vec![path],
        summary: json!({
            "k": k,
            "window": [window.lo, window.hi],
            "derivative_sign_changes": sign_changes,
            "optimum": opt,
            "fbar_lo": fbar.first(),
            "fbar_hi": fbar.last(),
        }),
    })
}

/// Sweep columns.
pub const SWEEP_COLUMNS: [&str; 7] = ["k", "r_k", "ratio", "interior", "w_norm", "residual_before", "residual_after"];

/// Reads the rows of an existing file whose header matches, keyed by `k`.
fn existing_rows(path: &Path, header: &str, columns: &[&str]) -> BTreeMap<usize, Vec<String>> {
    let mut rows = BTreeMap::new();
    let Ok(file) = fs::File::open(path) else {
        return rows;
    };
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(first)) if first == format!("# {header}") => {}
        _ => return rows,
    }
    let rest: String = lines.map_while(|l| l.ok()).collect::<Vec<_>>().join("\n");
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(rest.as_bytes());
    match reader.headers() {
        Ok(h) if h.iter().eq(columns.iter().copied()) => {}
        _ => return rows,
    }
    for record in reader.records() {
        let Ok(record) = record else { break };
        if record.len() != columns.len() {
            break;
        }
        let Ok(k) = record[0].parse::<usize>() else { break };
        rows.insert(k, record.iter().map(String::from).collect());
    }
    rows
}

/// Writes rows keyed by `k` in ascending order, computing missing ones
/// concurrently and flushing each row as soon as its predecessors exist.
fn resumable_csv(
    config: &RunConfig,
    name: &str,
    columns: &[&str],
    ks: &[usize],
    compute: impl Fn(usize) -> Result<Vec<String>> + Sync,
) -> Result<(PathBuf, Vec<Vec<String>>, usize)> {
    ensure_dir(&config.out_dir)?;
    let path = config.out_dir.join(name);
    let header = config.header();
    let mut ks: Vec<usize> = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut done = existing_rows(&path, &header, columns);
    done.retain(|k, _| ks.contains(k));
    let reused = done.len();
    let missing: Vec<usize> = ks.iter().copied().filter(|k| !done.contains_key(k)).collect();

    let mut file = fs::File::create(&path)?;
    writeln!(file, "# {header}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(columns)?;
    let mut out = Vec::with_capacity(ks.len());
    let mut next = 0;
    let mut pending: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut flush_ready = |w: &mut csv::Writer<fs::File>,
                           pending: &mut BTreeMap<usize, Vec<String>>,
                           out: &mut Vec<Vec<String>>|
     -> Result<()> {
        while next < ks.len() {
            let k = ks[next];
            let row = if let Some(row) = done.get(&k) {
                row.clone()
            } else if let Some(row) = pending.remove(&k) {
                row
            } else {
                break;
            };
            w.write_record(&row)?;
            w.flush()?;
            out.push(row);
            next += 1;
        }
        Ok(())
    };
    flush_ready(&mut w, &mut pending, &mut out)?;
    let (tx, rx) = mpsc::channel();
    let mut first_error = None;
    std::thread::scope(|s| {
        let compute = &compute;
        let missing = &missing;
        s.spawn(move || {
            missing.par_iter().for_each_with(tx, |tx, &k| {
                let _ = tx.send((k, compute(k)));
            });
        });
        for (k, result) in rx {
            match result {
                Ok(row) => {
                    pending.insert(k, row);
                    if first_error.is_none() {
                        if let Err(e) = flush_ready(&mut w, &mut pending, &mut out) {
                            first_error = Some(e);
                        }
                    }
                }
                Err(e) => {
                    log::error!("row k = {k} failed: {e}");
                    if first_error.is_none() {
                        first_error = Some(e);
                    }
                }
            }
        }
    });
    if let Some(e) = first_error {
        return Err(e);
    }
    Ok((path, out, reused))
}

/// Optimal radius per `k` with the corrector at `r_k`.
pub fn run_sweep(config: &RunConfig) -> Result<Outcome> {
    let ctx = Context::new(config)?;
    let constants = ctx.constants()?;
    let fit = ctx.fit()?;
    let model = ctx.model(Some(fit));
    let m = config.m();
    let probes = Probe::default_set();
    let copts = config.corrector_options();
    let (path, rows, reused) = resumable_csv(config, "optimum_sweep.csv", &SWEEP_COLUMNS, &config.sweep_k_list, |k| {
        let window = radius_window(m, config.beta(), k)?;
        let opt = find_optimal_radius(&window, &constants, m, &model, config.r_samples)?;
        let mut row = vec![
            k.to_string(),
            fmt_f64(opt.r),
            fmt_f64(opt.ratio),
            opt.interior.to_string(),
        ];
        if config.corrector.enabled {
            let rep = correct(&ctx.ansatz(k, opt.r)?, &probes, &copts)?;
            row.extend([
                fmt_f64(rep.fixed_point.w_norm),
                fmt_f64(rep.residual_before.value),
                fmt_f64(rep.residual_after.value),
            ]);
        } else {
            row.extend(std::iter::repeat(String::new()).take(3));
        }
        Ok(row)
    })?;
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r[2].parse().ok()).collect();
    let target = m / PI;
    let drifting = ratios
        .windows(2)
        .all(|w| (w[1] - target).abs() < (w[0] - target).abs());
    Ok(Outcome {
        passed: true,
        files: vec![path],
        summary: json!({
            "rows": rows.len(),
            "reused_rows": reused,
            "ratios": ratios,
            "target_ratio": target,
            "drifts_toward_target": drifting,
        }),
    })
}

/// Residual columns.
pub const RESIDUAL_COLUMNS: [&str; 6] = ["k", "r", "residual", "bump_sum", "gaussian_sigma1", "gaussian_sigma2"];

/// Residual surrogate at `r = (m/π) k log k` per `k`.
pub fn run_residual_sweep(config: &RunConfig) -> Result<Outcome> {
    let ctx = Context::new(config)?;
    let opts = config.field_options();
    let probes = Probe::default_set();
    let (path, rows, reused) =
        resumable_csv(config, "residual_sweep.csv", &RESIDUAL_COLUMNS, &config.residual_k_list, |k| {
            let r = ctx.central_radius(k);
            let rep = residual_surrogate(&ctx.ansatz(k, r)?, &probes, &opts)?;
            let mut row = vec![k.to_string(), fmt_f64(r), fmt_f64(rep.value)];
            row.extend(rep.probes.iter().map(|p| fmt_f64(p.value)));
            Ok(row)
        })?;
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| Some(((r[0].parse::<f64>().ok()?).ln(), r[2].parse::<f64>().ok()?.ln())))
        .unzip();
    let slope = if x.len() >= 2 { linear_fit(&x, &y).0 } else { f64::NAN };
    Ok(Outcome {
        passed: true,
        files: vec![path],
        summary: json!({ "rows": rows.len(), "reused_rows": reused, "log_log_slope": slope }),
    })
}

/// Corrector at `k` and `r` (default `r = (m/π) k log k`).
pub fn run_correct(config: &RunConfig, k: usize, r: Option<f64>) -> Result<Outcome> {
    let ctx = Context::new(config)?;
    let r = r.unwrap_or_else(|| ctx.central_radius(k));
    let rep: CorrectionReport = correct(&ctx.ansatz(k, r)?, &Probe::default_set(), &config.corrector_options())?;
    let summary = serde_json::to_value(&rep)?;
    let path = write_json(config, &format!("correct_k{k}.json"), summary.clone())?;
    Ok(Outcome {
        passed: rep.spectral.holds && rep.fixed_point.converged,
        files: vec![path],
        summary,
    })
}

/// One named check of the verification suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub threshold: String,
    pub measured: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Suite {
    checks: Vec<CheckResult>,
}

impl Suite {
    fn run(&mut self, name: &str, threshold: &str, f: impl FnOnce() -> Result<(bool, Value)>) {
        let (passed, measured, error) = match f() {
            Ok((passed, measured)) => (passed, measured, None),
            Err(e) => (false, Value::Null, Some(e.to_string())),
        };
        log::info!("check {name}: {}", if passed { "pass" } else { "FAIL" });
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed,
            threshold: threshold.to_string(),
            measured,
            error,
        });
    }
}

fn shared<T: Clone>(r: &Result<T>) -> Result<T> {
    r.as_ref().map(T::clone).map_err(Error::upstream)
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Runs the verification suite in dependency order and writes `verify_report.json`.
pub fn run_verify(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    let mut suite = Suite { checks: Vec::new() };
    let ctx = match Context::new(config) {
        Ok(ctx) => Some(ctx),
        Err(e) => {
            suite.run("ground_state", "profile computed", || Err(e));
            None
        }
    };
    if let Some(ctx) = &ctx {
        verify_with(ctx, &mut suite);
    }
    let passed = suite.checks.iter().filter(|c| c.passed).count();
    let failed = suite.checks.len() - passed;
    let body = json!({
        "version": TOOL_VERSION,
        "config_hash": config.hash(),
        "seed": config.seed,
        "passed": passed,
        "failed": failed,
        "checks": suite.checks,
    });
    let path = write_json(config, "verify_report.json", body.clone())?;
    Ok(Outcome {
        passed: failed == 0,
        files: vec![path],
        summary: json!({ "passed": passed, "failed": failed, "report": body["checks"].clone() }),
    })
}

fn verify_with(ctx: &Context, suite: &mut Suite) {
    let config = &ctx.config;
    let u = &ctx.profile;
    let p = config.p;
    let norm = u.energy_norm_sq();

    suite.run("ground_state_energy_identity", "< 1e-4", || {
        let v = u.energy_identity_residual();
        Ok((v < 1e-4, json!(v)))
    });
    suite.run("ground_state_pohozaev", "< 1e-3", || {
        let v = u.pohozaev_residual();
        Ok((v < 1e-3, json!(v)))
    });
    suite.run("ground_state_decay_plateau", "< 0.01 over [r_max - 5, r_max]", || {
        let v = u.decay_plateau(u.r_max() - 5.0);
        Ok((v < 0.01, json!(v)))
    });
    suite.run("ground_state_ode_residual", "< 1e-6 U(0)", || {
        let v = u.ode_residual_max();
        Ok((v < 1e-6 * u.center_value(), json!(v)))
    });
    suite.run("nondegeneracy_profile", "|Q[U]/‖U‖² - (1-p)| < 1e-3", || {
        let v = u.quadratic_form_q(&TestField::Profile) / norm;
        Ok(((v - (1.0 - p)).abs() < 1e-3, json!(v)))
    });
    suite.run("nondegeneracy_translation", "|Q[U_1]| < 1e-3 ‖U_1‖²", || {
        let v = u.quadratic_form_q(&TestField::Derivative) / u.field_norm_sq(&TestField::Derivative);
        Ok((v.abs() < 1e-3, json!(v)))
    });
    suite.run("cache_round_trip", "bit-identical samples", || {
        let dir = std::env::temp_dir().join(format!("spmb-verify-{}", std::process::id()));
        fs::create_dir_all(&dir)?;
        let path = dir.join("profile.spmbu");
        u.write_to(&path)?;
        let back = GroundStateProfile::read_from(&path);
        let _ = fs::remove_dir_all(&dir);
        let back = back?;
        let same = back.values() == u.values()
            && back.derivatives() == u.derivatives()
            && back.decay_constant() == u.decay_constant();
        Ok((same, json!(same)))
    });
    suite.run("inverse_distance_sum", "< 0.08 at k = 1e6, decreasing over 1e3..1e6", || {
        let gaps = [1_000usize, 10_000, 100_000, 1_000_000]
            .iter()
            .map(|&k| {
                let kf = k as f64;
                Ok((PI * inverse_distance_sum(k, 1.0)?.exact / (kf * kf.ln()) - 1.0).abs())
            })
            .collect::<Result<Vec<f64>>>()?;
        let ok = gaps[3] < 0.08 && gaps.windows(2).all(|w| w[1] < w[0]);
        Ok((ok, json!(gaps)))
    });

    let fit = match ctx.fit() {
        Ok(fit) => Some(fit),
        Err(e) => {
            suite.run("interaction_fit", "fit computed", || Err(e));
            None
        }
    };
    if let Some(fit) = &fit {
        suite.run("interaction_slope", "|slope + 1| < 0.02", || {
            Ok(((fit.slope + 1.0).abs() < 0.02, json!(fit.slope)))
        });
        suite.run("interaction_plateau", "d e^d I(d) at 10 and 12 within 3%", || {
            let a = 10.0 * 10f64.exp() * interaction_ep(u, 10.0, &config.quadrature)?;
            let b = 12.0 * 12f64.exp() * interaction_ep(u, 12.0, &config.quadrature)?;
            Ok((rel_gap(a, b) < 0.03, json!([a, b])))
        });
        suite.run("interaction_prefactor", "fitted vs analytic within 3%", || {
            let g = rel_gap(fit.prefactor, fit.analytic_prefactor);
            Ok((g < 0.03, json!([fit.prefactor, fit.analytic_prefactor])))
        });
    }

    let constants = ctx.constants();
    suite.run("reduced_constants_positive", "C0, B1, B2, B3 > 0", || {
        let c = shared(&constants)?;
        Ok(([c.c0, c.b1, c.b2, c.b3].iter().all(|&v| v > 0.0), json!(c)))
    });

    // Leading-order term families, with V exactly a / r^m away from the origin.
    let k0 = config.k_list[0];
    let capped = PotentialModel::new(PotentialVariant::Capped { cap: 1.0 }, config.potential.a, config.m());
    let model = ctx.model(fit.clone());
    let direct = capped.and_then(|v| {
        let r = ctx.central_radius(k0);
        let ansatz = MultiBumpAnsatz::new(BumpConfiguration::new(k0, r)?, u, v);
        energy_direct(&ansatz, &model, &config.field_options())
    });
    suite.run("energy_bookkeeping", "total = kinetic_mass + nonlocal - nonlinear", || {
        let e = shared(&direct)?;
        let err = (e.total - (e.kinetic_mass + e.nonlocal - e.nonlinear)).abs();
        Ok((err <= 1e-12 * e.total.abs() && e.nonlocal >= 0.0, json!(err)))
    });
    suite.run("energy_kinetic_cross", "within 10% of the asymptotic sum", || {
        let e = shared(&direct)?;
        let g = rel_gap(e.kinetic_cross, e.kinetic_cross_asymptotic);
        Ok((g < 0.10, json!({ "k": k0, "gap": g })))
    });
    suite.run("energy_nonlocal_diagonal", "within 20% of k 4 B1 / r^{2m}", || {
        let e = shared(&direct)?;
        let g = rel_gap(e.nonlocal_diagonal, e.nonlocal_diagonal_asymptotic);
        Ok((g < 0.20, json!({ "k": k0, "gap": g })))
    });
    suite.run("energy_nonlocal_self_cross", "within 30% of k 4 B2 k log k / r^{2m+1}", || {
        let e = shared(&direct)?;
        let g = rel_gap(e.nonlocal_self_cross, e.nonlocal_self_cross_asymptotic);
        Ok((g < 0.30, json!({ "k": k0, "gap": g })))
    });

    suite.run("landscape_endpoints", "F̄(lo) < 0 < F̄(hi) and maximiser in the window for k ≥ 16", || {
        let c = shared(&constants)?;
        let mut rows = Vec::new();
        let mut ok = true;
        let mut first_interior = None;
        for &k in &config.sweep_k_list {
            let window = radius_window(config.m(), config.beta(), k)?;
            let opt = find_optimal_radius(&window, &c, config.m(), &model, config.r_samples)?;
            let signs = opt.fbar_lo < 0.0 && opt.fbar_hi > 0.0;
            let max_ok = window.contains(opt.r) && opt.fbar >= opt.fbar_lo && opt.fbar >= opt.fbar_hi;
            if k >= 16 {
                ok &= signs && max_ok;
            }
            if opt.interior && first_interior.is_none() {
                first_interior = Some(k);
            }
            rows.push(json!({ "k": k, "r_k": opt.r, "ratio": opt.ratio, "interior": opt.interior,
                              "fbar_lo": opt.fbar_lo, "fbar_hi": opt.fbar_hi }));
        }
        Ok((ok, json!({ "rows": rows, "smallest_interior_k": first_interior })))
    });

    suite.run("residual_exact_solution", "< 1e-8 for V = 0, k = 1", || {
        let a = MultiBumpAnsatz::new(BumpConfiguration::single(0.0)?, u, PotentialModel::constant(0.0));
        let v = residual_surrogate(&a, &Probe::default_set(), &config.field_options())?.value;
        Ok((v < 1e-8, json!(v)))
    });

    let kc = config.correct_k;
    let copts = config.corrector_options();
    suite.run("basis_symmetry", "< 1e-12 at 64 random points", || {
        let basis = build_symmetric_basis(BumpConfiguration::new(kc, ctx.central_radius(kc))?, u, &copts.basis)?;
        let d = basis.symmetry_defect(64, config.seed);
        Ok((d < 1e-12, json!(d)))
    });
    let ansatz = ctx.ansatz(kc, ctx.central_radius(kc));
    let report = ansatz.and_then(|a| correct(&a, &Probe::default_set(), &copts));
    suite.run("projected_system", "Hessian asymmetry and j = 2, 3 constraint rows < 1e-8", || {
        let a = ctx.ansatz(kc, ctx.central_radius(kc))?;
        let basis = build_symmetric_basis(a.config, u, &copts.basis)?;
        let sys = assemble_projected_system(&basis, &a, &copts)?;
        Ok((
            sys.symmetry_defect < 1e-8 && sys.aux_constraint_ratio < 1e-8,
            json!({ "symmetry_defect": sys.symmetry_defect, "aux_constraint_ratio": sys.aux_constraint_ratio,
                    "gram_condition": sys.gram_condition }),
        ))
    });
    suite.run("spectral_split", "bump Rayleigh ≤ (1-p) + 0.1, complement > 0", || {
        let rep = shared(&report)?;
        let s = &rep.spectral;
        Ok((
            s.holds && s.bump_rayleigh <= (1.0 - p) + 0.1,
            json!({ "bump_rayleigh": s.bump_rayleigh, "c2_hat": s.c2_hat, "inverse_bound": s.inverse_bound }),
        ))
    });
    suite.run("fixed_point_contraction", "converged, ratio < 0.5, ‖w‖/‖z‖ < 0.05", || {
        let rep = shared(&report)?;
        let f = &rep.fixed_point;
        let rel = f.w_norm / f.z_norm;
        Ok((
            f.converged && f.max_ratio < 0.5 && rel < 0.05 && f.first_iterate_norm <= f.first_iterate_bound * (1.0 + 1e-9),
            json!({ "max_ratio": f.max_ratio, "w_over_z": rel, "iterations": f.history.len(),
                    "first_iterate_norm": f.first_iterate_norm, "first_iterate_bound": f.first_iterate_bound }),
        ))
    });
    suite.run("residual_improvement", "after ≤ 0.2 before", || {
        let rep = shared(&report)?;
        let (b, a) = (rep.residual_before.value, rep.residual_after.value);
        Ok((a <= 0.2 * b, json!([b, a])))
    });
    suite.run("corrected_positivity", "min (z_r + w) > 0", || {
        let rep = shared(&report)?;
        Ok((rep.fixed_point.min_corrected > 0.0, json!(rep.fixed_point.min_corrected)))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str(r#"{"p": 3, "potential": {"variant": "shifted", "a": 1, "m": 2}}"#).unwrap();
        assert_eq!(c.k_list, vec![8, 12, 16]);
        assert!((c.beta() - 0.2 / PI).abs() < 1e-15);
        assert_eq!(c.r_samples, 200);
    }

    #[test]
    fn invalid_fields_are_reported() {
        let e = parse_config_str(r#"{"p": 3, "potential": {"variant": "shifted", "a": 1, "m": 1.2}}"#).unwrap_err();
        match e {
            Error::ConfigInvalid(v) => assert!(v.iter().any(|s| s.contains("m > 3/2"))),
            _ => panic!("{e}"),
        }
        let beta = 2.0 / PI;
        let text = format!(r#"{{"p": 3, "potential": {{"variant": "shifted", "a": 1, "m": 2}}, "beta": {beta}}}"#);
        assert!(matches!(parse_config_str(&text), Err(Error::ConfigInvalid(_))));
        let e = parse_config_str(r#"{"p": 3, "potential": {"variant": "shifted", "a": 1, "m": 2}, "colour": 1}"#);
        assert!(matches!(e, Err(Error::ConfigInvalid(_))));
        let e = parse_config_str(r#"{"p": 5, "potential": {"variant": "soft", "a": 1, "m": 2}, "k_list": [1]}"#);
        match e {
            Err(Error::ConfigInvalid(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.out_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn resumable_csv_keeps_existing_rows() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig {
            out_dir: dir.path().to_path_buf(),
            ..RunConfig::default()
        };
        let calls = std::sync::atomic::AtomicUsize::new(0);
        let row = |k: usize| -> Result<Vec<String>> {
            calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            Ok(vec![k.to_string(), fmt_f64(k as f64 * 0.5)])
        };
        let (path, _, _) = resumable_csv(&config, "t.csv", &["k", "x"], &[2, 3], row).unwrap();
        let first = fs::read_to_string(&path).unwrap();
        let (_, rows, reused) = resumable_csv(&config, "t.csv", &["k", "x"], &[2, 3, 5], row).unwrap();
        assert_eq!(reused, 2);
        assert_eq!(rows.len(), 3);
        assert_eq!(calls.load(std::sync::atomic::Ordering::SeqCst), 3);
        let second = fs::read_to_string(&path).unwrap();
        assert!(second.starts_with(&first));
    }
}
