//! Named, reproducible experiment runs: a JSON config in, a run directory with
//! a full JSON report, CSV tables and a plain-text summary out.

mod export;
mod runs;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::derivation::{max_order, Side};
use crate::error::{Error, Result};
use crate::fiber::{on_whitelist, HeisenbergGrid};
use crate::hermite::{HermiteContext, OperatorMatrix};
use crate::rbound::SignMode;
use crate::weyl::{calibrate, CalibrationRecord, PhaseGrid, WeylEngine, MIN_ANGLES};

pub use export::{export_matrix, named_matrix};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// (name, one-line description) of every experiment.
pub const EXPERIMENTS: [(&str, &str); 16] = [
    ("mauceri-check", "dyadic Hilbert–Schmidt constant of the derivations of a multiplier"),
    ("kernel-decay", "size and twisted smoothness of the heat-band kernels, block decay of the bands"),
    ("weighted-norm", "weighted L^p ratios of a Weyl multiplier against a power weight, two resolutions"),
    ("sharp-maximal", "twisted sharp maximal function of T_m f against M_s f, two resolutions"),
    ("commutator-bmo", "commutator of a Weyl multiplier with a BMO symbol"),
    ("rbound", "Rademacher and square-function constants of projection multipliers; Riesz commutator growth"),
    ("lemma24", "λ-derivative identity for a multiplier family: sign convention and halving rate"),
    ("prop42", "ladder identities and the four-term expansion of the ξ·∇ commutator"),
    ("counterexample-16", "Hilbert–Schmidt growth of the Riesz commutator on Φ̄_{αβ}"),
    ("scaling-21", "conjugation route against the direct λ-engine on each fiber"),
    ("vectorfields-23", "Weyl-transform identities of the λ-twisted vector fields under grid refinement"),
    ("lemma41", "fiber multiplier of a y-convolution against modulate–convolve–modulate"),
    ("pipeline", "translation covariance, fiber Parseval and polyradial commutation of T_m"),
    ("theorem19", "‖T_m f‖_p / ‖L^{1/2} f‖_p on the Heisenberg group, two resolutions"),
    ("theorem110", "‖R T_m R f‖_p / ‖f‖_p on the Heisenberg group, two resolutions"),
    ("calibrate", "transform normalization constants measured on two grids"),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContextSpec {
    pub n: usize,
    pub trunc: usize,
    pub l_xi: f64,
    pub points: usize,
}

impl Default for ContextSpec {
    fn default() -> Self {
        Self { n: 1, trunc: 64, l_xi: 14.0, points: 224 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Weyl-side z-grid
    pub l_z: f64,
    pub m_pts: usize,
    /// second resolution on the same box for stability studies
    pub companion_m_pts: usize,
    /// z-grid of the Heisenberg fibers
    pub fiber_l_z: f64,
    pub fiber_m_pts: usize,
    pub fiber_companion_m_pts: usize,
    pub l_t: f64,
    pub t_pts: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            l_z: 12.0,
            m_pts: 64,
            companion_m_pts: 48,
            fiber_l_z: 6.0,
            fiber_m_pts: 64,
            fiber_companion_m_pts: 96,
            l_t: std::f64::consts::PI,
            t_pts: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MultiplierSpec {
    Identity,
    /// e^{−tH}
    Heat { t: f64 },
    /// Σ_{k ≤ max_level} P_k
    Cutoff { max_level: usize },
    Projection { level: usize },
    Riesz,
    /// OperatorMatrix file
    File { path: PathBuf },
}

impl Default for MultiplierSpec {
    fn default() -> Self {
        MultiplierSpec::Heat { t: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PanelSpec {
    pub seed: u64,
    pub count: usize,
    /// Hermite band limit of the random test functions
    pub band: usize,
    /// fibers carried by Heisenberg-group panel functions
    pub lambdas: Vec<f64>,
}

impl Default for PanelSpec {
    fn default() -> Self {
        Self { seed: 7, count: 4, band: 4, lambdas: vec![1.0, -1.0, 4.0, -4.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightSpec {
    /// w = |z + ε|^exponent with ε = (h/2, h/2)
    pub exponent: f64,
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self { exponent: -1.0 }
    }
}

/// Experiment-specific knobs; each experiment reads the ones it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// derivative order l of the dyadic condition
    pub order: usize,
    pub side: Side,
    /// number of heat bands
    pub bands: usize,
    /// twist offsets u for the smoothness statistic
    pub offsets: Vec<(f64, f64)>,
    /// band whose derivations are profiled block by block
    pub profile_band: usize,
    /// maximal-function exponent s
    pub s: f64,
    pub alphas: Vec<usize>,
    pub beta: usize,
    /// α panel for the grid-side Riesz commutator statistic
    pub riesz_alphas: Vec<usize>,
    pub lambda: f64,
    pub lambdas: Vec<f64>,
    /// step of the λ-derivative identity
    pub h_fd: f64,
    /// coarse step of the halving study
    pub halving_h_fd: f64,
    pub angles: usize,
    /// number of projection multipliers P_0, …, P_{members−1}
    pub members: usize,
    pub sign_mode: SignMode,
    pub kernel_width: f64,
    pub kernel_center: f64,
    pub kernel_half: usize,
    pub translate_steps: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            order: 0,
            side: Side::Left,
            bands: 6,
            offsets: vec![(0.375, 0.0), (0.75, 0.0), (0.375, 0.375), (1.5, 0.0)],
            profile_band: 2,
            s: 2.0,
            alphas: vec![1, 2, 4, 8, 16, 32],
            beta: 2,
            riesz_alphas: vec![1, 2, 4, 8],
            lambda: 1.0,
            lambdas: vec![1.0, 4.0],
            h_fd: 1e-3,
            halving_h_fd: 0.1,
            angles: MIN_ANGLES,
            members: 2,
            sign_mode: SignMode::Exact,
            kernel_width: 0.3,
            kernel_center: 0.2,
            kernel_half: 8,
            translate_steps: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: String,
    pub context: ContextSpec,
    pub grid: GridSpec,
    pub multiplier: MultiplierSpec,
    pub panel: PanelSpec,
    pub p: Vec<f64>,
    pub weight: WeightSpec,
    pub params: Params,
    /// parent of the run directory; not part of the config hash
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: "calibrate".into(),
            context: ContextSpec::default(),
            grid: GridSpec::default(),
            multiplier: MultiplierSpec::default(),
            panel: PanelSpec::default(),
            p: vec![2.0],
            weight: WeightSpec::default(),
            params: Params::default(),
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl ExperimentConfig {
    /// Default config for one experiment.
    pub fn for_experiment(name: &str) -> Result<Self> {
        check_name(name)?;
        let mut c = Self { experiment: name.into(), ..Self::default() };
        match name {
            "weighted-norm" => c.p = vec![4.0],
            "counterexample-16" => {
                c.context = ContextSpec { n: 1, trunc: 96, l_xi: 16.0, points: 256 };
                c.params.alphas = vec![1, 2, 4, 8, 16, 32, 64];
            }
            "mauceri-check" => c.multiplier = MultiplierSpec::Identity,
            _ => {}
        }
        Ok(c)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// sha256 of the canonical JSON with the output directory blanked.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn context(&self) -> Result<HermiteContext> {
        let c = &self.context;
        HermiteContext::new(c.n, c.trunc, c.l_xi, c.points)
    }

    pub fn weyl_grid(&self) -> Result<PhaseGrid> {
        PhaseGrid::new(self.grid.l_z, self.grid.m_pts)
    }

    pub fn weyl_companion(&self) -> Result<PhaseGrid> {
        PhaseGrid::new(self.grid.l_z, self.grid.companion_m_pts)
    }

    pub fn heisenberg_grid(&self) -> Result<HeisenbergGrid> {
        HeisenbergGrid::new(PhaseGrid::new(self.grid.fiber_l_z, self.grid.fiber_m_pts)?, self.grid.l_t, self.grid.t_pts)
    }

    pub fn heisenberg_companion(&self) -> Result<HeisenbergGrid> {
        let z = PhaseGrid::new(self.grid.fiber_l_z, self.grid.fiber_companion_m_pts)?;
        HeisenbergGrid::new(z, self.grid.l_t, self.grid.t_pts)
    }

    /// Grids used for the calibration record: the Weyl grid and its 3/2 refinement.
    pub fn calibration_grids(&self) -> Result<[PhaseGrid; 2]> {
        Ok([self.weyl_grid()?, PhaseGrid::new(self.grid.l_z, self.grid.m_pts * 3 / 2)?])
    }
}

fn check_name(name: &str) -> Result<()> {
    if EXPERIMENTS.iter().any(|(n, _)| *n == name) {
        Ok(())
    } else {
        Err(Error::Config(format!("unknown experiment '{name}' (see list-experiments)")))
    }
}

fn uses_weyl_grid(name: &str) -> bool {
    matches!(
        name,
        "kernel-decay"
            | "weighted-norm"
            | "sharp-maximal"
            | "commutator-bmo"
            | "rbound"
            | "lemma24"
            | "calibrate"
    )
}

fn uses_fibers(name: &str) -> bool {
    matches!(name, "scaling-21" | "lemma41" | "pipeline" | "theorem19" | "theorem110")
}

/// Dry run of the preconditions; returns one line per check that passed.
pub fn validate(config: &ExperimentConfig) -> Result<Vec<String>> {
    let mut notes = Vec::new();
    if config.schema_version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            config.schema_version
        )));
    }
    check_name(&config.experiment)?;
    notes.push(format!("experiment {}", config.experiment));
    let ctx = config.context()?;
    notes.push(format!("context n={} N={} L_xi={} points={}", ctx.n(), ctx.trunc(), ctx.l_xi(), ctx.points()));
    let name = config.experiment.as_str();
    if uses_weyl_grid(name) {
        ctx.require_planar()?;
        for g in [config.weyl_grid()?, config.weyl_companion()?] {
            WeylEngine::new(&ctx, g)?;
        }
        if name == "calibrate" {
            for g in config.calibration_grids()? {
                WeylEngine::new(&ctx, g)?;
            }
        }
        notes.push(format!("z-grid L_z={} m={} / {}", config.grid.l_z, config.grid.m_pts, config.grid.companion_m_pts));
    }
    if uses_fibers(name) {
        ctx.require_planar()?;
        config.heisenberg_grid()?;
        if matches!(name, "theorem19" | "theorem110") {
            config.heisenberg_companion()?;
        }
        notes.push(format!(
            "Heisenberg grid L_z={} m={} L_t={} T={}",
            config.grid.fiber_l_z, config.grid.fiber_m_pts, config.grid.l_t, config.grid.t_pts
        ));
    }
    let panel = &config.panel;
    if panel.count == 0 {
        return Err(Error::Config("panel.count must be at least 1".into()));
    }
    if panel.band == 0 || panel.band > ctx.trunc() {
        return Err(Error::Config(format!("panel.band {} outside 1..={}", panel.band, ctx.trunc())));
    }
    for &p in &config.p {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Config(format!("exponent p = {p} must lie in (1, ∞)")));
        }
    }
    if config.p.is_empty() {
        return Err(Error::Config("p list is empty".into()));
    }
    if !config.weight.exponent.is_finite() {
        return Err(Error::Config("weight exponent must be finite".into()));
    }
    let prm = &config.params;
    match name {
        "mauceri-check" => {
            let limit = max_order(&ctx);
            if prm.order > limit {
                return Err(Error::MarginExhausted { order: prm.order, limit });
            }
        }
        "kernel-decay" => {
            if prm.bands == 0 || prm.profile_band == 0 {
                return Err(Error::Config("bands and profile_band must be at least 1".into()));
            }
        }
        "sharp-maximal" if prm.s <= 1.0 => {
            return Err(Error::Config(format!("maximal exponent s = {} must exceed 1", prm.s)));
        }
        "counterexample-16" => {
            for &a in prm.alphas.iter().chain([prm.beta].iter()) {
                if a >= ctx.trunc() {
                    return Err(Error::Truncation(format!("index {a} is outside the truncation N = {}", ctx.trunc())));
                }
            }
        }
        "rbound" if prm.members == 0 || prm.members > ctx.trunc() => {
            return Err(Error::Config(format!("members {} outside 1..={}", prm.members, ctx.trunc())));
        }
        "lemma24" if !(prm.h_fd > 0.0 && prm.halving_h_fd > 0.0) => {
            return Err(Error::FdStep(format!("finite-difference steps {} and {} must be positive", prm.h_fd, prm.halving_h_fd)));
        }
        "scaling-21" | "vectorfields-23" | "lemma41" => {
            for &l in &prm.lambdas {
                if !on_whitelist(l) {
                    return Err(Error::Resample(format!("λ = {l} is off the whitelist {{4^k}}")));
                }
            }
            if name == "lemma41" && !(prm.kernel_width > 0.0) {
                return Err(Error::Config("kernel_width must be positive".into()));
            }
        }
        _ => {}
    }
    if matches!(name, "pipeline" | "theorem110") && prm.angles < MIN_ANGLES {
        return Err(Error::Config(format!("angles {} below the minimum {MIN_ANGLES}", prm.angles)));
    }
    if let MultiplierSpec::File { path } = &config.multiplier {
        let m = OperatorMatrix::load(path)?;
        if m.trunc() != ctx.trunc() || m.n() != ctx.n() {
            return Err(Error::Config(format!(
                "matrix file {} has (n, N) = ({}, {}), context has ({}, {})",
                path.display(),
                m.n(),
                m.trunc(),
                ctx.n(),
                ctx.trunc()
            )));
        }
    }
    notes.push("preconditions hold".into());
    Ok(notes)
}

/// One CSV table of a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::Writer::from_path(&path).map_err(csv_error)?;
        w.write_record(&self.header).map_err(csv_error)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(path)
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// What an experiment produces before it is wrapped in a report.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub result: serde_json::Value,
    pub tables: Vec<Table>,
    pub summary: Vec<String>,
    /// set when the experiment carries its own acceptance decision and it failed
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub calibration: CalibrationRecord,
    pub config: ExperimentConfig,
    pub result: serde_json::Value,
    pub failure: Option<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Files written by one run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub report: Report,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Validates, runs the experiment, writes `report.json`, one CSV per table and
/// `summary.txt` under `<output_dir>/<config hash>/`. A failed acceptance
/// decision still writes the files and then returns a tolerance error.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    validate(config)?;
    let ctx = config.context()?;
    let calibration = calibrate(&ctx, &config.calibration_grids()?)?;
    let outcome = runs::dispatch(config, &ctx, &calibration)?;
    let hash = config.hash();
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.into(),
        experiment: config.experiment.clone(),
        config_hash: hash.clone(),
        seed: config.panel.seed,
        calibration,
        config: config.clone(),
        result: outcome.result,
        failure: outcome.failure.clone(),
    };
    let dir = config.output_dir.join(&hash[..16]);
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let json = dir.join("report.json");
    fs::write(&json, report.to_json())?;
    files.push(json);
    for t in &outcome.tables {
        files.push(t.write(&dir)?);
    }
    let mut summary = vec![
        format!("experiment: {}", config.experiment),
        format!("config hash: {hash}"),
        format!("tool version: {TOOL_VERSION}"),
    ];
    summary.extend(outcome.summary);
    if let Some(f) = &outcome.failure {
        summary.push(format!("FAILED: {f}"));
    }
    let text = dir.join("summary.txt");
    fs::write(&text, summary.join("\n") + "\n")?;
    files.push(text);
    if let Some(f) = outcome.failure {
        return Err(Error::Tolerance(format!("{}: {f} (report in {})", config.experiment, dir.display())));
    }
    Ok(RunOutput { dir, report, files, summary })
}

/// Text for `list-experiments`.
pub fn list_experiments() -> String {
    EXPERIMENTS.iter().map(|(n, d)| format!("{n:<18} {d}\n")).collect()
}
