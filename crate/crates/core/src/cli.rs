//! Experiment configuration, orchestration and the `nucmv` command line.

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use crate::acceptance::{run_all, CriterionReport};
use crate::bandop::{build_t, tridiag_blocks, Boundary, TridiagonalBlockData};
use crate::coin::{det_g_chi, CoinSpec, FamilyName, UnitaryEmbedding};
use crate::error::{Error, Result};
use crate::export::{boundary_segments, write_json, Svg, Table, Window};
use crate::phases::PhaseDistribution;
use crate::regions::{certified_resolvent, cubic_boundary, member_form, Certificate, Region, RegionDescriptor};
use crate::spectra::{pseudospectrum, spectral_radius, GridSpec};
use crate::symbol::{bloch_periodic, sample_word, ti_spectrum, uniform_grid};
use crate::walk::{autocorrelation_decay, Graph, MAX_TREE_DEPTH};

const WINDOW: f64 = 1.2;
const SVG_SIZE: usize = 640;
const EPS_LEVELS: [f64; 3] = [1e-3, 1e-2, 1e-1];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionToggles {
    pub disc: bool,
    pub annulus: bool,
    pub forms: bool,
}

impl Default for RegionToggles {
    fn default() -> Self {
        Self { disc: true, annulus: true, forms: true }
    }
}

impl RegionToggles {
    fn keeps(&self, region: &Region) -> bool {
        match region.descriptor {
            RegionDescriptor::Disc { .. } => self.disc,
            RegionDescriptor::Annulus { .. } => self.annulus,
            _ => self.forms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureParams {
    pub theta: f64,
    pub g: f64,
}

impl Default for FigureParams {
    fn default() -> Self {
        Self { theta: 0.8, g: 0.3 }
    }
}

/// Everything a run depends on. Identical configs give identical bundles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub coin: CoinSpec,
    pub phases: PhaseDistribution,
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    pub bc: Boundary,
    pub word_lengths: Vec<usize>,
    pub words_per_length: usize,
    pub bloch_samples: usize,
    /// Pseudospectrum grid resolution; no pseudospectrum when absent.
    pub grid: Option<usize>,
    pub regions: RegionToggles,
    pub g_check: bool,
    pub walk_steps: usize,
    pub figure: FigureParams,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            coin: CoinSpec::Family { family: FamilyName::Drift, xi: 0.26, eta: 1.05 },
            phases: PhaseDistribution::Uniform { epsilon: 0.1 },
            seed: 1,
            m: 128,
            bc: Boundary::Periodic,
            word_lengths: vec![2, 4, 6, 8],
            words_per_length: 50,
            bloch_samples: 256,
            grid: None,
            regions: RegionToggles::default(),
            g_check: false,
            walk_steps: 10,
            figure: FigureParams::default(),
            out: PathBuf::from("nucmv-out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.phases.validate()?;
        if self.m < 2 {
            return bad(format!("M = {} must be at least 2", self.m));
        }
        if self.word_lengths.is_empty() || self.word_lengths.iter().any(|&l| l < 2 || l % 2 == 1) {
            return bad(format!("word_lengths {:?} must be a nonempty list of even lengths >= 2", self.word_lengths));
        }
        if self.words_per_length == 0 || self.bloch_samples < 8 {
            return bad("words_per_length must be positive and bloch_samples at least 8".into());
        }
        if self.grid.is_some_and(|n| n < 2) {
            return bad("grid must have at least 2 nodes per side".into());
        }
        if self.walk_steps + 2 > MAX_TREE_DEPTH {
            return bad(format!("walk_steps = {} exceeds {}", self.walk_steps, MAX_TREE_DEPTH - 2));
        }
        let FigureParams { theta, g } = self.figure;
        if !(theta > 0.0 && theta < PI) || !(0.0..1.0).contains(&g) {
            return bad(format!("figure needs theta in (0, pi) and g in [0, 1), got theta = {theta}, g = {g}"));
        }
        Ok(())
    }

    /// Overlays the top-level keys of a JSON object.
    pub fn overlay(&self, file: Value) -> Result<Self> {
        let Value::Object(keys) = file else {
            return Err(Error::Config("config file must hold a JSON object".into()));
        };
        let mut base = serde_json::to_value(self)?;
        if let Value::Object(map) = &mut base {
            map.extend(keys);
        }
        serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "nucmv", version, about = "Random non-unitary CMV band operators: spectra and certified resolvent regions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Produce a report bundle.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Figures,
    Certify,
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseKind {
    Point,
    Uniform,
    Torus,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub task: Task,
    /// JSON config file; its keys override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Coin as inline JSON or a path to a JSON file.
    #[arg(long)]
    pub coin: Option<String>,
    #[arg(long, default_value = "drift")]
    pub family: String,
    #[arg(long, default_value_t = 0.26, allow_negative_numbers = true)]
    pub xi: f64,
    #[arg(long, default_value_t = 1.05, allow_negative_numbers = true)]
    pub eta: f64,
    /// Recompute g as |det C0| and fail on mismatch.
    #[arg(long)]
    pub g_check: bool,
    #[arg(long, value_enum, default_value = "uniform")]
    pub phases: PhaseKind,
    /// Half-width of the uniform phase support.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long = "M", default_value_t = 128)]
    pub m: usize,
    #[arg(long, value_enum, default_value = "periodic")]
    pub bc: BcKind,
    /// Pseudospectrum grid nodes per side.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value = "nucmv-out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.3)]
    pub g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BcKind {
    Open,
    Periodic,
}

impl RunArgs {
    pub fn config(&self) -> Result<ExperimentConfig> {
        let coin = match &self.coin {
            Some(text) => {
                let json = if Path::new(text).is_file() { fs::read_to_string(text)? } else { text.clone() };
                serde_json::from_str(&json).map_err(|e| Error::Config(format!("--coin: {e}")))?
            }
            None => CoinSpec::Family { family: self.family.parse()?, xi: self.xi, eta: self.eta },
        };
        let phases = match self.phases {
            PhaseKind::Point => PhaseDistribution::Point { theta0: 0.0 },
            PhaseKind::Uniform => PhaseDistribution::Uniform { epsilon: self.eps },
            PhaseKind::Torus => PhaseDistribution::Torus,
        };
        let flags = ExperimentConfig {
            coin,
            phases,
            seed: self.seed,
            m: self.m,
            bc: match self.bc {
                BcKind::Open => Boundary::Open,
                BcKind::Periodic => Boundary::Periodic,
            },
            grid: self.grid,
            g_check: self.g_check,
            figure: FigureParams { theta: self.theta, g: self.g },
            out: self.out.clone(),
            ..ExperimentConfig::default()
        };
        let config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                let value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                flags.overlay(value)?
            }
            None => flags,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectraSummary {
    pub bloch_count: usize,
    pub bloch_min_modulus: f64,
    pub bloch_max_modulus: f64,
    pub truncation_spectral_radius: f64,
    /// Eigenvalues lying strictly inside the certified set.
    pub certified_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub config: ExperimentConfig,
    pub embedding: UnitaryEmbedding,
    pub g: f64,
    pub chi: f64,
    pub blocks: Option<TridiagonalBlockData>,
    pub r_v: Option<f64>,
    pub splits: bool,
    pub certificate: Certificate,
    pub spectra: SpectraSummary,
    pub autocorrelation_rate: Option<f64>,
    pub files: Vec<String>,
}

/// Result of one run: files written and, for selftest, the criteria.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub criteria: Vec<CriterionReport>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

struct Bundle {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Bundle {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn names(&self) -> Vec<String> {
        self.files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect()
    }
}

pub fn run(task: Task, config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    match task {
        Task::Figures => figures(config),
        Task::Certify => certify(config),
        Task::Selftest => selftest(config),
    }
}

fn unit_circles(svg: &mut Svg, g: f64) {
    let origin = Complex64::new(0.0, 0.0);
    svg.circle(origin, 1.0, "red");
    if g > 0.0 {
        svg.circle(origin, g, "red");
    }
}

fn figures(config: &ExperimentConfig) -> Result<Outcome> {
    let FigureParams { theta, g } = config.figure;
    let mut bundle = Bundle::new(&config.out)?;
    let window = Window::square(WINDOW);
    let inside = |z: Complex64| member_form(theta, g, z).unwrap_or(false);
    member_form(theta, g, Complex64::new(0.0, 0.0))?;
    let boundary = boundary_segments(inside, window, 400);
    Table::segments(&boundary).write(&bundle.path("form_boundary.csv"))?;

    let mut svg = Svg::new(window, SVG_SIZE);
    svg.axes().mask(inside, 320, "#9ecae1", 0.7).segments(&boundary, "#08519c");
    unit_circles(&mut svg, g);
    svg.label(&format!("theta = {theta}, g = {g}")).write(&bundle.path("form_region.svg"))?;

    let triangle = Region::new(RegionDescriptor::Triangle { theta, g });
    let tri_boundary = boundary_segments(|z| triangle.contains(z), window, 400);
    let mut svg = Svg::new(window, SVG_SIZE);
    svg.axes()
        .mask(|z| triangle.contains(z), 320, "#fdae6b", 0.7)
        .segments(&tri_boundary, "#a63603")
        .segments(&boundary, "#08519c");
    unit_circles(&mut svg, g);
    svg.label(&format!("triangle inside form set, theta = {theta}, g = {g}"))
        .write(&bundle.path("triangle_region.svg"))?;

    if theta < PI / 2.0 {
        let x_end = (1.0 + g) * theta.cos();
        let mut cubic = Table::new(&["x", "y"]);
        for k in 0..512 {
            let x = x_end * k as f64 / 512.0;
            cubic.push(vec![x, cubic_boundary(theta, g, x)?.max(0.0).sqrt()])?;
        }
        cubic.write(&bundle.path("cubic_boundary.csv"))?;
    }
    Ok(Outcome { files: bundle.files, criteria: Vec::new() })
}

fn bloch_points(emb: &UnitaryEmbedding, config: &ExperimentConfig) -> Result<Vec<Complex64>> {
    let xs = uniform_grid(config.bloch_samples);
    let jobs: Vec<(usize, u64)> = config
        .word_lengths
        .iter()
        .flat_map(|&l| (0..config.words_per_length as u64).map(move |w| (l, w)))
        .collect();
    let parts: Result<Vec<Vec<Complex64>>> = jobs
        .par_iter()
        .map(|&(l, w)| Ok(bloch_periodic(emb, &sample_word(&config.phases, config.seed, l, w)?, &xs)?.points()))
        .collect();
    Ok(parts?.into_iter().flatten().collect())
}

fn certify(config: &ExperimentConfig) -> Result<Outcome> {
    let emb = config.coin.build()?;
    let (g_det, _) = det_g_chi(&emb.contraction());
    if config.g_check && (g_det - emb.g).abs() > 1e-12 {
        return Err(Error::GCheck { computed: g_det, stored: emb.g });
    }
    let blocks = if emb.is_unitary_limit() { None } else { Some(tridiag_blocks(&emb)?) };
    let mut cert = certified_resolvent(&emb, config.phases.epsilon(), blocks.as_ref())?;
    cert.regions.retain(|r| config.regions.keeps(&r.region));

    let mut bundle = Bundle::new(&config.out)?;
    let bloch = bloch_points(&emb, config)?;
    Table::points(&bloch).write(&bundle.path("bloch_spectrum.csv"))?;
    let ti = ti_spectrum(&emb, &uniform_grid(config.bloch_samples))?.points();
    Table::points(&ti).write(&bundle.path("symbol_spectrum.csv"))?;

    let field = crate::phases::PhaseField::for_sites(config.phases, config.seed, 2 * config.m)?;
    let t = build_t(&emb, &field, config.m, config.bc)?.to_dense();
    let truncation = crate::spectra::eigenvalues(&t)?;
    Table::points(&truncation).write(&bundle.path("truncation_spectrum.csv"))?;

    let grid = match config.grid {
        Some(n) => {
            let grid = pseudospectrum(&t, &GridSpec::square(WINDOW, n, EPS_LEVELS.to_vec()))?;
            Table::pseudospectrum(&grid).write(&bundle.path("pseudospectrum.csv"))?;
            Some(grid)
        }
        None => None,
    };

    let depth = config.walk_steps + 2;
    let ac = autocorrelation_decay(&emb, config.phases, config.seed, config.walk_steps, Graph::Tree { depth })?;
    Table::autocorrelation(&ac).write(&bundle.path("autocorrelation.csv"))?;

    let violations = bloch
        .par_iter()
        .chain(truncation.par_iter().filter(|_| config.bc == Boundary::Periodic))
        .filter(|&&z| cert.contains_deeply(z, 1e-9))
        .count();
    let moduli = bloch.iter().map(|z| z.norm());
    let spectra = SpectraSummary {
        bloch_count: bloch.len(),
        bloch_min_modulus: moduli.clone().fold(f64::INFINITY, f64::min),
        bloch_max_modulus: moduli.fold(0.0, f64::max),
        truncation_spectral_radius: spectral_radius(&t)?,
        certified_violations: violations,
    };

    let window = Window::square(WINDOW);
    let mut svg = Svg::new(window, SVG_SIZE);
    svg.axes();
    if let Some(grid) = &grid {
        svg.pseudospectrum(grid);
    }
    svg.mask(|z| cert.contains(z), 320, "#9ecae1", 0.6)
        .segments(&boundary_segments(|z| cert.contains(z), window, 320), "#08519c");
    unit_circles(&mut svg, emb.g);
    if let Some(r) = blocks.filter(|b| b.gap_ok).map(|b| b.r_v) {
        svg.circle(Complex64::new(0.0, 0.0), r, "#31a354");
    }
    let shown: Vec<Complex64> = bloch.iter().step_by((bloch.len() / 4000).max(1)).copied().collect();
    svg.dots(&shown, 0.8, "black").dots(&truncation, 1.2, "#e6550d");
    svg.label(&format!("g = {:.4}, epsilon = {}, splits = {}", emb.g, config.phases.epsilon(), cert.splits));
    svg.write(&bundle.path("certificate.svg"))?;

    let report_path = bundle.path("report.json");
    let report = CertifyReport {
        config: config.clone(),
        embedding: emb,
        g: emb.g,
        chi: emb.chi,
        r_v: blocks.map(|b| b.r_v),
        blocks,
        splits: cert.splits,
        certificate: cert,
        spectra,
        autocorrelation_rate: ac.rate,
        files: bundle.names(),
    };
    write_json(&report_path, &report)?;
    Ok(Outcome { files: bundle.files, criteria: Vec::new() })
}

fn selftest(config: &ExperimentConfig) -> Result<Outcome> {
    let criteria = run_all();
    let mut bundle = Bundle::new(&config.out)?;
    write_json(&bundle.path("selftest.json"), &criteria)?;
    Ok(Outcome { files: bundle.files, criteria })
}

/// Parses `args`, runs, prints a summary and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let Command::Run(args) = cli.command;
    let outcome = args.config().and_then(|config| run(args.task, &config));
    match outcome {
        Ok(outcome) => {
            for c in &outcome.criteria {
                println!("{c}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.passed() {
                0
            } else {
                4
            }
        }
        Err(e) => {
            eprintln!("nucmv: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let base = ExperimentConfig::default();
        let err = base.overlay(serde_json::json!({ "seeed": 3 })).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn file_keys_override_flags() {
        let base = ExperimentConfig { seed: 9, ..ExperimentConfig::default() };
        let c = base.overlay(serde_json::json!({ "seed": 4, "M": 16 })).unwrap();
        assert_eq!((c.seed, c.m), (4, 16));
        assert_eq!(c.phases, base.phases);
    }

    #[test]
    fn config_round_trips() {
        let c = ExperimentConfig { grid: Some(32), ..ExperimentConfig::default() };
        let back: ExperimentConfig = serde_json::from_value(serde_json::to_value(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation_catches_odd_words() {
        let c = ExperimentConfig { word_lengths: vec![3], ..ExperimentConfig::default() };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn flags_build_a_config() {
        let cli = Cli::try_parse_from(["nucmv", "run", "certify", "--family", "g0", "--xi", "0.3", "--phases", "torus", "--M", "16"])
            .unwrap();
        let Command::Run(args) = cli.command;
        let c = args.config().unwrap();
        assert_eq!(c.coin, CoinSpec::Family { family: FamilyName::G0, xi: 0.3, eta: 1.05 });
        assert_eq!(c.phases, PhaseDistribution::Torus);
        assert_eq!(c.m, 16);
    }

    #[test]
    fn bad_family_is_a_config_error() {
        assert_eq!(main_with(["nucmv", "run", "certify", "--family", "spiral"]), 2);
    }
}
