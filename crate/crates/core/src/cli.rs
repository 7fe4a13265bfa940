//! The `afgcl` command line: synth, analyze-aug, train, eval and check.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::augment::{add_edges, drop_edges, mask_attributes_with, ppr_diffusion, MaskMode};
use crate::checks::{run_check, CheckName};
use crate::error::{Error, Result};
use crate::eval::{evaluate, Metric, DEFAULT_RUNS};
use crate::graph::{edge_homophily, load_dataset, load_splits, node_homophily, synthesize, write_dataset, Dataset, SyntheticConfig};
use crate::model::{checkpoint, Mode};
use crate::numfmt::real;
use crate::rng::Seed;
use crate::spectral::{
    band_distance_profile_with, feature_band_distance, laplacian_band_profile, sym_laplacian, sym_laplacian_weighted,
    BandProfile, BandScale, FeatureDistance, DEFAULT_BANDS,
};
use crate::training::{embed, log_csv, train, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "afgcl", version, about = "Augmentation-free graph contrastive learning")]
struct Cli {
    /// Worker threads for independent trials.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset from a JSON config.
    Synth(SynthArgs),
    /// Spectral impact of a graph augmentation, averaged over seeds.
    AnalyzeAug(AnalyzeArgs),
    /// Train the contrastive encoder.
    Train(TrainArgs),
    /// Linear-probe evaluation of a checkpoint.
    Eval(EvalArgs),
    /// Run a numerical check; exit status 0 iff it passes.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Directory holding graph.txt, features.csv and labels.txt.
    #[arg(long)]
    data: PathBuf,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        load_dataset(
            self.data.join("graph.txt"),
            self.data.join("features.csv"),
            self.data.join("labels.txt"),
        )
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Augmentation {
    DropEdges,
    AddEdges,
    MaskAttributes,
    Diffusion,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    Own,
    Original,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MaskArg {
    Columns,
    PerNode,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    aug: Augmentation,
    /// Fraction of edges or features affected.
    #[arg(long, default_value_t = 0.2)]
    p: f64,
    /// Teleport probability for diffusion.
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BANDS)]
    bands: usize,
    /// Low-frequency cutoff R as a fraction of the feature width.
    #[arg(long, default_value_t = 0.8)]
    cutoff_ratio: f64,
    /// Number of augmentation draws to average.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ScaleArg::Own)]
    scale: ScaleArg,
    #[arg(long, value_enum, default_value_t = MaskArg::Columns)]
    mask_mode: MaskArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// JSON training config; unspecified fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Record real elapsed seconds in the log instead of zeros.
    #[arg(long)]
    wall_clock: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Accuracy,
    Auc,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::Accuracy)]
    metric: MetricArg,
    /// Public split file; random 10/10/80 splits otherwise.
    #[arg(long)]
    splits: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: usize,
    /// Probe the projector output instead of the encoder output.
    #[arg(long)]
    use_projection: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(CheckName::ALL.map(CheckName::as_str)))]
    name: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status: 0 on success, 1 on failure, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Synth(a) => synth(a),
        Command::AnalyzeAug(a) => analyze(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Check(a) => check(a),
    }
    .map(|pass| pass.unwrap_or(true))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn synth(a: SynthArgs) -> Result<Option<bool>> {
    let mut config: SyntheticConfig = serde_json::from_str(&read_text(&a.config)?)?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    let data = synthesize(&config)?;
    create_dir(&a.out)?;
    write_dataset(&data, &a.out)?;
    println!("nodes {} edges {}", data.num_nodes(), data.graph.num_edges());
    match edge_homophily(&data.graph, &data.labels) {
        Ok(h) => println!("edge_homophily {}", real(h)),
        Err(e) => println!("edge_homophily undefined ({e})"),
    }
    match node_homophily(&data.graph, &data.labels) {
        Ok(h) => println!("node_homophily {}", real(h)),
        Err(e) => println!("node_homophily undefined ({e})"),
    }
    Ok(None)
}

fn analyze(a: AnalyzeArgs) -> Result<Option<bool>> {
    if a.seeds == 0 {
        return Err(Error::invalid("--seeds must be at least 1"));
    }
    let data = a.data.load()?;
    let f = data.feature_dim();
    let cutoff = (a.cutoff_ratio * f as f64).round() as usize;
    let scale = match a.scale {
        ScaleArg::Own => BandScale::Own,
        ScaleArg::Original => BandScale::Original,
    };
    let mask_mode = match a.mask_mode {
        MaskArg::Columns => MaskMode::Columns,
        MaskArg::PerNode => MaskMode::PerNode,
    };
    let original_laplacian = sym_laplacian(&data.graph)?;
    let mut band_sum = vec![0.0; a.bands];
    let (mut low, mut high) = (0.0, 0.0);
    for s in 0..a.seeds {
        let seed = Seed(a.seed).child(s as u64).0;
        let (profile, features) = match a.aug {
            Augmentation::DropEdges | Augmentation::AddEdges => {
                let g = match a.aug {
                    Augmentation::DropEdges => drop_edges(&data.graph, a.p, seed)?,
                    _ => add_edges(&data.graph, a.p, seed)?,
                };
                (band_distance_profile_with(&data.graph, &g, a.bands, scale)?, data.features.clone())
            }
            Augmentation::MaskAttributes => (
                BandProfile { distances: vec![0.0; a.bands] },
                mask_attributes_with(&data.features, a.p, seed, mask_mode)?,
            ),
            Augmentation::Diffusion => {
                let l = sym_laplacian_weighted(&ppr_diffusion(&data.graph, a.alpha)?)?;
                (laplacian_band_profile(&original_laplacian, &l, a.bands, scale)?, data.features.clone())
            }
        };
        for (acc, d) in band_sum.iter_mut().zip(&profile.distances) {
            *acc += d;
        }
        let fd = feature_band_distance(&data.features, &features, cutoff)?;
        low += fd.f_low;
        high += fd.f_high;
    }
    let k = a.seeds as f64;
    let profile = BandProfile { distances: band_sum.into_iter().map(|d| d / k).collect() };
    let features = FeatureDistance { f_low: low / k, f_high: high / k };
    create_dir(&a.out)?;
    write_text(&a.out.join("band_profile.csv"), &profile.to_csv())?;
    write_text(&a.out.join("feature_distance.json"), &serde_json::to_string(&features)?)?;
    print!("{}", profile.to_csv());
    println!("f_low {} f_high {}", real(features.f_low), real(features.f_high));
    Ok(None)
}

fn train_cmd(a: TrainArgs) -> Result<Option<bool>> {
    let data = a.data.load()?;
    let mut config = match &a.config {
        Some(p) => TrainConfig::from_json(&read_text(p)?)?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(epochs) = a.epochs {
        config.epochs = epochs;
    }
    let outcome = train(&data, &config)?;
    create_dir(&a.out)?;
    checkpoint::save(&outcome.params, &a.out.join("checkpoint.bin"))?;
    write_text(&a.out.join("train_log.csv"), &log_csv(&outcome.log, a.wall_clock))?;
    match outcome.log.last() {
        Some(r) => println!("epochs {} final_loss {}", outcome.log.len(), real(r.loss)),
        None => println!("epochs 0"),
    }
    Ok(None)
}

fn eval_cmd(a: EvalArgs) -> Result<Option<bool>> {
    let data = a.data.load()?;
    let params = checkpoint::load(&a.checkpoint)?;
    let splits = a.splits.as_ref().map(|p| load_splits(p, data.num_nodes())).transpose()?;
    let (h, z) = embed(&params, &data, Mode::Train)?;
    let metric = match a.metric {
        MetricArg::Accuracy => Metric::Accuracy,
        MetricArg::Auc => Metric::Auc,
    };
    let x = if a.use_projection { &z } else { &h };
    let result = evaluate(x, &data.labels, data.num_classes, metric, splits.as_ref(), a.runs, a.seed)?;
    create_dir(&a.out)?;
    let json = serde_json::to_string(&result)?;
    write_text(&a.out.join("result.json"), &json)?;
    println!("{json}");
    Ok(None)
}

fn check(a: CheckArgs) -> Result<Option<bool>> {
    let name = CheckName::parse(&a.name).ok_or_else(|| Error::invalid(format!("unknown check {}", a.name)))?;
    let outcome = run_check(name, a.seed)?;
    let json = serde_json::to_string_pretty(&outcome)?;
    if let Some(out) = &a.out {
        write_text(out, &json)?;
    }
    println!("{json}");
    println!("{} {}", outcome.check, if outcome.passed { "PASS" } else { "FAIL" });
    Ok(Some(outcome.passed))
}
