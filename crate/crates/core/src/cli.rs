//! The `lfs` command line: every pipeline stage as a subcommand sharing one
//! JSON config and an output directory of artifacts.
//!
//! ```text
//! <out>/world.json                synthetic world (world)
//! <out>/axes/<feature>.json       feature axes (fit-axis)
//! <out>/pairs/<feature>/          shifted-pairs datasets (build-pairs)
//! <out>/models/<feature>/         shifters, history.csv, metrics.json (train)
//! <out>/reports/                  evaluation reports (eval)
//! <out>/compare/                  architecture comparison tables (compare)
//! <out>/manifests/<command>.json  run manifests
//! ```
//!
//! Flags override config fields, which override defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::axis::{fit_feature_axis, shift_multi, FeatureAxis, DEFAULT_EPSILON};
use crate::evalharness::{
    report_file_name, run_multi_feature_eval, run_single_feature_eval, write_report, EvalConfig, EvalReport,
    ReportFormat,
};
use crate::numerics::{cosine, sample_gaussian_latents, stack_latents, stage_seed, unstack_latents};
use crate::pairs::{
    build_pair_tuples, expand_tuples, split_dataset, BuildDiagnostics, FourthPair, PairsDataset, Provenance,
    DEFAULT_FRACTIONS,
};
use crate::shifter::{build_arch, chain_shift, evaluate_metrics, train, ArchName, Metrics, ShifterModel, TrainConfig};
use crate::world::{feature_index, score_batch, ExternalScorer, FeatureScorer, SyntheticWorld, WorldConfig};
use crate::{npy, Axis, Error, Latent, Matrix, Result, Shifter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalScorerConfig {
    pub dir: PathBuf,
    pub d: usize,
    pub features: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

fn default_timeout() -> f64 {
    600.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AxisSettings {
    pub n_fit: usize,
    pub use_arctanh: bool,
    pub epsilon: f64,
}

impl Default for AxisSettings {
    fn default() -> Self {
        Self { n_fit: 10_000, use_arctanh: true, epsilon: DEFAULT_EPSILON }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairSettings {
    pub n_candidates: usize,
    pub threshold: f64,
    pub multiplier: f64,
    pub fourth_pair: FourthPair,
}

impl Default for PairSettings {
    fn default() -> Self {
        Self { n_candidates: 10_000, threshold: 0.5, multiplier: 1.0, fourth_pair: FourthPair::Removal }
    }
}

/// Everything a pipeline run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub world: WorldConfig,
    pub external_scorer: Option<ExternalScorerConfig>,
    /// Features to process; empty means every feature of the scorer.
    pub features: Vec<String>,
    pub axis: AxisSettings,
    pub pairs: PairSettings,
    pub arch: ArchName,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    /// Architectures trained by `compare`.
    pub compare: Vec<ArchName>,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            world: WorldConfig::default(),
            external_scorer: None,
            features: Vec::new(),
            axis: AxisSettings::default(),
            pairs: PairSettings::default(),
            arch: ArchName::A,
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            compare: ArchName::ALL.to_vec(),
            out: PathBuf::from("lfs-out"),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Parser)]
#[command(name = "lfs", version, about = "Latent feature shifting pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON pipeline config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; per-stage seeds are derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShiftMethod {
    Axis,
    Model,
    Chain,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create and persist the synthetic world.
    World,
    /// Sample, score and fit a feature axis per feature.
    FitAxis,
    /// Build the shifted-pairs dataset per feature.
    BuildPairs,
    /// Train a shifter per feature.
    Train {
        /// Architecture (a–e); overrides the config.
        #[arg(long)]
        arch: Option<ArchName>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Shift latents from an NPY file with axes, one model, or a model chain.
    Shift {
        /// Input latents, `n × d` float32 NPY.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "model")]
        method: ShiftMethod,
        /// Comma-separated features; defaults to the configured list.
        #[arg(long, value_delimiter = ',')]
        features: Vec<String>,
        /// Label value fed to every model.
        #[arg(long, default_value_t = 1.0)]
        label: f64,
        /// Axis multiplier.
        #[arg(long, default_value_t = 1.0)]
        multiplier: f64,
        /// Output NPY; defaults to `<out>/shifted/<method>-<features>.npy`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Threshold-count evaluation of baseline against shifters.
    Eval,
    /// Train every architecture on one feature and tabulate test metrics.
    Compare {
        /// Feature whose dataset is used; defaults to the first configured one.
        #[arg(long)]
        feature: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
    },
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli.common)?;
    let format = cli.common.format.map(ReportFormat::from).unwrap_or(ReportFormat::Csv);
    let ctx = Context::new(cfg);
    match cli.command {
        Command::World => cmd_world(&ctx),
        Command::FitAxis => cmd_fit_axis(&ctx),
        Command::BuildPairs => cmd_build_pairs(&ctx),
        Command::Train { arch, epochs } => {
            let mut ctx = ctx;
            if let Some(a) = arch {
                ctx.cfg.arch = a;
            }
            if let Some(e) = epochs {
                ctx.cfg.train.epochs = e;
            }
            cmd_train(&ctx)
        }
        Command::Shift { input, method, features, label, multiplier, output } => {
            cmd_shift(&ctx, &ShiftRequest { input, method, features, label, multiplier, output })
        }
        Command::Eval => cmd_eval(&ctx, format),
        Command::Compare { feature, epochs } => {
            let mut ctx = ctx;
            if let Some(e) = epochs {
                ctx.cfg.train.epochs = e;
            }
            cmd_compare(&ctx, feature.as_deref(), format)
        }
    }
}

fn resolve_config(args: &CommonArgs) -> Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

/// Resolved config plus artifact paths.
pub struct Context {
    pub cfg: PipelineConfig,
}

enum Scorer {
    Synthetic(SyntheticWorld),
    External(ExternalScorer),
}

impl FeatureScorer for Scorer {
    fn dim(&self) -> usize {
        match self {
            Scorer::Synthetic(w) => w.dim(),
            Scorer::External(e) => e.dim(),
        }
    }

    fn feature_names(&self) -> Vec<String> {
        match self {
            Scorer::Synthetic(w) => w.feature_names(),
            Scorer::External(e) => e.feature_names(),
        }
    }

    fn score_rows(&self, latents: &[Latent]) -> Result<Matrix> {
        match self {
            Scorer::Synthetic(w) => w.score_rows(latents),
            Scorer::External(e) => e.score_rows(latents),
        }
    }
}

#[derive(Default, Serialize)]
struct RunManifest {
    command: String,
    master_seed: u64,
    config: serde_json::Value,
    stage_seeds: BTreeMap<String, u64>,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    diagnostics: BTreeMap<String, serde_json::Value>,
}

impl Context {
    pub fn new(cfg: PipelineConfig) -> Self {
        Self { cfg }
    }

    fn out(&self) -> &Path {
        &self.cfg.out
    }

    fn seed(&self, stage: &str) -> u64 {
        stage_seed(self.cfg.seed, stage)
    }

    fn world_path(&self) -> PathBuf {
        self.out().join("world.json")
    }

    fn axis_path(&self, feature: &str) -> PathBuf {
        self.out().join("axes").join(format!("{feature}.json"))
    }

    fn pairs_dir(&self, feature: &str) -> PathBuf {
        self.out().join("pairs").join(feature)
    }

    fn model_dir(&self, feature: &str) -> PathBuf {
        self.out().join("models").join(feature)
    }

    fn require(&self, path: PathBuf, producer: &'static str) -> Result<PathBuf> {
        if path.exists() {
            Ok(path)
        } else {
            Err(Error::MissingArtifact { path, producer })
        }
    }

    fn scorer(&self) -> Result<Scorer> {
        if let Some(ext) = &self.cfg.external_scorer {
            let timeout = Duration::from_secs_f64(ext.timeout_secs.max(0.0));
            return Ok(Scorer::External(ExternalScorer::new(&ext.dir, ext.d, ext.features.clone(), timeout)?));
        }
        let path = self.require(self.world_path(), "world")?;
        let world: SyntheticWorld = serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::format(format!("world file: {e}")))?;
        Ok(Scorer::Synthetic(world))
    }

    fn features(&self, scorer: &Scorer) -> Result<Vec<String>> {
        let names = if self.cfg.features.is_empty() { scorer.feature_names() } else { self.cfg.features.clone() };
        for n in &names {
            feature_index(scorer, n)?;
        }
        Ok(names)
    }

    fn load_axis(&self, feature: &str) -> Result<Axis> {
        FeatureAxis::load(&self.require(self.axis_path(feature), "fit-axis")?)
    }

    fn load_model(&self, feature: &str) -> Result<Shifter> {
        let dir = self.model_dir(feature);
        self.require(dir.join("manifest.json"), "train")?;
        ShifterModel::load(&dir)
    }

    fn manifest(&self, command: &str) -> Result<RunManifest> {
        Ok(RunManifest {
            command: command.into(),
            master_seed: self.cfg.seed,
            config: serde_json::to_value(&self.cfg)?,
            ..Default::default()
        })
    }

    fn relative(&self, path: &Path) -> String {
        path.strip_prefix(self.out()).unwrap_or(path).display().to_string()
    }

    fn record_file(&self, map: &mut BTreeMap<String, String>, path: &Path) -> Result<()> {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(path)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
            entries.sort();
            for p in entries {
                self.record_file(map, &p)?;
            }
        } else {
            map.insert(self.relative(path), hex::encode(Sha256::digest(fs::read(path)?)));
        }
        Ok(())
    }

    fn finish(&self, manifest: RunManifest) -> Result<()> {
        let dir = self.out().join("manifests");
        fs::create_dir_all(&dir)?;
        fs::write(dir.join(format!("{}.json", manifest.command)), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }
}

pub fn cmd_world(ctx: &Context) -> Result<()> {
    if ctx.cfg.external_scorer.is_some() {
        return Err(Error::invalid("`world` creates a synthetic world; the config names an external scorer"));
    }
    let mut m = ctx.manifest("world")?;
    let seed = ctx.seed("world");
    m.stage_seeds.insert("world".into(), seed);
    let world = SyntheticWorld::new(&WorldConfig { seed, ..ctx.cfg.world.clone() })?;
    fs::create_dir_all(ctx.out())?;
    let path = ctx.world_path();
    fs::write(&path, serde_json::to_string_pretty(&world)?)?;
    ctx.record_file(&mut m.outputs, &path)?;
    println!("world: d = {}, features = {}", world.d, world.feature_names().join(","));
    ctx.finish(m)
}

pub fn cmd_fit_axis(ctx: &Context) -> Result<()> {
    let scorer = ctx.scorer()?;
    let mut m = ctx.manifest("fit-axis")?;
    fs::create_dir_all(ctx.out().join("axes"))?;
    let settings = &ctx.cfg.axis;
    for feature in ctx.features(&scorer)? {
        let j = feature_index(&scorer, &feature)?;
        let stage = format!("fit-axis/{feature}");
        let seed = ctx.seed(&stage);
        m.stage_seeds.insert(stage, seed);
        let latents = sample_gaussian_latents::<f64>(settings.n_fit, scorer.dim(), seed)?;
        let scores = score_batch(&scorer, &latents)?.column(j).to_vec();
        let axis = fit_feature_axis(&feature, &latents, &scores, settings.use_arctanh, settings.epsilon)?;
        let path = ctx.axis_path(&feature);
        axis.save(&path)?;
        ctx.record_file(&mut m.outputs, &path)?;

        let mut diag = serde_json::json!({ "fit_r2": axis.fit_r2 });
        let mut line = format!("fit-axis {feature}: fit r2 = {:.4}", axis.fit_r2);
        if let Scorer::Synthetic(world) = &scorer {
            if let Ok(truth) = world.ground_truth_axis(j) {
                let c = cosine(&axis.direction, &truth);
                diag["cosine_to_ground_truth"] = c.into();
                line.push_str(&format!(", cosine to ground truth = {c:.4}"));
            }
        }
        m.diagnostics.insert(feature, diag);
        println!("{line}");
    }
    ctx.finish(m)
}

pub fn cmd_build_pairs(ctx: &Context) -> Result<()> {
    let scorer = ctx.scorer()?;
    let mut m = ctx.manifest("build-pairs")?;
    let p = &ctx.cfg.pairs;
    for feature in ctx.features(&scorer)? {
        let j = feature_index(&scorer, &feature)?;
        let axis_path = ctx.require(ctx.axis_path(&feature), "fit-axis")?;
        ctx.record_file(&mut m.inputs, &axis_path)?;
        let axis = FeatureAxis::load(&axis_path)?;
        let stage = format!("build-pairs/{feature}");
        let seed = ctx.seed(&stage);
        m.stage_seeds.insert(stage, seed);
        let build = build_pair_tuples(&scorer, &axis, j, p.n_candidates, p.threshold, p.multiplier, seed)?;
        let provenance = Provenance {
            threshold: p.threshold,
            multiplier: p.multiplier,
            seed,
            axis_fingerprint: axis.fingerprint(),
        };
        let ds = expand_tuples(&build.tuples, provenance, p.fourth_pair)?;
        let dir = ctx.pairs_dir(&feature);
        ds.save(&dir)?;
        ctx.record_file(&mut m.outputs, &dir)?;
        let BuildDiagnostics { candidates, negatives, accepted } = build.diagnostics;
        println!(
            "build-pairs {feature}: {candidates} candidates, {negatives} negatives ({:.3}), {accepted} tuples ({:.3} of negatives), {} samples",
            build.diagnostics.negative_rate(),
            build.diagnostics.shift_success_rate(),
            ds.len()
        );
        m.diagnostics.insert(feature, serde_json::to_value(build.diagnostics)?);
    }
    ctx.finish(m)
}

fn load_dataset(ctx: &Context, feature: &str, manifest: &mut RunManifest) -> Result<PairsDataset> {
    let dir = ctx.pairs_dir(feature);
    ctx.require(dir.join("manifest.json"), "build-pairs")?;
    ctx.record_file(&mut manifest.inputs, &dir)?;
    PairsDataset::load(&dir)
}

pub fn cmd_train(ctx: &Context) -> Result<()> {
    let scorer = ctx.scorer()?;
    let mut m = ctx.manifest("train")?;
    for feature in ctx.features(&scorer)? {
        let ds = load_dataset(ctx, &feature, &mut m)?;
        let split_seed = ctx.seed(&format!("split/{feature}"));
        let train_seed = ctx.seed(&format!("train/{feature}"));
        m.stage_seeds.insert(format!("split/{feature}"), split_seed);
        m.stage_seeds.insert(format!("train/{feature}"), train_seed);
        let split = split_dataset(&ds, DEFAULT_FRACTIONS, split_seed)?;
        let spec = build_arch(ctx.cfg.arch, ds.meta.d, 1)?;
        let cfg = TrainConfig { seed: train_seed, ..ctx.cfg.train.clone() };
        let (model, history) = train::<f64>(&split.train, &split.valid, &spec, &cfg)?;
        let metrics = evaluate_metrics(&model, &split.test)?;

        let dir = ctx.model_dir(&feature);
        model.save(&dir)?;
        fs::write(dir.join("history.csv"), history.to_csv())?;
        fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&metrics)?)?;
        ctx.record_file(&mut m.outputs, &dir)?;
        println!(
            "train {feature} ({}): valid mse {:.5} -> {:.5}; test mse {:.5}, mae {:.5}, r2 {:.4}",
            ctx.cfg.arch,
            history.initial_valid_loss,
            history.valid_loss.last().copied().unwrap_or(history.initial_valid_loss),
            metrics.mse,
            metrics.mae,
            metrics.r2
        );
        m.diagnostics.insert(feature, serde_json::to_value(metrics)?);
    }
    ctx.finish(m)
}

pub struct ShiftRequest {
    pub input: PathBuf,
    pub method: ShiftMethod,
    pub features: Vec<String>,
    pub label: f64,
    pub multiplier: f64,
    pub output: Option<PathBuf>,
}

pub fn cmd_shift(ctx: &Context, req: &ShiftRequest) -> Result<()> {
    let mut m = ctx.manifest("shift")?;
    let features = if req.features.is_empty() { ctx.cfg.features.clone() } else { req.features.clone() };
    if features.is_empty() {
        return Err(Error::invalid("shift needs --features or a configured feature list"));
    }
    ctx.record_file(&mut m.inputs, &req.input)?;
    let latents = unstack_latents(&npy::read_matrix::<f64>(&req.input)?)?;
    let shifted: Vec<Latent> = match req.method {
        ShiftMethod::Axis => {
            let axes = features.iter().map(|f| ctx.load_axis(f)).collect::<Result<Vec<_>>>()?;
            let mult = vec![req.multiplier; axes.len()];
            latents.iter().map(|z| shift_multi(z, &axes, &mult)).collect::<Result<_>>()?
        }
        ShiftMethod::Model | ShiftMethod::Chain => {
            if req.method == ShiftMethod::Model && features.len() != 1 {
                return Err(Error::invalid("--method model takes exactly one feature; use chain for several"));
            }
            let models = features.iter().map(|f| ctx.load_model(f)).collect::<Result<Vec<_>>>()?;
            let labels: Vec<Vec<f64>> = models.iter().map(|mm| vec![req.label; mm.k()]).collect();
            latents.iter().map(|z| chain_shift(z, &models, &labels)).collect::<Result<_>>()?
        }
    };
    let method = match req.method {
        ShiftMethod::Axis => "axis",
        ShiftMethod::Model => "model",
        ShiftMethod::Chain => "chain",
    };
    let output = req
        .output
        .clone()
        .unwrap_or_else(|| ctx.out().join("shifted").join(format!("{method}-{}.npy", features.join("+"))));
    if let Some(parent) = output.parent() {
        fs::create_dir_all(parent)?;
    }
    npy::write_matrix(&output, stack_latents(&shifted)?.view())?;
    ctx.record_file(&mut m.outputs, &output)?;
    println!("shift: {} latents via {method} ({}) -> {}", shifted.len(), features.join(","), output.display());
    ctx.finish(m)
}

pub fn cmd_eval(ctx: &Context, format: ReportFormat) -> Result<()> {
    let scorer = ctx.scorer()?;
    let mut m = ctx.manifest("eval")?;
    let features = if ctx.cfg.eval.features.is_empty() { ctx.features(&scorer)? } else { ctx.cfg.eval.features.clone() };
    let seed = ctx.seed("eval");
    m.stage_seeds.insert("eval".into(), seed);
    let cfg = EvalConfig { seed, features: features.clone(), ..ctx.cfg.eval.clone() };

    let indices = features.iter().map(|f| feature_index(&scorer, f)).collect::<Result<Vec<_>>>()?;
    let axes = features.iter().map(|f| ctx.load_axis(f)).collect::<Result<Vec<_>>>()?;
    let models = features.iter().map(|f| ctx.load_model(f)).collect::<Result<Vec<_>>>()?;
    for f in &features {
        ctx.record_file(&mut m.inputs, &ctx.axis_path(f))?;
        ctx.record_file(&mut m.inputs, &ctx.model_dir(f))?;
    }

    let mut reports: Vec<EvalReport> = Vec::new();
    if features.len() > 1 {
        for (i, f) in features.iter().enumerate() {
            let single = EvalConfig { features: vec![f.clone()], multipliers: multiplier_at(&cfg, i), ..cfg.clone() };
            reports.push(run_single_feature_eval(&scorer, &axes[i], &models[i], indices[i], &single)?);
        }
    }
    reports.push(run_multi_feature_eval(&scorer, &axes, &models, &indices, &cfg)?);

    let dir = ctx.out().join("reports");
    fs::create_dir_all(&dir)?;
    for mut report in reports {
        report.notes.push("counts use strict score > threshold".into());
        if let Scorer::External(_) = scorer {
            report.notes.push("scores come from an external classifier; its error rate carries into the counts".into());
        }
        let path = dir.join(report_file_name(&report, format));
        write_report(&report, &path, format)?;
        ctx.record_file(&mut m.outputs, &path)?;
        println!("eval {}:", report.added.join("+"));
        for f in &report.features {
            println!("  {:<16} original {:>5}  baseline {:>5}  lfs {:>5}", f.feature, f.original.count, f.baseline.count, f.lfs.count);
        }
    }
    ctx.finish(m)
}

fn multiplier_at(cfg: &EvalConfig, i: usize) -> Vec<f64> {
    cfg.multipliers.get(i).map(|&v| vec![v]).unwrap_or_default()
}

/// One row of the architecture comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub arch: ArchName,
    pub mse: f64,
    pub mae: f64,
    pub r2: f64,
    pub parameters: usize,
}

pub fn render_compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("arch,mse,mae,r2,parameters\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.arch, r.mse, r.mae, r.r2, r.parameters));
    }
    out
}

pub fn cmd_compare(ctx: &Context, feature: Option<&str>, format: ReportFormat) -> Result<()> {
    let mut m = ctx.manifest("compare")?;
    let feature = match feature {
        Some(f) => f.to_string(),
        None => match ctx.cfg.features.first() {
            Some(f) => f.clone(),
            None => ctx.scorer()?.feature_names().first().cloned().ok_or_else(|| Error::invalid("no features"))?,
        },
    };
    let ds = load_dataset(ctx, &feature, &mut m)?;
    let split_seed = ctx.seed(&format!("split/{feature}"));
    m.stage_seeds.insert(format!("split/{feature}"), split_seed);
    let split = split_dataset(&ds, DEFAULT_FRACTIONS, split_seed)?;
    let mut rows = Vec::new();
    for &arch in &ctx.cfg.compare {
        let stage = format!("compare/{feature}/{arch}");
        let seed = ctx.seed(&stage);
        m.stage_seeds.insert(stage, seed);
        let spec = build_arch(arch, ds.meta.d, 1)?;
        let cfg = TrainConfig { seed, ..ctx.cfg.train.clone() };
        let (model, _) = train::<f64>(&split.train, &split.valid, &spec, &cfg)?;
        let Metrics { mse, mae, r2 } = evaluate_metrics(&model, &split.test)?;
        println!("compare {feature} {arch}: mse {mse:.5}, mae {mae:.5}, r2 {r2:.4}, parameters {}", spec.param_count());
        rows.push(CompareRow { arch, mse, mae, r2, parameters: spec.param_count() });
    }
    let dir = ctx.out().join("compare");
    fs::create_dir_all(&dir)?;
    let path = dir.join(format!("compare-{feature}.{}", format.extension()));
    match format {
        ReportFormat::Csv => fs::write(&path, render_compare_csv(&rows))?,
        ReportFormat::Json => fs::write(&path, serde_json::to_string_pretty(&rows)?)?,
    }
    ctx.record_file(&mut m.outputs, &path)?;
    ctx.finish(m)
}
