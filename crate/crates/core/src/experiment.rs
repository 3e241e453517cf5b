//! Declarative experiments: a TOML spec describes task, data, model and
//! training; runs write their spec, provenance, reports, learning curve and
//! final checkpoint into an output directory.
//!
//! Every output file except the training log on stderr is a pure function of
//! the spec and the input data, so repeated runs are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{
    compile_letor_dataset, compile_movielens_dataset, load_cache, parse_letor_file, parse_movielens_file, save_cache,
    subsample_labels, CachedSplit, DocStore, RankingDataset, LETOR_FEATURES,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, fmt_g9, EvalReport, ReportMeta};
use crate::models::{load_checkpoint, save_checkpoint, AnyModel, MatFac, RankMlp, ScoreModel};
use crate::numerics::{derive_seed, seeded_rng};
use crate::perturb::PerturbConfig;
use crate::sampling::{SamplerConfig, SamplerKind};
use crate::trainer::{train, EpochLog, EvalSnapshot, Objective, TrainConfig, STREAM_INIT};

pub const STREAM_SPLIT: u64 = 5;
pub const STREAM_SUBSAMPLE: u64 = 6;

/// Environment variable naming the data root directory.
pub const DATA_ENV: &str = "ADVRANK_DATA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// LETOR MQ2008-semi with the two-layer ReLU network.
    Websearch,
    /// MovieLens 100k with matrix factorization.
    Itemrec,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Websearch => "websearch",
            Task::Itemrec => "itemrec",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    /// Overrides the data root (otherwise `$ADVRANK_DATA` or `data/`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root: Option<PathBuf>,
    /// MovieLens ratings file; default `<root>/ml-100k/u.data`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratings: Option<PathBuf>,
    /// LETOR train file; default `<root>/MQ2008-semi/Fold1/train.txt`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    /// LETOR test file; default `<root>/MQ2008-semi/Fold1/test.txt`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    /// Share of MovieLens positives used for training.
    pub split_ratio: f64,
    /// Share of training positives kept.
    pub label_fraction: f64,
    /// Reuse compiled splits from `<root>/.cache`.
    pub cache: bool,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            root: None,
            ratings: None,
            train: None,
            test: None,
            split_ratio: 0.8,
            label_fraction: 1.0,
            cache: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    /// Hidden width of the ranking network.
    pub hidden: usize,
    /// Latent dimension of matrix factorization.
    pub latent_dim: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            hidden: LETOR_FEATURES,
            latent_dim: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSpec {
    pub cutoffs: Vec<usize>,
    /// Evaluate every this many epochs (the last epoch is always evaluated).
    pub every: usize,
}

impl Default for EvalSpec {
    fn default() -> Self {
        Self {
            cutoffs: crate::eval::DEFAULT_CUTOFFS.to_vec(),
            every: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub fractions: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            fractions: vec![0.05, 0.1, 0.2, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub task: Task,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub model: ModelSpec,
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
}

impl ExperimentSpec {
    /// Per-task defaults: web search trains the ReLU network with epsilon 300
    /// and learning rate 0.004; item recommendation trains matrix
    /// factorization with epsilon 0.01, learning rate 0.01 and weight decay 0.01.
    pub fn defaults(task: Task) -> Self {
        let (epsilon, lr, weight_decay, epochs) = match task {
            Task::Websearch => (300.0, 0.004, 0.0, 100),
            Task::Itemrec => (0.01, 0.01, 0.01, 100),
        };
        Self {
            task,
            data: DataSpec::default(),
            model: ModelSpec::default(),
            train: TrainConfig {
                objective: Objective::PairwiseAt,
                epochs,
                learning_rate: lr,
                weight_decay,
                perturb: PerturbConfig::with_epsilon(epsilon),
                sampler: SamplerConfig::default(),
                ..TrainConfig::default()
            },
            eval: EvalSpec::default(),
            sweep: SweepSpec::default(),
        }
    }

    /// Parses a spec; keys left out take the defaults of its `task`.
    pub fn from_toml(text: &str) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e| Error::Config(format!("spec: {e}")))?;
        let task: Task = user
            .get("task")
            .ok_or_else(|| Error::Config("spec: missing `task`".into()))?
            .clone()
            .try_into()
            .map_err(|e| Error::Config(format!("spec: task: {e}")))?;
        let mut merged: toml::Table = toml::Table::try_from(Self::defaults(task))
            .map_err(|e| Error::Config(format!("spec defaults: {e}")))?;
        merge(&mut merged, user);
        toml::Value::Table(merged)
            .try_into()
            .map_err(|e| Error::Config(format!("spec: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    /// sha256 of the serialized spec.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn method_name(&self) -> String {
        let sampler = match self.train.sampler.kind {
            SamplerKind::Uniform => "uniform",
            SamplerKind::Adversarial => "adversarial",
        };
        format!("{}/{}", self.train.objective.name(), sampler)
    }

    /// Checks every field and the input files, reporting all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Err(e) = self.train.validate() {
            problems.push(e.to_string());
        }
        if self.eval.cutoffs.is_empty() || self.eval.cutoffs.contains(&0) {
            problems.push("eval.cutoffs must be non-empty and >= 1".into());
        }
        if self.eval.every == 0 {
            problems.push("eval.every must be >= 1".into());
        }
        if !(self.data.split_ratio > 0.0 && self.data.split_ratio < 1.0) {
            problems.push(format!("data.split_ratio must be in (0, 1), got {}", self.data.split_ratio));
        }
        let in_unit = |f: f64| f > 0.0 && f <= 1.0;
        if !in_unit(self.data.label_fraction) {
            problems.push(format!("data.label_fraction must be in (0, 1], got {}", self.data.label_fraction));
        }
        if let Some(f) = self.sweep.fractions.iter().find(|&&f| !in_unit(f)) {
            problems.push(format!("sweep.fractions must be in (0, 1], got {f}"));
        }
        if self.model.hidden == 0 || self.model.latent_dim == 0 {
            problems.push("model dimensions must be >= 1".into());
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        for p in self.input_files() {
            if !p.is_file() {
                return Err(Error::MissingFile(p));
            }
        }
        Ok(())
    }

    pub fn data_root(&self) -> PathBuf {
        if let Some(r) = &self.data.root {
            return r.clone();
        }
        if let Some(r) = std::env::var_os(DATA_ENV) {
            return PathBuf::from(r);
        }
        let local = PathBuf::from("data");
        if local.is_dir() {
            return local;
        }
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
    }

    /// Input files this spec reads.
    pub fn input_files(&self) -> Vec<PathBuf> {
        let root = self.data_root();
        match self.task {
            Task::Itemrec => vec![self
                .data
                .ratings
                .clone()
                .unwrap_or_else(|| root.join("ml-100k").join("u.data"))],
            Task::Websearch => {
                let fold = root.join("MQ2008-semi").join("Fold1");
                vec![
                    self.data.train.clone().unwrap_or_else(|| fold.join("train.txt")),
                    self.data.test.clone().unwrap_or_else(|| fold.join("test.txt")),
                ]
            }
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// A compiled train/test split.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub train: RankingDataset,
    pub test: RankingDataset,
    pub source_digest: String,
    pub notes: Vec<String>,
}

fn digest_files(paths: &[PathBuf]) -> Result<String> {
    let mut h = Sha256::new();
    for p in paths {
        h.update(fs::read(p)?);
    }
    Ok(hex::encode(h.finalize()))
}

/// Parses and compiles the spec's data, reusing a cached split when allowed.
pub fn load_data(spec: &ExperimentSpec) -> Result<LoadedData> {
    let files = spec.input_files();
    for p in &files {
        if !p.is_file() {
            return Err(Error::MissingFile(p.clone()));
        }
    }
    let digest = digest_files(&files)?;
    let seed = spec.train.seed;
    let cache_path = spec.data_root().join(".cache").join(format!(
        "{}-{}-{}-{}.bin",
        spec.task.name(),
        &digest[..16],
        seed,
        spec.data.split_ratio
    ));
    let cached = if spec.data.cache { load_cache(&cache_path)? } else { None };
    let split = match cached {
        Some(c) if c.source_digest == digest && c.seed == seed => c,
        _ => {
            let split = compile(spec, &files, &digest)?;
            if spec.data.cache {
                // write-then-rename so concurrent runs never read a partial file
                let tmp = cache_path.with_extension(format!("tmp{}", std::process::id()));
                if save_cache(&split, &tmp).is_ok() {
                    let _ = fs::rename(&tmp, &cache_path);
                }
            }
            split
        }
    };
    let mut notes = Vec::new();
    let mut train = split.train;
    let dropped = train.retain_trainable();
    if !dropped.is_empty() {
        notes.push(format!("{} training queries without positives or negatives dropped", dropped.len()));
    }
    Ok(LoadedData {
        train,
        test: split.test,
        source_digest: digest,
        notes,
    })
}

fn compile(spec: &ExperimentSpec, files: &[PathBuf], digest: &str) -> Result<CachedSplit> {
    let seed = spec.train.seed;
    match spec.task {
        Task::Itemrec => {
            let (rows, ids) = parse_movielens_file(&files[0])?;
            let mut rng = seeded_rng(derive_seed(seed, STREAM_SPLIT));
            let s = compile_movielens_dataset(&rows, &ids, spec.data.split_ratio, &mut rng)?;
            Ok(CachedSplit {
                source_digest: digest.to_string(),
                seed,
                train: s.train,
                test: s.test,
                ids: Some(ids),
            })
        }
        Task::Websearch => {
            let train = compile_letor_dataset(&parse_letor_file(&files[0])?);
            let test = compile_letor_dataset(&parse_letor_file(&files[1])?);
            Ok(CachedSplit {
                source_digest: digest.to_string(),
                seed,
                train,
                test,
                ids: None,
            })
        }
    }
}

/// Seed for subsampling labels at `fraction`.
pub fn fraction_seed(master: u64, fraction: f64) -> u64 {
    derive_seed(derive_seed(master, STREAM_SUBSAMPLE), fraction.to_bits())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: EvalReport,
    pub logs: Vec<EpochLog>,
    pub model: AnyModel,
}

/// Options that affect only side channels, never output files.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Print one tab-separated line per epoch to stderr.
    pub log: bool,
}

/// Loads the data and runs one experiment.
pub fn run_experiment(spec: &ExperimentSpec, out: &Path, opts: RunOptions) -> Result<RunOutcome> {
    spec.validate()?;
    let data = load_data(spec)?;
    run_on_data(spec, &data, out, opts)
}

/// Runs one experiment on already loaded data.
pub fn run_on_data(spec: &ExperimentSpec, data: &LoadedData, out: &Path, opts: RunOptions) -> Result<RunOutcome> {
    spec.validate()?;
    let mut rng = seeded_rng(fraction_seed(spec.train.seed, spec.data.label_fraction));
    let train_set = subsample_labels(&data.train, spec.data.label_fraction, &mut rng)?;
    let mut init = seeded_rng(derive_seed(spec.train.seed, STREAM_INIT));
    let outcome = match (&spec.task, &train_set.docs) {
        (Task::Websearch, DocStore::Features { dim, .. }) => {
            let model = RankMlp::new(*dim, spec.model.hidden, &mut init);
            train_and_report(model, spec, &train_set, &data.test, opts)?
        }
        (Task::Itemrec, DocStore::Items { num_users, num_items }) => {
            let model = MatFac::new(*num_users, *num_items, spec.model.latent_dim, &mut init);
            train_and_report(model, spec, &train_set, &data.test, opts)?
        }
        _ => return Err(Error::Data(format!("data does not match task {}", spec.task.name()))),
    };
    write_outputs(spec, data, &train_set, &outcome, out)?;
    Ok(outcome)
}

fn train_and_report<M>(
    mut model: M,
    spec: &ExperimentSpec,
    train_set: &RankingDataset,
    test: &RankingDataset,
    opts: RunOptions,
) -> Result<RunOutcome>
where
    M: ScoreModel + Into<AnyModel>,
{
    let meta = |epoch| ReportMeta {
        method: spec.method_name(),
        config_hash: spec.config_hash(),
        seed: spec.train.seed,
        epoch,
    };
    let epochs = spec.train.epochs;
    let mut last: Option<EvalReport> = None;
    let logs = train(&mut model, train_set, &spec.train, |log, m| {
        let epoch = log.epoch;
        let snap = if epoch % spec.eval.every == 0 || epoch == epochs {
            let r = evaluate(m, test, &spec.eval.cutoffs, meta(epoch))?;
            let snap = EvalSnapshot {
                cutoffs: r.cutoffs.clone(),
                precision: r.mean_precision.clone(),
                ndcg: r.mean_ndcg.clone(),
            };
            last = Some(r);
            Some(snap)
        } else {
            None
        };
        if opts.log {
            eprintln!("{}", log_line(log, snap.as_ref()));
        }
        Ok(snap)
    })?;
    Ok(RunOutcome {
        report: last.expect("last epoch is always evaluated"),
        logs,
        model: model.into(),
    })
}

fn log_line(l: &EpochLog, eval: Option<&EvalSnapshot>) -> String {
    let mut s = format!("epoch {}\tloss {}\t{:.2}s", l.epoch, fmt_g9(l.mean_loss), l.seconds);
    if let Some(e) = eval {
        for (n, v) in e.cutoffs.iter().zip(&e.precision) {
            write!(s, "\tP@{n} {:.4}", v).unwrap();
        }
        for (n, v) in e.cutoffs.iter().zip(&e.ndcg) {
            write!(s, "\tNDCG@{n} {:.4}", v).unwrap();
        }
    }
    s
}

/// `epoch, mean_loss, P@n..., NDCG@n...`; metric cells are empty on epochs
/// without evaluation.
pub fn curve_tsv(logs: &[EpochLog], cutoffs: &[usize]) -> String {
    let mut s = String::from("epoch\tmean_loss");
    for n in cutoffs {
        write!(s, "\tP@{n}").unwrap();
    }
    for n in cutoffs {
        write!(s, "\tNDCG@{n}").unwrap();
    }
    s.push('\n');
    for l in logs {
        write!(s, "{}\t{}", l.epoch, fmt_g9(l.mean_loss)).unwrap();
        match &l.eval {
            Some(e) => {
                for v in e.precision.iter().chain(&e.ndcg) {
                    write!(s, "\t{}", fmt_g9(*v)).unwrap();
                }
            }
            None => s.push_str(&"\t".repeat(2 * cutoffs.len())),
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct Provenance<'a> {
    code_version: String,
    master_seed: u64,
    config_hash: String,
    task: &'a str,
    method: String,
    source_digest: &'a str,
    train_queries: usize,
    train_positives: usize,
    test_queries: usize,
    notes: &'a [String],
}

fn write_outputs(
    spec: &ExperimentSpec,
    data: &LoadedData,
    train_set: &RankingDataset,
    outcome: &RunOutcome,
    out: &Path,
) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("spec.toml"), spec.to_toml())?;
    let prov = Provenance {
        code_version: format!("advrank {}", env!("CARGO_PKG_VERSION")),
        master_seed: spec.train.seed,
        config_hash: spec.config_hash(),
        task: spec.task.name(),
        method: spec.method_name(),
        source_digest: &data.source_digest,
        train_queries: train_set.queries.len(),
        train_positives: train_set.num_labeled(),
        test_queries: data.test.queries.len(),
        notes: &data.notes,
    };
    fs::write(out.join("provenance.json"), serde_json::to_string_pretty(&prov)? + "\n")?;
    fs::write(out.join("report.tsv"), outcome.report.to_tsv())?;
    fs::write(out.join("report.json"), outcome.report.to_json())?;
    fs::write(out.join("curve.tsv"), curve_tsv(&outcome.logs, &spec.eval.cutoffs))?;
    save_checkpoint(&outcome.model, &out.join("model.json"))?;
    Ok(())
}

fn fraction_label(f: f64) -> String {
    format!("fraction-{f}")
}

/// One full run per label fraction; writes `sweep.tsv` with a fraction column.
pub fn run_sweep(spec: &ExperimentSpec, out: &Path, opts: RunOptions) -> Result<Vec<(f64, EvalReport)>> {
    spec.validate()?;
    let data = load_data(spec)?;
    let mut rows = Vec::new();
    for &f in &spec.sweep.fractions {
        let mut s = spec.clone();
        s.data.label_fraction = f;
        let r = run_on_data(&s, &data, &out.join(fraction_label(f)), opts)?;
        rows.push((f, r.report));
    }
    let mut tsv = String::from("fraction\tmethod\tmetric\tvalue\n");
    for (f, r) in &rows {
        for line in r.tsv_rows().lines() {
            writeln!(tsv, "{f}\t{line}").unwrap();
        }
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("sweep.tsv"), tsv)?;
    fs::write(out.join("spec.toml"), spec.to_toml())?;
    Ok(rows)
}

/// Objectives compared by the ablation grid.
pub const ABLATION_OBJECTIVES: [Objective; 4] = [
    Objective::PairwiseAt,
    Objective::PairwiseSvat,
    Objective::FullVat,
    Objective::PlainPairwise,
];

pub const ABLATION_SAMPLERS: [SamplerKind; 2] = [SamplerKind::Uniform, SamplerKind::Adversarial];

#[derive(Debug, Clone, PartialEq)]
pub struct AblationCell {
    pub objective: Objective,
    pub sampler: SamplerKind,
    pub report: EvalReport,
}

fn sampler_name(k: SamplerKind) -> &'static str {
    match k {
        SamplerKind::Uniform => "uniform",
        SamplerKind::Adversarial => "adversarial",
    }
}

/// Sampler x objective grid with shared seeds and one shared data split.
/// Cells run in parallel; `grid.tsv` lists them in a fixed order.
pub fn run_ablation(spec: &ExperimentSpec, out: &Path, opts: RunOptions) -> Result<Vec<AblationCell>> {
    spec.validate()?;
    let data = load_data(spec)?;
    let cells: Vec<(Objective, SamplerKind)> = ABLATION_OBJECTIVES
        .iter()
        .flat_map(|&o| ABLATION_SAMPLERS.iter().map(move |&s| (o, s)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(objective, sampler)| {
            let mut s = spec.clone();
            s.train.objective = objective;
            s.train.sampler.kind = sampler;
            let dir = out.join(format!("{}-{}", objective.name(), sampler_name(sampler)));
            run_on_data(&s, &data, &dir, opts).map(|r| AblationCell {
                objective,
                sampler,
                report: r.report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tsv = String::from("objective\tsampler");
    for n in &spec.eval.cutoffs {
        write!(tsv, "\tP@{n}").unwrap();
    }
    for n in &spec.eval.cutoffs {
        write!(tsv, "\tNDCG@{n}").unwrap();
    }
    tsv.push('\n');
    for c in &results {
        write!(tsv, "{}\t{}", c.objective.name(), sampler_name(c.sampler)).unwrap();
        for v in c.report.mean_precision.iter().chain(&c.report.mean_ndcg) {
            write!(tsv, "\t{}", fmt_g9(*v)).unwrap();
        }
        tsv.push('\n');
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("grid.tsv"), tsv)?;
    fs::write(out.join("spec.toml"), spec.to_toml())?;
    Ok(results)
}

/// Evaluates a saved model on the spec's test split.
pub fn evaluate_checkpoint(spec: &ExperimentSpec, checkpoint: &Path, out: &Path) -> Result<EvalReport> {
    spec.validate()?;
    let model = load_checkpoint(checkpoint)?;
    let data = load_data(spec)?;
    let meta = ReportMeta {
        method: spec.method_name(),
        config_hash: spec.config_hash(),
        seed: spec.train.seed,
        epoch: spec.train.epochs,
    };
    let cutoffs = &spec.eval.cutoffs;
    let report = match &model {
        AnyModel::RankMlp(m) => evaluate(m, &data.test, cutoffs, meta),
        AnyModel::MatFac(m) => evaluate(m, &data.test, cutoffs, meta),
        AnyModel::EmbedCosine(m) => evaluate(m, &data.test, cutoffs, meta),
    }?;
    fs::create_dir_all(out)?;
    fs::write(out.join("report.tsv"), report.to_tsv())?;
    fs::write(out.join("report.json"), report.to_json())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_defaults() {
        let w = ExperimentSpec::defaults(Task::Websearch);
        assert_eq!(w.train.perturb.epsilon, 300.0);
        assert_eq!(w.train.learning_rate, 0.004);
        let i = ExperimentSpec::defaults(Task::Itemrec);
        assert_eq!(i.train.perturb.epsilon, 0.01);
        assert_eq!(i.model.latent_dim, 5);
        assert_eq!(i.eval.every, 25);
    }

    #[test]
    fn toml_merges_over_task_defaults() {
        let s = ExperimentSpec::from_toml("task = \"itemrec\"\n[train]\nepochs = 7\n[train.sampler]\nkind = \"uniform\"\n").unwrap();
        assert_eq!(s.train.epochs, 7);
        assert_eq!(s.train.sampler.kind, SamplerKind::Uniform);
        assert_eq!(s.train.sampler.tau, 1.0);
        assert_eq!(s.train.learning_rate, 0.01);
        let back = ExperimentSpec::from_toml(&s.to_toml()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn spec_errors_are_config_errors() {
        assert!(ExperimentSpec::from_toml("[train]\nepochs = 1").unwrap_err().is_config());
        assert!(ExperimentSpec::from_toml("task = \"itemrec\"\nbogus = 1").unwrap_err().is_config());
        let mut s = ExperimentSpec::defaults(Task::Itemrec);
        s.train.epochs = 0;
        s.eval.cutoffs.clear();
        let err = s.validate().unwrap_err();
        assert!(err.is_config());
        let msg = err.to_string();
        assert!(msg.contains("epochs") && msg.contains("cutoffs"), "{msg}");
    }

    #[test]
    fn curve_has_blank_cells_between_evaluations() {
        let logs = vec![
            EpochLog {
                epoch: 1,
                mean_loss: 0.5,
                seconds: 9.0,
                positives: 1,
                negatives_sampled: 1,
                eval: None,
            },
            EpochLog {
                epoch: 2,
                mean_loss: 0.25,
                seconds: 9.0,
                positives: 1,
                negatives_sampled: 1,
                eval: Some(EvalSnapshot {
                    cutoffs: vec![1],
                    precision: vec![1.0],
                    ndcg: vec![0.5],
                }),
            },
        ];
        assert_eq!(curve_tsv(&logs, &[1]), "epoch\tmean_loss\tP@1\tNDCG@1\n1\t0.5\t\t\n2\t0.25\t1\t0.5\n");
    }
}
