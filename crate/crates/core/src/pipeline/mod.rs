//! End-to-end experiment driver. Each stage reads the artifacts of earlier
//! stages from the output directory, writes its own, and records their hashes
//! in `manifest.json`.
//!
//! ```text
//! <out>/
//!   manifest.json
//!   data/{train,test}.csv, data/{train,test}.meta.json
//!   gan/{generator,discriminator}.json, gan/train_log.csv
//!   rankings/<selector>.csv, rankings/ganfs.json
//!   eval/metrics.csv, eval/timings.csv, eval/skipped.csv, eval/roc/*.csv
//!   report/summary.md, report/series/<metric>/<selector>_<classifier>.csv
//! ```

mod config;
mod manifest;
mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Axis;

pub use config::{ClassifierConfigs, DataConfig, EvaluateConfig, RunConfig, GANFS, SEEDED_STAGES};
pub use manifest::{
    sha256_file, ExperimentManifest, OutputLock, StageRecord, StageStatus, LOCK_FILE,
    MANIFEST_FILE, TOOL_NAME, TOOL_VERSION,
};
pub use report::{best_by_f1, series, write_report, REPORT_METRICS};

use crate::baseline::{run_baseline, BaselineMethod, FeatureScoreTable};
use crate::flow_data::{
    apply_scaler, cap_per_class, filter_attacks, load_many, make_synthetic, normalize,
    read_dataset, read_metadata, split, write_dataset, write_metadata, DatasetMetadata,
    FlowDataset, GroupKey, SplitSpec,
};
use crate::gan::{self, EpochRecord, TRAIN_LOG_HEADER};
use crate::metrics::{roc_auc, time_block, MetricRow, METRIC_HEADER, TIMING_HEADER};
use crate::neural::{load_checkpoint, save_checkpoint};
use crate::sensitivity::{
    compute_base_deltas, sensitivity_scores, write_ranking_csv, SensitivityReport,
};
use crate::{numfmt, Error, Result};

/// Number of rows per partition after preprocessing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSummary {
    pub train_rows: usize,
    pub test_rows: usize,
    pub n_features: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateSummary {
    pub rows: Vec<MetricRow>,
    /// `(selector, k)` pairs skipped because `k` exceeds the feature count.
    pub skipped: Vec<(String, usize)>,
}

/// An output directory held open for running stages.
#[derive(Debug)]
pub struct Pipeline {
    config: RunConfig,
    dir: PathBuf,
    manifest: ExperimentManifest,
    _lock: OutputLock,
}

impl Pipeline {
    /// Validates `config`, locks its output directory and loads or starts the
    /// manifest.
    pub fn open(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let dir = config.out.clone();
        let lock = OutputLock::acquire(&dir)?;
        let path = dir.join(MANIFEST_FILE);
        let mut manifest = if path.is_file() {
            ExperimentManifest::read(&path)?
        } else {
            ExperimentManifest::new(config)
        };
        manifest.config = config.clone();
        manifest.seeds = config.stage_seeds();
        manifest.version = TOOL_VERSION.into();
        manifest.write(&path)?;
        Ok(Self {
            config: config.resolved(),
            dir,
            manifest,
            _lock: lock,
        })
    }

    /// The configuration with all stage seeds filled in.
    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &ExperimentManifest {
        &self.manifest
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    fn ensure_dir(&self, rel: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }

    fn require(&self, rel: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact(p))
        }
    }

    fn write_manifest(&self) -> Result<()> {
        self.manifest.write(self.path(MANIFEST_FILE))
    }

    /// Runs `body` as stage `name`, recording status, timing and artifact
    /// hashes before and after.
    fn stage<T>(
        &mut self,
        name: &str,
        body: impl FnOnce(&Self) -> Result<(T, Vec<PathBuf>)>,
    ) -> Result<T> {
        self.manifest.stages.insert(
            name.to_string(),
            StageRecord {
                status: StageStatus::Running,
                seconds: None,
                artifacts: Default::default(),
                error: None,
            },
        );
        self.write_manifest()?;
        let start = Instant::now();
        let outcome = body(self).and_then(|(value, files)| {
            let mut artifacts = std::collections::BTreeMap::new();
            for f in files {
                let rel = f
                    .strip_prefix(&self.dir)
                    .unwrap_or(&f)
                    .to_string_lossy()
                    .replace('\\', "/");
                artifacts.insert(rel, sha256_file(&f)?);
            }
            Ok((value, artifacts))
        });
        let record = self.manifest.stages.get_mut(name).expect("inserted above");
        record.seconds = Some(start.elapsed().as_secs_f64());
        let result = match outcome {
            Ok((value, artifacts)) => {
                record.status = StageStatus::Done;
                record.artifacts = artifacts;
                Ok(value)
            }
            Err(e) => {
                record.status = StageStatus::Failed;
                record.error = Some(e.to_string());
                Err(e)
            }
        };
        self.write_manifest()?;
        result
    }

    fn load_partition(&self, name: &str) -> Result<FlowDataset> {
        let csv = self.require(&format!("data/{name}.csv"))?;
        let meta = read_metadata(self.require(&format!("data/{name}.meta.json"))?)?;
        read_dataset(csv, Some(&meta))
    }

    pub fn load_train(&self) -> Result<FlowDataset> {
        self.load_partition("train")
    }

    pub fn load_test(&self) -> Result<FlowDataset> {
        self.load_partition("test")
    }

    /// Loads the input (files or synthetic spec), caps, splits, fits the
    /// scaler on train and writes both normalized partitions.
    pub fn preprocess(&mut self) -> Result<SplitSummary> {
        self.stage("preprocess", |p| {
            let cfg = &p.config.data;
            let seeds = p.config.stage_seeds();
            let (ds, dropped, informative) = if cfg.paths.is_empty() {
                (
                    make_synthetic(&cfg.synthetic)?,
                    Vec::new(),
                    Some(cfg.synthetic.informative.clone()),
                )
            } else {
                let raw = load_many(&cfg.paths)?;
                let dropped: Vec<String> = cfg
                    .drop_columns
                    .iter()
                    .filter(|c| raw.headers.contains(c))
                    .cloned()
                    .collect();
                (
                    crate::flow_data::preprocess(&raw, &cfg.drop_columns)?,
                    dropped,
                    None,
                )
            };
            let ds = match cfg.cap_per_class {
                Some(cap) => cap_per_class(&ds, cap, &GroupKey::RawLabel, seeds["cap"])?,
                None => ds,
            };
            let spec = SplitSpec {
                train_fraction: cfg.train_fraction,
                stratified: cfg.stratified,
                seed: seeds["split"],
            };
            let (train, test) = split(&ds, &spec)?;
            let train = normalize(&train)?;
            let test = apply_scaler(&test, train.scaler().expect("normalized"))?;

            p.ensure_dir("data")?;
            let mut files = Vec::new();
            for (name, part) in [("train", &train), ("test", &test)] {
                let csv = p.path(&format!("data/{name}.csv"));
                write_dataset(&csv, part)?;
                let mut meta = DatasetMetadata::describe(part, dropped.clone(), spec.seed);
                meta.informative = informative.clone();
                let meta_path = p.path(&format!("data/{name}.meta.json"));
                write_metadata(&meta_path, &meta)?;
                files.extend([csv, meta_path]);
            }
            let summary = SplitSummary {
                train_rows: train.n_rows(),
                test_rows: test.n_rows(),
                n_features: train.n_features(),
            };
            Ok((summary, files))
        })
    }

    /// Trains the GAN on the attack rows of the train partition. The training
    /// log is written as epochs finish, so it survives a divergence.
    pub fn train_gan(&mut self, on_epoch: &mut dyn FnMut(&EpochRecord)) -> Result<gan::TrainLog> {
        self.stage("train-gan", |p| {
            let attacks = filter_attacks(&p.load_train()?)?;
            p.ensure_dir("gan")?;
            let log_path = p.path("gan/train_log.csv");
            let file = File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
            let mut log_out = BufWriter::new(file);
            writeln!(log_out, "{TRAIN_LOG_HEADER}").map_err(|e| Error::io(&log_path, e))?;
            let mut io_error = None;
            let trained = gan::train_with(&attacks, &p.config.gan, |r| {
                if io_error.is_none() {
                    if let Err(e) =
                        writeln!(log_out, "{}", r.csv_line()).and_then(|_| log_out.flush())
                    {
                        io_error = Some(e);
                    }
                }
                on_epoch(r);
            });
            log_out.flush().map_err(|e| Error::io(&log_path, e))?;
            if let Some(e) = io_error {
                return Err(Error::io(&log_path, e));
            }
            let (model, log) = trained?;
            let g = p.path("gan/generator.json");
            let d = p.path("gan/discriminator.json");
            save_checkpoint(&g, &model.generator, Some(&model.g_state))?;
            save_checkpoint(&d, &model.discriminator, Some(&model.d_state))?;
            Ok((log, vec![g, d, log_path]))
        })
    }

    /// Scores every feature by discriminator sensitivity over the train
    /// partition's attack rows.
    pub fn rank(&mut self) -> Result<SensitivityReport> {
        self.stage("rank", |p| {
            let ckpt = p.require("gan/discriminator.json")?;
            let (disc, _) = load_checkpoint(&ckpt)?;
            let attacks = filter_attacks(&p.load_train()?)?;
            let data = attacks.features().view();
            let deltas = compute_base_deltas(&data)?;
            let report = sensitivity_scores(
                &disc,
                &data,
                &deltas,
                &p.config.perturb,
                attacks.feature_names(),
            )?;
            p.ensure_dir("rankings")?;
            let csv = p.path(&format!("rankings/{GANFS}.csv"));
            write_ranking_csv(&csv, &report)?;
            let detail = serde_json::json!({
                "checkpoint_sha256": sha256_file(&ckpt)?,
                "n_samples": report.n_samples,
                "factors": report.factors,
                "feature_names": report.feature_names,
                "base_deltas": deltas.delta,
                "scores": report.scores,
            });
            let json = p.path(&format!("rankings/{GANFS}.json"));
            let text = serde_json::to_string_pretty(&detail).expect("json") + "\n";
            std::fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
            Ok((report, vec![csv, json]))
        })
    }

    /// Scores every feature of the train partition with a classical selector.
    pub fn baseline(&mut self, method: BaselineMethod) -> Result<FeatureScoreTable> {
        self.stage(&format!("baseline-{method}"), |p| {
            let table = run_baseline(method, &p.load_train()?, &p.config.baseline)?;
            p.ensure_dir("rankings")?;
            let csv = p.path(&format!("rankings/{method}.csv"));
            table.write_csv(&csv)?;
            Ok((table, vec![csv]))
        })
    }

    /// Fits both classifiers on the top-k train features of every selector and
    /// scores them on the test partition.
    pub fn evaluate(&mut self) -> Result<EvaluateSummary> {
        self.stage("evaluate", |p| {
            let train = p.load_train()?;
            let test = p.load_test()?;
            let d = train.n_features();
            let ks = p.config.evaluate.k_values(d);
            let mut rows = Vec::new();
            let mut skipped = Vec::new();
            let roc_dir = p.ensure_dir("eval/roc")?;
            let mut files = Vec::new();

            for selector in &p.config.evaluate.selectors {
                let ranking = read_ranking_indices(
                    &p.require(&format!("rankings/{selector}.csv"))?,
                    train.feature_names(),
                )?;
                for &k in &ks {
                    if k > ranking.len() {
                        skipped.push((selector.clone(), k));
                        continue;
                    }
                    let cols = &ranking[..k];
                    let train_x = train.features().select(Axis(1), cols);
                    let test_x = test.features().select(Axis(1), cols);
                    for spec in p.config.classifiers.specs() {
                        let (model, secs) =
                            time_block(|| spec.fit(&train_x.view(), train.labels()));
                        let probs = model?.predict_proba(&test_x.view())?;
                        let row = MetricRow::from_predictions(
                            selector,
                            spec.name(),
                            k,
                            &probs,
                            test.labels(),
                            secs.max(1e-9),
                        )?;
                        let (curve, _) = roc_auc(&probs, test.labels())?;
                        let roc = roc_dir.join(format!("{selector}_{}_k{k}.csv", spec.name()));
                        write_roc(&roc, &curve)?;
                        files.push(roc);
                        rows.push(row);
                    }
                }
            }

            let metrics = p.path("eval/metrics.csv");
            let timings = p.path("eval/timings.csv");
            let skipped_path = p.path("eval/skipped.csv");
            write_lines(
                &metrics,
                METRIC_HEADER,
                rows.iter().map(MetricRow::csv_line),
            )?;
            write_lines(
                &timings,
                TIMING_HEADER,
                rows.iter().map(MetricRow::timing_line),
            )?;
            write_lines(
                &skipped_path,
                "selector,k,n_features,reason",
                skipped
                    .iter()
                    .map(|(s, k)| format!("{s},{k},{d},k exceeds feature count")),
            )?;
            files.extend([metrics, timings, skipped_path]);
            Ok((EvaluateSummary { rows, skipped }, files))
        })
    }

    /// Writes per-metric series files and the markdown summary from the
    /// metric table.
    pub fn report(&mut self) -> Result<MetricRow> {
        self.stage("report", |p| {
            let rows = read_metric_table(&p.require("eval/metrics.csv")?)?;
            let files = write_report(&rows, &p.path("report"))?;
            let best = best_by_f1(&rows).cloned().ok_or(Error::EmptyDataset)?;
            Ok((best, files))
        })
    }

    /// Writes the configured synthetic dataset, unnormalized, as a raw CSV
    /// fixture.
    pub fn synth(&mut self) -> Result<PathBuf> {
        self.stage("synth", |p| {
            let spec = &p.config.data.synthetic;
            let ds = make_synthetic(spec)?;
            p.ensure_dir("synthetic")?;
            let csv = p.path("synthetic/synthetic.csv");
            write_dataset(&csv, &ds)?;
            let mut meta = DatasetMetadata::describe(&ds, Vec::new(), spec.seed);
            meta.informative = Some(spec.informative.clone());
            let meta_path = p.path("synthetic/synthetic.meta.json");
            write_metadata(&meta_path, &meta)?;
            Ok((csv.clone(), vec![csv, meta_path]))
        })
    }

    /// Every stage in order: preprocess, train-gan, rank, the baselines named
    /// in the evaluation selectors, evaluate and report.
    pub fn run_all(&mut self, on_epoch: &mut dyn FnMut(&EpochRecord)) -> Result<EvaluateSummary> {
        self.preprocess()?;
        let selectors = self.config.evaluate.selectors.clone();
        if selectors.iter().any(|s| s == GANFS) {
            self.train_gan(on_epoch)?;
            self.rank()?;
        }
        for s in selectors.iter().filter(|s| *s != GANFS) {
            self.baseline(s.parse()?)?;
        }
        let summary = self.evaluate()?;
        self.report()?;
        Ok(summary)
    }
}

fn write_lines(path: &Path, header: &str, lines: impl IntoIterator<Item = String>) -> Result<()> {
    let mut text = format!("{header}\n");
    for l in lines {
        text.push_str(&l);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_roc(path: &Path, curve: &crate::metrics::RocCurve) -> Result<()> {
    let lines = curve.points.iter().enumerate().map(|(i, &(fpr, tpr))| {
        let threshold = if i == 0 {
            f64::INFINITY
        } else {
            curve.thresholds[i - 1]
        };
        format!(
            "{},{},{}",
            numfmt::exact(fpr),
            numfmt::exact(tpr),
            numfmt::exact(threshold)
        )
    });
    write_lines(path, "fpr,tpr,threshold", lines)
}

/// Feature indices in the order listed by a ranking CSV (`S.No.,Feature,<score>`).
pub fn read_ranking_indices(path: &Path, feature_names: &[String]) -> Result<Vec<usize>> {
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let name = record
            .get(1)
            .ok_or_else(|| bad("ranking row without a feature column".into()))?;
        let idx = feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| bad(format!("unknown feature `{name}`")))?;
        if out.contains(&idx) {
            return Err(bad(format!("feature `{name}` listed twice")));
        }
        out.push(idx);
    }
    Ok(out)
}

/// Parses `eval/metrics.csv`.
pub fn read_metric_table(path: &Path) -> Result<Vec<MetricRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(METRIC_HEADER) {
        return Err(Error::HeaderMismatch {
            path: path.to_path_buf(),
        });
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            MetricRow::parse_csv_line(l).map_err(|message| Error::Format {
                path: path.to_path_buf(),
                message,
            })
        })
        .collect()
}
