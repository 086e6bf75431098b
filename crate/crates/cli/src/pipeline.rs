//! Pipeline stages, their on-disk artifacts and the aggregated report.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::Instant;

use elco_core::analysis::{
    dominating_label_distribution, embedding_export_csv, mean_std, selftrain_ablation, separability_report,
    sparsity_sweep, trial_seed, AblationReport, Composition, DomLabelHistogram, PipelineConfig, SeparabilityReport,
    SparsityTable, SweepRow,
};
use elco_core::augment::{ElectorsFile, SelfTraining};
use elco_core::cluster::ClusterDump;
use elco_core::dataset::{EDGES_FILE, META_FILE, NODES_FILE, SPLITS_FILE};
use elco_core::gnn::{history_csv, train_gcn};
use elco_core::seed::derive_seed;
use elco_core::{
    elco_augment, load_dataset, overlapping_clusters, validate_dataset, write_dataset, ClusterSet, Dataset, Graph,
};
use elco_core::{Provenance, Splits};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{digest, GnnConfig, RunConfig};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

const LOCK_FILE: &str = ".elco.lock";
const STAMP_FILE: &str = "stage.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Base,
    Augmented,
}

impl Which {
    fn dir(self) -> &'static str {
        match self {
            Which::Base => "train_base",
            Which::Augmented => "train_augmented",
        }
    }
}

impl FromStr for Which {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Which::Base),
            "augmented" => Ok(Which::Augmented),
            _ => Err(CliError::Config(format!(
                "train target must be base or augmented, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    L2,
    Domlabel,
    Sparsity,
    Ablation,
    Embedding,
    All,
}

impl FromStr for Metric {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "l2" => Metric::L2,
            "domlabel" => Metric::Domlabel,
            "sparsity" => Metric::Sparsity,
            "ablation" => Metric::Ablation,
            "embedding" => Metric::Embedding,
            "all" => Metric::All,
            _ => {
                return Err(CliError::Config(format!(
                    "metric must be one of l2, domlabel, sparsity, ablation, embedding, all; got {s:?}"
                )))
            }
        })
    }
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Which::Base => "base",
            Which::Augmented => "augmented",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_val_acc: f64,
    pub test_acc: f64,
}

/// `result.json` of a training stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub provenance: Provenance,
    pub graph: Which,
    pub config: GnnConfig,
    pub mean_best_val_acc: f64,
    pub mean_test_acc: f64,
    pub std_test_acc: f64,
    pub trials: Vec<TrialResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub count: usize,
    pub mean_size: f64,
    pub max_size: usize,
    pub two_node_clusters: usize,
    pub covered_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectorSummary {
    pub total: usize,
    pub observed: usize,
    pub predicted: usize,
    pub unlabeled: usize,
    /// Share of electors labeled by winner-takes-all before self-training.
    pub observed_fraction: f64,
    pub diffusion_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomLabelSummary {
    pub mean: f64,
    pub fraction_pure: f64,
    pub scored: usize,
    pub skipped: usize,
}

impl From<&DomLabelHistogram> for DomLabelSummary {
    fn from(h: &DomLabelHistogram) -> Self {
        Self {
            mean: h.mean(),
            fraction_pure: h.fraction_pure(),
            scored: h.proportions.len(),
            skipped: h.skipped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomLabelFile {
    pub provenance: Provenance,
    pub g: DomLabelSummary,
    pub g_prime: DomLabelSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSummary {
    pub composition: Composition,
    pub final_probe_acc: Option<f64>,
    pub chance_level: f64,
    pub uniform_chance: f64,
    pub iterations: usize,
    pub promoted: usize,
}

impl From<&AblationReport> for AblationSummary {
    fn from(r: &AblationReport) -> Self {
        Self {
            composition: r.composition,
            final_probe_acc: r.final_probe_acc(),
            chance_level: r.chance_level,
            uniform_chance: r.uniform_chance,
            iterations: r.rows.len(),
            promoted: r.rows.last().map_or(0, |row| row.cum_promoted),
        }
    }
}

/// `report.json`: accuracies are fractions, separability values are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub provenance: Provenance,
    pub dataset: String,
    pub dataset_hash: String,
    pub threads: usize,
    pub clusters: ClusterSummary,
    pub electors: ElectorSummary,
    pub baseline_acc: f64,
    pub baseline_std: f64,
    pub elco_acc: f64,
    pub elco_std: f64,
    pub delta_acc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separability: Option<SeparabilityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domlabel: Option<DomLabelFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<Vec<SweepRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation: Option<Vec<AblationSummary>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Stamp {
    stage: String,
    hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Documented<T> {
    provenance: Provenance,
    #[serde(flatten)]
    body: T,
}

struct OutputLock(PathBuf);

impl OutputLock {
    fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(io(dir))?;
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(OutputLock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Locked(path)),
            Err(e) => Err(CliError::Io { path, source: e }),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io(parent))?;
    }
    fs::write(path, text).map_err(io(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(elco_core::Error::from)? + "\n";
    write_text(path, &text)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

/// An opened output directory bound to one resolved config and dataset.
struct Run {
    config: RunConfig,
    provenance: Provenance,
    dataset: Dataset,
    dataset_hash: String,
    out: PathBuf,
    clusters: OnceLock<ClusterSet>,
    _lock: OutputLock,
}

impl Run {
    fn open(config: &RunConfig) -> Result<Self> {
        let lock = OutputLock::acquire(&config.out)?;
        let dir = &config.dataset;
        if !dir.join(NODES_FILE).exists() {
            return Err(CliError::Missing {
                what: "dataset",
                path: dir.clone(),
                command: "python3 scripts/planetoid_to_canonical.py",
            });
        }
        let dataset = load_dataset(dir)?;
        let mut bytes = Vec::new();
        for name in [META_FILE, NODES_FILE, EDGES_FILE, SPLITS_FILE] {
            let path = dir.join(name);
            bytes.extend(fs::read(&path).map_err(io(&path))?);
        }
        let provenance = Provenance {
            config_hash: config.hash(),
            seed: config.seed,
        };
        let run = Run {
            config: config.clone(),
            provenance,
            dataset,
            dataset_hash: digest(&bytes),
            out: config.out.clone(),
            clusters: OnceLock::new(),
            _lock: lock,
        };
        write_json(
            &run.out.join("config.json"),
            &json!({ "provenance": run.provenance, "config": run.config }),
        )?;
        Ok(run)
    }

    fn stage_hash(&self, stage: &str, inputs: serde_json::Value) -> String {
        let key = json!({
            "stage": stage,
            "dataset": self.dataset_hash,
            "seed": self.config.seed,
            "inputs": inputs,
        });
        digest(key.to_string().as_bytes())
    }

    fn fresh(&self, dir: &str, hash: &str) -> bool {
        read_json::<Stamp>(&self.out.join(dir).join(STAMP_FILE)).is_ok_and(|s| s.hash == hash)
    }

    /// Runs `compute` unless the stage directory already holds outputs for `hash`.
    fn stage(&self, dir: &str, hash: &str, compute: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        if self.fresh(dir, hash) {
            eprintln!("[{dir}] up to date");
            return Ok(());
        }
        let path = self.out.join(dir);
        let _ = fs::remove_file(path.join(STAMP_FILE));
        let start = Instant::now();
        compute(&path)?;
        write_json(
            &path.join(STAMP_FILE),
            &Stamp {
                stage: dir.to_string(),
                hash: hash.to_string(),
            },
        )?;
        eprintln!("[{dir}] done in {:.1?}", start.elapsed());
        Ok(())
    }

    fn csv_header(&self) -> String {
        format!(
            "# config_hash={} seed={}\n",
            self.provenance.config_hash, self.provenance.seed
        )
    }

    fn cluster_seed(&self) -> u64 {
        derive_seed(self.config.seed, "cluster")
    }

    fn cluster_hash(&self) -> String {
        self.stage_hash("cluster", json!(self.config.cluster))
    }

    fn augment_hash(&self) -> String {
        self.stage_hash(
            "augment",
            json!({ "cluster": self.cluster_hash(), "augment": self.config.augment }),
        )
    }

    fn train_hash(&self, which: Which) -> String {
        let upstream = match which {
            Which::Base => String::new(),
            Which::Augmented => self.augment_hash(),
        };
        self.stage_hash(
            which.dir(),
            json!({ "upstream": upstream, "gnn": self.config.gnn, "trials": self.config.trials }),
        )
    }

    fn clusters(&self) -> Result<&ClusterSet> {
        if let Some(set) = self.clusters.get() {
            return Ok(set);
        }
        let hash = self.cluster_hash();
        self.stage("cluster", &hash, |dir| {
            let set = overlapping_clusters(&self.dataset.graph, &self.config.cluster, self.cluster_seed())?;
            let mut dump = ClusterDump::new(&set, self.cluster_seed(), self.config.cluster.min_cluster_size);
            dump.provenance = Some(self.provenance.clone());
            write_json(&dir.join("clusters.json"), &dump)
        })?;
        let dump: ClusterDump = read_json(&self.out.join("cluster/clusters.json"))?;
        Ok(self
            .clusters
            .get_or_init(|| dump.into_set().expect("written from a valid cluster set")))
    }

    fn augment(&self) -> Result<()> {
        let hash = self.augment_hash();
        if self.fresh("augment", &hash) {
            eprintln!("[augment] up to date");
            return Ok(());
        }
        let clusters = self.clusters()?;
        self.stage("augment", &hash, |dir| {
            let g = &self.dataset.graph;
            let aug = elco_augment(g, &self.dataset.splits, clusters, &self.config.augment)?;
            let data = dir.join("dataset");
            let name = format!("{}-elco", self.dataset.meta.dataset_name);
            write_dataset(&aug.graph, &aug.splits, &data, &name, Some(self.provenance.clone()))?;
            let report = validate_dataset(&data)?;
            if let Some(v) = report.violations.first() {
                return Err(CliError::Invalid(format!("{}: {}", data.display(), v.message)));
            }
            let electors = ElectorsFile {
                provenance: Some(self.provenance.clone()),
                electors: aug.records(),
            };
            write_json(&dir.join("electors.json"), &electors)?;
            write_json(
                &dir.join("diffusion.json"),
                &Documented {
                    provenance: self.provenance.clone(),
                    body: aug.diffusion.clone(),
                },
            )
        })
    }

    /// The augmented graph, splits and elector records written by `augment`.
    fn augmented(&self) -> Result<(Dataset, ElectorsFile, SelfTraining)> {
        let dir = self.out.join("augment");
        if !dir.join(STAMP_FILE).exists() {
            return Err(CliError::Missing {
                what: "augmented dataset",
                path: dir,
                command: "elco augment",
            });
        }
        if !self.fresh("augment", &self.augment_hash()) {
            return Err(CliError::Stale {
                what: "augmented dataset",
                path: dir,
                command: "elco augment",
            });
        }
        let data = load_dataset(dir.join("dataset"))?;
        let electors: ElectorsFile = read_json(&dir.join("electors.json"))?;
        let diffusion: Documented<SelfTraining> = read_json(&dir.join("diffusion.json"))?;
        Ok((data, electors, diffusion.body))
    }

    fn train(&self, which: Which) -> Result<TrainResult> {
        let (graph, splits): (Graph, Splits) = match which {
            Which::Base => (self.dataset.graph.clone(), self.dataset.splits.clone()),
            Which::Augmented => {
                let (data, _, _) = self.augmented()?;
                (data.graph, data.splits)
            }
        };
        let hash = self.train_hash(which);
        let dir_name = which.dir();
        self.stage(dir_name, &hash, |dir| {
            let base_seed = derive_seed(self.config.seed, "train");
            let outcomes = (0..self.config.trials)
                .into_par_iter()
                .map(|t| {
                    let seed = trial_seed(base_seed, t);
                    train_gcn(&graph, &splits, &self.config.gnn.train_config(seed)).map(|o| (t, seed, o))
                })
                .collect::<elco_core::Result<Vec<_>>>()?;
            let mut trials = Vec::new();
            for (t, seed, o) in outcomes {
                write_text(
                    &dir.join(format!("trial_{t:02}/history.csv")),
                    &(self.csv_header() + &history_csv(&o.history)),
                )?;
                trials.push(TrialResult {
                    trial: t,
                    seed,
                    best_epoch: o.best_epoch,
                    epochs_run: o.epochs_run(),
                    best_val_acc: o.best_val_acc,
                    test_acc: o.test_acc,
                });
            }
            let tests: Vec<f64> = trials.iter().map(|t| t.test_acc).collect();
            let vals: Vec<f64> = trials.iter().map(|t| t.best_val_acc).collect();
            let (mean_test_acc, std_test_acc) = mean_std(&tests);
            let result = TrainResult {
                provenance: self.provenance.clone(),
                graph: which,
                config: self.config.gnn,
                mean_best_val_acc: mean_std(&vals).0,
                mean_test_acc,
                std_test_acc,
                trials,
            };
            write_json(&dir.join("result.json"), &result)
        })?;
        read_json(&self.out.join(dir_name).join("result.json"))
    }

    fn separability(&self) -> Result<SeparabilityReport> {
        let clusters = self.clusters()?;
        let a = &self.config.analysis;
        let hash = self.stage_hash(
            "separability",
            json!({ "cluster": self.cluster_hash(), "gbdt": self.config.augment.gbdt, "folds": a.cv_folds }),
        );
        self.stage("analysis/separability", &hash, |dir| {
            let report = separability_report(
                &self.dataset.graph,
                clusters,
                &self.dataset.meta.dataset_name,
                &self.config.augment.gbdt,
                a.cv_folds,
                derive_seed(self.config.seed, "separability"),
            )?;
            write_json(
                &dir.join("separability.json"),
                &Documented {
                    provenance: self.provenance.clone(),
                    body: report,
                },
            )
        })?;
        let doc: Documented<SeparabilityReport> = read_json(&self.out.join("analysis/separability/separability.json"))?;
        Ok(doc.body)
    }

    fn domlabel(&self) -> Result<DomLabelFile> {
        let (data, _, _) = self.augmented()?;
        let clusters = self.clusters()?;
        let hash = self.stage_hash("domlabel", json!({ "augment": self.augment_hash() }));
        self.stage("analysis/domlabel", &hash, |dir| {
            let g = dominating_label_distribution(clusters, self.dataset.graph.labels(), "G");
            let reclustered = overlapping_clusters(&data.graph, &self.config.cluster, self.cluster_seed())?;
            let gp = dominating_label_distribution(&reclustered, data.graph.labels(), "G'");
            write_text(&dir.join("domlabel_G.csv"), &(self.csv_header() + &g.to_csv()))?;
            write_text(&dir.join("domlabel_Gprime.csv"), &(self.csv_header() + &gp.to_csv()))?;
            write_json(
                &dir.join("domlabel.json"),
                &DomLabelFile {
                    provenance: self.provenance.clone(),
                    g: (&g).into(),
                    g_prime: (&gp).into(),
                },
            )
        })?;
        read_json(&self.out.join("analysis/domlabel/domlabel.json"))
    }

    fn sparsity(&self) -> Result<Vec<SweepRow>> {
        let a = &self.config.analysis;
        let hash = self.stage_hash(
            "sparsity",
            json!({
                "cluster": self.config.cluster,
                "augment": self.config.augment,
                "gnn": self.config.gnn,
                "fractions": a.sparsity_fractions,
                "trials": a.sparsity_trials,
            }),
        );
        self.stage("analysis/sparsity", &hash, |dir| {
            let bundle = PipelineConfig {
                cluster: self.config.cluster,
                augment: self.config.augment,
                train: self.config.gnn.train_config(0),
            };
            let table = sparsity_sweep(
                &self.dataset.graph,
                &self.dataset.splits,
                &a.sparsity_fractions,
                a.sparsity_trials,
                &bundle,
                derive_seed(self.config.seed, "sparsity"),
            )?;
            write_text(&dir.join("sparsity.csv"), &(self.csv_header() + &table.to_csv()))?;
            write_json(
                &dir.join("sparsity.json"),
                &Documented {
                    provenance: self.provenance.clone(),
                    body: table,
                },
            )
        })?;
        let doc: Documented<SparsityTable> = read_json(&self.out.join("analysis/sparsity/sparsity.json"))?;
        Ok(doc.body.rows)
    }

    fn ablation(&self) -> Result<Vec<AblationSummary>> {
        let clusters = self.clusters()?;
        let a = &self.config.analysis;
        let hash = self.stage_hash(
            "ablation",
            json!({ "cluster": self.cluster_hash(), "augment": self.config.augment, "probe": a.probe_fraction }),
        );
        self.stage("analysis/ablation", &hash, |dir| {
            let seed = derive_seed(self.config.seed, "ablation");
            let reports = Composition::ALL
                .par_iter()
                .map(|&c| {
                    selftrain_ablation(
                        &self.dataset.graph,
                        &self.dataset.splits,
                        clusters,
                        c,
                        &self.config.augment,
                        a.probe_fraction,
                        seed,
                    )
                })
                .collect::<elco_core::Result<Vec<_>>>()?;
            for r in &reports {
                write_text(
                    &dir.join(format!("ablation_{}.csv", r.composition.name())),
                    &(self.csv_header() + &r.to_csv()),
                )?;
            }
            write_json(
                &dir.join("ablation.json"),
                &json!({ "provenance": self.provenance, "reports": reports }),
            )
        })?;
        #[derive(Deserialize)]
        struct File {
            reports: Vec<AblationReport>,
        }
        let file: File = read_json(&self.out.join("analysis/ablation/ablation.json"))?;
        Ok(file.reports.iter().map(AblationSummary::from).collect())
    }

    fn embedding(&self) -> Result<PathBuf> {
        let (data, _, _) = self.augmented()?;
        let hash = self.stage_hash("embedding", json!({ "augment": self.augment_hash() }));
        self.stage("analysis/embedding", &hash, |dir| {
            let csv = embedding_export_csv(&data.graph, self.dataset.graph.num_nodes());
            write_text(&dir.join("embedding_export.csv"), &(self.csv_header() + &csv))
        })?;
        Ok(self.out.join("analysis/embedding/embedding_export.csv"))
    }

    fn analyze(&self, metric: Metric) -> Result<Vec<PathBuf>> {
        let dir = self.out.join("analysis");
        let all = metric == Metric::All;
        let t = &self.config.analysis;
        let mut written = Vec::new();
        if metric == Metric::L2 || (all && t.separability) {
            self.separability()?;
            written.push(dir.join("separability/separability.json"));
        }
        if metric == Metric::Domlabel || (all && t.domlabel) {
            self.domlabel()?;
            written.push(dir.join("domlabel/domlabel.json"));
        }
        if metric == Metric::Sparsity || (all && t.sparsity) {
            self.sparsity()?;
            written.push(dir.join("sparsity/sparsity.csv"));
        }
        if metric == Metric::Ablation || (all && t.ablation) {
            self.ablation()?;
            written.push(dir.join("ablation/ablation.json"));
        }
        if metric == Metric::Embedding || (all && t.embedding_export) {
            written.push(self.embedding()?);
        }
        Ok(written)
    }

    fn report(&self) -> Result<Report> {
        let clusters = self.clusters()?;
        self.augment()?;
        let (_, electors, diffusion) = self.augmented()?;
        let base = self.train(Which::Base)?;
        let elco = self.train(Which::Augmented)?;
        let t = self.config.analysis.clone();
        let sizes: Vec<usize> = clusters.clusters().iter().map(Vec::len).collect();
        let covered = (0..clusters.num_nodes())
            .filter(|&v| !clusters.memberships(v).is_empty())
            .count();
        let count = |source: &str| electors.electors.iter().filter(|e| e.label_source == source).count();
        let total = electors.electors.len();
        let report = Report {
            provenance: self.provenance.clone(),
            dataset: self.dataset.meta.dataset_name.clone(),
            dataset_hash: self.dataset_hash.clone(),
            threads: rayon::current_num_threads(),
            clusters: ClusterSummary {
                count: clusters.len(),
                mean_size: sizes.iter().sum::<usize>() as f64 / sizes.len().max(1) as f64,
                max_size: sizes.iter().copied().max().unwrap_or(0),
                two_node_clusters: sizes.iter().filter(|&&s| s == 2).count(),
                covered_nodes: covered,
            },
            electors: ElectorSummary {
                total,
                observed: count("observed"),
                predicted: count("predicted"),
                unlabeled: count("unlabeled"),
                observed_fraction: count("observed") as f64 / total.max(1) as f64,
                diffusion_iterations: diffusion.steps.len(),
            },
            baseline_acc: base.mean_test_acc,
            baseline_std: base.std_test_acc,
            elco_acc: elco.mean_test_acc,
            elco_std: elco.std_test_acc,
            delta_acc: elco.mean_test_acc - base.mean_test_acc,
            separability: t.separability.then(|| self.separability()).transpose()?,
            domlabel: t.domlabel.then(|| self.domlabel()).transpose()?,
            sparsity: t.sparsity.then(|| self.sparsity()).transpose()?,
            ablation: t.ablation.then(|| self.ablation()).transpose()?,
        };
        if t.embedding_export {
            self.embedding()?;
        }
        write_json(&self.out.join("report.json"), &report)?;
        Ok(report)
    }
}

/// Writes `cluster/clusters.json`.
pub fn cmd_cluster(config: &RunConfig) -> Result<PathBuf> {
    let run = Run::open(config)?;
    run.clusters()?;
    Ok(run.out.join("cluster/clusters.json"))
}

/// Writes the augmented dataset directory, `electors.json` and `diffusion.json`
/// under `augment/`, clustering first when needed.
pub fn cmd_augment(config: &RunConfig) -> Result<PathBuf> {
    let run = Run::open(config)?;
    run.augment()?;
    Ok(run.out.join("augment"))
}

/// Trains `trials` seeded GCNs on G or G′ and writes `result.json` plus one
/// `history.csv` per trial.
pub fn cmd_train(config: &RunConfig, which: Which) -> Result<TrainResult> {
    Run::open(config)?.train(which)
}

pub fn cmd_analyze(config: &RunConfig, metric: Metric) -> Result<Vec<PathBuf>> {
    Run::open(config)?.analyze(metric)
}

/// Every stage followed by `report.json`.
pub fn cmd_run_all(config: &RunConfig) -> Result<Report> {
    Run::open(config)?.report()
}
