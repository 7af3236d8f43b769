//! Command implementations behind the `mctsbn` binary. Each command writes
//! its artifacts plus a JSON run manifest and returns a small report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use mctsbn_core::dataset::DEFAULT_COUNT_CACHE;
use mctsbn_core::mcts::{
    guide_pool_from_dag, DEFAULT_BUDGET, DEFAULT_EXPLORATION, DEFAULT_POOL_SIZE,
};
use mctsbn_core::scoring::DEFAULT_ESS;
use mctsbn_core::{
    hc_order_constrained, hc_unconstrained, parse_arc_list, parse_bif, sample_topological_order,
    search, write_arc_list, BdeuScorer, Dag, Dataset, HcOptions, PartialOrder, Schema,
    SearchConfig,
};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const COUNT_CACHE_ENV: &str = "MCTSBN_COUNT_CACHE";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: serde_json::Value,
    /// Input path to SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub version: String,
}

impl RunManifest {
    fn new(command: &str, params: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            params: serde_json::to_value(params)?,
            inputs: BTreeMap::new(),
            seed,
            version: VERSION.to_string(),
        })
    }

    fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.insert(
            path.display().to_string(),
            hex::encode(Sha256::digest(bytes)),
        );
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_file(path, &text)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `foo.csv` becomes `foo.csv.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Schema sidecar looked up next to a dataset when none is given.
pub fn schema_sidecar(data: &Path) -> PathBuf {
    data.with_extension("schema")
}

pub fn count_cache_capacity() -> Result<usize> {
    match std::env::var(COUNT_CACHE_ENV) {
        Ok(v) => v.trim().parse().with_context(|| {
            format!("{COUNT_CACHE_ENV} must be a non-negative integer, got {v:?}")
        }),
        Err(_) => Ok(DEFAULT_COUNT_CACHE),
    }
}

/// Configures the global rayon pool. `0` keeps rayon's default.
pub fn init_threads(threads: usize) -> Result<()> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Dataset CSV with a header row of variable names.
    #[arg(long)]
    pub data: PathBuf,
    /// State lists (`name:s1|s2` per line). Defaults to the `.schema` file
    /// next to the dataset when present.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

fn load_dataset(args: &DataArgs, manifest: &mut RunManifest) -> Result<Dataset> {
    let text = read(&args.data)?;
    manifest.input(&args.data, text.as_bytes());
    let schema_path = args.schema.clone().or_else(|| {
        let p = schema_sidecar(&args.data);
        p.exists().then_some(p)
    });
    let schema = match &schema_path {
        Some(p) => {
            let s = read(p)?;
            manifest.input(p, s.as_bytes());
            Some(Schema::parse(&s).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => None,
    };
    let data = Dataset::load_csv(&text, schema.as_ref())
        .with_context(|| format!("loading {}", args.data.display()))?
        .with_cache_capacity(count_cache_capacity()?);
    ensure!(
        data.n_rows() > 0,
        "{} has no data rows",
        args.data.display()
    );
    Ok(data)
}

fn load_dag(path: &Path, data: &Dataset, manifest: &mut RunManifest) -> Result<Dag> {
    let text = read(path)?;
    manifest.input(path, text.as_bytes());
    let dag = parse_arc_list(&text).with_context(|| format!("parsing {}", path.display()))?;
    dag.reindex(data.names())
        .with_context(|| format!("{} does not match the dataset variables", path.display()))
}

fn hc_options(max_parents: Option<usize>, n: usize) -> HcOptions {
    let mut opts = HcOptions::for_variables(n);
    if max_parents.is_some() {
        opts.max_parents = max_parents;
    }
    opts
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    /// Reference network in BIF format.
    #[arg(long)]
    pub bif: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub rows: usize,
    /// Number of datasets; dataset `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Writes `<stem>_<i>.csv` and a matching `.schema` sidecar per dataset.
pub fn cmd_sample(args: &SampleArgs) -> Result<Vec<PathBuf>> {
    let mut manifest = RunManifest::new("sample", args, Some(args.seed))?;
    let text = read(&args.bif)?;
    manifest.input(&args.bif, text.as_bytes());
    let bn = parse_bif(&text).with_context(|| format!("parsing {}", args.bif.display()))?;
    let stem = args
        .bif
        .file_stem()
        .map_or("dataset".into(), |s| s.to_string_lossy().into_owned());
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let width = args.count.saturating_sub(1).to_string().len();
    let paths: Vec<PathBuf> = (0..args.count)
        .map(|i| args.out_dir.join(format!("{stem}_{i:0width$}.csv")))
        .collect();
    paths
        .par_iter()
        .enumerate()
        .try_for_each(|(i, path)| -> Result<()> {
            let seed = args.seed.wrapping_add(i as u64);
            let data = bn.forward_sample(args.rows, seed)?;
            write_file(path, &data.to_csv())?;
            write_file(&schema_sidecar(path), &data.schema().to_text())
        })?;
    manifest.write(&args.out_dir.join("sample.manifest.json"))?;
    Ok(paths)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseAlgorithm {
    Hc,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LearnBaseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = BaseAlgorithm::Hc)]
    pub algorithm: BaseAlgorithm,
    #[arg(long, default_value_t = DEFAULT_ESS)]
    pub ess: f64,
    /// Parent limit; unlimited up to 100 variables, 8 beyond.
    #[arg(long)]
    pub max_parents: Option<usize>,
    /// Output arc-list file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub total_bdeu: f64,
    pub nbdeu: f64,
    pub arcs: usize,
}

impl std::fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "total_bdeu={:.6} nbdeu={:.6} arcs={}",
            self.total_bdeu, self.nbdeu, self.arcs
        )
    }
}

pub fn cmd_learn_base(args: &LearnBaseArgs) -> Result<ScoreReport> {
    let mut manifest = RunManifest::new("learn-base", args, None)?;
    let data = load_dataset(&args.data, &mut manifest)?;
    let scorer = BdeuScorer::new(&data, args.ess)?;
    let out = match args.algorithm {
        BaseAlgorithm::Hc => {
            hc_unconstrained(&scorer, hc_options(args.max_parents, data.len()), None)?
        }
    };
    write_file(&args.out, &write_arc_list(&out.dag))?;
    manifest.write(&manifest_path(&args.out))?;
    Ok(ScoreReport {
        total_bdeu: out.score,
        nbdeu: scorer.normalize(out.score)?,
        arcs: out.dag.arc_count(),
    })
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MctsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Arc-list DAG whose topological orders form the guide pool.
    #[arg(long, conflicts_with = "base", required_unless_present = "base")]
    pub guide_dag: Option<PathBuf>,
    /// Learn the guide DAG with a built-in algorithm.
    #[arg(long, value_enum)]
    pub base: Option<BaseAlgorithm>,
    /// Iterations after the initial expansion of the root.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    /// UCT exploration constant.
    #[arg(long = "c", default_value_t = DEFAULT_EXPLORATION)]
    pub exploration: f64,
    #[arg(long, default_value_t = DEFAULT_ESS)]
    pub ess: f64,
    #[arg(long, default_value_t = DEFAULT_POOL_SIZE)]
    pub pool: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_parents: Option<usize>,
    /// Score trace CSV.
    #[arg(long)]
    pub trace: PathBuf,
    /// Best network, arc-list format.
    #[arg(long)]
    pub best: PathBuf,
    /// Also write the order that produced the best network.
    #[arg(long)]
    pub best_order: Option<PathBuf>,
    /// Fill the elapsed_ms column. Makes the trace run-dependent.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MctsReport {
    pub best_nbdeu: f64,
    pub base_nbdeu: f64,
    pub improvement: f64,
    pub best_order: Vec<String>,
}

impl std::fmt::Display for MctsReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "best_nbdeu={:.6} base_nbdeu={:.6} improvement={:.6}",
            self.best_nbdeu, self.base_nbdeu, self.improvement
        )
    }
}

pub fn cmd_mcts(args: &MctsArgs) -> Result<MctsReport> {
    let mut manifest = RunManifest::new("mcts", args, Some(args.seed))?;
    let data = load_dataset(&args.data, &mut manifest)?;
    let scorer = BdeuScorer::new(&data, args.ess)?;
    let hc = hc_options(args.max_parents, data.len());
    let base = match (&args.guide_dag, args.base) {
        (Some(path), None) => load_dag(path, &data, &mut manifest)?,
        (None, Some(BaseAlgorithm::Hc)) => hc_unconstrained(&scorer, hc, None)?.dag,
        _ => bail!("exactly one of --guide-dag and --base is required"),
    };
    let base_nbdeu = scorer.normalized(&base)?;
    let config = SearchConfig {
        exploration: args.exploration,
        budget: args.budget,
        pool_size: args.pool,
        seed: args.seed,
        hc,
    };
    let pool = guide_pool_from_dag(&base, args.pool, args.seed);
    let result = search(&scorer, pool, config)?;
    write_file(&args.trace, &result.trace.to_csv(args.timing))?;
    write_file(&args.best, &write_arc_list(&result.best_dag))?;
    let order_line = result.best_order.to_names_line(data.names());
    if let Some(p) = &args.best_order {
        write_file(p, &format!("{order_line}\n"))?;
    }
    manifest.write(&manifest_path(&args.best))?;
    Ok(MctsReport {
        best_nbdeu: result.best_nbdeu,
        base_nbdeu,
        improvement: result.best_nbdeu - base_nbdeu,
        best_order: order_line.split(',').map(str::to_string).collect(),
    })
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Arc-list DAG to score.
    #[arg(long, conflicts_with = "order", required_unless_present = "order")]
    pub dag: Option<PathBuf>,
    /// Comma-separated complete variable order; runs order-constrained hill
    /// climbing on it and scores the result.
    #[arg(long)]
    pub order: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ESS)]
    pub ess: f64,
    #[arg(long)]
    pub max_parents: Option<usize>,
    /// Where to write the constrained network (with --order).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_score(args: &ScoreArgs) -> Result<ScoreReport> {
    let mut manifest = RunManifest::new("score", args, None)?;
    let data = load_dataset(&args.data, &mut manifest)?;
    let scorer = BdeuScorer::new(&data, args.ess)?;
    let (dag, total) = match (&args.dag, &args.order) {
        (Some(path), None) => {
            let dag = load_dag(path, &data, &mut manifest)?;
            let total = scorer.total(&dag)?;
            (dag, total)
        }
        (None, Some(path)) => {
            let text = read(path)?;
            manifest.input(path, text.as_bytes());
            let order = PartialOrder::parse_names_line(&text, data.names())
                .with_context(|| format!("parsing {}", path.display()))?;
            ensure!(
                order.is_complete(),
                "{} lists {} of {} variables",
                path.display(),
                order.len(),
                data.len()
            );
            let out =
                hc_order_constrained(&scorer, &order, hc_options(args.max_parents, data.len()))?;
            (out.dag, out.score)
        }
        _ => bail!("exactly one of --dag and --order is required"),
    };
    if let Some(out) = &args.out {
        write_file(out, &write_arc_list(&dag))?;
        manifest.write(&manifest_path(out))?;
    }
    Ok(ScoreReport {
        total_bdeu: total,
        nbdeu: scorer.normalize(total)?,
        arcs: dag.arc_count(),
    })
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GoldArgs {
    #[arg(long)]
    pub bif: PathBuf,
    /// Seed for drawing one topological order of the network.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Topological order output, one comma-separated line.
    #[arg(long)]
    pub order_out: PathBuf,
    /// Network structure output, arc-list format.
    #[arg(long)]
    pub dag_out: Option<PathBuf>,
}

/// Exports a reference network's structure and one of its topological orders.
pub fn cmd_gold(args: &GoldArgs) -> Result<Vec<String>> {
    let mut manifest = RunManifest::new("gold", args, Some(args.seed))?;
    let text = read(&args.bif)?;
    manifest.input(&args.bif, text.as_bytes());
    let bn = parse_bif(&text).with_context(|| format!("parsing {}", args.bif.display()))?;
    let line = sample_topological_order(bn.dag(), args.seed).to_names_line(bn.dag().names());
    write_file(&args.order_out, &format!("{line}\n"))?;
    if let Some(p) = &args.dag_out {
        write_file(p, &write_arc_list(bn.dag()))?;
    }
    manifest.write(&manifest_path(&args.order_out))?;
    Ok(line.split(',').map(str::to_string).collect())
}
