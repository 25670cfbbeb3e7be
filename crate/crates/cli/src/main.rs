use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use recc_cli::artifacts::{self, write_atomic};
use recc_cli::config::PipelineConfig;
use recc_cli::pipeline::{self, REPORT_FILE};
use recc_cli::sweep::{self, SweepAxis};
use recc_core::cluster_eval::{self, bench_contrastive};
use recc_core::features::build_features;
use recc_core::gcn::{GcnModel, NormalizedAdjacency, HIDDEN_DIM};
use recc_core::pipeline::predicted_labels;
use recc_core::resim::{self, re_eigenfeatures};
use recc_core::structmetrics::{self, MetricName};
use recc_core::trainer::{self, samples::select_samples, TrainHistory};

#[derive(Parser)]
#[command(name = "recc", version, about = "Influential-node clustering with regular-equivalence similarity and a GCN")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

/// Run configuration. Flags override values read from `--config`.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set k_p=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    edges: Option<String>,
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    alpha_fraction: Option<String>,
    #[arg(long)]
    resim_tol: Option<String>,
    #[arg(long)]
    resim_max_iter: Option<String>,
    #[arg(long)]
    max_nodes: Option<String>,
    #[arg(long)]
    max_dims: Option<String>,
    #[arg(long)]
    combo: Option<String>,
    #[arg(long)]
    global_metrics: Option<String>,
    #[arg(long)]
    local_metrics: Option<String>,
    #[arg(long)]
    k_p: Option<String>,
    #[arg(long)]
    k_n: Option<String>,
    #[arg(long)]
    dropout: Option<String>,
    #[arg(long)]
    epochs_pre: Option<String>,
    #[arg(long)]
    epochs_ft: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    beta1: Option<String>,
    #[arg(long)]
    beta2: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    loss_mask: Option<String>,
    #[arg(long)]
    restarts: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        let flags = [
            ("edges", &self.edges),
            ("labels", &self.labels),
            ("out_dir", &self.out_dir),
            ("alpha_fraction", &self.alpha_fraction),
            ("resim_tol", &self.resim_tol),
            ("resim_max_iter", &self.resim_max_iter),
            ("max_nodes", &self.max_nodes),
            ("max_dims", &self.max_dims),
            ("combo", &self.combo),
            ("global_metrics", &self.global_metrics),
            ("local_metrics", &self.local_metrics),
            ("k_p", &self.k_p),
            ("k_n", &self.k_n),
            ("dropout", &self.dropout),
            ("epochs_pre", &self.epochs_pre),
            ("epochs_ft", &self.epochs_ft),
            ("lr", &self.lr),
            ("beta1", &self.beta1),
            ("beta2", &self.beta2),
            ("eps", &self.eps),
            ("k", &self.k),
            ("tau", &self.tau),
            ("loss_mask", &self.loss_mask),
            ("restarts", &self.restarts),
            ("seed", &self.seed),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate_params()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the RE similarity matrix (binary, optionally CSV).
    Resim {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Binary output; defaults to the content-addressed cache entry.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Every structural metric as a node × metric CSV.
    Metrics {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Within-group metric correlation matrices (global: Spearman, local:
    /// Pearson on neighborhood ranks).
    Correlate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Node feature matrix for the configured combo.
    Features {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pre-train and fine-tune the GCN; writes embeddings, checkpoint and history.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// k-means on an embeddings CSV.
    Cluster {
        #[arg(long)]
        embeddings: PathBuf,
        /// Edge list used to tag the influential cluster by mean degree.
        #[arg(long)]
        edges: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = cluster_eval::DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ACC / NMI / ARI of predicted labels against ground truth.
    Eval {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Time the sampled contrastive loss against a full-pairwise baseline.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [1000, 2000, 4000])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        k_p: usize,
        #[arg(long, default_value_t = 1)]
        k_n: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the pipeline once per value of one parameter.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// k_p, k_n, combo or loss_mask.
        #[arg(long)]
        axis: String,
        /// Comma-separated values; defaults to the axis' full range.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Full run: similarity, features, training, clustering, evaluation.
    Pipeline {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn load_graph(cfg: &PipelineConfig) -> Result<recc_core::Graph> {
    let Some(path) = &cfg.edges else { bail!("--edges is required") };
    Ok(artifacts::read_graph(path)?)
}

fn cmd_resim(cfg: &PipelineConfig, out: Option<PathBuf>, csv: Option<PathBuf>) -> Result<()> {
    let g = load_graph(cfg)?;
    let cache = pipeline::cache_dir(&cfg.out_dir);
    let (sim, hit) = artifacts::cached_similarity(&g, &cfg.run.resim, &cache)?;
    if let Some(path) = &out {
        let mut buf = Vec::new();
        resim::write_similarity(&sim, &mut buf)?;
        write_atomic(path, &buf)?;
    }
    if let Some(path) = &csv {
        write_atomic(path, artifacts::matrix_csv(g.node_ids(), "s", &sim.s).as_bytes())?;
    }
    let re = re_eigenfeatures(&sim, cfg.run.max_dims)?;
    let summary = serde_json::json!({
        "n_nodes": g.n_nodes(),
        "alpha": sim.alpha,
        "iterations": sim.iterations,
        "converged": sim.converged,
        "cache_hit": hit,
        "cache_file": artifacts::similarity_cache_path(&cache, &g, &cfg.run.resim),
        "reeig_dims": re.r,
        "degenerate_spectrum": re.degenerate,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_correlate(cfg: &PipelineConfig) -> Result<()> {
    let g = load_graph(cfg)?;
    let mut vectors = structmetrics::compute_global_metrics(&g)?;
    vectors.extend(structmetrics::compute_local_metrics(&g));
    let reports = structmetrics::correlation_analysis(&vectors, &g)?;
    for (name, group) in [("global", &MetricName::GLOBAL[..]), ("local", &MetricName::LOCAL[..])] {
        let text = artifacts::correlation_matrix_csv(group, &reports);
        let path = cfg.out_dir.join(format!("correlation_{name}.csv"));
        write_atomic(&path, text.as_bytes())?;
        println!("# {name} ({})", path.display());
        print!("{text}");
    }
    Ok(())
}

fn cmd_train(cfg: &PipelineConfig) -> Result<()> {
    let g = load_graph(cfg)?;
    let run = &cfg.run;
    let (sim, _) = artifacts::cached_similarity(&g, &run.resim, &pipeline::cache_dir(&cfg.out_dir))?;
    let re = run.combo.uses_reeig().then(|| re_eigenfeatures(&sim, run.max_dims)).transpose()?;
    let feats = build_features(&g, re.as_ref(), run.combo, &run.representatives)?;
    let samples = select_samples(&sim, run.k_p, run.k_n)?;
    let model = GcnModel::new(&[feats.n_features(), HIDDEN_DIM, HIDDEN_DIM, HIDDEN_DIM], run.dropout, run.train.seed)?;
    let (model, pre) = trainer::pretrain(model, &g, &feats.x, run.train.epochs_pre, run.train.adam, run.train.seed)?;
    let ft = trainer::finetune(model, &g, &feats.x, &samples, &run.train)?;
    let z = ft.model.forward(&NormalizedAdjacency::new(&g), &feats.x)?;
    let history = TrainHistory { pretrain: pre, finetune: ft.history };
    let out = &cfg.out_dir;
    write_atomic(&out.join("embeddings.csv"), artifacts::matrix_csv(g.node_ids(), "z", &z).as_bytes())?;
    write_atomic(&out.join("history.csv"), history.to_csv().as_bytes())?;
    let mut ckpt = Vec::new();
    ft.model.write_checkpoint(&mut ckpt)?;
    write_atomic(&out.join("model.ckpt"), &ckpt)?;
    let last = history.finetune.last().expect("at least one epoch");
    println!(
        "trained {} + {} epochs: l_re {:.6}, l_con {:.6}, l_kl {:.6}; artifacts in {}",
        history.pretrain.len(),
        history.finetune.len(),
        history.pretrain.last().map_or(f64::NAN, |r| r.l_re),
        last.l_con,
        last.l_kl,
        out.display()
    );
    Ok(())
}

fn cmd_cluster(
    embeddings: &Path,
    edges: Option<&Path>,
    k: usize,
    seed: u64,
    restarts: usize,
    out: Option<&Path>,
) -> Result<()> {
    let (ids, z) = artifacts::read_matrix_csv(embeddings)?;
    let mut result = cluster_eval::kmeans(&z, k, seed, restarts)?;
    if let Some(edges) = edges {
        let g = artifacts::read_graph(edges)?;
        if g.node_ids() != ids.as_slice() {
            bail!("embedding rows do not follow the node order of {}", edges.display());
        }
        result = cluster_eval::label_influential(result, &g);
    }
    let labels = predicted_labels(&result);
    let mut text = String::from("# node label\n");
    for (id, l) in ids.iter().zip(&labels) {
        text.push_str(&format!("{id} {l}\n"));
    }
    emit(out, &text)?;
    eprintln!("inertia {:.6e}, sizes {:?}", result.inertia, result.cluster_sizes());
    Ok(())
}

fn cmd_eval(edges: &Path, pred: &Path, truth: &Path) -> Result<()> {
    let g = artifacts::read_graph(edges)?;
    let p = artifacts::read_labels(pred, &g)?;
    let t = artifacts::read_labels(truth, &g)?;
    let report = cluster_eval::evaluate(p.as_slice(), t.as_slice())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_sweep(cfg: &PipelineConfig, axis: &str, values: Vec<String>, jobs: usize) -> Result<()> {
    cfg.validate()?;
    let axis: SweepAxis = axis.parse()?;
    let values = if values.is_empty() { axis.default_values() } else { values };
    let runs = sweep::run_sweep(cfg, axis, &values, jobs)?;
    let csv = sweep::sweep_csv(axis, &runs);
    let path = cfg.out_dir.join(format!("sweep_{}.csv", axis.key()));
    write_atomic(&path, csv.as_bytes())?;
    print!("{csv}");
    eprintln!("wrote {}", path.display());
    let failed = runs.iter().filter(|r| r.result.is_err()).count();
    if failed > 0 {
        bail!("{failed} of {} sweep runs failed", runs.len());
    }
    Ok(())
}

fn cmd_pipeline(cfg: &PipelineConfig) -> Result<()> {
    let run = pipeline::run_pipeline(cfg)?;
    let m = &run.report.metrics;
    if let Some(e) = m.eval {
        println!("acc {:.4}  nmi {:.4}  ari {:.4}", e.acc, e.nmi, e.ari);
    }
    println!(
        "{} nodes, {} clusters {:?}, influential cluster {:?}; report at {}",
        m.n_nodes,
        m.clustering.k,
        m.clustering.sizes,
        m.clustering.influential_cluster,
        cfg.out_dir.join(REPORT_FILE).display()
    );
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match cli.command {
        Command::Resim { cfg, out, csv } => cmd_resim(&cfg.resolve()?, out, csv),
        Command::Metrics { cfg, out } => {
            let cfg = cfg.resolve()?;
            let g = load_graph(&cfg)?;
            let mut all = structmetrics::compute_global_metrics(&g)?;
            all.extend(structmetrics::compute_local_metrics(&g));
            emit(out.as_deref(), &artifacts::metrics_csv(&g, &all))
        }
        Command::Correlate { cfg } => cmd_correlate(&cfg.resolve()?),
        Command::Features { cfg, out } => {
            let cfg = cfg.resolve()?;
            let g = load_graph(&cfg)?;
            let re = if cfg.run.combo.uses_reeig() {
                let (sim, _) = artifacts::cached_similarity(&g, &cfg.run.resim, &pipeline::cache_dir(&cfg.out_dir))?;
                Some(re_eigenfeatures(&sim, cfg.run.max_dims)?)
            } else {
                None
            };
            let f = build_features(&g, re.as_ref(), cfg.run.combo, &cfg.run.representatives)?;
            emit(out.as_deref(), &f.to_csv(g.node_ids()))
        }
        Command::Train { cfg } => cmd_train(&cfg.resolve()?),
        Command::Cluster { embeddings, edges, k, seed, restarts, out } => {
            cmd_cluster(&embeddings, edges.as_deref(), k, seed, restarts, out.as_deref())
        }
        Command::Eval { edges, pred, truth } => cmd_eval(&edges, &pred, &truth),
        Command::Bench { sizes, k_p, k_n, reps, seed, out } => {
            let report = bench_contrastive(&sizes, k_p, k_n, reps, seed)?;
            emit(out.as_deref(), &report.to_csv())
        }
        Command::Sweep { cfg, axis, values, jobs } => cmd_sweep(&cfg.resolve()?, &axis, values, jobs),
        Command::Pipeline { cfg } => cmd_pipeline(&cfg.resolve()?),
    }
}
