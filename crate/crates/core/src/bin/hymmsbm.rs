//! Command-line interface for fitting, sampling and evaluating the hypergraph
//! mixed-membership block model.
//!
//! Every run that writes an output also writes `<out stem>.manifest.json`; `hymmsbm
//! replay <manifest>` re-executes it with the recorded configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hymmsbm::evaluation::{
    auc_score, compare_assortative, cosine_similarity_score, cp_profile_curve, select_k,
    train_test_split, AucOptions, AucResult, AucWeighting,
};
use hymmsbm::hypergraph::load_hyperedge_list;
use hymmsbm::model::ParamsFile;
use hymmsbm::rng::{derive_seed, rng_from_seed};
use hymmsbm::sampler::{
    calibrate_c_in, generate_benchmark, sample_exact, GroundTruthFile, MembershipMode,
    PlantedSpec,
};
use hymmsbm::{infer, Error, Hypergraph, InferenceConfig, PriorRates};

const EXIT_USAGE: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "hymmsbm", version, about = "Mixed-membership stochastic block model for hypergraphs")]
struct Cli {
    /// Worker threads for restarts (0: one per core). 1 gives bit-reproducible runs.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Fit u and w by EM with random restarts.
    Infer(InferArgs),
    /// Draw a hypergraph from fitted or hand-written parameters.
    Sample(SampleArgs),
    /// Generate a planted-partition benchmark and its ground truth.
    Benchmark(BenchmarkArgs),
    /// Fit on a training split and score held-out hyperedges by AUC.
    Auc(AucArgs),
    /// Choose K by held-out AUC over a grid.
    SelectK(SelectKArgs),
    /// Cosine similarity between ground-truth and inferred memberships.
    Similarity(SimilarityArgs),
    /// Best log-posterior with diagonal w against unrestricted w.
    CompareAssortative(CompareArgs),
    /// Core-periphery profile of nodes ordered by a score file.
    CpProfile(CpProfileArgs),
    /// Summary statistics of a hyperedge list.
    Stats(StatsArgs),
    /// Re-run a command from its manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct InputArgs {
    /// Hyperedge list: one hyperedge per line, nodes separated by whitespace,
    /// optional TAB-separated weight, `#N=<nodes>` header optional.
    #[arg(long)]
    input: PathBuf,
    /// Drop hyperedges larger than this and use it as D.
    #[arg(long)]
    max_hyperedge_size: Option<usize>,
}

impl InputArgs {
    fn load(&self) -> hymmsbm::Result<Hypergraph> {
        let h = load_hyperedge_list(&self.input, 1)?;
        let h = match self.max_hyperedge_size {
            Some(d) => h.truncate_to_size(d)?,
            None => h,
        };
        if h.is_empty() {
            return Err(Error::NoHyperedges);
        }
        Ok(h)
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct FitArgs {
    /// Number of communities.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// Relative change of the log-posterior below which EM stops.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Iterations between convergence checks.
    #[arg(long, default_value_t = 10)]
    check_every: usize,
    /// Exponential prior rate on u (0: maximum likelihood).
    #[arg(long, default_value_t = 0.0)]
    prior_u: f64,
    /// Exponential prior rate on w.
    #[arg(long, default_value_t = 1.0)]
    prior_w: f64,
    /// Restrict w to be diagonal.
    #[arg(long)]
    assortative: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl FitArgs {
    fn config(&self) -> hymmsbm::Result<InferenceConfig> {
        let cfg = InferenceConfig {
            num_communities: self.k,
            num_restarts: self.restarts,
            max_iter: self.max_iter,
            tol: self.tol,
            check_every: self.check_every,
            priors: PriorRates::new(self.prior_u, self.prior_w)?,
            assortative: self.assortative,
            seed: self.seed,
            ..InferenceConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct AucFlags {
    /// Fraction of hyperedges kept for training.
    #[arg(long, default_value_t = 0.8)]
    train_ratio: f64,
    /// Negative hyperedges drawn per held-out hyperedge.
    #[arg(long, default_value_t = 10)]
    comparisons: usize,
    /// Weight at which observed and negative hyperedges are compared.
    #[arg(long, value_enum, default_value_t = Weighting::Observed)]
    auc_weighting: Weighting,
}

impl AucFlags {
    fn options(&self) -> AucOptions {
        AucOptions {
            comparisons_per_edge: self.comparisons,
            weighting: match self.auc_weighting {
                Weighting::Observed => AucWeighting::Observed,
                Weighting::Unit => AucWeighting::Unit,
            },
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Weighting {
    Observed,
    Unit,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Membership {
    Hard,
    Mixed,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct InferArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    fit: FitArgs,
    /// Parameters JSON; the report goes to `<stem>.report.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SampleArgs {
    /// Parameters JSON with `N`, `K`, `u` and `w`.
    #[arg(long)]
    params: PathBuf,
    /// Largest hyperedge size D.
    #[arg(long)]
    max_hyperedge_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hyperedge list to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct BenchmarkArgs {
    #[arg(long, default_value_t = 60)]
    nodes: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, value_enum, default_value_t = Membership::Hard)]
    membership: Membership,
    /// Weight on the node's own block in mixed mode.
    #[arg(long, default_value_t = 0.8)]
    primary: f64,
    /// Within-community affinity; calibrated from --mean-degree when omitted.
    #[arg(long)]
    c_in: Option<f64>,
    /// Between-community affinity as a multiple of c_in.
    #[arg(long, default_value_t = 0.0)]
    ratio: f64,
    /// Target expected mean weighted degree used when --c-in is omitted.
    #[arg(long, default_value_t = 20.0)]
    mean_degree: f64,
    #[arg(long, default_value_t = 4)]
    max_hyperedge_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hyperedge list to write; ground truth goes to `<stem>.truth.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct AucArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    #[serde(flatten)]
    auc: AucFlags,
    /// AUC summary JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SelectKArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    #[serde(flatten)]
    auc: AucFlags,
    /// Inclusive K range `A:B`.
    #[arg(long, value_parser = parse_k_grid)]
    k_grid: KGrid,
    /// TSV table with one row per K.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct KGrid {
    from: usize,
    to: usize,
}

fn parse_k_grid(s: &str) -> Result<KGrid, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected A:B, got {s:?}"))?;
    let from: usize = a.trim().parse().map_err(|e| format!("bad lower bound {a:?}: {e}"))?;
    let to: usize = b.trim().parse().map_err(|e| format!("bad upper bound {b:?}: {e}"))?;
    if from == 0 || from > to {
        return Err(format!("need 1 ≤ A ≤ B, got {from}:{to}"));
    }
    Ok(KGrid { from, to })
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SimilarityArgs {
    /// Ground-truth JSON with a `u` matrix (a parameters file also works).
    #[arg(long)]
    truth: PathBuf,
    /// Inferred parameters JSON.
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct CompareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    fit: FitArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct CpProfileArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    /// One score per line in node order; low scores are treated as core.
    #[arg(long)]
    scores: PathBuf,
    /// Largest core size (default N).
    #[arg(long)]
    k_max: Option<usize>,
    /// TSV table `k  gamma`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct StatsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    /// Also write the summary as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct ReplayArgs {
    manifest: PathBuf,
    /// Write the primary output here instead of the recorded path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunManifest {
    tool: String,
    version: String,
    threads: usize,
    #[serde(flatten)]
    command: Command,
    outputs: Vec<PathBuf>,
    duration_secs: f64,
}

#[derive(Serialize)]
struct AucSummary {
    #[serde(flatten)]
    result: AucResult,
    train_edges: usize,
    test_edges: usize,
    objective: f64,
}

#[derive(Serialize)]
struct CompareSummary {
    assortative: f64,
    unrestricted: f64,
    difference: f64,
}

#[derive(Serialize)]
struct StatsSummary {
    nodes: usize,
    hyperedges: usize,
    max_size: usize,
    total_weight: u64,
    mean_weighted_degree: f64,
    size_histogram: Vec<(usize, usize)>,
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn write_text(path: &Path, text: &str) -> hymmsbm::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> hymmsbm::Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn print_json<T: Serialize>(value: &T) -> hymmsbm::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn read_scores(path: &Path) -> hymmsbm::Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(n, l)| {
            l.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: n + 1,
                message: format!("bad score {:?}: {e}", l.trim()),
            })
        })
        .collect()
}

fn read_membership(path: &Path) -> hymmsbm::Result<ndarray::Array2<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let truth: GroundTruthFile = serde_json::from_str(&text)?;
    truth.to_array()
}

fn stats_of(h: &Hypergraph) -> StatsSummary {
    let weighted_degree: u64 = h.iter().map(|(e, a)| e.len() as u64 * a).sum();
    StatsSummary {
        nodes: h.num_nodes(),
        hyperedges: h.num_edges(),
        max_size: h.max_size(),
        total_weight: h.total_weight(),
        mean_weighted_degree: weighted_degree as f64 / h.num_nodes() as f64,
        size_histogram: h
            .size_histogram()
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .collect(),
    }
}

/// Runs `command` and returns the files it wrote, primary output first.
fn execute(command: &Command) -> hymmsbm::Result<Vec<PathBuf>> {
    match command {
        Command::Infer(a) => {
            let h = a.input.load()?;
            let report = infer(&h, &a.fit.config()?)?;
            let report_path = sibling(&a.out, "report.json");
            report
                .best_params
                .to_json(Some(report.best_seed), Some(report.best_objective))
                .save(&a.out)?;
            write_json(&report_path, &report.to_json())?;
            Ok(vec![a.out.clone(), report_path])
        }
        Command::Sample(a) => {
            let p = ParamsFile::load(&a.params)?.to_params()?;
            let mut rng = rng_from_seed(a.seed);
            let h = sample_exact(&p, a.max_hyperedge_size, &mut rng)?;
            h.save(&a.out)?;
            Ok(vec![a.out.clone()])
        }
        Command::Benchmark(a) => {
            let mut spec = PlantedSpec {
                num_nodes: a.nodes,
                num_communities: a.k,
                membership: match a.membership {
                    Membership::Hard => MembershipMode::Hard,
                    Membership::Mixed => MembershipMode::Mixed { primary: a.primary },
                },
                c_in: 1.0,
                c_out: a.ratio,
                max_size: a.max_hyperedge_size,
                seed: a.seed,
            };
            spec.c_in = match a.c_in {
                Some(c) => c,
                None => calibrate_c_in(&spec, a.ratio, a.mean_degree)?,
            };
            spec.c_out = spec.c_in * a.ratio;
            let bench = generate_benchmark(&spec)?;
            let truth_path = sibling(&a.out, "truth.json");
            bench.hypergraph.save(&a.out)?;
            bench.truth.to_json(None, None).save(&truth_path)?;
            Ok(vec![a.out.clone(), truth_path])
        }
        Command::Auc(a) => {
            let h = a.input.load()?;
            let cfg = a.fit.config()?;
            let split = train_test_split(&h, a.auc.train_ratio, a.fit.seed)?;
            let report = infer(&split.train, &cfg)?;
            let mut rng = rng_from_seed(derive_seed(a.fit.seed, 1));
            let result = auc_score(&report.best_params, &split, &mut rng, &a.auc.options())?;
            let summary = AucSummary {
                result,
                train_edges: split.train.num_edges(),
                test_edges: split.test.len(),
                objective: report.best_objective,
            };
            write_json(&a.out, &summary)?;
            let params_path = sibling(&a.out, "params.json");
            report
                .best_params
                .to_json(Some(report.best_seed), Some(report.best_objective))
                .save(&params_path)?;
            Ok(vec![a.out.clone(), params_path])
        }
        Command::SelectK(a) => {
            let h = a.input.load()?;
            let grid: Vec<usize> = (a.k_grid.from..=a.k_grid.to).collect();
            let sel = select_k(&h, &grid, &a.fit.config()?, a.auc.train_ratio, a.fit.seed, &a.auc.options())?;
            let mut tsv = String::from("k\tauc\tstd_err\tlog_posterior\n");
            for row in &sel.table {
                writeln!(tsv, "{}\t{}\t{}\t{}", row.k, row.auc, row.std_err, row.objective)
                    .expect("writing to a String");
            }
            write_text(&a.out, &tsv)?;
            let summary_path = sibling(&a.out, "summary.json");
            write_json(&summary_path, &sel)?;
            println!("best_k\t{}", sel.best_k);
            Ok(vec![a.out.clone(), summary_path])
        }
        Command::Similarity(a) => {
            let truth = read_membership(&a.truth)?;
            let inferred = ParamsFile::load(&a.params)?.to_params()?;
            let score = cosine_similarity_score(&truth, inferred.u())?;
            let summary = serde_json::json!({ "cosine_similarity": score });
            print_json(&summary)?;
            if let Some(out) = &a.out {
                write_json(out, &summary)?;
                return Ok(vec![out.clone()]);
            }
            Ok(Vec::new())
        }
        Command::CompareAssortative(a) => {
            let h = a.input.load()?;
            let (la, lu) = compare_assortative(&h, &a.fit.config()?)?;
            let summary = CompareSummary {
                assortative: la,
                unrestricted: lu,
                difference: la - lu,
            };
            print_json(&summary)?;
            if let Some(out) = &a.out {
                write_json(out, &summary)?;
                return Ok(vec![out.clone()]);
            }
            Ok(Vec::new())
        }
        Command::CpProfile(a) => {
            let h = a.input.load()?;
            let scores = read_scores(&a.scores)?;
            let curve = cp_profile_curve(&h, &scores, a.k_max.unwrap_or(h.num_nodes()))?;
            let mut tsv = String::from("k\tgamma\n");
            for (k, g) in curve {
                writeln!(tsv, "{k}\t{g}").expect("writing to a String");
            }
            write_text(&a.out, &tsv)?;
            Ok(vec![a.out.clone()])
        }
        Command::Stats(a) => {
            let s = stats_of(&a.input.load()?);
            println!("N\t{}", s.nodes);
            println!("|E|\t{}", s.hyperedges);
            println!("D\t{}", s.max_size);
            println!("mean_weighted_degree\t{}", s.mean_weighted_degree);
            for (size, count) in &s.size_histogram {
                println!("size_{size}\t{count}");
            }
            if let Some(out) = &a.out {
                write_json(out, &s)?;
                return Ok(vec![out.clone()]);
            }
            Ok(Vec::new())
        }
        Command::Replay(_) => unreachable!("replay is resolved before execution"),
    }
}

fn redirect_output(command: &mut Command, out: PathBuf) {
    match command {
        Command::Infer(a) => a.out = out,
        Command::Sample(a) => a.out = out,
        Command::Benchmark(a) => a.out = out,
        Command::Auc(a) => a.out = out,
        Command::SelectK(a) => a.out = out,
        Command::Similarity(a) => a.out = Some(out),
        Command::CompareAssortative(a) => a.out = Some(out),
        Command::CpProfile(a) => a.out = out,
        Command::Stats(a) => a.out = Some(out),
        Command::Replay(_) => {}
    }
}

fn run(cli: Cli) -> hymmsbm::Result<()> {
    let (command, threads) = match cli.command {
        Command::Replay(r) => {
            let text = std::fs::read_to_string(&r.manifest).map_err(|e| Error::io(&r.manifest, e))?;
            let manifest: RunManifest = serde_json::from_str(&text)?;
            let mut command = manifest.command;
            if let Some(out) = r.out {
                redirect_output(&mut command, out);
            }
            (command, manifest.threads)
        }
        command => (command, cli.threads),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start {threads} threads: {e}")))?;
    let threads = pool.current_num_threads();

    let start = Instant::now();
    let outputs = pool.install(|| execute(&command))?;
    let Some(primary) = outputs.first() else {
        return Ok(());
    };
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads,
        command,
        outputs: outputs.clone(),
        duration_secs: start.elapsed().as_secs_f64(),
    };
    write_json(&sibling(primary, "manifest.json"), &manifest)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
