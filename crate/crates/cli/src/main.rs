//! Command-line front end: graph generation/ingestion, model creation,
//! bound computation and comparison, and the verification suites.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error,
//! 3 verification failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use gcnbound::error::Error;
use gcnbound::gcn::{load_model, Activation, GcnModel};
use gcnbound::graphs::{
    build_propagation, generate, load_edge_list, Graph, GraphSpec, Propagation, PropagationKind,
};
use gcnbound::instances::{random_features, random_model, teacher_dataset, Regime};
use gcnbound::matrixkit::Matrix;
use gcnbound::montecarlo::{
    check_lemma6, check_perturbation_bound, check_perturbation_condition,
    check_quadratic_concentration, McConfig, McReport,
};
use gcnbound::pacbayes::{
    build_posterior, compute_bound_report, BoundKind, BoundReport, PacParams,
};
use gcnbound::sensitivity::{build_design, Design, FilterKind, FilterSpec};
use gcnbound::serialize::{format_sig, to_canonical_json};
use gcnbound::verify::{run_suite, VerifyConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gcnbound",
    version,
    about = "Topology-aware PAC-Bayesian generalization bounds for GCNs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and write it as an edge list.
    GenGraph(GenGraphArgs),
    /// Evaluate generalization-bound reports for one or more designs.
    Bound(BoundArgs),
    /// Run the full verification suite (lemmas, dominance, sampling).
    Verify(VerifyArgs),
    /// Run a single Monte-Carlo check on a seeded random instance.
    McCheck(McCheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GraphKindArg {
    Complete,
    Path,
    Cycle,
    Star,
    Regular,
    ErdosRenyi,
    Sbm,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PropArg {
    /// Normalized adjacency with self-loops (symmetric).
    NormAdj,
    /// Lazy random walk (row-stochastic, self-loops).
    LazyRw,
    /// Plain random walk (row-stochastic, no self-loops).
    Rw,
}

impl PropArg {
    fn kind(self) -> PropagationKind {
        match self {
            PropArg::NormAdj => PropagationKind::NormalizedAdjacency,
            PropArg::LazyRw => PropagationKind::LazyRandomWalk,
            PropArg::Rw => PropagationKind::RandomWalk,
        }
    }
}

#[derive(Args)]
struct GraphSourceArgs {
    /// Edge-list file to load.
    #[arg(long, conflicts_with_all = ["kind", "n"])]
    graph: Option<PathBuf>,
    /// Generator kind (with --n and kind-specific flags).
    #[arg(long, value_enum)]
    kind: Option<GraphKindArg>,
    /// Node count for the generators.
    #[arg(long)]
    n: Option<usize>,
    /// Degree for --kind regular.
    #[arg(long)]
    k: Option<usize>,
    /// Edge probability for --kind erdos-renyi.
    #[arg(long)]
    p: Option<f64>,
    /// Comma-separated block sizes for --kind sbm.
    #[arg(long)]
    sizes: Option<String>,
    /// Within-block edge probability for --kind sbm.
    #[arg(long, default_value_t = 0.9)]
    p_in: f64,
    /// Cross-block edge probability for --kind sbm.
    #[arg(long, default_value_t = 0.1)]
    p_out: f64,
}

impl GraphSourceArgs {
    fn spec(&self) -> Result<GraphSpec, Error> {
        let kind = self.kind.ok_or_else(|| {
            Error::Validation("either --graph or --kind must be given".into())
        })?;
        let need_n = |n: Option<usize>| {
            n.ok_or_else(|| Error::Validation("--n is required for this generator".into()))
        };
        Ok(match kind {
            GraphKindArg::Complete => GraphSpec::Complete { n: need_n(self.n)? },
            GraphKindArg::Path => GraphSpec::Path { n: need_n(self.n)? },
            GraphKindArg::Cycle => GraphSpec::Cycle { n: need_n(self.n)? },
            GraphKindArg::Star => GraphSpec::Star { n: need_n(self.n)? },
            GraphKindArg::Regular => GraphSpec::Regular {
                n: need_n(self.n)?,
                k: self.k.ok_or_else(|| {
                    Error::Validation("--k is required for --kind regular".into())
                })?,
            },
            GraphKindArg::ErdosRenyi => GraphSpec::ErdosRenyi {
                n: need_n(self.n)?,
                p: self.p.ok_or_else(|| {
                    Error::Validation("--p is required for --kind erdos-renyi".into())
                })?,
            },
            GraphKindArg::Sbm => {
                let sizes = self
                    .sizes
                    .as_ref()
                    .ok_or_else(|| {
                        Error::Validation("--sizes is required for --kind sbm".into())
                    })?
                    .split(',')
                    .map(|t| {
                        t.trim().parse::<usize>().map_err(|_| {
                            Error::Validation(format!("invalid block size {t:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                GraphSpec::Sbm { sizes, p_in: self.p_in, p_out: self.p_out }
            }
        })
    }

    fn load(&self, seed: u64) -> Result<Graph, Error> {
        match &self.graph {
            Some(path) => load_edge_list(path),
            None => generate(&self.spec()?, seed),
        }
    }
}

#[derive(Args)]
struct GenGraphArgs {
    #[command(flatten)]
    source: GraphSourceArgs,
    /// RNG seed for the random generators.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output edge-list path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    source: GraphSourceArgs,
    /// Propagation matrix kind.
    #[arg(long, value_enum, default_value_t = PropArg::NormAdj)]
    prop: PropArg,
    /// Model JSON file (exclusive with --widths).
    #[arg(long, conflicts_with = "widths")]
    model: Option<PathBuf>,
    /// Comma-separated widths h_0,...,h_d for a random model.
    #[arg(long)]
    widths: Option<String>,
    /// Activation for the random model.
    #[arg(long, default_value = "relu")]
    activation: String,
    /// Weight-init seed for the random model.
    #[arg(long, default_value_t = 1)]
    init_seed: u64,
    /// Comma-separated designs: diagonal, lowrank, spectral, baseline, exact.
    #[arg(long, default_value = "diagonal,lowrank,spectral,baseline")]
    designs: String,
    /// Graph filter for the spectral design.
    #[arg(long, default_value = "identity")]
    filter: String,
    /// Filter emphasis; defaults to the filter's standard value.
    #[arg(long)]
    xi: Option<f64>,
    /// Number of teacher-labeled samples (also the PAC m).
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Seed of the fixed random teacher model assigning labels.
    #[arg(long, default_value_t = 7)]
    teacher_seed: u64,
    /// Input bound B; samples are scaled to max row norm exactly B.
    #[arg(long, default_value_t = 1.0)]
    feature_bound: f64,
    /// Margin gamma.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Confidence delta.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Union-bound cover constant; omit for the default d*sqrt(m).
    #[arg(long)]
    cover: Option<f64>,
    /// Seed for graph generation and the sample features.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trials per Monte-Carlo check.
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    /// Debug: scale sensitivity matrices by 0.1 so dominance must fail.
    #[arg(long, default_value_t = false)]
    break_dominance: bool,
    /// Report output path (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum McWhich {
    /// Perturbation condition for a design's prior/posterior.
    Condition,
    /// First-order perturbation bound on the epsilon ladder.
    Bound,
    /// Depth-d norm perturbation bound on the epsilon ladder.
    Lemma6,
    /// Quadratic-form concentration behind kappa.
    Quadratic,
}

#[derive(Args)]
struct McCheckArgs {
    /// Which check to run.
    #[arg(long, value_enum)]
    which: McWhich,
    #[command(flatten)]
    source: GraphSourceArgs,
    #[arg(long, value_enum, default_value_t = PropArg::NormAdj)]
    prop: PropArg,
    /// Comma-separated widths for the random model.
    #[arg(long, default_value = "2,3,2")]
    widths: String,
    #[arg(long, default_value = "relu")]
    activation: String,
    /// Keep weights and features in the all-active ReLU regime.
    #[arg(long, default_value_t = false)]
    mask_free: bool,
    #[arg(long, default_value = "diagonal")]
    design: String,
    #[arg(long, default_value = "identity")]
    filter: String,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Largest perturbation scale of the ladder.
    #[arg(long, default_value_t = 1e-1)]
    scale: f64,
    #[arg(long, default_value_t = 0.05)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_widths(text: &str) -> Result<Vec<usize>, Error> {
    let widths = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Validation(format!("invalid width {t:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if widths.len() < 3 {
        return Err(Error::Validation("need at least h_0,h_1,h_2 (depth >= 2)".into()));
    }
    Ok(widths)
}

fn parse_filter(name: &str, xi: Option<f64>) -> Result<FilterSpec, Error> {
    let kind = FilterKind::parse(name)?;
    match xi {
        Some(xi) => FilterSpec::new(kind, xi),
        None => Ok(FilterSpec::with_default_xi(kind)),
    }
}

fn parse_design(name: &str, filter: &FilterSpec) -> Result<Option<BoundKind>, Error> {
    match name.trim().to_ascii_lowercase().as_str() {
        "diagonal" | "diag" => Ok(Some(BoundKind::SpatialDiagonal)),
        "lowrank" | "low-rank" | "lr" => Ok(Some(BoundKind::SpatialLowRank)),
        "spectral" => Ok(Some(BoundKind::SpectralFilter(*filter))),
        "baseline" => Ok(Some(BoundKind::Baseline)),
        "exact" | "exact-spatial" => Ok(Some(BoundKind::ExactSpatialDiagnostic)),
        "" => Ok(None),
        other => Err(Error::Validation(format!("unknown design {other:?}"))),
    }
}

fn write_or_print(path: &Option<PathBuf>, content: &str) -> Result<(), Error> {
    match path {
        Some(p) => {
            std::fs::write(p, content)?;
            Ok(())
        }
        None => Ok(()),
    }
}

fn cmd_gen_graph(args: &GenGraphArgs) -> Result<(), Error> {
    let graph = args.source.load(args.seed)?;
    graph.write_edge_list(&args.out)?;
    println!(
        "n={} edges={} d_max={} d_min={} -> {}",
        graph.node_count(),
        graph.edge_count(),
        graph.max_degree(),
        graph.min_degree(),
        args.out.display()
    );
    Ok(())
}

/// A per-design row of the comparison output: either a full report or
/// the validation problem that prevented it.
#[derive(serde::Serialize)]
#[serde(untagged)]
enum ReportRow {
    Ok(Box<BoundReport>),
    Failed { design: String, error: String },
}

fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(
        "design,empirical_margin_loss,complexity_term,kl_exact,kl_upper,final_bound,baseline_bound,sigma_sq,degenerate\n",
    );
    let fmt_opt = |v: Option<f64>| v.map(|x| format_sig(x, 6)).unwrap_or_default();
    for row in rows {
        match row {
            ReportRow::Ok(r) => out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.design,
                format_sig(r.empirical_margin_loss, 6),
                fmt_opt(r.complexity_term),
                fmt_opt(r.kl_exact),
                fmt_opt(r.kl_upper),
                fmt_opt(r.final_bound),
                format_sig(r.baseline_bound, 6),
                fmt_opt(r.sigma_sq),
                r.degenerate
            )),
            ReportRow::Failed { design, error } => {
                out.push_str(&format!("{design},error: {error},,,,,,,\n"))
            }
        }
    }
    out
}

fn cmd_bound(args: &BoundArgs) -> Result<(), Error> {
    let graph = args.source.load(args.seed)?;
    let kind = args.prop.kind();
    let prop = build_propagation(&graph, kind)?;
    let activation = Activation::parse(&args.activation)?;
    let model: GcnModel = match &args.model {
        Some(path) => load_model(path)?,
        None => {
            let widths = parse_widths(
                args.widths.as_deref().unwrap_or("2,4,4,2"),
            )?;
            random_model(&widths, activation, Regime::Signed, args.init_seed)?
        }
    };
    if model.classes() < 2 {
        return Err(Error::Validation("bound evaluation needs K >= 2 classes".into()));
    }
    if model.width(0) == 0 {
        return Err(Error::Validation("model input width must be positive".into()));
    }
    let teacher = random_model(
        model.widths(),
        activation,
        Regime::Signed,
        args.teacher_seed,
    )?;
    let samples = teacher_dataset(
        &graph,
        kind,
        &teacher,
        args.samples,
        args.feature_bound,
        args.seed ^ 0x5ca1_ab1e,
    )?;
    let cover = args
        .cover
        .unwrap_or_else(|| PacParams::default_cover(model.depth(), args.samples));
    let params =
        PacParams::new(args.gamma, args.delta, args.samples, args.feature_bound, cover)?;
    let filter = parse_filter(&args.filter, args.xi)?;

    let mut rows = Vec::new();
    println!(
        "{:<22} {:>14} {:>14} {:>14} {:>14}",
        "design", "emp_loss", "complexity", "kl_upper", "final_bound"
    );
    for name in args.designs.split(',') {
        let Some(kind) = parse_design(name, &filter)? else { continue };
        match compute_bound_report(&kind, &model, &prop, &samples, &params) {
            Ok(report) => {
                let opt = |v: Option<f64>| {
                    v.map(|x| format_sig(x, 6)).unwrap_or_else(|| "-".into())
                };
                println!(
                    "{:<22} {:>14} {:>14} {:>14} {:>14}",
                    report.design,
                    format_sig(report.empirical_margin_loss, 6),
                    opt(report.complexity_term),
                    opt(report.kl_upper),
                    opt(report.final_bound),
                );
                rows.push(ReportRow::Ok(Box::new(report)));
            }
            Err(Error::Validation(msg)) | Err(Error::Dimension(msg)) => {
                eprintln!("warning: design {name}: {msg}");
                rows.push(ReportRow::Failed { design: name.trim().into(), error: msg });
            }
            Err(other) => return Err(other),
        }
    }
    let content = match args.format {
        FormatArg::Json => to_canonical_json(&rows, 12)?,
        FormatArg::Csv => report_csv(&rows),
    };
    write_or_print(&args.out, &content)?;
    if let Some(p) = &args.out {
        println!("report -> {}", p.display());
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, Error> {
    let bundle = run_suite(&VerifyConfig {
        seed: args.seed,
        trials: args.trials,
        break_dominance: args.break_dominance,
    })?;
    for check in &bundle.checks {
        println!(
            "{} {:<32} instances={:<4} {}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.instances,
            check.detail
        );
    }
    write_or_print(&args.out, &to_canonical_json(&bundle, 12)?)?;
    Ok(bundle.all_pass)
}

fn cmd_mc_check(args: &McCheckArgs) -> Result<bool, Error> {
    let graph = args.source.load(args.seed)?;
    let kind = args.prop.kind();
    let prop: Propagation = build_propagation(&graph, kind)?;
    let widths = parse_widths(&args.widths)?;
    let activation = Activation::parse(&args.activation)?;
    let regime = if args.mask_free { Regime::MaskFree } else { Regime::Signed };
    let model = random_model(&widths, activation, regime, args.seed.wrapping_add(1))?;
    let features = random_features(
        graph.node_count(),
        widths[0],
        1.0,
        regime,
        args.seed.wrapping_add(2),
    )?;
    let bound = features.two_infinity_norm();
    let params = PacParams::new(args.gamma, 0.05, 32, bound, 1.0)?;
    let cfg = McConfig::new(args.trials, args.seed, args.scale, args.tolerance)?;
    let filter = parse_filter(&args.filter, args.xi)?;
    let design = match args.design.to_ascii_lowercase().as_str() {
        "exact" | "exact-spatial" => Design::ExactSpatial,
        "diagonal" | "diag" => Design::Diagonal,
        "lowrank" | "low-rank" => Design::LowRank,
        "spectral" => Design::Spectral(filter),
        other => return Err(Error::Validation(format!("unknown design {other:?}"))),
    };

    let report: McReport = match args.which {
        McWhich::Condition => {
            let set = build_design(&design, &model, &prop, &features, bound)?;
            let posterior = build_posterior(&set, &model, &prop, &params)?;
            check_perturbation_condition(
                &set,
                posterior.sigma_sq,
                &posterior.blocks,
                &params,
                &cfg,
            )?
        }
        McWhich::Bound => {
            let set = build_design(&design, &model, &prop, &features, bound)?;
            let posterior = build_posterior(&set, &model, &prop, &params)?;
            check_perturbation_bound(
                &model,
                &prop,
                &features,
                &set,
                posterior.sigma_sq,
                &posterior.blocks,
                &cfg,
            )?
        }
        McWhich::Lemma6 => check_lemma6(&model, &prop, &features, &cfg)?,
        McWhich::Quadratic => {
            let k = model.classes().max(2);
            let a = Matrix::from_fn(k, widths[0] * widths[1], |i, j| {
                ((i * 31 + j * 17) % 13) as f64 / 13.0 - 0.5
            })?;
            let r = Matrix::identity(a.cols())?;
            check_quadratic_concentration(&a, &r, 0.5, &cfg)?
        }
    };
    println!(
        "{} empirical_probability={} max_ratio={} violations={}",
        if report.pass { "PASS" } else { "FAIL" },
        format_sig(report.empirical_probability, 6),
        format_sig(report.max_ratio, 6),
        report.violations
    );
    write_or_print(&args.out, &to_canonical_json(&report, 12)?)?;
    Ok(report.pass)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Json(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome: Result<bool, Error> = match &cli.command {
        Command::GenGraph(args) => cmd_gen_graph(args).map(|_| true),
        Command::Bound(args) => cmd_bound(args).map(|_| true),
        Command::Verify(args) => cmd_verify(args),
        Command::McCheck(args) => cmd_mc_check(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(3)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
