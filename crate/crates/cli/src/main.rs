use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use treecost::approx::construct_approx;
use treecost::cost::bounds::{approx_bounds, edge_spectrum, exact_costs, DEFAULT_DELTA};
use treecost::cost::figures::{
    default_block_grid, default_party_grid, rate_comparison, rate_comparison_csv, w_second_order, w_second_order_csv,
};
use treecost::cost::thresholds::{optimize_thresholds, uniform_thresholds};
use treecost::decomposition::decompose;
use treecost::io::{load_state, load_tree, parse_thresholds, to_pretty_json};
use treecost::protocol::{
    build_program, check_completeness, simulate, summarize, Mode, ResourceConfig, SimOptions, Transcript,
};
use treecost::verify::{run_verification, VerifyOptions};
use treecost::{Config, Error, PureState, RootedTree};

const EXIT_INPUT: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "treecost", version, about = "Entanglement costs and LOCC state construction over tree networks")]
struct Cli {
    #[command(flatten)]
    tol: Tolerances,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Tolerances {
    /// Relative singular-value cutoff for Schmidt ranks.
    #[arg(long, global = true)]
    rank_tol: Option<f64>,
    /// Allowed fidelity deficit per branch.
    #[arg(long, global = true)]
    fidelity_tol: Option<f64>,
    /// Branch probability below which enumeration prunes.
    #[arg(long, global = true)]
    prune_tol: Option<f64>,
    /// Allowed deviation of the measurement completeness relation.
    #[arg(long, global = true)]
    completeness_tol: Option<f64>,
}

impl Tolerances {
    fn config(&self) -> Config {
        let mut cfg = Config::from_env();
        if let Some(v) = self.rank_tol {
            cfg.rank_tol = v;
        }
        if let Some(v) = self.fidelity_tol {
            cfg.fidelity_tol = v;
        }
        if let Some(v) = self.prune_tol {
            cfg.prune_tol = v;
        }
        if let Some(v) = self.completeness_tol {
            cfg.completeness_tol = v;
        }
        cfg
    }
}

#[derive(Subcommand)]
enum Command {
    /// Per-edge entanglement costs.
    #[command(subcommand)]
    Cost(CostCommand),
    /// Run the distributed construction protocol.
    Simulate(SimulateArgs),
    /// Build the approximate n-copy target and construct it exactly.
    Approx(ApproxArgs),
    /// Figure data as CSV.
    #[command(subcommand)]
    Figures(FigureCommand),
    /// Run the invariant battery.
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum CostCommand {
    /// `log2` of the Schmidt rank at every edge.
    Exact(Target),
    /// Finite-block-length upper and lower bounds.
    Approx(CostApproxArgs),
}

#[derive(Subcommand)]
enum FigureCommand {
    /// `a` and `b` of the W-state cut after N/4 parties, N = 4..80.
    WSecondOrder(FigureArgs),
    /// Second-order rates under constant and optimized thresholds.
    RateComparison(FigureArgs),
}

#[derive(Args, Clone)]
struct Target {
    /// Tree JSON document.
    #[arg(long)]
    tree: PathBuf,
    /// State JSON document or shorthand such as `w4`, `ghz5`, `product`, `random:7`.
    #[arg(long)]
    state: String,
    /// Party id to root the tree at instead of the document's root.
    #[arg(long)]
    root: Option<String>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Target {
    fn load(&self) -> treecost::Result<(RootedTree, PureState)> {
        let t = load_tree(&self.tree, self.root.as_deref())?;
        let s = load_state(&self.state, &t)?;
        Ok((t, s))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum ThresholdMode {
    Uniform,
    Optimized,
    File(PathBuf),
}

fn parse_threshold_mode(s: &str) -> Result<ThresholdMode, String> {
    Ok(match s {
        "uniform" => ThresholdMode::Uniform,
        "optimized" => ThresholdMode::Optimized,
        path => ThresholdMode::File(PathBuf::from(path)),
    })
}

#[derive(Args)]
struct BlockArgs {
    /// Number of copies.
    #[arg(long)]
    n: usize,
    /// Total trace-distance budget.
    #[arg(long)]
    eps: f64,
    /// `uniform`, `optimized`, or a JSON file of per-edge thresholds.
    #[arg(long, default_value = "optimized", value_parser = parse_threshold_mode)]
    thresholds: ThresholdMode,
}

impl BlockArgs {
    fn thresholds(&self, s: &PureState, t: &RootedTree, cfg: &Config) -> treecost::Result<Vec<f64>> {
        let m = t.edges().len();
        match &self.thresholds {
            ThresholdMode::Uniform => Ok(uniform_thresholds(m, self.eps)),
            ThresholdMode::Optimized => {
                let spectra = t
                    .edges()
                    .iter()
                    .map(|e| edge_spectrum(s, t, e, cfg))
                    .collect::<treecost::Result<Vec<_>>>()?;
                optimize_thresholds(&spectra, self.eps)
            }
            ThresholdMode::File(path) => parse_thresholds(&std::fs::read_to_string(path)?, m),
        }
    }
}

#[derive(Args)]
struct CostApproxArgs {
    #[command(flatten)]
    target: Target,
    #[command(flatten)]
    block: BlockArgs,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = 1e-3)]
    eta: f64,
}

#[derive(Args)]
struct RunMode {
    /// Seed for sampled outcomes.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Enumerate every branch.
    #[arg(long, conflicts_with = "branch")]
    enumerate: bool,
    /// Forced outcome indices, one per random step, comma separated.
    #[arg(long)]
    branch: Option<String>,
    /// Write the transcript(s) as JSON.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

impl RunMode {
    fn mode(&self) -> treecost::Result<Mode> {
        if self.enumerate {
            return Ok(Mode::EnumerateAll);
        }
        match &self.branch {
            Some(b) => b
                .split([',', ' '])
                .filter(|x| !x.is_empty())
                .map(|x| x.trim().parse().map_err(|_| Error::Parse(format!("branch index `{x}`"))))
                .collect::<treecost::Result<Vec<usize>>>()
                .map(Mode::Branch),
            None => Ok(Mode::Sample(self.seed)),
        }
    }

    fn write_transcripts(&self, runs: &[Transcript]) -> treecost::Result<()> {
        if let Some(path) = &self.transcript {
            if runs.len() == 1 {
                std::fs::write(path, to_pretty_json(&runs[0])?)?;
            } else {
                std::fs::write(path, to_pretty_json(&runs)?)?;
            }
        }
        Ok(())
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    target: Target,
    /// Resource dimension override `EDGE=m`, e.g. `e1=3`.
    #[arg(long = "resource", value_name = "EDGE=m")]
    resources: Vec<String>,
    #[command(flatten)]
    run: RunMode,
}

#[derive(Args)]
struct ApproxArgs {
    #[command(flatten)]
    target: Target,
    #[command(flatten)]
    block: BlockArgs,
    #[command(flatten)]
    run: RunMode,
}

#[derive(Args)]
struct FigureArgs {
    #[arg(long, default_value_t = 0.04)]
    eps: f64,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Random instances per check.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Outcome {
    Ok,
    VerificationFailed(String),
}

fn emit(out: Option<&Path>, text: &str) -> treecost::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_resource(spec: &str) -> treecost::Result<(usize, usize)> {
    let (edge, m) = spec
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("resource `{spec}` is not EDGE=m")))?;
    let label = edge
        .trim()
        .trim_start_matches(['e', 'E'])
        .parse()
        .map_err(|_| Error::Parse(format!("edge `{edge}`")))?;
    let m = m.trim().parse().map_err(|_| Error::Parse(format!("resource dimension `{m}`")))?;
    Ok((label, m))
}

fn cmd_simulate(a: &SimulateArgs, cfg: &Config) -> treecost::Result<Outcome> {
    let (t, s) = a.target.load()?;
    let d = decompose(&s, &t, cfg)?;
    let mut res = ResourceConfig::optimal(&d);
    for spec in &a.resources {
        let (label, m) = parse_resource(spec)?;
        res.set(label, m)?;
    }
    let p = build_program(&d, &res)?;
    let completeness = check_completeness(&p, cfg.completeness_tol);
    let opts = SimOptions { prune_tol: cfg.prune_tol, ..SimOptions::with_target(&s) };
    let runs = simulate(&p, &a.run.mode()?, &opts)?;
    a.run.write_transcripts(&runs)?;
    let summary = summarize(&p, &runs);
    let min_f = summary.min_fidelity.unwrap_or(0.0);
    let report = json!({
        "schema_version": treecost::cost::bounds::REPORT_SCHEMA_VERSION,
        "label_map": t.label_map(),
        "ranks": p.ranks(),
        "completeness_passes": completeness.passes,
        "summary": summary,
    });
    emit(a.target.out.as_deref(), &to_pretty_json(&report)?)?;
    if !completeness.passes || min_f < 1.0 - cfg.fidelity_tol {
        return Ok(Outcome::VerificationFailed(format!("minimum branch fidelity {min_f}")));
    }
    Ok(Outcome::Ok)
}

fn cmd_approx(a: &ApproxArgs, cfg: &Config) -> treecost::Result<Outcome> {
    let (t, s) = a.target.load()?;
    let thr = a.block.thresholds(&s, &t, cfg)?;
    let c = construct_approx(&s, &t, a.block.n, &thr, &a.run.mode()?, cfg)?;
    a.run.write_transcripts(&c.transcripts)?;
    emit(a.target.out.as_deref(), &to_pretty_json(&c.report)?)?;
    let min_f = c.report.simulation.as_ref().and_then(|s| s.min_fidelity).unwrap_or(0.0);
    if c.approx.achieved_distance > c.approx.bound + 1e-9 {
        return Ok(Outcome::VerificationFailed(format!(
            "distance {} exceeds bound {}",
            c.approx.achieved_distance, c.approx.bound
        )));
    }
    if min_f < 1.0 - cfg.fidelity_tol || c.report.edges.iter().any(|e| !e.within_gamma) {
        return Ok(Outcome::VerificationFailed(format!("minimum branch fidelity {min_f}")));
    }
    Ok(Outcome::Ok)
}

fn run(cli: &Cli) -> treecost::Result<Outcome> {
    let cfg = cli.tol.config();
    match &cli.command {
        Command::Cost(CostCommand::Exact(target)) => {
            let (t, s) = target.load()?;
            emit(target.out.as_deref(), &to_pretty_json(&exact_costs(&s, &t, &cfg)?)?)?;
        }
        Command::Cost(CostCommand::Approx(a)) => {
            let (t, s) = a.target.load()?;
            let thr = a.block.thresholds(&s, &t, &cfg)?;
            let r = approx_bounds(&s, &t, a.block.n, a.block.eps, &thr, a.delta, a.eta, &cfg)?;
            emit(a.target.out.as_deref(), &to_pretty_json(&r)?)?;
        }
        Command::Simulate(a) => return cmd_simulate(a, &cfg),
        Command::Approx(a) => return cmd_approx(a, &cfg),
        Command::Figures(FigureCommand::WSecondOrder(f)) => {
            let rows = w_second_order(f.eps, &default_party_grid())?;
            emit(f.out.as_deref(), &w_second_order_csv(f.eps, &rows))?;
        }
        Command::Figures(FigureCommand::RateComparison(f)) => {
            let rows = rate_comparison(f.eps, &default_block_grid())?;
            emit(f.out.as_deref(), &rate_comparison_csv(f.eps, &rows))?;
        }
        Command::Verify(v) => {
            let rep = run_verification(&VerifyOptions { seed: v.seed, trials: v.trials }, &cfg);
            for c in &rep.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                let detail = c.failure.as_deref().map(|f| format!(": {f}")).unwrap_or_default();
                eprintln!("{status} {} ({} cases){detail}", c.name, c.cases);
            }
            emit(v.out.as_deref(), &to_pretty_json(&rep)?)?;
            if !rep.passed {
                return Ok(Outcome::VerificationFailed("invariant battery failed".into()));
            }
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(EXIT_VERIFY)
        }
        Err(e @ Error::InsufficientResource { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
