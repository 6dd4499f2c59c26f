//! `axyb`: generate, solve and evaluate `AX = YB` calibration data.
//!
//! Results go to standard output or `-o` files as JSON or CSV, diagnostics
//! to standard error. Exit codes: 0 success, 1 usage, 2 data, 3 numerical.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use axyb_core::benchmark::{
    data_count_sweep, metric_ladder, residual_form_study, run_campaign, selection_study, to_csv, trial_data,
    with_jobs, CampaignSpec, LadderSpec, ResidualStudySpec, ScenarioSpec,
};
use axyb_core::dataset::{content_digest, load_pairs, read_structured, save_pairs, FileFormat, LoadOptions, PosePairSet};
use axyb_core::eval::{estimation_errors, closed_form_study, residual, ResidualForm};
use axyb_core::se3::Pose;
use axyb_core::solvers::{si_ah_solve, solve, CalibEstimate, ClosedForm, Method, SolverConfig};
use axyb_core::synth::{generate_truth, inject_uncertainty, GroundTruth, NoiseConfig, Scenario, Workspace};
use axyb_core::uncertainty::{select_pairs, srm_metric, SelectionStrategy};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "axyb", version, about = "Hand-eye and robot-world calibration (AX = YB)")]
struct Cli {
    /// Solver settings file (JSON or TOML).
    #[arg(long, global = true, env = "AXYB_CONFIG")]
    config: Option<PathBuf>,
    /// Override one solver setting, e.g. `--set alpha=0.02`. Wins over the
    /// config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Print a short human-readable summary on standard error.
    #[arg(long, global = true)]
    summary: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a noisy dataset and its ground truth.
    Generate(GenerateArgs),
    /// Estimate X and Y from a dataset.
    Solve(SolveArgs),
    /// Relative uncertainty metric of a dataset.
    Metric(MetricArgs),
    /// Keep the pairs in a rank window of the uncertainty metric.
    Select(SelectArgs),
    /// Errors against ground truth and residuals on data.
    Evaluate(EvaluateArgs),
    /// Run a simulation campaign.
    Benchmark(BenchmarkArgs),
    /// Run one of the studies and emit a plot-ready table.
    Study(StudyArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Dataset file; `.csv` is read as CSV, anything else as JSON.
    #[arg(short, long)]
    input: PathBuf,
    /// Project slightly non-orthonormal rotations instead of rejecting them.
    #[arg(long)]
    reorthonormalize: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = "R-AU/C-AU", value_parser = parse_scenario)]
    scenario: Scenario,
    /// Noise magnitudes file; replaces the scenario.
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Workspace file; defaults to the standard sampling box.
    #[arg(long)]
    workspace: Option<PathBuf>,
    #[arg(short, long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exchange the translations of X and Y in the ground truth.
    #[arg(long)]
    swap_translations: bool,
    #[arg(short, long)]
    output: PathBuf,
    /// Ground-truth file; defaults to `<output stem>.truth.json`.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(short, long, value_parser = parse_method)]
    method: Method,
    /// Start the descent solvers from this estimate instead of SI-AH.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long, value_parser = parse_closed_form)]
    closed_form: Option<ClosedForm>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MetricArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Inclusive 1-based rank window, `lo:hi`.
    #[arg(long, value_parser = parse_strategy)]
    strategy: SelectionStrategy,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Output of `solve`.
    #[arg(long)]
    estimate: PathBuf,
    /// Ground truth written by `generate`.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Dataset for residuals.
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(long)]
    reorthonormalize: bool,
    /// Residual form, or `all`.
    #[arg(long, default_value = "all")]
    form: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Campaign spec (JSON or TOML); defaults to the six-scenario grid.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write one CSV row per trial and method here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyKind {
    ClosedForm,
    ResidualForms,
    DataCount,
    Selection,
    MetricLadder,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitKind {
    SiAh,
    Identity,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long, value_enum)]
    kind: StudyKind,
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    #[arg(long)]
    trials: Option<usize>,
    /// Metric ladder: seeds per step.
    #[arg(long, default_value_t = 50)]
    seeds: usize,
    /// Metric ladder: noise steps.
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(short, long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Data-count sweep: pair counts.
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,50,100,150")]
    counts: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Vec<Method>,
    /// Closed-form study: swap the X and Y translations of the truth.
    #[arg(long)]
    swap_translations: bool,
    /// Closed-form study: initial estimate.
    #[arg(long, value_enum, default_value = "si-ah")]
    init: InitKind,
    #[arg(long)]
    jobs: Option<usize>,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    json: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl From<axyb_core::Error> for Failure {
    fn from(e: axyb_core::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: axyb_core::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: axyb_core::Error| e.to_string())
}

fn parse_closed_form(s: &str) -> Result<ClosedForm, String> {
    s.parse().map_err(|e: axyb_core::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<SelectionStrategy, String> {
    s.parse().map_err(|e: axyb_core::Error| e.to_string())
}

fn require_file(p: &Path) -> Outcome<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("no such file: {}", p.display())))
    }
}

fn require_parent(p: &Path) -> Outcome<()> {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() && !d.is_dir() => {
            Err(Failure::Usage(format!("output directory does not exist: {}", d.display())))
        }
        _ => Ok(()),
    }
}

fn file_digest(p: &Path) -> Outcome<String> {
    Ok(content_digest(&fs::read(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?))
}

fn json_digest<T: Serialize>(v: &T) -> String {
    content_digest(&serde_json::to_vec(v).expect("serializable"))
}

fn load(input: &InputArgs) -> Outcome<PosePairSet> {
    require_file(&input.input)?;
    let opts = LoadOptions { reorthonormalize: input.reorthonormalize };
    Ok(load_pairs(&input.input, FileFormat::from_path(&input.input), opts)?)
}

/// Applies `key=value` overrides through the JSON form of `cfg`. Values
/// that parse as JSON are taken as such, anything else as a string.
fn apply_overrides(cfg: SolverConfig, overrides: &[String]) -> Outcome<SolverConfig> {
    let mut v = serde_json::to_value(&cfg).expect("config serializes");
    for o in overrides {
        let (k, raw) = o
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("override must be KEY=VALUE, got {o:?}")))?;
        let k = k.trim();
        if v.get(k).is_none() {
            return Err(Failure::Usage(format!("unknown solver setting {k:?}")));
        }
        let val = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        v[k] = val;
    }
    let cfg: SolverConfig = serde_json::from_value(v).map_err(|e| Failure::Usage(e.to_string()))?;
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn solver_config(cli: &Cli, base: SolverConfig) -> Outcome<SolverConfig> {
    let base = match &cli.config {
        Some(p) => {
            require_file(p)?;
            SolverConfig::from_file(p)?
        }
        None => base,
    };
    apply_overrides(base, &cli.overrides)
}

fn emit(text: &str, output: Option<&Path>) -> Outcome<()> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Data(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            match writeln!(std::io::stdout().lock(), "{}", text.trim_end()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Data(e.to_string())),
                _ => Ok(()),
            }
        }
    }
}

fn emit_json(v: &Value, output: Option<&Path>) -> Outcome<()> {
    emit(&serde_json::to_string_pretty(v).expect("json"), output)
}

fn emit_table<T: Serialize>(rows: &[T], meta: Value, as_json: bool, output: Option<&Path>) -> Outcome<()> {
    if as_json {
        let mut v = meta;
        v["rows"] = serde_json::to_value(rows).expect("rows serialize");
        emit_json(&v, output)
    } else {
        // CSV has no room for provenance; it travels as a comment line.
        let mut text = format!("# {}\n", serde_json::to_string(&meta).expect("json"));
        text += &to_csv(rows)?;
        emit(&text, output)
    }
}

fn summary(cli: &Cli, msg: impl FnOnce() -> String) {
    if cli.summary {
        eprintln!("{}", msg());
    }
}

fn cmd_generate(cli: &Cli, a: &GenerateArgs) -> Outcome<()> {
    for p in a.noise.iter().chain(&a.workspace) {
        require_file(p)?;
    }
    require_parent(&a.output)?;
    let truth_path = a.truth.clone().unwrap_or_else(|| {
        let stem = a.output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        a.output.with_file_name(format!("{stem}.truth.json"))
    });
    require_parent(&truth_path)?;
    let noise = match &a.noise {
        Some(p) => NoiseConfig { seed: a.seed, ..read_structured(p)? },
        None => a.scenario.noise(a.seed),
    };
    noise.validate()?;
    for field in noise.above_range() {
        eprintln!("warning: {field} exceeds the studied noise range");
    }
    let ws: Workspace = match &a.workspace {
        Some(p) => read_structured(p)?,
        None => Workspace::default(),
    };
    let mut gt = generate_truth(a.n, &ws, a.seed)?;
    if a.swap_translations {
        gt = gt.with_swapped_translations();
    }
    let pairs = inject_uncertainty(&gt, &noise)?;
    save_pairs(&pairs, &a.output, FileFormat::from_path(&a.output))?;
    fs::write(&truth_path, serde_json::to_string_pretty(&gt).expect("truth serializes"))
        .map_err(|e| Failure::Data(format!("{}: {e}", truth_path.display())))?;
    summary(cli, || format!("wrote {} pairs to {}", pairs.len(), a.output.display()));
    emit_json(
        &json!({
            "dataset": a.output,
            "truth": truth_path,
            "pairs": pairs.len(),
            "seed": a.seed,
            "noise": noise,
            "digest": pairs.digest(),
            "file_digest": file_digest(&a.output)?,
        }),
        None,
    )
}

/// Reads an estimate written by `solve`, bare or wrapped.
fn read_estimate(p: &Path) -> Outcome<CalibEstimate> {
    require_file(p)?;
    let v: Value = read_structured(p)?;
    let inner = v.get("estimate").cloned().unwrap_or(v);
    serde_json::from_value(inner).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))
}

fn cmd_solve(cli: &Cli, a: &SolveArgs) -> Outcome<()> {
    if let Some(p) = &a.init {
        require_file(p)?;
    }
    if let Some(p) = &a.output {
        require_parent(p)?;
    }
    let pairs = load(&a.input)?;
    let mut cfg = solver_config(cli, SolverConfig::default())?;
    if let Some(cf) = a.closed_form {
        cfg.closed_form = cf;
    }
    let init = match &a.init {
        Some(p) => {
            let e = read_estimate(p)?;
            Some((e.x, e.y))
        }
        None => None,
    };
    let est = solve(a.method, &pairs, &cfg, init)?;
    summary(cli, || {
        format!(
            "{}: {} iterations, objective {:.6e}, converged {}",
            est.method, est.iterations, est.objective, est.converged
        )
    });
    emit_json(
        &json!({
            "input_digest": file_digest(&a.input.input)?,
            "config_digest": json_digest(&cfg),
            "estimate": est,
        }),
        a.output.as_deref(),
    )
}

fn cmd_metric(cli: &Cli, a: &MetricArgs) -> Outcome<()> {
    if let Some(p) = &a.output {
        require_parent(p)?;
    }
    let pairs = load(&a.input)?;
    let report = srm_metric(&pairs)?;
    summary(cli, || format!("scalar metric {:.6e}, lambda {:.6e}", report.scalar_metric, report.lambda_factor));
    emit_json(
        &json!({ "input_digest": file_digest(&a.input.input)?, "report": report }),
        a.output.as_deref(),
    )
}

fn cmd_select(cli: &Cli, a: &SelectArgs) -> Outcome<()> {
    require_parent(&a.output)?;
    let pairs = load(&a.input)?;
    a.strategy.validate(pairs.len()).map_err(|e| Failure::Usage(e.to_string()))?;
    let report = srm_metric(&pairs)?;
    let kept = select_pairs(&pairs, &report.per_pair_metric, a.strategy)?;
    save_pairs(&kept, &a.output, FileFormat::from_path(&a.output))?;
    summary(cli, || format!("kept {} of {} pairs", kept.len(), pairs.len()));
    emit_json(
        &json!({
            "input_digest": file_digest(&a.input.input)?,
            "strategy": a.strategy.to_string(),
            "output": a.output,
            "kept": kept.len(),
            "digest": kept.digest(),
        }),
        None,
    )
}

fn cmd_evaluate(cli: &Cli, a: &EvaluateArgs) -> Outcome<()> {
    for p in std::iter::once(&a.estimate).chain(&a.truth).chain(&a.input) {
        require_file(p)?;
    }
    if a.truth.is_none() && a.input.is_none() {
        return Err(Failure::Usage("evaluate needs --truth, --input or both".into()));
    }
    let forms: Vec<ResidualForm> = if a.form.eq_ignore_ascii_case("all") {
        ResidualForm::ALL.to_vec()
    } else {
        vec![a.form.parse().map_err(|e: axyb_core::Error| Failure::Usage(e.to_string()))?]
    };
    if let Some(p) = &a.output {
        require_parent(p)?;
    }
    let est = read_estimate(&a.estimate)?;
    let mut out = json!({ "estimate_digest": file_digest(&a.estimate)?, "method": est.method });
    if let Some(p) = &a.truth {
        let gt: GroundTruth = read_structured(p)?;
        let (ex, ey) = estimation_errors((&est.x, &est.y), (&gt.x_opt, &gt.y_opt));
        summary(cli, || format!("Err_T(X) {:.6}  Err_T(Y) {:.6}", ex.err_total, ey.err_total));
        out["truth_digest"] = json!(file_digest(p)?);
        out["errors"] = json!({ "x": ex, "y": ey });
    }
    if let Some(p) = &a.input {
        let opts = LoadOptions { reorthonormalize: a.reorthonormalize };
        let pairs = load_pairs(p, FileFormat::from_path(p), opts)?;
        let res = forms
            .iter()
            .map(|&f| residual(&pairs, &est.x, &est.y, f))
            .collect::<axyb_core::Result<Vec<_>>>()?;
        for r in res.iter().filter(|r| !r.skipped.is_empty()) {
            eprintln!("warning: {} residual skipped {} degenerate pairs", r.form, r.skipped.len());
        }
        out["input_digest"] = json!(file_digest(p)?);
        out["residuals"] = json!(res);
    }
    emit_json(&out, a.output.as_deref())
}

fn cmd_benchmark(cli: &Cli, a: &BenchmarkArgs) -> Outcome<()> {
    if let Some(p) = &a.spec {
        require_file(p)?;
    }
    for p in a.csv.iter().chain(&a.output) {
        require_parent(p)?;
    }
    let mut spec: CampaignSpec = match &a.spec {
        Some(p) => read_structured(p)?,
        None => CampaignSpec::default(),
    };
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    spec.solver = solver_config(cli, spec.solver.clone())?;
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let res = with_jobs(a.jobs, || run_campaign(&spec))??;
    if let Some(p) = &a.csv {
        emit(&res.records_csv()?, Some(p))?;
    }
    summary(cli, || {
        res.aggregates
            .iter()
            .map(|g| {
                let m = |s: &Option<axyb_core::benchmark::Summary>| s.as_ref().map_or(f64::NAN, |s| s.mean.err_total);
                format!("{:<14} {:<8} Err_T(X) {:.4}  Err_T(Y) {:.4}  failures {}", g.scenario, g.method, m(&g.x), m(&g.y), g.failures)
            })
            .collect::<Vec<_>>()
            .join("\n")
    });
    let mut out = serde_json::to_value(&res).expect("result serializes");
    out["spec_digest"] = json!(json_digest(&spec));
    emit_json(&out, a.output.as_deref())?;
    if res.degraded {
        return Err(Failure::Numerical(format!(
            "campaign degraded: {:.1}% of solves failed",
            100.0 * res.failed_fraction
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct TraceRow {
    form: ClosedForm,
    iteration: usize,
    objective: f64,
    heuristic: f64,
}

fn cmd_study(cli: &Cli, a: &StudyArgs) -> Outcome<()> {
    if let Some(p) = &a.output {
        require_parent(p)?;
    }
    let cfg = solver_config(cli, SolverConfig::default())?;
    let methods = |default: &[Method]| if a.methods.is_empty() { default.to_vec() } else { a.methods.clone() };
    let out = a.output.as_deref();
    match a.kind {
        StudyKind::MetricLadder => {
            let spec = LadderSpec { steps: a.steps, seeds: a.seeds, n_pairs: a.n, seed0: a.seed, ..LadderSpec::default() };
            let rows = with_jobs(a.jobs, || metric_ladder(&spec))??;
            emit_table(&rows, json!({ "kind": "metric-ladder", "spec_digest": json_digest(&spec) }), a.json, out)
        }
        StudyKind::ResidualForms => {
            let spec = ResidualStudySpec {
                scenario: a.scenario.unwrap_or(Scenario::RAuCAu).into(),
                trials: a.trials.unwrap_or(60),
                n_pairs: a.n,
                seed0: a.seed,
                methods: methods(&[Method::SiAh, Method::Dq, Method::Kron]),
                solver: cfg,
                ..ResidualStudySpec::default()
            };
            let rows = with_jobs(a.jobs, || residual_form_study(&spec))??;
            emit_table(&rows, json!({ "kind": "residual-forms", "spec_digest": json_digest(&spec) }), a.json, out)
        }
        StudyKind::DataCount => {
            let spec = CampaignSpec {
                scenarios: vec![ScenarioSpec::from(a.scenario.unwrap_or(Scenario::RAuCAu))],
                methods: methods(&Method::ALL),
                trials: a.trials.unwrap_or(10),
                seed0: a.seed,
                solver: cfg,
                ..CampaignSpec::default()
            };
            let rows = with_jobs(a.jobs, || data_count_sweep(&a.counts, &spec))??;
            let meta = json!({ "kind": "data-count", "counts": a.counts, "spec_digest": json_digest(&spec) });
            emit_table(&rows, meta, a.json, out)
        }
        StudyKind::Selection => {
            let spec = CampaignSpec {
                scenarios: vec![ScenarioSpec::from(a.scenario.unwrap_or(Scenario::High))],
                methods: methods(&[Method::Dq, Method::Kron]),
                trials: a.trials.unwrap_or(20),
                n_pairs: a.n,
                seed0: a.seed,
                solver: cfg,
                ..CampaignSpec::default()
            };
            let rows = with_jobs(a.jobs, || selection_study(&SelectionStrategy::STUDY, &spec))??;
            emit_table(&rows, json!({ "kind": "selection", "spec_digest": json_digest(&spec) }), a.json, out)
        }
        StudyKind::ClosedForm => {
            let scenario = ScenarioSpec::from(a.scenario.unwrap_or(Scenario::RAuCAu));
            let (mut gt, mut pairs) = trial_data(&scenario, a.n, &Workspace::default(), a.seed)?;
            if a.swap_translations {
                gt = gt.with_swapped_translations();
                pairs = inject_uncertainty(&gt, &scenario.noise(a.seed))?;
            }
            let init = match a.init {
                InitKind::SiAh => {
                    let e = si_ah_solve(&pairs, &cfg)?;
                    (e.x, e.y)
                }
                InitKind::Identity => (Pose::identity(), Pose::identity()),
            };
            let runs = closed_form_study(&pairs, (&init.0, &init.1), &cfg)?;
            summary(cli, || {
                runs.iter()
                    .map(|r| {
                        let (ex, ey) = estimation_errors((&r.estimate.x, &r.estimate.y), (&gt.x_opt, &gt.y_opt));
                        format!("{}: objective {:.9}  Err_T(X) {:.4}  Err_T(Y) {:.4}", r.form, r.estimate.objective, ex.err_total, ey.err_total)
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            });
            let meta = json!({ "kind": "closed-form", "digest": pairs.digest(), "config_digest": json_digest(&cfg) });
            if a.json {
                let mut v = meta;
                v["runs"] = json!(runs);
                emit_json(&v, out)
            } else {
                let rows: Vec<TraceRow> = runs
                    .iter()
                    .flat_map(|r| {
                        r.estimate.trace.iter().map(move |t| TraceRow {
                            form: r.form,
                            iteration: t.iteration,
                            objective: t.objective,
                            heuristic: t.heuristic,
                        })
                    })
                    .collect();
                emit_table(&rows, meta, false, out)
            }
        }
    }
}

fn run(cli: &Cli) -> Outcome<()> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(cli, a),
        Command::Solve(a) => cmd_solve(cli, a),
        Command::Metric(a) => cmd_metric(cli, a),
        Command::Select(a) => cmd_select(cli, a),
        Command::Evaluate(a) => cmd_evaluate(cli, a),
        Command::Benchmark(a) => cmd_benchmark(cli, a),
        Command::Study(a) => cmd_study(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
