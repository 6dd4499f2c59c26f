//! Simulation campaigns: scenario grids, data-count sweeps, data-selection
//! and metric-ladder studies, and the residual-form ranking study.
//!
//! Every trial draws its data from `seed0 + trial`, so results of a trial
//! do not depend on how many trials run. Trials run in parallel and are
//! gathered back in `(scenario, trial, method)` order.

use nalgebra::Vector6;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::PosePairSet;
use crate::error::{Error, Result};
use crate::eval::{estimation_errors, error_variance, ranking_fidelity, ErrorTriple, ErrorVariance, ResidualForm};
use crate::se3::{Pose, Twist};
use crate::solvers::{si_ah_solve, solve, CalibEstimate, Method, SolverConfig};
use crate::synth::{generate_truth, inject_uncertainty, GroundTruth, NoiseConfig, Scenario, Workspace};
use crate::uncertainty::{select_pairs, srm_metric, SelectionStrategy};

/// Failure share above which a campaign is flagged as degraded.
pub const DEGRADED_FRACTION: f64 = 0.2;

/// A named scenario or explicit noise magnitudes. The noise seed is always
/// replaced by the trial seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSpec {
    Named(Scenario),
    Custom { name: String, noise: NoiseConfig },
}

impl ScenarioSpec {
    pub fn name(&self) -> String {
        match self {
            ScenarioSpec::Named(s) => s.name().to_string(),
            ScenarioSpec::Custom { name, .. } => name.clone(),
        }
    }

    pub fn noise(&self, seed: u64) -> NoiseConfig {
        match self {
            ScenarioSpec::Named(s) => s.noise(seed),
            ScenarioSpec::Custom { noise, .. } => NoiseConfig { seed, ..*noise },
        }
    }
}

impl From<Scenario> for ScenarioSpec {
    fn from(s: Scenario) -> Self {
        ScenarioSpec::Named(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSpec {
    pub scenarios: Vec<ScenarioSpec>,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub n_pairs: usize,
    pub seed0: u64,
    pub workspace: Workspace,
    pub solver: SolverConfig,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        CampaignSpec {
            scenarios: Scenario::COMBINATIONS.iter().map(|&s| s.into()).collect(),
            methods: Method::ALL.to_vec(),
            trials: 30,
            n_pairs: 100,
            seed0: 0,
            workspace: Workspace::default(),
            solver: SolverConfig::default(),
        }
    }
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.methods.is_empty() || self.scenarios.is_empty() {
            return Err(Error::InvalidArgument("need at least one method and one scenario".into()));
        }
        for s in &self.scenarios {
            s.noise(0).validate()?;
        }
        self.workspace.validate()?;
        self.solver.validate()
    }
}

/// One method on one trial. Error fields are empty when the solve failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scenario: String,
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub x_err_r: Option<f64>,
    pub x_err_t: Option<f64>,
    pub x_err_total: Option<f64>,
    pub y_err_r: Option<f64>,
    pub y_err_t: Option<f64>,
    pub y_err_total: Option<f64>,
    pub iterations: usize,
    pub objective: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

impl TrialRecord {
    fn new(scenario: &str, trial: usize, seed: u64, method: Method, out: &Result<(CalibEstimate, (ErrorTriple, ErrorTriple))>) -> Self {
        let mut r = TrialRecord {
            scenario: scenario.to_string(),
            trial,
            seed,
            method,
            x_err_r: None,
            x_err_t: None,
            x_err_total: None,
            y_err_r: None,
            y_err_t: None,
            y_err_total: None,
            iterations: 0,
            objective: None,
            converged: false,
            error: None,
        };
        match out {
            Ok((est, (ex, ey))) => {
                (r.x_err_r, r.x_err_t, r.x_err_total) = (Some(ex.err_r), Some(ex.err_t), Some(ex.err_total));
                (r.y_err_r, r.y_err_t, r.y_err_total) = (Some(ey.err_r), Some(ey.err_t), Some(ey.err_total));
                r.iterations = est.iterations;
                r.objective = Some(est.objective);
                r.converged = est.converged;
            }
            Err(e) => r.error = Some(e.to_string()),
        }
        r
    }

    pub fn x(&self) -> Option<ErrorTriple> {
        Some(ErrorTriple { err_r: self.x_err_r?, err_t: self.x_err_t?, err_total: self.x_err_total? })
    }

    pub fn y(&self) -> Option<ErrorTriple> {
        Some(ErrorTriple { err_r: self.y_err_r?, err_t: self.y_err_t?, err_total: self.y_err_total? })
    }

    /// `Err_T(X) + Err_T(Y)`.
    pub fn combined(&self) -> Option<f64> {
        Some(self.x_err_total? + self.y_err_total?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: ErrorTriple,
    pub max: ErrorTriple,
    pub min: ErrorTriple,
    /// Absent with fewer than two successful trials.
    pub variance: Option<ErrorVariance>,
}

impl Summary {
    pub fn of(batch: &[ErrorTriple]) -> Option<Self> {
        let fold = |f: fn(f64, f64) -> f64| {
            batch.iter().copied().reduce(|a, b| ErrorTriple {
                err_r: f(a.err_r, b.err_r),
                err_t: f(a.err_t, b.err_t),
                err_total: f(a.err_total, b.err_total),
            })
        };
        Some(Summary {
            mean: ErrorTriple::mean(batch)?,
            max: fold(f64::max)?,
            min: fold(f64::min)?,
            variance: error_variance(batch).ok(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub scenario: String,
    pub method: Method,
    pub trials: usize,
    pub failures: usize,
    pub x: Option<Summary>,
    pub y: Option<Summary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub spec: CampaignSpec,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
    pub failed_fraction: f64,
    pub degraded: bool,
}

impl CampaignResult {
    pub fn aggregate(&self, scenario: &str, method: Method) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.scenario == scenario && a.method == method)
    }

    /// Flat CSV, one row per trial and method.
    pub fn records_csv(&self) -> Result<String> {
        to_csv(&self.records)
    }
}

/// Serializes flat rows as CSV with a header.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool for `None`.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map(|p| p.install(f))
            .map_err(|e| Error::InvalidArgument(e.to_string())),
    }
}

/// Synthesized truth and noisy pairs for one trial.
pub fn trial_data(
    scenario: &ScenarioSpec,
    n_pairs: usize,
    workspace: &Workspace,
    seed: u64,
) -> Result<(GroundTruth, PosePairSet)> {
    let gt = generate_truth(n_pairs, workspace, seed)?;
    let pairs = inject_uncertainty(&gt, &scenario.noise(seed))?;
    Ok((gt, pairs))
}

/// Solves with every method, the descent solvers from one shared SI-AH
/// estimate, and scores each against the truth.
fn solve_all(
    methods: &[Method],
    pairs: &PosePairSet,
    truth: &GroundTruth,
    cfg: &SolverConfig,
) -> Vec<Result<(CalibEstimate, (ErrorTriple, ErrorTriple))>> {
    let mut init: Option<std::result::Result<(Pose, Pose), String>> = None;
    methods
        .iter()
        .map(|&m| {
            let est = if m.is_iterative() {
                let start = init
                    .get_or_insert_with(|| si_ah_solve(pairs, cfg).map(|e| (e.x, e.y)).map_err(|e| e.to_string()))
                    .clone()
                    .map_err(|e| Error::InvalidArgument(format!("initial estimate failed: {e}")))?;
                solve(m, pairs, cfg, Some(start))?
            } else {
                solve(m, pairs, cfg, None)?
            };
            let errs = estimation_errors((&est.x, &est.y), (&truth.x_opt, &truth.y_opt));
            Ok((est, errs))
        })
        .collect()
}

fn aggregate(spec: &CampaignSpec, records: &[TrialRecord]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for s in &spec.scenarios {
        let name = s.name();
        for &m in &spec.methods {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.scenario == name && r.method == m).collect();
            let xs: Vec<ErrorTriple> = rows.iter().filter_map(|r| r.x()).collect();
            let ys: Vec<ErrorTriple> = rows.iter().filter_map(|r| r.y()).collect();
            out.push(Aggregate {
                scenario: name.clone(),
                method: m,
                trials: rows.len(),
                failures: rows.iter().filter(|r| r.error.is_some()).count(),
                x: Summary::of(&xs),
                y: Summary::of(&ys),
            });
        }
    }
    out
}

pub fn run_campaign(spec: &CampaignSpec) -> Result<CampaignResult> {
    spec.validate()?;
    let units: Vec<(&ScenarioSpec, usize)> =
        spec.scenarios.iter().flat_map(|s| (0..spec.trials).map(move |t| (s, t))).collect();
    let records: Vec<TrialRecord> = units
        .par_iter()
        .map(|&(s, trial)| {
            let seed = spec.seed0 + trial as u64;
            let name = s.name();
            match trial_data(s, spec.n_pairs, &spec.workspace, seed) {
                Ok((gt, pairs)) => solve_all(&spec.methods, &pairs, &gt, &spec.solver)
                    .iter()
                    .zip(&spec.methods)
                    .map(|(out, &m)| TrialRecord::new(&name, trial, seed, m, out))
                    .collect(),
                Err(e) => {
                    let msg = e.to_string();
                    spec.methods
                        .iter()
                        .map(|&m| TrialRecord::new(&name, trial, seed, m, &Err(Error::InvalidArgument(msg.clone()))))
                        .collect::<Vec<_>>()
                }
            }
        })
        .collect::<Vec<Vec<_>>>()
        .into_iter()
        .flatten()
        .collect();
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    let failed_fraction = failures as f64 / records.len() as f64;
    Ok(CampaignResult {
        aggregates: aggregate(spec, &records),
        spec: spec.clone(),
        records,
        failed_fraction,
        degraded: failed_fraction > DEGRADED_FRACTION,
    })
}

/// Mean errors of one method at one setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanRow {
    /// Pair count of a sweep, rank window of a selection study, or `"all"`.
    pub setting: String,
    pub method: Method,
    pub trials: usize,
    pub failures: usize,
    pub mean_x_err_total: Option<f64>,
    pub mean_y_err_total: Option<f64>,
    /// Mean of `Err_T(X) + Err_T(Y)`.
    pub mean_combined: Option<f64>,
}

fn mean_row(setting: String, method: Method, records: &[&TrialRecord]) -> MeanRow {
    let mean = |f: &dyn Fn(&TrialRecord) -> Option<f64>| {
        let v: Vec<f64> = records.iter().filter_map(|r| f(r)).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    MeanRow {
        setting,
        method,
        trials: records.len(),
        failures: records.iter().filter(|r| r.error.is_some()).count(),
        mean_x_err_total: mean(&|r| r.x_err_total),
        mean_y_err_total: mean(&|r| r.y_err_total),
        mean_combined: mean(&|r| r.combined()),
    }
}

/// Mean errors per pair count and method. Pose `i` of a trial is the same
/// at every count, so larger sets extend smaller ones.
pub fn data_count_sweep(counts: &[usize], base: &CampaignSpec) -> Result<Vec<MeanRow>> {
    if counts.is_empty() || counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("counts must be nonempty and strictly ascending".into()));
    }
    let mut out = Vec::new();
    for &count in counts {
        let res = run_campaign(&CampaignSpec { n_pairs: count, ..base.clone() })?;
        for &m in &base.methods {
            let recs: Vec<&TrialRecord> = res.records.iter().filter(|r| r.method == m).collect();
            out.push(mean_row(count.to_string(), m, &recs));
        }
    }
    Ok(out)
}

/// Ranks the pairs of each trial by their uncertainty metric, keeps each
/// rank window in turn and solves. The first block of rows is the
/// unselected baseline. Failed solves leave gaps in the means but every
/// row is still emitted.
pub fn selection_study(strategies: &[SelectionStrategy], base: &CampaignSpec) -> Result<Vec<MeanRow>> {
    base.validate()?;
    let scenario = base
        .scenarios
        .first()
        .ok_or_else(|| Error::InvalidArgument("need a scenario".into()))?;
    let windows: Vec<Option<SelectionStrategy>> =
        std::iter::once(None).chain(strategies.iter().copied().map(Some)).collect();
    let per_trial: Vec<Vec<TrialRecord>> = (0..base.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = base.seed0 + trial as u64;
            let data = trial_data(scenario, base.n_pairs, &base.workspace, seed)
                .and_then(|(gt, pairs)| srm_metric(&pairs).map(|m| (gt, pairs, m.per_pair_metric)));
            let mut recs = Vec::new();
            for w in &windows {
                let label = w.map_or("all".to_string(), |s| s.to_string());
                let subset = match &data {
                    Ok((gt, pairs, metric)) => match w {
                        None => Ok((gt, pairs.clone())),
                        Some(s) => select_pairs(pairs, metric, *s).map(|p| (gt, p)),
                    },
                    Err(e) => Err(Error::InvalidArgument(e.to_string())),
                };
                match subset {
                    Ok((gt, p)) => {
                        for (out, &m) in solve_all(&base.methods, &p, gt, &base.solver).iter().zip(&base.methods) {
                            recs.push(TrialRecord::new(&label, trial, seed, m, out));
                        }
                    }
                    Err(e) => {
                        let msg = e.to_string();
                        for &m in &base.methods {
                            let err = Err(Error::InvalidArgument(msg.clone()));
                            recs.push(TrialRecord::new(&label, trial, seed, m, &err));
                        }
                    }
                }
            }
            recs
        })
        .collect();
    let all: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let mut out = Vec::new();
    for w in &windows {
        let label = w.map_or("all".to_string(), |s| s.to_string());
        for &m in &base.methods {
            let recs: Vec<&TrialRecord> = all.iter().filter(|r| r.scenario == label && r.method == m).collect();
            out.push(mean_row(label.clone(), m, &recs));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderSpec {
    pub steps: usize,
    pub seeds: usize,
    pub n_pairs: usize,
    pub seed0: u64,
    /// Noise at the top step; step `k` of `steps` uses `k / steps` of it.
    pub top: NoiseConfig,
    pub workspace: Workspace,
}

impl Default for LadderSpec {
    fn default() -> Self {
        LadderSpec {
            steps: 10,
            seeds: 50,
            n_pairs: 100,
            seed0: 0,
            top: NoiseConfig::maxima(0),
            workspace: Workspace::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub step: usize,
    pub scale: f64,
    pub mean_metric: Option<f64>,
    pub min_metric: Option<f64>,
    pub max_metric: Option<f64>,
    pub failures: usize,
}

/// Mean scalar uncertainty metric along a ladder of growing noise.
pub fn metric_ladder(spec: &LadderSpec) -> Result<Vec<LadderRow>> {
    if spec.steps == 0 || spec.seeds == 0 {
        return Err(Error::InvalidArgument("steps and seeds must be positive".into()));
    }
    spec.top.validate()?;
    spec.workspace.validate()?;
    let units: Vec<(usize, usize)> = (1..=spec.steps).flat_map(|k| (0..spec.seeds).map(move |s| (k, s))).collect();
    let values: Vec<Option<f64>> = units
        .par_iter()
        .map(|&(k, s)| {
            let seed = spec.seed0 + s as u64;
            let noise = NoiseConfig { seed, ..spec.top.scaled(k as f64 / spec.steps as f64) };
            let gt = generate_truth(spec.n_pairs, &spec.workspace, seed).ok()?;
            let pairs = inject_uncertainty(&gt, &noise).ok()?;
            srm_metric(&pairs).ok().map(|r| r.scalar_metric)
        })
        .collect();
    Ok((1..=spec.steps)
        .map(|k| {
            let v: Vec<f64> = values[(k - 1) * spec.seeds..k * spec.seeds].iter().flatten().copied().collect();
            let n = v.len();
            LadderRow {
                step: k,
                scale: k as f64 / spec.steps as f64,
                mean_metric: (n > 0).then(|| v.iter().sum::<f64>() / n as f64),
                min_metric: v.iter().copied().reduce(f64::min),
                max_metric: v.iter().copied().reduce(f64::max),
                failures: spec.seeds - n,
            }
        })
        .collect())
}

/// Ranks with ties replaced by their average rank, 1-based.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation; `None` if either side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    (va > 0.0 && vb > 0.0).then(|| cov / (va * vb).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualStudySpec {
    pub scenario: ScenarioSpec,
    pub trials: usize,
    pub n_pairs: usize,
    pub seed0: u64,
    /// Solvers whose estimates join the candidate set.
    pub methods: Vec<Method>,
    /// Extra candidates: the truth perturbed by random twists with
    /// log-uniform sizes between `perturb_min` and `perturb_max`.
    pub perturbed: usize,
    pub perturb_min: f64,
    pub perturb_max: f64,
    pub workspace: Workspace,
    pub solver: SolverConfig,
}

impl Default for ResidualStudySpec {
    fn default() -> Self {
        ResidualStudySpec {
            scenario: Scenario::RAuCAu.into(),
            trials: 60,
            n_pairs: 100,
            seed0: 0,
            methods: vec![Method::SiAh, Method::Dq, Method::Kron],
            perturbed: 8,
            perturb_min: 1e-4,
            perturb_max: 1e-1,
            workspace: Workspace::default(),
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub trial: usize,
    pub form: ResidualForm,
    pub candidates: usize,
    pub fidelity: Option<f64>,
    pub error: Option<String>,
}

fn perturb(p: &Pose, rng: &mut ChaCha8Rng, size: f64) -> Pose {
    let v = Vector6::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let v = v / v.norm() * size;
    Pose::exp(&Twist::from_vector(&v)) * *p
}

/// Ranking fidelity of every residual form over seeded candidate sets.
pub fn residual_form_study(spec: &ResidualStudySpec) -> Result<Vec<FidelityRow>> {
    if spec.trials == 0 || !(spec.perturb_min > 0.0 && spec.perturb_min <= spec.perturb_max) {
        return Err(Error::InvalidArgument("need trials and 0 < perturb_min <= perturb_max".into()));
    }
    spec.solver.validate()?;
    let rows: Vec<Vec<FidelityRow>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = spec.seed0 + trial as u64;
            let fail = |e: Error| {
                ResidualForm::ALL
                    .iter()
                    .map(|&form| FidelityRow { trial, form, candidates: 0, fidelity: None, error: Some(e.to_string()) })
                    .collect::<Vec<_>>()
            };
            let (gt, pairs) = match trial_data(&spec.scenario, spec.n_pairs, &spec.workspace, seed) {
                Ok(d) => d,
                Err(e) => return fail(e),
            };
            let mut cands: Vec<(Pose, Pose)> = spec
                .methods
                .iter()
                .filter_map(|&m| solve(m, &pairs, &spec.solver, None).ok().map(|e| (e.x, e.y)))
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (lo, hi) = (spec.perturb_min.ln(), spec.perturb_max.ln());
            for _ in 0..spec.perturbed {
                let sx = rng.random_range(lo..=hi).exp();
                let sy = rng.random_range(lo..=hi).exp();
                cands.push((perturb(&gt.x_opt, &mut rng, sx), perturb(&gt.y_opt, &mut rng, sy)));
            }
            ResidualForm::ALL
                .iter()
                .map(|&form| {
                    let f = ranking_fidelity(&cands, (&gt.x_opt, &gt.y_opt), &pairs, form);
                    FidelityRow {
                        trial,
                        form,
                        candidates: cands.len(),
                        fidelity: f.as_ref().ok().copied(),
                        error: f.err().map(|e| e.to_string()),
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Mean fidelity per form over the trials that produced one.
pub fn mean_fidelity(rows: &[FidelityRow]) -> Vec<(ResidualForm, Option<f64>)> {
    ResidualForm::ALL
        .iter()
        .map(|&form| {
            let v: Vec<f64> = rows.iter().filter(|r| r.form == form).filter_map(|r| r.fidelity).collect();
            (form, (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64))
        })
        .collect()
}
