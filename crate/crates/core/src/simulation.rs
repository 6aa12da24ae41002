//! The closed recommend → rate → retrain loop.
//!
//! Each run starts from the observed ratings. Every iteration retrains the
//! factor model on everything rated so far, asks the policy for a list per
//! user, collects feedback from the ground truth and grows the seen-group
//! sets. Runs are independent and execute in parallel; iterations within a
//! run are sequential.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;

use crate::completion::GroundTruth;
use crate::dataset::{seen_groups, GroupMapping, GroupSet, Rating, RatingDataset};
use crate::error::{Error, Result};
use crate::factorization::{init_model, train_observations, FactorModel, Hyperparams};
use crate::ids::{GroupId, ItemId, UserId};
use crate::metrics::{blind_spot, error_e, RunSeries, TraceTable, DEFAULT_DELTAS};
use crate::policies::{score_candidates, PolicyConfig};
use crate::seed::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeedbackKind {
    /// Every recommended item is rated.
    Perfect,
    /// The item at 1-based rank `k` is rated with probability `theta^(k-1)`.
    RankDependent { theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackModel {
    pub kind: FeedbackKind,
    pub seed: u64,
}

impl Default for FeedbackModel {
    fn default() -> Self {
        FeedbackModel {
            kind: FeedbackKind::Perfect,
            seed: 0,
        }
    }
}

impl FeedbackModel {
    pub fn validate(&self) -> Result<()> {
        if let FeedbackKind::RankDependent { theta } = self.kind {
            if !(theta > 0.0 && theta <= 1.0) {
                return Err(Error::Argument(format!("theta {theta} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retrain {
    FromScratch,
    WarmStart,
}

/// What enters the seen set when a list is shown but only partly rated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeenSemantics {
    /// Every displayed item counts as seen.
    Displayed,
    /// Only rated items count.
    Rated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub iterations: usize,
    pub runs: usize,
    pub policy: PolicyConfig,
    pub feedback: FeedbackModel,
    pub relevance_threshold: u8,
    pub retrain: Retrain,
    pub seen_semantics: SeenSemantics,
    pub hyperparams: Hyperparams,
    pub master_seed: u64,
    /// Confidence levels for the bound columns.
    pub deltas: Vec<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            iterations: 30,
            runs: 10,
            policy: PolicyConfig::default(),
            feedback: FeedbackModel::default(),
            relevance_threshold: 4,
            retrain: Retrain::FromScratch,
            seen_semantics: SeenSemantics::Displayed,
            hyperparams: Hyperparams::default(),
            master_seed: 0,
            deltas: DEFAULT_DELTAS.to_vec(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.runs == 0 {
            return Err(Error::Argument("iterations and runs must be at least 1".into()));
        }
        if !(1..=5).contains(&self.relevance_threshold) {
            return Err(Error::Argument(format!(
                "relevance threshold {} outside 1..=5",
                self.relevance_threshold
            )));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
            return Err(Error::Argument(format!("delta {d} outside (0, 1]")));
        }
        self.policy.validate()?;
        self.feedback.validate()?;
        self.hyperparams.validate()
    }

    /// Seed of run `run`.
    pub fn run_seed(&self, run: usize) -> u64 {
        seed::derive(self.master_seed, run as u64)
    }
}

/// Groups in which the user's ground truth has at least one rating of
/// `threshold` or more.
pub fn relevant_groups(truth: &GroundTruth, mapping: &GroupMapping, user: UserId, threshold: u8) -> Result<GroupSet> {
    if !(1..=5).contains(&threshold) {
        return Err(Error::Argument(format!("relevance threshold {threshold} outside 1..=5")));
    }
    if user.index() >= truth.num_users() {
        return Err(Error::Argument(format!("user {user} outside ground truth")));
    }
    let row = truth.row(user);
    let mut rel = GroupSet::new();
    for (i, &r) in row.iter().enumerate() {
        if r >= threshold {
            rel.extend(mapping.try_groups_of(ItemId::new(i))?.iter().copied());
        }
    }
    Ok(rel)
}

pub type Feedback = Vec<(ItemId, u8)>;

pub fn perfect_feedback(recs: &[ItemId], truth: &GroundTruth, user: UserId) -> Feedback {
    recs.iter().map(|&i| (i, truth.rating(user, i))).collect()
}

pub fn rank_dependent_feedback<R: Rng + ?Sized>(
    recs: &[ItemId],
    truth: &GroundTruth,
    user: UserId,
    theta: f64,
    rng: &mut R,
) -> Result<Feedback> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Argument(format!("theta {theta} outside (0, 1]")));
    }
    let mut p = 1.0;
    let mut out = Vec::new();
    for &item in recs {
        if rng.random::<f64>() < p {
            out.push((item, truth.rating(user, item)));
        }
        p *= theta;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserState {
    pub rated: BTreeSet<ItemId>,
    /// `S_t`
    pub seen: GroupSet,
    /// `Rel`, fixed at the start of the run.
    pub relevant: GroupSet,
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopState {
    pub users: Vec<UserState>,
    /// Training set: the observed ratings followed by every collected one.
    pub training: Vec<Rating>,
    pub iteration: usize,
}

impl LoopState {
    /// State before the first iteration: observed ratings and their groups.
    pub fn initial(
        dataset: &RatingDataset,
        mapping: &GroupMapping,
        truth: &GroundTruth,
        threshold: u8,
    ) -> Result<Self> {
        check_shapes(dataset, mapping, truth)?;
        let users = dataset
            .items_by_user()
            .into_iter()
            .enumerate()
            .map(|(u, rated)| {
                let seen = seen_groups(mapping, rated.iter().copied())?;
                let relevant = relevant_groups(truth, mapping, UserId::new(u), threshold)?;
                Ok(UserState {
                    rated,
                    seen,
                    relevant,
                    exhausted: false,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LoopState {
            users,
            training: dataset.observations().to_vec(),
            iteration: 0,
        })
    }

    fn snapshot(&self, series: &mut RunSeries) {
        for (u, s) in self.users.iter().enumerate() {
            series.seen[u].push(s.seen.len());
            series.blind[u].push(blind_spot(&s.seen, &s.relevant));
            series.error[u].push(error_e(&s.seen, &s.relevant));
        }
    }
}

fn check_shapes(dataset: &RatingDataset, mapping: &GroupMapping, truth: &GroundTruth) -> Result<()> {
    if truth.num_users() != dataset.num_users() || truth.num_items() != dataset.num_items() {
        return Err(Error::Data(format!(
            "ground truth is {}x{} but the dataset is {}x{}",
            truth.num_users(),
            truth.num_items(),
            dataset.num_users(),
            dataset.num_items()
        )));
    }
    if mapping.num_items() != dataset.num_items() {
        return Err(Error::Data(format!(
            "group mapping covers {} items but the dataset has {}",
            mapping.num_items(),
            dataset.num_items()
        )));
    }
    Ok(())
}

/// Everything that is fixed during one iteration.
pub struct IterationContext<'a> {
    pub model: &'a FactorModel,
    pub policy: &'a PolicyConfig,
    pub feedback: &'a FeedbackModel,
    pub truth: &'a GroundTruth,
    pub mapping: &'a GroupMapping,
    pub seen_semantics: SeenSemantics,
    /// Parent seed of the per-user random streams.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserStep {
    pub recs: Vec<ItemId>,
    pub rated: Feedback,
    pub new_groups: Vec<GroupId>,
}

/// One user's turn. `None` means the user has no unrated item left.
pub fn step_user(state: &mut UserState, user: UserId, ctx: &IterationContext<'_>) -> Result<Option<UserStep>> {
    if state.exhausted {
        return Ok(None);
    }
    let candidates: Vec<ItemId> = (0..ctx.truth.num_items())
        .map(ItemId::new)
        .filter(|i| !state.rated.contains(i))
        .collect();
    if candidates.is_empty() {
        state.exhausted = true;
        return Ok(None);
    }
    let n = ctx.policy.rec_len.min(candidates.len());
    let user_seed = seed::derive(ctx.seed, user.0 as u64);
    let mut policy_rng = seed::rng(seed::derive_path(user_seed, &[stream::POLICY, ctx.policy.seed]));
    let ranking = score_candidates(ctx.model, user, candidates)?;
    let recs = ctx.policy.select(&ranking, n, &mut policy_rng)?;

    let rated = match ctx.feedback.kind {
        FeedbackKind::Perfect => perfect_feedback(&recs, ctx.truth, user),
        FeedbackKind::RankDependent { theta } => {
            let mut rng = seed::rng(seed::derive_path(user_seed, &[stream::FEEDBACK, ctx.feedback.seed]));
            rank_dependent_feedback(&recs, ctx.truth, user, theta, &mut rng)?
        }
    };

    let shown: Vec<ItemId> = match ctx.seen_semantics {
        SeenSemantics::Displayed => recs.clone(),
        SeenSemantics::Rated => rated.iter().map(|(i, _)| *i).collect(),
    };
    let mut new_groups = Vec::new();
    for item in shown {
        for &g in ctx.mapping.groups_of(item) {
            if state.seen.insert(g) {
                new_groups.push(g);
            }
        }
    }
    state.rated.extend(rated.iter().map(|(i, _)| *i));
    Ok(Some(UserStep {
        recs,
        rated,
        new_groups,
    }))
}

/// What an observer sees for every (user, iteration) pair.
pub struct StepEvent<'a> {
    pub run: usize,
    pub iteration: usize,
    pub user: UserId,
    pub seen_before: &'a GroupSet,
    pub seen_after: &'a GroupSet,
    /// `None` when the user is exhausted.
    pub step: Option<&'a UserStep>,
    pub rated_before: &'a BTreeSet<ItemId>,
}

/// Hook for checking per-user invariants while a simulation runs.
pub trait Observer: Sync {
    fn on_step(&self, _event: &StepEvent<'_>) {}
}

pub struct NoObserver;

impl Observer for NoObserver {}

/// Apply one iteration to every user and append the collected ratings to the
/// training set in user order.
pub fn run_iteration(
    state: &mut LoopState,
    ctx: &IterationContext<'_>,
    run: usize,
    observer: &dyn Observer,
) -> Result<Vec<Option<UserStep>>> {
    let iteration = state.iteration + 1;
    let steps = state
        .users
        .par_iter_mut()
        .enumerate()
        .map(|(u, user_state)| {
            let user = UserId::new(u);
            let seen_before = user_state.seen.clone();
            let rated_before = user_state.rated.clone();
            let step = step_user(user_state, user, ctx)?;
            observer.on_step(&StepEvent {
                run,
                iteration,
                user,
                seen_before: &seen_before,
                seen_after: &user_state.seen,
                step: step.as_ref(),
                rated_before: &rated_before,
            });
            Ok(step)
        })
        .collect::<Result<Vec<_>>>()?;
    for (u, step) in steps.iter().enumerate() {
        if let Some(step) = step {
            state.training.extend(step.rated.iter().map(|&(item, r)| Rating {
                user: UserId::new(u),
                item,
                value: r as f64,
                timestamp: None,
            }));
        }
    }
    state.iteration = iteration;
    Ok(steps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exhaustion {
    pub run: usize,
    pub iteration: usize,
    pub user: UserId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub series: RunSeries,
    pub exhausted: Vec<Exhaustion>,
}

/// Execute run `run` of `config`.
pub fn simulate_run(
    config: &SimulationConfig,
    run: usize,
    dataset: &RatingDataset,
    mapping: &GroupMapping,
    truth: &GroundTruth,
    observer: &dyn Observer,
) -> Result<RunResult> {
    config.validate()?;
    let run_seed = config.run_seed(run);
    let mut state = LoopState::initial(dataset, mapping, truth, config.relevance_threshold)?;
    let n_users = state.users.len();
    let mut series = RunSeries {
        seen: vec![Vec::with_capacity(config.iterations + 1); n_users],
        blind: vec![Vec::with_capacity(config.iterations + 1); n_users],
        error: vec![Vec::with_capacity(config.iterations + 1); n_users],
    };
    state.snapshot(&mut series);
    let mut exhausted = Vec::new();
    let mut model: Option<FactorModel> = None;

    for t in 1..=config.iterations {
        let iteration_seed = seed::derive(run_seed, t as u64);
        let hp = config
            .hyperparams
            .with_seed(seed::derive(iteration_seed, stream::TRAINING));
        let start = match (config.retrain, model.take()) {
            (Retrain::WarmStart, Some(m)) => m,
            _ => init_model(dataset.num_users(), dataset.num_items(), &hp)?,
        };
        let (trained, losses) = train_observations(start, &state.training, &hp)?;
        log::debug!(
            "run {run} iteration {t}: trained on {} ratings, final mse {:.4}",
            state.training.len(),
            losses.last().copied().unwrap_or(f64::NAN)
        );
        let ctx = IterationContext {
            model: &trained,
            policy: &config.policy,
            feedback: &config.feedback,
            truth,
            mapping,
            seen_semantics: config.seen_semantics,
            seed: seed::derive(iteration_seed, stream::SAMPLING),
        };
        let was_exhausted: Vec<bool> = state.users.iter().map(|u| u.exhausted).collect();
        run_iteration(&mut state, &ctx, run, observer)?;
        for (u, s) in state.users.iter().enumerate() {
            if s.exhausted && !was_exhausted[u] {
                exhausted.push(Exhaustion {
                    run,
                    iteration: t,
                    user: UserId::new(u),
                });
            }
        }
        state.snapshot(&mut series);
        model = Some(trained);
    }
    Ok(RunResult {
        run,
        seed: run_seed,
        series,
        exhausted,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub config: SimulationConfig,
    pub runs: Vec<RunResult>,
    pub table: TraceTable,
}

/// All runs of `config`, in run order. The result of each run is kept even
/// when a later one fails, so callers can flush a partial trace.
pub fn simulate_runs(
    config: &SimulationConfig,
    dataset: &RatingDataset,
    mapping: &GroupMapping,
    truth: &GroundTruth,
    observer: &dyn Observer,
) -> Vec<Result<RunResult>> {
    (0..config.runs)
        .into_par_iter()
        .map(|run| simulate_run(config, run, dataset, mapping, truth, observer))
        .collect()
}

/// Assemble a trace from the leading successful runs. Returns the trace and
/// the first error, if any run failed.
pub fn assemble_trace(config: &SimulationConfig, results: Vec<Result<RunResult>>) -> (SimulationTrace, Option<Error>) {
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    let mut failure = None;
    for result in results {
        let rows_of = result.and_then(|r| {
            let rs = r.series.trace_rows(r.run, config.policy.rec_len, &config.deltas)?;
            Ok((r, rs))
        });
        match rows_of {
            Ok((r, rs)) => {
                rows.extend(rs);
                runs.push(r);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let truncated = failure.as_ref().map(|e| format!("run {} failed: {e}", runs.len()));
    let trace = SimulationTrace {
        config: config.clone(),
        runs,
        table: TraceTable {
            deltas: config.deltas.clone(),
            rows,
            truncated,
        },
    };
    (trace, failure)
}

pub fn run_simulation(
    config: &SimulationConfig,
    dataset: &RatingDataset,
    mapping: &GroupMapping,
    truth: &GroundTruth,
) -> Result<SimulationTrace> {
    run_simulation_observed(config, dataset, mapping, truth, &NoObserver)
}

pub fn run_simulation_observed(
    config: &SimulationConfig,
    dataset: &RatingDataset,
    mapping: &GroupMapping,
    truth: &GroundTruth,
    observer: &dyn Observer,
) -> Result<SimulationTrace> {
    config.validate()?;
    let results = simulate_runs(config, dataset, mapping, truth, observer);
    match assemble_trace(config, results) {
        (trace, None) => Ok(trace),
        (_, Some(e)) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::completion::DenseMatrix;

    fn truth(rows: Vec<Vec<u8>>) -> GroundTruth {
        GroundTruth::new(DenseMatrix::from_rows(rows).unwrap(), Hyperparams::default(), "test").unwrap()
    }

    fn groups(v: &[u32]) -> Vec<GroupId> {
        v.iter().map(|&g| GroupId(g)).collect()
    }

    fn set(v: &[u32]) -> GroupSet {
        v.iter().map(|&g| GroupId(g)).collect()
    }

    /// items 0,1 -> group 0; item 2 -> group 1; items 3,4 -> group 2
    fn toy_mapping() -> GroupMapping {
        GroupMapping::new(
            vec!["g0".into(), "g1".into(), "g2".into()],
            vec![groups(&[0]), groups(&[0]), groups(&[1]), groups(&[2]), groups(&[2])],
        )
        .unwrap()
    }

    #[test]
    fn relevance_examples() {
        let m = toy_mapping();
        let t = truth(vec![vec![1, 2, 3, 5, 1], vec![1; 5]]);
        assert_eq!(relevant_groups(&t, &m, UserId(0), 1).unwrap(), set(&[0, 1, 2]));
        assert_eq!(relevant_groups(&t, &m, UserId(1), 4).unwrap(), set(&[]));
        assert_eq!(relevant_groups(&t, &m, UserId(0), 4).unwrap(), set(&[2]));
        assert!(relevant_groups(&t, &m, UserId(0), 6).is_err());
    }

    #[test]
    fn feedback_models() {
        let t = truth(vec![vec![1, 2, 3, 4, 5]]);
        let recs: Vec<ItemId> = (0..5).rev().map(ItemId::new).collect();
        assert!(perfect_feedback(&[], &t, UserId(0)).is_empty());
        let all = perfect_feedback(&recs, &t, UserId(0));
        assert_eq!(all, vec![(ItemId(4), 5), (ItemId(3), 4), (ItemId(2), 3), (ItemId(1), 2), (ItemId(0), 1)]);
        let mut rng = seed::rng(3);
        assert_eq!(rank_dependent_feedback(&recs, &t, UserId(0), 1.0, &mut rng).unwrap(), all);
        for s in 0..50 {
            let fb = rank_dependent_feedback(&recs, &t, UserId(0), 0.1, &mut seed::rng(s)).unwrap();
            assert_eq!(fb[0], (ItemId(4), 5));
            assert!(fb.iter().all(|p| all.contains(p)));
        }
        assert!(rank_dependent_feedback(&recs, &t, UserId(0), 0.0, &mut rng).is_err());
    }

    fn model_preferring(items: &[f64]) -> FactorModel {
        FactorModel::from_factors(1, items.len(), 1, vec![1.0], items.to_vec()).unwrap()
    }

    fn one_user_state(rated: &[u32], mapping: &GroupMapping) -> UserState {
        let rated: BTreeSet<ItemId> = rated.iter().map(|&i| ItemId(i)).collect();
        UserState {
            seen: seen_groups(mapping, rated.iter().copied()).unwrap(),
            rated,
            relevant: set(&[0, 1, 2]),
            exhausted: false,
        }
    }

    #[test]
    fn step_from_seen_groups_adds_nothing() {
        let m = toy_mapping();
        let t = truth(vec![vec![3; 5]]);
        let model = model_preferring(&[0.0, 9.0, 0.0, 0.0, 0.0]);
        let policy = PolicyConfig {
            rec_len: 1,
            ..PolicyConfig::default()
        };
        let feedback = FeedbackModel::default();
        let ctx = IterationContext {
            model: &model,
            policy: &policy,
            feedback: &feedback,
            truth: &t,
            mapping: &m,
            seen_semantics: SeenSemantics::Displayed,
            seed: 1,
        };
        let mut s = one_user_state(&[0], &m);
        let step = step_user(&mut s, UserId(0), &ctx).unwrap().unwrap();
        assert_eq!(step.recs, vec![ItemId(1)]);
        assert!(step.new_groups.is_empty());
        assert_eq!(s.rated.len(), 2);
    }

    #[test]
    fn step_into_new_group_adds_one() {
        let m = toy_mapping();
        let t = truth(vec![vec![3; 5]]);
        let model = model_preferring(&[0.0, 0.0, 0.0, 7.0, 1.0]);
        let policy = PolicyConfig {
            rec_len: 2,
            ..PolicyConfig::default()
        };
        let feedback = FeedbackModel::default();
        let ctx = IterationContext {
            model: &model,
            policy: &policy,
            feedback: &feedback,
            truth: &t,
            mapping: &m,
            seen_semantics: SeenSemantics::Displayed,
            seed: 1,
        };
        let mut s = one_user_state(&[0, 2], &m);
        let before = s.seen.len();
        let step = step_user(&mut s, UserId(0), &ctx).unwrap().unwrap();
        assert_eq!(step.recs, vec![ItemId(3), ItemId(4)]);
        assert_eq!(step.new_groups, groups(&[2]));
        assert_eq!(s.seen.len() - before, 1);
    }

    #[test]
    fn short_pool_then_exhaustion() {
        let m = toy_mapping();
        let t = truth(vec![vec![3; 5]]);
        let model = model_preferring(&[1.0; 5]);
        let policy = PolicyConfig::default();
        let feedback = FeedbackModel::default();
        let ctx = IterationContext {
            model: &model,
            policy: &policy,
            feedback: &feedback,
            truth: &t,
            mapping: &m,
            seen_semantics: SeenSemantics::Displayed,
            seed: 1,
        };
        let mut s = one_user_state(&[0, 1], &m);
        let step = step_user(&mut s, UserId(0), &ctx).unwrap().unwrap();
        assert_eq!(step.recs.len(), 3);
        assert!(step_user(&mut s, UserId(0), &ctx).unwrap().is_none());
        assert!(s.exhausted);
    }

    #[test]
    fn rated_semantics_ignores_unrated_recommendations() {
        let m = toy_mapping();
        let t = truth(vec![vec![3; 5]]);
        let model = model_preferring(&[0.0, 0.0, 5.0, 4.0, 0.0]);
        let policy = PolicyConfig {
            rec_len: 2,
            ..PolicyConfig::default()
        };
        let feedback = FeedbackModel {
            kind: FeedbackKind::RankDependent { theta: 1e-12 },
            seed: 0,
        };
        let mut ctx = IterationContext {
            model: &model,
            policy: &policy,
            feedback: &feedback,
            truth: &t,
            mapping: &m,
            seen_semantics: SeenSemantics::Rated,
            seed: 4,
        };
        let mut s = one_user_state(&[0], &m);
        let step = step_user(&mut s, UserId(0), &ctx).unwrap().unwrap();
        assert_eq!(step.rated, vec![(ItemId(2), 3)]);
        assert_eq!(s.seen, set(&[0, 1]));

        ctx.seen_semantics = SeenSemantics::Displayed;
        let mut s = one_user_state(&[0], &m);
        step_user(&mut s, UserId(0), &ctx).unwrap().unwrap();
        assert_eq!(s.seen, set(&[0, 1, 2]));
        // the unrated item stays a candidate
        assert!(!s.rated.contains(&ItemId(3)));
    }

    #[test]
    fn config_validation() {
        let mut c = SimulationConfig::default();
        assert!(c.validate().is_ok());
        c.relevance_threshold = 0;
        assert!(c.validate().is_err());
        let c = SimulationConfig {
            iterations: 0,
            ..SimulationConfig::default()
        };
        assert!(c.validate().is_err());
        let c = SimulationConfig {
            feedback: FeedbackModel {
                kind: FeedbackKind::RankDependent { theta: 1.5 },
                seed: 0,
            },
            ..SimulationConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
