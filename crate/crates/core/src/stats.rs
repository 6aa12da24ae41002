//! Does the model rank seen-group items above unseen-group items?
//!
//! For a sample of users who have not rated every group, the model's
//! predictions for their unrated items are split by whether the item shares a
//! group with the user's seen set. Each user contributes one mean per side;
//! Welch's unequal-variance t-test compares the two samples of means.

use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataset::{seen_groups, GroupMapping, GroupSet, RatingDataset};
use crate::error::{Error, Result};
use crate::factorization::FactorModel;
use crate::ids::{ItemId, UserId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    pub t_stat: f64,
    pub df: f64,
    /// Two-tailed.
    pub p_value: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Two-sample t-test without the equal-variance assumption.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Argument(format!(
            "each sample needs at least 2 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::Argument("samples contain non-finite values".into()));
    }
    let (mean_a, var_a) = mean_var(a);
    let (mean_b, var_b) = mean_var(b);
    let (sa, sb) = (var_a / a.len() as f64, var_b / b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let t_stat = (mean_a - mean_b) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Argument(e.to_string()))?;
    let p_value = (2.0 * dist.sf(t_stat.abs())).clamp(0.0, 1.0);
    Ok(WelchResult { t_stat, df, p_value })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingTestReport {
    pub mean_seen: f64,
    pub mean_unseen: f64,
    pub var_seen: f64,
    pub var_unseen: f64,
    pub t_stat: f64,
    pub df: f64,
    pub p_value: f64,
    pub sample_sizes: (usize, usize),
    pub repetitions: usize,
    /// Sampled users skipped because one side of their split was empty.
    pub resampled: usize,
    /// Per-user mean predicted rating of seen-group items.
    pub seen_sample: Vec<f64>,
    /// Per-user mean predicted rating of unseen-group items.
    pub unseen_sample: Vec<f64>,
}

impl RankingTestReport {
    fn from_samples(seen: Vec<f64>, unseen: Vec<f64>, repetitions: usize, resampled: usize) -> Result<Self> {
        let w = welch_t_test(&seen, &unseen)?;
        let (mean_seen, var_seen) = mean_var(&seen);
        let (mean_unseen, var_unseen) = mean_var(&unseen);
        Ok(RankingTestReport {
            mean_seen,
            mean_unseen,
            var_seen,
            var_unseen,
            t_stat: w.t_stat,
            df: w.df,
            p_value: w.p_value,
            sample_sizes: (seen.len(), unseen.len()),
            repetitions,
            resampled,
            seen_sample: seen,
            unseen_sample: unseen,
        })
    }

    /// Welch test on the union of the per-user means of several repetitions.
    pub fn pooled(reports: &[RankingTestReport]) -> Result<Self> {
        let seen = reports.iter().flat_map(|r| r.seen_sample.iter().copied()).collect();
        let unseen = reports.iter().flat_map(|r| r.unseen_sample.iter().copied()).collect();
        let resampled = reports.iter().map(|r| r.resampled).sum();
        Self::from_samples(seen, unseen, reports.len(), resampled)
    }

    /// Seen-group items score higher on average, at significance `alpha`.
    pub fn supports_ranking_assumption(&self, alpha: f64) -> bool {
        self.mean_seen > self.mean_unseen && self.p_value < alpha
    }
}

/// Mean prediction over unrated items sharing a group with `seen`, and over
/// unrated items sharing none. `None` for an empty side.
pub fn split_means(
    model: &FactorModel,
    mapping: &GroupMapping,
    user: UserId,
    rated: &std::collections::BTreeSet<ItemId>,
    seen: &GroupSet,
) -> (Option<f64>, Option<f64>) {
    let (mut s_sum, mut s_n, mut u_sum, mut u_n) = (0.0, 0usize, 0.0, 0usize);
    for i in (0..model.num_items()).map(ItemId::new) {
        if rated.contains(&i) {
            continue;
        }
        let score = model.score(user, i);
        if mapping.groups_of(i).iter().any(|g| seen.contains(g)) {
            s_sum += score;
            s_n += 1;
        } else {
            u_sum += score;
            u_n += 1;
        }
    }
    let mean = |sum: f64, n: usize| (n > 0).then(|| sum / n as f64);
    (mean(s_sum, s_n), mean(u_sum, u_n))
}

/// One repetition of the seen-versus-unseen comparison over `sample_users`
/// users drawn without replacement from those who have not seen every group.
pub fn ranking_assumption_test<R: Rng + ?Sized>(
    model: &FactorModel,
    dataset: &RatingDataset,
    mapping: &GroupMapping,
    sample_users: usize,
    rng: &mut R,
) -> Result<RankingTestReport> {
    if model.num_users() != dataset.num_users() || model.num_items() != mapping.num_items() {
        return Err(Error::Data("model, dataset and mapping shapes differ".into()));
    }
    if sample_users < 2 {
        return Err(Error::Argument("sample_users must be at least 2".into()));
    }
    let rated = dataset.items_by_user();
    let mut eligible: Vec<(UserId, GroupSet)> = Vec::new();
    for (u, items) in rated.iter().enumerate() {
        let seen = seen_groups(mapping, items.iter().copied())?;
        if seen.len() < mapping.num_groups() {
            eligible.push((UserId::new(u), seen));
        }
    }
    if eligible.len() < sample_users {
        return Err(Error::Eligibility(format!(
            "{} users have unseen groups, {sample_users} requested",
            eligible.len()
        )));
    }
    eligible.shuffle(rng);

    let mut seen_sample = Vec::with_capacity(sample_users);
    let mut unseen_sample = Vec::with_capacity(sample_users);
    let mut resampled = 0;
    for (user, seen) in &eligible {
        if seen_sample.len() == sample_users {
            break;
        }
        match split_means(model, mapping, *user, &rated[user.index()], seen) {
            (Some(s), Some(u)) => {
                seen_sample.push(s);
                unseen_sample.push(u);
            }
            _ => resampled += 1,
        }
    }
    if seen_sample.len() < sample_users {
        return Err(Error::Eligibility(format!(
            "only {} of {} eligible users have unrated items on both sides",
            seen_sample.len(),
            eligible.len()
        )));
    }
    if resampled > 0 {
        log::info!("resampled {resampled} users with an empty seen or unseen item set");
    }
    RankingTestReport::from_samples(seen_sample, unseen_sample, 1, resampled)
}
