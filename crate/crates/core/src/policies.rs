//! Recommendation list selection.
//!
//! Candidates are ranked by model score, descending, with ties broken by the
//! lower item index. [`top_n_exploit`] takes a prefix of that ranking;
//! [`epsilon_greedy`] replaces a fixed share of the slots with uniformly drawn
//! candidates.

use std::cmp::Ordering;

use rand::seq::index;
use rand::Rng;

use crate::dataset::{GroupMapping, GroupSet};
use crate::error::{Error, Result};
use crate::factorization::FactorModel;
use crate::ids::{ItemId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Exploit,
    EpsilonGreedy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Length of every recommendation list.
    pub rec_len: usize,
    /// Share of random slots; ignored by [`PolicyKind::Exploit`].
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            kind: PolicyKind::Exploit,
            rec_len: 10,
            epsilon: 0.0,
            seed: 0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rec_len == 0 {
            return Err(Error::Argument("rec_len must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Argument(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        Ok(())
    }

    /// Pick up to `n` items from `ranking` according to the policy.
    pub fn select<R: Rng + ?Sized>(&self, ranking: &ScoredRanking, n: usize, rng: &mut R) -> Result<Vec<ItemId>> {
        match self.kind {
            PolicyKind::Exploit => top_n_exploit(ranking, n),
            PolicyKind::EpsilonGreedy => epsilon_greedy(ranking, n, self.epsilon, rng),
        }
    }
}

/// Candidates ordered by `(score desc, item asc)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRanking {
    entries: Vec<(ItemId, f64)>,
}

fn rank_order(a: &(ItemId, f64), b: &(ItemId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

impl ScoredRanking {
    /// Sort arbitrary `(item, score)` pairs into ranking order.
    pub fn from_scores(mut entries: Vec<(ItemId, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Argument("no candidates to rank".into()));
        }
        if let Some((item, s)) = entries.iter().find(|(_, s)| s.is_nan()) {
            return Err(Error::Data(format!("score {s} for item {item}")));
        }
        entries.sort_unstable_by(rank_order);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Argument("duplicate candidate".into()));
        }
        Ok(ScoredRanking { entries })
    }

    pub fn entries(&self) -> &[(ItemId, f64)] {
        &self.entries
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.entries.iter().map(|(i, _)| *i)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn score_candidates<I>(model: &FactorModel, user: UserId, candidates: I) -> Result<ScoredRanking>
where
    I: IntoIterator<Item = ItemId>,
{
    if user.index() >= model.num_users() {
        return Err(Error::Argument(format!("user {user} outside model")));
    }
    let entries = candidates
        .into_iter()
        .map(|item| {
            if item.index() >= model.num_items() {
                return Err(Error::Argument(format!("item {item} outside model")));
            }
            Ok((item, model.score(user, item)))
        })
        .collect::<Result<Vec<_>>>()?;
    ScoredRanking::from_scores(entries)
}

pub fn top_n_exploit(ranking: &ScoredRanking, n: usize) -> Result<Vec<ItemId>> {
    if n > ranking.len() {
        return Err(Error::Capacity {
            requested: n,
            available: ranking.len(),
        });
    }
    Ok(ranking.items().take(n).collect())
}

/// Number of random slots in a list of `n` for exploration share `epsilon`.
pub fn random_slots(n: usize, epsilon: f64) -> usize {
    ((epsilon * n as f64).round() as usize).min(n)
}

/// `round(ε n)` candidates drawn uniformly without replacement, plus the
/// best-ranked remaining candidates for the other slots. The exploit items
/// come first, in rank order, followed by the random ones in draw order.
pub fn epsilon_greedy<R: Rng + ?Sized>(
    ranking: &ScoredRanking,
    n: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<Vec<ItemId>> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Argument(format!("epsilon {epsilon} outside [0, 1]")));
    }
    if n > ranking.len() {
        return Err(Error::Capacity {
            requested: n,
            available: ranking.len(),
        });
    }
    let k = random_slots(n, epsilon);
    let mut picked = vec![false; ranking.len()];
    let random: Vec<ItemId> = index::sample(rng, ranking.len(), k)
        .into_iter()
        .map(|pos| {
            picked[pos] = true;
            ranking.entries[pos].0
        })
        .collect();
    let mut out: Vec<ItemId> = ranking
        .entries
        .iter()
        .zip(&picked)
        .filter(|(_, &p)| !p)
        .map(|((item, _), _)| *item)
        .take(n - k)
        .collect();
    out.extend(random);
    Ok(out)
}

/// Whether every group of `item` is already in `seen`.
pub fn within_seen(mapping: &GroupMapping, item: ItemId, seen: &GroupSet) -> bool {
    mapping.groups_of(item).iter().all(|g| seen.contains(g))
}

/// Groups of `items` that are not in `seen`.
pub fn new_groups(mapping: &GroupMapping, items: &[ItemId], seen: &GroupSet) -> GroupSet {
    items
        .iter()
        .flat_map(|&i| mapping.groups_of(i).iter().copied())
        .filter(|g| !seen.contains(g))
        .collect()
}

/// A synthetic ranking in which every candidate whose groups are all seen
/// outscores every candidate touching an unseen group. Scores within each
/// tier are uniform draws, so the tiers occupy `[1, 2)` and `[0, 1)`.
pub fn oracle_ranking<R: Rng + ?Sized>(
    mapping: &GroupMapping,
    seen: &GroupSet,
    candidates: &[ItemId],
    rng: &mut R,
) -> Result<ScoredRanking> {
    let entries = candidates
        .iter()
        .map(|&item| {
            let base = if within_seen(mapping, item, seen) { 1.0 } else { 0.0 };
            (item, base + rng.random::<f64>())
        })
        .collect();
    ScoredRanking::from_scores(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::GroupId;
    use crate::seed;

    fn ranking(scores: &[f64]) -> ScoredRanking {
        ScoredRanking::from_scores(
            scores
                .iter()
                .enumerate()
                .map(|(i, &s)| (ItemId::new(i), s))
                .collect(),
        )
        .unwrap()
    }

    fn ids(v: &[u32]) -> Vec<ItemId> {
        v.iter().map(|&i| ItemId(i)).collect()
    }

    #[test]
    fn single_candidate() {
        let m = FactorModel::from_factors(1, 3, 1, vec![1.0], vec![1.0, 2.0, 3.0]).unwrap();
        let r = score_candidates(&m, UserId(0), [ItemId(1)]).unwrap();
        assert_eq!(r.entries(), &[(ItemId(1), 2.0)]);
        assert!(score_candidates(&m, UserId(0), []).is_err());
    }

    #[test]
    fn ties_prefer_lower_item() {
        let r = ranking(&[1.0, 3.0, 3.0, 0.5]);
        assert_eq!(r.items().collect::<Vec<_>>(), ids(&[1, 2, 0, 3]));
    }

    #[test]
    fn hand_computed_order() {
        // user (1, -1); items: (2,0)=2, (0,1)=-1, (1,1)=0, (3,1)=2, (0.5,-2)=2.5
        let m = FactorModel::from_factors(
            1,
            5,
            2,
            vec![1.0, -1.0],
            vec![2.0, 0.0, 0.0, 1.0, 1.0, 1.0, 3.0, 1.0, 0.5, -2.0],
        )
        .unwrap();
        let r = score_candidates(&m, UserId(0), (0..5).map(ItemId::new)).unwrap();
        assert_eq!(r.items().collect::<Vec<_>>(), ids(&[4, 0, 3, 2, 1]));
        assert_eq!(r.entries()[0].1, 2.5);
    }

    #[test]
    fn exploit_prefixes() {
        let r = ranking(&[0.2, 0.9, 0.5]);
        assert_eq!(top_n_exploit(&r, 3).unwrap(), ids(&[1, 2, 0]));
        assert_eq!(top_n_exploit(&r, 1).unwrap(), ids(&[1]));
        assert!(matches!(
            top_n_exploit(&r, 4),
            Err(Error::Capacity { requested: 4, available: 3 })
        ));
    }

    #[test]
    fn epsilon_extremes() {
        let r = ranking(&[0.1, 0.7, 0.3, 0.9, 0.5, 0.2]);
        let mut rng = seed::rng(1);
        assert_eq!(epsilon_greedy(&r, 3, 0.0, &mut rng).unwrap(), top_n_exploit(&r, 3).unwrap());
        let all = epsilon_greedy(&r, 6, 1.0, &mut rng).unwrap();
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, ids(&[0, 1, 2, 3, 4, 5]));
        assert!(epsilon_greedy(&r, 7, 0.5, &mut rng).is_err());
        assert!(epsilon_greedy(&r, 2, 1.5, &mut rng).is_err());
    }

    #[test]
    fn twenty_percent_of_ten_is_two_random_slots() {
        assert_eq!(random_slots(10, 0.2), 2);
        assert_eq!(random_slots(10, 0.25), 3);
        assert_eq!(random_slots(3, 1.0), 3);
        let scores: Vec<f64> = (0..40).map(|i| 100.0 - i as f64).collect();
        let r = ranking(&scores);
        let mut rng = seed::rng(5);
        let recs = epsilon_greedy(&r, 10, 0.2, &mut rng).unwrap();
        assert_eq!(recs.len(), 10);
        // the first eight are the best items not drawn at random
        let random: Vec<ItemId> = recs[8..].to_vec();
        let expected: Vec<ItemId> = r.items().filter(|i| !random.contains(i)).take(8).collect();
        assert_eq!(recs[..8], expected[..]);
    }

    #[test]
    fn epsilon_greedy_is_seeded() {
        let r = ranking(&(0..30).map(|i| i as f64 * 0.1).collect::<Vec<_>>());
        let a = epsilon_greedy(&r, 10, 0.5, &mut seed::rng(9)).unwrap();
        let b = epsilon_greedy(&r, 10, 0.5, &mut seed::rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_ranking_keeps_seen_items_on_top() {
        let mapping = GroupMapping::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![GroupId(0)], vec![GroupId(1), GroupId(2)], vec![GroupId(1)], vec![GroupId(2)]],
        )
        .unwrap();
        let seen: GroupSet = [GroupId(0), GroupId(1)].into_iter().collect();
        let r = oracle_ranking(&mapping, &seen, &ids(&[0, 1, 2, 3]), &mut seed::rng(0)).unwrap();
        let top: Vec<ItemId> = top_n_exploit(&r, 2).unwrap();
        assert!(top.contains(&ItemId(0)) && top.contains(&ItemId(2)));
        assert!(new_groups(&mapping, &top, &seen).is_empty());
        assert_eq!(new_groups(&mapping, &ids(&[1]), &seen), [GroupId(2)].into_iter().collect());
    }
}
