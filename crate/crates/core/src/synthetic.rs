//! Planted-structure data for experiments that cannot wait for MovieLens.
//!
//! Every group has a centroid in a low-rank latent space. Items sit near the
//! centroid of their primary group (some also lean towards a secondary group)
//! and users sit near the mean centroid of a few "home" groups. The raw
//! preference `user · item` is rescaled per user into quintile classes to form
//! the ground truth, and each user's observed history contains only items
//! from their home groups, the way a filter bubble would leave it.
//!
//! The last `niche_groups` groups are nobody's home: no initial rating
//! touches them, so a model trained on the history knows nothing about their
//! items until the loop itself shows one to somebody.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::completion::{percentile_rescale, DenseMatrix, GroundTruth, RawMatrix};
use crate::dataset::{GroupMapping, Rating, RatingDataset};
use crate::error::{Error, Result};
use crate::factorization::{FactorModel, Hyperparams};
use crate::ids::{GroupId, ItemId, UserId};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedParams {
    pub users: usize,
    pub items: usize,
    pub groups: usize,
    pub rank: usize,
    /// Groups each user's history is drawn from.
    pub home_groups: usize,
    /// Observed ratings per user.
    pub history: usize,
    /// Groups absent from every initial history.
    pub niche_groups: usize,
    /// Probability that an item of a non-niche group also belongs to a
    /// second non-niche group.
    pub secondary_prob: f64,
    /// Standard deviation of item and user offsets around their centroids.
    pub noise: f64,
    pub seed: u64,
}

impl Default for PlantedParams {
    /// 200 users, 500 items, 10 groups, rank 3.
    fn default() -> Self {
        PlantedParams {
            users: 200,
            items: 500,
            groups: 10,
            rank: 3,
            home_groups: 3,
            history: 20,
            niche_groups: 2,
            secondary_prob: 0.2,
            noise: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedWorld {
    pub dataset: RatingDataset,
    pub mapping: GroupMapping,
    pub truth: GroundTruth,
    pub home_groups: Vec<Vec<GroupId>>,
}

fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn planted_world(params: &PlantedParams) -> Result<PlantedWorld> {
    let p = params;
    if p.users == 0 || p.items == 0 || p.groups == 0 || p.rank == 0 {
        return Err(Error::Argument("planted dimensions must be positive".into()));
    }
    let warm = p.groups.saturating_sub(p.niche_groups);
    if p.home_groups == 0 || p.home_groups > warm {
        return Err(Error::Argument(format!(
            "home_groups must be in 1..={warm}, got {}",
            p.home_groups
        )));
    }
    let mut rng = seed::rng(p.seed);
    let centroids: Vec<Vec<f64>> = (0..p.groups).map(|_| gaussian_vec(&mut rng, p.rank, 1.0)).collect();

    let mut membership = Vec::with_capacity(p.items);
    let mut item_vecs = Vec::with_capacity(p.items);
    for i in 0..p.items {
        let primary = i % p.groups;
        let mut groups = vec![GroupId::new(primary)];
        let mut v: Vec<f64> = centroids[primary].clone();
        if primary < warm && warm > 1 && rng.random::<f64>() < p.secondary_prob {
            let other = (primary + 1 + rng.random_range(0..warm - 1)) % warm;
            groups.push(GroupId::new(other));
            for (x, c) in v.iter_mut().zip(&centroids[other]) {
                *x = 0.7 * *x + 0.3 * c;
            }
        }
        for (x, e) in v.iter_mut().zip(gaussian_vec(&mut rng, p.rank, p.noise)) {
            *x += e;
        }
        membership.push(groups);
        item_vecs.push(v);
    }

    let mut home_groups = Vec::with_capacity(p.users);
    let mut raw = Vec::with_capacity(p.users * p.items);
    for _ in 0..p.users {
        let home: Vec<GroupId> = {
            let mut h: Vec<GroupId> = index::sample(&mut rng, warm, p.home_groups)
                .into_iter()
                .map(GroupId::new)
                .collect();
            h.sort();
            h
        };
        let mut w = gaussian_vec(&mut rng, p.rank, p.noise);
        for g in &home {
            for (x, c) in w.iter_mut().zip(&centroids[g.index()]) {
                *x += c / p.home_groups as f64;
            }
        }
        raw.extend(item_vecs.iter().map(|v| v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()));
        home_groups.push(home);
    }
    let raw = RawMatrix::from_vec(p.users, p.items, raw)?;
    let truth_hp = Hyperparams {
        latent_dim: p.rank,
        ..Hyperparams::default()
    }
    .with_seed(p.seed);
    let truth = GroundTruth::from_raw(&raw, truth_hp, "planted-synthetic")?;

    let mut observations = Vec::with_capacity(p.users * p.history);
    for (u, home) in home_groups.iter().enumerate() {
        let pool: Vec<usize> = (0..p.items)
            .filter(|&i| membership[i].iter().all(|g| home.contains(g)))
            .collect();
        let take = p.history.min(pool.len());
        for k in index::sample(&mut rng, pool.len(), take) {
            let item = ItemId::new(pool[k]);
            let user = UserId::new(u);
            observations.push(Rating {
                user,
                item,
                value: truth.rating(user, item) as f64,
                timestamp: None,
            });
        }
    }
    if observations.iter().map(|r| r.user).collect::<std::collections::BTreeSet<_>>().len() != p.users {
        return Err(Error::Argument("some user has an empty history; raise items or home_groups".into()));
    }
    let names = (0..p.groups).map(|g| format!("group-{g}")).collect();
    Ok(PlantedWorld {
        dataset: RatingDataset::new(p.users, p.items, observations)?,
        mapping: GroupMapping::new(names, membership)?,
        truth,
        home_groups,
    })
}

/// A hand-built model in which items of the first `boosted_groups` groups
/// have their factors scaled by `boost`, together with a dataset in which
/// every user has rated exactly one item from each boosted group. Items
/// belong to one group each (`item % groups`).
pub fn planted_signal_model(
    users: usize,
    items: usize,
    groups: usize,
    boosted_groups: usize,
    boost: f64,
    seed: u64,
) -> Result<(FactorModel, RatingDataset, GroupMapping)> {
    if boosted_groups == 0 || boosted_groups >= groups || items < 2 * groups {
        return Err(Error::Argument("need 0 < boosted_groups < groups and two items per group".into()));
    }
    let dim = 4;
    let mut rng = seed::rng(seed);
    let user_factors: Vec<f64> = (0..users * dim).map(|_| rng.random_range(0.5..1.5)).collect();
    let mut item_factors: Vec<f64> = (0..items * dim).map(|_| rng.random_range(0.5..1.5)).collect();
    for i in 0..items {
        if i % groups < boosted_groups {
            for x in &mut item_factors[i * dim..(i + 1) * dim] {
                *x *= boost;
            }
        }
    }
    let model = FactorModel::from_factors(users, items, dim, user_factors, item_factors)?;
    let mut observations = Vec::new();
    for u in 0..users {
        for g in 0..boosted_groups {
            let k = rng.random_range(0..(items - g).div_ceil(groups));
            let item = k * groups + g;
            observations.push(Rating {
                user: UserId::new(u),
                item: ItemId::new(item),
                value: 3.0,
                timestamp: None,
            });
        }
    }
    let membership = (0..items).map(|i| vec![GroupId::new(i % groups)]).collect();
    let names = (0..groups).map(|g| format!("group-{g}")).collect();
    Ok((
        model,
        RatingDataset::new(users, items, observations)?,
        GroupMapping::new(names, membership)?,
    ))
}

/// Raw rank-`rank` matrix `a_u · b_i` with positive factors scaled into the
/// rating range, for completion tests.
pub fn low_rank_matrix(users: usize, items: usize, rank: usize, seed: u64) -> DenseMatrix<f64> {
    let mut rng = seed::rng(seed);
    let a: Vec<Vec<f64>> = (0..users)
        .map(|_| (0..rank).map(|_| rng.random_range(0.8..1.5)).collect())
        .collect();
    let b: Vec<Vec<f64>> = (0..items)
        .map(|_| (0..rank).map(|_| rng.random_range(0.8..1.5)).collect())
        .collect();
    let data = a
        .iter()
        .flat_map(|au| b.iter().map(move |bi| au.iter().zip(bi).map(|(x, y)| x * y).sum::<f64>() / rank as f64 * 2.0))
        .collect();
    DenseMatrix::from_vec(users, items, data).expect("shape")
}

/// Rescale any raw matrix row by row (re-exported for experiments that
/// build their own raw preferences).
pub fn rescale_rows(raw: &RawMatrix) -> Result<Vec<Vec<u8>>> {
    (0..raw.rows()).map(|u| percentile_rescale(raw.row(u))).collect()
}
