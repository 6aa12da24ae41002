//! Plain dot-product matrix factorization trained by per-observation SGD.
//!
//! The score of user `u` for item `i` is `P_u · Q_i` with no bias terms. The
//! training objective is
//!
//! ```text
//! L = Σ_(u,i,r) (r − P_u·Q_i)² + λ (‖P_u‖² + ‖Q_i‖²)
//! ```
//!
//! Each SGD step applies the usual `P_u += η (e Q_i − λ P_u)` update (and the
//! symmetric one for `Q_i`), where `e = r − P_u·Q_i`. That is a step of
//! `η / 2` along the exact negative gradient of the per-observation term.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::{Rating, RatingDataset};
use crate::error::{Error, Result};
use crate::ids::{ItemId, UserId};
use crate::seed;

/// Half-width of the uniform initialization interval.
pub const INIT_SCALE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub latent_dim: usize,
    pub l2_coeff: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    /// Learning rate 0.001, latent dimension 10, L2 0.01, 300 epochs.
    fn default() -> Self {
        Hyperparams {
            learning_rate: 0.001,
            latent_dim: 10,
            l2_coeff: 0.01,
            epochs: 300,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.l2_coeff >= 0.0 && self.l2_coeff.is_finite()) {
            return Err(Error::Argument(format!(
                "l2 coefficient must be non-negative, got {}",
                self.l2_coeff
            )));
        }
        if self.latent_dim == 0 {
            return Err(Error::Argument("latent dimension must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Argument("epochs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Hyperparams { seed, ..self }
    }
}

/// User and item latent factors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    num_users: usize,
    num_items: usize,
    latent_dim: usize,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
}

impl FactorModel {
    pub fn from_factors(
        num_users: usize,
        num_items: usize,
        latent_dim: usize,
        user_factors: Vec<f64>,
        item_factors: Vec<f64>,
    ) -> Result<Self> {
        if num_users == 0 || num_items == 0 || latent_dim == 0 {
            return Err(Error::Argument(format!(
                "model dimensions must be positive, got {num_users}x{num_items}x{latent_dim}"
            )));
        }
        if user_factors.len() != num_users * latent_dim
            || item_factors.len() != num_items * latent_dim
        {
            return Err(Error::Argument("factor matrix size mismatch".into()));
        }
        Ok(FactorModel {
            num_users,
            num_items,
            latent_dim,
            user_factors,
            item_factors,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn user_vector(&self, user: UserId) -> &[f64] {
        let d = self.latent_dim;
        &self.user_factors[user.index() * d..(user.index() + 1) * d]
    }

    pub fn item_vector(&self, item: ItemId) -> &[f64] {
        let d = self.latent_dim;
        &self.item_factors[item.index() * d..(item.index() + 1) * d]
    }

    pub fn user_vector_mut(&mut self, user: UserId) -> &mut [f64] {
        let d = self.latent_dim;
        &mut self.user_factors[user.index() * d..(user.index() + 1) * d]
    }

    pub fn item_vector_mut(&mut self, item: ItemId) -> &mut [f64] {
        let d = self.latent_dim;
        &mut self.item_factors[item.index() * d..(item.index() + 1) * d]
    }

    pub fn user_factors(&self) -> &[f64] {
        &self.user_factors
    }

    pub fn item_factors(&self) -> &[f64] {
        &self.item_factors
    }

    /// Unchecked score. Panics if an index is out of range.
    #[inline]
    pub fn score(&self, user: UserId, item: ItemId) -> f64 {
        dot(self.user_vector(user), self.item_vector(item))
    }

    pub fn is_finite(&self) -> bool {
        self.user_factors
            .iter()
            .chain(&self.item_factors)
            .all(|v| v.is_finite())
    }

    /// Squared Frobenius norm of both factor matrices.
    pub fn squared_norm(&self) -> f64 {
        self.user_factors
            .iter()
            .chain(&self.item_factors)
            .map(|v| v * v)
            .sum()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Draw every factor uniformly from `[-0.05, 0.05]` using `hp.seed`.
pub fn init_model(num_users: usize, num_items: usize, hp: &Hyperparams) -> Result<FactorModel> {
    hp.validate()?;
    if num_users == 0 || num_items == 0 {
        return Err(Error::Argument(format!(
            "model dimensions must be positive, got {num_users} users and {num_items} items"
        )));
    }
    let mut rng = seed::rng(hp.seed);
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| rng.random_range(-INIT_SCALE..=INIT_SCALE))
            .collect()
    };
    let user_factors = draw(num_users * hp.latent_dim);
    let item_factors = draw(num_items * hp.latent_dim);
    FactorModel::from_factors(num_users, num_items, hp.latent_dim, user_factors, item_factors)
}

pub fn predict(model: &FactorModel, user: UserId, item: ItemId) -> Result<f64> {
    if user.index() >= model.num_users || item.index() >= model.num_items {
        return Err(Error::Argument(format!(
            "index (user {user}, item {item}) outside {}x{} model",
            model.num_users, model.num_items
        )));
    }
    Ok(model.score(user, item))
}

/// Per-observation term `(r − p·q)² + λ(‖p‖² + ‖q‖²)`.
pub fn observation_loss(p: &[f64], q: &[f64], rating: f64, l2_coeff: f64) -> f64 {
    let err = rating - dot(p, q);
    err * err + l2_coeff * (dot(p, p) + dot(q, q))
}

/// Gradient of [`observation_loss`] with respect to `p` and `q`, written into
/// `grad_p` and `grad_q`. Returns the residual `r − p·q`.
pub fn observation_gradient(
    p: &[f64],
    q: &[f64],
    rating: f64,
    l2_coeff: f64,
    grad_p: &mut [f64],
    grad_q: &mut [f64],
) -> f64 {
    let err = rating - dot(p, q);
    for k in 0..p.len() {
        grad_p[k] = -2.0 * err * q[k] + 2.0 * l2_coeff * p[k];
        grad_q[k] = -2.0 * err * p[k] + 2.0 * l2_coeff * q[k];
    }
    err
}

/// Regularized squared-error objective over all observations.
pub fn loss(model: &FactorModel, dataset: &RatingDataset, l2_coeff: f64) -> Result<f64> {
    check_bounds(model, dataset.observations())?;
    Ok(dataset
        .observations()
        .iter()
        .map(|r| {
            observation_loss(
                model.user_vector(r.user),
                model.item_vector(r.item),
                r.value,
                l2_coeff,
            )
        })
        .sum())
}

/// Mean squared error `(r − p·q)²` over `observations`.
pub fn mean_squared_error(model: &FactorModel, observations: &[Rating]) -> f64 {
    if observations.is_empty() {
        return 0.0;
    }
    let sse: f64 = observations
        .iter()
        .map(|r| {
            let e = r.value - model.score(r.user, r.item);
            e * e
        })
        .sum();
    sse / observations.len() as f64
}

fn check_bounds(model: &FactorModel, observations: &[Rating]) -> Result<()> {
    if let Some(r) = observations
        .iter()
        .find(|r| r.user.index() >= model.num_users || r.item.index() >= model.num_items)
    {
        return Err(Error::Argument(format!(
            "observation (user {}, item {}) outside {}x{} model",
            r.user, r.item, model.num_users, model.num_items
        )));
    }
    Ok(())
}

pub fn train(
    model: FactorModel,
    dataset: &RatingDataset,
    hp: &Hyperparams,
) -> Result<(FactorModel, Vec<f64>)> {
    train_observations(model, dataset.observations(), hp)
}

/// Run `hp.epochs` epochs of SGD over `observations`, reshuffled each epoch by
/// a generator seeded from `hp.seed`. Returns the trained model and the mean
/// squared training error after every epoch.
pub fn train_observations(
    mut model: FactorModel,
    observations: &[Rating],
    hp: &Hyperparams,
) -> Result<(FactorModel, Vec<f64>)> {
    hp.validate()?;
    if observations.is_empty() {
        return Err(Error::Argument("cannot train on an empty dataset".into()));
    }
    if hp.latent_dim != model.latent_dim {
        return Err(Error::Argument(format!(
            "model latent dimension {} differs from hyperparameter {}",
            model.latent_dim, hp.latent_dim
        )));
    }
    check_bounds(&model, observations)?;

    let d = model.latent_dim;
    let half_lr = 0.5 * hp.learning_rate;
    let mut rng = seed::rng(seed::derive(hp.seed, seed::stream::TRAINING));
    let mut order: Vec<usize> = (0..observations.len()).collect();
    let mut grad_p = vec![0.0; d];
    let mut grad_q = vec![0.0; d];
    let mut trace = Vec::with_capacity(hp.epochs);

    for epoch in 1..=hp.epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            let r = &observations[k];
            let (u0, i0) = (r.user.index() * d, r.item.index() * d);
            let p = &mut model.user_factors[u0..u0 + d];
            let q = &mut model.item_factors[i0..i0 + d];
            observation_gradient(p, q, r.value, hp.l2_coeff, &mut grad_p, &mut grad_q);
            for k in 0..d {
                p[k] -= half_lr * grad_p[k];
                q[k] -= half_lr * grad_q[k];
            }
        }
        if !model.is_finite() {
            return Err(Error::Training { epoch });
        }
        let mse = mean_squared_error(&model, observations);
        if !mse.is_finite() {
            return Err(Error::Training { epoch });
        }
        trace.push(mse);
    }
    Ok((model, trace))
}

const CHECKPOINT_MAGIC: &str = "discovery-loop factor-model v1";

/// Write a self-describing text checkpoint. Floats use shortest round-trip
/// formatting, so loading reproduces every prediction exactly.
pub fn write_checkpoint<W: Write>(model: &FactorModel, hp: &Hyperparams, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CHECKPOINT_MAGIC}")?;
    writeln!(w, "num_users {}", model.num_users)?;
    writeln!(w, "num_items {}", model.num_items)?;
    writeln!(w, "latent_dim {}", model.latent_dim)?;
    writeln!(w, "learning_rate {:e}", hp.learning_rate)?;
    writeln!(w, "l2_coeff {:e}", hp.l2_coeff)?;
    writeln!(w, "epochs {}", hp.epochs)?;
    writeln!(w, "seed {}", hp.seed)?;
    for (label, data) in [("user_factors", &model.user_factors), ("item_factors", &model.item_factors)] {
        writeln!(w, "{label}")?;
        for row in data.chunks(model.latent_dim) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(reader: R) -> Result<(FactorModel, Hyperparams)> {
    let mut lines = reader.lines().enumerate().map(|(n, l)| {
        l.map(|l| (n + 1, l)).map_err(|e| Error::Parse {
            line: n + 1,
            message: e.to_string(),
        })
    });
    let mut next = || -> Result<(usize, String)> {
        lines.next().unwrap_or_else(|| {
            Err(Error::Parse {
                line: 0,
                message: "unexpected end of checkpoint".into(),
            })
        })
    };
    let (line, magic) = next()?;
    if magic.trim() != CHECKPOINT_MAGIC {
        return Err(Error::Parse {
            line,
            message: "not a factor-model checkpoint".into(),
        });
    }
    fn field<T: std::str::FromStr>(entry: (usize, String), key: &str) -> Result<T> {
        let (line, text) = entry;
        text.strip_prefix(key)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Parse {
                line,
                message: format!("expected `{key} <value>`"),
            })
    }
    let num_users: usize = field(next()?, "num_users")?;
    let num_items: usize = field(next()?, "num_items")?;
    let latent_dim: usize = field(next()?, "latent_dim")?;
    let hp = Hyperparams {
        learning_rate: field(next()?, "learning_rate")?,
        l2_coeff: field(next()?, "l2_coeff")?,
        epochs: field(next()?, "epochs")?,
        seed: field(next()?, "seed")?,
        latent_dim,
    };
    let mut read_matrix = |label: &str, rows: usize| -> Result<Vec<f64>> {
        let (line, text) = next()?;
        if text.trim() != label {
            return Err(Error::Parse {
                line,
                message: format!("expected `{label}`"),
            });
        }
        let mut out = Vec::with_capacity(rows * latent_dim);
        for _ in 0..rows {
            let (line, text) = next()?;
            let row = text
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line,
                    message: e.to_string(),
                })?;
            if row.len() != latent_dim {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {latent_dim} values, found {}", row.len()),
                });
            }
            out.extend(row);
        }
        Ok(out)
    };
    let user_factors = read_matrix("user_factors", num_users)?;
    let item_factors = read_matrix("item_factors", num_items)?;
    let model = FactorModel::from_factors(num_users, num_items, latent_dim, user_factors, item_factors)?;
    Ok((model, hp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp(dim: usize) -> Hyperparams {
        Hyperparams {
            latent_dim: dim,
            ..Hyperparams::default()
        }
    }

    fn rating(u: u32, i: u32, v: f64) -> Rating {
        Rating {
            user: UserId(u),
            item: ItemId(i),
            value: v,
            timestamp: None,
        }
    }

    #[test]
    fn init_is_seeded_and_shaped() {
        let a = init_model(2, 3, &hp(10).with_seed(5)).unwrap();
        let b = init_model(2, 3, &hp(10).with_seed(5)).unwrap();
        let c = init_model(2, 3, &hp(10).with_seed(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.user_factors(), c.user_factors());
        assert_eq!(a.user_factors().len(), 2 * 10);
        assert_eq!(a.item_factors().len(), 3 * 10);
        assert!(a
            .user_factors()
            .iter()
            .chain(a.item_factors())
            .all(|v| v.abs() <= INIT_SCALE));
    }

    #[test]
    fn init_rejects_zero_dimensions() {
        assert!(init_model(0, 3, &hp(2)).is_err());
        assert!(init_model(1, 0, &hp(2)).is_err());
        assert!(init_model(1, 1, &hp(0)).is_err());
    }

    #[test]
    fn predict_is_plain_dot_product() {
        let m = FactorModel::from_factors(1, 1, 2, vec![0.5, 0.5], vec![2.0, 2.0]).unwrap();
        assert_eq!(predict(&m, UserId(0), ItemId(0)).unwrap(), 2.0);
        let m = FactorModel::from_factors(1, 1, 3, vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(predict(&m, UserId(0), ItemId(0)).unwrap(), 0.0);
        let m = FactorModel::from_factors(1, 2, 2, vec![0.0, 0.0], vec![3.0, -1.0, 7.0, 2.0]).unwrap();
        assert_eq!(predict(&m, UserId(0), ItemId(1)).unwrap(), 0.0);
        assert!(predict(&m, UserId(1), ItemId(0)).is_err());
        assert!(predict(&m, UserId(0), ItemId(2)).is_err());
    }

    #[test]
    fn loss_hand_values() {
        let zero = FactorModel::from_factors(1, 2, 2, vec![0.0; 2], vec![0.0; 4]).unwrap();
        let ds = RatingDataset::new(1, 2, vec![rating(0, 0, 4.0)]).unwrap();
        assert_eq!(loss(&zero, &ds, 0.5).unwrap(), 16.0);

        // p = (1, 2), q0 = (1, 0), q1 = (0, 1), λ = 0.1
        // obs (0,0,r=3): e = 3 - 1 = 2 -> 4 + 0.1 * (5 + 1) = 4.6
        // obs (0,1,r=1): e = 1 - 2 = -1 -> 1 + 0.1 * (5 + 1) = 1.6
        let m = FactorModel::from_factors(1, 2, 2, vec![1.0, 2.0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let ds = RatingDataset::new(1, 2, vec![rating(0, 0, 3.0), rating(0, 1, 1.0)]).unwrap();
        assert!((loss(&m, &ds, 0.1).unwrap() - 6.2).abs() < 1e-12);
    }

    #[test]
    fn single_cell_converges_to_rating() {
        let ds = RatingDataset::new(1, 1, vec![rating(0, 0, 3.0)]).unwrap();
        let hp = Hyperparams {
            learning_rate: 0.05,
            latent_dim: 1,
            l2_coeff: 0.0,
            epochs: 2000,
            seed: 1,
        };
        let (m, trace) = train(init_model(1, 1, &hp).unwrap(), &ds, &hp).unwrap();
        assert!((m.score(UserId(0), ItemId(0)) - 3.0).abs() < 0.05);
        assert!(*trace.last().unwrap() < 0.0025);
    }

    #[test]
    fn heavy_regularization_shrinks_norms() {
        let ds = RatingDataset::new(
            2,
            2,
            vec![rating(0, 0, 5.0), rating(0, 1, 3.0), rating(1, 0, 1.0), rating(1, 1, 4.0)],
        )
        .unwrap();
        let hp = Hyperparams {
            learning_rate: 1e-3,
            latent_dim: 3,
            l2_coeff: 1e3,
            epochs: 1,
            seed: 9,
        };
        let mut model = init_model(2, 2, &hp).unwrap();
        let mut last = model.squared_norm();
        for epoch in 0..10 {
            model = train(model, &ds, &hp.with_seed(epoch)).unwrap().0;
            let norm = model.squared_norm();
            assert!(norm < last, "epoch {epoch}: {norm} >= {last}");
            last = norm;
        }
    }

    #[test]
    fn divergence_names_epoch() {
        let ds = RatingDataset::new(1, 1, vec![rating(0, 0, 5.0)]).unwrap();
        let hp = Hyperparams {
            learning_rate: 1e6,
            latent_dim: 2,
            l2_coeff: 0.0,
            epochs: 50,
            seed: 0,
        };
        let err = train(init_model(1, 1, &hp).unwrap(), &ds, &hp).unwrap_err();
        assert!(matches!(err, Error::Training { epoch } if epoch >= 1));
    }

    #[test]
    fn empty_training_set_rejected() {
        let hp = hp(2);
        let model = init_model(1, 1, &hp).unwrap();
        assert!(train_observations(model, &[], &hp).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let hp = hp(4).with_seed(77);
        let model = init_model(3, 5, &hp).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&model, &hp, &mut buf).unwrap();
        let (back, hp_back) = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(back, model);
        assert_eq!(hp_back, hp);
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        assert!(read_checkpoint("hello\n".as_bytes()).is_err());
    }
}
