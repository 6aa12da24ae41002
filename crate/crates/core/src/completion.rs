//! Semi-synthetic ground truth.
//!
//! A factor model trained on every observed rating fills the whole
//! user × item matrix. Each user's row is then cut into quintiles of its own
//! predicted values and mapped onto the classes 1..=5, which removes per-user
//! rating offsets and puts every user on the same scale.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::dataset::RatingDataset;
use crate::error::{Error, Result};
use crate::factorization::{init_model, train, FactorModel, Hyperparams};
use crate::ids::{ItemId, UserId};

/// Tag written into ground-truth files to name the percentile rule.
pub const PERCENTILE_METHOD: &str = "nearest-rank-quintile-inclusive";

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> DenseMatrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Argument(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Argument("ragged rows".into()));
        }
        let n = rows.len();
        Self::from_vec(n, cols, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

pub type RawMatrix = DenseMatrix<f64>;

/// Train on all observations and predict every cell, observed cells included.
pub fn complete_matrix(dataset: &RatingDataset, hp: &Hyperparams) -> Result<RawMatrix> {
    if dataset.is_empty() {
        return Err(Error::Argument("cannot complete an empty dataset".into()));
    }
    let model = init_model(dataset.num_users(), dataset.num_items(), hp)?;
    let (model, _) = train(model, dataset, hp)?;
    Ok(fill_from_model(&model))
}

pub fn fill_from_model(model: &FactorModel) -> RawMatrix {
    let (n_users, n_items) = (model.num_users(), model.num_items());
    let data = (0..n_users)
        .into_par_iter()
        .flat_map_iter(|u| (0..n_items).map(move |i| model.score(UserId::new(u), ItemId::new(i))))
        .collect();
    RawMatrix {
        rows: n_users,
        cols: n_items,
        data,
    }
}

/// Map a row onto classes 1..=5 by its own quintiles.
///
/// The k-th quintile boundary is the nearest-rank percentile at `20k` percent:
/// the value at sorted position `ceil(k n / 5)`. A value at or below the first
/// boundary is class 1, above the first and at or below the second is class 2,
/// and so on; values above the fourth boundary are class 5. Tied values always
/// share a class, and a constant row maps entirely to class 1.
pub fn percentile_rescale(row: &[f64]) -> Result<Vec<u8>> {
    if row.is_empty() {
        return Err(Error::Argument("cannot rescale an empty row".into()));
    }
    if let Some(v) = row.iter().find(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite predicted rating {v}")));
    }
    let mut sorted = row.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let bounds: [f64; 4] = std::array::from_fn(|k| {
        let rank = ((k + 1) * n).div_ceil(5);
        sorted[rank - 1]
    });
    Ok(row
        .iter()
        .map(|&v| 1 + bounds.iter().filter(|&&b| v > b).count() as u8)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    ratings: DenseMatrix<u8>,
    pub seed: u64,
    pub hyperparams: Hyperparams,
    pub source: String,
}

impl GroundTruth {
    pub fn new(ratings: DenseMatrix<u8>, hyperparams: Hyperparams, source: impl Into<String>) -> Result<Self> {
        if let Some(v) = ratings.as_slice().iter().find(|v| !(1..=5).contains(*v)) {
            return Err(Error::Data(format!("ground-truth rating {v} outside 1..=5")));
        }
        Ok(GroundTruth {
            ratings,
            seed: hyperparams.seed,
            hyperparams,
            source: source.into(),
        })
    }

    /// Rescale every row of `raw`.
    pub fn from_raw(raw: &RawMatrix, hyperparams: Hyperparams, source: impl Into<String>) -> Result<Self> {
        let rows: Vec<Vec<u8>> = (0..raw.rows())
            .into_par_iter()
            .map(|u| percentile_rescale(raw.row(u)))
            .collect::<Result<_>>()?;
        let ratings = DenseMatrix::from_vec(raw.rows(), raw.cols(), rows.concat())?;
        Self::new(ratings, hyperparams, source)
    }

    pub fn num_users(&self) -> usize {
        self.ratings.rows()
    }

    pub fn num_items(&self) -> usize {
        self.ratings.cols()
    }

    #[inline]
    pub fn rating(&self, user: UserId, item: ItemId) -> u8 {
        self.ratings.get(user.index(), item.index())
    }

    pub fn row(&self, user: UserId) -> &[u8] {
        self.ratings.row(user.index())
    }

    pub fn matrix(&self) -> &DenseMatrix<u8> {
        &self.ratings
    }

    /// Dense binary file: magic, header, then row-major cells, one byte each.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(GT_MAGIC)?;
        w.write_all(&GT_VERSION.to_le_bytes())?;
        w.write_all(&(self.num_users() as u64).to_le_bytes())?;
        w.write_all(&(self.num_items() as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        let hp = &self.hyperparams;
        w.write_all(&hp.learning_rate.to_le_bytes())?;
        w.write_all(&(hp.latent_dim as u64).to_le_bytes())?;
        w.write_all(&hp.l2_coeff.to_le_bytes())?;
        w.write_all(&(hp.epochs as u64).to_le_bytes())?;
        for tag in [PERCENTILE_METHOD, self.source.as_str()] {
            w.write_all(&(tag.len() as u16).to_le_bytes())?;
            w.write_all(tag.as_bytes())?;
        }
        w.write_all(self.ratings.as_slice())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let bad = |m: &str| Error::Data(format!("ground-truth file: {m}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != GT_MAGIC {
            return Err(bad("bad magic"));
        }
        let mut take = |n: usize| -> Result<Vec<u8>> {
            let mut buf = vec![0u8; n];
            r.read_exact(&mut buf).map_err(|_| bad("truncated"))?;
            Ok(buf)
        };
        let u32_at = |b: Vec<u8>| u32::from_le_bytes(b.try_into().unwrap());
        let u64_at = |b: Vec<u8>| u64::from_le_bytes(b.try_into().unwrap());
        let f64_at = |b: Vec<u8>| f64::from_le_bytes(b.try_into().unwrap());
        let version = u32_at(take(4)?);
        if version != GT_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let rows = u64_at(take(8)?) as usize;
        let cols = u64_at(take(8)?) as usize;
        let seed = u64_at(take(8)?);
        let hyperparams = Hyperparams {
            learning_rate: f64_at(take(8)?),
            latent_dim: u64_at(take(8)?) as usize,
            l2_coeff: f64_at(take(8)?),
            epochs: u64_at(take(8)?) as usize,
            seed,
        };
        let mut tag = || -> Result<String> {
            let len = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
            String::from_utf8(take(len)?).map_err(|_| bad("tag is not UTF-8"))
        };
        let method = tag()?;
        if method != PERCENTILE_METHOD {
            return Err(bad(&format!("unknown percentile method {method:?}")));
        }
        let source = tag()?;
        let cells = take(rows.checked_mul(cols).ok_or_else(|| bad("dimensions overflow"))?)?;
        let mut ground = Self::new(DenseMatrix::from_vec(rows, cols, cells)?, hyperparams, source)?;
        ground.seed = seed;
        Ok(ground)
    }
}

const GT_MAGIC: &[u8; 4] = b"DLGT";
const GT_VERSION: u32 = 1;

/// Matrix completion followed by per-user quintile rescaling.
pub fn build_semisynthetic(dataset: &RatingDataset, hp: &Hyperparams) -> Result<GroundTruth> {
    let raw = complete_matrix(dataset, hp)?;
    GroundTruth::from_raw(&raw, *hp, "mf-completion")
}
