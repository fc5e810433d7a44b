//! Session protocol, batch composition and the pool-based selection
//! algorithms (ensemble disagreement and coreset).

mod session;
mod state;
mod strategy;

pub use session::{
    compose_session_batch, run_experiment, Dataset, Ensemble, GaborTeacher, IdSampler, RunOutcome,
    SessionLog, SessionModel, Snapshot, Teacher,
};
pub use state::{RunState, RUN_MAGIC};
pub use strategy::{
    BatchStrategy, Coreset, Normal, PoolEnsDis, SelectionContext, StrategyParams, StrategyRegistry,
    Transformed,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::models::Mlp;
use crate::stats::median;

/// Images chosen for one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    pub session: usize,
    pub normal_ids: Vec<usize>,
    /// Corpus ids of the strategy's images. For transform strategies these
    /// are the source images, which are transformed before training.
    pub special_ids: Vec<usize>,
}

impl BatchPlan {
    pub fn len(&self) -> usize {
        self.normal_ids.len() + self.special_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisagreementScore {
    pub id: usize,
    pub score: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median Euclidean distance over unordered pairs of member predictions.
pub fn ensemble_disagreement(members: &[Mlp], features: &[f64]) -> Result<f64> {
    if members.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "disagreement needs at least 2 members, got {}",
            members.len()
        )));
    }
    let outputs: Result<Vec<Vec<f64>>> = members.iter().map(|m| m.forward(features)).collect();
    Ok(pairwise_median(&outputs?))
}

fn pairwise_median(outputs: &[Vec<f64>]) -> f64 {
    let mut d = Vec::with_capacity(outputs.len() * (outputs.len() - 1) / 2);
    for i in 0..outputs.len() {
        for j in i + 1..outputs.len() {
            d.push(distance(&outputs[i], &outputs[j]));
        }
    }
    median(&d)
}

/// [`ensemble_disagreement`] for every column of `x`.
pub fn pool_disagreement(members: &[Mlp], x: &DMatrix<f64>) -> Result<Vec<f64>> {
    if members.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "disagreement needs at least 2 members, got {}",
            members.len()
        )));
    }
    let preds: Result<Vec<DMatrix<f64>>> = members.iter().map(|m| m.forward_batch(x)).collect();
    let preds = preds?;
    Ok((0..x.ncols())
        .map(|c| {
            let outs: Vec<Vec<f64>> = preds
                .iter()
                .map(|p| p.column(c).iter().copied().collect())
                .collect();
            pairwise_median(&outs)
        })
        .collect())
}

/// Greedy k-center selection over the columns of `candidates`.
///
/// Each step picks the candidate whose distance to the nearest anchor or
/// already-picked candidate is largest; ties go to the lowest index. With
/// no anchors the first pick is candidate 0.
pub fn coreset_farthest(
    candidates: &DMatrix<f64>,
    anchors: &DMatrix<f64>,
    n_pick: usize,
) -> Result<Vec<usize>> {
    let n = candidates.ncols();
    if n == 0 {
        return Err(Error::Empty("coreset candidates"));
    }
    if n_pick > n {
        return Err(Error::InvalidArgument(format!(
            "cannot pick {n_pick} of {n} candidates"
        )));
    }
    if anchors.ncols() > 0 && anchors.nrows() != candidates.nrows() {
        return Err(Error::DimensionMismatch {
            expected: candidates.nrows(),
            got: anchors.nrows(),
        });
    }
    let col = |m: &DMatrix<f64>, j: usize| -> Vec<f64> { m.column(j).iter().copied().collect() };
    let cands: Vec<Vec<f64>> = (0..n).map(|j| col(candidates, j)).collect();
    let mut nearest = nearest_anchor(candidates, anchors);
    let mut picked = vec![false; n];
    let mut out = Vec::with_capacity(n_pick);
    for _ in 0..n_pick {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if !picked[i] && best.is_none_or(|b| nearest[i] > nearest[b]) {
                best = Some(i);
            }
        }
        let b = best.expect("n_pick <= candidates");
        picked[b] = true;
        out.push(b);
        for i in 0..n {
            if !picked[i] {
                nearest[i] = nearest[i].min(squared_distance(&cands[i], &cands[b]));
            }
        }
    }
    Ok(out)
}

const ANCHOR_CHUNK: usize = 1024;

/// Squared distance from each candidate column to its nearest anchor
/// column, via `|c|² + |a|² − 2c·a` in anchor chunks.
fn nearest_anchor(candidates: &DMatrix<f64>, anchors: &DMatrix<f64>) -> Vec<f64> {
    let n = candidates.ncols();
    let mut nearest = vec![f64::INFINITY; n];
    let cn: Vec<f64> = candidates.column_iter().map(|c| c.norm_squared()).collect();
    let ct = candidates.transpose();
    let mut start = 0;
    while start < anchors.ncols() {
        let width = ANCHOR_CHUNK.min(anchors.ncols() - start);
        let block = anchors.columns(start, width);
        let dots = &ct * block;
        for (j, a) in block.column_iter().enumerate() {
            let an = a.norm_squared();
            for (i, m) in nearest.iter_mut().enumerate() {
                *m = m.min((cn[i] + an - 2.0 * dots[(i, j)]).max(0.0));
            }
        }
        start += width;
    }
    nearest
}

/// Shortlists the `shortlist` most disputed pool columns, then spreads
/// `n_pick` of them with [`coreset_farthest`] over their feature vectors.
/// Returns column indices into `pool`.
pub fn pool_ensdis_select(
    members: &[Mlp],
    pool: &DMatrix<f64>,
    n_pick: usize,
    shortlist: usize,
) -> Result<Vec<usize>> {
    let n = pool.ncols();
    if n_pick > n {
        return Err(Error::InvalidArgument(format!(
            "cannot pick {n_pick} from a pool of {n}"
        )));
    }
    if shortlist < n_pick {
        return Err(Error::InvalidArgument(format!(
            "shortlist {shortlist} is smaller than the pick count {n_pick}"
        )));
    }
    let shortlist = if shortlist > n {
        log::warn!("pool of {n} is smaller than the shortlist {shortlist}; using the whole pool");
        n
    } else {
        shortlist
    };
    let scores = pool_disagreement(members, pool)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(shortlist);
    let short = pool.select_columns(&order);
    let anchors = DMatrix::zeros(pool.nrows(), 0);
    Ok(coreset_farthest(&short, &anchors, n_pick)?
        .into_iter()
        .map(|i| order[i])
        .collect())
}
