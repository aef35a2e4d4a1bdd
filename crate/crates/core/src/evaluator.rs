//! All-ranking top-K evaluation.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataio::InteractionSet;
use crate::objective::NormalizedRows;
use crate::{Error, Result};

/// How a user row is compared with item rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Inner product of L2-normalized rows.
    Cosine,
    /// Raw inner product; used by the no-normalization ablation.
    InnerProduct,
}

impl ScoreMode {
    pub fn for_normalize(normalize: bool) -> Self {
        if normalize {
            ScoreMode::Cosine
        } else {
            ScoreMode::InnerProduct
        }
    }
}

/// Scores every item for a user from a node matrix (users first, then items).
pub struct Scorer {
    users: Array2<f64>,
    items: Array2<f64>,
}

impl Scorer {
    pub fn new(nodes: ArrayView2<f64>, num_users: usize, mode: ScoreMode) -> Result<Self> {
        if num_users > nodes.nrows() {
            return Err(Error::Shape(format!(
                "node matrix has {} rows but {num_users} users",
                nodes.nrows()
            )));
        }
        let rows = match mode {
            ScoreMode::Cosine => NormalizedRows::new(nodes, "node embedding")?.rows,
            ScoreMode::InnerProduct => nodes.to_owned(),
        };
        Ok(Scorer {
            users: rows.slice(ndarray::s![..num_users, ..]).to_owned(),
            items: rows.slice(ndarray::s![num_users.., ..]).to_owned(),
        })
    }

    pub fn num_items(&self) -> usize {
        self.items.nrows()
    }

    pub fn scores(&self, user: u32) -> Result<Vec<f64>> {
        let s = self.items.dot(&self.users.row(user as usize)).to_vec();
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("scores for user {user}")));
        }
        Ok(s)
    }
}

/// Items by descending score, ties by ascending index, with `exclude` removed.
pub fn rank_by_scores(scores: &[f64], exclude: &[u32]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..scores.len() as u32).filter(|i| !exclude.contains(i)).collect();
    order.sort_by(|&a, &b| scores[b as usize].total_cmp(&scores[a as usize]).then(a.cmp(&b)));
    order
}

/// Ranked candidate list for one user, excluding their train items.
pub fn rank_items(scorer: &Scorer, user: u32, exclude: &[u32]) -> Result<Vec<u32>> {
    Ok(rank_by_scores(&scorer.scores(user)?, exclude))
}

/// 1-based position of `item` in the ranking `rank_by_scores` would produce.
/// `exclude` must be sorted.
fn rank_of(scores: &[f64], exclude: &[u32], item: u32) -> usize {
    let s = scores[item as usize];
    let mut ahead = 0;
    for (j, &sj) in scores.iter().enumerate() {
        let j = j as u32;
        if (sj > s || (sj == s && j < item)) && exclude.binary_search(&j).is_err() {
            ahead += 1;
        }
    }
    ahead + 1
}

fn truth_ranks(ranked: &[u32], truth: &[u32]) -> Vec<usize> {
    ranked
        .iter()
        .enumerate()
        .filter(|(_, i)| truth.contains(i))
        .map(|(p, _)| p + 1)
        .collect()
}

fn discount(position: usize) -> f64 {
    1.0 / ((position + 1) as f64).log2()
}

/// Ideal DCG with `num_truth` relevant items.
pub fn ideal_dcg(num_truth: usize, k: usize) -> f64 {
    (1..=num_truth.min(k)).map(discount).sum()
}

/// 1 if any truth item sits in the top `k` of `ranked`.
pub fn hr_at_k(ranked: &[u32], truth: &[u32], k: usize) -> Result<f64> {
    check_k_and_truth(truth.len(), k)?;
    Ok(hr_from_ranks(&truth_ranks(ranked, truth), k))
}

/// Binary-relevance NDCG.
pub fn ndcg_at_k(ranked: &[u32], truth: &[u32], k: usize) -> Result<f64> {
    check_k_and_truth(truth.len(), k)?;
    Ok(ndcg_from_ranks(&truth_ranks(ranked, truth), truth.len(), k))
}

fn check_k_and_truth(num_truth: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Config("K must be >= 1".into()));
    }
    if num_truth == 0 {
        return Err(Error::Data("empty ground truth".into()));
    }
    Ok(())
}

pub fn hr_from_ranks(ranks: &[usize], k: usize) -> f64 {
    if ranks.iter().any(|&r| r <= k) {
        1.0
    } else {
        0.0
    }
}

pub fn ndcg_from_ranks(ranks: &[usize], num_truth: usize, k: usize) -> f64 {
    let dcg: f64 = ranks.iter().filter(|&&r| r <= k).map(|&r| discount(r)).sum();
    dcg / ideal_dcg(num_truth, k)
}

/// Mean HR/NDCG per cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ks: Vec<usize>,
    pub hr: Vec<f64>,
    pub ndcg: Vec<f64>,
    pub num_evaluated: usize,
    /// Users without a test item outside their train history.
    pub num_skipped: usize,
    /// Per-user metrics are averaged first, then over users.
    pub averaging: String,
    /// `(user, 1-based ranks of their truth items)` when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub user_ranks: Option<Vec<(u32, Vec<usize>)>>,
}

impl MetricsReport {
    pub fn hr_at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.hr[i])
    }

    pub fn ndcg_at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.ndcg[i])
    }
}

/// Test items of `user` that are not in their train history, sorted.
pub fn ground_truth(dataset: &InteractionSet, user: u32) -> Vec<u32> {
    let train = dataset.user_train_items(user);
    let mut t: Vec<u32> = dataset
        .test_items(user)
        .iter()
        .copied()
        .filter(|i| train.binary_search(i).is_err())
        .collect();
    t.sort_unstable();
    t.dedup();
    t
}

fn check_ks(ks: &[usize]) -> Result<()> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::Config("top-K list must be non-empty with every K >= 1".into()));
    }
    Ok(())
}

pub fn evaluate_all(
    nodes: ArrayView2<f64>,
    dataset: &InteractionSet,
    ks: &[usize],
    mode: ScoreMode,
    keep_ranks: bool,
) -> Result<MetricsReport> {
    check_ks(ks)?;
    if nodes.nrows() != dataset.num_users() + dataset.num_items() {
        return Err(Error::Shape(format!(
            "node matrix has {} rows, dataset has {} users + {} items",
            nodes.nrows(),
            dataset.num_users(),
            dataset.num_items()
        )));
    }
    let scorer = Scorer::new(nodes, dataset.num_users(), mode)?;
    let mut hr = vec![0.0; ks.len()];
    let mut ndcg = vec![0.0; ks.len()];
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    let mut user_ranks = Vec::new();
    for user in 0..dataset.num_users() as u32 {
        let truth = ground_truth(dataset, user);
        if truth.is_empty() {
            skipped += 1;
            continue;
        }
        let scores = scorer.scores(user)?;
        let exclude = dataset.user_train_items(user);
        let mut ranks: Vec<usize> = truth.iter().map(|&i| rank_of(&scores, exclude, i)).collect();
        ranks.sort_unstable();
        for (j, &k) in ks.iter().enumerate() {
            hr[j] += hr_from_ranks(&ranks, k);
            ndcg[j] += ndcg_from_ranks(&ranks, truth.len(), k);
        }
        evaluated += 1;
        if keep_ranks {
            user_ranks.push((user, ranks));
        }
    }
    if evaluated == 0 {
        return Err(Error::Data("no user has a test item outside their train history".into()));
    }
    let n = evaluated as f64;
    Ok(MetricsReport {
        ks: ks.to_vec(),
        hr: hr.into_iter().map(|v| v / n).collect(),
        ndcg: ndcg.into_iter().map(|v| v / n).collect(),
        num_evaluated: evaluated,
        num_skipped: skipped,
        averaging: "macro".into(),
        user_ranks: keep_ranks.then_some(user_ranks),
    })
}

/// Expected metrics when every candidate ordering is equally likely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomBaseline {
    pub k: usize,
    pub hr: f64,
    pub ndcg: f64,
    /// Standard deviation of the mean HR over users.
    pub hr_std_error: f64,
}

/// Per-user HR is hypergeometric: `1 − C(C−m, K)/C(C, K)` with `C` candidates
/// and `m` truths. Each truth lands at each position with probability `1/C`.
pub fn random_ranking_baseline(dataset: &InteractionSet, k: usize) -> Result<RandomBaseline> {
    check_ks(&[k])?;
    let (mut hr, mut ndcg, mut var, mut n) = (0.0, 0.0, 0.0, 0usize);
    for user in 0..dataset.num_users() as u32 {
        let m = ground_truth(dataset, user).len();
        if m == 0 {
            continue;
        }
        let c = dataset.num_items() - dataset.user_train_items(user).len();
        let mut miss = 1.0;
        for j in 0..k.min(c) {
            miss *= (c as f64 - m as f64 - j as f64).max(0.0) / (c - j) as f64;
        }
        let p = 1.0 - miss;
        hr += p;
        var += p * (1.0 - p);
        let dcg: f64 = (1..=k.min(c)).map(|pos| m as f64 / c as f64 * discount(pos)).sum();
        ndcg += dcg / ideal_dcg(m, k);
        n += 1;
    }
    if n == 0 {
        return Err(Error::Data("no evaluable users".into()));
    }
    let nf = n as f64;
    Ok(RandomBaseline {
        k,
        hr: hr / nf,
        ndcg: ndcg / nf,
        hr_std_error: var.sqrt() / nf,
    })
}
