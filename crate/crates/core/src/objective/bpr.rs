use ndarray::{Array2, ArrayView2};

use crate::dataio::UserHistory;
use crate::{Error, Result};

/// `(user, positive item, negative item)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BprTriple {
    pub user: u32,
    pub positive: u32,
    pub negative: u32,
}

#[derive(Debug, Clone)]
pub struct BprOutput {
    /// Sum over triples.
    pub loss: f64,
    /// Gradient w.r.t. the node matrix (users, then items).
    pub grad: Array2<f64>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `Σ −log σ(g_u·g_{v+} − g_u·g_{v−})` over `triples`.
///
/// `nodes` holds users first, then items; callers pass normalized rows when
/// training on the sphere.
pub fn bpr_loss(
    nodes: ArrayView2<f64>,
    num_users: usize,
    triples: &[BprTriple],
    history: &UserHistory,
) -> Result<BprOutput> {
    let num_items = nodes.nrows().saturating_sub(num_users);
    let mut grad = Array2::zeros(nodes.dim());
    let mut loss = 0.0;
    for t in triples {
        if (t.user as usize) >= num_users || (t.positive as usize) >= num_items || (t.negative as usize) >= num_items {
            return Err(Error::Data(format!("BPR triple {t:?} out of range")));
        }
        if !history.contains(t.user, t.positive) {
            return Err(Error::Data(format!(
                "BPR triple {t:?}: positive item was not interacted with"
            )));
        }
        if history.contains(t.user, t.negative) {
            return Err(Error::Data(format!("BPR triple {t:?}: negative item was interacted with")));
        }
        let u = t.user as usize;
        let p = num_users + t.positive as usize;
        let n = num_users + t.negative as usize;
        let gu = nodes.row(u);
        let gp = nodes.row(p);
        let gn = nodes.row(n);
        let margin = gu.dot(&gp) - gu.dot(&gn);
        loss += softplus(-margin);
        // d/dm [−log σ(m)] = −σ(−m)
        let c = -sigmoid(-margin);
        let diff = &gp - &gn;
        grad.row_mut(u).scaled_add(c, &diff);
        grad.row_mut(p).scaled_add(c, &gu);
        grad.row_mut(n).scaled_add(-c, &gu);
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("BPR loss".into()));
    }
    Ok(BprOutput { loss, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn history() -> UserHistory {
        UserHistory::from_pairs(1, [(0, 0)])
    }

    #[test]
    fn equal_scores_give_ln2() {
        // user row orthogonal to both items
        let nodes = array![[1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let t = BprTriple { user: 0, positive: 0, negative: 1 };
        let out = bpr_loss(nodes.view(), 1, &[t], &history()).unwrap();
        assert!((out.loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn monotone_in_the_gap() {
        let t = BprTriple { user: 0, positive: 0, negative: 1 };
        let at = |gap: f64| {
            let nodes = array![[1.0], [gap], [0.0]];
            bpr_loss(nodes.view(), 1, &[t], &history()).unwrap().loss
        };
        assert!(at(10.0) < 1e-4);
        assert!(at(-10.0) > 9.99);
        assert!(at(10.0) < at(0.0) && at(0.0) < at(-10.0));
    }

    #[test]
    fn sums_over_triples() {
        let nodes = array![[1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let t = BprTriple { user: 0, positive: 0, negative: 1 };
        let one = bpr_loss(nodes.view(), 1, &[t], &history()).unwrap().loss;
        let three = bpr_loss(nodes.view(), 1, &[t, t, t], &history()).unwrap().loss;
        assert!((three - 3.0 * one).abs() < 1e-12);
    }

    #[test]
    fn invalid_triples_are_rejected() {
        let nodes = Array2::<f64>::ones((3, 2));
        let h = history();
        let swapped = BprTriple { user: 0, positive: 1, negative: 0 };
        assert!(bpr_loss(nodes.view(), 1, &[swapped], &h).is_err());
        let oob = BprTriple { user: 0, positive: 0, negative: 9 };
        assert!(bpr_loss(nodes.view(), 1, &[oob], &h).is_err());
    }
}
