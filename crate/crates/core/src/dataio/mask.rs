use super::interactions::TrainPartition;

/// Boolean `|B| x |B|` matrix; entry `(i, j)` is true when batch row `j` may
/// serve as a negative for anchor `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeMask {
    size: usize,
    allowed: Vec<bool>,
}

impl NegativeMask {
    /// Every off-diagonal entry is a negative (plain InfoNCE).
    pub fn full(size: usize) -> Self {
        let mut allowed = vec![true; size * size];
        for i in 0..size {
            allowed[i * size + i] = false;
        }
        NegativeMask { size, allowed }
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut allowed = vec![false; size * size];
        for i in 0..size {
            for j in 0..size {
                allowed[i * size + j] = i != j && f(i, j);
            }
        }
        NegativeMask { size, allowed }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn is_negative(&self, anchor: usize, candidate: usize) -> bool {
        self.allowed[anchor * self.size + candidate]
    }

    /// Number of off-diagonal entries removed relative to [`NegativeMask::full`].
    pub fn num_excluded(&self) -> usize {
        let kept = self.allowed.iter().filter(|&&a| a).count();
        self.size * self.size.saturating_sub(1) - kept
    }
}

/// Builds the true-negative mask for a batch of training rows: `j` is a
/// negative for anchor `i` iff `j != i` and the anchor's user has no training
/// interaction with item `v_j`.
pub fn build_negative_mask(batch: &[usize], train: &TrainPartition) -> NegativeMask {
    let rows: Vec<_> = batch.iter().map(|&b| train.interactions[b]).collect();
    NegativeMask::from_fn(rows.len(), |i, j| !train.history.contains(rows[i].user, rows[j].item))
}
