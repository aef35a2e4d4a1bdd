mod common;

use std::collections::{BTreeSet, HashMap};

use ndarray::Array2;
use proptest::prelude::*;
use symcere::dataio::{k_core_filter, temporal_split, train_count, InteractionRecord, NegativeMask};
use symcere::evaluator::{hr_at_k, ndcg_at_k, rank_by_scores};
use symcere::objective::{infonce_cross_modal, symcere_cross_modal};

/// Largest edge subset where every endpoint has degree ≥ k, by exhaustion.
fn brute_force_core(pairs: &[(u8, u8)], k: usize) -> BTreeSet<(u8, u8)> {
    let n = pairs.len();
    let mut best = BTreeSet::new();
    for mask in 0u32..(1 << n) {
        let subset: Vec<_> = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| pairs[b]).collect();
        let mut du: HashMap<u8, usize> = HashMap::new();
        let mut di: HashMap<u8, usize> = HashMap::new();
        for &(u, i) in &subset {
            *du.entry(u).or_default() += 1;
            *di.entry(i).or_default() += 1;
        }
        if subset.iter().all(|(u, i)| du[u] >= k && di[i] >= k) && subset.len() > best.len() {
            best = subset.into_iter().collect();
        }
    }
    best
}

fn matrix(rows: usize, cols: usize, values: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((rows, cols), values[..rows * cols].to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn k_core_is_the_maximal_core(
        raw in prop::collection::btree_set((0u8..4, 0u8..4), 0..12),
        k in 1usize..4,
        dup in 0usize..3,
    ) {
        let pairs: Vec<_> = raw.into_iter().collect();
        let mut recs: Vec<_> = pairs
            .iter()
            .map(|(u, i)| InteractionRecord::new(format!("u{u}"), format!("i{i}"), 0))
            .collect();
        // duplicate rows never add degree
        for j in 0..dup.min(recs.len()) {
            recs.push(recs[j].clone());
        }
        let kept: BTreeSet<(u8, u8)> = k_core_filter(&recs, k)
            .iter()
            .map(|r| (r.user_key[1..].parse().unwrap(), r.item_key[1..].parse().unwrap()))
            .collect();
        prop_assert_eq!(kept, brute_force_core(&pairs, k));
    }

    #[test]
    fn split_is_chronological_per_user(
        stamps in prop::collection::vec((0u8..6, 0u8..20, 0i64..50), 1..60),
        fraction in 0.1f64..0.95,
    ) {
        let recs: Vec<_> = stamps
            .iter()
            .map(|(u, i, t)| InteractionRecord::new(format!("u{u}"), format!("i{i}"), *t))
            .collect();
        let ds = temporal_split(&recs, fraction).unwrap();
        let mut per_user = vec![0usize; ds.num_users()];
        let mut last_train = vec![i64::MIN; ds.num_users()];
        for r in &ds.train().interactions {
            per_user[r.user as usize] += 1;
            last_train[r.user as usize] = last_train[r.user as usize].max(r.timestamp);
        }
        let mut held = vec![0usize; ds.num_users()];
        for t in ds.test() {
            prop_assert!(t.timestamp >= last_train[t.user as usize]);
            held[t.user as usize] += 1;
        }
        for u in 0..ds.num_users() {
            prop_assert_eq!(per_user[u], train_count(per_user[u] + held[u], fraction));
        }
        prop_assert_eq!(ds.train().len() + ds.test().len(), recs.len());
    }

    #[test]
    fn ranking_is_a_sorted_permutation(
        scores in prop::collection::vec(-3i32..3, 1..40),
        excl in prop::collection::btree_set(0u32..40, 0..10),
    ) {
        let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
        let exclude: Vec<u32> = excl.into_iter().filter(|&e| (e as usize) < scores.len()).collect();
        let ranked = rank_by_scores(&scores, &exclude);
        prop_assert_eq!(ranked.len(), scores.len() - exclude.len());
        prop_assert!(ranked.iter().all(|r| !exclude.contains(r)));
        for w in ranked.windows(2) {
            let (a, b) = (w[0] as usize, w[1] as usize);
            prop_assert!(scores[a] > scores[b] || (scores[a] == scores[b] && a < b));
        }
    }

    #[test]
    fn metrics_are_bounded_and_monotone(
        n in 1usize..30,
        truth in prop::collection::btree_set(0u32..30, 1..5),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let mut ranked: Vec<u32> = (0..n as u32).collect();
        ranked.shuffle(&mut common::rng(seed));
        let truth: Vec<u32> = truth.into_iter().collect();
        let (mut prev_hr, mut prev_ndcg) = (0.0, 0.0);
        for k in 1..=n + 1 {
            let hr = hr_at_k(&ranked, &truth, k).unwrap();
            let ndcg = ndcg_at_k(&ranked, &truth, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&hr));
            prop_assert!((0.0..=1.0 + 1e-12).contains(&ndcg));
            prop_assert!(hr >= prev_hr);
            if truth.len() == 1 {
                // a single relevant item: NDCG = 1/log2(rank+1) ≤ 1 = HR, and NDCG grows with K
                prop_assert!(ndcg <= hr);
                prop_assert!(ndcg >= prev_ndcg);
            }
            prev_hr = hr;
            prev_ndcg = ndcg;
        }
    }

    #[test]
    fn masked_loss_never_exceeds_infonce(
        b in 1usize..8,
        d in 1usize..6,
        values in prop::collection::vec(-2.0f64..2.0, 2 * 8 * 6),
        keep in prop::collection::vec(any::<bool>(), 64),
        tau in 0.05f64..2.0,
    ) {
        let g = matrix(b, d, &values);
        let t = matrix(b, d, &values[b * d..]);
        let mask = NegativeMask::from_fn(b, |i, j| keep[i * 8 + j]);
        let masked = symcere_cross_modal(g.view(), t.view(), &mask, tau).unwrap().loss;
        let full = infonce_cross_modal(g.view(), t.view(), tau).unwrap().loss;
        prop_assert!(masked >= 0.0);
        prop_assert!(masked <= full + 1e-12);
        if mask.num_excluded() == 0 {
            prop_assert!((masked - full).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_is_invariant_to_batch_order(
        b in 2usize..7,
        values in prop::collection::vec(-1.0f64..1.0, 2 * 7 * 3),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let g = matrix(b, 3, &values);
        let t = matrix(b, 3, &values[b * 3..]);
        let mut perm: Vec<usize> = (0..b).collect();
        perm.shuffle(&mut common::rng(seed));
        let keep = |i: usize, j: usize| (i * 7 + j * 3) % 4 != 0;
        let mask = NegativeMask::from_fn(b, keep);
        let pmask = NegativeMask::from_fn(b, |i, j| keep(perm[i], perm[j]));
        let pg = g.select(ndarray::Axis(0), &perm);
        let pt = t.select(ndarray::Axis(0), &perm);
        let a = symcere_cross_modal(g.view(), t.view(), &mask, 0.2).unwrap().loss;
        let p = symcere_cross_modal(pg.view(), pt.view(), &pmask, 0.2).unwrap().loss;
        prop_assert!((a - p).abs() < 1e-12);
    }
}
