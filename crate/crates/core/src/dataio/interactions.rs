use std::collections::HashMap;

use super::records::InteractionRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainInteraction {
    pub user: u32,
    pub item: u32,
    pub timestamp: i64,
    /// Row of the text-embedding matrix holding this interaction's review.
    pub embedding_row: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestInteraction {
    pub user: u32,
    pub item: u32,
    pub timestamp: i64,
}

/// Per-user sorted, deduplicated set of training items.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserHistory {
    items: Vec<Vec<u32>>,
}

impl UserHistory {
    pub fn from_pairs(num_users: usize, pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut items = vec![Vec::new(); num_users];
        for (u, i) in pairs {
            items[u as usize].push(i);
        }
        for list in &mut items {
            list.sort_unstable();
            list.dedup();
        }
        UserHistory { items }
    }

    pub fn contains(&self, user: u32, item: u32) -> bool {
        self.items[user as usize].binary_search(&item).is_ok()
    }

    pub fn items(&self, user: u32) -> &[u32] {
        &self.items[user as usize]
    }

    pub fn num_users(&self) -> usize {
        self.items.len()
    }
}

/// The slice of a dataset the trainer is allowed to see: training rows and
/// the training-time interaction history. It carries no test rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainPartition {
    pub num_users: usize,
    pub num_items: usize,
    pub interactions: Vec<TrainInteraction>,
    pub history: UserHistory,
}

impl TrainPartition {
    pub fn len(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }

    /// Distinct (user, item) pairs in first-appearance order.
    pub fn distinct_pairs(&self) -> Vec<(u32, u32)> {
        let mut seen = std::collections::HashSet::new();
        self.interactions
            .iter()
            .filter(|r| seen.insert((r.user, r.item)))
            .map(|r| (r.user, r.item))
            .collect()
    }

    /// Number of training interactions per item (duplicates included).
    pub fn item_frequencies(&self) -> Vec<usize> {
        let mut freq = vec![0; self.num_items];
        for r in &self.interactions {
            freq[r.item as usize] += 1;
        }
        freq
    }
}

/// Indexed, temporally split interaction data.
#[derive(Debug, Clone)]
pub struct InteractionSet {
    user_keys: Vec<String>,
    item_keys: Vec<String>,
    train: TrainPartition,
    train_reviews: Vec<Option<String>>,
    test: Vec<TestInteraction>,
    test_by_user: Vec<Vec<u32>>,
}

/// Number of training rows for a user with `n` interactions: `ceil(n * fraction)`,
/// capped so at least one interaction is held out whenever `n >= 2`.
pub fn train_count(n: usize, fraction: f64) -> usize {
    if n <= 1 {
        return n;
    }
    let raw = (n as f64 * fraction - 1e-9).ceil().max(1.0) as usize;
    raw.min(n - 1)
}

/// Splits each user's history chronologically; the earliest `train_fraction`
/// goes to training. Equal timestamps keep input order.
pub fn temporal_split(records: &[InteractionRecord], train_fraction: f64) -> Result<InteractionSet> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    if records.is_empty() {
        return Err(Error::Data("cannot split an empty interaction list".into()));
    }

    let mut per_user: HashMap<&str, Vec<usize>> = HashMap::new();
    for (idx, r) in records.iter().enumerate() {
        per_user.entry(r.user_key.as_str()).or_default().push(idx);
    }
    let mut is_train = vec![false; records.len()];
    for rows in per_user.values_mut() {
        rows.sort_by_key(|&i| (records[i].timestamp, i));
        let n_train = train_count(rows.len(), train_fraction);
        for &i in &rows[..n_train] {
            is_train[i] = true;
        }
    }

    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by_key(|&i| (records[i].timestamp, i));
    let (train_rows, test_rows): (Vec<usize>, Vec<usize>) =
        order.into_iter().partition(|&i| is_train[i]);

    let mut users = KeyIndex::default();
    let mut items = KeyIndex::default();
    for &i in &train_rows {
        users.get_or_insert(&records[i].user_key);
        items.get_or_insert(&records[i].item_key);
    }
    for &i in &test_rows {
        items.get_or_insert(&records[i].item_key);
    }

    let train = train_rows
        .iter()
        .map(|&i| {
            let r = &records[i];
            (
                users.index[r.user_key.as_str()],
                items.index[r.item_key.as_str()],
                r.timestamp,
                r.review_text.clone(),
            )
        })
        .collect();
    let test = test_rows
        .iter()
        .map(|&i| {
            let r = &records[i];
            TestInteraction {
                user: users.index[r.user_key.as_str()],
                item: items.index[r.item_key.as_str()],
                timestamp: r.timestamp,
            }
        })
        .collect();
    InteractionSet::from_parts(users.keys, items.keys, train, test)
}

#[derive(Default)]
struct KeyIndex {
    keys: Vec<String>,
    index: HashMap<String, u32>,
}

impl KeyIndex {
    fn get_or_insert(&mut self, key: &str) -> u32 {
        if let Some(&i) = self.index.get(key) {
            return i;
        }
        let i = self.keys.len() as u32;
        self.keys.push(key.to_owned());
        self.index.insert(key.to_owned(), i);
        i
    }
}

impl InteractionSet {
    /// Assembles a dataset from already-indexed rows. Train rows receive
    /// embedding rows in the order given.
    pub fn from_parts(
        user_keys: Vec<String>,
        item_keys: Vec<String>,
        train: Vec<(u32, u32, i64, Option<String>)>,
        test: Vec<TestInteraction>,
    ) -> Result<Self> {
        let num_users = user_keys.len();
        let num_items = item_keys.len();
        let check = |u: u32, i: u32| -> Result<()> {
            if (u as usize) >= num_users || (i as usize) >= num_items {
                return Err(Error::Data(format!(
                    "interaction ({u}, {i}) out of range for {num_users} users x {num_items} items"
                )));
            }
            Ok(())
        };

        let mut interactions = Vec::with_capacity(train.len());
        let mut train_reviews = Vec::with_capacity(train.len());
        let mut last_train = vec![i64::MIN; num_users];
        for (row, (u, i, ts, review)) in train.into_iter().enumerate() {
            check(u, i)?;
            last_train[u as usize] = last_train[u as usize].max(ts);
            interactions.push(TrainInteraction {
                user: u,
                item: i,
                timestamp: ts,
                embedding_row: row,
            });
            train_reviews.push(review);
        }
        let mut test_by_user = vec![Vec::new(); num_users];
        for t in &test {
            check(t.user, t.item)?;
            if t.timestamp < last_train[t.user as usize] {
                return Err(Error::Data(format!(
                    "test interaction of user {} at {} precedes a training interaction",
                    t.user, t.timestamp
                )));
            }
            test_by_user[t.user as usize].push(t.item);
        }
        for list in &mut test_by_user {
            list.sort_unstable();
            list.dedup();
        }

        let history = UserHistory::from_pairs(num_users, interactions.iter().map(|r| (r.user, r.item)));
        Ok(InteractionSet {
            user_keys,
            item_keys,
            train: TrainPartition {
                num_users,
                num_items,
                interactions,
                history,
            },
            train_reviews,
            test,
            test_by_user,
        })
    }

    pub fn num_users(&self) -> usize {
        self.user_keys.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_keys.len()
    }

    pub fn user_keys(&self) -> &[String] {
        &self.user_keys
    }

    pub fn item_keys(&self) -> &[String] {
        &self.item_keys
    }

    pub fn train(&self) -> &TrainPartition {
        &self.train
    }

    pub fn train_reviews(&self) -> &[Option<String>] {
        &self.train_reviews
    }

    pub fn test(&self) -> &[TestInteraction] {
        &self.test
    }

    /// Distinct held-out items of `user`, sorted.
    pub fn test_items(&self, user: u32) -> &[u32] {
        &self.test_by_user[user as usize]
    }

    pub fn user_train_items(&self, user: u32) -> &[u32] {
        self.train.history.items(user)
    }

    /// Users with at least one held-out item that is not also a training item.
    pub fn num_evaluable_users(&self) -> usize {
        (0..self.num_users() as u32)
            .filter(|&u| self.test_items(u).iter().any(|&i| !self.train.history.contains(u, i)))
            .count()
    }

    /// Replaces the held-out rows. Used to show the trainer never reads them.
    pub fn with_test(&self, test: Vec<TestInteraction>) -> Result<Self> {
        let train = self
            .train
            .interactions
            .iter()
            .zip(&self.train_reviews)
            .map(|(r, rev)| (r.user, r.item, r.timestamp, rev.clone()))
            .collect();
        InteractionSet::from_parts(self.user_keys.clone(), self.item_keys.clone(), train, test)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(u: &str, i: &str, t: i64) -> InteractionRecord {
        InteractionRecord::new(u, i, t)
    }

    #[test]
    fn five_interactions_split_four_one() {
        let recs: Vec<_> = (1..=5).map(|t| rec("u", &format!("i{t}"), t)).collect();
        let ds = temporal_split(&recs, 0.8).unwrap();
        let train_ts: Vec<i64> = ds.train().interactions.iter().map(|r| r.timestamp).collect();
        assert_eq!(train_ts, vec![1, 2, 3, 4]);
        assert_eq!(ds.test().len(), 1);
        assert_eq!(ds.test()[0].timestamp, 5);
    }

    #[test]
    fn split_rule_keeps_a_test_item() {
        for n in 2..=10 {
            let tr = train_count(n, 0.8);
            let expected = ((n as f64 * 0.8).ceil() as usize).min(n - 1);
            assert_eq!(tr, expected, "n={n}");
            assert!(tr >= 1 && n - tr >= 1, "n={n}");
        }
        assert_eq!(train_count(2, 0.8), 1);
        assert_eq!(train_count(1, 0.8), 1);
    }

    #[test]
    fn shared_item_is_indexed_once() {
        let recs = vec![rec("a", "x", 1), rec("a", "y", 2), rec("b", "x", 1), rec("b", "z", 2)];
        let ds = temporal_split(&recs, 0.5).unwrap();
        assert_eq!(ds.num_users(), 2);
        assert_eq!(ds.num_items(), 3);
    }

    #[test]
    fn ties_follow_file_order() {
        let recs = vec![rec("u", "first", 7), rec("u", "second", 7), rec("u", "third", 7)];
        let ds = temporal_split(&recs, 0.5).unwrap();
        let train: Vec<&str> = ds
            .train()
            .interactions
            .iter()
            .map(|r| ds.item_keys()[r.item as usize].as_str())
            .collect();
        assert_eq!(train, vec!["first", "second"]);
        assert_eq!(ds.item_keys()[ds.test()[0].item as usize], "third");
    }

    #[test]
    fn cold_test_items_stay_in_catalogue() {
        let recs = vec![rec("u", "a", 1), rec("u", "cold", 2)];
        let ds = temporal_split(&recs, 0.8).unwrap();
        assert_eq!(ds.num_items(), 2);
        assert_eq!(ds.test_items(0), &[1]);
        assert_eq!(ds.train().item_frequencies(), vec![1, 0]);
    }

    #[test]
    fn single_interaction_user_is_train_only() {
        let recs = vec![rec("solo", "a", 1), rec("u", "a", 1), rec("u", "b", 2)];
        let ds = temporal_split(&recs, 0.8).unwrap();
        assert_eq!(ds.train().len(), 2);
        assert_eq!(ds.num_evaluable_users(), 1);
    }

    #[test]
    fn rejects_bad_fraction() {
        let recs = vec![rec("u", "a", 1)];
        assert!(temporal_split(&recs, 1.0).is_err());
        assert!(temporal_split(&recs, 0.0).is_err());
    }

    #[test]
    fn embedding_rows_are_dense() {
        let recs: Vec<_> = (0..20).map(|t| rec(&format!("u{}", t % 3), &format!("i{}", t % 7), t)).collect();
        let ds = temporal_split(&recs, 0.8).unwrap();
        for (pos, r) in ds.train().interactions.iter().enumerate() {
            assert_eq!(r.embedding_row, pos);
        }
    }
}
