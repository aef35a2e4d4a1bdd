use rand::Rng;

use crate::dataio::TrainPartition;
use crate::objective::BprTriple;
use crate::{Error, Result};

/// Items in `0..num_items` that `user` never interacted with, drawn uniformly.
pub fn sample_negative<R: Rng + ?Sized>(train: &TrainPartition, user: u32, rng: &mut R) -> Result<u32> {
    let seen = train.history.items(user);
    let n = train.num_items;
    if seen.len() >= n {
        return Err(Error::Data(format!(
            "user {user} interacted with all {n} items; no negative to sample"
        )));
    }
    if seen.len() * 2 <= n {
        loop {
            let v = rng.random_range(0..n as u32);
            if seen.binary_search(&v).is_err() {
                return Ok(v);
            }
        }
    }
    // dense history: index directly into the complement
    let mut r = rng.random_range(0..(n - seen.len()) as u32);
    for &s in seen {
        if s <= r {
            r += 1;
        } else {
            break;
        }
    }
    Ok(r)
}

/// One `(u_i, v_i, v⁻)` per batch interaction.
pub fn sample_bpr_triples<R: Rng + ?Sized>(train: &TrainPartition, batch: &[usize], rng: &mut R) -> Result<Vec<BprTriple>> {
    batch
        .iter()
        .map(|&r| {
            let x = train
                .interactions
                .get(r)
                .ok_or_else(|| Error::Data(format!("batch row {r} outside the train partition")))?;
            Ok(BprTriple {
                user: x.user,
                positive: x.item,
                negative: sample_negative(train, x.user, rng)?,
            })
        })
        .collect()
}
