//! On-disk layout of a prepared dataset directory:
//!
//! ```text
//! manifest.toml     counts, split sizes, content hashes
//! users.tsv         user keys, one per line, in index order
//! items.tsv         item keys (full catalogue, cold items included)
//! train.tsv         user \t item \t timestamp \t review ; line r = embedding row r
//! test.tsv          user \t item \t timestamp
//! embeddings.symc   optional text embeddings (see `embedding_file`)
//! ground_truth.bin  optional, synthetic datasets only
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::embedding_file::{read_embedding_file, write_embedding_file};
use super::interactions::{InteractionSet, TestInteraction};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const EMBEDDINGS_FILE: &str = "embeddings.symc";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.bin";
const USERS_FILE: &str = "users.tsv";
const ITEMS_FILE: &str = "items.tsv";
const TRAIN_FILE: &str = "train.tsv";
const TEST_FILE: &str = "test.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub source: String,
    pub num_users: usize,
    pub num_items: usize,
    pub num_train: usize,
    pub num_test: usize,
    pub num_eval_users: usize,
    pub train_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_core: Option<usize>,
    /// SHA-256 of `train.tsv`; text exporters record it to prove row alignment.
    pub train_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<EmbeddingInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingInfo {
    pub file: String,
    pub count: usize,
    pub dim: usize,
    pub sha256: String,
}

#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub dir: PathBuf,
    pub manifest: DatasetManifest,
    pub dataset: InteractionSet,
    pub text: Option<Array2<f32>>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `dataset` (and optional text embeddings) into `dir`.
pub fn write_prepared(
    dir: &Path,
    dataset: &InteractionSet,
    text: Option<ArrayView2<f32>>,
    source: &str,
    train_fraction: f64,
    k_core: Option<usize>,
) -> Result<DatasetManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let users = dataset.user_keys();
    let items = dataset.item_keys();

    let mut buf = String::new();
    for k in users {
        writeln!(buf, "{k}").unwrap();
    }
    write_file(&dir.join(USERS_FILE), buf.as_bytes())?;

    buf.clear();
    for k in items {
        writeln!(buf, "{k}").unwrap();
    }
    write_file(&dir.join(ITEMS_FILE), buf.as_bytes())?;

    buf.clear();
    for (r, review) in dataset.train().interactions.iter().zip(dataset.train_reviews()) {
        let review = review.as_deref().unwrap_or("");
        writeln!(buf, "{}\t{}\t{}\t{}", users[r.user as usize], items[r.item as usize], r.timestamp, review).unwrap();
    }
    let train_sha256 = sha256_hex(buf.as_bytes());
    write_file(&dir.join(TRAIN_FILE), buf.as_bytes())?;

    buf.clear();
    for t in dataset.test() {
        writeln!(buf, "{}\t{}\t{}", users[t.user as usize], items[t.item as usize], t.timestamp).unwrap();
    }
    write_file(&dir.join(TEST_FILE), buf.as_bytes())?;

    let embeddings = match text {
        Some(t) => {
            if t.nrows() != dataset.train().len() {
                return Err(Error::Shape(format!(
                    "{} embedding rows for {} training interactions",
                    t.nrows(),
                    dataset.train().len()
                )));
            }
            let path = dir.join(EMBEDDINGS_FILE);
            write_embedding_file(&path, t)?;
            Some(EmbeddingInfo {
                file: EMBEDDINGS_FILE.to_string(),
                count: t.nrows(),
                dim: t.ncols(),
                sha256: sha256_file(&path)?,
            })
        }
        None => None,
    };

    let manifest = DatasetManifest {
        format_version: 1,
        source: source.to_string(),
        num_users: dataset.num_users(),
        num_items: dataset.num_items(),
        num_train: dataset.train().len(),
        num_test: dataset.test().len(),
        num_eval_users: dataset.num_evaluable_users(),
        train_fraction,
        k_core,
        train_sha256,
        embeddings,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    write_file(&dir.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(manifest)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l).to_string()).collect())
}

fn index_of(keys: &[String]) -> HashMap<&str, u32> {
    keys.iter().enumerate().map(|(i, k)| (k.as_str(), i as u32)).collect()
}

fn parse_row<'a>(
    path: &Path,
    line_no: usize,
    line: &'a str,
    users: &HashMap<&str, u32>,
    items: &HashMap<&str, u32>,
) -> Result<(u32, u32, i64, Option<&'a str>)> {
    let bad = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line: line_no,
        message,
    };
    let mut f = line.splitn(4, '\t');
    let (u, i, t) = match (f.next(), f.next(), f.next()) {
        (Some(u), Some(i), Some(t)) => (u, i, t),
        _ => return Err(bad("expected at least 3 tab-separated fields".into())),
    };
    let user = *users.get(u).ok_or_else(|| bad(format!("unknown user {u:?}")))?;
    let item = *items.get(i).ok_or_else(|| bad(format!("unknown item {i:?}")))?;
    let ts = t.parse::<i64>().map_err(|_| bad(format!("non-integer timestamp {t:?}")))?;
    Ok((user, item, ts, f.next()))
}

/// Loads a directory written by [`write_prepared`], verifying its manifest.
pub fn load_prepared(dir: &Path) -> Result<PreparedDataset> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: DatasetManifest =
        toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", manifest_path.display())))?;

    let user_keys = read_lines(&dir.join(USERS_FILE))?;
    let item_keys = read_lines(&dir.join(ITEMS_FILE))?;
    let users = index_of(&user_keys);
    let items = index_of(&item_keys);

    let train_path = dir.join(TRAIN_FILE);
    let train_bytes = fs::read(&train_path).map_err(|e| Error::io(&train_path, e))?;
    if sha256_hex(&train_bytes) != manifest.train_sha256 {
        return Err(Error::Data(format!("{} does not match the manifest hash", train_path.display())));
    }
    let train_text = String::from_utf8(train_bytes).map_err(|e| Error::Format(e.to_string()))?;
    let mut train = Vec::new();
    for (n, line) in train_text.lines().enumerate() {
        let (u, i, t, review) = parse_row(&train_path, n + 1, line, &users, &items)?;
        let review = review.filter(|r| !r.is_empty()).map(str::to_string);
        train.push((u, i, t, review));
    }

    let test_path = dir.join(TEST_FILE);
    let mut test = Vec::new();
    for (n, line) in read_lines(&test_path)?.iter().enumerate() {
        let (user, item, timestamp, _) = parse_row(&test_path, n + 1, line, &users, &items)?;
        test.push(TestInteraction { user, item, timestamp });
    }

    let dataset = InteractionSet::from_parts(user_keys, item_keys, train, test)?;
    if dataset.num_users() != manifest.num_users
        || dataset.num_items() != manifest.num_items
        || dataset.train().len() != manifest.num_train
        || dataset.test().len() != manifest.num_test
    {
        return Err(Error::Data(format!("{} disagrees with the data files", manifest_path.display())));
    }

    let text = match &manifest.embeddings {
        Some(info) => {
            let path = dir.join(&info.file);
            if sha256_file(&path)? != info.sha256 {
                return Err(Error::Data(format!("{} does not match the manifest hash", path.display())));
            }
            let m = read_embedding_file(&path)?;
            if m.nrows() != manifest.num_train {
                return Err(Error::Shape(format!(
                    "{} has {} rows for {} training interactions",
                    path.display(),
                    m.nrows(),
                    manifest.num_train
                )));
            }
            Some(m)
        }
        None => None,
    };

    Ok(PreparedDataset {
        dir: dir.to_path_buf(),
        manifest,
        dataset,
        text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{temporal_split, InteractionRecord};

    #[test]
    fn prepared_round_trip() {
        let recs: Vec<_> = (0..30)
            .map(|t| InteractionRecord::new(format!("u{}", t % 4), format!("i{}", t % 9), t).with_review(format!("r{t}")))
            .collect();
        let ds = temporal_split(&recs, 0.8).unwrap();
        let text = Array2::from_shape_fn((ds.train().len(), 3), |(r, c)| (r * 3 + c) as f32);
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_prepared(dir.path(), &ds, Some(text.view()), "test", 0.8, None).unwrap();
        let back = load_prepared(dir.path()).unwrap();
        assert_eq!(back.manifest, manifest);
        assert_eq!(back.dataset.train(), ds.train());
        assert_eq!(back.dataset.test(), ds.test());
        assert_eq!(back.dataset.train_reviews(), ds.train_reviews());
        assert_eq!(back.text.unwrap(), text);
    }

    #[test]
    fn tampered_train_file_is_detected() {
        let recs: Vec<_> = (0..6).map(|t| InteractionRecord::new("u", format!("i{t}"), t)).collect();
        let ds = temporal_split(&recs, 0.5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_prepared(dir.path(), &ds, None, "test", 0.5, None).unwrap();
        let p = dir.path().join(TRAIN_FILE);
        let mut t = fs::read_to_string(&p).unwrap();
        t.push_str("u\ti0\t99\t\n");
        fs::write(&p, t).unwrap();
        assert!(load_prepared(dir.path()).is_err());
    }
}
