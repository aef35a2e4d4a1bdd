use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// One review event: user `user_key` reviewed `item_key` at `timestamp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionRecord {
    pub user_key: String,
    pub item_key: String,
    pub timestamp: i64,
    pub review_text: Option<String>,
}

impl InteractionRecord {
    pub fn new(user: impl Into<String>, item: impl Into<String>, timestamp: i64) -> Self {
        InteractionRecord {
            user_key: user.into(),
            item_key: item.into(),
            timestamp,
            review_text: None,
        }
    }

    pub fn with_review(mut self, text: impl Into<String>) -> Self {
        self.review_text = Some(text.into());
        self
    }
}

/// Result of parsing an interaction file.
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub records: Vec<InteractionRecord>,
    /// 1-based line numbers that were skipped because they had fewer than
    /// three fields or an empty key.
    pub malformed_lines: Vec<usize>,
    pub had_header: bool,
}

/// Parses a tab-separated `user, item, timestamp[, review]` file.
///
/// The first line is treated as a header when its timestamp column is not an
/// integer. Any later non-integer (or negative) timestamp is a hard error.
pub fn load_interactions(path: &Path) -> Result<LoadReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_interactions(&text, path)
}

pub(crate) fn parse_interactions(text: &str, path: &Path) -> Result<LoadReport> {
    let mut records = Vec::new();
    let mut malformed_lines = Vec::new();
    let mut had_header = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(4, '\t');
        let (user, item, ts) = match (fields.next(), fields.next(), fields.next()) {
            (Some(u), Some(i), Some(t)) => (u.trim(), i.trim(), t.trim()),
            _ => {
                malformed_lines.push(line_no);
                continue;
            }
        };
        let review = fields.next().map(str::to_owned);

        let timestamp = match ts.parse::<i64>() {
            Ok(t) if t >= 0 => t,
            Ok(t) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("negative timestamp {t}"),
                })
            }
            Err(_) if records.is_empty() && malformed_lines.is_empty() && !had_header => {
                had_header = true;
                continue;
            }
            Err(_) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("non-integer timestamp field {ts:?}"),
                })
            }
        };
        if user.is_empty() || item.is_empty() {
            malformed_lines.push(line_no);
            continue;
        }
        records.push(InteractionRecord {
            user_key: user.to_owned(),
            item_key: item.to_owned(),
            timestamp,
            review_text: review,
        });
    }

    if !malformed_lines.is_empty() {
        log::warn!(
            "{}: skipped {} malformed line(s), first at line {}",
            path.display(),
            malformed_lines.len(),
            malformed_lines[0]
        );
    }
    if records.is_empty() {
        return Err(Error::NoRecords {
            path: path.to_path_buf(),
            malformed: malformed_lines.len(),
        });
    }
    Ok(LoadReport {
        records,
        malformed_lines,
        had_header,
    })
}

/// Iteratively drops users and items with fewer than `k` distinct partners
/// until every survivor has at least `k`. Input order is preserved.
pub fn k_core_filter(records: &[InteractionRecord], k: usize) -> Vec<InteractionRecord> {
    let mut alive = vec![true; records.len()];
    loop {
        let mut pairs: HashSet<(&str, &str)> = HashSet::new();
        for (r, _) in records.iter().zip(&alive).filter(|(_, a)| **a) {
            pairs.insert((r.user_key.as_str(), r.item_key.as_str()));
        }
        let mut user_deg: HashMap<&str, usize> = HashMap::new();
        let mut item_deg: HashMap<&str, usize> = HashMap::new();
        for (u, i) in &pairs {
            *user_deg.entry(u).or_default() += 1;
            *item_deg.entry(i).or_default() += 1;
        }

        let mut changed = false;
        for (r, a) in records.iter().zip(alive.iter_mut()) {
            if *a && (user_deg[r.user_key.as_str()] < k || item_deg[r.item_key.as_str()] < k) {
                *a = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    records
        .iter()
        .zip(&alive)
        .filter(|(_, a)| **a)
        .map(|(r, _)| r.clone())
        .collect()
}
