use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SplitScheme {
    /// Rotating k-fold cross validation.
    KFold { k: usize },
    /// Single train/validation/test partition with the given ratios.
    Tvt { train: u32, validation: u32, test: u32 },
}

impl SplitScheme {
    pub const KFOLD5: SplitScheme = SplitScheme::KFold { k: 5 };
    pub const TVT_811: SplitScheme = SplitScheme::Tvt {
        train: 8,
        validation: 1,
        test: 1,
    };
}

impl fmt::Display for SplitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SplitScheme::KFold { k } => write!(f, "kfold{k}"),
            SplitScheme::Tvt {
                train,
                validation,
                test,
            } if train < 10 && validation < 10 && test < 10 => {
                write!(f, "tvt_{train}{validation}{test}")
            }
            SplitScheme::Tvt {
                train,
                validation,
                test,
            } => write!(f, "tvt_{train}_{validation}_{test}"),
        }
    }
}

impl FromStr for SplitScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("unknown split scheme {s:?}");
        if let Some(k) = s.strip_prefix("kfold") {
            let k = k.parse().map_err(|_| bad())?;
            return Ok(SplitScheme::KFold { k });
        }
        let rest = s.strip_prefix("tvt_").ok_or_else(bad)?;
        let parts: Vec<u32> = if rest.contains('_') {
            rest.split('_').map(|p| p.parse().map_err(|_| bad())).collect::<Result<_, _>>()?
        } else {
            rest.chars().map(|c| c.to_digit(10).ok_or_else(bad)).collect::<Result<_, _>>()?
        };
        match parts[..] {
            [train, validation, test] => Ok(SplitScheme::Tvt {
                train,
                validation,
                test,
            }),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for SplitScheme {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SplitScheme> for String {
    fn from(s: SplitScheme) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SplitLabel {
    Fold(usize),
    Partition(Partition),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub scheme: SplitScheme,
    pub seed: u64,
    pub assignment: BTreeMap<String, SplitLabel>,
}

/// Ids used in one iteration of k-fold rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldRotation {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

fn shuffled(ids: &[String], seed: u64) -> Result<Vec<String>, CorpusError> {
    let unique: BTreeSet<&String> = ids.iter().collect();
    if unique.len() != ids.len() {
        return Err(CorpusError::Argument("split input contains duplicate ids".into()));
    }
    // sorted first so the result only depends on the id set and the seed
    let mut out: Vec<String> = unique.into_iter().cloned().collect();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(out)
}

pub fn make_kfold_splits(ids: &[String], k: usize, seed: u64) -> Result<SplitAssignment, CorpusError> {
    if k < 2 {
        return Err(CorpusError::Argument(format!("k must be at least 2, got {k}")));
    }
    if ids.len() < k {
        return Err(CorpusError::Argument(format!(
            "need at least {k} ids for {k}-fold splits, got {}",
            ids.len()
        )));
    }
    let assignment = shuffled(ids, seed)?
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id, SplitLabel::Fold(i % k)))
        .collect();
    Ok(SplitAssignment {
        scheme: SplitScheme::KFold { k },
        seed,
        assignment,
    })
}

/// Partitions ids by `(train, validation, test)` ratios. Validation and test
/// sizes are floored; the remainder goes to training.
pub fn make_tvt_split(
    ids: &[String],
    ratios: (u32, u32, u32),
    seed: u64,
) -> Result<SplitAssignment, CorpusError> {
    let (train, validation, test) = ratios;
    let total = (train + validation + test) as usize;
    if total == 0 {
        return Err(CorpusError::Argument("split ratios sum to zero".into()));
    }
    if ids.len() < total {
        return Err(CorpusError::Argument(format!(
            "need at least {total} ids for a {train}:{validation}:{test} split, got {}",
            ids.len()
        )));
    }
    let n = ids.len();
    let n_val = n * validation as usize / total;
    let n_test = n * test as usize / total;
    let assignment = shuffled(ids, seed)?
        .into_iter()
        .enumerate()
        .map(|(i, id)| {
            let part = if i < n_val {
                Partition::Validation
            } else if i < n_val + n_test {
                Partition::Test
            } else {
                Partition::Train
            };
            (id, SplitLabel::Partition(part))
        })
        .collect();
    Ok(SplitAssignment {
        scheme: SplitScheme::Tvt {
            train,
            validation,
            test,
        },
        seed,
        assignment,
    })
}

impl SplitAssignment {
    pub fn ids_with(&self, label: SplitLabel) -> Vec<String> {
        self.assignment
            .iter()
            .filter(|(_, l)| **l == label)
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// Sizes per label, ordered by label.
    pub fn sizes(&self) -> BTreeMap<SplitLabel, usize> {
        let mut out = BTreeMap::new();
        for label in self.assignment.values() {
            *out.entry(*label).or_insert(0) += 1;
        }
        out
    }

    /// Iteration `i` tests fold `i`, validates fold `(i + 1) mod k` and
    /// trains on the rest.
    pub fn rotation(&self, iteration: usize) -> Option<FoldRotation> {
        let SplitScheme::KFold { k } = self.scheme else {
            return None;
        };
        if iteration >= k {
            return None;
        }
        let val_fold = (iteration + 1) % k;
        let mut rot = FoldRotation {
            train: Vec::new(),
            validation: Vec::new(),
            test: Vec::new(),
        };
        for (id, label) in &self.assignment {
            let SplitLabel::Fold(f) = *label else { continue };
            if f == iteration {
                rot.test.push(id.clone());
            } else if f == val_fold {
                rot.validation.push(id.clone());
            } else {
                rot.train.push(id.clone());
            }
        }
        Some(rot)
    }

    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        let body = serde_json::to_string_pretty(self).expect("split serializes");
        std::fs::write(path, body + "\n").map_err(|e| CorpusError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CorpusError> {
        let body = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        serde_json::from_str(&body).map_err(|e| CorpusError::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// Split files live next to the manifest: `<stem>.split.<scheme>.json`.
pub fn split_file_path(manifest: &Path, scheme: SplitScheme) -> PathBuf {
    let stem = manifest
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "manifest".into());
    manifest.with_file_name(format!("{stem}.split.{scheme}.json"))
}
