use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FoldScheme {
    /// One fold per episode, holding that episode out for validation.
    LeaveOneOut,
    /// A single fold over consecutive episodes in the given counts.
    FixedSplit { train: usize, validation: usize, test: usize },
}

/// Episode indices by role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Fold {
    /// Episodes metrics are reported on: the test set when present, the
    /// validation set otherwise.
    pub fn evaluation(&self) -> &[usize] {
        if self.test.is_empty() {
            &self.validation
        } else {
            &self.test
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

pub fn make_folds(n_episodes: usize, scheme: FoldScheme) -> Result<FoldPlan, Error> {
    match scheme {
        FoldScheme::LeaveOneOut => {
            if n_episodes < 2 {
                return Err(Error::InsufficientEpisodes { needed: 2, got: n_episodes });
            }
            let folds = (0..n_episodes)
                .map(|held| Fold {
                    train: (0..n_episodes).filter(|&i| i != held).collect(),
                    validation: vec![held],
                    test: Vec::new(),
                })
                .collect();
            Ok(FoldPlan { folds })
        }
        FoldScheme::FixedSplit { train, validation, test } => {
            if train == 0 || validation == 0 {
                return Err(Error::InvalidConfig("fixed split needs training and validation episodes".into()));
            }
            let needed = train + validation + test;
            if n_episodes < needed {
                return Err(Error::InsufficientEpisodes { needed, got: n_episodes });
            }
            Ok(FoldPlan {
                folds: vec![Fold {
                    train: (0..train).collect(),
                    validation: (train..train + validation).collect(),
                    test: (train + validation..needed).collect(),
                }],
            })
        }
    }
}
