use rand::seq::SliceRandom;
use rand::Rng;

use super::{Corpus, CorpusError};

/// Per-document partition of token instances into training and held-out sets.
#[derive(Clone, Debug, PartialEq)]
pub struct HeldOutSplit {
    train: Vec<Vec<u32>>,
    test: Vec<Vec<u32>>,
    train_fraction: f64,
}

impl HeldOutSplit {
    /// Assemble a split directly from token lists (term ids per document).
    pub fn from_parts(train: Vec<Vec<u32>>, test: Vec<Vec<u32>>, train_fraction: f64) -> Self {
        assert_eq!(train.len(), test.len(), "train/test document counts differ");
        Self {
            train,
            test,
            train_fraction,
        }
    }

    pub fn num_docs(&self) -> usize {
        self.train.len()
    }

    pub fn train(&self) -> &[Vec<u32>] {
        &self.train
    }

    pub fn test(&self) -> &[Vec<u32>] {
        &self.test
    }

    pub fn train_fraction(&self) -> f64 {
        self.train_fraction
    }

    pub fn num_train_tokens(&self) -> usize {
        self.train.iter().map(Vec::len).sum()
    }

    pub fn num_test_tokens(&self) -> usize {
        self.test.iter().map(Vec::len).sum()
    }
}

/// Training size for a document of `n` tokens: round-half-up of `frac * n`, at least one.
pub fn train_size(n: usize, frac: f64) -> usize {
    ((frac * n as f64 + 0.5).floor() as usize).clamp(1, n)
}

/// Mark a uniformly random subset of each document's tokens as training data.
pub fn split_train_test<R: Rng + ?Sized>(corpus: &Corpus, frac: f64, rng: &mut R) -> Result<HeldOutSplit, CorpusError> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(CorpusError::Domain {
            param: "train_fraction",
            value: frac,
        });
    }
    let mut train = Vec::with_capacity(corpus.num_docs());
    let mut test = Vec::with_capacity(corpus.num_docs());
    for j in 0..corpus.num_docs() {
        let mut tokens = corpus.tokens(j);
        if tokens.is_empty() {
            return Err(CorpusError::EmptyDocument(j));
        }
        let n_train = train_size(tokens.len(), frac);
        let (chosen, rest) = tokens.partial_shuffle(rng, n_train);
        let mut tr = chosen.to_vec();
        let mut te = rest.to_vec();
        tr.sort_unstable();
        te.sort_unstable();
        train.push(tr);
        test.push(te);
    }
    Ok(HeldOutSplit {
        train,
        test,
        train_fraction: frac,
    })
}
