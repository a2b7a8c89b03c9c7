use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seeding::{self, stream};

/// Random partition of `0..n` into `k` folds of near-equal size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    k: usize,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.fold_of[i]
    }

    pub fn folds(&self) -> &[usize] {
        &self.fold_of
    }

    /// Row indices of fold `f`, ascending.
    pub fn members(&self, f: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] == f).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.fold_of {
            s[f] += 1;
        }
        s
    }
}

pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::Invalid(format!("fold count must satisfy 2 <= K <= n, got K={k}, n={n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeding::rng(seed, &[stream::FOLDS, n as u64, k as u64]));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % k;
    }
    Ok(FoldAssignment { fold_of, k })
}
