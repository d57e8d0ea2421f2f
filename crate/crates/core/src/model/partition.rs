use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A partition of `{0, .., n-1}` in canonical form.
///
/// `gamma[i]` is the smallest element of the block holding `i`, so two
/// partitions are equal exactly when their labellings are.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    gamma: Vec<usize>,
}

impl Partition {
    pub fn singletons(n: usize) -> Self {
        Self {
            gamma: (0..n).collect(),
        }
    }

    /// Accept a labelling that is already canonical.
    pub fn from_gamma(gamma: Vec<usize>) -> Result<Self> {
        for (i, &g) in gamma.iter().enumerate() {
            if g > i || gamma[g] != g {
                return invalid(format!("label {g} at {i} is not canonical"));
            }
        }
        Ok(Self { gamma })
    }

    /// Build from explicit blocks covering `0..n` exactly once.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut gamma = vec![usize::MAX; n];
        for block in blocks {
            let Some(&min) = block.iter().min() else {
                return invalid("empty block");
            };
            for &i in block {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, len: n });
                }
                if gamma[i] != usize::MAX {
                    return invalid(format!("element {i} appears twice"));
                }
                gamma[i] = min;
            }
        }
        if let Some(i) = gamma.iter().position(|&g| g == usize::MAX) {
            return invalid(format!("element {i} is in no block"));
        }
        Ok(Self { gamma })
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn gamma(&self) -> &[usize] {
        &self.gamma
    }

    /// Smallest element of the block holding `i`.
    pub fn block_of(&self, i: usize) -> Result<usize> {
        self.gamma.get(i).copied().ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.len(),
        })
    }

    pub fn same_block(&self, i: usize, j: usize) -> Result<bool> {
        Ok(self.block_of(i)? == self.block_of(j)?)
    }

    pub fn block_count(&self) -> usize {
        self.gamma.iter().enumerate().filter(|&(i, &g)| i == g).count()
    }

    /// Block sizes ordered by smallest element.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.len()];
        for &g in &self.gamma {
            sizes[g] += 1;
        }
        sizes.into_iter().filter(|&s| s > 0).collect()
    }

    /// Block sizes divided by `n`.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.len() as f64;
        self.block_sizes().into_iter().map(|s| s as f64 / n).collect()
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.len()];
        for (i, &g) in self.gamma.iter().enumerate() {
            if slot[g] == usize::MAX {
                slot[g] = out.len();
                out.push(Vec::new());
            }
            out[slot[g]].push(i);
        }
        out
    }

    /// The partition with the blocks of `i` and `j` joined.
    pub fn merge_blocks(&self, i: usize, j: usize) -> Result<Self> {
        self.block_of(i)?;
        self.block_of(j)?;
        let mut p = self.clone();
        p.merge_in_place(i, j);
        Ok(p)
    }

    /// Join two blocks; returns false when they were already one block.
    pub(crate) fn merge_in_place(&mut self, i: usize, j: usize) -> bool {
        let (a, b) = (self.gamma[i], self.gamma[j]);
        if a == b {
            return false;
        }
        let (keep, drop) = if a < b { (a, b) } else { (b, a) };
        for g in self.gamma.iter_mut().skip(drop) {
            if *g == drop {
                *g = keep;
            }
        }
        true
    }
}
