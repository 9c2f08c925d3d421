use crate::error::{Error, Result};

/// A parameter-gradient vector stored as `(index, value)` pairs.
///
/// Indices are strictly increasing and below `dim`. Entries that are exactly
/// zero may be omitted; models built on spline windows never store them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseGrad {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseGrad {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, cap: usize) -> Self {
        Self {
            dim,
            entries: Vec::with_capacity(cap),
        }
    }

    /// Build from entries, validating ordering and bounds.
    pub fn from_entries(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::InvalidConfig(format!(
                    "sparse indices not strictly increasing at {}",
                    w[1].0
                )));
            }
        }
        if let Some(&(last, _)) = entries.last() {
            if last >= dim {
                return Err(Error::SizeMismatch {
                    expected: dim,
                    got: last + 1,
                });
            }
        }
        Ok(Self { dim, entries })
    }

    /// Dense vector to sparse, dropping exact zeros.
    pub fn from_dense(dense: &[f64]) -> Self {
        Self {
            dim: dense.len(),
            entries: dense
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
        }
    }

    /// Append an entry. Callers must push in strictly increasing index order.
    #[inline]
    pub(crate) fn push(&mut self, index: usize, value: f64) {
        debug_assert!(index < self.dim);
        debug_assert!(self.entries.last().is_none_or(|(i, _)| *i < index));
        self.entries.push((index, value));
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    /// Number of stored entries whose value is non-zero.
    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|(_, v)| *v != 0.0).count()
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v.abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.nnz() == 0
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    /// `out += scale · self`.
    pub fn axpy_into(&self, scale: f64, out: &mut [f64]) -> Result<()> {
        if out.len() != self.dim {
            return Err(Error::SizeMismatch {
                expected: self.dim,
                got: out.len(),
            });
        }
        for &(i, v) in &self.entries {
            out[i] += scale * v;
        }
        Ok(())
    }

    /// True when no index carries a non-zero value in both vectors.
    pub fn support_disjoint(&self, other: &SparseGrad) -> bool {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        while let (Some(&&(i, vi)), Some(&&(j, vj))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    if vi != 0.0 && vj != 0.0 {
                        return false;
                    }
                    a.next();
                    b.next();
                }
            }
        }
        true
    }

    /// Dot product via a sorted merge; disjoint supports give exactly `0.0`.
    pub fn dot(&self, other: &SparseGrad) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.entries.len() && b < other.entries.len() {
            let (i, vi) = self.entries[a];
            let (j, vj) = other.entries[b];
            match i.cmp(&j) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += vi * vj;
                    a += 1;
                    b += 1;
                }
            }
        }
        Ok(acc)
    }
}
