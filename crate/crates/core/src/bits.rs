//! Dense bit vectors.
//!
//! One type serves two roles: element sets of a finite space and vectors over
//! the two-element field.

use std::fmt;

use serde::{Deserialize, Serialize};

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet {
            len,
            words: vec![0; len.div_ceil(WORD)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = Self::new(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::new(len);
        for i in indices {
            s.insert(i);
        }
        s
    }

    /// Unit vector `e_i`.
    pub fn unit(len: usize, i: usize) -> Self {
        Self::from_indices(len, [i])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] &= !(1 << (i % WORD));
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1 << (i % WORD);
    }

    pub fn set(&mut self, i: usize, value: bool) {
        if value {
            self.insert(i)
        } else {
            self.remove(i)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn first(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * WORD + w.trailing_zeros() as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * WORD + t)
                }
            })
        })
    }

    pub fn union_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn difference_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    /// Addition over the two-element field.
    pub fn xor_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn union(&self, other: &BitSet) -> BitSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn intersection(&self, other: &BitSet) -> BitSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    /// Inner product over the two-element field.
    pub fn dot(&self, other: &BitSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Incremental row echelon basis over GF(2).
///
/// Every stored row carries a tag vector; reducing a vector against the basis
/// accumulates the tags of the rows used, which is how coordinates are read
/// off (see the cohomology module).
#[derive(Clone, Debug)]
pub struct Echelon {
    width: usize,
    tag_width: usize,
    // sorted by pivot, each row has its pivot as lowest set bit
    rows: Vec<(usize, BitSet, BitSet)>,
}

impl Echelon {
    pub fn new(width: usize, tag_width: usize) -> Self {
        Echelon {
            width,
            tag_width,
            rows: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Reduces `v` as far as possible; returns the residual and the tag sum of
    /// the rows used.
    pub fn reduce(&self, v: &BitSet) -> (BitSet, BitSet) {
        let mut v = v.clone();
        let mut tag = BitSet::new(self.tag_width);
        for (pivot, row, row_tag) in &self.rows {
            if v.contains(*pivot) {
                v.xor_with(row);
                tag.xor_with(row_tag);
            }
        }
        (v, tag)
    }

    pub fn contains(&self, v: &BitSet) -> bool {
        self.reduce(v).0.is_empty()
    }

    /// Inserts `v` with tag `tag`. Returns `false` (and stores nothing) when
    /// `v` is already in the span.
    pub fn insert(&mut self, v: &BitSet, tag: BitSet) -> bool {
        let (residual, used) = self.reduce(v);
        let Some(pivot) = residual.first() else {
            return false;
        };
        let mut tag = tag;
        tag.xor_with(&used);
        // keep rows sorted by pivot; later rows never have earlier pivots set
        // after reduction, but earlier rows may have this pivot set
        let pos = self.rows.partition_point(|(p, _, _)| *p < pivot);
        for (_, row, row_tag) in self.rows.iter_mut().take(pos) {
            if row.contains(pivot) {
                row.xor_with(&residual);
                row_tag.xor_with(&tag);
            }
        }
        self.rows.insert(pos, (pivot, residual, tag));
        true
    }
}

/// Basis of `{ c : rows · c = 0 }` for a matrix given by its rows.
pub fn kernel(rows: &[BitSet], ncols: usize) -> Vec<BitSet> {
    // reduced row echelon form
    let mut m: Vec<BitSet> = rows.iter().filter(|r| !r.is_empty()).cloned().collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        let Some(k) = (r..m.len()).find(|&k| m[k].contains(col)) else {
            continue;
        };
        m.swap(r, k);
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row.contains(col) {
                row.xor_with(&pivot_row);
            }
        }
        pivots.push(col);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    let is_pivot = BitSet::from_indices(ncols, pivots.iter().copied());
    (0..ncols)
        .filter(|&c| !is_pivot.contains(c))
        .map(|free| {
            let mut v = BitSet::unit(ncols, free);
            for (row, &p) in m.iter().zip(&pivots) {
                if row.contains(free) {
                    v.insert(p);
                }
            }
            v
        })
        .collect()
}

pub fn rank(rows: &[BitSet]) -> usize {
    let Some(first) = rows.first() else { return 0 };
    let mut e = Echelon::new(first.len(), 0);
    rows.iter().filter(|r| e.insert(r, BitSet::new(0))).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(len: usize, bits: &[usize]) -> BitSet {
        BitSet::from_indices(len, bits.iter().copied())
    }

    #[test]
    fn set_ops() {
        let a = v(130, &[0, 64, 129]);
        let b = v(130, &[64, 65]);
        assert_eq!(a.union(&b).iter().collect::<Vec<_>>(), vec![0, 64, 65, 129]);
        assert_eq!(a.intersection(&b).iter().collect::<Vec<_>>(), vec![64]);
        assert_eq!(a.count(), 3);
        assert!(v(130, &[64]).is_subset(&a));
        assert!(!b.is_subset(&a));
        assert_eq!(a.first(), Some(0));
        assert!(a.dot(&b));
    }

    #[test]
    fn kernel_of_boundary_of_triangle() {
        // edges 01, 02, 12 as columns; one row per vertex incidence
        let rows = vec![v(3, &[0, 1]), v(3, &[0, 2]), v(3, &[1, 2])];
        let ker = kernel(&rows, 3);
        assert_eq!(ker.len(), 1);
        assert_eq!(ker[0], v(3, &[0, 1, 2]));
        assert_eq!(rank(&rows), 2);
    }

    #[test]
    fn echelon_tags_track_combinations() {
        let mut e = Echelon::new(4, 2);
        assert!(e.insert(&v(4, &[0, 1]), BitSet::unit(2, 0)));
        assert!(e.insert(&v(4, &[1, 2]), BitSet::unit(2, 1)));
        assert!(!e.insert(&v(4, &[0, 2]), BitSet::new(2)));
        let (res, tag) = e.reduce(&v(4, &[0, 2]));
        assert!(res.is_empty());
        assert_eq!(tag, v(2, &[0, 1]));
    }
}
