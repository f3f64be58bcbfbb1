//! Hierarchical dyadic partitions of a 1-D event domain.
//!
//! Level `r` of a tree with `R` levels splits the domain into `2^r` half-open
//! bins; bin `ℓ` at level `r` is the union of bins `2ℓ - 1` and `2ℓ` at level
//! `r + 1`. Bin and node indices in the public API are 1-based.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Half-open interval `[lo, hi)` on which events live.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return invalid("domain requires finite lo < hi");
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x < self.hi
    }
}

/// Immutable hierarchical dyadic partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionTree {
    #[serde(rename = "R")]
    levels: usize,
    /// `boundaries[r]` holds the `2^r + 1` cut points of level `r`.
    boundaries: Vec<Vec<f64>>,
}

/// Largest supported depth; `2^R` leaves must stay addressable comfortably.
pub const MAX_LEVELS: usize = 24;

fn check_levels(levels: usize) -> Result<()> {
    if levels < 1 {
        return invalid("partition needs at least one resolution level");
    }
    if levels > MAX_LEVELS {
        return invalid("too many resolution levels");
    }
    Ok(())
}

impl PartitionTree {
    /// Recursive halving: every bin at level `r` has width `|domain| / 2^r`.
    pub fn equal_width(domain: Domain, levels: usize) -> Result<Self> {
        check_levels(levels)?;
        let width = domain.width();
        let boundaries = (0..=levels)
            .map(|r| {
                let k = 1usize << r;
                (0..=k)
                    .map(|i| {
                        if i == k {
                            domain.hi
                        } else {
                            domain.lo + width * (i as f64) / (k as f64)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { levels, boundaries })
    }

    /// Data-dependent partition: every split sends `⌊k/2⌋` of the parent's `k`
    /// points to the left child, cutting halfway between the two straddling
    /// points. Parents without points are cut at their midpoint.
    ///
    /// `positions` must be sorted. With tied positions an exact split may be
    /// impossible; the cut then still lands at the straddling value.
    pub fn equal_count(positions: &[f64], domain: Domain, levels: usize) -> Result<Self> {
        check_levels(levels)?;
        if positions.iter().any(|&x| !domain.contains(x)) {
            return invalid("position outside the domain");
        }
        if positions.windows(2).any(|w| w[0] > w[1]) {
            return invalid("positions must be sorted");
        }
        let mut boundaries: Vec<Vec<f64>> = Vec::with_capacity(levels + 1);
        boundaries.push(alloc::vec![domain.lo, domain.hi]);
        // Index ranges of `positions` per bin of the current level.
        let mut ranges: Vec<(usize, usize)> = alloc::vec![(0, positions.len())];
        for _ in 0..levels {
            let prev = boundaries.last().expect("level 0 present");
            let mut next = Vec::with_capacity(2 * prev.len() - 1);
            let mut next_ranges = Vec::with_capacity(2 * ranges.len());
            for (i, &(start, end)) in ranges.iter().enumerate() {
                let (a, b) = (prev[i], prev[i + 1]);
                let pts = &positions[start..end];
                let cut = split_point(pts, a, b);
                let left = start + pts.partition_point(|&x| x < cut);
                next.push(a);
                next.push(cut);
                next_ranges.push((start, left));
                next_ranges.push((left, end));
            }
            next.push(domain.hi);
            boundaries.push(next);
            ranges = next_ranges;
        }
        Ok(Self { levels, boundaries })
    }

    /// Number of resolution levels `R` (level 0 is the whole domain).
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn domain(&self) -> Domain {
        Domain { lo: self.boundaries[0][0], hi: self.boundaries[0][1] }
    }

    /// Cut points of level `r`.
    pub fn boundaries(&self, r: usize) -> &[f64] {
        &self.boundaries[r]
    }

    /// Number of bins at level `r`.
    pub fn bins(&self, r: usize) -> usize {
        1 << r
    }

    /// Interval `[lo, hi)` of bin `ℓ` (1-based) at level `r`.
    pub fn region(&self, r: usize, l: usize) -> Result<(f64, f64)> {
        if r > self.levels || l < 1 || l > self.bins(r) {
            return invalid("region index out of range");
        }
        let b = &self.boundaries[r];
        Ok((b[l - 1], b[l]))
    }

    /// 1-based index of the level-`r` bin containing `x`.
    pub fn locate(&self, x: f64, r: usize) -> Result<usize> {
        if r > self.levels {
            return invalid("level exceeds tree depth");
        }
        if !self.domain().contains(x) {
            return invalid("position outside the domain");
        }
        Ok(self.locate_unchecked(x, r) + 1)
    }

    /// 0-based bin of `x` at level `r`; `x` must lie in the domain.
    pub(crate) fn locate_unchecked(&self, x: f64, r: usize) -> usize {
        let b = &self.boundaries[r];
        // Number of interior cut points <= x.
        let idx = b[1..b.len() - 1].partition_point(|&c| c <= x);
        idx.min(b.len() - 2)
    }

    /// 0-based leaf (level `R`) index of every position.
    pub(crate) fn leaf_indices(&self, positions: &[f64]) -> Vec<u32> {
        positions.iter().map(|&x| self.locate_unchecked(x, self.levels) as u32).collect()
    }
}

fn split_point(pts: &[f64], a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let k = pts.len();
    let cut = match k {
        0 => mid,
        1 => {
            if pts[0] > a {
                0.5 * (a + pts[0])
            } else {
                0.5 * (pts[0] + b)
            }
        }
        _ => {
            let left = k / 2;
            0.5 * (pts[left - 1] + pts[left])
        }
    };
    if cut > a && cut < b {
        cut
    } else {
        mid
    }
}

/// Descendant index set `L(s, j, r)`: the 1-based indices of the level-`r`
/// bins that partition bin `j` of level `s`.
pub fn descendants(s: usize, j: usize, r: usize) -> Result<core::ops::RangeInclusive<usize>> {
    if r < s {
        return invalid("descendant level must not be above the node level");
    }
    if j < 1 || j > (1usize << s) {
        return invalid("node index out of range");
    }
    let width = 1usize << (r - s);
    let first = width * (j - 1) + 1;
    Ok(first..=first + width - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn equal_width_levels() {
        let t = PartitionTree::equal_width(Domain::unit(), 1).unwrap();
        assert_eq!(t.boundaries(1), &[0.0, 0.5, 1.0]);
        let t = PartitionTree::equal_width(Domain::unit(), 3).unwrap();
        assert_eq!(t.region(3, 5).unwrap(), (0.5, 0.625));
        for l in 1..=8 {
            let (a, b) = t.region(3, l).unwrap();
            assert!((b - a - 0.125).abs() < 1e-15);
        }
        let t = PartitionTree::equal_width(Domain::new(2.0, 4.0).unwrap(), 2).unwrap();
        assert_eq!(t.boundaries(2), &[2.0, 2.5, 3.0, 3.5, 4.0]);
    }

    #[test]
    fn zero_levels_rejected() {
        assert!(PartitionTree::equal_width(Domain::unit(), 0).is_err());
        assert!(PartitionTree::equal_count(&[], Domain::unit(), 0).is_err());
    }

    #[test]
    fn equal_count_examples() {
        let t = PartitionTree::equal_count(&[0.1, 0.2, 0.9], Domain::unit(), 1).unwrap();
        assert!((t.boundaries(1)[1] - 0.15).abs() < 1e-15);
        assert_eq!(t.locate(0.1, 1).unwrap(), 1);
        assert_eq!(t.locate(0.2, 1).unwrap(), 2);
        let t = PartitionTree::equal_count(&[], Domain::unit(), 1).unwrap();
        assert_eq!(t.boundaries(1), &[0.0, 0.5, 1.0]);
        let t = PartitionTree::equal_count(&[0.25, 0.75], Domain::unit(), 1).unwrap();
        assert_eq!(t.boundaries(1), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn equal_count_rejects_outside_positions() {
        assert!(PartitionTree::equal_count(&[1.0], Domain::unit(), 2).is_err());
        assert!(PartitionTree::equal_count(&[-0.1], Domain::unit(), 2).is_err());
    }

    #[test]
    fn descendant_examples() {
        assert_eq!(descendants(1, 2, 2).unwrap().collect::<Vec<_>>(), vec![3, 4]);
        assert_eq!(descendants(0, 1, 3).unwrap().collect::<Vec<_>>(), (1..=8).collect::<Vec<_>>());
        assert_eq!(descendants(2, 3, 2).unwrap().collect::<Vec<_>>(), vec![3]);
        assert!(descendants(2, 1, 1).is_err());
    }

    #[test]
    fn locate_examples() {
        let t2 = PartitionTree::equal_width(Domain::unit(), 2).unwrap();
        assert_eq!(t2.locate(0.3, 2).unwrap(), 2);
        let t3 = PartitionTree::equal_width(Domain::unit(), 3).unwrap();
        assert_eq!(t3.locate(0.0, 3).unwrap(), 1);
        assert_eq!(t3.locate(0.999, 3).unwrap(), 8);
        assert_eq!(t3.locate(0.5, 1).unwrap(), 2);
        assert!(t3.locate(1.0, 3).is_err());
        assert!(t3.locate(-0.5, 3).is_err());
    }

    fn sorted_points() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, 0..200).prop_map(|mut v| {
            v.sort_by(f64::total_cmp);
            v
        })
    }

    proptest! {
        #[test]
        fn nesting_and_coverage(pts in sorted_points(), levels in 1usize..7, eq in any::<bool>()) {
            let t = if eq {
                PartitionTree::equal_count(&pts, Domain::unit(), levels).unwrap()
            } else {
                PartitionTree::equal_width(Domain::unit(), levels).unwrap()
            };
            for r in 1..=levels {
                let b = t.boundaries(r);
                prop_assert_eq!(b.len(), (1 << r) + 1);
                prop_assert!(b.windows(2).all(|w| w[0] < w[1]));
                for l in 1..=(1usize << r) {
                    let (a, c) = t.region(r, l).unwrap();
                    let (pa, pc) = t.region(r - 1, l.div_ceil(2)).unwrap();
                    prop_assert!(pa <= a && c <= pc);
                }
                // every point lands in exactly one bin, consistent with its parent
                for &x in &pts {
                    let l = t.locate(x, r).unwrap();
                    let (a, c) = t.region(r, l).unwrap();
                    prop_assert!(a <= x && x < c);
                    prop_assert_eq!(t.locate(x, r - 1).unwrap(), l.div_ceil(2));
                }
            }
        }

        #[test]
        fn equal_count_halves(pts in proptest::collection::btree_set(0u32..1_000_000, 0..300), levels in 1usize..6) {
            let pts: Vec<f64> = pts.into_iter().map(|k| k as f64 / 1_000_000.0).collect();
            let t = PartitionTree::equal_count(&pts, Domain::unit(), levels).unwrap();
            for r in 0..levels {
                for l in 1..=(1usize << r) {
                    let count = |rr: usize, ll: usize| pts.iter().filter(|&&x| t.locate(x, rr).unwrap() == ll).count();
                    let k = count(r, l);
                    prop_assert_eq!(count(r + 1, 2 * l - 1), k / 2);
                    prop_assert_eq!(count(r + 1, 2 * l), k - k / 2);
                }
            }
        }

        #[test]
        fn descendants_split_over_children(s in 0usize..6, extra in 1usize..4, jj in any::<usize>()) {
            let r = s + extra;
            let j = jj % (1 << s) + 1;
            let all: Vec<usize> = descendants(s, j, r).unwrap().collect();
            let mut kids: Vec<usize> = descendants(s + 1, 2 * j - 1, r).unwrap().collect();
            kids.extend(descendants(s + 1, 2 * j, r).unwrap());
            prop_assert_eq!(all, kids);
        }
    }
}
