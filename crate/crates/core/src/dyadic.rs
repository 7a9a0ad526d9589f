//! Dyadic intervals on `[1, ∞)`.
//!
//! A level-`ℓ` interval with index `k ≥ 1` covers `[k·2^ℓ, (k+1)·2^ℓ − 1]`.
//! Intervals that would start at position 0 are not part of the set, so a
//! position `t` lies in exactly `⌊log₂ t⌋ + 1` intervals.

use std::fmt;

use thiserror::Error;

/// Largest level an interval may have; positions are `u64`.
pub const MAX_LEVEL: u32 = 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DyadicError {
    #[error("invalid range [{a}, {b}]: need 1 <= a <= b")]
    InvalidRange { a: u64, b: u64 },
}

/// `⌊log₂ n⌋` for `n ≥ 1`, computed with bit operations.
#[inline]
pub fn floor_log2(n: u64) -> u32 {
    debug_assert!(n >= 1);
    63 - n.leading_zeros()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicInterval {
    level: u32,
    index: u64,
}

impl DyadicInterval {
    /// Returns `None` unless `index ≥ 1` and the interval fits in `u64`.
    pub fn new(level: u32, index: u64) -> Option<Self> {
        if index == 0 || level > MAX_LEVEL {
            return None;
        }
        let start = index.checked_shl(level)?;
        if start >> level != index {
            return None;
        }
        start.checked_add((1u64 << level) - 1)?;
        Some(Self { level, index })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn start(&self) -> u64 {
        self.index << self.level
    }

    /// Inclusive end position.
    pub fn end(&self) -> u64 {
        self.start() + (self.len() - 1)
    }

    pub fn len(&self) -> u64 {
        1u64 << self.level
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: u64) -> bool {
        self.start() <= t && t <= self.end()
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start(), self.end())
    }
}

/// The level-`level` interval containing `t`, or `None` when that interval
/// would start at 0.
pub fn containing_interval(t: u64, level: u32) -> Option<DyadicInterval> {
    if t == 0 || level > MAX_LEVEL {
        return None;
    }
    DyadicInterval::new(level, t >> level)
}

/// Iterator over the intervals containing `t`, lowest level first.
#[derive(Debug, Clone)]
pub struct Intersecting {
    t: u64,
    level: u32,
    top: u32,
}

impl Iterator for Intersecting {
    type Item = DyadicInterval;

    fn next(&mut self) -> Option<DyadicInterval> {
        if self.t == 0 || self.level > self.top {
            return None;
        }
        let level = self.level;
        self.level += 1;
        Some(DyadicInterval {
            level,
            index: self.t >> level,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = if self.t == 0 || self.level > self.top {
            0
        } else {
            (self.top - self.level + 1) as usize
        };
        (n, Some(n))
    }
}

impl ExactSizeIterator for Intersecting {}

pub fn intersecting(t: u64) -> Intersecting {
    Intersecting {
        t,
        level: 0,
        top: if t == 0 { 0 } else { floor_log2(t) },
    }
}

/// All intervals containing `t` (`⌊log₂ t⌋ + 1` of them), lowest level first.
pub fn intersect(t: u64) -> Vec<DyadicInterval> {
    intersecting(t).collect()
}

/// Disjoint dyadic intervals exactly covering a range, sorted by start.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Decomposition {
    intervals: Vec<DyadicInterval>,
}

impl Decomposition {
    pub fn intervals(&self) -> &[DyadicInterval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DyadicInterval> {
        self.intervals.iter()
    }

    pub fn contains(&self, interval: &DyadicInterval) -> bool {
        self.intervals
            .binary_search_by_key(&interval.start(), |i| i.start())
            .map(|pos| self.intervals[pos] == *interval)
            .unwrap_or(false)
    }

    /// The unique interval covering `t`, if `t` is inside the range.
    pub fn covering(&self, t: u64) -> Option<&DyadicInterval> {
        let pos = self.intervals.partition_point(|i| i.start() <= t);
        let candidate = self.intervals.get(pos.checked_sub(1)?)?;
        candidate.contains(t).then_some(candidate)
    }

    /// Number of intervals at each level, indexed by level.
    pub fn level_counts(&self) -> LevelCounts {
        let mut counts = LevelCounts::default();
        for i in &self.intervals {
            counts.add(i.level, 1);
        }
        counts
    }

    pub fn max_level(&self) -> Option<u32> {
        self.intervals.iter().map(|i| i.level).max()
    }
}

impl<'a> IntoIterator for &'a Decomposition {
    type Item = &'a DyadicInterval;
    type IntoIter = std::slice::Iter<'a, DyadicInterval>;

    fn into_iter(self) -> Self::IntoIter {
        self.intervals.iter()
    }
}

/// Per-level multiplicities of a set of intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelCounts([u8; (MAX_LEVEL + 1) as usize]);

impl Default for LevelCounts {
    fn default() -> Self {
        Self([0; (MAX_LEVEL + 1) as usize])
    }
}

impl LevelCounts {
    pub fn get(&self, level: u32) -> u8 {
        self.0[level as usize]
    }

    pub fn add(&mut self, level: u32, n: u8) {
        self.0[level as usize] += n;
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    /// `Σ_ℓ count(ℓ)·weight(ℓ)`, summed from level 0 upward.
    pub fn weighted_sum(&self, mut weight: impl FnMut(u32) -> f64) -> f64 {
        let mut sum = 0.0;
        for (level, &c) in self.0.iter().enumerate() {
            if c > 0 {
                sum += c as f64 * weight(level as u32);
            }
        }
        sum
    }
}

/// The dyadic decomposition of `[a, b]`.
///
/// The range is split at `c = 2^⌊log₂ b⌋ − 1`. `[a, c]` is covered from `c`
/// downward with blocks given by the binary digits of its length (largest
/// first), and `[c+1, b]` from `c+1` upward the same way. When `a > c` both
/// ends share the top bit and the whole range is covered greedily from `a`
/// with the largest aligned block that fits. Either way the result is the set
/// of maximal dyadic intervals inside `[a, b]`.
pub fn decompose(a: u64, b: u64) -> Result<Decomposition, DyadicError> {
    if a == 0 || a > b {
        return Err(DyadicError::InvalidRange { a, b });
    }
    let split = 1u64 << floor_log2(b);
    let mut intervals = Vec::new();
    if a < split {
        cover_down(a, split - 1, &mut intervals);
        intervals.reverse();
        cover_up(split, b, &mut intervals);
    } else {
        cover_up(a, b, &mut intervals);
    }
    Ok(Decomposition { intervals })
}

// `end + 1` must be a multiple of every block length used, which holds when it
// is a power of two at least as large as the range.
fn cover_down(a: u64, end: u64, out: &mut Vec<DyadicInterval>) {
    let mut end = end;
    while end >= a {
        let level = floor_log2(end - a + 1);
        let start = end + 1 - (1u64 << level);
        out.push(DyadicInterval {
            level,
            index: start >> level,
        });
        if start == a {
            break;
        }
        end = start - 1;
    }
}

fn cover_up(a: u64, b: u64, out: &mut Vec<DyadicInterval>) {
    let mut pos = a;
    loop {
        let fit = floor_log2(b - pos + 1);
        let level = fit.min(pos.trailing_zeros());
        out.push(DyadicInterval {
            level,
            index: pos >> level,
        });
        let end = pos + ((1u64 << level) - 1);
        if end >= b {
            break;
        }
        pos = end + 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: u64, b: u64) -> DyadicInterval {
        let len = b - a + 1;
        assert!(len.is_power_of_two());
        let level = len.trailing_zeros();
        DyadicInterval::new(level, a >> level).unwrap()
    }

    #[test]
    fn containing_interval_examples() {
        assert_eq!(containing_interval(5, 0), Some(iv(5, 5)));
        assert_eq!(containing_interval(5, 1), Some(iv(4, 5)));
        assert_eq!(containing_interval(5, 3), None);
        assert_eq!(containing_interval(0, 0), None);
    }

    #[test]
    fn intersect_examples() {
        assert_eq!(intersect(1), vec![iv(1, 1)]);
        assert_eq!(intersect(7), vec![iv(7, 7), iv(6, 7), iv(4, 7)]);
        assert_eq!(intersect(8), vec![iv(8, 8), iv(8, 9), iv(8, 11), iv(8, 15)]);
        assert_eq!(intersecting(1 << 40).len(), 41);
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(decompose(9, 9).unwrap().intervals(), &[iv(9, 9)]);
        assert_eq!(decompose(4, 7).unwrap().intervals(), &[iv(4, 7)]);
        assert_eq!(
            decompose(3, 6).unwrap().intervals(),
            &[iv(3, 3), iv(4, 5), iv(6, 6)]
        );
        assert_eq!(
            decompose(5, 8).unwrap().intervals(),
            &[iv(5, 5), iv(6, 7), iv(8, 8)]
        );
        // Both ends in the same octave.
        assert_eq!(
            decompose(9, 14).unwrap().intervals(),
            &[iv(9, 9), iv(10, 11), iv(12, 13), iv(14, 14)]
        );
    }

    #[test]
    fn decompose_rejects_bad_ranges() {
        assert_eq!(
            decompose(0, 3),
            Err(DyadicError::InvalidRange { a: 0, b: 3 })
        );
        assert!(decompose(5, 4).is_err());
    }

    #[test]
    fn decompose_near_u64_max() {
        let b = u64::MAX;
        let d = decompose(b - 10, b).unwrap();
        assert_eq!(d.intervals().first().unwrap().start(), b - 10);
        assert_eq!(d.intervals().last().unwrap().end(), b);
    }

    #[test]
    fn covering_finds_unique_interval() {
        let d = decompose(3, 20).unwrap();
        for t in 3..=20 {
            assert!(d.covering(t).unwrap().contains(t));
        }
        assert!(d.covering(2).is_none());
        assert!(d.covering(21).is_none());
    }

    #[test]
    fn interval_constructor_rejects_zero_index_and_overflow() {
        assert!(DyadicInterval::new(0, 0).is_none());
        assert!(DyadicInterval::new(63, 2).is_none());
        assert!(DyadicInterval::new(63, 1).is_some());
    }
}
