//! Shared domain types and exact arithmetic helpers.

use std::fmt;
use std::ops::Range;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Run sizes `(n_1, ..., n_t)` of the slices, with the derived total `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SliceSizes {
    sizes: Vec<usize>,
    total: usize,
}

impl SliceSizes {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidSizes("at least one slice is required".into()));
        }
        if let Some(pos) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidSizes(format!(
                "slice {} has size 0; every slice needs at least one run",
                pos + 1
            )));
        }
        let total = sizes
            .iter()
            .try_fold(0usize, |acc, &s| acc.checked_add(s))
            .ok_or_else(|| Error::InvalidSizes("total run size overflows".into()))?;
        Ok(Self { sizes, total })
    }

    /// A single slice covering all `n` runs.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of slices `t`.
    pub fn slices(&self) -> usize {
        self.sizes.len()
    }

    /// Total run size `n`.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn get(&self, slice: usize) -> usize {
        self.sizes[slice]
    }

    /// Prefix sums `0, n_1, n_1 + n_2, ..., n`; length `t + 1`.
    pub fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.sizes.len() + 1);
        offsets.push(0);
        let mut acc = 0;
        for &s in &self.sizes {
            acc += s;
            offsets.push(acc);
        }
        offsets
    }

    /// Row range of slice `slice` (0-based) inside a stacked design.
    pub fn rows(&self, slice: usize) -> Range<usize> {
        let start: usize = self.sizes[..slice].iter().sum();
        start..start + self.sizes[slice]
    }
}

impl TryFrom<Vec<usize>> for SliceSizes {
    type Error = Error;

    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        Self::new(sizes)
    }
}

impl From<SliceSizes> for Vec<usize> {
    fn from(sizes: SliceSizes) -> Self {
        sizes.sizes
    }
}

impl fmt::Display for SliceSizes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sizes.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for SliceSizes {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let sizes = s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::InvalidSizes(format!("{part:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sizes)
    }
}

/// `ceil(a / b)` in exact integer arithmetic.
pub fn ceil_div(a: u64, b: u64) -> Result<u64> {
    if b == 0 {
        return Err(Error::InvalidArgument("ceil_div by zero".into()));
    }
    Ok(a.div_ceil(b))
}

/// Coarse bin of fine level `level` at slice resolution `slice_size`:
/// `ceil(n_j (level - 1/2) / n)`, evaluated as `ceil(n_j (2 level - 1) / (2n))`.
///
/// `level` may be `n + 1`, which yields `n_j + 1`.
pub fn coarse_bin(level: usize, slice_size: usize, n: usize) -> usize {
    debug_assert!(level >= 1 && n >= 1);
    let num = slice_size as u128 * (2 * level as u128 - 1);
    let den = 2 * n as u128;
    num.div_ceil(den) as usize
}

/// Centre `(2 level - 1) / (2n)` of fine bin `level`.
///
/// Every midpoint value in the crate is produced by this function, so equal
/// levels always give bit-identical floats.
#[inline]
pub fn midpoint(level: usize, n: usize) -> f64 {
    (2 * level - 1) as f64 / (2 * n) as f64
}

/// Fine level `a` whose midpoint equals `x` within `1e-12`, if any.
pub fn level_of(x: f64, n: usize) -> Option<usize> {
    if !x.is_finite() || x <= 0.0 || x >= 1.0 {
        return None;
    }
    let twice = (x * (2 * n) as f64).round();
    if twice < 1.0 {
        return None;
    }
    let twice = twice as usize;
    if twice.is_multiple_of(2) {
        return None;
    }
    let level = twice.div_ceil(2);
    ((x - midpoint(level, n)).abs() <= 1e-12).then_some(level)
}

/// Partition of the fine levels `1..=n` into groups `G_1, ..., G_t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelPartition {
    groups: Vec<Vec<usize>>,
    sizes: SliceSizes,
}

impl LevelPartition {
    /// Builds a partition from explicit groups and checks every invariant.
    pub fn from_groups(sizes: SliceSizes, mut groups: Vec<Vec<usize>>) -> Result<Self> {
        for g in &mut groups {
            g.sort_unstable();
        }
        let partition = Self { groups, sizes };
        partition.check()?;
        Ok(partition)
    }

    pub(crate) fn from_groups_unchecked(sizes: SliceSizes, mut groups: Vec<Vec<usize>>) -> Self {
        for g in &mut groups {
            g.sort_unstable();
        }
        Self { groups, sizes }
    }

    /// The trivial partition of a single slice.
    pub fn whole(n: usize) -> Result<Self> {
        Ok(Self {
            groups: vec![(1..=n).collect()],
            sizes: SliceSizes::single(n)?,
        })
    }

    /// Groups sorted ascending, one per slice.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, slice: usize) -> &[usize] {
        &self.groups[slice]
    }

    pub fn sizes(&self) -> &SliceSizes {
        &self.sizes
    }

    /// Checks disjoint cover, group cardinalities and that each group hits
    /// every coarse bin of its slice exactly once.
    pub fn check(&self) -> Result<()> {
        let n = self.sizes.total();
        if self.groups.len() != self.sizes.slices() {
            return Err(Error::DimensionMismatch {
                expected: self.sizes.slices(),
                found: self.groups.len(),
            });
        }
        let mut seen = vec![false; n + 1];
        for (j, group) in self.groups.iter().enumerate() {
            let nj = self.sizes.get(j);
            if group.len() != nj {
                return Err(Error::InvalidArgument(format!(
                    "group {} has {} levels, expected {nj}",
                    j + 1,
                    group.len()
                )));
            }
            let mut bins = vec![false; nj + 1];
            for &g in group {
                if g == 0 || g > n || std::mem::replace(&mut seen[g], true) {
                    return Err(Error::InvalidArgument(format!(
                        "level {g} is out of range or assigned twice"
                    )));
                }
                let bin = coarse_bin(g, nj, n);
                if bin == 0 || bin > nj || std::mem::replace(&mut bins[bin], true) {
                    return Err(Error::InvalidArgument(format!(
                        "group {} hits coarse bin {bin} more than once",
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// An `n x p` design with slice metadata. Rows are stacked slice by slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    values: Array2<f64>,
    sizes: SliceSizes,
}

impl Design {
    pub fn new(values: Array2<f64>, sizes: SliceSizes) -> Result<Self> {
        if values.nrows() != sizes.total() {
            return Err(Error::DimensionMismatch {
                expected: sizes.total(),
                found: values.nrows(),
            });
        }
        if values.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "design needs at least one column".into(),
            ));
        }
        Ok(Self { values, sizes })
    }

    pub(crate) fn from_parts(values: Array2<f64>, sizes: SliceSizes) -> Self {
        debug_assert_eq!(values.nrows(), sizes.total());
        Self { values, sizes }
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn sizes(&self) -> &SliceSizes {
        &self.sizes
    }

    pub fn runs(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn slice_offsets(&self) -> Vec<usize> {
        self.sizes.offsets()
    }

    pub fn column(&self, col: usize) -> ArrayView1<'_, f64> {
        self.values.column(col)
    }

    /// Rows belonging to slice `slice` (0-based).
    pub fn slice_block(&self, slice: usize) -> ArrayView2<'_, f64> {
        let rows = self.sizes.rows(slice);
        self.values.slice(ndarray::s![rows, ..])
    }

    pub fn rows(&self) -> impl Iterator<Item = ArrayView1<'_, f64>> {
        self.values.axis_iter(Axis(0))
    }

    /// Integer levels of a midpoint design, or `None` if any entry is not an
    /// exact midpoint `(2a - 1) / (2n)`.
    pub fn levels(&self) -> Option<Array2<usize>> {
        let n = self.runs();
        let mut out = Array2::zeros(self.values.raw_dim());
        for (dst, &x) in out.iter_mut().zip(self.values.iter()) {
            *dst = level_of(x, n)?;
        }
        Some(out)
    }
}

/// Deterministic, splittable random stream.
///
/// A stream is a `(seed, path)` pair. [`RngStream::split`] derives a child
/// path from the parent path and a label; sibling labels never alias because
/// the mixing step is a bijection of the label. Draws come from ChaCha8 keyed
/// by the seed, with the path selecting the ChaCha stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    path: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, path: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> u64 {
        self.path
    }

    /// Child stream for `label`.
    pub fn split(&self, label: u64) -> Self {
        let parent = mix64(self.path.wrapping_add(0x9e37_79b9_7f4a_7c15));
        Self {
            seed: self.seed,
            path: mix64(parent ^ mix64(label)),
        }
    }

    /// Generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.path);
        rng
    }
}

/// splitmix64 finalizer; a bijection on `u64`.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniformly random permutation of `1..=m` drawn from `stream`.
pub fn uniform_permutation(m: usize, stream: &RngStream) -> Vec<usize> {
    let mut perm: Vec<usize> = (1..=m).collect();
    perm.shuffle(&mut stream.rng());
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_div_examples() {
        assert_eq!(ceil_div(30, 34).unwrap(), 1);
        assert_eq!(ceil_div(27, 34).unwrap(), 1);
        assert_eq!(ceil_div(0, 5).unwrap(), 0);
        assert_eq!(ceil_div(34, 34).unwrap(), 1);
        assert_eq!(ceil_div(35, 34).unwrap(), 2);
        assert!(ceil_div(3, 0).is_err());
    }

    #[test]
    fn coarse_bins_for_2_5_10() {
        // n_3 = 10, n = 17, level 2: ceil(10 * 3 / 34) = 1.
        assert_eq!(coarse_bin(2, 10, 17), 1);
        // one past the last level lands in bin n_j + 1
        assert_eq!(coarse_bin(18, 10, 17), 11);
        assert_eq!(coarse_bin(18, 17, 17), 18);
    }

    #[test]
    fn slice_sizes_validation() {
        assert!(SliceSizes::new(vec![]).is_err());
        assert!(SliceSizes::new(vec![0, 5]).is_err());
        let s: SliceSizes = "2, 5,10".parse().unwrap();
        assert_eq!(s.total(), 17);
        assert_eq!(s.slices(), 3);
        assert_eq!(s.offsets(), vec![0, 2, 7, 17]);
        assert_eq!(s.rows(2), 7..17);
        assert_eq!(s.to_string(), "2,5,10");
        assert!("2,x".parse::<SliceSizes>().is_err());
    }

    #[test]
    fn level_recovery() {
        for n in 1..40 {
            for a in 1..=n {
                assert_eq!(level_of(midpoint(a, n), n), Some(a));
            }
        }
        assert_eq!(level_of(0.25, 2), Some(1));
        assert_eq!(level_of(0.3, 2), None);
        assert_eq!(level_of(0.5, 2), None);
    }

    #[test]
    fn permutation_of_one() {
        assert_eq!(uniform_permutation(1, &RngStream::new(3)), vec![1]);
    }

    #[test]
    fn permutation_is_deterministic() {
        let s = RngStream::new(99).split(4);
        assert_eq!(uniform_permutation(10, &s), uniform_permutation(10, &s));
        let mut sorted = uniform_permutation(10, &s);
        sorted.sort_unstable();
        assert_eq!(sorted, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn permutation_of_two_is_fair() {
        let root = RngStream::new(2024);
        let identity = (0..10_000)
            .filter(|&i| uniform_permutation(2, &root.split(i)) == vec![1, 2])
            .count();
        assert!(
            (4700..=5300).contains(&identity),
            "identity count {identity}"
        );
    }

    #[test]
    fn permutation_of_three_passes_chi_square() {
        // 6 cells, 5 degrees of freedom; the 0.999 quantile is 20.52.
        let root = RngStream::new(11);
        let draws = 60_000;
        let mut counts = std::collections::HashMap::new();
        for i in 0..draws {
            *counts
                .entry(uniform_permutation(3, &root.split(i)))
                .or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        let expected = draws as f64 / 6.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 20.52, "chi2 {chi2}");
    }

    #[test]
    fn split_paths_do_not_alias() {
        let root = RngStream::new(5);
        let mut paths = std::collections::HashSet::new();
        for j in 0..64 {
            for l in 0..64 {
                assert!(paths.insert(root.split(j).split(l).path()));
            }
        }
        // the child and grandchild layers stay distinct too
        for j in 0..64 {
            assert!(paths.insert(root.split(j).path()));
        }
    }

    #[test]
    fn partition_check_rejects_bad_groups() {
        let sizes = SliceSizes::new(vec![1, 2]).unwrap();
        assert!(LevelPartition::from_groups(sizes.clone(), vec![vec![2], vec![1, 3]]).is_ok());
        // level 2 twice
        assert!(LevelPartition::from_groups(sizes.clone(), vec![vec![2], vec![2, 3]]).is_err());
        // group 2 holds levels 1 and 2, both in its first coarse bin
        assert!(LevelPartition::from_groups(sizes, vec![vec![3], vec![1, 2]]).is_err());
    }

    #[test]
    fn design_rejects_wrong_row_count() {
        let sizes = SliceSizes::new(vec![2, 2]).unwrap();
        assert!(Design::new(Array2::zeros((3, 2)), sizes.clone()).is_err());
        assert!(Design::new(Array2::zeros((4, 0)), sizes).is_err());
    }
}
