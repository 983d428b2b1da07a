//! Greedy assignment of fine levels to slices.
//!
//! Levels `1..=n` are visited in order and pushed onto a working set. Level
//! `i` closes a coarse bin of slice `j` whenever
//! `ceil(n_j (i + 1/2) / n) - ceil(n_j (i - 1/2) / n) = 1`; for each such
//! slice (ascending `j`) the smallest waiting level that falls in the same
//! coarse bin is moved into `G_j`. The number of slices closing a bin at `i`
//! is `delta_i`.

use serde::Serialize;

use crate::types::{coarse_bin, LevelPartition, SliceSizes};

/// `delta_1, ..., delta_n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaSequence {
    deltas: Vec<usize>,
}

impl DeltaSequence {
    pub fn as_slice(&self) -> &[usize] {
        &self.deltas
    }

    pub fn total(&self) -> usize {
        self.deltas.iter().sum()
    }

    /// Whether every partial sum `delta_1 + ... + delta_i` stays `<= i`.
    pub fn partial_sums_bounded(&self) -> bool {
        let mut acc = 0;
        self.deltas.iter().enumerate().all(|(i, &d)| {
            acc += d;
            acc <= i + 1
        })
    }
}

/// Whether fine level `level` closes a coarse bin of a slice of size `slice_size`.
#[inline]
fn closes_bin(level: usize, slice_size: usize, n: usize) -> bool {
    coarse_bin(level + 1, slice_size, n) > coarse_bin(level, slice_size, n)
}

pub fn delta_sequence(sizes: &SliceSizes) -> DeltaSequence {
    let n = sizes.total();
    let deltas = (1..=n)
        .map(|i| {
            sizes
                .as_slice()
                .iter()
                .map(|&nj| coarse_bin(i + 1, nj, n) - coarse_bin(i, nj, n))
                .sum()
        })
        .collect();
    DeltaSequence { deltas }
}

/// One move of a level from the working set into a group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Assignment {
    /// Fine level being visited when the move happened.
    pub step: usize,
    /// Receiving slice, 0-based.
    pub slice: usize,
    /// Level moved into the slice's group.
    pub level: usize,
}

/// Full record of a partition run, for inspection and debugging.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionTrace {
    pub assignments: Vec<Assignment>,
    /// Working set after each step `i = 1..=n`.
    pub working_sets: Vec<Vec<usize>>,
    pub partition: LevelPartition,
}

/// Assigns levels `1..=n` to the slices. Deterministic.
///
/// # Panics
///
/// Panics if some step finds no eligible waiting level. That cannot happen
/// for valid input; reaching it means the implementation is broken.
pub fn partition_levels(sizes: &SliceSizes) -> LevelPartition {
    run(sizes, |_, _| {}).partition
}

/// Same as [`partition_levels`] but keeps every assignment and working set.
pub fn partition_trace(sizes: &SliceSizes) -> PartitionTrace {
    let mut working_sets = Vec::with_capacity(sizes.total());
    let mut trace = run(sizes, |_, working| working_sets.push(working.to_vec()));
    trace.working_sets = working_sets;
    trace
}

fn run(sizes: &SliceSizes, mut on_step: impl FnMut(usize, &[usize])) -> PartitionTrace {
    let n = sizes.total();
    let mut groups: Vec<Vec<usize>> = sizes
        .as_slice()
        .iter()
        .map(|&nj| Vec::with_capacity(nj))
        .collect();
    let mut assignments = Vec::with_capacity(n);
    // Ascending; levels are appended in increasing order.
    let mut working: Vec<usize> = Vec::new();

    for i in 1..=n {
        working.push(i);
        for (k, &nk) in sizes.as_slice().iter().enumerate() {
            if !closes_bin(i, nk, n) {
                continue;
            }
            let target = coarse_bin(i, nk, n);
            let pos = working
                .iter()
                .position(|&u| coarse_bin(u, nk, n) == target)
                .unwrap_or_else(|| {
                    panic!(
                        "no eligible level for slice {} at step {i} (sizes {sizes}); \
                         the working set {working:?} should always contain one",
                        k + 1
                    )
                });
            let u = working.remove(pos);
            groups[k].push(u);
            assignments.push(Assignment {
                step: i,
                slice: k,
                level: u,
            });
        }
        on_step(i, &working);
    }
    assert!(
        working.is_empty(),
        "levels {working:?} left unassigned for sizes {sizes}"
    );

    PartitionTrace {
        assignments,
        working_sets: Vec::new(),
        partition: LevelPartition::from_groups_unchecked(sizes.clone(), groups),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sizes(v: &[usize]) -> SliceSizes {
        SliceSizes::new(v.to_vec()).unwrap()
    }

    /// Smallest integer `c` with `c >= num / den`, found by counting up.
    fn ceil_by_search(num: u64, den: u64) -> u64 {
        let mut c = 0;
        while c * den < num {
            c += 1;
        }
        c
    }

    /// delta_i straight from the definition, using the half-level form.
    fn delta_oracle(v: &[usize]) -> Vec<usize> {
        let n: usize = v.iter().sum();
        let two_n = 2 * n as u64;
        (1..=n as u64)
            .map(|i| {
                v.iter()
                    .map(|&nj| {
                        let nj = nj as u64;
                        (ceil_by_search(nj * (2 * i + 1), two_n)
                            - ceil_by_search(nj * (2 * i - 1), two_n))
                            as usize
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn groups_for_2_5_10() {
        let p = partition_levels(&sizes(&[2, 5, 10]));
        assert_eq!(p.group(0), &[7, 14]);
        assert_eq!(p.group(1), &[2, 5, 9, 12, 16]);
        assert_eq!(p.group(2), &[1, 3, 4, 6, 8, 10, 11, 13, 15, 17]);
        p.check().unwrap();
    }

    #[test]
    fn deltas_for_2_5_10_follow_the_definition() {
        // slices of size 5 and 10 both close a bin at level 14, so delta_14 = 2
        // and the sequence sums to n = 17
        let d = delta_sequence(&sizes(&[2, 5, 10]));
        assert_eq!(
            d.as_slice(),
            &[0, 1, 2, 0, 1, 0, 2, 0, 2, 2, 0, 1, 0, 2, 1, 0, 3]
        );
        assert_eq!(d.as_slice(), delta_oracle(&[2, 5, 10]).as_slice());
        assert_eq!(d.total(), 17);
    }

    #[test]
    fn trace_for_2_5_10() {
        let trace = partition_trace(&sizes(&[2, 5, 10]));
        assert_eq!(trace.working_sets[0], vec![1]);
        assert_eq!(trace.working_sets[1], vec![2]);
        let at_3: Vec<_> = trace
            .assignments
            .iter()
            .filter(|a| a.step == 3)
            .map(|a| (a.level, a.slice))
            .collect();
        assert_eq!(at_3, vec![(2, 1), (3, 2)]);
        assert!(trace.working_sets[2].is_empty());
        assert!(trace.working_sets.last().unwrap().is_empty());
        assert_eq!(trace.assignments.len(), 17);
    }

    #[test]
    fn single_slice_takes_everything() {
        for n in 1..30 {
            let s = sizes(&[n]);
            assert_eq!(delta_sequence(&s).as_slice(), vec![1; n].as_slice());
            assert_eq!(partition_levels(&s).group(0), (1..=n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn all_singletons() {
        for t in 1..20 {
            let p = partition_levels(&sizes(&vec![1; t]));
            let mut all: Vec<usize> = p.groups().iter().flatten().copied().collect();
            assert!(p.groups().iter().all(|g| g.len() == 1));
            all.sort_unstable();
            assert_eq!(all, (1..=t).collect::<Vec<_>>());
        }
    }

    #[test]
    fn six_seven_matches_oracle() {
        let d = delta_sequence(&sizes(&[6, 7]));
        assert_eq!(d.as_slice(), delta_oracle(&[6, 7]).as_slice());
        assert_eq!(d.total(), 13);
        assert!(d.partial_sums_bounded());
        let p = partition_levels(&sizes(&[6, 7]));
        assert_eq!(p.group(0), &[1, 3, 6, 8, 10, 12]);
        assert_eq!(p.group(1), &[2, 4, 5, 7, 9, 11, 13]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn partition_invariants(v in prop::collection::vec(1usize..=40, 1..=12)) {
            let s = sizes(&v);
            let d = delta_sequence(&s);
            let oracle = delta_oracle(&v);
            prop_assert_eq!(d.as_slice(), oracle.as_slice());
            prop_assert_eq!(d.total(), s.total());
            prop_assert!(d.partial_sums_bounded());
            let p = partition_levels(&s);
            prop_assert!(p.check().is_ok());
            prop_assert_eq!(&p, &partition_levels(&s));
        }
    }
}
