//! Stratification checks.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{coarse_bin, Design};

/// Bin `m` in `1..=bins` with `x` in `((m - 1) / bins, m / bins]`, or `None`
/// if `x` lies outside `(0, 1]`.
///
/// Products that land within rounding distance of an integer edge are
/// snapped onto it, so a value sitting exactly on an edge belongs to the
/// lower bin as the half-open convention requires.
fn bin_of(x: f64, bins: usize) -> Option<usize> {
    if !(x > 0.0 && x <= 1.0 + 1e-12) {
        return None;
    }
    let y = x * bins as f64;
    let r = y.round();
    let bin = if (y - r).abs() <= 1e-9 * y.max(1.0) {
        r
    } else {
        y.ceil()
    };
    Some((bin as usize).clamp(1, bins))
}

/// Whether each of the `bins` equal bins of `(0, 1]` holds exactly one entry.
pub fn is_lhd_column(column: &[f64], bins: usize) -> Result<bool> {
    if column.len() != bins {
        return Err(Error::DimensionMismatch {
            expected: bins,
            found: column.len(),
        });
    }
    Ok(one_per_bin(column.iter().map(|&x| bin_of(x, bins)), bins))
}

fn one_per_bin(bins_hit: impl Iterator<Item = Option<usize>>, bins: usize) -> bool {
    let mut seen = vec![false; bins + 1];
    for bin in bins_hit {
        match bin {
            Some(b) if !seen[b] => seen[b] = true,
            _ => return false,
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub sizes: Vec<usize>,
    /// Every entry is some `(2a - 1) / (2n)` within `1e-12`.
    pub midpoint_exact: bool,
    /// Per column: one point in each of the `n` fine bins.
    pub columns: Vec<bool>,
    /// `slices[j][l]`: slice `j` of column `l` has one point in each of its
    /// `n_j` coarse bins.
    pub slices: Vec<Vec<bool>>,
}

impl ValidationReport {
    pub fn columns_pass(&self) -> bool {
        self.columns.iter().all(|&ok| ok)
    }

    pub fn slices_pass(&self) -> bool {
        self.slices.iter().flatten().all(|&ok| ok)
    }

    pub fn all_pass(&self) -> bool {
        self.midpoint_exact && self.columns_pass() && self.slices_pass()
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n: usize = self.sizes.iter().sum();
        writeln!(f, "midpoint levels: {}", mark(self.midpoint_exact))?;
        for (l, &ok) in self.columns.iter().enumerate() {
            writeln!(f, "column {}: {n} bins {}", l + 1, mark(ok))?;
        }
        for (j, cols) in self.slices.iter().enumerate() {
            let failed: Vec<String> = cols
                .iter()
                .enumerate()
                .filter(|(_, &ok)| !ok)
                .map(|(l, _)| (l + 1).to_string())
                .collect();
            if failed.is_empty() {
                writeln!(f, "slice {} ({} runs): ok", j + 1, self.sizes[j])?;
            } else {
                writeln!(
                    f,
                    "slice {} ({} runs): FAIL in column(s) {}",
                    j + 1,
                    self.sizes[j],
                    failed.join(",")
                )?;
            }
        }
        write!(
            f,
            "result: {}",
            if self.all_pass() { "PASS" } else { "FAIL" }
        )
    }
}

/// Checks that every column is a permutation of the fine midpoints and that
/// every slice block is an LHD at its own resolution.
///
/// When all entries are exact midpoints the checks run on integer levels;
/// otherwise they fall back to floating-point bin classification.
pub fn validate_sliced(design: &Design) -> ValidationReport {
    let sizes = design.sizes();
    let n = sizes.total();
    let dim = design.dim();
    let levels = design.levels();

    let (columns, slices) = match &levels {
        Some(levels) => {
            let columns = levels
                .columns()
                .into_iter()
                .map(|col| one_per_bin(col.iter().map(|&a| Some(a)), n))
                .collect();
            let slices = (0..sizes.slices())
                .map(|j| {
                    let nj = sizes.get(j);
                    let rows = sizes.rows(j);
                    (0..dim)
                        .map(|l| {
                            one_per_bin(
                                rows.clone()
                                    .map(|r| Some(coarse_bin(levels[[r, l]], nj, n))),
                                nj,
                            )
                        })
                        .collect()
                })
                .collect();
            (columns, slices)
        }
        None => {
            let values = design.values();
            let columns = values
                .columns()
                .into_iter()
                .map(|col| one_per_bin(col.iter().map(|&x| bin_of(x, n)), n))
                .collect();
            let slices = (0..sizes.slices())
                .map(|j| {
                    let nj = sizes.get(j);
                    design
                        .slice_block(j)
                        .columns()
                        .into_iter()
                        .map(|col| one_per_bin(col.iter().map(|&x| bin_of(x, nj)), nj))
                        .collect()
                })
                .collect();
            (columns, slices)
        }
    };

    ValidationReport {
        sizes: sizes.as_slice().to_vec(),
        midpoint_exact: levels.is_some(),
        columns,
        slices,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::SliceSizes;
    use ndarray::Array2;

    #[test]
    fn lhd_column_examples() {
        assert!(is_lhd_column(&[0.5], 1).unwrap());
        assert!(!is_lhd_column(&[0.1, 0.15, 0.9], 3).unwrap());
        let col: Vec<f64> = [
            13, 27, 23, 3, 31, 17, 9, 29, 11, 33, 21, 1, 25, 19, 5, 7, 15,
        ]
        .iter()
        .map(|&x| x as f64 / 34.0)
        .collect();
        assert!(is_lhd_column(&col, 17).unwrap());
        assert!(is_lhd_column(&[0.5], 2).is_err());
    }

    #[test]
    fn edges_belong_to_lower_bin() {
        assert!(is_lhd_column(&[0.5, 1.0], 2).unwrap());
        assert!(!is_lhd_column(&[0.5, 0.5], 2).unwrap());
        assert!(!is_lhd_column(&[0.0, 1.0], 2).unwrap());
        assert!(!is_lhd_column(&[0.3, 1.2], 2).unwrap());
        // 3/6 at resolution 2 lands exactly on the edge 1/2
        assert_eq!(bin_of(3.0 / 6.0, 2), Some(1));
        assert_eq!(bin_of(0.1 * 3.0, 3), Some(1));
    }

    #[test]
    fn within_bin_perturbation() {
        let col = [0.1, 0.3, 0.5, 0.7, 0.9];
        for eps in [-0.09, -0.05, 0.0, 0.05, 0.09] {
            let moved: Vec<f64> = col.iter().map(|x| x + eps).collect();
            assert!(is_lhd_column(&moved, 5).unwrap());
        }
    }

    #[test]
    fn unpartitionable_column() {
        let h = [0.1, 0.2, 0.3, 0.5, 0.7, 0.8, 0.9];
        assert!(is_lhd_column(&h, 7).unwrap());
        let sizes = SliceSizes::new(vec![1, 3, 3]).unwrap();
        let mut tried = 0;
        for first in 0..7 {
            let rest: Vec<usize> = (0..7).filter(|&i| i != first).collect();
            for a in 0..6 {
                for b in a + 1..6 {
                    for c in b + 1..6 {
                        let second = [rest[a], rest[b], rest[c]];
                        let third: Vec<usize> = rest
                            .iter()
                            .copied()
                            .filter(|i| !second.contains(i))
                            .collect();
                        let order: Vec<usize> =
                            std::iter::once(first).chain(second).chain(third).collect();
                        let values = Array2::from_shape_fn((7, 1), |(r, _)| h[order[r]]);
                        let report = validate_sliced(&Design::new(values, sizes.clone()).unwrap());
                        assert!(report.columns_pass());
                        assert!(!report.slices_pass(), "order {order:?} passed");
                        tried += 1;
                    }
                }
            }
        }
        assert_eq!(tried, 140);
    }

    #[test]
    fn non_midpoint_values_fail_exactness() {
        let sizes = SliceSizes::new(vec![2]).unwrap();
        let d = Design::new(
            Array2::from_shape_vec((2, 1), vec![0.2, 0.7]).unwrap(),
            sizes,
        )
        .unwrap();
        let report = validate_sliced(&d);
        assert!(report.columns_pass() && report.slices_pass());
        assert!(!report.midpoint_exact);
        assert!(!report.all_pass());
    }
}
