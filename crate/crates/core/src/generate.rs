//! Design generators: the sliced construction and the baseline LHDs.

use ndarray::{s, Array2};
use rand::Rng;

use crate::decorrelate::{reduce_correlations, DEFAULT_ITERATIONS};
use crate::error::{Error, Result};
use crate::partition::partition_levels;
use crate::types::{midpoint, uniform_permutation, Design, LevelPartition, RngStream, SliceSizes};

/// Random sliced Latin hypercube design with `dim` columns.
///
/// Column `l` of slice `j` is an independent uniform permutation of the
/// slice's level group, drawn from `stream.split(j).split(l)`, so adding
/// columns leaves earlier columns untouched.
pub fn generate_sliced_lhd(sizes: &SliceSizes, dim: usize, stream: &RngStream) -> Design {
    let partition = partition_levels(sizes);
    sliced_from_partition(&partition, dim, stream)
}

pub(crate) fn sliced_from_partition(
    partition: &LevelPartition,
    dim: usize,
    stream: &RngStream,
) -> Design {
    assert!(dim >= 1, "design dimension must be at least 1");
    let sizes = partition.sizes();
    let n = sizes.total();
    let mut values = Array2::zeros((n, dim));
    for (j, rows) in (0..sizes.slices()).map(|j| (j, sizes.rows(j))) {
        let group = partition.group(j);
        let slice_stream = stream.split(j as u64);
        for l in 0..dim {
            let perm = uniform_permutation(group.len(), &slice_stream.split(l as u64));
            for (row, idx) in rows.clone().zip(perm) {
                values[[row, l]] = midpoint(group[idx - 1], n);
            }
        }
    }
    Design::from_parts(values, sizes.clone())
}

/// Stacks explicitly chosen level orders into a design.
///
/// `columns[l][j]` is the order of slice `j`'s levels in column `l`; each must
/// be a permutation of the partition's group `G_j`.
pub fn assemble_sliced_design(
    partition: &LevelPartition,
    columns: &[Vec<Vec<usize>>],
) -> Result<Design> {
    let sizes = partition.sizes();
    let n = sizes.total();
    if columns.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one column is required".into(),
        ));
    }
    let mut values = Array2::zeros((n, columns.len()));
    for (l, column) in columns.iter().enumerate() {
        if column.len() != sizes.slices() {
            return Err(Error::DimensionMismatch {
                expected: sizes.slices(),
                found: column.len(),
            });
        }
        for (j, order) in column.iter().enumerate() {
            let mut sorted = order.clone();
            sorted.sort_unstable();
            if sorted != partition.group(j) {
                return Err(Error::InvalidArgument(format!(
                    "column {} slice {}: {order:?} is not a permutation of {:?}",
                    l + 1,
                    j + 1,
                    partition.group(j)
                )));
            }
            for (row, &level) in sizes.rows(j).zip(order) {
                values[[row, l]] = midpoint(level, n);
            }
        }
    }
    Ok(Design::from_parts(values, sizes.clone()))
}

/// Midpoint LHD: every column an independent permutation of `(2i - 1) / (2n)`.
pub fn generate_midpoint_lhd(n: usize, dim: usize, stream: &RngStream) -> Design {
    let partition = LevelPartition::whole(n).expect("n must be positive");
    sliced_from_partition(&partition, dim, stream)
}

/// Randomized LHD with entries `(pi_l(i) - U_il) / n`, `U_il ~ U[0, 1)`.
pub fn generate_randomized_lhd(n: usize, dim: usize, stream: &RngStream) -> Design {
    assert!(dim >= 1, "design dimension must be at least 1");
    let sizes = SliceSizes::single(n).expect("n must be positive");
    let mut values = Array2::zeros((n, dim));
    for l in 0..dim {
        let col_stream = stream.split(l as u64);
        let perm = uniform_permutation(n, &col_stream.split(0));
        let mut jitter = col_stream.split(1).rng();
        for (row, bin) in perm.into_iter().enumerate() {
            let u: f64 = jitter.random();
            values[[row, l]] = (bin as f64 - u) / n as f64;
        }
    }
    Design::from_parts(values, sizes)
}

/// `t` independent midpoint LHDs of sizes `n_1, ..., n_t`, stacked.
///
/// Each block is stratified at its own resolution only; the stack is in
/// general not an LHD. With `decorrelate`, every block goes through the
/// correlation-reduction sweep as a single-slice design.
pub fn generate_independent_lhds(
    sizes: &SliceSizes,
    dim: usize,
    stream: &RngStream,
    decorrelate: bool,
) -> Design {
    assert!(dim >= 1, "design dimension must be at least 1");
    let mut values = Array2::zeros((sizes.total(), dim));
    for j in 0..sizes.slices() {
        let nj = sizes.get(j);
        let mut block = generate_midpoint_lhd(nj, dim, &stream.split(j as u64));
        if decorrelate {
            let whole = LevelPartition::whole(nj).expect("slice size is positive");
            block = reduce_correlations(block, &whole, DEFAULT_ITERATIONS)
                .expect("block matches its own partition")
                .0;
        }
        values
            .slice_mut(s![sizes.rows(j), ..])
            .assign(&block.values());
    }
    Design::from_parts(values, sizes.clone())
}
