//! Correlation reduction for sliced designs.
//!
//! Each iteration runs a forward residualization pass over every slice
//! (for `k = 2..=p`, `l = 1..k`, regress column `l` on column `k` and keep the
//! residual), snaps every slice column back onto its level group by rank,
//! then runs a backward pass (`k = p-1..=1`, `l = p..=k+1`) and snaps again.
//! Rank restoration keeps each slice block on its own level group, so the
//! result is still a sliced LHD with exactly the same level multisets.

use ndarray::{ArrayView2, Axis};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{midpoint, Design, LevelPartition};

pub const DEFAULT_ITERATIONS: usize = 10;

/// Which column a residualization uses as its response inside one pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ResponseBasis {
    /// The column as it was when the pass started. When a column is the
    /// response for several covariates, the last covariate wins.
    #[default]
    PassStart,
    /// The running column, so residualizations chain within a pass.
    Running,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SweepOptions {
    pub iterations: usize,
    pub basis: ResponseBasis,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_ITERATIONS,
            basis: ResponseBasis::default(),
        }
    }
}

/// RMS correlation per iteration, including the starting design.
///
/// Entries are `None` where the metric is undefined (fewer than two columns,
/// or a slice with a single run).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTrace {
    pub whole: Vec<Option<f64>>,
    /// `per_slice[j][it]`.
    pub per_slice: Vec<Vec<Option<f64>>>,
}

impl SweepTrace {
    fn new(slices: usize) -> Self {
        Self {
            whole: Vec::new(),
            per_slice: vec![Vec::new(); slices],
        }
    }

    fn record(&mut self, design: &Design) {
        self.whole.push(rms_correlation(design.values()).ok());
        for (j, trace) in self.per_slice.iter_mut().enumerate() {
            trace.push(rms_correlation(design.slice_block(j)).ok());
        }
    }

    /// Number of recorded states (iterations + 1).
    pub fn len(&self) -> usize {
        self.whole.len()
    }

    pub fn is_empty(&self) -> bool {
        self.whole.is_empty()
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Residual of a simple linear regression of `response` on `covariate`.
///
/// Equals `response - (covariate - mean) * rho * sd(response) / sd(covariate)`;
/// the product `rho * sd(response) / sd(covariate)` is the slope
/// `cov / var(covariate)` regardless of the standard-deviation denominator.
/// Degenerate inputs (fewer than two points, or either vector constant) are
/// returned unchanged.
pub fn residualize(response: &[f64], covariate: &[f64]) -> Vec<f64> {
    assert_eq!(
        response.len(),
        covariate.len(),
        "response and covariate lengths differ"
    );
    if response.len() < 2 {
        return response.to_vec();
    }
    let my = mean(response);
    let mx = mean(covariate);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in covariate.iter().zip(response) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return response.to_vec();
    }
    let slope = sxy / sxx;
    response
        .iter()
        .zip(covariate)
        .map(|(&y, &x)| y - (x - mx) * slope)
        .collect()
}

/// Replaces the `u`-th smallest entry of `values` by the midpoint of the
/// `u`-th smallest level in `group_levels`. Ties keep their original order.
pub fn rank_restore(values: &[f64], group_levels: &[usize], n: usize) -> Vec<f64> {
    assert_eq!(
        values.len(),
        group_levels.len(),
        "values and level group lengths differ"
    );
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut levels = group_levels.to_vec();
    levels.sort_unstable();
    let mut out = vec![0.0; values.len()];
    for (&idx, &level) in order.iter().zip(&levels) {
        out[idx] = midpoint(level, n);
    }
    out
}

/// Sample Pearson correlation; `None` if either vector is constant.
pub(crate) fn correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ma, mb) = (mean(a), mean(b));
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        saa += dx * dx;
        sbb += dy * dy;
        sab += dx * dy;
    }
    (saa > 0.0 && sbb > 0.0).then(|| (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Root mean square of all pairwise column correlations.
pub fn rms_correlation(matrix: ArrayView2<'_, f64>) -> Result<f64> {
    let (rows, cols) = matrix.dim();
    if cols < 2 {
        return Err(Error::InvalidArgument(format!(
            "rms correlation needs at least 2 columns, got {cols}"
        )));
    }
    if rows < 2 {
        return Err(Error::InvalidArgument(format!(
            "rms correlation needs at least 2 rows, got {rows}"
        )));
    }
    let columns: Vec<Vec<f64>> = matrix.axis_iter(Axis(1)).map(|c| c.to_vec()).collect();
    let mut sum = 0.0;
    for j in 0..cols {
        for k in j + 1..cols {
            let rho = correlation(&columns[j], &columns[k]).ok_or_else(|| {
                Error::InvalidArgument(format!("column {} or {} has zero variance", j + 1, k + 1))
            })?;
            sum += rho * rho;
        }
    }
    let pairs = (cols * (cols - 1) / 2) as f64;
    Ok((sum / pairs).sqrt().min(1.0))
}

/// Runs the correlation-reduction sweep for `iterations` iterations.
pub fn reduce_correlations(
    design: Design,
    partition: &LevelPartition,
    iterations: usize,
) -> Result<(Design, SweepTrace)> {
    reduce_correlations_with(
        design,
        partition,
        &SweepOptions {
            iterations,
            ..SweepOptions::default()
        },
    )
}

pub fn reduce_correlations_with(
    design: Design,
    partition: &LevelPartition,
    options: &SweepOptions,
) -> Result<(Design, SweepTrace)> {
    if options.iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be positive".into()));
    }
    let mut state = SweepState::new(design, partition, options.basis)?;
    let mut trace = SweepTrace::new(partition.sizes().slices());
    trace.record(&state.design());
    for _ in 0..options.iterations {
        state.iterate();
        trace.record(&state.design());
    }
    Ok((state.into_design(), trace))
}

/// Sweep in progress, exposed step by step.
///
/// [`SweepState::iterate`] is one full iteration; the individual passes are
/// public so intermediate matrices can be inspected.
#[derive(Debug, Clone)]
pub struct SweepState<'a> {
    partition: &'a LevelPartition,
    basis: ResponseBasis,
    /// Column-major copy of each slice block: `blocks[j][l]`.
    blocks: Vec<Vec<Vec<f64>>>,
    dim: usize,
}

impl<'a> SweepState<'a> {
    pub fn new(
        design: Design,
        partition: &'a LevelPartition,
        basis: ResponseBasis,
    ) -> Result<Self> {
        if partition.sizes() != design.sizes() {
            return Err(Error::InvalidArgument(format!(
                "partition is for slice sizes {} but the design has {}",
                partition.sizes(),
                design.sizes()
            )));
        }
        let blocks = (0..partition.sizes().slices())
            .map(|j| {
                design
                    .slice_block(j)
                    .axis_iter(Axis(1))
                    .map(|c| c.to_vec())
                    .collect()
            })
            .collect();
        Ok(Self {
            partition,
            basis,
            blocks,
            dim: design.dim(),
        })
    }

    /// Residualizes column `l` on column `k` for `k = 2..=p`, `l = 1..k`.
    pub fn forward_pass(&mut self) {
        for block in &mut self.blocks {
            forward_pass(block, self.basis);
        }
    }

    /// Residualizes column `l` on column `k` for `k = p-1..=1`, `l = p..=k+1`.
    pub fn backward_pass(&mut self) {
        for block in &mut self.blocks {
            backward_pass(block, self.basis);
        }
    }

    /// Rank-restores every slice column onto its level group.
    pub fn restore(&mut self) {
        let n = self.partition.sizes().total();
        for (j, block) in self.blocks.iter_mut().enumerate() {
            let group = self.partition.group(j);
            for column in block.iter_mut() {
                *column = rank_restore(column, group, n);
            }
        }
    }

    pub fn iterate(&mut self) {
        self.forward_pass();
        self.restore();
        self.backward_pass();
        self.restore();
    }

    /// Current matrix. Between a pass and the following restore the entries
    /// are regression residuals, not midpoints.
    pub fn design(&self) -> Design {
        let sizes = self.partition.sizes();
        let mut values = ndarray::Array2::zeros((sizes.total(), self.dim));
        for (j, block) in self.blocks.iter().enumerate() {
            for (l, column) in block.iter().enumerate() {
                for (row, &x) in sizes.rows(j).zip(column) {
                    values[[row, l]] = x;
                }
            }
        }
        Design::from_parts(values, sizes.clone())
    }

    pub fn into_design(self) -> Design {
        self.design()
    }
}

fn residualize_into(
    block: &mut [Vec<f64>],
    start: &[Vec<f64>],
    l: usize,
    k: usize,
    basis: ResponseBasis,
) {
    block[l] = match basis {
        ResponseBasis::PassStart => residualize(&start[l], &start[k]),
        ResponseBasis::Running => residualize(&block[l], &block[k]),
    };
}

fn forward_pass(block: &mut [Vec<f64>], basis: ResponseBasis) {
    if block.first().is_none_or(|c| c.len() < 2) {
        return;
    }
    let start = block.to_vec();
    for k in 1..block.len() {
        for l in 0..k {
            residualize_into(block, &start, l, k, basis);
        }
    }
}

fn backward_pass(block: &mut [Vec<f64>], basis: ResponseBasis) {
    if block.first().is_none_or(|c| c.len() < 2) {
        return;
    }
    let start = block.to_vec();
    let p = block.len();
    for k in (0..p.saturating_sub(1)).rev() {
        for l in (k + 1..p).rev() {
            residualize_into(block, &start, l, k, basis);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn scaled(v: &[i32], den: f64) -> Vec<f64> {
        v.iter().map(|&x| x as f64 / den).collect()
    }

    #[test]
    fn residual_of_worked_example() {
        let y = scaled(&[19, 23, 11, 5, 15, 1], 26.0);
        let x = scaled(&[15, 23, 11, 5, 1, 19], 26.0);
        let r = residualize(&y, &x);
        let want = [0.7068, 0.7891, 0.4350, 0.2580, 0.6784, -0.0212];
        for (a, b) in r.iter().zip(want) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
        assert!((correlation(&x, &y).unwrap() - 0.2328).abs() < 1e-4);
        assert!(correlation(&r, &x).unwrap().abs() < 1e-12);
    }

    #[test]
    fn residual_edge_cases() {
        let y = vec![1.0, -1.0, 1.0, -1.0];
        let x = vec![1.0, 1.0, -1.0, -1.0];
        for (a, b) in residualize(&y, &x).iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
        let y = vec![0.1, 0.7, 0.4, 0.9];
        let m = mean(&y);
        for a in residualize(&y, &y) {
            assert!((a - m).abs() < 1e-12);
        }
        assert_eq!(residualize(&[0.3], &[0.5]), vec![0.3]);
        assert_eq!(residualize(&[0.3, 0.6], &[0.5, 0.5]), vec![0.3, 0.6]);
        assert_eq!(residualize(&[0.3, 0.3], &[0.1, 0.5]), vec![0.3, 0.3]);
    }

    #[test]
    fn rank_restore_worked_example() {
        let values = [0.7632, 0.8196, 0.2606, 0.3710, 0.3170, 0.3146];
        let out = rank_restore(&values, &[1, 3, 6, 8, 10, 12], 13);
        assert_eq!(out, scaled(&[19, 23, 1, 15, 11, 5], 26.0));
    }

    #[test]
    fn rank_restore_identity_and_ties() {
        let levels = [2, 4, 5];
        let sorted: Vec<f64> = levels.iter().map(|&g| midpoint(g, 7)).collect();
        assert_eq!(rank_restore(&sorted, &levels, 7), sorted);

        let out = rank_restore(&[0.4, 0.2, 0.4, 0.1], &[1, 2, 3, 4], 4);
        assert_eq!(
            out,
            vec![
                midpoint(3, 4),
                midpoint(2, 4),
                midpoint(4, 4),
                midpoint(1, 4)
            ]
        );
    }

    #[test]
    fn rms_correlation_basics() {
        let same = array![[0.1, 0.1], [0.5, 0.5], [0.9, 0.9]];
        assert!((rms_correlation(same.view()).unwrap() - 1.0).abs() < 1e-12);
        let orth = array![[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
        assert!(rms_correlation(orth.view()).unwrap().abs() < 1e-12);
        assert!(rms_correlation(array![[0.1], [0.2]].view()).is_err());
        assert!(rms_correlation(array![[0.1, 0.2]].view()).is_err());
        assert!(rms_correlation(array![[0.1, 0.2], [0.1, 0.3]].view()).is_err());
    }

    #[test]
    fn two_by_two_single_slice() {
        let partition = LevelPartition::whole(2).unwrap();
        let design = Design::new(
            array![[0.25, 0.75], [0.75, 0.25]],
            partition.sizes().clone(),
        )
        .unwrap();
        let (out, trace) = reduce_correlations(design, &partition, 10).unwrap();
        assert_eq!(trace.len(), 11);
        for col in out.values().columns() {
            let mut v = col.to_vec();
            v.sort_by(f64::total_cmp);
            assert_eq!(v, vec![0.25, 0.75]);
        }
    }

    #[test]
    fn mismatched_partition_is_rejected() {
        let partition = LevelPartition::whole(3).unwrap();
        let design = crate::generate_midpoint_lhd(4, 2, &crate::RngStream::new(0));
        assert!(reduce_correlations(design.clone(), &partition, 10).is_err());
        let partition = LevelPartition::whole(4).unwrap();
        assert!(reduce_correlations(design, &partition, 0).is_err());
    }
}
