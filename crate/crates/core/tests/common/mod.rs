#![allow(dead_code)]

use ndarray::Array2;
use slhd::{Design, LevelPartition, SliceSizes};

/// Numerators over 26 of the 13-run, three-column worked example, before the
/// sweep. Rows 1-6 form the first slice, rows 7-13 the second.
pub const START: [[usize; 13]; 3] = [
    [19, 23, 11, 5, 15, 1, 25, 9, 7, 3, 17, 13, 21],
    [15, 23, 11, 5, 1, 19, 9, 13, 21, 17, 3, 7, 25],
    [11, 15, 19, 5, 23, 1, 17, 21, 9, 25, 7, 13, 3],
];

/// After the first forward pass and rank restoration.
pub const AFTER_FORWARD: [[usize; 13]; 3] = [
    [19, 23, 1, 15, 11, 5, 25, 9, 3, 7, 17, 13, 21],
    [15, 23, 11, 1, 5, 19, 9, 13, 21, 17, 3, 7, 25],
    [11, 15, 19, 5, 23, 1, 17, 21, 9, 25, 7, 13, 3],
];

/// After ten full iterations.
pub const FINAL: [[usize; 13]; 3] = [
    [19, 23, 1, 15, 11, 5, 25, 9, 3, 7, 17, 13, 21],
    [15, 23, 11, 1, 5, 19, 13, 9, 17, 21, 3, 7, 25],
    [11, 15, 19, 5, 23, 1, 21, 17, 7, 25, 9, 13, 3],
];

pub fn sizes(v: &[usize]) -> SliceSizes {
    SliceSizes::new(v.to_vec()).unwrap()
}

pub fn worked_partition() -> LevelPartition {
    LevelPartition::from_groups(
        sizes(&[6, 7]),
        vec![vec![1, 3, 6, 8, 10, 12], vec![2, 4, 5, 7, 9, 11, 13]],
    )
    .unwrap()
}

pub fn from_numerators(columns: &[[usize; 13]; 3]) -> Design {
    let values = Array2::from_shape_fn((13, 3), |(r, l)| {
        slhd::midpoint(columns[l][r].div_ceil(2), 13)
    });
    Design::new(values, sizes(&[6, 7])).unwrap()
}

/// Numerators `2a - 1` of the design's levels, column by column, or `None`
/// if some entry is not a midpoint.
pub fn numerators(design: &Design) -> Option<Vec<Vec<usize>>> {
    let levels = design.levels()?;
    Some(
        levels
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|&a| 2 * a - 1).collect())
            .collect(),
    )
}

pub fn matches(design: &Design, want: &[[usize; 13]; 3]) -> bool {
    numerators(design).is_some_and(|got| got.iter().zip(want).all(|(g, w)| g == w))
}
