//! Reference tensors and decompositions with known exact structure.
//!
//! These small instances back the test suite and the checked-in fixture
//! files under `fixtures/`. They are all integer or closed-form valued, so
//! expected results can be stated exactly.

use ndarray::Array2;
use num_complex::Complex64;

use crate::tensor::{CPDecomposition, DenseTensor};

fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> Array2<Complex64> {
    assert_eq!(entries.len(), rows * cols);
    Array2::from_shape_fn((rows, cols), |(i, j)| {
        Complex64::new(entries[i * cols + j], 0.0)
    })
}

/// 3x3x3 integer tensor with a known generating polynomial; slices given
/// rows-by-columns for the third index fixed.
pub fn small_cubic() -> DenseTensor {
    let slices: [[[f64; 3]; 3]; 3] = [
        [[11.0, 20.0, 10.0], [7.0, 10.0, 5.0], [12.0, 18.0, 9.0]],
        [[15.0, 24.0, 12.0], [15.0, 18.0, 9.0], [24.0, 30.0, 15.0]],
        [[7.0, 10.0, 5.0], [9.0, 10.0, 5.0], [14.0, 16.0, 8.0]],
    ];
    DenseTensor::from_fn(vec![3, 3, 3], |idx| {
        Complex64::new(slices[idx[2]][idx[0]][idx[1]], 0.0)
    })
    .unwrap()
}

/// Exact rank-4 decomposition of [`cubic_rank4`], in the first-entry-1
/// normalization for modes 2 and 3.
pub fn cubic_rank4_factors() -> CPDecomposition {
    let u1 = real_matrix(
        4,
        4,
        &[
            8.0, 6.0, 4.0, 9.0, //
            8.0, 12.0, 16.0, 12.0, //
            4.0, 6.0, 4.0, 12.0, //
            4.0, 12.0, 8.0, 9.0,
        ],
    );
    let u2 = real_matrix(
        4,
        4,
        &[
            1.0,
            1.0,
            1.0,
            1.0,
            0.5,
            1.0,
            3.0,
            1.0 / 3.0,
            1.0,
            1.0,
            3.0,
            1.0,
            1.0,
            4.0,
            1.0,
            2.0 / 3.0,
        ],
    );
    let u3 = real_matrix(
        3,
        4,
        &[
            1.0,
            1.0,
            1.0,
            1.0,
            2.0,
            1.0,
            1.0,
            2.0,
            1.0,
            2.0 / 3.0,
            0.75,
            3.0,
        ],
    );
    CPDecomposition::new(vec![u1, u2, u3]).unwrap()
}

/// 4x4x3 integer tensor of exact rank 4.
pub fn cubic_rank4() -> DenseTensor {
    let slices: [[[f64; 4]; 4]; 3] = [
        [
            [27.0, 25.0, 35.0, 42.0],
            [48.0, 68.0, 80.0, 80.0],
            [26.0, 24.0, 34.0, 40.0],
            [33.0, 41.0, 49.0, 66.0],
        ],
        [
            [44.0, 32.0, 52.0, 56.0],
            [68.0, 76.0, 100.0, 96.0],
            [42.0, 30.0, 50.0, 52.0],
            [46.0, 46.0, 62.0, 76.0],
        ],
        [
            [42.0, 26.0, 48.0, 45.0],
            [64.0, 60.0, 88.0, 76.0],
            [47.0, 27.0, 53.0, 47.0],
            [45.0, 37.0, 57.0, 60.0],
        ],
    ];
    DenseTensor::from_fn(vec![4, 4, 3], |idx| {
        Complex64::new(slices[idx[2]][idx[0]][idx[1]], 0.0)
    })
    .unwrap()
}

/// Integer generating factors of the order-4 rank-5 instance.
pub fn order4_rank5_generators() -> CPDecomposition {
    let v1 = real_matrix(
        5,
        5,
        &[
            10.0, 5.0, -9.0, -5.0, 7.0, //
            8.0, 6.0, -3.0, -9.0, 7.0, //
            -9.0, -1.0, 7.0, -3.0, -1.0, //
            9.0, -7.0, -8.0, 8.0, -5.0, //
            -1.0, 10.0, 7.0, -3.0, 10.0,
        ],
    );
    let v2 = real_matrix(
        4,
        5,
        &[
            -1.0, 9.0, -8.0, 8.0, 2.0, //
            0.0, -1.0, -4.0, 6.0, 8.0, //
            7.0, -7.0, -2.0, 2.0, 10.0, //
            2.0, 10.0, -3.0, -1.0, -3.0,
        ],
    );
    let v3 = real_matrix(
        3,
        5,
        &[
            5.0, 2.0, -2.0, -7.0, 3.0, //
            9.0, -3.0, -7.0, 7.0, -2.0, //
            0.0, -10.0, 10.0, 6.0, 10.0,
        ],
    );
    let v4 = real_matrix(
        3,
        5,
        &[
            8.0, 2.0, -7.0, 10.0, -5.0, //
            4.0, -8.0, 4.0, -6.0, -10.0, //
            5.0, 0.0, 7.0, -1.0, -2.0,
        ],
    );
    CPDecomposition::new(vec![v1, v2, v3, v4]).unwrap()
}

/// 5x4x3x3 tensor of exact rank 5.
pub fn order4_rank5() -> DenseTensor {
    order4_rank5_generators().expand()
}

/// The rank-5 decomposition of [`order4_rank5`] in the first-entry-1
/// normalization (equivalent to the generators up to scaling).
pub fn order4_rank5_expected_factors() -> CPDecomposition {
    let u1 = real_matrix(
        5,
        5,
        &[
            -400.0, 180.0, 1008.0, 2800.0, -210.0, //
            -320.0, 216.0, 336.0, 5040.0, -210.0, //
            360.0, -36.0, -784.0, 1680.0, 30.0, //
            -360.0, -252.0, 896.0, -4480.0, 150.0, //
            40.0, 360.0, -784.0, 1680.0, -300.0,
        ],
    );
    let u2 = real_matrix(
        4,
        5,
        &[
            1.0,
            1.0,
            1.0,
            1.0,
            1.0,
            0.0,
            -1.0 / 9.0,
            0.5,
            0.75,
            4.0,
            -7.0,
            -7.0 / 9.0,
            0.25,
            0.25,
            5.0,
            -2.0,
            10.0 / 9.0,
            0.375,
            -0.125,
            -1.5,
        ],
    );
    let u3 = real_matrix(
        3,
        5,
        &[
            1.0,
            1.0,
            1.0,
            1.0,
            1.0,
            1.8,
            -1.5,
            3.5,
            -1.0,
            -2.0 / 3.0,
            0.0,
            -5.0,
            -5.0,
            -6.0 / 7.0,
            10.0 / 3.0,
        ],
    );
    let u4 = real_matrix(
        3,
        5,
        &[
            1.0,
            1.0,
            1.0,
            1.0,
            1.0,
            0.5,
            -4.0,
            -4.0 / 7.0,
            -0.6,
            2.0,
            0.625,
            0.0,
            -1.0,
            -0.1,
            0.4,
        ],
    );
    CPDecomposition::new(vec![u1, u2, u3, u4]).unwrap()
}

/// 5x5x4 tensor with entries `i1 + i2/2 + i3/3 + sqrt(i1^2 + i2^2 + i3^2)`
/// over 1-based indices. Numerically low rank but not exactly low rank.
pub fn radial_sum_5x5x4() -> DenseTensor {
    DenseTensor::from_fn(vec![5, 5, 4], |idx| {
        let i1 = (idx[0] + 1) as f64;
        let i2 = (idx[1] + 1) as f64;
        let i3 = (idx[2] + 1) as f64;
        Complex64::new(
            i1 + i2 / 2.0 + i3 / 3.0 + (i1 * i1 + i2 * i2 + i3 * i3).sqrt(),
            0.0,
        )
    })
    .unwrap()
}

/// 6x6x6x5x4 tensor with entries `arctan(i1 + 2 i2 + 3 i3 + 4 i4 + 5 i5)`
/// over 1-based indices.
pub fn arctan_order5() -> DenseTensor {
    DenseTensor::from_fn(vec![6, 6, 6, 5, 4], |idx| {
        let v: f64 = idx
            .iter()
            .enumerate()
            .map(|(j, &i)| (j + 1) as f64 * (i + 1) as f64)
            .sum();
        Complex64::new(v.atan(), 0.0)
    })
    .unwrap()
}
