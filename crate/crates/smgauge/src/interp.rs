//! Four-point (cubic) Lagrange interpolation of samples on the
//! cell-centered grid.
//!
//! Beyond the origin the samples are continued by parity,
//! f(−r) = (−1)^k f(r); beyond the last node they are continued by zero.

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::grid::RadialGrid;

/// Outcome of a point evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub value: Complex64,
    /// The point lay beyond r_max and was clamped to the outer edge.
    pub clamped: bool,
}

fn node_value(values: &[Complex64], parity: u32, j: isize) -> Complex64 {
    let n = values.len() as isize;
    if j >= n {
        return Complex64::new(0.0, 0.0);
    }
    if j >= 0 {
        return values[j as usize];
    }
    // r_{−1−j} = −r_j on the cell-centered grid.
    let mirror = values[(-1 - j) as usize];
    if parity % 2 == 0 {
        mirror
    } else {
        -mirror
    }
}

pub fn cubic(grid: &RadialGrid, values: &[Complex64], parity: u32, r: f64) -> Sample {
    let r_max = grid.r_max();
    let clamped = r > r_max;
    let r = r.min(r_max);
    let s = r / grid.h() - 0.5;
    let base = s.floor() as isize;
    let t = s - base as f64;
    let p = [base - 1, base, base + 1, base + 2].map(|j| node_value(values, parity, j));
    let w = [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ];
    let value = p[0] * w[0] + p[1] * w[1] + p[2] * w[2] + p[3] * w[3];
    Sample { value, clamped }
}

/// Like [`cubic`] inside the grid, but near r_max the stencil is shifted
/// inward (extrapolation) instead of continuing by zero.
pub(crate) fn cubic_inner(grid: &RadialGrid, values: &[Complex64], parity: u32, r: f64) -> Complex64 {
    let s = r / grid.h() - 0.5;
    let n = values.len() as isize;
    let base = (s.floor() as isize).min(n - 3);
    let t = s - base as f64;
    let p = [base - 1, base, base + 1, base + 2].map(|j| node_value(values, parity, j));
    let w = [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ];
    p[0] * w[0] + p[1] * w[1] + p[2] * w[2] + p[3] * w[3]
}

/// Cubic interpolation of real 3-vectors (frame components), with the
/// same inward stencil shift as [`cubic_inner`] near r_max.
pub(crate) fn cubic_vec3(grid: &RadialGrid, values: &[[f64; 3]], parities: [u32; 3], r: f64) -> [f64; 3] {
    let s = r / grid.h() - 0.5;
    let n = values.len() as isize;
    let base = (s.floor() as isize).min(n - 3);
    let t = s - base as f64;
    let w = [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ];
    let mut out = [0.0; 3];
    for (slot, weight) in w.iter().enumerate() {
        let j = base - 1 + slot as isize;
        for c in 0..3 {
            let v = if j >= 0 {
                values[j as usize][c]
            } else {
                let m = values[(-1 - j) as usize][c];
                if parities[c] % 2 == 0 {
                    m
                } else {
                    -m
                }
            };
            out[c] += weight * v;
        }
    }
    out
}
