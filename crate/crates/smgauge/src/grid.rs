//! Cell-centered radial grid and the equivariant fields living on it.

use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Uniform cell-centered grid on (0, r_max): r_i = (i + ½)h, weights
/// w_i = r_i h for ∫ f r dr. No node sits at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialGrid {
    n: usize,
    h: f64,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !r_max.is_finite() {
            return Err(Error::Domain("grid r_max"));
        }
        if r_max <= 0.0 {
            return Err(Error::InvalidParameter("grid r_max must be positive"));
        }
        if n < 4 {
            return Err(Error::InvalidParameter("grid needs at least 4 nodes"));
        }
        Ok(RadialGrid { n, h: r_max / n as f64 })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn r_max(&self) -> f64 {
        self.n as f64 * self.h
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.r(i) * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.r(i))
    }

    /// The grid with every radius multiplied by λ.
    pub fn scaled(&self, lambda: f64) -> Self {
        RadialGrid { n: self.n, h: self.h * lambda }
    }

    /// Σ w_i |f_i|² (the discrete ∫|f|² r dr).
    pub fn integrate_r<I: IntoIterator<Item = f64>>(&self, f: I) -> f64 {
        f.into_iter().enumerate().map(|(i, v)| self.weight(i) * v).sum()
    }

    /// Σ h f_i (the discrete ∫ f dr).
    pub fn integrate_dr<I: IntoIterator<Item = f64>>(&self, f: I) -> f64 {
        f.into_iter().map(|v| self.h * v).sum::<f64>()
    }
}

/// Complex samples of an equivariant field of angular order k.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialField {
    pub grid: RadialGrid,
    pub order: u32,
    pub values: Vec<Complex64>,
}

impl RadialField {
    pub fn new(grid: RadialGrid, order: u32, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape { expected: grid.len(), found: values.len() });
        }
        Ok(RadialField { grid, order, values })
    }

    pub fn zeros(grid: RadialGrid, order: u32) -> Self {
        RadialField { grid, order, values: alloc::vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: RadialGrid, order: u32, f: impl Fn(f64) -> Complex64) -> Self {
        RadialField { grid, order, values: grid.nodes().map(f).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_same_grid(&self, other: &RadialField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Index of the first non-finite sample.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite()))
    }

    /// ‖f‖_{L²(r dr)}.
    pub fn norm(&self) -> f64 {
        mass(self).sqrt()
    }

    /// ∫|f|⁴ r dr.
    pub fn l4_density(&self) -> f64 {
        self.grid.integrate_r(self.values.iter().map(|z| z.norm_sqr() * z.norm_sqr()))
    }

    /// ‖f − g‖_{L²(r dr)}.
    pub fn distance(&self, other: &RadialField) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .grid
            .integrate_r(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()))
            .sqrt())
    }

    /// g_λ f(r) = λ⁻¹ f(r/λ), realized exactly on the λ-scaled grid.
    pub fn scaled(&self, lambda: f64) -> RadialField {
        RadialField {
            grid: self.grid.scaled(lambda),
            order: self.order,
            values: self.values.iter().map(|z| z / lambda).collect(),
        }
    }
}

/// Real profile on a radial grid (A₂, A₀, potentials).
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape { expected: grid.len(), found: values.len() });
        }
        Ok(RealField { grid, values })
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        RealField { grid, values: grid.nodes().map(f).collect() }
    }

    /// ∫ f r dr.
    pub fn integral_r(&self) -> f64 {
        self.grid.integrate_r(self.values.iter().copied())
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// M(f) = ∫|f|² r dr.
pub fn mass(f: &RadialField) -> f64 {
    f.grid.integrate_r(f.values.iter().map(|z| z.norm_sqr()))
}

/// Centered first derivative on the cell-centered grid.
///
/// The origin ghost is f(−r₀) = (−1)^parity f(r₀); the outer end uses a
/// second-order one-sided stencil.
pub(crate) fn derivative<T>(values: &[T], h: f64, parity: u32) -> Vec<T>
where
    T: Copy + core::ops::Sub<Output = T> + core::ops::Add<Output = T> + core::ops::Mul<f64, Output = T>,
{
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    let ghost = if parity % 2 == 0 { values[0] } else { values[0] * -1.0 };
    let inv2h = 0.5 / h;
    out.push((values[1] - ghost) * inv2h);
    for i in 1..n - 1 {
        out.push((values[i + 1] - values[i - 1]) * inv2h);
    }
    out.push((values[n - 1] * 3.0 - values[n - 2] * 4.0 + values[n - 3]) * inv2h);
    out
}

/// Radial Laplacian (1/r)∂ᵣ(r∂ᵣ f) in flux form. The inner flux vanishes
/// at r = 0; the outer ghost extrapolates quadratically, so the last
/// second difference is the one at the neighbouring node.
pub(crate) fn radial_laplacian(values: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let n = values.len();
    let h = grid.h();
    let ghost = 3.0 * values[n - 1] - 3.0 * values[n - 2] + values[n - 3];
    (0..n)
        .map(|i| {
            let r = grid.r(i);
            let right = if i + 1 < n { values[i + 1] } else { ghost };
            let flux_out = (r + 0.5 * h) * (right - values[i]);
            let flux_in = if i == 0 { 0.0 } else { (r - 0.5 * h) * (values[i] - values[i - 1]) };
            (flux_out - flux_in) / (r * h * h)
        })
        .collect()
}

/// Diagonal weight θ_i = (i + ¼)/(2i + 1) for the partial cell of the
/// cumulative sums below; it makes both sums exact for integrands ∝ s
/// and makes them adjoint under Σ w_i (see [`cumulative_to_infinity`]).
#[inline]
fn theta(i: usize) -> f64 {
    (i as f64 + 0.25) / (2 * i + 1) as f64
}

/// c_i ≈ ∫₀^{r_i} g(s) ds from cell samples `cell[j] = g(r_j) h`.
pub(crate) fn cumulative_from_origin<T>(cell: &[T]) -> Vec<T>
where
    T: Copy + Default + core::ops::Add<Output = T> + core::ops::Mul<f64, Output = T>,
{
    let mut out = Vec::with_capacity(cell.len());
    let mut acc = T::default();
    for (i, &c) in cell.iter().enumerate() {
        out.push(acc + c * theta(i));
        acc = acc + c;
    }
    out
}

/// c_i ≈ ∫_{r_i}^∞ g(s) ds from cell samples `cell[j] = g(r_j) h`, with
/// nothing beyond the last cell.
///
/// With g = f/s this is the discrete −[r∂ᵣ]⁻¹f, and
/// Σ_i w_i c_i = ½ Σ_j w_j f_j holds exactly, mirroring
/// ∫₀^∞ r ∫_r^∞ f/s ds dr = ½∫ f s ds.
pub(crate) fn cumulative_to_infinity<T>(cell: &[T]) -> Vec<T>
where
    T: Copy + Default + core::ops::Add<Output = T> + core::ops::Mul<f64, Output = T>,
{
    let n = cell.len();
    let mut out = alloc::vec![T::default(); n];
    let mut acc = T::default();
    for i in (0..n).rev() {
        out[i] = acc + cell[i] * theta(i);
        acc = acc + cell[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_half_r_max_squared() {
        for &(r_max, n) in &[(1.0, 16usize), (10.0, 2048), (37.5, 999)] {
            let g = RadialGrid::new(r_max, n).unwrap();
            let s = g.integrate_r((0..n).map(|_| 1.0));
            assert!((s - 0.5 * r_max * r_max).abs() <= 1e-12 * s);
            assert!(g.r(0) > 0.0);
        }
    }

    #[test]
    fn gaussian_mass() {
        let g = RadialGrid::new(12.0, 4096).unwrap();
        let f = RadialField::from_fn(g, 0, |r| Complex64::new((-0.5 * r * r).exp(), 0.0));
        assert!((mass(&f) - 0.5).abs() < 1e-6);
        assert_eq!(mass(&RadialField::zeros(g, 0)), 0.0);
    }

    #[test]
    fn cumulative_sums_are_adjoint() {
        let g = RadialGrid::new(3.0, 37).unwrap();
        let f: Vec<f64> = g.nodes().map(|r| (r * 1.3).sin() + 0.2).collect();
        let cells: Vec<f64> = (0..g.len()).map(|i| f[i] / g.r(i) * g.h()).collect();
        let c = cumulative_to_infinity(&cells);
        let lhs = g.integrate_r(c.iter().copied());
        let rhs = 0.5 * g.integrate_r(f.iter().copied());
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn cumulative_exact_for_linear_integrand() {
        let g = RadialGrid::new(2.0, 20).unwrap();
        let cells: Vec<f64> = g.nodes().map(|r| r * g.h()).collect();
        let c = cumulative_from_origin(&cells);
        for (i, v) in c.iter().enumerate() {
            let r = g.r(i);
            assert!((v - 0.5 * r * r).abs() < 1e-14);
        }
    }
}
