//! Coulomb-gauge field algebra: ψ₁, ψ₂/r, A₂, A₀ and the residuals of
//! the compatibility condition and the conservation law.

use alloc::boxed::Box;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use once_cell::race::OnceBox;

use crate::grid::{self, RadialField, RadialGrid, RealField};
use crate::{Error, Result, Target};

/// Profiles derived from (ψ⁺, ψ⁻); computed once per state.
#[derive(Clone, Debug)]
pub struct Derived {
    pub psi1: Vec<Complex64>,
    pub psi2_over_r: Vec<Complex64>,
    pub a2: Vec<f64>,
    pub a0: Vec<f64>,
}

/// The pair (ψ⁺, ψ⁻) at time t.
///
/// ψ⁺ has angular order m+1 and ψ⁻ order m−1. A₂, ψ₂/r and A₀ are
/// materialized lazily. The cache is write-once: concurrent first reads
/// may each compute it, exactly one result is kept, and all later reads
/// are lock-free.
#[derive(Debug)]
pub struct GaugeState {
    pub t: f64,
    pub m: u32,
    pub target: Target,
    pub psi_plus: RadialField,
    pub psi_minus: RadialField,
    cache: OnceBox<Derived>,
}

impl Clone for GaugeState {
    fn clone(&self) -> Self {
        GaugeState {
            t: self.t,
            m: self.m,
            target: self.target,
            psi_plus: self.psi_plus.clone(),
            psi_minus: self.psi_minus.clone(),
            cache: OnceBox::new(),
        }
    }
}

impl GaugeState {
    pub fn new(t: f64, m: u32, target: Target, psi_plus: RadialField, psi_minus: RadialField) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("equivariance index m must be at least 1"));
        }
        psi_plus.check_same_grid(&psi_minus)?;
        if psi_plus.order != m + 1 {
            return Err(Error::OrderMismatch { expected: m + 1, found: psi_plus.order });
        }
        if psi_minus.order != m - 1 {
            return Err(Error::OrderMismatch { expected: m - 1, found: psi_minus.order });
        }
        Ok(GaugeState { t, m, target, psi_plus, psi_minus, cache: OnceBox::new() })
    }

    pub fn zero(grid: RadialGrid, m: u32) -> Result<Self> {
        GaugeState::new(0.0, m, Target::Hyperbolic, RadialField::zeros(grid, m + 1), RadialField::zeros(grid, m - 1))
    }

    pub fn grid(&self) -> RadialGrid {
        self.psi_plus.grid
    }

    pub fn mu(&self) -> f64 {
        self.target.mu()
    }

    pub fn derived(&self) -> &Derived {
        self.cache.get_or_init(|| Box::new(self.compute_derived()))
    }

    fn compute_derived(&self) -> Derived {
        let (psi1, psi2_over_r) = pair_values(&self.psi_plus.values, &self.psi_minus.values);
        let a2 = a2_values(self);
        let a0 = a0_values(self);
        Derived { psi1, psi2_over_r, a2, a0 }
    }

    /// ψ₂ = r · (ψ₂/r).
    pub fn psi2(&self) -> Vec<Complex64> {
        let g = self.grid();
        self.derived().psi2_over_r.iter().enumerate().map(|(i, v)| v * g.r(i)).collect()
    }

    /// g_λ applied to both components: ψ(r) ↦ λ⁻¹ψ(r/λ) on the λ-scaled grid.
    pub fn scaled(&self, lambda: f64) -> GaugeState {
        GaugeState {
            t: self.t * lambda * lambda,
            m: self.m,
            target: self.target,
            psi_plus: self.psi_plus.scaled(lambda),
            psi_minus: self.psi_minus.scaled(lambda),
            cache: OnceBox::new(),
        }
    }

    /// Same grid, order and parameters with new component values.
    pub(crate) fn with_values(&self, t: f64, plus: Vec<Complex64>, minus: Vec<Complex64>) -> GaugeState {
        GaugeState {
            t,
            m: self.m,
            target: self.target,
            psi_plus: RadialField { grid: self.grid(), order: self.m + 1, values: plus },
            psi_minus: RadialField { grid: self.grid(), order: self.m - 1, values: minus },
            cache: OnceBox::new(),
        }
    }
}

fn pair_values(plus: &[Complex64], minus: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let minus_half_i = Complex64::new(0.0, -0.5);
    plus.iter().zip(minus).map(|(p, q)| ((p + q) * 0.5, (p - q) * minus_half_i)).unzip()
}

/// ψ₁ = (ψ⁺ + ψ⁻)/2 and ψ₂/r = (ψ⁺ − ψ⁻)/2i.
pub fn derived_pair(state: &GaugeState) -> (RadialField, RadialField) {
    let (p1, p2) = pair_values(&state.psi_plus.values, &state.psi_minus.values);
    let g = state.grid();
    (
        RadialField { grid: g, order: state.m + 1, values: p1 },
        RadialField { grid: g, order: state.m, values: p2 },
    )
}

/// [r∂ᵣ]⁻¹f(r) = −∫_r^∞ f(s)/s ds, nothing beyond r_max.
pub fn r_dr_inverse(f: &RadialField) -> RadialField {
    let g = f.grid;
    let cells: Vec<Complex64> = f.values.iter().enumerate().map(|(i, v)| v * (g.h() / g.r(i))).collect();
    let values = grid::cumulative_to_infinity(&cells).into_iter().map(|v| -v).collect();
    RadialField { grid: g, order: f.order, values }
}

pub(crate) fn r_dr_inverse_real(values: &[f64], g: &RadialGrid) -> Vec<f64> {
    let cells: Vec<f64> = values.iter().enumerate().map(|(i, v)| v * (g.h() / g.r(i))).collect();
    grid::cumulative_to_infinity(&cells).into_iter().map(|v| -v).collect()
}

fn a2_values(state: &GaugeState) -> Vec<f64> {
    let g = state.grid();
    let mu = state.mu();
    let m = state.m as f64;
    let cells: Vec<f64> = (0..g.len())
        .map(|i| {
            let d = 0.25 * (state.psi_plus.values[i].norm_sqr() - state.psi_minus.values[i].norm_sqr());
            d * g.weight(i)
        })
        .collect();
    grid::cumulative_from_origin(&cells).into_iter().map(|c| -mu * m + mu * c).collect()
}

/// A₂ + μm = μ ∫₀^r (|ψ⁺|² − |ψ⁻|²)/4 s ds.
///
/// This is the sign forced by differentiating μA₂² + |ψ₂|² = μm² along
/// ∂ᵣ[r(ψ⁺ − ψ⁻)] = −A₂(ψ⁺ + ψ⁻); for μ = −1 it keeps A₂ ≥ m on
/// compatible pairs.
pub fn compute_a2(state: &GaugeState) -> RealField {
    RealField { grid: state.grid(), values: state.derived().a2.clone() }
}

fn a0_values(state: &GaugeState) -> Vec<f64> {
    let g = state.grid();
    let mu = state.mu();
    let re: Vec<f64> = state
        .psi_plus
        .values
        .iter()
        .zip(&state.psi_minus.values)
        .map(|(p, q)| (p.conj() * q).re)
        .collect();
    let inv = r_dr_inverse_real(&re, &g);
    re.iter().zip(&inv).map(|(x, y)| -0.5 * mu * x - mu * y).collect()
}

/// A₀ = −(μ/2) Re(ψ̄⁺ψ⁻) − μ[r∂ᵣ]⁻¹ Re(ψ̄⁺ψ⁻), the potential normalized
/// at infinity. Its r dr integral vanishes exactly on the grid.
pub fn compute_a0(state: &GaugeState) -> RealField {
    RealField { grid: state.grid(), values: state.derived().a0.clone() }
}

/// Residual ∂ᵣ[r(ψ⁺ − ψ⁻)] + A₂(ψ⁺ + ψ⁻) and its L²(r dr) norm after
/// division by r.
pub fn compatibility_residual(state: &GaugeState) -> (RadialField, f64) {
    let g = state.grid();
    let d = state.derived();
    let p: Vec<Complex64> = (0..g.len()).map(|i| (state.psi_plus.values[i] - state.psi_minus.values[i]) * g.r(i)).collect();
    // r(ψ⁺ − ψ⁻) = 2iψ₂ has the parity of order m.
    let dp = grid::derivative(&p, g.h(), state.m);
    let values: Vec<Complex64> = (0..g.len())
        .map(|i| dp[i] + (state.psi_plus.values[i] + state.psi_minus.values[i]) * d.a2[i])
        .collect();
    let norm = g.integrate_r(values.iter().enumerate().map(|(i, v)| v.norm_sqr() / (g.r(i) * g.r(i)))).sqrt();
    (RadialField { grid: g, order: state.m, values }, norm)
}

/// sup_r |μA₂² + |ψ₂|² − μm²| for explicit profiles.
pub fn conservation_residual_of(a2: &[f64], psi2: &[Complex64], m: u32, target: Target) -> f64 {
    let mu = target.mu();
    let m2 = (m as f64) * (m as f64);
    a2.iter()
        .zip(psi2)
        .map(|(a, p)| (mu * a * a + p.norm_sqr() - mu * m2).abs())
        .fold(0.0, f64::max)
}

/// sup_r |μA₂² + |ψ₂|² − μm²| with A₂ and ψ₂ derived from the state.
pub fn conservation_residual(state: &GaugeState) -> f64 {
    conservation_residual_of(&state.derived().a2, &state.psi2(), state.m, state.target)
}

pub use crate::grid::mass;

/// ∫ A₀ r dr.
pub fn a0_mean(state: &GaugeState) -> f64 {
    state.grid().integrate_r(state.derived().a0.iter().copied())
}
