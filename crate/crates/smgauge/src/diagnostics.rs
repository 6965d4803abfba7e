//! Momenta, virial balances and norm trackers.
//!
//! Everything here is a pure function of recorded states. The virial
//! quantities are reduced per state to a [`VirialSample`], so the same
//! balances can be evaluated from a stored [`Trajectory`] or streamed
//! through [`DiagnosticsStream`] without keeping states.
//!
//! Measures: integrals written `r dr` use the grid weights w_i = r_i h;
//! integrals written `dr` use Σ h f_i, the midpoint rule on the
//! cell-centered nodes.

use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::evolution::Trajectory;
use crate::gauge::{self, GaugeState};
use crate::grid::{self, RadialField, RadialGrid, RealField};
use crate::{Error, Result};

/// The C² transition φ on [1, 2]: 1 − 10y³ + 15y⁴ − 6y⁵ with y = x − 1,
/// so φ = 1 on [0, 1] and φ = 0 on [2, ∞).
fn phi(x: f64) -> (f64, f64, f64) {
    if x <= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    if x >= 2.0 {
        return (0.0, 0.0, 0.0);
    }
    let y = x - 1.0;
    let y2 = y * y;
    (
        1.0 - y * y2 * (10.0 - 15.0 * y + 6.0 * y2),
        -30.0 * y2 * (1.0 - 2.0 * y + y2),
        -60.0 * y * (1.0 - 3.0 * y + 2.0 * y2),
    )
}

/// Virial weight a(r), compactly supported in [0, 2R].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VirialWeights {
    /// a = φ(r/R).
    Cutoff { radius: f64 },
    /// a = r²φ(r/R).
    LocalizedR2 { radius: f64 },
}

impl VirialWeights {
    pub fn radius(&self) -> f64 {
        match *self {
            VirialWeights::Cutoff { radius } | VirialWeights::LocalizedR2 { radius } => radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.radius();
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter("virial radius must be positive and finite"));
        }
        Ok(())
    }

    /// (a, ∂ᵣa, ∂ᵣ²a) at r.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let big_r = self.radius();
        let (p, dp, ddp) = phi(r / big_r);
        let (dp, ddp) = (dp / big_r, ddp / (big_r * big_r));
        match self {
            VirialWeights::Cutoff { .. } => (p, dp, ddp),
            VirialWeights::LocalizedR2 { .. } => {
                (r * r * p, 2.0 * r * p + r * r * dp, 2.0 * p + 4.0 * r * dp + r * r * ddp)
            }
        }
    }

    /// max over the grid of |a|, |r∂ᵣa| and |(r∂ᵣ)²a|.
    pub fn scale_bounds(&self, grid: &RadialGrid) -> [f64; 3] {
        grid.nodes().fold([0.0; 3], |acc, r| {
            let (a, da, dda) = self.eval(r);
            // (r∂ᵣ)²a = r∂ᵣa + r²∂ᵣ²a.
            [acc[0].max(a.abs()), acc[1].max((r * da).abs()), acc[2].max((r * da + r * r * dda).abs())]
        })
    }
}

/// ψ₀ = i(∂ᵣψ₁ + ψ₁/r + iA₂ψ₂/r²).
///
/// The last two terms are combined as ((1 + A₂)ψ⁺ + (1 − A₂)ψ⁻)/(2r),
/// which stays bounded at the origin where each one alone is O(r⁻¹).
pub fn psi0(state: &GaugeState) -> RadialField {
    let g = state.grid();
    let d = state.derived();
    let parity = state.m + 1;
    let dpsi1 = grid::derivative(&d.psi1, g.h(), parity);
    let i = Complex64::new(0.0, 1.0);
    let values = (0..g.len())
        .map(|k| {
            let a2 = d.a2[k];
            let tail = (state.psi_plus.values[k] * (1.0 + a2) + state.psi_minus.values[k] * (1.0 - a2)) / (2.0 * g.r(k));
            i * (dpsi1[k] + tail)
        })
        .collect();
    RadialField { grid: g, order: state.m - 1, values }
}

/// M₀ both ways, M₁, the G density and A₀ on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumSlice {
    /// Re(ψ₀ψ̄₂)/(A₂+m).
    pub m0: RealField,
    /// Δ ln(A₂+m) + (∂ᵣA₂/(A₂+m))² − A₂/(A₂+m)(|ψ₁|² + |ψ₂/r|²).
    pub m0_expanded: RealField,
    /// Re(ψ₁ψ̄₂)/(A₂+m).
    pub m1: RealField,
    /// −(∂ᵣA₂/(A₂+m))² + A₂/(A₂+m)(|ψ₁|² + |ψ₂/r|²).
    pub g: RealField,
    pub a0: RealField,
    /// ∂ᵣA₂ = μ Im(ψ₁ψ̄₂), taken pointwise from the fields.
    pub da2: RealField,
    /// Lower bound m/(A₂+m)|ψ₁|² + A₂/(A₂+m)|ψ₂/r|² for G.
    pub g_floor: RealField,
    m: u32,
    psi1_sq: Vec<f64>,
    psi2r_sq: Vec<f64>,
}

impl MomentumSlice {
    /// ‖M₀ − M₀ᵉˣᵖ‖ / ‖M₀ᵉˣᵖ‖ in L²(r dr); 0 when both vanish.
    pub fn m0_discrepancy(&self) -> f64 {
        let g = self.m0.grid;
        let diff = g.integrate_r(self.m0.values.iter().zip(&self.m0_expanded.values).map(|(a, b)| (a - b) * (a - b)));
        let base = g.integrate_r(self.m0_expanded.values.iter().map(|b| b * b));
        if base == 0.0 {
            return diff.sqrt();
        }
        (diff / base).sqrt()
    }

    /// min_r G − m/(2m + M)|ψ₁|² − ½|ψ₂/r|² for a mass bound M ≥ M(ψ⁻).
    ///
    /// Nonnegative on compatible states, since A₂ ≤ m + M and
    /// (∂ᵣA₂)² ≤ |ψ₁|²(A₂² − m²).
    pub fn positivity_margin(&self, mass_bound: f64) -> f64 {
        let m = self.m as f64;
        let c = m / (2.0 * m + mass_bound);
        (0..self.g.values.len())
            .map(|i| self.g.values[i] - c * self.psi1_sq[i] - 0.5 * self.psi2r_sq[i])
            .fold(f64::INFINITY, f64::min)
    }

    /// min_r G − g_floor, the sharp pointwise form of the same bound.
    pub fn floor_margin(&self) -> f64 {
        self.g.values.iter().zip(&self.g_floor.values).map(|(g, f)| g - f).fold(f64::INFINITY, f64::min)
    }
}

pub fn momenta(state: &GaugeState) -> MomentumSlice {
    let g = state.grid();
    let d = state.derived();
    let m = state.m as f64;
    let mu = state.mu();
    let p0 = psi0(state);
    let n = g.len();
    let mut m0 = Vec::with_capacity(n);
    let mut m1 = Vec::with_capacity(n);
    let mut gd = Vec::with_capacity(n);
    let mut da2 = Vec::with_capacity(n);
    let mut floor = Vec::with_capacity(n);
    let mut tail = Vec::with_capacity(n);
    let mut psi1_sq = Vec::with_capacity(n);
    let mut psi2r_sq = Vec::with_capacity(n);
    for i in 0..n {
        let r = g.r(i);
        let a2 = d.a2[i];
        let den = a2 + m;
        let psi2 = d.psi2_over_r[i] * r;
        let s1 = d.psi1[i].norm_sqr();
        let s2 = d.psi2_over_r[i].norm_sqr();
        let dadr = mu * (d.psi1[i] * psi2.conj()).im;
        m0.push((p0.values[i] * psi2.conj()).re / den);
        m1.push((d.psi1[i] * psi2.conj()).re / den);
        gd.push(-(dadr / den).powi(2) + a2 / den * (s1 + s2));
        tail.push((dadr / den).powi(2) - a2 / den * (s1 + s2));
        floor.push(m / den * s1 + a2 / den * s2);
        da2.push(dadr);
        psi1_sq.push(s1);
        psi2r_sq.push(s2);
    }
    let ln: Vec<f64> = d.a2.iter().map(|a| (a + m).ln()).collect();
    let lap = grid::radial_laplacian(&ln, &g);
    let expanded = lap.iter().zip(&tail).map(|(a, b)| a + b).collect();
    MomentumSlice {
        m0: RealField { grid: g, values: m0 },
        m0_expanded: RealField { grid: g, values: expanded },
        m1: RealField { grid: g, values: m1 },
        g: RealField { grid: g, values: gd },
        a0: RealField { grid: g, values: d.a0.clone() },
        da2: RealField { grid: g, values: da2 },
        g_floor: RealField { grid: g, values: floor },
        m: state.m,
        psi1_sq,
        psi2r_sq,
    }
}

/// Per-state integrals entering the virial balances for one weight.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VirialSample {
    pub t: f64,
    /// ∫ a (A₂ − m) r dr.
    pub a2_moment: f64,
    /// ∫ r∂ᵣa Re(ψ₁ψ̄₂/r) r dr.
    pub a2_flux: f64,
    /// ∫ a M₁ dr.
    pub m1_moment: f64,
    /// ∫ ∂ᵣa M₀ dr.
    pub m0_flux: f64,
    /// ∫ ∂ᵣa A₀ dr.
    pub a0_flux: f64,
    /// a(0) A₀(0), the boundary term of the integration by parts.
    pub origin: f64,
    /// ∫_{r ≤ R} r⁻¹∂ᵣa G r dr.
    pub g_inner: f64,
}

/// Even extrapolation to r = 0 from the first two cell centers.
fn origin_value(v: &[f64]) -> f64 {
    (9.0 * v[0] - v[1]) / 8.0
}

pub fn virial_sample(state: &GaugeState, weights: &VirialWeights) -> VirialSample {
    let g = state.grid();
    let d = state.derived();
    let m = state.m as f64;
    let ms = momenta(state);
    let big_r = weights.radius();
    let mut s = VirialSample { t: state.t, ..VirialSample::default() };
    for i in 0..g.len() {
        let r = g.r(i);
        let (a, da, _) = weights.eval(r);
        let w = g.weight(i);
        let h = g.h();
        s.a2_moment += w * a * (d.a2[i] - m);
        s.a2_flux += w * r * da * (d.psi1[i] * d.psi2_over_r[i].conj()).re;
        s.m1_moment += h * a * ms.m1.values[i];
        s.m0_flux += h * da * ms.m0.values[i];
        s.a0_flux += h * da * d.a0[i];
        if r <= big_r {
            s.g_inner += w * da / r * ms.g.values[i];
        }
    }
    s.origin = weights.eval(0.0).0 * origin_value(&d.a0);
    s
}

/// Centered derivative of y at the middle of three unevenly spaced times.
fn centered(t: [f64; 3], y: [f64; 3]) -> f64 {
    let (h0, h1) = (t[1] - t[0], t[2] - t[1]);
    (h0 * h0 * y[2] - h1 * h1 * y[0] + (h1 * h1 - h0 * h0) * y[1]) / (h0 * h1 * (h0 + h1))
}

/// d/dt ∫a(A₂ − m) r dr − ∫ r∂ᵣa Re(ψ₁ψ̄₂/r) r dr at every interior sample.
pub fn vir1_from_samples(samples: &[VirialSample]) -> Result<Vec<f64>> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, found: samples.len() });
    }
    Ok(samples
        .windows(3)
        .map(|w| {
            let lhs = centered([w[0].t, w[1].t, w[2].t], [w[0].a2_moment, w[1].a2_moment, w[2].a2_moment]);
            lhs - w[1].a2_flux
        })
        .collect())
}

/// Time-integrated vir3 balance from the first sample to the last.
///
/// Multiplying ∂ₜM₁ − ∂ᵣM₀ = −∂ᵣA₀ by a and integrating over r leaves
/// the boundary term a(0)A₀(0) on the right, since M₀(0) = 0 but A₀(0)
/// does not vanish; it is zero for the r² weight.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vir3Balance {
    /// ∫ a M₁ dr |₀ᵀ.
    pub moment_change: f64,
    /// ∫₀ᵀ∫ ∂ᵣa M₀ dr dt.
    pub m0_term: f64,
    /// ∫₀ᵀ∫ ∂ᵣa A₀ dr dt.
    pub a0_term: f64,
    /// ∫₀ᵀ a(0)A₀(0) dt.
    pub origin_term: f64,
    /// ∫₀ᵀ∫_{r ≤ R} r⁻¹∂ᵣa G r dr dt.
    pub g_term: f64,
}

impl Vir3Balance {
    /// Left side minus right side.
    pub fn residual(&self) -> f64 {
        self.moment_change + self.m0_term - self.a0_term - self.origin_term
    }

    /// Adds the trapezoid contribution of the interval [prev.t, next.t].
    pub fn advance(&mut self, prev: &VirialSample, next: &VirialSample) {
        let half = 0.5 * (next.t - prev.t);
        self.moment_change += next.m1_moment - prev.m1_moment;
        self.m0_term += half * (prev.m0_flux + next.m0_flux);
        self.a0_term += half * (prev.a0_flux + next.a0_flux);
        self.origin_term += half * (prev.origin + next.origin);
        self.g_term += half * (prev.g_inner + next.g_inner);
    }
}

pub fn vir3_from_samples(samples: &[VirialSample]) -> Result<Vir3Balance> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, found: samples.len() });
    }
    let mut b = Vir3Balance::default();
    for w in samples.windows(2) {
        b.advance(&w[0], &w[1]);
    }
    Ok(b)
}

fn samples_of(traj: &Trajectory, weights: &VirialWeights) -> Result<Vec<VirialSample>> {
    weights.validate()?;
    Ok(traj.states().map(|s| virial_sample(s, weights)).collect())
}

/// vir1 residual at every interior stored state of `traj`.
pub fn vir1_residual(traj: &Trajectory, weights: &VirialWeights) -> Result<Vec<f64>> {
    vir1_from_samples(&samples_of(traj, weights)?)
}

/// vir3 balance over the stored states of `traj`.
pub fn vir3_balance(traj: &Trajectory, weights: &VirialWeights) -> Result<Vir3Balance> {
    let samples = samples_of(traj, weights)?;
    if samples.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, found: samples.len() });
    }
    vir3_from_samples(&samples)
}

/// ‖f‖_{Ḣ¹ₑ} = (‖∂ᵣf‖² + m²‖f/r‖²)^{1/2} in L²(r dr).
pub fn he_norm(f: &RadialField, m_weight: u32) -> f64 {
    let g = f.grid;
    let d = grid::derivative(&f.values, g.h(), f.order);
    let k2 = (m_weight as f64).powi(2);
    g.integrate_r((0..g.len()).map(|i| d[i].norm_sqr() + k2 * f.values[i].norm_sqr() / (g.r(i) * g.r(i))))
        .sqrt()
}

/// Accumulated ∫∫|ψ±|⁴ r dr dt, trapezoid in time.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Strichartz {
    pub plus: f64,
    pub minus: f64,
    last: Option<(f64, f64, f64)>,
}

impl Strichartz {
    pub fn push(&mut self, state: &GaugeState) {
        let now = (state.t, state.psi_plus.l4_density(), state.psi_minus.l4_density());
        if let Some((t, p, q)) = self.last {
            let half = 0.5 * (now.0 - t);
            self.plus += half * (p + now.1);
            self.minus += half * (q + now.2);
        }
        self.last = Some(now);
    }
}

/// S(ψ⁺), S(ψ⁻) over the stored states of `traj`.
pub fn strichartz_accumulate(traj: &Trajectory) -> Strichartz {
    let mut s = Strichartz::default();
    for state in traj.states() {
        s.push(state);
    }
    s
}

/// One row of the diagnostics stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_plus: f64,
    pub mass_minus: f64,
    /// π M(ψ⁻), the map energy of a compatible state.
    pub energy: f64,
    pub compat_l2: f64,
    pub cons_sup: f64,
    pub a0_mean: f64,
    pub s4_plus: f64,
    pub s4_minus: f64,
    /// NaN at the first and last rows, where no centered difference exists.
    pub vir1_res: f64,
    /// Cumulative vir3 residual from the first row.
    pub vir3_res: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 11] = [
        "t",
        "mass_plus",
        "mass_minus",
        "energy",
        "compat_l2",
        "cons_sup",
        "a0_mean",
        "s4_plus",
        "s4_minus",
        "vir1_res",
        "vir3_res",
    ];

    pub fn values(&self) -> [f64; 11] {
        [
            self.t,
            self.mass_plus,
            self.mass_minus,
            self.energy,
            self.compat_l2,
            self.cons_sup,
            self.a0_mean,
            self.s4_plus,
            self.s4_minus,
            self.vir1_res,
            self.vir3_res,
        ]
    }
}

/// Turns a sequence of states into [`DiagnosticsRecord`]s.
///
/// A row is emitted once the following state is known (its vir1 entry is
/// a centered difference), so output lags input by one; [`finish`]
/// flushes the last row.
///
/// [`finish`]: DiagnosticsStream::finish
#[derive(Clone, Debug)]
pub struct DiagnosticsStream {
    weights: VirialWeights,
    strichartz: Strichartz,
    vir3: Vir3Balance,
    samples: Vec<VirialSample>,
    pending: Option<DiagnosticsRecord>,
}

impl DiagnosticsStream {
    pub fn new(weights: VirialWeights) -> Result<Self> {
        weights.validate()?;
        Ok(DiagnosticsStream {
            weights,
            strichartz: Strichartz::default(),
            vir3: Vir3Balance::default(),
            samples: Vec::with_capacity(3),
            pending: None,
        })
    }

    pub fn push(&mut self, state: &GaugeState) -> Option<DiagnosticsRecord> {
        let sample = virial_sample(state, &self.weights);
        if let Some(prev) = self.samples.last() {
            self.vir3.advance(prev, &sample);
        }
        self.strichartz.push(state);
        self.samples.push(sample);
        if self.samples.len() > 3 {
            self.samples.remove(0);
        }
        let mut out = self.pending.take();
        if let (Some(row), 3) = (out.as_mut(), self.samples.len()) {
            if let Ok(v) = vir1_from_samples(&self.samples) {
                row.vir1_res = v[0];
            }
        }
        let mass_minus = gauge::mass(&state.psi_minus);
        self.pending = Some(DiagnosticsRecord {
            t: state.t,
            mass_plus: gauge::mass(&state.psi_plus),
            mass_minus,
            energy: core::f64::consts::PI * mass_minus,
            compat_l2: gauge::compatibility_residual(state).1,
            cons_sup: gauge::conservation_residual(state),
            a0_mean: gauge::a0_mean(state),
            s4_plus: self.strichartz.plus,
            s4_minus: self.strichartz.minus,
            vir1_res: f64::NAN,
            vir3_res: self.vir3.residual(),
        });
        out
    }

    pub fn finish(&mut self) -> Option<DiagnosticsRecord> {
        self.pending.take()
    }

    pub fn vir3(&self) -> &Vir3Balance {
        &self.vir3
    }

    pub fn strichartz(&self) -> &Strichartz {
        &self.strichartz
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{evolve, EvolutionConfig, NoSink};
    use crate::reconstruct::{complete_pair, solve_comp1};
    use crate::Target;
    use proptest::prelude::*;

    fn gaussian_state(n: usize, r_max: f64, amp: f64) -> GaugeState {
        let g = RadialGrid::new(r_max, n).unwrap();
        let pm = RadialField::from_fn(g, 0, |r| Complex64::new(amp * (-r * r / 2.0).exp(), 0.0));
        complete_pair(&pm, &solve_comp1(&pm, 1, Target::Hyperbolic).unwrap()).unwrap()
    }

    #[test]
    fn transition_is_c2_and_monotone() {
        let eps = 1e-7;
        for &x in &[1.0, 2.0] {
            let (a, da, dda) = phi(x - eps);
            let (b, db, ddb) = phi(x + eps);
            assert!((a - b).abs() < 1e-12 && (da - db).abs() < 1e-6 && (dda - ddb).abs() < 1e-5);
        }
        let mut prev = 1.0;
        for k in 0..=100 {
            let (p, dp, _) = phi(1.0 + k as f64 / 100.0);
            assert!(p <= prev + 1e-15 && dp <= 0.0);
            prev = p;
        }
        // Derivatives against centered differences.
        let w = VirialWeights::LocalizedR2 { radius: 1.7 };
        for &r in &[0.4, 2.0, 2.9, 3.3] {
            let (a0, _, _) = w.eval(r - 1e-5);
            let (a1, d, dd) = w.eval(r);
            let (a2, _, _) = w.eval(r + 1e-5);
            assert!(((a2 - a0) / 2e-5 - d).abs() < 1e-6);
            assert!(((a2 - 2.0 * a1 + a0) / 1e-10 - dd).abs() < 1e-3);
        }
    }

    #[test]
    fn weight_scale_bounds() {
        let g = RadialGrid::new(20.0, 2000).unwrap();
        let [a, ra, rra] = VirialWeights::Cutoff { radius: 3.0 }.scale_bounds(&g);
        assert_eq!(a, 1.0);
        // r∂ᵣφ(r/R) = xφ'(x) peaks at 1.875·1.5 on the transition.
        assert!(ra < 3.0 && rra < 20.0);
        let [a, _, _] = VirialWeights::LocalizedR2 { radius: 3.0 }.scale_bounds(&g);
        assert!(a <= 4.0 * 9.0);
    }

    #[test]
    fn zero_state_gives_zero_diagnostics() {
        let g = RadialGrid::new(5.0, 100).unwrap();
        let s = GaugeState::zero(g, 2).unwrap();
        assert!(psi0(&s).values.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        let ms = momenta(&s);
        for f in [&ms.m0, &ms.m0_expanded, &ms.m1, &ms.g, &ms.a0] {
            assert_eq!(f.sup(), 0.0);
        }
        let v = virial_sample(&s, &VirialWeights::Cutoff { radius: 1.0 });
        assert_eq!(v, VirialSample { t: 0.0, ..VirialSample::default() });
        let f = RadialField::zeros(g, 1);
        assert_eq!(he_norm(&f, 1), 0.0);
    }

    #[test]
    fn m0_forms_agree_at_second_order() {
        let coarse = momenta(&gaussian_state(1024, 16.0, 0.7)).m0_discrepancy();
        let fine = momenta(&gaussian_state(2048, 16.0, 0.7)).m0_discrepancy();
        assert!(fine < 1e-2, "{fine:e}");
        assert!(coarse / fine > 3.0, "{coarse:e} {fine:e}");
    }

    #[test]
    fn g_density_bounds() {
        let s = gaussian_state(1024, 16.0, 0.9);
        let ms = momenta(&s);
        let mass = gauge::mass(&s.psi_minus);
        assert!(ms.positivity_margin(mass) >= -1e-8);
        assert!(ms.floor_margin() >= -1e-6, "{}", ms.floor_margin());
        assert!(ms.g.values.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn psi0_drives_psi1() {
        // ∂ₜψ₁ = ∂ᵣψ₀ − iA₀ψ₁ (D₀ψ₁ = D₁ψ₀ with A₁ = 0).
        let s = gaussian_state(2048, 16.0, 0.7);
        let dt = 1e-4;
        let mut cfg = EvolutionConfig::new(dt, 2.0 * dt, 1);
        cfg.store_states = true;
        let traj = evolve(&s, &cfg, &mut NoSink).unwrap();
        let st: Vec<_> = traj.states().collect();
        let mid = st[1];
        let g = mid.grid();
        let p0 = psi0(mid);
        let dp0 = grid::derivative(&p0.values, g.h(), mid.m + 1);
        let a0 = &mid.derived().a0;
        let psi1 = &mid.derived().psi1;
        let (before, after) = (&st[0].derived().psi1, &st[2].derived().psi1);
        let i = Complex64::new(0.0, 1.0);
        let num = g.integrate_r((0..g.len()).map(|k| {
            let lhs = (after[k] - before[k]) / (2.0 * dt);
            let rhs = dp0[k] - i * a0[k] * psi1[k];
            (lhs - rhs).norm_sqr()
        }));
        let den = g.integrate_r((0..g.len()).map(|k| ((after[k] - before[k]) / (2.0 * dt)).norm_sqr()));
        assert!((num / den).sqrt() < 1e-2, "{}", (num / den).sqrt());
    }

    #[test]
    fn he_norm_matches_dirichlet_integral() {
        // f = r e^{−r²/2}, m = 1: ∫(|f'|² + |f/r|²) r dr = 1, checked
        // against a Cartesian finite-difference Dirichlet integral of
        // u = (x + iy) e^{−|x|²/2}.
        let g = RadialGrid::new(12.0, 4000).unwrap();
        let f = RadialField::from_fn(g, 1, |r| Complex64::new(r * (-r * r / 2.0).exp(), 0.0));
        let radial = he_norm(&f, 1).powi(2);
        assert!((radial - 1.0).abs() < 1e-5, "{radial}");
        let (l, n) = (8.0, 801usize);
        let dx = 2.0 * l / (n - 1) as f64;
        let u = |x: f64, y: f64| Complex64::new(x, y) * (-(x * x + y * y) / 2.0).exp();
        let mut cart = 0.0;
        for a in 0..n - 1 {
            for b in 0..n - 1 {
                let (x, y) = (-l + (a as f64 + 0.5) * dx, -l + (b as f64 + 0.5) * dx);
                let ux = (u(x + 0.5 * dx, y) - u(x - 0.5 * dx, y)) / dx;
                let uy = (u(x, y + 0.5 * dx) - u(x, y - 0.5 * dx)) / dx;
                cart += (ux.norm_sqr() + uy.norm_sqr()) * dx * dx;
            }
        }
        assert!((2.0 * core::f64::consts::PI * radial - cart).abs() < 1e-3 * cart, "{cart}");
    }

    #[test]
    fn vir1_needs_three_records() {
        let s = [VirialSample::default(); 2];
        assert_eq!(vir1_from_samples(&s), Err(Error::InsufficientData { needed: 3, found: 2 }));
    }

    #[test]
    fn centered_derivative_is_exact_for_quadratics() {
        let f = |t: f64| 1.0 + 2.0 * t - 3.0 * t * t;
        let t = [0.1, 0.35, 0.4];
        assert!((centered(t, t.map(f)) - (2.0 - 6.0 * 0.35)).abs() < 1e-12);
    }

    #[test]
    fn stream_emits_every_row_once() {
        let s = gaussian_state(256, 12.0, 0.3);
        let cfg = EvolutionConfig::new(1e-2, 0.05, 1);
        let traj = evolve(&s, &cfg, &mut NoSink).unwrap();
        let mut stream = DiagnosticsStream::new(VirialWeights::Cutoff { radius: 3.0 }).unwrap();
        let mut rows: Vec<_> = traj.states().filter_map(|st| stream.push(st)).collect();
        rows.extend(stream.finish());
        assert_eq!(rows.len(), traj.states().count());
        assert!(rows[0].vir1_res.is_nan() && rows.last().unwrap().vir1_res.is_nan());
        assert!(rows[1..rows.len() - 1].iter().all(|r| r.vir1_res.is_finite()));
        let direct = vir1_residual(&traj, &VirialWeights::Cutoff { radius: 3.0 }).unwrap();
        assert_eq!(direct[0], rows[1].vir1_res);
        assert_eq!(rows[0].vir3_res, 0.0);
    }

    #[test]
    fn strichartz_sums() {
        let g = RadialGrid::new(8.0, 128).unwrap();
        let z = evolve(&GaugeState::zero(g, 1).unwrap(), &EvolutionConfig::new(0.1, 0.3, 1), &mut NoSink).unwrap();
        let s = strichartz_accumulate(&z);
        assert_eq!((s.plus, s.minus), (0.0, 0.0));
        // Compatible runs keep ‖ψ⁺‖_{L⁴} and ‖ψ⁻‖_{L⁴} comparable.
        let traj = evolve(&gaussian_state(512, 12.0, 0.6), &EvolutionConfig::new(5e-3, 0.5, 5), &mut NoSink).unwrap();
        let s = strichartz_accumulate(&traj);
        let ratio = s.plus / s.minus;
        assert!(s.minus > 0.0 && (0.02..=1.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn virial_residuals_refine_at_second_order() {
        let run = |n: usize, dt: f64| {
            let s = gaussian_state(n, 12.0, 0.6);
            evolve(&s, &EvolutionConfig::new(dt, 0.4, 10), &mut NoSink).unwrap()
        };
        let (coarse, fine) = (run(512, 4e-3), run(1024, 2e-3));
        for w in [VirialWeights::Cutoff { radius: 3.0 }, VirialWeights::LocalizedR2 { radius: 3.0 }] {
            let sup = |v: Vec<f64>| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let (a, b) = (sup(vir1_residual(&coarse, &w).unwrap()), sup(vir1_residual(&fine, &w).unwrap()));
            assert!(a / b > 3.0, "vir1 {w:?}: {a:e} {b:e}");
            let (a, b) = (vir3_balance(&coarse, &w).unwrap(), vir3_balance(&fine, &w).unwrap());
            assert!(a.residual().abs() / b.residual().abs() > 3.0, "vir3 {w:?}: {a:?} {b:?}");
        }
        let b = vir3_balance(&fine, &VirialWeights::LocalizedR2 { radius: 3.0 }).unwrap();
        assert!(b.g_term >= 0.0 && b.origin_term == 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn he_norm_scales_inversely(lambda in 0.5..3.0f64, w in 0.5..2.0f64) {
            let g = RadialGrid::new(40.0, 4000).unwrap();
            let f = RadialField::from_fn(g, 2, |r| Complex64::new((r / w).powi(2) * (-r * r / (2.0 * w * w)).exp(), 0.0));
            let fl = RadialField::from_fn(g, 2, |r| {
                let s = r / lambda;
                Complex64::new((s / w).powi(2) * (-s * s / (2.0 * w * w)).exp() / lambda, 0.0)
            });
            let (a, b) = (he_norm(&f, 2), he_norm(&fl, 2));
            prop_assert!((b - a / lambda).abs() < 2e-3 * a / lambda);
        }

        #[test]
        fn g_floor_holds_on_random_gaussians(amp in 0.05..1.5f64, width in 0.6..2.0f64) {
            let g = RadialGrid::new(20.0, 800).unwrap();
            let pm = RadialField::from_fn(g, 0, |r| Complex64::new(amp * (-r * r / (2.0 * width * width)).exp(), 0.0));
            let s = complete_pair(&pm, &solve_comp1(&pm, 1, Target::Hyperbolic).unwrap()).unwrap();
            let ms = momenta(&s);
            prop_assert!(ms.positivity_margin(gauge::mass(&s.psi_minus)) >= -1e-8);
        }
    }
}
