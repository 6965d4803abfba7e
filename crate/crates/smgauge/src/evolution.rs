//! Time stepping of the gauged system
//!
//!   (i∂ₜ + H_{m−1})ψ⁻ = V⁻ψ⁻,   (i∂ₜ + H_{m+1})ψ⁺ = V⁺ψ⁺
//!
//! by Strang splitting: a phase rotation e^{−iV dt/2}, a Crank–Nicolson
//! step of the free flow e^{itH_k}, and a second phase rotation. V± are
//! real, so every substep is an isometry of L²(r dr) on the grid.

use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::gauge::GaugeState;
use crate::grid::{RadialField, RadialGrid};
use crate::hankel::{free_propagate, HankelPlan, HankelSamples};
use crate::linalg::Tridiagonal;
use crate::{Error, Result};

/// V⁺ and V⁻ at the grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Potentials {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

/// V± = A₀ ± 2(A₂ + μm)/r² ± μ Im((ψ₂/r) ψ̄±).
pub fn potentials(state: &GaugeState) -> Result<Potentials> {
    let g = state.grid();
    let d = state.derived();
    let mu = state.mu();
    let m = state.m as f64;
    let mut plus = Vec::with_capacity(g.len());
    let mut minus = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        let r = g.r(i);
        let shift = 2.0 * (d.a2[i] + mu * m) / (r * r);
        let q = d.psi2_over_r[i];
        let vp = d.a0[i] + shift + mu * (q * state.psi_plus.values[i].conj()).im;
        let vm = d.a0[i] - shift - mu * (q * state.psi_minus.values[i].conj()).im;
        if !(vp.is_finite() && vm.is_finite()) {
            return Err(Error::NonFinite { what: "potential", node: i });
        }
        plus.push(vp);
        minus.push(vm);
    }
    Ok(Potentials { plus, minus })
}

/// Closure of H_k beyond the last node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OuterBoundary {
    /// f_n = 0.
    Dirichlet,
    /// f_n = (r_{n−1}/r_n)^k f_{n−1}, continuing the decaying harmonic
    /// r^{−k} of H_k. ψ⁺ carries an r^{−m−1} tail that is static under
    /// the free flow; a Dirichlet wall would cut it and break
    /// compatibility from the outer edge inward.
    #[default]
    Harmonic,
}

/// Conservative second-order H_k on the cell-centered grid, row i:
/// (r_{i+½}(f_{i+1} − f_i) − r_{i−½}(f_i − f_{i−1}))/(r_i h²) − k²f_i/r_i².
///
/// r_{−½} = 0 removes the origin coupling for every k; the ghost f_n is
/// set by `outer`. Both closures only touch the diagonal, so with weights
/// w_i = r_i h the matrix W·L stays symmetric.
fn stencil(grid: &RadialGrid, k: u32, outer: OuterBoundary) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let h = grid.h();
    let k2 = (k as f64) * (k as f64);
    let mut lower = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for i in 0..n {
        let r = grid.r(i);
        let r_in = i as f64 * h;
        let r_out = (i as f64 + 1.0) * h;
        let c = 1.0 / (r * h * h);
        lower.push(r_in * c);
        upper.push(if i + 1 < n { r_out * c } else { 0.0 });
        let mut d = -(r_in + r_out) * c - k2 / (r * r);
        if i + 1 == n && outer == OuterBoundary::Harmonic {
            d += r_out * c * ((i as f64 + 0.5) / (i as f64 + 1.5)).powi(k as i32);
        }
        diag.push(d);
    }
    (lower, diag, upper)
}

/// Pre-factored Crank–Nicolson step (I − i dt/2 H_k)⁻¹(I + i dt/2 H_k).
#[derive(Clone, Debug)]
pub struct CrankNicolson {
    grid: RadialGrid,
    order: u32,
    dt: f64,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    solver: Tridiagonal,
}

impl CrankNicolson {
    pub fn new(grid: RadialGrid, order: u32, dt: f64) -> Result<Self> {
        CrankNicolson::with_boundary(grid, order, dt, OuterBoundary::default())
    }

    pub fn with_boundary(grid: RadialGrid, order: u32, dt: f64, outer: OuterBoundary) -> Result<Self> {
        if !dt.is_finite() {
            return Err(Error::Domain("time step"));
        }
        let (lower, diag, upper) = stencil(&grid, order, outer);
        let a = Complex64::new(0.0, -0.5 * dt);
        let lo: Vec<Complex64> = lower.iter().map(|&x| a * x).collect();
        let di: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(1.0, 0.0) + a * x).collect();
        let up: Vec<Complex64> = upper.iter().map(|&x| a * x).collect();
        let solver = Tridiagonal::factor(&lo, &di, &up)?;
        Ok(CrankNicolson { grid, order, dt, lower, diag, upper, solver })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn apply(&self, values: &mut [Complex64]) {
        let n = values.len();
        let b = Complex64::new(0.0, 0.5 * self.dt);
        let mut rhs: Vec<Complex64> = Vec::with_capacity(n);
        for i in 0..n {
            let mut hf = values[i] * self.diag[i];
            if i > 0 {
                hf += values[i - 1] * self.lower[i];
            }
            if i + 1 < n {
                hf += values[i + 1] * self.upper[i];
            }
            rhs.push(values[i] + b * hf);
        }
        self.solver.solve_in_place(&mut rhs);
        values.copy_from_slice(&rhs);
    }

    pub fn step(&self, f: &RadialField) -> Result<RadialField> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        if f.order != self.order {
            return Err(Error::OrderMismatch { expected: self.order, found: f.order });
        }
        let mut out = f.clone();
        self.apply(&mut out.values);
        Ok(out)
    }
}

/// One Crank–Nicolson step of i∂ₜf = −H_k f, k = f.order.
pub fn linear_substep(f: &RadialField, dt: f64) -> Result<RadialField> {
    CrankNicolson::new(f.grid, f.order, dt)?.step(f)
}

/// How the potential inside each half phase rotation is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PhaseRule {
    /// V± taken at the start of the half step; the rotation is then an
    /// exact isometry and the composition stays second order.
    #[default]
    Frozen,
    /// V± taken at a predicted midpoint of the half step. Same order, kept
    /// for comparison runs.
    Midpoint,
}

/// Propagators for one (grid, m, dt).
#[derive(Clone, Debug)]
pub struct Stepper {
    pub dt: f64,
    pub rule: PhaseRule,
    plus: CrankNicolson,
    minus: CrankNicolson,
}

fn rotate(values: &mut [Complex64], v: &[f64], tau: f64) {
    for (z, &p) in values.iter_mut().zip(v) {
        let (s, c) = (-p * tau).sin_cos();
        *z *= Complex64::new(c, s);
    }
}

fn check_finite(values: &[Complex64], what: &'static str) -> Result<()> {
    match values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        Some(node) => Err(Error::NonFinite { what, node }),
        None => Ok(()),
    }
}

/// CN conserves the weighted mass to round-off; a drift above 1e−8
/// only happens when an overflowing dt wrecks the solve (the output can
/// then be finite, even zero).
fn check_unitary(grid: &RadialGrid, before: &[Complex64], after: &[Complex64], what: &'static str) -> Result<()> {
    let m0 = grid.integrate_r(before.iter().map(|z| z.norm_sqr()));
    let m1 = grid.integrate_r(after.iter().map(|z| z.norm_sqr()));
    let drift = if m0 > 0.0 { (m1 - m0).abs() / m0 } else { m1 };
    if drift <= 1e-8 {
        Ok(())
    } else {
        Err(Error::Unstable { what, drift })
    }
}

impl Stepper {
    pub fn new(grid: RadialGrid, m: u32, dt: f64, rule: PhaseRule) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("equivariance index m must be at least 1"));
        }
        Ok(Stepper {
            dt,
            rule,
            plus: CrankNicolson::new(grid, m + 1, dt)?,
            minus: CrankNicolson::new(grid, m - 1, dt)?,
        })
    }

    fn phase(&self, state: &GaugeState, tau: f64) -> Result<GaugeState> {
        let v = match self.rule {
            PhaseRule::Frozen => potentials(state)?,
            PhaseRule::Midpoint => {
                let v0 = potentials(state)?;
                let mut p = state.psi_plus.values.clone();
                let mut q = state.psi_minus.values.clone();
                rotate(&mut p, &v0.plus, 0.5 * tau);
                rotate(&mut q, &v0.minus, 0.5 * tau);
                potentials(&state.with_values(state.t, p, q))?
            }
        };
        let mut p = state.psi_plus.values.clone();
        let mut q = state.psi_minus.values.clone();
        rotate(&mut p, &v.plus, tau);
        rotate(&mut q, &v.minus, tau);
        check_finite(&p, "psi_plus")?;
        check_finite(&q, "psi_minus")?;
        Ok(state.with_values(state.t, p, q))
    }

    /// One Strang step: half phase, free flow of both components, half phase.
    pub fn step(&self, state: &GaugeState) -> Result<GaugeState> {
        state.target.require_hyperbolic()?;
        if state.grid() != self.plus.grid || state.m + 1 != self.plus.order {
            return Err(Error::GridMismatch);
        }
        let half = self.phase(state, 0.5 * self.dt)?;
        let g = state.grid();
        let mut p = half.psi_plus.values.clone();
        let mut q = half.psi_minus.values.clone();
        self.plus.apply(&mut p);
        self.minus.apply(&mut q);
        check_finite(&p, "psi_plus")?;
        check_finite(&q, "psi_minus")?;
        check_unitary(&g, &half.psi_plus.values, &p, "psi_plus")?;
        check_unitary(&g, &half.psi_minus.values, &q, "psi_minus")?;
        let mid = state.with_values(state.t, p, q);
        let mut out = self.phase(&mid, 0.5 * self.dt)?;
        out.t = state.t + self.dt;
        Ok(out)
    }
}

/// One Strang step with the default phase rule.
pub fn step(state: &GaugeState, dt: f64) -> Result<GaugeState> {
    Stepper::new(state.grid(), state.m, dt, PhaseRule::default())?.step(state)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between recorded states.
    pub record_cadence: usize,
    pub rule: PhaseRule,
    /// Keep full states in the trajectory (needed by the virial diagnostics).
    pub store_states: bool,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_end: f64, record_cadence: usize) -> Self {
        EvolutionConfig { dt, t_end, record_cadence, rule: PhaseRule::default(), store_states: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be positive and finite"));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidParameter("t_end must be nonnegative and finite"));
        }
        if self.record_cadence == 0 {
            return Err(Error::InvalidParameter("record_cadence must be at least 1"));
        }
        Ok(())
    }

    /// Number of steps; t_end is reached by a shortened final step when
    /// it is not a multiple of dt.
    pub fn steps(&self) -> usize {
        let q = self.t_end / self.dt;
        let r = q.round();
        if (q - r).abs() <= 1e-9 * q.max(1.0) {
            r as usize
        } else {
            q.ceil() as usize
        }
    }
}

#[derive(Clone, Debug)]
pub struct Record {
    pub step: usize,
    pub t: f64,
    pub state: Option<GaugeState>,
}

/// Recorded states in strictly increasing time. `aborted` carries the
/// error that ended the run early, if any.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub records: Vec<Record>,
    pub aborted: Option<Error>,
}

impl Trajectory {
    pub fn states(&self) -> impl Iterator<Item = &GaugeState> {
        self.records.iter().filter_map(|r| r.state.as_ref())
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn last_state(&self) -> Option<&GaugeState> {
        self.records.iter().rev().find_map(|r| r.state.as_ref())
    }
}

/// Consumer of recorded states, called in time order.
pub trait Sink {
    fn record(&mut self, step: usize, state: &GaugeState) -> Result<()>;
}

/// A sink that ignores everything.
pub struct NoSink;

impl Sink for NoSink {
    fn record(&mut self, _: usize, _: &GaugeState) -> Result<()> {
        Ok(())
    }
}

impl<F: FnMut(usize, &GaugeState) -> Result<()>> Sink for F {
    fn record(&mut self, step: usize, state: &GaugeState) -> Result<()> {
        self(step, state)
    }
}

/// Rough time for the fastest significant component to reach the wall:
/// r_max/(2ξ_rms) with ξ_rms² = ‖∂ᵣψ⁻‖²/‖ψ⁻‖² + (m−1)²‖ψ⁻/r‖²/‖ψ⁻‖².
pub fn wall_horizon(state: &GaugeState) -> f64 {
    let g = state.grid();
    let f = &state.psi_minus;
    let mass = f.norm().powi(2);
    if mass == 0.0 {
        return f64::INFINITY;
    }
    let d = crate::grid::derivative(&f.values, g.h(), f.order);
    let k2 = (f.order as f64).powi(2);
    let grad = g.integrate_r((0..g.len()).map(|i| d[i].norm_sqr() + k2 * f.values[i].norm_sqr() / g.r(i).powi(2)));
    g.r_max() / (2.0 * (grad / mass).sqrt())
}

/// Runs the Strang scheme from `state` to t_end. Every `record_cadence`
/// steps (and at t = 0 and t_end) the state goes to the sink and, when
/// configured, into the trajectory. A step or sink failure ends the run;
/// the records gathered so far are returned with `aborted` set.
pub fn evolve(state: &GaugeState, config: &EvolutionConfig, sink: &mut dyn Sink) -> Result<Trajectory> {
    config.validate()?;
    state.target.require_hyperbolic()?;
    if state.m == 0 {
        return Err(Error::InvalidParameter("equivariance index m must be at least 1"));
    }
    let horizon = wall_horizon(state);
    if config.t_end > horizon {
        log::warn!("t_end = {} exceeds the wall horizon ≈ {horizon:.3}; reflections from r_max may contaminate the run", config.t_end);
    }
    let steps = config.steps();
    let mut traj = Trajectory { dt: config.dt, records: Vec::new(), aborted: None };
    let keep = |s: &GaugeState| if config.store_states { Some(s.clone()) } else { None };

    let t0 = state.t;
    let mut cur = state.clone();
    if let Err(e) = sink.record(0, &cur) {
        traj.aborted = Some(e);
        return Ok(traj);
    }
    traj.records.push(Record { step: 0, t: cur.t, state: keep(&cur) });
    // Built after the first record: an overflowing dt fails here, and
    // that is a numerical abort of the run, not an invalid call.
    let stepper = match Stepper::new(state.grid(), state.m, config.dt, config.rule) {
        Ok(s) => s,
        Err(e) => {
            log::error!("propagator setup failed: {e}");
            traj.aborted = Some(e);
            return Ok(traj);
        }
    };
    for k in 1..=steps {
        let remaining = t0 + config.t_end - cur.t;
        let next = if k == steps && (remaining - config.dt).abs() > 1e-12 * config.dt {
            Stepper::new(state.grid(), state.m, remaining, config.rule).and_then(|s| s.step(&cur))
        } else {
            stepper.step(&cur)
        };
        cur = match next {
            Ok(s) => s,
            Err(e) => {
                log::error!("step {k} failed: {e}");
                traj.aborted = Some(e);
                return Ok(traj);
            }
        };
        if k == steps {
            cur.t = t0 + config.t_end;
        }
        if k % config.record_cadence == 0 || k == steps {
            if let Err(e) = sink.record(k, &cur) {
                traj.aborted = Some(e);
                return Ok(traj);
            }
            traj.records.push(Record { step: k, t: cur.t, state: keep(&cur) });
        }
    }
    Ok(traj)
}

/// Pullbacks e^{−itH_{m±1}}ψ±(t) on the plan nodes.
pub fn scattering_samples(state: &GaugeState, plan_plus: &HankelPlan, plan_minus: &HankelPlan) -> Result<(HankelSamples, HankelSamples)> {
    let (p, _) = plan_plus.resample_from(&state.psi_plus)?;
    let (q, _) = plan_minus.resample_from(&state.psi_minus)?;
    Ok((free_propagate(plan_plus, &p, -state.t)?, free_propagate(plan_minus, &q, -state.t)?))
}

/// Candidate scattering states e^{−itH_{m±1}}ψ±(t), back on the state's
/// grid. Plans must have orders m+1 and m−1.
pub fn scattering_profile(state: &GaugeState, plan_plus: &HankelPlan, plan_minus: &HankelPlan) -> Result<(RadialField, RadialField)> {
    let (p, q) = scattering_samples(state, plan_plus, plan_minus)?;
    Ok((plan_plus.to_grid(&p, state.grid())?, plan_minus.to_grid(&q, state.grid())?))
}

/// e^{−itH_{m±1}}ψ±(t) under the scheme's own free flow: Crank–Nicolson
/// steps of −dt, the exact inverse of the forward free substeps (plus one
/// shortened step when t is not a multiple of dt).
///
/// A linear run pulls back to a constant up to round-off. The Hankel form
/// [`scattering_profile`] cannot do that for ψ⁺, whose static r^{−2} tail
/// is cut at r_max and then spreads under the Dirichlet pullback.
pub fn discrete_scattering_profile(state: &GaugeState, dt: f64) -> Result<(RadialField, RadialField)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be positive and finite"));
    }
    let g = state.grid();
    let (m, t) = (state.m, state.t);
    let steps = (t / dt).floor() as usize;
    let rest = t - steps as f64 * dt;
    let mut p = state.psi_plus.values.clone();
    let mut q = state.psi_minus.values.clone();
    let back_plus = CrankNicolson::new(g, m + 1, -dt)?;
    let back_minus = CrankNicolson::new(g, m - 1, -dt)?;
    for _ in 0..steps {
        back_plus.apply(&mut p);
        back_minus.apply(&mut q);
    }
    if rest.abs() > 1e-12 * dt {
        CrankNicolson::new(g, m + 1, -rest)?.apply(&mut p);
        CrankNicolson::new(g, m - 1, -rest)?.apply(&mut q);
    }
    Ok((RadialField { grid: g, order: m + 1, values: p }, RadialField { grid: g, order: m - 1, values: q }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::mass;
    use crate::hankel::make_plan;
    use crate::reconstruct::{complete_pair, solve_comp1};
    use crate::Target;

    fn compatible(grid: RadialGrid, m: u32, amp: f64) -> GaugeState {
        let pm = RadialField::from_fn(grid, m - 1, |r| {
            let shape = r.powi((m - 1).min(2) as i32);
            Complex64::from_polar(amp * shape * (-(r - 1.5) * (r - 1.5) / 2.0).exp(), 0.5 * r)
        });
        complete_pair(&pm, &solve_comp1(&pm, m, Target::Hyperbolic).unwrap()).unwrap()
    }

    #[test]
    fn zero_state_potentials_and_step() {
        let g = RadialGrid::new(8.0, 128).unwrap();
        let s = GaugeState::zero(g, 2).unwrap();
        let v = potentials(&s).unwrap();
        assert!(v.plus.iter().chain(&v.minus).all(|&x| x == 0.0));
        let n = step(&s, 1e-2).unwrap();
        assert!(n.psi_plus.values.iter().chain(&n.psi_minus.values).all(|z| z.norm() == 0.0));
        assert_eq!(n.t, 1e-2);
    }

    #[test]
    fn equal_components_leave_only_a0() {
        let g = RadialGrid::new(8.0, 256).unwrap();
        // ψ⁺ = ψ⁻ needs a common order; m = 1 gives orders 2 and 0, so
        // build the state directly and compare against A₀.
        let f = |r: f64| Complex64::new(r * r * (-r * r).exp(), 0.3 * r * r * (-r * r).exp());
        let s = GaugeState::new(0.0, 1, Target::Hyperbolic, RadialField::from_fn(g, 2, f), RadialField::from_fn(g, 0, f)).unwrap();
        let v = potentials(&s).unwrap();
        let a0 = &s.derived().a0;
        for i in 0..g.len() {
            assert!((v.plus[i] - a0[i]).abs() < 1e-15);
            assert!((v.minus[i] - a0[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_substep_identity_and_unitarity() {
        let g = RadialGrid::new(10.0, 512).unwrap();
        for k in 0..4u32 {
            let f = RadialField::from_fn(g, k, |r| Complex64::new(r.powi(k as i32) * (-r * r / 2.0).exp(), 0.0));
            assert_eq!(linear_substep(&f, 0.0).unwrap(), f);
            let cn = CrankNicolson::new(g, k, 1e-3).unwrap();
            let mut cur = f.clone();
            for _ in 0..100 {
                let before = mass(&cur);
                cur = cn.step(&cur).unwrap();
                assert!(((mass(&cur) - before) / before).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weighted_operator_is_symmetric() {
        let g = RadialGrid::new(3.0, 40).unwrap();
        let (lo, _, up) = stencil(&g, 3, OuterBoundary::Harmonic);
        for i in 0..g.len() - 1 {
            let a = g.weight(i) * up[i];
            let b = g.weight(i + 1) * lo[i + 1];
            assert!((a - b).abs() < 1e-12 * a.abs());
        }
    }

    #[test]
    fn crank_nicolson_tracks_hankel_multiplier() {
        let t = 0.25;
        let k = 1;
        let errs: Vec<f64> = [(1024usize, 4e-4), (2048, 2e-4)]
            .iter()
            .map(|&(n, dt)| {
                let g = RadialGrid::new(12.0, n).unwrap();
                let f = RadialField::from_fn(g, k, |r| Complex64::new(r * (-r * r / 2.0).exp(), 0.0));
                let cn = CrankNicolson::new(g, k, dt).unwrap();
                let mut cur = f.clone();
                for _ in 0..(t / dt).round() as usize {
                    cur = cn.step(&cur).unwrap();
                }
                let plan = make_plan(k, 12.0, 128).unwrap();
                let exact = free_propagate(&plan, &plan.sample(|r| Complex64::new(r * (-r * r / 2.0).exp(), 0.0)), t).unwrap();
                let exact = plan.to_grid(&exact, g).unwrap();
                cur.distance(&exact).unwrap() / exact.norm()
            })
            .collect();
        assert!(errs[0] < 1e-3 && errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn strang_conserves_both_masses() {
        let g = RadialGrid::new(12.0, 512).unwrap();
        let s0 = compatible(g, 1, 0.5);
        let (p0, q0) = (mass(&s0.psi_plus), mass(&s0.psi_minus));
        let st = Stepper::new(g, 1, 1e-2, PhaseRule::Midpoint).unwrap();
        let mut s = s0;
        for _ in 0..100 {
            s = st.step(&s).unwrap();
        }
        assert!(((mass(&s.psi_plus) - p0) / p0).abs() < 1e-11);
        assert!(((mass(&s.psi_minus) - q0) / q0).abs() < 1e-11);
    }

    #[test]
    fn time_reversal() {
        let g = RadialGrid::new(12.0, 512).unwrap();
        let s0 = compatible(g, 2, 0.5);
        let fwd = Stepper::new(g, 2, 1e-2, PhaseRule::Midpoint).unwrap();
        let back = Stepper::new(g, 2, -1e-2, PhaseRule::Midpoint).unwrap();
        let s1 = back.step(&fwd.step(&s0).unwrap()).unwrap();
        let d = s1.psi_minus.distance(&s0.psi_minus).unwrap() + s1.psi_plus.distance(&s0.psi_plus).unwrap();
        assert!(d < 1e-5, "{d}");
    }

    #[test]
    fn scaling_is_exact_on_scaled_grids() {
        let g = RadialGrid::new(10.0, 256).unwrap();
        let s0 = compatible(g, 1, 0.6);
        let lambda = 2.0;
        let a = Stepper::new(g, 1, 1e-2, PhaseRule::Midpoint).unwrap();
        let b = Stepper::new(g.scaled(lambda), 1, 1e-2 * lambda * lambda, PhaseRule::Midpoint).unwrap();
        let (mut x, mut y) = (s0.clone(), s0.scaled(lambda));
        for _ in 0..10 {
            x = a.step(&x).unwrap();
            y = b.step(&y).unwrap();
        }
        let xs = x.scaled(lambda);
        let d = xs.psi_minus.distance(&y.psi_minus).unwrap() / y.psi_minus.norm();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn evolve_records_and_nan_abort() {
        let g = RadialGrid::new(10.0, 128).unwrap();
        let s0 = compatible(g, 1, 0.3);
        let t = evolve(&s0, &EvolutionConfig::new(1e-2, 0.0, 1), &mut NoSink).unwrap();
        assert_eq!(t.records.len(), 1);
        let t = evolve(&s0, &EvolutionConfig::new(1e-2, 0.105, 3), &mut NoSink).unwrap();
        let times = t.times();
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert!((times.last().unwrap() - 0.105).abs() < 1e-15);
        let mut seen = 0usize;
        let mut sink = |_: usize, s: &GaugeState| {
            seen += 1;
            if seen == 3 {
                Err(Error::NonFinite { what: "injected", node: 0 })
            } else {
                assert!(s.t >= 0.0);
                Ok(())
            }
        };
        let t = evolve(&s0, &EvolutionConfig::new(1e-2, 0.1, 1), &mut sink).unwrap();
        assert_eq!(t.records.len(), 2);
        assert!(t.aborted.is_some());
        assert!(evolve(&s0, &EvolutionConfig::new(0.0, 0.1, 1), &mut NoSink).is_err());
        // An overflowing dt either breaks the factorization or zeroes the
        // field; both end the run after the t = 0 record.
        for n in [128usize, 256] {
            let s0 = compatible(RadialGrid::new(10.0, n).unwrap(), 1, 0.3);
            let t = evolve(&s0, &EvolutionConfig::new(1e305, 1e306, 1), &mut NoSink).unwrap();
            assert_eq!(t.records.len(), 1);
            assert!(t.aborted.is_some());
        }
    }

    #[test]
    fn scattering_profile_at_t0_is_the_state() {
        let g = RadialGrid::new(10.0, 512).unwrap();
        // Smooth at the origin as a 2D field: r^k times a function of r².
        let pm = RadialField::from_fn(g, 0, |r| Complex64::from_polar(0.4 * (-r * r / 2.0).exp(), 0.3 * r * r));
        let s0 = complete_pair(&pm, &solve_comp1(&pm, 1, Target::Hyperbolic).unwrap()).unwrap();
        let pp = make_plan(2, 10.0, 128).unwrap();
        let pq = make_plan(0, 10.0, 128).unwrap();
        let (p, q) = scattering_profile(&s0, &pp, &pq).unwrap();
        let eq = q.distance(&s0.psi_minus).unwrap() / s0.psi_minus.norm();
        assert!(eq < 1e-6, "{eq:e}");
        // ψ⁺ ~ r^{−2} is cut off at r_max and the transform sees that jump
        // (measured 1.08e−2 here).
        let ep = p.distance(&s0.psi_plus).unwrap() / s0.psi_plus.norm();
        assert!(ep < 2e-2, "{ep:e}");
    }

    #[test]
    fn linear_flow_pulls_back_to_the_initial_state() {
        let g = RadialGrid::new(16.0, 1024).unwrap();
        let pm = RadialField::from_fn(g, 0, |r| Complex64::new(0.4 * (-r * r / 2.0).exp(), 0.0));
        let s0 = complete_pair(&pm, &solve_comp1(&pm, 1, Target::Hyperbolic).unwrap()).unwrap();
        let dt = 5e-3;
        let (cp, cm) = (CrankNicolson::new(g, 2, dt).unwrap(), CrankNicolson::new(g, 0, dt).unwrap());
        let (mut p, mut q) = (s0.psi_plus.values.clone(), s0.psi_minus.values.clone());
        for _ in 0..200 {
            cp.apply(&mut p);
            cm.apply(&mut q);
        }
        let moved = s0.with_values(1.0, p, q);
        let (bp, bm) = discrete_scattering_profile(&moved, dt).unwrap();
        assert!(bp.distance(&s0.psi_plus).unwrap() < 1e-12 * s0.psi_plus.norm());
        assert!(bm.distance(&s0.psi_minus).unwrap() < 1e-12 * s0.psi_minus.norm());
        // The exact pullback of ψ⁻ differs by the CN dispersion error only.
        let (pp, pq) = (make_plan(2, 16.0, 256).unwrap(), make_plan(0, 16.0, 256).unwrap());
        let (_, hm) = scattering_profile(&moved, &pp, &pq).unwrap();
        let e = hm.distance(&s0.psi_minus).unwrap() / s0.psi_minus.norm();
        assert!(e < 1e-3, "{e:e}");
        assert!(discrete_scattering_profile(&moved, 0.0).is_err());
    }
}
