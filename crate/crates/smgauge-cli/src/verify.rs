//! Verification suites: one per acceptance criterion, runnable from
//! `smgauge verify` and from the `acceptance` test target.
//!
//! Suites (3), (4), (8), (9), (10) and (11) share one base run and one
//! refined run; each is computed once per [`Context`] on first use.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smgauge::diagnostics::{momenta, vir1_residual, vir3_balance, Strichartz, VirialWeights};
use smgauge::evolution::{discrete_scattering_profile, evolve, scattering_samples, CrankNicolson, EvolutionConfig, NoSink, Trajectory};
use smgauge::gauge::{a0_mean, compatibility_residual, mass, GaugeState};
use smgauge::grid::{RadialField, RadialGrid};
use smgauge::hankel::{free_propagate, hankel_forward, hankel_inverse, make_plan, HankelPlan, HankelSamples};
use smgauge::reconstruct::{
    a2_identification_error, complete_pair, derive_gauge_from_map, map_energy, map_from_profile, reconstruct_frame,
    solve_comp1,
};
use smgauge::{Complex64, Target};

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Size {
    /// Grids and steps coarsened 4× for smoke runs (the scattering suite
    /// keeps its grid); thresholds that measure an O(h² + dt²) error are
    /// widened 16×.
    Small,
    #[default]
    Full,
}

impl Size {
    fn pick<T>(self, full: T, small: T) -> T {
        match self {
            Size::Full => full,
            Size::Small => small,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub size: Size,
    /// Multiplies every upper-bound threshold. Ratio floors and ranges are
    /// left alone.
    pub tolerance_scale: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { size: Size::Full, tolerance_scale: 1.0, seed: 0, threads: threads_from_env() }
    }
}

/// Worker count from `SMGAUGE_THREADS`, else the available parallelism.
pub fn threads_from_env() -> usize {
    std::env::var("SMGAUGE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Within(f64, f64),
}

impl Bound {
    pub fn holds(self, x: f64) -> bool {
        match self {
            Bound::AtMost(b) => x <= b,
            Bound::AtLeast(b) => x >= b,
            Bound::Within(lo, hi) => x >= lo && x <= hi,
        }
    }
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bound::AtMost(b) => write!(f, "<= {b:.3e}"),
            Bound::AtLeast(b) => write!(f, ">= {b:.3e}"),
            Bound::Within(lo, hi) => write!(f, "in [{lo}, {hi}]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub bound: Bound,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.bound.holds(self.measured)
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    pub criterion: u32,
    pub checks: Vec<Check>,
    /// Set when the suite could not run to completion.
    pub error: Option<String>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed()).count() + self.error.is_some() as usize
    }

    /// One line: verdict, criterion, name and every measured value.
    pub fn line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let mut s = format!("{verdict} [{:>2}] {:<22}", self.criterion, self.name);
        for c in &self.checks {
            let mark = if c.passed() { "" } else { " (!)" };
            let _ = write!(s, " | {} = {:.4e} {}{mark}", c.label, c.measured, c.bound);
        }
        if let Some(e) = &self.error {
            let _ = write!(s, " | error: {e}");
        }
        s
    }
}

type SuiteFn = fn(&Context) -> smgauge::Result<Vec<Check>>;

pub struct Suite {
    pub name: &'static str,
    pub criterion: u32,
    run: SuiteFn,
}

pub const SUITES: [Suite; 13] = [
    Suite { name: "hankel_fidelity", criterion: 1, run: hankel_fidelity },
    Suite { name: "propagator_cross_oracle", criterion: 2, run: propagator_cross_oracle },
    Suite { name: "mass_conservation", criterion: 3, run: mass_conservation },
    Suite { name: "splitting_order", criterion: 4, run: splitting_order },
    Suite { name: "comp1_solver", criterion: 5, run: comp1_solver },
    Suite { name: "energy_identity", criterion: 6, run: energy_identity },
    Suite { name: "gauge_round_trip", criterion: 7, run: gauge_round_trip },
    Suite { name: "compat_propagation", criterion: 8, run: compat_propagation },
    Suite { name: "a0_mean_zero", criterion: 9, run: a0_mean_zero },
    Suite { name: "virial", criterion: 10, run: virial },
    Suite { name: "momentum_identity", criterion: 11, run: momentum_identity },
    Suite { name: "scattering_trend", criterion: 12, run: scattering_trend },
    Suite { name: "scaling_symmetry", criterion: 13, run: scaling_symmetry },
];

/// Suites by name; `None` selects all. An empty or unknown selection is a
/// usage error.
pub fn select(names: Option<&[String]>) -> Result<Vec<&'static Suite>, CliError> {
    let Some(names) = names else {
        return Ok(SUITES.iter().collect());
    };
    if names.is_empty() || names.iter().all(|n| n.trim().is_empty()) {
        return Err(CliError::Usage("empty suite selection".into()));
    }
    let mut out: Vec<&'static Suite> = Vec::new();
    for name in names.iter().flat_map(|n| n.split(',')).map(str::trim).filter(|n| !n.is_empty()) {
        let suite = SUITES.iter().find(|s| s.name == name).ok_or_else(|| {
            let known: Vec<_> = SUITES.iter().map(|s| s.name).collect();
            CliError::Usage(format!("unknown suite {name:?}; known suites: {}", known.join(", ")))
        })?;
        if !out.iter().any(|s| s.name == suite.name) {
            out.push(suite);
        }
    }
    out.sort_by_key(|s| s.criterion);
    Ok(out)
}

/// The base run of criterion 3 at one resolution.
pub struct BaseRun {
    pub trajectory: Trajectory,
    pub mass: f64,
}

pub struct Context {
    pub opts: Options,
    base: OnceLock<smgauge::Result<BaseRun>>,
    refined: OnceLock<smgauge::Result<BaseRun>>,
}

/// Parameters of a base run: (n, dt, record cadence).
#[derive(Clone, Copy, Debug)]
struct Resolution {
    n: usize,
    dt: f64,
    cadence: usize,
}

const BASE_R_MAX: f64 = 16.0;
const BASE_T_END: f64 = 1.0;
/// ψ⁻ = e^{−r²/2}/√2 has M(ψ⁻) = 1/4.
const BASE_AMPLITUDE: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl Context {
    pub fn new(opts: Options) -> Self {
        Context { opts, base: OnceLock::new(), refined: OnceLock::new() }
    }

    fn size(&self) -> Size {
        self.opts.size
    }

    /// Threshold for an O(h² + dt²) quantity, widened at small size.
    fn disc(&self, full: f64) -> f64 {
        self.size().pick(full, 16.0 * full)
    }

    fn at_most(&self, label: impl Into<String>, measured: f64, bound: f64) -> Check {
        Check { label: label.into(), measured, bound: Bound::AtMost(bound * self.opts.tolerance_scale) }
    }

    fn at_least(&self, label: impl Into<String>, measured: f64, bound: f64) -> Check {
        Check { label: label.into(), measured, bound: Bound::AtLeast(bound) }
    }

    fn within(&self, label: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Check {
        Check { label: label.into(), measured, bound: Bound::Within(lo, hi) }
    }

    fn base_resolution(&self) -> Resolution {
        self.size().pick(Resolution { n: 2048, dt: 1e-3, cadence: 20 }, Resolution { n: 512, dt: 4e-3, cadence: 5 })
    }

    fn refined_resolution(&self) -> Resolution {
        let r = self.base_resolution();
        // Same cadence: the record spacing halves along with dt.
        Resolution { n: 2 * r.n, dt: 0.5 * r.dt, cadence: r.cadence }
    }

    pub fn base(&self) -> smgauge::Result<&BaseRun> {
        self.base.get_or_init(|| base_run(self.base_resolution())).as_ref().map_err(Clone::clone)
    }

    pub fn refined(&self) -> smgauge::Result<&BaseRun> {
        self.refined.get_or_init(|| base_run(self.refined_resolution())).as_ref().map_err(Clone::clone)
    }
}

fn base_state(n: usize) -> smgauge::Result<GaugeState> {
    let g = RadialGrid::new(BASE_R_MAX, n)?;
    gaussian_state(g, 1, BASE_AMPLITUDE)
}

/// ψ⁻ = A r^{m−1} e^{−r²/2} completed through comp1.
fn gaussian_state(g: RadialGrid, m: u32, amp: f64) -> smgauge::Result<GaugeState> {
    let pm = RadialField::from_fn(g, m - 1, |r| Complex64::new(amp * r.powi(m as i32 - 1) * (-r * r / 2.0).exp(), 0.0));
    complete_pair(&pm, &solve_comp1(&pm, m, Target::Hyperbolic)?)
}

fn base_run(res: Resolution) -> smgauge::Result<BaseRun> {
    let s0 = base_state(res.n)?;
    let mass = smgauge::gauge::mass(&s0.psi_minus);
    let trajectory = evolve(&s0, &EvolutionConfig::new(res.dt, BASE_T_END, res.cadence), &mut NoSink)?;
    if let Some(e) = &trajectory.aborted {
        return Err(e.clone());
    }
    Ok(BaseRun { trajectory, mass })
}

/// State at t_end only, for the self-convergence runs.
fn final_state(s0: &GaugeState, dt: f64, t_end: f64) -> smgauge::Result<GaugeState> {
    let mut last = None;
    let steps = EvolutionConfig::new(dt, t_end, 1).steps();
    let mut sink = |k: usize, s: &GaugeState| {
        if k == steps {
            last = Some(s.clone());
        }
        Ok(())
    };
    let mut cfg = EvolutionConfig::new(dt, t_end, usize::MAX);
    cfg.store_states = false;
    let traj = evolve(s0, &cfg, &mut sink)?;
    if let Some(e) = traj.aborted {
        return Err(e);
    }
    last.ok_or(smgauge::Error::InsufficientData { needed: 1, found: 0 })
}

/// √(‖Δψ⁺‖² + ‖Δψ⁻‖²).
fn pair_distance(a: &GaugeState, b: &GaugeState) -> smgauge::Result<f64> {
    Ok(a.psi_plus.distance(&b.psi_plus)?.hypot(a.psi_minus.distance(&b.psi_minus)?))
}

fn pair_norm(a: &GaugeState) -> f64 {
    a.psi_plus.norm().hypot(a.psi_minus.norm())
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

fn hankel_fidelity(ctx: &Context) -> smgauge::Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.opts.seed ^ 0x4841_4e4b);
    let (mut round_trip, mut plancherel, mut drift) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..=3u32 {
        let plan = make_plan(k, 10.0, 256)?;
        for _ in 0..4 {
            let width = rng.gen_range(0.7..1.3);
            let chirp = rng.gen_range(-0.3..0.3);
            let f = plan.sample(|r| Complex64::from_polar(r.powi(k as i32) * (-r * r / (2.0 * width * width)).exp(), chirp * r * r));
            let nf = plan.spatial_norm(&f);
            let big_f = hankel_forward(&plan, &f)?;
            let back = hankel_inverse(&plan, &big_f)?;
            round_trip = round_trip.max(samples_distance(&plan, &back, &f) / nf);
            plancherel = plancherel.max((plan.spectral_norm(&big_f) - nf).abs() / nf);
            let moved = free_propagate(&plan, &f, 1.0)?;
            drift = drift.max((plan.spatial_norm(&moved).powi(2) - nf * nf).abs() / (nf * nf));
        }
    }
    Ok(vec![
        ctx.at_most("round_trip_rel", round_trip, 1e-10),
        ctx.at_most("plancherel_rel", plancherel, 1e-8),
        ctx.at_most("mass_drift_t1", drift, 1e-8),
    ])
}

fn samples_distance(plan: &HankelPlan, a: &HankelSamples, b: &HankelSamples) -> f64 {
    let mut d = a.clone();
    for (x, y) in d.values.iter_mut().zip(&b.values) {
        *x -= y;
    }
    plan.norm(&d)
}

fn propagator_cross_oracle(ctx: &Context) -> smgauge::Result<Vec<Check>> {
    let t = 0.5;
    let r_max = 12.0;
    let (n0, dt0) = ctx.size().pick((2048usize, 1e-4), (512, 4e-4));
    let mut checks = Vec::new();
    for k in [0u32, 2] {
        let profile = move |r: f64| Complex64::new(r.powi(k as i32) * (-r * r / 2.0).exp(), 0.0);
        let plan = make_plan(k, r_max, 192)?;
        let exact = free_propagate(&plan, &plan.sample(profile), t)?;
        let errs = [(n0, dt0), (2 * n0, dt0 / 2.0)]
            .iter()
            .map(|&(n, dt)| {
                let g = RadialGrid::new(r_max, n)?;
                let cn = CrankNicolson::new(g, k, dt)?;
                let mut cur = RadialField::from_fn(g, k, profile);
                for _ in 0..(t / dt).round() as usize {
                    cn.apply(&mut cur.values);
                }
                let reference = plan.to_grid(&exact, g)?;
                Ok(cur.distance(&reference)? / reference.norm())
            })
            .collect::<smgauge::Result<Vec<f64>>>()?;
        checks.push(ctx.at_most(format!("k{k}_rel_l2"), errs[0], ctx.disc(1e-3)));
        checks.push(ctx.at_least(format!("k{k}_refine_ratio"), errs[0] / errs[1], 3.0));
    }
    Ok(checks)
}

fn mass_conservation(ctx: &Context) -> smgauge::Result<Vec<Check>> {
    let base = ctx.base()?;
    let first = base.trajectory.states().next().expect("base run records t = 0");
    let (p0, q0) = (mass(&first.psi_plus), mass(&first.psi_minus));
    let (mut dp, mut dq, mut dgap) = (0.0f64, 0.0f64, 0.0f64);
    for s in base.trajectory.states() {
        let (p, q) = (mass(&s.psi_plus), mass(&s.psi_minus));
        dp = dp.max(((p - p0) / p0).abs());
        dq = dq.max(((q - q0) / q0).abs());
        dgap = dgap.max(((p - q) - (p0 - q0)).abs());
    }
    Ok(vec![
        ctx.at_most("plus_rel_drift", dp, 1e-10),
        ctx.at_most("minus_rel_drift", dq, 1e-10),
        ctx.at_most("mass_gap_change", dgap, 1e-10),
    ])
}

fn splitting_order(ctx: &Context) -> smgauge::Result<Vec<Check>> {
    let res = ctx.base_resolution();
    let s0 = base_state(res.n)?;
    let a = ctx.base()?.trajectory.last_state().expect("base run stores states").clone();
    let b = final_state(&s0, res.dt / 2.0, BASE_T_END)?;
    let c = final_state(&s0, res.dt / 4.0, BASE_T_END)?;
    let (d1, d2) = (pair_distance(&a, &b)?, pair_distance(&b, &c)?);
    Ok(vec![ctx.within("self_convergence_ratio", d1 / d2, 3.4, 4.6), ctx.at_most("diff_dt_dt2_rel", d1 / pair_norm(&a), ctx.disc(1e-4))])
}

/// One random ψ⁻: r^{m−1} times a Gaussian in r² with a quadratic chirp,
/// so the field is smooth at the origin as a 2D field of order m − 1.
struct CorpusSample {
    m: u32,
    amp: f64,
    width: f64,
    chirp: f64,
}

impl CorpusSample {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        CorpusSample { m: rng.gen_range(1..=3), amp: rng.gen_range(0.05..1.2), width: rng.gen_range(0.6..1.6), chirp: rng.gen_range(-0.5..0.5) }
    }

    fn field(&self, g: RadialGrid) -> RadialField {
        let (k, w) = ((self.m - 1) as i32, self.width);
        RadialField::from_fn(g, self.m - 1, |r| {
            Complex64::from_polar(self.amp * (r / w).powi(k) * (-r * r / (2.0 * w * w)).exp(), self.chirp * r * r)
        })
    }
}

fn comp1_solver(ctx: &Context) -> smgauge::Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.opts.seed ^ 0xC0_4D01);
    let n = ctx.size().pick(1024, 256);
    let coarse = RadialGrid::new(16.0, n)?;
    let fine = RadialGrid::new(16.0, 2 * n)?;
    let (mut l2_excess, mut a2_excess, mut cons, mut worst_ratio) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0f64, f64::INFINITY);
    for _ in 0..20 {
        let sample = CorpusSample::draw(&mut rng);
        let pm = sample.field(coarse);
        let sol = solve_comp1(&pm, sample.m, Target::Hyperbolic)?;
        let norm = pm.norm();
        let l2 = coarse.integrate_r(sol.psi2_over_r.iter().map(|z| z.norm_sqr())).sqrt();
        l2_excess = l2_excess.max((l2 - norm) / norm);
        let sup_a2 = sol.a2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        a2_excess = a2_excess.max(sup_a2 - (sample.m as f64 + norm * norm));
        cons = cons.max(sol.conservation_residual());
        let pf = sample.field(fine);
        let fine_sol = solve_comp1(&pf, sample.m, Target::Hyperbolic)?;
        worst_ratio = worst_ratio.min(sol.ode_residual(&pm) / fine_sol.ode_residual(&pf));
    }
    Ok(vec![
        ctx.at_most("psi2_over_r_excess_rel", l2_excess, 0.0),
        ctx.at_most("sup_a2_excess", a2_excess, 0.0),
        ctx.at_most("conservation_sup", cons, 1e-8),
        ctx.within("ode_residual_ratio_min", worst_ratio, 3.4, 4.6),
    ])
}

fn energy_identity(ctx: &Context) -> smgauge::Result<Vec<Check>> {
    let n = ctx.size().pick(4096, 1024);
    let g = RadialGrid::new(20.0, n)?;
    let (mut energy, mut defect, mut ident) = (0.0f64, 0.0f64, 0.0f64);
    for (m, amp) in [(1u32, 0.5), (2, 0.4)] {
        let pm = RadialField::from_fn(g, m - 1, |r| Complex64::new(amp * r.powi(m as i32 - 1) * (-r * r / 2.0).exp(), 0.0));
        let sol = solve_comp1(&pm, m, Target::Hyperbolic)?;
        let frame = reconstruct_frame(&pm, &sol)?;
        let e = map_energy(&frame, m);
        energy = energy.max(((e - std::f64::consts::PI * mass(&pm)) / e).abs());
        defect = defect.max(frame.max_defect());
        ident = ident.max(a2_identification_error(&frame, &sol));
    }
    Ok(vec![
        ctx.at_most("energy_rel", energy, ctx.disc(1e-4)),
        ctx.at_most("frame_defect", defect, 1e-6),
        ctx.at_most("m_u3_minus_a2_rel", ident, ctx.disc(1e-4)),
    ])
}

fn gauge_round_trip(ctx: &Context) -> smgauge::Result<Vec<Check>> {
    let n = ctx.size().pick(4096, 1024);
    let g = RadialGrid::new(12.0, n)?;
    let mut worst = 0.0f64;
    for m in [1u32, 2] {
        let u = map_from_profile(&g, |r| 0.8 * r.powi(m as i32) * (-r * r / 2.0).exp());
        let (state, frame) = derive_gauge_from_map(g, &u, m, Target::Hyperbolic)?;
        let sol = solve_comp1(&state.psi_minus, m, Target::Hyperbolic)?;
        let back = reconstruct_frame(&state.psi_minus, &sol)?;
        worst = worst.max(back.sup_distance_u(&frame));
    }
    Ok(vec![ctx.at_most("sup_u_error", worst, ctx.disc(1e-3))])
}

fn compat_propagation(ctx: &Context) -> smgauge::Result<Vec<Check>> {
    let worst = |run: &BaseRun| max_of(run.trajectory.states().map(|s| compatibility_residual(s).1));
    let (coarse, fine) = (worst(ctx.base()?), worst(ctx.refined()?));
    Ok(vec![ctx.at_most("compat_max", coarse, ctx.disc(1e-4)), ctx.at_least("refine_ratio", coarse / fine, 3.0)])
}

fn a0_mean_zero(ctx: &Context) -> smgauge::Result<Vec<Check>> {
    let base = ctx.base()?;
    let worst = max_of(base.trajectory.states().map(|s| a0_mean(s).abs()));
    Ok(vec![ctx.at_most("a0_mean_over_mass", worst / base.mass, 1e-8)])
}

fn virial_weights() -> [(&'static str, VirialWeights); 2] {
    [("cutoff", VirialWeights::Cutoff { radius: 4.0 }), ("r2", VirialWeights::LocalizedR2 { radius: 4.0 })]
}

fn virial(ctx: &Context) -> smgauge::Result<Vec<Check>> {
    let (base, refined) = (ctx.base()?, ctx.refined()?);
    let mut checks = Vec::new();
    for (tag, w) in virial_weights() {
        let v1 = |run: &BaseRun| vir1_residual(&run.trajectory, &w).map(|v| max_of(v.iter().map(|x| x.abs())));
        let v3 = |run: &BaseRun| vir3_balance(&run.trajectory, &w).map(|b| b.residual().abs());
        let (a, b) = (v1(base)?, v1(refined)?);
        checks.push(ctx.at_least(format!("vir1_{tag}_ratio"), a / b, 3.0));
        let (a, b) = (v3(base)?, v3(refined)?);
        checks.push(ctx.at_least(format!("vir3_{tag}_ratio"), a / b, 3.0));
    }
    let margin = base.trajectory.states().map(|s| momenta(s).positivity_margin(base.mass)).fold(f64::INFINITY, f64::min);
    checks.push(ctx.at_least("g_positivity_margin", margin, -1e-8));
    Ok(checks)
}

fn momentum_identity(ctx: &Context) -> smgauge::Result<Vec<Check>> {
    let ends = |run: &BaseRun| {
        let first = run.trajectory.states().next().expect("records t = 0");
        let last = run.trajectory.last_state().expect("stores states");
        momenta(first).m0_discrepancy().max(momenta(last).m0_discrepancy())
    };
    let (coarse, fine) = (ends(ctx.base()?), ends(ctx.refined()?));
    Ok(vec![ctx.at_most("m0_discrepancy", coarse, ctx.disc(1e-2)), ctx.at_least("refine_ratio", coarse / fine, 3.0)])
}

/// Both pullbacks of one recorded state.
struct Pullback {
    discrete: (RadialField, RadialField),
    hankel_minus: HankelSamples,
}

fn scattering_trend(ctx: &Context) -> smgauge::Result<Vec<Check>> {
    // r_max = 64 keeps the wall out of the ψ⁻ pullback up to t = 4.
    let r_max = 64.0;
    let (n, dt, n_plan) = ctx.size().pick((8192usize, 1e-3, 1024usize), (8192, 4e-3, 512));
    let g = RadialGrid::new(r_max, n)?;
    // M(ψ⁻) = A²/2 for A e^{−r²/2}.
    let s0 = gaussian_state(g, 1, (2.0f64 * 1e-2).sqrt())?;
    let plan_plus = make_plan(2, r_max, n_plan)?;
    let plan_minus = make_plan(0, r_max, n_plan)?;
    let sample_times = [0.5, 1.0, 2.0, 4.0];
    let wanted: Vec<usize> = sample_times.iter().map(|&t| EvolutionConfig::new(dt, t, 1).steps()).collect();
    let mut pullbacks = Vec::new();
    let mut strichartz = Strichartz::default();
    let mut at_two = f64::NAN;
    let mut sink = |k: usize, s: &GaugeState| {
        strichartz.push(s);
        if k == wanted[2] {
            at_two = strichartz.plus + strichartz.minus;
        }
        if wanted.contains(&k) {
            let discrete = discrete_scattering_profile(s, dt)?;
            let hankel_minus = scattering_samples(s, &plan_plus, &plan_minus)?.1;
            pullbacks.push(Pullback { discrete, hankel_minus });
        }
        Ok(())
    };
    let traj = evolve(&s0, &EvolutionConfig { store_states: false, ..EvolutionConfig::new(dt, 4.0, 1) }, &mut sink)?;
    if let Some(e) = traj.aborted {
        return Err(e);
    }
    let mut d = Vec::new();
    let mut dh = Vec::new();
    for w in pullbacks.windows(2) {
        let (a, b) = (&w[1].discrete, &w[0].discrete);
        d.push(a.0.distance(&b.0)?.hypot(a.1.distance(&b.1)?));
        dh.push(samples_distance(&plan_minus, &w[1].hankel_minus, &w[0].hankel_minus));
    }
    let total = strichartz.plus + strichartz.minus;
    Ok(vec![
        // d(t) = ‖P(t) − P(t/2)‖ at t = 1, 2, 4.
        ctx.at_least("d1_over_d2", d[0] / d[1], 1.0),
        ctx.at_least("d2_over_d4", d[1] / d[2], 1.0),
        ctx.at_least("hankel_minus_d1_over_d2", dh[0] / dh[1], 1.0),
        ctx.at_least("hankel_minus_d2_over_d4", dh[1] / dh[2], 1.0),
        // S over [2, 4] against S over [0, 2]; ≈ 0.2 for free dispersion.
        ctx.at_most("late_strichartz_share", (total - at_two) / at_two, 0.5),
    ])
}

fn scaling_symmetry(ctx: &Context) -> smgauge::Result<Vec<Check>> {
    let lambda = 2.0;
    let (n, dt) = ctx.size().pick((2048usize, 1e-3), (512, 4e-3));
    let g = RadialGrid::new(BASE_R_MAX, n)?;
    let s0 = gaussian_state(g, 1, BASE_AMPLITUDE)?;
    let x = final_state(&s0, dt, 0.25)?;
    let y = final_state(&s0.scaled(lambda), dt * lambda * lambda, 0.25 * lambda * lambda)?;
    let xs = x.scaled(lambda);
    Ok(vec![ctx.at_most("scaled_rel_l2", pair_distance(&xs, &y)? / pair_norm(&y), 1e-3)])
}

fn run_one(ctx: &Context, suite: &Suite) -> SuiteReport {
    let start = Instant::now();
    let (checks, error) = match (suite.run)(ctx) {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let report = SuiteReport { name: suite.name, criterion: suite.criterion, checks, error, seconds: start.elapsed().as_secs_f64() };
    log::info!("{} ({:.1}s)", report.line(), report.seconds);
    report
}

/// Runs `suites` on up to `opts.threads` workers; reports come back in
/// criterion order.
pub fn run_suites(suites: &[&Suite], opts: &Options) -> Vec<SuiteReport> {
    let ctx = Context::new(*opts);
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(suites.len()));
    let workers = opts.threads.clamp(1, suites.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(suite) = suites.get(i) else { break };
                let report = run_one(&ctx, suite);
                results.lock().expect("report lock").push(report);
            });
        }
    });
    let mut out = results.into_inner().expect("report lock");
    out.sort_by_key(|r| r.criterion);
    out
}

pub fn render(reports: &[SuiteReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let _ = writeln!(s, "{}", r.line());
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let _ = writeln!(s, "{} of {} suites passed", reports.len() - failed, reports.len());
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_rules() {
        assert_eq!(select(None).unwrap().len(), 13);
        assert!(matches!(select(Some(&[])), Err(CliError::Usage(_))));
        assert!(matches!(select(Some(&["".into()])), Err(CliError::Usage(_))));
        assert!(matches!(select(Some(&["nope".into()])), Err(CliError::Usage(_))));
        let picked = select(Some(&["virial,hankel_fidelity".into(), "virial".into()])).unwrap();
        assert_eq!(picked.iter().map(|s| s.criterion).collect::<Vec<_>>(), vec![1, 10]);
    }

    #[test]
    fn bounds_and_scaling() {
        let ctx = Context::new(Options { tolerance_scale: 1e-3, ..Options::default() });
        assert!(!ctx.at_most("x", 1e-9, 1e-8).passed());
        assert!(ctx.at_least("r", 3.5, 3.0).passed());
        assert!(!ctx.within("q", 4.7, 3.4, 4.6).passed());
        assert!(!ctx.at_most("nan", f64::NAN, 1.0).passed());
    }

    #[test]
    fn small_hankel_suite_passes_and_tightening_fails() {
        let suite = select(Some(&["hankel_fidelity".into()])).unwrap();
        let opts = Options { size: Size::Small, threads: 1, ..Options::default() };
        let ok = run_suites(&suite, &opts);
        assert!(ok[0].passed(), "{}", ok[0].line());
        let tight = run_suites(&suite, &Options { tolerance_scale: 1e-9, ..opts });
        assert!(!tight[0].passed(), "{}", tight[0].line());
    }
}
