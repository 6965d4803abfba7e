//! From ψ⁻ alone back to the map: the (A₂, ψ₂) fixed point, the
//! compatible partner ψ⁺, the Coulomb frame and the energy. Also the
//! opposite direction, map → gauge, by solving the Coulomb gauge ODE.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::frame::{self, axpy, boost_from_pole, cross, dot, FrameField, Vec3, I_HAT, J_HAT, K_HAT};
use crate::gauge::GaugeState;
use crate::grid::{self, RadialField, RadialGrid};
use crate::interp;
use crate::{Error, Result, Target};

pub const MAX_ITERATIONS: usize = 200;
pub const TOLERANCE: f64 = 1e-12;
/// Orthonormality drift tolerated within one RK4 step before projection.
pub const MAX_STEP_DRIFT: f64 = 1e-3;

/// Fixed point (A₂, ψ₂) of the comp1 system for a given ψ⁻.
#[derive(Clone, Debug)]
pub struct Comp1Solution {
    pub grid: RadialGrid,
    pub m: u32,
    /// A₂ = √(m² + |ψ₂|²) pointwise.
    pub a2: Vec<f64>,
    pub psi2: Vec<Complex64>,
    pub psi2_over_r: Vec<Complex64>,
    pub iterations: usize,
    /// Sup-norm change of the last Picard update.
    pub residual: f64,
}

/// r^{−m} ∫₀^r f(s) s^m ds at the nodes, fourth order.
///
/// Interior cells use the cubic rule (−1, 13, 13, −1)/24 and the last
/// one the one-sided (1, −5, 19, 9)/24. On [0, r₀] the integrand s^m f is
/// odd (f has the parity of order m−1), so it is fitted by a s + b s³.
/// Each cell integral is scaled by r_{i+1}^{−m} before accumulation,
/// S_{i+1} = (r_i/r_{i+1})^m S_i + r_{i+1}^{−m}∫_{r_i}^{r_{i+1}}, so no
/// power of r is ever formed. A low-order rule here leaves an O(h²)
/// offset in ψ⁺ = ψ⁻ + 2iψ₂/r at the origin, where ψ⁺ must vanish like
/// r^{m+1}; the linear flow of H_{m+1} cannot resolve that mode.
fn scaled_moment(grid: &RadialGrid, f: &[Complex64], m: u32) -> Vec<Complex64> {
    let n = f.len();
    let h = grid.h();
    let x = |j: usize| j as f64 + 0.5;
    let mut out = Vec::with_capacity(n);
    // [0, r₀] in units of h, normalized by r₀^m: G(t) = f(th)(t/t₀)^m is
    // odd, so G ≈ αt + βt³ through the nodes t₀ = ½ and t₁ = 3/2.
    let (t0, t1) = (0.5f64, 1.5f64);
    let g0 = f[0];
    let g1 = f[1] * 3f64.powi(m as i32);
    let det = t0 * t1.powi(3) - t1 * t0.powi(3);
    let alpha = (g0 * t1.powi(3) - g1 * t0.powi(3)) / det;
    let beta = (g1 * t0 - g0 * t1) / det;
    let first = (alpha * (t0 * t0 / 2.0) + beta * (t0.powi(4) / 4.0)) * h;
    let mut s = first;
    out.push(s);
    for i in 0..n - 1 {
        let ri = x(i);
        let rn = x(i + 1);
        // f_j (r_j/r_{i+1})^m for the stencil.
        let w = |j: usize| f[j] * (x(j) / rn).powi(m as i32);
        let cell = if i >= 1 && i + 2 < n {
            (w(i - 1) * -1.0 + w(i) * 13.0 + w(i + 1) * 13.0 + w(i + 2) * -1.0) * (h / 24.0)
        } else if i == 0 {
            // Ghost below the origin from the odd integrand.
            let ghost = -(f[0] * (x(0) / rn).powi(m as i32));
            (ghost * -1.0 + w(0) * 13.0 + w(1) * 13.0 + w(2.min(n - 1)) * -1.0) * (h / 24.0)
        } else {
            (w(i - 2) + w(i - 1) * -5.0 + w(i) * 19.0 + w(i + 1) * 9.0) * (h / 24.0)
        };
        s = s * (ri / rn).powi(m as i32) + cell;
        out.push(s);
    }
    out
}

fn a2_from_psi2(psi2: &[Complex64], m: f64) -> Vec<f64> {
    psi2.iter().map(|p| (m * m + p.norm_sqr()).sqrt()).collect()
}

/// Solves ∂ᵣψ₂ = iA₂ψ⁻ − (A₂/r)ψ₂ with A₂ = √(m² + |ψ₂|²) by Picard
/// iteration of ψ₂ = r^{−m} I_m[iA₂ψ⁻ − (A₂ − m)ψ₂/r].
pub fn solve_comp1(psi_minus: &RadialField, m: u32, target: Target) -> Result<Comp1Solution> {
    target.require_hyperbolic()?;
    if m == 0 {
        return Err(Error::InvalidParameter("equivariance index m must be at least 1"));
    }
    if psi_minus.order != m - 1 {
        return Err(Error::OrderMismatch { expected: m - 1, found: psi_minus.order });
    }
    if let Some(node) = psi_minus.first_non_finite() {
        return Err(Error::NonFinite { what: "psi_minus", node });
    }
    let g = psi_minus.grid;
    let mf = m as f64;
    let pm = &psi_minus.values;
    let i = Complex64::new(0.0, 1.0);

    let mut psi2 = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut residual = f64::INFINITY;
    for iteration in 1..=MAX_ITERATIONS {
        let a2 = a2_from_psi2(&psi2, mf);
        let f: Vec<Complex64> = (0..g.len())
            .map(|k| i * a2[k] * pm[k] - psi2[k] * ((a2[k] - mf) / g.r(k)))
            .collect();
        let next = scaled_moment(&g, &f, m);
        residual = next.iter().zip(&psi2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        psi2 = next;
        if !residual.is_finite() {
            break;
        }
        if residual < TOLERANCE {
            let a2 = a2_from_psi2(&psi2, mf);
            let psi2_over_r = psi2.iter().enumerate().map(|(k, p)| p / g.r(k)).collect();
            return Ok(Comp1Solution { grid: g, m, a2, psi2, psi2_over_r, iterations: iteration, residual });
        }
    }
    Err(Error::NonConvergence { iterations: MAX_ITERATIONS, residual })
}

impl Comp1Solution {
    /// L²(r dr) norm of ∂ᵣψ₂ − iA₂ψ⁻ + (A₂/r)ψ₂ with a centered ∂ᵣ.
    pub fn ode_residual(&self, psi_minus: &RadialField) -> f64 {
        let g = self.grid;
        let d = grid::derivative(&self.psi2, g.h(), self.m);
        let i = Complex64::new(0.0, 1.0);
        g.integrate_r((0..g.len()).map(|k| {
            let r = d[k] - i * self.a2[k] * psi_minus.values[k] + self.psi2_over_r[k] * self.a2[k];
            r.norm_sqr()
        }))
        .sqrt()
    }

    /// sup |A₂² − |ψ₂|² − m²|.
    pub fn conservation_residual(&self) -> f64 {
        crate::gauge::conservation_residual_of(&self.a2, &self.psi2, self.m, Target::Hyperbolic)
    }
}

/// ψ⁺ = ψ⁻ + 2iψ₂/r.
pub fn complete_pair(psi_minus: &RadialField, sol: &Comp1Solution) -> Result<GaugeState> {
    if psi_minus.grid != sol.grid {
        return Err(Error::GridMismatch);
    }
    let two_i = Complex64::new(0.0, 2.0);
    let plus: Vec<Complex64> = psi_minus.values.iter().zip(&sol.psi2_over_r).map(|(q, p)| q + two_i * p).collect();
    GaugeState::new(
        0.0,
        sol.m,
        Target::Hyperbolic,
        RadialField { grid: sol.grid, order: sol.m + 1, values: plus },
        psi_minus.clone(),
    )
}

/// Point on the hyperboloid (and its boosted pole frame) that matches
/// ψ₂ = −m(w₃ − iv₃) and A₂ = m u₃ at the outer edge.
fn tail_matched_frame(psi2: Complex64, a2: f64, m: f64) -> (Vec3, Vec3, Vec3) {
    let u = [psi2.im / m, -psi2.re / m, a2 / m];
    (u, boost_from_pole(u, I_HAT), boost_from_pole(u, J_HAT))
}

type Frame9 = [Vec3; 3];

fn frame_rhs(y: &Frame9, psi1: Complex64) -> Frame9 {
    let (a, b) = (psi1.re, psi1.im);
    let [u, v, w] = *y;
    // μ = −1: ∂ᵣu = a v + b w, ∂ᵣv = a u, ∂ᵣw = b u.
    [axpy(a, v, frame::scale(b, w)), frame::scale(a, u), frame::scale(b, u)]
}

fn frame_add(y: &Frame9, k: &Frame9, c: f64) -> Frame9 {
    [axpy(c, k[0], y[0]), axpy(c, k[1], y[1]), axpy(c, k[2], y[2])]
}

/// Integrates the frame system ∂ᵣ(u, v, w) inward from r_max with the
/// Coulomb condition A₁ = 0 and ψ₁ = ψ⁻ + iψ₂/r.
///
/// The outer value is the boosted pole frame matched to (A₂, ψ₂) at the
/// last node, which tends to (k̂, î, ĵ) as r_max grows. Every RK4 step is
/// followed by a metric Gram–Schmidt projection.
pub fn reconstruct_frame(psi_minus: &RadialField, sol: &Comp1Solution) -> Result<FrameField> {
    if psi_minus.grid != sol.grid {
        return Err(Error::GridMismatch);
    }
    let g = sol.grid;
    let n = g.len();
    let mf = sol.m as f64;
    let i = Complex64::new(0.0, 1.0);
    let psi1: Vec<Complex64> = (0..n).map(|k| psi_minus.values[k] + i * sol.psi2_over_r[k]).collect();
    let parity = sol.m - 1;

    let mut u = vec![K_HAT; n];
    let mut v = vec![I_HAT; n];
    let mut w = vec![J_HAT; n];
    let (u0, v0, w0) = tail_matched_frame(sol.psi2[n - 1], sol.a2[n - 1], mf);
    u[n - 1] = u0;
    v[n - 1] = v0;
    w[n - 1] = w0;

    let dr = -g.h();
    for k in (1..n).rev() {
        let mid = interp::cubic_inner(&g, &psi1, parity, g.r(k) + 0.5 * dr);
        let y: Frame9 = [u[k], v[k], w[k]];
        let k1 = frame_rhs(&y, psi1[k]);
        let k2 = frame_rhs(&frame_add(&y, &k1, 0.5 * dr), mid);
        let k3 = frame_rhs(&frame_add(&y, &k2, 0.5 * dr), mid);
        let k4 = frame_rhs(&frame_add(&y, &k3, dr), psi1[k - 1]);
        let mut next = y;
        for c in 0..3 {
            for j in 0..3 {
                next[c][j] += dr / 6.0 * (k1[c][j] + 2.0 * k2[c][j] + 2.0 * k3[c][j] + k4[c][j]);
            }
        }
        let drift = frame::orthonormality_defect(next[0], next[1], next[2], -1.0);
        if !(drift <= MAX_STEP_DRIFT) {
            return Err(Error::FrameDrift { node: k - 1, drift });
        }
        let (uu, vv, ww) = frame::reorthonormalize(next[0], next[1], -1.0);
        u[k - 1] = uu;
        v[k - 1] = vv;
        w[k - 1] = ww;
    }
    Ok(FrameField { grid: g, u, v, w, target: Target::Hyperbolic })
}

/// Nodal ∂ᵣu with the parities of an m-equivariant profile: u₁, u₂ of
/// order m, u₃ even.
fn map_derivative(grid: &RadialGrid, u: &[Vec3], m: u32) -> Vec<Vec3> {
    let comps: Vec<Vec<f64>> = (0..3)
        .map(|c| {
            let col: Vec<f64> = u.iter().map(|x| x[c]).collect();
            grid::derivative(&col, grid.h(), if c < 2 { m } else { 0 })
        })
        .collect();
    (0..u.len()).map(|i| [comps[0][i], comps[1][i], comps[2][i]]).collect()
}

fn coulomb_rhs(v: Vec3, u: Vec3, du: Vec3) -> Vec3 {
    let mu = -1.0;
    axpy(mu * dot(v, u, mu), du, frame::scale(-mu * dot(v, du, mu), u))
}

/// Gauge fields of a given map profile ū.
///
/// Solves ∂ᵣv = μ(v ·_μ u)∂ᵣu − μ(v ·_μ ∂ᵣu)u inward, w = u ×_μ v, and
/// returns ψ± = ψ₁ ± iψ₂/r with ψ₁ = ∂ᵣu ·_μ (v + iw) and
/// ψ₂ = m(k̂ ×_μ u) ·_μ (v + iw).
pub fn derive_gauge_from_map(grid: RadialGrid, u: &[Vec3], m: u32, target: Target) -> Result<(GaugeState, FrameField)> {
    target.require_hyperbolic()?;
    let mu = target.mu();
    let n = grid.len();
    if u.len() != n {
        return Err(Error::Shape { expected: n, found: u.len() });
    }
    for (node, x) in u.iter().enumerate() {
        let deviation = (dot(*x, *x, mu) - mu).abs();
        if !(deviation <= 1e-6) || x[2] <= 0.0 {
            return Err(Error::InvalidMap { node, deviation });
        }
    }
    let edge = u[n - 1];
    let distance = ((edge[0]).powi(2) + (edge[1]).powi(2) + (edge[2] - 1.0).powi(2)).sqrt();
    if !(distance < 0.1) {
        return Err(Error::NotAsymptotic { distance });
    }
    let du = map_derivative(&grid, u, m);
    let up = [m, m, 0];
    let dup = [m + 1, m + 1, 1];

    let mut v = vec![I_HAT; n];
    v[n - 1] = boost_from_pole(edge, I_HAT);
    let dr = -grid.h();
    for k in (1..n).rev() {
        let rm = grid.r(k) + 0.5 * dr;
        let um = interp::cubic_vec3(&grid, u, up, rm);
        let dum = interp::cubic_vec3(&grid, &du, dup, rm);
        let y = v[k];
        let k1 = coulomb_rhs(y, u[k], du[k]);
        let k2 = coulomb_rhs(axpy(0.5 * dr, k1, y), um, dum);
        let k3 = coulomb_rhs(axpy(0.5 * dr, k2, y), um, dum);
        let k4 = coulomb_rhs(axpy(dr, k3, y), u[k - 1], du[k - 1]);
        let mut next = y;
        for j in 0..3 {
            next[j] += dr / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let drift = (dot(next, next, mu) - 1.0).abs().max(dot(next, u[k - 1], mu).abs());
        if !(drift <= MAX_STEP_DRIFT) {
            return Err(Error::FrameDrift { node: k - 1, drift });
        }
        v[k - 1] = frame::reorthonormalize(u[k - 1], next, mu).1;
    }
    let w: Vec<Vec3> = (0..n).map(|k| cross(u[k], v[k], mu)).collect();

    let i = Complex64::new(0.0, 1.0);
    let mf = m as f64;
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for k in 0..n {
        let psi1 = Complex64::new(dot(du[k], v[k], mu), dot(du[k], w[k], mu));
        let rot = cross(K_HAT, u[k], mu);
        let psi2 = Complex64::new(dot(rot, v[k], mu), dot(rot, w[k], mu)) * mf;
        let q = i * psi2 / grid.r(k);
        plus.push(psi1 + q);
        minus.push(psi1 - q);
    }
    let state = GaugeState::new(
        0.0,
        m,
        target,
        RadialField { grid, order: m + 1, values: plus },
        RadialField { grid, order: m - 1, values: minus },
    )?;
    let frame = FrameField { grid, u: u.to_vec(), v, w, target };
    Ok((state, frame))
}

/// E(u) = π∫(|∂ᵣu|²_μ + m²(u₁² + u₂²)/r²) r dr.
///
/// The exterior r > r_max is closed in form: where ψ⁻ has decayed the
/// energy beyond r equals 2π(A₂(r) − m) = 2πm(u₃(r) − 1).
pub fn map_energy(frame: &FrameField, m: u32) -> f64 {
    let last = frame.u.len() - 1;
    let du = map_derivative(&frame.grid, &frame.u, m);
    // u₃ carried from the last node to r_max.
    let edge = frame.u[last][2] + 0.5 * frame.grid.h() * du[last][2];
    map_energy_interior(frame, m) + 2.0 * core::f64::consts::PI * m as f64 * (edge - 1.0)
}

/// The energy integral over [0, r_max] only.
pub fn map_energy_interior(frame: &FrameField, m: u32) -> f64 {
    let g = frame.grid;
    let mu = frame.target.mu();
    let du = map_derivative(&g, &frame.u, m);
    let m2 = (m as f64) * (m as f64);
    core::f64::consts::PI
        * g.integrate_r((0..g.len()).map(|k| {
            let u = frame.u[k];
            let r = g.r(k);
            dot(du[k], du[k], mu) + m2 * (u[0] * u[0] + u[1] * u[1]) / (r * r)
        }))
}

/// π‖u − ũ‖²_{Ḣ¹}: the energy functional applied to the difference of two
/// profiles, with the Euclidean norm on ℝ³ since u − ũ is not tangent.
pub fn difference_energy(a: &FrameField, b: &FrameField, m: u32) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let g = a.grid;
    let diff: Vec<Vec3> = a.u.iter().zip(&b.u).map(|(x, y)| axpy(-1.0, *y, *x)).collect();
    let d = map_derivative(&g, &diff, m);
    let m2 = (m as f64) * (m as f64);
    Ok(core::f64::consts::PI
        * g.integrate_r((0..g.len()).map(|k| {
            let r = g.r(k);
            d[k][0] * d[k][0] + d[k][1] * d[k][1] + d[k][2] * d[k][2] + m2 * (diff[k][0].powi(2) + diff[k][1].powi(2)) / (r * r)
        })))
}

/// ū = (sinh α, 0, cosh α) for a profile α vanishing at the origin and at
/// infinity; lands on the upper hyperboloid sheet exactly up to rounding.
pub fn map_from_profile(grid: &RadialGrid, alpha: impl Fn(f64) -> f64) -> Vec<Vec3> {
    grid.nodes()
        .map(|r| {
            let a = alpha(r);
            [a.sinh(), 0.0, a.cosh()]
        })
        .collect()
}

/// L²(r dr)-relative distance between m·u₃ and A₂.
pub fn a2_identification_error(frame: &FrameField, sol: &Comp1Solution) -> f64 {
    let g = frame.grid;
    let mf = sol.m as f64;
    let num = g.integrate_r((0..g.len()).map(|k| (mf * frame.u[k][2] - sol.a2[k]).powi(2)));
    let den = g.integrate_r(sol.a2.iter().map(|a| a * a));
    (num / den).sqrt()
}

/// L²(r dr)-relative distance between −m(w₃ − iv₃) and ψ₂, measured as a
/// fraction of ‖ψ₂‖ (or absolutely when ψ₂ = 0).
pub fn psi2_identification_error(frame: &FrameField, sol: &Comp1Solution) -> f64 {
    let g = frame.grid;
    let mf = sol.m as f64;
    let num = g.integrate_r((0..g.len()).map(|k| {
        let z = Complex64::new(frame.w[k][2], -frame.v[k][2]) * -mf;
        (z - sol.psi2[k]).norm_sqr()
    }));
    let den = g.integrate_r(sol.psi2.iter().map(|p| p.norm_sqr()));
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}
