//! Initial-data synthesis from the two config families.

use smgauge::gauge::GaugeState;
use smgauge::grid::{RadialField, RadialGrid};
use smgauge::reconstruct::{complete_pair, derive_gauge_from_map, map_from_profile, solve_comp1};
use smgauge::{Complex64, Target};

use crate::config::{InitialData, MapProfile, PsiProfile, RunConfig};
use crate::CliError;

/// ψ⁻ sampled on `grid` for index m.
pub fn psi_minus_profile(grid: RadialGrid, m: u32, p: &PsiProfile) -> RadialField {
    let power = (m - 1).min(2) as i32;
    let scale = if p.center > 0.0 { p.center } else { p.width };
    let two_s2 = 2.0 * p.width * p.width;
    RadialField::from_fn(grid, m - 1, |r| {
        let envelope = p.amplitude * (r / scale).powi(power) * (-(r - p.center).powi(2) / two_s2).exp();
        Complex64::from_polar(envelope, p.chirp * r)
    })
}

/// α(r) = a (r/σ)^m e^{−r²/2σ²}.
pub fn map_alpha(m: u32, p: &MapProfile) -> impl Fn(f64) -> f64 {
    let (a, s) = (p.amplitude, p.width);
    move |r| a * (r / s).powi(m as i32) * (-r * r / (2.0 * s * s)).exp()
}

/// ψ⁻ → comp1 → completed pair, or map → Coulomb frame → gauge fields.
pub fn build_initial_state(cfg: &RunConfig) -> Result<GaugeState, CliError> {
    let grid = cfg.radial_grid()?;
    let m = cfg.index();
    match &cfg.initial_data {
        InitialData::PsiProfile(p) => {
            let psi_minus = psi_minus_profile(grid, m, p);
            let sol = solve_comp1(&psi_minus, m, Target::Hyperbolic)?;
            Ok(complete_pair(&psi_minus, &sol)?)
        }
        InitialData::MapProfile(p) => {
            let u = map_from_profile(&grid, map_alpha(m, p));
            Ok(derive_gauge_from_map(grid, &u, m, Target::Hyperbolic)?.0)
        }
    }
}
