//! Minkowski-twisted vector algebra and orthonormal frames (u, v, w)
//! along the radial profile of an equivariant map.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::grid::RadialGrid;
use crate::Target;

pub type Vec3 = [f64; 3];

pub const I_HAT: Vec3 = [1.0, 0.0, 0.0];
pub const J_HAT: Vec3 = [0.0, 1.0, 0.0];
pub const K_HAT: Vec3 = [0.0, 0.0, 1.0];

/// a ·_μ b = a₁b₁ + a₂b₂ + μa₃b₃.
#[inline]
pub fn dot(a: Vec3, b: Vec3, mu: f64) -> f64 {
    a[0] * b[0] + a[1] * b[1] + mu * a[2] * b[2]
}

/// a ×_μ b = η_μ(a × b).
#[inline]
pub fn cross(a: Vec3, b: Vec3, mu: f64) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], mu * (a[0] * b[1] - a[1] * b[0])]
}

#[inline]
pub(crate) fn axpy(a: f64, x: Vec3, y: Vec3) -> Vec3 {
    [y[0] + a * x[0], y[1] + a * x[1], y[2] + a * x[2]]
}

#[inline]
pub(crate) fn scale(a: f64, x: Vec3) -> Vec3 {
    [a * x[0], a * x[1], a * x[2]]
}

/// Largest deviation of the Gram matrix of (u, v, w) from diag(μ, 1, 1),
/// together with |w − u ×_μ v|.
pub fn orthonormality_defect(u: Vec3, v: Vec3, w: Vec3, mu: f64) -> f64 {
    let c = cross(u, v, mu);
    let entries = [
        dot(u, u, mu) - mu,
        dot(v, v, mu) - 1.0,
        dot(w, w, mu) - 1.0,
        dot(u, v, mu),
        dot(u, w, mu),
        dot(v, w, mu),
        w[0] - c[0],
        w[1] - c[1],
        w[2] - c[2],
    ];
    entries.iter().fold(0.0, |acc: f64, e| acc.max(e.abs()))
}

/// Metric Gram–Schmidt for μ = −1: u onto the upper hyperboloid sheet,
/// v orthonormalized against u, w rebuilt as u ×_μ v.
pub(crate) fn reorthonormalize(u: Vec3, v: Vec3, mu: f64) -> (Vec3, Vec3, Vec3) {
    let uu = dot(u, u, mu);
    let mut u = scale(1.0 / (mu * uu).sqrt(), u);
    if u[2] < 0.0 {
        u = scale(-1.0, u);
    }
    // ⟨u, u⟩ = μ, so the projection coefficient is ⟨v, u⟩/μ.
    let v = axpy(-dot(v, u, mu) / mu, u, v);
    let v = scale(1.0 / dot(v, v, mu).sqrt(), v);
    let w = cross(u, v, mu);
    (u, v, w)
}

/// The boost of H² taking k̂ to `q`, applied to a vector X with
/// X ·_μ k̂ = 0: X + ⟨q, X⟩/(1 − ⟨k̂, q⟩)(k̂ + q). The images of î and ĵ
/// are then orthonormal and tangent at q.
pub(crate) fn boost_from_pole(q: Vec3, x: Vec3) -> Vec3 {
    let mu = -1.0;
    let c = dot(q, x, mu) / (1.0 - dot(K_HAT, q, mu));
    axpy(c, axpy(1.0, K_HAT, q), x)
}

/// Frame (u, v, w) sampled at the grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameField {
    pub grid: RadialGrid,
    pub u: Vec<Vec3>,
    pub v: Vec<Vec3>,
    pub w: Vec<Vec3>,
    pub target: Target,
}

impl FrameField {
    /// The constant frame (k̂, î, ĵ).
    pub fn trivial(grid: RadialGrid) -> Self {
        let n = grid.len();
        FrameField {
            grid,
            u: alloc::vec![K_HAT; n],
            v: alloc::vec![I_HAT; n],
            w: alloc::vec![J_HAT; n],
            target: Target::Hyperbolic,
        }
    }

    /// Worst orthonormality defect over all nodes.
    pub fn max_defect(&self) -> f64 {
        let mu = self.target.mu();
        (0..self.u.len())
            .map(|i| orthonormality_defect(self.u[i], self.v[i], self.w[i], mu))
            .fold(0.0, f64::max)
    }

    pub fn min_u3(&self) -> f64 {
        self.u.iter().map(|u| u[2]).fold(f64::INFINITY, f64::min)
    }

    /// sup_i |u_i − ũ_i| in the Euclidean norm of ℝ³.
    pub fn sup_distance_u(&self, other: &FrameField) -> f64 {
        self.u
            .iter()
            .zip(&other.u)
            .map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt())
            .fold(0.0, f64::max)
    }
}
