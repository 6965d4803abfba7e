//! Bessel functions of the first kind J_k for integer order and their
//! positive zeros.
//!
//! Three regimes: the power series where its terms decrease from the
//! start, the Hankel asymptotic expansion for x ≫ k², and Miller's
//! backward recurrence (normalized by J₀ + 2ΣJ₂ⱼ = 1) in between.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

pub const MAX_ORDER: u32 = 64;

/// J_k(x) for 0 ≤ k ≤ 64 and finite x ≥ 0.
pub fn bessel_j(k: u32, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain("bessel_j argument"));
    }
    if x < 0.0 {
        return Err(Error::InvalidParameter("bessel_j argument must be nonnegative"));
    }
    if k > MAX_ORDER {
        return Err(Error::OrderTooLarge { order: k });
    }
    Ok(jn(k, x))
}

/// Unchecked evaluation; callers guarantee k ≤ 64 and finite x ≥ 0.
pub(crate) fn jn(k: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    if x <= 4.0 || x * x <= 4.0 * (kf + 1.0) {
        series(k, x)
    } else if x >= 25.0 + 0.5 * kf * kf {
        asymptotic(k, x)
    } else {
        miller(k, x)
    }
}

fn series(k: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for l in 1..=k {
        term *= half / l as f64;
    }
    let q = -half * half;
    let mut sum = term;
    let mut j = 1.0;
    loop {
        term *= q / (j * (j + k as f64));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || term == 0.0 {
            break;
        }
        j += 1.0;
    }
    sum
}

fn asymptotic(k: u32, x: f64) -> f64 {
    let mu = 4.0 * (k as f64) * (k as f64);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for l in 1..80 {
        let odd = (2 * l - 1) as f64;
        a *= (mu - odd * odd) / (l as f64 * 8.0 * x);
        let mag = a.abs();
        if mag > last {
            break;
        }
        match l % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        if mag < 1e-17 {
            break;
        }
        last = mag;
    }
    // cos(x − φ) with φ = (k/2 + 1/4)π reduced exactly modulo 2π.
    let phi = ((k % 4) as f64) * FRAC_PI_2 + FRAC_PI_4;
    let (s, c) = x.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let cos_chi = c * cp + s * sp;
    let sin_chi = s * cp - c * sp;
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

fn miller(k: u32, x: f64) -> f64 {
    let top = (k as f64).max(x);
    let mut start = (top + 20.0 + (40.0 * top).sqrt()) as u32;
    start += start % 2;
    let two_over_x = 2.0 / x;
    let mut next = 0.0;
    let mut cur = 1e-30;
    let mut sum = 0.0;
    let mut at_k = 0.0;
    let mut j = start;
    while j > 0 {
        let prev = (j as f64) * two_over_x * cur - next;
        next = cur;
        cur = prev;
        j -= 1;
        if j == k {
            at_k = cur;
        }
        if j % 2 == 0 && j > 0 {
            sum += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            sum *= 1e-250;
            at_k *= 1e-250;
        }
    }
    sum += cur;
    at_k / sum
}

/// Derivative J_k'(x).
pub(crate) fn jn_prime(k: u32, x: f64) -> f64 {
    if k == 0 {
        -jn(1, x)
    } else {
        0.5 * (jn(k - 1, x) - jn(k + 1, x))
    }
}

/// The first `count` positive zeros of J_k, increasing, each located to
/// 1e−14 relative.
///
/// Zeros are isolated one at a time. Consecutive zeros are at least 3
/// apart for every integer order, so the next zero after `prev` lies in
/// `(prev + 3, prev + 3 + π)`; McMahon's expansion narrows the bracket
/// once it is accurate.
pub fn bessel_zeros(k: u32, count: usize) -> Result<Vec<f64>> {
    if k > MAX_ORDER {
        return Err(Error::OrderTooLarge { order: k });
    }
    let mut zeros = Vec::with_capacity(count);
    let mut prev = 0.0f64;
    for index in 1..=count {
        let bracket = mcmahon_bracket(k, index, prev).or_else(|| scan_bracket(k, index, prev));
        let (a, b) = bracket.ok_or(Error::ZeroSearch { order: k, index })?;
        let z = refine(k, a, b).ok_or(Error::ZeroSearch { order: k, index })?;
        if z <= prev {
            return Err(Error::ZeroSearch { order: k, index });
        }
        zeros.push(z);
        prev = z;
    }
    Ok(zeros)
}

fn mcmahon_bracket(k: u32, index: usize, prev: f64) -> Option<(f64, f64)> {
    let mu = 4.0 * (k as f64) * (k as f64);
    let beta = (index as f64 + 0.5 * k as f64 - 0.25) * PI;
    if beta < 2.0 * mu + 10.0 {
        return None;
    }
    let e = 1.0 / (8.0 * beta);
    let guess = beta - (mu - 1.0) * e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) * e * e * e / 3.0;
    let (a, b) = (guess - 0.5, guess + 0.5);
    if a <= prev + 1.0 {
        return None;
    }
    let (fa, fb) = (jn(k, a), jn(k, b));
    (fa * fb < 0.0).then_some((a, b))
}

fn scan_bracket(k: u32, index: usize, prev: f64) -> Option<(f64, f64)> {
    // j_{k,1} > k, and J_k > 0 on (0, j_{k,1}).
    let mut a = if index == 1 { (k as f64).max(0.5) } else { prev + 3.0 };
    let mut fa = jn(k, a);
    let step = 0.25;
    let limit = a + 4.0 + if index == 1 { 2.0 * k as f64 + 4.0 } else { 0.0 };
    while a < limit {
        let b = a + step;
        let fb = jn(k, b);
        if fa == 0.0 {
            return Some((a - 1e-3, a + 1e-3));
        }
        if fa * fb < 0.0 {
            return Some((a, b));
        }
        a = b;
        fa = fb;
    }
    None
}

fn refine(k: u32, mut a: f64, mut b: f64) -> Option<f64> {
    let mut fa = jn(k, a);
    for _ in 0..200 {
        if b - a <= 1e-12 * b {
            break;
        }
        let mid = 0.5 * (a + b);
        let fm = jn(k, mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let mut z = 0.5 * (a + b);
    for _ in 0..4 {
        let d = jn_prime(k, z);
        if d == 0.0 {
            break;
        }
        let next = z - jn(k, z) / d;
        if !(next > a - 1e-12 && next < b + 1e-12) {
            break;
        }
        let done = (next - z).abs() <= 1e-15 * z;
        z = next;
        if done {
            break;
        }
    }
    z.is_finite().then_some(z)
}
