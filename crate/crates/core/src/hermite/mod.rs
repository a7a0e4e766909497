//! Hermite–Gaussian integrals in closed form, with a quadrature oracle.
//!
//! The central identity evaluates
//!
//! ```text
//! J = ∫ H_n(Ax) H_m(Bx − d) exp(−(Ax)²/2 + δ(Bx − d) − (Bx − d)²/2 + γAx) dx
//! ```
//!
//! for real nonzero `A`, `B`. When `|A| ≠ |B|` it is a finite sum of Hermite
//! polynomials at complex arguments; when `B = ±A` it collapses to a sum of
//! powers. Fractional powers use the principal branch factor by factor.

pub mod quadrature;

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use quadrature::{integrate_real_line, QuadratureOptions, QuadratureResult};

/// Highest polynomial degree accepted by the closed forms.
pub const MAX_DEGREE: usize = 150;

/// Relative gap `||A| − |B|| / |B|` below which the `|A| ≠ |B|` sum loses
/// digits to cancellation; inside it the value is interpolated in `A`.
pub const NEAR_EQUAL_BAND: f64 = 1e-3;

/// Physicists' Hermite polynomial by the three-term recurrence.
pub fn hermite_poly(n: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `H_0(z), …, H_n(z)` at a complex argument.
pub fn hermite_table(n: usize, z: C64) -> Vec<C64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(C64::new(1.0, 0.0));
    if n >= 1 {
        out.push(z * 2.0);
    }
    for k in 1..n {
        let next = z * 2.0 * out[k] - out[k - 1] * (2.0 * k as f64);
        out.push(next);
    }
    out
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Normalized oscillator eigenfunction `H_n(u) e^{−u²/2} / √(2ⁿ n! √π)`,
/// via the normalized recurrence so large `n` does not overflow.
pub fn hermite_function(n: usize, u: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * u * u).exp();
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * u * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `φ_n(e^r x − √2 α)` including the `√(e^r)` Jacobian, so `∫ φ_n² dx = 1`.
pub fn phi_n(n: usize, x: f64, r: f64, alpha: f64) -> f64 {
    (0.5 * r).exp() * hermite_function(n, r.exp() * x - SQRT_2 * alpha)
}

/// Parameters of the Hermite–Gaussian cross integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussHermiteParams {
    pub a: f64,
    pub b: f64,
    pub d: C64,
    pub gamma: C64,
    pub delta: C64,
    pub n: usize,
    pub m: usize,
}

impl GaussHermiteParams {
    pub fn new(n: usize, m: usize, a: f64, b: f64) -> Self {
        let zero = C64::new(0.0, 0.0);
        GaussHermiteParams { a, b, d: zero, gamma: zero, delta: zero, n, m }
    }

    pub fn with_shifts(mut self, d: f64, gamma: f64, delta: f64) -> Self {
        self.d = C64::new(d, 0.0);
        self.gamma = C64::new(gamma, 0.0);
        self.delta = C64::new(delta, 0.0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite()) || self.a == 0.0 || self.b == 0.0 {
            return Err(Error::invalid(format!("A = {}, B = {} must be finite and nonzero", self.a, self.b)));
        }
        if self.n > MAX_DEGREE || self.m > MAX_DEGREE {
            return Err(Error::invalid(format!("degrees ({}, {}) exceed cap {MAX_DEGREE}", self.n, self.m)));
        }
        for (name, v) in [("d", self.d), ("gamma", self.gamma), ("delta", self.delta)] {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::invalid(format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    /// Value of the integrand at `x`.
    pub fn integrand(&self, x: f64) -> C64 {
        let ax = self.a * x;
        let bx = C64::new(self.b * x, 0.0) - self.d;
        let h_n = hermite_poly(self.n, ax);
        let h_m = *hermite_table(self.m, bx).last().unwrap();
        let expo = -0.5 * ax * ax + self.delta * bx - 0.5 * bx * bx + self.gamma * ax;
        h_m * h_n * expo.exp()
    }
}

/// Principal square root of a real number.
fn sqrt_real(x: f64) -> C64 {
    if x >= 0.0 {
        C64::new(x.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-x).sqrt())
    }
}

/// Closed form of the Hermite–Gaussian cross integral.
pub fn gauss_hermite_closed(p: &GaussHermiteParams) -> Result<C64> {
    p.validate()?;
    let sign = if p.a * p.b > 0.0 { 1.0 } else { -1.0 };
    let t = p.a.abs() / p.b.abs() - 1.0;
    if t == 0.0 {
        return Ok(equal_scale(p, sign));
    }
    if t.abs() >= NEAR_EQUAL_BAND {
        return Ok(distinct_scale(p));
    }
    // Lagrange interpolation in A through nodes outside the band and B = ±A
    let offsets = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0].map(|k| k * NEAR_EQUAL_BAND);
    let at = |off: f64| {
        let q = GaussHermiteParams { a: sign * p.b * (1.0 + off), ..*p };
        if off == 0.0 { equal_scale(&q, sign) } else { distinct_scale(&q) }
    };
    let mut out = C64::new(0.0, 0.0);
    for (i, &xi) in offsets.iter().enumerate() {
        let mut w = 1.0;
        for (j, &xj) in offsets.iter().enumerate() {
            if i != j {
                w *= (t - xj) / (xi - xj);
            }
        }
        out += at(xi) * w;
    }
    Ok(out)
}

/// `|A| ≠ |B|`.
fn distinct_scale(p: &GaussHermiteParams) -> C64 {
    let (a, b) = (p.a, p.b);
    let (a2, b2) = (a * a, b * b);
    let s = a2 + b2;
    let u = (a2 - b2) / s;
    let pre = sqrt_real(u).powu(p.m as u32) * sqrt_real(-u).powu(p.n as u32);
    let (d, g, dl) = (p.d, p.gamma, p.delta);
    let x1 = (g * (a * b) - d * a2 + dl * b2) / sqrt_real(a2 * a2 - b2 * b2);
    let x2 = (g * a + (d + dl) * b) * a / sqrt_real(b2 * b2 - a2 * a2);
    let w = sqrt_real(-(a2 - b2) * (a2 - b2));
    let t = g * b - (d + dl) * a;
    let gauss = (2.0 * PI / s).sqrt() * (-(t * t) / (2.0 * s) + (g * g + dl * dl) * 0.5).exp();

    let h1 = hermite_table(p.m, x1);
    let h2 = hermite_table(p.n, x2);
    let ratio = C64::new(4.0 * a * b, 0.0) / w;
    let mut coef = 1.0;
    let mut ratio_pow = C64::new(1.0, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    for j in 0..=p.m.min(p.n) {
        sum += ratio_pow * coef * h1[p.m - j] * h2[p.n - j];
        coef *= ((p.m - j) * (p.n - j)) as f64 / (j + 1) as f64;
        ratio_pow *= ratio;
    }
    pre * gauss * sum
}

/// `B = sign · A`.
fn equal_scale(p: &GaussHermiteParams, sign: f64) -> C64 {
    let (d, g, dl) = (p.d, p.gamma, p.delta);
    let lead = g * sign + d + dl;
    let follow = g * sign - d + dl;
    let e = g * sign - d - dl;
    let pre = PI.sqrt() / p.a.abs() * (-(e * e) / 4.0 + (g * g + dl * dl) * 0.5).exp();
    let mut coef = 1.0;
    let mut two_pow = 1.0;
    let mut sum = C64::new(0.0, 0.0);
    for j in 0..=p.m.min(p.n) {
        sum += lead.powu((p.n - j) as u32) * follow.powu((p.m - j) as u32) * (coef * two_pow);
        coef *= ((p.m - j) * (p.n - j)) as f64 / (j + 1) as f64;
        two_pow *= 2.0;
    }
    let parity = if sign < 0.0 && p.n % 2 == 1 { -1.0 } else { 1.0 };
    pre * sum * parity
}

/// Quadrature oracle for [`gauss_hermite_closed`]. Also returns `∫|integrand|`
/// as a scale for judging absolute errors.
pub fn gauss_hermite_quadrature(p: &GaussHermiteParams) -> (QuadratureResult, f64) {
    let s = p.a * p.a + p.b * p.b;
    let lin = p.b * (p.d.re + p.delta.re) + p.a * p.gamma.re;
    let center = lin / s;
    let scale = ((p.n + p.m + 1) as f64).sqrt() / s.sqrt();
    let opts = QuadratureOptions { abs_tol: 1e-13, rel_tol: 1e-14, max_intervals: 6000 };
    let value = integrate_real_line(|x| p.integrand(x), center, scale, opts);
    let mag = integrate_real_line(|x| C64::new(p.integrand(x).norm(), 0.0), center, scale, opts);
    (value, mag.value.re)
}

/// Arguments of `I_nm(r, r̄, α, β) = ∫ φ_n(e^r x − √2α) φ_m(e^{r̄} x − √2β) dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapKey {
    pub r: f64,
    pub rbar: f64,
    pub alpha: f64,
    pub beta_shift: f64,
    pub n: usize,
    pub m: usize,
}

impl OverlapKey {
    pub fn new(n: usize, m: usize, r: f64, rbar: f64, alpha: f64, beta_shift: f64) -> Self {
        OverlapKey { r, rbar, alpha, beta_shift, n, m }
    }
}

/// `I_nm`, or `Ī_n` when `r = r̄` and `n = m`.
pub fn overlap_i(key: &OverlapKey) -> Result<C64> {
    for v in [key.r, key.rbar, key.alpha, key.beta_shift] {
        if !v.is_finite() {
            return Err(Error::invalid("overlap arguments must be finite"));
        }
    }
    overlap_shifted(key.n, key.m, key.r, key.rbar, key.alpha, C64::new(key.beta_shift, 0.0))
}

/// `Ī_n(r, α, β)`.
pub fn overlap_bar(n: usize, r: f64, alpha: f64, beta: f64) -> Result<C64> {
    overlap_i(&OverlapKey::new(n, n, r, r, alpha, beta))
}

/// `I_nm` with the second shift continued to complex values.
fn overlap_shifted(n: usize, m: usize, r: f64, rbar: f64, alpha: f64, beta: C64) -> Result<C64> {
    let a = r.exp();
    let b = rbar.exp();
    // substitute x → x + √2α/A so the first factor is H_n(Ax)
    let d = beta * SQRT_2 - C64::new(SQRT_2 * alpha * b / a, 0.0);
    let mut p = GaussHermiteParams::new(n, m, a, b);
    p.d = d;
    let j = gauss_hermite_closed(&p)?;
    if !(j.re.is_finite() && j.im.is_finite()) {
        return Err(Error::invalid(format!("overlap I_{n}{m} overflowed at r = {r}, r̄ = {rbar}")));
    }
    let ln_norm = 0.5 * (r + rbar)
        - 0.5 * ((n + m) as f64 * 2f64.ln() + ln_factorial(n) + ln_factorial(m) + PI.ln());
    Ok(j * ln_norm.exp())
}

/// Quadrature oracle for [`overlap_i`].
pub fn overlap_quadrature(key: &OverlapKey) -> QuadratureResult {
    let f = |x: f64| C64::new(phi_n(key.n, x, key.r, key.alpha) * phi_n(key.m, x, key.rbar, key.beta_shift), 0.0);
    let center = SQRT_2 * key.alpha * (-key.r).exp();
    let scale = ((key.n.max(key.m) + 1) as f64).sqrt() * (-key.r).exp().max((-key.rbar).exp());
    let opts = QuadratureOptions { abs_tol: 1e-14, rel_tol: 1e-14, max_intervals: 6000 };
    integrate_real_line(f, center, scale, opts)
}

/// `⟨β|S[r]D[α]|n⟩` for real `r`, `α` and complex `β`, through the closed form.
pub fn coherent_overlap(n: usize, r: f64, alpha: f64, beta: C64) -> Result<C64> {
    // ⟨x|β⟩ = φ_0(x − √2β) e^{−Im β²} e^{i Re β Im β}
    let phase = C64::new(-beta.im * beta.im, -beta.re * beta.im).exp();
    Ok(phase * overlap_shifted(n, 0, r, 0.0, alpha, beta.conj())?)
}

/// Position wavefunction of the squeezed displaced vacuum in closed form.
pub fn psi_sq_disp(x: f64, r: f64, alpha: C64) -> C64 {
    let u = C64::new(x * r.exp(), 0.0) - alpha * SQRT_2;
    let norm = (PI * (-2.0 * r).exp()).powf(-0.25);
    let expo = -(u * u) * 0.5 - alpha.im * alpha.im - C64::new(0.0, alpha.re * alpha.im);
    expo.exp() * norm
}

/// Vacuum weight `⟨0|ψ⟩` of [`psi_sq_disp`].
pub fn vacuum_weight(r: f64, alpha: C64) -> C64 {
    let expo = -(alpha * alpha) / ((2.0 * r).exp() + 1.0) - C64::new(0.0, 1.0) * alpha.conj() * alpha.im;
    expo.exp() / r.cosh().sqrt()
}
