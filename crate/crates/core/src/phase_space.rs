//! Wigner functions on rectangular grids and displaced-state overlaps.
//!
//! Quadratures are `x = (a + a†)/√2`, `p = (a − a†)/(√2 i)`, and
//! `W(x, p) = (1/π) ∫ dy ψ(x − y) ψ*(x + y) e^{2ipy}`. In the number basis this
//! is the displaced parity `(1/π) ⟨ψ|D[2z] Π|ψ⟩` with `z = (x + ip)/√2`, summed
//! over the diagonals of `ψ ψ*` with normalized Laguerre recurrences for the
//! matrix elements of `D[2z]`.

use std::f64::consts::{FRAC_1_PI, PI, SQRT_2};
use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{displace_into, displace_vector, displaced_len, laguerre_diagonal, FockVector, TruncationPolicy};
use crate::hermite::hermite_function;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl Default for PhaseSpaceGrid {
    fn default() -> Self {
        PhaseSpaceGrid::square(6.0, 256)
    }
}

impl PhaseSpaceGrid {
    /// `[−half, half]²` with `points` nodes per axis.
    pub fn square(half: f64, points: usize) -> Self {
        PhaseSpaceGrid { x_min: -half, x_max: half, p_min: -half, p_max: half, nx: points, np: points }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.np < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 points per axis, got {}×{}", self.nx, self.np)));
        }
        let ok = |a: f64, b: f64| a.is_finite() && b.is_finite() && a < b;
        if !ok(self.x_min, self.x_max) || !ok(self.p_min, self.p_max) {
            return Err(Error::invalid("grid ranges must be finite and nondegenerate"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + self.dx() * i as f64
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + self.dp() * j as f64
    }

    /// The same grid translated by `(dx, dp)`.
    pub fn shifted(&self, dx: f64, dp: f64) -> Self {
        PhaseSpaceGrid { x_min: self.x_min + dx, x_max: self.x_max + dx, p_min: self.p_min + dp, p_max: self.p_max + dp, ..*self }
    }
}

/// Trapezoid weight of node `i` out of `n`.
fn trap(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Wigner values on a grid, row-major: `values[i * np + j]` is `W(x_i, p_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerField {
    pub grid: PhaseSpaceGrid,
    pub values: Vec<f64>,
}

impl WignerField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.np + j]
    }

    fn weighted_sum(&self, f: impl Fn(usize, usize, f64) -> f64) -> f64 {
        let g = &self.grid;
        let mut total = 0.0;
        for i in 0..g.nx {
            let wi = trap(i, g.nx);
            for j in 0..g.np {
                total += wi * trap(j, g.np) * f(i, j, self.at(i, j));
            }
        }
        total * g.dx() * g.dp()
    }

    /// `∫ W dx dp`.
    pub fn integral(&self) -> f64 {
        self.weighted_sum(|_, _, w| w)
    }

    /// `2π ∫ W² dx dp`.
    pub fn purity(&self) -> f64 {
        2.0 * PI * self.weighted_sum(|_, _, w| w * w)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Writes `x,p,W` rows.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "x,p,W")?;
        for i in 0..self.grid.nx {
            let x = self.grid.x(i);
            for j in 0..self.grid.np {
                writeln!(out, "{x:.10e},{:.10e},{:.15e}", self.grid.p(j), self.at(i, j))?;
            }
        }
        Ok(())
    }

    /// Grid metadata plus the normalization and purity checks.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "grid": self.grid,
            "layout": "rows x,p,W with p varying fastest",
            "integral": self.integral(),
            "purity": self.purity(),
            "min": self.min(),
            "max": self.max(),
        })
    }
}

/// `(−1)^m ψ*_{m+d} ψ_m` for each diagonal `d`.
struct Diagonals(Vec<Vec<C64>>);

impl Diagonals {
    fn new(psi: &FockVector) -> Self {
        let amps = &psi.amps()[..psi.support_len(1e-32)];
        let s = amps.len();
        Diagonals(
            (0..s)
                .map(|d| (0..s - d).map(|m| amps[m + d].conj() * amps[m] * if m % 2 == 0 { 1.0 } else { -1.0 }).collect())
                .collect(),
        )
    }

    /// `W` at `z = (x + ip)/√2`. With `t = |2z|²` the matrix element
    /// `⟨m+d|D[2z]|m⟩ = e^{idθ} √(m!/(m+d)!) t^{d/2} e^{−t/2} L_m^{(d)}(t)` is
    /// advanced in `m` through its normalized three-term recurrence.
    fn eval(&self, x: f64, p: f64) -> f64 {
        let t = 2.0 * (x * x + p * p);
        let rot = C64::new(x, p) / (x * x + p * p).sqrt().max(f64::MIN_POSITIVE);
        let mut phase = C64::new(1.0, 0.0);
        let mut total = 0.0;
        for (d, diag) in self.0.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            laguerre_diagonal(t, d, diag.len(), |m, f| acc += diag[m] * f);
            let term = (phase * acc).re;
            total += if d == 0 { term } else { 2.0 * term };
            phase *= rot;
        }
        total * FRAC_1_PI
    }
}

/// `W(x, p)` at one point.
pub fn wigner_point(psi: &FockVector, x: f64, p: f64) -> f64 {
    Diagonals::new(psi).eval(x, p)
}

/// `W` as `(1/π) Σ_k (−1)^k |⟨k|D[−z]ψ⟩|²` from the displaced vector itself.
pub fn wigner_point_displaced(psi: &FockVector, x: f64, p: f64) -> f64 {
    let support = psi.support_len(1e-32);
    let z = C64::new(x, p) / SQRT_2;
    let shifted = displace_into(&psi.amps()[..support], -z, displaced_len(support, z.norm()));
    let parity: f64 = shifted.iter().enumerate().map(|(k, a)| if k % 2 == 0 { a.norm_sqr() } else { -a.norm_sqr() }).sum();
    parity * FRAC_1_PI
}

/// Wigner function of `psi` on `grid`, parallel over rows.
pub fn wigner(psi: &FockVector, grid: &PhaseSpaceGrid) -> Result<WignerField> {
    grid.validate()?;
    let diags = Diagonals::new(psi);
    let values: Vec<f64> = (0..grid.nx)
        .into_par_iter()
        .flat_map_iter(|i| {
            let x = grid.x(i);
            let diags = &diags;
            (0..grid.np).map(move |j| diags.eval(x, grid.p(j)))
        })
        .collect();
    Ok(WignerField { grid: *grid, values })
}

/// `∫ W dp` for each `x` node (trapezoid rule).
pub fn marginal_x(field: &WignerField) -> Vec<f64> {
    let g = &field.grid;
    (0..g.nx).map(|i| (0..g.np).map(|j| trap(j, g.np) * field.at(i, j)).sum::<f64>() * g.dp()).collect()
}

/// Position wavefunction `⟨x|ψ⟩ = Σ_k c_k φ_k(x)`.
pub fn wavefunction(psi: &FockVector, x: f64) -> C64 {
    // normalized Hermite functions by their stable recurrence
    let mut prev = 0.0;
    let mut cur = hermite_function(0, x);
    let mut total = C64::new(0.0, 0.0);
    for (k, a) in psi.amps().iter().enumerate() {
        total += a * cur;
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    total
}

/// `⟨ψ|D[δ]|ψ⟩`.
pub fn displaced_amplitude(psi: &FockVector, delta: C64, policy: &TruncationPolicy) -> Result<C64> {
    Ok(psi.inner(&displace_vector(psi, delta, policy)?))
}

/// `O_δ = |⟨ψ|D[δ]|ψ⟩|²`.
pub fn displaced_overlap(psi: &FockVector, delta: C64, policy: &TruncationPolicy) -> Result<f64> {
    Ok(displaced_amplitude(psi, delta, policy)?.norm_sqr())
}

/// `2π ∫ W(x, p) W(x + δx, p + δp) dx dp` with `(δx, δp) = √2 (Re δ, Im δ)`.
pub fn overlap_via_wigner(psi: &FockVector, delta: C64, grid: &PhaseSpaceGrid) -> Result<f64> {
    let base = wigner(psi, grid)?;
    let moved = wigner(psi, &grid.shifted(SQRT_2 * delta.re, SQRT_2 * delta.im))?;
    Ok(2.0 * PI * base.weighted_sum(|i, j, w| w * moved.at(i, j)))
}

/// `2π ∫ W_a W_b dx dp` on a shared grid.
pub fn wigner_overlap(a: &WignerField, b: &WignerField) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::invalid("Wigner fields live on different grids"));
    }
    Ok(2.0 * PI * a.weighted_sum(|i, j, w| w * b.at(i, j)))
}

/// Largest `|δ|` scanned by [`monotone_window`].
pub const WINDOW_SCAN_LIMIT: f64 = 6.0;

/// End of the monotone window of `O_δ` along `δ = ε e^{iθ}`, `ε > 0`: the
/// first zero or, when the overlap only touches zero, the first local minimum.
/// Errors when `O_δ` keeps falling out to [`WINDOW_SCAN_LIMIT`].
pub fn first_zero(psi: &FockVector, theta: f64, policy: &TruncationPolicy) -> Result<f64> {
    monotone_window(psi, theta, policy)?
        .ok_or_else(|| Error::invalid(format!("the displaced overlap has no minimum within |δ| ≤ {WINDOW_SCAN_LIMIT}")))
}

/// As [`first_zero`], with `None` for an overlap that decreases over the whole scan.
///
/// For states of definite parity `⟨ψ|D[δ]|ψ⟩` is real, so a sign change is
/// refined by bisection; a minimum is refined by golden-section search.
pub fn monotone_window(psi: &FockVector, theta: f64, policy: &TruncationPolicy) -> Result<Option<f64>> {
    let (mean, _) = psi.number_moments();
    let step = 0.02 / (mean + 1.0).sqrt();
    let limit = WINDOW_SCAN_LIMIT;
    let dir = C64::from_polar(1.0, theta);
    let amp = |eps: f64| displaced_amplitude(psi, dir * eps, policy);
    let (even, odd) = psi.amps().iter().enumerate().fold((0.0, 0.0), |(e, o), (k, a)| {
        if k % 2 == 0 { (e + a.norm_sqr(), o) } else { (e, o + a.norm_sqr()) }
    });
    let definite = even.min(odd) < 1e-24 * (even + odd);
    let mut prev_eps = 0.0;
    let mut prev = amp(0.0)?;
    let mut eps = step;
    while eps <= limit {
        let cur = amp(eps)?;
        if definite && prev.re.signum() != cur.re.signum() {
            let (mut lo, mut hi) = (prev_eps, eps);
            let lo_sign = prev.re.signum();
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                if amp(mid)?.re.signum() == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        if cur.norm_sqr() > prev.norm_sqr() && prev_eps > 0.0 {
            let (mut a, mut b) = ((prev_eps - step).max(0.0), eps);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            while b - a > 1e-10 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if amp(c)?.norm_sqr() < amp(d)?.norm_sqr() {
                    b = d;
                } else {
                    a = c;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        prev_eps = eps;
        prev = cur;
        eps += step;
    }
    Ok(None)
}
