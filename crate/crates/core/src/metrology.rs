//! Small-shift sensitivity, the two-outcome estimation protocol, photon-number
//! ratio curves and the damping-constant error bound.
//!
//! For `δ = ε e^{iθ}` the overlap `O_δ = |⟨ψ|D[δ]|ψ⟩|²` falls as `1 − c ε²`
//! where `c` is the variance of `K = i(e^{iθ}a† − e^{−iθ}a)`. An estimator of
//! `s = ε²` from `R` repetitions then has variance `1/(R c)`.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockVector, TruncationPolicy};
use crate::phase_space::{displaced_overlap, monotone_window, WINDOW_SCAN_LIMIT};
use crate::states::{build_state, Sign, StateSpec};
use crate::table::Table;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub theta: f64,
    pub c: f64,
    /// `Δ²s = 1/(R c)`
    pub variance: f64,
    pub mean_n: f64,
    pub var_n: f64,
    #[serde(rename = "R")]
    pub repetitions: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DampingEstimate {
    pub kappa: f64,
    pub t: f64,
    /// `e^{−2κt}`
    pub eta: f64,
    pub delta_kappa: f64,
    pub mean_n: f64,
    pub var_n: f64,
}

/// `⟨a⟩` and `⟨a²⟩`.
fn ladder_moments(psi: &FockVector) -> (C64, C64) {
    let amps = psi.amps();
    let mut a1 = C64::new(0.0, 0.0);
    let mut a2 = C64::new(0.0, 0.0);
    for k in 1..amps.len() {
        a1 += amps[k - 1].conj() * amps[k] * (k as f64).sqrt();
        if k >= 2 {
            a2 += amps[k - 2].conj() * amps[k] * ((k * (k - 1)) as f64).sqrt();
        }
    }
    let norm = psi.norm_sqr();
    (a1 / norm, a2 / norm)
}

/// `c(θ) = Var K`, i.e. `−½ d²O_δ/dε²` at `ε = 0`.
pub fn overlap_curvature(psi: &FockVector, theta: f64) -> f64 {
    let (mean, _) = psi.number_moments();
    let (a1, a2) = ladder_moments(psi);
    let k1 = 2.0 * (C64::from_polar(1.0, -theta) * a1).im;
    let k2 = 2.0 * mean + 1.0 - 2.0 * (C64::from_polar(1.0, -2.0 * theta) * a2).re;
    k2 - k1 * k1
}

/// `−½ O''(0)` from central differences at steps `h` and `h/2`, combined by
/// one Richardson step.
pub fn finite_difference_curvature(psi: &FockVector, theta: f64, h: f64, policy: &TruncationPolicy) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!("step {h} must be positive")));
    }
    let dir = C64::from_polar(1.0, theta);
    let o0 = displaced_overlap(psi, C64::new(0.0, 0.0), policy)?;
    let curv = |step: f64| -> Result<f64> {
        let plus = displaced_overlap(psi, dir * step, policy)?;
        let minus = displaced_overlap(psi, -dir * step, policy)?;
        Ok(-0.5 * (plus - 2.0 * o0 + minus) / (step * step))
    };
    let coarse = curv(h)?;
    let fine = curv(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

pub fn variance_report(spec: &StateSpec, theta: f64, repetitions: u64, policy: &TruncationPolicy) -> Result<SensitivityReport> {
    let psi = build_state(spec, policy)?;
    report_for(&psi, theta, repetitions)
}

pub fn report_for(psi: &FockVector, theta: f64, repetitions: u64) -> Result<SensitivityReport> {
    if repetitions == 0 {
        return Err(Error::invalid("R must be at least 1"));
    }
    let c = overlap_curvature(psi, theta);
    let (mean_n, var_n) = psi.number_moments();
    Ok(SensitivityReport { theta, c, variance: 1.0 / (repetitions as f64 * c), mean_n, var_n, repetitions })
}

/// Reports for every spec, in order.
pub fn sensitivity_sweep(specs: &[StateSpec], theta: f64, repetitions: u64, policy: &TruncationPolicy) -> Result<Vec<SensitivityReport>> {
    specs.par_iter().map(|s| variance_report(s, theta, repetitions, policy)).collect()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("spearman needs two equally long samples of size ≥ 2"));
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid("spearman is undefined for a constant sample"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Abscissae where the piecewise-linear curve through `(xs, ys)` crosses `level`.
pub fn crossings(xs: &[f64], ys: &[f64], level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 1..xs.len().min(ys.len()) {
        let (a, b) = (ys[k - 1] - level, ys[k] - level);
        if a == 0.0 {
            out.push(xs[k - 1]);
        } else if a * b < 0.0 {
            out.push(xs[k - 1] + (xs[k] - xs[k - 1]) * a / (a - b));
        }
    }
    if let (Some(&x), Some(&y)) = (xs.last(), ys.last()) {
        if y == level && xs.len() > 1 {
            out.push(x);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub beta: f64,
    /// `Δ²s_ψ / Δ²s_KS = c_KS / c_ψ`
    pub variance_ratio: f64,
    /// `⟨n⟩_ψ / ⟨n⟩_KS`
    pub mean_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub rows: Vec<RatioRow>,
    pub variance_crossings: Vec<f64>,
    pub mean_crossings: Vec<f64>,
}

/// Ratios of `psi` against the compass state `(l, sign)` along a sweep of real `β`.
pub fn ratio_curves(psi: &StateSpec, l: i32, sign: Sign, betas: &[f64], theta: f64, policy: &TruncationPolicy) -> Result<RatioTable> {
    if betas.is_empty() {
        return Err(Error::invalid("the β sweep is empty"));
    }
    let probe = variance_report(psi, theta, 1, policy)?;
    let rows: Vec<RatioRow> = betas
        .par_iter()
        .map(|&beta| {
            let ks = variance_report(&StateSpec::Compass { beta: C64::new(beta, 0.0), l, sign }, theta, 1, policy)?;
            Ok(RatioRow { beta, variance_ratio: ks.c / probe.c, mean_ratio: probe.mean_n / ks.mean_n })
        })
        .collect::<Result<_>>()?;
    let bs: Vec<f64> = rows.iter().map(|r| r.beta).collect();
    let vr: Vec<f64> = rows.iter().map(|r| r.variance_ratio).collect();
    let mr: Vec<f64> = rows.iter().map(|r| r.mean_ratio).collect();
    Ok(RatioTable { variance_crossings: crossings(&bs, &vr, 1.0), mean_crossings: crossings(&bs, &mr, 1.0), rows })
}

/// One run of the two-outcome protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TlsEstimate {
    pub seed: u64,
    /// Estimated `s = |δ|²`.
    pub s_hat: f64,
    /// Number of `e` outcomes out of `R`.
    pub m: u64,
    /// `O_δ`, the `e` probability of each trial.
    pub p_e: f64,
}

/// A probe, a shift direction and the window `[0, δ₀)` on which `O_δ` decreases.
#[derive(Clone, Debug)]
pub struct TlsProtocol {
    psi: FockVector,
    theta: f64,
    window: f64,
    policy: TruncationPolicy,
}

impl TlsProtocol {
    pub fn new(psi: FockVector, theta: f64, policy: &TruncationPolicy) -> Result<Self> {
        let window = monotone_window(&psi, theta, policy)?.unwrap_or(WINDOW_SCAN_LIMIT);
        Ok(TlsProtocol { psi, theta, window, policy: *policy })
    }

    /// `δ₀`, or the scan limit when the overlap never turns.
    pub fn window(&self) -> f64 {
        self.window
    }

    /// `O` at `s = ε²` along the protocol direction.
    pub fn overlap_at(&self, s: f64) -> Result<f64> {
        displaced_overlap(&self.psi, C64::from_polar(s.max(0.0).sqrt(), self.theta), &self.policy)
    }

    fn check(&self, delta: f64) -> Result<()> {
        if !(delta > 0.0 && delta < self.window) {
            return Err(Error::OutsideMonotoneWindow { delta, window: self.window });
        }
        Ok(())
    }

    /// Solves `O(s) = p` on `[0, δ₀²]`, clamping outside the attainable range.
    pub fn invert(&self, p: f64) -> Result<f64> {
        let hi_s = self.window * self.window;
        if p >= 1.0 {
            return Ok(0.0);
        }
        if p <= self.overlap_at(hi_s)? {
            return Ok(hi_s);
        }
        let (mut lo, mut hi) = (0.0, hi_s);
        while hi - lo > 1e-10 * hi.max(1e-6) {
            let mid = 0.5 * (lo + hi);
            if self.overlap_at(mid)? > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Draws `m ~ Binomial(R, O_δ)` from a generator seeded with `seed` and
    /// inverts `m/R`.
    pub fn simulate(&self, delta: f64, repetitions: u64, seed: u64) -> Result<TlsEstimate> {
        self.check(delta)?;
        let p_e = self.overlap_at(delta * delta)?;
        self.simulate_at(p_e, repetitions, seed)
    }

    fn simulate_at(&self, p_e: f64, repetitions: u64, seed: u64) -> Result<TlsEstimate> {
        if repetitions == 0 {
            return Err(Error::invalid("R must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Binomial::new(repetitions, p_e.clamp(0.0, 1.0)).map_err(|e| Error::invalid(e.to_string()))?;
        let m = dist.sample(&mut rng);
        let s_hat = self.invert(m as f64 / repetitions as f64)?;
        Ok(TlsEstimate { seed, s_hat, m, p_e })
    }

    /// One estimate per seed, in seed order.
    pub fn monte_carlo(&self, delta: f64, repetitions: u64, seeds: &[u64]) -> Result<Vec<TlsEstimate>> {
        self.check(delta)?;
        let p_e = self.overlap_at(delta * delta)?;
        seeds.par_iter().map(|&seed| self.simulate_at(p_e, repetitions, seed)).collect()
    }

    /// `p(1 − p) / (R p'(s)²)` at `s = δ²`.
    pub fn delta_method_variance(&self, delta: f64, repetitions: u64) -> Result<f64> {
        self.check(delta)?;
        let s = delta * delta;
        let h = 1e-4 * s;
        let p = self.overlap_at(s)?;
        let slope = (self.overlap_at(s + h)? - self.overlap_at(s - h)?) / (2.0 * h);
        Ok(p * (1.0 - p) / (repetitions as f64 * slope * slope))
    }
}

pub fn simulate_tls_protocol(psi: &FockVector, delta: C64, repetitions: u64, seed: u64, policy: &TruncationPolicy) -> Result<TlsEstimate> {
    TlsProtocol::new(psi.clone(), delta.arg(), policy)?.simulate(delta.norm(), repetitions, seed)
}

/// Sample mean and unbiased variance.
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var)
}

/// `Δκ = √(Δ²N/(4t²⟨N⟩²) + (η⁻¹ − 1)/(4t²⟨N⟩))` for given input moments.
pub fn damping_error_from_moments(mean_n: f64, var_n: f64, kappa: f64, t: f64) -> Result<DampingEstimate> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!("kappa = {kappa} must be finite and nonnegative")));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("t = {t} must be finite and positive")));
    }
    if !(mean_n > 0.0) {
        return Err(Error::ZeroEnergyProbe);
    }
    let eta = (-2.0 * kappa * t).exp();
    let four_t2 = 4.0 * t * t;
    let delta_kappa = (var_n / (four_t2 * mean_n * mean_n) + (1.0 / eta - 1.0) / (four_t2 * mean_n)).sqrt();
    Ok(DampingEstimate { kappa, t, eta, delta_kappa, mean_n, var_n })
}

pub fn damping_error(spec: &StateSpec, kappa: f64, t: f64, policy: &TruncationPolicy) -> Result<DampingEstimate> {
    let (mean, var) = build_state(spec, policy)?.number_moments();
    damping_error_from_moments(mean, var, kappa, t)
}

/// `Δ²N/⟨N⟩²` and `1/⟨N⟩` for the compass states `(0, −)` and `(1, +)`.
pub fn fig6_curves(betas: &[f64], policy: &TruncationPolicy) -> Result<Table> {
    if betas.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::invalid("β must be positive"));
    }
    let rows: Vec<[f64; 5]> = betas
        .par_iter()
        .map(|&beta| {
            let m = |l: i32, sign: Sign| -> Result<(f64, f64)> {
                let (mean, var) = build_state(&StateSpec::Compass { beta: C64::new(beta, 0.0), l, sign }, policy)?.number_moments();
                Ok((var / (mean * mean), 1.0 / mean))
            };
            let (a, b) = m(0, Sign::Minus)?;
            let (c, d) = m(1, Sign::Plus)?;
            Ok([beta, a, b, c, d])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["beta", "ks0_minus_var_over_mean2", "ks0_minus_inv_mean", "ks1_plus_var_over_mean2", "ks1_plus_inv_mean"]);
    for r in rows {
        table.push(r.iter().map(|&v| v.into()).collect());
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pol() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    fn ks(beta: f64, l: i32, sign: Sign) -> StateSpec {
        StateSpec::Compass { beta: C64::new(beta, 0.0), l, sign }
    }

    #[test]
    fn coherent_baseline() {
        for (a, th) in [(C64::new(0.0, 0.0), 0.0), (C64::new(1.3, -0.4), 0.7), (C64::new(-2.0, 1.0), 2.1)] {
            let psi = build_state(&StateSpec::Coherent { alpha: a }, &pol()).unwrap();
            assert!((overlap_curvature(&psi, th) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn number_states_give_two_n_plus_one() {
        for n in 0..6 {
            let psi = FockVector::basis(n, n + 1).unwrap();
            assert!((overlap_curvature(&psi, 0.4) - (2 * n + 1) as f64).abs() < 1e-12);
            let fd = finite_difference_curvature(&psi, 0.4, 1e-3, &pol()).unwrap();
            assert!((fd - (2 * n + 1) as f64).abs() < 1e-6 * (2 * n + 1) as f64);
        }
    }

    #[test]
    fn curvature_matches_finite_differences() {
        let p = pol();
        let zoo = [
            ks(2.0, 0, Sign::Minus),
            ks(1.41, 2, Sign::Plus),
            StateSpec::Ssdns { r: 0.45, alpha: 2.0, n: 1 },
            StateSpec::Ssns { r: 0.3, n: 2 },
            StateSpec::SqueezedDisplaced { r: 0.3, alpha: C64::new(0.5, 0.8), n: 1 },
        ];
        for spec in zoo {
            let psi = build_state(&spec, &p).unwrap();
            for th in [0.0, PI / 4.0, PI / 2.0] {
                let a = overlap_curvature(&psi, th);
                let b = finite_difference_curvature(&psi, th, 1e-3, &p).unwrap();
                assert!(((a - b) / a).abs() < 1e-6, "{spec:?} θ={th}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn fock_one_report() {
        let r = variance_report(&StateSpec::Fock { n: 1 }, 1.1, 1, &pol()).unwrap();
        assert!((r.variance - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.mean_n - 1.0).abs() < 1e-12 && r.var_n.abs() < 1e-12);
        assert!(variance_report(&StateSpec::Fock { n: 1 }, 0.0, 0, &pol()).is_err());
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 25.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.948_683_298_050_513_8).abs() < 1e-12);
    }

    #[test]
    fn crossing_interpolation() {
        let c = crossings(&[0.0, 1.0, 2.0, 3.0], &[0.0, 2.0, 0.0, 2.0], 1.0);
        assert_eq!(c, vec![0.5, 1.5, 2.5]);
    }

    #[test]
    fn self_ratio_is_one() {
        let betas = [0.8, 1.2, 1.6];
        for (i, &b) in betas.iter().enumerate() {
            let t = ratio_curves(&ks(b, 0, Sign::Minus), 0, Sign::Minus, &betas, 0.0, &pol()).unwrap();
            assert!((t.rows[i].variance_ratio - 1.0).abs() < 1e-12);
            assert!((t.rows[i].mean_ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn damping_formula() {
        let p = pol();
        let e = damping_error(&StateSpec::Fock { n: 1 }, 0.0, 1.0, &p).unwrap();
        assert_eq!(e.delta_kappa, 0.0);
        let (kappa, t, n) = (0.2, 0.7, 3usize);
        let e = damping_error(&StateSpec::Fock { n }, kappa, t, &p).unwrap();
        assert!((e.eta - (-2.0 * kappa * t).exp()).abs() < 1e-12);
        let expect = ((1.0 / e.eta - 1.0) / (4.0 * t * t * n as f64)).sqrt();
        assert!((e.delta_kappa - expect).abs() < 1e-14);
        assert_eq!(damping_error(&StateSpec::Fock { n: 0 }, 0.1, 1.0, &p), Err(Error::ZeroEnergyProbe));
        assert!(damping_error(&StateSpec::Fock { n: 1 }, -0.1, 1.0, &p).is_err());
    }

    #[test]
    fn damping_falls_with_energy_at_fixed_relative_variance() {
        let mut last = f64::INFINITY;
        for mean in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let e = damping_error_from_moments(mean, 0.3 * mean * mean, 0.1, 1.0).unwrap();
            assert!(e.delta_kappa <= last);
            last = e.delta_kappa;
        }
    }

    #[test]
    fn tls_reproducible_and_windowed() {
        let p = pol();
        let psi = build_state(&ks(2.0, 0, Sign::Minus), &p).unwrap();
        let proto = TlsProtocol::new(psi.clone(), 0.0, &p).unwrap();
        assert!(proto.window() > 0.5 && proto.window() < 1.0);
        let a = proto.simulate(0.05, 100_000, 7).unwrap();
        let b = proto.simulate(0.05, 100_000, 7).unwrap();
        assert_eq!(a, b);
        assert!(matches!(proto.simulate(proto.window() + 0.01, 10, 1), Err(Error::OutsideMonotoneWindow { .. })));
        assert_eq!(proto.invert(1.0).unwrap(), 0.0);
        let direct = simulate_tls_protocol(&psi, C64::new(0.05, 0.0), 100_000, 7, &p).unwrap();
        assert_eq!(direct, a);
    }

    #[test]
    fn tls_inversion_recovers_shift() {
        let p = pol();
        let proto = TlsProtocol::new(build_state(&ks(2.0, 0, Sign::Minus), &p).unwrap(), 0.0, &p).unwrap();
        let s = 0.05f64 * 0.05;
        let back = proto.invert(proto.overlap_at(s).unwrap()).unwrap();
        assert!((back - s).abs() < 1e-9 * s.max(1e-6) * 10.0);
    }

    #[test]
    fn compass_small_beta_limit() {
        let t = fig6_curves(&[0.05], &pol()).unwrap();
        let row: Vec<f64> = t.columns.iter().map(|c| t.numbers(c)[0]).collect();
        assert!(row[1] < 1e-3 && (row[2] - 1.0).abs() < 1e-2);
        assert!(row[3] < 1e-3 && (row[4] - 1.0).abs() < 1e-2);
    }
}
