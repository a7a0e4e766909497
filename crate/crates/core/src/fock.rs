//! Truncated Fock-space vectors and operators.
//!
//! Unitaries are built by exponentiating the truncated generator on a padded
//! space of `dim + guard` levels and cropping back to `dim`; the truncation
//! error of the matrix exponential then lives in the discarded guard band.
//! Where only the action on a vector is needed, [`displace_vector`] applies
//! `D[α]` from closed-form matrix elements with no truncation error at all.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::ln_factorial;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// How many Fock levels to keep and how much tail mass to tolerate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Largest acceptable probability in the top `guard` levels.
    pub target_tail: f64,
    /// Padding levels used when exponentiating generators.
    pub guard: usize,
    /// Hard cap on any padded dimension.
    pub max_dim: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { target_tail: 1e-12, guard: 20, max_dim: 400 }
    }
}

impl TruncationPolicy {
    pub fn new(target_tail: f64, guard: usize, max_dim: usize) -> Result<Self> {
        if !(target_tail > 0.0 && target_tail < 1.0) {
            return Err(Error::invalid(format!("target_tail {target_tail} must lie in (0, 1)")));
        }
        if max_dim < 2 || guard >= max_dim {
            return Err(Error::invalid(format!("guard {guard} and max_dim {max_dim} are inconsistent")));
        }
        Ok(TruncationPolicy { target_tail, guard, max_dim })
    }

    /// Padded size used to exponentiate an operator cropped to `dim`.
    pub fn padded(&self, dim: usize) -> Result<usize> {
        let padded = dim + self.guard;
        if padded > self.max_dim {
            return Err(Error::TruncationOverflow { needed: padded, max_dim: self.max_dim });
        }
        Ok(padded)
    }

    /// Starting dimension for a state with roughly `mean` photons whose number
    /// distribution is stretched by `spread` (e^{2|r|} for squeezed states).
    pub fn initial_dim(&self, mean: f64, spread: f64) -> usize {
        let mean = mean.max(0.0);
        let width = (mean + 1.0).sqrt() * spread.max(1.0);
        (mean + 8.0 * width).ceil() as usize + self.guard + 8
    }

    /// Next dimension to try after `dim` failed the tail test.
    pub fn grow(&self, dim: usize) -> Result<usize> {
        let next = dim + dim / 2 + 1;
        if next + self.guard > self.max_dim {
            if dim + self.guard < self.max_dim {
                return Ok(self.max_dim - self.guard);
            }
            return Err(Error::TruncationOverflow { needed: next + self.guard, max_dim: self.max_dim });
        }
        Ok(next)
    }
}

/// State vector in the number basis; `amps[k]` is the amplitude of `|k⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockVector {
    amps: Vec<C64>,
}

impl FockVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::invalid("a Fock vector needs at least one level"));
        }
        Ok(FockVector { amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    /// Number state `|n⟩` in `dim` levels.
    pub fn basis(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::DimensionMismatch { left: n + 1, right: dim });
        }
        let mut amps = vec![ZERO; dim];
        amps[n] = ONE;
        Ok(FockVector { amps })
    }

    /// Coherent state `|α⟩` from its Poisson series, cut at `dim` levels.
    pub fn coherent(alpha: C64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim must be positive"));
        }
        let mut amps = Vec::with_capacity(dim);
        let mut a = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        amps.push(a);
        for k in 1..dim {
            a = a * alpha / (k as f64).sqrt();
            amps.push(a);
        }
        Ok(FockVector { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(FockVector { amps: self.amps.iter().map(|a| a / n).collect() })
    }

    /// Probability held in the top `guard` levels.
    pub fn tail_mass(&self, guard: usize) -> f64 {
        let start = self.dim().saturating_sub(guard);
        self.amps[start..].iter().map(|a| a.norm_sqr()).sum()
    }

    /// Index one past the last amplitude with |a|² above `threshold`.
    pub fn support_len(&self, threshold: f64) -> usize {
        self.amps.iter().rposition(|a| a.norm_sqr() > threshold).map_or(1, |k| k + 1)
    }

    /// Zero-pads or crops to `dim` levels.
    pub fn resized(&self, dim: usize) -> Self {
        let mut amps = self.amps.clone();
        amps.resize(dim.max(1), ZERO);
        FockVector { amps }
    }

    /// `⟨self|other⟩`; the shorter vector is treated as zero-padded.
    pub fn inner(&self, other: &FockVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        FockVector { amps: self.amps.iter().map(|a| a * s).collect() }
    }

    /// Elementwise sum, padding to the longer length.
    pub fn add(&self, other: &FockVector) -> Self {
        let dim = self.dim().max(other.dim());
        let mut out = self.resized(dim);
        for (o, b) in out.amps.iter_mut().zip(&other.amps) {
            *o += b;
        }
        out
    }

    /// `(mean, variance)` of the photon number, normalizing on the fly.
    pub fn number_moments(&self) -> (f64, f64) {
        let total = self.norm_sqr();
        let (mut m1, mut m2) = (0.0, 0.0);
        for (k, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr() / total;
            let k = k as f64;
            m1 += k * p;
            m2 += k * k * p;
        }
        (m1, (m2 - m1 * m1).max(0.0))
    }

    /// `a|ψ⟩`, one level shorter.
    pub fn lowered(&self) -> Self {
        let amps = if self.dim() == 1 {
            vec![ZERO]
        } else {
            (1..self.dim()).map(|k| self.amps[k] * (k as f64).sqrt()).collect()
        };
        FockVector { amps }
    }

    /// `a†|ψ⟩`, one level longer so nothing is lost.
    pub fn raised(&self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() + 1);
        amps.push(ZERO);
        for (k, a) in self.amps.iter().enumerate() {
            amps.push(a * ((k + 1) as f64).sqrt());
        }
        FockVector { amps }
    }

    /// Multiplies `|k⟩` by `e^{-iθk}` (phase-space rotation by θ).
    pub fn rotated(&self, theta: f64) -> Self {
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(k, a)| a * C64::from_polar(1.0, -theta * k as f64))
            .collect();
        FockVector { amps }
    }
}

/// Dense complex matrix on a truncated Fock space (or a product with a qubit).
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<C64>,
}

impl OperatorMatrix {
    pub fn from_matrix(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch { left: entries.nrows(), right: entries.ncols() });
        }
        Ok(OperatorMatrix { entries })
    }

    pub fn identity(dim: usize) -> Self {
        OperatorMatrix { entries: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix { entries: DMatrix::zeros(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix { entries: self.entries.adjoint() }
    }

    pub fn mul(&self, other: &OperatorMatrix) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(OperatorMatrix { entries: &self.entries * &other.entries })
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(OperatorMatrix { entries: &self.entries + &other.entries })
    }

    pub fn scaled(&self, s: C64) -> Self {
        OperatorMatrix { entries: &self.entries * s }
    }

    /// Top-left `dim × dim` block.
    pub fn cropped(&self, dim: usize) -> Self {
        let dim = dim.min(self.dim());
        OperatorMatrix { entries: self.entries.view((0, 0), (dim, dim)).into_owned() }
    }

    pub fn apply(&self, psi: &FockVector) -> Result<FockVector> {
        check_dims(self.dim(), psi.dim())?;
        let v = nalgebra::DVector::from_column_slice(psi.amps());
        let out = &self.entries * v;
        Ok(FockVector { amps: out.iter().copied().collect() })
    }

    /// Largest entry of `U†U − I` restricted to the first `inner` levels.
    pub fn unitarity_defect(&self, inner: usize) -> f64 {
        let inner = inner.min(self.dim());
        let prod = self.entries.adjoint() * &self.entries;
        let mut worst: f64 = 0.0;
        for i in 0..inner {
            for j in 0..inner {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((prod[(i, j)] - target).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        self.entries.iter().zip(other.entries.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max |H − H†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &OperatorMatrix) -> Self {
        OperatorMatrix { entries: self.entries.kronecker(&other.entries) }
    }

    pub fn exp(&self) -> Self {
        OperatorMatrix { entries: self.entries.exp() }
    }
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

/// Lowering operator: `entries[k-1][k] = √k`.
pub fn annihilation(dim: usize) -> OperatorMatrix {
    let mut m = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        m[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    OperatorMatrix { entries: m }
}

pub fn creation(dim: usize) -> OperatorMatrix {
    annihilation(dim).adjoint()
}

pub fn number(dim: usize) -> OperatorMatrix {
    let mut m = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        m[(k, k)] = C64::new(k as f64, 0.0);
    }
    OperatorMatrix { entries: m }
}

/// Photon-number parity `(-1)^{a†a}`.
pub fn parity(dim: usize) -> OperatorMatrix {
    let mut m = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        m[(k, k)] = C64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    OperatorMatrix { entries: m }
}

/// `D[α] = exp(α a† − α* a)` on `dim` levels.
pub fn displacement(alpha: C64, dim: usize, policy: &TruncationPolicy) -> Result<OperatorMatrix> {
    converged_exp(dim, policy, |size| {
        let a = annihilation(size).into_matrix();
        a.adjoint() * alpha - a * alpha.conj()
    })
}

/// `S[ξ] = exp((ξ* a² − ξ a†²)/2)` on `dim` levels. For real `ξ = r > 0` the
/// x-quadrature wavefunction contracts, `ψ(x) → √(e^r) ψ(e^r x)`.
pub fn squeeze(xi: C64, dim: usize, policy: &TruncationPolicy) -> Result<OperatorMatrix> {
    converged_exp(dim, policy, |size| {
        let a = annihilation(size).into_matrix();
        let a2 = &a * &a;
        (&a2 * xi.conj() - a2.adjoint() * xi) * C64::new(0.5, 0.0)
    })
}

/// Exponentiates a generator on a padded space and crops to `dim`, growing the
/// padding until the leading `dim − guard` block stops changing. At `max_dim`
/// the last result is returned as is.
fn converged_exp(dim: usize, policy: &TruncationPolicy, generator: impl Fn(usize) -> DMatrix<C64>) -> Result<OperatorMatrix> {
    const SETTLED: f64 = 1e-13;
    let mut size = policy.padded(dim)?;
    let inner = dim.saturating_sub(policy.guard).max(1).min(dim);
    let mut current = OperatorMatrix { entries: generator(size).exp() }.cropped(dim);
    loop {
        let next = (size + size / 2).min(policy.max_dim);
        if next == size {
            return Ok(current);
        }
        let refined = OperatorMatrix { entries: generator(next).exp() }.cropped(dim);
        let moved = refined.cropped(inner).max_abs_diff(&current.cropped(inner));
        if moved < SETTLED {
            return Ok(refined);
        }
        size = next;
        current = refined;
    }
}

/// `⟨ψ|op|ψ⟩`.
pub fn expectation(op: &OperatorMatrix, psi: &FockVector) -> Result<C64> {
    let out = op.apply(psi)?;
    Ok(psi.inner(&out))
}

/// Applies `D[α]` to `psi` exactly, growing the output until it holds the full norm.
///
/// Entries come from closed-form matrix elements, so each computed amplitude
/// is exact regardless of the output length.
pub fn displace_vector(psi: &FockVector, alpha: C64, policy: &TruncationPolicy) -> Result<FockVector> {
    let support = psi.support_len(1e-32);
    let mut out_dim = displaced_len(support, alpha.norm());
    let input_norm = psi.norm_sqr();
    loop {
        if out_dim > policy.max_dim {
            return Err(Error::TruncationOverflow { needed: out_dim, max_dim: policy.max_dim });
        }
        let out = displace_into(&psi.amps[..support], alpha, out_dim);
        let kept: f64 = out.iter().map(|a| a.norm_sqr()).sum();
        if (input_norm - kept).abs() <= policy.target_tail * input_norm.max(1.0) {
            return Ok(FockVector { amps: out });
        }
        if out_dim == policy.max_dim {
            return Err(Error::TruncationOverflow { needed: out_dim + out_dim / 2, max_dim: policy.max_dim });
        }
        out_dim = (out_dim + out_dim / 2).min(policy.max_dim);
    }
}

/// Output length heuristic for displacing a state supported on `support` levels.
pub(crate) fn displaced_len(support: usize, radius: f64) -> usize {
    let reach = (support as f64).sqrt() + radius;
    (reach * reach + 7.0 * reach + 20.0).ceil() as usize
}

/// Visits `√(n!/(n+d)!) t^{d/2} e^{−t/2} L_n^{(d)}(t)` for `n < len`, which is
/// `|⟨n+d|D[α]|n⟩|` up to sign when `t = |α|²`. The normalized three-term
/// recurrence keeps every value of order one.
pub(crate) fn laguerre_diagonal(t: f64, d: usize, len: usize, mut visit: impl FnMut(usize, f64)) {
    let df = d as f64;
    let mut prev = 0.0;
    let mut cur = if t == 0.0 {
        if d == 0 { 1.0 } else { 0.0 }
    } else {
        (0.5 * df * t.ln() - 0.5 * t - 0.5 * ln_factorial(d)).exp()
    };
    for n in 0..len {
        visit(n, cur);
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + df - t) * cur - (nf * (nf + df)).sqrt() * prev) / ((nf + 1.0) * (nf + 1.0 + df)).sqrt();
        prev = cur;
        cur = next;
    }
}

/// `out_dim` entries of `D[α] psi` from the matrix elements
/// `⟨n+d|D[α]|n⟩ = e^{idθ} f_n^{(d)}` and `⟨n|D[α]|n+d⟩ = (−1)^d e^{−idθ} f_n^{(d)}`.
pub(crate) fn displace_into(psi: &[C64], alpha: C64, out_dim: usize) -> Vec<C64> {
    let t = alpha.norm_sqr();
    let rot = if t == 0.0 { C64::new(1.0, 0.0) } else { alpha / alpha.norm() };
    let mut out = vec![ZERO; out_dim];
    let mut phase = C64::new(1.0, 0.0);
    for d in 0..out_dim.max(psi.len()) {
        if d < out_dim {
            let len = psi.len().min(out_dim - d);
            laguerre_diagonal(t, d, len, |n, f| out[n + d] += phase * f * psi[n]);
        }
        if d > 0 && d < psi.len() {
            let back = if d % 2 == 0 { phase.conj() } else { -phase.conj() };
            let len = out_dim.min(psi.len() - d);
            laguerre_diagonal(t, d, len, |n, f| out[n] += back * f * psi[n + d]);
        }
        phase *= rot;
    }
    out
}

/// Applies `S[ξ]` to `psi` by Taylor-stepping the truncated generator on a
/// padded vector. The padding grows until the leading amplitudes settle and
/// the band near the cut holds less than `target_tail` of the norm.
pub fn squeeze_vector(psi: &FockVector, xi: C64, policy: &TruncationPolicy) -> Result<FockVector> {
    let support = psi.support_len(1e-32);
    if xi.norm() == 0.0 {
        return Ok(psi.resized(support.max(1)));
    }
    let r = xi.norm();
    let decay = -r.tanh().ln();
    let mut size = ((support as f64 + 1.0) * (2.0 * r).exp() + 36.0 / decay).ceil() as usize + policy.guard;
    size = size.min(policy.max_dim);
    let mut current = squeeze_padded(&psi.amps[..support], xi, size);
    loop {
        let next = (size + size / 2).min(policy.max_dim);
        let refined = if next == size { current.clone() } else { squeeze_padded(&psi.amps[..support], xi, next) };
        let keep = size - policy.guard.min(size - 1);
        let moved = current[..keep].iter().zip(&refined).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let beyond: f64 = refined[keep..].iter().map(|a| a.norm_sqr()).sum();
        if moved < 1e-13 && beyond <= policy.target_tail * psi.norm_sqr().max(1.0) {
            return Ok(FockVector { amps: refined[..keep].to_vec() });
        }
        if next == size {
            return Err(Error::TruncationOverflow { needed: size + size / 2, max_dim: policy.max_dim });
        }
        size = next;
        current = refined;
    }
}

fn squeeze_padded(psi: &[C64], xi: C64, size: usize) -> Vec<C64> {
    let mut v = vec![ZERO; size];
    v[..psi.len()].copy_from_slice(psi);
    let steps = (xi.norm() * (size as f64 + 2.0)).ceil().max(1.0);
    let h = 1.0 / steps;
    let up: Vec<f64> = (0..size).map(|k| (((k + 1) * (k + 2)) as f64).sqrt()).collect();
    let down: Vec<f64> = (0..size).map(|k| ((k * k.saturating_sub(1)) as f64).sqrt()).collect();
    let (c_lo, c_hi) = (xi.conj() * (0.5 * h), xi * (0.5 * h));
    // h·(ξ* a² − ξ a†²)/2 applied to `src`
    let gen = |src: &[C64], dst: &mut [C64]| {
        for k in 0..size {
            let mut acc = ZERO;
            if k + 2 < size {
                acc += c_lo * up[k] * src[k + 2];
            }
            if k >= 2 {
                acc -= c_hi * down[k] * src[k - 2];
            }
            dst[k] = acc;
        }
    };
    let mut term = vec![ZERO; size];
    let mut scratch = vec![ZERO; size];
    for _ in 0..steps as usize {
        term.copy_from_slice(&v);
        let mut acc = v.clone();
        for j in 1..60 {
            gen(&term, &mut scratch);
            let inv = 1.0 / j as f64;
            let mut mag = 0.0;
            for (t, s) in term.iter_mut().zip(&scratch) {
                *t = s * inv;
                mag += t.norm_sqr();
            }
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t;
            }
            if mag < 1e-36 {
                break;
            }
        }
        v = acc;
    }
    v
}

/// Squeeze operators `S[ξ]` for many `ξ` at a fixed dimension.
///
/// The real generator `(a² − a†²)/2` is diagonalized once on the padded space;
/// complex squeeze angles follow by conjugating with number-basis phases,
/// `S[r e^{iφ}] = R(−φ/2) S[r] R(φ/2)` with `R(θ) = e^{−iθ a†a}`.
#[derive(Clone, Debug)]
pub struct SqueezeFamily {
    dim: usize,
    vectors: DMatrix<C64>,
    eigenvalues: Vec<f64>,
}

impl SqueezeFamily {
    pub fn new(dim: usize, policy: &TruncationPolicy) -> Result<Self> {
        let padded = (policy.padded(dim)? + dim).min(policy.max_dim);
        let a = annihilation(padded).into_matrix();
        let a2 = &a * &a;
        // i(a² − a†²)/2 is Hermitian
        let herm = (&a2 - a2.adjoint()) * C64::new(0.0, 0.5);
        let eig = SymmetricEigen::new(herm);
        Ok(SqueezeFamily { dim, vectors: eig.eigenvectors, eigenvalues: eig.eigenvalues.iter().copied().collect() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `S[ξ]|ψ⟩`, cropped to `dim`.
    pub fn apply(&self, xi: C64, psi: &FockVector) -> Result<FockVector> {
        if psi.dim() > self.dim {
            return Err(Error::DimensionMismatch { left: psi.dim(), right: self.dim });
        }
        let (r, phi) = xi.to_polar();
        let padded = self.vectors.nrows();
        // R(φ/2) on the input
        let mut v = nalgebra::DVector::<C64>::zeros(padded);
        for (k, a) in psi.amps().iter().enumerate() {
            v[k] = a * C64::from_polar(1.0, -0.5 * phi * k as f64);
        }
        let mut w = self.vectors.adjoint() * v;
        for (wk, &lam) in w.iter_mut().zip(&self.eigenvalues) {
            *wk *= C64::from_polar(1.0, -r * lam);
        }
        let out = &self.vectors * w;
        let amps = (0..self.dim).map(|k| out[k] * C64::from_polar(1.0, 0.5 * phi * k as f64)).collect();
        Ok(FockVector { amps })
    }

    pub fn matrix(&self, xi: C64) -> OperatorMatrix {
        let (r, phi) = xi.to_polar();
        let phases: Vec<C64> = self.eigenvalues.iter().map(|&lam| C64::from_polar(1.0, -r * lam)).collect();
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        let full = scaled * self.vectors.adjoint();
        let mut m = full.view((0, 0), (self.dim, self.dim)).into_owned();
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] *= C64::from_polar(1.0, 0.5 * phi * (i as f64 - j as f64));
            }
        }
        OperatorMatrix { entries: m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn annihilation_entries() {
        let a = annihilation(2);
        assert_eq!(a.get(0, 1), c(1.0));
        assert_eq!(a.get(0, 0), c(0.0));
        assert_eq!(a.get(1, 0), c(0.0));
        assert_eq!(a.get(1, 1), c(0.0));
        assert!((annihilation(3).get(1, 2) - c(2f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn number_operator_eigenvalue() {
        let a = annihilation(8);
        let n = a.adjoint().mul(&a).unwrap();
        let five = FockVector::basis(5, 8).unwrap();
        let out = n.apply(&five).unwrap();
        assert!((out.amps()[5] - c(5.0)).norm() < 1e-14);
        assert!((expectation(&n, &five).unwrap() - c(5.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_displacement_and_squeeze_are_identity() {
        let p = TruncationPolicy::default();
        let id = OperatorMatrix::identity(12);
        assert!(displacement(C64::new(0.0, 0.0), 12, &p).unwrap().max_abs_diff(&id) < 1e-15);
        assert!(squeeze(C64::new(0.0, 0.0), 12, &p).unwrap().max_abs_diff(&id) < 1e-15);
    }

    #[test]
    fn vacuum_overlaps() {
        let p = TruncationPolicy::default();
        let d = displacement(c(1.0), 30, &p).unwrap();
        assert!((d.get(0, 0) - c((-0.5f64).exp())).norm() < 1e-12);
        let s = squeeze(c(0.5), 30, &p).unwrap();
        assert!((s.get(0, 0).re - 0.941_710_615_831_675_7).abs() < 1e-12);
        assert!((s.get(0, 0).re - 1.0 / 0.5f64.cosh().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn displacement_column_matches_poisson_series() {
        let p = TruncationPolicy::default();
        let d = displacement(c(2.0), 40, &p).unwrap();
        let mut amp = (-2.0f64).exp();
        let mut worst: f64 = 0.0;
        for k in 0..40 {
            if k > 0 {
                amp *= 2.0 / (k as f64).sqrt();
            }
            worst = worst.max((d.get(k, 0) - c(amp)).norm());
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn squeezed_vacuum_matches_series() {
        let p = TruncationPolicy::default();
        let r: f64 = 0.7;
        let s = squeeze(c(r), 60, &p).unwrap();
        let mut worst: f64 = 0.0;
        // (−tanh r)^m √((2m)!) / (2^m m! √cosh r)
        let mut coef = 1.0 / r.cosh().sqrt();
        for m in 0..30usize {
            if m > 0 {
                let mf = m as f64;
                coef *= -r.tanh() * ((2.0 * mf) * (2.0 * mf - 1.0)).sqrt() / (2.0 * mf);
            }
            worst = worst.max((s.get(2 * m, 0) - c(coef)).norm());
            worst = worst.max(s.get(2 * m + 1, 0).norm());
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn squeeze_contracts_x_quadrature() {
        let p = TruncationPolicy::default();
        let dim = 60;
        let r = 0.4;
        let vac = FockVector::basis(0, dim).unwrap();
        let psi = squeeze(c(r), dim, &p).unwrap().apply(&vac).unwrap();
        let a = annihilation(dim);
        let x = a.add(&a.adjoint()).unwrap().scaled(c(std::f64::consts::FRAC_1_SQRT_2));
        let x2 = x.mul(&x).unwrap();
        let var = expectation(&x2, &psi).unwrap().re;
        assert!((var - (-2.0 * r).exp() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_pairs_on_inner_block() {
        let p = TruncationPolicy::default();
        let dim = 130;
        let alpha = C64::new(1.2, -0.7);
        let d = displacement(alpha, dim, &p).unwrap().mul(&displacement(-alpha, dim, &p).unwrap()).unwrap();
        let s = squeeze(C64::new(0.5, 0.2), dim, &p).unwrap().mul(&squeeze(C64::new(-0.5, -0.2), dim, &p).unwrap()).unwrap();
        let inner = 20;
        let id = OperatorMatrix::identity(inner);
        assert!(d.cropped(inner).max_abs_diff(&id) < 1e-9);
        assert!(s.cropped(inner).max_abs_diff(&id) < 1e-9);
    }

    #[test]
    fn unitary_on_inner_block() {
        let p = TruncationPolicy::default();
        let dim = 80;
        let d = displacement(C64::new(1.5, 0.5), dim, &p).unwrap();
        assert!(d.unitarity_defect(30) < 1e-10);
        let s = squeeze(C64::new(0.3, -0.3), dim, &p).unwrap();
        // squeezed number states spread to roughly n e^{2|ξ|} levels
        assert!(s.unitarity_defect(12) < 1e-10);
    }

    #[test]
    fn displace_vector_matches_matrix() {
        let p = TruncationPolicy::default();
        let psi = FockVector::new(vec![c(0.6), C64::new(0.0, 0.48), c(-0.64 * 0.6), c(0.2)]).unwrap().normalized().unwrap();
        let alpha = C64::new(-1.1, 0.9);
        let exact = displace_vector(&psi, alpha, &p).unwrap();
        let dim = 70;
        let mat = displacement(alpha, dim, &p).unwrap().apply(&psi.resized(dim)).unwrap();
        let worst = exact.amps().iter().zip(mat.amps()).take(40).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
        assert!((exact.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn long_support_round_trip() {
        let p = TruncationPolicy::default();
        let amps: Vec<C64> = (0..60).map(|k| C64::from_polar(1.0 / (1.0 + k as f64), 0.3 * k as f64)).collect();
        let psi = FockVector::new(amps).unwrap().normalized().unwrap();
        let alpha = C64::new(2.0, -1.5);
        let there = displace_vector(&psi, alpha, &p).unwrap();
        assert!((there.norm_sqr() - 1.0).abs() < 1e-12);
        let back = displace_vector(&there, -alpha, &p).unwrap();
        let worst = psi.amps().iter().zip(back.amps()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn displace_vector_reports_overflow() {
        let p = TruncationPolicy::new(1e-12, 5, 30).unwrap();
        let psi = FockVector::basis(3, 4).unwrap();
        assert!(matches!(displace_vector(&psi, c(6.0), &p), Err(Error::TruncationOverflow { .. })));
    }

    #[test]
    fn padded_dimension_respects_cap() {
        let p = TruncationPolicy::new(1e-12, 20, 100).unwrap();
        assert!(displacement(c(1.0), 90, &p).is_err());
        assert_eq!(p.padded(80).unwrap(), 100);
    }

    #[test]
    fn squeeze_vector_matches_matrix() {
        let p = TruncationPolicy::default();
        let psi = FockVector::coherent(C64::new(0.8, -0.4), 30).unwrap().normalized().unwrap();
        for xi in [c(0.6), C64::new(-0.3, 0.5)] {
            let fast = squeeze_vector(&psi, xi, &p).unwrap();
            let dim = 90;
            let mat = squeeze(xi, dim, &p).unwrap().apply(&psi.resized(dim)).unwrap();
            let worst = fast.amps().iter().zip(mat.amps()).take(40).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(worst < 1e-11, "{xi}: {worst}");
            assert!((fast.norm_sqr() - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn squeeze_vector_reports_overflow() {
        let p = TruncationPolicy::new(1e-12, 10, 60).unwrap();
        let psi = FockVector::basis(4, 5).unwrap();
        assert!(matches!(squeeze_vector(&psi, c(1.2), &p), Err(Error::TruncationOverflow { .. })));
    }

    #[test]
    fn squeeze_family_matches_expm() {
        let p = TruncationPolicy::default();
        let dim = 40;
        let fam = SqueezeFamily::new(dim, &p).unwrap();
        for xi in [C64::new(0.4, 0.0), C64::new(-0.3, 0.2), C64::new(0.0, 0.5)] {
            let direct = squeeze(xi, dim, &p).unwrap();
            let inner = dim - p.guard;
            assert!(fam.matrix(xi).cropped(inner).max_abs_diff(&direct.cropped(inner)) < 1e-11, "{xi}");
            let psi = FockVector::basis(2, dim).unwrap();
            let a = fam.apply(xi, &psi).unwrap();
            let b = direct.apply(&psi).unwrap();
            let worst = a.amps().iter().zip(b.amps()).take(inner).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(worst < 1e-11);
        }
    }

    #[test]
    fn ladder_helpers() {
        let psi = FockVector::basis(3, 5).unwrap();
        assert!((psi.lowered().amps()[2] - c(3f64.sqrt())).norm() < 1e-15);
        assert!((psi.raised().amps()[4] - c(2.0)).norm() < 1e-15);
        let (m, v) = psi.number_moments();
        assert_eq!((m, v), (3.0, 0.0));
    }

    #[test]
    fn coherent_number_mean() {
        let p = TruncationPolicy::default();
        let dim = 50;
        let vac = FockVector::basis(0, dim).unwrap();
        let psi = displacement(c(1.5), dim, &p).unwrap().apply(&vac).unwrap();
        let n = expectation(&number(dim), &psi).unwrap();
        assert!((n.re - 2.25).abs() < 1e-10);
    }
}
