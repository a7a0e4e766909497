//! Qubit–oscillator models that prepare the squeezed superpositions: the
//! two-photon-driven Rabi Hamiltonian (diagonalized by a squeeze and a
//! qubit-conditioned displacement) and the two-photon Rabi Hamiltonian whose
//! evolution from `|n, +⟩` followed by a `±` qubit measurement yields SSNS.
//!
//! Product states are stored qubit-major: `|e⟩ ⊗ ψ_e` in the first `dim`
//! entries, `|g⟩ ⊗ ψ_g` in the next `dim`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{annihilation, displace_vector, number, squeeze_vector, FockVector, OperatorMatrix, TruncationPolicy};
use crate::states::{build_state, Sign, StateSpec};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitOscillatorState {
    pub dim: usize,
    pub amps: Vec<C64>,
}

impl QubitOscillatorState {
    pub fn new(excited: &FockVector, ground: &FockVector) -> Self {
        let dim = excited.dim().max(ground.dim());
        let mut amps = excited.resized(dim).into_amps();
        amps.extend(ground.resized(dim).into_amps());
        QubitOscillatorState { dim, amps }
    }

    /// `|n⟩ ⊗ (|e⟩ ± |g⟩)/√2`.
    pub fn number_with_qubit(n: usize, sign: Sign, dim: usize) -> Result<Self> {
        let f = FockVector::basis(n, dim)?.scale(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        Ok(Self::new(&f, &f.scale(C64::new(sign.value(), 0.0))))
    }

    pub fn excited(&self) -> FockVector {
        FockVector::new(self.amps[..self.dim].to_vec()).expect("nonempty block")
    }

    pub fn ground(&self) -> FockVector {
        FockVector::new(self.amps[self.dim..].to_vec()).expect("nonempty block")
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.excited().inner(&other.excited()) + self.ground().inner(&other.ground())
    }

    /// Population in each (qubit, photon parity) sector: `[e even, e odd, g even, g odd]`.
    pub fn sector_populations(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, a) in self.amps.iter().enumerate() {
            let (q, k) = (i / self.dim, i % self.dim);
            out[2 * q + k % 2] += a.norm_sqr();
        }
        out
    }

    /// Largest population over the top `guard` levels of either block.
    fn tail(&self, guard: usize) -> f64 {
        self.excited().tail_mass(guard).max(self.ground().tail_mass(guard))
    }
}

/// Qubit-state projection onto `(|e⟩ ± |g⟩)/√2`: the renormalized oscillator
/// state and the Born probability.
pub fn project_qubit(state: &QubitOscillatorState, sign: Sign) -> Result<(FockVector, f64)> {
    let s = C64::new(sign.value(), 0.0);
    let branch = state.excited().add(&state.ground().scale(s)).scale(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    let prob = branch.norm_sqr() / state.norm_sqr();
    if prob < 1e-14 {
        return Err(Error::ZeroProbabilityBranch(prob));
    }
    Ok((branch.normalized()?, prob))
}

fn block(blocks: [[&OperatorMatrix; 2]; 2]) -> OperatorMatrix {
    let dim = blocks[0][0].dim();
    let mut m = DMatrix::from_element(2 * dim, 2 * dim, ZERO);
    for (qi, row) in blocks.iter().enumerate() {
        for (qj, b) in row.iter().enumerate() {
            m.view_mut((qi * dim, qj * dim), (dim, dim)).copy_from(b.matrix());
        }
    }
    OperatorMatrix::from_matrix(m).expect("square")
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Parameters of the two-photon-driven Rabi Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrivenRabiParams {
    pub omega_o: f64,
    pub omega_a: f64,
    pub omega_t: f64,
    pub g: f64,
    /// Two-photon drive strength `G`.
    #[serde(rename = "G")]
    pub drive: f64,
}

impl DrivenRabiParams {
    /// `Λ = ω_o − ω_t`.
    pub fn detuning(&self) -> f64 {
        self.omega_o - self.omega_t
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("omega_o", self.omega_o), ("omega_a", self.omega_a), ("omega_t", self.omega_t), ("g", self.g), ("G", self.drive)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        if self.detuning() <= 2.0 * self.drive.abs() {
            return Err(Error::UnstableRegime { detuning: self.detuning(), drive: self.drive });
        }
        Ok(())
    }
}

/// Squeeze, conditional displacement and spectrum that diagonalize the
/// driven Hamiltonian at `ω_a = 0`: eigenstates `S[r] D[λσx] |k, q⟩` with
/// energies `ε(k + ½) − Λ/2 − g²/(Λ + 2G)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct H1Transform {
    pub squeeze: f64,
    pub displacement: f64,
    pub frequency: f64,
    pub offset: f64,
}

impl H1Transform {
    pub fn new(p: &DrivenRabiParams) -> Result<Self> {
        p.validate()?;
        let lam = p.detuning();
        let (up, down) = (lam + 2.0 * p.drive, lam - 2.0 * p.drive);
        Ok(H1Transform {
            squeeze: 0.25 * (up / down).ln(),
            displacement: -p.g / (up.powf(0.75) * down.powf(0.25)),
            frequency: (up * down).sqrt(),
            offset: -0.5 * lam - p.g * p.g / up,
        })
    }

    pub fn energy(&self, k: usize) -> f64 {
        self.frequency * (k as f64 + 0.5) + self.offset
    }

    /// `S[r] D[λσx] |k⟩ ⊗ |q⟩` with `q` given in the `e/g` basis, cropped to `dim`.
    pub fn eigenvector(&self, k: usize, excited: bool, dim: usize, policy: &TruncationPolicy) -> Result<QubitOscillatorState> {
        let fock = FockVector::basis(k, k + 1)?;
        let d = real(self.displacement);
        let sq = real(self.squeeze);
        let plus = squeeze_vector(&displace_vector(&fock, d, policy)?, sq, policy)?;
        let minus = squeeze_vector(&displace_vector(&fock, -d, policy)?, sq, policy)?;
        // D[λσx]|k, e⟩ = ½[(D[λ] + D[−λ])|k⟩|e⟩ + (D[λ] − D[−λ])|k⟩|g⟩]; for g swap the blocks.
        let sum = plus.add(&minus).scale(real(0.5)).resized(dim);
        let diff = plus.add(&minus.scale(real(-1.0))).scale(real(0.5)).resized(dim);
        Ok(if excited { QubitOscillatorState::new(&sum, &diff) } else { QubitOscillatorState::new(&diff, &sum) })
    }
}

/// `Λ a†a + g(a + a†)σx + G(a†² + a²)`, plus `ω_a σz / 2` when `with_sigma_z`.
pub fn build_h1_effective(p: &DrivenRabiParams, dim: usize, with_sigma_z: bool) -> Result<OperatorMatrix> {
    p.validate()?;
    let a = annihilation(dim);
    let ad = a.adjoint();
    let pair = a.mul(&a)?.add(&ad.mul(&ad)?)?.scaled(real(p.drive));
    let osc = number(dim).scaled(real(p.detuning())).add(&pair)?;
    let coupling = a.add(&ad)?.scaled(real(p.g));
    let half = if with_sigma_z { 0.5 * p.omega_a } else { 0.0 };
    let id = OperatorMatrix::identity(dim);
    let diag_e = osc.add(&id.scaled(real(half)))?;
    let diag_g = osc.add(&id.scaled(real(-half)))?;
    Ok(block([[&diag_e, &coupling], [&coupling, &diag_g]]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H1Report {
    pub transform: H1Transform,
    pub dim: usize,
    /// Levels `k < block` per qubit label entering the residual.
    pub block: usize,
    /// Largest off-diagonal `|⟨v_j|H|v_k⟩|` among the transformed basis vectors.
    pub residual: f64,
    /// Largest `|⟨v_k|H|v_k⟩ − E_k|`.
    pub energy_error: f64,
    /// For `k < fidelity_levels`: smallest weight of `S[r]D[λσx]|k, q⟩` in the
    /// dense eigenspace of `E_k`, over both qubit labels.
    pub eigen_fidelities: Vec<f64>,
}

/// Conjugates the truncated `ω_a = 0` Hamiltonian by the analytic transform and
/// compares with a dense eigensolver.
pub fn h1_diagonalization_check(p: &DrivenRabiParams, dim: usize, block: usize, fidelity_levels: usize, policy: &TruncationPolicy) -> Result<H1Report> {
    if p.omega_a != 0.0 {
        return Err(Error::invalid("the diagonalization holds for omega_a = 0"));
    }
    if block == 0 || block > dim || fidelity_levels > dim {
        return Err(Error::invalid(format!("block {block} and fidelity levels {fidelity_levels} must fit in dim {dim}")));
    }
    let tr = H1Transform::new(p)?;
    let h = build_h1_effective(p, dim, false)?;
    let basis: Vec<(usize, QubitOscillatorState)> = (0..block)
        .flat_map(|k| [(k, true), (k, false)])
        .map(|(k, e)| Ok((k, tr.eigenvector(k, e, dim, policy)?)))
        .collect::<Result<_>>()?;
    let applied: Vec<QubitOscillatorState> = basis
        .iter()
        .map(|(_, v)| {
            let out = h.matrix() * DVector::from_column_slice(&v.amps);
            QubitOscillatorState { dim, amps: out.as_slice().to_vec() }
        })
        .collect();
    let mut residual: f64 = 0.0;
    let mut energy_error: f64 = 0.0;
    for (i, (ki, vi)) in basis.iter().enumerate() {
        for (j, hv) in applied.iter().enumerate() {
            let m = vi.inner(hv);
            if i == j {
                energy_error = energy_error.max((m - real(tr.energy(*ki))).norm());
            } else {
                residual = residual.max(m.norm());
            }
        }
    }
    let eig = SymmetricEigen::new(h.matrix().clone());
    let mut eigen_fidelities = Vec::with_capacity(fidelity_levels);
    for k in 0..fidelity_levels {
        let e = tr.energy(k);
        let cols: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&c| (eig.eigenvalues[c] - e).abs() < 1e-6 * tr.frequency).collect();
        let mut worst: f64 = 1.0;
        for excited in [true, false] {
            let v = DVector::from_column_slice(&tr.eigenvector(k, excited, dim, policy)?.amps);
            let w: f64 = cols.iter().map(|&c| eig.eigenvectors.column(c).dotc(&v).norm_sqr()).sum();
            worst = worst.min(w / v.norm_squared());
        }
        eigen_fidelities.push(worst);
    }
    Ok(H1Report { transform: tr, dim, block, residual, energy_error, eigen_fidelities })
}

/// Parameters of `(g₁ a†a + g₂(a² + a†²)) σz + ω a†a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonRabiParams {
    pub g1: f64,
    pub g2: f64,
    pub omega: f64,
}

impl TwoPhotonRabiParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("g1", self.g1), ("g2", self.g2), ("omega", self.omega)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        if 2.0 * self.g2 > self.omega {
            return Err(Error::UnstableRegime { detuning: self.omega, drive: self.g2 });
        }
        Ok(())
    }

    /// `r(t) = ½ ln((ω − 2g₂ j₀(g₁t)) / (ω + 2g₂ j₀(g₁t)))`.
    pub fn closed_form_squeeze(&self, t: f64) -> f64 {
        let j = j0(self.g1 * t);
        0.5 * ((self.omega - 2.0 * self.g2 * j) / (self.omega + 2.0 * self.g2 * j)).ln()
    }
}

/// Zeroth spherical Bessel function `sin x / x`.
pub fn j0(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Real oscillator blocks `H_e = (ω + g₁)N + g₂(a² + a†²)` and
/// `H_g = (ω − g₁)N − g₂(a² + a†²)`.
fn h2_blocks(p: &TwoPhotonRabiParams, dim: usize) -> [DMatrix<f64>; 2] {
    [1.0, -1.0].map(|s| {
        let mut m = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            m[(k, k)] = (p.omega + s * p.g1) * k as f64;
            if k + 2 < dim {
                let v = s * p.g2 * (((k + 1) * (k + 2)) as f64).sqrt();
                m[(k, k + 2)] = v;
                m[(k + 2, k)] = v;
            }
        }
        m
    })
}

pub fn build_h2(p: &TwoPhotonRabiParams, dim: usize) -> Result<OperatorMatrix> {
    p.validate()?;
    let [he, hg] = h2_blocks(p, dim).map(|m| OperatorMatrix::from_matrix(m.map(real)).expect("square"));
    let zero = OperatorMatrix::zeros(dim);
    Ok(block([[&he, &zero], [&zero, &hg]]))
}

/// Exact propagator of the two-photon Rabi model from `|n, +⟩`, diagonalized once.
pub struct H2Propagator {
    dim: usize,
    n: usize,
    guard: usize,
    target_tail: f64,
    blocks: [SymmetricEigen<f64, nalgebra::Dyn>; 2],
}

impl H2Propagator {
    pub fn new(p: &TwoPhotonRabiParams, n: usize, dim: usize, policy: &TruncationPolicy) -> Result<Self> {
        p.validate()?;
        if n + policy.guard >= dim {
            return Err(Error::TruncationOverflow { needed: n + policy.guard + 1, max_dim: dim });
        }
        let blocks = h2_blocks(p, dim).map(SymmetricEigen::new);
        Ok(H2Propagator { dim, n, guard: policy.guard, target_tail: policy.target_tail, blocks })
    }

    /// `e^{−iH₂t}|n, +⟩`; errors when the top `guard` levels of a block pick up
    /// more than the policy's tail mass.
    pub fn state(&self, t: f64) -> Result<QubitOscillatorState> {
        let amp = std::f64::consts::FRAC_1_SQRT_2;
        let [e, g] = [&self.blocks[0], &self.blocks[1]].map(|b| {
            let v = &b.eigenvectors;
            (0..self.dim)
                .map(|k| (0..self.dim).map(|c| real(v[(k, c)] * v[(self.n, c)] * amp) * C64::from_polar(1.0, -b.eigenvalues[c] * t)).sum())
                .collect::<Vec<C64>>()
        });
        let out = QubitOscillatorState { dim: self.dim, amps: e.into_iter().chain(g).collect() };
        if out.tail(self.guard) > self.target_tail {
            return Err(Error::TruncationOverflow { needed: self.dim + self.dim / 2, max_dim: self.dim });
        }
        Ok(out)
    }
}

pub fn evolve_h2(p: &TwoPhotonRabiParams, n: usize, t: f64, dim: usize, policy: &TruncationPolicy) -> Result<QubitOscillatorState> {
    H2Propagator::new(p, n, dim, policy)?.state(t)
}

/// `e^{−iH₂t}|n, +⟩` by Taylor steps, halving the step until two successive
/// results differ by less than `tol` in norm.
pub fn evolve_h2_stepped(p: &TwoPhotonRabiParams, n: usize, t: f64, dim: usize, tol: f64) -> Result<QubitOscillatorState> {
    p.validate()?;
    let blocks = h2_blocks(p, dim);
    let start = QubitOscillatorState::number_with_qubit(n, Sign::Plus, dim)?;
    let run = |steps: usize| -> DVector<C64> {
        let dt = t / steps as f64;
        let mut psi = [DVector::from_column_slice(&start.amps[..dim]), DVector::from_column_slice(&start.amps[dim..])];
        for _ in 0..steps {
            for (v, h) in psi.iter_mut().zip(&blocks) {
                let hc = h.map(real);
                let mut term = v.clone();
                let mut acc = v.clone();
                for j in 1..40 {
                    term = (&hc * term) * C64::new(0.0, -dt / j as f64);
                    acc += &term;
                    if term.norm() < 1e-18 {
                        break;
                    }
                }
                *v = acc;
            }
        }
        let mut all = psi[0].as_slice().to_vec();
        all.extend_from_slice(psi[1].as_slice());
        DVector::from_vec(all)
    };
    let mut steps = ((t.abs() * (p.omega + p.g1.abs() + 2.0 * p.g2.abs()) * dim as f64).ceil() as usize).max(1);
    let mut prev = run(steps);
    for _ in 0..16 {
        steps *= 2;
        let cur = run(steps);
        if (&cur - &prev).norm() < tol {
            return Ok(QubitOscillatorState { dim, amps: cur.as_slice().to_vec() });
        }
        prev = cur;
    }
    Err(Error::invalid("stepped propagation did not settle"))
}

/// The displayed evolved state
/// `N[S(−r e^{−ig₁t}) S(r e^{−iλ₊t}) e^{−ig₁tn}|n,e⟩ + S(r e^{ig₁t}) S(−r e^{−iλ₋t}) e^{ig₁tn}|n,g⟩]`
/// with `r = r(t)` and `λ± = ±g₁ + 2√(ω² − 4g₂²j₀²(g₁t))`, cropped to `dim`.
pub fn closed_form_h2_state(p: &TwoPhotonRabiParams, n: usize, t: f64, dim: usize, policy: &TruncationPolicy) -> Result<QubitOscillatorState> {
    p.validate()?;
    let r = p.closed_form_squeeze(t);
    let j = j0(p.g1 * t);
    let root = 2.0 * (p.omega * p.omega - 4.0 * p.g2 * p.g2 * j * j).sqrt();
    let (lp, lm) = (p.g1 + root, -p.g1 + root);
    let fock = FockVector::basis(n, n + 1)?;
    let nf = n as f64;
    let e = squeeze_vector(&squeeze_vector(&fock, C64::from_polar(r, -lp * t), policy)?, C64::from_polar(-r, -p.g1 * t), policy)?
        .scale(C64::from_polar(1.0, -p.g1 * t * nf));
    let g = squeeze_vector(&squeeze_vector(&fock, C64::from_polar(-r, -lm * t), policy)?, C64::from_polar(r, p.g1 * t), policy)?
        .scale(C64::from_polar(1.0, p.g1 * t * nf));
    let state = QubitOscillatorState::new(&e.resized(dim), &g.resized(dim));
    let norm = state.norm_sqr().sqrt();
    Ok(QubitOscillatorState { dim, amps: state.amps.iter().map(|a| a / norm).collect() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct H2ScanRow {
    pub t: f64,
    /// Born probability of the `+` outcome.
    pub prob_plus: f64,
    /// `r(t)` from the closed form.
    pub r_closed: f64,
    /// Fidelity of the `+` branch with `SSNS(|r(t)|, n)`.
    pub fidelity_closed: f64,
    /// Real squeeze maximizing the fidelity with `SSNS(r, n)` on `(0, r_max]`;
    /// NaN when the scan skips the search.
    pub r_best: f64,
    pub fidelity_best: f64,
}

fn ssns_fidelity(target: &FockVector, r: f64, n: usize, policy: &TruncationPolicy) -> Result<f64> {
    if r.abs() < 1e-12 {
        return Ok(target.amps().get(n).map_or(0.0, |a| a.norm_sqr()));
    }
    let s = build_state(&StateSpec::Ssns { r: r.abs(), n }, policy)?;
    Ok(target.inner(&s).norm_sqr())
}

/// Coarse grid over `(0, r_max]` then golden-section refinement.
fn best_ssns(target: &FockVector, n: usize, r_max: f64, policy: &TruncationPolicy) -> Result<(f64, f64)> {
    let samples = 24;
    let step = r_max / samples as f64;
    let mut best = (step, ssns_fidelity(target, step, n, policy)?);
    for k in 2..=samples {
        let r = step * k as f64;
        let f = ssns_fidelity(target, r, n, policy)?;
        if f > best.1 {
            best = (r, f);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(1e-6), (best.0 + step).min(r_max));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    while b - a > 1e-6 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if ssns_fidelity(target, c, n, policy)? > ssns_fidelity(target, d, n, policy)? {
            b = d;
        } else {
            a = c;
        }
    }
    let mid = 0.5 * (a + b);
    let f = ssns_fidelity(target, mid, n, policy)?;
    Ok(if f >= best.1 { (mid, f) } else { best })
}

/// Evolves `|n, +⟩`, projects on `+` and compares with SSNS at each time,
/// optionally searching for the best real squeeze up to `r_max`.
pub fn scan_h2(p: &TwoPhotonRabiParams, n: usize, times: &[f64], dim: usize, r_max: Option<f64>, policy: &TruncationPolicy) -> Result<Vec<H2ScanRow>> {
    if r_max.is_some_and(|r| !(r > 0.0)) {
        return Err(Error::invalid("r_max must be positive"));
    }
    let prop = H2Propagator::new(p, n, dim, policy)?;
    times
        .par_iter()
        .map(|&t| {
            let (branch, prob_plus) = project_qubit(&prop.state(t)?, Sign::Plus)?;
            let r_closed = p.closed_form_squeeze(t);
            let fidelity_closed = ssns_fidelity(&branch, r_closed, n, policy)?;
            let (r_best, fidelity_best) = match r_max {
                Some(r_max) => best_ssns(&branch, n, r_max, policy)?,
                None => (f64::NAN, f64::NAN),
            };
            Ok(H2ScanRow { t, prob_plus, r_closed, fidelity_closed, r_best, fidelity_best })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pol() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    #[test]
    fn scan_reaches_ssns() {
        let rows = scan_h2(&H2, 0, &[13.75, 15.5], 60, Some(1.0), &pol()).unwrap();
        assert!(rows[1].fidelity_closed > 0.99 && rows[1].r_closed.abs() > 0.2);
        assert!(rows[0].fidelity_best >= rows[0].fidelity_closed - 1e-9 && rows[0].fidelity_best > 0.999);
        let quick = scan_h2(&H2, 0, &[15.5], 60, None, &pol()).unwrap();
        assert!(quick[0].r_best.is_nan() && quick[0].fidelity_closed == rows[1].fidelity_closed);
    }

    fn driven(g: f64, drive: f64) -> DrivenRabiParams {
        DrivenRabiParams { omega_o: 1.5, omega_a: 0.0, omega_t: 0.5, g, drive }
    }

    const H2: TwoPhotonRabiParams = TwoPhotonRabiParams { g1: 0.1, g2: 0.2, omega: 1.0 };

    #[test]
    fn h1_trivial_is_diagonal() {
        let h = build_h1_effective(&driven(0.0, 0.0), 12, false).unwrap();
        for i in 0..24 {
            for j in 0..24 {
                let expect = if i == j { (i % 12) as f64 } else { 0.0 };
                assert!((h.get(i, j) - real(expect)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn h1_unstable_regime() {
        assert!(matches!(build_h1_effective(&driven(0.1, 0.5), 10, false), Err(Error::UnstableRegime { .. })));
    }

    #[test]
    fn h1_spectrum_without_coupling() {
        let p = driven(0.0, 0.3);
        let tr = H1Transform::new(&p).unwrap();
        let h = build_h1_effective(&p, 120, false).unwrap();
        let mut ev: Vec<f64> = SymmetricEigen::new(h.matrix().clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for k in 0..8 {
            let e = tr.frequency * (k as f64 + 0.5) - 0.5;
            assert!((ev[2 * k] - e).abs() < 1e-8 && (ev[2 * k + 1] - e).abs() < 1e-8, "{k}");
        }
    }

    #[test]
    fn h1_ground_energy() {
        let p = driven(0.1, 0.4);
        let tr = H1Transform::new(&p).unwrap();
        let h = build_h1_effective(&p, 120, false).unwrap();
        let low = SymmetricEigen::new(h.matrix().clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let lam = p.detuning();
        let expect = 0.5 * (lam * lam - 4.0 * p.drive * p.drive).sqrt() - 0.5 * lam - p.g * p.g / (lam + 2.0 * p.drive);
        assert!((low - expect).abs() < 1e-8 && (low - tr.energy(0)).abs() < 1e-8);
    }

    #[test]
    fn h1_transform_diagonalizes() {
        let p = driven(0.2, 0.3);
        let r = h1_diagonalization_check(&p, 80, 10, 4, &pol()).unwrap();
        assert!(r.residual < 1e-8 && r.energy_error < 1e-8, "{r:?}");
        assert!(r.eigen_fidelities.iter().all(|&f| f > 1.0 - 1e-8), "{r:?}");
        let pure = h1_diagonalization_check(&driven(0.0, 0.3), 80, 10, 2, &pol()).unwrap();
        assert_eq!(pure.transform.displacement, 0.0);
        assert!(pure.residual < 1e-9);
    }

    #[test]
    fn h1_residual_shrinks_with_dim() {
        let p = driven(0.2, 0.3);
        let res: Vec<f64> = [40, 60, 80].iter().map(|&d| h1_diagonalization_check(&p, d, 10, 0, &pol()).unwrap().residual).collect();
        assert!(res[0] >= res[1] && res[1] >= res[2], "{res:?}");
    }

    #[test]
    fn squeeze_sign_lock() {
        let p = driven(0.0, 0.3);
        let tr = H1Transform::new(&p).unwrap();
        let v = squeeze_vector(&FockVector::basis(0, 1).unwrap(), real(tr.squeeze), &pol()).unwrap();
        let a = annihilation(v.dim());
        let x = a.add(&a.adjoint()).unwrap().scaled(real(std::f64::consts::FRAC_1_SQRT_2));
        let var = crate::fock::expectation(&x.mul(&x).unwrap(), &v).unwrap().re;
        assert!((var - (-2.0 * tr.squeeze).exp() / 2.0).abs() < 1e-12);
        assert!(tr.squeeze > 0.0);
    }

    #[test]
    fn h2_structure() {
        let h = build_h2(&H2, 30).unwrap();
        assert!(h.hermiticity_defect() < 1e-14);
        let diag = build_h2(&TwoPhotonRabiParams { g2: 0.0, ..H2 }, 30).unwrap();
        for i in 0..60 {
            for j in 0..60 {
                if i != j {
                    assert_eq!(diag.get(i, j), ZERO);
                }
            }
        }
        // no coupling between qubit labels or photon parities
        for i in 0..60 {
            for j in 0..60 {
                if i / 30 != j / 30 || (i % 30) % 2 != (j % 30) % 2 {
                    assert!(h.get(i, j).norm() < 1e-12);
                }
            }
        }
        assert!(build_h2(&TwoPhotonRabiParams { g2: 0.6, ..H2 }, 10).is_err());
    }

    #[test]
    fn h2_propagation_invariants() {
        let p = pol();
        let start = QubitOscillatorState::number_with_qubit(1, Sign::Plus, 90).unwrap();
        assert!((evolve_h2(&H2, 1, 0.0, 90, &p).unwrap().inner(&start).norm() - 1.0).abs() < 1e-14);
        let before = start.sector_populations();
        for t in [0.7, 5.0, 13.0] {
            let s = evolve_h2(&H2, 1, t, 90, &p).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            let after = s.sector_populations();
            for k in 0..4 {
                assert!((after[k] - before[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn h2_free_evolution_is_phases() {
        let q = TwoPhotonRabiParams { g2: 0.0, ..H2 };
        let t = 3.3;
        let s = evolve_h2(&q, 2, t, 40, &pol()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amps[2] - C64::from_polar(h, -(q.omega + q.g1) * 2.0 * t)).norm() < 1e-12);
        assert!((s.amps[42] - C64::from_polar(h, -(q.omega - q.g1) * 2.0 * t)).norm() < 1e-12);
    }

    #[test]
    fn h2_stepped_agrees() {
        let a = evolve_h2(&H2, 0, 2.5, 50, &pol()).unwrap();
        let b = evolve_h2_stepped(&H2, 0, 2.5, 50, 1e-10).unwrap();
        assert!(a.inner(&b).norm_sqr() > 1.0 - 1e-12);
    }

    #[test]
    fn closed_form_at_short_times() {
        let p = pol();
        for t in [0.0, 0.02, 0.05] {
            let exact = evolve_h2(&H2, 0, t, 90, &p).unwrap();
            let closed = closed_form_h2_state(&H2, 0, t, 90, &p).unwrap();
            assert!(exact.inner(&closed).norm_sqr() > 1.0 - 1e-3, "t={t}");
        }
    }

    #[test]
    fn projection_probabilities() {
        let p = pol();
        let start = QubitOscillatorState::number_with_qubit(2, Sign::Plus, 10).unwrap();
        let (v, prob) = project_qubit(&start, Sign::Plus).unwrap();
        assert!((prob - 1.0).abs() < 1e-15 && (v.amps()[2].norm() - 1.0).abs() < 1e-15);
        assert!(matches!(project_qubit(&start, Sign::Minus), Err(Error::ZeroProbabilityBranch(_))));
        let s = evolve_h2(&H2, 0, 6.0, 90, &p).unwrap();
        let (_, a) = project_qubit(&s, Sign::Plus).unwrap();
        let (_, b) = project_qubit(&s, Sign::Minus).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
    }
}
