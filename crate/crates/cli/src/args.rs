use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use compass_core::{Sign, StateSpec, TruncationPolicy, C64};
use serde::Serialize;

use crate::UsageError;

#[derive(Parser, Debug)]
#[command(name = "compass", version, about = "Compass and squeezed number states: tables, Wigner grids, sensitivity and preparation scans")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GlobalArgs {
    /// JSON or `key = value` file; a previous output file works too.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Output file; stdout when absent. Relative paths land in $COMPASS_OUT_DIR if set.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[arg(long, global = true, default_value_t = TruncationPolicy::default().target_tail)]
    pub target_tail: f64,

    #[arg(long, global = true, default_value_t = TruncationPolicy::default().guard)]
    pub guard: usize,

    #[arg(long, global = true, default_value_t = TruncationPolicy::default().max_dim)]
    pub max_dim: usize,
}

impl GlobalArgs {
    pub fn policy(&self) -> compass_core::Result<TruncationPolicy> {
        TruncationPolicy::new(self.target_tail, self.guard, self.max_dim)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Photon-number distribution of a state.
    State(StateCmd),
    /// Fidelities of SSDNS/SSNS with compass states.
    FidelityTable(FidelityCmd),
    /// Wigner function on a grid.
    Wigner(WignerCmd),
    /// `|⟨ψ|D[δ]|ψ⟩|²` along a direction, optionally through the Wigner overlap.
    Overlap(OverlapCmd),
    /// Displacement-sensing variance, with an optional Monte Carlo run.
    Sensitivity(SensitivityCmd),
    /// Variance and mean-photon ratios against compass states over β.
    Ratio(RatioCmd),
    /// Damping-rate estimation error.
    Damping(DampingCmd),
    /// Preparation Hamiltonians.
    Prepare(PrepareCmd),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::State(_) => "state",
            Command::FidelityTable(_) => "fidelity-table",
            Command::Wigner(_) => "wigner",
            Command::Overlap(_) => "overlap",
            Command::Sensitivity(_) => "sensitivity",
            Command::Ratio(_) => "ratio",
            Command::Damping(_) => "damping",
            Command::Prepare(_) => "prepare",
        }
    }

    /// Merges positional selectors into their flag form so the echo has one spelling.
    pub fn normalize(&mut self) {
        match self {
            Command::State(c) => c.state.normalize(),
            Command::FidelityTable(c) => c.state.normalize(),
            Command::Wigner(c) => c.state.normalize(),
            Command::Overlap(c) => c.state.normalize(),
            Command::Sensitivity(c) => c.state.normalize(),
            Command::Ratio(c) => c.state.normalize(),
            Command::Damping(c) => c.state.normalize(),
            Command::Prepare(c) => {
                if let Some(h) = c.which.take() {
                    c.hamiltonian = Some(h);
                }
            }
        }
    }

    pub fn echo(&self) -> serde_json::Value {
        let v = match self {
            Command::State(c) => serde_json::to_value(c),
            Command::FidelityTable(c) => serde_json::to_value(c),
            Command::Wigner(c) => serde_json::to_value(c),
            Command::Overlap(c) => serde_json::to_value(c),
            Command::Sensitivity(c) => serde_json::to_value(c),
            Command::Ratio(c) => serde_json::to_value(c),
            Command::Damping(c) => serde_json::to_value(c),
            Command::Prepare(c) => serde_json::to_value(c),
        };
        v.expect("argument structs serialize")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Ssdns,
    Ssns,
    Compass,
    Cat,
    Coherent,
    Fock,
    SqueezedDisplaced,
}

fn parse_sign(s: &str) -> Result<Sign, String> {
    s.parse().map_err(|e: compass_core::Error| e.to_string())
}

/// State family and parameters. The family is positional or `--state`.
#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct StateArgs {
    #[arg(value_enum, value_name = "FAMILY")]
    #[serde(skip)]
    pub family: Option<Family>,

    #[arg(long = "state", value_enum, value_name = "FAMILY")]
    pub state: Option<Family>,

    /// Squeeze parameter.
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,

    /// Displacement (real part for complex families).
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    pub alpha_im: Option<f64>,

    /// Number-state index.
    #[arg(long)]
    pub n: Option<usize>,

    /// Compass or cat amplitude (real part).
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    pub beta_im: Option<f64>,

    /// Compass label.
    #[arg(long, allow_negative_numbers = true)]
    pub l: Option<i32>,

    /// Compass sign: +, -, plus or minus.
    #[arg(long, value_parser = parse_sign, allow_hyphen_values = true)]
    pub sign: Option<Sign>,

    /// Cat parity: +, -, even or odd.
    #[arg(long, value_parser = parse_sign, allow_hyphen_values = true)]
    pub parity: Option<Sign>,
}

fn need<T>(v: Option<T>, family: &str, name: &str) -> Result<T, UsageError> {
    v.ok_or_else(|| UsageError(format!("{family} needs --{name}")))
}

impl StateArgs {
    fn normalize(&mut self) {
        if let Some(f) = self.family.take() {
            self.state = Some(f);
        }
    }

    pub fn family(&self) -> Option<Family> {
        self.family.or(self.state)
    }

    pub fn spec(&self) -> Result<StateSpec, UsageError> {
        let family = self.family().ok_or_else(|| UsageError("a state family is required (positional or --state)".into()))?;
        let n = self.n.unwrap_or(0);
        let alpha_c = || C64::new(self.alpha.unwrap_or(0.0), self.alpha_im.unwrap_or(0.0));
        let beta_c = |name| Ok::<_, UsageError>(C64::new(need(self.beta, name, "beta")?, self.beta_im.unwrap_or(0.0)));
        Ok(match family {
            Family::Ssdns => StateSpec::Ssdns { r: need(self.r, "ssdns", "r")?, alpha: need(self.alpha, "ssdns", "alpha")?, n },
            Family::Ssns => StateSpec::Ssns { r: need(self.r, "ssns", "r")?, n },
            Family::Compass => {
                StateSpec::Compass { beta: beta_c("compass")?, l: self.l.unwrap_or(0), sign: self.sign.unwrap_or(Sign::Plus) }
            }
            Family::Cat => StateSpec::Cat { beta: beta_c("cat")?, parity: self.parity.unwrap_or(Sign::Plus) },
            Family::Coherent => StateSpec::Coherent { alpha: alpha_c() },
            Family::Fock => StateSpec::Fock { n },
            Family::SqueezedDisplaced => StateSpec::SqueezedDisplaced { r: need(self.r, "squeezed-displaced", "r")?, alpha: alpha_c(), n },
        })
    }

    /// The same family with a different real `β`.
    pub fn with_beta(&self, spec: &StateSpec, beta: f64) -> Result<StateSpec, UsageError> {
        let b = C64::new(beta, self.beta_im.unwrap_or(0.0));
        match *spec {
            StateSpec::Compass { l, sign, .. } => Ok(StateSpec::Compass { beta: b, l, sign }),
            StateSpec::Cat { parity, .. } => Ok(StateSpec::Cat { beta: b, parity }),
            _ => Err(UsageError("a β sweep needs a compass or cat state".into())),
        }
    }
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GridArgs {
    #[arg(long, default_value_t = -6.0, allow_negative_numbers = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = -6.0, allow_negative_numbers = true)]
    pub p_min: f64,
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    pub p_max: f64,
    #[arg(long, default_value_t = 121)]
    pub nx: usize,
    #[arg(long, default_value_t = 121)]
    pub np: usize,
}

impl GridArgs {
    pub fn grid(&self) -> compass_core::phase_space::PhaseSpaceGrid {
        compass_core::phase_space::PhaseSpaceGrid {
            x_min: self.x_min,
            x_max: self.x_max,
            p_min: self.p_min,
            p_max: self.p_max,
            nx: self.nx,
            np: self.np,
        }
    }
}

/// An evenly spaced `β` range.
#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepArgs {
    #[arg(long)]
    pub beta_min: Option<f64>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
}

impl SweepArgs {
    pub fn is_set(&self) -> bool {
        self.beta_min.is_some() || self.beta_max.is_some() || self.steps.is_some()
    }

    pub fn values(&self, lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, UsageError> {
        let lo = self.beta_min.unwrap_or(lo);
        let hi = self.beta_max.unwrap_or(hi);
        let steps = self.steps.unwrap_or(steps);
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) || steps == 0 || (steps == 1 && lo != hi) {
            return Err(UsageError(format!("bad β sweep [{lo}, {hi}] with {steps} steps")));
        }
        if steps == 1 {
            return Ok(vec![lo]);
        }
        Ok((0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect())
    }
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct StateCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct FidelityCmd {
    /// With a family, tabulate that single row (compass from --beta, --l, --sign)
    /// instead of the published rows.
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,

    /// Append a row with the fidelity of the first state with itself.
    #[arg(long)]
    pub self_check: bool,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct WignerCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct OverlapCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,

    /// Direction of δ in phase space.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,

    #[arg(long, default_value_t = 1.0)]
    pub delta_max: f64,

    #[arg(long, default_value_t = 41)]
    pub delta_steps: usize,

    /// Also evaluate `2π∫W W(·+δ)` on the grid.
    #[arg(long)]
    pub via_wigner: bool,

    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SensitivityCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,

    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,

    /// Repetitions `R`.
    #[arg(long, default_value_t = 100_000)]
    pub repetitions: u64,

    #[command(flatten)]
    #[serde(flatten)]
    pub sweep: SweepArgs,

    /// Simulate the two-outcome protocol for seeds `seed..seed+seeds`.
    #[arg(long)]
    pub monte_carlo: bool,

    /// True displacement for the Monte Carlo run.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,

    #[arg(long, default_value_t = 100)]
    pub seeds: u64,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RatioCmd {
    /// SSDNS or SSNS probe; --l and --sign pick the compass reference.
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,

    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,

    #[command(flatten)]
    #[serde(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct DampingCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,

    #[arg(long, default_value_t = 0.1)]
    pub kappa: f64,

    #[arg(long, default_value_t = 1.0)]
    pub t: f64,

    /// Tabulate the compass number-variance curves over β instead.
    #[arg(long)]
    pub fig6: bool,

    #[command(flatten)]
    #[serde(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hamiltonian {
    H1,
    H2,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct PrepareCmd {
    #[arg(value_enum, value_name = "HAMILTONIAN")]
    #[serde(skip)]
    pub which: Option<Hamiltonian>,

    #[arg(long, value_enum)]
    pub hamiltonian: Option<Hamiltonian>,

    /// Oscillator dimension.
    #[arg(long)]
    pub dim: Option<usize>,

    // driven Rabi (h1)
    #[arg(long, default_value_t = 1.5)]
    pub omega_o: f64,
    #[arg(long, default_value_t = 0.0)]
    pub omega_a: f64,
    #[arg(long, default_value_t = 0.5)]
    pub omega_t: f64,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    pub g: f64,
    /// Two-photon drive `G`.
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub drive: f64,
    /// Levels per qubit label in the residual check.
    #[arg(long, default_value_t = 10)]
    pub block: usize,
    /// Levels whose eigenvector fidelity is reported.
    #[arg(long, default_value_t = 4)]
    pub levels: usize,

    // two-photon Rabi (h2)
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub g1: f64,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    pub g2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Initial number state.
    #[arg(long, default_value_t = 0)]
    pub n: usize,
    /// Single evolution time.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Scan `t` over [t-min, t-max] in steps of t-step.
    #[arg(long)]
    pub scan_t: bool,
    #[arg(long, default_value_t = 0.5)]
    pub t_min: f64,
    #[arg(long, default_value_t = 20.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 0.25)]
    pub t_step: f64,
    /// Also search the squeeze maximizing the SSNS fidelity on (0, r-max].
    #[arg(long)]
    pub optimize_r: bool,
    #[arg(long, default_value_t = 1.5)]
    pub r_max: f64,
}

impl PrepareCmd {
    pub fn hamiltonian(&self) -> Option<Hamiltonian> {
        self.which.or(self.hamiltonian)
    }
}
