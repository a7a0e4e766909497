use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The requested state or operator needs more Fock levels than the policy allows.
    #[error("truncation overflow: needs {needed} Fock levels but max_dim is {max_dim}")]
    TruncationOverflow { needed: usize, max_dim: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("degenerate Gauss-Hermite parameters: {0}")]
    DegenerateParams(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("displacement {delta} lies outside the monotone window [0, {window})")]
    OutsideMonotoneWindow { delta: f64, window: f64 },

    #[error("probe has zero mean photon number")]
    ZeroEnergyProbe,

    #[error("unstable regime: detuning {detuning} must exceed twice the drive {drive}")]
    UnstableRegime { detuning: f64, drive: f64 },

    #[error("measurement branch has probability {0:e}")]
    ZeroProbabilityBranch(f64),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by numerical limits rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::TruncationOverflow { .. }
                | Error::UnstableRegime { .. }
                | Error::ZeroProbabilityBranch(_)
                | Error::OutsideMonotoneWindow { .. }
                | Error::ZeroEnergyProbe
        )
    }
}
