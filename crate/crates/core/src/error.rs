use thiserror::Error;

/// Errors raised by model construction and the certified checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("could not parse `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("sequence table exhausted at n = {n} and no extension rule is set")]
    TableExhausted { n: u128 },

    #[error("sup of alpha_k over k >= {n} did not stabilize within horizon {horizon}")]
    HorizonExhausted { n: u64, horizon: u64 },

    #[error("gamma_{index} = {value} is outside (0, 1/4)")]
    GammaOutOfRange { index: u64, value: String },

    #[error("gamma_{index} is not defined by the supplied list")]
    GammaUndefined { index: u64 },

    #[error("no tail certificate for the capacity series")]
    MissingTailCertificate,

    #[error("closed-form L2 Widom factors need gamma_n <= 1/6 for all n")]
    SmallGammaRequired,

    #[error("precision exhausted while {context} (ceiling {bits} bits)")]
    PrecisionExhausted { context: String, bits: u32 },

    #[error("preimage {index} of level {level} is not bracketed by its parent interval")]
    RootBracketing { level: u32, index: usize },

    #[error("point not separated from K(gamma) down to level {depth}")]
    DepthExhausted { depth: u32 },

    #[error("bracket width {width} above target {target} at level ceiling {level}")]
    ToleranceUnreachable { width: String, target: String, level: u32 },

    #[error("x0 = {x0} lies in K(gamma)")]
    PointInSet { x0: String },

    #[error("level {s} is below s0 = {s0} for an interior gap point")]
    Inadmissible { s: u32, s0: u32 },

    #[error("gap ({alpha}, {beta}) is degenerate at working precision")]
    DegenerateGap { alpha: String, beta: String },

    #[error("moment matrix singular at degree {n}; add quadrature nodes")]
    SingularMoments { n: usize },
}

impl Error {
    /// True for failures that more precision or more levels could cure.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::PrecisionExhausted { .. }
                | Error::RootBracketing { .. }
                | Error::DepthExhausted { .. }
                | Error::ToleranceUnreachable { .. }
                | Error::HorizonExhausted { .. }
                | Error::SingularMoments { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
