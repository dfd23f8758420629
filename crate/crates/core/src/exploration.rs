//! Exploration functions `𝓕(t)` feeding the confidence bonuses.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Which exploration function an index uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExplorationFunction {
    /// `ln t + 3 ln ln t`.
    Standard,
    /// `ln(2t)`, with `t` the current round rather than the sample count.
    Approximate,
    /// `M (ln t + 3 ln ln t) / (1 + (M − 1) α)`.
    Dklucb { players: u32, alpha: f64 },
}

impl ExplorationFunction {
    /// Evaluates the function at real `t`, clamped below at zero.
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            ExplorationFunction::Standard => standard(t),
            ExplorationFunction::Approximate => {
                if t > 0.0 {
                    (2.0 * t).ln().max(0.0)
                } else {
                    0.0
                }
            }
            ExplorationFunction::Dklucb { players, alpha } => {
                dklucb_scale(players, alpha) * standard(t)
            }
        }
    }
}

/// `M / (1 + (M − 1) α)`, the factor shared by DKLUCB and the lower bound.
pub fn dklucb_scale(players: u32, alpha: f64) -> f64 {
    let m = f64::from(players);
    m / (1.0 + (m - 1.0) * alpha)
}

fn standard(t: f64) -> f64 {
    if t <= 1.0 {
        return 0.0;
    }
    let ln_t = t.ln();
    (ln_t + 3.0 * ln_t.ln()).max(0.0)
}

/// `𝓕(t)` for integer `t ≥ 1`.
pub fn exploration_value(f: ExplorationFunction, t: u64) -> f64 {
    f.value(t as f64)
}

/// The user-selectable base function (`exploration = standard | ln2t`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExplorationKind {
    #[default]
    Standard,
    Ln2t,
}

impl fmt::Display for ExplorationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExplorationKind::Standard => "standard",
            ExplorationKind::Ln2t => "ln2t",
        })
    }
}

impl FromStr for ExplorationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "standard" => Ok(ExplorationKind::Standard),
            "ln2t" => Ok(ExplorationKind::Ln2t),
            other => Err(Error::InvalidPolicy {
                input: other.to_string(),
                reason: "exploration must be `standard` or `ln2t`".into(),
            }),
        }
    }
}
