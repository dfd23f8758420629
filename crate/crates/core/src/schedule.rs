//! Communication sets `𝒞`, the last-communication function `ℓ(t)`, the
//! counting function `𝒵_𝒞(n) = |𝒞 ∩ [n]|` and the density `α(𝒞)`.
//!
//! Grid families are infinite in principle. They are generated lazily with
//! integer rounding and stop once an element would exceed [`MAX_ROUND`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest round a generated grid element may take.
pub const MAX_ROUND: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    None,
    Full,
    OneShot(u64),
    LinearGrid(u64),
    ExponentialGrid(f64),
    DoubleExponentialGrid { q: f64, eps: f64 },
    Explicit(Vec<u64>),
}

/// An immutable, validated communication set.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunicationSchedule {
    kind: ScheduleKind,
}

/// `α(𝒞)`, plus whether it was estimated from a finite prefix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density {
    pub value: f64,
    pub estimated: bool,
}

impl Density {
    fn exact(value: f64) -> Self {
        Self {
            value,
            estimated: false,
        }
    }
}

fn invalid(input: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidSchedule {
        input: input.into(),
        reason: reason.into(),
    }
}

impl CommunicationSchedule {
    pub fn none() -> Self {
        Self {
            kind: ScheduleKind::None,
        }
    }

    pub fn full() -> Self {
        Self {
            kind: ScheduleKind::Full,
        }
    }

    pub fn one_shot(round: u64) -> Result<Self> {
        if round == 0 {
            return Err(invalid(format!("oneshot:{round}"), "rounds start at 1"));
        }
        Ok(Self {
            kind: ScheduleKind::OneShot(round),
        })
    }

    pub fn linear(d: u64) -> Result<Self> {
        if d == 0 {
            return Err(invalid(format!("linear:{d}"), "spacing must be at least 1"));
        }
        Ok(Self {
            kind: ScheduleKind::LinearGrid(d),
        })
    }

    pub fn exponential(q: f64) -> Result<Self> {
        if !(q.is_finite() && q > 1.0) {
            return Err(invalid(
                format!("exp:{q}"),
                "ratio must be a finite real > 1",
            ));
        }
        Ok(Self {
            kind: ScheduleKind::ExponentialGrid(q),
        })
    }

    pub fn double_exponential(q: f64, eps: f64) -> Result<Self> {
        if !(q.is_finite() && q > 1.0) {
            return Err(invalid(
                format!("doubleexp:{q},{eps}"),
                "base must be a finite real > 1",
            ));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(invalid(
                format!("doubleexp:{q},{eps}"),
                "eps must be a finite real > 0",
            ));
        }
        Ok(Self {
            kind: ScheduleKind::DoubleExponentialGrid { q, eps },
        })
    }

    /// Rounds must be positive and strictly increasing.
    pub fn explicit(rounds: Vec<u64>) -> Result<Self> {
        let render = || {
            let parts: Vec<String> = rounds.iter().map(u64::to_string).collect();
            format!("explicit:{}", parts.join(","))
        };
        if rounds.is_empty() {
            return Err(invalid("explicit:", "at least one round is required"));
        }
        if rounds[0] == 0 {
            return Err(invalid(render(), "rounds start at 1"));
        }
        if rounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(render(), "rounds must be strictly increasing"));
        }
        Ok(Self {
            kind: ScheduleKind::Explicit(rounds),
        })
    }

    /// The one-shot schedule communicating at `⌈T^{1/M}⌉`.
    pub fn over_exploration(horizon: u64, players: u32) -> Result<Self> {
        if horizon == 0 || players == 0 {
            return Err(Error::InvalidRun(
                "over-exploration needs T >= 1 and M >= 1".into(),
            ));
        }
        Self::one_shot(ceil_root(horizon, players))
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    /// True for schedules with finitely many communication rounds.
    pub fn is_finite(&self) -> bool {
        matches!(
            self.kind,
            ScheduleKind::None | ScheduleKind::OneShot(_) | ScheduleKind::Explicit(_)
        )
    }

    /// `C_1 < C_2 < …`, lazily.
    pub fn elements(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match &self.kind {
            ScheduleKind::None => Box::new(std::iter::empty()),
            ScheduleKind::Full => Box::new(1..=MAX_ROUND),
            ScheduleKind::OneShot(r) => Box::new(std::iter::once(*r)),
            ScheduleKind::LinearGrid(d) => {
                let d = *d;
                Box::new(
                    (1..).map_while(move |k: u64| k.checked_mul(d).filter(|&v| v <= MAX_ROUND)),
                )
            }
            ScheduleKind::ExponentialGrid(q) => {
                let q = *q;
                rounded_grid(move |k| q.powi(k))
            }
            ScheduleKind::DoubleExponentialGrid { q, eps } => {
                let (ln_q, growth) = (q.ln(), 1.0 + eps);
                rounded_grid(move |k| (ln_q * growth.powi(k)).exp())
            }
            ScheduleKind::Explicit(rounds) => Box::new(rounds.iter().copied()),
        }
    }

    /// All communication rounds in `[1, n]`.
    pub fn rounds_up_to(&self, n: u64) -> Vec<u64> {
        self.elements().take_while(|&c| c <= n).collect()
    }

    pub fn is_comm_round(&self, t: u64) -> bool {
        match &self.kind {
            ScheduleKind::None => false,
            ScheduleKind::Full => t >= 1,
            ScheduleKind::OneShot(r) => t == *r,
            ScheduleKind::LinearGrid(d) => t >= 1 && t.is_multiple_of(*d),
            ScheduleKind::Explicit(rounds) => rounds.binary_search(&t).is_ok(),
            _ => self.elements().take_while(|&c| c <= t).any(|c| c == t),
        }
    }

    /// `ℓ(t) = max{u ≤ t : u ∈ 𝒞 or u = 0}`.
    pub fn last_comm_leq(&self, t: u64) -> u64 {
        match &self.kind {
            ScheduleKind::None => 0,
            ScheduleKind::Full => t,
            ScheduleKind::OneShot(r) => {
                if t >= *r {
                    *r
                } else {
                    0
                }
            }
            ScheduleKind::LinearGrid(d) => (t / d) * d,
            ScheduleKind::Explicit(rounds) => {
                let idx = rounds.partition_point(|&c| c <= t);
                if idx == 0 {
                    0
                } else {
                    rounds[idx - 1]
                }
            }
            _ => self.elements().take_while(|&c| c <= t).last().unwrap_or(0),
        }
    }

    /// `𝒵_𝒞(n)`: the number of communication rounds in `{1, …, n}`.
    pub fn counting_function(&self, n: u64) -> u64 {
        match &self.kind {
            ScheduleKind::None => 0,
            ScheduleKind::Full => n,
            ScheduleKind::OneShot(r) => u64::from(n >= *r),
            ScheduleKind::LinearGrid(d) => n / d,
            ScheduleKind::Explicit(rounds) => rounds.partition_point(|&c| c <= n) as u64,
            _ => self.elements().take_while(|&c| c <= n).count() as u64,
        }
    }

    /// Density with the default burn-in (first quartile) for explicit sets.
    pub fn density(&self) -> Result<Density> {
        let burn_in = match &self.kind {
            ScheduleKind::Explicit(rounds) => rounds.len() / 4,
            _ => 0,
        };
        self.density_with_burn_in(burn_in)
    }

    /// Grid families use their closed forms. Explicit sets return the
    /// minimum of `ln C_k / ln C_{k+1}` over pairs starting at index
    /// `burn_in` or later, flagged as estimated.
    pub fn density_with_burn_in(&self, burn_in: usize) -> Result<Density> {
        match &self.kind {
            ScheduleKind::None => Ok(Density::exact(0.0)),
            ScheduleKind::Full | ScheduleKind::LinearGrid(_) | ScheduleKind::ExponentialGrid(_) => {
                Ok(Density::exact(1.0))
            }
            ScheduleKind::DoubleExponentialGrid { eps, .. } => {
                Ok(Density::exact(1.0 / (1.0 + eps)))
            }
            ScheduleKind::OneShot(_) => Err(Error::InsufficientData(
                "a one-shot schedule has a single round; density needs at least two".into(),
            )),
            ScheduleKind::Explicit(rounds) => {
                if rounds.len() < 2 {
                    return Err(Error::InsufficientData(
                        "explicit schedule needs at least two rounds to estimate density".into(),
                    ));
                }
                let pairs = rounds.len() - 1;
                let start = burn_in.min(pairs - 1);
                let value = rounds[start..]
                    .windows(2)
                    .map(|w| (w[0] as f64).ln() / (w[1] as f64).ln())
                    .fold(f64::INFINITY, f64::min);
                Ok(Density {
                    value,
                    estimated: true,
                })
            }
        }
    }

    /// Compares `𝒵_𝒞(n)` against `ln ln n / ln(1/α)` over log-spaced `n`.
    pub fn counting_bound_report(&self, n_max: u64) -> Result<CountingBoundReport> {
        let alpha = self.density()?.value;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::NotApplicable(format!(
                "the counting bound needs 0 < density < 1, got {alpha}"
            )));
        }
        if n_max < 16 {
            return Err(Error::InvalidRun(format!(
                "n_max must be at least 16, got {n_max}"
            )));
        }
        let inv_ln_alpha = (1.0 / alpha).ln();
        let mut rows: Vec<CountingBoundRow> = Vec::new();
        for n in log_spaced(16, n_max, 32) {
            let count = self.counting_function(n);
            let bound = (n as f64).ln().ln() / inv_ln_alpha;
            rows.push(CountingBoundRow {
                n,
                count,
                bound,
                ratio: count as f64 / bound,
            });
        }
        Ok(CountingBoundReport { alpha, rows })
    }
}

/// `⌈T^{1/M}⌉` computed exactly on integers.
pub fn ceil_root(value: u64, degree: u32) -> u64 {
    if value <= 1 || degree == 1 {
        return value;
    }
    let reaches = |r: u64| match r.checked_pow(degree) {
        Some(p) => p >= value,
        None => true,
    };
    let mut r = (value as f64).powf(1.0 / f64::from(degree)).ceil().max(1.0) as u64;
    while r > 1 && reaches(r - 1) {
        r -= 1;
    }
    while !reaches(r) {
        r += 1;
    }
    r
}

fn rounded_grid<'a>(point: impl Fn(i32) -> f64 + 'a) -> Box<dyn Iterator<Item = u64> + 'a> {
    let mut last = 0u64;
    Box::new(
        (1..i32::MAX)
            .map(point)
            .map_while(|x| {
                (x.is_finite() && x.round() <= MAX_ROUND as f64).then(|| x.round() as u64)
            })
            .filter(move |&c| {
                let fresh = c > last;
                if fresh {
                    last = c;
                }
                fresh
            }),
    )
}

fn log_spaced(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp().round() as u64)
        .map(|n| n.clamp(lo, hi))
        .collect();
    out.push(hi);
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingBoundRow {
    pub n: u64,
    pub count: u64,
    pub bound: f64,
    pub ratio: f64,
}

/// Rows of `(n, 𝒵(n), ln ln n / ln α⁻¹)` and their ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingBoundReport {
    pub alpha: f64,
    pub rows: Vec<CountingBoundRow>,
}

impl CountingBoundReport {
    /// Ratio at the largest `n`.
    pub fn tail_ratio(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.ratio)
    }

    pub fn holds(&self, tolerance: f64) -> bool {
        self.tail_ratio() >= 1.0 - tolerance
    }
}

impl fmt::Display for CommunicationSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ScheduleKind::None => write!(f, "none"),
            ScheduleKind::Full => write!(f, "full"),
            ScheduleKind::OneShot(r) => write!(f, "oneshot:{r}"),
            ScheduleKind::LinearGrid(d) => write!(f, "linear:{d}"),
            ScheduleKind::ExponentialGrid(q) => write!(f, "exp:{q}"),
            ScheduleKind::DoubleExponentialGrid { q, eps } => write!(f, "doubleexp:{q},{eps}"),
            ScheduleKind::Explicit(rounds) => {
                write!(f, "explicit:")?;
                for (i, r) in rounds.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{r}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for CommunicationSchedule {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let s = input.trim();
        let (head, args) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let int = |v: &str| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| invalid(s, format!("`{}` is not a nonnegative integer", v.trim())))
        };
        let real = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| invalid(s, format!("`{}` is not a number", v.trim())))
        };
        match (head, args) {
            ("none", None) => Ok(Self::none()),
            ("full", None) => Ok(Self::full()),
            ("oneshot", Some(a)) => Self::one_shot(int(a)?),
            ("linear", Some(a)) => Self::linear(int(a)?),
            ("exp", Some(a)) => Self::exponential(real(a)?),
            ("doubleexp", Some(a)) => {
                let (q, eps) = a
                    .split_once(',')
                    .ok_or_else(|| invalid(s, "expected doubleexp:<q>,<eps>"))?;
                Self::double_exponential(real(q)?, real(eps)?)
            }
            ("explicit", Some(a)) => {
                if a.trim().is_empty() {
                    return Err(invalid(s, "at least one round is required"));
                }
                let rounds = a.split(',').map(int).collect::<Result<Vec<_>>>()?;
                Self::explicit(rounds)
            }
            _ => Err(invalid(
                s,
                "expected none | full | oneshot:<r> | linear:<d> | exp:<q> | doubleexp:<q>,<eps> | explicit:<r1>,<r2>,...",
            )),
        }
    }
}
