//! Initial-state families and their analytic death/birth times.
//!
//! All five families are X-states. Event times are in units of `κt`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{cavity_reduced, reservoir_reduced, XState};
use crate::error::{Error, Result};
use crate::qstate::C64;

/// Tolerance of the strict X-state entanglement criterion.
pub const ENTANGLEMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FamilySpec {
    /// `α|00⟩ + β|11⟩` with real nonnegative amplitudes.
    #[serde(rename = "pure")]
    PureSuperposition { alpha: f64, beta: f64 },
    /// `p|Φ⟩⟨Φ| + (1−p)/4 𝟙`.
    Werner { p: f64 },
    /// `(a|11⟩⟨11| + 2|Ψ⟩⟨Ψ| + (1−a)|00⟩⟨00|)/3`, `|Ψ⟩ = (|01⟩+|10⟩)/√2`.
    MixedA { a: f64 },
    /// `c|Φ⟩⟨Φ| + (1−c)|11⟩⟨11|`.
    MixedC { c: f64 },
    /// `f|ψ̃⟩⟨ψ̃| + (1−f)/4 𝟙`, `|ψ̃⟩ = (|00⟩ + 5|11⟩)/√26`.
    NoisySC { f: f64 },
}

/// Finite-time death of cavity entanglement and birth of reservoir entanglement.
///
/// `t_esd = None` means the cavity entanglement only decays asymptotically;
/// `t_esb = Some(0.0)` means reservoir entanglement appears immediately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventTimes {
    pub t_esd: Option<f64>,
    pub t_esb: Option<f64>,
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

impl FamilySpec {
    /// Pure superposition from `α²`.
    pub fn pure_from_alpha2(alpha2: f64) -> Result<Self> {
        unit_interval("alpha2", alpha2)?;
        let spec = FamilySpec::PureSuperposition { alpha: alpha2.sqrt(), beta: (1.0 - alpha2).sqrt() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FamilySpec::PureSuperposition { alpha, beta } => {
                if !(alpha >= 0.0 && beta >= 0.0) {
                    return Err(Error::InvalidParameter(format!("amplitudes ({alpha}, {beta}) must be nonnegative")));
                }
                let norm = alpha * alpha + beta * beta;
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!("α² + β² = {norm}, expected 1")));
                }
                Ok(())
            }
            FamilySpec::Werner { p } => unit_interval("p", p),
            FamilySpec::MixedA { a } => unit_interval("a", a),
            FamilySpec::MixedC { c } => unit_interval("c", c),
            FamilySpec::NoisySC { f } => unit_interval("f", f),
        }
    }
}

/// Shortest decimal `α²` that parses back to the same amplitudes, so the
/// text form round-trips.
fn shortest_alpha2(alpha: f64, beta: f64) -> f64 {
    let exact = alpha * alpha;
    (0..17)
        .filter_map(|p| format!("{exact:.p$e}").parse::<f64>().ok())
        .find(|&a2| a2.sqrt() == alpha && (1.0 - a2).sqrt() == beta)
        .unwrap_or(exact)
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FamilySpec::PureSuperposition { alpha, beta } => write!(f, "pure:alpha2={}", shortest_alpha2(alpha, beta)),
            FamilySpec::Werner { p } => write!(f, "werner:p={p}"),
            FamilySpec::MixedA { a } => write!(f, "mixeda:a={a}"),
            FamilySpec::MixedC { c } => write!(f, "mixedc:c={c}"),
            FamilySpec::NoisySC { f: v } => write!(f, "noisysc:f={v}"),
        }
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse family spec `{s}`"));
        let (kind, param) = s.trim().split_once(':').ok_or_else(bad)?;
        let (key, value) = param.split_once('=').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        let spec = match (kind.trim().to_ascii_lowercase().as_str(), key.trim()) {
            ("pure", "alpha2") => return FamilySpec::pure_from_alpha2(value),
            ("werner", "p") => FamilySpec::Werner { p: value },
            ("mixeda", "a") => FamilySpec::MixedA { a: value },
            ("mixedc", "c") => FamilySpec::MixedC { c: value },
            ("noisysc", "f") => FamilySpec::NoisySC { f: value },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// The family's initial two-cavity X-state.
pub fn build(spec: &FamilySpec) -> Result<XState> {
    spec.validate()?;
    let r = |v: f64| C64::new(v, 0.0);
    match *spec {
        FamilySpec::PureSuperposition { alpha, beta } => {
            XState::new(alpha * alpha, 0.0, 0.0, beta * beta, r(alpha * beta), r(0.0))
        }
        FamilySpec::Werner { p } => {
            let d = (1.0 + p) / 4.0;
            let o = (1.0 - p) / 4.0;
            XState::new(d, o, o, d, r(p / 2.0), r(0.0))
        }
        FamilySpec::MixedA { a } => {
            let third = 1.0 / 3.0;
            XState::new((1.0 - a) * third, third, third, a * third, r(0.0), r(third))
        }
        FamilySpec::MixedC { c } => XState::new(c / 2.0, 0.0, 0.0, 1.0 - c / 2.0, r(c / 2.0), r(0.0)),
        FamilySpec::NoisySC { f } => {
            let noise = (1.0 - f) / 4.0;
            XState::new(f / 26.0 + noise, noise, noise, 25.0 * f / 26.0 + noise, r(5.0 * f / 26.0), r(0.0))
        }
    }
}

/// `ρ22ρ33 < |ρ14|²` or `ρ11ρ44 < |ρ23|²`, with a strict margin.
pub fn is_entangled_xstate(x: &XState) -> bool {
    entanglement_gap(x) > ENTANGLEMENT_TOL
}

/// `max(|ρ14|² − ρ22ρ33, |ρ23|² − ρ11ρ44)`, positive exactly on entangled X-states.
pub fn entanglement_gap(x: &XState) -> f64 {
    (x.rho14.norm_sqr() - x.rho22 * x.rho33).max(x.rho23.norm_sqr() - x.rho11 * x.rho44)
}

/// Analytic event times. Errors when the initial state is separable.
pub fn event_times(spec: &FamilySpec) -> Result<EventTimes> {
    let x = build(spec)?;
    if !is_entangled_xstate(&x) {
        return Err(Error::SeparableInitialState);
    }
    let times = match *spec {
        FamilySpec::PureSuperposition { alpha, beta } => EventTimes {
            t_esd: (alpha < beta).then(|| (beta / (beta - alpha)).ln()),
            t_esb: Some((beta / alpha).ln().max(0.0)),
        },
        FamilySpec::Werner { p } => EventTimes {
            t_esd: (p < 1.0).then(|| ((1.0 + p) / (2.0 * (1.0 - p))).ln()),
            t_esb: Some(((1.0 + p) / (3.0 * p - 1.0)).ln().max(0.0)),
        },
        FamilySpec::MixedA { a } => {
            if a <= 1.0 / 3.0 {
                EventTimes { t_esd: None, t_esb: Some(0.0) }
            } else {
                let root = (2.0 * a * a - a.powi(3) + a.powi(4)).sqrt();
                EventTimes {
                    t_esd: Some(((a + a * a + root) / (3.0 * a - 1.0)).ln()),
                    t_esb: Some(((a + root) / (1.0 - a + a * a)).ln().max(0.0)),
                }
            }
        }
        FamilySpec::MixedC { c } => EventTimes {
            t_esd: (c < 1.0).then(|| ((2.0 - c) / (2.0 * (1.0 - c))).ln()),
            t_esb: Some(((2.0 - c) / c).ln().max(0.0)),
        },
        FamilySpec::NoisySC { f } => EventTimes {
            t_esd: Some(((13.0 + 37.0 * f) / (26.0 + 14.0 * f)).ln()),
            t_esb: Some(((13.0 + 37.0 * f) / (23.0 * f - 13.0)).ln().max(0.0)),
        },
    };
    Ok(times)
}

/// Width of the final bracket in the numeric event search.
pub const EVENT_BISECTION_TOL: f64 = 1e-8;

/// Analytic and numeric event times further apart than this are a defect.
pub const EVENT_AGREEMENT_TOL: f64 = 1e-6;

/// Event times located from the entanglement criterion alone: the first
/// true→false flip of the cavity pair and the first false→true flip of the
/// reservoir pair on a uniform scan of `[0, kt_max]`, each refined by
/// bisection. Events beyond `kt_max` come back as `None`.
///
/// The search uses the sign of [`entanglement_gap`] without the margin of
/// [`is_entangled_xstate`]: right after an immediate birth the gap grows like
/// `(κt)³`, so a margin of 1e-12 would delay the crossing by ~1e-4.
pub fn numeric_event_times(spec: &FamilySpec, kt_max: f64, samples: usize) -> Result<EventTimes> {
    if !(kt_max > 0.0 && kt_max.is_finite()) || samples == 0 {
        return Err(Error::InvalidParameter(format!("scan [0, {kt_max}] with {samples} samples")));
    }
    let x = build(spec)?;
    if !is_entangled_xstate(&x) {
        return Err(Error::SeparableInitialState);
    }
    let cavity = |kt: f64| cavity_reduced(&x, kt).map(|r| entanglement_gap(&r) > 0.0);
    let reservoir = |kt: f64| reservoir_reduced(&x, kt).map(|r| entanglement_gap(&r) > 0.0);
    Ok(EventTimes {
        t_esd: first_flip(&cavity, true, kt_max, samples)?,
        t_esb: first_flip(&reservoir, false, kt_max, samples)?,
    })
}

fn first_flip(f: &dyn Fn(f64) -> Result<bool>, from: bool, kt_max: f64, samples: usize) -> Result<Option<f64>> {
    let mut lo = 0.0;
    let mut state = f(lo)?;
    for i in 1..=samples {
        let hi = kt_max * i as f64 / samples as f64;
        let next = f(hi)?;
        if state == from && next != from {
            return bisect(f, lo, hi, from).map(Some);
        }
        state = next;
        lo = hi;
    }
    Ok(None)
}

/// Midpoint of a bracket `[lo, hi]` with `f(lo) = from ≠ f(hi)`, shrunk to
/// [`EVENT_BISECTION_TOL`].
fn bisect(f: &dyn Fn(f64) -> Result<bool>, mut lo: f64, mut hi: f64, from: bool) -> Result<f64> {
    while hi - lo > EVENT_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid)? == from {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
