//! `κt` sweeps: the three entanglement curves of a family, its event times
//! and the plateau of the four-qubit monotone, with CSV/JSON output.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{cavity_reduced, evolve_joint, reservoir_reduced};
use crate::error::{Error, Result};
use crate::families::{build, event_times, numeric_event_times, FamilySpec, EVENT_AGREEMENT_TOL};
use crate::gme::{gme_curve_with, WitnessOptions, ZERO_THRESHOLD};
use crate::negativity::xstate_negativity;
use crate::qstate::{Bipartition, QubitOrder};
use crate::sdp::{Residuals, SdpSettings, SolveStatus};

pub const DEFAULT_KT_MAX: f64 = 4.0;
pub const DEFAULT_POINTS: usize = 161;
/// A plateau is flat to solver precision; smooth maxima and the noisy
/// near-plateau vary by 1e-6 or more over any window of the minimum width.
pub const DEFAULT_PLATEAU_TOL: f64 = 1e-7;
/// Beyond this the channel amplitudes are saturated.
pub const MAX_KT: f64 = 50.0;
/// Fraction of grid points allowed to end without an optimal solve.
pub const FAILURE_BUDGET: f64 = 0.05;
/// Resolution of the scan that brackets the numeric event times.
const EVENT_SCAN_SAMPLES: usize = 4000;
/// Shorter flat windows are not plateaus: near any smooth maximum a few
/// grid points agree to within the tolerance.
pub const PLATEAU_MIN_WIDTH: f64 = 0.1;

/// `FamilySpec` in its text form inside JSON.
mod family_text {
    use super::FamilySpec;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(spec: &FamilySpec, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(spec)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<FamilySpec, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(with = "family_text")]
    pub family: FamilySpec,
    pub kt_max: f64,
    pub points: usize,
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub plateau_tol: f64,
    /// Embed the joint four-qubit density matrix in every JSON row.
    pub include_joint_raw: bool,
    /// Restrict the monotone to these cuts (debugging only; the result is then
    /// not the genuine multipartite quantity).
    pub cuts: Option<Vec<Bipartition>>,
}

impl RunConfig {
    pub fn new(family: FamilySpec) -> Self {
        let solver = SdpSettings::default();
        Self {
            family,
            kt_max: DEFAULT_KT_MAX,
            points: DEFAULT_POINTS,
            gap_tol: solver.gap_tol,
            feas_tol: solver.feas_tol,
            plateau_tol: DEFAULT_PLATEAU_TOL,
            include_joint_raw: false,
            cuts: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.points < 2 {
            return bad(format!("points = {} (need at least 2)", self.points));
        }
        if !(self.kt_max > 0.0 && self.kt_max <= MAX_KT) {
            return bad(format!("kt_max = {} outside (0, {MAX_KT}]", self.kt_max));
        }
        for (name, v) in [("gap_tol", self.gap_tol), ("feas_tol", self.feas_tol), ("plateau_tol", self.plateau_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if let Some(cuts) = &self.cuts {
            if cuts.is_empty() || cuts.iter().any(|c| c.parties() != 4) {
                return bad("cut subset must be a nonempty list of four-party cuts".into());
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points).map(|i| self.kt_max * i as f64 / last).collect()
    }

    pub fn solver_settings(&self) -> SdpSettings {
        SdpSettings { gap_tol: self.gap_tol, feas_tol: self.feas_tol, ..SdpSettings::default() }
    }
}

/// Parses a comma-separated cut list such as `C1|C2R1R2,C1C2|R1R2`. Each
/// side lists party labels (`C1 C2 R1 R2`) or indices `0..3`.
pub fn parse_cuts(text: &str) -> Result<Vec<Bipartition>> {
    let bad = || Error::InvalidBipartition(format!("cannot parse cut list {text:?}"));
    let side = |s: &str| -> Result<Vec<usize>> {
        let mut out = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            if let Some(q) = QubitOrder::ALL.iter().find(|q| rest.starts_with(q.label())) {
                out.push(q.index());
                rest = &rest[q.label().len()..];
            } else if let Some(d) = rest.chars().next().and_then(|c| c.to_digit(10)) {
                out.push(d as usize);
                rest = &rest[1..];
            } else {
                return Err(bad());
            }
        }
        Ok(out)
    };
    let mut cuts = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (m, rest) = item.split_once('|').ok_or_else(bad)?;
        let (m, rest) = (side(m)?, side(rest)?);
        let mut all: Vec<usize> = m.iter().chain(&rest).copied().collect();
        all.sort_unstable();
        if all != [0, 1, 2, 3] {
            return Err(bad());
        }
        let cut = Bipartition::new(4, &m)?;
        if !cuts.contains(&cut) {
            cuts.push(cut);
        }
    }
    if cuts.is_empty() {
        return Err(bad());
    }
    Ok(cuts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub kt: f64,
    pub e_cc: f64,
    pub e_rr: f64,
    /// `max(0, −raw_optimum)`, zeroed below the reporting threshold. For
    /// non-optimal rows this comes from the best iterate and is only a lower
    /// bound certified by its witness.
    pub e_gme: f64,
    pub status: SolveStatus,
    pub raw_optimum: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    /// Row-major `[re, im]` entries of the joint state, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<Vec<Vec<[f64; 2]>>>,
}

impl TraceRow {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start_kt: f64,
    pub end_kt: f64,
    /// Mean of `E_gme` over the window.
    pub level: f64,
    /// `max − min` of `E_gme` over the window.
    pub variation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Events {
    pub t_esd_analytic: Option<f64>,
    pub t_esb_analytic: Option<f64>,
    pub t_esd_numeric: Option<f64>,
    pub t_esb_numeric: Option<f64>,
    /// Analytic and numeric times that disagree beyond tolerance.
    pub defects: Vec<String>,
    pub gme_peak_kt: Option<f64>,
    pub gme_peak_value: Option<f64>,
    pub plateau: Option<Window>,
    /// All grid points between cavity death and reservoir birth, whether or
    /// not they form a plateau.
    pub dark_window: Option<Window>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementTrace {
    pub config: RunConfig,
    pub solver: SdpSettings,
    pub rows: Vec<TraceRow>,
    pub events: Events,
}

impl EntanglementTrace {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_optimal()).count()
    }

    pub fn within_failure_budget(&self) -> bool {
        self.failures() as f64 <= FAILURE_BUDGET * self.rows.len() as f64
    }
}

/// Sweeps the configured grid. Solver failures stay in the rows; use
/// [`EntanglementTrace::within_failure_budget`] to judge the run.
pub fn run(config: &RunConfig) -> Result<EntanglementTrace> {
    config.validate()?;
    let x = build(&config.family)?;
    let grid = config.grid();
    let options = WitnessOptions { settings: config.solver_settings(), ..WitnessOptions::default() };
    let points = gme_curve_with(&config.family, &grid, &options, config.cuts.as_deref())?;

    let mut rows = Vec::with_capacity(grid.len());
    for p in points {
        let joint = if config.include_joint_raw {
            let m = evolve_joint(&x, p.kt)?.into_matrix();
            Some((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect())
        } else {
            None
        };
        let e = (-p.raw_optimum).max(0.0);
        rows.push(TraceRow {
            kt: p.kt,
            e_cc: xstate_negativity(&cavity_reduced(&x, p.kt)?),
            e_rr: xstate_negativity(&reservoir_reduced(&x, p.kt)?),
            e_gme: if e < ZERO_THRESHOLD { 0.0 } else { e },
            status: p.status,
            raw_optimum: p.raw_optimum,
            residuals: p.residuals,
            iterations: p.iterations,
            joint,
        });
    }
    let events = events(config, &rows)?;
    Ok(EntanglementTrace { config: config.clone(), solver: options.settings, rows, events })
}

fn events(config: &RunConfig, rows: &[TraceRow]) -> Result<Events> {
    let (analytic, numeric) = match event_times(&config.family) {
        Ok(a) => (Some(a), Some(numeric_event_times(&config.family, config.kt_max, EVENT_SCAN_SAMPLES)?)),
        Err(Error::SeparableInitialState) => (None, None),
        Err(e) => return Err(e),
    };
    let mut ev = Events {
        t_esd_analytic: analytic.and_then(|a| a.t_esd),
        t_esb_analytic: analytic.and_then(|a| a.t_esb),
        t_esd_numeric: numeric.and_then(|n| n.t_esd),
        t_esb_numeric: numeric.and_then(|n| n.t_esb),
        defects: Vec::new(),
        gme_peak_kt: None,
        gme_peak_value: None,
        plateau: None,
        dark_window: None,
    };
    for (name, a, n) in [("t_esd", ev.t_esd_analytic, ev.t_esd_numeric), ("t_esb", ev.t_esb_analytic, ev.t_esb_numeric)] {
        match (a, n) {
            (Some(a), Some(n)) if (a - n).abs() > EVENT_AGREEMENT_TOL => {
                ev.defects.push(format!("{name}: analytic {a} vs numeric {n}"));
            }
            // an analytic event inside the window must be found numerically
            (Some(a), None) if a < config.kt_max - EVENT_AGREEMENT_TOL => {
                ev.defects.push(format!("{name}: analytic {a} not found numerically"));
            }
            (None, Some(n)) => ev.defects.push(format!("{name}: numeric {n} has no analytic counterpart")),
            _ => {}
        }
    }

    let optimal: Vec<&TraceRow> = rows.iter().filter(|r| r.is_optimal()).collect();
    if let Some(peak) = optimal.iter().copied().reduce(|best, r| if r.e_gme > best.e_gme { r } else { best }) {
        ev.gme_peak_kt = Some(peak.kt);
        ev.gme_peak_value = Some(peak.e_gme);
    }
    ev.plateau = detect_plateau(rows, config.plateau_tol);
    if let (Some(a), Some(b)) = (ev.t_esd_analytic, ev.t_esb_analytic) {
        ev.dark_window = window_over(rows, a, b);
    }
    Ok(ev)
}

/// Longest run of consecutive optimal rows with `E_cc = E_rr = 0`,
/// `E_gme > 0` and every `E_gme` within `tol` of the run's mean. Runs
/// narrower than [`PLATEAU_MIN_WIDTH`] in `kt` do not count.
pub fn detect_plateau(rows: &[TraceRow], tol: f64) -> Option<Window> {
    let dark = |r: &TraceRow| r.is_optimal() && r.e_cc == 0.0 && r.e_rr == 0.0 && r.e_gme > 0.0;
    let flat = |w: &[TraceRow]| {
        let mean = w.iter().map(|r| r.e_gme).sum::<f64>() / w.len() as f64;
        w.iter().all(|r| (r.e_gme - mean).abs() <= tol)
    };
    let mut best: Option<(usize, usize)> = None;
    for i in 0..rows.len() {
        if !dark(&rows[i]) {
            continue;
        }
        // the window mean moves as it grows, so test every end point
        let mut j = i;
        let mut last_ok = None;
        while j < rows.len() && dark(&rows[j]) {
            if flat(&rows[i..=j]) {
                last_ok = Some(j);
            }
            j += 1;
        }
        if let Some(end) = last_ok {
            if best.is_none_or(|(a, b)| end - i > b - a) {
                best = Some((i, end));
            }
        }
    }
    let (a, b) = best?;
    if rows[b].kt - rows[a].kt < PLATEAU_MIN_WIDTH - 1e-12 {
        return None;
    }
    summarize(&rows[a..=b].iter().collect::<Vec<_>>())
}

/// Level and variation of `E_gme` over the optimal rows with `kt` in `[lo, hi]`.
pub fn window_over(rows: &[TraceRow], lo: f64, hi: f64) -> Option<Window> {
    let w: Vec<&TraceRow> = rows.iter().filter(|r| r.is_optimal() && r.kt >= lo && r.kt <= hi).collect();
    summarize(&w)
}

fn summarize(w: &[&TraceRow]) -> Option<Window> {
    let (first, last) = (w.first()?, w.last()?);
    let level = w.iter().map(|r| r.e_gme).sum::<f64>() / w.len() as f64;
    let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.e_gme), hi.max(r.e_gme)));
    Some(Window { start_kt: first.kt, end_kt: last.kt, level, variation: hi - lo })
}

pub const CSV_HEADER: &str = "kt,e_cc,e_rr,e_gme,status";

/// Nine significant digits, positional unless the value is tiny.
fn significant(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    if exp < -6 {
        format!("{v:.8e}")
    } else {
        format!("{v:.*}", (8 - exp).max(0) as usize)
    }
}

pub fn csv_string(trace: &EntanglementTrace) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &trace.rows {
        let [kt, cc, rr, gme] = [r.kt, r.e_cc, r.e_rr, r.e_gme].map(significant);
        let _ = writeln!(out, "{kt},{cc},{rr},{gme},{}", r.status);
    }
    out
}

pub fn emit_csv(trace: &EntanglementTrace, path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(trace))?;
    Ok(())
}

pub fn emit_json(trace: &EntanglementTrace, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(trace)?)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<EntanglementTrace> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
