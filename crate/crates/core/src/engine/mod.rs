//! Virtual-clock simulation of the swarm scheme and the centralized baseline.
//!
//! Nothing sleeps: sampling durations only advance a simulated clock, so a
//! run covering minutes of virtual time completes in milliseconds. Every run
//! is sequential and fully determined by its seed.

mod central;
mod queue;
mod swarm;

use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricSnapshot;

pub use central::{run_centralized, run_centralized_observed, CentralSimulator, CentralState};
pub use queue::{Event, EventQueue};
pub use swarm::{
    run_swarm, run_swarm_global_tick, run_swarm_observed, swarm_increment, SwarmSimulator,
    SwarmState,
};

/// Header of trace CSV files.
pub const CSV_HEADER: &str = "k,t,U,Vbar,f_gap,grad_norm_sq";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// One event per thread on a priority queue.
    SwarmEventDriven,
    /// Merged event stream: `Exp(dt/N)` gaps, uniformly chosen updater.
    SwarmGlobalTick,
    /// Batch of `N` samples per step, waiting for the slowest.
    Centralized,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::SwarmEventDriven => "swarm_event_driven",
            Scheme::SwarmGlobalTick => "swarm_global_tick",
            Scheme::Centralized => "centralized",
        }
    }

    pub fn is_swarm(self) -> bool {
        !matches!(self, Scheme::Centralized)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    /// Global update count (swarm) or step count (centralized).
    MaxUpdates(u64),
    /// Virtual seconds; updates scheduled later are not applied.
    MaxVirtualTime(f64),
}

/// Scalars of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_threads: usize,
    pub step_size: f64,
    pub attraction: f64,
    pub mean_sample_time: f64,
    pub horizon: Horizon,
    pub seed: u64,
    pub scheme: Scheme,
    pub record_every: u64,
    /// Squared-error level whose first crossing is reported as `T_hit`.
    pub threshold: f64,
    /// Stop right after the threshold is first reached.
    #[serde(default)]
    pub stop_at_threshold: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_threads: 20,
            step_size: 0.01,
            attraction: 1.0,
            mean_sample_time: 0.02,
            horizon: Horizon::MaxUpdates(10_000),
            seed: 0,
            scheme: Scheme::SwarmEventDriven,
            record_every: 100,
            threshold: 0.1,
            stop_at_threshold: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let min_threads = if self.scheme.is_swarm() { 2 } else { 1 };
        if self.n_threads < min_threads {
            return Err(Error::param(
                "n_threads",
                format!("{} threads; need at least {min_threads}", self.n_threads),
            ));
        }
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::param("step_size", "must be finite and nonnegative"));
        }
        if !(self.attraction >= 0.0 && self.attraction.is_finite()) {
            return Err(Error::param("attraction", "must be finite and nonnegative"));
        }
        if !(self.mean_sample_time > 0.0 && self.mean_sample_time.is_finite()) {
            return Err(Error::param("mean_sample_time", "must be positive"));
        }
        if let Horizon::MaxVirtualTime(t) = self.horizon {
            if !(t >= 0.0) {
                return Err(Error::param("horizon", "virtual time must be nonnegative"));
            }
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be at least 1"));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::param("threshold", "must be positive"));
        }
        Ok(())
    }
}

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: u64,
    pub t: f64,
    #[serde(rename = "U")]
    pub u: Option<f64>,
    #[serde(rename = "Vbar")]
    pub vbar: f64,
    pub f_gap: Option<f64>,
    pub grad_norm_sq: f64,
}

impl TraceRecord {
    pub fn new(k: u64, t: f64, snap: &MetricSnapshot) -> Self {
        TraceRecord {
            k,
            t,
            u: snap.u,
            vbar: snap.vbar,
            f_gap: snap.f_gap,
            grad_norm_sq: snap.grad_norm_sq,
        }
    }

    /// Squared error used for threshold crossings: `U` when the optimum is
    /// known, otherwise the squared gradient norm.
    pub fn error(&self) -> f64 {
        self.u.unwrap_or(self.grad_norm_sq)
    }
}

/// End-of-run statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    #[serde(rename = "T_hit")]
    pub t_hit: Option<f64>,
    pub k_hit: Option<u64>,
    pub threshold: f64,
    #[serde(rename = "final_U")]
    pub final_u: Option<f64>,
    #[serde(rename = "final_Vbar")]
    pub final_vbar: f64,
    pub final_f_gap: Option<f64>,
    pub final_grad_norm_sq: f64,
    pub updates: u64,
    pub samples: u64,
    pub virtual_time: f64,
    pub seed: u64,
    pub scheme: Scheme,
    /// Host time spent; excluded from serialized output so files stay
    /// reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub summary: TraceSummary,
}

fn fmt_opt(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        let _ = write!(out, "{v}");
    }
}

impl Trace {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{},{},", r.k, r.t);
            fmt_opt(&mut out, r.u);
            let _ = write!(out, ",{},", r.vbar);
            fmt_opt(&mut out, r.f_gap);
            let _ = writeln!(out, ",{}", r.grad_norm_sq);
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serialization cannot fail")
    }
}

/// Parses a trace CSV written by [`Trace::to_csv`].
pub fn read_trace_csv(text: &str) -> Result<Vec<TraceRecord>> {
    let bad = |line: usize, what: &str| Error::param("trace", format!("line {line}: {what}"));
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    let num = |s: &str, line| s.parse::<f64>().map_err(|_| bad(line, "bad number"));
    let opt = |s: &str, line| {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s, line).map(Some)
        }
    };
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let line_no = idx + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(line_no, "expected 6 fields"));
        }
        records.push(TraceRecord {
            k: fields[0].parse().map_err(|_| bad(line_no, "bad k"))?,
            t: num(fields[1], line_no)?,
            u: opt(fields[2], line_no)?,
            vbar: num(fields[3], line_no)?,
            f_gap: opt(fields[4], line_no)?,
            grad_norm_sq: num(fields[5], line_no)?,
        });
    }
    Ok(records)
}

/// Decides which update indices are written to the trace.
#[derive(Debug)]
pub(crate) struct Recorder {
    every: u64,
    threshold: f64,
    pub(crate) records: Vec<TraceRecord>,
    pub(crate) hit: Option<(u64, f64)>,
}

impl Recorder {
    pub(crate) fn new(config: &RunConfig) -> Self {
        Recorder {
            every: config.record_every,
            threshold: config.threshold,
            records: Vec::new(),
            hit: None,
        }
    }

    /// Whether the state after update `k` with crossing metric `error` must
    /// be recorded. Marks the first threshold crossing.
    pub(crate) fn wants(&mut self, k: u64, t: f64, error: f64) -> bool {
        let crossing = self.hit.is_none() && error <= self.threshold;
        if crossing {
            self.hit = Some((k, t));
        }
        crossing || k.is_multiple_of(self.every)
    }

    pub(crate) fn last_k(&self) -> Option<u64> {
        self.records.last().map(|r| r.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace() -> Trace {
        let records = vec![
            TraceRecord {
                k: 0,
                t: 0.0,
                u: Some(3.5),
                vbar: 0.0,
                f_gap: Some(1.25),
                grad_norm_sq: 2.0,
            },
            TraceRecord {
                k: 10,
                t: 0.125,
                u: None,
                vbar: 1e-7,
                f_gap: None,
                grad_norm_sq: 0.1,
            },
        ];
        Trace {
            records,
            summary: TraceSummary {
                t_hit: None,
                k_hit: None,
                threshold: 0.1,
                final_u: None,
                final_vbar: 0.0,
                final_f_gap: None,
                final_grad_norm_sq: 0.1,
                updates: 10,
                samples: 10,
                virtual_time: 0.125,
                seed: 1,
                scheme: Scheme::SwarmEventDriven,
                wall_time: Duration::from_millis(3),
            },
        }
    }

    #[test]
    fn csv_layout_and_round_trip() {
        let t = trace();
        let csv = t.to_csv();
        assert_eq!(
            csv,
            "k,t,U,Vbar,f_gap,grad_norm_sq\n0,0,3.5,0,1.25,2\n10,0.125,,0.0000001,,0.1\n"
        );
        assert_eq!(read_trace_csv(&csv).unwrap(), t.records);
        assert!(read_trace_csv("k,t\n").is_err());
    }

    #[test]
    fn summary_keys() {
        let json = trace().summary_json();
        for key in [
            "\"T_hit\": null",
            "\"threshold\": 0.1",
            "\"final_U\"",
            "\"seed\": 1",
        ] {
            assert!(json.contains(key), "{json}");
        }
        assert!(json.contains("\"scheme\": \"swarm_event_driven\""));
        let back: TraceSummary = serde_json::from_str(&json).unwrap();
        assert_eq!(back.wall_time, Duration::ZERO);
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = RunConfig {
            n_threads: 1,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let central = RunConfig {
            n_threads: 1,
            scheme: Scheme::Centralized,
            ..RunConfig::default()
        };
        assert!(central.validate().is_ok());
        for bad in [
            RunConfig {
                mean_sample_time: 0.0,
                ..RunConfig::default()
            },
            RunConfig {
                record_every: 0,
                ..RunConfig::default()
            },
            RunConfig {
                threshold: -1.0,
                ..RunConfig::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
        let json = serde_json::to_string(&RunConfig::default()).unwrap();
        assert!(json.contains(r#""horizon":{"max_updates":10000}"#));
    }
}
