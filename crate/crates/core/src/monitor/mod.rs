//! Streaming test engine: events become signed increments, the running sum
//! is compared against a boundary, and detection is sticky once flagged.
//!
//! Also provides the estimation and preprocessing steps around the engine:
//! iid and cluster-robust variance estimators, subject-level downsampling
//! for unequal groups, and progressive per-subject outcome capping.
//!
//! A `MonitorState` has a single logical writer; it can move between
//! threads but is not shared mutably. Everything else here is pure.

pub mod io;

use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::boundaries::{ConstantBoundary, Sidedness, StaircaseBoundary, TestConfig};
use crate::error::{Error, Result};

/// Experiment arm of an event's subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Control,
    Treatment,
}

/// One observation in the stream: the unit the monitor consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub index: u64,
    pub timestamp: DateTime<Utc>,
    pub subject_id: String,
    pub group: Group,
    pub outcome: f64,
}

/// Signed event outcome: `X_i = (1 - 2 W_i) Y_i`, positive for control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Increment(f64);

impl Increment {
    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Converts an event to its signed increment: control keeps the outcome's
/// sign, treatment negates it.
pub fn increment_from_event(event: &Event) -> Result<Increment> {
    if !event.outcome.is_finite() {
        return Err(Error::Data(format!(
            "event {} has non-finite outcome {}",
            event.index, event.outcome
        )));
    }
    Ok(Increment(match event.group {
        Group::Control => event.outcome,
        Group::Treatment => -event.outcome,
    }))
}

/// The boundary a monitor compares against.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    Constant(ConstantBoundary),
    Staircase(StaircaseBoundary),
}

/// Step outcome. `Flag` repeats on every step once detection has occurred.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Flag,
}

/// Whether out-of-order timestamps abort the run or are tolerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderingMode {
    #[default]
    Strict,
    Lenient,
}

/// Running state of one monitored experiment.
#[derive(Debug, Clone)]
pub struct MonitorState {
    n: u64,
    running_sum: f64,
    running_max: f64,
    detected_at: Option<u64>,
    boundary: Boundary,
    sidedness: Sidedness,
    horizon: u64,
}

impl MonitorState {
    /// Creates a monitor. Staircase boundaries are one-sided; combining one
    /// with a two-sided config is rejected, and the config horizon must
    /// match the staircase's total event count.
    pub fn new(cfg: &TestConfig, boundary: Boundary) -> Result<Self> {
        cfg.validate()?;
        let (sidedness, horizon) = match &boundary {
            Boundary::Constant(c) => (c.sidedness, cfg.horizon_events),
            Boundary::Staircase(s) => {
                if cfg.sidedness == Sidedness::TwoSided {
                    return Err(Error::Domain(
                        "staircase boundaries are one-sided; two-sided monitoring is not supported"
                            .into(),
                    ));
                }
                let total = *s.period_end_indices.last().ok_or_else(|| {
                    Error::Domain("staircase boundary has no periods".into())
                })?;
                if total != cfg.horizon_events {
                    return Err(Error::Domain(format!(
                        "staircase covers {total} events but the config horizon is {}",
                        cfg.horizon_events
                    )));
                }
                (Sidedness::OneSided, total)
            }
        };
        Ok(MonitorState {
            n: 0,
            running_sum: 0.0,
            running_max: f64::NEG_INFINITY,
            detected_at: None,
            boundary,
            sidedness,
            horizon,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn running_sum(&self) -> f64 {
        self.running_sum
    }

    /// Max of `S_m` (one-sided) or `|S_m|` (two-sided) over steps so far.
    pub fn running_max(&self) -> f64 {
        self.running_max
    }

    pub fn detected_at(&self) -> Option<u64> {
        self.detected_at
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    /// Threshold in force for step `n` (1-based).
    pub fn threshold_at(&self, n: u64) -> f64 {
        match &self.boundary {
            Boundary::Constant(c) => c.threshold,
            Boundary::Staircase(s) => {
                let k = s.period_end_indices.partition_point(|&end| end < n);
                s.thresholds[k.min(s.thresholds.len() - 1)]
            }
        }
    }

    /// Consumes one event: updates `S_n`, compares against the boundary, and
    /// returns the (sticky) decision.
    pub fn step(&mut self, event: &Event) -> Result<Decision> {
        if self.n >= self.horizon {
            return Err(Error::Usage(format!(
                "monitor horizon of {} events exhausted",
                self.horizon
            )));
        }
        let inc = increment_from_event(event)?;
        self.n += 1;
        self.running_sum += inc.value();
        let stat = match self.sidedness {
            Sidedness::OneSided => self.running_sum,
            Sidedness::TwoSided => self.running_sum.abs(),
        };
        if stat > self.running_max {
            self.running_max = stat;
        }
        if self.detected_at.is_none() && stat > self.threshold_at(self.n) {
            self.detected_at = Some(self.n);
        }
        Ok(if self.detected_at.is_some() {
            Decision::Flag
        } else {
            Decision::Continue
        })
    }
}

/// Result of replaying a full stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub detected_at: Option<u64>,
    pub n_processed: u64,
    pub final_s: f64,
}

/// Checks event timestamps are nondecreasing. Strict mode errors with the
/// offending position; lenient mode reports how many inversions it saw.
pub fn validate_event_order(events: &[Event], mode: OrderingMode) -> Result<u64> {
    let mut inversions = 0;
    for (i, pair) in events.windows(2).enumerate() {
        if pair[1].timestamp < pair[0].timestamp {
            match mode {
                OrderingMode::Strict => {
                    return Err(Error::Data(format!(
                        "events out of order at position {} (event index {})",
                        i + 2,
                        pair[1].index
                    )));
                }
                OrderingMode::Lenient => inversions += 1,
            }
        }
    }
    Ok(inversions)
}

/// Replays a time-ordered stream through [`MonitorState::step`].
pub fn run_stream(
    events: &[Event],
    cfg: &TestConfig,
    boundary: Boundary,
    ordering: OrderingMode,
) -> Result<MonitorReport> {
    validate_event_order(events, ordering)?;
    let mut state = MonitorState::new(cfg, boundary)?;
    for event in events {
        state.step(event)?;
    }
    Ok(MonitorReport {
        detected_at: state.detected_at(),
        n_processed: state.n(),
        final_s: state.running_sum(),
    })
}

/// How a variance estimate was formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMethod {
    Iid,
    ClusterRobust,
}

/// An estimate of `V_N = var(S_N) / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub value: f64,
    pub method: VarianceMethod,
    pub n_events: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_clusters: Option<u64>,
}

/// Sample variance of the increments (Bessel-corrected), which scales to
/// `var(S_N)` under independence.
pub fn estimate_variance_iid(increments: &[f64]) -> Result<VarianceEstimate> {
    let n = increments.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "variance estimation needs at least 2 increments, got {n}"
        )));
    }
    let mean = increments.iter().sum::<f64>() / n as f64;
    let ss: f64 = increments.iter().map(|x| (x - mean) * (x - mean)).sum();
    let min = increments.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = increments.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max || !(ss > 0.0) {
        return Err(Error::DegenerateVariance(
            "all increments are equal; no variance to estimate".into(),
        ));
    }
    Ok(VarianceEstimate {
        value: ss / (n as f64 - 1.0),
        method: VarianceMethod::Iid,
        n_events: n as u64,
        n_clusters: None,
    })
}

/// Cluster-robust estimate: demeaned increments are summed within each
/// subject and the squared cluster sums are averaged,
/// `V = (1/N) * sum_g (sum_{i in g} (x_i - mean))^2`. Reduces to the biased
/// iid estimator when every cluster holds one event.
pub fn estimate_variance_cluster_robust(events: &[Event]) -> Result<VarianceEstimate> {
    let n = events.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "variance estimation needs at least 2 events, got {n}"
        )));
    }
    let mut increments = Vec::with_capacity(n);
    for e in events {
        increments.push(increment_from_event(e)?.value());
    }
    let mean = increments.iter().sum::<f64>() / n as f64;
    let mut cluster_sums: BTreeMap<&str, f64> = BTreeMap::new();
    for (e, x) in events.iter().zip(&increments) {
        *cluster_sums.entry(e.subject_id.as_str()).or_insert(0.0) += x - mean;
    }
    if cluster_sums.len() < 2 {
        return Err(Error::DegenerateVariance(
            "cluster-robust estimation needs at least 2 subjects".into(),
        ));
    }
    let value = cluster_sums.values().map(|s| s * s).sum::<f64>() / n as f64;
    if !(value > 0.0) {
        return Err(Error::DegenerateVariance(
            "cluster sums cancel exactly; no variance to estimate".into(),
        ));
    }
    Ok(VarianceEstimate {
        value,
        method: VarianceMethod::ClusterRobust,
        n_events: n as u64,
        n_clusters: Some(cluster_sums.len() as u64),
    })
}

fn subjects_by_group(events: &[Event]) -> Result<(Vec<String>, Vec<String>)> {
    let mut control: BTreeMap<&str, ()> = BTreeMap::new();
    let mut treatment: BTreeMap<&str, ()> = BTreeMap::new();
    let mut seen: HashMap<&str, Group> = HashMap::new();
    for e in events {
        if let Some(prev) = seen.insert(e.subject_id.as_str(), e.group) {
            if prev != e.group {
                return Err(Error::Data(format!(
                    "subject {:?} appears in both groups",
                    e.subject_id
                )));
            }
        }
        match e.group {
            Group::Control => control.insert(e.subject_id.as_str(), ()),
            Group::Treatment => treatment.insert(e.subject_id.as_str(), ()),
        };
    }
    Ok((
        control.into_keys().map(str::to_owned).collect(),
        treatment.into_keys().map(str::to_owned).collect(),
    ))
}

/// Retains a uniformly random `target_ratio` share of the larger group's
/// subjects (all-or-none per subject) and drops every event of the others.
/// Subject counts decide which group is larger; ties leave treatment as the
/// downsampled side. Deterministic for a given seed.
pub fn downsample_subjects(
    events: &[Event],
    target_ratio: f64,
    seed: u64,
) -> Result<Vec<Event>> {
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(Error::Domain(format!(
            "target ratio must lie in (0,1], got {target_ratio}"
        )));
    }
    let (control, treatment) = subjects_by_group(events)?;
    if control.is_empty() || treatment.is_empty() {
        return Err(Error::Data(
            "both groups need at least one subject to downsample".into(),
        ));
    }
    let (larger_group, mut larger) = if control.len() > treatment.len() {
        (Group::Control, control)
    } else {
        (Group::Treatment, treatment)
    };
    let keep_count = ((target_ratio * larger.len() as f64).round() as usize)
        .clamp(1, larger.len());
    if keep_count == larger.len() {
        return Ok(events.to_vec());
    }
    // Fisher-Yates over the sorted subject list keeps the choice independent
    // of input event order.
    let mut rng = crate::simharness::rng::Xoshiro256PlusPlus::from_seed(
        crate::simharness::rng::mix64(seed, 0),
    );
    for i in (1..larger.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        larger.swap(i, j);
    }
    let keep: HashSet<&str> = larger[..keep_count].iter().map(String::as_str).collect();
    Ok(events
        .iter()
        .filter(|e| e.group != larger_group || keep.contains(e.subject_id.as_str()))
        .cloned()
        .collect())
}

/// Progressive per-subject capping: a subject's events are kept while their
/// cumulative outcome stays within `cap`; the event that pushes the total
/// over the cap is dropped along with every later event of that subject.
/// `cap = +inf` is the no-op sentinel. Events must be time-ordered.
pub fn progressive_cap(events: &[Event], cap: f64) -> Result<Vec<Event>> {
    if !(cap > 0.0) {
        return Err(Error::Domain(format!("cap must be positive, got {cap}")));
    }
    if cap == f64::INFINITY {
        return Ok(events.to_vec());
    }
    let mut cum: HashMap<&str, f64> = HashMap::new();
    let mut dropped: HashSet<&str> = HashSet::new();
    let mut out = Vec::with_capacity(events.len());
    for e in events {
        if dropped.contains(e.subject_id.as_str()) {
            continue;
        }
        let total = cum.entry(e.subject_id.as_str()).or_insert(0.0);
        if *total + e.outcome > cap {
            dropped.insert(e.subject_id.as_str());
            continue;
        }
        *total += e.outcome;
        out.push(e.clone());
    }
    Ok(out)
}

/// Empirical percentile of per-subject total outcome, using the exceedance
/// rank `floor(p * M) + 1` (so 0.999 over totals 1..=1000 picks 1000).
pub fn percentile_cap_from_history(events: &[Event], percentile: f64) -> Result<f64> {
    if !(percentile > 0.0 && percentile < 1.0) {
        return Err(Error::Domain(format!(
            "percentile must lie in (0,1), got {percentile}"
        )));
    }
    if events.is_empty() {
        return Err(Error::Data("no history events to compute a cap from".into()));
    }
    let mut totals: BTreeMap<&str, f64> = BTreeMap::new();
    for e in events {
        if !e.outcome.is_finite() {
            return Err(Error::Data(format!(
                "event {} has non-finite outcome",
                e.index
            )));
        }
        *totals.entry(e.subject_id.as_str()).or_insert(0.0) += e.outcome;
    }
    let mut sorted: Vec<f64> = totals.into_values().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite totals"));
    let m = sorted.len();
    let rank = (((percentile * m as f64).floor() as usize) + 1).min(m);
    let cap = sorted[rank - 1];
    if !(cap > 0.0) {
        return Err(Error::Data(format!(
            "historical percentile cap is not positive: {cap}"
        )));
    }
    Ok(cap)
}
