//! Permutation validation on clustered data.
//!
//! Subjects are randomly reassigned to control/treatment many times; the
//! monitor is replayed over the resulting signed increments and the share
//! of replications with a detection is reported. With no treatment applied,
//! that share is a false detection rate, which is what makes this a
//! correctness check for boundary + variance-estimator combinations on data
//! with within-subject correlation.

use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};

use crate::boundaries::{Sidedness, TestConfig};
use crate::error::{Error, Result};
use crate::kv;
use crate::monitor::{Event, Group};
use crate::simharness::rng::{mix64, Xoshiro256PlusPlus};
use crate::simharness::{build_schedule, Method};

/// Synthetic stand-in for clustered production data: each subject carries a
/// persistent random effect, so its events are correlated. Outcomes are
/// `mean + a_g + e_i` with `a_g ~ N(0, corr * sd^2)` shared within the
/// subject and `e_i ~ N(0, (1-corr) * sd^2)` per event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusteredSynthConfig {
    pub n_subjects: u32,
    pub events_per_subject: EventsPerSubject,
    pub within_subject_corr: f64,
    pub outcome_mean: f64,
    pub outcome_sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventsPerSubject {
    Fixed(u32),
    UniformRange(u32, u32),
}

impl ClusteredSynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 2 {
            return Err(Error::Domain("need at least 2 subjects".into()));
        }
        if !(self.within_subject_corr >= 0.0 && self.within_subject_corr < 1.0) {
            return Err(Error::Domain(format!(
                "within-subject correlation must lie in [0,1), got {}",
                self.within_subject_corr
            )));
        }
        if !(self.outcome_sd > 0.0) {
            return Err(Error::Domain("outcome sd must be positive".into()));
        }
        match self.events_per_subject {
            EventsPerSubject::Fixed(m) if m < 1 => {
                Err(Error::Domain("events per subject must be >= 1".into()))
            }
            EventsPerSubject::UniformRange(lo, hi) if lo < 1 || hi < lo => Err(Error::Domain(
                format!("bad events-per-subject range [{lo}, {hi}]"),
            )),
            _ => Ok(()),
        }
    }

    /// Parses `key=value` synth configs:
    ///
    /// ```text
    /// n_subjects=3000
    /// events_per_subject=5        # or events_range=3,8
    /// within_corr=0.5
    /// outcome_mean=1.0
    /// outcome_sd=1.0
    /// ```
    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut cfg = ClusteredSynthConfig {
            n_subjects: 1000,
            events_per_subject: EventsPerSubject::Fixed(5),
            within_subject_corr: 0.5,
            outcome_mean: 1.0,
            outcome_sd: 1.0,
        };
        for (key, value) in kv::parse_key_values(text)? {
            match key.as_str() {
                "n_subjects" => cfg.n_subjects = kv::parse_u64(&key, &value)? as u32,
                "events_per_subject" => {
                    cfg.events_per_subject =
                        EventsPerSubject::Fixed(kv::parse_u64(&key, &value)? as u32)
                }
                "events_range" => {
                    let r = kv::parse_u64_list(&key, &value)?;
                    if r.len() != 2 {
                        return Err(Error::Data("events_range needs lo,hi".into()));
                    }
                    cfg.events_per_subject =
                        EventsPerSubject::UniformRange(r[0] as u32, r[1] as u32);
                }
                "within_corr" => cfg.within_subject_corr = kv::parse_f64(&key, &value)?,
                "outcome_mean" => cfg.outcome_mean = kv::parse_f64(&key, &value)?,
                "outcome_sd" => cfg.outcome_sd = kv::parse_f64(&key, &value)?,
                other => return Err(Error::Data(format!("unknown synth key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Generates a time-interleaved clustered event stream. Groups are assigned
/// per subject by fair coin; event order mixes subjects the way concurrent
/// traffic would.
pub fn generate_clustered_events(cfg: &ClusteredSynthConfig, seed: u64) -> Result<Vec<Event>> {
    cfg.validate()?;
    let mut rng = Xoshiro256PlusPlus::from_seed(mix64(seed, 0));
    let a_sd = cfg.outcome_sd * cfg.within_subject_corr.sqrt();
    let e_sd = cfg.outcome_sd * (1.0 - cfg.within_subject_corr).sqrt();
    // (time, subject, group, outcome) tuples, sorted into a stream below
    let mut raw: Vec<(f64, u32, Group, f64)> = Vec::new();
    for subject in 0..cfg.n_subjects {
        let a = a_sd * rng.normal();
        let group = if rng.next_u64() & 1 == 0 {
            Group::Control
        } else {
            Group::Treatment
        };
        let m = match cfg.events_per_subject {
            EventsPerSubject::Fixed(m) => m,
            EventsPerSubject::UniformRange(lo, hi) => {
                lo + (rng.next_u64() % u64::from(hi - lo + 1)) as u32
            }
        };
        for _ in 0..m {
            let outcome = cfg.outcome_mean + a + e_sd * rng.normal();
            raw.push((rng.uniform_open01(), subject, group, outcome));
        }
    }
    raw.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite times")
            .then(a.1.cmp(&b.1))
    });
    let period = chrono::Duration::days(14).num_seconds() as f64;
    Ok(raw
        .into_iter()
        .enumerate()
        .map(|(i, (time, subject, group, outcome))| Event {
            index: i as u64 + 1,
            timestamp: Utc
                .timestamp_opt(1_690_848_000 + (time * period) as i64, 0)
                .unwrap(),
            subject_id: format!("s{subject:06}"),
            group,
            outcome,
        })
        .collect())
}

/// Reassigns subjects to control/treatment `replications` times, replays
/// the monitor over each reassignment, and returns the detection rate.
/// `cfg.variance_scaled` must come from a disjoint history period.
pub fn permutation_validation(
    events: &[Event],
    replications: u64,
    seed: u64,
    cfg: &TestConfig,
    method: &Method,
) -> Result<f64> {
    cfg.validate()?;
    if replications < 1 {
        return Err(Error::Domain("replications must be >= 1".into()));
    }
    let n = events.len();
    if n as u64 > cfg.horizon_events {
        return Err(Error::Usage(format!(
            "{n} events exceed the configured horizon {}",
            cfg.horizon_events
        )));
    }
    // subject ordinals in sorted id order, for reproducible coin assignment
    let mut subject_ord: BTreeMap<&str, u32> = BTreeMap::new();
    for e in events {
        let next = subject_ord.len() as u32;
        subject_ord.entry(e.subject_id.as_str()).or_insert(next);
    }
    // BTreeMap ordering is by id, not insertion; rebuild ordinals by rank
    for (rank, (_, ord)) in subject_ord.iter_mut().enumerate() {
        *ord = rank as u32;
    }
    let n_subjects = subject_ord.len();
    if n_subjects < 2 {
        return Err(Error::Data(
            "permutation validation needs at least 2 subjects".into(),
        ));
    }
    let event_subject: Vec<u32> = events
        .iter()
        .map(|e| subject_ord[e.subject_id.as_str()])
        .collect();
    let outcomes: Vec<f64> = events.iter().map(|e| e.outcome).collect();
    if outcomes.iter().any(|y| !y.is_finite()) {
        return Err(Error::Data("events carry non-finite outcomes".into()));
    }

    let sched = build_schedule(
        method,
        n as u32,
        n as u32,
        cfg.alpha,
        cfg.sidedness,
        cfg.variance_scaled,
    )?;
    let thresholds = &sched.thresholds;

    let mut signs = vec![1.0f64; n_subjects];
    let mut detections = 0u64;
    for rep in 0..replications {
        let mut rng = Xoshiro256PlusPlus::from_seed(mix64(seed, rep));
        for s in signs.iter_mut() {
            // W = 1 (treatment) negates the outcome: X = (1 - 2W) Y
            *s = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
        }
        let mut sum = 0.0;
        for i in 0..n {
            sum += signs[event_subject[i] as usize] * outcomes[i];
            let stat = match cfg.sidedness {
                Sidedness::OneSided => sum,
                Sidedness::TwoSided => sum.abs(),
            };
            if stat > thresholds[i] {
                detections += 1;
                break;
            }
        }
    }
    Ok(detections as f64 / replications as f64)
}
