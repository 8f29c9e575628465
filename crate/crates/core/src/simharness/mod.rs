//! Deterministic Monte-Carlo benchmark engine.
//!
//! Each replication draws `N` control/treatment observation pairs from a
//! scenario distribution, forms the increments `X_i = Y_i^c - Y_i^t`, and
//! replays every method's decision rule over the resulting running sum. A
//! replication's draws are a pure function of `(base_seed, rep_index)`, so
//! cells can be recomputed in isolation and the emitted CSV is byte-stable.
//!
//! The simulated effect raises the treatment side, so one-sided rules watch
//! that direction (the mirror image of the production monitor, which
//! watches for the metric the platform cares about degrading). All methods
//! reduce to a per-event threshold schedule on the running sum, which keeps
//! a 100k-replication grid within seconds.

pub mod levy;
pub mod rng;
pub mod validation;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::boundaries::{
    self, constant_boundary, staircase_boundaries, Sidedness, StaircasePlan, TestConfig,
};
use crate::error::{Error, Result};
use crate::kv;
use rng::{mix64, Xoshiro256PlusPlus};

/// Observation-generating process for one scenario. The treatment arm gets
/// its location/scale parameter multiplied by `(1 + effect)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioDistribution {
    Normal { mean: f64, sd: f64 },
    StudentT { df: f64, shift: f64 },
    Gamma { shape: f64, scale: f64 },
}

impl ScenarioDistribution {
    /// The benchmark defaults: normal(1,1), t(3) shifted by sqrt(3),
    /// gamma(1, 2).
    pub fn default_normal() -> Self {
        ScenarioDistribution::Normal { mean: 1.0, sd: 1.0 }
    }

    pub fn default_student_t() -> Self {
        ScenarioDistribution::StudentT {
            df: 3.0,
            shift: 3.0_f64.sqrt(),
        }
    }

    pub fn default_gamma() -> Self {
        ScenarioDistribution::Gamma {
            shape: 1.0,
            scale: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ScenarioDistribution::Normal { sd, .. } if !(sd > 0.0) => Err(Error::Domain(
                format!("normal sd must be positive, got {sd}"),
            )),
            ScenarioDistribution::StudentT { df, .. } if !(df > 2.0) => Err(Error::Domain(
                format!("t degrees of freedom must exceed 2, got {df}"),
            )),
            ScenarioDistribution::Gamma { shape, scale } if !(shape > 0.0 && scale > 0.0) => {
                Err(Error::Domain(format!(
                    "gamma parameters must be positive, got shape {shape}, scale {scale}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Variance of one increment `X = Y^c - Y^t` under the null.
    pub fn null_increment_variance(&self) -> f64 {
        match *self {
            ScenarioDistribution::Normal { sd, .. } => 2.0 * sd * sd,
            ScenarioDistribution::StudentT { df, .. } => 2.0 * df / (df - 2.0),
            ScenarioDistribution::Gamma { shape, scale } => 2.0 * shape * scale * scale,
        }
    }

    #[inline]
    fn sample_noise(&self, rng: &mut Xoshiro256PlusPlus) -> f64 {
        match *self {
            ScenarioDistribution::Normal { .. } => rng.normal(),
            ScenarioDistribution::StudentT { df, .. } => rng.student_t(df),
            ScenarioDistribution::Gamma { shape, .. } => rng.gamma(shape, 1.0),
        }
    }

    /// Turns a standardized noise pair into observed outcomes under `effect`.
    #[inline]
    fn pair_from_noise(&self, effect: f64, noise_c: f64, noise_t: f64) -> (f64, f64) {
        match *self {
            ScenarioDistribution::Normal { mean, sd } => {
                (mean + sd * noise_c, mean * (1.0 + effect) + sd * noise_t)
            }
            ScenarioDistribution::StudentT { shift, .. } => {
                (shift + noise_c, shift * (1.0 + effect) + noise_t)
            }
            ScenarioDistribution::Gamma { scale, .. } => {
                (scale * noise_c, scale * (1.0 + effect) * noise_t)
            }
        }
    }
}

/// Draws one (control, treatment) outcome pair under the scenario with the
/// given effect size.
pub fn sample_scenario(
    dist: &ScenarioDistribution,
    effect: f64,
    rng: &mut Xoshiro256PlusPlus,
) -> (f64, f64) {
    let noise_c = dist.sample_noise(rng);
    let noise_t = dist.sample_noise(rng);
    dist.pair_from_noise(effect, noise_c, noise_t)
}

/// A sequential decision rule under benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Yeast,
    PYeast { periods: u32 },
    Msprt { phi: f64 },
    Gavi { rho_numerator: f64 },
    Bonferroni,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fn trim(x: f64) -> String {
            if x.fract() == 0.0 && x.abs() < 1e15 {
                format!("{}", x as i64)
            } else {
                format!("{x}")
            }
        }
        match self {
            Method::Yeast => write!(f, "yeast"),
            Method::PYeast { periods } => write!(f, "pyeast{periods}"),
            Method::Msprt { phi } => write!(f, "msprt{}", trim(*phi)),
            Method::Gavi { rho_numerator } => write!(f, "gavi{}", trim(*rho_numerator)),
            Method::Bonferroni => write!(f, "bonferroni"),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "yeast" {
            return Ok(Method::Yeast);
        }
        if s == "bonferroni" {
            return Ok(Method::Bonferroni);
        }
        if let Some(rest) = s.strip_prefix("pyeast") {
            let periods: u32 = rest
                .parse()
                .map_err(|_| Error::Usage(format!("bad pyeast period count in {s:?}")))?;
            return Ok(Method::PYeast { periods });
        }
        for prefix in ["msprtphi", "msprt"] {
            if let Some(rest) = s.strip_prefix(prefix) {
                let phi: f64 = rest
                    .parse()
                    .map_err(|_| Error::Usage(format!("bad msprt tuning value in {s:?}")))?;
                return Ok(Method::Msprt { phi });
            }
        }
        if let Some(rest) = s.strip_prefix("gavi") {
            let rho_numerator: f64 = rest
                .parse()
                .map_err(|_| Error::Usage(format!("bad gavi tuning value in {s:?}")))?;
            return Ok(Method::Gavi { rho_numerator });
        }
        Err(Error::Usage(format!(
            "unknown method {s:?}; valid: yeast, pyeast<K>, msprt<phi>, gavi<num>, bonferroni"
        )))
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Continuous checks after every event, or a fixed set of equally spaced
/// checkpoint counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimMode {
    Continuous,
    Discrete { check_counts: Vec<u32> },
}

impl SimMode {
    fn label(&self) -> &'static str {
        match self {
            SimMode::Continuous => "continuous",
            SimMode::Discrete { .. } => "discrete",
        }
    }
}

/// One benchmark run: scenario, effect grid, replication count, seed, and
/// the methods under comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub scenario: ScenarioDistribution,
    pub n_per_group: u32,
    pub effect_sizes: Vec<f64>,
    pub replications: u64,
    pub base_seed: u64,
    pub alpha: f64,
    pub sidedness: Sidedness,
    pub methods: Vec<Method>,
    pub mode: SimMode,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.n_per_group < 1 {
            return Err(Error::Domain("n_per_group must be >= 1".into()));
        }
        if self.effect_sizes.is_empty() {
            return Err(Error::Domain("effect grid must be nonempty".into()));
        }
        if self.replications < 1 {
            return Err(Error::Domain("replications must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::Domain("method list must be nonempty".into()));
        }
        if let SimMode::Discrete { check_counts } = &self.mode {
            if check_counts.is_empty() {
                return Err(Error::Domain("discrete mode needs check counts".into()));
            }
            for &c in check_counts {
                if c < 1 {
                    return Err(Error::Domain("check counts must be >= 1".into()));
                }
                if c > self.n_per_group {
                    return Err(Error::Usage(format!(
                        "check count {c} exceeds the {} events per replication",
                        self.n_per_group
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parses the scenario/grid config format:
    ///
    /// ```text
    /// scenario=normal            # normal | student_t | gamma
    /// n=500
    /// effects=0.0,0.1,0.2,0.3,0.4
    /// reps=100000
    /// seed=8163
    /// alpha=0.05
    /// sided=one                  # one | two
    /// methods=yeast,pyeast7,msprt25,gavi500,bonferroni
    /// mode=continuous            # continuous | discrete
    /// checks=14,28,42,56         # discrete mode only
    /// # optional scenario parameters with benchmark defaults:
    /// # normal_mean, normal_sd, t_df, t_shift, gamma_shape, gamma_scale
    /// ```
    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut scenario_kind = "normal".to_string();
        let mut normal_mean = 1.0;
        let mut normal_sd = 1.0;
        let mut t_df = 3.0;
        let mut t_shift = 3.0_f64.sqrt();
        let mut gamma_shape = 1.0;
        let mut gamma_scale = 2.0;
        let mut n: u64 = 500;
        let mut effects = vec![0.0];
        let mut reps: u64 = 10_000;
        let mut seed: Option<u64> = None;
        let mut alpha = 0.05;
        let mut sidedness = Sidedness::OneSided;
        let mut methods = vec![Method::Yeast];
        let mut mode_kind = "continuous".to_string();
        let mut checks: Vec<u64> = vec![];
        for (key, value) in kv::parse_key_values(text)? {
            match key.as_str() {
                "scenario" => scenario_kind = value,
                "normal_mean" => normal_mean = kv::parse_f64(&key, &value)?,
                "normal_sd" => normal_sd = kv::parse_f64(&key, &value)?,
                "t_df" => t_df = kv::parse_f64(&key, &value)?,
                "t_shift" => t_shift = kv::parse_f64(&key, &value)?,
                "gamma_shape" => gamma_shape = kv::parse_f64(&key, &value)?,
                "gamma_scale" => gamma_scale = kv::parse_f64(&key, &value)?,
                "n" => n = kv::parse_u64(&key, &value)?,
                "effects" => effects = kv::parse_f64_list(&key, &value)?,
                "reps" => reps = kv::parse_u64(&key, &value)?,
                "seed" => seed = Some(kv::parse_u64(&key, &value)?),
                "alpha" => alpha = kv::parse_f64(&key, &value)?,
                "sided" => sidedness = value.parse()?,
                "methods" => {
                    methods = value
                        .split(',')
                        .map(|m| m.trim().parse())
                        .collect::<Result<Vec<Method>>>()?;
                }
                "mode" => mode_kind = value,
                "checks" => checks = kv::parse_u64_list(&key, &value)?,
                other => return Err(Error::Data(format!("unknown config key {other:?}"))),
            }
        }
        let scenario = match scenario_kind.as_str() {
            "normal" => ScenarioDistribution::Normal {
                mean: normal_mean,
                sd: normal_sd,
            },
            "student_t" | "t" => ScenarioDistribution::StudentT {
                df: t_df,
                shift: t_shift,
            },
            "gamma" => ScenarioDistribution::Gamma {
                shape: gamma_shape,
                scale: gamma_scale,
            },
            other => return Err(Error::Data(format!("unknown scenario {other:?}"))),
        };
        let mode = match mode_kind.as_str() {
            "continuous" => SimMode::Continuous,
            "discrete" => {
                if checks.is_empty() {
                    return Err(Error::Data("discrete mode needs checks=...".into()));
                }
                SimMode::Discrete {
                    check_counts: checks.iter().map(|&c| c as u32).collect(),
                }
            }
            other => return Err(Error::Data(format!("unknown mode {other:?}"))),
        };
        let cfg = SimConfig {
            scenario,
            n_per_group: n as u32,
            effect_sizes: effects,
            replications: reps,
            base_seed: seed.ok_or_else(|| Error::Data("config is missing seed=".into()))?,
            alpha,
            sidedness,
            methods,
            mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One cell of the benchmark grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub method: String,
    pub effect: f64,
    pub mode: String,
    pub check_count: u32,
    pub detection_rate: f64,
    pub std_error: f64,
    pub mean_savings: f64,
    pub replications: u64,
    pub seed: u64,
    pub mean_savings_detected: f64,
}

impl Serialize for SimResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("SimResult", 10)?;
        s.serialize_field("method", &self.method)?;
        s.serialize_field("effect", &self.effect)?;
        s.serialize_field("mode", &self.mode)?;
        s.serialize_field("check_count", &self.check_count)?;
        s.serialize_field("detection_rate", &self.detection_rate)?;
        s.serialize_field("std_error", &self.std_error)?;
        s.serialize_field("mean_savings", &self.mean_savings)?;
        s.serialize_field("replications", &self.replications)?;
        s.serialize_field("seed", &self.seed)?;
        s.serialize_field("mean_savings_detected", &self.mean_savings_detected)?;
        s.end()
    }
}

/// Sample/time saved by stopping at `detection_index` out of `n_total`
/// events: `1 - index/n_total`, or 0 without a detection.
pub fn savings(detection_index: Option<u64>, n_total: u64) -> f64 {
    match detection_index {
        Some(idx) => 1.0 - idx as f64 / n_total as f64,
        None => 0.0,
    }
}

/// A decision rule lowered to per-event thresholds on the running sum.
#[derive(Debug, Clone)]
pub(crate) struct MethodSchedule {
    thresholds: Vec<f64>,
    sidedness: Sidedness,
}

/// Builds the threshold schedule for `method` over `n` events with
/// per-event null variance `v`. `checks` is the number of significance
/// checks the run will perform (it parameterizes the Bonferroni correction).
///
/// One-sided mSPRT and GAVI double alpha inside their two-sided boundary
/// constructions, spending the whole budget on the monitored side.
pub(crate) fn build_schedule(
    method: &Method,
    n: u32,
    checks: u32,
    alpha: f64,
    sidedness: Sidedness,
    v: f64,
) -> Result<MethodSchedule> {
    let one_sided_alpha = |alpha: f64| -> Result<f64> {
        let doubled = 2.0 * alpha;
        if doubled >= 1.0 {
            return Err(Error::Domain(format!(
                "one-sided alpha {alpha} leaves no room after doubling"
            )));
        }
        Ok(doubled)
    };
    let thresholds = match method {
        Method::Yeast => {
            let cfg = TestConfig {
                alpha,
                sidedness,
                horizon_events: u64::from(n),
                variance_scaled: v,
            };
            let b = constant_boundary(&cfg)?;
            vec![b.threshold; n as usize]
        }
        Method::PYeast { periods } => {
            if sidedness == Sidedness::TwoSided {
                return Err(Error::Domain(
                    "the staircase boundary is one-sided; run pyeast with sided=one".into(),
                ));
            }
            let plan = StaircasePlan::equal_periods(u64::from(n), *periods, v, 0.01)?;
            let sb = staircase_boundaries(&plan, alpha)?;
            let mut out = Vec::with_capacity(n as usize);
            let mut k = 0;
            for i in 1..=u64::from(n) {
                if i > sb.period_end_indices[k] {
                    k += 1;
                }
                out.push(sb.thresholds[k]);
            }
            out
        }
        Method::Msprt { phi } => {
            if !(*phi > 0.0) {
                return Err(Error::Domain(format!(
                    "msprt tuning value must be positive, got {phi}"
                )));
            }
            let eff_alpha = match sidedness {
                Sidedness::OneSided => one_sided_alpha(alpha)?,
                Sidedness::TwoSided => alpha,
            };
            // mixture variance scales inversely with the tuning value
            let mixture = v / phi;
            (1..=u64::from(n))
                .map(|i| boundaries::msprt_sum_threshold(i, v, mixture, eff_alpha))
                .collect::<Result<Vec<f64>>>()?
        }
        Method::Gavi { rho_numerator } => {
            let eff_alpha = match sidedness {
                Sidedness::OneSided => one_sided_alpha(alpha)?,
                Sidedness::TwoSided => alpha,
            };
            (1..=u64::from(n))
                .map(|i| boundaries::gavi_boundary(i, v, *rho_numerator, eff_alpha))
                .collect::<Result<Vec<f64>>>()?
        }
        Method::Bonferroni => (1..=u64::from(n))
            .map(|i| boundaries::bonferroni_threshold(alpha, u64::from(checks), i, v, sidedness))
            .collect::<Result<Vec<f64>>>()?,
    };
    Ok(MethodSchedule {
        thresholds,
        sidedness,
    })
}

/// 1-based indices of `checks` equally spaced significance checkpoints.
pub(crate) fn checkpoint_indices(n: u32, checks: u32) -> Vec<u32> {
    (1..=checks)
        .map(|j| (f64::from(j) * f64::from(n) / f64::from(checks)).round() as u32)
        .collect()
}

fn checkpoint_mask(n: u32, checks: u32) -> Option<Vec<bool>> {
    if checks == n {
        return None;
    }
    let mut mask = vec![false; n as usize];
    for idx in checkpoint_indices(n, checks) {
        mask[(idx - 1) as usize] = true;
    }
    Some(mask)
}

/// First 1-based index where the running sum of `xs` crosses the schedule.
/// The one-sided rule watches the treatment side (`-S_n`), matching the
/// direction the simulated effect moves the sum.
pub(crate) fn first_crossing(
    xs: &[f64],
    sched: &MethodSchedule,
    mask: Option<&[bool]>,
) -> Option<u32> {
    let mut s = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        s += x;
        if let Some(m) = mask {
            if !m[i] {
                continue;
            }
        }
        let stat = match sched.sidedness {
            Sidedness::OneSided => -s,
            Sidedness::TwoSided => s.abs(),
        };
        if stat > sched.thresholds[i] {
            return Some(i as u32 + 1);
        }
    }
    None
}

fn fill_increments(
    dist: &ScenarioDistribution,
    effect: f64,
    noise_c: &[f64],
    noise_t: &[f64],
    xs: &mut [f64],
) {
    for i in 0..xs.len() {
        let (y_c, y_t) = dist.pair_from_noise(effect, noise_c[i], noise_t[i]);
        xs[i] = y_c - y_t;
    }
}

fn fill_noise(dist: &ScenarioDistribution, rng: &mut Xoshiro256PlusPlus, noise_c: &mut [f64], noise_t: &mut [f64]) {
    for i in 0..noise_c.len() {
        noise_c[i] = dist.sample_noise(rng);
        noise_t[i] = dist.sample_noise(rng);
    }
}

/// Runs one replication of one method: returns whether it detected and the
/// 1-based detection index. Deterministic in `(base_seed, rep_index)`.
pub fn simulate_replication(
    cfg: &SimConfig,
    effect: f64,
    rep_index: u64,
    method: &Method,
) -> Result<(bool, Option<u32>)> {
    cfg.validate()?;
    if rep_index >= cfg.replications {
        return Err(Error::Usage(format!(
            "rep_index {rep_index} outside 0..{}",
            cfg.replications
        )));
    }
    let n = cfg.n_per_group;
    let checks = match &cfg.mode {
        SimMode::Continuous => n,
        SimMode::Discrete { check_counts } => *check_counts.first().unwrap(),
    };
    let sched = build_schedule(
        method,
        n,
        checks,
        cfg.alpha,
        cfg.sidedness,
        cfg.scenario.null_increment_variance(),
    )?;
    let mask = checkpoint_mask(n, checks);
    let mut rng = Xoshiro256PlusPlus::from_seed(mix64(cfg.base_seed, rep_index));
    let mut noise_c = vec![0.0; n as usize];
    let mut noise_t = vec![0.0; n as usize];
    fill_noise(&cfg.scenario, &mut rng, &mut noise_c, &mut noise_t);
    let mut xs = vec![0.0; n as usize];
    fill_increments(&cfg.scenario, effect, &noise_c, &noise_t, &mut xs);
    let idx = first_crossing(&xs, &sched, mask.as_deref());
    Ok((idx.is_some(), idx))
}

#[derive(Default, Clone, Copy)]
struct CellAccum {
    detections: u64,
    savings_sum: f64,
}

/// Runs the full methods x check-counts x effects grid and aggregates
/// detection rates and savings. Every method sees the same replication
/// draws.
pub fn run_experiment_grid(cfg: &SimConfig) -> Result<Vec<SimResult>> {
    cfg.validate()?;
    let n = cfg.n_per_group;
    let v = cfg.scenario.null_increment_variance();
    let check_counts: Vec<u32> = match &cfg.mode {
        SimMode::Continuous => vec![n],
        SimMode::Discrete { check_counts } => check_counts.clone(),
    };
    let n_methods = cfg.methods.len();
    let n_checks = check_counts.len();
    let n_effects = cfg.effect_sizes.len();

    let mut schedules = Vec::with_capacity(n_methods * n_checks);
    for method in &cfg.methods {
        for &checks in &check_counts {
            schedules.push(build_schedule(method, n, checks, cfg.alpha, cfg.sidedness, v)?);
        }
    }
    let masks: Vec<Option<Vec<bool>>> = check_counts
        .iter()
        .map(|&c| checkpoint_mask(n, c))
        .collect();

    let mut cells = vec![CellAccum::default(); n_methods * n_checks * n_effects];
    let mut noise_c = vec![0.0; n as usize];
    let mut noise_t = vec![0.0; n as usize];
    let mut xs = vec![0.0; n as usize];
    for rep in 0..cfg.replications {
        let mut rng = Xoshiro256PlusPlus::from_seed(mix64(cfg.base_seed, rep));
        fill_noise(&cfg.scenario, &mut rng, &mut noise_c, &mut noise_t);
        for (ei, &effect) in cfg.effect_sizes.iter().enumerate() {
            fill_increments(&cfg.scenario, effect, &noise_c, &noise_t, &mut xs);
            for mi in 0..n_methods {
                for ci in 0..n_checks {
                    let sched = &schedules[mi * n_checks + ci];
                    let idx = first_crossing(&xs, sched, masks[ci].as_deref());
                    let cell = &mut cells[(mi * n_checks + ci) * n_effects + ei];
                    if let Some(i) = idx {
                        cell.detections += 1;
                        cell.savings_sum += savings(Some(u64::from(i)), u64::from(n));
                    }
                }
            }
        }
    }

    let reps = cfg.replications;
    let mut out = Vec::with_capacity(cells.len());
    for (mi, method) in cfg.methods.iter().enumerate() {
        for (ci, &checks) in check_counts.iter().enumerate() {
            for (ei, &effect) in cfg.effect_sizes.iter().enumerate() {
                let cell = &cells[(mi * n_checks + ci) * n_effects + ei];
                let rate = cell.detections as f64 / reps as f64;
                out.push(SimResult {
                    method: method.to_string(),
                    effect,
                    mode: cfg.mode.label().to_string(),
                    check_count: checks,
                    detection_rate: rate,
                    std_error: (rate * (1.0 - rate) / reps as f64).sqrt(),
                    mean_savings: cell.savings_sum / reps as f64,
                    replications: reps,
                    seed: cfg.base_seed,
                    mean_savings_detected: if cell.detections > 0 {
                        cell.savings_sum / cell.detections as f64
                    } else {
                        0.0
                    },
                });
            }
        }
    }
    Ok(out)
}

/// Discrete-mode entry point: significance is evaluated only at the
/// checkpoint indices. `check_count = n` reproduces continuous monitoring
/// exactly.
pub fn run_discrete_mode(cfg: &SimConfig) -> Result<Vec<SimResult>> {
    if !matches!(cfg.mode, SimMode::Discrete { .. }) {
        return Err(Error::Usage(
            "run_discrete_mode needs a config with mode=discrete".into(),
        ));
    }
    run_experiment_grid(cfg)
}

/// Renders grid results in the documented CSV schema.
pub fn results_to_csv(results: &[SimResult]) -> String {
    let mut out = String::from(
        "method,effect,mode,check_count,detection_rate,std_error,mean_savings,replications,seed,mean_savings_detected\n",
    );
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{},{},{:.6}\n",
            r.method,
            r.effect,
            r.mode,
            r.check_count,
            r.detection_rate,
            r.std_error,
            r.mean_savings,
            r.replications,
            r.seed,
            r.mean_savings_detected
        ));
    }
    out
}

/// Full-config manifest emitted next to every results file.
pub fn manifest_json(cfg: &SimConfig) -> Result<String> {
    #[derive(Serialize)]
    struct Manifest<'a> {
        version: &'static str,
        config: &'a SimConfig,
    }
    serde_json::to_string_pretty(&Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
    })
    .map_err(|e| Error::Data(format!("manifest serialization failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SimConfig {
        SimConfig {
            scenario: ScenarioDistribution::default_normal(),
            n_per_group: 100,
            effect_sizes: vec![0.0, 0.3],
            replications: 200,
            base_seed: 8163,
            alpha: 0.05,
            sidedness: Sidedness::OneSided,
            methods: vec![Method::Yeast, Method::Bonferroni],
            mode: SimMode::Continuous,
        }
    }

    #[test]
    fn method_names_round_trip() {
        let methods = [
            Method::Yeast,
            Method::PYeast { periods: 7 },
            Method::Msprt { phi: 25.0 },
            Method::Gavi {
                rho_numerator: 500.0,
            },
            Method::Bonferroni,
        ];
        for m in methods {
            let name = m.to_string();
            let parsed: Method = name.parse().unwrap();
            assert_eq!(parsed, m, "{name}");
        }
        assert_eq!(
            "msprtphi100".parse::<Method>().unwrap(),
            Method::Msprt { phi: 100.0 }
        );
        assert!("warp5".parse::<Method>().is_err());
    }

    #[test]
    fn scenario_validation_and_variances() {
        assert!(ScenarioDistribution::Normal { mean: 0.0, sd: 0.0 }
            .validate()
            .is_err());
        assert!(ScenarioDistribution::StudentT { df: 2.0, shift: 0.0 }
            .validate()
            .is_err());
        assert_eq!(
            ScenarioDistribution::default_normal().null_increment_variance(),
            2.0
        );
        assert_eq!(
            ScenarioDistribution::default_student_t().null_increment_variance(),
            6.0
        );
        assert_eq!(
            ScenarioDistribution::default_gamma().null_increment_variance(),
            8.0
        );
    }

    #[test]
    fn scenario_sampling_means() {
        // effect 0 leaves both arms identically distributed; the effect
        // shifts the treatment mean multiplicatively
        let dist = ScenarioDistribution::default_normal();
        let mut rng = Xoshiro256PlusPlus::from_seed(1);
        let n = 1_000_000;
        let (mut sum_c, mut sum_t) = (0.0, 0.0);
        for _ in 0..n {
            let (c, t) = sample_scenario(&dist, 0.2, &mut rng);
            sum_c += c;
            sum_t += t;
        }
        assert!((sum_c / n as f64 - 1.0).abs() <= 0.01);
        assert!((sum_t / n as f64 - 1.2).abs() <= 0.01);
    }

    #[test]
    fn gamma_scenario_matches_exponential_cdf() {
        // shape 1: empirical CDF of the control draw against 1 - exp(-y/2)
        let dist = ScenarioDistribution::default_gamma();
        let mut rng = Xoshiro256PlusPlus::from_seed(2024);
        let n = 1_000_000;
        let mut draws: Vec<f64> = Vec::with_capacity(n);
        for _ in 0..n {
            let (c, _) = sample_scenario(&dist, 0.0, &mut rng);
            draws.push(c);
        }
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, &y) in draws.iter().enumerate() {
            let emp = (i + 1) as f64 / n as f64;
            let theo = 1.0 - (-y / 2.0).exp();
            ks = ks.max((emp - theo).abs());
        }
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn replication_is_deterministic() {
        let cfg = small_cfg();
        let a = simulate_replication(&cfg, 0.0, 7, &Method::Yeast).unwrap();
        let b = simulate_replication(&cfg, 0.0, 7, &Method::Yeast).unwrap();
        assert_eq!(a, b);
        assert!(simulate_replication(&cfg, 0.0, 500, &Method::Yeast).is_err());
    }

    #[test]
    fn overwhelming_drift_detects_early() {
        let cfg = small_cfg();
        let (detected, idx) = simulate_replication(&cfg, 10.0, 3, &Method::Yeast).unwrap();
        assert!(detected);
        assert!(idx.unwrap() < cfg.n_per_group / 10);
    }

    #[test]
    fn savings_examples() {
        assert_eq!(savings(Some(50), 500), 0.9);
        assert_eq!(savings(None, 500), 0.0);
        assert_eq!(savings(Some(500), 500), 0.0);
    }

    #[test]
    fn grid_matches_per_replication_calls() {
        let cfg = small_cfg();
        let results = run_experiment_grid(&cfg).unwrap();
        // recompute the yeast/effect-0.3 cell by replaying single reps
        let mut detections = 0u64;
        for rep in 0..cfg.replications {
            let (d, _) = simulate_replication(&cfg, 0.3, rep, &Method::Yeast).unwrap();
            detections += u64::from(d);
        }
        let cell = results
            .iter()
            .find(|r| r.method == "yeast" && r.effect == 0.3)
            .unwrap();
        assert_eq!(cell.detection_rate, detections as f64 / cfg.replications as f64);
        assert_eq!(results.len(), 4);
    }

    #[test]
    fn grid_is_byte_deterministic() {
        let cfg = small_cfg();
        let a = results_to_csv(&run_experiment_grid(&cfg).unwrap());
        let b = results_to_csv(&run_experiment_grid(&cfg).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("method,effect,mode,check_count,detection_rate"));
    }

    #[test]
    fn discrete_with_all_checks_reproduces_continuous() {
        let mut cfg = small_cfg();
        let continuous = run_experiment_grid(&cfg).unwrap();
        cfg.mode = SimMode::Discrete {
            check_counts: vec![cfg.n_per_group],
        };
        let discrete = run_discrete_mode(&cfg).unwrap();
        for (c, d) in continuous.iter().zip(&discrete) {
            assert_eq!(c.detection_rate, d.detection_rate);
            assert_eq!(c.mean_savings, d.mean_savings);
        }
    }

    #[test]
    fn discrete_mode_validations() {
        let mut cfg = small_cfg();
        assert!(run_discrete_mode(&cfg).is_err());
        cfg.mode = SimMode::Discrete {
            check_counts: vec![cfg.n_per_group + 1],
        };
        assert!(matches!(run_experiment_grid(&cfg).unwrap_err(), Error::Usage(_)));
    }

    #[test]
    fn checkpoint_spacing() {
        assert_eq!(checkpoint_indices(500, 5), vec![100, 200, 300, 400, 500]);
        let idx14 = checkpoint_indices(500, 14);
        assert_eq!(idx14.len(), 14);
        assert_eq!(*idx14.last().unwrap(), 500);
        let all = checkpoint_indices(500, 500);
        assert_eq!(all, (1..=500).collect::<Vec<u32>>());
    }

    #[test]
    fn pyeast_two_sided_is_rejected() {
        let err = build_schedule(
            &Method::PYeast { periods: 7 },
            100,
            100,
            0.05,
            Sidedness::TwoSided,
            2.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn msprt_schedule_agrees_with_p_value_iteration() {
        // drive a path through the p-value op and through the schedule
        let (n, v, phi, alpha) = (200u32, 2.0, 25.0, 0.05);
        let sched = build_schedule(&Method::Msprt { phi }, n, n, alpha, Sidedness::TwoSided, v)
            .unwrap();
        let mut rng = Xoshiro256PlusPlus::from_seed(99);
        let mixture = v / phi;
        for _ in 0..20 {
            let mut s = 0.0;
            let mut p = 1.0;
            let mut by_p: Option<u32> = None;
            let mut by_thr: Option<u32> = None;
            for i in 1..=n {
                s += 1.4 * rng.normal() + 0.12;
                p = boundaries::msprt_p_value(p, u64::from(i), s, v, mixture).unwrap();
                if by_p.is_none() && p < alpha {
                    by_p = Some(i);
                }
                if by_thr.is_none() && s.abs() > sched.thresholds[(i - 1) as usize] {
                    by_thr = Some(i);
                }
            }
            assert_eq!(by_p, by_thr);
        }
    }

    #[test]
    fn config_text_round_trip() {
        let cfg = SimConfig::from_config_text(
            "scenario=gamma\ngamma_scale=2.0\nn=250\neffects=0.0,0.2\nreps=1000\nseed=42\nalpha=0.05\nsided=one\nmethods=yeast,msprt25\nmode=discrete\nchecks=10,25\n",
        )
        .unwrap();
        assert_eq!(cfg.n_per_group, 250);
        assert_eq!(cfg.methods.len(), 2);
        assert_eq!(
            cfg.mode,
            SimMode::Discrete {
                check_counts: vec![10, 25]
            }
        );
        assert!(SimConfig::from_config_text("scenario=normal\n").is_err()); // no seed
        assert!(SimConfig::from_config_text("seed=1\nwat=2\n").is_err());
        let manifest = manifest_json(&cfg).unwrap();
        assert!(manifest.contains("\"kind\": \"gamma\""));
        assert!(manifest.contains("\"msprt25\""));
    }
}
