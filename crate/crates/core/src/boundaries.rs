//! Alerting boundaries and baseline decision rules.
//!
//! The constant boundary compares the running sum `S_n` against
//! `b* = z_{1-alpha/2} * sqrt(N * V_N)` (one-sided) or
//! `z_{1-alpha/4} * sqrt(N * V_N)` (two-sided, tracking `|S_n|`). The
//! staircase boundary holds one threshold per period; thresholds are
//! initialised at `z_{1-alpha/2} * sqrt(U_k)` and jointly inflated by
//! `(1 + eps)` until the convolution-based FDR bound drops below alpha.
//!
//! Baselines: the mixture sequential probability ratio test (normal mixing
//! distribution), the generalized always-valid normal-mixture boundary, and
//! per-check Bonferroni z-thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv;
use crate::statdist::{
    self, truncated_normal_convolution_cdf, QuadratureSpec,
};

/// Whether the test tracks `S_n` (one-sided) or `|S_n|` (two-sided).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

impl std::fmt::Display for Sidedness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sidedness::OneSided => write!(f, "one_sided"),
            Sidedness::TwoSided => write!(f, "two_sided"),
        }
    }
}

impl std::str::FromStr for Sidedness {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "one_sided" | "one-sided" => Ok(Sidedness::OneSided),
            "two" | "two_sided" | "two-sided" => Ok(Sidedness::TwoSided),
            other => Err(Error::Usage(format!(
                "sidedness must be 'one' or 'two', got {other:?}"
            ))),
        }
    }
}

/// Inputs of the constant-boundary test: significance level, sidedness,
/// expected number of events N, and the scaled variance estimate
/// `V_N = var(S_N) / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub sidedness: Sidedness,
    pub horizon_events: u64,
    pub variance_scaled: f64,
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if self.horizon_events < 1 {
            return Err(Error::Domain("horizon_events must be >= 1".into()));
        }
        if !(self.variance_scaled > 0.0 && self.variance_scaled.is_finite()) {
            return Err(Error::Domain(format!(
                "variance_scaled must be positive, got {}",
                self.variance_scaled
            )));
        }
        Ok(())
    }
}

/// A constant alerting threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantBoundary {
    pub threshold: f64,
    pub sidedness: Sidedness,
}

/// Computes the constant boundary for the given test configuration.
pub fn constant_boundary(cfg: &TestConfig) -> Result<ConstantBoundary> {
    cfg.validate()?;
    let level = match cfg.sidedness {
        Sidedness::OneSided => 1.0 - cfg.alpha / 2.0,
        Sidedness::TwoSided => 1.0 - cfg.alpha / 4.0,
    };
    let z = statdist::normal_quantile(level)?;
    let threshold = z * (cfg.horizon_events as f64 * cfg.variance_scaled).sqrt();
    Ok(ConstantBoundary {
        threshold,
        sidedness: cfg.sidedness,
    })
}

/// Periodization of the monitoring horizon for the staircase boundary:
/// period sizes `N_1..N_K`, cumulative variances `U_k = var(S_{N_1+..+N_k})`,
/// per-period variances `u_k`, and the inflation step `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircasePlan {
    period_sizes: Vec<u64>,
    cum_variances: Vec<f64>,
    incr_variances: Vec<f64>,
    epsilon: f64,
}

impl StaircasePlan {
    /// Builds a plan from per-period variances; cumulative variances are the
    /// prefix sums (the independent-increments regime).
    pub fn from_increments(
        period_sizes: Vec<u64>,
        incr_variances: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self> {
        let mut cum = Vec::with_capacity(incr_variances.len());
        let mut acc = 0.0;
        for &v in &incr_variances {
            acc += v;
            cum.push(acc);
        }
        Self::new(period_sizes, cum, incr_variances, epsilon)
    }

    /// Builds a plan from explicit cumulative and per-period variances.
    pub fn new(
        period_sizes: Vec<u64>,
        cum_variances: Vec<f64>,
        incr_variances: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self> {
        if period_sizes.is_empty() {
            return Err(Error::Domain("plan needs at least one period".into()));
        }
        if cum_variances.len() != period_sizes.len() || incr_variances.len() != period_sizes.len()
        {
            return Err(Error::Domain(format!(
                "plan lists must share one length: {} sizes, {} cumulative, {} incremental",
                period_sizes.len(),
                cum_variances.len(),
                incr_variances.len()
            )));
        }
        if period_sizes.iter().any(|&n| n == 0) {
            return Err(Error::Domain("period sizes must be positive".into()));
        }
        if incr_variances.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Domain("per-period variances must be positive".into()));
        }
        let mut prev = 0.0;
        for &u in &cum_variances {
            if !(u > prev && u.is_finite()) {
                return Err(Error::Domain(
                    "cumulative variances must be strictly increasing and positive".into(),
                ));
            }
            prev = u;
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!(
                "inflation step must be positive, got {epsilon}"
            )));
        }
        Ok(StaircasePlan {
            period_sizes,
            cum_variances,
            incr_variances,
            epsilon,
        })
    }

    /// Splits `n_total` events into `k` near-equal periods with a common
    /// per-event variance. Leading periods absorb the remainder.
    pub fn equal_periods(
        n_total: u64,
        k: u32,
        variance_per_event: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if k == 0 || u64::from(k) > n_total {
            return Err(Error::Domain(format!(
                "period count must lie in 1..={n_total}, got {k}"
            )));
        }
        let base = n_total / u64::from(k);
        let extra = n_total % u64::from(k);
        let sizes: Vec<u64> = (0..u64::from(k))
            .map(|i| base + u64::from(i < extra))
            .collect();
        let incr: Vec<f64> = sizes.iter().map(|&n| n as f64 * variance_per_event).collect();
        Self::from_increments(sizes, incr, epsilon)
    }

    /// Parses the plan file format:
    ///
    /// ```text
    /// period_sizes=72,71,71,72,71,71,72
    /// variance_per_event=2.0      # or incr_variances=144,142,...
    /// cum_variances=...           # optional, defaults to prefix sums
    /// epsilon=0.01                # optional
    /// ```
    pub fn from_plan_text(text: &str) -> Result<Self> {
        let mut sizes: Option<Vec<u64>> = None;
        let mut incr: Option<Vec<f64>> = None;
        let mut cum: Option<Vec<f64>> = None;
        let mut vpe: Option<f64> = None;
        let mut epsilon = 0.01;
        for (key, value) in kv::parse_key_values(text)? {
            match key.as_str() {
                "period_sizes" => sizes = Some(kv::parse_u64_list(&key, &value)?),
                "incr_variances" => incr = Some(kv::parse_f64_list(&key, &value)?),
                "cum_variances" => cum = Some(kv::parse_f64_list(&key, &value)?),
                "variance_per_event" => vpe = Some(kv::parse_f64(&key, &value)?),
                "epsilon" => epsilon = kv::parse_f64(&key, &value)?,
                other => {
                    return Err(Error::Data(format!("unknown plan key {other:?}")));
                }
            }
        }
        let sizes = sizes.ok_or_else(|| Error::Data("plan is missing period_sizes".into()))?;
        let incr = match (incr, vpe) {
            (Some(i), None) => i,
            (None, Some(v)) => sizes.iter().map(|&n| n as f64 * v).collect(),
            (None, None) => {
                return Err(Error::Data(
                    "plan needs incr_variances or variance_per_event".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(Error::Data(
                    "give either incr_variances or variance_per_event, not both".into(),
                ))
            }
        };
        match cum {
            Some(c) => Self::new(sizes, c, incr, epsilon),
            None => Self::from_increments(sizes, incr, epsilon),
        }
    }

    pub fn period_count(&self) -> usize {
        self.period_sizes.len()
    }

    pub fn period_sizes(&self) -> &[u64] {
        &self.period_sizes
    }

    pub fn cum_variances(&self) -> &[f64] {
        &self.cum_variances
    }

    pub fn incr_variances(&self) -> &[f64] {
        &self.incr_variances
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Cumulative event counts at period ends.
    pub fn period_end_indices(&self) -> Vec<u64> {
        let mut acc = 0;
        self.period_sizes
            .iter()
            .map(|&n| {
                acc += n;
                acc
            })
            .collect()
    }

    pub fn total_events(&self) -> u64 {
        self.period_sizes.iter().sum()
    }
}

/// A staircase of per-period thresholds, one-sided by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseBoundary {
    pub thresholds: Vec<f64>,
    pub period_end_indices: Vec<u64>,
}

/// Approximate false-detection-rate bound for a set of staircase thresholds:
///
/// ```text
/// 2 * (1 - Phi(b_1/sqrt(U_1)) + sum_{k=2..K} Z_k * (1 - J_k)),
/// Z_k = Phi(b_{k-1}/sqrt(U_{k-1}))
/// ```
///
/// with `J_k` the truncated-normal convolution CDF evaluated at `b_k`.
pub fn fdr_bound(plan: &StaircasePlan, thresholds: &[f64]) -> Result<f64> {
    fdr_bound_with_quad(plan, thresholds, &QuadratureSpec::default())
}

pub fn fdr_bound_with_quad(
    plan: &StaircasePlan,
    thresholds: &[f64],
    quad: &QuadratureSpec,
) -> Result<f64> {
    if thresholds.len() != plan.period_count() {
        return Err(Error::Domain(format!(
            "expected {} thresholds, got {}",
            plan.period_count(),
            thresholds.len()
        )));
    }
    if thresholds.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
        return Err(Error::Domain("thresholds must be positive".into()));
    }
    let cum = plan.cum_variances();
    let incr = plan.incr_variances();
    let mut total = 1.0 - statdist::normal_cdf(thresholds[0] / cum[0].sqrt())?;
    for k in 1..plan.period_count() {
        let z = statdist::normal_cdf(thresholds[k - 1] / cum[k - 1].sqrt())?;
        let j = truncated_normal_convolution_cdf(
            thresholds[k - 1],
            thresholds[k],
            cum[k - 1],
            incr[k],
            quad,
        )?;
        total += z * (1.0 - j);
    }
    Ok(2.0 * total)
}

/// Inflation passes allowed before giving up on the staircase search.
pub const STAIRCASE_ITERATION_CAP: u32 = 10_000;

/// Computes staircase thresholds: starts at `z_{1-alpha/2} * sqrt(U_k)` and
/// multiplies every threshold by `(1 + eps)` until [`fdr_bound`] is at most
/// `alpha`.
pub fn staircase_boundaries(plan: &StaircasePlan, alpha: f64) -> Result<StaircaseBoundary> {
    staircase_boundaries_with_quad(plan, alpha, &QuadratureSpec::default())
}

pub fn staircase_boundaries_with_quad(
    plan: &StaircasePlan,
    alpha: f64,
    quad: &QuadratureSpec,
) -> Result<StaircaseBoundary> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let z = statdist::normal_quantile(1.0 - alpha / 2.0)?;
    let mut thresholds: Vec<f64> = plan
        .cum_variances()
        .iter()
        .map(|&u| z * u.sqrt())
        .collect();
    let inflate = 1.0 + plan.epsilon();
    for _ in 0..=STAIRCASE_ITERATION_CAP {
        // small tolerance so the K=1 case, where the bound equals alpha by
        // construction, is not tipped over by roundoff
        if fdr_bound_with_quad(plan, &thresholds, quad)? <= alpha + 1e-9 {
            return Ok(StaircaseBoundary {
                thresholds,
                period_end_indices: plan.period_end_indices(),
            });
        }
        for b in &mut thresholds {
            *b *= inflate;
        }
    }
    Err(Error::Numerical(format!(
        "staircase search did not reach the target bound within {STAIRCASE_ITERATION_CAP} passes"
    )))
}

/// One step of the mixture sequential probability ratio test with a normal
/// mixing distribution of variance `mixture`: returns the always-valid
/// p-value `min(prev_p, 1/Lambda_n)` where
///
/// ```text
/// Lambda_n = sqrt(s2/(s2 + n t2)) * exp(t2 S_n^2 / (2 s2 (s2 + n t2)))
/// ```
///
/// with `s2` the per-increment outcome variance and `t2` the mixture
/// variance. The sequence starts at 1 and never increases.
pub fn msprt_p_value(
    prev_p: f64,
    n: u64,
    running_sum: f64,
    outcome_variance: f64,
    mixture: f64,
) -> Result<f64> {
    if !(prev_p > 0.0 && prev_p <= 1.0) {
        return Err(Error::Domain(format!(
            "previous p-value must lie in (0,1], got {prev_p}"
        )));
    }
    if n < 1 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if !(outcome_variance > 0.0 && outcome_variance.is_finite()) {
        return Err(Error::Domain(format!(
            "outcome variance must be positive, got {outcome_variance}"
        )));
    }
    if !(mixture > 0.0 && mixture.is_finite()) {
        return Err(Error::Domain(format!(
            "mixture variance must be positive, got {mixture}"
        )));
    }
    let s2 = outcome_variance;
    let t2 = mixture;
    let total = s2 + n as f64 * t2;
    let log_lambda = 0.5 * (s2 / total).ln() + t2 * running_sum * running_sum / (2.0 * s2 * total);
    Ok(prev_p.min((-log_lambda).exp()))
}

/// The |S_n| level at which the mSPRT likelihood ratio reaches `1/alpha`;
/// the threshold-form of the same decision rule.
pub fn msprt_sum_threshold(
    n: u64,
    outcome_variance: f64,
    mixture: f64,
    alpha: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if n < 1 || !(outcome_variance > 0.0) || !(mixture > 0.0) {
        return Err(Error::Domain(
            "msprt threshold needs n >= 1 and positive variances".into(),
        ));
    }
    let s2 = outcome_variance;
    let t2 = mixture;
    let total = s2 + n as f64 * t2;
    let val = (2.0 * s2 * total / t2) * ((1.0 / alpha).ln() + 0.5 * (total / s2).ln());
    Ok(val.sqrt())
}

/// Mixture scale for the always-valid normal-mixture boundary, derived from
/// the tuning numerator: `rho = numerator / (2 ln(1/alpha) + ln(2 ln(1/alpha) + 1))`
/// (the intrinsic time at which the boundary is tightest, scaled by the
/// standard optimal-rho denominator).
pub fn gavi_rho(rho_numerator: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(rho_numerator > 0.0 && rho_numerator.is_finite()) {
        return Err(Error::Domain(format!(
            "rho numerator must be positive, got {rho_numerator}"
        )));
    }
    let l = (1.0 / alpha).ln();
    Ok(rho_numerator / (2.0 * l + (2.0 * l + 1.0).ln()))
}

/// Time-uniform normal-mixture boundary for the running sum at intrinsic
/// time `V_n = n * variance_per_event`:
///
/// ```text
/// u(V) = sqrt((V + rho) * ln((V + rho) / (alpha^2 * rho)))
/// ```
pub fn gavi_boundary(
    n: u64,
    variance_per_event: f64,
    rho_numerator: f64,
    alpha: f64,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if !(variance_per_event > 0.0 && variance_per_event.is_finite()) {
        return Err(Error::Domain(format!(
            "variance per event must be positive, got {variance_per_event}"
        )));
    }
    let rho = gavi_rho(rho_numerator, alpha)?;
    let v = n as f64 * variance_per_event;
    Ok(((v + rho) * ((v + rho) / (alpha * alpha * rho)).ln()).sqrt())
}

/// Fixed-sample z-threshold at per-check level `alpha / check_count`,
/// applied to `S_n` scaled by `sqrt(n * variance_scaled)`.
pub fn bonferroni_threshold(
    alpha: f64,
    check_count: u64,
    n: u64,
    variance_scaled: f64,
    sidedness: Sidedness,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if check_count < 1 || n < 1 {
        return Err(Error::Domain("check_count and n must be >= 1".into()));
    }
    if !(variance_scaled > 0.0 && variance_scaled.is_finite()) {
        return Err(Error::Domain(format!(
            "variance must be positive, got {variance_scaled}"
        )));
    }
    let per_check = alpha / check_count as f64;
    let level = match sidedness {
        Sidedness::OneSided => 1.0 - per_check,
        Sidedness::TwoSided => 1.0 - per_check / 2.0,
    };
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!(
            "per-check level {per_check} leaves no quantile room"
        )));
    }
    let z = statdist::normal_quantile(level)?;
    Ok(z * (n as f64 * variance_scaled).sqrt())
}

/// The documented JSON form shared by both boundary kinds:
/// `{type, alpha, sidedness, thresholds[], period_end_indices[]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundaryDocument {
    #[serde(rename = "type")]
    pub kind: String,
    pub alpha: f64,
    pub sidedness: Sidedness,
    pub thresholds: Vec<f64>,
    pub period_end_indices: Vec<u64>,
}

impl BoundaryDocument {
    pub fn from_constant(b: &ConstantBoundary, alpha: f64, horizon_events: u64) -> Self {
        BoundaryDocument {
            kind: "constant".into(),
            alpha,
            sidedness: b.sidedness,
            thresholds: vec![b.threshold],
            period_end_indices: vec![horizon_events],
        }
    }

    pub fn from_staircase(b: &StaircaseBoundary, alpha: f64) -> Self {
        BoundaryDocument {
            kind: "staircase".into(),
            alpha,
            sidedness: Sidedness::OneSided,
            thresholds: b.thresholds.clone(),
            period_end_indices: b.period_end_indices.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statdist::normal_quantile;

    fn cfg(alpha: f64, sidedness: Sidedness, n: u64, v: f64) -> TestConfig {
        TestConfig {
            alpha,
            sidedness,
            horizon_events: n,
            variance_scaled: v,
        }
    }

    #[test]
    fn constant_boundary_examples() {
        let one = constant_boundary(&cfg(0.05, Sidedness::OneSided, 500, 2.0)).unwrap();
        assert!((one.threshold - 61.979).abs() <= 1e-3);
        // direct quantile oracle
        let z = normal_quantile(0.975).unwrap();
        assert!((one.threshold - z * 1000.0_f64.sqrt()).abs() <= 1e-12);

        let two = constant_boundary(&cfg(0.05, Sidedness::TwoSided, 500, 2.0)).unwrap();
        assert!((two.threshold - 70.879).abs() <= 1e-3);

        // alpha -> 1 collapses the threshold to z_{0.5} = 0
        let degenerate = constant_boundary(&cfg(1.0 - 1e-12, Sidedness::OneSided, 1, 1.0)).unwrap();
        assert!(degenerate.threshold.abs() <= 1e-9);

        assert!(constant_boundary(&cfg(0.0, Sidedness::OneSided, 500, 2.0)).is_err());
        assert!(constant_boundary(&cfg(0.05, Sidedness::OneSided, 0, 2.0)).is_err());
        assert!(constant_boundary(&cfg(0.05, Sidedness::OneSided, 500, 0.0)).is_err());
    }

    #[test]
    fn constant_boundary_sqrt_n_scaling() {
        let b1 = constant_boundary(&cfg(0.05, Sidedness::OneSided, 400, 1.7)).unwrap();
        let b2 = constant_boundary(&cfg(0.05, Sidedness::OneSided, 800, 1.7)).unwrap();
        assert!((b2.threshold / b1.threshold - 2.0_f64.sqrt()).abs() <= 1e-14);
    }

    #[test]
    fn fdr_bound_single_period_reduces_to_alpha() {
        let plan = StaircasePlan::from_increments(vec![500], vec![3.0], 0.01).unwrap();
        let b = normal_quantile(0.975).unwrap() * 3.0_f64.sqrt();
        let bound = fdr_bound(&plan, &[b]).unwrap();
        assert!((bound - 0.05).abs() <= 1e-6);
    }

    #[test]
    fn fdr_bound_matches_path_decomposition_oracle() {
        // K=2, U=(1,2), u=(1,1), thresholds at z and z*sqrt(2): the bound
        // should exceed the single-period alpha and agree with a Monte-Carlo
        // evaluation of the same decomposition over Gaussian period sums.
        let plan = StaircasePlan::from_increments(vec![1, 1], vec![1.0, 1.0], 0.01).unwrap();
        let z = normal_quantile(0.975).unwrap();
        let b = [z, z * 2.0_f64.sqrt()];
        let bound = fdr_bound(&plan, &b).unwrap();
        assert!(bound > 0.05);

        let mut rng = crate::testutil::OracleRng(2024);
        let paths = 1_000_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..paths {
            let (g1, step) = rng.normal_pair();
            let g2 = g1 + step;
            let mut contrib = 0.0;
            if g1 >= b[0] {
                contrib += 2.0;
            }
            if g1 <= b[0] && g2 > b[1] {
                contrib += 2.0;
            }
            sum += contrib;
            sumsq += contrib * contrib;
        }
        let mean = sum / paths as f64;
        let var = (sumsq / paths as f64 - mean * mean).max(0.0);
        let se = (var / paths as f64).sqrt();
        assert!(
            (bound - mean).abs() <= 3.0 * se,
            "bound {bound} vs MC {mean} (se {se})"
        );
    }

    #[test]
    fn fdr_bound_decreases_when_thresholds_scale_up() {
        let plan =
            StaircasePlan::from_increments(vec![100, 100, 100], vec![1.0, 1.0, 1.0], 0.01).unwrap();
        let z = normal_quantile(0.975).unwrap();
        let base: Vec<f64> = plan.cum_variances().iter().map(|u| z * u.sqrt()).collect();
        let scaled: Vec<f64> = base.iter().map(|b| b * 1.10).collect();
        let b0 = fdr_bound(&plan, &base).unwrap();
        let b1 = fdr_bound(&plan, &scaled).unwrap();
        assert!(b1 < b0, "{b1} should be below {b0}");
    }

    #[test]
    fn fdr_bound_rejects_bad_thresholds() {
        let plan = StaircasePlan::from_increments(vec![10, 10], vec![1.0, 1.0], 0.01).unwrap();
        assert!(fdr_bound(&plan, &[1.0]).is_err());
        assert!(fdr_bound(&plan, &[1.0, -2.0]).is_err());
    }

    #[test]
    fn staircase_single_period_needs_no_inflation() {
        let plan = StaircasePlan::from_increments(vec![500], vec![1000.0], 0.01).unwrap();
        let sb = staircase_boundaries(&plan, 0.05).unwrap();
        let init = normal_quantile(0.975).unwrap() * 1000.0_f64.sqrt();
        assert_eq!(sb.thresholds.len(), 1);
        assert_eq!(sb.thresholds[0], init);
        assert_eq!(sb.period_end_indices, vec![500]);
    }

    #[test]
    fn staircase_seven_periods_controls_bound() {
        let plan = StaircasePlan::equal_periods(500, 7, 1.0, 0.01).unwrap();
        let sb = staircase_boundaries(&plan, 0.05).unwrap();
        let achieved = fdr_bound(&plan, &sb.thresholds).unwrap();
        assert!(achieved <= 0.05 + 1e-9, "achieved bound {achieved}");
        // at least one inflation pass was needed
        let init = normal_quantile(0.975).unwrap() * plan.cum_variances()[0].sqrt();
        assert!(sb.thresholds[0] > init);
        // thresholds strictly increase along the staircase
        for w in sb.thresholds.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert_eq!(
            sb.period_end_indices,
            vec![72, 143, 214, 286, 357, 428, 500]
        );
    }

    #[test]
    fn plan_validation_and_parsing() {
        assert!(StaircasePlan::from_increments(vec![], vec![], 0.01).is_err());
        assert!(StaircasePlan::from_increments(vec![10], vec![0.0], 0.01).is_err());
        assert!(StaircasePlan::from_increments(vec![10], vec![1.0], 0.0).is_err());
        assert!(StaircasePlan::new(vec![10, 10], vec![2.0, 1.5], vec![2.0, 1.0], 0.01).is_err());

        let plan = StaircasePlan::from_plan_text(
            "period_sizes=10,20\nvariance_per_event=2.0\nepsilon=0.05\n",
        )
        .unwrap();
        assert_eq!(plan.period_sizes(), &[10, 20]);
        assert_eq!(plan.incr_variances(), &[20.0, 40.0]);
        assert_eq!(plan.cum_variances(), &[20.0, 60.0]);
        assert_eq!(plan.epsilon(), 0.05);
        assert_eq!(plan.total_events(), 30);

        assert!(StaircasePlan::from_plan_text("period_sizes=10\n").is_err());
        assert!(StaircasePlan::from_plan_text("nonsense\n").is_err());
        assert!(StaircasePlan::from_plan_text("bogus_key=1\nperiod_sizes=10\n").is_err());
    }

    #[test]
    fn msprt_stays_at_one_for_zero_sums() {
        let mut p = 1.0;
        for n in 1..=50 {
            p = msprt_p_value(p, n, 0.0, 2.0, 0.5).unwrap();
            assert_eq!(p, 1.0);
        }
    }

    #[test]
    fn msprt_nonincreasing_and_detects_drift() {
        let mut p = 1.0;
        let mut prev = 1.0;
        let mut s = 0.0;
        for n in 1..=200 {
            s += 1.0; // strong drift
            p = msprt_p_value(p, n, s, 2.0, 0.5).unwrap();
            assert!(p <= prev);
            prev = p;
        }
        assert!(p < 0.05);
    }

    #[test]
    fn msprt_threshold_agrees_with_p_value_rule() {
        // crossing the sum threshold is exactly the p = alpha boundary
        let (s2, t2, alpha) = (2.0, 0.1, 0.05);
        for n in [1u64, 10, 100, 500] {
            let thr = msprt_sum_threshold(n, s2, t2, alpha).unwrap();
            let above = msprt_p_value(1.0, n, thr * 1.0000001, s2, t2).unwrap();
            let below = msprt_p_value(1.0, n, thr * 0.9999999, s2, t2).unwrap();
            assert!(above < alpha && below > alpha, "n={n}");
        }
    }

    #[test]
    fn msprt_rejects_bad_inputs() {
        assert!(msprt_p_value(0.0, 1, 0.0, 1.0, 1.0).is_err());
        assert!(msprt_p_value(1.0, 0, 0.0, 1.0, 1.0).is_err());
        assert!(msprt_p_value(1.0, 1, 0.0, -1.0, 1.0).is_err());
        assert!(msprt_p_value(1.0, 1, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn gavi_boundary_increases_with_n() {
        let mut prev = 0.0;
        for n in 1..=300 {
            let b = gavi_boundary(n, 2.0, 250.0, 0.05).unwrap();
            assert!(b > prev);
            prev = b;
        }
        assert!(gavi_boundary(10, 2.0, 250.0, 1.2).is_err());
        assert!(gavi_boundary(10, 0.0, 250.0, 0.05).is_err());
        assert!(gavi_rho(250.0, 0.05).unwrap() > 0.0);
    }

    #[test]
    fn bonferroni_reduces_to_fixed_horizon_z_test() {
        let one = bonferroni_threshold(0.05, 1, 400, 2.0, Sidedness::OneSided).unwrap();
        let z95 = normal_quantile(0.95).unwrap();
        assert!((one - z95 * 800.0_f64.sqrt()).abs() <= 1e-12);
        let two = bonferroni_threshold(0.05, 1, 400, 2.0, Sidedness::TwoSided).unwrap();
        let z975 = normal_quantile(0.975).unwrap();
        assert!((two - z975 * 800.0_f64.sqrt()).abs() <= 1e-12);
        // more checks -> stricter per-check threshold
        let strict = bonferroni_threshold(0.05, 500, 400, 2.0, Sidedness::OneSided).unwrap();
        assert!(strict > one);
        assert!(bonferroni_threshold(0.05, 0, 400, 2.0, Sidedness::OneSided).is_err());
    }

    #[test]
    fn boundary_document_round_trips() {
        let doc = BoundaryDocument::from_constant(
            &ConstantBoundary {
                threshold: 61.97950323045616,
                sidedness: Sidedness::OneSided,
            },
            0.05,
            500,
        );
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.starts_with("{\"type\":\"constant\",\"alpha\":0.05,\"sidedness\":\"one_sided\""));
        let back: BoundaryDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);

        let sb = StaircaseBoundary {
            thresholds: vec![10.0, 20.0],
            period_end_indices: vec![50, 100],
        };
        let doc2 = BoundaryDocument::from_staircase(&sb, 0.05);
        assert_eq!(doc2.kind, "staircase");
        assert_eq!(doc2.period_end_indices, vec![50, 100]);
    }
}
