//! Pure numerical primitives: standard-normal density, CDF, quantile,
//! Gauss-Legendre quadrature, and the normal-truncated-normal convolution
//! CDF used by the staircase false-detection-rate bound.
//!
//! Everything here is deterministic, total over its stated domain, and free
//! of global mutable state (the quadrature rule cache is append-only), so
//! all functions are safe to call concurrently.

mod erf;
mod legendre;

pub use legendre::GaussLegendreRule;

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_677_94;

/// Quadrature controls for the convolution integral: node count of the
/// Gauss-Legendre rule and the integration window half-width measured in
/// standard deviations of the truncated component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    node_count: usize,
    domain_halfwidth_sigmas: f64,
}

impl QuadratureSpec {
    pub fn new(node_count: usize, domain_halfwidth_sigmas: f64) -> Result<Self> {
        if node_count < 16 {
            return Err(Error::Domain(format!(
                "quadrature node count must be >= 16, got {node_count}"
            )));
        }
        if !(domain_halfwidth_sigmas >= 6.0) {
            return Err(Error::Domain(format!(
                "quadrature half-width must be >= 6 sigmas, got {domain_halfwidth_sigmas}"
            )));
        }
        Ok(QuadratureSpec {
            node_count,
            domain_halfwidth_sigmas,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn domain_halfwidth_sigmas(&self) -> f64 {
        self.domain_halfwidth_sigmas
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            node_count: 128,
            domain_halfwidth_sigmas: 10.0,
        }
    }
}

#[inline]
pub(crate) fn pdf_raw(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub(crate) fn cdf_raw(x: f64) -> f64 {
    0.5 * erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("normal_pdf needs finite x, got {x}")));
    }
    Ok(pdf_raw(x))
}

/// Standard normal CDF, absolute error below 1e-12 for |x| <= 8.
pub fn normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("normal_cdf needs finite x, got {x}")));
    }
    Ok(cdf_raw(x))
}

// Acklam's rational approximation to the standard normal quantile,
// |relative error| < 1.15e-9 before refinement.
const ACK_A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const ACK_B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const ACK_C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const ACK_D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const ACK_P_LOW: f64 = 0.02425;

#[inline]
fn acklam_tail(q: f64) -> f64 {
    (((((ACK_C[0] * q + ACK_C[1]) * q + ACK_C[2]) * q + ACK_C[3]) * q + ACK_C[4]) * q + ACK_C[5])
        / ((((ACK_D[0] * q + ACK_D[1]) * q + ACK_D[2]) * q + ACK_D[3]) * q + 1.0)
}

pub(crate) fn quantile_raw(p: f64) -> f64 {
    let mut x = if p < ACK_P_LOW {
        acklam_tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - ACK_P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((ACK_A[0] * r + ACK_A[1]) * r + ACK_A[2]) * r + ACK_A[3]) * r + ACK_A[4]) * r
            + ACK_A[5])
            * q
            / (((((ACK_B[0] * r + ACK_B[1]) * r + ACK_B[2]) * r + ACK_B[3]) * r + ACK_B[4]) * r
                + 1.0)
    } else {
        -acklam_tail((-2.0 * (1.0 - p).ln()).sqrt())
    };
    // two Newton steps against the high-accuracy CDF
    for _ in 0..2 {
        let d = pdf_raw(x);
        if d < 1e-300 {
            break;
        }
        x -= (cdf_raw(x) - p) / d;
    }
    x
}

/// Standard normal quantile (inverse CDF).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "normal_quantile needs p in (0,1), got {p}"
        )));
    }
    Ok(quantile_raw(p))
}

/// Fixed-node Gauss-Legendre estimate of the integral of `f` over [lo, hi].
pub fn gauss_legendre<F: FnMut(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain(format!(
            "integration interval must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    let rule = GaussLegendreRule::with_nodes(quad.node_count);
    Ok(rule.integrate(lo, hi, f))
}

/// CDF at `b_cur` of the sum of a normal truncated to (-inf, b_prev] (variance
/// `var_prev`) and an independent centred normal (variance `var_incr`):
///
/// ```text
/// J = int_{-inf}^{b_prev} Phi((b_cur - x)/sqrt(var_incr))
///         * phi(x/sqrt(var_prev)) / (Z * sqrt(var_prev)) dx,
/// Z = Phi(b_prev/sqrt(var_prev))
/// ```
///
/// Evaluated by Gauss-Legendre quadrature over the effective support, with a
/// node-doubling self check; the two refinement levels must agree to 1e-8.
pub fn truncated_normal_convolution_cdf(
    b_prev: f64,
    b_cur: f64,
    var_prev: f64,
    var_incr: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(var_prev > 0.0 && var_prev.is_finite()) || !(var_incr > 0.0 && var_incr.is_finite()) {
        return Err(Error::Domain(format!(
            "variances must be positive, got var_prev={var_prev}, var_incr={var_incr}"
        )));
    }
    if !b_prev.is_finite() || !b_cur.is_finite() {
        return Err(Error::Domain("thresholds must be finite".into()));
    }
    let sd_prev = var_prev.sqrt();
    let sd_incr = var_incr.sqrt();
    let mass = cdf_raw(b_prev / sd_prev);
    if mass <= 0.0 {
        return Err(Error::Numerical(format!(
            "truncation mass underflows at b_prev/sd = {}",
            b_prev / sd_prev
        )));
    }
    let lo = b_prev.min(0.0) - quad.domain_halfwidth_sigmas * sd_prev;
    let integrand =
        |x: f64| cdf_raw((b_cur - x) / sd_incr) * pdf_raw(x / sd_prev) / (sd_prev * mass);
    let coarse = GaussLegendreRule::with_nodes(quad.node_count).integrate(lo, b_prev, integrand);
    let fine = GaussLegendreRule::with_nodes(2 * quad.node_count).integrate(lo, b_prev, integrand);
    if (fine - coarse).abs() > 1e-8 {
        return Err(Error::Numerical(format!(
            "quadrature did not converge: {coarse} vs {fine} at {} nodes",
            quad.node_count
        )));
    }
    Ok(fine.clamp(0.0, 1.0))
}
