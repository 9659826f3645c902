//! Transition bounds, threshold and width solvers, and the RM decay table.
//!
//! All logarithms are natural. Inside bound formulas `eps` and `eps*` are
//! clamped to `[1e-15, 1 - 1e-15]` before any log is taken.

use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::codes::WeightSpectrum;
use crate::error::{Error, Result};
use crate::mc::McCurve;
use crate::pattern_sets::FailureProfile;
pub use crate::special::{gamma_fn, std_normal_cdf, std_normal_quantile};

/// Clamp applied to arguments of logarithms inside bound formulas.
pub const LOG_GUARD: f64 = 1e-15;
/// Bisection stops once the bracket is this narrow.
pub const BISECTION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    BelowThreshold,
    AboveThreshold,
}

impl Side {
    /// Below for `eps <= eps*`, above otherwise.
    pub fn of(eps: f64, eps_star: f64) -> Side {
        if eps <= eps_star {
            Side::BelowThreshold
        } else {
            Side::AboveThreshold
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::BelowThreshold => "below",
            Side::AboveThreshold => "above",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Tz,
    Refined,
}

fn guard(x: f64) -> f64 {
    x.clamp(LOG_GUARD, 1.0 - LOG_GUARD)
}

/// `sqrt(-ln x)` with the log guard.
fn root_neg_ln(x: f64) -> f64 {
    (-guard(x).ln()).sqrt()
}

fn check_open(channel: Channel, eps: f64, what: &str) -> Result<()> {
    channel
        .check_open(eps)
        .map_err(|_| Error::Domain(format!("{what}={eps} outside (0, {}) for the {channel}", channel.max_epsilon())))
}

/// Argument of `Phi` shared by the TZ and refined bounds, with `scale`
/// multiplying the difference of square-root logs.
fn phi_argument(channel: Channel, scale: f64, eps_star: f64, eps: f64) -> f64 {
    match channel {
        Channel::Bec => scale * (root_neg_ln(eps_star) - root_neg_ln(eps)),
        Channel::Bsc => scale * (root_neg_ln(1.0 - eps_star) - root_neg_ln(1.0 - eps)),
    }
}

/// Minimum-distance (`tz`) transition bound, unclamped. BEC:
/// `Phi(sqrt(2 d)(sqrt(-ln eps*) - sqrt(-ln eps)))`; BSC:
/// `Phi(sqrt(d)(sqrt(-ln(1-eps*)) - sqrt(-ln(1-eps))))`.
pub fn tz_bound_raw(d_min: usize, eps_star: f64, eps: f64, channel: Channel) -> Result<f64> {
    check_open(channel, eps, "epsilon")?;
    check_open(channel, eps_star, "eps_star")?;
    let scale = match channel {
        Channel::Bec => (2.0 * d_min as f64).sqrt(),
        Channel::Bsc => (d_min as f64).sqrt(),
    };
    Ok(std_normal_cdf(phi_argument(channel, scale, eps_star, eps)))
}

/// TZ bound clamped to `[0, 1]`: an upper bound on `P_MAP` below `eps*`,
/// a lower bound above.
pub fn tz_bound(d_min: usize, eps_star: f64, eps: f64, channel: Channel) -> Result<f64> {
    Ok(tz_bound_raw(d_min, eps_star, eps, channel)?.clamp(0.0, 1.0))
}

/// Refined bound on the given side, unclamped.
///
/// BEC below: `Phi(sqrt W (..)) + 2 sqrt(-ln eps) sqrt W A(W, eps*)`;
/// BEC above: `Phi(sqrt W (..)) - 2 sqrt(-ln eps*) sqrt W A(W, eps)`;
/// BSC uses `sqrt W / 2` inside `Phi`, `1 - eps` logs there, and coefficient 4.
pub fn refined_bound_side_raw(
    spec: &WeightSpectrum,
    big_w: usize,
    eps_star: f64,
    eps: f64,
    channel: Channel,
    side: Side,
) -> Result<f64> {
    check_open(channel, eps, "epsilon")?;
    check_open(channel, eps_star, "eps_star")?;
    if big_w == 0 || big_w > spec.len() {
        return Err(Error::Parameter(format!("W={big_w} outside 1..={}", spec.len())));
    }
    let sw = (big_w as f64).sqrt();
    let (scale, coef) = match channel {
        Channel::Bec => (sw, 2.0),
        Channel::Bsc => (sw / 2.0, 4.0),
    };
    let phi = std_normal_cdf(phi_argument(channel, scale, eps_star, eps));
    Ok(match side {
        Side::BelowThreshold => phi + coef * root_neg_ln(eps) * sw * spec.partial_enumerator(big_w, eps_star)?,
        Side::AboveThreshold => phi - coef * root_neg_ln(eps_star) * sw * spec.partial_enumerator(big_w, eps)?,
    })
}

/// Refined bound clamped to `[0, 1]`, side chosen by [`Side::of`].
pub fn refined_bound(spec: &WeightSpectrum, big_w: usize, eps_star: f64, eps: f64, channel: Channel) -> Result<f64> {
    let side = Side::of(eps, eps_star);
    Ok(refined_bound_side_raw(spec, big_w, eps_star, eps, channel, side)?.clamp(0.0, 1.0))
}

/// A bound curve with its parameters fixed.
#[derive(Clone, Debug)]
pub struct TransitionBound {
    pub channel: Channel,
    pub kind: BoundKind,
    pub w: Option<usize>,
    pub eps_star: f64,
    pub d_min: usize,
    pub spectrum: Option<WeightSpectrum>,
}

impl TransitionBound {
    pub fn tz(channel: Channel, d_min: usize, eps_star: f64) -> Self {
        Self { channel, kind: BoundKind::Tz, w: None, eps_star, d_min, spectrum: None }
    }

    pub fn refined(channel: Channel, spectrum: WeightSpectrum, big_w: usize, eps_star: f64) -> Result<Self> {
        if big_w == 0 || big_w > spectrum.len() {
            return Err(Error::Parameter(format!("W={big_w} outside 1..={}", spectrum.len())));
        }
        let d_min = spectrum.min_distance().unwrap_or(0);
        Ok(Self { channel, kind: BoundKind::Refined, w: Some(big_w), eps_star, d_min, spectrum: Some(spectrum) })
    }

    pub fn side(&self, eps: f64) -> Side {
        Side::of(eps, self.eps_star)
    }

    /// Raw value on the side `eps` falls in.
    pub fn eval_raw(&self, eps: f64) -> Result<f64> {
        match (self.kind, &self.spectrum, self.w) {
            (BoundKind::Tz, _, _) => tz_bound_raw(self.d_min, self.eps_star, eps, self.channel),
            (BoundKind::Refined, Some(spec), Some(w)) => {
                refined_bound_side_raw(spec, w, self.eps_star, eps, self.channel, self.side(eps))
            }
            _ => Err(Error::Parameter("refined bound needs a spectrum and W".into())),
        }
    }

    pub fn eval(&self, eps: f64) -> Result<f64> {
        Ok(self.eval_raw(eps)?.clamp(0.0, 1.0))
    }

    /// Does `p` lie on the permitted side of the bound at `eps`?
    pub fn respects(&self, eps: f64, p: f64, tol: f64) -> Result<bool> {
        let b = self.eval(eps)?;
        Ok(match self.side(eps) {
            Side::BelowThreshold => p <= b + tol,
            Side::AboveThreshold => p >= b - tol,
        })
    }
}

/// A nondecreasing error curve on a channel domain.
pub trait ErrorCurve {
    fn channel(&self) -> Channel;
    fn value(&self, eps: f64) -> Result<f64>;
    /// Half-width of a confidence interval at `eps`, for estimated curves.
    fn uncertainty(&self, _eps: f64) -> Result<Option<f64>> {
        Ok(None)
    }
}

impl ErrorCurve for FailureProfile {
    fn channel(&self) -> Channel {
        self.channel
    }

    fn value(&self, eps: f64) -> Result<f64> {
        self.pmap_eval(eps)
    }
}

impl ErrorCurve for McCurve {
    fn channel(&self) -> Channel {
        McCurve::channel(self)
    }

    fn value(&self, eps: f64) -> Result<f64> {
        Ok(self.eval(eps)?.mean)
    }

    fn uncertainty(&self, eps: f64) -> Result<Option<f64>> {
        Ok(Some(self.eval(eps)?.half_width()))
    }
}

/// Any closure `eps -> P` on a channel domain.
pub struct FnCurve<F> {
    pub channel: Channel,
    pub f: F,
}

impl<F: Fn(f64) -> f64> ErrorCurve for FnCurve<F> {
    fn channel(&self) -> Channel {
        self.channel
    }

    fn value(&self, eps: f64) -> Result<f64> {
        self.channel.check_epsilon(eps)?;
        Ok((self.f)(eps))
    }
}

/// Bisection for `P(eps) = target` on the channel domain. Returns the point
/// itself when an evaluation hits `target` exactly, the bracket midpoint
/// otherwise.
pub fn find_crossing<C: ErrorCurve + ?Sized>(curve: &C, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, curve.channel().max_epsilon());
    let (p_lo, p_hi) = (curve.value(lo)?, curve.value(hi)?);
    if p_lo == target {
        return Ok(lo);
    }
    if p_hi == target {
        return Ok(hi);
    }
    if !(p_lo < target && target < p_hi) {
        return Err(Error::Bracket(format!(
            "curve runs from {p_lo} to {p_hi} on [{lo}, {hi}] and never crosses {target}"
        )));
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let p = curve.value(mid)?;
        if p == target {
            return Ok(mid);
        }
        if p < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `eps*` with `P(eps*) = 1/2`.
pub fn find_threshold<C: ErrorCurve + ?Sized>(curve: &C) -> Result<f64> {
    find_crossing(curve, 0.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthReport {
    pub delta: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub width: f64,
    pub eps_star: f64,
    /// CI half-widths at the two crossings, for Monte-Carlo curves.
    pub eps1_ci_half_width: Option<f64>,
    pub eps2_ci_half_width: Option<f64>,
}

/// Distance between the `delta` and `1 - delta` crossings.
pub fn transition_width<C: ErrorCurve + ?Sized>(curve: &C, delta: f64) -> Result<WidthReport> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Parameter(format!("delta={delta} outside (0, 1/2)")));
    }
    let eps1 = find_crossing(curve, delta)?;
    let eps2 = find_crossing(curve, 1.0 - delta)?;
    let eps_star = find_threshold(curve)?;
    let width = eps2 - eps1;
    if width <= 0.0 || eps1 > eps_star || eps_star > eps2 {
        return Err(Error::Consistency(format!(
            "crossings out of order: eps1={eps1}, eps*={eps_star}, eps2={eps2}"
        )));
    }
    Ok(WidthReport {
        delta,
        eps1,
        eps2,
        width,
        eps_star,
        eps1_ci_half_width: curve.uncertainty(eps1)?,
        eps2_ci_half_width: curve.uncertainty(eps2)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub code: String,
    pub n: usize,
    pub w: usize,
    pub a_wz: f64,
    pub sqrt_w_a_wz: f64,
}

/// `W = ceil(N^(1 - kappa))`, treating values within 1e-9 of an integer as
/// that integer, clamped to `1..=N`.
pub fn decay_window(n: usize, kappa: f64) -> usize {
    let x = (n as f64).powf(1.0 - kappa);
    let r = x.round();
    let w = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    (w as usize).clamp(1, n)
}

/// Per code: `(N, W, A(W,z), sqrt(W) A(W,z))` with `W = ceil(N^(1-kappa))`,
/// sorted by `N`.
pub fn rm_decay_report(specs: &[(String, WeightSpectrum)], kappa: f64, z: f64) -> Result<Vec<DecayRow>> {
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(Error::Parameter(format!("kappa={kappa} must be positive")));
    }
    if !(0.0..1.0).contains(&z) {
        return Err(Error::Domain(format!("z={z} outside [0,1)")));
    }
    let mut rows = specs
        .iter()
        .map(|(name, spec)| {
            let n = spec.len();
            let w = decay_window(n, kappa);
            let a = spec.partial_enumerator(w, z)?;
            Ok(DecayRow { code: name.clone(), n, w, a_wz: a, sqrt_w_a_wz: (w as f64).sqrt() * a })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.n);
    Ok(rows)
}

/// Right side of the BEC differential inequality:
/// `(sqrt W / eps)(gamma(P) / sqrt(-2 ln eps) - sqrt W A(W, eps))`.
pub fn bec_derivative_floor(spec: &WeightSpectrum, big_w: usize, p: f64, eps: f64) -> Result<f64> {
    open01(eps)?;
    let sw = (big_w as f64).sqrt();
    Ok(sw / eps * (gamma_fn(p.clamp(0.0, 1.0))? / (-2.0 * eps.ln()).sqrt() - sw * spec.partial_enumerator(big_w, eps)?))
}

/// Right side of the BSC differential inequality:
/// `sqrt W (gamma(P) / (2 sqrt(-2 ln eps)) - 2 sqrt W A(W, eps))`.
pub fn bsc_derivative_floor(spec: &WeightSpectrum, big_w: usize, p: f64, eps: f64) -> Result<f64> {
    open01(eps)?;
    let sw = (big_w as f64).sqrt();
    Ok(sw * (gamma_fn(p.clamp(0.0, 1.0))? / (2.0 * (-2.0 * eps.ln()).sqrt()) - 2.0 * sw * spec.partial_enumerator(big_w, eps)?))
}

pub fn derivative_floor(channel: Channel, spec: &WeightSpectrum, big_w: usize, p: f64, eps: f64) -> Result<f64> {
    match channel {
        Channel::Bec => bec_derivative_floor(spec, big_w, p, eps),
        Channel::Bsc => bsc_derivative_floor(spec, big_w, p, eps),
    }
}

fn open01(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("epsilon={eps} outside (0,1)")))
    }
}

/// Largest `dP/deps` over an evenly spaced grid of `points` on the channel domain.
pub fn max_derivative(profile: &FailureProfile, points: usize) -> Result<f64> {
    let hi = profile.channel.max_epsilon();
    let d = profile.poly().derivative();
    Ok((0..points)
        .map(|k| d.eval(hi * k as f64 / (points.max(2) - 1) as f64))
        .fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::LinearCode;
    use crate::pattern_sets::failure_profile;

    #[test]
    fn tz_examples() {
        assert!((tz_bound(3, 0.3, 0.3, Channel::Bec).unwrap() - 0.5).abs() < 1e-15);
        assert!((tz_bound(3, 0.3, 0.3, Channel::Bsc).unwrap() - 0.5).abs() < 1e-15);
        let v = tz_bound(3, 0.5, 0.25, Channel::Bec).unwrap();
        // Independent evaluation: Python statistics.NormalDist.
        let arg = 6f64.sqrt() * (2f64.ln().sqrt() - 4f64.ln().sqrt());
        assert!((arg + 0.844_719_792_864_148_1).abs() < 1e-14);
        assert!((v - 0.199_133_652_904_258_33).abs() < 1e-12, "{v}");
        let mut prev = 0.0;
        for k in 1..100 {
            let b = tz_bound(5, 0.4, k as f64 / 100.0, Channel::Bec).unwrap();
            assert!(b >= prev);
            prev = b;
        }
        assert!(tz_bound(3, 0.5, 0.6, Channel::Bsc).is_err());
        assert!(tz_bound(3, 0.5, 0.0, Channel::Bec).is_err());
    }

    #[test]
    fn refined_examples() {
        let spc = LinearCode::single_parity_check(3).unwrap().weight_distribution().unwrap();
        let v = refined_bound_side_raw(&spc, 2, 0.5, 0.25, Channel::Bec, Side::BelowThreshold).unwrap();
        let want = std_normal_cdf(2f64.sqrt() * (2f64.ln().sqrt() - 4f64.ln().sqrt()))
            + 2.0 * 4f64.ln().sqrt() * 2f64.sqrt() * 0.75;
        assert!((v - want).abs() < 1e-14);
        assert!(refined_bound(&spc, 2, 0.5, 0.25, Channel::Bec).unwrap() > 0.15625);
        for w in 1..=3 {
            for &e in &[0.1, 0.3, 0.5] {
                assert!(refined_bound(&spc, w, e, e, Channel::Bec).unwrap() >= 0.5);
                let phi = std_normal_cdf(phi_argument(Channel::Bec, (w as f64).sqrt(), 0.5, e));
                assert!(refined_bound(&spc, w, 0.5, e, Channel::Bec).unwrap() >= phi.min(1.0));
            }
        }
        assert!(refined_bound(&spc, 0, 0.5, 0.25, Channel::Bec).is_err());
        assert!(refined_bound(&spc, 4, 0.5, 0.25, Channel::Bec).is_err());
    }

    #[test]
    fn threshold_examples() {
        let rep = failure_profile(&LinearCode::repetition(3).unwrap(), Channel::Bec).unwrap();
        assert!((find_threshold(&rep).unwrap() - 0.5f64.powf(1.0 / 3.0)).abs() < 1e-10);
        let spc = failure_profile(&LinearCode::single_parity_check(3).unwrap(), Channel::Bec).unwrap();
        assert_eq!(find_threshold(&spc).unwrap(), 0.5);
        let id = FnCurve { channel: Channel::Bec, f: |x: f64| x };
        assert_eq!(find_threshold(&id).unwrap(), 0.5);
        let flat = FnCurve { channel: Channel::Bec, f: |_x: f64| 0.1 };
        assert!(matches!(find_threshold(&flat), Err(Error::Bracket(_))));
    }

    #[test]
    fn width_examples() {
        let rep = failure_profile(&LinearCode::repetition(3).unwrap(), Channel::Bec).unwrap();
        let r = transition_width(&rep, 0.1).unwrap();
        assert!((r.eps1 - 0.1f64.powf(1.0 / 3.0)).abs() < 1e-9);
        assert!((r.eps2 - 0.9f64.powf(1.0 / 3.0)).abs() < 1e-9);
        assert!((r.width - 0.501_330).abs() < 1e-6);
        assert!(r.eps1_ci_half_width.is_none());
        let narrow = transition_width(&rep, 0.4999).unwrap();
        assert!(narrow.width < 1e-3);
        assert!(transition_width(&rep, 0.5).is_err());
    }

    #[test]
    fn decay_examples() {
        let rm13 = LinearCode::reed_muller(1, 3).unwrap().weight_distribution().unwrap();
        let rows = rm_decay_report(&[("rm(1,3)".into(), rm13.clone())], 0.25, 0.5).unwrap();
        assert_eq!(rows[0].w, 5);
        assert!((rows[0].a_wz - 0.875).abs() < 1e-15);
        let zero = rm_decay_report(&[("rm(1,3)".into(), rm13)], 0.25, 0.0).unwrap();
        assert_eq!(zero[0].a_wz, 0.0);
        assert_eq!(decay_window(16, 0.5), 4);
    }

    #[test]
    fn gamma_lower_envelope() {
        for k in 0..=1000 {
            let x = k as f64 / 1000.0;
            assert!(gamma_fn(x).unwrap() >= x * (1.0 - x) - 1e-15, "x={x}");
        }
    }

    #[test]
    fn quantile_cdf_roundtrip() {
        for k in -600..=600 {
            let x = k as f64 / 100.0;
            let back = std_normal_quantile(std_normal_cdf(x)).unwrap();
            // Above x ~ 5.5 the double nearest Phi(x) is 1 - O(1e-16) and only
            // pins x down to about ulp(1) / phi(x).
            let tol = 1e-9f64.max(4.0 * f64::EPSILON / crate::special::std_normal_pdf(x));
            assert!((back - x).abs() < tol, "x={x}");
        }
    }
}
