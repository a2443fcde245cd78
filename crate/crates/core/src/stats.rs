//! Counting and moment statistics over an orbit ball.
//!
//! `Y = <g, alpha> / sqrt(r)` over records with `r > 0` should become
//! Gaussian as the radius grows. The L2 norm of `alpha` is usually unknown,
//! so distribution checks are studentized; the norm itself is estimated
//! from the growth of the second raw moment.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modsym::{symbol, PeriodForm};
use crate::orbit::OrbitBall;
use crate::summation::{par_sum_by, Neumaier};
use crate::tolerance::Tolerances;
use crate::Point;

/// Positive-distance records needed for studentized statistics.
pub const MIN_RECORDS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub x: f64,
    pub count: usize,
    /// `S_n = sum <g, alpha>^n`, `n = 0..=n_max`, identity included.
    pub raw_sums: Vec<f64>,
    /// `E[Y^n] / E[Y^2]^(n/2)`, `n = 0..=n_max`; empty if the ball is too small.
    pub studentized: Vec<f64>,
    /// `None` below radius 1.
    pub huber_ratio: Option<f64>,
    /// One-radius estimate of `|alpha|^2` from `S_2`.
    pub norm_sq_estimate: Option<f64>,
    pub ks: Option<f64>,
    pub z: Point,
    pub w: Point,
    /// Raw moments `E[[g, alpha]^n]` of the exactly normalized symbols,
    /// present only when the form carries `norm_sq`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized_moments: Option<Vec<f64>>,
}

impl MomentReport {
    pub fn compute(ball: &OrbitBall, f: &PeriodForm, vol: f64, n_max: usize) -> Result<Self> {
        let raw_sums = raw_moment_sums(ball, f, n_max)?;
        let studentized = match studentized_moments(ball, f, n_max) {
            Ok(v) => v,
            Err(Error::TooFewRecords { .. }) => Vec::new(),
            Err(e) => return Err(e),
        };
        let ks = match ks_against_gaussian(ball, f) {
            Ok(v) => Some(v),
            Err(Error::TooFewRecords { .. }) => None,
            Err(e) => return Err(e),
        };
        let huber_ratio = huber_ratio(ball, vol).ok();
        let norm_sq_estimate = (ball.radius > 0.0)
            .then(|| raw_sums[2] / second_moment_basis(ball.radius, vol))
            .filter(|v| *v > 0.0);
        let normalized_moments = match f.norm_sq {
            Some(norm_sq) => Some(normalized_moments(ball, f, vol, norm_sq, n_max)?),
            None => None,
        };
        Ok(Self {
            x: ball.radius,
            count: ball.count(),
            raw_sums,
            studentized,
            huber_ratio,
            norm_sq_estimate,
            ks,
            z: ball.base_z,
            w: ball.base_w,
            normalized_moments,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `N vol / (pi e^x)`, which tends to 1.
pub fn huber_ratio(ball: &OrbitBall, vol: f64) -> Result<f64> {
    if !(ball.radius >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "huber ratio needs radius >= 1, got {}",
            ball.radius
        )));
    }
    Ok(ball.count() as f64 * vol / (PI * ball.radius.exp()))
}

fn symbols(ball: &OrbitBall, f: &PeriodForm) -> Result<Vec<f64>> {
    ball.records.iter().map(|r| symbol(&r.element, f)).collect()
}

/// `(Y, r)` over records with positive distance.
fn positive_samples(ball: &OrbitBall, f: &PeriodForm) -> Result<Vec<(f64, f64)>> {
    let tol = Tolerances::DEFAULT.zero_distance;
    ball.records
        .iter()
        .filter(|r| r.distance > tol)
        .map(|r| Ok((symbol(&r.element, f)?, r.distance)))
        .collect()
}

/// Sums of `v^n` for `n = 0..=n_max`, accumulated on `v / scale` so high
/// powers cannot overflow, then rescaled.
fn power_sums(values: &[f64], n_max: usize) -> Vec<f64> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    (0..=n_max)
        .map(|n| {
            let s = par_sum_by(values, |v| (v / scale).powi(n as i32));
            s * scale.powi(n as i32)
        })
        .collect()
}

/// `S_n = sum_{r <= x} <g, alpha>^n` for `n = 0..=n_max`.
pub fn raw_moment_sums(ball: &OrbitBall, f: &PeriodForm, n_max: usize) -> Result<Vec<f64>> {
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_max must be >= 2, got {n_max}"
        )));
    }
    let mut sums = power_sums(&symbols(ball, f)?, n_max);
    sums[0] = ball.count() as f64;
    Ok(sums)
}

/// `E[Y^n] / E[Y^2]^(n/2)` for `n = 0..=n_max`.
pub fn studentized_moments(ball: &OrbitBall, f: &PeriodForm, n_max: usize) -> Result<Vec<f64>> {
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_max must be >= 2, got {n_max}"
        )));
    }
    let ys = studentizable(ball, f)?;
    let sums = power_sums(&ys, n_max);
    let m2 = sums[2] / ys.len() as f64;
    if !(m2 > 0.0) {
        return Err(Error::Degenerate("all symbols vanish on the ball".into()));
    }
    Ok(sums
        .iter()
        .enumerate()
        .map(|(n, s)| match n {
            0 | 2 => 1.0,
            _ => (s / ys.len() as f64) / m2.powf(n as f64 / 2.0),
        })
        .collect())
}

fn studentizable(ball: &OrbitBall, f: &PeriodForm) -> Result<Vec<f64>> {
    let samples = positive_samples(ball, f)?;
    if samples.len() < MIN_RECORDS {
        return Err(Error::TooFewRecords {
            needed: MIN_RECORDS,
            have: samples.len(),
        });
    }
    Ok(samples.iter().map(|(s, r)| s / r.sqrt()).collect())
}

fn normalized_moments(
    ball: &OrbitBall,
    f: &PeriodForm,
    vol: f64,
    norm_sq: f64,
    n_max: usize,
) -> Result<Vec<f64>> {
    let samples = positive_samples(ball, f)?;
    if samples.is_empty() {
        return Err(Error::TooFewRecords { needed: 1, have: 0 });
    }
    let vals: Vec<f64> = samples
        .iter()
        .map(|(s, r)| (vol / (2.0 * norm_sq * r)).sqrt() * s)
        .collect();
    let len = vals.len() as f64;
    Ok(power_sums(&vals, n_max)
        .into_iter()
        .map(|s| s / len)
        .collect())
}

/// Standard normal CDF, Abramowitz & Stegun 26.2.17 (absolute error
/// below `7.5e-8`).
pub fn normal_cdf(x: f64) -> f64 {
    const P: f64 = 0.231_641_9;
    const B: [f64; 5] = [
        0.319_381_530,
        -0.356_563_782,
        1.781_477_937,
        -1.821_255_978,
        1.330_274_429,
    ];
    let t = 1.0 / (1.0 + P * x.abs());
    let poly = t * (B[0] + t * (B[1] + t * (B[2] + t * (B[3] + t * B[4]))));
    let tail = (-0.5 * x * x).exp() / (2.0 * PI).sqrt() * poly;
    if x >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Kolmogorov–Smirnov distance between a sample and the standard normal.
/// Tied values are handled as a single jump.
pub fn ks_distance(sample: &[f64]) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        let phi = normal_cdf(xs[i]);
        d = d
            .max((phi - i as f64 / n).abs())
            .max((j as f64 / n - phi).abs());
        i = j;
    }
    d
}

/// KS distance of `Y / rms(Y)` against the standard normal.
pub fn ks_against_gaussian(ball: &OrbitBall, f: &PeriodForm) -> Result<f64> {
    let ys = studentizable(ball, f)?;
    let rms = (par_sum_by(&ys, |y| y * y) / ys.len() as f64).sqrt();
    if !(rms > 0.0) {
        return Err(Error::Degenerate("all symbols vanish on the ball".into()));
    }
    let scaled: Vec<f64> = ys.iter().map(|y| y / rms).collect();
    Ok(ks_distance(&scaled))
}

/// `(2 / vol^2) pi e^x x`: the growth of `S_2 / |alpha|^2`.
fn second_moment_basis(x: f64, vol: f64) -> f64 {
    2.0 / (vol * vol) * PI * x.exp() * x
}

/// Least-squares `|alpha|^2` from `S_2(x) ~ (2 |alpha|^2 / vol^2) pi e^x x`
/// over reports at distinct radii.
pub fn estimate_norm_sq(reports: &[MomentReport], vol: f64) -> Result<f64> {
    let mut radii: Vec<f64> = reports.iter().map(|r| r.x).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    if radii.len() < 2 {
        return Err(Error::Degenerate(
            "norm estimation needs reports at two or more distinct radii".into(),
        ));
    }
    let mut num = Neumaier::new();
    let mut den = Neumaier::new();
    for r in reports {
        let phi = second_moment_basis(r.x, vol);
        let s2 = *r
            .raw_sums
            .get(2)
            .ok_or_else(|| Error::InvalidArgument("report lacks S_2".into()))?;
        num += s2 * phi;
        den += phi * phi;
    }
    let fit = num.value() / den.value();
    if !(fit > 0.0) || !fit.is_finite() {
        return Err(Error::Degenerate(format!(
            "non-positive norm fit {fit}; radius too small"
        )));
    }
    Ok(fit)
}

/// `|S_1| / N` per report; only meaningful for `z = w`.
pub fn first_moment_decay(reports: &[MomentReport]) -> Result<Vec<f64>> {
    reports
        .iter()
        .map(|r| {
            if r.z != r.w {
                return Err(Error::InvalidArgument(
                    "first-moment decay requires z = w".into(),
                ));
            }
            Ok(r.raw_sums[1].abs() / r.count as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::{enumerate_ball, EnumerationOptions};
    use crate::SurfaceGroup;

    fn ball(x: f64) -> OrbitBall {
        let g = SurfaceGroup::octagon(2).unwrap();
        let i = Point::i();
        enumerate_ball(&g, &i, &i, x, &EnumerationOptions::default()).unwrap()
    }

    #[test]
    fn normal_cdf_against_quadrature() {
        // Simpson on [0, x] with 2000 panels
        for &x in &[-4.0, -1.3, -0.2, 0.0, 0.5, 1.0, 2.7, 6.0] {
            let n = 2000;
            let h = x / n as f64;
            let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
            let mut s = phi(0.0) + phi(x);
            for k in 1..n {
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * phi(k as f64 * h);
            }
            let exact = 0.5 + s * h / 3.0;
            assert!((normal_cdf(x) - exact).abs() < 1e-7, "x={x}");
        }
    }

    #[test]
    fn ks_two_point_sample() {
        let d = ks_distance(&[-1.0, 1.0]);
        assert!((d - (0.5 - normal_cdf(-1.0))).abs() < 1e-12);
        assert!((d - 0.3413).abs() < 1e-4);
        assert!(ks_distance(&[0.0; 5]) >= 0.5);
    }

    #[test]
    fn raw_sums_on_trivial_ball() {
        let b = ball(1.0);
        let s = raw_moment_sums(&b, &PeriodForm::unit(4), 4).unwrap();
        assert_eq!(s, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(raw_moment_sums(&b, &PeriodForm::unit(4), 1).is_err());
    }

    #[test]
    fn report_invariants() {
        let b = ball(7.0);
        let vol = 4.0 * PI;
        let f = PeriodForm::new(vec![0.3, -1.0, 2.0, 0.7]).unwrap();
        let r = MomentReport::compute(&b, &f, vol, 6).unwrap();
        assert_eq!(r.raw_sums[0], r.count as f64);
        assert_eq!(r.studentized[2], 1.0);
        assert!(r.raw_sums[1].abs() <= 1e-9 * par_sum_by(&symbols(&b, &f).unwrap(), |s| s.abs()));
        let ks = r.ks.unwrap();
        assert!((0.0..=1.0).contains(&ks));
        assert!((r.huber_ratio.unwrap() - r.count as f64 * 4.0 / 7f64.exp()).abs() < 1e-12);

        let scaled = MomentReport::compute(&b, &f.scaled(-3.5).unwrap(), vol, 6).unwrap();
        for (a, c) in r.studentized.iter().zip(&scaled.studentized) {
            assert!((a - c).abs() <= 1e-12 * a.abs().max(1.0));
        }
        assert!((r.ks.unwrap() - scaled.ks.unwrap()).abs() < 1e-12);
        assert!(r.normalized_moments.is_none());
    }

    #[test]
    fn small_balls_are_rejected_for_studentized_stats() {
        let b = ball(3.5);
        assert!(matches!(
            studentized_moments(&b, &PeriodForm::unit(4), 4),
            Err(Error::TooFewRecords { .. })
        ));
        assert!(huber_ratio(&ball(0.5), 4.0 * PI).is_err());
    }

    #[test]
    fn norm_estimate_scaling_and_degeneracy() {
        let vol = 4.0 * PI;
        let f = PeriodForm::unit(4);
        let reports: Vec<_> = [6.0, 7.0]
            .iter()
            .map(|&x| MomentReport::compute(&ball(x), &f, vol, 2).unwrap())
            .collect();
        let est = estimate_norm_sq(&reports, vol).unwrap();
        let scaled: Vec<_> = [6.0, 7.0]
            .iter()
            .map(|&x| MomentReport::compute(&ball(x), &f.scaled(3.0).unwrap(), vol, 2).unwrap())
            .collect();
        let est3 = estimate_norm_sq(&scaled, vol).unwrap();
        assert!((est3 - 9.0 * est).abs() < 1e-12 * est3);
        let twice = vec![reports[0].clone(), reports[0].clone()];
        assert!(estimate_norm_sq(&twice, vol).is_err());
    }

    #[test]
    fn first_moment_requires_symmetric_basepoints() {
        let vol = 4.0 * PI;
        let f = PeriodForm::unit(4);
        let r = MomentReport::compute(&ball(6.0), &f, vol, 2).unwrap();
        let d = first_moment_decay(std::slice::from_ref(&r)).unwrap();
        assert!(d[0] < 1e-12);
        let mut asym = r;
        asym.w = Point::new(0.1, 1.0).unwrap();
        assert!(first_moment_decay(&[asym]).is_err());
    }
}
