//! Truncated twisted Huber series and probes of their poles at `s = 1`.
//!
//! `G^(n)(z, w, s) = (-i)^n sum <g, alpha>^n exp(-i eps <g, alpha>) cosh(r)^(-s)`
//! over the ball. Poles are probed, not continued: values at real `s`
//! approaching 1 from the right, completed with a tail from the leading
//! counting asymptotic, are Richardson-extrapolated to `s = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfplane::{cosh_dist, stencil_laplacian};
use crate::modsym::{eichler_ratio, symbol, PeriodForm};
use crate::orbit::OrbitBall;
use crate::summation::{Neumaier, CHUNK};
use crate::Point;

/// Smallest `Re(s)` accepted by [`evaluate`].
pub const MIN_RE_S: f64 = 1.05;
/// Probe nodes are `s = 1 + PROBE_STEP * 2^-k`, `k = 0, 1, 2`.
pub const PROBE_STEP: f64 = 0.5;
/// Largest relative disagreement tolerated between per-radius probe
/// estimates before the extrapolation is declared non-convergent.
pub const PROBE_SPREAD: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub n: u32,
    pub s: Complex64,
    pub epsilon: f64,
    pub truncation_radius: f64,
    pub value: Complex64,
    /// Estimated truncation error. A heuristic from the leading counting
    /// asymptotic, not a certified bound.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueProbe {
    pub n: u32,
    pub pole_order_tested: u32,
    pub leading_coefficient_estimate: f64,
    /// `None` for odd `n`, where no limit is predicted.
    pub target: Option<f64>,
    pub relative_error: Option<f64>,
    /// Extrapolated estimate for each truncation radius, ascending.
    pub per_radius: Vec<(f64, f64)>,
}

impl ResidueProbe {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.relative_error.is_some_and(|e| e <= tolerance)
    }
}

/// The data the series needs from a ball: `cosh r` and the symbol of
/// every record, sorted by distance.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesData {
    pub radius: f64,
    pub cosh_distances: Vec<f64>,
    pub symbols: Vec<f64>,
    /// `max |symbol| / (1 + r)` over the data.
    pub envelope: f64,
}

impl SeriesData {
    pub fn from_ball(ball: &OrbitBall, f: &PeriodForm) -> Result<Self> {
        Ok(Self {
            radius: ball.radius,
            cosh_distances: ball.records.iter().map(|r| r.cosh_distance).collect(),
            symbols: ball
                .records
                .iter()
                .map(|r| symbol(&r.element, f))
                .collect::<Result<_>>()?,
            envelope: eichler_ratio(ball, f)?,
        })
    }

    /// Synthetic data whose counting function is exactly
    /// `ceil(pi e^t / vol)` and whose symbols all vanish.
    pub fn planted(vol: f64, x: f64) -> Self {
        let mut cosh_distances = vec![1.0];
        for k in 1.. {
            let t = (k as f64 * vol / PI).ln().max(0.0);
            if t > x {
                break;
            }
            cosh_distances.push(t.cosh());
        }
        let symbols = vec![0.0; cosh_distances.len()];
        Self {
            radius: x,
            cosh_distances,
            symbols,
            envelope: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.cosh_distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cosh_distances.is_empty()
    }
}

/// Multiplies by `(-i)^n` exactly.
fn quarter_turns(v: Complex64, n: u32) -> Complex64 {
    match n % 4 {
        0 => v,
        1 => Complex64::new(v.im, -v.re),
        2 => -v,
        _ => Complex64::new(-v.im, v.re),
    }
}

fn check_args(n: i64, s: Complex64) -> Result<u32> {
    if n < 0 {
        return Err(Error::InvalidArgument(format!("n must be >= 0, got {n}")));
    }
    if !(s.re >= MIN_RE_S) {
        return Err(Error::InvalidArgument(format!(
            "Re(s) must be >= {MIN_RE_S}, got {}",
            s.re
        )));
    }
    Ok(n as u32)
}

fn coefficient(sym: f64, n: u32, epsilon: f64) -> Complex64 {
    let a = sym.powi(n as i32);
    if epsilon == 0.0 {
        Complex64::new(a, 0.0)
    } else {
        Complex64::from_polar(a, -epsilon * sym)
    }
}

/// `cosh(r)^(-s)`.
fn decay(c: f64, s: Complex64) -> Complex64 {
    (-s * c.ln()).exp()
}

/// The untwisted sum `sum sym^n e^(-i eps sym) cosh^-s`, without the
/// `(-i)^n` prefactor. Chunked compensated sums, merged in order.
fn raw_sum(data: &SeriesData, n: u32, s: Complex64, epsilon: f64) -> Complex64 {
    let idx: Vec<usize> = (0..data.len()).collect();
    let partials: Vec<(Neumaier<f64>, Neumaier<f64>)> = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut re = Neumaier::new();
            let mut im = Neumaier::new();
            for &k in chunk {
                let t = coefficient(data.symbols[k], n, epsilon) * decay(data.cosh_distances[k], s);
                re += t.re;
                im += t.im;
            }
            (re, im)
        })
        .collect();
    let mut re = Neumaier::new();
    let mut im = Neumaier::new();
    for (r, i) in &partials {
        re.merge(r);
        im.merge(i);
    }
    Complex64::new(re.value(), im.value())
}

/// `Gamma(k + 1, y) = k! e^-y sum_{j <= k} y^j / j!` for integer `k`.
fn upper_gamma_int(k: u32, y: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..=k {
        term *= y / j as f64;
        sum += term;
    }
    let fact: f64 = (1..=k).map(|j| j as f64).product();
    fact * (-y).exp() * sum
}

/// `int_x^inf t^k e^(-a t) dt` for `a > 0`.
fn power_exp_tail(k: u32, a: f64, x: f64) -> f64 {
    upper_gamma_int(k, a * x) / a.powi(k as i32 + 1)
}

/// Tail estimate `(pi/vol) int_x^inf cosh(t)^-sigma (K (1 + t))^n e^t dt`
/// using `cosh t >= e^t / 2`.
fn tail_bound(envelope: f64, n: u32, sigma: f64, x: f64, vol: f64) -> f64 {
    if n > 0 && envelope == 0.0 {
        return 0.0;
    }
    let a = sigma - 1.0;
    // substitute u = 1 + t
    let integral = (a).exp() * power_exp_tail(n, a, 1.0 + x);
    PI / vol * 2f64.powf(sigma) * envelope.powi(n as i32) * integral
}

/// Truncated `G^(n)(z, w, s, eps)` over the ball.
pub fn evaluate(
    ball: &OrbitBall,
    f: &PeriodForm,
    n: i64,
    s: Complex64,
    epsilon: f64,
    vol: f64,
) -> Result<SeriesValue> {
    evaluate_data(&SeriesData::from_ball(ball, f)?, n, s, epsilon, vol)
}

pub fn evaluate_data(
    data: &SeriesData,
    n: i64,
    s: Complex64,
    epsilon: f64,
    vol: f64,
) -> Result<SeriesValue> {
    let n = check_args(n, s)?;
    let envelope = if n == 0 { 1.0 } else { data.envelope };
    Ok(SeriesValue {
        n,
        s,
        epsilon,
        truncation_radius: data.radius,
        value: quarter_turns(raw_sum(data, n, s, epsilon), n),
        tail_bound: tail_bound(envelope, n, s.re, data.radius, vol),
    })
}

/// The same series by summation by parts over the distance-sorted data:
/// `sum a_k phi_k = A_N phi_N - sum_{k<N} A_k (phi_{k+1} - phi_k)` with
/// `A_k` the partial sums of the coefficients. Sequential; an independent
/// check on [`evaluate`].
pub fn evaluate_stieltjes(
    data: &SeriesData,
    n: i64,
    s: Complex64,
    epsilon: f64,
) -> Result<Complex64> {
    let n = check_args(n, s)?;
    let len = data.len();
    if len == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| data.cosh_distances[a].total_cmp(&data.cosh_distances[b]));
    let (mut a_re, mut a_im) = (Neumaier::new(), Neumaier::new());
    let (mut out_re, mut out_im) = (Neumaier::new(), Neumaier::new());
    for (pos, &k) in order.iter().enumerate() {
        let a = coefficient(data.symbols[k], n, epsilon);
        a_re += a.re;
        a_im += a.im;
        let partial = Complex64::new(a_re.value(), a_im.value());
        let phi = decay(data.cosh_distances[k], s);
        let step = match order.get(pos + 1) {
            Some(&next) => phi - decay(data.cosh_distances[next], s),
            None => phi,
        };
        let t = partial * step;
        out_re += t.re;
        out_im += t.im;
    }
    Ok(quarter_turns(
        Complex64::new(out_re.value(), out_im.value()),
        n,
    ))
}

/// Leading coefficient of `sum S^(2m)`'s counting function:
/// `S_2m(t) ~ C_m e^t t^m` with `C_m = pi (2m)! |alpha|^2m / (m! vol^(m+1))`.
fn counting_constant(m: u32, norm_sq: f64, vol: f64) -> f64 {
    let fact = |k: u32| (1..=k).map(|j| j as f64).product::<f64>();
    PI * fact(2 * m) * norm_sq.powi(m as i32) / (fact(m) * vol.powi(m as i32 + 1))
}

/// Modelled `sum_{r > x} sym^2m cosh(r)^-s` for real `s > 1`, from
/// `dS = C_m e^t (t^m + m t^(m-1)) dt` and
/// `cosh(t)^-s ~ 2^s (e^-st - s e^-(s+2)t)`.
fn modelled_tail(m: u32, s: f64, x: f64, c_m: f64) -> f64 {
    let piece = |a: f64| {
        let lead = power_exp_tail(m, a, x);
        let lower = if m > 0 {
            m as f64 * power_exp_tail(m - 1, a, x)
        } else {
            0.0
        };
        lead + lower
    };
    c_m * 2f64.powf(s) * (piece(s - 1.0) - s * piece(s + 1.0))
}

/// Neville extrapolation of `(h_k, f_k)` to `h = 0`.
fn richardson(nodes: &[(f64, f64)]) -> f64 {
    let mut p: Vec<f64> = nodes.iter().map(|(_, f)| *f).collect();
    let h: Vec<f64> = nodes.iter().map(|(h, _)| *h).collect();
    for level in 1..p.len() {
        for i in (level..p.len()).rev() {
            let (hi, hl) = (h[i], h[i - level]);
            p[i] = (hi * p[i - 1] - hl * p[i]) / (hi - hl);
        }
    }
    p[p.len() - 1]
}

fn probe_nodes() -> [f64; 3] {
    [PROBE_STEP, PROBE_STEP / 2.0, PROBE_STEP / 4.0]
}

/// Estimate of `lim (s-1)^(m+1) sum sym^2m cosh^-s` from one truncation.
fn extrapolate_even(data: &SeriesData, m: u32, c_m: f64) -> Result<f64> {
    let mut samples = Vec::with_capacity(3);
    for h in probe_nodes() {
        let s = 1.0 + h;
        let trunc = raw_sum(data, 2 * m, Complex64::new(s, 0.0), 0.0).re;
        let full = trunc + modelled_tail(m, s, data.radius, c_m);
        samples.push((h, h.powi(m as i32 + 1) * full));
    }
    let v = richardson(&samples);
    if !v.is_finite() {
        return Err(Error::Extrapolation(format!(
            "non-finite estimate from {samples:?}"
        )));
    }
    Ok(v)
}

fn sorted_by_radius(data: &[SeriesData], needed: usize) -> Result<Vec<&SeriesData>> {
    let mut v: Vec<&SeriesData> = data.iter().collect();
    v.sort_by(|a, b| a.radius.total_cmp(&b.radius));
    let distinct = v.windows(2).all(|w| w[0].radius < w[1].radius);
    if v.len() < needed || !distinct {
        return Err(Error::InvalidArgument(format!(
            "probe needs {needed} truncations at distinct radii, got {}",
            data.len()
        )));
    }
    Ok(v)
}

fn even_probe(data: &[SeriesData], m: u32, norm_sq: f64, vol: f64) -> Result<ResidueProbe> {
    let data = sorted_by_radius(data, 3)?;
    if m > 0 && data.iter().all(|d| d.symbols.iter().all(|&s| s == 0.0)) {
        return Err(Error::Degenerate(
            "all symbols vanish; nothing to probe".into(),
        ));
    }
    let c_m = counting_constant(m, norm_sq, vol);
    let per_radius = data
        .iter()
        .map(|d| Ok((d.radius, extrapolate_even(d, m, c_m)?)))
        .collect::<Result<Vec<_>>>()?;
    let target = 2.0 * PI * (1..=2 * m).map(|j| j as f64).product::<f64>() * norm_sq.powi(m as i32)
        / vol.powi(m as i32 + 1);
    let estimate = per_radius.last().unwrap().1;
    let (_, prev) = per_radius[per_radius.len() - 2];
    if ((estimate - prev) / estimate).abs() > PROBE_SPREAD {
        return Err(Error::Extrapolation(format!(
            "estimates drift across radii: {per_radius:?}"
        )));
    }
    Ok(ResidueProbe {
        n: 2 * m,
        pole_order_tested: m + 1,
        leading_coefficient_estimate: estimate,
        target: Some(target),
        relative_error: Some(((estimate - target) / target).abs()),
        per_radius,
    })
}

/// `lim (s-1) G(z, w, s)`, predicted to be `2 pi / vol`.
pub fn huber_residue_probe(data: &[SeriesData], vol: f64) -> Result<ResidueProbe> {
    even_probe(data, 0, 1.0, vol)
}

/// `lim (s-1)^(m+1) (-1)^m G^(2m)(z, w, s)`, predicted to be
/// `2 pi (2m)! |alpha|^2m / vol^(m+1)`.
pub fn even_leading_coefficient_probe(
    data: &[SeriesData],
    norm_sq: f64,
    vol: f64,
    m: u32,
) -> Result<ResidueProbe> {
    if !(1..=2).contains(&m) {
        return Err(Error::InvalidArgument(format!("m must be 1 or 2, got {m}")));
    }
    if !(norm_sq > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "norm_sq must be > 0, got {norm_sq}"
        )));
    }
    even_probe(data, m, norm_sq, vol)
}

/// For odd `n` only the pole order is known, so the probe reports the
/// truncated `(s-1)^([n/2]+1) |G^(n)|` extrapolation without a target.
pub fn odd_probe(data: &[SeriesData], n: u32) -> Result<ResidueProbe> {
    if n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("n must be odd, got {n}")));
    }
    let data = sorted_by_radius(data, 1)?;
    let order = n / 2 + 1;
    let per_radius = data
        .iter()
        .map(|d| {
            let samples: Vec<(f64, f64)> = probe_nodes()
                .iter()
                .map(|&h| {
                    let v = raw_sum(d, n, Complex64::new(1.0 + h, 0.0), 0.0).re;
                    (h, h.powi(order as i32) * v)
                })
                .collect();
            (d.radius, richardson(&samples))
        })
        .collect::<Vec<_>>();
    Ok(ResidueProbe {
        n,
        pole_order_tested: order,
        leading_coefficient_estimate: per_radius.last().unwrap().1,
        target: None,
        relative_error: None,
        per_radius,
    })
}

/// Relative defect of `Delta G(s) + s(1-s) G(s) = -s(s+1) G(s+2)` at the
/// ball's base point `z`, with `G(., w, s)` summed over the ball's
/// elements and `Delta` the five-point stencil with mesh `h`.
pub fn shifted_equation_check(ball: &OrbitBall, s: Complex64, h: f64) -> Result<f64> {
    if !(s.re >= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "Re(s) must be >= 2, got {}",
            s.re
        )));
    }
    let w = ball.base_w;
    let z = ball.base_z;
    let series = |p: &Point, s: Complex64| -> Complex64 {
        let mut re = Neumaier::new();
        let mut im = Neumaier::new();
        for r in &ball.records {
            let t = decay(cosh_dist(&r.element.matrix.apply(p), &w), s);
            re += t.re;
            im += t.im;
        }
        Complex64::new(re.value(), im.value())
    };
    let lap_re = stencil_laplacian(|p| series(p, s).re, &z, h)?;
    let lap_im = stencil_laplacian(|p| series(p, s).im, &z, h)?;
    let lap = Complex64::new(lap_re, lap_im);
    let g = series(&z, s);
    let shifted = s * (s + 1.0) * series(&z, s + 2.0);
    Ok((lap + s * (1.0 - s) * g + shifted).norm() / shifted.norm())
}
