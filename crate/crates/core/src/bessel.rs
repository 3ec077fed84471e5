//! Integer-order Bessel functions of real positive argument.
//!
//! `J` and scaled `I` come from Miller's backward recurrence normalized by the
//! Neumann sums `J0 + 2ΣJ2k = 1` and `e^{-x}(I0 + 2ΣIk) = 1`. `Y0`/`Y1` use the
//! Neumann series below `x = 20` and Hankel's asymptotic expansion above it;
//! `K0`/`K1` are obtained from the trapezoidal rule applied to
//! `e^x K_ν(x) = ∫₀^∞ exp(-x(cosh t - 1)) cosh(νt) dt`, which converges
//! geometrically for this entire integrand. Higher orders of `Y` and `K` follow
//! by forward recurrence, which is stable for both.
//!
//! `I` and `K` are returned exponentially scaled for `x > 50`.

use std::f64::consts::PI;

use crate::error::{PlateError, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Threshold above which `I_p` and `K_p` are returned in scaled form.
pub const SCALE_THRESHOLD: f64 = 50.0;

const HANKEL_THRESHOLD: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BesselKind {
    /// First kind `J_p`.
    J,
    /// Second kind `Y_p`.
    Y,
    /// Modified first kind `I_p`.
    I,
    /// Modified second kind `K_p`.
    K,
}

/// Value and first derivative of a Bessel function.
///
/// When `scaled` is set, the true values are `value * exp(log_scale)` and
/// `derivative * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub value: f64,
    pub derivative: f64,
    pub scaled: bool,
    pub log_scale: f64,
}

impl BesselEval {
    /// Unscaled value; may overflow to infinity for large scaled arguments.
    pub fn unscaled_value(&self) -> f64 {
        if self.scaled {
            self.value * self.log_scale.exp()
        } else {
            self.value
        }
    }

    pub fn unscaled_derivative(&self) -> f64 {
        if self.scaled {
            self.derivative * self.log_scale.exp()
        } else {
            self.derivative
        }
    }
}

/// Evaluates `kind` of integer order `p` at `x`, with its derivative.
pub fn bessel(kind: BesselKind, p: u32, x: f64) -> Result<BesselEval> {
    if !x.is_finite() || x < 0.0 {
        return Err(PlateError::Domain(format!(
            "Bessel argument must be finite and non-negative, got {x}"
        )));
    }
    if x == 0.0 {
        return at_origin(kind, p);
    }
    let p = p as usize;
    let (value, derivative, log_scale) = match kind {
        BesselKind::J => {
            let j = j_sequence(p + 1, x);
            (j[p], derivative_first_kind(&j, p, x, -1.0), 0.0)
        }
        BesselKind::Y => {
            let y = y_sequence(p + 1, x);
            (y[p], derivative_first_kind(&y, p, x, -1.0), 0.0)
        }
        BesselKind::I => {
            let i = i_scaled_sequence(p + 1, x);
            (i[p], derivative_first_kind(&i, p, x, 1.0), x)
        }
        BesselKind::K => {
            let k = k_scaled_sequence(p + 1, x);
            let d = if p == 0 {
                -k[1]
            } else {
                -k[p - 1] - p as f64 / x * k[p]
            };
            (k[p], d, -x)
        }
    };
    if !value.is_finite() || !derivative.is_finite() {
        return Err(PlateError::Range(format!(
            "{kind:?}_{p}({x}) is not representable"
        )));
    }
    let scaled = matches!(kind, BesselKind::I | BesselKind::K) && x > SCALE_THRESHOLD;
    if matches!(kind, BesselKind::I | BesselKind::K) && !scaled {
        let f = log_scale.exp();
        let (v, d) = (value * f, derivative * f);
        if !v.is_finite() || !d.is_finite() {
            return Err(PlateError::Range(format!(
                "{kind:?}_{p}({x}) overflows without scaling"
            )));
        }
        return Ok(BesselEval {
            value: v,
            derivative: d,
            scaled: false,
            log_scale: 0.0,
        });
    }
    Ok(BesselEval {
        value,
        derivative,
        scaled,
        log_scale: if scaled { log_scale } else { 0.0 },
    })
}

/// `C_p' = C_{p-1} - (p/x) C_p`, with `C_0' = sign * C_1` (`-J1`, `-Y1`, `+I1`).
fn derivative_first_kind(seq: &[f64], p: usize, x: f64, sign_p0: f64) -> f64 {
    if p == 0 {
        sign_p0 * seq[1]
    } else {
        seq[p - 1] - p as f64 / x * seq[p]
    }
}

fn at_origin(kind: BesselKind, p: u32) -> Result<BesselEval> {
    let (value, derivative) = match (kind, p) {
        (BesselKind::J | BesselKind::I, 0) => (1.0, 0.0),
        (BesselKind::J | BesselKind::I, 1) => (0.0, 0.5),
        (BesselKind::J | BesselKind::I, _) => (0.0, 0.0),
        (BesselKind::Y | BesselKind::K, _) => {
            return Err(PlateError::Domain(format!(
                "{kind:?}_{p} is singular at x = 0"
            )))
        }
    };
    Ok(BesselEval {
        value,
        derivative,
        scaled: false,
        log_scale: 0.0,
    })
}

fn miller_start(n_max: usize, x: f64) -> usize {
    let top = (n_max as f64).max(x);
    let n = (top + 20.0 + 10.0 * x.cbrt()).ceil() as usize;
    n + (n & 1)
}

/// `J_0(x) ..= J_{n_max}(x)` for `x > 0`.
pub fn j_sequence(n_max: usize, x: f64) -> Vec<f64> {
    let start = miller_start(n_max, x);
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * vals[k] - vals[k + 1];
        vals[k - 1] = prev;
        if prev.abs() > 1e250 {
            for v in vals.iter_mut() {
                *v *= 1e-250;
            }
            norm *= 1e-250;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * vals[k - 1];
        }
    }
    norm += vals[0];
    vals.truncate(n_max + 1);
    for v in vals.iter_mut() {
        *v /= norm;
    }
    vals
}

/// `e^{-x} I_0(x) ..= e^{-x} I_{n_max}(x)` for `x > 0`.
pub fn i_scaled_sequence(n_max: usize, x: f64) -> Vec<f64> {
    let start = n_max + 30 + (80.0 * x).sqrt().ceil() as usize;
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * vals[k] + vals[k + 1];
        vals[k - 1] = prev;
        if prev > 1e250 {
            for v in vals.iter_mut() {
                *v *= 1e-250;
            }
            norm *= 1e-250;
        }
        if k - 1 > 0 {
            norm += 2.0 * vals[k - 1];
        }
    }
    norm += vals[0];
    vals.truncate(n_max + 1);
    for v in vals.iter_mut() {
        *v /= norm;
    }
    vals
}

/// Hankel's asymptotic `(P, Q)` for order `nu`; accurate to rounding for `x ≥ 20`
/// and small orders.
fn hankel_pq(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() >= last || term.abs() < 1e-18 {
            break;
        }
        last = term.abs();
        // terms alternate between Q (odd k) and P (even k), each with sign (-1)^{floor(k/2)}
        let signed = if (k / 2) % 2 == 0 { term } else { -term };
        if k % 2 == 1 {
            q += signed;
        } else {
            p += signed;
        }
    }
    (p, q)
}

fn y0_y1(x: f64) -> (f64, f64) {
    if x >= HANKEL_THRESHOLD {
        let amp = (2.0 / (PI * x)).sqrt();
        let (p0, q0) = hankel_pq(0.0, x);
        let (p1, q1) = hankel_pq(1.0, x);
        let c0 = x - 0.25 * PI;
        let c1 = x - 0.75 * PI;
        let y0 = amp * (p0 * c0.sin() + q0 * c0.cos());
        let y1 = amp * (p1 * c1.sin() + q1 * c1.cos());
        return (y0, y1);
    }
    let j = j_sequence(miller_start(1, x), x);
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = 2.0 / PI * log_term * j[0] - 4.0 / PI * s0;
    let y1 = -2.0 / PI * (j[0] / x - log_term * j[1]) + 2.0 / PI * s1;
    (y0, y1)
}

/// `Y_0(x) ..= Y_{n_max}(x)` for `x > 0`.
pub fn y_sequence(n_max: usize, x: f64) -> Vec<f64> {
    let (y0, y1) = y0_y1(x);
    let mut vals = Vec::with_capacity(n_max.max(1) + 1);
    vals.push(y0);
    vals.push(y1);
    for k in 1..n_max {
        let next = 2.0 * k as f64 / x * vals[k] - vals[k - 1];
        vals.push(next);
    }
    vals.truncate(n_max + 1);
    vals
}

/// `e^x K_0(x)` and `e^x K_1(x)` by the trapezoidal rule.
fn k0_k1_scaled(x: f64) -> (f64, f64) {
    let h = 0.25 * (1.0 / x.sqrt()).min(1.0);
    let t_max = (1.0 + 45.0 / x).acosh();
    let n = (t_max / h).ceil() as usize;
    let mut s0 = 0.5;
    let mut s1 = 0.5;
    for i in 1..=n {
        let t = i as f64 * h;
        let e = (-x * (t.cosh() - 1.0)).exp();
        s0 += e;
        s1 += e * t.cosh();
    }
    (s0 * h, s1 * h)
}

/// `e^x K_0(x) ..= e^x K_{n_max}(x)` for `x > 0`.
pub fn k_scaled_sequence(n_max: usize, x: f64) -> Vec<f64> {
    let (k0, k1) = k0_k1_scaled(x);
    let mut vals = Vec::with_capacity(n_max.max(1) + 1);
    vals.push(k0);
    vals.push(k1);
    for k in 1..n_max {
        let next = vals[k - 1] + 2.0 * k as f64 / x * vals[k];
        vals.push(next);
    }
    vals.truncate(n_max + 1);
    vals
}

/// Residuals of the Wronskians `J Y' - J' Y = 2/(πx)` and `I K' - I' K = -1/x`,
/// each relative to its exact value.
pub fn wronskian_check(p: u32, x: f64) -> Result<(f64, f64)> {
    if x <= 0.0 {
        return Err(PlateError::Domain(format!(
            "Wronskian needs x > 0, got {x}"
        )));
    }
    let pu = p as usize;
    let j = j_sequence(pu + 1, x);
    let y = y_sequence(pu + 1, x);
    let i = i_scaled_sequence(pu + 1, x);
    let k = k_scaled_sequence(pu + 1, x);
    let jd = derivative_first_kind(&j, pu, x, -1.0);
    let yd = derivative_first_kind(&y, pu, x, -1.0);
    let id = derivative_first_kind(&i, pu, x, 1.0);
    let kd = if pu == 0 {
        -k[1]
    } else {
        -k[pu - 1] - p as f64 / x * k[pu]
    };
    // e^{-x} and e^{x} cancel in the modified-function products.
    let target_jy = 2.0 / (PI * x);
    let target_ik = -1.0 / x;
    let r_jy = ((j[pu] * yd - jd * y[pu]) - target_jy).abs() / target_jy;
    let r_ik = ((i[pu] * kd - id * k[pu]) - target_ik).abs() / target_ik.abs();
    Ok((r_jy, r_ik))
}
