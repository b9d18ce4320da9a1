//! Quadrature, divergence detection and cumulant/moment algebra.
//!
//! Integration is adaptive Gauss-Kronrod (21 points) with a global error
//! heap. Semi-infinite domains are cut at the rule's `tail_cutoffs`; the
//! growth of the integral across consecutive cutoffs decides whether the
//! integral converges, and the remainder beyond the last cutoff is mapped to
//! a finite interval by `e = c / u`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail exponents at or above this value count as non-decaying.
const DIVERGENCE_SLOPE: f64 = -0.05;
/// Reported when a tail piece overflows (exponential or faster growth).
pub const OVERFLOW_EXPONENT: f64 = 1.0e3;
const TAIL_SUBDIVISIONS: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureRule {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub tail_cutoffs: Vec<f64>,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 200_000,
            tail_cutoffs: vec![10.0, 1e2, 1e3, 1e4],
        }
    }
}

impl QuadratureRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::invalid("quadrature tolerances must be positive"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::invalid("max_subdivisions must be positive"));
        }
        if self.tail_cutoffs.len() < 4 {
            return Err(Error::invalid("tail_cutoffs needs at least 4 entries"));
        }
        if self.tail_cutoffs.windows(2).any(|w| !(w[1] > w[0])) || !(self.tail_cutoffs[0] > 0.0) {
            return Err(Error::invalid("tail_cutoffs must be positive and strictly increasing"));
        }
        Ok(())
    }

    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    fn target(&self, scale: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * scale)
    }

    /// Cutoffs strictly above `a`, extended geometrically if too few remain.
    fn cutoffs_above(&self, a: f64) -> Vec<f64> {
        let mut cs: Vec<f64> = self.tail_cutoffs.iter().copied().filter(|&c| c > a).collect();
        let ratio = {
            let n = self.tail_cutoffs.len();
            (self.tail_cutoffs[n - 1] / self.tail_cutoffs[n - 2]).max(2.0)
        };
        if cs.is_empty() {
            cs.push(a.abs().max(1.0) * ratio + a.max(0.0));
        }
        while cs.len() < 4 {
            let last = *cs.last().unwrap();
            cs.push(last * ratio);
        }
        cs
    }
}

/// Outcome of an integral whose finiteness is part of the question.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum Verdict<T> {
    Convergent { value: T, err_estimate: f64 },
    Divergent { growth_exponent: f64 },
    Inconclusive { reason: String },
}

pub type IntegralVerdict = Verdict<f64>;

impl<T: Copy> Verdict<T> {
    pub fn is_convergent(&self) -> bool {
        matches!(self, Verdict::Convergent { .. })
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, Verdict::Divergent { .. })
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self, Verdict::Inconclusive { .. })
    }

    pub fn value(&self) -> Option<T> {
        match self {
            Verdict::Convergent { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn err_estimate(&self) -> Option<f64> {
        match self {
            Verdict::Convergent { err_estimate, .. } => Some(*err_estimate),
            _ => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            Verdict::Convergent { .. } => "Convergent",
            Verdict::Divergent { .. } => "Divergent",
            Verdict::Inconclusive { .. } => "Inconclusive",
        }
    }

    pub fn map<U>(self, g: impl FnOnce(T) -> U) -> Verdict<U> {
        match self {
            Verdict::Convergent { value, err_estimate } => Verdict::Convergent {
                value: g(value),
                err_estimate,
            },
            Verdict::Divergent { growth_exponent } => Verdict::Divergent { growth_exponent },
            Verdict::Inconclusive { reason } => Verdict::Inconclusive { reason },
        }
    }
}

impl<T: Integrand> Verdict<T> {
    /// Verdict for the sum of two integrals.
    pub fn plus(self, other: Verdict<T>) -> Verdict<T> {
        use Verdict::*;
        match (self, other) {
            (Inconclusive { reason }, _) | (_, Inconclusive { reason }) => Inconclusive { reason },
            (Divergent { growth_exponent: a }, Divergent { growth_exponent: b }) => Divergent {
                growth_exponent: a.max(b),
            },
            (d @ Divergent { .. }, _) | (_, d @ Divergent { .. }) => d,
            (
                Convergent { value: a, err_estimate: ea },
                Convergent { value: b, err_estimate: eb },
            ) => Convergent {
                value: a + b,
                err_estimate: ea + eb,
            },
        }
    }
}

/// Scalar types the quadrature can sum: `f64` and `Complex64`.
pub trait Integrand:
    Copy
    + Debug
    + Default
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
{
    fn modulus(self) -> f64;
    fn is_nan(self) -> bool;
    fn is_finite(self) -> bool;
    /// Real part, used for sign checks on nonnegative densities.
    fn real(self) -> f64;
}

impl Integrand for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_nan(self) -> bool {
        f64::is_nan(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn real(self) -> f64 {
        self
    }
}

impl Integrand for c64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_nan(self) -> bool {
        self.re.is_nan() || self.im.is_nan()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn real(self) -> f64 {
        self.re
    }
}

/// Integration domain. Only the upper end may be unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Interval(f64, f64),
    HalfLine(f64),
    /// (0, ∞) with possible singularities at both ends.
    PositiveAxis,
}

// Gauss-Kronrod 21-point abscissae and weights (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208980329034,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Why an evaluation was rejected.
#[derive(Debug)]
enum EvalFail {
    Nan { at: f64, value: String },
    Infinite { at: f64, value: String },
}

impl EvalFail {
    fn into_error(self) -> Error {
        match self {
            EvalFail::Nan { at, value } | EvalFail::Infinite { at, value } => {
                Error::NonEvaluable { at, value }
            }
        }
    }
}

fn eval<T: Integrand>(f: &impl Fn(f64) -> T, x: f64) -> std::result::Result<T, EvalFail> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else if y.is_nan() {
        Err(EvalFail::Nan {
            at: x,
            value: format!("{y:?}"),
        })
    } else {
        Err(EvalFail::Infinite {
            at: x,
            value: format!("{y:?}"),
        })
    }
}

fn gk21<T: Integrand>(
    f: &impl Fn(f64) -> T,
    a: f64,
    b: f64,
) -> std::result::Result<(T, f64), EvalFail> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = eval(f, center)?;
    let mut res_g = T::default();
    let mut res_k = fc * WGK[10];
    let mut res_abs = fc.modulus() * WGK[10];
    let mut fv1 = [T::default(); 10];
    let mut fv2 = [T::default(); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += (f1 + f2) * WGK[j];
        res_abs += (f1.modulus() + f2.modulus()) * WGK[j];
        if j % 2 == 1 {
            res_g += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).modulus();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).modulus() + (fv2[j] - mean).modulus());
    }
    let h = half.abs();
    res_asc *= h;
    res_abs *= h;
    let mut err = ((res_k - res_g) * half).modulus();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((res_k * half, err))
}

struct Piece<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Piece<T> {}
impl<T> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

struct Adaptive<T> {
    value: T,
    err: f64,
    converged: bool,
}

/// Adaptive GK21 over consecutive pieces `edges[i]..edges[i+1]`.
/// The error target is `max(abs_tol, rel_tol·|offset + value|)`.
fn adaptive<T: Integrand>(
    f: &impl Fn(f64) -> T,
    edges: &[f64],
    rule: &QuadratureRule,
    offset: T,
    budget: usize,
) -> std::result::Result<Adaptive<T>, EvalFail> {
    let mut heap = BinaryHeap::new();
    let mut frozen_value = T::default();
    let mut frozen_err = 0.0;
    let mut total = T::default();
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk21(f, w[0], w[1])?;
        total += v;
        total_err += e;
        heap.push(Piece {
            a: w[0],
            b: w[1],
            value: v,
            err: e,
        });
    }
    let mut splits = 0;
    loop {
        let target = rule.target((offset + total).modulus());
        if total_err <= target {
            return Ok(Adaptive {
                value: total,
                err: total_err,
                converged: true,
            });
        }
        if splits >= budget {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b)
            || (worst.b - worst.a) <= 8.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs())
        {
            frozen_value += worst.value;
            frozen_err += worst.err;
            continue;
        }
        let (v1, e1) = gk21(f, worst.a, mid)?;
        let (v2, e2) = gk21(f, mid, worst.b)?;
        total = total - worst.value + v1 + v2;
        total_err = total_err - worst.err + e1 + e2;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
        splits += 1;
    }
    // Re-sum to shed drift from the incremental updates.
    let mut value = frozen_value;
    let mut err = frozen_err;
    for p in heap.iter() {
        value += p.value;
        err += p.err;
    }
    let converged = err <= rule.target((offset + value).modulus());
    Ok(Adaptive {
        value,
        err,
        converged,
    })
}

fn edges_with_breaks(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut edges = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(b);
    edges
}

/// Integrates `f` over `domain`. Convergence on unbounded domains is decided
/// from the growth of the integral across the rule's tail cutoffs.
pub fn integrate<T: Integrand>(
    f: impl Fn(f64) -> T,
    domain: Domain,
    rule: &QuadratureRule,
) -> Result<Verdict<T>> {
    integrate_with_breaks(f, domain, &[], rule)
}

/// As [`integrate`], with known kinks or near-singular points of `f`.
pub fn integrate_with_breaks<T: Integrand>(
    f: impl Fn(f64) -> T,
    domain: Domain,
    breaks: &[f64],
    rule: &QuadratureRule,
) -> Result<Verdict<T>> {
    rule.validate()?;
    run(&f, domain, breaks, rule, false)
}

/// Finiteness test for a nonnegative density. Non-monotone partial
/// integrals (a sign the density is not nonnegative) give `Inconclusive`.
pub fn detect_divergence(
    f: impl Fn(f64) -> f64,
    domain: Domain,
    rule: &QuadratureRule,
) -> Result<IntegralVerdict> {
    detect_divergence_with_breaks(f, domain, &[], rule)
}

pub fn detect_divergence_with_breaks(
    f: impl Fn(f64) -> f64,
    domain: Domain,
    breaks: &[f64],
    rule: &QuadratureRule,
) -> Result<IntegralVerdict> {
    rule.validate()?;
    run(&f, domain, breaks, rule, true)
}

fn run<T: Integrand>(
    f: &impl Fn(f64) -> T,
    domain: Domain,
    breaks: &[f64],
    rule: &QuadratureRule,
    nonneg: bool,
) -> Result<Verdict<T>> {
    match domain {
        Domain::Interval(a, b) => {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(Error::invalid(format!("bad interval [{a}, {b}]")));
            }
            finite_interval(f, a, b, breaks, rule, nonneg)
        }
        Domain::HalfLine(a) => {
            if !a.is_finite() {
                return Err(Error::invalid("half-line start must be finite"));
            }
            half_line(f, a, breaks, rule, nonneg)
        }
        Domain::PositiveAxis => {
            let upper = half_line(f, 1.0, breaks, rule, nonneg)?;
            // ∫_0^1 g(e) de = ∫_1^∞ g(1/u) / u² du
            let lower_f = |u: f64| f(1.0 / u) * (1.0 / (u * u));
            let lower_breaks: Vec<f64> = breaks
                .iter()
                .filter(|&&b| b > 0.0 && b < 1.0)
                .map(|b| 1.0 / b)
                .collect();
            let lower = half_line(&lower_f, 1.0, &lower_breaks, rule, nonneg)?;
            Ok(lower.plus(upper))
        }
    }
}

fn finite_interval<T: Integrand>(
    f: &impl Fn(f64) -> T,
    a: f64,
    b: f64,
    breaks: &[f64],
    rule: &QuadratureRule,
    nonneg: bool,
) -> Result<Verdict<T>> {
    if a == b {
        return Ok(Verdict::Convergent {
            value: T::default(),
            err_estimate: 0.0,
        });
    }
    let edges = edges_with_breaks(a, b, breaks);
    let r = adaptive(f, &edges, rule, T::default(), rule.max_subdivisions)
        .map_err(EvalFail::into_error)?;
    if nonneg && r.value.real() < -r.err.max(rule.abs_tol) {
        return Ok(Verdict::Inconclusive {
            reason: "negative integral of a density declared nonnegative".into(),
        });
    }
    if r.converged || r.err <= 1e3 * rule.target(r.value.modulus()) {
        Ok(Verdict::Convergent {
            value: r.value,
            err_estimate: r.err,
        })
    } else {
        Ok(Verdict::Inconclusive {
            reason: format!(
                "subdivision budget exhausted on [{a}, {b}] (error estimate {:.3e})",
                r.err
            ),
        })
    }
}

fn half_line<T: Integrand>(
    f: &impl Fn(f64) -> T,
    a: f64,
    breaks: &[f64],
    rule: &QuadratureRule,
    nonneg: bool,
) -> Result<Verdict<T>> {
    let cutoffs = rule.cutoffs_above(a);
    let k = cutoffs.len();
    let mut increments: Vec<T> = Vec::with_capacity(k);
    let mut partials: Vec<T> = Vec::with_capacity(k);
    let mut err_total = 0.0;
    let mut lo = a;
    let mut running = T::default();
    for (i, &c) in cutoffs.iter().enumerate() {
        let edges = edges_with_breaks(lo, c, breaks);
        match adaptive(f, &edges, rule, running, rule.max_subdivisions) {
            Ok(r) => {
                running += r.value;
                err_total += r.err;
                increments.push(r.value);
                partials.push(running);
            }
            Err(EvalFail::Infinite { .. }) if i > 0 => {
                return Ok(Verdict::Divergent {
                    growth_exponent: OVERFLOW_EXPONENT,
                });
            }
            Err(e) => return Err(e.into_error()),
        }
        lo = c;
    }

    if increments.iter().any(|d| !d.is_finite()) {
        return Ok(Verdict::Divergent {
            growth_exponent: OVERFLOW_EXPONENT,
        });
    }

    if nonneg {
        for (i, d) in increments.iter().enumerate() {
            let tol = rule.target(partials[i].modulus());
            if d.real() < -tol {
                return Ok(Verdict::Inconclusive {
                    reason: format!(
                        "partial integrals decrease between cutoffs (increment {:.3e} on piece {i})",
                        d.real()
                    ),
                });
            }
        }
    }

    let tol_last = rule.target(partials[k - 1].modulus());
    let d = |i: usize| increments[i].modulus();
    if d(k - 1) <= tol_last {
        // The last band contributes below tolerance; whatever lies beyond
        // is estimated by the mapped tail.
        return finish_convergent(f, &cutoffs, &increments, running, err_total, rule);
    }

    let slope = |i: usize| -> f64 {
        let (d1, d0) = (d(i), d(i - 1));
        if d1 == 0.0 {
            return f64::NEG_INFINITY;
        }
        if d0 == 0.0 {
            return f64::INFINITY;
        }
        (d1 / d0).ln() / (cutoffs[i] / cutoffs[i - 1]).ln()
    };
    let s_last = slope(k - 1);
    let s_prev = slope(k - 2);
    let growing = (k - 3..k).all(|i| d(i) > 10.0 * rule.rel_tol * partials[i].modulus());

    match (s_last >= DIVERGENCE_SLOPE, s_prev >= DIVERGENCE_SLOPE) {
        (true, true) => {
            if growing {
                let exponent = if s_last < 0.05 { 0.0 } else { s_last };
                Ok(Verdict::Divergent {
                    growth_exponent: exponent,
                })
            } else {
                finish_convergent(f, &cutoffs, &increments, running, err_total, rule)
            }
        }
        (false, false) | (false, true) => {
            finish_convergent(f, &cutoffs, &increments, running, err_total, rule)
        }
        (true, false) => Ok(Verdict::Inconclusive {
            reason: format!(
                "tail exponent changes from {s_prev:.3} to {s_last:.3} across the last cutoffs"
            ),
        }),
    }
}

fn finish_convergent<T: Integrand>(
    f: &impl Fn(f64) -> T,
    cutoffs: &[f64],
    increments: &[T],
    running: T,
    err_total: f64,
    rule: &QuadratureRule,
) -> Result<Verdict<T>> {
    let k = cutoffs.len();
    let c = cutoffs[k - 1];
    // ∫_c^∞ g(e) de = ∫_0^1 g(c/u) c/u² du
    let mapped = |u: f64| {
        if u <= 0.0 {
            T::default()
        } else {
            f(c / u) * (c / (u * u))
        }
    };
    let tail = adaptive(&mapped, &[0.0, 1.0], rule, running, TAIL_SUBDIVISIONS);
    if let Ok(t) = &tail {
        if t.converged {
            return Ok(Verdict::Convergent {
                value: running + t.value,
                err_estimate: err_total + t.err,
            });
        }
    }
    // Geometric continuation of the last increments.
    let (d2, d1, d0) = (increments[k - 1], increments[k - 2], increments[k - 3]);
    if d1.modulus() == 0.0 {
        return Ok(Verdict::Convergent {
            value: running,
            err_estimate: err_total + d2.modulus(),
        });
    }
    let r = d2.modulus() / d1.modulus();
    let r_prev = if d0.modulus() > 0.0 {
        d1.modulus() / d0.modulus()
    } else {
        r
    };
    if !(r < 1.0) {
        return Ok(Verdict::Inconclusive {
            reason: format!("tail increments do not decay (ratio {r:.3})"),
        });
    }
    let tail_value = d2 * (r / (1.0 - r));
    let spread = (r - r_prev).abs() / (1.0 - r.max(r_prev).min(0.999));
    let tail_err = tail_value.modulus() * spread.max(0.01);
    Ok(Verdict::Convergent {
        value: running + tail_value,
        err_estimate: err_total + tail_err,
    })
}

/// Gauss-Legendre nodes and weights on [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            } else {
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = mid - half * z;
        x[n - 1 - i] = mid + half * z;
        let wi = 2.0 * half / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn binom(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for j in 0..k {
        c = c * (n - j) as f64 / (j + 1) as f64;
    }
    c
}

/// Raw moments m_1..m_m from cumulants κ_1..κ_m.
pub fn cumulants_to_moments(kappa: &[f64]) -> Vec<f64> {
    let m = kappa.len();
    let mut mom = vec![1.0; m + 1];
    for n in 1..=m {
        mom[n] = (1..=n)
            .map(|k| binom(n - 1, k - 1) * kappa[k - 1] * mom[n - k])
            .sum();
    }
    mom.remove(0);
    mom
}

/// Inverse of [`cumulants_to_moments`].
pub fn moments_to_cumulants(moments: &[f64]) -> Vec<f64> {
    let m = moments.len();
    let mut mom = vec![1.0];
    mom.extend_from_slice(moments);
    let mut kappa = vec![0.0; m];
    for n in 1..=m {
        let lower: f64 = (1..n)
            .map(|k| binom(n - 1, k - 1) * kappa[k - 1] * mom[n - k])
            .sum();
        kappa[n - 1] = mom[n] - lower;
    }
    kappa
}

/// Least-squares slope of the running maximum of `values` against `times`
/// over the points from index `fit_from` on, divided by the overall maximum
/// magnitude. The running maximum starts at the first point, so only new
/// highs set late in the grid count. A bounded scan that has settled gives a
/// slope near zero.
pub fn running_max_trend(times: &[f64], values: &[f64], fit_from: usize) -> f64 {
    let n = times.len().min(values.len());
    let mut run = Vec::with_capacity(n);
    let mut cur = f64::NEG_INFINITY;
    for &v in &values[..n] {
        cur = cur.max(v);
        run.push(cur);
    }
    let scale = run.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let lo = fit_from.min(n);
    if n - lo < 2 || scale == 0.0 {
        return 0.0;
    }
    let (ts, ys) = (&times[lo..n], &run[lo..]);
    let m = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (t, y) in ts.iter().zip(ys) {
        sxy += (t - tm) * (y - ym);
        sxx += (t - tm).powi(2);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx / scale
    }
}
