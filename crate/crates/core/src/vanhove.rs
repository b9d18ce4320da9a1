//! Exact heat law of the van Hove model: a compound Poisson law with
//! intensity dν_t(e) = (1 − cos et)/e² · |f(|e|)|² / |1 − e^{−βe}| de.

use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formfactor::{ir_integral, uv_exp_integral, uv_power_integral, FormFactor};
use crate::numerics::{
    cumulants_to_moments, detect_divergence_with_breaks, gauss_legendre, integrate,
    integrate_with_breaks, Domain, IntegralVerdict, QuadratureRule, Verdict,
};
use crate::par_map;

/// Below this |e| the small-energy limit of the density is used.
pub const EXCISION: f64 = 1e-8;
/// Largest mass allowed in one sampling cell.
pub const CELL_MASS: f64 = 0.1;
/// Minimum number of sampling cells per oscillation period 2π/t.
pub const CELLS_PER_PERIOD: f64 = 8.0;
const SAMPLE_CHUNK: usize = 8192;

/// 1 − cos x without cancellation.
fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityMeasure {
    pub f: FormFactor,
    pub beta: f64,
    pub t: f64,
}

/// Whether the law is covered by the exactness statement (f with finite
/// infrared integral and ∫e²|f|² < ∞) or evaluated beyond it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Standard,
    Extrapolated,
}

impl IntensityMeasure {
    pub fn new(f: FormFactor, beta: f64, t: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta must be positive"));
        }
        if !t.is_finite() {
            return Err(Error::invalid("t must be finite"));
        }
        f.validate()?;
        Ok(Self { f, beta, t })
    }

    pub fn at_time(&self, t: f64) -> Self {
        Self {
            f: self.f.clone(),
            beta: self.beta,
            t,
        }
    }

    /// (1 − cos et)|f(e)|²/e² for e > 0.
    fn amp(&self, e: f64) -> f64 {
        let a2 = self.f.abs2(e);
        if a2 == 0.0 {
            return 0.0;
        }
        if e < EXCISION {
            0.5 * self.t * self.t * a2
        } else {
            one_minus_cos(e * self.t) * a2 / (e * e)
        }
    }

    fn ln_amp(&self, e: f64) -> f64 {
        if e < EXCISION {
            return self.amp(e).ln();
        }
        one_minus_cos(e * self.t).ln() - 2.0 * e.ln() + self.f.ln_abs2(e)
    }

    /// Bose occupation 1/(e^{βe} − 1), e > 0.
    fn bose(&self, e: f64) -> f64 {
        1.0 / (self.beta * e).exp_m1()
    }

    /// coth(βe/2) = 1 + 2·bose(e)
    fn coth(&self, e: f64) -> f64 {
        1.0 + 2.0 * self.bose(e)
    }

    pub fn density(&self, e: f64) -> f64 {
        if self.t == 0.0 || e == 0.0 {
            return 0.0;
        }
        if e > 0.0 {
            self.amp(e) * (1.0 + self.bose(e))
        } else {
            self.amp(-e) * self.bose(-e)
        }
    }

    fn breaks(&self) -> Vec<f64> {
        self.f.all_breakpoints()
    }

    /// Verdict for ∫ dν_t.
    pub fn total_mass(&self, rule: &QuadratureRule) -> Result<IntegralVerdict> {
        if self.t == 0.0 {
            return Ok(zero());
        }
        detect_divergence_with_breaks(|e| self.amp(e) * self.coth(e), Domain::PositiveAxis, &self.breaks(), rule)
    }

    pub fn regime(&self, rule: &QuadratureRule) -> Result<Regime> {
        let ir = ir_integral(&self.f, rule)?;
        let uv = uv_power_integral(&self.f, 1, rule)?;
        Ok(if ir.is_convergent() && uv.is_convergent() {
            Regime::Standard
        } else {
            Regime::Extrapolated
        })
    }
}

fn zero() -> IntegralVerdict {
    Verdict::Convergent {
        value: 0.0,
        err_estimate: 0.0,
    }
}

pub fn intensity_density(nu: &IntensityMeasure, e: f64) -> f64 {
    nu.density(e)
}

/// ℰ_t(α) = exp(∫(e^{iαe} − 1) dν_t(e)). Folding e ↔ −e gives the
/// integrand A(e)[(cos αe − 1)coth(βe/2) + i sin αe] on (0, ∞).
pub fn char_fn(nu: &IntensityMeasure, alpha: f64, rule: &QuadratureRule) -> Result<Verdict<c64>> {
    Ok(log_char_fn(nu, alpha, rule)?.map(|z| z.exp()))
}

pub fn log_char_fn(nu: &IntensityMeasure, alpha: f64, rule: &QuadratureRule) -> Result<Verdict<c64>> {
    if nu.t == 0.0 || alpha == 0.0 {
        return Ok(Verdict::Convergent {
            value: c64::new(0.0, 0.0),
            err_estimate: 0.0,
        });
    }
    integrate_with_breaks(
        |e| {
            let a = nu.amp(e);
            if a == 0.0 {
                return c64::new(0.0, 0.0);
            }
            let (s, c) = (alpha * e).sin_cos();
            let re = if (alpha * e).abs() < 1e-4 {
                -one_minus_cos(alpha * e) * nu.coth(e)
            } else {
                (c - 1.0) * nu.coth(e)
            };
            c64::new(re * a, s * a)
        },
        Domain::PositiveAxis,
        &nu.breaks(),
        rule,
    )
}

/// κ_m = ∫ e^m dν_t(e) = ∫_0^∞ e^{m−2}(1 − cos et)|f|² w_m(e) de with
/// w_m = coth(βe/2) for even m and 1 for odd m.
pub fn cumulant(nu: &IntensityMeasure, m: u32, rule: &QuadratureRule) -> Result<IntegralVerdict> {
    if m == 0 {
        return Err(Error::invalid("cumulant order must be at least 1"));
    }
    if nu.t == 0.0 {
        return Ok(zero());
    }
    let p = m as i32;
    detect_divergence_with_breaks(
        |e| {
            let a = nu.amp(e);
            if a == 0.0 {
                return 0.0;
            }
            let w = if m % 2 == 0 { nu.coth(e) } else { 1.0 };
            a * e.powi(p) * w
        },
        Domain::PositiveAxis,
        &nu.breaks(),
        rule,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentsReport {
    pub cumulants: Vec<IntegralVerdict>,
    /// Raw moments 1..=up_to when every cumulant converged.
    pub moments: Option<Vec<f64>>,
}

pub fn moments(nu: &IntensityMeasure, up_to: u32, rule: &QuadratureRule) -> Result<MomentsReport> {
    let cumulants: Vec<IntegralVerdict> = (1..=up_to).map(|m| cumulant(nu, m, rule)).collect::<Result<_>>()?;
    let values: Option<Vec<f64>> = cumulants.iter().map(|v| v.value()).collect();
    Ok(MomentsReport {
        moments: values.map(|k| cumulants_to_moments(&k)),
        cumulants,
    })
}

/// Verdict for ∫(e^{γ|e|} − 1) dν_t.
pub fn exp_moment_bound(nu: &IntensityMeasure, gamma: f64, rule: &QuadratureRule) -> Result<IntegralVerdict> {
    if !(gamma >= 0.0) {
        return Err(Error::invalid("gamma must be nonnegative"));
    }
    if nu.t == 0.0 || gamma == 0.0 {
        return Ok(zero());
    }
    // (e^{γe} − 1)(ν(e) + ν(−e)), evaluated in logs for large γe
    detect_divergence_with_breaks(
        |e| {
            let ge = gamma * e;
            if ge < 30.0 {
                ge.exp_m1() * nu.amp(e) * nu.coth(e)
            } else {
                let l = ge + nu.ln_amp(e) + nu.coth(e).ln();
                if l == f64::NEG_INFINITY {
                    0.0
                } else {
                    l.exp()
                }
            }
        },
        Domain::PositiveAxis,
        &nu.breaks(),
        rule,
    )
}

/// Verdict for log 𝔼 e^{γΔQ} = ∫(e^{γe} − 1) dν_t, either sign of γ.
pub fn log_mgf(nu: &IntensityMeasure, gamma: f64, rule: &QuadratureRule) -> Result<IntegralVerdict> {
    if nu.t == 0.0 || gamma == 0.0 {
        return Ok(zero());
    }
    let g = gamma.abs();
    let breaks = nu.breaks();
    // side growing in e^{g e}: ν(e) for γ > 0, ν(−e) for γ < 0
    let grow = |e: f64| {
        let occ = if gamma > 0.0 { 1.0 + nu.bose(e) } else { nu.bose(e) };
        let ge = g * e;
        if ge < 30.0 {
            ge.exp_m1() * nu.amp(e) * occ
        } else {
            let l = ge + nu.ln_amp(e) + occ.ln();
            if l == f64::NEG_INFINITY {
                0.0
            } else {
                l.exp()
            }
        }
    };
    let shrink = |e: f64| {
        let occ = if gamma > 0.0 { nu.bose(e) } else { 1.0 + nu.bose(e) };
        -(-g * e).exp_m1() * nu.amp(e) * occ
    };
    let up = detect_divergence_with_breaks(grow, Domain::PositiveAxis, &breaks, rule)?;
    let down = detect_divergence_with_breaks(shrink, Domain::PositiveAxis, &breaks, rule)?;
    Ok(up.plus(down.map(|x| -x)))
}

/// ∫(e^{−βe} − 1) dν_t, with the two half-lines integrated separately.
pub fn kms_defect(nu: &IntensityMeasure, rule: &QuadratureRule) -> Result<f64> {
    if nu.t == 0.0 {
        return Ok(0.0);
    }
    let breaks = nu.breaks();
    let beta = nu.beta;
    let pos = integrate_with_breaks(|e| (-beta * e).exp_m1() * nu.density(e), Domain::PositiveAxis, &breaks, rule)?;
    let neg = integrate_with_breaks(
        |e| {
            let d = nu.density(-e);
            if d == 0.0 {
                0.0
            } else {
                (beta * e).exp_m1() * d
            }
        },
        Domain::PositiveAxis,
        &breaks,
        rule,
    )?;
    match (pos.value(), neg.value()) {
        (Some(a), Some(b)) => Ok(a + b),
        _ => Err(Error::Inconclusive(format!(
            "detailed-balance integrals: {} / {}",
            pos.status(),
            neg.status()
        ))),
    }
}

/// Bounds on 𝔼 e^{γ|ΔQ|}: cosh(γx) ≤ e^{γ|x|} ≤ e^{γx} + e^{−γx}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsExpMoment {
    pub lower: f64,
    pub upper: f64,
}

pub fn abs_exp_moment(nu: &IntensityMeasure, gamma: f64, rule: &QuadratureRule) -> Result<Verdict<(f64, f64)>> {
    let plus = log_mgf(nu, gamma, rule)?;
    let minus = log_mgf(nu, -gamma, rule)?;
    Ok(match (&plus, &minus) {
        (Verdict::Convergent { value: a, err_estimate: ea }, Verdict::Convergent { value: b, err_estimate: eb }) => {
            let (ea_, eb_) = (a.exp(), b.exp());
            Verdict::Convergent {
                value: (0.5 * (ea_ + eb_), ea_ + eb_),
                err_estimate: ea_ * ea + eb_ * eb,
            }
        }
        (Verdict::Inconclusive { reason }, _) | (_, Verdict::Inconclusive { reason }) => Verdict::Inconclusive {
            reason: reason.clone(),
        },
        (Verdict::Divergent { growth_exponent }, _) | (_, Verdict::Divergent { growth_exponent }) => Verdict::Divergent {
            growth_exponent: *growth_exponent,
        },
    })
}

/// A set of sampled heat variations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<f64>,
    pub total_mass: f64,
    /// Intensity mass beyond the sampling grid, dropped from the draws.
    pub truncated_mass: f64,
    pub cells: usize,
}

struct Cell {
    lo: f64,
    hi: f64,
    d_lo: f64,
    d_hi: f64,
}

impl Cell {
    /// Inverse CDF of the linear interpolant of the density on the cell.
    fn place(&self, u: f64) -> f64 {
        let w = self.hi - self.lo;
        let (a, b) = (self.d_lo.max(0.0), self.d_hi.max(0.0));
        if a + b <= 0.0 || (b - a).abs() <= 1e-9 * (a + b) {
            return self.lo + u * w;
        }
        // ∫_0^x (a + (b−a)s/w) ds = u·(a+b)w/2
        let slope = (b - a) / w;
        let target = u * 0.5 * (a + b) * w;
        let disc = (a * a + 2.0 * slope * target).max(0.0);
        let x = 2.0 * target / (a + disc.sqrt());
        self.lo + x.clamp(0.0, w)
    }
}

/// Cells on (0, ∞) for the density g, with their masses.
fn build_cells(g: &impl Fn(f64) -> f64, t: f64, rule: &QuadratureRule, breaks: &[f64]) -> Result<(Vec<Cell>, Vec<f64>, f64)> {
    let max_width = if t != 0.0 {
        2.0 * std::f64::consts::PI / (t.abs() * CELLS_PER_PERIOD)
    } else {
        f64::INFINITY
    };
    let last = *rule.tail_cutoffs.last().unwrap_or(&1e4);
    let mut cells = Vec::new();
    let mut masses = Vec::new();
    let cell_rule = QuadratureRule {
        max_subdivisions: 200,
        ..rule.clone()
    };
    let mut lo = 0.0;
    let mut width = 1e-6_f64;
    let mut next_tail_check = 1.0_f64;
    let mut brk = breaks.iter().copied().filter(|&b| b > 0.0).collect::<Vec<_>>();
    brk.sort_by(f64::total_cmp);
    let mut total_so_far = 0.0;
    let mut truncated = 0.0;
    while lo < last {
        let mut w = width.min(max_width).max(1e-12);
        if let Some(&b) = brk.iter().find(|&&b| b > lo) {
            if lo + w > b {
                w = b - lo;
            }
        }
        let hi = (lo + w).min(last);
        let mass = integrate(g, Domain::Interval(lo, hi), &cell_rule)?
            .value()
            .unwrap_or_else(|| 0.5 * (g(lo.max(EXCISION)) + g(hi)) * (hi - lo));
        if mass > CELL_MASS && hi - lo > 1e-12 {
            width = 0.5 * w;
            continue;
        }
        cells.push(Cell {
            lo,
            hi,
            d_lo: g(lo.max(EXCISION)),
            d_hi: g(hi),
        });
        masses.push(mass.max(0.0));
        total_so_far += mass.max(0.0);
        lo = hi;
        width = (2.0 * w).min(lo.max(1e-6));
        if lo >= next_tail_check {
            next_tail_check *= 2.0;
            let tail = integrate(g, Domain::HalfLine(lo), rule)?;
            match tail.value() {
                Some(v) if v.abs() <= rule.abs_tol.max(rule.rel_tol * total_so_far) => {
                    truncated = v.max(0.0);
                    return Ok((cells, masses, truncated));
                }
                Some(_) => {}
                None => return Err(Error::DivergentMass),
            }
        }
    }
    if let Some(v) = integrate(g, Domain::HalfLine(last), rule)?.value() {
        truncated = v.max(0.0);
    }
    Ok((cells, masses, truncated))
}

/// Draws `n` values of ΔQ as sums of the atoms of a Poisson random measure
/// with intensity ν_t. Streams are split in fixed chunks, so the output
/// depends only on `seed`.
pub fn sample(nu: &IntensityMeasure, n: usize, seed: u64, rule: &QuadratureRule) -> Result<SampleSet> {
    if nu.t == 0.0 {
        return Ok(SampleSet {
            samples: vec![0.0; n],
            total_mass: 0.0,
            truncated_mass: 0.0,
            cells: 0,
        });
    }
    if !nu.total_mass(rule)?.is_convergent() {
        return Err(Error::DivergentMass);
    }
    let breaks = nu.breaks();
    let (pos, pos_mass, pos_trunc) = build_cells(&|e| nu.density(e), nu.t, rule, &breaks)?;
    let (neg, neg_mass, neg_trunc) = build_cells(&|e| nu.density(-e), nu.t, rule, &breaks)?;
    let mut cells: Vec<(Cell, f64)> = Vec::with_capacity(pos.len() + neg.len());
    cells.extend(pos.into_iter().map(|c| (c, 1.0)));
    cells.extend(neg.into_iter().map(|c| (c, -1.0)));
    let mut cdf = Vec::with_capacity(cells.len());
    let mut acc = 0.0;
    for m in pos_mass.iter().chain(&neg_mass) {
        acc += m;
        cdf.push(acc);
    }
    let total = acc;
    let n_chunks = n.div_ceil(SAMPLE_CHUNK);
    let chunks: Vec<usize> = (0..n_chunks).collect();
    let parts = par_map(&chunks, |&k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let len = SAMPLE_CHUNK.min(n - k * SAMPLE_CHUNK);
        let poisson = (total > 0.0).then(|| Poisson::new(total).expect("positive mean"));
        (0..len)
            .map(|_| {
                let count = poisson.as_ref().map_or(0, |p| p.sample(&mut rng) as u64);
                let mut s = 0.0;
                for _ in 0..count {
                    let u: f64 = rng.random::<f64>() * total;
                    let i = cdf.partition_point(|&c| c < u).min(cells.len() - 1);
                    let (cell, sign) = &cells[i];
                    s += sign * cell.place(rng.random::<f64>());
                }
                s
            })
            .collect::<Vec<f64>>()
    });
    Ok(SampleSet {
        samples: parts.into_iter().flatten().collect(),
        total_mass: total,
        truncated_mass: pos_trunc + neg_trunc,
        cells: cells.len(),
    })
}

/// Empirical characteristic function of a sample.
pub fn empirical_char_fn(samples: &[f64], alpha: f64) -> c64 {
    let n = samples.len() as f64;
    samples.iter().map(|x| c64::from_polar(1.0, alpha * x)).sum::<c64>() / n
}

/// ∫_{t1}^{t2} (1 − cos et) dt
fn window_weight(e: f64, t1: f64, t2: f64) -> f64 {
    if (e * t1.abs().max(t2.abs())) < 1e-4 {
        return e * e * (t2.powi(3) - t1.powi(3)) / 6.0;
    }
    (t2 - t1) - ((e * t2).sin() - (e * t1).sin()) / e
}

/// Statuses of the three quantities the equivalence theorems tie together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub label: String,
    /// (i) supremum over the time grid
    pub sup_over_grid: IntegralVerdict,
    pub worst_t: Option<f64>,
    /// (ii) integral over the time window
    pub window_integral: IntegralVerdict,
    /// (iii) regularity integral of f
    pub form_factor: IntegralVerdict,
    pub consistent: bool,
    pub regime: Regime,
}

fn agree(vs: &[&IntegralVerdict]) -> bool {
    let all = |p: fn(&IntegralVerdict) -> bool| vs.iter().all(|v| p(v));
    all(IntegralVerdict::is_convergent) || all(IntegralVerdict::is_divergent)
}

fn sup_verdict(rows: Vec<(f64, IntegralVerdict)>) -> (IntegralVerdict, Option<f64>) {
    let mut best: Option<(f64, f64, f64)> = None;
    let mut divergent: Option<(f64, f64)> = None;
    for (t, v) in rows {
        match v {
            Verdict::Inconclusive { reason } => {
                return (Verdict::Inconclusive { reason: format!("t = {t}: {reason}") }, Some(t))
            }
            Verdict::Divergent { growth_exponent } => {
                if divergent.is_none_or(|d| growth_exponent > d.1) {
                    divergent = Some((t, growth_exponent));
                }
            }
            Verdict::Convergent { value, err_estimate } => {
                if best.is_none_or(|b| value > b.1) {
                    best = Some((t, value, err_estimate));
                }
            }
        }
    }
    if let Some((t, g)) = divergent {
        return (Verdict::Divergent { growth_exponent: g }, Some(t));
    }
    match best {
        Some((t, value, err_estimate)) => (Verdict::Convergent { value, err_estimate }, Some(t)),
        None => (zero(), None),
    }
}

/// Moment of order 2n+2 as a verdict.
fn even_moment(nu: &IntensityMeasure, order: u32, rule: &QuadratureRule) -> Result<IntegralVerdict> {
    let rep = moments(nu, order, rule)?;
    if let Some(bad) = rep.cumulants.iter().find(|v| v.is_inconclusive()) {
        return Ok(bad.clone());
    }
    if let Some(div) = rep
        .cumulants
        .iter()
        .filter(|v| v.is_divergent())
        .max_by(|a, b| exponent(a).total_cmp(&exponent(b)))
    {
        return Ok(div.clone());
    }
    let m = rep.moments.expect("all cumulants convergent");
    let err = rep.cumulants.iter().filter_map(|v| v.err_estimate()).sum::<f64>();
    Ok(Verdict::Convergent {
        value: m[order as usize - 1],
        err_estimate: err * (1.0 + m[order as usize - 1].abs()),
    })
}

fn exponent(v: &IntegralVerdict) -> f64 {
    match v {
        Verdict::Divergent { growth_exponent } => *growth_exponent,
        _ => f64::NEG_INFINITY,
    }
}

const WINDOW_NODES: usize = 16;

/// Gauss-Legendre time integral of `g`, with the error taken from a rule of
/// half the size.
fn time_integral(t1: f64, t2: f64, g: impl Fn(f64) -> Result<Option<f64>> + Sync) -> Result<IntegralVerdict> {
    let (x, w) = gauss_legendre(WINDOW_NODES, t1, t2);
    let (xh, wh) = gauss_legendre(WINDOW_NODES / 2, t1, t2);
    let vals = par_map(&x, |&t| g(t));
    let vals_h = par_map(&xh, |&t| g(t));
    let mut s = 0.0;
    for (v, wi) in vals.into_iter().zip(&w) {
        match v? {
            Some(v) => s += wi * v,
            None => return Ok(Verdict::Inconclusive { reason: "integrand not convergent at a window node".into() }),
        }
    }
    let mut sh = 0.0;
    for (v, wi) in vals_h.into_iter().zip(&wh) {
        if let Some(v) = v? {
            sh += wi * v;
        }
    }
    Ok(Verdict::Convergent {
        value: s,
        err_estimate: (s - sh).abs(),
    })
}

pub fn equivalence_scan_moments(
    f: &FormFactor,
    beta: f64,
    n: u32,
    t_grid: &[f64],
    window: (f64, f64),
    rule: &QuadratureRule,
) -> Result<EquivalenceReport> {
    let (t1, t2) = window;
    if !(t1 < t2) || t_grid.is_empty() {
        return Err(Error::invalid("need t1 < t2 and a nonempty time grid"));
    }
    let base = IntensityMeasure::new(f.clone(), beta, t_grid[0])?;
    let order = 2 * n + 2;
    let rows = par_map(t_grid, |&t| even_moment(&base.at_time(t), order, rule).map(|v| (t, v)));
    let rows: Vec<(f64, IntegralVerdict)> = rows.into_iter().collect::<Result<_>>()?;
    let (sup_over_grid, worst_t) = sup_verdict(rows);

    // Fubini: the window integral of κ_{2n+2} carries any divergence.
    let breaks = f.all_breakpoints();
    let top = detect_divergence_with_breaks(
        |e| {
            let a2 = f.abs2(e);
            if a2 == 0.0 {
                return 0.0;
            }
            e.powi(2 * n as i32) * a2 * base.coth(e) * window_weight(e, t1, t2)
        },
        Domain::PositiveAxis,
        &breaks,
        rule,
    )?;
    let window_integral = if top.is_convergent() {
        time_integral(t1, t2, |t| Ok(even_moment(&base.at_time(t), order, rule)?.value()))?
    } else {
        top
    };
    let form_factor = uv_power_integral(f, n, rule)?;
    let consistent = agree(&[&sup_over_grid, &window_integral, &form_factor]);
    Ok(EquivalenceReport {
        label: format!("moment order {order}"),
        sup_over_grid,
        worst_t,
        window_integral,
        form_factor,
        consistent,
        regime: base.regime(rule)?,
    })
}

pub fn equivalence_scan_exp(
    f: &FormFactor,
    beta: f64,
    gamma: f64,
    t_grid: &[f64],
    window: (f64, f64),
    rule: &QuadratureRule,
) -> Result<EquivalenceReport> {
    let (t1, t2) = window;
    if !(t1 < t2) || t_grid.is_empty() {
        return Err(Error::invalid("need t1 < t2 and a nonempty time grid"));
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma must be positive"));
    }
    let base = IntensityMeasure::new(f.clone(), beta, t_grid[0])?;
    // Upper bound e^{A+} + e^{A−} stands for 𝔼 e^{γ|ΔQ|}.
    let upper = |t: f64| -> Result<IntegralVerdict> {
        Ok(abs_exp_moment(&base.at_time(t), gamma, rule)?.map(|(_, hi)| hi))
    };
    let rows = par_map(t_grid, |&t| upper(t).map(|v| (t, v)));
    let rows: Vec<(f64, IntegralVerdict)> = rows.into_iter().collect::<Result<_>>()?;
    let (sup_over_grid, worst_t) = sup_verdict(rows);

    let breaks = f.all_breakpoints();
    let averaged = detect_divergence_with_breaks(
        |e| {
            let ge = gamma * e;
            let w = window_weight(e, t1, t2);
            if w == 0.0 {
                return 0.0;
            }
            let l = f.ln_abs2(e);
            if l == f64::NEG_INFINITY {
                return 0.0;
            }
            let base_part = if ge < 30.0 { ge.exp_m1() * l.exp() } else { (ge + l).exp() };
            base_part * base.coth(e) * w / (e * e)
        },
        Domain::PositiveAxis,
        &breaks,
        rule,
    )?;
    let window_integral = if averaged.is_convergent() {
        time_integral(t1, t2, |t| Ok(upper(t)?.value()))?
    } else {
        averaged
    };
    let form_factor = uv_exp_integral(f, gamma, rule)?;
    let consistent = agree(&[&sup_over_grid, &window_integral, &form_factor]);
    Ok(EquivalenceReport {
        label: format!("exponential moment gamma={gamma}"),
        sup_over_grid,
        worst_t,
        window_integral,
        form_factor,
        consistent,
        regime: base.regime(rule)?,
    })
}
