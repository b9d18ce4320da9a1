//! Coupling functions e ↦ f(e) on the positive half-line and their UV/IR
//! regularity classes.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{detect_divergence_with_breaks, Domain, IntegralVerdict, QuadratureRule};

/// Integer breakpoints of the counterexample family are listed up to here.
const MAX_INTEGER_BREAKS: f64 = 2.0e4;

/// Parametric families. `ir_power` = a sets the small-energy behaviour
/// |f(e)|² ~ e^a; a = 0 means f is constant near zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum Family {
    /// |f|² = e^a on [0, Λ], zero above.
    SharpCutoff {
        cutoff: f64,
        #[serde(default)]
        ir_power: f64,
    },
    /// |f|² = (e/knee)^a below the knee and (e/knee)^{-2p} above.
    PowerTail {
        p: f64,
        #[serde(default = "one")]
        knee: f64,
        #[serde(default)]
        ir_power: f64,
    },
    /// |f|² = e^a · e^{-2·rate·e}.
    ExpTail {
        rate: f64,
        #[serde(default)]
        ir_power: f64,
    },
    /// f_n(e) = ⌈e⌉^{-(n+1)} (⌈e⌉ − e − i/⌈e⌉)^{-1} for e ≥ 1, i·e below.
    CounterexampleFn { n: u32 },
    /// Nodes (energy, Re f, Im f); |f|² interpolated linearly, zero past the
    /// last node, constant below the first.
    Tabulated { nodes: Vec<(f64, f64, f64)> },
}

fn one() -> f64 {
    1.0
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormFactor {
    #[serde(flatten)]
    pub family: Family,
    /// Overall amplitude multiplying f.
    #[serde(default = "unit")]
    pub scale: f64,
}

impl FormFactor {
    pub fn new(family: Family) -> Result<Self> {
        Self::with_scale(family, 1.0)
    }

    pub fn with_scale(family: Family, scale: f64) -> Result<Self> {
        let ff = Self { family, scale };
        ff.validate()?;
        Ok(ff)
    }

    pub fn sharp_cutoff(cutoff: f64, ir_power: f64) -> Result<Self> {
        Self::new(Family::SharpCutoff { cutoff, ir_power })
    }

    pub fn power_tail(p: f64, knee: f64, ir_power: f64) -> Result<Self> {
        Self::new(Family::PowerTail { p, knee, ir_power })
    }

    pub fn exp_tail(rate: f64, ir_power: f64) -> Result<Self> {
        Self::new(Family::ExpTail { rate, ir_power })
    }

    pub fn counterexample(n: u32) -> Self {
        Self {
            family: Family::CounterexampleFn { n },
            scale: 1.0,
        }
    }

    pub fn tabulated(nodes: Vec<(f64, f64, f64)>) -> Result<Self> {
        Self::new(Family::Tabulated { nodes })
    }

    /// Reads `energy, re_f, im_f` rows; a non-numeric first line is a header
    /// and `#` starts a comment.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut nodes = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> =
                cols.iter().map(|c| c.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 3 => nodes.push((v[0], v[1], v[2])),
                Err(_) if nodes.is_empty() && lineno == 0 => continue,
                _ => {
                    return Err(Error::config(
                        format!("form factor csv line {}", lineno + 1),
                        "expected three numeric columns energy, re_f, im_f",
                    ))
                }
            }
        }
        Self::tabulated(nodes)
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.scale.is_finite() {
            return Err(Error::invalid("form factor scale must be finite"));
        }
        let ir_ok = |a: f64| a.is_finite() && a > -1.0;
        match &self.family {
            Family::SharpCutoff { cutoff, ir_power } => {
                if !(*cutoff > 0.0 && cutoff.is_finite()) || !ir_ok(*ir_power) {
                    return Err(Error::invalid("SharpCutoff needs cutoff > 0 and ir_power > -1"));
                }
            }
            Family::PowerTail { p, knee, ir_power } => {
                if !p.is_finite() || !(*knee > 0.0 && knee.is_finite()) || !ir_ok(*ir_power) {
                    return Err(Error::invalid("PowerTail needs finite p, knee > 0, ir_power > -1"));
                }
            }
            Family::ExpTail { rate, ir_power } => {
                if !(*rate > 0.0 && rate.is_finite()) || !ir_ok(*ir_power) {
                    return Err(Error::invalid("ExpTail needs rate > 0 and ir_power > -1"));
                }
            }
            Family::CounterexampleFn { .. } => {}
            Family::Tabulated { nodes } => {
                if nodes.len() < 2 {
                    return Err(Error::invalid("Tabulated needs at least two nodes"));
                }
                if nodes.iter().any(|n| !(n.0 >= 0.0 && n.0.is_finite() && n.1.is_finite() && n.2.is_finite())) {
                    return Err(Error::invalid("Tabulated nodes must be finite with energy >= 0"));
                }
                if nodes.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::invalid("Tabulated energies must be strictly increasing"));
                }
            }
        }
        Ok(())
    }

    /// f(e) for e ≥ 0; zero for negative energies.
    pub fn value(&self, e: f64) -> c64 {
        if !(e >= 0.0) {
            return c64::new(0.0, 0.0);
        }
        let v = match &self.family {
            Family::CounterexampleFn { n } => {
                if e < 1.0 {
                    c64::new(0.0, e)
                } else {
                    let k = e.ceil();
                    let denom = c64::new(k - e, -1.0 / k);
                    c64::new(k.powi(-(*n as i32 + 1)), 0.0) / denom
                }
            }
            Family::Tabulated { nodes } => tabulated_value(nodes, e),
            _ => c64::new(self.abs2_unscaled(e).sqrt(), 0.0),
        };
        v * self.scale
    }

    /// |f(e)|².
    pub fn abs2(&self, e: f64) -> f64 {
        if !(e >= 0.0) {
            return 0.0;
        }
        match &self.family {
            Family::CounterexampleFn { .. } | Family::Tabulated { .. } => self.value(e).norm_sqr(),
            _ => self.abs2_unscaled(e) * self.scale * self.scale,
        }
    }

    /// ln |f(e)|², computed without underflow for the parametric tails.
    pub fn ln_abs2(&self, e: f64) -> f64 {
        if !(e >= 0.0) || self.scale == 0.0 {
            return f64::NEG_INFINITY;
        }
        let ls = 2.0 * self.scale.abs().ln();
        match &self.family {
            Family::ExpTail { rate, ir_power } => {
                ir_power * ln0(e, *ir_power) - 2.0 * rate * e + ls
            }
            Family::PowerTail { p, knee, ir_power } => {
                let x = e / knee;
                if x <= 1.0 {
                    ir_power * ln0(x, *ir_power) + ls
                } else {
                    -2.0 * p * x.ln() + ls
                }
            }
            _ => self.abs2(e).ln(),
        }
    }

    fn abs2_unscaled(&self, e: f64) -> f64 {
        match &self.family {
            Family::SharpCutoff { cutoff, ir_power } => {
                if e <= *cutoff {
                    pow0(e, *ir_power)
                } else {
                    0.0
                }
            }
            Family::PowerTail { p, knee, ir_power } => {
                let x = e / knee;
                if x <= 1.0 {
                    pow0(x, *ir_power)
                } else {
                    x.powf(-2.0 * p)
                }
            }
            Family::ExpTail { rate, ir_power } => pow0(e, *ir_power) * (-2.0 * rate * e).exp(),
            Family::CounterexampleFn { .. } | Family::Tabulated { .. } => {
                unreachable!("handled through value()")
            }
        }
    }

    /// Points in (lo, hi) where f has kinks, jumps or sharp peaks.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let inside = |x: f64| x > lo && x < hi;
        match &self.family {
            Family::SharpCutoff { cutoff, .. } => [*cutoff].into_iter().filter(|&x| inside(x)).collect(),
            Family::PowerTail { knee, .. } => [*knee].into_iter().filter(|&x| inside(x)).collect(),
            Family::ExpTail { .. } => Vec::new(),
            Family::CounterexampleFn { .. } => {
                let start = lo.max(0.0).floor() as u64 + 1;
                let end = hi.min(MAX_INTEGER_BREAKS);
                let mut out = Vec::new();
                let mut k = start.max(1);
                while (k as f64) < end {
                    out.push(k as f64);
                    k += 1;
                }
                out
            }
            Family::Tabulated { nodes } => nodes.iter().map(|n| n.0).filter(|&x| inside(x)).collect(),
        }
    }

    /// Upper end of the support, if bounded.
    pub fn support_end(&self) -> Option<f64> {
        match &self.family {
            Family::SharpCutoff { cutoff, .. } => Some(*cutoff),
            Family::Tabulated { nodes } => nodes.last().map(|n| n.0),
            _ if self.scale == 0.0 => Some(0.0),
            _ => None,
        }
    }

    fn decays_exponentially(&self) -> bool {
        self.support_end().is_some() || matches!(self.family, Family::ExpTail { .. })
    }

    /// All breakpoints on the positive axis.
    pub fn all_breakpoints(&self) -> Vec<f64> {
        self.breakpoints(0.0, f64::INFINITY)
    }
}

fn pow0(x: f64, a: f64) -> f64 {
    if a == 0.0 {
        1.0
    } else {
        x.powf(a)
    }
}

fn ln0(x: f64, a: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        x.ln()
    }
}

fn tabulated_value(nodes: &[(f64, f64, f64)], e: f64) -> c64 {
    let first = nodes[0];
    let last = nodes[nodes.len() - 1];
    if e > last.0 {
        return c64::new(0.0, 0.0);
    }
    if e <= first.0 {
        return c64::new(first.1, first.2);
    }
    let i = nodes.partition_point(|n| n.0 <= e).max(1) - 1;
    let (x0, x1) = (nodes[i], nodes[(i + 1).min(nodes.len() - 1)]);
    if x1.0 == x0.0 {
        return c64::new(x0.1, x0.2);
    }
    let s = (e - x0.0) / (x1.0 - x0.0);
    let z0 = c64::new(x0.1, x0.2);
    let z1 = c64::new(x1.1, x1.2);
    let modulus2 = (1.0 - s) * z0.norm_sqr() + s * z1.norm_sqr();
    let z = z0 * (1.0 - s) + z1 * s;
    let phase = if z.norm() > 0.0 { z / z.norm() } else { c64::new(1.0, 0.0) };
    phase * modulus2.sqrt()
}

/// I_n(f) = ∫_0^∞ e^{2n} |f(e)|² de.
pub fn uv_power_integral(f: &FormFactor, n: u32, rule: &QuadratureRule) -> Result<IntegralVerdict> {
    let breaks = f.all_breakpoints();
    let n = n as i32;
    detect_divergence_with_breaks(
        |e| {
            let a2 = f.abs2(e);
            if a2 == 0.0 {
                0.0
            } else {
                e.powi(2 * n) * a2
            }
        },
        Domain::PositiveAxis,
        &breaks,
        rule,
    )
}

/// E_γ(f) = ∫_0^∞ e^{γe} |f(e)|² de.
pub fn uv_exp_integral(f: &FormFactor, gamma: f64, rule: &QuadratureRule) -> Result<IntegralVerdict> {
    if !(gamma >= 0.0) {
        return Err(Error::invalid("gamma must be nonnegative"));
    }
    let breaks = f.all_breakpoints();
    detect_divergence_with_breaks(
        |e| {
            let l = f.ln_abs2(e);
            if l == f64::NEG_INFINITY {
                0.0
            } else {
                (gamma * e + l).exp()
            }
        },
        Domain::PositiveAxis,
        &breaks,
        rule,
    )
}

/// ∫_0^∞ |f(e)|²/e de.
pub fn ir_integral(f: &FormFactor, rule: &QuadratureRule) -> Result<IntegralVerdict> {
    let breaks = f.all_breakpoints();
    detect_divergence_with_breaks(
        |e| {
            let a2 = f.abs2(e);
            if a2 == 0.0 {
                0.0
            } else {
                a2 / e
            }
        },
        Domain::PositiveAxis,
        &breaks,
        rule,
    )
}

/// How far a regularity scale extends among the requested indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Reach<T> {
    /// Every index converges, and the family's tail guarantees all larger
    /// ones do as well.
    Infinite,
    /// Largest requested index below which everything converged.
    UpTo(T),
    /// The smallest requested index already fails.
    Nothing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub n_max_power: Reach<u32>,
    pub gamma_max: Reach<f64>,
    pub ir_ok: bool,
    pub ir_verdict: IntegralVerdict,
    pub verdicts: BTreeMap<String, IntegralVerdict>,
    /// Requested indices whose verdict contradicts monotonicity or is
    /// inconclusive; such entries cap the reach below them.
    pub anomalies: Vec<String>,
}

pub fn power_key(n: u32) -> String {
    format!("n={n}")
}

pub fn gamma_key(g: f64) -> String {
    format!("gamma={g}")
}

pub fn classify(
    f: &FormFactor,
    n_list: &[u32],
    gamma_list: &[f64],
    rule: &QuadratureRule,
) -> Result<RegularityReport> {
    if n_list.is_empty() || gamma_list.is_empty() {
        return Err(Error::invalid("classify needs nonempty n and gamma lists"));
    }
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut gs = gamma_list.to_vec();
    gs.sort_by(f64::total_cmp);
    gs.dedup();

    let mut verdicts = BTreeMap::new();
    let mut anomalies = Vec::new();

    let mut n_verdicts = Vec::new();
    for &n in &ns {
        let v = uv_power_integral(f, n, rule)?;
        verdicts.insert(power_key(n), v.clone());
        n_verdicts.push((n, v));
    }
    let mut g_verdicts = Vec::new();
    for &g in &gs {
        let v = uv_exp_integral(f, g, rule)?;
        verdicts.insert(gamma_key(g), v.clone());
        g_verdicts.push((g, v));
    }

    let n_max_power = reach(&n_verdicts, f.decays_exponentially(), &mut anomalies, |n| power_key(*n));
    let gamma_max = reach(&g_verdicts, f.support_end().is_some(), &mut anomalies, |g| gamma_key(*g));

    // An exponential moment dominates every power moment.
    if g_verdicts.iter().any(|(g, v)| *g > 0.0 && v.is_convergent())
        && n_verdicts.iter().any(|(_, v)| v.is_divergent())
    {
        anomalies.push("convergent exponential integral alongside a divergent power integral".into());
    }

    let ir_verdict = ir_integral(f, rule)?;
    Ok(RegularityReport {
        n_max_power,
        gamma_max,
        ir_ok: ir_verdict.is_convergent(),
        ir_verdict,
        verdicts,
        anomalies,
    })
}

fn reach<T: Copy>(
    sorted: &[(T, IntegralVerdict)],
    unbounded_class: bool,
    anomalies: &mut Vec<String>,
    key: impl Fn(&T) -> String,
) -> Reach<T> {
    let mut best = None;
    let mut broken = false;
    for (idx, v) in sorted {
        match v {
            IntegralVerdict::Convergent { .. } if !broken => best = Some(*idx),
            IntegralVerdict::Convergent { .. } => {
                anomalies.push(format!("{} converges above a non-convergent index", key(idx)))
            }
            IntegralVerdict::Inconclusive { .. } => {
                anomalies.push(format!("{} inconclusive", key(idx)));
                broken = true;
            }
            IntegralVerdict::Divergent { .. } => broken = true,
        }
    }
    match best {
        None => Reach::Nothing,
        Some(_) if !broken && unbounded_class => Reach::Infinite,
        Some(b) => Reach::UpTo(b),
    }
}
