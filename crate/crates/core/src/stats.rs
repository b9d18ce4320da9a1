//! Sample diagnostics: moments with error bars, Hill tail indices and
//! Markov-bound tail curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 100;
pub const MIN_HILL_K: usize = 10;
/// Ratio α̂(k/8)/α̂(k) above which the tail is flagged light.
pub const LIGHT_TAIL_RATIO: f64 = 1.3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub order: u32,
    pub estimate: f64,
    pub std_error: f64,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    let var = values.map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0).max(1.0);
    (mean, (var / nf).sqrt())
}

/// Plug-in estimates of 𝔼 X^k with CLT standard errors.
pub fn empirical_moments(samples: &[f64], orders: &[u32]) -> Result<Vec<MomentEstimate>> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_SAMPLES} samples")));
    }
    Ok(orders
        .iter()
        .map(|&k| {
            let (estimate, std_error) = mean_and_se(samples.iter().map(|x| x.powi(k as i32)), samples.len());
            MomentEstimate {
                order: k,
                estimate,
                std_error,
            }
        })
        .collect())
}

/// Positive values sorted in decreasing order.
fn upper_order(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.filter(|x| *x > 0.0 && x.is_finite()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn hill_sorted(desc: &[f64], k: usize) -> Result<f64> {
    if k < MIN_HILL_K {
        return Err(Error::invalid(format!("k must be at least {MIN_HILL_K}")));
    }
    if desc.len() <= k {
        return Err(Error::InsufficientTail {
            needed: k + 1,
            available: desc.len(),
        });
    }
    let threshold = desc[k].ln();
    let h = desc[..k].iter().map(|x| x.ln() - threshold).sum::<f64>() / k as f64;
    if h <= 0.0 {
        // no spread above the threshold
        return Err(Error::InsufficientTail {
            needed: k + 1,
            available: desc.iter().filter(|&&x| x > desc[k]).count(),
        });
    }
    Ok(1.0 / h)
}

/// Hill estimator of the tail exponent of |X| from the k largest values.
pub fn hill_tail_index(samples: &[f64], k: usize) -> Result<f64> {
    hill_sorted(&upper_order(samples.iter().map(|x| x.abs())), k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HillReport {
    pub index: f64,
    pub std_error: f64,
    pub k_used: usize,
    /// Index of the right tail (X > 0), when enough positive values exist.
    pub positive_index: Option<f64>,
    pub negative_index: Option<f64>,
    /// (k, α̂(k)) at k, k/2, k/4, k/8 (never below the minimum k).
    pub profile: Vec<(usize, f64)>,
    pub light_tail: bool,
}

pub fn hill_report(samples: &[f64], k: usize) -> Result<HillReport> {
    let desc = upper_order(samples.iter().map(|x| x.abs()));
    let index = hill_sorted(&desc, k)?;
    let side = |sign: f64| {
        let d = upper_order(samples.iter().map(|x| sign * x));
        hill_sorted(&d, k.min(d.len().saturating_sub(1))).ok()
    };
    let mut profile = vec![(k, index)];
    let mut j = k;
    for _ in 0..3 {
        j = (j / 2).max(MIN_HILL_K);
        if j == profile.last().expect("nonempty").0 {
            break;
        }
        profile.push((j, hill_sorted(&desc, j)?));
    }
    let deepest = profile.last().expect("nonempty").1;
    Ok(HillReport {
        index,
        std_error: index / (k as f64).sqrt(),
        k_used: k,
        positive_index: side(1.0),
        negative_index: side(-1.0),
        light_tail: deepest / index > LIGHT_TAIL_RATIO,
        profile,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum BoundMode {
    /// P(|X| > E) ≤ 𝔼|X|^{2n+2} E^{−2n−2}
    Power { n: u32 },
    /// P(|X| > E) ≤ 𝔼 e^{γ|X|} e^{−γE}
    Exponential { gamma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovPoint {
    pub e: f64,
    pub empirical: f64,
    /// Binomial standard error of the empirical exceedance.
    pub std_error: f64,
    pub bound: f64,
}

/// Empirical survival of |X| against the Markov bound. The constant is the
/// sample moment unless `constant` supplies one (e.g. an analytic bound).
pub fn markov_curve(samples: &[f64], mode: BoundMode, e_grid: &[f64], constant: Option<f64>) -> Result<Vec<MarkovPoint>> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    let n = samples.len() as f64;
    let c = match constant {
        Some(c) => c,
        None => match mode {
            BoundMode::Power { n: k } => samples.iter().map(|x| x.abs().powi(2 * k as i32 + 2)).sum::<f64>() / n,
            BoundMode::Exponential { gamma } => samples.iter().map(|x| (gamma * x.abs()).exp()).sum::<f64>() / n,
        },
    };
    if !c.is_finite() {
        return Err(Error::invalid("moment constant is not finite"));
    }
    let mut abs: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    abs.sort_by(f64::total_cmp);
    Ok(e_grid
        .iter()
        .map(|&e| {
            let above = abs.len() - abs.partition_point(|&x| x <= e);
            let p = above as f64 / n;
            let bound = match mode {
                BoundMode::Power { n: k } => c * e.powi(-(2 * k as i32 + 2)),
                BoundMode::Exponential { gamma } => c * (-gamma * e).exp(),
            };
            MarkovPoint {
                e,
                empirical: p,
                std_error: (p * (1.0 - p) / n).sqrt(),
                bound,
            }
        })
        .collect())
}

/// Geometric grid from the median of |X| to its maximum.
pub fn default_e_grid(samples: &[f64], points: usize) -> Vec<f64> {
    let mut abs: Vec<f64> = samples.iter().map(|x| x.abs()).filter(|x| *x > 0.0).collect();
    if abs.is_empty() || points == 0 {
        return Vec::new();
    }
    abs.sort_by(f64::total_cmp);
    let lo = abs[abs.len() / 2];
    let hi = *abs.last().expect("nonempty");
    if points == 1 || hi <= lo {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (points - 1) as f64;
    (0..points).map(|i| lo * (r * i as f64).exp()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub hill_index: f64,
    pub k_used: usize,
    pub hill: HillReport,
    pub moment_table: Vec<MomentEstimate>,
    pub markov_curve: Vec<MarkovPoint>,
}

pub fn tail_report(samples: &[f64], k: usize, n: u32, e_grid: &[f64]) -> Result<TailReport> {
    let orders: Vec<u32> = (1..=2 * n + 2).collect();
    let hill = hill_report(samples, k)?;
    Ok(TailReport {
        hill_index: hill.index,
        k_used: k,
        moment_table: empirical_moments(samples, &orders)?,
        markov_curve: markov_curve(samples, BoundMode::Power { n }, e_grid, None)?,
        hill,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp, Normal};

    fn pareto(alpha: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / alpha)).collect()
    }

    #[test]
    fn constant_samples() {
        let s = vec![2.5; 200];
        let m = empirical_moments(&s, &[1, 2, 3]).unwrap();
        for e in &m {
            assert!((e.estimate - 2.5f64.powi(e.order as i32)).abs() < 1e-12);
            assert!(e.std_error.abs() < 1e-12);
        }
        assert!(empirical_moments(&s, &[]).unwrap().is_empty());
        assert!(matches!(hill_tail_index(&s, 10), Err(Error::InsufficientTail { .. })));
        assert!(empirical_moments(&s[..50], &[1]).is_err());
    }

    #[test]
    fn normal_fourth_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = Normal::new(0.0, 1.0).unwrap();
        let s: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
        let m = &empirical_moments(&s, &[4]).unwrap()[0];
        assert!((m.estimate - 3.0).abs() < 3.0 * m.std_error, "{m:?}");
    }

    #[test]
    fn hill_on_pareto_and_exponential() {
        let mut estimates = Vec::new();
        for seed in 0..8 {
            let s = pareto(2.0, 100_000, seed);
            let r = hill_report(&s, 1000).unwrap();
            assert!((r.index - 2.0).abs() < 3.0 * r.std_error, "{r:?}");
            assert!(!r.light_tail);
            estimates.push(r.index);
        }
        let mean = estimates.iter().sum::<f64>() / 8.0;
        let sd = (estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 7.0).sqrt();
        assert!(sd / mean < 0.1);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = Exp::new(1.0).unwrap();
        let s: Vec<f64> = (0..100_000).map(|_| e.sample(&mut rng)).collect();
        assert!(hill_report(&s, 1000).unwrap().light_tail);
    }

    #[test]
    fn per_side_indices() {
        let mut s = pareto(2.0, 50_000, 1);
        s.extend(pareto(4.0, 50_000, 2).into_iter().map(|x| -x));
        let r = hill_report(&s, 500).unwrap();
        let (p, n) = (r.positive_index.unwrap(), r.negative_index.unwrap());
        assert!(p < n, "{p} {n}");
    }

    #[test]
    fn markov_dominance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = Normal::new(0.5, 2.0).unwrap();
        let s: Vec<f64> = (0..20_000).map(|_| d.sample(&mut rng)).collect();
        let grid = default_e_grid(&s, 12);
        for mode in [BoundMode::Power { n: 0 }, BoundMode::Power { n: 1 }, BoundMode::Exponential { gamma: 0.5 }] {
            for p in markov_curve(&s, mode, &grid, None).unwrap() {
                assert!(p.empirical <= p.bound + 3.0 * p.std_error, "{mode:?} {p:?}");
            }
        }
    }
}
