//! Classical heat laws: Gaussian for a linear perturbation of harmonic
//! modes, a Gaussian quadratic form for a harmonic perturbation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg::{expm, rinverse, rop_norm, sym_apply, sym_eigen, RMat};
use crate::numerics::cumulants_to_moments;

/// One harmonic mode with frequency `freq`, the (π, φ) components of f
/// and covariance `cov` of π (φ then has covariance cov/freq²).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearMode {
    pub freq: f64,
    pub f_pi: f64,
    pub f_phi: f64,
    pub cov: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearClassicalModel {
    pub modes: Vec<LinearMode>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianLaw {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianLaw {
    /// Raw moments of orders 1..=k.
    pub fn moments(&self, k: usize) -> Vec<f64> {
        let mut kappa = vec![0.0; k];
        if k >= 1 {
            kappa[0] = self.mean;
        }
        if k >= 2 {
            kappa[1] = self.variance;
        }
        cumulants_to_moments(&kappa)
    }
}

/// e^{tℒ₀} on one mode, acting on (π, φ).
fn rotation(freq: f64, t: f64) -> [[f64; 2]; 2] {
    let (s, c) = (freq * t).sin_cos();
    [[c, -freq * s], [s / freq, c]]
}

/// ⟨x, y⟩ = x_π y_π + e² x_φ y_φ
fn weighted(freq: f64, x: [f64; 2], y: [f64; 2]) -> f64 {
    x[0] * y[0] + freq * freq * x[1] * y[1]
}

fn one_minus(r: [[f64; 2]; 2], x: [f64; 2]) -> [f64; 2] {
    [
        x[0] - (r[0][0] * x[0] + r[0][1] * x[1]),
        x[1] - (r[1][0] * x[0] + r[1][1] * x[1]),
    ]
}

impl LinearClassicalModel {
    pub fn validate(&self) -> Result<()> {
        for (k, m) in self.modes.iter().enumerate() {
            if !(m.freq > 0.0 && m.freq.is_finite()) {
                return Err(Error::invalid(format!("mode {k}: frequency must be positive")));
            }
            if !(m.cov > 0.0 && m.cov.is_finite()) {
                return Err(Error::invalid(format!("mode {k}: covariance must be positive")));
            }
            if !(m.f_pi.is_finite() && m.f_phi.is_finite()) {
                return Err(Error::invalid(format!("mode {k}: coupling must be finite")));
            }
        }
        Ok(())
    }

    /// ‖f‖² in the weighted inner product.
    pub fn f_norm2(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| weighted(m.freq, [m.f_pi, m.f_phi], [m.f_pi, m.f_phi]))
            .sum()
    }

    pub fn max_cov(&self) -> f64 {
        self.modes.iter().map(|m| m.cov).fold(0.0, f64::max)
    }

    /// Draws ΔQ = ⟨f, (1 − e^{tℒ₀})(f + x)⟩ with x from the Gaussian state.
    pub fn sample(&self, t: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocks: Vec<_> = self.modes.iter().map(|m| rotation(m.freq, t)).collect();
        (0..n)
            .map(|_| {
                self.modes
                    .iter()
                    .zip(&blocks)
                    .map(|(m, r)| {
                        let z1: f64 = rng.sample(StandardNormal);
                        let z2: f64 = rng.sample(StandardNormal);
                        let x = [m.f_pi + m.cov.sqrt() * z1, m.f_phi + m.cov.sqrt() / m.freq * z2];
                        weighted(m.freq, [m.f_pi, m.f_phi], one_minus(*r, x))
                    })
                    .sum()
            })
            .collect()
    }
}

pub fn linear_gaussian_law(model: &LinearClassicalModel, t: f64) -> Result<GaussianLaw> {
    model.validate()?;
    let mut mean = 0.0;
    let mut variance = 0.0;
    for m in &model.modes {
        let f = [m.f_pi, m.f_phi];
        mean += weighted(m.freq, f, one_minus(rotation(m.freq, t), f));
        let g = one_minus(rotation(m.freq, -t), f);
        variance += m.cov * weighted(m.freq, g, g);
    }
    Ok(GaussianLaw {
        mean,
        variance: variance.max(0.0),
    })
}

/// 𝔼 e^{γ|X|} for X ~ N(mean, variance).
pub fn gaussian_abs_exp_moment(law: &GaussianLaw, gamma: f64) -> f64 {
    let m = law.mean;
    let v = law.variance;
    if v <= 0.0 {
        return (gamma * m.abs()).exp();
    }
    let s = v.sqrt();
    let normal = Normal::standard();
    let up = (gamma * m + 0.5 * gamma * gamma * v).exp() * normal.cdf((m + gamma * v) / s);
    let down = (-gamma * m + 0.5 * gamma * gamma * v).exp() * normal.cdf((-m + gamma * v) / s);
    up + down
}

pub fn linear_exp_moment(model: &LinearClassicalModel, gamma: f64, t: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::invalid("gamma must be nonnegative"));
    }
    Ok(gaussian_abs_exp_moment(&linear_gaussian_law(model, t)?, gamma))
}

/// Quadratic perturbation ½⟨x, v x⟩ of independent modes, in coordinates
/// where the free energy is ½|x|².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicClassicalModel {
    pub freqs: Vec<f64>,
    /// Row-major symmetric matrix of size 2·modes.
    pub v: Vec<Vec<f64>>,
    /// Row-major covariance of the Gaussian state.
    pub sigma: Vec<Vec<f64>>,
}

fn to_mat(rows: &[Vec<f64>], n: usize, what: &str) -> Result<RMat> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::invalid(format!("{what} must be {n}x{n}")));
    }
    Ok(RMat::from_fn(n, n, |i, j| rows[i][j]))
}

fn from_mat(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

impl HarmonicClassicalModel {
    pub fn dim(&self) -> usize {
        2 * self.freqs.len()
    }

    pub fn v_mat(&self) -> Result<RMat> {
        to_mat(&self.v, self.dim(), "v")
    }

    pub fn sigma_mat(&self) -> Result<RMat> {
        to_mat(&self.sigma, self.dim(), "sigma")
    }

    /// Skew generator of the free flow, one rotation block per mode.
    pub fn l0(&self) -> RMat {
        let n = self.dim();
        RMat::from_fn(n, n, |i, j| {
            if i / 2 != j / 2 {
                return 0.0;
            }
            let e = self.freqs[i / 2];
            match (i % 2, j % 2) {
                (0, 1) => -e,
                (1, 0) => e,
                _ => 0.0,
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.freqs.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::invalid("frequencies must be positive"));
        }
        let v = self.v_mat()?;
        let s = self.sigma_mat()?;
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if (v[(i, j)] - v[(j, i)]).abs() > 1e-12 * (1.0 + v[(i, j)].abs()) {
                    return Err(Error::invalid("v must be symmetric"));
                }
                if (s[(i, j)] - s[(j, i)]).abs() > 1e-12 * (1.0 + s[(i, j)].abs()) {
                    return Err(Error::invalid("sigma must be symmetric"));
                }
            }
        }
        let (vals, _) = sym_eigen(&s)?;
        if vals.first().is_some_and(|&l| l <= 0.0) {
            return Err(Error::invalid("sigma must be positive definite"));
        }
        Ok(())
    }

    /// ℒ = ℒ₀(1 + v)
    pub fn generator(&self) -> Result<RMat> {
        let n = self.dim();
        let one_v = RMat::identity(n, n) + self.v_mat()?;
        Ok(&self.l0() * &one_v)
    }

    /// Random instance with ‖v‖ = `v_norm` and a covariance with spectrum in
    /// [0.5, 1.5].
    pub fn random(seed: u64, modes: usize, v_norm: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 * modes;
        let freqs: Vec<f64> = (0..modes).map(|_| rng.random_range(0.5..2.0)).collect();
        let a = RMat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let sym = RMat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
        let norm = rop_norm(&sym)?;
        let v = RMat::from_fn(n, n, |i, j| sym[(i, j)] * v_norm / norm);
        let b = RMat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = sym_eigen(&RMat::from_fn(n, n, |i, j| b[(i, j)] + b[(j, i)]))?.1;
        let spec: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let sigma = RMat::from_fn(n, n, |i, j| (0..n).map(|k| q[(i, k)] * spec[k] * q[(j, k)]).sum());
        let model = Self {
            freqs,
            v: from_mat(&v),
            sigma: from_mat(&sigma),
        };
        model.validate()?;
        Ok(model)
    }
}

/// Law of zᵀ M z for a standard normal vector z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFormLaw {
    /// Eigenvalues of M, nondecreasing.
    pub eigenvalues: Vec<f64>,
    #[serde(skip)]
    m: Vec<Vec<f64>>,
}

impl QuadraticFormLaw {
    pub fn from_matrix(m: &RMat) -> Result<Self> {
        let (eigenvalues, _) = sym_eigen(m)?;
        Ok(Self {
            eigenvalues,
            m: from_mat(m),
        })
    }

    pub fn matrix(&self) -> RMat {
        let n = self.m.len();
        RMat::from_fn(n, n, |i, j| self.m[i][j])
    }

    /// Supremum of γ > 0 with 𝔼 e^{γX} < ∞.
    pub fn critical_gamma(&self) -> f64 {
        let top = self.eigenvalues.last().copied().unwrap_or(0.0);
        if top > 0.0 {
            0.5 / top
        } else {
            f64::INFINITY
        }
    }

    /// 𝔼 e^{γX} = det(1 − 2γM)^{−1/2}, for either sign of γ.
    pub fn mgf(&self, gamma: f64) -> Result<f64> {
        let mut log = 0.0;
        for &l in &self.eigenvalues {
            let a = 1.0 - 2.0 * gamma * l;
            if a <= 0.0 {
                let critical = if gamma >= 0.0 { self.critical_gamma() } else { -self.reflect().critical_gamma() };
                return Err(Error::MgfDiverges { gamma, critical });
            }
            log -= 0.5 * a.ln();
        }
        Ok(log.exp())
    }

    fn reflect(&self) -> Self {
        let mut eigenvalues: Vec<f64> = self.eigenvalues.iter().map(|l| -l).collect();
        eigenvalues.reverse();
        Self {
            eigenvalues,
            m: Vec::new(),
        }
    }

    /// κ_k = 2^{k−1}(k−1)! tr M^k for k = 1..=up_to.
    pub fn cumulants(&self, up_to: usize) -> Vec<f64> {
        let mut fact = 1.0;
        (1..=up_to)
            .map(|k| {
                if k > 1 {
                    fact *= (k - 1) as f64;
                }
                let tr: f64 = self.eigenvalues.iter().map(|l| l.powi(k as i32)).sum();
                2f64.powi(k as i32 - 1) * fact * tr
            })
            .collect()
    }

    pub fn moments(&self, up_to: usize) -> Vec<f64> {
        cumulants_to_moments(&self.cumulants(up_to))
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.m.len();
        (0..n)
            .map(|_| {
                let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let mut s = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        s += z[i] * self.m[i][j] * z[j];
                    }
                }
                s
            })
            .collect()
    }
}

/// v_t = e^{tℒᵀ} v e^{tℒ}
pub fn evolved_perturbation(model: &HarmonicClassicalModel, t: f64) -> Result<RMat> {
    let l = model.generator()?;
    let flow = expm(&RMat::from_fn(l.nrows(), l.ncols(), |i, j| t * l[(i, j)]));
    Ok(flow.transpose() * model.v_mat()? * &flow)
}

pub fn harmonic_law(model: &HarmonicClassicalModel, t: f64) -> Result<QuadraticFormLaw> {
    model.validate()?;
    let v = model.v_mat()?;
    let vt = evolved_perturbation(model, t)?;
    let half = sym_apply(&model.sigma_mat()?, f64::sqrt)?;
    let inner = &v - &vt;
    let m = &half * &inner * &half;
    let n = m.nrows();
    let m = RMat::from_fn(n, n, |i, j| 0.25 * (m[(i, j)] + m[(j, i)]));
    QuadraticFormLaw::from_matrix(&m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicUniformReport {
    /// max over the grid of 𝔼e^{γΔQ} + 𝔼e^{−γΔQ} (an upper bound of
    /// 𝔼e^{γ|ΔQ|}); infinite when some grid time is past its critical γ
    pub grid_max: f64,
    /// max over the grid of ‖e^{tℒ}‖²
    pub max_flow_norm_sq: f64,
    /// ‖1 + v‖·‖(1 + v)^{−1}‖, infinite when −1 ∈ sp v
    pub condition: f64,
    /// γ below which the uniform bound is finite
    pub uniform_critical_gamma: f64,
    /// 2(1 − 2γm)^{−dim/2} with m = ½‖Σ‖(1 + K)‖v‖
    pub uniform_bound: Option<f64>,
    pub certified_bound: bool,
}

pub fn harmonic_uniform_check(model: &HarmonicClassicalModel, gamma: f64, t_grid: &[f64]) -> Result<HarmonicUniformReport> {
    model.validate()?;
    if !(gamma >= 0.0) {
        return Err(Error::invalid("gamma must be nonnegative"));
    }
    let n = model.dim();
    let v = model.v_mat()?;
    let one_v = RMat::identity(n, n) + &v;
    let (vals, _) = sym_eigen(&one_v)?;
    let min_abs = vals.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    let scale = vals.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let invertible = min_abs > 1e-12 * scale.max(1.0);
    let condition = if invertible {
        rop_norm(&one_v)? * rop_norm(&rinverse(&one_v))?
    } else {
        f64::INFINITY
    };

    let l = model.generator()?;
    let mut grid_max: f64 = 0.0;
    let mut max_flow_norm_sq: f64 = 0.0;
    for &t in t_grid {
        let flow = expm(&RMat::from_fn(n, n, |i, j| t * l[(i, j)]));
        max_flow_norm_sq = max_flow_norm_sq.max(rop_norm(&flow)?.powi(2));
        let law = harmonic_law(model, t)?;
        let both = match (law.mgf(gamma), law.mgf(-gamma)) {
            (Ok(a), Ok(b)) => a + b,
            _ => f64::INFINITY,
        };
        grid_max = grid_max.max(both);
    }

    let v_norm = rop_norm(&v)?;
    let m = 0.5 * rop_norm(&model.sigma_mat()?)? * (1.0 + condition) * v_norm;
    let uniform_critical_gamma = if m > 0.0 { 0.5 / m } else { f64::INFINITY };
    let uniform_bound = if invertible && gamma < uniform_critical_gamma {
        Some(2.0 * (1.0 - 2.0 * gamma * m).powf(-(n as f64) / 2.0))
    } else {
        None
    };
    let norm_ok = invertible && max_flow_norm_sq <= condition * (1.0 + 1e-10);
    let certified_bound = norm_ok && uniform_bound.is_some_and(|b| grid_max <= b * (1.0 + 1e-10));
    Ok(HarmonicUniformReport {
        grid_max,
        max_flow_norm_sq,
        condition,
        uniform_critical_gamma,
        uniform_bound,
        certified_bound,
    })
}
