//! Discretized one-particle operators for the impurity models and numerical
//! checks of the one-particle lemmas behind the moment theorems.

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formfactor::FormFactor;
use crate::linalg::{hermitian_eigen, inner, mat_vec, op_norm, vec_norm, CMat, HermitianEigen};
use crate::numerics::{gauss_legendre, running_max_trend};
use crate::par_map;

/// Impurity level ε_o coupled to a bath sampled at `bath_energies`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedImpurity {
    pub eps_o: f64,
    pub bath_energies: Vec<f64>,
    pub bath_weights: Vec<f64>,
    pub f: FormFactor,
}

impl DiscretizedImpurity {
    pub fn new(eps_o: f64, bath_energies: Vec<f64>, bath_weights: Vec<f64>, f: FormFactor) -> Result<Self> {
        let imp = Self {
            eps_o,
            bath_energies,
            bath_weights,
            f,
        };
        imp.validate()?;
        Ok(imp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_o > 0.0 && self.eps_o.is_finite()) {
            return Err(Error::invalid("eps_o must be positive"));
        }
        if self.bath_energies.len() != self.bath_weights.len() {
            return Err(Error::invalid("bath energies and weights differ in length"));
        }
        if self.bath_energies.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::invalid("bath energies must be positive"));
        }
        if self.bath_energies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("bath energies must be strictly increasing"));
        }
        if self.bath_weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("bath weights must be positive"));
        }
        self.f.validate()
    }

    /// Gauss-Legendre nodes on [0, cutoff].
    pub fn gauss_legendre(eps_o: f64, f: FormFactor, d: usize, cutoff: f64) -> Result<Self> {
        let (x, w) = gauss_legendre(d, 0.0, cutoff);
        Self::new(eps_o, x, w, f)
    }

    /// Midpoints of `d` cells of width `spacing`, so the bath reaches
    /// d·spacing.
    pub fn midpoint(eps_o: f64, f: FormFactor, d: usize, spacing: f64) -> Result<Self> {
        let x = (0..d).map(|k| (k as f64 + 0.5) * spacing).collect();
        Self::new(eps_o, x, vec![spacing; d], f)
    }

    pub fn bath_size(&self) -> usize {
        self.bath_energies.len()
    }

    /// Components √w_k f(e_k) of ψ_f on the bath.
    pub fn couplings(&self) -> Vec<c64> {
        self.bath_energies
            .iter()
            .zip(&self.bath_weights)
            .map(|(&e, &w)| self.f.value(e) * w.sqrt())
            .collect()
    }

    /// Discrete ‖ê^{-1/2} f‖.
    pub fn ir_norm(&self) -> f64 {
        self.couplings()
            .iter()
            .zip(&self.bath_energies)
            .map(|(g, e)| g.norm_sqr() / e)
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme")]
pub enum BathScheme {
    Midpoint { spacing: f64 },
    GaussLegendre { cutoff: f64 },
}

/// Recipe producing a [`DiscretizedImpurity`] for any bath size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathDiscretization {
    pub eps_o: f64,
    pub f: FormFactor,
    pub scheme: BathScheme,
}

impl BathDiscretization {
    pub fn build(&self, d: usize) -> Result<DiscretizedImpurity> {
        match self.scheme {
            BathScheme::Midpoint { spacing } => {
                DiscretizedImpurity::midpoint(self.eps_o, self.f.clone(), d, spacing)
            }
            BathScheme::GaussLegendre { cutoff } => {
                DiscretizedImpurity::gauss_legendre(self.eps_o, self.f.clone(), d, cutoff)
            }
        }
    }
}

/// (h₀, v, h) on C ⊕ C^D, impurity first.
#[derive(Clone, Debug)]
pub struct OneParticleTriple {
    pub h0: CMat,
    pub v: CMat,
    pub h: CMat,
    pub psi_o: Vec<c64>,
    pub psi_f: Vec<c64>,
    pub eps_o: f64,
    pub bath_energies: Vec<f64>,
}

impl OneParticleTriple {
    pub fn dim(&self) -> usize {
        self.psi_o.len()
    }

    pub fn h0_diag(&self) -> Vec<f64> {
        std::iter::once(self.eps_o).chain(self.bath_energies.iter().copied()).collect()
    }

    /// h̄ = h₀ + v̄ with the bath components of ψ_f conjugated.
    pub fn h_bar(&self) -> CMat {
        let fbar: Vec<c64> = self.psi_f.iter().map(|z| z.conj()).collect();
        let vbar = rank_two(&self.psi_o, &fbar);
        &self.h0 + &vbar
    }
}

fn rank_two(psi_o: &[c64], psi_f: &[c64]) -> CMat {
    let n = psi_o.len();
    CMat::from_fn(n, n, |i, j| psi_o[i] * psi_f[j].conj() + psi_f[i] * psi_o[j].conj())
}

pub fn build_one_particle(imp: &DiscretizedImpurity) -> Result<OneParticleTriple> {
    imp.validate()?;
    let g = imp.couplings();
    if let Some((k, z)) = g.iter().enumerate().find(|(_, z)| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonEvaluable {
            at: imp.bath_energies[k],
            value: format!("{z}"),
        });
    }
    let n = g.len() + 1;
    let mut psi_o = vec![c64::new(0.0, 0.0); n];
    psi_o[0] = c64::new(1.0, 0.0);
    let mut psi_f = vec![c64::new(0.0, 0.0); n];
    psi_f[1..].copy_from_slice(&g);
    let diag: Vec<f64> = std::iter::once(imp.eps_o).chain(imp.bath_energies.iter().copied()).collect();
    let h0 = CMat::from_fn(n, n, |i, j| if i == j { c64::new(diag[i], 0.0) } else { c64::new(0.0, 0.0) });
    let v = rank_two(&psi_o, &psi_f);
    let h = &h0 + &v;
    Ok(OneParticleTriple {
        h0,
        v,
        h,
        psi_o,
        psi_f,
        eps_o: imp.eps_o,
        bath_energies: imp.bath_energies.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Occupation {
    FermiDirac { beta: f64 },
    BoseEinstein { beta: f64 },
}

impl Occupation {
    pub fn density(&self, e: f64) -> f64 {
        match *self {
            Occupation::FermiDirac { beta } => 1.0 / (1.0 + (beta * e).exp()),
            Occupation::BoseEinstein { beta } => 1.0 / (beta * e).exp_m1(),
        }
    }
}

fn diag_scale(d: &[f64], m: &CMat) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * d[i])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma51Report {
    /// max over the grid of ‖h₀ⁿ(e^{ith₀} − e^{ith})‖ − K_n(|t|)
    pub max_defect: f64,
    pub worst_t: f64,
    pub k_intercept: f64,
    pub k_slope: f64,
}

pub fn lemma51_defect(triple: &OneParticleTriple, n: u32, t_grid: &[f64]) -> Result<Lemma51Report> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if t_grid.is_empty() {
        return Err(Error::invalid("empty time grid"));
    }
    let d0 = triple.h0_diag();
    let pow = |k: u32| -> Vec<f64> { d0.iter().map(|x| x.powi(k as i32)).collect() };
    let hn = pow(n);
    let hn1v = diag_scale(&pow(n - 1), &triple.v);
    let k_intercept = 2.0 * op_norm(hn1v.as_ref())?;
    let k_slope = op_norm((&hn1v * &triple.h).as_ref())?;
    let eig = hermitian_eigen(&triple.h)?;
    let rows = par_map(t_grid, |&t| -> Result<(f64, f64)> {
        let u = eig.unitary(t);
        let n_dim = d0.len();
        let diff = CMat::from_fn(n_dim, n_dim, |i, j| {
            let free = if i == j { c64::from_polar(1.0, t * d0[i]) } else { c64::new(0.0, 0.0) };
            (free - u[(i, j)]) * hn[i]
        });
        let lhs = op_norm(diff.as_ref())?;
        Ok((t, lhs - (k_intercept + t.abs() * k_slope)))
    });
    let mut worst = (t_grid[0], f64::NEG_INFINITY);
    for r in rows {
        let (t, d) = r?;
        if d > worst.1 {
            worst = (t, d);
        }
    }
    Ok(Lemma51Report {
        max_defect: worst.1,
        worst_t: worst.0,
        k_intercept,
        k_slope,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma52Report {
    pub max_norm: f64,
    pub norms: Vec<f64>,
    /// Relative slope of the running maximum over the last tenth of the grid.
    pub late_trend: f64,
    pub growth_flag: bool,
}

pub const TREND_THRESHOLD: f64 = 1e-3;

pub fn lemma52_scan(triple: &OneParticleTriple, phi: &[c64], alpha: f64, t_grid: &[f64]) -> Result<Lemma52Report> {
    if phi.len() != triple.dim() {
        return Err(Error::invalid("phi has the wrong dimension"));
    }
    if t_grid.is_empty() {
        return Err(Error::invalid("empty time grid"));
    }
    let d0: Vec<f64> = triple.h0_diag().iter().map(|x| x.powf(alpha)).collect();
    let eig = hermitian_eigen(&triple.h)?;
    let norms = par_map(t_grid, |&t| {
        let psi = evolve(&eig, phi, t);
        psi.iter().zip(&d0).map(|(z, d)| (z * d).norm_sqr()).sum::<f64>().sqrt()
    });
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let start = t_grid.len() - (t_grid.len() / 10).max(2).min(t_grid.len());
    let late_trend = running_max_trend(t_grid, &norms, start);
    Ok(Lemma52Report {
        max_norm,
        late_trend,
        growth_flag: late_trend > TREND_THRESHOLD,
        norms,
    })
}

/// e^{ith} φ from an eigendecomposition of h.
fn evolve(eig: &HermitianEigen, phi: &[c64], t: f64) -> Vec<c64> {
    let u = &eig.vectors;
    let n = phi.len();
    let coef: Vec<c64> = (0..n)
        .map(|j| {
            let c: c64 = (0..n).map(|i| u[(i, j)].conj() * phi[i]).sum();
            c * c64::from_polar(1.0, t * eig.values[j])
        })
        .collect();
    (0..n).map(|i| (0..n).map(|j| u[(i, j)] * coef[j]).sum()).collect()
}

/// ∫_{t1}^{t2} e^{iωt} dt
fn phase_integral(omega: f64, t1: f64, t2: f64) -> c64 {
    let len = t2 - t1;
    if (omega * len).abs() < 1e-8 {
        let mid = 0.5 * (t1 + t2);
        return c64::from_polar(len, omega * mid);
    }
    (c64::from_polar(1.0, omega * t2) - c64::from_polar(1.0, omega * t1)) / c64::new(0.0, omega)
}

pub const EIGENVECTOR_TOL: f64 = 1e-8;

fn eigen_residual(m: &CMat, psi: &[c64]) -> Result<f64> {
    let mpsi = mat_vec(m, psi);
    let rq = inner(psi, &mpsi) / inner(psi, psi);
    let r: Vec<c64> = mpsi.iter().zip(psi).map(|(a, b)| a - rq * b).collect();
    let scale = op_norm(m.as_ref())?.max(f64::MIN_POSITIVE) * vec_norm(psi);
    Ok(vec_norm(&r) / scale)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma54Report {
    /// inf over e of ∫ ‖A(1 − e^{−it(h̄−e)})ψ‖² dt
    pub infimum: f64,
    pub argmin_e: f64,
    /// inf over e of ‖∫ A(1 − e^{−it(h̄−e)})ψ dt‖² / (t₂ − t₁), a lower
    /// bound of the above by Jensen's inequality
    pub jensen_infimum: f64,
    pub integrand: Vec<f64>,
    pub jensen: Vec<f64>,
    /// (t₂ − t₁)‖Aψ‖²
    pub plateau_target: f64,
    /// Relative distance of the Jensen bound at the largest grid energy to
    /// the plateau target.
    pub plateau_rel_err: f64,
}

pub fn lemma54_infimum(
    triple: &OneParticleTriple,
    occupation: Occupation,
    psi: &[c64],
    window: (f64, f64),
    e_grid: &[f64],
) -> Result<Lemma54Report> {
    let (t1, t2) = window;
    if !(t1 < t2) {
        return Err(Error::invalid("window needs t1 < t2"));
    }
    if psi.len() != triple.dim() || vec_norm(psi) == 0.0 {
        return Err(Error::invalid("psi must be a nonzero vector of the one-particle dimension"));
    }
    if e_grid.is_empty() {
        return Err(Error::invalid("empty energy grid"));
    }
    let hbar = triple.h_bar();
    let residual = eigen_residual(&triple.h, psi)?.min(eigen_residual(&hbar, psi)?);
    if residual <= EIGENVECTOR_TOL {
        return Err(Error::EigenvectorInput { residual });
    }
    let eig = hermitian_eigen(&hbar)?;
    let e_top = e_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if e_top <= eig.values.last().copied().unwrap_or(0.0) {
        return Err(Error::invalid("e_grid must extend beyond the spectrum of h-bar"));
    }
    let a: Vec<f64> = triple.h0_diag().iter().map(|&e| occupation.density(e).sqrt()).collect();
    let n = psi.len();
    let u = &eig.vectors;
    // b_j = A u_j c_j with c = U†ψ
    let c: Vec<c64> = (0..n).map(|j| (0..n).map(|i| u[(i, j)].conj() * psi[i]).sum()).collect();
    let b: Vec<Vec<c64>> = (0..n).map(|j| (0..n).map(|i| a[i] * u[(i, j)] * c[j]).collect()).collect();
    let apsi: Vec<c64> = (0..n).map(|i| a[i] * psi[i]).collect();
    let a_b: Vec<c64> = b.iter().map(|bj| inner(&apsi, bj)).collect();
    let gram: Vec<Vec<c64>> = b.iter().map(|bj| b.iter().map(|bk| inner(bj, bk)).collect()).collect();
    let a2 = vec_norm(&apsi).powi(2);
    let len = t2 - t1;

    let rows = par_map(e_grid, |&e| {
        let x: Vec<f64> = eig.values.iter().map(|l| l - e).collect();
        // ‖a − Σ_j e^{−itx_j} b_j‖² integrated over the window
        let mut s = c64::new(a2 * len, 0.0);
        for j in 0..n {
            s -= 2.0 * (phase_integral(-x[j], t1, t2) * a_b[j]).re;
            for k in 0..n {
                s += phase_integral(x[j] - x[k], t1, t2) * gram[j][k];
            }
        }
        let y: Vec<c64> = x.iter().map(|&xj| c64::new(len, 0.0) - phase_integral(-xj, t1, t2)).collect();
        let vec: Vec<c64> = (0..n).map(|i| (0..n).map(|j| b[j][i] * y[j]).sum()).collect();
        (s.re, vec_norm(&vec).powi(2) / len)
    });
    let integrand: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let jensen: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let (mut argmin, mut inf) = (e_grid[0], f64::INFINITY);
    for (e, v) in e_grid.iter().zip(&integrand) {
        if *v < inf {
            inf = *v;
            argmin = *e;
        }
    }
    let jensen_infimum = jensen.iter().copied().fold(f64::INFINITY, f64::min);
    let top_idx = e_grid
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let plateau_target = len * a2;
    Ok(Lemma54Report {
        infimum: inf,
        argmin_e: argmin,
        jensen_infimum,
        plateau_rel_err: (jensen[top_idx] - plateau_target).abs() / plateau_target,
        integrand,
        jensen,
        plateau_target,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma55Report {
    pub eigenvalues: Vec<f64>,
    pub predicted: Vec<f64>,
    pub max_spectrum_err: f64,
    pub ir_norm: f64,
    /// sup over the grid of ‖h₀^{−1/2} e^{ith} φ‖
    pub sup_norm: f64,
}

pub const DEGENERACY_TOL: f64 = 1e-12;

pub fn lemma55_check(triple: &OneParticleTriple, phi: &[c64], t_grid: &[f64]) -> Result<Lemma55Report> {
    if phi.len() != triple.dim() {
        return Err(Error::invalid("phi has the wrong dimension"));
    }
    let d0 = triple.h0_diag();
    let ir_norm = triple.psi_f[1..]
        .iter()
        .zip(&triple.bath_energies)
        .map(|(g, e)| g.norm_sqr() / e)
        .sum::<f64>()
        .sqrt();
    let sqrt_eps = triple.eps_o.sqrt();
    if (ir_norm - sqrt_eps).abs() < DEGENERACY_TOL {
        return Err(Error::DegenerateCoupling { norm: ir_norm, sqrt_eps });
    }
    let inv_sqrt: Vec<f64> = d0.iter().map(|x| 1.0 / x.sqrt()).collect();
    let n = d0.len();
    let m = CMat::from_fn(n, n, |i, j| triple.h[(i, j)] * (inv_sqrt[i] * inv_sqrt[j]));
    let eigenvalues = hermitian_eigen(&m)?.values;
    let r = ir_norm / sqrt_eps;
    let mut predicted = vec![1.0; n.saturating_sub(2)];
    if n >= 2 {
        predicted.push(1.0 - r);
        predicted.push(1.0 + r);
    }
    predicted.sort_by(f64::total_cmp);
    let max_spectrum_err = eigenvalues
        .iter()
        .zip(&predicted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let eig = hermitian_eigen(&triple.h)?;
    let sup_norm = par_map(t_grid, |&t| {
        let psi = evolve(&eig, phi, t);
        psi.iter().zip(&inv_sqrt).map(|(z, s)| (z * s).norm_sqr()).sum::<f64>().sqrt()
    })
    .into_iter()
    .fold(0.0, f64::max);
    Ok(Lemma55Report {
        eigenvalues,
        predicted,
        max_spectrum_err,
        ir_norm,
        sup_norm,
    })
}
