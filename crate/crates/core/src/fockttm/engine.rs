//! Exact heat law of a finite-dimensional two-time measurement.
//!
//! The Hilbert space splits into the connected components of the joint
//! sparsity pattern of H₀, V and ω. Inside a block, H₀ = Φ diag(ε) Φ† with
//! Φ rotated inside each degenerate cluster so that Φ†ωΦ is diagonal, and
//! H = Ψ diag(λ) Ψ†. With C = Φ†Ψ and W(t) = C e^{−itλ} C†,
//!
//!   P_t(ΔQ) = Σ_{ε_a − ε_b = ΔQ} |W_ab(t)|² p_b.

use faer::Mat;
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use super::sparse::{components, SparseMat};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMat};
use crate::par_map;

/// Relative tolerance of the commutation check ‖[H₀, ω]‖ ≤ tol·‖H₀‖.
pub const COMMUTATION_TOL: f64 = 1e-10;
/// Eigenvalues of H₀ within this multiple of ‖H₀‖ share a projection.
pub const CLUSTER_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct FiniteModel {
    pub h0: SparseMat,
    pub v: SparseMat,
    pub omega: SparseMat,
    pub cluster_tol: f64,
}

impl FiniteModel {
    pub fn new(h0: SparseMat, v: SparseMat, omega: SparseMat) -> Result<Self> {
        let n = h0.dim();
        if v.dim() != n || omega.dim() != n {
            return Err(Error::invalid("H0, V and omega must have equal dimensions"));
        }
        let scale = h0.row_sum_norm();
        for (name, m) in [("H0", &h0), ("V", &v), ("omega", &omega)] {
            let tol = 1e-12 * m.row_sum_norm().max(1.0);
            if m.hermiticity_defect() > tol {
                return Err(Error::invalid(format!("{name} is not Hermitian")));
            }
        }
        let tr = omega.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::invalid(format!("tr omega = {tr}, expected 1")));
        }
        let comm = h0.matmul(&omega).add(&omega.matmul(&h0).scaled(c64::new(-1.0, 0.0)));
        let norm = comm.fro_norm();
        if norm > COMMUTATION_TOL * scale.max(f64::MIN_POSITIVE) && norm > 1e-14 {
            return Err(Error::StateNotCommuting { norm });
        }
        Ok(Self {
            cluster_tol: CLUSTER_REL_TOL * scale,
            h0,
            v,
            omega,
        })
    }

    pub fn from_dense(h0: &CMat, v: &CMat, omega: &CMat) -> Result<Self> {
        Self::new(SparseMat::from_dense(h0), SparseMat::from_dense(v), SparseMat::from_dense(omega))
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn h(&self) -> SparseMat {
        self.h0.add(&self.v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteAtomicLaw {
    /// (ΔQ, probability), sorted by ΔQ.
    pub atoms: Vec<(f64, f64)>,
}

impl DiscreteAtomicLaw {
    pub fn dirac_zero() -> Self {
        Self { atoms: vec![(0.0, 1.0)] }
    }

    pub fn total_probability(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn moment(&self, k: u32) -> f64 {
        self.atoms.iter().map(|&(x, p)| p * x.powi(k as i32)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn char_fn(&self, alpha: f64) -> c64 {
        self.atoms.iter().map(|&(x, p)| c64::from_polar(p, alpha * x)).sum()
    }

    /// Σ e^{−βΔQ} P({ΔQ}).
    pub fn exp_average(&self, beta: f64) -> f64 {
        self.atoms.iter().map(|&(x, p)| p * (-beta * x).exp()).sum()
    }
}

pub fn law_moments(law: &DiscreteAtomicLaw, orders: &[u32]) -> Vec<f64> {
    orders.iter().map(|&k| law.moment(k)).collect()
}

pub fn law_char_fn(law: &DiscreteAtomicLaw, alpha: f64) -> c64 {
    law.char_fn(alpha)
}

struct Block {
    /// Cluster index of each column of Φ.
    cluster_of: Vec<usize>,
    /// Representative energy of each cluster.
    levels: Vec<f64>,
    /// Columns of Φ with positive population, with the populations.
    occupied: Vec<(usize, f64)>,
    c: CMat,
    lambda: Vec<f64>,
}

/// Precomputed spectral data of a [`FiniteModel`]; evaluating the law at a
/// new time costs one matrix product per block.
pub struct TtmEngine {
    blocks: Vec<Block>,
    cluster_tol: f64,
}

fn diagonal_eigen(m: &CMat) -> Option<(Vec<f64>, CMat)> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] != c64::new(0.0, 0.0) {
                return None;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[(a, a)].re.total_cmp(&m[(b, b)].re));
    let vals = order.iter().map(|&i| m[(i, i)].re).collect();
    let vecs = CMat::from_fn(n, n, |i, k| c64::new(if order[k] == i { 1.0 } else { 0.0 }, 0.0));
    Some((vals, vecs))
}

fn eigen(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    if let Some(d) = diagonal_eigen(m) {
        return Ok(d);
    }
    let e = hermitian_eigen(m)?;
    Ok((e.values, e.vectors))
}

fn clusters(values: &[f64], tol: f64) -> (Vec<usize>, Vec<f64>) {
    let mut cluster_of = Vec::with_capacity(values.len());
    let mut levels = Vec::new();
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for (k, &x) in values.iter().enumerate() {
        if k == 0 || x - values[k - 1] > tol {
            sums.push((0.0, 0));
        }
        let last = sums.len() - 1;
        sums[last].0 += x;
        sums[last].1 += 1;
        cluster_of.push(last);
    }
    for (s, n) in sums {
        levels.push(s / n as f64);
    }
    (cluster_of, levels)
}

impl Block {
    fn new(model: &FiniteModel, idx: &[usize]) -> Result<Self> {
        let h0 = model.h0.block(idx);
        let omega = model.omega.block(idx);
        let h = model.h().block(idx);
        let (eps, mut phi) = eigen(&h0)?;
        let (cluster_of, levels) = clusters(&eps, model.cluster_tol);
        let m = idx.len();
        // rotate inside each cluster to diagonalize ω
        let om = phi.adjoint() * &omega * &phi;
        let mut pops = vec![0.0; m];
        let mut start = 0;
        while start < m {
            let c = cluster_of[start];
            let mut end = start;
            while end < m && cluster_of[end] == c {
                end += 1;
            }
            let k = end - start;
            if k == 1 {
                pops[start] = om[(start, start)].re;
            } else {
                let sub = CMat::from_fn(k, k, |i, j| om[(start + i, start + j)]);
                let (p, r) = eigen(&sub)?;
                let cols = CMat::from_fn(m, k, |i, j| phi[(i, start + j)]);
                let rotated = &cols * &r;
                for j in 0..k {
                    for i in 0..m {
                        phi[(i, start + j)] = rotated[(i, j)];
                    }
                    pops[start + j] = p[j];
                }
            }
            start = end;
        }
        let (lambda, psi) = eigen(&h)?;
        let c = phi.adjoint() * &psi;
        let occupied = pops
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(b, &p)| (b, p))
            .collect();
        Ok(Self {
            cluster_of,
            levels,
            occupied,
            c,
            lambda,
        })
    }

    fn atoms(&self, t: f64, out: &mut Vec<(f64, f64)>) {
        if self.occupied.is_empty() {
            return;
        }
        let m = self.c.nrows();
        let cd = Mat::from_fn(m, m, |a, k| self.c[(a, k)] * c64::from_polar(1.0, -t * self.lambda[k]));
        let c_occ = Mat::from_fn(self.occupied.len(), m, |r, k| self.c[(self.occupied[r].0, k)]);
        let w = &cd * c_occ.adjoint();
        let nc = self.levels.len();
        let mut acc = vec![0.0; nc * nc];
        for (r, &(b, p)) in self.occupied.iter().enumerate() {
            let cb = self.cluster_of[b];
            for a in 0..m {
                acc[self.cluster_of[a] * nc + cb] += w[(a, r)].norm_sqr() * p;
            }
        }
        for ca in 0..nc {
            for cb in 0..nc {
                let p = acc[ca * nc + cb];
                if p != 0.0 {
                    out.push((self.levels[ca] - self.levels[cb], p));
                }
            }
        }
    }
}

impl TtmEngine {
    pub fn new(model: &FiniteModel) -> Result<Self> {
        let groups = components(model.dim(), &[&model.h0, &model.v, &model.omega]);
        // blocks without population never contribute
        let groups: Vec<Vec<usize>> = groups
            .into_iter()
            .filter(|g| g.iter().any(|&i| model.omega.row(i).iter().any(|&(_, z)| z != c64::new(0.0, 0.0))))
            .collect();
        let blocks = par_map(&groups, |g| Block::new(model, g))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            blocks,
            cluster_tol: model.cluster_tol,
        })
    }

    pub fn law(&self, t: f64) -> DiscreteAtomicLaw {
        if t == 0.0 {
            return DiscreteAtomicLaw::dirac_zero();
        }
        let mut raw = Vec::new();
        for b in &self.blocks {
            b.atoms(t, &mut raw);
        }
        merge_atoms(raw, self.cluster_tol)
    }

    pub fn laws(&self, t_grid: &[f64]) -> Vec<DiscreteAtomicLaw> {
        par_map(t_grid, |&t| self.law(t))
    }
}

fn merge_atoms(mut raw: Vec<(f64, f64)>, tol: f64) -> DiscreteAtomicLaw {
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for (x, p) in raw {
        match atoms.last_mut() {
            Some(last) if x - prev <= tol => last.1 += p,
            _ => atoms.push((x, p)),
        }
        prev = x;
    }
    DiscreteAtomicLaw { atoms }
}

pub fn ttm_distribution(model: &FiniteModel, t: f64) -> Result<DiscreteAtomicLaw> {
    Ok(TtmEngine::new(model)?.law(t))
}
