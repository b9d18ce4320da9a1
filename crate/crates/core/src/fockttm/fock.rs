//! Occupation-number bases and second quantization of one-particle
//! operators for fermions (Jordan-Wigner signs) and number-truncated bosons.

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::sparse::{components, SparseMat};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMat};
use crate::oneparticle::OneParticleTriple;

pub const FERMION_DIM_CAP: usize = 1 << 14;
pub const BOSON_DIM_CAP: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Fermion,
    Boson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockSpec {
    pub statistics: Statistics,
    pub modes: usize,
    /// Largest total occupation kept for bosons.
    #[serde(default)]
    pub boson_total_cap: usize,
    /// Infrared floor δ of the Gibbs state, p_δ(e) = max{δ, e}.
    #[serde(default)]
    pub ir_floor: f64,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

impl FockSpec {
    pub fn fermion(modes: usize) -> Self {
        Self {
            statistics: Statistics::Fermion,
            modes,
            boson_total_cap: 0,
            ir_floor: 0.0,
        }
    }

    pub fn boson(modes: usize, n_max: usize, ir_floor: f64) -> Self {
        Self {
            statistics: Statistics::Boson,
            modes,
            boson_total_cap: n_max,
            ir_floor,
        }
    }

    /// Dimension of the (truncated) Fock space, saturating.
    pub fn dimension(&self) -> u128 {
        match self.statistics {
            Statistics::Fermion => {
                if self.modes >= 127 {
                    u128::MAX
                } else {
                    1u128 << self.modes
                }
            }
            Statistics::Boson => binomial(self.boson_total_cap + self.modes, self.modes),
        }
    }

    pub fn cap(&self) -> usize {
        match self.statistics {
            Statistics::Fermion => FERMION_DIM_CAP,
            Statistics::Boson => BOSON_DIM_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ir_floor >= 0.0 && self.ir_floor.is_finite()) {
            return Err(Error::invalid("ir_floor must be a finite nonnegative number"));
        }
        let dim = self.dimension();
        if dim > self.cap() as u128 {
            return Err(Error::CapExceeded {
                dim: dim.min(usize::MAX as u128) as usize,
                cap: self.cap(),
            });
        }
        Ok(())
    }
}

/// Occupation basis. Fermion states are ordered by bitmask (mode 0 is the
/// lowest bit); boson states by total number, then lexicographically.
#[derive(Clone, Debug)]
pub struct FockBasis {
    pub spec: FockSpec,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

fn boson_states(modes: usize, n_max: usize) -> Vec<Vec<u8>> {
    fn fill(pos: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if pos == cur.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for k in (0..=left).rev() {
            cur[pos] = k as u8;
            fill(pos + 1, left - k, cur, out);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    let mut cur = vec![0u8; modes];
    for total in 0..=n_max {
        fill(0, total, &mut cur, &mut out);
    }
    out
}

impl FockBasis {
    pub fn new(spec: &FockSpec) -> Result<Self> {
        spec.validate()?;
        let states: Vec<Vec<u8>> = match spec.statistics {
            Statistics::Fermion => (0..1usize << spec.modes)
                .map(|mask| (0..spec.modes).map(|j| ((mask >> j) & 1) as u8).collect())
                .collect(),
            Statistics::Boson => {
                if spec.boson_total_cap > u8::MAX as usize {
                    return Err(Error::invalid("boson_total_cap above 255"));
                }
                boson_states(spec.modes, spec.boson_total_cap)
            }
        };
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self {
            spec: spec.clone(),
            states,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn vacuum(&self) -> usize {
        0
    }

    fn fermion_sign(occ: &[u8], j: usize) -> f64 {
        if occ[..j].iter().map(|&x| x as u32).sum::<u32>() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// a_i† a_j applied to basis state `s`: (target index, amplitude).
    fn hop(&self, s: usize, i: usize, j: usize) -> Option<(usize, f64)> {
        let occ = &self.states[s];
        if i == j {
            return (occ[i] > 0).then_some((s, occ[i] as f64));
        }
        if occ[j] == 0 {
            return None;
        }
        let mut next = occ.clone();
        let amp = match self.spec.statistics {
            Statistics::Fermion => {
                if occ[i] == 1 {
                    return None;
                }
                let s1 = Self::fermion_sign(&next, j);
                next[j] = 0;
                let s2 = Self::fermion_sign(&next, i);
                next[i] = 1;
                s1 * s2
            }
            Statistics::Boson => {
                let a = (next[j] as f64).sqrt();
                next[j] -= 1;
                let b = (next[i] as f64 + 1.0).sqrt();
                next[i] += 1;
                a * b
            }
        };
        Some((self.index[&next], amp))
    }

    /// dΓ(b) = Σ b_ij a_i† a_j.
    pub fn second_quantize(&self, b: &CMat) -> Result<SparseMat> {
        let m = self.spec.modes;
        if b.nrows() != m || b.ncols() != m {
            return Err(Error::invalid(format!("one-particle matrix must be {m}x{m}")));
        }
        let nz: Vec<(usize, usize, c64)> = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .filter_map(|(i, j)| (b[(i, j)] != c64::new(0.0, 0.0)).then_some((i, j, b[(i, j)])))
            .collect();
        let mut entries = Vec::new();
        for s in 0..self.dim() {
            for &(i, j, z) in &nz {
                if let Some((r, amp)) = self.hop(s, i, j) {
                    entries.push((r, s, z * amp));
                }
            }
        }
        Ok(SparseMat::from_triplets(self.dim(), entries))
    }

    /// φ(f) = (a†(f) + a(f))/√2 on the number-truncated boson space.
    pub fn field(&self, f: &[c64]) -> Result<SparseMat> {
        if self.spec.statistics != Statistics::Boson {
            return Err(Error::invalid("field operators need boson statistics"));
        }
        if f.len() != self.spec.modes {
            return Err(Error::invalid("field components must match the number of modes"));
        }
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let mut entries = Vec::new();
        for s in 0..self.dim() {
            let occ = &self.states[s];
            let total: usize = occ.iter().map(|&x| x as usize).sum();
            if total >= self.spec.boson_total_cap {
                continue;
            }
            for (i, &fi) in f.iter().enumerate() {
                if fi == c64::new(0.0, 0.0) {
                    continue;
                }
                let mut up = occ.clone();
                up[i] += 1;
                let r = self.index[&up];
                let amp = (up[i] as f64).sqrt() * r2;
                // a†(f) contributes f_i, its adjoint the conjugate
                entries.push((r, s, fi * amp));
                entries.push((s, r, fi.conj() * amp));
            }
        }
        Ok(SparseMat::from_triplets(self.dim(), entries))
    }

    /// e^{−β dΓ(k)}/Z, with k = p_δ(h_one) for bosons and k = h_one for
    /// fermions.
    pub fn gibbs_state(&self, h_one: &CMat, beta: f64) -> Result<SparseMat> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta must be positive"));
        }
        let k = match self.spec.statistics {
            Statistics::Fermion => h_one.clone(),
            Statistics::Boson => {
                let delta = self.spec.ir_floor;
                let eig = hermitian_eigen(h_one)?;
                if delta <= 0.0 && eig.values.first().is_some_and(|&e| e <= 0.0) {
                    return Err(Error::invalid(
                        "boson Gibbs state needs a positive one-particle energy or ir_floor > 0",
                    ));
                }
                eig.apply_fn(|e| c64::new(e.max(delta), 0.0))
            }
        };
        let big_k = self.second_quantize(&k)?;
        let blocks = components(self.dim(), &[&big_k]);
        let mut entries = Vec::new();
        let mut parts = Vec::with_capacity(blocks.len());
        let mut e_min = f64::INFINITY;
        for idx in &blocks {
            let b = big_k.block(idx);
            let eig = hermitian_eigen(&b)?;
            e_min = e_min.min(eig.values[0]);
            parts.push(eig);
        }
        let mut z = 0.0;
        for (idx, eig) in blocks.iter().zip(&parts) {
            let w: Vec<f64> = eig.values.iter().map(|&e| (-beta * (e - e_min)).exp()).collect();
            z += w.iter().sum::<f64>();
            let m = eig.apply_fn(|e| c64::new((-beta * (e - e_min)).exp(), 0.0));
            for a in 0..idx.len() {
                for b in 0..idx.len() {
                    let v = m[(a, b)];
                    if v != c64::new(0.0, 0.0) {
                        entries.push((idx[a], idx[b], v));
                    }
                }
            }
        }
        Ok(SparseMat::from_triplets(self.dim(), entries).scaled(c64::new(1.0 / z, 0.0)))
    }
}

pub fn second_quantize(b: &CMat, spec: &FockSpec) -> Result<SparseMat> {
    FockBasis::new(spec)?.second_quantize(b)
}

/// dΓ(v) for the rank-two coupling of a one-particle triple.
pub fn build_quadratic_v(triple: &OneParticleTriple, spec: &FockSpec) -> Result<SparseMat> {
    FockBasis::new(spec)?.second_quantize(&triple.v)
}

pub fn build_linear_v(f: &[c64], spec: &FockSpec) -> Result<SparseMat> {
    FockBasis::new(spec)?.field(f)
}

pub fn gibbs_state(h_one: &CMat, beta: f64, spec: &FockSpec) -> Result<SparseMat> {
    FockBasis::new(spec)?.gibbs_state(h_one, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::op_norm;

    fn diag(d: &[f64]) -> CMat {
        CMat::from_fn(d.len(), d.len(), |i, j| c64::new(if i == j { d[i] } else { 0.0 }, 0.0))
    }

    #[test]
    fn number_operator_and_vacuum() {
        for spec in [FockSpec::fermion(3), FockSpec::boson(3, 4, 0.0)] {
            let basis = FockBasis::new(&spec).unwrap();
            let n = basis.second_quantize(&CMat::identity(3, 3)).unwrap();
            assert!(n.is_diagonal());
            for s in 0..basis.dim() {
                let total: f64 = basis.state(s).iter().map(|&x| x as f64).sum();
                assert_eq!(n.get(s, s).re, total);
            }
            assert_eq!(n.get(0, 0), c64::new(0.0, 0.0));
        }
    }

    #[test]
    fn two_fermion_modes_spectrum() {
        let spec = FockSpec::fermion(2);
        let m = second_quantize(&diag(&[0.7, 1.9]), &spec).unwrap().to_dense();
        let mut ev = hermitian_eigen(&m).unwrap().values;
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip([0.0, 0.7, 1.9, 2.6]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn fermion_anticommutation() {
        // dΓ of a hopping matrix reproduces its one-particle block.
        let spec = FockSpec::fermion(3);
        let basis = FockBasis::new(&spec).unwrap();
        let b = CMat::from_fn(3, 3, |i, j| c64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let big = basis.second_quantize(&b).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut oi = vec![0u8; 3];
                oi[i] = 1;
                let mut oj = vec![0u8; 3];
                oj[j] = 1;
                let (si, sj) = (basis.index_of(&oi).unwrap(), basis.index_of(&oj).unwrap());
                assert_eq!(big.get(si, sj), b[(i, j)]);
            }
        }
        // two-particle sector: dΓ(b) on |110> has the Slater-determinant sign
        let s = basis.index_of(&[1, 1, 0]).unwrap();
        let t = basis.index_of(&[0, 1, 1]).unwrap();
        // a_2† a_0 |110> = a_2† a_1† |000>·(+1) = −a_1† a_2†|000>... = −|011>
        assert_eq!(big.get(t, s), -b[(2, 0)]);
    }

    #[test]
    fn field_vacuum_moments() {
        let spec = FockSpec::boson(3, 5, 0.0);
        let basis = FockBasis::new(&spec).unwrap();
        let f = [c64::new(0.3, 0.4), c64::new(-1.0, 0.2), c64::new(0.0, 0.5)];
        let phi = basis.field(&f).unwrap();
        assert!(phi.hermiticity_defect() < 1e-15);
        assert_eq!(phi.get(0, 0), c64::new(0.0, 0.0));
        let phi2 = phi.matmul(&phi);
        let norm2: f64 = f.iter().map(|z| z.norm_sqr()).sum();
        assert!((phi2.get(0, 0).re - 0.5 * norm2).abs() < 1e-14);
        let zero = basis.field(&[c64::new(0.0, 0.0); 3]).unwrap();
        assert_eq!(zero.nnz(), 0);
    }

    #[test]
    fn fermion_gibbs_occupations() {
        let e = [0.4, -0.3, 1.1];
        let spec = FockSpec::fermion(3);
        let basis = FockBasis::new(&spec).unwrap();
        let beta = 1.3;
        let rho = basis.gibbs_state(&diag(&e), beta).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        for (k, &ek) in e.iter().enumerate() {
            let mut b = CMat::zeros(3, 3);
            b[(k, k)] = c64::new(1.0, 0.0);
            let nk = basis.second_quantize(&b).unwrap();
            let occ = rho.matmul(&nk).trace().re;
            assert!((occ - 1.0 / (1.0 + (beta * ek).exp())).abs() < 1e-13);
        }
    }

    #[test]
    fn boson_gibbs_low_temperature_is_vacuum() {
        let spec = FockSpec::boson(2, 3, 0.0);
        let rho = gibbs_state(&diag(&[1.0, 2.0]), 80.0, &spec).unwrap();
        assert!((rho.get(0, 0).re - 1.0).abs() < 1e-30_f64.max(1e-15));
        assert!(matches!(gibbs_state(&diag(&[0.0, 1.0]), 1.0, &spec), Err(Error::InvalidArgument(_))));
        let floored = FockSpec::boson(2, 3, 1e-3);
        assert!(gibbs_state(&diag(&[0.0, 1.0]), 1.0, &floored).is_ok());
    }

    #[test]
    fn caps() {
        assert!(matches!(FockBasis::new(&FockSpec::fermion(15)), Err(Error::CapExceeded { .. })));
        assert!(FockSpec::boson(6, 8, 0.0).validate().is_ok());
        assert_eq!(FockSpec::boson(6, 8, 0.0).dimension(), 3003);
        assert!(matches!(FockSpec::boson(10, 12, 0.0).validate(), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn quadratic_v_norm() {
        use crate::formfactor::FormFactor;
        use crate::oneparticle::{build_one_particle, DiscretizedImpurity};
        let imp = DiscretizedImpurity::gauss_legendre(1.0, FormFactor::sharp_cutoff(2.0, 0.0).unwrap(), 3, 2.0).unwrap();
        let triple = build_one_particle(&imp).unwrap();
        let spec = FockSpec::fermion(4);
        let v = build_quadratic_v(&triple, &spec).unwrap();
        let norm_f = triple.psi_f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nv = op_norm(v.to_dense().as_ref()).unwrap();
        assert!(nv <= 2.0 * norm_f + 1e-12, "{nv} vs {norm_f}");
        let zero = FormFactor::sharp_cutoff(2.0, 0.0).unwrap();
        let mut zimp = DiscretizedImpurity::gauss_legendre(1.0, zero, 3, 2.0).unwrap();
        zimp.f.scale = 0.0;
        let zt = build_one_particle(&zimp).unwrap();
        assert_eq!(build_quadratic_v(&zt, &spec).unwrap().nnz(), 0);
    }
}
