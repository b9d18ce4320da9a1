//! Dense matrix helpers on top of faer: Hermitian eigendecompositions,
//! spectral functions, operator norms and the real matrix exponential.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as c64;

use crate::error::{Error, Result};

pub type CMat = Mat<c64>;
pub type RMat = Mat<f64>;

/// Eigenpairs of a Hermitian matrix, eigenvalues nondecreasing.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(m: MatRef<'_, c64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 {
            return Ok(Self {
                values: Vec::new(),
                vectors: CMat::zeros(0, 0),
            });
        }
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let values = evd.S().column_vector().iter().map(|z| z.re).collect();
        Ok(Self {
            values,
            vectors: evd.U().to_owned(),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `U diag(g(λ)) U†`.
    pub fn apply_fn(&self, g: impl Fn(f64) -> c64) -> CMat {
        let d: Vec<c64> = self.values.iter().map(|&x| g(x)).collect();
        let u = &self.vectors;
        let scaled = CMat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * d[j]);
        &scaled * u.adjoint()
    }

    /// `e^{i t A}` for the decomposed matrix `A`.
    pub fn unitary(&self, t: f64) -> CMat {
        self.apply_fn(|x| c64::from_polar(1.0, t * x))
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

pub fn hermitian_eigen(m: &CMat) -> Result<HermitianEigen> {
    HermitianEigen::new(m.as_ref())
}

/// Largest singular value.
pub fn op_norm(m: MatRef<'_, c64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let s = m
        .singular_values()
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(s.first().copied().unwrap_or(0.0))
}

pub fn fro_norm(m: MatRef<'_, c64>) -> f64 {
    m.norm_l2()
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint().to_owned()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).norm_max()
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn scale(m: &CMat, k: c64) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * k)
}

pub fn trace(m: &CMat) -> c64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn to_complex(m: &RMat) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

pub fn mat_vec(m: &CMat, v: &[c64]) -> Vec<c64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

pub fn vec_norm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn rnorm1(m: &RMat) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn raxpy(terms: &[(f64, &RMat)], n: usize) -> RMat {
    RMat::from_fn(n, n, |i, j| terms.iter().map(|(c, m)| c * m[(i, j)]).sum())
}

/// Matrix exponential of a real square matrix (scaling and squaring with
/// the degree-13 Padé approximant).
pub fn expm(a: &RMat) -> RMat {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    if n == 0 {
        return RMat::zeros(0, 0);
    }
    let norm = rnorm1(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let factor = 0.5_f64.powi(s);
    let a = RMat::from_fn(n, n, |i, j| a[(i, j)] * factor);
    let id = RMat::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = raxpy(&[(B[13], &a6), (B[11], &a4), (B[9], &a2)], n);
    let outer_u = raxpy(&[(B[7], &a6), (B[5], &a4), (B[3], &a2), (B[1], &id)], n);
    let u = &a * (&a6 * &inner_u + &outer_u);

    let inner_v = raxpy(&[(B[12], &a6), (B[10], &a4), (B[8], &a2)], n);
    let outer_v = raxpy(&[(B[6], &a6), (B[4], &a4), (B[2], &a2), (B[0], &id)], n);
    let v = &a6 * &inner_v + &outer_v;

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Eigenpairs of a real symmetric matrix, eigenvalues nondecreasing.
pub fn sym_eigen(m: &RMat) -> Result<(Vec<f64>, RMat)> {
    if m.nrows() == 0 {
        return Ok((Vec::new(), RMat::zeros(0, 0)));
    }
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let vals = evd.S().column_vector().iter().copied().collect();
    Ok((vals, evd.U().to_owned()))
}

/// `U diag(g(λ)) Uᵀ` for a real symmetric matrix.
pub fn sym_apply(m: &RMat, g: impl Fn(f64) -> f64) -> Result<RMat> {
    let (vals, u) = sym_eigen(m)?;
    let d: Vec<f64> = vals.iter().map(|&x| g(x)).collect();
    let scaled = RMat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * d[j]);
    Ok(&scaled * u.transpose())
}

pub fn rop_norm(m: &RMat) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let s = m
        .as_ref()
        .singular_values()
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(s.first().copied().unwrap_or(0.0))
}

pub fn rinverse(m: &RMat) -> RMat {
    let n = m.nrows();
    m.partial_piv_lu().solve(RMat::identity(n, n))
}
