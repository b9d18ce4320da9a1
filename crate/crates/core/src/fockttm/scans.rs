//! Model builders and desk-scale scans over bath size and truncation.

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use super::engine::{FiniteModel, TtmEngine};
use super::fock::{FockBasis, FockSpec, Statistics};
use crate::error::{Error, Result};
use crate::formfactor::FormFactor;
use crate::linalg::{commutator, hermitian_eigen, op_norm, CMat};
use crate::numerics::{gauss_legendre, running_max_trend, QuadratureRule};
use crate::oneparticle::{build_one_particle, BathDiscretization, DiscretizedImpurity};
use crate::vanhove::{char_fn, IntensityMeasure};

/// Impurity plus bath, second quantized, in the Gibbs state of H₀.
pub fn impurity_model(imp: &DiscretizedImpurity, spec: &FockSpec, beta: f64) -> Result<FiniteModel> {
    let triple = build_one_particle(imp)?;
    if spec.modes != triple.dim() {
        return Err(Error::invalid("FockSpec modes must equal 1 + bath size"));
    }
    let basis = FockBasis::new(spec)?;
    let h0 = basis.second_quantize(&triple.h0)?;
    let v = basis.second_quantize(&triple.v)?;
    let omega = basis.gibbs_state(&triple.h0, beta)?;
    FiniteModel::new(h0, v, omega)
}

/// Van Hove model truncated to D bath modes at Gauss-Legendre nodes of
/// [0, bath_cutoff] and total occupation ≤ N_max.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedVanHove {
    pub f: FormFactor,
    pub beta: f64,
    pub bath_cutoff: f64,
    #[serde(default)]
    pub ir_floor: f64,
}

impl TruncatedVanHove {
    /// Bath energies and couplings g_k = √w_k f(e_k).
    pub fn bath(&self, d: usize) -> (Vec<f64>, Vec<c64>) {
        if d == 0 {
            return (Vec::new(), Vec::new());
        }
        let (e, w) = gauss_legendre(d, 0.0, self.bath_cutoff);
        let g = e.iter().zip(&w).map(|(&e, &w)| self.f.value(e) * w.sqrt()).collect();
        (e, g)
    }

    pub fn model(&self, d: usize, n_max: usize) -> Result<FiniteModel> {
        let spec = FockSpec::boson(d, n_max, self.ir_floor);
        let basis = FockBasis::new(&spec)?;
        let (e, g) = self.bath(d);
        let h_one = CMat::from_fn(d, d, |i, j| c64::new(if i == j { e[i] } else { 0.0 }, 0.0));
        let h0 = basis.second_quantize(&h_one)?;
        let v = basis.field(&g)?;
        let omega = basis.gibbs_state(&h_one, self.beta)?;
        FiniteModel::new(h0, v, omega)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentGrowthRow {
    pub d: usize,
    pub max_moment: f64,
    pub argmax_t: f64,
    /// Relative slope of the running maximum over the second half of the grid.
    pub late_trend: f64,
    pub moments: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentGrowthTable {
    pub order: u32,
    pub t_grid: Vec<f64>,
    pub rows: Vec<MomentGrowthRow>,
    /// Relative change of the maximum between the two largest D.
    pub last_rel_change: f64,
    pub strictly_increasing: bool,
}

/// Relative stabilization threshold between the two largest bath sizes.
pub const STABILIZATION_TOL: f64 = 0.2;

impl MomentGrowthTable {
    pub fn stabilized(&self) -> bool {
        self.last_rel_change <= STABILIZATION_TOL
    }
}

#[allow(clippy::too_many_arguments)]
pub fn moment_growth_scan(
    bath: &BathDiscretization,
    statistics: Statistics,
    n: u32,
    d_list: &[usize],
    beta: f64,
    t_grid: &[f64],
    n_max: usize,
    ir_floor: f64,
) -> Result<MomentGrowthTable> {
    if d_list.is_empty() || t_grid.is_empty() {
        return Err(Error::invalid("D list and time grid must be nonempty"));
    }
    let order = 2 * n + 2;
    let mut rows = Vec::with_capacity(d_list.len());
    for &d in d_list {
        let imp = bath.build(d)?;
        let spec = match statistics {
            Statistics::Fermion => FockSpec::fermion(d + 1),
            Statistics::Boson => FockSpec::boson(d + 1, n_max, ir_floor),
        };
        let model = impurity_model(&imp, &spec, beta)?;
        let engine = TtmEngine::new(&model)?;
        let moments: Vec<f64> = engine.laws(t_grid).iter().map(|l| l.moment(order)).collect();
        let (k, &max_moment) = moments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty grid");
        let half = t_grid.len() / 2;
        let late_trend = running_max_trend(t_grid, &moments, half);
        rows.push(MomentGrowthRow {
            d,
            max_moment,
            argmax_t: t_grid[k],
            late_trend,
            moments,
        });
    }
    let last_rel_change = match rows.len() {
        0 | 1 => 0.0,
        m => {
            let (a, b) = (rows[m - 2].max_moment, rows[m - 1].max_moment);
            if a == 0.0 && b == 0.0 {
                0.0
            } else {
                (b - a).abs() / a.abs().max(b.abs())
            }
        }
    };
    let strictly_increasing = rows.windows(2).all(|w| w[1].max_moment > w[0].max_moment);
    Ok(MomentGrowthTable {
        order,
        t_grid: t_grid.to_vec(),
        rows,
        last_rel_change,
        strictly_increasing,
    })
}

/// Models for the thermodynamic-limit study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum TlFamily {
    VanHove(TruncatedVanHove),
    FermionImpurity { bath: BathDiscretization, beta: f64 },
    BosonOscillator { bath: BathDiscretization, beta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TlRow {
    pub d: usize,
    pub n_max: usize,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TlReport {
    /// "exact" for the van Hove limit, "largest-truncation" otherwise.
    pub reference: String,
    pub t: f64,
    pub alpha_grid: Vec<f64>,
    /// Scan over D at the largest N_max.
    pub d_scan: Vec<TlRow>,
    /// Scan over N_max at the largest D (bosons only).
    pub n_scan: Vec<TlRow>,
    pub final_error: f64,
    pub d_non_increasing: bool,
    pub n_non_increasing: bool,
}

/// Allowed relative increase between consecutive errors.
pub const MONOTONE_SLACK: f64 = 0.1;

fn non_increasing(rows: &[TlRow]) -> bool {
    rows.windows(2)
        .all(|w| w[1].error <= (1.0 + MONOTONE_SLACK) * w[0].error + 1e-12)
}

fn sup_distance(a: &[c64], b: &[c64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[allow(clippy::too_many_arguments)]
pub fn tl_convergence(
    family: &TlFamily,
    d_list: &[usize],
    n_max_list: &[usize],
    t: f64,
    alpha_grid: &[f64],
    ir_floor: f64,
    rule: &QuadratureRule,
) -> Result<TlReport> {
    if d_list.is_empty() || alpha_grid.is_empty() {
        return Err(Error::invalid("D list and alpha grid must be nonempty"));
    }
    let d_top = *d_list.iter().max().expect("nonempty");
    let bosonic = !matches!(family, TlFamily::FermionImpurity { .. });
    if bosonic && n_max_list.is_empty() {
        return Err(Error::invalid("N_max list must be nonempty for bosons"));
    }
    let n_top = n_max_list.iter().copied().max().unwrap_or(0);

    let law_cf = |d: usize, n_max: usize| -> Result<Vec<c64>> {
        let model = match family {
            TlFamily::VanHove(vh) => TruncatedVanHove {
                ir_floor,
                ..vh.clone()
            }
            .model(d, n_max)?,
            TlFamily::FermionImpurity { bath, beta } => {
                impurity_model(&bath.build(d)?, &FockSpec::fermion(d + 1), *beta)?
            }
            TlFamily::BosonOscillator { bath, beta } => {
                impurity_model(&bath.build(d)?, &FockSpec::boson(d + 1, n_max, ir_floor), *beta)?
            }
        };
        let law = TtmEngine::new(&model)?.law(t);
        Ok(alpha_grid.iter().map(|&a| law.char_fn(a)).collect())
    };

    let (reference, ref_cf) = match family {
        TlFamily::VanHove(vh) => {
            let nu = IntensityMeasure::new(vh.f.clone(), vh.beta, t)?;
            let cf = alpha_grid
                .iter()
                .map(|&a| {
                    char_fn(&nu, a, rule)?
                        .value()
                        .ok_or_else(|| Error::Inconclusive(format!("reference characteristic function at alpha={a}")))
                })
                .collect::<Result<Vec<_>>>()?;
            ("exact".to_string(), cf)
        }
        _ => ("largest-truncation".to_string(), law_cf(d_top, n_top)?),
    };

    let mut d_sorted = d_list.to_vec();
    d_sorted.sort_unstable();
    let mut d_scan = Vec::new();
    for &d in &d_sorted {
        let err = sup_distance(&law_cf(d, n_top)?, &ref_cf);
        d_scan.push(TlRow { d, n_max: n_top, error: err });
    }
    let mut n_scan = Vec::new();
    if bosonic {
        let mut n_sorted = n_max_list.to_vec();
        n_sorted.sort_unstable();
        for &n in &n_sorted {
            let err = if n == n_top {
                d_scan.last().expect("nonempty").error
            } else {
                sup_distance(&law_cf(d_top, n)?, &ref_cf)
            };
            n_scan.push(TlRow { d: d_top, n_max: n, error: err });
        }
    }
    Ok(TlReport {
        reference,
        t,
        alpha_grid: alpha_grid.to_vec(),
        final_error: d_scan.last().expect("nonempty").error,
        d_non_increasing: non_increasing(&d_scan),
        n_non_increasing: non_increasing(&n_scan),
        d_scan,
        n_scan,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorRow {
    pub k: u32,
    /// max over the grid of ‖ad_{H₀}^k(V − τ^t(V))‖
    pub max_norm: f64,
    /// t-independent bound from ‖ad_{H₀}^j V‖, j ≤ k, and ‖V‖
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub rows: Vec<CommutatorRow>,
    pub holds: bool,
}

/// Iterated commutators of the heat operator V − e^{itH}Ve^{−itH} with H₀.
/// With δ = ad_{H₀} and ‖δ τ(X)‖ ≤ ‖δX‖ + 2‖V‖‖X‖:
///   ‖δτ(V)‖  ≤ c₁ = ‖δV‖ + 2‖V‖²
///   ‖δ²τ(V)‖ ≤ c₂ = ‖δ²V‖ + 4‖V‖‖δV‖ + 2‖V‖c₁
pub fn commutator_bound_check(model: &FiniteModel, k_max: u32, t_grid: &[f64]) -> Result<CommutatorReport> {
    if !(1..=2).contains(&k_max) {
        return Err(Error::invalid("k_max must be 1 or 2"));
    }
    let h0 = model.h0.to_dense();
    let v = model.v.to_dense();
    let h = &h0 + &v;
    let eig = hermitian_eigen(&h)?;
    let norm = |m: &CMat| op_norm(m.as_ref());
    let dv = commutator(&h0, &v);
    let ddv = commutator(&h0, &dv);
    let (nv, ndv, nddv) = (norm(&v)?, norm(&dv)?, norm(&ddv)?);
    let c1 = ndv + 2.0 * nv * nv;
    let c2 = nddv + 4.0 * nv * ndv + 2.0 * nv * c1;
    let bounds = [ndv + c1, nddv + c2];
    let mut max_norm = [0.0_f64; 2];
    for &t in t_grid {
        let u = eig.unitary(t);
        let tau = &u * &v * u.adjoint();
        let mut x = &v - &tau;
        for slot in max_norm.iter_mut().take(k_max as usize) {
            x = commutator(&h0, &x);
            *slot = slot.max(norm(&x)?);
        }
    }
    let rows: Vec<CommutatorRow> = (1..=k_max)
        .map(|k| CommutatorRow {
            k,
            max_norm: max_norm[k as usize - 1],
            bound: bounds[k as usize - 1],
        })
        .collect();
    let holds = rows.iter().all(|r| r.max_norm <= r.bound * (1.0 + 1e-10) + 1e-12);
    Ok(CommutatorReport { rows, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oneparticle::BathScheme;

    fn cutoff_bath() -> BathDiscretization {
        BathDiscretization {
            eps_o: 1.0,
            f: FormFactor::sharp_cutoff(2.0, 0.0).unwrap(),
            scheme: BathScheme::Midpoint { spacing: 0.5 },
        }
    }

    #[test]
    fn jarzynski_on_fermion_impurity() {
        let imp = cutoff_bath().build(3).unwrap();
        let model = impurity_model(&imp, &FockSpec::fermion(4), 0.9).unwrap();
        let engine = TtmEngine::new(&model).unwrap();
        for t in [0.5, 3.0, 11.0] {
            let law = engine.law(t);
            assert!((law.total_probability() - 1.0).abs() < 1e-12);
            assert!((law.exp_average(0.9) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_coupling_scan_is_zero() {
        let mut bath = cutoff_bath();
        bath.f.scale = 0.0;
        let grid = [0.0, 1.0, 2.0];
        let table = moment_growth_scan(&bath, Statistics::Fermion, 1, &[2, 3], 1.0, &grid, 0, 0.0).unwrap();
        assert!(table.rows.iter().all(|r| r.max_moment == 0.0));
        assert!(table.stabilized());
    }

    #[test]
    fn no_bath_gives_trivial_law() {
        let vh = TruncatedVanHove {
            f: FormFactor::exp_tail(1.0, 1.0).unwrap(),
            beta: 2.0,
            bath_cutoff: 5.0,
            ir_floor: 1e-3,
        };
        let law = TtmEngine::new(&vh.model(0, 4).unwrap()).unwrap().law(1.0);
        assert_eq!(law.atoms, vec![(0.0, 1.0)]);
    }

    #[test]
    fn commutator_bound_on_small_impurity() {
        let imp = cutoff_bath().build(3).unwrap();
        let model = impurity_model(&imp, &FockSpec::fermion(4), 1.0).unwrap();
        let grid: Vec<f64> = (0..40).map(|k| k as f64 * 0.5).collect();
        let rep = commutator_bound_check(&model, 2, &grid).unwrap();
        assert!(rep.holds, "{rep:?}");
    }
}
