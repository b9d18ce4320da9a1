//! Randomized invariants across modules.

use num_complex::Complex64 as c64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use heatlab::classical::{evolved_perturbation, linear_gaussian_law, HarmonicClassicalModel, LinearClassicalModel, LinearMode};
use heatlab::fockttm::{second_quantize, FiniteModel, FockBasis, FockSpec, TtmEngine};
use heatlab::formfactor::{uv_exp_integral, uv_power_integral, FormFactor};
use heatlab::linalg::{hermitian_eigen, CMat};
use heatlab::numerics::QuadratureRule;
use heatlab::stats::hill_tail_index;
use heatlab::vanhove::{char_fn, IntensityMeasure};

fn rule() -> QuadratureRule {
    QuadratureRule::default()
}

fn herm(seed: u64, n: usize, scale: f64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = CMat::from_fn(n, n, |_, _| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    CMat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * (0.5 * scale))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // |f|² ~ e^{-2p}: I_n finite iff p > n + 1/2, and monotone in n
    #[test]
    fn power_tail_reach(p in 0.8f64..4.0, n in 1u32..4) {
        prop_assume!((p - (n as f64 + 0.5)).abs() > 0.1);
        let f = FormFactor::power_tail(p, 1.0, 1.0).unwrap();
        let v = uv_power_integral(&f, n, &rule()).unwrap();
        prop_assert_eq!(v.is_convergent(), p > n as f64 + 0.5, "p={} n={} {}", p, n, v.status());
        if v.is_convergent() && n > 1 {
            prop_assert!(uv_power_integral(&f, n - 1, &rule()).unwrap().is_convergent());
        }
    }

    #[test]
    fn exp_class_implies_power_class(rate in 0.3f64..2.0, frac in 0.1f64..0.9) {
        let f = FormFactor::exp_tail(rate, 1.0).unwrap();
        let gamma = 2.0 * rate * frac;
        prop_assert!(uv_exp_integral(&f, gamma, &rule()).unwrap().is_convergent());
        for n in 1..=3 {
            prop_assert!(uv_power_integral(&f, n, &rule()).unwrap().is_convergent());
        }
    }

    #[test]
    fn detailed_balance_pointwise(beta in 0.1f64..4.0, t in 0.1f64..10.0, e in 0.01f64..5.0, cut in 1.0f64..6.0) {
        let nu = IntensityMeasure::new(FormFactor::sharp_cutoff(cut, 1.0).unwrap(), beta, t).unwrap();
        let (up, down) = (nu.density(e), nu.density(-e));
        prop_assert!((down - (-beta * e).exp() * up).abs() <= 1e-12 * up.max(1e-300));
    }

    #[test]
    fn char_fn_is_a_char_fn(beta in 0.2f64..3.0, t in 0.1f64..6.0, alpha in -4.0f64..4.0) {
        let nu = IntensityMeasure::new(FormFactor::exp_tail(1.0, 1.0).unwrap(), beta, t).unwrap();
        let z = char_fn(&nu, alpha, &rule()).unwrap().value().unwrap();
        let zm = char_fn(&nu, -alpha, &rule()).unwrap().value().unwrap();
        prop_assert!(z.norm() <= 1.0 + 1e-10);
        prop_assert!((z - zm.conj()).norm() < 1e-9);
        let one = char_fn(&nu, 0.0, &rule()).unwrap().value().unwrap();
        prop_assert!((one - 1.0).norm() < 1e-14);
    }

    // diagonal H0 keeps the Gibbs weights exact, so the identity holds to 1e-10
    #[test]
    fn ttm_law_is_normalized(seed in 0u64..10_000, n in 2usize..12, beta in 0.1f64..3.0, t in 0.0f64..20.0, dense in any::<bool>()) {
        let h0 = if dense {
            herm(seed, n, 2.0)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            CMat::from_fn(n, n, |i, j| if i == j { c64::new(rng.random_range(-4.0..4.0), 0.0) } else { c64::new(0.0, 0.0) })
        };
        let v = herm(seed + 1, n, 0.5);
        let eig = hermitian_eigen(&h0).unwrap();
        let z: f64 = eig.values.iter().map(|e| (-beta * e).exp()).sum();
        let omega = eig.apply_fn(|e| c64::new((-beta * e).exp() / z, 0.0));
        let law = TtmEngine::new(&FiniteModel::from_dense(&h0, &v, &omega).unwrap()).unwrap().law(t);
        prop_assert!((law.total_probability() - 1.0).abs() < 1e-12);
        prop_assert!(law.atoms.iter().all(|(_, p)| *p >= -1e-14));
        // a dense ω only fixes its smallest Gibbs weights to ~1e-16 absolute,
        // and e^{-βΔQ} amplifies that by up to e^{β·spread}
        let spread = eig.values[n - 1] - eig.values[0];
        let tol = if dense { 1e-10 + 1e-15 * (beta * spread).exp() } else { 1e-10 };
        let jar = law.exp_average(beta);
        prop_assert!((jar - 1.0).abs() < tol, "{} (tol {})", jar, tol);
    }

    #[test]
    fn zero_perturbation_gives_dirac(seed in 0u64..10_000, n in 2usize..10, t in 0.0f64..20.0) {
        let h0 = herm(seed, n, 1.0);
        let omega = CMat::from_fn(n, n, |i, j| if i == j { c64::new(1.0 / n as f64, 0.0) } else { c64::new(0.0, 0.0) });
        let law = TtmEngine::new(&FiniteModel::from_dense(&h0, &CMat::zeros(n, n), &omega).unwrap()).unwrap().law(t);
        prop_assert!(law.atoms.iter().all(|(x, p)| x.abs() < 1e-9 || *p < 1e-14));
    }

    #[test]
    fn second_quantization_is_linear(seed in 0u64..10_000, modes in 1usize..5, boson in any::<bool>()) {
        let spec = if boson { FockSpec::boson(modes, 3, 0.0) } else { FockSpec::fermion(modes) };
        let (a, b) = (herm(seed, modes, 1.0), herm(seed + 7, modes, 1.0));
        let sum = second_quantize(&(&a + &b), &spec).unwrap();
        let parts = second_quantize(&a, &spec).unwrap().add(&second_quantize(&b, &spec).unwrap());
        prop_assert!(sum.add(&parts.scaled(c64::new(-1.0, 0.0))).fro_norm() < 1e-12);
    }

    #[test]
    fn gibbs_state_has_unit_trace(seed in 0u64..10_000, modes in 1usize..5, beta in 0.1f64..4.0, boson in any::<bool>()) {
        let spec = if boson { FockSpec::boson(modes, 3, 1e-3) } else { FockSpec::fermion(modes) };
        let h = herm(seed, modes, 1.0);
        let shift = hermitian_eigen(&h).unwrap().values[0].min(0.0);
        // positive one-particle energies for bosons
        let h = CMat::from_fn(modes, modes, |i, j| h[(i, j)] - if i == j { c64::new(shift - 0.1, 0.0) } else { c64::new(0.0, 0.0) });
        let rho = FockBasis::new(&spec).unwrap().gibbs_state(&h, beta).unwrap();
        prop_assert!((rho.trace() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn harmonic_flow_conserves_energy(seed in 0u64..10_000, modes in 1usize..4, t in -5.0f64..5.0) {
        let m = HarmonicClassicalModel::random(seed, modes, 0.4).unwrap();
        let n = m.dim();
        // v_t + (flow)ᵀ flow = v + 1, so (v - v_t) = flowᵀ flow - 1
        let vt = evolved_perturbation(&m, t).unwrap();
        let l = m.generator().unwrap();
        let flow = heatlab::linalg::expm(&faer::Mat::from_fn(n, n, |i, j| t * l[(i, j)]));
        let lhs = flow.transpose() * &flow;
        for i in 0..n {
            for j in 0..n {
                let want = m.v[i][j] + if i == j { 1.0 } else { 0.0 } - vt[(i, j)];
                prop_assert!((lhs[(i, j)] - want).abs() < 1e-9, "{} vs {}", lhs[(i, j)], want);
            }
        }
    }

    #[test]
    fn linear_variance_is_time_symmetric(w in 0.3f64..3.0, fp in -1.0f64..1.0, fq in -1.0f64..1.0, c in 0.1f64..2.0, t in 0.0f64..10.0) {
        let m = LinearClassicalModel { modes: vec![LinearMode { freq: w, f_pi: fp, f_phi: fq, cov: c }] };
        let a = linear_gaussian_law(&m, t).unwrap().variance;
        let b = linear_gaussian_law(&m, -t).unwrap().variance;
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }

    // exact Pareto quantiles, so the only error is the estimator's bias
    #[test]
    fn hill_recovers_pareto_index(a in 0.8f64..4.0) {
        let n = 20_000;
        let xs: Vec<f64> = (1..=n).map(|i| (1.0 - (i as f64 - 0.5) / n as f64).powf(-1.0 / a)).collect();
        let h = hill_tail_index(&xs, 2000).unwrap();
        prop_assert!((h - a).abs() < 0.05 * a, "{} vs {}", h, a);
    }
}
