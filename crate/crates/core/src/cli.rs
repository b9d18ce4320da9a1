//! Subcommand drivers behind the `heatlab` binary. Each run reads an
//! [`ExperimentConfig`], computes, and writes its CSV/JSON outputs once at
//! the end. Reports embed the resolved configuration, its SHA-256, the
//! library version and the quadrature tolerances.

use num_complex::Complex64 as c64;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::classical::{harmonic_law, harmonic_uniform_check, linear_exp_moment, linear_gaussian_law};
use crate::config::{ExperimentConfig, MatrixSpec, ModelKind};
use crate::error::{Error, Result};
use crate::fockttm::{
    commutator_bound_check, impurity_model, moment_growth_scan, tl_convergence, FiniteModel, FockSpec, Statistics,
    TlFamily, TruncatedVanHove, TtmEngine,
};
use crate::linalg::{hermitian_eigen, trace, CMat};
use crate::numerics::{IntegralVerdict, QuadratureRule, Verdict};
use crate::oneparticle::{build_one_particle, lemma51_defect, lemma52_scan, lemma54_infimum, lemma55_check, Occupation};
use crate::stats::{default_e_grid, markov_curve, tail_report, BoundMode};
use crate::vanhove::{
    char_fn, empirical_char_fn, equivalence_scan_exp, equivalence_scan_moments, kms_defect, moments, sample,
    IntensityMeasure,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Vanhove,
    Classical,
    Ttm,
    FermionImpurity,
    BosonOscillator,
    VanhoveTruncated,
    TlConvergence,
    Tails,
    Lemmas,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Vanhove => "vanhove",
            Command::Classical => "classical",
            Command::Ttm => "ttm",
            Command::FermionImpurity => "fermion-impurity",
            Command::BosonOscillator => "boson-oscillator",
            Command::VanhoveTruncated => "vanhove-truncated",
            Command::TlConvergence => "tl-convergence",
            Command::Tails => "tails",
            Command::Lemmas => "lemmas",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Process exit status for an error: 2 for configuration and argument
/// problems, 3 for exceeded Fock-space caps, 4 for inconclusive
/// quadrature, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidArgument(_) => 2,
        Error::CapExceeded { .. } => 3,
        Error::Inconclusive(_) => 4,
        _ => 1,
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    heatlab_version: &'static str,
    command: &'static str,
    config_sha256: &'a str,
    config: &'a ExperimentConfig,
    tolerances: &'a QuadratureRule,
    results: T,
}

struct Ctx {
    cmd: Command,
    cfg: ExperimentConfig,
    hash: String,
    out: PathBuf,
    files: Vec<(PathBuf, String)>,
    inconclusive: Vec<String>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let bytes = serde_json::to_vec(cfg).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

impl Ctx {
    fn report<T: Serialize>(&mut self, name: &str, results: T) -> Result<()> {
        let r = Report {
            heatlab_version: VERSION,
            command: self.cmd.name(),
            config_sha256: &self.hash,
            config: &self.cfg,
            tolerances: &self.cfg.tolerances,
            results,
        };
        let mut text = serde_json::to_string_pretty(&r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        text.push('\n');
        self.files.push((self.out.join(name), text));
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = String>) {
        let mut text = format!("# heatlab {VERSION} {} config-sha256: {}\n{header}\n", self.cmd.name(), self.hash);
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        self.files.push((self.out.join(name), text));
    }

    fn require<T>(&mut self, label: &str, v: &Verdict<T>) {
        if let Verdict::Inconclusive { reason } = v {
            self.inconclusive.push(format!("{label}: {reason}"));
        }
    }
}

/// Runs a subcommand and returns the written files. Outputs are written
/// even when a required verdict is inconclusive; the run then fails with
/// [`Error::Inconclusive`].
pub fn run(cmd: Command, mut cfg: ExperimentConfig, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(o) = &opts.out {
        cfg.output.dir = o.clone();
    }
    let hash = config_hash(&cfg)?;
    let mut ctx = Ctx {
        cmd,
        out: cfg.output.dir.clone(),
        cfg,
        hash,
        files: Vec::new(),
        inconclusive: Vec::new(),
    };
    match cmd {
        Command::Vanhove => run_vanhove(&mut ctx)?,
        Command::Classical => run_classical(&mut ctx)?,
        Command::Ttm => run_ttm(&mut ctx)?,
        Command::FermionImpurity => run_impurity(&mut ctx, Statistics::Fermion)?,
        Command::BosonOscillator => run_impurity(&mut ctx, Statistics::Boson)?,
        Command::VanhoveTruncated => run_truncated(&mut ctx)?,
        Command::TlConvergence => run_tl(&mut ctx)?,
        Command::Tails => run_tails(&mut ctx)?,
        Command::Lemmas => run_lemmas(&mut ctx)?,
    }
    std::fs::create_dir_all(&ctx.out)?;
    let mut written = Vec::new();
    for (path, text) in &ctx.files {
        std::fs::write(path, text)?;
        written.push(path.clone());
    }
    if !ctx.inconclusive.is_empty() {
        return Err(Error::Inconclusive(ctx.inconclusive.join("; ")));
    }
    Ok(written)
}

#[derive(Serialize)]
struct NamedVerdict {
    name: String,
    verdict: IntegralVerdict,
}

#[derive(Serialize)]
struct SampleSummary {
    n: usize,
    seed: u64,
    total_mass: f64,
    truncated_mass: f64,
    cells: usize,
    file: String,
}

#[derive(Serialize)]
struct VanHoveResults {
    t: f64,
    beta: f64,
    regime: crate::vanhove::Regime,
    total_mass: IntegralVerdict,
    kms_defect: Option<f64>,
    cumulants: Vec<NamedVerdict>,
    moments: Option<Vec<f64>>,
    equivalence: Vec<crate::vanhove::EquivalenceReport>,
    samples: Option<SampleSummary>,
}

fn run_vanhove(ctx: &mut Ctx) -> Result<()> {
    ctx.cfg.model_in(ModelKind::Vanhove, &[ModelKind::Vanhove])?;
    let cfg = ctx.cfg.clone();
    let sec = cfg.section(&cfg.vanhove, "vanhove")?;
    let rule = &cfg.tolerances;
    let beta = cfg.beta()?;
    let f = cfg.formfactor()?.clone();
    let nu = IntensityMeasure::new(f.clone(), beta, sec.t).map_err(|e| Error::config("vanhove", e.to_string()))?;

    let total_mass = nu.total_mass(rule)?;
    let kms = match kms_defect(&nu, rule) {
        Ok(v) => Some(v),
        Err(Error::Inconclusive(r)) => {
            ctx.inconclusive.push(format!("detailed balance: {r}"));
            None
        }
        Err(e) => return Err(e),
    };
    let mom = moments(&nu, sec.cumulant_orders, rule)?;
    ctx.csv(
        "vanhove_cumulants.csv",
        "t,m,kappa_m,status",
        mom.cumulants.iter().enumerate().map(|(k, v)| {
            format!("{},{},{},{}", sec.t, k + 1, v.value().unwrap_or(f64::NAN), v.status())
        }),
    );
    let cumulants = mom
        .cumulants
        .iter()
        .enumerate()
        .map(|(k, v)| NamedVerdict {
            name: format!("kappa_{}", k + 1),
            verdict: v.clone(),
        })
        .collect();

    let mut equivalence = Vec::new();
    if !sec.moment_n.is_empty() || !sec.gammas.is_empty() {
        let grid = cfg.t_grid()?;
        let w = sec.window.ok_or_else(|| Error::config("vanhove.window", "required for equivalence scans"))?;
        for &n in &sec.moment_n {
            equivalence.push(equivalence_scan_moments(&f, beta, n, &grid, (w[0], w[1]), rule)?);
        }
        for &g in &sec.gammas {
            equivalence.push(equivalence_scan_exp(&f, beta, g, &grid, (w[0], w[1]), rule)?);
        }
        for r in &equivalence {
            for (part, v) in [("sup", &r.sup_over_grid), ("window", &r.window_integral), ("formfactor", &r.form_factor)] {
                ctx.require(&format!("{} {part}", r.label), v);
            }
        }
    }

    let mut samples = None;
    let mut drawn = Vec::new();
    if sec.samples > 0 {
        let set = sample(&nu, sec.samples, cfg.seed, rule)?;
        ctx.csv("vanhove_samples.csv", "delta_q", set.samples.iter().map(|x| format!("{x}")));
        samples = Some(SampleSummary {
            n: set.samples.len(),
            seed: cfg.seed,
            total_mass: set.total_mass,
            truncated_mass: set.truncated_mass,
            cells: set.cells,
            file: "vanhove_samples.csv".into(),
        });
        drawn = set.samples;
    }

    if let Some(grid) = &cfg.alpha_grid {
        let alphas = grid.resolve("alpha_grid")?;
        let mut rows = Vec::with_capacity(alphas.len());
        for &a in &alphas {
            let v = char_fn(&nu, a, rule)?;
            ctx.require(&format!("char_fn({a})"), &v);
            let z = v.value().unwrap_or(c64::new(f64::NAN, f64::NAN));
            if drawn.is_empty() {
                rows.push(format!("{},{a},{},{}", sec.t, z.re, z.im));
            } else {
                let e = empirical_char_fn(&drawn, a);
                rows.push(format!("{},{a},{},{},{},{}", sec.t, z.re, z.im, e.re, e.im));
            }
        }
        let header = if drawn.is_empty() { "t,alpha,re,im" } else { "t,alpha,re,im,empirical_re,empirical_im" };
        ctx.csv("vanhove_charfn.csv", header, rows);
    }
    ctx.require("total mass", &total_mass);
    let results = VanHoveResults {
        t: sec.t,
        beta,
        regime: nu.regime(rule)?,
        total_mass,
        kms_defect: kms,
        cumulants,
        moments: mom.moments,
        equivalence,
        samples,
    };
    ctx.report("vanhove_report.json", results)
}

#[derive(Serialize)]
struct LinearRow {
    t: f64,
    mean: f64,
    variance: f64,
    exp_moments: Vec<(f64, f64)>,
    mc_mean: Option<(f64, f64)>,
    mc_variance: Option<f64>,
}

#[derive(Serialize)]
struct HarmonicRow {
    t: f64,
    cumulants: Vec<f64>,
    critical_gamma: f64,
    /// (γ, 𝔼e^{γΔQ}, 𝔼e^{−γΔQ}); None where the generating function diverges
    mgf: Vec<(f64, Option<f64>, Option<f64>)>,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, v)
}

fn run_classical(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg.clone();
    let sec = cfg.section(&cfg.classical, "classical")?;
    let default = if sec.harmonic.is_some() { ModelKind::ClassicalHarmonic } else { ModelKind::ClassicalLinear };
    let kind = cfg.model_in(default, &[ModelKind::ClassicalLinear, ModelKind::ClassicalHarmonic])?;
    let grid = cfg.t_grid()?;
    match kind {
        ModelKind::ClassicalLinear => {
            let model = sec.linear.as_ref().ok_or_else(|| Error::config("classical.linear", "section required"))?;
            model.validate().map_err(|e| Error::config("classical.linear", e.to_string()))?;
            let mut rows = Vec::new();
            for (i, &t) in grid.iter().enumerate() {
                let law = linear_gaussian_law(model, t)?;
                let exp_moments = sec
                    .gammas
                    .iter()
                    .map(|&g| Ok((g, linear_exp_moment(model, g, t)?)))
                    .collect::<Result<Vec<_>>>()?;
                let (mc_mean, mc_variance) = if sec.samples > 0 {
                    let s = model.sample(t, sec.samples, cfg.seed.wrapping_add(i as u64));
                    let (m, v) = mean_var(&s);
                    (Some((m, (v / s.len() as f64).sqrt())), Some(v))
                } else {
                    (None, None)
                };
                rows.push(LinearRow {
                    t,
                    mean: law.mean,
                    variance: law.variance,
                    exp_moments,
                    mc_mean,
                    mc_variance,
                });
            }
            ctx.csv(
                "classical_linear.csv",
                "t,mean,variance",
                rows.iter().map(|r| format!("{},{},{}", r.t, r.mean, r.variance)),
            );
            ctx.report("classical_report.json", rows)
        }
        _ => {
            let model = sec.harmonic.as_ref().ok_or_else(|| Error::config("classical.harmonic", "section required"))?;
            model.validate().map_err(|e| Error::config("classical.harmonic", e.to_string()))?;
            let mut rows = Vec::new();
            for &t in &grid {
                let law = harmonic_law(model, t)?;
                let mgf = sec
                    .gammas
                    .iter()
                    .map(|&g| (g, law.mgf(g).ok(), law.mgf(-g).ok()))
                    .collect();
                rows.push(HarmonicRow {
                    t,
                    cumulants: law.cumulants(4),
                    critical_gamma: law.critical_gamma(),
                    mgf,
                });
            }
            let uniform = sec
                .gammas
                .iter()
                .map(|&g| harmonic_uniform_check(model, g, &grid))
                .collect::<Result<Vec<_>>>()?;
            ctx.csv(
                "classical_harmonic.csv",
                "t,kappa_1,kappa_2,kappa_3,kappa_4,critical_gamma",
                rows.iter().map(|r| {
                    let k = &r.cumulants;
                    format!("{},{},{},{},{},{}", r.t, k[0], k[1], k[2], k[3], r.critical_gamma)
                }),
            );
            #[derive(Serialize)]
            struct Out<A, B> {
                laws: A,
                uniform: B,
            }
            ctx.report("classical_report.json", Out { laws: rows, uniform })
        }
    }
}

fn matrix(spec: &MatrixSpec, field: &str) -> Result<CMat> {
    let n = spec.re.len();
    let square = |m: &Vec<Vec<f64>>| m.iter().all(|r| r.len() == n);
    if n == 0 || !square(&spec.re) || spec.im.as_ref().is_some_and(|m| m.len() != n || !square(m)) {
        return Err(Error::config(field, "matrix must be square and nonempty"));
    }
    Ok(CMat::from_fn(n, n, |i, j| {
        c64::new(spec.re[i][j], spec.im.as_ref().map_or(0.0, |m| m[i][j]))
    }))
}

fn dense_gibbs(h0: &CMat, beta: f64) -> Result<CMat> {
    let eig = hermitian_eigen(h0)?;
    let e0 = eig.values.first().copied().unwrap_or(0.0);
    let z: f64 = eig.values.iter().map(|e| (-beta * (e - e0)).exp()).sum();
    Ok(eig.apply_fn(|e| c64::new((-beta * (e - e0)).exp() / z, 0.0)))
}

#[derive(Serialize)]
struct TtmRow {
    t: f64,
    atoms: usize,
    total_probability: f64,
    mean: f64,
    first_law_rhs: f64,
    jarzynski: Option<f64>,
}

fn run_ttm(ctx: &mut Ctx) -> Result<()> {
    ctx.cfg.model_in(ModelKind::TtmGeneric, &[ModelKind::TtmGeneric])?;
    let cfg = ctx.cfg.clone();
    let sec = cfg.section(&cfg.ttm, "ttm")?;
    let h0 = matrix(&sec.h0, "ttm.h0")?;
    let v = matrix(&sec.v, "ttm.v")?;
    if v.nrows() != h0.nrows() {
        return Err(Error::config("ttm.v", "dimension differs from h0"));
    }
    let (omega, gibbs_beta) = match &sec.omega {
        Some(m) => (matrix(m, "ttm.omega")?, None),
        None => {
            let b = cfg.beta()?;
            (dense_gibbs(&h0, b)?, Some(b))
        }
    };
    let model = FiniteModel::from_dense(&h0, &v, &omega).map_err(|e| match e {
        Error::InvalidArgument(m) => Error::config("ttm", m),
        other => other,
    })?;
    let engine = TtmEngine::new(&model)?;
    let grid = cfg.t_grid()?;
    let laws = engine.laws(&grid);
    let h = &h0 + &v;
    let eig = hermitian_eigen(&h)?;
    let mut rows = Vec::new();
    let mut atom_rows = Vec::new();
    for (&t, law) in grid.iter().zip(&laws) {
        let u = eig.unitary(t);
        let tau = &u * &v * u.adjoint();
        let rhs = trace(&(&omega * (&v - &tau))).re;
        rows.push(TtmRow {
            t,
            atoms: law.atoms.len(),
            total_probability: law.total_probability(),
            mean: law.mean(),
            first_law_rhs: rhs,
            jarzynski: gibbs_beta.map(|b| law.exp_average(b)),
        });
        atom_rows.extend(law.atoms.iter().map(|(x, p)| format!("{t},{x},{p}")));
    }
    ctx.csv("ttm_atoms.csv", "t,delta_q,p", atom_rows);
    ctx.report("ttm_report.json", rows)
}

fn run_impurity(ctx: &mut Ctx, stats: Statistics) -> Result<()> {
    let kind = match stats {
        Statistics::Fermion => ModelKind::FermionImpurity,
        Statistics::Boson => ModelKind::BosonOscillator,
    };
    ctx.cfg.model_in(kind, &[kind])?;
    let cfg = ctx.cfg.clone();
    let bath = cfg.bath()?;
    let n = cfg.section(&cfg.impurity, "impurity")?.n;
    let (n_max, delta) = match stats {
        Statistics::Fermion => (0, 0.0),
        Statistics::Boson => (cfg.n_max()?, cfg.delta),
    };
    let grid = cfg.t_grid()?;
    let table = moment_growth_scan(&bath, stats, n, cfg.d_list()?, cfg.beta()?, &grid, n_max, delta)?;
    let name = ctx.cmd.name().replace('-', "_");
    let mut rows = Vec::new();
    for r in &table.rows {
        rows.extend(r.moments.iter().zip(&grid).map(|(m, t)| format!("{},{t},{m}", r.d)));
    }
    ctx.csv(&format!("{name}_moments.csv"), &format!("d,t,moment_{}", table.order), rows);
    let mut commutators = Vec::new();
    if stats == Statistics::Fermion {
        for &d in cfg.d_list()? {
            // dense singular values; keep to small Fock spaces
            if d + 1 <= 8 {
                let model = impurity_model(&bath.build(d)?, &FockSpec::fermion(d + 1), cfg.beta()?)?;
                commutators.push((d, commutator_bound_check(&model, 2, &grid)?));
            }
        }
    }
    #[derive(Serialize)]
    struct Out<A, B> {
        table: A,
        stabilized: bool,
        commutator_bounds: B,
    }
    let stabilized = table.stabilized();
    ctx.report(
        &format!("{name}_report.json"),
        Out {
            table,
            stabilized,
            commutator_bounds: commutators,
        },
    )
}

fn vanhove_family(cfg: &ExperimentConfig) -> Result<TruncatedVanHove> {
    let sec = cfg.section(&cfg.truncated, "truncated")?;
    Ok(TruncatedVanHove {
        f: cfg.formfactor()?.clone(),
        beta: cfg.beta()?,
        bath_cutoff: sec.bath_cutoff,
        ir_floor: cfg.delta,
    })
}

fn run_truncated(ctx: &mut Ctx) -> Result<()> {
    ctx.cfg.model_in(ModelKind::Vanhove, &[ModelKind::Vanhove])?;
    let cfg = ctx.cfg.clone();
    let fam = vanhove_family(&cfg)?;
    let d = *cfg.d_list()?.iter().max().expect("nonempty");
    let n_max = cfg.n_max()?;
    let t = cfg.t()?;
    let law = TtmEngine::new(&fam.model(d, n_max)?)?.law(t);
    let nu = IntensityMeasure::new(fam.f.clone(), fam.beta, t)?;
    let alphas = cfg.alpha_grid()?;
    let mut rows = Vec::new();
    let mut sup_err: f64 = 0.0;
    for &a in &alphas {
        let v = char_fn(&nu, a, &cfg.tolerances)?;
        ctx.require(&format!("char_fn({a})"), &v);
        let exact = v.value().unwrap_or(c64::new(f64::NAN, f64::NAN));
        let z = law.char_fn(a);
        sup_err = sup_err.max((z - exact).norm());
        rows.push(format!("{a},{},{},{},{}", z.re, z.im, exact.re, exact.im));
    }
    ctx.csv("vanhove_truncated_atoms.csv", "delta_q,p", law.atoms.iter().map(|(x, p)| format!("{x},{p}")));
    ctx.csv("vanhove_truncated_charfn.csv", "alpha,truncated_re,truncated_im,exact_re,exact_im", rows);
    #[derive(Serialize)]
    struct Out {
        d: usize,
        n_max: usize,
        t: f64,
        atoms: usize,
        total_probability: f64,
        sup_char_fn_error: f64,
    }
    ctx.report(
        "vanhove_truncated_report.json",
        Out {
            d,
            n_max,
            t,
            atoms: law.atoms.len(),
            total_probability: law.total_probability(),
            sup_char_fn_error: sup_err,
        },
    )
}

fn run_tl(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg.clone();
    let kind = cfg.model_in(
        ModelKind::Vanhove,
        &[ModelKind::Vanhove, ModelKind::FermionImpurity, ModelKind::BosonOscillator],
    )?;
    let family = match kind {
        ModelKind::Vanhove => TlFamily::VanHove(vanhove_family(&cfg)?),
        ModelKind::FermionImpurity => TlFamily::FermionImpurity {
            bath: cfg.bath()?,
            beta: cfg.beta()?,
        },
        _ => TlFamily::BosonOscillator {
            bath: cfg.bath()?,
            beta: cfg.beta()?,
        },
    };
    let n_list = if kind == ModelKind::FermionImpurity { Vec::new() } else { cfg.n_max_list()? };
    let rep = tl_convergence(
        &family,
        cfg.d_list()?,
        &n_list,
        cfg.t()?,
        &cfg.alpha_grid()?,
        cfg.delta,
        &cfg.tolerances,
    )?;
    let rows = rep
        .d_scan
        .iter()
        .map(|r| format!("d,{},{},{}", r.d, r.n_max, r.error))
        .chain(rep.n_scan.iter().map(|r| format!("n_max,{},{},{}", r.d, r.n_max, r.error)))
        .collect::<Vec<_>>();
    ctx.csv("tl_convergence.csv", "scan,d,n_max,error", rows);
    ctx.report("tl_convergence.json", rep)
}

/// Reads a one-column sample CSV, skipping `#` comments and the header.
pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::config("tails.samples", format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "delta_q" {
            continue;
        }
        out.push(
            line.parse::<f64>()
                .map_err(|_| Error::config("tails.samples", format!("line {}: not a number", i + 1)))?,
        );
    }
    Ok(out)
}

fn run_tails(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg.clone();
    let sec = cfg.section(&cfg.tails, "tails")?;
    let samples = read_samples(&sec.samples)?;
    let grid = default_e_grid(&samples, sec.e_points);
    let report = tail_report(&samples, sec.k, sec.n, &grid)?;
    let exp_curve = match sec.gamma {
        Some(g) => Some(markov_curve(&samples, BoundMode::Exponential { gamma: g }, &grid, None)?),
        None => None,
    };
    #[derive(Serialize)]
    struct Out<A, B> {
        samples: usize,
        report: A,
        exponential_curve: B,
    }
    ctx.report(
        "tails_report.json",
        Out {
            samples: samples.len(),
            report,
            exponential_curve: exp_curve,
        },
    )
}

#[derive(Serialize)]
#[serde(untagged)]
enum Outcome<T> {
    Ok(T),
    Err { error: String },
}

fn outcome<T>(r: Result<T>) -> Result<Outcome<T>> {
    match r {
        Ok(v) => Ok(Outcome::Ok(v)),
        Err(e @ (Error::EigenvectorInput { .. } | Error::DegenerateCoupling { .. })) => Ok(Outcome::Err { error: e.to_string() }),
        Err(e) => Err(e),
    }
}

fn run_lemmas(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg.clone();
    cfg.model_in(ModelKind::FermionImpurity, &[ModelKind::FermionImpurity, ModelKind::BosonOscillator])?;
    let sec = cfg.section(&cfg.lemmas, "lemmas")?;
    let triple = build_one_particle(&cfg.bath()?.build(sec.d)?)?;
    let grid = cfg.t_grid()?;
    let dim = triple.dim();
    let phi: Vec<c64> = vec![c64::new(1.0 / (dim as f64).sqrt(), 0.0); dim];
    let occupation = Occupation::FermiDirac { beta: cfg.beta()? };
    let e_grid = sec.e_grid.resolve("lemmas.e_grid")?;
    #[derive(Serialize)]
    struct Out<A, B, C, D> {
        lemma51: A,
        lemma52: B,
        lemma54: C,
        lemma55: D,
    }
    let out = Out {
        lemma51: lemma51_defect(&triple, sec.n, &grid)?,
        lemma52: lemma52_scan(&triple, &phi, sec.alpha, &grid)?,
        lemma54: outcome(lemma54_infimum(&triple, occupation, &phi, (sec.window[0], sec.window[1]), &e_grid))?,
        lemma55: outcome(lemma55_check(&triple, &phi, &grid))?,
    };
    ctx.report("lemmas_report.json", out)
}
