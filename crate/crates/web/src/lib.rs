//! Browser bindings for three heatlab operations. Every function takes a
//! form factor as JSON (same shape as the `[formfactor]` config table) and
//! returns a JSON string for the page to plot.

use heatlab::formfactor::{classify, FormFactor};
use heatlab::numerics::QuadratureRule;
use heatlab::vanhove::{char_fn, kms_defect, moments, sample, IntensityMeasure};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn parse(formfactor: &str) -> Result<FormFactor, String> {
    let f: FormFactor = serde_json::from_str(formfactor).map_err(|e| format!("form factor: {e}"))?;
    f.validate().map_err(|e| e.to_string())?;
    Ok(f)
}

fn measure(formfactor: &str, beta: f64, t: f64) -> Result<IntensityMeasure, String> {
    IntensityMeasure::new(parse(formfactor)?, beta, t).map_err(|e| e.to_string())
}

fn verdict_json(v: &impl serde::Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// ℰ_t(α) on an even α grid over [−alpha_max, alpha_max], with the first
/// four cumulants and the detailed-balance defect.
pub fn char_fn_json(formfactor: &str, beta: f64, t: f64, alpha_max: f64, points: usize) -> Result<String, String> {
    let nu = measure(formfactor, beta, t)?;
    let rule = QuadratureRule::default();
    let points = points.clamp(2, 2001);
    let mut alpha = Vec::with_capacity(points);
    let (mut re, mut im) = (Vec::new(), Vec::new());
    for k in 0..points {
        let a = -alpha_max + 2.0 * alpha_max * k as f64 / (points - 1) as f64;
        let v = char_fn(&nu, a, &rule).map_err(|e| e.to_string())?;
        let z = v.value().ok_or_else(|| format!("char fn at alpha = {a}: {}", v.status()))?;
        alpha.push(a);
        re.push(z.re);
        im.push(z.im);
    }
    let m = moments(&nu, 4, &rule).map_err(|e| e.to_string())?;
    let kms = kms_defect(&nu, &rule).ok();
    Ok(json!({
        "alpha": alpha,
        "re": re,
        "im": im,
        "cumulants": m.cumulants.iter().map(verdict_json).collect::<Vec<_>>(),
        "kms_defect": kms,
    })
    .to_string())
}

/// UV/IR regularity verdicts for n = 1..=n_max and the given γ values.
pub fn classify_json(formfactor: &str, n_max: u32, gammas: &[f64]) -> Result<String, String> {
    let f = parse(formfactor)?;
    let ns: Vec<u32> = (1..=n_max.clamp(1, 12)).collect();
    let gammas = if gammas.is_empty() { &[1.0][..] } else { gammas };
    let r = classify(&f, &ns, gammas, &QuadratureRule::default()).map_err(|e| e.to_string())?;
    Ok(verdict_json(&r).to_string())
}

/// Histogram of `n` Poisson-sampled heat values next to the analytic mean
/// and variance.
pub fn histogram_json(formfactor: &str, beta: f64, t: f64, n: usize, seed: u64, bins: usize) -> Result<String, String> {
    let nu = measure(formfactor, beta, t)?;
    let rule = QuadratureRule::default();
    let set = sample(&nu, n.clamp(1, 200_000), seed, &rule).map_err(|e| e.to_string())?;
    let bins = bins.clamp(1, 400);
    let lo = set.samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = set.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = ((hi - lo) / bins as f64).max(1e-12);
    let mut counts = vec![0usize; bins];
    for x in &set.samples {
        counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let m = moments(&nu, 2, &rule).map_err(|e| e.to_string())?;
    let k: Vec<Option<f64>> = m.cumulants.iter().map(|v| v.value()).collect();
    Ok(json!({
        "lo": lo,
        "width": width,
        "counts": counts,
        "total_mass": set.total_mass,
        "mean": k[0],
        "variance": k[1],
    })
    .to_string())
}

#[wasm_bindgen]
pub fn heat_char_fn(formfactor: &str, beta: f64, t: f64, alpha_max: f64, points: usize) -> Result<String, JsValue> {
    char_fn_json(formfactor, beta, t, alpha_max, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn classify_form_factor(formfactor: &str, n_max: u32, gammas: Vec<f64>) -> Result<String, JsValue> {
    classify_json(formfactor, n_max, &gammas).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn heat_histogram(formfactor: &str, beta: f64, t: f64, n: usize, seed: u64, bins: usize) -> Result<String, JsValue> {
    histogram_json(formfactor, beta, t, n, seed, bins).map_err(|e| JsValue::from_str(&e))
}
