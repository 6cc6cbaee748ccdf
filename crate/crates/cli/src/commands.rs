use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use noisy_interp::analysis::{
    count_nfij, first_positive_d, nfij_bound, predictor_curve, IntervalPair, Modulus, PredictorInput,
};
use noisy_interp::attacks::{
    approximate_recover, recover_coefficients, GridSpec, InterpolationInstance, RecoveryResult,
};
use noisy_interp::exceptional::{
    construct_flat, construct_oscillating, random_oscillating, FlatSpec, OscillatingSpec, REFERENCE_PRIME,
};
use noisy_interp::fpcore::{FpPolynomial, PrimeContext};
use noisy_interp::lattice::CvpConfig;
use noisy_interp::observe::{
    read_observations_csv, sample_points, sample_points_in, seeded_rng, write_observations_csv, NoiseModel,
};

use crate::config::{config, parse_kv, CliError, CliResult, Settings};

/// What a command produced: CSV rows, a JSON summary, and whether the
/// result is a (valid) negative one.
pub struct Report {
    pub csv: Option<String>,
    pub summary: Value,
    pub negative: bool,
}

impl Report {
    fn new(csv: String, summary: Value) -> Self {
        Self { csv: Some(csv), summary, negative: false }
    }
}

/// Offsets that split one seed into independent streams.
const PRIME_STREAM: u64 = 0x9e37_79b9;
const POINT_STREAM: u64 = 0x85eb_ca6b;
const NOISE_STREAM: u64 = 0xc2b2_ae35;
const GRID_STREAM: u64 = 0x27d4_eb2f;

fn trial_seed(seed: u64, trial: u64) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(trial)
}

fn csv_with_header(s: &Settings, header: &str) -> String {
    format!("{}\n{header}\n", s.config_line())
}

/// `prime` if given, otherwise a random prime of `prime-bits` bits drawn
/// from `seed`.
fn prime(s: &Settings, seed: u64, default_bits: u64) -> CliResult<PrimeContext> {
    if let Some(p) = s.opt::<BigInt>("prime")? {
        return Ok(PrimeContext::new(p)?);
    }
    let bits = s.get("prime-bits", default_bits)?;
    Ok(PrimeContext::random(bits, &mut seeded_rng(seed ^ PRIME_STREAM))?)
}

/// `delta` if given, otherwise `floor(p / 2^delta-exp)`.
fn delta(s: &Settings, ctx: &PrimeContext, default_exp: Option<u32>) -> CliResult<BigInt> {
    let d = match (s.opt::<BigInt>("delta")?, s.opt::<u32>("delta-exp")?) {
        (Some(_), Some(_)) => return Err(config("give delta or delta-exp, not both")),
        (Some(d), None) => d,
        (None, Some(e)) => ctx.p() >> e,
        (None, None) => match default_exp {
            Some(e) => {
                s.record("delta-exp", &e);
                ctx.p() >> e
            }
            None => return Err(config("delta or delta-exp is required")),
        },
    };
    if d.is_negative() || &d >= ctx.p() {
        return Err(config(format!("delta = {d} must lie in [0, p)")));
    }
    Ok(d)
}

fn noise(s: &Settings) -> CliResult<NoiseModel> {
    match s.get("noise", "uniform".to_string())?.as_str() {
        "uniform" => Ok(NoiseModel::Uniform),
        "extremal" => Ok(NoiseModel::Extremal),
        "exact" => Ok(NoiseModel::Exact),
        other => Err(config(format!("unknown noise model {other:?}"))),
    }
}

fn positive_h(s: &Settings, default: i64) -> CliResult<i64> {
    let h = s.get("h", default)?;
    if h <= 0 {
        return Err(config(format!("h = {h} must be positive")));
    }
    Ok(h)
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Wilson score interval at 95%.
pub fn wilson(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let (n, z) = (trials as f64, 1.96f64);
    let ph = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (ph + z * z / (2.0 * n)) / denom;
    let half = z * (ph * (1.0 - ph) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

struct ExactParams {
    ctx: PrimeContext,
    n: usize,
    k: usize,
    h: i64,
    delta: BigInt,
    d: usize,
    noise: NoiseModel,
}

fn exact_params(s: &Settings, seed: u64) -> CliResult<ExactParams> {
    let n = s.get("n", 3usize)?;
    let k = s.get("k", 1usize)?;
    let h = positive_h(s, 1 << 20)?;
    let ctx = prime(s, seed, 64)?;
    let delta = if s.has("delta") || s.has("delta-exp") { delta(s, &ctx, None)? } else { s.get("delta", BigInt::from(1024))? };
    let d = s.get("d", 12usize)?;
    if k > n || d < n + 1 - k {
        return Err(config(format!("need k <= n and d >= n - k + 1 (n = {n}, k = {k}, d = {d})")));
    }
    Ok(ExactParams { ctx, n, k, h, delta, d, noise: noise(s)? })
}

fn random_instance(pp: &ExactParams, seed: u64) -> CliResult<(FpPolynomial, InterpolationInstance)> {
    let mut rng = seeded_rng(seed);
    let f = FpPolynomial::random(pp.ctx.clone(), pp.n, pp.k, &mut rng);
    let points = sample_points(pp.h, pp.d, seed ^ POINT_STREAM)?;
    let inst = InterpolationInstance::from_polynomial(&f, pp.h, &pp.delta, points, pp.noise, seed ^ NOISE_STREAM)?;
    Ok((f, inst))
}

pub fn gen(s: &Settings) -> CliResult<Report> {
    let seed = s.get("seed", 0u64)?;
    let pp = exact_params(s, seed)?;
    s.record("prime", pp.ctx.p());
    s.record("delta", &pp.delta);
    let out = PathBuf::from(s.get("out", "instance".to_string())?);
    let (f, inst) = random_instance(&pp, seed)?;
    let mut cfg = String::new();
    for (key, val) in [
        ("prime", pp.ctx.p().to_string()),
        ("n", pp.n.to_string()),
        ("k", pp.k.to_string()),
        ("h", pp.h.to_string()),
        ("delta", pp.delta.to_string()),
        ("seed", seed.to_string()),
    ] {
        writeln!(cfg, "{key} = {val}").unwrap();
    }
    let mut obs = format!("{}\n", s.config_line()).into_bytes();
    write_observations_csv(&inst.noisy_observations(), &mut obs)?;
    write_file(&out.join("instance.cfg"), &cfg)?;
    write_file(&out.join("poly.txt"), &f.to_text())?;
    write_file(&out.join("observations.csv"), &String::from_utf8(obs).unwrap())?;
    Ok(Report {
        csv: None,
        summary: json!({ "command": "gen", "out": out.display().to_string(), "d": pp.d, "bits": pp.ctx.bits() }),
        negative: false,
    })
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load_instance(dir: &Path) -> CliResult<(InterpolationInstance, Option<FpPolynomial>)> {
    let cfg_path = dir.join("instance.cfg");
    let kv = parse_kv(&read(&cfg_path)?, &cfg_path.display().to_string())?;
    let field = |key: &str| -> CliResult<&String> {
        kv.get(key).ok_or_else(|| config(format!("{}: missing {key}", cfg_path.display())))
    };
    let num = |key: &str| -> CliResult<BigInt> {
        field(key)?.parse().map_err(|e| config(format!("{}: {key}: {e}", cfg_path.display())))
    };
    let ctx = PrimeContext::new(num("prime")?)?;
    let small = |key: &str| -> CliResult<i64> {
        num(key)?.to_i64().ok_or_else(|| config(format!("{key} out of range")))
    };
    let (n, k, h, delta) = (small("n")? as usize, small("k")? as usize, small("h")?, num("delta")?);
    let obs_path = dir.join("observations.csv");
    let obs = read_observations_csv(read(&obs_path)?.as_bytes())?;
    let truth = match dir.join("poly.txt") {
        p if p.exists() => {
            let f = FpPolynomial::from_text(&read(&p)?)?;
            Some(FpPolynomial::new(f.ctx().clone(), f.coeffs().to_vec(), k)?)
        }
        _ => None,
    };
    if let Some(f) = &truth {
        if f.ctx() != &ctx {
            return Err(config("poly.txt and instance.cfg disagree on p"));
        }
        if let Some(o) = obs.iter().find(|o| !o.is_consistent_with(f)) {
            return Err(config(format!("observation at t = {} is farther than delta from f(t)", o.t)));
        }
    }
    let points = obs.iter().map(|o| o.t).collect();
    let us = obs.into_iter().map(|o| o.u).collect();
    Ok((InterpolationInstance::new(ctx, n, k, h, delta, points, us)?, truth))
}

fn recovery_json(r: &RecoveryResult, truth: Option<&FpPolynomial>) -> Value {
    json!({
        "recovered": r.candidate.is_some(),
        "verified": r.verified,
        "exact_cvp": r.exact_cvp,
        "cvp_sq_distance": r.cvp_sq_distance.to_string(),
        "coefficients": r.coefficients().map(|c| c.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
        "matches_truth": truth.map(|f| r.recovers(f)),
        "failure": r.failure.map(|f| format!("{f:?}")),
    })
}

pub fn attack(s: &Settings) -> CliResult<Report> {
    if let Some(dir) = s.opt::<PathBuf>("instance")? {
        let (inst, truth) = load_instance(&dir)?;
        let r = recover_coefficients(&inst)?;
        let ok = r.candidate.is_some() && truth.as_ref().map_or(true, |f| r.recovers(f));
        let mut summary = recovery_json(&r, truth.as_ref());
        summary["command"] = json!("attack");
        return Ok(Report { csv: None, summary, negative: !ok });
    }
    let seed = s.get("seed", 0u64)?;
    let trials = s.get("trials", 100u64)?;
    let pp = exact_params(s, seed)?;
    s.record("prime", pp.ctx.p());
    s.record("delta", &pp.delta);
    let rows: Vec<(u64, bool, bool, bool, String)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (f, inst) = random_instance(&pp, trial_seed(seed, t))?;
            let r = recover_coefficients(&inst)?;
            Ok((t, r.recovers(&f), r.verified, r.exact_cvp, r.cvp_sq_distance.to_string()))
        })
        .collect::<CliResult<_>>()?;
    let mut csv = csv_with_header(s, "trial,recovered,verified,exact_cvp,cvp_sq_distance");
    for (t, ok, ver, ex, dist) in &rows {
        writeln!(csv, "{t},{ok},{ver},{ex},{dist}").unwrap();
    }
    let successes = rows.iter().filter(|r| r.1).count() as u64;
    let (lo, hi) = wilson(successes, trials);
    let rate = successes as f64 / trials.max(1) as f64;
    Ok(Report {
        csv: Some(csv),
        summary: json!({
            "command": "attack", "trials": trials, "successes": successes,
            "success_rate": rate, "wilson_95": [lo, hi],
        }),
        negative: rate < 0.5,
    })
}

struct ApproxParams {
    n: usize,
    h: i64,
    bits: u64,
    delta_exp: u32,
    grid: usize,
    noise: NoiseModel,
}

fn approx_params(s: &Settings) -> CliResult<ApproxParams> {
    let n = s.get("n", 5usize)?;
    let h = positive_h(s, 1 << 15)?;
    let bits = s.get("prime-bits", 112u64)?;
    let delta_exp = s.get("delta-exp", 17u32)?;
    let grid = s.get("grid", 1024usize)?;
    if grid == 0 {
        return Err(config("grid must be positive"));
    }
    Ok(ApproxParams { n, h, bits, delta_exp, grid, noise: noise(s)? })
}

struct ApproxTrial {
    profile: Vec<(i64, f64)>,
    success: f64,
    exact_cvp: bool,
}

/// One approximate-recovery trial on the window `[0, 2h)`, with a fresh
/// prime, polynomial and point set derived from `seed`.
fn approx_trial(ap: &ApproxParams, d: usize, seed: u64) -> CliResult<ApproxTrial> {
    let ctx = PrimeContext::random(ap.bits, &mut seeded_rng(seed ^ PRIME_STREAM))?;
    let delta = ctx.p() >> ap.delta_exp;
    let f = FpPolynomial::random(ctx, ap.n, 0, &mut seeded_rng(seed));
    let hi = 2 * ap.h - 1;
    let points = sample_points_in(0, hi, d, seed ^ POINT_STREAM)?;
    let inst = InterpolationInstance::from_polynomial(&f, hi, &delta, points, ap.noise, seed ^ NOISE_STREAM)?;
    let grid = GridSpec::window(0, hi, ap.grid, seed ^ GRID_STREAM);
    let r = approximate_recover(&inst, &f, &grid, &CvpConfig::default())?;
    Ok(ApproxTrial { profile: r.error_profile, success: r.success_fraction, exact_cvp: r.exact_cvp })
}

pub fn approx(s: &Settings) -> CliResult<Report> {
    let ap = approx_params(s)?;
    let d = s.get("d", 23usize)?;
    if d < ap.n + 1 {
        return Err(config(format!("d = {d} must be at least n + 1")));
    }
    let seed = s.get("seed", 0u64)?;
    let trials = s.get("trials", 1u64)?;
    let results: Vec<ApproxTrial> = (0..trials)
        .into_par_iter()
        .map(|t| approx_trial(&ap, d, trial_seed(seed, t)))
        .collect::<CliResult<_>>()?;
    let width = (2 * ap.h) as f64;
    let mut csv = csv_with_header(s, "trial,t,t_over_2h,error_over_p");
    for (i, r) in results.iter().enumerate() {
        for (t, e) in &r.profile {
            writeln!(csv, "{i},{t},{},{e:e}", *t as f64 / width).unwrap();
        }
    }
    let fractions: Vec<f64> = results.iter().map(|r| r.success).collect();
    let med = median(&fractions);
    Ok(Report {
        csv: Some(csv),
        summary: json!({
            "command": "approx", "d": d, "trials": trials,
            "success_fractions": fractions, "median_success": med,
            "exact_cvp": results.iter().all(|r| r.exact_cvp),
        }),
        negative: med < 0.5,
    })
}

pub fn sweep(s: &Settings) -> CliResult<Report> {
    let ap = approx_params(s)?;
    let d_min = s.get("d-min", 20usize)?;
    let d_max = s.get("d-max", 23usize)?;
    if d_min < ap.n + 1 || d_min > d_max {
        return Err(config(format!("need n + 1 <= d-min <= d-max, got [{d_min}, {d_max}]")));
    }
    let seed = s.get("seed", 0u64)?;
    let trials = s.get("trials", 5u64)?;
    let jobs: Vec<(usize, u64)> = (d_min..=d_max).flat_map(|d| (0..trials).map(move |t| (d, t))).collect();
    let results: Vec<ApproxTrial> = jobs
        .par_iter()
        .map(|&(d, t)| approx_trial(&ap, d, trial_seed(seed, t)))
        .collect::<CliResult<_>>()?;
    let modulus = Modulus::LargeP { shift: ap.delta_exp };
    let mut csv = csv_with_header(s, "d,trial,success_fraction,exact_cvp,s_predictor");
    let mut medians = BTreeMap::new();
    for d in d_min..=d_max {
        let sval = PredictorInput::new(ap.n as u32, ap.h as u64, modulus.clone(), d as u64)
            .map(|inp| noisy_interp::analysis::predictor_s(&inp).value)
            .ok();
        let mut fr = Vec::new();
        for ((jd, t), r) in jobs.iter().zip(&results).filter(|((jd, _), _)| *jd == d) {
            let sv = sval.map_or(String::new(), |v| format!("{v:.6}"));
            writeln!(csv, "{jd},{t},{:.6},{},{sv}", r.success, r.exact_cvp).unwrap();
            fr.push(r.success);
        }
        medians.insert(d.to_string(), median(&fr));
    }
    Ok(Report::new(csv, json!({ "command": "sweep", "trials": trials, "median_success": medians })))
}

pub fn predict(s: &Settings) -> CliResult<Report> {
    let n = s.get("n", 5u32)?;
    let h = positive_h(s, 1 << 15)? as u64;
    let modulus = if s.has("prime") {
        let ctx = prime(s, 0, 0)?;
        Modulus::Concrete { delta: delta(s, &ctx, None)?, p: ctx.p().clone() }
    } else {
        Modulus::LargeP { shift: s.get("delta-exp", 17u32)? }
    };
    let (d_min, d_max) = match s.opt::<u64>("d")? {
        Some(d) => (d, d),
        None => (s.get("d-min", n as u64 + 2)?, s.get("d-max", 500u64)?),
    };
    if d_min <= n as u64 + 1 || d_min > d_max {
        return Err(config(format!("need n + 1 < d-min <= d-max, got [{d_min}, {d_max}]")));
    }
    let mut csv = csv_with_header(s, "d,s,positive,in_derivation_regime");
    let curve = predictor_curve(n, h, &modulus, d_min, d_max)?;
    for &(d, _) in &curve {
        let v = noisy_interp::analysis::predictor_s(&PredictorInput::new(n, h, modulus.clone(), d)?);
        writeln!(csv, "{d},{:.9},{},{}", v.value, v.positive, v.in_derivation_regime).unwrap();
    }
    let first = first_positive_d(n, h, &modulus, d_max)?.filter(|&d| d >= d_min);
    let peak = curve.iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|p| p.0);
    Ok(Report::new(csv, json!({ "command": "predict", "first_positive_d": first, "peak_d": peak })))
}

/// Sample of `[0, extent)` plus `must`, sorted and deduplicated.
fn sample_below(extent: &BigInt, count: usize, seed: u64, must: &[BigInt]) -> Vec<BigInt> {
    use num_bigint::RandBigInt;
    let mut rng = seeded_rng(seed);
    let mut xs: Vec<BigInt> = (0..count).map(|_| rng.gen_bigint_range(&BigInt::zero(), extent)).collect();
    xs.extend(must.iter().cloned());
    xs.sort();
    xs.dedup();
    xs
}

fn ratio(x: &BigInt, y: &BigInt) -> f64 {
    num_rational::BigRational::new(x.clone(), y.clone()).to_f64().unwrap_or(f64::NAN)
}

pub fn flat(s: &Settings) -> CliResult<Report> {
    let seed = s.get("seed", 0u64)?;
    let spec = if s.has("prime") || s.has("prime-bits") {
        let ctx = prime(s, seed, 0)?;
        let h = BigInt::from(positive_h(s, 1 << 31)?);
        let delta = delta(s, &ctx, Some(33))?;
        FlatSpec::random(ctx, s.get("n", 5usize)?, h, delta, seed)?
    } else {
        s.record("prime", &REFERENCE_PRIME);
        FlatSpec::reference()
    };
    let f = construct_flat(&spec)?;
    let extent_h = s.get("extent", 4u64)?;
    let grid = s.get("grid", 10_000usize)?;
    let h = &spec.h;
    let p = spec.ctx.p();
    let must = [BigInt::zero(), BigInt::one(), h - 1u32];
    let mut xs = sample_below(&(h * extent_h), grid, seed ^ GRID_STREAM, &must);
    xs.extend(sample_below(h, grid, seed ^ GRID_STREAM ^ 1, &[]));
    xs.sort();
    xs.dedup();
    let mut csv = csv_with_header(s, "x,x_over_h,f_over_p,below_delta");
    let (mut inside, mut violations, mut first_exceed) = (0u64, 0u64, None);
    for x in &xs {
        let v = f.poly.eval(x);
        let below = v < spec.delta;
        if x < h {
            inside += 1;
            violations += u64::from(!below);
        }
        if !below && first_exceed.is_none() {
            first_exceed = Some(x.to_string());
        }
        writeln!(csv, "{x},{:.6},{:e},{below}", ratio(x, h), ratio(&v, p)).unwrap();
    }
    Ok(Report::new(
        csv,
        json!({
            "command": "flat", "n": spec.n, "points_below_h": inside, "violations_below_h": violations,
            "first_sampled_exceedance": first_exceed,
            "max_value_over_delta": ratio(&f.max_value, &spec.delta),
            "guaranteed_below_delta": f.below_delta(),
        }),
    ))
}

pub fn oscillate(s: &Settings) -> CliResult<Report> {
    let n = s.get("n", 5usize)?;
    let seed = s.get("seed", 0u64)?;
    let osc = if s.has("prime-bits") && !s.has("prime") {
        random_oscillating(s.get("prime-bits", 64u64)?, n, seed)?
    } else {
        let p: BigInt = s.get("prime", REFERENCE_PRIME.parse::<BigInt>().unwrap())?;
        let d0 = s.get("d0", BigInt::zero())?;
        construct_oscillating(&OscillatingSpec::alternating(PrimeContext::new(p)?, n, d0))?
    };
    let half = s.get("h", 100i64)?;
    let p = osc.spec.ctx.p();
    let mut csv = csv_with_header(s, "x,f_over_p,d,c,identity");
    let mut all = true;
    for x in -half..=half {
        let x = BigInt::from(x);
        let ok = osc.identity_holds(&x);
        all &= ok;
        let fc = osc.spec.ctx.centered(&osc.poly.eval(&x)).into_inner();
        let show = |v: Option<BigInt>| v.map_or("non-integral".to_string(), |v| v.to_string());
        writeln!(csv, "{x},{:e},{},{},{ok}", ratio(&fc, p), show(osc.d_value(&x)), show(osc.c_value(&x))).unwrap();
    }
    let mut report = Report::new(
        csv,
        json!({ "command": "oscillate", "n": osc.spec.n, "points": 2 * half + 1, "identity_holds": all }),
    );
    report.negative = !all;
    Ok(report)
}

pub fn nfij(s: &Settings) -> CliResult<Report> {
    let seed = s.get("seed", 0u64)?;
    let ctx = if s.has("prime-bits") && !s.has("prime") {
        prime(s, seed, 0)?
    } else {
        PrimeContext::new(s.get("prime", BigInt::from(10007))?)?
    };
    let n = s.get("n", 2usize)?;
    let big_h = s.get("h", 100u64)?;
    let u = s.get("interval-start", BigInt::zero())?;
    let v = s.get("target-start", BigInt::zero())?;
    let k = s.get("target-len", BigInt::from(100))?;
    let trials = s.get("trials", 1u64)?;
    let kind = s.get("poly", "random".to_string())?;
    let mut rng = seeded_rng(seed);
    let mut csv = csv_with_header(s, "trial,n,h,k,count,bound");
    let bound = nfij_bound(big_h, &k, ctx.p(), n.max(1) as u32);
    let mut max_ratio = 0.0f64;
    for t in 0..trials {
        let f = match kind.as_str() {
            "random" => FpPolynomial::random(ctx.clone(), n, 0, &mut rng),
            "power" => {
                let mut c = vec![BigInt::zero(); n + 1];
                c[n] = BigInt::one();
                FpPolynomial::from_integers(ctx.clone(), &c)
            }
            other => return Err(config(format!("unknown poly kind {other:?}"))),
        };
        let pair = IntervalPair::new(u.clone(), big_h, v.clone(), k.clone());
        let count = count_nfij(&f, &pair)?;
        max_ratio = max_ratio.max(count as f64 / bound);
        writeln!(csv, "{t},{n},{big_h},{k},{count},{bound:.6}").unwrap();
    }
    Ok(Report::new(csv, json!({ "command": "nfij", "trials": trials, "bound": bound, "max_count_over_bound": max_ratio })))
}
