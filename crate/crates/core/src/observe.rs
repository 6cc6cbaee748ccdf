//! The attacker's view: evaluation points on a short interval and noisy
//! approximations of `f(t)` in additive, MSB and LSB encodings.

use std::io::{BufRead, Write};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::fpcore::{parse_int, FpPolynomial, PrimeContext};

/// Seeded generator used for every random choice in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `d` points drawn i.i.d. uniformly (with replacement) from `[-h, h]`.
pub fn sample_points(h: i64, d: usize, seed: u64) -> Result<Vec<i64>> {
    if h < 0 {
        return Err(domain("interval radius must be non-negative"));
    }
    sample_points_in(-h, h, d, seed)
}

/// `d` points drawn i.i.d. uniformly from the inclusive window `[lo, hi]`.
pub fn sample_points_in(lo: i64, hi: i64, d: usize, seed: u64) -> Result<Vec<i64>> {
    if lo > hi {
        return Err(domain(format!("empty window [{lo}, {hi}]")));
    }
    let mut rng = seeded_rng(seed);
    Ok((0..d).map(|_| rng.gen_range(lo..=hi)).collect())
}

/// How the additive error inside the `±Δ` window is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseModel {
    /// Uniform on `[-Δ, Δ]`.
    #[default]
    Uniform,
    /// Uniform on `{-Δ, Δ}`: the extreme points of the window.
    Extremal,
    /// No noise at all.
    Exact,
}

impl NoiseModel {
    pub fn sample<R: Rng + ?Sized>(self, delta: &BigInt, rng: &mut R) -> BigInt {
        use num_bigint::RandBigInt;
        match self {
            NoiseModel::Uniform => rng.gen_bigint_range(&-delta, &(delta + 1u32)),
            NoiseModel::Extremal => {
                if rng.gen::<bool>() {
                    delta.clone()
                } else {
                    -delta
                }
            }
            NoiseModel::Exact => BigInt::zero(),
        }
    }
}

/// A point `t` with an approximation `u` of `f(t)`: `|u - f(t)|_p <= Δ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoisyObservation {
    pub t: i64,
    pub u: BigInt,
    pub delta: BigInt,
}

impl NoisyObservation {
    /// Re-checks the defining inequality against a generating polynomial.
    pub fn is_consistent_with(&self, f: &FpPolynomial) -> bool {
        f.ctx().dist(&(&self.u - f.eval_i64(self.t))) <= self.delta
    }
}

/// `s` least significant bits of `f(t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LsbObservation {
    pub t: i64,
    pub v: BigInt,
    pub s: u64,
}

fn check_delta(delta: &BigInt, ctx: &PrimeContext) -> Result<()> {
    if delta.is_negative() {
        return Err(domain("Δ must be non-negative"));
    }
    if (delta << 1u32) >= *ctx.p() {
        return Err(domain(format!("Δ = {delta} >= p/2 carries no information")));
    }
    Ok(())
}

/// One additive observation `u = f(t) + e mod p`.
pub fn observe_additive<R: Rng + ?Sized>(
    f: &FpPolynomial,
    t: i64,
    delta: &BigInt,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<NoisyObservation> {
    check_delta(delta, f.ctx())?;
    let e = noise.sample(delta, rng);
    let u = f.ctx().reduce(&(f.eval_i64(t) + e));
    let obs = NoisyObservation { t, u, delta: delta.clone() };
    debug_assert!(obs.is_consistent_with(f));
    Ok(obs)
}

/// Observations at every point in `points`, drawn from a single seeded stream.
pub fn observe_all(
    f: &FpPolynomial,
    points: &[i64],
    delta: &BigInt,
    noise: NoiseModel,
    seed: u64,
) -> Result<Vec<NoisyObservation>> {
    let mut rng = seeded_rng(seed);
    points.iter().map(|&t| observe_additive(f, t, delta, noise, &mut rng)).collect()
}

/// The `s` low bits of `f(t)` (as an element of `[0, p-1]`).
pub fn observe_lsb(f: &FpPolynomial, t: i64, s: u64) -> LsbObservation {
    let mask = (BigInt::one() << s) - 1u32;
    LsbObservation { t, v: f.eval_i64(t) & mask, s }
}

/// Additive form of an LSB observation, valid for the scaled polynomial
/// `λ f` where `λ = 2^{-s} mod p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LsbReduction {
    pub u: BigInt,
    pub delta: BigInt,
    pub lambda: BigInt,
}

pub fn lsb_to_additive(obs: &LsbObservation, ctx: &PrimeContext) -> Result<LsbReduction> {
    let r = ctx.bits();
    if obs.s >= r {
        return Err(domain(format!("s = {} must be below the bit length {r}", obs.s)));
    }
    if obs.v.is_negative() || obs.v >= BigInt::one() << obs.s {
        return Err(domain("v is not an s-bit integer"));
    }
    let lambda = ctx.mod_inverse(&(BigInt::one() << obs.s))?;
    let delta = BigInt::one() << (r - obs.s - 1);
    let u = ctx.reduce(&(&lambda * &obs.v + &delta));
    Ok(LsbReduction { u, delta, lambda })
}

/// Midpoint of the window of `r`-bit integers whose top `s` bits are `msbs`.
pub fn msb_to_additive(msbs: &BigInt, s: u64, ctx: &PrimeContext) -> Result<(BigInt, BigInt)> {
    let r = ctx.bits();
    if s >= r {
        return Err(domain(format!("s = {s} must be below the bit length {r}")));
    }
    let delta = BigInt::one() << (r - s - 1);
    let u = (msbs << (r - s)) + &delta;
    Ok((u, delta))
}

/// Writes `t,u,delta` rows under a header.
pub fn write_observations_csv<W: Write>(obs: &[NoisyObservation], mut w: W) -> Result<()> {
    writeln!(w, "t,u,delta")?;
    for o in obs {
        writeln!(w, "{},{},{}", o.t, o.u, o.delta)?;
    }
    Ok(())
}

/// Reads [`write_observations_csv`] output; `#` lines are comments.
pub fn read_observations_csv<R: BufRead>(r: R) -> Result<Vec<NoisyObservation>> {
    let mut out = Vec::new();
    let mut seen_header = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            seen_header = true;
            if line.replace(' ', "") == "t,u,delta" {
                continue;
            }
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let t = fields[0]
            .trim()
            .parse::<i64>()
            .map_err(|e| Error::Parse { line: lineno, msg: format!("bad point: {e}") })?;
        out.push(NoisyObservation {
            t,
            u: parse_int(fields[1], lineno)?,
            delta: parse_int(fields[2], lineno)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::RandBigInt;

    fn b(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn degenerate_interval() {
        assert_eq!(sample_points(0, 3, 17).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn sampling_is_deterministic_and_centered() {
        let a = sample_points(5, 10_000, 42).unwrap();
        assert_eq!(a, sample_points(5, 10_000, 42).unwrap());
        assert!(a.iter().all(|t| t.abs() <= 5));
        let mean = a.iter().sum::<i64>() as f64 / a.len() as f64;
        assert!(mean.abs() <= 0.2, "mean {mean}");
    }

    #[test]
    fn additive_window() {
        let ctx = PrimeContext::from_u64(101).unwrap();
        let f = FpPolynomial::new(ctx, vec![b(0), b(0), b(1)], 0).unwrap();
        let mut rng = seeded_rng(1);
        for _ in 0..200 {
            let o = observe_additive(&f, 5, &b(3), NoiseModel::Uniform, &mut rng).unwrap();
            assert!((22..=28).contains(&i64::try_from(&o.u).unwrap()));
        }
        let exact = observe_additive(&f, 5, &b(3), NoiseModel::Exact, &mut rng).unwrap();
        assert_eq!(exact.u, b(25));
        assert!(observe_additive(&f, 5, &b(51), NoiseModel::Uniform, &mut rng).is_err());
    }

    #[test]
    fn additive_invariant_holds() {
        let mut rng = seeded_rng(7);
        let ctx = PrimeContext::random(40, &mut rng).unwrap();
        let f = FpPolynomial::random(ctx, 4, 0, &mut rng);
        let delta = b(1 << 20);
        for noise in [NoiseModel::Uniform, NoiseModel::Extremal] {
            for _ in 0..10_000 {
                let t = rng.gen_range(-1000..=1000);
                let o = observe_additive(&f, t, &delta, noise, &mut rng).unwrap();
                assert!(o.is_consistent_with(&f));
            }
        }
    }

    #[test]
    fn lsb_hand_example() {
        let ctx = PrimeContext::from_u64(13).unwrap();
        let obs = LsbObservation { t: 0, v: b(1), s: 2 };
        let red = lsb_to_additive(&obs, &ctx).unwrap();
        assert_eq!(red, LsbReduction { u: b(12), delta: b(2), lambda: b(10) });
        assert_eq!(ctx.dist(&(&red.u - &red.lambda * b(9))), b(0));
    }

    #[test]
    fn lsb_without_information() {
        let ctx = PrimeContext::from_u64(13).unwrap();
        let red = lsb_to_additive(&LsbObservation { t: 0, v: b(0), s: 0 }, &ctx).unwrap();
        assert_eq!(red.lambda, b(1));
        assert_eq!(red.u, b(8));
        assert_eq!(red.delta, b(8));
        assert!(lsb_to_additive(&LsbObservation { t: 0, v: b(0), s: 4 }, &ctx).is_err());
    }

    #[test]
    fn lsb_reduction_bound_random() {
        let mut rng = seeded_rng(3);
        for _ in 0..1000 {
            let bits = rng.gen_range(8..80);
            let ctx = PrimeContext::random(bits, &mut rng).unwrap();
            let f = FpPolynomial::random(ctx.clone(), 3, 0, &mut rng);
            let s = rng.gen_range(0..ctx.bits());
            let t = rng.gen_range(-500..500);
            let red = lsb_to_additive(&observe_lsb(&f, t, s), &ctx).unwrap();
            let target = &red.lambda * f.eval_i64(t);
            assert!(ctx.dist(&(&red.u - target)) <= red.delta);
        }
    }

    #[test]
    fn msb_examples() {
        let ctx = PrimeContext::from_u64(251).unwrap();
        assert_eq!(ctx.bits(), 8);
        let (u, delta) = msb_to_additive(&b(0b101), 3, &ctx).unwrap();
        assert_eq!((u, delta), (b(176), b(16)));
        let (_, d) = msb_to_additive(&b(3), 7, &ctx).unwrap();
        assert_eq!(d, b(1));
        assert!(msb_to_additive(&b(0), 8, &ctx).is_err());
    }

    #[test]
    fn msb_window_contains_value() {
        let mut rng = seeded_rng(9);
        let ctx = PrimeContext::random(61, &mut rng).unwrap();
        let r = ctx.bits();
        for _ in 0..1000 {
            let x = rng.gen_bigint_range(&b(0), ctx.p());
            let s = rng.gen_range(0..r);
            let (u, delta) = msb_to_additive(&crate::fpcore::top_bits(&x, s, r), s, &ctx).unwrap();
            assert!((&x - &u).abs() <= delta);
        }
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let obs = vec![
            NoisyObservation { t: -3, u: b(17), delta: b(2) },
            NoisyObservation { t: 9, u: b(0), delta: b(2) },
        ];
        let mut buf = Vec::new();
        write_observations_csv(&obs, &mut buf).unwrap();
        assert_eq!(read_observations_csv(&buf[..]).unwrap(), obs);
        let bad = "t,u,delta\n1,2,3\n4,5\n";
        assert!(matches!(read_observations_csv(bad.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }
}
