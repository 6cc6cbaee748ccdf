//! Polynomials with large coefficients that take small values on short
//! intervals: the scaled family, flat polynomials built from falling
//! factorials, and oscillating polynomials.

use num_bigint::{BigInt, RandBigInt};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{domain, Result};
use crate::fpcore::{binomial_int, FpPolynomial, PrimeContext};
use crate::observe::seeded_rng;

/// 226-bit prime of the worked flat and oscillating examples.
pub const REFERENCE_PRIME: &str = "13850178546024150676274172131557249442552857086506417208905998552087";

/// Multipliers `c_1..c_5` of the worked flat example (`h = 2^31`,
/// `Δ = floor(p / 2^33)`).
pub const REFERENCE_FLAT_C: [&str; 5] = [
    "728236268016142987379676454561254599761666551820",
    "118901258278655898193398330486974890011",
    "80243828316297659193667769559",
    "177312506479764141124",
    "210305526612",
];

/// Points checked when a construction asserts its own guarantee.
const SELF_CHECK_POINTS: usize = 10_000;

/// Nearest integer, ties to even.
pub fn nearest_int(x: &BigRational) -> BigInt {
    crate::lattice::round_rational(x)
}

/// Integer coefficients of `X (X-1) ... (X-i+1)`, lowest degree first.
pub fn falling_factorial(i: usize) -> Vec<BigInt> {
    let mut poly = vec![BigInt::one()];
    for k in 0..i {
        let mut next = vec![BigInt::zero(); poly.len() + 1];
        for (j, a) in poly.iter().enumerate() {
            next[j + 1] += a;
            next[j] -= a * k;
        }
        poly = next;
    }
    poly
}

/// Standard-basis residues of `sum_i b_i C(X, i)`.
pub fn binomial_to_standard(ctx: &PrimeContext, b: &[BigInt]) -> Result<FpPolynomial> {
    let mut coeffs = vec![BigInt::zero(); b.len().max(1)];
    for (i, bi) in b.iter().enumerate() {
        let w = bi * ctx.inv_factorial(i as u64)?;
        for (j, s) in falling_factorial(i).iter().enumerate() {
            coeffs[j] += &w * s;
        }
    }
    let coeffs = coeffs.iter().map(|c| ctx.reduce(c)).collect();
    FpPolynomial::new(ctx.clone(), coeffs, 0)
}

/// Parameters for which the structure detector should find a witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureHint {
    pub v_bound: BigInt,
    pub u_bounds: Vec<BigInt>,
}

fn points_to_check(lo: &BigInt, hi: &BigInt, seed: u64) -> Vec<BigInt> {
    let count = hi - lo;
    if count <= BigInt::from(SELF_CHECK_POINTS) {
        return num_iter(lo, hi);
    }
    let mut rng = seeded_rng(seed);
    let mut pts: Vec<BigInt> = (0..SELF_CHECK_POINTS).map(|_| rng.gen_bigint_range(lo, hi)).collect();
    pts.push(lo.clone());
    pts.push(lo + 1u32);
    pts.push(hi - 1u32);
    pts
}

fn num_iter(lo: &BigInt, hi: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut x = lo.clone();
    while &x < hi {
        out.push(x.clone());
        x += 1u32;
    }
    out
}

/// Output of [`construct_scaled`]: `A_i s^i = B_i (mod p)` with small `B_i`.
#[derive(Clone, Debug)]
pub struct ScaledPolynomial {
    pub poly: FpPolynomial,
    pub s: u64,
    pub b: Vec<BigInt>,
    /// Largest admissible `B_i`.
    pub b_max: Vec<BigInt>,
}

impl ScaledPolynomial {
    /// `v = s^l` clears every denominator: `A_i s^l = B_i s^(l-i)`.
    pub fn hint(&self) -> StructureHint {
        let l = self.b.len() - 1;
        let s = BigInt::from(self.s);
        StructureHint {
            v_bound: s.pow(l as u32),
            u_bounds: self.b_max.iter().enumerate().map(|(i, m)| m * s.pow((l - i) as u32)).collect(),
        }
    }
}

/// Coefficients `A_i` drawn from `[r_i p / s^i, r_i p / s^i + K / ((l+1) H^i)]`,
/// a sub-interval of the range `K / (l H^i)`. The narrower width makes
/// `F(s u)` land in `[0, K]` for every `u` in `[1, H/s]`.
pub fn construct_scaled(
    ctx: &PrimeContext,
    s: u64,
    r: &[BigInt],
    k_bound: &BigInt,
    h: u64,
    seed: u64,
) -> Result<ScaledPolynomial> {
    if s < 2 {
        return Err(domain("s must be at least 2"));
    }
    if r.len() < 2 {
        return Err(domain("need r_0..r_l with l >= 1"));
    }
    if h == 0 {
        return Err(domain("H must be positive"));
    }
    let l = r.len() - 1;
    let (sb, hb, p) = (BigInt::from(s), BigInt::from(h), ctx.p());
    if *k_bound <= BigInt::from(l) * hb.pow(l as u32) {
        log::warn!("K <= l H^l: outside the regime of the construction");
    }
    let mut rng = seeded_rng(seed);
    let (mut coeffs, mut b, mut b_max) = (Vec::new(), Vec::new(), Vec::new());
    for (i, ri) in r.iter().enumerate() {
        let si = sb.pow(i as u32);
        if ri.is_negative() || *ri >= si {
            return Err(domain(format!("r_{i} = {ri} must lie in [0, s^{i})")));
        }
        // A_i s^i - r_i p in [0, K s^i / ((l+1) H^i)]
        let top = (k_bound * &si).div_floor(&(BigInt::from(l + 1) * hb.pow(i as u32)));
        let lo = (ri * p).div_ceil(&si);
        let hi = (ri * p + &top).div_floor(&si);
        if lo > hi || hi >= *p {
            return Err(domain(format!("coefficient interval {i} is empty")));
        }
        let a = rng.gen_bigint_range(&lo, &(&hi + 1u32));
        b.push(&a * &si - ri * p);
        b_max.push(top);
        coeffs.push(a);
    }
    let poly = FpPolynomial::new(ctx.clone(), coeffs, 0)?;
    for u in points_to_check(&BigInt::one(), &(BigInt::from(h / s) + 1u32), seed ^ 0x5ca1ed) {
        let v = poly.eval(&(&sb * &u));
        if v > *k_bound {
            return Err(domain(format!("F({s} * {u}) = {v} exceeds K")));
        }
    }
    Ok(ScaledPolynomial { poly, s, b, b_max })
}

/// Multipliers for `F = sum_i c_i A_i X (X-1) ... (X-i+1)` with
/// `0 < c_i h^i / i! < Δ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatSpec {
    pub ctx: PrimeContext,
    pub n: usize,
    pub h: BigInt,
    pub delta: BigInt,
    /// `c_1..c_n`.
    pub c: Vec<BigInt>,
}

fn factorial(i: usize) -> BigInt {
    (1..=i).fold(BigInt::one(), |acc, j| acc * j)
}

impl FlatSpec {
    pub fn new(ctx: PrimeContext, h: BigInt, delta: BigInt, c: Vec<BigInt>) -> Result<Self> {
        if c.is_empty() {
            return Err(domain("need at least c_1"));
        }
        if !h.is_positive() {
            return Err(domain("h must be positive"));
        }
        for (idx, ci) in c.iter().enumerate() {
            let i = idx + 1;
            if !ci.is_positive() || ci * h.pow(i as u32) >= &delta * factorial(i) {
                return Err(domain(format!("c_{i} = {ci} violates 0 < c_i h^i / i! < Δ")));
            }
        }
        Ok(Self { ctx, n: c.len(), h, delta, c })
    }

    /// `c_i` uniform on `[1, floor(Δ i! / h^i) - 1]`.
    pub fn random(ctx: PrimeContext, n: usize, h: BigInt, delta: BigInt, seed: u64) -> Result<Self> {
        let mut rng = seeded_rng(seed);
        let mut c = Vec::with_capacity(n);
        for i in 1..=n {
            let top = (&delta * factorial(i)) / h.pow(i as u32) - 1u32;
            if top < BigInt::one() {
                return Err(domain(format!("no admissible c_{i}: Δ i! / h^i is too small")));
            }
            c.push(rng.gen_bigint_range(&BigInt::one(), &(top + 1u32)));
        }
        Self::new(ctx, h, delta, c)
    }

    /// The worked example: reference prime, `h = 2^31`, `Δ = floor(p / 2^33)`.
    pub fn reference() -> Self {
        let ctx = PrimeContext::new(REFERENCE_PRIME.parse().unwrap()).unwrap();
        let delta = ctx.p() >> 33u32;
        let c = REFERENCE_FLAT_C.iter().map(|s| s.parse().unwrap()).collect();
        Self::new(ctx, BigInt::one() << 31u32, delta, c).unwrap()
    }
}

#[derive(Clone, Debug)]
pub struct FlatPolynomial {
    pub poly: FpPolynomial,
    pub spec: FlatSpec,
    /// `max_{0 <= t < h} sum_i c_i C(t, i)`, attained at `t = h - 1`.
    pub max_value: BigInt,
}

impl FlatPolynomial {
    /// `sum_i c_i C(t, i)`, congruent to `F(t)`.
    pub fn integer_value(&self, t: &BigInt) -> BigInt {
        self.spec.c.iter().enumerate().map(|(idx, ci)| ci * binomial_int(t, idx as u64 + 1)).sum()
    }

    /// Whether `F(t) < Δ` is guaranteed on all of `[0, h)`.
    pub fn below_delta(&self) -> bool {
        self.max_value < self.spec.delta
    }

    /// `n! A_i` is an integer, so `v = n!` turns every coefficient into
    /// `sum_i c_i (n!/i!) s(i, j)`.
    pub fn hint(&self) -> StructureHint {
        let n = self.spec.n;
        let nf = factorial(n);
        let mut u = vec![BigInt::zero(); n + 1];
        for (idx, ci) in self.spec.c.iter().enumerate() {
            let i = idx + 1;
            let w = ci * (&nf / factorial(i));
            for (j, s) in falling_factorial(i).iter().enumerate() {
                u[j] += (&w * s).abs();
            }
        }
        StructureHint { v_bound: nf, u_bounds: u }
    }
}

/// Expands `sum_i c_i A_i X (X-1) ... (X-i+1)` with `A_i = 1/i! mod p`.
/// Checks `F(t) = sum_i c_i C(t, i) (mod p)` on a seeded sample of `[0, h)`.
pub fn construct_flat(spec: &FlatSpec) -> Result<FlatPolynomial> {
    let mut b = vec![BigInt::zero()];
    b.extend(spec.c.iter().cloned());
    let poly = binomial_to_standard(&spec.ctx, &b)?;
    let mut flat = FlatPolynomial { poly, spec: spec.clone(), max_value: BigInt::zero() };
    flat.max_value = flat.integer_value(&(&spec.h - 1u32));
    for t in points_to_check(&BigInt::zero(), &spec.h, 0xf1a7) {
        let want = spec.ctx.reduce(&flat.integer_value(&t));
        if flat.poly.eval(&t) != want {
            return Err(domain(format!("expansion disagrees with the binomial form at {t}")));
        }
    }
    if !flat.below_delta() {
        log::warn!("flat polynomial exceeds Δ before h: max value {}", flat.max_value);
    }
    Ok(flat)
}

/// Binomial-basis data `d(0), D^1 d(0), ..., D^n d(0)` of an oscillating
/// polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OscillatingSpec {
    pub ctx: PrimeContext,
    pub n: usize,
    pub d0: BigInt,
    /// `D^1 d(0) .. D^n d(0)`, as centered residues.
    pub diffs: Vec<BigInt>,
}

impl OscillatingSpec {
    /// `D^i d(0) = nearest((-1/2)^(1+n-i) p)`.
    pub fn alternating(ctx: PrimeContext, n: usize, d0: BigInt) -> Self {
        let diffs = (1..=n)
            .map(|i| {
                let e = 1 + n - i;
                let sign = if e % 2 == 0 { BigInt::one() } else { -BigInt::one() };
                nearest_int(&BigRational::new(sign * ctx.p(), BigInt::one() << e))
            })
            .collect();
        Self { ctx, n, d0, diffs }
    }

    /// The construction only escapes the polynomial case when `2^(n+1) Δ > p`.
    pub fn in_regime(&self, delta: &BigInt) -> bool {
        (delta << (self.n + 1)) > *self.ctx.p()
    }
}

/// `f = sum_i D^i d(0) C(X, i)` together with the integer-valued `d` and
/// `c` of the decomposition `f = d + p c`.
#[derive(Clone, Debug)]
pub struct OscillatingPolynomial {
    pub poly: FpPolynomial,
    pub spec: OscillatingSpec,
}

impl OscillatingPolynomial {
    fn binomial_coeffs(&self) -> Vec<BigInt> {
        let mut b = vec![self.spec.d0.clone()];
        b.extend(self.spec.diffs.iter().cloned());
        b
    }

    /// `(-1)^e * 2^i`, i.e. `2^(n+1) (-1/2)^(n+1-i)` with `e = n + 1 - i`.
    fn scaled_half_power(&self, i: usize) -> BigInt {
        let e = self.spec.n + 1 - i;
        let v = BigInt::one() << i;
        if e % 2 == 0 {
            v
        } else {
            -v
        }
    }

    fn parity_sign(x: &BigInt) -> BigInt {
        if x.is_even() {
            BigInt::one()
        } else {
            -BigInt::one()
        }
    }

    /// `f(x)` as the integer `sum_i D^i d(0) C(x, i)`.
    pub fn f_value(&self, x: &BigInt) -> BigInt {
        self.binomial_coeffs().iter().enumerate().map(|(i, b)| b * binomial_int(x, i as u64)).sum()
    }

    /// `2^(n+1) c(x)`.
    fn c_scaled(&self, x: &BigInt) -> BigInt {
        let n = self.spec.n;
        let sum: BigInt = (0..=n).map(|i| self.scaled_half_power(i) * binomial_int(x, i as u64)).sum();
        // (-1/2)^(1+n) (-1)^x, scaled
        sum - self.scaled_half_power(0) * Self::parity_sign(x)
    }

    /// `2^(n+1) d(x)` from the closed form.
    fn d_scaled(&self, x: &BigInt) -> BigInt {
        let n = self.spec.n;
        let p = self.spec.ctx.p();
        let mut acc: BigInt = &self.spec.d0 << (n + 1);
        for (idx, di) in self.spec.diffs.iter().enumerate() {
            let i = idx + 1;
            acc += ((di << (n + 1)) - self.scaled_half_power(i) * p) * binomial_int(x, i as u64);
        }
        let sign = if (n + 1) % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        acc - sign * p * (BigInt::one() - Self::parity_sign(x))
    }

    /// `c(x)`; `None` if the closed form is not an integer at `x`.
    pub fn c_value(&self, x: &BigInt) -> Option<BigInt> {
        let (q, r) = self.c_scaled(x).div_rem(&(BigInt::one() << (self.spec.n + 1)));
        r.is_zero().then_some(q)
    }

    /// `d(x)`; `None` if the closed form is not an integer at `x`.
    pub fn d_value(&self, x: &BigInt) -> Option<BigInt> {
        let (q, r) = self.d_scaled(x).div_rem(&(BigInt::one() << (self.spec.n + 1)));
        r.is_zero().then_some(q)
    }

    /// `f(x) = d(x) + p c(x)`, checked on the integers without division.
    pub fn identity_holds(&self, x: &BigInt) -> bool {
        let lhs = self.f_value(x) << (self.spec.n + 1);
        lhs == self.d_scaled(x) + self.spec.ctx.p() * self.c_scaled(x)
            && self.c_value(x).is_some()
            && self.d_value(x).is_some()
    }

    /// `v = 2^(n+1) n!` maps every coefficient to a combination of the
    /// rounding errors `2^(n+1) D^i d(0) - (-1)^(n+1-i) 2^i p`.
    pub fn hint(&self) -> StructureHint {
        let n = self.spec.n;
        let nf = factorial(n);
        let p = self.spec.ctx.p();
        let mut u = vec![BigInt::zero(); n + 1];
        for (i, b) in self.binomial_coeffs().iter().enumerate() {
            let mut e = b << (n + 1);
            if i > 0 {
                e -= self.scaled_half_power(i) * p;
            }
            let w = e * (&nf / factorial(i));
            for (j, s) in falling_factorial(i).iter().enumerate() {
                u[j] += (&w * s).abs();
            }
        }
        StructureHint { v_bound: (BigInt::one() << (n + 1)) * nf, u_bounds: u }
    }
}

pub fn construct_oscillating(spec: &OscillatingSpec) -> Result<OscillatingPolynomial> {
    if spec.diffs.len() != spec.n {
        return Err(domain(format!("expected {} differences, got {}", spec.n, spec.diffs.len())));
    }
    let mut b = vec![spec.d0.clone()];
    b.extend(spec.diffs.iter().cloned());
    let poly = binomial_to_standard(&spec.ctx, &b)?;
    Ok(OscillatingPolynomial { poly, spec: spec.clone() })
}

/// Random oscillating instance for testing: a random prime of `bits` bits,
/// degree `n`, and `d(0)` drawn from `[-8, 8]`.
pub fn random_oscillating(bits: u64, n: usize, seed: u64) -> Result<OscillatingPolynomial> {
    let mut rng = seeded_rng(seed);
    let ctx = PrimeContext::random(bits, &mut rng)?;
    let d0 = BigInt::from(rng.gen_range(-8i64..=8));
    construct_oscillating(&OscillatingSpec::alternating(ctx, n, d0))
}

/// `u` in `[1, H/s]` such that `F(s u)` exceeds `bound` (testing aid).
pub fn scaled_violations(sp: &ScaledPolynomial, h: u64, bound: &BigInt) -> Vec<u64> {
    (1..=h / sp.s).filter(|&u| sp.poly.eval(&BigInt::from(sp.s * u)) > *bound).collect()
}

/// Largest centered `|F(t)|` over the given points, relative to `p`.
pub fn max_relative_value(poly: &FpPolynomial, points: &[BigInt]) -> f64 {
    let p = poly.ctx().p();
    points
        .iter()
        .map(|t| {
            let v = poly.ctx().centered(&poly.eval(t)).into_inner().abs();
            BigRational::new(v, p.clone()).to_f64().unwrap_or(0.5)
        })
        .fold(0.0, f64::max)
}
