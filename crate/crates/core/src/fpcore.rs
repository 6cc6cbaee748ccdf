//! Exact prime-field arithmetic, polynomials over F_p and the centered
//! distance `|s|_m` that every approximation bound is phrased in.
//!
//! Residues are stored in `[0, p-1]`; the centered representative in
//! `(-p/2, p/2]` is produced on demand.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};

/// Miller-Rabin rounds used when a [`PrimeContext`] is constructed.
pub const MILLER_RABIN_ROUNDS: usize = 64;

const SMALL_PRIMES: [u32; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// `|s|_m`: distance from `s` to the nearest multiple of `m`.
pub fn dist_mod(s: &BigInt, m: &BigInt) -> Result<BigInt> {
    if !m.is_positive() {
        return Err(domain(format!("dist_mod modulus must be positive, got {m}")));
    }
    let r = s.mod_floor(m);
    let other = m - &r;
    Ok(if r <= other { r } else { other })
}

/// Probabilistic primality test: trial division then `rounds` Miller-Rabin
/// witnesses drawn from a fixed-seed generator, so the verdict is
/// reproducible.
pub fn is_probable_prime(n: &BigInt, rounds: usize) -> bool {
    let two = BigInt::from(2u32);
    if n < &two {
        return false;
    }
    for &sp in &SMALL_PRIMES {
        let sp = BigInt::from(sp);
        if n == &sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d69_6c6c_6572_7261);
    'witness: for _ in 0..rounds {
        let a = rng.gen_bigint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Draws a uniformly random prime with exactly `bits` bits.
pub fn random_prime<R: rand::Rng + ?Sized>(bits: u64, rng: &mut R) -> Result<BigInt> {
    if bits < 2 {
        return Err(domain("a prime needs at least 2 bits"));
    }
    let lo = BigInt::one() << (bits - 1);
    let hi = BigInt::one() << bits;
    loop {
        let mut c = rng.gen_bigint_range(&lo, &hi);
        c |= BigInt::one();
        if c >= hi {
            continue;
        }
        if is_probable_prime(&c, MILLER_RABIN_ROUNDS) {
            return Ok(c);
        }
    }
}

/// The prime modulus together with its bit length `r`.
#[derive(Clone, PartialEq, Eq)]
pub struct PrimeContext {
    p: BigInt,
    bits: u64,
}

impl fmt::Debug for PrimeContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrimeContext(p={}, r={})", self.p, self.bits)
    }
}

impl PrimeContext {
    /// Validates primality (64 Miller-Rabin rounds) and records the bit length.
    pub fn new(p: BigInt) -> Result<Self> {
        if !is_probable_prime(&p, MILLER_RABIN_ROUNDS) {
            return Err(Error::NotPrime(p.to_string()));
        }
        let bits = p.bits();
        Ok(Self { p, bits })
    }

    pub fn from_u64(p: u64) -> Result<Self> {
        Self::new(BigInt::from(p))
    }

    /// A random prime of exactly `bits` bits.
    pub fn random<R: rand::Rng + ?Sized>(bits: u64, rng: &mut R) -> Result<Self> {
        let p = random_prime(bits, rng)?;
        Ok(Self { bits: p.bits(), p })
    }

    pub fn p(&self) -> &BigInt {
        &self.p
    }

    /// Bit length `r` of `p`, so `2^(r-1) <= p < 2^r`.
    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Canonical residue in `[0, p-1]`.
    pub fn reduce(&self, s: &BigInt) -> BigInt {
        s.mod_floor(&self.p)
    }

    pub fn reduce_i64(&self, s: i64) -> BigInt {
        self.reduce(&BigInt::from(s))
    }

    /// Representative of `s` in `(-p/2, p/2]`.
    pub fn centered(&self, s: &BigInt) -> CenteredResidue {
        let r = self.reduce(s);
        let twice: BigInt = &r << 1;
        if twice > self.p {
            CenteredResidue(r - &self.p)
        } else {
            CenteredResidue(r)
        }
    }

    /// `|s|_p`.
    pub fn dist(&self, s: &BigInt) -> BigInt {
        self.centered(s).0.abs()
    }

    pub fn mod_inverse(&self, a: &BigInt) -> Result<BigInt> {
        let a = self.reduce(a);
        if a.is_zero() {
            return Err(domain("zero has no inverse modulo p"));
        }
        let g = a.extended_gcd(&self.p);
        debug_assert!(g.gcd.is_one());
        Ok(self.reduce(&g.x))
    }

    /// `A_i` with `A_i * i! = 1 (mod p)`.
    pub fn inv_factorial(&self, i: u64) -> Result<BigInt> {
        if BigInt::from(i) >= self.p {
            return Err(domain(format!("i! vanishes modulo p for i={i}")));
        }
        let mut fact = BigInt::one();
        for j in 2..=i {
            fact = (fact * j) % &self.p;
        }
        self.mod_inverse(&fact)
    }

    /// `x^e mod p` for a signed base.
    pub fn pow(&self, x: &BigInt, e: u64) -> BigInt {
        self.reduce(x).modpow(&BigInt::from(e), &self.p)
    }
}

/// An integer in `(-p/2, p/2]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CenteredResidue(BigInt);

impl CenteredResidue {
    pub fn value(&self) -> &BigInt {
        &self.0
    }

    pub fn into_inner(self) -> BigInt {
        self.0
    }
}

/// Exact `C(t, i) = t (t-1) ... (t-i+1) / i!`, valid for negative `t`.
pub fn binomial_int(t: &BigInt, i: u64) -> BigInt {
    let mut acc = BigInt::one();
    for j in 0..i {
        // acc == C(t, j) here, so the division is exact.
        acc = acc * (t - j) / (j + 1);
    }
    acc
}

/// A polynomial over F_p with declared support `[k..n]`.
///
/// `coeffs[j]` is the coefficient of `X^j`; the declared degree is
/// `coeffs.len() - 1` even when the leading coefficient is zero.
#[derive(Clone, PartialEq, Eq)]
pub struct FpPolynomial {
    ctx: PrimeContext,
    coeffs: Vec<BigInt>,
    support_low: usize,
}

impl fmt::Debug for FpPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FpPolynomial")
            .field("p", self.ctx.p())
            .field("coeffs", &self.coeffs)
            .field("support_low", &self.support_low)
            .finish()
    }
}

impl FpPolynomial {
    /// Checks that every coefficient is a residue and that coefficients
    /// below `support_low` vanish.
    pub fn new(ctx: PrimeContext, coeffs: Vec<BigInt>, support_low: usize) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(domain("polynomial needs at least one coefficient"));
        }
        for (i, c) in coeffs.iter().enumerate() {
            if c.is_negative() || c >= ctx.p() {
                return Err(domain(format!("coefficient {i} = {c} is not a residue")));
            }
            if i < support_low && !c.is_zero() {
                return Err(domain(format!(
                    "coefficient {i} must vanish below support {support_low}"
                )));
            }
        }
        Ok(Self { ctx, coeffs, support_low })
    }

    /// Reduces arbitrary integer coefficients modulo p.
    pub fn from_integers(ctx: PrimeContext, coeffs: &[BigInt]) -> Self {
        let coeffs: Vec<BigInt> = coeffs.iter().map(|c| ctx.reduce(c)).collect();
        let coeffs = if coeffs.is_empty() { vec![BigInt::zero()] } else { coeffs };
        Self { ctx, coeffs, support_low: 0 }
    }

    pub fn zero(ctx: PrimeContext, degree: usize) -> Self {
        Self { ctx, coeffs: vec![BigInt::zero(); degree + 1], support_low: 0 }
    }

    /// Uniformly random coefficients on `[k..n]`, zero below `k`.
    pub fn random<R: rand::Rng + ?Sized>(
        ctx: PrimeContext,
        degree: usize,
        support_low: usize,
        rng: &mut R,
    ) -> Self {
        let zero = BigInt::zero();
        let coeffs = (0..=degree)
            .map(|j| {
                if j < support_low {
                    BigInt::zero()
                } else {
                    rng.gen_bigint_range(&zero, ctx.p())
                }
            })
            .collect();
        Self { ctx, coeffs, support_low }
    }

    pub fn ctx(&self) -> &PrimeContext {
        &self.ctx
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn support_low(&self) -> usize {
        self.support_low
    }

    /// Declared degree `n`.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// True when the declared leading coefficient is zero.
    pub fn leading_is_zero(&self) -> bool {
        self.coeffs.last().is_some_and(Zero::is_zero)
    }

    /// Horner evaluation at an arbitrary integer point, result in `[0, p-1]`.
    pub fn eval(&self, t: &BigInt) -> BigInt {
        let p = self.ctx.p();
        let t = t.mod_floor(p);
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = (acc * &t + c) % p;
        }
        acc
    }

    pub fn eval_i64(&self, t: i64) -> BigInt {
        self.eval(&BigInt::from(t))
    }

    /// Coefficient-wise sum; the result has the larger declared degree.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(&BigInt, &BigInt) -> BigInt) -> Result<Self> {
        if self.ctx != other.ctx {
            return Err(domain("polynomials live over different primes"));
        }
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = BigInt::zero();
        let coeffs = (0..len)
            .map(|i| {
                let a = self.coeffs.get(i).unwrap_or(&zero);
                let b = other.coeffs.get(i).unwrap_or(&zero);
                self.ctx.reduce(&op(a, b))
            })
            .collect();
        Ok(Self {
            ctx: self.ctx.clone(),
            coeffs,
            support_low: self.support_low.min(other.support_low),
        })
    }

    /// Multiplies every coefficient by `s` modulo p.
    pub fn scale(&self, s: &BigInt) -> Self {
        let coeffs = self.coeffs.iter().map(|c| self.ctx.reduce(&(c * s))).collect();
        Self { ctx: self.ctx.clone(), coeffs, support_low: self.support_low }
    }

    /// Text form: decimal p on the first line, then one coefficient per
    /// line starting at index 0.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.ctx.p());
        for c in &self.coeffs {
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses [`FpPolynomial::to_text`] output. The support is reset to 0.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, first) = lines
            .next()
            .ok_or(Error::Parse { line: 1, msg: "missing prime".into() })?;
        let p = parse_int(first, line)?;
        let ctx = PrimeContext::new(p)?;
        let mut coeffs = Vec::new();
        for (line, l) in lines {
            let c = parse_int(l, line)?;
            if c.is_negative() || &c >= ctx.p() {
                return Err(Error::Parse { line, msg: format!("{c} is not a residue") });
            }
            coeffs.push(c);
        }
        if coeffs.is_empty() {
            return Err(Error::Parse { line: 2, msg: "no coefficients".into() });
        }
        Self::new(ctx, coeffs, 0)
    }
}

pub(crate) fn parse_int(s: &str, line: usize) -> Result<BigInt> {
    BigInt::from_str(s.trim())
        .map_err(|e| Error::Parse { line, msg: format!("bad integer {s:?}: {e}") })
}

/// Top `s` bits of `x` within an `r`-bit representation.
pub fn top_bits(x: &BigInt, s: u64, r: u64) -> BigInt {
    debug_assert!(x.sign() != Sign::Minus);
    x >> (r - s)
}
