//! Counting oracles and the closed-form expressions used to forecast when
//! approximate recovery succeeds.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::fpcore::{binomial_int, FpPolynomial};
use crate::lattice::volume::rational_det;
use crate::observe::seeded_rng;

/// Largest interval `count_nfij` will scan.
pub const NFIJ_CAP: u64 = 10_000_000;

/// Largest `h` for which the moment sums are accumulated directly.
pub const MOMENT_CAP: u64 = 10_000_000;

/// Binary digits carried by the fixed-point logarithms (about 60 decimal digits).
const LOG_BITS: u64 = 200;
const GUARD_BITS: u64 = 32;

/// `I = {u+1, ..., u+H}` and `J = {v+1, ..., v+K}`, the latter read modulo `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalPair {
    pub u: BigInt,
    pub h: u64,
    pub v: BigInt,
    pub k: BigInt,
}

impl IntervalPair {
    pub fn new(u: BigInt, h: u64, v: BigInt, k: BigInt) -> Self {
        Self { u, h, v, k }
    }
}

/// Number of `t` in `I` with `F(t)` in `J`. `K = p` makes `J` the full
/// residue set.
pub fn count_nfij(f: &FpPolynomial, pair: &IntervalPair) -> Result<u64> {
    let p = f.ctx().p();
    if pair.h == 0 || pair.h > NFIJ_CAP {
        return Err(Error::Refused(format!("H = {} outside [1, {NFIJ_CAP}]", pair.h)));
    }
    if pair.k < BigInt::one() || pair.k > *p {
        return Err(domain("K must lie in [1, p]"));
    }
    let first = &pair.v + 1u32;
    let mut count = 0;
    let mut t = &pair.u + 1u32;
    for _ in 0..pair.h {
        if (f.eval(&t) - &first).mod_floor(p) < pair.k {
            count += 1;
        }
        t += 1u32;
    }
    Ok(count)
}

/// Wooley's bound `l^2 - l + 1` on the Vinogradov exponent.
pub fn kappa_bound(ell: u32) -> u64 {
    let l = ell as u64;
    l * l - l + 1
}

/// `ln x` for a positive integer of any size, to double precision.
pub fn ln_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// `H ((K/p)^(1/2k) + (K/H^l)^(1/2k))` with `k = kappa_bound(l)`. A reference
/// value only: the `H^o(1)` factor and the implied constant are dropped.
pub fn nfij_bound(h: u64, k: &BigInt, p: &BigInt, ell: u32) -> f64 {
    let kap = 2.0 * kappa_bound(ell) as f64;
    let (lh, lk) = ((h as f64).ln(), ln_big(k));
    let first = ((lk - ln_big(p)) / kap).exp();
    let second = ((lk - ell as f64 * lh) / kap).exp();
    h as f64 * (first + second)
}

/// Natural logarithms of the bound on the number of polynomials that
/// `rho`-approximate a given one, with the regime conditions under which
/// the bound is claimed.
#[derive(Clone, Debug, PartialEq)]
pub struct MfBound {
    pub ln_bound: f64,
    /// `Δ^n h^(n(n+1)/2)`, the count at `rho = 1` from above.
    pub ln_upper_rho1: f64,
    /// `Δ^(n+1) h^(-n(n+1)/2)`, the count at `rho = 1` from below.
    pub ln_lower_rho1: f64,
    /// `h^(n-1) <= Δ p^(-eps)`.
    pub short_interval: bool,
    /// `Δ < p^(1-eps)`.
    pub small_noise: bool,
    /// `rho >= max(Δ/p, h^(-1/2^(n-1))) p^eps`.
    pub rho_large: bool,
}

impl MfBound {
    pub fn in_regime(&self) -> bool {
        self.short_interval && self.small_noise && self.rho_large
    }
}

/// Evaluates `rho^(-2^(n-1) - n(n^2+1)/2) Δ^(n+1) h^((n^2-n+2)/2)` in log
/// space, dropping `p^o(1)`.
pub fn mf_bound(n: u32, h: u64, delta: &BigInt, p: &BigInt, rho: f64, eps: f64) -> Result<MfBound> {
    if n == 0 || h == 0 || !delta.is_positive() || !(rho > 0.0 && rho <= 1.0) {
        return Err(domain("need n >= 1, h >= 1, Δ >= 1 and 0 < rho <= 1"));
    }
    let nf = n as f64;
    let (lh, ld, lp, lr) = ((h as f64).ln(), ln_big(delta), ln_big(p), rho.ln());
    let rho_exp = -(2f64.powi(n as i32 - 1)) - nf * (nf * nf + 1.0) / 2.0;
    let tri = nf * (nf + 1.0) / 2.0;
    Ok(MfBound {
        ln_bound: rho_exp * lr + (nf + 1.0) * ld + (nf * nf - nf + 2.0) / 2.0 * lh,
        ln_upper_rho1: nf * ld + tri * lh,
        ln_lower_rho1: (nf + 1.0) * ld - tri * lh,
        short_interval: (nf - 1.0) * lh <= ld - eps * lp,
        small_noise: ld < (1.0 - eps) * lp,
        rho_large: lr >= (ld - lp).max(-lh / 2f64.powi(n as i32 - 1)) + eps * lp,
    })
}

fn factorial(i: u64) -> BigInt {
    (1..=i).fold(BigInt::one(), |acc, j| acc * j)
}

fn binomial(n: u64, k: u64) -> BigInt {
    binomial_int(&BigInt::from(n), k)
}

/// Determinant of the `(n+1) x (n+1)` Hilbert matrix,
/// `prod_{i<=n} (i!)^4 / prod_{i<=2n+1} i!`.
pub fn hilbert_det(n: u32) -> BigRational {
    let num = (1..=n as u64).fold(BigInt::one(), |acc, i| acc * factorial(i).pow(4));
    let den = (1..=2 * n as u64 + 1).fold(BigInt::one(), |acc, i| acc * factorial(i));
    BigRational::new(num, den)
}

/// The same determinant by exact elimination of `1/(i+j-1)`.
pub fn hilbert_det_elimination(n: u32) -> BigRational {
    let m = n as i64 + 1;
    let rows = (1..=m)
        .map(|i| (1..=m).map(|j| BigRational::new(BigInt::one(), BigInt::from(i + j - 1))).collect())
        .collect();
    rational_det(rows)
}

fn inv_factorial_product_sq(n: u32) -> BigRational {
    let den = (1..=n as u64).fold(BigInt::one(), |acc, i| acc * factorial(i));
    BigRational::new(BigInt::one(), &den * &den)
}

/// `E_h[Vol(L_approx)^2]` with the sum over `[-h, h]^(n+1)` replaced by the
/// integral over the unit cube:
/// `(prod 1/i!)^2 C(d, n+1) (2h)^(n(n+1)) (n+1)! det(Hilbert)`.
pub fn expected_vol_sq(n: u32, h: u64, d: u64) -> Result<BigRational> {
    if d < n as u64 + 1 || h == 0 {
        return Err(domain("need d >= n+1 and h >= 1"));
    }
    let scale = BigInt::from(2 * h).pow(n * (n + 1)) * binomial(d, n as u64 + 1) * factorial(n as u64 + 1);
    Ok(inv_factorial_product_sq(n) * BigRational::from_integer(scale) * hilbert_det(n))
}

/// `E_h[Vol(L_approx)^2]` without the integral approximation. The sum of the
/// squared Vandermonde determinant over `[-h, h]^(n+1)` equals `(n+1)!`
/// times the Hankel determinant of the moments `sum_t t^k`.
pub fn expected_vol_sq_discrete(n: u32, h: u64, d: u64) -> Result<BigRational> {
    if d < n as u64 + 1 {
        return Err(domain("need d >= n+1"));
    }
    if h > MOMENT_CAP {
        return Err(Error::Refused(format!("h = {h} above {MOMENT_CAP}")));
    }
    let size = n as usize + 1;
    let mut moments = vec![BigInt::zero(); 2 * size - 1];
    for t in -(h as i64)..=h as i64 {
        let t = BigInt::from(t);
        let mut pw = BigInt::one();
        for m in moments.iter_mut() {
            *m += &pw;
            pw *= &t;
        }
    }
    let hankel = (0..size).map(|i| (0..size).map(|j| moments[i + j].clone()).collect()).collect();
    let sum = bareiss_det(hankel) * factorial(size as u64) * binomial(d, size as u64);
    let cells = BigInt::from(2 * h + 1).pow(size as u32);
    Ok(inv_factorial_product_sq(n) * BigRational::new(sum, cells))
}

/// Fraction-free determinant of an integer matrix.
pub fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            let Some(r) = (k + 1..n).find(|&r| !a[r][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, r);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    if n == 0 {
        return BigInt::one();
    }
    sign * &a[n - 1][n - 1]
}

/// Squared volume of the lattice spanned by the rows `(C(t_j, i))_j`,
/// `i = 0..n`.
pub fn approx_vol_sq(n: u32, points: &[i64]) -> BigInt {
    let cols: Vec<Vec<BigInt>> = points
        .iter()
        .map(|&t| (0..=n as u64).map(|i| binomial_int(&BigInt::from(t), i)).collect())
        .collect();
    let size = n as usize + 1;
    let gram = (0..size)
        .map(|i| (0..size).map(|j| cols.iter().map(|c| &c[i] * &c[j]).sum()).collect())
        .collect();
    bareiss_det(gram)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarlo {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Monte Carlo estimate of `E_h[Vol(L_approx)^2]` with `t_1..t_d` drawn
/// independently and uniformly from `[-h, h]`.
pub fn expected_vol_sq_mc(n: u32, h: u64, d: u64, trials: u64, seed: u64) -> Result<MonteCarlo> {
    if trials == 0 {
        return Err(domain("need at least one trial"));
    }
    let mut rng = seeded_rng(seed);
    let hh = h as i64;
    let (mut mean, mut m2) = (0.0, 0.0);
    let mut points = vec![0i64; d as usize];
    for i in 0..trials {
        for t in points.iter_mut() {
            *t = rng.gen_range(-hh..=hh);
        }
        let x = approx_vol_sq(n, &points).to_f64().unwrap();
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let var = if trials > 1 { m2 / (trials - 1) as f64 } else { 0.0 };
    Ok(MonteCarlo { mean, std_error: (var / trials as f64).sqrt(), trials })
}

/// Modulus data for the predictor: a concrete `(p, Δ)`, or the limit of
/// large `p` with `Δ = floor(p / 2^shift)`, where `p / Δ` tends to `2^shift`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Modulus {
    Concrete { p: BigInt, delta: BigInt },
    LargeP { shift: u32 },
}

impl Modulus {
    /// `Δ = floor(p / 2^(b+1))` for `b`-bit keys.
    pub fn himmo(b: u32) -> Self {
        Modulus::LargeP { shift: b + 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictorInput {
    pub n: u32,
    pub h: u64,
    pub modulus: Modulus,
    pub d: u64,
}

impl PredictorInput {
    pub fn new(n: u32, h: u64, modulus: Modulus, d: u64) -> Result<Self> {
        if d <= n as u64 + 1 {
            return Err(domain(format!("S needs d > n+1, got d = {d}, n = {n}")));
        }
        if h == 0 {
            return Err(domain("h must be positive"));
        }
        if let Modulus::Concrete { p, delta } = &modulus {
            if !delta.is_positive() || delta >= p {
                return Err(domain("need 0 < Δ < p"));
            }
        }
        Ok(Self { n, h, modulus, d })
    }

    /// The averaging that yields the closed form assumes `d` is much
    /// smaller than `h`.
    pub fn in_derivation_regime(&self) -> bool {
        self.d * 10 <= self.h
    }

    /// `2(d-n-1) S = ln(num / den)` with both sides integers.
    fn log_argument(&self) -> (BigInt, BigInt) {
        let (n, d) = (self.n as u64, self.d);
        let e = 2 * (d - n - 1) as u32;
        let (mut num, mut den) = match &self.modulus {
            Modulus::Concrete { p, delta } => (p.pow(e), (delta * d).pow(e)),
            Modulus::LargeP { shift } => (BigInt::one() << (*shift as u64 * e as u64), BigInt::from(d).pow(e)),
        };
        for i in 1..=n {
            num *= factorial(n + 1 + i);
            den *= factorial(i);
        }
        den *= binomial(d, n + 1) * BigInt::from(2 * self.h).pow((n * (n + 1)) as u32);
        (num, den)
    }
}

/// Natural logarithm scaled by `2^LOG_BITS`.
fn ln_fixed(x: &BigInt) -> BigInt {
    assert!(x.is_positive());
    let prec = LOG_BITS + GUARD_BITS;
    let one = BigInt::one() << prec;
    let k = x.bits() - 1;
    let m = if k >= prec { x >> (k - prec) } else { x << (prec - k) };
    let z = ((&m - &one) << prec) / (&m + &one);
    let ln_m = atanh_series(&z, prec) * 2;
    let ln2 = atanh_series(&(&one / 3), prec) * 2;
    (ln2 * k + ln_m) >> GUARD_BITS
}

/// `atanh(z) = sum z^(2j+1) / (2j+1)` in fixed point, `|z| <= 1/3`.
fn atanh_series(z: &BigInt, prec: u64) -> BigInt {
    let z2 = (z * z) >> prec;
    let mut pw = z.clone();
    let mut sum = BigInt::zero();
    let mut j = 1u32;
    while !pw.is_zero() {
        sum += &pw / j;
        pw = (&pw * &z2) >> prec;
        j += 2;
    }
    sum
}

/// Value and exact sign of the predictor.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorValue {
    pub value: f64,
    /// `S > 0`, decided by comparing integers rather than floats.
    pub positive: bool,
    pub in_derivation_regime: bool,
}

/// `S = ln(p/(dΔ)) + (sum_i ln((n+1+i)!/i!) - ln C(d, n+1) - n(n+1) ln(2h)) / (2(d-n-1))`.
pub fn predictor_s(inp: &PredictorInput) -> PredictorValue {
    let (num, den) = inp.log_argument();
    let t = ln_fixed(&num) - ln_fixed(&den);
    let scaled = BigRational::new(t, BigInt::from(2 * (inp.d - inp.n as u64 - 1)) << LOG_BITS);
    if !inp.in_derivation_regime() {
        log::debug!("d = {} is not much smaller than h = {}", inp.d, inp.h);
    }
    PredictorValue {
        value: scaled.to_f64().unwrap(),
        positive: num > den,
        in_derivation_regime: inp.in_derivation_regime(),
    }
}

/// Smallest `d` in `(n+1, d_max]` with `S > 0`.
pub fn first_positive_d(n: u32, h: u64, modulus: &Modulus, d_max: u64) -> Result<Option<u64>> {
    for d in n as u64 + 2..=d_max {
        let inp = PredictorInput::new(n, h, modulus.clone(), d)?;
        if predictor_s(&inp).positive {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

/// `(d, S)` for every `d` in `[d_lo, d_hi]`.
pub fn predictor_curve(n: u32, h: u64, modulus: &Modulus, d_lo: u64, d_hi: u64) -> Result<Vec<(u64, f64)>> {
    (d_lo.max(n as u64 + 2)..=d_hi)
        .map(|d| Ok((d, predictor_s(&PredictorInput::new(n, h, modulus.clone(), d)?).value)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpcore::PrimeContext;
    use proptest::{prop_assert, prop_assert_eq, proptest};

    fn b(x: i64) -> BigInt {
        BigInt::from(x)
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn square(p: u64) -> FpPolynomial {
        let ctx = PrimeContext::from_u64(p).unwrap();
        FpPolynomial::from_integers(ctx, &[b(0), b(0), b(1)])
    }

    #[test]
    fn nfij_small_square() {
        let f = square(11);
        assert_eq!(count_nfij(&f, &IntervalPair::new(b(0), 3, b(0), b(5))).unwrap(), 2);
        assert_eq!(count_nfij(&f, &IntervalPair::new(b(0), 3, b(0), b(11))).unwrap(), 3);
        assert!(count_nfij(&f, &IntervalPair::new(b(0), NFIJ_CAP + 1, b(0), b(5))).is_err());
    }

    #[test]
    fn nfij_power_example() {
        let ctx = PrimeContext::from_u64(1_000_003).unwrap();
        let f = FpPolynomial::from_integers(ctx, &[b(0), b(0), b(0), b(1)]);
        assert_eq!(count_nfij(&f, &IntervalPair::new(b(0), 50, b(0), b(125_000))).unwrap(), 50);
    }

    #[test]
    fn nfij_wraps_modulo_p() {
        // J = {9, 10, 0, 1} modulo 11
        let f = square(11);
        let n = count_nfij(&f, &IntervalPair::new(b(-1), 11, b(8), b(4))).unwrap();
        // squares mod 11 over 0..=10: 0,1,4,9,5,3,3,5,9,4,1
        assert_eq!(n, 5);
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa_bound(1), 1);
        assert_eq!(kappa_bound(2), 3);
        assert_eq!(kappa_bound(5), 21);
    }

    #[test]
    fn nfij_bound_trivial_cases() {
        let p = b(10007);
        assert!(nfij_bound(100, &(&p - 1), &p, 2) >= 99.9);
        let tiny = nfij_bound(1, &b(1), &p, 2);
        assert!(tiny > 0.0 && tiny < 2.0);
    }

    #[test]
    fn nfij_bound_dominates_counts() {
        let ctx = PrimeContext::from_u64(10007).unwrap();
        let mut rng = seeded_rng(11);
        let bound = nfij_bound(100, &b(100), ctx.p(), 2);
        for _ in 0..1000 {
            let f = FpPolynomial::random(ctx.clone(), 2, 0, &mut rng);
            let pair = IntervalPair::new(b(rng.gen_range(0..10007)), 100, b(rng.gen_range(0..10007)), b(100));
            assert!(count_nfij(&f, &pair).unwrap() as f64 <= 10.0 * bound);
        }
    }

    #[test]
    fn mf_bound_shapes() {
        let p = BigInt::one() << 112u32;
        let m = mf_bound(1, 1000, &b(50), &p, 0.5, 0.01).unwrap();
        // n = 1: rho^(-2), Δ^2, h^1
        let want = -(1.0 + 1.0) * 0.5f64.ln() + 2.0 * 50f64.ln() + 1000f64.ln();
        assert!((m.ln_bound - want).abs() < 1e-9);
        for n in 1..6 {
            let h = 1u64 << 10;
            let delta = b(1 << 20);
            let m = mf_bound(n, h, &delta, &p, 1.0, 0.01).unwrap();
            assert!(m.ln_lower_rho1 <= m.ln_upper_rho1);
        }
    }

    #[test]
    fn mf_regime_fails_at_himmo_parameters() {
        let p = BigInt::one() << 112u32;
        let delta = &p >> 17u32;
        let m = mf_bound(5, 1 << 15, &delta, &p, 0.5, 0.01).unwrap();
        assert!(m.short_interval && m.small_noise);
        assert!(!m.rho_large && !m.in_regime());
    }

    #[test]
    fn hilbert_values() {
        assert_eq!(hilbert_det(0), q(1, 1));
        assert_eq!(hilbert_det(1), q(1, 12));
        assert_eq!(hilbert_det(2), q(1, 2160));
        for n in 0..=6 {
            assert_eq!(hilbert_det(n), hilbert_det_elimination(n), "n = {n}");
        }
    }

    #[test]
    fn expected_volume_small_cases() {
        assert_eq!(expected_vol_sq(0, 17, 9).unwrap(), q(9, 1));
        assert_eq!(expected_vol_sq_discrete(0, 17, 9).unwrap(), q(9, 1));
        // (2h)^2 / 6 at n = 1, d = 2
        assert_eq!(expected_vol_sq(1, 3, 2).unwrap(), q(6, 1));
    }

    #[test]
    fn discrete_expectation_is_exact_for_tiny_ranges() {
        // brute force over all point tuples in [-1, 1]^3
        let (n, h, d) = (1u32, 1u64, 3u64);
        let mut total = BigInt::zero();
        for a in -1..=1 {
            for b in -1..=1 {
                for c in -1..=1 {
                    total += approx_vol_sq(n, &[a, b, c]);
                }
            }
        }
        assert_eq!(expected_vol_sq_discrete(n, h, d).unwrap(), BigRational::new(total, BigInt::from(27)));
    }

    #[test]
    fn monte_carlo_degenerate_cases() {
        let mc = expected_vol_sq_mc(0, 50, 7, 20, 1).unwrap();
        assert_eq!((mc.mean, mc.std_error), (7.0, 0.0));
        let mc = expected_vol_sq_mc(2, 0, 7, 20, 1).unwrap();
        assert_eq!(mc.mean, 0.0);
    }

    #[test]
    fn monte_carlo_matches_discrete_expectation() {
        for (n, h, d) in [(1, 10, 4), (2, 100, 10), (3, 30, 12), (2, 1000, 5)] {
            let exact = expected_vol_sq_discrete(n, h, d).unwrap().to_f64().unwrap();
            let mc = expected_vol_sq_mc(n, h, d, 20_000, 5).unwrap();
            let z = (mc.mean - exact).abs() / mc.std_error;
            assert!(z < 3.0, "n={n} h={h} d={d}: z = {z}");
        }
    }

    #[test]
    fn continuum_expectation_within_five_percent() {
        let cont = expected_vol_sq(2, 100, 10).unwrap().to_f64().unwrap();
        let mc = expected_vol_sq_mc(2, 100, 10, 20_000, 9).unwrap();
        assert!((mc.mean / cont - 1.0).abs() < 0.05);
    }

    #[test]
    fn log_precision() {
        let ln10 = BigRational::new(ln_fixed(&b(10)), BigInt::one() << LOG_BITS);
        // ln 10 = 2.302585092994045684017991454684364207601...
        let want = BigRational::new(
            "2302585092994045684017991454684364207601".parse().unwrap(),
            BigInt::from(10).pow(39),
        );
        assert!((ln10 - want).abs() < BigRational::new(BigInt::one(), BigInt::from(10).pow(38)));
        let big = BigInt::one() << 5000u32;
        let l = BigRational::new(ln_fixed(&big), BigInt::one() << LOG_BITS).to_f64().unwrap();
        assert!((l - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn predictor_crossovers() {
        assert_eq!(first_positive_d(5, 1 << 15, &Modulus::himmo(16), 200).unwrap(), Some(23));
        assert_eq!(first_positive_d(26, 1 << 31, &Modulus::himmo(32), 1000).unwrap(), Some(426));
        assert_eq!(first_positive_d(26, 128, &Modulus::himmo(32), 1000).unwrap(), Some(73));
    }

    #[test]
    fn predictor_sign_agrees_with_value() {
        for (d, s) in predictor_curve(5, 1 << 15, &Modulus::himmo(16), 7, 60).unwrap() {
            let inp = PredictorInput::new(5, 1 << 15, Modulus::himmo(16), d).unwrap();
            assert_eq!(predictor_s(&inp).positive, s > 0.0, "d = {d}");
        }
    }

    #[test]
    fn concrete_modulus_approaches_large_p() {
        let p: BigInt = (BigInt::one() << 111u32) + 1u32;
        let delta = &p >> 17u32;
        let conc = PredictorInput::new(5, 1 << 15, Modulus::Concrete { p, delta }, 30).unwrap();
        let lim = PredictorInput::new(5, 1 << 15, Modulus::himmo(16), 30).unwrap();
        assert!((predictor_s(&conc).value - predictor_s(&lim).value).abs() < 1e-9);
    }

    #[test]
    fn small_keys_never_reach_zero() {
        let curve = predictor_curve(10, 1 << 7, &Modulus::himmo(8), 13, 255).unwrap();
        assert!(curve.iter().all(|&(_, s)| s < 0.0));
    }

    #[test]
    fn predictor_rejects_small_d() {
        assert!(PredictorInput::new(5, 100, Modulus::himmo(16), 6).is_err());
    }

    #[test]
    fn predictor_increases_up_to_its_peak() {
        for (n, h, bits) in [(5u32, 1u64 << 15, 16u32), (10, 1 << 7, 8), (26, 128, 32)] {
            let curve = predictor_curve(n, h, &Modulus::himmo(bits), 0, 500).unwrap();
            let peak = curve.iter().enumerate().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).unwrap().0;
            assert!(curve[..=peak].windows(2).all(|w| w[0].1 < w[1].1));
        }
    }

    proptest! {
        #[test]
        fn nfij_never_exceeds_interval(seed in 0u64..1000, h in 1u64..200, k in 1i64..=101) {
            let ctx = PrimeContext::from_u64(101).unwrap();
            let mut rng = seeded_rng(seed);
            let f = FpPolynomial::random(ctx, 3, 0, &mut rng);
            let pair = IntervalPair::new(b(rng.gen_range(-500..500)), h, b(rng.gen_range(0..101)), b(k));
            let c = count_nfij(&f, &pair).unwrap();
            prop_assert!(c <= h);
            if k == 101 {
                prop_assert_eq!(c, h);
            }
        }

        #[test]
        fn bareiss_matches_rational_elimination(entries in proptest::collection::vec(-50i64..50, 16)) {
            let int: Vec<Vec<BigInt>> = entries.chunks(4).map(|r| r.iter().map(|&x| b(x)).collect()).collect();
            let rat = int.iter().map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect();
            prop_assert_eq!(BigRational::from_integer(bareiss_det(int)), rational_det(rat));
        }
    }
}
