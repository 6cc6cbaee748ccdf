use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::fplll::lll_reduce_fp;
use super::gso::IntegralGso;
use super::{sub_mul_assign, IntegerLattice};
use crate::error::{domain, Result};

/// Which arithmetic steers the reduction. The integer rows are always
/// updated exactly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LllArithmetic {
    /// Exact for small inputs, floating-point Gram-Schmidt otherwise.
    #[default]
    Auto,
    /// Fraction-free integer Gram-Schmidt throughout.
    Exact,
    /// Extended-exponent floating-point Gram-Schmidt.
    Float,
}

#[derive(Clone, Debug)]
pub struct LllConfig {
    pub delta: BigRational,
    pub arithmetic: LllArithmetic,
}

impl Default for LllConfig {
    fn default() -> Self {
        Self { delta: BigRational::new(99.into(), 100.into()), arithmetic: LllArithmetic::Auto }
    }
}

/// Largest `rows * bit_size` handled exactly under [`LllArithmetic::Auto`].
const AUTO_EXACT_BUDGET: u64 = 1500;

impl LllConfig {
    pub fn with_arithmetic(arithmetic: LllArithmetic) -> Self {
        Self { arithmetic, ..Self::default() }
    }

    pub(crate) fn resolve(&self, basis: &IntegerLattice) -> LllArithmetic {
        match self.arithmetic {
            LllArithmetic::Auto => {
                let bits = basis.rows().iter().flatten().map(|x| x.bits()).max().unwrap_or(0);
                if basis.num_rows() as u64 * bits.max(1) <= AUTO_EXACT_BUDGET {
                    LllArithmetic::Exact
                } else {
                    LllArithmetic::Float
                }
            }
            a => a,
        }
    }
}

fn check_delta(delta: &BigRational) -> Result<()> {
    let quarter = BigRational::new(1.into(), 4.into());
    if *delta <= quarter || *delta >= BigRational::one() {
        return Err(domain(format!("LLL parameter {delta} must lie in (1/4, 1)")));
    }
    Ok(())
}

/// LLL-reduces a full-rank basis with parameter `delta`.
pub fn lll_reduce(basis: &IntegerLattice, delta: &BigRational) -> Result<IntegerLattice> {
    let cfg = LllConfig { delta: delta.clone(), arithmetic: LllArithmetic::Auto };
    lll_reduce_with(basis, &cfg)
}

pub fn lll_reduce_with(basis: &IntegerLattice, cfg: &LllConfig) -> Result<IntegerLattice> {
    match cfg.resolve(basis) {
        LllArithmetic::Float => lll_reduce_fp(basis, &cfg.delta),
        _ => lll_reduce_exact(basis, &cfg.delta),
    }
}

/// Integral LLL: every Gram-Schmidt quantity is kept as an exact integer
/// (`d_i` and `lambda_ij`), so the output satisfies size reduction and the
/// Lovász condition exactly.
pub fn lll_reduce_exact(basis: &IntegerLattice, delta: &BigRational) -> Result<IntegerLattice> {
    check_delta(delta)?;
    let n = basis.num_rows();
    if n <= 1 {
        return Ok(basis.clone());
    }
    let IntegralGso { mut d, mut lambda } = IntegralGso::compute(basis)?;
    let mut b = basis.rows().to_vec();
    let (da, db) = (delta.numer().clone(), delta.denom().clone());

    let redi = |b: &mut Vec<Vec<BigInt>>, lambda: &mut Vec<Vec<BigInt>>, d: &[BigInt], k: usize, l: usize| {
        let twice: BigInt = lambda[k][l].abs() << 1u32;
        if twice <= d[l + 1] {
            return;
        }
        let q = round_div(&lambda[k][l], &d[l + 1]);
        let (head, tail) = b.split_at_mut(k);
        sub_mul_assign(&mut tail[0], &head[l], &q);
        let (lhead, ltail) = lambda.split_at_mut(k);
        let lk = &mut ltail[0];
        lk[l] -= &q * &d[l + 1];
        for i in 0..l {
            lk[i] -= &q * &lhead[l][i];
        }
    };

    let mut k = 1;
    while k < n {
        redi(&mut b, &mut lambda, &d, k, k - 1);
        let lam = &lambda[k][k - 1];
        let lhs = &db * &d[k + 1] * &d[k - 1];
        let rhs = &da * &d[k] * &d[k] - &db * lam * lam;
        if lhs < rhs {
            swap_step(&mut b, &mut lambda, &mut d, k);
            k = (k - 1).max(1);
        } else {
            for l in (0..k - 1).rev() {
                redi(&mut b, &mut lambda, &d, k, l);
            }
            k += 1;
        }
    }
    Ok(basis.with_rows(b))
}

fn swap_step(b: &mut [Vec<BigInt>], lambda: &mut [Vec<BigInt>], d: &mut [BigInt], k: usize) {
    let n = b.len();
    b.swap(k, k - 1);
    for j in 0..k - 1 {
        let tmp = std::mem::take(&mut lambda[k][j]);
        lambda[k][j] = std::mem::replace(&mut lambda[k - 1][j], tmp);
    }
    let lam = lambda[k][k - 1].clone();
    let big_b = (&d[k - 1] * &d[k + 1] + &lam * &lam) / &d[k];
    for row in lambda.iter_mut().take(n).skip(k + 1) {
        let t = row[k].clone();
        row[k] = (&d[k + 1] * &row[k - 1] - &lam * &t) / &d[k];
        row[k - 1] = (&big_b * &t + &lam * &row[k]) / &d[k + 1];
    }
    d[k] = big_b;
}

/// Nearest integer to `a / b` for `b > 0`.
pub(crate) fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    let twice: BigInt = a << 1u32;
    (twice + b).div_floor(&(b << 1u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::gso::gram_schmidt;
    use crate::observe::seeded_rng;
    use num_traits::Zero;
    use rand::Rng;

    fn assert_lll_reduced(l: &IntegerLattice, delta: &BigRational) {
        assert_reduced_with(l, delta, &BigRational::new(1.into(), 2.into()));
    }

    fn assert_reduced_with(l: &IntegerLattice, delta: &BigRational, eta: &BigRational) {
        let g = gram_schmidt(l).unwrap();
        for i in 0..l.num_rows() {
            for j in 0..i {
                assert!(g.mu[i][j].abs() <= *eta, "size reduction fails at ({i},{j})");
            }
            if i > 0 {
                let m = &g.mu[i][i - 1];
                assert!(g.sq_norms[i] >= (delta - m * m) * &g.sq_norms[i - 1], "Lovász fails at {i}");
            }
        }
    }

    fn gram_det(l: &IntegerLattice) -> BigInt {
        IntegralGso::compute(l).unwrap().d.last().unwrap().clone()
    }

    fn random_basis(n: usize, range: i64, seed: u64) -> IntegerLattice {
        let mut rng = seeded_rng(seed);
        loop {
            let rows = (0..n)
                .map(|_| (0..n).map(|_| BigInt::from(rng.gen_range(-range..=range))).collect())
                .collect();
            let l = IntegerLattice::from_rows(rows).unwrap();
            if IntegralGso::compute(&l).is_ok() {
                return l;
            }
        }
    }

    fn delta() -> BigRational {
        LllConfig::default().delta
    }

    #[test]
    fn orthogonal_basis_unchanged() {
        let l = IntegerLattice::from_i64_rows(&[&[2, 0, 0], &[0, 3, 0], &[0, 0, 5]]).unwrap();
        let r = lll_reduce_exact(&l, &delta()).unwrap();
        assert_eq!(r, l);
    }

    #[test]
    fn two_dimensional_example() {
        let l = IntegerLattice::from_i64_rows(&[&[1, 0], &[4, 1]]).unwrap();
        let r = lll_reduce_exact(&l, &delta()).unwrap();
        let norms: Vec<BigInt> = r.rows().iter().map(|v| crate::lattice::sq_norm(v)).collect();
        assert!(norms.iter().all(|n| *n <= BigInt::from(2)));
        assert!(norms.contains(&BigInt::from(1)));
    }

    #[test]
    fn rejects_bad_delta() {
        let l = IntegerLattice::identity(2);
        assert!(lll_reduce(&l, &BigRational::new(1.into(), 4.into())).is_err());
        assert!(lll_reduce(&l, &BigRational::new(1.into(), 1.into())).is_err());
    }

    #[test]
    fn volume_preserved_on_random_bases() {
        for seed in 0..100 {
            let l = random_basis(6, 50, seed);
            let r = lll_reduce_exact(&l, &delta()).unwrap();
            assert_eq!(gram_det(&l), gram_det(&r), "seed {seed}");
            assert_lll_reduced(&r, &delta());
        }
    }

    #[test]
    fn float_and_exact_both_reduce_knapsacks() {
        for seed in 0..20 {
            let mut rng = seeded_rng(seed);
            // knapsack-like basis with large entries
            let n = 8;
            let mut rows = vec![];
            for i in 0..n {
                let mut r = vec![BigInt::zero(); n + 1];
                r[i] = BigInt::one();
                r[n] = BigInt::from(rng.gen::<u64>()) << 40u32;
                rows.push(r);
            }
            let mut last = vec![BigInt::zero(); n + 1];
            last[n] = BigInt::from(rng.gen::<u64>() | 1) << 41u32;
            rows.push(last);
            let l = IntegerLattice::from_rows(rows).unwrap();
            let lf = lll_reduce_fp(&l, &delta()).unwrap();
            let le = lll_reduce_exact(&l, &delta()).unwrap();
            assert_eq!(gram_det(&l), gram_det(&lf));
            assert_eq!(gram_det(&l), gram_det(&le));
            assert_lll_reduced(&le, &delta());
            // float steering guarantees slightly weaker constants
            let eta = BigRational::new(51.into(), 100.into());
            assert_reduced_with(&lf, &BigRational::new(98.into(), 100.into()), &eta);
        }
    }
}
