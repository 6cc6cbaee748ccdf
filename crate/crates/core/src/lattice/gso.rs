use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{dot, IntegerLattice};
use crate::error::{Error, Result};

/// Exact Gram-Schmidt data: `b_i = b*_i + sum_{j<i} mu[i][j] b*_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramSchmidt {
    pub ortho: Vec<Vec<BigRational>>,
    pub mu: Vec<Vec<BigRational>>,
    pub sq_norms: Vec<BigRational>,
}

/// Exact rational Gram-Schmidt orthogonalisation of the rows.
pub fn gram_schmidt(basis: &IntegerLattice) -> Result<GramSchmidt> {
    let n = basis.num_rows();
    let mut ortho: Vec<Vec<BigRational>> = Vec::with_capacity(n);
    let mut sq_norms: Vec<BigRational> = Vec::with_capacity(n);
    let mut mu = vec![vec![BigRational::zero(); n]; n];
    for (i, row) in basis.rows().iter().enumerate() {
        let b: Vec<BigRational> = row.iter().map(|x| BigRational::from_integer(x.clone())).collect();
        let mut v = b.clone();
        for j in 0..i {
            let m = rdot(&b, &ortho[j]) / &sq_norms[j];
            for (x, y) in v.iter_mut().zip(&ortho[j]) {
                *x -= &m * y;
            }
            mu[i][j] = m;
        }
        mu[i][i] = BigRational::one();
        let nsq = rdot(&v, &v);
        if nsq.is_zero() {
            return Err(Error::RankDeficient { row: i });
        }
        ortho.push(v);
        sq_norms.push(nsq);
    }
    Ok(GramSchmidt { ortho, mu, sq_norms })
}

fn rdot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
}

/// Fraction-free Gram-Schmidt: `d[i+1] = prod_{j<=i} |b*_j|^2` (with
/// `d[0] = 1`) and `lambda[i][j] = d[j+1] * mu[i][j]`, all integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegralGso {
    pub d: Vec<BigInt>,
    pub lambda: Vec<Vec<BigInt>>,
}

impl IntegralGso {
    pub fn compute(basis: &IntegerLattice) -> Result<Self> {
        let rows = basis.rows();
        let n = rows.len();
        let mut d = vec![BigInt::one(); n + 1];
        let mut lambda = vec![vec![BigInt::zero(); n]; n];
        for k in 0..n {
            for j in 0..=k {
                let mut u = dot(&rows[k], &rows[j]);
                for i in 0..j {
                    u = (&d[i + 1] * u - &lambda[k][i] * &lambda[j][i]) / &d[i];
                }
                if j < k {
                    lambda[k][j] = u;
                } else {
                    if u.is_zero() {
                        return Err(Error::RankDeficient { row: k });
                    }
                    d[k + 1] = u;
                }
            }
        }
        Ok(Self { d, lambda })
    }

    /// `|b*_i|^2` as an exact rational.
    pub fn sq_norm(&self, i: usize) -> BigRational {
        BigRational::new(self.d[i + 1].clone(), self.d[i].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn identity_is_fixed() {
        let g = gram_schmidt(&IntegerLattice::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { q(1, 1) } else { q(0, 1) };
                assert_eq!(g.ortho[i][j], e);
                assert_eq!(g.mu[i][j], e);
            }
        }
    }

    #[test]
    fn hand_example() {
        let l = IntegerLattice::from_i64_rows(&[&[1, 1], &[0, 2]]).unwrap();
        let g = gram_schmidt(&l).unwrap();
        assert_eq!(g.ortho[0], vec![q(1, 1), q(1, 1)]);
        assert_eq!(g.ortho[1], vec![q(-1, 1), q(1, 1)]);
        assert_eq!(g.mu[1][0], q(1, 1));
    }

    #[test]
    fn rank_deficiency_names_row() {
        let l = IntegerLattice::from_i64_rows(&[&[1, 2, 3], &[0, 1, 1], &[2, 5, 7]]).unwrap();
        assert!(matches!(gram_schmidt(&l), Err(Error::RankDeficient { row: 2 })));
        assert!(matches!(IntegralGso::compute(&l), Err(Error::RankDeficient { row: 2 })));
    }

    #[test]
    fn integral_matches_rational() {
        let l = IntegerLattice::from_i64_rows(&[&[3, -1, 4, 1], &[5, 9, -2, 6], &[5, 3, 5, -8], &[9, 7, 9, 3]])
            .unwrap();
        let g = gram_schmidt(&l).unwrap();
        let ig = IntegralGso::compute(&l).unwrap();
        for i in 0..4 {
            assert_eq!(ig.sq_norm(i), g.sq_norms[i]);
            for j in 0..i {
                let mu = BigRational::new(ig.lambda[i][j].clone(), ig.d[j + 1].clone());
                assert_eq!(mu, g.mu[i][j]);
            }
        }
    }
}
