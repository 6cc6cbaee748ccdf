use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::extfloat::ExtFloat;
use super::fplll::FpGso;
use super::gso::IntegralGso;
use super::lll::{lll_reduce_with, round_div, LllArithmetic, LllConfig};
use super::{sub_mul_assign, IntegerLattice};
use crate::error::{Error, Result};

/// Relative slack on the pruning radius so that float rounding never
/// discards a candidate whose exact distance ties the best one.
const PRUNE_SLACK: f64 = 1e-9;

/// Enumeration is skipped outright when the expected number of leaves
/// exceeds the node budget by this many binary orders of magnitude.
const ESTIMATE_SLACK_BITS: f64 = 4.0;

/// `log2` of the volume of the unit ball in dimension `n`.
fn log2_unit_ball(n: usize) -> f64 {
    // Gamma(n/2 + 1) by the recurrence Gamma(x + 1) = x Gamma(x)
    let mut lg = if n % 2 == 0 { 0.0 } else { 0.5 * std::f64::consts::PI.ln() };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x <= n as f64 / 2.0 {
        lg += x.ln();
        x += 1.0;
    }
    (n as f64 / 2.0 * std::f64::consts::PI.ln() - lg) / std::f64::consts::LN_2
}

/// Gaussian-heuristic count of lattice points in the ellipsoid
/// `sum_j r_j (x_j - c_j)^2 <= 1`, as a base-2 logarithm.
fn log2_expected_leaves(r: &[f64]) -> f64 {
    log2_unit_ball(r.len()) - 0.5 * r.iter().map(|x| x.log2()).sum::<f64>()
}

#[derive(Clone, Debug)]
pub struct CvpConfig {
    /// Largest dimension [`cvp_exact`] will enumerate.
    pub enumeration_cap: usize,
    /// Enumeration nodes visited before giving up.
    pub node_budget: u64,
    pub lll: LllConfig,
}

impl Default for CvpConfig {
    fn default() -> Self {
        Self { enumeration_cap: 64, node_budget: 5_000_000, lll: LllConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CvpSolution {
    /// Lattice vector in the integer coordinates of the basis.
    pub vector: Vec<BigInt>,
    /// Squared distance to the target in the rational lattice, i.e. the
    /// integer distance divided by `scale^2`.
    pub sq_distance: BigRational,
    /// `true` when enumeration proved the vector closest.
    pub exact: bool,
}

impl CvpSolution {
    fn new(vector: Vec<BigInt>, target: &[BigInt], scale: &BigInt, exact: bool) -> Self {
        let sq_distance = BigRational::new(int_sq_dist(&vector, target), scale * scale);
        Self { vector, sq_distance, exact }
    }

    /// Coefficients of `vector` with respect to `basis`, by exact solve.
    pub fn coefficients(&self, basis: &IntegerLattice) -> Result<Option<Vec<BigInt>>> {
        super::solve_coefficients(basis, &self.vector)
    }
}

fn int_sq_dist(v: &[BigInt], t: &[BigInt]) -> BigInt {
    v.iter().zip(t).fold(BigInt::zero(), |acc, (a, b)| {
        let d = a - b;
        acc + &d * &d
    })
}

fn check_dim(basis: &IntegerLattice, target: &[BigInt]) -> Result<()> {
    if target.len() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: target.len() });
    }
    Ok(())
}

fn combine(rows: &[Vec<BigInt>], coeffs: &[BigInt], width: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); width];
    for (c, row) in coeffs.iter().zip(rows) {
        sub_mul_assign(&mut v, row, &-c);
    }
    v
}

/// Nearest-plane coefficients with fraction-free integer Gram-Schmidt.
fn nearest_plane_exact(basis: &IntegerLattice, target: &[BigInt]) -> Result<Vec<BigInt>> {
    let IntegralGso { d, lambda } = IntegralGso::compute(basis)?;
    let rows = basis.rows();
    let n = rows.len();
    // lt[j] = d[j] * <t, b*_j>, an integer for integral t
    let mut lt = vec![BigInt::zero(); n];
    for j in 0..n {
        let mut u = super::dot(target, &rows[j]);
        for i in 0..j {
            u = (&d[i + 1] * u - &lt[i] * &lambda[j][i]) / &d[i];
        }
        lt[j] = u;
    }
    let mut coeffs = vec![BigInt::zero(); n];
    for j in (0..n).rev() {
        let c = round_div(&lt[j], &d[j + 1]);
        if c.is_zero() {
            continue;
        }
        lt[j] -= &c * &d[j + 1];
        for i in 0..j {
            lt[i] -= &c * &lambda[j][i];
        }
        coeffs[j] = c;
    }
    Ok(coeffs)
}

fn nearest_plane_coeffs(basis: &IntegerLattice, target: &[BigInt]) -> Result<Vec<BigInt>> {
    match LllConfig::default().resolve(basis) {
        LllArithmetic::Float => FpGso::compute(basis)?.nearest_plane(target),
        _ => nearest_plane_exact(basis, target),
    }
}

/// Babai's nearest-plane vector for a reduced basis; within `2^(s/2)` of
/// the closest distance.
pub fn babai_nearest_plane(reduced: &IntegerLattice, target: &[BigInt]) -> Result<CvpSolution> {
    check_dim(reduced, target)?;
    if reduced.num_rows() == 0 {
        return Ok(CvpSolution::new(vec![BigInt::zero(); target.len()], target, reduced.scale(), false));
    }
    let coeffs = nearest_plane_coeffs(reduced, target)?;
    let v = combine(reduced.rows(), &coeffs, target.len());
    Ok(CvpSolution::new(v, target, reduced.scale(), false))
}

struct Enumerator<'a> {
    rows: &'a [Vec<BigInt>],
    target: &'a [BigInt],
    base: &'a [BigInt],
    /// `|b*_j|^2` normalised by the Babai distance.
    r: Vec<f64>,
    mu: Vec<Vec<f64>>,
    /// Gram-Schmidt coordinates of `target - base`.
    c: Vec<f64>,
    y: Vec<i64>,
    bound: f64,
    babai_dist: ExtFloat,
    best: BigInt,
    best_vectors: Vec<Vec<BigInt>>,
    nodes: u64,
    budget: u64,
}

impl Enumerator<'_> {
    fn leaf(&mut self) {
        let mut v = self.base.to_vec();
        for (yj, row) in self.y.iter().zip(self.rows) {
            if *yj != 0 {
                sub_mul_assign(&mut v, row, &BigInt::from(-yj));
            }
        }
        let dist = int_sq_dist(&v, self.target);
        if dist < self.best {
            self.best = dist;
            self.best_vectors.clear();
            self.best_vectors.push(v);
            let ratio = ExtFloat::from_bigint(&self.best) / self.babai_dist;
            self.bound = ratio.to_f64();
        } else if dist == self.best && !self.best_vectors.contains(&v) {
            self.best_vectors.push(v);
        }
    }

    fn descend(&mut self, j: usize, partial: f64) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::EnumerationBudget { nodes: self.budget });
        }
        let n = self.y.len();
        let mut center = self.c[j];
        for i in j + 1..n {
            center -= self.mu[i][j] * self.y[i] as f64;
        }
        let first = center.round();
        let rj = self.r[j];
        let term = |x: f64| rj * (x - center) * (x - center);
        let (mut up, mut down) = (first + 1.0, first - 1.0);
        let (mut up_open, mut down_open) = (true, true);
        let mut x = first;
        loop {
            let p = partial + term(x);
            if p <= self.bound * (1.0 + PRUNE_SLACK) + f64::MIN_POSITIVE {
                self.y[j] = x as i64;
                if j == 0 {
                    self.nodes += 1;
                    if self.nodes > self.budget {
                        return Err(Error::EnumerationBudget { nodes: self.budget });
                    }
                    self.leaf();
                } else {
                    self.descend(j - 1, p)?;
                }
            } else if x == first {
                break;
            } else if x > center {
                up_open = false;
            } else {
                down_open = false;
            }
            let take_up = match (up_open, down_open) {
                (true, true) => up - center <= center - down,
                (true, false) => true,
                (false, true) => false,
                (false, false) => break,
            };
            if take_up {
                x = up;
                up += 1.0;
            } else {
                x = down;
                down -= 1.0;
            }
        }
        self.y[j] = 0;
        Ok(())
    }
}

/// Exact closest vector: LLL, then Schnorr-Euchner enumeration inside the
/// Babai radius. Ties go to the lexicographically smallest coefficient
/// vector with respect to `basis`.
pub fn cvp_exact(basis: &IntegerLattice, target: &[BigInt]) -> Result<CvpSolution> {
    cvp_exact_with(basis, target, &CvpConfig::default())
}

pub fn cvp_exact_with(basis: &IntegerLattice, target: &[BigInt], cfg: &CvpConfig) -> Result<CvpSolution> {
    check_dim(basis, target)?;
    let n = basis.num_rows();
    if n > cfg.enumeration_cap {
        return Err(Error::EnumerationCap { dim: n, cap: cfg.enumeration_cap });
    }
    if n == 0 {
        return babai_nearest_plane(basis, target);
    }
    let reduced = lll_reduce_with(basis, &cfg.lll)?;
    let gso = FpGso::compute(&reduced)?;
    let coeffs = nearest_plane_coeffs(&reduced, target)?;
    let base = combine(reduced.rows(), &coeffs, target.len());
    let babai = int_sq_dist(&base, target);
    if babai.is_zero() {
        return Ok(CvpSolution::new(base, target, basis.scale(), true));
    }
    let babai_dist = ExtFloat::from_bigint(&babai);
    let residual: Vec<BigInt> = target.iter().zip(&base).map(|(t, b)| t - b).collect();
    let c: Vec<f64> = gso.project(&residual).into_iter().map(ExtFloat::to_f64).collect();
    let r: Vec<f64> = gso
        .sq_norms()
        .iter()
        .map(|&x| (x / babai_dist).to_f64().min(f64::MAX / 4.0))
        .collect();
    let expected = log2_expected_leaves(&r);
    if expected > (cfg.node_budget as f64).log2() + ESTIMATE_SLACK_BITS {
        log::debug!("enumeration skipped: about 2^{expected:.0} leaves expected");
        return Err(Error::EnumerationBudget { nodes: 0 });
    }
    let mu: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| if j < i { gso.mu(i, j).to_f64() } else { 0.0 }).collect()).collect();
    let mut en = Enumerator {
        rows: reduced.rows(),
        target,
        base: &base,
        r,
        mu,
        c,
        y: vec![0; n],
        bound: 1.0,
        babai_dist,
        best: babai,
        best_vectors: vec![base.clone()],
        nodes: 0,
        budget: cfg.node_budget,
    };
    en.descend(n - 1, 0.0)?;
    log::trace!("enumeration visited {} nodes", en.nodes);
    let mut winners = std::mem::take(&mut en.best_vectors);
    let vector = if winners.len() == 1 {
        winners.pop().unwrap()
    } else {
        let mut keyed = winners
            .into_iter()
            .map(|v| {
                let k = super::solve_coefficients(basis, &v)?.unwrap_or_default();
                Ok((k, v))
            })
            .collect::<Result<Vec<_>>>()?;
        keyed.sort();
        keyed.swap_remove(0).1
    };
    Ok(CvpSolution::new(vector, target, basis.scale(), true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observe::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn v(xs: &[i64]) -> Vec<BigInt> {
        xs.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn brute_force(basis: &IntegerLattice, t: &[BigInt], radius: i64) -> BigInt {
        let n = basis.num_rows();
        let mut best: Option<BigInt> = None;
        let mut idx = vec![-radius; n];
        loop {
            let coeffs: Vec<BigInt> = idx.iter().map(|&x| BigInt::from(x)).collect();
            let p = combine(basis.rows(), &coeffs, t.len());
            let d = int_sq_dist(&p, t);
            if best.as_ref().map_or(true, |b| d < *b) {
                best = Some(d);
            }
            let mut k = 0;
            loop {
                if k == n {
                    return best.unwrap();
                }
                idx[k] += 1;
                if idx[k] <= radius {
                    break;
                }
                idx[k] = -radius;
                k += 1;
            }
        }
    }

    fn random_basis(rng: &mut impl Rng, n: usize, range: i64) -> IntegerLattice {
        loop {
            let rows =
                (0..n).map(|_| (0..n).map(|_| BigInt::from(rng.gen_range(-range..=range))).collect()).collect();
            let l = IntegerLattice::from_rows(rows).unwrap();
            if IntegralGso::compute(&l).is_ok() {
                return l;
            }
        }
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((log2_unit_ball(1) - 1.0).abs() < 1e-12);
        assert!((log2_unit_ball(2) - std::f64::consts::PI.log2()).abs() < 1e-12);
        assert!((log2_unit_ball(3) - (4.0 / 3.0 * std::f64::consts::PI).log2()).abs() < 1e-12);
    }

    #[test]
    fn enumeration_refused_when_heuristic_count_exceeds_budget() {
        let l = IntegerLattice::from_i64_rows(&[&[1, 0], &[0, 1_000_000_000]]).unwrap();
        let t = v(&[0, 500_000_000]);
        let cfg = CvpConfig { node_budget: 1000, ..CvpConfig::default() };
        assert!(matches!(cvp_exact_with(&l, &t, &cfg), Err(Error::EnumerationBudget { nodes: 0 })));
    }

    #[test]
    fn scaled_identity_example() {
        let l = IntegerLattice::from_i64_rows(&[&[3, 0], &[0, 3]]).unwrap();
        let t = v(&[1, 2]);
        let e = cvp_exact(&l, &t).unwrap();
        assert_eq!(e.vector, v(&[0, 3]));
        assert_eq!(e.sq_distance, q(2));
        assert!(e.exact);
        let b = babai_nearest_plane(&l, &t).unwrap();
        assert_eq!(b.vector, v(&[0, 3]));
        assert!(!b.exact);
    }

    #[test]
    fn lattice_points_are_fixed() {
        let l = IntegerLattice::from_i64_rows(&[&[5, 1, 0], &[2, -7, 3], &[1, 1, 9]]).unwrap();
        let t = combine(l.rows(), &v(&[3, -2, 4]), 3);
        assert!(cvp_exact(&l, &t).unwrap().sq_distance.is_zero());
        assert_eq!(babai_nearest_plane(&l, &t).unwrap().vector, t);
    }

    #[test]
    fn dimension_mismatch_and_cap() {
        let l = IntegerLattice::identity(3);
        assert!(matches!(cvp_exact(&l, &v(&[1, 2])), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(babai_nearest_plane(&l, &v(&[1])), Err(Error::DimensionMismatch { .. })));
        let cfg = CvpConfig { enumeration_cap: 2, ..CvpConfig::default() };
        assert!(matches!(
            cvp_exact_with(&l, &v(&[1, 2, 3]), &cfg),
            Err(Error::EnumerationCap { dim: 3, cap: 2 })
        ));
    }

    #[test]
    fn diagonal_ties_take_smallest_coefficients() {
        let l = IntegerLattice::from_i64_rows(&[&[2, 0, 0], &[0, 4, 0], &[0, 0, 5]]).unwrap();
        let e = cvp_exact(&l, &v(&[1, -2, 7])).unwrap();
        // 1 ties between 0 and 2, -2 between -4 and 0; 7 is nearest to 5
        assert_eq!(e.vector, v(&[0, -4, 5]));
        assert_eq!(e.coefficients(&l).unwrap(), Some(v(&[0, -1, 1])));
    }

    #[test]
    fn scaled_lattice_distance_is_rational() {
        let l = IntegerLattice::new(vec![v(&[6, 0]), v(&[0, 6])], BigInt::from(2)).unwrap();
        let e = cvp_exact(&l, &v(&[1, 2])).unwrap();
        assert_eq!(e.sq_distance, BigRational::new(5.into(), 4.into()));
    }

    #[test]
    fn matches_brute_force_in_three_dimensions() {
        let mut rng = seeded_rng(31);
        for i in 0..200 {
            let l = random_basis(&mut rng, 3, 50);
            let t = v(&[rng.gen_range(-200..=200), rng.gen_range(-200..=200), rng.gen_range(-200..=200)]);
            let e = cvp_exact(&l, &t).unwrap();
            let oracle = brute_force(&l, &t, 10);
            let got = int_sq_dist(&e.vector, &t);
            // the box may miss the optimum but can never beat it
            assert!(got <= oracle, "instance {i}");
            assert!(e.coefficients(&l).unwrap().is_some(), "instance {i}: not a lattice vector");
        }
    }

    #[test]
    fn babai_within_factor_of_exact() {
        let mut rng = seeded_rng(77);
        for i in 0..100 {
            let l = random_basis(&mut rng, 4, 30);
            let reduced = lll_reduce_with(&l, &LllConfig::default()).unwrap();
            let t: Vec<BigInt> = (0..4).map(|_| BigInt::from(rng.gen_range(-500..=500))).collect();
            let e = cvp_exact(&l, &t).unwrap();
            let b = babai_nearest_plane(&reduced, &t).unwrap();
            assert!(b.sq_distance >= e.sq_distance, "instance {i}");
            // distance ratio 2^(s/2) = 4 means squared ratio 16
            assert!(b.sq_distance <= &e.sq_distance * q(16), "instance {i}");
        }
    }

    #[test]
    fn float_and_exact_nearest_plane_agree() {
        let mut rng = seeded_rng(5);
        for _ in 0..50 {
            let l = random_basis(&mut rng, 5, 1000);
            let r = lll_reduce_with(&l, &LllConfig::default()).unwrap();
            let t: Vec<BigInt> = (0..5).map(|_| BigInt::from(rng.gen_range(-100_000..=100_000))).collect();
            let exact = nearest_plane_exact(&r, &t).unwrap();
            let fp = FpGso::compute(&r).unwrap().nearest_plane(&t).unwrap();
            assert_eq!(exact, fp);
        }
    }

    #[test]
    fn enumeration_beats_babai_on_skewed_basis() {
        let l = IntegerLattice::from_i64_rows(&[&[1, 0, 0, 0], &[0, 1, 0, 0], &[0, 0, 1, 0], &[1, 1, 1, 2]])
            .unwrap();
        let t = v(&[0, 0, 0, 1]);
        // (0,0,0,0) and (1,1,1,2) are at squared distance 1 and 4; half-integers cannot occur
        let e = cvp_exact(&l, &t).unwrap();
        assert_eq!(e.sq_distance, q(1));
    }

    proptest! {
        #[test]
        fn diagonal_cvp_is_per_coordinate(
            diag in proptest::collection::vec(1i64..20, 1..5),
            offs in proptest::collection::vec(-100i64..100, 5),
        ) {
            let n = diag.len();
            let rows: Vec<Vec<BigInt>> = (0..n)
                .map(|i| (0..n).map(|j| BigInt::from(if i == j { diag[i] } else { 0 })).collect())
                .collect();
            let l = IntegerLattice::from_rows(rows).unwrap();
            let t = v(&offs[..n]);
            let e = cvp_exact(&l, &t).unwrap();
            for i in 0..n {
                // nearest multiple, ties toward the smaller coefficient
                let (m, x) = (diag[i], offs[i]);
                let lo = x.div_euclid(m);
                let pick = if 2 * (x - lo * m) <= m { lo } else { lo + 1 };
                prop_assert_eq!(&e.vector[i], &BigInt::from(pick * m));
            }
        }
    }
}
