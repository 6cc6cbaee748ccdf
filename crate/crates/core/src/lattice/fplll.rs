//! LLL steered by floating-point Gram-Schmidt (the L^2 strategy): the basis
//! and its Gram matrix are kept as exact integers, and Gram-Schmidt
//! coefficients are recomputed from the exact Gram matrix in
//! [`ExtFloat`] whenever a row is size-reduced. Lazy size reduction loops
//! until the recomputed coefficients are all below `ETA`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::extfloat::ExtFloat;
use super::{dot, sub_mul_assign, IntegerLattice};
use crate::error::{domain, Error, Result};

/// Size-reduction threshold; slightly above 1/2 to absorb rounding.
pub(crate) const ETA: f64 = 0.51;
const MAX_SIZE_REDUCTION_PASSES: usize = 200;

struct State {
    b: Vec<Vec<BigInt>>,
    g: Vec<Vec<BigInt>>,
    r: Vec<Vec<ExtFloat>>,
    mu: Vec<Vec<ExtFloat>>,
    s: Vec<ExtFloat>,
}

impl State {
    fn new(rows: Vec<Vec<BigInt>>) -> Self {
        let n = rows.len();
        let mut g = vec![vec![BigInt::zero(); n]; n];
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&rows[i], &rows[j]);
                g[j][i] = v.clone();
                g[i][j] = v;
            }
        }
        State {
            b: rows,
            g,
            r: vec![vec![ExtFloat::ZERO; n]; n],
            mu: vec![vec![ExtFloat::ZERO; n]; n],
            s: vec![ExtFloat::ZERO; n + 1],
        }
    }

    /// Recomputes row `k` of `r`/`mu` from the exact Gram matrix.
    fn recompute_row(&mut self, k: usize) {
        for j in 0..k {
            let mut acc = ExtFloat::from_bigint(&self.g[k][j]);
            for l in 0..j {
                acc = acc - self.mu[j][l] * self.r[k][l];
            }
            self.r[k][j] = acc;
            self.mu[k][j] = acc / self.r[j][j];
        }
    }

    /// `b_k -= x * b_j` on the basis and the exact Gram matrix.
    fn row_op(&mut self, k: usize, j: usize, x: &BigInt) {
        let n = self.b.len();
        let x2 = x * x;
        let gkk = &self.g[k][k] - ((x * &self.g[k][j]) << 1u32) + &x2 * &self.g[j][j];
        let (gk, gj) = pair_mut(&mut self.g, k, j);
        sub_mul_assign(gk, gj, x);
        gk[k] = gkk;
        for i in 0..n {
            if i != k {
                let (gi, gk) = pair_mut(&mut self.g, i, k);
                gi[k].clone_from(&gk[i]);
            }
        }
        let (bk, bj) = pair_mut(&mut self.b, k, j);
        sub_mul_assign(bk, bj, x);
    }

    fn size_reduce(&mut self, k: usize) -> Result<()> {
        for _ in 0..MAX_SIZE_REDUCTION_PASSES {
            self.recompute_row(k);
            let reduced = (0..k).all(|j| self.mu[k][j].abs().to_f64() <= ETA);
            if reduced {
                self.s[0] = ExtFloat::from_bigint(&self.g[k][k]);
                for j in 0..k {
                    self.s[j + 1] = self.s[j] - self.mu[k][j] * self.r[k][j];
                }
                self.r[k][k] = self.s[k];
                return Ok(());
            }
            for j in (0..k).rev() {
                let x = self.mu[k][j].round_to_bigint();
                if x.is_zero() {
                    continue;
                }
                let xf = ExtFloat::from_bigint(&x);
                for l in 0..j {
                    self.mu[k][l] = self.mu[k][l] - xf * self.mu[j][l];
                }
                self.row_op(k, j, &x);
            }
        }
        Err(Error::Precision(format!("size reduction of row {k} does not settle")))
    }

    /// Moves row `from` down to position `to` (`to <= from`).
    fn rotate(&mut self, to: usize, from: usize) {
        self.b[to..=from].rotate_right(1);
        self.g[to..=from].rotate_right(1);
        for row in self.g.iter_mut() {
            row[to..=from].rotate_right(1);
        }
        let (rrow, murow) = (self.r[from].clone(), self.mu[from].clone());
        for j in 0..to {
            self.r[to][j] = rrow[j];
            self.mu[to][j] = murow[j];
        }
        self.r[to][to] = self.s[to];
    }
}

/// Mutable row `a` next to shared row `b` (`a != b`).
fn pair_mut<T>(rows: &mut [T], a: usize, b: usize) -> (&mut T, &T) {
    if a > b {
        let (head, tail) = rows.split_at_mut(a);
        (&mut tail[0], &head[b])
    } else {
        let (head, tail) = rows.split_at_mut(b);
        (&mut head[a], &tail[0])
    }
}

/// LLL reduction with floating-point Gram-Schmidt over exact integer rows.
pub fn lll_reduce_fp(basis: &IntegerLattice, delta: &BigRational) -> Result<IntegerLattice> {
    let delta_f = delta.to_f64().ok_or_else(|| domain("LLL parameter not representable"))?;
    if !(0.25 < delta_f && delta_f < 1.0) {
        return Err(domain(format!("LLL parameter {delta} must lie in (1/4, 1)")));
    }
    let n = basis.num_rows();
    if n <= 1 {
        return Ok(basis.clone());
    }
    let delta_f = ExtFloat::from_f64(delta_f);
    let mut st = State::new(basis.rows().to_vec());
    st.r[0][0] = ExtFloat::from_bigint(&st.g[0][0]);
    if st.r[0][0].is_zero() {
        return Err(Error::RankDeficient { row: 0 });
    }
    let mut k = 1;
    let mut steps: u64 = 0;
    while k < n {
        steps += 1;
        st.size_reduce(k)?;
        let mut kp = k;
        while kp >= 1 && delta_f * st.r[kp - 1][kp - 1] > st.s[kp - 1] {
            kp -= 1;
        }
        if st.s[kp] <= ExtFloat::ZERO {
            return Err(Error::Precision(format!("non-positive squared norm at row {k}")));
        }
        if kp < k {
            st.rotate(kp, k);
        }
        k = kp + 1;
    }
    log::debug!("fp-LLL: {n} rows reduced in {steps} steps");
    Ok(basis.with_rows(st.b))
}

/// Floating-point Gram-Schmidt of an (ideally reduced) basis, kept next to
/// the exact rows for nearest-plane rounding.
#[derive(Clone, Debug)]
pub struct FpGso {
    rows: Vec<Vec<BigInt>>,
    r_diag: Vec<ExtFloat>,
    mu: Vec<Vec<ExtFloat>>,
}

impl FpGso {
    pub fn compute(basis: &IntegerLattice) -> Result<Self> {
        let n = basis.num_rows();
        let mut st = State::new(basis.rows().to_vec());
        for k in 0..n {
            st.recompute_row(k);
            let mut s = ExtFloat::from_bigint(&st.g[k][k]);
            for j in 0..k {
                s = s - st.mu[k][j] * st.r[k][j];
            }
            if s <= ExtFloat::ZERO {
                return Err(Error::RankDeficient { row: k });
            }
            st.r[k][k] = s;
            st.mu[k][k] = ExtFloat::from_f64(1.0);
        }
        let r_diag = (0..n).map(|i| st.r[i][i]).collect();
        Ok(Self { rows: st.b, r_diag, mu: st.mu })
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    /// `|b*_i|^2`.
    pub fn sq_norms(&self) -> &[ExtFloat] {
        &self.r_diag
    }

    /// `mu[i][j]` for `j < i`.
    pub fn mu(&self, i: usize, j: usize) -> ExtFloat {
        self.mu[i][j]
    }

    /// Gram-Schmidt coordinates `<t, b*_j> / |b*_j|^2` of an arbitrary vector.
    pub fn project(&self, t: &[BigInt]) -> Vec<ExtFloat> {
        let n = self.rows.len();
        let mut r = vec![ExtFloat::ZERO; n];
        let mut y = vec![ExtFloat::ZERO; n];
        for j in 0..n {
            let mut acc = ExtFloat::from_bigint(&dot(t, &self.rows[j]));
            for l in 0..j {
                acc = acc - self.mu[j][l] * r[l];
            }
            r[j] = acc;
            y[j] = acc / self.r_diag[j];
        }
        y
    }

    /// Nearest-plane rounding of `t`: returns integer coefficients `x` such
    /// that `t - sum x_j b_j` has every Gram-Schmidt coordinate in
    /// `[-ETA, ETA]`. Iterates until the recomputed coordinates settle.
    pub fn nearest_plane(&self, t: &[BigInt]) -> Result<Vec<BigInt>> {
        let n = self.rows.len();
        let mut w = t.to_vec();
        let mut coeffs = vec![BigInt::zero(); n];
        for _ in 0..MAX_SIZE_REDUCTION_PASSES {
            let mut y = self.project(&w);
            if y.iter().all(|v| v.abs().to_f64() <= ETA) {
                return Ok(coeffs);
            }
            for j in (0..n).rev() {
                let x = y[j].round_to_bigint();
                if x.is_zero() {
                    continue;
                }
                let xf = ExtFloat::from_bigint(&x);
                for l in 0..j {
                    y[l] = y[l] - xf * self.mu[j][l];
                }
                sub_mul_assign(&mut w, &self.rows[j], &x);
                coeffs[j] += x;
            }
        }
        Err(Error::Precision("nearest-plane rounding does not settle".into()))
    }
}
