//! Integer-lattice toolkit: Gram-Schmidt, LLL reduction, Babai's nearest
//! plane, exact CVP by enumeration, and volumes.
//!
//! Lattices are stored as integer row bases together with a scale `q`; the
//! rational lattice they stand for is `(1/q)` times the integer one. All
//! reductions operate on the integer rows, so the generated lattice is
//! preserved exactly regardless of the arithmetic used to steer them.

mod cvp;
pub mod extfloat;
mod fplll;
mod gso;
mod lll;
pub(crate) mod volume;

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, Error, Result};
use crate::fpcore::parse_int;

pub use cvp::{babai_nearest_plane, cvp_exact, cvp_exact_with, CvpConfig, CvpSolution};
pub use fplll::{lll_reduce_fp, FpGso};
pub use gso::{gram_schmidt, GramSchmidt, IntegralGso};
pub use lll::{lll_reduce, lll_reduce_exact, lll_reduce_with, LllArithmetic, LllConfig};
pub use volume::{hermite_basis, lattice_volume, solve_coefficients, Volume};

pub(crate) use lll::round_div;

/// Rows of integers plus the scale relating them to a rational lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerLattice {
    rows: Vec<Vec<BigInt>>,
    scale: BigInt,
}

impl IntegerLattice {
    pub fn new(rows: Vec<Vec<BigInt>>, scale: BigInt) -> Result<Self> {
        if scale < BigInt::one() {
            return Err(domain("lattice scale must be at least 1"));
        }
        if let Some(first) = rows.first() {
            let width = first.len();
            if let Some(bad) = rows.iter().find(|r| r.len() != width) {
                return Err(Error::DimensionMismatch { expected: width, got: bad.len() });
            }
        }
        Ok(Self { rows, scale })
    }

    /// Rows with unit scale.
    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        Self::new(rows, BigInt::one())
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        Self { rows, scale: BigInt::one() }
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<BigInt>> {
        self.rows
    }

    pub fn scale(&self) -> &BigInt {
        &self.scale
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Ambient dimension (number of columns).
    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn is_square(&self) -> bool {
        self.num_rows() == self.dim()
    }

    pub(crate) fn with_rows(&self, rows: Vec<Vec<BigInt>>) -> Self {
        Self { rows, scale: self.scale.clone() }
    }

    /// Exact Gram matrix `B B^T`.
    pub fn gram_matrix(&self) -> Vec<Vec<BigInt>> {
        let n = self.num_rows();
        let mut g = vec![vec![BigInt::zero(); n]; n];
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&self.rows[i], &self.rows[j]);
                g[j][i] = v.clone();
                g[i][j] = v;
            }
        }
        g
    }

    /// Keeps only the given columns (orthogonal projection onto them).
    pub fn project_columns(&self, cols: std::ops::Range<usize>) -> Self {
        let rows = self.rows.iter().map(|r| r[cols.clone()].to_vec()).collect();
        self.with_rows(rows)
    }

    /// Whether `v` is an integer combination of the rows (exact).
    pub fn contains(&self, v: &[BigInt]) -> Result<bool> {
        Ok(solve_coefficients(self, v)?.is_some())
    }

    /// `s scale` header, then one whitespace-separated row per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.dim(), self.scale);
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) =
            lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 2 {
            return Err(Error::Parse { line: hline, msg: "header must be `s scale`".into() });
        }
        let s: usize = head[0]
            .parse()
            .map_err(|e| Error::Parse { line: hline, msg: format!("bad dimension: {e}") })?;
        let scale = parse_int(head[1], hline)?;
        let mut rows = Vec::new();
        for (line, l) in lines {
            let row = l.split_whitespace().map(|x| parse_int(x, line)).collect::<Result<Vec<_>>>()?;
            if row.len() != s {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {s} entries, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        Self::new(rows, scale)
    }
}

pub(crate) fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).fold(BigInt::zero(), |acc, (x, y)| acc + x * y)
}

#[cfg(test)]
pub(crate) fn sq_norm(a: &[BigInt]) -> BigInt {
    a.iter().fold(BigInt::zero(), |acc, x| acc + x * x)
}

/// `a -= q * b`, elementwise.
pub(crate) fn sub_mul_assign(a: &mut [BigInt], b: &[BigInt], q: &BigInt) {
    if q.is_zero() {
        return;
    }
    if q.is_one() {
        for (x, y) in a.iter_mut().zip(b) {
            *x -= y;
        }
    } else if (-q).is_one() {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
    } else if let Some(qs) = q.to_i64() {
        let mut t = BigInt::zero();
        for (x, y) in a.iter_mut().zip(b) {
            if !y.is_zero() {
                t.clone_from(y);
                t *= qs;
                *x -= &t;
            }
        }
    } else {
        for (x, y) in a.iter_mut().zip(b) {
            if !y.is_zero() {
                *x -= y * q;
            }
        }
    }
}

/// Round half to even for exact rationals.
pub(crate) fn round_rational(x: &BigRational) -> BigInt {
    let two = BigInt::from(2);
    let num = x.numer() * &two + x.denom();
    let den = x.denom() * &two;
    // floor(x + 1/2)
    let fl = num.div_floor(&den);
    let is_tie = (x.numer() * &two).mod_floor(&den) == *x.denom();
    if is_tie && fl.is_odd() {
        fl - 1
    } else {
        fl
    }
}
