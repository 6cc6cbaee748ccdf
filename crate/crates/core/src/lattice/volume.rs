use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::gso::IntegralGso;
use super::{sub_mul_assign, IntegerLattice};
use crate::error::{Error, Result};

/// Extra binary digits carried by a non-exact square root; the relative
/// width of the enclosure is below `2^-EXTRA_BITS` (about 1e-33).
const EXTRA_BITS: u64 = 110;

/// Volume of a lattice: exact when the Gram determinant is a rational
/// square, otherwise a certified enclosure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Volume {
    Exact(BigRational),
    Enclosure { lower: BigRational, upper: BigRational },
}

impl Volume {
    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Volume::Exact(v) => Some(v),
            Volume::Enclosure { .. } => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Volume::Exact(v) => v.to_f64().unwrap_or(f64::INFINITY),
            Volume::Enclosure { lower, .. } => lower.to_f64().unwrap_or(f64::INFINITY),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Volume::Exact(v) if v.is_zero())
    }
}

impl fmt::Display for Volume {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Volume::Exact(v) => write!(f, "{v}"),
            Volume::Enclosure { lower, upper } => write!(f, "[{lower}, {upper}]"),
        }
    }
}

/// Row-echelon (Hermite) basis of the lattice generated by the rows,
/// with zero rows removed.
pub fn hermite_basis(gens: &IntegerLattice) -> IntegerLattice {
    let mut rows: Vec<Vec<BigInt>> = gens.rows().to_vec();
    let ncols = gens.dim();
    let mut pivot_row = 0;
    for col in 0..ncols {
        if pivot_row >= rows.len() {
            break;
        }
        loop {
            let best = (pivot_row..rows.len())
                .filter(|&r| !rows[r][col].is_zero())
                .min_by_key(|&r| rows[r][col].abs());
            let Some(best) = best else { break };
            rows.swap(pivot_row, best);
            let mut done = true;
            for r in pivot_row + 1..rows.len() {
                if rows[r][col].is_zero() {
                    continue;
                }
                let q = rows[r][col].div_floor(&rows[pivot_row][col]);
                let (head, tail) = rows.split_at_mut(r);
                sub_mul_assign(&mut tail[0], &head[pivot_row], &q);
                if !rows[r][col].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if pivot_row < rows.len() && !rows[pivot_row][col].is_zero() {
            if rows[pivot_row][col].is_negative() {
                for x in rows[pivot_row].iter_mut() {
                    *x = -&*x;
                }
            }
            for r in 0..pivot_row {
                let q = rows[r][col].div_floor(&rows[pivot_row][col]);
                let (head, tail) = rows.split_at_mut(pivot_row);
                sub_mul_assign(&mut head[r], &tail[0], &q);
            }
            pivot_row += 1;
        }
    }
    rows.truncate(pivot_row);
    gens.with_rows(rows)
}

/// `sqrt(det(B B^T))` of a basis of the generated lattice, divided by
/// `scale^rank` so the value refers to the rational lattice.
pub fn lattice_volume(gens: &IntegerLattice) -> Volume {
    let basis = match IntegralGso::compute(gens) {
        Ok(_) => gens.clone(),
        Err(_) => hermite_basis(gens),
    };
    if basis.num_rows() == 0 {
        log::warn!("volume of the zero lattice requested");
        return Volume::Exact(BigRational::zero());
    }
    let rank = basis.num_rows() as u32;
    let gram_det = IntegralGso::compute(&basis)
        .expect("hermite basis rows are independent")
        .d
        .pop()
        .unwrap();
    let denom = num_traits::pow(basis.scale().clone(), rank as usize);
    let root = gram_det.sqrt();
    if &root * &root == gram_det {
        return Volume::Exact(BigRational::new(root, denom));
    }
    let shifted: BigInt = gram_det << (2 * EXTRA_BITS);
    let lo = shifted.sqrt();
    let unit = &denom << EXTRA_BITS;
    Volume::Enclosure {
        lower: BigRational::new(lo.clone(), unit.clone()),
        upper: BigRational::new(lo + 1u32, unit),
    }
}

/// Integer coefficients `x` with `x B = v` for linearly independent rows
/// `B`, or `None` when `v` is not in the lattice.
pub fn solve_coefficients(basis: &IntegerLattice, v: &[BigInt]) -> Result<Option<Vec<BigInt>>> {
    let m = basis.dim();
    if v.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: v.len() });
    }
    let basis = match IntegralGso::compute(basis) {
        Ok(_) => basis.clone(),
        Err(_) => {
            // Overcomplete: answer membership against the Hermite basis.
            let h = hermite_basis(basis);
            return Ok(solve_coefficients(&h, v)?.map(|_| Vec::new()));
        }
    };
    let n = basis.num_rows();
    // Augmented system B^T x = v^T, one equation per column.
    let mut a: Vec<Vec<BigRational>> = (0..m)
        .map(|c| {
            let mut row: Vec<BigRational> =
                (0..n).map(|r| BigRational::from_integer(basis.rows()[r][c].clone())).collect();
            row.push(BigRational::from_integer(v[c].clone()));
            row
        })
        .collect();
    let mut pivots = Vec::with_capacity(n);
    let mut prow = 0;
    for col in 0..n {
        let Some(sel) = (prow..m).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(prow, sel);
        let inv = a[prow][col].recip();
        for x in a[prow].iter_mut() {
            *x *= &inv;
        }
        for r in 0..m {
            if r != prow && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot = a[prow].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(col);
        prow += 1;
    }
    if a[prow..].iter().any(|row| !row[n].is_zero()) {
        return Ok(None);
    }
    let mut x = vec![BigInt::zero(); n];
    for (r, &col) in pivots.iter().enumerate() {
        let val = &a[r][n];
        if !val.is_integer() {
            return Ok(None);
        }
        x[col] = val.to_integer();
    }
    Ok(Some(x))
}

/// Exact determinant of a square rational matrix (Gaussian elimination).
pub(crate) fn rational_det(mut a: Vec<Vec<BigRational>>) -> BigRational {
    let n = a.len();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(sel) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if sel != col {
            a.swap(sel, col);
            det = -det;
        }
        let piv = a[col][col].clone();
        det *= &piv;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &piv;
            let prow = a[col].clone();
            for (x, y) in a[r].iter_mut().zip(&prow).skip(col) {
                *x -= &f * y;
            }
        }
    }
    det
}
