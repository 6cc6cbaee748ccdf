//! Coefficient recovery from noisy values on a short interval, its
//! approximate variant, and a detector for the small-multiplier structure
//! shared by exceptional polynomials.
//!
//! Both lattices are built with a uniform scale: the rational entries
//! `p`, `t^j mod p`, `2Δ/p` become `p^2`, `p (t^j mod p)`, `2Δ` and the
//! target `u` becomes `p u`. CVP geometry is unchanged by the scaling.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::index::sample;

use crate::error::{domain, Error, Result};
use crate::fpcore::{FpPolynomial, PrimeContext};
use crate::lattice::extfloat::ExtFloat;
use crate::lattice::{
    babai_nearest_plane, cvp_exact_with, lll_reduce_with, CvpConfig, CvpSolution, IntegerLattice,
};
use crate::observe::{observe_all, seeded_rng, NoiseModel, NoisyObservation};

/// Observation points and values for a polynomial supported on `[k..n]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterpolationInstance {
    pub ctx: PrimeContext,
    pub n: usize,
    pub k: usize,
    pub h: i64,
    pub delta: BigInt,
    pub points: Vec<i64>,
    pub observations: Vec<BigInt>,
}

impl InterpolationInstance {
    pub fn new(
        ctx: PrimeContext,
        n: usize,
        k: usize,
        h: i64,
        delta: BigInt,
        points: Vec<i64>,
        observations: Vec<BigInt>,
    ) -> Result<Self> {
        if k > n {
            return Err(domain(format!("support start k = {k} exceeds degree n = {n}")));
        }
        if points.len() != observations.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: observations.len() });
        }
        if delta.is_negative() || &delta >= ctx.p() {
            return Err(domain(format!("Δ = {delta} must lie in [0, p)")));
        }
        let m = n + 1 - k;
        if points.len() < m {
            return Err(domain(format!("{} points cannot determine {m} coefficients", points.len())));
        }
        if points.len() < m + 1 {
            log::warn!("d = {} leaves no redundancy over the {m} unknowns", points.len());
        }
        if let Some(t) = points.iter().find(|t| t.unsigned_abs() > h.unsigned_abs()) {
            return Err(domain(format!("point {t} lies outside [-{h}, {h}]")));
        }
        if let Some(u) = observations.iter().find(|u| u.is_negative() || *u >= ctx.p()) {
            return Err(domain(format!("observation {u} is not a residue")));
        }
        Ok(Self { ctx, n, k, h, delta, points, observations })
    }

    /// Observes `f` at `points`; `n` and `k` are taken from `f`.
    pub fn from_polynomial(
        f: &FpPolynomial,
        h: i64,
        delta: &BigInt,
        points: Vec<i64>,
        noise: NoiseModel,
        seed: u64,
    ) -> Result<Self> {
        let obs = observe_all(f, &points, delta, noise, seed)?;
        let us = obs.into_iter().map(|o| o.u).collect();
        Self::new(f.ctx().clone(), f.degree(), f.support_low(), h, delta.clone(), points, us)
    }

    pub fn d(&self) -> usize {
        self.points.len()
    }

    /// Number of unknown coefficients `n + 1 - k`.
    pub fn m(&self) -> usize {
        self.n + 1 - self.k
    }

    pub fn noisy_observations(&self) -> Vec<NoisyObservation> {
        self.points
            .iter()
            .zip(&self.observations)
            .map(|(&t, u)| NoisyObservation { t, u: u.clone(), delta: self.delta.clone() })
            .collect()
    }
}

/// Scale of the first `d` columns and the diagonal entry of the
/// coefficient columns. With `Δ = 0` the coefficient columns would vanish;
/// they get weight 1 and the value columns a weight large enough that any
/// mismatch costs more than the whole coefficient block.
fn weights(ctx: &PrimeContext, delta: &BigInt, m: usize) -> (BigInt, BigInt) {
    if delta.is_zero() {
        (ctx.p() * BigInt::from(m.max(1)), BigInt::one())
    } else {
        (ctx.p().clone(), delta << 1u32)
    }
}

fn power_lattice(
    ctx: &PrimeContext,
    points: &[i64],
    observations: &[BigInt],
    k: usize,
    n: usize,
    delta: &BigInt,
) -> Result<(IntegerLattice, Vec<BigInt>)> {
    if delta.is_negative() || delta >= ctx.p() {
        return Err(domain(format!("Δ = {delta} must lie in [0, p)")));
    }
    if points.len() != observations.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), got: observations.len() });
    }
    let (d, m) = (points.len(), n + 1 - k);
    let (wf, wl) = weights(ctx, delta, m);
    let p_entry = &wf * ctx.p();
    let mut rows = Vec::with_capacity(d + m);
    for i in 0..d {
        let mut row = vec![BigInt::zero(); d + m];
        row[i] = p_entry.clone();
        rows.push(row);
    }
    let ts: Vec<BigInt> = points.iter().map(|&t| ctx.reduce_i64(t)).collect();
    for j in k..=n {
        let mut row: Vec<BigInt> = ts.iter().map(|t| &wf * ctx.pow(t, j as u64)).collect();
        row.resize(d + m, BigInt::zero());
        row[d + j - k] = wl.clone();
        rows.push(row);
    }
    let mut target: Vec<BigInt> = observations.iter().map(|u| &wf * u).collect();
    target.resize(d + m, BigInt::zero());
    Ok((IntegerLattice::new(rows, wf)?, target))
}

/// The `(d+m)`-dimensional lattice spanned by `p`-vectors and the
/// power-vectors `(t_1^j, ..., t_d^j, 0, .., 2Δ/p, .., 0)` for `j = k..n`,
/// with the target `(u_1, ..., u_d, 0, ..., 0)`.
pub fn build_interpolation_lattice(inst: &InterpolationInstance) -> Result<(IntegerLattice, Vec<BigInt>)> {
    power_lattice(&inst.ctx, &inst.points, &inst.observations, inst.k, inst.n, &inst.delta)
}

/// The same construction with rows for every degree `0..=n`.
pub fn build_approx_lattice(
    ctx: &PrimeContext,
    n: usize,
    delta: &BigInt,
    points: &[i64],
    observations: &[BigInt],
) -> Result<(IntegerLattice, Vec<BigInt>)> {
    if points.len() < n + 1 {
        return Err(domain(format!("need at least {} points, got {}", n + 1, points.len())));
    }
    if points.len() == n + 1 {
        log::warn!("d = n + 1: every residue vector is an interpolant");
    }
    power_lattice(ctx, points, observations, 0, n, delta)
}

/// Lagrange-interpolation basis of the first `d` columns of the
/// approximation lattice (in units of the rational lattice):
/// `[[p I, 0], [M, I]]` after moving `n + 1` interpolation nodes to the
/// last columns. Returns the basis and the column order used
/// (`order[c]` is the original column of column `c`).
pub fn lagrange_form(ctx: &PrimeContext, points: &[i64], n: usize) -> Result<(IntegerLattice, Vec<usize>)> {
    let ts: Vec<BigInt> = points.iter().map(|&t| ctx.reduce_i64(t)).collect();
    let (mut nodes, mut others) = (Vec::new(), Vec::new());
    for (i, t) in ts.iter().enumerate() {
        if nodes.len() <= n && !nodes.iter().any(|&j: &usize| ts[j] == *t) {
            nodes.push(i);
        } else {
            others.push(i);
        }
    }
    if nodes.len() < n + 1 {
        return Err(domain(format!("only {} distinct points modulo p", nodes.len())));
    }
    let d = points.len();
    let order: Vec<usize> = others.iter().chain(&nodes).copied().collect();
    let mut rows = Vec::with_capacity(d);
    for r in 0..others.len() {
        let mut row = vec![BigInt::zero(); d];
        row[r] = ctx.p().clone();
        rows.push(row);
    }
    for (a, &na) in nodes.iter().enumerate() {
        let mut denom = BigInt::one();
        for &nb in &nodes {
            if nb != na {
                denom = ctx.reduce(&(denom * (&ts[na] - &ts[nb])));
            }
        }
        let inv = ctx.mod_inverse(&denom)?;
        let mut row = vec![BigInt::zero(); d];
        for (c, &oc) in others.iter().enumerate() {
            let mut num = inv.clone();
            for &nb in &nodes {
                if nb != na {
                    num = ctx.reduce(&(num * (&ts[oc] - &ts[nb])));
                }
            }
            row[c] = num;
        }
        row[others.len() + a] = BigInt::one();
        rows.push(row);
    }
    Ok((IntegerLattice::from_rows(rows)?, order))
}

/// Exact CVP when the dimension is within the enumeration cap and the node
/// budget suffices, otherwise LLL followed by nearest-plane rounding.
pub fn solve_cvp(lattice: &IntegerLattice, target: &[BigInt], cfg: &CvpConfig) -> Result<CvpSolution> {
    if lattice.num_rows() <= cfg.enumeration_cap {
        match cvp_exact_with(lattice, target, cfg) {
            Err(Error::EnumerationBudget { nodes }) => {
                log::warn!("enumeration budget of {nodes} nodes exhausted, using nearest plane");
            }
            other => return other,
        }
    }
    let reduced = lll_reduce_with(lattice, &cfg.lll)?;
    babai_nearest_plane(&reduced, target)
}

/// LLL on a power lattice with `d` value columns. With `Δ > 0` the
/// reduction runs on the image under the diagonal map that divides value
/// columns by `p / s` and coefficient columns by `2Δ`, where
/// `s = round(p / 2Δ)`: the same lattice up to a column weighting off by
/// less than `1 / s`, with entries about `log2(p / 2Δ)` bits shorter. The
/// reduced rows are mapped back exactly. Power rows go first.
fn reduce_power_lattice(
    lattice: &IntegerLattice,
    d: usize,
    ctx: &PrimeContext,
    delta: &BigInt,
    cfg: &CvpConfig,
) -> Result<IntegerLattice> {
    if delta.is_zero() {
        return lll_reduce_with(lattice, &cfg.lll);
    }
    let two_delta = delta << 1u32;
    let s = crate::lattice::round_div(ctx.p(), &two_delta).max(BigInt::one());
    let rows = lattice.rows();
    let order = (d..rows.len()).chain(0..d);
    let scaled: Vec<Vec<BigInt>> = order
        .map(|i| {
            rows[i]
                .iter()
                .enumerate()
                .map(|(c, x)| if c < d { x / ctx.p() * &s } else { x / &two_delta })
                .collect()
        })
        .collect();
    let reduced = lll_reduce_with(&IntegerLattice::from_rows(scaled)?, &cfg.lll)?;
    let back = reduced
        .into_rows()
        .into_iter()
        .map(|row| {
            row.into_iter()
                .enumerate()
                .map(|(c, x)| if c < d { x / &s * ctx.p() } else { x * &two_delta })
                .collect()
        })
        .collect();
    IntegerLattice::new(back, lattice.scale().clone())
}

/// [`solve_cvp`] for a lattice from [`build_interpolation_lattice`] or
/// [`build_approx_lattice`], with the nearest-plane fallback reduced by
/// [`reduce_power_lattice`].
fn solve_power_cvp(
    lattice: &IntegerLattice,
    target: &[BigInt],
    d: usize,
    ctx: &PrimeContext,
    delta: &BigInt,
    cfg: &CvpConfig,
) -> Result<CvpSolution> {
    if lattice.num_rows() <= cfg.enumeration_cap {
        match cvp_exact_with(lattice, target, cfg) {
            Err(Error::EnumerationBudget { nodes }) => {
                log::warn!("enumeration budget of {nodes} nodes exhausted, using nearest plane");
            }
            other => return other,
        }
    }
    let reduced = reduce_power_lattice(lattice, d, ctx, delta, cfg)?;
    babai_nearest_plane(&reduced, target)
}

/// Integer coefficients `v_{d+j} / w` of the coefficient block, if every
/// division is exact.
fn read_coefficients(v: &[BigInt], d: usize, w: &BigInt) -> Option<Vec<BigInt>> {
    v[d..]
        .iter()
        .map(|x| {
            let (q, r) = x.div_rem(w);
            r.is_zero().then_some(q)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecoveryFailure {
    /// The closest vector is not of the form `w_g` for any polynomial `g`.
    NonIntegralReadout,
    /// The read polynomial misses an observation by more than the
    /// residual bound.
    ResidualExceeded,
}

#[derive(Clone, Debug)]
pub struct RecoveryResult {
    /// Recovered polynomial with coefficients `a_k..a_n`; `None` on failure.
    pub candidate: Option<FpPolynomial>,
    pub cvp_sq_distance: BigRational,
    /// Whether CVP was solved exactly (as opposed to nearest-plane).
    pub exact_cvp: bool,
    /// `(d + m) Δ^2`, the square of the bound every residual must meet.
    pub residual_bound_sq: BigInt,
    /// Every observation is met within `Δ`.
    pub verified: bool,
    pub failure: Option<RecoveryFailure>,
}

impl RecoveryResult {
    /// `(a_k, ..., a_n)` as residues.
    pub fn coefficients(&self) -> Option<&[BigInt]> {
        self.candidate.as_ref().map(|g| &g.coeffs()[g.support_low()..])
    }

    /// True when the recovered coefficients equal those of `f`.
    pub fn recovers(&self, f: &FpPolynomial) -> bool {
        self.coefficients() == Some(&f.coeffs()[f.support_low()..])
    }
}

pub fn recover_coefficients(inst: &InterpolationInstance) -> Result<RecoveryResult> {
    recover_coefficients_with(inst, &CvpConfig::default())
}

pub fn recover_coefficients_with(inst: &InterpolationInstance, cfg: &CvpConfig) -> Result<RecoveryResult> {
    let hk = BigInt::from(inst.h).pow(inst.k as u32);
    if hk <= inst.delta {
        log::warn!("h^k <= Δ: outside the regime where recovery is guaranteed");
    }
    let (lattice, target) = build_interpolation_lattice(inst)?;
    let sol = solve_power_cvp(&lattice, &target, inst.d(), &inst.ctx, &inst.delta, cfg)?;
    let (d, m) = (inst.d(), inst.m());
    let (_, w) = weights(&inst.ctx, &inst.delta, m);
    let residual_bound_sq = BigInt::from(d + m) * &inst.delta * &inst.delta;
    let mut result = RecoveryResult {
        candidate: None,
        cvp_sq_distance: sol.sq_distance.clone(),
        exact_cvp: sol.exact,
        residual_bound_sq,
        verified: false,
        failure: None,
    };
    let Some(ints) = read_coefficients(&sol.vector, d, &w) else {
        result.failure = Some(RecoveryFailure::NonIntegralReadout);
        return Ok(result);
    };
    let mut coeffs = vec![BigInt::zero(); inst.k];
    coeffs.extend(ints.iter().map(|c| inst.ctx.reduce(c)));
    let g = FpPolynomial::new(inst.ctx.clone(), coeffs, inst.k)?;
    let dists: Vec<BigInt> = inst
        .points
        .iter()
        .zip(&inst.observations)
        .map(|(&t, u)| inst.ctx.dist(&(g.eval_i64(t) - u)))
        .collect();
    if dists.iter().any(|e| e * e > result.residual_bound_sq) {
        result.failure = Some(RecoveryFailure::ResidualExceeded);
        return Ok(result);
    }
    result.verified = dists.iter().all(|e| *e <= inst.delta);
    result.candidate = Some(g);
    Ok(result)
}

/// Points at which a reconstruction is scored: every integer of
/// `[lo, hi]` when there are at most `max_points` of them, otherwise a
/// seeded sample of `max_points` distinct ones in increasing order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub lo: i64,
    pub hi: i64,
    pub max_points: usize,
    pub seed: u64,
}

impl GridSpec {
    pub const FULL_LIMIT: usize = 1 << 20;

    /// `[-h, h]`, enumerated in full up to 2^20 points.
    pub fn symmetric(h: i64) -> Self {
        Self { lo: -h, hi: h, max_points: Self::FULL_LIMIT, seed: 0 }
    }

    pub fn window(lo: i64, hi: i64, max_points: usize, seed: u64) -> Self {
        Self { lo, hi, max_points, seed }
    }

    pub fn points(&self) -> Result<Vec<i64>> {
        if self.lo > self.hi {
            return Err(domain(format!("empty grid [{}, {}]", self.lo, self.hi)));
        }
        let count = (self.hi - self.lo) as u64 + 1;
        if count <= self.max_points as u64 {
            return Ok((self.lo..=self.hi).collect());
        }
        let count = usize::try_from(count).map_err(|_| domain("grid too large"))?;
        let mut rng = seeded_rng(self.seed);
        let mut idx: Vec<usize> = sample(&mut rng, count, self.max_points).into_vec();
        idx.sort_unstable();
        Ok(idx.into_iter().map(|i| self.lo + i as i64).collect())
    }
}

#[derive(Clone, Debug)]
pub struct ApproxRecoveryResult {
    /// `f~`, or `None` when the closest vector is not a polynomial point.
    pub candidate: Option<FpPolynomial>,
    pub cvp_sq_distance: BigRational,
    pub exact_cvp: bool,
    /// `(t, |f~(t) - f(t)|_p / p)` over the grid, each value in `[0, 1/2]`.
    pub error_profile: Vec<(i64, f64)>,
    /// Fraction of grid points with `|f~(t) - f(t)|_p <= Δ`.
    pub success_fraction: f64,
}

/// Finds `f~` from the observations alone, then scores it against `truth`
/// on `grid`.
pub fn approximate_recover(
    inst: &InterpolationInstance,
    truth: &FpPolynomial,
    grid: &GridSpec,
    cfg: &CvpConfig,
) -> Result<ApproxRecoveryResult> {
    let (lattice, target) =
        build_approx_lattice(&inst.ctx, inst.n, &inst.delta, &inst.points, &inst.observations)?;
    let sol = solve_power_cvp(&lattice, &target, inst.d(), &inst.ctx, &inst.delta, cfg)?;
    let (_, w) = weights(&inst.ctx, &inst.delta, inst.n + 1);
    let mut result = ApproxRecoveryResult {
        candidate: None,
        cvp_sq_distance: sol.sq_distance.clone(),
        exact_cvp: sol.exact,
        error_profile: Vec::new(),
        success_fraction: 0.0,
    };
    let Some(ints) = read_coefficients(&sol.vector, inst.d(), &w) else {
        return Ok(result);
    };
    let g = FpPolynomial::from_integers(inst.ctx.clone(), &ints);
    let (profile, hits) = error_profile(&g, truth, &inst.delta, grid)?;
    result.success_fraction = hits as f64 / profile.len().max(1) as f64;
    result.error_profile = profile;
    result.candidate = Some(g);
    Ok(result)
}

/// Relative errors `|g(t) - f(t)|_p / p` over the grid, and the number of
/// points where the absolute error is at most `delta`.
pub fn error_profile(
    g: &FpPolynomial,
    f: &FpPolynomial,
    delta: &BigInt,
    grid: &GridSpec,
) -> Result<(Vec<(i64, f64)>, usize)> {
    let p = ExtFloat::from_bigint(g.ctx().p());
    let mut hits = 0;
    let profile = grid
        .points()?
        .into_iter()
        .map(|t| {
            let e = g.ctx().dist(&(g.eval_i64(t) - f.eval_i64(t)));
            if e <= *delta {
                hits += 1;
            }
            (t, (ExtFloat::from_bigint(&e) / p).to_f64())
        })
        .collect();
    Ok((profile, hits))
}

/// A common multiplier `v` with every `A_i v` small modulo p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExceptionalWitness {
    pub v: BigInt,
    /// Centered residues of `A_i v`.
    pub u: Vec<BigInt>,
    pub bounds_met: Vec<bool>,
}

/// Largest `v_bound` handled by a direct scan.
const DIRECT_SCAN_LIMIT: u64 = 1 << 16;
/// Refuse a two-dimensional enumeration with more candidates than this.
const CANDIDATE_LIMIT: u64 = 10_000_000;

/// Smallest `1 <= v <= v_bound` with `|A_i v mod p| <= u_bounds[i]` for
/// every coefficient `A_i` of `f` (centered residues).
pub fn detect_exceptional_structure(
    f: &FpPolynomial,
    v_bound: &BigInt,
    u_bounds: &[BigInt],
) -> Result<Option<ExceptionalWitness>> {
    let coeffs = f.coeffs();
    if u_bounds.len() != coeffs.len() {
        return Err(Error::DimensionMismatch { expected: coeffs.len(), got: u_bounds.len() });
    }
    if *v_bound < BigInt::one() {
        return Err(domain("v_bound must be at least 1"));
    }
    let ctx = f.ctx();
    let witness = |v: &BigInt| -> Option<ExceptionalWitness> {
        let u: Vec<BigInt> = coeffs.iter().map(|a| ctx.centered(&(a * v)).into_inner()).collect();
        let bounds_met: Vec<bool> = u.iter().zip(u_bounds).map(|(x, b)| x.abs() <= *b).collect();
        bounds_met.iter().all(|&b| b).then(|| ExceptionalWitness { v: v.clone(), u, bounds_met })
    };
    if let Some(vb) = v_bound.to_u64().filter(|&vb| vb <= DIRECT_SCAN_LIMIT) {
        return Ok((1..=vb).find_map(|v| witness(&BigInt::from(v))));
    }
    // Candidates from the coefficient with the tightest bound.
    let Some(pivot) = (0..coeffs.len()).filter(|&i| !coeffs[i].is_zero()).min_by_key(|&i| &u_bounds[i]) else {
        return Ok(witness(&BigInt::one()));
    };
    let mut vs = small_multipliers(ctx.p(), &coeffs[pivot], &u_bounds[pivot], v_bound)?;
    vs.sort();
    vs.dedup();
    Ok(vs.iter().find_map(|v| witness(v)))
}

/// All `1 <= v <= vmax` with `|a v mod p| <= umax`, by enumerating the
/// lattice spanned by `(p, 0)` and `(a, 1)` after Gauss reduction.
fn small_multipliers(p: &BigInt, a: &BigInt, umax: &BigInt, vmax: &BigInt) -> Result<Vec<BigInt>> {
    let su = umax.max(&BigInt::one()).clone();
    // stretch both axes so the box becomes a square of side su * vmax
    let mut b1 = [p * vmax, BigInt::zero()];
    let mut b2 = [a * vmax, su.clone()];
    let dot = |x: &[BigInt; 2], y: &[BigInt; 2]| &x[0] * &y[0] + &x[1] * &y[1];
    loop {
        if dot(&b2, &b2) < dot(&b1, &b1) {
            std::mem::swap(&mut b1, &mut b2);
        }
        let n1 = dot(&b1, &b1);
        let q = crate::lattice::round_div(&dot(&b1, &b2), &n1);
        if q.is_zero() {
            break;
        }
        b2 = [&b2[0] - &q * &b1[0], &b2[1] - &q * &b1[1]];
        if dot(&b2, &b2) >= n1 {
            break;
        }
    }
    let n1 = dot(&b1, &b1);
    let g12 = dot(&b1, &b2);
    let gram = &n1 * dot(&b2, &b2) - &g12 * &g12;
    let r2: BigInt = (&su * vmax).pow(2) * 2u32;
    let ymax = (&r2 * &n1 / &gram).sqrt() + 1u32;
    let xspan = (&r2 / &n1).sqrt() + 2u32;
    let work = (&ymax * 2u32 + 1u32) * (&xspan * 2u32 + 1u32);
    if work > BigInt::from(CANDIDATE_LIMIT) {
        return Err(Error::Refused(format!("structure search would scan {work} candidates")));
    }
    let ymax = ymax.to_i64().unwrap();
    let mut out = Vec::new();
    for y in -ymax..=ymax {
        let y = BigInt::from(y);
        let center = (-&y * &g12).div_floor(&n1);
        let mut x = &center - &xspan;
        while x <= &center + &xspan {
            let pu = &x * &b1[0] + &y * &b2[0];
            let pv = &x * &b1[1] + &y * &b2[1];
            let (u, v) = (pu / vmax, pv / &su);
            if v.is_positive() && &v <= vmax && u.abs() <= *umax {
                out.push(v);
            }
            x += 1u32;
        }
    }
    Ok(out)
}
