//! Weighted approximation quality, the resonance boxes `Delta_eps(p, q)`,
//! truncated `Bad_eps` certificates, and the constants and partitions that
//! drive the blocking strategy.

use std::collections::BTreeSet;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_engine::Ball;
use crate::lattice::{enumerate, lll, to_generator_coords, LLL_DELTA};
use crate::number_field::{
    admissible_of, height_with_norm, weighted_norm_of, AlgebraicInt, NumberField, WeightVector,
};
use crate::real::{cabs, hp_serde, Hp, Real};

/// A point of `C^n`, one coordinate per embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector<R = f64>(Vec<Complex<R>>);

impl<R: Real> ComplexVector<R> {
    pub fn new(z: Vec<Complex<R>>) -> Result<Self> {
        if z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Config("vector has a non-finite entry".into()));
        }
        Ok(Self(z))
    }

    /// `(z, conj z)`, the diagonal slice point of a quadratic field.
    pub fn conjugate_pair(z: Complex<R>) -> Result<Self> {
        Self::new(vec![z, Complex::new(z.re, -z.im)])
    }

    pub fn as_slice(&self) -> &[Complex<R>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn convert<S: Real>(&self) -> ComplexVector<S> {
        ComplexVector(self.0.iter().map(|z| crate::real::convert_complex(*z)).collect())
    }

    pub fn to_f64_pairs(&self) -> Vec<[f64; 2]> {
        self.0.iter().map(|z| [z.re.to_f64(), z.im.to_f64()]).collect()
    }
}

/// Quality of `(p, q)` from precomputed embeddings.
pub fn quality_of<R: Real>(r: &WeightVector, z: &[Complex<R>], ep: &[Complex<R>], eq: &[Complex<R>]) -> R {
    let norm = weighted_norm_of(r, eq);
    let mut worst = R::zero();
    for &j in r.sigma_plus() {
        let dev = cabs(eq[j] * z[j] + ep[j]);
        worst = worst.max(norm.powf(R::from_f64(r.get(j))) * dev);
    }
    for &j in r.sigma_zero() {
        let dev = cabs(eq[j] * z[j] + ep[j]);
        worst = worst.max(dev.max(cabs(eq[j])));
    }
    worst
}

/// `max{ ||q||^{r_s} |s(q) z_s + s(p)| over positive weights, max(|s(q) z_s + s(p)|, |s(q)|) over zero weights }`.
pub fn quality<R: Real>(
    field: &NumberField,
    r: &WeightVector,
    z: &ComplexVector<R>,
    p: &AlgebraicInt,
    q: &AlgebraicInt,
) -> Result<R> {
    if q.is_zero() {
        return Err(Error::ZeroElement);
    }
    Ok(quality_of(r, z.as_slice(), &field.embed::<R>(p), &field.embed::<R>(q)))
}

/// Round-off approximation of the `p` minimising `max_s |s(q) z_s + s(p)|`.
pub fn best_p<R: Real>(field: &NumberField, z: &ComplexVector<R>, q: &AlgebraicInt) -> AlgebraicInt {
    let eq = field.embed::<R>(q);
    let target: Vec<Complex<R>> = eq.iter().zip(z.as_slice()).map(|(a, b)| -(*a * *b)).collect();
    field.nearest_element(&target).unwrap_or_else(|| field.zero())
}

/// Best pair found by [`bad_constant_witness`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BadConstant {
    pub value: f64,
    pub p: AlgebraicInt,
    pub q: AlgebraicInt,
}

/// Smallest quality over `q` with `max |s(q)| <= qmax`, with `p` taken from
/// round-off refined by a unit-box search.
pub fn bad_constant_witness(field: &NumberField, r: &WeightVector, z: &ComplexVector<f64>, qmax: f64) -> BadConstant {
    let n = field.degree();
    let offsets: Vec<AlgebraicInt> = field.coordinate_box(&vec![1; n]).map(AlgebraicInt::new).collect();
    let mut best = BadConstant { value: f64::INFINITY, p: field.zero(), q: field.one() };
    for q in field.enumerate_bounded(qmax) {
        let eq = field.embed::<f64>(&q);
        let p0 = best_p(field, z, &q);
        for off in &offsets {
            let p = &p0 + off;
            let v = quality_of(r, z.as_slice(), &field.embed::<f64>(&p), &eq);
            if v < best.value {
                best = BadConstant { value: v, p, q: q.clone() };
            }
        }
    }
    best
}

pub fn bad_constant_up_to_height(field: &NumberField, r: &WeightVector, z: &ComplexVector<f64>, qmax: f64) -> f64 {
    bad_constant_witness(field, r, z, qmax).value
}

/// Product of closed disks centred at `s(p)/s(q)`.
#[derive(Clone, Debug)]
pub struct DeltaBox<R> {
    pub p: AlgebraicInt,
    pub q: AlgebraicInt,
    pub center: Vec<Complex<R>>,
    pub radii: Vec<R>,
    pub eps: R,
}

impl<R: Real> DeltaBox<R> {
    pub fn contains(&self, z: &[Complex<R>]) -> bool {
        z.iter().zip(&self.center).zip(&self.radii).all(|((a, c), rad)| cabs(*a - *c) <= *rad)
    }

    /// Euclidean distance from `z` to the box (zero inside).
    pub fn distance(&self, z: &[Complex<R>]) -> R {
        z.iter()
            .zip(&self.center)
            .zip(&self.radii)
            .fold(R::zero(), |acc, ((a, c), rad)| {
                let gap = (cabs(*a - *c) - *rad).max(R::zero());
                acc + gap * gap
            })
            .sqrt()
    }
}

pub(crate) fn delta_box_of<R: Real>(
    r: &WeightVector,
    eps: R,
    p: &AlgebraicInt,
    q: &AlgebraicInt,
    ep: &[Complex<R>],
    eq: &[Complex<R>],
) -> DeltaBox<R> {
    let norm = weighted_norm_of(r, eq);
    let center = ep.iter().zip(eq).map(|(a, b)| *a / *b).collect();
    let radii = (0..eq.len())
        .map(|j| {
            let m = cabs(eq[j]);
            if r.get(j) > 0.0 {
                eps / (m * norm.powf(R::from_f64(r.get(j))))
            } else {
                eps / m
            }
        })
        .collect();
    DeltaBox { p: p.clone(), q: q.clone(), center, radii, eps }
}

/// `Delta_eps(p, q)`. A point `z` lies in it exactly when `quality(z, -p, q) <= eps`.
pub fn delta_box<R: Real>(
    field: &NumberField,
    r: &WeightVector,
    eps: R,
    p: &AlgebraicInt,
    q: &AlgebraicInt,
) -> Result<DeltaBox<R>> {
    if q.is_zero() {
        return Err(Error::ZeroElement);
    }
    let eq = field.embed::<R>(q);
    if !admissible_of(r, eps, &eq) {
        return Err(Error::NotAdmissible { eps: eps.to_f64() });
    }
    Ok(delta_box_of(r, eps, p, q, &field.embed::<R>(p), &eq))
}

/// All `(p, q)` with `q != 0`, `|s(q) c_s - s(p)| <= a_s` and `|s(q)| <= b_s`
/// for every embedding, found by short-vector enumeration in the lattice
/// `{(s(q) c - s(p)) / a, s(q) / b}`.
pub(crate) fn approximation_candidates(
    field: &NumberField,
    c: &[Complex<Hp>],
    a: &[Hp],
    b: &[Hp],
) -> Result<Vec<(AlgebraicInt, AlgebraicInt)>> {
    let n = field.degree();
    let e = field.embedding_matrix::<Hp>();
    let zero = Complex::new(Hp::zero(), Hp::zero());
    let mut gens: Vec<Vec<Hp>> = Vec::with_capacity(2 * n);
    for role in 0..2 {
        for k in 0..n {
            let mut v = Vec::with_capacity(4 * n);
            for j in 0..n {
                let s = e[j * n + k];
                let first = if role == 0 { zero - s } else { s * c[j] };
                let first = first / a[j];
                v.push(first.re);
                v.push(first.im);
            }
            for j in 0..n {
                let second = if role == 0 { zero } else { e[j * n + k] / b[j] };
                v.push(second.re);
                v.push(second.im);
            }
            gens.push(v);
        }
    }
    let red = lll(&gens, LLL_DELTA)?;
    let bound = Hp::from_i128(2 * n as i128) * Hp::from_f64(1.0 + 1e-9);
    let slack = Hp::from_f64(1.0 + 1e-30);
    let mut out = Vec::new();
    let mut overflow = false;
    enumerate(&red.basis, bound, |x, _| {
        let coeffs = to_generator_coords(x, &red.transform);
        let (pc, qc) = coeffs.split_at(n);
        if qc.iter().all(|&v| v == 0) {
            return None;
        }
        let (Some(p), Some(q)) = (field.element_i128(pc), field.element_i128(qc)) else {
            overflow = true;
            return None;
        };
        let ep = field.embed::<Hp>(&p);
        let eq = field.embed::<Hp>(&q);
        let ok = (0..n).all(|j| cabs(eq[j] * c[j] - ep[j]) <= a[j] * slack && cabs(eq[j]) <= b[j] * slack);
        if ok {
            out.push((p, q));
        }
        None
    })?;
    if overflow {
        return Err(Error::Unsupported("approximation search left the 64-bit coordinate range".into()));
    }
    Ok(out)
}

/// A violating pair reported by [`in_bad_eps`]; `p/q` is the centre of the box
/// containing `z`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorstPair {
    pub p: AlgebraicInt,
    pub q: AlgebraicInt,
    pub quality: f64,
}

/// Truncated membership certificate for `Bad_eps(K, r)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BadReport {
    pub z: Vec<[f64; 2]>,
    pub eps: f64,
    #[serde(rename = "Hmax")]
    pub hmax: f64,
    pub verdict: bool,
    pub worst_pair: Option<WorstPair>,
}

/// Checks that `z` avoids every `Delta_eps(p, q)` with `q` admissible and
/// `H(q) <= hmax`. A `false` verdict is definitive; `true` holds up to `hmax`.
pub fn in_bad_eps(
    field: &NumberField,
    r: &WeightVector,
    eps: f64,
    z: &ComplexVector<Hp>,
    hmax: f64,
) -> Result<BadReport> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    r.check_degree(field)?;
    let n = field.degree();
    let eps_h = Hp::from_f64(eps);
    let hmax_h = Hp::from_f64(hmax);
    let zs = z.as_slice();
    let mut report = BadReport { z: z.to_f64_pairs(), eps, hmax, verdict: true, worst_pair: None };
    if !(hmax >= 1.0) {
        return Ok(report);
    }
    // Admissible q satisfy ||q|| >= eps^{-|Sigma_0|}, and ||q||^{2 r_min} <= H(q).
    let n0 = r.sigma_zero().len() as i32;
    let mut shell = eps.powi(-n0);
    let top = hmax.powf(1.0 / (2.0 * r.r_min_plus()));
    let root_h = hmax_h.sqrt();
    let mut seen = BTreeSet::new();
    let mut worst: Option<(Hp, AlgebraicInt, AlgebraicInt)> = None;
    while shell <= top * (1.0 + 1e-9) {
        let shell_h = Hp::from_f64(shell);
        let mut a = vec![eps_h; n];
        let mut b = vec![eps_h; n];
        for &j in r.sigma_plus() {
            let w = Hp::from_f64(r.get(j));
            a[j] = eps_h / shell_h.powf(w);
            b[j] = (shell_h * Hp::from_f64(2.0)).powf(w).min(root_h);
        }
        for (p, q) in approximation_candidates(field, zs, &a, &b)? {
            if !seen.insert((p.clone(), q.clone())) {
                continue;
            }
            let ep: Vec<Complex<Hp>> = field.embed::<Hp>(&p).into_iter().map(|v| -v).collect();
            let eq = field.embed::<Hp>(&q);
            if !admissible_of(r, eps_h, &eq) {
                continue;
            }
            let norm = weighted_norm_of(r, &eq);
            if height_with_norm(r, &eq, norm) > hmax_h {
                continue;
            }
            let v = quality_of(r, zs, &ep, &eq);
            if v <= eps_h && worst.as_ref().is_none_or(|(w, _, _)| v < *w) {
                worst = Some((v, p, q));
            }
        }
        shell *= 2.0;
    }
    if let Some((v, p, q)) = worst {
        report.verdict = false;
        report.worst_pair = Some(WorstPair { p, q, quality: v.to_f64() });
    }
    Ok(report)
}

/// Constants fixing the blocking strategy's scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConstants {
    pub beta: f64,
    pub gamma: f64,
    #[serde(with = "hp_serde")]
    pub rho0: Hp,
    pub n: usize,
    #[serde(rename = "R")]
    pub big_r: u64,
    pub c_k: f64,
}

fn budget_ok(beta: f64, gamma: f64, n: usize, big_r: u64) -> bool {
    n as f64 / ((big_r as f64).powf(gamma) - 1.0) <= (beta * beta / 2.0).powf(gamma)
}

impl GameConstants {
    /// Constants with an explicit `R`, validated against both constraints.
    pub fn with_r<R: Real>(beta: f64, gamma: f64, rho0: R, n: usize, big_r: u64) -> Result<Self> {
        validate_game_params(beta, gamma, rho0.to_f64())?;
        let c = Self { beta, gamma, rho0: rho0.to_hp(), n, big_r, c_k: 1.0 };
        if big_r < 2 || !budget_ok(beta, gamma, n, big_r) || !c.discreteness_ok() {
            return Err(Error::Config(format!("R = {big_r} violates the constant constraints")));
        }
        Ok(c)
    }

    pub fn discreteness_ok(&self) -> bool {
        let e = self.eps();
        let mut v = Hp::one();
        for _ in 0..self.n {
            v = v * Hp::from_f64(4.0) * e * e;
        }
        v < Hp::from_f64(self.c_k)
    }

    /// `R^k` for any integer `k`.
    pub fn r_pow(&self, k: i64) -> Hp {
        let base = Hp::from_i128(self.big_r as i128);
        let mut v = Hp::one();
        for _ in 0..k.unsigned_abs() {
            v *= base;
        }
        if k < 0 {
            Hp::one() / v
        } else {
            v
        }
    }

    /// `eps = rho0 / (4 R^{4n})`.
    pub fn eps(&self) -> Hp {
        self.rho0 / (Hp::from_f64(4.0) * self.r_pow(4 * self.n as i64))
    }

    /// `H_l = eps R^l / rho0`.
    pub fn h(&self, l: i64) -> Hp {
        self.eps() * self.r_pow(l) / self.rho0
    }

    /// Exponent `4n` of the norm bands.
    fn band_step(&self) -> i64 {
        4 * self.n as i64
    }
}

fn validate_game_params(beta: f64, gamma: f64, rho0: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0 / 3.0) {
        return Err(Error::Config(format!("beta must lie in (0, 1/3), got {beta}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
    }
    if !(rho0 > 0.0 && rho0 < 1.0) {
        return Err(Error::Config(format!("rho0 must lie in (0, 1), got {rho0}")));
    }
    Ok(())
}

/// Smallest integer `R >= 2` meeting both the budget and the discreteness constraint.
pub fn pick_constants<R: Real>(beta: f64, gamma: f64, rho0: R, n: usize) -> Result<GameConstants> {
    validate_game_params(beta, gamma, rho0.to_f64())?;
    let need = (1.0 + n as f64 * (2.0 / (beta * beta)).powf(gamma)).powf(1.0 / gamma);
    let mut big_r = (need.floor() as u64).saturating_sub(2).max(2);
    while !budget_ok(beta, gamma, n, big_r) {
        big_r += 1;
    }
    loop {
        let c = GameConstants { beta, gamma, rho0: rho0.to_hp(), n, big_r, c_k: 1.0 };
        if c.discreteness_ok() {
            return Ok(c);
        }
        big_r += 1;
    }
}

/// Largest `l` with `beta rho0 / R^l < rho <= rho0 / R^l`.
pub fn ball_class(consts: &GameConstants, radius: Hp) -> Result<u32> {
    if !(radius > Hp::zero()) || radius > consts.rho0 {
        return Err(Error::NoClass { radius: radius.to_f64() });
    }
    let beta = Hp::from_f64(consts.beta);
    let est = ((consts.rho0 / radius).ln() / Hp::from_f64(consts.big_r as f64).ln()).to_f64().floor() as i64;
    for l in (est - 1..=est + 1).rev() {
        if l < 0 {
            continue;
        }
        let top = consts.rho0 * consts.r_pow(-l);
        if beta * top < radius && radius <= top {
            return Ok(l as u32);
        }
    }
    Err(Error::NoClass { radius: radius.to_f64() })
}

/// `m` with `H_m <= h < H_{m+1}`, and `0` below `H_1`.
pub fn height_band(consts: &GameConstants, h: Hp) -> u32 {
    if h < consts.h(1) {
        return 0;
    }
    let est = ((h / consts.h(0)).ln() / Hp::from_f64(consts.big_r as f64).ln()).to_f64().floor() as i64;
    let mut m = est.max(1);
    while m > 1 && consts.h(m) > h {
        m -= 1;
    }
    while consts.h(m + 1) <= h {
        m += 1;
    }
    m as u32
}

/// `l` with `H_m R^{4n(l-1)} <= x < H_m R^{4nl}`.
fn norm_band(consts: &GameConstants, m: u32, x: Hp) -> i64 {
    let base = consts.h(m as i64);
    let step = consts.band_step();
    let est = ((x / base).ln() / (Hp::from_f64(consts.big_r as f64).ln() * Hp::from_i128(step as i128)))
        .to_f64()
        .floor() as i64
        + 1;
    let mut l = est;
    while base * consts.r_pow(step * (l - 1)) > x {
        l -= 1;
    }
    while base * consts.r_pow(step * l) <= x {
        l += 1;
    }
    l
}

/// Height and norm indices of an admissible `q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionIndex {
    pub m: u32,
    pub l: i64,
    /// `(ball class, l)` when `q` belongs to the band handled at ball class `m - l`.
    pub decomposition: Option<(u32, u32)>,
}

pub fn partition_index(
    consts: &GameConstants,
    field: &NumberField,
    r: &WeightVector,
    q: &AlgebraicInt,
) -> Result<PartitionIndex> {
    if q.is_zero() {
        return Err(Error::ZeroElement);
    }
    let eq = field.embed::<Hp>(q);
    let eps = consts.eps();
    if !admissible_of(r, eps, &eq) {
        return Err(Error::NotAdmissible { eps: eps.to_f64() });
    }
    let norm = weighted_norm_of(r, &eq);
    let h = height_with_norm(r, &eq, norm);
    let m = height_band(consts, h);
    let l = norm_band(consts, m, norm.powf(Hp::from_f64(2.0 * r.r_max())));
    let decomposition = (l >= 1 && l <= m as i64).then(|| ((m as i64 - l) as u32, l as u32));
    Ok(PartitionIndex { m, l, decomposition })
}

/// Range of `||q||` compatible with the band `(class + l, l)`, if nonempty.
pub(crate) fn band_norm_range(consts: &GameConstants, r: &WeightVector, class: u32, l: u32) -> Option<(Hp, Hp)> {
    let top = (class + l) as i64;
    let step = consts.band_step();
    let h_lo = consts.h(top);
    let h_hi = consts.h(top + 1);
    let inv = Hp::one() / Hp::from_f64(2.0 * r.r_max());
    let mut lo = (h_lo * consts.r_pow(step * (l as i64 - 1))).powf(inv);
    let mut hi = (h_lo * consts.r_pow(step * l as i64)).powf(inv);
    hi = hi.min(h_hi.powf(Hp::one() / Hp::from_f64(2.0 * r.r_min_plus())));
    let n0 = r.sigma_zero().len() as i64;
    let eps = consts.eps();
    let mut floor = Hp::one();
    for _ in 0..n0 {
        floor /= eps;
    }
    lo = lo.max(floor);
    (lo <= hi).then_some((lo, hi))
}

/// Every `(p, q)` with `q` in the band `(m + l, l)` whose box meets the ball,
/// where `m` is the ball's class.
pub fn resonant_pairs(
    consts: &GameConstants,
    field: &NumberField,
    r: &WeightVector,
    ball: &Ball,
    l: u32,
) -> Result<Vec<(AlgebraicInt, AlgebraicInt)>> {
    let m = ball_class(consts, ball.radius)?;
    resonant_pairs_in_class(consts, field, r, ball, m, l)
}

pub(crate) fn resonant_pairs_in_class(
    consts: &GameConstants,
    field: &NumberField,
    r: &WeightVector,
    ball: &Ball,
    m: u32,
    l: u32,
) -> Result<Vec<(AlgebraicInt, AlgebraicInt)>> {
    let n = field.degree();
    let Some((lo, hi)) = band_norm_range(consts, r, m, l) else {
        return Ok(Vec::new());
    };
    let eps = consts.eps();
    let rho = ball.radius;
    let top = (m + l) as i64;
    let (h_lo, h_hi) = (consts.h(top), consts.h(top + 1));
    let step = consts.band_step();
    let (x_lo, x_hi) = (h_lo * consts.r_pow(step * (l as i64 - 1)), h_lo * consts.r_pow(step * l as i64));
    let mut a = vec![eps + rho * eps; n];
    let mut b = vec![eps; n];
    for &j in r.sigma_plus() {
        let w = Hp::from_f64(r.get(j));
        b[j] = hi.powf(w).min(h_hi.sqrt());
        a[j] = eps / lo.powf(w) + rho * b[j];
    }
    let two_rmax = Hp::from_f64(2.0 * r.r_max());
    let mut out = Vec::new();
    for (p, q) in approximation_candidates(field, &ball.center, &a, &b)? {
        let eq = field.embed::<Hp>(&q);
        if !admissible_of(r, eps, &eq) {
            continue;
        }
        let norm = weighted_norm_of(r, &eq);
        let h = height_with_norm(r, &eq, norm);
        let x = norm.powf(two_rmax);
        if h < h_lo || h >= h_hi || x < x_lo || x >= x_hi {
            continue;
        }
        let bx = delta_box_of(r, eps, &p, &q, &field.embed::<Hp>(&p), &eq);
        if bx.distance(&ball.center) <= rho {
            out.push((p, q));
        }
    }
    out.sort();
    Ok(out)
}

/// `p_1 q_2 = p_2 q_1` for every two pairs, checked exactly.
pub fn ratios_constant(field: &NumberField, pairs: &[(AlgebraicInt, AlgebraicInt)]) -> bool {
    let Some((p0, q0)) = pairs.first() else {
        return true;
    };
    pairs.iter().all(|(p, q)| field.mul(p0, q) == field.mul(p, q0))
}
