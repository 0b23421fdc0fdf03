//! The lattice `L_K`, its image under `psi(g_r(t) iota(z))`, and systole
//! profiles along the diagonal flow.

use num_complex::Complex;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bad_approx::ComplexVector;
use crate::error::{Error, Result};
use crate::lattice::{self, ShortVector};
use crate::linalg::{det, dot};
use crate::number_field::{NumberField, WeightVector};
use crate::real::{Hp, Real, HP_DIGITS};
use crate::stats::{fit_line, LineFit};

/// Default tolerance on the tail slope when classifying an orbit.
pub const DEFAULT_SLOPE_TOL: f64 = 0.05;
const TAIL_FRACTION: f64 = 0.4;

/// Finite-height bad constant of [`gaussian_witness`] on the diagonal of
/// `Q(i)` with balanced weights; unchanged for `Qmax` from 10 to 50.
pub const WITNESS_BAD_CONSTANT: f64 = 0.455_120_237_5;
/// Lower bound for the minimal systole of the witness orbit over `t in [0, 20]`.
pub const WITNESS_MIN_SYSTOLE: f64 = 0.954_067_9;

/// `((1 + i) + sqrt(4 + 2i)) / 2`, a root of `z^2 - (1 + i) z - 1` with no
/// root in `Q(i)`.
pub fn gaussian_witness() -> Complex<Hp> {
    let two = Hp::from_f64(2.0);
    let (a, b) = (Hp::from_f64(4.0), two);
    let m = (a * a + b * b).sqrt();
    let root = Complex::new(((m + a) / two).sqrt(), ((m - a) / two).sqrt());
    (Complex::new(Hp::one(), Hp::one()) + root) / two
}

/// `2n` generators of a rank-`2n` lattice in `R^{4n}`; coordinates interleave
/// real and imaginary parts, the first `2n` of them carrying the `p` block.
#[derive(Clone, Debug)]
pub struct RealifiedLattice {
    pub basis: Vec<Vec<Hp>>,
    pub scale: Hp,
    pub n: usize,
}

impl RealifiedLattice {
    pub fn gram(&self) -> Vec<Vec<Hp>> {
        self.basis.iter().map(|a| self.basis.iter().map(|b| dot(a, b)).collect()).collect()
    }

    pub fn gram_det(&self) -> Hp {
        det(self.gram())
    }

    /// Applies `psi(g_r(s))`.
    pub fn flow(&self, r: &WeightVector, s: f64) -> Self {
        let factors = flow_factors::<Hp>(r, s);
        let basis = self
            .basis
            .iter()
            .map(|v| v.iter().enumerate().map(|(i, x)| *x * factors[i / 2]).collect())
            .collect();
        Self { basis, scale: self.scale, n: self.n }
    }
}

/// Diagonal of `psi(g_r(t))`: `e^{r_j t}` then `e^{-r_j t}`.
pub fn flow_factors<R: Real>(r: &WeightVector, t: f64) -> Vec<R> {
    let t = R::from_f64(t);
    let up: Vec<R> = r.as_slice().iter().map(|&w| (R::from_f64(w) * t).exp()).collect();
    let down: Vec<R> = up.iter().map(|&u| R::one() / u).collect();
    up.into_iter().chain(down).collect()
}

fn realify(v: &[Complex<Hp>]) -> Vec<Hp> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// `|D_K|^{-1/(2n)}`.
pub fn lattice_scale(field: &NumberField) -> Hp {
    let d = field.discriminant().abs().to_f64().unwrap_or(f64::INFINITY);
    Hp::from_f64(d).powf(-Hp::one() / Hp::from_i128(2 * field.degree() as i128))
}

/// `L_K`: generators `(Theta(b_k), 0)` and `(0, Theta(b_k))` scaled by `|D_K|^{-1/(2n)}`.
pub fn build_lk(field: &NumberField) -> RealifiedLattice {
    orbit_generators(field, None, &[], 0.0)
}

fn orbit_generators(
    field: &NumberField,
    r: Option<&WeightVector>,
    z: &[Complex<Hp>],
    t: f64,
) -> RealifiedLattice {
    let n = field.degree();
    let scale = lattice_scale(field);
    let e = field.embedding_matrix::<Hp>();
    let zero = Complex::new(Hp::zero(), Hp::zero());
    let factors = match r {
        Some(r) => flow_factors::<Hp>(r, t),
        None => vec![Hp::one(); 2 * n],
    };
    let mut basis = Vec::with_capacity(2 * n);
    for role in 0..2 {
        for k in 0..n {
            let mut v = vec![zero; 2 * n];
            for j in 0..n {
                let s = e[j * n + k];
                if role == 0 {
                    v[j] = s;
                } else {
                    v[j] = z.get(j).map_or(zero, |zj| s * *zj);
                    v[n + j] = s;
                }
            }
            for (x, f) in v.iter_mut().zip(&factors) {
                *x *= *f * scale;
            }
            basis.push(realify(&v));
        }
    }
    RealifiedLattice { basis, scale, n }
}

/// `psi(g)` for `g = (g_1, ..., g_n)`, each `g_j = [a, b, c, d]` row-major:
/// the `2n x 2n` matrix `[[diag a, diag b], [diag c, diag d]]`.
pub fn psi<R: Real>(g: &[[Complex<R>; 4]]) -> Result<Vec<Vec<Complex<R>>>> {
    let n = g.len();
    let tol = R::from_f64(1e-9);
    let zero = Complex::new(R::zero(), R::zero());
    let mut m = vec![vec![zero; 2 * n]; 2 * n];
    for (j, [a, b, c, d]) in g.iter().enumerate() {
        let dt = *a * *d - *b * *c;
        if (dt.re - R::one()).abs() > tol || dt.im.abs() > tol {
            return Err(Error::NotUnimodular(j));
        }
        m[j][j] = *a;
        m[j][n + j] = *b;
        m[n + j][j] = *c;
        m[n + j][n + j] = *d;
    }
    Ok(m)
}

/// `iota(z) = ([[1, z_j], [0, 1]])_j`.
pub fn iota<R: Real>(z: &[Complex<R>]) -> Vec<[Complex<R>; 4]> {
    let one = Complex::new(R::one(), R::zero());
    let zero = Complex::new(R::zero(), R::zero());
    z.iter().map(|&w| [one, w, zero, one]).collect()
}

/// `g_r(t) = (diag(e^{r_j t}, e^{-r_j t}))_j`.
pub fn flow_element<R: Real>(r: &WeightVector, t: f64) -> Vec<[Complex<R>; 4]> {
    let f = flow_factors::<R>(r, t);
    let n = r.len();
    let zero = Complex::new(R::zero(), R::zero());
    (0..n).map(|j| [Complex::new(f[j], R::zero()), zero, zero, Complex::new(f[n + j], R::zero())]).collect()
}

/// Decimal digits needed to follow the flow up to `horizon`.
pub fn required_digits(field: &NumberField, r: &WeightVector, horizon: f64) -> u32 {
    field.spec().precision + (r.r_max() * horizon.abs() * std::f64::consts::LOG10_E).ceil() as u32
}

fn check_precision(field: &NumberField, r: &WeightVector, horizon: f64) -> Result<()> {
    let need = required_digits(field, r, horizon);
    if need > HP_DIGITS {
        return Err(Error::PrecisionUnavailable { requested: need, available: HP_DIGITS });
    }
    Ok(())
}

/// `psi(g_r(t) iota(z)) L_K`; its vectors are
/// `|D_K|^{-1/(2n)} (e^{r t}(s(q) z + s(p)), e^{-r t} s(q))` over `(p, q)`.
pub fn orbit_lattice(
    field: &NumberField,
    r: &WeightVector,
    z: &ComplexVector<Hp>,
    t: f64,
) -> Result<RealifiedLattice> {
    r.check_degree(field)?;
    if z.len() != field.degree() || !t.is_finite() {
        return Err(Error::Config("orbit point must have one coordinate per embedding and t finite".into()));
    }
    check_precision(field, r, t)?;
    Ok(orbit_generators(field, Some(r), z.as_slice(), t))
}

/// Shortest vector: LLL first vector, or the true minimum by enumeration.
pub fn shortest_vector(l: &RealifiedLattice, exact: bool) -> Result<ShortVector<Hp>> {
    lattice::shortest_vector(&l.basis, exact)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitProfile {
    pub horizon: f64,
    pub times: Vec<f64>,
    pub systoles: Vec<f64>,
    pub exact: bool,
    pub min_systole: f64,
    /// Fit of `ln lambda_1` against `t` on the last 40% of the grid.
    pub tail: Option<LineFit>,
}

/// `lambda_1` on the uniform grid of `steps` points in `[0, horizon]`.
pub fn systole_profile(
    field: &NumberField,
    r: &WeightVector,
    z: &ComplexVector<Hp>,
    horizon: f64,
    steps: usize,
    exact: bool,
) -> Result<OrbitProfile> {
    if !(horizon >= 0.0) {
        return Err(Error::Config(format!("horizon must be nonnegative, got {horizon}")));
    }
    check_precision(field, r, horizon)?;
    let times: Vec<f64> = if horizon == 0.0 || steps < 2 {
        vec![0.0]
    } else {
        (0..steps).map(|i| horizon * i as f64 / (steps - 1) as f64).collect()
    };
    let systoles = times
        .par_iter()
        .map(|&t| Ok(shortest_vector(&orbit_lattice(field, r, z, t)?, exact)?.length.to_f64()))
        .collect::<Result<Vec<f64>>>()?;
    let min_systole = systoles.iter().copied().fold(f64::INFINITY, f64::min);
    let tail = tail_fit(&times, &systoles);
    Ok(OrbitProfile { horizon, times, systoles, exact, min_systole, tail })
}

fn tail_fit(times: &[f64], systoles: &[f64]) -> Option<LineFit> {
    let len = times.len();
    let take = ((len as f64 * TAIL_FRACTION).round() as usize).max(2);
    if len < 2 {
        return None;
    }
    let start = len.saturating_sub(take);
    let logs: Vec<f64> = systoles[start..].iter().map(|s| s.ln()).collect();
    fit_line(&times[start..], &logs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Bounded,
    Escaping,
    Inconclusive,
}

/// Finite-horizon verdict; says nothing beyond `horizon`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitVerdict {
    pub verdict: Verdict,
    pub horizon: f64,
    pub threshold: f64,
    pub slope_tol: f64,
    pub slope: Option<f64>,
    pub min_systole: f64,
}

pub fn classify_orbit(profile: &OrbitProfile, threshold: f64, slope_tol: f64) -> OrbitVerdict {
    let slope = profile.tail.map(|f| f.slope);
    let verdict = match slope {
        Some(s) if s < -slope_tol && profile.min_systole < threshold => Verdict::Escaping,
        Some(s) if s >= -slope_tol && profile.min_systole >= threshold => Verdict::Bounded,
        _ => Verdict::Inconclusive,
    };
    OrbitVerdict {
        verdict,
        horizon: profile.horizon,
        threshold,
        slope_tol,
        slope,
        min_systole: profile.min_systole,
    }
}
