//! LLL reduction with an exact integer transform, and Fincke-Pohst enumeration.

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::real::Real;

pub const LLL_DELTA: f64 = 0.99;

const MAX_LLL_STEPS: usize = 200_000;
const MAX_ENUM_NODES: u64 = 50_000_000;

/// A reduced basis together with the integer matrix taking the input
/// generators to it: `basis[i] = sum_j transform[i][j] * gens[j]`.
#[derive(Clone, Debug)]
pub struct Reduced<R> {
    pub basis: Vec<Vec<R>>,
    pub transform: Vec<Vec<i128>>,
}

struct Gso<R> {
    mu: Vec<Vec<R>>,
    bstar: Vec<Vec<R>>,
    norms: Vec<R>,
}

fn gso<R: Real>(b: &[Vec<R>]) -> Gso<R> {
    let m = b.len();
    let mut mu = vec![vec![R::zero(); m]; m];
    let mut bstar: Vec<Vec<R>> = Vec::with_capacity(m);
    let mut norms = Vec::with_capacity(m);
    for i in 0..m {
        let mut v = b[i].clone();
        for j in 0..i {
            let c = if norms[j] == R::zero() { R::zero() } else { dot(&b[i], &bstar[j]) / norms[j] };
            mu[i][j] = c;
            for (x, y) in v.iter_mut().zip(&bstar[j]) {
                *x -= c * *y;
            }
        }
        mu[i][i] = R::one();
        norms.push(dot(&v, &v));
        bstar.push(v);
    }
    Gso { mu, bstar, norms }
}

fn combine<R: Real>(coeffs: &[i128], gens: &[Vec<R>]) -> Vec<R> {
    let mut v = vec![R::zero(); gens[0].len()];
    for (&c, g) in coeffs.iter().zip(gens) {
        if c == 0 {
            continue;
        }
        let c = R::from_i128(c);
        for (x, y) in v.iter_mut().zip(g) {
            *x += c * *y;
        }
    }
    v
}

fn degenerate<R: Real>(norms: &[R], scale: R) -> bool {
    let tiny = scale * R::from_f64(10f64.powi(-(R::DIGITS as i32 - 4)));
    norms.iter().any(|&b| !(b > tiny))
}

/// LLL with parameter `delta`; rows of the result are recomputed from the
/// integer transform to keep rounding from accumulating.
pub fn lll<R: Real>(gens: &[Vec<R>], delta: f64) -> Result<Reduced<R>> {
    let m = gens.len();
    if m == 0 {
        return Err(Error::DegenerateLattice);
    }
    let delta = R::from_f64(delta);
    let mut u: Vec<Vec<i128>> = (0..m).map(|i| (0..m).map(|j| (i == j) as i128).collect()).collect();
    let mut b: Vec<Vec<R>> = gens.to_vec();
    let scale = b.iter().map(|v| dot(v, v)).fold(R::zero(), Real::max);
    let mut g = gso(&b);
    if degenerate(&g.norms, scale) {
        return Err(Error::DegenerateLattice);
    }
    let half = R::from_f64(0.5);
    let mut k = 1;
    let mut steps = 0;
    while k < m {
        steps += 1;
        if steps > MAX_LLL_STEPS {
            return Err(Error::Unsupported("LLL did not terminate; lattice is too skewed for the working precision".into()));
        }
        for _pass in 0..4 {
            let mut changed = false;
            for j in (0..k).rev() {
                let mu = dot(&b[k], &g.bstar[j]) / g.norms[j];
                if mu.abs() <= half {
                    continue;
                }
                let q = mu.round_i128().ok_or(Error::DegenerateLattice)?;
                let (uj, uk) = (u[j].clone(), &mut u[k]);
                for (x, y) in uk.iter_mut().zip(&uj) {
                    *x = x.checked_sub(q.checked_mul(*y).ok_or(Error::DegenerateLattice)?).ok_or(Error::DegenerateLattice)?;
                }
                b[k] = combine(&u[k], gens);
                changed = true;
            }
            if !changed {
                break;
            }
        }
        let mut v = b[k].clone();
        let mut mus = vec![R::zero(); k];
        for j in 0..k {
            let c = dot(&b[k], &g.bstar[j]) / g.norms[j];
            mus[j] = c;
            for (x, y) in v.iter_mut().zip(&g.bstar[j]) {
                *x -= c * *y;
            }
        }
        let nk = dot(&v, &v);
        let mkk = mus[k - 1];
        if nk >= (delta - mkk * mkk) * g.norms[k - 1] {
            g.mu[k][..k].copy_from_slice(&mus);
            g.norms[k] = nk;
            g.bstar[k] = v;
            k += 1;
        } else {
            u.swap(k, k - 1);
            b.swap(k, k - 1);
            g = gso(&b);
            if degenerate(&g.norms, scale) {
                return Err(Error::DegenerateLattice);
            }
            k = (k - 1).max(1);
        }
    }
    Ok(Reduced { basis: b, transform: u })
}

/// Visits every nonzero integer combination `x` of `basis` with squared
/// length at most `bound`. The visitor may return a tighter bound.
pub fn enumerate<R: Real, F>(basis: &[Vec<R>], bound: R, mut visit: F) -> Result<()>
where
    F: FnMut(&[i128], R) -> Option<R>,
{
    let m = basis.len();
    let g = gso(basis);
    if g.norms.iter().any(|&b| !(b > R::zero())) {
        return Err(Error::DegenerateLattice);
    }
    let mut x = vec![0i128; m];
    let mut bound = bound;
    let mut nodes = 0u64;
    descend(&g, m - 1, R::zero(), &mut x, &mut bound, &mut nodes, &mut visit)
}

fn descend<R: Real, F>(
    g: &Gso<R>,
    level: usize,
    above: R,
    x: &mut [i128],
    bound: &mut R,
    nodes: &mut u64,
    visit: &mut F,
) -> Result<()>
where
    F: FnMut(&[i128], R) -> Option<R>,
{
    let m = x.len();
    let mut c = R::zero();
    for j in level + 1..m {
        c -= R::from_i128(x[j]) * g.mu[j][level];
    }
    let room = *bound - above;
    if room < R::zero() {
        return Ok(());
    }
    let w = (room / g.norms[level]).sqrt();
    let lo = (c - w).floor().round_i128().ok_or(Error::DegenerateLattice)?;
    let hi = (c + w).floor().round_i128().ok_or(Error::DegenerateLattice)?;
    for xi in lo..=hi + 1 {
        *nodes += 1;
        if *nodes > MAX_ENUM_NODES {
            return Err(Error::Unsupported("enumeration exceeded its node budget".into()));
        }
        let d = R::from_i128(xi) - c;
        let len = above + d * d * g.norms[level];
        if len > *bound {
            continue;
        }
        x[level] = xi;
        if level == 0 {
            if x.iter().any(|&v| v != 0) {
                if let Some(nb) = visit(x, len) {
                    *bound = nb;
                }
            }
        } else {
            descend(g, level - 1, len, x, bound, nodes, visit)?;
        }
    }
    x[level] = 0;
    Ok(())
}

/// Coefficients over the original generators of `x` given over the reduced basis.
pub fn to_generator_coords(x: &[i128], transform: &[Vec<i128>]) -> Vec<i128> {
    let m = transform.len();
    (0..m).map(|j| x.iter().zip(transform).map(|(&xi, row)| xi * row[j]).sum()).collect()
}

/// A shortest (or LLL-short) nonzero vector: its length and its coefficients
/// over the input generators.
#[derive(Clone, Debug)]
pub struct ShortVector<R> {
    pub length: R,
    pub coeffs: Vec<i128>,
}

pub fn shortest_vector<R: Real>(gens: &[Vec<R>], exact: bool) -> Result<ShortVector<R>> {
    let red = lll(gens, LLL_DELTA)?;
    let first = dot(&red.basis[0], &red.basis[0]);
    if !exact {
        return Ok(ShortVector { length: first.sqrt(), coeffs: red.transform[0].clone() });
    }
    let mut best = first;
    let mut best_x: Vec<i128> = {
        let mut e = vec![0; gens.len()];
        e[0] = 1;
        e
    };
    enumerate(&red.basis, first, |x, len| {
        if len < best {
            best = len;
            best_x = x.to_vec();
            Some(len)
        } else {
            None
        }
    })?;
    Ok(ShortVector { length: best.sqrt(), coeffs: to_generator_coords(&best_x, &red.transform) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::det_i128;
    use crate::real::Hp;
    use num_traits::{One, Zero};
    use num_bigint::BigInt;
    use num_traits::Signed;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_shortest(gens: &[Vec<f64>], box_size: i128) -> f64 {
        let m = gens.len();
        let mut best = f64::INFINITY;
        let side = 2 * box_size + 1;
        let total = side.pow(m as u32);
        for idx in 0..total {
            let mut t = idx;
            let mut x = vec![0i128; m];
            for v in x.iter_mut() {
                *v = t % side - box_size;
                t /= side;
            }
            if x.iter().all(|&v| v == 0) {
                continue;
            }
            let v = combine(&x, gens);
            best = best.min(dot(&v, &v).sqrt());
        }
        best
    }

    #[test]
    fn reduces_a_skewed_basis() {
        let gens = vec![vec![1.0, 0.0, 0.0], vec![1000.0, 1.0, 0.0], vec![3000.0, 7.0, 1.0]];
        let red = lll(&gens, LLL_DELTA).unwrap();
        assert_eq!(det_i128(&red.transform).abs(), BigInt::from(1));
        let sv = shortest_vector(&gens, true).unwrap();
        assert!((sv.length - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_matches_brute_force_and_lll_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let gens: Vec<Vec<f64>> =
                (0..4).map(|_| (0..6).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
            let exact = shortest_vector(&gens, true).unwrap().length;
            let approx = shortest_vector(&gens, false).unwrap().length;
            let brute = brute_shortest(&gens, 4);
            assert!(exact <= brute + 1e-9);
            assert!(exact <= approx + 1e-12 && approx <= 2f64.powf(1.5) * exact + 1e-12);
        }
    }

    #[test]
    fn scaling_is_homogeneous() {
        let gens = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let a = shortest_vector(&gens, true).unwrap().length;
        let scaled: Vec<Vec<f64>> = gens.iter().map(|v| v.iter().map(|x| -2.5 * x).collect()).collect();
        let b = shortest_vector(&scaled, true).unwrap().length;
        assert!((b - 2.5 * a).abs() < 1e-12);
    }

    #[test]
    fn dependent_generators_are_rejected() {
        let gens = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(lll(&gens, LLL_DELTA), Err(Error::DegenerateLattice)));
    }

    #[test]
    fn extended_precision_handles_strong_skew() {
        let t = Hp::from_f64(1e-30);
        let gens = vec![
            vec![Hp::one(), Hp::zero()],
            vec![Hp::from_f64(0.7071067811865476), t],
        ];
        let sv = shortest_vector(&gens, true).unwrap();
        assert!(sv.length > Hp::zero() && sv.length.to_f64() < 1.0);
    }
}
