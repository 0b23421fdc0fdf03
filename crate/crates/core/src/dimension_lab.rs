//! Box-counting surveys of `Bad_eps` on the diagonal slice `z -> (z, conj z)`
//! of an imaginary quadratic field.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bad_approx::ComplexVector;
use crate::error::{Error, Result};
use crate::number_field::{admissible_of, NumberField, WeightVector};
use crate::stats::fit_line;

/// Default constant `C` in the height cutoff `H <= C 2^k`.
pub const DEFAULT_HEIGHT_CONSTANT: f64 = 0.5;
const DEAD_SLACK: f64 = 1e-12;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` in `C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::Config(format!("empty window [{x0}, {x1}] x [{y0}, {y1}]")));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    pub fn unit() -> Self {
        Self { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }
    }

    fn center(&self) -> Complex<f64> {
        Complex::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    fn half_diagonal(&self) -> f64 {
        ((self.x1 - self.x0).powi(2) + (self.y1 - self.y0).powi(2)).sqrt() / 2.0
    }
}

/// Which weight the slice obstructions use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceWeights {
    #[default]
    Balanced,
    /// `r = e_1`; on the conjugate diagonal no denominator is admissible, so
    /// nothing is removed.
    LiteralE1,
}

impl SliceWeights {
    fn vector(self) -> WeightVector {
        match self {
            SliceWeights::Balanced => WeightVector::balanced(2),
            SliceWeights::LiteralE1 => WeightVector::unit(2, 0),
        }
    }
}

/// Alive/dead flags of the `2^k x 2^k` cells of a window, row-major from
/// the lower-left corner.
#[derive(Clone, Debug, PartialEq)]
pub struct SurvivorGrid {
    pub level: u32,
    pub window: Window,
    pub alive: Vec<bool>,
}

impl SurvivorGrid {
    pub fn side(&self) -> usize {
        1 << self.level
    }

    pub fn count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn cell_of(&self, z: Complex<f64>) -> Option<usize> {
        let s = self.side();
        let w = &self.window;
        let fx = (z.re - w.x0) / (w.x1 - w.x0) * s as f64;
        let fy = (z.im - w.y0) / (w.y1 - w.y0) * s as f64;
        if !(0.0..s as f64).contains(&fx) || !(0.0..s as f64).contains(&fy) {
            return None;
        }
        Some(fy as usize * s + fx as usize)
    }

    pub fn is_alive(&self, ix: usize, iy: usize) -> bool {
        self.alive[iy * self.side() + ix]
    }
}

/// `(z, conj z)` for a quadratic field.
pub fn bad_k_slice(field: &NumberField, z: Complex<f64>) -> Result<ComplexVector<f64>> {
    if field.quadratic_d().is_none() {
        return Err(Error::Unsupported(
            "the slice of a single complex number needs a quadratic field; use twisted_diagonal".into(),
        ));
    }
    ComplexVector::conjugate_pair(z)
}

/// `(s_1(x), ..., s_n(x))` for `x = sum x_k b_k` with real coordinates `x_k`.
pub fn twisted_diagonal(field: &NumberField, coords: &[f64]) -> Result<ComplexVector<f64>> {
    let n = field.degree();
    if coords.len() != n {
        return Err(Error::Config(format!("expected {n} coordinates, got {}", coords.len())));
    }
    let e = field.embedding_matrix::<f64>();
    ComplexVector::new((0..n).map(|j| (0..n).map(|k| e[j * n + k] * coords[k]).sum()).collect())
}

/// Cells of `window` at level `k` that avoid every slice disk
/// `D(p/q, eps/|q|^2)` with `H(q) <= hmax`.
pub fn survivor_grid(
    field: &NumberField,
    eps: f64,
    window: Window,
    level: u32,
    hmax: f64,
    weights: SliceWeights,
) -> Result<SurvivorGrid> {
    if field.quadratic_d().is_none() {
        return Err(Error::Unsupported("surveys run on imaginary quadratic fields".into()));
    }
    if !(eps >= 0.0) {
        return Err(Error::Config(format!("eps must be nonnegative, got {eps}")));
    }
    if level > 14 {
        return Err(Error::Config(format!("level {level} is above the supported maximum 14")));
    }
    let side = 1usize << level;
    let mut grid = SurvivorGrid { level, window, alive: vec![true; side * side] };
    if eps == 0.0 {
        return Ok(grid);
    }
    let r = weights.vector();
    let cw = (window.x1 - window.x0) / side as f64;
    let ch = (window.y1 - window.y0) / side as f64;
    let qs: Vec<_> = field
        .enumerate_bounded(hmax.sqrt())
        .into_iter()
        .filter(|q| {
            let e = field.embed::<f64>(q);
            admissible_of(&r, eps, &e) && e[0].norm_sqr() <= hmax * (1.0 + 1e-12)
        })
        .collect();
    let dead = qs
        .par_iter()
        .fold(
            || vec![false; side * side],
            |mut dead, q| {
                let sq = field.embed::<f64>(q)[0];
                let radius = eps / sq.norm_sqr();
                let reach = sq.norm() * (window.half_diagonal() + radius) + 1e-9;
                for p in ratio_numerators(field, sq * window.center(), reach) {
                    kill_disk(&mut dead, &window, side, cw, ch, p / sq, radius);
                }
                dead
            },
        )
        .reduce(
            || vec![false; side * side],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x |= y);
                a
            },
        );
    grid.alive.iter_mut().zip(dead).for_each(|(a, d)| *a = !d);
    Ok(grid)
}

/// `s_1(p)` for all `p` with `|s_1(p) - c| <= reach`.
fn ratio_numerators(field: &NumberField, c: Complex<f64>, reach: f64) -> Vec<Complex<f64>> {
    let e = field.embedding_matrix::<f64>();
    let w = e[1];
    let mut out = Vec::new();
    let b_lo = ((c.im - reach) / w.im).floor() as i64;
    let b_hi = ((c.im + reach) / w.im).ceil() as i64;
    for b in b_lo..=b_hi {
        let base = w * b as f64;
        let dy = c.im - base.im;
        let span = reach * reach - dy * dy;
        if span < 0.0 {
            continue;
        }
        let span = span.sqrt();
        let a_lo = (c.re - base.re - span).floor() as i64;
        let a_hi = (c.re - base.re + span).ceil() as i64;
        for a in a_lo..=a_hi {
            let v = base + a as f64;
            if (v - c).norm() <= reach {
                out.push(v);
            }
        }
    }
    out
}

fn kill_disk(dead: &mut [bool], w: &Window, side: usize, cw: f64, ch: f64, center: Complex<f64>, radius: f64) {
    let rr = radius + DEAD_SLACK;
    let lo_x = (((center.re - rr - w.x0) / cw).floor().max(0.0)) as usize;
    let lo_y = (((center.im - rr - w.y0) / ch).floor().max(0.0)) as usize;
    let hi_x = ((center.re + rr - w.x0) / cw).floor();
    let hi_y = ((center.im + rr - w.y0) / ch).floor();
    if hi_x < 0.0 || hi_y < 0.0 {
        return;
    }
    let hi_x = (hi_x as usize).min(side - 1);
    let hi_y = (hi_y as usize).min(side - 1);
    for iy in lo_y..=hi_y {
        let (y0, y1) = (w.y0 + iy as f64 * ch, w.y0 + (iy + 1) as f64 * ch);
        let dy = (y0 - center.im).max(center.im - y1).max(0.0);
        for ix in lo_x..=hi_x {
            let (x0, x1) = (w.x0 + ix as f64 * cw, w.x0 + (ix + 1) as f64 * cw);
            let dx = (x0 - center.re).max(center.re - x1).max(0.0);
            if dx * dx + dy * dy <= rr * rr {
                dead[iy * side + ix] = true;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCount {
    pub k: u32,
    pub survivors: usize,
    pub eps: f64,
    #[serde(rename = "Hmax")]
    pub hmax: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSurvey {
    pub window: Window,
    pub levels: Vec<LevelCount>,
}

/// Survivor counts at levels `k` with the cutoff `H <= c_height 2^k`.
pub fn survey(
    field: &NumberField,
    eps: f64,
    window: Window,
    levels: std::ops::RangeInclusive<u32>,
    c_height: f64,
    weights: SliceWeights,
) -> Result<GridSurvey> {
    let levels = levels
        .map(|k| {
            let hmax = c_height * 2f64.powi(k as i32);
            let g = survivor_grid(field, eps, window, k, hmax, weights)?;
            Ok(LevelCount { k, survivors: g.count(), eps, hmax })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridSurvey { window, levels })
}

/// Survey of a synthetic point set: a cell survives when it holds a point.
pub fn survey_points(points: &[Complex<f64>], window: Window, levels: std::ops::RangeInclusive<u32>) -> GridSurvey {
    let levels = levels
        .map(|k| {
            let side = 1usize << k;
            let mut grid = SurvivorGrid { level: k, window, alive: vec![false; side * side] };
            for z in points {
                if let Some(c) = grid.cell_of(*z) {
                    grid.alive[c] = true;
                }
            }
            LevelCount { k, survivors: grid.count(), eps: 0.0, hmax: 0.0 }
        })
        .collect();
    GridSurvey { window, levels }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub residual: f64,
    pub counts: Vec<(u32, usize)>,
}

/// Least-squares slope of `ln N_k` against `k ln 2` over levels with `N_k > 0`.
pub fn box_count_dimension(survey: &GridSurvey) -> Result<DimensionEstimate> {
    let used: Vec<&LevelCount> = survey.levels.iter().filter(|l| l.survivors > 0).collect();
    if used.len() < 3 {
        return Err(Error::InsufficientData(used.len()));
    }
    let x: Vec<f64> = used.iter().map(|l| l.k as f64 * std::f64::consts::LN_2).collect();
    let y: Vec<f64> = used.iter().map(|l| (l.survivors as f64).ln()).collect();
    let fit = fit_line(&x, &y).ok_or(Error::InsufficientData(used.len()))?;
    Ok(DimensionEstimate {
        slope: fit.slope,
        residual: fit.residual,
        counts: survey.levels.iter().map(|l| (l.k, l.survivors)).collect(),
    })
}

/// Centres of the `4^depth` squares of the middle-thirds dust `C x C` in `[0, 1]^2`.
pub fn cantor_dust(depth: u32) -> Vec<Complex<f64>> {
    let mut line = vec![0.0f64];
    let mut size = 1.0;
    for _ in 0..depth {
        size /= 3.0;
        line = line.iter().flat_map(|&a| [a, a + 2.0 * size]).collect();
    }
    let mid: Vec<f64> = line.iter().map(|a| a + size / 2.0).collect();
    mid.iter().flat_map(|&x| mid.iter().map(move |&y| Complex::new(x, y))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number_field::{AlgebraicInt, FieldSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gauss() -> NumberField {
        NumberField::new(FieldSpec::quadratic(1)).unwrap()
    }

    fn hmax_at(level: u32) -> f64 {
        DEFAULT_HEIGHT_CONSTANT * 2f64.powi(level as i32)
    }

    #[test]
    fn ratio_point_cell_dies() {
        let k = gauss();
        for level in 3..=6 {
            let g = survivor_grid(&k, 0.1, Window::unit(), level, hmax_at(level), SliceWeights::Balanced)
                .unwrap();
            // (1 + i)/2 = 1/(1 - i) is a corner shared by four cells
            for z in [Complex::new(0.5, 0.5), Complex::new(0.5 - 1e-9, 0.5 - 1e-9)] {
                assert!(!g.alive[g.cell_of(z).unwrap()]);
            }
        }
    }

    #[test]
    fn zero_eps_keeps_everything_and_obstructions_are_monotone() {
        let k = gauss();
        let w = Window::unit();
        assert_eq!(survivor_grid(&k, 0.0, w, 5, 256.0, SliceWeights::Balanced).unwrap().count(), 1024);
        let wide = survivor_grid(&k, 0.3, w, 6, hmax_at(6), SliceWeights::Balanced).unwrap();
        let narrow = survivor_grid(&k, 0.1, w, 6, hmax_at(6), SliceWeights::Balanced).unwrap();
        assert!(wide.alive.iter().zip(&narrow.alive).all(|(a, b)| !a || *b));
        assert!(wide.count() < narrow.count());
    }

    #[test]
    fn literal_e1_removes_nothing() {
        let k = gauss();
        let g = survivor_grid(&k, 0.3, Window::unit(), 5, 256.0, SliceWeights::LiteralE1).unwrap();
        assert_eq!(g.count(), 1024);
    }

    #[test]
    fn survivors_are_symmetric_on_centred_windows() {
        let k = gauss();
        let w = Window::new(-0.5, 0.5, -0.5, 0.5).unwrap();
        let g = survivor_grid(&k, 0.15, w, 6, hmax_at(6), SliceWeights::Balanced).unwrap();
        let s = g.side();
        for iy in 0..s {
            for ix in 0..s {
                let a = g.is_alive(ix, iy);
                // z -> i z about the centre, and z -> conj z
                assert_eq!(a, g.is_alive(s - 1 - iy, ix));
                assert_eq!(a, g.is_alive(ix, s - 1 - iy));
            }
        }
    }

    #[test]
    fn calibration_fixtures() {
        let k = gauss();
        let full = survey(&k, 0.0, Window::unit(), 3..=8, DEFAULT_HEIGHT_CONSTANT, SliceWeights::Balanced).unwrap();
        assert!((box_count_dimension(&full).unwrap().slope - 2.0).abs() < 0.01);
        let seg: Vec<Complex<f64>> = (0..=100_000)
            .map(|i| {
                let t = i as f64 / 100_000.0;
                Complex::new(0.1 + 0.8 * t, 0.2 + 0.5 * t)
            })
            .collect();
        let s = box_count_dimension(&survey_points(&seg, Window::unit(), 3..=8)).unwrap();
        assert!((s.slope - 1.0).abs() < 0.05, "{}", s.slope);
        let dust = box_count_dimension(&survey_points(&cantor_dust(7), Window::unit(), 3..=8)).unwrap();
        assert!((dust.slope - 4f64.ln() / 3f64.ln()).abs() < 0.07, "{}", dust.slope);
        let short = GridSurvey { window: Window::unit(), levels: full.levels[..2].to_vec() };
        assert!(matches!(box_count_dimension(&short), Err(Error::InsufficientData(2))));
    }

    #[test]
    fn slice_examples() {
        let k = gauss();
        let v = bad_k_slice(&k, Complex::new(1.0, 2.0)).unwrap();
        assert_eq!(v.as_slice(), &[Complex::new(1.0, 2.0), Complex::new(1.0, -2.0)]);
        let v = bad_k_slice(&k, Complex::new(0.7, 0.0)).unwrap();
        assert!(v.as_slice().iter().all(|z| *z == Complex::new(0.7, 0.0)));
        let quartic = NumberField::new(FieldSpec::poly(vec![1, 0, 0, 0, 1])).unwrap();
        assert!(matches!(bad_k_slice(&quartic, Complex::new(1.0, 0.0)), Err(Error::Unsupported(_))));
        assert_eq!(twisted_diagonal(&quartic, &[1.0, 0.0, 0.0, 0.0]).unwrap().len(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in [1, 3] {
            let k = NumberField::new(FieldSpec::quadratic(d)).unwrap();
            for _ in 0..100 {
                let p = AlgebraicInt::new(vec![rng.random_range(-9..=9), rng.random_range(-9..=9)]);
                let q = AlgebraicInt::new(vec![rng.random_range(-9..=9), rng.random_range(1..=9)]);
                let (ep, eq) = (k.embed::<f64>(&p), k.embed::<f64>(&q));
                let v = bad_k_slice(&k, ep[0] / eq[0]).unwrap();
                for j in 0..2 {
                    assert!((v.as_slice()[j] - ep[j] / eq[j]).norm() < 1e-12);
                }
            }
        }
    }
}
