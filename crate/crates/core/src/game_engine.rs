//! Hyperplane absolute (HA) and potential (HP) games in `C^n`: move legality,
//! transcripts and audits, the blocking strategy for `Bad_eps(K, r)`, and
//! adversarial ball players.

use std::collections::BTreeSet;

use log::warn;
use num_complex::Complex;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bad_approx::{
    ball_class, band_norm_range, delta_box_of, pick_constants, ratios_constant, resonant_pairs_in_class,
    GameConstants,
};
use crate::error::{Error, Result};
use crate::number_field::{FieldSpec, NumberField, WeightVector};
use crate::real::{cabs, cconj, hp_serde, vdist_sqr, vnorm, Hp, Real};

/// Closed ball in `C^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    #[serde(with = "hp_serde::complex_vec")]
    pub center: Vec<Complex<Hp>>,
    #[serde(with = "hp_serde")]
    pub radius: Hp,
}

impl Ball {
    pub fn new(center: Vec<Complex<Hp>>, radius: Hp) -> Result<Self> {
        if !(radius > Hp::zero()) || !radius.is_finite() {
            return Err(Error::Config(format!("ball radius must be positive, got {}", radius.to_f64())));
        }
        Ok(Self { center, radius })
    }

    pub fn from_f64(center: &[Complex<f64>], radius: f64) -> Result<Self> {
        Self::new(center.iter().map(|z| crate::real::to_complex(*z)).collect(), Hp::from_f64(radius))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `other` lies inside `self`.
    pub fn contains_ball(&self, other: &Ball) -> bool {
        let gap = self.radius - other.radius;
        gap >= Hp::zero() && vdist_sqr(&self.center, &other.center) <= gap * gap
    }

    pub fn contains_point(&self, z: &[Complex<Hp>]) -> bool {
        vdist_sqr(&self.center, z) <= self.radius * self.radius
    }
}

/// Open neighbourhood `{z : |<z, a> - c| < delta}` of a complex hyperplane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneNbhd {
    #[serde(with = "hp_serde::complex_vec")]
    pub normal: Vec<Complex<Hp>>,
    #[serde(with = "hp_serde::complex")]
    pub offset: Complex<Hp>,
    #[serde(with = "hp_serde")]
    pub delta: Hp,
}

impl HyperplaneNbhd {
    /// Normalises `normal` if needed, with a warning.
    pub fn new(normal: Vec<Complex<Hp>>, offset: Complex<Hp>, delta: Hp) -> Result<Self> {
        let len = vnorm(&normal);
        if !(len > Hp::zero()) {
            return Err(Error::Config("hyperplane normal is zero".into()));
        }
        let mut h = Self { normal, offset, delta };
        if (len - Hp::one()).abs() > Hp::from_f64(1e-12) {
            warn!("renormalising hyperplane normal of length {}", len.to_f64());
            h.normal.iter_mut().for_each(|a| *a /= len);
            h.offset /= len;
        }
        Ok(h)
    }

    /// `{|z_j - c| < delta}`.
    pub fn axis(n: usize, j: usize, offset: Complex<Hp>, delta: Hp) -> Self {
        let mut normal = vec![Complex::new(Hp::zero(), Hp::zero()); n];
        normal[j] = Complex::new(Hp::one(), Hp::zero());
        Self { normal, offset, delta }
    }
}

/// Euclidean distance from `w` to the hyperplane `<z, a> = c`, with the
/// Hermitian product `<z, a> = sum z_j conj(a_j)`.
pub fn hyperplane_distance(w: &[Complex<Hp>], h: &HyperplaneNbhd) -> Hp {
    let len = vnorm(&h.normal);
    let unit = (len - Hp::one()).abs() <= Hp::from_f64(1e-12);
    if !unit {
        warn!("hyperplane normal has length {}; renormalising", len.to_f64());
    }
    let ip = w
        .iter()
        .zip(&h.normal)
        .fold(Complex::new(Hp::zero(), Hp::zero()), |s, (z, a)| s + *z * cconj(*a));
    let d = cabs(ip - h.offset);
    if unit {
        d
    } else {
        d / len
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "game", rename_all = "lowercase")]
pub enum GameKind {
    /// One neighbourhood per turn with `delta <= beta rho`.
    Ha,
    /// Finitely many neighbourhoods with `sum delta^gamma <= (beta rho)^gamma`.
    Hp { gamma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub beta: f64,
    #[serde(flatten)]
    pub kind: GameKind,
    pub rounds: usize,
    pub initial: Ball,
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Config(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if let GameKind::Hp { gamma } = self.kind {
            if !(gamma > 0.0) {
                return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
            }
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        Ok(())
    }

    fn beta_hp(&self) -> Hp {
        Hp::from_f64(self.beta)
    }
}

/// Reason a move was rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    DeltaExceeds,
    WrongMoveCount,
    BudgetExceeded,
    NotNested,
    RadiusGrew,
    RadiusTooSmall,
    MeetsNeighborhood(usize),
    DimensionMismatch,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::DeltaExceeds => write!(f, "delta_exceeds"),
            Violation::WrongMoveCount => write!(f, "wrong_move_count"),
            Violation::BudgetExceeded => write!(f, "budget_exceeded"),
            Violation::NotNested => write!(f, "not_nested"),
            Violation::RadiusGrew => write!(f, "radius_grew"),
            Violation::RadiusTooSmall => write!(f, "radius_too_small"),
            Violation::MeetsNeighborhood(k) => write!(f, "meets_neighborhood_{k}"),
            Violation::DimensionMismatch => write!(f, "dimension_mismatch"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Legality {
    Legal,
    Illegal(Violation),
}

impl Legality {
    pub fn is_legal(&self) -> bool {
        matches!(self, Legality::Legal)
    }
}

fn budget_sum(gamma: f64, nbhds: &[HyperplaneNbhd]) -> Hp {
    if gamma == 1.0 {
        nbhds.iter().fold(Hp::zero(), |s, h| s + h.delta)
    } else {
        let g = Hp::from_f64(gamma);
        nbhds.iter().fold(Hp::zero(), |s, h| s + h.delta.powf(g))
    }
}

/// Legality of Player A's move against the current ball.
pub fn validate_a_move(cfg: &GameConfig, ball: &Ball, nbhds: &[HyperplaneNbhd]) -> Legality {
    let cap = cfg.beta_hp() * ball.radius;
    if nbhds.iter().any(|h| h.normal.len() != ball.dim() || h.delta < Hp::zero()) {
        return Legality::Illegal(Violation::DimensionMismatch);
    }
    match cfg.kind {
        GameKind::Ha => {
            if nbhds.len() != 1 {
                Legality::Illegal(Violation::WrongMoveCount)
            } else if nbhds[0].delta > cap {
                Legality::Illegal(Violation::DeltaExceeds)
            } else {
                Legality::Legal
            }
        }
        GameKind::Hp { gamma } => {
            let allowed = if gamma == 1.0 { cap } else { cap.powf(Hp::from_f64(gamma)) };
            if budget_sum(gamma, nbhds) > allowed {
                Legality::Illegal(Violation::BudgetExceeded)
            } else {
                Legality::Legal
            }
        }
    }
}

/// Legality of Player B's next ball: nested, radius in `[beta rho, rho]`, and
/// clear of every neighbourhood of A's last move.
pub fn validate_b_move(cfg: &GameConfig, ball: &Ball, nbhds: &[HyperplaneNbhd], next: &Ball) -> Legality {
    if next.dim() != ball.dim() {
        return Legality::Illegal(Violation::DimensionMismatch);
    }
    if next.radius > ball.radius {
        return Legality::Illegal(Violation::RadiusGrew);
    }
    if next.radius < cfg.beta_hp() * ball.radius {
        return Legality::Illegal(Violation::RadiusTooSmall);
    }
    if !ball.contains_ball(next) {
        return Legality::Illegal(Violation::NotNested);
    }
    for (k, h) in nbhds.iter().enumerate() {
        if hyperplane_distance(&next.center, h) < h.delta + next.radius {
            return Legality::Illegal(Violation::MeetsNeighborhood(k));
        }
    }
    Legality::Legal
}

/// What a strategy is allowed to see.
pub struct GameState<'a> {
    pub config: &'a GameConfig,
    pub round: usize,
    pub balls: &'a [Ball],
    pub last_a_move: Option<&'a [HyperplaneNbhd]>,
}

impl GameState<'_> {
    pub fn ball(&self) -> &Ball {
        self.balls.last().expect("game state always holds a ball")
    }
}

/// Reconstructible description of a strategy, stored in transcripts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum StrategySpec {
    /// A: a far-away, near-zero-width neighbourhood (HA) or nothing (HP).
    Trivial,
    /// A: the blocking strategy for `Bad_eps(K, r)`.
    Bad { field: FieldSpec, weights: WeightVector },
    Random { seed: u64 },
    Greedy {
        #[serde(with = "hp_serde::complex_vec")]
        target: Vec<Complex<Hp>>,
        seed: u64,
    },
}

pub trait PlayerA {
    fn respond(&mut self, state: &GameState) -> Result<Vec<HyperplaneNbhd>>;
    fn spec(&self) -> StrategySpec;
    fn constants(&self) -> Option<&GameConstants> {
        None
    }
    fn max_class(&self) -> Option<u32> {
        None
    }
}

pub trait PlayerB {
    fn respond(&mut self, state: &GameState) -> Result<Ball>;
    fn spec(&self) -> StrategySpec;
}

/// Checks of a finished transcript.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub nesting: bool,
    pub radius_band: bool,
    pub budget: bool,
    pub avoidance: bool,
    pub failures: Vec<String>,
}

impl Audit {
    pub fn ok(&self) -> bool {
        self.nesting && self.radius_band && self.budget && self.avoidance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub config: GameConfig,
    pub player_a: StrategySpec,
    pub player_b: StrategySpec,
    /// `B_0, ..., B_rounds`.
    pub balls: Vec<Ball>,
    /// `A_0, ..., A_{rounds-1}`; `A_j` answers `B_j`.
    pub a_moves: Vec<Vec<HyperplaneNbhd>>,
    #[serde(with = "hp_serde::complex_vec")]
    pub limit_point: Vec<Complex<Hp>>,
    pub constants: Option<GameConstants>,
    pub max_class: Option<u32>,
    pub audit: Audit,
}

impl Transcript {
    pub fn radii(&self) -> Vec<f64> {
        self.balls.iter().map(|b| b.radius.to_f64()).collect()
    }
}

/// Re-checks every move of a transcript.
pub fn audit(t: &Transcript) -> Audit {
    let cfg = &t.config;
    let mut a = Audit { nesting: true, radius_band: true, budget: true, avoidance: true, failures: Vec::new() };
    if t.balls.len() != t.a_moves.len() + 1 {
        a.nesting = false;
        a.failures.push("move counts do not alternate".into());
        return a;
    }
    let beta = cfg.beta_hp();
    for (j, nb) in t.a_moves.iter().enumerate() {
        let (ball, next) = (&t.balls[j], &t.balls[j + 1]);
        if !ball.contains_ball(next) {
            a.nesting = false;
            a.failures.push(format!("round {j}: ball not nested"));
        }
        if next.radius > ball.radius || next.radius < beta * ball.radius {
            a.radius_band = false;
            a.failures.push(format!("round {j}: radius ratio outside [beta, 1]"));
        }
        if let Legality::Illegal(v) = validate_a_move(cfg, ball, nb) {
            a.budget = false;
            a.failures.push(format!("round {j}: A move {v}"));
        }
        for (k, h) in nb.iter().enumerate() {
            if hyperplane_distance(&next.center, h) < h.delta + next.radius {
                a.avoidance = false;
                a.failures.push(format!("round {j}: ball meets neighbourhood {k}"));
            }
        }
    }
    a
}

pub fn run_game(cfg: &GameConfig, a: &mut dyn PlayerA, b: &mut dyn PlayerB) -> Result<Transcript> {
    cfg.validate()?;
    let mut balls = vec![cfg.initial.clone()];
    let mut a_moves: Vec<Vec<HyperplaneNbhd>> = Vec::with_capacity(cfg.rounds);
    for round in 0..cfg.rounds {
        let state = GameState { config: cfg, round, balls: &balls, last_a_move: a_moves.last().map(|v| v.as_slice()) };
        let nb = a.respond(&state)?;
        if let Legality::Illegal(v) = validate_a_move(cfg, state.ball(), &nb) {
            return Err(Error::IllegalMove { player: 'A', round, reason: v.to_string() });
        }
        a_moves.push(nb);
        let state = GameState { config: cfg, round, balls: &balls, last_a_move: a_moves.last().map(|v| v.as_slice()) };
        let next = b.respond(&state)?;
        if let Legality::Illegal(v) = validate_b_move(cfg, state.ball(), a_moves.last().unwrap(), &next) {
            return Err(Error::IllegalMove { player: 'B', round, reason: v.to_string() });
        }
        balls.push(next);
    }
    let limit_point = balls.last().unwrap().center.clone();
    let mut t = Transcript {
        config: cfg.clone(),
        player_a: a.spec(),
        player_b: b.spec(),
        balls,
        a_moves,
        limit_point,
        constants: a.constants().cloned(),
        max_class: a.max_class(),
        audit: Audit::default(),
    };
    t.audit = audit(&t);
    Ok(t)
}

/// Rebuilds the players recorded in a transcript.
pub fn players_from_spec(
    cfg: &GameConfig,
    a: &StrategySpec,
    b: &StrategySpec,
) -> Result<(Box<dyn PlayerA>, Box<dyn PlayerB>)> {
    let pa: Box<dyn PlayerA> = match a {
        StrategySpec::Trivial => Box::new(TrivialA),
        StrategySpec::Bad { field, weights } => {
            let GameKind::Hp { gamma } = cfg.kind else {
                return Err(Error::Config("the blocking strategy plays the HP game".into()));
            };
            Box::new(BadStrategy::new(NumberField::new(field.clone())?, weights.clone(), cfg.beta, gamma)?)
        }
        other => return Err(Error::Config(format!("{other:?} is not a Player A strategy"))),
    };
    let pb: Box<dyn PlayerB> = match b {
        StrategySpec::Random { seed } => Box::new(Adversary::random(*seed)),
        StrategySpec::Greedy { target, seed } => Box::new(Adversary::greedy(target.clone(), *seed)),
        other => return Err(Error::Config(format!("{other:?} is not a Player B strategy"))),
    };
    Ok((pa, pb))
}

/// Re-audits a stored transcript and regenerates it from its recorded players.
pub fn replay(t: &Transcript) -> Result<Audit> {
    let mut a = audit(t);
    if a != t.audit {
        a.failures.push("stored audit differs from recomputed audit".into());
    }
    let (mut pa, mut pb) = players_from_spec(&t.config, &t.player_a, &t.player_b)?;
    let again = run_game(&t.config, pa.as_mut(), pb.as_mut())?;
    if serde_json::to_string(&again)? != serde_json::to_string(t)? {
        a.nesting = false;
        a.failures.push("regenerated transcript differs".into());
    }
    Ok(a)
}

/// Player A making a minimal legal move each turn.
pub struct TrivialA;

impl PlayerA for TrivialA {
    fn respond(&mut self, state: &GameState) -> Result<Vec<HyperplaneNbhd>> {
        let ball = state.ball();
        match state.config.kind {
            GameKind::Hp { .. } => Ok(Vec::new()),
            GameKind::Ha => {
                let off = ball.center[0] + Complex::new(ball.radius * Hp::from_f64(4.0), Hp::zero());
                let delta = ball.radius * state.config.beta_hp() * Hp::from_f64(1e-9);
                Ok(vec![HyperplaneNbhd::axis(ball.dim(), 0, off, delta)])
            }
        }
    }

    fn spec(&self) -> StrategySpec {
        StrategySpec::Trivial
    }
}

const MAX_BANDS: u32 = 64;

/// Blocks, at the first ball of each class `m`, the resonance boxes of every
/// band `(m + l, l)` that meet the ball, one axis-normal neighbourhood per band.
pub struct BadStrategy {
    field: NumberField,
    weights: WeightVector,
    beta: f64,
    gamma: f64,
    consts: Option<GameConstants>,
    handled: BTreeSet<u32>,
}

impl BadStrategy {
    pub fn new(field: NumberField, weights: WeightVector, beta: f64, gamma: f64) -> Result<Self> {
        weights.check_degree(&field)?;
        Ok(Self { field, weights, beta, gamma, consts: None, handled: BTreeSet::new() })
    }

    /// Starts with constants fixed in advance instead of at the first ball of radius below 1.
    pub fn with_constants(field: NumberField, weights: WeightVector, consts: GameConstants) -> Result<Self> {
        let mut s = Self::new(field, weights, consts.beta, consts.gamma)?;
        s.consts = Some(consts);
        Ok(s)
    }

    /// Neighbourhoods covering the resonance boxes of class `m` meeting `ball`.
    pub fn block(&self, consts: &GameConstants, ball: &Ball, m: u32) -> Result<Vec<HyperplaneNbhd>> {
        let omega = self.weights.omega();
        let n = self.field.degree();
        let mut out = Vec::new();
        for l in 1..=MAX_BANDS {
            if band_norm_range(consts, &self.weights, m, l).is_none() {
                break;
            }
            let pairs = resonant_pairs_in_class(consts, &self.field, &self.weights, ball, m, l)?;
            if pairs.is_empty() {
                continue;
            }
            if !ratios_constant(&self.field, &pairs) {
                return Err(Error::RatioNotConstant { band: l });
            }
            let eps = consts.eps();
            let mut delta = Hp::zero();
            let mut offset = None;
            for (p, q) in &pairs {
                let ep = self.field.embed::<Hp>(p);
                let eq = self.field.embed::<Hp>(q);
                let bx = delta_box_of(&self.weights, eps, p, q, &ep, &eq);
                delta = delta.max(bx.radii[omega]);
                offset.get_or_insert(bx.center[omega]);
            }
            out.push(HyperplaneNbhd::axis(n, omega, offset.unwrap(), delta));
        }
        let cap = Hp::from_f64(self.beta) * ball.radius;
        let (spent, allowed) = if self.gamma == 1.0 {
            (budget_sum(1.0, &out), cap)
        } else {
            (budget_sum(self.gamma, &out), cap.powf(Hp::from_f64(self.gamma)))
        };
        if spent > allowed {
            return Err(Error::BudgetExceeded { spent: spent.to_f64(), allowed: allowed.to_f64() });
        }
        Ok(out)
    }
}

impl PlayerA for BadStrategy {
    fn respond(&mut self, state: &GameState) -> Result<Vec<HyperplaneNbhd>> {
        let ball = state.ball();
        if self.consts.is_none() {
            if ball.radius >= Hp::one() {
                return Ok(Vec::new());
            }
            self.consts = Some(pick_constants(self.beta, self.gamma, ball.radius, self.field.degree())?);
        }
        let consts = self.consts.as_ref().unwrap();
        let Ok(m) = ball_class(consts, ball.radius) else {
            return Ok(Vec::new());
        };
        if self.handled.contains(&m) {
            return Ok(Vec::new());
        }
        let out = self.block(consts, ball, m)?;
        self.handled.insert(m);
        Ok(out)
    }

    fn spec(&self) -> StrategySpec {
        StrategySpec::Bad { field: self.field.spec().clone(), weights: self.weights.clone() }
    }

    fn constants(&self) -> Option<&GameConstants> {
        self.consts.as_ref()
    }

    fn max_class(&self) -> Option<u32> {
        self.handled.iter().next_back().copied()
    }
}

const CIRCLE_ANGLES: usize = 64;
const RANDOM_TRIES: usize = 256;

/// Player B shrinking by exactly `beta` each turn, either towards a uniform
/// random point or greedily towards a target.
pub struct Adversary {
    target: Option<Vec<Complex<Hp>>>,
    seed: u64,
    rng: ChaCha8Rng,
}

impl Adversary {
    pub fn random(seed: u64) -> Self {
        Self { target: None, seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn greedy(target: Vec<Complex<Hp>>, seed: u64) -> Self {
        Self { target: Some(target), seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Uniform point of the unit ball in `R^{2n}`.
    fn unit_ball_point(&mut self, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..2 * n).map(|_| self.rng.random_range(-1.0..=1.0)).collect();
            if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                return v;
            }
        }
    }

    /// Legal ball with radius `beta rho` whose centre is closest to `target`,
    /// over a fixed family of candidate centres.
    fn closest_legal(
        cfg: &GameConfig,
        ball: &Ball,
        nbhds: &[HyperplaneNbhd],
        target: &[Complex<Hp>],
    ) -> Option<Ball> {
        let n = ball.dim();
        let beta = cfg.beta_hp();
        let rho = beta * ball.radius;
        let reach = (Hp::one() - beta) * ball.radius * Hp::from_f64(1.0 - 1e-30);
        let mut cands = vec![ball.center.clone()];
        for a in 0..2 * n {
            for b in a + 1..2 * n {
                for frac in [1.0, 0.75, 0.5, 0.25] {
                    let r = reach * Hp::from_f64(frac);
                    for k in 0..CIRCLE_ANGLES {
                        let th = std::f64::consts::TAU * k as f64 / CIRCLE_ANGLES as f64;
                        let mut c = ball.center.clone();
                        shift(&mut c, a, r * Hp::from_f64(th.cos()));
                        shift(&mut c, b, r * Hp::from_f64(th.sin()));
                        cands.push(c);
                    }
                }
            }
        }
        cands
            .into_iter()
            .filter_map(|c| Ball::new(c, rho).ok())
            .filter(|nb| validate_b_move(cfg, ball, nbhds, nb).is_legal())
            .min_by(|x, y| {
                vdist_sqr(&x.center, target).partial_cmp(&vdist_sqr(&y.center, target)).unwrap()
            })
    }
}

fn shift(c: &mut [Complex<Hp>], real_axis: usize, by: Hp) {
    let z = &mut c[real_axis / 2];
    if real_axis.is_multiple_of(2) {
        z.re += by;
    } else {
        z.im += by;
    }
}

impl PlayerB for Adversary {
    fn respond(&mut self, state: &GameState) -> Result<Ball> {
        let cfg = state.config;
        let ball = state.ball();
        let nbhds = state.last_a_move.unwrap_or(&[]);
        let beta = cfg.beta_hp();
        let rho = beta * ball.radius;
        let reach = (Hp::one() - beta) * ball.radius * Hp::from_f64(1.0 - 1e-30);
        let n = ball.dim();
        let illegal = |reason: &str| Error::IllegalMove { player: 'B', round: state.round, reason: reason.into() };
        let goal = match &self.target {
            Some(t) => {
                let d: Vec<Complex<Hp>> = t.iter().zip(&ball.center).map(|(a, b)| *a - *b).collect();
                let len = vnorm(&d);
                let step = if len > reach { reach / len } else { Hp::one() };
                let c: Vec<Complex<Hp>> =
                    ball.center.iter().zip(&d).map(|(b, v)| *b + *v * step).collect();
                let next = Ball::new(c, rho)?;
                if validate_b_move(cfg, ball, nbhds, &next).is_legal() {
                    return Ok(next);
                }
                t.clone()
            }
            None => {
                let mut first = None;
                for _ in 0..RANDOM_TRIES {
                    let u = self.unit_ball_point(n);
                    let mut c = ball.center.clone();
                    for (k, x) in u.iter().enumerate() {
                        shift(&mut c, k, reach * Hp::from_f64(*x));
                    }
                    let next = Ball::new(c, rho)?;
                    if validate_b_move(cfg, ball, nbhds, &next).is_legal() {
                        return Ok(next);
                    }
                    first.get_or_insert(next.center);
                }
                first.unwrap()
            }
        };
        Self::closest_legal(cfg, ball, nbhds, &goal).ok_or_else(|| illegal("no legal ball among candidates"))
    }

    fn spec(&self) -> StrategySpec {
        match &self.target {
            Some(t) => StrategySpec::Greedy { target: t.clone(), seed: self.seed },
            None => StrategySpec::Random { seed: self.seed },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::to_complex;

    fn hp(x: f64) -> Hp {
        Hp::from_f64(x)
    }

    fn cv(v: &[(f64, f64)]) -> Vec<Complex<Hp>> {
        v.iter().map(|&(a, b)| to_complex(Complex::new(a, b))).collect()
    }

    fn hp_game(beta: f64, gamma: f64, rounds: usize) -> GameConfig {
        GameConfig {
            beta,
            kind: GameKind::Hp { gamma },
            rounds,
            initial: Ball::new(cv(&[(0.0, 0.0), (0.0, 0.0)]), hp(1.0)).unwrap(),
        }
    }

    #[test]
    fn distance_to_axis_hyperplane() {
        let h = HyperplaneNbhd::axis(2, 0, Complex::new(hp(0.0), hp(0.0)), hp(0.1));
        let w = cv(&[(3.0, 4.0), (7.0, -1.0)]);
        assert!((hyperplane_distance(&w, &h).to_f64() - 5.0).abs() < 1e-15);
        let on = cv(&[(0.0, 0.0), (2.0, 2.0)]);
        assert_eq!(hyperplane_distance(&on, &h), Hp::zero());
    }

    #[test]
    fn distance_is_the_infimum_over_sampled_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal = cv(&[(0.6, 0.0), (0.0, 0.8)]);
        let c = Complex::new(hp(0.3), hp(-0.2));
        let h = HyperplaneNbhd::new(normal.clone(), c, hp(0.1)).unwrap();
        let w = cv(&[(1.0, 2.0), (-0.5, 0.25)]);
        let d = hyperplane_distance(&w, &h).to_f64();
        // points of H: c a + s (conj a_2, -conj a_1)
        let a: Vec<Complex<f64>> = normal.iter().map(|z| crate::real::complex_to_f64(*z)).collect();
        let cf = Complex::new(0.3, -0.2);
        let perp = [a[1].conj(), -a[0].conj()];
        let wf: Vec<Complex<f64>> = w.iter().map(|z| crate::real::complex_to_f64(*z)).collect();
        for _ in 0..10_000 {
            let s = Complex::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let z = [cf * a[0] + s * perp[0], cf * a[1] + s * perp[1]];
            let ip = z[0] * a[0].conj() + z[1] * a[1].conj();
            assert!((ip - cf).norm() < 1e-12);
            let dist = ((z[0] - wf[0]).norm_sqr() + (z[1] - wf[1]).norm_sqr()).sqrt();
            assert!(dist >= d - 1e-9);
        }
    }

    #[test]
    fn move_legality_examples() {
        let ha = GameConfig { kind: GameKind::Ha, ..hp_game(0.3, 1.0, 1) };
        let ball = ha.initial.clone();
        let wide = HyperplaneNbhd::axis(2, 0, Complex::new(hp(5.0), hp(0.0)), hp(0.4));
        assert_eq!(validate_a_move(&ha, &ball, &[wide]), Legality::Illegal(Violation::DeltaExceeds));
        let hpg = hp_game(0.3, 1.0, 1);
        let mk = |d| HyperplaneNbhd::axis(2, 0, Complex::new(hp(5.0), hp(0.0)), hp(d));
        assert!(validate_a_move(&hpg, &ball, &[mk(0.1), mk(0.1)]).is_legal());
        assert!(!validate_a_move(&hpg, &ball, &[mk(0.2), mk(0.2)]).is_legal());
        let quarter = hp_game(0.25, 1.0, 1);
        let tangent = Ball::new(cv(&[(0.75, 0.0), (0.0, 0.0)]), hp(0.25)).unwrap();
        assert!(validate_b_move(&quarter, &ball, &[], &tangent).is_legal());
        let outside = Ball::new(cv(&[(0.76, 0.0), (0.0, 0.0)]), hp(0.25)).unwrap();
        assert_eq!(validate_b_move(&quarter, &ball, &[], &outside), Legality::Illegal(Violation::NotNested));
        let blocker = HyperplaneNbhd::axis(2, 0, Complex::new(hp(0.75), hp(0.0)), hp(0.01));
        assert!(!validate_b_move(&quarter, &ball, &[blocker], &tangent).is_legal());
    }

    #[test]
    fn trivial_vs_random_shrinks_by_beta() {
        let cfg = hp_game(0.3, 1.0, 50);
        let t = run_game(&cfg, &mut TrivialA, &mut Adversary::random(5)).unwrap();
        assert!(t.audit.ok());
        let last = t.balls.last().unwrap().radius.to_f64();
        assert!(last <= 0.3f64.powi(50) * 1.000001);
        for b in &t.balls {
            assert!(b.contains_point(&t.limit_point));
        }
        let ha = GameConfig { kind: GameKind::Ha, ..cfg };
        assert!(run_game(&ha, &mut TrivialA, &mut Adversary::random(5)).unwrap().audit.ok());
    }

    #[test]
    fn greedy_is_blocked_by_the_last_neighbourhood() {
        let cfg = hp_game(0.3, 1.0, 1);
        let target = cv(&[(0.9, 0.0), (0.0, 0.0)]);
        let h = HyperplaneNbhd::axis(2, 0, Complex::new(hp(0.6), hp(0.0)), hp(0.2));
        let balls = vec![cfg.initial.clone()];
        let state = GameState { config: &cfg, round: 0, balls: &balls, last_a_move: Some(std::slice::from_ref(&h)) };
        let next = Adversary::greedy(target, 1).respond(&state).unwrap();
        assert!(validate_b_move(&cfg, &cfg.initial, std::slice::from_ref(&h), &next).is_legal());
        assert!(hyperplane_distance(&next.center, &h) >= h.delta + next.radius);
    }

    #[test]
    fn seeded_games_replay_identically() {
        let cfg = hp_game(0.3, 1.0, 20);
        let a = run_game(&cfg, &mut TrivialA, &mut Adversary::random(42)).unwrap();
        let b = run_game(&cfg, &mut TrivialA, &mut Adversary::random(42)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let back: Transcript = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert!(replay(&back).unwrap().ok());
    }

    #[test]
    fn blocking_at_a_ratio_point() {
        let k = NumberField::new(FieldSpec::quadratic(1)).unwrap();
        let bal = WeightVector::balanced(2);
        let consts = pick_constants(0.3, 1.0, 0.9, 2).unwrap();
        let q = crate::number_field::AlgebraicInt::new(vec![1, 1]);
        let center: Vec<Complex<Hp>> =
            k.embed::<Hp>(&k.one()).iter().zip(k.embed::<Hp>(&q)).map(|(a, b)| *a / b).collect();
        let ball = Ball::new(center, consts.rho0 * consts.r_pow(-7)).unwrap();
        let strat = BadStrategy::with_constants(k.clone(), bal.clone(), consts.clone()).unwrap();
        let out = strat.block(&consts, &ball, 7).unwrap();
        assert_eq!(out.len(), 1);
        let bx = crate::bad_approx::delta_box(&k, &bal, consts.eps(), &k.one(), &q).unwrap();
        assert_eq!(out[0].delta, bx.radii[bal.omega()]);
        // a ball far from small ratio points gets nothing
        let far = Ball::new(cv(&[(0.3141, 0.2718), (0.3141, -0.2718)]), consts.rho0 * consts.r_pow(-2)).unwrap();
        assert!(strat.block(&consts, &far, 2).unwrap().is_empty());
    }
}
