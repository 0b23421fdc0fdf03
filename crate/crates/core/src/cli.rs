//! Command-line front end: option resolution, experiment runs and artifact files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::bad_approx::{
    bad_constant_witness, in_bad_eps, partition_index, pick_constants, ComplexVector,
};
use crate::dani_flow::{classify_orbit, gaussian_witness, systole_profile, DEFAULT_SLOPE_TOL, WITNESS_MIN_SYSTOLE};
use crate::dimension_lab::{box_count_dimension, survey, SliceWeights, Window, DEFAULT_HEIGHT_CONSTANT};
use crate::error::{Error, Result};
use crate::game_engine::{
    replay, run_game, Adversary, Ball, BadStrategy, GameConfig, GameKind, PlayerB, Transcript,
};
use crate::number_field::{admissible_of, height_of, weighted_norm_of, FieldSpec, NumberField, WeightVector};
use crate::real::{complex_to_f64, to_complex, Hp, Real};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ASSERTION: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

const PRECISION_VAR: &str = "BADFLOW_PRECISION";

#[derive(Parser, Debug)]
#[command(name = "badflow", version, about = "Weighted badly approximable vectors over imaginary number fields")]
struct Cli {
    #[command(flatten)]
    opts: Settings,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Number field data.
    #[command(subcommand)]
    Field(FieldCmd),
    /// Finite-height approximation constants.
    #[command(subcommand)]
    Bad(BadCmd),
    /// Resonance boxes and their partition indices.
    #[command(subcommand)]
    Boxes(BoxesCmd),
    /// Blocking-strategy games.
    #[command(subcommand)]
    Game(GameCmd),
    /// Systole profiles along the diagonal flow.
    #[command(subcommand)]
    Orbit(OrbitCmd),
    /// Box-counting surveys.
    #[command(subcommand)]
    Dim(DimCmd),
}

#[derive(Subcommand, Debug)]
enum FieldCmd {
    Info,
}

#[derive(Subcommand, Debug)]
enum BadCmd {
    Constant,
}

#[derive(Subcommand, Debug)]
enum BoxesCmd {
    Dump,
}

#[derive(Subcommand, Debug)]
enum GameCmd {
    Run,
    Replay { transcript: PathBuf },
}

#[derive(Subcommand, Debug)]
enum OrbitCmd {
    Profile,
}

#[derive(Subcommand, Debug)]
enum DimCmd {
    Survey,
}

/// Every option, from flags or a JSON config file; the file wins.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct Settings {
    /// Imaginary quadratic field Q(sqrt(-D)).
    #[arg(long = "field-D", visible_alias = "D", global = true)]
    #[serde(rename = "field-D")]
    field_d: Option<u64>,
    /// Monic polynomial, coefficients from the constant term, e.g. "1,0,0,0,1".
    #[arg(long, global = true)]
    field_poly: Option<String>,
    /// Weight vector, e.g. "1/2,1/2".
    #[arg(long, global = true)]
    weights: Option<String>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    rho0: Option<f64>,
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// One value or a comma-separated list.
    #[arg(long, global = true)]
    eps: Option<String>,
    /// Dyadic levels "a:b".
    #[arg(long, global = true)]
    levels: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exact shortest vectors by enumeration.
    #[arg(long, global = true)]
    exact: Option<bool>,
    /// Point "re,im" on the conjugate diagonal, or "re,im;re,im;..." per embedding.
    #[arg(long, global = true, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long, global = true)]
    qmax: Option<f64>,
    #[arg(long, global = true)]
    hmax: Option<f64>,
    #[arg(long, global = true)]
    rounds: Option<usize>,
    /// "random" or "greedy".
    #[arg(long, global = true)]
    adversary: Option<String>,
    /// Greedy target, same format as --z.
    #[arg(long, global = true, allow_hyphen_values = true)]
    target: Option<String>,
    /// Initial ball centre, same format as --z.
    #[arg(long, global = true, allow_hyphen_values = true)]
    center: Option<String>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// "x0,x1,y0,y1".
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long, global = true)]
    c_height: Option<f64>,
    /// Use the weight e_1 on the survey slice.
    #[arg(long, global = true)]
    literal_e1: Option<bool>,
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Settings {
    fn overlay(&mut self, o: &Settings) {
        overlay!(self, o; field_d, field_poly, weights, beta, gamma, rho0, horizon, steps, eps, levels, seed,
            out, exact, z, qmax, hmax, rounds, adversary, target, center, threshold, window, c_height, literal_e1);
    }
}

/// Settings with defaults filled in; embedded in every artifact.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedConfig {
    pub field: FieldSpec,
    pub weights: Vec<f64>,
    pub beta: f64,
    pub gamma: f64,
    pub rho0: f64,
    pub horizon: f64,
    pub steps: usize,
    pub eps: Vec<f64>,
    pub levels: [u32; 2],
    pub seed: u64,
    pub exact: bool,
    pub z: String,
    pub qmax: f64,
    pub hmax: f64,
    pub rounds: usize,
    pub adversary: String,
    pub target: String,
    pub center: String,
    pub threshold: f64,
    pub window: [f64; 4],
    pub c_height: f64,
    pub literal_e1: bool,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| Error::Config(format!("bad {what} entry {x:?}"))))
        .collect()
}

fn resolve(s: &Settings) -> Result<(ResolvedConfig, PathBuf)> {
    let precision = match std::env::var(PRECISION_VAR) {
        Ok(v) => v.trim().parse::<u32>().map_err(|_| Error::Config(format!("{PRECISION_VAR}={v:?} is not a digit count")))?,
        Err(_) => crate::number_field::DEFAULT_PRECISION,
    };
    let field = match (s.field_d, &s.field_poly) {
        (Some(_), Some(_)) => return Err(Error::Config("give either --field-D or --field-poly".into())),
        (_, Some(p)) => FieldSpec::poly(parse_list(p, "polynomial")?),
        (d, None) => FieldSpec::quadratic(d.unwrap_or(1)),
    }
    .with_precision(precision);
    let levels = match &s.levels {
        Some(l) => {
            let (a, b) = l.split_once(':').ok_or_else(|| Error::Config(format!("levels {l:?} must look like a:b")))?;
            let a: u32 = a.trim().parse().map_err(|_| Error::Config(format!("bad level {a:?}")))?;
            let b: u32 = b.trim().parse().map_err(|_| Error::Config(format!("bad level {b:?}")))?;
            if a > b {
                return Err(Error::Config(format!("empty level range {a}:{b}")));
            }
            [a, b]
        }
        None => [3, 8],
    };
    let window: Vec<f64> = match &s.window {
        Some(w) => parse_list(w, "window")?,
        None => vec![0.0, 1.0, 0.0, 1.0],
    };
    if window.len() != 4 {
        return Err(Error::Config("window needs four numbers x0,x1,y0,y1".into()));
    }
    let cfg = ResolvedConfig {
        weights: match &s.weights {
            Some(w) => WeightVector::parse(w)?.as_slice().to_vec(),
            None => Vec::new(),
        },
        field,
        beta: s.beta.unwrap_or(0.3),
        gamma: s.gamma.unwrap_or(1.0),
        rho0: s.rho0.unwrap_or(0.9),
        horizon: s.horizon.unwrap_or(20.0),
        steps: s.steps.unwrap_or(201),
        eps: match &s.eps {
            Some(e) => parse_list(e, "eps")?,
            None => vec![0.05],
        },
        levels,
        seed: s.seed.unwrap_or(0),
        exact: s.exact.unwrap_or(false),
        z: s.z.clone().unwrap_or_else(|| {
            let w = complex_to_f64(gaussian_witness());
            format!("{},{}", w.re, w.im)
        }),
        qmax: s.qmax.unwrap_or(20.0),
        hmax: s.hmax.unwrap_or(1000.0),
        rounds: s.rounds.unwrap_or(40),
        adversary: s.adversary.clone().unwrap_or_else(|| "random".into()),
        target: s.target.clone().unwrap_or_else(|| "0.5,0.5".into()),
        center: s.center.clone().unwrap_or_else(|| "0.4,0.4".into()),
        threshold: s.threshold.unwrap_or(WITNESS_MIN_SYSTOLE / 2.0),
        window: [window[0], window[1], window[2], window[3]],
        c_height: s.c_height.unwrap_or(DEFAULT_HEIGHT_CONSTANT),
        literal_e1: s.literal_e1.unwrap_or(false),
    };
    let out = s.out.clone().unwrap_or_else(|| PathBuf::from("badflow-out"));
    Ok((cfg, out))
}

impl ResolvedConfig {
    fn weights(&self, field: &NumberField) -> Result<WeightVector> {
        let r = if self.weights.is_empty() {
            WeightVector::balanced(field.degree())
        } else {
            WeightVector::new(self.weights.clone())?
        };
        r.check_degree(field)?;
        Ok(r)
    }

    fn json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }
}

/// Parses "re,im" (conjugate diagonal) or "re,im;re,im;..." into a point of `C^n`.
fn parse_point(field: &NumberField, s: &str) -> Result<ComplexVector<f64>> {
    let parts: Vec<Complex<f64>> = s
        .split(';')
        .map(|c| {
            let v: Vec<f64> = parse_list(c, "point")?;
            match v.as_slice() {
                [re, im] => Ok(Complex::new(*re, *im)),
                _ => Err(Error::Config(format!("point entry {c:?} must be re,im"))),
            }
        })
        .collect::<Result<_>>()?;
    match parts.len() {
        1 => crate::dimension_lab::bad_k_slice(field, parts[0]).map_err(|e| match e {
            Error::Unsupported(m) => Error::Config(m),
            e => e,
        }),
        n if n == field.degree() => ComplexVector::new(parts),
        n => Err(Error::Config(format!("point has {n} coordinates, field degree is {}", field.degree()))),
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_c(z: Complex<f64>) -> String {
    format!("{}{}{}i", fmt_f(z.re), if z.im < 0.0 { "-" } else { "+" }, fmt_f(z.im.abs()))
}

struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, written: Vec::new() })
    }

    fn csv(&mut self, name: &str, cfg: &ResolvedConfig, header: &str, rows: &[String]) -> Result<()> {
        let mut s = format!("# config: {}\n{header}\n", cfg.json());
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        self.write(name, &s)
    }

    fn json<T: Serialize>(&mut self, name: &str, cfg: &ResolvedConfig, body: &T) -> Result<()> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            config: &'a ResolvedConfig,
            #[serde(flatten)]
            body: &'a T,
        }
        let s = serde_json::to_string_pretty(&Wrapped { config: cfg, body })?;
        self.write(name, &(s + "\n"))
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.dir.join(name);
        fs::write(&p, contents)?;
        self.written.push(p);
        Ok(())
    }

    fn report(&self) {
        for p in &self.written {
            println!("wrote {}", p.display());
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => EXIT_CONFIG,
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotTotallyImaginary(_)
        | Error::NotAField(_)
        | Error::InvalidSpec(_)
        | Error::InvalidBasis(_)
        | Error::InvalidWeights(_)
        | Error::NotAdmissible { .. }
        | Error::Unsupported(_)
        | Error::PrecisionUnavailable { .. }
        | Error::Config(_)
        | Error::Io(_)
        | Error::Json(_) => EXIT_CONFIG,
        _ => EXIT_ASSERTION,
    }
}

fn run(cli: Cli) -> Result<i32> {
    let mut settings = cli.opts.clone();
    if let Some(path) = &cli.opts.config {
        let text = fs::read_to_string(path)?;
        let file: Settings = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        settings.overlay(&file);
    }
    let (cfg, out_dir) = resolve(&settings)?;
    if let Command::Game(GameCmd::Replay { transcript }) = &cli.command {
        return game_replay(transcript);
    }
    let field = NumberField::new(cfg.field.clone())?;
    let mut out = Output::new(out_dir)?;
    let code = match cli.command {
        Command::Field(FieldCmd::Info) => field_info(&cfg, &field, &mut out)?,
        Command::Bad(BadCmd::Constant) => bad_constant(&cfg, &field, &mut out)?,
        Command::Boxes(BoxesCmd::Dump) => boxes_dump(&cfg, &field, &mut out)?,
        Command::Game(GameCmd::Run) => game_run(&cfg, &field, &mut out)?,
        Command::Game(GameCmd::Replay { .. }) => unreachable!(),
        Command::Orbit(OrbitCmd::Profile) => orbit_profile(&cfg, &field, &mut out)?,
        Command::Dim(DimCmd::Survey) => dim_survey(&cfg, &field, &mut out)?,
    };
    out.report();
    Ok(code)
}

fn field_info(cfg: &ResolvedConfig, field: &NumberField, out: &mut Output) -> Result<i32> {
    if !cfg.weights.is_empty() {
        cfg.weights(field)?;
    }
    let n = field.degree();
    let e = field.embedding_matrix::<f64>();
    println!("degree: {n}");
    println!("polynomial: {:?}", field.polynomial());
    println!("discriminant D_K: {}", field.discriminant());
    if let Some(d) = field.quadratic_d() {
        println!("class number one: {}", field.is_class_number_one());
        println!("D: {d}");
    }
    println!("embedding matrix (row j = sigma_j of the integral basis):");
    let mut rows = Vec::new();
    for j in 0..n {
        let row: Vec<String> = (0..n).map(|k| fmt_c(e[j * n + k])).collect();
        println!("  {}", row.join("  "));
        for k in 0..n {
            rows.push(format!("{j},{k},{},{}", fmt_f(e[j * n + k].re), fmt_f(e[j * n + k].im)));
        }
    }
    #[derive(Serialize)]
    struct Info {
        degree: usize,
        polynomial: Vec<i64>,
        discriminant: String,
        class_number_one: Option<bool>,
    }
    out.json(
        "field.json",
        cfg,
        &Info {
            degree: n,
            polynomial: field.polynomial().to_vec(),
            discriminant: field.discriminant().to_string(),
            class_number_one: field.quadratic_d().map(|_| field.is_class_number_one()),
        },
    )?;
    out.csv("embeddings.csv", cfg, "j,k,re,im", &rows)?;
    Ok(EXIT_OK)
}

fn bad_constant(cfg: &ResolvedConfig, field: &NumberField, out: &mut Output) -> Result<i32> {
    let r = cfg.weights(field)?;
    if let Some(msg) = r.vacuity_diagnostic(field) {
        println!("diagnostic: {msg}");
    }
    let z = parse_point(field, &cfg.z)?;
    let best = bad_constant_witness(field, &r, &z, cfg.qmax);
    println!("bad constant up to Qmax {}: {}", fmt_f(cfg.qmax), fmt_f(best.value));
    println!("attained at p = {}, q = {}", best.p, best.q);
    let zh: ComplexVector<Hp> = z.convert();
    let reports = cfg
        .eps
        .iter()
        .map(|&eps| in_bad_eps(field, &r, eps, &zh, cfg.hmax))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for rep in &reports {
        println!("in Bad_eps for eps {} up to H {}: {}", fmt_f(rep.eps), fmt_f(rep.hmax), rep.verdict);
        rows.push(format!("{},{},{}", fmt_f(rep.eps), fmt_f(rep.hmax), rep.verdict));
    }
    #[derive(Serialize)]
    struct Body<'a> {
        bad_constant: &'a crate::bad_approx::BadConstant,
        reports: &'a [crate::bad_approx::BadReport],
    }
    out.json("bad_constant.json", cfg, &Body { bad_constant: &best, reports: &reports })?;
    out.csv("bad_eps.csv", cfg, "eps,Hmax,verdict", &rows)?;
    Ok(EXIT_OK)
}

fn boxes_dump(cfg: &ResolvedConfig, field: &NumberField, out: &mut Output) -> Result<i32> {
    let r = cfg.weights(field)?;
    let consts = pick_constants(cfg.beta, cfg.gamma, cfg.rho0, field.degree())?;
    let eps = consts.eps();
    let mut rows = Vec::new();
    let mut orphans = 0;
    for q in field.enumerate_bounded(cfg.qmax) {
        let e = field.embed::<Hp>(&q);
        if !admissible_of(&r, eps, &e) {
            continue;
        }
        let idx = partition_index(&consts, field, &r, &q)?;
        let norm = weighted_norm_of(&r, &e);
        let class = match idx.decomposition {
            Some((c, _)) => c.to_string(),
            None => {
                orphans += 1;
                String::new()
            }
        };
        let coords: Vec<String> = q.coords().iter().map(|c| c.to_string()).collect();
        rows.push(format!(
            "{},{},{},{},{},{},{},{}",
            coords.join(" "),
            fmt_f(e[0].re.to_f64()),
            fmt_f(e[0].im.to_f64()),
            fmt_f(height_of(&r, &e).to_f64()),
            idx.m,
            idx.l,
            fmt_f(norm.to_f64()),
            class
        ));
    }
    println!("R = {}, eps = {}", consts.big_r, fmt_f(eps.to_f64()));
    println!("{} admissible denominators, {orphans} without a band decomposition", rows.len());
    out.csv("partition.csv", cfg, "q,q_re,q_im,H,m,l,norm_r,ball_class", &rows)?;
    out.json("constants.json", cfg, &consts)?;
    Ok(if orphans == 0 { EXIT_OK } else { EXIT_ASSERTION })
}

#[derive(Serialize, Deserialize)]
struct GameArtifact {
    transcript: Transcript,
    limit_check: Option<crate::bad_approx::BadReport>,
}

fn game_run(cfg: &ResolvedConfig, field: &NumberField, out: &mut Output) -> Result<i32> {
    let r = cfg.weights(field)?;
    let center = parse_point(field, &cfg.center)?;
    let gcfg = GameConfig {
        beta: cfg.beta,
        kind: GameKind::Hp { gamma: cfg.gamma },
        rounds: cfg.rounds,
        initial: Ball::from_f64(center.as_slice(), cfg.rho0)?,
    };
    let mut a = BadStrategy::new(field.clone(), r.clone(), cfg.beta, cfg.gamma)?;
    let mut b: Box<dyn PlayerB> = match cfg.adversary.as_str() {
        "random" => Box::new(Adversary::random(cfg.seed)),
        "greedy" => {
            let t = parse_point(field, &cfg.target)?;
            Box::new(Adversary::greedy(t.as_slice().iter().map(|z| to_complex(*z)).collect(), cfg.seed))
        }
        other => return Err(Error::Config(format!("unknown adversary {other:?}"))),
    };
    let t = run_game(&gcfg, &mut a, b.as_mut())?;
    let limit_check = match (&t.constants, t.max_class) {
        (Some(c), Some(m)) => {
            let hmax = c.h(m as i64 + 1).to_f64();
            Some(in_bad_eps(field, &r, c.eps().to_f64(), &ComplexVector::new(t.limit_point.clone())?, hmax)?)
        }
        _ => None,
    };
    let rows: Vec<String> = t
        .balls
        .iter()
        .enumerate()
        .map(|(j, ball)| {
            let moves = t.a_moves.get(j).map_or(0, |m| m.len());
            let spent = t.a_moves.get(j).map_or(0.0, |m| m.iter().map(|h| h.delta.to_f64()).sum());
            format!("{j},{},{moves},{}", fmt_f(ball.radius.to_f64()), fmt_f(spent))
        })
        .collect();
    out.csv("radii.csv", cfg, "round,radius,neighborhoods,delta_sum", &rows)?;
    out.write(
        "radii.gp",
        "set datafile separator ','\nset logscale y\nset xlabel 'round'\nset ylabel 'radius'\nplot 'radii.csv' using 1:2 with linespoints title 'radius'\n",
    )?;
    let audit_ok = t.audit.ok();
    let limit_ok = limit_check.as_ref().is_none_or(|c| c.verdict);
    println!("audit: {}", if audit_ok { "ok" } else { "FAILED" });
    for f in &t.audit.failures {
        println!("  {f}");
    }
    if let Some(c) = &limit_check {
        println!("limit point in Bad_eps (eps {}, H <= {}): {}", fmt_f(c.eps), fmt_f(c.hmax), c.verdict);
    }
    out.json("transcript.json", cfg, &GameArtifact { transcript: t, limit_check })?;
    Ok(if audit_ok && limit_ok { EXIT_OK } else { EXIT_ASSERTION })
}

fn game_replay(path: &Path) -> Result<i32> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let t: Transcript = match value.get("transcript") {
        Some(inner) => serde_json::from_value(inner.clone())?,
        None => serde_json::from_value(value)?,
    };
    let audit = replay(&t)?;
    if audit.ok() && audit.failures.is_empty() {
        println!("audit: ok");
        Ok(EXIT_OK)
    } else {
        println!("audit: FAILED");
        for f in &audit.failures {
            println!("  {f}");
        }
        Ok(EXIT_ASSERTION)
    }
}

fn orbit_profile(cfg: &ResolvedConfig, field: &NumberField, out: &mut Output) -> Result<i32> {
    let r = cfg.weights(field)?;
    let z = parse_point(field, &cfg.z)?;
    let profile = systole_profile(field, &r, &z.convert(), cfg.horizon, cfg.steps, cfg.exact)?;
    let verdict = classify_orbit(&profile, cfg.threshold, DEFAULT_SLOPE_TOL);
    let rows: Vec<String> = profile
        .times
        .iter()
        .zip(&profile.systoles)
        .map(|(t, l)| format!("{},{},{}", fmt_f(*t), fmt_f(*l), profile.exact as u8))
        .collect();
    out.csv("profile.csv", cfg, "t,lambda1,exact_flag", &rows)?;
    #[derive(Serialize)]
    struct Body<'a> {
        verdict: &'a crate::dani_flow::OrbitVerdict,
        tail: Option<crate::stats::LineFit>,
        witness_min_systole: f64,
        witness_bad_constant: f64,
    }
    out.json(
        "verdict.json",
        cfg,
        &Body {
            verdict: &verdict,
            tail: profile.tail,
            witness_min_systole: WITNESS_MIN_SYSTOLE,
            witness_bad_constant: crate::dani_flow::WITNESS_BAD_CONSTANT,
        },
    )?;
    out.write(
        "profile.gp",
        "set datafile separator ','\nset logscale y\nset xlabel 't'\nset ylabel 'lambda_1'\nplot 'profile.csv' using 1:2 with lines title 'systole'\n",
    )?;
    println!("min systole over [0, {}]: {}", fmt_f(cfg.horizon), fmt_f(profile.min_systole));
    if let Some(f) = profile.tail {
        println!("tail slope of ln lambda_1: {}", fmt_f(f.slope));
    }
    println!("verdict at horizon {}: {:?}", fmt_f(cfg.horizon), verdict.verdict);
    Ok(EXIT_OK)
}

fn dim_survey(cfg: &ResolvedConfig, field: &NumberField, out: &mut Output) -> Result<i32> {
    let [x0, x1, y0, y1] = cfg.window;
    let window = Window::new(x0, x1, y0, y1)?;
    let weights = if cfg.literal_e1 { SliceWeights::LiteralE1 } else { SliceWeights::Balanced };
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &eps in &cfg.eps {
        let s = survey(field, eps, window, cfg.levels[0]..=cfg.levels[1], cfg.c_height, weights)?;
        for l in &s.levels {
            rows.push(format!("{},{},{},{}", l.k, l.survivors, fmt_f(l.eps), fmt_f(l.hmax)));
        }
        let est = box_count_dimension(&s).ok();
        match &est {
            Some(d) => println!("eps {}: slope {} (residual {})", fmt_f(eps), fmt_f(d.slope), fmt_f(d.residual)),
            None => println!("eps {}: too few nonempty levels for a slope", fmt_f(eps)),
        }
        summary.push(serde_json::json!({ "eps": eps, "survey": s, "dimension": est }));
    }
    out.csv("survey.csv", cfg, "k,N_k,eps,Hmax", &rows)?;
    out.json("survey.json", cfg, &serde_json::json!({ "surveys": summary }))?;
    let mut gp = String::from("set datafile separator ','\nset logscale y 2\nset xlabel 'k'\nset ylabel 'N_k'\nplot ");
    let plots: Vec<String> = cfg
        .eps
        .iter()
        .map(|e| format!("'survey.csv' using 1:($3 == {e} ? $2 : 1/0) with linespoints title 'eps {e}'"))
        .collect();
    let _ = writeln!(gp, "{}", plots.join(", "));
    out.write("survey.gp", &gp)?;
    Ok(EXIT_OK)
}
