//! Totally imaginary number fields, their rings of integers, and the
//! weighted norms and heights attached to a weight vector on the embeddings.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use log::{debug, warn};
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{bareiss_det, solve};
use crate::real::{cabs, ComplexTable, Hp, Real, RealTable, HP_DIGITS};

pub const DEFAULT_PRECISION: u32 = 60;

/// Imaginary quadratic fields of class number one.
pub const CLASS_NUMBER_ONE: [u64; 9] = [1, 2, 3, 7, 11, 19, 43, 67, 163];

/// Largest degree for which the root-subset factor search is attempted.
const MAX_CHECKED_DEGREE: usize = 24;

fn default_precision() -> u32 {
    DEFAULT_PRECISION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldKind {
    Quadratic {
        #[serde(rename = "D")]
        d: u64,
    },
    /// Monic integer polynomial, coefficients from the constant term up.
    Poly {
        coeffs: Vec<i64>,
        /// Rows are basis elements written over the power basis, entries like `"1/2"`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<Vec<Vec<String>>>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        trusted: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    #[serde(flatten)]
    pub kind: FieldKind,
    #[serde(default = "default_precision")]
    pub precision: u32,
}

impl FieldSpec {
    pub fn quadratic(d: u64) -> Self {
        Self { kind: FieldKind::Quadratic { d }, precision: DEFAULT_PRECISION }
    }

    pub fn poly(coeffs: Vec<i64>) -> Self {
        Self {
            kind: FieldKind::Poly { coeffs, basis: None, trusted: false },
            precision: DEFAULT_PRECISION,
        }
    }

    pub fn with_basis(mut self, rows: Vec<Vec<String>>) -> Self {
        if let FieldKind::Poly { basis, .. } = &mut self.kind {
            *basis = Some(rows);
        }
        self
    }

    pub fn trusted(mut self) -> Self {
        if let FieldKind::Poly { trusted, .. } = &mut self.kind {
            *trusted = true;
        }
        self
    }

    pub fn with_precision(mut self, digits: u32) -> Self {
        self.precision = digits;
        self
    }
}

/// Element of the ring of integers, as coordinates over the integral basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlgebraicInt(Vec<i64>);

impl AlgebraicInt {
    pub fn new(coords: Vec<i64>) -> Self {
        Self(coords)
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    /// The rational integer `a`.
    pub fn rational(n: usize, a: i64) -> Self {
        let mut c = vec![0; n];
        c[0] = a;
        Self(c)
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn scale(&self, k: i64) -> Self {
        Self(self.0.iter().map(|&c| c.checked_mul(k).expect("coordinate overflow")).collect())
    }
}

impl fmt::Display for AlgebraicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl Add for &AlgebraicInt {
    type Output = AlgebraicInt;
    fn add(self, rhs: &AlgebraicInt) -> AlgebraicInt {
        AlgebraicInt(
            self.0.iter().zip(&rhs.0).map(|(a, b)| a.checked_add(*b).expect("coordinate overflow")).collect(),
        )
    }
}

impl Sub for &AlgebraicInt {
    type Output = AlgebraicInt;
    fn sub(self, rhs: &AlgebraicInt) -> AlgebraicInt {
        AlgebraicInt(
            self.0.iter().zip(&rhs.0).map(|(a, b)| a.checked_sub(*b).expect("coordinate overflow")).collect(),
        )
    }
}

impl Neg for &AlgebraicInt {
    type Output = AlgebraicInt;
    fn neg(self) -> AlgebraicInt {
        AlgebraicInt(self.0.iter().map(|a| -a).collect())
    }
}

#[derive(Clone, Debug)]
pub struct NumberField {
    spec: FieldSpec,
    n: usize,
    poly: Vec<i64>,
    /// Basis element `k` over the power basis.
    basis: Vec<Vec<BigRational>>,
    /// `mult[i][j]` holds the coordinates of `b_i * b_j`.
    mult: Vec<Vec<Vec<i64>>>,
    traces: Vec<BigInt>,
    discriminant: BigInt,
    roots: Vec<Complex<Hp>>,
    /// Row-major `n x n`, entry `j*n + k` is `sigma_j(b_k)`.
    emb: ComplexTable,
    /// Row-major `n x 2n` left inverse of the realified embedding matrix.
    pinv: RealTable,
    pinv_row_norms: Vec<f64>,
    conj: Option<Vec<AlgebraicInt>>,
}

impl NumberField {
    pub fn new(spec: FieldSpec) -> Result<Self> {
        if spec.precision > HP_DIGITS {
            return Err(Error::PrecisionUnavailable { requested: spec.precision, available: HP_DIGITS });
        }
        let (poly, basis_rows, trusted) = match &spec.kind {
            FieldKind::Quadratic { d } => {
                let d = *d;
                if d == 0 || !is_square_free(d) {
                    return Err(Error::InvalidSpec(format!("D = {d} must be a square-free positive integer")));
                }
                let d = i64::try_from(d).map_err(|_| Error::InvalidSpec("D too large".into()))?;
                let poly = if d % 4 == 3 { vec![(1 + d) / 4, -1, 1] } else { vec![d, 0, 1] };
                (poly, None, true)
            }
            FieldKind::Poly { coeffs, basis, trusted } => (coeffs.clone(), basis.clone(), *trusted),
        };
        if poly.len() < 3 {
            return Err(Error::InvalidSpec("polynomial must have degree at least 2".into()));
        }
        if *poly.last().unwrap() != 1 {
            return Err(Error::InvalidSpec("polynomial must be monic".into()));
        }
        let n = poly.len() - 1;
        let roots = complex_roots(&poly)?;
        if n % 2 == 1 {
            let r = roots.iter().min_by(|a, b| a.im.abs().partial_cmp(&b.im.abs()).unwrap()).unwrap();
            return Err(Error::NotTotallyImaginary(r.re.to_f64()));
        }
        for r in &roots {
            let scale = Hp::one().max(cabs(*r));
            if r.im.abs() <= scale * Hp::from_f64(1e-40) {
                return Err(Error::NotTotallyImaginary(r.re.to_f64()));
            }
        }
        let roots = order_roots(roots);
        if !trusted {
            if n > MAX_CHECKED_DEGREE {
                return Err(Error::NotAField(format!(
                    "degree {n} exceeds the factor-search limit; pass the trusted flag"
                )));
            }
            if let Some(g) = find_factor(&poly, &roots) {
                return Err(Error::NotAField(format!("polynomial has the factor with coefficients {g:?}")));
            }
        }

        let basis = match basis_rows {
            None => (0..n)
                .map(|k| (0..n).map(|i| BigRational::from_integer(BigInt::from((i == k) as i32))).collect())
                .collect::<Vec<Vec<BigRational>>>(),
            Some(rows) => parse_basis(&rows, n)?,
        };
        let mult = mult_tables(&poly, &basis)?;
        let traces: Vec<BigInt> =
            (0..n).map(|k| (0..n).map(|i| BigInt::from(mult[k][i][i])).sum()).collect();
        let trace_form: Vec<Vec<BigInt>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| BigInt::from(mult[i][j][k]) * &traces[k]).sum())
                    .collect()
            })
            .collect();
        let discriminant = bareiss_det(trace_form);
        if discriminant.is_zero() {
            return Err(Error::InvalidBasis("basis is linearly dependent".into()));
        }

        let mut emb = Vec::with_capacity(n * n);
        for root in &roots {
            for row in &basis {
                let mut acc = Complex::new(Hp::zero(), Hp::zero());
                let mut pow = Complex::new(Hp::one(), Hp::zero());
                for c in row {
                    acc += pow * rational_to_hp(c)?;
                    pow *= *root;
                }
                emb.push(acc);
            }
        }
        let (pinv, pinv_row_norms) = left_inverse(&emb, n)?;

        let mut field = Self {
            spec,
            n,
            poly,
            basis,
            mult,
            traces,
            discriminant,
            roots,
            emb: ComplexTable::from_hp(emb),
            pinv: RealTable::from_hp(pinv),
            pinv_row_norms,
            conj: None,
        };
        field.conj = field.find_conjugation();
        Ok(field)
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn polynomial(&self) -> &[i64] {
        &self.poly
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.discriminant
    }

    pub fn quadratic_d(&self) -> Option<u64> {
        match self.spec.kind {
            FieldKind::Quadratic { d } => Some(d),
            _ => None,
        }
    }

    pub fn is_class_number_one(&self) -> bool {
        self.quadratic_d().is_some_and(|d| CLASS_NUMBER_ONE.contains(&d))
    }

    /// Roots of the defining polynomial in embedding order.
    pub fn roots(&self) -> &[Complex<Hp>] {
        &self.roots
    }

    /// Basis element `k` written over the power basis.
    pub fn basis_element(&self, k: usize) -> &[BigRational] {
        &self.basis[k]
    }

    /// Index of the embedding complex conjugate to `sigma_j`.
    pub fn conjugate_index(&self, j: usize) -> usize {
        j ^ 1
    }

    pub fn zero(&self) -> AlgebraicInt {
        AlgebraicInt::zero(self.n)
    }

    pub fn one(&self) -> AlgebraicInt {
        AlgebraicInt::rational(self.n, 1)
    }

    pub fn from_int(&self, a: i64) -> AlgebraicInt {
        AlgebraicInt::rational(self.n, a)
    }

    pub fn element(&self, coords: &[i64]) -> Result<AlgebraicInt> {
        if coords.len() != self.n {
            return Err(Error::InvalidSpec(format!("expected {} coordinates, got {}", self.n, coords.len())));
        }
        Ok(AlgebraicInt::new(coords.to_vec()))
    }

    /// Element from `i128` coordinates, or `None` if one does not fit.
    pub fn element_i128(&self, coords: &[i128]) -> Option<AlgebraicInt> {
        coords.iter().map(|&c| i64::try_from(c).ok()).collect::<Option<Vec<_>>>().map(AlgebraicInt::new)
    }

    pub fn mul(&self, a: &AlgebraicInt, b: &AlgebraicInt) -> AlgebraicInt {
        let mut acc = vec![0i128; self.n];
        for (i, &x) in a.0.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.0.iter().enumerate() {
                if y == 0 {
                    continue;
                }
                let xy = x as i128 * y as i128;
                for (k, &c) in self.mult[i][j].iter().enumerate() {
                    acc[k] = acc[k].checked_add(xy.checked_mul(c as i128).expect("coordinate overflow")).expect("coordinate overflow");
                }
            }
        }
        AlgebraicInt(acc.into_iter().map(|c| i64::try_from(c).expect("coordinate overflow")).collect())
    }

    /// Complex conjugation as a ring automorphism, when the field is stable under it.
    pub fn conj(&self, a: &AlgebraicInt) -> Option<AlgebraicInt> {
        let images = self.conj.as_ref()?;
        let mut acc = self.zero();
        for (k, &c) in a.0.iter().enumerate() {
            if c != 0 {
                acc = &acc + &images[k].scale(c);
            }
        }
        Some(acc)
    }

    pub fn trace(&self, a: &AlgebraicInt) -> BigInt {
        a.0.iter().zip(&self.traces).map(|(&c, t)| BigInt::from(c) * t).sum()
    }

    /// Exact norm as the determinant of multiplication by `a`.
    pub fn norm(&self, a: &AlgebraicInt) -> BigInt {
        let rows = (0..self.n)
            .map(|i| {
                let mut row = vec![BigInt::zero(); self.n];
                for (j, &c) in a.0.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    for (k, &m) in self.mult[j][i].iter().enumerate() {
                        row[k] += BigInt::from(c) * BigInt::from(m);
                    }
                }
                row
            })
            .collect();
        bareiss_det(rows)
    }

    /// Row-major table of `sigma_j(b_k)`.
    pub fn embedding_matrix<R: Real>(&self) -> &[Complex<R>] {
        R::pick_complex(&self.emb)
    }

    /// `Theta(q) = (sigma_1(q), ..., sigma_n(q))`.
    pub fn embed<R: Real>(&self, q: &AlgebraicInt) -> Vec<Complex<R>> {
        let e = self.embedding_matrix::<R>();
        (0..self.n)
            .map(|j| {
                q.0.iter().enumerate().fold(Complex::new(R::zero(), R::zero()), |acc, (k, &c)| {
                    if c == 0 {
                        acc
                    } else {
                        acc + e[j * self.n + k] * R::from_i64(c)
                    }
                })
            })
            .collect()
    }

    /// Real coordinates `x` with `Theta(sum x_k b_k)` closest to `v` in the least-squares sense.
    pub fn real_coords<R: Real>(&self, v: &[Complex<R>]) -> Vec<R> {
        let p = R::pick_real(&self.pinv);
        let w = 2 * self.n;
        (0..self.n)
            .map(|k| {
                v.iter().enumerate().fold(R::zero(), |acc, (j, z)| {
                    acc + p[k * w + 2 * j] * z.re + p[k * w + 2 * j + 1] * z.im
                })
            })
            .collect()
    }

    /// Round-off of [`Self::real_coords`] to the nearest integer point.
    pub fn nearest_element<R: Real>(&self, v: &[Complex<R>]) -> Option<AlgebraicInt> {
        let coords: Option<Vec<i128>> = self.real_coords(v).into_iter().map(|x| x.round_i128()).collect();
        self.element_i128(&coords?)
    }

    /// Half-widths of an integer coordinate box containing every element whose
    /// embeddings all have modulus at most `radius`.
    pub fn coordinate_bounds(&self, radius: f64) -> Vec<i64> {
        let scale = radius * (self.n as f64).sqrt();
        self.pinv_row_norms.iter().map(|&r| (r * scale * (1.0 + 1e-9)).floor() as i64).collect()
    }

    /// All nonzero `q` with `max_j |sigma_j(q)| <= m`.
    pub fn enumerate_bounded(&self, m: f64) -> Vec<AlgebraicInt> {
        if !(m >= 1.0) {
            warn!("enumerate_bounded: bound {m} is below 1, no nonzero integer qualifies");
            return Vec::new();
        }
        let limit = m * (1.0 + 1e-12);
        let limit2 = limit * limit;
        let e = self.embedding_matrix::<f64>();
        let n = self.n;
        self.coordinate_box(&self.coordinate_bounds(m))
            .filter(|c| c.iter().any(|&x| x != 0))
            .filter(|c| {
                (0..n).all(|j| {
                    let z = (0..n).fold(Complex::new(0.0, 0.0), |acc, k| acc + e[j * n + k] * c[k] as f64);
                    z.norm_sqr() <= limit2
                })
            })
            .map(AlgebraicInt)
            .collect()
    }

    /// Iterates every integer vector with `|c_k| <= bounds[k]`.
    pub fn coordinate_box(&self, bounds: &[i64]) -> impl Iterator<Item = Vec<i64>> {
        let bounds = bounds.to_vec();
        let mut cur: Option<Vec<i64>> = Some(bounds.iter().map(|b| -b).collect());
        std::iter::from_fn(move || {
            let out = cur.clone()?;
            let mut next = out.clone();
            let mut k = 0;
            loop {
                if k == next.len() {
                    cur = None;
                    break;
                }
                if next[k] < bounds[k] {
                    next[k] += 1;
                    cur = Some(next);
                    break;
                }
                next[k] = -bounds[k];
                k += 1;
            }
            Some(out)
        })
    }

    fn find_conjugation(&self) -> Option<Vec<AlgebraicInt>> {
        // The image of the generating root is a root of f inside K whose first
        // embedding is the conjugate of the first root.
        let target = self.roots[self.conjugate_index(0)];
        let radius = self.roots.iter().map(|r| cabs(*r).to_f64()).fold(0.0, f64::max) * (1.0 + 1e-9);
        let bounds = self.coordinate_bounds(radius.max(1.0));
        let volume: f64 = bounds.iter().map(|&b| (2 * b + 1) as f64).product();
        if volume > 2.0e6 {
            debug!("conjugation search skipped, box of {volume} points");
            return None;
        }
        let e = self.embedding_matrix::<f64>();
        let target64 = Complex::new(target.re.to_f64(), target.im.to_f64());
        let image = self.coordinate_box(&bounds).find(|c| {
            let z = (0..self.n).fold(Complex::new(0.0, 0.0), |acc, k| acc + e[k] * c[k] as f64);
            if (z - target64).norm() > 1e-8 * (1.0 + target64.norm()) {
                return false;
            }
            let y = AlgebraicInt(c.clone());
            self.eval_poly(&self.poly, &y).is_zero()
        })?;
        let y = AlgebraicInt(image);
        let mut powers = vec![self.one()];
        for i in 1..self.n {
            let next = self.mul(&powers[i - 1], &y);
            powers.push(next);
        }
        self.basis
            .iter()
            .map(|row| {
                let mut acc = vec![BigRational::zero(); self.n];
                for (c, pw) in row.iter().zip(&powers) {
                    for (a, &x) in acc.iter_mut().zip(pw.coords()) {
                        *a += c * BigRational::from_integer(BigInt::from(x));
                    }
                }
                let coords: Option<Vec<i64>> =
                    acc.iter().map(|r| if r.is_integer() { r.to_integer().to_i64() } else { None }).collect();
                coords.map(AlgebraicInt)
            })
            .collect()
    }

    /// Evaluates an integer polynomial at an element, exactly.
    fn eval_poly(&self, coeffs: &[i64], y: &AlgebraicInt) -> AlgebraicInt {
        coeffs.iter().rev().fold(self.zero(), |acc, &c| &self.mul(&acc, y) + &self.from_int(c))
    }
}

fn is_square_free(d: u64) -> bool {
    let mut p = 2u64;
    while p * p <= d {
        if d.is_multiple_of(p * p) {
            return false;
        }
        p += 1;
    }
    true
}

fn parse_basis(rows: &[Vec<String>], n: usize) -> Result<Vec<Vec<BigRational>>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidBasis(format!("basis must be {n} rows of {n} entries")));
    }
    let parsed = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|s| s.trim().parse::<BigRational>().map_err(|_| Error::InvalidBasis(format!("bad entry {s:?}"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let one = BigRational::one();
    if parsed[0][0] != one || parsed[0][1..].iter().any(|x| !x.is_zero()) {
        return Err(Error::InvalidBasis("first basis element must be 1".into()));
    }
    Ok(parsed)
}

fn rational_to_hp(r: &BigRational) -> Result<Hp> {
    let num = r.numer().to_i128().ok_or_else(|| Error::InvalidBasis("entry too large".into()))?;
    let den = r.denom().to_i128().ok_or_else(|| Error::InvalidBasis("entry too large".into()))?;
    Ok(Hp::from_i128(num) / Hp::from_i128(den))
}

/// Structure constants of the basis, required to be integral.
fn mult_tables(poly: &[i64], basis: &[Vec<BigRational>]) -> Result<Vec<Vec<Vec<i64>>>> {
    let n = basis.len();
    let inv = invert_rational(basis).ok_or_else(|| Error::InvalidBasis("basis is singular".into()))?;
    let mut out = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let prod = mulmod(&basis[i], &basis[j], poly);
            let mut coords = Vec::with_capacity(n);
            for k in 0..n {
                let c: BigRational = (0..n).map(|t| &prod[t] * &inv[t][k]).sum();
                if !c.is_integer() {
                    return Err(Error::InvalidBasis(format!("b_{i} * b_{j} is not integral over the basis")));
                }
                coords.push(c.to_integer().to_i64().ok_or_else(|| Error::InvalidBasis("structure constant too large".into()))?);
            }
            out[i][j] = coords;
        }
    }
    Ok(out)
}

fn mulmod(a: &[BigRational], b: &[BigRational], poly: &[i64]) -> Vec<BigRational> {
    let n = poly.len() - 1;
    let mut prod = vec![BigRational::zero(); 2 * n - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            prod[i + j] += x * y;
        }
    }
    for d in (n..prod.len()).rev() {
        let lead = prod[d].clone();
        if lead.is_zero() {
            continue;
        }
        for (k, &c) in poly[..n].iter().enumerate() {
            prod[d - n + k] -= &lead * BigRational::from_integer(BigInt::from(c));
        }
        prod[d] = BigRational::zero();
    }
    prod.truncate(n);
    prod
}

/// Inverse of a rational matrix by Gauss-Jordan, `None` if singular.
fn invert_rational(m: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| BigRational::from_integer(BigInt::from((i == j) as i32))));
            r
        })
        .collect();
    for k in 0..n {
        let piv = (k..n).find(|&i| !a[i][k].is_zero())?;
        a.swap(k, piv);
        let p = a[k][k].clone();
        for x in a[k].iter_mut() {
            *x = &*x / &p;
        }
        for i in 0..n {
            if i != k && !a[i][k].is_zero() {
                let f = a[i][k].clone();
                for j in 0..2 * n {
                    let t = &f * &a[k][j];
                    a[i][j] -= t;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Left inverse `(E^T E)^{-1} E^T` of the `2n x n` realified embedding matrix.
fn left_inverse(emb: &[Complex<Hp>], n: usize) -> Result<(Vec<Hp>, Vec<f64>)> {
    let e: Vec<Vec<Hp>> = (0..2 * n)
        .map(|r| (0..n).map(|k| if r % 2 == 0 { emb[(r / 2) * n + k].re } else { emb[(r / 2) * n + k].im }).collect())
        .collect();
    let ete: Vec<Vec<Hp>> = (0..n)
        .map(|a| (0..n).map(|b| (0..2 * n).fold(Hp::zero(), |s, r| s + e[r][a] * e[r][b])).collect())
        .collect();
    let et: Vec<Vec<Hp>> = (0..n).map(|a| (0..2 * n).map(|r| e[r][a]).collect()).collect();
    let p = solve(ete, et).ok_or_else(|| Error::InvalidBasis("embedding matrix is singular".into()))?;
    let norms = p.iter().map(|row| row.iter().fold(Hp::zero(), |s, x| s + *x * *x).sqrt().to_f64()).collect();
    Ok((p.into_iter().flatten().collect(), norms))
}

fn horner(coeffs: &[i64], z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
    let mut p = Complex::new(0.0, 0.0);
    let mut dp = Complex::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c as f64;
    }
    (p, dp)
}

fn horner_hp(coeffs: &[i64], z: Complex<Hp>) -> (Complex<Hp>, Complex<Hp>) {
    let zero = Complex::new(Hp::zero(), Hp::zero());
    let mut p = zero;
    let mut dp = zero;
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + Complex::new(Hp::from_i64(c), Hp::zero());
    }
    (p, dp)
}

/// Aberth iteration in double precision followed by Newton polishing.
fn complex_roots(poly: &[i64]) -> Result<Vec<Complex<Hp>>> {
    let n = poly.len() - 1;
    let bound = 1.0 + poly[..n].iter().map(|c| (*c as f64).abs()).fold(0.0, f64::max);
    let mut z: Vec<Complex<f64>> =
        (0..n).map(|k| Complex::from_polar(0.5 * bound, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64)).collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for k in 0..n {
            let (p, dp) = horner(poly, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: Complex<f64> = (0..n).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
            let w = ratio / (Complex::new(1.0, 0.0) - ratio * s);
            if w.is_finite() {
                z[k] -= w;
                moved = moved.max(w.norm() / (1.0 + z[k].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    let mut roots = Vec::with_capacity(n);
    for r in z {
        let mut x = Complex::new(Hp::from_f64(r.re), Hp::from_f64(r.im));
        let mut converged = false;
        for _ in 0..60 {
            let (p, dp) = horner_hp(poly, x);
            if dp.re == Hp::zero() && dp.im == Hp::zero() {
                break;
            }
            let step = p / dp;
            x -= step;
            let size = cabs(step) / (Hp::one() + cabs(x));
            if size < Hp::from_f64(1e-68) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NotAField("root iteration did not converge (repeated roots?)".into()));
        }
        roots.push(x);
    }
    Ok(roots)
}

/// Upper half-plane roots sorted by (re, im), each followed by its conjugate.
fn order_roots(roots: Vec<Complex<Hp>>) -> Vec<Complex<Hp>> {
    let mut upper: Vec<Complex<Hp>> = roots.into_iter().filter(|r| r.im > Hp::zero()).collect();
    upper.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    upper.into_iter().flat_map(|r| [r, Complex::new(r.re, -r.im)]).collect()
}

/// Searches for a monic integer factor of degree at most `n/2` among products
/// of conjugate root pairs, confirming candidates by exact division.
fn find_factor(poly: &[i64], roots: &[Complex<Hp>]) -> Option<Vec<i128>> {
    let n = poly.len() - 1;
    let pairs = n / 2;
    let one = Complex::new(Hp::one(), Hp::zero());
    for mask in 1u32..(1u32 << pairs) {
        let s = mask.count_ones() as usize;
        if 2 * s > n / 2 {
            continue;
        }
        let mut g = vec![one];
        for i in (0..pairs).filter(|i| mask & (1 << i) != 0) {
            for r in [roots[2 * i], roots[2 * i + 1]] {
                let mut next = vec![Complex::new(Hp::zero(), Hp::zero()); g.len() + 1];
                for (k, c) in g.iter().enumerate() {
                    next[k + 1] += *c;
                    next[k] -= *c * r;
                }
                g = next;
            }
        }
        let rounded: Option<Vec<i128>> = g
            .iter()
            .map(|c| {
                let k = c.re.round_i128()?;
                let err = (c.re - Hp::from_i128(k)).abs() + c.im.abs();
                (err < Hp::from_f64(1e-30) * (Hp::one() + c.re.abs())).then_some(k)
            })
            .collect();
        if let Some(g) = rounded {
            if divides(&g, poly) {
                return Some(g);
            }
        }
    }
    None
}

fn divides(g: &[i128], f: &[i64]) -> bool {
    let mut rem: Vec<i128> = f.iter().map(|&c| c as i128).collect();
    let dg = g.len() - 1;
    for d in (dg..rem.len()).rev() {
        let lead = rem[d];
        if lead == 0 {
            continue;
        }
        for (k, &c) in g.iter().enumerate() {
            match c.checked_mul(lead).and_then(|x| rem[d - dg + k].checked_sub(x)) {
                Some(v) => rem[d - dg + k] = v,
                None => return false,
            }
        }
    }
    rem.iter().all(|&c| c == 0)
}

/// Nonnegative weights on the embeddings summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector {
    r: Vec<f64>,
    sigma_plus: Vec<usize>,
    sigma_zero: Vec<usize>,
    omega: usize,
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;
    fn try_from(r: Vec<f64>) -> Result<Self> {
        Self::new(r)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.r
    }
}

impl WeightVector {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::InvalidWeights("empty".into()));
        }
        if r.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidWeights(format!("{r:?} has a negative or non-finite entry")));
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!("{r:?} sums to {sum}, not 1")));
        }
        let sigma_plus = (0..r.len()).filter(|&j| r[j] > 0.0).collect();
        let sigma_zero = (0..r.len()).filter(|&j| r[j] == 0.0).collect();
        let mut omega = 0;
        for j in 1..r.len() {
            if r[j] > r[omega] {
                omega = j;
            }
        }
        Ok(Self { r, sigma_plus, sigma_zero, omega })
    }

    pub fn balanced(n: usize) -> Self {
        Self::new(vec![1.0 / n as f64; n]).expect("balanced weights are valid")
    }

    /// The coordinate vector `e_j`.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut r = vec![0.0; n];
        r[j] = 1.0;
        Self::new(r).expect("unit weights are valid")
    }

    /// Parses comma-separated decimals or fractions, e.g. `1/2,1/2`.
    pub fn parse(s: &str) -> Result<Self> {
        let r = s
            .split(',')
            .map(|t| {
                let t = t.trim();
                match t.split_once('/') {
                    Some((a, b)) => {
                        let a: f64 = a.trim().parse().map_err(|_| Error::InvalidWeights(format!("bad entry {t:?}")))?;
                        let b: f64 = b.trim().parse().map_err(|_| Error::InvalidWeights(format!("bad entry {t:?}")))?;
                        Ok(a / b)
                    }
                    None => t.parse().map_err(|_| Error::InvalidWeights(format!("bad entry {t:?}"))),
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        Self::new(r)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn get(&self, j: usize) -> f64 {
        self.r[j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.r
    }

    pub fn sigma_plus(&self) -> &[usize] {
        &self.sigma_plus
    }

    pub fn sigma_zero(&self) -> &[usize] {
        &self.sigma_zero
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn r_max(&self) -> f64 {
        self.r[self.omega]
    }

    /// Smallest positive weight.
    pub fn r_min_plus(&self) -> f64 {
        self.sigma_plus.iter().map(|&j| self.r[j]).fold(f64::INFINITY, f64::min)
    }

    pub fn check_degree(&self, field: &NumberField) -> Result<()> {
        if self.len() != field.degree() {
            return Err(Error::InvalidWeights(format!(
                "{} weights for a field of degree {}",
                self.len(),
                field.degree()
            )));
        }
        Ok(())
    }

    /// Describes the case where a zero-weight embedding is conjugate to a
    /// positive-weight one: conjugates share modulus, so `O_K(r, eps)` is
    /// empty for every `eps < 1`.
    pub fn vacuity_diagnostic(&self, field: &NumberField) -> Option<String> {
        let j = self.sigma_zero.iter().copied().find(|&j| self.r[field.conjugate_index(j)] > 0.0)?;
        Some(format!(
            "embedding {} has weight 0 but its conjugate {} has positive weight; O_K(r, eps) is empty for eps < 1",
            j + 1,
            field.conjugate_index(j) + 1
        ))
    }
}

/// `||q||_r` from the embedding vector of `q`.
pub fn weighted_norm_of<R: Real>(r: &WeightVector, emb: &[Complex<R>]) -> R {
    r.sigma_plus()
        .iter()
        .map(|&j| cabs(emb[j]).powf(R::from_f64(1.0 / r.get(j))))
        .fold(R::zero(), Real::max)
}

/// `H(q)` from the embedding vector of `q`.
pub fn height_of<R: Real>(r: &WeightVector, emb: &[Complex<R>]) -> R {
    let norm = weighted_norm_of(r, emb);
    height_with_norm(r, emb, norm)
}

pub(crate) fn height_with_norm<R: Real>(r: &WeightVector, emb: &[Complex<R>], norm: R) -> R {
    r.sigma_plus()
        .iter()
        .map(|&j| cabs(emb[j]) * norm.powf(R::from_f64(r.get(j))))
        .fold(R::zero(), Real::max)
}

pub fn admissible_of<R: Real>(r: &WeightVector, eps: R, emb: &[Complex<R>]) -> bool {
    r.sigma_zero().iter().all(|&j| cabs(emb[j]) <= eps)
}

pub fn weighted_norm<R: Real>(field: &NumberField, r: &WeightVector, q: &AlgebraicInt) -> Result<R> {
    if q.is_zero() {
        return Err(Error::ZeroElement);
    }
    Ok(weighted_norm_of(r, &field.embed::<R>(q)))
}

pub fn height<R: Real>(field: &NumberField, r: &WeightVector, q: &AlgebraicInt) -> Result<R> {
    if q.is_zero() {
        return Err(Error::ZeroElement);
    }
    Ok(height_of(r, &field.embed::<R>(q)))
}

/// Membership in `O_K(r, eps)`: every zero-weight embedding is at most `eps`.
pub fn in_ok_r_eps(field: &NumberField, r: &WeightVector, eps: f64, q: &AlgebraicInt) -> Result<bool> {
    if q.is_zero() {
        return Err(Error::ZeroElement);
    }
    Ok(admissible_of(r, eps, &field.embed::<f64>(q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gauss() -> NumberField {
        NumberField::new(FieldSpec::quadratic(1)).unwrap()
    }

    fn eisenstein() -> NumberField {
        NumberField::new(FieldSpec::quadratic(3)).unwrap()
    }

    fn brute_discriminant(k: &NumberField) -> Complex<f64> {
        // (det sigma_j(b_k))^2 evaluated numerically
        let e = k.embedding_matrix::<f64>();
        assert_eq!(k.degree(), 2);
        let d = e[0] * e[3] - e[1] * e[2];
        d * d
    }

    #[test]
    fn quadratic_discriminants() {
        assert_eq!(gauss().discriminant(), &BigInt::from(-4));
        assert_eq!(eisenstein().discriminant(), &BigInt::from(-3));
        for (d, dk) in [(2u64, -8i64), (7, -7), (5, -20), (163, -163)] {
            let k = NumberField::new(FieldSpec::quadratic(d)).unwrap();
            assert_eq!(k.discriminant(), &BigInt::from(dk));
            let num = brute_discriminant(&k);
            assert!((num.re - dk as f64).abs() < 1e-9 * dk.abs() as f64 && num.im.abs() < 1e-6);
        }
    }

    #[test]
    fn class_number_one_list() {
        for d in CLASS_NUMBER_ONE {
            assert!(NumberField::new(FieldSpec::quadratic(d)).unwrap().is_class_number_one());
        }
        assert!(!NumberField::new(FieldSpec::quadratic(5)).unwrap().is_class_number_one());
        assert!(matches!(NumberField::new(FieldSpec::quadratic(12)), Err(Error::InvalidSpec(_))));
        assert!(matches!(NumberField::new(FieldSpec::quadratic(0)), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn first_embedding_has_positive_imaginary_generator() {
        for d in [1u64, 2, 3, 7] {
            let k = NumberField::new(FieldSpec::quadratic(d)).unwrap();
            let e = k.embedding_matrix::<f64>();
            assert!(e[1].im > 0.0);
            assert!((e[3] - e[1].conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn embed_examples() {
        let k = gauss();
        let v = k.embed::<f64>(&AlgebraicInt::new(vec![1, 1]));
        assert!((v[0] - Complex::new(1.0, 1.0)).norm() < 1e-15);
        assert!((v[1] - Complex::new(1.0, -1.0)).norm() < 1e-15);
        let v = k.embed::<f64>(&k.zero());
        assert!(v.iter().all(|z| z.norm() == 0.0));
        let v = k.embed::<f64>(&k.from_int(3));
        assert!(v.iter().all(|z| (*z - Complex::new(3.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn norm_examples() {
        let k = gauss();
        assert_eq!(k.norm(&AlgebraicInt::new(vec![1, 1])), BigInt::from(2));
        assert_eq!(k.norm(&k.one()), BigInt::from(1));
        let e = eisenstein();
        assert_eq!(e.norm(&AlgebraicInt::new(vec![0, 1])), BigInt::from(1));
        assert_eq!(e.norm(&AlgebraicInt::new(vec![2, 1])), BigInt::from(7));
    }

    #[test]
    fn conjugation_is_found() {
        let k = gauss();
        assert_eq!(k.conj(&AlgebraicInt::new(vec![3, 2])), Some(AlgebraicInt::new(vec![3, -2])));
        let e = eisenstein();
        // conj(omega) = 1 - omega
        assert_eq!(e.conj(&AlgebraicInt::new(vec![0, 1])), Some(AlgebraicInt::new(vec![1, -1])));
        let c = NumberField::new(FieldSpec::poly(vec![1, 0, 0, 0, 1])).unwrap();
        let x = AlgebraicInt::new(vec![1, 2, 3, 4]);
        let cx = c.conj(&x).unwrap();
        let (a, b) = (c.embed::<f64>(&x), c.embed::<f64>(&cx));
        assert!((b[0] - a[0].conj()).norm() < 1e-12);
    }

    #[test]
    fn enumeration_examples() {
        let k = gauss();
        let two = k.enumerate_bounded(2.0);
        assert_eq!(two.len(), 12);
        let mut norms: Vec<i64> = two.iter().map(|q| k.norm(q).to_i64().unwrap()).collect();
        norms.sort();
        norms.dedup();
        assert_eq!(norms, vec![1, 2, 4]);
        assert_eq!(k.enumerate_bounded(1.0).len(), 4);
        assert!(k.enumerate_bounded(0.5).is_empty());
        // brute-force comparison on a second field
        let e = eisenstein();
        let fast = e.enumerate_bounded(5.0);
        let mut slow = 0;
        for a in -12i64..=12 {
            for b in -12i64..=12 {
                let q = AlgebraicInt::new(vec![a, b]);
                if !q.is_zero() && e.norm(&q).to_i64().unwrap() <= 25 {
                    slow += 1;
                }
            }
        }
        assert_eq!(fast.len(), slow);
    }

    #[test]
    fn weighted_norm_and_height_examples() {
        let k = gauss();
        let bal = WeightVector::balanced(2);
        let q = AlgebraicInt::new(vec![1, 1]);
        assert!((weighted_norm::<Hp>(&k, &bal, &q).unwrap().to_f64() - 2.0).abs() < 1e-15);
        assert!((height::<Hp>(&k, &bal, &q).unwrap().to_f64() - 2.0).abs() < 1e-15);
        assert!((height::<f64>(&k, &bal, &k.from_int(2)).unwrap() - 4.0).abs() < 1e-12);
        assert!((weighted_norm::<f64>(&k, &bal, &k.one()).unwrap() - 1.0).abs() < 1e-15);
        let e1 = WeightVector::unit(2, 0);
        assert!((weighted_norm::<f64>(&k, &e1, &k.from_int(2)).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(weighted_norm::<f64>(&k, &bal, &k.zero()), Err(Error::ZeroElement)));
        assert!(matches!(height::<f64>(&k, &bal, &k.zero()), Err(Error::ZeroElement)));
    }

    #[test]
    fn admissibility_examples() {
        let k = gauss();
        let bal = WeightVector::balanced(2);
        let e1 = WeightVector::unit(2, 0);
        let q = AlgebraicInt::new(vec![1, 1]);
        assert!(in_ok_r_eps(&k, &bal, 0.1, &q).unwrap());
        assert!(!in_ok_r_eps(&k, &e1, 0.5, &q).unwrap());
        for q in k.enumerate_bounded(6.0) {
            assert!(!in_ok_r_eps(&k, &e1, 0.99, &q).unwrap());
        }
        assert!(e1.vacuity_diagnostic(&k).is_some());
        assert!(bal.vacuity_diagnostic(&k).is_none());
        assert!(matches!(in_ok_r_eps(&k, &bal, 0.1, &k.zero()), Err(Error::ZeroElement)));
    }

    #[test]
    fn weight_vector_rules() {
        let w = WeightVector::parse("1/4, 3/4").unwrap();
        assert_eq!(w.omega(), 1);
        assert_eq!(w.r_max(), 0.75);
        let w = WeightVector::parse("0.5,0.5").unwrap();
        assert_eq!(w.omega(), 0);
        assert!(WeightVector::parse("0.5,0.6").is_err());
        assert!(WeightVector::new(vec![1.5, -0.5]).is_err());
        let w = WeightVector::new(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(w.sigma_plus(), &[1]);
        assert_eq!(w.sigma_zero(), &[0, 2, 3]);
    }

    #[test]
    fn general_polynomials() {
        assert!(matches!(NumberField::new(FieldSpec::poly(vec![-2, 0, 1])), Err(Error::NotTotallyImaginary(_))));
        assert!(matches!(NumberField::new(FieldSpec::poly(vec![1, 0, 0, 1])), Err(Error::NotTotallyImaginary(_))));
        // (x^2+1)(x^2+2)
        assert!(matches!(NumberField::new(FieldSpec::poly(vec![2, 0, 3, 0, 1])), Err(Error::NotAField(_))));
        assert!(NumberField::new(FieldSpec::poly(vec![2, 0, 3, 0, 1]).trusted()).is_ok());
        // cyclotomic x^4 + 1 is reducible mod every prime but irreducible over Q
        let k = NumberField::new(FieldSpec::poly(vec![1, 0, 0, 0, 1])).unwrap();
        assert_eq!(k.discriminant(), &BigInt::from(256));
        assert!(matches!(NumberField::new(FieldSpec::poly(vec![1, 0, 2])), Err(Error::InvalidSpec(_))));
        let k = NumberField::new(FieldSpec::poly(vec![1, 0, 1]).with_precision(80));
        assert!(matches!(k, Err(Error::PrecisionUnavailable { .. })));
    }

    #[test]
    fn explicit_basis() {
        // x^2 + 3 with the maximal-order basis {1, (1+x)/2}
        let spec = FieldSpec::poly(vec![3, 0, 1])
            .with_basis(vec![vec!["1".into(), "0".into()], vec!["1/2".into(), "1/2".into()]]);
        let k = NumberField::new(spec).unwrap();
        assert_eq!(k.discriminant(), &BigInt::from(-3));
        let bad = FieldSpec::poly(vec![1, 0, 1])
            .with_basis(vec![vec!["1".into(), "0".into()], vec!["1/2".into(), "1/2".into()]]);
        assert!(matches!(NumberField::new(bad), Err(Error::InvalidBasis(_))));
    }

    #[test]
    fn spec_json_shapes() {
        let s: FieldSpec = serde_json::from_str(r#"{"kind":"quadratic","D":1}"#).unwrap();
        assert_eq!(s, FieldSpec::quadratic(1));
        let s: FieldSpec = serde_json::from_str(r#"{"kind":"poly","coeffs":[1,0,1]}"#).unwrap();
        assert_eq!(s, FieldSpec::poly(vec![1, 0, 1]));
        let back: FieldSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn quartic_embedding_determinant_matches_discriminant() {
        let k = NumberField::new(FieldSpec::poly(vec![5, 0, 5, 0, 1])).unwrap();
        let n = k.degree();
        let e = k.embedding_matrix::<Hp>();
        // |det(sigma_j(b_k))|^2 = |D_K|, via the realified matrix: |det E_R| = 2^{-n/2} sqrt|D_K|
        let rows: Vec<Vec<Hp>> = (0..n)
            .map(|r| {
                let j = 2 * (r / 2);
                (0..n).map(|c| if r % 2 == 0 { e[j * n + c].re } else { e[j * n + c].im }).collect()
            })
            .collect();
        let d = crate::linalg::det(rows).abs().to_f64();
        let expect = (k.discriminant().to_f64().unwrap().abs()).sqrt() / 2f64.powi(n as i32 / 2);
        assert!((d - expect).abs() < 1e-9 * expect);
        for j in 0..n {
            for c in 0..n {
                let a = e[j * n + c];
                let b = e[k.conjugate_index(j) * n + c];
                assert!(((a.re - b.re).abs() + (a.im + b.im).abs()).to_f64() < 1e-60);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn embedding_is_a_ring_homomorphism(a in prop::collection::vec(-50i64..=50, 2), b in prop::collection::vec(-50i64..=50, 2), d in prop::sample::select(vec![1u64, 2, 3, 7, 11])) {
            let k = NumberField::new(FieldSpec::quadratic(d)).unwrap();
            let (x, y) = (AlgebraicInt::new(a), AlgebraicInt::new(b));
            let (ex, ey) = (k.embed::<f64>(&x), k.embed::<f64>(&y));
            let prod = k.embed::<f64>(&k.mul(&x, &y));
            let sum = k.embed::<f64>(&(&x + &y));
            for j in 0..2 {
                let p = ex[j] * ey[j];
                prop_assert!((prod[j] - p).norm() <= 1e-10 * (1.0 + p.norm()));
                let s = ex[j] + ey[j];
                prop_assert!((sum[j] - s).norm() <= 1e-10 * (1.0 + s.norm()));
            }
            if !x.is_zero() {
                let exact = k.norm(&x).to_f64().unwrap();
                let float: f64 = ex.iter().map(|z| z.norm()).product();
                prop_assert!((exact.abs() - float).abs() <= 1e-8 * float);
                let bal = WeightVector::balanced(2);
                prop_assert!(weighted_norm::<f64>(&k, &bal, &x).unwrap() >= 1.0 - 1e-12);
            }
        }
    }
}
