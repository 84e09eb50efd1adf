//! Arithmetic over GF(2^k) for 2 <= k <= 16, plus the small amount of dense
//! linear algebra the coding scheme needs: Vandermonde construction,
//! matrix-vector products and Gauss-Jordan inversion.
//!
//! Elements are the integers `0..2^k` read as polynomials over GF(2).
//! Addition is XOR. Multiplication goes through log/antilog tables built at
//! construction time from a generator of the multiplicative group, so the
//! reduction polynomial only has to be irreducible, not primitive.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_K: u32 = 2;
pub const MAX_K: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("field power k = {0} is outside {MIN_K}..={MAX_K}")]
    UnsupportedPower(u32),
    #[error("polynomial {poly:#x} is not an irreducible polynomial of degree {k}")]
    ReduciblePolynomial { poly: u32, k: u32 },
    #[error("digit base must be at least 2, got {0}")]
    BadBase(u32),
    #[error("digit base {d} does not fit in GF(2^{k})")]
    FieldTooSmall { d: u32, k: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("evaluation point {0} appears more than once")]
    DuplicatePoint(u16),
    #[error("evaluation points must be nonzero")]
    ZeroPoint,
    #[error("{n} evaluation points requested but GF(2^{k}) has only {max} nonzero elements")]
    TooManyPoints { n: usize, k: u32, max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("value {value} is not an element of GF(2^{k})")]
    OutOfField { value: u32, k: u32 },
}

/// An element of GF(2^k). The field itself is carried separately.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FieldElement(pub u16);

impl FieldElement {
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(1);

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl From<u16> for FieldElement {
    fn from(v: u16) -> Self {
        Self(v)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Conventional reduction polynomial for each supported k (bit i = coefficient of x^i).
pub fn default_polynomial(k: u32) -> Result<u32, GfError> {
    Ok(match k {
        2 => 0x7,      // x^2 + x + 1
        3 => 0xB,      // x^3 + x + 1
        4 => 0x13,     // x^4 + x + 1
        5 => 0x25,     // x^5 + x^2 + 1
        6 => 0x43,     // x^6 + x + 1
        7 => 0x83,     // x^7 + x + 1
        8 => 0x11B,    // x^8 + x^4 + x^3 + x + 1
        9 => 0x211,    // x^9 + x^4 + 1
        10 => 0x409,   // x^10 + x^3 + 1
        11 => 0x805,   // x^11 + x^2 + 1
        12 => 0x1053,  // x^12 + x^6 + x^4 + x + 1
        13 => 0x201B,  // x^13 + x^4 + x^3 + x + 1
        14 => 0x4443,  // x^14 + x^10 + x^6 + x + 1
        15 => 0x8003,  // x^15 + x + 1
        16 => 0x1100B, // x^16 + x^12 + x^3 + x + 1
        other => return Err(GfError::UnsupportedPower(other)),
    })
}

fn degree(p: u32) -> u32 {
    31 - p.leading_zeros()
}

/// Remainder of `a` modulo `m` as polynomials over GF(2).
fn poly_rem(mut a: u32, m: u32) -> u32 {
    let dm = degree(m);
    while a != 0 && degree(a) >= dm {
        a ^= m << (degree(a) - dm);
    }
    a
}

/// Exhaustive irreducibility test: no divisor of degree 1..=deg/2.
pub fn is_irreducible(poly: u32) -> bool {
    if poly < 2 {
        return false;
    }
    let k = degree(poly);
    if k == 0 {
        return false;
    }
    for div_deg in 1..=k / 2 {
        for divisor in (1u32 << div_deg)..(1u32 << (div_deg + 1)) {
            if poly_rem(poly, divisor) == 0 {
                return false;
            }
        }
    }
    true
}

/// Shift-and-reduce multiplication, used only to bootstrap the tables.
fn mul_reduce(mut a: u32, mut b: u32, poly: u32, k: u32) -> u32 {
    let top = 1u32 << k;
    let mut acc = 0;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= poly;
        }
    }
    acc
}

fn pow_reduce(base: u32, mut e: u32, poly: u32, k: u32) -> u32 {
    let mut result = 1;
    let mut b = base;
    while e != 0 {
        if e & 1 != 0 {
            result = mul_reduce(result, b, poly, k);
        }
        b = mul_reduce(b, b, poly, k);
        e >>= 1;
    }
    result
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n.is_multiple_of(f) {
            out.push(f);
            while n.is_multiple_of(f) {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// The finite field GF(2^k) with precomputed log/antilog tables.
#[derive(Clone)]
pub struct Field {
    k: u32,
    poly: u32,
    generator: u16,
    // exp has 2*(q-1) entries so log a + log b never needs a modular reduction.
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("k", &self.k)
            .field("poly", &format_args!("{:#x}", self.poly))
            .field("generator", &self.generator)
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.poly == other.poly
    }
}

impl Eq for Field {}

impl Field {
    /// GF(2^k) with the default reduction polynomial.
    pub fn new(k: u32) -> Result<Self, GfError> {
        Self::with_polynomial(k, default_polynomial(k)?)
    }

    pub fn with_polynomial(k: u32, poly: u32) -> Result<Self, GfError> {
        if !(MIN_K..=MAX_K).contains(&k) {
            return Err(GfError::UnsupportedPower(k));
        }
        if degree(poly) != k || !is_irreducible(poly) {
            return Err(GfError::ReduciblePolynomial { poly, k });
        }
        let order = (1u32 << k) - 1;
        let factors = prime_factors(order);
        let generator = (2..=order)
            .find(|&g| {
                factors
                    .iter()
                    .all(|&f| pow_reduce(g, order / f, poly, k) != 1)
            })
            .expect("multiplicative group of a finite field is cyclic");

        let q = 1usize << k;
        let mut exp = vec![0u16; 2 * (q - 1)];
        let mut log = vec![0u16; q];
        let mut x = 1u32;
        for i in 0..(q - 1) {
            exp[i] = x as u16;
            exp[i + q - 1] = x as u16;
            log[x as usize] = i as u16;
            x = mul_reduce(x, generator, poly, k);
        }
        Ok(Self {
            k,
            poly,
            generator: generator as u16,
            exp,
            log,
        })
    }

    #[inline]
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn polynomial(&self) -> u32 {
        self.poly
    }

    pub fn generator(&self) -> FieldElement {
        FieldElement(self.generator)
    }

    /// Number of elements, 2^k.
    #[inline]
    pub fn size(&self) -> u32 {
        1 << self.k
    }

    pub fn contains(&self, x: FieldElement) -> bool {
        u32::from(x.0) < self.size()
    }

    pub fn element(&self, value: u32) -> Result<FieldElement, GfError> {
        if value < self.size() {
            Ok(FieldElement(value as u16))
        } else {
            Err(GfError::OutOfField { value, k: self.k })
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.size()).map(|v| FieldElement(v as u16))
    }

    #[inline]
    pub fn add(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        FieldElement(x.0 ^ y.0)
    }

    #[inline]
    pub fn mul(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        if x.0 == 0 || y.0 == 0 {
            return FieldElement::ZERO;
        }
        let i = self.log[x.0 as usize] as usize + self.log[y.0 as usize] as usize;
        FieldElement(self.exp[i])
    }

    pub fn inv(&self, x: FieldElement) -> Result<FieldElement, GfError> {
        if x.is_zero() {
            return Err(GfError::ZeroInverse);
        }
        let order = self.size() as usize - 1;
        let l = self.log[x.0 as usize] as usize;
        Ok(FieldElement(self.exp[(order - l) % order]))
    }

    pub fn div(&self, x: FieldElement, y: FieldElement) -> Result<FieldElement, GfError> {
        Ok(self.mul(x, self.inv(y)?))
    }

    pub fn pow(&self, x: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if x.is_zero() {
            return FieldElement::ZERO;
        }
        let order = (self.size() - 1) as u64;
        let l = self.log[x.0 as usize] as u64;
        FieldElement(self.exp[((l * (e % order)) % order) as usize])
    }

    /// Discrete log of a nonzero element with respect to [`Field::generator`].
    #[inline]
    pub(crate) fn log_of(&self, x: FieldElement) -> u16 {
        self.log[x.0 as usize]
    }

    #[inline]
    pub(crate) fn exp_at(&self, i: usize) -> FieldElement {
        FieldElement(self.exp[i])
    }
}

/// Field parameters together with the digit base used to render elements.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSpec {
    field: Arc<Field>,
    d: u32,
    strict_width: Option<usize>,
}

impl FieldSpec {
    pub fn new(k: u32, d: u32) -> Result<Self, GfError> {
        Self::from_field(Field::new(k)?, d)
    }

    pub fn with_polynomial(k: u32, poly: u32, d: u32) -> Result<Self, GfError> {
        Self::from_field(Field::with_polynomial(k, poly)?, d)
    }

    pub fn from_field(field: Field, d: u32) -> Result<Self, GfError> {
        if d < 2 {
            return Err(GfError::BadBase(d));
        }
        if u64::from(d) > 1u64 << field.k() {
            return Err(GfError::FieldTooSmall { d, k: field.k() });
        }
        let strict_width = if d.is_power_of_two() && field.k().is_multiple_of(d.trailing_zeros()) {
            Some((field.k() / d.trailing_zeros()) as usize)
        } else {
            None
        };
        Ok(Self {
            field: Arc::new(field),
            d,
            strict_width,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn shared_field(&self) -> Arc<Field> {
        Arc::clone(&self.field)
    }

    pub fn k(&self) -> u32 {
        self.field.k()
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Digits per element in strict mode, when `d^s = 2^k` has an integer solution.
    pub fn strict_width(&self) -> Option<usize> {
        self.strict_width
    }
}

/// Dense row-major matrix over a field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![FieldElement::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, FieldElement::ONE);
        }
        m
    }

    pub fn from_rows<R: AsRef<[u16]>>(rows: &[R]) -> Result<Self, GfError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(GfError::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend(r.iter().map(|&v| FieldElement(v)));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: FieldElement) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[FieldElement] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u16>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|e| e.0).collect())
            .collect()
    }

    pub fn mul(&self, field: &Field, other: &Matrix) -> Result<Matrix, GfError> {
        if self.cols != other.rows {
            return Err(GfError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = FieldElement::ZERO;
                for t in 0..self.cols {
                    acc = field.add(acc, field.mul(self.get(i, t), other.get(t, j)));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }
}

/// Matrix-vector product `c = A b` over the field.
pub fn mat_vec_mul(
    field: &Field,
    a: &Matrix,
    b: &[FieldElement],
) -> Result<Vec<FieldElement>, GfError> {
    if b.len() != a.cols {
        return Err(GfError::DimensionMismatch {
            expected: a.cols,
            found: b.len(),
        });
    }
    Ok((0..a.rows)
        .map(|i| {
            a.row(i)
                .iter()
                .zip(b)
                .fold(FieldElement::ZERO, |acc, (&x, &y)| {
                    field.add(acc, field.mul(x, y))
                })
        })
        .collect())
}

/// Gauss-Jordan inversion, pivoting on the first nonzero entry in each column.
pub fn mat_invert(field: &Field, a: &Matrix) -> Result<Matrix, GfError> {
    if a.rows != a.cols {
        return Err(GfError::DimensionMismatch {
            expected: a.rows,
            found: a.cols,
        });
    }
    let n = a.rows;
    let mut work = a.clone();
    let mut inv = Matrix::identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !work.get(r, col).is_zero())
            .ok_or(GfError::SingularMatrix)?;
        if pivot != col {
            for j in 0..n {
                work.data.swap(pivot * n + j, col * n + j);
                inv.data.swap(pivot * n + j, col * n + j);
            }
        }
        let scale = field.inv(work.get(col, col))?;
        for j in 0..n {
            work.set(col, j, field.mul(work.get(col, j), scale));
            inv.set(col, j, field.mul(inv.get(col, j), scale));
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = work.get(r, col);
            if factor.is_zero() {
                continue;
            }
            for j in 0..n {
                let w = field.add(work.get(r, j), field.mul(factor, work.get(col, j)));
                work.set(r, j, w);
                let v = field.add(inv.get(r, j), field.mul(factor, inv.get(col, j)));
                inv.set(r, j, v);
            }
        }
    }
    Ok(inv)
}

/// An n x n Vandermonde matrix with entry (i, j) = points[j]^i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodingMatrix {
    points: Vec<FieldElement>,
    matrix: Matrix,
}

impl EncodingMatrix {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[FieldElement] {
        &self.points
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn invert(&self, field: &Field) -> Result<Matrix, GfError> {
        mat_invert(field, &self.matrix)
    }
}

/// The default evaluation points 1, 2, ..., n.
pub fn default_points(field: &Field, n: usize) -> Result<Vec<FieldElement>, GfError> {
    let max = field.size() as usize - 1;
    if n > max {
        return Err(GfError::TooManyPoints {
            n,
            k: field.k(),
            max,
        });
    }
    Ok((1..=n).map(|v| FieldElement(v as u16)).collect())
}

pub fn build_vandermonde(
    field: &Field,
    points: &[FieldElement],
) -> Result<EncodingMatrix, GfError> {
    let n = points.len();
    let max = field.size() as usize - 1;
    if n > max {
        return Err(GfError::TooManyPoints {
            n,
            k: field.k(),
            max,
        });
    }
    let mut seen = vec![false; field.size() as usize];
    for &p in points {
        if !field.contains(p) {
            return Err(GfError::OutOfField {
                value: p.0.into(),
                k: field.k(),
            });
        }
        if p.is_zero() {
            return Err(GfError::ZeroPoint);
        }
        if std::mem::replace(&mut seen[p.0 as usize], true) {
            return Err(GfError::DuplicatePoint(p.0));
        }
    }
    let mut matrix = Matrix::zeros(n, n);
    for (j, &p) in points.iter().enumerate() {
        let mut acc = FieldElement::ONE;
        for i in 0..n {
            matrix.set(i, j, acc);
            acc = field.mul(acc, p);
        }
    }
    Ok(EncodingMatrix {
        points: points.to_vec(),
        matrix,
    })
}

/// A square matrix prepared for repeated products: every nonzero entry is
/// stored as its discrete log, so one product costs one table lookup per
/// nonzero term. Counts logical multiplications (n^2 per product).
#[derive(Clone, Debug)]
pub struct LogMatrix {
    n: usize,
    // u32::MAX marks a zero entry
    logs: Vec<u32>,
}

const ZERO_LOG: u32 = u32::MAX;

impl LogMatrix {
    pub fn new(field: &Field, m: &Matrix) -> Result<Self, GfError> {
        if m.rows != m.cols {
            return Err(GfError::DimensionMismatch {
                expected: m.rows,
                found: m.cols,
            });
        }
        let logs = m
            .data
            .iter()
            .map(|&e| {
                if e.is_zero() {
                    ZERO_LOG
                } else {
                    field.log_of(e) as u32
                }
            })
            .collect();
        Ok(Self { n: m.rows, logs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `out = M v`; `scratch` holds the logs of `v` and is resized as needed.
    pub fn apply(
        &self,
        field: &Field,
        v: &[FieldElement],
        out: &mut Vec<FieldElement>,
        scratch: &mut Vec<u32>,
    ) -> Result<u64, GfError> {
        if v.len() != self.n {
            return Err(GfError::DimensionMismatch {
                expected: self.n,
                found: v.len(),
            });
        }
        scratch.clear();
        scratch.extend(v.iter().map(|&e| {
            if e.is_zero() {
                ZERO_LOG
            } else {
                field.log_of(e) as u32
            }
        }));
        out.clear();
        for row in self.logs.chunks_exact(self.n) {
            let mut acc = 0u16;
            for (&la, &lb) in row.iter().zip(scratch.iter()) {
                if la != ZERO_LOG && lb != ZERO_LOG {
                    acc ^= field.exp_at((la + lb) as usize).0;
                }
            }
            out.push(FieldElement(acc));
        }
        Ok((self.n * self.n) as u64)
    }
}
