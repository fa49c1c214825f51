//! Exact rational scalars, vectors and matrices.
//!
//! Everything here is canonical after every operation (`BigRational` reduces
//! on construction), so `==` is structural equality of values.

use std::fmt;
use std::ops::Index;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index {index} out of range for dimension {bound}")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("empty index set")]
    EmptyIndexSet,
    #[error("cannot parse rational {0:?}")]
    Parse(String),
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `p`, `p/q`, `-p/q`. The typographic minus `−` is accepted too.
pub fn parse_rational(text: &str) -> Result<Rational, ArithError> {
    let t = text.trim();
    let (neg, body) = if let Some(rest) = t.strip_prefix('−') {
        (true, rest)
    } else if let Some(rest) = t.strip_prefix('-') {
        (true, rest)
    } else {
        (false, t.strip_prefix('+').unwrap_or(t))
    };
    let bad = || ArithError::Parse(text.to_string());
    if body.is_empty() || body.starts_with('-') || body.starts_with('+') {
        return Err(bad());
    }
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, d),
        None => (body, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() || den.is_negative() {
        return Err(bad());
    }
    let r = Rational::new(num, den);
    Ok(if neg { -r } else { r })
}

/// `p` for integers, `p/q` otherwise, ASCII minus.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

/// Largest integer not above `r`.
pub fn floor_int(r: &Rational) -> BigInt {
    r.floor().to_integer()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct QVector(Vec<Rational>);

impl QVector {
    pub fn new(entries: Vec<Rational>) -> Self {
        QVector(entries)
    }

    pub fn zeros(len: usize) -> Self {
        QVector(vec![Rational::zero(); len])
    }

    pub fn from_i64s(values: &[i64]) -> Self {
        QVector(values.iter().map(|&v| int(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Rational> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rational> {
        self.0.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    fn check_len(&self, other: &QVector) -> Result<(), ArithError> {
        if self.len() != other.len() {
            return Err(ArithError::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &QVector) -> Result<QVector, ArithError> {
        self.check_len(other)?;
        Ok(QVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &QVector) -> Result<QVector, ArithError> {
        self.check_len(other)?;
        Ok(QVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn scale(&self, k: &Rational) -> QVector {
        QVector(self.0.iter().map(|a| a * k).collect())
    }

    pub fn dot(&self, other: &QVector) -> Result<Rational, ArithError> {
        self.check_len(other)?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .fold(Rational::zero(), |acc, (a, b)| acc + a * b))
    }

    pub fn concat(&self, other: &QVector) -> QVector {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        QVector(v)
    }
}

impl Index<usize> for QVector {
    type Output = Rational;
    fn index(&self, i: usize) -> &Rational {
        &self.0[i]
    }
}

impl From<Vec<Rational>> for QVector {
    fn from(v: Vec<Rational>) -> Self {
        QVector(v)
    }
}

impl FromIterator<Rational> for QVector {
    fn from_iter<I: IntoIterator<Item = Rational>>(iter: I) -> Self {
        QVector(iter.into_iter().collect())
    }
}

impl fmt::Display for QVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Dense row-major rational matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl QMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Rational>) -> Result<Self, ArithError> {
        if rows * cols != data.len() {
            return Err(ArithError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(QMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, ArithError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(ArithError::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        QMatrix::new(r, c, data)
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let converted = rows
            .iter()
            .map(|row| row.iter().map(|&v| int(v)).collect())
            .collect();
        QMatrix::from_rows(converted).expect("ragged integer matrix literal")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rational) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[Rational] {
        &self.data
    }

    pub fn neg(&self) -> QMatrix {
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| -a).collect(),
        }
    }

    pub fn transpose(&self) -> QMatrix {
        let mut t = QMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &QVector) -> Result<QVector, ArithError> {
        if v.len() != self.cols {
            return Err(ArithError::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v.iter())
                    .fold(Rational::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect())
    }

    /// Submatrix on the given (0-based) rows and columns, in the order given.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<QMatrix, ArithError> {
        for &i in rows {
            if i >= self.rows {
                return Err(ArithError::IndexOutOfRange { index: i, bound: self.rows });
            }
        }
        for &j in cols {
            if j >= self.cols {
                return Err(ArithError::IndexOutOfRange { index: j, bound: self.cols });
            }
        }
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                data.push(self.get(i, j).clone());
            }
        }
        QMatrix::new(rows.len(), cols.len(), data)
    }

    fn require_square(&self) -> Result<(), ArithError> {
        if !self.is_square() {
            return Err(ArithError::NotSquare { rows: self.rows, cols: self.cols });
        }
        Ok(())
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    ///
    /// Rows are first scaled to integers by the lcm of their denominators; the
    /// integer determinant is divided by the product of the scale factors.
    pub fn det(&self) -> Result<Rational, ArithError> {
        self.require_square()?;
        let n = self.rows;
        if n == 0 {
            return Ok(Rational::one());
        }
        let mut scale = BigInt::one();
        let mut a: Vec<Vec<BigInt>> = Vec::with_capacity(n);
        for i in 0..n {
            let lcm = self
                .row(i)
                .iter()
                .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
            scale *= &lcm;
            a.push(
                self.row(i)
                    .iter()
                    .map(|r| r.numer() * (&lcm / r.denom()))
                    .collect(),
            );
        }
        let det = bareiss(&mut a);
        Ok(Rational::new(det, scale))
    }

    /// Solves `A x = b` exactly. `Ok(None)` when `A` is singular.
    pub fn solve(&self, b: &QVector) -> Result<Option<QVector>, ArithError> {
        Ok(self
            .solve_many(std::slice::from_ref(b))?
            .map(|mut xs| xs.pop().unwrap()))
    }

    /// Solves `A X = [b_1 .. b_k]` with one elimination pass.
    pub fn solve_many(&self, rhs: &[QVector]) -> Result<Option<Vec<QVector>>, ArithError> {
        self.require_square()?;
        let n = self.rows;
        for b in rhs {
            if b.len() != n {
                return Err(ArithError::DimensionMismatch { expected: n, found: b.len() });
            }
        }
        let width = n + rhs.len();
        let mut a: Vec<Vec<Rational>> = (0..n)
            .map(|i| {
                let mut row = Vec::with_capacity(width);
                row.extend_from_slice(self.row(i));
                row.extend(rhs.iter().map(|b| b[i].clone()));
                row
            })
            .collect();
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
                return Ok(None);
            };
            a.swap(col, pivot);
            let inv = a[col][col].recip();
            for v in a[col][col..].iter_mut() {
                *v *= &inv;
            }
            let pivot_row = a[col].clone();
            for (r, row) in a.iter_mut().enumerate() {
                if r == col || row[col].is_zero() {
                    continue;
                }
                let factor = row[col].clone();
                for (v, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *v -= &factor * p;
                }
            }
        }
        Ok(Some(
            (0..rhs.len())
                .map(|k| a.iter().map(|row| row[n + k].clone()).collect())
                .collect(),
        ))
    }

    /// Determinant of the principal submatrix on the 0-based index set `set`.
    pub fn principal_minor(&self, set: &[usize]) -> Result<Rational, ArithError> {
        self.require_square()?;
        if set.is_empty() {
            return Err(ArithError::EmptyIndexSet);
        }
        self.submatrix(set, set)?.det()
    }
}

/// In-place Bareiss elimination on a square integer matrix; returns the determinant.
fn bareiss(a: &mut [Vec<BigInt>]) -> BigInt {
    let n = a.len();
    let mut sign_flip = false;
    let mut prev = BigInt::one();
    for k in 0..n.saturating_sub(1) {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign_flip = !sign_flip;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if sign_flip {
        -det
    } else {
        det
    }
}

impl fmt::Display for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            for (j, r) in self.row(i).iter().enumerate() {
                if j > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{r}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
