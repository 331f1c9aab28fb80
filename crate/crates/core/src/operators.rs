//! Finite-dimensional normed spaces `E = R^r`, dense operators on them and
//! the induced operator norms.
//!
//! Every [`Operator`] and [`Vector`] carries the [`Space`] it lives in, so the
//! norm used by every bound downstream is fixed at construction time.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Condition numbers above this are rejected by [`invert`].
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NormKind {
    #[default]
    Euclidean,
    One,
    Inf,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::Euclidean, NormKind::One, NormKind::Inf];

    pub fn name(self) -> &'static str {
        match self {
            NormKind::Euclidean => "euclidean",
            NormKind::One => "one",
            NormKind::Inf => "inf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "euclidean" | "l2" | "two" => Some(NormKind::Euclidean),
            "one" | "one-norm" | "l1" => Some(NormKind::One),
            "inf" | "inf-norm" | "linf" | "max" => Some(NormKind::Inf),
            _ => None,
        }
    }

    /// Norm of a coordinate vector.
    pub fn vector_norm(self, v: &[f64]) -> f64 {
        match self {
            NormKind::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::One => v.iter().map(|x| x.abs()).sum(),
            NormKind::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The space `R^r` together with the norm it is equipped with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Space {
    dim: usize,
    norm: NormKind,
}

impl Space {
    pub fn new(dim: usize, norm: NormKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidOperator("space dimension must be at least 1".into()));
        }
        Ok(Space { dim, norm })
    }

    /// Euclidean `R^dim`. Panics on `dim == 0`.
    pub fn euclidean(dim: usize) -> Self {
        Space::new(dim, NormKind::Euclidean).expect("dimension must be positive")
    }

    pub fn with_norm(dim: usize, norm: NormKind) -> Self {
        Space::new(dim, norm).expect("dimension must be positive")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm
    }
}

/// Dense row-major `r x r` matrix acting on a [`Space`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: Space,
    entries: Vec<f64>,
}

impl Operator {
    /// Builds an operator from row-major entries. Rejects non-finite entries
    /// and a wrong entry count.
    pub fn new(space: Space, entries: Vec<f64>) -> Result<Self> {
        let r = space.dim();
        if entries.len() != r * r {
            return Err(Error::DimensionMismatch { expected: r * r, got: entries.len() });
        }
        if let Some(pos) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidOperator(format!(
                "entry ({}, {}) is not finite",
                pos / r,
                pos % r
            )));
        }
        Ok(Operator { space, entries })
    }

    /// Like [`Operator::new`] but without the finiteness check, so tests can
    /// build invalid operators.
    #[cfg(test)]
    pub(crate) fn from_raw(space: Space, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), space.dim() * space.dim());
        Operator { space, entries }
    }

    pub fn from_rows(space: Space, rows: &[&[f64]]) -> Result<Self> {
        let r = space.dim();
        if rows.len() != r {
            return Err(Error::DimensionMismatch { expected: r, got: rows.len() });
        }
        let mut entries = Vec::with_capacity(r * r);
        for row in rows {
            if row.len() != r {
                return Err(Error::DimensionMismatch { expected: r, got: row.len() });
            }
            entries.extend_from_slice(row);
        }
        Operator::new(space, entries)
    }

    pub fn identity(space: Space) -> Self {
        let r = space.dim();
        let mut entries = vec![0.0; r * r];
        for i in 0..r {
            entries[i * r + i] = 1.0;
        }
        Operator { space, entries }
    }

    pub fn zeros(space: Space) -> Self {
        let r = space.dim();
        Operator { space, entries: vec![0.0; r * r] }
    }

    pub fn diag(space: Space, d: &[f64]) -> Result<Self> {
        let r = space.dim();
        if d.len() != r {
            return Err(Error::DimensionMismatch { expected: r, got: d.len() });
        }
        let mut entries = vec![0.0; r * r];
        for (i, x) in d.iter().enumerate() {
            entries[i * r + i] = *x;
        }
        Operator::new(space, entries)
    }

    /// `c * id`.
    pub fn scalar(space: Space, c: f64) -> Self {
        Operator::identity(space).scale(c)
    }

    /// Rotation generator `[[0, 1], [-1, 0]]` on a two-dimensional space.
    pub fn rotation_generator(space: Space) -> Self {
        assert_eq!(space.dim(), 2, "rotation generator needs a 2-dimensional space");
        Operator { space, entries: vec![0.0, 1.0, -1.0, 0.0] }
    }

    /// `exp(theta * [[0, 1], [-1, 0]])`, i.e. `[[cos, sin], [-sin, cos]]`.
    pub fn rotation(space: Space, theta: f64) -> Self {
        assert_eq!(space.dim(), 2, "rotation needs a 2-dimensional space");
        let (s, c) = theta.sin_cos();
        Operator { space, entries: vec![c, s, -s, c] }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim() + j]
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|x| x.is_finite())
    }

    /// Same entries, different norm.
    pub fn in_space(&self, space: Space) -> Self {
        assert_eq!(space.dim(), self.dim());
        Operator { space, entries: self.entries.clone() }
    }

    pub fn scale(&self, c: f64) -> Self {
        Operator { space: self.space, entries: self.entries.iter().map(|x| c * x).collect() }
    }

    pub fn transpose(&self) -> Self {
        let r = self.dim();
        let mut entries = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                entries[j * r + i] = self.entries[i * r + j];
            }
        }
        Operator { space: self.space, entries }
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        let r = self.dim();
        let mut out = vec![0.0; r * r];
        matmul(r, &self.entries, &rhs.entries, &mut out);
        Operator { space: self.space, entries: out }
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        assert_eq!(self.dim(), v.dim(), "operator and vector dimensions differ");
        let r = self.dim();
        let entries = (0..r)
            .map(|i| (0..r).map(|j| self.entries[i * r + j] * v.entries[j]).sum())
            .collect();
        Vector { space: self.space, entries }
    }

    /// Induced operator norm for the space's norm kind.
    pub fn norm(&self) -> f64 {
        let r = self.dim();
        match self.space.norm_kind() {
            NormKind::One => (0..r)
                .map(|j| (0..r).map(|i| self.entries[i * r + j].abs()).sum::<f64>())
                .fold(0.0, f64::max),
            NormKind::Inf => (0..r)
                .map(|i| self.entries[i * r..(i + 1) * r].iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            NormKind::Euclidean => {
                if r == 1 {
                    self.entries[0].abs()
                } else {
                    singular_values(r, &self.entries).iter().copied().fold(0.0, f64::max)
                }
            }
        }
    }

    /// Ratio of extreme singular values; `inf` for singular matrices.
    pub fn condition_number(&self) -> f64 {
        let r = self.dim();
        let sv = singular_values(r, &self.entries);
        let max = sv.iter().copied().fold(0.0, f64::max);
        let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn invert(&self) -> Result<Operator> {
        self.invert_with_cap(DEFAULT_CONDITION_CAP)
    }

    /// Inverse via LU followed by one step of Newton–Schulz refinement.
    pub fn invert_with_cap(&self, cap: f64) -> Result<Operator> {
        if !self.is_finite() {
            return Err(Error::InvalidOperator("non-finite entries".into()));
        }
        let r = self.dim();
        let condition = self.condition_number();
        if !condition.is_finite() || condition > cap {
            return Err(Error::SingularOperator { condition });
        }
        let m = DMatrix::from_row_slice(r, r, &self.entries);
        let inv = m
            .clone()
            .try_inverse()
            .ok_or(Error::SingularOperator { condition })?;
        // X <- X + X (I - M X)
        let residual = DMatrix::identity(r, r) - &m * &inv;
        let refined = &inv + &inv * residual;
        let mut entries = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                entries[i * r + j] = refined[(i, j)];
            }
        }
        Operator::new(self.space, entries)
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

pub(crate) fn matmul(r: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..r {
        for j in 0..r {
            let mut acc = 0.0;
            for k in 0..r {
                acc += a[i * r + k] * b[k * r + j];
            }
            out[i * r + j] = acc;
        }
    }
}

fn singular_values(r: usize, entries: &[f64]) -> Vec<f64> {
    if r == 2 {
        return singular_values_2x2(entries);
    }
    let m = DMatrix::from_row_slice(r, r, entries);
    m.singular_values().iter().copied().collect()
}

// Closed form for 2x2: sigma_{1,2} = (sqrt((a+d)^2 + (c-b)^2) ± sqrt((a-d)^2 + (b+c)^2)) / 2
fn singular_values_2x2(e: &[f64]) -> Vec<f64> {
    let (a, b, c, d) = (e[0], e[1], e[2], e[3]);
    let p = (a + d).hypot(c - b);
    let q = (a - d).hypot(b + c);
    let s1 = 0.5 * (p + q);
    // the smaller value from the determinant keeps relative accuracy
    let s2 = if s1 > 0.0 { (a * d - b * c).abs() / s1 } else { 0.0 };
    vec![s1, s2]
}

/// Induced operator norm; rejects operators with non-finite entries.
pub fn op_norm(m: &Operator) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::InvalidOperator("non-finite entries".into()));
    }
    Ok(m.norm())
}

/// `m^{-1}` with the default condition cap.
pub fn invert(m: &Operator) -> Result<Operator> {
    m.invert()
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim());
        Operator {
            space: self.space,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim());
        Operator {
            space: self.space,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.compose(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-1.0)
    }
}

/// An element of `E = R^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    space: Space,
    entries: Vec<f64>,
}

impl Vector {
    pub fn new(space: Space, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: entries.len() });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidOperator("vector has non-finite entries".into()));
        }
        Ok(Vector { space, entries })
    }

    pub fn zeros(space: Space) -> Self {
        Vector { space, entries: vec![0.0; space.dim()] }
    }

    /// The `i`-th standard basis vector.
    pub fn basis(space: Space, i: usize) -> Self {
        let mut v = Vector::zeros(space);
        v.entries[i] = 1.0;
        v
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.space.norm_kind().vector_norm(&self.entries)
    }

    pub fn scale(&self, c: f64) -> Self {
        Vector { space: self.space, entries: self.entries.iter().map(|x| c * x).collect() }
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        (self - other).norm()
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim());
        Vector {
            space: self.space,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim());
        Vector {
            space: self.space,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}
