//! Vectors and tableaus over [`Rational`] with two interchangeable storage
//! backends.
//!
//! `Dense` keeps every entry in a contiguous list and its kernels walk the
//! whole list. `Sparse` keeps only nonzero entries in an ordered map keyed by
//! index; its kernels touch stored entries only. Both report identical values
//! for every operation.

use std::borrow::Cow;
use std::collections::{btree_map, BTreeMap};
use std::fmt;

use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("dimension mismatch: expected {expected}, found {found}")]
pub struct DimensionError {
    pub expected: usize,
    pub found: usize,
}

fn ensure_len(expected: usize, found: usize) -> Result<(), DimensionError> {
    if expected == found {
        Ok(())
    } else {
        Err(DimensionError { expected, found })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Backend {
    #[default]
    Dense,
    Sparse,
}

impl Backend {
    pub const ALL: [Backend; 2] = [Backend::Dense, Backend::Sparse];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Dense => "dense",
            Backend::Sparse => "sparse",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dense" => Ok(Backend::Dense),
            "sparse" => Ok(Backend::Sparse),
            other => Err(format!("unknown backend {other:?}")),
        }
    }
}

/// Sparse storage: declared length plus the nonzero entries in ascending
/// index order.
#[derive(Clone, Default)]
pub struct SparseVector {
    len: usize,
    entries: BTreeMap<usize, Rational>,
}

impl SparseVector {
    pub fn new(
        len: usize,
        entries: impl IntoIterator<Item = (usize, Rational)>,
    ) -> Result<Self, DimensionError> {
        let mut map = BTreeMap::new();
        for (i, v) in entries {
            if i >= len {
                return Err(DimensionError {
                    expected: len,
                    found: i + 1,
                });
            }
            if v.is_zero() {
                map.remove(&i);
            } else {
                map.insert(i, v);
            }
        }
        Ok(SparseVector { len, entries: map })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &BTreeMap<usize, Rational> {
        &self.entries
    }
}

#[derive(Clone)]
pub enum Vector {
    Dense(Vec<Rational>),
    Sparse(SparseVector),
}

/// Nonzero entries in ascending index order.
pub enum NonZeros<'a> {
    Dense(std::iter::Enumerate<std::slice::Iter<'a, Rational>>),
    Sparse(btree_map::Iter<'a, usize, Rational>),
}

impl<'a> Iterator for NonZeros<'a> {
    type Item = (usize, &'a Rational);

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            NonZeros::Dense(it) => it.by_ref().find(|(_, v)| !v.is_zero()),
            NonZeros::Sparse(it) => it.next().map(|(i, v)| (*i, v)),
        }
    }
}

impl Vector {
    pub fn zeros(len: usize, backend: Backend) -> Vector {
        match backend {
            Backend::Dense => Vector::Dense(vec![Rational::zero(); len]),
            Backend::Sparse => Vector::Sparse(SparseVector {
                len,
                entries: BTreeMap::new(),
            }),
        }
    }

    pub fn unit(len: usize, index: usize, backend: Backend) -> Vector {
        Vector::zeros(len, backend).with_entry(index, Rational::one())
    }

    pub fn from_values(values: Vec<Rational>, backend: Backend) -> Vector {
        match backend {
            Backend::Dense => Vector::Dense(values),
            Backend::Sparse => {
                let len = values.len();
                Vector::Sparse(
                    SparseVector::new(len, values.into_iter().enumerate())
                        .expect("indices come from enumerate"),
                )
            }
        }
    }

    pub fn from_ints(values: &[i64], backend: Backend) -> Vector {
        Vector::from_values(values.iter().map(|&v| Rational::from(v)).collect(), backend)
    }

    pub fn len(&self) -> usize {
        match self {
            Vector::Dense(v) => v.len(),
            Vector::Sparse(s) => s.len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn backend(&self) -> Backend {
        match self {
            Vector::Dense(_) => Backend::Dense,
            Vector::Sparse(_) => Backend::Sparse,
        }
    }

    /// Entry `i`, or zero when `i` is out of range.
    pub fn get(&self, i: usize) -> Cow<'_, Rational> {
        match self {
            Vector::Dense(v) => v
                .get(i)
                .map(Cow::Borrowed)
                .unwrap_or_else(|| Cow::Owned(Rational::zero())),
            Vector::Sparse(s) => s
                .entries
                .get(&i)
                .map(Cow::Borrowed)
                .unwrap_or_else(|| Cow::Owned(Rational::zero())),
        }
    }

    pub fn nonzeros(&self) -> NonZeros<'_> {
        match self {
            Vector::Dense(v) => NonZeros::Dense(v.iter().enumerate()),
            Vector::Sparse(s) => NonZeros::Sparse(s.entries.iter()),
        }
    }

    pub fn nnz(&self) -> usize {
        self.nonzeros().count()
    }

    pub fn is_zero(&self) -> bool {
        self.nonzeros().next().is_none()
    }

    pub fn to_values(&self) -> Vec<Rational> {
        match self {
            Vector::Dense(v) => v.clone(),
            Vector::Sparse(s) => {
                let mut out = vec![Rational::zero(); s.len];
                for (i, v) in &s.entries {
                    out[*i] = v.clone();
                }
                out
            }
        }
    }

    pub fn to_backend(&self, backend: Backend) -> Vector {
        match (self, backend) {
            (Vector::Dense(_), Backend::Dense) | (Vector::Sparse(_), Backend::Sparse) => {
                self.clone()
            }
            (Vector::Sparse(_), Backend::Dense) => Vector::Dense(self.to_values()),
            (Vector::Dense(v), Backend::Sparse) => Vector::Sparse(SparseVector {
                len: v.len(),
                entries: v
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(i, x)| (i, x.clone()))
                    .collect(),
            }),
        }
    }

    /// Copy with entry `i` replaced. Panics if `i` is out of range.
    pub fn with_entry(mut self, i: usize, value: Rational) -> Vector {
        self.set(i, value);
        self
    }

    pub(crate) fn set(&mut self, i: usize, value: Rational) {
        assert!(i < self.len(), "index {i} out of range for length {}", self.len());
        match self {
            Vector::Dense(v) => v[i] = value,
            Vector::Sparse(s) => {
                if value.is_zero() {
                    s.entries.remove(&i);
                } else {
                    s.entries.insert(i, value);
                }
            }
        }
    }

    /// Copy extended by `extra` zeros.
    pub fn extended(&self, extra: usize) -> Vector {
        match self {
            Vector::Dense(v) => {
                let mut v = v.clone();
                v.resize(v.len() + extra, Rational::zero());
                Vector::Dense(v)
            }
            Vector::Sparse(s) => Vector::Sparse(SparseVector {
                len: s.len + extra,
                entries: s.entries.clone(),
            }),
        }
    }

    /// Copy truncated to the first `len` entries.
    pub fn truncated(&self, len: usize) -> Vector {
        match self {
            Vector::Dense(v) => Vector::Dense(v.iter().take(len).cloned().collect()),
            Vector::Sparse(s) => Vector::Sparse(SparseVector {
                len: len.min(s.len),
                entries: s.entries.range(..len).map(|(i, v)| (*i, v.clone())).collect(),
            }),
        }
    }

    pub fn dot(&self, other: &Vector) -> Result<Rational, DimensionError> {
        ensure_len(self.len(), other.len())?;
        Ok(match (self, other) {
            (Vector::Dense(a), Vector::Dense(b)) => {
                a.iter().zip(b).map(|(x, y)| x * y).sum()
            }
            (Vector::Sparse(a), Vector::Sparse(b)) => {
                let (small, large) = if a.nnz() <= b.nnz() { (a, b) } else { (b, a) };
                small
                    .entries
                    .iter()
                    .filter_map(|(i, x)| large.entries.get(i).map(|y| x * y))
                    .sum()
            }
            (Vector::Sparse(s), d @ Vector::Dense(_)) | (d @ Vector::Dense(_), Vector::Sparse(s)) => {
                s.entries.iter().map(|(i, x)| x * &*d.get(*i)).sum()
            }
        })
    }

    pub fn scale(&self, c: &Rational) -> Vector {
        match self {
            Vector::Dense(v) => Vector::Dense(v.iter().map(|x| x * c).collect()),
            Vector::Sparse(s) => {
                if c.is_zero() {
                    return Vector::zeros(s.len, Backend::Sparse);
                }
                Vector::Sparse(SparseVector {
                    len: s.len,
                    entries: s.entries.iter().map(|(i, x)| (*i, x * c)).collect(),
                })
            }
        }
    }

    pub fn neg(&self) -> Vector {
        self.scale(&Rational::from(-1))
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: &Rational, other: &Vector) -> Result<Vector, DimensionError> {
        ensure_len(self.len(), other.len())?;
        let mut out = self.clone();
        out.add_scaled_in_place(c, other);
        Ok(out)
    }

    fn add_scaled_in_place(&mut self, c: &Rational, other: &Vector) {
        debug_assert_eq!(self.len(), other.len());
        if c.is_zero() {
            return;
        }
        match (&mut *self, other) {
            (Vector::Dense(acc), Vector::Dense(o)) => {
                for (a, x) in acc.iter_mut().zip(o) {
                    if !x.is_zero() {
                        *a += x * c;
                    }
                }
            }
            (Vector::Dense(acc), Vector::Sparse(o)) => {
                for (i, x) in &o.entries {
                    acc[*i] += x * c;
                }
            }
            (Vector::Sparse(acc), o) => {
                for (i, x) in o.nonzeros() {
                    let delta = x * c;
                    match acc.entries.entry(i) {
                        btree_map::Entry::Vacant(e) => {
                            e.insert(delta);
                        }
                        btree_map::Entry::Occupied(mut e) => {
                            *e.get_mut() += delta;
                            if e.get().is_zero() {
                                e.remove();
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector, DimensionError> {
        self.add_scaled(&Rational::from(-1), other)
    }

    pub fn add(&self, other: &Vector) -> Result<Vector, DimensionError> {
        self.add_scaled(&Rational::one(), other)
    }
}

/// Value equality: same length and same entries, whatever the backends.
impl PartialEq for Vector {
    fn eq(&self, other: &Vector) -> bool {
        self.len() == other.len() && self.nonzeros().eq(other.nonzeros())
    }
}

impl Eq for Vector {}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vector::Dense(v) => f.debug_tuple("Dense").field(v).finish(),
            Vector::Sparse(s) => f
                .debug_struct("Sparse")
                .field("len", &s.len)
                .field("entries", &s.entries)
                .finish(),
        }
    }
}

/// Maximum of `row . x` over the box `lower <= x <= upper`.
///
/// Each coefficient picks the upper bound when positive and the lower bound
/// when negative; zero coefficients contribute nothing.
pub fn row_upper_bound(
    row: &Vector,
    upper: &Vector,
    lower: &Vector,
) -> Result<Rational, DimensionError> {
    ensure_len(row.len(), upper.len())?;
    ensure_len(row.len(), lower.len())?;
    Ok(row_extreme(row, upper, lower))
}

/// Minimum of `row . x` over the box `lower <= x <= upper`.
pub fn row_lower_bound(
    row: &Vector,
    upper: &Vector,
    lower: &Vector,
) -> Result<Rational, DimensionError> {
    ensure_len(row.len(), upper.len())?;
    ensure_len(row.len(), lower.len())?;
    Ok(row_extreme(row, lower, upper))
}

// `pos` is consulted for positive coefficients, `neg` for negative ones.
fn row_extreme(row: &Vector, pos: &Vector, neg: &Vector) -> Rational {
    match (row, pos, neg) {
        (Vector::Dense(r), Vector::Dense(p), Vector::Dense(n)) => {
            let mut acc = Rational::zero();
            for ((c, p), n) in r.iter().zip(p).zip(n) {
                if c.is_negative() {
                    acc += c * n;
                } else if c.is_positive() {
                    acc += c * p;
                }
            }
            acc
        }
        _ => row
            .nonzeros()
            .map(|(i, c)| {
                if c.is_negative() {
                    c * &*neg.get(i)
                } else {
                    c * &*pos.get(i)
                }
            })
            .sum(),
    }
}

/// Equality-constraint matrix: every row has `num_cols` entries and is read
/// as `row . x = 0`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Tableau {
    num_cols: usize,
    rows: Vec<Vector>,
}

impl Tableau {
    pub fn new(num_cols: usize, rows: Vec<Vector>) -> Result<Tableau, DimensionError> {
        for row in &rows {
            ensure_len(num_cols, row.len())?;
        }
        Ok(Tableau { num_cols, rows })
    }

    pub fn empty(num_cols: usize) -> Tableau {
        Tableau {
            num_cols,
            rows: Vec::new(),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    pub fn rows(&self) -> &[Vector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Vector {
        &self.rows[i]
    }

    pub fn push_row(&mut self, row: Vector) -> Result<(), DimensionError> {
        ensure_len(self.num_cols, row.len())?;
        self.rows.push(row);
        Ok(())
    }

    pub fn with_row(mut self, row: Vector) -> Result<Tableau, DimensionError> {
        self.push_row(row)?;
        Ok(self)
    }

    pub fn to_backend(&self, backend: Backend) -> Tableau {
        Tableau {
            num_cols: self.num_cols,
            rows: self.rows.iter().map(|r| r.to_backend(backend)).collect(),
        }
    }

    /// `w^T A`: the combination `sum_r w[r] * rows[r]`, in `w`'s backend.
    pub fn combine(&self, w: &Vector) -> Result<Vector, DimensionError> {
        ensure_len(self.rows.len(), w.len())?;
        let mut acc = Vector::zeros(self.num_cols, w.backend());
        match w {
            Vector::Dense(ws) => {
                for (wr, row) in ws.iter().zip(&self.rows) {
                    acc.add_scaled_in_place(wr, row);
                }
            }
            Vector::Sparse(s) => {
                for (r, wr) in &s.entries {
                    acc.add_scaled_in_place(wr, &self.rows[*r]);
                }
            }
        }
        Ok(acc)
    }

    /// `A x`, one entry per row.
    pub fn apply(&self, x: &Vector) -> Result<Vec<Rational>, DimensionError> {
        self.rows.iter().map(|row| row.dot(x)).collect()
    }
}

/// Free-function spelling of [`Vector::dot`].
pub fn dot_product(x: &Vector, y: &Vector) -> Result<Rational, DimensionError> {
    x.dot(y)
}

/// Free-function spelling of [`Tableau::combine`].
pub fn row_combination(w: &Vector, tableau: &Tableau) -> Result<Vector, DimensionError> {
    tableau.combine(w)
}
