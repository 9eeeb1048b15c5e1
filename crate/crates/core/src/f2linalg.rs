//! Bit-exact linear algebra over GF(2): vectors, matrices, subspaces and
//! cosets. Everything downstream (token states, oracles, signatures) is
//! built on these types.
//!
//! Conventions: bit 0 of a [`BitVec`] is the leftmost character of its
//! textual form, so `"1100"` has bits 0 and 1 set. The hex form packs the
//! same bits most-significant-first (`"0xC"` for `1100`).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum F2Error {
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("dimension {dim} out of range for ambient space of dimension {ambient}")]
    DimOutOfRange { dim: usize, ambient: usize },
    #[error("cannot split a zero-dimensional subspace")]
    ZeroDim,
    #[error("invalid bit string {0:?}")]
    Parse(String),
}

/// A fixed-length vector over GF(2), bit-packed into machine words.
///
/// The length is immutable after construction. Bit `i` corresponds to the
/// `i`-th character of the textual form, with bit 0 leftmost.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zero(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut v = BitVec::zero(len);
        for i in 0..len {
            v.set(i, rng.gen::<bool>());
        }
        v
    }

    /// Vector whose textual form is the `len`-bit binary expansion of
    /// `index` (bit 0 most significant).
    pub fn from_index(index: usize, len: usize) -> Self {
        debug_assert!(len >= usize::BITS as usize || index < (1usize << len));
        let mut v = BitVec::zero(len);
        for i in 0..len {
            v.set(i, (index >> (len - 1 - i)) & 1 == 1);
        }
        v
    }

    /// Inverse of [`BitVec::from_index`]; only meaningful for short vectors.
    pub fn to_index(&self) -> usize {
        debug_assert!(self.len < usize::BITS as usize);
        let mut idx = 0usize;
        for i in 0..self.len {
            idx = (idx << 1) | self.get(i) as usize;
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len);
        if bit {
            self.words[i / 64] |= 1u64 << (i % 64);
        } else {
            self.words[i / 64] &= !(1u64 << (i % 64));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    /// Index of the first set bit, if any.
    pub fn leading_one(&self) -> Option<usize> {
        for (wi, w) in self.words.iter().enumerate() {
            if *w != 0 {
                return Some(wi * 64 + w.trailing_zeros() as usize);
            }
        }
        None
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        assert_eq!(self.len, other.len, "xor of unequal-length vectors");
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        BitVec {
            len: self.len,
            words,
        }
    }

    fn xor_in_place(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Inner product mod 2.
    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "dot of unequal-length vectors");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Hex form: `"0xC"` for `1100` at λ=4, most-significant bit = index 0.
    pub fn to_hex(&self) -> String {
        let nibbles = self.len.div_ceil(4).max(1);
        let pad = nibbles * 4 - self.len;
        let mut s = String::with_capacity(nibbles + 2);
        s.push_str("0x");
        for n in 0..nibbles {
            let mut val = 0u8;
            for k in 0..4 {
                let pos = n * 4 + k;
                let bit = if pos < pad {
                    false
                } else {
                    self.get(pos - pad)
                };
                val = (val << 1) | bit as u8;
            }
            s.push(char::from_digit(val as u32, 16).unwrap().to_ascii_uppercase());
        }
        s
    }

    pub fn from_hex(s: &str, len: usize) -> Result<Self, F2Error> {
        let body = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
        let nibbles = len.div_ceil(4).max(1);
        if body.len() != nibbles {
            return Err(F2Error::Parse(s.to_string()));
        }
        let pad = nibbles * 4 - len;
        let mut v = BitVec::zero(len);
        for (n, c) in body.chars().enumerate() {
            let val = c.to_digit(16).ok_or_else(|| F2Error::Parse(s.to_string()))? as u8;
            for k in 0..4 {
                let bit = (val >> (3 - k)) & 1 == 1;
                let pos = n * 4 + k;
                if pos < pad {
                    if bit {
                        return Err(F2Error::Parse(s.to_string()));
                    }
                } else {
                    v.set(pos - pad, bit);
                }
            }
        }
        Ok(v)
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl FromStr for BitVec {
    type Err = F2Error;

    fn from_str(s: &str) -> Result<Self, F2Error> {
        let mut v = BitVec::zero(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => return Err(F2Error::Parse(s.to_string())),
            }
        }
        Ok(v)
    }
}

impl Serialize for BitVec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitVec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// A matrix over GF(2): a sequence of equal-length rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct F2Matrix {
    cols: usize,
    rows: Vec<BitVec>,
}

impl F2Matrix {
    pub fn new(cols: usize, rows: Vec<BitVec>) -> Result<Self, F2Error> {
        for r in &rows {
            if r.len() != cols {
                return Err(F2Error::LengthMismatch(r.len(), cols));
            }
        }
        Ok(F2Matrix { cols, rows })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                let mut v = BitVec::zero(n);
                v.set(i, true);
                v
            })
            .collect();
        F2Matrix { cols: n, rows }
    }

    pub fn random<R: Rng + ?Sized>(n_rows: usize, cols: usize, rng: &mut R) -> Self {
        let rows = (0..n_rows).map(|_| BitVec::random(cols, rng)).collect();
        F2Matrix { cols, rows }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Row-wise XOR with a pad matrix of identical shape.
    pub fn xor(&self, pad: &F2Matrix) -> Result<F2Matrix, F2Error> {
        if self.cols != pad.cols || self.rows.len() != pad.rows.len() {
            return Err(F2Error::LengthMismatch(self.rows.len(), pad.rows.len()));
        }
        let rows = self
            .rows
            .iter()
            .zip(&pad.rows)
            .map(|(a, b)| a.xor(b))
            .collect();
        Ok(F2Matrix {
            cols: self.cols,
            rows,
        })
    }

    /// Reduced row echelon form. Zero rows are dropped, so the row count of
    /// the result equals the rank. Idempotent and span-preserving.
    pub fn rref(&self) -> F2Matrix {
        let mut rows = self.rows.clone();
        let mut pivot_row = 0usize;
        for col in 0..self.cols {
            let Some(src) = (pivot_row..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(pivot_row, src);
            let pivot = rows[pivot_row].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != pivot_row && row.get(col) {
                    row.xor_in_place(&pivot);
                }
            }
            pivot_row += 1;
            if pivot_row == rows.len() {
                break;
            }
        }
        rows.truncate(pivot_row);
        F2Matrix {
            cols: self.cols,
            rows,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rows.len()
    }
}

/// A linear subspace of GF(2)^λ in canonical form: the basis is the reduced
/// row echelon form of whatever generating set it was built from, so
/// equality and hashing are well-defined.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    ambient: usize,
    basis: F2Matrix,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(dim {} in GF(2)^{}", self.dim(), self.ambient)?;
        for r in self.basis.rows() {
            write!(f, ", {r}")?;
        }
        f.write_str(")")
    }
}

impl Subspace {
    /// Span of the rows of `m`.
    pub fn from_matrix(m: &F2Matrix) -> Subspace {
        Subspace {
            ambient: m.cols(),
            basis: m.rref(),
        }
    }

    pub fn from_rows(ambient: usize, rows: Vec<BitVec>) -> Result<Subspace, F2Error> {
        Ok(Subspace::from_matrix(&F2Matrix::new(ambient, rows)?))
    }

    pub fn zero(ambient: usize) -> Subspace {
        Subspace {
            ambient,
            basis: F2Matrix {
                cols: ambient,
                rows: vec![],
            },
        }
    }

    pub fn full(ambient: usize) -> Subspace {
        Subspace {
            ambient,
            basis: F2Matrix::identity(ambient),
        }
    }

    /// Uniformly random `dim`-dimensional subspace of GF(2)^`lambda`:
    /// samples random dim×λ matrices and retries until the rank is full.
    pub fn random<R: Rng + ?Sized>(
        lambda: usize,
        dim: usize,
        rng: &mut R,
    ) -> Result<Subspace, F2Error> {
        if dim > lambda {
            return Err(F2Error::DimOutOfRange {
                dim,
                ambient: lambda,
            });
        }
        loop {
            let m = F2Matrix::random(dim, lambda, rng);
            let r = m.rref();
            if r.n_rows() == dim {
                return Ok(Subspace {
                    ambient: lambda,
                    basis: r,
                });
            }
        }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.n_rows()
    }

    pub fn basis(&self) -> &F2Matrix {
        &self.basis
    }

    /// Canonical representative of `v` modulo this subspace: reduces `v` by
    /// every basis row whose pivot bit is set in `v`.
    pub fn reduce(&self, v: &BitVec) -> Result<BitVec, F2Error> {
        if v.len() != self.ambient {
            return Err(F2Error::LengthMismatch(v.len(), self.ambient));
        }
        let mut w = v.clone();
        for row in self.basis.rows() {
            let p = row.leading_one().expect("canonical basis has no zero rows");
            if w.get(p) {
                w.xor_in_place(row);
            }
        }
        Ok(w)
    }

    /// True iff `v` lies in the row span of the basis.
    pub fn member(&self, v: &BitVec) -> Result<bool, F2Error> {
        Ok(self.reduce(v)?.is_zero())
    }

    /// The dual subspace S^⊥ = { t : ⟨t, s⟩ = 0 for all s ∈ S }.
    pub fn dual(&self) -> Subspace {
        // Nullspace from the rref basis: one generator per free column.
        let pivots: Vec<usize> = self
            .basis
            .rows()
            .iter()
            .map(|r| r.leading_one().unwrap())
            .collect();
        let mut rows = Vec::with_capacity(self.ambient - pivots.len());
        for free in 0..self.ambient {
            if pivots.contains(&free) {
                continue;
            }
            let mut v = BitVec::zero(self.ambient);
            v.set(free, true);
            for (row, &p) in self.basis.rows().iter().zip(&pivots) {
                if row.get(free) {
                    v.set(p, true);
                }
            }
            rows.push(v);
        }
        Subspace::from_matrix(&F2Matrix::new(self.ambient, rows).unwrap())
    }

    /// Splits S into (S₀, w) with dim(S₀) = dim(S) − 1, w ∈ S \ S₀ and
    /// S = S₀ ∪ (S₀ + w). Which basis vector becomes w is a random choice.
    pub fn split<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Subspace, BitVec), F2Error> {
        if self.dim() == 0 {
            return Err(F2Error::ZeroDim);
        }
        let excluded = rng.gen_range(0..self.dim());
        let w = self.basis.rows()[excluded].clone();
        let rows: Vec<BitVec> = self
            .basis
            .rows()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != excluded)
            .map(|(_, r)| r.clone())
            .collect();
        let s0 = Subspace::from_rows(self.ambient, rows)?;
        Ok((s0, w))
    }

    /// All 2^dim elements of the subspace. Only for small dimensions.
    pub fn enumerate(&self) -> Vec<BitVec> {
        assert!(self.dim() <= 24, "subspace too large to enumerate");
        let mut out = Vec::with_capacity(1 << self.dim());
        for mask in 0usize..(1 << self.dim()) {
            let mut v = BitVec::zero(self.ambient);
            for (i, row) in self.basis.rows().iter().enumerate() {
                if (mask >> i) & 1 == 1 {
                    v.xor_in_place(row);
                }
            }
            out.push(v);
        }
        out
    }
}

impl Serialize for Subspace {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("Subspace", 2)?;
        st.serialize_field("ambient", &self.ambient)?;
        let rows: Vec<String> = self.basis.rows().iter().map(|r| r.to_hex()).collect();
        st.serialize_field("basis", &rows)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Subspace {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            ambient: usize,
            basis: Vec<String>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let rows = repr
            .basis
            .iter()
            .map(|h| BitVec::from_hex(h, repr.ambient))
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        Subspace::from_rows(repr.ambient, rows).map_err(D::Error::custom)
    }
}

/// A coset `space + shift`. The shift is canonicalized modulo the space, so
/// equal point sets compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coset {
    space: Subspace,
    shift: BitVec,
}

impl Coset {
    pub fn new(space: Subspace, shift: BitVec) -> Result<Coset, F2Error> {
        let shift = space.reduce(&shift)?;
        Ok(Coset { space, shift })
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn shift(&self) -> &BitVec {
        &self.shift
    }

    pub fn member(&self, v: &BitVec) -> Result<bool, F2Error> {
        self.space.member(&v.xor(&self.shift))
    }

    pub fn enumerate(&self) -> Vec<BitVec> {
        self.space
            .enumerate()
            .iter()
            .map(|s| s.xor(&self.shift))
            .collect()
    }
}
