//! Bit-packed linear algebra over GF(2).
//!
//! Vectors and matrices are stored as `u64` words, least significant bit
//! first: bit `k` of a vector lives in word `k / 64` at position `k % 64`.
//! Everything above the logical length is kept at zero so word-level
//! comparisons and popcounts are exact.

use std::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

/// Erasure or error pattern: 1 marks an erased (BEC) or flipped (BSC) position.
pub type Pattern = BitVector;

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; words_for(len)] }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self { len, words: vec![u64::MAX; words_for(len)] };
        v.clear_tail();
        v
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (k, &b) in bits.iter().enumerate() {
            if b {
                v.set(k, true);
            }
        }
        v
    }

    /// Parses a string of `0`/`1` characters, position 0 first.
    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parameter(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bits(&bits))
    }

    /// Builds a vector of length `len` from the low bits of `value`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD);
        let mut v = Self::zeros(len);
        if len > 0 {
            v.words[0] = value;
            v.clear_tail();
        }
        v
    }

    pub fn from_u128(value: u128, len: usize) -> Self {
        assert!(len <= 2 * WORD);
        let mut v = Self::zeros(len);
        if !v.words.is_empty() {
            v.words[0] = value as u64;
        }
        if v.words.len() > 1 {
            v.words[1] = (value >> 64) as u64;
        }
        v.clear_tail();
        v
    }

    /// Low 64 bits as an integer. Panics if the vector is longer than 64.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= WORD, "vector of length {} does not fit in u64", self.len);
        self.words.first().copied().unwrap_or(0)
    }

    pub fn to_u128(&self) -> u128 {
        assert!(self.len <= 2 * WORD, "vector of length {} does not fit in u128", self.len);
        let lo = self.words.first().copied().unwrap_or(0) as u128;
        let hi = self.words.get(1).copied().unwrap_or(0) as u128;
        lo | (hi << 64)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, k: usize) -> bool {
        assert!(k < self.len, "bit index {k} out of range for length {}", self.len);
        (self.words[k / WORD] >> (k % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, k: usize, value: bool) {
        assert!(k < self.len, "bit index {k} out of range for length {}", self.len);
        let mask = 1u64 << (k % WORD);
        if value {
            self.words[k / WORD] |= mask;
        } else {
            self.words[k / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, k: usize) {
        assert!(k < self.len);
        self.words[k / WORD] ^= 1u64 << (k % WORD);
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "length mismatch in xor");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn and(&self, other: &BitVector) -> BitVector {
        assert_eq!(self.len, other.len, "length mismatch in and");
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        BitVector { len: self.len, words }
    }

    pub fn not(&self) -> BitVector {
        let mut out = BitVector { len: self.len, words: self.words.iter().map(|w| !w).collect() };
        out.clear_tail();
        out
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in dot");
        let ones: u32 = self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum();
        ones & 1 == 1
    }

    /// True when the support of `self` is contained in the support of `other`
    /// (`other` covers `self`).
    pub fn is_subset_of(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in subset test");
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let tz = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * WORD + tz)
                }
            })
        })
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.len {
            f.write_str(if self.get(k) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Serialized as its bit string, position 0 first.
impl serde::Serialize for BitVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for BitVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        BitVector::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A dense `rows x cols` matrix over GF(2), row-major, one packed row per stride.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self { rows, cols, stride, data: vec![0; rows * stride] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.set(k, k, true);
        }
        m
    }

    /// Builds a matrix from rows of common length `cols`.
    pub fn from_rows(rows: &[BitVector], cols: usize) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {r} has length {}, expected {cols}",
                    row.len()
                )));
            }
            m.row_mut(r).copy_from_slice(row.words());
        }
        Ok(m)
    }

    /// Parses rows given as `0`/`1` strings.
    pub fn parse_rows(rows: &[&str]) -> Result<Self> {
        let vecs = rows.iter().map(|s| BitVector::parse(s)).collect::<Result<Vec<_>>>()?;
        let cols = vecs.first().map_or(0, BitVector::len);
        Self::from_rows(&vecs, cols)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row(&self, r: usize) -> BitVector {
        assert!(r < self.rows);
        BitVector { len: self.cols, words: self.row_words(r).to_vec() }
    }

    pub fn row_vectors(&self) -> Vec<BitVector> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    pub fn column(&self, c: usize) -> BitVector {
        let mut v = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            if self.get(r, c) {
                v.set(r, true);
            }
        }
        v
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols);
        let idx = r * self.stride + c / WORD;
        let mask = 1u64 << (c % WORD);
        if value {
            self.data[idx] |= mask;
        } else {
            self.data[idx] &= !mask;
        }
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row(r).iter_ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    pub fn select_rows(&self, idx: &[usize]) -> BitMatrix {
        let mut m = BitMatrix::zeros(idx.len(), self.cols);
        for (dst, &src) in idx.iter().enumerate() {
            let words = self.row_words(src).to_vec();
            m.row_mut(dst).copy_from_slice(&words);
        }
        m
    }

    pub fn select_columns(&self, idx: &[usize]) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.rows, idx.len());
        for r in 0..self.rows {
            for (dst, &src) in idx.iter().enumerate() {
                if self.get(r, src) {
                    m.set(r, dst, true);
                }
            }
        }
        m
    }

    /// Row-vector product `u * M` (a linear combination of rows).
    pub fn combine_rows(&self, u: &BitVector) -> Result<BitVector> {
        if u.len() != self.rows {
            return Err(Error::Dimension(format!(
                "combination vector has length {}, matrix has {} rows",
                u.len(),
                self.rows
            )));
        }
        let mut out = BitVector::zeros(self.cols);
        for r in u.iter_ones() {
            for (a, b) in out.words.iter_mut().zip(self.row_words(r)) {
                *a ^= b;
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `M * u`.
    pub fn mul_vec(&self, u: &BitVector) -> Result<BitVector> {
        if u.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector has length {}, matrix has {} columns",
                u.len(),
                self.cols
            )));
        }
        let mut out = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            let ones: u32 =
                self.row_words(r).iter().zip(u.words()).map(|(a, b)| (a & b).count_ones()).sum();
            if ones & 1 == 1 {
                out.set(r, true);
            }
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        Echelon::new(self).rank()
    }

    /// Returns some `u` with `M * u = b`, free variables set to zero.
    pub fn solve(&self, b: &BitVector) -> Result<Option<BitVector>> {
        Echelon::new(self).solve(b)
    }

    /// Basis (as rows) of `{u : M * u = 0}`; has `cols - rank` rows.
    pub fn nullspace_basis(&self) -> BitMatrix {
        Echelon::new(self).nullspace_basis()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// Reduced row echelon form of a matrix together with the row transform
/// that produced it, so that any number of right-hand sides can be solved
/// against one elimination.
#[derive(Clone, Debug)]
pub struct Echelon {
    reduced: BitMatrix,
    transform: BitMatrix,
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn new(m: &BitMatrix) -> Self {
        let mut reduced = m.clone();
        let mut transform = BitMatrix::identity(m.rows);
        let mut pivots = Vec::new();
        let mut next = 0;
        for c in 0..m.cols {
            if next == m.rows {
                break;
            }
            let Some(p) = (next..m.rows).find(|&r| reduced.get(r, c)) else { continue };
            swap_rows(&mut reduced, p, next);
            swap_rows(&mut transform, p, next);
            for r in 0..m.rows {
                if r != next && reduced.get(r, c) {
                    xor_row_into(&mut reduced, next, r);
                    xor_row_into(&mut transform, next, r);
                }
            }
            pivots.push(c);
            next += 1;
        }
        Self { reduced, transform, pivots }
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn reduced(&self) -> &BitMatrix {
        &self.reduced
    }

    /// Solves `M * u = b`; `None` when the system is inconsistent.
    pub fn solve(&self, b: &BitVector) -> Result<Option<BitVector>> {
        if b.len() != self.reduced.rows {
            return Err(Error::Dimension(format!(
                "right-hand side has length {}, system has {} equations",
                b.len(),
                self.reduced.rows
            )));
        }
        let tb = self.transform.mul_vec(b)?;
        if (self.rank()..self.reduced.rows).any(|r| tb.get(r)) {
            return Ok(None);
        }
        let mut u = BitVector::zeros(self.reduced.cols);
        for (r, &c) in self.pivots.iter().enumerate() {
            if tb.get(r) {
                u.set(c, true);
            }
        }
        Ok(Some(u))
    }

    pub fn is_solvable(&self, b: &BitVector) -> Result<bool> {
        Ok(self.solve(b)?.is_some())
    }

    pub fn nullspace_basis(&self) -> BitMatrix {
        let cols = self.reduced.cols;
        let mut is_pivot = vec![false; cols];
        for &c in &self.pivots {
            is_pivot[c] = true;
        }
        let free: Vec<usize> = (0..cols).filter(|&c| !is_pivot[c]).collect();
        let mut basis = BitMatrix::zeros(free.len(), cols);
        for (k, &f) in free.iter().enumerate() {
            basis.set(k, f, true);
            for (r, &p) in self.pivots.iter().enumerate() {
                if self.reduced.get(r, f) {
                    basis.set(k, p, true);
                }
            }
        }
        basis
    }
}

fn swap_rows(m: &mut BitMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    let s = m.stride;
    for w in 0..s {
        m.data.swap(a * s + w, b * s + w);
    }
}

fn xor_row_into(m: &mut BitMatrix, src: usize, dst: usize) {
    let s = m.stride;
    for w in 0..s {
        let v = m.data[src * s + w];
        m.data[dst * s + w] ^= v;
    }
}

/// Incremental GF(2) basis over `u128` words, keyed by lowest set bit.
///
/// Used by the hot loops that test one small system per pattern; inserting a
/// vector reports whether it was independent of everything inserted before.
#[derive(Clone, Debug, Default)]
pub struct XorBasis {
    rows: Vec<u128>,
}

impl XorBasis {
    pub fn new() -> Self {
        Self { rows: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        Self { rows: Vec::with_capacity(n) }
    }

    pub fn clear(&mut self) {
        self.rows.clear();
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the basis, restricted to the bits in `mask`.
    /// Bits outside `mask` are carried along but never used as pivots.
    #[inline]
    pub fn reduce_masked(&self, mut v: u128, mask: u128) -> u128 {
        for &b in &self.rows {
            let pivot = b & mask & (b & mask).wrapping_neg();
            if v & pivot != 0 {
                v ^= b;
            }
        }
        v
    }

    #[inline]
    pub fn reduce(&self, v: u128) -> u128 {
        self.reduce_masked(v, u128::MAX)
    }

    /// Inserts `v` (after reduction); returns true if it increased the rank.
    #[inline]
    pub fn insert(&mut self, v: u128) -> bool {
        self.insert_masked(v, u128::MAX).is_none()
    }

    /// Inserts `v` using only bits of `mask` as pivot positions. Returns the
    /// residue outside `mask` when `v` reduces to zero inside it.
    #[inline]
    pub fn insert_masked(&mut self, v: u128, mask: u128) -> Option<u128> {
        let r = self.reduce_masked(v, mask);
        if r & mask == 0 {
            return Some(r);
        }
        // Keep every stored row free of the new pivot so reduction stays one pass.
        let pivot = r & mask & (r & mask).wrapping_neg();
        for b in &mut self.rows {
            if *b & pivot != 0 {
                *b ^= r;
            }
        }
        self.rows.push(r);
        None
    }
}

/// Rank of a set of rows packed in `u128` words.
pub fn rank_u128(rows: impl IntoIterator<Item = u128>) -> usize {
    let mut basis = XorBasis::new();
    rows.into_iter().filter(|&r| basis.insert(r)).count()
}
