//! Binary linear codes, their constructions and weight spectra.

use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVector};
use crate::poly::binomial;

/// Largest dimension for which codewords are enumerated exhaustively.
pub const ENUMERATION_MAX_K: usize = 28;

/// Family descriptor, written `rm:r,m`, `rep:N`, `spc:N` or `rand:N,K,seed`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeSpec {
    ReedMuller { r: usize, m: usize },
    Repetition { n: usize },
    SingleParityCheck { n: usize },
    RandomLinear { n: usize, k: usize, seed: u64 },
}

impl CodeSpec {
    pub fn build(&self) -> Result<LinearCode> {
        match *self {
            CodeSpec::ReedMuller { r, m } => LinearCode::reed_muller(r, m),
            CodeSpec::Repetition { n } => LinearCode::repetition(n),
            CodeSpec::SingleParityCheck { n } => LinearCode::single_parity_check(n),
            CodeSpec::RandomLinear { n, k, seed } => LinearCode::random_linear(n, k, seed),
        }
    }
}

impl fmt::Display for CodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeSpec::ReedMuller { r, m } => write!(f, "rm:{r},{m}"),
            CodeSpec::Repetition { n } => write!(f, "rep:{n}"),
            CodeSpec::SingleParityCheck { n } => write!(f, "spc:{n}"),
            CodeSpec::RandomLinear { n, k, seed } => write!(f, "rand:{n},{k},{seed}"),
        }
    }
}

impl FromStr for CodeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Parameter(format!("code descriptor {s:?} has no family prefix")))?;
        let nums = args
            .split(',')
            .map(|a| {
                a.trim().parse::<u64>().map_err(|_| {
                    Error::Parameter(format!("code descriptor {s:?}: {a:?} is not a nonnegative integer"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let arity = |want: usize| {
            if nums.len() == want {
                Ok(())
            } else {
                Err(Error::Parameter(format!(
                    "code descriptor {s:?}: family {family:?} takes {want} argument(s), got {}",
                    nums.len()
                )))
            }
        };
        match family {
            "rm" => {
                arity(2)?;
                Ok(CodeSpec::ReedMuller { r: nums[0] as usize, m: nums[1] as usize })
            }
            "rep" => {
                arity(1)?;
                Ok(CodeSpec::Repetition { n: nums[0] as usize })
            }
            "spc" => {
                arity(1)?;
                Ok(CodeSpec::SingleParityCheck { n: nums[0] as usize })
            }
            "rand" => {
                arity(3)?;
                Ok(CodeSpec::RandomLinear { n: nums[0] as usize, k: nums[1] as usize, seed: nums[2] })
            }
            other => Err(Error::Parameter(format!("unknown code family {other:?} in {s:?}"))),
        }
    }
}

/// A binary linear code given by a full-rank `K x N` generator matrix.
#[derive(Clone, Debug)]
pub struct LinearCode {
    name: String,
    generator: BitMatrix,
    parity_check: BitMatrix,
    n: usize,
    k: usize,
    rows128: Option<Vec<u128>>,
    cols128: Option<Vec<u128>>,
}

impl LinearCode {
    /// Wraps a generator matrix; fails unless it has full row rank.
    pub fn new(name: impl Into<String>, generator: BitMatrix) -> Result<Self> {
        let rank = generator.rank();
        if rank != generator.rows() {
            return Err(Error::Parameter(format!(
                "generator has {} rows but rank {rank}",
                generator.rows()
            )));
        }
        if generator.cols() == 0 {
            return Err(Error::Parameter("code length must be at least 1".into()));
        }
        Ok(Self::from_generator_unchecked(name, generator))
    }

    /// Wraps a generator without the rank check. The dimension is taken to be
    /// the row count even if the rows are dependent; only meant for building
    /// deliberately broken fixtures that the verification suites must reject.
    pub fn from_generator_unchecked(name: impl Into<String>, generator: BitMatrix) -> Self {
        let n = generator.cols();
        let k = generator.rows();
        let parity_check = generator.nullspace_basis();
        let rows128 = (n <= 128)
            .then(|| (0..k).map(|r| generator.row(r).to_u128()).collect());
        let cols128 = (k <= 126).then(|| {
            let t = generator.transpose();
            (0..n).map(|c| t.row(c).to_u128()).collect()
        });
        Self { name: name.into(), generator, parity_check, n, k, rows128, cols128 }
    }

    /// Reed-Muller code RM(r, m): evaluations of all monomials of degree at
    /// most `r` in `m` Boolean variables. Rows follow graded-lex monomial order;
    /// column `p` is the point whose variable `t` equals bit `t` of `p`.
    pub fn reed_muller(r: usize, m: usize) -> Result<Self> {
        if r > m {
            return Err(Error::Parameter(format!("RM(r={r}, m={m}) requires r <= m")));
        }
        if m > 20 {
            return Err(Error::Parameter(format!("RM with m={m} is beyond desk scale (m <= 20)")));
        }
        let n = 1usize << m;
        let monomials = graded_lex_monomials(r, m);
        let mut g = BitMatrix::zeros(monomials.len(), n);
        for (row, &vars) in monomials.iter().enumerate() {
            for p in 0..n {
                if p & vars == vars {
                    g.set(row, p, true);
                }
            }
        }
        LinearCode::new(format!("rm:{r},{m}"), g)
    }

    pub fn repetition(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("repetition code needs N >= 1".into()));
        }
        LinearCode::new(format!("rep:{n}"), BitMatrix::from_rows(&[BitVector::ones(n)], n)?)
    }

    pub fn single_parity_check(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter("single parity-check code needs N >= 2".into()));
        }
        let mut g = BitMatrix::zeros(n - 1, n);
        for r in 0..n - 1 {
            g.set(r, r, true);
            g.set(r, n - 1, true);
        }
        LinearCode::new(format!("spc:{n}"), g)
    }

    /// Uniformly random `K x N` generator from a seeded ChaCha8 stream,
    /// redrawn until it has rank `K`.
    pub fn random_linear(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Parameter(format!("random code needs 1 <= K <= N, got N={n}, K={k}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let rows: Vec<BitVector> = (0..k)
                .map(|_| {
                    let mut row = BitVector::zeros(n);
                    let mut word = 0u64;
                    for c in 0..n {
                        if c % 64 == 0 {
                            word = rng.next_u64();
                        }
                        row.set(c, (word >> (c % 64)) & 1 == 1);
                    }
                    row
                })
                .collect();
            let g = BitMatrix::from_rows(&rows, n)?;
            if g.rank() == k {
                return LinearCode::new(format!("rand:{n},{k},{seed}"), g);
            }
        }
    }

    /// The dual code, generated by a basis of the generator's nullspace. For
    /// `K = N` this is the zero-dimensional code with an empty generator.
    pub fn dual(&self) -> LinearCode {
        LinearCode::from_generator_unchecked(format!("dual({})", self.name), self.parity_check.clone())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn generator(&self) -> &BitMatrix {
        &self.generator
    }

    /// Basis of the dual code, `(N-K) x N`.
    pub fn parity_check(&self) -> &BitMatrix {
        &self.parity_check
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Generator rows packed as `u128` (available when N <= 128).
    pub fn rows_u128(&self) -> Option<&[u128]> {
        self.rows128.as_deref()
    }

    /// Generator columns packed as `u128` over message coordinates (K <= 126).
    pub fn cols_u128(&self) -> Option<&[u128]> {
        self.cols128.as_deref()
    }

    pub(crate) fn require_dimension(&self) -> Result<()> {
        if self.k == 0 {
            Err(Error::Parameter(format!("{} has dimension 0", self.name)))
        } else {
            Ok(())
        }
    }

    pub(crate) fn require_packed_rows(&self) -> Result<&[u128]> {
        self.rows_u128().ok_or(Error::Budget { what: "packed code length", needed: self.n, limit: 128 })
    }

    pub(crate) fn require_packed_cols(&self) -> Result<&[u128]> {
        self.cols_u128().ok_or(Error::Budget { what: "packed code dimension", needed: self.k, limit: 126 })
    }

    /// Encodes a message `u` (length K) into `u G`.
    pub fn encode(&self, message: &BitVector) -> Result<BitVector> {
        self.generator.combine_rows(message)
    }

    /// All codewords, packed, in Gray-code order. Requires N <= 128 and K <= `max_k`.
    pub fn codewords_u128(&self, max_k: usize) -> Result<Vec<u128>> {
        let rows = self.require_packed_rows()?;
        if self.k > max_k {
            return Err(Error::Budget { what: "codeword enumeration dimension", needed: self.k, limit: max_k });
        }
        let mut out = Vec::with_capacity(1 << self.k);
        let mut cw = 0u128;
        out.push(cw);
        for t in 1u64..(1u64 << self.k) {
            cw ^= rows[t.trailing_zeros() as usize];
            out.push(cw);
        }
        Ok(out)
    }

    /// Exact weight distribution by a Gray-code walk over the message space.
    pub fn weight_distribution(&self) -> Result<WeightSpectrum> {
        if self.k > ENUMERATION_MAX_K {
            return Err(Error::Budget {
                what: "weight enumeration dimension",
                needed: self.k,
                limit: ENUMERATION_MAX_K,
            });
        }
        let stride = self.n.div_ceil(64);
        let rows: Vec<Vec<u64>> = (0..self.k).map(|r| self.generator.row_words(r).to_vec()).collect();
        // High message bits pick the stripe, low bits are walked in Gray order.
        let high = self.k.min(8);
        let low = self.k - high;
        let stripes: Vec<Vec<u64>> = (0u64..(1u64 << high))
            .into_par_iter()
            .map(|s| {
                let mut counts = vec![0u64; self.n + 1];
                let mut cw = vec![0u64; stride];
                for b in 0..high {
                    if (s >> b) & 1 == 1 {
                        xor_words(&mut cw, &rows[low + b]);
                    }
                }
                counts[weight_words(&cw)] += 1;
                for t in 1u64..(1u64 << low) {
                    xor_words(&mut cw, &rows[t.trailing_zeros() as usize]);
                    counts[weight_words(&cw)] += 1;
                }
                counts
            })
            .collect();
        let mut counts = vec![0u64; self.n + 1];
        for s in &stripes {
            for (a, b) in counts.iter_mut().zip(s) {
                *a += b;
            }
        }
        Ok(WeightSpectrum { counts })
    }

    pub fn min_distance(&self) -> Result<usize> {
        self.require_dimension()?;
        let spectrum = self.weight_distribution()?;
        spectrum
            .min_distance()
            .ok_or_else(|| Error::Consistency(format!("{} has no nonzero codeword", self.name)))
    }
}

fn xor_words(acc: &mut [u64], row: &[u64]) {
    for (a, b) in acc.iter_mut().zip(row) {
        *a ^= b;
    }
}

fn weight_words(w: &[u64]) -> usize {
    w.iter().map(|x| x.count_ones() as usize).sum()
}

/// Variable sets (as bit masks over `m` variables) of all monomials of degree
/// at most `r`, degree first, then lexicographic on the sorted index list.
fn graded_lex_monomials(r: usize, m: usize) -> Vec<usize> {
    fn extend(start: usize, left: usize, m: usize, mask: usize, out: &mut Vec<usize>) {
        if left == 0 {
            out.push(mask);
            return;
        }
        for v in start..m {
            extend(v + 1, left - 1, m, mask | (1 << v), out);
        }
    }
    let mut out = Vec::new();
    for d in 0..=r {
        extend(0, d, m, 0, &mut out);
    }
    out
}

/// Exact weight distribution `A(0..=N)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightSpectrum {
    counts: Vec<u64>,
}

impl WeightSpectrum {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Parameter("a spectrum needs at least A(0)".into()));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Block length N.
    pub fn len(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total(&self) -> u128 {
        self.counts.iter().map(|&c| c as u128).sum()
    }

    /// `log2` of the codeword count, when it is a power of two.
    pub fn dimension(&self) -> Option<usize> {
        let t = self.total();
        t.is_power_of_two().then(|| t.trailing_zeros() as usize)
    }

    pub fn a(&self, w: usize) -> u64 {
        self.counts.get(w).copied().unwrap_or(0)
    }

    pub fn min_distance(&self) -> Option<usize> {
        (1..self.counts.len()).find(|&w| self.counts[w] > 0)
    }

    /// `A(W, z) = sum_{w=1..W} A(w) z^w`, Horner from the highest weight down.
    pub fn partial_enumerator(&self, big_w: usize, z: f64) -> Result<f64> {
        if big_w == 0 || big_w > self.len() {
            return Err(Error::Parameter(format!("W={big_w} outside 1..={}", self.len())));
        }
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::Domain(format!("z={z} outside [0,1]")));
        }
        let mut acc = 0.0;
        for w in (1..=big_w).rev() {
            acc = acc * z + self.counts[w] as f64;
        }
        Ok(acc * z)
    }

    /// Spectrum of the dual code by the MacWilliams identity,
    /// `B(j) = 2^-K sum_w A(w) K_j(w)` with Krawtchouk polynomials
    /// `K_j(w) = sum_s (-1)^s C(w,s) C(N-w, j-s)`, in exact integers.
    pub fn macwilliams_transform(&self, k: usize) -> Result<WeightSpectrum> {
        let n = self.len();
        if n > 62 {
            return Err(Error::Budget { what: "MacWilliams block length", needed: n, limit: 62 });
        }
        if self.total() != 1u128 << k {
            return Err(Error::Parameter(format!(
                "spectrum has {} codewords, not 2^{k}",
                self.total()
            )));
        }
        let overflow = || Error::Consistency("integer overflow in MacWilliams sum".into());
        let mut out = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let mut acc: i128 = 0;
            for w in 0..=n {
                let a = self.counts[w] as i128;
                if a == 0 {
                    continue;
                }
                let kraw = krawtchouk(n, j, w);
                acc = a.checked_mul(kraw).and_then(|t| acc.checked_add(t)).ok_or_else(overflow)?;
            }
            let denom = 1i128 << k;
            if acc % denom != 0 || acc < 0 {
                return Err(Error::Consistency(format!(
                    "MacWilliams coefficient B({j}) = {acc}/2^{k} is not a nonnegative integer"
                )));
            }
            out.push((acc / denom) as u64);
        }
        Ok(WeightSpectrum { counts: out })
    }
}

/// Krawtchouk polynomial `K_j(w)` for length `n`.
pub fn krawtchouk(n: usize, j: usize, w: usize) -> i128 {
    (0..=j.min(w))
        .map(|s| {
            let t = binomial(w, s) as i128 * binomial(n - w, j - s) as i128;
            if s % 2 == 0 {
                t
            } else {
                -t
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codeword_set(code: &LinearCode) -> std::collections::BTreeSet<u128> {
        code.codewords_u128(20).unwrap().into_iter().collect()
    }

    #[test]
    fn descriptor_round_trip() {
        for s in ["rm:1,3", "rep:3", "spc:5", "rand:10,5,2"] {
            let spec: CodeSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("foo:1".parse::<CodeSpec>().is_err());
        assert!("rm:1".parse::<CodeSpec>().is_err());
        assert!("rep".parse::<CodeSpec>().is_err());
        assert!("rep:-3".parse::<CodeSpec>().is_err());
    }

    #[test]
    fn construction_parameters() {
        let rm13 = LinearCode::reed_muller(1, 3).unwrap();
        assert_eq!((rm13.len(), rm13.dimension()), (8, 4));

        let rep3 = LinearCode::repetition(3).unwrap();
        assert_eq!(rep3.generator().row(0).to_string(), "111");
        assert_eq!((rep3.len(), rep3.dimension()), (3, 1));

        let rm04 = LinearCode::reed_muller(0, 4).unwrap();
        assert_eq!(rm04.dimension(), 1);
        assert_eq!(rm04.generator().row(0), BitVector::ones(16));

        assert!(LinearCode::reed_muller(4, 3).is_err());
        assert!(LinearCode::random_linear(4, 5, 0).is_err());
    }

    #[test]
    fn rm_generator_is_canonical() {
        // Graded-lex rows: 1, x0, x1, x2 over points 0..7 in counter order.
        let g = LinearCode::reed_muller(1, 3).unwrap();
        let rows: Vec<String> = g.generator().row_vectors().iter().map(|r| r.to_string()).collect();
        assert_eq!(rows, vec!["11111111", "01010101", "00110011", "00001111"]);
        assert_eq!(graded_lex_monomials(2, 3), vec![0, 1, 2, 4, 3, 5, 6]);
    }

    #[test]
    fn random_linear_is_deterministic() {
        let a = LinearCode::random_linear(10, 5, 7).unwrap();
        let b = LinearCode::random_linear(10, 5, 7).unwrap();
        assert_eq!(a.generator(), b.generator());
        assert_eq!(a.generator().rank(), 5);
    }

    #[test]
    fn duals() {
        let rep3 = LinearCode::repetition(3).unwrap();
        let spc3 = LinearCode::single_parity_check(3).unwrap();
        assert_eq!(codeword_set(&rep3.dual()), codeword_set(&spc3));

        let rm13 = LinearCode::reed_muller(1, 3).unwrap();
        assert_eq!(codeword_set(&rm13.dual()), codeword_set(&rm13));

        for code in [rep3, spc3, LinearCode::random_linear(10, 5, 1).unwrap()] {
            assert_eq!(codeword_set(&code.dual().dual()), codeword_set(&code));
        }

        let full = LinearCode::new("full", BitMatrix::identity(3)).unwrap();
        let zero = full.dual();
        assert_eq!(zero.dimension(), 0);
        assert!(zero.min_distance().is_err());
    }

    #[test]
    fn spectra_examples() {
        let rep3 = LinearCode::repetition(3).unwrap();
        assert_eq!(rep3.weight_distribution().unwrap().counts(), &[1, 0, 0, 1]);

        let rm13 = LinearCode::reed_muller(1, 3).unwrap();
        assert_eq!(rm13.weight_distribution().unwrap().counts(), &[1, 0, 0, 0, 14, 0, 0, 0, 1]);

        let spc3 = LinearCode::single_parity_check(3).unwrap();
        assert_eq!(spc3.weight_distribution().unwrap().counts(), &[1, 0, 3, 0]);
    }

    #[test]
    fn min_distances() {
        assert_eq!(LinearCode::reed_muller(1, 3).unwrap().min_distance().unwrap(), 4);
        assert_eq!(LinearCode::repetition(7).unwrap().min_distance().unwrap(), 7);
        assert_eq!(LinearCode::reed_muller(2, 5).unwrap().min_distance().unwrap(), 8);
    }

    #[test]
    fn partial_enumerator_examples() {
        let rm13 = LinearCode::reed_muller(1, 3).unwrap().weight_distribution().unwrap();
        assert!((rm13.partial_enumerator(4, 0.5).unwrap() - 0.875).abs() < 1e-15);
        assert_eq!(rm13.partial_enumerator(8, 0.0).unwrap(), 0.0);
        let rep3 = LinearCode::repetition(3).unwrap().weight_distribution().unwrap();
        for z in [0.1, 0.4, 0.9] {
            assert!((rep3.partial_enumerator(3, z).unwrap() - z * z * z).abs() < 1e-15);
        }
        assert!(rep3.partial_enumerator(0, 0.5).is_err());
        assert!(rep3.partial_enumerator(4, 0.5).is_err());
        assert!(rep3.partial_enumerator(2, 1.5).is_err());
    }

    #[test]
    fn macwilliams_examples() {
        let rep3 = LinearCode::repetition(3).unwrap();
        let a = rep3.weight_distribution().unwrap();
        let b = rep3.dual().weight_distribution().unwrap();
        assert_eq!(a.macwilliams_transform(1).unwrap(), b);
        assert_eq!(b.macwilliams_transform(2).unwrap(), a);

        let rm13 = LinearCode::reed_muller(1, 3).unwrap().weight_distribution().unwrap();
        assert_eq!(rm13.macwilliams_transform(4).unwrap(), rm13);

        let bogus = WeightSpectrum::from_counts(vec![1, 3, 0, 0]).unwrap();
        assert!(matches!(bogus.macwilliams_transform(2), Err(Error::Consistency(_))));
    }
}
