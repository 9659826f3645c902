//! EXIT function, the pair partition `B1..B5`, and the boundary and
//! blowing-up diagnostics, all over the BEC.
//!
//! For a coordinate pair `(i, j)` a conditioned pattern `z` has `z_i = z_j = 1`.
//! With `S` the non-erased positions and `V_S` the span of the generator
//! columns `g_k, k in S`, the covered subcode projects onto `(i, j)` as the
//! annihilator of `{(p, q) : p g_i + q g_j in V_S}`; that fixes the class.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::LinearCode;
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVector, Echelon, Pattern, XorBasis};
use crate::mc::{count_hits, packed_u128, tally, McConfig};
use crate::pattern_sets::EXHAUSTIVE_MAX_N;
use crate::poly::{binomial, pow_u, CountPoly};
use crate::special::gamma_fn;

/// Largest dimension for coset enumeration of conditional laws.
pub const LAW_ENUM_MAX_K: usize = 16;
/// Largest length for the exhaustive boundary-containment sweep.
pub const CONTAINMENT_MAX_N: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairStatsMode {
    Exact,
    Mc(McConfig),
}

impl PairStatsMode {
    pub fn label(&self) -> &'static str {
        match self {
            PairStatsMode::Exact => "exact",
            PairStatsMode::Mc(_) => "mc",
        }
    }
}

/// Law of `(X_i, X_j)` over `00, 01, 10, 11` given a conditioned pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionalLaw {
    P1,
    P2,
    P3,
    P4,
    P5,
}

impl ConditionalLaw {
    pub fn from_class(k: usize) -> Result<Self> {
        Ok(match k {
            1 => ConditionalLaw::P1,
            2 => ConditionalLaw::P2,
            3 => ConditionalLaw::P3,
            4 => ConditionalLaw::P4,
            5 => ConditionalLaw::P5,
            _ => return Err(Error::Parameter(format!("partition class {k} outside 1..=5"))),
        })
    }

    pub fn class(self) -> usize {
        self as usize + 1
    }

    pub fn label(self) -> &'static str {
        ["P1", "P2", "P3", "P4", "P5"][self as usize]
    }

    pub fn probabilities(self) -> [f64; 4] {
        match self {
            ConditionalLaw::P1 => [1.0, 0.0, 0.0, 0.0],
            ConditionalLaw::P2 => [0.5, 0.5, 0.0, 0.0],
            ConditionalLaw::P3 => [0.5, 0.0, 0.5, 0.0],
            ConditionalLaw::P4 => [0.5, 0.0, 0.0, 0.5],
            ConditionalLaw::P5 => [0.25, 0.25, 0.25, 0.25],
        }
    }

    pub fn mutual_information(self) -> f64 {
        mi_bits(&self.probabilities())
    }
}

fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// `I(X_i; X_j)` in bits for a law over `00, 01, 10, 11`.
pub fn mi_bits(p: &[f64; 4]) -> f64 {
    let xi = [p[0] + p[1], p[2] + p[3]];
    let xj = [p[0] + p[2], p[1] + p[3]];
    entropy_bits(&xi) + entropy_bits(&xj) - entropy_bits(p)
}

fn check_pair(code: &LinearCode, i: usize, j: usize) -> Result<()> {
    let n = code.len();
    if i >= n || j >= n {
        return Err(Error::Parameter(format!("pair ({i},{j}) outside 0..{n}")));
    }
    if i == j {
        return Err(Error::Parameter(format!("pair needs two distinct coordinates, got ({i},{j})")));
    }
    Ok(())
}

fn check_exhaustive(code: &LinearCode) -> Result<()> {
    if code.len() > EXHAUSTIVE_MAX_N {
        return Err(Error::Budget { what: "exhaustive sweep length", needed: code.len(), limit: EXHAUSTIVE_MAX_N });
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::Domain(format!("epsilon={eps} outside [0,1]")))
    }
}

/// Maps the three membership tests to a class; rejects combinations that
/// linearity rules out.
fn class_from_annihilator(gi_in: bool, gj_in: bool, sum_in: bool) -> Result<u8> {
    match (gi_in, gj_in, sum_in) {
        (true, true, true) => Ok(1),
        (true, false, false) => Ok(2),
        (false, true, false) => Ok(3),
        (false, false, true) => Ok(4),
        (false, false, false) => Ok(5),
        combo => Err(Error::Consistency(format!(
            "membership of (g_i, g_j, g_i+g_j) in the observed span is {combo:?}, impossible for a subspace"
        ))),
    }
}

/// Fast classifier for one pair over packed generator columns.
struct PairSystem<'a> {
    cols: &'a [u128],
    n: usize,
    i: usize,
    j: usize,
    free: Vec<usize>,
}

impl<'a> PairSystem<'a> {
    fn new(code: &'a LinearCode, i: usize, j: usize) -> Result<Self> {
        check_pair(code, i, j)?;
        let cols = code.require_packed_cols()?;
        if code.len() > 128 {
            return Err(Error::Budget { what: "packed code length", needed: code.len(), limit: 128 });
        }
        let free = (0..code.len()).filter(|&k| k != i && k != j).collect();
        Ok(Self { cols, n: code.len(), i, j, free })
    }

    /// Full erasure mask for index `idx` over the free coordinates.
    fn mask(&self, idx: u64) -> u128 {
        let mut m = (1u128 << self.i) | (1u128 << self.j);
        let mut rest = idx;
        while rest != 0 {
            let t = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            m |= 1u128 << self.free[t];
        }
        m
    }

    fn class_of_mask(&self, erased: u128, basis: &mut XorBasis) -> Result<u8> {
        basis.clear();
        for k in 0..self.n {
            if erased >> k & 1 == 0 {
                basis.insert(self.cols[k]);
            }
        }
        let (gi, gj) = (self.cols[self.i], self.cols[self.j]);
        class_from_annihilator(basis.reduce(gi) == 0, basis.reduce(gj) == 0, basis.reduce(gi ^ gj) == 0)
    }

    /// Class of every conditioned pattern, indexed over the free coordinates.
    fn table(&self) -> Result<Vec<u8>> {
        let size = 1usize << self.free.len();
        let chunk = 1usize << 12.min(self.free.len());
        let parts: Vec<Result<Vec<u8>>> = (0..size / chunk)
            .into_par_iter()
            .map(|c| {
                let mut basis = XorBasis::new();
                (c * chunk..(c + 1) * chunk)
                    .map(|idx| self.class_of_mask(self.mask(idx as u64), &mut basis))
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(size);
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }
}

/// Class of `z` (1..=5) by GF(2) solvability: is there a message `u` with
/// `(uG)_k = 0` off the erasures and `(uG)_i, (uG)_j = a, b`?
pub fn classify_pattern(code: &LinearCode, i: usize, j: usize, z: &Pattern) -> Result<usize> {
    check_pair(code, i, j)?;
    if z.len() != code.len() {
        return Err(Error::Dimension(format!("pattern has length {}, code has length {}", z.len(), code.len())));
    }
    if !z.get(i) || !z.get(j) {
        return Err(Error::Parameter(format!("conditioned pattern {z} must have positions {i} and {j} erased")));
    }
    let gt = code.generator().transpose();
    let mut idx: Vec<usize> = (0..code.len()).filter(|&k| !z.get(k)).collect();
    let s = idx.len();
    idx.push(i);
    idx.push(j);
    let system = Echelon::new(&gt.select_rows(&idx));
    let rhs = |a: bool, b: bool| {
        let mut v = BitVector::zeros(s + 2);
        v.set(s, a);
        v.set(s + 1, b);
        v
    };
    let c01 = system.is_solvable(&rhs(false, true))?;
    let c10 = system.is_solvable(&rhs(true, false))?;
    let class = match (c01, c10) {
        (true, true) => 5,
        _ => {
            let c11 = system.is_solvable(&rhs(true, true))?;
            match (c01, c10, c11) {
                (false, false, false) => 1,
                (true, false, false) => 2,
                (false, true, false) => 3,
                (false, false, true) => 4,
                combo => {
                    return Err(Error::Consistency(format!(
                        "non-empty (C01, C10, C11) = {combo:?} at {z} is impossible for a linear code"
                    )))
                }
            }
        }
    };
    Ok(class)
}

/// Law of `(X_i, X_j)` given `z`, by enumerating the coset `x + C(z)` of a
/// fixed transmitted codeword `x` (`K <= 16`).
pub fn law_by_enumeration(code: &LinearCode, i: usize, j: usize, z: &Pattern) -> Result<[f64; 4]> {
    check_pair(code, i, j)?;
    let words = law_codewords(code)?;
    Ok(law_from_words(&words, code.len(), i, j, z.to_u128()))
}

fn law_codewords(code: &LinearCode) -> Result<Vec<u128>> {
    if code.dimension() > LAW_ENUM_MAX_K {
        return Err(Error::Budget { what: "conditional-law enumeration dimension", needed: code.dimension(), limit: LAW_ENUM_MAX_K });
    }
    code.codewords_u128(LAW_ENUM_MAX_K)
}

fn law_from_words(words: &[u128], n: usize, i: usize, j: usize, z: u128) -> [f64; 4] {
    let full = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    // Transmitted word: the last codeword of the walk, nonzero when K > 0.
    let x = words.last().copied().unwrap_or(0);
    let seen = !z & full;
    let mut counts = [0u64; 4];
    for &c in words {
        if (c ^ x) & seen == 0 {
            let d = c ^ x;
            counts[((d >> i & 1) * 2 + (d >> j & 1)) as usize] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    counts.map(|c| c as f64 / total as f64)
}

/// `P(z)` from the solvability class, confirmed by coset enumeration when
/// `K <= 16`.
pub fn conditional_law(code: &LinearCode, i: usize, j: usize, z: &Pattern) -> Result<ConditionalLaw> {
    let law = ConditionalLaw::from_class(classify_pattern(code, i, j, z)?)?;
    if code.dimension() <= LAW_ENUM_MAX_K && code.len() <= 128 {
        let direct = law_by_enumeration(code, i, j, z)?;
        if direct != law.probabilities() {
            return Err(Error::Consistency(format!(
                "coset enumeration at {z} gives {direct:?}, class table says {:?}",
                law.probabilities()
            )));
        }
    }
    Ok(law)
}

/// Exact `Q_1..Q_5` for a pair as count polynomials of degree `N - 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairPolys {
    pub i: usize,
    pub j: usize,
    pub q: [CountPoly; 5],
}

impl PairPolys {
    pub fn eval(&self, eps: f64) -> [f64; 5] {
        std::array::from_fn(|k| self.q[k].eval(eps))
    }
}

pub fn pair_class_polys(code: &LinearCode, i: usize, j: usize) -> Result<PairPolys> {
    check_exhaustive(code)?;
    let sys = PairSystem::new(code, i, j)?;
    let table = sys.table()?;
    let m = code.len() - 2;
    let mut q: [CountPoly; 5] = std::array::from_fn(|_| CountPoly::zero(m));
    for (idx, &c) in table.iter().enumerate() {
        q[c as usize - 1].add_count(idx.count_ones() as usize, 1);
    }
    Ok(PairPolys { i, j, q })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionStats {
    pub i: usize,
    pub j: usize,
    pub epsilon: f64,
    pub q: [f64; 5],
    pub eta: f64,
    pub alpha: f64,
    pub exact: bool,
    pub samples: Option<u64>,
}

impl PartitionStats {
    fn from_q(i: usize, j: usize, epsilon: f64, q: [f64; 5], exact: bool, samples: Option<u64>) -> Self {
        let eta = q[1] + q[2] + q[3];
        let alpha = if eta > 0.0 { q[3] / eta } else { 0.0 };
        Self { i, j, epsilon, q, eta, alpha, exact, samples }
    }

    /// `I(X_i; X_j | Y_~ij)`, which equals `Q4`.
    pub fn mi(&self) -> f64 {
        self.q[3]
    }
}

/// `Q_k = Pr(Z^eps in B_k)` with `Z_i = Z_j = 1` and the rest Bernoulli(`eps`).
pub fn partition_stats(code: &LinearCode, i: usize, j: usize, eps: f64, mode: &PairStatsMode) -> Result<PartitionStats> {
    check_eps(eps)?;
    match mode {
        PairStatsMode::Exact => {
            let polys = pair_class_polys(code, i, j)?;
            Ok(PartitionStats::from_q(i, j, eps, polys.eval(eps), true, None))
        }
        PairStatsMode::Mc(cfg) => {
            let sys = PairSystem::new(code, i, j)?;
            let bins = tally(cfg, code.len(), eps, &[i, j], 5, XorBasis::new, |basis, words| {
                let erased = packed_u128(words);
                Ok(sys.class_of_mask(erased, basis)? as usize - 1)
            })?;
            let q = std::array::from_fn(|k| bins[k] as f64 / cfg.samples as f64);
            Ok(PartitionStats::from_q(i, j, eps, q, false, Some(cfg.samples)))
        }
    }
}

/// `H(X_i | Y_~i)` as a count polynomial of degree `N - 1`: the weight
/// profile of erasure patterns on the other coordinates that leave `X_i`
/// undetermined (`g_i` outside the span of the observed columns).
pub fn exit_bit_poly(code: &LinearCode, i: usize) -> Result<CountPoly> {
    check_exhaustive(code)?;
    let n = code.len();
    if i >= n {
        return Err(Error::Parameter(format!("coordinate {i} outside 0..{n}")));
    }
    let cols = code.require_packed_cols()?;
    let others: Vec<usize> = (0..n).filter(|&k| k != i).collect();
    let m = others.len();
    let size = 1usize << m;
    let chunk = 1usize << 12.min(m);
    let counts = (0..size / chunk)
        .into_par_iter()
        .map(|c| {
            let mut basis = XorBasis::new();
            let mut counts = vec![0i128; m + 1];
            for idx in c * chunk..(c + 1) * chunk {
                basis.clear();
                for (t, &k) in others.iter().enumerate() {
                    if idx >> t & 1 == 0 {
                        basis.insert(cols[k]);
                    }
                }
                if basis.reduce(cols[i]) != 0 {
                    counts[idx.count_ones() as usize] += 1;
                }
            }
            counts
        })
        .reduce(|| vec![0i128; m + 1], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    Ok(CountPoly::from_counts(&counts))
}

/// `H(X_i | Y_~i)` at `eps`.
pub fn exit_bit(code: &LinearCode, i: usize, eps: f64, mode: &PairStatsMode) -> Result<f64> {
    check_eps(eps)?;
    match mode {
        PairStatsMode::Exact => Ok(exit_bit_poly(code, i)?.eval(eps)),
        PairStatsMode::Mc(cfg) => {
            let n = code.len();
            if i >= n {
                return Err(Error::Parameter(format!("coordinate {i} outside 0..{n}")));
            }
            let cols = code.require_packed_cols()?;
            let hits = count_hits(cfg, n, eps, &[i], XorBasis::new, |basis, words| {
                let erased = packed_u128(words);
                basis.clear();
                for (k, &c) in cols.iter().enumerate() {
                    if erased >> k & 1 == 0 {
                        basis.insert(c);
                    }
                }
                basis.reduce(cols[i]) != 0
            })?;
            Ok(hits as f64 / cfg.samples as f64)
        }
    }
}

/// Exact per-bit EXIT polynomials of a code.
#[derive(Clone, Debug)]
pub struct ExitProfile {
    pub n: usize,
    pub k: usize,
    pub per_bit: Vec<CountPoly>,
}

impl ExitProfile {
    /// `sum_i H(X_i | Y_~i)`, that is `N g`.
    pub fn sum(&self) -> CountPoly {
        let mut s = CountPoly::zero(self.n - 1);
        for p in &self.per_bit {
            s += p;
        }
        s
    }

    pub fn g(&self, eps: f64) -> f64 {
        self.sum().eval(eps) / self.n as f64
    }

    pub fn g_prime(&self, eps: f64) -> f64 {
        self.sum().derivative().eval(eps) / self.n as f64
    }

    /// `integral_0^1 g`.
    pub fn area(&self) -> f64 {
        self.sum().integral() / self.n as f64
    }

    /// All per-bit polynomials identical (the transitivity witness).
    pub fn per_bit_equal(&self) -> bool {
        self.per_bit.windows(2).all(|w| w[0] == w[1])
    }
}

pub fn exit_function_poly(code: &LinearCode) -> Result<ExitProfile> {
    let per_bit = (0..code.len()).map(|i| exit_bit_poly(code, i)).collect::<Result<Vec<_>>>()?;
    Ok(ExitProfile { n: code.len(), k: code.dimension(), per_bit })
}

/// `g(eps) = (1/N) sum_i H(X_i | Y_~i)`.
pub fn exit_function(code: &LinearCode, eps: f64, mode: &PairStatsMode) -> Result<f64> {
    check_eps(eps)?;
    match mode {
        PairStatsMode::Exact => Ok(exit_function_poly(code)?.g(eps)),
        PairStatsMode::Mc(_) => {
            let total: f64 = (0..code.len()).map(|i| exit_bit(code, i, eps, mode)).sum::<Result<f64>>()?;
            Ok(total / code.len() as f64)
        }
    }
}

/// `I(X_i; X_j | Y_~ij) = Q4`.
pub fn pairwise_mi(code: &LinearCode, i: usize, j: usize, eps: f64, mode: &PairStatsMode) -> Result<f64> {
    Ok(partition_stats(code, i, j, eps, mode)?.mi())
}

/// `I(X_i; X_j | Y_~ij)` from coset-enumerated laws weighted by pattern
/// measure, independent of the class table.
pub fn pairwise_mi_by_laws(code: &LinearCode, i: usize, j: usize, eps: f64) -> Result<f64> {
    Ok(mi_by_laws_profile(code, i, j)?.iter().enumerate().map(|(w, &s)| s * weight_measure(code.len() - 2, w, eps)).sum())
}

/// Sum of per-pattern MI by weight of the free part.
fn mi_by_laws_profile(code: &LinearCode, i: usize, j: usize) -> Result<Vec<f64>> {
    check_exhaustive(code)?;
    let sys = PairSystem::new(code, i, j)?;
    let words = law_codewords(code)?;
    let m = code.len() - 2;
    let mut by_weight = vec![0.0; m + 1];
    for idx in 0..1u64 << m {
        let law = law_from_words(&words, code.len(), i, j, sys.mask(idx));
        by_weight[idx.count_ones() as usize] += mi_bits(&law);
    }
    Ok(by_weight)
}

fn weight_measure(m: usize, w: usize, eps: f64) -> f64 {
    pow_u(eps, w) * pow_u(1.0 - eps, m - w)
}

/// `(g'(eps), (1/N) sum over ordered pairs of I(X_i; X_j | Y_~ij))`.
pub fn exit_derivative_check(code: &LinearCode, eps: f64) -> Result<(f64, f64)> {
    check_eps(eps)?;
    let (lhs, rhs) = exit_derivative_polys(code)?;
    let n = code.len() as f64;
    Ok((lhs.eval(eps) / n, rhs.eval(eps) / n))
}

/// Both sides of the derivative identity times `N`, as exact polynomials:
/// `d/deps sum_i H_i` and `sum_{i != j} Q4^{ij}`.
pub fn exit_derivative_polys(code: &LinearCode) -> Result<(CountPoly, CountPoly)> {
    let lhs = exit_function_poly(code)?.sum().derivative();
    let mut rhs = CountPoly::zero(code.len() - 2);
    for i in 0..code.len() {
        for j in 0..code.len() {
            if i != j {
                rhs += &pair_class_polys(code, i, j)?.q[3];
            }
        }
    }
    Ok((lhs, rhs))
}

fn binomial_poly(m: usize) -> CountPoly {
    CountPoly::from_counts(&(0..=m).map(|e| binomial(m, e) as i128).collect::<Vec<_>>())
}

fn max_coeff_gap(a: &CountPoly, b: &CountPoly) -> f64 {
    let d = a.degree().max(b.degree());
    let (a, b) = (a.elevate_to(d), b.elevate_to(d));
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).unsigned_abs() as f64).fold(0.0, f64::max)
}

/// Every EXIT and partition identity for one code, over all ordered pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentitySuiteReport {
    pub code: String,
    pub n: usize,
    pub k: usize,
    pub area: f64,
    pub area_gap: f64,
    /// Largest coefficient gap in the derivative identity (count basis).
    pub g_prime_coeff_gap: f64,
    pub g_prime_eval_gap: f64,
    pub q4_symmetry_gap: f64,
    /// `H_i = Q3 + eps Q4 + Q5`, coefficient gap.
    pub h_identity_gap: f64,
    /// `I_i = Q1 + Q2 + (1 - eps) Q4`, coefficient gap.
    pub i_identity_gap: f64,
    pub h_eval_gap: f64,
    pub sum_rule_gap: f64,
    pub alpha_eta_gap: f64,
    /// `Q4` against the coset-enumeration MI route, when affordable.
    pub mi_route_gap: Option<f64>,
    pub per_bit_equal: bool,
    pub checks: u64,
}

impl IdentitySuiteReport {
    pub fn max_gap(&self) -> f64 {
        [
            self.g_prime_coeff_gap,
            self.g_prime_eval_gap,
            self.q4_symmetry_gap,
            self.h_identity_gap,
            self.i_identity_gap,
            self.h_eval_gap,
            self.sum_rule_gap,
            self.alpha_eta_gap,
            self.mi_route_gap.unwrap_or(0.0),
        ]
        .into_iter()
        .fold(self.area_gap, f64::max)
    }

    /// `(property, epsilon, detail)` for every gap above tolerance.
    pub fn failures(&self, tol: f64, area_tol: f64) -> Vec<(String, Option<f64>, String)> {
        let mut out = Vec::new();
        if self.area_gap.is_nan() || self.area_gap >= area_tol {
            out.push(("area_theorem".into(), None, format!("integral={} vs K/N={}", self.area, self.k as f64 / self.n as f64)));
        }
        let items = [
            ("g_prime_identity", self.g_prime_coeff_gap.max(self.g_prime_eval_gap)),
            ("q4_symmetry", self.q4_symmetry_gap),
            ("h_identity", self.h_identity_gap.max(self.h_eval_gap)),
            ("i_identity", self.i_identity_gap),
            ("sum_rule", self.sum_rule_gap),
            ("q4_alpha_eta", self.alpha_eta_gap),
            ("q4_pairwise_mi", self.mi_route_gap.unwrap_or(0.0)),
        ];
        for (name, gap) in items {
            if gap.is_nan() || gap > tol {
                out.push((name.into(), None, format!("gap {gap:e}")));
            }
        }
        out
    }
}

/// Grid used for pointwise evaluations in the identity suite.
pub fn identity_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 20.0).collect()
}

pub fn identity_suite(code: &LinearCode, mode: PairStatsMode) -> Result<IdentitySuiteReport> {
    if mode != PairStatsMode::Exact {
        return Err(Error::Parameter("the identity suite needs exact mode".into()));
    }
    check_exhaustive(code)?;
    let n = code.len();
    if n < 2 {
        return Err(Error::Parameter("the identity suite needs N >= 2".into()));
    }
    let exit = exit_function_poly(code)?;
    let grid = identity_grid();
    let mut r = IdentitySuiteReport {
        code: code.name().into(),
        n,
        k: code.dimension(),
        area: exit.area(),
        area_gap: (exit.area() - code.dimension() as f64 / n as f64).abs(),
        g_prime_coeff_gap: 0.0,
        g_prime_eval_gap: 0.0,
        q4_symmetry_gap: 0.0,
        h_identity_gap: 0.0,
        i_identity_gap: 0.0,
        h_eval_gap: 0.0,
        sum_rule_gap: 0.0,
        alpha_eta_gap: 0.0,
        mi_route_gap: None,
        per_bit_equal: exit.per_bit_equal(),
        checks: 1,
    };
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let polys: Vec<PairPolys> = pairs.iter().map(|&(i, j)| pair_class_polys(code, i, j)).collect::<Result<_>>()?;
    let index = |i: usize, j: usize| i * (n - 1) + if j > i { j - 1 } else { j };
    let ones_m = binomial_poly(n - 2);
    let ones_h = binomial_poly(n - 1);
    let with_mi = n <= CONTAINMENT_MAX_N && code.dimension() <= LAW_ENUM_MAX_K;
    let mut mi_gap: f64 = 0.0;
    let mut rhs = CountPoly::zero(n - 2);
    for (&(i, j), p) in pairs.iter().zip(&polys) {
        let [q1, q2, q3, q4, q5] = &p.q;
        rhs += q4;
        r.q4_symmetry_gap = r.q4_symmetry_gap.max(max_coeff_gap(q4, &polys[index(j, i)].q[3]));
        let mut sum = q1 + q2;
        sum += q3;
        sum += q4;
        sum += q5;
        r.sum_rule_gap = r.sum_rule_gap.max(max_coeff_gap(&sum, &ones_m));
        let h_rhs = &(q3 + q5) + &q4.mul_x();
        r.h_identity_gap = r.h_identity_gap.max(max_coeff_gap(&exit.per_bit[i], &h_rhs));
        let i_lhs = &ones_h + &exit.per_bit[i].scale(-1);
        let i_rhs = &(q1 + q2) + &q4.mul_one_minus_x();
        r.i_identity_gap = r.i_identity_gap.max(max_coeff_gap(&i_lhs, &i_rhs));
        let mi_profile = if with_mi { Some(mi_by_laws_profile(code, i, j)?) } else { None };
        for &eps in &grid {
            let q = p.eval(eps);
            let st = PartitionStats::from_q(i, j, eps, q, true, None);
            r.alpha_eta_gap = r.alpha_eta_gap.max((st.q[3] - st.alpha * st.eta).abs());
            let h = exit.per_bit[i].eval(eps);
            r.h_eval_gap = r.h_eval_gap.max((h - (q[2] + eps * q[3] + q[4])).abs());
            if let Some(prof) = &mi_profile {
                let mi: f64 = prof.iter().enumerate().map(|(w, &s)| s * weight_measure(n - 2, w, eps)).sum();
                mi_gap = mi_gap.max((mi - q[3]).abs());
            }
            r.checks += 3;
        }
        r.checks += 4;
    }
    if with_mi {
        r.mi_route_gap = Some(mi_gap);
    }
    let lhs = exit.sum().derivative();
    r.g_prime_coeff_gap = max_coeff_gap(&lhs, &rhs);
    for &eps in &grid {
        r.g_prime_eval_gap = r.g_prime_eval_gap.max((lhs.eval(eps) - rhs.eval(eps)).abs() / n as f64);
    }
    r.checks += 1 + grid.len() as u64;
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub i: usize,
    pub j: usize,
    pub holds: bool,
    /// Conditioned patterns in the boundary of `B2 u B3 u B4 u B5`.
    pub boundary_patterns: u64,
    pub counterexample: Option<BitVector>,
}

/// Is every boundary point of `B2 u .. u B5` (neighbours varying only off
/// `{i, j}`) inside `B2 u B3 u B4`?
pub fn boundary_containment_check(code: &LinearCode, i: usize, j: usize) -> Result<ContainmentReport> {
    if code.len() > CONTAINMENT_MAX_N {
        return Err(Error::Budget { what: "containment sweep length", needed: code.len(), limit: CONTAINMENT_MAX_N });
    }
    let sys = PairSystem::new(code, i, j)?;
    let table = sys.table()?;
    let m = sys.free.len();
    let mut report = ContainmentReport { i, j, holds: true, boundary_patterns: 0, counterexample: None };
    for (idx, &c) in table.iter().enumerate() {
        if c == 1 {
            continue;
        }
        let on_boundary = (0..m).any(|t| table[idx ^ (1 << t)] == 1);
        if !on_boundary {
            continue;
        }
        report.boundary_patterns += 1;
        if c == 5 && report.counterexample.is_none() {
            report.holds = false;
            report.counterexample = Some(BitVector::from_u128(sys.mask(idx as u64), code.len()));
        }
    }
    Ok(report)
}

/// Exhaustive comparison of the fast class table, the solvability route and
/// (when `K <= 16`, `N <= 14`) coset enumeration. Returns the first
/// conditioned pattern where they disagree.
pub fn classification_cross_check(code: &LinearCode, i: usize, j: usize) -> Result<Option<BitVector>> {
    check_exhaustive(code)?;
    let sys = PairSystem::new(code, i, j)?;
    let table = sys.table()?;
    let words = if code.dimension() <= LAW_ENUM_MAX_K && code.len() <= CONTAINMENT_MAX_N {
        Some(law_codewords(code)?)
    } else {
        None
    };
    let n = code.len();
    let bad = (0..table.len())
        .into_par_iter()
        .map(|idx| -> Result<Option<usize>> {
            let mask = sys.mask(idx as u64);
            let z = BitVector::from_u128(mask, n);
            let by_solve = classify_pattern(code, i, j, &z)?;
            let mut ok = by_solve == table[idx] as usize;
            if let Some(w) = &words {
                let law = ConditionalLaw::from_class(by_solve)?;
                ok &= law_from_words(w, n, i, j, mask) == law.probabilities();
            }
            Ok((!ok).then_some(idx))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .next();
    Ok(bad.map(|idx| BitVector::from_u128(sys.mask(idx as u64), n)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupDiagnostic {
    pub eta: f64,
    pub omega_measure: f64,
    pub gamma_term: f64,
    /// `sqrt(N) eta / gamma(Pr(Z in Omega^ij))`; infinite when the gamma term is 0.
    pub scaled_ratio: f64,
}

pub fn blowup_diagnostic(code: &LinearCode, i: usize, j: usize, eps: f64) -> Result<BlowupDiagnostic> {
    let st = partition_stats(code, i, j, eps, &PairStatsMode::Exact)?;
    let omega_measure = (1.0 - st.q[0]).clamp(0.0, 1.0);
    let gamma_term = gamma_fn(omega_measure)?;
    let scaled_ratio =
        if gamma_term > 0.0 { (code.len() as f64).sqrt() * st.eta / gamma_term } else { f64::INFINITY };
    Ok(BlowupDiagnostic { eta: st.eta, omega_measure, gamma_term, scaled_ratio })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMonitorRow {
    pub i: usize,
    pub j: usize,
    pub info: f64,
    pub alpha: f64,
    pub mi: f64,
    /// `sqrt(N) I(X_i; X_j | Y_~ij) / alpha`, when `alpha > 0`.
    pub scaled: Option<f64>,
}

/// Ordered pairs with `I(X_i; Y_~i)` in `(delta, 1 - delta)`.
pub fn pair_monitor(code: &LinearCode, eps: f64, delta: f64) -> Result<Vec<PairMonitorRow>> {
    let exit = exit_function_poly(code)?;
    let n = code.len();
    let mut rows = Vec::new();
    for i in 0..n {
        let info = 1.0 - exit.per_bit[i].eval(eps);
        if !(info > delta && info < 1.0 - delta) {
            continue;
        }
        for j in (0..n).filter(|&j| j != i) {
            let st = partition_stats(code, i, j, eps, &PairStatsMode::Exact)?;
            let scaled = (st.alpha > 0.0).then(|| (n as f64).sqrt() * st.mi() / st.alpha);
            rows.push(PairMonitorRow { i, j, info, alpha: st.alpha, mi: st.mi(), scaled });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitiveMonitor {
    pub epsilon: f64,
    pub per_bit_equal: bool,
    pub g: f64,
    pub g_prime: f64,
    pub alpha_sum: f64,
    /// `N^(3/2) g' / sum_{i != j} alpha_ij`, when the sum is positive.
    pub scaled: Option<f64>,
}

pub fn transitive_monitor(code: &LinearCode, eps: f64) -> Result<TransitiveMonitor> {
    let exit = exit_function_poly(code)?;
    let n = code.len();
    let mut alpha_sum = 0.0;
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            alpha_sum += partition_stats(code, i, j, eps, &PairStatsMode::Exact)?.alpha;
        }
    }
    let g_prime = exit.g_prime(eps);
    let scaled = (alpha_sum > 0.0).then(|| (n as f64).powf(1.5) * g_prime / alpha_sum);
    Ok(TransitiveMonitor { epsilon: eps, per_bit_equal: exit.per_bit_equal(), g: exit.g(eps), g_prime, alpha_sum, scaled })
}

/// Generator restricted to the observed coordinates of `z` plus `i`, `j`:
/// the system whose solvability decides the class.
pub fn pair_system_matrix(code: &LinearCode, i: usize, j: usize, z: &Pattern) -> Result<BitMatrix> {
    check_pair(code, i, j)?;
    let mut idx: Vec<usize> = (0..code.len()).filter(|&k| !z.get(k)).collect();
    idx.push(i);
    idx.push(j);
    Ok(code.generator().transpose().select_rows(&idx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(s: &str) -> Pattern {
        BitVector::parse(s).unwrap()
    }

    #[test]
    fn classify_examples() {
        let rep2 = LinearCode::repetition(2).unwrap();
        assert_eq!(classify_pattern(&rep2, 0, 1, &pat("11")).unwrap(), 4);
        let spc = LinearCode::single_parity_check(3).unwrap();
        assert_eq!(classify_pattern(&spc, 0, 1, &pat("110")).unwrap(), 4);
        assert_eq!(classify_pattern(&spc, 0, 1, &pat("111")).unwrap(), 5);
        let rep3 = LinearCode::repetition(3).unwrap();
        assert_eq!(classify_pattern(&rep3, 0, 1, &pat("110")).unwrap(), 1);
        assert!(classify_pattern(&spc, 0, 1, &pat("100")).is_err());
        assert!(classify_pattern(&spc, 1, 1, &pat("110")).is_err());
    }

    #[test]
    fn law_examples() {
        let spc = LinearCode::single_parity_check(3).unwrap();
        assert_eq!(conditional_law(&spc, 0, 1, &pat("111")).unwrap().probabilities(), [0.25; 4]);
        assert_eq!(ConditionalLaw::P4.mutual_information(), 1.0);
        assert_eq!(ConditionalLaw::P1.mutual_information(), 0.0);
        for law in [ConditionalLaw::P2, ConditionalLaw::P3, ConditionalLaw::P5] {
            assert_eq!(law.mutual_information(), 0.0);
        }
    }

    #[test]
    fn partition_examples() {
        let spc = LinearCode::single_parity_check(3).unwrap();
        for &eps in &[0.0, 0.3, 1.0] {
            let st = partition_stats(&spc, 0, 1, eps, &PairStatsMode::Exact).unwrap();
            assert!((st.q[3] - (1.0 - eps)).abs() < 1e-15);
            assert!((st.q[4] - eps).abs() < 1e-15);
            assert_eq!(st.q[0] + st.q[1] + st.q[2], 0.0);
            if eps < 1.0 {
                assert_eq!(st.alpha, 1.0);
            }
        }
        let rep2 = LinearCode::repetition(2).unwrap();
        let st = partition_stats(&rep2, 0, 1, 0.4, &PairStatsMode::Exact).unwrap();
        assert_eq!(st.q[3], 1.0);
        assert_eq!(st.alpha, 1.0);
    }

    #[test]
    fn exit_examples() {
        let rep3 = LinearCode::repetition(3).unwrap();
        let spc = LinearCode::single_parity_check(3).unwrap();
        for &eps in &[0.0, 0.2, 0.7, 1.0] {
            for i in 0..3 {
                let a = exit_bit(&rep3, i, eps, &PairStatsMode::Exact).unwrap();
                assert!((a - eps * eps).abs() < 1e-15);
                let b = exit_bit(&spc, i, eps, &PairStatsMode::Exact).unwrap();
                assert!((b - (2.0 * eps - eps * eps)).abs() < 1e-15);
            }
        }
        assert!((exit_function_poly(&rep3).unwrap().area() - 1.0 / 3.0).abs() < 1e-15);
        assert!((exit_function_poly(&spc).unwrap().area() - 2.0 / 3.0).abs() < 1e-15);
        assert!(exit_function_poly(&LinearCode::reed_muller(1, 3).unwrap()).unwrap().per_bit_equal());
    }

    #[test]
    fn mi_examples() {
        let spc = LinearCode::single_parity_check(3).unwrap();
        let rep2 = LinearCode::repetition(2).unwrap();
        for &eps in &[0.1, 0.5, 0.9] {
            assert!((pairwise_mi(&spc, 0, 1, eps, &PairStatsMode::Exact).unwrap() - (1.0 - eps)).abs() < 1e-15);
            assert!((pairwise_mi_by_laws(&spc, 0, 1, eps).unwrap() - (1.0 - eps)).abs() < 1e-15);
            assert_eq!(pairwise_mi(&rep2, 0, 1, eps, &PairStatsMode::Exact).unwrap(), 1.0);
        }
        // rep(2) (+) rep(2): no codeword links coordinates 0 and 2.
        let g = BitMatrix::parse_rows(&["1100", "0011"]).unwrap();
        let sum = LinearCode::new("rep2+rep2", g).unwrap();
        assert_eq!(pairwise_mi(&sum, 0, 2, 0.5, &PairStatsMode::Exact).unwrap(), 0.0);
    }

    #[test]
    fn derivative_examples() {
        let rep3 = LinearCode::repetition(3).unwrap();
        let spc = LinearCode::single_parity_check(3).unwrap();
        for &eps in &[0.0, 0.25, 0.5, 1.0] {
            let (l, r) = exit_derivative_check(&rep3, eps).unwrap();
            assert!((l - 2.0 * eps).abs() < 1e-14 && (r - 2.0 * eps).abs() < 1e-14);
            let (l, r) = exit_derivative_check(&spc, eps).unwrap();
            assert!((l - (2.0 - 2.0 * eps)).abs() < 1e-14 && (r - l).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_examples() {
        for code in [LinearCode::single_parity_check(3).unwrap(), LinearCode::repetition(2).unwrap()] {
            let r = identity_suite(&code, PairStatsMode::Exact).unwrap();
            assert!(r.max_gap() < 1e-12, "{r:?}");
            assert!(r.failures(1e-12, 1e-9).is_empty());
        }
    }

    #[test]
    fn containment_examples() {
        let spc = LinearCode::single_parity_check(3).unwrap();
        let c = boundary_containment_check(&spc, 0, 1).unwrap();
        assert!(c.holds && c.boundary_patterns == 0);
        let rep2 = LinearCode::repetition(2).unwrap();
        assert!(boundary_containment_check(&rep2, 0, 1).unwrap().holds);
        let rm = LinearCode::reed_muller(1, 3).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert!(boundary_containment_check(&rm, i, j).unwrap().holds);
                }
            }
        }
    }

    #[test]
    fn blowup_examples() {
        let spc = LinearCode::single_parity_check(3).unwrap();
        let d = blowup_diagnostic(&spc, 0, 1, 0.5).unwrap();
        assert_eq!(d.omega_measure, 1.0);
        assert_eq!(d.gamma_term, 0.0);
        assert!(d.scaled_ratio.is_infinite());
        let rm = LinearCode::reed_muller(1, 3).unwrap();
        let st = partition_stats(&rm, 0, 5, 0.4, &PairStatsMode::Exact).unwrap();
        assert!(st.eta >= st.q[3]);
        assert!((st.q[3] - st.alpha * st.eta).abs() < 1e-12);
    }

    #[test]
    fn mc_partition_tracks_exact() {
        let rm = LinearCode::reed_muller(1, 3).unwrap();
        let cfg = McConfig::new(3, 20_000);
        let exact = partition_stats(&rm, 1, 6, 0.5, &PairStatsMode::Exact).unwrap();
        let mc = partition_stats(&rm, 1, 6, 0.5, &PairStatsMode::Mc(cfg)).unwrap();
        for k in 0..5 {
            let sd = (exact.q[k] * (1.0 - exact.q[k]) / 20_000.0).sqrt();
            assert!((mc.q[k] - exact.q[k]).abs() <= 4.0 * sd + 1e-12, "k={k}");
        }
        let h = exit_bit(&rm, 2, 0.5, &PairStatsMode::Mc(cfg)).unwrap();
        let he = exit_bit(&rm, 2, 0.5, &PairStatsMode::Exact).unwrap();
        assert!((h - he).abs() < 4.0 * (he * (1.0 - he) / 20_000.0).sqrt());
    }
}
