//! Block-MAP failure sets, their boundaries, and exact error curves.
//!
//! With the all-zero codeword transmitted, block-MAP decoding fails exactly on
//! a monotone increasing set of patterns:
//!
//! * BEC: the erasures cover some nonzero codeword, i.e. the generator
//!   restricted to the surviving columns loses rank;
//! * BSC: some nonzero codeword `x` satisfies `w(omega + x) < w(omega)`
//!   (a tie is decoded correctly).
//!
//! Exhaustive routines tabulate membership for all `2^N` patterns and keep
//! integer tallies per weight, so every curve is an exact [`CountPoly`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::codes::{LinearCode, WeightSpectrum};
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVector, Pattern, XorBasis};
use crate::poly::{binomial, pow_u, CountPoly};
use crate::special::gamma_fn;

/// Largest block length for exhaustive `2^N` sweeps.
pub const EXHAUSTIVE_MAX_N: usize = 22;
/// Largest dimension for per-pattern codeword enumeration (BSC).
pub const BSC_ENUM_MAX_K: usize = 24;

const IN_OMEGA: u8 = 1;
const TIE: u8 = 2;
const CHUNK_BITS: usize = 14;

fn check_len(code: &LinearCode, pattern: &Pattern) -> Result<()> {
    if pattern.len() != code.len() {
        return Err(Error::Dimension(format!(
            "pattern has length {}, code {} has length {}",
            pattern.len(),
            code.name(),
            code.len()
        )));
    }
    Ok(())
}

fn full_mask(n: usize) -> u128 {
    if n == 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

/// BEC failure by rank: erasing `erased` leaves fewer than K independent columns.
#[inline]
pub(crate) fn bec_fails_packed(rows: &[u128], erased: u128, n: usize, basis: &mut XorBasis) -> bool {
    let keep = !erased & full_mask(n);
    basis.clear();
    // K rows: one dependent row already forces rank < K.
    !rows.iter().all(|&r| basis.insert(r & keep))
}

/// Is `pattern` a block-MAP failure pattern?
pub fn in_omega(code: &LinearCode, pattern: &Pattern, channel: Channel) -> Result<bool> {
    check_len(code, pattern)?;
    code.require_dimension()?;
    match channel {
        Channel::Bec => match code.rows_u128() {
            Some(rows) => {
                let mut basis = XorBasis::with_capacity(rows.len());
                Ok(bec_fails_packed(rows, pattern.to_u128(), code.len(), &mut basis))
            }
            None => {
                let keep: Vec<usize> = (0..code.len()).filter(|&c| !pattern.get(c)).collect();
                Ok(code.generator().select_columns(&keep).rank() < code.dimension())
            }
        },
        Channel::Bsc => {
            let (strict, _) = bsc_decision(code, pattern)?;
            Ok(strict)
        }
    }
}

/// BSC decision by codeword enumeration: (strict failure, failure counting ties).
fn bsc_decision(code: &LinearCode, pattern: &Pattern) -> Result<(bool, bool)> {
    let rows = code.require_packed_rows()?;
    if code.dimension() > BSC_ENUM_MAX_K {
        return Err(Error::Budget {
            what: "BSC codeword enumeration dimension",
            needed: code.dimension(),
            limit: BSC_ENUM_MAX_K,
        });
    }
    let w = pattern.to_u128();
    let wt = w.count_ones();
    let mut cw = 0u128;
    let mut tie = false;
    for t in 1u64..(1u64 << code.dimension()) {
        cw ^= rows[t.trailing_zeros() as usize];
        if cw == 0 {
            continue;
        }
        let moved = (w ^ cw).count_ones();
        if moved < wt {
            return Ok((true, true));
        }
        tie |= moved == wt;
    }
    Ok((false, tie))
}

/// Is some nonzero codeword supported inside `pattern`? Enumerates codewords;
/// the independent route to BEC membership.
pub fn covers_nonzero_codeword(code: &LinearCode, pattern: &Pattern) -> Result<bool> {
    check_len(code, pattern)?;
    Ok(!covered_codewords_by_enumeration(code, pattern, 1)?.is_empty())
}

/// Nonzero codewords covered by `pattern`, by enumeration, stopping at `limit`.
pub fn covered_codewords_by_enumeration(
    code: &LinearCode,
    pattern: &Pattern,
    limit: usize,
) -> Result<Vec<BitVector>> {
    check_len(code, pattern)?;
    let rows = code.require_packed_rows()?;
    if code.dimension() > BSC_ENUM_MAX_K {
        return Err(Error::Budget {
            what: "codeword enumeration dimension",
            needed: code.dimension(),
            limit: BSC_ENUM_MAX_K,
        });
    }
    let w = pattern.to_u128();
    let mut out = Vec::new();
    let mut cw = 0u128;
    for t in 1u64..(1u64 << code.dimension()) {
        cw ^= rows[t.trailing_zeros() as usize];
        if cw != 0 && cw & !w == 0 {
            out.push(BitVector::from_u128(cw, code.len()));
            if out.len() >= limit {
                break;
            }
        }
    }
    Ok(out)
}

/// Basis of the covering subcode `C(z)`: codewords whose support lies inside
/// `z`, found as the nullspace of the generator columns outside `z`.
pub fn covered_subcode_basis(code: &LinearCode, z: &Pattern) -> Result<Vec<BitVector>> {
    check_len(code, z)?;
    let outside: Vec<usize> = (0..code.len()).filter(|&c| !z.get(c)).collect();
    // Messages u with (uG)_c = 0 for every c outside z.
    let system = code.generator().select_columns(&outside).transpose();
    let messages = system.nullspace_basis();
    let mut out = Vec::with_capacity(messages.rows());
    for r in 0..messages.rows() {
        out.push(code.encode(&messages.row(r))?);
    }
    Ok(out)
}

/// Membership of every pattern in `Omega`, for `N <= 22`.
#[derive(Clone, Debug)]
pub struct OmegaTable {
    channel: Channel,
    n: usize,
    flags: Vec<u8>,
}

impl OmegaTable {
    /// BEC by a rank test per pattern; BSC by coset minimum weights.
    pub fn build(code: &LinearCode, channel: Channel) -> Result<Self> {
        code.require_dimension()?;
        let n = code.len();
        if n > EXHAUSTIVE_MAX_N {
            return Err(Error::Budget { what: "exhaustive sweep length", needed: n, limit: EXHAUSTIVE_MAX_N });
        }
        let flags = match channel {
            Channel::Bec => bec_flags_by_rank(code)?,
            Channel::Bsc => bsc_flags_by_cosets(code),
        };
        Ok(Self { channel, n, flags })
    }

    /// BEC membership as the up-closure of the nonzero codeword supports.
    pub fn bec_by_cover_closure(code: &LinearCode) -> Result<Self> {
        code.require_dimension()?;
        let n = code.len();
        if n > EXHAUSTIVE_MAX_N {
            return Err(Error::Budget { what: "exhaustive sweep length", needed: n, limit: EXHAUSTIVE_MAX_N });
        }
        let mut flags = vec![0u8; 1 << n];
        for cw in code.codewords_u128(EXHAUSTIVE_MAX_N)? {
            if cw != 0 {
                flags[cw as usize] = IN_OMEGA;
            }
        }
        for bit in 0..n {
            let b = 1usize << bit;
            for p in 0..flags.len() {
                if p & b != 0 {
                    flags[p] |= flags[p ^ b];
                }
            }
        }
        Ok(Self { channel: Channel::Bec, n, flags })
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn contains(&self, p: u64) -> bool {
        self.flags[p as usize] & IN_OMEGA != 0
    }

    /// Failure when ties are also counted as errors (BSC); same as
    /// [`contains`](Self::contains) on the BEC.
    #[inline]
    pub fn contains_with_ties(&self, p: u64) -> bool {
        self.flags[p as usize] & (IN_OMEGA | TIE) != 0
    }

    /// `h(omega)`: neighbours outside `Omega` reached by clearing one set bit;
    /// zero outside `Omega`.
    #[inline]
    pub fn h(&self, p: u64) -> u32 {
        if !self.contains(p) {
            return 0;
        }
        let mut rest = p;
        let mut h = 0;
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            rest ^= bit;
            if !self.contains(p ^ bit) {
                h += 1;
            }
        }
        h
    }

    pub fn same_membership(&self, other: &OmegaTable) -> Option<u64> {
        (0..self.flags.len() as u64).find(|&p| self.contains(p) != other.contains(p))
    }

    pub fn profile(&self, code: &LinearCode) -> FailureProfile {
        let n = self.n;
        let mut f = vec![0u64; n + 1];
        let mut f_ties = vec![0u64; n + 1];
        for p in 0..self.flags.len() as u64 {
            let wt = p.count_ones() as usize;
            if self.contains(p) {
                f[wt] += 1;
            }
            if self.contains_with_ties(p) {
                f_ties[wt] += 1;
            }
        }
        FailureProfile {
            code: code.name().to_string(),
            channel: self.channel,
            n,
            k: code.dimension(),
            f,
            f_ties,
        }
    }
}

fn bec_flags_by_rank(code: &LinearCode) -> Result<Vec<u8>> {
    let n = code.len();
    let rows = code.require_packed_rows()?;
    let mut flags = vec![0u8; 1 << n];
    let chunk = 1usize << CHUNK_BITS.min(n);
    flags.par_chunks_mut(chunk).enumerate().for_each(|(ci, out)| {
        let mut basis = XorBasis::with_capacity(rows.len());
        let base = ci * chunk;
        for (off, flag) in out.iter_mut().enumerate() {
            if bec_fails_packed(rows, (base + off) as u128, n, &mut basis) {
                *flag = IN_OMEGA;
            }
        }
    });
    Ok(flags)
}

/// Strict BSC failure: `omega` is heavier than its coset minimum. Tie flag:
/// `omega` attains the minimum but shares it with another coset member.
fn bsc_flags_by_cosets(code: &LinearCode) -> Vec<u8> {
    let n = code.len();
    let h = code.parity_check();
    let col_syndrome: Vec<u32> = (0..n)
        .map(|c| (0..h.rows()).fold(0u32, |acc, r| acc | ((h.get(r, c) as u32) << r)))
        .collect();
    let size = 1usize << n;
    let mut syndrome = vec![0u32; size];
    for p in 1..size {
        let low = p.trailing_zeros() as usize;
        syndrome[p] = syndrome[p & (p - 1)] ^ col_syndrome[low];
    }
    let cosets = 1usize << h.rows();
    let mut min_weight = vec![u32::MAX; cosets];
    let mut min_count = vec![0u32; cosets];
    for (p, &s) in syndrome.iter().enumerate() {
        let wt = p.count_ones();
        let s = s as usize;
        if wt < min_weight[s] {
            min_weight[s] = wt;
            min_count[s] = 1;
        } else if wt == min_weight[s] {
            min_count[s] += 1;
        }
    }
    syndrome
        .iter()
        .enumerate()
        .map(|(p, &s)| {
            let s = s as usize;
            let wt = p.count_ones();
            if wt > min_weight[s] {
                IN_OMEGA
            } else if min_count[s] > 1 {
                TIE
            } else {
                0
            }
        })
        .collect()
}

/// Exact failure counts per pattern weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureProfile {
    pub code: String,
    pub channel: Channel,
    pub n: usize,
    pub k: usize,
    /// `f[e]`: weight-`e` patterns in `Omega`.
    pub f: Vec<u64>,
    /// Same with ties counted as failures (equals `f` on the BEC).
    pub f_ties: Vec<u64>,
}

impl FailureProfile {
    pub fn poly(&self) -> CountPoly {
        CountPoly::from_counts(&self.f.iter().map(|&c| c as i64).collect::<Vec<_>>())
    }

    pub fn ties_poly(&self) -> CountPoly {
        CountPoly::from_counts(&self.f_ties.iter().map(|&c| c as i64).collect::<Vec<_>>())
    }

    /// `mu_eps(Omega)` for any `eps` in `[0, 1]`, regardless of channel.
    pub fn measure(&self, eps: f64) -> Result<f64> {
        unit_interval(eps)?;
        Ok(self.poly().eval(eps))
    }

    /// Algebraic derivative of `mu_eps(Omega)` on `[0, 1]`.
    pub fn measure_derivative(&self, eps: f64) -> Result<f64> {
        unit_interval(eps)?;
        Ok(self.poly().derivative().eval(eps))
    }

    /// `P_MAP(eps)` on the channel domain.
    pub fn pmap_eval(&self, eps: f64) -> Result<f64> {
        self.channel.check_epsilon(eps)?;
        Ok(self.poly().eval(eps))
    }

    /// `dP_MAP / d eps` on the channel domain.
    pub fn pmap_derivative(&self, eps: f64) -> Result<f64> {
        self.channel.check_epsilon(eps)?;
        Ok(self.poly().derivative().eval(eps))
    }

    /// Checks `0 <= f(e) <= C(N,e)`, `f(0) = 0`, `f(N) = 1` and that the
    /// failing fraction per weight never decreases.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if self.f.len() != n + 1 {
            return Err(Error::Consistency(format!("profile has {} counts, expected {}", self.f.len(), n + 1)));
        }
        for (e, &c) in self.f.iter().enumerate() {
            if c as u128 > binomial(n, e) {
                return Err(Error::Consistency(format!("f({e}) = {c} exceeds C({n},{e})")));
            }
        }
        if self.f[0] != 0 {
            return Err(Error::Consistency("the empty pattern fails".into()));
        }
        if self.f[n] != 1 {
            return Err(Error::Consistency("the full pattern does not fail".into()));
        }
        for e in 0..n {
            // f(e)/C(n,e) <= f(e+1)/C(n,e+1), cross-multiplied
            let lhs = self.f[e] as u128 * binomial(n, e + 1);
            let rhs = self.f[e + 1] as u128 * binomial(n, e);
            if lhs > rhs {
                return Err(Error::Consistency(format!("failing fraction decreases from weight {e} to {}", e + 1)));
            }
        }
        Ok(())
    }
}

fn unit_interval(eps: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::Domain(format!("epsilon={eps} outside [0,1]")))
    }
}

fn open_unit_interval(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("epsilon={eps} outside (0,1)")))
    }
}

/// Exact failure profile by exhaustive sweep (`N <= 22`).
pub fn failure_profile(code: &LinearCode, channel: Channel) -> Result<FailureProfile> {
    Ok(OmegaTable::build(code, channel)?.profile(code))
}

/// Per-pattern classification returned by [`verdict`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternVerdict {
    pub in_omega: bool,
    pub on_boundary: bool,
    pub h: usize,
    /// The unique nonzero codeword covered by a BEC boundary pattern.
    pub covered_codeword: Option<BitVector>,
    /// A minimum-weight codeword `x` with `w(omega + x) < w(omega)`, for BSC
    /// boundary patterns.
    pub witness: Option<BitVector>,
}

/// Membership, boundary status and `h` of a single pattern.
pub fn verdict(code: &LinearCode, pattern: &Pattern, channel: Channel) -> Result<PatternVerdict> {
    let inside = in_omega(code, pattern, channel)?;
    let mut h = 0;
    for bit in 0..code.len() {
        let mut nb = pattern.clone();
        nb.flip(bit);
        let nb_in = in_omega(code, &nb, channel)?;
        if pattern.get(bit) {
            if inside && !nb_in {
                h += 1;
            }
        } else if inside && !nb_in {
            return Err(Error::Consistency(format!(
                "adding position {bit} to {pattern} leaves Omega; the failure set is not monotone"
            )));
        }
    }
    let on_boundary = h > 0;
    let mut out = PatternVerdict { in_omega: inside, on_boundary, h, covered_codeword: None, witness: None };
    if on_boundary {
        match channel {
            Channel::Bec => {
                let basis = covered_subcode_basis(code, pattern)?;
                if basis.len() != 1 {
                    return Err(Error::Consistency(format!(
                        "boundary pattern {pattern} covers a {}-dimensional subcode, expected exactly one nonzero codeword",
                        basis.len()
                    )));
                }
                out.covered_codeword = basis.into_iter().next();
            }
            Channel::Bsc => {
                out.witness = min_weight_witness(code, pattern)?;
            }
        }
    }
    Ok(out)
}

/// Smallest-weight nonzero codeword `x` with `w(omega + x) < w(omega)`.
pub fn min_weight_witness(code: &LinearCode, pattern: &Pattern) -> Result<Option<BitVector>> {
    check_len(code, pattern)?;
    let words = code.codewords_u128(BSC_ENUM_MAX_K)?;
    let w = pattern.to_u128();
    let wt = w.count_ones();
    Ok(words
        .into_iter()
        .filter(|&x| x != 0 && (w ^ x).count_ones() < wt)
        .min_by_key(|x| (x.count_ones(), *x))
        .map(|x| BitVector::from_u128(x, code.len())))
}

/// An observed breach of a structural property, with the offending pattern.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub property: String,
    pub pattern: String,
    pub detail: String,
}

/// Exhaustive boundary statistics of `Omega`, kept as integer histograms.
#[derive(Clone, Debug)]
pub struct BoundaryStats {
    n: usize,
    /// `h_hist[e][h]`: patterns in `Omega` of weight `e` with that `h`.
    h_hist: Vec<Vec<u64>>,
    /// `witness_hist[e][w]`: boundary patterns of weight `e` whose covered
    /// codeword (BEC) or minimum-weight witness (BSC) has weight `w`.
    witness_hist: Vec<Vec<u64>>,
    boundary_patterns: u64,
    /// BSC only: boundary patterns where some witness, not necessarily the
    /// lightest, has `h < w(x)/2`.
    weak_witness_patterns: u64,
    violations: Vec<Violation>,
}

const MAX_VIOLATIONS: usize = 16;

impl BoundaryStats {
    fn empty(n: usize) -> Self {
        Self {
            n,
            h_hist: vec![vec![0; n + 1]; n + 1],
            witness_hist: vec![vec![0; n + 1]; n + 1],
            boundary_patterns: 0,
            weak_witness_patterns: 0,
            violations: Vec::new(),
        }
    }

    fn merge(&mut self, other: BoundaryStats) {
        for (a, b) in self.h_hist.iter_mut().zip(&other.h_hist) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.witness_hist.iter_mut().zip(&other.witness_hist) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.boundary_patterns += other.boundary_patterns;
        self.weak_witness_patterns += other.weak_witness_patterns;
        for v in other.violations {
            if self.violations.len() < MAX_VIOLATIONS {
                self.violations.push(v);
            }
        }
    }

    fn violate(&mut self, property: &str, p: u64, detail: String) {
        if self.violations.len() < MAX_VIOLATIONS {
            self.violations.push(Violation {
                property: property.to_string(),
                pattern: BitVector::from_u64(p, self.n).to_string(),
                detail,
            });
        }
    }

    pub fn h_hist(&self) -> &[Vec<u64>] {
        &self.h_hist
    }

    pub fn witness_hist(&self) -> &[Vec<u64>] {
        &self.witness_hist
    }

    pub fn boundary_patterns(&self) -> u64 {
        self.boundary_patterns
    }

    pub fn weak_witness_patterns(&self) -> u64 {
        self.weak_witness_patterns
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    /// `sum_omega g(h(omega)) mu_eps(omega)` over `Omega`.
    pub fn h_functional(&self, eps: f64, g: impl Fn(u64) -> f64) -> f64 {
        weighted_measure(&self.h_hist, self.n, eps, g)
    }
}

fn weighted_measure(hist: &[Vec<u64>], n: usize, eps: f64, g: impl Fn(u64) -> f64) -> f64 {
    let mut total = 0.0;
    for (e, row) in hist.iter().enumerate() {
        let mass: f64 = row.iter().enumerate().filter(|(_, &c)| c > 0).map(|(v, &c)| c as f64 * g(v as u64)).sum();
        if mass != 0.0 {
            total += mass * pow_u(eps, e) * pow_u(1.0 - eps, n - e);
        }
    }
    total
}

/// Exact analysis of one code on one channel: membership table, profile,
/// spectrum and boundary statistics.
#[derive(Clone, Debug)]
pub struct PatternAnalysis {
    pub channel: Channel,
    pub n: usize,
    pub k: usize,
    pub d_min: usize,
    pub spectrum: WeightSpectrum,
    pub table: OmegaTable,
    pub profile: FailureProfile,
    pub stats: BoundaryStats,
}

impl PatternAnalysis {
    pub fn new(code: &LinearCode, channel: Channel) -> Result<Self> {
        let table = OmegaTable::build(code, channel)?;
        let profile = table.profile(code);
        let spectrum = code.weight_distribution()?;
        let d_min = spectrum
            .min_distance()
            .ok_or_else(|| Error::Consistency(format!("{} has no nonzero codeword", code.name())))?;
        let stats = boundary_sweep(code, &table, d_min)?;
        Ok(Self { channel, n: code.len(), k: code.dimension(), d_min, spectrum, table, profile, stats })
    }

    /// `(1/eps) sum_{omega in Omega} h(omega) mu_eps(omega)`, for `0 < eps < 1`.
    pub fn margulis_russo_rhs(&self, eps: f64) -> Result<f64> {
        open_unit_interval(eps)?;
        Ok(self.stats.h_functional(eps, |h| h as f64) / eps)
    }

    /// Isoperimetric pair at `eps`: `int sqrt(h) dmu` against
    /// `gamma(mu(Omega)) / sqrt(-2 ln eps)`.
    pub fn isoperimetric(&self, eps: f64) -> Result<IsoperimetricPair> {
        open_unit_interval(eps)?;
        let lhs = self.stats.h_functional(eps, |h| (h as f64).sqrt());
        let rhs = gamma_fn(self.profile.measure(eps)?.clamp(0.0, 1.0))? / (-2.0 * eps.ln()).sqrt();
        Ok(IsoperimetricPair { lhs, rhs })
    }

    /// Measure of boundary patterns whose covered codeword (or witness) is
    /// lighter than `W`, with the union bound `sum_{w<W} A(w) eps^w`.
    pub fn gamma_w(&self, eps: f64, big_w: usize) -> Result<GammaWMeasure> {
        unit_interval(eps)?;
        if big_w == 0 || big_w > self.n {
            return Err(Error::Parameter(format!("W={big_w} outside 1..={}", self.n)));
        }
        let truncated: Vec<Vec<u64>> = self
            .stats
            .witness_hist
            .iter()
            .map(|row| row.iter().enumerate().map(|(w, &c)| if w < big_w { c } else { 0 }).collect())
            .collect();
        let measure = weighted_measure(&truncated, self.n, eps, |_| 1.0);
        let union_bound = (1..big_w).map(|w| self.spectrum.a(w) as f64 * pow_u(eps, w)).sum();
        Ok(GammaWMeasure { measure, union_bound })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricPair {
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaWMeasure {
    pub measure: f64,
    pub union_bound: f64,
}

/// One pass over `Omega`: `h` histograms, covered codewords / witnesses, and
/// every structural property that can be checked pattern by pattern.
fn boundary_sweep(code: &LinearCode, table: &OmegaTable, d_min: usize) -> Result<BoundaryStats> {
    let n = code.len();
    let channel = table.channel();
    let codewords: Vec<u64> = match channel {
        Channel::Bsc => code.codewords_u128(BSC_ENUM_MAX_K)?.into_iter().map(|c| c as u64).collect(),
        Channel::Bec => Vec::new(),
    };
    let total = 1usize << n;
    let chunk = 1usize << CHUNK_BITS.min(n);
    let parts: Vec<Result<BoundaryStats>> = (0..total / chunk)
        .into_par_iter()
        .map(|ci| {
            let mut stats = BoundaryStats::empty(n);
            for p in (ci * chunk) as u64..((ci + 1) * chunk) as u64 {
                if !table.contains(p) {
                    continue;
                }
                let wt = p.count_ones() as usize;
                let mut h = 0usize;
                for bit in 0..n {
                    let nb = p ^ (1 << bit);
                    if p >> bit & 1 == 1 {
                        if !table.contains(nb) {
                            h += 1;
                        }
                    } else if !table.contains(nb) {
                        stats.violate("monotonicity", p, format!("adding position {bit} leaves Omega"));
                    }
                }
                stats.h_hist[wt][h] += 1;
                if h == 0 {
                    continue;
                }
                stats.boundary_patterns += 1;
                match channel {
                    Channel::Bec => bec_boundary_checks(code, p, h, d_min, &mut stats)?,
                    Channel::Bsc => bsc_boundary_checks(&codewords, p, h, &mut stats),
                }
            }
            Ok(stats)
        })
        .collect();
    let mut stats = BoundaryStats::empty(n);
    for part in parts {
        stats.merge(part?);
    }
    Ok(stats)
}

fn bec_boundary_checks(code: &LinearCode, p: u64, h: usize, d_min: usize, stats: &mut BoundaryStats) -> Result<()> {
    let n = code.len();
    let wt = p.count_ones() as usize;
    let z = BitVector::from_u64(p, n);
    let basis = covered_subcode_basis(code, &z)?;
    if basis.len() != 1 {
        stats.violate(
            "boundary_unique_codeword",
            p,
            format!("covers a {}-dimensional subcode", basis.len()),
        );
        return Ok(());
    }
    let x = &basis[0];
    let xw = x.weight();
    stats.witness_hist[wt][xw] += 1;
    if h < d_min {
        stats.violate("boundary_h_at_least_dmin", p, format!("h={h} < d_min={d_min}"));
    }
    // Covers Gamma_W for every W at once: w(x) >= W must force h >= W.
    if h < xw {
        stats.violate("gamma_w_h_at_least_w", p, format!("h={h} < w(x)={xw} for x={x}"));
    }
    Ok(())
}

fn bsc_boundary_checks(codewords: &[u64], p: u64, h: usize, stats: &mut BoundaryStats) {
    let wt = p.count_ones();
    let mut lightest: Option<u32> = None;
    let mut weak = false;
    for &x in codewords {
        if x == 0 || (p ^ x).count_ones() >= wt {
            continue;
        }
        let xw = x.count_ones();
        lightest = Some(lightest.map_or(xw, |l| l.min(xw)));
        if 2 * h < xw as usize {
            weak = true;
        }
    }
    let Some(xw) = lightest else {
        stats.violate("bsc_boundary_has_witness", p, "no codeword lowers the weight".into());
        return;
    };
    stats.witness_hist[wt as usize][xw as usize] += 1;
    if weak {
        stats.weak_witness_patterns += 1;
    }
    if 2 * h < xw as usize {
        stats.violate("bsc_h_at_least_half_witness", p, format!("h={h} < w(x)/2 with w(x)={xw}"));
    }
}

/// `(1/eps) int h dmu` by exhaustive sweep.
pub fn margulis_russo_rhs(code: &LinearCode, eps: f64, channel: Channel) -> Result<f64> {
    PatternAnalysis::new(code, channel)?.margulis_russo_rhs(eps)
}

/// `int sqrt(h) dmu` on the BEC, paired with its Gaussian lower bound.
pub fn isoperimetric_lhs(code: &LinearCode, eps: f64) -> Result<IsoperimetricPair> {
    PatternAnalysis::new(code, Channel::Bec)?.isoperimetric(eps)
}

/// Exact `mu_eps` of `{omega in boundary : w(x(omega)) < W}` on the BEC.
pub fn gamma_w_measure(code: &LinearCode, eps: f64, big_w: usize) -> Result<GammaWMeasure> {
    PatternAnalysis::new(code, Channel::Bec)?.gamma_w(eps, big_w)
}

/// Generator restricted to a column subset; exposed for callers building
/// their own systems.
pub fn restrict_columns(code: &LinearCode, cols: &[usize]) -> BitMatrix {
    code.generator().select_columns(cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(s: &str) -> Pattern {
        BitVector::parse(s).unwrap()
    }

    fn rep3() -> LinearCode {
        LinearCode::repetition(3).unwrap()
    }

    fn spc3() -> LinearCode {
        LinearCode::single_parity_check(3).unwrap()
    }

    #[test]
    fn membership_examples() {
        assert!(in_omega(&rep3(), &pat("111"), Channel::Bec).unwrap());
        assert!(!in_omega(&rep3(), &pat("110"), Channel::Bec).unwrap());
        assert!(in_omega(&spc3(), &pat("110"), Channel::Bec).unwrap());
        assert!(in_omega(&rep3(), &pat("110"), Channel::Bsc).unwrap());
        assert!(!in_omega(&rep3(), &pat("100"), Channel::Bsc).unwrap());
        assert!(matches!(in_omega(&rep3(), &pat("11"), Channel::Bec), Err(Error::Dimension(_))));
    }

    #[test]
    fn profile_examples() {
        assert_eq!(failure_profile(&rep3(), Channel::Bec).unwrap().f, vec![0, 0, 0, 1]);
        assert_eq!(failure_profile(&spc3(), Channel::Bec).unwrap().f, vec![0, 0, 3, 1]);
        assert_eq!(failure_profile(&spc3(), Channel::Bsc).unwrap().f, vec![0, 0, 3, 1]);
        // With ties counted, rep(2) on the BSC also fails on 10 and 01.
        let rep2 = LinearCode::repetition(2).unwrap();
        let p = failure_profile(&rep2, Channel::Bsc).unwrap();
        assert_eq!(p.f, vec![0, 0, 1]);
        assert_eq!(p.f_ties, vec![0, 2, 1]);
        assert!(failure_profile(&LinearCode::repetition(23).unwrap(), Channel::Bec).is_err());
    }

    #[test]
    fn pmap_examples() {
        let rep = failure_profile(&rep3(), Channel::Bec).unwrap();
        assert!((rep.pmap_eval(0.5).unwrap() - 0.125).abs() < 1e-15);
        let spc = failure_profile(&spc3(), Channel::Bec).unwrap();
        assert!((spc.pmap_eval(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(spc.pmap_eval(0.0).unwrap(), 0.0);
        let bsc = failure_profile(&spc3(), Channel::Bsc).unwrap();
        assert!(bsc.pmap_eval(0.6).is_err());
        assert!(bsc.measure(0.6).is_ok());
        assert!(spc.pmap_eval(-0.1).is_err());
    }

    #[test]
    fn verdict_examples() {
        let v = verdict(&spc3(), &pat("110"), Channel::Bec).unwrap();
        assert!(v.in_omega && v.on_boundary);
        assert_eq!(v.h, 2);
        assert_eq!(v.covered_codeword, Some(pat("110")));

        let v = verdict(&spc3(), &pat("111"), Channel::Bec).unwrap();
        assert!(v.in_omega && !v.on_boundary);
        assert_eq!(v.h, 0);

        let v = verdict(&rep3(), &pat("110"), Channel::Bsc).unwrap();
        assert_eq!(v.h, 2);
        assert!(2 * v.h >= v.witness.unwrap().weight());

        let v = verdict(&rep3(), &pat("010"), Channel::Bec).unwrap();
        assert!(!v.in_omega && v.h == 0);
    }

    #[test]
    fn margulis_russo_examples() {
        for eps in [0.2, 0.5, 0.8] {
            let rhs = margulis_russo_rhs(&rep3(), eps, Channel::Bec).unwrap();
            assert!((rhs - 3.0 * eps * eps).abs() < 1e-14);
        }
        let rhs = margulis_russo_rhs(&spc3(), 0.5, Channel::Bec).unwrap();
        assert!((rhs - 1.5).abs() < 1e-14);
        assert!(margulis_russo_rhs(&spc3(), 0.0, Channel::Bec).is_err());
        assert!(margulis_russo_rhs(&spc3(), 1.0, Channel::Bec).is_err());
    }

    #[test]
    fn isoperimetric_examples() {
        let pair = isoperimetric_lhs(&spc3(), 0.5).unwrap();
        assert!((pair.lhs - 3.0 * 2f64.sqrt() / 8.0).abs() < 1e-12);
        assert!((pair.rhs - 0.338_831).abs() < 1e-5);
        assert!(pair.lhs >= pair.rhs);

        let eps = 0.5f64.powf(1.0 / 3.0);
        let pair = isoperimetric_lhs(&rep3(), eps).unwrap();
        assert!((pair.lhs - 3f64.sqrt() * 0.5).abs() < 1e-12);
        assert!(pair.lhs >= pair.rhs);

        let tiny = isoperimetric_lhs(&LinearCode::repetition(8).unwrap(), 1e-3).unwrap();
        assert!(tiny.rhs < 1e-20 && tiny.lhs >= tiny.rhs);
    }

    #[test]
    fn gamma_w_examples() {
        let g = gamma_w_measure(&spc3(), 0.5, 3).unwrap();
        assert!((g.measure - 0.375).abs() < 1e-15);
        assert!((g.union_bound - 0.75).abs() < 1e-15);
        assert_eq!(gamma_w_measure(&spc3(), 0.5, 1).unwrap().measure, 0.0);
        let rm = LinearCode::reed_muller(1, 3).unwrap();
        assert_eq!(gamma_w_measure(&rm, 0.3, 4).unwrap().measure, 0.0);
    }

    #[test]
    fn rank_and_cover_routes_agree() {
        for code in [rep3(), spc3(), LinearCode::reed_muller(1, 3).unwrap(), LinearCode::random_linear(9, 4, 3).unwrap()] {
            let by_rank = OmegaTable::build(&code, Channel::Bec).unwrap();
            let by_cover = OmegaTable::bec_by_cover_closure(&code).unwrap();
            assert_eq!(by_rank.same_membership(&by_cover), None, "{}", code.name());
        }
    }
}
