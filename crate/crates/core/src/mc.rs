//! Deterministic parallel Monte-Carlo estimation.
//!
//! Sample `s` draws its `N` words from ChaCha8 seeded with `seed`, stream
//! `s / stream_stride`, at word offset `(s % stream_stride) * 2N`. Position
//! `t` is set iff its word is below `round(eps * 2^64)`. Every position
//! consumes one word, forced ones included, so sample `s` is the same pattern
//! however the sample range is split between workers, and patterns at two
//! values of `eps` are nested (common random numbers).

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::codes::LinearCode;
use crate::error::{Error, Result};
use crate::gf2::{BitVector, Pattern, XorBasis};
use crate::pattern_sets::{bec_fails_packed, BSC_ENUM_MAX_K};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
pub const DEFAULT_STREAM_STRIDE: u64 = 1 << 20;
const BLOCK: u64 = 1 << 12;
const CODEWORD_TABLE_MAX_K: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    pub samples: u64,
    pub stream_stride: u64,
}

impl McConfig {
    pub fn new(seed: u64, samples: u64) -> Self {
        Self { seed, samples, stream_stride: DEFAULT_STREAM_STRIDE }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Parameter("samples must be at least 1".into()));
        }
        if self.stream_stride == 0 {
            return Err(Error::Parameter("stream_stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: u64,
    pub hits: u64,
}

impl McEstimate {
    pub fn from_counts(hits: u64, samples: u64) -> Self {
        let mean = hits as f64 / samples as f64;
        let (lo, hi) = wilson_interval(hits, samples);
        Self { mean, ci_low: lo.min(mean), ci_high: hi.max(mean), samples, hits }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    /// Binomial standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.mean * (1.0 - self.mean) / self.samples as f64).sqrt()
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Wilson score interval at 95% for `hits` successes out of `n`.
pub fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Word threshold for `eps`: a position is set iff its word is below it.
pub fn word_threshold(eps: f64) -> u128 {
    (eps * 18_446_744_073_709_551_616.0).round() as u128
}

/// Reads the patterns of a contiguous sample range.
struct SampleReader {
    rng: ChaCha8Rng,
    n: usize,
    stride: u64,
    next: u64,
}

impl SampleReader {
    fn at(seed: u64, stride: u64, n: usize, start: u64) -> Self {
        let mut r = Self { rng: ChaCha8Rng::seed_from_u64(seed), n, stride, next: start };
        r.seek(start);
        r
    }

    fn seek(&mut self, s: u64) {
        self.rng.set_stream(s / self.stride);
        self.rng.set_word_pos((s % self.stride) as u128 * 2 * self.n as u128);
        self.next = s;
    }

    /// Raw words of the next sample.
    fn words(&mut self, out: &mut [u64]) {
        if self.next.is_multiple_of(self.stride) {
            self.seek(self.next);
        }
        for w in out.iter_mut() {
            *w = self.rng.next_u64();
        }
        self.next += 1;
    }
}

fn pattern_from_words(words: &[u64], thr: u128, forced_mask: &[u64], out: &mut [u64]) {
    out.iter_mut().for_each(|w| *w = 0);
    for (t, &w) in words.iter().enumerate() {
        if (w as u128) < thr {
            out[t / 64] |= 1 << (t % 64);
        }
    }
    for (o, f) in out.iter_mut().zip(forced_mask) {
        *o |= f;
    }
}

fn forced_mask(n: usize, forced: &[usize]) -> Result<Vec<u64>> {
    let mut mask = vec![0u64; n.div_ceil(64)];
    for &i in forced {
        if i >= n {
            return Err(Error::Parameter(format!("forced index {i} outside 0..{n}")));
        }
        if mask[i / 64] >> (i % 64) & 1 == 1 {
            return Err(Error::Parameter(format!("forced index {i} repeated")));
        }
        mask[i / 64] |= 1 << (i % 64);
    }
    Ok(mask)
}

fn check_eps(eps: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::Domain(format!("epsilon={eps} outside [0,1]")))
    }
}

/// Runs `f` on every sampled pattern (as packed words) and counts `true`.
/// Deterministic in `(cfg.seed, cfg.samples)`; parallel over sample blocks.
pub fn count_hits<F, S>(cfg: &McConfig, n: usize, eps: f64, forced: &[usize], init: impl Fn() -> S + Sync, f: F) -> Result<u64>
where
    F: Fn(&mut S, &[u64]) -> bool + Sync,
{
    Ok(tally(cfg, n, eps, forced, 2, init, |s, p| Ok(f(s, p) as usize))?[1])
}

/// Sorts every sampled pattern into one of `classes` bins with `f`.
pub fn tally<F, S>(
    cfg: &McConfig,
    n: usize,
    eps: f64,
    forced: &[usize],
    classes: usize,
    init: impl Fn() -> S + Sync,
    f: F,
) -> Result<Vec<u64>>
where
    F: Fn(&mut S, &[u64]) -> Result<usize> + Sync,
{
    cfg.validate()?;
    check_eps(eps)?;
    let mask = forced_mask(n, forced)?;
    let thr = word_threshold(eps);
    let blocks = cfg.samples.div_ceil(BLOCK);
    let parts = (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<Vec<u64>> {
            let start = b * BLOCK;
            let end = (start + BLOCK).min(cfg.samples);
            let mut reader = SampleReader::at(cfg.seed, cfg.stream_stride, n, start);
            let mut words = vec![0u64; n];
            let mut pattern = vec![0u64; n.div_ceil(64)];
            let mut state = init();
            let mut bins = vec![0u64; classes];
            for _ in start..end {
                reader.words(&mut words);
                pattern_from_words(&words, thr, &mask, &mut pattern);
                let c = f(&mut state, &pattern)?;
                if c >= classes {
                    return Err(Error::Consistency(format!("class {c} outside 0..{classes}")));
                }
                bins[c] += 1;
            }
            Ok(bins)
        })
        .collect::<Vec<_>>();
    let mut total = vec![0u64; classes];
    for part in parts {
        for (t, b) in total.iter_mut().zip(part?) {
            *t += b;
        }
    }
    Ok(total)
}

#[inline]
pub(crate) fn packed_u128(words: &[u64]) -> u128 {
    let lo = words.first().copied().unwrap_or(0) as u128;
    let hi = words.get(1).copied().unwrap_or(0) as u128;
    lo | hi << 64
}

/// Membership test used per sample.
enum Tester<'a> {
    BecPacked(&'a [u128]),
    BecGeneric(&'a LinearCode),
    BscTable(Vec<u128>),
    BscWalk(&'a [u128]),
}

impl<'a> Tester<'a> {
    fn new(code: &'a LinearCode, channel: Channel) -> Result<Self> {
        match channel {
            Channel::Bec => Ok(match code.rows_u128() {
                Some(rows) => Tester::BecPacked(rows),
                None => Tester::BecGeneric(code),
            }),
            Channel::Bsc => {
                let rows = code.rows_u128().ok_or(Error::Budget {
                    what: "BSC Monte-Carlo length",
                    needed: code.len(),
                    limit: 128,
                })?;
                if code.dimension() > BSC_ENUM_MAX_K {
                    return Err(Error::Budget {
                        what: "BSC codeword enumeration dimension",
                        needed: code.dimension(),
                        limit: BSC_ENUM_MAX_K,
                    });
                }
                if code.dimension() <= CODEWORD_TABLE_MAX_K {
                    let words = code.codewords_u128(CODEWORD_TABLE_MAX_K)?;
                    Ok(Tester::BscTable(words.into_iter().filter(|&c| c != 0).collect()))
                } else {
                    Ok(Tester::BscWalk(rows))
                }
            }
        }
    }

    fn fails(&self, basis: &mut XorBasis, n: usize, words: &[u64]) -> bool {
        match self {
            Tester::BecPacked(rows) => bec_fails_packed(rows, packed_u128(words), n, basis),
            Tester::BecGeneric(code) => {
                let keep: Vec<usize> = (0..n).filter(|&c| words[c / 64] >> (c % 64) & 1 == 0).collect();
                code.generator().select_columns(&keep).rank() < code.dimension()
            }
            Tester::BscTable(cws) => {
                let w = packed_u128(words);
                let wt = w.count_ones();
                cws.iter().any(|&c| (w ^ c).count_ones() < wt)
            }
            Tester::BscWalk(rows) => {
                let w = packed_u128(words);
                let wt = w.count_ones();
                let mut cw = 0u128;
                (1u64..1u64 << rows.len()).any(|t| {
                    cw ^= rows[t.trailing_zeros() as usize];
                    cw != 0 && (w ^ cw).count_ones() < wt
                })
            }
        }
    }
}

/// Monte-Carlo estimate of `P_MAP(eps)` with a 95% Wilson interval.
pub fn estimate_pmap(code: &LinearCode, eps: f64, channel: Channel, cfg: &McConfig) -> Result<McEstimate> {
    channel.check_epsilon(eps)?;
    let tester = Tester::new(code, channel)?;
    let n = code.len();
    let k = code.dimension();
    let hits = count_hits(cfg, n, eps, &[], || XorBasis::with_capacity(k), |basis, p| tester.fails(basis, n, p))?;
    Ok(McEstimate::from_counts(hits, cfg.samples))
}

/// Patterns with `forced` positions set and the rest i.i.d. Bernoulli(`eps`).
pub fn sample_conditioned(n: usize, forced: &[usize], eps: f64, cfg: &McConfig) -> Result<ConditionedSamples> {
    cfg.validate()?;
    check_eps(eps)?;
    let mask = forced_mask(n, forced)?;
    Ok(ConditionedSamples {
        reader: SampleReader::at(cfg.seed, cfg.stream_stride, n, 0),
        remaining: cfg.samples,
        thr: word_threshold(eps),
        mask,
        words: vec![0; n],
    })
}

pub struct ConditionedSamples {
    reader: SampleReader,
    remaining: u64,
    thr: u128,
    mask: Vec<u64>,
    words: Vec<u64>,
}

impl Iterator for ConditionedSamples {
    type Item = Pattern;

    fn next(&mut self) -> Option<Pattern> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let n = self.words.len();
        self.reader.words(&mut self.words);
        let mut packed = vec![0u64; n.div_ceil(64)];
        pattern_from_words(&self.words, self.thr, &self.mask, &mut packed);
        let mut out = BitVector::zeros(n);
        for t in 0..n {
            if packed[t / 64] >> (t % 64) & 1 == 1 {
                out.set(t, true);
            }
        }
        Some(out)
    }
}

/// Monte-Carlo error curve over all `eps` at once.
///
/// For each sample the smallest word threshold at which its pattern fails is
/// stored; `eval(eps)` then counts exactly the samples that
/// [`estimate_pmap`] would count with the same config.
#[derive(Clone, Debug)]
pub struct McCurve {
    channel: Channel,
    samples: u64,
    critical: Vec<u128>,
}

impl McCurve {
    pub fn build(code: &LinearCode, channel: Channel, cfg: &McConfig) -> Result<Self> {
        cfg.validate()?;
        code.rows_u128().ok_or(Error::Budget { what: "Monte-Carlo curve length", needed: code.len(), limit: 128 })?;
        let tester = Tester::new(code, channel)?;
        let n = code.len();
        let k = code.dimension();
        let blocks = cfg.samples.div_ceil(BLOCK);
        let mut critical: Vec<u128> = (0..blocks)
            .into_par_iter()
            .flat_map_iter(|b| {
                let start = b * BLOCK;
                let end = (start + BLOCK).min(cfg.samples);
                let mut reader = SampleReader::at(cfg.seed, cfg.stream_stride, n, start);
                let mut words = vec![0u64; n];
                let mut basis = XorBasis::with_capacity(k);
                let mut out = Vec::with_capacity((end - start) as usize);
                for _ in start..end {
                    reader.words(&mut words);
                    out.push(critical_threshold(&tester, &mut basis, &words));
                }
                out
            })
            .collect();
        critical.sort_unstable();
        Ok(Self { channel, samples: cfg.samples, critical })
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn eval(&self, eps: f64) -> Result<McEstimate> {
        self.channel.check_epsilon(eps)?;
        let thr = word_threshold(eps);
        let hits = self.critical.partition_point(|&c| c <= thr) as u64;
        Ok(McEstimate::from_counts(hits, self.samples))
    }
}

/// Smallest `thr` such that `{t : word_t < thr}` fails: binary search over
/// the sorted words, valid because the failure set is monotone. Samples that
/// never fail get `u128::MAX`.
fn critical_threshold(tester: &Tester<'_>, basis: &mut XorBasis, words: &[u64]) -> u128 {
    let n = words.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by_key(|&t| words[t]);
    let set_at = |m: usize| -> [u64; 2] {
        // All positions whose word is at most the m-th smallest.
        let cut = words[order[m]];
        let mut p = [0u64; 2];
        for (t, &w) in words.iter().enumerate() {
            if w <= cut {
                p[t / 64] |= 1 << (t % 64);
            }
        }
        p
    };
    if !tester.fails(basis, n, &set_at(n - 1)) {
        return u128::MAX;
    }
    let (mut lo, mut hi) = (0usize, n - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if tester.fails(basis, n, &set_at(mid)) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    words[order[lo]] as u128 + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_edges() {
        let e = McEstimate::from_counts(0, 100);
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.ci_low, 0.0);
        assert!(e.ci_high > 0.0 && e.ci_high < 0.05);
        let e = McEstimate::from_counts(100, 100);
        assert_eq!(e.ci_high, 1.0);
        let e = McEstimate::from_counts(37, 100);
        assert!(e.ci_low < 0.37 && 0.37 < e.ci_high);
    }

    #[test]
    fn thresholds_at_edges() {
        assert_eq!(word_threshold(0.0), 0);
        assert!(word_threshold(1.0) > u64::MAX as u128);
    }

    #[test]
    fn eps_zero_gives_zero() {
        let code = LinearCode::repetition(3).unwrap();
        let e = estimate_pmap(&code, 0.0, Channel::Bec, &McConfig::new(1, 1000)).unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.ci_low, 0.0);
    }

    #[test]
    fn conditioned_examples() {
        let cfg = McConfig::new(5, 10);
        for p in sample_conditioned(2, &[0, 1], 0.3, &cfg).unwrap() {
            assert_eq!(p.to_string(), "11");
        }
        for p in sample_conditioned(4, &[], 1.0, &cfg).unwrap() {
            assert_eq!(p.weight(), 4);
        }
        assert!(sample_conditioned(3, &[3], 0.5, &cfg).is_err());
        assert!(sample_conditioned(3, &[1, 1], 0.5, &cfg).is_err());
    }

    #[test]
    fn curve_matches_pointwise_estimates() {
        let code = LinearCode::reed_muller(1, 3).unwrap();
        let cfg = McConfig::new(11, 5000);
        let curve = McCurve::build(&code, Channel::Bec, &cfg).unwrap();
        for k in 0..=20 {
            let eps = k as f64 / 20.0;
            assert_eq!(curve.eval(eps).unwrap(), estimate_pmap(&code, eps, Channel::Bec, &cfg).unwrap(), "eps={eps}");
        }
        let bsc = McCurve::build(&code, Channel::Bsc, &cfg).unwrap();
        for k in 0..=10 {
            let eps = k as f64 / 20.0;
            assert_eq!(bsc.eval(eps).unwrap(), estimate_pmap(&code, eps, Channel::Bsc, &cfg).unwrap());
        }
    }
}
