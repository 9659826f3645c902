//! Invariant suites over a corpus of small codes, with machine-readable
//! reports and the first counterexample found.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::{derivative_floor, find_threshold, max_derivative, TransitionBound};
use crate::channel::Channel;
use crate::codes::{CodeSpec, LinearCode};
use crate::error::{Error, Result};
use crate::exit_blowup::{self, PairStatsMode};
use crate::gf2::BitVector;
use crate::pattern_sets::{in_omega, covers_nonzero_codeword, OmegaTable, PatternAnalysis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    MargulisRusso,
    Isoperimetric,
    Envelopes,
    ExitIdentities,
    Partition,
    Boundary,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [
        Suite::MargulisRusso,
        Suite::Isoperimetric,
        Suite::Envelopes,
        Suite::ExitIdentities,
        Suite::Partition,
        Suite::Boundary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::MargulisRusso => "margulis_russo",
            Suite::Isoperimetric => "isoperimetric",
            Suite::Envelopes => "envelopes",
            Suite::ExitIdentities => "exit_identities",
            Suite::Partition => "partition",
            Suite::Boundary => "boundary",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .chain(std::iter::once(&Suite::All))
            .find(|x| x.name() == s)
            .copied()
            .ok_or_else(|| Error::Parameter(format!("unknown suite {s:?}")))
    }
}

/// The built-in corpus: rep(2), rep(3), spc(3), spc(5), RM(1,2), RM(1,3),
/// RM(2,4) and three random (10,5) codes.
pub fn small_corpus() -> Vec<CodeSpec> {
    let mut v = vec![
        CodeSpec::Repetition { n: 2 },
        CodeSpec::Repetition { n: 3 },
        CodeSpec::SingleParityCheck { n: 3 },
        CodeSpec::SingleParityCheck { n: 5 },
        CodeSpec::ReedMuller { r: 1, m: 2 },
        CodeSpec::ReedMuller { r: 1, m: 3 },
        CodeSpec::ReedMuller { r: 2, m: 4 },
    ];
    v.extend((1..=3).map(|seed| CodeSpec::RandomLinear { n: 10, k: 5, seed }));
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub code: String,
    pub channel: Option<Channel>,
    pub property: String,
    pub epsilon: Option<f64>,
    pub pattern: Option<String>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: u64,
    /// Largest discrepancy seen for identity-type checks.
    pub max_gap: Option<f64>,
    pub counterexample: Option<Counterexample>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        Self { suite: suite.into(), passed: true, checks: 0, max_gap: None, counterexample: None, notes: Vec::new() }
    }

    fn gap(&mut self, g: f64) {
        self.max_gap = Some(self.max_gap.map_or(g, |m: f64| m.max(g)));
    }

    fn check(&mut self, ok: bool, cx: impl FnOnce() -> Counterexample) {
        self.checks += 1;
        if !ok {
            self.passed = false;
            if self.counterexample.is_none() {
                self.counterexample = Some(cx());
            }
        }
    }
}

fn cx(code: &LinearCode, channel: Option<Channel>, property: &str, epsilon: Option<f64>, pattern: Option<String>, detail: String) -> Counterexample {
    Counterexample { code: code.name().to_string(), channel, property: property.into(), epsilon, pattern, detail }
}

/// Evenly spaced grid of `points` on `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect()
}

/// Tolerances used by the suites.
pub mod tol {
    pub const MARGULIS_RUSSO: f64 = 1e-9;
    pub const INEQUALITY: f64 = 1e-12;
    pub const EXIT: f64 = 1e-12;
    pub const AREA: f64 = 1e-9;
}

const BOTH: [Channel; 2] = [Channel::Bec, Channel::Bsc];

/// `dP/deps` against `(1/eps) int h dmu` at `eps` in `{0.1, ..., 0.9}`, both
/// channels; also the exact coefficient identity in the count basis.
///
/// On the BSC the same polynomial is evaluated past 1/2: the identity is
/// about the measure `mu_eps(Omega)`, which is defined on all of `(0, 1)`.
pub fn margulis_russo_suite(codes: &[LinearCode]) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("margulis_russo");
    let eps_grid: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    for code in codes {
        for channel in BOTH {
            let a = PatternAnalysis::new(code, channel)?;
            let d = a.profile.poly().derivative();
            for (e, &c) in d.coeffs().iter().enumerate() {
                let sum_h: i128 =
                    a.stats.h_hist()[e + 1].iter().enumerate().map(|(h, &n)| h as i128 * n as i128).sum();
                r.check(c == sum_h, || {
                    cx(code, Some(channel), "derivative_coefficient", None, None, format!("weight {}: {c} vs sum h {sum_h}", e + 1))
                });
            }
            for &eps in &eps_grid {
                let lhs = a.profile.measure_derivative(eps)?;
                let rhs = a.margulis_russo_rhs(eps)?;
                let g = (lhs - rhs).abs();
                r.gap(g);
                r.check(g < tol::MARGULIS_RUSSO, || {
                    cx(code, Some(channel), "margulis_russo", Some(eps), None, format!("dP/deps={lhs}, rhs={rhs}"))
                });
            }
        }
    }
    Ok(r)
}

/// `int sqrt(h) dmu >= gamma(mu(Omega)) / sqrt(-2 ln eps)` on an interior
/// grid of `(0, 1)`, BEC.
pub fn isoperimetric_suite(codes: &[LinearCode], points: usize) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("isoperimetric");
    for code in codes {
        let a = PatternAnalysis::new(code, Channel::Bec)?;
        for eps in grid(0.0, 1.0, points + 2).into_iter().skip(1).take(points) {
            let pair = a.isoperimetric(eps)?;
            r.gap((pair.rhs - pair.lhs).max(0.0));
            r.check(pair.lhs >= pair.rhs - tol::INEQUALITY, || {
                cx(code, Some(Channel::Bec), "isoperimetric", Some(eps), None, format!("lhs={} < rhs={}", pair.lhs, pair.rhs))
            });
        }
    }
    Ok(r)
}

/// Boundary structure by exhaustive sweep: monotonicity, unique covered
/// codeword, `h >= d_min`, the Gamma_W property, the BSC witness bound, and
/// agreement of independent membership routes.
pub fn boundary_suite(codes: &[LinearCode]) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("boundary");
    for code in codes {
        for channel in BOTH {
            let a = PatternAnalysis::new(code, channel)?;
            r.checks += a.stats.boundary_patterns();
            if let Some(v) = a.stats.violations().first() {
                r.check(false, || cx(code, Some(channel), &v.property, None, Some(v.pattern.clone()), v.detail.clone()));
            }
            if channel == Channel::Bsc && a.stats.weak_witness_patterns() > 0 {
                r.notes.push(format!(
                    "{}: {} BSC boundary patterns have a non-minimal witness x with h < w(x)/2",
                    code.name(),
                    a.stats.weak_witness_patterns()
                ));
            }
        }
        let closure = OmegaTable::bec_by_cover_closure(code)?;
        let rank = OmegaTable::build(code, Channel::Bec)?;
        let diff = rank.same_membership(&closure);
        r.check(diff.is_none(), || {
            let p = BitVector::from_u64(diff.unwrap_or(0), code.len()).to_string();
            cx(code, Some(Channel::Bec), "rank_vs_cover", None, Some(p), "rank test and covering disagree".into())
        });
        if code.len() <= 12 {
            let coset = OmegaTable::build(code, Channel::Bsc)?;
            for p in 0..1u64 << code.len() {
                let pat = BitVector::from_u64(p, code.len());
                let by_enum = in_omega(code, &pat, Channel::Bsc)?;
                r.check(by_enum == coset.contains(p), || {
                    cx(code, Some(Channel::Bsc), "coset_vs_enumeration", None, Some(pat.to_string()), "coset table and enumeration disagree".into())
                });
                let covers = covers_nonzero_codeword(code, &pat)?;
                r.check(covers == rank.contains(p), || {
                    cx(code, Some(Channel::Bec), "pattern_cover_vs_rank", None, Some(pat.to_string()), "per-pattern routes disagree".into())
                });
            }
        }
    }
    Ok(r)
}

/// Result of sweeping one (code, channel) for the envelope suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSummary {
    pub code: String,
    pub channel: Channel,
    pub eps_star: Option<f64>,
    /// Worst `P - bound` below `eps*` (positive means violated), TZ and refined.
    pub tz_worst: f64,
    pub refined_worst: f64,
    /// Worst `floor - dP/deps` over the grid and all `W`.
    pub differential_worst: f64,
    pub max_derivative: f64,
}

/// Exact curves against TZ and refined bounds for every `W`, and the two
/// differential inequalities, on a `points`-point grid per channel.
/// Endpoints are pulled `1e-9` inside the open channel domain.
pub fn envelope_suite(codes: &[LinearCode], points: usize) -> Result<(SuiteReport, Vec<EnvelopeSummary>)> {
    let mut r = SuiteReport::new("envelopes");
    let mut out = Vec::new();
    for code in codes {
        let spectrum = code.weight_distribution()?;
        let d_min = spectrum.min_distance().unwrap_or(0);
        for channel in BOTH {
            let a = PatternAnalysis::new(code, channel)?;
            let profile = &a.profile;
            let maxd = max_derivative(profile, 1001)?;
            let mut summary = EnvelopeSummary {
                code: code.name().into(),
                channel,
                eps_star: None,
                tz_worst: f64::NEG_INFINITY,
                refined_worst: f64::NEG_INFINITY,
                differential_worst: f64::NEG_INFINITY,
                max_derivative: maxd,
            };
            let limit = 2.0 * (code.len() as f64).sqrt();
            r.check(maxd <= limit, || {
                cx(code, Some(channel), "derivative_magnitude", None, None, format!("max dP/deps={maxd} > 2 sqrt(N)={limit}"))
            });
            let top = channel.max_epsilon();
            let eps_grid: Vec<f64> = grid(0.0, top, points).into_iter().map(|e| e.clamp(1e-9, top - 1e-9)).collect();

            for &eps in &eps_grid {
                let p = profile.measure(eps)?;
                let dp = profile.measure_derivative(eps)?;
                for w in 1..=code.len() {
                    let floor = derivative_floor(channel, &spectrum, w, p, eps)?;
                    summary.differential_worst = summary.differential_worst.max(floor - dp);
                    r.check(dp >= floor - tol::INEQUALITY, || {
                        cx(code, Some(channel), "differential_inequality", Some(eps), None, format!("W={w}: dP/deps={dp} < {floor}"))
                    });
                }
            }

            let eps_star = match find_threshold(profile) {
                Ok(e) => e,
                Err(Error::Bracket(msg)) => {
                    r.notes.push(format!("{} on the {channel}: no threshold in the channel domain ({msg}); envelopes skipped", code.name()));
                    out.push(summary);
                    continue;
                }
                Err(e) => return Err(e),
            };
            summary.eps_star = Some(eps_star);
            if !(eps_star > 0.0 && eps_star < top) {
                r.notes.push(format!("{} on the {channel}: eps*={eps_star} on the domain edge; envelopes skipped", code.name()));
                out.push(summary);
                continue;
            }
            let mut bounds = vec![TransitionBound::tz(channel, d_min, eps_star)];
            for w in 1..=code.len() {
                bounds.push(TransitionBound::refined(channel, spectrum.clone(), w, eps_star)?);
            }
            for &eps in &eps_grid {
                let p = profile.pmap_eval(eps)?;
                for b in &bounds {
                    let v = b.eval(eps)?;
                    let excess = match b.side(eps) {
                        crate::bounds::Side::BelowThreshold => p - v,
                        crate::bounds::Side::AboveThreshold => v - p,
                    };
                    match b.w {
                        None => summary.tz_worst = summary.tz_worst.max(excess),
                        Some(_) => summary.refined_worst = summary.refined_worst.max(excess),
                    }
                    r.check(b.respects(eps, p, tol::INEQUALITY)?, || {
                        let name = b.w.map_or("tz".to_string(), |w| format!("refined_W{w}"));
                        cx(code, Some(channel), &format!("envelope_{name}"), Some(eps), None, format!("P={p}, bound={v}, side={:?}", b.side(eps)))
                    });
                }
            }
            out.push(summary);
        }
    }
    Ok((r, out))
}

/// EXIT identities for every code and every coordinate pair: area theorem,
/// `g'` identity, `Q4` symmetry and the `Q`-identities.
pub fn exit_identities_suite(codes: &[LinearCode]) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("exit_identities");
    for code in codes {
        let report = exit_blowup::identity_suite(code, PairStatsMode::Exact)?;
        r.gap(report.max_gap());
        for failure in report.failures(tol::EXIT, tol::AREA) {
            r.check(false, || cx(code, Some(Channel::Bec), &failure.0, failure.1, None, failure.2.clone()));
        }
        r.checks += report.checks;
    }
    Ok(r)
}

/// Partition checks: classification against coset enumeration, and the
/// boundary containment for every pair when `N <= 14`.
pub fn partition_suite(codes: &[LinearCode]) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("partition");
    for code in codes {
        let n = code.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let mismatch = exit_blowup::classification_cross_check(code, i, j)?;
                r.checks += 1u64 << (n - 2);
                if let Some(p) = mismatch {
                    r.check(false, || cx(code, Some(Channel::Bec), "classification", None, Some(p.to_string()), format!("pair ({i},{j})")));
                }
                if n <= 14 {
                    let c = exit_blowup::boundary_containment_check(code, i, j)?;
                    r.checks += c.boundary_patterns;
                    if let Some(p) = c.counterexample {
                        r.check(false, || cx(code, Some(Channel::Bec), "boundary_containment", None, Some(p.to_string()), format!("pair ({i},{j})")));
                    }
                }
            }
        }
    }
    Ok(r)
}

pub fn run_suite(suite: Suite, codes: &[LinearCode]) -> Result<Vec<SuiteReport>> {
    let one = |s: Suite| -> Result<SuiteReport> {
        match s {
            Suite::MargulisRusso => margulis_russo_suite(codes),
            Suite::Isoperimetric => isoperimetric_suite(codes, 99),
            Suite::Envelopes => Ok(envelope_suite(codes, 101)?.0),
            Suite::ExitIdentities => exit_identities_suite(codes),
            Suite::Partition => partition_suite(codes),
            Suite::Boundary => boundary_suite(codes),
            Suite::All => unreachable!(),
        }
    };
    let guarded = |s: Suite| -> Result<SuiteReport> {
        match one(s) {
            Err(Error::Consistency(msg)) => {
                let mut r = SuiteReport::new(s.name());
                r.check(false, || Counterexample {
                    code: codes.iter().map(|c| c.name()).collect::<Vec<_>>().join(","),
                    channel: None,
                    property: "consistency".into(),
                    epsilon: None,
                    pattern: None,
                    detail: msg,
                });
                Ok(r)
            }
            other => other,
        }
    };
    match suite {
        Suite::All => Suite::EACH.iter().map(|&s| guarded(s)).collect(),
        s => Ok(vec![guarded(s)?]),
    }
}

/// RM(1,3) with its last generator row replaced by the sum of the first two:
/// the declared dimension is 4 but the rows span only 3 dimensions.
pub fn corrupted_fixture() -> LinearCode {
    let good = LinearCode::reed_muller(1, 3).expect("RM(1,3) is valid");
    let g = good.generator();
    let mut rows = g.row_vectors();
    let last = rows.len() - 1;
    rows[last] = rows[0].xor(&rows[1]);
    let bad = crate::gf2::BitMatrix::from_rows(&rows, g.cols()).expect("same shape");
    LinearCode::from_generator_unchecked("rm(1,3)-corrupted", bad)
}
