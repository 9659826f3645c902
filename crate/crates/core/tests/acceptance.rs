//! Acceptance criteria. One PASS/FAIL line per criterion; exits non-zero if
//! any criterion fails.

use std::time::{Duration, Instant};

use threshold_lab::bounds::{find_threshold, rm_decay_report, transition_width};
use threshold_lab::mc::{estimate_pmap, McConfig, McCurve};
use threshold_lab::pattern_sets::{failure_profile, isoperimetric_lhs};
use threshold_lab::verify::{self, tol};
use threshold_lab::{Channel, LinearCode, Result};

const THRESHOLD_TOL: f64 = 1e-10;
const ISO_HAND_TOL: f64 = 5e-6;
const MC_SIGMAS: f64 = 3.0;
const MC_SAMPLES: u64 = 100_000;
const MC_SEED: u64 = 20_240_601;
const COVERAGE_SEEDS: u64 = 200;
const COVERAGE_SAMPLES: u64 = 1_000;
const COVERAGE_EPS: f64 = 0.5;
const COVERAGE_RANGE: (f64, f64) = (0.90, 0.99);
const SCALING_DELTA: f64 = 0.25;

type Criterion = (&'static str, Duration, fn() -> Result<Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn corpus() -> Vec<LinearCode> {
    verify::small_corpus().iter().map(|s| s.build().expect("corpus code")).collect()
}

fn timed(limit: Duration, f: impl FnOnce() -> Result<Outcome>) -> Outcome {
    let start = Instant::now();
    let out = f().unwrap_or_else(|e| Outcome { pass: false, detail: format!("error: {e}") });
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    Outcome {
        pass: out.pass && in_time,
        detail: format!("{} [{:.2?}, limit {:?}{}]", out.detail, elapsed, limit, if in_time { "" } else { ", EXCEEDED" }),
    }
}

fn suite_outcome(r: &verify::SuiteReport) -> String {
    let mut s = format!("{}: {} checks, max gap {:?}", r.suite, r.checks, r.max_gap);
    if let Some(c) = &r.counterexample {
        s += &format!(", counterexample {c:?}");
    }
    s
}

fn closed_forms() -> Result<Outcome> {
    let rep3 = LinearCode::repetition(3)?;
    let spc3 = LinearCode::single_parity_check(3)?;
    let mut pass = true;
    let mut notes = Vec::new();
    let p = failure_profile(&rep3, Channel::Bec)?;
    let t = find_threshold(&p)?;
    let want = 2f64.powf(-1.0 / 3.0);
    pass &= p.f == [0, 0, 0, 1] && (t - want).abs() <= THRESHOLD_TOL;
    notes.push(format!("rep3 bec f={:?} eps*={t}", p.f));
    for ch in [Channel::Bec, Channel::Bsc] {
        let p = failure_profile(&spc3, ch)?;
        let t = find_threshold(&p)?;
        pass &= p.f == [0, 0, 3, 1] && (t - 0.5).abs() <= THRESHOLD_TOL;
        notes.push(format!("spc3 {ch} f={:?} eps*={t}", p.f));
    }
    Ok(Outcome { pass, detail: notes.join("; ") })
}

fn spectra() -> Result<Outcome> {
    let rm13 = LinearCode::reed_muller(1, 3)?;
    let s = rm13.weight_distribution()?;
    let want = [1, 0, 0, 0, 14, 0, 0, 0, 1];
    let fixed = s.macwilliams_transform(rm13.dimension())? == s;
    let rm25 = LinearCode::reed_muller(2, 5)?;
    let d = rm25.weight_distribution()?.min_distance();
    Ok(Outcome {
        pass: s.counts() == want && fixed && d == Some(8),
        detail: format!("rm(1,3) {:?}, MacWilliams fixed {fixed}, rm(2,5) d_min {d:?}", s.counts()),
    })
}

fn margulis_russo() -> Result<Outcome> {
    let r = verify::margulis_russo_suite(&corpus())?;
    let gap_ok = r.max_gap.is_some_and(|g| g < tol::MARGULIS_RUSSO);
    Ok(Outcome { pass: r.passed && gap_ok, detail: suite_outcome(&r) })
}

fn isoperimetric() -> Result<Outcome> {
    let r = verify::isoperimetric_suite(&corpus(), 99)?;
    let hand = isoperimetric_lhs(&LinearCode::single_parity_check(3)?, 0.5)?;
    let hand_ok = (hand.lhs - 0.53033).abs() < ISO_HAND_TOL && (hand.rhs - 0.33883).abs() < ISO_HAND_TOL && hand.lhs >= hand.rhs;
    Ok(Outcome {
        pass: r.passed && hand_ok,
        detail: format!("{}; spc3 eps=0.5: {:.5} >= {:.5}", suite_outcome(&r), hand.lhs, hand.rhs),
    })
}

fn boundary() -> Result<Outcome> {
    let codes: Vec<LinearCode> = corpus().into_iter().filter(|c| c.len() <= 14).collect();
    let r = verify::boundary_suite(&codes)?;
    let mut detail = suite_outcome(&r);
    for n in &r.notes {
        detail += &format!("; {n}");
    }
    Ok(Outcome { pass: r.passed, detail })
}

fn envelopes() -> Result<Outcome> {
    let (r, _) = verify::envelope_suite(&corpus(), 101)?;
    let mut detail = suite_outcome(&r);
    for n in &r.notes {
        detail += &format!("; {n}");
    }
    Ok(Outcome { pass: r.passed, detail })
}

fn exit() -> Result<Outcome> {
    let codes = corpus();
    let a = verify::exit_identities_suite(&codes)?;
    let b = verify::partition_suite(&codes)?;
    let gap_ok = a.max_gap.is_some_and(|g| g <= tol::EXIT);
    Ok(Outcome { pass: a.passed && b.passed && gap_ok, detail: format!("{}; {}", suite_outcome(&a), suite_outcome(&b)) })
}

fn monte_carlo() -> Result<Outcome> {
    let rm = LinearCode::reed_muller(1, 3)?;
    let exact = failure_profile(&rm, Channel::Bec)?;
    let cfg = McConfig::new(MC_SEED, MC_SAMPLES);
    let mut worst: f64 = 0.0;
    let mut within = true;
    for k in 0..=20 {
        let eps = k as f64 / 20.0;
        let p = exact.pmap_eval(eps)?;
        let est = estimate_pmap(&rm, eps, Channel::Bec, &cfg)?;
        let sigma = (p * (1.0 - p) / MC_SAMPLES as f64).sqrt();
        let dev = (est.mean - p).abs();
        within &= dev <= MC_SIGMAS * sigma;
        if sigma > 0.0 {
            worst = worst.max(dev / sigma);
        }
    }
    let rep3 = LinearCode::repetition(3)?;
    let truth = COVERAGE_EPS.powi(3);
    let covered = (0..COVERAGE_SEEDS)
        .map(|s| estimate_pmap(&rep3, COVERAGE_EPS, Channel::Bec, &McConfig::new(s, COVERAGE_SAMPLES)).map(|e| e.contains(truth) as u64))
        .sum::<Result<u64>>()?;
    let rate = covered as f64 / COVERAGE_SEEDS as f64;
    let cov_ok = rate >= COVERAGE_RANGE.0 && rate <= COVERAGE_RANGE.1;
    Ok(Outcome {
        pass: within && cov_ok,
        detail: format!("rm(1,3) 21 points, worst |dev|/sigma {worst:.3}; rep3 coverage {rate:.3}"),
    })
}

fn scaling() -> Result<Outcome> {
    let rm13 = LinearCode::reed_muller(1, 3)?;
    let mut rows = vec![(8usize, transition_width(&failure_profile(&rm13, Channel::Bec)?, SCALING_DELTA)?.width)];
    for (r, m) in [(2, 5), (3, 7)] {
        let code = LinearCode::reed_muller(r, m)?;
        let curve = McCurve::build(&code, Channel::Bec, &McConfig::new(MC_SEED, MC_SAMPLES))?;
        rows.push((code.len(), transition_width(&curve, SCALING_DELTA)?.width));
    }
    let decreasing = rows.windows(2).all(|w| w[1].1 < w[0].1);
    let xs: Vec<f64> = rows.iter().map(|r| (r.0 as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let table: Vec<String> = rows.iter().map(|(n, w)| format!("N={n} width={w:.5}")).collect();
    Ok(Outcome { pass: decreasing, detail: format!("{}; log-log slope {slope:.3}", table.join(", ")) })
}

fn decay() -> Result<Outcome> {
    let specs = [(1, 3), (2, 4), (2, 5)]
        .iter()
        .map(|&(r, m)| {
            let c = LinearCode::reed_muller(r, m)?;
            Ok((c.name().to_string(), c.weight_distribution()?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pass = true;
    let mut cells = Vec::new();
    for z in [0.3, 0.5] {
        for row in rm_decay_report(&specs, 0.25, z)? {
            pass &= row.sqrt_w_a_wz.is_finite() && row.sqrt_w_a_wz > 0.0;
            cells.push(format!("{} z={z} W={} sqrtW*A={:.4e}", row.code, row.w, row.sqrt_w_a_wz));
        }
    }
    Ok(Outcome { pass, detail: cells.join(", ") })
}

fn main() {
    let s = Duration::from_secs;
    let criteria: [Criterion; 10] = [
        ("closed-form curves", s(1), closed_forms),
        ("weight spectra", s(10), spectra),
        ("margulis-russo", s(60), margulis_russo),
        ("isoperimetric inequality", s(60), isoperimetric),
        ("boundary structure", s(60), boundary),
        ("envelopes", s(300), envelopes),
        ("exit identities", s(300), exit),
        ("monte-carlo consistency", s(300), monte_carlo),
        ("scaling study", s(600), scaling),
        ("decay diagnostic", s(60), decay),
    ];
    let mut failed = 0;
    for (k, (name, limit, f)) in criteria.iter().enumerate() {
        let out = timed(*limit, f);
        if !out.pass {
            failed += 1;
        }
        println!("{} criterion {} ({name}): {}", if out.pass { "PASS" } else { "FAIL" }, k + 1, out.detail);
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
