//! Subcommand execution and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use threshold_lab::bounds::{find_threshold, transition_width, ErrorCurve, TransitionBound};
use threshold_lab::exit_blowup::{self, PairStatsMode};
use threshold_lab::mc::{McConfig, McCurve};
use threshold_lab::pattern_sets::{failure_profile, FailureProfile};
use threshold_lab::poly::binomial;
use threshold_lab::verify::{self, Suite};
use threshold_lab::{Channel, CodeSpec, LinearCode};

use crate::config::{parse_suite, BoundArg, ExperimentConfig, InfoArgs, Mode, RunArgs, VerifyArgs};
use crate::error::{CliError, CliResult};
use crate::schema::{
    to_json, write_csv, BoundRow, CurveRow, ExitRow, Manifest, PartitionRow, ProfileRow, VerifyDocument, WeightRow,
    WidthDocument,
};

/// Offset from the open-domain endpoints for bound formulas.
pub const BOUND_CLAMP: f64 = 1e-9;

/// Output directory; the manifest is written before any data file.
pub struct Output {
    dir: PathBuf,
    manifest: Manifest,
}

impl Output {
    pub fn start(dir: &Path, command: &str, config: &impl Serialize, seeds: Vec<u64>) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let manifest = Manifest {
            tool: "threshold-lab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            status: "started".into(),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            threads: rayon::current_num_threads(),
            config: serde_json::to_value(config).map_err(|e| CliError::Other(e.to_string()))?,
            seeds,
            files: Vec::new(),
        };
        let out = Output { dir: dir.to_path_buf(), manifest };
        out.write_manifest()?;
        Ok(out)
    }

    fn write_manifest(&self) -> CliResult<()> {
        let path = self.dir.join("manifest.json");
        fs::write(&path, to_json(&self.manifest)).map_err(|e| CliError::io(path, e))
    }

    fn record(&mut self, name: &str) -> CliResult<PathBuf> {
        self.manifest.files.push(name.into());
        self.write_manifest()?;
        Ok(self.dir.join(name))
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> CliResult<PathBuf> {
        let path = self.record(name)?;
        let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        write_csv(std::io::BufWriter::new(file), rows)
            .map_err(|e| CliError::io(&path, std::io::Error::other(e)))?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let path = self.record(name)?;
        fs::write(&path, to_json(value)).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.manifest.status = "complete".into();
        self.write_manifest()
    }
}

#[derive(Serialize)]
struct InfoDocument {
    code: String,
    n: usize,
    k: usize,
    rate: f64,
    d_min: Option<usize>,
    exhaustive: bool,
}

pub fn info(a: &InfoArgs) -> CliResult<String> {
    let spec: CodeSpec = a.code.parse().map_err(|e| CliError::Parse(format!("code descriptor: {e}")))?;
    let code = spec.build().map_err(|e| CliError::Parse(format!("code descriptor {:?}: {e}", a.code)))?;
    let d_min = code.weight_distribution().ok().and_then(|s| s.min_distance());
    Ok(to_json(&InfoDocument {
        code: code.name().into(),
        n: code.len(),
        k: code.dimension(),
        rate: code.rate(),
        d_min,
        exhaustive: code.len() <= threshold_lab::pattern_sets::EXHAUSTIVE_MAX_N,
    }))
}

/// Either exact curve; dispatches `ErrorCurve` over both kinds.
enum Curve {
    Exact(FailureProfile),
    Mc(McCurve),
}

impl Curve {
    fn build(code: &LinearCode, cfg: &ExperimentConfig) -> CliResult<Self> {
        Ok(match cfg.mode {
            Mode::Exact => Curve::Exact(failure_profile(code, cfg.channel)?),
            _ => Curve::Mc(McCurve::build(code, cfg.channel, &mc_config(cfg))?),
        })
    }

    fn as_dyn(&self) -> &dyn ErrorCurve {
        match self {
            Curve::Exact(p) => p,
            Curve::Mc(c) => c,
        }
    }

    fn rows(&self, code: &LinearCode, cfg: &ExperimentConfig) -> CliResult<Vec<CurveRow>> {
        cfg.grid
            .values()
            .into_iter()
            .map(|eps| {
                let base = CurveRow {
                    code: code.name().into(),
                    channel: cfg.channel,
                    mode: cfg.mode_label().into(),
                    epsilon: eps,
                    p_map: 0.0,
                    ci_low: None,
                    ci_high: None,
                    derivative: None,
                    samples: None,
                    seed: None,
                };
                Ok(match self {
                    Curve::Exact(p) => {
                        CurveRow { p_map: p.pmap_eval(eps)?, derivative: Some(p.pmap_derivative(eps)?), ..base }
                    }
                    Curve::Mc(c) => {
                        let e = c.eval(eps)?;
                        CurveRow {
                            p_map: e.mean,
                            ci_low: Some(e.ci_low),
                            ci_high: Some(e.ci_high),
                            samples: Some(e.samples),
                            seed: Some(cfg.seed),
                            ..base
                        }
                    }
                })
            })
            .collect()
    }
}

fn mc_config(cfg: &ExperimentConfig) -> McConfig {
    McConfig::new(cfg.seed, cfg.samples)
}

fn seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    if cfg.mode == Mode::Exact {
        Vec::new()
    } else {
        vec![cfg.seed]
    }
}

fn profile_rows(p: &FailureProfile) -> Vec<ProfileRow> {
    (0..=p.n)
        .map(|e| ProfileRow {
            code: p.code.clone(),
            channel: p.channel,
            n: p.n,
            k: p.k,
            weight: e,
            f: p.f[e],
            f_ties: p.f_ties[e],
            patterns: binomial(p.n, e),
        })
        .collect()
}

fn width_document(code: &LinearCode, cfg: &ExperimentConfig, curve: &Curve, deltas: &[f64]) -> CliResult<WidthDocument> {
    let c = curve.as_dyn();
    let eps_star = find_threshold(c)?;
    let widths = deltas.iter().map(|&d| transition_width(c, d)).collect::<threshold_lab::Result<Vec<_>>>()?;
    let mc = cfg.mode != Mode::Exact;
    Ok(WidthDocument {
        code: code.name().into(),
        channel: cfg.channel,
        mode: cfg.mode_label().into(),
        samples: mc.then_some(cfg.samples),
        seed: mc.then_some(cfg.seed),
        eps_star,
        widths,
    })
}

pub fn weights(a: &RunArgs) -> CliResult<String> {
    let (cfg, code) = ExperimentConfig::from_args("weights", a)?;
    let spectrum = code.weight_distribution()?;
    let rows: Vec<WeightRow> = spectrum
        .counts()
        .iter()
        .enumerate()
        .map(|(w, &count)| WeightRow { code: code.name().into(), n: code.len(), k: code.dimension(), weight: w, count })
        .collect();
    let mut out = Output::start(&cfg.out, "weights", &cfg, Vec::new())?;
    out.csv("weights.csv", &rows)?;
    out.finish()?;
    Ok(format!("{}: d_min={:?}\n", code.name(), spectrum.min_distance()))
}

pub fn curve(a: &RunArgs) -> CliResult<String> {
    let (cfg, code) = ExperimentConfig::from_args("curve", a)?;
    let curve = Curve::build(&code, &cfg)?;
    let rows = curve.rows(&code, &cfg)?;
    let width = if cfg.delta.is_empty() { None } else { Some(width_document(&code, &cfg, &curve, &cfg.delta)?) };
    let mut out = Output::start(&cfg.out, "curve", &cfg, seeds(&cfg))?;
    out.csv("curve.csv", &rows)?;
    if let Curve::Exact(p) = &curve {
        out.csv("profile.csv", &profile_rows(p))?;
    }
    let mut msg = format!("{}: {} curve points ({})\n", code.name(), rows.len(), cfg.mode_label());
    if let Some(w) = width {
        for r in &w.widths {
            msg += &format!("delta={} width={:.6}\n", r.delta, r.width);
        }
        out.json("width.json", &w)?;
    }
    out.finish()?;
    Ok(msg)
}

pub fn width(a: &RunArgs) -> CliResult<String> {
    let (cfg, code) = ExperimentConfig::from_args("width", a)?;
    let deltas = if cfg.delta.is_empty() { vec![0.25] } else { cfg.delta.clone() };
    let curve = Curve::build(&code, &cfg)?;
    let doc = width_document(&code, &cfg, &curve, &deltas)?;
    let mut out = Output::start(&cfg.out, "width", &cfg, seeds(&cfg))?;
    out.json("width.json", &doc)?;
    out.finish()?;
    Ok(doc.widths.iter().map(|r| format!("{}: delta={} width={:.6}\n", code.name(), r.delta, r.width)).collect())
}

pub fn bounds(a: &RunArgs) -> CliResult<String> {
    let (cfg, code) = ExperimentConfig::from_args("bounds", a)?;
    let spectrum = code.weight_distribution()?;
    let d_min = spectrum
        .min_distance()
        .ok_or_else(|| CliError::Parse(format!("{} has no nonzero codeword", code.name())))?;
    let curve = Curve::build(&code, &cfg)?;
    let eps_star = find_threshold(curve.as_dyn())?;
    let ws = if cfg.w.is_empty() { vec![d_min] } else { cfg.w.clone() };
    let mut kinds: Vec<TransitionBound> = Vec::new();
    for b in &cfg.bounds {
        match b {
            BoundArg::Tz => kinds.push(TransitionBound::tz(cfg.channel, d_min, eps_star)),
            BoundArg::Refined => {
                for &w in &ws {
                    kinds.push(TransitionBound::refined(cfg.channel, spectrum.clone(), w, eps_star)?);
                }
            }
        }
    }
    let top = cfg.channel.max_epsilon();
    let curve_rows = curve.rows(&code, &cfg)?;
    let mut rows = Vec::new();
    let mut violations = 0;
    for cr in &curve_rows {
        let eps_eval = cr.epsilon.clamp(BOUND_CLAMP, top - BOUND_CLAMP);
        let p_eval = curve.as_dyn().value(eps_eval)?;
        for b in &kinds {
            let raw = b.eval_raw(eps_eval).ok();
            let respects = b.respects(eps_eval, p_eval, 1e-12).ok();
            violations += (respects == Some(false)) as usize;
            rows.push(BoundRow {
                code: code.name().into(),
                channel: cfg.channel,
                mode: cfg.mode_label().into(),
                epsilon: cr.epsilon,
                epsilon_eval: eps_eval,
                p_map: cr.p_map,
                eps_star,
                side: b.side(eps_eval).label().into(),
                kind: match b.w {
                    None => "tz".into(),
                    Some(_) => "refined".into(),
                },
                w: b.w,
                bound: raw.map(|v| v.clamp(0.0, 1.0)),
                bound_raw: raw,
                respects,
            });
        }
    }
    let mut out = Output::start(&cfg.out, "bounds", &cfg, seeds(&cfg))?;
    out.csv("curve.csv", &curve_rows)?;
    out.csv("bounds.csv", &rows)?;
    out.finish()?;
    Ok(format!("{}: eps*={eps_star:.10}, {} bound rows, {violations} outside their bound\n", code.name(), rows.len()))
}

fn require_bec(cfg: &ExperimentConfig, what: &str) -> CliResult<()> {
    if cfg.channel != Channel::Bec {
        return Err(CliError::Parse(format!("{what} is defined for the bec only")));
    }
    Ok(())
}

fn pair_mode(cfg: &ExperimentConfig) -> PairStatsMode {
    match cfg.mode {
        Mode::Exact => PairStatsMode::Exact,
        _ => PairStatsMode::Mc(mc_config(cfg)),
    }
}

pub fn exit(a: &RunArgs) -> CliResult<String> {
    let (cfg, code) = ExperimentConfig::from_args("exit", a)?;
    require_bec(&cfg, "the EXIT function")?;
    let n = code.len() as f64;
    let rows: Vec<ExitRow> = match cfg.mode {
        Mode::Exact => {
            let profile = exit_blowup::exit_function_poly(&code)?;
            let (_, mi_sum) = exit_blowup::exit_derivative_polys(&code)?;
            cfg.grid
                .values()
                .into_iter()
                .map(|eps| ExitRow {
                    code: code.name().into(),
                    mode: "exact".into(),
                    epsilon: eps,
                    exit: profile.g(eps),
                    exit_derivative: Some(profile.g_prime(eps)),
                    pair_mi_mean: Some(mi_sum.eval(eps) / n),
                    samples: None,
                    seed: None,
                })
                .collect()
        }
        _ => {
            let mode = pair_mode(&cfg);
            cfg.grid
                .values()
                .into_iter()
                .map(|eps| {
                    Ok(ExitRow {
                        code: code.name().into(),
                        mode: "mc".into(),
                        epsilon: eps,
                        exit: exit_blowup::exit_function(&code, eps, &mode)?,
                        exit_derivative: None,
                        pair_mi_mean: None,
                        samples: Some(cfg.samples),
                        seed: Some(cfg.seed),
                    })
                })
                .collect::<CliResult<_>>()?
        }
    };
    let mut out = Output::start(&cfg.out, "exit", &cfg, seeds(&cfg))?;
    out.csv("exit.csv", &rows)?;
    out.finish()?;
    Ok(format!("{}: {} EXIT points ({})\n", code.name(), rows.len(), cfg.mode_label()))
}

pub fn partition(a: &RunArgs) -> CliResult<String> {
    let (cfg, code) = ExperimentConfig::from_args("partition", a)?;
    require_bec(&cfg, "the pair partition")?;
    let (i, j) = cfg.pair;
    let mode = pair_mode(&cfg);
    let rows = match &mode {
        PairStatsMode::Exact => {
            let polys = exit_blowup::pair_class_polys(&code, i, j)?;
            cfg.grid.values().into_iter().map(|eps| partition_row(&code, &cfg, eps, polys.eval(eps))).collect()
        }
        PairStatsMode::Mc(_) => cfg
            .grid
            .values()
            .into_iter()
            .map(|eps| Ok(partition_row(&code, &cfg, eps, exit_blowup::partition_stats(&code, i, j, eps, &mode)?.q)))
            .collect::<CliResult<Vec<_>>>()?,
    };
    let mut out = Output::start(&cfg.out, "partition", &cfg, seeds(&cfg))?;
    out.csv("partition.csv", &rows)?;
    out.finish()?;
    Ok(format!("{}: pair ({i},{j}), {} points ({})\n", code.name(), rows.len(), cfg.mode_label()))
}

fn partition_row(code: &LinearCode, cfg: &ExperimentConfig, eps: f64, q: [f64; 5]) -> PartitionRow {
    let eta = q[1] + q[2] + q[3];
    let mc = cfg.mode != Mode::Exact;
    PartitionRow {
        code: code.name().into(),
        i: cfg.pair.0,
        j: cfg.pair.1,
        mode: cfg.mode_label().into(),
        epsilon: eps,
        q1: q[0],
        q2: q[1],
        q3: q[2],
        q4: q[3],
        q5: q[4],
        eta,
        alpha: if eta > 0.0 { q[3] / eta } else { 0.0 },
        mi: q[3],
        samples: mc.then_some(cfg.samples),
        seed: mc.then_some(cfg.seed),
    }
}

#[derive(Serialize)]
struct VerifyConfig<'a> {
    suite: &'a str,
    codes: &'a [String],
}

/// Runs a suite; the JSON report is returned even when it failed.
pub fn verify(a: &VerifyArgs) -> CliResult<(String, bool)> {
    let suite: Suite = parse_suite(&a.suite)?;
    let mut codes: Vec<LinearCode> = if a.codes.is_empty() {
        verify::small_corpus().iter().map(|s| s.build()).collect::<threshold_lab::Result<_>>()?
    } else {
        a.codes
            .iter()
            .map(|d| {
                d.parse::<CodeSpec>()
                    .and_then(|s| s.build())
                    .map_err(|e| CliError::Parse(format!("code descriptor {d:?}: {e}")))
            })
            .collect::<CliResult<_>>()?
    };
    if a.corrupted_fixture {
        codes.push(verify::corrupted_fixture());
    }
    let names: Vec<String> = codes.iter().map(|c| c.name().to_string()).collect();
    let reports = verify::run_suite(suite, &codes)?;
    let doc = VerifyDocument { suite: suite.name().into(), passed: reports.iter().all(|r| r.passed), codes: names, reports };
    if let Some(dir) = &a.out {
        let mut out = Output::start(dir, "verify", &VerifyConfig { suite: suite.name(), codes: &doc.codes }, Vec::new())?;
        out.json("verify.json", &doc)?;
        out.finish()?;
    }
    Ok((to_json(&doc), doc.passed))
}
