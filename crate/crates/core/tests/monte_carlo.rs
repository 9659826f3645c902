use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use threshold_lab::mc::{estimate_pmap, sample_conditioned, McConfig, McCurve};
use threshold_lab::pattern_sets::failure_profile;
use threshold_lab::{Channel, LinearCode};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let code = LinearCode::reed_muller(1, 4).unwrap();
    let cfg = McConfig::new(99, 30_000);
    for channel in [Channel::Bec, Channel::Bsc] {
        let eps = channel.max_epsilon() * 0.6;
        let runs: Vec<_> = [1, 2, 8].iter().map(|&t| in_pool(t, || estimate_pmap(&code, eps, channel, &cfg).unwrap())).collect();
        assert!(runs.windows(2).all(|w| w[0] == w[1]), "{channel}: {runs:?}");
        let curves: Vec<_> = [1, 2, 8].iter().map(|&t| in_pool(t, || McCurve::build(&code, channel, &cfg).unwrap().eval(eps).unwrap())).collect();
        assert!(curves.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(curves[0], runs[0]);
    }
}

#[test]
fn different_seeds_differ() {
    let code = LinearCode::reed_muller(1, 4).unwrap();
    let a = estimate_pmap(&code, 0.5, Channel::Bec, &McConfig::new(1, 10_000)).unwrap();
    let b = estimate_pmap(&code, 0.5, Channel::Bec, &McConfig::new(2, 10_000)).unwrap();
    assert_ne!(a.hits, b.hits);
}

#[test]
fn stream_stride_does_not_change_the_draws() {
    let cfg = McConfig::new(5, 5000);
    let a: Vec<_> = sample_conditioned(12, &[3], 0.3, &cfg).unwrap().collect();
    let b: Vec<_> = sample_conditioned(12, &[3], 0.3, &McConfig { stream_stride: 7, ..cfg }).unwrap().collect();
    assert_eq!(a.len(), b.len());
    // Different streams, same marginal law.
    let w = |v: &[threshold_lab::Pattern]| v.iter().map(|p| p.weight()).sum::<usize>() as f64 / v.len() as f64;
    assert!((w(&a) - w(&b)).abs() < 0.15);
    assert!(a.iter().all(|p| p.get(3)));
}

#[test]
fn conditioned_samples_have_the_right_marginals() {
    let cfg = McConfig::new(8, 40_000);
    let mut ones = [0u64; 10];
    for p in sample_conditioned(10, &[0, 7], 0.25, &cfg).unwrap() {
        for (k, o) in ones.iter_mut().enumerate() {
            *o += p.get(k) as u64;
        }
    }
    for (k, &o) in ones.iter().enumerate() {
        let f = o as f64 / 40_000.0;
        if k == 0 || k == 7 {
            assert_eq!(f, 1.0);
        } else {
            assert!((f - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / 40_000.0).sqrt(), "k={k} f={f}");
        }
    }
}

/// Block error with a random transmitted codeword and a brute-force decoder;
/// by linearity this matches the all-zero analysis.
#[test]
fn random_codeword_transmission_matches_exact_curve() {
    let code = LinearCode::random_linear(12, 5, 4).unwrap();
    let words = code.codewords_u128(16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let trials = 40_000u64;
    for (channel, eps) in [(Channel::Bec, 0.45), (Channel::Bsc, 0.12)] {
        let exact = failure_profile(&code, channel).unwrap().pmap_eval(eps).unwrap();
        let thr = (eps * 2f64.powi(32)) as u64;
        let mut fails = 0u64;
        for _ in 0..trials {
            let x = words[(rng.next_u32() as usize) % words.len()];
            let z = (0..12).fold(0u128, |m, k| m | (((rng.next_u32() as u64) < thr) as u128) << k);
            let failed = match channel {
                Channel::Bec => words.iter().filter(|&&c| (c ^ x) & !z & 0xfff == 0).count() > 1,
                Channel::Bsc => strictly_closer_codeword(&words, x ^ z, x),
            };
            fails += failed as u64;
        }
        let est = fails as f64 / trials as f64;
        let sd = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!((est - exact).abs() < 4.0 * sd, "{channel}: {est} vs {exact}");
    }
}

/// Block error: another codeword strictly closer to `y` than `x`.
fn strictly_closer_codeword(words: &[u128], y: u128, x: u128) -> bool {
    let dx = (x ^ y).count_ones();
    words.iter().any(|&c| c != x && (c ^ y).count_ones() < dx)
}
