use proptest::prelude::*;
use threshold_lab::pattern_sets::{failure_profile, in_omega, OmegaTable};
use threshold_lab::verify::{self, corrupted_fixture};
use threshold_lab::{BitVector, Channel, CodeSpec, LinearCode};

fn codes() -> Vec<LinearCode> {
    let mut v: Vec<LinearCode> = verify::small_corpus().iter().map(|s| s.build().unwrap()).collect();
    v.push(LinearCode::reed_muller(1, 4).unwrap());
    v.push(LinearCode::random_linear(14, 6, 9).unwrap());
    v
}

#[test]
fn macwilliams_matches_dual_enumeration() {
    for code in codes() {
        let a = code.weight_distribution().unwrap();
        let dual = code.dual();
        assert_eq!(a.macwilliams_transform(code.dimension()).unwrap(), dual.weight_distribution().unwrap(), "{}", code.name());
    }
}

#[test]
fn generator_and_parity_check_are_orthogonal() {
    for code in codes() {
        let g = code.generator();
        let h = code.parity_check();
        assert_eq!(h.rows(), code.len() - code.dimension());
        for r in g.row_vectors() {
            assert!(h.mul_vec(&r).unwrap().is_zero(), "{}", code.name());
        }
    }
}

#[test]
fn rm_family_parameters() {
    for (r, m, k, d) in [(0, 3, 1, 8), (1, 3, 4, 4), (1, 4, 5, 8), (2, 4, 11, 4), (2, 5, 16, 8), (3, 5, 26, 4)] {
        let c = LinearCode::reed_muller(r, m).unwrap();
        assert_eq!((c.len(), c.dimension()), (1 << m, k));
        assert_eq!(c.min_distance().unwrap(), d);
    }
}

#[test]
fn profiles_sum_to_binomials_where_forced() {
    // Every pattern of weight > N - K fails on the BEC.
    for code in codes() {
        let p = failure_profile(&code, Channel::Bec).unwrap();
        let (n, k) = (code.len(), code.dimension());
        for e in (n - k + 1)..=n {
            assert_eq!(p.f[e] as u128, threshold_lab::poly::binomial(n, e), "{} e={e}", code.name());
        }
        for e in 0..code.min_distance().unwrap() {
            assert_eq!(p.f[e], 0);
        }
        assert!(p.validate().is_ok());
    }
}

#[test]
fn bsc_profile_against_brute_force_decoder() {
    let code = LinearCode::random_linear(11, 4, 3).unwrap();
    let words = code.codewords_u128(16).unwrap();
    let p = failure_profile(&code, Channel::Bsc).unwrap();
    let mut f = vec![0u64; 12];
    for z in 0u128..1 << 11 {
        let w = z.count_ones();
        if words.iter().any(|&c| c != 0 && (z ^ c).count_ones() < w) {
            f[w as usize] += 1;
        }
    }
    assert_eq!(p.f, f);
}

#[test]
fn corrupted_generator_is_flagged() {
    let bad = corrupted_fixture();
    let closure = OmegaTable::bec_by_cover_closure(&bad).unwrap();
    let rank = OmegaTable::build(&bad, Channel::Bec).unwrap();
    assert_eq!(rank.same_membership(&closure), Some(0));
    let r = verify::boundary_suite(&[bad]).unwrap();
    assert!(!r.passed);
}

#[test]
fn descriptors_reject_nonsense() {
    for s in ["rm:3,2", "rep:0", "spc:1", "rand:4,5,1", "rm", "foo:1", "rm:1,x"] {
        let built = s.parse::<CodeSpec>().and_then(|c| c.build());
        assert!(built.is_err(), "{s}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omega_is_monotone(seed in 0u64..1000, z in 0u64..1 << 10, k in 0usize..10) {
        let code = LinearCode::random_linear(10, 4, seed).unwrap();
        let zp = BitVector::from_u64(z, 10);
        let up = BitVector::from_u64(z | 1 << k, 10);
        prop_assert!(!in_omega(&code, &zp, Channel::Bec).unwrap() || in_omega(&code, &up, Channel::Bec).unwrap());
    }

    #[test]
    fn bec_failures_come_from_covered_codewords(seed in 0u64..1000, z in 0u64..1 << 10) {
        let code = LinearCode::random_linear(10, 4, seed).unwrap();
        let zp = BitVector::from_u64(z, 10);
        let covered = code.codewords_u128(8).unwrap().iter().any(|&c| c != 0 && c as u64 & !z == 0);
        prop_assert_eq!(in_omega(&code, &zp, Channel::Bec).unwrap(), covered);
    }
}

#[test]
fn corrupted_generator_fails_the_full_suite() {
    let reports = verify::run_suite(verify::Suite::All, &[corrupted_fixture()]).unwrap();
    assert!(reports.iter().any(|r| !r.passed && r.counterexample.is_some()));
}
