use proptest::prelude::*;

use vecbal::adversaries::{IidDistribution, SourceKind, VectorSource};
use vecbal::harness::{run_trials, source_seed};
use vecbal::oracles::{
    brute_force_optimal, greedy_potential_signing, random_signing, subgaussian_moment_estimate, Objective,
    BRUTE_FORCE_MAX_T, DEFAULT_LAMBDA,
};
use vecbal::stats::median;
use vecbal::walk::{run_balance, SliceStream, WalkConfig, SPREAD_CONSTANT};
use vecbal::{Sign, WalkTrace};

fn repeated_e1_traces(n: usize, t: usize, trials: usize, c: f64, master: u64) -> Vec<WalkTrace> {
    let cfg = WalkConfig::new(n, t, 0.1).unwrap().with_c(c).unwrap();
    run_trials(master, trials, |_, seed| {
        let mut src = VectorSource::new(SourceKind::RepeatedBasis, n, t, source_seed(seed))?;
        run_balance(&mut src, &cfg, seed)
    })
    .unwrap()
}

#[test]
fn random_signing_grows_like_sqrt_t() {
    // |w_t(1)| for a simple random walk at t = 10^4 has median about 0.674·100.
    let t = 10_000;
    let finals = run_trials(1, 300, |_, seed| {
        let mut src = VectorSource::new(SourceKind::RepeatedBasis, 1, t, source_seed(seed))?;
        Ok(random_signing(&mut src, seed)?.final_w[0].abs())
    })
    .unwrap();
    let m = median(&finals);
    assert!((50.0..=110.0).contains(&m), "median {m}");
}

#[test]
fn moment_estimate_on_repeated_basis() {
    let c = 20.0;
    let traces = repeated_e1_traces(1, 400, 2000, c, 2);
    let est = subgaussian_moment_estimate(&traces, &[1.0], SPREAD_CONSTANT * c).unwrap();
    assert!(!est.widened);
    assert!(est.estimate <= 2f64.sqrt() + 5.0 * est.std_error, "{est:?}");
}

#[test]
fn moment_error_shrinks_with_more_traces() {
    let c = 20.0;
    let lc = SPREAD_CONSTANT * c;
    let small = subgaussian_moment_estimate(&repeated_e1_traces(1, 200, 2000, c, 3), &[1.0], lc).unwrap();
    let large = subgaussian_moment_estimate(&repeated_e1_traces(1, 200, 4000, c, 4), &[1.0], lc).unwrap();
    let ratio = large.std_error / small.std_error;
    assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.15, "ratio {ratio}");
}

#[test]
fn few_traces_are_flagged() {
    let traces = repeated_e1_traces(2, 50, 10, 20.0, 5);
    let est = subgaussian_moment_estimate(&traces, &[0.6, 0.8], SPREAD_CONSTANT * 20.0).unwrap();
    assert!(est.widened);
    assert!(subgaussian_moment_estimate(&traces, &[1.0, 1.0], 10.0).is_err());
    assert!(subgaussian_moment_estimate(&traces, &[1.0, 0.0], 0.0).is_err());
}

#[test]
fn adaptive_source_pins_the_l2_norm() {
    let t = 300;
    for n in [2, 5, 30] {
        let cfg = WalkConfig::new(n, t, 0.1).unwrap();
        let greedy = greedy_potential_signing(
            &mut VectorSource::new(SourceKind::AdaptiveOrthogonal, n, t, 1).unwrap(),
            DEFAULT_LAMBDA,
        )
        .unwrap();
        let balance = run_balance(&mut VectorSource::new(SourceKind::AdaptiveOrthogonal, n, t, 1).unwrap(), &cfg, 9)
            .unwrap();
        for tr in [greedy, balance] {
            let l2: f64 = tr.final_w.iter().map(|x| x * x).sum();
            assert!((l2 - t as f64).abs() <= 1e-6 * t as f64, "n {n}: {l2}");
        }
    }
}

#[test]
fn oblivious_sources_ignore_the_signs() {
    let kinds = [
        SourceKind::Iid(IidDistribution::UniformCube),
        SourceKind::Iid(IidDistribution::UniformSphere),
        SourceKind::SparseRandom { s: 3 },
        SourceKind::RepeatedBasis,
    ];
    let (n, t) = (8, 200);
    let cfg = WalkConfig::new(n, t, 0.1).unwrap();
    for kind in kinds {
        let src = VectorSource::new(kind.clone(), n, t, 11).unwrap();
        let realized = src.realize().unwrap();
        let a = run_balance(&mut src.clone(), &cfg, 1).unwrap();
        let b = random_signing(&mut src.clone(), 2).unwrap();
        // Replaying the realized list under either rule gives the same trace.
        let a2 = run_balance(&mut SliceStream::new(n, &realized), &cfg, 1).unwrap();
        let b2 = random_signing(&mut SliceStream::new(n, &realized), 2).unwrap();
        assert_eq!(a.final_w, a2.final_w, "{kind:?}");
        assert_eq!(b.final_w, b2.final_w, "{kind:?}");
        for v in &realized {
            assert!(v.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn sparse_source_has_exact_support() {
    let src = VectorSource::new(SourceKind::SparseRandom { s: 4 }, 10, 50, 3).unwrap();
    for v in src.realize().unwrap() {
        let nz: Vec<f64> = v.into_iter().filter(|x| *x != 0.0).collect();
        assert_eq!(nz.len(), 4);
        assert!(nz.iter().all(|x| (x.abs() - 0.5).abs() < 1e-15));
    }
    assert!(VectorSource::new(SourceKind::SparseRandom { s: 11 }, 10, 5, 0).is_err());
    assert!(VectorSource::new(SourceKind::SparseRandom { s: 0 }, 10, 5, 0).is_err());
}

fn sup(w: &[f64]) -> f64 {
    w.iter().fold(0.0, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimum_ordering(
        raw in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 3), 1..12),
        seed in any::<u64>(),
    ) {
        let vs: Vec<Vec<f64>> = raw
            .into_iter()
            .map(|v| {
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
                v.into_iter().map(|x| x / n).collect()
            })
            .collect();
        let t = vs.len();
        let fin = brute_force_optimal(&vs, Objective::FinalSup).unwrap();
        let pre = brute_force_optimal(&vs, Objective::PrefixSup).unwrap();
        prop_assert!(fin.value <= pre.value + 1e-12);
        prop_assert_eq!(fin.signs.len(), t);
        prop_assert_eq!(fin.signs[0], Sign::Plus);

        // The reported optimum is what its signs actually achieve.
        let mut w = vec![0.0; 3];
        let mut running = 0.0_f64;
        for (v, s) in vs.iter().zip(&pre.signs) {
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi += s.as_f64() * vi;
            }
            running = running.max(sup(&w));
        }
        prop_assert!((running - pre.value).abs() <= 1e-12);

        // Any realized signing does no better than the optimum.
        let tr = random_signing(&mut SliceStream::new(3, &vs), seed).unwrap();
        prop_assert!(pre.value <= tr.max_sup_norm() + 1e-12);
        prop_assert!(fin.value <= sup(&tr.final_w) + 1e-12);
    }
}

#[test]
fn brute_force_limits() {
    let too_many = vec![vec![1.0]; BRUTE_FORCE_MAX_T + 1];
    assert!(brute_force_optimal(&too_many, Objective::FinalSup).is_err());
    let even = vec![vec![1.0]; 6];
    assert_eq!(brute_force_optimal(&even, Objective::FinalSup).unwrap().value, 0.0);
    assert_eq!(brute_force_optimal(&even, Objective::PrefixSup).unwrap().value, 1.0);
}
