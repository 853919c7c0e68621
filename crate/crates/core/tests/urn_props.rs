use predcore::coreset::stream_rng;
use predcore::measure::Point;
use predcore::urn::{materialize, sample_trajectory, BaseMeasureSpec, DPConfig, Root, UrnChoice};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn dp(alpha: f64) -> DPConfig {
    let base = BaseMeasureSpec::GaussianMixture {
        means: vec![vec![0.0, 0.0]],
        weights: vec![1.0],
        sd: 1.0,
    };
    DPConfig::new(alpha, base).unwrap()
}

proptest! {
    #[test]
    fn materialize_is_a_function_of_the_weights(
        seed in any::<u64>(),
        alpha in 0.0..5.0f64,
        w in prop::collection::vec(0.0..3.0f64, 6),
    ) {
        let cond: Vec<Point> = (0..6).map(|i| Point::new(vec![i as f64 - 2.5, 1.0])).collect();
        let traj = sample_trajectory(6, &dp(alpha), 40, &mut stream_rng(seed, 0)).unwrap();
        prop_assert_eq!(&traj, &sample_trajectory(6, &dp(alpha), 40, &mut stream_rng(seed, 0)).unwrap());
        let a = materialize(&traj, &cond, Some(&w)).unwrap();
        prop_assert_eq!(&a, &materialize(&traj, &cond, Some(&w)).unwrap());
        let unit = materialize(&traj, &cond, None).unwrap();
        for (k, root) in traj.roots().into_iter().enumerate() {
            match root {
                Root::Conditioning(i) => prop_assert_eq!(&a[k].coords, &cond[i].scaled(w[i]).coords),
                Root::Fresh(_) => prop_assert_eq!(&a[k], &unit[k]),
            }
        }
    }
}

#[test]
fn alpha_zero_never_draws_fresh() {
    for s in 0..1000 {
        let t = sample_trajectory(5, &dp(0.0), 50, &mut stream_rng(s, 3)).unwrap();
        assert!(t.choices.iter().all(|c| matches!(c, UrnChoice::Existing(_))));
    }
}

fn chi_square_p(counts: &[f64], probs: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    let stat: f64 = counts.iter().zip(probs).map(|(o, p)| (o - n * p).powi(2) / (n * p)).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn draws_are_exchangeable() {
    // five observed atoms, alpha = 1.5: every draw is atom i w.p. 1/6.5 and
    // traces back to a fresh draw w.p. 1.5/6.5
    let (n, alpha, runs, k) = (5, 1.5, 10_000, 9);
    let mut probs = vec![1.0 / (n as f64 + alpha); n];
    probs.push(alpha / (n as f64 + alpha));
    let mut first = vec![0.0; n + 1];
    let mut later = vec![0.0; n + 1];
    for s in 0..runs {
        let roots = sample_trajectory(n, &dp(alpha), k + 1, &mut stream_rng(s, 11)).unwrap().roots();
        let cat = |r: Root| match r {
            Root::Conditioning(i) => i,
            Root::Fresh(_) => n,
        };
        first[cat(roots[0])] += 1.0;
        later[cat(roots[k])] += 1.0;
    }
    let (p1, pk) = (chi_square_p(&first, &probs), chi_square_p(&later, &probs));
    assert!(p1 > 0.01 && pk > 0.01, "p-values {p1} {pk}");
}
