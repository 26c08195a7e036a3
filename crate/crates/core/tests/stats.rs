use proptest::prelude::*;
use redirect_core::stats::{mean_sd, midranks, paired_t_test, wilcoxon_signed_rank, PairedSample};

fn counts() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec((0u32..40).prop_map(f64::from), n),
            prop::collection::vec((0u32..40).prop_map(f64::from), n),
        )
    })
}

proptest! {
    #[test]
    fn p_values_are_probabilities((a, b) in counts()) {
        let s = PairedSample::new(a, b).unwrap();
        if let Ok(t) = paired_t_test(&s) {
            prop_assert!((0.0..=1.0).contains(&t.p));
        }
        if let Ok(w) = wilcoxon_signed_rank(&s) {
            prop_assert!((0.0..=1.0).contains(&w.p));
            let n = w.n as f64;
            prop_assert!(w.w_plus >= 0.0 && w.w_plus <= n * (n + 1.0) / 2.0);
        }
    }

    #[test]
    fn tests_are_affine_invariant((a, b) in counts(), scale in 0u32..6, shift in -100i32..100) {
        let c = 2f64.powi(scale as i32);
        let f = |x: &f64| x * c + f64::from(shift);
        let s = PairedSample::new(a.clone(), b.clone()).unwrap();
        let moved = PairedSample::new(a.iter().map(f).collect(), b.iter().map(f).collect()).unwrap();
        match (paired_t_test(&s), paired_t_test(&moved)) {
            (Ok(x), Ok(y)) => {
                prop_assert!((x.t - y.t).abs() < 1e-9 * x.t.abs().max(1.0));
                prop_assert!((x.p - y.p).abs() < 1e-9);
            }
            (x, y) => prop_assert_eq!(x.is_err(), y.is_err()),
        }
        prop_assert_eq!(wilcoxon_signed_rank(&s), wilcoxon_signed_rank(&moved));
    }

    #[test]
    fn swapping_arms_flips_the_sign((a, b) in counts()) {
        let s = PairedSample::new(a, b).unwrap();
        let r = s.swapped();
        if let (Ok(x), Ok(y)) = (paired_t_test(&s), paired_t_test(&r)) {
            prop_assert_eq!(x.t, -y.t);
            prop_assert_eq!(x.p, y.p);
        }
        if let (Ok(x), Ok(y)) = (wilcoxon_signed_rank(&s), wilcoxon_signed_rank(&r)) {
            prop_assert_eq!(x.z, -y.z);
            prop_assert_eq!(x.p, y.p);
        }
    }

    #[test]
    fn midranks_sum_like_plain_ranks(xs in prop::collection::vec((0u32..10).prop_map(f64::from), 1..50)) {
        let r = midranks(&xs);
        let n = xs.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
        for i in 0..xs.len() {
            for j in 0..xs.len() {
                if xs[i] < xs[j] {
                    prop_assert!(r[i] < r[j]);
                } else if xs[i] == xs[j] {
                    prop_assert_eq!(r[i], r[j]);
                }
            }
        }
    }
}

#[test]
fn hand_computed_t() {
    // differences 1, 2, 3, 4, 5: mean 3, sd sqrt(2.5), t = 3 / (sqrt(2.5) / sqrt(5)) = sqrt(18)
    let s = PairedSample::new(
        vec![2.0, 4.0, 6.0, 8.0, 10.0],
        vec![1.0, 2.0, 3.0, 4.0, 5.0],
    )
    .unwrap();
    let t = paired_t_test(&s).unwrap();
    assert!((t.t - 18f64.sqrt()).abs() < 1e-12);
    assert_eq!(t.df, 4.0);
    let (m, sd) = mean_sd(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    assert_eq!(m, 3.0);
    assert!((sd - 2.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn degenerate_samples_are_errors() {
    let same = PairedSample::new(vec![1.0; 5], vec![1.0; 5]).unwrap();
    assert!(paired_t_test(&same).is_err());
    assert!(wilcoxon_signed_rank(&same).is_err());
    assert!(PairedSample::new(vec![1.0], vec![1.0, 2.0]).is_err());
}

fn normal_sample(seed: u64, n: usize, shift: f64) -> PairedSample {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let b: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let a = b
        .iter()
        .map(|x| {
            let e: f64 = StandardNormal.sample(&mut rng);
            x + shift + e
        })
        .collect();
    PairedSample::new(a, b).unwrap()
}

#[test]
fn null_t_statistics_follow_the_t_distribution() {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let seeds = 4000u64;
    let mut large = 0;
    let mut rejected = 0;
    for seed in 0..seeds {
        let t = paired_t_test(&normal_sample(seed, 30, 0.0)).unwrap();
        let dist = StudentsT::new(0.0, 1.0, 29.0).unwrap();
        assert!((t.p - 2.0 * dist.cdf(-t.t.abs())).abs() < 1e-8);
        large += usize::from(t.t.abs() >= 4.0);
        rejected += usize::from(t.p < 0.05);
    }
    // P(|t_29| >= 4) is about 4e-4
    assert!(large <= 6, "{large}");
    let rate = rejected as f64 / seeds as f64;
    assert!(
        (rate - 0.05).abs() < 4.0 * (0.05f64 * 0.95 / seeds as f64).sqrt(),
        "{rate}"
    );
}

#[test]
fn strong_effects_give_z_of_the_same_sign() {
    for seed in 0..50 {
        for shift in [-0.8, 0.8] {
            let s = normal_sample(seed, 99, shift);
            let mean: f64 = s.differences().iter().sum::<f64>() / 99.0;
            let w = wilcoxon_signed_rank(&s).unwrap();
            assert_eq!(w.z.signum(), mean.signum());
            assert!(w.p < 1e-3);
        }
    }
}

#[test]
fn small_samples_match_their_exact_p() {
    // all five differences positive: exact two-sided p is 2/32
    let s = PairedSample::new(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![0.0; 5]).unwrap();
    let w = wilcoxon_signed_rank(&s).unwrap();
    assert_eq!(w.w_plus, 15.0);
    assert!((w.p - 0.0625).abs() <= 0.03, "{}", w.p);

    let s = PairedSample::new(vec![1.0, -1.0, 2.0, -2.0], vec![0.0; 4]).unwrap();
    let w = wilcoxon_signed_rank(&s).unwrap();
    assert_eq!(w.z, 0.0);
    assert!(w.p > 0.99);
}
