use miqa_pns::synthetic::{
    generate, largest_remainder, make_split, render, Dataset, GeneratorConfig, Grade, Proportions, SceneParams,
    SceneSampler, Scenario,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small(n: usize, seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        n,
        height: 16,
        width: 16,
        seed,
        ..GeneratorConfig::default()
    }
}

fn grade() -> impl Strategy<Value = Grade> {
    prop_oneof![Just(Grade::Good), Just(Grade::Limited), Just(Grade::Poor)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_scenes_obey_the_label_rule(g in grade(), seed: u64, cropped in 0.0f64..=1.0) {
        let sampler = SceneSampler { limited_cropped_fraction: cropped, ..SceneSampler::default() };
        let params = sampler.sample(g, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(params.validate().is_ok());
        prop_assert_eq!(params.implied_grade(), g);
    }

    #[test]
    fn renders_stay_in_unit_range(
        clarity in 0.0f64..=1.0, crop in 0.0f64..=1.0, art in 0.0f64..=1.0,
        seed: u64, h in 16usize..40, w in 16usize..40,
    ) {
        let p = SceneParams { chamber_clarity: clarity, crop_fraction: crop, artifact_strength: art, noise_sigma: 0.05, rng_seed: seed };
        let px = render(&p, h, w).unwrap();
        prop_assert_eq!(px.len(), h * w);
        prop_assert!(px.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(px, render(&p, h, w).unwrap());
    }

    #[test]
    fn largest_remainder_sums_and_stays_close(total in 0usize..5000, w in proptest::collection::vec(0.0f64..10.0, 1..6)) {
        prop_assume!(w.iter().sum::<f64>() > 0.0);
        let parts = largest_remainder(total, &w);
        prop_assert_eq!(parts.iter().sum::<usize>(), total);
        let s: f64 = w.iter().sum();
        for (p, wi) in parts.iter().zip(&w) {
            prop_assert!((*p as f64 - total as f64 * wi / s).abs() < 1.0);
        }
    }

    #[test]
    fn splits_partition_the_allowed_images(seed: u64, n in 30usize..200, sc in 0usize..3) {
        let scenario = Scenario::ALL[sc];
        let ds = Dataset::generate(&small(n, seed)).unwrap();
        let grades = ds.grades();
        let split = make_split(&grades, scenario, seed).unwrap();
        let mut all: Vec<usize> = split.train.iter().chain(&split.val).chain(&split.test).copied().collect();
        all.sort_unstable();
        let before = all.len();
        all.dedup();
        prop_assert_eq!(before, all.len(), "overlapping splits");
        match scenario.held_out() {
            None => prop_assert_eq!(all.len(), n),
            Some(held) => {
                prop_assert!(split.test.iter().all(|&i| grades[i] == held));
                prop_assert!(split.train.iter().chain(&split.val).all(|&i| grades[i] != held));
                prop_assert_eq!(all.len(), n);
            }
        }
        prop_assert_eq!(&split, &make_split(&grades, scenario, seed).unwrap());
    }

    #[test]
    fn dataset_files_round_trip(seed: u64, n in 0usize..40) {
        let ds = Dataset::generate(&small(n, seed)).unwrap();
        let bytes = ds.to_bytes();
        prop_assert_eq!(bytes.len(), 20 + n * (1 + 16 * 16 * 4));
        let back = Dataset::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &ds);
        prop_assert_eq!(back.to_bytes(), bytes);
    }
}

#[test]
fn generation_is_order_independent_and_reproducible() {
    let a = generate(&small(120, 7)).unwrap();
    let b = generate(&small(120, 7)).unwrap();
    assert_eq!(a, b);
    let c = generate(&small(120, 8)).unwrap();
    assert_ne!(a, c);
    for img in &a {
        assert_eq!(img.params.implied_grade(), img.grade);
    }
}

#[test]
fn default_counts_match_the_reference_collection() {
    let config = GeneratorConfig {
        height: 16,
        width: 16,
        ..GeneratorConfig::default()
    };
    assert_eq!(Dataset::generate(&config).unwrap().grade_counts(), [593, 1827, 405]);
}

#[test]
fn invalid_proportions_report_their_sum() {
    let config = GeneratorConfig {
        proportions: Proportions {
            good: 0.5,
            limited: 0.5,
            poor: 0.25,
        },
        ..small(10, 0)
    };
    let err = generate(&config).unwrap_err().to_string();
    assert!(err.contains("1.25"), "{err}");
}
