use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use visdiag_core::config::{expand_variables, parse_dataset_spec, resolve_randomization};
use visdiag_testkit::specs::{brute_force, fuzz_spec};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn expansion_matches_nested_loops(seed in any::<u64>()) {
        let fuzz = fuzz_spec(&mut visdiag_testkit::rng(seed));
        let yaml = fuzz.yaml();
        let spec = parse_dataset_spec(&yaml).unwrap();
        let exp = expand_variables(&spec).unwrap();
        let expected = brute_force(&fuzz);

        prop_assert_eq!(exp.total as usize, expected.len(), "{}", yaml);
        prop_assert_eq!(exp.combinations.len(), expected.len());
        prop_assert_eq!(spec.expansion_size(), expected.len() as u128);
        let mut seeds = BTreeSet::new();
        for (i, (c, want)) in exp.combinations.iter().zip(&expected).enumerate() {
            prop_assert_eq!(c.index, i as u64);
            prop_assert!(seeds.insert(c.derived_seed), "derived seed repeats at {}", i);
            prop_assert_eq!(c.assignments.len(), fuzz.vars.len());
            for (v, e) in fuzz.vars.iter().zip(want) {
                let got = &c.assignments[&v.path];
                prop_assert!(e.admits(got), "combination {} var {}: {} not admitted by {:?}\n{}", i, v.path, got, e, yaml);
            }
        }
    }

    #[test]
    fn canonical_yaml_is_a_fixed_point(seed in any::<u64>()) {
        let fuzz = fuzz_spec(&mut visdiag_testkit::rng(seed));
        let spec = parse_dataset_spec(&fuzz.yaml()).unwrap();
        let canonical = spec.to_yaml();
        let again = parse_dataset_spec(&canonical).unwrap();
        prop_assert_eq!(&again, &spec);
        prop_assert_eq!(again.to_yaml(), canonical);
        prop_assert_eq!(expand_variables(&again).unwrap(), expand_variables(&spec).unwrap());
    }

    #[test]
    fn expansion_is_deterministic(seed in any::<u64>()) {
        let fuzz = fuzz_spec(&mut visdiag_testkit::rng(seed));
        let spec = parse_dataset_spec(&fuzz.yaml()).unwrap();
        prop_assert_eq!(expand_variables(&spec).unwrap(), expand_variables(&spec).unwrap());
    }

    #[test]
    fn randomization_stays_in_band(base in -1e3f64..1e3, p in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = resolve_randomization(base, p, &mut rng);
        let (a, b) = (base * (1.0 - p), base * (1.0 + p));
        prop_assert!(a.min(b) <= v && v <= a.max(b), "{} outside [{}, {}]", v, a, b);
    }
}

#[test]
fn randomization_mean_is_the_base() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 20_000;
    let mean = (0..n).map(|_| resolve_randomization(10.0, 0.3, &mut rng)).sum::<f64>() / f64::from(n);
    // uniform on [7, 13]: sd of the mean is sqrt(3)/sqrt(n) ~ 0.012
    assert!((mean - 10.0).abs() < 0.05, "mean {mean}");
}

#[test]
fn blur_by_replicate_example() {
    let text = "
dataset: {name: blur_sweep, seed: 7}
variables:
  noise.blur:
    variate_type: varying_all
    variate_levels: [none, very_low, low, medium, high, very_high]
    n_images: 5
";
    let exp = expand_variables(&parse_dataset_spec(text).unwrap()).unwrap();
    assert_eq!(exp.total, 30);
    let per_level: Vec<usize> = ["none", "very_low", "low", "medium", "high", "very_high"]
        .iter()
        .map(|l| exp.combinations.iter().filter(|c| c.assignments["noise.blur"] == *l).count())
        .collect();
    assert_eq!(per_level, vec![5; 6]);
}
