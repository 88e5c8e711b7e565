use massive::simplex::{
    moment_estimate, sample_masses_seeded, stick_break, t_star, MassLaw, MassLawSpec, Truncation,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sampled_sequences_are_valid(seed in any::<u64>(), beta in 0.1f64..5.0, count in any::<bool>()) {
        let truncation = if count { Truncation::Count(20) } else { Truncation::TailThreshold(1e-6) };
        let law = MassLawSpec::new(MassLaw::PoissonDirichlet { beta }).with_truncation(truncation).with_seed(seed);
        let m = sample_masses_seeded(&law, 0).unwrap();
        m.check_invariants().unwrap();
        let total: f64 = m.masses().iter().sum::<f64>() + m.tail_mass();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(m.masses().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn stick_breaking_is_exact(sticks in proptest::collection::vec(0.0f64..1.0, 1..30)) {
        let (w, rest) = stick_break(&sticks);
        let mut left = 1.0;
        for (i, r) in sticks.iter().enumerate() {
            prop_assert!((w[i] - r * left).abs() <= 1e-15);
            left *= 1.0 - r;
        }
        prop_assert!((rest - left).abs() <= 1e-15);
    }

    #[test]
    fn scaling_rates_up_never_raises_t_star(seed in 0u64..1000, c in 1.0f64..10.0) {
        let law = MassLawSpec::new(MassLaw::PoissonDirichlet { beta: 1.0 }).with_truncation(Truncation::Count(30));
        let s = sample_masses_seeded(&law, seed).unwrap();
        let mut rates: Vec<f64> = s.masses().iter().map(|m| m.recip().ln().max(0.1)).collect();
        rates.extend((1..200).map(|k| 0.3 * (k as f64).ln()));
        let a = t_star(&rates, None).unwrap().value;
        let scaled: Vec<f64> = rates.iter().map(|r| c * r).collect();
        prop_assert!(t_star(&scaled, None).unwrap().value <= a);
    }
}

#[test]
fn uniform_moment_has_no_noise() {
    for n in [1usize, 3, 8] {
        for p in [1.5, 2.0, 4.0] {
            let e = moment_estimate(&MassLawSpec::new(MassLaw::Uniform { n }), p, 50).unwrap();
            assert!((e.estimate - (n as f64).powf((p - 1.0) / p)).abs() < 1e-12);
            assert_eq!(e.standard_error, Some(0.0));
        }
    }
}
