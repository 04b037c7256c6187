use proptest::prelude::*;
use wds_core::complexity::{ops_ofdm, ops_sefdm, ops_sefdm_pruned};
use wds_core::harness::parse_grid;
use wds_core::patterns::{schedule, NoisePlan};
use wds_core::sefdm::{correlation_matrix, modulate_direct};
use wds_core::wlan::ber;
use wds_core::{BcfPattern, Complex, Constellation, Modem, Oversampling, SefdmConfig};

fn alpha() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![1.0, 0.985, 0.97, 0.955, 0.94, 0.9, 0.8, 0.7])
}

fn qpsk(n: usize) -> impl Strategy<Value = Vec<Complex>> {
    prop::collection::vec(0usize..4, n).prop_map(|i| {
        let pts = Constellation::qpsk().points().to_vec();
        i.into_iter().map(|k| pts[k]).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn correlation_matrix_is_hermitian_with_unit_diagonal(n in 2usize..24, rho in 1u32..5, a in alpha()) {
        let cfg = SefdmConfig::new(n, Oversampling::integer(rho).unwrap(), a, 20e6).unwrap();
        let c = correlation_matrix(&cfg);
        for i in 0..n {
            prop_assert_eq!(c.get(i, i), Complex::new(1.0, 0.0));
            for j in 0..n {
                prop_assert_eq!(c.get(i, j), c.get(j, i).conj());
            }
        }
    }

    #[test]
    fn fast_and_direct_modulation_agree((n, s) in (2usize..32).prop_flat_map(|n| (Just(n), qpsk(n))), a in alpha()) {
        let cfg = SefdmConfig::new(n, Oversampling::integer(4).unwrap(), a, 20e6).unwrap();
        let fast = Modem::new(&cfg).modulate(&s).unwrap();
        let direct = modulate_direct(&cfg, &s).unwrap();
        for (x, y) in fast.iter().zip(&direct) {
            prop_assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn demodulating_a_symbol_applies_the_correlation_matrix((n, s) in (2usize..20).prop_flat_map(|n| (Just(n), qpsk(n))), a in alpha()) {
        let cfg = SefdmConfig::new(n, Oversampling::integer(2).unwrap(), a, 20e6).unwrap();
        let m = Modem::new(&cfg);
        let r = m.demodulate(&m.modulate(&s).unwrap()).unwrap();
        let cs = correlation_matrix(&cfg).apply(&s);
        for (x, y) in r.iter().zip(&cs) {
            prop_assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn pruned_count_never_exceeds_full(q in 2usize..4096, a in 0.05f64..=1.0) {
        prop_assert!(ops_sefdm_pruned(q, a).count <= ops_sefdm(q, a).count + 1e-9);
        prop_assert!(ops_sefdm(q, 1.0).count == ops_ofdm(q).count);
    }

    #[test]
    fn schedules_are_reproducible_and_pattern_closed(n in 0usize..200, seed in any::<u64>()) {
        let p = BcfPattern::type3();
        let a = schedule(&p, n, seed);
        prop_assert_eq!(&a, &schedule(&p, n, seed));
        prop_assert_eq!(a.len(), n);
        for (c, al) in a.classes.iter().zip(&a.alphas) {
            prop_assert_eq!(p.alphas()[*c], *al);
        }
    }

    #[test]
    fn ber_is_a_rate(bits in prop::collection::vec(0u8..2, 1..300), flips in prop::collection::vec(any::<bool>(), 300)) {
        let rx: Vec<u8> = bits.iter().zip(&flips).map(|(b, &f)| if f { 1 - b } else { *b }).collect();
        let r = ber(&bits, &rx).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        let flipped = flips.iter().take(bits.len()).filter(|&&f| f).count();
        prop_assert_eq!(r, flipped as f64 / bits.len() as f64);
    }

    #[test]
    fn noise_plans_round_trip(grid in prop::collection::vec(-40i32..60, 1..8)) {
        let plan = NoisePlan::Uniform(grid.iter().map(|&g| g as f64).collect());
        prop_assert_eq!(plan.to_string().parse::<NoisePlan>().unwrap(), plan);
    }

    #[test]
    fn grids_are_inclusive_ranges(start in -30i32..30, step in 1i32..10, count in 0i32..10) {
        let stop = start + step * count;
        let g = parse_grid(&format!("{start}:{step}:{stop}")).unwrap();
        prop_assert_eq!(g.len() as i32, count + 1);
        prop_assert_eq!(*g.last().unwrap(), stop as f64);
    }
}
