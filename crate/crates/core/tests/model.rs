mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use synsis::{infection_rate, EpidemicState, ModelParams};

proptest! {
    #[test]
    fn rate_is_monotone_in_the_infected_set(seed in any::<u64>(), n in 2usize..9, mask in any::<u64>(), extra in any::<usize>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, n);
        let p = common::random_params(&mut rng, n, 2.0);
        let small = EpidemicState::from_mask(n, mask & ((1 << n) - 1));
        let susceptible: Vec<usize> = (0..n).filter(|&i| !small.is_infected(i)).collect();
        prop_assume!(susceptible.len() >= 2);
        let added = susceptible[extra % susceptible.len()];
        let mut large = small.clone();
        large.set(added, true);
        for &i in &susceptible {
            if i == added {
                continue;
            }
            let before = infection_rate(&g, &p, &small, i).unwrap();
            let after = infection_rate(&g, &p, &large, i).unwrap();
            prop_assert!(after >= before, "node {i}: {before} -> {after}");
        }
    }

    #[test]
    fn zero_synergy_gives_the_plain_rate(seed in any::<u64>(), n in 2usize..9, mask in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, n);
        let full = common::random_params(&mut rng, n, 2.0);
        let p = ModelParams::new(full.delta().to_vec(), full.beta().to_vec(), vec![0.0; n]).unwrap();
        let s = EpidemicState::from_mask(n, mask & ((1 << n) - 1));
        for i in (0..n).filter(|&i| !s.is_infected(i)) {
            let infected = g.neighbors(i).iter().filter(|&&j| s.is_infected(j)).count();
            prop_assert_eq!(infection_rate(&g, &p, &s, i).unwrap(), p.beta()[i] * infected as f64);
        }
    }

    #[test]
    fn no_infected_neighbor_means_zero_rate(seed in any::<u64>(), n in 2usize..9, mask in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, n);
        let p = common::random_params(&mut rng, n, 2.0);
        let s = EpidemicState::from_mask(n, mask & ((1 << n) - 1));
        for i in (0..n).filter(|&i| !s.is_infected(i)) {
            let rate = infection_rate(&g, &p, &s, i).unwrap();
            prop_assert!(rate >= 0.0);
            if g.neighbors(i).iter().all(|&j| !s.is_infected(j)) {
                prop_assert_eq!(rate, 0.0);
            }
        }
    }
}
