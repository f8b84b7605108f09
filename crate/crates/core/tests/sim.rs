mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synsis::exact::{build_exact, moment_trajectories};
use synsis::sim::{estimate_infection_probabilities, run, EventKind, SimConfig};
use synsis::{karate_club, Graph, ModelParams};

/// Plain SIS (no synergy) by brute force: every rate is recomputed from
/// scratch after every event. Returns the infected indicators at `times`.
fn naive_sis(
    g: &Graph,
    beta: &[f64],
    delta: &[f64],
    start: &[bool],
    times: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<bool>> {
    let n = g.num_nodes();
    let mut x = start.to_vec();
    let mut t = 0.0;
    let mut out = Vec::new();
    let mut k = 0;
    while k < times.len() {
        let rates: Vec<f64> = (0..n)
            .map(|i| {
                if x[i] {
                    delta[i]
                } else {
                    beta[i] * (0..n).filter(|&j| x[j] && g.is_adjacent(i, j)).count() as f64
                }
            })
            .collect();
        let total: f64 = rates.iter().sum();
        let wait = if total > 0.0 {
            -(1.0 - rng.random::<f64>()).ln() / total
        } else {
            f64::INFINITY
        };
        while k < times.len() && times[k] < t + wait {
            out.push(x.clone());
            k += 1;
        }
        if !wait.is_finite() {
            break;
        }
        t += wait;
        let mut u = rng.random::<f64>() * total;
        let mut v = n - 1;
        for (i, r) in rates.iter().enumerate() {
            if u < *r {
                v = i;
                break;
            }
            u -= r;
        }
        x[v] = !x[v];
    }
    out
}

fn with_samples(horizon: f64, seed: u64, initial: Vec<usize>, times: &[f64]) -> SimConfig {
    SimConfig {
        reinfect: false,
        initial_infected: initial,
        sample_times: times.to_vec(),
        ..SimConfig::new(horizon, seed)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn event_log_reproduces_the_time_average(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, n);
        let p = common::random_params(&mut rng, n, 2.0);
        let horizon = 50.0;
        let c = SimConfig { record_events: true, ..SimConfig::new(horizon, seed).with_all_infected(n) };
        let r = run(&g, &p, &c).unwrap();
        let events = r.events.as_ref().unwrap();

        let mut count = n as i64;
        let mut last = 0.0;
        let mut area = 0.0;
        let mut reinfections = 0;
        for ev in events {
            prop_assert!(ev.time >= last && ev.time < horizon);
            area += count as f64 * (ev.time - last);
            last = ev.time;
            match ev.kind {
                EventKind::Infect => count += 1,
                EventKind::Recover => count -= 1,
                EventKind::Reinfect => {
                    // only ever from the all-susceptible state
                    prop_assert_eq!(count, 0);
                    count += 1;
                    reinfections += 1;
                }
            }
            prop_assert!(count >= 0 && count <= n as i64);
        }
        area += count as f64 * (horizon - last);
        prop_assert!((area / horizon - r.time_average).abs() <= 1e-10 * r.time_average.max(1.0));
        prop_assert_eq!(reinfections, r.reinfection_count);
        prop_assert_eq!(r.final_state.infected_count() as i64, count);
        // re-infection follows extinction at the same instant
        prop_assert!(count > 0);
    }

    #[test]
    fn same_seed_same_result(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, n);
        let p = common::random_params(&mut rng, n, 2.0);
        let c = SimConfig { record_events: true, ..SimConfig::new(20.0, seed).with_all_infected(n) };
        prop_assert_eq!(run(&g, &p, &c).unwrap(), run(&g, &p, &c).unwrap());
    }
}

#[test]
fn pure_death_decays_exponentially() {
    let g = Graph::path(4).unwrap();
    let p = ModelParams::homogeneous(4, 0.0, 1.0, 0.0).unwrap();
    let times = [0.25, 0.5, 1.0, 2.0];
    let c = with_samples(3.0, 7, (0..4).collect(), &times);
    let est = estimate_infection_probabilities(&g, &p, &c, 20_000).unwrap();
    for (k, t) in times.iter().enumerate() {
        let expected = (-t).exp();
        for i in 0..4 {
            let se = (expected * (1.0 - expected) / 20_000.0).sqrt();
            assert!(
                (est.mean[k][i] - expected).abs() <= 4.0 * se,
                "t {t} node {i}: {}",
                est.mean[k][i]
            );
        }
    }
}

#[test]
#[allow(clippy::needless_range_loop)]
fn zero_synergy_matches_a_naive_plain_simulator() {
    let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)]).unwrap();
    let beta = [0.9, 1.2, 0.7, 1.0, 1.4];
    let delta = [1.0, 0.8, 1.1, 0.9, 1.2];
    let p = ModelParams::new(delta.to_vec(), beta.to_vec(), vec![0.0; 5]).unwrap();
    let times = [0.5, 1.0, 2.0];
    let runs = 8000;
    let c = with_samples(2.0, 11, vec![0, 2], &times);
    let est = estimate_infection_probabilities(&g, &p, &c, runs).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(0x0dd5eed);
    let start = [true, false, true, false, false];
    let mut hits = vec![[0usize; 5]; times.len()];
    for _ in 0..runs {
        for (row, x) in hits
            .iter_mut()
            .zip(naive_sis(&g, &beta, &delta, &start, &times, &mut rng))
        {
            for (h, infected) in row.iter_mut().zip(x) {
                *h += infected as usize;
            }
        }
    }
    for k in 0..times.len() {
        for i in 0..5 {
            let a = est.mean[k][i];
            let b = hits[k][i] as f64 / runs as f64;
            let se = ((a * (1.0 - a) + b * (1.0 - b)) / runs as f64)
                .sqrt()
                .max(1e-3);
            // 15 two-sample comparisons: family-wise allowance of 4.5 SE
            assert!(
                (a - b).abs() <= 4.5 * se,
                "t {} node {i}: {a} vs {b}",
                times[k]
            );
        }
    }
}

#[test]
fn monte_carlo_matches_the_master_equation() {
    let g = Graph::path(4).unwrap();
    let p = ModelParams::new(
        vec![1.0, 0.6, 1.3, 0.9],
        vec![1.5, 0.8, 1.1, 2.0],
        vec![0.7, 0.2, 1.0, 0.4],
    )
    .unwrap();
    let times = [0.3, 0.8, 1.5, 3.0];
    let runs = 10_000;
    let est =
        estimate_infection_probabilities(&g, &p, &with_samples(3.0, 3, vec![1], &times), runs)
            .unwrap();
    let exact = moment_trajectories(&build_exact(&g, &p).unwrap(), 0b0010, &times).unwrap();
    for (k, m) in exact.moments.iter().enumerate() {
        for i in 0..4 {
            let q = m.single(i);
            let se = (q * (1.0 - q) / runs as f64).sqrt().max(1e-3);
            assert!(
                (est.mean[k][i] - q).abs() <= 4.0 * se,
                "t {} node {i}: {} vs {q}",
                times[k],
                est.mean[k][i]
            );
        }
    }
}

#[test]
fn single_node_without_reinfection_dies_out() {
    let g = Graph::empty(1).unwrap();
    let p = ModelParams::homogeneous(1, 0.0, 1.0, 0.0).unwrap();
    let c = SimConfig {
        reinfect: false,
        ..SimConfig::new(1e3, 5).with_all_infected(1)
    };
    let r = run(&g, &p, &c).unwrap();
    assert!(r.extinction_time.is_some());
    assert_eq!(r.final_state.infected_count(), 0);
    assert!(r.time_average < 0.1);
    assert!(r.is_extinct());
}

#[test]
fn karate_extinct_and_persistent_regimes() {
    let g = karate_club();
    let low = ModelParams::homogeneous(34, 0.02, 3.0, 0.01).unwrap();
    let r = run(&g, &low, &SimConfig::new(1e4, 1).with_all_infected(34)).unwrap();
    assert!(r.metastable < 1.0, "{}", r.metastable);

    let high = ModelParams::homogeneous(34, 0.2, 0.1, 0.01).unwrap();
    let r = run(&g, &high, &SimConfig::new(1e3, 1).with_all_infected(34)).unwrap();
    assert!(r.metastable >= 1.0, "{}", r.metastable);
}
