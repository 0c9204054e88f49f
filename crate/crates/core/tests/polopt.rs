use bayrn_core::polopt::{
    cem_update, discounted_return, power_update, power_weights, train, Algorithm, BatchRunner, EpisodicObjective,
    PolOptConfig, RolloutBatch, Sample, Sequential, POWER_DELTA,
};
use bayrn_core::rng::{derive_seed, rng_from_seed, tag, SimRng};
use bayrn_core::Result;
use rand::Rng;
use std::sync::atomic::{AtomicUsize, Ordering};

/// `-|θ - θ*|²` plus optional uniform noise.
struct Quadratic {
    optimum: Vec<f64>,
    noise: f64,
}

impl EpisodicObjective for Quadratic {
    fn dim(&self) -> usize {
        self.optimum.len()
    }

    fn episode_return(&self, theta: &[f64], rng: &mut SimRng) -> Result<f64> {
        let d: f64 = theta.iter().zip(&self.optimum).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(-d + self.noise * (rng.random::<f64>() - 0.5))
    }
}

fn cem(n_pop: usize, n_iter: usize) -> PolOptConfig {
    PolOptConfig {
        algorithm: Algorithm::Cem,
        n_pop,
        n_is: 1,
        n_iter,
        sigma_init: 1.0,
        rollouts_per_candidate: 1,
        gamma: 1.0,
        elite_frac: 0.2,
        std_floor: 1e-4,
        elitism: true,
        retrain_below: None,
    }
}

fn power(n_pop: usize, n_is: usize, n_iter: usize) -> PolOptConfig {
    PolOptConfig { algorithm: Algorithm::Power, n_is, sigma_init: 0.3, ..cem(n_pop, n_iter) }
}

/// Evaluates in reverse order on scoped threads.
struct ReversedThreads;

impl BatchRunner for ReversedThreads {
    fn run(&self, objective: &dyn EpisodicObjective, thetas: &[Vec<f64>], seeds: &[u64], rollouts: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; thetas.len()];
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..thetas.len())
                .rev()
                .map(|i| {
                    let (t, seed) = (&thetas[i], seeds[i]);
                    (i, s.spawn(move || bayrn_core::polopt::mean_return(objective, t, seed, rollouts)))
                })
                .collect();
            for (i, h) in handles {
                out[i] = h.join().unwrap()?;
            }
            Ok::<_, bayrn_core::Error>(())
        })?;
        Ok(out)
    }
}

struct Counting(AtomicUsize);

impl BatchRunner for Counting {
    fn run(&self, objective: &dyn EpisodicObjective, thetas: &[Vec<f64>], seeds: &[u64], rollouts: usize) -> Result<Vec<f64>> {
        self.0.fetch_add(thetas.len() * rollouts, Ordering::Relaxed);
        Sequential.run(objective, thetas, seeds, rollouts)
    }
}

#[test]
fn discounted_return_cases() {
    assert_eq!(discounted_return(&[1.0; 600], 1.0), 600.0);
    assert!((discounted_return(&[1.0; 20], 0.5) - 2.0 * (1.0 - 0.5f64.powi(20))).abs() < 1e-12);
    assert_eq!(discounted_return(&[0.7, 1.0, 1.0], 0.0), 0.7);
}

#[test]
fn power_update_stays_in_elite_hull() {
    let mut rng = rng_from_seed(31);
    for _ in 0..100 {
        let dim = rng.random_range(1..6);
        let theta: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let n_batches = rng.random_range(1..4);
        let history: Vec<RolloutBatch> = (0..n_batches)
            .map(|g| RolloutBatch {
                generation: g,
                samples: (0..rng.random_range(1..12))
                    .map(|_| Sample {
                        theta: (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect(),
                        ret: rng.random_range(-10.0..10.0),
                    })
                    .collect(),
            })
            .collect();
        let total: usize = history.iter().map(|b| b.samples.len()).sum();
        let n_is = rng.random_range(1..=total);
        let weights = power_weights(&history, n_is).unwrap();
        assert_eq!(weights.len(), n_is);
        assert!(weights.iter().all(|w| w.2 >= 0.0));
        let sum: f64 = weights.iter().map(|w| w.2).sum();
        assert!(sum <= 1.0 + 1e-12);
        // θ' is θ plus a sub-convex combination of the elite offsets
        let next = power_update(&theta, &history, n_is).unwrap();
        for d in 0..dim {
            let expect: f64 = theta[d] + weights.iter().map(|&(b, i, w)| w * (history[b].samples[i].theta[d] - theta[d])).sum::<f64>();
            assert!((next[d] - expect).abs() < 1e-12);
            let (lo, hi) = weights.iter().fold((theta[d], theta[d]), |(lo, hi), &(b, i, _)| {
                let v = history[b].samples[i].theta[d];
                (lo.min(v), hi.max(v))
            });
            assert!(next[d] >= lo - 1e-12 && next[d] <= hi + 1e-12);
        }
    }
}

#[test]
fn power_hand_computed_case() {
    let theta = [0.0, 1.0];
    let e1 = [1.0, 0.0];
    let e2 = [0.0, 2.0];
    let history = vec![RolloutBatch {
        generation: 0,
        samples: vec![
            Sample { theta: vec![theta[0] + e1[0], theta[1] + e1[1]], ret: 3.0 },
            Sample { theta: vec![theta[0] + e2[0], theta[1] + e2[1]], ret: 1.0 },
            Sample { theta: vec![5.0, 5.0], ret: 0.0 },
        ],
    }];
    let next = power_update(&theta, &history, 2).unwrap();
    let norm = 4.0 + POWER_DELTA;
    assert!((next[0] - (theta[0] + 3.0 * e1[0] / norm)).abs() < 1e-12);
    assert!((next[1] - (theta[1] + 1.0 * e2[1] / norm)).abs() < 1e-12);
}

#[test]
fn cem_top_two_of_four() {
    let pop: Vec<Sample> = [([1.0, 0.0], 1.0), ([3.0, 2.0], 4.0), ([0.0, 0.0], -1.0), ([5.0, 6.0], 2.0)]
        .iter()
        .map(|(t, r)| Sample { theta: t.to_vec(), ret: *r })
        .collect();
    let (mean, std) = cem_update(&pop, 0.5, 0.0).unwrap();
    assert_eq!(mean, vec![4.0, 4.0]);
    assert_eq!(std, vec![1.0, 2.0]);
}

#[test]
fn cem_converges_on_quadratic() {
    let objective = Quadratic { optimum: vec![1.5, -0.7], noise: 0.0 };
    for seed in 0..3 {
        let out = train(&objective, &[0.0, 0.0], &cem(30, 50), seed, &Sequential).unwrap();
        assert_eq!(out.curve.len(), 50);
        for (t, o) in out.theta.iter().zip(&objective.optimum) {
            assert!((t - o).abs() < 1e-2, "seed {seed}: {:?}", out.theta);
        }
    }
}

#[test]
fn power_improves_on_quadratic() {
    let objective = Quadratic { optimum: vec![1.0, -1.0, 0.5], noise: 0.0 };
    let start = vec![0.0; 3];
    let out = train(&objective, &start, &power(20, 5, 40), 4, &Sequential).unwrap();
    let d0: f64 = objective.optimum.iter().map(|o| o * o).sum();
    assert!(-out.j_sim < 0.1 * d0, "{}", out.j_sim);
}

#[test]
fn zero_generations_return_the_start() {
    let objective = Quadratic { optimum: vec![1.0, 2.0], noise: 0.1 };
    let counter = Counting(AtomicUsize::new(0));
    let out = train(&objective, &[0.3, 0.4], &cem(10, 0), 0, &counter).unwrap();
    assert_eq!(out.theta, vec![0.3, 0.4]);
    assert!(out.curve.is_empty());
    assert_eq!(counter.0.load(Ordering::Relaxed), 1);
}

#[test]
fn training_is_deterministic_and_runner_independent() {
    let objective = Quadratic { optimum: vec![0.5, -0.5], noise: 0.5 };
    for cfg in [cem(12, 10), power(12, 4, 10)] {
        let a = train(&objective, &[0.0, 0.0], &cfg, 99, &Sequential).unwrap();
        let b = train(&objective, &[0.0, 0.0], &cfg, 99, &Sequential).unwrap();
        let c = train(&objective, &[0.0, 0.0], &cfg, 99, &ReversedThreads).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let d = train(&objective, &[0.0, 0.0], &cfg, 100, &Sequential).unwrap();
        assert_ne!(a.theta, d.theta);
    }
}

#[test]
fn best_so_far_never_decreases_with_elitism() {
    let objective = Quadratic { optimum: vec![2.0, -1.0, 0.0], noise: 2.0 };
    for seed in 0..5 {
        let out = train(&objective, &[0.0; 3], &cem(8, 30), seed, &Sequential).unwrap();
        for w in out.curve.windows(2) {
            assert!(w[1].best >= w[0].best);
        }
    }
}

#[test]
fn retry_keeps_the_better_run() {
    // returns are never positive, so a threshold of 1 always triggers the retry
    let objective = Quadratic { optimum: vec![3.0], noise: 0.0 };
    let cfg = PolOptConfig { retrain_below: Some(1.0), ..cem(6, 3) };
    let out = train(&objective, &[0.0], &cfg, 5, &Sequential).unwrap();
    let first = train(&objective, &[0.0], &cem(6, 3), 5, &Sequential).unwrap();
    let second = train(&objective, &[0.0], &cem(6, 3), derive_seed(5, tag::RETRY, 0), &Sequential).unwrap();
    assert_eq!(out.j_sim, first.j_sim.max(second.j_sim));
    assert_eq!(out.retried, second.j_sim >= first.j_sim);
}

#[test]
fn invalid_configs_are_rejected() {
    let objective = Quadratic { optimum: vec![0.0], noise: 0.0 };
    for cfg in [
        PolOptConfig { n_is: 0, ..power(5, 1, 1) },
        PolOptConfig { n_is: 6, ..power(5, 1, 1) },
        PolOptConfig { sigma_init: 0.0, ..cem(5, 1) },
        PolOptConfig { gamma: 1.5, ..cem(5, 1) },
        PolOptConfig { elite_frac: 0.0, ..cem(5, 1) },
    ] {
        assert!(train(&objective, &[0.0], &cfg, 0, &Sequential).is_err());
    }
    assert!(train(&objective, &[0.0, 1.0], &cem(5, 1), 0, &Sequential).is_err());
}
