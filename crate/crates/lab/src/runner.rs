use bayrn_core::polopt::{mean_return, BatchRunner, EpisodicObjective};
use rayon::prelude::*;

/// Evaluates a batch on the rayon thread pool. Every candidate is seeded
/// independently, so results match [`bayrn_core::polopt::Sequential`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl BatchRunner for Parallel {
    fn run(
        &self,
        objective: &dyn EpisodicObjective,
        thetas: &[Vec<f64>],
        seeds: &[u64],
        rollouts: usize,
    ) -> bayrn_core::Result<Vec<f64>> {
        if thetas.len() != seeds.len() {
            return Err(bayrn_core::Error::DimensionMismatch { expected: thetas.len(), got: seeds.len() });
        }
        thetas.par_iter().zip(seeds.par_iter()).map(|(t, &s)| mean_return(objective, t, s, rollouts)).collect()
    }
}
