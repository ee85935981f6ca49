//! Per-path random streams and the corner-event sources the samplers consume.
//!
//! Path `i` of a run seeded with `s` always draws from ChaCha8 stream `i` of
//! key `s`, so results do not depend on how paths are spread over workers.

use std::collections::BTreeSet;

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Independent stream for path `index` under `seed`.
pub fn path_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Yields, step by step, whether a scattering (corner) event occurs.
///
/// Call `k` (zero-based) decides the event at time step `k`, i.e. before the
/// move from slice `k` to slice `k + 1`.
pub trait CornerEvents {
    fn next_event(&mut self) -> bool;
}

/// One Bernoulli(p) trial per step.
#[derive(Debug, Clone)]
pub struct BernoulliEvents<R> {
    rng: R,
    trial: Bernoulli,
}

impl<R: Rng> BernoulliEvents<R> {
    pub fn new(rng: R, p: f64) -> Result<Self> {
        let trial = Bernoulli::new(p)
            .map_err(|_| Error::InvalidParameter(format!("event probability {p} not in [0, 1]")))?;
        Ok(Self { rng, trial })
    }
}

impl<R: Rng> CornerEvents for BernoulliEvents<R> {
    fn next_event(&mut self) -> bool {
        self.trial.sample(&mut self.rng)
    }
}

/// Events at a fixed set of time steps; used to hand-trace constructions.
#[derive(Debug, Clone, Default)]
pub struct ScriptedEvents {
    times: BTreeSet<usize>,
    step: usize,
}

impl ScriptedEvents {
    pub fn at_times(times: impl IntoIterator<Item = usize>) -> Self {
        Self {
            times: times.into_iter().collect(),
            step: 0,
        }
    }
}

impl CornerEvents for ScriptedEvents {
    fn next_event(&mut self) -> bool {
        let hit = self.times.contains(&self.step);
        self.step += 1;
        hit
    }
}
