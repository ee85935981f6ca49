//! The Kac persistent random walk.
//!
//! Densities follow the two-state difference scheme
//!
//! ```text
//! F+_n(z) = (1 - p) F+_{n-1}(z - c dt) + p F-_{n-1}(z)
//! F-_n(z) = (1 - p) F-_{n-1}(z + c dt) + p F+_{n-1}(z)
//! ```
//!
//! with `p = a dt`. The scattering source sits at `z`: a particle that
//! reverses during a step stays on its site for that step. The sampler uses
//! the same rule so its empirical densities converge to [`evolve_kac`].

use crate::lattice::{Direction, LatticeSpec, TwoField};
use crate::parallel::{default_workers, partitioned};
use crate::rng::{path_stream, BernoulliEvents, CornerEvents};
use crate::{Error, Result};

/// Advances a two-state density by one time step.
pub fn step_kac(field: &TwoField, spec: &LatticeSpec) -> Result<TwoField> {
    spec.check_sites(field.n_sites())?;
    let p = spec.flip_probability();
    let q = 1.0 - p;
    let n = field.n_sites();
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    for i in 0..n {
        let from_left = if i > 0 { field.plus[i - 1] } else { 0.0 };
        let from_right = if i + 1 < n { field.minus[i + 1] } else { 0.0 };
        plus[i] = q * from_left + p * field.minus[i];
        minus[i] = q * from_right + p * field.plus[i];
    }
    Ok(TwoField {
        plus,
        minus,
        t_index: field.t_index + 1,
    })
}

/// Returns `n + 1` slices: `init` followed by `n` applications of [`step_kac`].
pub fn evolve_kac(init: &TwoField, spec: &LatticeSpec, n: usize) -> Result<Vec<TwoField>> {
    if n > spec.n_steps {
        return Err(Error::StepsExceedLattice {
            requested: n,
            available: spec.n_steps,
        });
    }
    spec.check_sites(init.n_sites())?;
    let mut history = Vec::with_capacity(n + 1);
    history.push(init.clone());
    for _ in 0..n {
        let next = step_kac(history.last().expect("non-empty"), spec)?;
        history.push(next);
    }
    Ok(history)
}

/// One sampled Kac trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct KacPath {
    pub start_site: usize,
    pub initial_direction: Direction,
    /// Direction held after each step; `steps[k]` belongs to slice `k + 1`.
    pub steps: Vec<Direction>,
    /// Zero-based step indices at which the direction reversed.
    pub flip_events: Vec<usize>,
}

impl KacPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Direction carried on slice `t` (slice 0 carries the initial direction).
    pub fn direction_at(&self, t: usize) -> Direction {
        if t == 0 {
            self.initial_direction
        } else {
            self.steps[t - 1]
        }
    }

    /// Signed site offsets from the start, one per slice `0..=len`.
    pub fn offsets(&self) -> Vec<i64> {
        let mut offsets = Vec::with_capacity(self.steps.len() + 1);
        let mut x = 0;
        offsets.push(x);
        let mut flips = self.flip_events.iter().peekable();
        for (k, dir) in self.steps.iter().enumerate() {
            if flips.peek() == Some(&&k) {
                flips.next();
            } else {
                x += dir.sign();
            }
            offsets.push(x);
        }
        offsets
    }
}

/// Samples an `n`-step path: one corner trial per step, a successful trial
/// reverses the direction in place, otherwise the walker moves one site.
pub fn sample_kac_path<E: CornerEvents>(
    events: &mut E,
    spec: &LatticeSpec,
    n: usize,
    start_site: usize,
    initial_direction: Direction,
) -> Result<KacPath> {
    if n == 0 {
        return Err(Error::InvalidParameter("a Kac path needs at least one step".into()));
    }
    if start_site >= spec.n_sites() {
        return Err(Error::SiteOutOfRange {
            site: start_site as i64,
            n_sites: spec.n_sites(),
        });
    }
    let mut dir = initial_direction;
    let mut steps = Vec::with_capacity(n);
    let mut flip_events = Vec::new();
    for k in 0..n {
        if events.next_event() {
            dir = dir.flipped();
            flip_events.push(k);
        }
        steps.push(dir);
    }
    Ok(KacPath {
        start_site,
        initial_direction,
        steps,
        flip_events,
    })
}

/// Empirical slice densities from `n_paths` sampled walks, each slice
/// normalised by `n_paths`. Path `i` uses stream `i` of `seed`.
pub fn kac_density_estimate(
    seed: u64,
    n_paths: u64,
    spec: &LatticeSpec,
    n_steps: usize,
    init_site: usize,
    init_direction: Direction,
    workers: Option<usize>,
) -> Result<Vec<TwoField>> {
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
    }
    if n_steps > spec.n_steps {
        return Err(Error::StepsExceedLattice {
            requested: n_steps,
            available: spec.n_steps,
        });
    }
    if init_site >= spec.n_sites() {
        return Err(Error::SiteOutOfRange {
            site: init_site as i64,
            n_sites: spec.n_sites(),
        });
    }
    let n_sites = spec.n_sites();
    let slice_len = 2 * n_sites;
    let p = spec.flip_probability();

    let histogram = partitioned(
        n_paths,
        workers.unwrap_or_else(default_workers),
        |range| {
            let mut hist = vec![0u64; slice_len * (n_steps + 1)];
            for path in range {
                let mut events = BernoulliEvents::new(path_stream(seed, path), p)?;
                let mut site = init_site as i64;
                let mut dir = init_direction;
                hist[bin(dir, init_site, n_sites)] += 1;
                for t in 1..=n_steps {
                    if events.next_event() {
                        dir = dir.flipped();
                    } else {
                        site += dir.sign();
                    }
                    if site < 0 || site >= n_sites as i64 {
                        return Err(Error::SiteOutOfRange { site, n_sites });
                    }
                    hist[t * slice_len + bin(dir, site as usize, n_sites)] += 1;
                }
            }
            Ok(hist)
        },
        |acc, part| {
            acc.iter_mut().zip(part).for_each(|(a, b)| *a += b);
            Ok(())
        },
    )?;

    let norm = n_paths as f64;
    (0..=n_steps)
        .map(|t| {
            let slice = &histogram[t * slice_len..(t + 1) * slice_len];
            let plus = slice[..n_sites].iter().map(|&c| c as f64 / norm).collect();
            let minus = slice[n_sites..].iter().map(|&c| c as f64 / norm).collect();
            TwoField::from_components(plus, minus, t)
        })
        .collect()
}

#[inline]
fn bin(dir: Direction, site: usize, n_sites: usize) -> usize {
    match dir {
        Direction::Plus => site,
        Direction::Minus => n_sites + site,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::ScriptedEvents;
    use approx::assert_abs_diff_eq;

    fn spec(a: f64, steps: usize) -> LatticeSpec {
        LatticeSpec::new(0.1, 0.1, 1.0, a, 3.0, steps).unwrap()
    }

    #[test]
    fn pure_streaming_moves_delta_one_site() {
        let s = spec(0.0, 10);
        let f = TwoField::delta(&s, s.origin(), Direction::Plus).unwrap();
        let g = step_kac(&f, &s).unwrap();
        assert_eq!(g.plus[s.origin() + 1], 1.0);
        assert_eq!(g.total_mass(), 1.0);
        assert_eq!(g.t_index, 1);
    }

    #[test]
    fn one_step_substitution() {
        let s = spec(1.0, 10);
        let f = TwoField::delta(&s, s.origin(), Direction::Plus).unwrap();
        let g = step_kac(&f, &s).unwrap();
        assert_abs_diff_eq!(g.plus[s.origin() + 1], 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(g.minus[s.origin()], 0.1, epsilon = 1e-15);
        let others: f64 = g.plus.iter().chain(&g.minus).map(|v| v.abs()).sum::<f64>() - 1.0;
        assert_abs_diff_eq!(others, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn evolve_zero_steps_is_identity() {
        let s = spec(1.0, 10);
        let f = TwoField::delta(&s, s.origin(), Direction::Minus).unwrap();
        assert_eq!(evolve_kac(&f, &s, 0).unwrap(), vec![f]);
    }

    #[test]
    fn evolve_streams_delta_five_sites() {
        let s = spec(0.0, 10);
        let f = TwoField::delta(&s, s.origin(), Direction::Plus).unwrap();
        let h = evolve_kac(&f, &s, 5).unwrap();
        assert_eq!(h.len(), 6);
        assert_eq!(h[5].plus[s.origin() + 5], 1.0);
    }

    #[test]
    fn evolve_beyond_lattice_is_an_error() {
        let s = spec(1.0, 10);
        let f = TwoField::zeros(&s);
        assert!(matches!(
            evolve_kac(&f, &s, 11),
            Err(Error::StepsExceedLattice { .. })
        ));
    }

    #[test]
    fn step_preserves_nonnegativity() {
        let s = spec(5.0, 10);
        let f = TwoField::from_profile(&s, [0.3, 1.2], |z| (-(z * z)).exp()).unwrap();
        let h = evolve_kac(&f, &s, 10).unwrap();
        assert!(h
            .iter()
            .all(|g| g.plus.iter().chain(&g.minus).all(|&v| v >= 0.0)));
    }

    #[test]
    fn straight_path_without_events() {
        let s = spec(0.0, 10);
        let mut events = ScriptedEvents::default();
        let path = sample_kac_path(&mut events, &s, 8, s.origin(), Direction::Minus).unwrap();
        assert!(path.flip_events.is_empty());
        assert_eq!(path.offsets(), (0..=8).map(|k| -k).collect::<Vec<i64>>());
    }

    #[test]
    fn scripted_flip_stays_in_place() {
        let s = spec(1.0, 10);
        let mut events = ScriptedEvents::at_times([2]);
        let path = sample_kac_path(&mut events, &s, 4, s.origin(), Direction::Plus).unwrap();
        assert_eq!(path.flip_events, vec![2]);
        assert_eq!(path.offsets(), vec![0, 1, 2, 2, 1]);
        assert_eq!(path.direction_at(3), Direction::Minus);
    }

    #[test]
    fn fixed_seed_reproduces_path() {
        let s = spec(3.0, 30);
        let draw = || {
            let mut events = BernoulliEvents::new(path_stream(99, 5), s.flip_probability()).unwrap();
            sample_kac_path(&mut events, &s, 30, s.origin(), Direction::Plus).unwrap()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn zero_step_path_is_an_error() {
        let s = spec(1.0, 10);
        let mut events = ScriptedEvents::default();
        assert!(sample_kac_path(&mut events, &s, 0, s.origin(), Direction::Plus).is_err());
    }

    #[test]
    fn single_straight_path_density_is_an_indicator() {
        let s = spec(0.0, 10);
        let h = kac_density_estimate(1, 1, &s, 6, s.origin(), Direction::Plus, Some(1)).unwrap();
        for (t, slice) in h.iter().enumerate() {
            assert_eq!(slice.plus[s.origin() + t], 1.0);
            assert_eq!(slice.total_mass(), 1.0);
        }
    }

    #[test]
    fn density_estimate_is_worker_independent() {
        let s = spec(2.0, 20);
        let one = kac_density_estimate(4, 5000, &s, 20, s.origin(), Direction::Plus, Some(1)).unwrap();
        let many = kac_density_estimate(4, 5000, &s, 20, s.origin(), Direction::Plus, Some(7)).unwrap();
        assert_eq!(one, many);
    }
}
