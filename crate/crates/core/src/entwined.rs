//! Entwined pairs: a Kac-style forward path whose corner events alternate
//! between turning and leaving a marker, closed by a return leg that runs
//! backwards in time through the markers to the origin.
//!
//! Between two consecutive crossing points (the origin, then each marker) the
//! forward leg turns exactly once. The return leg over the same interval is
//! the forward segment reflected through the midpoint of the two crossing
//! points, so the two legs bound a light-like rectangle and cross at every
//! marker. The outer edges of the chain of rectangles are the left and right
//! envelopes; each is a Kac path, coloured +1 where it is carried by the
//! forward leg and -1 where it is carried by the return leg.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lattice::{ChargeGrid, Component, Direction, LatticeSpec};
use crate::parallel::{default_workers, partitioned};
use crate::rng::{path_stream, BernoulliEvents, CornerEvents};
use crate::{Error, Result};

/// Draws allowed per pair before a run gives up on finding a reversal.
pub const MAX_ATTEMPTS_PER_PAIR: u32 = 1000;

/// Which kind of event the alternation starts with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StutterPhase {
    TurnFirst,
    #[default]
    MarkFirst,
}

impl FromStr for StutterPhase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "turn-first" => Ok(StutterPhase::TurnFirst),
            "mark-first" => Ok(StutterPhase::MarkFirst),
            _ => Err(Error::InvalidParameter(format!(
                "stutter phase must be turn-first or mark-first, got '{s}'"
            ))),
        }
    }
}

impl fmt::Display for StutterPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StutterPhase::TurnFirst => "turn-first",
            StutterPhase::MarkFirst => "mark-first",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Leg {
    Forward,
    Return,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Envelope {
    Left,
    Right,
}

impl Envelope {
    pub fn other(self) -> Self {
        match self {
            Envelope::Left => Envelope::Right,
            Envelope::Right => Envelope::Left,
        }
    }
}

/// How a pair state is assigned to the four charge channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelLayout {
    /// `ch1` left envelope moving -, `ch2` left envelope moving +,
    /// `ch3` right envelope moving -, `ch4` right envelope moving +.
    #[default]
    Envelope,
    /// `ch1` forward +, `ch2` forward -, `ch3` return +, `ch4` return -.
    Leg,
}

impl FromStr for ChannelLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "envelope" => Ok(ChannelLayout::Envelope),
            "leg" => Ok(ChannelLayout::Leg),
            _ => Err(Error::InvalidParameter(format!(
                "layout must be envelope or leg, got '{s}'"
            ))),
        }
    }
}

impl fmt::Display for ChannelLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelLayout::Envelope => "envelope",
            ChannelLayout::Leg => "leg",
        })
    }
}

/// State of one leg of a pair on one slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairState {
    pub leg: Leg,
    pub envelope: Envelope,
    pub direction: Direction,
}

impl PairState {
    pub fn channel(&self, layout: ChannelLayout) -> Component {
        use Direction::{Minus, Plus};
        match layout {
            ChannelLayout::Envelope => match (self.envelope, self.direction) {
                (Envelope::Left, Minus) => Component::Phi1,
                (Envelope::Left, Plus) => Component::Phi2,
                (Envelope::Right, Minus) => Component::Phi3,
                (Envelope::Right, Plus) => Component::Phi4,
            },
            ChannelLayout::Leg => match (self.leg, self.direction) {
                (Leg::Forward, Plus) => Component::Phi1,
                (Leg::Forward, Minus) => Component::Phi2,
                (Leg::Return, Plus) => Component::Phi3,
                (Leg::Return, Minus) => Component::Phi4,
            },
        }
    }

    /// +1 on the forward leg, -1 on the return leg.
    pub fn charge(&self) -> i64 {
        match self.leg {
            Leg::Forward => 1,
            Leg::Return => -1,
        }
    }
}

/// A point of a leg. `direction` is the direction of the step that arrived at
/// slice `t`; on slice 0 it is the direction the leg leaves with (for the
/// forward leg, the initial direction before any event).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegPoint {
    pub site: usize,
    pub t: usize,
    pub direction: Direction,
}

/// Parameters of a single pair draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConfig {
    /// Earliest time (not step) at which a marker may end the forward leg.
    pub t_reversal: f64,
    /// Maximum forward steps.
    pub n_max: usize,
    pub stutter_phase: StutterPhase,
    pub initial_direction: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntwinedPath {
    /// Slices `0..=t_reversal`, in time order.
    pub forward_leg: Vec<LegPoint>,
    /// `(site, t)` of every marker, the last one being the reversal.
    pub markers: Vec<(usize, usize)>,
    /// `(site, t)` of every forward turn.
    pub turns: Vec<(usize, usize)>,
    pub reversal: (usize, usize),
    /// Slices `t_reversal` down to 0.
    pub return_leg: Vec<LegPoint>,
    pub stutter_phase: StutterPhase,
    forward_envelope: Vec<Envelope>,
}

impl EntwinedPath {
    pub fn reversal_step(&self) -> usize {
        self.reversal.1
    }

    /// Envelope the forward leg occupies on slice `t` (the return leg is on
    /// the other one).
    pub fn forward_envelope(&self, t: usize) -> Envelope {
        self.forward_envelope[t]
    }

    pub fn forward_state(&self, t: usize) -> PairState {
        PairState {
            leg: Leg::Forward,
            envelope: self.forward_envelope[t],
            direction: self.forward_leg[t].direction,
        }
    }

    pub fn return_state(&self, t: usize) -> PairState {
        let point = self.return_point(t);
        PairState {
            leg: Leg::Return,
            envelope: self.forward_envelope[t].other(),
            direction: point.direction,
        }
    }

    pub fn return_point(&self, t: usize) -> LegPoint {
        self.return_leg[self.reversal.1 - t]
    }

    /// Site and direction of one envelope on every slice, with its colour.
    pub fn envelope_track(&self, envelope: Envelope) -> Vec<(LegPoint, i64)> {
        (0..=self.reversal.1)
            .map(|t| {
                if self.forward_envelope[t] == envelope {
                    (self.forward_leg[t], 1)
                } else {
                    (self.return_point(t), -1)
                }
            })
            .collect()
    }

    /// Slices at which the return leg changes direction.
    pub fn return_corners(&self) -> Vec<usize> {
        (1..self.reversal.1)
            .filter(|&t| self.return_point(t).direction != self.return_point(t + 1).direction)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Turn,
    Mark,
}

/// Draws one entwined pair from `events`.
///
/// Fails with [`Error::NoReversal`] if no marker falls at or after the
/// reversal time within `n_max` steps (the caller may redraw), and with
/// [`Error::InconsistentReturn`] if the return leg cannot be closed.
pub fn sample_entwined_pair<E: CornerEvents>(
    events: &mut E,
    spec: &LatticeSpec,
    config: &PairConfig,
) -> Result<EntwinedPath> {
    let reversal_step = validate_pair_config(spec, config)?;

    let mut kind = match config.stutter_phase {
        StutterPhase::TurnFirst => EventKind::Turn,
        StutterPhase::MarkFirst => EventKind::Mark,
    };
    let mut dir = config.initial_direction;
    let mut x = 0i64;
    let mut xs = vec![0i64];
    let mut dirs = vec![dir];
    let mut turn_times = Vec::new();
    let mut marker_times = Vec::new();
    let mut reversal = None;

    for t in 0..config.n_max {
        if events.next_event() {
            match kind {
                EventKind::Turn => {
                    turn_times.push(t);
                    dir = dir.flipped();
                    kind = EventKind::Mark;
                }
                EventKind::Mark => {
                    marker_times.push(t);
                    kind = EventKind::Turn;
                    if t >= reversal_step {
                        reversal = Some(t);
                        break;
                    }
                }
            }
        }
        x += dir.sign();
        xs.push(x);
        dirs.push(dir);
    }
    let Some(t_rev) = reversal else {
        return Err(Error::NoReversal {
            reversal_step,
            n_max: config.n_max,
        });
    };
    debug_assert_eq!(xs.len(), t_rev + 1);

    // Return leg: reflect each forward segment between consecutive crossings.
    let mut crossings = Vec::with_capacity(marker_times.len() + 1);
    crossings.push(0);
    crossings.extend_from_slice(&marker_times);
    let mut xr = vec![0i64; t_rev + 1];
    let mut forward_envelope = vec![Envelope::Left; t_rev + 1];
    forward_envelope[0] = envelope_for(dirs[0]);
    for pair in crossings.windows(2) {
        let (ta, tb) = (pair[0], pair[1]);
        let side = envelope_for(dirs[ta]);
        for t in ta..=tb {
            xr[t] = xs[ta] + xs[tb] - xs[ta + tb - t];
            if t > ta {
                forward_envelope[t] = side;
            }
        }
    }

    if xr[0] != 0 {
        return Err(Error::InconsistentReturn(format!(
            "return leg ends at offset {} instead of the origin",
            xr[0]
        )));
    }
    for &tm in &marker_times {
        if xr[tm] != xs[tm] {
            return Err(Error::InconsistentReturn(format!(
                "return leg misses the marker at slice {tm}"
            )));
        }
    }
    let mut return_dirs = Vec::with_capacity(t_rev + 1);
    for t in 0..=t_rev {
        let delta = match t {
            0 if t_rev == 0 => -config.initial_direction.sign(),
            0 => xr[1] - xr[0],
            _ => xr[t] - xr[t - 1],
        };
        let d = Direction::from_step(delta).ok_or_else(|| {
            Error::InconsistentReturn(format!("return step of {delta} sites at slice {t}"))
        })?;
        return_dirs.push(d);
    }

    let to_site = |offset: i64| spec.site_at_offset(offset);
    let forward_leg = (0..=t_rev)
        .map(|t| {
            Ok(LegPoint {
                site: to_site(xs[t])?,
                t,
                direction: dirs[t],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let return_leg = (0..=t_rev)
        .rev()
        .map(|t| {
            Ok(LegPoint {
                site: to_site(xr[t])?,
                t,
                direction: return_dirs[t],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let markers = marker_times
        .iter()
        .map(|&t| Ok((to_site(xs[t])?, t)))
        .collect::<Result<Vec<_>>>()?;
    let turns = turn_times
        .iter()
        .map(|&t| Ok((to_site(xs[t])?, t)))
        .collect::<Result<Vec<_>>>()?;

    Ok(EntwinedPath {
        reversal: (forward_leg[t_rev].site, t_rev),
        forward_leg,
        markers,
        turns,
        return_leg,
        stutter_phase: config.stutter_phase,
        forward_envelope,
    })
}

fn envelope_for(first_direction: Direction) -> Envelope {
    match first_direction {
        Direction::Plus => Envelope::Right,
        Direction::Minus => Envelope::Left,
    }
}

fn validate_pair_config(spec: &LatticeSpec, config: &PairConfig) -> Result<usize> {
    if config.n_max > spec.n_steps {
        return Err(Error::StepsExceedLattice {
            requested: config.n_max,
            available: spec.n_steps,
        });
    }
    if !(config.t_reversal.is_finite() && config.t_reversal >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "reversal time {} must be finite and nonnegative",
            config.t_reversal
        )));
    }
    let step = spec.step_at_or_after(config.t_reversal);
    if step >= config.n_max {
        return Err(Error::InvalidParameter(format!(
            "reversal time {} (step {step}) must precede n_max = {} steps",
            config.t_reversal, config.n_max
        )));
    }
    Ok(step)
}

/// Adds one pair to `grid`: +1 per forward cell, -1 per return cell.
pub fn deposit_charge(
    path: &EntwinedPath,
    grid: &mut ChargeGrid,
    layout: ChannelLayout,
) -> Result<()> {
    let outside = path
        .forward_leg
        .iter()
        .chain(&path.return_leg)
        .find(|p| !grid.contains(p.site, p.t));
    if let Some(p) = outside {
        return Err(Error::SiteOutOfRange {
            site: p.site as i64,
            n_sites: grid.n_sites(),
        });
    }
    for t in 0..=path.reversal_step() {
        let fwd = path.forward_state(t);
        grid.add(fwd.channel(layout), path.forward_leg[t].site, t, fwd.charge());
        let ret = path.return_state(t);
        grid.add(ret.channel(layout), path.return_point(t).site, t, ret.charge());
    }
    grid.n_pairs += 1;
    Ok(())
}

/// Parameters of an ensemble run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub seed: u64,
    pub n_pairs: u64,
    pub t_reversal: f64,
    pub n_max: usize,
    pub stutter_phase: StutterPhase,
    pub initial_direction: Direction,
    pub layout: ChannelLayout,
}

impl EnsembleConfig {
    fn pair(&self) -> PairConfig {
        PairConfig {
            t_reversal: self.t_reversal,
            n_max: self.n_max,
            stutter_phase: self.stutter_phase,
            initial_direction: self.initial_direction,
        }
    }
}

/// Bookkeeping of an ensemble run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub accepted: u64,
    /// Draws discarded for lack of a reversal marker.
    pub rejected: u64,
    pub min_reversal_step: usize,
    pub max_reversal_step: usize,
}

impl RunStats {
    fn empty() -> Self {
        Self {
            accepted: 0,
            rejected: 0,
            min_reversal_step: usize::MAX,
            max_reversal_step: 0,
        }
    }

    fn absorb(&mut self, other: &RunStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.min_reversal_step = self.min_reversal_step.min(other.min_reversal_step);
        self.max_reversal_step = self.max_reversal_step.max(other.max_reversal_step);
    }

    pub fn rejection_rate(&self) -> f64 {
        let draws = self.accepted + self.rejected;
        if draws == 0 {
            0.0
        } else {
            self.rejected as f64 / draws as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub grid: ChargeGrid,
    pub stats: RunStats,
}

/// Accumulates `n_pairs` accepted pairs. Pair `i` draws from stream `i` of
/// the seed and redraws from the same stream after a rejection, so the grid
/// is bit-identical for any worker count.
pub fn run_ensemble(
    spec: &LatticeSpec,
    config: &EnsembleConfig,
    workers: Option<usize>,
) -> Result<EnsembleRun> {
    if config.n_pairs == 0 {
        return Err(Error::InvalidParameter("n_pairs must be at least 1".into()));
    }
    let pair = config.pair();
    validate_pair_config(spec, &pair)?;
    let p = spec.flip_probability();

    partitioned(
        config.n_pairs,
        workers.unwrap_or_else(default_workers),
        |range| {
            let mut grid = ChargeGrid::new(spec);
            let mut stats = RunStats::empty();
            for index in range {
                let mut events = BernoulliEvents::new(path_stream(config.seed, index), p)?;
                let mut attempts = 0;
                let path = loop {
                    match sample_entwined_pair(&mut events, spec, &pair) {
                        Ok(path) => break path,
                        Err(err @ Error::NoReversal { .. }) => {
                            stats.rejected += 1;
                            attempts += 1;
                            if attempts >= MAX_ATTEMPTS_PER_PAIR {
                                return Err(err);
                            }
                        }
                        Err(err) => return Err(err),
                    }
                };
                deposit_charge(&path, &mut grid, config.layout)?;
                stats.accepted += 1;
                stats.min_reversal_step = stats.min_reversal_step.min(path.reversal_step());
                stats.max_reversal_step = stats.max_reversal_step.max(path.reversal_step());
            }
            Ok(EnsembleRun { grid, stats })
        },
        |acc, part| {
            acc.grid.merge_from(&part.grid)?;
            acc.stats.absorb(&part.stats);
            Ok(())
        },
    )
}
