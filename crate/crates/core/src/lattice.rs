//! Space-time lattice, density fields and the signed charge tally.
//!
//! Sites are indexed `0..n_sites` with the origin at the centre; slice `n`
//! sits at time `n * dt`. The grid is symmetric, `z_min = -z_max`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const SPACING_TOLERANCE: f64 = 1e-12;

/// Validated lattice geometry and rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dz: f64,
    pub dt: f64,
    pub c: f64,
    /// Scattering rate, read as the mass `m` in the Dirac picture.
    pub a: f64,
    pub n_steps: usize,
    half_width: usize,
}

impl LatticeSpec {
    /// Builds a spec on `[-z_extent, z_extent]`.
    pub fn new(dz: f64, dt: f64, c: f64, a: f64, z_extent: f64, n_steps: usize) -> Result<Self> {
        for (name, value) in [("dz", dz), ("dt", dt), ("c", c), ("z_extent", z_extent)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositive { name, value });
            }
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::NonPositive { name: "a", value: a });
        }
        let c_dt = c * dt;
        if ((c_dt - dz) / dz).abs() > SPACING_TOLERANCE {
            return Err(Error::CflViolation { c_dt, dz });
        }
        let p = a * dt;
        if p >= 1.0 {
            return Err(Error::FlipProbability { p });
        }
        let ratio = z_extent / dz;
        let half_width = ratio.round();
        if half_width < 1.0 || ((ratio - half_width) / half_width).abs() > 1e-9 {
            return Err(Error::ExtentNotMultiple { extent: z_extent, dz });
        }
        let half_width = half_width as usize;
        if n_steps > half_width {
            return Err(Error::LightConeExceedsGrid {
                reach: n_steps,
                half_width,
            });
        }
        Ok(Self {
            dz,
            dt,
            c,
            a,
            n_steps,
            half_width,
        })
    }

    /// Probability of a scattering event per time step, `p = a * dt`.
    pub fn flip_probability(&self) -> f64 {
        self.a * self.dt
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn n_sites(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn n_slices(&self) -> usize {
        self.n_steps + 1
    }

    pub fn origin(&self) -> usize {
        self.half_width
    }

    pub fn z_max(&self) -> f64 {
        self.half_width as f64 * self.dz
    }

    pub fn z_min(&self) -> f64 {
        -self.z_max()
    }

    pub fn z_of(&self, site: usize) -> f64 {
        (site as f64 - self.half_width as f64) * self.dz
    }

    pub fn site_of(&self, z: f64) -> Option<usize> {
        let offset = (z / self.dz).round();
        let site = offset + self.half_width as f64;
        (site >= 0.0 && site < self.n_sites() as f64).then_some(site as usize)
    }

    /// Grid index of a signed site offset from the origin.
    pub fn site_at_offset(&self, offset: i64) -> Result<usize> {
        let site = offset + self.half_width as i64;
        if site < 0 || site >= self.n_sites() as i64 {
            return Err(Error::SiteOutOfRange {
                site,
                n_sites: self.n_sites(),
            });
        }
        Ok(site as usize)
    }

    pub fn time_of(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    /// First step whose time is at or after `t`.
    pub fn step_at_or_after(&self, t: f64) -> usize {
        let steps = t / self.dt;
        let nearest = steps.round();
        if (steps - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest.max(0.0) as usize
        } else {
            steps.ceil().max(0.0) as usize
        }
    }

    /// Same lattice with a different number of steps.
    pub fn with_steps(&self, n_steps: usize) -> Result<Self> {
        Self::new(self.dz, self.dt, self.c, self.a, self.z_max(), n_steps)
    }

    pub(crate) fn check_sites(&self, found: usize) -> Result<()> {
        if found != self.n_sites() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} sites", self.n_sites()),
                found: format!("{found} sites"),
            });
        }
        Ok(())
    }
}

/// Free-function form of [`LatticeSpec::new`].
pub fn make_lattice(
    dz: f64,
    dt: f64,
    c: f64,
    a: f64,
    z_extent: f64,
    n_steps: usize,
) -> Result<LatticeSpec> {
    LatticeSpec::new(dz, dt, c, a, z_extent, n_steps)
}

/// Direction of motion along z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Plus,
    Minus,
}

impl Direction {
    pub fn sign(self) -> i64 {
        match self {
            Direction::Plus => 1,
            Direction::Minus => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Direction::Plus => Direction::Minus,
            Direction::Minus => Direction::Plus,
        }
    }

    pub fn from_step(delta: i64) -> Option<Self> {
        match delta {
            1 => Some(Direction::Plus),
            -1 => Some(Direction::Minus),
            _ => None,
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    /// Accepts `plus`/`+`/`+1` and `minus`/`-`/`-1`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" | "+1" | "1" => Ok(Direction::Plus),
            "minus" | "-" | "-1" => Ok(Direction::Minus),
            _ => Err(Error::InvalidParameter(format!(
                "direction must be plus or minus, got '{s}'"
            ))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Plus => "plus",
            Direction::Minus => "minus",
        })
    }
}

/// One of the four field components (or charge channels), `ch1..ch4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Component {
    Phi1,
    Phi2,
    Phi3,
    Phi4,
}

impl Component {
    pub const ALL: [Component; 4] = [
        Component::Phi1,
        Component::Phi2,
        Component::Phi3,
        Component::Phi4,
    ];

    /// Zero-based index.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Parses the one-based label used on the command line and in file headers.
    pub fn from_label(label: usize) -> Result<Self> {
        match label {
            1..=4 => Ok(Self::ALL[label - 1]),
            _ => Err(Error::InvalidParameter(format!(
                "component label {label} not in 1..4"
            ))),
        }
    }

    pub fn label(self) -> usize {
        self.index() + 1
    }
}

fn check_finite(component: usize, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(site) => Err(Error::NonFinite { component, site }),
        None => Ok(()),
    }
}

/// Right- and left-moving Kac densities on one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoField {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub t_index: usize,
}

impl TwoField {
    pub fn zeros(spec: &LatticeSpec) -> Self {
        Self {
            plus: vec![0.0; spec.n_sites()],
            minus: vec![0.0; spec.n_sites()],
            t_index: 0,
        }
    }

    pub fn from_components(plus: Vec<f64>, minus: Vec<f64>, t_index: usize) -> Result<Self> {
        if plus.len() != minus.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} sites", plus.len()),
                found: format!("{} sites", minus.len()),
            });
        }
        check_finite(0, &plus)?;
        check_finite(1, &minus)?;
        Ok(Self {
            plus,
            minus,
            t_index,
        })
    }

    /// Unit mass at `site` in the `direction` component.
    pub fn delta(spec: &LatticeSpec, site: usize, direction: Direction) -> Result<Self> {
        if site >= spec.n_sites() {
            return Err(Error::SiteOutOfRange {
                site: site as i64,
                n_sites: spec.n_sites(),
            });
        }
        let mut field = Self::zeros(spec);
        match direction {
            Direction::Plus => field.plus[site] = 1.0,
            Direction::Minus => field.minus[site] = 1.0,
        }
        Ok(field)
    }

    /// Samples `profile(z)` on every site, scaled per component.
    pub fn from_profile(
        spec: &LatticeSpec,
        weights: [f64; 2],
        profile: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values: Vec<f64> = (0..spec.n_sites()).map(|i| profile(spec.z_of(i))).collect();
        Self::from_components(
            values.iter().map(|v| v * weights[0]).collect(),
            values.iter().map(|v| v * weights[1]).collect(),
            0,
        )
    }

    pub fn n_sites(&self) -> usize {
        self.plus.len()
    }

    pub fn component(&self, direction: Direction) -> &[f64] {
        match direction {
            Direction::Plus => &self.plus,
            Direction::Minus => &self.minus,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.plus.iter().chain(&self.minus).sum()
    }
}

/// The four signed entwined-pair densities on one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct FourField {
    pub phi: [Vec<f64>; 4],
    pub t_index: usize,
}

impl FourField {
    pub fn zeros(spec: &LatticeSpec) -> Self {
        let n = spec.n_sites();
        Self {
            phi: std::array::from_fn(|_| vec![0.0; n]),
            t_index: 0,
        }
    }

    pub fn from_components(phi: [Vec<f64>; 4], t_index: usize) -> Result<Self> {
        let n = phi[0].len();
        for (k, values) in phi.iter().enumerate() {
            if values.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: format!("{n} sites"),
                    found: format!("{} sites in component {}", values.len(), k + 1),
                });
            }
            check_finite(k, values)?;
        }
        Ok(Self { phi, t_index })
    }

    pub fn delta(spec: &LatticeSpec, site: usize, component: Component) -> Result<Self> {
        if site >= spec.n_sites() {
            return Err(Error::SiteOutOfRange {
                site: site as i64,
                n_sites: spec.n_sites(),
            });
        }
        let mut field = Self::zeros(spec);
        field.phi[component.index()][site] = 1.0;
        Ok(field)
    }

    pub fn from_profile(
        spec: &LatticeSpec,
        weights: [f64; 4],
        profile: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values: Vec<f64> = (0..spec.n_sites()).map(|i| profile(spec.z_of(i))).collect();
        Self::from_components(
            std::array::from_fn(|k| values.iter().map(|v| v * weights[k]).collect()),
            0,
        )
    }

    pub fn n_sites(&self) -> usize {
        self.phi[0].len()
    }

    pub fn component(&self, component: Component) -> &[f64] {
        &self.phi[component.index()]
    }

    /// Elementwise `alpha * self + beta * other`.
    pub fn linear_combination(&self, alpha: f64, other: &FourField, beta: f64) -> Result<Self> {
        if other.n_sites() != self.n_sites() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} sites", self.n_sites()),
                found: format!("{} sites", other.n_sites()),
            });
        }
        let phi = std::array::from_fn(|k| {
            self.phi[k]
                .iter()
                .zip(&other.phi[k])
                .map(|(u, v)| alpha * u + beta * v)
                .collect()
        });
        Ok(Self {
            phi,
            t_index: self.t_index,
        })
    }
}

/// Signed charge tallies per (channel, site, slice), plus unsigned visit
/// counts used for Monte Carlo standard errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChargeGrid {
    n_sites: usize,
    n_slices: usize,
    counts: Vec<i64>,
    visits: Vec<u64>,
    pub n_pairs: u64,
}

impl ChargeGrid {
    pub fn new(spec: &LatticeSpec) -> Self {
        Self::with_shape(spec.n_sites(), spec.n_slices())
    }

    pub fn with_shape(n_sites: usize, n_slices: usize) -> Self {
        let len = 4 * n_sites * n_slices;
        Self {
            n_sites,
            n_slices,
            counts: vec![0; len],
            visits: vec![0; len],
            n_pairs: 0,
        }
    }

    /// Rebuilds a grid from flat tallies laid out as `[t][site][channel]`.
    pub fn from_parts(
        n_sites: usize,
        n_slices: usize,
        counts: Vec<i64>,
        visits: Vec<u64>,
        n_pairs: u64,
    ) -> Result<Self> {
        let len = 4 * n_sites * n_slices;
        if counts.len() != len || visits.len() != len {
            return Err(Error::ShapeMismatch {
                expected: format!("{len} tallies"),
                found: format!("{} counts, {} visits", counts.len(), visits.len()),
            });
        }
        Ok(Self {
            n_sites,
            n_slices,
            counts,
            visits,
            n_pairs,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_slices(&self) -> usize {
        self.n_slices
    }

    #[inline]
    fn index(&self, channel: Component, site: usize, t: usize) -> usize {
        (t * self.n_sites + site) * 4 + channel.index()
    }

    pub fn contains(&self, site: usize, t: usize) -> bool {
        site < self.n_sites && t < self.n_slices
    }

    pub fn count(&self, channel: Component, site: usize, t: usize) -> i64 {
        self.counts[self.index(channel, site, t)]
    }

    pub fn visits(&self, channel: Component, site: usize, t: usize) -> u64 {
        self.visits[self.index(channel, site, t)]
    }

    /// Adds `charge` (±1) to one cell. The caller bounds-checks.
    #[inline]
    pub(crate) fn add(&mut self, channel: Component, site: usize, t: usize, charge: i64) {
        let i = self.index(channel, site, t);
        self.counts[i] += charge;
        self.visits[i] += 1;
    }

    pub fn counts(&self) -> &[i64] {
        &self.counts
    }

    pub fn visit_counts(&self) -> &[u64] {
        &self.visits
    }

    /// Net charge on slice `t`, summed over all channels and sites.
    pub fn slice_total(&self, t: usize) -> i64 {
        let start = t * self.n_sites * 4;
        self.counts[start..start + self.n_sites * 4].iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.n_pairs == 0 && self.visits.iter().all(|&v| v == 0)
    }

    pub fn merge_from(&mut self, other: &ChargeGrid) -> Result<()> {
        if (self.n_sites, self.n_slices) != (other.n_sites, other.n_slices) {
            return Err(Error::ShapeMismatch {
                expected: format!("{} sites x {} slices", self.n_sites, self.n_slices),
                found: format!("{} sites x {} slices", other.n_sites, other.n_slices),
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.visits.iter_mut().zip(&other.visits) {
            *a += b;
        }
        self.n_pairs += other.n_pairs;
        Ok(())
    }
}

/// Sums two grids of identical shape.
pub fn merge(mut a: ChargeGrid, b: &ChargeGrid) -> Result<ChargeGrid> {
    a.merge_from(b)?;
    Ok(a)
}
