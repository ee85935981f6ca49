//! Continuum residuals of lattice histories and comparison of sampled charge
//! grids against the discrete propagator.
//!
//! Residuals use centred differences on interior points only: the first and
//! last slice and a two-site margin at each edge are skipped. Norms are
//! discrete L2, `sqrt(dz * sum r^2)` per slice and `sqrt(dt * sum_n norm_n^2)`
//! over the history.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dirac::{decay_compensation, DiracHistory, EvolutionMode};
use crate::lattice::{ChargeGrid, Component, FourField, LatticeSpec, TwoField};
use crate::{Error, Result};

const MARGIN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationTag {
    Telegraph,
    Dirac,
    KleinGordon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub equation: EquationTag,
    /// Per interior slice `1..len-1`, all components together.
    pub norms: Vec<f64>,
    /// Space-time norm of each component's residual.
    pub component_norms: Vec<f64>,
    pub dt: f64,
    pub dz: f64,
    /// `coarse / fine` global norm, set by [`ResidualReport::with_ratio_against`].
    pub convergence_ratio: Option<f64>,
}

impl ResidualReport {
    pub fn global_norm(&self) -> f64 {
        (self.dt * self.norms.iter().map(|n| n * n).sum::<f64>()).sqrt()
    }

    /// Records the ratio of `coarse`'s residual norm to this (finer) one.
    pub fn with_ratio_against(mut self, coarse: &ResidualReport) -> Self {
        self.convergence_ratio = Some(coarse.global_norm() / self.global_norm());
        self
    }
}

/// Ratio of residual norms across a dt-halving pair, per component.
pub fn component_ratios(coarse: &ResidualReport, fine: &ResidualReport) -> Vec<f64> {
    coarse
        .component_norms
        .iter()
        .zip(&fine.component_norms)
        .map(|(c, f)| c / f)
        .collect()
}

struct ResidualAccumulator {
    norms: Vec<f64>,
    component_sq: Vec<f64>,
    dz: f64,
    dt: f64,
}

impl ResidualAccumulator {
    fn new(components: usize, dz: f64, dt: f64) -> Self {
        Self {
            norms: Vec::new(),
            component_sq: vec![0.0; components],
            dz,
            dt,
        }
    }

    fn push_slice(&mut self, per_component_sq: &[f64]) {
        let total: f64 = per_component_sq.iter().sum();
        self.norms.push((self.dz * total).sqrt());
        for (acc, v) in self.component_sq.iter_mut().zip(per_component_sq) {
            *acc += self.dz * self.dt * v;
        }
    }

    fn finish(self, equation: EquationTag) -> ResidualReport {
        ResidualReport {
            equation,
            norms: self.norms,
            component_norms: self.component_sq.iter().map(|v| v.sqrt()).collect(),
            dt: self.dt,
            dz: self.dz,
            convergence_ratio: None,
        }
    }
}

fn interior(n_sites: usize) -> std::ops::Range<usize> {
    MARGIN..n_sites.saturating_sub(MARGIN)
}

fn require_slices(found: usize) -> Result<()> {
    if found < 3 {
        return Err(Error::TooFewSlices { required: 3, found });
    }
    Ok(())
}

/// Residual of the coupled telegraph equations
/// `dF+/dt = -c dF+/dz - a F+ + a F-`, `dF-/dt = c dF-/dz + a F+ - a F-`.
pub fn telegraph_residual(history: &[TwoField], spec: &LatticeSpec) -> Result<ResidualReport> {
    require_slices(history.len())?;
    for slice in history {
        spec.check_sites(slice.n_sites())?;
    }
    let (dt, dz, c, a) = (spec.dt, spec.dz, spec.c, spec.a);
    let mut acc = ResidualAccumulator::new(2, dz, dt);
    for n in 1..history.len() - 1 {
        let (prev, cur, next) = (&history[n - 1], &history[n], &history[n + 1]);
        let mut sq = [0.0; 2];
        for i in interior(cur.n_sites()) {
            let dtp = (next.plus[i] - prev.plus[i]) / (2.0 * dt);
            let dzp = (cur.plus[i + 1] - cur.plus[i - 1]) / (2.0 * dz);
            let dtm = (next.minus[i] - prev.minus[i]) / (2.0 * dt);
            let dzm = (cur.minus[i + 1] - cur.minus[i - 1]) / (2.0 * dz);
            let rp = dtp + c * dzp + a * cur.plus[i] - a * cur.minus[i];
            let rm = dtm - c * dzm - a * cur.plus[i] + a * cur.minus[i];
            sq[0] += rp * rp;
            sq[1] += rm * rm;
        }
        acc.push_slice(&sq);
    }
    Ok(acc.finish(EquationTag::Telegraph))
}

/// Residual of the real first-order system generated by the four-state
/// scheme once the decay is removed:
/// `dpsi/dt = -c diag(sz, sz) dpsi/dz - a diag(sq, sq) psi`, `sq = [[0,1],[-1,0]]`.
pub fn dirac_residual(history: &DiracHistory, spec: &LatticeSpec) -> Result<ResidualReport> {
    if history.mode != EvolutionMode::Renormalized {
        return Err(Error::RawModeRejected);
    }
    let slices = &history.slices;
    require_slices(slices.len())?;
    for slice in slices {
        spec.check_sites(slice.n_sites())?;
    }
    let (dt, dz, c, a) = (spec.dt, spec.dz, spec.c, spec.a);
    let mut acc = ResidualAccumulator::new(4, dz, dt);
    for n in 1..slices.len() - 1 {
        let (prev, cur, next) = (&slices[n - 1], &slices[n], &slices[n + 1]);
        let mut sq = [0.0; 4];
        for (right, left) in [(0, 1), (2, 3)] {
            for i in interior(cur.n_sites()) {
                let d_t = |k: usize| (next.phi[k][i] - prev.phi[k][i]) / (2.0 * dt);
                let d_z = |k: usize| (cur.phi[k][i + 1] - cur.phi[k][i - 1]) / (2.0 * dz);
                let rr = d_t(right) + c * d_z(right) + a * cur.phi[left][i];
                let rl = d_t(left) - c * d_z(left) - a * cur.phi[right][i];
                sq[right] += rr * rr;
                sq[left] += rl * rl;
            }
        }
        acc.push_slice(&sq);
    }
    Ok(acc.finish(EquationTag::Dirac))
}

/// Residual of `d2psi/dt2 = c^2 d2psi/dz2 - m^2 psi`, one component at a time.
pub fn klein_gordon_residual(history: &DiracHistory, spec: &LatticeSpec) -> Result<ResidualReport> {
    if history.mode != EvolutionMode::Renormalized {
        return Err(Error::RawModeRejected);
    }
    let slices = &history.slices;
    require_slices(slices.len())?;
    for slice in slices {
        spec.check_sites(slice.n_sites())?;
    }
    let (dt, dz, c, m) = (spec.dt, spec.dz, spec.c, spec.a);
    let mut acc = ResidualAccumulator::new(4, dz, dt);
    for n in 1..slices.len() - 1 {
        let (prev, cur, next) = (&slices[n - 1], &slices[n], &slices[n + 1]);
        let mut sq = [0.0; 4];
        for (k, s) in sq.iter_mut().enumerate() {
            let f = &cur.phi[k];
            for i in interior(cur.n_sites()) {
                let d_tt = (next.phi[k][i] - 2.0 * f[i] + prev.phi[k][i]) / (dt * dt);
                let d_zz = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (dz * dz);
                let r = d_tt - c * c * d_zz + m * m * f[i];
                *s += r * r;
            }
        }
        acc.push_slice(&sq);
    }
    Ok(acc.finish(EquationTag::KleinGordon))
}

/// Gaussian `exp(-z^2 / (2 width^2))`.
pub fn gaussian(width: f64) -> impl Fn(f64) -> f64 {
    move |z| (-(z * z) / (2.0 * width * width)).exp()
}

/// Weights over the four components (or channels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Combination(pub [f64; 4]);

impl Combination {
    pub fn single(component: Component) -> Self {
        let mut w = [0.0; 4];
        w[component.index()] = 1.0;
        Combination(w)
    }

    /// `phi1 + phi2`, the scalar plotted for the upper block.
    pub fn upper_block_sum() -> Self {
        Combination([1.0, 1.0, 0.0, 0.0])
    }

    pub fn apply(&self, values: [f64; 4]) -> f64 {
        self.0.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    fn abs_sum(&self) -> f64 {
        self.0.iter().map(|w| w.abs()).sum()
    }
}

impl FromStr for Combination {
    type Err = Error;

    /// Parses signed sums of one-based labels, e.g. `1+2`, `-3+4`, `4`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse component combination '{s}'"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad());
        }
        let mut weights = [0.0; 4];
        let mut rest = compact.as_str();
        while !rest.is_empty() {
            let (sign, body) = match rest.as_bytes()[0] {
                b'+' => (1.0, &rest[1..]),
                b'-' => (-1.0, &rest[1..]),
                _ => (1.0, rest),
            };
            let end = body.find(['+', '-']).unwrap_or(body.len());
            let label: usize = body[..end].parse().map_err(|_| bad())?;
            let component = Component::from_label(label).map_err(|_| bad())?;
            weights[component.index()] += sign;
            rest = &body[end..];
        }
        Ok(Combination(weights))
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &w) in self.0.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let sign = if w < 0.0 { "-" } else if first { "" } else { "+" };
            if w.abs() == 1.0 {
                write!(f, "{sign}{}", k + 1)?;
            } else {
                write!(f, "{sign}{}*{}", w.abs(), k + 1)?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// One scalar compared between the sampled grid and the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub sampled: Combination,
    pub reference: Combination,
}

/// Which sampled channels are compared with which reference components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMap(pub Vec<Projection>);

impl ChannelMap {
    pub fn identity() -> Self {
        ChannelMap(
            Component::ALL
                .iter()
                .map(|&c| Projection {
                    sampled: Combination::single(c),
                    reference: Combination::single(c),
                })
                .collect(),
        )
    }

    /// Right-envelope channels of the envelope layout against the upper
    /// block, summed: `3+4=1+2`.
    pub fn right_envelope_block_sum() -> Self {
        ChannelMap(vec![Projection {
            sampled: Combination([0.0, 0.0, 1.0, 1.0]),
            reference: Combination::upper_block_sum(),
        }])
    }

    /// Right-envelope channels against the upper block, component by
    /// component: `4=1;3=2`.
    pub fn right_envelope_components() -> Self {
        ChannelMap(vec![
            Projection {
                sampled: Combination::single(Component::Phi4),
                reference: Combination::single(Component::Phi1),
            },
            Projection {
                sampled: Combination::single(Component::Phi3),
                reference: Combination::single(Component::Phi2),
            },
        ])
    }
}

impl FromStr for ChannelMap {
    type Err = Error;

    /// `sampled=reference` projections separated by `;`, e.g. `3+4=1+2`.
    fn from_str(s: &str) -> Result<Self> {
        let projections = s
            .split(';')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                let (lhs, rhs) = p.split_once('=').ok_or_else(|| {
                    Error::InvalidParameter(format!("projection '{p}' needs the form sampled=reference"))
                })?;
                Ok(Projection {
                    sampled: lhs.parse()?,
                    reference: rhs.parse()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if projections.is_empty() {
            return Err(Error::InvalidParameter("empty channel map".into()));
        }
        Ok(ChannelMap(projections))
    }
}

impl fmt::Display for ChannelMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "{}={}", p.sampled, p.reference)?;
        }
        Ok(())
    }
}

/// Space-time window `|z| <= radius` sites, slices `t_start..=t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub radius: usize,
    pub t_start: usize,
    pub t_end: usize,
}

/// Scalar values on a window, laid out `[projection][t][z = -r..=r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowValues {
    pub window: Window,
    pub values: Vec<f64>,
}

impl WindowValues {
    fn width(&self) -> usize {
        2 * self.window.radius + 1
    }

    fn n_slices(&self) -> usize {
        self.window.t_end - self.window.t_start + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub window: Window,
    pub channel_map: String,
    /// Euclidean error per slice `t_start..=t_end` over the window.
    pub per_slice_l2: Vec<f64>,
    /// Pearson correlation over every window cell.
    pub correlation: f64,
    /// RMS error at `|z| = 0..=radius`.
    pub error_profile: Vec<f64>,
    /// Spearman rank correlation of `error_profile` with `|z|`.
    pub error_trend: f64,
    pub n_pairs: u64,
    pub renormalized: bool,
    pub spec: LatticeSpec,
}

/// Normalised scalar value of one sampled cell: `counts / n_pairs`, times
/// `(1-p)^-t` when `renormalize`.
fn sampled_value(
    grid: &ChargeGrid,
    spec: &LatticeSpec,
    combo: &Combination,
    site: usize,
    t: usize,
    renormalize: bool,
) -> Result<f64> {
    let n = grid.n_pairs as f64;
    let raw = combo.apply(std::array::from_fn(|k| {
        grid.count(Component::ALL[k], site, t) as f64 / n
    }));
    Ok(if renormalize {
        raw * decay_compensation(spec, t)?
    } else {
        raw
    })
}

fn check_window(spec: &LatticeSpec, window: &Window, slices: usize) -> Result<()> {
    if window.radius > spec.half_width() {
        return Err(Error::InvalidParameter(format!(
            "window radius {} exceeds grid half-width {}",
            window.radius,
            spec.half_width()
        )));
    }
    if window.t_start > window.t_end || window.t_end >= slices {
        return Err(Error::TimeOutOfRange {
            t: window.t_end,
            len: slices,
        });
    }
    Ok(())
}

fn window_sites(spec: &LatticeSpec, radius: usize) -> std::ops::RangeInclusive<usize> {
    spec.origin() - radius..=spec.origin() + radius
}

/// Extracts the sampled side of every projection on `window`.
pub fn sampled_window(
    grid: &ChargeGrid,
    spec: &LatticeSpec,
    map: &ChannelMap,
    window: Window,
    renormalize: bool,
) -> Result<WindowValues> {
    spec.check_sites(grid.n_sites())?;
    check_window(spec, &window, grid.n_slices())?;
    if grid.n_pairs == 0 {
        return Err(Error::InvalidParameter("sampled grid holds no pairs".into()));
    }
    let mut values = Vec::new();
    for proj in &map.0 {
        for t in window.t_start..=window.t_end {
            for site in window_sites(spec, window.radius) {
                values.push(sampled_value(grid, spec, &proj.sampled, site, t, renormalize)?);
            }
        }
    }
    Ok(WindowValues { window, values })
}

/// Extracts the reference side of every projection on `window`.
pub fn reference_window(
    reference: &DiracHistory,
    spec: &LatticeSpec,
    map: &ChannelMap,
    window: Window,
) -> Result<WindowValues> {
    check_window(spec, &window, reference.len())?;
    let mut values = Vec::new();
    for proj in &map.0 {
        for slice in &reference.slices[window.t_start..=window.t_end] {
            spec.check_sites(slice.n_sites())?;
            for site in window_sites(spec, window.radius) {
                let v = std::array::from_fn(|k| slice.phi[k][site]);
                values.push(proj.reference.apply(v));
            }
        }
    }
    Ok(WindowValues { window, values })
}

/// Error metrics between two value sets on the same window; symmetric in its
/// arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMetrics {
    pub per_slice_l2: Vec<f64>,
    pub correlation: f64,
    pub error_profile: Vec<f64>,
    pub error_trend: f64,
}

pub fn compare_windows(a: &WindowValues, b: &WindowValues) -> Result<WindowMetrics> {
    if a.window != b.window || a.values.len() != b.values.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?} with {} values", a.window, a.values.len()),
            found: format!("{:?} with {} values", b.window, b.values.len()),
        });
    }
    let width = a.width();
    let n_slices = a.n_slices();
    let radius = a.window.radius;
    let n_proj = a.values.len() / (width * n_slices);

    let mut slice_sq = vec![0.0; n_slices];
    let mut profile_sq = vec![0.0; radius + 1];
    let mut profile_n = vec![0usize; radius + 1];
    for (idx, (x, y)) in a.values.iter().zip(&b.values).enumerate() {
        let d = x - y;
        let col = idx % width;
        let t = (idx / width) % n_slices;
        slice_sq[t] += d * d;
        let dist = col.abs_diff(radius);
        profile_sq[dist] += d * d;
        profile_n[dist] += 1;
    }
    debug_assert_eq!(profile_n[0], n_proj * n_slices);
    let error_profile: Vec<f64> = profile_sq
        .iter()
        .zip(&profile_n)
        .map(|(s, &n)| (s / n as f64).sqrt())
        .collect();
    let distances: Vec<f64> = (0..=radius).map(|d| d as f64).collect();
    Ok(WindowMetrics {
        per_slice_l2: slice_sq.iter().map(|s| s.sqrt()).collect(),
        correlation: pearson(&a.values, &b.values),
        error_trend: spearman(&distances, &error_profile),
        error_profile,
    })
}

/// Compares a sampled grid with a reference history on `window`. Counts are
/// divided by `n_pairs`; when the reference is renormalized the sampled
/// values get the same `(1-p)^-t` factor.
pub fn compare_grids(
    sampled: &ChargeGrid,
    reference: &DiracHistory,
    spec: &LatticeSpec,
    window: Window,
    map: &ChannelMap,
) -> Result<ComparisonReport> {
    let renormalized = reference.mode == EvolutionMode::Renormalized;
    let s = sampled_window(sampled, spec, map, window, renormalized)?;
    let r = reference_window(reference, spec, map, window)?;
    let metrics = compare_windows(&s, &r)?;
    Ok(ComparisonReport {
        window,
        channel_map: map.to_string(),
        per_slice_l2: metrics.per_slice_l2,
        correlation: metrics.correlation,
        error_profile: metrics.error_profile,
        error_trend: metrics.error_trend,
        n_pairs: sampled.n_pairs,
        renormalized,
        spec: *spec,
    })
}

/// Pearson correlation; exactly 1 for identical inputs, 0 when either side
/// is constant and they differ.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n == 0 {
        return 0.0;
    }
    if x[..n] == y[..n] {
        return 1.0;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x[..n].iter().zip(&y[..n]) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

/// Average ranks, ties sharing the mean rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Counts divided by `n_pairs`, channel for channel, as a raw history.
pub fn grid_as_history(grid: &ChargeGrid) -> Result<DiracHistory> {
    if grid.n_pairs == 0 {
        return Err(Error::InvalidParameter("sampled grid holds no pairs".into()));
    }
    let n = grid.n_pairs as f64;
    let slices = (0..grid.n_slices())
        .map(|t| {
            let phi = std::array::from_fn(|k| {
                (0..grid.n_sites())
                    .map(|site| grid.count(Component::ALL[k], site, t) as f64 / n)
                    .collect()
            });
            FourField::from_components(phi, t)
        })
        .collect::<Result<_>>()?;
    Ok(DiracHistory {
        mode: EvolutionMode::Raw,
        slices,
    })
}

/// Spatial profile of `combo` on slice `t` of a four-state history.
pub fn history_slice(history: &DiracHistory, t: usize, combo: &Combination) -> Result<Vec<f64>> {
    let slice = history.slices.get(t).ok_or(Error::TimeOutOfRange {
        t,
        len: history.len(),
    })?;
    Ok((0..slice.n_sites())
        .map(|i| combo.apply(std::array::from_fn(|k| slice.phi[k][i])))
        .collect())
}

/// Spatial profile of the Kac densities on slice `t`, `(F+, F-)`.
pub fn kac_slice(history: &[TwoField], t: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let slice = history.get(t).ok_or(Error::TimeOutOfRange {
        t,
        len: history.len(),
    })?;
    Ok((slice.plus.clone(), slice.minus.clone()))
}

/// Normalised sampled profile of `combo` on slice `t`.
pub fn grid_slice(
    grid: &ChargeGrid,
    spec: &LatticeSpec,
    t: usize,
    combo: &Combination,
    renormalize: bool,
) -> Result<Vec<f64>> {
    check_grid_slice(grid, spec, t)?;
    (0..grid.n_sites())
        .map(|site| sampled_value(grid, spec, combo, site, t, renormalize))
        .collect()
}

/// Monte Carlo standard error of [`grid_slice`], per site.
///
/// A pair adds at most one ±1 to each (channel, site, slice), so for a
/// combination with weights `w` the per-pair second moment is bounded by
/// `sum|w| * sum_k |w_k| visits_k / n_pairs`; the bound is exact when a pair
/// can reach only one of the combined channels on a given cell, as for the
/// two channels of one envelope.
pub fn grid_slice_standard_error(
    grid: &ChargeGrid,
    spec: &LatticeSpec,
    t: usize,
    combo: &Combination,
    renormalize: bool,
) -> Result<Vec<f64>> {
    check_grid_slice(grid, spec, t)?;
    let n = grid.n_pairs as f64;
    let scale = if renormalize {
        decay_compensation(spec, t)?
    } else {
        1.0
    };
    let w_sum = combo.abs_sum();
    (0..grid.n_sites())
        .map(|site| {
            let mean = sampled_value(grid, spec, combo, site, t, false)?;
            let second: f64 = Component::ALL
                .iter()
                .map(|&ch| combo.0[ch.index()].abs() * grid.visits(ch, site, t) as f64)
                .sum::<f64>()
                * w_sum
                / n;
            Ok(scale * ((second - mean * mean).max(0.0) / n).sqrt())
        })
        .collect()
}

fn check_grid_slice(grid: &ChargeGrid, spec: &LatticeSpec, t: usize) -> Result<()> {
    spec.check_sites(grid.n_sites())?;
    if t >= grid.n_slices() {
        return Err(Error::TimeOutOfRange {
            t,
            len: grid.n_slices(),
        });
    }
    if grid.n_pairs == 0 {
        return Err(Error::InvalidParameter("sampled grid holds no pairs".into()));
    }
    Ok(())
}
