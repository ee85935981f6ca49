use std::path::{Path, PathBuf};

use chessboard_core::analysis::{
    compare_windows, component_ratios, dirac_residual, gaussian, grid_as_history, grid_slice,
    grid_slice_standard_error, history_slice, klein_gordon_residual, reference_window, sampled_window,
    telegraph_residual, ChannelMap, Combination, ComparisonReport, Projection, ResidualReport, Window,
};
use chessboard_core::dirac::{
    block_quadratic_norm, decay_compensation, dirac_propagator, evolve_dirac, DiracHistory, EvolutionMode,
};
use chessboard_core::entwined::{run_ensemble, EnsembleConfig};
use chessboard_core::kac::{evolve_kac, kac_density_estimate};
use chessboard_core::{Component, Direction, FourField, LatticeSpec, TwoField};
use serde_json::json;

use crate::args::Command;
use crate::error::{CliError, CliResult};
use crate::gridio::{self, Sidecar, Table, Values};
use crate::settings::Settings;

pub fn run(command: &Command, settings: &Settings) -> CliResult<()> {
    let name = command.name();
    match command {
        Command::KacEvolve(_) => kac_evolve(name, settings),
        Command::KacSample(_) => kac_sample(name, settings),
        Command::DiracEvolve(_) => dirac_evolve(name, settings),
        Command::EntwinedSample(_) => entwined_sample(name, settings),
        Command::Compare(_) => compare(name, settings),
        Command::Slice(_) => slice(name, settings),
        Command::Residuals(_) => residuals(name, settings),
    }
}

fn out_path(s: &Settings) -> CliResult<PathBuf> {
    s.require::<String>("out").map(PathBuf::from)
}

fn workers(s: &Settings) -> CliResult<Option<usize>> {
    match s.get::<usize>("workers")? {
        Some(0) => Err(CliError::Config("workers must be at least 1".into())),
        w => Ok(w),
    }
}

fn width(s: &Settings) -> CliResult<f64> {
    let w: f64 = s.get_or("width", 1.0)?;
    if w.is_nan() || w <= 0.0 {
        return Err(CliError::Config(format!("width must be positive, got {w}")));
    }
    Ok(w)
}

fn source_state(s: &Settings) -> CliResult<Component> {
    Ok(Component::from_label(s.get_or("source-state", 1)?)?)
}

fn mode(s: &Settings) -> CliResult<EvolutionMode> {
    s.get_or("mode", EvolutionMode::Raw)
}

fn init_kind(s: &Settings) -> CliResult<&str> {
    match s.raw("init").unwrap_or("delta") {
        kind @ ("delta" | "gaussian") => Ok(kind),
        other => Err(CliError::Config(format!("init must be delta or gaussian, got '{other}'"))),
    }
}

fn write_sidecar(out: &Path, sidecar: &Sidecar) -> CliResult<()> {
    gridio::write_json(&gridio::sidecar_path(out), sidecar)
}

fn kac_evolve(name: &str, s: &Settings) -> CliResult<()> {
    let spec = s.lattice()?;
    let out = out_path(s)?;
    let init = match init_kind(s)? {
        "delta" => TwoField::delta(&spec, spec.origin(), s.get_or("direction", Direction::Plus)?)?,
        _ => TwoField::from_profile(&spec, [0.5, 0.5], gaussian(width(s)?))?,
    };
    let history = evolve_kac(&init, &spec, spec.n_steps)?;
    gridio::write_kac_history(&out, &spec, &history)?;
    let initial = init.total_mass();
    let deviation = history
        .iter()
        .map(|h| (h.total_mass() - initial).abs())
        .fold(0.0, f64::max);
    let mut sidecar = Sidecar::new(name, s.echo(), Values::Density).with_shape(spec.n_sites(), spec.n_slices());
    sidecar.metrics = json!({
        "mass_initial": initial,
        "mass_final": history.last().map(TwoField::total_mass),
        "max_mass_deviation": deviation,
    });
    write_sidecar(&out, &sidecar)
}

fn kac_sample(name: &str, s: &Settings) -> CliResult<()> {
    let spec = s.lattice()?;
    let out = out_path(s)?;
    let seed: u64 = s.require("seed")?;
    let n_paths: u64 = s.require("pairs")?;
    let direction = s.get_or("direction", Direction::Plus)?;
    let sampled = kac_density_estimate(
        seed,
        n_paths,
        &spec,
        spec.n_steps,
        spec.origin(),
        direction,
        workers(s)?,
    )?;
    let exact = evolve_kac(&TwoField::delta(&spec, spec.origin(), direction)?, &spec, spec.n_steps)?;
    let per_slice: Vec<f64> = sampled
        .iter()
        .zip(&exact)
        .map(|(a, b)| {
            a.plus
                .iter()
                .zip(&b.plus)
                .chain(a.minus.iter().zip(&b.minus))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    gridio::write_kac_history(&out, &spec, &sampled)?;
    let mut sidecar = Sidecar::new(name, s.echo(), Values::Density).with_shape(spec.n_sites(), spec.n_slices());
    sidecar.seed = Some(seed);
    sidecar.n_pairs = Some(n_paths);
    sidecar.metrics = json!({
        "sup_distance_per_slice": per_slice,
        "sup_distance": per_slice.iter().copied().fold(0.0, f64::max),
        "bound_5_over_sqrt_n": 5.0 / (n_paths as f64).sqrt(),
    });
    write_sidecar(&out, &sidecar)
}

fn dirac_evolve(name: &str, s: &Settings) -> CliResult<()> {
    let spec = s.lattice()?;
    let out = out_path(s)?;
    let mode = mode(s)?;
    let source = source_state(s)?;
    let init = match init_kind(s)? {
        "delta" => FourField::delta(&spec, spec.origin(), source)?,
        _ => {
            let mut weights = [0.0; 4];
            weights[source.index()] = 1.0;
            FourField::from_profile(&spec, weights, gaussian(width(s)?))?
        }
    };
    let history = evolve_dirac(&init, &spec, spec.n_steps, mode)?;
    gridio::write_four_history(&out, &spec, &history)?;
    let norms = |t: usize| [0, 1].map(|b| block_quadratic_norm(&history.slices[t], b));
    let mut sidecar = Sidecar::new(name, s.echo(), mode.into()).with_shape(spec.n_sites(), spec.n_slices());
    sidecar.metrics = json!({
        "block_quadratic_norm_initial": norms(0),
        "block_quadratic_norm_final": norms(history.len() - 1),
    });
    write_sidecar(&out, &sidecar)
}

fn entwined_sample(name: &str, s: &Settings) -> CliResult<()> {
    let spec = s.lattice()?;
    let out = out_path(s)?;
    let config = EnsembleConfig {
        seed: s.require("seed")?,
        n_pairs: s.require("pairs")?,
        t_reversal: s.require("t-reversal")?,
        n_max: s.get_or("n-max", spec.n_steps)?,
        stutter_phase: s.get_or("stutter-phase", Default::default())?,
        initial_direction: s.get_or("direction", Direction::Plus)?,
        layout: s.get_or("layout", Default::default())?,
    };
    let crop: usize = s.get_or("crop", spec.n_steps)?;
    if crop > spec.n_steps {
        return Err(CliError::Config(format!("crop {crop} exceeds steps {}", spec.n_steps)));
    }
    let run = run_ensemble(&spec, &config, workers(s)?)?;
    let visits = gridio::visits_path(&out);
    gridio::write_tallies(&out, &spec, &run.grid, crop + 1, false)?;
    gridio::write_tallies(&visits, &spec, &run.grid, crop + 1, true)?;

    let mut sidecar = Sidecar::new(name, s.echo(), Values::Counts).with_shape(spec.n_sites(), crop + 1);
    sidecar.seed = Some(config.seed);
    sidecar.n_pairs = Some(run.grid.n_pairs);
    sidecar.stats = Some(run.stats);
    sidecar.rejection_rate = Some(run.stats.rejection_rate());
    if let Some(file) = visits.file_name() {
        sidecar.files.insert("visits".into(), file.to_string_lossy().into_owned());
    }
    let neutral = (0..=crop).all(|t| run.grid.slice_total(t) == 0);
    sidecar.metrics = json!({ "all_slices_neutral": neutral });
    write_sidecar(&out, &sidecar)
}

/// A grid file with whatever its sidecar says about it.
struct Loaded {
    table: Table,
    sidecar: Option<Sidecar>,
}

impl Loaded {
    fn open(path: &Path) -> CliResult<Self> {
        Ok(Self {
            table: gridio::read_table(path)?,
            sidecar: gridio::read_sidecar(path)?,
        })
    }

    fn values(&self) -> Values {
        self.sidecar.as_ref().map_or(Values::Raw, |s| s.values)
    }

    fn n_pairs(&self) -> CliResult<u64> {
        self.sidecar
            .as_ref()
            .and_then(|s| s.n_pairs)
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::data(&self.table.path, "count grid needs a sidecar with n_pairs"))
    }

    /// The lattice recorded in the sidecar, falling back to `fallback`.
    fn spec(&self, fallback: &Settings) -> CliResult<LatticeSpec> {
        let spec = match &self.sidecar {
            Some(sidecar) => Settings::from_echo(&sidecar.config)?.lattice()?,
            None => fallback.lattice()?,
        };
        if spec.n_sites() != self.table.n_sites() {
            return Err(CliError::data(
                &self.table.path,
                format!("{} sites but the lattice has {}", self.table.n_sites(), spec.n_sites()),
            ));
        }
        Ok(spec)
    }

    fn charge_grid(&self) -> CliResult<chessboard_core::ChargeGrid> {
        let visits_path = gridio::visits_path(&self.table.path);
        let visits = if visits_path.exists() {
            Some(gridio::read_table(&visits_path)?)
        } else {
            None
        };
        self.table.as_charge_grid(visits.as_ref(), self.n_pairs()?)
    }

    /// Four-channel history; counts are divided by `n_pairs`.
    fn history(&self) -> CliResult<DiracHistory> {
        match self.values() {
            Values::Counts => Ok(grid_as_history(&self.charge_grid()?)?),
            Values::Renormalized => self.table.as_history(EvolutionMode::Renormalized),
            Values::Raw => self.table.as_history(EvolutionMode::Raw),
            other => Err(CliError::data(
                &self.table.path,
                format!("{other:?} grids cannot be compared"),
            )),
        }
    }
}

fn parse_region(s: &Settings, last_slice: usize) -> CliResult<Window> {
    let t_end: usize = s.get_or("t", last_slice)?;
    let window = match s.raw("region") {
        None => Window {
            radius: t_end / 2,
            t_start: t_end.min(1),
            t_end,
        },
        Some(text) => {
            let parts: Vec<&str> = text.split(':').collect();
            let num = |p: &str| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Config(format!("region '{text}': expected radius[:t_start:t_end]")))
            };
            match parts.as_slice() {
                [r] => Window {
                    radius: num(r)?,
                    t_start: t_end.min(1),
                    t_end,
                },
                [r, a, b] => Window {
                    radius: num(r)?,
                    t_start: num(a)?,
                    t_end: num(b)?,
                },
                _ => return Err(CliError::Config(format!("region '{text}': expected radius[:t_start:t_end]"))),
            }
        }
    };
    if window.t_end > last_slice {
        return Err(chessboard_core::Error::TimeOutOfRange {
            t: window.t_end,
            len: last_slice + 1,
        }
        .into());
    }
    Ok(window)
}

fn swapped(map: &ChannelMap) -> ChannelMap {
    ChannelMap(
        map.0
            .iter()
            .map(|p| Projection {
                sampled: p.reference,
                reference: p.sampled,
            })
            .collect(),
    )
}

fn compare(name: &str, s: &Settings) -> CliResult<()> {
    let out = out_path(s)?;
    let grid_path = PathBuf::from(s.require::<String>("grid")?);
    let sampled = Loaded::open(&grid_path)?;
    let spec = sampled.spec(s)?;
    let reference_file = s.raw("reference").map(PathBuf::from);
    let (reference, reference_values) = match &reference_file {
        Some(path) => {
            let loaded = Loaded::open(path)?;
            if loaded.table.n_sites() != sampled.table.n_sites() {
                return Err(chessboard_core::Error::ShapeMismatch {
                    expected: format!("{} sites", sampled.table.n_sites()),
                    found: format!("{} sites in {}", loaded.table.n_sites(), path.display()),
                }
                .into());
            }
            (loaded.history()?, loaded.values())
        }
        None => {
            let last = sampled.table.n_slices() - 1;
            let t_end = s.get_or("t", last)?.min(spec.n_steps);
            let mode = mode(s)?;
            (dirac_propagator(&spec, t_end, source_state(s)?, mode)?, mode.into())
        }
    };
    let last_slice = sampled.table.n_slices().min(reference.len()) - 1;
    let window = parse_region(s, last_slice)?;
    let sampled_is_counts = sampled.values() == Values::Counts;
    let map: ChannelMap = match s.raw("channel-map") {
        Some(text) => text.parse()?,
        None if sampled_is_counts && reference_values != Values::Counts => {
            ChannelMap::right_envelope_block_sum()
        }
        None => ChannelMap::identity(),
    };

    let renormalize = reference.mode == EvolutionMode::Renormalized;
    let sampled_values = if sampled_is_counts {
        sampled_window(&sampled.charge_grid()?, &spec, &map, window, renormalize)?
    } else {
        reference_window(&sampled.history()?, &spec, &swapped(&map), window)?
    };
    let reference_values_window = reference_window(&reference, &spec, &map, window)?;
    let metrics = compare_windows(&sampled_values, &reference_values_window)?;
    let report = ComparisonReport {
        window,
        channel_map: map.to_string(),
        per_slice_l2: metrics.per_slice_l2,
        correlation: metrics.correlation,
        error_profile: metrics.error_profile,
        error_trend: metrics.error_trend,
        n_pairs: sampled.sidecar.as_ref().and_then(|s| s.n_pairs).unwrap_or(0),
        renormalized: renormalize,
        spec,
    };
    let mut sidecar = Sidecar::new(name, s.echo(), Values::Metrics);
    sidecar.n_pairs = sampled.sidecar.as_ref().and_then(|s| s.n_pairs);
    sidecar.seed = sampled.sidecar.as_ref().and_then(|s| s.seed);
    sidecar.files.insert("grid".into(), grid_path.display().to_string());
    sidecar.files.insert(
        "reference".into(),
        reference_file.map_or_else(|| "computed".to_string(), |p| p.display().to_string()),
    );
    sidecar.metrics = serde_json::to_value(&report).map_err(|e| CliError::data(&out, e.to_string()))?;
    gridio::write_json(&out, &sidecar)
}

fn slice(name: &str, s: &Settings) -> CliResult<()> {
    let out = out_path(s)?;
    let grid_path = PathBuf::from(s.require::<String>("grid")?);
    let loaded = Loaded::open(&grid_path)?;
    let t: usize = s.require("t")?;
    let combo: Combination = s.get_or("combo", Combination::upper_block_sum())?;
    let values = loaded.values();
    let normalize = s.raw("normalize").unwrap_or(if values == Values::Counts { "pairs" } else { "none" });
    let renormalize = mode(s)? == EvolutionMode::Renormalized;
    if t >= loaded.table.n_slices() {
        return Err(chessboard_core::Error::TimeOutOfRange {
            t,
            len: loaded.table.n_slices(),
        }
        .into());
    }

    let (profile, se) = match (values, normalize) {
        (Values::Counts, "pairs") => {
            let spec = loaded.spec(s)?;
            let grid = loaded.charge_grid()?;
            (
                grid_slice(&grid, &spec, t, &combo, renormalize)?,
                Some(grid_slice_standard_error(&grid, &spec, t, &combo, renormalize)?),
            )
        }
        (Values::Counts, "none") => {
            let h = loaded.table.as_history(EvolutionMode::Raw)?;
            let mut profile = history_slice(&h, t, &combo)?;
            if renormalize {
                let factor = decay_compensation(&loaded.spec(s)?, t)?;
                profile.iter_mut().for_each(|v| *v *= factor);
            }
            (profile, None)
        }
        (_, "none") if loaded.table.is_four_channel() => {
            (history_slice(&loaded.table.as_history(EvolutionMode::Raw)?, t, &combo)?, None)
        }
        (_, "none") if loaded.table.width() == 2 => {
            if combo.0[2] != 0.0 || combo.0[3] != 0.0 {
                return Err(CliError::Config(format!(
                    "combo '{combo}' uses components 3 or 4 of a two-column grid"
                )));
            }
            let profile = (0..loaded.table.n_sites())
                .map(|i| combo.0[0] * loaded.table.value(t, i, 0) + combo.0[1] * loaded.table.value(t, i, 1))
                .collect();
            (profile, None)
        }
        (_, "pairs") => {
            return Err(CliError::Config("normalize = pairs applies to count grids only".into()));
        }
        (_, other) if other != "none" => {
            return Err(CliError::Config(format!("normalize must be pairs or none, got '{other}'")));
        }
        _ => return Err(CliError::data(&grid_path, "unsupported grid layout")),
    };
    gridio::write_profile(&out, &loaded.table.z, &profile, se.as_deref())?;
    let mut sidecar = Sidecar::new(name, s.echo(), Values::Profile);
    sidecar.n_sites = Some(profile.len());
    sidecar.n_pairs = loaded.sidecar.as_ref().and_then(|s| s.n_pairs);
    sidecar.files.insert("grid".into(), grid_path.display().to_string());
    sidecar.metrics = json!({
        "t_index": t,
        "time": loaded.table.times[t],
        "combo": combo.to_string(),
        "normalize": normalize,
        "renormalized": renormalize,
    });
    write_sidecar(&out, &sidecar)
}

fn residuals(name: &str, s: &Settings) -> CliResult<()> {
    let out = out_path(s)?;
    let coarse = s.lattice()?;
    let fine = LatticeSpec::new(
        coarse.dz / 2.0,
        coarse.dt / 2.0,
        coarse.c,
        coarse.a,
        coarse.z_max(),
        2 * coarse.n_steps,
    )?;
    let profile = gaussian(width(s)?);
    let run = |spec: &LatticeSpec| -> CliResult<[ResidualReport; 3]> {
        let kac = TwoField::from_profile(spec, [1.0, 0.5], &profile)?;
        let telegraph = telegraph_residual(&evolve_kac(&kac, spec, spec.n_steps)?, spec)?;
        let four = FourField::from_profile(spec, [1.0, 0.5, 0.3, -0.7], &profile)?;
        let h = evolve_dirac(&four, spec, spec.n_steps, EvolutionMode::Renormalized)?;
        Ok([telegraph, dirac_residual(&h, spec)?, klein_gordon_residual(&h, spec)?])
    };
    let [tc, dc, kc] = run(&coarse)?;
    let [tf, df, kf] = run(&fine)?;
    let entry = |c: &ResidualReport, f: &ResidualReport| {
        json!({
            "coarse_norm": c.global_norm(),
            "fine_norm": f.global_norm(),
            "ratio": c.global_norm() / f.global_norm(),
            "component_ratios": component_ratios(c, f),
        })
    };
    let mut sidecar = Sidecar::new(name, s.echo(), Values::Metrics);
    sidecar.metrics = json!({
        "dt_coarse": coarse.dt,
        "dt_fine": fine.dt,
        "telegraph": entry(&tc, &tf),
        "dirac": entry(&dc, &df),
        "klein_gordon": entry(&kc, &kf),
    });
    gridio::write_json(&out, &sidecar)
}
