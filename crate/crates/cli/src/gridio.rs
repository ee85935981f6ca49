//! CSV grids and JSON sidecars.
//!
//! Grids are written one row per `(t, z)`, t-major with z ascending. Floats
//! use 17 significant digits so a read-back is bit-exact; charge counts and
//! visit counts are written as integers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use chessboard_core::dirac::{DiracHistory, EvolutionMode};
use chessboard_core::entwined::RunStats;
use chessboard_core::{ChargeGrid, Component, FourField, LatticeSpec, TwoField};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const KAC_HEADER: [&str; 4] = ["t", "z", "fplus", "fminus"];
pub const FOUR_HEADER: [&str; 6] = ["t", "z", "ch1", "ch2", "ch3", "ch4"];

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// What the value columns of a grid file hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Values {
    /// Kac densities.
    Density,
    /// Four-state history without decay compensation.
    Raw,
    /// Four-state history with decay compensation.
    Renormalized,
    /// Signed charge tallies of an entwined ensemble.
    Counts,
    /// Unsigned visit tallies of an entwined ensemble.
    Visits,
    /// A single profile written by `slice`.
    Profile,
    /// Metrics only, no grid.
    Metrics,
}

impl From<EvolutionMode> for Values {
    fn from(mode: EvolutionMode) -> Self {
        match mode {
            EvolutionMode::Raw => Values::Raw,
            EvolutionMode::Renormalized => Values::Renormalized,
        }
    }
}

/// Metadata written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub values: Values,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_pairs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_slices: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<RunStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub files: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub metrics: serde_json::Value,
}

impl Sidecar {
    pub fn new(command: &str, config: BTreeMap<String, String>, values: Values) -> Self {
        Self {
            command: command.to_string(),
            config,
            values,
            seed: None,
            n_pairs: None,
            n_sites: None,
            n_slices: None,
            stats: None,
            rejection_rate: None,
            files: BTreeMap::new(),
            metrics: serde_json::Value::Null,
        }
    }

    pub fn with_shape(mut self, n_sites: usize, n_slices: usize) -> Self {
        self.n_sites = Some(n_sites);
        self.n_slices = Some(n_slices);
        self
    }
}

/// `grid.csv` -> `grid.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

/// `grid.csv` -> `grid.visits.csv`.
pub fn visits_path(out: &Path) -> PathBuf {
    out.with_extension("visits.csv")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e.into()))?;
    use std::io::Write;
    writeln!(w).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| CliError::data(path, e.to_string()))
}

/// Reads the sidecar of `grid`, if it has one.
pub fn read_sidecar(grid: &Path) -> CliResult<Option<Sidecar>> {
    let path = sidecar_path(grid);
    if !path.exists() {
        return Ok(None);
    }
    read_json(&path).map(Some)
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, err: csv::Error) -> CliError {
    if err.is_io_error() {
        match err.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            _ => unreachable!(),
        }
    } else {
        CliError::data(path, err.to_string())
    }
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_kac_history(path: &Path, spec: &LatticeSpec, history: &[TwoField]) -> CliResult<()> {
    let rows = history.iter().flat_map(|slice| {
        (0..slice.n_sites()).map(move |i| {
            vec![
                float(spec.time_of(slice.t_index)),
                float(spec.z_of(i)),
                float(slice.plus[i]),
                float(slice.minus[i]),
            ]
        })
    });
    write_rows(path, &KAC_HEADER, rows)
}

pub fn write_four_history(path: &Path, spec: &LatticeSpec, history: &DiracHistory) -> CliResult<()> {
    let rows = history.slices.iter().flat_map(|slice| {
        (0..slice.n_sites()).map(move |i| {
            let mut row = vec![float(spec.time_of(slice.t_index)), float(spec.z_of(i))];
            row.extend(slice.phi.iter().map(|c| float(c[i])));
            row
        })
    });
    write_rows(path, &FOUR_HEADER, rows)
}

/// Writes slices `0..n_slices` of `grid`, either signed counts or visits.
pub fn write_tallies(
    path: &Path,
    spec: &LatticeSpec,
    grid: &ChargeGrid,
    n_slices: usize,
    visits: bool,
) -> CliResult<()> {
    let rows = (0..n_slices).flat_map(|t| {
        (0..grid.n_sites()).map(move |i| {
            let mut row = vec![float(spec.time_of(t)), float(spec.z_of(i))];
            for ch in Component::ALL {
                row.push(if visits {
                    grid.visits(ch, i, t).to_string()
                } else {
                    grid.count(ch, i, t).to_string()
                });
            }
            row
        })
    });
    write_rows(path, &FOUR_HEADER, rows)
}

pub fn write_profile(path: &Path, z: &[f64], values: &[f64], se: Option<&[f64]>) -> CliResult<()> {
    let header: &[&str] = if se.is_some() { &["z", "value", "se"] } else { &["z", "value"] };
    let rows = (0..z.len()).map(|i| {
        let mut row = vec![float(z[i]), float(values[i])];
        if let Some(se) = se {
            row.push(float(se[i]));
        }
        row
    });
    write_rows(path, header, rows)
}

/// A grid file read back: `values[(t * n_sites + site) * width + column]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub path: PathBuf,
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    pub values: Vec<f64>,
}

impl Table {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn n_sites(&self) -> usize {
        self.z.len()
    }

    pub fn n_slices(&self) -> usize {
        self.times.len()
    }

    pub fn is_four_channel(&self) -> bool {
        self.columns == FOUR_HEADER[2..]
    }

    pub fn value(&self, t: usize, site: usize, column: usize) -> f64 {
        self.values[(t * self.n_sites() + site) * self.width() + column]
    }

    pub fn as_history(&self, mode: EvolutionMode) -> CliResult<DiracHistory> {
        self.expect_four_channel()?;
        let slices = (0..self.n_slices())
            .map(|t| {
                let phi = std::array::from_fn(|k| (0..self.n_sites()).map(|i| self.value(t, i, k)).collect());
                FourField::from_components(phi, t)
            })
            .collect::<Result<_, _>>()?;
        Ok(DiracHistory { mode, slices })
    }

    /// Rebuilds a charge grid from a counts table and optional visits table.
    pub fn as_charge_grid(&self, visits: Option<&Table>, n_pairs: u64) -> CliResult<ChargeGrid> {
        self.expect_four_channel()?;
        let counts = self
            .values
            .iter()
            .map(|&v| integral(&self.path, v))
            .collect::<CliResult<Vec<i64>>>()?;
        let visits = match visits {
            Some(v) => {
                v.expect_four_channel()?;
                if (v.n_sites(), v.n_slices()) != (self.n_sites(), self.n_slices()) {
                    return Err(CliError::data(&v.path, "visits shape differs from counts"));
                }
                v.values
                    .iter()
                    .map(|&x| integral(&v.path, x).map(|n| n.max(0) as u64))
                    .collect::<CliResult<Vec<u64>>>()?
            }
            None => counts.iter().map(|c| c.unsigned_abs()).collect(),
        };
        Ok(ChargeGrid::from_parts(
            self.n_sites(),
            self.n_slices(),
            counts,
            visits,
            n_pairs,
        )?)
    }

    fn expect_four_channel(&self) -> CliResult<()> {
        if self.is_four_channel() {
            Ok(())
        } else {
            Err(CliError::data(&self.path, "expected columns t,z,ch1,ch2,ch3,ch4"))
        }
    }
}

fn integral(path: &Path, v: f64) -> CliResult<i64> {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        Ok(v as i64)
    } else {
        Err(CliError::data(path, format!("expected an integer tally, found {v}")))
    }
}

/// Reads a `t,z,...` grid, checking the t-major, z-ascending layout.
pub fn read_table(path: &Path) -> CliResult<Table> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < 3 || &header[0] != "t" || &header[1] != "z" {
        return Err(CliError::data(path, "header must start with t,z and name value columns"));
    }
    let columns: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    let mut times: Vec<f64> = Vec::new();
    let mut z: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    let mut row_in_slice = 0;
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::data(path, format!("row {}: '{s}' is not a number", n + 2)))
        };
        let t = parse(&record[0])?;
        let zi = parse(&record[1])?;
        if times.last() != Some(&t) {
            if !times.is_empty() && row_in_slice != z.len() {
                return Err(CliError::data(path, format!("slice at t = {} is incomplete", times.last().unwrap())));
            }
            times.push(t);
            row_in_slice = 0;
        }
        if times.len() == 1 {
            if z.last().is_some_and(|&last| last >= zi) {
                return Err(CliError::data(path, format!("row {}: z must ascend", n + 2)));
            }
            z.push(zi);
        } else if z.get(row_in_slice) != Some(&zi) {
            return Err(CliError::data(path, format!("row {}: z does not match the first slice", n + 2)));
        }
        row_in_slice += 1;
        for field in record.iter().skip(2) {
            values.push(parse(field)?);
        }
    }
    if times.is_empty() || row_in_slice != z.len() {
        return Err(CliError::data(path, "grid is empty or its last slice is incomplete"));
    }
    Ok(Table {
        path: path.to_path_buf(),
        columns,
        times,
        z,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chessboard_core::dirac::{dirac_propagator, EvolutionMode};

    #[test]
    fn four_state_history_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let spec = LatticeSpec::new(0.1, 0.1, 1.0, 1.0, 1.0, 6).unwrap();
        let h = dirac_propagator(&spec, 6, Component::Phi2, EvolutionMode::Renormalized).unwrap();
        write_four_history(&path, &spec, &h).unwrap();
        let table = read_table(&path).unwrap();
        assert_eq!((table.n_sites(), table.n_slices()), (21, 7));
        assert_eq!(table.as_history(EvolutionMode::Renormalized).unwrap(), h);
    }

    #[test]
    fn floats_carry_seventeen_significant_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(-2.5), "-2.5000000000000000e0");
        for v in [0.1, 1.0 / 3.0, -7.25e-300, 6.02e23] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn sidecar_round_trips_and_omits_empty_fields() {
        let dir = tempfile::tempdir().unwrap();
        let grid = dir.path().join("g.csv");
        let mut config = BTreeMap::new();
        config.insert("seed".to_string(), "4".to_string());
        let mut sidecar = Sidecar::new("entwined-sample", config, Values::Counts).with_shape(5, 3);
        sidecar.n_pairs = Some(10);
        write_json(&sidecar_path(&grid), &sidecar).unwrap();
        let text = std::fs::read_to_string(dir.path().join("g.json")).unwrap();
        assert!(!text.contains("stats") && text.contains("\"values\": \"counts\""));
        assert_eq!(read_sidecar(&grid).unwrap(), Some(sidecar));
        assert_eq!(read_sidecar(&dir.path().join("none.csv")).unwrap(), None);
        assert_eq!(visits_path(&grid), dir.path().join("g.visits.csv"));
    }

    #[test]
    fn malformed_tables_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        for text in [
            "a,b,c\n1,2,3\n",
            "t,z,v\n0,1,2\n0,0,2\n",
            "t,z,v\n0,0,1\n0,1,1\n1,0,1\n",
            "t,z,v\n0,0,x\n",
            "t,z,v\n",
        ] {
            std::fs::write(&path, text).unwrap();
            assert!(
                matches!(read_table(&path), Err(CliError::Data { .. })),
                "{text:?} should be rejected"
            );
        }
        assert!(matches!(read_table(&dir.path().join("missing.csv")), Err(CliError::Io { .. })));
    }
}
