//! Four-state entwined-pair difference scheme and the discrete Dirac
//! propagator it generates.
//!
//! ```text
//! phi1_n(z) = (1 - p) phi1_{n-1}(z - c dt) - p phi2_{n-1}(z - c dt)
//! phi2_n(z) = (1 - p) phi2_{n-1}(z + c dt) + p phi1_{n-1}(z + c dt)
//! ```
//!
//! and identically for `(phi3, phi4)`. Both source terms of a component are
//! read at the same shifted site, unlike the Kac scheme.

use std::fmt;
use std::ops::{Mul, Neg};
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::lattice::{Component, FourField, LatticeSpec};
use crate::{Error, Result};

type Entry = Complex<i32>;

/// Small dense square matrix over the Gaussian integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Matrix<const N: usize>(pub [[Entry; N]; N]);

impl<const N: usize> Matrix<N> {
    pub fn identity() -> Self {
        let mut m = [[Entry::new(0, 0); N]; N];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = Entry::new(1, 0);
        }
        Matrix(m)
    }

    pub fn zero() -> Self {
        Matrix([[Entry::new(0, 0); N]; N])
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().flatten().all(|e| e.im == 0)
    }

    pub fn transpose(&self) -> Self {
        Matrix(std::array::from_fn(|i| std::array::from_fn(|j| self.0[j][i])))
    }

    /// Real entries as `f64`; imaginary parts are dropped.
    pub fn to_real(&self) -> [[f64; N]; N] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j].re as f64))
    }
}

impl<const N: usize> Mul for Matrix<N> {
    type Output = Matrix<N>;

    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for i in 0..N {
            for j in 0..N {
                out.0[i][j] = (0..N).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        out
    }
}

impl<const N: usize> Neg for Matrix<N> {
    type Output = Matrix<N>;

    fn neg(self) -> Self {
        Matrix(self.0.map(|row| row.map(|e| -e)))
    }
}

fn m2(entries: [[(i32, i32); 2]; 2]) -> Matrix<2> {
    Matrix(entries.map(|row| row.map(|(re, im)| Entry::new(re, im))))
}

/// `diag(upper, lower)`.
pub fn block_diagonal(upper: Matrix<2>, lower: Matrix<2>) -> Matrix<4> {
    let mut m = Matrix::<4>::zero();
    for i in 0..2 {
        for j in 0..2 {
            m.0[i][j] = upper.0[i][j];
            m.0[i + 2][j + 2] = lower.0[i][j];
        }
    }
    m
}

/// Pauli matrices, the real antisymmetric `sigma_q = i sigma_y`, and the 4x4
/// `alpha_z`, `beta` of the Dirac form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiracAlgebra {
    pub sigma_x: Matrix<2>,
    pub sigma_y: Matrix<2>,
    pub sigma_z: Matrix<2>,
    pub sigma_q: Matrix<2>,
    pub alpha_z: Matrix<4>,
    pub beta: Matrix<4>,
}

impl DiracAlgebra {
    pub fn new() -> Self {
        let sigma_x = m2([[(0, 0), (1, 0)], [(1, 0), (0, 0)]]);
        let sigma_y = m2([[(0, 0), (0, -1)], [(0, 1), (0, 0)]]);
        let sigma_z = m2([[(1, 0), (0, 0)], [(0, 0), (-1, 0)]]);
        let i = m2([[(0, 1), (0, 0)], [(0, 0), (0, 1)]]);
        let sigma_q = i * sigma_y;
        Self {
            sigma_x,
            sigma_y,
            sigma_z,
            sigma_q,
            alpha_z: block_diagonal(-sigma_z, sigma_z),
            beta: block_diagonal(sigma_y, sigma_y),
        }
    }
}

impl Default for DiracAlgebra {
    fn default() -> Self {
        Self::new()
    }
}

/// Whether slices keep the `(1 - p)^n` decay or have it removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvolutionMode {
    Raw,
    Renormalized,
}

impl FromStr for EvolutionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(EvolutionMode::Raw),
            "renormalized" => Ok(EvolutionMode::Renormalized),
            _ => Err(Error::InvalidParameter(format!(
                "mode must be raw or renormalized, got '{s}'"
            ))),
        }
    }
}

impl fmt::Display for EvolutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvolutionMode::Raw => "raw",
            EvolutionMode::Renormalized => "renormalized",
        })
    }
}

/// Slices `0..=n` of a four-state evolution, tagged with the mode that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracHistory {
    pub mode: EvolutionMode,
    pub slices: Vec<FourField>,
}

impl DiracHistory {
    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }
}

/// Advances a four-state field by one step of the entwined scheme.
pub fn step_entwined(field: &FourField, spec: &LatticeSpec) -> Result<FourField> {
    spec.check_sites(field.n_sites())?;
    let p = spec.flip_probability();
    let q = 1.0 - p;
    let n = field.n_sites();
    let mut phi: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; n]);
    for (right, left) in [(0, 1), (2, 3)] {
        let (r, l) = (&field.phi[right], &field.phi[left]);
        for i in 0..n {
            if i > 0 {
                phi[right][i] = q * r[i - 1] - p * l[i - 1];
            }
            if i + 1 < n {
                phi[left][i] = q * l[i + 1] + p * r[i + 1];
            }
        }
    }
    Ok(FourField {
        phi,
        t_index: field.t_index + 1,
    })
}

/// Renormalisation factor `(1 - p)^-step`.
pub fn decay_compensation(spec: &LatticeSpec, step: usize) -> Result<f64> {
    let q = 1.0 - spec.flip_probability();
    let factor = q.powi(-(step as i32));
    if !factor.is_finite() || step > i32::MAX as usize {
        return Err(Error::RenormalizationOverflow { step });
    }
    Ok(factor)
}

pub fn evolve_dirac(
    init: &FourField,
    spec: &LatticeSpec,
    n: usize,
    mode: EvolutionMode,
) -> Result<DiracHistory> {
    if n > spec.n_steps {
        return Err(Error::StepsExceedLattice {
            requested: n,
            available: spec.n_steps,
        });
    }
    spec.check_sites(init.n_sites())?;
    let mut raw = Vec::with_capacity(n + 1);
    raw.push(init.clone());
    for _ in 0..n {
        let next = step_entwined(raw.last().expect("non-empty"), spec)?;
        raw.push(next);
    }
    let slices = match mode {
        EvolutionMode::Raw => raw,
        EvolutionMode::Renormalized => raw
            .into_iter()
            .enumerate()
            .map(|(k, mut slice)| {
                let factor = decay_compensation(spec, k)?;
                for values in &mut slice.phi {
                    values.iter_mut().for_each(|v| *v *= factor);
                }
                Ok(slice)
            })
            .collect::<Result<_>>()?,
    };
    Ok(DiracHistory { mode, slices })
}

/// Evolution of a unit delta at the origin in `source`: the discrete Dirac
/// propagator.
pub fn dirac_propagator(
    spec: &LatticeSpec,
    n: usize,
    source: Component,
    mode: EvolutionMode,
) -> Result<DiracHistory> {
    let init = FourField::delta(spec, spec.origin(), source)?;
    evolve_dirac(&init, spec, n, mode)
}

/// `sum_z (phi_r^2 + phi_l^2)` over one decoupled block (0 for `(1,2)`,
/// 1 for `(3,4)`).
pub fn block_quadratic_norm(field: &FourField, block: usize) -> f64 {
    let (r, l) = (&field.phi[2 * block], &field.phi[2 * block + 1]);
    r.iter().zip(l).map(|(a, b)| a * a + b * b).sum()
}
