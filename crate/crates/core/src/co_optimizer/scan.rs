//! Energies on one- and two-parameter grids.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::{fmt12, full_solve};
use crate::error::{Error, Result};
use crate::fermion_ops::{from_integrals, jordan_wigner};
use crate::geometry::{GeometryParameterization, Molecule};
use crate::integrals::{build_basis, compute_ao_integrals, transform_to_mo};
use crate::scf::run_rhf;
use crate::simulator::exact_ground_state;
use crate::vqe_engine::OptimizerConfig;

/// Largest system the FCI scan mode accepts.
pub const FCI_MAX_SPIN_ORBITALS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    DmetVqe,
    Fci,
}

/// One grid axis. All listed parameters take the same value, which
/// locks e.g. two mirror bonds together.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanAxis {
    pub parameters: Vec<usize>,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl ScanAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub x: Vec<f64>,
    /// None where the point could not be evaluated.
    pub energy: Option<f64>,
    /// VQE iterations spent on the point (zero in fci mode).
    pub vqe_iterations: usize,
}

/// Exact ground-state energy of the full molecule in STO-3G.
pub fn fci_energy(mol: &Molecule) -> Result<f64> {
    let basis = build_basis(mol)?;
    let ao = compute_ao_integrals(mol, &basis)?;
    let mf = run_rhf(&ao.tensors, &ao.overlap, mol.n_electrons(), None)?;
    let mo = transform_to_mo(&ao.tensors, &mf.mo_coefficients)?;
    let h = jordan_wigner(&from_integrals(&mo.one_body, &mo.two_body, mo.e_nuc)?);
    Ok(exact_ground_state(&h, 2 * mo.n_orb, mol.n_electrons())?.0)
}

/// Energies over the grid spanned by `axes` (one or two), other parameters
/// held at `base`. Points that fail are reported as missing.
pub fn potential_surface_scan(
    param: &GeometryParameterization,
    base: &[f64],
    axes: &[ScanAxis],
    mode: ScanMode,
    fragments: &[Vec<usize>],
    vqe: &OptimizerConfig,
) -> Result<Vec<ScanPoint>> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::InvalidConfig(format!("a scan needs one or two axes, got {}", axes.len())));
    }
    if base.len() != param.len() {
        return Err(Error::DimensionMismatch { expected: param.len(), got: base.len() });
    }
    for a in axes {
        if a.count == 0 || a.parameters.is_empty() || a.parameters.iter().any(|&p| p >= param.len()) {
            return Err(Error::InvalidConfig(format!("bad scan axis {a:?}")));
        }
    }
    if mode == ScanMode::Fci {
        let n = 2 * build_basis(param.reference())?.len();
        if n > FCI_MAX_SPIN_ORBITALS {
            return Err(Error::InvalidConfig(format!(
                "fci scans are limited to {FCI_MAX_SPIN_ORBITALS} spin-orbitals, molecule has {n}"
            )));
        }
    }
    let mut grid = vec![base.to_vec()];
    for a in axes {
        grid = grid
            .into_iter()
            .flat_map(|x| {
                a.values().into_iter().map(move |v| {
                    let mut y = x.clone();
                    for &p in &a.parameters {
                        y[p] = v;
                    }
                    y
                })
            })
            .collect();
    }
    Ok(grid
        .into_par_iter()
        .map(|x| {
            let solved = match mode {
                ScanMode::Fci => param.apply(&x).and_then(|m| fci_energy(&m)).map(|e| (e, 0)),
                ScanMode::DmetVqe => full_solve(param, &x, fragments, vqe).map(|s| (s.energy, s.vqe_iterations)),
            };
            match solved {
                Ok((e, n)) => ScanPoint { x, energy: Some(e), vqe_iterations: n },
                Err(e) => {
                    log::warn!("scan point {x:?} failed: {e}");
                    ScanPoint { x, energy: None, vqe_iterations: 0 }
                }
            }
        })
        .collect())
}

/// CSV with columns `x_0,...,x_{k-1},energy_ha`; missing energies are empty.
pub fn surface_csv(points: &[ScanPoint]) -> String {
    let n = points.first().map_or(0, |p| p.x.len());
    let mut out = String::new();
    for i in 0..n {
        let _ = write!(out, "x_{i},");
    }
    out.push_str("energy_ha\n");
    for p in points {
        for v in &p.x {
            let _ = write!(out, "{},", fmt12(*v));
        }
        if let Some(e) = p.energy {
            out.push_str(&fmt12(e));
        }
        out.push('\n');
    }
    out
}
