//! Nuclear gradients by central differences of the DMET energy.

use rayon::prelude::*;

use super::{build_system, CoOptConfig};
use crate::dmet::{fragment_energy, fragment_result, DmetState, DmetSystem, FragmentSolution};
use crate::error::{Error, Result};
use crate::geometry::GeometryParameterization;
use crate::simulator::{Rdms, UccsdAnsatz};
use crate::vqe_engine::{solve_fragment, warm_start, OptimizerConfig};

/// Σ_A E^A + E_nuc of `system` evaluated with fixed fragment+bath RDMs.
pub fn frozen_rdm_energy(system: &DmetSystem, rdms: &[&Rdms]) -> Result<f64> {
    if rdms.len() != system.problems.len() {
        return Err(Error::DimensionMismatch { expected: system.problems.len(), got: rdms.len() });
    }
    let mut e = system.e_nuc();
    for (p, d) in system.problems.iter().zip(rdms) {
        e += fragment_energy(p, d)?;
    }
    Ok(e)
}

/// Central difference of `energy_at` along every parameter. A displaced
/// geometry that cannot be built triggers one retry with a 10× smaller step.
pub(crate) fn central_differences<F>(x: &[f64], h: f64, energy_at: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    (0..x.len())
        .into_par_iter()
        .map(|i| {
            let diff = |h: f64| -> Result<f64> {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                Ok((energy_at(&xp)? - energy_at(&xm)?) / (2.0 * h))
            };
            match diff(h) {
                Err(Error::InvalidGeometry(msg)) => {
                    log::warn!("displacement of parameter {i} invalid ({msg}); retrying with step {}", 0.1 * h);
                    diff(0.1 * h)
                }
                other => other,
            }
        })
        .collect()
}

/// ∂E/∂x with the fragment RDMs of `state` frozen: integrals, mean field
/// and baths are rebuilt at x ± h, θ is never re-optimized.
pub fn nuclear_gradient(
    param: &GeometryParameterization,
    x: &[f64],
    fragments: &[Vec<usize>],
    system: &DmetSystem,
    state: &DmetState,
    cfg: &CoOptConfig,
) -> Result<Vec<f64>> {
    let rdms: Vec<&Rdms> = state.fragment_results.iter().map(|f| &f.rdms).collect();
    central_differences(x, cfg.x_gradient_step, |xd| {
        let displaced = build_system(param, xd, fragments, Some(system))?;
        frozen_rdm_energy(&displaced, &rdms)
    })
}

/// ∂E/∂x with θ re-optimized (warm-started from `thetas`) at every displaced
/// geometry, μ held at the state's value. Returns the gradient and the VQE
/// iterations spent.
pub fn nuclear_gradient_full(
    param: &GeometryParameterization,
    x: &[f64],
    fragments: &[Vec<usize>],
    system: &DmetSystem,
    state: &DmetState,
    thetas: &[Vec<f64>],
    vqe: &OptimizerConfig,
    cfg: &CoOptConfig,
) -> Result<(Vec<f64>, usize)> {
    let spent = std::sync::atomic::AtomicUsize::new(0);
    let g = central_differences(x, cfg.x_gradient_step, |xd| {
        let displaced = build_system(param, xd, fragments, Some(system))?;
        let mut e = displaced.e_nuc();
        for (k, p) in displaced.problems.iter().enumerate() {
            let ansatz = UccsdAnsatz::new(p.n_qubits(), p.n_electrons_emb)?;
            let start = warm_start(thetas.get(k).map(|t| t.as_slice()), &ansatz);
            let r = solve_fragment(&p.qubit_hamiltonian(state.mu), &ansatz, &start.theta, vqe)?;
            spent.fetch_add(r.iterations, std::sync::atomic::Ordering::Relaxed);
            let sol = FragmentSolution {
                embedded_energy: r.energy,
                rdms: r.rdms,
                theta: r.theta,
                iterations: r.iterations,
                converged: r.converged,
            };
            e += fragment_result(p, sol)?.energy;
        }
        Ok(e)
    })?;
    Ok((g, spent.into_inner()))
}
