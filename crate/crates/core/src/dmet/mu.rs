//! Chemical-potential search.

use super::{solve_fragments, DmetState, DmetSystem, FragmentSolver};
use crate::error::{Error, Result};

/// Target accuracy of the summed electron count.
pub const ELECTRON_TOL: f64 = 1e-3;
/// Cap on bracket-shrinking iterations.
pub const MAX_MU_ITERATIONS: usize = 20;
/// The bracket search gives up outside [−MU_LIMIT, MU_LIMIT] Ha.
pub const MU_LIMIT: f64 = 2.0;
const FIRST_STEP: f64 = 0.05;
const GOLDEN: f64 = 0.381_966_011_250_105;

fn trace_text(trace: &[(f64, f64)]) -> String {
    trace
        .iter()
        .map(|(m, d)| format!("mu={m:.6} dN={d:+.3e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Search μ so that fragment electron counts add up to the total.
///
/// `evaluate(μ)` solves all fragments at μ. Starting from `mu0`, a bracket
/// with a sign change of the deviation is found by doubling steps, then
/// shrunk golden-section style, stepping from the endpoint with the
/// smaller deviation. The state with the lowest cost seen is returned;
/// `converged` records whether the tolerance was met.
pub fn optimize_mu<F>(mu0: f64, mut evaluate: F) -> Result<DmetState>
where
    F: FnMut(f64) -> Result<DmetState>,
{
    let mut trace = Vec::new();
    let mut eval = |mu: f64, trace: &mut Vec<(f64, f64)>| -> Result<(f64, DmetState)> {
        let s = evaluate(mu)?;
        let d = s.electron_deviation();
        trace.push((mu, d));
        log::debug!("mu search: mu={mu:.8} deviation={d:+.3e}");
        Ok((d, s))
    };
    let finish = |mut s: DmetState, trace: Vec<(f64, f64)>, converged: bool| {
        s.converged = converged;
        s.mu_trace = trace;
        s.cost = super::dmet_cost(&s);
        s
    };

    let (d0, s0) = eval(mu0, &mut trace)?;
    if d0.abs() < ELECTRON_TOL {
        return Ok(finish(s0, trace, true));
    }
    let mut best = (d0.abs(), s0);
    // too many electrons → lower μ
    let dir = -d0.signum();
    let mut step = FIRST_STEP;
    let (mut a, mut da) = (mu0, d0);
    let (mut b, mut db);
    loop {
        let mu = mu0 + dir * step;
        let (d, s) = eval(mu, &mut trace)?;
        if d.abs() < best.0 {
            best = (d.abs(), s);
        }
        if d.abs() < ELECTRON_TOL {
            return Ok(finish(best.1, trace, true));
        }
        if d.signum() != da.signum() {
            (b, db) = (mu, d);
            break;
        }
        (a, da) = (mu, d);
        if mu.abs() >= MU_LIMIT - 1e-12 {
            return Err(Error::DmetNonConvergence(format!(
                "no sign change of the electron-count deviation in [-{MU_LIMIT}, {MU_LIMIT}]: {}",
                trace_text(&trace)
            )));
        }
        step *= 2.0;
        if (mu0 + dir * step).abs() > MU_LIMIT {
            step = (MU_LIMIT - dir * mu0).abs();
        }
    }

    for _ in 0..MAX_MU_ITERATIONS {
        // golden point measured from the endpoint closer to the root
        let mu = if da.abs() <= db.abs() { a + GOLDEN * (b - a) } else { b + GOLDEN * (a - b) };
        let (d, s) = eval(mu, &mut trace)?;
        if d.abs() < best.0 {
            best = (d.abs(), s);
        }
        if d.abs() < ELECTRON_TOL {
            return Ok(finish(best.1, trace, true));
        }
        if d.signum() == da.signum() {
            (a, da) = (mu, d);
        } else {
            (b, db) = (mu, d);
        }
    }
    log::warn!("mu search stopped after {MAX_MU_ITERATIONS} iterations: {}", trace_text(&trace));
    Ok(finish(best.1, trace, false))
}

impl DmetSystem {
    /// Converge μ with a fixed fragment solver.
    pub fn converge_mu<S: FragmentSolver + ?Sized>(&self, solver: &S, mu0: f64) -> Result<DmetState> {
        optimize_mu(mu0, |mu| solve_fragments(self, mu, solver))
    }
}
