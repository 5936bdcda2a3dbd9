use log::debug;
use serde::{Deserialize, Serialize};

use super::energy::energy_of;
use super::tension::TensionWorkspace;
use super::{conformality_defect, DiscError, DiscMap};
use crate::linalg;
use crate::tolerances::TAU_H;

/// Largest number of step halvings in the line search.
const MAX_HALVINGS: usize = 20;
/// Sufficient-decrease factor for residual-driven polish steps.
const POLISH_DECREASE: f64 = 1e-4;

/// Summary of a relaxation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub energy: f64,
    /// `sup |tau(u)|` over interior nodes.
    pub tension_residual: f64,
    pub conformality_defect: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Accepted steps that reduced the tension but not the discrete
    /// energy (see [`harmonic_relax`]).
    pub polish_steps: usize,
    /// Energy of the seed followed by the energy after every accepted
    /// energy-descent step; nonincreasing by construction.
    pub energy_trace: Vec<f64>,
}

impl SolveReport {
    pub fn ensure_converged(&self) -> Result<(), DiscError> {
        if self.converged {
            Ok(())
        } else {
            Err(DiscError::NoConvergence {
                residual: self.tension_residual,
                iterations: self.iterations,
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct RelaxOptions {
    pub tau_h: f64,
    pub max_iter: usize,
    /// Relative tolerance of the inner Krylov solve.
    pub krylov_tol: f64,
    pub krylov_restart: usize,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            tau_h: TAU_H,
            max_iter: 60,
            krylov_tol: 1e-3,
            krylov_restart: 30,
        }
    }
}

/// Relaxes `seed` towards a harmonic map with fixed boundary values.
///
/// `boundary` (node-major over boundary nodes) overrides the seed's
/// boundary when given. Each iteration computes a Newton direction for
/// `tau(u) = 0` by preconditioned GMRES (the Laplacian inverse is the
/// preconditioner, matrix-vector products by differences of `tau`), falling
/// back to the preconditioned tension `-L^{-1} tau` when the Krylov solve
/// stalls. The step length is halved until the step stays in the chart and
/// does not increase the energy. The zero of the discrete tension and the
/// minimiser of the discrete energy differ at truncation order, so once
/// no step length decreases the energy, steps that decrease the Euclidean
/// norm of the tension are accepted instead and counted as polish steps.
///
/// Non-convergence is reported through `converged = false` with the best
/// iterate; leaving the chart after 20 halvings is an error.
pub fn harmonic_relax(
    seed: &DiscMap,
    boundary: Option<&[f64]>,
    tau_h: f64,
    max_iter: usize,
) -> Result<(DiscMap, SolveReport), DiscError> {
    relax_with(
        seed,
        boundary,
        &RelaxOptions {
            tau_h,
            max_iter,
            ..RelaxOptions::default()
        },
    )
}

pub fn relax_with(
    seed: &DiscMap,
    boundary: Option<&[f64]>,
    opts: &RelaxOptions,
) -> Result<(DiscMap, SolveReport), DiscError> {
    let n = seed.dim();
    let grid = seed.grid().clone();
    let ni = grid.n_interior();
    let m = ni * n;
    let mut values = seed.values().to_vec();
    if let Some(b) = boundary {
        let expected = grid.n_boundary() * n;
        if b.len() != expected {
            return Err(DiscError::ShapeMismatch {
                expected,
                got: b.len(),
            });
        }
        values[m..].copy_from_slice(b);
    }
    let start = seed.with_values(values.clone());
    start.check_in_chart()?;

    let mut ws = TensionWorkspace::new(n);
    let mut tau = vec![0.0; m];
    ws.eval(&start, &values, &mut tau)?;
    let mut residual = linalg::sup_norm(&tau);
    let mut e = energy_of(&start, &values);
    let mut trace = vec![e];
    let mut iterations = 0;
    let mut polish = 0;

    // Component-wise Laplacian inverse on node-major data.
    let precond = |x: &mut [f64]| {
        let mut col = vec![0.0; ni];
        for k in 0..n {
            for i in 0..ni {
                col[i] = x[i * n + k];
            }
            grid.solve_laplacian(&mut col);
            for i in 0..ni {
                x[i * n + k] = col[i];
            }
        }
    };

    let mut trial = values.clone();
    let mut tau_trial = vec![0.0; m];
    let mut jv_buf = values.clone();
    let mut tau_jv = vec![0.0; m];
    while residual > opts.tau_h && iterations < opts.max_iter {
        iterations += 1;
        // Newton direction J d = -tau.
        let rhs: Vec<f64> = tau.iter().map(|v| -v).collect();
        let mut dir = vec![0.0; m];
        let unorm = linalg::sup_norm(&values[..m]).max(1.0);
        let mut jac_failed = false;
        let outcome = linalg::gmres(
            m,
            |v, out| {
                let vn = linalg::sup_norm(v);
                if vn == 0.0 {
                    out.fill(0.0);
                    return;
                }
                let eps = 1e-7 * unorm / vn;
                jv_buf.copy_from_slice(&values);
                for i in 0..m {
                    jv_buf[i] += eps * v[i];
                }
                if ws.eval(&start, &jv_buf, &mut tau_jv).is_err() {
                    jac_failed = true;
                    out.fill(0.0);
                    return;
                }
                for i in 0..m {
                    out[i] = (tau_jv[i] - tau[i]) / eps;
                }
            },
            precond,
            &rhs,
            &mut dir,
            opts.krylov_restart,
            2 * opts.krylov_restart,
            opts.krylov_tol,
        );
        if jac_failed || !(outcome.relative_residual < 0.5) || dir.iter().any(|v| !v.is_finite()) {
            debug!("krylov solve stalled ({:.2e}); using preconditioned tension", outcome.relative_residual);
            dir.copy_from_slice(&rhs);
            precond(&mut dir);
        }

        let mut lambda = 1.0;
        let mut accepted = false;
        let mut left_chart = true;
        for _ in 0..=MAX_HALVINGS {
            trial.copy_from_slice(&values);
            for i in 0..m {
                trial[i] += lambda * dir[i];
            }
            let in_chart = (0..ni).all(|i| start.target().contains(&trial[i * n..(i + 1) * n]));
            if in_chart {
                left_chart = false;
                if ws.eval(&start, &trial, &mut tau_trial).is_ok() {
                    let e_new = energy_of(&start, &trial);
                    let r_new = linalg::sup_norm(&tau_trial);
                    let descent = e_new <= *trace.last().expect("trace holds the seed energy");
                    let l2_new = linalg::norm2(&tau_trial);
                    let polish_ok = l2_new <= (1.0 - POLISH_DECREASE * lambda) * linalg::norm2(&tau);
                    if descent || polish_ok {
                        if descent {
                            trace.push(e_new);
                        } else {
                            polish += 1;
                        }
                        std::mem::swap(&mut values, &mut trial);
                        std::mem::swap(&mut tau, &mut tau_trial);
                        residual = r_new;
                        e = e_new;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        debug!("relax iter {iterations}: lambda {lambda:.3e}, energy {e:.6e}, residual {residual:.3e}");
        if !accepted {
            if left_chart {
                return Err(DiscError::LeftChart {
                    halvings: MAX_HALVINGS,
                });
            }
            break;
        }
    }

    let out = start.with_values(values);
    let report = SolveReport {
        energy: e,
        tension_residual: residual,
        conformality_defect: conformality_defect(&out),
        iterations,
        converged: residual <= opts.tau_h,
        polish_steps: polish,
        energy_trace: trace,
    };
    Ok((out, report))
}
