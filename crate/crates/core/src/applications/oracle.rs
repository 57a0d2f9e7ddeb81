//! Exhaustive grid searches with exact minimum SNRs, as ground truth for the
//! MM allocations.

use rayon::prelude::*;

use super::allocate::{bler_box, ee_packet_box, expect_kind, wsr_boxes};
use super::result::AllocationResult;
use super::scenario::{ProblemKind, Scenario};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::scalar::{self, Snr, TransmissionParams};
use crate::solvers;

/// Fewest grid steps per axis accepted by the oracles.
pub const MIN_GRID_STEPS: usize = 100;
const MAX_GRID_POINTS: usize = 20_000_000;

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn at(&self, t: f64) -> f64 {
        if self.log {
            (self.lo.ln() + t * (self.hi / self.lo).ln()).exp()
        } else {
            self.lo + t * (self.hi - self.lo)
        }
    }
}

type Candidate = (f64, usize, Vec<f64>);

/// Best point of a tensor grid over the axes restricted to `[t0, t1]` in unit
/// coordinates. `eval` returns the objective and the full variable vector,
/// or `None` where the point is infeasible. Ties go to the lowest index.
fn scan<F>(axes: &[Axis], ranges: &[(f64, f64)], steps: usize, maximize: bool, eval: &F) -> Option<Candidate>
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)> + Sync,
{
    let per_axis = steps + 1;
    let total = per_axis.pow(axes.len() as u32);
    let better = |a: &Candidate, b: &Candidate| {
        let ord = if maximize { a.0 > b.0 } else { a.0 < b.0 };
        ord || (a.0 == b.0 && a.1 < b.1)
    };
    (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            let mut rest = idx;
            let mut point = Vec::with_capacity(axes.len());
            for (axis, &(t0, t1)) in axes.iter().zip(ranges) {
                let i = rest % per_axis;
                rest /= per_axis;
                let t = t0 + (t1 - t0) * i as f64 / steps as f64;
                point.push(axis.at(t));
            }
            eval(&point).map(|(f, x)| (f, idx, x))
        })
        .reduce_with(|a, b| if better(&b, &a) { b } else { a })
}

/// Grid search followed by one pass on a grid shrunk to two cells around the
/// best point. Returns the full variable vector of the winner.
fn grid_search<F>(axes: &[Axis], steps: usize, maximize: bool, eval: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)> + Sync,
{
    if steps < MIN_GRID_STEPS {
        return Err(Error::Domain(format!(
            "grid needs at least {MIN_GRID_STEPS} steps, got {steps}"
        )));
    }
    if (steps + 1).checked_pow(axes.len() as u32).is_none_or(|n| n > MAX_GRID_POINTS) {
        return Err(Error::Unsupported(format!(
            "grid of {steps} steps over {} axes is too large",
            axes.len()
        )));
    }
    let full = vec![(0.0, 1.0); axes.len()];
    let Some((f0, idx, x0)) = scan(axes, &full, steps, maximize, &eval) else {
        return Err(Error::Infeasible("no grid point is feasible".into()));
    };
    let h = 1.0 / steps as f64;
    let per_axis = steps + 1;
    let mut rest = idx;
    let shrunk: Vec<(f64, f64)> = axes
        .iter()
        .map(|_| {
            let t = (rest % per_axis) as f64 * h;
            rest /= per_axis;
            ((t - h).max(0.0), (t + h).min(1.0))
        })
        .collect();
    match scan(axes, &shrunk, steps, maximize, &eval) {
        Some((f1, _, x1)) if (maximize && f1 > f0) || (!maximize && f1 < f0) => Ok(x1),
        _ => Ok(x0),
    }
}

fn exact_snr(n: f64, m: f64, eps: f64, tol: f64) -> Option<f64> {
    let p = TransmissionParams::new(n, m, eps).ok()?;
    solvers::solve_bisection(&p, tol).ok().map(|t| t.final_snr.linear())
}

/// Dispatches on the scenario kind.
pub fn oracle(s: &Scenario, grid_steps: usize, tol: &Tolerances) -> Result<AllocationResult> {
    match s.kind {
        ProblemKind::Wsr => oracle_wsr(s, grid_steps, tol),
        ProblemKind::PowerMin => oracle_power_min(s, grid_steps, tol),
        ProblemKind::EeMax => oracle_ee_max(s, grid_steps, tol),
    }
}

/// Grid over the packet sizes of all links but the last, which takes whatever
/// the remaining budget carries.
pub fn oracle_wsr(s: &Scenario, grid_steps: usize, tol: &Tolerances) -> Result<AllocationResult> {
    expect_kind(s, ProblemKind::Wsr)?;
    let k = s.links.len();
    let eps = s.eps_th();
    let p_max = s.thresholds.p_max_w.expect("validated");
    let gains = s.gains()?;
    let boxes = wsr_boxes(s)?;
    let alpha = s.weights_or_unit();
    let last = k - 1;
    let last_params = TransmissionParams::new(1.0, s.links[last].m, eps)?;
    let eval = |point: &[f64]| -> Option<(f64, Vec<f64>)> {
        let mut used = 0.0;
        for (i, &n) in point.iter().enumerate() {
            used += s.links[i].m * exact_snr(n, s.links[i].m, eps, tol.oracle_rel)? / gains[i];
        }
        let residual = p_max - used;
        if residual <= 0.0 {
            return None;
        }
        let m = s.links[last].m;
        let gamma = Snr::new(residual * gains[last] / m).ok()?;
        let n_last = (m * scalar::achievable_rate(&last_params, gamma)).min(boxes[last].1);
        if n_last < boxes[last].0 {
            return None;
        }
        let mut x = point.to_vec();
        x.push(n_last);
        let f = alpha.iter().zip(&x).map(|(a, n)| a * n).sum();
        Some((f, x))
    };
    let axes: Vec<Axis> = boxes[..last]
        .iter()
        .map(|&(lo, hi)| Axis { lo, hi, log: false })
        .collect();
    let n = if axes.is_empty() {
        eval(&[]).map(|(_, x)| x).ok_or_else(|| Error::Infeasible("budget too small".into()))?
    } else {
        grid_search(&axes, grid_steps, true, eval)?
    };
    AllocationResult::assemble(s, "grid_oracle", &n, &vec![eps; k])
}

/// Grid over the error rates of all links but the last (log-spaced), which
/// takes the remainder of `ε_th`.
pub fn oracle_power_min(s: &Scenario, grid_steps: usize, tol: &Tolerances) -> Result<AllocationResult> {
    expect_kind(s, ProblemKind::PowerMin)?;
    let k = s.links.len();
    let eps_th = s.eps_th();
    let gains = s.gains()?;
    let (lo, hi) = bler_box(eps_th);
    let n: Vec<f64> = s.links.iter().map(|l| l.n.expect("validated")).collect();
    let eval = |point: &[f64]| -> Option<(f64, Vec<f64>)> {
        let rest = eps_th - point.iter().sum::<f64>();
        if !(rest >= lo && rest <= hi) {
            return None;
        }
        let mut e = point.to_vec();
        e.push(rest);
        let mut power = 0.0;
        for (i, &ei) in e.iter().enumerate() {
            power += s.links[i].m * exact_snr(n[i], s.links[i].m, ei, tol.oracle_rel)? / gains[i];
        }
        Some((power, e))
    };
    let axes = vec![Axis { lo, hi, log: true }; k - 1];
    let eps = if axes.is_empty() {
        vec![eps_th]
    } else {
        grid_search(&axes, grid_steps, false, eval)?
    };
    AllocationResult::assemble(s, "grid_oracle", &n, &eps)
}

/// Two-dimensional grid over the packet size (linear) and the first hop's
/// error rate (log-spaced).
pub fn oracle_ee_max(s: &Scenario, grid_steps: usize, tol: &Tolerances) -> Result<AllocationResult> {
    expect_kind(s, ProblemKind::EeMax)?;
    let eps_th = s.eps_th();
    let gains = s.gains()?;
    let (n_lo, n_hi) = ee_packet_box(s)?;
    let (e_lo, e_hi) = bler_box(eps_th);
    let eval = |point: &[f64]| -> Option<(f64, Vec<f64>)> {
        let (n, e1) = (point[0], point[1]);
        let e2 = eps_th - e1;
        let p1 = s.links[0].m * exact_snr(n, s.links[0].m, e1, tol.oracle_rel)? / gains[0];
        let p2 = s.links[1].m * exact_snr(n, s.links[1].m, e2, tol.oracle_rel)? / gains[1];
        Some((n / (p1 + p2), vec![n, e1]))
    };
    let axes = [
        Axis {
            lo: n_lo,
            hi: n_hi,
            log: false,
        },
        Axis {
            lo: e_lo,
            hi: e_hi,
            log: true,
        },
    ];
    let x = grid_search(&axes, grid_steps, true, eval)?;
    AllocationResult::assemble(s, "grid_oracle", &[x[0], x[0]], &[x[1], eps_th - x[1]])
}
