//! The three allocation problems solved by majorization-minimization.

use super::result::AllocationResult;
use super::scenario::{ProblemKind, Scenario};
use crate::analysis::ConvexityCertificate;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::mm::{
    dinkelbach_solve, mm_solve, Affine, Binding, DualBisection, LinkTemplate, MmOptions,
    MmProblem, ProjectedGradient, VarKind, Variable,
};
use crate::scalar::{self, gamma_bar, Snr, TransmissionParams};
use crate::solvers;

/// Smallest packet size considered, in bits.
pub const MIN_PACKET_BITS: f64 = 1.0;
/// Packet sizes are searched up to this multiple of the blocklength.
pub const MAX_RATE_FOR_EE: f64 = 4.0;
/// Free error rates stay within `[ε_th·δ, ε_th·(1 − δ)]`, away from `Q⁻¹(0) = ∞`.
pub const BLER_MARGIN: f64 = 1e-6;

pub(crate) fn expect_kind(s: &Scenario, kind: ProblemKind) -> Result<()> {
    s.validate()?;
    if s.kind != kind {
        return Err(Error::Unsupported(format!(
            "scenario is `{}`, expected `{}`",
            s.kind.name(),
            kind.name()
        )));
    }
    Ok(())
}

/// Solves the scenario according to its kind.
pub fn solve(s: &Scenario, tol: &Tolerances) -> Result<AllocationResult> {
    match s.kind {
        ProblemKind::Wsr => solve_wsr(s, tol),
        ProblemKind::PowerMin => solve_power_min(s, tol),
        ProblemKind::EeMax => solve_ee_max(s, tol),
    }
}

pub(crate) fn bler_box(eps_th: f64) -> (f64, f64) {
    (eps_th * BLER_MARGIN, eps_th * (1.0 - BLER_MARGIN))
}

/// Packet-size box of each link for the weighted sum rate: from one bit up to
/// what the link carries when it receives the entire budget.
pub(crate) fn wsr_boxes(s: &Scenario) -> Result<Vec<(f64, f64)>> {
    let p_max = s.thresholds.p_max_w.expect("validated");
    let eps = s.eps_th();
    let gains = s.gains()?;
    let mut floor_power = 0.0;
    let mut boxes = Vec::new();
    for (l, &h) in s.links.iter().zip(&gains) {
        let p = TransmissionParams::new(MIN_PACKET_BITS, l.m, eps)?;
        floor_power += l.m * solvers::reference_snr(&p)?.linear() / h;
        let full = Snr::new(p_max * h / l.m)?;
        let upper = l.m * scalar::achievable_rate(&p, full);
        boxes.push((MIN_PACKET_BITS, upper.max(MIN_PACKET_BITS)));
    }
    let baseline: f64 = s
        .links
        .iter()
        .zip(&gains)
        .map(|(l, &h)| {
            let p = TransmissionParams::new(MIN_PACKET_BITS, l.m, eps).expect("validated");
            l.m * gamma_bar(&p).linear() / h
        })
        .sum();
    if baseline >= p_max || floor_power > p_max {
        return Err(Error::Infeasible(format!(
            "power budget {p_max} W cannot carry {MIN_PACKET_BITS} bit per link"
        )));
    }
    Ok(boxes)
}

/// The weighted-sum-rate problem in minimization form, starting from the
/// smallest packets with exact anchors.
pub fn wsr_problem(s: &Scenario) -> Result<MmProblem> {
    expect_kind(s, ProblemKind::Wsr)?;
    let k = s.links.len();
    let eps = s.eps_th();
    let gains = s.gains()?;
    let boxes = wsr_boxes(s)?;
    let problem = MmProblem {
        variables: boxes
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| Variable::new(format!("n{i}"), VarKind::PacketSize, lo, hi))
            .collect(),
        links: s
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| LinkTemplate {
                m: l.m,
                n: Binding::Var(i),
                eps: Binding::Fixed(eps),
            })
            .collect(),
        objective: Affine {
            var_coeffs: s.weights_or_unit().iter().map(|a| -a).collect(),
            gamma_coeffs: vec![0.0; k],
            constant: 0.0,
        },
        constraints: vec![Affine {
            var_coeffs: vec![0.0; k],
            gamma_coeffs: s.links.iter().zip(&gains).map(|(l, h)| l.m / h).collect(),
            constant: -s.thresholds.p_max_w.expect("validated"),
        }],
        initial: boxes.iter().map(|b| b.0).collect(),
        initial_gamma_dots: None,
    };
    Ok(MmProblem {
        initial_gamma_dots: Some(problem.true_snrs(&problem.initial)?),
        ..problem
    })
}

/// Maximizes `Σ α_i N_i` subject to `Σ m_i γ_i / h_i ≤ P_max`, all links at `ε_th`.
pub fn solve_wsr(s: &Scenario, tol: &Tolerances) -> Result<AllocationResult> {
    let problem = wsr_problem(s)?;
    let st = mm_solve(&problem, &DualBisection, tol.mm_rel, tol.mm_max_rounds)?;
    let eps = vec![s.eps_th(); s.links.len()];
    let mut r = AllocationResult::assemble(s, "mm", &st.variables, &eps)?;
    r.rounds = Some(st.round);
    r.history = st.history.iter().map(|h| h.objective).collect();
    r.monotone = st.is_monotone();
    Ok(r)
}

/// The power-minimization problem, starting from an even split of `ε_th`
/// with exact anchors.
pub fn power_min_problem(s: &Scenario) -> Result<MmProblem> {
    expect_kind(s, ProblemKind::PowerMin)?;
    let k = s.links.len();
    let eps_th = s.eps_th();
    let gains = s.gains()?;
    let (lo, hi) = bler_box(eps_th);
    let problem = MmProblem {
        variables: (0..k)
            .map(|i| Variable::new(format!("eps{i}"), VarKind::Bler, lo, hi))
            .collect(),
        links: s
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| LinkTemplate {
                m: l.m,
                n: Binding::Fixed(l.n.expect("validated")),
                eps: Binding::Var(i),
            })
            .collect(),
        objective: Affine {
            var_coeffs: vec![0.0; k],
            gamma_coeffs: s.links.iter().zip(&gains).map(|(l, h)| l.m / h).collect(),
            constant: 0.0,
        },
        constraints: vec![Affine {
            var_coeffs: vec![1.0; k],
            gamma_coeffs: vec![0.0; k],
            constant: -eps_th,
        }],
        initial: vec![eps_th / k as f64; k],
        initial_gamma_dots: None,
    };
    Ok(MmProblem {
        initial_gamma_dots: Some(problem.true_snrs(&problem.initial)?),
        ..problem
    })
}

/// Minimizes `Σ m_i γ_i / h_i` subject to `Σ ε_i ≤ ε_th` at fixed packet sizes.
pub fn solve_power_min(s: &Scenario, tol: &Tolerances) -> Result<AllocationResult> {
    let problem = power_min_problem(s)?;
    let pg = ProjectedGradient {
        tol: tol.pg_rel,
        max_iter: tol.pg_max_iter,
    };
    let st = mm_solve(&problem, &pg, tol.mm_rel, tol.mm_max_rounds)?;
    let n: Vec<f64> = s.links.iter().map(|l| l.n.expect("validated")).collect();
    let mut r = AllocationResult::assemble(s, "mm", &n, &st.variables)?;
    r.rounds = Some(st.round);
    r.history = st.history.iter().map(|h| h.objective).collect();
    r.monotone = st.is_monotone();
    Ok(r)
}

/// Packet-size box of the relay: the spectral-efficiency floor on every hop
/// up to [`MAX_RATE_FOR_EE`] bits per channel use.
pub(crate) fn ee_packet_box(s: &Scenario) -> Result<(f64, f64)> {
    let phi = s.thresholds.phi_th.expect("validated");
    let m_max = s.links.iter().fold(0.0, |a: f64, l| a.max(l.m));
    let lo = (phi * m_max).max(MIN_PACKET_BITS);
    let hi = MAX_RATE_FOR_EE * m_max;
    if lo > hi {
        return Err(Error::Infeasible(format!(
            "spectral-efficiency floor {phi} exceeds the searched range of {MAX_RATE_FOR_EE} bits per use"
        )));
    }
    Ok((lo, hi))
}

/// Feasible set, numerator and denominator of the energy-efficiency ratio.
/// Fails unless both hops' blocklengths are inside the convexity certificate.
pub fn ee_problem(s: &Scenario) -> Result<(MmProblem, Affine, Affine)> {
    expect_kind(s, ProblemKind::EeMax)?;
    let eps_th = s.eps_th();
    for l in &s.links {
        let c = ConvexityCertificate::for_blocklength(l.m, eps_th)?;
        if !c.jointly_convex {
            return Err(Error::ConvexityNotCertified {
                sqrt_m: l.m.sqrt(),
                bound: c.sqrt_m_bound,
            });
        }
    }
    let gains = s.gains()?;
    let (n_lo, n_hi) = ee_packet_box(s)?;
    let (e_lo, e_hi) = bler_box(eps_th);
    let template = MmProblem {
        variables: vec![
            Variable::new("n", VarKind::PacketSize, n_lo, n_hi),
            Variable::new("eps0", VarKind::Bler, e_lo, e_hi),
        ],
        links: vec![
            LinkTemplate {
                m: s.links[0].m,
                n: Binding::Var(0),
                eps: Binding::Var(1),
            },
            LinkTemplate {
                m: s.links[1].m,
                n: Binding::Var(0),
                eps: Binding::Complement {
                    total: eps_th,
                    var: 1,
                },
            },
        ],
        objective: Affine::zero(2, 2),
        constraints: vec![],
        initial: vec![n_lo, 0.5 * eps_th],
        initial_gamma_dots: None,
    };
    let numerator = Affine {
        var_coeffs: vec![1.0, 0.0],
        gamma_coeffs: vec![0.0, 0.0],
        constant: 0.0,
    };
    let denominator = Affine {
        var_coeffs: vec![0.0, 0.0],
        gamma_coeffs: s.links.iter().zip(&gains).map(|(l, h)| l.m / h).collect(),
        constant: 0.0,
    };
    Ok((template, numerator, denominator))
}

/// Maximizes `N / (m₁γ₁/h₁ + m₂γ₂/h₂)` over the packet size and the split of
/// `ε_th` between two hops, with `N/m ≥ φ_th`.
pub fn solve_ee_max(s: &Scenario, tol: &Tolerances) -> Result<AllocationResult> {
    let (template, numerator, denominator) = ee_problem(s)?;
    let eps_th = s.eps_th();
    let pg = ProjectedGradient {
        tol: tol.pg_rel,
        max_iter: tol.pg_max_iter,
    };
    let mm = MmOptions {
        tol: tol.mm_rel,
        max_rounds: tol.mm_max_rounds,
        ..MmOptions::default()
    };
    let d = dinkelbach_solve(
        &numerator,
        &denominator,
        &template,
        &pg,
        tol.dinkelbach_rel,
        tol.dinkelbach_max_iter,
        &mm,
    )?;
    let x = &d.inner.variables;
    let mut r = AllocationResult::assemble(s, "mm", &[x[0], x[0]], &[x[1], eps_th - x[1]])?;
    r.rounds = Some(d.inner.round);
    r.history = d.inner.history.iter().map(|h| h.objective).collect();
    r.monotone = d.is_monotone();
    r.lambdas = d.lambdas;
    Ok(r)
}

/// Rounds packet sizes to whole bits while keeping every constraint: down
/// for the weighted sum rate, and down unless that breaks the
/// spectral-efficiency floor for energy efficiency.
pub fn round_packet_sizes(s: &Scenario, r: &AllocationResult) -> Result<AllocationResult> {
    let n: Vec<f64> = r.links.iter().map(|l| l.n_bits).collect();
    let eps: Vec<f64> = r.links.iter().map(|l| l.bler).collect();
    let rounded: Vec<f64> = match s.kind {
        ProblemKind::Wsr => n.iter().map(|v| v.floor().max(MIN_PACKET_BITS)).collect(),
        ProblemKind::PowerMin => n,
        ProblemKind::EeMax => {
            let (lo, _) = ee_packet_box(s)?;
            let f = n[0].floor();
            let v = if f >= lo { f } else { n[0].ceil() };
            vec![v; n.len()]
        }
    };
    AllocationResult::assemble(s, "integer_rounding", &rounded, &eps)
}
