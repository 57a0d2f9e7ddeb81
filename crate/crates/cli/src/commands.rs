use std::io::{self, Read, Write};

use rayon::prelude::*;
use serde::Serialize;
use spt_core::analysis::{convexity_certificate, ConvexityCertificate};
use spt_core::applications::{self, write_results_csv, AllocationResult, Scenario};
use spt_core::solvers::{self, fmt_f64, write_traces_csv, Method, SolverTrace};
use spt_core::{Snr, Tolerances, TransmissionParams};

use crate::output::{csv_writer, emit, Failure};
use crate::{AnalyzeArgs, AppArgs, CompareArgs, SolveArgs, SweepArgs};

pub use crate::output::EXIT_USAGE;

type Outcome = Result<(), Failure>;

#[derive(Debug, Serialize)]
struct SolvedPoint {
    method: Method,
    n_bits: f64,
    m_symbols: f64,
    bler: f64,
    snr_linear: f64,
    snr_db: f64,
    iterations: usize,
    flops: u64,
    residual: f64,
    converged: bool,
}

impl SolvedPoint {
    fn new(p: &TransmissionParams, t: &SolverTrace) -> Self {
        SolvedPoint {
            method: t.method,
            n_bits: p.n_bits,
            m_symbols: p.m_symbols,
            bler: p.bler,
            snr_linear: t.final_snr.linear(),
            snr_db: t.final_snr.db(),
            iterations: t.iterations(),
            flops: t.total_flops,
            residual: t.final_residual(),
            converged: t.converged,
        }
    }
}

fn write_points_csv(points: &[SolvedPoint], out: &mut dyn Write) -> io::Result<()> {
    let mut w = csv_writer(out);
    w.write_record([
        "method", "n_bits", "m", "bler", "snr_linear", "snr_db", "iterations", "flops",
        "residual", "converged",
    ])?;
    for p in points {
        w.write_record([
            p.method.name().to_string(),
            fmt_f64(p.n_bits),
            fmt_f64(p.m_symbols),
            fmt_f64(p.bler),
            fmt_f64(p.snr_linear),
            fmt_f64(p.snr_db),
            p.iterations.to_string(),
            p.flops.to_string(),
            fmt_f64(p.residual),
            p.converged.to_string(),
        ])?;
    }
    w.flush()
}

fn run_method(
    p: &TransmissionParams,
    method: Method,
    tol: f64,
    max_iter: Option<usize>,
) -> spt_core::Result<SolverTrace> {
    let caps = Tolerances::default();
    match method {
        Method::Ear => solvers::solve_ear(p, tol, max_iter.unwrap_or(caps.ear_max_iter)),
        Method::FixedPoint => {
            solvers::solve_fixed_point(p, tol, max_iter.unwrap_or(caps.fixed_point_max_iter))
        }
        other => solvers::solve(p, other, tol),
    }
}

pub fn solve(a: &SolveArgs) -> Outcome {
    let p = TransmissionParams::new(a.n, a.m, a.eps)?;
    let t = run_method(&p, a.method, a.tol, a.max_iter)?;
    let point = SolvedPoint::new(&p, &t);
    emit(&a.out, &point, |w| write_points_csv(std::slice::from_ref(&point), w))
}

#[derive(Debug, Serialize)]
struct Reach {
    method: Method,
    iterations: Option<usize>,
    flops: Option<u64>,
}

#[derive(Debug, Serialize)]
struct Comparison {
    n_bits: f64,
    m_symbols: f64,
    bler: f64,
    reference: Snr,
    target: f64,
    reach: Vec<Reach>,
    traces: Vec<SolverTrace>,
}

pub fn compare(a: &CompareArgs) -> Outcome {
    let p = TransmissionParams::new(a.n, a.m, a.eps)?;
    let reference = solvers::reference_snr(&p)?;
    let traces = a
        .methods
        .iter()
        .map(|&m| Ok(run_method(&p, m, a.tol, None)?.with_reference(reference)))
        .collect::<Result<Vec<_>, Failure>>()?;
    let reach = traces
        .iter()
        .map(|t| {
            let hit = t.first_reaching(a.target);
            Reach {
                method: t.method,
                iterations: hit.map(|i| i.iter),
                flops: hit.map(|i| i.flops),
            }
        })
        .collect();
    let c = Comparison {
        n_bits: p.n_bits,
        m_symbols: p.m_symbols,
        bler: p.bler,
        reference,
        target: a.target,
        reach,
        traces,
    };
    emit(&a.out, &c, |w| write_traces_csv(&c.traces, w))
}

#[derive(Debug, Serialize)]
struct Analysis {
    bler: f64,
    n_bits: Option<f64>,
    #[serde(flatten)]
    certificate: ConvexityCertificate,
    /// Largest whole blocklength inside the certified region.
    m_max: f64,
}

pub fn analyze(a: &AnalyzeArgs) -> Outcome {
    let certificate = match a.n {
        Some(n) => convexity_certificate(&TransmissionParams::new(n, a.m, a.eps)?)?,
        None => ConvexityCertificate::for_blocklength(a.m, a.eps)?,
    };
    let r = Analysis {
        bler: a.eps,
        n_bits: a.n,
        m_max: (certificate.sqrt_m_bound * certificate.sqrt_m_bound).floor(),
        certificate,
    };
    emit(&a.out, &r, |w| {
        let c = &r.certificate;
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        let mut w = csv_writer(w);
        w.write_record([
            "m", "bler", "n_bits", "q", "gamma_star", "sqrt_m_bound", "m_max", "jointly_convex",
            "g1_at_root", "corollary_region",
        ])?;
        w.write_record([
            fmt_f64(c.m_actual),
            fmt_f64(r.bler),
            opt(r.n_bits),
            fmt_f64(c.q),
            fmt_f64(c.gamma_star),
            fmt_f64(c.sqrt_m_bound),
            fmt_f64(r.m_max),
            c.jointly_convex.to_string(),
            opt(c.g1_at_root),
            c.corollary_region.map(|b| b.to_string()).unwrap_or_default(),
        ])?;
        w.flush()
    })
}

#[derive(Debug, Serialize)]
struct WithOracle {
    mm: AllocationResult,
    oracle: AllocationResult,
    oracle_gap: f64,
}

fn read_scenario(path: &str) -> Result<Scenario, Failure> {
    let mut text = String::new();
    let read = if path == "-" {
        io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| text = t)
    };
    read.map_err(|e| Failure::Input(format!("{path}: {e}")))?;
    Ok(Scenario::from_json(&text)?)
}

pub fn app(a: &AppArgs) -> Outcome {
    let s = read_scenario(&a.scenario)?;
    let mut tol = Tolerances::default();
    if let Some(t) = a.mm_tol {
        tol.mm_rel = t;
    }
    let mut r = applications::solve(&s, &tol)?;
    if a.integer {
        r = applications::round_packet_sizes(&s, &r)?;
    }
    if !a.oracle {
        return emit(&a.out, &r, |w| r.write_csv(w));
    }
    let o = applications::oracle(&s, a.grid_steps, &tol)?;
    let out = WithOracle {
        oracle_gap: r.gap_to(&o),
        mm: r.with_oracle_gap(&o),
        oracle: o,
    };
    emit(&a.out, &out, |w| write_results_csv(&[out.mm.clone(), out.oracle.clone()], w))
}

#[derive(Debug, Serialize)]
struct Sweep {
    method: Method,
    tol: f64,
    points: Vec<SolvedPoint>,
}

pub fn sweep(a: &SweepArgs) -> Outcome {
    let grid: Vec<(f64, f64, f64)> = a
        .n
        .iter()
        .flat_map(|&n| a.m.iter().flat_map(move |&m| a.eps.iter().map(move |&e| (n, m, e))))
        .collect();
    let results: Vec<spt_core::Result<SolvedPoint>> = grid
        .par_iter()
        .map(|&(n, m, e)| {
            let p = TransmissionParams::new(n, m, e)?;
            Ok(SolvedPoint::new(&p, &run_method(&p, a.method, a.tol, None)?))
        })
        .collect();
    let points = results.into_iter().collect::<spt_core::Result<Vec<_>>>()?;
    let s = Sweep {
        method: a.method,
        tol: a.tol,
        points,
    };
    emit(&a.out, &s, |w| write_points_csv(&s.points, w))
}
