//! SNR determination: find `Γ(N, m, ε)`, the `γ` solving `R(γ) = N/m`.
//!
//! Four methods are provided, each returning a [`SolverTrace`] with flop
//! accounting:
//!
//! * the exponential approximation recursion (EAR), a quadratically
//!   convergent monotone descent from [`scalar::gamma_hat`];
//! * bisection on `[γ̄, γ̂]`;
//! * the fixed-point rearrangement `γ ← exp(N ln 2 / m + b √V(γ)) − 1`;
//! * a reference that bisects down to adjacent doubles.

use serde::Serialize;
use std::fmt;
use std::io::Write;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::flops::{Arith, Exact, FlopLedger};
use crate::scalar::{self, gamma_bar, Snr, TransmissionParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ear,
    Bisection,
    FixedPoint,
    Reference,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ear => "ear",
            Method::Bisection => "bisection",
            Method::FixedPoint => "fixed_point",
            Method::Reference => "reference",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ear" => Ok(Method::Ear),
            "bisection" => Ok(Method::Bisection),
            "fixed_point" | "fixed-point" => Ok(Method::FixedPoint),
            "reference" => Ok(Method::Reference),
            other => Err(Error::Domain(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Iterate {
    pub iter: usize,
    pub gamma: f64,
    /// `|γ − γ_ref|`, filled by [`SolverTrace::attach_reference`].
    pub abs_error: Option<f64>,
    /// Cumulative flops up to and including this iterate.
    pub flops: u64,
    /// `R(γ) − N/m` in bits per channel use.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverTrace {
    pub method: Method,
    pub iterates: Vec<Iterate>,
    pub converged: bool,
    #[serde(rename = "final")]
    pub final_snr: Snr,
    pub total_flops: u64,
}

impl SolverTrace {
    fn new(method: Method) -> Self {
        SolverTrace {
            method,
            iterates: Vec::new(),
            converged: false,
            final_snr: Snr::new(0.0).expect("zero is a valid SNR"),
            total_flops: 0,
        }
    }

    fn push(&mut self, params: &TransmissionParams, gamma: f64, flops: u64) {
        let iter = self.iterates.len();
        let residual = Snr::new(gamma)
            .map(|g| scalar::rate_residual(params, g))
            .unwrap_or(f64::NAN);
        self.iterates.push(Iterate {
            iter,
            gamma,
            abs_error: None,
            flops,
            residual,
        });
    }

    /// Number of iterations after the initial point.
    pub fn iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    pub fn attach_reference(&mut self, reference: Snr) {
        for it in &mut self.iterates {
            it.abs_error = Some((it.gamma - reference.linear()).abs());
        }
    }

    pub fn with_reference(mut self, reference: Snr) -> Self {
        self.attach_reference(reference);
        self
    }

    /// First iterate whose error is at or below `threshold`. Needs a reference.
    pub fn first_reaching(&self, threshold: f64) -> Option<&Iterate> {
        self.iterates
            .iter()
            .find(|it| it.abs_error.is_some_and(|e| e <= threshold))
    }

    /// Residual of the rate equation at the final estimate.
    pub fn final_residual(&self) -> f64 {
        self.iterates.last().map_or(f64::NAN, |it| it.residual)
    }
}

/// Writes traces as CSV with columns `method,iter,gamma,abs_error,flops`.
/// Missing errors are left empty.
pub fn write_traces_csv<W: Write>(traces: &[SolverTrace], out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["method", "iter", "gamma", "abs_error", "flops"])?;
    for t in traces {
        for it in &t.iterates {
            w.write_record([
                t.method.name().to_string(),
                it.iter.to_string(),
                fmt_f64(it.gamma),
                it.abs_error.map(fmt_f64).unwrap_or_default(),
                it.flops.to_string(),
            ])?;
        }
    }
    w.flush()
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Loop invariants of every solver: `c = N ln 2 / m` and `b = Q⁻¹(ε) / √m`.
fn coefficients<A: Arith>(o: &mut A, params: &TransmissionParams) -> (f64, f64) {
    let c = o.memo("n_ln2_over_m", |o| {
        let ln2 = o.ln(2.0);
        let t = o.mul(params.n_bits, ln2);
        o.div(t, params.m_symbols)
    });
    let b = o.memo("b", |o| {
        let q = o.memo("q", |o| o.q_inv(params.bler));
        let root_m = o.memo("sqrt_m", |o| o.sqrt(params.m_symbols));
        o.div(q, root_m)
    });
    (c, b)
}

fn initial_point<A: Arith>(o: &mut A, c: f64, b: f64) -> f64 {
    o.memo("gamma_hat", |o| {
        let t = o.add(c, b);
        let e = o.exp(t);
        o.sub(e, 1.0)
    })
}

/// One application of the EAR function with precomputed `c` and `b`.
fn ear_kernel<A: Arith>(o: &mut A, c: f64, b: f64, g: f64) -> f64 {
    if b == 0.0 {
        // Shannon inversion: ρ and μ drop out.
        let e = o.exp(c);
        return o.sub(e, 1.0);
    }
    let g2 = o.mul(g, g);
    let two_g = o.mul(2.0, g);
    let s2 = o.add(g2, two_g);
    let s = o.sqrt(s2);
    let x = o.add(1.0, g);
    let xs = o.mul(x, s);
    let rho = o.div(1.0, xs);

    let x2 = o.mul(x, x);
    let inv = o.div(1.0, x2);
    let v = o.sub(1.0, inv);
    let root_v = o.sqrt(v);
    let log_x = o.ln(x);
    let lr = o.mul(log_x, rho);
    let mu = o.sub(root_v, lr);

    let mub = o.mul(mu, b);
    let num = o.add(c, mub);
    let rb = o.mul(rho, b);
    let den = o.sub(1.0, rb);
    let ratio = o.div(num, den);
    let k = o.exp(ratio);
    o.sub(k, 1.0)
}

/// Returns whether `gamma` is infeasible for the recursion, allowing for the
/// bisection accuracy of `γ̄`.
pub(crate) fn check_feasible(params: &TransmissionParams, gamma: f64) -> Result<()> {
    let threshold = gamma_bar(params).linear();
    if gamma.is_nan() || gamma < threshold * (1.0 - 1e-12) || (params.b > 0.0 && gamma <= 0.0) {
        return Err(Error::Feasibility { gamma, threshold });
    }
    Ok(())
}

/// The EAR function `exp((N ln 2 / m + μ(γ̇) b) / (1 − ρ(γ̇) b)) − 1`.
///
/// Fails with [`Error::Feasibility`] when `gamma_prev < γ̄`.
pub fn ear_step(params: &TransmissionParams, gamma_prev: Snr) -> Result<Snr> {
    check_feasible(params, gamma_prev.linear())?;
    Snr::new(ear_value(params, gamma_prev.linear()))
}

/// The EAR function without the feasibility check.
pub(crate) fn ear_value(params: &TransmissionParams, gamma_prev: f64) -> f64 {
    let mut o = Exact;
    let c = params.n_bits * std::f64::consts::LN_2 / params.m_symbols;
    let b = params.b;
    ear_kernel(&mut o, c, b, gamma_prev)
}

/// Absolute rounding level of `exp(x) − 1 = γ`: one ulp of `x = ln(1 + γ)`
/// becomes a relative error of about `x·eps` in `1 + γ`.
pub(crate) fn rounding_scale(gamma: f64) -> f64 {
    f64::EPSILON * (1.0 + gamma) * gamma.ln_1p().max(1.0)
}

/// Iterates the EAR function from `γ̂` until the relative change drops to `tol`.
pub fn solve_ear(params: &TransmissionParams, tol: f64, max_iter: usize) -> Result<SolverTrace> {
    check_tol(tol)?;
    let mut ledger = FlopLedger::new();
    let mut trace = SolverTrace::new(Method::Ear);
    let (c, b) = coefficients(&mut ledger, params);
    let mut gamma = initial_point(&mut ledger, c, b);
    trace.push(params, gamma, ledger.count());
    for _ in 0..max_iter {
        let mut next = ear_kernel(&mut ledger, c, b, gamma);
        // The exact sequence never increases; drop rounding-level upticks.
        if next > gamma && next - gamma <= 4.0 * rounding_scale(gamma) {
            next = gamma;
        }
        let change = (next - gamma).abs();
        gamma = next;
        trace.push(params, gamma, ledger.count());
        if change <= tol * gamma.abs() {
            trace.converged = true;
            break;
        }
    }
    finish(trace, gamma, ledger.count(), Method::Ear, max_iter)
}

/// Fixed-point iteration `γ ← exp(N ln 2 / m + b √V(γ)) − 1` from `γ̂`.
pub fn solve_fixed_point(
    params: &TransmissionParams,
    tol: f64,
    max_iter: usize,
) -> Result<SolverTrace> {
    check_tol(tol)?;
    let mut o = FlopLedger::new();
    let mut trace = SolverTrace::new(Method::FixedPoint);
    let (c, b) = coefficients(&mut o, params);
    let mut gamma = initial_point(&mut o, c, b);
    trace.push(params, gamma, o.count());
    for _ in 0..max_iter {
        let x = o.add(1.0, gamma);
        let x2 = o.mul(x, x);
        let inv = o.div(1.0, x2);
        let v = o.sub(1.0, inv);
        let root_v = o.sqrt(v);
        let t = o.mul(b, root_v);
        let arg = o.add(c, t);
        let e = o.exp(arg);
        let next = o.sub(e, 1.0);
        let change = (next - gamma).abs();
        gamma = next;
        trace.push(params, gamma, o.count());
        if change <= tol * gamma.abs() {
            trace.converged = true;
            break;
        }
    }
    finish(trace, gamma, o.count(), Method::FixedPoint, max_iter)
}

/// Bisection on `[γ̄, γ̂]` until the bracket width is at most `tol·γ`.
///
/// `γ̄` depends only on `(m, ε)` and is taken as a precomputed bracket end;
/// its cost is not charged.
pub fn solve_bisection(params: &TransmissionParams, tol: f64) -> Result<SolverTrace> {
    check_tol(tol)?;
    bisect(params, tol, Tolerances::default().bisection_max_iter, Method::Bisection)
}

/// Bisection to floating-point resolution.
pub fn solve_reference(params: &TransmissionParams) -> Result<SolverTrace> {
    bisect(params, 0.0, 2048, Method::Reference)
}

/// `Γ(N, m, ε)` from [`solve_reference`].
pub fn reference_snr(params: &TransmissionParams) -> Result<Snr> {
    Ok(solve_reference(params)?.final_snr)
}

fn bisect(
    params: &TransmissionParams,
    tol: f64,
    max_iter: usize,
    method: Method,
) -> Result<SolverTrace> {
    let mut o = FlopLedger::new();
    let mut trace = SolverTrace::new(method);
    let (c, b) = coefficients(&mut o, params);
    let mut hi = initial_point(&mut o, c, b);
    let mut lo = gamma_bar(params).linear();

    // f(γ) = ln(1 + γ) − b √V(γ) − N ln 2 / m, increasing above γ̄.
    let above = |o: &mut FlopLedger, g: f64| -> bool {
        let x = o.add(1.0, g);
        let l = o.ln(x);
        let x2 = o.mul(x, x);
        let inv = o.div(1.0, x2);
        let v = o.sub(1.0, inv);
        let root_v = o.sqrt(v);
        let t = o.mul(b, root_v);
        let d = o.sub(l, t);
        o.sub(d, c) >= 0.0
    };
    // Uncharged guard. `γ̂ ≥ Γ` holds exactly, but at very high SNR the
    // margin `b(1 − √V)` falls below rounding, so widen by rounding-level
    // steps before giving up.
    let mut widened = 0;
    while !above(&mut FlopLedger::new(), hi) {
        if widened == 64 {
            return Err(Error::Bracket(format!(
                "R(γ̂ = {hi}) is below the target rate {}",
                params.rate()
            )));
        }
        hi += 4.0 * rounding_scale(hi);
        widened += 1;
    }
    if lo > hi {
        lo = 0.0;
    }

    let mid_of = |o: &mut FlopLedger, lo: f64, hi: f64| {
        let s = o.add(lo, hi);
        o.div(s, 2.0)
    };
    let mut mid = mid_of(&mut o, lo, hi);
    trace.push(params, mid, o.count());
    for _ in 0..max_iter {
        if above(&mut o, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        let next = mid_of(&mut o, lo, hi);
        let stalled = next <= lo || next >= hi;
        mid = next;
        trace.push(params, mid, o.count());
        if hi - lo <= tol * mid || stalled {
            trace.converged = true;
            break;
        }
    }
    finish(trace, mid, o.count(), method, max_iter)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("tolerance must be positive, got {tol}")))
    }
}

fn finish(
    mut trace: SolverTrace,
    gamma: f64,
    flops: u64,
    method: Method,
    max_iter: usize,
) -> Result<SolverTrace> {
    if !trace.converged {
        return Err(Error::NoConvergence {
            method: method.name().to_string(),
            iterations: max_iter,
        });
    }
    trace.final_snr = Snr::new(gamma)?;
    trace.total_flops = flops;
    Ok(trace)
}

/// Dispatches on `method` with the default iteration caps.
pub fn solve(params: &TransmissionParams, method: Method, tol: f64) -> Result<SolverTrace> {
    let t = Tolerances::default();
    match method {
        Method::Ear => solve_ear(params, tol, t.ear_max_iter),
        Method::Bisection => solve_bisection(params, tol),
        Method::FixedPoint => solve_fixed_point(params, tol, t.fixed_point_max_iter),
        Method::Reference => solve_reference(params),
    }
}
