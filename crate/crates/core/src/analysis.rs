//! Convergence and convexity properties of the EAR function.
//!
//! * [`g1_factor`] is the closed-form quadratic convergence factor of the
//!   recursion at the root; [`measure_convergence_order`] estimates the same
//!   quantity from a solver trace.
//! * [`corollary_lhs`] is the sufficient condition for `g₁ ≤ 1`; it is
//!   strictly decreasing and changes sign near `γ = 0.25`.
//! * [`ear_grad`] and [`ear_hessian`] are the partial derivatives of the EAR
//!   function in the packet size `N` and the error rate `ε` at a fixed
//!   previous iterate `γ̇`.
//! * [`convexity_certificate`] checks the blocklength bound under which the
//!   EAR function is jointly convex in `(N, ε)`.

use serde::Serialize;
use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::scalar::{self, Snr, TransmissionParams};
use crate::solvers::{self, SolverTrace};

/// Shared subexpressions of the EAR function and its derivatives at `γ̇`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EarTerms {
    pub rho: f64,
    pub mu: f64,
    /// `1 − ρ b`, positive on the feasible region.
    pub den: f64,
    /// `N ln 2 / m`.
    pub c: f64,
    /// `K = exp((c + μ b) / (1 − ρ b))`, so the EAR value is `K − 1`.
    pub k: f64,
    /// `√(2π) e^{q²/2} / √m = −∂b/∂ε`.
    pub db_deps: f64,
    pub q: f64,
    pub m: f64,
}

impl EarTerms {
    /// Requires `γ̇ > 0` and `1 − ρ(γ̇) b > 0`; feasibility against `γ̄` is the
    /// caller's business.
    pub(crate) fn new(params: &TransmissionParams, gamma_dot: f64) -> Result<Self> {
        let g = Snr::new(gamma_dot)?;
        let rho = scalar::rho(g)?;
        let mu = scalar::mu(g)?;
        let den = 1.0 - rho * params.b;
        if !(den > 0.0) {
            return Err(Error::Domain(format!(
                "1 − ρ(γ̇)·b = {den} is not positive at γ̇ = {gamma_dot}"
            )));
        }
        let c = params.n_bits * LN_2 / params.m_symbols;
        let k = ((c + mu * params.b) / den).exp();
        let db_deps = (2.0 * PI).sqrt() * (0.5 * params.q * params.q).exp() / params.m_symbols.sqrt();
        Ok(EarTerms {
            rho,
            mu,
            den,
            c,
            k,
            db_deps,
            q: params.q,
            m: params.m_symbols,
        })
    }

    pub(crate) fn value(&self) -> f64 {
        self.k - 1.0
    }

    /// `μ + ρ N ln 2 / m`, the numerator of `∂(exponent)/∂b`.
    fn coupling(&self) -> f64 {
        self.mu + self.rho * self.c
    }

    pub(crate) fn gradient(&self) -> EarGradient {
        let l = LN_2 / self.m;
        EarGradient {
            d_n: self.k * l / self.den,
            d_eps: -self.k * self.coupling() / (self.den * self.den) * self.db_deps,
        }
    }

    pub(crate) fn hessian(&self) -> EarHessian {
        let l = LN_2 / self.m;
        let (k, den, s, cp) = (self.k, self.den, self.db_deps, self.coupling());
        let d_nn = k * (l / den).powi(2);
        let d_ee = k * self.q * self.m.sqrt() * s * s * cp / (den * den)
            + k * (cp / (den * den) * s).powi(2)
            + k * s * s * 2.0 * self.rho * cp / den.powi(3);
        let d_ne = -k * l * self.rho / (den * den) * s - k * cp / den.powi(3) * s * l;
        EarHessian { d_nn, d_ee, d_ne }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EarGradient {
    /// `∂Γ̃/∂N`, positive.
    pub d_n: f64,
    /// `∂Γ̃/∂ε`, negative.
    pub d_eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EarHessian {
    pub d_nn: f64,
    pub d_ee: f64,
    pub d_ne: f64,
}

impl EarHessian {
    pub fn determinant(&self) -> f64 {
        self.d_nn * self.d_ee - self.d_ne * self.d_ne
    }
}

/// First partial derivatives of the EAR function in `N` and `ε` at fixed `γ̇`.
pub fn ear_grad(params: &TransmissionParams, gamma_dot: Snr) -> Result<EarGradient> {
    solvers::check_feasible(params, gamma_dot.linear())?;
    Ok(EarTerms::new(params, gamma_dot.linear())?.gradient())
}

/// Second partial derivatives of the EAR function in `N` and `ε` at fixed `γ̇`.
pub fn ear_hessian(params: &TransmissionParams, gamma_dot: Snr) -> Result<EarHessian> {
    solvers::check_feasible(params, gamma_dot.linear())?;
    Ok(EarTerms::new(params, gamma_dot.linear())?.hessian())
}

fn positive(gamma: Snr) -> Result<f64> {
    let g = gamma.linear();
    if g > 0.0 && g.is_finite() {
        Ok(g)
    } else {
        Err(Error::Domain(format!("expected γ > 0, got {g}")))
    }
}

/// Quadratic convergence factor
/// `g₁ = (2γ² + 4γ + 1) b / (2 (1 + γ)² (γ² + 2γ)^{3/2} (1 − b / ((1 + γ) √(γ² + 2γ))))`.
///
/// Meaningful for `γ ≥ γ̄`; only the sign of the last factor is checked.
pub fn g1_factor(params: &TransmissionParams, gamma: Snr) -> Result<f64> {
    if params.b == 0.0 {
        return Ok(0.0);
    }
    let g = positive(gamma)?;
    let s2 = g * g + 2.0 * g;
    let s = s2.sqrt();
    let x = 1.0 + g;
    let slack = 1.0 - params.b / (x * s);
    if !(slack > 0.0) {
        return Err(Error::Domain(format!(
            "1 − ρ(γ)·b = {slack} is not positive at γ = {g}"
        )));
    }
    Ok((2.0 * g * g + 4.0 * g + 1.0) * params.b / (2.0 * x * x * s2 * s * slack))
}

/// Left-hand side of the sufficient condition for `g₁ ≤ 1`:
/// `(2γ² + 4γ + 1) / (2 (1 + γ)(γ² + 2γ)) + 1 − (γ² + 2γ) / ln(1 + γ)`.
pub fn corollary_lhs(gamma: Snr) -> Result<f64> {
    let g = positive(gamma)?;
    let s2 = g * g + 2.0 * g;
    Ok((2.0 * g * g + 4.0 * g + 1.0) / (2.0 * (1.0 + g) * s2) + 1.0 - s2 / g.ln_1p())
}

/// The `γ` at which [`corollary_lhs`] changes sign; the condition holds above it.
pub fn corollary_threshold() -> f64 {
    let f = |g: f64| corollary_lhs(Snr::new(g).expect("positive")).expect("positive");
    let (mut lo, mut hi) = (1e-3, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `g₃(γ) = ln(1 + γ) / ((γ² + 2γ)((γ² + 2γ) − ln(1 + γ)))`, strictly decreasing.
pub fn g3(gamma: Snr) -> Result<f64> {
    let g = positive(gamma)?;
    let s2 = g * g + 2.0 * g;
    let l = g.ln_1p();
    Ok(l / (s2 * (s2 - l)))
}

/// Root `γ*` of `q² = g₃(γ*)`. Infinite when `q = 0`.
pub fn gamma_star(q: f64) -> f64 {
    let target = q * q;
    if target <= 0.0 {
        return f64::INFINITY;
    }
    let f = |g: f64| g3(Snr::new(g).expect("positive")).expect("positive") - target;
    let (mut lo, mut hi) = (1e-6, 10.0);
    while f(lo) < 0.0 {
        lo *= 0.1;
    }
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Right-hand side of the blocklength bound,
/// `q √(γ*² + 2γ*) / ((1 + γ*) ln(1 + γ*))`.
pub fn sqrt_m_bound(q: f64, gamma_star: f64) -> f64 {
    if !gamma_star.is_finite() {
        return 0.0;
    }
    let g = gamma_star;
    q * (g * g + 2.0 * g).sqrt() / ((1.0 + g) * g.ln_1p())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityCertificate {
    pub q: f64,
    pub gamma_star: f64,
    pub sqrt_m_bound: f64,
    pub m_actual: f64,
    /// `√m_actual ≤ sqrt_m_bound`.
    pub jointly_convex: bool,
    /// `g₁` at the minimum SNR, when a packet size was supplied.
    pub g1_at_root: Option<f64>,
    /// Whether the minimum SNR satisfies the `g₁ ≤ 1` sufficient condition.
    pub corollary_region: Option<bool>,
    pub root_snr: Option<Snr>,
}

impl ConvexityCertificate {
    /// Certificate from `(m, ε)` alone; the root-dependent fields stay empty.
    pub fn for_blocklength(m_symbols: f64, bler: f64) -> Result<Self> {
        let p = TransmissionParams::new(1.0, m_symbols, bler)?;
        let gamma_star = gamma_star(p.q);
        let bound = sqrt_m_bound(p.q, gamma_star);
        Ok(ConvexityCertificate {
            q: p.q,
            gamma_star,
            sqrt_m_bound: bound,
            m_actual: m_symbols,
            jointly_convex: m_symbols.sqrt() <= bound,
            g1_at_root: None,
            corollary_region: None,
            root_snr: None,
        })
    }
}

/// Joint-convexity certificate for `params`, with `g₁` evaluated at the
/// minimum SNR of the given packet size.
pub fn convexity_certificate(params: &TransmissionParams) -> Result<ConvexityCertificate> {
    let mut cert = ConvexityCertificate::for_blocklength(params.m_symbols, params.bler)?;
    let root = solvers::reference_snr(params)?;
    cert.g1_at_root = Some(g1_factor(params, root)?);
    cert.corollary_region = Some(corollary_lhs(root)? <= 0.0);
    cert.root_snr = Some(root);
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceEstimate {
    /// Least-squares slope of `log e_{t+1}` against `log e_t`.
    pub order: f64,
    /// `e_{t+1} / e_t^p` at the integer order `p` nearest `order`.
    pub factor: f64,
    pub pairs: usize,
}

/// Usable errors lie in `[LOW, HIGH]·max(1, |γ_ref|)`.
const ERROR_WINDOW: (f64, f64) = (1e-12, 1e-1);

/// Estimates the convergence order and factor of a trace.
///
/// Consecutive error pairs with both errors inside the usable window enter a
/// least-squares fit of `log e_{t+1} = p log e_t + log Q`. The factor is then
/// re-estimated at the integer order nearest the slope, as the geometric mean
/// of `e_{t+1} / e_t^p` over the later half of the pairs, since it is defined
/// as a limit.
pub fn measure_convergence_order(
    trace: &SolverTrace,
    reference: Snr,
) -> Result<ConvergenceEstimate> {
    let scale = reference.linear().abs().max(1.0);
    let (lo, hi) = (ERROR_WINDOW.0 * scale, ERROR_WINDOW.1 * scale);
    let errors: Vec<f64> = trace
        .iterates
        .iter()
        .map(|it| (it.gamma - reference.linear()).abs())
        .collect();
    let usable = |e: f64| e >= lo && e <= hi;
    let pairs: Vec<(f64, f64)> = errors
        .windows(2)
        .filter(|w| usable(w[0]) && usable(w[1]))
        .map(|w| (w[0].ln(), w[1].ln()))
        .collect();
    if pairs.len() < 2 {
        return Err(Error::InsufficientData {
            usable: pairs.len(),
            required: 2,
        });
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData {
            usable: 1,
            required: 2,
        });
    }
    let order = sxy / sxx;
    let p = order.round().max(1.0);
    let tail = &pairs[pairs.len() / 2..];
    let log_factor = tail.iter().map(|(x, y)| y - p * x).sum::<f64>() / tail.len() as f64;
    Ok(ConvergenceEstimate {
        order,
        factor: log_factor.exp(),
        pairs: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{gamma_bar, gamma_hat};
    use crate::solvers::{solve_bisection, solve_ear, solve_fixed_point};

    fn params(n: f64, m: f64, eps: f64) -> TransmissionParams {
        TransmissionParams::new(n, m, eps).unwrap()
    }

    fn snr(x: f64) -> Snr {
        Snr::new(x).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn root(p: &TransmissionParams) -> Snr {
        solve_bisection(p, 1e-14).unwrap().final_snr
    }

    #[test]
    fn g1_vanishes_without_dispersion_penalty() {
        assert_eq!(g1_factor(&params(320.0, 1000.0, 0.5), snr(0.3)).unwrap(), 0.0);
    }

    #[test]
    fn g1_below_one_at_corollary_threshold() {
        let p = params(320.0, 1000.0, 1e-5);
        assert!(g1_factor(&p, snr(0.25)).unwrap() <= 1.0);
    }

    #[test]
    fn g1_matches_observed_ratio() {
        let p = params(320.0, 1000.0, 1e-5);
        let r = root(&p);
        let t = solve_ear(&p, 1e-12, 64).unwrap().with_reference(r);
        let errs: Vec<f64> = t.iterates.iter().map(|i| i.abs_error.unwrap()).collect();
        // Last pair with a resolvable successor error.
        let (e0, e1) = errs
            .windows(2)
            .filter(|w| w[1] > 1e-14)
            .map(|w| (w[0], w[1]))
            .next_back()
            .unwrap();
        let observed = e1 / (e0 * e0);
        let g1 = g1_factor(&p, r).unwrap();
        assert!(rel(observed, g1) < 0.2, "{observed} vs {g1}");
    }

    #[test]
    fn g1_rejects_nonpositive_slack() {
        let p = params(320.0, 30.0, 1e-9);
        assert!(matches!(g1_factor(&p, snr(1e-4)), Err(Error::Domain(_))));
        assert!(matches!(g1_factor(&p, snr(0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn corollary_lhs_sign_pattern() {
        assert!(corollary_lhs(snr(0.25)).unwrap().abs() < 0.02);
        assert!(corollary_lhs(snr(0.1)).unwrap() > 0.0);
        assert!(corollary_lhs(snr(1.0)).unwrap() < 0.0);
        assert!(corollary_lhs(snr(0.0)).is_err());
        let t = corollary_threshold();
        assert!((0.24..=0.26).contains(&t), "{t}");
    }

    #[test]
    fn derivative_signs() {
        let p = params(320.0, 1000.0, 1e-5);
        let g = gamma_hat(&p);
        let d = ear_grad(&p, g).unwrap();
        assert!(d.d_n > 0.0 && d.d_eps < 0.0);
        let h = ear_hessian(&p, g).unwrap();
        assert!(h.d_nn > 0.0 && h.d_ee > 0.0 && h.d_ne < 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let p = params(320.0, 1000.0, 1e-5);
        let g = gamma_hat(&p);
        let f = |n: f64, eps: f64| {
            solvers::ear_step(&params(n, 1000.0, eps), g).unwrap().linear()
        };
        let d = ear_grad(&p, g).unwrap();
        let hn = 1e-4 * 320.0;
        let fd_n = (f(320.0 + hn, 1e-5) - f(320.0 - hn, 1e-5)) / (2.0 * hn);
        assert!(rel(d.d_n, fd_n) < 1e-6, "{} vs {fd_n}", d.d_n);
        let he = 1e-4 * 1e-5;
        let fd_e = (f(320.0, 1e-5 + he) - f(320.0, 1e-5 - he)) / (2.0 * he);
        assert!(rel(d.d_eps, fd_e) < 1e-5, "{} vs {fd_e}", d.d_eps);
    }

    #[test]
    fn hessian_matches_second_differences() {
        let (n, m, eps) = (320.0, 1000.0, 1e-5);
        let p = params(n, m, eps);
        let g = gamma_hat(&p);
        let f = |n: f64, e: f64| solvers::ear_step(&params(n, m, e), g).unwrap().linear();
        let h = ear_hessian(&p, g).unwrap();
        let (hn, he) = (1e-3 * m, 2e-3 * eps);
        let f0 = f(n, eps);
        let nn = (f(n + hn, eps) - 2.0 * f0 + f(n - hn, eps)) / (hn * hn);
        let ee = (f(n, eps + he) - 2.0 * f0 + f(n, eps - he)) / (he * he);
        let ne = (f(n + hn, eps + he) - f(n + hn, eps - he) - f(n - hn, eps + he)
            + f(n - hn, eps - he))
            / (4.0 * hn * he);
        assert!(rel(h.d_nn, nn) < 1e-4, "{} vs {nn}", h.d_nn);
        assert!(rel(h.d_ee, ee) < 1e-4, "{} vs {ee}", h.d_ee);
        assert!(rel(h.d_ne, ne) < 1e-4, "{} vs {ne}", h.d_ne);
    }

    #[test]
    fn derivatives_reject_infeasible_points() {
        let p = params(320.0, 1000.0, 1e-5);
        let below = snr(0.5 * gamma_bar(&p).linear());
        assert!(matches!(ear_grad(&p, below), Err(Error::Feasibility { .. })));
        assert!(matches!(ear_hessian(&p, below), Err(Error::Feasibility { .. })));
    }

    #[test]
    fn g3_properties() {
        assert!(g3(snr(0.02)).unwrap() > g3(snr(0.03)).unwrap());
        // The rounded pair (q ≈ 4.26, γ* ≈ 0.025) is consistent to a few percent.
        assert!(rel(g3(snr(0.025)).unwrap(), 4.26f64.powi(2)) < 0.05);
        assert!(g3(snr(1e6)).unwrap() < 1e-20);
        assert!(g3(snr(0.0)).is_err());
    }

    #[test]
    fn certificate_at_typical_bler() {
        let c = ConvexityCertificate::for_blocklength(1000.0, 1e-5).unwrap();
        assert!((c.gamma_star - 0.025).abs() <= 0.002, "{}", c.gamma_star);
        // Frozen from an independent 40-digit solve of q² = g₃(γ*).
        assert!((c.sqrt_m_bound - 37.31337169900).abs() < 1e-6, "{}", c.sqrt_m_bound);
        assert!(rel(g3(snr(c.gamma_star)).unwrap(), c.q * c.q) <= 1e-10);
        let d = 1e-6;
        assert!(g3(snr(c.gamma_star - d)).unwrap() > c.q * c.q);
        assert!(g3(snr(c.gamma_star + d)).unwrap() < c.q * c.q);
        assert!(c.jointly_convex);
        // Plugging in the rounded pair reproduces the commonly quoted 37.8705.
        assert!((sqrt_m_bound(4.26, 0.025) - 37.8705).abs() < 1e-3);
    }

    #[test]
    fn certificate_relaxes_for_stricter_bler() {
        let a = ConvexityCertificate::for_blocklength(1000.0, 1e-5).unwrap();
        let b = ConvexityCertificate::for_blocklength(1000.0, 1e-9).unwrap();
        assert!(b.sqrt_m_bound > a.sqrt_m_bound);
        assert!(b.sqrt_m_bound > 37.8705);
    }

    #[test]
    fn certificate_blocklength_threshold() {
        let bound = ConvexityCertificate::for_blocklength(1000.0, 1e-5).unwrap().sqrt_m_bound;
        for m in [1000.0, 1392.0, 1393.0, 1400.0, 1434.0, 2000.0] {
            let c = ConvexityCertificate::for_blocklength(m, 1e-5).unwrap();
            assert_eq!(c.jointly_convex, f64::sqrt(m) <= bound, "m = {m}");
        }
        assert!(ConvexityCertificate::for_blocklength(1392.0, 1e-5).unwrap().jointly_convex);
        assert!(!ConvexityCertificate::for_blocklength(1393.0, 1e-5).unwrap().jointly_convex);
        assert!(!ConvexityCertificate::for_blocklength(2000.0, 1e-5).unwrap().jointly_convex);
    }

    #[test]
    fn certificate_with_packet_size() {
        let c = convexity_certificate(&params(320.0, 1000.0, 1e-5)).unwrap();
        let g1 = c.g1_at_root.unwrap();
        assert!(g1 > 0.0 && g1 < 1.0);
        assert_eq!(c.corollary_region, Some(true));
        let half = ConvexityCertificate::for_blocklength(100.0, 0.5).unwrap();
        assert!(half.gamma_star.is_infinite());
        assert!(!half.jointly_convex);
    }

    #[test]
    fn convergence_orders() {
        let p = params(320.0, 1000.0, 1e-5);
        let r = root(&p);
        let ear = solve_ear(&p, 1e-12, 64).unwrap();
        let est = measure_convergence_order(&ear, r).unwrap();
        assert!((1.7..=2.3).contains(&est.order), "{est:?}");

        let fp = solve_fixed_point(&p, 1e-14, 200).unwrap();
        let est = measure_convergence_order(&fp, r).unwrap();
        assert!((0.8..=1.2).contains(&est.order), "{est:?}");

        let bis = solve_bisection(&p, 1e-14).unwrap();
        let est = measure_convergence_order(&bis, r).unwrap();
        assert!((0.8..=1.2).contains(&est.order), "{est:?}");
        assert!((est.factor - 0.5).abs() < 0.15, "{est:?}");
    }

    #[test]
    fn convergence_order_needs_data() {
        let p = params(256.0, 128.0, 0.5);
        let t = solve_ear(&p, 1e-12, 64).unwrap();
        assert!(matches!(
            measure_convergence_order(&t, t.final_snr),
            Err(Error::InsufficientData { .. })
        ));
    }
}
