//! Scalar building blocks of the finite-blocklength normal approximation.
//!
//! The achievable rate at SNR `γ`, blocklength `m` and block error rate `ε` is
//!
//! ```text
//! R(γ) = log2(1 + γ) − sqrt(V(γ) / m) · Q⁻¹(ε) / ln 2,    V(γ) = 1 − 1/(1 + γ)²
//! ```
//!
//! and the minimum SNR `Γ(N, m, ε)` is the unique `γ` with `R(γ) = N / m`.
//! Everything here is a pure function of its arguments.

use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI, SQRT_2};

use crate::config::Tolerances;
use crate::error::{Error, Result};

/// Blocklengths at or below this value are outside the accuracy range of the
/// normal approximation. They are accepted but flagged.
pub const MIN_ACCURATE_BLOCKLENGTH: f64 = 20.0;

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_func(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

// Rational approximation of the normal quantile (P. J. Acklam), relative
// error about 1.15e-9 before refinement.
const ACKLAM_A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383_577_518_672_69e2,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const ACKLAM_B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const ACKLAM_C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const ACKLAM_D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const ACKLAM_P_LOW: f64 = 0.02425;

/// Lower-tail quantile `Φ⁻¹(p)` for `0 < p ≤ 0.5`.
fn acklam_lower(p: f64) -> f64 {
    if p < ACKLAM_P_LOW {
        let t = (-2.0 * p.ln()).sqrt();
        let c = &ACKLAM_C;
        let d = &ACKLAM_D;
        (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5])
            / ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0)
    } else {
        let t = p - 0.5;
        let r = t * t;
        let a = &ACKLAM_A;
        let b = &ACKLAM_B;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * t
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    }
}

/// Inverse Gaussian tail probability: the `x` with `Q(x) = eps`.
///
/// A rational initial guess is polished by Newton steps on `Q(x) − eps`.
pub fn q_inv(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!(
            "Q⁻¹ needs a probability in (0, 1), got {eps}"
        )));
    }
    if eps == 0.5 {
        return Ok(0.0);
    }
    // Work in the tail below one half and mirror.
    let (tail, sign) = if eps < 0.5 { (eps, 1.0) } else { (1.0 - eps, -1.0) };
    let mut x = -acklam_lower(tail);
    for _ in 0..Tolerances::default().q_inv_newton_steps {
        let density = normal_pdf(x);
        if density == 0.0 {
            break;
        }
        x += (q_func(x) - tail) / density;
    }
    Ok(sign * x)
}

/// A signal-to-noise power ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(into = "SnrRepr", try_from = "SnrRepr")]
pub struct Snr(f64);

#[derive(Serialize, Deserialize)]
struct SnrRepr {
    linear: f64,
    db: f64,
}

impl From<Snr> for SnrRepr {
    fn from(s: Snr) -> Self {
        SnrRepr {
            linear: s.linear(),
            db: s.db(),
        }
    }
}

impl TryFrom<SnrRepr> for Snr {
    type Error = Error;
    fn try_from(r: SnrRepr) -> Result<Self> {
        Snr::new(r.linear)
    }
}

impl Snr {
    pub fn new(linear: f64) -> Result<Self> {
        if linear.is_nan() || linear < 0.0 {
            return Err(Error::Domain(format!("SNR must be nonnegative, got {linear}")));
        }
        Ok(Snr(linear))
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Snr::new(10f64.powf(db / 10.0))
    }

    pub fn linear(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }
}

/// The triple `(N, m, ε)` with the derived coefficients `q = Q⁻¹(ε)` and
/// `b = q / √m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransmissionParams {
    pub n_bits: f64,
    pub m_symbols: f64,
    pub bler: f64,
    pub q: f64,
    pub b: f64,
    /// Set when the blocklength is at or below [`MIN_ACCURATE_BLOCKLENGTH`].
    pub short_blocklength: bool,
}

impl TransmissionParams {
    /// Validates and caches `q` and `b`.
    ///
    /// `bler` must lie in `(0, 0.5]`. At exactly one half `q = b = 0` and the
    /// rate collapses to the Shannon term.
    pub fn new(n_bits: f64, m_symbols: f64, bler: f64) -> Result<Self> {
        if !(n_bits > 0.0 && n_bits.is_finite()) {
            return Err(Error::Domain(format!("packet size must be positive, got {n_bits}")));
        }
        if !(m_symbols > 0.0 && m_symbols.is_finite()) {
            return Err(Error::Domain(format!("blocklength must be positive, got {m_symbols}")));
        }
        if !(bler > 0.0 && bler <= 0.5) {
            return Err(Error::Domain(format!(
                "block error rate must lie in (0, 0.5], got {bler}"
            )));
        }
        let q = q_inv(bler)?;
        Ok(TransmissionParams {
            n_bits,
            m_symbols,
            bler,
            q,
            b: q / m_symbols.sqrt(),
            short_blocklength: m_symbols <= MIN_ACCURATE_BLOCKLENGTH,
        })
    }

    /// Same blocklength and error rate, different packet size.
    pub fn with_n(&self, n_bits: f64) -> Result<Self> {
        if !(n_bits > 0.0 && n_bits.is_finite()) {
            return Err(Error::Domain(format!("packet size must be positive, got {n_bits}")));
        }
        Ok(TransmissionParams { n_bits, ..*self })
    }

    /// Target spectral efficiency `N / m` in bits per channel use.
    pub fn rate(&self) -> f64 {
        self.n_bits / self.m_symbols
    }
}

/// Channel dispersion `V = 1 − 1/(1 + γ)²`.
pub fn dispersion(gamma: Snr) -> f64 {
    let x = 1.0 + gamma.linear();
    1.0 - 1.0 / (x * x)
}

/// Normal-approximation rate in bits per channel use. Negative at small SNR.
pub fn achievable_rate(params: &TransmissionParams, gamma: Snr) -> f64 {
    let g = gamma.linear();
    g.ln_1p() / LN_2 - (dispersion(gamma) / params.m_symbols).sqrt() * params.q / LN_2
}

/// Residual of the rate equation, `R(γ) − N/m`, in bits per channel use.
pub fn rate_residual(params: &TransmissionParams, gamma: Snr) -> f64 {
    achievable_rate(params, gamma) - params.rate()
}

fn positive(gamma: Snr, what: &str) -> Result<f64> {
    let g = gamma.linear();
    if g > 0.0 && g.is_finite() {
        Ok(g)
    } else {
        Err(Error::Domain(format!("{what} is singular at γ = {g}")))
    }
}

/// `ρ(γ) = 1 / ((1 + γ) √(γ² + 2γ))`.
pub fn rho(gamma_dot: Snr) -> Result<f64> {
    let g = positive(gamma_dot, "ρ")?;
    Ok(1.0 / ((1.0 + g) * (g * g + 2.0 * g).sqrt()))
}

/// `μ(γ) = √V(γ) − ln(1 + γ) · ρ(γ)`.
pub fn mu(gamma_dot: Snr) -> Result<f64> {
    let g = positive(gamma_dot, "μ")?;
    let s = (g * g + 2.0 * g).sqrt();
    // √V = s / (1 + γ)
    Ok(s / (1.0 + g) - g.ln_1p() / ((1.0 + g) * s))
}

/// Feasibility threshold `γ̄`: the positive root of
/// `ln(1 + γ) = b √(γ² + 2γ) / (1 + γ)`, i.e. the minimum SNR of an empty packet.
pub fn gamma_bar(params: &TransmissionParams) -> Snr {
    gamma_bar_for(params.b)
}

pub(crate) fn gamma_bar_for(b: f64) -> Snr {
    if b <= 0.0 {
        return Snr(0.0);
    }
    let f = |g: f64| g.ln_1p() - b * (g * g + 2.0 * g).sqrt() / (1.0 + g);
    // f < 0 just above zero, f > 0 for large γ.
    let mut hi = 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    let tol = Tolerances::default().gamma_bar_rel;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= tol * hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Snr(hi)
}

/// Closed-form starting point `γ̂ = exp(N ln 2 / m + b) − 1`, which lies above
/// both `Γ(N, m, ε)` and `γ̄`.
pub fn gamma_hat(params: &TransmissionParams) -> Snr {
    Snr((params.rate() * LN_2 + params.b).exp_m1())
}
