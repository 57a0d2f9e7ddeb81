#![allow(dead_code)]

use spt_core::applications::{LinkSpec, ProblemKind, Scenario, Thresholds};
use spt_core::{Snr, TransmissionParams};

pub const NEAR_M: f64 = 20.0;
pub const FAR_M: f64 = 80.0;

pub fn link(d_m: f64, n: Option<f64>) -> LinkSpec {
    LinkSpec {
        d_m,
        fc_ghz: 6.0,
        bw_hz: 60e3,
        noise_dbm_hz: -174.0,
        m: 1000.0,
        n,
        eps: None,
    }
}

/// Two users at 20 m and 80 m sharing 0.2 mW, unit weights, ε = 1e-5.
pub fn wsr() -> Scenario {
    Scenario {
        kind: ProblemKind::Wsr,
        links: vec![link(NEAR_M, None), link(FAR_M, None)],
        thresholds: Thresholds {
            p_max_w: Some(2e-4),
            eps_th: Some(1e-5),
            phi_th: None,
        },
        weights: Some(vec![1.0, 1.0]),
    }
}

/// Two hops of 320 bits with end-to-end ε_th = 1e-5.
pub fn power_min() -> Scenario {
    Scenario {
        kind: ProblemKind::PowerMin,
        links: vec![link(NEAR_M, Some(320.0)), link(FAR_M, Some(320.0))],
        thresholds: Thresholds {
            p_max_w: None,
            eps_th: Some(1e-5),
            phi_th: None,
        },
        weights: None,
    }
}

/// Two-hop energy efficiency with ε_th = 1e-5 and a 0.3 bit/use floor.
pub fn ee_max() -> Scenario {
    Scenario {
        kind: ProblemKind::EeMax,
        links: vec![link(NEAR_M, None), link(FAR_M, None)],
        thresholds: Thresholds {
            p_max_w: None,
            eps_th: Some(1e-5),
            phi_th: Some(0.3),
        },
        weights: None,
    }
}

pub fn params(n: f64, m: f64, eps: f64) -> TransmissionParams {
    TransmissionParams::new(n, m, eps).unwrap()
}

pub fn snr(x: f64) -> Snr {
    Snr::new(x).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// `Q⁻¹(eps)` by bisection on the complementary error function.
pub fn oracle_q_inv(eps: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 0.5 * libm::erfc(mid / std::f64::consts::SQRT_2) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimum SNR by bisection on the rate equation, sharing no code with the
/// library solvers. Below the root the rate is short of `N/m` everywhere,
/// so `[0, 2^k]` always brackets it.
pub fn oracle_snr(n: f64, m: f64, eps: f64) -> f64 {
    let q = oracle_q_inv(eps);
    let short = |g: f64| {
        let v = 1.0 - 1.0 / ((1.0 + g) * (1.0 + g));
        (1.0 + g).log2() - (v / m).sqrt() * q / std::f64::consts::LN_2 < n / m
    };
    let mut hi = 1.0;
    while short(hi) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if short(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

pub fn oracle_snr_of(p: &TransmissionParams) -> f64 {
    oracle_snr(p.n_bits, p.m_symbols, p.bler)
}
