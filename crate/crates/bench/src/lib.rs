//! Fixtures shared by the benchmarks.

use spt_core::applications::{LinkSpec, ProblemKind, Scenario, Thresholds};
use spt_core::TransmissionParams;

/// `(N, m, ε)` points spanning short, medium and long blocks.
pub fn solver_points() -> Vec<(&'static str, TransmissionParams)> {
    [
        ("n320_m1000_e1e-5", 320.0, 1000.0, 1e-5),
        ("n50_m100_e1e-9", 50.0, 100.0, 1e-9),
        ("n2000_m4000_e1e-3", 2000.0, 4000.0, 1e-3),
    ]
    .into_iter()
    .map(|(name, n, m, e)| (name, TransmissionParams::new(n, m, e).expect("valid point")))
    .collect()
}

fn link(d_m: f64, n: Option<f64>) -> LinkSpec {
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

/// The two-link scenarios at 20 m and 80 m, one per problem kind.
pub fn scenarios() -> Vec<Scenario> {
    let thresholds = |p_max_w, phi_th| Thresholds {
        p_max_w,
        eps_th: Some(1e-5),
        phi_th,
    };
    vec![
        Scenario {
            kind: ProblemKind::Wsr,
            links: vec![link(20.0, None), link(80.0, None)],
            thresholds: thresholds(Some(2e-4), None),
            weights: Some(vec![1.0, 1.0]),
        },
        Scenario {
            kind: ProblemKind::PowerMin,
            links: vec![link(20.0, Some(320.0)), link(80.0, Some(320.0))],
            thresholds: thresholds(None, None),
            weights: None,
        },
        Scenario {
            kind: ProblemKind::EeMax,
            links: vec![link(20.0, None), link(80.0, None)],
            thresholds: thresholds(None, Some(0.3)),
            weights: None,
        },
    ]
}
