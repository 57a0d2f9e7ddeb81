mod common;

use common::{oracle_snr, rel};
use spt_core::applications::{
    channel_gain, oracle, oracle_ee_max, oracle_power_min, oracle_wsr, round_packet_sizes, solve,
    solve_ee_max, solve_power_min, solve_wsr, AllocationResult, Scenario, MIN_PACKET_BITS,
};
use spt_core::{Error, Tolerances};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn assert_residuals(r: &AllocationResult) {
    assert!(r.max_residual() <= 1e-8, "{}: residual {}", r.method, r.max_residual());
}

#[test]
fn gain_matches_hand_computation() {
    // 32.4 + 23·log10(20) + 23·log10(6) dB over −174 dBm/Hz across 60 kHz.
    let pl = 32.4 + 23.0 * 20f64.log10() + 23.0 * 6f64.log10();
    let hand = 10f64.powf(-pl / 10.0) / (10f64.powf(-20.4) * 6e4);
    let h = channel_gain(20.0, 6.0, 60e3, -174.0).unwrap();
    assert!(rel(h, hand) <= 1e-12);
    assert!(rel(h, 3.9786e7) <= 1e-4, "{h}");
}

#[test]
fn wsr_matches_oracle_with_active_budget() {
    let s = common::wsr();
    let r = solve_wsr(&s, &tol()).unwrap();
    let o = oracle_wsr(&s, 400, &tol()).unwrap();
    assert!(r.gap_to(&o) <= 0.01, "gap {}", r.gap_to(&o));
    assert!(o.objective <= r.objective * (1.0 + 1e-9));
    assert!(r.monotone);
    let p_max = s.thresholds.p_max_w.unwrap();
    assert!(rel(r.total_power, p_max) <= 1e-6, "{}", r.total_power);
    assert_residuals(&r);
    assert_residuals(&o);
}

#[test]
fn wsr_zero_weight_starves_the_second_user() {
    let mut s = common::wsr();
    s.weights = Some(vec![1.0, 0.0]);
    let r = solve_wsr(&s, &tol()).unwrap();
    assert_eq!(r.links[1].n_bits, MIN_PACKET_BITS);
    assert!(r.links[0].n_bits > 1000.0);
}

#[test]
fn wsr_symmetric_users_split_evenly() {
    let mut s = common::wsr();
    s.links[1] = s.links[0].clone();
    let r = solve_wsr(&s, &tol()).unwrap();
    assert!(rel(r.links[0].n_bits, r.links[1].n_bits) <= 1e-6);
}

#[test]
fn wsr_is_invariant_to_joint_gain_and_budget_scaling() {
    let s = common::wsr();
    let mut scaled = s.clone();
    // 10 dB less noise multiplies every gain by ten.
    for l in &mut scaled.links {
        l.noise_dbm_hz -= 10.0;
    }
    scaled.thresholds.p_max_w = Some(s.thresholds.p_max_w.unwrap() / 10.0);
    let a = solve_wsr(&s, &tol()).unwrap();
    let b = solve_wsr(&scaled, &tol()).unwrap();
    for (x, y) in a.links.iter().zip(&b.links) {
        assert!(rel(y.n_bits, x.n_bits) <= 1e-8, "{} vs {}", x.n_bits, y.n_bits);
    }
}

#[test]
fn single_user_oracle_inverts_the_budget() {
    let mut s = common::wsr();
    s.links.truncate(1);
    s.weights = None;
    let o = oracle_wsr(&s, 100, &tol()).unwrap();
    // Bisection on N for m·Γ(N)/h = P_max.
    let (m, h, p) = (1000.0, s.links[0].gain().unwrap(), s.thresholds.p_max_w.unwrap());
    let (mut lo, mut hi) = (1.0, 20_000.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if m * oracle_snr(mid, m, 1e-5) / h > p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    assert!(rel(o.links[0].n_bits, lo) <= 1e-9, "{} vs {lo}", o.links[0].n_bits);
    let r = solve_wsr(&s, &tol()).unwrap();
    assert!(rel(r.links[0].n_bits, lo) <= 1e-8);
}

#[test]
fn power_min_matches_oracle_with_tight_reliability() {
    let s = common::power_min();
    let r = solve_power_min(&s, &tol()).unwrap();
    let o = oracle_power_min(&s, 400, &tol()).unwrap();
    assert!(r.gap_to(&o) <= 0.01, "gap {}", r.gap_to(&o));
    assert!(o.objective >= r.objective * (1.0 - 1e-9));
    assert!(r.monotone);
    let sum: f64 = r.links.iter().map(|l| l.bler).sum();
    assert!(rel(sum, 1e-5) <= 1e-8, "{sum}");
    // The exact product differs from the linearization at second order.
    assert!(r.end_to_end_bler <= 1e-5 && 1e-5 - r.end_to_end_bler <= 1e-9);
    // The weaker (farther) hop gets the larger share, as in the oracle.
    assert!(r.links[1].bler > r.links[0].bler);
    assert!(o.links[1].bler > o.links[0].bler);
    assert_residuals(&r);
}

#[test]
fn power_min_identical_hops_split_evenly() {
    let mut s = common::power_min();
    s.links[1] = s.links[0].clone();
    let r = solve_power_min(&s, &tol()).unwrap();
    for l in &r.links {
        assert!(rel(l.bler, 5e-6) <= 1e-6, "{}", l.bler);
    }
}

#[test]
fn ee_matches_oracle() {
    let s = common::ee_max();
    let r = solve_ee_max(&s, &tol()).unwrap();
    let o = oracle_ee_max(&s, 400, &tol()).unwrap();
    assert!(r.gap_to(&o) <= 0.01, "gap {}", r.gap_to(&o));
    assert!(o.objective <= r.objective * (1.0 + 1e-9));
    assert!(r.monotone);
    assert!(r.lambdas.windows(2).all(|w| w[1] >= w[0]));
    assert!(r.links[0].n_bits >= 0.3 * 1000.0);
    assert_residuals(&r);
}

#[test]
fn ee_floor_pins_the_packet_size() {
    let mut s = common::ee_max();
    s.thresholds.phi_th = Some(0.8);
    let r = solve_ee_max(&s, &tol()).unwrap();
    assert_eq!(r.links[0].n_bits, 800.0);
    // With N pinned only the split of ε_th remains: scan it directly.
    let (h1, h2) = (s.links[0].gain().unwrap(), s.links[1].gain().unwrap());
    let ee = |e1: f64| {
        800.0 / (1000.0 * oracle_snr(800.0, 1000.0, e1) / h1
            + 1000.0 * oracle_snr(800.0, 1000.0, 1e-5 - e1) / h2)
    };
    let best = (1..20_000)
        .map(|i| ee(1e-5 * i as f64 / 20_000.0))
        .fold(0.0, f64::max);
    assert!(r.objective >= best * (1.0 - 1e-9), "{} vs {best}", r.objective);
    assert!(r.objective <= best * (1.0 + 1e-5));
}

#[test]
fn ee_symmetric_hops_split_evenly() {
    let mut s = common::ee_max();
    s.links[1] = s.links[0].clone();
    let r = solve_ee_max(&s, &tol()).unwrap();
    assert!(rel(r.links[0].bler, 5e-6) <= 1e-6, "{}", r.links[0].bler);
}

#[test]
fn ee_refuses_uncertified_blocklengths_and_unreachable_floors() {
    let mut s = common::ee_max();
    for l in &mut s.links {
        l.m = 2000.0;
    }
    assert!(matches!(solve_ee_max(&s, &tol()), Err(Error::ConvexityNotCertified { .. })));
    let mut s = common::ee_max();
    s.thresholds.phi_th = Some(5.0);
    assert!(matches!(solve_ee_max(&s, &tol()), Err(Error::Infeasible(_))));
}

#[test]
fn wsr_rejects_budgets_below_one_bit() {
    let mut s = common::wsr();
    s.thresholds.p_max_w = Some(1e-8);
    assert!(matches!(solve_wsr(&s, &tol()), Err(Error::Infeasible(_))));
}

#[test]
fn oracle_needs_a_reasonable_grid() {
    assert!(matches!(oracle(&common::wsr(), 50, &tol()), Err(Error::Domain(_))));
}

#[test]
fn halving_the_grid_step_barely_moves_the_oracle() {
    for s in [common::wsr(), common::power_min(), common::ee_max()] {
        let a = oracle(&s, 400, &tol()).unwrap();
        let b = oracle(&s, 800, &tol()).unwrap();
        assert!(rel(b.objective, a.objective) < 1e-3, "{:?}", s.kind);
    }
}

#[test]
fn rounding_keeps_constraints() {
    let s = common::wsr();
    let r = solve_wsr(&s, &tol()).unwrap();
    let z = round_packet_sizes(&s, &r).unwrap();
    assert!(z.links.iter().all(|l| l.n_bits.fract() == 0.0));
    assert!(z.total_power <= s.thresholds.p_max_w.unwrap());
    let s = common::ee_max();
    let r = solve(&s, &tol()).unwrap();
    let z = round_packet_sizes(&s, &r).unwrap();
    assert!(z.links[0].n_bits >= 300.0 && z.links[0].n_bits.fract() == 0.0);
}

#[test]
fn results_are_deterministic() {
    for s in [common::wsr(), common::power_min(), common::ee_max()] {
        let a = solve(&s, &tol()).unwrap();
        let b = solve(&s, &tol()).unwrap();
        assert_eq!(a, b);
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(text, serde_json::to_string(&b).unwrap());
    }
}

#[test]
fn scenario_json_round_trips() {
    for s in [common::wsr(), common::power_min(), common::ee_max()] {
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }
}
