//! Allocation outcomes and their serialization.

use serde::Serialize;
use std::io::Write;

use super::scenario::{ProblemKind, Scenario};
use crate::error::Result;
use crate::scalar::{self, Snr, TransmissionParams};
use crate::solvers::{self, fmt_f64};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkAllocation {
    pub n_bits: f64,
    pub m_symbols: f64,
    pub bler: f64,
    pub gain: f64,
    pub snr: Snr,
    /// `m γ / h`, in the units of the power budget.
    pub power: f64,
    /// Rate-equation residual `R(γ) − N/m` at the reported SNR.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationResult {
    pub kind: ProblemKind,
    /// `mm`, `grid_oracle` or `integer_rounding`.
    pub method: String,
    pub links: Vec<LinkAllocation>,
    pub objective: f64,
    pub objective_unit: &'static str,
    pub total_power: f64,
    /// `1 − Π(1 − ε_i)`, the exact end-to-end error rate.
    pub end_to_end_bler: f64,
    /// MM rounds of the final solve.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    /// Surrogate objective per MM round, in minimization form.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
    /// Whether the MM surrogate objective (and the Dinkelbach ratio) moved
    /// monotonically; always true for non-iterative methods.
    pub monotone: bool,
    /// Dinkelbach ratio sequence.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lambdas: Vec<f64>,
    /// Relative shortfall against a grid oracle; positive when the oracle is better.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_gap: Option<f64>,
}

pub(crate) fn objective_unit(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::Wsr => "bits",
        ProblemKind::PowerMin => "watts",
        ProblemKind::EeMax => "bits_per_watt",
    }
}

impl AllocationResult {
    /// Evaluates an allocation with exact minimum SNRs.
    pub fn assemble(scenario: &Scenario, method: &str, n: &[f64], eps: &[f64]) -> Result<Self> {
        let gains = scenario.gains()?;
        let mut links = Vec::with_capacity(n.len());
        for (((spec, &h), &n), &e) in scenario.links.iter().zip(&gains).zip(n).zip(eps) {
            let p = TransmissionParams::new(n, spec.m, e)?;
            let snr = solvers::reference_snr(&p)?;
            links.push(LinkAllocation {
                n_bits: n,
                m_symbols: spec.m,
                bler: e,
                gain: h,
                snr,
                power: spec.m * snr.linear() / h,
                residual: scalar::rate_residual(&p, snr),
            });
        }
        let total_power: f64 = links.iter().map(|l| l.power).sum();
        let objective = match scenario.kind {
            ProblemKind::Wsr => scenario
                .weights_or_unit()
                .iter()
                .zip(&links)
                .map(|(a, l)| a * l.n_bits)
                .sum(),
            ProblemKind::PowerMin => total_power,
            ProblemKind::EeMax => links[0].n_bits / total_power,
        };
        let end_to_end_bler = 1.0 - links.iter().map(|l| 1.0 - l.bler).product::<f64>();
        Ok(AllocationResult {
            kind: scenario.kind,
            method: method.to_string(),
            links,
            objective,
            objective_unit: objective_unit(scenario.kind),
            total_power,
            end_to_end_bler,
            rounds: None,
            history: Vec::new(),
            monotone: true,
            lambdas: Vec::new(),
            oracle_gap: None,
        })
    }

    /// Relative amount by which `oracle` beats `self`.
    pub fn gap_to(&self, oracle: &AllocationResult) -> f64 {
        let (a, b) = (self.objective, oracle.objective);
        if self.kind.maximizes() {
            (b - a) / b.abs()
        } else {
            (a - b) / b.abs()
        }
    }

    pub fn with_oracle_gap(mut self, oracle: &AllocationResult) -> Self {
        self.oracle_gap = Some(self.gap_to(oracle));
        self
    }

    pub fn max_residual(&self) -> f64 {
        self.links.iter().fold(0.0, |m, l| m.max(l.residual.abs()))
    }

    /// One row per link; the objective and oracle gap repeat on every row.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_results_csv(std::slice::from_ref(self), out)
    }
}

/// Rows of several results under a single header.
pub fn write_results_csv<W: Write>(results: &[AllocationResult], out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record([
        "method",
        "link",
        "n_bits",
        "m",
        "bler",
        "gain",
        "snr_linear",
        "snr_db",
        "power",
        "objective",
        "oracle_gap",
    ])?;
    for r in results {
        for (i, l) in r.links.iter().enumerate() {
            w.write_record([
                r.method.clone(),
                i.to_string(),
                fmt_f64(l.n_bits),
                fmt_f64(l.m_symbols),
                fmt_f64(l.bler),
                fmt_f64(l.gain),
                fmt_f64(l.snr.linear()),
                fmt_f64(l.snr.db()),
                fmt_f64(l.power),
                fmt_f64(r.objective),
                r.oracle_gap.map(fmt_f64).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()
}
