//! Majorization-minimization with the EAR function as the SNR surrogate.
//!
//! A problem has continuous decision variables (packet sizes or error rates),
//! a set of links whose `N` and `ε` are either fixed or bound to variables,
//! and an objective and constraints that are affine in the variables and in
//! the per-link SNRs. Each round
//!
//! 1. moves every link's anchor `γ̇` by one EAR step at the current variables,
//! 2. minimizes the objective with each SNR replaced by the explicit EAR
//!    surrogate at the fixed anchors.
//!
//! Since the surrogate upper-bounds the implicit SNR and the SNR coefficients
//! are nonnegative, the surrogate objective never increases.

use serde::Serialize;
use std::io::Write;

use crate::analysis::EarTerms;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::scalar::{gamma_hat, TransmissionParams};
use crate::solvers::{self, fmt_f64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    PacketSize,
    Bler,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl Variable {
    pub fn new(name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> Self {
        Variable {
            name: name.into(),
            kind,
            lower,
            upper,
        }
    }
}

/// How a link parameter depends on the decision variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Fixed(f64),
    Var(usize),
    /// `total − x[var]`, as when one error rate absorbs what another leaves.
    Complement { total: f64, var: usize },
}

impl Binding {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Binding::Fixed(v) => v,
            Binding::Var(j) => x[j],
            Binding::Complement { total, var } => total - x[var],
        }
    }

    /// The variable this binding depends on and the sign of the dependence.
    fn dependence(&self) -> Option<(usize, f64)> {
        match *self {
            Binding::Fixed(_) => None,
            Binding::Var(j) => Some((j, 1.0)),
            Binding::Complement { var, .. } => Some((var, -1.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkTemplate {
    pub m: f64,
    pub n: Binding,
    pub eps: Binding,
}

impl LinkTemplate {
    pub fn params(&self, x: &[f64]) -> Result<TransmissionParams> {
        TransmissionParams::new(self.n.eval(x), self.m, self.eps.eval(x))
    }
}

/// `Σ var_coeffs[j]·x_j + Σ gamma_coeffs[i]·γ_i + constant`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Affine {
    pub var_coeffs: Vec<f64>,
    pub gamma_coeffs: Vec<f64>,
    pub constant: f64,
}

impl Affine {
    pub fn zero(n_vars: usize, n_links: usize) -> Self {
        Affine {
            var_coeffs: vec![0.0; n_vars],
            gamma_coeffs: vec![0.0; n_links],
            constant: 0.0,
        }
    }

    /// `Σ |terms|`, the magnitude against which rounding in [`Affine::eval`] is judged.
    pub fn magnitude(&self, x: &[f64], gammas: &[f64]) -> f64 {
        let vx: f64 = self.var_coeffs.iter().zip(x).map(|(c, v)| (c * v).abs()).sum();
        let vg: f64 = self.gamma_coeffs.iter().zip(gammas).map(|(c, g)| (c * g).abs()).sum();
        vx + vg + self.constant.abs()
    }

    pub fn eval(&self, x: &[f64], gammas: &[f64]) -> f64 {
        let vx: f64 = self.var_coeffs.iter().zip(x).map(|(c, v)| c * v).sum();
        let vg: f64 = self.gamma_coeffs.iter().zip(gammas).map(|(c, g)| c * g).sum();
        vx + vg + self.constant
    }

    fn has_gamma_terms(&self) -> bool {
        self.gamma_coeffs.iter().any(|&c| c != 0.0)
    }

    fn has_var_terms(&self) -> bool {
        self.var_coeffs.iter().any(|&c| c != 0.0)
    }
}

/// Minimize `objective` subject to every constraint `≤ 0` and the boxes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmProblem {
    pub variables: Vec<Variable>,
    pub links: Vec<LinkTemplate>,
    pub objective: Affine,
    pub constraints: Vec<Affine>,
    pub initial: Vec<f64>,
    /// Starting anchors. Defaults to `γ̂` of each link at `initial`.
    pub initial_gamma_dots: Option<Vec<f64>>,
}

impl MmProblem {
    pub fn validate(&self) -> Result<()> {
        let (nv, nl) = (self.variables.len(), self.links.len());
        let bad = |msg: String| Err(Error::Domain(msg));
        for v in &self.variables {
            if !(v.lower <= v.upper) || !v.lower.is_finite() || !v.upper.is_finite() {
                return bad(format!("variable `{}` has an empty box", v.name));
            }
        }
        for (i, l) in self.links.iter().enumerate() {
            for (b, kind) in [(l.n, VarKind::PacketSize), (l.eps, VarKind::Bler)] {
                if let Some((j, _)) = b.dependence() {
                    match self.variables.get(j) {
                        Some(v) if v.kind == kind => {}
                        Some(v) => return bad(format!("link {i} binds `{}` of the wrong kind", v.name)),
                        None => return bad(format!("link {i} binds missing variable {j}")),
                    }
                }
            }
        }
        for (k, f) in std::iter::once(&self.objective).chain(&self.constraints).enumerate() {
            if f.var_coeffs.len() != nv || f.gamma_coeffs.len() != nl {
                return bad(format!("affine function {k} has the wrong dimensions"));
            }
            if f.gamma_coeffs.iter().any(|&c| !(c >= 0.0)) {
                return bad(format!("affine function {k} has a negative SNR coefficient"));
            }
        }
        if self.initial.len() != nv {
            return bad("initial point has the wrong dimension".into());
        }
        if let Some(g) = &self.initial_gamma_dots {
            if g.len() != nl {
                return bad("initial anchors have the wrong dimension".into());
            }
        }
        Ok(())
    }

    fn link_params(&self, x: &[f64]) -> Result<Vec<TransmissionParams>> {
        self.links.iter().map(|l| l.params(x)).collect()
    }

    /// True minimum SNRs of every link at `x`.
    pub fn true_snrs(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.link_params(x)?
            .iter()
            .map(|p| solvers::reference_snr(p).map(|s| s.linear()))
            .collect()
    }
}

/// The convex subproblem of one round: the problem with SNRs replaced by
/// EAR surrogates at fixed anchors.
pub struct Subproblem<'a> {
    pub problem: &'a MmProblem,
    pub gamma_dots: &'a [f64],
}

impl Subproblem<'_> {
    fn terms(&self, x: &[f64]) -> Result<Vec<EarTerms>> {
        self.problem
            .links
            .iter()
            .zip(self.gamma_dots)
            .map(|(l, &g)| EarTerms::new(&l.params(x)?, g))
            .collect()
    }

    /// Surrogate SNR of every link at `x`.
    pub fn surrogate(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.terms(x)?.iter().map(EarTerms::value).collect())
    }

    /// Surrogate objective, `+∞` where the surrogate is undefined.
    pub fn objective(&self, x: &[f64]) -> f64 {
        match self.surrogate(x) {
            Ok(g) => self.problem.objective.eval(x, &g),
            Err(_) => f64::INFINITY,
        }
    }

    /// Gradient of the surrogate objective in the unscaled variables.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let f = &self.problem.objective;
        let mut grad = f.var_coeffs.clone();
        for ((link, t), &w) in self.problem.links.iter().zip(self.terms(x)?).zip(&f.gamma_coeffs) {
            if w == 0.0 {
                continue;
            }
            let d = t.gradient();
            if let Some((j, s)) = link.n.dependence() {
                grad[j] += w * s * d.d_n;
            }
            if let Some((j, s)) = link.eps.dependence() {
                grad[j] += w * s * d.d_eps;
            }
        }
        Ok(grad)
    }

    pub fn is_feasible(&self, x: &[f64], rel: f64) -> bool {
        let Ok(g) = self.surrogate(x) else {
            return false;
        };
        self.problem.constraints.iter().all(|c| {
            let scale = c.constant.abs().max(f64::MIN_POSITIVE);
            c.eval(x, &g) <= rel * scale
        })
    }
}

/// A method for the per-round subproblem.
pub trait SubproblemSolver: Sync {
    fn name(&self) -> &'static str;
    /// Minimizes the subproblem starting from the feasible point `start`.
    fn solve(&self, sub: &Subproblem<'_>, start: &[f64]) -> Result<Vec<f64>>;
}

/// Closed-form per-link packet sizes with bisection on the multiplier of a
/// single SNR-budget constraint.
///
/// Requires every variable to be a packet size driving at most one link with
/// a fixed error rate, and at most one constraint, which must not involve the
/// variables directly. With `γ̃(N) = exp(aN + c₀) − 1` the Lagrangian
/// stationarity condition of `cN + W γ̃(N)` gives `N = (ln(−c / (W a)) − c₀) / a`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DualBisection;

struct ExpLink {
    var: Option<usize>,
    a: f64,
    c0: f64,
    fixed_value: f64,
}

impl DualBisection {
    fn structure(sub: &Subproblem<'_>) -> Result<Vec<ExpLink>> {
        let p = sub.problem;
        let unsupported = |m: &str| Err(Error::Unsupported(format!("dual bisection: {m}")));
        if p.variables.iter().any(|v| v.kind != VarKind::PacketSize) {
            return unsupported("error-rate variables");
        }
        if p.constraints.len() > 1 {
            return unsupported("more than one constraint");
        }
        if p.constraints.iter().any(Affine::has_var_terms) {
            return unsupported("constraint depends on the variables directly");
        }
        let mut owner = vec![false; p.variables.len()];
        let mut out = Vec::with_capacity(p.links.len());
        for (link, &gd) in p.links.iter().zip(sub.gamma_dots) {
            if !matches!(link.eps, Binding::Fixed(_)) {
                return unsupported("free error rate");
            }
            let var = match link.n {
                Binding::Var(j) => {
                    if std::mem::replace(&mut owner[j], true) {
                        return unsupported("packet size shared by several links");
                    }
                    Some(j)
                }
                Binding::Fixed(_) => None,
                Binding::Complement { .. } => return unsupported("complement packet size"),
            };
            // The exponent is affine in N: (N ln2/m + μb)/(1 − ρb).
            let x0 = vec![1.0; p.variables.len()];
            let probe = TransmissionParams::new(
                if var.is_some() { 1.0 } else { link.n.eval(&x0) },
                link.m,
                link.eps.eval(&x0),
            )?;
            let t = EarTerms::new(&probe, gd)?;
            out.push(ExpLink {
                var,
                a: std::f64::consts::LN_2 / (link.m * t.den),
                c0: t.mu * probe.b / t.den,
                fixed_value: t.value(),
            });
        }
        Ok(out)
    }

    fn primal(p: &MmProblem, links: &[ExpLink], w: &[f64], nu: f64) -> Vec<f64> {
        let c = &p.objective.var_coeffs;
        let mut x: Vec<f64> = p
            .variables
            .iter()
            .zip(c)
            .map(|(v, &cj)| if cj < 0.0 { v.upper } else { v.lower })
            .collect();
        for (i, l) in links.iter().enumerate() {
            let Some(j) = l.var else { continue };
            let weight = p.objective.gamma_coeffs[i] + nu * w[i];
            let v = &p.variables[j];
            x[j] = if c[j] >= 0.0 {
                v.lower
            } else if weight <= 0.0 {
                v.upper
            } else {
                ((-c[j] / (weight * l.a)).ln() - l.c0) / l.a
            }
            .clamp(v.lower, v.upper);
        }
        x
    }

    fn surrogates(links: &[ExpLink], x: &[f64]) -> Vec<f64> {
        links
            .iter()
            .map(|l| match l.var {
                Some(j) => (l.a * x[j] + l.c0).exp() - 1.0,
                None => l.fixed_value,
            })
            .collect()
    }
}

impl SubproblemSolver for DualBisection {
    fn name(&self) -> &'static str {
        "dual_bisection"
    }

    fn solve(&self, sub: &Subproblem<'_>, _start: &[f64]) -> Result<Vec<f64>> {
        let p = sub.problem;
        let links = Self::structure(sub)?;
        let Some(con) = p.constraints.first() else {
            return Ok(Self::primal(p, &links, &vec![0.0; links.len()], 0.0));
        };
        let w = &con.gamma_coeffs;
        let g = |nu: f64| {
            let x = Self::primal(p, &links, w, nu);
            let s = Self::surrogates(&links, &x);
            (con.eval(&x, &s), x)
        };
        let (g0, x0) = g(0.0);
        if g0 <= 0.0 {
            return Ok(x0);
        }
        let mut hi = 1.0;
        let mut steps = 0;
        while g(hi).0 > 0.0 {
            hi *= 2.0;
            steps += 1;
            if steps > 2100 {
                return Err(Error::Infeasible(
                    "SNR budget cannot be met even at the lower packet-size bounds".into(),
                ));
            }
        }
        let mut lo = hi;
        while g(lo).0 <= 0.0 {
            lo *= 0.5;
            if lo < f64::MIN_POSITIVE {
                return Ok(g(hi).1);
            }
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid).0 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(g(hi).1)
    }
}

/// Projected gradient with Barzilai-Borwein steps and Armijo backtracking,
/// in variables scaled to `[0, 1]`.
///
/// The feasible set is the box intersected with at most one constraint that
/// does not involve the SNRs; projection onto it is a bisection on the
/// constraint's multiplier.
#[derive(Debug, Clone, Copy)]
pub struct ProjectedGradient {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ProjectedGradient {
    fn default() -> Self {
        let t = Tolerances::default();
        ProjectedGradient {
            tol: t.pg_rel,
            max_iter: t.pg_max_iter,
        }
    }
}

struct ScaledSet {
    lower: Vec<f64>,
    width: Vec<f64>,
    /// `a·z ≤ beta` in scaled variables.
    halfspace: Option<(Vec<f64>, f64)>,
}

impl ScaledSet {
    fn new(p: &MmProblem) -> Result<Self> {
        let lower: Vec<f64> = p.variables.iter().map(|v| v.lower).collect();
        let width: Vec<f64> = p.variables.iter().map(|v| v.upper - v.lower).collect();
        if p.constraints.iter().any(Affine::has_gamma_terms) {
            return Err(Error::Unsupported(
                "projected gradient: constraint involves SNRs".into(),
            ));
        }
        let halfspace = match p.constraints.as_slice() {
            [] => None,
            [c] => {
                let a: Vec<f64> = c.var_coeffs.iter().zip(&width).map(|(a, w)| a * w).collect();
                let shift: f64 = c.var_coeffs.iter().zip(&lower).map(|(a, l)| a * l).sum();
                Some((a, -c.constant - shift))
            }
            _ => {
                return Err(Error::Unsupported(
                    "projected gradient: more than one constraint".into(),
                ))
            }
        };
        Ok(ScaledSet {
            lower,
            width,
            halfspace,
        })
    }

    fn to_x(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.lower)
            .zip(&self.width)
            .map(|((z, l), w)| l + z * w)
            .collect()
    }

    fn to_z(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.lower)
            .zip(&self.width)
            .map(|((x, l), w)| if *w > 0.0 { (x - l) / w } else { 0.0 })
            .collect()
    }

    fn clip(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(&self.width)
            .map(|(v, w)| if *w > 0.0 { v.clamp(0.0, 1.0) } else { 0.0 })
            .collect()
    }

    fn project(&self, y: &[f64]) -> Vec<f64> {
        let z = self.clip(y);
        let Some((a, beta)) = &self.halfspace else {
            return z;
        };
        let dot = |z: &[f64]| z.iter().zip(a).map(|(z, a)| z * a).sum::<f64>();
        if dot(&z) <= *beta {
            return z;
        }
        let at = |tau: f64| {
            let shifted: Vec<f64> = y.iter().zip(a).map(|(y, a)| y - tau * a).collect();
            self.clip(&shifted)
        };
        let mut hi = 1.0;
        while dot(&at(hi)) > *beta {
            hi *= 2.0;
            if hi > 1e300 {
                break;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if dot(&at(mid)) > *beta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(hi)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

impl SubproblemSolver for ProjectedGradient {
    fn name(&self) -> &'static str {
        "projected_gradient"
    }

    fn solve(&self, sub: &Subproblem<'_>, start: &[f64]) -> Result<Vec<f64>> {
        let set = ScaledSet::new(sub.problem)?;
        let f = |z: &[f64]| sub.objective(&set.to_x(z));
        let grad = |z: &[f64]| -> Result<Vec<f64>> {
            let g = sub.gradient(&set.to_x(z))?;
            Ok(g.iter().zip(&set.width).map(|(g, w)| g * w).collect())
        };
        let mut z = set.project(&set.to_z(start));
        let mut fz = f(&z);
        if !fz.is_finite() {
            return Err(Error::InfeasibleStart(
                "surrogate undefined at the subproblem start".into(),
            ));
        }
        let mut g = grad(&z)?;
        let mut alpha = 1.0 / max_abs(&g).max(f64::MIN_POSITIVE);
        for _ in 0..self.max_iter {
            let trial: Vec<f64> = z.iter().zip(&g).map(|(z, g)| z - alpha * g).collect();
            let d: Vec<f64> = set.project(&trial).iter().zip(&z).map(|(p, z)| p - z).collect();
            if max_abs(&d) <= self.tol {
                break;
            }
            let slope = dot(&g, &d);
            let mut t = 1.0;
            let (z_new, f_new) = loop {
                let cand: Vec<f64> = z.iter().zip(&d).map(|(z, d)| z + t * d).collect();
                let fc = f(&cand);
                if fc <= fz + 1e-4 * t * slope {
                    break (cand, fc);
                }
                t *= 0.5;
                if t < 1e-20 {
                    return Ok(set.to_x(&z));
                }
            };
            let g_new = grad(&z_new)?;
            let s: Vec<f64> = z_new.iter().zip(&z).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            alpha = if sy > 0.0 { dot(&s, &s) / sy } else { 2.0 * alpha };
            alpha = alpha.clamp(1e-30, 1e30);
            let moved = max_abs(&s);
            z = z_new;
            fz = f_new;
            g = g_new;
            if moved <= self.tol {
                break;
            }
        }
        Ok(set.to_x(&z))
    }
}

/// How the anchors move between rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorUpdate {
    /// One EAR step per round.
    #[default]
    SingleStep,
    /// Anchors jump to the exact minimum SNR at the current variables.
    FullRecursion,
}

#[derive(Debug, Clone, Copy)]
pub struct MmOptions {
    pub tol: f64,
    pub max_rounds: usize,
    pub update: AnchorUpdate,
}

impl Default for MmOptions {
    fn default() -> Self {
        let t = Tolerances::default();
        MmOptions {
            tol: t.mm_rel,
            max_rounds: t.mm_max_rounds,
            update: AnchorUpdate::SingleStep,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Surrogate objective at the round's solution.
    pub objective: f64,
    /// Sum of the absolute values of the objective's terms.
    pub scale: f64,
    /// Largest relative change of any variable or anchor; absent for round 0.
    pub max_delta: Option<f64>,
    pub variables: Vec<f64>,
    pub gamma_dots: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmState {
    pub round: usize,
    /// Minimum SNRs at the final variables.
    pub gamma_dots: Vec<f64>,
    pub variables: Vec<f64>,
    /// Objective with the exact SNRs.
    pub objective_value: f64,
    /// Objective with the last round's surrogate SNRs.
    pub surrogate_objective: f64,
    pub converged: bool,
    pub history: Vec<RoundRecord>,
}

/// Relative slack allowed in the descent check for rounding.
pub const DESCENT_SLACK: f64 = 1e-12;

impl MmState {
    /// Whether the surrogate objective never increased across rounds, up to
    /// rounding relative to the size of its terms.
    pub fn is_monotone(&self) -> bool {
        self.history.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            b.objective <= a.objective + DESCENT_SLACK * a.scale.max(b.scale)
        })
    }

    pub fn write_history_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["round", "objective", "max_delta"])?;
        for r in &self.history {
            w.write_record([
                r.round.to_string(),
                fmt_f64(r.objective),
                r.max_delta.map(fmt_f64).unwrap_or_default(),
            ])?;
        }
        w.flush()
    }
}

fn rel_change(new: &[f64], old: &[f64]) -> f64 {
    new.iter().zip(old).fold(0.0, |m, (a, b)| {
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            m
        } else {
            m.max((a - b).abs() / scale)
        }
    })
}

/// Runs the MM loop with one EAR step per round.
pub fn mm_solve(
    problem: &MmProblem,
    subsolver: &dyn SubproblemSolver,
    tol: f64,
    max_rounds: usize,
) -> Result<MmState> {
    mm_solve_with(
        problem,
        subsolver,
        &MmOptions {
            tol,
            max_rounds,
            update: AnchorUpdate::SingleStep,
        },
    )
}

pub fn mm_solve_with(
    problem: &MmProblem,
    subsolver: &dyn SubproblemSolver,
    opts: &MmOptions,
) -> Result<MmState> {
    problem.validate()?;
    let mut x = problem.initial.clone();
    for (v, &xi) in problem.variables.iter().zip(&x) {
        if !(xi >= v.lower && xi <= v.upper) {
            return Err(Error::InfeasibleStart(format!(
                "`{}` = {xi} lies outside [{}, {}]",
                v.name, v.lower, v.upper
            )));
        }
    }
    let params = problem.link_params(&x).map_err(|e| Error::InfeasibleStart(e.to_string()))?;
    let mut gd = match &problem.initial_gamma_dots {
        Some(g) => g.clone(),
        None => params.iter().map(|p| gamma_hat(p).linear()).collect(),
    };
    // The anchors upper-bound the SNRs, so the start is feasible for the
    // first subproblem exactly when it is feasible with the anchors plugged in.
    let violated = problem.constraints.iter().any(|c| {
        let v = c.eval(&x, &gd);
        v > 1e-12 * c.constant.abs().max(f64::MIN_POSITIVE)
    });
    if violated {
        return Err(Error::InfeasibleStart(
            "constraints violated at the initial point".into(),
        ));
    }
    let mut history = vec![RoundRecord {
        round: 0,
        objective: problem.objective.eval(&x, &gd),
        scale: problem.objective.magnitude(&x, &gd),
        max_delta: None,
        variables: x.clone(),
        gamma_dots: gd.clone(),
    }];
    let mut converged = false;
    let mut round = 0;
    while round < opts.max_rounds {
        round += 1;
        let params = problem.link_params(&x)?;
        let new_gd = params
            .iter()
            .zip(&gd)
            .map(|(p, &g)| match opts.update {
                AnchorUpdate::SingleStep => {
                    let t = EarTerms::new(p, g)?;
                    Ok(t.value())
                }
                AnchorUpdate::FullRecursion => solvers::reference_snr(p).map(|s| s.linear()),
            })
            .collect::<Result<Vec<f64>>>()?;
        let sub = Subproblem {
            problem,
            gamma_dots: &new_gd,
        };
        let new_x = subsolver.solve(&sub, &x)?;
        let surrogate = sub.surrogate(&new_x)?;
        let objective = problem.objective.eval(&new_x, &surrogate);
        let scale = problem.objective.magnitude(&new_x, &surrogate);
        let delta = rel_change(&new_x, &x).max(rel_change(&new_gd, &gd));
        x = new_x;
        gd = new_gd;
        history.push(RoundRecord {
            round,
            objective,
            scale,
            max_delta: Some(delta),
            variables: x.clone(),
            gamma_dots: gd.clone(),
        });
        if delta <= opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            method: "majorization-minimization".into(),
            iterations: opts.max_rounds,
        });
    }
    let exact = problem.true_snrs(&x)?;
    Ok(MmState {
        round,
        objective_value: problem.objective.eval(&x, &exact),
        surrogate_objective: history.last().map_or(f64::NAN, |r| r.objective),
        gamma_dots: exact,
        variables: x,
        converged,
        history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DinkelbachState {
    /// Final inner MM state; its variables are the maximizer.
    pub inner: MmState,
    /// `λ_0, λ_1, …`; the last entry is the final ratio.
    pub lambdas: Vec<f64>,
    pub ratio: f64,
    pub converged: bool,
    /// Whether every inner MM run descended.
    pub inner_monotone: bool,
}

impl DinkelbachState {
    /// Whether `λ` never decreased and every inner run descended.
    pub fn is_monotone(&self) -> bool {
        self.inner_monotone
            && self
                .lambdas
                .windows(2)
                .all(|w| w[1] >= w[0] - DESCENT_SLACK * w[0].abs().max(w[1].abs()))
    }
}

/// Maximizes `numerator / denominator` over the feasible set of `template`.
///
/// Each iteration solves `min λ·den − num` by [`mm_solve`] warm-started at
/// the previous maximizer with exact anchors, then sets `λ = num / den`.
/// The numerator must not depend on the SNRs.
pub fn dinkelbach_solve(
    numerator: &Affine,
    denominator: &Affine,
    template: &MmProblem,
    subsolver: &dyn SubproblemSolver,
    tol: f64,
    max_iter: usize,
    mm: &MmOptions,
) -> Result<DinkelbachState> {
    if numerator.has_gamma_terms() {
        return Err(Error::Unsupported(
            "Dinkelbach numerator depends on the SNRs".into(),
        ));
    }
    template.validate()?;
    let mut x = template.initial.clone();
    let mut gd = template.true_snrs(&x)?;
    let ratio_at = |x: &[f64], g: &[f64]| -> Result<(f64, f64)> {
        let den = denominator.eval(x, g);
        if !(den > 0.0) {
            return Err(Error::Domain(format!("denominator {den} is not positive")));
        }
        Ok((numerator.eval(x, g), den))
    };
    let (num0, den0) = ratio_at(&x, &gd)?;
    let mut lambdas = vec![num0 / den0];
    let mut inner_monotone = true;
    for _ in 0..max_iter {
        let lambda = *lambdas.last().expect("nonempty");
        let mut problem = template.clone();
        problem.objective = Affine {
            var_coeffs: denominator
                .var_coeffs
                .iter()
                .zip(&numerator.var_coeffs)
                .map(|(d, n)| lambda * d - n)
                .collect(),
            gamma_coeffs: denominator.gamma_coeffs.iter().map(|d| lambda * d).collect(),
            constant: lambda * denominator.constant - numerator.constant,
        };
        problem.initial = x.clone();
        problem.initial_gamma_dots = Some(gd.clone());
        let state = mm_solve_with(&problem, subsolver, mm)?;
        inner_monotone &= state.is_monotone();
        let (num, den) = ratio_at(&state.variables, &state.gamma_dots)?;
        x = state.variables.clone();
        gd = state.gamma_dots.clone();
        let ratio = num / den;
        lambdas.push(ratio);
        if (num - lambda * den).abs() <= tol * num.abs() {
            return Ok(DinkelbachState {
                inner: state,
                lambdas,
                ratio,
                converged: true,
                inner_monotone,
            });
        }
    }
    Err(Error::NoConvergence {
        method: "Dinkelbach".into(),
        iterations: max_iter,
    })
}
