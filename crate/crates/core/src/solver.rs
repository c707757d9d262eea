//! Adaptive stochastic mirror descent for `min f(x) s.t. g(x) <= 0` over a
//! simplex, its fixed-stepsize baseline, and step-level diagnostics.
//!
//! Each iteration queries `g(x^k)`. If `g(x^k) <= ε` the step is
//! *productive*: a subgradient sample of `f` is used and `x^k` joins the
//! output average. Otherwise a subgradient sample of `g` is used. The step is
//! `x^{k+1} = Mirr_{x^k}(h_k ∇)` with `h_k = R / sqrt(Σ_{i≤k} M_i²)`, where
//! `M_i` is the dual norm of the sample used at step `i`. The adaptive run
//! stops as soon as `(2R/k) sqrt(Σ M_i²) <= ε` and returns the mean of the
//! productive iterates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DualVector, Geometry, Point, FEASIBILITY_TOLERANCE};
use crate::oracle::{FirstOrderOracle, RngStream, SampleKind};

/// An oracle together with the proximal setup it is solved in.
pub trait Problem: FirstOrderOracle {
    fn geometry(&self) -> &Geometry;
}

/// Stepsize rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Adaptive,
    Fixed,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Adaptive => "adaptive",
            Variant::Fixed => "fixed",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(Variant::Adaptive),
            "fixed" => Ok(Variant::Fixed),
            other => Err(Error::InvalidArgument(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Target accuracy; also the productivity threshold on `g(x^k)`.
    pub epsilon: f64,
    /// Hard iteration cap for the adaptive variant. `None` uses a cap of ten
    /// times the worst-case count for the largest `M_k` seen so far.
    pub max_iterations: Option<u64>,
    pub seed: u64,
    pub variant: Variant,
    /// Uniform subgradient bound for the fixed variant.
    pub fixed_m: Option<f64>,
    pub record_trace: bool,
    /// Per-step checks: iterate feasibility and stepsize monotonicity.
    pub check_invariants: bool,
}

impl SolverConfig {
    pub fn adaptive(epsilon: f64) -> Self {
        Self {
            epsilon,
            max_iterations: None,
            seed: 0,
            variant: Variant::Adaptive,
            fixed_m: None,
            record_trace: true,
            check_invariants: false,
        }
    }

    pub fn fixed(epsilon: f64, bound: f64) -> Self {
        Self { variant: Variant::Fixed, fixed_m: Some(bound), ..Self::adaptive(epsilon) }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        match (self.variant, self.fixed_m) {
            (Variant::Fixed, None) => Err(Error::InvalidArgument("fixed variant requires a uniform bound M".into())),
            (_, Some(m)) if !(m.is_finite() && m > 0.0) => {
                Err(Error::InvalidArgument(format!("uniform bound M must be positive, got {m}")))
            }
            _ => Ok(()),
        }
    }
}

/// One row of the iteration trace.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// 1-based step index.
    pub k: u64,
    pub productive: bool,
    pub m_k: f64,
    /// Stepsize; `+∞` when `Σ M_i² = 0`, where the step is the identity.
    pub h_k: f64,
    pub g_value: f64,
    pub f_value: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CriterionMet,
    CapReached,
    /// Fixed-stepsize runs always execute their precomputed count.
    BudgetExhausted,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::CriterionMet => "criterion_met",
            StopReason::CapReached => "cap_reached",
            StopReason::BudgetExhausted => "budget_exhausted",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    /// Mean of the productive iterates.
    pub x_bar: Point,
    /// Total iterations `N`.
    pub iterations: u64,
    /// Productive iterations `N_I`.
    pub productive: u64,
    pub stop_reason: StopReason,
    pub trace: Vec<IterationRecord>,
    /// `sqrt((1/N) Σ M_k²)`.
    pub m_bar: f64,
    /// `max_k M_k`.
    pub m_max: f64,
    pub sum_m_squared: f64,
}

/// What an observer sees at every step, before moving to `x^{k+1}`.
pub struct StepView<'a> {
    pub k: u64,
    pub x: &'a Point,
    pub x_next: &'a Point,
    pub gradient: &'a DualVector,
    pub which: SampleKind,
    pub h: f64,
    pub g_value: f64,
}

/// `h_k = R / sqrt(Σ_{i≤k} M_i²)`.
pub fn step_size(radius: f64, history: &[f64]) -> Result<f64> {
    let sum: f64 = history.iter().map(|m| m * m).sum();
    step_size_from_sum(radius, sum)
}

fn step_size_from_sum(radius: f64, sum_m_squared: f64) -> Result<f64> {
    if sum_m_squared <= 0.0 {
        return Err(Error::InvalidArgument("all subgradient norms are zero; stepsize undefined".into()));
    }
    Ok(radius / sum_m_squared.sqrt())
}

/// `(2R/k) sqrt(Σ M_i²) <= ε`.
pub fn stopping_criterion(radius: f64, k: u64, sum_m_squared: f64, epsilon: f64) -> bool {
    2.0 * radius / k as f64 * sum_m_squared.sqrt() <= epsilon
}

/// `⌈4M²R²/ε²⌉` for the adaptive method, `⌈2M²R²/ε²⌉` for the fixed one.
pub fn worst_case_iterations(m: f64, radius: f64, epsilon: f64, variant: Variant) -> u64 {
    let factor = match variant {
        Variant::Adaptive => 4.0,
        Variant::Fixed => 2.0,
    };
    (factor * m * m * radius * radius / (epsilon * epsilon)).ceil() as u64
}

/// Runs the adaptive method.
pub fn solve_adaptive<P: Problem + ?Sized>(problem: &P, config: &SolverConfig) -> Result<RunResult> {
    solve_adaptive_observed(problem, config, |_| {})
}

/// Runs the fixed-stepsize baseline.
pub fn solve_fixed<P: Problem + ?Sized>(problem: &P, config: &SolverConfig) -> Result<RunResult> {
    solve_fixed_observed(problem, config, |_| {})
}

/// Dispatches on `config.variant`.
pub fn solve<P: Problem + ?Sized>(problem: &P, config: &SolverConfig) -> Result<RunResult> {
    match config.variant {
        Variant::Adaptive => solve_adaptive(problem, config),
        Variant::Fixed => solve_fixed(problem, config),
    }
}

pub fn solve_adaptive_observed<P, F>(problem: &P, config: &SolverConfig, observer: F) -> Result<RunResult>
where
    P: Problem + ?Sized,
    F: FnMut(&StepView<'_>),
{
    config.validate()?;
    run(problem, config, Schedule::Adaptive, observer)
}

pub fn solve_fixed_observed<P, F>(problem: &P, config: &SolverConfig, observer: F) -> Result<RunResult>
where
    P: Problem + ?Sized,
    F: FnMut(&StepView<'_>),
{
    config.validate()?;
    let bound = config
        .fixed_m
        .ok_or_else(|| Error::InvalidArgument("fixed variant requires a uniform bound M".into()))?;
    let geometry = problem.geometry();
    let iterations = worst_case_iterations(bound, geometry.radius(), config.epsilon, Variant::Fixed);
    let step = config.epsilon / (bound * bound);
    run(problem, config, Schedule::Fixed { step, iterations }, observer)
}

enum Schedule {
    Adaptive,
    Fixed { step: f64, iterations: u64 },
}

fn run<P, F>(problem: &P, config: &SolverConfig, schedule: Schedule, mut observer: F) -> Result<RunResult>
where
    P: Problem + ?Sized,
    F: FnMut(&StepView<'_>),
{
    let geometry = problem.geometry();
    if geometry.dimension() != problem.dimension() {
        return Err(Error::DimensionMismatch { expected: geometry.dimension(), found: problem.dimension() });
    }
    let radius = geometry.radius();
    let eps = config.epsilon;
    let mut rng = RngStream::new(config.seed);

    let mut x = geometry.dgf_minimizer();
    let mut productive_sum = vec![0.0; geometry.dimension()];
    let mut productive = 0u64;
    let mut sum_sq = 0.0;
    let mut m_max = 0.0_f64;
    let mut previous_h = f64::INFINITY;
    let mut trace = Vec::new();
    let mut k = 0u64;

    let stop_reason = loop {
        match schedule {
            Schedule::Fixed { iterations, .. } if k >= iterations => break StopReason::BudgetExhausted,
            Schedule::Adaptive if k >= adaptive_cap(config, m_max, radius) => break StopReason::CapReached,
            _ => {}
        }
        k += 1;

        let g_value = problem.constraint_value(&x)?;
        let is_productive = g_value <= eps;
        let which = if is_productive { SampleKind::Objective } else { SampleKind::Constraint };
        let gradient = problem.sample(&x, which, &mut rng)?.gradient;
        let m_k = geometry.dual_norm(&gradient)?;
        sum_sq += m_k * m_k;
        m_max = m_max.max(m_k);

        if is_productive {
            productive += 1;
            productive_sum.iter_mut().zip(x.iter()).for_each(|(s, v)| *s += v);
        }

        let h = match schedule {
            Schedule::Fixed { step, .. } => step,
            Schedule::Adaptive if sum_sq > 0.0 => step_size_from_sum(radius, sum_sq)?,
            // every sample so far was zero; the stopping rule fires below
            Schedule::Adaptive => f64::INFINITY,
        };
        let x_next = if h.is_finite() { geometry.prox_map(&x, &gradient.scaled(h))? } else { x.clone() };

        if config.check_invariants {
            check_step(k, &x_next, h, previous_h, m_k, &schedule)?;
        }
        previous_h = h;

        observer(&StepView { k, x: &x, x_next: &x_next, gradient: &gradient, which, h, g_value });

        if config.record_trace {
            trace.push(IterationRecord {
                k,
                productive: is_productive,
                m_k,
                h_k: h,
                g_value,
                f_value: problem.objective_value(&x),
            });
        }
        x = x_next;

        if matches!(schedule, Schedule::Adaptive) && stopping_criterion(radius, k, sum_sq, eps) {
            break StopReason::CriterionMet;
        }
    };

    if productive == 0 {
        return Err(Error::NoProductiveIterates { iterations: k });
    }
    let x_bar = Point::from(productive_sum.into_iter().map(|s| s / productive as f64).collect::<Vec<_>>());
    Ok(RunResult {
        x_bar,
        iterations: k,
        productive,
        stop_reason,
        trace,
        m_bar: (sum_sq / k as f64).sqrt(),
        m_max,
        sum_m_squared: sum_sq,
    })
}

fn adaptive_cap(config: &SolverConfig, m_max: f64, radius: f64) -> u64 {
    match config.max_iterations {
        Some(cap) => cap,
        // before the first sample, and while every sample is zero, the
        // stopping rule is decided within one step
        None if m_max == 0.0 => u64::MAX,
        None => 10u64.saturating_mul(worst_case_iterations(m_max, radius, config.epsilon, Variant::Adaptive)),
    }
}

fn check_step(
    k: u64,
    x_next: &Point,
    h: f64,
    previous_h: f64,
    m_k: f64,
    schedule: &Schedule,
) -> Result<()> {
    if !m_k.is_finite() || m_k < 0.0 {
        return Err(Error::InvariantViolated { step: k, what: format!("M_k = {m_k}") });
    }
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvariantViolated { step: k, what: format!("h_k = {h}") });
    }
    if matches!(schedule, Schedule::Adaptive) && h > previous_h {
        return Err(Error::InvariantViolated { step: k, what: format!("stepsize grew from {previous_h} to {h}") });
    }
    let total: f64 = x_next.iter().sum();
    if (total - 1.0).abs() > FEASIBILITY_TOLERANCE || x_next.iter().any(|&v| v < -FEASIBILITY_TOLERANCE) {
        return Err(Error::InvariantViolated { step: k, what: format!("iterate left the simplex (sum {total})") });
    }
    Ok(())
}

/// `2 sqrt(Σα) - Σ_k α_k / sqrt(S_k)` with `S_k` the running sum; terms with
/// `S_k = 0` contribute nothing. Non-negative for every non-negative input.
pub fn partial_sum_gap(alpha: &[f64]) -> f64 {
    let mut running = 0.0;
    let mut lhs = 0.0;
    for &a in alpha {
        running += a;
        if running > 0.0 {
            lhs += a / running.sqrt();
        }
    }
    2.0 * running.sqrt() - lhs
}

/// Slack of the one-step mirror descent inequality with an exact subgradient:
///
/// `(1/h)(V(x_k, r) - V(x_next, r)) + (h/2)‖grad‖²_* - gap`
///
/// where `gap = φ(x_k) - φ(r)` for the convex function `φ` whose subgradient
/// `grad` drove the step `x_next = Mirr_{x_k}(h·grad)`.
pub fn one_step_residual(
    geometry: &Geometry,
    x_k: &[f64],
    x_next: &[f64],
    reference: &[f64],
    grad: &[f64],
    h: f64,
    gap: f64,
) -> Result<f64> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidArgument(format!("stepsize must be positive, got {h}")));
    }
    let v_now = geometry.bregman(x_k, reference)?;
    let v_next = geometry.bregman(x_next, reference)?;
    let dual = geometry.dual_norm(grad)?;
    Ok((v_now - v_next) / h + 0.5 * h * dual * dual - gap)
}

/// Both sides of the deterministic accuracy certificate of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TelescopingReport {
    /// `Σ_{k∈I} (f(x^k) - f(r)) + Σ_{k∈J} (g(x^k) - g(r))`.
    pub lhs: f64,
    /// `2R sqrt(Σ M_k²)`.
    pub rhs: f64,
    pub holds: bool,
}

/// Replays a deterministic trace against a feasible reference point.
pub fn telescoping_bound_check<P: Problem + ?Sized>(
    trace: &[IterationRecord],
    geometry: &Geometry,
    problem: &P,
    reference: &[f64],
) -> Result<TelescopingReport> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let f_ref = problem
        .objective_value(reference)
        .ok_or_else(|| Error::InvalidArgument("objective has no exact value".into()))?;
    let g_ref = problem.constraint_value(reference)?;
    let mut lhs = 0.0;
    let mut sum_sq = 0.0;
    for rec in trace {
        lhs += if rec.productive {
            rec.f_value.ok_or_else(|| Error::InvalidArgument(format!("step {} has no f value", rec.k)))? - f_ref
        } else {
            rec.g_value - g_ref
        };
        sum_sq += rec.m_k * rec.m_k;
    }
    let rhs = 2.0 * geometry.radius() * sum_sq.sqrt();
    Ok(TelescopingReport { lhs, rhs, holds: lhs <= rhs + 1e-8 })
}
