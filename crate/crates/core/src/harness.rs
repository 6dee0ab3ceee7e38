//! Adversaries, episode replay, augmented-regret accounting and bound
//! verification.
//!
//! The verification workflow: build a learner, run it against an adversary
//! with [`run_episode`], and hand the resulting [`EpisodeLedger`] to
//! [`verify_bounds`], which compares the measured augmented regret against
//! the closed-form right-hand side of a named theorem at *every prefix
//! length* (the algorithms are anytime, so prefixes of one run are valid runs
//! in their own right). [`invariant_sweep`] checks the pointwise lemmas that
//! power those theorems on dense parameter grids.
//!
//! Random adversaries draw from ChaCha8 ([`RNG_ALGORITHM`]); identical seeds
//! replay bit-identical episodes.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::potential::{
    analytic_derivs, discrete_derivs, residual_delta, LearnerConfig, PotentialError,
    PotentialPoint,
};
use crate::scalar::PotentialLearner;
use crate::vector::{ScalarAsVector, VectorError, VectorLearner};

/// Identifier of the pseudo-random generator used by seeded adversaries and
/// market models; recorded in outputs so trials can be replayed by any
/// implementation of the same generator family.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Errors from episode execution and bound evaluation.
#[derive(Debug)]
pub enum HarnessError {
    Learner(VectorError),
    Numeric(PotentialError),
    /// The selected theorem needs a parameter that was not supplied.
    MissingParameter { theorem: &'static str, param: &'static str },
    BadSpec { what: String },
    Io(std::io::Error),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Learner(e) => write!(f, "{e}"),
            Self::Numeric(e) => write!(f, "{e}"),
            Self::MissingParameter { theorem, param } => {
                write!(f, "bound {theorem} needs parameter `{param}`")
            }
            Self::BadSpec { what } => write!(f, "bad specification: {what}"),
            Self::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<VectorError> for HarnessError {
    fn from(e: VectorError) -> Self {
        Self::Learner(e)
    }
}

impl From<PotentialError> for HarnessError {
    fn from(e: PotentialError) -> Self {
        Self::Numeric(e)
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

// ---------------------------------------------------------------------------
// Adversaries
// ---------------------------------------------------------------------------

/// Families of loss-gradient sequences. Every kind respects `|g| <= magnitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    /// `g_i = magnitude * sgn(x_i)`, ties at `x_i = 0` broken towards `+`.
    /// Punishes whatever the learner just played.
    Sign,
    /// `g_i = -magnitude` every round: a steady trend the learner should
    /// chase with growing predictions.
    Constant,
    /// `g_i = ±magnitude` flipping every round, with alternating parity
    /// across coordinates.
    Alternating,
    /// i.i.d. uniform draws from `[-magnitude, magnitude]`, seeded.
    UniformRandom,
    /// `g_i = magnitude * sin(pi * (2t/period + phase))`.
    Sinusoidal,
}

impl AdversaryKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Sign => "sign",
            Self::Constant => "constant",
            Self::Alternating => "alternating",
            Self::UniformRandom => "uniform",
            Self::Sinusoidal => "sinusoidal",
        }
    }
}

/// Declarative adversary description; [`AdversarySpec::build`] yields the
/// stateful generator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversarySpec {
    pub kind: AdversaryKind,
    pub magnitude: f64,
    pub seed: u64,
    pub phase: f64,
    pub period: f64,
}

impl AdversarySpec {
    pub fn sign(magnitude: f64) -> Self {
        Self {
            kind: AdversaryKind::Sign,
            magnitude,
            seed: 0,
            phase: 0.0,
            period: 1.0,
        }
    }

    pub fn constant(magnitude: f64) -> Self {
        Self {
            kind: AdversaryKind::Constant,
            ..Self::sign(magnitude)
        }
    }

    pub fn alternating(magnitude: f64) -> Self {
        Self {
            kind: AdversaryKind::Alternating,
            ..Self::sign(magnitude)
        }
    }

    pub fn uniform(magnitude: f64, seed: u64) -> Self {
        Self {
            kind: AdversaryKind::UniformRandom,
            seed,
            ..Self::sign(magnitude)
        }
    }

    pub fn sinusoidal(magnitude: f64, period: f64, phase: f64) -> Self {
        Self {
            kind: AdversaryKind::Sinusoidal,
            phase,
            period,
            ..Self::sign(magnitude)
        }
    }

    /// Short label for report rows, carrying the seed for random kinds.
    pub fn label(&self) -> String {
        match self.kind {
            AdversaryKind::UniformRandom => {
                format!("{}(seed={})", self.kind.label(), self.seed)
            }
            _ => self.kind.label().to_string(),
        }
    }

    pub fn build(&self) -> Result<Adversary, HarnessError> {
        if !self.magnitude.is_finite() || self.magnitude <= 0.0 {
            return Err(HarnessError::BadSpec {
                what: format!("adversary magnitude must be positive, got {}", self.magnitude),
            });
        }
        if self.kind == AdversaryKind::Sinusoidal && !(self.period > 0.0) {
            return Err(HarnessError::BadSpec {
                what: format!("sinusoidal period must be positive, got {}", self.period),
            });
        }
        Ok(Adversary {
            spec: self.clone(),
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        })
    }
}

/// Stateful gradient generator.
pub struct Adversary {
    spec: AdversarySpec,
    rng: ChaCha8Rng,
}

impl Adversary {
    /// Gradient vector for round `t` (1-based) given the prediction just
    /// played.
    pub fn next(&mut self, t: u64, x: &[f64]) -> Vec<f64> {
        let m = self.spec.magnitude;
        match self.spec.kind {
            AdversaryKind::Sign => x
                .iter()
                .map(|xi| if *xi < 0.0 { -m } else { m })
                .collect(),
            AdversaryKind::Constant => vec![-m; x.len()],
            AdversaryKind::Alternating => (0..x.len())
                .map(|i| if (t + i as u64) % 2 == 1 { m } else { -m })
                .collect(),
            AdversaryKind::UniformRandom => {
                (0..x.len()).map(|_| self.rng.random_range(-m..=m)).collect()
            }
            AdversaryKind::Sinusoidal => {
                let v = m
                    * (std::f64::consts::PI
                        * (2.0 * t as f64 / self.spec.period + self.spec.phase))
                        .sin();
                vec![v; x.len()]
            }
        }
    }
}

/// The four-member adversary suite used across the verification sweeps, at
/// full magnitude `g`.
pub fn standard_adversaries(g: f64, seed: u64) -> Vec<AdversarySpec> {
    vec![
        AdversarySpec::sign(g),
        AdversarySpec::constant(g),
        AdversarySpec::alternating(g),
        AdversarySpec::uniform(g, seed),
    ]
}

/// The scalar comparator grid used across the verification sweeps.
pub fn scalar_comparator_grid() -> Vec<Vec<f64>> {
    [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 5.0, -5.0, 10.0, -10.0]
        .iter()
        .map(|u| vec![*u])
        .collect()
}

// ---------------------------------------------------------------------------
// Episodes and regret
// ---------------------------------------------------------------------------

/// Full trajectory of one episode: predictions, gradients and switching
/// distances, plus the weights needed to account regret.
#[derive(Debug, Clone, Serialize)]
pub struct EpisodeLedger {
    pub predictions: Vec<Vec<f64>>,
    pub gradients: Vec<Vec<f64>>,
    /// `|x_t - x_{t+1}|_1` for `t = 1..T-1`; one entry shorter than
    /// `predictions`.
    pub switch_costs: Vec<f64>,
    pub lambda: f64,
    pub g_bound: f64,
}

impl EpisodeLedger {
    pub fn rounds(&self) -> usize {
        self.predictions.len()
    }

    pub fn dim(&self) -> usize {
        self.predictions.first().map_or(0, Vec::len)
    }

    /// Augmented regret against a fixed comparator:
    /// `sum_t <g_t, x_t - u> + lambda * sum_t |x_t - x_{t+1}|_1`.
    pub fn augmented_regret(&self, u: &[f64]) -> Result<f64, HarnessError> {
        if self.rounds() > 0 && u.len() != self.dim() {
            return Err(HarnessError::Learner(VectorError::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            }));
        }
        let mut loss = 0.0;
        for (x, g) in self.predictions.iter().zip(&self.gradients) {
            loss += inner(g, x) - inner(g, u);
        }
        Ok(loss + self.lambda * self.switch_costs.iter().sum::<f64>())
    }

    /// Movement-only total `sum |x_t - x_{t+1}|_1` over `t in [from, to)`,
    /// 1-based.
    pub fn switching_total(&self, from: usize, to: usize) -> f64 {
        self.switch_costs[from.saturating_sub(1)..to.saturating_sub(1)]
            .iter()
            .sum()
    }

    /// Recomputes every switching entry from the predictions and returns the
    /// largest absolute discrepancy (0 for a ledger produced by
    /// [`run_episode`]).
    pub fn switch_cost_drift(&self) -> f64 {
        self.predictions
            .windows(2)
            .zip(&self.switch_costs)
            .map(|(w, sc)| (l1_dist(&w[0], &w[1]) - sc).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(ai, bi)| ai * bi).sum()
}

pub(crate) fn l1_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(ai, bi)| (ai - bi).abs()).sum()
}

/// Plays `t_rounds` of the prediction protocol: predict, query the adversary
/// with the full prediction history available to it, observe.
///
/// The learner must be fresh (round 1) and the adversary magnitude must not
/// exceed the learner's Lipschitz bound.
pub fn run_episode(
    learner: &mut dyn VectorLearner,
    adversary: &AdversarySpec,
    t_rounds: u64,
) -> Result<EpisodeLedger, HarnessError> {
    if adversary.magnitude > learner.lipschitz() {
        return Err(HarnessError::BadSpec {
            what: format!(
                "adversary magnitude {} exceeds learner Lipschitz bound {}",
                adversary.magnitude,
                learner.lipschitz()
            ),
        });
    }
    let mut adv = adversary.build()?;
    let mut predictions: Vec<Vec<f64>> = Vec::with_capacity(t_rounds as usize);
    let mut gradients: Vec<Vec<f64>> = Vec::with_capacity(t_rounds as usize);
    let mut switch_costs = Vec::new();
    for t in 1..=t_rounds {
        let x = learner.predict()?;
        let g = adv.next(t, &x);
        learner.observe(&g)?;
        if let Some(prev) = predictions.last() {
            switch_costs.push(l1_dist(prev, &x));
        }
        predictions.push(x);
        gradients.push(g);
    }
    Ok(EpisodeLedger {
        predictions,
        gradients,
        switch_costs,
        lambda: learner.switching_weight(),
        g_bound: learner.lipschitz(),
    })
}

// ---------------------------------------------------------------------------
// Theorem right-hand sides
// ---------------------------------------------------------------------------

/// The regret/switching bounds this harness can evaluate in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    /// Potential learner, `alpha = 4*lambda/G + 2`:
    /// `sqrt((4*lambda*G + 2*G^2)*T) * [C + |u|(sqrt(4*log(1+|u|/C)) + 2)]`.
    Main,
    /// Coin-betting baseline:
    /// `(G+lambda) * [C + |u|*sqrt(2T)*(3/2 + log(sqrt(2)*|u|*T^(5/2)/C))]`.
    Baseline,
    /// Doubling wrapper, `alpha = 8*lambda/G + 2`:
    /// `sqrt(2*alpha)*G/(sqrt(2)-1) * [C + |u|*sqrt(T)*(sqrt(8*log(1+|u|T/C)) + 2*sqrt(2))]`.
    Doubling,
    /// Interval-restricted movement of the constrained learner over a window
    /// of length `T`: `22*sqrt(T) * [2D + C + 2D*sqrt(log(1+D/C))]`.
    IntervalSwitching,
    /// Coordinate-wise learner in `R^d`:
    /// `G*sqrt(alpha*T) * [C + |u|_1*(sqrt(4*log(1+|u|_inf*d/C)) + 2)]`.
    CoordinateL1,
    /// Experts learner, explicit form:
    /// `sqrt((32*lambda*G + 8*G^2)*T) * [1 + 2*|u-pi|_1 + 2*sqrt(|u-pi|_1 * sum_i |u_i-pi_i|*log(1+|u_i-pi_i|/pi_i))]`.
    LeaExplicit,
    /// Gradient-adaptive wrapper, reference evaluation with the unspecified
    /// universal constant set to 1:
    /// `(G+lambda)*C + |u|*(max(G,lambda) + sqrt(max(G,lambda)*sum_t |g_t|))`.
    /// Not asserted by any acceptance check.
    MetaAdaptivity,
}

impl TheoremId {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Main => "main",
            Self::Baseline => "baseline",
            Self::Doubling => "doubling",
            Self::IntervalSwitching => "interval_switching",
            Self::CoordinateL1 => "coordinate_l1",
            Self::LeaExplicit => "lea_explicit",
            Self::MetaAdaptivity => "meta_adaptivity",
        }
    }
}

/// Parameters for [`theoretical_bound`]. Each theorem validates the fields it
/// needs.
#[derive(Debug, Clone, Default)]
pub struct BoundParams {
    pub c: Option<f64>,
    pub g: Option<f64>,
    pub lambda: Option<f64>,
    pub diameter: Option<f64>,
    pub prior: Option<Vec<f64>>,
    pub sum_abs_gradients: Option<f64>,
}

impl BoundParams {
    pub fn olo(c: f64, g: f64, lambda: f64) -> Self {
        Self {
            c: Some(c),
            g: Some(g),
            lambda: Some(lambda),
            ..Self::default()
        }
    }

    pub fn interval(c: f64, diameter: f64) -> Self {
        Self {
            c: Some(c),
            diameter: Some(diameter),
            ..Self::default()
        }
    }

    pub fn lea(g: f64, lambda: f64, prior: Vec<f64>) -> Self {
        Self {
            g: Some(g),
            lambda: Some(lambda),
            prior: Some(prior),
            ..Self::default()
        }
    }

    fn require(v: Option<f64>, theorem: &'static str, param: &'static str) -> Result<f64, HarnessError> {
        v.ok_or(HarnessError::MissingParameter { theorem, param })
    }
}

/// Evaluates the explicit right-hand side of the selected theorem for
/// comparator `u` at horizon `t`. For [`TheoremId::IntervalSwitching`], `t`
/// is the window length and `u` is ignored.
pub fn theoretical_bound(
    theorem: TheoremId,
    params: &BoundParams,
    u: &[f64],
    t: u64,
) -> Result<f64, HarnessError> {
    if t == 0 {
        return Ok(0.0);
    }
    let tf = t as f64;
    let scalar_u = |what: &'static str| -> Result<f64, HarnessError> {
        if u.len() == 1 {
            Ok(u[0])
        } else {
            Err(HarnessError::BadSpec {
                what: format!("{what} takes a scalar comparator, got dimension {}", u.len()),
            })
        }
    };
    match theorem {
        TheoremId::Main => {
            let c = BoundParams::require(params.c, "main", "c")?;
            let g = BoundParams::require(params.g, "main", "g")?;
            let lambda = BoundParams::require(params.lambda, "main", "lambda")?;
            let u = scalar_u("main")?.abs();
            let envelope = ((4.0 * lambda * g + 2.0 * g * g) * tf).sqrt();
            Ok(envelope * (c + u * ((4.0 * (1.0 + u / c).ln()).sqrt() + 2.0)))
        }
        TheoremId::Baseline => {
            let c = BoundParams::require(params.c, "baseline", "c")?;
            let g = BoundParams::require(params.g, "baseline", "g")?;
            let lambda = BoundParams::require(params.lambda, "baseline", "lambda")?;
            let u = scalar_u("baseline")?.abs();
            let tail = if u == 0.0 {
                0.0
            } else {
                u * (2.0 * tf).sqrt()
                    * (1.5 + (std::f64::consts::SQRT_2 * u * tf.powf(2.5) / c).ln())
            };
            Ok((g + lambda) * (c + tail))
        }
        TheoremId::Doubling => {
            let c = BoundParams::require(params.c, "doubling", "c")?;
            let g = BoundParams::require(params.g, "doubling", "g")?;
            let lambda = BoundParams::require(params.lambda, "doubling", "lambda")?;
            let u = scalar_u("doubling")?.abs();
            let alpha = 8.0 * lambda / g + 2.0;
            let front = (2.0 * alpha).sqrt() * g / (std::f64::consts::SQRT_2 - 1.0);
            let tail =
                u * tf.sqrt() * ((8.0 * (1.0 + u * tf / c).ln()).sqrt() + 2.0 * std::f64::consts::SQRT_2);
            Ok(front * (c + tail))
        }
        TheoremId::IntervalSwitching => {
            let c = BoundParams::require(params.c, "interval_switching", "c")?;
            let d = BoundParams::require(params.diameter, "interval_switching", "diameter")?;
            Ok(22.0 * tf.sqrt() * (2.0 * d + c + 2.0 * d * (1.0 + d / c).ln().sqrt()))
        }
        TheoremId::CoordinateL1 => {
            let c = BoundParams::require(params.c, "coordinate_l1", "c")?;
            let g = BoundParams::require(params.g, "coordinate_l1", "g")?;
            let lambda = BoundParams::require(params.lambda, "coordinate_l1", "lambda")?;
            let alpha = 4.0 * lambda / g + 2.0;
            let dim = u.len() as f64;
            let l1: f64 = u.iter().map(|ui| ui.abs()).sum();
            let linf = u.iter().fold(0.0f64, |m, ui| m.max(ui.abs()));
            let tail = l1 * ((4.0 * (1.0 + linf * dim / c).ln()).sqrt() + 2.0);
            Ok(g * (alpha * tf).sqrt() * (c + tail))
        }
        TheoremId::LeaExplicit => {
            let g = BoundParams::require(params.g, "lea_explicit", "g")?;
            let lambda = BoundParams::require(params.lambda, "lea_explicit", "lambda")?;
            let prior = params
                .prior
                .as_ref()
                .ok_or(HarnessError::MissingParameter {
                    theorem: "lea_explicit",
                    param: "prior",
                })?;
            if prior.len() != u.len() {
                return Err(HarnessError::BadSpec {
                    what: format!(
                        "prior dimension {} does not match comparator dimension {}",
                        prior.len(),
                        u.len()
                    ),
                });
            }
            let mut l1 = 0.0;
            let mut weighted_log = 0.0;
            for (ui, pi) in u.iter().zip(prior) {
                let diff = (ui - pi).abs();
                l1 += diff;
                weighted_log += diff * (1.0 + diff / pi).ln();
            }
            let envelope = ((32.0 * lambda * g + 8.0 * g * g) * tf).sqrt();
            Ok(envelope * (1.0 + 2.0 * l1 + 2.0 * (l1 * weighted_log).sqrt()))
        }
        TheoremId::MetaAdaptivity => {
            let c = BoundParams::require(params.c, "meta_adaptivity", "c")?;
            let g = BoundParams::require(params.g, "meta_adaptivity", "g")?;
            let lambda = BoundParams::require(params.lambda, "meta_adaptivity", "lambda")?;
            let sum_abs =
                BoundParams::require(params.sum_abs_gradients, "meta_adaptivity", "sum_abs_gradients")?;
            let u = scalar_u("meta_adaptivity")?.abs();
            let m = g.max(lambda);
            Ok((g + lambda) * c + u * (m + (m * sum_abs).sqrt()))
        }
    }
}

// ---------------------------------------------------------------------------
// Bound verification
// ---------------------------------------------------------------------------

/// One (adversary, comparator) verification result, reported at the prefix
/// with the least slack.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub theorem_id: TheoremId,
    pub adversary: String,
    pub comparator: Vec<f64>,
    /// Prefix length where the slack was tightest.
    pub horizon: u64,
    pub measured_regret: f64,
    pub bound_value: f64,
    /// `bound_value - measured_regret`.
    pub slack: f64,
    /// True for deliberate-failure (negative control) rows.
    pub control: bool,
}

impl BoundReport {
    /// A report is sound when the bound holds up to accumulated rounding.
    pub fn is_sound(&self) -> bool {
        self.slack >= -1e-9 * self.bound_value.abs().max(1.0)
    }
}

/// Runs each adversary once, then checks the theorem inequality at every
/// prefix `t <= horizon` for every comparator. One report per (adversary,
/// comparator), carrying the tightest prefix.
pub fn verify_bounds<F>(
    make_learner: F,
    adversaries: &[AdversarySpec],
    u_grid: &[Vec<f64>],
    horizon: u64,
    theorem: TheoremId,
    params: &BoundParams,
) -> Result<Vec<BoundReport>, HarnessError>
where
    F: Fn() -> Result<Box<dyn VectorLearner>, VectorError>,
{
    let mut reports = Vec::with_capacity(adversaries.len() * u_grid.len());
    for spec in adversaries {
        let mut learner = make_learner()?;
        let lambda = learner.switching_weight();
        let ledger = run_episode(learner.as_mut(), spec, horizon)?;
        let t_max = ledger.rounds();

        // prefix sums: cum_gx[t], cum_g[t], cum_switch[t] (index 0 = empty)
        let dim = ledger.dim();
        let mut cum_gx = vec![0.0; t_max + 1];
        let mut cum_g = vec![vec![0.0; dim]; t_max + 1];
        let mut cum_sw = vec![0.0; t_max + 1];
        for t in 1..=t_max {
            let x = &ledger.predictions[t - 1];
            let g = &ledger.gradients[t - 1];
            cum_gx[t] = cum_gx[t - 1] + inner(g, x);
            for i in 0..dim {
                cum_g[t][i] = cum_g[t - 1][i] + g[i];
            }
            cum_sw[t] = cum_sw[t - 1] + if t >= 2 { ledger.switch_costs[t - 2] } else { 0.0 };
        }

        for u in u_grid {
            if t_max == 0 {
                reports.push(BoundReport {
                    theorem_id: theorem,
                    adversary: spec.label(),
                    comparator: u.clone(),
                    horizon: 0,
                    measured_regret: 0.0,
                    bound_value: 0.0,
                    slack: 0.0,
                    control: false,
                });
                continue;
            }
            let mut worst: Option<BoundReport> = None;
            for t in 1..=t_max {
                let measured = cum_gx[t] - inner(&cum_g[t], u) + lambda * cum_sw[t];
                let bound = theoretical_bound(theorem, params, u, t as u64)?;
                let slack = bound - measured;
                if worst.as_ref().is_none_or(|w| slack < w.slack) {
                    worst = Some(BoundReport {
                        theorem_id: theorem,
                        adversary: spec.label(),
                        comparator: u.clone(),
                        horizon: t as u64,
                        measured_regret: measured,
                        bound_value: bound,
                        slack,
                        control: false,
                    });
                }
            }
            reports.push(worst.expect("t_max >= 1"));
        }
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Invariant sweeps
// ---------------------------------------------------------------------------

/// Pointwise inequalities that can be swept on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Per-round residual `delta <= 0` wherever `alpha >= 4*lambda/G + 2`.
    ResidualDelta,
    /// Trajectory movement bound
    /// `|x_t - x_{t+1}| <= gradS(t, S+1) - gradS(t, S-1)`.
    SwitchLemma,
    /// Backward-heat identity through the closed forms.
    HeatPde,
    /// Oddness and monotonicity of the prediction rule in `S`.
    MonotonePolicy,
}

impl SweepKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::ResidualDelta => "residual_delta",
            Self::SwitchLemma => "switch_lemma",
            Self::HeatPde => "heat_pde",
            Self::MonotonePolicy => "monotone_policy",
        }
    }

    /// Violation tolerance: a sweep passes when the worst violation stays
    /// below this.
    pub fn tolerance(&self) -> f64 {
        match self {
            Self::ResidualDelta => 1e-12,
            Self::SwitchLemma => 1e-12,
            Self::HeatPde => 1e-9,
            Self::MonotonePolicy => 1e-12,
        }
    }
}

/// Parameter grid for [`invariant_sweep`].
#[derive(Debug, Clone)]
pub struct SweepGrid {
    /// Round counts to visit.
    pub t_values: Vec<u64>,
    /// Number of statistic samples per round count.
    pub s_points: usize,
    pub lambdas: Vec<f64>,
    pub gs: Vec<f64>,
    pub cs: Vec<f64>,
    /// Force a diffusivity instead of the per-config `4*lambda/G + 2`
    /// (negative controls).
    pub alpha_override: Option<f64>,
    /// Episode length for the trajectory-based sweep.
    pub horizon: u64,
    /// Seed for the random member of the adversary suite.
    pub seed: u64,
}

impl SweepGrid {
    /// The default verification grid: `t in {1..1000} U {2^k, k <= 14}`,
    /// 200 statistic points per `t`, `lambda in {0, 0.1, 1, 10}`,
    /// `G in {1, 15}`, `C = 1`.
    pub fn default_grid() -> Self {
        let mut t_values: Vec<u64> = (1..=1000).collect();
        for k in 10..=14u32 {
            t_values.push(1 << k);
        }
        Self {
            t_values,
            s_points: 200,
            lambdas: vec![0.0, 0.1, 1.0, 10.0],
            gs: vec![1.0, 15.0],
            cs: vec![1.0],
            alpha_override: None,
            horizon: 1024,
            seed: 7,
        }
    }

    /// A deliberately mis-configured grid (`alpha = 1` with `lambda = 1`,
    /// `G = 1`) on which the residual sweep must find a violation.
    pub fn negative_control() -> Self {
        Self {
            lambdas: vec![1.0],
            gs: vec![1.0],
            alpha_override: Some(1.0),
            ..Self::default_grid()
        }
    }

    fn configs(&self) -> Result<Vec<LearnerConfig>, PotentialError> {
        let mut out = Vec::new();
        for &c in &self.cs {
            for &g in &self.gs {
                for &lambda in &self.lambdas {
                    out.push(match self.alpha_override {
                        Some(a) => LearnerConfig::with_alpha(c, g, lambda, a)?,
                        None => LearnerConfig::new(c, g, lambda)?,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Outcome of one invariant sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub cells_checked: u64,
    /// Grid points skipped because the overflow guard tripped (the potential
    /// is not representable in double precision there).
    pub cells_skipped: u64,
    /// Largest observed violation (negative means the inequality held with
    /// room everywhere).
    pub worst_violation: f64,
    /// Where the worst violation occurred.
    pub worst_witness: String,
    pub tolerance: f64,
    pub pass: bool,
}

/// Exhaustively evaluates the named inequality on the grid and reports the
/// worst violation. Violations are report content, not errors.
pub fn invariant_sweep(kind: SweepKind, grid: &SweepGrid) -> Result<SweepReport, HarnessError> {
    let mut cells = 0u64;
    let mut skipped = 0u64;
    let mut worst = f64::NEG_INFINITY;
    let mut witness = String::from("none");

    let mut record = |violation: f64, cells_ref: &mut u64, desc: &dyn Fn() -> String| {
        *cells_ref += 1;
        if violation > worst {
            worst = violation;
            witness = desc();
        }
    };

    match kind {
        SweepKind::ResidualDelta => {
            for cfg in grid.configs()? {
                for &t in &grid.t_values {
                    let span = (t - 1) as f64;
                    for s in symmetric_points(span, grid.s_points) {
                        match residual_delta(&cfg, &PotentialPoint::new(t as f64, s)) {
                            Ok(delta) => record(delta, &mut cells, &|| {
                                format!(
                                    "delta = {delta:.3e} at t={t}, s={s:.3}, lambda={}, G={}, alpha={}",
                                    cfg.lambda, cfg.g, cfg.alpha
                                )
                            }),
                            Err(PotentialError::RangeExceeded { .. }) => skipped += 1,
                            Err(e) => return Err(e.into()),
                        }
                    }
                }
            }
        }
        SweepKind::HeatPde => {
            for cfg in grid.configs()? {
                for &t in &grid.t_values {
                    for s in symmetric_points(t as f64, grid.s_points) {
                        let p = PotentialPoint::new(t as f64, s);
                        match analytic_derivs(&cfg, &p) {
                            Ok(d) => {
                                let residual =
                                    (d.d_t + cfg.alpha * d.d_ss).abs() / d.d_t.abs().max(1.0);
                                record(residual, &mut cells, &|| {
                                    format!(
                                        "scaled residual {residual:.3e} at t={t}, s={s:.3}, alpha={}",
                                        cfg.alpha
                                    )
                                });
                            }
                            Err(PotentialError::RangeExceeded { .. }) => skipped += 1,
                            Err(e) => return Err(e.into()),
                        }
                    }
                }
            }
        }
        SweepKind::MonotonePolicy => {
            for cfg in grid.configs()? {
                for &t in &grid.t_values {
                    let mut prev: Option<(f64, f64)> = None;
                    for s in symmetric_points(t as f64, grid.s_points) {
                        let d = match discrete_derivs(&cfg, &PotentialPoint::new(t as f64, s)) {
                            Ok(d) => d,
                            Err(PotentialError::RangeExceeded { .. }) => {
                                skipped += 1;
                                prev = None;
                                continue;
                            }
                            Err(e) => return Err(e.into()),
                        };
                        let neg = match discrete_derivs(&cfg, &PotentialPoint::new(t as f64, -s)) {
                            Ok(d) => d,
                            Err(PotentialError::RangeExceeded { .. }) => {
                                skipped += 1;
                                prev = None;
                                continue;
                            }
                            Err(e) => return Err(e.into()),
                        };
                        let odd_violation = (neg.grad_s + d.grad_s).abs();
                        record(odd_violation, &mut cells, &|| {
                            format!("oddness off by {odd_violation:.3e} at t={t}, s={s:.3}")
                        });
                        if let Some((s_prev, g_prev)) = prev {
                            // grad_s must be nondecreasing in s
                            let mono_violation = g_prev - d.grad_s;
                            record(mono_violation, &mut cells, &|| {
                                format!(
                                    "monotonicity off by {mono_violation:.3e} between s={s_prev:.3} and s={s:.3} at t={t}"
                                )
                            });
                        }
                        prev = Some((s, d.grad_s));
                    }
                }
            }
        }
        SweepKind::SwitchLemma => {
            for cfg in grid.configs()? {
                for spec in standard_adversaries(cfg.g, grid.seed) {
                    let mut learner =
                        ScalarAsVector(PotentialLearner::new(cfg));
                    let ledger = run_episode(&mut learner, &spec, grid.horizon)?;
                    let mut s = 0.0;
                    for t in 1..ledger.rounds() {
                        let d_up =
                            discrete_derivs(&cfg, &PotentialPoint::new(t as f64, s + 1.0))?;
                        let d_dn =
                            discrete_derivs(&cfg, &PotentialPoint::new(t as f64, s - 1.0))?;
                        let allowance = d_up.grad_s - d_dn.grad_s;
                        let step = ledger.switch_costs[t - 1];
                        let violation = step - allowance;
                        record(violation, &mut cells, &|| {
                            format!(
                                "step {step:.3e} exceeds allowance {allowance:.3e} by {violation:.3e} at t={t}, lambda={}, G={}, adversary={}",
                                cfg.lambda,
                                cfg.g,
                                spec.label()
                            )
                        });
                        s -= ledger.gradients[t - 1][0] / cfg.g;
                    }
                }
            }
        }
    }

    let tolerance = kind.tolerance();
    Ok(SweepReport {
        kind,
        cells_checked: cells,
        cells_skipped: skipped,
        worst_violation: worst,
        worst_witness: witness,
        tolerance,
        pass: worst <= tolerance,
    })
}

/// `n` evenly spaced points spanning `[-span, span]` (a single 0 when the
/// span collapses).
fn symmetric_points(span: f64, n: usize) -> Vec<f64> {
    if span <= 0.0 || n <= 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|j| -span + 2.0 * span * j as f64 / (n - 1) as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// Report writers
// ---------------------------------------------------------------------------

/// JSON report file: RNG identifier plus one object per bound report.
pub fn write_reports_json(path: &Path, reports: &[BoundReport]) -> Result<(), HarnessError> {
    #[derive(Serialize)]
    struct Document<'a> {
        rng: &'static str,
        reports: &'a [BoundReport],
    }
    let doc = Document {
        rng: RNG_ALGORITHM,
        reports,
    };
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, &doc)
        .map_err(|e| HarnessError::BadSpec { what: e.to_string() })?;
    file.write_all(b"\n")?;
    Ok(())
}

/// CSV report file, one row per bound report. Multi-dimensional comparators
/// are semicolon-joined in the `u` column.
pub fn write_reports_csv(path: &Path, reports: &[BoundReport]) -> Result<(), HarnessError> {
    let mut out = String::from("theorem_id,adversary,u,T,measured,bound,slack\n");
    for r in reports {
        let u = r
            .comparator
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.theorem_id.label(),
            r.adversary,
            u,
            r.horizon,
            r.measured_regret,
            r.bound_value,
            r.slack
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// JSON file for sweep reports.
pub fn write_sweeps_json(path: &Path, reports: &[SweepReport]) -> Result<(), HarnessError> {
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, reports)
        .map_err(|e| HarnessError::BadSpec { what: e.to_string() })?;
    file.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::PotentialLearner;

    fn fresh_potential(c: f64, g: f64, lambda: f64) -> ScalarAsVector<PotentialLearner> {
        ScalarAsVector(PotentialLearner::new(LearnerConfig::new(c, g, lambda).unwrap()))
    }

    #[test]
    fn empty_episode_has_zero_regret() {
        let mut l = fresh_potential(1.0, 1.0, 0.0);
        let ledger = run_episode(&mut l, &AdversarySpec::sign(1.0), 0).unwrap();
        assert_eq!(ledger.rounds(), 0);
        assert_eq!(ledger.augmented_regret(&[0.0]).unwrap(), 0.0);
        assert_eq!(ledger.augmented_regret(&[5.0]).unwrap(), 0.0);
    }

    #[test]
    fn sign_adversary_tie_breaks_positive() {
        let mut l = fresh_potential(1.0, 1.0, 0.0);
        let ledger = run_episode(&mut l, &AdversarySpec::sign(1.0), 1).unwrap();
        assert_eq!(ledger.predictions[0][0], 0.0);
        assert_eq!(ledger.gradients[0][0], 1.0);
        // per-round loss g * x = 0
        assert_eq!(ledger.augmented_regret(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn constant_adversary_grows_positive_predictions() {
        let mut l = fresh_potential(1.0, 1.0, 0.0);
        let ledger = run_episode(&mut l, &AdversarySpec::constant(1.0), 16).unwrap();
        let xs: Vec<f64> = ledger.predictions.iter().map(|x| x[0]).collect();
        for t in 1..xs.len() {
            assert!(xs[t] >= xs[t - 1] - 1e-12, "not monotone at {t}: {xs:?}");
        }
        assert!(*xs.last().unwrap() > 0.0);
    }

    #[test]
    fn augmented_regret_hand_cases() {
        let ledger = EpisodeLedger {
            predictions: vec![vec![0.0]],
            gradients: vec![vec![1.0]],
            switch_costs: vec![],
            lambda: 0.0,
            g_bound: 1.0,
        };
        assert_eq!(ledger.augmented_regret(&[0.0]).unwrap(), 0.0);
        assert_eq!(ledger.augmented_regret(&[1.0]).unwrap(), -1.0);

        let ledger = EpisodeLedger {
            predictions: vec![vec![0.0], vec![1.0]],
            gradients: vec![vec![0.0], vec![0.0]],
            switch_costs: vec![1.0],
            lambda: 0.5,
            g_bound: 1.0,
        };
        assert_eq!(ledger.augmented_regret(&[0.0]).unwrap(), 0.5);
    }

    #[test]
    fn ledger_switch_costs_consistent() {
        let mut l = fresh_potential(1.0, 1.0, 0.5);
        let ledger = run_episode(&mut l, &AdversarySpec::uniform(1.0, 3), 64).unwrap();
        assert_eq!(ledger.switch_costs.len(), 63);
        assert_eq!(ledger.switch_cost_drift(), 0.0);
    }

    #[test]
    fn seeded_episodes_are_bit_identical() {
        let run = || {
            let mut l = fresh_potential(1.0, 1.0, 0.1);
            run_episode(&mut l, &AdversarySpec::uniform(1.0, 42), 128).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.predictions, b.predictions);
        assert_eq!(a.gradients, b.gradients);
    }

    #[test]
    fn magnitude_above_lipschitz_rejected() {
        let mut l = fresh_potential(1.0, 1.0, 0.0);
        assert!(run_episode(&mut l, &AdversarySpec::sign(2.0), 4).is_err());
    }

    #[test]
    fn theorem_rhs_values() {
        let p = BoundParams::olo(1.0, 1.0, 0.0);
        let b0 = theoretical_bound(TheoremId::Main, &p, &[0.0], 100).unwrap();
        assert!((b0 - 200.0f64.sqrt()).abs() <= 1e-12);
        let b1 = theoretical_bound(TheoremId::Main, &p, &[1.0], 100).unwrap();
        assert!((b1 - 65.97460732150235).abs() <= 1e-10);

        let p = BoundParams::interval(1.0, 1.0);
        let b = theoretical_bound(TheoremId::IntervalSwitching, &p, &[], 4).unwrap();
        assert!((b - 205.2648057818774).abs() <= 1e-10);
    }

    #[test]
    fn theorem_rhs_missing_parameter() {
        let p = BoundParams::default();
        assert!(matches!(
            theoretical_bound(TheoremId::Main, &p, &[0.0], 10),
            Err(HarnessError::MissingParameter { .. })
        ));
    }

    #[test]
    fn baseline_rhs_finite_at_zero_comparator() {
        let p = BoundParams::olo(1.0, 1.0, 0.5);
        let b = theoretical_bound(TheoremId::Baseline, &p, &[0.0], 10).unwrap();
        assert_eq!(b, 1.5);
    }

    #[test]
    fn verify_bounds_sound_for_potential_learner() {
        let params = BoundParams::olo(1.0, 1.0, 0.1);
        let reports = verify_bounds(
            || {
                Ok(Box::new(ScalarAsVector(PotentialLearner::new(
                    LearnerConfig::new(1.0, 1.0, 0.1).unwrap(),
                ))))
            },
            &standard_adversaries(1.0, 11),
            &scalar_comparator_grid(),
            256,
            TheoremId::Main,
            &params,
        )
        .unwrap();
        assert_eq!(reports.len(), 4 * 11);
        for r in &reports {
            assert!(r.is_sound(), "unsound: {r:?}");
        }
    }

    #[test]
    fn verify_bounds_zero_horizon() {
        let params = BoundParams::olo(1.0, 1.0, 0.0);
        let reports = verify_bounds(
            || {
                Ok(Box::new(ScalarAsVector(PotentialLearner::new(
                    LearnerConfig::new(1.0, 1.0, 0.0).unwrap(),
                ))))
            },
            &[AdversarySpec::sign(1.0)],
            &scalar_comparator_grid(),
            0,
            TheoremId::Main,
            &params,
        )
        .unwrap();
        for r in &reports {
            assert_eq!(r.measured_regret, 0.0);
            assert!(r.is_sound());
        }
    }

    #[test]
    fn misconfigured_learner_found_unsound() {
        // alpha = 1 with lambda = 1: the potential is too narrow for the
        // switching charge, and the sign adversary exposes it
        let params = BoundParams::olo(1.0, 1.0, 1.0);
        let reports = verify_bounds(
            || {
                Ok(Box::new(ScalarAsVector(PotentialLearner::new(
                    LearnerConfig::with_alpha(1.0, 1.0, 1.0, 1.0).unwrap(),
                ))))
            },
            &[AdversarySpec::sign(1.0)],
            &scalar_comparator_grid(),
            512,
            TheoremId::Main,
            &params,
        )
        .unwrap();
        assert!(reports.iter().any(|r| !r.is_sound()));
    }

    #[test]
    fn residual_sweep_small_grid_passes() {
        let grid = SweepGrid {
            t_values: (1..=64).collect(),
            s_points: 41,
            lambdas: vec![0.0, 1.0],
            gs: vec![1.0],
            cs: vec![1.0],
            alpha_override: None,
            horizon: 64,
            seed: 5,
        };
        let report = invariant_sweep(SweepKind::ResidualDelta, &grid).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.worst_violation <= 1e-12);
    }

    #[test]
    fn residual_sweep_negative_control_fails() {
        let grid = SweepGrid {
            t_values: (1..=16).collect(),
            ..SweepGrid::negative_control()
        };
        let report = invariant_sweep(SweepKind::ResidualDelta, &grid).unwrap();
        assert!(!report.pass);
        assert!(report.worst_violation > 0.0);
    }

    #[test]
    fn heat_and_monotone_sweeps_pass_small_grid() {
        let grid = SweepGrid {
            t_values: vec![1, 2, 3, 5, 10, 100],
            s_points: 31,
            lambdas: vec![0.0, 0.5],
            gs: vec![1.0],
            cs: vec![1.0, 10.0],
            alpha_override: None,
            horizon: 32,
            seed: 5,
        };
        assert!(invariant_sweep(SweepKind::HeatPde, &grid).unwrap().pass);
        assert!(
            invariant_sweep(SweepKind::MonotonePolicy, &grid)
                .unwrap()
                .pass
        );
        assert!(invariant_sweep(SweepKind::SwitchLemma, &grid).unwrap().pass);
    }

    #[test]
    fn report_files_round_trip() {
        let dir = std::env::temp_dir().join("adaswitch_harness_test");
        std::fs::create_dir_all(&dir).unwrap();
        let reports = vec![BoundReport {
            theorem_id: TheoremId::Main,
            adversary: "sign".into(),
            comparator: vec![1.0, 2.0],
            horizon: 7,
            measured_regret: 1.5,
            bound_value: 2.5,
            slack: 1.0,
            control: false,
        }];
        let json = dir.join("reports.json");
        let csv = dir.join("reports.csv");
        write_reports_json(&json, &reports).unwrap();
        write_reports_csv(&csv, &reports).unwrap();
        let text = std::fs::read_to_string(&json).unwrap();
        assert!(text.contains("\"rng\": \"chacha8\""));
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("theorem_id,adversary,u,T,measured,bound,slack"));
        assert!(text.contains("main,sign,1;2,7,1.5,2.5,1"));
    }
}
