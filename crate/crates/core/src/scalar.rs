//! One-dimensional learners with switching-cost guarantees.
//!
//! Every learner is a single-owner state machine with a strict
//! predict/observe alternation: `predict()` returns `x_t`, `observe(g)`
//! consumes the round's loss gradient. Out-of-order calls and gradients
//! beyond the declared Lipschitz bound are rejected.
//!
//! - [`PotentialLearner`] — the switching-adjusted potential method: predicts
//!   the discrete spatial derivative of the potential at the running
//!   statistic.
//! - [`BaselineLearner`] — the prior coin-betting approach: a hard-thresholded
//!   betting fraction applied to a wealth sequence defined by a per-round
//!   fixed-point equation.
//! - [`ConstrainedLearner`] — black-box reduction to an interval domain via
//!   projection and a surrogate gradient.
//! - [`DoublingLearner`] — restarts the potential learner on doubling epochs
//!   with geometrically shrinking confidence, trading loss for regret.
//! - [`MetaLearner`] — gradient-adaptive wrapper that freezes its output and
//!   forwards accumulated gradients to the base only when they grow past
//!   `max(lambda, G)`.

use std::fmt;

use crate::potential::{discrete_derivs, LearnerConfig, PotentialError, PotentialPoint};

/// Errors from learner lifecycle and updates.
#[derive(Debug, Clone, PartialEq)]
pub enum LearnerError {
    /// predict/observe called out of turn.
    OutOfOrder { expected: &'static str },
    /// Observed gradient outside `[-G, G]` (or not finite).
    GradientBound { g: f64, bound: f64 },
    /// The wealth fixed point has no guaranteed unique solution
    /// (`lambda * |beta_next| >= 1`).
    InfeasibleFixedPoint { lambda_beta: f64 },
    /// Interval domain is empty, degenerate, or misses its anchor.
    BadDomain { what: &'static str },
    /// A wrapped base learner cannot absorb the losses this wrapper emits.
    BaseLipschitzTooSmall { required: f64, actual: f64 },
    /// Numeric failure in the potential layer.
    Numeric(PotentialError),
}

impl fmt::Display for LearnerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OutOfOrder { expected } => {
                write!(f, "lifecycle violation: expected {expected}")
            }
            Self::GradientBound { g, bound } => {
                write!(f, "gradient {g} outside [-{bound}, {bound}]")
            }
            Self::InfeasibleFixedPoint { lambda_beta } => write!(
                f,
                "wealth fixed point infeasible: lambda*|beta_next| = {lambda_beta} >= 1"
            ),
            Self::BadDomain { what } => write!(f, "bad domain: {what}"),
            Self::BaseLipschitzTooSmall { required, actual } => write!(
                f,
                "base learner accepts gradients up to {actual}, wrapper needs {required}"
            ),
            Self::Numeric(e) => write!(f, "numeric error: {e}"),
        }
    }
}

impl std::error::Error for LearnerError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::Numeric(e) => Some(e),
            _ => None,
        }
    }
}

impl From<PotentialError> for LearnerError {
    fn from(e: PotentialError) -> Self {
        Self::Numeric(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Predict,
    Observe,
}

/// A one-dimensional online learner under the strict alternation protocol.
pub trait ScalarLearner {
    /// Returns the prediction `x_t` for the current round.
    fn predict(&mut self) -> Result<f64, LearnerError>;
    /// Consumes the round's loss gradient.
    fn observe(&mut self, g: f64) -> Result<(), LearnerError>;
    /// Largest gradient magnitude this learner accepts.
    fn lipschitz(&self) -> f64;
    /// Switching-cost weight the learner was configured for.
    fn switching_weight(&self) -> f64;
}

fn check_gradient(g: f64, bound: f64) -> Result<(), LearnerError> {
    if !g.is_finite() || g.abs() > bound {
        return Err(LearnerError::GradientBound { g, bound });
    }
    Ok(())
}

/// Round index and sufficient statistic of the potential learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarState {
    /// Next round index (1-based).
    pub t: u64,
    /// Sufficient statistic `S_{t-1}` (accumulates `-g_i / G`).
    pub s: f64,
    /// Most recent prediction, for ledger accounting.
    pub last_prediction: f64,
}

/// The switching-adjusted potential learner.
///
/// Predicts the discrete derivative of the potential at `(t, S_{t-1})` and
/// updates `S_t = S_{t-1} - g_t / G`.
#[derive(Debug, Clone)]
pub struct PotentialLearner {
    cfg: LearnerConfig,
    t: u64,
    s: f64,
    last_x: f64,
    phase: Phase,
}

impl PotentialLearner {
    pub fn new(cfg: LearnerConfig) -> Self {
        Self {
            cfg,
            t: 1,
            s: 0.0,
            last_x: 0.0,
            phase: Phase::Predict,
        }
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn state(&self) -> ScalarState {
        ScalarState {
            t: self.t,
            s: self.s,
            last_prediction: self.last_x,
        }
    }
}

impl ScalarLearner for PotentialLearner {
    fn predict(&mut self) -> Result<f64, LearnerError> {
        if self.phase != Phase::Predict {
            return Err(LearnerError::OutOfOrder { expected: "observe" });
        }
        let d = discrete_derivs(&self.cfg, &PotentialPoint::new(self.t as f64, self.s))?;
        self.phase = Phase::Observe;
        self.last_x = d.grad_s;
        Ok(d.grad_s)
    }

    fn observe(&mut self, g: f64) -> Result<(), LearnerError> {
        if self.phase != Phase::Observe {
            return Err(LearnerError::OutOfOrder { expected: "predict" });
        }
        check_gradient(g, self.cfg.g)?;
        self.s -= g / self.cfg.g;
        self.t += 1;
        self.phase = Phase::Predict;
        Ok(())
    }

    fn lipschitz(&self) -> f64 {
        self.cfg.g
    }

    fn switching_weight(&self) -> f64 {
        self.cfg.lambda
    }
}

/// Internal variables of the coin-betting baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineState {
    /// Current wealth `Wealth_{t-1}`.
    pub wealth: f64,
    /// Current betting fraction `beta_t`.
    pub beta: f64,
    /// Running gradient sum.
    pub grad_sum: f64,
    /// Next round index (1-based).
    pub t: u64,
    /// Effective Lipschitz constant `K = G + lambda`.
    pub k: f64,
}

/// Solves the wealth recursion
///
/// ```text
/// W = (1 - g*beta_t) * W_prev - lambda * |beta_t*W_prev - beta_next*W|
/// ```
///
/// by case analysis on the sign of the absolute-value argument. Each branch
/// is linear; the branch whose solution is sign-consistent is returned, and
/// when both are consistent they coincide at the kink. Requires
/// `lambda * |beta_next| < 1`, which the betting-fraction threshold
/// guarantees.
pub fn solve_wealth_fixed_point(
    wealth_prev: f64,
    g: f64,
    beta_t: f64,
    beta_next: f64,
    lambda: f64,
) -> Result<f64, LearnerError> {
    let lambda_beta = lambda * beta_next.abs();
    if lambda_beta >= 1.0 {
        return Err(LearnerError::InfeasibleFixedPoint { lambda_beta });
    }
    let a = (1.0 - g * beta_t) * wealth_prev;
    let b = beta_t * wealth_prev;
    let w_pos = (a - lambda * b) / (1.0 - lambda * beta_next);
    let w_neg = (a + lambda * b) / (1.0 + lambda * beta_next);
    let pos_ok = b - beta_next * w_pos >= 0.0;
    let neg_ok = b - beta_next * w_neg <= 0.0;
    match (pos_ok, neg_ok) {
        (true, true) => {
            // both branches sit on the kink; they agree up to rounding
            debug_assert!((w_pos - w_neg).abs() <= 1e-12 * w_pos.abs().max(1.0));
            Ok(w_pos)
        }
        (true, false) => Ok(w_pos),
        (false, true) => Ok(w_neg),
        (false, false) => {
            // rounding pushed both residuals across the kink; keep the branch
            // that satisfies the recursion more closely
            let res = |w: f64| (w - (a - lambda * (b - beta_next * w).abs())).abs();
            Ok(if res(w_pos) <= res(w_neg) { w_pos } else { w_neg })
        }
    }
}

/// The coin-betting baseline.
///
/// Keeps a wealth sequence starting at `C * K` with `K = G + lambda`, bets a
/// fraction of it capped by `1 / (K * sqrt(2t))`, and settles each round's
/// wealth through [`solve_wealth_fixed_point`]. First prediction is 0.
#[derive(Debug, Clone)]
pub struct BaselineLearner {
    g_lip: f64,
    lambda: f64,
    k: f64,
    wealth: f64,
    beta: f64,
    grad_sum: f64,
    t: u64,
    next_x: f64,
    phase: Phase,
}

impl BaselineLearner {
    pub fn new(c: f64, g: f64, lambda: f64) -> Result<Self, LearnerError> {
        // reuse the shared hyperparameter validation
        LearnerConfig::new(c, g, lambda)?;
        let k = g + lambda;
        Ok(Self {
            g_lip: g,
            lambda,
            k,
            wealth: c * k,
            beta: 0.0,
            grad_sum: 0.0,
            t: 1,
            next_x: 0.0,
            phase: Phase::Predict,
        })
    }

    pub fn state(&self) -> BaselineState {
        BaselineState {
            wealth: self.wealth,
            beta: self.beta,
            grad_sum: self.grad_sum,
            t: self.t,
            k: self.k,
        }
    }
}

impl ScalarLearner for BaselineLearner {
    fn predict(&mut self) -> Result<f64, LearnerError> {
        if self.phase != Phase::Predict {
            return Err(LearnerError::OutOfOrder { expected: "observe" });
        }
        self.phase = Phase::Observe;
        Ok(self.next_x)
    }

    fn observe(&mut self, g: f64) -> Result<(), LearnerError> {
        if self.phase != Phase::Observe {
            return Err(LearnerError::OutOfOrder { expected: "predict" });
        }
        check_gradient(g, self.g_lip)?;
        self.grad_sum += g;
        let t = self.t as f64;
        let beta_hat = -self.grad_sum / (2.0 * self.k * self.k * t);
        let cap = 1.0 / (self.k * (2.0 * t).sqrt());
        let beta_next = beta_hat.clamp(-cap, cap);
        self.wealth =
            solve_wealth_fixed_point(self.wealth, g, self.beta, beta_next, self.lambda)?;
        self.next_x = beta_next * self.wealth;
        self.beta = beta_next;
        self.t += 1;
        self.phase = Phase::Predict;
        Ok(())
    }

    fn lipschitz(&self) -> f64 {
        self.g_lip
    }

    fn switching_weight(&self) -> f64 {
        self.lambda
    }
}

/// A closed interval (possibly half-open to infinity) with an anchor point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainInterval {
    pub lower: f64,
    pub upper: f64,
    /// Anchor `x*`: the unconstrained base is recentered here.
    pub offset: f64,
}

impl DomainInterval {
    pub fn new(lower: f64, upper: f64, offset: f64) -> Result<Self, LearnerError> {
        if lower.is_nan() || upper.is_nan() || !offset.is_finite() {
            return Err(LearnerError::BadDomain {
                what: "bounds must not be NaN and the anchor must be finite",
            });
        }
        if !(lower < upper) {
            return Err(LearnerError::BadDomain {
                what: "need lower < upper (degenerate intervals rejected)",
            });
        }
        if offset < lower || offset > upper {
            return Err(LearnerError::BadDomain {
                what: "anchor must lie inside the interval",
            });
        }
        Ok(Self { lower, upper, offset })
    }

    /// `[0, +inf)` anchored at `offset`.
    pub fn nonnegative(offset: f64) -> Result<Self, LearnerError> {
        Self::new(0.0, f64::INFINITY, offset)
    }

    pub fn clip(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }

    pub fn diameter(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Constrained-domain reduction over an unconstrained base learner.
///
/// Predicts the projection of the recentered base prediction onto the
/// interval; forwards the observed gradient unchanged when it points the
/// unconstrained iterate at least as steeply as the projected one
/// (`g * (x~ + x*) >= g * x`), and zero otherwise.
#[derive(Debug, Clone)]
pub struct ConstrainedLearner<B> {
    base: B,
    dom: DomainInterval,
    pending: Option<f64>,
}

impl<B: ScalarLearner> ConstrainedLearner<B> {
    pub fn new(base: B, dom: DomainInterval) -> Self {
        Self {
            base,
            dom,
            pending: None,
        }
    }

    pub fn domain(&self) -> &DomainInterval {
        &self.dom
    }

    pub fn base(&self) -> &B {
        &self.base
    }
}

impl<B: ScalarLearner> ScalarLearner for ConstrainedLearner<B> {
    fn predict(&mut self) -> Result<f64, LearnerError> {
        let shifted = self.base.predict()? + self.dom.offset;
        self.pending = Some(shifted);
        Ok(self.dom.clip(shifted))
    }

    fn observe(&mut self, g: f64) -> Result<(), LearnerError> {
        check_gradient(g, self.base.lipschitz())?;
        let shifted = match self.pending.take() {
            Some(v) => v,
            None => return Err(LearnerError::OutOfOrder { expected: "predict" }),
        };
        let x = self.dom.clip(shifted);
        let surrogate = if g * shifted >= g * x { g } else { 0.0 };
        self.base.observe(surrogate)
    }

    fn lipschitz(&self) -> f64 {
        self.base.lipschitz()
    }

    fn switching_weight(&self) -> f64 {
        self.base.switching_weight()
    }
}

/// Doubling-epoch conversion of the potential learner's loss-regret trade-off.
///
/// Epoch `m` covers rounds `[2^m, 2^(m+1) - 1]` and runs a fresh
/// [`PotentialLearner`] with confidence `C * 2^-m` and the conservative
/// diffusivity `8*lambda/G + 2`. Every epoch starts back at prediction 0, and
/// the boundary switch is charged at its true cost in any ledger built on
/// top.
#[derive(Debug, Clone)]
pub struct DoublingLearner {
    c: f64,
    g_lip: f64,
    lambda: f64,
    epoch: u32,
    rounds_left: u64,
    inner: PotentialLearner,
}

impl DoublingLearner {
    pub fn new(c: f64, g: f64, lambda: f64) -> Result<Self, LearnerError> {
        let cfg = LearnerConfig::for_doubling(c, g, lambda)?;
        Ok(Self {
            c,
            g_lip: g,
            lambda,
            epoch: 0,
            rounds_left: 1,
            inner: PotentialLearner::new(cfg),
        })
    }

    /// Current epoch index `m`.
    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    /// Confidence parameter of the active epoch, `C * 2^-m`.
    pub fn epoch_hyperparameter(&self) -> f64 {
        self.inner.config().c
    }
}

impl ScalarLearner for DoublingLearner {
    fn predict(&mut self) -> Result<f64, LearnerError> {
        self.inner.predict()
    }

    fn observe(&mut self, g: f64) -> Result<(), LearnerError> {
        self.inner.observe(g)?;
        self.rounds_left -= 1;
        if self.rounds_left == 0 {
            self.epoch += 1;
            let c_m = self.c * 0.5f64.powi(self.epoch as i32);
            let cfg = LearnerConfig::for_doubling(c_m, self.g_lip, self.lambda)?;
            self.inner = PotentialLearner::new(cfg);
            self.rounds_left = 1u64 << self.epoch.min(62);
        }
        Ok(())
    }

    fn lipschitz(&self) -> f64 {
        self.g_lip
    }

    fn switching_weight(&self) -> f64 {
        self.lambda
    }
}

/// Gradient-adaptive wrapper.
///
/// Repeats the base learner's current output while accumulating observed
/// gradients into `Z`; once `|Z| > max(lambda, G)` the whole accumulator is
/// fed to the base as a single loss and the base's next output is adopted.
/// Between flushes consecutive predictions are identical, so the per-step
/// switching cost is zero.
#[derive(Debug, Clone)]
pub struct MetaLearner<B> {
    base: B,
    g_lip: f64,
    lambda: f64,
    threshold: f64,
    z: f64,
    current: Option<f64>,
    phase: Phase,
}

impl<B: ScalarLearner> MetaLearner<B> {
    /// Wraps an existing base learner. The base must accept gradients of
    /// magnitude up to `max(lambda, g) + g`, since a flush can carry an
    /// almost-full accumulator plus one more observation.
    pub fn new(base: B, g: f64, lambda: f64) -> Result<Self, LearnerError> {
        LearnerConfig::new(1.0, g, lambda)?;
        let required = lambda.max(g) + g;
        if base.lipschitz() < required {
            return Err(LearnerError::BaseLipschitzTooSmall {
                required,
                actual: base.lipschitz(),
            });
        }
        Ok(Self {
            base,
            g_lip: g,
            lambda,
            threshold: lambda.max(g),
            z: 0.0,
            current: None,
            phase: Phase::Predict,
        })
    }

    /// Accumulated, not-yet-flushed gradient mass.
    pub fn pending_gradient(&self) -> f64 {
        self.z
    }
}

impl MetaLearner<BaselineLearner> {
    /// Builds the wrapper around a fresh [`BaselineLearner`] constructed with
    /// the Lipschitz constant `max(lambda, g) + g` it needs.
    pub fn with_baseline(c: f64, g: f64, lambda: f64) -> Result<Self, LearnerError> {
        let base = BaselineLearner::new(c, lambda.max(g) + g, lambda)?;
        Self::new(base, g, lambda)
    }
}

impl MetaLearner<PotentialLearner> {
    /// Builds the wrapper around a fresh [`PotentialLearner`] constructed
    /// with the Lipschitz constant `max(lambda, g) + g` it needs.
    pub fn with_potential(c: f64, g: f64, lambda: f64) -> Result<Self, LearnerError> {
        let cfg = LearnerConfig::new(c, lambda.max(g) + g, lambda)?;
        Self::new(PotentialLearner::new(cfg), g, lambda)
    }
}

impl<B: ScalarLearner> ScalarLearner for MetaLearner<B> {
    fn predict(&mut self) -> Result<f64, LearnerError> {
        if self.phase != Phase::Predict {
            return Err(LearnerError::OutOfOrder { expected: "observe" });
        }
        if self.current.is_none() {
            self.current = Some(self.base.predict()?);
        }
        self.phase = Phase::Observe;
        Ok(self.current.unwrap())
    }

    fn observe(&mut self, g: f64) -> Result<(), LearnerError> {
        if self.phase != Phase::Observe {
            return Err(LearnerError::OutOfOrder { expected: "predict" });
        }
        check_gradient(g, self.g_lip)?;
        self.z += g;
        if self.z.abs() > self.threshold {
            self.base.observe(self.z)?;
            self.current = Some(self.base.predict()?);
            self.z = 0.0;
        }
        self.phase = Phase::Predict;
        Ok(())
    }

    fn lipschitz(&self) -> f64 {
        self.g_lip
    }

    fn switching_weight(&self) -> f64 {
        self.lambda
    }
}
