//! Multi-dimensional learners under L1 switching costs.
//!
//! [`CoordinateWise`] runs one scalar learner per coordinate with the
//! confidence budget split evenly (`C/d` each); regret and switching cost
//! both decompose coordinate-wise under the L1 norm.
//!
//! [`LeaLearner`] converts the one-dimensional machinery to the probability
//! simplex: each coordinate runs a [`ConstrainedLearner`] on `[0, inf)`
//! anchored and budgeted at its prior mass, the weight vector is projected
//! onto the simplex by [`lea_project`] (orthogonal lift below the simplex,
//! radial scaling above — the split is what keeps switching costs small near
//! the origin), and gradients travel back through a shifted surrogate
//! ([`lea_surrogate`]).

use std::fmt;

use crate::potential::LearnerConfig;
use crate::scalar::{
    BaselineLearner, ConstrainedLearner, DomainInterval, LearnerError, PotentialLearner,
    ScalarLearner,
};

/// Errors specific to the vector layer.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorError {
    DimensionMismatch { expected: usize, got: usize },
    /// Weight or probability mass that must be nonnegative was not.
    NegativeWeight { index: usize, value: f64 },
    /// A simplex point could not be formed (zero or non-finite mass).
    BadSimplex { what: &'static str },
    /// Prior coordinate is zero but must lie in the relative interior.
    ZeroPrior { index: usize },
    /// KL-type divergence undefined: `u` puts mass where `p` has none.
    SupportViolation { index: usize },
    /// Error from an underlying scalar learner.
    Learner(LearnerError),
}

impl fmt::Display for VectorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Self::NegativeWeight { index, value } => {
                write!(f, "weight {value} at coordinate {index} is negative")
            }
            Self::BadSimplex { what } => write!(f, "invalid simplex point: {what}"),
            Self::ZeroPrior { index } => {
                write!(
                    f,
                    "prior coordinate {index} is zero; need a strictly positive prior"
                )
            }
            Self::SupportViolation { index } => write!(
                f,
                "divergence undefined: comparator has mass at coordinate {index} where the reference has none"
            ),
            Self::Learner(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for VectorError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::Learner(e) => Some(e),
            _ => None,
        }
    }
}

impl From<LearnerError> for VectorError {
    fn from(e: LearnerError) -> Self {
        Self::Learner(e)
    }
}

impl From<crate::potential::PotentialError> for VectorError {
    fn from(e: crate::potential::PotentialError) -> Self {
        Self::Learner(LearnerError::Numeric(e))
    }
}

/// A point on the probability simplex: nonnegative weights summing to one.
/// Construction renormalizes, so downstream code can rely on the sum exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    weights: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(weights: Vec<f64>) -> Result<Self, VectorError> {
        if weights.is_empty() {
            return Err(VectorError::BadSimplex { what: "empty" });
        }
        let mut sum = 0.0;
        for (i, w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(VectorError::BadSimplex {
                    what: "non-finite weight",
                });
            }
            if *w < 0.0 {
                return Err(VectorError::NegativeWeight { index: i, value: *w });
            }
            sum += w;
        }
        if sum <= 0.0 {
            return Err(VectorError::BadSimplex {
                what: "zero total mass",
            });
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(Self { weights })
    }

    pub fn uniform(d: usize) -> Result<Self, VectorError> {
        Self::new(vec![1.0; d])
    }

    /// Vertex `e_i` of the simplex.
    pub fn vertex(d: usize, i: usize) -> Result<Self, VectorError> {
        if i >= d {
            return Err(VectorError::DimensionMismatch { expected: d, got: i });
        }
        let mut w = vec![0.0; d];
        w[i] = 1.0;
        Self::new(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

/// Nonnegative pre-projection outputs of the per-coordinate base learners.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, VectorError> {
        for (i, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return Err(VectorError::NegativeWeight { index: i, value: *w });
            }
        }
        Ok(Self(weights))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// A multi-dimensional online learner under the alternation protocol.
pub trait VectorLearner {
    fn predict(&mut self) -> Result<Vec<f64>, VectorError>;
    fn observe(&mut self, g: &[f64]) -> Result<(), VectorError>;
    fn dim(&self) -> usize;
    /// Largest per-coordinate gradient magnitude accepted.
    fn lipschitz(&self) -> f64;
    /// Switching-cost weight of the induced L1 ledger.
    fn switching_weight(&self) -> f64;
}

/// Runs a scalar learner as a one-dimensional vector learner.
pub struct ScalarAsVector<L>(pub L);

impl<L: ScalarLearner> VectorLearner for ScalarAsVector<L> {
    fn predict(&mut self) -> Result<Vec<f64>, VectorError> {
        Ok(vec![self.0.predict()?])
    }

    fn observe(&mut self, g: &[f64]) -> Result<(), VectorError> {
        if g.len() != 1 {
            return Err(VectorError::DimensionMismatch {
                expected: 1,
                got: g.len(),
            });
        }
        Ok(self.0.observe(g[0])?)
    }

    fn dim(&self) -> usize {
        1
    }

    fn lipschitz(&self) -> f64 {
        self.0.lipschitz()
    }

    fn switching_weight(&self) -> f64 {
        self.0.switching_weight()
    }
}

/// Coordinate-wise product of independent scalar learners.
pub struct CoordinateWise<L> {
    learners: Vec<L>,
    g_lip: f64,
    lambda: f64,
}

impl CoordinateWise<PotentialLearner> {
    /// d-dimensional OLO with L1 switching costs: one potential learner per
    /// coordinate, each with confidence `C/d` and `alpha = 4*lambda/G + 2`.
    pub fn potential(d: usize, c: f64, g: f64, lambda: f64) -> Result<Self, VectorError> {
        if d == 0 {
            return Err(VectorError::BadSimplex { what: "d must be >= 1" });
        }
        let cfg = LearnerConfig::new(c / d as f64, g, lambda)?;
        Ok(Self {
            learners: (0..d).map(|_| PotentialLearner::new(cfg)).collect(),
            g_lip: g,
            lambda,
        })
    }
}

impl CoordinateWise<BaselineLearner> {
    /// Coordinate-wise extension of the coin-betting baseline, with the same
    /// `C/d` confidence split as the potential construction.
    pub fn baseline(d: usize, c: f64, g: f64, lambda: f64) -> Result<Self, VectorError> {
        if d == 0 {
            return Err(VectorError::BadSimplex { what: "d must be >= 1" });
        }
        let learners = (0..d)
            .map(|_| BaselineLearner::new(c / d as f64, g, lambda))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            learners,
            g_lip: g,
            lambda,
        })
    }
}

impl<L: ScalarLearner> VectorLearner for CoordinateWise<L> {
    fn predict(&mut self) -> Result<Vec<f64>, VectorError> {
        self.learners
            .iter_mut()
            .map(|l| l.predict().map_err(VectorError::from))
            .collect()
    }

    fn observe(&mut self, g: &[f64]) -> Result<(), VectorError> {
        if g.len() != self.learners.len() {
            return Err(VectorError::DimensionMismatch {
                expected: self.learners.len(),
                got: g.len(),
            });
        }
        for (l, gi) in self.learners.iter_mut().zip(g) {
            l.observe(*gi)?;
        }
        Ok(())
    }

    fn dim(&self) -> usize {
        self.learners.len()
    }

    fn lipschitz(&self) -> f64 {
        self.g_lip
    }

    fn switching_weight(&self) -> f64 {
        self.lambda
    }
}

/// L1 projection of a nonnegative weight vector onto the simplex.
///
/// Below the simplex (`|w|_1 <= 1`) the deficit is spread evenly across
/// coordinates (orthogonal lift); above it the vector is scaled down
/// radially. Both branches attain the minimal L1 distance `|1 - |w|_1|`.
pub fn lea_project(w: &WeightVector) -> Result<SimplexPoint, VectorError> {
    let d = w.0.len();
    if d == 0 {
        return Err(VectorError::BadSimplex { what: "empty" });
    }
    let norm = w.l1_norm();
    let lift = (1.0 - norm).max(0.0) / d as f64;
    let denom = norm.max(1.0);
    SimplexPoint::new(w.0.iter().map(|wi| (wi + lift) / denom).collect())
}

/// Surrogate-loss variants for the simplex reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurrogateVariant {
    /// Shift by `|g|_inf`: subtract below the simplex, add above.
    Paper,
    /// Shift by the largest coordinate below the simplex and by the smallest
    /// above.
    MaxShift,
    /// Shift by the coordinate sum below the simplex and by the realized
    /// loss `<g, x>` above.
    InnerShift,
}

impl SurrogateVariant {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Paper => "paper",
            Self::MaxShift => "maxshift",
            Self::InnerShift => "innershift",
        }
    }
}

/// Maps the observed loss vector to the per-coordinate surrogate losses.
///
/// The branch is selected by comparing `|w|_1` to 1 exactly; the branches
/// agree in the limit, so boundary classification is immaterial. The full
/// weight vector is required because the [`SurrogateVariant::InnerShift`]
/// branch above the simplex shifts by the realized loss of the projected
/// prediction.
pub fn lea_surrogate(
    g: &[f64],
    w: &WeightVector,
    variant: SurrogateVariant,
) -> Result<Vec<f64>, VectorError> {
    if g.len() != w.0.len() {
        return Err(VectorError::DimensionMismatch {
            expected: w.0.len(),
            got: g.len(),
        });
    }
    for gi in g {
        if !gi.is_finite() {
            return Err(VectorError::Learner(LearnerError::GradientBound {
                g: *gi,
                bound: f64::INFINITY,
            }));
        }
    }
    let norm = w.l1_norm();
    if norm == 1.0 {
        return Ok(g.to_vec());
    }
    let shift = if norm < 1.0 {
        match variant {
            SurrogateVariant::Paper => -g.iter().fold(0.0f64, |m, gi| m.max(gi.abs())),
            SurrogateVariant::MaxShift => -g.iter().fold(f64::NEG_INFINITY, |m, gi| m.max(*gi)),
            SurrogateVariant::InnerShift => -g.iter().sum::<f64>(),
        }
    } else {
        match variant {
            SurrogateVariant::Paper => g.iter().fold(0.0f64, |m, gi| m.max(gi.abs())),
            SurrogateVariant::MaxShift => -g.iter().fold(f64::INFINITY, |m, gi| m.min(*gi)),
            SurrogateVariant::InnerShift => {
                let x = lea_project(w)?;
                -g.iter()
                    .zip(x.weights())
                    .map(|(gi, xi)| gi * xi)
                    .sum::<f64>()
            }
        }
    };
    Ok(g.iter().map(|gi| gi + shift).collect())
}

/// Expert-advice learner on the probability simplex.
///
/// Coordinate `i` runs a constrained potential learner on `[0, inf)` with
/// anchor and confidence `pi_i`, switching weight `4*lambda` and Lipschitz
/// bound `2*G` (hence diffusivity `8*lambda/G + 2`); predictions go through
/// [`lea_project`] and observed losses come back through [`lea_surrogate`].
pub struct LeaLearner {
    coords: Vec<ConstrainedLearner<PotentialLearner>>,
    prior: SimplexPoint,
    g_lip: f64,
    lambda: f64,
    variant: SurrogateVariant,
    pending: Option<WeightVector>,
    last_weights: Option<WeightVector>,
}

impl LeaLearner {
    pub fn new(prior: SimplexPoint, g: f64, lambda: f64) -> Result<Self, VectorError> {
        Self::with_variant(prior, g, lambda, SurrogateVariant::Paper)
    }

    pub fn with_variant(
        prior: SimplexPoint,
        g: f64,
        lambda: f64,
        variant: SurrogateVariant,
    ) -> Result<Self, VectorError> {
        for (i, p) in prior.weights().iter().enumerate() {
            if *p <= 0.0 {
                return Err(VectorError::ZeroPrior { index: i });
            }
        }
        let coords = prior
            .weights()
            .iter()
            .map(|pi| {
                let cfg = LearnerConfig::new(*pi, 2.0 * g, 4.0 * lambda)?;
                let dom = DomainInterval::nonnegative(*pi)?;
                Ok(ConstrainedLearner::new(PotentialLearner::new(cfg), dom))
            })
            .collect::<Result<Vec<_>, LearnerError>>()?;
        Ok(Self {
            coords,
            prior,
            g_lip: g,
            lambda,
            variant,
            pending: None,
            last_weights: None,
        })
    }

    pub fn prior(&self) -> &SimplexPoint {
        &self.prior
    }

    /// Weight vector behind the most recent prediction.
    pub fn last_weight_vector(&self) -> Option<&WeightVector> {
        self.last_weights.as_ref()
    }

    /// Typed prediction; [`VectorLearner::predict`] returns the raw weights.
    pub fn predict_simplex(&mut self) -> Result<SimplexPoint, VectorError> {
        let mut ws = Vec::with_capacity(self.coords.len());
        for c in &mut self.coords {
            ws.push(c.predict()?);
        }
        let w = WeightVector::new(ws)?;
        let x = lea_project(&w)?;
        self.last_weights = Some(w.clone());
        self.pending = Some(w);
        Ok(x)
    }
}

impl VectorLearner for LeaLearner {
    fn predict(&mut self) -> Result<Vec<f64>, VectorError> {
        Ok(self.predict_simplex()?.weights().to_vec())
    }

    fn observe(&mut self, g: &[f64]) -> Result<(), VectorError> {
        if g.len() != self.coords.len() {
            return Err(VectorError::DimensionMismatch {
                expected: self.coords.len(),
                got: g.len(),
            });
        }
        for gi in g {
            if !gi.is_finite() || gi.abs() > self.g_lip {
                return Err(VectorError::Learner(LearnerError::GradientBound {
                    g: *gi,
                    bound: self.g_lip,
                }));
            }
        }
        let w = match self.pending.take() {
            Some(w) => w,
            None => {
                return Err(VectorError::Learner(LearnerError::OutOfOrder {
                    expected: "predict",
                }))
            }
        };
        let z = lea_surrogate(g, &w, self.variant)?;
        for (c, zi) in self.coords.iter_mut().zip(&z) {
            c.observe(*zi)?;
        }
        Ok(())
    }

    fn dim(&self) -> usize {
        self.coords.len()
    }

    fn lipschitz(&self) -> f64 {
        self.g_lip
    }

    fn switching_weight(&self) -> f64 {
        self.lambda
    }
}

/// Distribution discrepancies used in the expert-setting bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergences {
    /// Total variation `sum |u_i - p_i| / 2`.
    pub tv: f64,
    /// KL divergence `sum u_i log(u_i / p_i)` with `0 log 0 = 0`.
    pub kl: f64,
    /// f-divergence with `f(x) = |x-1| log(1 + |x-1|)`; at most `2 * kl`.
    pub f_div: f64,
}

/// Computes total variation, KL and the f-divergence of `u` from `p`.
///
/// `p` must dominate `u` (no mass of `u` where `p` is zero); total variation
/// alone would be defined regardless, but a single support check keeps the
/// three values consistent.
pub fn divergences(u: &SimplexPoint, p: &SimplexPoint) -> Result<Divergences, VectorError> {
    if u.dim() != p.dim() {
        return Err(VectorError::DimensionMismatch {
            expected: p.dim(),
            got: u.dim(),
        });
    }
    let mut tv = 0.0;
    let mut kl = 0.0;
    let mut f_div = 0.0;
    for (i, (ui, pi)) in u.weights().iter().zip(p.weights()).enumerate() {
        tv += (ui - pi).abs();
        if *pi == 0.0 {
            if *ui > 0.0 {
                return Err(VectorError::SupportViolation { index: i });
            }
            continue; // 0 * f(0/0) = 0
        }
        if *ui > 0.0 {
            kl += ui * (ui / pi).ln();
        }
        let ratio = ui / pi;
        f_div += pi * ((ratio - 1.0).abs() * (ratio - 1.0).abs().ln_1p());
    }
    Ok(Divergences {
        tv: 0.5 * tv,
        kl,
        f_div,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_renormalizes() {
        let p = SimplexPoint::new(vec![2.0, 2.0]).unwrap();
        assert_eq!(p.weights(), &[0.5, 0.5]);
        assert!(SimplexPoint::new(vec![0.0, 0.0]).is_err());
        assert!(SimplexPoint::new(vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn coordinate_olo_first_prediction_is_zero() {
        let mut l = CoordinateWise::potential(3, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(l.predict().unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn coordinate_olo_splits_confidence() {
        // per-coordinate C/d = 0.5 scales the 1-D oracle value linearly
        let mut l = CoordinateWise::potential(2, 1.0, 1.0, 0.0).unwrap();
        l.predict().unwrap();
        l.observe(&[-1.0, 1.0]).unwrap();
        let x = l.predict().unwrap();
        assert!((x[0] - 0.13048084374794037).abs() <= 1e-12);
        assert!((x[1] + 0.13048084374794037).abs() <= 1e-12);
    }

    #[test]
    fn coordinate_olo_sign_equivariant() {
        let mut a = CoordinateWise::potential(2, 1.0, 1.0, 0.5).unwrap();
        let mut b = CoordinateWise::potential(2, 1.0, 1.0, 0.5).unwrap();
        a.predict().unwrap();
        b.predict().unwrap();
        a.observe(&[-1.0, 0.25]).unwrap();
        b.observe(&[1.0, -0.25]).unwrap();
        let xa = a.predict().unwrap();
        let xb = b.predict().unwrap();
        assert_eq!(xa[0], -xb[0]);
        assert_eq!(xa[1], -xb[1]);
    }

    #[test]
    fn coordinate_olo_dimension_checks() {
        let mut l = CoordinateWise::potential(2, 1.0, 1.0, 0.0).unwrap();
        l.predict().unwrap();
        assert!(matches!(
            l.observe(&[0.0]),
            Err(VectorError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projection_branches() {
        let p = lea_project(&WeightVector::new(vec![0.2, 0.2]).unwrap()).unwrap();
        assert_eq!(p.weights(), &[0.5, 0.5]);
        let p = lea_project(&WeightVector::new(vec![3.0, 1.0]).unwrap()).unwrap();
        assert_eq!(p.weights(), &[0.75, 0.25]);
        let p = lea_project(&WeightVector::new(vec![0.0, 0.0]).unwrap()).unwrap();
        assert_eq!(p.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn projection_rejects_negative() {
        assert!(WeightVector::new(vec![-0.1, 0.5]).is_err());
    }

    #[test]
    fn surrogate_paper_branches() {
        let w_low = WeightVector::new(vec![0.25, 0.25]).unwrap();
        let z = lea_surrogate(&[1.0, -1.0], &w_low, SurrogateVariant::Paper).unwrap();
        assert_eq!(z, vec![0.0, -2.0]);

        let w_one = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let z = lea_surrogate(&[1.0, -1.0], &w_one, SurrogateVariant::Paper).unwrap();
        assert_eq!(z, vec![1.0, -1.0]);

        let w_high = WeightVector::new(vec![1.5, 0.5]).unwrap();
        let z = lea_surrogate(&[1.0, -1.0], &w_high, SurrogateVariant::Paper).unwrap();
        assert_eq!(z, vec![2.0, 0.0]);
    }

    #[test]
    fn surrogate_alternatives() {
        let w_low = WeightVector::new(vec![0.25, 0.25]).unwrap();
        let z = lea_surrogate(&[1.0, -1.0], &w_low, SurrogateVariant::MaxShift).unwrap();
        assert_eq!(z, vec![0.0, -2.0]);
        let z = lea_surrogate(&[1.0, -1.0], &w_low, SurrogateVariant::InnerShift).unwrap();
        assert_eq!(z, vec![1.0, -1.0]); // coordinate sum is 0

        let w_high = WeightVector::new(vec![1.5, 0.5]).unwrap();
        let z = lea_surrogate(&[1.0, -1.0], &w_high, SurrogateVariant::MaxShift).unwrap();
        assert_eq!(z, vec![2.0, 0.0]);
        // realized loss of x = (0.75, 0.25) is 0.5
        let z = lea_surrogate(&[1.0, -1.0], &w_high, SurrogateVariant::InnerShift).unwrap();
        assert_eq!(z, vec![0.5, -1.5]);
    }

    #[test]
    fn lea_first_prediction_is_prior() {
        let mut l = LeaLearner::new(SimplexPoint::uniform(3).unwrap(), 1.0, 0.1).unwrap();
        let x = l.predict().unwrap();
        for xi in &x {
            assert!((xi - 1.0 / 3.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn lea_orders_coordinates_by_loss() {
        let mut l = LeaLearner::new(SimplexPoint::uniform(3).unwrap(), 1.0, 0.1).unwrap();
        l.predict().unwrap();
        l.observe(&[1.0, -1.0, 0.0]).unwrap();
        let x = l.predict().unwrap();
        assert!(x[1] >= x[0]);
        let sum: f64 = x.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        assert!(x.iter().all(|xi| *xi >= 0.0));
    }

    #[test]
    fn lea_rejects_zero_prior_and_large_gradients() {
        let bad = SimplexPoint::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            LeaLearner::new(bad, 1.0, 0.0),
            Err(VectorError::ZeroPrior { .. })
        ));
        let mut l = LeaLearner::new(SimplexPoint::uniform(2).unwrap(), 1.0, 0.0).unwrap();
        l.predict().unwrap();
        assert!(l.observe(&[2.0, 0.0]).is_err());
    }

    #[test]
    fn divergences_basics() {
        let u = SimplexPoint::uniform(3).unwrap();
        let d = divergences(&u, &u).unwrap();
        assert_eq!((d.tv, d.kl, d.f_div), (0.0, 0.0, 0.0));

        let u = SimplexPoint::new(vec![1.0, 0.0]).unwrap();
        let p = SimplexPoint::uniform(2).unwrap();
        let d = divergences(&u, &p).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((d.tv - 0.5).abs() <= 1e-15);
        assert!((d.kl - ln2).abs() <= 1e-15);
        assert!((d.f_div - ln2).abs() <= 1e-15);
        assert!(d.f_div <= 2.0 * d.kl);
    }

    #[test]
    fn divergences_support_violation() {
        let u = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let p = SimplexPoint::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            divergences(&u, &p),
            Err(VectorError::SupportViolation { index: 1 })
        ));
    }
}
