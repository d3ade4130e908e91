//! Separable Bregman divergences.
//!
//! A divergence is defined by a strictly convex generator `f` that
//! decomposes into per-coordinate terms, so the distance
//! `D_f(x,y) = f(x) - f(y) - <grad f(y), x - y>` splits into a sum over
//! any partition of the dimensions. Only separable generators are
//! admitted here; a full-matrix quadratic form is rejected at
//! configuration time.

use alloc::vec::Vec;

use crate::error::CoreError;

/// The supported generator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DivergenceKind {
    /// `f(t) = t^2`, giving the squared Euclidean distance.
    SquaredEuclidean,
    /// `f(t) = q_i/2 * t^2` with per-dimension positive weights, giving
    /// the squared Mahalanobis distance with diagonal `Q`.
    DiagonalMahalanobis,
    /// `f(t) = -log t` on `t > 0`, giving the Itakura-Saito distance.
    ItakuraSaito,
    /// `f(t) = e^t`, giving the exponential distance.
    Exponential,
}

impl DivergenceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DivergenceKind::SquaredEuclidean => "se",
            DivergenceKind::DiagonalMahalanobis => "mahalanobis",
            DivergenceKind::ItakuraSaito => "isd",
            DivergenceKind::Exponential => "exp",
        }
    }

    pub fn from_str(s: &str) -> Option<Self> {
        match s {
            "se" => Some(DivergenceKind::SquaredEuclidean),
            "mahalanobis" => Some(DivergenceKind::DiagonalMahalanobis),
            "isd" => Some(DivergenceKind::ItakuraSaito),
            "exp" => Some(DivergenceKind::Exponential),
            _ => None,
        }
    }
}

/// Default floor below which Itakura-Saito coordinates are rejected.
pub const DEFAULT_ISD_FLOOR: f64 = 1e-12;

/// An immutable divergence configuration: the generator family plus the
/// Mahalanobis weights when applicable.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceSpec {
    kind: DivergenceKind,
    /// Diagonal of `Q` for Mahalanobis; `None` otherwise.
    weights: Option<Vec<f64>>,
    /// Strictly-positive floor for Itakura-Saito coordinates.
    isd_floor: f64,
}

impl DivergenceSpec {
    /// Builds a spec for a weight-free generator family.
    pub fn new(kind: DivergenceKind) -> Result<Self, CoreError> {
        if kind == DivergenceKind::DiagonalMahalanobis {
            return Err(CoreError::InvalidSpec(
                "diagonal Mahalanobis requires per-dimension weights".into(),
            ));
        }
        Ok(DivergenceSpec { kind, weights: None, isd_floor: DEFAULT_ISD_FLOOR })
    }

    /// Builds a diagonal Mahalanobis spec from the diagonal of `Q`.
    pub fn mahalanobis(weights: Vec<f64>) -> Result<Self, CoreError> {
        if weights.is_empty() {
            return Err(CoreError::InvalidSpec("empty weight vector".into()));
        }
        if let Some((i, &w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
            return Err(CoreError::InvalidSpec(alloc::format!(
                "weight {w} at dimension {i} is not strictly positive"
            )));
        }
        Ok(DivergenceSpec {
            kind: DivergenceKind::DiagonalMahalanobis,
            weights: Some(weights),
            isd_floor: DEFAULT_ISD_FLOOR,
        })
    }

    pub fn with_isd_floor(mut self, floor: f64) -> Self {
        self.isd_floor = floor;
        self
    }

    pub fn kind(&self) -> DivergenceKind {
        self.kind
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn isd_floor(&self) -> f64 {
        self.isd_floor
    }

    fn weight(&self, dim: usize) -> f64 {
        match &self.weights {
            Some(w) => w[dim],
            None => 1.0,
        }
    }

    /// Checks one coordinate against the generator's domain.
    pub fn check_domain(&self, dim: usize, t: f64) -> Result<(), CoreError> {
        if !t.is_finite() {
            return Err(CoreError::DomainViolation {
                dim,
                value: t,
                record: None,
                reason: "coordinate is not finite",
            });
        }
        if self.kind == DivergenceKind::ItakuraSaito && t < self.isd_floor {
            return Err(CoreError::DomainViolation {
                dim,
                value: t,
                record: None,
                reason: "Itakura-Saito requires strictly positive coordinates",
            });
        }
        Ok(())
    }

    /// Checks a whole vector; attaches `record` to any violation.
    pub fn check_vector(&self, v: &[f64], record: Option<u64>) -> Result<(), CoreError> {
        for (i, &t) in v.iter().enumerate() {
            self.check_domain(i, t).map_err(|e| match e {
                CoreError::DomainViolation { dim, value, reason, .. } => {
                    CoreError::DomainViolation { dim, value, record, reason }
                }
                other => other,
            })?;
        }
        Ok(())
    }

    /// `f(t)` for coordinate `dim`.
    pub fn generator_value(&self, dim: usize, t: f64) -> Result<f64, CoreError> {
        self.check_domain(dim, t)?;
        Ok(self.value_unchecked(dim, t))
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, dim: usize, t: f64) -> f64 {
        match self.kind {
            DivergenceKind::SquaredEuclidean => t * t,
            DivergenceKind::DiagonalMahalanobis => 0.5 * self.weight(dim) * t * t,
            DivergenceKind::ItakuraSaito => -libm::log(t),
            DivergenceKind::Exponential => libm::exp(t),
        }
    }

    /// `f'(t)` for coordinate `dim`.
    pub fn generator_grad(&self, dim: usize, t: f64) -> Result<f64, CoreError> {
        self.check_domain(dim, t)?;
        Ok(self.grad_unchecked(dim, t))
    }

    #[inline]
    pub(crate) fn grad_unchecked(&self, dim: usize, t: f64) -> f64 {
        match self.kind {
            DivergenceKind::SquaredEuclidean => 2.0 * t,
            DivergenceKind::DiagonalMahalanobis => self.weight(dim) * t,
            DivergenceKind::ItakuraSaito => -1.0 / t,
            DivergenceKind::Exponential => libm::exp(t),
        }
    }

    /// The `t` with `f'(t) = s`, for coordinate `dim`.
    pub fn generator_grad_inverse(&self, dim: usize, s: f64) -> Result<f64, CoreError> {
        if !s.is_finite() {
            return Err(CoreError::GradientRangeViolation {
                value: s,
                reason: "value is not finite",
            });
        }
        match self.kind {
            DivergenceKind::SquaredEuclidean => Ok(s / 2.0),
            DivergenceKind::DiagonalMahalanobis => Ok(s / self.weight(dim)),
            DivergenceKind::ItakuraSaito => {
                if s >= 0.0 {
                    return Err(CoreError::GradientRangeViolation {
                        value: s,
                        reason: "Itakura-Saito gradient takes only negative values",
                    });
                }
                Ok(-1.0 / s)
            }
            DivergenceKind::Exponential => {
                if s <= 0.0 {
                    return Err(CoreError::GradientRangeViolation {
                        value: s,
                        reason: "exponential gradient takes only positive values",
                    });
                }
                Ok(libm::log(s))
            }
        }
    }

    /// Per-coordinate divergence `f(a) - f(b) - f'(b)(a - b)` at `dim`.
    #[inline]
    pub(crate) fn coord_distance_unchecked(&self, dim: usize, a: f64, b: f64) -> f64 {
        self.value_unchecked(dim, a)
            - self.value_unchecked(dim, b)
            - self.grad_unchecked(dim, b) * (a - b)
    }

    /// Full Bregman distance `D_f(x, y)`.
    ///
    /// `dim_offsets`, when present, maps subvector positions to original
    /// dimension indices so Mahalanobis weights resolve correctly on
    /// subvectors.
    pub fn bregman_distance(
        &self,
        x: &[f64],
        y: &[f64],
        dim_offsets: Option<&[usize]>,
    ) -> Result<f64, CoreError> {
        if x.len() != y.len() {
            return Err(CoreError::LengthMismatch { expected: x.len(), actual: y.len() });
        }
        if let Some(offsets) = dim_offsets {
            if offsets.len() != x.len() {
                return Err(CoreError::LengthMismatch {
                    expected: x.len(),
                    actual: offsets.len(),
                });
            }
        }
        let mut acc = 0.0f64;
        for i in 0..x.len() {
            let dim = dim_offsets.map_or(i, |o| o[i]);
            self.check_domain(dim, x[i])?;
            self.check_domain(dim, y[i])?;
            acc += self.coord_distance_unchecked(dim, x[i], y[i]);
        }
        Ok(acc)
    }

    /// Distance without domain checks; for hot paths over pre-validated data.
    pub fn distance_unchecked(&self, x: &[f64], y: &[f64], dim_offsets: Option<&[usize]>) -> f64 {
        let mut acc = 0.0f64;
        for i in 0..x.len() {
            let dim = dim_offsets.map_or(i, |o| o[i]);
            acc += self.coord_distance_unchecked(dim, x[i], y[i]);
        }
        acc
    }
}
