//! Evidence, Dirichlet and subjective-logic conversions.
//!
//! A measurement carries a non-negative evidence vector `e` over `K` classes.
//! It parameterizes a Dirichlet with `alpha = e + 1` and strength
//! `S = sum(alpha)`, which in turn maps onto an opinion with singleton beliefs
//! `b_k = e_k / S` and vacuity `u = K / S`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_class_count(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 classes, got {k}")));
    }
    Ok(())
}

/// Non-negative per-class evidence for one measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassEvidence<T> {
    values: Vec<T>,
}

impl<T: Scalar> ClassEvidence<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        check_class_count(values.len())?;
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < T::zero())
        {
            return Err(Error::invalid(format!(
                "evidence[{k}] = {v} is not a finite non-negative value"
            )));
        }
        Ok(Self { values })
    }

    /// Adapter for segmenters that only emit class probabilities: `e_k = strength * p_k`.
    pub fn from_probabilities(probs: &[T], strength: T) -> Result<Self> {
        check_class_count(probs.len())?;
        if !strength.is_finite() || strength < T::zero() {
            return Err(Error::invalid(format!(
                "evidence strength {strength} must be finite and >= 0"
            )));
        }
        let mut sum = T::zero();
        for (k, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < T::zero() || p > T::one() {
                return Err(Error::invalid(format!(
                    "probability[{k}] = {p} outside [0, 1]"
                )));
            }
            sum = sum + p;
        }
        if (sum - T::one()).abs() > T::lit(1e-6) {
            return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Self::new(probs.iter().map(|&p| strength * p).collect())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn num_classes(&self) -> usize {
        self.values.len()
    }

    pub fn to_dirichlet(&self) -> DirichletParams<T> {
        DirichletParams {
            alpha: self.values.iter().map(|&e| e + T::one()).collect(),
        }
    }
}

/// Dirichlet concentration parameters, each at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams<T> {
    alpha: Vec<T>,
}

impl<T: Scalar> DirichletParams<T> {
    pub fn new(alpha: Vec<T>) -> Result<Self> {
        check_class_count(alpha.len())?;
        if let Some((k, a)) = alpha
            .iter()
            .enumerate()
            .find(|(_, a)| !a.is_finite() || **a < T::one())
        {
            return Err(Error::invalid(format!(
                "alpha[{k}] = {a} must be finite and >= 1"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub fn num_classes(&self) -> usize {
        self.alpha.len()
    }

    /// Dirichlet strength `S`.
    pub fn strength(&self) -> T {
        self.alpha.iter().fold(T::zero(), |acc, &a| acc + a)
    }

    pub fn to_belief(&self) -> BeliefAssignment<T> {
        let s = self.strength();
        BeliefAssignment {
            belief: self.alpha.iter().map(|&a| (a - T::one()) / s).collect(),
            vacuity: T::from_count(self.alpha.len()) / s,
        }
    }

    /// Dirichlet mean `alpha_k / S`.
    pub fn expected_probabilities(&self) -> Vec<T> {
        let s = self.strength();
        self.alpha.iter().map(|&a| a / s).collect()
    }

    /// Marginal variance of class `k`.
    pub fn variance(&self, k: usize) -> Result<T> {
        dirichlet_variance(&self.alpha, k)
    }
}

/// `Var[p_k] = alpha_k (S - alpha_k) / (S^2 (S + 1))` for arbitrary positive
/// concentrations (the kernel baseline uses priors well below one).
pub fn dirichlet_variance<T: Scalar>(alpha: &[T], k: usize) -> Result<T> {
    let a = *alpha.get(k).ok_or(Error::ClassIndex {
        index: k,
        len: alpha.len(),
    })?;
    let s = alpha.iter().fold(T::zero(), |acc, &x| acc + x);
    Ok(a * (s - a) / (s * s * (s + T::one())))
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

/// Subjective-logic opinion over `K` singleton classes plus the whole frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefAssignment<T> {
    belief: Vec<T>,
    vacuity: T,
}

impl<T: Scalar> BeliefAssignment<T> {
    pub fn new(belief: Vec<T>, vacuity: T) -> Result<Self> {
        check_class_count(belief.len())?;
        let in_unit = |x: T| x.is_finite() && x >= T::zero() && x <= T::one();
        if let Some((k, b)) = belief.iter().enumerate().find(|(_, b)| !in_unit(**b)) {
            return Err(Error::invalid(format!("belief[{k}] = {b} outside [0, 1]")));
        }
        if !in_unit(vacuity) {
            return Err(Error::invalid(format!("vacuity {vacuity} outside [0, 1]")));
        }
        let total = belief.iter().fold(vacuity, |acc, &b| acc + b);
        if (total - T::one()).abs() > T::mass_tolerance() {
            return Err(Error::invalid(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { belief, vacuity })
    }

    /// The "know nothing" opinion: all mass on the frame.
    pub fn vacuous(num_classes: usize) -> Self {
        Self {
            belief: vec![T::zero(); num_classes],
            vacuity: T::one(),
        }
    }

    pub(crate) fn from_raw(belief: Vec<T>, vacuity: T) -> Self {
        Self { belief, vacuity }
    }

    pub fn belief(&self) -> &[T] {
        &self.belief
    }

    pub fn vacuity(&self) -> T {
        self.vacuity
    }

    pub fn num_classes(&self) -> usize {
        self.belief.len()
    }

    pub fn total_mass(&self) -> T {
        self.belief.iter().fold(self.vacuity, |acc, &b| acc + b)
    }

    pub fn is_vacuous(&self) -> bool {
        self.vacuity == T::one() && self.belief.iter().all(|b| b.is_zero())
    }

    /// Inverse of [`DirichletParams::to_belief`]: `S = K / u`, `alpha_k = b_k S + 1`.
    pub fn to_dirichlet(&self) -> Result<DirichletParams<T>> {
        if self.vacuity <= T::zero() {
            return Err(Error::SingularOpinion);
        }
        let s = T::from_count(self.belief.len()) / self.vacuity;
        Ok(DirichletParams {
            alpha: self.belief.iter().map(|&b| b * s + T::one()).collect(),
        })
    }

    /// Projected probabilities `b_k + u / K`.
    ///
    /// Algebraically identical to the mean of [`Self::to_dirichlet`], but stays
    /// defined when fusion has driven `u` to zero.
    pub fn expected_probabilities(&self) -> Vec<T> {
        let base = self.vacuity / T::from_count(self.belief.len());
        self.belief.iter().map(|&b| b + base).collect()
    }

    pub fn predicted_class(&self) -> usize {
        argmax(&self.expected_probabilities())
    }

    pub fn uncertainty(&self) -> UncertaintyMeasures<T> {
        let k = T::from_count(self.belief.len());
        let probs = self.expected_probabilities();
        let top = probs[argmax(&probs)];
        // p (1 - p) / (S + 1) with S = K / u
        let variance = top * (T::one() - top) * self.vacuity / (k + self.vacuity);
        let entropy = probs
            .iter()
            .filter(|p| **p > T::zero())
            .fold(T::zero(), |acc, &p| acc - p * p.ln());
        UncertaintyMeasures {
            vacuity: self.vacuity,
            dirichlet_variance: variance,
            expected_entropy_norm: entropy / k.ln(),
        }
    }

    pub fn measure(&self, which: UncertaintyMeasure) -> T {
        self.uncertainty().get(which)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyMeasures<T> {
    pub vacuity: T,
    /// Variance of the predicted class marginal.
    pub dirichlet_variance: T,
    /// Entropy of the expected probabilities divided by `ln K`.
    pub expected_entropy_norm: T,
}

impl<T: Copy> UncertaintyMeasures<T> {
    pub fn get(&self, which: UncertaintyMeasure) -> T {
        match which {
            UncertaintyMeasure::Vacuity => self.vacuity,
            UncertaintyMeasure::Variance => self.dirichlet_variance,
            UncertaintyMeasure::Entropy => self.expected_entropy_norm,
        }
    }
}

/// Which scalar to report as a cell's uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UncertaintyMeasure {
    #[default]
    Vacuity,
    Variance,
    Entropy,
}

impl UncertaintyMeasure {
    pub const ALL: [UncertaintyMeasure; 3] = [Self::Vacuity, Self::Variance, Self::Entropy];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Vacuity => "vacuity",
            Self::Variance => "variance",
            Self::Entropy => "entropy",
        }
    }

    /// Upper end of the measure's range.
    pub fn max_value(self) -> f64 {
        match self {
            Self::Variance => 0.25,
            Self::Vacuity | Self::Entropy => 1.0,
        }
    }
}

impl fmt::Display for UncertaintyMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UncertaintyMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "uncertainty measure",
                name: s.to_string(),
            })
    }
}
