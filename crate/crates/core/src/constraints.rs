//! Pass/fail reporting for inequality constraints.

use serde::Serialize;

/// One evaluated inequality `lower <= value <= upper`.
///
/// `margin` is the signed distance to the nearest active bound: non-negative
/// when satisfied, negative by the amount of violation otherwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub pass: bool,
    pub margin: f64,
}

impl ConstraintCheck {
    pub fn new(name: impl Into<String>, value: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let margin = match (lower, upper) {
            (Some(lo), Some(hi)) => (value - lo).min(hi - value),
            (Some(lo), None) => value - lo,
            (None, Some(hi)) => hi - value,
            (None, None) => f64::INFINITY,
        };
        let pass = lower.is_none_or(|lo| value >= lo) && upper.is_none_or(|hi| value <= hi);
        Self {
            name: name.into(),
            value,
            lower,
            upper,
            pass,
            margin,
        }
    }

    pub fn upper(name: impl Into<String>, value: f64, upper: f64) -> Self {
        Self::new(name, value, None, Some(upper))
    }

    pub fn between(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self::new(name, value, Some(lower), Some(upper))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub checks: Vec<ConstraintCheck>,
}

impl ConstraintReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn violations(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn extend(&mut self, other: ConstraintReport) {
        self.checks.extend(other.checks);
    }
}
