//! Check outcomes, shared across the verification suites.
//!
//! Exact backends must produce residuals that are identically zero; float
//! backends compare against a relative tolerance. Reports keep enough detail
//! to serialize into machine-readable output and to print one line per check.

use serde::Serialize;
use std::fmt;

/// Result of comparing one identity instance.
#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    /// Which identity or quantity was checked.
    pub label: String,
    /// Index (typically the lattice site n) the check applies to, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub passed: bool,
    /// Max |residual entry|; exactly 0.0 for passing exact checks.
    pub residual: f64,
    /// Scale the residual was measured against (1 for absolute).
    pub scale: f64,
    /// True when the comparison was exact ring equality rather than tolerance.
    pub exact: bool,
}

/// A named bundle of check items.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub name: String,
    pub items: Vec<CheckItem>,
}

impl ResidualReport {
    pub fn new(name: impl Into<String>) -> Self {
        ResidualReport {
            name: name.into(),
            items: Vec::new(),
        }
    }

    pub fn push(&mut self, item: CheckItem) {
        self.items.push(item);
    }

    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.items.iter().map(|i| i.residual).fold(0.0, f64::max)
    }

    pub fn merge(&mut self, other: ResidualReport) {
        self.items.extend(other.items);
    }
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}:", self.name)?;
        for item in &self.items {
            let status = if item.passed { "pass" } else { "FAIL" };
            match item.n {
                Some(n) => writeln!(
                    f,
                    "  [{status}] {} n={} residual={:e}",
                    item.label, n, item.residual
                )?,
                None => {
                    writeln!(f, "  [{status}] {} residual={:e}", item.label, item.residual)?
                }
            }
        }
        Ok(())
    }
}

/// Outcome of a randomized identity suite.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub identity: String,
    pub trials: u64,
    pub failures: u64,
    /// Draws discarded because a precondition (an inverse existing) failed.
    pub resampled: u64,
    /// Rendered inputs of the first failing trial, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_counterexample: Option<String>,
}

impl IdentityReport {
    pub fn new(identity: impl Into<String>) -> Self {
        IdentityReport {
            identity: identity.into(),
            trials: 0,
            failures: 0,
            resampled: 0,
            first_counterexample: None,
        }
    }

    pub fn record_pass(&mut self) {
        self.trials += 1;
    }

    pub fn record_failure(&mut self, counterexample: String) {
        self.trials += 1;
        self.failures += 1;
        if self.first_counterexample.is_none() {
            self.first_counterexample = Some(counterexample);
        }
    }

    pub fn record_resample(&mut self) {
        self.resampled += 1;
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    /// Associative combination of two runs of the same identity.
    pub fn merge(&mut self, other: &IdentityReport) {
        self.trials += other.trials;
        self.failures += other.failures;
        self.resampled += other.resampled;
        if self.first_counterexample.is_none() {
            self.first_counterexample = other.first_counterexample.clone();
        }
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} trials, {} failures, {} resampled",
            self.identity, self.trials, self.failures, self.resampled
        )
    }
}

/// Compare two matrices entrywise and produce a check item.
///
/// Exact scalars require exact equality. Inexact scalars pass when the max
/// absolute entry of the difference is at most `tol * scale`, where the scale
/// is the larger of 1 and the magnitudes of both sides.
pub fn compare_mats<S: crate::ring::Scalar>(
    label: impl Into<String>,
    n: Option<usize>,
    lhs: &crate::blockmat::Mat<S>,
    rhs: &crate::blockmat::Mat<S>,
    tol: f64,
) -> CheckItem {
    let diff = lhs.sub(rhs);
    let residual = diff.max_magnitude();
    let scale = 1.0_f64.max(lhs.max_magnitude()).max(rhs.max_magnitude());
    let passed = if S::EXACT {
        diff.is_zero()
    } else {
        residual <= tol * scale
    };
    CheckItem {
        label: label.into(),
        n,
        passed,
        residual: if S::EXACT && diff.is_zero() { 0.0 } else { residual },
        scale,
        exact: S::EXACT,
    }
}

/// Check that a matrix of residuals is zero (exact) or small (float).
pub fn residual_item<S: crate::ring::Scalar>(
    label: impl Into<String>,
    n: Option<usize>,
    residual: &crate::blockmat::Mat<S>,
    scale: f64,
    tol: f64,
) -> CheckItem {
    let r = residual.max_magnitude();
    let scale = scale.max(1.0);
    let passed = if S::EXACT {
        residual.is_zero()
    } else {
        r <= tol * scale
    };
    CheckItem {
        label: label.into(),
        n,
        passed,
        residual: if S::EXACT && residual.is_zero() { 0.0 } else { r },
        scale,
        exact: S::EXACT,
    }
}
