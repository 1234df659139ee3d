//! Estimate and verdict records shared by every verification routine.

use serde::{Deserialize, Serialize};

/// Multiplier on the standard error used by every statistical verdict.
pub const SIGMA_LEVEL: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub shards: u32,
    pub seed: u64,
}

/// Outcome of comparing two sides of an identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityVerdict {
    pub identity: String,
    pub kind: Option<String>,
    pub c: Option<String>,
    pub n: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub se: f64,
    /// Deterministic allowance (quadrature error, truncation bias).
    pub tolerance: f64,
    pub discrepancy: f64,
    pub sigma_distance: f64,
    pub pass: bool,
    pub seed: u64,
    pub runtime_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn sigma_distance(discrepancy: f64, se: f64) -> f64 {
    if discrepancy == 0.0 {
        0.0
    } else if se > 0.0 {
        discrepancy / se
    } else {
        f64::INFINITY
    }
}

impl IdentityVerdict {
    /// Monte Carlo comparison: passes iff `|lhs - rhs| ≤ 4·(se + tolerance)`.
    pub fn statistical(identity: impl Into<String>, lhs: f64, rhs: f64, se: f64, tolerance: f64) -> Self {
        let discrepancy = (lhs - rhs).abs();
        Self {
            identity: identity.into(),
            kind: None,
            c: None,
            n: 0,
            lhs,
            rhs,
            se,
            tolerance,
            discrepancy,
            sigma_distance: sigma_distance(discrepancy, se),
            pass: discrepancy <= SIGMA_LEVEL * (se + tolerance),
            seed: 0,
            runtime_ms: 0,
            note: None,
        }
    }

    /// Deterministic comparison: passes iff `|lhs - rhs| ≤ tolerance`.
    pub fn deterministic(identity: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let discrepancy = (lhs - rhs).abs();
        Self {
            pass: discrepancy <= tolerance,
            sigma_distance: sigma_distance(discrepancy, 0.0),
            ..Self::statistical(identity, lhs, rhs, 0.0, tolerance)
        }
    }

    /// Matrix comparison: `lhs` carries the largest entry gap, `rhs` is zero.
    pub fn matrix(identity: impl Into<String>, max_gap: f64, tolerance: f64) -> Self {
        Self::deterministic(identity, max_gap, 0.0, tolerance)
    }

    /// One-sided check `value ≥ bound`.
    pub fn lower_bound(identity: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            discrepancy: (bound - value).max(0.0),
            pass: value >= bound,
            ..Self::deterministic(identity, value, bound, 0.0)
        }
    }

    /// One-sided check `value ≤ bound`.
    pub fn upper_bound(identity: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            discrepancy: (value - bound).max(0.0),
            pass: value <= bound,
            ..Self::deterministic(identity, value, bound, 0.0)
        }
    }

    /// Hypothesis-test verdict: `lhs` carries the p-value, `rhs` the
    /// significance level, `discrepancy` the test statistic.
    pub fn p_value(identity: impl Into<String>, statistic: f64, p_value: f64, alpha: f64) -> Self {
        Self {
            discrepancy: statistic,
            sigma_distance: 0.0,
            pass: p_value > alpha,
            ..Self::statistical(identity, p_value, alpha, 0.0, 0.0)
        }
    }

    pub fn with_kind(mut self, kind: impl Into<String>) -> Self {
        self.kind = Some(kind.into());
        self
    }

    pub fn with_c(mut self, c: impl Into<String>) -> Self {
        self.c = Some(c.into());
        self
    }

    pub fn with_n(mut self, n: u64) -> Self {
        self.n = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_runtime(mut self, started: std::time::Instant) -> Self {
        self.runtime_ms = started.elapsed().as_millis() as u64;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistical_rule() {
        let v = IdentityVerdict::statistical("x", 1.0, 1.3, 0.05, 0.0);
        assert!(!v.pass);
        assert!((v.sigma_distance - 6.0).abs() < 1e-12);
        let v = IdentityVerdict::statistical("x", 1.0, 1.3, 0.05, 0.03);
        assert!(v.pass);
        let v = IdentityVerdict::statistical("zero", 0.0, 0.0, 0.0, 0.0);
        assert!(v.pass);
        assert_eq!(v.sigma_distance, 0.0);
    }

    #[test]
    fn deterministic_rule_has_no_sigma_factor() {
        assert!(!IdentityVerdict::deterministic("d", 0.0, 2e-8, 1e-8).pass);
        assert!(IdentityVerdict::deterministic("d", 0.0, 5e-9, 1e-8).pass);
    }

    #[test]
    fn serializes_schema_fields() {
        let v = IdentityVerdict::statistical("laplace", 0.5, 0.5, 0.001, 0.0)
            .with_kind("k")
            .with_n(10)
            .with_seed(7);
        let json = serde_json::to_value(&v).unwrap();
        for key in [
            "identity",
            "kind",
            "c",
            "n",
            "lhs",
            "rhs",
            "se",
            "sigma_distance",
            "pass",
            "seed",
            "runtime_ms",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert!(json.get("note").is_none());
    }
}
