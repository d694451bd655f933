//! Step-size and penalty sequences `λ_n = λ₀ n^{−p}`, `β_n = β₀ n^{q}` and
//! their analytic classification.
//!
//! Every flag is derived from exponent arithmetic (p-series rules), never from
//! truncated sums: a finite partial sum cannot certify divergence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::ExtReal;

/// The four stepping kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Forward-backward with a set-valued penalty operator and selection `w_n ∈ Bx_n`.
    FbSetvalued,
    /// Forward-backward with a cocoercive penalty operator.
    Fb,
    /// Forward-backward-forward with monotone Lipschitz `B` and `D`.
    Fbf,
    /// Forward-backward-forward on the primal-dual product space.
    FbfComposite,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::FbSetvalued, SolverKind::Fb, SolverKind::Fbf, SolverKind::FbfComposite];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::FbSetvalued => "fb_setvalued",
            SolverKind::Fb => "fb",
            SolverKind::Fbf => "fbf",
            SolverKind::FbfComposite => "fbf_composite",
        }
    }

    pub fn parse(name: &str) -> Option<SolverKind> {
        SolverKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSchedule {
    pub lambda0: f64,
    pub p: f64,
    pub beta0: f64,
    pub q: f64,
}

impl PolynomialSchedule {
    pub fn new(lambda0: f64, p: f64, beta0: f64, q: f64) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(Error::Usage("λ₀ must be positive".into()));
        }
        if !(beta0 > 0.0 && beta0.is_finite()) {
            return Err(Error::Usage("β₀ must be positive".into()));
        }
        if !p.is_finite() || !q.is_finite() {
            return Err(Error::Usage("schedule exponents must be finite".into()));
        }
        Ok(Self { lambda0, p, beta0, q })
    }

    /// `λ_n` for `n ≥ 1`.
    pub fn lambda(&self, n: u64) -> f64 {
        self.lambda0 * (n as f64).powf(-self.p)
    }

    /// `β_n` for `n ≥ 1`.
    pub fn beta(&self, n: u64) -> f64 {
        self.beta0 * (n as f64).powf(self.q)
    }
}

/// Limit of `c · n^{e}` as `n → ∞` for `c > 0`.
fn power_limit(c: f64, exponent: f64) -> ExtReal {
    if exponent < 0.0 {
        ExtReal::Finite(0.0)
    } else if exponent == 0.0 {
        ExtReal::Finite(c)
    } else {
        ExtReal::PosInf
    }
}

/// `limit · factor`, with `0 · ∞ = 0` (a vanishing sequence times a constant
/// that is identically infinite never occurs; an infinite factor only arises
/// from a zero modulus which is rejected upstream).
fn scale_limit(limit: ExtReal, factor: f64) -> ExtReal {
    match limit {
        ExtReal::Finite(v) => {
            if factor == 0.0 || v == 0.0 {
                ExtReal::Finite(0.0)
            } else {
                ExtReal::from(v * factor)
            }
        }
        ExtReal::PosInf => {
            if factor == 0.0 {
                ExtReal::Finite(0.0)
            } else {
                ExtReal::PosInf
            }
        }
    }
}

fn strictly_below(value: ExtReal, bound: f64) -> bool {
    matches!(value, ExtReal::Finite(v) if v < bound)
}

/// Analytic classification of a polynomial schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub schedule: PolynomialSchedule,
    pub in_l2: bool,
    pub in_l1: bool,
    /// `(λ_n) ∈ ℓ² ∖ ℓ¹`.
    pub l2_not_l1: bool,
    pub lambda_limit: ExtReal,
    /// `lim λ_nβ_n` (the sequence is monotone, so this is also the limsup).
    pub lambda_beta_limsup: ExtReal,
    /// `Σ λ_n/β_n < ∞`.
    pub penalty_ratio_summable: bool,
}

impl ScheduleReport {
    /// `limsup λ_nβ_n < 2μ`.
    pub fn fb_bound_ok(&self, mu: f64) -> bool {
        mu.is_infinite() || strictly_below(self.lambda_beta_limsup, 2.0 * mu)
    }

    /// `limsup(λ_nβ_n/μ + λ_n/η) < 1`.
    pub fn fbf_bound_ok(&self, mu: f64, eta: f64) -> bool {
        strictly_below(self.fbf_limsup(mu, eta), 1.0)
    }

    pub fn fbf_limsup(&self, mu: f64, eta: f64) -> ExtReal {
        scale_limit(self.lambda_beta_limsup, 1.0 / mu) + scale_limit(self.lambda_limit, 1.0 / eta)
    }

    /// `limsup(λ_nβ_n/μ + λ_n·η̃) < 1` with `η̃ = √(2(1/η² + ‖K‖²))`.
    pub fn composite_bound_ok(&self, mu: f64, eta: f64, k_norm: f64) -> bool {
        strictly_below(self.composite_limsup(mu, eta, k_norm), 1.0)
    }

    pub fn composite_limsup(&self, mu: f64, eta: f64, k_norm: f64) -> ExtReal {
        scale_limit(self.lambda_beta_limsup, 1.0 / mu) + scale_limit(self.lambda_limit, coupled_lipschitz(eta, k_norm))
    }
}

/// Lipschitz constant `√(2(1/η² + ‖K‖²))` of the product-space operator
/// `(x, v) ↦ (Dx + K*v, −Kx)` when `D` is `1/η`-Lipschitz.
pub fn coupled_lipschitz(eta: f64, k_norm: f64) -> f64 {
    let inv = 1.0 / eta;
    (2.0 * (inv * inv + k_norm * k_norm)).sqrt()
}

pub fn classify(s: &PolynomialSchedule) -> ScheduleReport {
    let in_l2 = 2.0 * s.p > 1.0;
    let in_l1 = s.p > 1.0;
    ScheduleReport {
        schedule: *s,
        in_l2,
        in_l1,
        l2_not_l1: in_l2 && !in_l1,
        lambda_limit: power_limit(s.lambda0, -s.p),
        lambda_beta_limsup: power_limit(s.lambda0 * s.beta0, s.q - s.p),
        penalty_ratio_summable: s.p + s.q > 1.0,
    }
}

/// Operator constants entering the step-size conditions.
///
/// `mu`: cocoercivity of `B` (forward-backward) or inverse Lipschitz constant
/// of `B` (forward-backward-forward). `eta`: the same for `D`. `k_norm`: `‖K‖`.
/// Infinite values stand for the zero operator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct HypothesisModuli {
    pub mu: Option<f64>,
    pub eta: Option<f64>,
    pub k_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    /// Each violated hypothesis, verbatim.
    pub reasons: Vec<String>,
    /// Hypotheses that could not be certified analytically.
    pub warnings: Vec<String>,
}

pub const REASON_L2_NOT_L1: &str = "(λ_n) ∈ ℓ²∖ℓ¹ violated";
pub const REASON_FB_BOUND: &str = "limsup λ_nβ_n < 2μ violated";
pub const REASON_FBF_BOUND: &str = "limsup(λ_nβ_n/μ + λ_n/η) < 1 violated";
pub const REASON_COMPOSITE_BOUND: &str = "limsup(λ_nβ_n/μ + λ_n·√(2(1/η² + ‖K‖²))) < 1 violated";
pub const WARNING_PENALTY_GAP: &str =
    "unverified hypothesis (ii): Σ λ_n/β_n = +∞, the sufficient condition for penalty-gap summability fails";
pub const WARNING_SELECTION_L2: &str =
    "hypothesis (λ_nβ_n‖w_n‖) ∈ ℓ² is not checkable a priori; monitored during the run";

fn require(value: Option<f64>, name: &str, kind: SolverKind) -> Result<f64> {
    let v = value.ok_or_else(|| Error::Usage(format!("solver {} requires modulus {name}", kind.name())))?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Usage(format!("modulus {name} must be positive")))
    }
}

/// Checks every analytically decidable hypothesis for `kind`.
pub fn admissible_for(s: &PolynomialSchedule, kind: SolverKind, moduli: &HypothesisModuli) -> Result<Admissibility> {
    let report = classify(s);
    let mut reasons = Vec::new();
    let mut warnings = Vec::new();
    if !report.l2_not_l1 {
        reasons.push(format!(
            "{REASON_L2_NOT_L1} (p = {}: {})",
            s.p,
            if report.in_l1 { "summable" } else { "not square-summable" }
        ));
    }
    match kind {
        SolverKind::FbSetvalued => warnings.push(WARNING_SELECTION_L2.to_string()),
        SolverKind::Fb => {
            let mu = require(moduli.mu, "μ", kind)?;
            if !report.fb_bound_ok(mu) {
                reasons.push(format!("{REASON_FB_BOUND} (limsup = {}, 2μ = {})", report.lambda_beta_limsup, 2.0 * mu));
            }
        }
        SolverKind::Fbf => {
            let mu = require(moduli.mu, "μ", kind)?;
            let eta = require(moduli.eta, "η", kind)?;
            if !report.fbf_bound_ok(mu, eta) {
                reasons.push(format!("{REASON_FBF_BOUND} (limsup = {})", report.fbf_limsup(mu, eta)));
            }
        }
        SolverKind::FbfComposite => {
            let mu = require(moduli.mu, "μ", kind)?;
            let eta = require(moduli.eta, "η", kind)?;
            let k_norm = moduli
                .k_norm
                .filter(|k| *k >= 0.0)
                .ok_or_else(|| Error::Usage("solver fbf_composite requires ‖K‖".into()))?;
            if !report.composite_bound_ok(mu, eta, k_norm) {
                reasons.push(format!(
                    "{REASON_COMPOSITE_BOUND} (limsup = {})",
                    report.composite_limsup(mu, eta, k_norm)
                ));
            }
        }
    }
    if !report.penalty_ratio_summable {
        warnings.push(WARNING_PENALTY_GAP.to_string());
    }
    Ok(Admissibility { admissible: reasons.is_empty(), reasons, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sched(l: f64, p: f64, b: f64, q: f64) -> PolynomialSchedule {
        PolynomialSchedule::new(l, p, b, q).unwrap()
    }

    #[test]
    fn evaluates_terms() {
        let s = sched(1.0, 0.9, 1.0, 0.5);
        assert_relative_eq!(s.lambda(5), 0.234924, epsilon = 5e-6);
        assert_relative_eq!(s.beta(5), 2.23607, epsilon = 5e-6);
        let h = sched(1.0, 1.0, 1.0, 0.0);
        for n in 1..20 {
            assert_relative_eq!(h.lambda(n), 1.0 / n as f64, epsilon = 1e-15);
            assert_eq!(h.beta(n), 1.0);
        }
        let s = sched(2.0, 0.6, 3.0, 0.7);
        assert_eq!(s.lambda(1), 2.0);
        assert_eq!(s.beta(1), 3.0);
    }

    #[test]
    fn rejects_nonpositive_scales() {
        assert!(PolynomialSchedule::new(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(PolynomialSchedule::new(1.0, 1.0, -2.0, 0.0).is_err());
        let err = PolynomialSchedule::new(-1.0, 1.0, 1.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("λ₀ must be positive"));
    }

    #[test]
    fn classification_examples() {
        let r = classify(&sched(1.0, 1.0, 1.0, 0.0));
        assert!(r.l2_not_l1);
        assert!(!r.penalty_ratio_summable);

        let r = classify(&sched(1.0, 0.9, 1.0, 0.5));
        assert!(r.l2_not_l1);
        assert!(r.penalty_ratio_summable);
        assert_eq!(r.lambda_beta_limsup, ExtReal::Finite(0.0));

        let r = classify(&sched(1.0, 0.4, 1.0, 0.7));
        assert!(!r.l2_not_l1);
        for kind in SolverKind::ALL {
            let m = HypothesisModuli { mu: Some(1.0), eta: Some(1.0), k_norm: Some(1.0) };
            assert!(!admissible_for(&sched(1.0, 0.4, 1.0, 0.7), kind, &m).unwrap().admissible);
        }
    }

    #[test]
    fn limits_by_exponent_order() {
        assert_eq!(classify(&sched(3.0, 0.6, 1.0, 0.6)).lambda_beta_limsup, ExtReal::Finite(3.0));
        assert_eq!(classify(&sched(3.0, 0.6, 1.0, 0.7)).lambda_beta_limsup, ExtReal::PosInf);
        assert_eq!(classify(&sched(3.0, 0.0, 1.0, -1.0)).lambda_limit, ExtReal::Finite(3.0));
    }

    #[test]
    fn admissibility_examples() {
        let fb = HypothesisModuli { mu: Some(0.5), ..Default::default() };
        let ok = admissible_for(&sched(1.0, 0.9, 1.0, 0.5), SolverKind::Fb, &fb).unwrap();
        assert!(ok.admissible, "{ok:?}");

        let bad = admissible_for(&sched(3.0, 0.6, 1.0, 0.6), SolverKind::Fb, &fb).unwrap();
        assert!(!bad.admissible);
        assert_eq!(bad.reasons.len(), 1);
        assert!(bad.reasons[0].starts_with(REASON_FB_BOUND));

        let fbf = HypothesisModuli { mu: Some(1.0), eta: Some(1.0), k_norm: None };
        assert!(admissible_for(&sched(0.2, 0.9, 1.0, 0.5), SolverKind::Fbf, &fbf).unwrap().admissible);
    }

    #[test]
    fn missing_modulus_is_usage_error() {
        let err = admissible_for(&sched(1.0, 0.9, 1.0, 0.5), SolverKind::Fb, &HypothesisModuli::default()).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        let m = HypothesisModuli { mu: Some(1.0), eta: Some(1.0), k_norm: None };
        assert!(admissible_for(&sched(1.0, 0.9, 1.0, 0.5), SolverKind::FbfComposite, &m).is_err());
    }

    #[test]
    fn l2_rejection_reason_mentions_space() {
        let m = HypothesisModuli { mu: Some(1.0), ..Default::default() };
        let r = admissible_for(&sched(1.0, 0.4, 1.0, 0.0), SolverKind::Fb, &m).unwrap();
        assert!(r.reasons.iter().any(|s| s.contains("ℓ²∖ℓ¹")));
    }

    #[test]
    fn zero_operators_make_terms_vanish() {
        let r = classify(&sched(5.0, 0.0, 1.0, -1.0));
        assert!(r.fbf_bound_ok(1.0, f64::INFINITY));
        assert!(r.fb_bound_ok(f64::INFINITY));
        assert!(!r.composite_bound_ok(1.0, f64::INFINITY, 1.0));
        assert_relative_eq!(coupled_lipschitz(f64::INFINITY, 1.0), 2f64.sqrt());
    }

    #[test]
    fn boundary_is_strict() {
        let r = classify(&sched(1.0, 0.9, 1.0, 0.9));
        assert!(!r.fb_bound_ok(0.5));
        assert!(r.fb_bound_ok(0.5000001));
    }

    #[test]
    fn solver_names_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(SolverKind::parse(k.name()), Some(k));
        }
        assert_eq!(SolverKind::parse("fbf_accel"), None);
    }

    #[test]
    fn decreasing_product_when_penalty_grows_slower() {
        let s = sched(2.0, 0.8, 3.0, 0.3);
        let mut prev = f64::INFINITY;
        for n in (1..1_000_000u64).step_by(997) {
            let v = s.lambda(n) * s.beta(n);
            assert!(v < prev);
            prev = v;
        }
        assert!(s.lambda(1_000_000) * s.beta(1_000_000) < 6.0 * 1e-3);
        assert_eq!(classify(&s).lambda_beta_limsup, ExtReal::Finite(0.0));
    }

    #[test]
    fn classification_agrees_with_partial_sum_growth() {
        for p in [0.55, 0.75, 0.95, 1.2, 1.5, 2.0] {
            let s = sched(1.0, p, 1.0, 0.0);
            let mut sum = 0.0;
            let mut at_1e3 = 0.0;
            let mut tail_increment = 0.0;
            for n in 1..=1_000_000u64 {
                let term = s.lambda(n);
                sum += term;
                if n == 1000 {
                    at_1e3 = sum;
                }
                if n > 999_000 {
                    tail_increment += term;
                }
            }
            let r = classify(&s);
            if r.in_l1 {
                // the last thousand terms barely move the sum
                assert!(tail_increment / sum < 1e-6 * 1000.0, "p = {p}");
                assert!(s.lambda(1_000_000) / sum < 1e-6, "p = {p}");
            } else {
                assert!(sum > 2.0 * at_1e3, "p = {p}");
            }
        }
    }
}
