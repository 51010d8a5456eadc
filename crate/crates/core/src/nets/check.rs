//! Budgeted membership checkers for the asymptotic-vanishing ideals.
//!
//! Membership is a statement over an infinite index set, every
//! derivative order, and (for the special ideals) open neighbourhoods,
//! so the checkers work through explicit budgets: a ladder of threshold
//! candidates λ, a deterministic sample of indices μ ≥ λ, a derivative
//! order cap, and an enumeration budget for the singularity sets.
//! Verdicts are three-valued; every verification carries certificates
//! (threshold, per-index mode, witness boxes) and every refutation
//! carries a violation that can be replayed against the net.
//!
//! Exact-zero certification prefers support-box disjointness; numeric
//! zeros (≤ the configured tolerance) are annotated so suites can demand
//! certificate-only verification where the mathematics allows it.

use super::{IdealKind, Net, NetsError};
use crate::geom::{multi_indices_up_to, BoxN, DomainBox, MultiIndex};
use crate::poset::PosetElem;
use crate::rng::SplitMix64;
use crate::sets::{limsup_contains, LimsupFamily, LimsupVerdict, SingPrimitive, SingularitySet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    /// Derivative order cap P for the J-condition.
    pub derivative_cap: u32,
    /// Ladder length and per-threshold tail sample size.
    pub tail_budget: usize,
    /// How many primitives of an enumerated set are examined.
    pub enum_budget: u64,
    /// Magnitudes below this count as numeric zeros.
    pub numeric_tol: f64,
    /// Points sampled inside a candidate box for numeric ≡0 checks.
    pub box_samples: u32,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            derivative_cap: 2,
            tail_budget: 12,
            enum_budget: 256,
            numeric_tol: 1e-12,
            box_samples: 6,
            seed: 0xf0a_c0de,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    VerifiedAtScale,
    Refuted,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertMode {
    /// The sample lies strictly outside every support box of the term.
    Exact,
    /// Zeroness was confirmed numerically within the tolerance.
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuCertificate {
    pub mu: PosetElem,
    pub mode: CertMode,
    /// The open witness box Δ_μ for the special (I-kind) condition.
    pub delta: Option<BoxN>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCertificate {
    pub x: Vec<f64>,
    pub lambda: PosetElem,
    pub mus: Vec<MuCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ViolationKind {
    NonzeroDerivative { p: MultiIndex, value: f64 },
    NonzeroOnBox { at: Vec<f64>, value: f64 },
    InsideSigmaMu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: Vec<f64>,
    pub mu: PosetElem,
    pub kind: ViolationKind,
}

impl Violation {
    /// Re-check the violation against the net it came from.
    pub fn replays_against(&self, w: &Net, tol: f64) -> bool {
        let term = w.term(&self.mu);
        match &self.kind {
            ViolationKind::NonzeroDerivative { p, value } => term
                .differentiate(p)
                .evaluate(&self.x)
                .map(|v| v.abs() > tol && (v - value).abs() <= 1e-9 * value.abs().max(1.0))
                .unwrap_or(false),
            ViolationKind::NonzeroOnBox { at, value } => term
                .evaluate(at)
                .map(|v| v.abs() > tol && (v - value).abs() <= 1e-9 * value.abs().max(1.0))
                .unwrap_or(false),
            ViolationKind::InsideSigmaMu => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetsUsed {
    pub derivative_cap: u32,
    pub tail_budget: usize,
    pub enum_budget: u64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub outcome: Outcome,
    pub certificates: Vec<SampleCertificate>,
    pub witness: Option<Violation>,
    pub budgets: BudgetsUsed,
    pub notes: Vec<String>,
}

impl MembershipVerdict {
    /// True when every certificate is support-box exact (no numeric zeros).
    pub fn certificate_only(&self) -> bool {
        self.certificates
            .iter()
            .all(|c| c.mus.iter().all(|m| m.mode == CertMode::Exact))
    }
}

enum SampleResult {
    Verified(SampleCertificate),
    Refuted(Violation),
    Inconclusive(String),
}

fn budgets(cfg: &CheckConfig, samples: usize) -> BudgetsUsed {
    BudgetsUsed {
        derivative_cap: cfg.derivative_cap,
        tail_budget: cfg.tail_budget,
        enum_budget: cfg.enum_budget,
        samples,
    }
}

fn aggregate(
    results: Vec<SampleResult>,
    cfg: &CheckConfig,
    notes: Vec<String>,
) -> MembershipVerdict {
    let n = results.len();
    let mut certificates = Vec::new();
    let mut witness = None;
    let mut inconclusive = false;
    let mut notes = notes;
    for r in results {
        match r {
            SampleResult::Verified(c) => certificates.push(c),
            SampleResult::Refuted(v) => {
                if witness.is_none() {
                    witness = Some(v);
                }
            }
            SampleResult::Inconclusive(msg) => {
                inconclusive = true;
                notes.push(msg);
            }
        }
    }
    let outcome = if witness.is_some() {
        Outcome::Refuted
    } else if inconclusive {
        Outcome::Inconclusive
    } else {
        Outcome::VerifiedAtScale
    };
    MembershipVerdict { outcome, certificates, witness, budgets: budgets(cfg, n), notes }
}

// ---------------------------------------------------------------------
// the J condition: eventually, all derivatives vanish at the point

/// Check w ∈ J_{L,Σ} on the given samples (all verifiably outside Σ):
/// for each sample the checker searches a threshold λ such that every
/// examined μ ≥ λ has D^p w_μ(x) = 0 for all |p| ≤ P.
pub fn check_j_membership(
    w: &Net,
    sigma: &SingularitySet,
    samples: &[Vec<f64>],
    cfg: &CheckConfig,
) -> Result<MembershipVerdict, NetsError> {
    let n = w.domain.dim();
    let derivs = multi_indices_up_to(n, cfg.derivative_cap);
    let mut results = Vec::with_capacity(samples.len());
    for x in samples {
        if !sigma.definitely_outside(x, cfg.enum_budget) {
            return Err(NetsError::SampleInsideSigma { x: x.clone() });
        }
        results.push(check_j_sample(w, x, &derivs, cfg));
    }
    Ok(aggregate(results, cfg, Vec::new()))
}

fn check_j_sample(
    w: &Net,
    x: &[f64],
    derivs: &[MultiIndex],
    cfg: &CheckConfig,
) -> SampleResult {
    let n = w.domain.dim();
    let mut last_violation: Option<Violation> = None;
    let mut ladder_violations = 0usize;
    let mut ladders = 0usize;
    for j in 0..cfg.tail_budget as u64 {
        let lambda = w.poset.chain(j);
        let mus = w.poset.successors_sample(&lambda, cfg.tail_budget);
        ladders += 1;
        let mut certs = Vec::with_capacity(mus.len());
        let mut failed = false;
        'mus: for mu in &mus {
            let term = w.term(mu);
            if term.support(n).excludes(x) {
                certs.push(MuCertificate { mu: mu.clone(), mode: CertMode::Exact, delta: None });
                continue;
            }
            for p in derivs {
                match term.differentiate(p).evaluate(x) {
                    Ok(v) if v.abs() <= cfg.numeric_tol => {}
                    Ok(v) => {
                        last_violation = Some(Violation {
                            x: x.to_vec(),
                            mu: mu.clone(),
                            kind: ViolationKind::NonzeroDerivative { p: p.clone(), value: v },
                        });
                        ladder_violations += 1;
                        failed = true;
                        break 'mus;
                    }
                    Err(e) => {
                        return SampleResult::Inconclusive(format!(
                            "evaluation failed at {x:?}, index {mu}: {e}"
                        ));
                    }
                }
            }
            certs.push(MuCertificate { mu: mu.clone(), mode: CertMode::Numeric, delta: None });
        }
        if !failed {
            return SampleResult::Verified(SampleCertificate {
                x: x.to_vec(),
                lambda,
                mus: certs,
            });
        }
    }
    // a refutation needs violations persisting through a ladder of at
    // least two thresholds; a starved budget stays inconclusive
    if ladder_violations == ladders && ladders >= 2 {
        SampleResult::Refuted(last_violation.expect("violations counted"))
    } else {
        SampleResult::Inconclusive(format!(
            "budget exhausted after {ladders} thresholds at {x:?}"
        ))
    }
}

// ---------------------------------------------------------------------
// the I condition: eventually, the term vanishes on an open box around
// the point that avoids Σ_μ

/// Check w ∈ I_{L,Σ} for a limsup representation of Σ on the given
/// samples. Certificates carry the witness boxes Δ_μ.
pub fn check_i_membership(
    w: &Net,
    sigma: &SingularitySet,
    family: &LimsupFamily,
    samples: &[Vec<f64>],
    cfg: &CheckConfig,
) -> Result<MembershipVerdict, NetsError> {
    if family.poset != w.poset {
        return Err(NetsError::PosetMismatch {
            a: w.poset.label.clone(),
            b: family.poset.label.clone(),
        });
    }
    spot_check_representation(sigma, family, samples, cfg)?;
    let mut results = Vec::with_capacity(samples.len());
    for x in samples {
        if !sigma.definitely_outside(x, cfg.enum_budget) {
            return Err(NetsError::SampleInsideSigma { x: x.clone() });
        }
        results.push(check_i_sample(w, family, x, cfg));
    }
    Ok(aggregate(results, cfg, Vec::new()))
}

fn spot_check_representation(
    sigma: &SingularitySet,
    family: &LimsupFamily,
    samples: &[Vec<f64>],
    cfg: &CheckConfig,
) -> Result<(), NetsError> {
    // a few early enumerated points must be recognized as members
    let reachable = (cfg.tail_budget.saturating_sub(2)).min(5) as u64;
    for p in sigma.primitives(reachable) {
        if let SingPrimitive::Point(v) = p {
            match limsup_contains(family, &v, cfg.tail_budget) {
                LimsupVerdict::In => {}
                other => {
                    return Err(NetsError::NotARepresentation(format!(
                        "enumerated point {v:?} is {other:?} under {}",
                        family.label
                    )))
                }
            }
        }
    }
    // and sample points outside the set must not be members
    for x in samples.iter().take(3) {
        if sigma.definitely_outside(x, cfg.enum_budget) {
            if let LimsupVerdict::In = limsup_contains(family, x, cfg.tail_budget) {
                return Err(NetsError::NotARepresentation(format!(
                    "outside point {x:?} is In under {}",
                    family.label
                )));
            }
        }
    }
    Ok(())
}

fn check_i_sample(w: &Net, family: &LimsupFamily, x: &[f64], cfg: &CheckConfig) -> SampleResult {
    let n = w.domain.dim();
    let boundary_gap = (0..n)
        .map(|i| {
            let (lo, hi) = w.domain.axis(i);
            (x[i] - lo).min(hi - x[i])
        })
        .fold(f64::INFINITY, f64::min);
    let mut last_violation: Option<Violation> = None;
    let mut ladder_violations = 0usize;
    let mut ladders = 0usize;
    for j in 0..cfg.tail_budget as u64 {
        let lambda = w.poset.chain(j);
        let mus = w.poset.successors_sample(&lambda, cfg.tail_budget);
        ladders += 1;
        let mut certs = Vec::with_capacity(mus.len());
        let mut failed = false;
        for mu in &mus {
            let prims = family.sigma_at(mu);
            if prims.iter().any(|p| p.contains(x)) {
                last_violation = Some(Violation {
                    x: x.to_vec(),
                    mu: mu.clone(),
                    kind: ViolationKind::InsideSigmaMu,
                });
                ladder_violations += 1;
                failed = true;
                break;
            }
            let sigma_gap = prims
                .iter()
                .map(|p| p.linf_dist(x))
                .fold(f64::INFINITY, f64::min);
            let term = w.term(mu);
            let support = term.support(n);
            if support.excludes(x) {
                let delta = 0.5 * sigma_gap.min(boundary_gap).min(support.gap_to(x));
                certs.push(MuCertificate {
                    mu: mu.clone(),
                    mode: CertMode::Exact,
                    delta: Some(BoxN::cube(x, delta)),
                });
                continue;
            }
            // fall back to sampling the candidate box numerically
            let delta = 0.5 * sigma_gap.min(boundary_gap);
            let dbox = BoxN::cube(x, delta);
            let mut probe_violation = None;
            let mut rng = SplitMix64::new(cfg.seed ^ mu.level.wrapping_mul(0x9e37));
            for s in 0..cfg.box_samples {
                let pt: Vec<f64> = if s == 0 {
                    x.to_vec()
                } else {
                    (0..n).map(|i| rng.f64_in(dbox.lo[i], dbox.hi[i])).collect()
                };
                match term.evaluate(&pt) {
                    Ok(v) if v.abs() <= cfg.numeric_tol => {}
                    Ok(v) => {
                        probe_violation = Some(Violation {
                            x: x.to_vec(),
                            mu: mu.clone(),
                            kind: ViolationKind::NonzeroOnBox { at: pt, value: v },
                        });
                        break;
                    }
                    Err(e) => {
                        return SampleResult::Inconclusive(format!(
                            "evaluation failed inside Δ at {x:?}, index {mu}: {e}"
                        ));
                    }
                }
            }
            match probe_violation {
                Some(v) => {
                    last_violation = Some(v);
                    ladder_violations += 1;
                    failed = true;
                    break;
                }
                None => certs.push(MuCertificate {
                    mu: mu.clone(),
                    mode: CertMode::Numeric,
                    delta: Some(dbox),
                }),
            }
        }
        if !failed {
            return SampleResult::Verified(SampleCertificate {
                x: x.to_vec(),
                lambda,
                mus: certs,
            });
        }
    }
    if ladder_violations == ladders && ladders >= 2 {
        SampleResult::Refuted(last_violation.expect("violations counted"))
    } else {
        SampleResult::Inconclusive(format!(
            "budget exhausted after {ladders} thresholds at {x:?}"
        ))
    }
}

// ---------------------------------------------------------------------
// quotient equality and Lemma 2

/// Equality modulo the shared ideal tag: the tag's checker applied to
/// the difference net. Quotient equality is not decidable at this
/// scale, so the answer is a verdict, never a boolean.
pub fn equal_modulo_ideal(
    u: &super::GenFunction,
    v: &super::GenFunction,
    samples: &[Vec<f64>],
    cfg: &CheckConfig,
) -> Result<MembershipVerdict, NetsError> {
    if !u.tag.same_tag(&v.tag) {
        return Err(NetsError::TagMismatch);
    }
    let diff = super::net_sub(&u.net, &v.net)?;
    check_against_spec(&diff, &u.tag, samples, cfg)
}

/// Membership of a net in the ideal described by a tag; family kinds
/// verify against any member (the union ideal).
pub fn check_against_spec(
    w: &Net,
    tag: &super::IdealSpec,
    samples: &[Vec<f64>],
    cfg: &CheckConfig,
) -> Result<MembershipVerdict, NetsError> {
    match tag.kind {
        IdealKind::JSingle => check_j_membership(w, &tag.members[0].sigma, samples, cfg),
        IdealKind::ISingle => {
            let m = &tag.members[0];
            check_i_membership(w, &m.sigma, m.repr.as_ref().expect("I member"), samples, cfg)
        }
        IdealKind::JFamily | IdealKind::IFamily => {
            let mut verdicts = Vec::new();
            for m in &tag.members {
                let v = match tag.kind {
                    IdealKind::JFamily => check_j_membership(w, &m.sigma, samples, cfg)?,
                    _ => check_i_membership(
                        w,
                        &m.sigma,
                        m.repr.as_ref().expect("I member"),
                        samples,
                        cfg,
                    )?,
                };
                if v.outcome == Outcome::VerifiedAtScale {
                    return Ok(v);
                }
                verdicts.push(v);
            }
            if verdicts.iter().all(|v| v.outcome == Outcome::Refuted) {
                Ok(verdicts.into_iter().next().expect("nonempty family"))
            } else {
                let mut v = verdicts
                    .into_iter()
                    .find(|v| v.outcome == Outcome::Inconclusive)
                    .expect("mixed outcomes include inconclusive");
                v.notes.push("no family member verified".into());
                Ok(v)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma2Report {
    pub premise: Outcome,
    pub conclusion: Outcome,
    /// verified for the smaller set implies verified for the larger one
    pub holds: bool,
}

/// Monotonicity of the special ideals in the singularity set: check the
/// implication w ∈ I_{L,Σ} ⟹ w ∈ I_{L,Σ'} for Σ ⊆ Σ' on common samples
/// outside Σ'.
pub fn lemma2_monotonicity_check(
    w: &Net,
    smaller: (&SingularitySet, &LimsupFamily),
    larger: (&SingularitySet, &LimsupFamily),
    samples: &[Vec<f64>],
    cfg: &CheckConfig,
) -> Result<Lemma2Report, NetsError> {
    if !smaller.0.included_in(larger.0, cfg.enum_budget) {
        return Err(NetsError::InclusionNotVerified);
    }
    let premise = check_i_membership(w, smaller.0, smaller.1, samples, cfg)?;
    let conclusion = check_i_membership(w, larger.0, larger.1, samples, cfg)?;
    let holds = !(premise.outcome == Outcome::VerifiedAtScale
        && conclusion.outcome != Outcome::VerifiedAtScale);
    Ok(Lemma2Report { premise: premise.outcome, conclusion: conclusion.outcome, holds })
}

/// Deterministic interior samples verifiably outside Σ with the given
/// margin.
pub fn sample_outside(
    sigma: &SingularitySet,
    domain: &DomainBox,
    count: usize,
    margin: f64,
    seed: u64,
    enum_budget: u64,
) -> Result<Vec<Vec<f64>>, NetsError> {
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..(count * 4000) {
        if out.len() == count {
            break;
        }
        let x = rng.point_in(domain);
        if sigma.min_dist(&x, enum_budget) >= margin {
            out.push(x);
        }
    }
    if out.len() < count {
        return Err(NetsError::NotARepresentation(format!(
            "could not find {count} samples at margin {margin} outside {}",
            sigma.label
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr;
    use crate::nets::{
        diagonal_embed, example_one_net, net_derive, net_mul, zero_net, RadiusSchedule,
    };
    use crate::poset::IndexPoset;
    use crate::sets::{
        dyadic_points, DenseCheckCfg, SetClass,
    };

    fn unit_domain() -> DomainBox {
        DomainBox::line(0.0, 1.0).unwrap()
    }

    fn three_points() -> SingularitySet {
        SingularitySet::nowhere_dense(
            &unit_domain(),
            vec![
                SingPrimitive::Point(vec![0.25]),
                SingPrimitive::Point(vec![0.5]),
                SingPrimitive::Point(vec![0.75]),
            ],
            &DenseCheckCfg::at_resolution(0.05),
        )
        .unwrap()
    }

    #[test]
    fn zero_net_verifies_everywhere() {
        let dom = unit_domain();
        let sigma = three_points();
        let w = zero_net(&IndexPoset::naturals(), &dom);
        let cfg = CheckConfig::default();
        let samples = sample_outside(&sigma, &dom, 10, 0.01, 7, cfg.enum_budget).unwrap();
        let v = check_j_membership(&w, &sigma, &samples, &cfg).unwrap();
        assert_eq!(v.outcome, Outcome::VerifiedAtScale);
        assert!(v.certificate_only(), "zero constant certifies exactly");
    }

    #[test]
    fn diagonal_of_nonzero_is_refuted_with_replayable_witness() {
        let dom = unit_domain();
        let sigma = three_points();
        let cfg = CheckConfig::default();
        let w = diagonal_embed(&expr::sin(&expr::t()), &IndexPoset::naturals(), &dom);
        let samples = sample_outside(&sigma, &dom, 5, 0.01, 3, cfg.enum_budget).unwrap();
        let v = check_j_membership(&w, &sigma, &samples, &cfg).unwrap();
        assert_eq!(v.outcome, Outcome::Refuted);
        let witness = v.witness.expect("witness");
        assert!(witness.replays_against(&w, cfg.numeric_tol));
    }

    #[test]
    fn sample_inside_sigma_rejected() {
        let dom = unit_domain();
        let sigma = three_points();
        let w = zero_net(&IndexPoset::naturals(), &dom);
        let err = check_j_membership(&w, &sigma, &[vec![0.5]], &CheckConfig::default());
        assert!(matches!(err, Err(NetsError::SampleInsideSigma { .. })));
    }

    #[test]
    fn example_one_verifies_certificate_only() {
        let dom = unit_domain();
        let sigma = three_points();
        let (_poset, w, family) =
            example_one_net(&sigma, &dom, RadiusSchedule { initial: 0.25, ratio: 0.5 }, 16)
                .unwrap();
        let cfg = CheckConfig::default();
        let samples = sample_outside(&sigma, &dom, 20, 0.02, 99, cfg.enum_budget).unwrap();
        let v = check_i_membership(&w, &sigma, &family, &samples, &cfg).unwrap();
        assert_eq!(v.outcome, Outcome::VerifiedAtScale);
        assert!(v.certificate_only());
        // every certificate carries a Δ box around its sample
        for c in &v.certificates {
            for m in &c.mus {
                let d = m.delta.as_ref().expect("Δ recorded");
                assert!(d.contains(&c.x));
            }
        }
    }

    #[test]
    fn example_one_on_dyadics_via_support_boxes() {
        let dom = unit_domain();
        let gate = DenseCheckCfg::at_resolution(0.02);
        let sigma = SingularitySet::enumerated(
            SetClass::BaireFirst,
            &dom,
            dyadic_points(0.0, 1.0),
            &gate,
        )
        .unwrap();
        let (_poset, w, family) =
            example_one_net(&sigma, &dom, RadiusSchedule { initial: 0.25, ratio: 0.5 }, 64)
                .unwrap();
        let cfg = CheckConfig { enum_budget: 64, ..CheckConfig::default() };
        // x = 1/3 escapes every dyadic bump support once levels shrink
        let v = check_i_membership(&w, &sigma, &family, &[vec![1.0 / 3.0]], &cfg).unwrap();
        assert_eq!(v.outcome, Outcome::VerifiedAtScale);
        assert!(v.certificate_only());
    }

    #[test]
    fn diagonal_one_refuted_for_i() {
        let dom = unit_domain();
        let sigma = three_points();
        let (poset, _w, family) =
            example_one_net(&sigma, &dom, RadiusSchedule { initial: 0.25, ratio: 0.5 }, 16)
                .unwrap();
        let one = diagonal_embed(&expr::constant(1.0), &poset, &dom);
        let cfg = CheckConfig::default();
        let samples = sample_outside(&sigma, &dom, 4, 0.02, 5, cfg.enum_budget).unwrap();
        let v = check_i_membership(&one, &sigma, &family, &samples, &cfg).unwrap();
        assert_eq!(v.outcome, Outcome::Refuted);
        assert!(v.witness.unwrap().replays_against(&one, cfg.numeric_tol));
    }

    #[test]
    fn derivation_closure_on_examples() {
        let dom = unit_domain();
        let sigma = three_points();
        let (_poset, w, family) =
            example_one_net(&sigma, &dom, RadiusSchedule { initial: 0.25, ratio: 0.5 }, 16)
                .unwrap();
        let cfg = CheckConfig::default();
        let samples = sample_outside(&sigma, &dom, 10, 0.02, 13, cfg.enum_budget).unwrap();
        for p in [vec![1], vec![2]] {
            let dw = net_derive(&w, &MultiIndex(p.clone()));
            let v = check_i_membership(&dw, &sigma, &family, &samples, &cfg).unwrap();
            assert_eq!(v.outcome, Outcome::VerifiedAtScale, "derivative {p:?}");
        }
    }

    #[test]
    fn absorption_under_diagonal_multiplication() {
        let dom = unit_domain();
        let sigma = three_points();
        let (poset, w, family) =
            example_one_net(&sigma, &dom, RadiusSchedule { initial: 0.25, ratio: 0.5 }, 16)
                .unwrap();
        let cfg = CheckConfig::default();
        let samples = sample_outside(&sigma, &dom, 10, 0.02, 29, cfg.enum_budget).unwrap();
        let psi = diagonal_embed(&expr::exp(&expr::t()), &poset, &dom);
        let prod = net_mul(&w, &psi).unwrap();
        let v = check_i_membership(&prod, &sigma, &family, &samples, &cfg).unwrap();
        assert_eq!(v.outcome, Outcome::VerifiedAtScale);
        assert!(v.certificate_only(), "support boxes only shrink under products");
    }

    #[test]
    fn slow_net_with_tiny_budget_is_inconclusive() {
        let dom = unit_domain();
        let sigma = three_points();
        let poset = IndexPoset::naturals();
        // terms are 1 for ten levels, then vanish
        let w = Net::new(dom.clone(), poset, "slow", |l| {
            if l.level < 10 {
                expr::constant(1.0)
            } else {
                expr::constant(0.0)
            }
        });
        let samples = vec![vec![0.3]];
        let starved = CheckConfig { tail_budget: 1, ..CheckConfig::default() };
        let v = check_j_membership(&w, &sigma, &samples, &starved).unwrap();
        assert_eq!(v.outcome, Outcome::Inconclusive);
        // with an adequate budget the tail is found and verified
        let ok = CheckConfig { tail_budget: 16, ..CheckConfig::default() };
        let v = check_j_membership(&w, &sigma, &samples, &ok).unwrap();
        assert_eq!(v.outcome, Outcome::VerifiedAtScale);
    }

    #[test]
    fn lemma2_holds_on_extended_sets() {
        let dom = unit_domain();
        let gate = DenseCheckCfg::at_resolution(0.05);
        let sigma = three_points();
        let extra = SingularitySet::nowhere_dense(
            &dom,
            vec![SingPrimitive::Point(vec![0.125])],
            &gate,
        )
        .unwrap();
        let bigger = crate::sets::union(&sigma, &extra, &gate).unwrap();
        let (_poset, w, family) =
            example_one_net(&sigma, &dom, RadiusSchedule { initial: 0.2, ratio: 0.5 }, 16)
                .unwrap();
        // the larger set is represented over the same poset
        let prims = bigger.primitives(16);
        let family_big = LimsupFamily::new(
            "bigger-on-same-poset",
            family.poset.clone(),
            move |lambda| {
                let mut v: Vec<SingPrimitive> = lambda
                    .set
                    .iter()
                    .filter_map(|&i| prims.get(i as usize).cloned())
                    .collect();
                // keep the extra point cofinal so the limsup covers it
                v.push(SingPrimitive::Point(vec![0.125]));
                v
            },
        );
        let cfg = CheckConfig::default();
        let samples = sample_outside(&bigger, &dom, 8, 0.02, 31, cfg.enum_budget).unwrap();
        let report =
            lemma2_monotonicity_check(&w, (&sigma, &family), (&bigger, &family_big), &samples, &cfg)
                .unwrap();
        assert!(report.holds);
        assert_eq!(report.premise, Outcome::VerifiedAtScale);
    }
}
