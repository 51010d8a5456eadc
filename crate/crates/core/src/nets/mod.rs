//! Nets of smooth functions over right-directed index posets, the
//! asymptotic-vanishing ideals as budgeted membership checkers, and
//! generalized functions as net-plus-ideal-tag values.
//!
//! A net is a lazy, memoized map from poset elements to expressions on a
//! shared domain. Ideal membership is a universally quantified statement
//! over an infinite index set and all derivative orders, so the checkers
//! in [`check`] return three-valued verdicts with replayable
//! certificates and witnesses instead of booleans.

pub mod check;

pub use check::{
    check_i_membership, check_j_membership, equal_modulo_ideal, lemma2_monotonicity_check,
    sample_outside, CertMode, CheckConfig, Lemma2Report, MembershipVerdict, MuCertificate,
    Outcome, SampleCertificate, Violation, ViolationKind,
};

pub use crate::poset::{IndexPoset, PosetElem, PosetKind};

use crate::expr::{self, SmoothExpr};
use crate::geom::{DomainBox, MultiIndex};
use crate::sets::{LimsupFamily, SingPrimitive, SingularitySet};
use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

#[derive(Debug, thiserror::Error)]
pub enum NetsError {
    #[error("nets live over different posets: {a} vs {b}")]
    PosetMismatch { a: String, b: String },
    #[error("nets live on different domains")]
    DomainMismatch,
    #[error("sample {x:?} is not verifiably outside the singularity set")]
    SampleInsideSigma { x: Vec<f64> },
    #[error("family is not a representation of the set: {0}")]
    NotARepresentation(String),
    #[error("generalized functions carry different ideal tags")]
    TagMismatch,
    #[error("no ideal inclusion derivable from {from} to {to}")]
    IllegalRetag { from: String, to: String },
    #[error("example-one needs a point-enumerable set")]
    NotPointEnumerable,
    #[error("radius schedule must be strictly decreasing: initial {initial}, ratio {ratio}")]
    BadRadiusSchedule { initial: f64, ratio: f64 },
    #[error("enumerated point {0:?} touches the domain boundary")]
    PointOnBoundary(Vec<f64>),
    #[error("set inclusion could not be verified on enumerated primitives")]
    InclusionNotVerified,
    #[error("family union condition failed: union of members {0} and {1} fits no member")]
    UnionCondition(usize, usize),
    #[error(transparent)]
    Sets(#[from] crate::sets::SetsError),
}

/// Indexed family (w_λ | λ ∈ Λ) of smooth functions on a shared domain.
#[derive(Clone)]
pub struct Net {
    pub domain: DomainBox,
    pub poset: IndexPoset,
    pub label: String,
    term_fn: Arc<dyn Fn(&PosetElem) -> SmoothExpr + Send + Sync>,
    memo: Arc<RwLock<BTreeMap<PosetElem, SmoothExpr>>>,
}

impl std::fmt::Debug for Net {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Net({} over {})", self.label, self.poset.label)
    }
}

impl Net {
    pub fn new(
        domain: DomainBox,
        poset: IndexPoset,
        label: impl Into<String>,
        term_fn: impl Fn(&PosetElem) -> SmoothExpr + Send + Sync + 'static,
    ) -> Self {
        Net {
            domain,
            poset,
            label: label.into(),
            term_fn: Arc::new(term_fn),
            memo: Arc::new(RwLock::new(BTreeMap::new())),
        }
    }

    /// The term w_λ; materialized lazily and memoized (idempotent fill).
    pub fn term(&self, lambda: &PosetElem) -> SmoothExpr {
        if let Some(t) = self.memo.read().unwrap().get(lambda) {
            return t.clone();
        }
        let t = (self.term_fn)(lambda);
        self.memo
            .write()
            .unwrap()
            .entry(lambda.clone())
            .or_insert_with(|| t.clone());
        t
    }

    fn same_context(&self, other: &Net) -> Result<(), NetsError> {
        if self.poset != other.poset {
            return Err(NetsError::PosetMismatch {
                a: self.poset.label.clone(),
                b: other.poset.label.clone(),
            });
        }
        if self.domain != other.domain {
            return Err(NetsError::DomainMismatch);
        }
        Ok(())
    }
}

/// The diagonal embedding u(ψ): the constant net with every term ψ.
pub fn diagonal_embed(psi: &SmoothExpr, poset: &IndexPoset, domain: &DomainBox) -> Net {
    let psi = psi.clone();
    Net::new(
        domain.clone(),
        poset.clone(),
        format!("diagonal({psi})"),
        move |_| psi.clone(),
    )
}

pub fn zero_net(poset: &IndexPoset, domain: &DomainBox) -> Net {
    diagonal_embed(&expr::constant(0.0), poset, domain)
}

pub fn net_add(a: &Net, b: &Net) -> Result<Net, NetsError> {
    a.same_context(b)?;
    let (fa, fb) = (a.clone(), b.clone());
    Ok(Net::new(
        a.domain.clone(),
        a.poset.clone(),
        format!("({} + {})", a.label, b.label),
        move |l| expr::add(&fa.term(l), &fb.term(l)),
    ))
}

pub fn net_sub(a: &Net, b: &Net) -> Result<Net, NetsError> {
    a.same_context(b)?;
    let (fa, fb) = (a.clone(), b.clone());
    Ok(Net::new(
        a.domain.clone(),
        a.poset.clone(),
        format!("({} - {})", a.label, b.label),
        move |l| expr::sub(&fa.term(l), &fb.term(l)),
    ))
}

pub fn net_mul(a: &Net, b: &Net) -> Result<Net, NetsError> {
    a.same_context(b)?;
    let (fa, fb) = (a.clone(), b.clone());
    Ok(Net::new(
        a.domain.clone(),
        a.poset.clone(),
        format!("({} * {})", a.label, b.label),
        move |l| expr::mul(&fa.term(l), &fb.term(l)),
    ))
}

pub fn net_scale(a: &Net, k: f64) -> Net {
    let fa = a.clone();
    Net::new(
        a.domain.clone(),
        a.poset.clone(),
        format!("({k} * {})", a.label),
        move |l| expr::mul(&expr::constant(k), &fa.term(l)),
    )
}

/// Termwise p-th order partial derivation of the net.
pub fn net_derive(a: &Net, p: &MultiIndex) -> Net {
    let fa = a.clone();
    let p = p.clone();
    Net::new(
        a.domain.clone(),
        a.poset.clone(),
        format!("D{p}({})", a.label),
        move |l| fa.term(l).differentiate(&p),
    )
}

// ---------------------------------------------------------------------
// ideal tags

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum IdealKind {
    JSingle,
    JFamily,
    ISingle,
    IFamily,
}

impl IdealKind {
    fn is_i(self) -> bool {
        matches!(self, IdealKind::ISingle | IdealKind::IFamily)
    }
}

/// One singularity set of an ideal, with a limsup representation for the
/// I-kinds.
#[derive(Debug, Clone)]
pub struct IdealMember {
    pub sigma: SingularitySet,
    pub repr: Option<LimsupFamily>,
}

/// Which ideal a representative is taken modulo: J_{L,Σ}, J_{L,S},
/// I_{L,Σ} or I_{L,S_L}, with the singularity data attached.
#[derive(Debug, Clone)]
pub struct IdealSpec {
    pub kind: IdealKind,
    pub poset: IndexPoset,
    pub members: Vec<IdealMember>,
    pub label: String,
}

impl IdealSpec {
    pub fn j_single(poset: &IndexPoset, sigma: SingularitySet) -> IdealSpec {
        let label = format!("J({})", sigma.label);
        IdealSpec {
            kind: IdealKind::JSingle,
            poset: poset.clone(),
            members: vec![IdealMember { sigma, repr: None }],
            label,
        }
    }

    pub fn i_single(
        poset: &IndexPoset,
        sigma: SingularitySet,
        repr: LimsupFamily,
    ) -> Result<IdealSpec, NetsError> {
        if repr.poset != *poset {
            return Err(NetsError::PosetMismatch {
                a: poset.label.clone(),
                b: repr.poset.label.clone(),
            });
        }
        let label = format!("I({})", sigma.label);
        Ok(IdealSpec {
            kind: IdealKind::ISingle,
            poset: poset.clone(),
            members: vec![IdealMember { sigma, repr: Some(repr) }],
            label,
        })
    }

    /// Union ideal over a finite family basket. The union condition
    /// (closure of the family under pairwise unions, up to inclusion)
    /// is validated on enumerated primitives.
    pub fn j_family(
        poset: &IndexPoset,
        sigmas: Vec<SingularitySet>,
        label: impl Into<String>,
        enum_budget: u64,
    ) -> Result<IdealSpec, NetsError> {
        validate_union_condition(&sigmas, enum_budget)?;
        Ok(IdealSpec {
            kind: IdealKind::JFamily,
            poset: poset.clone(),
            members: sigmas
                .into_iter()
                .map(|sigma| IdealMember { sigma, repr: None })
                .collect(),
            label: label.into(),
        })
    }

    pub fn i_family(
        poset: &IndexPoset,
        members: Vec<IdealMember>,
        label: impl Into<String>,
        enum_budget: u64,
    ) -> Result<IdealSpec, NetsError> {
        let sigmas: Vec<SingularitySet> = members.iter().map(|m| m.sigma.clone()).collect();
        validate_union_condition(&sigmas, enum_budget)?;
        for m in &members {
            let repr = m.repr.as_ref().ok_or_else(|| {
                NetsError::NotARepresentation("I-family member without a representation".into())
            })?;
            if repr.poset != *poset {
                return Err(NetsError::PosetMismatch {
                    a: poset.label.clone(),
                    b: repr.poset.label.clone(),
                });
            }
        }
        Ok(IdealSpec {
            kind: IdealKind::IFamily,
            poset: poset.clone(),
            members,
            label: label.into(),
        })
    }

    pub fn same_tag(&self, other: &IdealSpec) -> bool {
        self.kind == other.kind
            && self.poset == other.poset
            && self.label == other.label
            && self.members.len() == other.members.len()
            && self
                .members
                .iter()
                .zip(&other.members)
                .all(|(a, b)| a.sigma.label == b.sigma.label && a.sigma.class == b.sigma.class)
    }
}

fn validate_union_condition(sigmas: &[SingularitySet], budget: u64) -> Result<(), NetsError> {
    for i in 0..sigmas.len() {
        for j in (i + 1)..sigmas.len() {
            // primitive-wise: both members must fit inside some basket member
            let fits = sigmas.iter().any(|cand| {
                sigmas[i].included_in(cand, budget) && sigmas[j].included_in(cand, budget)
            });
            if !fits {
                return Err(NetsError::UnionCondition(i, j));
            }
        }
    }
    Ok(())
}

/// A generalized function: a representative net plus its ideal tag.
#[derive(Debug, Clone)]
pub struct GenFunction {
    pub net: Net,
    pub tag: IdealSpec,
}

impl GenFunction {
    pub fn new(net: Net, tag: IdealSpec) -> Result<Self, NetsError> {
        if net.poset != tag.poset {
            return Err(NetsError::PosetMismatch {
                a: net.poset.label.clone(),
                b: tag.poset.label.clone(),
            });
        }
        Ok(GenFunction { net, tag })
    }

    /// Termwise derivative; the tag is unchanged (the ideals are closed
    /// under derivation).
    pub fn derive(&self, p: &MultiIndex) -> GenFunction {
        GenFunction { net: net_derive(&self.net, p), tag: self.tag.clone() }
    }
}

/// Surjective-homomorphism move: reinterpret the same representative
/// modulo a larger ideal. Legal exactly when the source ideal is
/// included in the target one, which is validated structurally on the
/// kind lattice (I ⊆ J, single ⊆ family) plus primitive-level set
/// inclusion.
pub fn retag(u: &GenFunction, target: &IdealSpec, enum_budget: u64) -> Result<GenFunction, NetsError> {
    if !ideal_included(&u.tag, target, enum_budget) {
        return Err(NetsError::IllegalRetag {
            from: u.tag.label.clone(),
            to: target.label.clone(),
        });
    }
    Ok(GenFunction { net: u.net.clone(), tag: target.clone() })
}

fn ideal_included(src: &IdealSpec, dst: &IdealSpec, budget: u64) -> bool {
    if src.poset != dst.poset {
        return false;
    }
    // I-ideals sit inside the matching J-ideals, never the other way
    if !src.kind.is_i() && dst.kind.is_i() {
        return false;
    }
    // every source set must land inside some target set
    src.members.iter().all(|m| {
        dst.members
            .iter()
            .any(|d| m.sigma.included_in(&d.sigma, budget))
    })
}

// ---------------------------------------------------------------------
// Example 1

/// Geometric radius schedule r_k = initial * ratio^k for the shrinking
/// bump supports of the example-one construction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RadiusSchedule {
    pub initial: f64,
    pub ratio: f64,
}

impl RadiusSchedule {
    pub fn radius(&self, level: u64) -> f64 {
        self.initial * self.ratio.powi(level.min(1 << 16) as i32)
    }
}

/// The example-one net: poset elements are pairs (finite subset A of the
/// enumerated points, radius level); the term is the sum of bumps over A
/// at the level's radius, clamped per point so every bump is compactly
/// supported inside the domain and positive at its own center.
pub fn example_one_net(
    sigma: &SingularitySet,
    domain: &DomainBox,
    schedule: RadiusSchedule,
    enum_budget: u64,
) -> Result<(IndexPoset, Net, LimsupFamily), NetsError> {
    if !(schedule.initial > 0.0) || !(schedule.ratio > 0.0 && schedule.ratio < 1.0) {
        return Err(NetsError::BadRadiusSchedule {
            initial: schedule.initial,
            ratio: schedule.ratio,
        });
    }
    let points: Vec<Vec<f64>> = sigma
        .primitives(enum_budget)
        .into_iter()
        .map(|p| match p {
            SingPrimitive::Point(v) => Ok(v),
            SingPrimitive::Slab(_) => Err(NetsError::NotPointEnumerable),
        })
        .collect::<Result<_, _>>()?;
    let mut boundary_gap = Vec::with_capacity(points.len());
    for p in &points {
        let mut gap = f64::INFINITY;
        for i in 0..domain.dim() {
            let (lo, hi) = domain.axis(i);
            gap = gap.min(p[i] - lo).min(hi - p[i]);
        }
        if !(gap > 0.0) {
            return Err(NetsError::PointOnBoundary(p.clone()));
        }
        boundary_gap.push(gap);
    }

    let universe = points.len() as u64;
    let poset = IndexPoset::subsets_with_levels(universe, format!("example-one({})", sigma.label));
    let dom = domain.clone();
    let pts = points.clone();
    let gaps = boundary_gap;
    let net = Net::new(
        domain.clone(),
        poset.clone(),
        format!("example-one({})", sigma.label),
        move |lambda| {
            let r = schedule.radius(lambda.level);
            let bumps: Vec<SmoothExpr> = lambda
                .set
                .iter()
                .filter_map(|&i| {
                    let p = pts.get(i as usize)?;
                    let radius = r.min(0.9 * gaps[i as usize]);
                    Some(expr::bump_in(&dom, p, radius).expect("clamped bump stays inside"))
                })
                .collect();
            expr::sum(&bumps)
        },
    );

    // the representation (2.3) attached to the same poset: Σ_λ = A
    let pts = points;
    let family = LimsupFamily::new(
        format!("example-one-repr({})", sigma.label),
        poset.clone(),
        move |lambda| {
            lambda
                .set
                .iter()
                .filter_map(|&i| pts.get(i as usize).cloned())
                .map(SingPrimitive::Point)
                .collect()
        },
    );
    Ok((poset, net, family))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{DenseCheckCfg, SingPrimitive};

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
    fn diagonal_is_constant_and_multiplicative() {
        let dom = unit_domain();
        let poset = IndexPoset::naturals();
        let psi = expr::sin(&expr::t());
        let phi = expr::exp(&expr::t());
        let d = diagonal_embed(&psi, &poset, &dom);
        for j in [0, 3, 17] {
            assert_eq!(d.term(&poset.chain(j)), psi);
        }
        // homomorphism on representatives: u(ψφ) = u(ψ)u(φ) termwise
        let prod = diagonal_embed(&expr::mul(&psi, &phi), &poset, &dom);
        let termwise = net_mul(
            &diagonal_embed(&psi, &poset, &dom),
            &diagonal_embed(&phi, &poset, &dom),
        )
        .unwrap();
        for j in 0..5 {
            let l = poset.chain(j);
            assert_eq!(prod.term(&l), termwise.term(&l));
        }
    }

    #[test]
    fn net_derive_is_termwise() {
        let dom = unit_domain();
        let poset = IndexPoset::naturals();
        let sq = expr::mul(&expr::t(), &expr::t());
        let d = net_derive(&diagonal_embed(&sq, &poset, &dom), &MultiIndex(vec![1]));
        // shallow normalization keeps t + t rather than collecting 2t
        let term = d.term(&poset.chain(4));
        assert_eq!(term, expr::add(&expr::t(), &expr::t()));
        assert_eq!(term.evaluate(&[0.7]).unwrap(), 1.4);
        // adding the zero net changes nothing termwise
        let w = diagonal_embed(&sq, &poset, &dom);
        let same = net_add(&w, &zero_net(&poset, &dom)).unwrap();
        assert_eq!(same.term(&poset.chain(2)), w.term(&poset.chain(2)));
    }

    #[test]
    fn poset_mismatch_rejected() {
        let dom = unit_domain();
        let a = diagonal_embed(&expr::t(), &IndexPoset::naturals(), &dom);
        let b = diagonal_embed(&expr::t(), &IndexPoset::finite_subsets(4, "s"), &dom);
        assert!(matches!(net_add(&a, &b), Err(NetsError::PosetMismatch { .. })));
    }

    #[test]
    fn example_one_terms_are_bump_sums() {
        let sigma = three_points();
        let schedule = RadiusSchedule { initial: 1.0, ratio: 0.5 };
        let (_poset, net, _fam) =
            example_one_net(&sigma, &unit_domain(), schedule, 16).unwrap();
        // term at (A = {0.25, 0.5}, level 3): bumps of radius 1/8 at both
        let lambda = PosetElem::subset_level([0, 1], 3);
        let term = net.term(&lambda);
        let e = (-1.0f64).exp();
        assert!((term.evaluate(&[0.25]).unwrap() - e).abs() < 1e-15);
        assert!((term.evaluate(&[0.5]).unwrap() - e).abs() < 1e-15);
        assert_eq!(term.evaluate(&[0.75]).unwrap(), 0.0);
        // radius 1/8: the left support edge of the first bump is 0.125
        assert_eq!(term.evaluate(&[0.25 - 0.126]).unwrap(), 0.0);
        assert!(term.evaluate(&[0.25 - 0.124]).unwrap() > 0.0);
    }

    #[test]
    fn example_one_coverage_at_own_centers() {
        // every enumerated x in Σ lies in supp w*_λ whenever A contains x
        let sigma = three_points();
        let schedule = RadiusSchedule { initial: 0.5, ratio: 0.5 };
        let (_poset, net, _fam) =
            example_one_net(&sigma, &unit_domain(), schedule, 16).unwrap();
        let centers = [[0.25], [0.5], [0.75]];
        for level in [0u64, 2, 5] {
            let lambda = PosetElem::subset_level([0, 1, 2], level);
            let term = net.term(&lambda);
            for c in &centers {
                // each bump contributes e^-1 at its own center and the
                // other bumps only add nonnegative mass
                let v = term.evaluate(c).unwrap();
                assert!(v >= (-1.0f64).exp() - 1e-15, "level {level} at {c:?}: {v}");
            }
        }
    }

    #[test]
    fn example_one_rejects_bad_schedules() {
        let sigma = three_points();
        for schedule in [
            RadiusSchedule { initial: 0.5, ratio: 1.0 },
            RadiusSchedule { initial: 0.5, ratio: 1.5 },
            RadiusSchedule { initial: 0.0, ratio: 0.5 },
        ] {
            assert!(matches!(
                example_one_net(&sigma, &unit_domain(), schedule, 16),
                Err(NetsError::BadRadiusSchedule { .. })
            ));
        }
    }

    #[test]
    fn retag_respects_the_kind_lattice() {
        let dom = unit_domain();
        let gate = DenseCheckCfg::at_resolution(0.05);
        let sigma = three_points();
        let bigger = crate::sets::union(
            &sigma,
            &SingularitySet::nowhere_dense(
                &dom,
                vec![SingPrimitive::Point(vec![0.1])],
                &gate,
            )
            .unwrap(),
            &gate,
        )
        .unwrap();

        let poset = IndexPoset::naturals();
        let i_small = IdealSpec::i_single(
            &poset,
            sigma.clone(),
            crate::sets::constant_representation(&sigma, 16),
        )
        .unwrap();
        let j_small = IdealSpec::j_single(&poset, sigma.clone());
        let j_big = IdealSpec::j_single(&poset, bigger.clone());
        let u = GenFunction::new(zero_net(&poset, &dom), i_small.clone()).unwrap();

        // I(Σ) -> J(Σ) -> J(Σ') is fine and keeps the representative
        let v = retag(&u, &j_small, 16).unwrap();
        let w = retag(&v, &j_big, 16).unwrap();
        assert_eq!(w.net.label, u.net.label);

        // J -> I is never derivable
        assert!(matches!(
            retag(&w, &i_small, 16),
            Err(NetsError::IllegalRetag { .. })
        ));
        // shrinking the set is not derivable either
        let j_from_big = GenFunction::new(zero_net(&poset, &dom), j_big).unwrap();
        assert!(matches!(
            retag(&j_from_big, &j_small, 16),
            Err(NetsError::IllegalRetag { .. })
        ));
    }

    #[test]
    fn retag_commutes_with_derive_on_representatives() {
        let dom = unit_domain();
        let poset = IndexPoset::naturals();
        let sigma = three_points();
        let i_tag = IdealSpec::i_single(
            &poset,
            sigma.clone(),
            crate::sets::constant_representation(&sigma, 16),
        )
        .unwrap();
        let j_tag = IdealSpec::j_single(&poset, sigma);
        let psi = expr::mul(&expr::sin(&expr::t()), &expr::t());
        let u = GenFunction::new(diagonal_embed(&psi, &poset, &dom), i_tag).unwrap();
        let p = MultiIndex(vec![2]);

        let a = retag(&u, &j_tag, 16).unwrap().derive(&p);
        let b = retag(&u.derive(&p), &j_tag, 16).unwrap();
        for j in 0..6 {
            let l = poset.chain(j);
            assert_eq!(a.net.term(&l), b.net.term(&l), "terms differ at {l}");
        }
        assert!(a.tag.same_tag(&b.tag));
    }
}
