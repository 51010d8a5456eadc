//! Quotient-level behavior: equality modulo an ideal tag, union
//! rejection when complements stop being dense, and measure/coverage
//! edge cases.

use foamck_core::expr;
use foamck_core::geom::BoxN;
use foamck_core::nets::{
    diagonal_embed, equal_modulo_ideal, example_one_net, net_add, sample_outside, CheckConfig,
    GenFunction, IdealSpec, Outcome, RadiusSchedule,
};
use foamck_core::sets::{
    is_complement_dense_at, measure_bound, union, DenseCheckCfg,
    SetClass, SingPrimitive, SingularitySet, Verdict3,
};
use foamck_core::DomainBox;

fn unit_line() -> DomainBox {
    DomainBox::line(0.0, 1.0).unwrap()
}

fn gate() -> DenseCheckCfg {
    DenseCheckCfg::at_resolution(0.05)
}

fn three_points() -> SingularitySet {
    SingularitySet::nowhere_dense(
        &unit_line(),
        vec![
            SingPrimitive::Point(vec![0.25]),
            SingPrimitive::Point(vec![0.5]),
            SingPrimitive::Point(vec![0.75]),
        ],
        &gate(),
    )
    .unwrap()
}

#[test]
fn equal_modulo_ideal_examples() {
    let dom = unit_line();
    let sigma = three_points();
    let cfg = CheckConfig::default();
    let (poset, example_net, family) =
        example_one_net(&sigma, &dom, RadiusSchedule { initial: 0.25, ratio: 0.5 }, 16).unwrap();
    let tag = IdealSpec::i_single(&poset, sigma.clone(), family).unwrap();
    let samples = sample_outside(&sigma, &dom, 12, 0.02, 5, cfg.enum_budget).unwrap();

    let psi = expr::sin(&expr::t());
    let u = GenFunction::new(diagonal_embed(&psi, &poset, &dom), tag.clone()).unwrap();

    // u - u is in every ideal
    let v = equal_modulo_ideal(&u, &u, &samples, &cfg).unwrap();
    assert_eq!(v.outcome, Outcome::VerifiedAtScale);

    // adding a constructed ideal member does not change the class
    let shifted = GenFunction::new(
        net_add(&u.net, &example_net).unwrap(),
        tag.clone(),
    )
    .unwrap();
    let v = equal_modulo_ideal(&u, &shifted, &samples, &cfg).unwrap();
    assert_eq!(v.outcome, Outcome::VerifiedAtScale);

    // sin and cos differ by more than any vanishing net
    let w = GenFunction::new(diagonal_embed(&expr::cos(&expr::t()), &poset, &dom), tag).unwrap();
    let v = equal_modulo_ideal(&u, &w, &samples, &cfg).unwrap();
    assert_eq!(v.outcome, Outcome::Refuted);
    assert!(v.witness.is_some());

    // mismatched tags are rejected outright
    let nat = foamck_core::nets::IndexPoset::naturals();
    let other_tag = IdealSpec::j_single(&nat, sigma.clone());
    let x = GenFunction::new(diagonal_embed(&psi, &nat, &dom), other_tag).unwrap();
    assert!(equal_modulo_ideal(&u, &x, &samples, &cfg).is_err());
}

#[test]
fn union_rejects_when_complement_stops_being_dense() {
    // two thin interval families, individually sparse, jointly covering
    let dom = unit_line();
    let h = 0.1;
    let mk = |offset: f64, width: f64| -> Vec<SingPrimitive> {
        let mut v = Vec::new();
        let mut k = 0;
        loop {
            let lo = 0.02 * k as f64 + offset;
            if lo + width >= 1.0 {
                break;
            }
            if lo > 0.0 {
                v.push(SingPrimitive::Slab(BoxN::new(vec![lo], vec![lo + width])));
            }
            k += 1;
        }
        v
    };
    let gate = DenseCheckCfg { resolution: h, samples_per_cell: 12, ..gate() };
    let a = SingularitySet::nowhere_dense(&dom, mk(0.0, 0.012), &gate).unwrap();
    let b = SingularitySet::nowhere_dense(&dom, mk(0.01, 0.012), &gate).unwrap();
    // the union covers (almost) every point of (0,1)
    let err = union(&a, &b, &gate).unwrap_err();
    assert!(matches!(err, foamck_core::sets::SetsError::ComplementNotDense { .. }), "{err}");
    // while each part alone passes
    assert_eq!(is_complement_dense_at(&a, &gate).unwrap().verdict, Verdict3::True);
}

#[test]
fn measure_bound_partial_flag() {
    let dom = unit_line();
    let dy = SingularitySet::enumerated(
        SetClass::BaireFirst,
        &dom,
        foamck_core::sets::dyadic_points(0.0, 1.0),
        &gate(),
    )
    .unwrap();
    let mb = measure_bound(&dy, 32);
    assert_eq!(mb.bound, 0.0);
    assert!(mb.partial, "the dyadic enumeration never exhausts");
    let mb = measure_bound(&three_points(), 32);
    assert!(!mb.partial);
}

#[test]
fn shrink_rejects_fat_loci() {
    use foamck_core::gck::{shrink_measure, GckConfig, GckError};
    let dom = DomainBox::new(&[(0.0, 4.0), (0.0, 1.0)]).unwrap();
    let gate = DenseCheckCfg::at_resolution(0.05);
    let slab = SingPrimitive::Slab(BoxN::new(vec![1.99, 0.0], vec![2.01, 1.0]));
    let mut sigma = SingularitySet::nowhere_dense(&dom, vec![slab], &gate).unwrap();
    sigma.label = "fat".into();
    let cfg = GckConfig { resolution_h: 0.05, ..GckConfig::default() };
    // a locus spread wider than the shrunk slab plus the resolution
    let fat_loci = vec![vec![vec![1.91, 0.5], vec![2.09, 0.5]]];
    let err = shrink_measure(&sigma, &fat_loci, 0.01, &cfg).unwrap_err();
    assert!(matches!(err, GckError::CoverageLoss { .. }), "{err}");
    // a tight locus shrinks fine, to the geometric width schedule
    let tight = vec![vec![vec![2.0, 0.5]]];
    let shrunk = shrink_measure(&sigma, &tight, 0.01, &cfg).unwrap();
    let b = shrunk.primitives(4)[0].as_box();
    assert!((b.hi[0] - b.lo[0] - 0.005).abs() < 1e-12);
}
