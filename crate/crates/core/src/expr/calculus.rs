//! Exact symbolic differentiation and the jet recurrences behind the
//! bump and step atoms.
//!
//! Mixed partials are applied one axis at a time in increasing axis
//! order, with the shallow normal form taken after every single
//! derivative. Together with the canonical operand ordering this keeps
//! D^p D^q e structurally equal to D^{p+q} e.

use super::{constant, BumpNode, EvalError, Node, SmoothExpr, StepNode};
use crate::geom::MultiIndex;
use std::collections::BTreeMap;

/// Exact p-th mixed partial derivative; total on well-formed expressions.
pub fn differentiate(e: &SmoothExpr, p: &MultiIndex) -> SmoothExpr {
    let mut cur = e.normalize();
    for axis in 0..p.len() {
        for _ in 0..p.get(axis) {
            cur = derive_axis(&cur, axis).normalize();
        }
    }
    cur
}

fn derive_axis(e: &SmoothExpr, axis: usize) -> SmoothExpr {
    match e.as_node() {
        Node::Var(i) => constant(if *i == axis { 1.0 } else { 0.0 }),
        Node::Const(_) => constant(0.0),
        Node::Add(cs) => SmoothExpr::node(Node::Add(cs.iter().map(|c| derive_axis(c, axis)).collect())),
        Node::Mul(cs) => {
            let mut terms = Vec::with_capacity(cs.len());
            for k in 0..cs.len() {
                let mut factors = cs.clone();
                factors[k] = derive_axis(&cs[k], axis);
                terms.push(SmoothExpr::node(Node::Mul(factors)));
            }
            SmoothExpr::node(Node::Add(terms))
        }
        Node::Div(a, b) => {
            // (a/b)' = a' b^-1 - a b' b^-2, in negative-power form so
            // repeated derivatives flatten into sorted products instead
            // of regrouping inside quotient numerators
            SmoothExpr::node(Node::Add(vec![
                SmoothExpr::node(Node::Mul(vec![
                    derive_axis(a, axis),
                    SmoothExpr::node(Node::Pow(b.clone(), -1)),
                ])),
                SmoothExpr::node(Node::Mul(vec![
                    constant(-1.0),
                    a.clone(),
                    derive_axis(b, axis),
                    SmoothExpr::node(Node::Pow(b.clone(), -2)),
                ])),
            ]))
        }
        Node::Pow(a, k) => SmoothExpr::node(Node::Mul(vec![
            constant(*k as f64),
            SmoothExpr::node(Node::Pow(a.clone(), k - 1)),
            derive_axis(a, axis),
        ])),
        Node::Sin(a) => SmoothExpr::node(Node::Mul(vec![
            SmoothExpr::node(Node::Cos(a.clone())),
            derive_axis(a, axis),
        ])),
        Node::Cos(a) => SmoothExpr::node(Node::Mul(vec![
            constant(-1.0),
            SmoothExpr::node(Node::Sin(a.clone())),
            derive_axis(a, axis),
        ])),
        Node::Exp(a) => SmoothExpr::node(Node::Mul(vec![e.clone(), derive_axis(a, axis)])),
        Node::Bump(b) => {
            if axis >= b.center.len() {
                return constant(0.0);
            }
            let mut orders = b.orders.clone();
            orders.0[axis] += 1;
            SmoothExpr::node(Node::Bump(BumpNode {
                center: b.center.clone(),
                radius: b.radius,
                orders,
            }))
        }
        Node::Step(s) => {
            if axis != s.axis {
                return constant(0.0);
            }
            SmoothExpr::node(Node::Step(StepNode { order: s.order + 1, ..s.clone() }))
        }
    }
}

// ---------------------------------------------------------------------
// bump jets
//
// With z_i = (x_i - c_i)/ρ, s = Σ z_i², u = 1/(1-s), the class of
// functions Q(z, u)·e^{-u} (Q a polynomial) is closed under partial
// derivatives:
//   d/dx_i [z^a u^b e^{-u}]
//     = (1/ρ)[ a_i z^{a-e_i} u^b + 2b z^{a+e_i} u^{b+1} - 2 z^{a+e_i} u^{b+2} ] e^{-u}
// so any D^p of the base kernel is one such Q, computed here exactly.

type JetKey = (Vec<u32>, u32);

fn bump_jet_poly(n: usize, orders: &MultiIndex, radius: f64) -> BTreeMap<JetKey, f64> {
    let mut poly: BTreeMap<JetKey, f64> = BTreeMap::new();
    poly.insert((vec![0; n], 0), 1.0);
    let inv_r = 1.0 / radius;
    for axis in 0..n {
        for _ in 0..orders.get(axis) {
            let mut next: BTreeMap<JetKey, f64> = BTreeMap::new();
            let mut bump_term = |key: JetKey, v: f64| {
                if v != 0.0 {
                    *next.entry(key).or_insert(0.0) += v;
                }
            };
            for ((zpow, upow), coeff) in &poly {
                if zpow[axis] > 0 {
                    let mut z = zpow.clone();
                    z[axis] -= 1;
                    bump_term((z, *upow), coeff * zpow[axis] as f64 * inv_r);
                }
                let mut z = zpow.clone();
                z[axis] += 1;
                if *upow > 0 {
                    bump_term((z.clone(), upow + 1), coeff * 2.0 * *upow as f64 * inv_r);
                }
                bump_term((z, upow + 2), coeff * -2.0 * inv_r);
            }
            poly = next;
        }
    }
    poly
}

pub(super) fn eval_bump(b: &BumpNode, x: &[f64]) -> Result<f64, EvalError> {
    let n = b.center.len();
    if x.len() < n {
        return Err(EvalError::Dimension { need: n, got: x.len() });
    }
    let z: Vec<f64> = (0..n).map(|i| (x[i] - b.center[i]) / b.radius).collect();
    let s: f64 = z.iter().map(|v| v * v).sum();
    if s >= 1.0 {
        // outside the open ball, the extension and all derivatives vanish
        return Ok(0.0);
    }
    if 1.0 - s < 1e-15 {
        return Err(EvalError::SupportBoundary { at: x.to_vec() });
    }
    let u = 1.0 / (1.0 - s);
    if u > 700.0 {
        // e^{-u} underflows past any polynomial growth of the jet
        return Ok(0.0);
    }
    let eu = (-u).exp();
    if b.orders.is_zero() {
        return Ok(eu);
    }
    let poly = bump_jet_poly(n, &b.orders, b.radius);
    let mut acc = 0.0;
    for ((zpow, upow), coeff) in &poly {
        let mut term = *coeff;
        for i in 0..n {
            for _ in 0..zpow[i] {
                term *= z[i];
            }
        }
        term *= u.powi(*upow as i32);
        acc += term;
    }
    Ok(acc * eu)
}

// ---------------------------------------------------------------------
// step jets
//
// The rising step is f(z)/(f(z)+f(1-z)) with f(z)=e^{-1/z} for z>0 and
// 0 otherwise, z the affine rescaling of the axis variable onto [0,1].
// The denominator is strictly positive on all of R, so the step is
// globally smooth and a derivative of any order can be read off a
// truncated univariate Taylor expansion computed with exact jet
// arithmetic at the evaluation point.

pub(crate) fn jet_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..n - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

pub(crate) fn jet_recip(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    out[0] = 1.0 / a[0];
    for k in 1..n {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += a[j] * out[k - j];
        }
        out[k] = -acc / a[0];
    }
    out
}

pub(crate) fn jet_exp(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    out[0] = a[0].exp();
    for k in 1..n {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += j as f64 * a[j] * out[k - j];
        }
        out[k] = acc / k as f64;
    }
    out
}

/// Jet of f(z) = e^{-1/z} (0 for z ≤ 0) at the point `z0`, to `len` terms.
fn jet_flat_exp(z0: f64, len: usize) -> Vec<f64> {
    // below ~1/700 every coefficient underflows; returning the zero jet
    // also avoids catastrophic cancellation in the quotient downstream
    if z0 <= 1.0 / 700.0 {
        return vec![0.0; len];
    }
    let mut z = vec![0.0; len];
    z[0] = z0;
    if len > 1 {
        z[1] = 1.0;
    }
    let minus_inv: Vec<f64> = jet_recip(&z).iter().map(|c| -c).collect();
    jet_exp(&minus_inv)
}

pub(super) fn eval_step(s: &StepNode, v: f64) -> f64 {
    if v <= s.lo {
        return 0.0;
    }
    if v >= s.hi {
        return if s.order == 0 { 1.0 } else { 0.0 };
    }
    let len = s.order as usize + 1;
    let scale = s.hi - s.lo;
    let z0 = (v - s.lo) / scale;
    let num = jet_flat_exp(z0, len);
    let opp = jet_flat_exp(1.0 - z0, len);
    // f(1-z) as a jet in z: alternate signs
    let mut den = num.clone();
    for (k, c) in opp.iter().enumerate() {
        den[k] += if k % 2 == 0 { *c } else { -*c };
    }
    let ratio = jet_mul(&num, &jet_recip(&den));
    // chain rule for the affine rescaling: d/dv = (1/scale) d/dz
    let mut fact = 1.0;
    for k in 1..=s.order {
        fact *= k as f64;
    }
    ratio[s.order as usize] * fact / scale.powi(s.order as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{add, bump_unchecked, cos, div, mul, sin, step, t, y};

    fn exp_of_y() -> SmoothExpr {
        crate::expr::exp(&y(1))
    }

    fn fd(e: &SmoothExpr, p: &MultiIndex, x: &[f64], h: f64) -> f64 {
        if let Some(axis) = (0..p.len()).find(|&i| p.get(i) > 0) {
            let mut q = p.clone();
            q.0[axis] -= 1;
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[axis] += h;
            xm[axis] -= h;
            (fd(e, &q, &xp, h) - fd(e, &q, &xm, h)) / (2.0 * h)
        } else {
            e.evaluate(x).unwrap()
        }
    }

    #[test]
    fn chain_rule_identity() {
        // d/dt sin(y1 + t) = cos(y1 + t)
        let e = sin(&add(&y(1), &t()));
        let d = differentiate(&e, &MultiIndex(vec![1, 0]));
        let expected = SmoothExpr::node(Node::Cos(add(&y(1), &t()))).normalize();
        assert_eq!(d, expected);
    }

    #[test]
    fn derivative_of_constant() {
        let d = differentiate(&constant(5.0), &MultiIndex(vec![0, 1]));
        assert_eq!(d, constant(0.0));
    }

    #[test]
    fn bump_derivatives_vanish_outside() {
        let e = bump_unchecked(&[0.0], 1.0);
        for order in 0..4u32 {
            let d = differentiate(&e, &MultiIndex(vec![order]));
            assert_eq!(d.evaluate(&[2.0]), Ok(0.0));
            // finite differences at x = 2 stay flat
            assert!(fd(&e, &MultiIndex(vec![order]), &[2.0], 1e-3).abs() < 1e-9);
        }
    }

    #[test]
    fn bump_derivative_matches_finite_differences_inside() {
        let e = bump_unchecked(&[0.0, 0.0], 1.0);
        for p in [vec![1, 0], vec![0, 1], vec![1, 1], vec![2, 0]] {
            let p = MultiIndex(p);
            let d = differentiate(&e, &p);
            for x in [[0.1, 0.2], [-0.3, 0.1], [0.0, 0.0]] {
                let sym = d.evaluate(&x).unwrap();
                let num = fd(&e, &p, &x, 1e-4);
                assert!(
                    (sym - num).abs() < 1e-5_f64.max(1e-5 * sym.abs()),
                    "p={p:?} x={x:?} sym={sym} num={num}"
                );
            }
        }
    }

    #[test]
    fn step_values_and_derivatives() {
        let s = step(0, 0.0, 1.0).unwrap();
        assert_eq!(s.evaluate(&[-0.5]), Ok(0.0));
        assert_eq!(s.evaluate(&[0.0]), Ok(0.0));
        assert_eq!(s.evaluate(&[1.0]), Ok(1.0));
        assert_eq!(s.evaluate(&[2.0]), Ok(1.0));
        let mid = s.evaluate(&[0.5]).unwrap();
        assert!((mid - 0.5).abs() < 1e-12, "symmetric midpoint, got {mid}");

        let d = differentiate(&s, &MultiIndex(vec![1]));
        assert_eq!(d.evaluate(&[-0.5]), Ok(0.0));
        assert_eq!(d.evaluate(&[1.5]), Ok(0.0));
        for v in [0.2, 0.5, 0.8] {
            let sym = d.evaluate(&[v]).unwrap();
            let num = fd(&s, &MultiIndex(vec![1]), &[v], 1e-5);
            assert!((sym - num).abs() < 1e-5 * sym.abs().max(1.0), "v={v} {sym} vs {num}");
        }
    }

    #[test]
    fn mixed_partials_commute_structurally() {
        let exprs = [
            sin(&mul(&t(), &y(1))),
            mul(&t(), &mul(&y(1), &y(1))),
            add(&sin(&t()), &mul(&t(), &y(1))),
            bump_unchecked(&[0.2, 0.3], 0.7),
            div(&sin(&t()), &add(&constant(2.0), &cos(&y(1)))),
            div(&y(1), &mul(&add(&constant(3.0), &sin(&t())), &exp_of_y())),
        ];
        let p = MultiIndex(vec![1, 0]);
        let q = MultiIndex(vec![0, 1]);
        let pq = MultiIndex(vec![1, 1]);
        for e in &exprs {
            let a = differentiate(&differentiate(e, &p), &q);
            let b = differentiate(&differentiate(e, &q), &p);
            let c = differentiate(e, &pq);
            assert_eq!(a, c, "t-then-y vs joint failed for {e}");
            assert_eq!(b, c, "y-then-t vs joint failed for {e}");
        }
    }
}
