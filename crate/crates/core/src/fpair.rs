//! f-pairs (α, ζ) and the rewriting steps that bring them to reduced form without increasing ρ.
//!
//! Positions are 1-based, matching forest intervals.

use serde::Serialize;

use crate::amalgam::{AmalgamSetup, Letter, ProductElem};
use crate::error::{invalid, Result};
use crate::forest::{build_maximal_forest, check_maximal, EvaluationForest};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FPair {
    pub alpha: Vec<Letter>,
    pub zeta: Vec<Letter>,
    pub target: ProductElem,
}

impl FPair {
    /// Checks |α| = |ζ| ≥ 1 and ζ̂ = e; the target is α̂.
    pub fn new(st: &AmalgamSetup, alpha: Vec<Letter>, zeta: Vec<Letter>) -> Result<Self> {
        if alpha.len() != zeta.len() || alpha.is_empty() {
            return invalid("α and ζ must be nonempty and of equal length");
        }
        if !st.is_trivial(&zeta) {
            return invalid("ζ is not trivial");
        }
        let target = st.evaluate(&alpha);
        Ok(FPair { alpha, zeta, target })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Re-derives the invariants from scratch.
    pub fn is_valid(&self, st: &AmalgamSetup) -> bool {
        self.alpha.len() == self.zeta.len()
            && !self.alpha.is_empty()
            && st.is_trivial(&self.zeta)
            && st.evaluate(&self.alpha) == self.target
    }
}

/// max_i d(α(i), ζ(i)).
pub fn rho(st: &AmalgamSetup, p: &FPair) -> Rational {
    p.alpha.iter().zip(&p.zeta).map(|(&a, &z)| st.dist_union(a, z)).max().unwrap_or_else(Rational::zero)
}

pub fn is_multipliable_pair(st: &AmalgamSetup, p: &FPair) -> bool {
    p.alpha.iter().zip(&p.zeta).all(|(&a, &z)| st.multipliable(a, z))
}

fn canon(st: &AmalgamSetup, w: &mut [Letter]) {
    for l in w.iter_mut() {
        *l = st.canonical(*l);
    }
}

/// Splits every clashing position i into (α(i)a⁻¹, a) over (e, ζ(i)) with a the best A-element.
pub fn make_multipliable(st: &AmalgamSetup, p: &FPair) -> FPair {
    let mut alpha = Vec::with_capacity(p.len());
    let mut zeta = Vec::with_capacity(p.len());
    for (&x, &z) in p.alpha.iter().zip(&p.zeta) {
        if st.multipliable(x, z) {
            alpha.push(x);
            zeta.push(z);
            continue;
        }
        let a = (0..st.a_order())
            .min_by_key(|&a| {
                let al = st.a_letter(a);
                st.dist_union(x, al).max(st.dist_union(al, z))
            })
            .unwrap();
        let g = st.factor(x.side).group();
        let xa = Letter::new(x.side, g.mul(x.elem, g.inv(st.embed(x.side, a))));
        alpha.push(xa);
        alpha.push(st.a_letter(a));
        zeta.push(st.e_letter());
        zeta.push(z);
    }
    canon(st, &mut alpha);
    canon(st, &mut zeta);
    FPair { alpha, zeta, target: p.target.clone() }
}

fn times_a(st: &AmalgamSetup, l: Letter, a: usize, right: bool) -> Letter {
    let g = st.factor(l.side).group();
    let x = st.embed(l.side, a);
    let elem = if right { g.mul(l.elem, x) } else { g.mul(x, l.elem) };
    st.canonical(Letter::new(l.side, elem))
}

/// α(i)·a⁻¹, a·α(i+1) and the same on ζ.
pub fn transfer(st: &AmalgamSetup, p: &FPair, i: usize, a: usize) -> Result<FPair> {
    if i == 0 || i >= p.len() {
        return invalid(format!("transfer index {i} out of range 1..{}", p.len()));
    }
    if a >= st.a_order() {
        return invalid("not an element of A");
    }
    let ai = st.a_inv(a);
    let mut q = p.clone();
    for w in [&mut q.alpha, &mut q.zeta] {
        w[i - 1] = times_a(st, w[i - 1], ai, true);
        w[i] = times_a(st, w[i], a, false);
    }
    Ok(q)
}

fn sub_eval(st: &AmalgamSetup, w: &[Letter], (lo, hi): (usize, usize)) -> Option<usize> {
    st.as_a(&st.evaluate(&w[lo - 1..hi]))
}

/// Transfers from the leaves up (then left to right) so that every node interval evaluates to e.
pub fn make_simple(st: &AmalgamSetup, p: &FPair, f: &EvaluationForest) -> Result<FPair> {
    if !is_multipliable_pair(st, p) {
        return invalid("make_simple needs a multipliable pair");
    }
    let rep = check_maximal(st, &p.zeta, f);
    if !rep.is_ok() {
        return invalid(format!("forest is not maximal for ζ: {rep}"));
    }
    let roots = f.roots();
    let mut order: Vec<usize> = (0..f.len()).filter(|t| !roots.contains(t)).collect();
    order.sort_by_key(|&t| (f.height(t), f.interval(t).0));
    order.extend(roots.iter().take(roots.len().saturating_sub(1)));
    let mut q = p.clone();
    for t in order {
        let iv = f.interval(t);
        let a = sub_eval(st, &q.zeta, iv).expect("node intervals evaluate into A");
        if a != 0 {
            q = transfer(st, &q, iv.1, a)?;
        }
    }
    Ok(q)
}

/// Replaces ζ on the listed remainder positions by α, with the pivot compensating.
pub fn symmetrize(
    st: &AmalgamSetup,
    p: &FPair,
    f: &EvaluationForest,
    t: usize,
    ks: &[usize],
    pivot: usize,
) -> Result<FPair> {
    if t >= f.len() {
        return invalid("no such node");
    }
    if !is_multipliable_pair(st, p) {
        return invalid("symmetrization needs a multipliable pair");
    }
    let r = f.remainder(t);
    if ks.is_empty() || ks.windows(2).any(|w| w[0] >= w[1]) || !ks.iter().all(|k| r.contains(k)) {
        return invalid("index list must be increasing and inside the remainder");
    }
    if !ks.contains(&pivot) {
        return invalid("pivot is not in the index list");
    }
    let e = st.e_letter();
    for &i in &r {
        let z = p.zeta[i - 1];
        if ks.contains(&i) && st.in_a(z) {
            return invalid(format!("ζ({i}) lies in A"));
        }
        if !ks.contains(&i) && st.canonical(z) != e {
            return invalid(format!("ζ({i}) is not e off the list"));
        }
    }
    for s in f.children(t).into_iter() {
        if sub_eval(st, &p.zeta, f.interval(s)) != Some(0) {
            return invalid("a child interval does not evaluate to e");
        }
    }
    if sub_eval(st, &p.zeta, f.interval(t)) != Some(0) {
        return invalid("the node interval does not evaluate to e");
    }
    let letters: Vec<Letter> = ks.iter().map(|&i| p.alpha[i - 1]).collect();
    let side =
        st.common_side(&letters).ok_or_else(|| crate::Error::Invalid("α is not multipliable on the list".into()))?;
    let g = st.factor(side).group();
    let k0 = ks.iter().position(|&k| k == pivot).unwrap();
    let inv_of = |i: usize| g.inv(st.on_side(p.alpha[i - 1], side).unwrap().elem);
    let x = g.product(ks[..k0].iter().rev().map(|&i| inv_of(i)).chain(ks[k0 + 1..].iter().rev().map(|&i| inv_of(i))));
    let mut q = p.clone();
    for &i in ks {
        q.zeta[i - 1] = if i == pivot { st.canonical(Letter::new(side, x)) } else { p.alpha[i - 1] };
    }
    Ok(q)
}

/// Contracts positions i, i+1 of both words into single letters.
pub fn shorten(st: &AmalgamSetup, p: &FPair, i: usize) -> Result<FPair> {
    if i == 0 || i >= p.len() {
        return invalid(format!("shorten index {i} out of range 1..{}", p.len()));
    }
    let four = [p.alpha[i - 1], p.alpha[i], p.zeta[i - 1], p.zeta[i]];
    if !st.is_multipliable_word(&four) {
        return invalid(format!("letters at {i}, {} are not pairwise multipliable", i + 1));
    }
    let mut q = p.clone();
    for w in [&mut q.alpha, &mut q.zeta] {
        let l = st.multiply_in_factor(&w[i - 1..=i]).unwrap();
        w.splice(i - 1..=i, [st.canonical(l)]);
    }
    Ok(q)
}

/// One audited step of [`to_reduced_pair`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub op: String,
    pub rho: Rational,
    pub alpha: String,
    pub zeta: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forest: Option<String>,
}

fn step(st: &AmalgamSetup, op: String, p: &FPair, f: Option<&EvaluationForest>) -> TraceStep {
    TraceStep {
        op,
        rho: rho(st, p),
        alpha: st.word_label(&p.alpha),
        zeta: st.word_label(&p.zeta),
        forest: f.map(|f| f.to_string()),
    }
}

/// Shortest possible length of a word evaluating to `f`.
pub fn minimal_length(f: &ProductElem) -> usize {
    f.reduced_length().max(1)
}

/// The reduction loop: make multipliable, then repeatedly simplify and shorten until α is reduced.
pub fn to_reduced_pair(st: &AmalgamSetup, p: &FPair) -> Result<(FPair, EvaluationForest, Vec<TraceStep>)> {
    if !p.is_valid(st) {
        return invalid("not an f-pair");
    }
    let mut trace = vec![step(st, "start".into(), p, None)];
    let mut q = make_multipliable(st, p);
    if q.len() != p.len() {
        trace.push(step(st, "make_multipliable".into(), &q, None));
    }
    let target_len = minimal_length(&q.target);
    loop {
        let f = build_maximal_forest(st, &q.zeta)?;
        let simple = make_simple(st, &q, &f)?;
        if simple != q {
            q = simple;
            trace.push(step(st, "make_simple".into(), &q, Some(&f)));
        }
        if q.len() == target_len {
            return Ok((q, f, trace));
        }
        let n = q.len();
        let adjacent = (1..n).find(|&i| {
            let (x, y) = (q.alpha[i - 1], q.alpha[i]);
            !st.in_a(x) && !st.in_a(y) && x.side == y.side
        });
        if let Some(i) = adjacent {
            q = shorten(st, &q, i)?;
            trace.push(step(st, format!("shorten {i}"), &q, None));
            continue;
        }
        let i = (1..=n)
            .find(|&i| st.in_a(q.alpha[i - 1]))
            .ok_or_else(|| crate::Error::Invalid("non-reduced α without an A-letter or adjacent pair".into()))?;
        let t = f.node_of(i).unwrap();
        let r = f.remainder(t);
        if r.len() >= 2 {
            let pivot = *r.iter().filter(|&&j| j != i).max().unwrap();
            q = symmetrize(st, &q, &f, t, &r, pivot)?;
            trace.push(step(st, format!("symmetrize node {} pivot {pivot}", f.interval(t).0), &q, None));
        }
        let at = if i < n { i } else { i - 1 };
        q = shorten(st, &q, at)?;
        trace.push(step(st, format!("shorten {at}"), &q, None));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amalgam::{build_setup, G, H};
    use crate::group::{metric_from_chain, FiniteGroup, NormalChain};
    use std::sync::Arc;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn s3() -> AmalgamSetup {
        let s3 = Arc::new(FiniteGroup::symmetric(3));
        let a3 = s3.generated(&[s3.parse_elem("(1 2 3)").unwrap()]);
        let m = metric_from_chain(
            s3,
            &NormalChain { subgroups: vec![(0..6).collect(), a3.clone(), vec![0]], values: vec![q(1, 1), q(1, 2)] },
        )
        .unwrap();
        build_setup(m.clone(), m, &a3.iter().map(|&a| (a, a)).collect::<Vec<_>>()).unwrap()
    }

    fn el(st: &AmalgamSetup, side: usize, c: &str) -> Letter {
        Letter::new(side, st.factor(side).group().parse_elem(c).unwrap())
    }

    #[test]
    fn clash_is_split_without_changing_rho() {
        let st = s3();
        let t = el(&st, G, "(1 2)");
        let u = el(&st, H, "(1 3)");
        let p = FPair::new(&st, vec![t], vec![st.e_letter()]).unwrap();
        assert!(is_multipliable_pair(&st, &p));
        let p = FPair::new(&st, vec![t, u], vec![u, st.letter_inv(u)]).unwrap();
        assert!(!is_multipliable_pair(&st, &p));
        let m = make_multipliable(&st, &p);
        assert!(is_multipliable_pair(&st, &m));
        assert!(m.is_valid(&st));
        assert_eq!(m.len(), 3);
        assert_eq!(rho(&st, &m), rho(&st, &p));
    }

    #[test]
    fn transfer_round_trip() {
        let st = s3();
        let t = el(&st, G, "(1 2)");
        let u = el(&st, H, "(1 3)");
        let p = FPair::new(&st, vec![t, u], vec![st.e_letter(), st.e_letter()]).unwrap();
        let c = st.a_index(el(&st, G, "(1 2 3)")).unwrap();
        let p1 = transfer(&st, &p, 1, c).unwrap();
        assert!(p1.is_valid(&st));
        assert_eq!(rho(&st, &p1), rho(&st, &p));
        assert_eq!(transfer(&st, &p1, 1, st.a_inv(c)).unwrap(), p);
        assert_eq!(transfer(&st, &p, 1, 0).unwrap(), p);
        assert!(transfer(&st, &p, 2, c).is_err());
    }

    #[test]
    fn symmetrize_small_lists() {
        let st = s3();
        let t = el(&st, G, "(1 2)");
        let w = el(&st, G, "(1 3)");
        let zeta = vec![w, st.letter_inv(w)];
        let p = FPair::new(&st, vec![t, w], zeta.clone()).unwrap();
        let f = build_maximal_forest(&st, &zeta).unwrap();
        let s = symmetrize(&st, &p, &f, 0, &[1, 2], 1).unwrap();
        assert_eq!(s.zeta[1], w);
        assert_eq!(s.zeta[0], st.letter_inv(w));
        assert!(rho(&st, &s) <= rho(&st, &p));
        assert!(s.is_valid(&st));
    }

    #[test]
    fn collapsible_pair_reduces_to_length_one() {
        let st = s3();
        let t = el(&st, G, "(1 2)");
        let c = el(&st, G, "(1 2 3)");
        let u = el(&st, H, "(1 3)");
        let p = FPair::new(&st, vec![t, c], vec![u, st.letter_inv(u)]).unwrap();
        let (r, f, trace) = to_reduced_pair(&st, &p).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r.is_valid(&st));
        assert!(rho(&st, &r) <= rho(&st, &p));
        assert!(check_maximal(&st, &r.zeta, &f).is_ok());
        assert!(trace.len() >= 2);
    }
}
