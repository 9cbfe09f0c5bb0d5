//! Amalgamated free products of finitely many finite groups over a common subgroup A.
//!
//! Elements are kept in normal form `a · s_1 ⋯ s_k`: a head in A followed by non-identity
//! right-coset representatives (of A) from factors that differ at each step.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::group::{validate_biinvariance, Elem, FiniteGroup, GroupMetric};
use crate::rational::Rational;
use crate::space::{amalgam, FiniteSpace};

pub type Side = usize;
pub const G: Side = 0;
pub const H: Side = 1;

/// A letter of the alphabet G ∪ H: an element together with the factor it is read in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Letter {
    pub side: Side,
    pub elem: Elem,
}

impl Letter {
    pub fn new(side: Side, elem: Elem) -> Self {
        Letter { side, elem }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Factor {
    metric: GroupMetric,
    emb: Vec<Elem>,
    a_of: Vec<Option<usize>>,
    /// `split[g] = (a, r)` with `g = emb[a] · r` and `r` the representative of `A g`
    split: Vec<(usize, Elem)>,
    reps: Vec<Elem>,
}

impl Factor {
    fn group(&self) -> &FiniteGroup {
        self.metric.group()
    }
}

/// An element of the amalgamated product in normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductElem {
    setup: u64,
    pub head: usize,
    pub tail: Vec<Letter>,
}

impl ProductElem {
    /// Number of letters in a shortest word for this element (0 for the identity).
    pub fn reduced_length(&self) -> usize {
        if self.tail.is_empty() {
            usize::from(self.head != 0)
        } else {
            self.tail.len()
        }
    }
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone)]
pub struct AmalgamSetup {
    id: u64,
    factors: Vec<Factor>,
    a_mul: Vec<usize>,
    a_inv: Vec<usize>,
    union: FiniteSpace,
    pos: Vec<Vec<usize>>,
    alphabet: Vec<Letter>,
}

impl PartialEq for AmalgamSetup {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

/// Two factors glued along `common`, a list of (g, h) pairs identifying A inside G and H.
pub fn build_setup(g: GroupMetric, h: GroupMetric, common: &[(Elem, Elem)]) -> Result<AmalgamSetup> {
    let mut pairs = common.to_vec();
    let e = g.group().identity();
    pairs.sort_by_key(|&(x, y)| (x != e, x, y));
    let eg = pairs.iter().map(|p| p.0).collect();
    let eh = pairs.iter().map(|p| p.1).collect();
    build_multi(vec![g, h], vec![eg, eh])
}

/// Any number of factors; `embeddings[i][a]` is the image of the a-th element of A in factor i.
///
/// A is identified with the subgroup listed by the first embedding.
pub fn build_multi(metrics: Vec<GroupMetric>, embeddings: Vec<Vec<Elem>>) -> Result<AmalgamSetup> {
    if metrics.is_empty() || metrics.len() != embeddings.len() {
        return invalid("need one embedding per factor");
    }
    let na = embeddings[0].len();
    if na == 0 || embeddings.iter().any(|e| e.len() != na) {
        return invalid("embeddings must list the same nonempty A");
    }
    for (i, m) in metrics.iter().enumerate() {
        let rep = validate_biinvariance(m);
        if !rep.is_ok() {
            return invalid(format!(
                "factor {i} does not carry a two-sided invariant ultrametric: {}",
                rep.violations[0]
            ));
        }
        let emb = &embeddings[i];
        if emb.iter().any(|&x| x >= m.group().order()) {
            return invalid(format!("embedding {i} out of range"));
        }
        let mut s = emb.clone();
        s.sort();
        s.dedup();
        if s.len() != na {
            return invalid(format!("embedding {i} is not injective"));
        }
        if !m.group().is_subgroup(emb) {
            return invalid(format!("the image of A in factor {i} is not a subgroup"));
        }
    }
    let g0 = metrics[0].group();
    let e0 = &embeddings[0];
    let idx0 = |x: Elem| e0.iter().position(|&y| y == x);
    let mut a_mul = vec![0; na * na];
    for a in 0..na {
        for b in 0..na {
            a_mul[a * na + b] = idx0(g0.mul(e0[a], e0[b])).unwrap();
        }
    }
    // A's identity must sit at index 0 so that the empty normal form is the identity
    let a_id = idx0(g0.identity()).unwrap();
    if a_id != 0 {
        return invalid("the identity must be listed first in the A embedding");
    }
    let a_inv = (0..na).map(|a| idx0(g0.inv(e0[a])).unwrap()).collect();
    for (i, m) in metrics.iter().enumerate().skip(1) {
        let gi = m.group();
        let ei = &embeddings[i];
        for a in 0..na {
            for b in 0..na {
                if ei[a_mul[a * na + b]] != gi.mul(ei[a], ei[b]) {
                    return invalid(format!("embedding {i} is not a homomorphism at ({a},{b})"));
                }
                if m.d(ei[a], ei[b]) != metrics[0].d(e0[a], e0[b]) {
                    return invalid(format!(
                        "metrics disagree on A: d({},{}) = {} in factor 0 but {} in factor {i}",
                        g0.label(e0[a]),
                        g0.label(e0[b]),
                        metrics[0].d(e0[a], e0[b]),
                        m.d(ei[a], ei[b])
                    ));
                }
            }
        }
    }

    let mut factors = Vec::new();
    for (m, emb) in metrics.into_iter().zip(embeddings) {
        let grp = m.group();
        let n = grp.order();
        let mut a_of = vec![None; n];
        for (a, &x) in emb.iter().enumerate() {
            a_of[x] = Some(a);
        }
        let mut split = vec![(0, 0); n];
        let mut reps = Vec::new();
        for x in 0..n {
            let coset: Vec<Elem> = emb.iter().map(|&a| grp.mul(a, x)).collect();
            let r = if a_of[x].is_some() { grp.identity() } else { *coset.iter().min().unwrap() };
            let a = a_of[grp.mul(x, grp.inv(r))].unwrap();
            split[x] = (a, r);
            if r == x && a_of[x].is_none() {
                reps.push(x);
            }
        }
        factors.push(Factor { metric: m, emb, a_of, split, reps });
    }

    let mut union = factors[0].metric.as_space();
    let mut pos = vec![(0..factors[0].group().order()).collect::<Vec<_>>()];
    for i in 1..factors.len() {
        let f = &factors[i];
        let common: Vec<(usize, usize)> = (0..na).map(|a| (pos[0][factors[0].emb[a]], f.emb[a])).collect();
        let am = amalgam(&union, &f.metric.as_space(), &common)?;
        union = am.space;
        pos.push(am.right);
    }
    let mut alphabet = vec![Letter::new(0, 0); union.len()];
    for (side, f) in factors.iter().enumerate().rev() {
        for x in 0..f.group().order() {
            alphabet[pos[side][x]] = Letter::new(side, x);
        }
    }
    Ok(AmalgamSetup { id: NEXT_ID.fetch_add(1, Ordering::Relaxed), factors, a_mul, a_inv, union, pos, alphabet })
}

impl AmalgamSetup {
    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, side: Side) -> &GroupMetric {
        &self.factors[side].metric
    }

    pub fn a_order(&self) -> usize {
        self.a_inv.len()
    }

    /// The image of the a-th element of A in a factor.
    pub fn embed(&self, side: Side, a: usize) -> Elem {
        self.factors[side].emb[a]
    }

    pub fn a_mul(&self, a: usize, b: usize) -> usize {
        self.a_mul[a * self.a_order() + b]
    }

    pub fn a_inv(&self, a: usize) -> usize {
        self.a_inv[a]
    }

    /// The A-index of a letter, if it lies in A.
    pub fn a_index(&self, l: Letter) -> Option<usize> {
        self.factors[l.side].a_of[l.elem]
    }

    pub fn in_a(&self, l: Letter) -> bool {
        self.a_index(l).is_some()
    }

    pub fn a_letter(&self, a: usize) -> Letter {
        Letter::new(0, self.factors[0].emb[a])
    }

    pub fn e_letter(&self) -> Letter {
        self.a_letter(0)
    }

    /// A-elements are written in the first factor; everything else is unchanged.
    pub fn canonical(&self, l: Letter) -> Letter {
        match self.a_index(l) {
            Some(a) => self.a_letter(a),
            None => l,
        }
    }

    pub fn letter(&self, side: Side, elem: Elem) -> Result<Letter> {
        if side >= self.factors.len() || elem >= self.factors[side].group().order() {
            return invalid("letter out of range");
        }
        Ok(Letter::new(side, elem))
    }

    /// True when the two letters can be multiplied inside one factor.
    pub fn multipliable(&self, x: Letter, y: Letter) -> bool {
        x.side == y.side || self.in_a(x) || self.in_a(y)
    }

    /// True when all letters of `w` lie in a single factor (A-letters fit everywhere).
    pub fn is_multipliable_word(&self, w: &[Letter]) -> bool {
        self.common_side(w).is_some()
    }

    /// A factor containing every letter of `w`, preferring the first non-A letter's side.
    pub fn common_side(&self, w: &[Letter]) -> Option<Side> {
        let mut side = None;
        for &l in w {
            if self.in_a(l) {
                continue;
            }
            match side {
                None => side = Some(l.side),
                Some(s) if s != l.side => return None,
                _ => {}
            }
        }
        Some(side.unwrap_or(w.first().map_or(0, |l| l.side)))
    }

    /// Rewrites a letter into the given factor; only possible for A-letters or letters already there.
    pub fn on_side(&self, l: Letter, side: Side) -> Option<Letter> {
        if l.side == side {
            return Some(l);
        }
        self.a_index(l).map(|a| Letter::new(side, self.factors[side].emb[a]))
    }

    /// The product of a multipliable word, computed inside one factor.
    pub fn multiply_in_factor(&self, w: &[Letter]) -> Option<Letter> {
        let side = self.common_side(w)?;
        let g = self.factors[side].group();
        let x = g.product(w.iter().map(|&l| self.on_side(l, side).unwrap().elem));
        Some(Letter::new(side, x))
    }

    pub fn letter_inv(&self, l: Letter) -> Letter {
        Letter::new(l.side, self.factors[l.side].group().inv(l.elem))
    }

    pub fn letter_label(&self, l: Letter) -> String {
        let name = ["G", "H"].get(l.side).map_or_else(|| format!("F{}", l.side), |s| s.to_string());
        format!("{}:{}", name, self.factors[l.side].group().label(l.elem))
    }

    pub fn word_label(&self, w: &[Letter]) -> String {
        w.iter().map(|&l| self.letter_label(l)).collect::<Vec<_>>().join(" ")
    }

    pub fn identity(&self) -> ProductElem {
        ProductElem { setup: self.id, head: 0, tail: Vec::new() }
    }

    pub fn owns(&self, f: &ProductElem) -> bool {
        f.setup == self.id
    }

    fn check(&self, f: &ProductElem) -> Result<()> {
        if !self.owns(f) {
            return invalid("element belongs to a different amalgam setup");
        }
        Ok(())
    }

    fn absorb(&self, tail: &mut [Letter], head: &mut usize, mut a: usize) {
        for l in tail.iter_mut().rev() {
            if a == 0 {
                return;
            }
            let f = &self.factors[l.side];
            let (a2, r) = f.split[f.group().mul(l.elem, f.emb[a])];
            l.elem = r;
            a = a2;
        }
        *head = self.a_mul(*head, a);
    }

    /// Right multiplication by one letter, in place.
    pub fn push_letter(&self, f: &mut ProductElem, l: Letter) {
        let fac = &self.factors[l.side];
        let grp = fac.group();
        match f.tail.last().copied() {
            Some(last) if last.side == l.side => {
                let (a, r) = fac.split[grp.mul(last.elem, l.elem)];
                f.tail.pop();
                let k = f.tail.len();
                self.absorb(&mut f.tail[..k], &mut f.head, a);
                if r != grp.identity() {
                    f.tail.push(Letter::new(l.side, r));
                }
            }
            _ => {
                let (a, r) = fac.split[l.elem];
                self.absorb(&mut f.tail, &mut f.head, a);
                if r != grp.identity() {
                    f.tail.push(Letter::new(l.side, r));
                }
            }
        }
    }

    /// The left-to-right product of the letters.
    pub fn evaluate(&self, w: &[Letter]) -> ProductElem {
        let mut f = self.identity();
        for &l in w {
            self.push_letter(&mut f, l);
        }
        f
    }

    pub fn is_trivial(&self, w: &[Letter]) -> bool {
        self.evaluate(w) == self.identity()
    }

    /// The normal form written as a word: head, then the tail letters.
    pub fn expand(&self, f: &ProductElem) -> Vec<Letter> {
        let mut w = Vec::with_capacity(f.tail.len() + 1);
        if f.head != 0 {
            w.push(self.a_letter(f.head));
        }
        w.extend_from_slice(&f.tail);
        w
    }

    pub fn multiply(&self, x: &ProductElem, y: &ProductElem) -> Result<ProductElem> {
        self.check(x)?;
        self.check(y)?;
        let mut out = x.clone();
        for l in self.expand(y) {
            self.push_letter(&mut out, l);
        }
        Ok(out)
    }

    pub fn inverse(&self, x: &ProductElem) -> ProductElem {
        let w: Vec<Letter> = self.expand(x).iter().rev().map(|&l| self.letter_inv(l)).collect();
        self.evaluate(&w)
    }

    /// The element of A (if any) that `f` equals.
    pub fn as_a(&self, f: &ProductElem) -> Option<usize> {
        f.tail.is_empty().then_some(f.head)
    }

    /// All shortest words evaluating to `f`, parametrized by `A^{ℓ-1}` in lexicographic order.
    pub fn reduced_forms(&self, f: &ProductElem) -> Vec<Vec<Letter>> {
        let k = f.tail.len();
        if k == 0 {
            if f.head == 0 {
                return vec![vec![self.e_letter()]];
            }
            return (0..self.factors.len()).map(|s| vec![Letter::new(s, self.factors[s].emb[f.head])]).collect();
        }
        let na = self.a_order();
        let total = na.pow((k - 1) as u32);
        (0..total).map(|code| self.reduced_form_at(f, code)).collect()
    }

    /// The reduced form with every inserted A-element equal to e.
    pub fn alpha0(&self, f: &ProductElem) -> Vec<Letter> {
        if f.tail.is_empty() {
            return self.reduced_forms(f).swap_remove(0);
        }
        self.reduced_form_at(f, 0)
    }

    fn reduced_form_at(&self, f: &ProductElem, mut code: usize) -> Vec<Letter> {
        let k = f.tail.len();
        let na = self.a_order();
        let mut bs = vec![0usize; k - 1];
        for i in (0..k - 1).rev() {
            bs[i] = code % na;
            code /= na;
        }
        (0..k)
            .map(|i| {
                let l = f.tail[i];
                let fac = &self.factors[l.side];
                let g = fac.group();
                let left = if i == 0 { fac.emb[f.head] } else { g.inv(fac.emb[bs[i - 1]]) };
                let right = if i + 1 < k { fac.emb[bs[i]] } else { g.identity() };
                Letter::new(l.side, g.mul(g.mul(left, l.elem), right))
            })
            .collect()
    }

    /// Position of a letter in the union space G ∪ H.
    pub fn union_index(&self, l: Letter) -> usize {
        self.pos[l.side][l.elem]
    }

    /// The amalgam ultrametric on G ∪ H over A.
    pub fn dist_union(&self, x: Letter, y: Letter) -> Rational {
        self.union.d(self.union_index(x), self.union_index(y))
    }

    pub fn union_space(&self) -> &FiniteSpace {
        &self.union
    }

    /// One canonical letter per point of G ∪ H.
    pub fn alphabet(&self) -> &[Letter] {
        &self.alphabet
    }

    /// Sorted distinct values of d_union, including 0.
    pub fn distance_values(&self) -> Vec<Rational> {
        self.union.distance_values()
    }

    /// Every element whose normal form has at most `len` tail letters.
    pub fn elements_up_to(&self, len: usize) -> Vec<ProductElem> {
        let mut tails: Vec<Vec<Letter>> = vec![Vec::new()];
        let mut frontier: Vec<Vec<Letter>> = vec![Vec::new()];
        for _ in 0..len {
            let mut next = Vec::new();
            for t in &frontier {
                for (side, f) in self.factors.iter().enumerate() {
                    if t.last().is_some_and(|l| l.side == side) {
                        continue;
                    }
                    for &r in &f.reps {
                        let mut v = t.clone();
                        v.push(Letter::new(side, r));
                        next.push(v);
                    }
                }
            }
            tails.extend(next.iter().cloned());
            frontier = next;
        }
        let mut out = Vec::new();
        for t in &tails {
            for head in 0..self.a_order() {
                out.push(ProductElem { setup: self.id, head, tail: t.clone() });
            }
        }
        out
    }

    pub fn show(&self, f: &ProductElem) -> String {
        let w = self.expand(f);
        if w.is_empty() {
            return "e".to_string();
        }
        self.word_label(&w)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.side, self.elem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{metric_from_chain, NormalChain};
    use std::sync::Arc;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    pub(crate) fn s3_setup() -> AmalgamSetup {
        let s3 = Arc::new(FiniteGroup::symmetric(3));
        let a3 = s3.generated(&[s3.parse_elem("(1 2 3)").unwrap()]);
        let m = metric_from_chain(
            s3,
            &NormalChain { subgroups: vec![(0..6).collect(), a3.clone(), vec![0]], values: vec![q(1, 1), q(1, 2)] },
        )
        .unwrap();
        let common: Vec<(Elem, Elem)> = a3.iter().map(|&a| (a, a)).collect();
        build_setup(m.clone(), m, &common).unwrap()
    }

    #[test]
    fn normal_forms_basic() {
        let st = s3_setup();
        let g = st.factor(G).group().clone();
        let t = g.parse_elem("(1 2)").unwrap();
        let c = g.parse_elem("(1 2 3)").unwrap();
        let x = st.evaluate(&[Letter::new(G, t), Letter::new(H, t)]);
        assert_eq!(x.tail.len(), 2);
        let y = st.evaluate(&[Letter::new(G, t), Letter::new(G, t)]);
        assert_eq!(y, st.identity());
        let a = st.evaluate(&[Letter::new(H, c)]);
        assert!(a.tail.is_empty());
        assert_ne!(a.head, 0);
        assert_eq!(st.multiply(&x, &st.inverse(&x)).unwrap(), st.identity());
    }

    #[test]
    fn reduced_forms_count() {
        let st = s3_setup();
        let g = st.factor(G).group().clone();
        let t = g.parse_elem("(1 2)").unwrap();
        let x = st.evaluate(&[Letter::new(G, t), Letter::new(H, t)]);
        let forms = st.reduced_forms(&x);
        assert_eq!(forms.len(), 3);
        for w in &forms {
            assert_eq!(st.evaluate(w), x);
            assert!(w.iter().all(|&l| !st.in_a(l)));
            assert_ne!(w[0].side, w[1].side);
        }
    }

    #[test]
    fn dist_union_over_a3() {
        let st = s3_setup();
        let g = st.factor(G).group().clone();
        let t = g.parse_elem("(1 2)").unwrap();
        let u = g.parse_elem("(1 3)").unwrap();
        assert_eq!(st.dist_union(Letter::new(G, t), Letter::new(H, u)), q(1, 1));
        assert_eq!(st.dist_union(Letter::new(G, t), Letter::new(G, u)), q(1, 2));
        let c = g.parse_elem("(1 2 3)").unwrap();
        assert_eq!(st.dist_union(Letter::new(G, c), Letter::new(H, c)), q(0, 1));
        assert_eq!(st.alphabet().len(), 9);
    }

    #[test]
    fn mixing_setups_is_rejected() {
        let a = s3_setup();
        let b = s3_setup();
        assert!(a.multiply(&a.identity(), &b.identity()).is_err());
    }

    #[test]
    fn disagreeing_metrics_rejected() {
        let s3 = Arc::new(FiniteGroup::symmetric(3));
        let a3 = s3.generated(&[s3.parse_elem("(1 2 3)").unwrap()]);
        let chain = |r: Rational| NormalChain {
            subgroups: vec![(0..6).collect(), a3.clone(), vec![0]],
            values: vec![q(1, 1), r],
        };
        let m1 = metric_from_chain(s3.clone(), &chain(q(1, 2))).unwrap();
        let m2 = metric_from_chain(s3, &chain(q(1, 3))).unwrap();
        let common: Vec<(Elem, Elem)> = a3.iter().map(|&a| (a, a)).collect();
        assert!(build_setup(m1, m2, &common).is_err());
    }
}
