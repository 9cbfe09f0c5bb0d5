//! HNN extensions of a finite ultrametric group.
//!
//! H̃ is the amalgam of G∗⟨u⟩ and G∗⟨v⟩ over G∗uAu⁻¹ ≅ G∗vBv⁻¹; the stable letter is t = v⁻¹u.
//! Eliminating u = vt shows H̃ ≅ HNN(G, φ) ∗ ⟨v⟩, which is how elements are stored: Britton normal
//! forms g₀ t^{ε₁} r₁ ⋯ interleaved with powers of v.
//!
//! The metric on ⟨u⟩ and ⟨v⟩ is K-discrete (K·|m−n| in metric mode). In ultrametric mode the closed
//! r-ball of δ is the normal closure of the r-balls of G, ⟨u⟩ and ⟨v⟩, so ‖f‖ is the least r for which
//! f dies in H̃ modulo that closure: for r < K this quotient is HNN(G/B_r, φ̄) ∗ ⟨v⟩, for r ≥ K it is G/B_r.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::amalgam::{build_setup, AmalgamSetup, Letter, ProductElem, G, H};
use crate::error::{invalid, Error, Result};
use crate::fpair::{is_multipliable_pair, rho, FPair};
use crate::group::{Elem, FiniteGroup, GroupMetric};
use crate::product::{product_norm, trivial_word_from};
use crate::rational::Rational;
use crate::report::Report;
use crate::space::Mode;

/// A letter of the flat alphabet G ∪ ⟨u⟩ ∪ ⟨v⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HLetter {
    G(Elem),
    U(i64),
    V(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gen {
    G(Elem),
    T(i8),
    V(i8),
}

fn inverse_gens(w: &[Gen], g: &FiniteGroup) -> Vec<Gen> {
    w.iter()
        .rev()
        .map(|&x| match x {
            Gen::G(a) => Gen::G(g.inv(a)),
            Gen::T(s) => Gen::T(-s),
            Gen::V(s) => Gen::V(-s),
        })
        .collect()
}

/// Britton rewriting for HNN(G, φ) with t a t⁻¹ = φ(a).
#[derive(Debug, Clone)]
struct Britton {
    group: FiniteGroup,
    phi: Vec<Elem>,
    phi_inv: Vec<Elem>,
    /// x = c·r with c in A (index 0) or B (index 1) and r the least element of the right coset.
    split: [Vec<(Elem, Elem)>; 2],
}

fn right_split(g: &FiniteGroup, sub: &[Elem]) -> Vec<(Elem, Elem)> {
    let e = g.identity();
    (0..g.order())
        .map(|x| {
            let coset: Vec<Elem> = sub.iter().map(|&c| g.mul(c, x)).collect();
            let r = if coset.contains(&e) { e } else { *coset.iter().min().unwrap() };
            (g.mul(x, g.inv(r)), r)
        })
        .collect()
}

impl Britton {
    fn new(group: FiniteGroup, a: &[Elem], b: &[Elem], phi: &[(Elem, Elem)]) -> Self {
        let n = group.order();
        let mut fwd = vec![usize::MAX; n];
        let mut bwd = vec![usize::MAX; n];
        for &(x, y) in phi {
            fwd[x] = y;
            bwd[y] = x;
        }
        let split = [right_split(&group, a), right_split(&group, b)];
        Britton { group, phi: fwd, phi_inv: bwd, split }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Core {
    head: Elem,
    syl: Vec<(i8, Elem)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Block {
    Core(Core),
    V(i64),
}

/// An element of HNN(G, φ) ∗ ⟨v⟩ in normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct HElem {
    blocks: Vec<Block>,
}

impl HElem {
    pub fn is_identity(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Number of stable-letter occurrences.
    pub fn t_length(&self) -> usize {
        self.blocks.iter().map(|b| if let Block::Core(c) = b { c.syl.len() } else { 0 }).sum()
    }

    pub fn v_exponent(&self) -> i64 {
        self.blocks.iter().map(|b| if let Block::V(k) = b { *k } else { 0 }).sum()
    }
}

impl Britton {
    fn core_push(&self, c: &mut Core, x: Gen) {
        let g = &self.group;
        match x {
            Gen::G(a) => {
                let Some(last) = c.syl.len().checked_sub(1) else {
                    c.head = g.mul(c.head, a);
                    return;
                };
                let mut k = last;
                let mut r = g.mul(c.syl[k].1, a);
                loop {
                    let eps = c.syl[k].0;
                    let (cf, rep) = self.split[usize::from(eps < 0)][r];
                    c.syl[k].1 = rep;
                    if cf == g.identity() {
                        return;
                    }
                    let moved = if eps > 0 { self.phi[cf] } else { self.phi_inv[cf] };
                    if k == 0 {
                        c.head = g.mul(c.head, moved);
                        return;
                    }
                    k -= 1;
                    r = g.mul(c.syl[k].1, moved);
                }
            }
            Gen::T(eps) => match c.syl.last() {
                Some(&(e2, r)) if e2 == -eps && r == g.identity() => {
                    c.syl.pop();
                }
                _ => c.syl.push((eps, g.identity())),
            },
            Gen::V(_) => unreachable!(),
        }
    }

    fn push(&self, f: &mut HElem, x: Gen) {
        let e = self.group.identity();
        match x {
            Gen::G(a) if a == e => {}
            Gen::V(s) => match f.blocks.last_mut() {
                Some(Block::V(k)) => {
                    *k += i64::from(s);
                    if *k == 0 {
                        f.blocks.pop();
                    }
                }
                _ => f.blocks.push(Block::V(i64::from(s))),
            },
            _ => {
                if !matches!(f.blocks.last(), Some(Block::Core(_))) {
                    f.blocks.push(Block::Core(Core { head: e, syl: Vec::new() }));
                }
                let Some(Block::Core(c)) = f.blocks.last_mut() else { unreachable!() };
                self.core_push(c, x);
                if c.head == e && c.syl.is_empty() {
                    f.blocks.pop();
                }
            }
        }
    }

    fn gens(&self, f: &HElem) -> Vec<Gen> {
        let mut w = Vec::new();
        for b in &f.blocks {
            match b {
                Block::V(k) => w.extend(std::iter::repeat_n(Gen::V(k.signum() as i8), k.unsigned_abs() as usize)),
                Block::Core(c) => {
                    w.push(Gen::G(c.head));
                    for &(eps, r) in &c.syl {
                        w.push(Gen::T(eps));
                        w.push(Gen::G(r));
                    }
                }
            }
        }
        w
    }

    fn eval(&self, w: &[Gen]) -> HElem {
        let mut f = HElem::default();
        for &x in w {
            self.push(&mut f, x);
        }
        f
    }

    fn show(&self, f: &HElem) -> String {
        if f.is_identity() {
            return "e".into();
        }
        let e = self.group.identity();
        let mut parts = Vec::new();
        for b in &f.blocks {
            match b {
                Block::V(k) => parts.push(if *k == 1 { "v".to_string() } else { format!("v^{k}") }),
                Block::Core(c) => {
                    if c.head != e {
                        parts.push(self.group.label(c.head).to_string());
                    }
                    for &(eps, r) in &c.syl {
                        parts.push(if eps > 0 { "t".into() } else { "t^-1".into() });
                        if r != e {
                            parts.push(self.group.label(r).to_string());
                        }
                    }
                }
            }
        }
        parts.join(" ")
    }
}

#[derive(Debug, Clone)]
enum Level {
    Free { proj: Vec<Elem>, engine: Britton },
    Collapsed { proj: Vec<Elem>, quotient: FiniteGroup },
}

/// The quotients of H̃ (or of G∗⟨u⟩) by the closed balls of δ, one per distance value.
#[derive(Debug, Clone)]
struct Tower {
    values: Vec<Rational>,
    levels: Vec<Level>,
    /// In G∗⟨u⟩ the letter u plays the role of t and there is no v.
    u_is_stable: bool,
}

impl Tower {
    fn new(
        m: &GroupMetric,
        a: &[Elem],
        b: &[Elem],
        phi: &[(Elem, Elem)],
        k: Rational,
        u_is_stable: bool,
    ) -> Result<Self> {
        let g = m.group();
        let mut values = m.distance_values();
        values.push(k);
        values.sort();
        values.dedup();
        let mut levels = Vec::with_capacity(values.len());
        for &r in &values {
            let ball: Vec<Elem> = (0..g.order()).filter(|&x| m.norm(x) <= r).collect();
            let (q, proj) = g.quotient(&ball)?;
            if r >= k {
                levels.push(Level::Collapsed { proj, quotient: q });
            } else {
                let img = |s: &[Elem]| {
                    let mut v: Vec<Elem> = s.iter().map(|&x| proj[x]).collect();
                    v.sort();
                    v.dedup();
                    v
                };
                let mut bar: Vec<(Elem, Elem)> = phi.iter().map(|&(x, y)| (proj[x], proj[y])).collect();
                bar.sort();
                bar.dedup();
                if bar.windows(2).any(|w| w[0].0 == w[1].0) {
                    return invalid("φ does not descend to the quotient by a ball");
                }
                let engine = Britton::new(q, &img(a), &img(b), &bar);
                levels.push(Level::Free { proj, engine });
            }
        }
        Ok(Tower { values, levels, u_is_stable })
    }

    fn gens(&self, w: &[HLetter], proj: &[Elem]) -> Vec<Gen> {
        let mut out = Vec::new();
        for &l in w {
            match l {
                HLetter::G(x) => out.push(Gen::G(proj[x])),
                HLetter::U(m) => {
                    let s = m.signum() as i8;
                    for _ in 0..m.unsigned_abs() {
                        match (self.u_is_stable, s > 0) {
                            (true, _) => out.push(Gen::T(s)),
                            (false, true) => out.extend([Gen::V(1), Gen::T(1)]),
                            (false, false) => out.extend([Gen::T(-1), Gen::V(-1)]),
                        }
                    }
                }
                HLetter::V(m) => out.extend(std::iter::repeat_n(Gen::V(m.signum() as i8), m.unsigned_abs() as usize)),
            }
        }
        out
    }

    fn dies_at(&self, i: usize, w: &[HLetter]) -> bool {
        match &self.levels[i] {
            Level::Free { proj, engine } => engine.eval(&self.gens(w, proj)).is_identity(),
            Level::Collapsed { proj, quotient } => {
                let p = quotient
                    .product(w.iter().filter_map(|&l| if let HLetter::G(x) = l { Some(proj[x]) } else { None }));
                p == quotient.identity()
            }
        }
    }

    fn norm(&self, w: &[HLetter]) -> Rational {
        let i = (0..self.levels.len()).find(|&i| self.dies_at(i, w)).expect("the top level is trivial");
        self.values[i]
    }

    fn full(&self) -> &Britton {
        match &self.levels[0] {
            Level::Free { engine, .. } => engine,
            Level::Collapsed { .. } => unreachable!("K is positive"),
        }
    }

    fn full_proj(&self) -> &[Elem] {
        match &self.levels[0] {
            Level::Free { proj, .. } => proj,
            Level::Collapsed { .. } => unreachable!("K is positive"),
        }
    }
}

/// An HNN extension with its Graev ultrametric.
#[derive(Debug, Clone)]
pub struct HnnSetup {
    base: GroupMetric,
    a: Vec<Elem>,
    b: Vec<Elem>,
    phi: Vec<(Elem, Elem)>,
    k: Rational,
    mode: Mode,
    tower: Tower,
}

fn sorted(v: &[Elem]) -> Vec<Elem> {
    let mut v = v.to_vec();
    v.sort();
    v.dedup();
    v
}

/// Validates φ and diam(A) ≤ K, then builds H̃.
pub fn build_hnn(
    g: GroupMetric,
    a: &[Elem],
    b: &[Elem],
    phi: &[(Elem, Elem)],
    k: Rational,
    mode: Mode,
) -> Result<HnnSetup> {
    let grp = g.group();
    let (a, b) = (sorted(a), sorted(b));
    if k <= Rational::zero() {
        return invalid("K must be positive");
    }
    if !grp.is_subgroup(&a) || !grp.is_subgroup(&b) {
        return invalid("A and B must be subgroups");
    }
    let mut map = HashMap::new();
    for &(x, y) in phi {
        if !a.contains(&x) || !b.contains(&y) {
            return invalid("φ must map A into B");
        }
        if map.insert(x, y).is_some_and(|old| old != y) {
            return invalid("φ is not a function");
        }
    }
    if map.len() != a.len() {
        return invalid("φ must be defined on all of A");
    }
    let image = sorted(&map.values().copied().collect::<Vec<_>>());
    if image != b {
        return invalid("φ is not a bijection onto B");
    }
    for &x in &a {
        for &y in &a {
            if map[&grp.mul(x, y)] != grp.mul(map[&x], map[&y]) {
                return invalid("φ is not a homomorphism");
            }
            if g.d(x, y) != g.d(map[&x], map[&y]) {
                return invalid("φ is not an isometry");
            }
        }
    }
    if g.diameter_of(&a) > k {
        return invalid(format!("diam(A) = {} exceeds K = {k}", g.diameter_of(&a)));
    }
    let mut pairs: Vec<(Elem, Elem)> = map.into_iter().collect();
    pairs.sort();
    let tower = Tower::new(&g, &a, &b, &pairs, k, false)?;
    let st = HnnSetup { base: g, a, b, phi: pairs, k, mode, tower };
    if mode == Mode::Ultrametric {
        if st.norm(&st.stable())? != k {
            return Err(Error::Invalid("δ(t, e) differs from K".into()));
        }
        if let Some(x) = (0..st.base.group().order()).find(|&x| st.norm(&[HLetter::G(x)]).unwrap() != st.base.norm(x)) {
            return Err(Error::Invalid(format!("δ disagrees with d at {}", st.base.group().label(x))));
        }
    }
    Ok(st)
}

impl HnnSetup {
    pub fn base(&self) -> &GroupMetric {
        &self.base
    }

    pub fn a(&self) -> &[Elem] {
        &self.a
    }

    pub fn b(&self) -> &[Elem] {
        &self.b
    }

    pub fn phi(&self) -> &[(Elem, Elem)] {
        &self.phi
    }

    pub fn k(&self) -> Rational {
        self.k
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// t = v⁻¹u, with t a t⁻¹ = φ(a).
    pub fn stable(&self) -> Vec<HLetter> {
        vec![HLetter::V(-1), HLetter::U(1)]
    }

    pub fn evaluate(&self, w: &[HLetter]) -> HElem {
        self.tower.full().eval(&self.tower.gens(w, self.tower.full_proj()))
    }

    pub fn is_trivial(&self, w: &[HLetter]) -> bool {
        self.evaluate(w).is_identity()
    }

    pub fn show(&self, f: &HElem) -> String {
        self.tower.full().show(f)
    }

    pub fn letter_label(&self, l: HLetter) -> String {
        match l {
            HLetter::G(x) => self.base.group().label(x).to_string(),
            HLetter::U(1) => "u".into(),
            HLetter::U(m) => format!("u^{m}"),
            HLetter::V(1) => "v".into(),
            HLetter::V(m) => format!("v^{m}"),
        }
    }

    pub fn inverse_word(&self, w: &[HLetter]) -> Vec<HLetter> {
        w.iter()
            .rev()
            .map(|&l| match l {
                HLetter::G(x) => HLetter::G(self.base.group().inv(x)),
                HLetter::U(m) => HLetter::U(-m),
                HLetter::V(m) => HLetter::V(-m),
            })
            .collect()
    }

    /// Exact ‖w‖ in the ultrametric case.
    pub fn norm(&self, w: &[HLetter]) -> Result<Rational> {
        if self.mode != Mode::Ultrametric {
            return invalid("the exact HNN norm is available in ultrametric mode; use the bounded evaluator");
        }
        self.check_word(w)?;
        Ok(self.tower.norm(w))
    }

    pub fn dist(&self, w1: &[HLetter], w2: &[HLetter]) -> Result<Rational> {
        let mut w = self.inverse_word(w1);
        w.extend_from_slice(w2);
        self.norm(&w)
    }

    fn check_word(&self, w: &[HLetter]) -> Result<()> {
        if w.iter().any(|&l| matches!(l, HLetter::G(x) if x >= self.base.group().order())) {
            return invalid("letter outside G");
        }
        Ok(())
    }

    fn canon(&self, l: HLetter) -> HLetter {
        match l {
            HLetter::U(0) | HLetter::V(0) => HLetter::G(self.base.group().identity()),
            _ => l,
        }
    }

    fn combine(&self, a: Rational, b: Rational) -> Rational {
        self.mode.combine(a, b)
    }

    fn cyclic_dist(&self, m: i64) -> Rational {
        match self.mode {
            _ if m == 0 => Rational::zero(),
            Mode::Ultrametric => self.k,
            Mode::Metric => self.k * Rational::from_int(m.abs()),
        }
    }

    fn letter_norm(&self, l: HLetter) -> Rational {
        match self.canon(l) {
            HLetter::G(x) => self.base.norm(x),
            HLetter::U(m) | HLetter::V(m) => self.cyclic_dist(m),
        }
    }

    /// Distance in the union of G, ⟨u⟩ and ⟨v⟩ glued at e.
    pub fn letter_dist(&self, x: HLetter, z: HLetter) -> Rational {
        match (self.canon(x), self.canon(z)) {
            (HLetter::G(a), HLetter::G(b)) => self.base.d(a, b),
            (HLetter::U(m), HLetter::U(n)) | (HLetter::V(m), HLetter::V(n)) => self.cyclic_dist(m - n),
            (x, z) => self.combine(self.letter_norm(x), self.letter_norm(z)),
        }
    }

    /// G, then u^m and v^m for 0 < |m| ≤ cap.
    pub fn alphabet(&self, cap: i64) -> Vec<HLetter> {
        let mut v: Vec<HLetter> = (0..self.base.group().order()).map(HLetter::G).collect();
        for m in (-cap..=cap).filter(|&m| m != 0) {
            v.push(HLetter::U(m));
            v.push(HLetter::V(m));
        }
        v
    }

    fn mul_elem(&self, x: &HElem, y: &HElem) -> HElem {
        let br = self.tower.full();
        let mut out = x.clone();
        for g in br.gens(y) {
            br.push(&mut out, g);
        }
        out
    }

    fn inv_elem(&self, x: &HElem) -> HElem {
        let br = self.tower.full();
        br.eval(&inverse_gens(&br.gens(x), &br.group))
    }

    /// Infimum of ρ over pairs (α, ζ) of words of length `max_len` over `alphabet(cap)` with α = w and
    /// ζ = e in H̃, by meeting halves in the middle.
    pub fn bounded_norm(&self, w: &[HLetter], max_len: usize, cap: i64) -> Result<Rational> {
        self.check_word(w)?;
        if w.len() > max_len {
            return Err(Error::Bound(format!("word of length {} exceeds the bound {max_len}", w.len())));
        }
        let target = self.evaluate(w);
        if target.is_identity() {
            return Ok(Rational::zero());
        }
        let ub = self.mode.combine_all(w.iter().map(|&l| self.letter_norm(l)));
        let letters = self.alphabet(cap);
        let br = self.tower.full();
        let proj = self.tower.full_proj();
        let pairs: Vec<(HElem, HElem, Rational)> = letters
            .iter()
            .flat_map(|&x| letters.iter().map(move |&z| (x, z)))
            .map(|(x, z)| (x, z, self.letter_dist(x, z)))
            .filter(|&(_, _, c)| c <= ub)
            .map(|(x, z, c)| (br.eval(&self.tower.gens(&[x], proj)), br.eval(&self.tower.gens(&[z], proj)), c))
            .collect();
        let layer = |len: usize| {
            let mut cur: HashMap<(HElem, HElem), Rational> =
                HashMap::from([((HElem::default(), HElem::default()), Rational::zero())]);
            for _ in 0..len {
                let mut next: HashMap<(HElem, HElem), Rational> = HashMap::new();
                for ((pa, pz), &c) in &cur {
                    for (x, z, d) in &pairs {
                        let cost = self.combine(c, *d);
                        if cost > ub {
                            continue;
                        }
                        let key = (self.mul_elem(pa, x), self.mul_elem(pz, z));
                        next.entry(key).and_modify(|v| *v = (*v).min(cost)).or_insert(cost);
                    }
                }
                cur = next;
            }
            cur
        };
        let left = layer(max_len.div_ceil(2));
        let right = layer(max_len / 2);
        let mut best = ub;
        for ((pa, pz), &c1) in &left {
            let key = (self.mul_elem(&self.inv_elem(pa), &target), self.inv_elem(pz));
            if let Some(&c2) = right.get(&key) {
                best = best.min(self.combine(c1, c2));
            }
        }
        Ok(best)
    }

    /// True when doubling the exponent cap leaves the bounded value unchanged.
    pub fn cap_is_stable(&self, w: &[HLetter], max_len: usize, cap: i64) -> Result<bool> {
        Ok(self.bounded_norm(w, max_len, cap)? == self.bounded_norm(w, max_len, 2 * cap)?)
    }
}

impl fmt::Display for HLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HLetter::G(x) => write!(f, "g{x}"),
            HLetter::U(m) => write!(f, "u^{m}"),
            HLetter::V(m) => write!(f, "v^{m}"),
        }
    }
}

/// G∗⟨u⟩ with the K-discrete metric on ⟨u⟩, and its exact Graev ultrametric.
#[derive(Debug, Clone)]
pub struct UFreeProduct {
    base: GroupMetric,
    k: Rational,
    tower: Tower,
}

impl UFreeProduct {
    pub fn new(base: GroupMetric, k: Rational) -> Result<Self> {
        if k <= Rational::zero() {
            return invalid("K must be positive");
        }
        let e = base.group().identity();
        let tower = Tower::new(&base, &[e], &[e], &[(e, e)], k, true)?;
        Ok(UFreeProduct { base, k, tower })
    }

    pub fn k(&self) -> Rational {
        self.k
    }

    pub fn base(&self) -> &GroupMetric {
        &self.base
    }

    /// Words over G and u only.
    pub fn norm(&self, w: &[HLetter]) -> Result<Rational> {
        if w.iter().any(|l| matches!(l, HLetter::V(_))) {
            return invalid("v does not occur in G∗⟨u⟩");
        }
        Ok(self.tower.norm(w))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub word: String,
    pub inner: Rational,
    pub ambient: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "item", rename_all = "snake_case")]
pub enum AgreementViolation {
    /// diam(A) ≤ K but the two norms differ.
    Disagree(Disagreement),
    /// diam(A) > K and no element of the sample separates the norms.
    NoStrictWitness,
}

impl fmt::Display for AgreementViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgreementViolation::Disagree(d) => write!(f, "{}: {} != {}", d.word, d.inner, d.ambient),
            AgreementViolation::NoStrictWitness => write!(f, "diam(A) > K but no strict witness was found"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementCheck {
    pub diam: Rational,
    pub k: Rational,
    pub checked: usize,
    pub witnesses: Vec<Disagreement>,
    pub report: Report<AgreementViolation>,
}

/// Compares, on elements of G∗uAu⁻¹ of reduced length ≤ `length_bound`, the Graev norm of the free
/// product G∗A' (A' = uAu⁻¹ with the metric of A) against the norm induced from G∗⟨u⟩.
/// With `sample = Some((n, seed))` only n seeded-random elements are compared.
pub fn check_subgroup_metric_agreement(
    g: &GroupMetric,
    a: &[Elem],
    k: Rational,
    length_bound: usize,
    sample: Option<(usize, u64)>,
) -> Result<AgreementCheck> {
    let grp = g.group();
    let a = sorted(a);
    if !grp.is_subgroup(&a) {
        return invalid("A must be a subgroup");
    }
    let e = grp.identity();
    let mut a_list = vec![e];
    a_list.extend(a.iter().copied().filter(|&x| x != e));
    let table = a_list
        .iter()
        .map(|&x| a_list.iter().map(|&y| a_list.iter().position(|&z| z == grp.mul(x, y)).unwrap()).collect())
        .collect();
    let labels =
        a_list.iter().map(|&x| if x == e { "e".to_string() } else { format!("u·{}·u⁻¹", grp.label(x)) }).collect();
    let sub = Arc::new(FiniteGroup::from_table(table)?.with_labels(labels)?);
    let rows = a_list.iter().map(|&x| a_list.iter().map(|&y| g.d(x, y)).collect()).collect();
    let sub_metric = GroupMetric::from_table(sub, rows)?;
    let inner = build_setup(g.clone(), sub_metric, &[(e, 0)])?;
    let ambient = UFreeProduct::new(g.clone(), k)?;
    let mut elems = inner.elements_up_to(length_bound);
    if let Some((n, seed)) = sample {
        elems.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        elems.truncate(n);
    }
    let diam = g.diameter_of(&a);
    let mut witnesses = Vec::new();
    for f in &elems {
        let word: Vec<HLetter> = inner
            .expand(f)
            .iter()
            .flat_map(|l| {
                if l.side == G {
                    vec![HLetter::G(l.elem)]
                } else {
                    vec![HLetter::U(1), HLetter::G(a_list[l.elem]), HLetter::U(-1)]
                }
            })
            .collect();
        let x = product_norm(&inner, f).value;
        let y = ambient.norm(&word)?;
        if x != y {
            witnesses.push(Disagreement { word: inner.show(f), inner: x, ambient: y });
        }
    }
    let mut report = Report::new();
    if diam <= k {
        for w in &witnesses {
            report.push(AgreementViolation::Disagree(w.clone()));
        }
    } else if witnesses.is_empty() {
        report.push(AgreementViolation::NoStrictWitness);
    }
    Ok(AgreementCheck { diam, k, checked: elems.len(), witnesses, report })
}

/// G∗⟨u⟩ modelled as G∗ℤ_N over the trivial subgroup, for f-pair rewriting. With N larger than twice
/// the total exponent any word under consideration can carry, no relation u^N = e is ever used.
#[derive(Debug, Clone)]
pub struct UModel {
    setup: AmalgamSetup,
    a: Vec<Elem>,
    n: usize,
}

impl UModel {
    pub fn new(g: GroupMetric, a: &[Elem], k: Rational, n: usize) -> Result<Self> {
        let a = sorted(a);
        if !g.group().is_subgroup(&a) {
            return invalid("A must be a subgroup");
        }
        if n < 3 {
            return invalid("the cyclic model needs N ≥ 3");
        }
        let e = g.group().identity();
        let zn = GroupMetric::discrete(Arc::new(FiniteGroup::cyclic(n, "u")), k);
        let setup = build_setup(g, zn, &[(e, 0)])?;
        Ok(UModel { setup, a, n })
    }

    pub fn setup(&self) -> &AmalgamSetup {
        &self.setup
    }

    pub fn u(&self, m: i64) -> Letter {
        self.setup.canonical(Letter::new(H, m.rem_euclid(self.n as i64) as usize))
    }

    /// The exponent m of a letter u^m, 0 for G-letters.
    pub fn exponent(&self, l: Letter) -> i64 {
        if l.side != H {
            return 0;
        }
        let k = l.elem as i64;
        if 2 * k > self.n as i64 {
            k - self.n as i64
        } else {
            k
        }
    }

    pub fn in_a(&self, l: Letter) -> bool {
        l.side == G && self.a.contains(&l.elem) || self.exponent(l) == 0 && self.setup.in_a(l)
    }

    /// Membership in G∗uAu⁻¹: the normal form reads g₀ u a₁ u⁻¹ g₁ u a₂ u⁻¹ ⋯.
    pub fn in_conjugate_subgroup(&self, f: &ProductElem) -> bool {
        let mut inside = 0;
        for &l in &f.tail {
            match (inside, self.exponent(l)) {
                (0, 0) => {}
                (0, 1) => inside = 1,
                (1, 0) if self.a.contains(&l.elem) => inside = 2,
                (2, -1) => inside = 0,
                _ => return false,
            }
        }
        inside == 0
    }

    pub fn is_hereditary(&self, p: &FPair) -> bool {
        is_multipliable_pair(&self.setup, p)
            && p.alpha
                .iter()
                .zip(&p.zeta)
                .all(|(&x, &z)| self.exponent(z) == 0 || self.setup.canonical(x) == self.setup.canonical(z))
    }

    /// Hereditary, ζ(i) = α(i) at every α(i) = u^{±1}, and ζ(i+1) ∈ A after every α(i) = u.
    pub fn is_rigid(&self, p: &FPair) -> bool {
        self.is_hereditary(p)
            && (0..p.len()).all(|i| {
                let m = self.exponent(p.alpha[i]);
                (m.abs() != 1 || p.zeta[i] == p.alpha[i]) && (m != 1 || i + 1 == p.len() || self.in_a(p.zeta[i + 1]))
            })
    }

    fn search(&self, p: &FPair, allowed: impl Fn(usize, Letter) -> bool) -> Option<FPair> {
        let st = &self.setup;
        let mut values: Vec<Rational> = st.distance_values().into_iter().filter(|&r| r <= rho(st, p)).collect();
        values.sort();
        for r in values {
            let cands: Vec<Vec<Letter>> = p
                .alpha
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let mut v: Vec<Letter> = st
                        .alphabet()
                        .iter()
                        .copied()
                        .filter(|&z| st.dist_union(x, z) <= r && st.multipliable(x, z) && allowed(i, z))
                        .collect();
                    v.sort_by_key(|&z| (st.dist_union(x, z), z));
                    v
                })
                .collect();
            if let Some(zeta) = trivial_word_from(st, &cands) {
                return Some(FPair { alpha: p.alpha.clone(), zeta, target: p.target.clone() });
            }
        }
        None
    }

    /// A hereditary pair with the same α and ρ no larger; the input is returned if already hereditary.
    pub fn make_hereditary(&self, p: &FPair) -> Result<FPair> {
        let st = &self.setup;
        if !p.is_valid(st) || !is_multipliable_pair(st, p) {
            return invalid("make_hereditary needs a multipliable f-pair");
        }
        if !self.in_conjugate_subgroup(&p.target) {
            return invalid("the target is not in G∗uAu⁻¹");
        }
        if self.is_hereditary(p) {
            return Ok(p.clone());
        }
        let alpha = &p.alpha;
        self.search(p, |i, z| self.exponent(z) == 0 || st.canonical(z) == st.canonical(alpha[i]))
            .ok_or_else(|| Error::Invalid("no hereditary pair below ρ".into()))
    }

    /// A rigid pair with the same α and ρ no larger; needs α reduced and the pair hereditary.
    pub fn make_rigid(&self, p: &FPair) -> Result<FPair> {
        let st = &self.setup;
        if !p.is_valid(st) || !self.in_conjugate_subgroup(&p.target) {
            return invalid("make_rigid needs an f-pair with target in G∗uAu⁻¹");
        }
        if p.len() != p.target.reduced_length().max(1) {
            return invalid("α is not a reduced form of the target");
        }
        if !self.is_hereditary(p) {
            return invalid("the pair is not hereditary");
        }
        if self.is_rigid(p) {
            return Ok(p.clone());
        }
        let alpha = &p.alpha;
        self.search(p, |i, z| {
            let m = self.exponent(alpha[i]);
            (self.exponent(z) == 0 || st.canonical(z) == st.canonical(alpha[i]))
                && (m.abs() != 1 || z == alpha[i])
                && (i == 0 || self.exponent(alpha[i - 1]) != 1 || self.in_a(z))
        })
        .ok_or_else(|| Error::Invalid("no rigid pair below ρ".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{metric_from_chain, NormalChain};

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn s3(top: Rational, low: Rational) -> (GroupMetric, Vec<Elem>) {
        let g = Arc::new(FiniteGroup::symmetric(3));
        let a3 = g.generated(&[g.parse_elem("(1 2 3)").unwrap()]);
        let m = metric_from_chain(
            g,
            &NormalChain { subgroups: vec![(0..6).collect(), a3.clone(), vec![0]], values: vec![top, low] },
        )
        .unwrap();
        (m, a3)
    }

    #[test]
    fn britton_relations_hold() {
        let (m, a3) = s3(q(1, 1), q(1, 2));
        let phi: Vec<(Elem, Elem)> = a3.iter().map(|&x| (x, x)).collect();
        let st = build_hnn(m.clone(), &a3, &a3, &phi, q(1, 2), Mode::Ultrametric).unwrap();
        let c = m.group().parse_elem("(1 2 3)").unwrap();
        let s = m.group().parse_elem("(1 2)").unwrap();
        let t = st.stable();
        let ti = st.inverse_word(&t);
        let conj = [t.clone(), vec![HLetter::G(c)], ti.clone(), vec![HLetter::G(m.group().inv(c))]].concat();
        assert!(st.is_trivial(&conj));
        let other = [t.clone(), vec![HLetter::G(s)], ti, vec![HLetter::G(s)]].concat();
        assert!(!st.is_trivial(&other));
        assert_eq!(st.evaluate(&[HLetter::U(1), HLetter::U(-1)]), HElem::default());
        assert_eq!(st.evaluate(&t).t_length(), 1);
    }

    #[test]
    fn stable_letter_has_norm_k() {
        let (m, a3) = s3(q(1, 1), q(1, 2));
        let e = m.group().identity();
        for k in [q(1, 4), q(1, 2), q(2, 1)] {
            let st = build_hnn(m.clone(), &[e], &[e], &[(e, e)], k, Mode::Ultrametric).unwrap();
            assert_eq!(st.norm(&st.stable()).unwrap(), k);
        }
        let phi: Vec<(Elem, Elem)> = a3.iter().map(|&x| (x, x)).collect();
        assert!(build_hnn(m.clone(), &a3, &a3, &phi, q(1, 4), Mode::Ultrametric).is_err());
        let bad: Vec<(Elem, Elem)> = a3.iter().map(|&x| (x, m.group().inv(x))).collect();
        assert!(build_hnn(m.clone(), &a3, &a3, &bad, q(1, 2), Mode::Ultrametric).is_ok());
        let s = m.group().parse_elem("(1 2)").unwrap();
        assert!(build_hnn(m, &[e, s], &a3, &phi, q(1, 1), Mode::Ultrametric).is_err());
    }

    #[test]
    fn bounded_evaluator_matches_exact_values() {
        let (m, a3) = s3(q(1, 1), q(1, 2));
        let phi: Vec<(Elem, Elem)> = a3.iter().map(|&x| (x, x)).collect();
        let st = build_hnn(m.clone(), &a3, &a3, &phi, q(1, 2), Mode::Ultrametric).unwrap();
        let c = m.group().parse_elem("(1 2 3)").unwrap();
        let t = st.stable();
        assert_eq!(st.bounded_norm(&t, 4, 2).unwrap(), q(1, 2));
        for x in 0..6 {
            assert_eq!(st.bounded_norm(&[HLetter::G(x)], 3, 1).unwrap(), m.norm(x));
        }
        let w = [t.clone(), vec![HLetter::G(c)]].concat();
        assert_eq!(st.bounded_norm(&w, 4, 2).unwrap(), st.norm(&w).unwrap());
        assert!(st.cap_is_stable(&t, 3, 1).unwrap());
    }

    #[test]
    fn agreement_follows_the_diameter() {
        let (m, a3) = s3(q(1, 1), q(1, 2));
        let ok = check_subgroup_metric_agreement(&m, &a3, q(1, 2), 2, None).unwrap();
        assert!(ok.report.is_ok(), "{:?}", ok.witnesses);
        assert!(ok.witnesses.is_empty());
        let (big, a3) = s3(q(3, 1), q(2, 1));
        let strict = check_subgroup_metric_agreement(&big, &a3, q(1, 1), 2, None).unwrap();
        assert!(strict.report.is_ok());
        assert!(strict.witnesses.iter().any(|w| w.inner == q(2, 1) && w.ambient == q(1, 1)));
    }

    #[test]
    fn rigid_pair_for_a_conjugate() {
        let (m, a3) = s3(q(1, 1), q(1, 2));
        let c = m.group().parse_elem("(1 2 3)").unwrap();
        let um = UModel::new(m, &a3, q(1, 2), 31).unwrap();
        let st = um.setup();
        let alpha = vec![um.u(1), Letter::new(G, c), um.u(-1)];
        let zeta = vec![st.e_letter(), st.e_letter(), st.e_letter()];
        let p = FPair::new(st, alpha.clone(), zeta).unwrap();
        assert!(um.in_conjugate_subgroup(&p.target));
        let h = um.make_hereditary(&p).unwrap();
        assert_eq!(h, p);
        let r = um.make_rigid(&h).unwrap();
        assert!(um.is_rigid(&r));
        assert!(rho(st, &r) <= rho(st, &p));
        assert_eq!(r.zeta[0], alpha[0]);
        assert_eq!(rho(st, &r), q(1, 2));
    }
}
