//! Evaluation forests over words whose product lies in A: validity, maximality, the recursive
//! builder and exhaustive enumeration of maximal forests.
//!
//! Intervals are 1-based and inclusive.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::amalgam::{AmalgamSetup, Letter};
use crate::error::{invalid, Error, Result};
use crate::report::Report;

pub type Interval = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestNode {
    pub interval: Interval,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationForest {
    pub n: usize,
    pub nodes: Vec<ForestNode>,
}

fn contains(outer: Interval, inner: Interval) -> bool {
    outer.0 <= inner.0 && inner.1 <= outer.1
}

fn meets(a: Interval, b: Interval) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

impl EvaluationForest {
    /// Builds the forest of a laminar family; parents are the smallest strictly containing intervals.
    pub fn from_intervals(n: usize, intervals: &[Interval]) -> Result<Self> {
        let mut ivs = intervals.to_vec();
        ivs.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        if ivs.windows(2).any(|w| w[0] == w[1]) {
            return invalid("repeated interval");
        }
        let mut nodes: Vec<ForestNode> = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        for iv in ivs {
            while let Some(&top) = stack.last() {
                if nodes[top].interval.1 < iv.0 {
                    stack.pop();
                } else {
                    break;
                }
            }
            let parent = stack.last().copied();
            if let Some(p) = parent {
                if !contains(nodes[p].interval, iv) {
                    return invalid(format!("intervals {:?} and {:?} cross", nodes[p].interval, iv));
                }
            }
            nodes.push(ForestNode { interval: iv, parent });
            stack.push(nodes.len() - 1);
        }
        Ok(EvaluationForest { n, nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn interval(&self, t: usize) -> Interval {
        self.nodes[t].interval
    }

    /// The interval set, sorted; two valid forests are the same iff these agree.
    pub fn intervals(&self) -> Vec<Interval> {
        let mut v: Vec<Interval> = self.nodes.iter().map(|n| n.interval).collect();
        v.sort();
        v
    }

    pub fn roots(&self) -> Vec<usize> {
        let mut r: Vec<usize> = (0..self.len()).filter(|&t| self.nodes[t].parent.is_none()).collect();
        r.sort_by_key(|&t| self.nodes[t].interval.0);
        r
    }

    /// Immediate predecessors, left to right.
    pub fn children(&self, t: usize) -> Vec<usize> {
        let mut c: Vec<usize> = (0..self.len()).filter(|&s| self.nodes[s].parent == Some(t)).collect();
        c.sort_by_key(|&s| self.nodes[s].interval.0);
        c
    }

    /// R_t: positions of I_t outside every child interval.
    pub fn remainder(&self, t: usize) -> Vec<usize> {
        let (lo, hi) = self.nodes[t].interval;
        let kids: Vec<Interval> = self.children(t).iter().map(|&s| self.nodes[s].interval).collect();
        (lo..=hi).filter(|&i| !kids.iter().any(|&(a, b)| a <= i && i <= b)).collect()
    }

    /// Longest downward path to a leaf.
    pub fn height(&self, t: usize) -> usize {
        self.children(t).iter().map(|&s| self.height(s) + 1).max().unwrap_or(0)
    }

    fn has_cycle(&self) -> Option<usize> {
        for t in 0..self.len() {
            let mut cur = t;
            for _ in 0..=self.len() {
                match self.nodes[cur].parent {
                    None => break,
                    Some(p) if p >= self.len() => return Some(t),
                    Some(p) => cur = p,
                }
            }
            if self.nodes[cur].parent.is_some() {
                return Some(t);
            }
        }
        None
    }

    /// s ⪯ t in the tree order.
    pub fn below(&self, s: usize, t: usize) -> bool {
        let mut cur = Some(s);
        for _ in 0..=self.len() {
            match cur {
                None => return false,
                Some(c) if c == t => return true,
                Some(c) => cur = self.nodes[c].parent,
            }
        }
        false
    }

    /// The node whose remainder contains position `i`.
    pub fn node_of(&self, i: usize) -> Option<usize> {
        (0..self.len())
            .filter(|&t| contains(self.nodes[t].interval, (i, i)))
            .min_by_key(|&t| self.nodes[t].interval.1 - self.nodes[t].interval.0)
    }

    /// Graphviz source: one box per node, edges from parent to child.
    pub fn to_dot(&self, labels: Option<&[String]>) -> String {
        let mut s = String::from("digraph forest {\n  node [shape=box, fontname=\"monospace\"];\n");
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&t| (self.nodes[t].interval.0, std::cmp::Reverse(self.nodes[t].interval.1)));
        for &t in &order {
            let (lo, hi) = self.nodes[t].interval;
            let mut label = format!("[{lo},{hi}]");
            if let Some(ls) = labels {
                let r: Vec<&str> =
                    self.remainder(t).iter().filter_map(|&i| ls.get(i - 1).map(|x| x.as_str())).collect();
                label.push_str(&format!("\\nR = {}", r.join(" ")));
            }
            s.push_str(&format!("  n{t} [label=\"{label}\"];\n"));
        }
        for &t in &order {
            if let Some(p) = self.nodes[t].parent {
                s.push_str(&format!("  n{p} -> n{t};\n"));
            }
        }
        s.push_str("}\n");
        s
    }
}

impl fmt::Display for EvaluationForest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn rec(fr: &EvaluationForest, t: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let (lo, hi) = fr.interval(t);
            write!(f, "[{lo},{hi}]")?;
            let kids = fr.children(t);
            if !kids.is_empty() {
                write!(f, "{{")?;
                for (k, &c) in kids.iter().enumerate() {
                    if k > 0 {
                        write!(f, " ")?;
                    }
                    rec(fr, c, f)?;
                }
                write!(f, "}}")?;
            }
            Ok(())
        }
        for (k, &r) in self.roots().iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            rec(self, r, f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "item", rename_all = "snake_case")]
pub enum ForestViolation {
    /// the word does not evaluate into A
    WordNotInA,
    /// broken parent links
    Structure { node: usize },
    /// (i)
    Interval { node: usize },
    /// (ii)
    RootsPartition { position: usize, cover: usize },
    /// (iii)
    Comparability { s: usize, t: usize },
    /// (iv)
    Order { s: usize, t: usize },
    /// (v)
    StrictContainment { s: usize, t: usize },
    /// (vi)
    NotInA { node: usize, interval: Interval },
    /// (vii)
    RemainderNotMultipliable { node: usize, remainder: Vec<usize> },
    /// (viii)
    Decomposable { node: usize, left: Interval, right: Interval },
    /// (ix)
    Unsaturated { node: usize, j: Interval },
}

impl ForestViolation {
    pub fn item(&self) -> &'static str {
        match self {
            ForestViolation::WordNotInA | ForestViolation::Structure { .. } => "pre",
            ForestViolation::Interval { .. } => "i",
            ForestViolation::RootsPartition { .. } => "ii",
            ForestViolation::Comparability { .. } => "iii",
            ForestViolation::Order { .. } => "iv",
            ForestViolation::StrictContainment { .. } => "v",
            ForestViolation::NotInA { .. } => "vi",
            ForestViolation::RemainderNotMultipliable { .. } => "vii",
            ForestViolation::Decomposable { .. } => "viii",
            ForestViolation::Unsaturated { .. } => "ix",
        }
    }
}

impl fmt::Display for ForestViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) ", self.item())?;
        match self {
            ForestViolation::WordNotInA => write!(f, "word does not evaluate into A"),
            ForestViolation::Structure { node } => write!(f, "node {node}: parent links do not form a forest"),
            ForestViolation::Interval { node } => write!(f, "node {node}: interval empty or out of range"),
            ForestViolation::RootsPartition { position, cover } => {
                write!(f, "position {position} covered by {cover} root intervals")
            }
            ForestViolation::Comparability { s, t } => {
                write!(f, "nodes {s},{t}: intersection does not match comparability")
            }
            ForestViolation::Order { s, t } => write!(f, "nodes {s},{t}: containment does not match order"),
            ForestViolation::StrictContainment { s, t } => write!(f, "nodes {s} < {t}: containment not strict"),
            ForestViolation::NotInA { node, interval } => {
                write!(f, "node {node}: product over [{},{}] not in A", interval.0, interval.1)
            }
            ForestViolation::RemainderNotMultipliable { node, remainder } => {
                write!(f, "node {node}: remainder {remainder:?} not multipliable")
            }
            ForestViolation::Decomposable { node, left, right } => {
                write!(f, "node {node}: [{},{}] ⊔ [{},{}]", left.0, left.1, right.0, right.1)
            }
            ForestViolation::Unsaturated { node, j } => write!(f, "node {node}: J = [{},{}]", j.0, j.1),
        }
    }
}

/// `in_a(lo, hi)`: the A-index of the product over `[lo, hi]` (1-based), if it lies in A.
struct Evals {
    n: usize,
    table: Vec<Option<usize>>,
}

impl Evals {
    fn new(st: &AmalgamSetup, z: &[Letter]) -> Self {
        let n = z.len();
        let mut table = vec![None; (n + 1) * (n + 1)];
        for lo in 1..=n {
            let mut p = st.identity();
            for hi in lo..=n {
                st.push_letter(&mut p, z[hi - 1]);
                table[lo * (n + 1) + hi] = st.as_a(&p);
            }
        }
        Evals { n, table }
    }

    fn in_a(&self, (lo, hi): Interval) -> Option<usize> {
        self.table[lo * (self.n + 1) + hi]
    }

    fn ok(&self, iv: Interval) -> bool {
        self.in_a(iv).is_some()
    }

    fn split(&self, (lo, hi): Interval) -> Option<(Interval, Interval)> {
        (lo..hi).find(|&k| self.ok((lo, k)) && self.ok((k + 1, hi))).map(|k| ((lo, k), (k + 1, hi)))
    }

    /// Leftmost, then shortest, proper J ⊂ I compatible with `kids` and meeting the remainder.
    fn unsaturated(&self, iv: Interval, kids: &[Interval]) -> Option<Interval> {
        let (lo, hi) = iv;
        for a in lo..=hi {
            for b in a..=hi {
                let j = (a, b);
                if j == iv || !self.ok(j) {
                    continue;
                }
                if !kids.iter().all(|&c| contains(j, c) || !meets(j, c)) {
                    continue;
                }
                let covered = (a..=b).all(|i| kids.iter().any(|&c| contains(c, (i, i))));
                if !covered {
                    return Some(j);
                }
            }
        }
        None
    }
}

/// Leftmost split `I = J1 ⊔ J2` with both halves evaluating into A.
pub fn is_decomposable(st: &AmalgamSetup, z: &[Letter], iv: Interval) -> Option<(Interval, Interval)> {
    let (lo, hi) = iv;
    if lo == 0 || hi > z.len() || lo > hi {
        return None;
    }
    Evals::new(st, z).split(iv)
}

/// Items (i)–(vii).
pub fn check_forest(st: &AmalgamSetup, z: &[Letter], f: &EvaluationForest) -> Report<ForestViolation> {
    let mut rep = Report::new();
    if z.is_empty() || st.as_a(&st.evaluate(z)).is_none() {
        rep.push(ForestViolation::WordNotInA);
        return rep;
    }
    if let Some(node) = f.has_cycle() {
        rep.push(ForestViolation::Structure { node });
        return rep;
    }
    let n = z.len();
    if f.n != n {
        rep.push(ForestViolation::RootsPartition { position: n.min(f.n) + 1, cover: 0 });
    }
    for (t, node) in f.nodes.iter().enumerate() {
        let (lo, hi) = node.interval;
        if lo == 0 || lo > hi || hi > n {
            rep.push(ForestViolation::Interval { node: t });
        }
    }
    if !rep.is_ok() {
        return rep;
    }
    let ev = Evals::new(st, z);
    let roots = f.roots();
    for i in 1..=n {
        let cover = roots.iter().filter(|&&r| contains(f.interval(r), (i, i))).count();
        if cover != 1 {
            rep.push(ForestViolation::RootsPartition { position: i, cover });
            break;
        }
    }
    let m = f.len();
    for s in 0..m {
        for t in 0..m {
            if s == t {
                continue;
            }
            let (is, it) = (f.interval(s), f.interval(t));
            let comparable = f.below(s, t) || f.below(t, s);
            if s < t && meets(is, it) != comparable {
                rep.push(ForestViolation::Comparability { s, t });
            }
            if f.below(s, t) != contains(it, is) {
                rep.push(ForestViolation::Order { s, t });
            }
            if f.below(s, t) && !(it.0 < is.0 && is.1 < it.1) {
                rep.push(ForestViolation::StrictContainment { s, t });
            }
        }
    }
    for t in 0..m {
        let iv = f.interval(t);
        if !ev.ok(iv) {
            rep.push(ForestViolation::NotInA { node: t, interval: iv });
        }
        let r = f.remainder(t);
        let letters: Vec<Letter> = r.iter().map(|&i| z[i - 1]).collect();
        if !r.is_empty() && !st.is_multipliable_word(&letters) {
            rep.push(ForestViolation::RemainderNotMultipliable { node: t, remainder: r });
        }
    }
    rep
}

/// Items (viii)–(ix), after (i)–(vii); a failing forest check is returned as is.
pub fn check_maximal(st: &AmalgamSetup, z: &[Letter], f: &EvaluationForest) -> Report<ForestViolation> {
    let rep = check_forest(st, z, f);
    if !rep.is_ok() {
        return rep;
    }
    let ev = Evals::new(st, z);
    let mut rep = Report::new();
    for t in 0..f.len() {
        let iv = f.interval(t);
        if let Some((left, right)) = ev.split(iv) {
            rep.push(ForestViolation::Decomposable { node: t, left, right });
        }
        let kids: Vec<Interval> = f.children(t).iter().map(|&s| f.interval(s)).collect();
        if let Some(j) = ev.unsaturated(iv, &kids) {
            rep.push(ForestViolation::Unsaturated { node: t, j });
        }
    }
    rep
}

/// The recursive construction: split, contract a sub-evaluation, or take the multipliable base case.
pub fn build_maximal_forest(st: &AmalgamSetup, z: &[Letter]) -> Result<EvaluationForest> {
    if z.is_empty() || st.as_a(&st.evaluate(z)).is_none() {
        return invalid("the word does not evaluate into A");
    }
    let ivs = build_rec(st, z)?;
    EvaluationForest::from_intervals(z.len(), &ivs)
}

fn build_rec(st: &AmalgamSetup, z: &[Letter]) -> Result<Vec<Interval>> {
    let n = z.len();
    if n == 1 {
        return Ok(vec![(1, 1)]);
    }
    let ev = Evals::new(st, z);
    if let Some(((_, k), _)) = ev.split((1, n)) {
        let mut out = build_rec(st, &z[..k])?;
        out.extend(build_rec(st, &z[k..])?.into_iter().map(|(a, b)| (a + k, b + k)));
        return Ok(out);
    }
    let mut pick = None;
    'outer: for lo in 1..=n {
        for hi in lo + 1..=n {
            if (lo, hi) != (1, n) && ev.ok((lo, hi)) {
                pick = Some((lo, hi));
                break 'outer;
            }
        }
    }
    let Some((jm, jmax)) = pick else {
        if !st.is_multipliable_word(z) {
            return Err(Error::Invalid("indecomposable word without sub-evaluations is not multipliable".into()));
        }
        let mut out = vec![(1, n)];
        out.extend((1..=n).filter(|&i| st.in_a(z[i - 1])).map(|i| (i, i)));
        return Ok(out);
    };
    let len_j = jmax - jm + 1;
    let a = ev.in_a((jm, jmax)).unwrap();
    let mut z1: Vec<Letter> = z[..jm - 1].to_vec();
    z1.push(st.a_letter(a));
    z1.extend_from_slice(&z[jmax..]);
    let f1 = build_rec(st, &z1)?;
    let inflate = |(lo, hi): Interval| -> Interval {
        if hi < jm {
            (lo, hi)
        } else if lo <= jm {
            (lo, hi + len_j - 1)
        } else {
            (lo + len_j - 1, hi + len_j - 1)
        }
    };
    let inflated: Vec<Interval> = f1.iter().map(|&iv| inflate(iv)).collect();
    let t0 = f1
        .iter()
        .position(|&iv| iv == (jm, jm))
        .ok_or_else(|| Error::Invalid("contracted forest has no singleton node at the contracted letter".into()))?;
    let t1 = inflated
        .iter()
        .enumerate()
        .filter(|(_, &iv)| ev.split(iv).is_some())
        .max_by_key(|(_, &iv)| iv.1 - iv.0)
        .map_or(t0, |(t, _)| t);
    let i1 = inflated[t1];
    let f2 = build_rec(st, &z[i1.0 - 1..i1.1])?;
    let mut out: Vec<Interval> = inflated.into_iter().filter(|&iv| !contains(i1, iv)).collect();
    out.extend(f2.into_iter().map(|(lo, hi)| (lo + i1.0 - 1, hi + i1.0 - 1)));
    Ok(out)
}

type Trees = Rc<Vec<Vec<Interval>>>;

struct Enumerator<'a> {
    st: &'a AmalgamSetup,
    z: &'a [Letter],
    ev: Evals,
    limit: usize,
    memo: HashMap<Interval, Trees>,
}

impl Enumerator<'_> {
    fn candidate(&self, iv: Interval) -> bool {
        self.ev.ok(iv) && self.ev.split(iv).is_none()
    }

    fn check_size(&self, k: usize) -> Result<()> {
        if k > self.limit {
            return Err(Error::Bound(format!("more than {} forests", self.limit)));
        }
        Ok(())
    }

    fn child_sets(&self, lo: usize, hi: usize) -> Vec<Vec<Interval>> {
        fn rec(en: &Enumerator<'_>, p: usize, hi: usize, cur: &mut Vec<Interval>, out: &mut Vec<Vec<Interval>>) {
            if p >= hi {
                out.push(cur.clone());
                return;
            }
            rec(en, p + 1, hi, cur, out);
            for q in p..hi {
                if en.candidate((p, q)) {
                    cur.push((p, q));
                    rec(en, q + 1, hi, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(self, lo + 1, hi, &mut Vec::new(), &mut out);
        out
    }

    fn combine(&self, parts: &[Trees]) -> Result<Vec<Vec<Interval>>> {
        let mut acc: Vec<Vec<Interval>> = vec![Vec::new()];
        for p in parts {
            let mut next = Vec::with_capacity(acc.len() * p.len());
            for a in &acc {
                for b in p.iter() {
                    let mut v = a.clone();
                    v.extend_from_slice(b);
                    next.push(v);
                }
            }
            self.check_size(next.len())?;
            acc = next;
        }
        Ok(acc)
    }

    fn trees(&mut self, iv: Interval) -> Result<Trees> {
        if let Some(t) = self.memo.get(&iv) {
            return Ok(t.clone());
        }
        let (lo, hi) = iv;
        let mut out = Vec::new();
        for kids in self.child_sets(lo, hi) {
            let rem: Vec<Letter> =
                (lo..=hi).filter(|&i| !kids.iter().any(|&c| contains(c, (i, i)))).map(|i| self.z[i - 1]).collect();
            if !self.st.is_multipliable_word(&rem) || self.ev.unsaturated(iv, &kids).is_some() {
                continue;
            }
            let parts = kids.iter().map(|&c| self.trees(c)).collect::<Result<Vec<_>>>()?;
            for mut t in self.combine(&parts)? {
                t.push(iv);
                out.push(t);
            }
            self.check_size(out.len())?;
        }
        let rc = Rc::new(out);
        self.memo.insert(iv, rc.clone());
        Ok(rc)
    }

    fn forests(&mut self, p: usize) -> Result<Vec<Vec<Interval>>> {
        let n = self.z.len();
        if p > n {
            return Ok(vec![Vec::new()]);
        }
        let mut out = Vec::new();
        for q in p..=n {
            if !self.candidate((p, q)) {
                continue;
            }
            let here = self.trees((p, q))?;
            if here.is_empty() {
                continue;
            }
            let rest = Rc::new(self.forests(q + 1)?);
            out.extend(self.combine(&[here, rest])?);
            self.check_size(out.len())?;
        }
        Ok(out)
    }
}

/// Every maximal evaluation forest, by generating laminar families of indecomposable intervals.
pub fn enumerate_maximal_forests(st: &AmalgamSetup, z: &[Letter], limit: usize) -> Result<Vec<EvaluationForest>> {
    if z.is_empty() || st.as_a(&st.evaluate(z)).is_none() {
        return invalid("the word does not evaluate into A");
    }
    let mut en = Enumerator { st, z, ev: Evals::new(st, z), limit, memo: HashMap::new() };
    let mut all = en.forests(1)?;
    for f in &mut all {
        f.sort();
    }
    all.sort();
    all.into_iter().map(|ivs| EvaluationForest::from_intervals(z.len(), &ivs)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amalgam::{build_setup, G};
    use crate::group::{FiniteGroup, GroupMetric};
    use crate::rational::Rational;
    use std::sync::Arc;

    pub(crate) fn s6_word() -> (AmalgamSetup, Vec<Letter>) {
        let s6 = Arc::new(FiniteGroup::symmetric(6));
        let m = GroupMetric::discrete(s6.clone(), Rational::one());
        let st = build_setup(m.clone(), m, &[(0, 0)]).unwrap();
        let w: Vec<Letter> = ["(1 2)(3 4)(5 6)", "(1 2)", "(3 4)", "(3 4)", "(1 2)", "(1 2)(3 4)", "(5 6)"]
            .iter()
            .map(|c| Letter::new(G, s6.parse_elem(c).unwrap()))
            .collect();
        (st, w)
    }

    fn forest(n: usize, ivs: &[Interval]) -> EvaluationForest {
        EvaluationForest::from_intervals(n, ivs).unwrap()
    }

    #[test]
    fn s6_word_is_trivial_with_two_maximal_forests() {
        let (st, w) = s6_word();
        assert!(st.is_trivial(&w));
        let all = enumerate_maximal_forests(&st, &w, 100).unwrap();
        let sets: Vec<Vec<Interval>> = all.iter().map(|f| f.intervals()).collect();
        assert_eq!(sets, vec![vec![(1, 7), (2, 5), (3, 4)], vec![(1, 7), (4, 6)]]);
        let b = build_maximal_forest(&st, &w).unwrap();
        assert_eq!(b.intervals(), vec![(1, 7), (2, 5), (3, 4)]);
    }

    #[test]
    fn s6_checker_vectors() {
        let (st, w) = s6_word();
        let good = forest(7, &[(1, 7), (2, 5), (3, 4)]);
        assert!(check_forest(&st, &w, &good).is_ok());
        assert!(check_maximal(&st, &w, &good).is_ok());
        let bad = forest(7, &[(1, 7), (2, 3)]);
        let rep = check_forest(&st, &w, &bad);
        assert!(rep.violations.contains(&ForestViolation::NotInA { node: 1, interval: (2, 3) }));
        let loose = forest(7, &[(1, 7), (3, 4)]);
        assert!(check_forest(&st, &w, &loose).is_ok());
        let rep = check_maximal(&st, &w, &loose);
        assert_eq!(rep.violations, vec![ForestViolation::Unsaturated { node: 0, j: (2, 5) }]);
    }

    #[test]
    fn a_letters_base_cases() {
        let (st, _) = s6_word();
        let e = st.e_letter();
        let f = build_maximal_forest(&st, &[e]).unwrap();
        assert_eq!(f.intervals(), vec![(1, 1)]);
        let f = build_maximal_forest(&st, &[e, e]).unwrap();
        assert_eq!(f.intervals(), vec![(1, 1), (2, 2)]);
        assert_eq!(enumerate_maximal_forests(&st, &[e], 10).unwrap().len(), 1);
        assert_eq!(is_decomposable(&st, &[e, e], (1, 2)), Some(((1, 1), (2, 2))));
        assert_eq!(is_decomposable(&st, &[e, e], (1, 1)), None);
        let single = forest(2, &[(1, 2)]);
        let rep = check_maximal(&st, &[e, e], &single);
        assert!(rep.violations.iter().any(|v| v.item() == "viii"));
    }

    #[test]
    fn crossing_intervals_rejected() {
        assert!(EvaluationForest::from_intervals(5, &[(1, 3), (2, 4)]).is_err());
    }

    #[test]
    fn dot_output_mentions_every_node() {
        let f = forest(7, &[(1, 7), (2, 5), (3, 4)]);
        let dot = f.to_dot(None);
        assert!(dot.contains("[2,5]") && dot.contains("n0 -> n1"));
        assert_eq!(f.to_string(), "[1,7]{[2,5]{[3,4]}}");
    }
}
