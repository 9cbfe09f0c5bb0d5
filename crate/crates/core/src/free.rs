//! Words over X̄, matches, and the Graev (ultra)norm on the free group F(X).

use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::rational::Rational;
use crate::space::{PointId, SymmetricSpace};

/// A non-crossing involution on positions `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Match {
    partner: Vec<usize>,
}

impl Match {
    pub fn new(partner: Vec<usize>) -> Result<Self> {
        let n = partner.len();
        if n == 0 {
            return invalid("a match needs at least one position");
        }
        for i in 0..n {
            let j = partner[i];
            if j >= n || partner[j] != i {
                return invalid(format!("position {} is not matched symmetrically", i + 1));
            }
        }
        for i in 0..n {
            let j = partner[i];
            if j <= i {
                continue;
            }
            // every arc starting strictly inside (i, j) must end inside it
            for k in i + 1..j {
                if partner[k] < i || partner[k] > j {
                    return invalid(format!("arcs ({},{}) and ({},{}) cross", i + 1, j + 1, k + 1, partner[k] + 1));
                }
            }
        }
        Ok(Match { partner })
    }

    /// From 1-based arcs; unlisted positions are fixed.
    pub fn from_arcs(n: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        let mut partner: Vec<usize> = (0..n).collect();
        for &(a, b) in arcs {
            if a == 0 || b == 0 || a > n || b > n || a == b {
                return invalid(format!("bad arc ({a},{b})"));
            }
            if partner[a - 1] != a - 1 || partner[b - 1] != b - 1 {
                return invalid(format!("position used twice in arc ({a},{b})"));
            }
            partner[a - 1] = b - 1;
            partner[b - 1] = a - 1;
        }
        Match::new(partner)
    }

    pub fn len(&self) -> usize {
        self.partner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partner.is_empty()
    }

    #[inline]
    pub fn partner(&self, i: usize) -> usize {
        self.partner[i]
    }

    /// 1-based arcs `(i, θ(i))` with `i < θ(i)`, ordered by `i`.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        (0..self.len()).filter(|&i| self.partner[i] > i).map(|i| (i + 1, self.partner[i] + 1)).collect()
    }

    pub fn fixed_points(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.partner[i] == i).map(|i| i + 1).collect()
    }

    /// The restriction to positions `lo..hi`, which must be closed under θ.
    pub(crate) fn restrict(&self, lo: usize, hi: usize) -> Match {
        Match { partner: self.partner[lo..hi].iter().map(|&p| p - lo).collect() }
    }
}

impl fmt::Display for Match {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arcs: Vec<String> = self.arcs().iter().map(|(a, b)| format!("({a},{b})")).collect();
        write!(f, "{}", arcs.join(""))
    }
}

/// All non-crossing involutions on `n` positions. There are Motzkin-many of them.
pub fn enumerate_matches(n: usize) -> impl Iterator<Item = Match> {
    fn rec(lo: usize, hi: usize) -> Vec<Vec<(usize, usize)>> {
        if lo >= hi {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for rest in rec(lo + 1, hi) {
            let mut v = vec![(lo, lo)];
            v.extend(rest);
            out.push(v);
        }
        for k in lo + 1..hi {
            let inner = rec(lo + 1, k);
            let outer = rec(k + 1, hi);
            for a in &inner {
                for b in &outer {
                    let mut v = vec![(lo, k)];
                    v.extend(a.iter().copied());
                    v.extend(b.iter().copied());
                    out.push(v);
                }
            }
        }
        out
    }
    let all = rec(0, n);
    all.into_iter().map(move |pairs| {
        let mut partner = vec![0; n];
        for (a, b) in pairs {
            partner[a] = b;
            partner[b] = a;
        }
        Match { partner }
    })
}

/// w^θ: keep w(i) if θ(i) > i, e if θ(i) = i, w(θ(i))⁻¹ if θ(i) < i.
pub fn apply_match(s: &SymmetricSpace, w: &[PointId], theta: &Match) -> Result<Vec<PointId>> {
    if w.len() != theta.len() {
        return invalid("word and match lengths differ");
    }
    Ok((0..w.len())
        .map(|i| {
            let j = theta.partner(i);
            if j > i {
                w[i]
            } else if j == i {
                s.e()
            } else {
                s.inv(w[j])
            }
        })
        .collect())
}

/// Letterwise sum (metric mode) or max (ultrametric mode) of distances.
pub fn rho(s: &SymmetricSpace, u1: &[PointId], u2: &[PointId]) -> Result<Rational> {
    if u1.len() != u2.len() {
        return invalid("words of different lengths");
    }
    let mode = s.mode();
    Ok(mode.combine_all(u1.iter().zip(u2).map(|(&a, &b)| s.d(a, b))))
}

/// Free reduction: drop `e`, cancel `x x⁻¹`. The identity is the empty vector.
pub fn reduce_word(s: &SymmetricSpace, w: &[PointId]) -> Vec<PointId> {
    let mut out: Vec<PointId> = Vec::with_capacity(w.len());
    for &x in w {
        if x == s.e() {
            continue;
        }
        if out.last() == Some(&s.inv(x)) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}

pub fn inverse_word(s: &SymmetricSpace, w: &[PointId]) -> Vec<PointId> {
    w.iter().rev().map(|&x| s.inv(x)).collect()
}

/// A norm value with the reduced word and a minimizing match on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormWitness {
    pub value: Rational,
    pub word: Vec<PointId>,
    #[serde(serialize_with = "ser_match")]
    pub matching: Option<Match>,
}

pub(crate) fn ser_match<S: serde::Serializer>(m: &Option<Match>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match m {
        None => s.serialize_none(),
        Some(m) => m.arcs().serialize(s),
    }
}

/// Interval DP over the reduced form; witness ties prefer pairing the leftmost letter, then the shortest arc.
pub fn graev_norm_free(s: &SymmetricSpace, f: &[PointId]) -> NormWitness {
    let w = reduce_word(s, f);
    let n = w.len();
    if n == 0 {
        return NormWitness { value: Rational::zero(), word: w, matching: None };
    }
    let mode = s.mode();
    let e = s.e();
    // best[i][j] for the half-open interval i..j, choice[i][j] = partner of i (i itself when fixed)
    let mut best = vec![vec![Rational::zero(); n + 1]; n + 1];
    let mut choice = vec![vec![0usize; n + 1]; n + 1];
    for len in 1..=n {
        for i in 0..=n - len {
            let j = i + len;
            let mut val: Option<Rational> = None;
            for k in i + 1..j {
                let v = mode.combine(mode.combine(s.d(w[k], s.inv(w[i])), best[i + 1][k]), best[k + 1][j]);
                if val.is_none_or(|b| v < b) {
                    val = Some(v);
                    choice[i][j] = k;
                }
            }
            let fixed = mode.combine(s.d(w[i], e), best[i + 1][j]);
            if val.is_none_or(|b| fixed < b) {
                val = Some(fixed);
                choice[i][j] = i;
            }
            best[i][j] = val.unwrap();
        }
    }
    let mut partner: Vec<usize> = (0..n).collect();
    let mut stack = vec![(0, n)];
    while let Some((i, j)) = stack.pop() {
        if i >= j {
            continue;
        }
        let k = choice[i][j];
        if k == i {
            stack.push((i + 1, j));
        } else {
            partner[i] = k;
            partner[k] = i;
            stack.push((i + 1, k));
            stack.push((k + 1, j));
        }
    }
    NormWitness { value: best[0][n], word: w, matching: Some(Match { partner }) }
}

/// The defining minimum over every match on the reduced form, one match at a time.
pub fn brute_force_norm(s: &SymmetricSpace, f: &[PointId]) -> Rational {
    let w = reduce_word(s, f);
    if w.is_empty() {
        return Rational::zero();
    }
    enumerate_matches(w.len()).map(|t| rho(s, &w, &apply_match(s, &w, &t).unwrap()).unwrap()).min().unwrap()
}

/// δ(f1, f2) = ‖f1⁻¹ f2‖.
pub fn graev_dist_free(s: &SymmetricSpace, f1: &[PointId], f2: &[PointId]) -> Rational {
    let mut w = inverse_word(s, f1);
    w.extend_from_slice(f2);
    graev_norm_free(s, &w).value
}

/// Every word of exactly `len` letters whose free reduction equals the reduced word `target`.
pub fn words_reducing_to(s: &SymmetricSpace, target: &[PointId], len: usize) -> Vec<Vec<PointId>> {
    fn rec(
        s: &SymmetricSpace,
        target: &[PointId],
        len: usize,
        word: &mut Vec<PointId>,
        stack: &mut Vec<PointId>,
        out: &mut Vec<Vec<PointId>>,
    ) {
        let remaining = len - word.len();
        // letters still needed: the reduced length of stack⁻¹ · target
        let mut need = inverse_word(s, stack);
        need.extend_from_slice(target);
        if reduce_word(s, &need).len() > remaining {
            return;
        }
        if remaining == 0 {
            out.push(word.clone());
            return;
        }
        for x in 0..s.len() {
            let popped = if x == s.e() {
                None
            } else if stack.last() == Some(&s.inv(x)) {
                stack.pop()
            } else {
                stack.push(x);
                None
            };
            word.push(x);
            rec(s, target, len, word, stack, out);
            word.pop();
            if x != s.e() {
                match popped {
                    Some(p) => stack.push(p),
                    None => {
                        stack.pop();
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(s, target, len, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// The defining infimum of δ(f1, f2) restricted to pairs of words of length at most `max_len`.
pub fn bounded_pair_distance(s: &SymmetricSpace, f1: &[PointId], f2: &[PointId], max_len: usize) -> Option<Rational> {
    let a = reduce_word(s, f1);
    let b = reduce_word(s, f2);
    let mut best: Option<Rational> = None;
    for len in a.len().max(b.len()).max(1)..=max_len {
        let us = words_reducing_to(s, &a, len);
        let vs = words_reducing_to(s, &b, len);
        for u in &us {
            for v in &vs {
                let r = rho(s, u, v).unwrap();
                if best.is_none_or(|x| r < x) {
                    best = Some(r);
                }
            }
        }
    }
    best
}

/// All reduced words of length exactly `len` (no `e`, no adjacent `x x⁻¹`).
pub fn reduced_words(s: &SymmetricSpace, len: usize) -> Vec<Vec<PointId>> {
    let letters: Vec<PointId> = (0..s.len()).filter(|&x| x != s.e()).collect();
    let mut out: Vec<Vec<PointId>> = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * letters.len());
        for w in &out {
            for &x in &letters {
                if w.last() == Some(&s.inv(x)) {
                    continue;
                }
                let mut v = w.clone();
                v.push(x);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{add_formal_inverses, FiniteSpace, Mode, PointedSpace};

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    pub(crate) fn space(mode: Mode, names: &[&str], rows: Vec<Vec<Rational>>) -> SymmetricSpace {
        let s = FiniteSpace::new(names.iter().map(|s| s.to_string()).collect(), rows, mode).unwrap();
        add_formal_inverses(&PointedSpace::new(s, 0).unwrap()).unwrap()
    }

    fn xy_unit() -> SymmetricSpace {
        let (z, o) = (q(0, 1), q(1, 1));
        space(Mode::Ultrametric, &["e", "x", "y"], vec![vec![z, o, o], vec![o, z, o], vec![o, o, z]])
    }

    #[test]
    fn motzkin_counts() {
        let motzkin = [1usize, 1, 2, 4, 9, 21, 51, 127, 323, 835, 2188];
        for n in 0..=10 {
            assert_eq!(enumerate_matches(n).count(), motzkin[n], "n = {n}");
        }
    }

    #[test]
    fn matches_are_distinct_and_valid() {
        let all: Vec<Match> = enumerate_matches(7).collect();
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), all.len());
        for m in all {
            assert!(Match::new(m.partner.clone()).is_ok());
        }
    }

    #[test]
    fn crossing_rejected() {
        assert!(Match::from_arcs(4, &[(1, 3), (2, 4)]).is_err());
        assert!(Match::from_arcs(4, &[(1, 4), (2, 3)]).is_ok());
    }

    #[test]
    fn three_letter_norm() {
        let s = xy_unit();
        let x = s.index_of("x").unwrap();
        let y = s.index_of("y").unwrap();
        let w = vec![x, y, s.inv(x)];
        assert_eq!(graev_norm_free(&s, &w).value, q(1, 1));
        assert_eq!(brute_force_norm(&s, &w), q(1, 1));
        assert_eq!(graev_norm_free(&s, &[x, s.inv(x)]).value, q(0, 1));
        assert_eq!(graev_norm_free(&s, &[x]).value, q(1, 1));
    }

    #[test]
    fn reduction() {
        let s = xy_unit();
        let x = s.index_of("x").unwrap();
        let y = s.index_of("y").unwrap();
        assert!(reduce_word(&s, &[x, s.inv(x)]).is_empty());
        assert_eq!(reduce_word(&s, &[x, s.e(), y]), vec![x, y]);
        assert_eq!(reduce_word(&s, &[x, y, s.inv(y), s.inv(x), y]), vec![y]);
    }

    #[test]
    fn words_reducing_to_counts() {
        let s = xy_unit();
        let x = s.index_of("x").unwrap();
        // length-2 words reducing to x: (x e), (e x)
        assert_eq!(words_reducing_to(&s, &[x], 2).len(), 2);
        for w in words_reducing_to(&s, &[x], 3) {
            assert_eq!(reduce_word(&s, &w), vec![x]);
        }
    }

    #[test]
    fn metric_mode_sum() {
        let (z, o) = (q(0, 1), q(1, 1));
        let s = space(Mode::Metric, &["e", "x"], vec![vec![z, o], vec![o, z]]);
        let x = s.index_of("x").unwrap();
        // ‖x x‖ = 2 in metric mode: every match costs at least the sum
        assert_eq!(graev_norm_free(&s, &[x, x]).value, q(2, 1));
    }
}
