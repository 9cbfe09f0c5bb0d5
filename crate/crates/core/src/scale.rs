//! Scales Γ(x, r) stored exactly as `max(c_x · r, s_x(r))` with `s_x` a right-continuous step function.

use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::group::{Elem, GroupMetric};
use crate::rational::Rational;
use crate::report::Report;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scale {
    factors: Vec<Rational>,
    thresholds: Vec<Rational>,
    steps: Vec<Vec<Rational>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleViolation {
    /// Γ(e, r) != r
    NotIdentityAtBase {
        r: Rational,
    },
    /// Γ(x, r) < r, possible when a factor is below 1
    BelowDiagonal {
        x: usize,
    },
    /// Γ(x, 0) != 0
    NonzeroAtZero {
        x: usize,
    },
    NotMonotone {
        x: usize,
        threshold: Rational,
    },
}

impl fmt::Display for ScaleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleViolation::NotIdentityAtBase { r } => write!(f, "Γ(e,{r}) != {r}"),
            ScaleViolation::BelowDiagonal { x } => write!(f, "Γ({x},r) < r for some r"),
            ScaleViolation::NonzeroAtZero { x } => write!(f, "Γ({x},0) != 0"),
            ScaleViolation::NotMonotone { x, threshold } => write!(f, "Γ({x},·) decreases at {threshold}"),
        }
    }
}

impl Scale {
    /// Γ(x, r) = r everywhere.
    pub fn identity(n: usize) -> Self {
        Scale::linear(vec![Rational::one(); n]).unwrap()
    }

    /// Γ(x, r) = c_x · r.
    pub fn linear(factors: Vec<Rational>) -> Result<Self> {
        let n = factors.len();
        Scale::new(factors, vec![Rational::zero()], vec![vec![Rational::zero()]; n])
    }

    /// `steps[x][k]` is the value of the step part on `[thresholds[k], thresholds[k+1])`.
    pub fn new(factors: Vec<Rational>, thresholds: Vec<Rational>, steps: Vec<Vec<Rational>>) -> Result<Self> {
        if thresholds.first() != Some(&Rational::zero()) {
            return invalid("scale thresholds must start at 0");
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("scale thresholds must be strictly increasing");
        }
        if steps.len() != factors.len() || steps.iter().any(|s| s.len() != thresholds.len()) {
            return invalid("scale table has the wrong shape");
        }
        Ok(Scale { factors, thresholds, steps })
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn thresholds(&self) -> &[Rational] {
        &self.thresholds
    }

    fn step_index(&self, r: Rational) -> usize {
        self.thresholds.partition_point(|&t| t <= r) - 1
    }

    pub fn eval(&self, x: usize, r: Rational) -> Rational {
        (self.factors[x] * r).max(self.steps[x][self.step_index(r)])
    }

    pub fn is_identity(&self) -> bool {
        (0..self.len()).all(|x| {
            self.factors[x] == Rational::one() && self.steps[x].iter().zip(&self.thresholds).all(|(&s, &t)| s <= t)
        })
    }

    pub fn validate(&self, e: usize) -> Report<ScaleViolation> {
        let mut rep = Report::new();
        for x in 0..self.len() {
            if self.factors[x] < Rational::one() {
                rep.push(ScaleViolation::BelowDiagonal { x });
            }
            if !self.steps[x][0].is_zero() {
                rep.push(ScaleViolation::NonzeroAtZero { x });
            }
            for k in 1..self.thresholds.len() {
                if self.steps[x][k] < self.steps[x][k - 1] {
                    rep.push(ScaleViolation::NotMonotone { x, threshold: self.thresholds[k] });
                }
            }
        }
        if e < self.len() {
            if self.factors[e] != Rational::one() {
                rep.push(ScaleViolation::NotIdentityAtBase { r: Rational::one() });
            }
            for (k, &t) in self.thresholds.iter().enumerate() {
                if self.steps[e][k] > t {
                    rep.push(ScaleViolation::NotIdentityAtBase { r: t });
                }
            }
        }
        rep
    }

    /// Returns some `r` with `self(x, r) > other(y, r)`, or `None` if `self(x,·) ≤ other(y,·)` everywhere.
    pub fn exceeds(&self, x: usize, other: &Scale, y: usize) -> Option<Rational> {
        let mut ts: Vec<Rational> = self.thresholds.iter().chain(&other.thresholds).copied().collect();
        ts.sort();
        ts.dedup();
        let (c1, c2) = (self.factors[x], other.factors[y]);
        for (k, &a) in ts.iter().enumerate() {
            let s1 = self.steps[x][self.step_index(a)];
            let s2 = other.steps[y][other.step_index(a)];
            if s1 > (c2 * a).max(s2) {
                return Some(a);
            }
            if c1 > c2 {
                // on [a, b) the linear part of the left side overtakes s2 past s2/c1
                let cross = s2 / c1;
                match ts.get(k + 1) {
                    None => return Some(a.max(cross) + Rational::one()),
                    Some(&b) => {
                        if c1 * b > s2 {
                            let r = if c1 * a > s2 { a } else { (cross + b) / Rational::from_int(2) };
                            return Some(r);
                        }
                    }
                }
            }
        }
        None
    }

    /// Scale on a disjoint union: points of `self` first, then `other` reindexed by `other_map`.
    pub(crate) fn glue(&self, other: &Scale, n: usize, self_map: &[usize], other_map: &[usize], e: usize) -> Scale {
        let mut ts: Vec<Rational> = self.thresholds.iter().chain(&other.thresholds).copied().collect();
        ts.sort();
        ts.dedup();
        let mut factors = vec![Rational::one(); n];
        let mut steps = vec![vec![Rational::zero(); ts.len()]; n];
        for (src, map) in [(self, self_map), (other, other_map)] {
            for (x, &to) in map.iter().enumerate() {
                if to == e {
                    continue;
                }
                factors[to] = src.factors[x];
                steps[to] = ts.iter().map(|&t| src.steps[x][src.step_index(t)]).collect();
            }
        }
        Scale { factors, thresholds: ts, steps }
    }
}

/// Γ(g, r) = max{r, max{‖g⁻¹hg‖ : ‖h‖ ≤ r}}, exact for finite groups.
pub fn canonical_scale(m: &GroupMetric) -> Scale {
    let g = m.group();
    let n = g.order();
    let norms: Vec<Rational> = (0..n).map(|x| m.norm(x)).collect();
    let mut ts = norms.clone();
    ts.push(Rational::zero());
    ts.sort();
    ts.dedup();
    let steps = (0..n)
        .map(|x: Elem| {
            ts.iter().map(|&t| (0..n).filter(|&h| norms[h] <= t).map(|h| norms[g.conj(x, h)]).max().unwrap()).collect()
        })
        .collect();
    Scale { factors: vec![Rational::one(); n], thresholds: ts, steps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{left_metric_from_chain, metric_from_chain, FiniteGroup, NormalChain};
    use std::sync::Arc;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn identity_and_linear() {
        let s = Scale::identity(3);
        assert_eq!(s.eval(1, q(3, 7)), q(3, 7));
        assert!(s.validate(0).is_ok());
        let d = Scale::linear(vec![q(1, 1), q(2, 1)]).unwrap();
        assert_eq!(d.eval(1, q(1, 2)), q(1, 1));
        assert!(d.validate(0).is_ok());
        let bad = Scale::linear(vec![q(2, 1), q(1, 2)]).unwrap();
        assert_eq!(bad.validate(0).len(), 2);
    }

    #[test]
    fn domination_witnesses() {
        let id = Scale::identity(2);
        let dbl = Scale::linear(vec![q(1, 1), q(2, 1)]).unwrap();
        assert_eq!(id.exceeds(1, &dbl, 1), None);
        let r = dbl.exceeds(1, &id, 1).unwrap();
        assert!(dbl.eval(1, r) > id.eval(1, r));
        // a step function that jumps to 1 at 1/2 stays below 2r
        let st = Scale::new(
            vec![q(1, 1), q(1, 1)],
            vec![q(0, 1), q(1, 2)],
            vec![vec![q(0, 1), q(0, 1)], vec![q(0, 1), q(1, 1)]],
        )
        .unwrap();
        assert_eq!(st.exceeds(1, &dbl, 1), None);
        let r = st.exceeds(1, &id, 1).unwrap();
        assert!(st.eval(1, r) > id.eval(1, r));
    }

    #[test]
    fn canonical_scale_of_biinvariant_metric_is_identity() {
        let s3 = Arc::new(FiniteGroup::symmetric(3));
        let a3 = s3.generated(&[s3.parse_elem("(1 2 3)").unwrap()]);
        let m = metric_from_chain(
            s3,
            &NormalChain { subgroups: vec![(0..6).collect(), a3, vec![0]], values: vec![q(1, 1), q(1, 2)] },
        )
        .unwrap();
        let sc = canonical_scale(&m);
        assert!(sc.is_identity());
        for x in 0..6 {
            for &t in sc.thresholds() {
                assert_eq!(sc.eval(x, t), t);
            }
        }
    }

    #[test]
    fn canonical_scale_of_left_metric_enumerates_the_ball() {
        let s3 = Arc::new(FiniteGroup::symmetric(3));
        let h = s3.generated(&[s3.parse_elem("(1 2)").unwrap()]);
        let m = left_metric_from_chain(
            s3.clone(),
            &NormalChain { subgroups: vec![(0..6).collect(), h, vec![0]], values: vec![q(1, 1), q(1, 2)] },
        )
        .unwrap();
        let sc = canonical_scale(&m);
        let t12 = s3.parse_elem("(1 2)").unwrap();
        let t13 = s3.parse_elem("(1 3)").unwrap();
        // ball of radius 1/2 is {e, (1 2)}; conjugating (1 2) by (1 3) gives (2 3), of norm 1
        assert_eq!(sc.eval(t12, q(1, 2)), q(1, 2));
        assert_eq!(sc.eval(t13, q(1, 2)), q(1, 1));
        assert_eq!(sc.eval(t13, q(1, 4)), q(1, 4));
        assert_eq!(sc.eval(0, q(1, 2)), q(1, 2));
        assert!(sc.validate(0).is_ok());
    }
}
