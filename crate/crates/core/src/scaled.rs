//! Scaled spaces, the scaled match norm, unions of scaled spaces and the retract onto a factor.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::free::{enumerate_matches, reduce_word, ser_match, words_reducing_to, Match};
use crate::rational::Rational;
use crate::scale::Scale;
use crate::space::{amalgam, PointId, SymmetricSpace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledSpace {
    pub space: SymmetricSpace,
    pub scale: Scale,
}

impl ScaledSpace {
    pub fn new(space: SymmetricSpace, scale: Scale) -> Result<Self> {
        if scale.len() != space.len() {
            return invalid("scale and space have different sizes");
        }
        let rep = scale.validate(space.e());
        if !rep.is_ok() {
            return invalid(format!("invalid scale: {rep}"));
        }
        Ok(ScaledSpace { space, scale })
    }

    pub fn with_identity_scale(space: SymmetricSpace) -> Self {
        let n = space.len();
        ScaledSpace { space, scale: Scale::identity(n) }
    }

    #[inline]
    fn gamma(&self, x: PointId, r: Rational) -> Rational {
        self.scale.eval(x, r)
    }
}

/// ‖w‖_θ by the three-case recursion: single letter, outer split, enclosing pair.
pub fn scaled_match_norm(ss: &ScaledSpace, w: &[PointId], theta: &Match) -> Result<Rational> {
    if w.len() != theta.len() {
        return invalid("word and match lengths differ");
    }
    Ok(match_norm_rec(ss, w, theta))
}

fn match_norm_rec(ss: &ScaledSpace, w: &[PointId], theta: &Match) -> Rational {
    let s = &ss.space;
    let mode = s.mode();
    let n = w.len();
    let k = theta.partner(0);
    if n == 1 {
        return s.d(w[0], s.e());
    }
    if n == 2 && k == 1 {
        return s.d(w[0], s.inv(w[1]));
    }
    if k < n - 1 {
        let left = match_norm_rec(ss, &w[..=k], &theta.restrict(0, k + 1));
        let right = match_norm_rec(ss, &w[k + 1..], &theta.restrict(k + 1, n));
        return mode.combine(left, right);
    }
    let inner = match_norm_rec(ss, &w[1..n - 1], &theta.restrict(1, n - 1));
    let g = ss.gamma(s.inv(w[0]), inner).min(ss.gamma(w[n - 1], inner));
    mode.combine(s.d(w[0], s.inv(w[n - 1])), g)
}

/// Minimum of ‖w‖_θ over all matches θ on a fixed word, by interval DP.
///
/// Γ is monotone, so each subinterval can be minimized on its own.
pub fn scaled_word_norm(ss: &ScaledSpace, w: &[PointId]) -> (Rational, Match) {
    let s = &ss.space;
    let mode = s.mode();
    let n = w.len();
    assert!(n > 0);
    // enclosed[i][k]: θ(i) = k on the closed interval i..=k; best[i][j]: any θ on the half-open i..j
    let mut enclosed = vec![vec![Rational::zero(); n]; n];
    let mut best = vec![vec![Rational::zero(); n + 1]; n + 1];
    let mut choice = vec![vec![0usize; n + 1]; n + 1];
    for len in 1..=n {
        for i in 0..=n - len {
            let k = i + len - 1;
            enclosed[i][k] = if len == 1 {
                s.d(w[i], s.e())
            } else if len == 2 {
                s.d(w[i], s.inv(w[k]))
            } else {
                let u = best[i + 1][k];
                let g = ss.gamma(s.inv(w[i]), u).min(ss.gamma(w[k], u));
                mode.combine(s.d(w[i], s.inv(w[k])), g)
            };
            let j = i + len;
            let mut val: Option<Rational> = None;
            for k in (i + 1..j).chain(std::iter::once(i)) {
                let v = if k == j - 1 { enclosed[i][k] } else { mode.combine(enclosed[i][k], best[k + 1][j]) };
                if val.is_none_or(|b| v < b) {
                    val = Some(v);
                    choice[i][j] = k;
                }
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
        partner[i] = k;
        partner[k] = i;
        if k > i + 1 {
            stack.push((i + 1, k));
        }
        stack.push((k + 1, j));
    }
    (best[0][n], Match::new(partner).expect("DP builds non-crossing matches"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScaledNorm {
    pub value: Rational,
    pub word: Vec<PointId>,
    #[serde(serialize_with = "ser_match")]
    pub matching: Option<Match>,
    pub length_bound: usize,
    /// True when the value is known to be the true infimum (identity scale); otherwise an upper bound.
    pub exact: bool,
}

fn lengths(ss: &ScaledSpace, f: &[PointId], bound: usize) -> Result<(Vec<PointId>, std::ops::RangeInclusive<usize>)> {
    let target = reduce_word(&ss.space, f);
    let lo = target.len().max(1);
    if bound < lo {
        return Err(Error::Bound(format!("length bound {bound} is below the reduced length {}", target.len())));
    }
    Ok((target, lo..=bound))
}

/// Minimum of ‖w‖_θ over words w with ŵ = f and |w| ≤ `bound`, and all matches θ.
pub fn graev_norm_scaled(ss: &ScaledSpace, f: &[PointId], bound: usize) -> Result<ScaledNorm> {
    let (target, range) = lengths(ss, f, bound)?;
    let mut best: Option<(Rational, Vec<PointId>, Match)> = None;
    for len in range {
        for w in words_reducing_to(&ss.space, &target, len) {
            let (v, m) = scaled_word_norm(ss, &w);
            if best.as_ref().is_none_or(|(b, _, _)| v < *b) {
                best = Some((v, w, m));
            }
        }
    }
    let (value, word, m) = best.expect("the reduced word itself is a candidate");
    Ok(ScaledNorm { value, word, matching: Some(m), length_bound: bound, exact: ss.scale.is_identity() })
}

/// The same minimum, evaluating the recursion for every (w, θ) separately.
pub fn brute_force_scaled(ss: &ScaledSpace, f: &[PointId], bound: usize) -> Result<Rational> {
    let (target, range) = lengths(ss, f, bound)?;
    let mut best: Option<Rational> = None;
    for len in range {
        let matches: Vec<Match> = enumerate_matches(len).collect();
        for w in words_reducing_to(&ss.space, &target, len) {
            for t in &matches {
                let v = match_norm_rec(ss, &w, t);
                if best.is_none_or(|b| v < b) {
                    best = Some(v);
                }
            }
        }
    }
    Ok(best.unwrap())
}

/// X̄ ∪ Ȳ glued at the basepoint, with the union scale, and where each factor landed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnionSpace {
    pub space: ScaledSpace,
    pub x_map: Vec<PointId>,
    pub y_map: Vec<PointId>,
    x_of: Vec<Option<PointId>>,
}

pub fn union_scaled(x: &ScaledSpace, y: &ScaledSpace) -> Result<UnionSpace> {
    let am = amalgam(&x.space.space, &y.space.space, &[(x.space.e(), y.space.e())])?;
    let n = am.space.len();
    let e = am.left[x.space.e()];
    let mut inv = vec![0; n];
    for p in 0..x.space.len() {
        inv[am.left[p]] = am.left[x.space.inv(p)];
    }
    for p in 0..y.space.len() {
        inv[am.right[p]] = am.right[y.space.inv(p)];
    }
    let scale = x.scale.glue(&y.scale, n, &am.left, &am.right, e);
    let sym = SymmetricSpace::new(am.space, e, inv)?;
    let mut x_of = vec![None; n];
    for (p, &to) in am.left.iter().enumerate() {
        x_of[to] = Some(p);
    }
    Ok(UnionSpace { space: ScaledSpace::new(sym, scale)?, x_map: am.left, y_map: am.right, x_of })
}

impl UnionSpace {
    /// π_X letterwise: points of X̄ map to themselves, points of Ȳ to e.
    pub fn retract(&self, w: &[PointId]) -> Vec<PointId> {
        w.iter().map(|&p| self.x_of[p].unwrap_or(self.x_of[self.space.space.e()].unwrap())).collect()
    }

    /// Rewrites a word over X̄ in the union's indices.
    pub fn include_x(&self, w: &[PointId]) -> Vec<PointId> {
        w.iter().map(|&p| self.x_map[p]).collect()
    }

    pub fn include_y(&self, w: &[PointId]) -> Vec<PointId> {
        w.iter().map(|&p| self.y_map[p]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free::graev_norm_free;
    use crate::space::{add_formal_inverses, validate_space, FiniteSpace, Mode, PointedSpace};

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn two_point(mode: Mode, name: &str, r: Rational) -> SymmetricSpace {
        let s =
            FiniteSpace::new(vec!["e".into(), name.into()], vec![vec![q(0, 1), r], vec![r, q(0, 1)]], mode).unwrap();
        add_formal_inverses(&PointedSpace::new(s, 0).unwrap()).unwrap()
    }

    #[test]
    fn single_letter_is_distance_to_e() {
        let s = two_point(Mode::Ultrametric, "x", q(1, 2));
        let ss = ScaledSpace::new(s.clone(), Scale::linear(vec![q(1, 1), q(3, 1), q(3, 1)]).unwrap()).unwrap();
        let x = s.index_of("x").unwrap();
        let t = Match::new(vec![0]).unwrap();
        assert_eq!(scaled_match_norm(&ss, &[x], &t).unwrap(), q(1, 2));
        assert_eq!(graev_norm_scaled(&ss, &[x], 3).unwrap().value, q(1, 2));
    }

    #[test]
    fn enclosing_pair_with_doubling_scale() {
        let s = two_point(Mode::Metric, "x", q(1, 1));
        let ss = ScaledSpace::new(s.clone(), Scale::linear(vec![q(1, 1), q(2, 1), q(2, 1)]).unwrap()).unwrap();
        let x = s.index_of("x").unwrap();
        let xi = s.inv(x);
        // x (x) x⁻¹ with the outer pair: 0 + min{2·1, 2·1}
        let t = Match::from_arcs(3, &[(1, 3)]).unwrap();
        assert_eq!(scaled_match_norm(&ss, &[x, x, xi], &t).unwrap(), q(2, 1));
    }

    #[test]
    fn identity_scale_matches_plain_norm() {
        let s = two_point(Mode::Ultrametric, "x", q(1, 1));
        let ss = ScaledSpace::with_identity_scale(s.clone());
        let x = s.index_of("x").unwrap();
        let w = vec![x, x, s.inv(x), x];
        let r = graev_norm_scaled(&ss, &w, 4).unwrap();
        assert_eq!(r.value, graev_norm_free(&s, &w).value);
        assert!(r.exact);
    }

    #[test]
    fn bound_below_reduced_length_is_an_error() {
        let s = two_point(Mode::Ultrametric, "x", q(1, 1));
        let ss = ScaledSpace::with_identity_scale(s.clone());
        let x = s.index_of("x").unwrap();
        assert!(matches!(graev_norm_scaled(&ss, &[x, x], 1), Err(Error::Bound(_))));
    }

    #[test]
    fn union_distances_and_retract() {
        let x = ScaledSpace::with_identity_scale(two_point(Mode::Ultrametric, "x", q(1, 1)));
        let y = ScaledSpace::with_identity_scale(two_point(Mode::Ultrametric, "y", q(1, 2)));
        let u = union_scaled(&x, &y).unwrap();
        assert!(validate_space(&u.space.space.space).is_ok());
        let px = u.x_map[1];
        let py = u.y_map[1];
        assert_eq!(u.space.space.d(px, py), q(1, 1));
        let e = u.x_map[0];
        assert_eq!(u.retract(&[px, py, u.space.space.inv(py)]), vec![1, 0, 0]);
        assert_eq!(u.space.space.inv(px), u.x_map[x.space.inv(1)]);
        assert_eq!(u.space.space.e(), e);
    }
}
