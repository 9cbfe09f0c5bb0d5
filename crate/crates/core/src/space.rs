//! Finite (ultra)metric spaces, basepoints, formal inverses and amalgams.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rational::Rational;
use crate::report::Report;

pub type PointId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Metric,
    Ultrametric,
}

impl Mode {
    /// `+` in metric mode, `max` in ultrametric mode.
    pub fn combine(self, a: Rational, b: Rational) -> Rational {
        match self {
            Mode::Metric => a + b,
            Mode::Ultrametric => a.max(b),
        }
    }

    pub fn combine_all<I: IntoIterator<Item = Rational>>(self, it: I) -> Rational {
        it.into_iter().fold(Rational::zero(), |acc, x| self.combine(acc, x))
    }
}

/// A finite point set with an exact distance table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSpace {
    names: Vec<String>,
    dist: Vec<Rational>,
    mode: Mode,
}

impl FiniteSpace {
    /// Builds a space from a square table. Axioms are not checked here, see [`validate_space`].
    pub fn new(names: Vec<String>, rows: Vec<Vec<Rational>>, mode: Mode) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return invalid("a space needs at least one point");
        }
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return invalid(format!("distance table must be {n}x{n}"));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name) {
                return invalid(format!("duplicate point name {name:?}"));
            }
        }
        Ok(FiniteSpace { names, dist: rows.into_iter().flatten().collect(), mode })
    }

    pub fn from_fn(names: Vec<String>, mode: Mode, f: impl Fn(usize, usize) -> Rational) -> Result<Self> {
        let n = names.len();
        let rows = (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
        FiniteSpace::new(names, rows, mode)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    #[inline]
    pub fn d(&self, p: PointId, q: PointId) -> Rational {
        self.dist[p * self.names.len() + q]
    }

    pub fn name(&self, p: PointId) -> &str {
        &self.names[p]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<PointId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn rows(&self) -> Vec<Vec<Rational>> {
        let n = self.len();
        (0..n).map(|i| (0..n).map(|j| self.d(i, j)).collect()).collect()
    }

    /// Sorted distinct distance values, including 0.
    pub fn distance_values(&self) -> Vec<Rational> {
        let mut v: Vec<Rational> = self.dist.clone();
        v.push(Rational::zero());
        v.sort();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum SpaceViolation {
    NonzeroDiagonal { p: PointId },
    NotPositive { p: PointId, q: PointId },
    Asymmetric { p: PointId, q: PointId },
    Triangle { p: PointId, q: PointId, r: PointId },
    UltraTriangle { p: PointId, q: PointId, r: PointId },
}

impl fmt::Display for SpaceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceViolation::NonzeroDiagonal { p } => write!(f, "d({p},{p}) != 0"),
            SpaceViolation::NotPositive { p, q } => write!(f, "d({p},{q}) <= 0 for distinct points"),
            SpaceViolation::Asymmetric { p, q } => write!(f, "d({p},{q}) != d({q},{p})"),
            SpaceViolation::Triangle { p, q, r } => write!(f, "d({p},{q}) > d({p},{r}) + d({r},{q})"),
            SpaceViolation::UltraTriangle { p, q, r } => {
                write!(f, "d({p},{q}) > max(d({p},{r}), d({r},{q}))")
            }
        }
    }
}

/// Lists every violated axiom with a witness.
pub fn validate_space(s: &FiniteSpace) -> Report<SpaceViolation> {
    let n = s.len();
    let mut rep = Report::new();
    for p in 0..n {
        if !s.d(p, p).is_zero() {
            rep.push(SpaceViolation::NonzeroDiagonal { p });
        }
        for q in 0..n {
            if p != q && s.d(p, q) <= Rational::zero() {
                rep.push(SpaceViolation::NotPositive { p, q });
            }
            if p < q && s.d(p, q) != s.d(q, p) {
                rep.push(SpaceViolation::Asymmetric { p, q });
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            let dpq = s.d(p, q);
            for r in 0..n {
                let bound = s.mode.combine(s.d(p, r), s.d(r, q));
                if dpq > bound {
                    rep.push(match s.mode {
                        Mode::Metric => SpaceViolation::Triangle { p, q, r },
                        Mode::Ultrametric => SpaceViolation::UltraTriangle { p, q, r },
                    });
                }
            }
        }
    }
    rep
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointedSpace {
    pub space: FiniteSpace,
    pub basepoint: PointId,
}

impl PointedSpace {
    pub fn new(space: FiniteSpace, basepoint: PointId) -> Result<Self> {
        if basepoint >= space.len() {
            return invalid("basepoint out of range");
        }
        Ok(PointedSpace { space, basepoint })
    }
}

/// A pointed space with an isometric involution fixing the basepoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetricSpace {
    pub space: FiniteSpace,
    pub basepoint: PointId,
    inv: Vec<PointId>,
}

impl SymmetricSpace {
    pub fn new(space: FiniteSpace, basepoint: PointId, inv: Vec<PointId>) -> Result<Self> {
        let n = space.len();
        if basepoint >= n || inv.len() != n || inv.iter().any(|&i| i >= n) {
            return invalid("involution table has the wrong shape");
        }
        if inv[basepoint] != basepoint {
            return invalid("the involution must fix the basepoint");
        }
        for x in 0..n {
            if inv[inv[x]] != x {
                return invalid(format!("inv(inv({x})) != {x}"));
            }
            for y in 0..n {
                if space.d(inv[x], inv[y]) != space.d(x, y) {
                    return invalid(format!("involution is not isometric at ({x},{y})"));
                }
            }
        }
        Ok(SymmetricSpace { space, basepoint, inv })
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn e(&self) -> PointId {
        self.basepoint
    }

    #[inline]
    pub fn inv(&self, x: PointId) -> PointId {
        self.inv[x]
    }

    #[inline]
    pub fn d(&self, x: PointId, y: PointId) -> Rational {
        self.space.d(x, y)
    }

    pub fn mode(&self) -> Mode {
        self.space.mode()
    }

    pub fn name(&self, x: PointId) -> &str {
        self.space.name(x)
    }

    pub fn index_of(&self, name: &str) -> Option<PointId> {
        self.space.index_of(name)
    }

    pub fn inv_table(&self) -> &[PointId] {
        &self.inv
    }
}

/// The amalgam of two spaces together with where each input point landed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Amalgam {
    pub space: FiniteSpace,
    pub left: Vec<PointId>,
    pub right: Vec<PointId>,
}

/// Glues `x` and `y` along the correspondence `common` of (x-point, y-point) pairs.
///
/// Cross distances are `min_a combine(d_x(p, a), d_y(a, q))`.
pub fn amalgam(x: &FiniteSpace, y: &FiniteSpace, common: &[(PointId, PointId)]) -> Result<Amalgam> {
    if x.mode() != y.mode() {
        return invalid("cannot amalgamate spaces of different modes");
    }
    if common.is_empty() {
        return invalid("amalgam needs a nonempty common part");
    }
    let mut in_x = vec![None; x.len()];
    let mut in_y = vec![None; y.len()];
    for &(a, b) in common {
        if a >= x.len() || b >= y.len() {
            return invalid("correspondence index out of range");
        }
        if in_x[a].is_some() || in_y[b].is_some() {
            return invalid("correspondence is not injective");
        }
        in_x[a] = Some(b);
        in_y[b] = Some(a);
    }
    for &(a1, b1) in common {
        for &(a2, b2) in common {
            if x.d(a1, a2) != y.d(b1, b2) {
                return invalid(format!(
                    "metrics disagree on the common part: d({},{}) = {} but d({},{}) = {}",
                    x.name(a1),
                    x.name(a2),
                    x.d(a1, a2),
                    y.name(b1),
                    y.name(b2),
                    y.d(b1, b2)
                ));
            }
        }
    }

    let mut names: Vec<String> = x.names().to_vec();
    let mut taken: HashSet<String> = names.iter().cloned().collect();
    let left: Vec<PointId> = (0..x.len()).collect();
    let mut right = vec![0; y.len()];
    for q in 0..y.len() {
        match in_y[q] {
            Some(a) => right[q] = a,
            None => {
                let mut name = y.name(q).to_string();
                while taken.contains(&name) {
                    name.push('\'');
                }
                taken.insert(name.clone());
                right[q] = names.len();
                names.push(name);
            }
        }
    }
    // owner[i] = (Some(x point), Some(y point)) for each result point
    let n = names.len();
    let mut from_x = vec![None; n];
    let mut from_y = vec![None; n];
    for p in 0..x.len() {
        from_x[p] = Some(p);
    }
    for q in 0..y.len() {
        from_y[right[q]] = Some(q);
    }
    let mode = x.mode();
    let space = FiniteSpace::from_fn(names, mode, |i, j| {
        if let (Some(p), Some(q)) = (from_x[i], from_x[j]) {
            return x.d(p, q);
        }
        if let (Some(p), Some(q)) = (from_y[i], from_y[j]) {
            return y.d(p, q);
        }
        let (p, q) = match (from_x[i], from_y[j]) {
            (Some(p), Some(q)) => (p, q),
            _ => (from_x[j].unwrap(), from_y[i].unwrap()),
        };
        common.iter().map(|&(a, b)| mode.combine(x.d(p, a), y.d(b, q))).min().unwrap()
    })?;
    Ok(Amalgam { space, left, right })
}

/// Builds X̄: the amalgam of X and a copy X⁻¹ over the basepoint.
pub fn add_formal_inverses(p: &PointedSpace) -> Result<SymmetricSpace> {
    let rep = validate_space(&p.space);
    if !rep.is_ok() {
        return invalid(format!("input space is not valid: {rep}"));
    }
    let s = &p.space;
    let e = p.basepoint;
    let inv_names: Vec<String> =
        (0..s.len()).map(|i| if i == e { s.name(i).to_string() } else { format!("{}^-1", s.name(i)) }).collect();
    let copy = FiniteSpace::new(inv_names, s.rows(), s.mode())?;
    let am = amalgam(s, &copy, &[(e, e)])?;
    let mut inv = vec![0; am.space.len()];
    for x in 0..s.len() {
        inv[am.left[x]] = am.right[x];
        inv[am.right[x]] = am.left[x];
    }
    SymmetricSpace::new(am.space, e, inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn one_point_space_is_valid() {
        let s = FiniteSpace::new(names(&["e"]), vec![vec![q(0, 1)]], Mode::Ultrametric).unwrap();
        assert!(validate_space(&s).is_ok());
        let bar = add_formal_inverses(&PointedSpace::new(s, 0).unwrap()).unwrap();
        assert_eq!(bar.len(), 1);
        assert_eq!(bar.inv(0), 0);
    }

    #[test]
    fn ultrametric_violation_has_witness() {
        let one = q(1, 1);
        let two = q(2, 1);
        let z = q(0, 1);
        let rows = vec![vec![z, one, two], vec![one, z, one], vec![two, one, z]];
        let s = FiniteSpace::new(names(&["a", "b", "c"]), rows.clone(), Mode::Ultrametric).unwrap();
        let rep = validate_space(&s);
        assert!(rep.violations.contains(&SpaceViolation::UltraTriangle { p: 0, q: 2, r: 1 }));
        // the same table is a fine metric
        let m = FiniteSpace::new(names(&["a", "b", "c"]), rows, Mode::Metric).unwrap();
        assert!(validate_space(&m).is_ok());
    }

    #[test]
    fn two_point_inverse() {
        let s = FiniteSpace::new(
            names(&["e", "x"]),
            vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]],
            Mode::Ultrametric,
        )
        .unwrap();
        let bar = add_formal_inverses(&PointedSpace::new(s, 0).unwrap()).unwrap();
        let x = bar.index_of("x").unwrap();
        let xi = bar.index_of("x^-1").unwrap();
        assert_eq!(bar.inv(x), xi);
        assert_eq!(bar.d(x, xi), q(1, 1));
    }

    #[test]
    fn amalgam_over_singleton() {
        let x = FiniteSpace::new(
            names(&["e", "x"]),
            vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]],
            Mode::Ultrametric,
        )
        .unwrap();
        let y = FiniteSpace::new(
            names(&["e", "y"]),
            vec![vec![q(0, 1), q(1, 2)], vec![q(1, 2), q(0, 1)]],
            Mode::Ultrametric,
        )
        .unwrap();
        let am = amalgam(&x, &y, &[(0, 0)]).unwrap();
        assert_eq!(am.space.d(am.left[1], am.right[1]), q(1, 1));
        assert!(validate_space(&am.space).is_ok());
    }

    #[test]
    fn amalgam_rejects_disagreement() {
        let x = FiniteSpace::new(
            names(&["a", "b"]),
            vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]],
            Mode::Ultrametric,
        )
        .unwrap();
        let y = FiniteSpace::new(
            names(&["a", "b"]),
            vec![vec![q(0, 1), q(1, 2)], vec![q(1, 2), q(0, 1)]],
            Mode::Ultrametric,
        )
        .unwrap();
        assert!(amalgam(&x, &y, &[(0, 0), (1, 1)]).is_err());
    }

    #[test]
    fn amalgam_with_itself_is_itself() {
        let x = FiniteSpace::new(
            names(&["a", "b", "c"]),
            vec![vec![q(0, 1), q(1, 2), q(1, 1)], vec![q(1, 2), q(0, 1), q(1, 1)], vec![q(1, 1), q(1, 1), q(0, 1)]],
            Mode::Ultrametric,
        )
        .unwrap();
        let am = amalgam(&x, &x, &[(0, 0), (1, 1), (2, 2)]).unwrap();
        assert_eq!(am.space, x);
    }
}
