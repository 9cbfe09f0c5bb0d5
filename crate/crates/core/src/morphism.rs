//! Lipschitz morphisms from a scaled space into a group with an invariant ultrametric.

use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::group::{Elem, GroupMetric};
use crate::rational::Rational;
use crate::report::Report;
use crate::scale::{canonical_scale, Scale};
use crate::scaled::ScaledSpace;
use crate::space::PointId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism {
    pub source: ScaledSpace,
    pub target: GroupMetric,
    pub target_scale: Scale,
    pub map: Vec<Elem>,
}

impl Morphism {
    /// Uses the canonical scale of the target.
    pub fn new(source: ScaledSpace, target: GroupMetric, map: Vec<Elem>) -> Result<Self> {
        if map.len() != source.space.len() || map.iter().any(|&g| g >= target.group().order()) {
            return invalid("morphism table has the wrong shape");
        }
        let target_scale = canonical_scale(&target);
        Ok(Morphism { source, target, target_scale, map })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "item", rename_all = "snake_case")]
pub enum MorphismViolation {
    /// φ(e) ≠ e
    Basepoint,
    /// φ(x⁻¹) ≠ φ(x)⁻¹
    Inverse { x: PointId },
    /// d_G(φx, φy) > d(x, y)
    Expanding { x: PointId, y: PointId },
    /// Γ_G(φx, r) > Γ(x, r)
    Scale { x: PointId, r: Rational },
}

impl fmt::Display for MorphismViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MorphismViolation::Basepoint => write!(f, "φ(e) != e"),
            MorphismViolation::Inverse { x } => write!(f, "φ({x}^-1) != φ({x})^-1"),
            MorphismViolation::Expanding { x, y } => write!(f, "d_G(φ{x}, φ{y}) > d({x},{y})"),
            MorphismViolation::Scale { x, r } => write!(f, "Γ_G(φ{x}, {r}) > Γ({x}, {r})"),
        }
    }
}

pub fn check_morphism(phi: &Morphism) -> Report<MorphismViolation> {
    let s = &phi.source.space;
    let g = phi.target.group();
    let mut rep = Report::new();
    if phi.map[s.e()] != g.identity() {
        rep.push(MorphismViolation::Basepoint);
    }
    for x in 0..s.len() {
        if phi.map[s.inv(x)] != g.inv(phi.map[x]) {
            rep.push(MorphismViolation::Inverse { x });
        }
    }
    for x in 0..s.len() {
        for y in x + 1..s.len() {
            if phi.target.d(phi.map[x], phi.map[y]) > s.d(x, y) {
                rep.push(MorphismViolation::Expanding { x, y });
            }
        }
    }
    for x in 0..s.len() {
        if let Some(r) = phi.target_scale.exceeds(phi.map[x], &phi.source.scale, x) {
            rep.push(MorphismViolation::Scale { x, r });
        }
    }
    rep
}

/// φ(f) as the product of the letter images.
pub fn extend_morphism(phi: &Morphism, f: &[PointId]) -> Result<Elem> {
    let rep = check_morphism(phi);
    if !rep.is_ok() {
        return invalid(format!("not a Lipschitz morphism: {rep}"));
    }
    Ok(apply_morphism(phi, f))
}

/// The letterwise product, without re-checking the morphism conditions.
pub fn apply_morphism(phi: &Morphism, f: &[PointId]) -> Elem {
    phi.target.group().product(f.iter().map(|&x| phi.map[x]))
}
