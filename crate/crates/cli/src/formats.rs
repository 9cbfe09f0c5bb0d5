//! JSON input formats and their conversion into library values.

use std::path::Path;
use std::sync::Arc;

use graev_core::amalgam::{build_multi, build_setup, AmalgamSetup, Letter};
use graev_core::group::{metric_from_chain, Elem, FiniteGroup, GroupMetric, NormalChain};
use graev_core::hnn::HLetter;
use graev_core::space::{add_formal_inverses, FiniteSpace, Mode, PointId, PointedSpace, SymmetricSpace};
use graev_core::{Error, Rational, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;

/// Reads a file, or takes the argument itself when it already looks like JSON.
pub fn read_json<T: DeserializeOwned>(arg: &Path) -> Result<T> {
    let s = arg.to_string_lossy();
    let text = if s.trim_start().starts_with(['[', '{', '"']) {
        s.into_owned()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Error::Parse(format!("{}: {e}", arg.display())))?
    };
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", arg.display())))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub points: Vec<String>,
    pub basepoint: String,
    pub mode: Mode,
    pub dist: Vec<Vec<Rational>>,
}

impl SpaceFile {
    pub fn space(&self) -> Result<FiniteSpace> {
        FiniteSpace::new(self.points.clone(), self.dist.clone(), self.mode)
    }

    pub fn basepoint(&self) -> Result<PointId> {
        self.points
            .iter()
            .position(|p| *p == self.basepoint)
            .ok_or_else(|| Error::Parse(format!("basepoint {:?} is not a point", self.basepoint)))
    }

    /// X̄ with names `x` and `x^-1`.
    pub fn symmetric(&self) -> Result<SymmetricSpace> {
        add_formal_inverses(&PointedSpace::new(self.space()?, self.basepoint()?)?)
    }
}

/// Letter names of X̄; the empty list is the identity.
pub fn free_word(s: &SymmetricSpace, names: &[String]) -> Result<Vec<PointId>> {
    names.iter().map(|n| s.index_of(n).ok_or_else(|| Error::Parse(format!("unknown letter {n:?}")))).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ElemRef {
    Index(usize),
    Name(String),
}

pub fn resolve(g: &FiniteGroup, r: &ElemRef) -> Result<Elem> {
    match r {
        ElemRef::Index(i) if *i < g.order() => Ok(*i),
        ElemRef::Index(i) => Err(Error::Parse(format!("element index {i} out of range"))),
        ElemRef::Name(s) => g.parse_elem(s),
    }
}

fn resolve_all(g: &FiniteGroup, rs: &[ElemRef]) -> Result<Vec<Elem>> {
    rs.iter().map(|r| resolve(g, r)).collect()
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum GroupFile {
    Permutations { generators: Vec<String>, degree: usize },
    Table { table: Vec<Vec<usize>>, labels: Option<Vec<String>> },
    Symmetric { symmetric: usize },
    Cyclic { cyclic: usize },
}

impl GroupFile {
    pub fn group(&self) -> Result<FiniteGroup> {
        match self {
            GroupFile::Permutations { generators, degree } => {
                let gens: Vec<&str> = generators.iter().map(String::as_str).collect();
                FiniteGroup::from_cycle_strings(*degree, &gens)
            }
            GroupFile::Table { table, labels } => {
                let g = FiniteGroup::from_table(table.clone())?;
                match labels {
                    Some(l) => g.with_labels(l.clone()),
                    None => Ok(g),
                }
            }
            GroupFile::Symmetric { symmetric } => Ok(FiniteGroup::symmetric(*symmetric)),
            GroupFile::Cyclic { cyclic } => Ok(FiniteGroup::cyclic(*cyclic, "c")),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub subgroups: Vec<Vec<ElemRef>>,
    pub values: Vec<Rational>,
}

/// A group with exactly one of: a normal chain, a full distance table, or a discrete value.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricFile {
    pub group: GroupFile,
    pub chain: Option<ChainFile>,
    pub table: Option<Vec<Vec<Rational>>>,
    pub discrete: Option<Rational>,
}

impl MetricFile {
    pub fn metric(&self) -> Result<GroupMetric> {
        let g = Arc::new(self.group.group()?);
        match (&self.chain, &self.table, &self.discrete) {
            (Some(c), None, None) => {
                let subgroups = c.subgroups.iter().map(|s| resolve_all(&g, s)).collect::<Result<Vec<_>>>()?;
                metric_from_chain(g, &NormalChain { subgroups, values: c.values.clone() })
            }
            (None, Some(t), None) => GroupMetric::from_table(g, t.clone()),
            (None, None, Some(v)) => Ok(GroupMetric::discrete(g, *v)),
            _ => Err(Error::Parse("a metric needs exactly one of \"chain\", \"table\", \"discrete\"".into())),
        }
    }
}

/// Either `G` and `H`, or a list of `factors`; `A` lists the common subgroup row by row, one entry per factor.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupFile {
    #[serde(rename = "G")]
    pub g: Option<MetricFile>,
    #[serde(rename = "H")]
    pub h: Option<MetricFile>,
    pub factors: Option<Vec<MetricFile>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<ElemRef>>,
}

impl SetupFile {
    pub fn setup(&self) -> Result<AmalgamSetup> {
        let metrics: Vec<GroupMetric> = match (&self.g, &self.h, &self.factors) {
            (Some(g), Some(h), None) => vec![g.metric()?, h.metric()?],
            (None, None, Some(fs)) if fs.len() >= 2 => fs.iter().map(MetricFile::metric).collect::<Result<_>>()?,
            _ => return Err(Error::Parse("a setup needs \"G\" and \"H\", or at least two \"factors\"".into())),
        };
        let mut rows = Vec::with_capacity(self.a.len());
        for row in &self.a {
            if row.len() != metrics.len() {
                return Err(Error::Parse("each row of \"A\" needs one element per factor".into()));
            }
            rows.push(row.iter().zip(&metrics).map(|(r, m)| resolve(m.group(), r)).collect::<Result<Vec<_>>>()?);
        }
        if metrics.len() == 2 {
            let pairs: Vec<(Elem, Elem)> = rows.iter().map(|r| (r[0], r[1])).collect();
            return build_setup(metrics[0].clone(), metrics[1].clone(), &pairs);
        }
        let ids: Vec<Elem> = metrics.iter().map(|m| m.group().identity()).collect();
        rows.sort_by_key(|r| *r != ids);
        let emb = (0..metrics.len()).map(|s| rows.iter().map(|r| r[s]).collect()).collect();
        build_multi(metrics, emb)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SideRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PLetter {
    pub side: SideRef,
    pub elem: ElemRef,
}

/// A word over the factors: `[{"side": "G", "elem": "(1 2)"}, ...]`; sides are `G`, `H`, `F2`, ... or indices.
pub fn product_word(st: &AmalgamSetup, w: &[PLetter]) -> Result<Vec<Letter>> {
    w.iter()
        .map(|l| {
            let side = match &l.side {
                SideRef::Index(i) => *i,
                SideRef::Name(s) => match s.as_str() {
                    "G" => 0,
                    "H" => 1,
                    _ => s
                        .strip_prefix('F')
                        .and_then(|k| k.parse().ok())
                        .ok_or_else(|| Error::Parse(format!("unknown side {s:?}")))?,
                },
            };
            if side >= st.factor_count() {
                return Err(Error::Parse(format!("side {side} out of range")));
            }
            let x = resolve(st.factor(side).group(), &l.elem)?;
            st.letter(side, x)
        })
        .collect()
}

/// `A` and `B` default to the domain and range of the pairs.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiFile {
    #[serde(rename = "A")]
    pub a: Option<Vec<ElemRef>>,
    #[serde(rename = "B")]
    pub b: Option<Vec<ElemRef>>,
    pub pairs: Vec<(ElemRef, ElemRef)>,
}

pub struct Phi {
    pub a: Vec<Elem>,
    pub b: Vec<Elem>,
    pub pairs: Vec<(Elem, Elem)>,
}

impl PhiFile {
    pub fn resolve(&self, g: &FiniteGroup) -> Result<Phi> {
        let pairs = self.pairs.iter().map(|(x, y)| Ok((resolve(g, x)?, resolve(g, y)?))).collect::<Result<Vec<_>>>()?;
        let a = match &self.a {
            Some(a) => resolve_all(g, a)?,
            None => pairs.iter().map(|p| p.0).collect(),
        };
        let b = match &self.b {
            Some(b) => resolve_all(g, b)?,
            None => pairs.iter().map(|p| p.1).collect(),
        };
        Ok(Phi { a, b, pairs })
    }
}

/// Tokens: group elements, `u`, `v`, `t` with optional `^k`.
pub fn hnn_word(g: &FiniteGroup, tokens: &[String]) -> Result<Vec<HLetter>> {
    let mut out = Vec::new();
    for tok in tokens {
        let (base, exp) = match tok.split_once('^') {
            Some((b, e)) if matches!(b, "u" | "v" | "t") => {
                (b, e.parse::<i64>().map_err(|_| Error::Parse(format!("bad exponent in {tok:?}")))?)
            }
            _ => (tok.as_str(), 1),
        };
        match base {
            "u" => out.push(HLetter::U(exp)),
            "v" => out.push(HLetter::V(exp)),
            "t" => {
                for _ in 0..exp.unsigned_abs() {
                    if exp > 0 {
                        out.extend([HLetter::V(-1), HLetter::U(1)]);
                    } else {
                        out.extend([HLetter::U(-1), HLetter::V(1)]);
                    }
                }
            }
            _ => out.push(HLetter::G(g.parse_elem(tok)?)),
        }
    }
    Ok(out)
}

/// Arc diagram of a match on a word: letters left to right, arcs above.
pub fn match_dot(labels: &[String], arcs: &[(usize, usize)]) -> String {
    let mut s = String::from("graph match {\n  rankdir=LR;\n  node [shape=plaintext, fontname=\"monospace\"];\n");
    for (i, l) in labels.iter().enumerate() {
        s.push_str(&format!("  p{} [label=\"{}\\n{}\"];\n", i + 1, l, i + 1));
    }
    for w in 1..labels.len() {
        s.push_str(&format!("  p{} -- p{} [style=invis];\n", w, w + 1));
    }
    for &(a, b) in arcs {
        s.push_str(&format!("  p{a}:n -- p{b}:n [constraint=false];\n"));
    }
    s.push_str("}\n");
    s
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    s.parse::<Rational>().map_err(|_| Error::Parse(format!("not a rational: {s:?}")))
}
