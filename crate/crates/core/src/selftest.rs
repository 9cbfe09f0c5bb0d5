//! The acceptance suite: twelve finite-scale checks, each with an independent oracle.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::amalgam::{build_setup, AmalgamSetup, Letter, ProductElem, G, H};
use crate::forest::{
    build_maximal_forest, check_forest, check_maximal, enumerate_maximal_forests, EvaluationForest, ForestViolation,
};
use crate::free::{apply_match, enumerate_matches, graev_dist_free, graev_norm_free, reduced_words, Match};
use crate::group::{metric_from_chain, Elem, FiniteGroup, GroupMetric, NormalChain};
use crate::hnn::{build_hnn, HLetter, HnnSetup};
use crate::morphism::{apply_morphism, check_morphism, Morphism};
use crate::product::{
    bounded_pair_infimum, distance_to_a, product_dist, product_norm, product_norm_dp, product_norm_quotient,
};
use crate::rational::Rational;
use crate::scale::Scale;
use crate::scaled::{brute_force_scaled, graev_norm_scaled, union_scaled, ScaledSpace};
use crate::space::{add_formal_inverses, validate_space, FiniteSpace, Mode, PointId, PointedSpace, SymmetricSpace};

type Outcome = std::result::Result<String, String>;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub millis: u128,
}

pub const CRITERIA: [&str; 12] = [
    "match-norm DP equals brute force over all matches",
    "free Graev ultrametric axioms and extension",
    "w^θ example vector",
    "scaled norm consistency",
    "Lipschitz extension into S3",
    "amalgam ultrametric over S3 *_{A3} S3",
    "reduced pairs attain the unrestricted infimum",
    "builder forests are maximal",
    "two maximal forests on the S6 word",
    "evaluation forest checker vectors on reconstructed forests",
    "HNN stable letter and extension",
    "union of scaled spaces",
];

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn symmetric(names: &[&str], rows: Vec<Vec<Rational>>) -> SymmetricSpace {
    let s = FiniteSpace::new(names.iter().map(|s| s.to_string()).collect(), rows, Mode::Ultrametric).unwrap();
    assert!(validate_space(&s).is_ok());
    add_formal_inverses(&PointedSpace::new(s, 0).unwrap()).unwrap()
}

/// e, a, b, c.
pub fn four_point_space() -> SymmetricSpace {
    let (z, one, half, quarter) = (q(0, 1), q(1, 1), q(1, 2), q(1, 4));
    symmetric(
        &["e", "a", "b", "c"],
        vec![vec![z, one, half, one], vec![one, z, one, quarter], vec![half, one, z, one], vec![one, quarter, one, z]],
    )
}

/// e, x, y.
pub fn three_point_space() -> SymmetricSpace {
    let (z, one, half) = (q(0, 1), q(1, 1), q(1, 2));
    symmetric(&["e", "x", "y"], vec![vec![z, one, half], vec![one, z, one], vec![half, one, z]])
}

fn two_point_space(name: &str, r: Rational) -> SymmetricSpace {
    symmetric(&["e", name], vec![vec![q(0, 1), r], vec![r, q(0, 1)]])
}

/// S3 with the chain S3 ⊃ A3 ⊃ {e} and values `top > low`, with A3.
pub fn s3_chain(top: Rational, low: Rational) -> (GroupMetric, Vec<Elem>) {
    let g = Arc::new(FiniteGroup::symmetric(3));
    let a3 = g.generated(&[g.parse_elem("(1 2 3)").unwrap()]);
    let m = metric_from_chain(
        g,
        &NormalChain { subgroups: vec![(0..6).collect(), a3.clone(), vec![0]], values: vec![top, low] },
    )
    .unwrap();
    (m, a3)
}

/// S3 ∗_{A3} S3 with values 1 > 1/2 on both factors.
pub fn s3_amalgam() -> AmalgamSetup {
    let (m, a3) = s3_chain(q(1, 1), q(1, 2));
    build_setup(m.clone(), m, &a3.iter().map(|&a| (a, a)).collect::<Vec<_>>()).unwrap()
}

/// The S6 word f₁ g₁ g₂ g₂ g₁ g₃ f₂ over the trivial subgroup.
pub fn s6_word() -> (AmalgamSetup, Vec<Letter>) {
    let s6 = Arc::new(FiniteGroup::symmetric(6));
    let m = GroupMetric::discrete(s6.clone(), Rational::one());
    let st = build_setup(m.clone(), m, &[(0, 0)]).unwrap();
    let w = ["(1 2)(3 4)(5 6)", "(1 2)", "(3 4)", "(3 4)", "(1 2)", "(1 2)(3 4)", "(5 6)"]
        .iter()
        .map(|c| Letter::new(G, s6.parse_elem(c).unwrap()))
        .collect();
    (st, w)
}

fn c1() -> Outcome {
    let s = four_point_space();
    let letters: Vec<PointId> = (0..s.len()).collect();
    let mut values: Vec<Rational> =
        letters.iter().flat_map(|&a| letters.iter().map(move |&b| (a, b))).map(|(a, b)| s.d(a, b)).collect();
    values.sort();
    values.dedup();
    let n = s.len();
    let rank: Vec<u8> = (0..n * n).map(|ab| values.binary_search(&s.d(ab / n, ab % n)).unwrap() as u8).collect();
    let partners: Vec<Vec<Vec<usize>>> =
        (0..=8).map(|len| enumerate_matches(len).map(|m| (0..len).map(|i| m.partner(i)).collect()).collect()).collect();
    let e = s.e();
    let brute = |w: &[PointId]| -> Rational {
        if w.is_empty() {
            return Rational::zero();
        }
        let best = partners[w.len()]
            .iter()
            .map(|p| {
                (0..w.len())
                    .map(|i| {
                        let j = p[i];
                        if j == i {
                            rank[w[i] * n + e]
                        } else if j < i {
                            rank[w[i] * n + s.inv(w[j])]
                        } else {
                            0
                        }
                    })
                    .max()
                    .unwrap()
            })
            .min()
            .unwrap();
        values[best as usize]
    };
    let mut total = 0usize;
    for len in 0..=8 {
        let words = reduced_words(&s, len);
        total += words.len();
        if let Some(w) = words.par_iter().find_any(|w| graev_norm_free(&s, w).value != brute(w)) {
            return Err(format!("mismatch on a word of length {len}: {w:?}"));
        }
    }
    Ok(format!("{total} reduced words of length ≤ 8"))
}

fn c2() -> Outcome {
    let s = three_point_space();
    let words: Vec<Vec<PointId>> = (0..=4).flat_map(|l| reduced_words(&s, l)).collect();
    let k = words.len();
    let dist: Vec<Vec<Rational>> =
        words.par_iter().map(|u| words.iter().map(|v| graev_dist_free(&s, u, v)).collect()).collect();
    for i in 0..k {
        ensure(dist[i][i].is_zero(), || format!("δ(f,f) ≠ 0 at {:?}", words[i]))?;
        for j in 0..k {
            ensure(dist[i][j] == dist[j][i], || "asymmetric".into())?;
            ensure(i == j || !dist[i][j].is_zero(), || {
                format!("δ = 0 off the diagonal at {:?} {:?}", words[i], words[j])
            })?;
        }
    }
    let bad =
        (0..k).into_par_iter().find_any(|&i| (0..k).any(|j| (0..k).any(|l| dist[i][l] > dist[i][j].max(dist[j][l]))));
    ensure(bad.is_none(), || format!("ultrametric inequality fails at {:?}", bad.map(|i| &words[i])))?;
    let letters: Vec<PointId> = (0..s.len()).filter(|&x| x != s.e()).collect();
    let inv = (0..k).into_par_iter().find_any(|&i| {
        (0..k).any(|j| {
            letters.iter().any(|&x| {
                let left = |w: &[PointId]| [&[x][..], w].concat();
                let right = |w: &[PointId]| [w, &[x][..]].concat();
                graev_dist_free(&s, &left(&words[i]), &left(&words[j])) != dist[i][j]
                    || graev_dist_free(&s, &right(&words[i]), &right(&words[j])) != dist[i][j]
            })
        })
    });
    ensure(inv.is_none(), || "translation changes a distance".into())?;
    let word = |x: PointId| if x == s.e() { vec![] } else { vec![x] };
    for x in 0..s.len() {
        for y in 0..s.len() {
            ensure(graev_dist_free(&s, &word(x), &word(y)) == s.d(x, y), || {
                format!("δ({}, {}) ≠ d", s.name(x), s.name(y))
            })?;
        }
    }
    Ok(format!("{k} elements, {} triples, {} translations", k * k * k, k * k * 2 * letters.len()))
}

fn c3() -> Outcome {
    let names: Vec<String> = std::iter::once("e".to_string()).chain((1..=9).map(|i| format!("x{i}"))).collect();
    let space = FiniteSpace::from_fn(names, Mode::Ultrametric, |i, j| if i == j { q(0, 1) } else { q(1, 1) }).unwrap();
    let s = add_formal_inverses(&PointedSpace::new(space, 0).unwrap()).unwrap();
    let w: Vec<PointId> = (1..=9).map(|i| s.index_of(&format!("x{i}")).unwrap()).collect();
    let theta = Match::from_arcs(9, &[(1, 9), (2, 3), (4, 8), (5, 6)]).map_err(|e| e.to_string())?;
    let got: Vec<&str> = apply_match(&s, &w, &theta).unwrap().iter().map(|&p| s.name(p)).collect();
    let want = ["x1", "x2", "x2^-1", "x4", "x5", "x5^-1", "e", "x4^-1", "x1^-1"];
    ensure(got == want, || format!("got {}", got.join(" ")))?;
    Ok(got.join(" "))
}

fn all_words(s: &SymmetricSpace, max_len: usize) -> Vec<Vec<PointId>> {
    let mut out = vec![vec![]];
    let mut layer: Vec<Vec<PointId>> = vec![vec![]];
    for _ in 0..max_len {
        layer = layer.iter().flat_map(|w| (0..s.len()).map(move |x| [&w[..], &[x]].concat())).collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn c4() -> Outcome {
    let s = three_point_space();
    let plain = ScaledSpace::with_identity_scale(s.clone());
    let words = all_words(&s, 6);
    let bad = words.par_iter().find_any(|w| {
        let bound = crate::free::reduce_word(&s, w).len().max(1);
        graev_norm_scaled(&plain, w, bound).unwrap().value != graev_norm_free(&s, w).value
    });
    ensure(bad.is_none(), || format!("identity scale differs on {bad:?}"))?;
    let factors = (0..s.len()).map(|x| if x == s.e() { q(1, 1) } else { q(2, 1) }).collect();
    let scaled = ScaledSpace::new(s.clone(), Scale::linear(factors).unwrap()).unwrap();
    let short: Vec<Vec<PointId>> = (0..=3).flat_map(|l| reduced_words(&s, l)).collect();
    let mut checked = 0;
    for f in &short {
        for bound in f.len().max(1)..=f.len().max(1) + 2 {
            let dp = graev_norm_scaled(&scaled, f, bound).unwrap().value;
            let bf = brute_force_scaled(&scaled, f, bound).unwrap();
            ensure(dp == bf, || format!("scaled DP {dp} ≠ brute force {bf} on {f:?} at bound {bound}"))?;
            checked += 1;
        }
    }
    Ok(format!("{} words with the identity scale, {checked} (word, bound) cases with factor 2", words.len()))
}

fn c5() -> Outcome {
    let (m, _) = s3_chain(q(1, 1), q(1, 2));
    let g = m.group().clone();
    let (z, one, half) = (q(0, 1), q(1, 1), q(1, 2));
    let s = symmetric(&["e", "a", "b"], vec![vec![z, half, one], vec![half, z, one], vec![one, one, z]]);
    let mut map = vec![g.identity(); s.len()];
    for (name, perm) in [("a", "(1 2 3)"), ("b", "(1 2)")] {
        let x = s.index_of(name).unwrap();
        let p = g.parse_elem(perm).unwrap();
        map[x] = p;
        map[s.inv(x)] = g.inv(p);
    }
    let phi = Morphism::new(ScaledSpace::with_identity_scale(s.clone()), m.clone(), map).map_err(|e| e.to_string())?;
    let rep = check_morphism(&phi);
    ensure(rep.is_ok(), || format!("not Lipschitz: {rep}"))?;
    let words = all_words(&s, 5);
    let bad = words.par_iter().find_any(|w| m.norm(apply_morphism(&phi, w)) > graev_norm_free(&s, w).value);
    ensure(bad.is_none(), || format!("‖φ(f)‖ > ‖f‖ at {bad:?}"))?;
    Ok(format!("{} words", words.len()))
}

fn c6() -> Outcome {
    let st = s3_amalgam();
    let elems = st.elements_up_to(2);
    let k = elems.len();
    let mut norms = HashMap::new();
    for f in &elems {
        let a = product_norm(&st, f);
        let b = product_norm_dp(&st, f);
        let c = product_norm_quotient(&st, f).map_err(|e| e.to_string())?;
        ensure(a.value == b && b == c, || format!("{}: search {}, dp {b}, quotient {c}", st.show(f), a.value))?;
        ensure(a.pair.is_valid(&st), || format!("invalid witness for {}", st.show(f)))?;
        if *f != st.identity() {
            let lb = st.alpha0(f).iter().map(|&x| distance_to_a(&st, x)).min().unwrap();
            ensure(a.value > Rational::zero() && a.value >= lb, || format!("positivity fails at {}", st.show(f)))?;
        }
        norms.insert(f.clone(), a.value);
    }
    let d = |x: &ProductElem, y: &ProductElem| product_dist(&st, x, y).unwrap();
    let dist: Vec<Vec<Rational>> = elems.iter().map(|x| elems.iter().map(|y| d(x, y)).collect()).collect();
    for i in 0..k {
        for j in 0..k {
            ensure(dist[i][j] == dist[j][i] && (i == j) == dist[i][j].is_zero(), || "not a metric".into())?;
            for l in 0..k {
                ensure(dist[i][l] <= dist[i][j].max(dist[j][l]), || {
                    format!(
                        "ultrametric inequality fails at {} {} {}",
                        st.show(&elems[i]),
                        st.show(&elems[j]),
                        st.show(&elems[l])
                    )
                })?;
            }
        }
    }
    let letters: Vec<ProductElem> = st.alphabet().iter().map(|&x| st.evaluate(&[x])).collect();
    let mut translations = 0;
    for x in &letters {
        for i in 0..k {
            for j in 0..k {
                let l = (st.multiply(x, &elems[i]).unwrap(), st.multiply(x, &elems[j]).unwrap());
                let r = (st.multiply(&elems[i], x).unwrap(), st.multiply(&elems[j], x).unwrap());
                ensure(d(&l.0, &l.1) == dist[i][j] && d(&r.0, &r.1) == dist[i][j], || {
                    format!("translation by {} changes δ({}, {})", st.show(x), st.show(&elems[i]), st.show(&elems[j]))
                })?;
                translations += 2;
            }
        }
    }
    for &x in st.alphabet() {
        for &y in st.alphabet() {
            ensure(d(&st.evaluate(&[x]), &st.evaluate(&[y])) == st.dist_union(x, y), || {
                format!("δ({}, {}) ≠ d", st.letter_label(x), st.letter_label(y))
            })?;
            let f = st.evaluate(&[x, y]);
            let v = product_norm(&st, &f).value;
            ensure(product_norm_dp(&st, &f) == v, || format!("dp disagrees at {}", st.show(&f)))?;
        }
    }
    Ok(format!("{k} elements, {} triples, {translations} translations", k * k * k))
}

fn c7() -> Outcome {
    let st = s3_amalgam();
    let elems = st.elements_up_to(2);
    for f in &elems {
        let l = f.reduced_length();
        let unrestricted = bounded_pair_infimum(&st, f, l + 2);
        let reduced = product_norm(&st, f).value;
        ensure(unrestricted == Some(reduced), || format!("{}: {unrestricted:?} vs {reduced}", st.show(f)))?;
    }
    Ok(format!("{} elements", elems.len()))
}

/// Words of length 1..=max_len over the canonical letters whose product lies in A.
pub fn words_into_a(st: &AmalgamSetup, max_len: usize) -> Vec<Vec<Letter>> {
    fn rec(st: &AmalgamSetup, len: usize, prefix: &ProductElem, w: &mut Vec<Letter>, out: &mut Vec<Vec<Letter>>) {
        let rest = len - w.len();
        if rest == 0 {
            if prefix.tail.is_empty() {
                out.push(w.clone());
            }
            return;
        }
        for &x in st.alphabet() {
            let mut p = prefix.clone();
            st.push_letter(&mut p, x);
            if p.tail.len() > rest - 1 {
                continue;
            }
            w.push(x);
            rec(st, len, &p, w, out);
            w.pop();
        }
    }
    let mut out = Vec::new();
    for len in 1..=max_len {
        rec(st, len, &st.identity(), &mut Vec::new(), &mut out);
    }
    out
}

fn c8() -> Outcome {
    let st = s3_amalgam();
    let words = words_into_a(&st, 6);
    let bad = words.par_iter().find_any(|w| match build_maximal_forest(&st, w) {
        Ok(f) => !check_forest(&st, w, &f).is_ok() || !check_maximal(&st, w, &f).is_ok(),
        Err(_) => true,
    });
    ensure(bad.is_none(), || format!("failure on {}", st.word_label(bad.unwrap())))?;
    Ok(format!("{} words with product in A", words.len()))
}

fn c9() -> Outcome {
    let (st, w) = s6_word();
    let all = enumerate_maximal_forests(&st, &w, 1000).map_err(|e| e.to_string())?;
    ensure(all.len() == 2, || format!("{} maximal forests", all.len()))?;
    let b = build_maximal_forest(&st, &w).map_err(|e| e.to_string())?;
    ensure(all.contains(&b), || format!("builder output {b} is not among them"))?;
    let shown: Vec<String> = all.iter().map(|f| f.to_string()).collect();
    Ok(format!("{}; builder gives {b}", shown.join(" and ")))
}

/// A realization of the twenty-letter word with the seven displayed relations in S4 ∗_A S4,
/// A = ⟨(1 2)(3 4)⟩, together with the three forests.
pub struct ForestExample {
    pub setup: AmalgamSetup,
    pub word: Vec<Letter>,
    pub f1: EvaluationForest,
    pub f2: EvaluationForest,
    pub f3: EvaluationForest,
    pub seed: u64,
}

const F1: [(usize, usize); 7] = [(1, 13), (4, 12), (6, 7), (9, 11), (14, 20), (15, 16), (18, 19)];
const F2: [(usize, usize); 6] = [(1, 20), (4, 12), (6, 7), (9, 11), (15, 16), (18, 19)];

fn realize(st: &AmalgamSetup, g: &FiniteGroup, a: &[Elem], rng: &mut ChaCha8Rng) -> Option<Vec<Letter>> {
    let outside: Vec<Elem> = (0..g.order()).filter(|x| !a.contains(x)).collect();
    let pick = |rng: &mut ChaCha8Rng| outside[rng.gen_range(0..outside.len())];
    let pick_a = |rng: &mut ChaCha8Rng| a[rng.gen_range(0..a.len())];
    // the last letter of each relation is solved for; it must stay outside A
    let close = |prefix: Elem, target: Elem| {
        let x = g.mul(g.inv(prefix), target);
        (!a.contains(&x)).then_some(x)
    };
    let ai: Vec<Elem> = (0..7).map(|_| pick_a(rng)).collect();
    let (a1, a2, a3, a4, a5, a6, a7) = (ai[0], ai[1], ai[2], ai[3], ai[4], ai[5], ai[6]);
    let b = *a.iter().find(|&&x| x != g.identity()).unwrap();
    let g3 = pick(rng);
    let g4 = close(g3, a1)?;
    let (g5, g6) = (pick(rng), pick(rng));
    let g7 = close(g.mul(g5, g6), a2)?;
    let h5 = pick(rng);
    let h6 = close(h5, a3)?;
    let h7 = pick(rng);
    let h8 = close(h7, a4)?;
    let (h1, h2, h3) = (pick(rng), pick(rng), pick(rng));
    let h4 = close(g.product([h1, h2, a1, h3, a2]), a5)?;
    let (g1, g2) = (pick(rng), pick(rng));
    let g8 = close(g.product([g1, b, g2, a5]), a7)?;
    let (g9, g10) = (pick(rng), pick(rng));
    let g11 = close(g.product([g9, a3, g10, a4]), a6)?;
    let sides = [G, G, G, H, H, G, G, H, G, G, G, H, G, G, H, H, G, H, H, G];
    let elems = [g1, b, g2, h1, h2, g3, g4, h3, g5, g6, g7, h4, g8, g9, h5, h6, g10, h7, h8, g11];
    Some(sides.iter().zip(elems).map(|(&s, x)| st.canonical(Letter::new(s, x))).collect())
}

/// The expected checker outcomes: all three are evaluation forests, F1 fails only (ix) at J = [2,2]
/// under [1,13], F2 fails (viii) at [1,13] ⊔ [14,20], and F3 is maximal.
pub fn verify_forest_example(ex: &ForestExample) -> std::result::Result<(), String> {
    let (st, w) = (&ex.setup, &ex.word);
    for (name, f) in [("F1", &ex.f1), ("F2", &ex.f2), ("F3", &ex.f3)] {
        let rep = check_forest(st, w, f);
        ensure(rep.is_ok(), || format!("{name} is not an evaluation forest: {rep}"))?;
    }
    let r1 = check_maximal(st, w, &ex.f1);
    let ix: Vec<_> = r1
        .iter()
        .filter_map(|v| match v {
            ForestViolation::Unsaturated { node, j } => Some((ex.f1.interval(*node), *j)),
            _ => None,
        })
        .collect();
    ensure(r1.len() == 1 && ix == vec![((1, 13), (2, 2))], || format!("F1 report: {r1}"))?;
    let r2 = check_maximal(st, w, &ex.f2);
    let viii: Vec<_> = r2
        .iter()
        .filter_map(|v| match v {
            ForestViolation::Decomposable { node, left, right } => Some((ex.f2.interval(*node), *left, *right)),
            _ => None,
        })
        .collect();
    ensure(viii == vec![((1, 20), (1, 13), (14, 20))], || format!("F2 report: {r2}"))?;
    let r3 = check_maximal(st, w, &ex.f3);
    ensure(r3.is_ok(), || format!("F3 report: {r3}"))
}

/// Seeded search for a realization in which the three forests behave as displayed.
pub fn forest_example() -> Option<ForestExample> {
    let s4 = Arc::new(FiniteGroup::symmetric(4));
    let z = s4.parse_elem("(1 2)(3 4)").unwrap();
    let a = vec![s4.identity(), z];
    let m = GroupMetric::discrete(s4.clone(), Rational::one());
    let st = build_setup(m.clone(), m, &[(a[0], a[0]), (z, z)]).unwrap();
    let f1 = EvaluationForest::from_intervals(20, &F1).unwrap();
    let f2 = EvaluationForest::from_intervals(20, &F2).unwrap();
    let mut ivs3 = F1.to_vec();
    ivs3.push((2, 2));
    let f3 = EvaluationForest::from_intervals(20, &ivs3).unwrap();
    for seed in 0..10_000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Some(word) = realize(&st, &s4, &a, &mut rng) else { continue };
        let ex = ForestExample { setup: st.clone(), word, f1: f1.clone(), f2: f2.clone(), f3: f3.clone(), seed };
        if verify_forest_example(&ex).is_ok() {
            return Some(ex);
        }
    }
    None
}

fn c10() -> Outcome {
    let ex = forest_example().ok_or("no realization passes all three checks")?;
    verify_forest_example(&ex)?;
    Ok(format!("seed {}; F1 fails (ix) at J = [2,2]; F2 fails (viii) at [1,13] ⊔ [14,20]; F3 passes", ex.seed))
}

/// The two HNN instances: A = {e} with K = 1, and A = A3, φ = id, K = diam(A3) = 1/2.
pub fn hnn_instances() -> Vec<HnnSetup> {
    let (m, a3) = s3_chain(q(1, 1), q(1, 2));
    let e = m.group().identity();
    let id: Vec<(Elem, Elem)> = a3.iter().map(|&x| (x, x)).collect();
    vec![
        build_hnn(m.clone(), &[e], &[e], &[(e, e)], q(1, 1), Mode::Ultrametric).unwrap(),
        build_hnn(m.clone(), &a3, &a3, &id, m.diameter_of(&a3), Mode::Ultrametric).unwrap(),
    ]
}

fn c11() -> Outcome {
    let mut lines = Vec::new();
    for st in hnn_instances() {
        let k = st.k();
        let t = st.stable();
        let grp = st.base().group().clone();
        ensure(st.norm(&t).unwrap() == k, || "exact δ(t,e) ≠ K".into())?;
        for len in 2..=4 {
            let v = st.bounded_norm(&t, len, 2).unwrap();
            ensure(v == k, || format!("bounded δ(t,e) = {v} at length {len}"))?;
        }
        for x in 0..grp.order() {
            for y in 0..grp.order() {
                let (gx, gy) = ([HLetter::G(x)], [HLetter::G(y)]);
                ensure(st.dist(&gx, &gy).unwrap() == st.base().d(x, y), || "δ|_G ≠ d".into())?;
            }
            let w = [HLetter::G(x)];
            ensure(st.bounded_norm(&w, 4, 2).unwrap() == st.base().norm(x), || {
                format!("bounded ‖{}‖ ≠ d", grp.label(x))
            })?;
        }
        let s = grp.parse_elem("(1 2)").unwrap();
        let c = grp.parse_elem("(1 2 3)").unwrap();
        let probes: Vec<Vec<HLetter>> = vec![
            t.clone(),
            st.inverse_word(&t),
            vec![HLetter::U(1)],
            vec![HLetter::V(-1)],
            vec![HLetter::U(1), HLetter::G(c), HLetter::U(-1)],
            vec![HLetter::V(-1), HLetter::U(1), HLetter::G(s)],
            vec![HLetter::U(1), HLetter::G(c), HLetter::U(-1), HLetter::G(grp.inv(c))],
        ];
        for w in &probes {
            let exact = st.norm(w).unwrap();
            let capped = st.bounded_norm(w, 4, 2).unwrap();
            let wide = st.bounded_norm(w, 4, 4).unwrap();
            let label: Vec<String> = w.iter().map(|&l| st.letter_label(l)).collect();
            ensure(capped == wide, || format!("cap 2 and cap 4 differ on {}", label.join(" ")))?;
            ensure(capped == exact, || format!("bounded {capped} ≠ exact {exact} on {}", label.join(" ")))?;
        }
        lines.push(format!("|A| = {}, K = {k}", st.a().len()));
    }
    Ok(lines.join("; "))
}

fn c12() -> Outcome {
    let x = ScaledSpace::with_identity_scale(two_point_space("x", q(1, 1)));
    let y = ScaledSpace::with_identity_scale(two_point_space("y", q(1, 2)));
    let u = union_scaled(&x, &y).map_err(|e| e.to_string())?;
    let xs = all_words(&x.space, 6);
    for f in &xs {
        let inside = graev_norm_free(&x.space, f).value;
        let outside = graev_norm_free(&u.space.space, &u.include_x(f)).value;
        ensure(inside == outside, || format!("{f:?}: {inside} in X̄, {outside} in the union"))?;
    }
    let us = all_words(&u.space.space, 6);
    let bad = us
        .par_iter()
        .find_any(|w| graev_norm_free(&x.space, &u.retract(w)).value > graev_norm_free(&u.space.space, w).value);
    ensure(bad.is_none(), || format!("retract increases the norm of {bad:?}"))?;
    Ok(format!("{} words over X̄, {} over the union", xs.len(), us.len()))
}

const TIME_LIMITS_MS: [Option<u128>; 12] =
    [Some(30_000), None, None, None, None, Some(300_000), None, None, None, None, None, None];

/// Runs criterion `id` (1-based).
pub fn run_criterion(id: usize) -> CriterionResult {
    let checks: [fn() -> Outcome; 12] = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12];
    let start = Instant::now();
    let out = std::panic::catch_unwind(checks[id - 1]).unwrap_or_else(|_| Err("panicked".into()));
    let millis = start.elapsed().as_millis();
    let (mut passed, mut detail) = match out {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if let Some(limit) = TIME_LIMITS_MS[id - 1] {
        if passed && millis > limit {
            passed = false;
            detail = format!("{detail}; took {millis} ms, limit {limit} ms");
        }
    }
    CriterionResult { id, name: CRITERIA[id - 1], passed, detail, millis }
}

pub fn run_all() -> Vec<CriterionResult> {
    (1..=12).map(run_criterion).collect()
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {}: {} ({} ms) {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.millis,
            self.detail
        )
    }
}
