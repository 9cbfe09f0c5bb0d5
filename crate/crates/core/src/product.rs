//! The Graev ultrametric δ on an amalgamated product of finitely many factors.
//!
//! Three independent evaluations of ‖f‖ = δ(f, e):
//! - [`product_norm`]: search over reduced f-pairs, every reduced form α, with a witness;
//! - [`product_norm_dp`]: threshold decisions by layered reachability along one reduced form;
//! - [`product_norm_quotient`]: ‖f‖ ≤ r iff f dies in the product of the quotients by the r-balls.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, RwLock};

use crate::amalgam::{build_multi, AmalgamSetup, Letter, ProductElem};
use crate::error::Result;
use crate::fpair::FPair;
use crate::group::GroupMetric;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductNorm {
    pub value: Rational,
    pub pair: FPair,
}

/// d(x, A) in the union metric.
pub fn distance_to_a(st: &AmalgamSetup, x: Letter) -> Rational {
    (0..st.a_order()).map(|a| st.dist_union(x, st.a_letter(a))).min().unwrap()
}

fn short_cases(st: &AmalgamSetup, f: &ProductElem) -> Option<ProductNorm> {
    let e = st.e_letter();
    let a = st.as_a(f)?;
    let al = st.a_letter(a);
    Some(ProductNorm { value: st.dist_union(al, e), pair: FPair { alpha: vec![al], zeta: vec![e], target: f.clone() } })
}

/// A trivial word whose i-th letter is drawn from `cands[i]`, tried in order, by depth-first
/// search with a failure memo on (position, prefix).
pub(crate) fn trivial_word_from(st: &AmalgamSetup, cands: &[Vec<Letter>]) -> Option<Vec<Letter>> {
    fn dfs(
        st: &AmalgamSetup,
        cands: &[Vec<Letter>],
        i: usize,
        prefix: &ProductElem,
        word: &mut Vec<Letter>,
        failed: &mut HashSet<(usize, ProductElem)>,
    ) -> bool {
        let n = cands.len();
        if i == n {
            return prefix.reduced_length() == 0;
        }
        if failed.contains(&(i, prefix.clone())) {
            return false;
        }
        for &z in &cands[i] {
            let mut p = prefix.clone();
            st.push_letter(&mut p, z);
            if p.reduced_length() > n - i - 1 {
                continue;
            }
            word.push(z);
            if dfs(st, cands, i + 1, &p, word, failed) {
                return true;
            }
            word.pop();
        }
        failed.insert((i, prefix.clone()));
        false
    }
    let mut word = Vec::with_capacity(cands.len());
    let mut failed = HashSet::new();
    dfs(st, cands, 0, &st.identity(), &mut word, &mut failed).then_some(word)
}

/// Letters within `r` of `x`, nearest first.
pub(crate) fn ball_around(st: &AmalgamSetup, x: Letter, r: Rational) -> Vec<Letter> {
    let mut v: Vec<Letter> = st.alphabet().iter().copied().filter(|&z| st.dist_union(x, z) <= r).collect();
    v.sort_by_key(|&z| st.dist_union(x, z));
    v
}

fn trivial_partner(st: &AmalgamSetup, alpha: &[Letter], r: Rational) -> Option<Vec<Letter>> {
    let cands: Vec<Vec<Letter>> = alpha.iter().map(|&x| ball_around(st, x, r)).collect();
    trivial_word_from(st, &cands)
}

/// Minimum of ρ over f-pairs whose α is a reduced form of f, with a minimizing pair.
pub fn product_norm(st: &AmalgamSetup, f: &ProductElem) -> ProductNorm {
    if let Some(p) = short_cases(st, f) {
        return p;
    }
    let values = st.distance_values();
    let alphas = st.reduced_forms(f);
    let e = st.e_letter();
    let a0 = alphas[0].clone();
    let zeta0 = vec![e; a0.len()];
    let v0 = a0.iter().map(|&x| st.dist_union(x, e)).max().unwrap();
    let mut best = ProductNorm { value: v0, pair: FPair { alpha: a0, zeta: zeta0, target: f.clone() } };
    for alpha in &alphas {
        for &r in values.iter().take_while(|&&r| r < best.value) {
            if let Some(zeta) = trivial_partner(st, alpha, r) {
                best = ProductNorm { value: r, pair: FPair { alpha: alpha.clone(), zeta, target: f.clone() } };
                break;
            }
        }
    }
    best
}

/// Least threshold r for which some trivial word stays within r of α₀ letterwise.
///
/// Transfers move between reduced forms without changing ρ, so α₀ alone suffices.
pub fn product_norm_dp(st: &AmalgamSetup, f: &ProductElem) -> Rational {
    if let Some(p) = short_cases(st, f) {
        return p.value;
    }
    let alpha = st.alpha0(f);
    let n = alpha.len();
    for r in st.distance_values() {
        let mut layer: HashSet<ProductElem> = HashSet::from([st.identity()]);
        for (i, &x) in alpha.iter().enumerate() {
            let ball: Vec<Letter> = st.alphabet().iter().copied().filter(|&z| st.dist_union(x, z) <= r).collect();
            let mut next = HashSet::new();
            for p in &layer {
                for &z in &ball {
                    let mut q = p.clone();
                    st.push_letter(&mut q, z);
                    if q.reduced_length() < n - i {
                        next.insert(q);
                    }
                }
            }
            layer = next;
        }
        if layer.contains(&st.identity()) {
            return r;
        }
    }
    unreachable!("the largest distance value admits ζ = e…e")
}

/// Least r such that f is trivial in the amalgam of the quotients G_λ / B_r.
pub fn product_norm_quotient(st: &AmalgamSetup, f: &ProductElem) -> Result<Rational> {
    let word = st.expand(f);
    if word.is_empty() {
        return Ok(Rational::zero());
    }
    for r in st.distance_values() {
        let mut metrics = Vec::new();
        let mut projs = Vec::new();
        for side in 0..st.factor_count() {
            let m = st.factor(side);
            let g = m.group();
            let ball: Vec<usize> = (0..g.order()).filter(|&x| m.norm(x) <= r).collect();
            let (q, proj) = g.quotient(&ball)?;
            metrics.push(GroupMetric::discrete(Arc::new(q), Rational::one()));
            projs.push(proj);
        }
        let mut images: Vec<usize> = Vec::new();
        let mut reps: Vec<usize> = Vec::new();
        for a in 0..st.a_order() {
            let img = projs[0][st.embed(0, a)];
            if !images.contains(&img) {
                images.push(img);
                reps.push(a);
            }
        }
        let emb: Vec<Vec<usize>> =
            (0..st.factor_count()).map(|s| reps.iter().map(|&a| projs[s][st.embed(s, a)]).collect()).collect();
        let qs = build_multi(metrics, emb)?;
        let w: Vec<Letter> = word.iter().map(|l| Letter::new(l.side, projs[l.side][l.elem])).collect();
        if qs.is_trivial(&w) {
            return Ok(r);
        }
    }
    unreachable!("at the largest value every quotient is trivial")
}

/// The defining infimum restricted to f-pairs of length at most `max_len`, all letters allowed.
pub fn bounded_pair_infimum(st: &AmalgamSetup, f: &ProductElem, max_len: usize) -> Option<Rational> {
    let letters = st.alphabet();
    for r in st.distance_values() {
        let pairs: Vec<(Letter, Letter)> = letters
            .iter()
            .flat_map(|&x| letters.iter().map(move |&z| (x, z)))
            .filter(|&(x, z)| st.dist_union(x, z) <= r)
            .collect();
        for n in 1..=max_len {
            let mut layer: HashSet<(ProductElem, ProductElem)> = HashSet::from([(st.identity(), st.identity())]);
            for i in 0..n {
                let rest = n - i - 1;
                let mut next = HashSet::new();
                for (pa, pz) in &layer {
                    for &(x, z) in &pairs {
                        let mut qa = pa.clone();
                        st.push_letter(&mut qa, x);
                        let need = st.multiply(&st.inverse(&qa), f).unwrap();
                        if need.reduced_length() > rest {
                            continue;
                        }
                        let mut qz = pz.clone();
                        st.push_letter(&mut qz, z);
                        if qz.reduced_length() > rest {
                            continue;
                        }
                        next.insert((qa, qz));
                    }
                }
                layer = next;
            }
            if layer.contains(&(f.clone(), st.identity())) {
                return Some(r);
            }
        }
    }
    None
}

/// Graev ultrametric on a fixed setup with a shared norm cache.
#[derive(Debug)]
pub struct ProductMetric {
    setup: Arc<AmalgamSetup>,
    cache: RwLock<HashMap<ProductElem, Rational>>,
}

impl ProductMetric {
    pub fn new(setup: Arc<AmalgamSetup>) -> Self {
        ProductMetric { setup, cache: RwLock::new(HashMap::new()) }
    }

    pub fn setup(&self) -> &AmalgamSetup {
        &self.setup
    }

    pub fn norm(&self, f: &ProductElem) -> Rational {
        if let Some(&v) = self.cache.read().unwrap().get(f) {
            return v;
        }
        let v = product_norm(&self.setup, f).value;
        self.cache.write().unwrap().insert(f.clone(), v);
        v
    }

    /// δ(f₁, f₂) = ‖f₁⁻¹ f₂‖.
    pub fn dist(&self, f1: &ProductElem, f2: &ProductElem) -> Result<Rational> {
        let x = self.setup.multiply(&self.setup.inverse(f1), f2)?;
        Ok(self.norm(&x))
    }

    pub fn cached(&self) -> usize {
        self.cache.read().unwrap().len()
    }
}

/// δ(f₁, f₂) without caching.
pub fn product_dist(st: &AmalgamSetup, f1: &ProductElem, f2: &ProductElem) -> Result<Rational> {
    let x = st.multiply(&st.inverse(f1), f2)?;
    Ok(product_norm(st, &x).value)
}

/// The same minimization over a setup with any number of factors.
pub fn multiway_product_norm(st: &AmalgamSetup, f: &ProductElem) -> Rational {
    product_norm(st, f).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amalgam::{build_setup, G, H};
    use crate::fpair::rho;
    use crate::group::{metric_from_chain, FiniteGroup, NormalChain};

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn s3_metric() -> GroupMetric {
        let s3 = Arc::new(FiniteGroup::symmetric(3));
        let a3 = s3.generated(&[s3.parse_elem("(1 2 3)").unwrap()]);
        metric_from_chain(
            s3,
            &NormalChain { subgroups: vec![(0..6).collect(), a3, vec![0]], values: vec![q(1, 1), q(1, 2)] },
        )
        .unwrap()
    }

    fn s3_over_a3() -> AmalgamSetup {
        let m = s3_metric();
        let a3 = m.group().generated(&[m.group().parse_elem("(1 2 3)").unwrap()]);
        build_setup(m.clone(), m, &a3.iter().map(|&a| (a, a)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn letters_keep_their_distance() {
        let st = s3_over_a3();
        for &x in st.alphabet() {
            for &y in st.alphabet() {
                let f = st.evaluate(&[x]);
                let g = st.evaluate(&[y]);
                assert_eq!(product_dist(&st, &f, &g).unwrap(), st.dist_union(x, y), "{x} {y}");
            }
        }
    }

    #[test]
    fn three_algorithms_agree_on_short_elements() {
        let st = s3_over_a3();
        for f in st.elements_up_to(3) {
            let a = product_norm(&st, &f);
            assert!(a.pair.is_valid(&st));
            assert_eq!(rho(&st, &a.pair), a.value);
            assert_eq!(product_norm_dp(&st, &f), a.value);
            assert_eq!(product_norm_quotient(&st, &f).unwrap(), a.value);
        }
    }

    #[test]
    fn bounded_infimum_matches_on_length_two() {
        let st = s3_over_a3();
        let t = Letter::new(G, st.factor(G).group().parse_elem("(1 2)").unwrap());
        let u = Letter::new(H, st.factor(H).group().parse_elem("(1 3)").unwrap());
        let f = st.evaluate(&[t, u]);
        assert_eq!(bounded_pair_infimum(&st, &f, 4), Some(product_norm(&st, &f).value));
        assert_eq!(bounded_pair_infimum(&st, &f, 1), None);
    }

    #[test]
    fn trivial_a_gives_max_of_norms() {
        let m = s3_metric();
        let st = build_setup(m.clone(), m, &[(0, 0)]).unwrap();
        let t = Letter::new(G, 1);
        let c = Letter::new(H, st.factor(H).group().parse_elem("(1 2 3)").unwrap());
        assert_eq!(st.dist_union(t, c), q(1, 1));
        let f = st.evaluate(&[c]);
        assert_eq!(product_norm(&st, &f).value, q(1, 2));
        let pm = ProductMetric::new(Arc::new(st.clone()));
        let g = st.evaluate(&[t, c]);
        assert_eq!(pm.norm(&g), product_norm_dp(&st, &g));
        assert_eq!(pm.cached(), 1);
    }
}
