use std::collections::BTreeSet;
use std::sync::Arc;

use graev_core::amalgam::{build_setup, AmalgamSetup, Letter};
use graev_core::forest::{
    build_maximal_forest, check_forest, check_maximal, enumerate_maximal_forests, EvaluationForest,
};
use graev_core::fpair::{is_multipliable_pair, rho as pair_rho, to_reduced_pair, FPair};
use graev_core::free::{
    apply_match, brute_force_norm, enumerate_matches, graev_dist_free, graev_norm_free, reduce_word, rho,
};
use graev_core::group::{metric_from_chain, validate_biinvariance, Elem, FiniteGroup, GroupMetric, NormalChain};
use graev_core::hnn::{build_hnn, HLetter, HnnSetup};
use graev_core::product::{distance_to_a, product_dist, product_norm, product_norm_dp, product_norm_quotient};
use graev_core::space::{add_formal_inverses, validate_space, FiniteSpace, Mode, PointedSpace, SymmetricSpace};
use graev_core::Rational;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

/// Closure of a random weight matrix: minimax paths give an ultrametric, shortest paths a metric.
fn closed_space(n: usize, weights: &[i64], mode: Mode) -> FiniteSpace {
    let mut d = vec![vec![0i64; n]; n];
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            d[i][j] = weights[k];
            d[j][i] = weights[k];
            k += 1;
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = match mode {
                    Mode::Ultrametric => d[i][m].max(d[m][j]),
                    Mode::Metric => d[i][m] + d[m][j],
                };
                if i != j && via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    let names = (0..n).map(|i| if i == 0 { "e".to_string() } else { format!("x{i}") }).collect();
    FiniteSpace::new(names, d.iter().map(|r| r.iter().map(|&v| q(v, 4)).collect()).collect(), mode).unwrap()
}

fn space_strategy(max_points: usize) -> impl Strategy<Value = SymmetricSpace> {
    (2..=max_points, any::<bool>()).prop_flat_map(|(n, ultra)| {
        let mode = if ultra { Mode::Ultrametric } else { Mode::Metric };
        prop::collection::vec(1i64..=6, n * (n - 1) / 2)
            .prop_map(move |w| add_formal_inverses(&PointedSpace::new(closed_space(n, &w, mode), 0).unwrap()).unwrap())
    })
}

fn word_over(s: &SymmetricSpace, picks: &[usize]) -> Vec<usize> {
    picks.iter().map(|&p| p % s.len()).collect()
}

fn s3_chain(top: Rational, low: Rational) -> GroupMetric {
    let g = Arc::new(FiniteGroup::symmetric(3));
    let a3 = g.generated(&[g.parse_elem("(1 2 3)").unwrap()]);
    metric_from_chain(g, &NormalChain { subgroups: vec![(0..6).collect(), a3, vec![0]], values: vec![top, low] })
        .unwrap()
}

/// S3 ∗_A S3 with A one of A3, {e}, ⟨(1 2)⟩; the two factors may differ above the lowest level.
fn s3_setup(kind: usize, low: i64, up_g: i64, up_h: i64) -> AmalgamSetup {
    let (gm, hm) = (s3_chain(q(low + up_g, 4), q(low, 4)), s3_chain(q(low + up_h, 4), q(low, 4)));
    let g = gm.group().clone();
    let a: Vec<Elem> = match kind {
        0 => g.generated(&[g.parse_elem("(1 2 3)").unwrap()]),
        1 => vec![g.identity()],
        _ => g.generated(&[g.parse_elem("(1 2)").unwrap()]),
    };
    let hm = if kind == 2 { gm.clone() } else { hm };
    build_setup(gm, hm, &a.iter().map(|&x| (x, x)).collect::<Vec<_>>()).unwrap()
}

fn setup_strategy() -> impl Strategy<Value = AmalgamSetup> {
    (0usize..3, 1i64..=3, 1i64..=3, 1i64..=3).prop_map(|(k, l, g, h)| s3_setup(k, l, g, h))
}

fn pword(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0usize..2, 0usize..6), len)
}

fn letters(st: &AmalgamSetup, w: &[(usize, usize)]) -> Vec<Letter> {
    w.iter().map(|&(s, x)| st.letter(s, x).unwrap()).collect()
}

fn inverse(st: &AmalgamSetup, w: &[Letter]) -> Vec<Letter> {
    w.iter().rev().map(|&l| st.letter_inv(l)).collect()
}

fn tree_nodes(f: &EvaluationForest, root: usize) -> Vec<usize> {
    let mut out = vec![root];
    let mut i = 0;
    while i < out.len() {
        out.extend(f.children(out[i]));
        i += 1;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_spaces_validate(s in space_strategy(5)) {
        let (pts, rows): (Vec<String>, Vec<Vec<Rational>>) =
            ((0..s.len()).map(|i| s.name(i).to_string()).collect(), (0..s.len()).map(|i| (0..s.len()).map(|j| s.d(i, j)).collect()).collect());
        prop_assert!(validate_space(&FiniteSpace::new(pts, rows, s.mode()).unwrap()).is_ok());
    }

    #[test]
    fn matched_words_reduce_to_identity(s in space_strategy(4), picks in prop::collection::vec(0usize..16, 0..=7), pick in any::<prop::sample::Index>()) {
        let w = word_over(&s, &picks);
        let all: Vec<_> = enumerate_matches(w.len()).collect();
        let theta = &all[pick.index(all.len())];
        prop_assert!(reduce_word(&s, &apply_match(&s, &w, theta).unwrap()).is_empty());
    }

    #[test]
    fn free_dp_equals_minimum_over_matches(s in space_strategy(4), picks in prop::collection::vec(0usize..16, 0..=8)) {
        let w = reduce_word(&s, &word_over(&s, &picks));
        let dp = graev_norm_free(&s, &w);
        let oracle = enumerate_matches(w.len())
            .map(|m| rho(&s, &w, &apply_match(&s, &w, &m).unwrap()).unwrap())
            .min()
            .unwrap_or_else(Rational::zero);
        prop_assert_eq!(dp.value, oracle);
        prop_assert_eq!(brute_force_norm(&s, &w), oracle);
    }

    #[test]
    fn free_metric_axioms(
        s in space_strategy(3),
        f in prop::collection::vec(0usize..16, 0..=4),
        g in prop::collection::vec(0usize..16, 0..=4),
        h in prop::collection::vec(0usize..16, 0..=4),
        x in 0usize..16,
        y in 0usize..16,
    ) {
        let (f, g, h) = (word_over(&s, &f), word_over(&s, &g), word_over(&s, &h));
        let (x, y) = (x % s.len(), y % s.len());
        let dfg = graev_dist_free(&s, &f, &g);
        let dgh = graev_dist_free(&s, &g, &h);
        let dfh = graev_dist_free(&s, &f, &h);
        prop_assert_eq!(dfg, graev_dist_free(&s, &g, &f));
        prop_assert!(dfh <= s.mode().combine(dfg, dgh));
        let wrap = |w: &[usize]| [vec![x], w.to_vec(), vec![y]].concat();
        prop_assert_eq!(graev_dist_free(&s, &wrap(&f), &wrap(&g)), dfg);
        prop_assert_eq!(graev_dist_free(&s, &[x], &[y]), s.d(x, y));
        prop_assert_eq!(dfg.is_zero(), reduce_word(&s, &f) == reduce_word(&s, &g));
    }

    #[test]
    fn product_norm_algorithms_agree(st in setup_strategy(), w in pword(0..=4)) {
        let f = st.evaluate(&letters(&st, &w));
        let n = product_norm(&st, &f);
        prop_assert!(n.pair.is_valid(&st));
        prop_assert_eq!(st.evaluate(&n.pair.alpha), f.clone());
        prop_assert_eq!(pair_rho(&st, &n.pair), n.value);
        prop_assert_eq!(product_norm_dp(&st, &f), n.value);
        prop_assert_eq!(product_norm_quotient(&st, &f).unwrap(), n.value);
    }

    #[test]
    fn product_metric_is_an_invariant_ultrametric(
        st in setup_strategy(),
        f in pword(0..=2),
        g in pword(0..=2),
        h in pword(0..=2),
        x in (0usize..2, 0usize..6),
        y in (0usize..2, 0usize..6),
    ) {
        let (f, g, h) = (st.evaluate(&letters(&st, &f)), st.evaluate(&letters(&st, &g)), st.evaluate(&letters(&st, &h)));
        let dfg = product_dist(&st, &f, &g).unwrap();
        let dgh = product_dist(&st, &g, &h).unwrap();
        prop_assert!(product_dist(&st, &f, &h).unwrap() <= dfg.max(dgh));
        let (x, y) = (st.evaluate(&letters(&st, &[x])), st.evaluate(&letters(&st, &[y])));
        let wrap = |e| st.multiply(&st.multiply(&x, e).unwrap(), &y).unwrap();
        prop_assert_eq!(product_dist(&st, &wrap(&f), &wrap(&g)).unwrap(), dfg);
    }

    #[test]
    fn product_metric_extends_the_union(st in setup_strategy(), x in (0usize..2, 0usize..6), y in (0usize..2, 0usize..6)) {
        let (lx, ly) = (st.letter(x.0, x.1).unwrap(), st.letter(y.0, y.1).unwrap());
        let d = product_dist(&st, &st.evaluate(&[lx]), &st.evaluate(&[ly])).unwrap();
        prop_assert_eq!(d, st.dist_union(lx, ly));
    }

    #[test]
    fn positive_norm_with_reduced_form_bound(st in setup_strategy(), w in pword(1..=4)) {
        let f = st.evaluate(&letters(&st, &w));
        prop_assume!(f != st.identity());
        let n = product_norm(&st, &f).value;
        prop_assert!(n > Rational::zero());
        let a0 = st.alpha0(&f);
        let eps = a0.iter().map(|&l| distance_to_a(&st, l)).min().unwrap();
        prop_assert!(n >= eps);
    }

    #[test]
    fn evaluation_is_a_homomorphism(st in setup_strategy(), u in pword(0..=4), v in pword(0..=4)) {
        let (u, v) = (letters(&st, &u), letters(&st, &v));
        let joined = st.evaluate(&[u.clone(), v.clone()].concat());
        prop_assert_eq!(joined, st.multiply(&st.evaluate(&u), &st.evaluate(&v)).unwrap());
    }

    #[test]
    fn reduced_forms_evaluate_back(st in setup_strategy(), w in pword(0..=4)) {
        let f = st.evaluate(&letters(&st, &w));
        let forms = st.reduced_forms(&f);
        prop_assert!(!forms.is_empty());
        // the identity is represented by the one-letter word e, so that f-pairs stay nonempty
        for r in forms {
            prop_assert_eq!(r.len(), f.reduced_length().max(1));
            prop_assert_eq!(st.evaluate(&r), f.clone());
        }
    }

    #[test]
    fn maximal_forests_are_valid(st in setup_strategy(), w in pword(0..=3), a in any::<prop::sample::Index>()) {
        let w = letters(&st, &w);
        let tail = st.expand(&st.inverse(&st.evaluate(&w)));
        let z = [w, tail, vec![st.a_letter(a.index(st.a_order()))]].concat();
        let built = build_maximal_forest(&st, &z).unwrap();
        prop_assert!(check_forest(&st, &z, &built).is_ok());
        prop_assert!(check_maximal(&st, &z, &built).is_ok());
        let all = match enumerate_maximal_forests(&st, &z, 2000) {
            Ok(all) => all,
            Err(_) => return Ok(()),
        };
        let key = |f: &EvaluationForest| f.intervals().into_iter().collect::<BTreeSet<_>>();
        prop_assert!(all.iter().any(|f| key(f) == key(&built)));
        for f in &all {
            prop_assert!(check_forest(&st, &z, f).is_ok());
            let ivs = key(f);
            for (i, &l) in z.iter().enumerate() {
                if st.in_a(l) {
                    prop_assert!(ivs.contains(&(i + 1, i + 1)), "position {} lies in A", i + 1);
                }
            }
            for r in f.roots() {
                let mut seen = BTreeSet::new();
                for t in tree_nodes(f, r) {
                    let rem = f.remainder(t);
                    prop_assert!(!rem.is_empty());
                    for p in rem {
                        prop_assert!(seen.insert(p));
                    }
                }
                let (lo, hi) = f.interval(r);
                prop_assert_eq!(seen, (lo..=hi).collect::<BTreeSet<_>>());
            }
        }
    }

    #[test]
    fn reduction_never_increases_rho(st in setup_strategy(), alpha in pword(1..=5), half in pword(0..=2), seed in 0usize..6) {
        let n = alpha.len();
        let mut half = letters(&st, &half);
        half.truncate(n / 2);
        let mut zeta = [half.clone(), inverse(&st, &half)].concat();
        zeta.resize(n, st.e_letter());
        zeta.rotate_left(seed % n);
        let p = FPair::new(&st, letters(&st, &alpha), zeta).unwrap();
        let (r, forest, trace) = to_reduced_pair(&st, &p).unwrap();
        prop_assert!(r.is_valid(&st));
        prop_assert!(is_multipliable_pair(&st, &r));
        prop_assert_eq!(&r.target, &p.target);
        prop_assert!(check_forest(&st, &r.zeta, &forest).is_ok());
        for s in trace.windows(2) {
            prop_assert!(s[1].rho <= s[0].rho, "{} then {}", s[0].op, s[1].op);
        }
        prop_assert!(pair_rho(&st, &r) <= pair_rho(&st, &p));
        prop_assert!(pair_rho(&st, &r) >= product_norm(&st, &p.target).value);
    }
}

/// S4 with S4 ⊃ V4 ⊃ {e}; φ cycles the three involutions of V4.
fn s4_hnn(k: Rational, cycle: bool) -> (HnnSetup, GroupMetric) {
    let g = Arc::new(FiniteGroup::symmetric(4));
    let v4: Vec<Elem> =
        ["()", "(1 2)(3 4)", "(1 3)(2 4)", "(1 4)(2 3)"].iter().map(|c| g.parse_elem(c).unwrap()).collect();
    let m = metric_from_chain(
        g,
        &NormalChain { subgroups: vec![(0..24).collect(), v4.clone(), vec![v4[0]]], values: vec![q(1, 1), q(1, 2)] },
    )
    .unwrap();
    let image = if cycle { [v4[0], v4[2], v4[3], v4[1]] } else { [v4[0], v4[1], v4[2], v4[3]] };
    let phi: Vec<(Elem, Elem)> = v4.iter().copied().zip(image).collect();
    (build_hnn(m.clone(), &v4, &v4, &phi, k, Mode::Ultrametric).unwrap(), m)
}

fn hword(h: &HnnSetup, picks: &[(u8, usize)]) -> Vec<HLetter> {
    let order = h.base().group().order();
    let t = h.stable();
    let ti = h.inverse_word(&t);
    picks
        .iter()
        .flat_map(|&(kind, x)| match kind {
            0 => t.clone(),
            1 => ti.clone(),
            2 => vec![HLetter::V(1)],
            _ => vec![HLetter::G(x % order)],
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hnn_relations_and_norm_laws(k in prop::sample::select(vec![q(1, 2), q(1, 1), q(2, 1)]), cycle in any::<bool>(), w in prop::collection::vec((0u8..5, 0usize..24), 0..=4)) {
        let (h, m) = s4_hnn(k, cycle);
        let grp = m.group();
        let t = h.stable();
        let ti = h.inverse_word(&t);
        for &(a, b) in h.phi() {
            let rel = [t.clone(), vec![HLetter::G(a)], ti.clone(), vec![HLetter::G(grp.inv(b))]].concat();
            prop_assert!(h.is_trivial(&rel));
        }
        prop_assert_eq!(h.norm(&t).unwrap(), k);
        let w = hword(&h, &w);
        let n = h.norm(&w).unwrap();
        prop_assert_eq!(h.norm(&h.inverse_word(&w)).unwrap(), n);
        prop_assert_eq!(n.is_zero(), h.is_trivial(&w));
        prop_assert!(h.norm(&[w.clone(), h.inverse_word(&w)].concat()).unwrap().is_zero());
        for g in 0..grp.order() {
            prop_assert_eq!(h.norm(&[HLetter::G(g)]).unwrap(), m.norm(g));
            let conj = [w.clone(), vec![HLetter::G(g)], h.inverse_word(&w)].concat();
            prop_assert_eq!(h.norm(&conj).unwrap(), m.norm(g));
        }
    }
}

#[test]
fn chain_metrics_are_biinvariant() {
    for low in 1..=3 {
        for up in 1..=3 {
            assert!(validate_biinvariance(&s3_chain(q(low + up, 4), q(low, 4))).is_ok());
        }
    }
}

#[test]
fn match_counts_are_motzkin_numbers() {
    let mut m = vec![1u64, 1];
    for n in 2..=10 {
        let next = m[n - 1] + (0..=n - 2).map(|k| m[k] * m[n - 2 - k]).sum::<u64>();
        m.push(next);
    }
    for (n, &want) in m.iter().enumerate() {
        assert_eq!(enumerate_matches(n).count() as u64, want, "n = {n}");
    }
}
