use proptest::prelude::*;

use ontogdss_core::mcdm::{
    borda_aggregate, electre1, flows_to_ballot, promethee2, CriterionSpec, DecisionMatrix, Direction,
    PreferenceFunction, RankingBallot,
};

fn matrix_strategy(max_schemes: usize, max_criteria: usize) -> impl Strategy<Value = DecisionMatrix> {
    (2..=max_schemes, 1..=max_criteria).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec((any::<bool>(), 0.05f64..1.0, any::<bool>()), m),
            prop::collection::vec(prop::collection::vec(-20i32..20, m), n),
        )
            .prop_map(move |(specs, rows)| DecisionMatrix {
                schemes: (0..n).map(|i| format!("s{i}")).collect(),
                criteria: specs
                    .into_iter()
                    .enumerate()
                    .map(|(j, (max, w, linear))| {
                        let dir = if max { Direction::Maximize } else { Direction::Minimize };
                        let c = CriterionSpec::new(format!("c{j}"), dir, w).with_scale(8.0);
                        if linear {
                            c.with_preference(PreferenceFunction::Linear { q: 1.0, p: 6.0 })
                        } else {
                            c
                        }
                    })
                    .collect(),
                scores: rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect(),
            })
    })
}

fn usual_only(mut m: DecisionMatrix) -> DecisionMatrix {
    for c in &mut m.criteria {
        c.preference = PreferenceFunction::Usual;
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn net_flows_sum_to_zero(m in matrix_strategy(7, 4)) {
        let f = promethee2(&m).unwrap();
        let total: f64 = f.flows.iter().map(|x| x.net).sum();
        prop_assert!(total.abs() < 1e-9);
        for x in &f.flows {
            prop_assert!((-1.0..=1.0).contains(&x.net));
        }
    }

    #[test]
    fn rescaling_weights_keeps_ranking(m in matrix_strategy(6, 4), k in 0.01f64..100.0) {
        let mut scaled = m.clone();
        for c in &mut scaled.criteria {
            c.weight *= k;
        }
        prop_assert_eq!(promethee2(&m).unwrap().ranking, promethee2(&scaled).unwrap().ranking);
    }

    #[test]
    fn column_shift_is_invisible_under_usual(m in matrix_strategy(6, 4), col in 0usize..4, shift in -50i32..50) {
        let m = usual_only(m);
        let col = col % m.criteria.len();
        let mut shifted = m.clone();
        for row in &mut shifted.scores {
            row[col] += f64::from(shift);
        }
        let (a, b) = (promethee2(&m).unwrap(), promethee2(&shifted).unwrap());
        for (x, y) in a.flows.iter().zip(&b.flows) {
            prop_assert!((x.net - y.net).abs() < 1e-12);
        }
    }

    #[test]
    fn dominance_respected(m in matrix_strategy(5, 4), bump in 0usize..4) {
        // make s0 weakly dominate s1, strictly on one criterion
        let mut m = m;
        let k = m.criteria.len();
        for j in 0..k {
            let better = match m.criteria[j].direction {
                Direction::Maximize => m.scores[0][j].max(m.scores[1][j]),
                Direction::Minimize => m.scores[0][j].min(m.scores[1][j]),
            };
            m.scores[0][j] = better;
        }
        let j = bump % k;
        m.scores[0][j] = match m.criteria[j].direction {
            Direction::Maximize => m.scores[1][j] + 10.0,
            Direction::Minimize => m.scores[1][j] - 10.0,
        };
        let f = promethee2(&m).unwrap();
        prop_assert!(f.net("s0").unwrap() >= f.net("s1").unwrap() - 1e-12);
        let e = electre1(&m, 0.5, 0.0).unwrap();
        prop_assert!(!e.outranks("s1", "s0"));
    }

    #[test]
    fn electre_ranges_and_threshold_monotonicity(
        m in matrix_strategy(5, 4),
        c1 in 0.05f64..1.0, c2 in 0.05f64..1.0,
        d1 in 0.0f64..2.0, d2 in 0.0f64..2.0,
    ) {
        let (c_lo, c_hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        let (d_lo, d_hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let loose = electre1(&m, c_lo, d_hi).unwrap();
        let strict_c = electre1(&m, c_hi, d_hi).unwrap();
        let strict_d = electre1(&m, c_lo, d_lo).unwrap();
        for (i, row) in loose.concordance.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                prop_assert_eq!(c.is_none(), i == j);
                if let Some(c) = c {
                    prop_assert!((0.0..=1.0 + 1e-12).contains(c));
                    prop_assert!(loose.discordance[i][j].unwrap() >= 0.0);
                }
            }
        }
        for pair in strict_c.outranks.iter().chain(&strict_d.outranks) {
            prop_assert!(loose.outranks.contains(pair));
        }
        prop_assert!(!loose.kernel.is_empty());
    }

    #[test]
    fn borda_unanimity(
        perms in prop::collection::vec(Just(vec!["a", "b", "c", "d", "e"]).prop_shuffle(), 1..8),
        weights in prop::collection::vec(0.1f64..5.0, 8),
    ) {
        let top = perms[0][0];
        let ballots: Vec<RankingBallot> = perms
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut ranking: Vec<String> = p.iter().filter(|s| **s != top).map(|s| s.to_string()).collect();
                ranking.insert(0, top.to_string());
                RankingBallot { evaluator: format!("v{i}"), ranking, weight: weights[i] }
            })
            .collect();
        let group = borda_aggregate(&ballots).unwrap();
        prop_assert_eq!(group.top(), Some(top));
    }

    #[test]
    fn flow_ballot_is_full_permutation(m in matrix_strategy(7, 3)) {
        let f = promethee2(&m).unwrap();
        let b = flows_to_ballot(&f, "e", 1.0);
        let mut sorted = b.ranking.clone();
        sorted.sort();
        let mut schemes = m.schemes.clone();
        schemes.sort();
        prop_assert_eq!(sorted, schemes);
        prop_assert_eq!(b.ranking, f.ranking);
    }
}
