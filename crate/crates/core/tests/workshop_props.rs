use std::collections::BTreeSet;

use proptest::prelude::*;

use ontogdss_core::workshop::{
    commit_consensus, extensions, grounded_labelling, to_dung, ArgumentBoard, ArgumentElement, ArgumentationFramework,
    AttackPolicy, ElementKind, Label, RelationType, Semantics,
};

fn framework(n: usize, edges: &[(usize, usize)]) -> ArgumentationFramework {
    let names: Vec<String> = (0..n).map(|i| format!("a{i}")).collect();
    let attacks: Vec<(String, String)> = edges
        .iter()
        .filter(|(a, b)| *a < n && *b < n)
        .map(|(a, b)| (names[*a].clone(), names[*b].clone()))
        .collect();
    ArgumentationFramework::new(names.clone(), &attacks)
}

fn af_strategy(max: usize) -> impl Strategy<Value = ArgumentationFramework> {
    (0..=max).prop_flat_map(|n| {
        let cap = n.max(1);
        prop::collection::vec((0..cap, 0..cap), 0..=(n * n).min(30)).prop_map(move |edges| framework(n, &edges))
    })
}

/// Complete extensions by brute force over every subset; the grounded
/// extension is the least one.
fn grounded_by_enumeration(af: &ArgumentationFramework) -> (BTreeSet<String>, BTreeSet<String>) {
    let args: Vec<&String> = af.arguments.iter().collect();
    let n = args.len();
    let attacks = |a: &String, b: &String| af.attacks.contains(&(a.clone(), b.clone()));
    let mut complete: Vec<BTreeSet<String>> = Vec::new();
    for mask in 0u32..(1 << n) {
        let s: Vec<&String> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| args[i]).collect();
        let conflict_free = s.iter().all(|a| s.iter().all(|b| !attacks(a, b)));
        if !conflict_free {
            continue;
        }
        let defends = |x: &String| args.iter().all(|y| !attacks(y, x) || s.iter().any(|z| attacks(z, y)));
        let defended: Vec<&String> = args.iter().copied().filter(|x| defends(x)).collect();
        if defended.len() == s.len() && defended.iter().all(|d| s.contains(d)) {
            complete.push(s.into_iter().cloned().collect());
        }
    }
    let least = complete
        .iter()
        .min_by_key(|s| s.len())
        .cloned()
        .expect("the grounded extension always exists");
    assert!(complete.iter().all(|c| least.is_subset(c)));
    let out = args
        .iter()
        .filter(|b| least.iter().any(|a| attacks(a, b)))
        .map(|b| (*b).clone())
        .collect();
    (least, out)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn grounded_matches_least_complete_extension(af in af_strategy(8)) {
        let labelling = grounded_labelling(&af);
        let (ins, outs) = grounded_by_enumeration(&af);
        for (a, l) in &labelling {
            let expected = if ins.contains(a) { Label::In } else if outs.contains(a) { Label::Out } else { Label::Undec };
            prop_assert_eq!(*l, expected, "argument {}", a);
        }
        prop_assert_eq!(labelling.len(), af.arguments.len());
    }

    #[test]
    fn unattacked_in_and_attacked_by_in_out(af in af_strategy(10)) {
        let labelling = grounded_labelling(&af);
        for a in &af.arguments {
            let attackers: Vec<&String> = af.attacks.iter().filter(|(_, t)| t == a).map(|(s, _)| s).collect();
            if attackers.is_empty() {
                prop_assert_eq!(labelling[a], Label::In);
            }
            if attackers.iter().any(|s| labelling[*s] == Label::In) {
                prop_assert_eq!(labelling[a], Label::Out);
            }
        }
    }

    #[test]
    fn stable_are_preferred_and_contain_grounded(af in af_strategy(9)) {
        let stable = extensions(&af, Semantics::Stable, 20).unwrap();
        let preferred = extensions(&af, Semantics::Preferred, 20).unwrap();
        let grounded = &extensions(&af, Semantics::Grounded, 20).unwrap()[0];
        prop_assert!(!preferred.is_empty());
        for s in &stable {
            prop_assert!(preferred.contains(s));
        }
        for p in &preferred {
            prop_assert!(grounded.is_subset(p));
        }
    }

    #[test]
    fn non_attack_relations_leave_dung_unchanged(
        n in 2usize..8,
        base in prop::collection::vec((0usize..8, 0usize..8, 0usize..5), 0..20),
        extra in prop::collection::vec((0usize..8, 0usize..8, 0usize..3), 1..10),
    ) {
        let mut board = ArgumentBoard::new();
        for i in 0..n {
            board.add_element(ArgumentElement::new(format!("e{i}"), "u", ElementKind::Opinion, "")).unwrap();
        }
        for (s, t, r) in base {
            let _ = board.relate(&format!("e{}", s % n), &format!("e{}", t % n), RelationType::ALL[r]);
        }
        let policy = AttackPolicy::default();
        let before = to_dung(&board, &policy);
        let soft = [RelationType::Support, RelationType::Supplement, RelationType::Neutral];
        for (s, t, r) in extra {
            let (s, t) = (format!("e{}", s % n), format!("e{}", t % n));
            // only add on fresh pairs: relating an existing pair replaces its type
            if board.relations().iter().any(|x| x.source == s && x.target == t) {
                continue;
            }
            let _ = board.relate(&s, &t, soft[r]);
        }
        prop_assert_eq!(to_dung(&board, &policy).attacks, before.attacks);
    }

    #[test]
    fn consensus_partitions_board(
        n in 0usize..9,
        rels in prop::collection::vec((0usize..9, 0usize..9, 0usize..5), 0..20),
        sem in 0usize..3,
    ) {
        let mut board = ArgumentBoard::new();
        for i in 0..n {
            board.add_element(ArgumentElement::new(format!("e{i}"), "u", ElementKind::Problem, "")).unwrap();
        }
        if n > 0 {
            for (s, t, r) in rels {
                let _ = board.relate(&format!("e{}", s % n), &format!("e{}", t % n), RelationType::ALL[r]);
            }
        }
        let semantics = [Semantics::Grounded, Semantics::Preferred, Semantics::Stable][sem];
        let record = commit_consensus(&board, semantics, &AttackPolicy::default(), 20).unwrap();
        let mut all: Vec<String> = record.accepted.iter().chain(&record.rejected).chain(&record.undecided).cloned().collect();
        all.sort();
        let mut ids: Vec<String> = board.elements().map(|e| e.id.clone()).collect();
        ids.sort();
        prop_assert_eq!(all, ids);
    }
}

/// Mixed eight-element board: grounded consensus equals the enumeration
/// oracle applied to the attack graph built by hand from the relations.
#[test]
fn eight_element_board_matches_oracle() {
    let mut board = ArgumentBoard::new();
    let kinds = [ElementKind::Opinion, ElementKind::Proposition, ElementKind::Problem];
    for i in 0..8 {
        board
            .add_element(ArgumentElement::new(format!("x{i}"), "dm", kinds[i % 3], "claim"))
            .unwrap();
    }
    let relations = [
        (0, 1, RelationType::Disagree),
        (1, 2, RelationType::Query),
        (2, 3, RelationType::Support),
        (3, 4, RelationType::Disagree),
        (4, 3, RelationType::Disagree),
        (5, 6, RelationType::Supplement),
        (6, 7, RelationType::Query),
        (7, 5, RelationType::Disagree),
        (5, 0, RelationType::Neutral),
    ];
    let mut attacks = Vec::new();
    for (s, t, r) in relations {
        board.relate(&format!("x{s}"), &format!("x{t}"), r).unwrap();
        if matches!(r, RelationType::Disagree | RelationType::Query) {
            attacks.push((format!("x{s}"), format!("x{t}")));
        }
    }
    let af = ArgumentationFramework::new((0..8).map(|i| format!("x{i}")), &attacks);
    let (ins, outs) = grounded_by_enumeration(&af);
    let record = commit_consensus(&board, Semantics::Grounded, &AttackPolicy::default(), 20).unwrap();
    assert_eq!(record.accepted.iter().cloned().collect::<BTreeSet<_>>(), ins);
    assert_eq!(record.rejected.iter().cloned().collect::<BTreeSet<_>>(), outs);
    assert_eq!(record.accepted, ["x0", "x2", "x5", "x6"]);
    assert_eq!(record.rejected, ["x1", "x7"]);
    assert_eq!(record.undecided, ["x3", "x4"]);
}
