mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tarjan_matches_closure_and_schedule_is_topological((n, adj) in common::arb_digraph()) {
        if let Err(e) = common::scc_laws(n, &adj) {
            prop_assert!(false, "{}", e);
        }
    }
}

#[test]
fn oracle_on_a_known_graph() {
    // 0 <-> 1 -> 2 -> 3 -> 2, 4 alone
    let adj = vec![vec![1], vec![0, 2], vec![3], vec![2], vec![]];
    let comps = common::closure_components(5, &adj);
    let want: std::collections::BTreeSet<Vec<usize>> =
        [vec![0, 1], vec![2, 3], vec![4]].into_iter().collect();
    assert_eq!(comps, want);
    common::scc_laws(5, &adj).unwrap();
}
