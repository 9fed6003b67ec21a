mod common;

use renev_core::analysis::states::{p_q_groups, LevelRange};
use renev_core::oracle::{sampled_groups, total_variation};

#[test]
fn feasible_sets_equal_exhaustive_enumeration() {
    let (compared, bad) = common::feasibility_vs_exhaustive(3, &LevelRange::new(-2, 3));
    assert_eq!(compared, 6 + 21 + 56);
    assert_eq!(bad, 0);
}

#[test]
fn mcs_masses_match_sampling() {
    let gap = common::mcs_vs_sampling(1_000_000);
    assert!(gap <= 1e-2, "{gap}");
}

#[test]
fn equal_share_closed_form_matches_direct_sum() {
    let gap = common::share_gap(20);
    assert!(gap <= 1e-9, "{gap}");
}

#[test]
fn group_distribution_worked_example() {
    let q = p_q_groups(4, 2, 0.25);
    let tv = total_variation(&q, &sampled_groups(4, 2, 0.25, 200_000, 5));
    assert!(tv <= 2e-2, "{q:?} tv {tv}");
}

#[test]
fn group_distribution_is_a_distribution() {
    for n in 1..=6 {
        for m in 1..=n {
            for p in [0.0, 0.1, 0.25, 0.6, 1.0] {
                let q = p_q_groups(n, m, p);
                assert_eq!(q.len(), m);
                assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{n} {m} {p}");
                assert!(q.iter().all(|x| *x >= -1e-12));
            }
            assert!((p_q_groups(n, m, 0.0)[m - 1] - 1.0).abs() < 1e-12);
        }
    }
}
