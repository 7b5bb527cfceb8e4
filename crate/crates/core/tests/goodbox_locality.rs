use fri_core::goodbox::{check_good, sample_pair, GeometryOverrides, GoodBoxGeometry};
use fri_core::hitting::CapacityBudget;
use fri_core::FriParams64;

#[test]
fn deleting_far_walks_keeps_report() {
    let g = GoodBoxGeometry::build(1, 3, &GeometryOverrides::toy()).unwrap();
    let params = FriParams64::new(2.0, 1.5, 3).unwrap();
    for trial in 0..4 {
        let (s1, s2) = sample_pair(&params, &g, 5, 21, trial, f64::INFINITY).unwrap();
        assert!(s1.trajectories.iter().any(|w| !g.source_ball().contains(&w.start())));
        let full = check_good(&g, &s1, &s2, CapacityBudget::Exact).unwrap();
        let t1 = s1.sources_within(g.source_ball()).unwrap();
        let t2 = s2.sources_within(g.source_ball()).unwrap();
        let local = check_good(&g, &t1, &t2, CapacityBudget::Exact).unwrap();
        assert_eq!(full.good, local.good);
        assert_eq!(full.cond1_sets, local.cond1_sets);
        assert_eq!(full.cond2_failures, local.cond2_failures);
        assert_eq!(full.cond3, local.cond3);
    }
}
