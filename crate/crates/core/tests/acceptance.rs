use nucmv::acceptance::run_criterion;

#[test]
fn acceptance_criteria() {
    let only: Option<u8> = std::env::var("NUCMV_CRITERION").ok().and_then(|s| s.parse().ok());
    let mut failed = Vec::new();
    for id in 1..=10u8 {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let report = run_criterion(id);
        println!("{report}");
        if !report.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
