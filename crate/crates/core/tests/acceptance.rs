use summing_core::verify::{run_suite, CRITERIA};
use summing_core::SuiteConfig;

#[test]
fn acceptance_criteria() {
    let rows = run_suite(&SuiteConfig::default(), &[]);
    assert_eq!(rows.len(), CRITERIA as usize);
    for row in &rows {
        println!("{}", row.line());
    }
    let failed: Vec<u32> = rows.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
