mod common;

#[test]
fn synthetic_project_within_budget() {
    let detail = common::criteria::performance().unwrap();
    println!("perf: {detail}");
}
