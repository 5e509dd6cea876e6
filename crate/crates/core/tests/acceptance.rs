//! All nine acceptance criteria at their stated tolerances, one line each.

use rtlinear::acceptance::run_all;

fn main() {
    let results = run_all();
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    for r in &results {
        println!("{r}");
    }
    assert_eq!(results.len(), 9);
    if failed.is_empty() {
        println!("acceptance: 9/9 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
