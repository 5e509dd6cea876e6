//! Runs the nine acceptance checks and prints one line per check.

fn main() {
    let ids: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids = if ids.is_empty() { (1..=9).collect() } else { ids };
    let mut failed = 0;
    for id in ids {
        let Some(r) = rtlinear::acceptance::run_criterion(id) else {
            eprintln!("no criterion {id}");
            continue;
        };
        failed += usize::from(!r.passed);
        println!("{r}");
    }
    std::process::exit(i32::from(failed > 0));
}
