//! Every acceptance criterion at full scale, one line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use msl_core::verify::{run_checks, Level};

fn main() -> ExitCode {
    let start = Instant::now();
    let results = match run_checks(Level::Full, |o| println!("{o}")) {
        Ok(results) => results,
        Err(e) => {
            eprintln!("acceptance suite aborted: {e}");
            return ExitCode::FAILURE;
        }
    };
    let failed = results.iter().filter(|o| !o.passed).count();
    println!(
        "acceptance: {} of {} criteria passed in {:.0}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
