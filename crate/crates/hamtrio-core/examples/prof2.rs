//! Dev smoke run of the theorem verification routines with timings.

use hamtrio_core::catalog::families::FamilyTag;
use hamtrio_core::catalog::verify;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("theorem1");
    let tag = match which {
        "theorem1" => FamilyTag::Th1,
        "theorem2" => FamilyTag::Th2,
        "theorem3" => FamilyTag::Th3,
        "theorem4" => FamilyTag::Th4,
        _ => panic!("unknown theorem"),
    };
    let t0 = Instant::now();
    match verify::verify_theorem(tag, false) {
        Ok(outcomes) => {
            for o in outcomes {
                eprintln!(
                    "[{}] {} {}",
                    if o.passed { "pass" } else { "FAIL" },
                    o.name,
                    o.detail
                );
            }
        }
        Err(e) => eprintln!("error: {}", e),
    }
    eprintln!("total {:?}", t0.elapsed());
}
