//! Dev tool: derive the bracket-solve connections for the four families
//! and print them in a form ready to freeze into the catalog.

use hamtrio_core::catalog::{ansatz_search, canonical, family, fit_metric, CanonicalTag, FamilyTag};
use hamtrio_core::Expr;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("all");
    for (tag, ftag) in [
        (CanonicalTag::R2, FamilyTag::Th1),
        (CanonicalTag::R3_1, FamilyTag::Th2),
        (CanonicalTag::R3_2, FamilyTag::Th3),
        (CanonicalTag::R3_3, FamilyTag::Th4),
    ] {
        if which != "all" && which != tag.name() {
            continue;
        }
        let t0 = Instant::now();
        let r = canonical(tag);
        let sol = ansatz_search(&r).expect("ansatz");
        eprintln!(
            "{}: solution dimension {} in {:?}",
            tag.name(),
            sol.dimension(),
            t0.elapsed()
        );
        for (k, m) in sol.metrics.iter().enumerate() {
            eprintln!(
                "  basis[{}]: g11 = {} ; g12 = {} ; g22 = {}",
                k, m[0], m[1], m[2]
            );
            for ii in 0..2 {
                for jj in 0..2 {
                    for kk in 0..2 {
                        let e = &sol.connections[k][(ii * 2 + jj) * 2 + kk];
                        if !e.rat().is_zero() {
                            eprintln!("      G[{}{}][{}] = {}", ii + 1, jj + 1, kk + 1, e);
                        }
                    }
                }
            }
        }
        let fam = family(ftag);
        // For each paper parameter direction, fit the metric and print the
        // induced connection.
        for i in 1..=fam.nparams {
            let mut target = fam.metric_entries("c");
            // Substitute c_i = 1, others 0.
            let assign: std::collections::HashMap<hamtrio_core::Symbol, Expr> = (1..=fam
                .nparams)
                .map(|j| {
                    (
                        hamtrio_core::Symbol::new(&format!("c{}", j)),
                        if j == i { Expr::one() } else { Expr::zero() },
                    )
                })
                .collect();
            for e in target.iter_mut() {
                *e = e.subst_params(&assign);
            }
            match fit_metric(&sol, &target) {
                None => eprintln!("  c{}: NOT IN SPAN", i),
                Some((_, conn)) => {
                    eprintln!("  c{}:", i);
                    for ii in 0..2 {
                        for jj in 0..2 {
                            for kk in 0..2 {
                                let e = &conn[(ii * 2 + jj) * 2 + kk];
                                if !e.rat().is_zero() {
                                    eprintln!(
                                        "    Gamma[{}{}][{}] = {}",
                                        ii + 1,
                                        jj + 1,
                                        kk + 1,
                                        e
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
