use hamtrio_core::diffop::MatrixDiffOp;
use hamtrio_core::expr::Expr;
use hamtrio_core::geometry;
use hamtrio_core::JetCtx;
use std::time::Instant;

fn main() {
    let ctx = JetCtx::with_cap(2, 40);
    let g = geometry::Metric::sym2(
        Expr::field(1).pow(2).add(&Expr::int(1)),
        Expr::zero(),
        Expr::field(0).pow(2).add(&Expr::int(1)),
    );
    let op = geometry::op_from_metric(&g).unwrap();
    eprintln!("op = {:?}", op);
    let t0 = Instant::now();
    let skew = op.is_skew_adjoint(&ctx).unwrap();
    eprintln!("skew={} in {:?}", skew, t0.elapsed());
    let m = 2;
    // b_psi2 = op . psi2
    let psi2: Vec<Expr> = (0..m).map(|i| Expr::cov(1, i, 0)).collect();
    let t1 = Instant::now();
    let b_psi2 = op.apply(&ctx, &psi2).unwrap();
    eprintln!("apply in {:?}", t1.elapsed());
    for (i, e) in b_psi2.iter().enumerate() {
        eprintln!("  b_psi2[{}] terms={} ", i, e.rat().num().num_terms());
    }
    // directional derivative by hand
    let t2 = Instant::now();
    let mut prolonged: Vec<Vec<Expr>> = Vec::new();
    for xi in &b_psi2 {
        let mut row = vec![xi.clone()];
        row.push(hamtrio_core::jet::total_derivative(&ctx, &row[0]).unwrap());
        prolonged.push(row);
    }
    eprintln!("prolong in {:?}", t2.elapsed());
    let t3 = Instant::now();
    let mut da = MatrixDiffOp::zero(m);
    for i in 0..m {
        for j in 0..m {
            let mut entry = hamtrio_core::diffop::ScalarDiffOp::zero();
            for (ord, a) in op.entry(i, j).terms() {
                let mut acc = Expr::zero();
                for comp in 0..m {
                    for k in 0..=1usize {
                        let dd = a.partial(hamtrio_core::Var::jet(comp, k));
                        if dd.rat().is_zero() {
                            continue;
                        }
                        acc = acc.add(&dd.mul(&prolonged[comp][k]));
                    }
                }
                entry.add_term(ord, acc);
            }
            *da.entry_mut(i, j) = entry;
        }
    }
    eprintln!("DP in {:?}", t3.elapsed());
    // sandwich psi1 . da (psi3)
    let t4 = Instant::now();
    let right: Vec<Expr> = (0..m).map(|i| Expr::cov(2, i, 0)).collect();
    let applied = da.apply(&ctx, &right).unwrap();
    eprintln!("da apply in {:?}", t4.elapsed());
    let t5 = Instant::now();
    let mut acc = Expr::zero();
    for (i, a) in applied.iter().enumerate() {
        acc = acc.add(&Expr::cov(0, i, 0).mul(a));
    }
    eprintln!(
        "sandwich in {:?}: total terms {} / den {}",
        t5.elapsed(),
        acc.rat().num().num_terms(),
        acc.rat().den().num_terms()
    );
    // Decompose the euler pass.
    for k in 0..=2usize {
        let tk = Instant::now();
        let d = acc.partial(hamtrio_core::Var::jet(0, k));
        eprintln!(
            "partial u1_({}) in {:?} terms {} den {}",
            k,
            tk.elapsed(),
            d.rat().num().num_terms(),
            d.rat().den().num_terms()
        );
        let mut cur = d;
        for step in 0..k {
            let ts = Instant::now();
            cur = hamtrio_core::jet::total_derivative(&ctx, &cur).unwrap();
            eprintln!(
                "  Dx step {} in {:?} terms {} den {}",
                step,
                ts.elapsed(),
                cur.rat().num().num_terms(),
                cur.rat().den().num_terms()
            );
        }
    }
    eprintln!("{}", hamtrio_core::poly::gcd_stats::report());
}
