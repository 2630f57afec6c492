//! Executable checks behind the theorem claims: the family satisfies the
//! bracket condition with symbolic parameters, the Levi-Civita residuals
//! span exactly the stated variety, flatness holds on every branch, and
//! the pencil tables hold case by case.

use std::collections::HashMap;

use num_rational::BigRational;

use crate::catalog::families::{family, pencil_table, FamilyTag, PencilRule};
use crate::catalog::{ansatz_search, canonical, fit_metric};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{self, Metric};
use crate::linalg;
use crate::poisson;
use crate::poly::{Monomial, Poly};
use crate::sym::{JetCtx, Symbol, Var};

/// Outcome of one named check.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// `[P1(c), R] = 0` with fully symbolic parameters.
pub fn family_bracket_vanishes(tag: FamilyTag) -> Result<bool> {
    let fam = family(tag);
    let (_, _, op) = fam.instantiate(&HashMap::new());
    let r = canonical(tag.r_tag());
    poisson::are_compatible(&JetCtx::new(2), &op, &r)
}

/// Quadratic polynomials in the parameters generated by the Levi-Civita
/// residuals of the symbolic family.
pub fn lc_residual_quadratics(tag: FamilyTag) -> Vec<Poly> {
    let fam = family(tag);
    let (g, conn, _) = fam.instantiate(&HashMap::new());
    let residuals = geometry::levi_civita_residuals(&g, &conn);
    let mut out: Vec<Poly> = Vec::new();
    for r in residuals {
        if r.rat().is_zero() {
            continue;
        }
        // Group numerator terms by their u-monomial part; each group is a
        // polynomial in the parameters that must vanish.
        let mut groups: HashMap<Monomial, Poly> = HashMap::new();
        for (m, c) in r.rat().num().terms() {
            let mut upart = Monomial::one();
            let mut ppart = Monomial::one();
            for (v, e) in m.vars() {
                if v.is_param() {
                    ppart = ppart.mul(&Monomial::var(v).pow_m(e));
                } else {
                    upart = upart.mul(&Monomial::var(v).pow_m(e));
                }
            }
            groups
                .entry(upart)
                .or_insert_with(Poly::zero)
                .add_term(ppart, c.clone());
        }
        for (_, q) in groups {
            if !q.is_zero() {
                out.push(q.primitive_part());
            }
        }
    }
    out.sort_by(|a, b| format!("{:?}", a).cmp(&format!("{:?}", b)));
    out.dedup();
    out
}

/// Rank of a set of polynomials viewed as vectors over their monomials.
fn poly_span_rank(polys: &[Poly]) -> usize {
    let mut monomials: Vec<Monomial> = Vec::new();
    for p in polys {
        for (m, _) in p.terms() {
            if !monomials.contains(m) {
                monomials.push(m.clone());
            }
        }
    }
    let rows: Vec<Vec<BigRational>> = polys
        .iter()
        .map(|p| {
            monomials
                .iter()
                .map(|m| {
                    p.terms()
                        .find(|(mm, _)| *mm == m)
                        .map(|(_, c)| c.clone())
                        .unwrap_or_else(|| BigRational::from_integer(0.into()))
                })
                .collect()
        })
        .collect();
    linalg::rank(rows)
}

/// The residual ideal generators span exactly the stated variety (equal
/// spans of quadratics up to invertible linear combination).
pub fn variety_matches_residuals(tag: FamilyTag) -> bool {
    let fam = family(tag);
    let residuals = lc_residual_quadratics(tag);
    let variety: Vec<Poly> = fam
        .variety("c")
        .iter()
        .map(|e| {
            debug_assert!(e.rat().den().is_one());
            e.rat().num().primitive_part()
        })
        .collect();
    if variety.is_empty() {
        return residuals.is_empty();
    }
    let ra = poly_span_rank(&residuals);
    let rb = poly_span_rank(&variety);
    let mut both = residuals.clone();
    both.extend(variety.clone());
    let rc = poly_span_rank(&both);
    ra == rb && rb == rc
}

/// Branch substitutions applied to the family metric, leaving the
/// remaining parameters symbolic.
pub fn branch_metric(tag: FamilyTag, branch: usize, prefix: &str) -> Result<Metric> {
    let fam = family(tag);
    let subs = fam.branch_subst(branch, prefix)?;
    let assign: HashMap<Symbol, Expr> = subs.into_iter().collect();
    let entries = fam.metric_entries(prefix);
    Ok(Metric::sym2(
        entries[0].subst_params(&assign),
        entries[1].subst_params(&assign),
        entries[2].subst_params(&assign),
    ))
}

/// Flatness on every branch with symbolic parameters.
pub fn branches_flat(tag: FamilyTag) -> Result<Vec<CheckOutcome>> {
    let fam = family(tag);
    let mut out = Vec::new();
    for b in 1..=fam.branch_count() {
        let g = branch_metric(tag, b, "c")?;
        let flat = geometry::is_flat(&g)?;
        out.push(outcome(
            format!("{} branch {} metric flat", tag.name(), b),
            flat,
            String::new(),
        ));
    }
    Ok(out)
}

/// Builds the `(g, h)` pair of a pencil rule under one alternative, all
/// remaining parameters symbolic.
pub fn pencil_pair(tag: FamilyTag, rule: &PencilRule, alt: usize) -> Result<(Metric, Metric)> {
    let g0 = branch_metric(tag, rule.g_branch, "c")?;
    let h0 = branch_metric(tag, rule.h_branch, "d")?;
    let assign: HashMap<Symbol, Expr> = rule.alternatives[alt].iter().cloned().collect();
    let g = g0.map(&|e| e.subst_params(&assign));
    let h = h0.map(&|e| e.subst_params(&assign));
    Ok((g, h))
}

/// Verifies one pencil rule: every alternative passes the flat-pencil
/// check with symbolic parameters.
pub fn verify_pencil_rule(tag: FamilyTag, rule: &PencilRule) -> Result<CheckOutcome> {
    if rule.excluded {
        return verify_excluded_rule(tag, rule);
    }
    for alt in 0..rule.alternatives.len() {
        let (g, h) = pencil_pair(tag, rule, alt)?;
        let (ok, diag) = geometry::flat_pencil_check(&g, &h)?;
        if !ok {
            return Ok(outcome(
                format!("{} {}", tag.name(), rule.label),
                false,
                format!("alternative {} failed: {:?}", alt, diag),
            ));
        }
    }
    Ok(outcome(
        format!("{} {}", tag.name(), rule.label),
        true,
        String::new(),
    ))
}

/// A generic numeric point for the free parameters of a pencil pair.
fn numeric_assign(params: &[Symbol], salt: u64) -> HashMap<Symbol, Expr> {
    params
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let v = 2 + ((i as i64 * 3 + salt as i64 * 5) % 7);
            (*s, Expr::int(v))
        })
        .collect()
}

fn remaining_params(metrics: &[&Metric]) -> Vec<Symbol> {
    let mut out: Vec<Symbol> = Vec::new();
    for m in metrics {
        for i in 0..2 {
            for j in 0..2 {
                for v in m.entry(i, j).all_vars() {
                    if let Some(s) = v.as_param() {
                        if !out.contains(&s) {
                            out.push(s);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Excluded rows must fail at a generic numeric point.
fn verify_excluded_rule(tag: FamilyTag, rule: &PencilRule) -> Result<CheckOutcome> {
    let g0 = branch_metric(tag, rule.g_branch, "c")?;
    let h0 = branch_metric(tag, rule.h_branch, "d")?;
    let params = remaining_params(&[&g0, &h0]);
    for salt in 0..8 {
        let assign = numeric_assign(&params, salt);
        let g = g0.map(&|e| e.subst_params(&assign));
        let h = h0.map(&|e| e.subst_params(&assign));
        match geometry::flat_pencil_check(&g, &h) {
            Ok((ok, _)) => {
                return Ok(outcome(
                    format!("{} {} excluded", tag.name(), rule.label),
                    !ok,
                    if ok {
                        "pencil unexpectedly flat at generic point".into()
                    } else {
                        String::new()
                    },
                ));
            }
            Err(_) => continue, // degenerate point, retry
        }
    }
    Err(Error::Undecided(format!(
        "no usable generic point for {} {}",
        tag.name(),
        rule.label
    )))
}

/// For a constrained rule, a generic point violating the constraint must
/// fail the check (rows with no constraints are skipped).
pub fn verify_rule_fails_off_constraint(
    tag: FamilyTag,
    rule: &PencilRule,
) -> Result<Option<CheckOutcome>> {
    if rule.excluded || rule.alternatives.iter().all(|a| a.is_empty()) {
        return Ok(None);
    }
    let g0 = branch_metric(tag, rule.g_branch, "c")?;
    let h0 = branch_metric(tag, rule.h_branch, "d")?;
    let params = remaining_params(&[&g0, &h0]);
    // Also give values to the constrained parameters themselves: pick
    // values generically, deliberately not solving the constraints.
    let mut all = params.clone();
    for alts in &rule.alternatives {
        for (s, _) in alts {
            if !all.contains(s) {
                all.push(*s);
            }
        }
    }
    'salt: for salt in 0..8 {
        let assign = numeric_assign(&all, salt);
        // Every alternative must actually be violated at this point.
        for alts in &rule.alternatives {
            let mut violated = false;
            for (s, rhs) in alts {
                let lhs = Expr::var(Var::param(*s)).subst_params(&assign);
                let rhs_val = rhs.subst_params(&assign);
                if !lhs.sub(&rhs_val).try_is_zero()? {
                    violated = true;
                    break;
                }
            }
            if !violated {
                continue 'salt;
            }
        }
        let g = g0.map(&|e| e.subst_params(&assign));
        let h = h0.map(&|e| e.subst_params(&assign));
        match geometry::flat_pencil_check(&g, &h) {
            Ok((ok, _)) => {
                return Ok(Some(outcome(
                    format!("{} {} off-constraint", tag.name(), rule.label),
                    !ok,
                    if ok {
                        "pencil flat despite violated constraints".into()
                    } else {
                        String::new()
                    },
                )));
            }
            Err(_) => continue,
        }
    }
    Err(Error::Undecided(format!(
        "no usable off-constraint point for {} {}",
        tag.name(),
        rule.label
    )))
}

/// Golden check: the ansatz solve reproduces the frozen family (same
/// dimension, same span, same connections).
pub fn ansatz_matches_family(tag: FamilyTag) -> Result<CheckOutcome> {
    let fam = family(tag);
    let r = canonical(tag.r_tag());
    let sol = ansatz_search(&r)?;
    if sol.dimension() != fam.nparams {
        return Ok(outcome(
            format!("{} ansatz", tag.name()),
            false,
            format!(
                "solution dimension {} but the family has {} parameters",
                sol.dimension(),
                fam.nparams
            ),
        ));
    }
    // Each paper direction must lie in the span with matching connection.
    for i in 1..=fam.nparams {
        let assign: HashMap<Symbol, Expr> = (1..=fam.nparams)
            .map(|j| {
                (
                    Symbol::new(&format!("c{}", j)),
                    if j == i { Expr::one() } else { Expr::zero() },
                )
            })
            .collect();
        let mut target = fam.metric_entries("c");
        for e in target.iter_mut() {
            *e = e.subst_params(&assign);
        }
        let Some((_, conn)) = fit_metric(&sol, &target) else {
            return Ok(outcome(
                format!("{} ansatz", tag.name()),
                false,
                format!("paper direction c{} not in the ansatz span", i),
            ));
        };
        let frozen: Vec<Expr> = fam
            .connection_entries("c")
            .iter()
            .map(|e| e.subst_params(&assign))
            .collect();
        for (a, b) in conn.iter().zip(&frozen) {
            if !a.sub(b).try_is_zero()? {
                return Ok(outcome(
                    format!("{} ansatz", tag.name()),
                    false,
                    format!("connection mismatch in direction c{}", i),
                ));
            }
        }
    }
    Ok(outcome(format!("{} ansatz", tag.name()), true, String::new()))
}

/// Full verification of one theorem: bracket, residual ideal, branch
/// flatness, pencil table, off-constraint failures.
pub fn verify_theorem(tag: FamilyTag, with_ansatz: bool) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    out.push(outcome(
        format!("{} bracket [P1(c), R] = 0", tag.name()),
        family_bracket_vanishes(tag)?,
        String::new(),
    ));
    out.push(outcome(
        format!("{} residual ideal = stated variety", tag.name()),
        variety_matches_residuals(tag),
        String::new(),
    ));
    out.extend(branches_flat(tag)?);
    for rule in pencil_table(tag) {
        out.push(verify_pencil_rule(tag, &rule)?);
        if let Some(check) = verify_rule_fails_off_constraint(tag, &rule)? {
            out.push(check);
        }
    }
    if with_ansatz {
        out.push(ansatz_matches_family(tag)?);
    }
    Ok(out)
}
