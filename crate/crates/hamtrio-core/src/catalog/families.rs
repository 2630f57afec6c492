//! The four parameter families of first-order operators compatible with a
//! canonical higher-order operator, their quadratic varieties, the branch
//! parameterizations of the variety, and the pencil tables.
//!
//! Metric entries are linear in the parameters; each family also carries
//! the connection of the bracket solve, which off the variety is not the
//! Levi-Civita connection of the metric.

use std::collections::HashMap;

use crate::catalog::CanonicalTag;
use crate::diffop::MatrixDiffOp;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{op_from_metric_connection, Connection, Metric};
use crate::sym::Symbol;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum FamilyTag {
    Th1,
    Th2,
    Th3,
    Th4,
}

impl FamilyTag {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyTag::Th1 => "theorem1",
            FamilyTag::Th2 => "theorem2",
            FamilyTag::Th3 => "theorem3",
            FamilyTag::Th4 => "theorem4",
        }
    }

    pub fn r_tag(&self) -> CanonicalTag {
        match self {
            FamilyTag::Th1 => CanonicalTag::R2,
            FamilyTag::Th2 => CanonicalTag::R3_1,
            FamilyTag::Th3 => CanonicalTag::R3_2,
            FamilyTag::Th4 => CanonicalTag::R3_3,
        }
    }
}

/// A metric family with its bracket connection and variety.
pub struct ParamFamily {
    pub tag: FamilyTag,
    pub nparams: usize,
}

fn p(prefix: &str, i: usize) -> Expr {
    Expr::param(&format!("{}{}", prefix, i))
}

fn u1() -> Expr {
    Expr::field(0)
}

fn u2() -> Expr {
    Expr::field(1)
}

impl ParamFamily {
    /// Metric entries `(g11, g12, g22)` linear in `prefix1..prefixN`.
    pub fn metric_entries(&self, prefix: &str) -> [Expr; 3] {
        let c = |i: usize| p(prefix, i);
        match self.tag {
            FamilyTag::Th1 => [
                c(1).mul(&u1()).add(&c(2)),
                c(3).mul(&u1())
                    .scale(1, 2)
                    .add(&c(1).mul(&u2()).scale(1, 2))
                    .add(&c(5)),
                c(3).mul(&u2()).add(&c(4)),
            ],
            FamilyTag::Th2 => [
                c(1).mul(&u1()).add(&c(2).mul(&u2())).add(&c(3)),
                c(4).mul(&u1()).add(&c(1).mul(&u2())).add(&c(5)),
                c(6).mul(&u1()).add(&c(4).mul(&u2())).add(&c(7)),
            ],
            FamilyTag::Th3 => [
                c(1).mul(&u1()).add(&c(2).mul(&u2())),
                c(4).mul(&u1())
                    .add(&c(3).div(&u1()))
                    .add(&c(2).mul(&u2().pow(2)).div(&u1().scale(2, 1))),
                c(4).mul(&u2())
                    .scale(2, 1)
                    .add(&c(6).div(&u1()))
                    .sub(&c(1).mul(&u2().pow(2)).div(&u1()))
                    .add(&c(5)),
            ],
            FamilyTag::Th4 => [
                c(1).mul(&u1()).add(&c(2).mul(&u2())).add(&c(3)),
                c(4).mul(&u1())
                    .sub(&c(2).div(&u1().scale(2, 1)))
                    .add(&c(3).mul(&u2()).div(&u1()))
                    .add(&c(2).mul(&u2().pow(2)).div(&u1().scale(2, 1))),
                c(4).mul(&u2())
                    .scale(2, 1)
                    .add(&c(1).div(&u1()))
                    .add(&c(5).mul(&u2()).div(&u1()))
                    .sub(&c(1).mul(&u2().pow(2)).div(&u1()))
                    .add(&c(6)),
            ],
        }
    }

    /// Connection entries `Gamma^(ij)_k` (index `[i][j][k]`, 8 entries)
    /// linear in the parameters: the output of the bracket solve, frozen.
    pub fn connection_entries(&self, prefix: &str) -> Vec<Expr> {
        connection_raw(self.tag, prefix)
    }

    /// Quadratic variety generators.
    pub fn variety(&self, prefix: &str) -> Vec<Expr> {
        let c = |i: usize| p(prefix, i);
        match self.tag {
            FamilyTag::Th1 => vec![],
            FamilyTag::Th2 => vec![
                c(1).mul(&c(4)).sub(&c(2).mul(&c(6))),
                c(3).mul(&c(4)).sub(&c(7).mul(&c(2))),
                c(3).mul(&c(6)).sub(&c(1).mul(&c(7))),
            ],
            FamilyTag::Th3 => vec![
                c(2).mul(&c(6)).add(&c(1).mul(&c(3)).scale(2, 1)),
                c(2).mul(&c(5)),
                c(1).mul(&c(5)),
            ],
            FamilyTag::Th4 => vec![
                c(2).mul(&c(5)).add(&c(1).mul(&c(3)).scale(2, 1)),
                c(2).mul(&c(6)).sub(&c(3).mul(&c(4)).scale(2, 1)),
                c(1).mul(&c(6)).add(&c(4).mul(&c(5))),
            ],
        }
    }

    pub fn param_symbols(&self, prefix: &str) -> Vec<Symbol> {
        (1..=self.nparams)
            .map(|i| Symbol::new(&format!("{}{}", prefix, i)))
            .collect()
    }

    /// Number of variety branches in the theorem's case list.
    pub fn branch_count(&self) -> usize {
        match self.tag {
            FamilyTag::Th1 => 1,
            FamilyTag::Th2 => 4,
            FamilyTag::Th3 => 3,
            FamilyTag::Th4 => 5,
        }
    }

    /// Substitutions parameterizing a variety branch (1-based), written on
    /// parameters `prefix1..prefixN`.
    pub fn branch_subst(&self, branch: usize, prefix: &str) -> Result<Vec<(Symbol, Expr)>> {
        let c = |i: usize| p(prefix, i);
        let s = |i: usize| Symbol::new(&format!("{}{}", prefix, i));
        let subs: Vec<(Symbol, Expr)> = match (self.tag, branch) {
            (FamilyTag::Th1, 1) => vec![],
            (FamilyTag::Th2, 1) => vec![
                (s(6), c(4).mul(&c(1)).div(&c(2))),
                (s(7), c(3).mul(&c(4)).div(&c(2))),
            ],
            (FamilyTag::Th2, 2) => vec![
                (s(2), Expr::zero()),
                (s(6), c(7).mul(&c(1)).div(&c(3))),
                (s(4), Expr::zero()),
            ],
            (FamilyTag::Th2, 3) => vec![
                (s(2), Expr::zero()),
                (s(3), Expr::zero()),
                (s(1), Expr::zero()),
            ],
            (FamilyTag::Th2, 4) => vec![
                (s(2), Expr::zero()),
                (s(3), Expr::zero()),
                (s(4), Expr::zero()),
                (s(7), Expr::zero()),
            ],
            (FamilyTag::Th3, 1) => vec![
                (s(5), Expr::zero()),
                (s(3), c(2).mul(&c(6)).div(&c(1).scale(2, 1)).neg()),
            ],
            (FamilyTag::Th3, 2) => vec![
                (s(1), Expr::zero()),
                (s(5), Expr::zero()),
                (s(6), Expr::zero()),
            ],
            (FamilyTag::Th3, 3) => vec![(s(1), Expr::zero()), (s(2), Expr::zero())],
            (FamilyTag::Th4, 1) => vec![
                (s(5), c(1).mul(&c(3)).scale(2, 1).div(&c(2)).neg()),
                (s(6), c(3).mul(&c(4)).scale(2, 1).div(&c(2))),
            ],
            (FamilyTag::Th4, 2) => vec![
                (s(2), Expr::zero()),
                (s(1), Expr::zero()),
                (s(4), Expr::zero()),
            ],
            (FamilyTag::Th4, 3) => vec![
                (s(2), Expr::zero()),
                (s(3), Expr::zero()),
                (s(1), c(4).mul(&c(5)).div(&c(6)).neg()),
            ],
            (FamilyTag::Th4, 4) => vec![
                (s(2), Expr::zero()),
                (s(3), Expr::zero()),
                (s(6), Expr::zero()),
                (s(4), Expr::zero()),
            ],
            (FamilyTag::Th4, 5) => vec![
                (s(2), Expr::zero()),
                (s(3), Expr::zero()),
                (s(5), Expr::zero()),
                (s(6), Expr::zero()),
            ],
            _ => {
                return Err(Error::Domain(format!(
                    "{} has no branch {}",
                    self.tag.name(),
                    branch
                )))
            }
        };
        Ok(subs)
    }

    /// Metric, bracket connection and first-order operator at a parameter
    /// assignment (missing parameters stay symbolic).
    pub fn instantiate(
        &self,
        values: &HashMap<Symbol, Expr>,
    ) -> (Metric, Connection, MatrixDiffOp) {
        let m = self.metric_entries("c");
        let g = Metric::sym2(
            m[0].subst_params(values),
            m[1].subst_params(values),
            m[2].subst_params(values),
        );
        let raw = self.connection_entries("c");
        let mut conn = Connection::zero(2);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    *conn.entry_mut(i, j, k) = raw[(i * 2 + j) * 2 + k].subst_params(values);
                }
            }
        }
        let op = op_from_metric_connection(&g, &conn);
        (g, conn, op)
    }

    /// True when all variety polynomials vanish at the assignment.
    pub fn on_variety(&self, values: &HashMap<Symbol, Expr>) -> Result<bool> {
        for q in self.variety("c") {
            if !q.subst_params(values).try_is_zero()? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// The family attached to each theorem.
pub fn family(tag: FamilyTag) -> ParamFamily {
    let nparams = match tag {
        FamilyTag::Th1 => 5,
        FamilyTag::Th2 => 7,
        FamilyTag::Th3 => 6,
        FamilyTag::Th4 => 6,
    };
    ParamFamily { tag, nparams }
}

/// Bracket-solve connections, frozen from the ansatz output; the golden
/// tests re-derive them and assert agreement.
fn connection_raw(tag: FamilyTag, prefix: &str) -> Vec<Expr> {
    let c = |i: usize| p(prefix, i);
    let mut gam = vec![Expr::zero(); 8];
    // Index helper: [i][j][k] with 0-based indices.
    let at = |i: usize, j: usize, k: usize| (i * 2 + j) * 2 + k;
    match tag {
        FamilyTag::Th1 => {
            gam[at(0, 0, 0)] = c(1).scale(1, 2);
            gam[at(1, 0, 1)] = c(1).scale(1, 2);
            gam[at(0, 1, 0)] = c(3).scale(1, 2);
            gam[at(1, 1, 1)] = c(3).scale(1, 2);
        }
        FamilyTag::Th2 => {
            gam[at(0, 0, 0)] = c(1).scale(1, 2);
            gam[at(0, 1, 1)] = c(1).scale(1, 2);
            gam[at(1, 0, 1)] = c(1).scale(1, 2);
            gam[at(0, 0, 1)] = c(2).scale(1, 2);
            gam[at(0, 1, 0)] = c(4).scale(1, 2);
            gam[at(1, 0, 0)] = c(4).scale(1, 2);
            gam[at(1, 1, 1)] = c(4).scale(1, 2);
            gam[at(1, 1, 0)] = c(6).scale(1, 2);
        }
        FamilyTag::Th3 => {
            let u1sq = u1().pow(2);
            gam[at(0, 0, 0)] = c(1).scale(1, 2);
            gam[at(0, 1, 1)] = c(1).scale(-1, 2);
            gam[at(1, 0, 1)] = c(1).scale(1, 2);
            gam[at(1, 1, 0)] = c(1)
                .mul(&u2().pow(2))
                .div(&u1sq.scale(2, 1))
                .sub(&c(6).div(&u1sq.scale(2, 1)));
            gam[at(1, 1, 1)] = c(1).mul(&u2()).div(&u1()).neg().add(&c(4));
            gam[at(0, 0, 1)] = c(2).scale(1, 2);
            gam[at(1, 0, 0)] = c(2)
                .mul(&u2().pow(2))
                .div(&u1sq.scale(2, 1))
                .neg()
                .sub(&c(3).div(&u1sq));
            gam[at(1, 0, 1)] = gam[at(1, 0, 1)].add(&c(2).mul(&u2()).div(&u1()));
            gam[at(0, 1, 0)] = c(4);
        }
        FamilyTag::Th4 => {
            let u1sq = u1().pow(2);
            gam[at(0, 0, 0)] = c(1).scale(1, 2);
            gam[at(0, 1, 1)] = c(1).scale(-1, 2);
            gam[at(1, 0, 1)] = c(1).scale(1, 2);
            gam[at(1, 1, 0)] = c(1)
                .mul(&u2().pow(2).sub(&Expr::one()))
                .div(&u1sq.scale(2, 1))
                .sub(&c(5).mul(&u2()).div(&u1sq.scale(2, 1)));
            gam[at(1, 1, 1)] = c(1)
                .mul(&u2())
                .div(&u1())
                .neg()
                .add(&c(4))
                .add(&c(5).div(&u1().scale(2, 1)));
            gam[at(0, 0, 1)] = c(2).scale(1, 2);
            gam[at(1, 0, 0)] = c(2)
                .mul(&Expr::one().sub(&u2().pow(2)))
                .div(&u1sq.scale(2, 1))
                .sub(&c(3).mul(&u2()).div(&u1sq));
            gam[at(1, 0, 1)] = gam[at(1, 0, 1)]
                .add(&c(2).mul(&u2()).div(&u1()))
                .add(&c(3).div(&u1()));
            gam[at(0, 1, 0)] = c(4);
        }
    }
    gam
}

/// One row of a pencil table: which branches the endpoints lie on and the
/// alternative constraint sets under which `g - lambda h` is flat.
pub struct PencilRule {
    pub label: &'static str,
    pub g_branch: usize,
    pub h_branch: usize,
    /// Each alternative is a list of substitutions `(param, value)`; the
    /// row passes under each alternative separately.
    pub alternatives: Vec<Vec<(Symbol, Expr)>>,
    /// Rows the theorem explicitly excludes (never flat).
    pub excluded: bool,
}

fn rule(
    label: &'static str,
    g_branch: usize,
    h_branch: usize,
    alternatives: Vec<Vec<(Symbol, Expr)>>,
) -> PencilRule {
    PencilRule {
        label,
        g_branch,
        h_branch,
        alternatives,
        excluded: false,
    }
}

fn excluded(label: &'static str, g_branch: usize, h_branch: usize) -> PencilRule {
    PencilRule {
        label,
        g_branch,
        h_branch,
        alternatives: vec![vec![]],
        excluded: true,
    }
}

fn sd(i: usize) -> Symbol {
    Symbol::new(&format!("d{}", i))
}

fn sc(i: usize) -> Symbol {
    Symbol::new(&format!("c{}", i))
}

fn cc(i: usize) -> Expr {
    p("c", i)
}

fn dd(i: usize) -> Expr {
    p("d", i)
}

/// The pencil table of a theorem: every listed case `g_(lambda,kl)` with
/// its constraints, plus the explicitly excluded cases.
pub fn pencil_table(tag: FamilyTag) -> Vec<PencilRule> {
    match tag {
        FamilyTag::Th1 => vec![],
        FamilyTag::Th2 => vec![
            rule(
                "g_lambda_11",
                1,
                1,
                vec![
                    vec![(sc(4), dd(4).mul(&cc(2)).div(&dd(2)))],
                    vec![
                        (sd(3), dd(2).mul(&cc(3)).div(&cc(2))),
                        (sc(1), dd(1).mul(&cc(2)).div(&dd(2))),
                    ],
                ],
            ),
            rule(
                "g_lambda_12",
                1,
                2,
                vec![vec![(sd(7), dd(3).mul(&cc(4)).div(&cc(2)))]],
            ),
            rule(
                "g_lambda_13",
                1,
                3,
                vec![vec![
                    (sd(6), dd(4).mul(&cc(1)).div(&cc(2))),
                    (sd(7), dd(4).mul(&cc(3)).div(&cc(2))),
                ]],
            ),
            rule(
                "g_lambda_14",
                1,
                4,
                vec![vec![(sd(6), cc(4).mul(&dd(1)).div(&cc(2)))]],
            ),
            rule(
                "g_lambda_22",
                2,
                2,
                vec![
                    vec![(sd(7), dd(3).mul(&cc(7)).div(&cc(3)))],
                    vec![(sd(1), dd(3).mul(&cc(1)).div(&cc(3)))],
                ],
            ),
            rule(
                "g_lambda_23",
                2,
                3,
                vec![vec![
                    (sd(4), Expr::zero()),
                    (sd(6), dd(7).mul(&cc(1)).div(&cc(3))),
                ]],
            ),
            rule(
                "g_lambda_24",
                2,
                4,
                vec![vec![(sd(6), cc(7).mul(&dd(1)).div(&cc(3)))]],
            ),
            rule("g_lambda_33", 3, 3, vec![vec![]]),
            rule(
                "g_lambda_34",
                3,
                4,
                vec![vec![(sc(4), Expr::zero()), (sc(7), Expr::zero())]],
            ),
            rule("g_lambda_44", 4, 4, vec![vec![]]),
        ],
        FamilyTag::Th3 => vec![
            rule(
                "g_lambda_11",
                1,
                1,
                vec![
                    vec![(sd(6), dd(1).mul(&cc(6)).div(&cc(1)))],
                    vec![(sd(2), dd(1).mul(&cc(2)).div(&cc(1)))],
                ],
            ),
            rule(
                "g_lambda_12",
                1,
                2,
                vec![vec![(sd(3), dd(2).mul(&cc(6)).div(&cc(1).scale(2, 1)).neg())]],
            ),
            rule(
                "g_lambda_13",
                1,
                3,
                vec![vec![
                    (sd(3), dd(6).mul(&cc(2)).div(&cc(1).scale(2, 1)).neg()),
                    (sd(5), Expr::zero()),
                ]],
            ),
            rule("g_lambda_22", 2, 2, vec![vec![]]),
            rule(
                "g_lambda_23",
                2,
                3,
                vec![vec![(sd(5), Expr::zero()), (sd(6), Expr::zero())]],
            ),
            rule("g_lambda_33", 3, 3, vec![vec![]]),
        ],
        FamilyTag::Th4 => vec![
            rule(
                "g_lambda_11",
                1,
                1,
                vec![
                    vec![(sd(3), dd(2).mul(&cc(3)).div(&cc(2)))],
                    vec![
                        (sd(1), dd(2).mul(&cc(1)).div(&cc(2))),
                        (sd(4), dd(2).mul(&cc(4)).div(&cc(2))),
                    ],
                ],
            ),
            rule(
                "g_lambda_12",
                1,
                2,
                vec![vec![
                    (sd(5), dd(3).mul(&cc(1)).scale(2, 1).div(&cc(2)).neg()),
                    (sd(6), dd(3).mul(&cc(4)).scale(2, 1).div(&cc(2))),
                ]],
            ),
            rule(
                "g_lambda_13",
                1,
                3,
                vec![vec![(sd(6), dd(4).mul(&cc(3)).div(&cc(2)))]],
            ),
            rule(
                "g_lambda_14",
                1,
                4,
                vec![vec![(sd(5), dd(4).mul(&cc(3)).div(&cc(2)).neg())]],
            ),
            rule("g_lambda_15", 1, 5, vec![vec![(sc(3), Expr::zero())]]),
            rule("g_lambda_22", 2, 2, vec![vec![]]),
            excluded("g_lambda_23", 2, 3),
            excluded("g_lambda_24", 2, 4),
            excluded("g_lambda_25", 2, 5),
            rule(
                "g_lambda_33",
                3,
                3,
                vec![
                    vec![(sd(5), Expr::zero()), (sd(6), Expr::zero())],
                    vec![(sd(5), dd(6).mul(&cc(5)).div(&cc(6)))],
                    vec![(sd(4), dd(6).mul(&cc(4)).div(&cc(6)))],
                ],
            ),
            rule(
                "g_lambda_34",
                3,
                4,
                vec![vec![(sd(1), dd(5).mul(&cc(4)).div(&cc(6)).neg())]],
            ),
            rule(
                "g_lambda_35",
                3,
                5,
                vec![vec![(sd(1), dd(4).mul(&cc(5)).div(&cc(6)).neg())]],
            ),
            rule("g_lambda_44", 4, 4, vec![vec![]]),
            rule("g_lambda_45", 4, 5, vec![vec![(sd(4), Expr::zero())]]),
            rule("g_lambda_55", 5, 5, vec![vec![]]),
        ],
    }
}
