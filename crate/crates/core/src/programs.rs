//! Building blocks shared by the checkers and solvers that phrase fairness
//! conditions as linear programs over price matrices.

use crate::error::{Error, Result};
use crate::lp::{self, LinExpr, LinearProgram, LpOutcome, Relation, VarKind};
use crate::model::{Assignment, Instance, PriceMatrix};
use crate::money::Money;

/// A price matrix whose entries are affine in the program's variables.
pub(crate) type PriceExprs = Vec<Vec<LinExpr>>;

/// `pattern[i][j]`: whether apartment `j` is assumed to be strictly preferred
/// by player `i` to the chosen apartment.
pub(crate) type Pattern = Vec<Vec<bool>>;

pub(crate) fn price_vars(lp: &mut LinearProgram, prefix: &str, inst: &Instance) -> PriceExprs {
    price_vars_of_kind(lp, prefix, inst, VarKind::Free)
}

pub(crate) fn price_vars_of_kind(lp: &mut LinearProgram, prefix: &str, inst: &Instance, kind: VarKind) -> PriceExprs {
    (0..inst.apartments())
        .map(|j| {
            (0..inst.players())
                .map(|k| LinExpr::var(lp.add_var(format!("{prefix}[{j}][{k}]"), kind)))
                .collect()
        })
        .collect()
}

pub(crate) fn constant_prices(p: &PriceMatrix) -> PriceExprs {
    p.rows()
        .iter()
        .map(|row| row.iter().map(|x| LinExpr::constant(x.clone())).collect())
        .collect()
}

pub(crate) fn read_prices(prices: &PriceExprs, point: &[Money]) -> PriceMatrix {
    PriceMatrix::new(
        prices
            .iter()
            .map(|row| row.iter().map(|e| e.eval(point)).collect())
            .collect(),
    )
}

pub(crate) fn room_utility(inst: &Instance, prices: &PriceExprs, i: usize, j: usize, k: usize) -> LinExpr {
    &LinExpr::constant(inst.value(i, j, k).clone()) - &prices[j][k]
}

pub(crate) fn utility(inst: &Instance, asg: &Assignment, prices: &PriceExprs, i: usize, j: usize) -> LinExpr {
    room_utility(inst, prices, i, j, asg.room(j, i))
}

pub(crate) fn rent_rows(lp: &mut LinearProgram, inst: &Instance, prices: &PriceExprs, tag: &str) {
    for (j, row) in prices.iter().enumerate() {
        let total: LinExpr = row.iter().cloned().sum();
        lp.constrain(
            format!("{tag} rent {j}"),
            &total,
            Relation::Eq,
            &LinExpr::constant(inst.rent(j).clone()),
        );
    }
}

/// No player envies another within any single apartment.
pub(crate) fn individually_ef_rows(
    lp: &mut LinearProgram,
    inst: &Instance,
    asg: &Assignment,
    prices: &PriceExprs,
    tag: &str,
) {
    let n = inst.players();
    for j in 0..inst.apartments() {
        for i in 0..n {
            let own = utility(inst, asg, prices, i, j);
            for other in (0..n).filter(|&o| o != i) {
                let theirs = room_utility(inst, prices, i, j, asg.room(j, other));
                lp.constrain(format!("{tag} ef {i}/{other} in {j}"), &own, Relation::Ge, &theirs);
            }
        }
    }
}

/// Every player weakly prefers `chosen` to every other apartment.
pub(crate) fn consensus_rows(
    lp: &mut LinearProgram,
    inst: &Instance,
    asg: &Assignment,
    prices: &PriceExprs,
    chosen: usize,
) {
    for i in 0..inst.players() {
        let at_chosen = utility(inst, asg, prices, i, chosen);
        for j in (0..inst.apartments()).filter(|&j| j != chosen) {
            let elsewhere = utility(inst, asg, prices, i, j);
            lp.constrain(
                format!("consensus {i} in {chosen} over {j}"),
                &at_chosen,
                Relation::Ge,
                &elsewhere,
            );
        }
    }
}

/// Every player pays the same total under `p` and `q`.
pub(crate) fn equal_totals_rows(
    lp: &mut LinearProgram,
    inst: &Instance,
    asg: &Assignment,
    p: &PriceExprs,
    q: &PriceExprs,
) {
    for i in 0..inst.players() {
        let total = |m: &PriceExprs| -> LinExpr { (0..inst.apartments()).map(|j| m[j][asg.room(j, i)].clone()).sum() };
        lp.constrain(format!("totals {i}"), &total(p), Relation::Eq, &total(q));
    }
}

/// How much more player `i` gets from apartment `j` than from `chosen`.
fn gain(inst: &Instance, asg: &Assignment, prices: &PriceExprs, i: usize, j: usize, chosen: usize) -> LinExpr {
    &utility(inst, asg, prices, i, j) - &utility(inst, asg, prices, i, chosen)
}

/// The cap on every player's price decrease in the chosen apartment, with
/// the preferred sets frozen to `pattern`. When `closed` is set the pattern
/// is also enforced on `q`, which makes any feasible point a certificate.
#[allow(clippy::too_many_arguments)]
pub(crate) fn strong_bound_rows(
    lp: &mut LinearProgram,
    inst: &Instance,
    asg: &Assignment,
    p: &PriceExprs,
    q: &PriceExprs,
    chosen: usize,
    pattern: &Pattern,
    closed: bool,
) {
    let zero = LinExpr::default();
    for (i, prefers) in pattern.iter().enumerate() {
        let preferred: Vec<usize> = (0..inst.apartments()).filter(|&j| j != chosen && prefers[j]).collect();
        if closed {
            for j in (0..inst.apartments()).filter(|&j| j != chosen) {
                let g = gain(inst, asg, q, i, j, chosen);
                let rel = if prefers[j] { Relation::Ge } else { Relation::Le };
                lp.constrain(format!("pattern {i} {j}"), &g, rel, &zero);
            }
        }
        let share = Money::ratio(1, preferred.len() as i64 + 1);
        let excess: LinExpr = preferred.iter().map(|&j| gain(inst, asg, q, i, j, chosen)).sum();
        let room = asg.room(chosen, i);
        let floor = &q[chosen][room] - &excess.scale(&share);
        lp.constrain(format!("strong bound {i}"), &p[chosen][room], Relation::Ge, &floor);
    }
}

/// Apartments each player strictly prefers to `chosen` under `q`.
pub(crate) fn strict_pattern(inst: &Instance, asg: &Assignment, q: &PriceMatrix, chosen: usize) -> Pattern {
    let util = |i: usize, j: usize| {
        let k = asg.room(j, i);
        inst.value(i, j, k) - q.price(j, k)
    };
    (0..inst.players())
        .map(|i| {
            let base = util(i, chosen);
            (0..inst.apartments())
                .map(|j| j != chosen && util(i, j) > base)
                .collect()
        })
        .collect()
}

/// Envy-free prices for one apartment maximizing the smallest utility.
pub(crate) fn maximin_ef_prices(inst: &Instance, asg: &Assignment, apartment: usize) -> Result<Vec<Money>> {
    let single = inst.select_apartments(&[apartment])?;
    let single_asg = Assignment::new(vec![asg.apartment(apartment).to_vec()])?;
    let mut lp = LinearProgram::new();
    let q = price_vars(&mut lp, "q", &single);
    let z = LinExpr::var(lp.add_var("z", VarKind::Free));
    rent_rows(&mut lp, &single, &q, "q");
    individually_ef_rows(&mut lp, &single, &single_asg, &q, "q");
    for i in 0..single.players() {
        lp.constrain(
            format!("floor {i}"),
            &z,
            Relation::Le,
            &utility(&single, &single_asg, &q, i, 0),
        );
    }
    lp.maximize_expr(&z);
    match lp::solve(&lp)? {
        LpOutcome::Optimal { point, .. } => Ok(read_prices(&q, &point).rows()[0].clone()),
        other => Err(Error::Inconsistent(format!(
            "single-apartment envy-free prices must exist for a welfare-maximizing assignment, got {other:?}"
        ))),
    }
}

/// Per-apartment maximin envy-free prices for the whole profile.
pub(crate) fn maximin_ef_matrix(inst: &Instance, asg: &Assignment) -> Result<PriceMatrix> {
    let rows = (0..inst.apartments())
        .map(|j| maximin_ef_prices(inst, asg, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(PriceMatrix::new(rows))
}
