//! Constructive and optimizing solvers for each fairness notion.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::check_distribution;
use crate::lp::{self, LinExpr, LinearProgram, LpOutcome, Relation, VarKind};
use crate::matching::welfare_max_profile;
use crate::model::{welfare_of, Assignment, Instance, PartialSolution, PriceMatrix, Solution};
use crate::money::Money;
use crate::programs::{self, PriceExprs};

/// Affine function `Σ_i coeffs[i]·U_i + constant` of the utilities in the
/// chosen apartment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineForm {
    pub coeffs: Vec<Money>,
    pub constant: Money,
}

impl AffineForm {
    pub fn eval(&self, utilities: &[Money]) -> Money {
        self.coeffs.iter().zip(utilities).map(|(c, u)| c * u).sum::<Money>() + &self.constant
    }
}

/// The minimum of a list of affine forms, to be maximized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub forms: Vec<AffineForm>,
}

impl Objective {
    /// Utility of the worst-off player.
    pub fn maximin(players: usize) -> Self {
        let forms = (0..players)
            .map(|i| AffineForm {
                coeffs: (0..players).map(|k| Money::from((k == i) as i64)).collect(),
                constant: Money::zero(),
            })
            .collect();
        Objective { forms }
    }

    /// Minus the largest utility gap between two players.
    pub fn equitability(players: usize) -> Self {
        let mut forms = Vec::new();
        for i in 0..players {
            for other in (0..players).filter(|&o| o != i) {
                let mut coeffs = vec![Money::zero(); players];
                coeffs[i] = Money::one();
                coeffs[other] = Money::from(-1);
                forms.push(AffineForm {
                    coeffs,
                    constant: Money::zero(),
                });
            }
        }
        if forms.is_empty() {
            forms.push(AffineForm {
                coeffs: vec![Money::zero(); players],
                constant: Money::zero(),
            });
        }
        Objective { forms }
    }

    pub fn eval(&self, utilities: &[Money]) -> Money {
        self.forms
            .iter()
            .map(|f| f.eval(utilities))
            .min()
            .expect("objective has at least one form")
    }

    fn check(&self, players: usize) -> Result<()> {
        if self.forms.is_empty() {
            return Err(Error::EmptyObjective);
        }
        if let Some(f) = self.forms.iter().find(|f| f.coeffs.len() != players) {
            return Err(Error::Shape(format!(
                "objective form has {} coefficients for {players} players",
                f.coeffs.len()
            )));
        }
        Ok(())
    }
}

/// A solution together with the individually envy-free matrix it is
/// reachable from by negotiation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegotiatedSolution {
    pub solution: Solution,
    pub witness_q: PriceMatrix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizedSolution {
    pub solution: Solution,
    pub witness_q: PriceMatrix,
    pub objective_value: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionalSolution {
    pub assignment: Assignment,
    pub prices: PriceMatrix,
    pub distribution: Vec<Money>,
}

/// Sign restriction on prices searched by [`solve_def`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceSign {
    Free,
    #[default]
    NonNegative,
}

/// Apartments whose best assignment has the largest welfare, ascending.
pub fn welfare_maximizing_apartments(inst: &Instance, asg: &Assignment) -> Vec<usize> {
    let welfare: Vec<Money> = (0..inst.apartments())
        .map(|j| welfare_of(inst, asg.apartment(j), j))
        .collect();
    let best = welfare.iter().max().expect("at least one apartment");
    (0..inst.apartments()).filter(|&j| &welfare[j] == best).collect()
}

/// Per-apartment envy-free prices maximizing the smallest utility, on the
/// welfare-maximizing assignment.
pub fn maximin_individually_ef(inst: &Instance) -> Result<PartialSolution> {
    let asg = welfare_max_profile(inst);
    let prices = programs::maximin_ef_matrix(inst, &asg)?;
    Ok(PartialSolution::new(asg, prices))
}

/// A universally envy-free solution, if one exists.
///
/// Only welfare-maximizing apartments can be chosen (such a solution is in
/// particular a consensus), so these are tried in index order on the
/// welfare-maximizing assignment. Two-player instances use a closed-form
/// feasibility test; larger ones solve a linear program per candidate.
pub fn solve_uef(inst: &Instance) -> Result<Option<Solution>> {
    if inst.players() == 2 {
        Ok(solve_uef_two_players(inst))
    } else {
        solve_uef_lp(inst)
    }
}

/// [`solve_uef`] through linear programming for any player count.
pub fn solve_uef_lp(inst: &Instance) -> Result<Option<Solution>> {
    let asg = welfare_max_profile(inst);
    let n = inst.players();
    for chosen in welfare_maximizing_apartments(inst, &asg) {
        let mut lp = LinearProgram::new();
        let p = programs::price_vars(&mut lp, "p", inst);
        programs::rent_rows(&mut lp, inst, &p, "p");
        for i in 0..n {
            let own = programs::utility(inst, &asg, &p, i, chosen);
            for j in 0..inst.apartments() {
                for k in 0..n {
                    if j == chosen && k == asg.room(j, i) {
                        continue;
                    }
                    let other = programs::room_utility(inst, &p, i, j, k);
                    lp.constrain(format!("uef {i} vs {j}/{k}"), &own, Relation::Ge, &other);
                }
            }
        }
        if let Some(point) = lp::solve(&lp)?.point() {
            return Ok(Some(Solution::new(asg, programs::read_prices(&p, point), chosen)));
        }
    }
    Ok(None)
}

/// Two players: parametrize by player 0's utility `t` in the chosen
/// apartment (player 1 gets the welfare minus `t`). Every envy condition is
/// then an interval bound on `t` or a condition free of `t`.
fn solve_uef_two_players(inst: &Instance) -> Option<Solution> {
    let asg = welfare_max_profile(inst);
    let half = Money::ratio(1, 2);
    for chosen in welfare_maximizing_apartments(inst, &asg) {
        let (r0, r1) = (asg.room(chosen, 0), asg.room(chosen, 1));
        let own0 = inst.value(0, chosen, r0);
        let own1 = inst.value(1, chosen, r1);
        let cross0 = inst.value(0, chosen, r1);
        let cross1 = inst.value(1, chosen, r0);
        let rent = inst.rent(chosen);
        let welfare = own0 + own1 - rent;

        let mut lower = (own0 + cross0 - rent) * &half;
        let mut upper = (own0 * Money::from(2) + own1 - cross1 - rent) * &half;
        let mut feasible = true;
        for j in (0..inst.apartments()).filter(|&j| j != chosen) {
            let x = [inst.value(0, j, 0), inst.value(0, j, 1)];
            let y = [inst.value(1, j, 0), inst.value(1, j, 1)];
            let rj = inst.rent(j);
            lower = Money::max_of(lower, (x[0] + x[1] - rj) * &half);
            upper = Money::min_of(upper, (rj + &welfare * Money::from(2) - y[0] - y[1]) * &half);
            let cap = rj + &welfare;
            if x[0] + y[1] > cap || x[1] + y[0] > cap {
                feasible = false;
                break;
            }
        }
        if !feasible || lower > upper {
            continue;
        }
        let t = lower;
        let u1 = &welfare - &t;
        let mut rows = Vec::with_capacity(inst.apartments());
        for j in 0..inst.apartments() {
            if j == chosen {
                let mut row = vec![Money::zero(); 2];
                row[r0] = own0 - &t;
                row[r1] = rent - own0 + &t;
                rows.push(row);
            } else {
                // Cheapest price keeping both players from envying each room,
                // with the remaining rent put on room 0.
                let mut row: Vec<Money> = (0..2)
                    .map(|k| Money::max_of(inst.value(0, j, k) - &t, inst.value(1, j, k) - &u1))
                    .collect();
                let slack = inst.rent(j) - &row[0] - &row[1];
                row[0] += slack;
                rows.push(row);
            }
        }
        return Some(Solution::new(asg, PriceMatrix::new(rows), chosen));
    }
    None
}

/// The existence construction for negotiated envy-freeness.
///
/// Start from per-apartment maximin envy-free prices `Q`. Price every
/// apartment so all players get an equal share of its welfare, then shift
/// each player's prices evenly across apartments so their total payment
/// matches `Q`. Every player then ranks apartments by welfare, so the
/// first welfare-maximizing apartment is a consensus.
pub fn construct_nef(inst: &Instance) -> Result<NegotiatedSolution> {
    let base = maximin_individually_ef(inst)?;
    let asg = base.assignment;
    let q = base.prices;
    let (n, m) = (inst.players(), inst.apartments());
    let n_m = Money::from(n as i64);
    let m_m = Money::from(m as i64);
    let mut rows = vec![vec![Money::zero(); n]; m];
    for (j, row) in rows.iter_mut().enumerate() {
        let share = welfare_of(inst, asg.apartment(j), j) / &n_m;
        for i in 0..n {
            let k = asg.room(j, i);
            row[k] = inst.value(i, j, k) - &share;
        }
    }
    let equal = PriceMatrix::new(rows);
    let mut shifted = equal.clone();
    for i in 0..n {
        let shift = (q.player_total(&asg, i) - equal.player_total(&asg, i)) / &m_m;
        for j in 0..m {
            *shifted.price_mut(j, asg.room(j, i)) += &shift;
        }
    }
    let chosen = welfare_maximizing_apartments(inst, &asg)[0];
    Ok(NegotiatedSolution {
        solution: Solution::new(asg, shifted, chosen),
        witness_q: q,
    })
}

/// Prices `P` and `Q` with `P` a consensus in `chosen`, `Q` individually
/// envy-free and reachable from `P`, and `z` below every objective form.
fn negotiated_program(
    inst: &Instance,
    asg: &Assignment,
    chosen: usize,
    objective: &Objective,
) -> (LinearProgram, PriceExprs, PriceExprs, LinExpr) {
    let mut lp = LinearProgram::new();
    let p = programs::price_vars(&mut lp, "p", inst);
    let q = programs::price_vars(&mut lp, "q", inst);
    let z = LinExpr::var(lp.add_var("z", VarKind::Free));
    let utils: Vec<LinExpr> = (0..inst.players())
        .map(|i| programs::utility(inst, asg, &p, i, chosen))
        .collect();
    for (k, form) in objective.forms.iter().enumerate() {
        let mut value: LinExpr = form.coeffs.iter().zip(&utils).map(|(c, u)| u.scale(c)).sum();
        value += &LinExpr::constant(form.constant.clone());
        lp.constrain(format!("objective form {k}"), &z, Relation::Le, &value);
    }
    programs::consensus_rows(&mut lp, inst, asg, &p, chosen);
    programs::individually_ef_rows(&mut lp, inst, asg, &q, "q");
    programs::equal_totals_rows(&mut lp, inst, asg, &p, &q);
    programs::rent_rows(&mut lp, inst, &p, "p");
    programs::rent_rows(&mut lp, inst, &q, "q");
    lp.maximize_expr(&z);
    (lp, p, q, z)
}

fn solve_negotiated(
    lp: &LinearProgram,
    p: &PriceExprs,
    q: &PriceExprs,
    asg: &Assignment,
    chosen: usize,
) -> Result<Option<OptimizedSolution>> {
    match lp::solve(lp)? {
        LpOutcome::Optimal { point, value } => Ok(Some(OptimizedSolution {
            solution: Solution::new(asg.clone(), programs::read_prices(p, &point), chosen),
            witness_q: programs::read_prices(q, &point),
            objective_value: value,
        })),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::UnboundedObjective),
    }
}

/// Best negotiated envy-free solution under `objective`, in one linear
/// program over the welfare-maximizing assignment and the first
/// welfare-maximizing apartment.
pub fn optimize_nef(inst: &Instance, objective: &Objective) -> Result<OptimizedSolution> {
    optimize_nef_with_assignment(inst, &welfare_max_profile(inst), objective)
}

/// [`optimize_nef`] on a caller-supplied assignment, which must maximize
/// welfare in every apartment.
pub fn optimize_nef_with_assignment(
    inst: &Instance,
    asg: &Assignment,
    objective: &Objective,
) -> Result<OptimizedSolution> {
    objective.check(inst.players())?;
    let chosen = welfare_maximizing_apartments(inst, asg)[0];
    let (lp, p, q, _) = negotiated_program(inst, asg, chosen, objective);
    solve_negotiated(&lp, &p, &q, asg, chosen)?.ok_or_else(|| {
        Error::Inconsistent("negotiated envy-free solutions exist on a welfare-maximizing assignment".into())
    })
}

/// Rebalancing construction for strong negotiated envy-freeness.
///
/// Apartments are reordered so that the first welfare-maximizing apartment
/// comes first. Starting from per-apartment maximin envy-free prices, each
/// later apartment is visited in turn; any player who prefers it to the
/// first apartment pays more there and less everywhere else, and the
/// players who prefer the first apartment absorb the difference in equal
/// shares without losing that preference.
pub fn solve_strong_nef(inst: &Instance) -> Result<NegotiatedSolution> {
    let base = maximin_individually_ef(inst)?;
    let asg = base.assignment;
    let q = base.prices;
    let (n, m) = (inst.players(), inst.apartments());
    let first = welfare_maximizing_apartments(inst, &asg)[0];
    let order: Vec<usize> = std::iter::once(first).chain((0..m).filter(|&j| j != first)).collect();

    let mut p = q.clone();
    let util = |p: &PriceMatrix, i: usize, j: usize| {
        let k = asg.room(j, i);
        inst.value(i, j, k) - p.price(j, k)
    };
    let m_m = Money::from(m as i64);
    let keep_share = Money::from(m as i64 - 1) / &m_m;
    // Player `i` pays `amount·(m-1)/m` more in `j` and `amount/m` less in
    // every other apartment (a negative amount reverses this).
    let shift = |p: &mut PriceMatrix, i: usize, j: usize, amount: &Money| {
        for other in 0..m {
            let entry = p.price_mut(other, asg.room(other, i));
            if other == j {
                *entry += amount * &keep_share;
            } else {
                *entry -= amount / &m_m;
            }
        }
    };
    for &j in order.iter().skip(1) {
        while let Some(i) = (0..n).find(|&i| util(&p, i, j) > util(&p, i, first)) {
            let mut delta = util(&p, i, j) - util(&p, i, first);
            shift(&mut p, i, j, &delta);
            while delta.is_positive() {
                let takers: Vec<usize> = (0..n).filter(|&t| util(&p, t, j) < util(&p, t, first)).collect();
                if takers.is_empty() {
                    return Err(Error::Inconsistent("no player can absorb the rebalancing".into()));
                }
                let size = Money::from(takers.len() as i64);
                let eps = takers
                    .iter()
                    .map(|&t| util(&p, t, first) - util(&p, t, j))
                    .min()
                    .expect("takers is nonempty");
                let each = if eps >= &delta / &size { &delta / &size } else { eps };
                for &t in &takers {
                    shift(&mut p, t, j, &-&each);
                }
                delta -= &each * &size;
            }
        }
    }
    Ok(NegotiatedSolution {
        solution: Solution::new(asg, p, first),
        witness_q: q,
    })
}

/// Best strong negotiated envy-free solution found under `objective`.
///
/// The negotiated program gains the decrease cap with preferred sets frozen
/// to a pattern and enforced on `Q`, so every optimum is certified. The first
/// pattern is taken from the rebalancing construction, whose output is
/// feasible for it; later patterns are re-derived from each optimum until
/// one repeats or `n·m` rounds pass. The best certified solution is
/// returned, including the construction itself.
pub fn optimize_strong_nef(inst: &Instance, objective: &Objective) -> Result<OptimizedSolution> {
    objective.check(inst.players())?;
    let constructed = solve_strong_nef(inst)?;
    let sol = constructed.solution;
    let asg = sol.assignment().clone();
    let chosen = sol.chosen;
    let mut best = OptimizedSolution {
        objective_value: objective.eval(&sol.utilities(inst)),
        solution: sol,
        witness_q: constructed.witness_q.clone(),
    };
    let mut pattern = programs::strict_pattern(inst, &asg, &constructed.witness_q, chosen);
    let mut seen = HashSet::new();
    for _ in 0..inst.players() * inst.apartments() {
        if !seen.insert(pattern.clone()) {
            break;
        }
        let (mut lp, p, q, _) = negotiated_program(inst, &asg, chosen, objective);
        programs::strong_bound_rows(&mut lp, inst, &asg, &p, &q, chosen, &pattern, true);
        let Some(found) = solve_negotiated(&lp, &p, &q, &asg, chosen)? else {
            break;
        };
        pattern = programs::strict_pattern(inst, &asg, &found.witness_q, chosen);
        if found.objective_value > best.objective_value {
            best = found;
        }
    }
    Ok(best)
}

/// Largest apartment count for which [`solve_def`] enumerates supports.
pub const DEF_SUPPORT_CAP: usize = 12;

/// A distributionally envy-free solution with a uniform lottery over its
/// support, on the welfare-maximizing assignment.
///
/// Supports are tried by increasing size, then lexicographically. For each
/// support the program asks for prices with no expected envy and every
/// supported apartment among every player's favourites.
pub fn solve_def(inst: &Instance, sign: PriceSign) -> Result<Option<DistributionalSolution>> {
    let m = inst.apartments();
    if m > DEF_SUPPORT_CAP {
        return Err(Error::ScaleCap {
            what: "apartment count for support enumeration",
            limit: DEF_SUPPORT_CAP,
        });
    }
    let asg = welfare_max_profile(inst);
    let n = inst.players();
    let kind = match sign {
        PriceSign::Free => VarKind::Free,
        PriceSign::NonNegative => VarKind::NonNegative,
    };
    let mut supports: Vec<u32> = (1..1u32 << m).collect();
    supports.sort_by_key(|s| {
        let members: Vec<usize> = (0..m).filter(|j| s >> j & 1 == 1).collect();
        (members.len(), members)
    });
    for mask in supports {
        let support: Vec<usize> = (0..m).filter(|j| mask >> j & 1 == 1).collect();
        let mut lp = LinearProgram::new();
        let p = programs::price_vars_of_kind(&mut lp, "p", inst, kind);
        programs::rent_rows(&mut lp, inst, &p, "p");
        for i in 0..n {
            let expected = |other: usize| -> LinExpr {
                support
                    .iter()
                    .map(|&j| programs::room_utility(inst, &p, i, j, asg.room(j, other)))
                    .sum()
            };
            let own = expected(i);
            for other in (0..n).filter(|&o| o != i) {
                lp.constrain(
                    format!("expected envy {i}/{other}"),
                    &own,
                    Relation::Ge,
                    &expected(other),
                );
            }
            for &s in &support {
                let at = programs::utility(inst, &asg, &p, i, s);
                for j in (0..m).filter(|&j| j != s) {
                    let elsewhere = programs::utility(inst, &asg, &p, i, j);
                    lp.constrain(format!("favourite {i} {s} over {j}"), &at, Relation::Ge, &elsewhere);
                }
            }
        }
        if let Some(point) = lp::solve(&lp)?.point() {
            let weight = Money::ratio(1, support.len() as i64);
            let distribution = (0..m)
                .map(|j| {
                    if support.contains(&j) {
                        weight.clone()
                    } else {
                        Money::zero()
                    }
                })
                .collect::<Vec<_>>();
            check_distribution(inst, &distribution)?;
            return Ok(Some(DistributionalSolution {
                assignment: asg,
                prices: programs::read_prices(&p, point),
                distribution,
            }));
        }
    }
    Ok(None)
}
