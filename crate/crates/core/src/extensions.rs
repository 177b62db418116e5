//! Apartment monotonicity probes and the core of markets with apartments
//! of several sizes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LinExpr, LinearProgram, Relation, VarKind};
use crate::matching::max_weight;
use crate::model::Instance;
use crate::money::Money;
use crate::solvers::{optimize_nef, Objective};

/// Largest player count handled by coalition enumeration.
pub const COALITION_CAP: usize = 6;

/// An apartment type available in unlimited copies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApartmentType {
    pub size: usize,
    pub rent: Money,
    /// `values[i][k]`: player `i`'s value for room `k`.
    pub values: Vec<Vec<Money>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypedApartmentMarket {
    players: usize,
    types: Vec<ApartmentType>,
}

impl TypedApartmentMarket {
    pub fn new(players: usize, types: Vec<ApartmentType>) -> Result<Self> {
        for (t, ty) in types.iter().enumerate() {
            if ty.size == 0 {
                return Err(Error::Shape(format!("apartment type {t} has no rooms")));
            }
            if ty.values.len() != players || ty.values.iter().any(|row| row.len() != ty.size) {
                return Err(Error::Shape(format!(
                    "apartment type {t} needs {players} rows of {} values",
                    ty.size
                )));
            }
        }
        Ok(TypedApartmentMarket { players, types })
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn types(&self) -> &[ApartmentType] {
        &self.types
    }

    /// Best utility a group of players gets from sharing one apartment.
    fn block_value(&self, members: &[usize]) -> Option<Money> {
        self.types
            .iter()
            .filter(|ty| ty.size == members.len())
            .map(|ty| {
                let weights: Vec<Vec<Money>> = members.iter().map(|&i| ty.values[i].clone()).collect();
                max_weight(&weights) - &ty.rent
            })
            .max()
    }
}

/// `values[mask]` is the value of the coalition whose members are the set
/// bits of `mask`, or `None` when the coalition cannot be housed exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoalitionValueTable {
    pub values: Vec<Option<Money>>,
}

impl CoalitionValueTable {
    pub fn build(market: &TypedApartmentMarket) -> Result<Self> {
        let n = market.players();
        if n > COALITION_CAP {
            return Err(Error::ScaleCap {
                what: "player count for coalition enumeration",
                limit: COALITION_CAP,
            });
        }
        let full = 1usize << n;
        let block: Vec<Option<Money>> = (0..full)
            .map(|mask| {
                if mask == 0 {
                    None
                } else {
                    market.block_value(&members(mask, n))
                }
            })
            .collect();
        let mut values: Vec<Option<Money>> = vec![None; full];
        values[0] = Some(Money::zero());
        for mask in 1..full {
            // Partition by the block containing the lowest member.
            let low = mask & mask.wrapping_neg();
            let rest = mask ^ low;
            let mut sub = rest;
            let mut best: Option<Money> = None;
            loop {
                let with_low = sub | low;
                if let (Some(b), Some(r)) = (&block[with_low], &values[mask ^ with_low]) {
                    let candidate = b + r;
                    if best.as_ref().is_none_or(|x| &candidate > x) {
                        best = Some(candidate);
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
            values[mask] = best;
        }
        Ok(CoalitionValueTable { values })
    }

    pub fn get(&self, mask: usize) -> Option<&Money> {
        self.values[mask].as_ref()
    }
}

fn members(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

fn mask_of(market: &TypedApartmentMarket, coalition: &[usize]) -> Result<usize> {
    let n = market.players();
    let mut mask = 0usize;
    for &i in coalition {
        crate::error::check_index("player", i, n)?;
        if mask >> i & 1 == 1 {
            return Err(Error::Shape(format!("player {i} listed twice in coalition")));
        }
        mask |= 1 << i;
    }
    Ok(mask)
}

/// Total utility `coalition` can secure on its own, or `None` when no
/// combination of apartment sizes houses it exactly.
pub fn coalition_value(market: &TypedApartmentMarket, coalition: &[usize]) -> Result<Option<Money>> {
    let table = CoalitionValueTable::build(market)?;
    Ok(table.get(mask_of(market, coalition)?).cloned())
}

/// One coalition inequality `Σ_{i∈members} α_i ≥ value` (equality for the
/// grand coalition).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoalitionConstraint {
    pub members: Vec<usize>,
    pub relation: Relation,
    pub value: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "core", rename_all = "snake_case")]
pub enum CoreReport {
    /// A utility vector no coalition can improve on.
    Nonempty { alpha: Vec<Money> },
    /// An irreducible set of coalition constraints with no common solution.
    Empty { conflict: Vec<CoalitionConstraint> },
}

impl CoreReport {
    pub fn is_empty(&self) -> bool {
        matches!(self, CoreReport::Empty { .. })
    }
}

/// Decides whether some split of the grand coalition's value satisfies
/// every coalition. An empty core is reported with an irreducible
/// infeasible subsystem found by deletion filtering.
pub fn core_check(market: &TypedApartmentMarket) -> Result<CoreReport> {
    let n = market.players();
    let table = CoalitionValueTable::build(market)?;
    let full = (1usize << n) - 1;
    let grand = table
        .get(full)
        .cloned()
        .ok_or_else(|| Error::Shape("no combination of apartment sizes houses all players".into()))?;
    let mut rows = vec![CoalitionConstraint {
        members: members(full, n),
        relation: Relation::Eq,
        value: grand,
    }];
    for mask in 1..full {
        if let Some(v) = table.get(mask) {
            rows.push(CoalitionConstraint {
                members: members(mask, n),
                relation: Relation::Ge,
                value: v.clone(),
            });
        }
    }
    let mut lp = LinearProgram::new();
    let alpha: Vec<LinExpr> = (0..n)
        .map(|i| LinExpr::var(lp.add_var(format!("alpha[{i}]"), VarKind::Free)))
        .collect();
    for row in &rows {
        let lhs: LinExpr = row.members.iter().map(|&i| alpha[i].clone()).sum();
        lp.constrain(
            format!("coalition {:?}", row.members),
            &lhs,
            row.relation,
            &LinExpr::constant(row.value.clone()),
        );
    }
    if let Some(point) = lp::solve(&lp)?.point() {
        return Ok(CoreReport::Nonempty {
            alpha: alpha.iter().map(|a| a.eval(point)).collect(),
        });
    }
    let mut keep = vec![true; rows.len()];
    for r in 0..rows.len() {
        keep[r] = false;
        let trial = lp.filter_constraints(|c| keep[c]);
        if lp::solve(&trial)?.is_feasible() {
            keep[r] = true;
        }
    }
    let conflict = rows.into_iter().zip(keep).filter(|(_, k)| *k).map(|(r, _)| r).collect();
    Ok(CoreReport::Empty { conflict })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Decreased,
    Unchanged,
    Increased,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub before: Money,
    pub after: Money,
    pub direction: Direction,
}

/// Optimal negotiated envy-free objective value before and after adding an
/// apartment with `room_values[i][k]` and `rent`.
pub fn monotonicity_probe(
    inst: &Instance,
    room_values: Vec<Vec<Money>>,
    rent: Money,
    objective: &Objective,
) -> Result<MonotonicityReport> {
    let extended = inst.with_apartment(room_values, rent)?;
    let before = optimize_nef(inst, objective)?.objective_value;
    let after = optimize_nef(&extended, objective)?.objective_value;
    let direction = match after.cmp(&before) {
        std::cmp::Ordering::Less => Direction::Decreased,
        std::cmp::Ordering::Equal => Direction::Unchanged,
        std::cmp::Ordering::Greater => Direction::Increased,
    };
    Ok(MonotonicityReport {
        before,
        after,
        direction,
    })
}
