//! Pairwise rent trades between players across two apartments.
//!
//! A trade `(δ, i1, i2, j1, j2)` raises player `i1`'s rent by `δ` in
//! apartment `j1` and lowers it by `δ` in `j2`, while player `i2` does the
//! opposite. Rents and each player's total payment are unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::model::{Assignment, Instance, PartialSolution, PriceMatrix};
use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Negotiation {
    pub delta: Money,
    pub i1: usize,
    pub i2: usize,
    pub j1: usize,
    pub j2: usize,
}

impl Negotiation {
    pub fn new(delta: Money, i1: usize, i2: usize, j1: usize, j2: usize) -> Result<Self> {
        let t = Negotiation { delta, i1, i2, j1, j2 };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        if !self.delta.is_positive() {
            return Err(Error::InvalidNegotiation(format!(
                "amount {} is not positive",
                self.delta
            )));
        }
        if self.i1 == self.i2 {
            return Err(Error::InvalidNegotiation(format!(
                "player {} trades with themselves",
                self.i1
            )));
        }
        if self.j1 == self.j2 {
            return Err(Error::InvalidNegotiation(format!(
                "both sides use apartment {}",
                self.j1
            )));
        }
        Ok(())
    }

    /// The trade that undoes this one.
    pub fn reversed(&self) -> Self {
        Negotiation {
            j1: self.j2,
            j2: self.j1,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegotiationLedger {
    pub start: PriceMatrix,
    pub steps: Vec<Negotiation>,
    pub end: PriceMatrix,
}

impl NegotiationLedger {
    /// Prices obtained by applying every step to `start`.
    pub fn replay(&self, asg: &Assignment) -> Result<PriceMatrix> {
        self.steps.iter().try_fold(self.start.clone(), |p, t| apply(&p, asg, t))
    }

    pub fn is_consistent(&self, asg: &Assignment) -> bool {
        self.replay(asg).is_ok_and(|p| p == self.end)
    }
}

/// Applies one trade.
pub fn apply(prices: &PriceMatrix, asg: &Assignment, t: &Negotiation) -> Result<PriceMatrix> {
    t.validate()?;
    let (n, m) = (asg.players(), asg.apartments());
    check_index("player", t.i1, n)?;
    check_index("player", t.i2, n)?;
    check_index("apartment", t.j1, m)?;
    check_index("apartment", t.j2, m)?;
    if prices.apartments() != m || prices.rows().iter().any(|r| r.len() != n) {
        return Err(Error::Shape("price matrix does not match the assignment".into()));
    }
    let mut out = prices.clone();
    let mut shift = |player: usize, apartment: usize, up: bool| {
        let entry = out.price_mut(apartment, asg.room(apartment, player));
        if up {
            *entry += &t.delta;
        } else {
            *entry -= &t.delta;
        }
    };
    shift(t.i1, t.j1, true);
    shift(t.i1, t.j2, false);
    shift(t.i2, t.j1, false);
    shift(t.i2, t.j2, true);
    Ok(out)
}

/// A sequence of trades leading from `start` to `target`, if one exists.
///
/// Apartments are balanced one at a time against the last apartment. Within
/// an apartment the player who must pay the most extra trades with the one
/// who must pay the most less, until the apartment matches. Every step zeroes
/// at least one difference, so there are at most `(n-1)(m-1)` steps.
pub fn reconstruct(asg: &Assignment, start: &PriceMatrix, target: &PriceMatrix) -> Result<NegotiationLedger> {
    let (n, m) = (asg.players(), asg.apartments());
    for p in [start, target] {
        if p.apartments() != m || p.rows().iter().any(|r| r.len() != n) {
            return Err(Error::Shape("price matrix does not match the assignment".into()));
        }
    }
    for j in 0..m {
        let a: Money = start.rows()[j].iter().sum();
        let b: Money = target.rows()[j].iter().sum();
        if a != b {
            return Err(Error::NotReachable(format!(
                "apartment {j} collects {a} under the start prices and {b} under the target"
            )));
        }
    }
    for i in 0..n {
        let a = start.player_total(asg, i);
        let b = target.player_total(asg, i);
        if a != b {
            return Err(Error::NotReachable(format!(
                "player {i} pays {a} in total under the start prices and {b} under the target"
            )));
        }
    }

    // diff[j][i]: extra amount player i must pay in apartment j.
    let mut diff: Vec<Vec<Money>> = (0..m)
        .map(|j| (0..n).map(|i| target.paid(asg, i, j) - start.paid(asg, i, j)).collect())
        .collect();
    let last = m - 1;
    let mut steps = Vec::new();
    for j in 0..last {
        loop {
            let row = &diff[j];
            let up = (0..n)
                .filter(|&i| row[i].is_positive())
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if row[b] >= row[i] => Some(b),
                    _ => Some(i),
                });
            let down = (0..n)
                .filter(|&i| row[i].is_negative())
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if row[b] <= row[i] => Some(b),
                    _ => Some(i),
                });
            let (Some(i1), Some(i2)) = (up, down) else { break };
            let delta = Money::min_of(row[i1].clone(), -&row[i2]);
            diff[j][i1] -= &delta;
            diff[j][i2] += &delta;
            diff[last][i1] += &delta;
            diff[last][i2] -= &delta;
            steps.push(Negotiation {
                delta,
                i1,
                i2,
                j1: j,
                j2: last,
            });
        }
    }
    let ledger = NegotiationLedger {
        start: start.clone(),
        steps,
        end: target.clone(),
    };
    if !ledger.is_consistent(asg) {
        return Err(Error::Inconsistent(
            "reconstructed trades do not reach the target".into(),
        ));
    }
    Ok(ledger)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusDelta {
    /// Smallest total trade volume after which the player weakly prefers the
    /// chosen apartment to every other one.
    pub total: Money,
    /// Apartments the player strictly prefers to the chosen one beforehand.
    pub preferred: Vec<usize>,
    /// Trades achieving `total`.
    pub ledger: NegotiationLedger,
}

/// Smallest total volume of trades in which `player` pays more elsewhere and
/// less in `chosen` until `chosen` is among their favourites.
///
/// If `player` prefers apartment `j` by `g_j`, trading `x_j ≥ 0` into `j`
/// and `Δ = Σ x_j` out of `chosen` works when `Δ + x_j ≥ g_j` for all `j`.
/// The minimum `Δ` solves `Σ_j max(0, g_j − Δ) = Δ`, which equals the
/// largest value of `(sum of the k largest gains) / (k + 1)`.
pub fn min_consensus_delta(
    inst: &Instance,
    partial: &PartialSolution,
    player: usize,
    chosen: usize,
) -> Result<ConsensusDelta> {
    partial.check(inst)?;
    check_index("player", player, inst.players())?;
    check_index("apartment", chosen, inst.apartments())?;
    let base = partial.util(inst, player, chosen);
    let gains: Vec<(usize, Money)> = (0..inst.apartments())
        .filter(|&j| j != chosen)
        .map(|j| (j, partial.util(inst, player, j) - &base))
        .filter(|(_, g)| g.is_positive())
        .collect();
    let preferred: Vec<usize> = gains.iter().map(|(j, _)| *j).collect();

    let mut sorted: Vec<&Money> = gains.iter().map(|(_, g)| g).collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut total = Money::zero();
    let mut prefix = Money::zero();
    for (k, g) in sorted.iter().enumerate() {
        prefix += *g;
        total = Money::max_of(total, &prefix / Money::from(k as i64 + 2));
    }

    let mut steps = Vec::new();
    if total.is_positive() {
        let partner = (0..inst.players())
            .find(|&o| o != player)
            .ok_or(Error::NoTradingPartner { player })?;
        for (j, g) in &gains {
            let amount = g - &total;
            if amount.is_positive() {
                steps.push(Negotiation {
                    delta: amount,
                    i1: player,
                    i2: partner,
                    j1: *j,
                    j2: chosen,
                });
            }
        }
    }
    let start = partial.prices.clone();
    let mut ledger = NegotiationLedger {
        end: start.clone(),
        start,
        steps,
    };
    ledger.end = ledger.replay(&partial.assignment)?;
    Ok(ConsensusDelta {
        total,
        preferred,
        ledger,
    })
}
