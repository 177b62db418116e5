//! Instances, assignments, price matrices and the quantities derived from
//! them (utility, welfare, envy).
//!
//! Indices are zero-based throughout: player `i`, apartment `j`, room `k`.
//! Each apartment has exactly `n` rooms, one per player.

use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::money::Money;

/// Values `values[i][j][k]` of player `i` for room `k` of apartment `j`, plus
/// the rent of every apartment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    values: Vec<Vec<Vec<Money>>>,
    rents: Vec<Money>,
    normalized: bool,
}

impl Instance {
    /// Checks the shape only; value signs and normalization are reported by
    /// [`validate`].
    pub fn new(values: Vec<Vec<Vec<Money>>>, rents: Vec<Money>, normalized: bool) -> Result<Self> {
        let n = values.len();
        let m = rents.len();
        if n == 0 {
            return Err(Error::Shape("at least one player is required".into()));
        }
        if m == 0 {
            return Err(Error::Shape("at least one apartment is required".into()));
        }
        for (i, per_apartment) in values.iter().enumerate() {
            if per_apartment.len() != m {
                return Err(Error::Shape(format!(
                    "player {i} has values for {} apartments, expected {m}",
                    per_apartment.len()
                )));
            }
            for (j, rooms) in per_apartment.iter().enumerate() {
                if rooms.len() != n {
                    return Err(Error::Shape(format!(
                        "player {i} has {} room values in apartment {j}, expected {n}",
                        rooms.len()
                    )));
                }
            }
        }
        Ok(Instance {
            values,
            rents,
            normalized,
        })
    }

    /// Builds from integers, `values[i][j][k]`. Panics on bad shape.
    pub fn from_ints(values: &[Vec<Vec<i64>>], rents: &[i64], normalized: bool) -> Self {
        let values = values
            .iter()
            .map(|p| p.iter().map(|a| a.iter().map(|&v| Money::from(v)).collect()).collect())
            .collect();
        let rents = rents.iter().map(|&r| Money::from(r)).collect();
        Instance::new(values, rents, normalized).expect("well-formed integer instance")
    }

    pub fn players(&self) -> usize {
        self.values.len()
    }

    pub fn apartments(&self) -> usize {
        self.rents.len()
    }

    pub fn value(&self, player: usize, apartment: usize, room: usize) -> &Money {
        &self.values[player][apartment][room]
    }

    pub fn rent(&self, apartment: usize) -> &Money {
        &self.rents[apartment]
    }

    pub fn rents(&self) -> &[Money] {
        &self.rents
    }

    pub fn values(&self) -> &[Vec<Vec<Money>>] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn with_normalized(mut self, normalized: bool) -> Self {
        self.normalized = normalized;
        self
    }

    /// The `n × n` value matrix of one apartment, rows are players.
    pub fn apartment_matrix(&self, apartment: usize) -> Vec<Vec<Money>> {
        self.values.iter().map(|p| p[apartment].clone()).collect()
    }

    /// Appends an apartment given as `room_values[i][k]`.
    pub fn with_apartment(&self, room_values: Vec<Vec<Money>>, rent: Money) -> Result<Self> {
        if room_values.len() != self.players() {
            return Err(Error::Shape(format!(
                "new apartment has rows for {} players, expected {}",
                room_values.len(),
                self.players()
            )));
        }
        let mut values = self.values.clone();
        for (player, rooms) in values.iter_mut().zip(room_values) {
            player.push(rooms);
        }
        let mut rents = self.rents.clone();
        rents.push(rent);
        Instance::new(values, rents, self.normalized)
    }

    /// Keeps only the listed apartments, in the given order.
    pub fn select_apartments(&self, keep: &[usize]) -> Result<Self> {
        for &j in keep {
            check_index("apartment", j, self.apartments())?;
        }
        let values = self
            .values
            .iter()
            .map(|p| keep.iter().map(|&j| p[j].clone()).collect())
            .collect();
        let rents = keep.iter().map(|&j| self.rents[j].clone()).collect();
        Instance::new(values, rents, self.normalized)
    }

    pub fn set_value(&mut self, player: usize, apartment: usize, room: usize, value: Money) -> Result<()> {
        check_index("player", player, self.players())?;
        check_index("apartment", apartment, self.apartments())?;
        check_index("room", room, self.players())?;
        self.values[player][apartment][room] = value;
        Ok(())
    }

    pub fn set_rent(&mut self, apartment: usize, rent: Money) -> Result<()> {
        check_index("apartment", apartment, self.apartments())?;
        self.rents[apartment] = rent;
        Ok(())
    }

    pub fn total_rent(&self) -> Money {
        self.rents.iter().sum()
    }

    pub fn player_total_value(&self, player: usize) -> Money {
        self.values[player].iter().flatten().sum()
    }
}

/// One bijection per apartment: `rooms[j][i]` is the room of player `i` in
/// apartment `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Assignment {
    rooms: Vec<Vec<usize>>,
}

impl Assignment {
    pub fn new(rooms: Vec<Vec<usize>>) -> Result<Self> {
        for (j, perm) in rooms.iter().enumerate() {
            let n = perm.len();
            let mut seen = vec![false; n];
            for &k in perm {
                if k >= n || seen[k] {
                    return Err(Error::NotBijection { apartment: j });
                }
                seen[k] = true;
            }
        }
        if let Some(first) = rooms.first() {
            if rooms.iter().any(|p| p.len() != first.len()) {
                return Err(Error::Shape("apartments have different room counts".into()));
            }
        }
        Ok(Assignment { rooms })
    }

    pub fn identity(players: usize, apartments: usize) -> Self {
        Assignment {
            rooms: vec![(0..players).collect(); apartments],
        }
    }

    pub fn room(&self, apartment: usize, player: usize) -> usize {
        self.rooms[apartment][player]
    }

    pub fn apartment(&self, apartment: usize) -> &[usize] {
        &self.rooms[apartment]
    }

    pub fn apartments(&self) -> usize {
        self.rooms.len()
    }

    pub fn players(&self) -> usize {
        self.rooms.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rooms
    }

    /// Player holding `room` in `apartment`.
    pub fn occupant(&self, apartment: usize, room: usize) -> usize {
        self.rooms[apartment]
            .iter()
            .position(|&k| k == room)
            .expect("assignment is a bijection")
    }

    pub(crate) fn check_fits(&self, inst: &Instance) -> Result<()> {
        if self.apartments() != inst.apartments() || self.players() != inst.players() {
            return Err(Error::Shape(format!(
                "assignment is {}×{}, instance has {} apartments and {} players",
                self.apartments(),
                self.players(),
                inst.apartments(),
                inst.players()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<usize>>> for Assignment {
    type Error = Error;
    fn try_from(rooms: Vec<Vec<usize>>) -> Result<Self> {
        Assignment::new(rooms)
    }
}

impl From<Assignment> for Vec<Vec<usize>> {
    fn from(a: Assignment) -> Self {
        a.rooms
    }
}

/// Room prices `prices[j][k]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceMatrix {
    prices: Vec<Vec<Money>>,
}

impl PriceMatrix {
    pub fn new(prices: Vec<Vec<Money>>) -> Self {
        PriceMatrix { prices }
    }

    pub fn from_ints(prices: &[Vec<i64>]) -> Self {
        PriceMatrix::new(
            prices
                .iter()
                .map(|row| row.iter().map(|&p| Money::from(p)).collect())
                .collect(),
        )
    }

    /// Splits every rent evenly across its rooms.
    pub fn even_split(inst: &Instance) -> Self {
        let n = Money::from(inst.players() as i64);
        PriceMatrix::new(inst.rents().iter().map(|r| vec![r / &n; inst.players()]).collect())
    }

    pub fn price(&self, apartment: usize, room: usize) -> &Money {
        &self.prices[apartment][room]
    }

    pub fn price_mut(&mut self, apartment: usize, room: usize) -> &mut Money {
        &mut self.prices[apartment][room]
    }

    pub fn rows(&self) -> &[Vec<Money>] {
        &self.prices
    }

    pub fn apartments(&self) -> usize {
        self.prices.len()
    }

    /// Price paid by `player` in `apartment` under `asg`.
    pub fn paid(&self, asg: &Assignment, player: usize, apartment: usize) -> &Money {
        &self.prices[apartment][asg.room(apartment, player)]
    }

    /// Sum over apartments of what `player` pays under `asg`.
    pub fn player_total(&self, asg: &Assignment, player: usize) -> Money {
        (0..self.apartments()).map(|j| self.paid(asg, player, j)).sum()
    }

    /// Every row sums to its apartment's rent and the shape matches.
    pub fn check_rents(&self, inst: &Instance) -> Result<()> {
        if self.prices.len() != inst.apartments() || self.prices.iter().any(|r| r.len() != inst.players()) {
            return Err(Error::Shape(format!(
                "price matrix shape does not match {} apartments × {} rooms",
                inst.apartments(),
                inst.players()
            )));
        }
        for (j, row) in self.prices.iter().enumerate() {
            let actual: Money = row.iter().sum();
            if &actual != inst.rent(j) {
                return Err(Error::RentMismatch {
                    apartment: j,
                    expected: Box::new(inst.rent(j).clone()),
                    actual: Box::new(actual),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialSolution {
    pub assignment: Assignment,
    pub prices: PriceMatrix,
}

impl PartialSolution {
    pub fn new(assignment: Assignment, prices: PriceMatrix) -> Self {
        PartialSolution { assignment, prices }
    }

    /// Shape and rent checks against `inst`.
    pub fn check(&self, inst: &Instance) -> Result<()> {
        self.assignment.check_fits(inst)?;
        self.prices.check_rents(inst)
    }

    /// `U_i(A_j, P)` without bounds checks beyond slice indexing.
    pub(crate) fn util(&self, inst: &Instance, player: usize, apartment: usize) -> Money {
        let room = self.assignment.room(apartment, player);
        inst.value(player, apartment, room) - self.prices.price(apartment, room)
    }

    /// Utility of `player` for room `room` of `apartment` at these prices.
    pub(crate) fn room_util(&self, inst: &Instance, player: usize, apartment: usize, room: usize) -> Money {
        inst.value(player, apartment, room) - self.prices.price(apartment, room)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub partial: PartialSolution,
    pub chosen: usize,
}

impl Solution {
    pub fn new(assignment: Assignment, prices: PriceMatrix, chosen: usize) -> Self {
        Solution {
            partial: PartialSolution::new(assignment, prices),
            chosen,
        }
    }

    pub fn assignment(&self) -> &Assignment {
        &self.partial.assignment
    }

    pub fn prices(&self) -> &PriceMatrix {
        &self.partial.prices
    }

    pub fn check(&self, inst: &Instance) -> Result<()> {
        self.partial.check(inst)?;
        check_index("apartment", self.chosen, inst.apartments())
    }

    /// Utilities of every player in the chosen apartment.
    pub fn utilities(&self, inst: &Instance) -> Vec<Money> {
        (0..inst.players())
            .map(|i| self.partial.util(inst, i, self.chosen))
            .collect()
    }
}

/// `envy[i][other][j]`: how much more player `i` would get from `other`'s
/// room in apartment `j` than from their own room in the chosen apartment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnvyMatrix {
    pub envy: Vec<Vec<Vec<Money>>>,
}

impl EnvyMatrix {
    pub fn get(&self, player: usize, other: usize, apartment: usize) -> &Money {
        &self.envy[player][other][apartment]
    }

    /// Largest entry, with its position.
    pub fn max_entry(&self) -> Option<((usize, usize, usize), &Money)> {
        let mut best: Option<((usize, usize, usize), &Money)> = None;
        for (i, row) in self.envy.iter().enumerate() {
            for (o, cols) in row.iter().enumerate() {
                for (j, e) in cols.iter().enumerate() {
                    if best.is_none_or(|(_, b)| e > b) {
                        best = Some(((i, o, j), e));
                    }
                }
            }
        }
        best
    }
}

/// Quasi-linear utility `V_i(A_j(i)) − P(A_j(i))`.
pub fn utility(inst: &Instance, sol: &PartialSolution, player: usize, apartment: usize) -> Result<Money> {
    check_index("player", player, inst.players())?;
    check_index("apartment", apartment, inst.apartments())?;
    sol.assignment.check_fits(inst)?;
    Ok(sol.util(inst, player, apartment))
}

/// Total value of the assignment in `apartment` minus its rent.
pub fn welfare(inst: &Instance, asg: &Assignment, apartment: usize) -> Result<Money> {
    check_index("apartment", apartment, inst.apartments())?;
    asg.check_fits(inst)?;
    Ok(welfare_of(inst, asg.apartment(apartment), apartment))
}

pub(crate) fn welfare_of(inst: &Instance, perm: &[usize], apartment: usize) -> Money {
    let total: Money = perm.iter().enumerate().map(|(i, &k)| inst.value(i, apartment, k)).sum();
    total - inst.rent(apartment)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NegativeValue {
        player: usize,
        apartment: usize,
        room: usize,
        value: Money,
    },
    NegativeRent {
        apartment: usize,
        rent: Money,
    },
    /// A player's total value differs from the total rent while the instance
    /// claims to be normalized.
    NotNormalized {
        player: usize,
        total_value: Money,
        total_rent: Money,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists negative values or rents, and normalization failures when the
/// instance is flagged as normalized.
pub fn validate(inst: &Instance) -> ValidationReport {
    let mut violations = Vec::new();
    for i in 0..inst.players() {
        for j in 0..inst.apartments() {
            for k in 0..inst.players() {
                let v = inst.value(i, j, k);
                if v.is_negative() {
                    violations.push(Violation::NegativeValue {
                        player: i,
                        apartment: j,
                        room: k,
                        value: v.clone(),
                    });
                }
            }
        }
    }
    for (j, r) in inst.rents().iter().enumerate() {
        if r.is_negative() {
            violations.push(Violation::NegativeRent {
                apartment: j,
                rent: r.clone(),
            });
        }
    }
    if inst.is_normalized() {
        let total_rent = inst.total_rent();
        for i in 0..inst.players() {
            let total_value = inst.player_total_value(i);
            if total_value != total_rent {
                violations.push(Violation::NotNormalized {
                    player: i,
                    total_value,
                    total_rent: total_rent.clone(),
                });
            }
        }
    }
    ValidationReport { violations }
}

/// Envy of every player, relative to their room in the chosen apartment, for
/// every room of every apartment.
pub fn envy_matrix(inst: &Instance, sol: &Solution) -> Result<EnvyMatrix> {
    sol.check(inst)?;
    let n = inst.players();
    let m = inst.apartments();
    let asg = sol.assignment();
    let envy = (0..n)
        .map(|i| {
            let own = sol.partial.util(inst, i, sol.chosen);
            (0..n)
                .map(|other| {
                    (0..m)
                        .map(|j| sol.partial.room_util(inst, i, j, asg.room(j, other)) - &own)
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(EnvyMatrix { envy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::money::money;
    use proptest::prelude::*;

    fn flat(inst: &Instance, p: i64) -> PartialSolution {
        PartialSolution::new(
            Assignment::identity(inst.players(), inst.apartments()),
            PriceMatrix::new(vec![vec![money(p); inst.players()]; inst.apartments()]),
        )
    }

    #[test]
    fn utility_on_example_one() {
        let inst = fixtures::example_one();
        let sol = flat(&inst, 150);
        assert_eq!(utility(&inst, &sol, 0, 0).unwrap(), money(50));
        assert_eq!(utility(&inst, &sol, 0, 1).unwrap(), money(-50));
        assert!(matches!(
            utility(&inst, &sol, 2, 0),
            Err(Error::IndexOutOfRange { kind: "player", .. })
        ));
    }

    #[test]
    fn utility_is_zero_when_price_equals_value() {
        let inst = fixtures::example_five();
        let asg = Assignment::identity(2, 2);
        let prices = PriceMatrix::new(
            (0..2)
                .map(|j| (0..2).map(|k| inst.value(k, j, k).clone()).collect())
                .collect(),
        );
        let sol = PartialSolution::new(asg, prices);
        for i in 0..2 {
            for j in 0..2 {
                assert!(utility(&inst, &sol, i, j).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn welfare_examples() {
        let e1 = fixtures::example_one();
        assert_eq!(welfare(&e1, &Assignment::identity(2, 2), 0).unwrap(), money(0));
        let e5 = fixtures::example_five();
        assert_eq!(welfare(&e5, &Assignment::identity(2, 2), 0).unwrap(), money(1));
        let zero = Instance::from_ints(&[vec![vec![0, 0]], vec![vec![0, 0]]], &[70], false);
        assert_eq!(
            welfare(&zero, &Assignment::new(vec![vec![1, 0]]).unwrap(), 0).unwrap(),
            money(-70)
        );
    }

    #[test]
    fn validate_fixtures_and_violations() {
        assert!(validate(&fixtures::example_one()).is_ok());
        assert!(validate(&fixtures::example_five()).is_ok());
        assert!(validate(&fixtures::monotonicity()).is_ok());

        let mut bad = fixtures::example_one();
        bad.set_value(1, 0, 1, money(-1)).unwrap();
        let report = validate(&bad);
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::NegativeValue {
                player: 1,
                apartment: 0,
                room: 1,
                ..
            }
        )));

        let mut skew = fixtures::example_five();
        skew.set_rent(0, money(150)).unwrap();
        let report = validate(&skew);
        assert_eq!(
            report
                .violations
                .iter()
                .filter(|v| matches!(v, Violation::NotNormalized { .. }))
                .count(),
            2
        );
        // Without the flag, the same instance is fine.
        assert!(validate(&skew.with_normalized(false)).is_ok());
    }

    #[test]
    fn envy_matrix_example_one() {
        let inst = fixtures::example_one();
        let p = flat(&inst, 150);
        let sol = Solution::new(p.assignment, p.prices, 0);
        let e = envy_matrix(&inst, &sol).unwrap();
        assert_eq!(e.get(1, 0, 1), &money(100));
        assert_eq!(e.get(1, 1, 1), &money(100));
        assert_eq!(e.get(0, 0, 1), &money(-100));
        assert_eq!(e.get(0, 1, 1), &money(-100));
        for i in 0..2 {
            assert!(e.get(i, i, 0).is_zero());
        }
    }

    #[test]
    fn assignment_rejects_non_bijection() {
        assert!(matches!(
            Assignment::new(vec![vec![0, 0]]),
            Err(Error::NotBijection { apartment: 0 })
        ));
        assert!(Assignment::new(vec![vec![1, 0], vec![0, 1]]).is_ok());
    }

    proptest! {
        #[test]
        fn welfare_equals_sum_of_utilities(
            vals in proptest::collection::vec(0i64..50, 9),
            raw in proptest::collection::vec(-40i64..40, 2),
            denom in 1i64..7,
            rent in 0i64..100,
        ) {
            let values: Vec<Vec<Vec<i64>>> = (0..3).map(|i| vec![vals[3 * i..3 * i + 3].to_vec()]).collect();
            let inst = Instance::from_ints(&values, &[rent], false);
            let p0 = Money::ratio(raw[0], denom);
            let p1 = Money::ratio(raw[1], denom + 1);
            let p2 = money(rent) - &p0 - &p1;
            let sol = PartialSolution::new(
                Assignment::new(vec![vec![2, 0, 1]]).unwrap(),
                PriceMatrix::new(vec![vec![p0, p1, p2]]),
            );
            let total: Money = (0..3).map(|i| utility(&inst, &sol, i, 0).unwrap()).sum();
            prop_assert_eq!(total, welfare(&inst, &sol.assignment, 0).unwrap());
        }

        #[test]
        fn envy_diagonal_at_chosen_is_zero(
            vals in proptest::collection::vec(0i64..20, 8),
            prices in proptest::collection::vec(-10i64..30, 4),
            chosen in 0usize..2,
        ) {
            let values: Vec<Vec<Vec<i64>>> = (0..2)
                .map(|i| (0..2).map(|j| vals[4 * i + 2 * j..4 * i + 2 * j + 2].to_vec()).collect())
                .collect();
            let rents = [prices[0] + prices[1], prices[2] + prices[3]];
            let inst = Instance::from_ints(&values, &rents, false);
            let sol = Solution::new(
                Assignment::new(vec![vec![1, 0], vec![0, 1]]).unwrap(),
                PriceMatrix::from_ints(&[prices[..2].to_vec(), prices[2..].to_vec()]),
                chosen,
            );
            let e = envy_matrix(&inst, &sol).unwrap();
            for i in 0..2 {
                prop_assert!(e.get(i, i, chosen).is_zero());
            }
        }
    }
}
