//! Exact linear programming over the rationals.
//!
//! A dense two-phase primal simplex with Bland's pivoting rule. Free
//! variables are split into a difference of two nonnegative columns. The
//! tableau is first run over `i128` fractions and rerun over arbitrary
//! precision rationals when any intermediate value overflows, so results are
//! exact either way.

use std::fmt;

use serde::{Deserialize, Serialize};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

use crate::money::Money;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Free,
    NonNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

/// Affine expression `Σ c·x + constant`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, Money)>,
    pub constant: Money,
}

impl LinExpr {
    pub fn var(v: VarId) -> Self {
        LinExpr {
            terms: vec![(v, Money::one())],
            constant: Money::zero(),
        }
    }

    pub fn constant(c: Money) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn scale(&self, k: &Money) -> Self {
        LinExpr {
            terms: self.terms.iter().map(|(v, c)| (*v, c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn eval(&self, point: &[Money]) -> Money {
        self.terms.iter().map(|(v, c)| c * &point[v.0]).sum::<Money>() + &self.constant
    }
}

impl std::ops::Add<&LinExpr> for &LinExpr {
    type Output = LinExpr;
    fn add(self, rhs: &LinExpr) -> LinExpr {
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        LinExpr {
            terms,
            constant: &self.constant + &rhs.constant,
        }
    }
}

impl std::ops::Sub<&LinExpr> for &LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: &LinExpr) -> LinExpr {
        self + &rhs.scale(&Money::from(-1))
    }
}

impl std::ops::AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: &LinExpr) {
        self.terms.extend(rhs.terms.iter().cloned());
        self.constant += &rhs.constant;
    }
}

impl std::iter::Sum for LinExpr {
    fn sum<I: Iterator<Item = LinExpr>>(iter: I) -> LinExpr {
        iter.fold(LinExpr::default(), |mut acc, e| {
            acc += &e;
            acc
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub label: String,
    pub terms: Vec<(VarId, Money)>,
    pub relation: Relation,
    pub rhs: Money,
}

impl Constraint {
    fn lhs(&self, point: &[Money]) -> Money {
        self.terms.iter().map(|(v, c)| c * &point[v.0]).sum()
    }

    pub fn holds_at(&self, point: &[Money]) -> bool {
        let lhs = self.lhs(point);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Objective {
    Feasibility,
    /// Maximize `Σ c·x + constant`.
    Maximize {
        terms: Vec<(VarId, Money)>,
        constant: Money,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    names: Vec<String>,
    kinds: Vec<VarKind>,
    constraints: Vec<Constraint>,
    objective: Objective,
}

impl Default for LinearProgram {
    fn default() -> Self {
        LinearProgram {
            names: Vec::new(),
            kinds: Vec::new(),
            constraints: Vec::new(),
            objective: Objective::Feasibility,
        }
    }
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind) -> VarId {
        self.names.push(name.into());
        self.kinds.push(kind);
        VarId(self.names.len() - 1)
    }

    pub fn add_constraint(
        &mut self,
        label: impl Into<String>,
        terms: Vec<(VarId, Money)>,
        relation: Relation,
        rhs: Money,
    ) -> usize {
        self.constraints.push(Constraint {
            label: label.into(),
            terms,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    /// Adds `lhs rel rhs` for affine sides.
    pub fn constrain(&mut self, label: impl Into<String>, lhs: &LinExpr, relation: Relation, rhs: &LinExpr) -> usize {
        let diff = lhs - rhs;
        self.add_constraint(label, diff.terms, relation, -diff.constant)
    }

    pub fn maximize_expr(&mut self, expr: &LinExpr) {
        self.maximize(expr.terms.clone(), expr.constant.clone());
    }

    pub fn maximize(&mut self, terms: Vec<(VarId, Money)>, constant: Money) {
        self.objective = Objective::Maximize { terms, constant };
    }

    pub fn set_feasibility(&mut self) {
        self.objective = Objective::Feasibility;
    }

    pub fn var_count(&self) -> usize {
        self.names.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.names[v.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    /// Copy keeping only the constraints whose index passes `keep`.
    pub fn filter_constraints(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let constraints = self
            .constraints
            .iter()
            .enumerate()
            .filter(|(k, _)| keep(*k))
            .map(|(_, c)| c.clone())
            .collect();
        LinearProgram {
            names: self.names.clone(),
            kinds: self.kinds.clone(),
            constraints,
            objective: self.objective.clone(),
        }
    }

    /// Exact check of every constraint and sign restriction.
    pub fn is_feasible_point(&self, point: &[Money]) -> bool {
        point.len() == self.var_count()
            && self
                .kinds
                .iter()
                .zip(point)
                .all(|(k, x)| *k == VarKind::Free || !x.is_negative())
            && self.constraints.iter().all(|c| c.holds_at(point))
    }

    pub fn objective_at(&self, point: &[Money]) -> Money {
        match &self.objective {
            Objective::Feasibility => Money::zero(),
            Objective::Maximize { terms, constant } => {
                terms.iter().map(|(v, c)| c * &point[v.0]).sum::<Money>() + constant
            }
        }
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.var_count();
        for (k, c) in self.constraints.iter().enumerate() {
            if let Some((v, _)) = c.terms.iter().find(|(v, _)| v.0 >= n) {
                return Err(LpError::UnknownVariable {
                    context: format!("constraint {k} ({})", c.label),
                    index: v.0,
                    count: n,
                });
            }
        }
        if let Objective::Maximize { terms, .. } = &self.objective {
            if let Some((v, _)) = terms.iter().find(|(v, _)| v.0 >= n) {
                return Err(LpError::UnknownVariable {
                    context: "objective".into(),
                    index: v.0,
                    count: n,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("{context} refers to variable {index}, program has {count}")]
    UnknownVariable {
        context: String,
        index: usize,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    /// For feasibility programs `value` is zero and `point` is any feasible
    /// point.
    Optimal {
        point: Vec<Money>,
        value: Money,
    },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn point(&self) -> Option<&[Money]> {
        match self {
            LpOutcome::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }

    pub fn value(&self) -> Option<&Money> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible)
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    lp.check()?;
    let outcome = match run::<Ratio<i128>>(lp) {
        Ok(outcome) => outcome,
        Err(Overflow) => run::<BigRational>(lp).expect("arbitrary precision never overflows"),
    };
    if let LpOutcome::Optimal { point, .. } = &outcome {
        debug_assert!(lp.is_feasible_point(point), "simplex returned an infeasible point");
    }
    Ok(outcome)
}

#[derive(Debug)]
struct Overflow;

type Step<T> = Result<T, Overflow>;

trait Field: Clone + Ord {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_money(m: &Money) -> Step<Self>;
    fn to_money(&self) -> Money;
    fn add(&self, o: &Self) -> Step<Self>;
    fn sub(&self, o: &Self) -> Step<Self>;
    fn mul(&self, o: &Self) -> Step<Self>;
    fn div(&self, o: &Self) -> Step<Self>;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn neg(&self) -> Step<Self> {
        Self::zero().sub(self)
    }
}

impl Field for Ratio<i128> {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_money(m: &Money) -> Step<Self> {
        let r = m.as_rational();
        match (r.numer().to_i128(), r.denom().to_i128()) {
            (Some(n), Some(d)) if n != i128::MIN => Ok(Ratio::new_raw(n, d)),
            _ => Err(Overflow),
        }
    }
    fn to_money(&self) -> Money {
        Money::from_rational(BigRational::new(
            BigInt::from(*self.numer()),
            BigInt::from(*self.denom()),
        ))
    }
    fn add(&self, o: &Self) -> Step<Self> {
        self.checked_add(o).ok_or(Overflow)
    }
    fn sub(&self, o: &Self) -> Step<Self> {
        self.checked_sub(o).ok_or(Overflow)
    }
    fn mul(&self, o: &Self) -> Step<Self> {
        self.checked_mul(o).ok_or(Overflow)
    }
    fn div(&self, o: &Self) -> Step<Self> {
        self.checked_div(o).ok_or(Overflow)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_money(m: &Money) -> Step<Self> {
        Ok(m.as_rational().clone())
    }
    fn to_money(&self) -> Money {
        Money::from_rational(self.clone())
    }
    fn add(&self, o: &Self) -> Step<Self> {
        Ok(self + o)
    }
    fn sub(&self, o: &Self) -> Step<Self> {
        Ok(self - o)
    }
    fn mul(&self, o: &Self) -> Step<Self> {
        Ok(self * o)
    }
    fn div(&self, o: &Self) -> Step<Self> {
        Ok(self / o)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
}

struct Tableau<T> {
    /// Each row has `cols + 1` entries; the last is the right-hand side.
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    cols: usize,
    /// Columns that may never enter (artificials after phase one).
    banned: Vec<bool>,
    /// Reduced costs, with the negated objective value in the last slot.
    obj: Vec<T>,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl<T: Field> Tableau<T> {
    fn pivot(&mut self, p: usize, q: usize) -> Step<()> {
        let width = self.cols + 1;
        let inv = T::one().div(&self.rows[p][q])?;
        let mut nz = Vec::new();
        for j in 0..width {
            if !self.rows[p][j].is_zero() {
                let v = self.rows[p][j].mul(&inv)?;
                self.rows[p][j] = v;
                nz.push(j);
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[p]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == p || row[q].is_zero() {
                continue;
            }
            let f = row[q].clone();
            for &j in &nz {
                row[j] = row[j].sub(&f.mul(&pivot_row[j])?)?;
            }
        }
        if !self.obj[q].is_zero() {
            let f = self.obj[q].clone();
            for &j in &nz {
                self.obj[j] = self.obj[j].sub(&f.mul(&pivot_row[j])?)?;
            }
        }
        self.rows[p] = pivot_row;
        self.basis[p] = q;
        Ok(())
    }

    /// Bland's rule: smallest improving column enters; among tied ratios the
    /// row whose basic variable has the smallest index leaves.
    fn optimize(&mut self) -> Step<Phase> {
        loop {
            let Some(q) = (0..self.cols).find(|&j| !self.banned[j] && self.obj[j].is_positive()) else {
                return Ok(Phase::Optimal);
            };
            let mut best: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[q].is_positive() {
                    continue;
                }
                let ratio = row[self.cols].div(&row[q])?;
                let better = match &best {
                    None => true,
                    Some((b, r)) => ratio < *r || (ratio == *r && self.basis[i] < self.basis[*b]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                None => return Ok(Phase::Unbounded),
                Some((p, _)) => self.pivot(p, q)?,
            }
        }
    }

    fn set_objective(&mut self, costs: &[T]) -> Step<()> {
        let mut obj: Vec<T> = costs.to_vec();
        obj.push(T::zero());
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (o, a) in obj.iter_mut().zip(row) {
                if !a.is_zero() {
                    *o = o.sub(&cb.mul(a)?)?;
                }
            }
        }
        self.obj = obj;
        Ok(())
    }
}

fn run<T: Field>(lp: &LinearProgram) -> Step<LpOutcome> {
    // Structural columns: one per nonnegative variable, two per free one.
    let mut col_of = Vec::with_capacity(lp.var_count());
    let mut cols = 0;
    for kind in &lp.kinds {
        col_of.push(cols);
        cols += match kind {
            VarKind::Free => 2,
            VarKind::NonNegative => 1,
        };
    }
    let structural = cols;

    struct Row<T> {
        coeffs: Vec<(usize, T)>,
        relation: Relation,
        rhs: T,
    }
    let mut rows_in = Vec::with_capacity(lp.constraints.len());
    for c in &lp.constraints {
        let mut dense = vec![T::zero(); structural];
        for (v, coef) in &c.terms {
            let a = T::from_money(coef)?;
            let base = col_of[v.0];
            dense[base] = dense[base].add(&a)?;
            if lp.kinds[v.0] == VarKind::Free {
                dense[base + 1] = dense[base + 1].sub(&a)?;
            }
        }
        let mut rhs = T::from_money(&c.rhs)?;
        let mut relation = c.relation;
        if rhs < T::zero() {
            for a in dense.iter_mut() {
                if !a.is_zero() {
                    *a = a.neg()?;
                }
            }
            rhs = rhs.neg()?;
            relation = match relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        let coeffs = dense.into_iter().enumerate().filter(|(_, a)| !a.is_zero()).collect();
        rows_in.push(Row { coeffs, relation, rhs });
    }

    let slack_count = rows_in.iter().filter(|r| r.relation != Relation::Eq).count();
    let art_count = rows_in.iter().filter(|r| r.relation != Relation::Le).count();
    let first_art = structural + slack_count;
    let total = first_art + art_count;

    let mut rows = Vec::with_capacity(rows_in.len());
    let mut basis = Vec::with_capacity(rows_in.len());
    let mut next_slack = structural;
    let mut next_art = first_art;
    for r in rows_in {
        let mut row = vec![T::zero(); total + 1];
        for (j, a) in r.coeffs {
            row[j] = a;
        }
        row[total] = r.rhs;
        match r.relation {
            Relation::Le => {
                row[next_slack] = T::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = T::one().neg()?;
                next_slack += 1;
                row[next_art] = T::one();
                basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = T::one();
                basis.push(next_art);
                next_art += 1;
            }
        }
        rows.push(row);
    }

    let mut tab = Tableau {
        rows,
        basis,
        cols: total,
        banned: vec![false; total],
        obj: Vec::new(),
    };

    if art_count > 0 {
        // Phase one: maximize minus the sum of artificials.
        let mut costs = vec![T::zero(); total];
        for c in costs.iter_mut().skip(first_art) {
            *c = T::one().neg()?;
        }
        tab.set_objective(&costs)?;
        tab.optimize()?;
        if !tab.obj[total].is_zero() {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive remaining (zero-level) artificials out of the basis, dropping
        // rows that turn out to be redundant.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= first_art {
                match (0..first_art).find(|&j| !tab.rows[i][j].is_zero()) {
                    Some(q) => {
                        tab.pivot(i, q)?;
                        i += 1;
                    }
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for b in tab.banned.iter_mut().skip(first_art) {
            *b = true;
        }
    }

    let (costs, constant) = match &lp.objective {
        Objective::Feasibility => (None, Money::zero()),
        Objective::Maximize { terms, constant } => {
            let mut costs = vec![T::zero(); total];
            for (v, coef) in terms {
                let c = T::from_money(coef)?;
                let base = col_of[v.0];
                costs[base] = costs[base].add(&c)?;
                if lp.kinds[v.0] == VarKind::Free {
                    costs[base + 1] = costs[base + 1].sub(&c)?;
                }
            }
            (Some(costs), constant.clone())
        }
    };
    if let Some(costs) = &costs {
        tab.set_objective(costs)?;
        if let Phase::Unbounded = tab.optimize()? {
            return Ok(LpOutcome::Unbounded);
        }
    }

    let mut col_values = vec![T::zero(); total];
    for (row, &b) in tab.rows.iter().zip(&tab.basis) {
        col_values[b] = row[total].clone();
    }
    let point: Vec<Money> = lp
        .kinds
        .iter()
        .zip(&col_of)
        .map(|(kind, &c)| match kind {
            VarKind::NonNegative => Ok(col_values[c].to_money()),
            VarKind::Free => Ok(col_values[c].sub(&col_values[c + 1])?.to_money()),
        })
        .collect::<Step<_>>()?;
    let value = match costs {
        None => Money::zero(),
        Some(_) => tab.obj[total].neg()?.to_money() + constant,
    };
    Ok(LpOutcome::Optimal { point, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::money::money;
    use proptest::prelude::*;

    fn one() -> Money {
        money(1)
    }

    #[test]
    fn maximize_single_bound() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarKind::Free);
        lp.add_constraint("cap", vec![(x, one())], Relation::Le, money(3));
        lp.maximize(vec![(x, one())], Money::zero());
        let out = solve(&lp).unwrap();
        assert_eq!(out.point().unwrap(), &[money(3)]);
        assert_eq!(out.value().unwrap(), &money(3));
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarKind::Free);
        lp.add_constraint("lo", vec![(x, one())], Relation::Ge, money(1));
        lp.add_constraint("hi", vec![(x, one())], Relation::Le, money(0));
        assert_eq!(solve(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn sum_bound_with_partial_cap() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarKind::Free);
        let y = lp.add_var("y", VarKind::Free);
        lp.add_constraint("sum", vec![(x, one()), (y, one())], Relation::Le, money(5));
        lp.add_constraint("x", vec![(x, one())], Relation::Le, money(2));
        lp.maximize(vec![(x, one()), (y, one())], Money::zero());
        let out = solve(&lp).unwrap();
        assert_eq!(out.value().unwrap(), &money(5));
        assert!(lp.is_feasible_point(out.point().unwrap()));
    }

    #[test]
    fn unbounded_and_free_negative() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarKind::Free);
        lp.add_constraint("lo", vec![(x, one())], Relation::Ge, money(-4));
        lp.maximize(vec![(x, one())], Money::zero());
        assert_eq!(solve(&lp).unwrap(), LpOutcome::Unbounded);
        lp.maximize(vec![(x, money(-1))], money(10));
        let out = solve(&lp).unwrap();
        assert_eq!(out.point().unwrap(), &[money(-4)]);
        assert_eq!(out.value().unwrap(), &money(14));
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarKind::NonNegative);
        let y = lp.add_var("y", VarKind::NonNegative);
        lp.add_constraint("a", vec![(x, one()), (y, one())], Relation::Eq, money(4));
        lp.add_constraint("b", vec![(x, money(2)), (y, money(2))], Relation::Eq, money(8));
        lp.maximize(vec![(x, one())], Money::zero());
        let out = solve(&lp).unwrap();
        assert_eq!(out.point().unwrap(), &[money(4), money(0)]);
    }

    #[test]
    fn overflow_falls_back_to_big_rationals() {
        let big: Money = "170141183460469231731687303715884105727".parse().unwrap();
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarKind::Free);
        let y = lp.add_var("y", VarKind::Free);
        lp.add_constraint(
            "a",
            vec![(x, big.clone()), (y, one())],
            Relation::Le,
            big.clone() * &big,
        );
        lp.add_constraint("b", vec![(x, one()), (y, big.clone())], Relation::Le, big.clone());
        lp.add_constraint("c", vec![(y, one())], Relation::Ge, money(0));
        lp.maximize(vec![(x, one()), (y, one())], Money::zero());
        let out = solve(&lp).unwrap();
        assert!(lp.is_feasible_point(out.point().unwrap()));
        assert_eq!(out.value().unwrap(), &big);
    }

    #[test]
    fn malformed_program_is_rejected() {
        let mut lp = LinearProgram::new();
        lp.add_var("x", VarKind::Free);
        lp.add_constraint("bad", vec![(VarId(3), one())], Relation::Le, one());
        assert!(matches!(solve(&lp), Err(LpError::UnknownVariable { index: 3, .. })));
    }

    #[test]
    fn deterministic() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarKind::NonNegative);
        let y = lp.add_var("y", VarKind::NonNegative);
        lp.add_constraint("a", vec![(x, one()), (y, one())], Relation::Le, money(1));
        lp.maximize(vec![(x, one()), (y, one())], Money::zero());
        let first = solve(&lp).unwrap();
        for _ in 0..5 {
            assert_eq!(solve(&lp).unwrap(), first);
        }
    }

    /// Optimum of a two-variable program by enumerating all vertices formed
    /// by pairs of tight constraints.
    fn vertex_oracle(rows: &[(i64, i64, i64)], c: (i64, i64)) -> Option<Money> {
        let mut best: Option<Money> = None;
        for a in 0..rows.len() {
            for b in a + 1..rows.len() {
                let (a1, a2, ab) = rows[a];
                let (b1, b2, bb) = rows[b];
                let det = a1 * b2 - a2 * b1;
                if det == 0 {
                    continue;
                }
                let x = Money::ratio(ab * b2 - a2 * bb, det);
                let y = Money::ratio(a1 * bb - ab * b1, det);
                let ok = rows
                    .iter()
                    .all(|&(r1, r2, rb)| money(r1) * &x + money(r2) * &y <= money(rb));
                if ok {
                    let v = money(c.0) * &x + money(c.1) * &y;
                    if best.as_ref().is_none_or(|b| &v > b) {
                        best = Some(v);
                    }
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(
            rows in proptest::collection::vec((-5i64..6, -5i64..6, 0i64..20), 1..5),
            c in (-5i64..6, -5i64..6),
        ) {
            // Box the region so the optimum is finite and attained at a vertex.
            let mut all = rows.clone();
            all.extend([(1, 0, 10), (-1, 0, 10), (0, 1, 10), (0, -1, 10)]);
            let mut lp = LinearProgram::new();
            let x = lp.add_var("x", VarKind::Free);
            let y = lp.add_var("y", VarKind::Free);
            for (k, &(a, b, r)) in all.iter().enumerate() {
                lp.add_constraint(format!("r{k}"), vec![(x, money(a)), (y, money(b))], Relation::Le, money(r));
            }
            lp.maximize(vec![(x, money(c.0)), (y, money(c.1))], Money::zero());
            let out = solve(&lp).unwrap();
            prop_assert!(lp.is_feasible_point(out.point().unwrap()));
            prop_assert_eq!(out.value().cloned(), vertex_oracle(&all, c));
        }

        #[test]
        fn strong_duality(
            a in proptest::collection::vec(0i64..6, 6),
            b in proptest::collection::vec(1i64..15, 2),
            c in proptest::collection::vec(-3i64..6, 3),
        ) {
            // Primal: max c·x, Ax ≤ b, x ≥ 0. Dual: min b·y, Aᵀy ≥ c, y ≥ 0.
            let mut primal = LinearProgram::new();
            let xs: Vec<VarId> = (0..3).map(|k| primal.add_var(format!("x{k}"), VarKind::NonNegative)).collect();
            for r in 0..2 {
                let terms = (0..3).map(|k| (xs[k], money(a[3 * r + k]))).collect();
                primal.add_constraint(format!("p{r}"), terms, Relation::Le, money(b[r]));
            }
            primal.maximize(xs.iter().zip(&c).map(|(&v, &ck)| (v, money(ck))).collect(), Money::zero());

            let mut dual = LinearProgram::new();
            let ys: Vec<VarId> = (0..2).map(|r| dual.add_var(format!("y{r}"), VarKind::NonNegative)).collect();
            for k in 0..3 {
                let terms = (0..2).map(|r| (ys[r], money(a[3 * r + k]))).collect();
                dual.add_constraint(format!("d{k}"), terms, Relation::Ge, money(c[k]));
            }
            dual.maximize(ys.iter().zip(&b).map(|(&v, &bk)| (v, money(-bk))).collect(), Money::zero());

            let p = solve(&primal).unwrap();
            let d = solve(&dual).unwrap();
            match (&p, &d) {
                (LpOutcome::Optimal { value: pv, .. }, LpOutcome::Optimal { value: dv, .. }) => {
                    prop_assert_eq!(pv.clone(), -dv.clone());
                }
                (LpOutcome::Unbounded, LpOutcome::Infeasible) => {}
                other => prop_assert!(false, "unexpected pair {:?}", other),
            }
        }
    }
}
