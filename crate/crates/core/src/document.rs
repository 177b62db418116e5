//! JSON documents exchanged by the command line tool and the HTTP service,
//! and the solve and check operations over them.
//!
//! Money is always a string: a decimal such as `"12.5"` or an exact
//! fraction such as `"1/3"`.

use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{check_def, check_nef, check_strong_nef, check_uef, StrongNefVerdict};
use crate::model::{validate, Assignment, Instance, PartialSolution, PriceMatrix, Solution};
use crate::money::Money;
use crate::negotiation::{reconstruct, NegotiationLedger};
use crate::solvers::{
    construct_nef, optimize_nef, optimize_strong_nef, solve_def, solve_strong_nef, solve_uef, Objective, PriceSign,
};

/// Parses JSON, reporting the line, column and field path of any error.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse(format!(
            "line {} column {}, at {}: {}",
            inner.line(),
            inner.column(),
            if path.is_empty() { "." } else { &path },
            inner
        ))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApartmentEntry {
    pub name: String,
    pub rent: Money,
    pub rooms: Vec<String>,
}

/// An instance with display names. `values[i][j][k]` is player `i`'s value
/// for room `k` of apartment `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub players: Vec<String>,
    pub apartments: Vec<ApartmentEntry>,
    pub values: Vec<Vec<Vec<Money>>>,
    #[serde(default)]
    pub normalized: bool,
}

impl InstanceDocument {
    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text)
    }

    /// The instance, after checking shapes and validation rules.
    pub fn to_instance(&self) -> Result<Instance> {
        let n = self.players.len();
        for (j, apt) in self.apartments.iter().enumerate() {
            if apt.rooms.len() != n {
                return Err(Error::Shape(format!(
                    "apartments[{j}] lists {} rooms for {n} players",
                    apt.rooms.len()
                )));
            }
        }
        if self.values.len() != n {
            return Err(Error::Shape(format!(
                "values has {} rows for {n} players",
                self.values.len()
            )));
        }
        let rents = self.apartments.iter().map(|a| a.rent.clone()).collect();
        let inst = Instance::new(self.values.clone(), rents, self.normalized)?;
        let report = validate(&inst);
        if !report.is_ok() {
            let text = serde_json::to_string(&report.violations).expect("violations serialize");
            return Err(Error::InvalidInstance(text));
        }
        Ok(inst)
    }

    /// A document with generated names.
    pub fn from_instance(inst: &Instance) -> Self {
        let n = inst.players();
        InstanceDocument {
            players: (0..n).map(|i| format!("player {i}")).collect(),
            apartments: (0..inst.apartments())
                .map(|j| ApartmentEntry {
                    name: format!("apartment {j}"),
                    rent: inst.rent(j).clone(),
                    rooms: (0..n).map(|k| format!("room {k}")).collect(),
                })
                .collect(),
            values: inst.values().to_vec(),
            normalized: inst.is_normalized(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Notion {
    Uef,
    Nef,
    StrongNef,
    Def,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    Maximin,
    Equitability,
    #[default]
    None,
}

impl ObjectiveKind {
    pub fn objective(self, players: usize) -> Option<Objective> {
        match self {
            ObjectiveKind::Maximin => Some(Objective::maximin(players)),
            ObjectiveKind::Equitability => Some(Objective::equitability(players)),
            ObjectiveKind::None => None,
        }
    }
}

macro_rules! kebab_str {
    ($ty:ty, $($variant:ident => $name:literal),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(Self::$variant),)+
                    other => Err(Error::Parse(format!(
                        "unknown value {other:?}; expected one of {}",
                        [$($name),+].join(", ")
                    ))),
                }
            }
        }
    };
}

kebab_str!(Notion, Uef => "uef", Nef => "nef", StrongNef => "strong-nef", Def => "def");
kebab_str!(ObjectiveKind, Maximin => "maximin", Equitability => "equitability", None => "none");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveRequest {
    pub notion: Notion,
    #[serde(default)]
    pub objective: ObjectiveKind,
    /// Sign restriction for distributional solutions.
    #[serde(default)]
    pub price_sign: PriceSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solved,
    NoneExists,
}

/// The instance together with a solve result. Fields other than the
/// instance, notion and status are absent when no solution exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionDocument {
    #[serde(flatten)]
    pub instance: InstanceDocument,
    pub notion: Notion,
    #[serde(default)]
    pub objective: ObjectiveKind,
    pub status: SolveStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Assignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<PriceMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen: Option<usize>,
    /// Utilities in the chosen apartment, or expected utilities under the
    /// lottery for distributional solutions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilities: Option<Vec<Money>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_value: Option<Money>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_q: Option<PriceMatrix>,
    /// Trades turning `witness_q` into `prices`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<NegotiationLedger>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<Money>>,
}

impl SolutionDocument {
    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text)
    }

    fn empty(doc: &InstanceDocument, request: &SolveRequest) -> Self {
        SolutionDocument {
            instance: doc.clone(),
            notion: request.notion,
            objective: request.objective,
            status: SolveStatus::NoneExists,
            assignment: None,
            prices: None,
            chosen: None,
            utilities: None,
            objective_value: None,
            witness_q: None,
            ledger: None,
            distribution: None,
        }
    }

    fn negotiated(
        mut self,
        inst: &Instance,
        solution: Solution,
        witness_q: PriceMatrix,
        objective_value: Option<Money>,
    ) -> Result<Self> {
        let ledger = reconstruct(solution.assignment(), &witness_q, solution.prices())?;
        self.status = SolveStatus::Solved;
        self.utilities = Some(solution.utilities(inst));
        self.chosen = Some(solution.chosen);
        self.assignment = Some(solution.partial.assignment);
        self.prices = Some(solution.partial.prices);
        self.objective_value = objective_value;
        self.witness_q = Some(witness_q);
        self.ledger = Some(ledger);
        Ok(self)
    }

    fn require_partial(&self) -> Result<PartialSolution> {
        let assignment = self
            .assignment
            .clone()
            .ok_or(Error::IncompleteSolution("an assignment"))?;
        let prices = self.prices.clone().ok_or(Error::IncompleteSolution("prices"))?;
        Ok(PartialSolution::new(assignment, prices))
    }

    fn require_solution(&self) -> Result<Solution> {
        let partial = self.require_partial()?;
        let chosen = self.chosen.ok_or(Error::IncompleteSolution("a chosen apartment"))?;
        Ok(Solution { partial, chosen })
    }
}

/// Runs the solver selected by `request`. Without an objective the
/// negotiated notions use their direct constructions; with one they
/// optimize it.
pub fn solve(doc: &InstanceDocument, request: &SolveRequest) -> Result<SolutionDocument> {
    let inst = doc.to_instance()?;
    let out = SolutionDocument::empty(doc, request);
    let objective = request.objective.objective(inst.players());
    match request.notion {
        Notion::Uef => {
            let Some(sol) = solve_uef(&inst)? else {
                return Ok(out);
            };
            let value = objective.as_ref().map(|o| o.eval(&sol.utilities(&inst)));
            Ok(SolutionDocument {
                status: SolveStatus::Solved,
                utilities: Some(sol.utilities(&inst)),
                chosen: Some(sol.chosen),
                assignment: Some(sol.partial.assignment),
                prices: Some(sol.partial.prices),
                objective_value: value,
                ..out
            })
        }
        Notion::Nef => match objective {
            None => {
                let found = construct_nef(&inst)?;
                out.negotiated(&inst, found.solution, found.witness_q, None)
            }
            Some(o) => {
                let found = optimize_nef(&inst, &o)?;
                out.negotiated(&inst, found.solution, found.witness_q, Some(found.objective_value))
            }
        },
        Notion::StrongNef => match objective {
            None => {
                let found = solve_strong_nef(&inst)?;
                out.negotiated(&inst, found.solution, found.witness_q, None)
            }
            Some(o) => {
                let found = optimize_strong_nef(&inst, &o)?;
                out.negotiated(&inst, found.solution, found.witness_q, Some(found.objective_value))
            }
        },
        Notion::Def => {
            let Some(found) = solve_def(&inst, request.price_sign)? else {
                return Ok(out);
            };
            let partial = PartialSolution::new(found.assignment.clone(), found.prices.clone());
            let expected: Vec<Money> = (0..inst.players())
                .map(|i| {
                    (0..inst.apartments())
                        .map(|j| &found.distribution[j] * partial.util(&inst, i, j))
                        .sum()
                })
                .collect();
            let value = objective.as_ref().map(|o| o.eval(&expected));
            Ok(SolutionDocument {
                status: SolveStatus::Solved,
                utilities: Some(expected),
                assignment: Some(found.assignment),
                prices: Some(found.prices),
                distribution: Some(found.distribution),
                objective_value: value,
                ..out
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOutcome {
    Holds,
    Fails,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub notion: Notion,
    pub outcome: CheckOutcome,
    /// The checker's verdict with its witness or first violation.
    pub detail: serde_json::Value,
}

/// Checks the solution in `solution` against the instance in `doc`.
pub fn check(doc: &InstanceDocument, solution: &SolutionDocument, notion: Notion) -> Result<CheckReport> {
    let inst = doc.to_instance()?;
    let (outcome, detail) = match notion {
        Notion::Uef => {
            let v = check_uef(&inst, &solution.require_solution()?)?;
            (holds(v.holds()), detail(&v))
        }
        Notion::Nef => {
            let v = check_nef(&inst, &solution.require_solution()?)?;
            (holds(v.holds()), detail(&v))
        }
        Notion::StrongNef => {
            let v = check_strong_nef(&inst, &solution.require_solution()?)?;
            let outcome = match v {
                StrongNefVerdict::Satisfied { .. } => CheckOutcome::Holds,
                StrongNefVerdict::Violated { .. } => CheckOutcome::Fails,
                StrongNefVerdict::Unknown => CheckOutcome::Unknown,
            };
            (outcome, detail(&v))
        }
        Notion::Def => {
            let partial = solution.require_partial()?;
            let dist = solution
                .distribution
                .as_ref()
                .ok_or(Error::IncompleteSolution("a distribution"))?;
            let v = check_def(&inst, &partial.assignment, &partial.prices, dist)?;
            (holds(v.holds()), detail(&v))
        }
    };
    Ok(CheckReport {
        notion,
        outcome,
        detail,
    })
}

fn detail<T: Serialize>(verdict: &T) -> serde_json::Value {
    serde_json::to_value(verdict).expect("verdicts serialize")
}

fn holds(h: bool) -> CheckOutcome {
    if h {
        CheckOutcome::Holds
    } else {
        CheckOutcome::Fails
    }
}
