//! Random instances, Monte Carlo estimates and closed-form probabilities for
//! the existence of universally envy-free solutions.
//!
//! Every trial draws from its own `ChaCha8Rng` seeded with
//! `splitmix64(master ^ splitmix64(trial))`, so results do not depend on how
//! trials are scheduled across threads.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::matching::max_weight;
use crate::model::Instance;
use crate::money::Money;
use crate::solvers::solve_uef;

/// Distribution of a single room value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DistributionSpec {
    /// Finitely many values with exact probabilities.
    Discrete {
        values: Vec<Money>,
        probabilities: Vec<Money>,
    },
    /// Uniform on `[0, 1)`, sampled on the grid of multiples of `2^-32`.
    Uniform01,
    /// Two players with Bernoulli(1/2) values that agree with probability
    /// `r`, independently per room.
    CorrelatedBernoulli { r: Money },
}

impl DistributionSpec {
    pub fn discrete(values: Vec<Money>, probabilities: Vec<Money>) -> Result<Self> {
        let spec = DistributionSpec::Discrete { values, probabilities };
        spec.validate()?;
        Ok(spec)
    }

    pub fn correlated_bernoulli(r: Money) -> Result<Self> {
        let spec = DistributionSpec::CorrelatedBernoulli { r };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::Discrete { values, probabilities } => {
                if values.is_empty() || values.len() != probabilities.len() {
                    return Err(Error::InvalidSpec(format!(
                        "{} values with {} probabilities",
                        values.len(),
                        probabilities.len()
                    )));
                }
                if probabilities.iter().any(Money::is_negative) {
                    return Err(Error::InvalidSpec("negative probability".into()));
                }
                let total: Money = probabilities.iter().sum();
                if total != Money::one() {
                    return Err(Error::InvalidSpec(format!("probabilities sum to {total}")));
                }
            }
            DistributionSpec::Uniform01 => {}
            DistributionSpec::CorrelatedBernoulli { r } => {
                if r.is_negative() || r > &Money::one() {
                    return Err(Error::InvalidSpec(format!("agreement probability {r} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }

    fn check_players(&self, n: usize) -> Result<()> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Shape("at least one player is required".into()));
        }
        if matches!(self, DistributionSpec::CorrelatedBernoulli { .. }) && n != 2 {
            return Err(Error::InvalidSpec(format!(
                "correlated Bernoulli values are defined for two players, not {n}"
            )));
        }
        Ok(())
    }

    /// Values of all players for one room.
    fn sample_room(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Money> {
        match self {
            DistributionSpec::Discrete { values, probabilities } => (0..n)
                .map(|_| {
                    let u = uniform_dyadic(rng);
                    let mut acc = Money::zero();
                    for (v, p) in values.iter().zip(probabilities) {
                        acc += p;
                        if u < acc {
                            return v.clone();
                        }
                    }
                    values.last().expect("validated nonempty").clone()
                })
                .collect(),
            DistributionSpec::Uniform01 => (0..n).map(|_| uniform_dyadic(rng)).collect(),
            DistributionSpec::CorrelatedBernoulli { r } => {
                let first: bool = rng.gen();
                let agree = uniform_dyadic(rng) < *r;
                let second = if agree { first } else { !first };
                vec![Money::from(first as i64), Money::from(second as i64)]
            }
        }
    }
}

fn uniform_dyadic(rng: &mut ChaCha8Rng) -> Money {
    Money::ratio(rng.gen::<u32>() as i64, 1i64 << 32)
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::Discrete { values, probabilities } => {
                let join = |xs: &[Money]| xs.iter().map(Money::to_string).collect::<Vec<_>>().join(",");
                write!(f, "discrete:{}@{}", join(values), join(probabilities))
            }
            DistributionSpec::Uniform01 => f.write_str("uniform01"),
            DistributionSpec::CorrelatedBernoulli { r } => write!(f, "corr-bernoulli:{r}"),
        }
    }
}

/// Parses `uniform01`, `discrete:0,1@0.5,0.5` or `corr-bernoulli:0.25`.
impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let money = |x: &str| {
            x.trim()
                .parse::<Money>()
                .map_err(|e| Error::InvalidSpec(format!("bad number {x:?}: {}", e.0)))
        };
        let list = |xs: &str| xs.split(',').map(money).collect::<Result<Vec<_>>>();
        let s = s.trim();
        if s == "uniform01" {
            return Ok(DistributionSpec::Uniform01);
        }
        if let Some(rest) = s.strip_prefix("discrete:") {
            let (values, probabilities) = rest
                .split_once('@')
                .ok_or_else(|| Error::InvalidSpec("discrete spec needs values@probabilities".into()))?;
            return DistributionSpec::discrete(list(values)?, list(probabilities)?);
        }
        if let Some(rest) = s.strip_prefix("corr-bernoulli:") {
            return DistributionSpec::correlated_bernoulli(money(rest)?);
        }
        Err(Error::InvalidSpec(format!("unknown distribution {s:?}")))
    }
}

impl Serialize for DistributionSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of trial `index` under `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// Draws apartments one at a time from a single stream, so the first `m`
/// apartments do not depend on how many more are drawn later.
pub struct ApartmentSampler<'a> {
    players: usize,
    spec: &'a DistributionSpec,
    rng: ChaCha8Rng,
}

impl<'a> ApartmentSampler<'a> {
    pub fn new(players: usize, spec: &'a DistributionSpec, seed: u64) -> Result<Self> {
        spec.check_players(players)?;
        Ok(ApartmentSampler {
            players,
            spec,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// `values[i][k]` for the next apartment.
    pub fn next_apartment(&mut self) -> Vec<Vec<Money>> {
        let rooms: Vec<Vec<Money>> = (0..self.players)
            .map(|_| self.spec.sample_room(self.players, &mut self.rng))
            .collect();
        (0..self.players)
            .map(|i| rooms.iter().map(|room| room[i].clone()).collect())
            .collect()
    }
}

/// An unnormalized instance with `n` players, `m` apartments of rent `rent`
/// and values drawn independently per room.
pub fn sample_instance(n: usize, m: usize, spec: &DistributionSpec, rent: &Money, seed: u64) -> Result<Instance> {
    if m == 0 {
        return Err(Error::Shape("at least one apartment is required".into()));
    }
    let mut sampler = ApartmentSampler::new(n, spec, seed)?;
    let apartments: Vec<Vec<Vec<Money>>> = (0..m).map(|_| sampler.next_apartment()).collect();
    let values = (0..n)
        .map(|i| apartments.iter().map(|a| a[i].clone()).collect())
        .collect();
    Instance::new(values, vec![rent.clone(); m], false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    pub ci95: (f64, f64),
    pub seed: u64,
}

impl TrialReport {
    pub fn new(trials: u64, successes: u64, seed: u64) -> Self {
        TrialReport {
            trials,
            successes,
            estimate: successes as f64 / trials as f64,
            ci95: wilson_interval(successes, trials, 1.96),
            seed,
        }
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let t = trials as f64;
    let p = successes as f64 / t;
    let z2 = z * z;
    let denom = 1.0 + z2 / t;
    let center = (p + z2 / (2.0 * t)) / denom;
    let half = z / denom * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn run_trials(trials: u64, seed: u64, trial: impl Fn(u64) -> Result<bool> + Sync) -> Result<TrialReport> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| trial(trial_seed(seed, t)))
        .collect::<Result<Vec<bool>>>()?;
    let successes = outcomes.iter().filter(|&&s| s).count() as u64;
    Ok(TrialReport::new(trials, successes, seed))
}

/// Fraction of sampled instances that admit a universally envy-free
/// solution.
pub fn estimate_uef_prob(
    n: usize,
    m: usize,
    spec: &DistributionSpec,
    rent: &Money,
    trials: u64,
    seed: u64,
) -> Result<TrialReport> {
    spec.check_players(n)?;
    run_trials(trials, seed, |s| {
        Ok(solve_uef(&sample_instance(n, m, spec, rent, s)?)?.is_some())
    })
}

/// Fraction of sampled instances in which the maximum unbalanced welfare is
/// attained by a bijection (see [`check_event_f`]).
pub fn estimate_event_f(
    n: usize,
    m: usize,
    spec: &DistributionSpec,
    rent: &Money,
    trials: u64,
    seed: u64,
) -> Result<TrialReport> {
    spec.check_players(n)?;
    run_trials(trials, seed, |s| {
        Ok(check_event_f(&sample_instance(n, m, spec, rent, s)?))
    })
}

/// Welfare of `apartment` if every room went to whoever values it most,
/// even several rooms to one player.
pub fn muw(inst: &Instance, apartment: usize) -> Result<Money> {
    check_index("apartment", apartment, inst.apartments())?;
    Ok(muw_of(inst, apartment))
}

fn muw_of(inst: &Instance, j: usize) -> Money {
    (0..inst.players())
        .map(|k| column_max(inst, j, k).clone())
        .sum::<Money>()
        - inst.rent(j)
}

fn column_max(inst: &Instance, j: usize, k: usize) -> &Money {
    (0..inst.players())
        .map(|i| inst.value(i, j, k))
        .max()
        .expect("at least one player")
}

/// Whether every room of `j` can go to a distinct player who values it
/// most.
fn max_holders_match(inst: &Instance, j: usize) -> bool {
    let n = inst.players();
    let holders: Vec<Vec<Money>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| Money::from((inst.value(i, j, k) == column_max(inst, j, k)) as i64))
                .collect()
        })
        .collect();
    max_weight(&holders) == Money::from(n as i64)
}

/// Whether, in the first apartment of largest maximum unbalanced welfare,
/// that welfare is attained by a bijection. A universally envy-free
/// solution then exists.
pub fn check_event_f(inst: &Instance) -> bool {
    let values: Vec<Money> = (0..inst.apartments()).map(|j| muw_of(inst, j)).collect();
    let best = values.iter().max().expect("at least one apartment");
    let top = values.iter().position(|v| v == best).expect("maximum is attained");
    max_holders_match(inst, top)
}

/// Recognizes the structure under which no universally envy-free solution
/// exists, up to relabeling players and apartments: with apartments ranked
/// by strictly decreasing maximum unbalanced welfare, each of the top `n`
/// has a distinct player holding the maximum value of every room, and
/// apartment `n + 1` in that ranking is the unique welfare maximizer.
/// Meant for building test fixtures.
pub fn check_event_e(inst: &Instance) -> bool {
    let (n, m) = (inst.players(), inst.apartments());
    if n < 2 || m < n + 1 {
        return false;
    }
    let values: Vec<Money> = (0..m).map(|j| muw_of(inst, j)).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[b].cmp(&values[a]));
    if order.windows(2).any(|w| values[w[0]] == values[w[1]]) {
        return false;
    }
    let welfare = crate::matching::max_welfare(inst);
    let pivot = order[n];
    if (0..m).any(|j| j != pivot && welfare[j] >= welfare[pivot]) {
        return false;
    }
    let dominates: Vec<Vec<Money>> = order[..n]
        .iter()
        .map(|&j| {
            (0..n)
                .map(|i| Money::from((0..n).all(|k| inst.value(i, j, k) == column_max(inst, j, k)) as i64))
                .collect()
        })
        .collect();
    max_weight(&dominates) == Money::from(n as i64)
}

/// Exact probability that a universally envy-free solution exists for two
/// players with Bernoulli(1/2) values agreeing with probability `r`, rent 1
/// and `m` apartments.
pub fn closed_form_uef_prob(m: u32, r: &Money) -> Result<Money> {
    if m == 0 {
        return Err(Error::Shape("at least one apartment is required".into()));
    }
    if r.is_negative() || r > &Money::one() {
        return Err(Error::InvalidSpec(format!("agreement probability {r} outside [0, 1]")));
    }
    let e = m as i32;
    let quarter = Money::ratio(1, 4);
    let r2 = r * r;
    let two = Money::from(2);
    let four = Money::from(4);
    let no_uef = ((&r2 + &two) * &quarter).pow(e) - &two * quarter.pow(e) - ((&four * r - &r2) * &quarter).pow(e)
        + &two * ((&two * r - &r2) * &quarter).pow(e);
    Ok(Money::one() - no_uef)
}

/// For two players with 0/1 values and unit rents: `true` exactly when no
/// universally envy-free solution exists, decided by the conjunction of
/// three conditions:
/// no apartment lets both players get a room they value,
/// both players value some room,
/// and some apartment is entirely valued by one player and not the other.
pub fn three_events_test(inst: &Instance) -> Result<bool> {
    if inst.players() != 2 {
        return Err(Error::Shape(format!("{} players; the test needs two", inst.players())));
    }
    if inst.rents().iter().any(|r| r != &Money::one()) {
        return Err(Error::Shape("the test needs every rent to be 1".into()));
    }
    let one = Money::one();
    let mut bits = Vec::with_capacity(inst.apartments());
    for j in 0..inst.apartments() {
        let mut apt = [[false; 2]; 2];
        for (i, row) in apt.iter_mut().enumerate() {
            for (k, cell) in row.iter_mut().enumerate() {
                let v = inst.value(i, j, k);
                if !v.is_zero() && v != &one {
                    return Err(Error::Shape(format!("value {v} is not 0 or 1")));
                }
                *cell = v == &one;
            }
        }
        bits.push(apt);
    }
    let no_joint = bits.iter().all(|a| !(a[0][0] && a[1][1]) && !(a[0][1] && a[1][0]));
    let both_value = (0..2).all(|i| bits.iter().any(|a| a[i][0] || a[i][1]));
    let lopsided = bits
        .iter()
        .any(|a| (0..2).any(|i| a[i][0] && a[i][1] && !a[1 - i][0] && !a[1 - i][1]));
    Ok(no_joint && both_value && lopsided)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum StoppingOutcome {
    /// Smallest apartment count with a universally envy-free solution.
    Stopped {
        apartments: usize,
    },
    CapHit {
        cap: usize,
    },
}

/// Adds sampled apartments one at a time from `first` onward, keeping the
/// earlier ones, until a universally envy-free solution exists or `cap`
/// apartments have been tried.
pub fn sequential_stopping(
    n: usize,
    spec: &DistributionSpec,
    rent: &Money,
    first: usize,
    cap: usize,
    seed: u64,
) -> Result<StoppingOutcome> {
    if first == 0 {
        return Err(Error::Shape("the starting apartment count must be at least 1".into()));
    }
    let mut sampler = ApartmentSampler::new(n, spec, seed)?;
    let mut values: Vec<Vec<Vec<Money>>> = vec![Vec::new(); n];
    for m in 1..=cap {
        for (row, apt) in values.iter_mut().zip(sampler.next_apartment()) {
            row.push(apt);
        }
        if m < first {
            continue;
        }
        let inst = Instance::new(values.clone(), vec![rent.clone(); m], false)?;
        if solve_uef(&inst)?.is_some() {
            return Ok(StoppingOutcome::Stopped { apartments: m });
        }
    }
    Ok(StoppingOutcome::CapHit { cap })
}

/// Fraction of `runs` sequential experiments that stop before `cap`.
pub fn estimate_stopping(
    n: usize,
    spec: &DistributionSpec,
    rent: &Money,
    first: usize,
    cap: usize,
    runs: u64,
    seed: u64,
) -> Result<TrialReport> {
    spec.check_players(n)?;
    run_trials(runs, seed, |s| {
        Ok(matches!(
            sequential_stopping(n, spec, rent, first, cap, s)?,
            StoppingOutcome::Stopped { .. }
        ))
    })
}

/// One line of simulation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub n: usize,
    pub m: usize,
    pub spec: String,
    pub trials: Option<u64>,
    pub successes: Option<u64>,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: Option<u64>,
}

impl SimulationRow {
    pub fn from_report(n: usize, m: usize, spec: &DistributionSpec, report: &TrialReport) -> Self {
        SimulationRow {
            n,
            m,
            spec: spec.to_string(),
            trials: Some(report.trials),
            successes: Some(report.successes),
            estimate: report.estimate,
            ci_low: report.ci95.0,
            ci_high: report.ci95.1,
            seed: Some(report.seed),
        }
    }

    /// An exact value, with a degenerate interval and no trials.
    pub fn exact(n: usize, m: usize, spec: &DistributionSpec, value: &Money) -> Self {
        let v = value.to_f64();
        SimulationRow {
            n,
            m,
            spec: spec.to_string(),
            trials: None,
            successes: None,
            estimate: v,
            ci_low: v,
            ci_high: v,
            seed: None,
        }
    }
}

/// Writes rows as CSV with a header line.
pub fn write_csv<W: Write>(rows: &[SimulationRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::Shape(format!("csv output failed: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::Shape(format!("csv output failed: {e}")))?;
    Ok(())
}
