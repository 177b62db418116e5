use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use multirent::document::{
    self, CheckOutcome, InstanceDocument, Notion, ObjectiveKind, SolutionDocument, SolveRequest, SolveStatus,
};
use multirent::solvers::PriceSign;
use multirent::stochastic::{
    closed_form_uef_prob, estimate_event_f, estimate_stopping, estimate_uef_prob, write_csv, DistributionSpec,
    SimulationRow,
};
use multirent::{Error, Money};

const EXIT_ERROR: u8 = 1;
const EXIT_NONE: u8 = 2;
const EXIT_UNKNOWN: u8 = 3;

#[derive(Parser)]
#[command(
    name = "multirent",
    version,
    about = "Fair rent division across several candidate apartments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance for one fairness notion.
    ///
    /// Exit status: 0 solved, 2 no solution exists, 1 error.
    Solve {
        #[arg(long, value_parser = parse_notion)]
        notion: Notion,
        #[arg(long, value_parser = parse_objective, default_value = "none")]
        objective: ObjectiveKind,
        /// Instance document.
        #[arg(long = "in")]
        input: PathBuf,
        /// Where to write the solution document; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Allow negative prices when searching for distributional solutions.
        #[arg(long)]
        free_prices: bool,
    },
    /// Check a solution document against an instance.
    ///
    /// Exit status: 0 holds, 2 fails, 3 undecided, 1 error.
    Check {
        #[arg(long, value_parser = parse_notion)]
        notion: Notion,
        /// Instance document.
        #[arg(long = "in")]
        input: PathBuf,
        /// Solution document.
        #[arg(long)]
        solution: PathBuf,
    },
    /// Run random experiments and write CSV rows.
    Simulate {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Number of players.
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Apartment counts: a single value, a list such as `1,2,5` or a
        /// range such as `1..8`. In stopping mode, the starting count.
        #[arg(long, default_value = "1")]
        m: String,
        /// Value distribution: `uniform01`, `discrete:0,1@0.5,0.5` or
        /// `corr-bernoulli:0.25`.
        #[arg(long, default_value = "uniform01")]
        spec: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rent of every apartment.
        #[arg(long, default_value = "1")]
        rent: String,
        /// Largest apartment count in stopping mode.
        #[arg(long, default_value_t = 500)]
        cap: usize,
        /// Grid size for the agreement probability in closed-form mode when
        /// `--spec` does not fix it.
        #[arg(long, default_value_t = 20)]
        r_steps: i64,
        /// Where to write the CSV; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Probability that a universally envy-free solution exists.
    Estimate,
    /// Fraction of runs adding apartments one at a time that stop before the cap.
    Stopping,
    /// Frequency of the maximum unbalanced welfare being attained by a bijection.
    EventF,
    /// Exact existence probability for two players with correlated 0/1 values.
    ClosedForm,
}

fn parse_notion(s: &str) -> Result<Notion, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_objective(s: &str) -> Result<ObjectiveKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn in_file<T>(path: &Path, r: multirent::Result<T>) -> Result<T, String> {
    r.map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => io::stdout().write_all(bytes).map_err(|e| e.to_string()),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    text.into_bytes()
}

fn run(command: Command) -> Result<u8, String> {
    match command {
        Command::Solve {
            notion,
            objective,
            input,
            out,
            free_prices,
        } => {
            let doc = in_file(&input, InstanceDocument::parse(&read(&input)?))?;
            let request = SolveRequest {
                notion,
                objective,
                price_sign: if free_prices {
                    PriceSign::Free
                } else {
                    PriceSign::NonNegative
                },
            };
            let solution = in_file(&input, document::solve(&doc, &request))?;
            emit(out.as_deref(), &to_json(&solution))?;
            Ok(match solution.status {
                SolveStatus::Solved => 0,
                SolveStatus::NoneExists => {
                    eprintln!("no {notion} solution exists");
                    EXIT_NONE
                }
            })
        }
        Command::Check {
            notion,
            input,
            solution,
        } => {
            let doc = in_file(&input, InstanceDocument::parse(&read(&input)?))?;
            let sol = in_file(&solution, SolutionDocument::parse(&read(&solution)?))?;
            let report = document::check(&doc, &sol, notion).map_err(|e| e.to_string())?;
            emit(None, &to_json(&report))?;
            Ok(match report.outcome {
                CheckOutcome::Holds => 0,
                CheckOutcome::Fails => EXIT_NONE,
                CheckOutcome::Unknown => EXIT_UNKNOWN,
            })
        }
        Command::Simulate {
            mode,
            n,
            m,
            spec,
            trials,
            seed,
            rent,
            cap,
            r_steps,
            out,
        } => {
            let rows = simulate(mode, n, &m, &spec, trials, seed, &rent, cap, r_steps).map_err(|e| e.to_string())?;
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf).map_err(|e| e.to_string())?;
            emit(out.as_deref(), &buf)?;
            Ok(0)
        }
    }
}

fn parse_counts(text: &str) -> Result<Vec<usize>, Error> {
    let bad = || Error::Parse(format!("apartment counts {text:?}: expected `5`, `1,2,5` or `1..8`"));
    let counts: Vec<usize> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        text.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if counts.is_empty() || counts.contains(&0) {
        return Err(bad());
    }
    Ok(counts)
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    mode: Mode,
    n: usize,
    m: &str,
    spec: &str,
    trials: u64,
    seed: u64,
    rent: &str,
    cap: usize,
    r_steps: i64,
) -> Result<Vec<SimulationRow>, Error> {
    let counts = parse_counts(m)?;
    let rent: Money = rent
        .parse()
        .map_err(|_| Error::Parse(format!("rent {rent:?} is not a number")))?;
    if let Mode::ClosedForm = mode {
        let explicit = match spec.parse::<DistributionSpec>()? {
            DistributionSpec::CorrelatedBernoulli { r } => Some(r),
            _ => None,
        };
        if r_steps < 1 {
            return Err(Error::Parse("the grid needs at least one step".into()));
        }
        let grid: Vec<Money> = match explicit {
            Some(r) => vec![r],
            None => (0..=r_steps).map(|t| Money::ratio(t, r_steps)).collect(),
        };
        let mut rows = Vec::new();
        for &count in &counts {
            for r in &grid {
                let value = closed_form_uef_prob(count as u32, r)?;
                rows.push(SimulationRow::exact(
                    2,
                    count,
                    &DistributionSpec::correlated_bernoulli(r.clone())?,
                    &value,
                ));
            }
        }
        return Ok(rows);
    }
    let spec: DistributionSpec = spec.parse()?;
    counts
        .iter()
        .map(|&count| {
            let report = match mode {
                Mode::Estimate => estimate_uef_prob(n, count, &spec, &rent, trials, seed)?,
                Mode::EventF => estimate_event_f(n, count, &spec, &rent, trials, seed)?,
                Mode::Stopping => estimate_stopping(n, &spec, &rent, count, cap, trials, seed)?,
                Mode::ClosedForm => unreachable!("handled above"),
            };
            let m = if let Mode::Stopping = mode { cap } else { count };
            Ok(SimulationRow::from_report(n, m, &spec, &report))
        })
        .collect()
}
