use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use finalg::io::{parse_algebra, write_algebra, write_report, Report};
use finalg::{catalog, ClosureBudget, Error, FiniteAlgebra};

mod commands;
mod human;

#[derive(Parser)]
#[command(name = "finalg", version, about = "Structure and growth of finite algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Congruence lattice and its covering pairs.
    Congruences {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1 << 14)]
        max_congruences: usize,
    },
    /// Abelianness, solvability and the derived and lower central series.
    Commutators {
        #[command(flatten)]
        common: Common,
    },
    /// Minimal sets, traces and types of prime quotients.
    Tct {
        #[command(flatten)]
        common: Common,
        /// Index of the lower congruence of a single prime quotient.
        #[arg(long, requires = "upper")]
        lower: Option<usize>,
        /// Index of the upper congruence of a single prime quotient.
        #[arg(long, requires = "lower")]
        upper: Option<usize>,
        #[arg(long, default_value_t = 1 << 14)]
        max_congruences: usize,
    },
    /// Maltsev polynomials and terms.
    Maltsev {
        #[command(flatten)]
        common: Common,
    },
    /// Pointed cube polynomials, over a template battery or one template.
    Cube {
        #[command(flatten)]
        common: Common,
        /// Rows separated by `/`, entries `x`, `c0`, `c1`, ..., e.g. `x c0 / c0 x`.
        #[arg(long)]
        template: Option<String>,
        #[arg(long, default_value_t = 3)]
        rows: usize,
        #[arg(long, default_value_t = 2)]
        constants: usize,
        #[arg(long, default_value_t = 4)]
        columns: usize,
    },
    /// Translation digraphs, of one polynomial or over all neighborhoods.
    Trdigraph {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
        arity_cap: u64,
        /// A polynomial such as `+(x0,#1)`; its digraph is reported instead.
        #[arg(long)]
        polynomial: Option<String>,
    },
    /// Whether a family of subsets spreads to the universe.
    Spread {
        #[command(flatten)]
        common: Common,
        /// Sets separated by `;`, elements by `,`, e.g. `0,4;0,1`. Without
        /// it the type 2 minimal sets are used.
        #[arg(long)]
        family: Option<String>,
    },
    /// Minimum sizes of generating sets of powers.
    Growth {
        #[command(flatten)]
        common: Common,
        /// First exponent.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        from: u64,
        /// Largest exponent.
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        power_cap: u64,
        /// Largest power universe searched.
        #[arg(long, default_value_t = finalg::growth::GROWTH_UNIVERSE_CAP)]
        universe_cap: usize,
    },
    /// The six growth conditions together.
    Profile {
        #[command(flatten)]
        common: Common,
        /// Largest exponent for the growth table and the quotient search.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        power_cap: Option<u64>,
    },
    /// Built-in algebras.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    Show { name: String },
    /// Prints the algebra document.
    Export { name: String },
}

#[derive(Args)]
struct Common {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Name of a built-in algebra.
    #[arg(long)]
    builtin: Option<String>,
    /// Path of an algebra document.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct BudgetArgs {
    /// Most elements any single closure may hold.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    budget_elements: Option<u64>,
    /// Most rounds any single closure may run.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    budget_rounds: Option<u64>,
    /// Wall-clock limit for the whole command.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    budget_seconds: Option<u64>,
    /// Default budget profile.
    #[arg(long, env = "FINALG_BUDGET", value_enum, default_value = "default")]
    budget_profile: BudgetProfile,
}

#[derive(Clone, Copy, ValueEnum)]
enum BudgetProfile {
    Quick,
    Default,
    Thorough,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "human", global = true)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Structured,
}

/// Failures before a report exists.
struct InputError(String);

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        InputError(e.to_string())
    }
}

pub struct Budget {
    pub closure: ClosureBudget,
    pub seconds: Option<u64>,
    profile: &'static str,
}

impl Budget {
    fn from_args(args: &BudgetArgs) -> Self {
        let (elements, rounds, seconds, profile) = match args.budget_profile {
            BudgetProfile::Quick => (200_000, 1_000, Some(60), "quick"),
            BudgetProfile::Default => (2_000_000, 10_000, None, "default"),
            BudgetProfile::Thorough => (20_000_000, 100_000, None, "thorough"),
        };
        let elements = args.budget_elements.map_or(elements, |e| e as usize);
        let rounds = args.budget_rounds.map_or(rounds, |r| r as usize);
        let seconds = args.budget_seconds.or(seconds);
        let deadline = seconds.map(|s| Instant::now() + Duration::from_secs(s));
        Budget {
            closure: ClosureBudget::new(elements, rounds).with_deadline(deadline),
            seconds,
            profile,
        }
    }

    fn record(&self, report: &mut Report) {
        let b = &mut report.budgets;
        b.insert("elements".into(), self.closure.max_elements.into());
        b.insert("rounds".into(), self.closure.max_rounds.into());
        b.insert("seconds".into(), self.seconds.into());
        b.insert("profile".into(), self.profile.into());
    }
}

fn load(source: &Source) -> Result<FiniteAlgebra, InputError> {
    match (&source.builtin, &source.input) {
        (Some(name), None) => Ok(catalog::builtin(name)?),
        (None, Some(path)) => {
            let bytes = std::fs::read(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
            parse_algebra(&bytes).map_err(|e| InputError(format!("{}: {e}", path.display())))
        }
        _ => Err(InputError("exactly one of --builtin and --input is required".into())),
    }
}

enum Outcome {
    Report(Report),
    Document(String),
}

fn common(command: &Command) -> Option<&Common> {
    match command {
        Command::Congruences { common, .. }
        | Command::Commutators { common }
        | Command::Tct { common, .. }
        | Command::Maltsev { common }
        | Command::Cube { common, .. }
        | Command::Trdigraph { common, .. }
        | Command::Spread { common, .. }
        | Command::Growth { common, .. }
        | Command::Profile { common, .. } => Some(common),
        Command::Catalog { .. } => None,
    }
}

fn output(command: &Command) -> &Output {
    match (command, common(command)) {
        (Command::Catalog { output, .. }, _) => output,
        (_, Some(c)) => &c.output,
        _ => unreachable!("every command has output flags"),
    }
}

fn run(command: &Command) -> Result<Outcome, InputError> {
    let Some(common) = common(command) else {
        let Command::Catalog { action, .. } = command else {
            unreachable!("only the catalog has no algebra");
        };
        let outcome = match action {
            CatalogAction::List => Outcome::Report(commands::catalog_list()),
            CatalogAction::Show { name } => Outcome::Report(commands::catalog_show(&catalog::builtin(name)?)),
            CatalogAction::Export { name } => Outcome::Document(write_algebra(&catalog::builtin(name)?)),
        };
        return Ok(outcome);
    };
    let alg = load(&common.source)?;
    let budget = Budget::from_args(&common.budget);
    let (name, result) = match command {
        Command::Congruences { max_congruences, .. } => ("congruences", commands::congruences(&alg, *max_congruences)),
        Command::Commutators { .. } => ("commutators", commands::commutators(&alg)),
        Command::Tct {
            lower,
            upper,
            max_congruences,
            ..
        } => ("tct", commands::tct(&alg, lower.zip(*upper), *max_congruences, &budget)),
        Command::Maltsev { .. } => ("maltsev", commands::maltsev(&alg, &budget)),
        Command::Cube {
            template,
            rows,
            constants,
            columns,
            ..
        } => (
            "cube",
            commands::cube(&alg, template.as_deref(), (*rows, *constants, *columns), &budget),
        ),
        Command::Trdigraph {
            arity_cap, polynomial, ..
        } => (
            "trdigraph",
            commands::trdigraph(&alg, *arity_cap as usize, polynomial.as_deref(), &budget),
        ),
        Command::Spread { family, .. } => ("spread", commands::spread(&alg, family.as_deref(), &budget)),
        Command::Growth {
            from,
            power_cap,
            universe_cap,
            ..
        } => (
            "growth",
            commands::growth(&alg, *from as usize, *power_cap as usize, *universe_cap, &budget),
        ),
        Command::Profile { power_cap, .. } => (
            "profile",
            commands::profile(&alg, power_cap.map(|p| p as usize), &budget),
        ),
        Command::Catalog { .. } => unreachable!(),
    };
    let mut report = match result {
        Ok(r) => r,
        Err(Error::CapExceeded { what, requested, cap }) => {
            let mut r = Report::new(name);
            r.verdicts.insert("result".into(), "unknown".into());
            r.flags.push(format!("cap exceeded: {what} would need {requested} cells, cap is {cap}"));
            r
        }
        Err(e) => return Err(e.into()),
    };
    report.command = name.to_string();
    report.algebra = Some(alg.name().to_string());
    budget.record(&mut report);
    Ok(Outcome::Report(report))
}

fn emit(text: &str, out: Option<&PathBuf>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = output(&cli.command);
    let outcome = match run(&cli.command) {
        Ok(x) => x,
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let (text, code) = match outcome {
        Outcome::Document(doc) => (doc + "\n", 0),
        Outcome::Report(report) => {
            let code = if report.flags.iter().any(|f| f.starts_with(commands::VIOLATION)) {
                4
            } else if report.has_unknown() {
                3
            } else {
                0
            };
            let text = match output.format {
                Format::Structured => write_report(&report) + "\n",
                Format::Human => human::render(&report.to_value()),
            };
            (text, code)
        }
    };
    if let Err(e) = emit(&text, output.out.as_ref()) {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(2);
    }
    if code == 4 {
        eprintln!("error: internal invariant violated; see the report flags");
    }
    ExitCode::from(code)
}
