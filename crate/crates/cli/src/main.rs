use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coalform::equilibrium::{
    replicator_dynamics, solve_exact_suite, solve_numeric_suite, solve_pure, EquilibriumResult, Method, MixedProfile, NumericOptions,
    ReplicatorOptions, SuiteOptions, REPLICATOR_EPS, VERIFY_EPS,
};
use coalform::io::{generate_pd, parse_spec, serialize_spec, EnumerationReport, GameReport, Report, VerdictReport};
use coalform::num::parse_rational;
use coalform::stability::{analyze_exact, analyze_numeric, nested_family, FamilyAnalysis, Mode};
use coalform::{build_game_with, induced_normal_form, BuildOptions, Error, GameSpec, InducedGame, Scalar};

#[derive(Parser)]
#[command(name = "coalform", version, about = "Coalition structure formation games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List Young diagrams and coalition structures with bounded coalition size.
    Enumerate {
        #[arg(long)]
        players: usize,
        #[arg(long = "max-size")]
        max_size: usize,
        #[arg(long)]
        diagrams: bool,
        #[arg(long)]
        structures: bool,
        #[arg(long)]
        json: bool,
    },
    /// Build the induced game of a spec and compute its equilibria.
    Solve {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = SolveMethod::Support)]
        method: SolveMethod,
        /// Iteration budget for replicator dynamics.
        #[arg(long)]
        steps: Option<usize>,
        /// Report the raw replicator orbit without the polish step.
        #[arg(long = "no-polish")]
        no_polish: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate stability criteria across the family K = 1..N.
    Stability {
        /// One spec with K = N (restricted to every K), or one spec per K.
        #[arg(long, num_args = 1.., required = true)]
        spec: Vec<PathBuf>,
        #[arg(long, value_enum)]
        criterion: CriterionArg,
        #[arg(long, value_enum, default_value_t = ModeArg::Forall)]
        mode: ModeArg,
        #[command(flatten)]
        common: Common,
    },
    /// Write a bundled example spec.
    Example {
        #[arg(value_enum)]
        name: ExampleName,
        /// Reward, sucker, temptation and punishment payoffs.
        #[arg(long, default_value = "0,-5,3,-2", allow_hyphen_values = true)]
        payoffs: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Regret bar for numeric results.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    json: bool,
    /// Lift the choice-profile limit.
    #[arg(long)]
    force: bool,
    /// Largest support per player in support enumeration.
    #[arg(long = "max-support")]
    max_support: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Pure,
    Support,
    Replicator,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Local,
    Global,
    Strong,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Forall,
    Exists,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleName {
    Pd,
}

enum Failure {
    Invalid(String),
    Nonconvergence(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NumericNonconvergence(_) => Failure::Nonconvergence(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Enumerate { players, max_size, diagrams, structures, json } => enumerate(players, max_size, diagrams, structures, json),
        Command::Solve { spec, method, steps, no_polish, common } => {
            let defaults = ReplicatorOptions::default();
            let replicator = ReplicatorOptions {
                steps: steps.unwrap_or(defaults.steps),
                eps: common.eps.unwrap_or(REPLICATOR_EPS),
                polish: !no_polish,
                ..defaults
            };
            solve(&spec, method, &replicator, &common)
        }
        Command::Stability { spec, criterion, mode, common } => stability(&spec, criterion, mode, &common),
        Command::Example { name: ExampleName::Pd, payoffs, out } => example_pd(&payoffs, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Nonconvergence(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(report: &Report, json: bool) {
    if json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.to_table());
    }
}

fn load(path: &PathBuf) -> Result<GameSpec, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    parse_spec(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn build_options(common: &Common) -> BuildOptions {
    if common.force {
        BuildOptions { max_profiles: u128::MAX }
    } else {
        BuildOptions::default()
    }
}

fn suite_options(common: &Common) -> SuiteOptions {
    let mut options = SuiteOptions::default();
    if let Some(eps) = common.eps {
        options.eps = eps;
        options.numeric.eps = eps;
        options.replicator.eps = eps.max(VERIFY_EPS);
    }
    options.numeric.max_support = common.max_support.unwrap_or(NumericOptions::default().max_support);
    options
}

fn enumerate(players: usize, max_size: usize, diagrams: bool, structures: bool, json: bool) -> Outcome {
    let (d, s) = if diagrams || structures { (diagrams, structures) } else { (true, true) };
    let mut report = Report::new("enumerate");
    report.enumeration = Some(EnumerationReport::new(players, max_size, d, s)?);
    emit(&report, json);
    Ok(())
}

fn induce(spec: GameSpec, options: BuildOptions) -> Result<InducedGame, Failure> {
    let game = build_game_with(spec, options)?;
    Ok(induced_normal_form(&game, game.mechanism())?)
}

fn solve(path: &PathBuf, method: SolveMethod, replicator: &ReplicatorOptions, common: &Common) -> Outcome {
    let spec = load(path)?;
    let k = spec.max_coalition_size;
    let g = induce(spec, build_options(common))?;
    let mut report = Report::new("solve");
    match method {
        SolveMethod::Pure => {
            let eq: Vec<EquilibriumResult<coalform::Rational>> = solve_pure(&g)
                .iter()
                .map(|d| EquilibriumResult::evaluate(&g, MixedProfile::pure(g.choice_counts(), d), Method::Pure))
                .collect::<Result<_, _>>()?;
            if eq.is_empty() {
                eprintln!("no pure equilibrium");
            }
            report.games.push(GameReport::new(&g, k, &eq));
        }
        SolveMethod::Support if g.n_players() <= 2 => {
            let max = common.max_support.unwrap_or(usize::MAX);
            let eq = solve_exact_suite(&g, max)?;
            report.games.push(GameReport::new(&g, k, &eq));
        }
        SolveMethod::Support => {
            let solved = solve_numeric_suite(&g, &suite_options(common))?;
            if !solved.nonconvergent.is_empty() {
                eprintln!("warning: Newton did not converge on {} supports (listed in the report)", solved.nonconvergent.len());
            }
            report.games.push(GameReport::new(&g, k, &solved.equilibria).with_nonconvergent(&g, &solved.nonconvergent));
            if solved.equilibria.is_empty() {
                emit(&report, common.json);
                return Err(Failure::Nonconvergence("no verified equilibrium found".into()));
            }
        }
        SolveMethod::Replicator => {
            let r = replicator_dynamics(&g, &MixedProfile::uniform(g.choice_counts()), replicator)?;
            let verified = r.is_verified(replicator.eps);
            report.games.push(GameReport::new(&g, k, &[r]));
            if !verified {
                emit(&report, common.json);
                return Err(Failure::Nonconvergence(format!("replicator dynamics did not reach regret {}", replicator.eps)));
            }
        }
    }
    emit(&report, common.json);
    Ok(())
}

fn family_specs(paths: &[PathBuf]) -> Result<Vec<GameSpec>, Failure> {
    let mut specs = paths.iter().map(load).collect::<Result<Vec<_>, _>>()?;
    if specs.len() == 1 {
        return Ok(nested_family(&specs[0])?);
    }
    specs.sort_by_key(|s| s.max_coalition_size);
    Ok(specs)
}

fn stability(paths: &[PathBuf], criterion: CriterionArg, mode: ModeArg, common: &Common) -> Outcome {
    let specs = family_specs(paths)?;
    let mode = match mode {
        ModeArg::Forall => Mode::ForAll,
        ModeArg::Exists => Mode::Exists,
    };
    let n = specs.first().map_or(0, GameSpec::n_players);
    let report = if n <= 2 {
        let fam = analyze_exact(specs, build_options(common), common.max_support.unwrap_or(usize::MAX))?;
        stability_report(&fam, criterion, mode)?
    } else {
        let fam = analyze_numeric(specs, build_options(common), &suite_options(common))?;
        for m in fam.members() {
            if m.equilibria.is_empty() {
                return Err(Failure::Nonconvergence(format!("no verified equilibrium found for K={}", m.k)));
            }
        }
        stability_report(&fam, criterion, mode)?
    };
    emit(&report, common.json);
    Ok(())
}

fn stability_report<T: Scalar>(fam: &FamilyAnalysis<T>, criterion: CriterionArg, mode: Mode) -> Result<Report, Failure> {
    let mut report = Report::new("stability");
    for m in fam.members() {
        let mut g = GameReport::new(&m.induced, m.k, &m.equilibria);
        g.selected = (!m.equilibria.is_empty()).then_some(m.selected);
        report.games.push(g);
    }
    let n = fam.n_players();
    let verdicts = match criterion {
        CriterionArg::Local => (1..=n).map(|k| fam.local_stability(k, mode)).collect::<Result<Vec<_>, _>>()?,
        CriterionArg::Global => (1..=n).map(|k| fam.global_stability(k, mode)).collect::<Result<Vec<_>, _>>()?,
        CriterionArg::Strong => vec![fam.strong_nash_criterion(mode)?],
    };
    report.verdicts = verdicts.iter().map(|v| VerdictReport::new(fam, v)).collect();
    Ok(report)
}

fn example_pd(payoffs: &str, out: &PathBuf) -> Outcome {
    let values = payoffs
        .split(',')
        .map(|v| parse_rational(v).ok_or_else(|| Failure::Invalid(format!("'{v}' is not a number"))))
        .collect::<Result<Vec<_>, _>>()?;
    let [r, s, t, p] = <[_; 4]>::try_from(values).map_err(|_| Failure::Invalid("--payoffs needs four values r,s,t,p".into()))?;
    let text = serialize_spec(&generate_pd(r, s, t, p));
    std::fs::write(out, text).map_err(|e| Failure::Invalid(format!("{}: {e}", out.display())))?;
    eprintln!("wrote {}", out.display());
    Ok(())
}
