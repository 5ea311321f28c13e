//! Command line front end: analyze states, verify conversions, dump the
//! catalog, and run the named verification suites. Reports are JSON on
//! stdout (or `--output`), with a human-readable table on the other stream.
//! Identical inputs and seeds produce byte-identical reports.
//!
//! Exit codes: 0 ok, 1 verdict or suite failed, 2 file unreadable or not
//! parseable, 3 input violates a physical invariant, 4 reversibility or
//! custody contract violated.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nonmarkov::catalog;
use nonmarkov::classical::{
    classical_cmi, classical_intrinsic, classical_is_markov, load_dist, IntrinsicConfig,
};
use nonmarkov::freeops::{check_convertibility, load_conversion};
use nonmarkov::markov::is_markov;
use nonmarkov::monotones::{
    compute_report, MonotoneEstimate, OptimizerConfig, Witness,
};
use nonmarkov::suites::{
    classical_suite, fig3_suite, pauli_suite, properties_suite, table1_suite, SuiteReport,
};
use nonmarkov::tensor::{load_state, state_to_json, MultipartiteState};
use nonmarkov::Error;

#[derive(Parser)]
#[command(name = "nonmarkov", version, about = "Non-Markovianity toolkit for tripartite states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SearchFlags {
    /// Seed shared by every randomized search
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Restarts per monotone search
    #[arg(long, default_value_t = 64)]
    restarts: usize,

    /// Cap on extension and ancilla dimensions (default: input dimension squared)
    #[arg(long)]
    ext_dim_cap: Option<usize>,

    /// Worker threads for the searches
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl SearchFlags {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            seed: self.seed,
            restarts: self.restarts,
            extension_dim_cap: self.ext_dim_cap,
            env_dim_cap: self.ext_dim_cap,
            threads: self.threads,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Markov test plus all seven monotones on a state file
    Analyze {
        /// State file (dims + row-major matrix)
        state: PathBuf,

        /// Comma-separated labels of the first party (default: labels starting with A)
        #[arg(long)]
        a: Option<String>,

        /// Comma-separated labels of the second party (default: labels starting with B)
        #[arg(long)]
        b: Option<String>,

        /// Comma-separated labels of the conditioning system (default: the rest)
        #[arg(long)]
        e: Option<String>,

        /// Markov verdict tolerance
        #[arg(long, default_value_t = 1e-8)]
        tol_markov: f64,

        #[command(flatten)]
        search: SearchFlags,

        /// Write the JSON report here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Verify a conversion protocol between two state files
    ConvertVerify {
        /// Source state file
        #[arg(long)]
        from: PathBuf,

        /// Target state file
        #[arg(long)]
        to: PathBuf,

        /// Protocol file with a reversal block
        #[arg(long)]
        protocol: PathBuf,

        /// Accuracy budget for the conversion
        #[arg(long, default_value_t = 1e-8)]
        epsilon: f64,

        /// Write the JSON verdict here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Named example states
    Catalog {
        #[command(subcommand)]
        action: CatalogCmd,
    },

    /// Classical distribution analysis
    Classical {
        #[command(subcommand)]
        action: ClassicalCmd,
    },

    /// Run a named verification suite
    Suite {
        name: SuiteName,

        #[command(flatten)]
        search: SearchFlags,

        /// Write the JSON summary here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CatalogCmd {
    /// Print every catalog name
    List,
    /// Emit a catalog state in the state file format
    Dump {
        name: String,
        /// Write the state file here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print every named conversion arrow
    Arrows,
    /// Emit a named conversion arrow as a protocol file with reversal block
    Arrow {
        name: String,
        /// Write the protocol file here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ClassicalCmd {
    /// Conditional information, Markov test, and intrinsic information
    Analyze {
        /// Distribution file (alphabet sizes + flat table)
        dist: PathBuf,

        /// Markov verdict tolerance
        #[arg(long, default_value_t = 1e-9)]
        tol_markov: f64,

        #[command(flatten)]
        search: SearchFlags,

        /// Write the JSON report here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Emit a named example distribution in the distribution file format
    Dump {
        name: String,
        /// Write the distribution file here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteName {
    Table1,
    Fig3,
    Pauli,
    Classical,
    Properties,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Parse(_) => 2,
            Error::Contract(_) => 4,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Analyze {
            state,
            a,
            b,
            e,
            tol_markov,
            search,
            output,
        } => cmd_analyze(&state, a, b, e, tol_markov, &search, output.as_deref()),
        Command::ConvertVerify {
            from,
            to,
            protocol,
            epsilon,
            output,
        } => cmd_convert_verify(&from, &to, &protocol, epsilon, output.as_deref()),
        Command::Catalog { action } => match action {
            CatalogCmd::List => {
                for name in catalog::list() {
                    println!("{name}");
                }
                Ok(ExitCode::SUCCESS)
            }
            CatalogCmd::Dump { name, output } => cmd_catalog_dump(&name, output.as_deref()),
            CatalogCmd::Arrows => {
                for (name, _, _) in nonmarkov::freeops::NAMED_ARROWS {
                    println!("{name}");
                }
                Ok(ExitCode::SUCCESS)
            }
            CatalogCmd::Arrow { name, output } => cmd_catalog_arrow(&name, output.as_deref()),
        },
        Command::Classical { action } => match action {
            ClassicalCmd::Analyze {
                dist,
                tol_markov,
                search,
                output,
            } => cmd_classical_analyze(&dist, tol_markov, &search, output.as_deref()),
            ClassicalCmd::Dump { name, output } => {
                let p = nonmarkov::classical::make_dist(&name)?;
                let json = nonmarkov::classical::dist_to_json(&p);
                let table = format!(
                    "distribution  {name}\nsizes         {} x {} x {}\n",
                    p.nx(),
                    p.ny(),
                    p.nz()
                );
                emit(&json, &table, output.as_deref())?;
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Suite {
            name,
            search,
            output,
        } => cmd_suite(name, &search, output.as_deref()),
    }
}

// ---------------------------------------------------------------------------
// analyze

#[derive(Serialize)]
struct GroupsOut {
    a: Vec<String>,
    b: Vec<String>,
    e: Vec<String>,
}

#[derive(Serialize)]
struct MarkovOut {
    tolerance: f64,
    cqmi: f64,
    petz_residual: f64,
    is_markov: bool,
}

#[derive(Serialize)]
struct EstimateOut {
    value: f64,
    converged: bool,
    iterations: usize,
    witness: String,
}

impl EstimateOut {
    fn from(est: &MonotoneEstimate) -> Self {
        EstimateOut {
            value: est.value,
            converged: est.converged,
            iterations: est.iterations_used,
            witness: describe_witness(&est.witness),
        }
    }
}

#[derive(Serialize)]
struct MonotonesOut {
    i_m: f64,
    i_down: EstimateOut,
    i_down_star: EstimateOut,
    i_sq: EstimateOut,
    j_down: EstimateOut,
    j_down_star: EstimateOut,
    d_rec: EstimateOut,
}

#[derive(Serialize)]
struct ConfigOut {
    restarts: usize,
    extension_dim_cap: Option<usize>,
    threads: usize,
}

#[derive(Serialize)]
struct AnalysisReport {
    state: String,
    seed: u64,
    groups: GroupsOut,
    markov: MarkovOut,
    monotones: MonotonesOut,
    config: ConfigOut,
    total_iterations: usize,
}

fn describe_witness(w: &Witness) -> String {
    match w {
        Witness::ChannelOnEnv(ch) => format!(
            "channel on the conditioning group ({} -> {})",
            ch.in_dim(),
            ch.out_dim()
        ),
        Witness::Extension {
            channel, register, ..
        } => format!(
            "extension by register {register} via a channel {} -> {}",
            channel.in_dim(),
            channel.out_dim()
        ),
        Witness::SplitChannel {
            split_dims, channel, ..
        } => format!(
            "purifier split {}x{} with a channel {} -> {} on the conditioning group",
            split_dims.0,
            split_dims.1,
            channel.in_dim(),
            channel.out_dim()
        ),
        Witness::SplitExtension {
            split_dims, channel, ..
        } => format!(
            "conditioning split {}x{} with a purifier channel {} -> {}",
            split_dims.0,
            split_dims.1,
            channel.in_dim(),
            channel.out_dim()
        ),
        Witness::PurifierSplit { split_dims, .. } => {
            format!("purifier split {}x{}", split_dims.0, split_dims.1)
        }
        Witness::Recovery(ch) => format!(
            "recovery channel {} -> {}",
            ch.in_dim(),
            ch.out_dim()
        ),
    }
}

fn parse_group(flag: Option<String>) -> Option<Vec<String>> {
    flag.map(|text| {
        text.split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect()
    })
}

fn default_groups(
    s: &MultipartiteState,
    a: Option<Vec<String>>,
    b: Option<Vec<String>>,
    e: Option<Vec<String>>,
) -> Result<(Vec<String>, Vec<String>, Vec<String>), Failure> {
    let labels: Vec<String> = s.labels().iter().map(|l| l.to_string()).collect();
    let a = a.unwrap_or_else(|| {
        labels
            .iter()
            .filter(|l| l.starts_with('A'))
            .cloned()
            .collect()
    });
    let b = b.unwrap_or_else(|| {
        labels
            .iter()
            .filter(|l| l.starts_with('B'))
            .cloned()
            .collect()
    });
    let e = e.unwrap_or_else(|| {
        labels
            .iter()
            .filter(|l| !a.contains(l) && !b.contains(l))
            .cloned()
            .collect()
    });
    for group in [&a, &b, &e] {
        for l in group {
            if !labels.contains(l) {
                return Err(fail(3, format!("label {l} is not in the state")));
            }
        }
    }
    let mut seen = a.clone();
    for l in b.iter().chain(e.iter()) {
        if seen.contains(l) {
            return Err(fail(3, format!("label {l} appears in two groups")));
        }
        seen.push(l.clone());
    }
    if seen.len() != labels.len() {
        return Err(fail(3, "groups must cover every label".to_string()));
    }
    if a.is_empty() || b.is_empty() || e.is_empty() {
        return Err(fail(3, "each group needs at least one label".to_string()));
    }
    Ok((a, b, e))
}

fn emit(json: &str, table: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(path) => {
            std::fs::write(path, json).map_err(|e| fail(2, e.to_string()))?;
            print!("{table}");
        }
        None => {
            println!("{json}");
            eprint!("{table}");
        }
    }
    Ok(())
}

fn cmd_analyze(
    state_path: &Path,
    a: Option<String>,
    b: Option<String>,
    e: Option<String>,
    tol_markov: f64,
    search: &SearchFlags,
    output: Option<&Path>,
) -> Result<ExitCode, Failure> {
    let s = load_state(state_path)?;
    let (a, b, e) = default_groups(&s, parse_group(a), parse_group(b), parse_group(e))?;
    let ar: Vec<&str> = a.iter().map(|x| x.as_str()).collect();
    let br: Vec<&str> = b.iter().map(|x| x.as_str()).collect();
    let er: Vec<&str> = e.iter().map(|x| x.as_str()).collect();

    let cfg = search.config();
    let verdict = is_markov(&s, &ar, &br, &er, tol_markov)?;
    let report = compute_report(&s, &ar, &br, &er, &cfg)?;

    let out = AnalysisReport {
        state: state_path.display().to_string(),
        seed: cfg.seed,
        groups: GroupsOut { a, b, e },
        markov: MarkovOut {
            tolerance: tol_markov,
            cqmi: verdict.cqmi,
            petz_residual: verdict.petz_residual,
            is_markov: verdict.is_markov,
        },
        monotones: MonotonesOut {
            i_m: report.i_m,
            i_down: EstimateOut::from(&report.i_down),
            i_down_star: EstimateOut::from(&report.i_down_star),
            i_sq: EstimateOut::from(&report.i_sq),
            j_down: EstimateOut::from(&report.j_down),
            j_down_star: EstimateOut::from(&report.j_down_star),
            d_rec: EstimateOut::from(&report.d_rec),
        },
        config: ConfigOut {
            restarts: cfg.restarts,
            extension_dim_cap: cfg.extension_dim_cap,
            threads: cfg.threads,
        },
        total_iterations: [
            &report.i_down,
            &report.i_down_star,
            &report.i_sq,
            &report.j_down,
            &report.j_down_star,
            &report.d_rec,
        ]
        .iter()
        .map(|est| est.iterations_used)
        .sum(),
    };

    let mut table = String::new();
    table.push_str(&format!("state         {}\n", out.state));
    table.push_str(&format!(
        "markov        {} (cqmi {:.9}, petz residual {:.3e}, tol {:.1e})\n",
        if verdict.is_markov { "yes" } else { "no" },
        verdict.cqmi,
        verdict.petz_residual,
        tol_markov
    ));
    table.push_str(&format!("i_m           {:+.6}\n", report.i_m));
    for (name, est) in [
        ("i_down", &report.i_down),
        ("i_down_star", &report.i_down_star),
        ("i_sq", &report.i_sq),
        ("j_down", &report.j_down),
        ("j_down_star", &report.j_down_star),
        ("d_rec", &report.d_rec),
    ] {
        table.push_str(&format!(
            "{name:<13} {:+.6}  ({}, {} iterations)\n",
            est.value,
            if est.converged { "converged" } else { "cap hit" },
            est.iterations_used
        ));
    }

    let json = serde_json::to_string_pretty(&out).expect("report serialization cannot fail");
    emit(&json, &table, output)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// convert-verify

#[derive(Serialize)]
struct ConversionOut {
    from: String,
    to: String,
    protocol: String,
    steps: usize,
    epsilon_budget: f64,
    epsilon_achieved: f64,
    ok: bool,
}

fn cmd_convert_verify(
    from_path: &Path,
    to_path: &Path,
    protocol_path: &Path,
    epsilon: f64,
    output: Option<&Path>,
) -> Result<ExitCode, Failure> {
    let from = load_state(from_path)?;
    let to = load_state(to_path)?;
    let (protocol, witness) = load_conversion(protocol_path)?;
    let witness = witness.ok_or_else(|| {
        fail(
            3,
            "protocol file carries no reversal block; conversion cannot be certified",
        )
    })?;

    let verdict = check_convertibility(&from, &to, &protocol, &witness, epsilon)?;
    let out = ConversionOut {
        from: from_path.display().to_string(),
        to: to_path.display().to_string(),
        protocol: protocol_path.display().to_string(),
        steps: protocol.steps.len(),
        epsilon_budget: epsilon,
        epsilon_achieved: verdict.epsilon_achieved,
        ok: verdict.ok,
    };
    let table = format!(
        "conversion    {} -> {}\nepsilon       {:.3e} against budget {:.1e}\nverdict       {}\n",
        out.from,
        out.to,
        out.epsilon_achieved,
        epsilon,
        if verdict.ok { "ok" } else { "failed" }
    );
    let json = serde_json::to_string_pretty(&out).expect("report serialization cannot fail");
    emit(&json, &table, output)?;
    Ok(if verdict.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

// ---------------------------------------------------------------------------
// catalog

fn cmd_catalog_arrow(name: &str, output: Option<&Path>) -> Result<ExitCode, Failure> {
    let (protocol, witness) = nonmarkov::freeops::named_arrow(name)?;
    let json = nonmarkov::freeops::conversion_to_json(&protocol, &witness);
    let (_, from, to) = nonmarkov::freeops::NAMED_ARROWS
        .iter()
        .find(|(n, _, _)| *n == name)
        .unwrap();
    let table = format!(
        "arrow         {name}\nconverts      {from} -> {to}\nsteps         {}\n",
        protocol.steps.len()
    );
    emit(&json, &table, output)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_catalog_dump(name: &str, output: Option<&Path>) -> Result<ExitCode, Failure> {
    let named = catalog::make(name)?;
    let json = state_to_json(&named.state);
    let mut table = format!("name          {}\n", named.name);
    if let Some(row) = named.expected_monotones {
        table.push_str(&format!(
            "expected      i_m {} | i_down {} | i_down_star {} | i_sq {} | j_down {} | j_down_star {}\n",
            row.i_m, row.i_down, row.i_down_star, row.i_sq, row.j_down, row.j_down_star
        ));
    }
    emit(&json, &table, output)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// classical

#[derive(Serialize)]
struct ClassicalOut {
    dist: String,
    seed: u64,
    sizes: (usize, usize, usize),
    cmi: f64,
    is_markov: bool,
    intrinsic: f64,
    intrinsic_map_out_dim: usize,
}

fn cmd_classical_analyze(
    dist_path: &Path,
    tol_markov: f64,
    search: &SearchFlags,
    output: Option<&Path>,
) -> Result<ExitCode, Failure> {
    let p = load_dist(dist_path)?;
    let cfg = IntrinsicConfig {
        seed: search.seed,
        restarts: search.restarts,
        out_cap: search.ext_dim_cap,
        ..IntrinsicConfig::default()
    };
    let cmi = classical_cmi(&p);
    let markov = classical_is_markov(&p, tol_markov);
    let (intrinsic, map) = classical_intrinsic(&p, &cfg)?;
    let out = ClassicalOut {
        dist: dist_path.display().to_string(),
        seed: cfg.seed,
        sizes: (p.nx(), p.ny(), p.nz()),
        cmi,
        is_markov: markov,
        intrinsic,
        intrinsic_map_out_dim: map.out_dim(),
    };
    let table = format!(
        "distribution  {}\ncmi           {:.9}\nmarkov        {}\nintrinsic     {:.9} (map onto {} symbols)\n",
        out.dist,
        cmi,
        if markov { "yes" } else { "no" },
        intrinsic,
        map.out_dim()
    );
    let json = serde_json::to_string_pretty(&out).expect("report serialization cannot fail");
    emit(&json, &table, output)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// suites

#[derive(Serialize)]
struct CheckOut {
    label: String,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct SuiteOut {
    suite: String,
    seed: u64,
    passed: usize,
    total: usize,
    checks: Vec<CheckOut>,
}

fn cmd_suite(
    name: SuiteName,
    search: &SearchFlags,
    output: Option<&Path>,
) -> Result<ExitCode, Failure> {
    let cfg = search.config();
    let report: SuiteReport = match name {
        SuiteName::Table1 => table1_suite(&cfg)?,
        SuiteName::Fig3 => fig3_suite()?,
        SuiteName::Pauli => pauli_suite(),
        SuiteName::Classical => classical_suite(search.seed)?,
        SuiteName::Properties => properties_suite(search.seed, &cfg)?,
    };
    let ok = report.all_pass();
    let out = SuiteOut {
        suite: report.name.clone(),
        seed: search.seed,
        passed: report.passed(),
        total: report.checks.len(),
        checks: report
            .checks
            .iter()
            .map(|c| CheckOut {
                label: c.label.clone(),
                pass: c.pass,
                detail: c.detail.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&out).expect("report serialization cannot fail");
    emit(&json, &report.render(), output)?;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
