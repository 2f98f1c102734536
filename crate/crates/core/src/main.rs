use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde_json::json;

use formsieve::experiment::{run_experiment_with, ExperimentConfig, Threshold};
use formsieve::forms::{worked_system, FormSystem, QuadraticForm};
use formsieve::lattice;
use formsieve::localdensity::{self, ModulusVector};
use formsieve::numutil;
use formsieve::sievebound::{self, CONSTANTS};
use formsieve::verify::{self, SuiteBounds};

#[derive(Parser)]
#[command(name = "formsieve", version, about = "Almost primes represented by products of binary quadratic forms")]
struct Cli {
    /// JSON experiment config; also supplies the forms for other subcommands
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// A form a,b,c meaning a x² + 2b xy + c y² (repeatable)
    #[arg(long = "form", global = true, value_name = "A,B,C", allow_hyphen_values = true)]
    forms: Vec<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// ρ(d) and ρ*(d)
    Rho {
        /// Modulus vector d₁,…,d_g
        #[arg(long)]
        d: String,
    },
    /// ω(p) by the closed form and from its definition
    Omega {
        /// Primes to evaluate (comma separated)
        #[arg(long, conflicts_with = "below")]
        p: Option<String>,
        /// Every prime below this bound that does not divide D
        #[arg(long)]
        below: Option<u64>,
    },
    /// Primitive classes modulo a, or those inside Λ*(d), with minimal vectors
    Classes {
        #[arg(long, conflicts_with = "d")]
        a: Option<u64>,
        #[arg(long)]
        d: Option<String>,
    },
    /// Level-of-distribution error table
    LodDiag(LodArgs),
    /// r_M for κ = 2..10
    #[command(alias = "table")]
    SieveTable {
        /// Refine the tabulated α_κ, β_κ before minimizing
        #[arg(long)]
        refine: bool,
    },
    /// Count prime factors of the form products over X·R⁰
    Search {
        /// Count every point regardless of r
        #[arg(long)]
        all: bool,
    },
    /// Run the invariant suite
    Verify,
}

#[derive(Args)]
struct LodArgs {
    /// Bounds Q₁,…,Q_g
    #[arg(long)]
    q: String,
    /// Perimeter bound of the region family
    #[arg(long, default_value_t = 2.0 * std::f64::consts::PI * 2000.0)]
    m: f64,
}

/// A bad invocation detected after parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let mut code = ExitCode::SUCCESS;
    let (body, side) = match &cli.command {
        Command::Rho { d } => (rho(cli, d)?, None),
        Command::Omega { p, below } => (omega(cli, p.as_deref(), *below)?, None),
        Command::Classes { a, d } => (classes(cli, *a, d.as_deref())?, None),
        Command::LodDiag(args) => (lod(cli, args)?, None),
        Command::SieveTable { refine } => (sieve_table(cli, *refine)?, None),
        Command::Search { all } => search(cli, *all)?,
        Command::Verify => {
            let (text, ok) = run_verify(cli)?;
            if !ok {
                code = ExitCode::from(1);
            }
            (text, None)
        }
    };
    emit(cli.out.as_deref(), &body)?;
    if let Some(summary) = side {
        match &cli.out {
            Some(path) => emit(Some(&summary_path(path)), &summary)?,
            None => eprint!("{summary}"),
        }
    }
    Ok(code)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// `report.csv` → `report.summary.json`
fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or("report".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.summary.json"))
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse::<T>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .or_else(|_| usage(format!("cannot parse {what} from '{s}'")))
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ExperimentConfig::from_json(&text)?)
}

/// Forms from `--form`, else from `--config`, else the worked system.
fn system(cli: &Cli) -> Result<FormSystem> {
    if !cli.forms.is_empty() {
        let forms = cli
            .forms
            .iter()
            .map(|f| match parse_list::<i64>(f, "a form")?.as_slice() {
                &[a, b, c] => Ok(QuadraticForm::new(a, b, c)),
                _ => usage(format!("a form needs three coefficients, got '{f}'")),
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(FormSystem::build(forms, true)?);
    }
    if let Some(path) = &cli.config {
        return Ok(read_config(path)?.system()?);
    }
    Ok(worked_system())
}

fn modulus_vector(sys: &FormSystem, s: &str) -> Result<ModulusVector> {
    let d: Vec<u64> = parse_list(s, "a modulus vector")?;
    if d.len() != sys.g() || d.contains(&0) {
        return usage(format!("--d needs {} positive entries, got '{s}'", sys.g()));
    }
    Ok(ModulusVector::new(d)?)
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn json_text(v: serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn rho(cli: &Cli, d: &str) -> Result<String> {
    let sys = system(cli)?;
    let d = modulus_vector(&sys, d)?;
    let v = localdensity::density(&sys, &d)?;
    Ok(match cli.format {
        Format::Text => format!("{}\n", v.rho),
        Format::Csv => {
            let mut row: Vec<String> = d.entries().iter().map(u64::to_string).collect();
            row.extend([v.rho.to_string(), v.rho_star.to_string()]);
            let names: Vec<String> = (1..=sys.g()).map(|i| format!("d{i}")).collect();
            let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
            header.extend(["rho", "rho_star"]);
            csv(&header, [row])
        }
        Format::Json => json_text(json!({
            "d": d.entries(),
            "rho": v.rho.to_string(),
            "rho_star": v.rho_star.to_string(),
        }))?,
    })
}

fn omega(cli: &Cli, p: Option<&str>, below: Option<u64>) -> Result<String> {
    let sys = system(cli)?;
    let primes: Vec<u64> = match (p, below) {
        (Some(list), _) => parse_list(list, "primes")?,
        (None, Some(b)) => numutil::primes_below(b)
            .into_iter()
            .filter(|&p| sys.is_sifting_prime(p as u128))
            .collect(),
        (None, None) => return usage("give --p or --below"),
    };
    let mut rows = Vec::new();
    for p in primes {
        let closed = localdensity::omega_closed(&sys, p as u128)?;
        let def = localdensity::omega_from_definition(&sys, p as u128)?;
        rows.push((p, closed, def));
    }
    Ok(match cli.format {
        Format::Text => rows
            .iter()
            .map(|(p, w, _)| format!("{p} {w}\n"))
            .collect(),
        Format::Csv => csv(
            &["p", "omega", "defining_sum", "single_form_sum", "omega_f64"],
            rows.iter().map(|(p, w, d)| {
                vec![
                    p.to_string(),
                    w.to_string(),
                    d.defining_sum.to_string(),
                    d.single_form_sum.to_string(),
                    format!("{:.12}", w.to_f64().unwrap_or(f64::NAN)),
                ]
            }),
        ),
        Format::Json => json_text(json!(rows
            .iter()
            .map(|(p, w, d)| json!({
                "p": p,
                "omega": w.to_string(),
                "defining_sum": d.defining_sum.to_string(),
                "single_form_sum": d.single_form_sum.to_string(),
            }))
            .collect::<Vec<_>>()))?,
    })
}

fn classes(cli: &Cli, a: Option<u64>, d: Option<&str>) -> Result<String> {
    let cs = match (a, d) {
        (Some(a), _) if a > 0 => lattice::classes(a)?,
        (Some(_), _) => return usage("--a must be positive"),
        (None, Some(d)) => {
            let sys = system(cli)?;
            lattice::classes_in_lambda_star(&sys, &modulus_vector(&sys, d)?)?
        }
        (None, None) => return usage("give --a or --d"),
    };
    let rows: Vec<_> = cs
        .iter()
        .map(|c| {
            let l = lattice::minimal_vector(c);
            (c, l.minimal_vector, l.min_norm2())
        })
        .collect();
    Ok(match cli.format {
        Format::Text | Format::Csv => csv(
            &["a", "y1", "y2", "v1", "v2", "norm2"],
            rows.iter().map(|(c, v, n)| {
                vec![
                    c.modulus.to_string(),
                    c.representative.0.to_string(),
                    c.representative.1.to_string(),
                    v.0.to_string(),
                    v.1.to_string(),
                    n.to_string(),
                ]
            }),
        ),
        Format::Json => json_text(json!(rows
            .iter()
            .map(|(c, v, n)| json!({
                "a": c.modulus,
                "representative": [c.representative.0, c.representative.1],
                "minimal_vector": [v.0.to_string(), v.1.to_string()],
                "norm2": n.to_string(),
            }))
            .collect::<Vec<_>>()))?,
    })
}

fn lod(cli: &Cli, args: &LodArgs) -> Result<String> {
    let sys = system(cli)?;
    let q: Vec<u64> = parse_list(&args.q, "Q")?;
    if q.len() != sys.g() || q.contains(&0) {
        return usage(format!("--q needs {} positive entries", sys.g()));
    }
    if !(args.m > 0.0) {
        return usage("--m must be positive");
    }
    let family = lattice::region_family(args.m, &lod_centers(args.m))?;
    let report = lattice::lod_diagnostic(&sys, &q, &family)?;
    Ok(match cli.format {
        Format::Text | Format::Csv => {
            eprintln!("T = {:.6}", report.total);
            report.to_csv()
        }
        Format::Json => json_text(json!({
            "Q": report.q,
            "M": args.m,
            "total": report.total,
            "rows": report.rows.iter().map(|r| json!({
                "d": r.d,
                "a": r.a.to_string(),
                "max_error": r.max_error,
                "main_term": r.main_term,
                "min_vec_len": r.min_vec_len,
            })).collect::<Vec<_>>(),
        }))?,
    })
}

/// The origin and one off-axis point at distance about 0.42 M.
fn lod_centers(m: f64) -> Vec<[f64; 2]> {
    vec![[0.0, 0.0], [0.37 * m, -0.21 * m]]
}

fn sieve_table(cli: &Cli, refine: bool) -> Result<String> {
    let start = Instant::now();
    let constants: Vec<(u32, f64, f64)> = if refine {
        CONSTANTS
            .iter()
            .map(|&(k, a, b)| {
                let r = sievebound::refine_constants(k, a, b)?;
                Ok((k, r.alpha_kappa, r.beta_kappa))
            })
            .collect::<Result<_>>()?
    } else {
        CONSTANTS.to_vec()
    };
    let rows = sievebound::sieve_table(Some(&constants))?;
    for r in &rows {
        if r.optimum.near_integer {
            eprintln!(
                "warning: kappa = {} bound {:.8} is within 1e-4 of an integer",
                r.kappa, r.optimum.bound
            );
        }
    }
    eprintln!("sieve table computed in {:.1?}", start.elapsed());
    Ok(match cli.format {
        Format::Text | Format::Csv => csv(
            &["kappa", "alpha_kappa", "beta_kappa", "u_star", "v_star", "bound", "r_M"],
            rows.iter().map(|r| {
                vec![
                    r.kappa.to_string(),
                    format!("{:.6}", r.alpha_kappa),
                    format!("{:.6}", r.beta_kappa),
                    format!("{:.6}", r.optimum.u),
                    format!("{:.6}", r.optimum.v),
                    format!("{:.6}", r.optimum.bound),
                    r.optimum.r_m.to_string(),
                ]
            }),
        ),
        Format::Json => json_text(json!(rows
            .iter()
            .map(|r| json!({
                "kappa": r.kappa,
                "alpha_kappa": r.alpha_kappa,
                "beta_kappa": r.beta_kappa,
                "u_star": r.optimum.u,
                "v_star": r.optimum.v,
                "bound": r.optimum.bound,
                "r_M": r.optimum.r_m,
                "near_integer": r.optimum.near_integer,
            }))
            .collect::<Vec<_>>()))?,
    })
}

/// Returns the report body and, for CSV, the summary JSON.
fn search(cli: &Cli, all: bool) -> Result<(String, Option<String>)> {
    let Some(path) = &cli.config else {
        return usage("search needs --config");
    };
    if !cli.forms.is_empty() {
        return usage("search takes its forms from --config only");
    }
    let cfg = read_config(path)?;
    let threshold = if all { Threshold::All } else { Threshold::Configured };
    let report = run_experiment_with(&cfg, threshold)?;
    Ok(match cli.format {
        Format::Text | Format::Csv => (report.to_csv(), Some(json_text(report.summary_json())?)),
        Format::Json => (json_text(serde_json::to_value(&report)?)?, None),
    })
}

fn run_verify(cli: &Cli) -> Result<(String, bool)> {
    let sys = system(cli)?;
    let start = Instant::now();
    let outcomes = verify::run_suite(&sys, &SuiteBounds::default())?;
    let ok = outcomes.iter().all(|o| o.passed());
    let text = match cli.format {
        Format::Text | Format::Csv => {
            let mut s: String = outcomes.iter().map(|o| format!("{o}\n")).collect();
            s.push_str(&format!(
                "{} of {} checks passed in {:.1?}\n",
                outcomes.iter().filter(|o| o.passed()).count(),
                outcomes.len(),
                start.elapsed()
            ));
            s
        }
        Format::Json => json_text(json!(outcomes
            .iter()
            .map(|o| json!({
                "name": o.name,
                "passed": o.passed(),
                "cases": o.cases,
                "failures": o.failures,
                "flagged": o.flagged,
            }))
            .collect::<Vec<_>>()))?,
    };
    Ok((text, ok))
}
