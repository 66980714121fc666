//! `cfx`: Cornish-Fisher and Edgeworth expansions from the command line.

mod output;

use std::path::Path;
use std::process::ExitCode;

use cfx::cumulants::{Model, ModelSpec, Sampler};
use cfx::engine::{self, export_table, prepare, BaseChoice, ExpansionKind, Prepared};
use cfx::error::Error;
use cfx::hbasis::h_to_a;
use cfx::oracle::exact_lnf_quantile;
use cfx::validation::{self, SuiteOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{Map, Value};

use output::{grouped, print_json};

#[derive(Parser, Debug)]
#[command(name = "cfx", version, about = "Cornish-Fisher and Edgeworth expansions about a normal or gamma base")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Successive terms of a quantile expansion.
    Quantile {
        #[command(flatten)]
        run: RunArgs,
        /// Probability level.
        #[arg(long)]
        p: f64,
    },
    /// Distribution function expansion at a point.
    Cdf {
        #[command(flatten)]
        run: RunArgs,
        /// Standardized point of Y_JK.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "t", required_unless_present = "t")]
        x: Option<f64>,
        /// Value of the estimate itself.
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
    },
    /// Density (or a derivative of it) expansion at a standardized point.
    Density {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        /// Order i of (-D)^i applied to the density.
        #[arg(long, default_value_t = 0)]
        derivative: usize,
    },
    /// Symbolic coefficients e(π) of h_r, f_r or g_r.
    Coeffs {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        r: usize,
        #[arg(long, value_enum, default_value_t = Form::H)]
        form: Form,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Number of terms in e_r under each (J, K) regime, with savings.
    Terms {
        /// Print the published counts under each computed row.
        #[arg(long)]
        compare: bool,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Run the acceptance suite; exits 5 when any criterion fails.
    Validate {
        #[arg(long, default_value_t = SuiteOptions::default().mc_reps)]
        mc_reps: usize,
        #[arg(long, default_value_t = SuiteOptions::default().seed)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Model name (lnF, studentized_mean, sample_variance, gamma, custom),
    /// inline JSON, or a path to a JSON file.
    #[arg(long)]
    model: String,
    #[arg(long)]
    n1: Option<u32>,
    #[arg(long)]
    n2: Option<u32>,
    /// Population for studentized_mean and sample_variance: exponential,
    /// normal, or gamma:<shape>.
    #[arg(long)]
    population: Option<String>,
    /// Extra numeric model parameter, `key=value`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Sample size; lnF models carry their own.
    #[arg(long)]
    n: Option<f64>,
    #[arg(long, value_enum, default_value_t = BaseArg::Normal)]
    base: BaseArg,
    /// Choose the gamma base so that A32 vanishes (needs --base gamma).
    #[arg(long)]
    match_skew: bool,
    #[arg(short = 'J', long = "j", default_value_t = 0)]
    j: usize,
    #[arg(short = 'K', long = "k", default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Table,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum BaseArg {
    Normal,
    Gamma,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum KindArg {
    H,
    F,
    G,
}

impl From<KindArg> for ExpansionKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::H => ExpansionKind::H,
            KindArg::F => ExpansionKind::F,
            KindArg::G => ExpansionKind::G,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Form {
    /// Polynomials in H_1, H_2, ….
    H,
    /// Polynomials in a_k = D^k(-ln p).
    A,
    /// Normal base, H_k = He_k(x).
    Normal,
}

/// Why the run stopped.
#[derive(Debug)]
enum Failure {
    Config(String),
    Library(Error),
    Validation(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Library(e) => match e {
                Error::Parse(_) | Error::Model(_) | Error::Domain(_) => 2,
                Error::ModelOrder { .. } | Error::OrderGuard { .. } | Error::Truncation { .. } => 3,
                Error::Numeric { .. } | Error::Matching(_) | Error::Length { .. } => 4,
            },
            Failure::Validation(_) => 5,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(m) => format!("configuration error: {m}"),
            Failure::Library(e) => e.to_string(),
            Failure::Validation(n) => format!("{n} acceptance criteria failed"),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cfx: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Quantile { run, p } => cmd_quantile(&run, p),
        Command::Cdf { run, x, t } => cmd_cdf(&run, x, t),
        Command::Density { run, x, derivative } => cmd_density(&run, x, derivative),
        Command::Coeffs { kind, r, form, format } => cmd_coeffs(kind.into(), r, form, format),
        Command::Terms { compare, format } => cmd_terms(compare, format),
        Command::Validate { mc_reps, seed, format } => cmd_validate(SuiteOptions { mc_reps, seed }, format),
    }
}

fn model_spec(run: &RunArgs) -> Result<ModelSpec, Failure> {
    let text = run.model.trim();
    let mut spec = if text.starts_with('{') {
        ModelSpec::from_json(text)?
    } else if Path::new(text).is_file() {
        let body = std::fs::read_to_string(text).map_err(|e| Failure::Config(format!("cannot read {text}: {e}")))?;
        ModelSpec::from_json(&body)?
    } else {
        ModelSpec { model: text.to_string(), params: Map::new(), custom: Vec::new() }
    };
    if let Some(v) = run.n1 {
        spec.params.insert("n1".into(), Value::from(v));
    }
    if let Some(v) = run.n2 {
        spec.params.insert("n2".into(), Value::from(v));
    }
    if let Some(pop) = &run.population {
        let value = match pop.split_once(':') {
            Some(("gamma", shape)) => {
                let shape: f64 =
                    shape.parse().map_err(|_| Failure::Config(format!("bad gamma shape in {pop:?}")))?;
                serde_json::json!({ "kind": "gamma", "shape": shape })
            }
            _ => Value::from(pop.as_str()),
        };
        spec.params.insert("population".into(), value);
    }
    for kv in &run.params {
        let (k, v) = kv.split_once('=').ok_or_else(|| Failure::Config(format!("--param expects key=value, got {kv:?}")))?;
        let v: f64 = v.parse().map_err(|_| Failure::Config(format!("--param {k} needs a number, got {v:?}")))?;
        spec.params.insert(k.to_string(), Value::from(v));
    }
    Ok(spec)
}

struct Setup {
    model: Model,
    prep: Prepared,
    n: f64,
}

fn setup(run: &RunArgs) -> Result<Setup, Failure> {
    if run.match_skew && run.base != BaseArg::Gamma {
        return Err(Failure::Config("--match-skew needs --base gamma".into()));
    }
    if run.order > engine::max_order() {
        return Err(Error::OrderGuard { requested: run.order, max: engine::max_order() }.into());
    }
    let model = model_spec(run)?.build(run.order.max(2))?;
    let n = match (run.n, model.natural_n) {
        (Some(n), None) => n,
        (None, Some(n)) => n,
        (Some(_), Some(_)) => {
            return Err(Failure::Config(format!("{} fixes its own n; drop --n", model.name)));
        }
        (None, None) => return Err(Failure::Config(format!("{} needs --n", model.name))),
    };
    let base = match run.base {
        BaseArg::Normal => BaseChoice::Normal,
        BaseArg::Gamma => BaseChoice::GammaMatched,
    };
    let prep = prepare(&model.table, base, run.j, run.k, n, run.order)?;
    Ok(Setup { model, prep, n })
}

#[derive(Serialize)]
struct RunHeader<'a> {
    model: &'a str,
    base: String,
    j: usize,
    k: usize,
    n: f64,
    order: usize,
    reflected: bool,
    tau: Option<f64>,
    s1: f64,
    s2: f64,
}

fn header<'a>(s: &'a Setup, run: &RunArgs) -> RunHeader<'a> {
    RunHeader {
        model: &s.model.name,
        base: s.prep.expansion.base().name(),
        j: run.j,
        k: run.k,
        n: s.n,
        order: run.order,
        reflected: s.prep.reflected,
        tau: s.prep.tau,
        s1: s.prep.s1,
        s2: s.prep.s2,
    }
}

fn print_header(h: &RunHeader) {
    println!("model {}  base {}  J={} K={}  n={}  order {}", h.model, h.base, h.j, h.k, h.n, h.order);
    if h.reflected {
        println!("expansion is for the reflected estimate -θ̂");
    }
}

fn cmd_quantile(run: &RunArgs, p: f64) -> Outcome {
    let s = setup(run)?;
    let mut table = s.prep.quantile(p, run.order)?;
    if let Some(Sampler::LnF { n1, n2 }) = &s.model.sampler {
        table = table.with_reference(exact_lnf_quantile(*n1 as f64, *n2 as f64, p)?);
    }
    let h = header(&s, run);
    match run.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                #[serde(flatten)]
                run: RunHeader<'a>,
                quantile: &'a engine::QuantileTable,
            }
            print_json(&Out { run: h, quantile: &table })
        }
        Format::Table => {
            print_header(&h);
            println!("p = {p}");
            let with_error = table.rows.iter().any(|r| r.error.is_some());
            if with_error {
                println!("{:>3}  {:>14}  {:>14}  {:>14}", "r", "term", "total", "error");
            } else {
                println!("{:>3}  {:>14}  {:>14}", "r", "term", "total");
            }
            for row in &table.rows {
                let mut line = format!("{:>3}  {:>14}  {:>14}", row.order, grouped(row.term), grouped(row.total));
                if let Some(e) = row.error {
                    line.push_str(&format!("  {:>14}", grouped(e)));
                }
                println!("{line}");
            }
            if table.divergence {
                println!("term magnitudes stop decreasing: the series looks divergent here");
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct PointOut<'a> {
    #[serde(flatten)]
    run: RunHeader<'a>,
    x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    derivative: Option<usize>,
    breakdown: engine::Breakdown,
}

fn print_breakdown(b: &engine::Breakdown) {
    println!("{:>3}  {:>14}  {:>14}", "r", "term", "total");
    let mut total = b.base;
    println!("{:>3}  {:>14}  {:>14}", 0, grouped(b.base), grouped(total));
    for (r, t) in b.terms.iter().enumerate() {
        total += t;
        println!("{:>3}  {:>14}  {:>14}", r + 1, grouped(*t), grouped(total));
    }
}

fn cmd_cdf(run: &RunArgs, x: Option<f64>, t: Option<f64>) -> Outcome {
    let s = setup(run)?;
    let (x, breakdown) = match (x, t) {
        (Some(x), _) => (x, s.prep.expansion.cdf(x, run.order)?),
        (None, Some(t)) => (s.prep.standardize_point(t), s.prep.cdf_estimate(t, run.order)?),
        (None, None) => return Err(Failure::Config("cdf needs --x or --t".into())),
    };
    let out = PointOut { run: header(&s, run), x, t, derivative: None, breakdown };
    match run.format {
        Format::Json => print_json(&out),
        Format::Table => {
            print_header(&out.run);
            match t {
                Some(t) => println!("P(θ̂ <= {t}), standardized point x = {x}"),
                None => println!("P(Y <= {x})"),
            }
            print_breakdown(&out.breakdown);
            Ok(())
        }
    }
}

fn cmd_density(run: &RunArgs, x: f64, derivative: usize) -> Outcome {
    let s = setup(run)?;
    let breakdown = s.prep.expansion.density(x, derivative, run.order)?;
    let out = PointOut { run: header(&s, run), x, t: None, derivative: Some(derivative), breakdown };
    match run.format {
        Format::Json => print_json(&out),
        Format::Table => {
            print_header(&out.run);
            println!("(-D)^{derivative} p_n at x = {x}");
            print_breakdown(&out.breakdown);
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct AFormExport {
    kind: ExpansionKind,
    r: usize,
    terms: Vec<AFormTerm>,
}

#[derive(Serialize)]
struct AFormTerm {
    partition: String,
    coeff_a: String,
}

fn cmd_coeffs(kind: ExpansionKind, r: usize, form: Form, format: Format) -> Outcome {
    let table = engine::coefficient_table(kind, r)?;
    match (form, format) {
        (Form::A, Format::Json) => {
            let terms = table
                .iter()
                .map(|(pi, e)| Ok(AFormTerm { partition: pi.to_string(), coeff_a: h_to_a(e)?.to_string() }))
                .collect::<Result<Vec<_>, Error>>()?;
            print_json(&AFormExport { kind, r, terms })
        }
        (_, Format::Json) => print_json(&export_table(kind, r, form == Form::Normal)?),
        (_, Format::Table) => {
            for (pi, e) in table.iter() {
                let shown = match form {
                    Form::H => e.to_string(),
                    Form::A => h_to_a(e)?.to_string(),
                    Form::Normal => cfx::hbasis::to_normal(e).to_factored(),
                };
                println!("{kind}({pi}) = {shown}");
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct TermsRow {
    label: &'static str,
    kind: ExpansionKind,
    r: usize,
    columns: [(usize, usize, bool); 4],
    cells: [(usize, usize); 4],
    cumulative: [(usize, usize); 4],
    saving: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    published: Option<Published>,
}

#[derive(Serialize)]
struct Published {
    cells: [(usize, usize); 4],
    cumulative: [(usize, usize); 4],
    saving: u32,
}

fn cmd_terms(compare: bool, format: Format) -> Outcome {
    let mut rows = Vec::new();
    for row in validation::TERM_TABLE.iter() {
        let (cells, cumulative, saving) = validation::computed_term_row(row.kind, row.r)?;
        rows.push(TermsRow {
            label: row.label,
            kind: row.kind,
            r: row.r,
            columns: validation::term_columns(row.r),
            cells,
            cumulative,
            saving,
            published: compare.then_some(Published { cells: row.cells, cumulative: row.cumulative, saving: row.saving }),
        });
    }
    if format == Format::Json {
        return print_json(&rows);
    }
    let nm = |c: &[(usize, usize); 4]| c.iter().map(|(n, m)| format!("{:>7}", format!("{n}+{m}"))).collect::<String>();
    println!(
        "{:<10}{:>7}{:>7}{:>7}{:>7} |{:>7}{:>7}{:>7}{:>7} | saving",
        "row", "normal", "(0,1)", "(1,2)", "(J,K)", "normal", "(0,1)", "(1,2)", "(J,K)"
    );
    for row in &rows {
        let (j, k, _) = row.columns[3];
        let label = format!("{} ({j},{k})", row.label);
        println!("{label:<10}{} |{} | {:>3}%", nm(&row.cells), nm(&row.cumulative), row.saving);
        if let Some(p) = &row.published {
            println!("{:<10}{} |{} | {:>3}%", "  printed", nm(&p.cells), nm(&p.cumulative), p.saving);
        }
    }
    Ok(())
}

fn cmd_validate(opts: SuiteOptions, format: Format) -> Outcome {
    let report = validation::run_suite(opts);
    let failed = report.iter().filter(|c| !c.pass()).count();
    match format {
        Format::Json => print_json(&report)?,
        Format::Table => {
            for c in &report {
                println!("{}", c.summary_line());
            }
            for c in report.iter().filter(|c| !c.pass()) {
                println!();
                println!("[{}] {}", c.id, c.title);
                for f in c.failures() {
                    println!("  FAIL {}: expected {} got {}", f.check, f.expected, f.got);
                }
                for n in &c.notes {
                    println!("  note {n}");
                }
            }
            println!();
            println!("validate: {} passed, {} failed", report.len() - failed, failed);
        }
    }
    if failed > 0 {
        Err(Failure::Validation(failed))
    } else {
        Ok(())
    }
}
