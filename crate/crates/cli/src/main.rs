//! `torus-gof`: transport distances and two-sample tests on the torus.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use torus_gof::gof::{
    clt_diagnostic, marginal_test, marginal_test_with_table, upper_bound_test, Method, NullTable,
    DEFAULT_BOOTSTRAP, DEFAULT_PERMUTATIONS,
};
use torus_gof::io::{
    ingest_angles, read_null_table, report_to_json, to_json_string, write_json, AngleFileSpec,
    ColumnRef, RunManifest, REPORT_SCHEMA_VERSION,
};
use torus_gof::ot::solve_ot;
use torus_gof::sim::{mean_rate_check, run_scenario, MethodConfig, ScenarioName, ScenarioSpec, DEFAULT_ALPHAS};
use torus_gof::torus::{AngleConvention, AngleRange, AngleUnit};
use torus_gof::{Error, TorusSample64};

#[derive(Parser, Debug)]
#[command(name = "torus-gof", version, about = "Wasserstein distances and goodness-of-fit tests on the flat torus")]
struct Cli {
    /// Where to write the run manifest.
    #[arg(long, global = true, default_value = "torus-gof-manifest.json")]
    manifest: PathBuf,

    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "TORUS_GOF_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal transport cost between two angle files.
    Distance {
        a: PathBuf,
        b: PathBuf,
        /// Include the transport plan.
        #[arg(long)]
        plan: bool,
        /// Include the dual potentials.
        #[arg(long)]
        duals: bool,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Two-sample test between two angle files; prints a JSON report.
    Test {
        #[arg(long, value_enum)]
        method: MethodArg,
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
        permutations: usize,
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
        bootstrap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Calibrate the marginal test with a precomputed null table.
        #[arg(long)]
        null_table: Option<PathBuf>,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Replicated runs of a named scenario; prints long-format CSV.
    Simulate {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[arg(long, default_value_t = 500)]
        replicates: usize,
        /// Required when the CI environment variable is set.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "marginal,upper-bound,clt-diagnostic")]
        methods: Vec<MethodArg>,
        #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
        permutations: usize,
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
        bootstrap: usize,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a JSON summary.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
    },
    /// Mean transport cost to the uniform law against log(n)/(4πn).
    RateCheck {
        #[arg(long, value_delimiter = ',', default_value = "100,300,1000")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Precompute a uniform-null table for the marginal test.
    NullTable {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long = "B", default_value_t = DEFAULT_PERMUTATIONS)]
        b: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Marginal,
    UpperBound,
    CltDiagnostic,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Marginal => Method::Marginal,
            MethodArg::UpperBound => Method::UpperBound,
            MethodArg::CltDiagnostic => Method::CltDiagnostic,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum UnitArg {
    Degrees,
    Radians,
    Unit,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RangeArg {
    Signed,
    Unsigned,
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long, value_enum, default_value = "degrees")]
    units: UnitArg,
    /// Signed is [-period/2, period/2), unsigned is [0, period). Unit data
    /// is always unsigned.
    #[arg(long, value_enum, default_value = "signed")]
    range: RangeArg,
    /// Column of φ, by header name or zero-based index.
    #[arg(long, default_value = "phi")]
    phi: String,
    #[arg(long, default_value = "psi")]
    psi: String,
    #[arg(long, default_value = ",")]
    delimiter: char,
    /// The first row is data, not a header.
    #[arg(long)]
    no_header: bool,
}

impl InputArgs {
    fn spec(&self, path: &Path) -> Result<AngleFileSpec, Error> {
        let unit = match self.units {
            UnitArg::Degrees => AngleUnit::Degrees,
            UnitArg::Radians => AngleUnit::Radians,
            UnitArg::Unit => AngleUnit::UnitSquare,
        };
        let range = match (self.units, self.range) {
            (UnitArg::Unit, _) | (_, RangeArg::Unsigned) => AngleRange::Unsigned,
            (_, RangeArg::Signed) => AngleRange::Signed,
        };
        if !self.delimiter.is_ascii() {
            return Err(Error::InvalidParameter(format!("delimiter {:?} is not ASCII", self.delimiter)));
        }
        Ok(AngleFileSpec {
            path: path.to_path_buf(),
            phi: self.phi.parse::<ColumnRef>()?,
            psi: self.psi.parse::<ColumnRef>()?,
            convention: AngleConvention { unit, range },
            delimiter: self.delimiter as u8,
            has_header: !self.no_header,
        })
    }

    fn load(&self, path: &Path, manifest: &mut RunManifest) -> Result<TorusSample64, Error> {
        let sample = ingest_angles(&self.spec(path)?)?;
        manifest.add_input(path)?;
        Ok(sample)
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_usage() {
        1
    } else if e.is_internal() {
        3
    } else {
        2
    }
}

fn stdout_write(text: &str) -> Result<(), Error> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        })
}

fn with_version(mut v: Value) -> Value {
    if let Some(obj) = v.as_object_mut() {
        obj.insert("schema_version".into(), Value::from(REPORT_SCHEMA_VERSION));
    }
    v
}

fn run(cli: Cli, args: Vec<String>) -> Result<(), Error> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidParameter("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    }
    let start = Instant::now();
    let name = match &cli.command {
        Command::Distance { .. } => "distance",
        Command::Test { .. } => "test",
        Command::Simulate { .. } => "simulate",
        Command::RateCheck { .. } => "rate-check",
        Command::NullTable { .. } => "null-table",
    };
    let mut manifest = RunManifest::new(name, args, None);

    match cli.command {
        Command::Distance { a, b, plan, duals, input } => {
            let p = input.load(&a, &mut manifest)?;
            let q = input.load(&b, &mut manifest)?;
            let r = solve_ot(&p, &q)?;
            let mut out = json!({
                "n": p.len(),
                "m": q.len(),
                "cost": r.cost,
                "w2": r.w2(),
            });
            if plan {
                out["plan"] = serde_json::to_value(&r.plan)?;
            }
            if duals {
                out["dual_f"] = serde_json::to_value(&r.dual_f)?;
                out["dual_g"] = serde_json::to_value(&r.dual_g)?;
            }
            stdout_write(&to_json_string(&with_version(out))?)?;
        }
        Command::Test {
            method,
            a,
            b,
            permutations,
            bootstrap,
            seed,
            null_table,
            input,
        } => {
            let p = input.load(&a, &mut manifest)?;
            let q = input.load(&b, &mut manifest)?;
            let method = Method::from(method);
            if null_table.is_some() && method != Method::Marginal {
                return Err(Error::InvalidParameter("--null-table applies to the marginal method only".into()));
            }
            let report = match (method, null_table) {
                (Method::Marginal, Some(path)) => {
                    let table = read_null_table(&path)?;
                    manifest.add_input(&path)?;
                    marginal_test_with_table(&p, &q, &table)?
                }
                (Method::Marginal, None) => marginal_test(&p, &q, permutations, seed)?,
                (Method::UpperBound, _) => upper_bound_test(&p, &q)?,
                (Method::CltDiagnostic, _) => clt_diagnostic(&p, &q, bootstrap, seed)?,
            };
            if method != Method::UpperBound {
                manifest.seed = Some(seed);
            }
            stdout_write(&to_json_string(&report_to_json(&report)?)?)?;
        }
        Command::Simulate {
            scenario,
            n,
            m,
            replicates,
            seed,
            methods,
            permutations,
            bootstrap,
            out,
            summary,
            alpha,
        } => {
            let seed = match seed {
                Some(s) => s,
                None if std::env::var_os("CI").is_some() => {
                    return Err(Error::InvalidParameter("--seed is required when CI is set".into()))
                }
                None => 0,
            };
            manifest.seed = Some(seed);
            let name: ScenarioName = scenario.parse()?;
            let spec = ScenarioSpec::named(name, n, m, replicates, seed)?;
            let methods: Vec<Method> = methods.into_iter().map(Method::from).collect();
            let config = MethodConfig {
                permutations,
                bootstrap,
            };
            let result = run_scenario(&spec, &methods, &config)?;
            let mut csv = Vec::new();
            result.write_csv(&mut csv)?;
            match &out {
                Some(path) => std::fs::write(path, &csv).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?,
                None => stdout_write(&String::from_utf8_lossy(&csv))?,
            }
            if let Some(path) = summary {
                let alphas = if alpha.is_empty() { DEFAULT_ALPHAS.to_vec() } else { alpha };
                if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
                    return Err(Error::InvalidParameter("significance levels must lie in [0, 1]".into()));
                }
                write_json(&result.summary(&alphas), &path)?;
            }
        }
        Command::RateCheck { n, replicates, seed } => {
            manifest.seed = Some(seed);
            let table = mean_rate_check(&n, replicates, seed)?;
            stdout_write(&to_json_string(&with_version(serde_json::to_value(&table)?))?)?;
        }
        Command::NullTable { n, m, b, seed, out } => {
            manifest.seed = Some(seed);
            let table = NullTable::generate(n, m, b, seed)?;
            write_json(&table, &out)?;
        }
    }
    manifest.elapsed_seconds = Some(start.elapsed().as_secs_f64());
    manifest.write(&cli.manifest)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, args.into_iter().skip(1).collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("torus-gof: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
