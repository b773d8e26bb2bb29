//! Command-line driver: commit a database, plan and prove queries, verify
//! bundles and print constraint reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plonkql::commitment::{commit_database, CommitmentRoot};
use plonkql::compile::{compile, default_budgets, parse_budgets, Budgets};
use plonkql::data::{Database, Schema};
use plonkql::field::{PrimeField, HASH_ID};
use plonkql::pipeline::{prove, verify, Bundle, RunManifest};
use plonkql::report::query_report;
use plonkql::sql::{parse, QueryPlan};
use plonkql::{Error, Fr, Result};

#[derive(Parser)]
#[command(name = "plonkql", version, about = "Compile SQL into PLONKish circuits and check them against a committed database")]
struct Cli {
    /// Print the scalar field and transcript hash, then exit.
    #[arg(long)]
    field_info: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Commit to a database directory and write commitment.json.
    Commit {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        db: PathBuf,
        /// Output path; defaults to commitment.json beside the database directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the logical plan of a query as JSON.
    Plan {
        #[arg(long)]
        schema: PathBuf,
        query: String,
    },
    /// Generate and check a witness, then write bundles and a manifest.
    Prove {
        #[command(flatten)]
        run: RunArgs,
        /// Directory for public.json, bundle.json and manifest.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Write only the public bundle (no Advice values).
        #[arg(long)]
        public_only: bool,
        /// Published commitment the database must match.
        #[arg(long)]
        commitment: Option<PathBuf>,
    },
    /// Verify a bundle against a commitment.
    Verify {
        bundle: PathBuf,
        commitment: PathBuf,
        /// Check every constraint over the bundle's Advice values.
        #[arg(long)]
        full: bool,
    },
    /// Print constraint counts and their closed-form expectations.
    Report {
        bundle: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    db: PathBuf,
    /// Padded rows per scanned table, `table=rows,...`; missing tables get
    /// the next power of two of their row count.
    #[arg(long)]
    budget: Option<String>,
    /// Transcript salt (testing only).
    #[arg(long)]
    seed: Option<String>,
    query: String,
}

fn budgets_for(plan: &QueryPlan, db: &Database, spec: Option<&str>) -> Result<Budgets> {
    let mut budgets = default_budgets(plan, db)?;
    if let Some(spec) = spec {
        for (table, rows) in parse_budgets(spec)? {
            budgets.retain(|k, _| !k.eq_ignore_ascii_case(&table));
            budgets.insert(table, rows);
        }
    }
    Ok(budgets)
}

fn write_json(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn field_info() {
    println!("field: bn254 scalar field");
    println!("modulus (dec): {}", Fr::MODULUS_DEC);
    println!("modulus (hex): {}", Fr::MODULUS_HEX);
    println!("bits: {}", Fr::NUM_BITS);
    println!("transcript hash: {HASH_ID}");
}

fn run(cli: Cli) -> Result<()> {
    if cli.field_info {
        field_info();
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(Error::InvalidData("no command given; see --help".into()));
    };
    match command {
        Command::Commit { schema, db, out } => {
            let schema = Schema::load(&schema)?;
            let database = Database::load(&db, &schema)?;
            let root = commit_database(&database)?;
            let path = out.unwrap_or_else(|| CommitmentRoot::default_path(&db));
            root.save(&path)?;
            println!("{}", root.root);
            eprintln!("{} leaves committed to {}", root.leaf_count, path.display());
        }
        Command::Plan { schema, query } => {
            let plan = parse(&query, &Schema::load(&schema)?)?;
            println!("{}", serde_json::to_string_pretty(&plan)?);
        }
        Command::Prove { run, out, public_only, commitment } => {
            let schema = Schema::load(&run.schema)?;
            let db = Database::load(&run.db, &schema)?;
            let plan = parse(&run.query, &schema)?;
            let budgets = budgets_for(&plan, &db, run.budget.as_deref())?;
            let output = prove(&run.query, &schema, &db, &budgets, run.seed.as_deref())?;
            if let Some(path) = commitment {
                CommitmentRoot::load(&path)?.ensure_matches(&output.bundle.commitment)?;
            }
            std::fs::create_dir_all(&out).map_err(|e| Error::Io { path: out.clone(), source: e })?;
            write_json(&out.join("public.json"), &output.bundle.public().to_json()?)?;
            if !public_only {
                output.bundle.save(&out.join("bundle.json"))?;
            }
            let manifest = RunManifest {
                query: run.query.clone(),
                schema_path: run.schema.display().to_string(),
                db_path: run.db.display().to_string(),
                budgets,
                seed: run.seed.clone(),
                commitment_root: output.bundle.commitment.root.clone(),
                encoding_version: output.bundle.commitment.encoding_version,
                shape_digest: output.bundle.digest.combined(),
                verdict: "ok".into(),
                report: output.report,
                timings: output.timings,
            };
            manifest.save(&out.join("manifest.json"))?;
            let result = &output.bundle.result;
            println!("{}", result.columns.join(","));
            for row in &result.rows {
                println!("{}", row.iter().map(u128::to_string).collect::<Vec<_>>().join(","));
            }
            eprintln!("verdict: ok ({} rows, bundles in {})", result.rows.len(), out.display());
        }
        Command::Verify { bundle, commitment, full } => {
            let bundle = Bundle::load(&bundle)?;
            let root = CommitmentRoot::load(&commitment)?;
            let outcome = verify(&bundle, &root, full)?;
            println!("verdict: ok ({}, {} result rows)", if outcome.full { "full" } else { "public" }, outcome.result.rows.len());
        }
        Command::Report { bundle, json } => {
            let bundle = Bundle::load(&bundle)?;
            let plan = parse(&bundle.query, &bundle.schema)?;
            let compiled = compile::<Fr>(&plan, &bundle.budgets)?;
            let report = query_report(&compiled);
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{report}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let verification = matches!(e, Error::CommitmentMismatch(_) | Error::ShapeMismatch(_) | Error::ConstraintFailure(_));
            if verification {
                eprintln!("verdict: FAIL");
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
