use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use eif_core::pipeline::{gate_call, run_pipeline, MetaTarget};
use eif_core::report::{
    gate_csv, matrix_csv, table_csv, vector_csv, GateDocument, MatrixDocument, Provenance,
    TableDocument, VectorDocument,
};
use eif_core::scenario::parse_scenario;

#[derive(Parser, Debug)]
#[command(name = "eif")]
#[command(about = "Event impact factors for interruption gating", version)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Scenario file to operate on
    #[arg(long, global = true, default_value = "scenarios/laparoscopy.scn")]
    scenario: PathBuf,

    /// Output format for the result documents
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write results to this file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Apply a named what-if override before running
    #[arg(long, global = true)]
    what_if: Option<String>,

    /// Override the ratio exponent of every rating transform
    #[arg(long, global = true)]
    z: Option<f64>,

    /// Override the gate threshold fraction from the scenario file
    #[arg(long, global = true)]
    fraction: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse the scenario and report all validation errors
    Validate,
    /// Emit the characteristic matrix of each named function
    Transform {
        /// Meta-component to transform
        #[arg(long)]
        meta: String,
        /// Single function inside the meta-component; all of them if omitted
        #[arg(long)]
        ccf: Option<String>,
    },
    /// Emit the collective matrix of every meta-component
    Aggregate,
    /// Emit the per-event impact vector
    Impact,
    /// Emit the roles-by-phases impact table
    Table,
    /// Decide whether a call during one (role, phase) cell goes through
    Gate {
        #[arg(long)]
        role: String,
        #[arg(long)]
        phase: String,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: &Args) -> Result<(), String> {
    let text = fs::read_to_string(&args.scenario)
        .map_err(|e| format!("cannot read {}: {e}", args.scenario.display()))?;
    let mut scenario = match parse_scenario(&text) {
        Ok(s) => s,
        Err(issues) => {
            let listing: Vec<String> = issues
                .iter()
                .map(|i| format!("  line {}: {}", i.line, i.message))
                .collect();
            return Err(format!(
                "{} invalid:\n{}",
                args.scenario.display(),
                listing.join("\n")
            ));
        }
    };
    if let Some(name) = &args.what_if {
        scenario = scenario
            .apply_what_if(name)
            .map_err(|e| e.to_string())?;
    }
    if let Some(z) = args.z {
        if !(z.is_finite() && z > 0.0) {
            return Err(format!("ratio exponent {z} must be positive"));
        }
        scenario.override_z(z);
    }
    if let Some(fraction) = args.fraction {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(format!("threshold fraction {fraction} outside (0, 1]"));
        }
        scenario.threshold_fraction = fraction;
    }
    let provenance = Provenance::new(&scenario, args.what_if.as_deref());

    match &args.command {
        Command::Validate => {
            eprintln!(
                "{}: ok ({} phases x {} roles, {} meta-components)",
                args.scenario.display(),
                scenario.phase_view.len(),
                scenario.role_view.len(),
                scenario.metas.len()
            );
            Ok(())
        }
        Command::Transform { meta, ccf } => {
            let component = scenario
                .meta(meta)
                .ok_or_else(|| format!("no meta-component named `{meta}`"))?;
            let mut docs = Vec::new();
            for entry in &component.ccfs {
                if ccf.as_deref().is_some_and(|want| want != entry.name) {
                    continue;
                }
                let matrix = component
                    .ccf_matrix(entry)
                    .map_err(|e| e.to_string())?;
                docs.push(MatrixDocument::new(
                    meta,
                    Some(&entry.name),
                    &matrix,
                    provenance.clone(),
                ));
            }
            if docs.is_empty() {
                return Err(format!("no function named `{}` in `{meta}`", ccf.as_deref().unwrap_or("")));
            }
            emit_matrices(args, &docs)
        }
        Command::Aggregate => {
            let run = run_pipeline(&scenario).map_err(|e| e.to_string())?;
            let mut docs = Vec::new();
            for meta in &scenario.metas {
                // grid-target components only exist at grid size
                let matrix = if meta.target == MetaTarget::Grid {
                    run.expanded
                        .iter()
                        .find(|(name, _)| *name == meta.name)
                        .map(|(_, m)| m)
                } else {
                    run.meta_matrices
                        .iter()
                        .find(|(name, _)| *name == meta.name)
                        .map(|(_, m)| m)
                };
                let matrix = matrix.ok_or_else(|| format!("missing result for `{}`", meta.name))?;
                docs.push(MatrixDocument::new(&meta.name, None, matrix, provenance.clone()));
            }
            emit_matrices(args, &docs)
        }
        Command::Impact => {
            let run = run_pipeline(&scenario).map_err(|e| e.to_string())?;
            let doc = VectorDocument::from_run(&run, provenance);
            match args.format {
                Format::Csv => emit(args, vector_csv(&doc)),
                Format::Json => emit(args, to_json(&doc)?),
            }
        }
        Command::Table => {
            let run = run_pipeline(&scenario).map_err(|e| e.to_string())?;
            let doc = TableDocument::from_table(&run.table, provenance);
            match args.format {
                Format::Csv => emit(args, table_csv(&doc)),
                Format::Json => emit(args, to_json(&doc)?),
            }
        }
        Command::Gate { role, phase } => {
            let run = run_pipeline(&scenario).map_err(|e| e.to_string())?;
            let decision = gate_call(&run.table, role, phase, scenario.threshold_fraction)
                .map_err(|e| e.to_string())?;
            let doc = GateDocument::from_decision(&decision, provenance);
            eprintln!("{}", doc.summary());
            match args.format {
                Format::Csv => emit(args, gate_csv(&doc)),
                Format::Json => emit(args, to_json(&doc)?),
            }
        }
    }
}

fn to_json<T: serde::Serialize>(doc: &T) -> Result<String, String> {
    serde_json::to_string_pretty(doc)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| e.to_string())
}

fn emit_matrices(args: &Args, docs: &[MatrixDocument]) -> Result<(), String> {
    match args.format {
        Format::Csv => {
            let blocks: Vec<String> = docs.iter().map(matrix_csv).collect();
            emit(args, blocks.join("\n"))
        }
        Format::Json => emit(args, to_json(&docs)?),
    }
}

fn emit(args: &Args, payload: String) -> Result<(), String> {
    match &args.output {
        Some(path) => fs::write(path, payload)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}
