use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ma_cli::commands;
use ma_core::OperatorKind;

/// Wide-stencil Monge-Ampère solver and diagnostics.
#[derive(Parser)]
#[command(name = "ma", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem; writes solution.csv, measures.csv and report.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Mesh-refinement study; writes convergence.csv.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print operator values of a catalog function at a lattice point.
    Operator {
        #[arg(long)]
        config: PathBuf,
        /// Catalog name (`cone`) or JSON object; defaults to the config's boundary function.
        #[arg(long)]
        function: Option<String>,
        /// Restrict the output to one operator.
        #[arg(long, value_enum)]
        operator: Option<Op>,
        /// Lattice coordinates `i,j` of the point `(i h, j h)`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        point: [i64; 2],
    },
    /// Compare discrete Monge-Ampère measures of boxes with the source measure.
    MeasureCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Exact clipped area of a slab set next to its rasterized estimate.
    OracleArea {
        /// JSON list of `{"e": [a, b], "lower": l, "upper": u}`.
        #[arg(long)]
        constraints: PathBuf,
        #[arg(long, default_value_t = 2000)]
        resolution: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    Ma0,
    Ma1,
    Ma2,
    Ma3,
    NinePointProduct,
}

impl From<Op> for OperatorKind {
    fn from(op: Op) -> Self {
        match op {
            Op::Ma0 => OperatorKind::Ma0,
            Op::Ma1 => OperatorKind::Ma1,
            Op::Ma2 => OperatorKind::Ma2,
            Op::Ma3 => OperatorKind::Ma3,
            Op::NinePointProduct => OperatorKind::NinePointProduct,
        }
    }
}

fn parse_point(s: &str) -> Result<[i64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [i, j] => Ok([
            i.parse().map_err(|e| format!("{i}: {e}"))?,
            j.parse().map_err(|e| format!("{j}: {e}"))?,
        ]),
        _ => Err(format!("expected `i,j`, got `{s}`")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { config, out } => commands::cmd_solve(config, out),
        Command::Study { config, out } => commands::cmd_study(config, out),
        Command::Operator {
            config,
            function,
            operator,
            point,
        } => commands::cmd_operator(config, function.as_deref(), operator.map(Into::into), *point),
        Command::MeasureCheck { config, out } => commands::cmd_measure_check(config, out),
        Command::OracleArea {
            constraints,
            resolution,
        } => commands::cmd_oracle_area(constraints, *resolution),
    };
    match &result {
        Ok(ma_cli::Outcome::NotConverged) => eprintln!("ma: not converged within max_iter"),
        Err(e) => eprintln!("ma: {e}"),
        Ok(_) => {}
    }
    ExitCode::from(ma_cli::exit_code(&result) as u8)
}
