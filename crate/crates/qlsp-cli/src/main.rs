use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use qlsp::frontend::output::emit;
use qlsp::frontend::{parse, Stmt};
use qlsp::ir::{LoopProgram, LoopRange};
use qlsp::pipeline::{compile, CompileOptions, Compiled, EmitMode};
use qlsp::verifier::{check_output, range_env, VerifyError, VerifyOptions};

#[derive(Parser)]
#[command(name = "qlsp", version, about = "Software pipelining for quantum loop programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a `.qlp` program into a pipelined `.qlo` program.
    Compile(CompileArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Pipelined,
    KernelAsap,
    UnrolledAsap,
}

#[derive(clap::Args)]
struct CompileArgs {
    input: PathBuf,
    /// Output path; `-` for stdout. Defaults to the input with a `.qlo` extension.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Unroll factor C.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(i64).range(1..))]
    unroll: i64,
    /// Loop range override: `m:n` or `unknown`.
    #[arg(long)]
    range: Option<String>,
    #[arg(long, value_enum, default_value = "pipelined")]
    emit: Emit,
    /// Write depth statistics as JSON.
    #[arg(long, value_name = "PATH")]
    stats: Option<PathBuf>,
    /// Check the output against the unrolled original by simulation.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 14)]
    verify_qubits: usize,
    #[arg(long, default_value_t = 8)]
    verify_states: usize,
    #[arg(long, default_value_t = 8)]
    verify_bindings: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the dependency graphs in Graphviz format.
    #[arg(long, value_name = "PATH")]
    dump_qdg: Option<PathBuf>,
    /// Write the modulo reservation tables.
    #[arg(long, value_name = "PATH")]
    dump_table: Option<PathBuf>,
    #[arg(long)]
    max_ii: Option<i64>,
    /// Skip compaction and rotation.
    #[arg(long)]
    no_compact: bool,
    /// Drop one instruction from the emitted loop, to exercise `--verify`.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

/// Verification ran and found a difference.
#[derive(Debug)]
struct Mismatch(String);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Mismatch {}

fn fresh_symbol(p: &LoopProgram, base: &str) -> String {
    let taken = |s: &str| p.qubit_arrays.iter().any(|a| a.name == s) || p.gate_defs.iter().any(|g| g.name == s) || s == p.loop_.iter_var;
    let mut name = base.to_string();
    while taken(&name) {
        name.push('_');
    }
    name
}

fn parse_range(s: &str, p: &LoopProgram) -> Result<LoopRange> {
    if s == "unknown" {
        if let LoopRange::Unknown { .. } = p.loop_.range {
            return Ok(p.loop_.range.clone());
        }
        return Ok(LoopRange::Unknown { a: fresh_symbol(p, "m"), b: fresh_symbol(p, "n") });
    }
    let (m, n) = s.split_once(':').with_context(|| format!("range `{s}` is not `m:n` or `unknown`"))?;
    Ok(LoopRange::Known { m: m.trim().parse().context("range start")?, n: n.trim().parse().context("range end")? })
}

fn verify(p: &LoopProgram, c: &Compiled, args: &CompileArgs) -> Result<()> {
    let opts = VerifyOptions {
        bindings: args.verify_bindings,
        states: args.verify_states,
        max_qubits: args.verify_qubits,
        seed: args.seed,
        ..Default::default()
    };
    let ranges: Vec<(i64, i64)> = match p.loop_.range {
        LoopRange::Known { m, n } => vec![(m, n)],
        // every small concrete range the arrays can hold
        LoopRange::Unknown { .. } => (0..=3).flat_map(|m| (1..=8).map(move |t| (m, m + t - 1))).collect(),
    };
    let mut checked = 0;
    let mut worst = 0.0f64;
    for (m, n) in ranges {
        match check_output(p, (m, n), &c.output, &range_env(p, m, n), &opts) {
            Ok(d) => {
                checked += 1;
                worst = worst.max(d);
                if d > opts.tol {
                    return Err(Mismatch(format!("output differs from the original on {m}:{n} (distance {d:.3e})")).into());
                }
            }
            Err(VerifyError::OutOfBounds { .. }) if matches!(p.loop_.range, LoopRange::Unknown { .. }) => {}
            Err(e) => bail!("cannot verify on {m}:{n}: {e}"),
        }
    }
    if checked == 0 {
        bail!("no range small enough to verify");
    }
    eprintln!("verified {checked} range(s), worst distance {worst:.3e}");
    Ok(())
}

fn drop_first_loop_op(stmts: &mut [Stmt]) -> bool {
    for s in stmts {
        match s {
            Stmt::For { body, .. } if !body.is_empty() => {
                body.remove(0);
                return true;
            }
            Stmt::Guard { arms, .. } => {
                if arms.iter_mut().any(|(_, b)| drop_first_loop_op(b)) {
                    return true;
                }
            }
            _ => {}
        }
    }
    false
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    if path == Path::new("-") {
        print!("{text}");
        Ok(())
    } else {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

fn run_compile(args: &CompileArgs) -> Result<()> {
    let src = fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let mut p = parse(&src).with_context(|| format!("parsing {}", args.input.display()))?;
    if let Some(r) = &args.range {
        p = p.with_range(parse_range(r, &p)?);
    }
    let opts = CompileOptions {
        unroll: args.unroll,
        compact: !args.no_compact,
        max_ii: args.max_ii,
        emit: match args.emit {
            Emit::Pipelined => EmitMode::Pipelined,
            Emit::KernelAsap => EmitMode::KernelAsap,
            Emit::UnrolledAsap => EmitMode::UnrolledAsap,
        },
    };
    let mut c = compile(&p, &opts)?;
    if args.inject_fault {
        drop_first_loop_op(&mut c.output.statements);
    }
    for case in &c.cases {
        info!("case {}: {} rotation(s), II={}", case.q, case.rotations, case.ii());
    }
    let out_path = args.output.clone().unwrap_or_else(|| args.input.with_extension("qlo"));
    write_out(&out_path, &emit(&c.output))?;
    if let Some(path) = &args.stats {
        let json = match &c.stats {
            Some(s) => serde_json::to_string_pretty(s)?,
            None => bail!("statistics need a pipelined compile over a known range"),
        };
        write_out(path, &(json + "\n"))?;
    }
    if let Some(path) = &args.dump_qdg {
        let mut dot = String::new();
        for case in &c.cases {
            for (k, r) in case.rounds.iter().enumerate() {
                dot.push_str(&format!("// case {} round {}\n", case.q, k + 1));
                dot.push_str(&r.qdg.to_dot(|i| format!("{:?}", i.op)));
            }
        }
        write_out(path, &dot)?;
    }
    if let Some(path) = &args.dump_table {
        let mut text = String::new();
        for case in &c.cases {
            for (k, r) in case.rounds.iter().enumerate() {
                text.push_str(&format!("case {} round {}: II={}\n", case.q, k + 1, r.schedule.ii));
                text.push_str(&r.schedule.table());
            }
        }
        write_out(path, &text)?;
    }
    if args.verify {
        verify(&p, &c, args)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Compile(args) => run_compile(args),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Mismatch>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
