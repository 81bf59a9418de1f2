//! Command-line harness: builders, a query loop, corpus generators, and a
//! verification runner over bundled deterministic corpora.
//!
//! Exit codes: 0 on success, 1 on verification failure, 2 on usage errors.

use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use partix::corpus;
use partix::lce::LceIndex;
use partix::pipeline::{build_partition, BuildOutput};
use partix::sst_user::build_user_sst;
use partix::text::{Format, Mode, Overrides, ParamEnv, Text};

mod verify;

#[derive(Parser)]
#[command(name = "partix", version, about = "Partitioning-set string indexing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Bytes,
    U32le,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Bytes => Format::Bytes,
            FormatArg::U32le => Format::U32le,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Reference,
    Desk,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Reference => Mode::Reference,
            ModeArg::Desk => Mode::Desk,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Input text file
    #[arg(long)]
    input: PathBuf,
    /// Input encoding
    #[arg(long, value_enum, default_value = "bytes")]
    format: FormatArg,
    /// Sample distance; mutually exclusive with --b
    #[arg(long)]
    tau: Option<usize>,
    /// Number of samples; tau becomes n / b
    #[arg(long)]
    b: Option<usize>,
    /// Parameter mode
    #[arg(long, value_enum, default_value = "desk")]
    mode: ModeArg,
    /// Override the iterated-log stand-in (desk mode)
    #[arg(long)]
    lambda3: Option<u64>,
    /// Override the recompression depth (desk mode)
    #[arg(long)]
    lambda4: Option<u64>,
}

impl InputArgs {
    fn load(&self) -> Result<(Text, ParamEnv)> {
        let bytes = fs::read(&self.input)
            .with_context(|| format!("reading {}", self.input.display()))?;
        let text = Text::load(&bytes, self.format.into())?;
        let tau = match (self.tau, self.b) {
            (Some(t), None) => t,
            (None, Some(b)) => {
                if b == 0 {
                    bail!("--b must be positive");
                }
                text.len() / b
            }
            (Some(_), Some(_)) => bail!("--tau and --b are mutually exclusive"),
            (None, None) => bail!("one of --tau or --b is required"),
        };
        let params = ParamEnv::for_text(
            &text,
            tau,
            self.mode.into(),
            Overrides { lambda3: self.lambda3, lambda4: self.lambda4 },
        )?;
        Ok((text, params))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the partitioning set and write it as decimal positions
    BuildPartition {
        #[command(flatten)]
        input: InputArgs,
        /// Output positions file
        #[arg(long)]
        out: PathBuf,
        /// Optional stats JSON file
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Answer extension queries: one "p q" pair per stdin line
    Lce {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Build the sparse suffix tree for chosen suffixes
    Sst {
        #[command(flatten)]
        input: InputArgs,
        /// Newline-delimited decimal suffix positions
        #[arg(long)]
        suffixes: PathBuf,
        /// Output tree file
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a named verification level over bundled corpora
    Verify {
        /// phases, stage1, letters, recompression, final, lce, or sst
        #[arg(long)]
        level: String,
    },
    /// Generate a deterministic corpus file
    Gen {
        /// random, periodic, fibonacci, or runs
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "0")]
        seed: u64,
        /// Alphabet size for the seeded kinds
        #[arg(long, default_value = "4")]
        sigma: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write_positions(path: &PathBuf, positions: &[usize]) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for p in positions {
        writeln!(w, "{p}")?;
    }
    Ok(())
}

fn read_positions(path: &PathBuf) -> Result<Vec<usize>> {
    let data =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    data.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<usize>().map_err(|e| anyhow!("bad position {l:?}: {e}")))
        .collect()
}

fn cmd_build_partition(input: InputArgs, out: PathBuf, stats: Option<PathBuf>) -> Result<()> {
    let (text, params) = input.load()?;
    let BuildOutput { sstar, stats: record } = build_partition(&text, &params)?;
    write_positions(&out, &sstar)?;
    if let Some(path) = stats {
        let json = serde_json::to_string_pretty(&record)?;
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_lce(input: InputArgs) -> Result<()> {
    let (text, params) = input.load()?;
    let out = build_partition(&text, &params)?;
    let index = LceIndex::build(&text, out.sstar, params.tau)?;
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut w = BufWriter::new(stdout.lock());
    for line in stdin.lock().lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let (p, q) = (
            parts.next().ok_or_else(|| anyhow!("malformed query line {trimmed:?}"))?,
            parts.next().ok_or_else(|| anyhow!("malformed query line {trimmed:?}"))?,
        );
        let p: usize = p.parse().with_context(|| format!("bad position {p:?}"))?;
        let q: usize = q.parse().with_context(|| format!("bad position {q:?}"))?;
        writeln!(w, "{}", index.lce(p, q)?)?;
    }
    Ok(())
}

fn cmd_sst(input: InputArgs, suffixes: PathBuf, out: PathBuf) -> Result<()> {
    let (text, params) = input.load()?;
    let built = build_partition(&text, &params)?;
    let index = LceIndex::build(&text, built.sstar, params.tau)?;
    let chosen = read_positions(&suffixes)?;
    let tree = build_user_sst(&text, &chosen, &index)?;
    fs::write(&out, tree.serialize()).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn cmd_gen(kind: String, n: usize, seed: u64, sigma: u32, out: PathBuf) -> Result<()> {
    let kind = corpus::Kind::parse(&kind).ok_or_else(|| anyhow!("unknown kind {kind:?}"))?;
    if n == 0 {
        bail!("--n must be positive");
    }
    let symbols = corpus::generate(kind, n, sigma, seed);
    if symbols.iter().any(|&c| c > 255) {
        bail!("alphabet too large for the byte output format");
    }
    let bytes: Vec<u8> = symbols.iter().map(|&c| c as u8).collect();
    fs::write(&out, bytes).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<bool> = match cli.command {
        Command::BuildPartition { input, out, stats } => {
            cmd_build_partition(input, out, stats).map(|_| true)
        }
        Command::Lce { input } => cmd_lce(input).map(|_| true),
        Command::Sst { input, suffixes, out } => cmd_sst(input, suffixes, out).map(|_| true),
        Command::Gen { kind, n, seed, sigma, out } => {
            cmd_gen(kind, n, seed, sigma, out).map(|_| true)
        }
        Command::Verify { level } => verify::run(&level),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
