mod commands;
mod config;
mod repl;

use clap::{Args, Parser, Subcommand};
use config::{CliConfig, Format, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "biodb", version, about = "Object database for taxonomy, vector and sequence data")]
struct Cli {
    /// Database file [env: BIODB_DB]
    #[arg(long, global = true)]
    db: Option<PathBuf>,
    /// TOML settings file [env: BIODB_CONFIG]
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Read cache size in 8 KiB pages [env: BIODB_CACHE_PAGES]
    #[arg(long, global = true)]
    cache_pages: Option<usize>,
    /// Result format [env: BIODB_FORMAT]
    #[arg(long, short = 'f', global = true, value_enum)]
    format: Option<Format>,
    /// More diagnostics on stderr; repeat for more [env: BIODB_VERBOSE]
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Create an empty database file
    Init {
        /// Replace an existing file
        #[arg(long)]
        force: bool,
    },
    /// Load class and index declarations into an empty database
    LoadSchema { file: PathBuf },
    /// Generate the synthetic biodiversity population
    GenData(GenArgs),
    /// Load vector data from the three tab-separated files
    LoadSequoia { points: PathBuf, polygons: PathBuf, graphs: PathBuf },
    /// Write synthetic vector data files into a directory
    GenSequoia {
        dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        polygons: Option<usize>,
        #[arg(long)]
        graphs: Option<usize>,
    },
    /// Insert one object per FASTA record
    LoadFasta {
        file: PathBuf,
        #[arg(long)]
        class: String,
        /// Sequence attribute
        #[arg(long)]
        attr: String,
        /// String attribute that receives the record id
        #[arg(long)]
        id_attr: Option<String>,
    },
    /// Run a query
    Query(QueryArgs),
    /// Show the plan chosen for a query
    Explain(QueryArgs),
    /// Interactive query prompt
    Repl,
    /// Run a benchmark suite under index configurations
    Bench(BenchArgs),
    /// Extent cardinalities and index sizes
    Stats {
        /// Print the schema as well
        #[arg(long)]
        schema: bool,
    },
    /// Print the contents of an index, e.g. "btree(PlantSpecies.name)"
    DumpIndex { name: String },
    /// Print the sequences of Class.attr as FASTA
    DumpSeq {
        /// Class and sequence attribute, e.g. EMBLEntry.dna
        target: String,
        /// String attribute used as the record id (default: the oid)
        #[arg(long)]
        id_attr: Option<String>,
        #[arg(long)]
        limit: Option<usize>,
    },
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub orders: Option<u32>,
    #[arg(long)]
    pub branch_min: Option<u32>,
    #[arg(long)]
    pub branch_max: Option<u32>,
    #[arg(long)]
    pub sequences_per_species: Option<u32>,
    #[arg(long)]
    pub seq_len_min: Option<usize>,
    #[arg(long)]
    pub seq_len_max: Option<usize>,
    /// Draw sequences from this FASTA file instead of generating them
    #[arg(long)]
    pub pool: Option<PathBuf>,
}

#[derive(Args)]
pub struct QueryArgs {
    /// Query text; omit when using --file
    #[arg(required_unless_present = "file")]
    pub text: Option<String>,
    /// Read the query from a file
    #[arg(long, conflicts_with = "text")]
    pub file: Option<PathBuf>,
    /// Evaluate with the unoptimized plan
    #[arg(long)]
    pub naive: bool,
    /// Report elapsed time on stderr
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args)]
pub struct BenchArgs {
    /// bio, sequoia or paradise
    pub suite: String,
    /// Comma-separated: none, pathdict, pathdict+rtree, hilbert
    #[arg(long, default_value = "none,pathdict,pathdict+rtree,hilbert")]
    pub configs: String,
    /// Check every result against the naive plan
    #[arg(long)]
    pub verify: bool,
    /// Timed runs per query; the fastest counts
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    /// Closest-graph query over every point instead of a sample
    #[arg(long)]
    pub full: bool,
    /// Emit JSON lines instead of the table
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let flags = Overrides { db: cli.db, config: cli.config, cache_pages: cli.cache_pages, format: cli.format, verbose: cli.verbose };
    let result = CliConfig::resolve(flags, &|k| std::env::var(k).ok()).and_then(|cfg| commands::run(cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
