use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use phonoprobe::pipeline::{
    cmd_extract, cmd_generate, cmd_probe, cmd_report, cmd_train, LoadedConfig, ProbeKind,
};
use phonoprobe::Error;

/// Train a grounded speech encoder and probe its layers for phonology.
#[derive(Debug, Parser)]
#[command(name = "phonoprobe", version)]
struct Cli {
    /// Experiment configuration (JSON). Omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Experiment seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize the corpus (requires `corpus.lexicon` in the config).
    Generate,
    /// Train the encoder on a generated corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Record layer activations for the probe stimuli into an archive.
    Extract {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Run probes against an archive.
    Probe {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value_t = Which::All)]
        which: Which,
    },
    /// Merge probe JSON reports into one table.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    Decode,
    Abx,
    Rsa,
    Cluster,
    Synonym,
    All,
}

impl Which {
    fn kinds(self) -> Vec<ProbeKind> {
        match self {
            Which::Decode => vec![ProbeKind::Decode],
            Which::Abx => vec![ProbeKind::Abx],
            Which::Rsa => vec![ProbeKind::Rsa],
            Which::Cluster => vec![ProbeKind::Cluster],
            Which::Synonym => vec![ProbeKind::Synonym],
            Which::All => ProbeKind::ALL.to_vec(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Which::All => "all",
            w => w.kinds()[0].name(),
        }
    }
}

fn run(cli: Cli) -> phonoprobe::Result<()> {
    let cfg = LoadedConfig::load(cli.config.as_deref())?;
    let out = &cli.out;
    match cli.command {
        Command::Generate => {
            let checksum = cmd_generate(&cfg, cli.seed, out)?;
            println!("{checksum}");
        }
        Command::Train { corpus } => {
            let s = cmd_train(&cfg, cli.seed, &corpus, out)?;
            if let Some(last) = s.log.last() {
                println!(
                    "epoch {} loss {:.6} recall@1 {:.4} recall@5 {:.4}",
                    last.epoch, last.mean_loss, last.recall_at_1, last.recall_at_5
                );
            }
            println!("{}", s.checkpoint.display());
        }
        Command::Extract { checkpoint, corpus } => {
            let m = cmd_extract(&cfg, cli.seed, &checkpoint, &corpus, out)?;
            let items: usize = m.groups.values().map(Vec::len).sum();
            println!("{items} stimuli, {} representations", m.representations.len());
        }
        Command::Probe {
            archive,
            corpus,
            which,
        } => {
            let r = cmd_probe(&cfg, cli.seed, &archive, &corpus, &which.kinds(), which.name(), out)?;
            print!("{}", r.to_csv());
        }
        Command::Report { inputs } => {
            let r = cmd_report(&inputs, out)?;
            print!("{}", r.to_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
