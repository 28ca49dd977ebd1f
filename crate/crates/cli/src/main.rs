//! `drleak`: reproducible reconstruction-attack experiments against
//! dimensionality-reduction embeddings.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod data;
mod error;
mod manifest;
mod settings;

use error::CliError;
use settings::Settings;

#[derive(Parser, Debug)]
#[command(
    name = "drleak",
    version,
    about = "Privacy leakage of dimensionality-reduction embeddings"
)]
struct Cli {
    /// Upper bound on concurrent jobs (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Global seed.
    #[arg(long, global = true, env = "DRLEAK_SEED")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Embed a dataset in two dimensions and write the coordinates as CSV.
    Embed(EmbedArgs),
    /// Build a shadow corpus and write it in DRSH format.
    Shadow(ShadowArgs),
    /// Run the attack grid and write per-cell and aggregate reports.
    Attack(AttackArgs),
    /// Measure how input noise moves reconstructions.
    Defend(DefendArgs),
    /// Aggregate the cell files of an attack run into a grid table.
    Report(ReportArgs),
}

#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// key=value config file with [section] headers.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a config entry, e.g. `--set net.lr=1e-3`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,

    /// Dataset: `synthetic:<n>:<seed>`, a .csv matrix, or an IDX image file.
    #[arg(long)]
    input: Option<String>,

    /// Keep only the first N rows of the dataset.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct ReducerArgs {
    #[arg(long)]
    k_neighbors: Option<usize>,
    #[arg(long)]
    perplexity: Option<f64>,
    #[arg(long)]
    min_dist: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Learning rate of the t-SNE / UMAP optimizers.
    #[arg(long)]
    reducer_lr: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct NetArgs {
    /// mlp or convt.
    #[arg(long)]
    decoder: Option<String>,
    /// Comma-separated hidden widths of the MLP decoder.
    #[arg(long)]
    mlp_hidden: Option<String>,
    #[arg(long)]
    target_hidden: Option<usize>,
    #[arg(long)]
    context_hidden: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    l1_weight: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    /// Comma-separated methods (pca, srp, mds, isomap, tsne, umap).
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated known-member counts.
    #[arg(long)]
    known_sizes: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Public pool size, split 80/10/10 into shadow train/val/test.
    #[arg(long)]
    public_size: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    reducer: ReducerArgs,
    #[arg(long)]
    method: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ShadowArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    reducer: ReducerArgs,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    known_size: Option<usize>,
    #[arg(long)]
    public_size: Option<usize>,
    /// Output DRSH path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a CSV debug export.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AttackArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    reducer: ReducerArgs,
    #[command(flatten)]
    net: NetArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Keep test reconstructions as raw f32 tensors.
    #[arg(long)]
    keep_reconstructions: bool,
    /// Export test reconstructions as PGM images (implies --keep-reconstructions).
    #[arg(long)]
    pgm: bool,
}

#[derive(Args, Debug)]
struct DefendArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    reducer: ReducerArgs,
    #[command(flatten)]
    net: NetArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Comma-separated noise levels.
    #[arg(long)]
    sigmas: Option<String>,
    /// `pixel` divides the levels by 255; `data` uses them as given.
    #[arg(long)]
    sigma_scale: Option<String>,
    /// Clamp noisy data to the normalized range.
    #[arg(long)]
    clip: bool,
    #[arg(long)]
    noise_seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Output directory of an `attack` run.
    #[arg(long)]
    dir: PathBuf,
    /// Where to write the grid table (defaults to <dir>/grid.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn base_settings(args: &ConfigArgs) -> Result<Settings, CliError> {
    let mut s = match &args.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    s.set_opt("data.input", args.input.clone());
    s.set_opt("data.limit", args.limit);
    s.apply_overrides(&args.overrides)?;
    Ok(s)
}

fn apply_reducer(s: &mut Settings, r: &ReducerArgs) {
    s.set_opt("reducer.k_neighbors", r.k_neighbors);
    s.set_opt("reducer.perplexity", r.perplexity);
    s.set_opt("reducer.min_dist", r.min_dist);
    s.set_opt("reducer.max_iters", r.max_iters);
    s.set_opt("reducer.learning_rate", r.reducer_lr);
}

fn apply_net(s: &mut Settings, n: &NetArgs) {
    s.set_opt("net.decoder_kind", n.decoder.clone());
    s.set_opt("net.mlp_hidden", n.mlp_hidden.clone());
    s.set_opt("net.target_hidden", n.target_hidden);
    s.set_opt("net.context_hidden", n.context_hidden);
    s.set_opt("net.batch_size", n.batch_size);
    s.set_opt("net.lr", n.lr);
    s.set_opt("net.max_epochs", n.max_epochs);
    s.set_opt("net.patience", n.patience);
    s.set_opt("net.l1_weight", n.l1_weight);
}

fn apply_grid(s: &mut Settings, g: &GridArgs) {
    s.set_opt("experiment.methods", g.methods.clone());
    s.set_opt("experiment.known_sizes", g.known_sizes.clone());
    s.set_opt("experiment.repeats", g.repeats);
    s.set_opt("experiment.public_size", g.public_size);
    s.set_opt("output.dir", g.out.as_ref().map(|p| p.display().to_string()));
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    // a second initialization (e.g. in tests) is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();

    let seed_flag = cli.seed;
    let with_seed = |s: &mut Settings| s.set_opt("experiment.seed", seed_flag);
    match cli.command {
        Command::Embed(a) => {
            let mut s = base_settings(&a.config)?;
            apply_reducer(&mut s, &a.reducer);
            s.set_opt("reducer.method", a.method);
            s.set_opt("embed.out", a.out.map(|p| p.display().to_string()));
            with_seed(&mut s);
            commands::embed(&s)
        }
        Command::Shadow(a) => {
            let mut s = base_settings(&a.config)?;
            apply_reducer(&mut s, &a.reducer);
            s.set_opt("reducer.method", a.method);
            s.set_opt("shadow.known_size", a.known_size);
            s.set_opt("shadow.public_size", a.public_size);
            s.set_opt("shadow.out", a.out.map(|p| p.display().to_string()));
            s.set_opt("shadow.csv", a.csv.map(|p| p.display().to_string()));
            with_seed(&mut s);
            commands::shadow(&s)
        }
        Command::Attack(a) => {
            let mut s = base_settings(&a.config)?;
            apply_reducer(&mut s, &a.reducer);
            apply_net(&mut s, &a.net);
            apply_grid(&mut s, &a.grid);
            if a.keep_reconstructions || a.pgm {
                s.set("output.keep_reconstructions", "true");
            }
            if a.pgm {
                s.set("output.pgm", "true");
            }
            with_seed(&mut s);
            commands::attack(&s)
        }
        Command::Defend(a) => {
            let mut s = base_settings(&a.config)?;
            apply_reducer(&mut s, &a.reducer);
            apply_net(&mut s, &a.net);
            apply_grid(&mut s, &a.grid);
            s.set_opt("defense.sigmas", a.sigmas);
            s.set_opt("defense.sigma_scale", a.sigma_scale);
            s.set_opt("defense.noise_seed", a.noise_seed);
            if a.clip {
                s.set("defense.clip", "true");
            }
            with_seed(&mut s);
            commands::defend(&s)
        }
        Command::Report(a) => commands::report(&a.dir, a.out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
