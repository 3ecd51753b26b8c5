use std::path::PathBuf;

use cil_core::data::{generate_synthetic, read_header, DatasetFormat, SyntheticSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{DatasetSource, RunConfig, OUTPUT_DIR_ENV};
use crate::error::{CliError, CliResult};
use crate::experiment::{cmd_ablate, cmd_train};
use crate::report::aggregate;

#[derive(Debug, Parser)]
#[command(name = "cil", version, about = "Closed-form class-incremental learning on embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the incremental loop and write per-seed reports.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Also write `model-seed-<s>.bin` classifier dumps.
        #[arg(long)]
        dump_model: bool,
    },
    /// Compare full, no-oversampling and no-buffer variants.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Merge reports from run directories into one CSV.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a Gaussian embedding dataset as `train` and `test` files.
    Synth {
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 250)]
        per_class: usize,
        #[arg(long, default_value_t = 8.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the header of a binary embedding file.
    Inspect { file: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Binary,
    Csv,
}

impl From<FormatArg> for DatasetFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Binary => DatasetFormat::Binary,
            FormatArg::Csv => DatasetFormat::Csv,
        }
    }
}

/// Flags shared by `train` and `ablate`. Each one overrides the config file.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, requires = "test")]
    pub train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub increment: Option<usize>,
    /// Stored embeddings per class.
    #[arg(long)]
    pub buffer_per_class: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub clamp_epsilon: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub max_classes: Option<usize>,
    #[arg(long)]
    pub disable_buffer: bool,
    #[arg(long)]
    pub disable_oversampling: bool,
    /// Output directory; beats the environment variable and the file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    /// File, then environment, then flags, each layer overriding the last.
    pub fn resolve(&self, env_output_dir: Option<PathBuf>) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = env_output_dir {
            cfg.output_dir = dir;
        }
        if let Some(train) = &self.train {
            let test = self.test.clone().expect("clap enforces --test with --train");
            cfg.dataset = DatasetSource::Files { train: train.clone(), test, format: self.format.map(Into::into) };
        } else if self.format.is_some() {
            return Err(CliError::Config("--format needs --train and --test".into()));
        }
        let synthetic_flags = self.classes.is_some() || self.dim.is_some() || self.per_class.is_some() || self.separation.is_some();
        match &mut cfg.dataset {
            DatasetSource::Synthetic { num_classes, dim, per_class, separation } => {
                *num_classes = self.classes.unwrap_or(*num_classes);
                *dim = self.dim.unwrap_or(*dim);
                *per_class = self.per_class.unwrap_or(*per_class);
                *separation = self.separation.unwrap_or(*separation);
            }
            DatasetSource::Files { .. } if synthetic_flags => {
                return Err(CliError::Config("synthetic dataset flags conflict with file inputs".into()));
            }
            DatasetSource::Files { .. } => {}
        }
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field.clone() { cfg.$field = v; } )* };
        }
        set!(increment, buffer_per_class, lambda, clamp_epsilon, seeds);
        if self.max_classes.is_some() {
            cfg.max_classes = self.max_classes;
        }
        cfg.disable_buffer |= self.disable_buffer;
        cfg.disable_oversampling |= self.disable_oversampling;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn env_output_dir() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train { run, dump_model } => {
            let cfg = run.resolve(env_output_dir())?;
            for r in cmd_train(&cfg, dump_model)? {
                println!(
                    "seed {}: average {:.4} final {:.4} over {} tasks",
                    r.seed,
                    r.average_accuracy,
                    r.final_accuracy,
                    r.per_task_accuracy.len()
                );
            }
            println!("reports in {}", cfg.output_dir.display());
        }
        Command::Ablate { run } => {
            let cfg = run.resolve(env_output_dir())?;
            print!("{}", cmd_ablate(&cfg)?.render());
        }
        Command::Report { dirs, out } => {
            let agg = aggregate(&dirs)?;
            for s in &agg.skipped {
                eprintln!("warning: skipped {}: {}", s.path.display(), s.reason.replace('\n', " "));
            }
            match out {
                Some(path) => std::fs::write(&path, &agg.csv).map_err(|e| CliError::output(&path.display().to_string(), e))?,
                None => print!("{}", agg.csv),
            }
        }
        Command::Synth { classes, dim, per_class, separation, seed, format, out } => {
            let spec = SyntheticSpec { num_classes: classes, dim, per_class, separation, seed };
            let (train, test) = generate_synthetic(&spec)?;
            std::fs::create_dir_all(&out).map_err(|e| CliError::output(&out.display().to_string(), e))?;
            let ext = match format {
                FormatArg::Binary => "cemb",
                FormatArg::Csv => "csv",
            };
            for (name, data) in [("train", &train), ("test", &test)] {
                let path = out.join(format!("{name}.{ext}"));
                data.save(&path, format.into()).map_err(|e| CliError::output(&path.display().to_string(), e))?;
                println!("{}: {} records, dim {}", path.display(), data.len(), data.dim());
            }
        }
        Command::Inspect { file } => {
            let h = read_header(&file).map_err(|e| CliError::Data(format!("{}: {e}", file.display())))?;
            println!("version {}", h.version);
            println!("dim {}", h.dim);
            println!("count {}", h.count);
            println!("label_width {}", h.label_width);
            println!("payload_bytes {}", h.payload_len());
        }
    }
    Ok(())
}
