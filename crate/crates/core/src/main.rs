use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use laf_core::locate::LocateMode;
use laf_core::pipeline::{
    ablate, evaluate_manifest, load_lexicon, locate_texts, run_sample, write_ablation, write_sample, Overrides,
    PreparedRun, Preset, RunConfig, TOOL_VERSION,
};
use laf_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "laf",
    version,
    about = "Locate-and-forget guided editing over analytic diffusion models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse caption and prompt and print the edit plan as JSON.
    Locate {
        #[arg(long)]
        caption: String,
        #[arg(long)]
        prompt: String,
        #[arg(long, default_value = "image-residual")]
        mode: LocateMode,
        /// Extra lexicon entries (TSV: surface, lemma, POS).
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Write the plan here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one guided edit and write trajectory, final state and metadata.
    Sample(RunArgs),
    /// Sweep the forgetting scale over many chains.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated forgetting scales.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2.5,5,10")]
        eta_grid: Vec<f64>,
        /// Chains per grid point.
        #[arg(long, default_value_t = 500)]
        runs: usize,
    },
    /// Score a batch of edits described by a JSON manifest.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    caption: Option<String>,
    #[arg(long)]
    prompt: Option<String>,
    #[arg(long)]
    mode: Option<LocateMode>,
    /// Named guidance settings (edit: w=10, sweep: w=7.5), applied before --w/--eta.
    #[arg(long)]
    preset: Option<Preset>,
    /// Positive guidance scale.
    #[arg(long)]
    w: Option<f64>,
    /// Forgetting scale.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    strength: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Score model spec (JSON).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Input latent, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    input: Option<Vec<f64>>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_path(p)?,
            None => RunConfig::default(),
        };
        Overrides {
            caption: self.caption,
            prompt: self.prompt,
            mode: self.mode,
            preset: self.preset,
            w: self.w,
            eta: self.eta,
            steps: self.steps,
            strength: self.strength,
            seed: self.seed,
            model_spec: self.model,
            output_dir: self.out_dir,
            input: self.input,
            lexicon: self.lexicon,
        }
        .apply(&mut cfg);
        Ok(cfg)
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => say(text),
    }
}

/// Write to stdout; a closed pipe (`laf ... | head`) is not an error.
fn say(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
        _ => Ok(()),
    }
}

/// Sidecar `<out>.metadata.json` for commands whose main output is a single file.
fn write_sidecar(out: Option<&Path>, command: &str, args: serde_json::Value) -> Result<()> {
    let Some(out) = out else { return Ok(()) };
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".metadata.json");
    let path = out.with_file_name(name);
    let meta = serde_json::json!({
        "tool": "laf",
        "version": TOOL_VERSION,
        "command": command,
        "args": args,
    });
    emit(&pretty(&meta), Some(&path))
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Locate {
            caption,
            prompt,
            mode,
            lexicon,
            out,
        } => {
            let lex = load_lexicon(lexicon.as_deref())?;
            let plan = locate_texts(&caption, &prompt, mode, &lex)?;
            emit(&pretty(&plan), out.as_deref())?;
            let args = serde_json::json!({"caption": caption, "prompt": prompt, "mode": mode, "lexicon": lexicon});
            write_sidecar(out.as_deref(), "locate", args)
        }
        Command::Sample(args) => {
            let cfg = args.into_config()?;
            let dir = cfg.output_dir.clone();
            let sample = run_sample(cfg)?;
            let files = write_sample(&sample, &dir)?;
            let fin = sample.final_state()?;
            let mut text = format!("final z = {:?} (t = {})\n", fin.z, fin.t);
            for (label, p) in &fin.responsibilities {
                text += &format!("  p({label}) = {p:.6}\n");
            }
            for path in [&files.trajectory_csv, &files.final_state_json, &files.metadata_json] {
                text += &format!("wrote {}\n", path.display());
            }
            say(&text)
        }
        Command::Ablate { run, eta_grid, runs } => {
            let cfg = run.into_config()?;
            let dir = cfg.output_dir.clone();
            let prepared = PreparedRun::new(cfg)?;
            let sweep = ablate(&prepared, &eta_grid, runs)?;
            let mut text = sweep.to_csv();
            for path in write_ablation(&sweep, &dir)? {
                text += &format!("wrote {}\n", path.display());
            }
            say(&text)
        }
        Command::Evaluate { manifest, out } => {
            let report = evaluate_manifest(&manifest)?;
            emit(&pretty(&report), out.as_deref())?;
            write_sidecar(out.as_deref(), "evaluate", serde_json::json!({"manifest": manifest}))
        }
    }
}

fn main() -> ExitCode {
    // Usage errors are validation failures (1); 2 is reserved for text that
    // cannot be parsed or located.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("laf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
