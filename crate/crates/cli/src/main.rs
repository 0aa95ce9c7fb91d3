use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use objmotion_cli::{
    bench_table, cmd_bench, cmd_eval, cmd_generate, cmd_inject, cmd_match, cmd_match_dataset,
    cmd_rasterize, cmd_rasterize_dataset, cmd_viz, dataset_summary, match_summary,
    parse_level_path, RunConfig, DT_FILE,
};

#[derive(Parser)]
#[command(
    name = "objmotion",
    version,
    about = "Instance matching and translation motion fields"
)]
struct Cli {
    /// JSON run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the generator and matcher seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-sample work.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic data set.
    Generate {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Match the candidates of one file or of every sample in a data set.
    Match {
        #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
        candidates: Option<PathBuf>,
        /// Data-set root; writes matches.json into each sample.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// MatchSet JSON destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the translation field of a match set.
    Rasterize {
        #[arg(long, requires = "candidates", required_unless_present = "dataset")]
        matches: Option<PathBuf>,
        #[arg(long)]
        candidates: Option<PathBuf>,
        /// Data-set root; writes dt.flo into each sample.
        #[arg(long, conflicts_with_all = ["matches", "candidates"])]
        dataset: Option<PathBuf>,
        #[arg(long, requires = "height")]
        width: Option<usize>,
        #[arg(long, requires = "width")]
        height: Option<usize>,
        #[arg(long, default_value = DT_FILE)]
        out: PathBuf,
    },
    /// Add a translation field to the coarse levels of a flow pyramid.
    Inject {
        #[arg(long)]
        dt: PathBuf,
        /// Base level as LEVEL=PATH; repeatable. Zero levels when absent.
        #[arg(long)]
        base: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Average endpoint error of an estimate, or of a whole data set.
    Eval {
        #[arg(long)]
        estimate: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Per-sample estimate file name in data-set mode.
        #[arg(long, default_value = DT_FILE)]
        estimate_file: String,
        /// Per-sample truth file name in data-set mode.
        #[arg(long, default_value = "flow_translation.flo")]
        truth_file: String,
        /// Report JSON destination.
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV destination.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Render a flow field with the color wheel.
    Viz {
        #[arg(long)]
        flow: PathBuf,
        /// Second field rendered to the right with the same norm.
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long)]
        max_norm: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time matching and rasterization per scene.
    Bench {
        /// Data-set root; scenes are generated in memory when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?.with_seed(cli.seed);
    let jobs = cli.jobs;
    match cli.command {
        Command::Generate { count, out } => {
            let manifests = cmd_generate(&cfg, count, &out, jobs)?;
            print!("{}", dataset_summary(&manifests));
        }
        Command::Match {
            candidates,
            dataset,
            out,
        } => match (candidates, dataset) {
            (_, Some(root)) => {
                for (i, (m, t)) in cmd_match_dataset(&root, &cfg, jobs)?.iter().enumerate() {
                    println!("sample {i}");
                    print!("{}", match_summary(m, t));
                }
            }
            (Some(path), None) => {
                let (m, t) = cmd_match(&path, &cfg)?;
                match out {
                    Some(out) => {
                        write(&out, &m.to_json()?)?;
                        print!("{}", match_summary(&m, &t));
                    }
                    None => {
                        println!("{}", m.to_json()?);
                        eprint!("{}", match_summary(&m, &t));
                    }
                }
            }
            (None, None) => unreachable!("clap requires one input"),
        },
        Command::Rasterize {
            matches,
            candidates,
            dataset,
            width,
            height,
            out,
        } => match dataset {
            Some(root) => {
                let fields = cmd_rasterize_dataset(&root, jobs)?;
                println!("wrote {} translation fields", fields.len());
            }
            None => {
                let (m, c) = (matches.expect("clap"), candidates.expect("clap"));
                let dims = width.zip(height);
                let f = cmd_rasterize(&m, &c, dims, &out)?;
                println!("wrote {} ({}x{})", out.display(), f.width(), f.height());
            }
        },
        Command::Inject { dt, base, out } => {
            let base = base
                .iter()
                .map(|s| parse_level_path(s))
                .collect::<Result<Vec<_>>>()?;
            let levels = cmd_inject(&dt, &base, &cfg, &out)?;
            for (level, f) in &levels {
                println!("level {level}: {}x{}", f.width(), f.height());
            }
        }
        Command::Eval {
            estimate,
            truth,
            estimate_file,
            truth_file,
            out,
            csv,
        } => {
            let report = cmd_eval(&estimate, &truth, &estimate_file, &truth_file, &cfg, jobs)?;
            let excluded = report.samples.iter().filter(|s| s.report.excluded).count();
            if excluded > 0 {
                eprintln!("excluded {excluded} of {} samples", report.samples.len());
            }
            if let Some(out) = out {
                write(&out, &serde_json::to_string_pretty(&report)?)?;
            }
            if let Some(csv) = csv {
                write(&csv, &report.csv())?;
            }
            print!("{}", report.csv());
        }
        Command::Viz {
            flow,
            compare,
            max_norm,
            out,
        } => cmd_viz(&flow, compare.as_deref(), max_norm, &out)?,
        Command::Bench { data, count } => {
            let rows = cmd_bench(data.as_deref(), count, &cfg)?;
            print!("{}", bench_table(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
