use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nightgrid::compactness::hotspot_compactness;
use nightgrid::hotspot::extract_hotspots_from_grid;
use nightgrid::pipeline::{read_corpus_file, run_analyze, CorpusRow, PipelineConfig};
use nightgrid::report::write_report;
use nightgrid::stats::{fit_growth_model, fit_scaling, CompactnessIndex, ModelSpec};
use nightgrid::synth::{write_corpus, SynthCorpusSpec};
use nightgrid::{read_ascii_grid, CoordMode, Error, Region};
use serde::Serialize;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "nightgrid", version, about = "Urban hotspot analysis on night-time luminosity rasters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract Loubar hotspots from one raster and print the summary as JSON.
    Hotspots {
        raster: PathBuf,
        #[arg(long, default_value = "planar")]
        coord_mode: CoordMode,
        #[arg(long, default_value = "city")]
        city_id: String,
        /// Also write the hotspot cells as CSV.
        #[arg(long)]
        cells: Option<PathBuf>,
    },
    /// Compute PI and AI for the hotspots of one raster.
    Compact {
        raster: PathBuf,
        #[arg(long, default_value = "planar")]
        coord_mode: CoordMode,
        #[arg(long, default_value = "city")]
        city_id: String,
    },
    /// Fit the hotspot scaling law on a corpus table.
    FitScaling {
        corpus: PathBuf,
        /// Restrict the fit to one region.
        #[arg(long)]
        region: Option<Region>,
    },
    /// Fit one growth regression on a corpus table.
    Regress {
        corpus: PathBuf,
        #[arg(long, value_enum)]
        index: Option<IndexArg>,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        model: u8,
        #[arg(long)]
        region: Option<Region>,
    },
    /// Generate a synthetic corpus from a JSON spec.
    Synth {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full corpus analysis described by a key=value config file.
    Analyze {
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        skip_errors: bool,
        #[arg(long)]
        emit_svg: bool,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        coord_mode: Option<CoordMode>,
    },
    /// Write SVG scatter plots for a corpus table.
    Report { corpus: PathBuf, out_dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum IndexArg {
    Pi,
    Ai,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(e.into())
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load_rows(corpus: &Path, region: Option<Region>) -> Result<Vec<CorpusRow>, Failure> {
    let mut rows = read_corpus_file(corpus)?;
    if let Some(r) = region {
        rows.retain(|row| row.region == r);
    }
    Ok(rows)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Hotspots {
            raster,
            coord_mode,
            city_id,
            cells,
        } => {
            let grid = read_ascii_grid(&raster, coord_mode).map_err(|e| e.in_file(&raster))?;
            let hs = extract_hotspots_from_grid(&grid).map_err(|e| e.in_city(&city_id))?;
            if let Some(path) = cells {
                let file = std::fs::File::create(&path).map_err(|e| Error::from(e).in_file(&path))?;
                hs.write_cells_csv(file)?;
            }
            print_json(&hs.summary(&city_id))
        }
        Command::Compact {
            raster,
            coord_mode,
            city_id,
        } => {
            let grid = read_ascii_grid(&raster, coord_mode).map_err(|e| e.in_file(&raster))?;
            let hs = extract_hotspots_from_grid(&grid).map_err(|e| e.in_city(&city_id))?;
            print_json(&hotspot_compactness(&hs).report(&city_id))
        }
        Command::FitScaling { corpus, region } => {
            let rows = load_rows(&corpus, region)?;
            let obs: Vec<_> = rows.iter().map(CorpusRow::scaling_observation).collect();
            print_json(&fit_scaling(&obs)?)
        }
        Command::Regress {
            corpus,
            index,
            model,
            region,
        } => {
            let spec = ModelSpec::from_number(model)?;
            let wanted = index.map(|i| match i {
                IndexArg::Pi => CompactnessIndex::Proximity,
                IndexArg::Ai => CompactnessIndex::Agglomeration,
            });
            if let (Some(w), Some(m)) = (wanted, spec.index()) {
                if w != m {
                    return Err(Failure::Usage(format!(
                        "model {model} uses {}, not {}",
                        m.name(),
                        w.name()
                    )));
                }
            }
            if wanted.is_none() && spec.index().is_some() {
                return Err(Failure::Usage(format!("model {model} requires --index")));
            }
            let rows = load_rows(&corpus, region)?;
            let obs: Vec<_> = rows.iter().map(CorpusRow::growth_observation).collect();
            print_json(&fit_growth_model(&obs, spec)?)
        }
        Command::Synth { spec, out } => {
            let text = std::fs::read_to_string(&spec).map_err(|e| Error::from(e).in_file(&spec))?;
            let parsed: SynthCorpusSpec =
                serde_json::from_str(&text).map_err(|e| Error::from(e).in_file(&spec))?;
            let truth = write_corpus(&parsed, &out)?;
            eprintln!("wrote {} cities to {}", truth.cities.len(), out.display());
            Ok(())
        }
        Command::Analyze {
            config,
            threads,
            skip_errors,
            emit_svg,
            output_dir,
            coord_mode,
        } => {
            let mut cfg = PipelineConfig::from_file(&config)?;
            cfg.apply_env()?;
            if let Some(t) = threads {
                if t == 0 {
                    return Err(Failure::Usage("--threads must be at least 1".into()));
                }
                cfg.parallelism = t;
            }
            cfg.skip_errors |= skip_errors;
            cfg.emit_svg |= emit_svg;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            if let Some(mode) = coord_mode {
                cfg.coord_mode = mode;
            }
            let outcome = run_analyze(&cfg)?;
            eprintln!(
                "analyzed {} cities, {} failed, {} region reports in {}",
                outcome.rows.len(),
                outcome.failures.len(),
                outcome.reports.len(),
                cfg.output_dir.display()
            );
            Ok(())
        }
        Command::Report { corpus, out_dir } => {
            let rows = read_corpus_file(&corpus)?;
            for path in write_report(&rows, &out_dir)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { EXIT_DATA } else { EXIT_INTERNAL })
        }
    }
}
