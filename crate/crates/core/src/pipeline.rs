//! Corpus analysis: per-city hotspots and compactness in parallel, then
//! per-region scaling fits, index summaries and growth models.
//!
//! Output is independent of the worker count: cities are sorted by
//! `city_id` before anything is written, and all fits run serially.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compactness::{hotspot_compactness, CompactnessReport};
use crate::error::{Error, Result};
use crate::grid_io::{load_city_table, read_ascii_grid, CityRecord, CoordMode, Region};
use crate::hotspot::{extract_hotspots_from_grid, HotspotSummary};
use crate::report::write_report;
use crate::stats::{
    fit_growth_model, fit_scaling, select_by_aic, summarize_index, GrowthObservation,
    IndexSummary, ModelSpec, RegressionFit, ScalingFit, ScalingObservation, SummaryWarning,
};

/// Environment variable overriding the configured worker count.
pub const THREADS_ENV: &str = "NIGHTGRID_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub city_table_path: PathBuf,
    pub output_dir: PathBuf,
    pub coord_mode: CoordMode,
    /// Empty means every region present in the table.
    pub regions_to_fit: Vec<Region>,
    pub model_variants: Vec<ModelSpec>,
    pub parallelism: usize,
    pub emit_svg: bool,
    pub skip_errors: bool,
}

impl PipelineConfig {
    pub fn new(city_table_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            city_table_path: city_table_path.into(),
            output_dir: output_dir.into(),
            coord_mode: CoordMode::PlanarMeters,
            regions_to_fit: Vec::new(),
            model_variants: ModelSpec::ALL.to_vec(),
            parallelism: 1,
            emit_svg: false,
            skip_errors: false,
        }
    }

    /// Parses `key = value` lines. `#` starts a comment. Relative paths are
    /// resolved against `base_dir`.
    ///
    /// Keys: `city_table`, `output_dir`, `coord_mode`, `regions`, `models`,
    /// `parallelism`, `emit_svg`, `skip_errors`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut table = None;
        let mut out = None;
        let mut cfg = PipelineConfig::new("", "");
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::Parse {
                line: i + 1,
                column: 1,
                message: m,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let wrap = |e: Error| err(e.to_string());
            match key {
                "city_table" => table = Some(base_dir.join(value)),
                "output_dir" => out = Some(base_dir.join(value)),
                "coord_mode" => cfg.coord_mode = value.parse().map_err(wrap)?,
                "regions" => cfg.regions_to_fit = parse_list(value).map_err(wrap)?,
                "models" => cfg.model_variants = parse_list(value).map_err(wrap)?,
                "parallelism" => {
                    cfg.parallelism = value
                        .parse::<usize>()
                        .ok()
                        .filter(|&p| p >= 1)
                        .ok_or_else(|| err("parallelism must be an integer >= 1".into()))?
                }
                "emit_svg" => cfg.emit_svg = parse_bool(value).map_err(wrap)?,
                "skip_errors" => cfg.skip_errors = parse_bool(value).map_err(wrap)?,
                other => return Err(err(format!("unknown config key {other:?}"))),
            }
        }
        cfg.city_table_path = table.ok_or_else(|| Error::invalid("config is missing city_table"))?;
        cfg.output_dir = out.ok_or_else(|| Error::invalid("config is missing output_dir"))?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| e.in_file(path))
    }

    /// Applies `NIGHTGRID_THREADS` when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(THREADS_ENV) {
            self.parallelism = v
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&p| p >= 1)
                .ok_or_else(|| Error::invalid(format!("{THREADS_ENV} must be an integer >= 1")))?;
        }
        Ok(())
    }
}

pub fn parse_list<T: std::str::FromStr<Err = Error>>(value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn parse_bool(value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::invalid(format!("expected true or false, got {value:?}"))),
    }
}

/// One row of the corpus results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRow {
    pub city_id: String,
    pub region: Region,
    pub population: f64,
    pub gdp: f64,
    pub area_km2: f64,
    pub n_hotspots: usize,
    pub ct: f64,
    pub pi: f64,
    pub ai: f64,
    /// Standardized residual of the region's scaling fit; empty when the
    /// region was not fitted.
    pub scaling_residual: Option<f64>,
    pub outlier: bool,
}

impl CorpusRow {
    pub fn gdp_per_km2(&self) -> f64 {
        self.gdp / self.area_km2
    }

    pub fn growth_observation(&self) -> GrowthObservation {
        GrowthObservation {
            city_id: self.city_id.clone(),
            gdp_per_km2: self.gdp_per_km2(),
            population: self.population,
            pi: self.pi,
            ai: self.ai,
        }
    }

    pub fn scaling_observation(&self) -> ScalingObservation {
        ScalingObservation {
            city_id: self.city_id.clone(),
            population: self.population,
            hotspot_count: self.n_hotspots as f64,
        }
    }
}

pub fn write_corpus_csv<W: std::io::Write>(writer: W, rows: &[CorpusRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_corpus_csv<R: std::io::Read>(reader: R) -> Result<Vec<CorpusRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

pub fn read_corpus_file(path: &Path) -> Result<Vec<CorpusRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::from(e).in_file(path))?;
    read_corpus_csv(file).map_err(|e| e.in_file(path))
}

/// Everything computed for one city.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CityAnalysis {
    pub hotspots: HotspotSummary,
    pub compactness: CompactnessReport,
    #[serde(skip)]
    pub row: CorpusRow,
}

fn resolve(base: &Path, raster: &str) -> PathBuf {
    let p = Path::new(raster);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Hotspots and compactness of one city. `base_dir` anchors relative raster
/// paths.
pub fn analyze_city(city: &CityRecord, base_dir: &Path, coord_mode: CoordMode) -> Result<CityAnalysis> {
    let inner = || -> Result<CityAnalysis> {
        let grid = read_ascii_grid(&resolve(base_dir, &city.raster_path), coord_mode)?;
        let hs = extract_hotspots_from_grid(&grid)?;
        let comp = hotspot_compactness(&hs);
        let area_km2 = city
            .area_km2
            .unwrap_or(hs.stats.n_valid as f64 * hs.cell_area / 1e6);
        Ok(CityAnalysis {
            hotspots: hs.summary(&city.city_id),
            compactness: comp.report(&city.city_id),
            row: CorpusRow {
                city_id: city.city_id.clone(),
                region: city.region,
                population: city.population,
                gdp: city.gdp,
                area_km2,
                n_hotspots: hs.count,
                ct: hs.fractional_count,
                pi: comp.pi,
                ai: comp.ai,
                scaling_residual: None,
                outlier: false,
            },
        })
    };
    inner().map_err(|e| e.in_city(&city.city_id))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRecord {
    pub model: ModelSpec,
    pub fit: Option<RegressionFit>,
    pub error: Option<String>,
}

/// Per-region results, laid out like the regression tables: one record per
/// model variant plus the AIC-selected model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub region: Region,
    pub n_cities: usize,
    pub scaling: Option<ScalingFit>,
    pub scaling_error: Option<String>,
    pub summaries: Vec<IndexSummary>,
    pub warnings: Vec<SummaryWarning>,
    pub models: Vec<ModelRecord>,
    pub selected_model: Option<ModelSpec>,
}

/// Fits every region in `regions` (all regions present when empty) and fills
/// the scaling residual columns of `rows`. Fit failures are recorded in the
/// report; `strict` turns the first one into an error instead.
pub fn fit_regions(
    rows: &mut [CorpusRow],
    regions: &[Region],
    models: &[ModelSpec],
    strict: bool,
) -> Result<Vec<RegionReport>> {
    let regions: Vec<Region> = if regions.is_empty() {
        let mut present: Vec<Region> = rows.iter().map(|r| r.region).collect();
        present.sort();
        present.dedup();
        present
    } else {
        regions.to_vec()
    };

    let mut reports = Vec::new();
    for region in regions {
        let fail = |e: Error| -> Result<String> {
            if strict {
                Err(e.in_region(region.as_str()))
            } else {
                Ok(e.to_string())
            }
        };
        let idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].region == region).collect();
        let members: Vec<&CorpusRow> = idx.iter().map(|&i| &rows[i]).collect();

        let scaling_obs: Vec<ScalingObservation> =
            members.iter().map(|r| r.scaling_observation()).collect();
        let (scaling, scaling_error) = match fit_scaling(&scaling_obs) {
            Ok(fit) => (Some(fit), None),
            Err(e) => (None, Some(fail(e)?)),
        };

        let triples: Vec<(Region, f64, f64)> = members.iter().map(|r| (r.region, r.pi, r.ai)).collect();
        let (summaries, warnings) = summarize_index(&triples, &[region]);

        let growth: Vec<GrowthObservation> = members.iter().map(|r| r.growth_observation()).collect();
        let mut records = Vec::new();
        for &model in models {
            records.push(match fit_growth_model(&growth, model) {
                Ok(fit) => ModelRecord {
                    model,
                    fit: Some(fit),
                    error: None,
                },
                Err(e) => ModelRecord {
                    model,
                    fit: None,
                    error: Some(fail(e)?),
                },
            });
        }
        let fitted: Vec<RegressionFit> = records.iter().filter_map(|r| r.fit.clone()).collect();
        let selected_model = select_by_aic(&fitted).map(|f| f.model);
        let n_cities = members.len();
        drop(members);

        if let Some(fit) = &scaling {
            let outliers: std::collections::HashSet<&str> =
                fit.outlier_ids.iter().map(String::as_str).collect();
            for (&i, &z) in idx.iter().zip(&fit.std_residuals) {
                rows[i].scaling_residual = Some(z);
                rows[i].outlier = outliers.contains(rows[i].city_id.as_str());
            }
        }

        reports.push(RegionReport {
            region,
            n_cities,
            scaling,
            scaling_error,
            summaries,
            warnings,
            models: records,
            selected_model,
        });
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CityError {
    pub city_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOutcome {
    pub rows: Vec<CorpusRow>,
    pub failures: Vec<CityError>,
    pub reports: Vec<RegionReport>,
    pub written: Vec<PathBuf>,
}

/// Runs the whole analysis and writes `corpus.csv`, `report_<REGION>.json`,
/// `cities/<city_id>.json`, `errors.csv` (when cities were skipped) and, if
/// enabled, the SVG plots.
pub fn run_analyze(config: &PipelineConfig) -> Result<AnalyzeOutcome> {
    let table_file = std::fs::File::open(&config.city_table_path)
        .map_err(|e| Error::from(e).in_file(&config.city_table_path))?;
    let cities = load_city_table(table_file).map_err(|e| e.in_file(&config.city_table_path))?;
    let base = config
        .city_table_path
        .parent()
        .unwrap_or(Path::new("."))
        .to_path_buf();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(String, Result<CityAnalysis>)> = pool.install(|| {
        cities
            .par_iter()
            .map(|c| (c.city_id.clone(), analyze_city(c, &base, config.coord_mode)))
            .collect()
    });

    let mut by_id: BTreeMap<String, CityAnalysis> = BTreeMap::new();
    let mut failures = Vec::new();
    for (id, res) in results {
        match res {
            Ok(a) => {
                by_id.insert(id, a);
            }
            Err(e) if config.skip_errors => failures.push(CityError {
                city_id: id,
                error: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    failures.sort_by(|a, b| a.city_id.cmp(&b.city_id));

    let mut rows: Vec<CorpusRow> = by_id.values().map(|a| a.row.clone()).collect();
    let reports = fit_regions(
        &mut rows,
        &config.regions_to_fit,
        &config.model_variants,
        !config.skip_errors,
    )?;

    let out = &config.output_dir;
    std::fs::create_dir_all(out.join("cities"))?;
    let mut written = Vec::new();

    let corpus_path = out.join("corpus.csv");
    write_corpus_csv(std::fs::File::create(&corpus_path)?, &rows)?;
    written.push(corpus_path);

    for report in &reports {
        let path = out.join(format!("report_{}.json", report.region));
        std::fs::write(&path, serde_json::to_string_pretty(report)? + "\n")?;
        written.push(path);
    }
    for (id, a) in &by_id {
        let path = out.join("cities").join(format!("{id}.json"));
        std::fs::write(&path, serde_json::to_string_pretty(a)? + "\n")?;
    }
    if !failures.is_empty() {
        let path = out.join("errors.csv");
        let mut w = csv::Writer::from_path(&path)?;
        for f in &failures {
            w.serialize(f)?;
        }
        w.flush()?;
        written.push(path);
    }
    if config.emit_svg && rows.len() >= 3 {
        written.extend(write_report(&rows, out)?);
    }

    Ok(AnalyzeOutcome {
        rows,
        failures,
        reports,
        written,
    })
}
