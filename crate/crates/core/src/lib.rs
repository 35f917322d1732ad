//! Urban hotspot analysis on night-time luminosity rasters: hotspot
//! extraction, compactness indices, scaling and growth regressions, and a
//! synthetic corpus generator.

pub mod compactness;
pub mod error;
pub mod geometry;
pub mod grid_io;
pub mod hotspot;
pub mod numeric;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod synth;

pub use compactness::{hotspot_compactness, CompactnessIndices, CompactnessReport, DegenerateFlag};
pub use error::{Error, Result};
pub use grid_io::{
    cell_points, load_city_table, parse_ascii_grid, read_ascii_grid, CityRecord, CoordMode,
    GridHeader, LuminosityGrid, Region,
};
pub use hotspot::{extract_hotspots, extract_hotspots_from_grid, HotspotSet, HotspotSummary};
pub use pipeline::{run_analyze, CorpusRow, PipelineConfig};
