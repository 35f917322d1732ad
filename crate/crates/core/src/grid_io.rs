//! City rasters and metadata tables.
//!
//! Rasters are ESRI ASCII grids, one pre-clipped grid per city. Values are
//! kept row-major with the top row first, exactly as the file lays them out;
//! every conversion to planar coordinates goes through [`Projection`].

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used by the local equirectangular projection, metres.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Grids whose mid-latitude reaches this bound are refused.
pub const MAX_ABS_LATITUDE: f64 = 85.0;

const DEFAULT_NODATA: f64 = -9999.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordMode {
    PlanarMeters,
    GeographicDegrees,
}

impl FromStr for CoordMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "planar" | "planar_meters" | "meters" => Ok(CoordMode::PlanarMeters),
            "geographic" | "geographic_degrees" | "degrees" => Ok(CoordMode::GeographicDegrees),
            other => Err(Error::invalid(format!("unknown coordinate mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub ncols: usize,
    pub nrows: usize,
    /// Lower-left corner, header units.
    pub xll: f64,
    pub yll: f64,
    pub cellsize: f64,
    pub nodata: f64,
    pub coord_mode: CoordMode,
}

impl GridHeader {
    pub fn new(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        coord_mode: CoordMode,
    ) -> Result<Self> {
        let header = GridHeader {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata: DEFAULT_NODATA,
            coord_mode,
        };
        header.validate()?;
        Ok(header)
    }

    fn validate(&self) -> Result<()> {
        if self.ncols == 0 || self.nrows == 0 {
            return Err(Error::invalid("grid must have at least one row and one column"));
        }
        if !(self.cellsize > 0.0 && self.cellsize.is_finite()) {
            return Err(Error::invalid("cellsize must be positive"));
        }
        if !self.xll.is_finite() || !self.yll.is_finite() {
            return Err(Error::invalid("grid origin must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ncols * self.nrows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A city raster of non-negative luminosity with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct LuminosityGrid {
    header: GridHeader,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl LuminosityGrid {
    /// Builds a grid from row-major values (top row first). Cells equal to
    /// `header.nodata` are masked; any other negative or non-finite value is
    /// rejected.
    pub fn new(header: GridHeader, values: Vec<f64>) -> Result<Self> {
        header.validate()?;
        if values.len() != header.len() {
            return Err(Error::invalid(format!(
                "expected {} cells, got {}",
                header.len(),
                values.len()
            )));
        }
        let mut valid = Vec::with_capacity(values.len());
        for (i, &v) in values.iter().enumerate() {
            if v == header.nodata {
                valid.push(false);
            } else if v.is_finite() && v >= 0.0 {
                valid.push(true);
            } else {
                return Err(Error::invalid(format!(
                    "cell (row {}, col {}) has invalid luminosity {v}",
                    i / header.ncols,
                    i % header.ncols
                )));
            }
        }
        Ok(LuminosityGrid {
            header,
            values,
            valid,
        })
    }

    pub fn header(&self) -> &GridHeader {
        &self.header
    }

    /// Raw row-major values, nodata sentinels included.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = row * self.header.ncols + col;
        (row < self.header.nrows && col < self.header.ncols && self.valid[i]).then(|| self.values[i])
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Valid values in row-major order.
    pub fn valid_values(&self) -> Vec<f64> {
        self.iter_valid().map(|(_, _, v)| v).collect()
    }

    /// `(row, col, value)` over valid cells, row-major.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let ncols = self.header.ncols;
        self.values
            .iter()
            .zip(&self.valid)
            .enumerate()
            .filter(|(_, (_, &ok))| ok)
            .map(move |(i, (&v, _))| (i / ncols, i % ncols, v))
    }

    pub(crate) fn ensure_valid_cells(&self) -> Result<()> {
        if self.valid.iter().any(|&v| v) {
            Ok(())
        } else {
            Err(Error::NoValidCells)
        }
    }

    /// ESRI ASCII grid text. Values use the shortest representation that
    /// parses back to the same `f64`, so a parse/serialize cycle is lossless.
    pub fn to_ascii_grid(&self) -> String {
        let h = &self.header;
        let mut out = String::with_capacity(h.len() * 4 + 128);
        let _ = writeln!(out, "ncols {}", h.ncols);
        let _ = writeln!(out, "nrows {}", h.nrows);
        let _ = writeln!(out, "xllcorner {}", h.xll);
        let _ = writeln!(out, "yllcorner {}", h.yll);
        let _ = writeln!(out, "cellsize {}", h.cellsize);
        let _ = writeln!(out, "NODATA_value {}", h.nodata);
        for row in self.values.chunks(h.ncols) {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }
}

enum HeaderKey {
    Ncols,
    Nrows,
    XllCorner,
    XllCenter,
    YllCorner,
    YllCenter,
    Cellsize,
    Nodata,
}

fn header_key(token: &str) -> Option<HeaderKey> {
    Some(match token.to_ascii_lowercase().as_str() {
        "ncols" => HeaderKey::Ncols,
        "nrows" => HeaderKey::Nrows,
        "xllcorner" => HeaderKey::XllCorner,
        "xllcenter" => HeaderKey::XllCenter,
        "yllcorner" => HeaderKey::YllCorner,
        "yllcenter" => HeaderKey::YllCenter,
        "cellsize" => HeaderKey::Cellsize,
        "nodata_value" => HeaderKey::Nodata,
        _ => return None,
    })
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Parses an ESRI ASCII grid.
///
/// Header keys are case-insensitive and may appear in any order; `*center`
/// origins are shifted to corners. Data rows may wrap across lines as long as
/// the total cell count matches the header.
pub fn parse_ascii_grid(text: &str, coord_mode: CoordMode) -> Result<LuminosityGrid> {
    let mut ncols = None;
    let mut nrows = None;
    let mut xll: Option<(f64, bool)> = None;
    let mut yll: Option<(f64, bool)> = None;
    let mut cellsize = None;
    let mut nodata = None;

    let mut lines = text.lines().enumerate().peekable();
    while let Some(&(idx, line)) = lines.peek() {
        let lineno = idx + 1;
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else {
            lines.next();
            continue;
        };
        let Some(key) = header_key(first) else {
            if first.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && first.parse::<f64>().is_err()
            {
                return Err(parse_error(lineno, 1, format!("unknown header key {first:?}")));
            }
            break;
        };
        lines.next();
        let value = tokens
            .next()
            .ok_or_else(|| parse_error(lineno, 2, format!("header key {first:?} has no value")))?;
        if tokens.next().is_some() {
            return Err(parse_error(lineno, 3, "unexpected token after header value"));
        }
        let real = || -> Result<f64> {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(lineno, 2, format!("invalid number {value:?}")))
        };
        let count = || -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|_| parse_error(lineno, 2, format!("invalid count {value:?}")))
        };
        match key {
            HeaderKey::Ncols => ncols = Some((count()?, lineno)),
            HeaderKey::Nrows => nrows = Some((count()?, lineno)),
            HeaderKey::XllCorner => xll = Some((real()?, false)),
            HeaderKey::XllCenter => xll = Some((real()?, true)),
            HeaderKey::YllCorner => yll = Some((real()?, false)),
            HeaderKey::YllCenter => yll = Some((real()?, true)),
            HeaderKey::Cellsize => {
                let c = real()?;
                if c <= 0.0 {
                    return Err(parse_error(lineno, 2, "cellsize must be positive"));
                }
                cellsize = Some(c);
            }
            HeaderKey::Nodata => nodata = Some(real()?),
        }
    }

    let header_end = lines.peek().map_or(text.lines().count() + 1, |&(i, _)| i + 1);
    let missing = |name: &str| parse_error(header_end, 1, format!("missing header key {name}"));
    let (ncols, ncols_line) = ncols.ok_or_else(|| missing("ncols"))?;
    let (nrows, nrows_line) = nrows.ok_or_else(|| missing("nrows"))?;
    if ncols == 0 {
        return Err(parse_error(ncols_line, 2, "ncols must be positive"));
    }
    if nrows == 0 {
        return Err(parse_error(nrows_line, 2, "nrows must be positive"));
    }
    let cellsize = cellsize.ok_or_else(|| missing("cellsize"))?;
    let (xll, x_center) = xll.ok_or_else(|| missing("xllcorner"))?;
    let (yll, y_center) = yll.ok_or_else(|| missing("yllcorner"))?;
    let header = GridHeader {
        ncols,
        nrows,
        xll: if x_center { xll - cellsize / 2.0 } else { xll },
        yll: if y_center { yll - cellsize / 2.0 } else { yll },
        cellsize,
        nodata: nodata.unwrap_or(DEFAULT_NODATA),
        coord_mode,
    };

    let expected = ncols
        .checked_mul(nrows)
        .ok_or_else(|| parse_error(ncols_line, 2, "grid dimensions overflow"))?;
    let mut values = Vec::with_capacity(expected);
    let mut valid = Vec::with_capacity(expected);
    let mut last_line = header_end;
    for (idx, line) in lines {
        let lineno = idx + 1;
        for (col, token) in line.split_whitespace().enumerate() {
            if values.len() == expected {
                return Err(parse_error(
                    lineno,
                    col + 1,
                    format!("more than the declared {expected} cells"),
                ));
            }
            let v: f64 = token
                .parse()
                .ok()
                .filter(|v: &f64| !v.is_nan())
                .ok_or_else(|| parse_error(lineno, col + 1, format!("invalid number {token:?}")))?;
            if v == header.nodata {
                valid.push(false);
            } else if v < 0.0 || !v.is_finite() {
                return Err(parse_error(
                    lineno,
                    col + 1,
                    format!("negative or infinite luminosity {token}"),
                ));
            } else {
                valid.push(true);
            }
            values.push(v);
        }
        last_line = lineno;
    }
    if values.len() != expected {
        return Err(parse_error(
            last_line,
            1,
            format!("declared {expected} cells but found {}", values.len()),
        ));
    }
    Ok(LuminosityGrid {
        header,
        values,
        valid,
    })
}

/// Reads and parses a grid file.
pub fn read_ascii_grid(path: &std::path::Path, coord_mode: CoordMode) -> Result<LuminosityGrid> {
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::from(e).in_file(path))?;
    parse_ascii_grid(&text, coord_mode).map_err(|e| e.in_file(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    US,
    EU,
    CN,
    #[serde(rename = "other")]
    Other,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::US => "US",
            Region::EU => "EU",
            Region::CN => "CN",
            Region::Other => "other",
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "US" => Ok(Region::US),
            "EU" => Ok(Region::EU),
            "CN" => Ok(Region::CN),
            "other" => Ok(Region::Other),
            _ => Err(Error::invalid(format!(
                "unknown region {s:?} (expected US, EU, CN or other)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityRecord {
    pub city_id: String,
    pub name: String,
    pub region: Region,
    /// Persons.
    pub population: f64,
    pub gdp: f64,
    pub raster_path: String,
    /// Land area for GDP density. When absent the raster footprint is used.
    pub area_km2: Option<f64>,
}

pub const CITY_TABLE_COLUMNS: [&str; 6] =
    ["city_id", "name", "region", "population", "gdp", "raster_path"];

/// Loads the city table. The header must be exactly [`CITY_TABLE_COLUMNS`],
/// optionally followed by a single `area_km2` column.
pub fn load_city_table<R: Read>(reader: R) -> Result<Vec<CityRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(rec) => rec?,
        None => {
            return Err(Error::Table {
                row: 1,
                message: "missing header row".into(),
            })
        }
    };
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let with_area = match names.as_slice() {
        n if n == CITY_TABLE_COLUMNS => false,
        [base @ .., "area_km2"] if base == CITY_TABLE_COLUMNS => true,
        _ => {
            return Err(Error::Table {
                row: 1,
                message: format!(
                    "header must be exactly {} (optionally followed by area_km2)",
                    CITY_TABLE_COLUMNS.join(",")
                ),
            })
        }
    };
    let width = names.len();

    let mut seen = HashSet::new();
    let mut cities = Vec::new();
    for rec in records {
        let rec = rec?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let err = |message: String| Error::Table { row, message };
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != width {
            return Err(err(format!("expected {width} columns, found {}", rec.len())));
        }
        let field = |i: usize| rec[i].trim();
        let positive = |i: usize, name: &str| -> Result<f64> {
            let v: f64 = field(i)
                .parse()
                .map_err(|_| err(format!("{name} is not a number: {:?}", field(i))))?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(err(format!("{name} must be positive")))
            }
        };
        let city_id = field(0).to_owned();
        if city_id.is_empty() {
            return Err(err("empty city_id".into()));
        }
        let region = field(2).parse::<Region>().map_err(|e| err(e.to_string()))?;
        let population = positive(3, "population")?;
        let gdp = positive(4, "gdp")?;
        let area_km2 = if with_area && !field(6).is_empty() {
            Some(positive(6, "area_km2")?)
        } else {
            None
        };
        if !seen.insert(city_id.clone()) {
            return Err(err(format!("duplicate city_id {city_id:?}")));
        }
        cities.push(CityRecord {
            city_id,
            name: field(1).to_owned(),
            region,
            population,
            gdp,
            raster_path: field(5).to_owned(),
            area_km2,
        });
    }
    Ok(cities)
}

/// Writes a city table in the format [`load_city_table`] reads.
pub fn write_city_table<W: std::io::Write>(writer: W, cities: &[CityRecord]) -> Result<()> {
    let with_area = cities.iter().any(|c| c.area_km2.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = CITY_TABLE_COLUMNS.to_vec();
    if with_area {
        header.push("area_km2");
    }
    w.write_record(&header)?;
    for c in cities {
        let mut rec = vec![
            c.city_id.clone(),
            c.name.clone(),
            c.region.to_string(),
            c.population.to_string(),
            c.gdp.to_string(),
            c.raster_path.clone(),
        ];
        if with_area {
            rec.push(c.area_km2.map(|a| a.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// A valid cell centre in a planar metric frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellPoint {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub row: usize,
    pub col: usize,
}

/// Maps grid indices to planar metres.
///
/// Geographic grids use a local equirectangular projection about the grid
/// centre; adequate for city-sized extents, refused near the poles.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    header: GridHeader,
    lon0: f64,
    lat0: f64,
    x_scale: f64,
    y_scale: f64,
    cell_area_m2: f64,
}

impl Projection {
    pub fn new(header: &GridHeader) -> Result<Self> {
        let h = *header;
        match h.coord_mode {
            CoordMode::PlanarMeters => Ok(Projection {
                header: h,
                lon0: 0.0,
                lat0: 0.0,
                x_scale: 1.0,
                y_scale: 1.0,
                cell_area_m2: h.cellsize * h.cellsize,
            }),
            CoordMode::GeographicDegrees => {
                let lat0 = h.yll + h.nrows as f64 * h.cellsize / 2.0;
                let lon0 = h.xll + h.ncols as f64 * h.cellsize / 2.0;
                if lat0.abs() >= MAX_ABS_LATITUDE {
                    return Err(Error::NearPole(lat0));
                }
                let rad = std::f64::consts::PI / 180.0;
                let cos0 = (lat0 * rad).cos();
                Ok(Projection {
                    header: h,
                    lon0,
                    lat0,
                    x_scale: EARTH_RADIUS_M * cos0 * rad,
                    y_scale: EARTH_RADIUS_M * rad,
                    cell_area_m2: h.cellsize * h.cellsize * rad * rad
                        * EARTH_RADIUS_M
                        * EARTH_RADIUS_M
                        * cos0,
                })
            }
        }
    }

    /// Effective area of one cell, m².
    pub fn cell_area_m2(&self) -> f64 {
        self.cell_area_m2
    }

    pub fn point(&self, row: usize, col: usize, value: f64) -> CellPoint {
        let h = &self.header;
        let u = h.xll + (col as f64 + 0.5) * h.cellsize;
        let v = h.yll + (h.nrows as f64 - row as f64 - 0.5) * h.cellsize;
        let (x, y) = match h.coord_mode {
            CoordMode::PlanarMeters => (u, v),
            CoordMode::GeographicDegrees => {
                ((u - self.lon0) * self.x_scale, (v - self.lat0) * self.y_scale)
            }
        };
        CellPoint {
            x,
            y,
            value,
            row,
            col,
        }
    }
}

/// Planar centres of all valid cells, with the effective cell area.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPoints {
    pub points: Vec<CellPoint>,
    pub cell_area_m2: f64,
}

pub fn cell_points(grid: &LuminosityGrid) -> Result<CellPoints> {
    grid.ensure_valid_cells()?;
    let proj = Projection::new(grid.header())?;
    Ok(CellPoints {
        points: grid
            .iter_valid()
            .map(|(r, c, v)| proj.point(r, c, v))
            .collect(),
        cell_area_m2: proj.cell_area_m2(),
    })
}
