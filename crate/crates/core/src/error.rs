use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed ASCII grid; `line` and `column` are 1-based.
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Malformed city table; `row` is the 1-based file line.
    #[error("city table row {row}: {message}")]
    Table { row: usize, message: String },

    #[error("no valid cells")]
    NoValidCells,

    #[error("degenerate city: no luminosity")]
    DegenerateCity,

    #[error("projection unreliable near poles (mid-latitude {0}°)")]
    NearPole(f64),

    #[error("diameter undefined for a single hotspot")]
    SingleHotspot,

    #[error("collinear covariates")]
    Collinear,

    #[error("perfect fit: {0}")]
    PerfectFit(&'static str),

    #[error("{0}")]
    InvalidInput(String),

    #[error("invalid synthetic spec: {0}")]
    Spec(String),

    #[error("city {city_id}: {source}")]
    City {
        city_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("region {region}: {source}")]
    Region {
        region: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn in_city(self, city_id: &str) -> Self {
        Error::City {
            city_id: city_id.to_owned(),
            source: Box::new(self),
        }
    }

    pub fn in_region(self, region: &str) -> Self {
        Error::Region {
            region: region.to_owned(),
            source: Box::new(self),
        }
    }

    pub fn in_file(self, path: &std::path::Path) -> Self {
        Error::File {
            path: path.display().to_string(),
            source: Box::new(self),
        }
    }

    /// True for failures caused by the input data rather than by the tool.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Io(e) => matches!(
                e.kind(),
                std::io::ErrorKind::NotFound | std::io::ErrorKind::InvalidData
            ),
            Error::City { source, .. } | Error::Region { source, .. } | Error::File { source, .. } => {
                source.is_data_error()
            }
            _ => true,
        }
    }
}
