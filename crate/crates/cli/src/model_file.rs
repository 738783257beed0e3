use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use mtrd_core::{Cover, Error, GaussianSource, SymMatrix};
use serde::Deserialize;

/// On-disk model: covariance as a row-major lower triangle, covers as
/// named lists of 1-based index sets.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: String,
    #[serde(rename = "L")]
    l: usize,
    covariance: Vec<f64>,
    #[serde(default)]
    covers: BTreeMap<String, Vec<Vec<usize>>>,
}

#[derive(Debug)]
pub struct Model {
    pub name: String,
    pub source: GaussianSource,
    pub covers: BTreeMap<String, Cover>,
}

/// Why a model file was rejected, with the offending location.
#[derive(Debug)]
pub enum LoadError {
    Io(String, std::io::Error),
    Parse(serde_json::Error),
    Field(String, Error),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io(path, e) => write!(f, "{path}: {e}"),
            LoadError::Parse(e) => write!(f, "line {} column {}: {e}", e.line(), e.column()),
            LoadError::Field(field, e) => write!(f, "{field}: {e}"),
        }
    }
}

impl Model {
    pub fn cover(&self, name: &str) -> Result<&Cover, LoadError> {
        self.covers.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.covers.keys().map(String::as_str).collect();
            LoadError::Field(
                format!("covers.{name}"),
                Error::NotACover(format!("no such cover (known: {})", known.join(", "))),
            )
        })
    }

    pub fn l(&self) -> usize {
        self.source.len()
    }
}

pub fn load(path: &Path) -> Result<Model, LoadError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LoadError::Io(path.display().to_string(), e))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Model, LoadError> {
    let raw: RawModel = serde_json::from_str(text).map_err(LoadError::Parse)?;
    let field = |name: &str| {
        let name = name.to_string();
        move |e| LoadError::Field(name, e)
    };
    if raw.l == 0 {
        return Err(LoadError::Field("L".into(), Error::UnsupportedOrder(0)));
    }
    let gamma = SymMatrix::from_lower(raw.l, &raw.covariance).map_err(field("covariance"))?;
    let source = GaussianSource::new(gamma).map_err(field("covariance"))?;
    let mut covers = BTreeMap::new();
    for (name, sets) in &raw.covers {
        let cover = Cover::from_one_based(raw.l, sets).map_err(field(&format!("covers.{name}")))?;
        covers.insert(name.clone(), cover);
    }
    Ok(Model {
        name: raw.name,
        source,
        covers,
    })
}
