use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::algebra::{AElem, AlgebraSpec};
use crate::exprdsl::{parse, Expr, ParseError, Symbols};
use crate::exterior::parse_index_key;
use crate::fields::{AFormField, AVectorField};
use crate::geometry::{CoefficientConnection, GeometryError, MetricField};
use crate::integrate::BoxDomain;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("parse error in `{location}`")]
    Parse {
        location: String,
        #[source]
        source: ParseError,
    },
    #[error("metric invalid at {point:?}{}: {reason}", fiber.map(|f| format!(" (fiber {f})")).unwrap_or_default())]
    MetricInvalid { point: Vec<f64>, fiber: Option<usize>, reason: String },
}

impl SceneError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        SceneError::Schema { path: path.into(), message: message.into() }
    }

    /// Byte offset inside the offending expression, for parse errors.
    pub fn offset(&self) -> Option<usize> {
        match self {
            SceneError::Parse { source, .. } => source.offset(),
            _ => None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    schema: u32,
    algebra: AlgebraSpec,
    #[serde(default)]
    constants: BTreeMap<String, AElem>,
    dimension: usize,
    coordinates: Vec<String>,
    metric: Vec<Vec<String>>,
    domain: RawDomain,
    #[serde(default)]
    vector_fields: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    forms: BTreeMap<String, RawForm>,
    #[serde(default)]
    functions: BTreeMap<String, String>,
    #[serde(default)]
    connection: Option<RawConnection>,
    #[serde(default)]
    orientation: Orientation,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    #[serde(rename = "box")]
    bounds: BoxDomain,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForm {
    k: usize,
    components: BTreeMap<String, String>,
}

/// Christoffel coefficients `Γ^k_ij` at `christoffel[k][i][j]`, replacing the
/// Levi-Civita connection in the torsion and compatibility checks.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConnection {
    christoffel: Vec<Vec<Vec<String>>>,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Orientation {
    #[default]
    Coordinate,
}

/// A validated scene.
#[derive(Debug)]
pub struct Scene {
    pub algebra: AlgebraSpec,
    pub constants: BTreeMap<String, AElem>,
    pub coordinates: Vec<String>,
    pub symbols: Symbols,
    pub metric: MetricField,
    pub vector_fields: BTreeMap<String, AVectorField>,
    pub forms: BTreeMap<String, AFormField>,
    pub functions: BTreeMap<String, Expr>,
    pub connection: Option<CoefficientConnection>,
    /// SHA-256 of the scene file bytes, hex encoded.
    pub digest: String,
}

impl Scene {
    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn fibers(&self) -> usize {
        self.algebra.fibers
    }

    pub fn domain(&self) -> &BoxDomain {
        self.metric.domain()
    }

    pub fn parse_expr(&self, src: &str) -> Result<Expr, ParseError> {
        parse(src, &self.symbols)
    }
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene, SceneError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| SceneError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_scene(&bytes)
}

pub fn parse_scene(bytes: &[u8]) -> Result<Scene, SceneError> {
    let digest = hex::encode(Sha256::digest(bytes));
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let raw: RawScene = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        SceneError::schema(path, e.into_inner().to_string())
    })?;
    build(raw, digest)
}

fn parse_at(src: &str, symbols: &Symbols, location: String) -> Result<Expr, SceneError> {
    parse(src, symbols).map_err(|source| SceneError::Parse { location, source })
}

fn metric_error(e: GeometryError) -> SceneError {
    let (point, fiber, reason) = match &e {
        GeometryError::PointDegenerate { point, fiber }
        | GeometryError::NotSymmetric { point, fiber, .. }
        | GeometryError::NotSelfAdjoint { point, fiber, .. }
        | GeometryError::SignatureInconsistent { point, fiber } => (point.clone(), Some(*fiber), e.to_string()),
        GeometryError::OutOfDomain { point } => (point.clone(), None, e.to_string()),
        _ => (Vec::new(), None, e.to_string()),
    };
    SceneError::MetricInvalid { point, fiber, reason }
}

fn build(raw: RawScene, digest: String) -> Result<Scene, SceneError> {
    if raw.schema != SCHEMA_VERSION {
        return Err(SceneError::schema("schema", format!("unsupported schema {}, expected {SCHEMA_VERSION}", raw.schema)));
    }
    raw.algebra.validate().map_err(|e| SceneError::schema("algebra", e.to_string()))?;
    let fibers = raw.algebra.fibers;
    for (name, value) in &raw.constants {
        if value.fibers() != fibers {
            return Err(SceneError::schema(
                format!("constants.{name}"),
                format!("has {} fibers, the algebra has {fibers}", value.fibers()),
            ));
        }
    }
    let n = raw.dimension;
    if n == 0 {
        return Err(SceneError::schema("dimension", "must be at least 1"));
    }
    if raw.coordinates.len() != n {
        return Err(SceneError::schema("coordinates", format!("{} names for dimension {n}", raw.coordinates.len())));
    }
    if raw.domain.bounds.dim() != n {
        return Err(SceneError::schema("domain.box", format!("{} intervals for dimension {n}", raw.domain.bounds.dim())));
    }
    let const_names: Vec<String> = raw.constants.keys().cloned().collect();
    let symbols = Symbols::new(&raw.coordinates, &const_names)
        .map_err(|e| SceneError::schema("coordinates", e.to_string()))?;

    if raw.metric.len() != n || raw.metric.iter().any(|r| r.len() != n) {
        return Err(SceneError::schema("metric", format!("must be {n}×{n}")));
    }
    let mut entries = Vec::with_capacity(n);
    for (i, row) in raw.metric.iter().enumerate() {
        let parsed = row
            .iter()
            .enumerate()
            .map(|(j, src)| parse_at(src, &symbols, format!("metric[{i}][{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        entries.push(parsed);
    }

    let mut vector_fields = BTreeMap::new();
    for (name, comps) in &raw.vector_fields {
        if comps.len() != n {
            return Err(SceneError::schema(format!("vector_fields.{name}"), format!("needs {n} components")));
        }
        let parsed = comps
            .iter()
            .enumerate()
            .map(|(i, src)| parse_at(src, &symbols, format!("vector_fields.{name}[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        vector_fields.insert(name.clone(), AVectorField::new(parsed));
    }

    let mut forms = BTreeMap::new();
    for (name, form) in &raw.forms {
        let path = format!("forms.{name}");
        if form.k > n {
            return Err(SceneError::schema(format!("{path}.k"), format!("degree {} exceeds dimension {n}", form.k)));
        }
        let mut comps = Vec::new();
        for (key, src) in &form.components {
            let loc = format!("{path}.components.{key}");
            let idx = parse_index_key(key).map_err(|m| SceneError::schema(&loc, m))?;
            if idx.len() != form.k || idx.iter().any(|&i| i >= n) {
                return Err(SceneError::schema(&loc, format!("key must list {} indices below {n}", form.k)));
            }
            comps.push((idx, parse_at(src, &symbols, loc)?));
        }
        let w = AFormField::new(n, form.k, comps).map_err(|e| SceneError::schema(&path, e.to_string()))?;
        forms.insert(name.clone(), w);
    }

    let mut functions = BTreeMap::new();
    for (name, src) in &raw.functions {
        functions.insert(name.clone(), parse_at(src, &symbols, format!("functions.{name}"))?);
    }

    let connection = match &raw.connection {
        None => None,
        Some(c) => {
            let shape_ok = c.christoffel.len() == n && c.christoffel.iter().all(|p| p.len() == n && p.iter().all(|r| r.len() == n));
            if !shape_ok {
                return Err(SceneError::schema("connection.christoffel", format!("must be {n}×{n}×{n}")));
            }
            let mut gamma = Vec::with_capacity(n);
            for (k, plane) in c.christoffel.iter().enumerate() {
                let mut rows = Vec::with_capacity(n);
                for (i, row) in plane.iter().enumerate() {
                    rows.push(
                        row.iter()
                            .enumerate()
                            .map(|(j, src)| parse_at(src, &symbols, format!("connection.christoffel[{k}][{i}][{j}]")))
                            .collect::<Result<Vec<_>, _>>()?,
                    );
                }
                gamma.push(rows);
            }
            Some(CoefficientConnection::new(gamma, raw.constants.clone(), fibers).map_err(metric_error)?)
        }
    };
    // the only orientation is the coordinate order, which is what every integral uses
    match raw.orientation {
        Orientation::Coordinate => {}
    }

    let metric = MetricField::new(entries, raw.constants.clone(), fibers, raw.domain.bounds.clone()).map_err(metric_error)?;
    metric.validate(&metric.domain().grid3()).map_err(metric_error)?;

    Ok(Scene {
        algebra: raw.algebra,
        constants: raw.constants,
        coordinates: raw.coordinates,
        symbols,
        metric,
        vector_fields,
        forms,
        functions,
        connection,
        digest,
    })
}
