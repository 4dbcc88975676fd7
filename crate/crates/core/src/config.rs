//! JSON system description, schema version `"v1"`.
//!
//! ```json
//! {
//!   "version": "v1",
//!   "name": "cantor",
//!   "dim": 1,
//!   "box": { "lo": [0.0], "hi": [1.0] },
//!   "maps": [
//!     { "id": "1", "type": "affine", "matrix": [0.3333333333333333], "offset": [0.0] },
//!     { "id": "2", "type": "affine", "matrix": [0.3333333333333333], "offset": [0.6666666666666666] }
//!   ],
//!   "coefficients": "synthesize",
//!   "defaults": { "tol": 1e-6, "eps_decimate": 1e-6, "max_iter": 200, "seed": 42 }
//! }
//! ```
//!
//! `coefficients` is either `"synthesize"` (affine maps only) or a sparse
//! list of `{ "i": id, "j": id, "a": .., "b": .., "c": .. }`; missing pairs
//! are zero. Map types are `affine` (row-major `matrix`, `offset`),
//! `poly1d` (ascending `coefficients`) and `composite` (`of`: ids, applied
//! right to left). Entries with `"helper": true` may be referenced by
//! composites but are not members of the system.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointSet, MAX_DIM};
use crate::maps::{DomainBox, MapDescriptor};
use crate::system::{
    synthesize_affine_coeffs, AttractorOptions, CoefficientTable, Coefficients, IFSSystem,
};

pub const SCHEMA_VERSION: &str = "v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    #[serde(rename = "box")]
    pub domain: BoxConfig,
    pub maps: Vec<MapConfig>,
    pub coefficients: CoefficientsConfig,
    #[serde(default)]
    pub defaults: Defaults,
    /// Starting cloud `B_0`; the box center when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapConfig {
    pub id: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub helper: bool,
    #[serde(flatten)]
    pub kind: MapKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MapKind {
    Affine { matrix: Vec<f64>, offset: Vec<f64> },
    Poly1d { coefficients: Vec<f64> },
    Composite { of: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientsConfig {
    Synthesize(SynthesizeTag),
    Table(Vec<CoefficientEntry>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthesizeTag {
    Synthesize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientEntry {
    pub i: String,
    pub j: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Defaults {
    pub tol: f64,
    pub eps_decimate: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults {
            tol: 1e-6,
            eps_decimate: 1e-6,
            max_iter: 200,
            seed: 42,
        }
    }
}

impl Defaults {
    pub fn attractor_options(&self) -> AttractorOptions {
        AttractorOptions {
            tol: self.tol,
            eps_decimate: self.eps_decimate,
            max_iter: self.max_iter,
        }
    }
}

fn at(location: impl std::fmt::Display, e: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{location}: {e}"))
}

impl SystemConfig {
    /// Parses JSON text; syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SystemConfig = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let msg = msg
                .split(" at line ")
                .next()
                .unwrap_or_default()
                .to_string();
            at(format_args!("line {} column {}", e.line(), e.column()), msg)
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Structural checks that do not need to build any map.
    fn check(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(at(
                "version",
                format_args!(
                    "unsupported schema {:?}, expected {SCHEMA_VERSION:?}",
                    self.version
                ),
            ));
        }
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(at(
                "dim",
                format_args!("must be in 1..={MAX_DIM}, got {}", self.dim),
            ));
        }
        let mut seen = HashSet::new();
        for (k, m) in self.maps.iter().enumerate() {
            if !seen.insert(m.id.as_str()) {
                return Err(at(
                    format_args!("maps[{k}].id"),
                    format_args!("duplicate id {:?}", m.id),
                ));
            }
        }
        for (k, m) in self.maps.iter().enumerate() {
            if let MapKind::Composite { of } = &m.kind {
                if of.is_empty() {
                    return Err(at(
                        format_args!("maps[{k}].of"),
                        "composite needs at least one part",
                    ));
                }
                for (p, id) in of.iter().enumerate() {
                    if !seen.contains(id.as_str()) {
                        return Err(at(
                            format_args!("maps[{k}].of[{p}]"),
                            format_args!("unknown id {id:?}"),
                        ));
                    }
                }
            }
        }
        if self.members().next().is_none() {
            return Err(at("maps", "at least one non-helper map is required"));
        }
        if let CoefficientsConfig::Table(entries) = &self.coefficients {
            let members: HashSet<&str> = self.members().map(|m| m.id.as_str()).collect();
            for (k, e) in entries.iter().enumerate() {
                for (field, id) in [("i", &e.i), ("j", &e.j)] {
                    if !members.contains(id.as_str()) {
                        return Err(at(
                            format_args!("coefficients[{k}].{field}"),
                            format_args!("unknown member map {id:?}"),
                        ));
                    }
                }
            }
        }
        let d = &self.defaults;
        if !(d.tol > 0.0) || !(d.eps_decimate >= 0.0) {
            return Err(at(
                "defaults",
                "tol must be positive and eps_decimate non-negative",
            ));
        }
        Ok(())
    }

    fn members(&self) -> impl Iterator<Item = &MapConfig> {
        self.maps.iter().filter(|m| !m.helper)
    }

    pub fn member_ids(&self) -> Vec<String> {
        self.members().map(|m| m.id.clone()).collect()
    }

    pub fn domain(&self) -> Result<DomainBox> {
        if self.domain.lo.len() != self.dim || self.domain.hi.len() != self.dim {
            return Err(at(
                "box",
                format_args!("lo and hi must have {} entries", self.dim),
            ));
        }
        DomainBox::new(self.domain.lo.clone(), self.domain.hi.clone()).map_err(|e| at("box", e))
    }

    fn build_map(
        &self,
        index: usize,
        by_id: &HashMap<&str, usize>,
        cache: &mut HashMap<usize, MapDescriptor>,
        visiting: &mut Vec<usize>,
    ) -> Result<MapDescriptor> {
        if let Some(f) = cache.get(&index) {
            return Ok(f.clone());
        }
        let location = format!("maps[{index}]");
        if visiting.contains(&index) {
            return Err(at(location, "composite references itself"));
        }
        visiting.push(index);
        let f = match &self.maps[index].kind {
            MapKind::Affine { matrix, offset } => {
                MapDescriptor::affine(matrix.clone(), offset.clone())
            }
            MapKind::Poly1d { coefficients } => MapDescriptor::poly1d(coefficients.clone()),
            MapKind::Composite { of } => {
                let parts = of
                    .iter()
                    .map(|id| self.build_map(by_id[id.as_str()], by_id, cache, visiting))
                    .collect::<Result<Vec<_>>>()?;
                MapDescriptor::composite(parts)
            }
        }
        .map_err(|e| match e {
            Error::Parse(_) => e,
            other => at(&location, other),
        })?;
        visiting.pop();
        if f.dim() != self.dim {
            return Err(at(
                location,
                format_args!("map has dimension {}, system has {}", f.dim(), self.dim),
            ));
        }
        cache.insert(index, f.clone());
        Ok(f)
    }

    /// Member maps in declaration order.
    pub fn build_maps(&self) -> Result<Vec<MapDescriptor>> {
        let by_id: HashMap<&str, usize> = self
            .maps
            .iter()
            .enumerate()
            .map(|(k, m)| (m.id.as_str(), k))
            .collect();
        let mut cache = HashMap::new();
        (0..self.maps.len())
            .filter(|&k| !self.maps[k].helper)
            .map(|k| self.build_map(k, &by_id, &mut cache, &mut Vec::new()))
            .collect()
    }

    pub fn build_table(
        &self,
        maps: &[MapDescriptor],
        domain: &DomainBox,
    ) -> Result<CoefficientTable> {
        match &self.coefficients {
            CoefficientsConfig::Synthesize(_) => {
                synthesize_affine_coeffs(maps, domain).map_err(|e| at("coefficients", e))
            }
            CoefficientsConfig::Table(entries) => {
                let ids = self.member_ids();
                let index = |id: &str| ids.iter().position(|m| m == id).expect("checked");
                let mut table = CoefficientTable::zeros(maps.len());
                for (k, e) in entries.iter().enumerate() {
                    table
                        .set(index(&e.i), index(&e.j), Coefficients::new(e.a, e.b, e.c))
                        .map_err(|err| at(format_args!("coefficients[{k}]"), err))?;
                }
                Ok(table)
            }
        }
    }

    /// Builds the system. Condition alpha is not enforced here.
    pub fn build(&self) -> Result<IFSSystem> {
        let domain = self.domain()?;
        let maps = self.build_maps()?;
        let table = self.build_table(&maps, &domain)?;
        IFSSystem::new(maps, table, domain).map_err(|e| match e {
            Error::MapLeavesBox { index, point } => at(
                format_args!("maps (id {:?})", self.member_ids()[index]),
                Error::MapLeavesBox { index, point },
            ),
            other => at("system", other),
        })
    }

    /// `start` as a point set, or the box center.
    pub fn start_cloud(&self) -> Result<PointSet> {
        match &self.start {
            Some(points) => {
                let coords: Vec<f64> = points.iter().flatten().copied().collect();
                if points.is_empty() || points.iter().any(|p| p.len() != self.dim) {
                    return Err(at(
                        "start",
                        format_args!("need one or more points of dimension {}", self.dim),
                    ));
                }
                PointSet::new(self.dim, coords).map_err(|e| at("start", e))
            }
            None => Ok(PointSet::from_raw(self.dim, self.domain()?.center())),
        }
    }
}
