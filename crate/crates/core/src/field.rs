//! Finitely supported real functions on the vertices of a graph.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, GraphGenerator, Region, VertexId};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("non-finite value {value} at {vertex}")]
    NonFinite { vertex: String, value: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("field file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Sparse vertex function; reads off the support return 0.
///
/// Entries are kept in canonical vertex order so every reduction over the
/// support is reproducible bit for bit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Field {
    values: BTreeMap<VertexId, f64>,
}

impl Field {
    pub fn new() -> Self {
        Self::default()
    }

    /// `value * chi_{x}`.
    pub fn delta(x: VertexId, value: f64) -> Result<Self, FieldError> {
        let mut f = Field::new();
        f.set(x, value)?;
        Ok(f)
    }

    /// Indicator of a set, scaled by `value`.
    pub fn indicator<'a>(
        vertices: impl IntoIterator<Item = &'a VertexId>,
        value: f64,
    ) -> Result<Self, FieldError> {
        let mut f = Field::new();
        for v in vertices {
            f.set(v.clone(), value)?;
        }
        Ok(f)
    }

    /// Field with `values[i]` at `region.vertex(i)`; exact zeros are dropped.
    pub fn from_dense(region: &Region, values: &[f64]) -> Result<Self, FieldError> {
        let mut f = Field::new();
        for (x, &v) in region.vertices().iter().zip(values) {
            f.set(x.clone(), v)?;
        }
        Ok(f)
    }

    /// Values on `region`, in region order.
    pub fn to_dense(&self, region: &Region) -> Vec<f64> {
        region.vertices().iter().map(|x| self.get(x)).collect()
    }

    pub fn get(&self, x: &VertexId) -> f64 {
        self.values.get(x).copied().unwrap_or(0.0)
    }

    /// Set a value. Zero removes the vertex from the support.
    pub fn set(&mut self, x: VertexId, value: f64) -> Result<(), FieldError> {
        if !value.is_finite() {
            return Err(FieldError::NonFinite {
                vertex: format!("{x:?}"),
                value,
            });
        }
        if value == 0.0 {
            self.values.remove(&x);
        } else {
            self.values.insert(x, value);
        }
        Ok(())
    }

    pub fn support(&self) -> impl Iterator<Item = &VertexId> {
        self.values.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexId, f64)> {
        self.values.iter().map(|(k, &v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self, FieldError> {
        let mut f = Field::new();
        for (x, v) in self.iter() {
            f.set(x.clone(), lambda * v)?;
        }
        Ok(f)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `||f||_{l^q}^q = sum |f(x)|^q d_w(x)`, returned as the norm itself.
    pub fn lq_norm(&self, g: &GraphGenerator, q: f64) -> Result<f64, FieldError> {
        let mut s = 0.0;
        for (x, v) in self.iter() {
            s += v.abs().powf(q) * g.degree(x)?;
        }
        Ok(s.powf(1.0 / q))
    }

    /// `sum f(x) d_w(x)`; equals the l^1 norm for nonnegative fields.
    pub fn mass(&self, g: &GraphGenerator) -> Result<f64, FieldError> {
        let mut s = 0.0;
        for (x, v) in self.iter() {
            s += v * g.degree(x)?;
        }
        Ok(s)
    }

    /// Largest distance from `x0` to the support (capped search radius).
    pub fn support_radius(&self, g: &GraphGenerator, x0: &VertexId, r_max: u32) -> Result<Option<u32>, FieldError> {
        let mut r = 0;
        for x in self.support() {
            match crate::graph::distance(g, x0, x, r_max)?.exact() {
                Some(d) => r = r.max(d),
                None => return Ok(None),
            }
        }
        Ok(Some(r))
    }

    /// CSV text `vertex_id,value`, values with 17 significant digits.
    pub fn to_csv(&self, g: &GraphGenerator) -> String {
        let mut s = String::from("vertex_id,value\n");
        for (x, v) in self.iter() {
            s.push_str(&format!("{},{:.16e}\n", g.label(x), v));
        }
        s
    }

    pub fn from_csv(g: &GraphGenerator, text: &str) -> Result<Self, FieldError> {
        let mut f = Field::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("vertex_id")) {
                continue;
            }
            let (id, val) = line.rsplit_once(',').ok_or(FieldError::Parse {
                line: i + 1,
                msg: "expected `vertex_id,value`".into(),
            })?;
            let v: f64 = val.trim().parse().map_err(|_| FieldError::Parse {
                line: i + 1,
                msg: format!("bad value `{val}`"),
            })?;
            f.set(g.parse_label(id.trim())?, v)?;
        }
        Ok(f)
    }

    pub fn to_json(&self, g: &GraphGenerator) -> String {
        let entries: Vec<FieldEntry> = self
            .iter()
            .map(|(x, value)| FieldEntry {
                vertex: g.label(x),
                value,
            })
            .collect();
        serde_json::to_string_pretty(&FieldJson { values: entries }).expect("field json")
    }

    pub fn from_json(g: &GraphGenerator, text: &str) -> Result<Self, FieldError> {
        let parsed: FieldJson = serde_json::from_str(text)?;
        let mut f = Field::new();
        for e in parsed.values {
            f.set(g.parse_label(&e.vertex)?, e.value)?;
        }
        Ok(f)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldJson {
    values: Vec<FieldEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldEntry {
    vertex: String,
    value: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn off_support_reads_zero() {
        let f = Field::delta(VertexId::from(0), 1.0).unwrap();
        assert_eq!(f.get(&VertexId::from(1)), 0.0);
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn non_finite_rejected() {
        let mut f = Field::new();
        assert!(f.set(VertexId::from(0), f64::NAN).is_err());
        assert!(f.set(VertexId::from(0), f64::INFINITY).is_err());
    }

    #[test]
    fn delta_mass_on_z1() {
        let g = GraphGenerator::lattice(1).unwrap();
        let f = Field::delta(VertexId::from(0), 1.0).unwrap();
        assert_eq!(f.mass(&g).unwrap(), 2.0);
        assert_eq!(f.lq_norm(&g, 1.0).unwrap(), 2.0);
        assert_eq!(f.lq_norm(&g, 2.0).unwrap(), 2f64.sqrt());
    }

    #[test]
    fn bad_csv_rejected() {
        let g = GraphGenerator::lattice(1).unwrap();
        assert!(Field::from_csv(&g, "vertex_id,value\n0;1\n").is_err());
        assert!(Field::from_csv(&g, "vertex_id,value\n0,abc\n").is_err());
        assert!(Field::from_csv(&g, "vertex_id,value\n0:1,1.0\n").is_err());
    }

    proptest! {
        #[test]
        fn csv_and_json_round_trip_bit_exact(
            entries in proptest::collection::vec((-50i64..50, -50i64..50, -1e6f64..1e6), 0..40)
        ) {
            let g = GraphGenerator::lattice(2).unwrap();
            let mut f = Field::new();
            for (a, b, v) in entries {
                f.set(VertexId::from((a, b)), v).unwrap();
            }
            let back = Field::from_csv(&g, &f.to_csv(&g)).unwrap();
            prop_assert_eq!(&back, &f);
            let back = Field::from_json(&g, &f.to_json(&g)).unwrap();
            prop_assert_eq!(&back, &f);
        }
    }
}
