//! Two-dimensional embeddings of document vectors.

mod pca;
mod tsne;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::fmt_f64;

pub use pca::{pca, pca_projection, PcaProjection};
pub use tsne::{
    joint_probabilities, kl_divergence, kl_gradient, perplexity_calibration, tsne, tsne_with_cancel, TsneConfig,
    TsneResult,
};

/// Document vectors, one row per document.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub ids: Vec<String>,
    pub data: DMatrix<f64>,
}

impl PointCloud {
    pub fn new(ids: Vec<String>, data: DMatrix<f64>) -> Result<Self> {
        if ids.len() != data.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "{} ids for {} points",
                ids.len(),
                data.nrows()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("point cloud has non-finite entries".into()));
        }
        Ok(Self { ids, data })
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }
}

/// Which reducer produced an embedding and with what settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingProvenance {
    pub reducer: String,
    pub geometry: String,
    pub seed: Option<u64>,
    pub config: String,
}

/// 2-D coordinates per document.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding2D {
    pub ids: Vec<String>,
    pub coords: Vec<[f64; 2]>,
    pub provenance: EmbeddingProvenance,
}

impl Embedding2D {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// CSV `id,x,y[,label]` preceded by `#` comment lines recording provenance.
    pub fn to_csv(&self, labels: Option<&[String]>) -> String {
        let p = &self.provenance;
        let mut out = String::new();
        writeln!(out, "# reducer: {}", p.reducer).unwrap();
        writeln!(out, "# geometry: {}", p.geometry).unwrap();
        match p.seed {
            Some(s) => writeln!(out, "# seed: {s}").unwrap(),
            None => writeln!(out, "# seed: none").unwrap(),
        }
        writeln!(out, "# config: {}", p.config).unwrap();
        out.push_str(if labels.is_some() { "id,x,y,label\n" } else { "id,x,y\n" });
        for (i, (id, c)) in self.ids.iter().zip(&self.coords).enumerate() {
            write!(out, "{},{},{}", csv_field(id), fmt_f64(c[0]), fmt_f64(c[1])).unwrap();
            if let Some(l) = labels {
                write!(out, ",{}", csv_field(&l[i])).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`Embedding2D::to_csv`] output; returns labels when present.
    pub fn from_csv(text: &str, source: &str) -> Result<(Embedding2D, Option<Vec<String>>)> {
        let mut provenance = EmbeddingProvenance {
            reducer: String::new(),
            geometry: String::new(),
            seed: None,
            config: String::new(),
        };
        let mut ids = Vec::new();
        let mut coords = Vec::new();
        let mut labels: Option<Vec<String>> = None;
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.trim().split_once(": ") {
                    match key {
                        "reducer" => provenance.reducer = value.to_string(),
                        "geometry" => provenance.geometry = value.to_string(),
                        "seed" => provenance.seed = value.parse().ok(),
                        "config" => provenance.config = value.to_string(),
                        _ => {}
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                header_seen = true;
                match line.trim() {
                    "id,x,y" => {}
                    "id,x,y,label" => labels = Some(Vec::new()),
                    other => return Err(Error::parse(source, i + 1, format!("unexpected header {other:?}"))),
                }
                continue;
            }
            let fields = split_csv(line);
            let expected = if labels.is_some() { 4 } else { 3 };
            if fields.len() != expected {
                return Err(Error::parse(source, i + 1, format!("expected {expected} fields")));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(source, i + 1, format!("bad coordinate {s:?}")))
            };
            ids.push(fields[0].clone());
            coords.push([num(&fields[1])?, num(&fields[2])?]);
            if let Some(l) = labels.as_mut() {
                l.push(fields[3].clone());
            }
        }
        Ok((
            Embedding2D {
                ids,
                coords,
                provenance,
            },
            labels,
        ))
    }

    pub fn save_csv(&self, path: &Path, labels: Option<&[String]>) -> Result<()> {
        fs::write(path, self.to_csv(labels)).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: &Path) -> Result<(Embedding2D, Option<Vec<String>>)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, &path.display().to_string())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn split_csv(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

/// Reducer selection with its settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reducer", rename_all = "lowercase")]
pub enum Reducer {
    Pca,
    Tsne(TsneConfig),
}

impl Reducer {
    pub fn name(&self) -> &'static str {
        match self {
            Reducer::Pca => "pca",
            Reducer::Tsne(_) => "tsne",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Reducer::Pca => None,
            Reducer::Tsne(c) => Some(c.seed),
        }
    }

    /// Embeds `points`; `geometry` is recorded in the provenance.
    pub fn embed(&self, points: &PointCloud, geometry: &str) -> Result<Embedding2D> {
        self.embed_with_cancel(points, geometry, &|| false)
    }

    pub fn embed_with_cancel(
        &self,
        points: &PointCloud,
        geometry: &str,
        cancelled: &(dyn Fn() -> bool + Sync),
    ) -> Result<Embedding2D> {
        let (coords, config) = match self {
            Reducer::Pca => (pca(points)?, String::from("{}")),
            Reducer::Tsne(cfg) => (
                tsne_with_cancel(points, cfg, cancelled)?.coords,
                serde_json::to_string(cfg)?,
            ),
        };
        Ok(Embedding2D {
            ids: points.ids.clone(),
            coords,
            provenance: EmbeddingProvenance {
                reducer: self.name().to_string(),
                geometry: geometry.to_string(),
                seed: self.seed(),
                config,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_quoting() {
        let e = Embedding2D {
            ids: vec!["a,1".into(), "b".into()],
            coords: vec![[0.1, -2.0], [1e-300, 3.5]],
            provenance: EmbeddingProvenance {
                reducer: "pca".into(),
                geometry: "manual".into(),
                seed: Some(9),
                config: "{}".into(),
            },
        };
        let labels = vec!["x".to_string(), "y \"q\"".to_string()];
        let text = e.to_csv(Some(&labels));
        assert!(text.starts_with("# reducer: pca\n# geometry: manual\n# seed: 9\n# config: {}\nid,x,y,label\n"));
        let (back, l) = Embedding2D::from_csv(&text, "t").unwrap();
        assert_eq!(back, e);
        assert_eq!(l.unwrap(), labels);
        let (_, l) = Embedding2D::from_csv(&e.to_csv(None), "t").unwrap();
        assert!(l.is_none());
    }

    #[test]
    fn point_cloud_validation() {
        assert!(PointCloud::new(vec!["a".into()], DMatrix::zeros(2, 3)).is_err());
        assert!(PointCloud::new(vec!["a".into()], DMatrix::from_element(1, 1, f64::NAN)).is_err());
    }
}
