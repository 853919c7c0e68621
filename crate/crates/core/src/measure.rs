//! Points, datasets, ground metrics and empirical measures.
//!
//! Every other module speaks in terms of [`Point`] and [`EmpiricalMeasure`].
//! A point carries its continuous coordinates plus two optional fields: a
//! class label (for `(x, y)` classification pairs) and a latent vector (for
//! `(y, theta)` pairs in partition mode). One type serves all three.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{argument, shape, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent: Option<Vec<f64>>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Self {
            coords,
            label: None,
            latent: None,
        }
    }

    pub fn labeled(coords: Vec<f64>, label: u32) -> Self {
        Self {
            coords,
            label: Some(label),
            latent: None,
        }
    }

    pub fn with_latent(coords: Vec<f64>, latent: Vec<f64>) -> Self {
        Self {
            coords,
            label: None,
            latent: Some(latent),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
            && self
                .latent
                .as_ref()
                .map_or(true, |l| l.iter().all(|c| c.is_finite()))
    }

    /// The point with `coords` multiplied by `w`. Label and latent are carried
    /// through untouched.
    pub fn scaled(&self, w: f64) -> Point {
        Point {
            coords: self.coords.iter().map(|c| c * w).collect(),
            label: self.label,
            latent: self.latent.clone(),
        }
    }

    /// The point with `offset` added to `coords`.
    pub fn shifted(&self, offset: &[f64]) -> Point {
        Point {
            coords: self.coords.iter().zip(offset).map(|(c, o)| c + o).collect(),
            label: self.label,
            latent: self.latent.clone(),
        }
    }

    fn same_shape(&self, other: &Point) -> bool {
        self.coords.len() == other.coords.len()
            && self.label.is_some() == other.label.is_some()
            && self.latent.as_ref().map(Vec::len) == other.latent.as_ref().map(Vec::len)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub id: String,
    pub points: Vec<Point>,
}

impl Dataset {
    /// Validates non-emptiness, homogeneous shape and finiteness.
    pub fn new(id: impl Into<String>, points: Vec<Point>) -> Result<Self> {
        let Some(first) = points.first() else {
            return argument("dataset must be non-empty");
        };
        if first.dim() == 0 {
            return shape("points need at least one coordinate");
        }
        for (i, p) in points.iter().enumerate() {
            if !p.same_shape(first) {
                return shape(format!("point {i} does not match the shape of point 0"));
            }
            if !p.is_finite() {
                return Err(Error::NonFinite(format!("point {i} has a non-finite coordinate")));
            }
        }
        Ok(Self {
            id: id.into(),
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn mean(&self) -> Vec<f64> {
        let d = self.dim();
        let mut mean = vec![0.0; d];
        for p in &self.points {
            for (m, c) in mean.iter_mut().zip(&p.coords) {
                *m += c;
            }
        }
        let n = self.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            id: format!("{}[subset]", self.id),
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
        }
    }

    /// Writes the dataset as CSV: `x0..x{d-1}`, then `label` and
    /// `theta0..theta{k-1}` when present.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let first = &self.points[0];
        let mut header: Vec<String> = (0..first.dim()).map(|j| format!("x{j}")).collect();
        if first.label.is_some() {
            header.push("label".into());
        }
        if let Some(lat) = &first.latent {
            header.extend((0..lat.len()).map(|j| format!("theta{j}")));
        }
        w.write_record(&header)?;
        for p in &self.points {
            let mut row: Vec<String> = p.coords.iter().map(|c| format_float(*c)).collect();
            if let Some(l) = p.label {
                row.push(l.to_string());
            }
            if let Some(lat) = &p.latent {
                row.extend(lat.iter().map(|c| format_float(*c)));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(id: impl Into<String>, reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let mut coord_cols = Vec::new();
        let mut label_col = None;
        let mut theta_cols = Vec::new();
        for (i, h) in headers.iter().enumerate() {
            if h == "label" {
                label_col = Some(i);
            } else if let Some(k) = h.strip_prefix("theta") {
                theta_cols.push((parse_index(k, h)?, i));
            } else if let Some(k) = h.strip_prefix('x') {
                coord_cols.push((parse_index(k, h)?, i));
            } else {
                return shape(format!("unexpected column `{h}`"));
            }
        }
        coord_cols.sort_unstable();
        theta_cols.sort_unstable();
        let mut points = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Shape(format!("bad number `{}`: {e}", &rec[i])))
            };
            let coords = coord_cols.iter().map(|&(_, i)| field(i)).collect::<Result<Vec<_>>>()?;
            let label = match label_col {
                Some(i) => Some(
                    rec[i]
                        .trim()
                        .parse::<u32>()
                        .map_err(|e| Error::Shape(format!("bad label `{}`: {e}", &rec[i])))?,
                ),
                None => None,
            };
            let latent = if theta_cols.is_empty() {
                None
            } else {
                Some(theta_cols.iter().map(|&(_, i)| field(i)).collect::<Result<Vec<_>>>()?)
            };
            points.push(Point {
                coords,
                label,
                latent,
            });
        }
        Dataset::new(id, points)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Dataset::read_csv(id, std::fs::File::open(path)?)
    }
}

fn parse_index(suffix: &str, header: &str) -> Result<usize> {
    suffix
        .parse()
        .map_err(|_| Error::Shape(format!("unexpected column `{header}`")))
}

/// Shortest representation that round-trips exactly.
pub(crate) fn format_float(x: f64) -> String {
    format!("{x:?}")
}

/// Distance on the data space.
///
/// `p` is the Minkowski order used on the continuous parts. The product
/// metric adds a class-mismatch indicator, the latent-pair metric adds the
/// latent distance scaled by `lambda`; both combine their parts in the same
/// `p`-norm, so `p = 2` gives `sqrt(|x1-x2|^2 + 1[y1 != y2])` and
/// `sqrt(|y1-y2|^2 + lambda |theta1-theta2|^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroundMetric {
    Euclidean { p: f64 },
    ProductClass { p: f64 },
    LatentPair { p: f64, lambda: f64 },
}

impl Default for GroundMetric {
    fn default() -> Self {
        GroundMetric::Euclidean { p: 2.0 }
    }
}

impl GroundMetric {
    pub fn euclidean() -> Self {
        GroundMetric::Euclidean { p: 2.0 }
    }

    pub fn product_class() -> Self {
        GroundMetric::ProductClass { p: 2.0 }
    }

    pub fn latent_pair(lambda: f64) -> Self {
        GroundMetric::LatentPair { p: 2.0, lambda }
    }

    /// Minkowski order of the continuous parts.
    pub fn order(&self) -> f64 {
        match *self {
            GroundMetric::Euclidean { p }
            | GroundMetric::ProductClass { p }
            | GroundMetric::LatentPair { p, .. } => p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.order();
        if !(p >= 1.0 && p.is_finite()) {
            return argument(format!("metric order must be a finite value >= 1, got {p}"));
        }
        if let GroundMetric::LatentPair { lambda, .. } = *self {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return argument(format!("latent scale must be finite and >= 0, got {lambda}"));
            }
        }
        Ok(())
    }

    /// Checks that `a` and `b` can be compared under this metric.
    pub fn check_pair(&self, a: &Point, b: &Point) -> Result<()> {
        if a.dim() != b.dim() {
            return shape(format!("dimension mismatch: {} vs {}", a.dim(), b.dim()));
        }
        match self {
            GroundMetric::Euclidean { .. } => Ok(()),
            GroundMetric::ProductClass { .. } => {
                if a.label.is_none() || b.label.is_none() {
                    shape("product metric needs labelled points")
                } else {
                    Ok(())
                }
            }
            GroundMetric::LatentPair { .. } => match (&a.latent, &b.latent) {
                (Some(x), Some(y)) if x.len() == y.len() => Ok(()),
                (Some(_), Some(_)) => shape("latent dimension mismatch"),
                _ => shape("latent-pair metric needs points with latents"),
            },
        }
    }

    pub fn dist(&self, a: &Point, b: &Point) -> Result<f64> {
        self.check_pair(a, b)?;
        Ok(self.dist_pow_unchecked(a, b, 1.0))
    }

    /// `dist(a, b)^order` without shape checks. Callers validate shapes once
    /// per problem rather than per entry.
    pub(crate) fn dist_pow_unchecked(&self, a: &Point, b: &Point, order: f64) -> f64 {
        let q = self.order();
        let mut raw = minkowski_pow(&a.coords, &b.coords, q);
        match self {
            GroundMetric::Euclidean { .. } => {}
            GroundMetric::ProductClass { .. } => {
                if a.label != b.label {
                    raw += 1.0;
                }
            }
            GroundMetric::LatentPair { lambda, .. } => {
                if let (Some(x), Some(y)) = (&a.latent, &b.latent) {
                    raw += lambda * minkowski_pow(x, y, q);
                }
            }
        }
        if order == q {
            raw
        } else {
            raw.powf(order / q)
        }
    }
}

/// `sum_k |a_k - b_k|^q`.
fn minkowski_pow(a: &[f64], b: &[f64], q: f64) -> f64 {
    if q == 2.0 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    } else if q == 1.0 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    } else {
        a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(q)).sum()
    }
}

/// Weighted point cloud. Masses are nonnegative and sum to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    atoms: Vec<Point>,
    masses: Vec<f64>,
}

pub const MASS_TOLERANCE: f64 = 1e-9;

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<Point>, masses: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return argument("measure needs at least one atom");
        }
        if atoms.len() != masses.len() {
            return shape(format!(
                "{} atoms but {} masses",
                atoms.len(),
                masses.len()
            ));
        }
        if masses.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return argument("masses must be finite and nonnegative");
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return argument(format!("masses sum to {total}, expected 1"));
        }
        Ok(Self { atoms, masses })
    }

    /// Masses proportional to `weights`.
    pub fn weighted(atoms: Vec<Point>, weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return argument("weights must have a positive finite sum");
        }
        Self::new(atoms, weights.iter().map(|w| w / total).collect())
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.len() as f64;
        self.masses.iter().all(|m| (m - u).abs() <= 1e-12)
    }

    pub fn into_parts(self) -> (Vec<Point>, Vec<f64>) {
        (self.atoms, self.masses)
    }
}

/// Uniform empirical measure on `points`, one atom per input in order.
/// Duplicates keep separate atoms.
pub fn empirical_from(points: Vec<Point>) -> Result<EmpiricalMeasure> {
    if points.is_empty() {
        return argument("empirical measure of an empty list");
    }
    let n = points.len();
    let masses = vec![1.0 / n as f64; n];
    Ok(EmpiricalMeasure {
        atoms: points,
        masses,
    })
}

/// Subtracts the coordinate mean. Labels and latents are left alone.
pub fn center_dataset(data: &Dataset) -> (Dataset, Vec<f64>) {
    let mean = data.mean();
    let neg: Vec<f64> = mean.iter().map(|m| -m).collect();
    let points = data.points.iter().map(|p| p.shifted(&neg)).collect();
    (
        Dataset {
            id: data.id.clone(),
            points,
        },
        mean,
    )
}

pub fn uncenter_dataset(data: &Dataset, mean: &[f64]) -> Dataset {
    Dataset {
        id: data.id.clone(),
        points: data.points.iter().map(|p| p.shifted(mean)).collect(),
    }
}
