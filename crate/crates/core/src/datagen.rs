//! Synthetic point-cloud streams: noisy samples from circles, ellipses,
//! spheres and ellipsoids with a shape or noise change at a fixed frame.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{Grid, PointCloud};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Geometry {
    /// Unit circle.
    Circle,
    /// Axes default to (2, 1).
    Ellipse {
        #[serde(default)]
        axes: Option<[f64; 2]>,
    },
    /// Unit sphere `S^{dim-1}` in `R^dim`.
    Sphere { dim: usize },
    /// Axes default to (2, 1, ..., 1).
    Ellipsoid {
        dim: usize,
        #[serde(default)]
        axes: Option<Vec<f64>>,
    },
}

impl Geometry {
    pub fn axes(&self) -> Vec<f64> {
        match self {
            Geometry::Circle => vec![1.0, 1.0],
            Geometry::Ellipse { axes } => axes.unwrap_or([2.0, 1.0]).to_vec(),
            Geometry::Sphere { dim } => vec![1.0; *dim],
            Geometry::Ellipsoid { dim, axes } => axes.clone().unwrap_or_else(|| {
                let mut a = vec![1.0; *dim];
                if let Some(first) = a.first_mut() {
                    *first = 2.0;
                }
                a
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes().len()
    }

    pub fn validate(&self) -> Result<()> {
        let axes = self.axes();
        if axes.len() < 2 {
            return Err(Error::invalid(format!("geometry needs dimension at least 2, got {}", axes.len())));
        }
        if let Geometry::Ellipsoid { dim, axes: Some(a) } = self {
            if a.len() != *dim {
                return Err(Error::DimensionMismatch { expected: *dim, found: a.len() });
            }
        }
        if axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::invalid("axis lengths must be positive"));
        }
        Ok(())
    }
}

/// `n` points: a normalized Gaussian direction scaled by the axes, plus
/// `N(0, sigma^2)` noise per coordinate. Uniform on the surface only when all
/// axes are equal.
pub fn sample_shape<R: Rng + ?Sized>(geometry: &Geometry, n: usize, sigma: f64, rng: &mut R) -> Result<PointCloud> {
    geometry.validate()?;
    if n == 0 {
        return Err(Error::invalid("need at least one point"));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("noise level must be finite and nonnegative, got {sigma}")));
    }
    let axes = geometry.axes();
    let d = axes.len();
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut coords = Vec::with_capacity(n * d);
    let mut g = vec![0.0; d];
    for _ in 0..n {
        let norm = loop {
            g.iter_mut().for_each(|x| *x = StandardNormal.sample(rng));
            let s = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if s > 1e-12 {
                break s;
            }
        };
        for i in 0..d {
            let e: f64 = if sigma > 0.0 { noise.sample(rng) } else { 0.0 };
            coords.push(axes[i] * g[i] / norm + e);
        }
    }
    PointCloud::new(d, coords)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    ShapeChange,
    NoiseChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub geometry: Geometry,
    /// Post-change geometry for a shape change.
    #[serde(default)]
    pub post_geometry: Option<Geometry>,
    /// Noise standard deviations.
    pub sigma_pre: f64,
    pub sigma_post: f64,
    #[serde(default = "default_frames")]
    pub frames: usize,
    /// Number of pre-change frames.
    #[serde(default = "default_change")]
    pub change: usize,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_frames() -> usize {
    400
}

fn default_change() -> usize {
    200
}

fn default_points() -> usize {
    100
}

impl Scenario {
    pub fn noise_change(geometry: Geometry, sigma_pre: f64, sigma_post: f64, seed: u64) -> Self {
        Self {
            kind: ScenarioKind::NoiseChange,
            geometry,
            post_geometry: None,
            sigma_pre,
            sigma_post,
            frames: default_frames(),
            change: default_change(),
            points: default_points(),
            seed,
        }
    }

    pub fn shape_change(pre: Geometry, post: Geometry, sigma: f64, seed: u64) -> Self {
        Self {
            kind: ScenarioKind::ShapeChange,
            geometry: pre,
            post_geometry: Some(post),
            sigma_pre: sigma,
            sigma_post: sigma,
            frames: default_frames(),
            change: default_change(),
            points: default_points(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        match (self.kind, &self.post_geometry) {
            (ScenarioKind::ShapeChange, None) => return Err(Error::invalid("shape change needs a post-change geometry")),
            (ScenarioKind::ShapeChange, Some(post)) => {
                post.validate()?;
                if post.dim() != self.geometry.dim() {
                    return Err(Error::DimensionMismatch { expected: self.geometry.dim(), found: post.dim() });
                }
            }
            (ScenarioKind::NoiseChange, Some(post)) if post != &self.geometry => {
                return Err(Error::invalid("noise change keeps the geometry fixed"));
            }
            _ => {}
        }
        for s in [self.sigma_pre, self.sigma_post] {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::invalid(format!("noise level must be finite and nonnegative, got {s}")));
            }
        }
        if self.change < 1 || self.change > self.frames {
            return Err(Error::invalid(format!("change frame {} outside 1..={}", self.change, self.frames)));
        }
        if self.points == 0 {
            return Err(Error::invalid("need at least one point per frame"));
        }
        Ok(())
    }

    /// Geometry and noise level of frame `t` (0-based).
    pub fn regime(&self, t: usize) -> (&Geometry, f64) {
        if t < self.change {
            (&self.geometry, self.sigma_pre)
        } else {
            (self.post_geometry.as_ref().unwrap_or(&self.geometry), self.sigma_post)
        }
    }
}

/// Frames `0 .. change` are pre-change, the rest post-change. Frame `t` uses
/// its own seed derived from `(seed, t)`.
pub fn generate_scenario(scenario: &Scenario) -> Result<Vec<PointCloud>> {
    scenario.validate()?;
    (0..scenario.frames)
        .into_par_iter()
        .map(|t| {
            let (g, s) = scenario.regime(t);
            let mut rng = seed::rng(scenario.seed, "frame", t as u64);
            sample_shape(g, scenario.points, s, &mut rng)
        })
        .collect()
}

/// Grayscale image: `bumps` Gaussian blobs with random centers, widths and
/// heights on a dark background, plus `N(0, noise^2)` per pixel.
pub fn synthetic_image<R: Rng + ?Sized>(rows: usize, cols: usize, bumps: usize, noise: f64, rng: &mut R) -> Result<Grid> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("image must have at least one pixel"));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::invalid(format!("noise level must be finite and nonnegative, got {noise}")));
    }
    let blobs: Vec<(f64, f64, f64, f64)> = (0..bumps)
        .map(|_| {
            let r = rng.random_range(0.0..rows as f64);
            let c = rng.random_range(0.0..cols as f64);
            let w = rng.random_range(0.03..0.15) * rows.max(cols) as f64;
            let h = rng.random_range(0.3..1.0);
            (r, c, w, h)
        })
        .collect();
    let mut values = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let mut v: f64 = blobs
                .iter()
                .map(|&(r, c, w, h)| h * (-((i as f64 - r).powi(2) + (j as f64 - c).powi(2)) / (2.0 * w * w)).exp())
                .sum();
            if noise > 0.0 {
                v += noise * rng.sample::<f64, _>(StandardNormal);
            }
            values.push(v);
        }
    }
    Grid::new(rows, cols, values)
}
