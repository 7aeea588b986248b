use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_in_convex_polygon, Point2};
use crate::losses::sigmoid;
use crate::{Point, Polygon};

use super::SyntheticScene;

/// Falloff length of an object's prototype outside its box, scene units.
const FALLOFF: f64 = 4.0;
const READOUT_GAIN: f64 = 4.0;
const READOUT_BIAS: f64 = -2.0;

/// Procedural stand-in for backbone features: a grid of `dim`-dimensional
/// vectors at nodes `(col * stride, row * stride)`.
///
/// Class `c` has prototype `e_c`; the last axis is the background prototype.
/// Inside a box the feature is its class prototype, outside it decays with
/// distance and the remainder goes to background. Gaussian noise of
/// amplitude `noise` is added per entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureField {
    pub stride: f64,
    pub rows: usize,
    pub cols: usize,
    pub dim: usize,
    data: Vec<f64>,
}

fn distance_to_polygon(p: Point, poly: &Polygon) -> f64 {
    if point_in_convex_polygon(p, poly) {
        return 0.0;
    }
    let v = poly.vertices();
    (0..v.len())
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            let ab = b - a;
            let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
            p.dist(a + ab * t)
        })
        .fold(f64::INFINITY, f64::min)
}

impl FeatureField {
    pub fn generate(
        scene: &SyntheticScene,
        stride: f64,
        dim: usize,
        noise: f64,
        seed: u64,
    ) -> Result<Self> {
        let n_classes = scene.objects.iter().map(|o| o.class + 1).max().unwrap_or(0);
        if dim < n_classes + 1 {
            return Err(Error::InvalidArgument(format!(
                "feature dimension {dim} too small for {n_classes} classes plus background"
            )));
        }
        if !(stride > 0.0) || !(noise >= 0.0) {
            return Err(Error::InvalidArgument(
                "field stride must be > 0 and noise >= 0".into(),
            ));
        }
        let cols = (scene.width / stride).ceil() as usize + 1;
        let rows = (scene.height / stride).ceil() as usize + 1;
        let polys: Vec<_> = scene.objects.iter().map(|o| o.gt.to_polygon()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f1e1d);
        let mut data = vec![0.0; rows * cols * dim];
        for r in 0..rows {
            for c in 0..cols {
                let p = Point2::new(c as f64 * stride, r as f64 * stride);
                let cell = &mut data[(r * cols + c) * dim..][..dim];
                let mut covered = 0.0;
                for (o, poly) in scene.objects.iter().zip(&polys) {
                    let w = (-distance_to_polygon(p, poly) / FALLOFF).exp();
                    cell[o.class] += w;
                    covered += w;
                }
                cell[dim - 1] += (1.0 - covered).max(0.0);
                for v in cell.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v += noise * z;
                }
            }
        }
        Ok(Self {
            stride,
            rows,
            cols,
            dim,
            data,
        })
    }

    pub fn node(&self, row: usize, col: usize) -> &[f64] {
        &self.data[(row * self.cols + col) * self.dim..][..self.dim]
    }

    /// Bilinear sample, clamped to the grid.
    pub fn sample(&self, p: Point) -> Vec<f64> {
        let gx = (p.x / self.stride).clamp(0.0, (self.cols - 1) as f64);
        let gy = (p.y / self.stride).clamp(0.0, (self.rows - 1) as f64);
        let (c0, r0) = (gx.floor() as usize, gy.floor() as usize);
        let (c1, r1) = ((c0 + 1).min(self.cols - 1), (r0 + 1).min(self.rows - 1));
        let (tx, ty) = (gx - c0 as f64, gy - r0 as f64);
        let (a, b, c, d) = (
            self.node(r0, c0),
            self.node(r0, c1),
            self.node(r1, c0),
            self.node(r1, c1),
        );
        (0..self.dim)
            .map(|k| {
                let top = a[k] + (b[k] - a[k]) * tx;
                let bottom = c[k] + (d[k] - c[k]) * tx;
                top + (bottom - top) * ty
            })
            .collect()
    }

    /// Frozen linear classification readout: per-class sigmoid of an affine
    /// function of the class-prototype coordinate.
    pub fn class_probabilities(&self, p: Point, n_classes: usize) -> Vec<f64> {
        let f = self.sample(p);
        (0..n_classes)
            .map(|c| sigmoid(READOUT_GAIN * f[c] + READOUT_BIAS))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::{gen_scene, SceneConfig};

    fn field(noise: f64) -> (SyntheticScene, FeatureField) {
        let scene = gen_scene(3, &SceneConfig::default()).unwrap();
        let f = FeatureField::generate(&scene, 4.0, 8, noise, 3).unwrap();
        (scene, f)
    }

    #[test]
    fn grid_nodes_are_exact() {
        let (_, f) = field(0.1);
        for (r, c) in [(0, 0), (5, 7), (f.rows - 1, f.cols - 1)] {
            let s = f.sample(Point2::new(c as f64 * f.stride, r as f64 * f.stride));
            assert_eq!(&s[..], f.node(r, c));
        }
    }

    #[test]
    fn deterministic_and_finite() {
        let (_, a) = field(0.2);
        let (_, b) = field(0.2);
        assert_eq!(a, b);
        assert!(a.data.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn object_interior_carries_class_prototype() {
        let (scene, f) = field(0.0);
        let o = &scene.objects[0];
        let v = f.sample(o.gt.center());
        assert!((v[o.class] - 1.0).abs() < 0.2, "{v:?}");
        let probs = f.class_probabilities(o.gt.center(), 3);
        assert!(probs[o.class] > 0.8);
    }
}
