use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polygon_iou, Point2, RotatedRect};
use crate::{Quad, Rect};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub width: f64,
    pub height: f64,
    pub n_objects: usize,
    pub n_classes: usize,
    /// Range of the long side, scene units.
    pub long_side: (f64, f64),
    pub max_aspect: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 256.0,
            height: 256.0,
            n_objects: 1,
            n_classes: 3,
            long_side: (32.0, 96.0),
            max_aspect: 8.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.long_side;
        let ok = self.width > 0.0
            && self.height > 0.0
            && self.n_objects >= 1
            && self.n_classes >= 1
            && lo > 0.0
            && hi >= lo
            && hi <= self.width.min(self.height)
            && self.max_aspect >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid scene config {self:?}"
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub class: usize,
    pub gt: Quad,
    pub difficult: bool,
    /// The rectangle the GT corners were generated from.
    pub rect: Rect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub width: f64,
    pub height: f64,
    pub objects: Vec<SceneObject>,
    pub seed: u64,
}

/// Draws one rotated rectangle that fits inside the extent.
fn draw_rect(rng: &mut ChaCha8Rng, cfg: &SceneConfig) -> Rect {
    let (lo, hi) = cfg.long_side;
    let long = if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    };
    let aspect = if cfg.max_aspect > 1.0 {
        rng.random_range(1.0..cfg.max_aspect)
    } else {
        1.0
    };
    let short = long / aspect;
    let angle: f64 = rng.random_range(-90.0..90.0);
    let (s, c) = angle.to_radians().sin_cos();
    let hx = 0.5 * (long * c.abs() + short * s.abs());
    let hy = 0.5 * (long * s.abs() + short * c.abs());
    let cx = if cfg.width > 2.0 * hx {
        rng.random_range(hx..cfg.width - hx)
    } else {
        cfg.width / 2.0
    };
    let cy = if cfg.height > 2.0 * hy {
        rng.random_range(hy..cfg.height - hy)
    } else {
        cfg.height / 2.0
    };
    RotatedRect::new(Point2::new(cx, cy), long, short, angle)
}

/// Reproducible scene of non-overlapping oriented boxes (overlap is only
/// accepted after 100 failed draws for one object).
pub fn gen_scene(seed: u64, cfg: &SceneConfig) -> Result<SyntheticScene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objects: Vec<SceneObject> = Vec::with_capacity(cfg.n_objects);
    for _ in 0..cfg.n_objects {
        let class = rng.random_range(0..cfg.n_classes);
        let mut rect = draw_rect(&mut rng, cfg);
        for _ in 0..100 {
            let poly = rect.to_polygon()?;
            let clear = objects
                .iter()
                .all(|o| polygon_iou(&poly, &o.gt.to_polygon()).map_or(true, |v| v == 0.0));
            if clear {
                break;
            }
            rect = draw_rect(&mut rng, cfg);
        }
        objects.push(SceneObject {
            class,
            gt: rect.to_quad()?,
            difficult: false,
            rect,
        });
    }
    Ok(SyntheticScene {
        width: cfg.width,
        height: cfg.height,
        objects,
        seed,
    })
}
