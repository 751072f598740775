use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::artifact::{apply_to_slice, ArtifactSpec};
use super::ImageVolume;
use crate::error::{AlqaError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodyOutline {
    Ellipse,
    /// `corner` is the corner radius as a fraction of the smaller body radius.
    RoundedRect { corner: f64 },
}

/// An internal structure, placed relative to the body: `center` and `radii`
/// are in units of the body radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Structure {
    pub center: (f64, f64),
    pub radii: (f64, f64),
    pub intensity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub outline: BodyOutline,
    /// Body center as a fraction of (height, width).
    pub center: (f64, f64),
    /// Body half-axes as a fraction of (height, width).
    pub radii: (f64, f64),
    pub intensity: f64,
    pub structures: Vec<Structure>,
    /// Relative shrink of the body towards the outermost slices.
    pub taper: f64,
}

impl BodySpec {
    pub fn ellipse(intensity: f64) -> Self {
        Self {
            outline: BodyOutline::Ellipse,
            center: (0.5, 0.5),
            radii: (0.35, 0.35),
            intensity,
            structures: Vec::new(),
            taper: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    /// (depth, height, width)
    pub shape: (usize, usize, usize),
    pub body: BodySpec,
    pub artifact: ArtifactSpec,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl PhantomSpec {
    /// Random anatomy drawn deterministically from `seed`.
    pub fn sample_body(seed: u64) -> BodySpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let outline = if rng.random_bool(0.5) {
            BodyOutline::Ellipse
        } else {
            BodyOutline::RoundedRect {
                corner: rng.random_range(0.3..0.8),
            }
        };
        let n_structures = rng.random_range(2..=4);
        let structures = (0..n_structures)
            .map(|_| Structure {
                center: (rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)),
                radii: (rng.random_range(0.12..0.35), rng.random_range(0.12..0.35)),
                intensity: rng.random_range(0.2..1.4),
            })
            .collect();
        BodySpec {
            outline,
            center: (
                0.5 + rng.random_range(-0.04..0.04),
                0.5 + rng.random_range(-0.04..0.04),
            ),
            radii: (rng.random_range(0.26..0.36), rng.random_range(0.26..0.36)),
            intensity: rng.random_range(0.6..1.0),
            structures,
            taper: rng.random_range(0.0..0.2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (d, h, w) = self.shape;
        if d < 1 || h < 8 || w < 8 {
            return Err(AlqaError::Shape(format!(
                "phantom shape {d}x{h}x{w}; need depth >= 1 and height, width >= 8"
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(AlqaError::Parameter(format!(
                "noise_sigma {} must be finite and >= 0",
                self.noise_sigma
            )));
        }
        self.artifact.validate()
    }
}

fn inside_outline(outline: &BodyOutline, dy: f64, dx: f64, ry: f64, rx: f64) -> bool {
    match outline {
        BodyOutline::Ellipse => (dy / ry).powi(2) + (dx / rx).powi(2) <= 1.0,
        BodyOutline::RoundedRect { corner } => {
            let (ay, ax) = (dy.abs(), dx.abs());
            if ay > ry || ax > rx {
                return false;
            }
            let rc = corner.clamp(0.0, 1.0) * ry.min(rx);
            let (ey, ex) = (ay - (ry - rc), ax - (rx - rc));
            !(ey > 0.0 && ex > 0.0 && ey * ey + ex * ex > rc * rc)
        }
    }
}

/// Noise-free anatomy for one slice, background exactly zero.
pub(crate) fn render_slice(body: &BodySpec, z: usize, depth: usize, h: usize, w: usize) -> Array2<f64> {
    let mid = (depth as f64 - 1.0) / 2.0;
    let scale = 1.0 - body.taper * (z as f64 - mid).abs() / depth.max(1) as f64;
    let (cy, cx) = (body.center.0 * h as f64, body.center.1 * w as f64);
    let (ry, rx) = (body.radii.0 * h as f64 * scale, body.radii.1 * w as f64 * scale);
    Array2::from_shape_fn((h, w), |(r, c)| {
        let dy = r as f64 + 0.5 - cy;
        let dx = c as f64 + 0.5 - cx;
        if !inside_outline(&body.outline, dy, dx, ry, rx) {
            return 0.0;
        }
        let mut value = body.intensity;
        for s in &body.structures {
            let sy = dy - s.center.0 * ry;
            let sx = dx - s.center.1 * rx;
            if (sy / (s.radii.0 * ry)).powi(2) + (sx / (s.radii.1 * rx)).powi(2) <= 1.0 {
                value = s.intensity;
            }
        }
        value
    })
}

/// Renders the phantom, injects its artifact, then adds Gaussian noise.
/// Output is a pure function of the spec (including its seed).
pub fn generate_phantom(id: &str, patient_id: &str, spec: &PhantomSpec) -> Result<ImageVolume> {
    spec.validate()?;
    let (d, h, w) = spec.shape;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0))
        .map_err(|e| AlqaError::Parameter(e.to_string()))?;
    let mut voxels = Array3::<f32>::zeros((d, h, w));
    for z in 0..d {
        let clean = render_slice(&spec.body, z, d, h, w);
        let degraded = apply_to_slice(&clean, &spec.artifact)?;
        for ((r, c), v) in degraded.indexed_iter() {
            let n = if spec.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            voxels[[z, r, c]] = (v + n) as f32;
        }
    }
    Ok(ImageVolume {
        id: id.to_string(),
        patient_id: patient_id.to_string(),
        voxels,
        spacing: (3.0, 1.0, 1.0),
        provenance: spec.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ArtifactSpec;

    fn plain(shape: (usize, usize, usize), noise: f64) -> PhantomSpec {
        PhantomSpec {
            shape,
            body: BodySpec::ellipse(1.0),
            artifact: ArtifactSpec::none(),
            noise_sigma: noise,
            seed: 11,
        }
    }

    #[test]
    fn ellipse_center_and_corner() {
        let vol = generate_phantom("a", "p", &plain((1, 64, 64), 0.0)).unwrap();
        assert_eq!(vol.voxels[[0, 32, 32]], 1.0);
        assert_eq!(vol.voxels[[0, 0, 0]], 0.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let mut spec = plain((2, 32, 32), 0.05);
        spec.body = PhantomSpec::sample_body(4);
        let a = generate_phantom("a", "p", &spec).unwrap();
        let b = generate_phantom("a", "p", &spec).unwrap();
        assert!(a
            .voxels
            .iter()
            .zip(b.voxels.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn rejects_small_shape() {
        let err = generate_phantom("a", "p", &plain((1, 4, 64), 0.0)).unwrap_err();
        assert!(matches!(err, AlqaError::Shape(_)));
    }

    #[test]
    fn background_noise_std() {
        let vol = generate_phantom("a", "p", &plain((1, 64, 64), 0.1)).unwrap();
        let clean = render_slice(&BodySpec::ellipse(1.0), 0, 1, 64, 64);
        let bg: Vec<f64> = vol
            .slice(0)
            .indexed_iter()
            .filter(|(idx, _)| clean[*idx] == 0.0)
            .map(|(_, v)| *v)
            .collect();
        let mean = bg.iter().sum::<f64>() / bg.len() as f64;
        let var = bg.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (bg.len() - 1) as f64;
        let std = var.sqrt();
        assert!((0.08..=0.12).contains(&std), "std {std}");
    }

    #[test]
    fn foreground_differs_from_background() {
        let mut spec = plain((3, 48, 48), 0.0);
        spec.body = PhantomSpec::sample_body(99);
        let vol = generate_phantom("a", "p", &spec).unwrap();
        let s = vol.slice(1);
        let fg: Vec<f64> = s.iter().copied().filter(|v| *v != 0.0).collect();
        assert!(!fg.is_empty());
        assert!(fg.iter().sum::<f64>() / fg.len() as f64 > 0.1);
    }
}
