use ndarray::{Array2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ImageVolume;
use crate::error::{AlqaError, Result};
use crate::fft::{to_complex, Fft2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArtifactKind {
    None,
    /// Alternating phase-encode lines get a phase of `severity * phase_amplitude`.
    MotionGhost { phase_amplitude: f64 },
    /// Every `factor`-th phase-encode line is kept; the rest fade out with severity.
    AliasSubsample { factor: u8 },
    /// Gaussian blur with sigma `severity * width` pixels.
    Blur { width: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactSpec {
    #[serde(flatten)]
    pub kind: ArtifactKind,
    pub severity: f64,
}

impl ArtifactSpec {
    pub fn none() -> Self {
        Self {
            kind: ArtifactKind::None,
            severity: 0.0,
        }
    }

    pub fn motion_ghost(severity: f64) -> Self {
        Self {
            kind: ArtifactKind::MotionGhost {
                phase_amplitude: std::f64::consts::PI,
            },
            severity,
        }
    }

    pub fn alias(factor: u8, severity: f64) -> Self {
        Self {
            kind: ArtifactKind::AliasSubsample { factor },
            severity,
        }
    }

    pub fn blur(severity: f64) -> Self {
        Self {
            kind: ArtifactKind::Blur { width: 2.5 },
            severity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.severity) {
            return Err(AlqaError::Parameter(format!(
                "artifact severity {} outside [0, 1]",
                self.severity
            )));
        }
        match self.kind {
            ArtifactKind::None if self.severity != 0.0 => Err(AlqaError::Parameter(
                "artifact kind none requires severity 0".into(),
            )),
            ArtifactKind::MotionGhost { phase_amplitude } if !phase_amplitude.is_finite() => Err(
                AlqaError::Parameter("ghost phase amplitude must be finite".into()),
            ),
            ArtifactKind::AliasSubsample { factor } if !(1..=4).contains(&factor) => Err(
                AlqaError::Parameter(format!("subsampling factor {factor} outside 1..=4")),
            ),
            ArtifactKind::Blur { width } if !(width > 0.0 && width.is_finite()) => Err(
                AlqaError::Parameter(format!("blur width {width} must be > 0")),
            ),
            _ => Ok(()),
        }
    }
}

/// Applies the artifact to every slice. Deterministic: k-space operations
/// and blur have no random component.
pub fn inject_artifact(volume: &ImageVolume, artifact: &ArtifactSpec) -> Result<ImageVolume> {
    artifact.validate()?;
    let mut out = volume.clone();
    if artifact.severity == 0.0 {
        return Ok(out);
    }
    for (z, mut slice) in out.voxels.axis_iter_mut(Axis(0)).enumerate() {
        let degraded = apply_to_slice(&volume.slice(z), artifact)?;
        slice.zip_mut_with(&degraded, |dst, src| *dst = *src as f32);
    }
    out.provenance.artifact = artifact.clone();
    Ok(out)
}

pub(crate) fn apply_to_slice(slice: &Array2<f64>, artifact: &ArtifactSpec) -> Result<Array2<f64>> {
    artifact.validate()?;
    if artifact.severity == 0.0 {
        return Ok(slice.clone());
    }
    let s = artifact.severity;
    Ok(match artifact.kind {
        ArtifactKind::None => slice.clone(),
        ArtifactKind::MotionGhost { phase_amplitude } => {
            let shift = Complex64::from_polar(1.0, s * phase_amplitude);
            modulate_kspace(slice, |ky| if ky % 2 == 1 { shift } else { Complex64::new(1.0, 0.0) })
        }
        ArtifactKind::AliasSubsample { factor } => {
            let k = factor as f64;
            let kept = Complex64::new(1.0 + s * (k - 1.0), 0.0);
            let dropped = Complex64::new(1.0 - s, 0.0);
            let factor = factor as usize;
            modulate_kspace(slice, |ky| if ky % factor == 0 { kept } else { dropped })
        }
        ArtifactKind::Blur { width } => gaussian_blur(slice, s * width),
    })
}

/// Multiplies each phase-encode line (row frequency `ky`) by `weight(ky)`
/// and returns the magnitude image.
fn modulate_kspace(slice: &Array2<f64>, weight: impl Fn(usize) -> Complex64) -> Array2<f64> {
    let (h, w) = slice.dim();
    let fft = Fft2::new(h, w);
    let mut k = to_complex(slice);
    fft.forward(&mut k);
    for (ky, mut row) in k.axis_iter_mut(Axis(0)).enumerate() {
        let wgt = weight(ky);
        row.mapv_inplace(|v| v * wgt);
    }
    fft.inverse(&mut k);
    k.mapv(|v| v.norm())
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

/// Separable normalized Gaussian blur with symmetric boundary extension.
pub(crate) fn gaussian_blur(slice: &Array2<f64>, sigma: f64) -> Array2<f64> {
    if sigma <= 0.0 {
        return slice.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|t| (-(t * t) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|v| *v /= total);

    let (h, w) = slice.dim();
    let horizontal = Array2::<f64>::from_shape_fn((h, w), |(r, c)| {
        kernel
            .iter()
            .enumerate()
            .map(|(i, kv)| kv * slice[[r, reflect(c as isize + i as isize - radius, w)]])
            .sum()
    });
    Array2::from_shape_fn((h, w), |(r, c)| {
        kernel
            .iter()
            .enumerate()
            .map(|(i, kv)| kv * horizontal[[reflect(r as isize + i as isize - radius, h), c]])
            .sum()
    })
}
