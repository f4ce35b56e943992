//! Geometric self-ensemble over the eight symmetries of the square.

use srbench_core::PlanarImage;

use crate::error::{Error, Result};

/// `flip` (left-right) is applied first, then `quarter_turns` counter-clockwise
/// rotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transform {
    pub quarter_turns: u8,
    pub flip: bool,
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        quarter_turns: 0,
        flip: false,
    };

    /// All eight, identity first.
    pub fn all() -> [Transform; 8] {
        let mut out = [Self::IDENTITY; 8];
        for (i, t) in out.iter_mut().enumerate() {
            *t = Transform {
                quarter_turns: (i % 4) as u8,
                flip: i >= 4,
            };
        }
        out
    }

    pub fn apply(self, img: &PlanarImage) -> PlanarImage {
        let base = if self.flip {
            img.flip_horizontal()
        } else {
            img.clone()
        };
        match self.quarter_turns % 4 {
            0 => base,
            1 => base.rotate90_ccw(),
            2 => base.rotate180(),
            _ => base.rotate90_cw(),
        }
    }

    pub fn invert(self, img: &PlanarImage) -> PlanarImage {
        let unrotated = match self.quarter_turns % 4 {
            0 => img.clone(),
            1 => img.rotate90_cw(),
            2 => img.rotate180(),
            _ => img.rotate90_ccw(),
        };
        if self.flip {
            unrotated.flip_horizontal()
        } else {
            unrotated
        }
    }
}

/// Runs `model` on all eight transformed copies of `lr` and averages the
/// back-transformed outputs in float.
pub fn self_ensemble_with<F>(lr: &PlanarImage, mut model: F) -> Result<PlanarImage>
where
    F: FnMut(&PlanarImage) -> Result<PlanarImage>,
{
    let mut branches = Vec::with_capacity(8);
    for t in Transform::all() {
        let out = model(&t.apply(lr))?;
        branches.push(t.invert(&out));
    }
    let first = &branches[0];
    if let Some(b) = branches.iter().find(|b| !b.same_shape(first)) {
        return Err(Error::InvalidArgument(format!(
            "self-ensemble branches disagree in shape: {}x{} vs {}x{}",
            first.width(),
            first.height(),
            b.width(),
            b.height()
        )));
    }
    let data: Vec<f64> = (0..first.data().len())
        .map(|i| {
            let v: [f64; 8] = std::array::from_fn(|k| branches[k].data()[i]);
            // Pairwise sum: eight equal terms add up exactly.
            (((v[0] + v[1]) + (v[2] + v[3])) + ((v[4] + v[5]) + (v[6] + v[7]))) / 8.0
        })
        .collect();
    Ok(PlanarImage::new(
        first.width(),
        first.height(),
        first.colorspace(),
        data,
    )?)
}
