//! Sparse compact-support kernel of the Bayesian kernel inference family and
//! the voxel neighborhood it reaches.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::voxmap::index::{cell_center, distance, world_to_cell, CellIndex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams<T> {
    /// Kernel scale; the value at zero distance.
    pub sigma0: T,
    /// Support radius in meters.
    pub length: T,
}

impl<T: Scalar> KernelParams<T> {
    pub fn new(sigma0: T, length: T) -> Result<Self> {
        let p = Self { sigma0, length };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0.is_finite() && self.sigma0 > T::zero()) {
            return Err(Error::invalid(format!(
                "kernel sigma0 {} must be > 0",
                self.sigma0
            )));
        }
        if !(self.length.is_finite() && self.length > T::zero()) {
            return Err(Error::invalid(format!(
                "kernel length {} must be > 0",
                self.length
            )));
        }
        Ok(())
    }
}

fn check_distance<T: Scalar>(d: T) -> Result<()> {
    if d.is_nan() || d < T::zero() {
        return Err(Error::invalid(format!("kernel distance {d} must be >= 0")));
    }
    Ok(())
}

/// Kernel profile without the `sigma0` scale, in `[0, 1]`.
fn profile<T: Scalar>(d: T, length: T) -> T {
    if d >= length {
        return T::zero();
    }
    let r = d / length;
    let angle = T::two_pi() * r;
    // The two terms cancel near r = 1; rounding can dip a hair below zero.
    let k = (T::lit(2.0) + angle.cos()) * (T::one() - r) / T::lit(3.0) + angle.sin() / T::two_pi();
    k.max(T::zero())
}

/// `sigma0 * [ (2 + cos(2 pi d/l)) (1 - d/l) / 3 + sin(2 pi d/l) / (2 pi) ]` inside the
/// support, zero outside.
pub fn sparse_kernel<T: Scalar>(d: T, params: &KernelParams<T>) -> Result<T> {
    check_distance(d)?;
    Ok(params.sigma0 * profile(d, params.length))
}

/// Kernel value relative to its peak: 1 at the measurement, 0 at the support edge.
pub fn normalized_weight<T: Scalar>(d: T, params: &KernelParams<T>) -> Result<T> {
    check_distance(d)?;
    Ok(profile(d, params.length))
}

/// Cells whose centers lie within `length` of `point`, in lexicographic index order.
pub fn neighbor_cells<T: Scalar>(
    point: [T; 3],
    voxel_size: T,
    length: T,
) -> Result<Vec<CellIndex>> {
    Ok(neighbor_cells_with_distance(point, voxel_size, length)?
        .into_iter()
        .map(|(c, _)| c)
        .collect())
}

/// As [`neighbor_cells`], paired with each cell's center distance.
pub fn neighbor_cells_with_distance<T: Scalar>(
    point: [T; 3],
    voxel_size: T,
    length: T,
) -> Result<Vec<(CellIndex, T)>> {
    if !(voxel_size.is_finite() && voxel_size > T::zero()) {
        return Err(Error::invalid(format!(
            "voxel size {voxel_size} must be > 0"
        )));
    }
    if !(length.is_finite() && length > T::zero()) {
        return Err(Error::invalid(format!(
            "support length {length} must be > 0"
        )));
    }
    let home = world_to_cell(point, voxel_size)?;
    // one spare ring absorbs rounding in the reach estimate; the distance test decides
    let reach = (length / voxel_size)
        .ceil()
        .to_i64()
        .ok_or_else(|| Error::invalid("kernel reach overflows"))?
        + 1;
    let mut out = Vec::new();
    for dx in -reach..=reach {
        for dy in -reach..=reach {
            for dz in -reach..=reach {
                let cell = home.offset(dx, dy, dz);
                let d = distance(point, cell_center(cell, voxel_size));
                if d <= length {
                    out.push((cell, d));
                }
            }
        }
    }
    Ok(out)
}
