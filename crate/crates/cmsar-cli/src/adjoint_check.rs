//! Randomized dot-product test of the forward/adjoint pair.

use anyhow::Result;
use cmsar::backprojection::{apply_adjoint_batch, image_inner, sinogram_inner};
use cmsar::forward::apply_forward_batch;
use cmsar::scene::{AcquisitionConfig, ReflectivityGrid, Sinogram};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Maximum relative defect `|<FV, d> - <V, F* d>| / (|FV| |d|)` over
/// `pairs` random (V, d) pairs at the configured sizes. The batch
/// operator entry points share the per-sample geometry across all pairs.
pub fn max_adjoint_defect(acq: &AcquisitionConfig, seed: u64, pairs: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenes = Vec::with_capacity(pairs);
    let mut datas = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let mut v = ReflectivityGrid::zeros(acq.scene)?;
        for x in v.values_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        scenes.push(v);
        let mut d = Sinogram::zeros(acq.sinogram)?;
        for x in d.values_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        datas.push(d);
    }
    let forwards = apply_forward_batch(&scenes, acq)?;
    let adjoints = apply_adjoint_batch(&datas, acq)?;
    let mut worst = 0.0f64;
    for i in 0..pairs {
        let lhs = sinogram_inner(&forwards[i], &datas[i])?;
        let rhs = image_inner(&scenes[i], &adjoints[i])?;
        let scale = sinogram_inner(&forwards[i], &forwards[i])?.sqrt()
            * sinogram_inner(&datas[i], &datas[i])?.sqrt();
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    Ok(worst)
}
