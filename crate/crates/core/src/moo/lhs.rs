//! Latin hypercube sampling over a mixed-integer design space.

use rand::Rng;

use crate::design::DesignSpace;

/// `n` samples with exactly one point per axis-aligned stratum in unit space.
/// Integer coordinates are rounded onto the lattice after scaling, so their
/// marginal distribution is near-uniform but strata can collide once the
/// number of samples exceeds the number of lattice values.
pub struct LhsSample {
    /// Stratified points in `[0, 1)^q`, one row per sample.
    pub unit: Vec<Vec<f64>>,
    /// The same points scaled to the space bounds and snapped.
    pub points: Vec<Vec<f64>>,
}

pub fn latin_hypercube<R: Rng>(space: &DesignSpace, n: usize, rng: &mut R) -> LhsSample {
    let q = space.len();
    let mut unit = vec![vec![0.0; q]; n];
    for d in 0..q {
        // Permuted strata with a uniform jitter inside each.
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        for (i, row) in unit.iter_mut().enumerate() {
            row[d] = (order[i] as f64 + rng.gen_range(0.0..1.0)) / n as f64;
        }
    }
    let points = unit
        .iter()
        .map(|u| {
            let mut p: Vec<f64> = u
                .iter()
                .zip(space.dims.iter())
                .map(|(v, dim)| dim.lo + v * dim.range())
                .collect();
            space.snap(&mut p);
            p
        })
        .collect();
    LhsSample { unit, points }
}
