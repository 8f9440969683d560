use narrownet::deepen::ShallowNet;
use narrownet::{AffineFunctional, DcFn, MaxAffineFn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-9;
pub const SCAN_POINTS: usize = 10_000;

pub fn functional(rng: &mut ChaCha8Rng, d: usize) -> AffineFunctional {
    let a = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
    AffineFunctional::new(a, rng.random_range(-1.0..=1.0)).unwrap()
}

pub fn max_affine(rng: &mut ChaCha8Rng, d: usize, n: usize) -> MaxAffineFn {
    MaxAffineFn::new(d, (0..n).map(|_| functional(rng, d)).collect()).unwrap()
}

/// Shift so that the function is nonnegative on the cube (by exact piece bounds).
pub fn lift_nonnegative(f: &MaxAffineFn) -> MaxAffineFn {
    f.shifted((-f.cube_lower_bound()).max(0.0))
}

pub fn dc(rng: &mut ChaCha8Rng, d: usize, n: usize, m: usize) -> DcFn {
    DcFn::new(max_affine(rng, d, n), max_affine(rng, d, m)).unwrap()
}

/// Adds a constant to `g` so that `g − h ≥ 0` on the cube.
pub fn lift_dc(f: &DcFn) -> DcFn {
    let h_hi = f
        .h
        .pieces()
        .iter()
        .map(|p| p.cube_bounds().1)
        .fold(f64::NEG_INFINITY, f64::max);
    let c = (h_hi - f.g.cube_lower_bound()).max(0.0);
    DcFn::new(f.g.shifted(c), f.h.clone()).unwrap()
}

pub fn shallow(rng: &mut ChaCha8Rng, d: usize, n: usize) -> ShallowNet {
    let pieces = (0..n).map(|_| functional(rng, d)).collect();
    let coeffs = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    ShallowNet::new(pieces, coeffs, rng.random_range(-1.0..=1.0)).unwrap()
}

pub fn cube_grid(d: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let total = per_axis.pow(d as u32);
    let step = (per_axis - 1) as f64;
    (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; d];
            for k in (0..d).rev() {
                x[k] = (idx % per_axis) as f64 / step;
                idx /= per_axis;
            }
            x
        })
        .collect()
}
