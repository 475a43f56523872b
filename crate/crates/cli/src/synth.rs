//! Seeded synthetic inputs: 1D truncated Gaussians, blob images and the
//! drifting-dots sequences used by the tracking experiment.

use ndarray::Array1;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use umot::DiscreteMeasure;

/// Density of a normal truncated to [0,1], sampled on an `m`-point grid and
/// normalized to the requested total mass.
pub fn truncated_gaussian_1d(m: usize, mean: f64, sigma: f64, mass: f64) -> DiscreteMeasure {
    let xs: Vec<f64> = (0..m).map(|i| i as f64 / (m as f64 - 1.0)).collect();
    let mut ws: Vec<f64> =
        xs.iter().map(|&x| (-((x - mean) / sigma).powi(2) / 2.0).exp()).collect();
    let sum: f64 = ws.iter().sum();
    for w in &mut ws {
        *w *= mass / sum;
    }
    DiscreteMeasure::from_points_1d(&xs, &ws).expect("grid weights are valid")
}

/// A `size × size` image with one isotropic Gaussian blob, in row-major
/// order, normalized to the given mass.
pub fn blob_image(size: usize, center: (f64, f64), sigma: f64, mass: f64) -> Array1<f64> {
    let coord = |i: usize| i as f64 / (size as f64 - 1.0);
    let mut img = Array1::zeros(size * size);
    for r in 0..size {
        for c in 0..size {
            let d2 = (coord(r) - center.0).powi(2) + (coord(c) - center.1).powi(2);
            img[r * size + c] = (-d2 / (2.0 * sigma * sigma)).exp();
        }
    }
    let sum = img.sum();
    img.mapv_into(|v| v * mass / sum)
}

/// Sparse dots: uniform noise with everything above the threshold zeroed.
/// The surviving pixels keep their (small) uniform values.
pub fn dots_image(rng: &mut ChaCha8Rng, size: usize, threshold: f64) -> Array1<f64> {
    Array1::from(
        (0..size * size)
            .map(|_| {
                let u: f64 = rng.random_range(0.0..1.0);
                if u <= threshold {
                    u
                } else {
                    0.0
                }
            })
            .collect::<Vec<f64>>(),
    )
}

/// Separable Gaussian blur with zero padding, radius 3σ.
pub fn gaussian_blur(img: &Array1<f64>, size: usize, sigma: f64) -> Array1<f64> {
    if sigma <= 0.0 {
        return img.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let ksum: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.into_iter().map(|v| v / ksum).collect();

    let idx = |r: usize, c: usize| r * size + c;
    let mut rows_pass = Array1::zeros(size * size);
    for r in 0..size {
        for c in 0..size {
            let mut acc = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                let rr = r as isize + ki as isize - radius;
                if rr >= 0 && (rr as usize) < size {
                    acc += kv * img[idx(rr as usize, c)];
                }
            }
            rows_pass[idx(r, c)] = acc;
        }
    }
    let mut out = Array1::zeros(size * size);
    for r in 0..size {
        for c in 0..size {
            let mut acc = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                let cc = c as isize + ki as isize - radius;
                if cc >= 0 && (cc as usize) < size {
                    acc += kv * rows_pass[idx(r, cc as usize)];
                }
            }
            out[idx(r, c)] = acc;
        }
    }
    out
}

/// Shifts an image down by `pixels` rows, filling vacated rows with a
/// constant.
pub fn shift_down(img: &Array1<f64>, size: usize, pixels: usize, fill: f64) -> Array1<f64> {
    let mut out = Array1::from_elem(size * size, fill);
    for r in pixels..size {
        for c in 0..size {
            out[r * size + c] = img[(r - pixels) * size + c];
        }
    }
    out
}

/// The tracking input: `frames` clean images (blurred dots drifting down by
/// `shift` pixels per step) and their noisy versions with fresh dots added
/// each step.  Both sequences are raw intensities; normalization is the
/// caller's business.
pub struct DotSequence {
    pub clean: Vec<Array1<f64>>,
    pub noisy: Vec<Array1<f64>>,
}

pub fn dot_sequence(
    seed: u64,
    size: usize,
    frames: usize,
    shift: usize,
    dot_density: f64,
    noise_density: f64,
    blur_sigma: f64,
) -> DotSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = gaussian_blur(&dots_image(&mut rng, size, dot_density), size, blur_sigma);
    let mut clean = Vec::with_capacity(frames);
    let mut noisy = Vec::with_capacity(frames);
    for i in 0..frames {
        let frame = shift_down(&base, size, shift * i, 0.0);
        let noise =
            gaussian_blur(&dots_image(&mut rng, size, noise_density), size, blur_sigma);
        noisy.push(&frame + &noise);
        clean.push(frame);
    }
    DotSequence { clean, noisy }
}

/// Normalizes weights to unit mass, optionally flooring them first (some
/// penalties need strictly positive targets).
pub fn normalize_weights(weights: &Array1<f64>, floor: f64) -> Array1<f64> {
    let floored = weights.mapv(|w| w.max(floor));
    let sum = floored.sum();
    floored.mapv(|w| w / sum)
}
