//! Named initial profiles on the periodic box. Coordinates are scaled to
//! x̃ᵢ = xᵢ/Pᵢ so every profile has the box as its period.
//!
//! * `sine`: A·∏ sin(2πx̃ᵢ)
//! * `multi-sine`: A·Σ_{k=1}^{K} k⁻¹ ∏ sin(2πk x̃ᵢ)
//! * `square-wave`: A·sign(∏ sin(2πx̃ᵢ)), with sign(0) = 1
//! * `random`: A·Σ_m (a_m cos 2πm·x̃ + b_m sin 2πm·x̃) / Σ_m (|a_m| + |b_m|)
//!
//! For `random` the wavevectors are k = 1..K in 1D, and in 2D the half plane
//! 0 ≤ m₁ ≤ K, −K ≤ m₂ ≤ K without (0, m₂ ≤ 0), in lexicographic order. Each
//! wavevector draws a_m then b_m uniform in [−1, 1) from [`Lcg`] seeded with
//! `seed`, so |u| ≤ A and the field is reproducible in any language.

use std::f64::consts::TAU;

use super::config::{InitialSection, ProfileKind};
use super::rng::Lcg;
use crate::diagnostics::mean;
use crate::solver::{init_field, CellField, PeriodicGrid, SolverError};

pub type ProfileFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

fn wavevectors(dimension: usize, modes: usize) -> Vec<[i64; 2]> {
    let k = modes as i64;
    if dimension == 1 {
        return (1..=k).map(|m| [m, 0]).collect();
    }
    let mut out = Vec::new();
    for m1 in 0..=k {
        for m2 in -k..=k {
            if m1 == 0 && m2 <= 0 {
                continue;
            }
            out.push([m1, m2]);
        }
    }
    out
}

/// The unshifted profile A·p(x), before mean removal and offset.
pub fn profile_fn(initial: &InitialSection, periods: &[f64]) -> ProfileFn {
    let periods = periods.to_vec();
    let amp = initial.amplitude;
    let modes = initial.modes;
    let sines = move |x: &[f64], periods: &[f64], k: f64| -> f64 {
        x.iter()
            .zip(periods)
            .map(|(xi, p)| (TAU * k * xi / p).sin())
            .product()
    };
    match initial.profile {
        ProfileKind::Sine => Box::new(move |x| amp * sines(x, &periods, 1.0)),
        ProfileKind::MultiSine => Box::new(move |x| {
            amp * (1..=modes)
                .map(|k| sines(x, &periods, k as f64) / k as f64)
                .sum::<f64>()
        }),
        ProfileKind::SquareWave => Box::new(move |x| {
            if sines(x, &periods, 1.0) >= 0.0 {
                amp
            } else {
                -amp
            }
        }),
        ProfileKind::Random => {
            let mut rng = Lcg::new(initial.seed);
            let terms: Vec<([i64; 2], f64, f64)> = wavevectors(periods.len(), modes)
                .into_iter()
                .map(|m| {
                    let a = rng.uniform(-1.0, 1.0);
                    let b = rng.uniform(-1.0, 1.0);
                    (m, a, b)
                })
                .collect();
            let norm: f64 = terms.iter().map(|(_, a, b)| a.abs() + b.abs()).sum();
            let scale = if norm > 0.0 { amp / norm } else { 0.0 };
            Box::new(move |x| {
                let mut s = 0.0;
                for (m, a, b) in &terms {
                    let theta: f64 = x
                        .iter()
                        .zip(&periods)
                        .zip(m)
                        .map(|((xi, p), &mi)| TAU * mi as f64 * xi / p)
                        .sum();
                    s += a * theta.cos() + b * theta.sin();
                }
                scale * s
            })
        }
    }
}

/// Cell averages of the configured profile, with the mean removed if asked
/// and the offset added.
pub fn initial_field(initial: &InitialSection, grid: &PeriodicGrid) -> Result<CellField, SolverError> {
    let f = profile_fn(initial, grid.periods());
    let mut field = init_field(grid, |x| f(x))?;
    let shift = if initial.zero_mean { mean(&field) } else { 0.0 };
    for v in &mut field.values {
        *v = *v - shift + initial.offset;
    }
    Ok(field)
}
