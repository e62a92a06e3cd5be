//! Named models. Every preset satisfies `f(0) = 0` and carries closed forms for
//! the speed, the square-root factor and both primitives.

use super::{ModelSpec, MAX_DIM};

pub const NAMES: [&str; 5] = [
    "linear-advection",
    "burgers",
    "burgers-degenerate",
    "porous-medium",
    "anisotropic-2d",
];

const ZERO_MATRIX: [[f64; MAX_DIM]; MAX_DIM] = [[0.0; MAX_DIM]; MAX_DIM];

fn scalar(v: f64) -> [[f64; MAX_DIM]; MAX_DIM] {
    [[v, 0.0], [0.0, 0.0]]
}

pub fn by_name(name: &str) -> Option<ModelSpec> {
    let model = match name {
        "linear-advection" => linear_advection(&[1.0]),
        "burgers" => burgers(),
        "burgers-degenerate" => burgers_degenerate(),
        "porous-medium" => porous_medium(2.0),
        "anisotropic-2d" => anisotropic_2d(),
        _ => return None,
    };
    Some(model)
}

/// `f(u) = c·u`, `A = 0`. The velocity length sets the dimension.
pub fn linear_advection(velocity: &[f64]) -> ModelSpec {
    let d = velocity.len();
    let mut c = [0.0; MAX_DIM];
    c[..d].copy_from_slice(velocity);
    ModelSpec::builder("linear-advection", d)
        .flux(move |u| [c[0] * u, c[1] * u])
        .speed(move |_| c)
        .diffusion(|_| ZERO_MATRIX)
        .sqrt_factor(|_| ZERO_MATRIX)
        .beta_primitive(|_| ZERO_MATRIX)
        .diffusion_primitive(|_| ZERO_MATRIX)
        .build()
        .expect("valid preset")
}

/// `f(u) = u²/2`, `A = 0`.
pub fn burgers() -> ModelSpec {
    ModelSpec::builder("burgers", 1)
        .flux(|u| [0.5 * u * u, 0.0])
        .speed(|u| [u, 0.0])
        .diffusion(|_| ZERO_MATRIX)
        .sqrt_factor(|_| ZERO_MATRIX)
        .beta_primitive(|_| ZERO_MATRIX)
        .diffusion_primitive(|_| ZERO_MATRIX)
        .build()
        .expect("valid preset")
}

/// `f(u) = u²/2`, `A(u) = u²`, degenerate at `u = 0`.
pub fn burgers_degenerate() -> ModelSpec {
    ModelSpec::builder("burgers-degenerate", 1)
        .flux(|u| [0.5 * u * u, 0.0])
        .speed(|u| [u, 0.0])
        .diffusion(|u| scalar(u * u))
        .sqrt_factor(|u| scalar(u.abs()))
        .beta_primitive(|u| scalar(0.5 * u * u.abs()))
        .diffusion_primitive(|u| scalar(u * u * u / 3.0))
        .build()
        .expect("valid preset")
}

/// `f = 0`, `A(u) = m|u|^{m−1}`: the porous-medium equation `∂ₜu = ∂²ₓ(|u|^{m−1}u)`.
pub fn porous_medium(m: f64) -> ModelSpec {
    assert!(m >= 1.0, "porous-medium exponent must be at least 1");
    let name = "porous-medium";
    ModelSpec::builder(name, 1)
        .flux(|_| [0.0; MAX_DIM])
        .speed(|_| [0.0; MAX_DIM])
        .diffusion(move |u| scalar(m * u.abs().powf(m - 1.0)))
        .sqrt_factor(move |u| scalar(m.sqrt() * u.abs().powf(0.5 * (m - 1.0))))
        .beta_primitive(move |u| {
            let p = 0.5 * (m + 1.0);
            scalar(u.signum() * m.sqrt() * u.abs().powf(p) / p)
        })
        .diffusion_primitive(move |u| scalar(u.signum() * u.abs().powf(m)))
        .build()
        .expect("valid preset")
}

/// `f(u) = (u²/2, u³/3)`, `A(u) = diag(u², 0)`: diffusion acts only along x.
pub fn anisotropic_2d() -> ModelSpec {
    ModelSpec::builder("anisotropic-2d", 2)
        .flux(|u| [0.5 * u * u, u * u * u / 3.0])
        .speed(|u| [u, u * u])
        .diffusion(|u| [[u * u, 0.0], [0.0, 0.0]])
        .sqrt_factor(|u| [[u.abs(), 0.0], [0.0, 0.0]])
        .beta_primitive(|u| [[0.5 * u * u.abs(), 0.0], [0.0, 0.0]])
        .diffusion_primitive(|u| [[u * u * u / 3.0, 0.0], [0.0, 0.0]])
        .build()
        .expect("valid preset")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        for name in NAMES {
            assert_eq!(by_name(name).unwrap().name(), name);
        }
        assert!(by_name("nope").is_none());
    }

    #[test]
    fn porous_medium_closed_forms() {
        let pm = porous_medium(2.0);
        let b = pm.analytic_primitive(super::super::PrimitiveKind::Diffusion, -0.5).unwrap();
        assert_eq!(b.get(0, 0), -0.25);
        let beta = pm.analytic_primitive(super::super::PrimitiveKind::Beta, 1.0).unwrap();
        assert!((beta.get(0, 0) - 2.0 * 2f64.sqrt() / 3.0).abs() < 1e-15);
    }
}
