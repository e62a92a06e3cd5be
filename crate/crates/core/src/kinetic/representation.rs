//! The kinetic function χ and reconstruction of entropies from it.

use super::KineticError;
use crate::model::{ModelSpec, Vector, MAX_DIM};
use crate::quadrature::{integrate_with_breaks, QuadratureSettings};

/// χ(ξ; u): +1 on 0 < ξ < u, −1 on u < ξ < 0, and 0 elsewhere (including the
/// endpoints ξ = 0 and ξ = u).
pub fn chi(xi: f64, u: f64) -> i8 {
    if 0.0 < xi && xi < u {
        1
    } else if u < xi && xi < 0.0 {
        -1
    } else {
        0
    }
}

fn check_state(u: f64, m: f64) -> Result<(), KineticError> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(KineticError::InvalidInput(format!("state bound must be positive, got {m}")));
    }
    if !(u.abs() <= m) {
        return Err(KineticError::InvalidInput(format!(
            "state {u} lies outside [-{m}, {m}]"
        )));
    }
    Ok(())
}

/// Breakpoints of ξ ↦ χ(ξ; u) on [−M, M].
fn chi_breaks(u: f64, m: f64) -> [f64; 4] {
    [-m, u.min(0.0), u.max(0.0), m]
}

/// S(u) − S(0) = ∫ S'(ξ) χ(ξ; u) dξ over [−M, M].
pub fn entropy_from_kinetic(
    s_prime: impl Fn(f64) -> f64,
    u: f64,
    m: f64,
) -> Result<f64, KineticError> {
    check_state(u, m)?;
    let integrand = |xi: f64| f64::from(chi(xi, u)) * s_prime(xi);
    integrate_with_breaks(integrand, &chi_breaks(u, m), &QuadratureSettings::MODEL)
        .map(|e| e.value)
        .map_err(|source| KineticError::Quadrature {
            context: "entropy",
            source,
        })
}

/// q^S(u) = ∫ S'(ξ) a(ξ) χ(ξ; u) dξ, componentwise.
pub fn entropy_flux_from_kinetic(
    s_prime: impl Fn(f64) -> f64,
    u: f64,
    model: &ModelSpec,
) -> Result<Vector, KineticError> {
    let m = model.state_bound();
    check_state(u, m)?;
    let mut out = [0.0; MAX_DIM];
    for (axis, slot) in out.iter_mut().enumerate().take(model.dimension()) {
        let integrand = |xi: f64| f64::from(chi(xi, u)) * s_prime(xi) * model.speed_raw(xi)[axis];
        *slot = integrate_with_breaks(integrand, &chi_breaks(u, m), &QuadratureSettings::MODEL)
            .map_err(|source| KineticError::Quadrature {
                context: "entropy flux",
                source,
            })?
            .value;
    }
    Ok(Vector::new(model.dimension(), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn chi_examples() {
        assert_eq!(chi(0.5, 1.0), 1);
        assert_eq!(chi(-0.3, -1.0), -1);
        assert_eq!(chi(2.0, 1.0), 0);
        for xi in [-1.0, 0.0, 0.5] {
            assert_eq!(chi(xi, 0.0), 0);
        }
        assert_eq!(chi(0.0, 1.0), 0);
        assert_eq!(chi(1.0, 1.0), 0);
    }

    #[test]
    fn entropy_examples() {
        let v = entropy_from_kinetic(|xi| 2.0 * xi, 2.0, 3.0).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        assert_eq!(entropy_from_kinetic(|xi| xi.cos(), 0.0, 1.0).unwrap(), 0.0);
        // Kruzhkov entropy with v = 0.5: |u − v| − |0 − v| at u = 1 is 0.
        let k = entropy_from_kinetic(|xi| (xi - 0.5f64).signum(), 1.0, 2.0).unwrap();
        assert!(k.abs() < 1e-9, "{k}");
    }

    #[test]
    fn entropy_rejects_out_of_range_state() {
        assert!(entropy_from_kinetic(|xi| xi, 2.0, 1.0).is_err());
    }

    #[test]
    fn entropy_flux_examples() {
        let b = presets::burgers();
        let q = entropy_flux_from_kinetic(|xi| 2.0 * xi, 1.0, &b).unwrap();
        assert!((q[0] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(entropy_flux_from_kinetic(|xi| 2.0 * xi, 0.0, &b).unwrap()[0], 0.0);

        let lin = presets::linear_advection(&[1.5]).with_state_bound(3.0).unwrap();
        let q = entropy_flux_from_kinetic(|_| 1.0, 2.0, &lin).unwrap();
        assert!((q[0] - 3.0).abs() < 1e-12);
    }
}
