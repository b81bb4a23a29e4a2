use crate::error::{Error, Result};
use crate::spectral::PeriodicField;
use std::f64::consts::PI;

const INVERSION_TOL: f64 = 1e-10;

/// ρ ↦ ρ(φ, θ + s(φ,θ)) by trigonometric interpolation along θ.
fn shifted(field: &PeriodicField, shift: &PeriodicField) -> Result<PeriodicField> {
    field.same_grid(shift)?;
    let m = field.theta_size();
    let h = 2.0 * PI / m as f64;
    let points: Vec<f64> = shift
        .values()
        .iter()
        .enumerate()
        .map(|(p, s)| (p % m) as f64 * h + s)
        .collect();
    PeriodicField::new(field.shape().to_vec(), field.eval_theta_at(&points)?)
}

/// θ ↦ θ + β(φ,θ) together with its inverse θ ↦ θ + β̂(φ,θ).
#[derive(Clone, Debug, PartialEq)]
pub struct ChangeOfVariables {
    beta: PeriodicField,
    beta_inv: PeriodicField,
}

impl ChangeOfVariables {
    pub fn identity(shape: &[usize]) -> Result<Self> {
        let z = PeriodicField::zeros(shape)?;
        Ok(ChangeOfVariables {
            beta: z.clone(),
            beta_inv: z,
        })
    }

    /// Builds β̂ by fixed-point iteration β̂ = −β(·, θ + β̂) and checks the invariants.
    pub fn new(beta: PeriodicField) -> Result<Self> {
        let lip = beta.derivative_theta().linf();
        if !(lip < 1.0) {
            return Err(Error::invariant(
                "diffeomorphism",
                format!("sup |∂_θβ| = {lip:.6} is not below 1"),
            ));
        }
        let scale = beta.linf().max(1e-300);
        let odd = (&beta.reflect() + &beta).linf();
        if odd > 1e-12 * scale.max(1.0) {
            return Err(Error::invariant("oddness", format!("β(−φ,−θ) + β(φ,θ) = {odd:.3e}")));
        }
        let mut inv = beta.scale(-1.0);
        for _ in 0..2000 {
            let next = shifted(&beta, &inv)?.scale(-1.0);
            let step = (&next - &inv).linf();
            inv = next;
            if step <= 1e-15 * scale.max(1.0) {
                break;
            }
        }
        let change = ChangeOfVariables { beta, beta_inv: inv };
        let defect = change.inversion_defect()?;
        if defect > INVERSION_TOL {
            return Err(Error::invariant(
                "inversion",
                format!("β̂(θ+β) + β = {defect:.3e} (grid too coarse for this β?)"),
            ));
        }
        Ok(change)
    }

    pub fn beta(&self) -> &PeriodicField {
        &self.beta
    }

    pub fn beta_inv(&self) -> &PeriodicField {
        &self.beta_inv
    }

    /// max |β̂(φ, θ+β(φ,θ)) + β(φ,θ)|.
    pub fn inversion_defect(&self) -> Result<f64> {
        Ok((&shifted(&self.beta_inv, &self.beta)? + &self.beta).linf())
    }

    /// sup |∂_θβ|.
    pub fn lipschitz(&self) -> f64 {
        self.beta.derivative_theta().linf()
    }

    /// `weighted = false`: ρ(φ, θ+β). `weighted = true`: (1+∂_θβ)ρ(φ, θ+β).
    pub fn compose_with(&self, field: &PeriodicField, weighted: bool) -> Result<PeriodicField> {
        apply(&self.beta, field, weighted)
    }

    /// Inverse of [`compose_with`](Self::compose_with) for the same `weighted` flag.
    pub fn compose_inverse(&self, field: &PeriodicField, weighted: bool) -> Result<PeriodicField> {
        apply(&self.beta_inv, field, weighted)
    }

    /// The change ρ ↦ (self ∘ next)ρ = ρ(θ + β + β_next(θ + β)).
    pub fn then(&self, next: &ChangeOfVariables) -> Result<ChangeOfVariables> {
        let beta = &self.beta + &shifted(&next.beta, &self.beta)?;
        ChangeOfVariables::new(beta)
    }
}

fn apply(shift: &PeriodicField, field: &PeriodicField, weighted: bool) -> Result<PeriodicField> {
    let moved = shifted(field, shift)?;
    if !weighted {
        return Ok(moved);
    }
    let jac = shift.derivative_theta().map(|v| 1.0 + v);
    moved.zip_with(&jac, |a, b| a * b)
}
