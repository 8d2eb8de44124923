//! Monotone flux `A(x, z, ξ)` together with its structural constants and a
//! sampled check of the coercivity, growth, monotonicity and zero-flux
//! conditions.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Result, SolverError};
use crate::exec::Exec;
use crate::field::SampledField;
use crate::nfunction::{dominates_much, Kind, NFunction, NFunctionError};
use crate::norms::{modular, NormError};
use crate::numerics::geomspace;

/// User flux `(x, z, ξ) -> A`.
pub type FluxFn = Arc<dyn Fn([f64; 2], f64, [f64; 2]) -> [f64; 2] + Send + Sync>;

#[derive(Clone)]
pub enum FluxForm {
    /// `A = B'(|ξ|) ξ / |ξ|`.
    PotentialGradient,
    /// `A = (1 + θ arctan(z) / π) B'(|ξ|) ξ / |ξ|` with `|θ| < 1`.
    ZPerturbed { theta: f64 },
    /// Arbitrary flux; validated by sampling but not solved.
    Custom(FluxFn),
}

impl fmt::Debug for FluxForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluxForm::PotentialGradient => write!(f, "PotentialGradient"),
            FluxForm::ZPerturbed { theta } => write!(f, "ZPerturbed {{ theta: {theta} }}"),
            FluxForm::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl FluxForm {
    pub fn name(&self) -> &'static str {
        match self {
            FluxForm::PotentialGradient => "potential_gradient",
            FluxForm::ZPerturbed { .. } => "z_perturbed",
            FluxForm::Custom(_) => "custom",
        }
    }

    /// Coefficient multiplying the potential flux, for the built-in forms.
    pub fn coefficient(&self, z: f64) -> f64 {
        match self {
            FluxForm::ZPerturbed { theta } => 1.0 + theta * z.atan() / std::f64::consts::PI,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub b: NFunction,
    /// Lower-order growth function, expected to satisfy `P << B`.
    pub p: NFunction,
    /// `K(x)`; `None` means `K ≡ 0`.
    pub k_field: Option<SampledField>,
    pub d0: f64,
    pub d: f64,
    pub form: FluxForm,
    pub strongly_monotone: bool,
}

/// Largest `|ξ|` used when sampling the structural conditions.
pub fn sample_range(b: &NFunction) -> f64 {
    (0.25 * b.domain_cap()).min(100.0)
}

/// A growth function much smaller than `B` at infinity.
pub fn default_lower_order(b: &NFunction) -> NFunction {
    match b.kind() {
        Kind::LLogL => NFunction::zygmund(1.0, 0.5).expect("valid parameters"),
        Kind::Zygmund { p, beta } if *p <= 1.0 => NFunction::zygmund(1.0, beta / 2.0).expect("valid parameters"),
        _ => NFunction::llogl(),
    }
}

impl OperatorSpec {
    /// Operator of the given form with `P` chosen by [`default_lower_order`],
    /// `K ≡ 0`, `d₀ = 1 - |θ|/2` and `d` set to 0.9 of the sampled admissible
    /// value.
    pub fn new(b: NFunction, form: FluxForm) -> Result<Self> {
        let d0 = match &form {
            FluxForm::ZPerturbed { theta } => {
                if !(theta.abs() < 1.0) {
                    return Err(SolverError::InvalidOperator(format!("need |theta| < 1, got {theta}")));
                }
                1.0 - theta.abs() / 2.0
            }
            _ => 1.0,
        };
        let strongly_monotone = !matches!(form, FluxForm::Custom(_));
        let p = default_lower_order(&b);
        let mut op = OperatorSpec { b, p, k_field: None, d0, d: 1.0, form, strongly_monotone };
        op.d = 0.9 * op.admissible_d()?;
        Ok(op)
    }

    pub fn potential(b: NFunction) -> Result<Self> {
        Self::new(b, FluxForm::PotentialGradient)
    }

    pub fn with_lower_order(mut self, p: NFunction) -> Result<Self> {
        self.p = p;
        self.d = 0.9 * self.admissible_d()?;
        Ok(self)
    }

    pub fn with_k_field(mut self, k: SampledField) -> Result<Self> {
        self.k_field = Some(k);
        self.d = 0.9 * self.admissible_d()?;
        Ok(self)
    }

    pub fn k_at(&self, x: [f64; 2]) -> f64 {
        match &self.k_field {
            None => 0.0,
            Some(k) => {
                let h = k.spacing();
                let n = k.n();
                let idx = |v: f64| ((v / h).floor().max(0.0) as usize).min(n - 1);
                let c = if k.dim() == 1 { idx(x[0]) } else { idx(x[0]) + n * idx(x[1]) };
                k.values()[c].abs()
            }
        }
    }

    fn k_min(&self) -> f64 {
        self.k_field.as_ref().map_or(0.0, |k| k.values().iter().fold(f64::INFINITY, |m, v| m.min(v.abs())))
    }

    /// Flux magnitude factor `B'(|ξ|)/|ξ|` applied to `ξ`.
    pub fn flux(&self, x: [f64; 2], z: f64, xi: [f64; 2]) -> std::result::Result<[f64; 2], NFunctionError> {
        if let FluxForm::Custom(f) = &self.form {
            return Ok(f(x, z, xi));
        }
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        if r == 0.0 {
            return Ok([0.0, 0.0]);
        }
        let s = self.form.coefficient(z) * self.b.derivative(r)? / r;
        Ok([s * xi[0], s * xi[1]])
    }

    /// `inf [B̃⁻¹(B(t)) + K_min] / (3 a_max B'(t))` over a geometric grid of
    /// `t` in `[1e-3, sample_range]`; the `z` term is dropped since it only
    /// enlarges the bound.
    pub fn admissible_d(&self) -> Result<f64> {
        if let FluxForm::Custom(_) = self.form {
            return Ok(self.d);
        }
        let conj = self.b.conjugate()?;
        let a_max = match self.form {
            FluxForm::ZPerturbed { theta } => 1.0 + theta.abs() / 2.0,
            _ => 1.0,
        };
        let k_min = self.k_min();
        let mut best = f64::INFINITY;
        for t in geomspace(1e-3, sample_range(&self.b), 64) {
            let num = conj.inverse(self.b.eval(t)?)? + k_min;
            let den = 3.0 * a_max * self.b.derivative(t)?;
            best = best.min(num / den);
        }
        Ok(best)
    }

    /// Sampled check of the structural conditions with a seeded generator.
    pub fn validate(&self, samples: usize, seed: u64) -> Result<OperatorValidation> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conj_b = self.b.conjugate()?;
        let conj_p = self.p.conjugate()?;
        let top = sample_range(&self.b);
        let extent = self.k_field.as_ref().map_or(1.0, |k| k.extent());
        let mut v = OperatorValidation::default();
        let rand_vec = |rng: &mut ChaCha8Rng| -> [f64; 2] {
            let r = 10f64.powf(rng.gen_range(-3.0..top.log10()));
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            [r * a.cos(), r * a.sin()]
        };
        for _ in 0..samples {
            let x = [rng.gen_range(0.0..extent), rng.gen_range(0.0..extent)];
            let z = rng.gen_range(-10.0..10.0);
            let xi = rand_vec(&mut rng);
            let eta = rand_vec(&mut rng);
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            let a = self.flux(x, z, xi)?;
            let bxi = self.b.eval(r)?;
            let tol = 1e-10 * bxi.max(1e-300);
            let coercive = a[0] * xi[0] + a[1] * xi[1] - self.d0 * bxi;
            if coercive < -tol {
                v.coercivity_violations += 1;
            }
            let bound = (conj_b.inverse(bxi)? + conj_p.inverse(self.b.eval(z.abs())?)? + self.k_at(x)) / (3.0 * self.d);
            let amag = (a[0] * a[0] + a[1] * a[1]).sqrt();
            v.worst_growth_ratio = v.worst_growth_ratio.max(amag / bound);
            if amag > bound * (1.0 + 1e-10) {
                v.growth_violations += 1;
            }
            let b2 = self.flux(x, z, eta)?;
            let diff = [xi[0] - eta[0], xi[1] - eta[1]];
            let mono = (a[0] - b2[0]) * diff[0] + (a[1] - b2[1]) * diff[1];
            let scale = (amag + (b2[0] * b2[0] + b2[1] * b2[1]).sqrt()) * (diff[0].abs() + diff[1].abs());
            if mono < -1e-12 * scale {
                v.monotonicity_violations += 1;
            }
            if mono <= 0.0 && diff != [0.0, 0.0] {
                v.strict_monotonicity_violations += 1;
            }
            let zero = self.flux(x, z, [0.0, 0.0])?;
            if zero != [0.0, 0.0] {
                v.nonzero_flux_at_origin += 1;
            }
        }
        v.samples = samples;
        v.k_in_closure = self.k_membership()?;
        v.lower_order_dominated = dominates_much(&self.p, &self.b, &[1.0, 0.1, 0.01], 1e6_f64.min(self.b.domain_cap()), 64)
            .map(|e| e.holds)
            .unwrap_or(false);
        v.strong_monotonicity_declared = self.strongly_monotone;
        Ok(v)
    }

    /// Finiteness of `∫ B̃(K/λ)` for `λ` in `2^{-5}, ..., 2^5`.
    pub fn k_membership(&self) -> Result<bool> {
        let Some(k) = &self.k_field else { return Ok(true) };
        let conj = self.b.conjugate()?;
        for e in -5..=5 {
            match modular(&conj, k, 2f64.powi(e), Exec::Sequential) {
                Ok(m) if m.is_finite() => {}
                Ok(_) | Err(NormError::NFunction(NFunctionError::DomainCapExceeded { .. })) => return Ok(false),
                Err(e) => return Err(e.into()),
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct OperatorValidation {
    pub samples: usize,
    pub coercivity_violations: usize,
    pub growth_violations: usize,
    /// Largest `|A| / bound` seen; at most 1 when the growth bound holds.
    pub worst_growth_ratio: f64,
    pub monotonicity_violations: usize,
    pub strict_monotonicity_violations: usize,
    pub nonzero_flux_at_origin: usize,
    pub k_in_closure: bool,
    pub lower_order_dominated: bool,
    pub strong_monotonicity_declared: bool,
}

impl OperatorValidation {
    pub fn passes(&self) -> bool {
        self.coercivity_violations == 0
            && self.growth_violations == 0
            && self.monotonicity_violations == 0
            && self.nonzero_flux_at_origin == 0
            && self.k_in_closure
            && self.lower_order_dominated
            && (!self.strong_monotonicity_declared || self.strict_monotonicity_violations == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_admissible_d_is_one_third() {
        let op = OperatorSpec::potential(NFunction::power(2.0).unwrap()).unwrap();
        assert!((op.admissible_d().unwrap() - 1.0 / 3.0).abs() < 1e-6);
        assert!((op.d - 0.3).abs() < 1e-6);
    }

    #[test]
    fn built_in_forms_validate() {
        for b in [NFunction::power(2.0).unwrap(), NFunction::scaled_power(4.0, 0.25).unwrap(), NFunction::t_exp_t()] {
            for form in [FluxForm::PotentialGradient, FluxForm::ZPerturbed { theta: 0.5 }] {
                let v = OperatorSpec::new(b.clone(), form).unwrap().validate(500, 3).unwrap();
                assert!(v.passes(), "{} {:?}", b.name(), v);
            }
        }
    }

    #[test]
    fn custom_flux_violating_coercivity_is_flagged() {
        let mut op = OperatorSpec::potential(NFunction::power(2.0).unwrap()).unwrap();
        op.form = FluxForm::Custom(Arc::new(|_, _, xi| [0.1 * xi[0], 0.1 * xi[1]]));
        op.strongly_monotone = false;
        let v = op.validate(200, 1).unwrap();
        assert!(v.coercivity_violations > 0);
        assert!(!v.passes());
    }

    #[test]
    fn unbounded_theta_is_rejected() {
        assert!(OperatorSpec::new(NFunction::power(2.0).unwrap(), FluxForm::ZPerturbed { theta: 1.5 }).is_err());
    }
}
