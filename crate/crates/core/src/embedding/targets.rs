//! Target growth functions for level-set regularity estimates.
//!
//! With `K` the constant of the truncated energy bound
//! `∫_{|v|<r} B(|∇v|) <= K r`:
//!
//! * `u` target `Φ₁(r) = (B(c₁ r) / (K r))^{N'}`,
//! * gradient target `Ψ₁(θ) = B(θ) / (K̄ φ⁻¹(B(θ)))` where `φ(r) = K r Φ₁(r)`
//!   is the level at which the two tail bounds of the proof coincide,
//! * in the slow case `Φ₂(r) = B_N(c̄ r^{1/N'}) / r` and `Ψ₂ = B / φ_N`,
//! * in the fast case `u` is bounded and the gradient target is `B`.

use serde::Serialize;

use super::{embedding_functions, growth_class, EmbeddingData, EmbeddingError, GrowthClass, Result};
use crate::exec::Exec;
use crate::nfunction::{Growth, NFunction, NFunctionError};
use crate::numerics::roots;

#[derive(Debug, Clone, Serialize)]
pub enum Target {
    Phi1 {
        #[serde(skip)]
        b: NFunction,
        c1: f64,
        k: f64,
        nprime: f64,
    },
    Psi1 {
        #[serde(skip)]
        b: NFunction,
        c1: f64,
        k: f64,
        k_bar: f64,
        nprime: f64,
    },
    Phi2 {
        #[serde(skip)]
        data: Box<EmbeddingData>,
        c_bar: f64,
    },
    Psi2 {
        #[serde(skip)]
        data: Box<EmbeddingData>,
    },
    /// The N-function itself.
    Base {
        #[serde(skip)]
        b: NFunction,
    },
}

type NResult<T> = std::result::Result<T, NFunctionError>;

impl Target {
    pub fn name(&self) -> &'static str {
        match self {
            Target::Phi1 { .. } => "Phi1",
            Target::Psi1 { .. } => "Psi1",
            Target::Phi2 { .. } => "Phi2",
            Target::Psi2 { .. } => "Psi2",
            Target::Base { .. } => "B",
        }
    }

    fn phi1(b: &NFunction, c1: f64, k: f64, nprime: f64, r: f64) -> NResult<f64> {
        if r == 0.0 {
            return Ok(0.0);
        }
        Ok((b.eval(c1 * r)? / (k * r)).powf(nprime))
    }

    /// `φ(r) = K r Φ₁(r)`.
    fn crossover(b: &NFunction, c1: f64, k: f64, nprime: f64, r: f64) -> NResult<f64> {
        Ok(k * r * Self::phi1(b, c1, k, nprime, r)?)
    }
}

impl Growth for Target {
    fn value(&self, t: f64) -> NResult<f64> {
        match self {
            Target::Phi1 { b, c1, k, nprime } => Self::phi1(b, *c1, *k, *nprime, t),
            Target::Psi1 { b, c1, k, k_bar, nprime } => {
                if t == 0.0 {
                    return Ok(0.0);
                }
                let y = b.eval(t)?;
                let r = roots::solve_increasing(|r| Self::crossover(b, *c1, *k, *nprime, r), y, 1.0, b.domain_cap() / c1)?
                    .ok_or(NFunctionError::DomainCapExceeded { t, cap: self.cap() })?;
                Ok(y / (k_bar * r))
            }
            Target::Phi2 { data, c_bar } => {
                if t == 0.0 {
                    return Ok(0.0);
                }
                let x = c_bar * t.powf(1.0 / data.nprime);
                Ok(data.value(x)? / t)
            }
            Target::Psi2 { data } => {
                if t == 0.0 {
                    return Ok(0.0);
                }
                let phi = data.phi_n.eval(t).ok_or(NFunctionError::DomainCapExceeded { t, cap: self.cap() })?;
                Ok(data.base().eval(t)? / phi)
            }
            Target::Base { b } => b.eval(t),
        }
    }

    fn cap(&self) -> f64 {
        match self {
            Target::Phi1 { b, c1, .. } | Target::Psi1 { b, c1, .. } => b.domain_cap() / c1,
            Target::Phi2 { data, c_bar } => (data.cap() / c_bar).powf(data.nprime),
            Target::Psi2 { data } => data.base().domain_cap().min(data.phi_n.x_max()),
            Target::Base { b } => b.domain_cap(),
        }
    }

    fn inverse_value(&self, z: f64) -> NResult<f64> {
        if z <= 0.0 {
            return Ok(0.0);
        }
        match self {
            // Ψ₁(θ) = z  ⟺  φ(r)/r = K̄ z with r = φ⁻¹(B(θ)), then θ = B⁻¹(φ(r)).
            Target::Psi1 { b, c1, k, k_bar, nprime } => {
                let cap = b.domain_cap() / c1;
                let r = roots::solve_increasing(
                    |r| Ok::<_, NFunctionError>(if r == 0.0 { 0.0 } else { Self::crossover(b, *c1, *k, *nprime, r)? / r }),
                    k_bar * z,
                    1.0,
                    cap,
                )?
                .ok_or(NFunctionError::DomainCapExceeded { t: z, cap })?;
                b.inverse(Self::crossover(b, *c1, *k, *nprime, r)?)
            }
            Target::Base { b } => b.inverse(z),
            _ => roots::solve_increasing(|t| self.value(t), z, 1.0, self.cap())?
                .ok_or(NFunctionError::DomainCapExceeded { t: z, cap: self.cap() }),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityTargets {
    pub dim: usize,
    pub growth_class: GrowthClass,
    pub c1: f64,
    pub k: f64,
    pub k_bar: f64,
    pub c_bar: Option<f64>,
    /// Always present for `N >= 2`.
    pub phi1: Option<Target>,
    pub psi1: Option<Target>,
    /// Slow case only.
    pub phi2: Option<Target>,
    pub psi2: Option<Target>,
    /// Fast case: `u` is expected bounded.
    pub u_bounded: bool,
    /// Fast case: gradient measured against `B` itself.
    pub gradient_base: Option<Target>,
}

/// Targets for a problem on a domain of diameter `diam` in dimension `n`.
///
/// `c₁ = 1/(4 diam)` and `c̄ = K^{-1/N}` (the dimensional constant of the
/// slow-case estimate is taken as 1). In one dimension every N-function is
/// treated as fast since `W^{1,1}_0` embeds into `L^∞` there.
pub fn regularity_targets(
    b: &NFunction,
    n: usize,
    k: f64,
    diam: f64,
    override_class: Option<GrowthClass>,
    exec: Exec,
) -> Result<RegularityTargets> {
    if !(k > 0.0 && diam > 0.0) {
        return Err(EmbeddingError::InvalidArgument(format!("need K > 0 and diam > 0, got K={k}, diam={diam}")));
    }
    let c1 = 1.0 / (4.0 * diam);
    if n == 1 {
        return Ok(RegularityTargets {
            dim: 1,
            growth_class: GrowthClass::Fast,
            c1,
            k,
            k_bar: 2.0 * k,
            c_bar: None,
            phi1: None,
            psi1: None,
            phi2: None,
            psi2: None,
            u_bounded: true,
            gradient_base: Some(Target::Base { b: b.clone() }),
        });
    }
    let nprime = n as f64 / (n as f64 - 1.0);
    let k_bar = 2.0 * k.max(k.powf(nprime));
    let class = growth_class(b, n, override_class)?.class;
    let phi1 = Target::Phi1 { b: b.clone(), c1, k, nprime };
    let psi1 = Target::Psi1 { b: b.clone(), c1, k, k_bar, nprime };
    let mut out = RegularityTargets {
        dim: n,
        growth_class: class,
        c1,
        k,
        k_bar,
        c_bar: None,
        phi1: Some(phi1),
        psi1: Some(psi1),
        phi2: None,
        psi2: None,
        u_bounded: false,
        gradient_base: None,
    };
    match class {
        GrowthClass::Slow => {
            let data = Box::new(embedding_functions(b, n, Some(GrowthClass::Slow), exec)?);
            let c_bar = k.powf(-1.0 / n as f64);
            out.c_bar = Some(c_bar);
            out.phi2 = Some(Target::Phi2 { data: data.clone(), c_bar });
            out.psi2 = Some(Target::Psi2 { data });
        }
        GrowthClass::Fast => {
            out.u_bounded = true;
            out.gradient_base = Some(Target::Base { b: b.clone() });
        }
        GrowthClass::Undetermined => {}
    }
    Ok(out)
}
