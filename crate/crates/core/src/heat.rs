//! Heat traces `Θ(t) = Σ e^{-λt}` and heat-kernel diagonals of flat tori,
//! squared-eigenfunction sums on discrete manifolds, and the Mellin identity
//! `Γ(s) ζ(s) = ∫_0^∞ t^{s-1} (Θ(t) - 1) dt`.

use crate::dirichlet::torus_full_zeta;
use crate::error::{Error, Result};
use crate::lattice::{enumerate_vectors, DEFAULT_ENUMERATION_CAP};
use crate::manifolds::{DiscreteManifold, FlatTorus};
use crate::quad::integrate;
use crate::specfun::gamma;
use std::f64::consts::PI;

/// Exponent beyond which terms `e^{-x}` are dropped.
const EXPONENT_CUTOFF: f64 = 46.0;

/// Relative agreement demanded of the x-independent heat diagonal.
pub const DIAGONAL_TOL: f64 = 1e-10;

/// Θ(t) of a flat torus, evaluated by the spectral sum for `t >= t_switch`
/// and through the theta transformation
/// `Θ(t) = vol (4πt)^{-d/2} Σ_{v ∈ Λ} e^{-‖v‖²/(4t)}` below it.
#[derive(Debug, Clone)]
pub struct HeatTrace {
    dim: usize,
    volume: f64,
    t_switch: f64,
    /// `4π²‖w‖²` over the dual lattice, descending, zero excluded.
    eigenvalues: Vec<f64>,
    /// `‖v‖²` over the lattice, descending, zero excluded.
    norms: Vec<f64>,
}

impl HeatTrace {
    pub fn new(t: &FlatTorus) -> Result<Self> {
        let d = t.dim() as f64;
        let volume = t.volume();
        let t_switch = volume.powf(2.0 / d) / (4.0 * PI);
        // lists long enough for each branch on [t_switch/4, 4 t_switch] and
        // everywhere on its own side of t_switch
        let collect = |l, bound: f64, scale: f64| -> Result<Vec<f64>> {
            let mut v: Vec<f64> = enumerate_vectors(l, bound, DEFAULT_ENUMERATION_CAP)?
                .into_iter()
                .filter(|x| x.norm_sq > 0.0)
                .map(|x| scale * x.norm_sq)
                .collect();
            v.sort_by(|a, b| b.total_cmp(a));
            Ok(v)
        };
        let four_pi2 = 4.0 * PI * PI;
        let eigenvalues = collect(t.dual(), 4.0 * EXPONENT_CUTOFF / (four_pi2 * t_switch), four_pi2)?;
        let norms = collect(t.lattice(), 16.0 * t_switch * EXPONENT_CUTOFF, 1.0)?;
        Ok(Self { dim: t.dim(), volume, t_switch, eigenvalues, norms })
    }

    pub fn t_switch(&self) -> f64 {
        self.t_switch
    }

    fn check(t: f64) -> Result<()> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("heat trace needs t > 0, got {t}")));
        }
        Ok(())
    }

    /// `Σ_{λ ≠ 0} e^{-λt}`, valid for `t >= t_switch`.
    pub fn direct_nonzero(&self, t: f64) -> f64 {
        self.eigenvalues.iter().map(|l| (-l * t).exp()).sum()
    }

    /// `Σ_{v ∈ Λ} e^{-‖v‖²/(4t)}` scaled to Θ(t), valid for `t <= t_switch`.
    pub fn theta_branch(&self, t: f64) -> f64 {
        let sum: f64 = self.norms.iter().map(|n| (-n / (4.0 * t)).exp()).sum();
        self.volume * (4.0 * PI * t).powf(-(self.dim as f64) / 2.0) * (1.0 + sum)
    }

    pub fn direct(&self, t: f64) -> f64 {
        1.0 + self.direct_nonzero(t)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Self::check(t)?;
        Ok(if t >= self.t_switch { self.direct(t) } else { self.theta_branch(t) })
    }

    /// `Θ(t) - 1` without cancellation on the direct branch.
    pub fn eval_minus_one(&self, t: f64) -> Result<f64> {
        Self::check(t)?;
        Ok(if t >= self.t_switch { self.direct_nonzero(t) } else { self.theta_branch(t) - 1.0 })
    }

    /// Smallest nonzero eigenvalue.
    pub fn spectral_gap(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::INFINITY)
    }
}

pub fn heat_trace(t: &FlatTorus, time: f64) -> Result<f64> {
    HeatTrace::new(t)?.eval(time)
}

/// `K(t, x, x) = Σ_λ e^{-λt} Σ_{Ψ ⊢ λ} |Ψ(x)|²`, summed over the real
/// eigenbasis `√(2/vol)·cos, sin(2π⟨w, x⟩)`, checked against `Θ(t)/vol`.
pub fn heat_diag_torus(t: &FlatTorus, time: f64, x: &[f64]) -> Result<f64> {
    HeatTrace::check(time)?;
    if x.len() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), got: x.len() });
    }
    let vol = t.volume();
    let four_pi2 = 4.0 * PI * PI;
    let mut terms: Vec<f64> = enumerate_vectors(t.dual(), EXPONENT_CUTOFF / (four_pi2 * time), DEFAULT_ENUMERATION_CAP)?
        .into_iter()
        .filter(|w| w.coords.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0))
        .map(|w| {
            let p = t.dual().point(&w.coords);
            let phase = 2.0 * PI * p.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            let sq = 2.0 / vol * (phase.cos().powi(2) + phase.sin().powi(2));
            sq * (-four_pi2 * w.norm_sq * time).exp()
        })
        .collect();
    terms.sort_by(f64::total_cmp);
    let value = 1.0 / vol + terms.iter().sum::<f64>();
    let expect = heat_trace(t, time)? / vol;
    if (value - expect).abs() > DIAGONAL_TOL * expect {
        return Err(Error::Convergence(format!("heat diagonal {value} differs from Θ/vol = {expect}")));
    }
    Ok(value)
}

/// `σ_λ = Σ_{Ψ ⊢ λ} Ψ²` on the nodes of a discrete manifold.
pub fn sigma_lambda_discrete(m: &DiscreteManifold, cluster_index: usize) -> Result<Vec<f64>> {
    m.sigma_lambda(cluster_index)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MellinCheck {
    /// `Γ(s) ζ_T(s)` from the Epstein evaluation.
    pub lhs: f64,
    /// `∫_0^∞ t^{s-1} (Θ(t) - 1) dt` by quadrature.
    pub rhs: f64,
    pub relative_gap: f64,
}

/// Compares `Γ(s) ζ_T(s)` with the Mellin transform of the heat trace.
/// On `[0, t_switch]` the substitution `t = u²` removes the endpoint
/// singularity; the tail runs until `t^{s-1} e^{-λ_1 t}` is negligible.
pub fn mellin_check(t: &FlatTorus, s: f64) -> Result<MellinCheck> {
    let half = t.dim() as f64 / 2.0;
    if !(s > half) {
        return Err(Error::Domain(format!("the Mellin integral needs s > {half}")));
    }
    let lhs = gamma(s)? * torus_full_zeta(t.lattice(), s)?;
    let h = HeatTrace::new(t)?;
    let ts = h.t_switch();
    let small = integrate(
        |u| 2.0 * u.powf(2.0 * s - 1.0) * h.eval_minus_one((u * u).max(f64::MIN_POSITIVE)).unwrap_or(f64::NAN),
        0.0,
        ts.sqrt(),
        1e-10,
        0.0,
    )?;
    let gap = h.spectral_gap();
    let mut end = ts.max(1.0 / gap);
    while (s - 1.0) * end.ln() - gap * end > -60.0 {
        end *= 2.0;
    }
    let large = integrate(|x| x.powf(s - 1.0) * h.direct_nonzero(x), ts, end, 1e-10, 0.0)?;
    let rhs = small + large;
    Ok(MellinCheck { lhs, rhs, relative_gap: ((rhs - lhs) / lhs).abs() })
}
