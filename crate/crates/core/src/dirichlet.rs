//! Truncated generalized Dirichlet series, Epstein zeta functions continued
//! through the incomplete-Gamma (Ewald) split, and the residue of torus zeta
//! functions at `s = d/2`.

use crate::error::{Error, Result};
use crate::lattice::{enumerate_by_norm, Lattice, NormSpectrum, Spectrum};
use crate::specfun::{gamma, recip_gamma, upper_incomplete_gamma};
use std::f64::consts::PI;

/// Default distance from `d/2` required by [`DirichletSeries::evaluate`].
pub const CONVERGENCE_MARGIN: f64 = 0.25;

/// Safety factor on the Weyl constant inferred from the stored terms.
const WEYL_SAFETY: f64 = 2.0;

/// Distance from the pole below which [`epstein_zeta`] refuses to evaluate.
pub const POLE_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletTerm {
    pub eigenvalue: f64,
    /// Coefficient summed over the eigenspace.
    pub coefficient: f64,
    pub multiplicity: usize,
}

/// `Σ c_λ λ^{-s}` over the stored eigenvalue clusters, plus what is known
/// about the omitted part: every eigenvalue up to `cutoff` is stored, and
/// every omitted cluster has `|c_λ| <= coeff_bound · m(λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSeries {
    terms: Vec<DirichletTerm>,
    dim: usize,
    cutoff: f64,
    coeff_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
}

impl DirichletSeries {
    pub fn new(terms: Vec<DirichletTerm>, dim: usize, cutoff: f64, coeff_bound: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("Weyl dimension must be positive".into()));
        }
        if terms.iter().any(|t| !(t.eigenvalue > 0.0) || t.multiplicity == 0) {
            return Err(Error::Invalid("eigenvalues must be positive with positive multiplicity".into()));
        }
        if terms.windows(2).any(|w| w[0].eigenvalue >= w[1].eigenvalue) {
            return Err(Error::Invalid("eigenvalues must be strictly increasing".into()));
        }
        if terms.last().is_some_and(|t| t.eigenvalue > cutoff) {
            return Err(Error::Invalid("cutoff below the largest stored eigenvalue".into()));
        }
        if !(coeff_bound >= 0.0) {
            return Err(Error::Invalid("coefficient bound must be non-negative".into()));
        }
        Ok(Self { terms, dim, cutoff, coeff_bound })
    }

    /// Series with coefficient `per_mode · m(λ)` on every nonzero eigenvalue
    /// of `spectrum`.
    pub fn from_spectrum(spectrum: &Spectrum, dim: usize, per_mode: f64) -> Result<Self> {
        let terms = spectrum
            .nonzero()
            .map(|&(l, m)| DirichletTerm { eigenvalue: l, coefficient: per_mode * m as f64, multiplicity: m })
            .collect();
        Self::new(terms, dim, spectrum.cutoff, per_mode.abs())
    }

    pub fn terms(&self) -> &[DirichletTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn coeff_bound(&self) -> f64 {
        self.coeff_bound
    }

    /// Number of eigenfunctions represented (with multiplicity).
    pub fn mode_count(&self) -> usize {
        self.terms.iter().map(|t| t.multiplicity).sum()
    }

    /// Weyl constant `C` with `N(λ) <= C λ^{d/2}` assumed beyond the cutoff.
    pub fn weyl_constant(&self) -> f64 {
        WEYL_SAFETY * self.mode_count().max(1) as f64 / self.cutoff.powf(self.dim as f64 / 2.0)
    }

    /// Partial sum at `s` and a bound on the omitted tail.
    ///
    /// With `N(λ) <= C λ^{d/2}`, summation by parts gives
    /// `Σ_{λ > Λ} λ^{-s} <= s C Λ^{d/2 - s} / (s - d/2)`.
    pub fn evaluate(&self, s: f64) -> Result<SeriesValue> {
        let half = self.dim as f64 / 2.0;
        if !(s > half + CONVERGENCE_MARGIN) {
            return Err(Error::Domain(format!(
                "series needs s > d/2 + {CONVERGENCE_MARGIN} = {}, got {s}",
                half + CONVERGENCE_MARGIN
            )));
        }
        // largest eigenvalues first: they contribute least
        let value = self
            .terms
            .iter()
            .rev()
            .map(|t| t.coefficient * t.eigenvalue.powf(-s))
            .sum();
        let tail_bound =
            self.coeff_bound * self.weyl_constant() * s * self.cutoff.powf(half - s) / (s - half);
        Ok(SeriesValue { value, tail_bound })
    }
}

/// Epstein zeta function `Z_L(s) = Σ'_{v ∈ L} ‖v‖^{-2s}` on the real line.
///
/// The lattice is rescaled to unit covolume, which balances the direct and
/// dual sums, and the Mellin integral of the theta series is split at
/// `t = 1`:
///
/// `π^{-s} Γ(s) Z(s) = Σ'_v Γ(s, π‖v‖²)(π‖v‖²)^{-s}
///                   + Σ'_w Γ(d/2-s, π‖w‖²)(π‖w‖²)^{s-d/2}
///                   + 1/(s - d/2) - 1/s`.
///
/// Norm lists are enumerated once for `|s| <= s_max`.
#[derive(Debug, Clone)]
pub struct EpsteinZeta {
    dim: usize,
    /// `c` with `c L` of unit covolume.
    scale: f64,
    direct: NormSpectrum,
    dual: NormSpectrum,
    s_max: f64,
}

impl EpsteinZeta {
    pub fn new(l: &Lattice, s_max: f64) -> Result<Self> {
        let d = l.dim();
        let scale = l.volume().powf(-1.0 / d as f64);
        let unit = l.scaled(scale)?;
        // Terms behave like e^{-x}/x once x = π‖v‖² exceeds 2|s| + 2.
        let x_max = 2.0 * s_max.abs() + 2.0 + 50.0 + 2.0 * d as f64;
        let direct = enumerate_by_norm(&unit, x_max / PI)?;
        let dual = enumerate_by_norm(&unit.dual()?, x_max / PI)?;
        Ok(Self { dim: d, scale, direct, dual, s_max: s_max.abs() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates without the pole guard; `s` must avoid `d/2` exactly.
    pub fn eval_unguarded(&self, s: f64) -> Result<f64> {
        if s.abs() > self.s_max + 1e-12 {
            return Err(Error::Domain(format!("|s| = {} exceeds the prepared range {}", s.abs(), self.s_max)));
        }
        let half = self.dim as f64 / 2.0;
        let mut direct = 0.0;
        for &(n, m) in self.direct.entries.iter().skip(1).rev() {
            let x = PI * n;
            direct += m as f64 * upper_incomplete_gamma(s, x)? * x.powf(-s);
        }
        let mut dual = 0.0;
        for &(n, m) in self.dual.entries.iter().skip(1).rev() {
            let x = PI * n;
            dual += m as f64 * upper_incomplete_gamma(half - s, x)? * x.powf(s - half);
        }
        let inner = direct + dual + 1.0 / (s - half);
        let unit_value = PI.powf(s) * (inner * recip_gamma(s) - recip_gamma(s + 1.0));
        // Z_L(s) = c^{2s} Z_{cL}(s)
        Ok(self.scale.powf(2.0 * s) * unit_value)
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        check_epstein_domain(self.dim, s)?;
        self.eval_unguarded(s)
    }
}

fn check_epstein_domain(dim: usize, s: f64) -> Result<()> {
    let half = dim as f64 / 2.0;
    if !s.is_finite() || s.abs() > 20.0 {
        return Err(Error::Domain(format!("Epstein zeta is evaluated for |s| <= 20, got {s}")));
    }
    if (s - half).abs() < POLE_GUARD {
        return Err(Error::PoleProximity { s, pole: half, tol: POLE_GUARD });
    }
    Ok(())
}

/// `Z_L(s)` for real `|s| <= 20`, `s` away from `d/2`.
pub fn epstein_zeta(l: &Lattice, s: f64) -> Result<f64> {
    check_epstein_domain(l.dim(), s)?;
    EpsteinZeta::new(l, s)?.eval(s)
}

/// Spectral zeta function of the flat torus `R^d / L`,
/// `ζ_T(s) = (4π²)^{-s} Z_{L^∨}(s)`.
#[derive(Debug, Clone)]
pub struct TorusZeta {
    dual_epstein: EpsteinZeta,
    volume: f64,
}

impl TorusZeta {
    /// Prepares evaluation for `|s| <= s_max`.
    pub fn new(l: &Lattice, s_max: f64) -> Result<Self> {
        Ok(Self { dual_epstein: EpsteinZeta::new(&l.dual()?, s_max)?, volume: l.volume() })
    }

    pub fn dim(&self) -> usize {
        self.dual_epstein.dim()
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        Ok((4.0 * PI * PI).powf(-s) * self.dual_epstein.eval(s)?)
    }

    fn eval_unguarded(&self, s: f64) -> Result<f64> {
        Ok((4.0 * PI * PI).powf(-s) * self.dual_epstein.eval_unguarded(s)?)
    }

    /// Residue at `s = d/2` as the limit of `(s - d/2) ζ_T(s)`: symmetric
    /// averages at `d/2 ± h` cancel the odd part, and one Richardson step
    /// removes the `h²` term.
    pub fn residue_numeric(&self) -> Result<f64> {
        let c = self.dim() as f64 / 2.0;
        let sym = |h: f64| -> Result<f64> {
            Ok(0.5 * (h * self.eval_unguarded(c + h)? - h * self.eval_unguarded(c - h)?))
        };
        let h = 4e-3;
        let coarse = sym(h)?;
        let fine = sym(h / 2.0)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }
}

pub fn torus_full_zeta(l: &Lattice, s: f64) -> Result<f64> {
    check_epstein_domain(l.dim(), s)?;
    TorusZeta::new(l, s)?.eval(s)
}

/// `∫ a_0 dμ / (Γ(d/2) (4π)^{d/2})`.
pub fn residue_closed_form(l: &Lattice, integral_a0: f64) -> f64 {
    let half = l.dim() as f64 / 2.0;
    integral_a0 / (gamma(half).expect("d/2 > 0") * (4.0 * PI).powf(half))
}

/// Residue of `ζ_T` at `s = d/2`, extracted numerically from the Ewald form.
pub fn residue_numeric(l: &Lattice) -> Result<f64> {
    TorusZeta::new(l, l.dim() as f64 / 2.0 + 0.01)?.residue_numeric()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::torus_spectrum;
    use crate::specfun::riemann_zeta;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct lattice sum over `‖v‖² <= r2` plus the continuum tail
    /// `∫_{r > R} S_{d-1} r^{d-1} r^{-2s} dr / vol`.
    fn direct_sum(l: &Lattice, s: f64, r2: f64) -> (f64, f64) {
        let ns = enumerate_by_norm(l, r2).unwrap();
        let sum: f64 = ns.entries.iter().skip(1).rev().map(|&(n, m)| m as f64 * n.powf(-s)).sum();
        let d = l.dim() as f64;
        let sphere = 2.0 * PI.powf(d / 2.0) / gamma(d / 2.0).unwrap();
        let r = r2.sqrt();
        let tail = sphere * r.powf(d - 2.0 * s) / (2.0 * s - d) / l.volume();
        (sum, tail)
    }

    #[test]
    fn one_term_series() {
        let ser = DirichletSeries::new(
            vec![DirichletTerm { eigenvalue: 1.0, coefficient: 1.0, multiplicity: 1 }],
            1,
            1.0,
            1.0,
        )
        .unwrap();
        let v = ser.evaluate(3.0).unwrap();
        assert_eq!(v.value, 1.0);
        // coeff_bound · C · s · Λ^{d/2-s} / (s - d/2) with C = 2
        assert_relative_eq!(v.tail_bound, 2.0 * 3.0 / 2.5, max_relative = 1e-15);
        assert!(ser.evaluate(0.7).is_err());
    }

    #[test]
    fn series_validation() {
        let t = |e: f64| DirichletTerm { eigenvalue: e, coefficient: 1.0, multiplicity: 1 };
        assert!(DirichletSeries::new(vec![t(2.0), t(1.0)], 1, 3.0, 1.0).is_err());
        assert!(DirichletSeries::new(vec![t(0.0)], 1, 3.0, 1.0).is_err());
        assert!(DirichletSeries::new(vec![t(4.0)], 1, 3.0, 1.0).is_err());
    }

    #[test]
    fn circle_series_against_closed_form() {
        // unit circle, eigenvalues n², coefficient 1 per eigenfunction
        let terms = (1..=1000)
            .map(|n| DirichletTerm { eigenvalue: (n * n) as f64, coefficient: 2.0, multiplicity: 2 })
            .collect();
        let ser = DirichletSeries::new(terms, 1, 1e6, 1.0).unwrap();
        let v = ser.evaluate(2.0).unwrap();
        let exact = 2.0 * riemann_zeta(4.0).unwrap();
        assert!((v.value - exact).abs() <= v.tail_bound);
        assert!(v.tail_bound < 1e-8);
    }

    #[test]
    fn z2_series_against_epstein() {
        let z2 = Lattice::integer(2).unwrap();
        let cutoff = 4.0 * PI * PI * 1e4;
        let ser = DirichletSeries::from_spectrum(&torus_spectrum(&z2, cutoff).unwrap(), 2, 1.0).unwrap();
        let v = ser.evaluate(3.0).unwrap();
        let exact = torus_full_zeta(&z2, 3.0).unwrap();
        assert!((v.value - exact).abs() < 1e-8);
        assert!((v.value - exact).abs() <= v.tail_bound);
    }

    #[test]
    fn epstein_reduces_to_riemann() {
        let z = Lattice::integer(1).unwrap();
        assert_relative_eq!(epstein_zeta(&z, 1.0).unwrap(), PI * PI / 3.0, max_relative = 1e-12);
        assert_relative_eq!(epstein_zeta(&z, 2.0).unwrap(), PI.powi(4) / 45.0, max_relative = 1e-12);
        // continuation: Z(0) = -1, Z(-1/2) = 2ζ(-1) = -1/6, Z(-1) = 2ζ(-2) = 0
        assert_relative_eq!(epstein_zeta(&z, 0.0).unwrap(), -1.0, max_relative = 1e-12);
        assert_relative_eq!(epstein_zeta(&z, -0.5).unwrap(), -1.0 / 6.0, max_relative = 1e-11);
        assert!(epstein_zeta(&z, -1.0).unwrap().abs() < 1e-12);
        assert!(epstein_zeta(&z, -2.0).unwrap().abs() < 1e-12);
        // 2ζ(2s) at a non-integer point
        let s = 1.37;
        assert_relative_eq!(epstein_zeta(&z, s).unwrap(), 2.0 * riemann_zeta(2.0 * s).unwrap(), max_relative = 1e-12);
        // s = 0.25: 2ζ(0.5) = 2 · (-1.4603545088095868)
        assert_relative_eq!(epstein_zeta(&z, 0.25).unwrap(), -2.920_709_017_619_173_6, max_relative = 1e-10);
    }

    #[test]
    fn epstein_z2_closed_forms() {
        let z2 = Lattice::integer(2).unwrap();
        // 4 ζ(s) β(s), values from high-precision arithmetic
        assert_relative_eq!(epstein_zeta(&z2, 2.0).unwrap(), 6.026_812_039_691_94, max_relative = 1e-12);
        assert_relative_eq!(epstein_zeta(&z2, 3.0).unwrap(), 4.658_913_615_603_843, max_relative = 1e-12);
        let (sum, tail) = direct_sum(&z2, 2.0, 1e6);
        assert_relative_eq!(epstein_zeta(&z2, 2.0).unwrap(), sum + tail, max_relative = 1e-6);
    }

    #[test]
    fn epstein_errors() {
        let z2 = Lattice::integer(2).unwrap();
        assert!(matches!(epstein_zeta(&z2, 1.0 + 1e-7), Err(Error::PoleProximity { .. })));
        assert!(epstein_zeta(&z2, 25.0).is_err());
        assert!(epstein_zeta(&z2, 1.0 + 2e-6).is_ok());
    }

    #[test]
    fn continuation_consistency_random_lattices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..20 {
            let d = 1 + i % 3;
            let m = DMatrix::from_fn(d, d, |r, c| if r == c { 1.0 } else { 0.0 } + rng.gen_range(-0.3..0.3));
            let l = Lattice::new(m).unwrap();
            let half = d as f64 / 2.0;
            for s in [half + 0.5, half + 1.0, d as f64, d as f64 + 1.0] {
                let (sum, tail) = direct_sum(&l, s, 1e4);
                let z = epstein_zeta(&l, s).unwrap();
                // continuum tail is an estimate; allow the same order of slack
                assert!(
                    (z - (sum + tail)).abs() <= tail.abs().max(1e-12) + 1e-10 * z.abs(),
                    "d={d} s={s}: {z} vs {sum} + {tail}"
                );
            }
        }
    }

    #[test]
    fn torus_zeta_values() {
        let z = Lattice::integer(1).unwrap();
        let expect = (4.0 * PI * PI).powi(-2) * 2.0 * riemann_zeta(4.0).unwrap();
        assert_relative_eq!(torus_full_zeta(&z, 2.0).unwrap(), expect, max_relative = 1e-12);

        let z2 = Lattice::integer(2).unwrap();
        let cutoff = 4.0 * PI * PI * 1e4;
        let ser = DirichletSeries::from_spectrum(&torus_spectrum(&z2, cutoff).unwrap(), 2, 1.0).unwrap();
        let v = ser.evaluate(3.0).unwrap();
        assert!((torus_full_zeta(&z2, 3.0).unwrap() - v.value).abs() <= v.tail_bound);

        let p = torus_full_zeta(&Lattice::schiemann(true), 3.0).unwrap();
        let m = torus_full_zeta(&Lattice::schiemann(false), 3.0).unwrap();
        assert_relative_eq!(p, m, max_relative = 1e-10);
    }

    #[test]
    fn torus_zeta_positive_and_scaling() {
        for l in [Lattice::integer(1).unwrap(), Lattice::integer(3).unwrap(), Lattice::schiemann(true)] {
            let d = l.dim() as f64;
            for s in [d / 2.0 + 0.3, d / 2.0 + 1.0, d + 1.5] {
                let z = torus_full_zeta(&l, s).unwrap();
                assert!(z > 0.0);
                let c = 1.7;
                let zc = torus_full_zeta(&l.scaled(c).unwrap(), s).unwrap();
                assert_relative_eq!(zc, c.powf(2.0 * s) * z, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn residues() {
        let z2 = Lattice::integer(2).unwrap();
        assert_relative_eq!(residue_closed_form(&z2, 1.0), 1.0 / (4.0 * PI), max_relative = 1e-15);
        let z1 = Lattice::integer(1).unwrap();
        assert_relative_eq!(
            residue_closed_form(&z1, 2.0 * PI),
            2.0 * PI / (PI.sqrt() * (4.0 * PI).sqrt()),
            max_relative = 1e-14
        );
        let z3 = Lattice::integer(3).unwrap();
        let r3 = 1.0 / (gamma(1.5).unwrap() * (4.0 * PI).powf(1.5));
        assert_relative_eq!(residue_closed_form(&z3, 1.0), r3, max_relative = 1e-14);

        assert!((residue_numeric(&z2).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-10);
        assert!((residue_numeric(&z3).unwrap() - r3).abs() < 1e-10);
        let gp = Lattice::schiemann(true);
        let expect = gp.volume() / (gamma(2.0).unwrap() * (4.0 * PI).powi(2));
        assert!((residue_numeric(&gp).unwrap() - expect).abs() < 1e-9);
    }
}
