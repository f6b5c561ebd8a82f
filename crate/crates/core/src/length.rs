//! The length `ℓ(φ) ∈ [0, 1]` of a map between manifolds, the metric
//! `d_σ = δ_1/(1+δ_1)` on zeta functions it is built from, torus bounds, the
//! zeta-distance between tori, and the length of homomorphisms of cyclic
//! groups.

use crate::error::{Error, Result};
use crate::lattice::{enumerate_vectors, is_isospectral, DEFAULT_ENUMERATION_CAP};
use crate::manifolds::{CircleManifold, FlatTorus};
use crate::maps::{determinant_in_place, singular_value_range, spectral_norm, CircleRescale, TorusLinearMap};
use crate::par;
use crate::testfn::{FourierPoly, TrigPoly};
use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

/// Default number of grid points on `[σ, σ+1]`.
pub const DEFAULT_GRID: usize = 11;

/// Squared dual norm up to which torus maps are checked for isospectrality.
pub const ISOSPECTRAL_CHECK_NORM: f64 = 12.0;

/// Seed of the positive test function used for one-variable torus ratios.
const A0_SEED: u64 = 0x00a0;

/// Largest candidate count [`zeta_distance_torus`] will scan.
pub const DISTANCE_CANDIDATE_CAP: u64 = 2_000_000_000;

/// `t/(1+t)`.
pub fn bounded(t: f64) -> f64 {
    if t.is_infinite() {
        1.0
    } else {
        t / (1.0 + t)
    }
}

/// Result of a sup over `s ∈ [σ, σ+1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sup {
    pub value: f64,
    pub at: f64,
    pub grid_spacing: f64,
}

/// `δ_1(f, g) = sup_{σ <= s <= σ+1} |log(f(s)/g(s))|` for positive `f, g`,
/// from a uniform grid followed by golden-section refinement around the best
/// grid point. The result is a lower bound for the true sup.
pub fn delta1<F, G>(f: F, g: G, sigma: f64, grid: usize) -> Result<Sup>
where
    F: Fn(f64) -> Result<f64>,
    G: Fn(f64) -> Result<f64>,
{
    if grid < 2 {
        return Err(Error::Invalid("the s-grid needs at least two points".into()));
    }
    let phi = |s: f64| -> Result<f64> {
        let (a, b) = (f(s)?, g(s)?);
        if !(a > 0.0) || !(b > 0.0) {
            return Err(Error::Positivity(format!("zeta values {a} and {b} at s = {s}")));
        }
        Ok((a.ln() - b.ln()).abs())
    };
    let h = 1.0 / (grid - 1) as f64;
    let mut best = Sup { value: f64::NEG_INFINITY, at: sigma, grid_spacing: h };
    for i in 0..grid {
        let s = sigma + i as f64 * h;
        let v = phi(s)?;
        if v > best.value {
            best.value = v;
            best.at = s;
        }
    }
    let (mut lo, mut hi) = ((best.at - h).max(sigma), (best.at + h).min(sigma + 1.0));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (phi(x1)?, phi(x2)?);
    while hi - lo > 1e-9 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = phi(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = phi(x1)?;
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best.value {
            best.value = v;
            best.at = x;
        }
    }
    Ok(best)
}

/// `d_σ(f, g) = δ_1/(1 + δ_1)`.
pub fn d_sigma<F, G>(f: F, g: G, sigma: f64, grid: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    G: Fn(f64) -> Result<f64>,
{
    Ok(bounded(delta1(f, g, sigma, grid)?.value))
}

/// Constant normalization of the circle zeta functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// The closed forms as printed in the source: radius exponents `2s+1`, `2s-1`.
    Paper,
    /// Eigenfunctions orthonormal in `L²(r dθ)`: exponents `2s`, `2s-2`.
    FirstPrinciples,
}

impl Normalization {
    /// Largest `|exponent|` of `r_1/r_2` over `s ∈ [1, 2]`.
    pub fn length_factor(self) -> f64 {
        match self {
            Self::Paper => 5.0,
            Self::FirstPrinciples => 4.0,
        }
    }

    fn zeta(self, c: &CircleManifold, a0: &FourierPoly, s: f64) -> Result<f64> {
        match self {
            Self::Paper => c.zeta_paper(a0, s),
            Self::FirstPrinciples => c.zeta_first_principles(a0, s),
        }
    }

    fn zeta2(self, c: &CircleManifold, a1: &FourierPoly, s: f64) -> Result<f64> {
        match self {
            Self::Paper => c.zeta2_paper(a1, a1, s),
            Self::FirstPrinciples => c.zeta2_first_principles(a1, a1, s),
        }
    }
}

/// `ℓ(φ_{r1,r2}) = 1/(1 + 1/(5|log(r1/r2)|))`.
pub fn circle_length_closed_form(r1: f64, r2: f64) -> f64 {
    circle_length_closed_form_with(r1, r2, Normalization::Paper)
}

pub fn circle_length_closed_form_with(r1: f64, r2: f64, norm: Normalization) -> f64 {
    let t = norm.length_factor() * (r1 / r2).ln().abs();
    if t == 0.0 {
        0.0
    } else {
        1.0 / (1.0 + 1.0 / t)
    }
}

/// Which zeta family realized a sup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    OneVariable,
    TwoVariable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub description: String,
    pub s: f64,
    pub term: Term,
    /// Dual-lattice coordinates of the witness mode on the target torus.
    pub mode: Option<Vec<i64>>,
    /// Gradient ratio `|A^T λ|²/|λ|²` of that mode.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthReport {
    /// Best `d_1/(1+d_1)` over the searched family.
    pub length_lower: f64,
    /// Certified upper bound, when one is available.
    pub length_upper: Option<f64>,
    /// `log‖A‖_2/(1+log‖A‖_2)` for torus maps.
    pub printed_upper: Option<f64>,
    pub witness: Witness,
    pub family: String,
}

fn check_nonneg(a0: &FourierPoly) -> Result<()> {
    let n = 64 * (a0.max_degree() as usize + 1);
    if a0.integral_dtheta() <= 0.0 || a0.sample(n).iter().any(|&v| v < -1e-12) {
        return Err(Error::Invalid("a_0 must be non-negative and nonzero".into()));
    }
    Ok(())
}

/// `ℓ(φ)` for a circle rescaling, as the sup of `d_1/(1+d_1)` over the
/// given `(a_0, a_1)` pairs with `d = 1`, so `s ∈ [1, 2]`.
pub fn circle_length_computed(
    phi: &CircleRescale,
    family: &[(FourierPoly, FourierPoly)],
    norm: Normalization,
    grid: usize,
) -> Result<LengthReport> {
    if family.is_empty() {
        return Err(Error::Invalid("the test family is empty".into()));
    }
    let x = CircleManifold::new(phi.r_source)?;
    let y = CircleManifold::new(phi.r_target)?;
    let mut best: Option<(f64, Witness)> = None;
    for (i, (a0, a1)) in family.iter().enumerate() {
        check_nonneg(a0)?;
        if a1.is_constant() {
            return Err(Error::Invalid(format!("a_1 of family member {i} is constant")));
        }
        // θ ↦ θ, so pullbacks leave the coefficients unchanged
        let one = delta1(|s| norm.zeta(&x, a0, s), |s| norm.zeta(&y, a0, s), 1.0, grid)?;
        let two = delta1(
            |s| Ok(norm.zeta2(&x, a1, s)?.abs()),
            |s| Ok(norm.zeta2(&y, a1, s)?.abs()),
            1.0,
            grid,
        )?;
        let (sup, term) = if two.value > one.value { (two, Term::TwoVariable) } else { (one, Term::OneVariable) };
        if best.as_ref().is_none_or(|(v, _)| sup.value > *v) {
            let w = Witness {
                description: format!("family member {i}"),
                s: sup.at,
                term,
                mode: None,
                ratio: None,
            };
            best = Some((sup.value, w));
        }
    }
    let (d1, witness) = best.expect("family is nonempty");
    Ok(LengthReport {
        length_lower: bounded(d1),
        length_upper: Some(circle_length_closed_form_with(phi.r_source, phi.r_target, norm)),
        printed_upper: None,
        witness,
        family: format!("{} explicit (a0, a1) pairs, {norm:?} normalization", family.len()),
    })
}

/// `(e_1, e_2)` with `ζ_{S_{2r}}/ζ_{S_r} = 2^{e}` for the one- and
/// two-variable families at `s`, measured from the implemented closed forms.
pub fn circle_ratio_exponents(norm: Normalization, s: f64) -> Result<(f64, f64)> {
    let (x, y) = (CircleManifold::new(2.0)?, CircleManifold::new(1.0)?);
    let a0 = FourierPoly::constant(1.0).add(&FourierPoly::cos(2, 0.5));
    let a1 = FourierPoly::cos(1, 1.0).add(&FourierPoly::sin(3, 0.25));
    let e1 = (norm.zeta(&x, &a0, s)? / norm.zeta(&y, &a0, s)?).abs().log2();
    let e2 = (norm.zeta2(&x, &a1, s)? / norm.zeta2(&y, &a1, s)?).abs().log2();
    Ok((e1, e2))
}

/// Rows `(r, ℓ_paper(φ_{r,1}), ℓ_first_principles(φ_{r,1}))` on a uniform
/// grid of `steps` points over `[r_min, r_max]`.
pub fn fig1_curve(r_min: f64, r_max: f64, steps: usize) -> Result<Vec<(f64, f64, f64)>> {
    if !(r_min > 0.0 && r_max > r_min) || steps < 2 {
        return Err(Error::Invalid("fig1 needs 0 < r_min < r_max and at least two steps".into()));
    }
    Ok((0..steps)
        .map(|i| {
            let r = r_min + (r_max - r_min) * i as f64 / (steps - 1) as f64;
            (
                r,
                circle_length_closed_form_with(r, 1.0, Normalization::Paper),
                circle_length_closed_form_with(r, 1.0, Normalization::FirstPrinciples),
            )
        })
        .collect())
}

/// `log‖A‖_2 / (1 + log‖A‖_2)`, or 0 when `‖A‖_2 <= 1`.
pub fn printed_bound_from_norm(norm: f64) -> f64 {
    if norm <= 1.0 {
        0.0
    } else {
        bounded(norm.ln())
    }
}

fn require_isospectral(map: &TorusLinearMap) -> Result<()> {
    let r = is_isospectral(
        map.source().lattice(),
        map.target().lattice(),
        4.0 * PI * PI * ISOSPECTRAL_CHECK_NORM,
    )?;
    if !r.isospectral {
        return Err(Error::Precondition(format!(
            "tori are not isospectral (first discrepancy at cluster {})",
            r.first_discrepancy.map(|d| d.index).unwrap_or(0)
        )));
    }
    Ok(())
}

/// The bound `log‖A‖_2/(1+log‖A‖_2)` for a map between isospectral tori.
pub fn torus_length_upper_bound(map: &TorusLinearMap) -> Result<f64> {
    require_isospectral(map)?;
    Ok(printed_bound_from_norm(spectral_norm(map.matrix())?))
}

/// `s ↦ log(ζ_{T_1}(s)/ζ_{T_2}(s))` sampled on the grid of `[d, d+1]`.
fn log_zeta_ratio_grid(t1: &FlatTorus, t2: &FlatTorus, grid: usize) -> Result<Vec<(f64, f64)>> {
    let d = t1.dim() as f64;
    (0..grid)
        .map(|i| {
            let s = d + i as f64 / (grid - 1) as f64;
            Ok((s, (t1.zeta(s)? / t2.zeta(s)?).ln()))
        })
        .collect()
}

/// Certified upper bound for `ℓ(φ)` of a torus map, on the `s`-grid.
///
/// The one-variable ratio is `ζ_{T_1}/ζ_{T_2}` for every `a_0`, and the
/// two-variable ratio is `R · ζ_{T_1}/ζ_{T_2}` with `R` a weighted mean of
/// `|A^T λ|²/|λ|² ∈ [σ_min², σ_max²]`, so the sup over test functions is
/// attained at the extreme singular values.
pub fn torus_length_rigorous_upper(map: &TorusLinearMap, grid: usize) -> Result<f64> {
    let (lo, hi) = singular_value_range(map.matrix())?;
    let g = log_zeta_ratio_grid(map.source(), map.target(), grid.max(2))?;
    Ok(bounded(delta_from_extremes(lo, hi, &g)))
}

fn delta_from_extremes(lo: f64, hi: f64, g: &[(f64, f64)]) -> f64 {
    let (llo, lhi) = (2.0 * lo.ln(), 2.0 * hi.ln());
    g.iter()
        .map(|&(_, gs)| gs.abs().max((lhi + gs).abs()).max((llo + gs).abs()))
        .fold(0.0, f64::max)
}

/// Search over single dual modes of the target: the witness achieving the
/// largest two-variable log-ratio, together with the one-variable term.
fn torus_length_search(map: &TorusLinearMap, norm_bound: f64, grid: usize) -> Result<LengthReport> {
    let (t1, t2) = (map.source(), map.target());
    let d = t1.dim() as f64;
    let modes: Vec<Vec<i64>> = enumerate_vectors(t2.dual(), norm_bound, DEFAULT_ENUMERATION_CAP)?
        .into_iter()
        .map(|v| v.coords)
        .filter(|k| k.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0))
        .collect();
    if modes.is_empty() {
        return Err(Error::Invalid(format!("no nonzero dual vector with squared norm <= {norm_bound}")));
    }
    let ratios: Vec<Result<f64>> = par::map(&modes, |k| {
        let a1 = TrigPoly::cos_mode(t2, k, 1.0)?;
        let pulled = a1.pullback_linear(map.matrix(), t1)?;
        Ok((pulled.gradient_pairing(&pulled, t1)? / t1.volume()) / (a1.gradient_pairing(&a1, t2)? / t2.volume()))
    });
    let ratios = ratios.into_iter().collect::<Result<Vec<f64>>>()?;
    // extremes, ties to the lexicographically smallest mode
    let pick = |better: fn(f64, f64) -> bool| {
        let mut j = 0;
        for i in 1..modes.len() {
            if better(ratios[i], ratios[j]) {
                j = i;
            }
        }
        j
    };
    let imax = pick(|a, b| a > b);
    let imin = pick(|a, b| a < b);

    let a0 = TrigPoly::random_nonneg(t2, 1, A0_SEED);
    let a0_pulled = a0.pullback_linear(map.matrix(), t1)?;
    let one = delta1(|s| t1.zeta_family(&a0_pulled, s), |s| t2.zeta_family(&a0, s), d, grid)?;
    let mut best = (one.value, Witness {
        description: "random non-negative a0 of degree 1".into(),
        s: one.at,
        term: Term::OneVariable,
        mode: None,
        ratio: None,
    });
    for i in [imax, imin] {
        let r = ratios[i];
        let two = delta1(|s| Ok(r * t1.zeta(s)?), |s| t2.zeta(s), d, grid)?;
        if two.value > best.0 {
            best = (two.value, Witness {
                description: format!("single mode {:?}", modes[i]),
                s: two.at,
                term: Term::TwoVariable,
                mode: Some(modes[i].clone()),
                ratio: Some(r),
            });
        }
    }
    let upper = torus_length_rigorous_upper(map, grid)?;
    Ok(LengthReport {
        length_lower: bounded(best.0),
        length_upper: Some(upper.max(bounded(best.0))),
        printed_upper: Some(printed_bound_from_norm(spectral_norm(map.matrix())?)),
        witness: best.1,
        family: format!("{} single dual modes with squared norm <= {norm_bound}", modes.len()),
    })
}

/// Lower bound for `ℓ(φ)` of a map between isospectral tori from single-mode
/// test functions `a_1` with `‖λ‖² <= norm_bound`.
pub fn torus_length_lower_bound(map: &TorusLinearMap, norm_bound: f64, grid: usize) -> Result<LengthReport> {
    require_isospectral(map)?;
    torus_length_search(map, norm_bound, grid)
}

/// Same search without the isospectrality precondition.
pub fn torus_length_report(map: &TorusLinearMap, norm_bound: f64, grid: usize) -> Result<LengthReport> {
    torus_length_search(map, norm_bound, grid)
}

/// A distance that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reach {
    Finite(f64),
    Unreachable,
}

impl Reach {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Unreachable => None,
        }
    }
}

impl std::fmt::Display for Reach {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v}"),
            Self::Unreachable => write!(f, "unreachable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionResult {
    pub upper: Reach,
    /// Integer matrix `M` with `A = G_target M G_source^{-1}` of the best candidate.
    pub witness: Option<DMatrix<i64>>,
    /// Lower bound for the length of the best candidate.
    pub witness_lower: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceReport {
    pub one_sided: Reach,
    pub symmetrized: Reach,
    pub forward: DirectionResult,
    pub backward: DirectionResult,
    pub candidates: u64,
    pub unimodular: u64,
}

/// Candidate scan state for one direction within one chunk.
#[derive(Clone)]
struct Best {
    delta: f64,
    m: Option<Vec<i64>>,
}

impl Best {
    fn offer(&mut self, delta: f64, m: &[i64]) {
        let better = match &self.m {
            None => true,
            Some(cur) => delta < self.delta || (delta == self.delta && m < cur.as_slice()),
        };
        if better {
            self.delta = delta;
            self.m = Some(m.to_vec());
        }
    }

    fn merge(mut self, other: Best) -> Best {
        if let Some(m) = &other.m {
            self.offer(other.delta, m);
        }
        self
    }
}

struct Direction {
    /// `A = left · M · right`, row-major.
    left: Vec<f64>,
    right: Vec<f64>,
    g: Vec<(f64, f64)>,
    g_lo: f64,
    g_hi: f64,
    g_abs: f64,
    /// Smallest δ seen by any chunk, as `f64` bits.
    shared: AtomicU64,
}

impl Direction {
    fn new(src: &FlatTorus, dst: &FlatTorus, grid: usize) -> Result<Self> {
        let g = log_zeta_ratio_grid(src, dst, grid)?;
        let row_major = |m: &DMatrix<f64>| m.transpose().as_slice().to_vec();
        Ok(Self {
            left: row_major(dst.lattice().generator()),
            right: row_major(&src.dual().generator().transpose()),
            g_lo: g.iter().map(|x| x.1).fold(f64::INFINITY, f64::min),
            g_hi: g.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max),
            g_abs: g.iter().map(|x| x.1.abs()).fold(0.0, f64::max),
            g,
            shared: AtomicU64::new(f64::INFINITY.to_bits()),
        })
    }

    fn product(&self, m: &[i64], d: usize, lm: &mut [f64], a: &mut [f64]) {
        for i in 0..d {
            for j in 0..d {
                lm[i * d + j] = (0..d).map(|k| self.left[i * d + k] * m[k * d + j] as f64).sum();
            }
        }
        for i in 0..d {
            for j in 0..d {
                a[i * d + j] = (0..d).map(|k| lm[i * d + k] * self.right[k * d + j]).sum();
            }
        }
    }

    /// Lower bound on the candidate's δ from `σ_max >= ‖A‖_F/√d >= σ_min`.
    fn prefilter(&self, a: &[f64], d: usize) -> f64 {
        let l = (a.iter().map(|x| x * x).sum::<f64>() / d as f64).ln();
        (l + self.g_lo).abs().max((l + self.g_hi).abs()).max(self.g_abs)
    }

    fn delta(&self, a: &[f64], d: usize) -> f64 {
        let a = DMatrix::from_row_slice(d, d, a);
        let e = SymmetricEigen::new(a.transpose() * a).eigenvalues;
        let lo = e.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0).sqrt();
        let hi = e.iter().cloned().fold(0.0, f64::max).sqrt();
        delta_from_extremes(lo, hi, &self.g)
    }

    /// Offers a candidate. Pruning is strict against a bound that never drops
    /// below the final minimum, so every minimizer is still evaluated.
    fn consider(&self, best: &mut Best, m: &[i64], d: usize, lm: &mut [f64], a: &mut [f64]) {
        self.product(m, d, lm, a);
        let bound = f64::from_bits(self.shared.load(Ordering::Relaxed)).min(best.delta);
        if self.prefilter(a, d) > bound {
            return;
        }
        let delta = self.delta(a, d);
        best.offer(delta, m);
        self.shared.fetch_min(delta.to_bits(), Ordering::Relaxed);
    }
}

/// Zeta-distance estimate between two tori: the smallest certified length
/// upper bound over maps `A = G_2 M G_1^{-1}` with `M` unimodular and
/// entries in `[-entry_bound, entry_bound]`, in each direction.
pub fn zeta_distance_torus(t1: &FlatTorus, t2: &FlatTorus, entry_bound: u32, grid: usize) -> Result<DistanceReport> {
    let d = t1.dim();
    if t2.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: t2.dim() });
    }
    let b = entry_bound as i64;
    let width = (2 * b + 1) as u64;
    let cells = d * d;
    let candidates = width
        .checked_pow(cells as u32)
        .filter(|&c| c <= DISTANCE_CANDIDATE_CAP)
        .ok_or_else(|| Error::ResourceLimit(format!("{width}^{cells} candidate matrices exceed the scan cap")))?;
    let grid = grid.max(2);
    let fwd = Direction::new(t1, t2, grid)?;
    let bwd = Direction::new(t2, t1, grid)?;

    // each chunk fixes the leading entries and runs an odometer over the rest
    let lead = cells.min(3);
    let chunk_count = width.pow(lead as u32) as i64;
    let results = par::map_range(0..chunk_count, |chunk| {
        let mut best_f = Best { delta: f64::INFINITY, m: None };
        let mut best_b = Best { delta: f64::INFINITY, m: None };
        let mut unimodular = 0u64;
        let mut m = vec![-b; cells];
        let mut idx = chunk as u64;
        for e in m.iter_mut().take(lead) {
            *e = (idx % width) as i64 - b;
            idx /= width;
        }
        let (mut det, mut lm, mut a) = (vec![0i128; cells], vec![0.0; cells], vec![0.0; cells]);
        loop {
            for (x, &y) in det.iter_mut().zip(&m) {
                *x = y as i128;
            }
            if determinant_in_place(&mut det, d).abs() == 1 {
                unimodular += 1;
                fwd.consider(&mut best_f, &m, d, &mut lm, &mut a);
                bwd.consider(&mut best_b, &m, d, &mut lm, &mut a);
            }
            let mut k = lead;
            while k < cells && m[k] == b {
                m[k] = -b;
                k += 1;
            }
            if k == cells {
                break;
            }
            m[k] += 1;
        }
        (best_f, best_b, unimodular)
    });
    let mut best_f = Best { delta: f64::INFINITY, m: None };
    let mut best_b = Best { delta: f64::INFINITY, m: None };
    let mut unimodular = 0;
    for (f, bk, u) in results {
        best_f = best_f.merge(f);
        best_b = best_b.merge(bk);
        unimodular += u;
    }
    let finish = |best: Best, src: &FlatTorus, dst: &FlatTorus| -> Result<DirectionResult> {
        let Some(entries) = best.m else {
            return Ok(DirectionResult { upper: Reach::Unreachable, witness: None, witness_lower: None });
        };
        let m = DMatrix::from_row_slice(d, d, &entries);
        let map = TorusLinearMap::from_integer(&m, src.clone(), dst.clone())?;
        let report = torus_length_search(&map, witness_norm_bound(dst), grid)?;
        Ok(DirectionResult {
            upper: Reach::Finite(report.length_upper.unwrap_or(1.0)),
            witness: Some(m),
            witness_lower: Some(report.length_lower),
        })
    };
    let forward = finish(best_f, t1, t2)?;
    let backward = finish(best_b, t2, t1)?;
    let symmetrized = match (forward.upper, backward.upper) {
        (Reach::Finite(x), Reach::Finite(y)) => Reach::Finite(0.5 * (x + y)),
        _ => Reach::Unreachable,
    };
    Ok(DistanceReport { one_sided: forward.upper, symmetrized, forward, backward, candidates, unimodular })
}

/// Dual norm bound giving a few hundred witness modes.
fn witness_norm_bound(t: &FlatTorus) -> f64 {
    crate::lattice::dual_bound_for_count(t.lattice(), 400.0)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Kernel and cokernel orders of `Z/a → Z/b`, `x ↦ m x`.
pub fn group_hom_orders(a: u64, b: u64, multiplier: i64) -> Result<(u64, u64)> {
    if a == 0 || b == 0 {
        return Err(Error::Invalid("moduli must be positive".into()));
    }
    let m = multiplier.rem_euclid(b as i64) as u64;
    if (m as u128 * a as u128) % b as u128 != 0 {
        return Err(Error::Invalid(format!("x ↦ {multiplier}x is not well defined from Z/{a} to Z/{b}")));
    }
    let coker = gcd(b, m);
    let image = b / coker;
    Ok((a / image, coker))
}

/// `max(log|ker φ|, log|coker φ|)` for `φ: Z/a → Z/b`, `x ↦ m x`.
pub fn group_hom_length(a: u64, b: u64, multiplier: i64) -> Result<f64> {
    let (k, c) = group_hom_orders(a, b, multiplier)?;
    Ok((k as f64).ln().max((c as f64).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn delta1_examples() {
        let f = |s: f64| Ok(s * s + 1.0);
        assert_eq!(delta1(f, f, 1.0, 11).unwrap().value, 0.0);
        let c = delta1(|s| Ok(3.0 * (s + 1.0)), |s| Ok(s + 1.0), 2.0, 5).unwrap();
        assert_relative_eq!(c.value, 3f64.ln(), max_relative = 1e-14);
        let rho: f64 = 0.7;
        let r = delta1(|s| Ok(rho.powf(2.0 * s + 1.0)), |_| Ok(1.0), 1.0, 11).unwrap();
        assert_relative_eq!(r.value, 5.0 * rho.ln().abs(), max_relative = 1e-14);
        assert_relative_eq!(r.at, 2.0, max_relative = 1e-12);
        // interior maximum is found by refinement
        let p = delta1(|s| Ok((-(s - 1.37f64).powi(2)).exp()), |_| Ok(0.5), 1.0, 3).unwrap();
        assert_relative_eq!(p.value, 2f64.ln(), max_relative = 1e-12);
        assert!(matches!(delta1(|_| Ok(-1.0), |_| Ok(1.0), 1.0, 3), Err(Error::Positivity(_))));
    }

    #[test]
    fn d_sigma_examples() {
        assert_eq!(bounded(0.0), 0.0);
        assert_eq!(bounded(1.0), 0.5);
        let v = d_sigma(|s| Ok(2f64.powf(2.0 * s + 1.0)), |_| Ok(1.0), 1.0, 11).unwrap();
        assert_relative_eq!(v, 0.776_072_741_029_521, max_relative = 1e-12);
    }

    #[test]
    fn circle_closed_form() {
        assert_eq!(circle_length_closed_form(1.3, 1.3), 0.0);
        let l = 5.0 * 2f64.ln();
        assert_relative_eq!(circle_length_closed_form(2.0, 1.0), l / (1.0 + l), max_relative = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let (a, b) = (rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0));
            assert_relative_eq!(circle_length_closed_form(a, b), circle_length_closed_form(b, a), max_relative = 1e-14);
        }
    }

    fn family() -> Vec<(FourierPoly, FourierPoly)> {
        vec![
            (FourierPoly::constant(1.0), FourierPoly::cos(1, 1.0)),
            (FourierPoly::random_nonneg(2, 3), FourierPoly::random_real(3, 4).unwrap()),
        ]
    }

    #[test]
    fn circle_computed() {
        for (r1, r2) in [(2.0, 1.0), (0.5, 1.0), (1.0, 1.5)] {
            let phi = CircleRescale::new(r1, r2).unwrap();
            let rep = circle_length_computed(&phi, &family(), Normalization::Paper, 11).unwrap();
            assert_relative_eq!(rep.length_lower, circle_length_closed_form(r1, r2), max_relative = 1e-9);
            assert_eq!(rep.witness.term, Term::OneVariable);
            let fp = circle_length_computed(&phi, &family(), Normalization::FirstPrinciples, 11).unwrap();
            let t = 4.0 * (r1 / r2).ln().abs();
            assert_relative_eq!(fp.length_lower, t / (1.0 + t), max_relative = 1e-9);
        }
        let id = CircleRescale::new(1.2, 1.2).unwrap();
        assert_eq!(circle_length_computed(&id, &family(), Normalization::Paper, 5).unwrap().length_lower, 0.0);
        assert!(circle_length_computed(&id, &[], Normalization::Paper, 5).is_err());
        let bad = vec![(FourierPoly::cos(1, 1.0), FourierPoly::cos(1, 1.0))];
        assert!(circle_length_computed(&id, &bad, Normalization::Paper, 5).is_err());
    }

    #[test]
    fn ratio_exponents() {
        for s in [1.0, 1.5, 2.0] {
            let (p1, p2) = circle_ratio_exponents(Normalization::Paper, s).unwrap();
            assert_relative_eq!(p1, 2.0 * s + 1.0, max_relative = 1e-12);
            assert_relative_eq!(p2, 2.0 * s - 1.0, max_relative = 1e-12);
            let (f1, f2) = circle_ratio_exponents(Normalization::FirstPrinciples, s).unwrap();
            assert_relative_eq!(f1, 2.0 * s, max_relative = 1e-12);
            assert!((f2 - (2.0 * s - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn subadditivity_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let (a, b, c) = (rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0));
            let direct = circle_length_closed_form(a, c);
            assert!(direct <= circle_length_closed_form(a, b) + circle_length_closed_form(b, c) + 1e-12);
        }
    }

    #[test]
    fn group_lengths() {
        assert_eq!(group_hom_length(5, 5, 1).unwrap(), 0.0);
        assert_relative_eq!(group_hom_length(4, 4, 0).unwrap(), 4f64.ln());
        assert_relative_eq!(group_hom_length(6, 4, 2).unwrap(), 3f64.ln());
        assert!(group_hom_length(6, 4, 1).is_err());
        // exhaustive oracle for Z/6 → Z/4, x ↦ 2x
        let image: std::collections::BTreeSet<u64> = (0..6).map(|x| (2 * x) % 4).collect();
        let kernel = (0..6).filter(|x| (2 * x) % 4 == 0).count() as u64;
        assert_eq!(group_hom_orders(6, 4, 2).unwrap(), (kernel, 4 / image.len() as u64));
    }

    #[test]
    fn group_axioms_exhaustive() {
        for a in 1..=12u64 {
            for b in 1..=12u64 {
                for m in 0..b as i64 {
                    let Ok(l1) = group_hom_length(a, b, m) else { continue };
                    let iso = a == b && gcd(b, m as u64) == 1;
                    assert_eq!(l1 == 0.0, iso, "Z/{a} → Z/{b}, x ↦ {m}x");
                    for c in 1..=12u64 {
                        for n in 0..c as i64 {
                            let Ok(l2) = group_hom_length(b, c, n) else { continue };
                            let l = group_hom_length(a, c, n * m).unwrap();
                            assert!(l <= l1 + l2 + 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn torus_identity_and_orthogonal() {
        let t = FlatTorus::from_spec("diag:1,1.4").unwrap();
        let id = TorusLinearMap::new(DMatrix::identity(2, 2), t.clone(), t.clone()).unwrap();
        assert_eq!(torus_length_upper_bound(&id).unwrap(), 0.0);
        let rep = torus_length_lower_bound(&id, 10.0, 5).unwrap();
        assert!(rep.length_lower < 1e-12);
        assert!(rep.length_upper.unwrap() < 1e-12);
        let z2 = FlatTorus::from_spec("Zn:2").unwrap();
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let m = TorusLinearMap::new(rot, z2.clone(), z2.clone()).unwrap();
        assert_eq!(torus_length_upper_bound(&m).unwrap(), 0.0);
        assert!(torus_length_lower_bound(&m, 10.0, 5).unwrap().length_lower < 1e-12);
    }

    #[test]
    fn torus_shear_sandwich() {
        let z2 = FlatTorus::from_spec("Zn:2").unwrap();
        let shear = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let m = TorusLinearMap::new(shear.clone(), z2.clone(), z2.clone()).unwrap();
        let rep = torus_length_lower_bound(&m, 20.0, 5).unwrap();
        assert!(rep.length_lower > 0.0);
        assert!(rep.length_lower <= rep.length_upper.unwrap() + 1e-12);
        // for the golden shear the extreme singular values are φ^{±1}; a mode
        // near the top singular direction comes close to the bound
        let (_, hi) = singular_value_range(&shear).unwrap();
        assert_relative_eq!(hi, (1.0 + 5f64.sqrt()) / 2.0, max_relative = 1e-10);
        assert_relative_eq!(rep.length_upper.unwrap(), bounded(2.0 * hi.ln()), max_relative = 1e-9);
    }

    #[test]
    fn torus_preconditions() {
        let a = FlatTorus::from_spec("Zn:2").unwrap();
        let b = FlatTorus::from_spec("diag:1,2").unwrap();
        let m = TorusLinearMap::change_of_basis(a, b).unwrap();
        assert!(matches!(torus_length_upper_bound(&m), Err(Error::Precondition(_))));
        assert!(matches!(torus_length_lower_bound(&m, 5.0, 5), Err(Error::Precondition(_))));
        // without the precondition the one-variable term gives a positive length
        let rep = torus_length_report(&m, 5.0, 5).unwrap();
        assert!(rep.length_lower > 0.0);
    }

    #[test]
    fn printed_bound_values() {
        assert_eq!(printed_bound_from_norm(1.0), 0.0);
        assert_relative_eq!(printed_bound_from_norm(std::f64::consts::E), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn distance_same_torus() {
        let t = FlatTorus::from_spec("diag:1,1.3").unwrap();
        let r = zeta_distance_torus(&t, &t, 1, 5).unwrap();
        assert!(r.one_sided.value().unwrap() < 1e-12);
        assert!(r.symmetrized.value().unwrap() < 1e-12);
        assert_eq!(r.candidates, 81);
    }

    #[test]
    fn distance_unreachable_and_volume_floor() {
        // the volume ratio forces a positive one-variable term
        let a = FlatTorus::from_spec("Zn:2").unwrap();
        let b = FlatTorus::from_spec("diag:1,2").unwrap();
        let r = zeta_distance_torus(&a, &b, 1, 5).unwrap();
        let floor = delta1(|s| a.zeta(s), |s| b.zeta(s), 2.0, 5).unwrap().value;
        assert!(r.one_sided.value().unwrap() >= bounded(floor) - 1e-12);
        assert!(zeta_distance_torus(&a, &FlatTorus::from_spec("Zn:3").unwrap(), 1, 5).is_err());
        assert_eq!(Reach::Unreachable.to_string(), "unreachable");
    }
}
