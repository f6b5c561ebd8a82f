//! Finite trigonometric polynomials: the test functions `a_0, a_1, a_2` on
//! flat tori (frequencies in the dual lattice) and on circles.

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::manifolds::FlatTorus;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Integrality tolerance for re-expressed frequencies.
pub const TAU_INT: f64 = 1e-6;

/// Floor added by [`TrigPoly::random_nonneg`].
pub const NONNEG_FLOOR: f64 = 1e-3;

const HERMITIAN_TOL: f64 = 1e-12;

fn neg(k: &[i64]) -> Vec<i64> {
    k.iter().map(|x| -x).collect()
}

fn check_hermitian<K: Ord>(coeffs: &BTreeMap<K, Complex64>, flip: impl Fn(&K) -> K) -> Result<()> {
    for (k, c) in coeffs {
        let partner = coeffs.get(&flip(k)).copied().unwrap_or_default();
        if (partner - c.conj()).norm() > HERMITIAN_TOL * c.norm().max(1.0) {
            return Err(Error::Invalid("coefficients are not Hermitian (function is not real)".into()));
        }
    }
    Ok(())
}

/// Real trigonometric polynomial `Σ c_k e^{2πi⟨λ_k, x⟩}` on `R^d / Λ`, with
/// `λ_k = G^{-T} k` for integer coordinates `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    dual: Lattice,
    coeffs: BTreeMap<Vec<i64>, Complex64>,
}

impl TrigPoly {
    /// `dual` is the frequency lattice `Λ^∨`.
    pub fn new(dual: Lattice, coeffs: BTreeMap<Vec<i64>, Complex64>) -> Result<Self> {
        let d = dual.dim();
        if let Some(k) = coeffs.keys().find(|k| k.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: k.len() });
        }
        check_hermitian(&coeffs, |k| neg(k))?;
        let coeffs = coeffs.into_iter().filter(|(_, c)| *c != Complex64::default()).collect();
        Ok(Self { dual, coeffs })
    }

    pub fn constant(t: &FlatTorus, c: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        if c != 0.0 {
            coeffs.insert(vec![0; t.dim()], Complex64::new(c, 0.0));
        }
        Self { dual: t.dual().clone(), coeffs }
    }

    /// `amplitude · cos(2π⟨λ_k, x⟩)`.
    pub fn cos_mode(t: &FlatTorus, k: &[i64], amplitude: f64) -> Result<Self> {
        Self::mode(t, k, Complex64::new(amplitude / 2.0, 0.0))
    }

    /// `amplitude · sin(2π⟨λ_k, x⟩)`.
    pub fn sin_mode(t: &FlatTorus, k: &[i64], amplitude: f64) -> Result<Self> {
        Self::mode(t, k, Complex64::new(0.0, -amplitude / 2.0))
    }

    fn mode(t: &FlatTorus, k: &[i64], c: Complex64) -> Result<Self> {
        if k.len() != t.dim() {
            return Err(Error::DimensionMismatch { expected: t.dim(), got: k.len() });
        }
        if k.iter().all(|&x| x == 0) {
            return Err(Error::Invalid("a mode needs a nonzero frequency".into()));
        }
        let mut coeffs = BTreeMap::new();
        coeffs.insert(k.to_vec(), c);
        coeffs.insert(neg(k), c.conj());
        Ok(Self { dual: t.dual().clone(), coeffs })
    }

    /// `|p|² + ε` for a random complex polynomial `p` with frequencies in the
    /// box `|k_i| <= degree`. Pointwise at least `ε = 1e-3`.
    pub fn random_nonneg(t: &FlatTorus, degree: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let box_ = frequency_box(t.dim(), degree as i64);
        let scale = 1.0 / (box_.len() as f64).sqrt();
        let p: Vec<(Vec<i64>, Complex64)> = box_
            .into_iter()
            .map(|k| (k, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale))
            .collect();
        let mut coeffs: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
        for (k, pk) in &p {
            for (l, pl) in &p {
                let m: Vec<i64> = k.iter().zip(l).map(|(a, b)| a - b).collect();
                *coeffs.entry(m).or_default() += pk * pl.conj();
            }
        }
        *coeffs.entry(vec![0; t.dim()]).or_default() += NONNEG_FLOOR;
        symmetrize(&mut coeffs);
        Self { dual: t.dual().clone(), coeffs }
    }

    /// Random real polynomial with frequencies in `|k_i| <= degree` and at
    /// least one nonzero frequency.
    pub fn random_real(t: &FlatTorus, degree: u32, seed: u64) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Invalid("a non-constant polynomial needs degree >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = BTreeMap::new();
        for k in frequency_box(t.dim(), degree as i64) {
            let m = neg(&k);
            if coeffs.contains_key(&m) {
                continue;
            }
            let c = if k == m {
                Complex64::new(rng.gen_range(-1.0..1.0), 0.0)
            } else {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            };
            coeffs.insert(m, c.conj());
            coeffs.insert(k, c);
        }
        Self::new(t.dual().clone(), coeffs)
    }

    pub fn dual(&self) -> &Lattice {
        &self.dual
    }

    pub fn dim(&self) -> usize {
        self.dual.dim()
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<i64>, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    /// Constant term, the mean value over the torus.
    pub fn mean(&self) -> f64 {
        self.coeff(&vec![0; self.dim()]).re
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.keys().all(|k| k.iter().all(|&x| x == 0))
    }

    /// Largest `|k_i|` over the support.
    pub fn max_degree(&self) -> i64 {
        self.coeffs.keys().flat_map(|k| k.iter().map(|x| x.abs())).max().unwrap_or(0)
    }

    /// Frequency vector `λ_k = G^{-T} k`.
    pub fn frequency(&self, k: &[i64]) -> Vec<f64> {
        self.dual.point(k)
    }

    fn check_torus(&self, t: &FlatTorus) -> Result<()> {
        if self.dual.approx_eq(t.dual(), 1e-12) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch)
        }
    }

    /// `∫_T a dμ = vol · c_0`.
    pub fn integral(&self, t: &FlatTorus) -> Result<f64> {
        self.check_torus(t)?;
        Ok(t.volume() * self.mean())
    }

    /// `∫_T a b dμ = vol · Σ c_k conj(d_k)`.
    pub fn l2_pairing(&self, other: &Self, t: &FlatTorus) -> Result<f64> {
        self.check_torus(t)?;
        other.check_torus(t)?;
        let s: Complex64 = self.coeffs.iter().map(|(k, c)| c * other.coeff(k).conj()).sum();
        Ok(t.volume() * s.re)
    }

    /// `∫_T ∇a_1 · ∇a_2 dμ = vol · Σ 4π²|λ_k|² c_k conj(d_k)`.
    pub fn gradient_pairing(&self, other: &Self, t: &FlatTorus) -> Result<f64> {
        self.check_torus(t)?;
        other.check_torus(t)?;
        let s: Complex64 = self
            .coeffs
            .iter()
            .map(|(k, c)| {
                let l2: f64 = self.frequency(k).iter().map(|x| x * x).sum();
                c * other.coeff(k).conj() * (4.0 * PI * PI * l2)
            })
            .sum();
        Ok(t.volume() * s.re)
    }

    /// Pullback `a ∘ A` along a linear map `A` from `source` into the torus
    /// of `self`. Frequencies move to `A^T λ_k`, i.e. coordinates
    /// `k' = (G_2^{-1} A G_1)^T k`, which must be integral.
    pub fn pullback_linear(&self, a: &DMatrix<f64>, source: &FlatTorus) -> Result<Self> {
        let d = self.dim();
        if a.shape() != (d, d) || source.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: a.nrows().max(source.dim()) });
        }
        // G_2^{-1} = (dual generator of the target)^T
        let m = self.dual.generator().transpose() * a * source.lattice().generator();
        let mt = m.transpose();
        let mut coeffs: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
        for (k, c) in &self.coeffs {
            let mut kk = Vec::with_capacity(d);
            for i in 0..d {
                let x: f64 = (0..d).map(|j| mt[(i, j)] * k[j] as f64).sum();
                let r = x.round();
                if (x - r).abs() > TAU_INT {
                    return Err(Error::Admissibility(format!(
                        "pulled-back frequency coordinate {x} is not an integer"
                    )));
                }
                kk.push(r as i64);
            }
            *coeffs.entry(kk).or_default() += c;
        }
        Ok(Self { dual: source.dual().clone(), coeffs })
    }

    /// Value at `x`; the imaginary part cancels by Hermitian symmetry.
    pub fn evaluate_at(&self, x: &[f64]) -> f64 {
        let mut z = Complex64::default();
        let mut scale = 0.0;
        for (k, c) in &self.coeffs {
            let phase: f64 = self.frequency(k).iter().zip(x).map(|(l, y)| l * y).sum();
            let frac = phase - phase.round();
            z += c * Complex64::from_polar(1.0, 2.0 * PI * frac);
            scale += c.norm() * phase.abs().max(1.0);
        }
        assert!(z.im.abs() <= 1e-12 * scale.max(1.0), "imaginary part {} in a real polynomial", z.im);
        z.re
    }

    /// Gradient at `x`, summed pointwise.
    pub fn gradient_at(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![Complex64::default(); self.dim()];
        for (k, c) in &self.coeffs {
            let lam = self.frequency(k);
            let phase: f64 = lam.iter().zip(x).map(|(l, y)| l * y).sum();
            let e = c * Complex64::from_polar(1.0, 2.0 * PI * (phase - phase.round())) * Complex64::new(0.0, 2.0 * PI);
            for (gi, li) in g.iter_mut().zip(&lam) {
                *gi += e * li;
            }
        }
        g.into_iter().map(|z| z.re).collect()
    }

    fn same_lattice(&self, other: &Self) -> Result<()> {
        if self.dual.approx_eq(&other.dual, 1e-12) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_lattice(other)?;
        let mut coeffs = self.coeffs.clone();
        for (k, c) in &other.coeffs {
            *coeffs.entry(k.clone()).or_default() += c;
        }
        coeffs.retain(|_, c| *c != Complex64::default());
        Ok(Self { dual: self.dual.clone(), coeffs })
    }

    pub fn scale(&self, f: f64) -> Self {
        let coeffs = self.coeffs.iter().filter(|_| f != 0.0).map(|(k, c)| (k.clone(), c * f)).collect();
        Self { dual: self.dual.clone(), coeffs }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_lattice(other)?;
        let mut coeffs: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
        for (k, c) in &self.coeffs {
            for (l, e) in &other.coeffs {
                let m: Vec<i64> = k.iter().zip(l).map(|(a, b)| a + b).collect();
                *coeffs.entry(m).or_default() += c * e;
            }
        }
        symmetrize(&mut coeffs);
        Ok(Self { dual: self.dual.clone(), coeffs })
    }

    /// `Δa` for the non-negative Laplacian `Δ = -Σ ∂_i²`.
    pub fn laplacian(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(k, _)| k.iter().any(|&x| x != 0))
            .map(|(k, c)| {
                let l2: f64 = self.frequency(k).iter().map(|x| x * x).sum();
                (k.clone(), c * (4.0 * PI * PI * l2))
            })
            .collect();
        Self { dual: self.dual.clone(), coeffs }
    }
}

/// Averages each coefficient with the conjugate of its partner, removing
/// rounding asymmetry from products.
fn symmetrize(coeffs: &mut BTreeMap<Vec<i64>, Complex64>) {
    let keys: Vec<Vec<i64>> = coeffs.keys().cloned().collect();
    for k in keys {
        let m = neg(&k);
        if k > m {
            continue;
        }
        let a = coeffs.get(&k).copied().unwrap_or_default();
        let b = coeffs.get(&m).copied().unwrap_or_default();
        let avg = (a + b.conj()) * 0.5;
        coeffs.insert(k.clone(), avg);
        coeffs.insert(m, avg.conj());
    }
    coeffs.retain(|_, c| *c != Complex64::default());
}

/// All integer vectors in `[-degree, degree]^d`, lexicographic.
fn frequency_box(d: usize, degree: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-degree..=degree).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Real trigonometric polynomial `Σ c_n e^{inθ}` on `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FourierPoly {
    coeffs: BTreeMap<i64, Complex64>,
}

impl FourierPoly {
    pub fn new(coeffs: BTreeMap<i64, Complex64>) -> Result<Self> {
        check_hermitian(&coeffs, |n| -n)?;
        Ok(Self { coeffs: coeffs.into_iter().filter(|(_, c)| *c != Complex64::default()).collect() })
    }

    pub fn constant(c: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        if c != 0.0 {
            coeffs.insert(0, Complex64::new(c, 0.0));
        }
        Self { coeffs }
    }

    /// `amplitude · cos(nθ)`.
    pub fn cos(n: i64, amplitude: f64) -> Self {
        if n == 0 {
            return Self::constant(amplitude);
        }
        let c = Complex64::new(amplitude / 2.0, 0.0);
        Self { coeffs: [(n, c), (-n, c)].into_iter().collect() }
    }

    /// `amplitude · sin(nθ)`.
    pub fn sin(n: i64, amplitude: f64) -> Self {
        if n == 0 {
            return Self::default();
        }
        let c = Complex64::new(0.0, -amplitude / 2.0);
        Self { coeffs: [(n, c), (-n, c.conj())].into_iter().collect() }
    }

    /// `|p|² + ε` for a random complex `p` of the given degree.
    pub fn random_nonneg(degree: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = degree as i64;
        let scale = 1.0 / ((2 * d + 1) as f64).sqrt();
        let p: Vec<(i64, Complex64)> = (-d..=d)
            .map(|n| (n, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale))
            .collect();
        let mut coeffs: BTreeMap<i64, Complex64> = BTreeMap::new();
        for (k, pk) in &p {
            for (l, pl) in &p {
                *coeffs.entry(k - l).or_default() += pk * pl.conj();
            }
        }
        *coeffs.entry(0).or_default() += NONNEG_FLOOR;
        let keys: Vec<i64> = coeffs.keys().copied().filter(|&n| n > 0).collect();
        for n in keys {
            let avg = (coeffs[&n] + coeffs[&-n].conj()) * 0.5;
            coeffs.insert(n, avg);
            coeffs.insert(-n, avg.conj());
        }
        coeffs.entry(0).and_modify(|c| c.im = 0.0);
        Self { coeffs }
    }

    /// Random real polynomial of the given degree with a nonzero top mode.
    pub fn random_real(degree: u32, seed: u64) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Invalid("a non-constant polynomial needs degree >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = BTreeMap::new();
        coeffs.insert(0, Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
        for n in 1..=degree as i64 {
            let mut c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if n == degree as i64 && c.norm() < 0.1 {
                c += 0.5;
            }
            coeffs.insert(n, c);
            coeffs.insert(-n, c.conj());
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        self.coeffs.get(&n).copied().unwrap_or_default()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.keys().all(|&n| n == 0)
    }

    pub fn max_degree(&self) -> i64 {
        self.coeffs.keys().map(|n| n.abs()).max().unwrap_or(0)
    }

    /// `∫_0^{2π} a dθ`.
    pub fn integral_dtheta(&self) -> f64 {
        2.0 * PI * self.coeff(0).re
    }

    /// `∫_0^{2π} a b dθ`.
    pub fn pairing_dtheta(&self, other: &Self) -> f64 {
        let s: Complex64 = self.coeffs.iter().map(|(n, c)| c * other.coeff(*n).conj()).sum();
        2.0 * PI * s.re
    }

    /// `∫_0^{2π} a' b' dθ`.
    pub fn derivative_pairing_dtheta(&self, other: &Self) -> f64 {
        let s: Complex64 =
            self.coeffs.iter().map(|(n, c)| c * other.coeff(*n).conj() * (n * n) as f64).sum();
        2.0 * PI * s.re
    }

    /// `∂_θ a`.
    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(n, _)| **n != 0)
            .map(|(n, c)| (*n, c * Complex64::new(0.0, *n as f64)))
            .collect();
        Self { coeffs }
    }

    /// `∂_θ² a`.
    pub fn second_derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(n, _)| **n != 0)
            .map(|(n, c)| (*n, c * -((n * n) as f64)))
            .collect();
        Self { coeffs }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut coeffs: BTreeMap<i64, Complex64> = BTreeMap::new();
        for (k, c) in &self.coeffs {
            for (l, e) in &other.coeffs {
                *coeffs.entry(k + l).or_default() += c * e;
            }
        }
        coeffs.retain(|_, c| *c != Complex64::default());
        Self { coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut coeffs = self.coeffs.clone();
        for (n, c) in &other.coeffs {
            *coeffs.entry(*n).or_default() += c;
        }
        coeffs.retain(|_, c| *c != Complex64::default());
        Self { coeffs }
    }

    pub fn scale(&self, f: f64) -> Self {
        Self { coeffs: self.coeffs.iter().filter(|_| f != 0.0).map(|(n, c)| (*n, c * f)).collect() }
    }

    pub fn evaluate_at(&self, theta: f64) -> f64 {
        let mut z = Complex64::default();
        let mut scale = 0.0;
        for (n, c) in &self.coeffs {
            let phase = (*n as f64 * theta).rem_euclid(2.0 * PI);
            z += c * Complex64::from_polar(1.0, phase);
            scale += c.norm() * (*n as f64 * theta).abs().max(1.0);
        }
        assert!(z.im.abs() <= 1e-12 * scale.max(1.0), "imaginary part {} in a real polynomial", z.im);
        z.re
    }

    /// Values at `θ_j = 2πj/n`.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        (0..n).map(|j| self.evaluate_at(2.0 * PI * j as f64 / n as f64)).collect()
    }
}
