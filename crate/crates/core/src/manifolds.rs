//! Manifold models with their spectra and zeta families: round circles, flat
//! tori and finite discrete Laplacians.

use crate::dirichlet::{DirichletSeries, DirichletTerm, TorusZeta};
use crate::error::{Error, Result};
use crate::lattice::{enumerate_vectors, parse_square_matrix, Lattice, Spectrum, DEFAULT_ENUMERATION_CAP, TAU_NORM};
use crate::specfun::riemann_zeta;
use crate::testfn::{FourierPoly, TrigPoly};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;

/// Relative gap that separates eigenvalue clusters on discrete manifolds.
pub const CLUSTER_GAP: f64 = 1e-6;

/// Kernel threshold relative to the largest eigenvalue.
pub const TAU_ZERO: f64 = 1e-9;

/// Largest `|s|` a [`FlatTorus`] prepares its zeta function for.
const TORUS_S_MAX: f64 = 20.0;

/// The circle `S_r` with metric `r² dθ²`, spectrum `{n²/r²}` (multiplicity 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleManifold {
    radius: f64,
}

fn check_circle_s(s: f64) -> Result<()> {
    if !(s > 0.5) {
        return Err(Error::Domain(format!("circle zeta needs s > 1/2, got {s}")));
    }
    Ok(())
}

impl CircleManifold {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Invalid(format!("radius must be positive, got {radius}")));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn volume(&self) -> f64 {
        2.0 * PI * self.radius
    }

    pub fn spectrum(&self, n_max: u32) -> Spectrum {
        let r2 = self.radius * self.radius;
        let mut entries = vec![(0.0, 1)];
        entries.extend((1..=n_max).map(|n| ((n as f64).powi(2) / r2, 2)));
        Spectrum { entries, cutoff: (n_max as f64).powi(2) / r2 }
    }

    /// `2 r^{2s+1} (∫_0^{2π} a_0 dθ) ζ(2s)`, the closed form as printed in
    /// the source.
    pub fn zeta_paper(&self, a0: &FourierPoly, s: f64) -> Result<f64> {
        check_circle_s(s)?;
        Ok(2.0 * self.radius.powf(2.0 * s + 1.0) * a0.integral_dtheta() * riemann_zeta(2.0 * s)?)
    }

    /// `2 r^{2s-1} (∫_0^{2π} a_1 ∂_θ² a_2 dθ) ζ(2s)`, as printed.
    ///
    /// The relation to the one-variable form is `ζ_{a1,a2} = r^{-2} ζ_{a1 ∂²a2}`;
    /// it is checked on every call.
    pub fn zeta2_paper(&self, a1: &FourierPoly, a2: &FourierPoly, s: f64) -> Result<f64> {
        check_circle_s(s)?;
        let a2pp = a2.second_derivative();
        let v = 2.0 * self.radius.powf(2.0 * s - 1.0) * a1.pairing_dtheta(&a2pp) * riemann_zeta(2.0 * s)?;
        let via_one = self.radius.powi(-2) * self.zeta_paper(&a1.mul(&a2pp), s)?;
        assert!(
            (v - via_one).abs() <= 1e-12 * v.abs().max(via_one.abs()).max(1e-300),
            "closed forms disagree: {v} vs {via_one}"
        );
        Ok(v)
    }

    /// `Σ_n (n²/r²)^{-s} ∫ a_0 σ_n dμ` with eigenfunctions orthonormal in
    /// `L²(r dθ)`. Then `σ_n = 1/(π r)` and the sum is
    /// `r^{2s} π^{-1} (∫ a_0 dθ) ζ(2s)`.
    pub fn zeta_first_principles(&self, a0: &FourierPoly, s: f64) -> Result<f64> {
        check_circle_s(s)?;
        Ok(self.radius.powf(2.0 * s) / PI * a0.integral_dtheta() * riemann_zeta(2.0 * s)?)
    }

    /// Two-variable family through the product rule:
    /// `ζ_{a1,a2} = ζ_{g(da1,da2)}` with `g(da1,da2) = r^{-2} a1' a2'`.
    pub fn zeta2_first_principles(&self, a1: &FourierPoly, a2: &FourierPoly, s: f64) -> Result<f64> {
        check_circle_s(s)?;
        Ok(self.radius.powf(2.0 * s - 2.0) / PI * a1.derivative_pairing_dtheta(a2) * riemann_zeta(2.0 * s)?)
    }

    /// Truncated spectral sum `Σ_{n <= n_max} (n²/r²)^{-s} ∫ a_0 σ_n dμ` in
    /// the first-principles normalization, computed from eigenfunctions.
    pub fn zeta_first_principles_series(&self, a0: &FourierPoly, n_max: u32) -> Result<DirichletSeries> {
        // ∫ a0 (cos² nθ + sin² nθ)/(π r) r dθ, evaluated from the Fourier
        // coefficients of the products
        let r2 = self.radius * self.radius;
        let terms = (1..=n_max as i64)
            .map(|n| {
                let c = FourierPoly::cos(n, 1.0);
                let sn = FourierPoly::sin(n, 1.0);
                let coeff = (a0.pairing_dtheta(&c.mul(&c)) + a0.pairing_dtheta(&sn.mul(&sn))) / PI;
                DirichletTerm { eigenvalue: (n * n) as f64 / r2, coefficient: coeff, multiplicity: 2 }
            })
            .collect();
        // per eigenfunction |∫ a0 Ψ² dμ| <= sup|a0| <= Σ|c_n|
        let bound = a0.coeffs().values().map(|c| c.norm()).sum::<f64>();
        DirichletSeries::new(terms, 1, (n_max as f64).powi(2) / r2, bound)
    }
}

/// The flat torus `R^d / Λ` with `Δ = -Σ ∂_k²`.
#[derive(Debug, Clone)]
pub struct FlatTorus {
    lattice: Lattice,
    dual: Lattice,
    zeta: OnceLock<TorusZeta>,
}

impl PartialEq for FlatTorus {
    fn eq(&self, other: &Self) -> bool {
        self.lattice == other.lattice
    }
}

impl FlatTorus {
    pub fn new(lattice: Lattice) -> Result<Self> {
        let dual = lattice.dual()?;
        Ok(Self { lattice, dual, zeta: OnceLock::new() })
    }

    pub fn from_spec(spec: &str) -> Result<Self> {
        Self::new(Lattice::from_spec(spec)?)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dual(&self) -> &Lattice {
        &self.dual
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn volume(&self) -> f64 {
        self.lattice.volume()
    }

    pub fn spectrum(&self, eigen_bound: f64) -> Result<Spectrum> {
        crate::lattice::torus_spectrum(&self.lattice, eigen_bound)
    }

    fn zeta_engine(&self) -> Result<&TorusZeta> {
        if let Some(z) = self.zeta.get() {
            return Ok(z);
        }
        let z = TorusZeta::new(&self.lattice, TORUS_S_MAX)?;
        Ok(self.zeta.get_or_init(|| z))
    }

    /// `ζ_T(s)` for `|s| <= 20`, away from `d/2`.
    pub fn zeta(&self, s: f64) -> Result<f64> {
        self.zeta_engine()?.eval(s)
    }

    fn check_half_plane(&self, s: f64) -> Result<()> {
        let half = self.dim() as f64 / 2.0;
        if !(s > half) {
            return Err(Error::Domain(format!("torus zeta family needs s > d/2 = {half}, got {s}")));
        }
        Ok(())
    }

    /// `ζ_{T,a_0}(s) = (vol^{-1} ∫ a_0 dμ) ζ_T(s)`.
    pub fn zeta_family(&self, a0: &TrigPoly, s: f64) -> Result<f64> {
        self.check_half_plane(s)?;
        let mean = a0.integral(self)? / self.volume();
        Ok(mean * self.zeta(s)?)
    }

    /// `ζ_{T,a_1,a_2}(s) = (vol^{-1} ∫ ∇a_1·∇a_2 dμ) ζ_T(s)`.
    pub fn zeta2_family(&self, a1: &TrigPoly, a2: &TrigPoly, s: f64) -> Result<f64> {
        self.check_half_plane(s)?;
        let mean = a1.gradient_pairing(a2, self)? / self.volume();
        Ok(mean * self.zeta(s)?)
    }

    /// Dual vectors with `4π²‖w‖² <= eigen_cutoff`, grouped into clusters of
    /// equal eigenvalue (zero vector excluded).
    fn eigen_clusters(&self, eigen_cutoff: f64) -> Result<Vec<(f64, Vec<Vec<i64>>)>> {
        let four_pi2 = 4.0 * PI * PI;
        let mut vs = enumerate_vectors(&self.dual, eigen_cutoff / four_pi2, DEFAULT_ENUMERATION_CAP)?;
        vs.sort_by(|a, b| a.norm_sq.total_cmp(&b.norm_sq).then_with(|| a.coords.cmp(&b.coords)));
        let mut clusters: Vec<(f64, f64, Vec<Vec<i64>>)> = Vec::new();
        for v in vs.into_iter().filter(|v| v.coords.iter().any(|&c| c != 0)) {
            match clusters.last_mut() {
                Some((start, sum, members)) if v.norm_sq - *start <= TAU_NORM * v.norm_sq => {
                    *sum += v.norm_sq;
                    members.push(v.coords);
                }
                _ => clusters.push((v.norm_sq, v.norm_sq, vec![v.coords])),
            }
        }
        Ok(clusters
            .into_iter()
            .map(|(_, sum, members)| (four_pi2 * sum / members.len() as f64, members))
            .collect())
    }

    /// Truncated expansion of `ζ_{T,a_0}`: for each eigenvalue, the sum of
    /// `∫ a_0 Ψ² dμ` over the real orthonormal eigenbasis
    /// `Ψ = (2/vol)^{1/2} cos(2π⟨w,x⟩), (2/vol)^{1/2} sin(2π⟨w,x⟩)`, one pair per `±w`.
    pub fn zeta_family_series(&self, a0: &TrigPoly, eigen_cutoff: f64) -> Result<DirichletSeries> {
        a0.integral(self)?;
        let vol = self.volume();
        let mut terms = Vec::new();
        for (lambda, members) in self.eigen_clusters(eigen_cutoff)? {
            let mut coefficient = 0.0;
            for w in members.iter().filter(|w| w.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)) {
                let c = TrigPoly::cos_mode(self, w, 1.0)?;
                let sn = TrigPoly::sin_mode(self, w, 1.0)?;
                let psi2 = c.mul(&c)?.add(&sn.mul(&sn)?)?.scale(2.0 / vol);
                coefficient += a0.l2_pairing(&psi2, self)?;
            }
            terms.push(DirichletTerm { eigenvalue: lambda, coefficient, multiplicity: members.len() });
        }
        DirichletSeries::new(terms, self.dim(), eigen_cutoff, a0.mean().abs())
    }

    /// Truncated expansion of `tr(a_1 [Δ, a_2] Δ^{-s})` summed eigenfunction
    /// by eigenfunction:
    /// `⟨Ψ_w | a_1 Δ(a_2 Ψ_w) - a_1 a_2 λ Ψ_w⟩
    ///  = Σ_k conj(c_k) d_k 4π² (|λ_k|² + 2⟨λ_k, w⟩)`.
    pub fn zeta2_family_series(&self, a1: &TrigPoly, a2: &TrigPoly, eigen_cutoff: f64) -> Result<DirichletSeries> {
        a1.integral(self)?;
        a2.integral(self)?;
        let four_pi2 = 4.0 * PI * PI;
        let modes: Vec<(Vec<f64>, Complex64)> = a2
            .coeffs()
            .iter()
            .map(|(k, d)| (a2.frequency(k), a1.coeff(k).conj() * d))
            .collect();
        let terms = self
            .eigen_clusters(eigen_cutoff)?
            .into_iter()
            .map(|(lambda, members)| {
                let mut coefficient = Complex64::default();
                for w in &members {
                    let wv = self.dual.point(w);
                    for (lk, cd) in &modes {
                        let l2: f64 = lk.iter().map(|x| x * x).sum();
                        let dot: f64 = lk.iter().zip(&wv).map(|(a, b)| a * b).sum();
                        coefficient += cd * (four_pi2 * (l2 + 2.0 * dot));
                    }
                }
                DirichletTerm { eigenvalue: lambda, coefficient: coefficient.re, multiplicity: members.len() }
            })
            .collect();
        let bound: f64 = modes
            .iter()
            .map(|(lk, cd)| cd.norm() * four_pi2 * lk.iter().map(|x| x * x).sum::<f64>())
            .sum();
        DirichletSeries::new(terms, self.dim(), eigen_cutoff, bound)
    }
}

#[derive(Debug, Clone)]
struct Eigen {
    values: Vec<f64>,
    /// Orthonormal eigenvectors `u` of `M^{-1/2} K M^{-1/2}`, as columns.
    vectors: DMatrix<f64>,
    clusters: Vec<std::ops::Range<usize>>,
    tau_zero: f64,
}

/// A finite Laplacian `Δ = M^{-1} K` with symmetric positive semidefinite
/// stiffness `K` and diagonal mass `M`. Eigenfunctions `Ψ = M^{-1/2} u` are
/// orthonormal for the mass inner product.
#[derive(Debug, Clone)]
pub struct DiscreteManifold {
    stiffness: DMatrix<f64>,
    mass: Vec<f64>,
    labels: Vec<String>,
    eigen: OnceLock<Eigen>,
}

impl DiscreteManifold {
    pub fn new(stiffness: DMatrix<f64>, mass: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        let n = stiffness.nrows();
        if stiffness.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: stiffness.ncols() });
        }
        if n < 2 {
            return Err(Error::Invalid("a discrete manifold needs at least two nodes".into()));
        }
        if mass.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: mass.len() });
        }
        if mass.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::Invalid("mass weights must be positive".into()));
        }
        let labels = labels.unwrap_or_else(|| (0..n).map(|i| i.to_string()).collect());
        if labels.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
        }
        let scale = stiffness.amax();
        if (&stiffness - stiffness.transpose()).amax() > 1e-12 * scale.max(1.0) {
            return Err(Error::Invalid("Laplacian is not symmetric".into()));
        }
        let ones = DVector::from_element(n, 1.0);
        if (&stiffness * ones).amax() > 1e-9 * scale.max(1.0) {
            return Err(Error::Invalid("constants are not in the kernel of the Laplacian".into()));
        }
        let m = Self { stiffness, mass, labels, eigen: OnceLock::new() };
        let e = m.eigen()?;
        let lmax = *e.values.last().unwrap();
        if e.values[0] < -1e-9 * lmax.max(1.0) {
            return Err(Error::Positivity(format!("Laplacian has eigenvalue {}", e.values[0])));
        }
        if e.clusters[0].len() != 1 || e.values[1] <= e.tau_zero {
            return Err(Error::Invalid("eigenvalue 0 is not simple (disconnected graph)".into()));
        }
        Ok(m)
    }

    /// Second-order finite differences on the circle of radius `r` with `n`
    /// equally spaced nodes; lumped mass `h = 2πr/n`.
    pub fn fd_circle(n: usize, r: f64) -> Result<Self> {
        if n < 3 || !(r > 0.0) {
            return Err(Error::Invalid("fd-circle needs n >= 3 and r > 0".into()));
        }
        let h = 2.0 * PI * r / n as f64;
        let k = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 / h
            } else if (i + 1) % n == j || (j + 1) % n == i {
                -1.0 / h
            } else {
                0.0
            }
        });
        let labels = (0..n).map(|j| format!("theta{j}")).collect();
        Self::new(k, vec![h; n], Some(labels))
    }

    /// Graph Laplacian of the path with `n` nodes, unit mass.
    pub fn path(n: usize) -> Result<Self> {
        let k = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (if i > 0 { 1.0 } else { 0.0 }) + (if i + 1 < n { 1.0 } else { 0.0 })
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        Self::new(k, vec![1.0; n], None)
    }

    /// Graph Laplacian of the cycle with `n >= 3` nodes, unit mass.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Invalid("cycle needs n >= 3".into()));
        }
        let k = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else if (i + 1) % n == j || (j + 1) % n == i {
                -1.0
            } else {
                0.0
            }
        });
        Self::new(k, vec![1.0; n], None)
    }

    /// Built-in name (`fd-circle:<n>:<r>`, `path:<n>`, `cycle:<n>`) or a file.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let parse_n = |t: &str| t.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad size in {spec:?}")));
        if let Some(rest) = spec.strip_prefix("fd-circle:") {
            let mut it = rest.split(':');
            let n = parse_n(it.next().unwrap_or(""))?;
            let r = it
                .next()
                .unwrap_or("1")
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad radius in {spec:?}")))?;
            return Self::fd_circle(n, r);
        }
        if let Some(n) = spec.strip_prefix("path:") {
            return Self::path(parse_n(n)?);
        }
        if let Some(n) = spec.strip_prefix("cycle:") {
            return Self::cycle(parse_n(n)?);
        }
        let path = Path::new(spec);
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{spec}: {e}")))?;
            return Self::from_text(&text);
        }
        Err(Error::Parse(format!("unknown discrete manifold {spec:?}")))
    }

    /// Text format: `n`, then `n` rows of the Laplacian, then one row of `n`
    /// mass weights.
    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let n: usize = lines
            .first()
            .ok_or_else(|| Error::Parse("empty input".into()))?
            .trim()
            .parse()
            .map_err(|_| Error::Parse("first line must be the node count".into()))?;
        if lines.len() != n + 2 {
            return Err(Error::Parse(format!("expected {} non-empty lines, got {}", n + 2, lines.len())));
        }
        let k = parse_square_matrix(&lines[..=n].join("\n"))?;
        let mass = lines[n + 1]
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad mass weight {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(k, mass, None)
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    fn eigen(&self) -> Result<&Eigen> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let e = self.decompose()?;
        Ok(self.eigen.get_or_init(|| e))
    }

    fn decompose(&self) -> Result<Eigen> {
        let n = self.len();
        let isq: Vec<f64> = self.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let s = DMatrix::from_fn(n, n, |i, j| isq[i] * self.stiffness[(i, j)] * isq[j]);
        let eig = SymmetricEigen::try_new(s.clone(), f64::EPSILON, 100_000)
            .ok_or_else(|| Error::Convergence("symmetric eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        let norm = s.norm();
        for (c, &l) in values.iter().enumerate() {
            let v = vectors.column(c);
            let res = (&s * v - v * l).norm();
            if res > 1e-9 * norm.max(1.0) {
                return Err(Error::Convergence(format!("eigenpair {c} has residual {res:e}")));
            }
        }
        let lmax = values.last().copied().unwrap_or(0.0).max(0.0);
        let tau_zero = TAU_ZERO * lmax;
        let mut clusters = Vec::new();
        let mut start = 0;
        for i in 1..=n {
            let split = i == n || {
                let (a, b) = (values[i - 1], values[i]);
                b - a > CLUSTER_GAP * b.abs().max(tau_zero) && !(a.abs() <= tau_zero && b.abs() <= tau_zero)
            };
            if split {
                clusters.push(start..i);
                start = i;
            }
        }
        Ok(Eigen { values, vectors, clusters, tau_zero })
    }

    /// Eigenvalues of `Δ`, ascending.
    pub fn eigenvalues(&self) -> Result<&[f64]> {
        Ok(&self.eigen()?.values)
    }

    /// Index ranges of eigenvalue clusters into [`Self::eigenvalues`].
    pub fn clusters(&self) -> Result<&[std::ops::Range<usize>]> {
        Ok(&self.eigen()?.clusters)
    }

    /// Mass-orthonormal eigenfunction `Ψ_j = M^{-1/2} u_j` as node values.
    pub fn eigenfunction(&self, j: usize) -> Result<Vec<f64>> {
        let e = self.eigen()?;
        if j >= self.len() {
            return Err(Error::IndexOutOfRange { index: j, len: self.len() });
        }
        Ok(e.vectors.column(j).iter().zip(&self.mass).map(|(u, m)| u / m.sqrt()).collect())
    }

    pub fn tau_zero(&self) -> Result<f64> {
        Ok(self.eigen()?.tau_zero)
    }

    /// `Δ f = M^{-1} K f`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let kf = &self.stiffness * DVector::from_column_slice(f);
        kf.iter().zip(&self.mass).map(|(x, m)| x / m).collect()
    }

    fn check_len(&self, a: &[f64]) -> Result<()> {
        if a.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: a.len() });
        }
        Ok(())
    }

    /// `Σ_{λ > τ_zero} λ^{-s} Σ_{Ψ ⊢ λ} ⟨Ψ | a | Ψ⟩_mass`.
    pub fn zeta(&self, a: &[f64], s: f64) -> Result<f64> {
        self.check_len(a)?;
        let e = self.eigen()?;
        let mut total = 0.0;
        for (j, &l) in e.values.iter().enumerate().rev() {
            if l <= e.tau_zero {
                continue;
            }
            let c: f64 = e.vectors.column(j).iter().zip(a).map(|(u, ai)| ai * u * u).sum();
            total += c * l.powf(-s);
        }
        Ok(total)
    }

    /// `tr(a_1 [Δ, a_2] Δ^{-s})` over the eigenbasis:
    /// `Σ λ^{-s} ⟨Ψ | a_1 Δ(a_2 Ψ) - a_1 a_2 λ Ψ⟩_mass`.
    pub fn zeta2(&self, a1: &[f64], a2: &[f64], s: f64) -> Result<f64> {
        self.check_len(a1)?;
        self.check_len(a2)?;
        let e = self.eigen()?;
        let mut total = 0.0;
        for j in (0..self.len()).rev() {
            let l = e.values[j];
            if l <= e.tau_zero {
                continue;
            }
            let psi = self.eigenfunction(j)?;
            let a2psi: Vec<f64> = psi.iter().zip(a2).map(|(p, b)| p * b).collect();
            let lap = self.apply(&a2psi);
            let c: f64 = (0..self.len())
                .map(|i| self.mass[i] * psi[i] * a1[i] * (lap[i] - l * a2[i] * psi[i]))
                .sum();
            total += c * l.powf(-s);
        }
        Ok(total)
    }

    /// `σ_λ = Σ_{Ψ ⊢ λ} Ψ²` for the given cluster.
    pub fn sigma_lambda(&self, cluster_index: usize) -> Result<Vec<f64>> {
        let e = self.eigen()?;
        let range = e
            .clusters
            .get(cluster_index)
            .ok_or(Error::IndexOutOfRange { index: cluster_index, len: e.clusters.len() })?
            .clone();
        let mut sigma = vec![0.0; self.len()];
        for j in range {
            for (i, u) in e.vectors.column(j).iter().enumerate() {
                sigma[i] += u * u / self.mass[i];
            }
        }
        Ok(sigma)
    }

    /// Orthonormal eigenvectors `u` (columns) of the symmetrized Laplacian.
    pub fn symmetric_eigenvectors(&self) -> Result<&DMatrix<f64>> {
        Ok(&self.eigen()?.vectors)
    }
}

/// Gaps between the discrete two-variable zeta and the one-variable zeta of
/// `g(da, da) = |a'|²/r²` on FD circles of increasing size.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub ns: Vec<usize>,
    pub gaps: Vec<f64>,
    /// Least-squares slope of `log gap` against `log n`.
    pub slope: f64,
}

pub fn product_rule_convergence(a: &FourierPoly, r: f64, s: f64, ns: &[usize]) -> Result<ConvergenceReport> {
    if ns.len() < 2 {
        return Err(Error::Invalid("need at least two circle sizes".into()));
    }
    let da = a.derivative();
    let mut gaps = Vec::with_capacity(ns.len());
    for &n in ns {
        let m = DiscreteManifold::fd_circle(n, r)?;
        let av = a.sample(n);
        let g: Vec<f64> = da.sample(n).iter().map(|v| v * v / (r * r)).collect();
        gaps.push((m.zeta2(&av, &av, s)? - m.zeta(&g, s)?).abs());
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(ConvergenceReport { ns: ns.to_vec(), gaps, slope: sxy / sxx })
}

/// Node values of `f` on the `n` equally spaced nodes of an FD circle.
pub fn sample_on_circle(f: &FourierPoly, n: usize) -> Vec<f64> {
    f.sample(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn circle_paper_forms() {
        let c1 = CircleManifold::new(1.0).unwrap();
        let one = FourierPoly::constant(1.0);
        let z2 = riemann_zeta(2.0).unwrap();
        assert_relative_eq!(c1.zeta_paper(&one, 1.0).unwrap(), 4.0 * PI * z2, max_relative = 1e-14);
        assert_eq!(c1.zeta_paper(&FourierPoly::cos(3, 1.0), 2.0).unwrap(), 0.0);
        let cos = FourierPoly::cos(1, 1.0);
        assert_relative_eq!(c1.zeta2_paper(&cos, &cos, 1.0).unwrap(), -2.0 * PI * z2, max_relative = 1e-14);
        assert_eq!(c1.zeta2_paper(&one, &cos, 2.0).unwrap(), 0.0);
        assert_eq!(c1.zeta2_paper(&cos, &one, 2.0).unwrap(), 0.0);
        let (r1, r2) = (1.7, 0.6);
        let (a, b) = (CircleManifold::new(r1).unwrap(), CircleManifold::new(r2).unwrap());
        for s in [1.0, 1.3, 2.0] {
            let q = a.zeta_paper(&one, s).unwrap() / b.zeta_paper(&one, s).unwrap();
            assert_relative_eq!(q, (r1 / r2).powf(2.0 * s + 1.0), max_relative = 1e-13);
            let q2 = a.zeta2_paper(&cos, &cos, s).unwrap() / b.zeta2_paper(&cos, &cos, s).unwrap();
            assert_relative_eq!(q2, (r1 / r2).powf(2.0 * s - 1.0), max_relative = 1e-13);
        }
        assert!(c1.zeta_paper(&one, 0.5).is_err());
    }

    #[test]
    fn circle_first_principles() {
        let c1 = CircleManifold::new(1.0).unwrap();
        let one = FourierPoly::constant(1.0);
        let v = c1.zeta_first_principles(&one, 2.0).unwrap();
        assert_relative_eq!(v, 2.0 * riemann_zeta(4.0).unwrap(), max_relative = 1e-14);
        // direct spectral sum with tail bound
        let ser = c1.zeta_first_principles_series(&one, 100_000).unwrap();
        let sv = ser.evaluate(2.0).unwrap();
        assert!((sv.value - v).abs() <= sv.tail_bound);
        assert_eq!(c1.zeta_first_principles(&FourierPoly::cos(2, 1.0), 2.0).unwrap(), 0.0);
        // radius exponent
        let c2 = CircleManifold::new(2.0).unwrap();
        let s = 1.6;
        let e = (c2.zeta_first_principles(&one, s).unwrap() / c1.zeta_first_principles(&one, s).unwrap()).log2();
        assert_relative_eq!(e, 2.0 * s, max_relative = 1e-12);
        let cos = FourierPoly::cos(1, 1.0);
        let e2 = (c2.zeta2_first_principles(&cos, &cos, s).unwrap() / c1.zeta2_first_principles(&cos, &cos, s).unwrap())
            .log2();
        assert_relative_eq!(e2, 2.0 * s - 2.0, max_relative = 1e-12);
    }

    #[test]
    fn circle_series_general_a0() {
        let c = CircleManifold::new(0.8).unwrap();
        let a0 = FourierPoly::random_nonneg(3, 5);
        let ser = c.zeta_first_principles_series(&a0, 20_000).unwrap();
        let sv = ser.evaluate(1.5).unwrap();
        assert!((sv.value - c.zeta_first_principles(&a0, 1.5).unwrap()).abs() <= sv.tail_bound);
    }

    fn torus(spec: &str) -> FlatTorus {
        FlatTorus::from_spec(spec).unwrap()
    }

    #[test]
    fn torus_family_examples() {
        let t = torus("Zn:2");
        let one = TrigPoly::constant(&t, 1.0);
        assert_relative_eq!(t.zeta_family(&one, 3.0).unwrap(), t.zeta(3.0).unwrap(), max_relative = 1e-15);
        let m = TrigPoly::cos_mode(&t, &[1, 1], 1.0).unwrap();
        assert_eq!(t.zeta_family(&m, 3.0).unwrap(), 0.0);
        let a0 = TrigPoly::constant(&t, 2.0).add(&m).unwrap();
        let v = t.zeta_family(&a0, 3.0).unwrap();
        assert_relative_eq!(v, 2.0 * t.zeta(3.0).unwrap(), max_relative = 1e-14);
        let ser = t.zeta_family_series(&a0, 4.0 * PI * PI * 400.0).unwrap();
        let sv = ser.evaluate(3.0).unwrap();
        assert!((sv.value - v).abs() <= sv.tail_bound, "{} {} {}", sv.value, v, sv.tail_bound);
        assert!(t.zeta_family(&a0, 1.0).is_err());
    }

    #[test]
    fn torus_zeta2_examples() {
        let t = torus("Zn:2");
        let c = TrigPoly::constant(&t, 1.0);
        let m = TrigPoly::cos_mode(&t, &[1, 0], 1.0).unwrap();
        assert_eq!(t.zeta2_family(&c, &m, 3.0).unwrap(), 0.0);
        // mean of |∇ cos(2π x_1)|² is 2π²
        assert_relative_eq!(
            t.zeta2_family(&m, &m, 3.0).unwrap(),
            2.0 * PI * PI * t.zeta(3.0).unwrap(),
            max_relative = 1e-14
        );
        let a1 = TrigPoly::random_real(&t, 2, 1).unwrap();
        let a2 = TrigPoly::random_real(&t, 2, 2).unwrap();
        let q = |a: &TrigPoly| t.zeta2_family(a, a, 3.0).unwrap();
        let lhs = 4.0 * t.zeta2_family(&a1, &a2, 3.0).unwrap();
        let rhs = q(&a1.add(&a2).unwrap()) - q(&a1.sub(&a2).unwrap());
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn torus_zeta2_series_matches_closed_form() {
        for spec in ["Zn:2", "diag:1,1.3"] {
            let t = torus(spec);
            let a1 = TrigPoly::random_real(&t, 1, 3).unwrap();
            let a2 = TrigPoly::random_real(&t, 1, 4).unwrap();
            let ser = t.zeta2_family_series(&a1, &a2, 4.0 * PI * PI * 900.0).unwrap();
            let sv = ser.evaluate(3.0).unwrap();
            let v = t.zeta2_family(&a1, &a2, 3.0).unwrap();
            assert!((sv.value - v).abs() <= sv.tail_bound, "{spec}: {} vs {v} ± {}", sv.value, sv.tail_bound);
        }
    }

    #[test]
    fn torus_coefficients_match_multiplicities() {
        for spec in ["schiemann:+", "schiemann:-", "diag:1,2,0.7"] {
            let t = torus(spec);
            let a0 = TrigPoly::random_nonneg(&t, 1, 9);
            let ser = t.zeta_family_series(&a0, 4.0 * PI * PI * 6.0).unwrap();
            assert!(ser.terms().len() >= 10, "{spec}: {}", ser.terms().len());
            let int = a0.integral(&t).unwrap();
            for term in &ser.terms()[..10] {
                let expect = int * term.multiplicity as f64 / t.volume();
                assert_relative_eq!(term.coefficient, expect, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn discrete_basics() {
        let p2 = DiscreteManifold::path(2).unwrap();
        assert_relative_eq!(p2.zeta(&[1.0, 1.0], 1.0).unwrap(), 0.5, max_relative = 1e-14);
        let m = DiscreteManifold::cycle(7).unwrap();
        let trace: f64 = m.eigenvalues().unwrap().iter().skip(1).map(|l| l.powf(-1.5)).sum();
        assert_relative_eq!(m.zeta(&[1.0; 7], 1.5).unwrap(), trace, max_relative = 1e-12);
        // commutator with a constant vanishes; so does the trace against a constant a1
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert!(m.zeta2(&a, &[2.0; 7], 2.0).unwrap().abs() < 1e-12);
        assert!(m.zeta2(&[1.0; 7], &a, 2.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn discrete_validation() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -0.5, 1.0]);
        assert!(DiscreteManifold::new(k, vec![1.0; 2], None).is_err());
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(DiscreteManifold::new(k, vec![1.0; 2], None).is_err());
        let k = DMatrix::zeros(3, 3);
        assert!(DiscreteManifold::new(k, vec![1.0; 3], None).is_err());
        let k = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!(DiscreteManifold::new(k, vec![1.0, -1.0], None).is_err());
        assert!(DiscreteManifold::from_text("2\n1 -1\n-1 1\n1 1\n").is_ok());
        assert!(DiscreteManifold::from_text("2\n1 -1\n-1 1\n").is_err());
    }

    #[test]
    fn eigen_residuals_and_orthonormality() {
        let m = DiscreteManifold::fd_circle(32, 1.3).unwrap();
        let n = m.len();
        for j in [0, 5, 31] {
            let psi = m.eigenfunction(j).unwrap();
            let lap = m.apply(&psi);
            let l = m.eigenvalues().unwrap()[j];
            for i in 0..n {
                assert!((lap[i] - l * psi[i]).abs() < 1e-9);
            }
            let norm: f64 = psi.iter().zip(m.mass()).map(|(p, w)| p * p * w).sum();
            assert_relative_eq!(norm, 1.0, max_relative = 1e-12);
        }
        // FD eigenvalues (4/h²) sin²(πk/n) pair up except k = 0 and k = n/2
        let h = 2.0 * PI * 1.3 / 32.0;
        let exact = 4.0 / (h * h) * (PI * 3.0 / 32.0).sin().powi(2);
        assert_relative_eq!(m.eigenvalues().unwrap()[5], exact, max_relative = 1e-10);
        assert_eq!(m.clusters().unwrap()[2].len(), 2);
    }

    #[test]
    fn fd_circle_against_continuum() {
        let n = 256;
        let m = DiscreteManifold::fd_circle(n, 1.0).unwrap();
        let c = CircleManifold::new(1.0).unwrap();
        // a ≡ 1: truncated to the same number of nonzero eigenvalues
        let discrete = m.zeta(&vec![1.0; n], 2.0).unwrap();
        let ser = c.zeta_first_principles_series(&FourierPoly::constant(1.0), (n / 2) as u32).unwrap();
        let terms: f64 = ser.terms().iter().map(|t| t.coefficient * t.eigenvalue.powi(-2)).sum();
        assert!((discrete - terms).abs() / terms < 1e-2);
        // two-variable family against the first-principles closed form
        let cos = FourierPoly::cos(1, 1.0);
        let a = cos.sample(n);
        let d2 = m.zeta2(&a, &a, 2.0).unwrap();
        let cont = c.zeta2_first_principles(&cos, &cos, 2.0).unwrap();
        assert!((d2 - cont).abs() / cont < 1e-2, "{d2} vs {cont}");
    }

    #[test]
    fn product_rule_rate() {
        let rep = product_rule_convergence(&FourierPoly::cos(1, 1.0), 1.0, 2.0, &[64, 128, 256]).unwrap();
        assert!((rep.slope + 2.0).abs() < 0.3, "{rep:?}");
        let rep = product_rule_convergence(&FourierPoly::random_real(2, 5).unwrap(), 1.7, 2.0, &[64, 128]).unwrap();
        assert!(rep.gaps[1] < rep.gaps[0]);
    }
}
