//! Full-rank lattices, their duals, and enumeration of lattice vectors by
//! squared norm.

use crate::error::{Error, Result};
use crate::par;
use nalgebra::DMatrix;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

/// Relative tolerance for merging nearly equal squared norms.
pub const TAU_NORM: f64 = 1e-9;

/// Default cap on the number of enumerated vectors.
pub const DEFAULT_ENUMERATION_CAP: usize = 10_000_000;

/// A full-rank lattice `L = G Z^d`; the columns of `generator` are the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    generator: DMatrix<f64>,
}

impl Lattice {
    pub fn new(generator: DMatrix<f64>) -> Result<Self> {
        let (r, c) = generator.shape();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, got: c });
        }
        if r == 0 {
            return Err(Error::Invalid("lattice dimension must be positive".into()));
        }
        if generator.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("generator has non-finite entries".into()));
        }
        let scale = generator.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::SingularLattice(0.0));
        }
        let det = (&generator / scale).determinant();
        if det.abs() <= 1e-12 {
            return Err(Error::SingularLattice(det));
        }
        Ok(Self { generator })
    }

    /// `Z^d` with the identity generator.
    pub fn integer(dim: usize) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim))
    }

    /// Diagonal lattice with the given axis lengths.
    pub fn diagonal(lengths: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(lengths)))
    }

    /// Schiemann's pair of isospectral, non-isometric four-dimensional
    /// lattices. `plus = true` selects `G_+`.
    pub fn schiemann(plus: bool) -> Self {
        let e = if plus { 1.0 } else { -1.0 };
        let (r7, r13, r19) = (7f64.sqrt(), 13f64.sqrt(), 19f64.sqrt());
        #[rustfmt::skip]
        let rows = [
            e * 3.0, -r7,           -r13,           -r19,
            1.0,     e * 3.0 * r7,  r13,            -r19,
            1.0,     -r7,           e * 3.0 * r13,  r19,
            1.0,     r7,            r13,            e * 3.0 * r19,
        ];
        let g = DMatrix::from_row_slice(4, 4, &rows) / (2.0 * 3f64.sqrt());
        Self::new(g).expect("Schiemann generators are regular")
    }

    /// Parses a built-in name (`Zn:<d>`, `schiemann:+`, `schiemann:-`,
    /// `diag:<a>,<b>,...`) or falls back to reading a lattice file.
    pub fn from_spec(spec: &str) -> Result<Self> {
        if let Some(d) = spec.strip_prefix("Zn:") {
            let d: usize = d.trim().parse().map_err(|_| Error::Parse(format!("bad dimension in {spec:?}")))?;
            return Self::integer(d);
        }
        match spec {
            "schiemann:+" => return Ok(Self::schiemann(true)),
            "schiemann:-" => return Ok(Self::schiemann(false)),
            _ => {}
        }
        if let Some(list) = spec.strip_prefix("diag:") {
            let lengths = list
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad entry in {spec:?}"))))
                .collect::<Result<Vec<_>>>()?;
            return Self::diagonal(&lengths);
        }
        let path = Path::new(spec);
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{spec}: {e}")))?;
            return Self::from_text(&text);
        }
        Err(Error::Parse(format!("unknown lattice {spec:?} (not a built-in name or readable file)")))
    }

    /// Reads the text format: a line with `d`, then `d` rows of `d` numbers.
    pub fn from_text(text: &str) -> Result<Self> {
        Self::new(parse_square_matrix(text)?)
    }

    pub fn to_text(&self) -> String {
        format_square_matrix(&self.generator)
    }

    pub fn dim(&self) -> usize {
        self.generator.nrows()
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    /// Covolume `|det G|`, the volume of the torus `R^d / L`.
    pub fn volume(&self) -> f64 {
        self.generator.determinant().abs()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.generator.transpose() * &self.generator
    }

    /// Dual lattice with generator `G^{-T}`.
    pub fn dual(&self) -> Result<Self> {
        let inv = self
            .generator
            .clone()
            .try_inverse()
            .ok_or(Error::SingularLattice(0.0))?;
        Self::new(inv.transpose())
    }

    /// `c L`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.generator * c)
    }

    /// Entrywise generator comparison; no basis change is attempted.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim()
            && self
                .generator
                .iter()
                .zip(other.generator.iter())
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Point `G k` for integer coordinates `k`.
    pub fn point(&self, coords: &[i64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.generator[(i, j)] * coords[j] as f64).sum())
            .collect()
    }
}

pub(crate) fn parse_square_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let d: usize = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?
        .parse()
        .map_err(|_| Error::Parse("first line must be the dimension".into()))?;
    let mut data = Vec::with_capacity(d * d);
    for row in 0..d {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("missing row {}", row + 1)))?;
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != d {
            return Err(Error::Parse(format!("row {} has {} entries, expected {d}", row + 1, vals.len())));
        }
        data.extend(vals);
    }
    Ok(DMatrix::from_row_slice(d, d, &data))
}

pub(crate) fn format_square_matrix(m: &DMatrix<f64>) -> String {
    let mut out = format!("{}\n", m.nrows());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:.17e}", m[(r, c)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Sorted squared norms with multiplicities; every squared norm up to `bound`
/// is present.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSpectrum {
    pub entries: Vec<(f64, usize)>,
    pub bound: f64,
}

impl NormSpectrum {
    pub fn total_count(&self) -> usize {
        self.entries.iter().map(|e| e.1).sum()
    }
}

/// Sorted `(eigenvalue, multiplicity)` pairs, complete up to `cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub entries: Vec<(f64, usize)>,
    pub cutoff: f64,
}

impl Spectrum {
    /// Entries with eigenvalue strictly above zero.
    pub fn nonzero(&self) -> impl Iterator<Item = &(f64, usize)> {
        self.entries.iter().filter(|e| e.0 > 0.0)
    }
}

/// A lattice vector as integer coordinates plus its squared length.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVector {
    pub coords: Vec<i64>,
    pub norm_sq: f64,
}

struct Pruning {
    /// Column-major generator, used to recompute norms exactly.
    gen: Vec<f64>,
    /// Upper Cholesky factor `R` of the Gram matrix, `Q = R^T R`.
    r: Vec<f64>,
    d: usize,
}

impl Pruning {
    fn new(l: &Lattice) -> Result<Self> {
        let d = l.dim();
        let chol = l
            .gram()
            .cholesky()
            .ok_or_else(|| Error::SingularLattice(l.volume()))?;
        let r = chol.l().transpose();
        Ok(Self {
            gen: l.generator.as_slice().to_vec(),
            r: r.as_slice().to_vec(),
            d,
        })
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.r[i + j * self.d]
    }

    fn norm_sq(&self, x: &[i64]) -> f64 {
        let d = self.d;
        let mut s = 0.0;
        for i in 0..d {
            let mut v = 0.0;
            for j in 0..d {
                v += self.gen[i + j * d] * x[j] as f64;
            }
            s += v * v;
        }
        s
    }

    /// Radius of the admissible interval for `x_i` and its center, given the
    /// already fixed coordinates `x_{i+1..d}` and the residual budget.
    fn interval(&self, i: usize, x: &[i64], budget: f64) -> (f64, f64) {
        let rii = self.r(i, i);
        let mut c = 0.0;
        for j in i + 1..self.d {
            c -= self.r(i, j) * x[j] as f64;
        }
        c /= rii;
        let half = if budget > 0.0 { budget.sqrt() / rii } else { 0.0 };
        (c, half)
    }

    /// Depth-first enumeration of the coordinates below `level`.
    fn descend(
        &self,
        level: usize,
        x: &mut [i64],
        budget: f64,
        bound: f64,
        out: &mut Vec<LatticeVector>,
        counter: &AtomicUsize,
        cap: usize,
        aborted: &AtomicBool,
    ) {
        if aborted.load(Ordering::Relaxed) {
            return;
        }
        let (c, half) = self.interval(level, x, budget);
        let lo = (c - half).ceil() as i64;
        let hi = (c + half).floor() as i64;
        let rii = self.r(level, level);
        for xi in lo..=hi {
            x[level] = xi;
            let t = rii * (xi as f64 - c);
            let rest = budget - t * t;
            if rest < -1e-12 * bound.max(1.0) {
                continue;
            }
            if level == 0 {
                let n = self.norm_sq(x);
                if n <= bound {
                    if counter.fetch_add(1, Ordering::Relaxed) + 1 > cap {
                        aborted.store(true, Ordering::Relaxed);
                        return;
                    }
                    out.push(LatticeVector { coords: x.to_vec(), norm_sq: n });
                }
            } else {
                self.descend(level - 1, x, rest.max(0.0), bound, out, counter, cap, aborted);
            }
        }
        x[level] = 0;
    }
}

/// All vectors `v ∈ L` with `‖v‖² <= bound · (1 + TAU_NORM)`, in a
/// deterministic order (outermost coordinate ascending, then depth-first).
pub fn enumerate_vectors(l: &Lattice, bound: f64, cap: usize) -> Result<Vec<LatticeVector>> {
    if !(bound > 0.0) || !bound.is_finite() {
        return Err(Error::Domain(format!("enumeration bound must be positive, got {bound}")));
    }
    let pr = Pruning::new(l)?;
    let d = pr.d;
    let accept = bound * (1.0 + TAU_NORM);
    let prune = accept * (1.0 + 1e-9);
    let top = d - 1;
    let rtop = pr.r(top, top);
    let half = (prune.sqrt() / rtop).floor() as i64;
    let counter = AtomicUsize::new(0);
    let aborted = AtomicBool::new(false);
    let chunks = par::map_range(-half..half + 1, |xt| {
        let mut out = Vec::new();
        let t = rtop * xt as f64;
        let rest = prune - t * t;
        if rest < 0.0 {
            return out;
        }
        let mut x = vec![0i64; d];
        x[top] = xt;
        if top == 0 {
            let n = pr.norm_sq(&x);
            if n <= accept {
                if counter.fetch_add(1, Ordering::Relaxed) + 1 > cap {
                    aborted.store(true, Ordering::Relaxed);
                } else {
                    out.push(LatticeVector { coords: x, norm_sq: n });
                }
            }
        } else {
            pr.descend(top - 1, &mut x, rest, accept, &mut out, &counter, cap, &aborted);
        }
        out
    });
    if aborted.load(Ordering::Relaxed) {
        return Err(Error::ResourceLimit(format!(
            "more than {cap} lattice vectors with squared norm <= {bound}"
        )));
    }
    Ok(chunks.into_iter().flatten().collect())
}

fn cluster_norms(mut norms: Vec<f64>, bound: f64) -> NormSpectrum {
    norms.sort_by(f64::total_cmp);
    let mut entries: Vec<(f64, usize)> = Vec::new();
    let mut start = f64::NAN;
    let mut acc = 0.0;
    for n in norms {
        match entries.last_mut() {
            Some(last) if n - start <= TAU_NORM * n.max(start) => {
                last.1 += 1;
                acc += n;
                last.0 = acc / last.1 as f64;
            }
            _ => {
                entries.push((n, 1));
                start = n;
                acc = n;
            }
        }
    }
    NormSpectrum { entries, bound }
}

/// Squared norms of all lattice vectors up to `bound`, with multiplicities.
pub fn enumerate_by_norm(l: &Lattice, bound: f64) -> Result<NormSpectrum> {
    enumerate_by_norm_with_cap(l, bound, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_by_norm_with_cap(l: &Lattice, bound: f64, cap: usize) -> Result<NormSpectrum> {
    let vs = enumerate_vectors(l, bound, cap)?;
    Ok(cluster_norms(vs.into_iter().map(|v| v.norm_sq).collect(), bound))
}

/// Laplace spectrum of the flat torus `R^d / L` up to `eigen_bound`:
/// eigenvalues `4π² ‖w‖²` for `w` in the dual lattice.
pub fn torus_spectrum(l: &Lattice, eigen_bound: f64) -> Result<Spectrum> {
    let four_pi2 = 4.0 * PI * PI;
    let ns = enumerate_by_norm(&l.dual()?, eigen_bound / four_pi2)?;
    Ok(Spectrum {
        entries: ns.entries.into_iter().map(|(n, m)| (four_pi2 * n, m)).collect(),
        cutoff: eigen_bound,
    })
}

/// First place where two spectra disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub index: usize,
    pub left: Option<(f64, usize)>,
    pub right: Option<(f64, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsospectralReport {
    pub isospectral: bool,
    pub clusters_compared: usize,
    pub first_discrepancy: Option<Discrepancy>,
}

/// Compares torus spectra up to the eigenvalue `bound`: eigenvalues within
/// `TAU_NORM` relative, multiplicities exactly.
pub fn is_isospectral(l1: &Lattice, l2: &Lattice, bound: f64) -> Result<IsospectralReport> {
    if l1.dim() != l2.dim() {
        return Err(Error::DimensionMismatch { expected: l1.dim(), got: l2.dim() });
    }
    let a = torus_spectrum(l1, bound)?;
    let b = torus_spectrum(l2, bound)?;
    Ok(compare_entries(&a.entries, &b.entries))
}

pub(crate) fn compare_entries(a: &[(f64, usize)], b: &[(f64, usize)]) -> IsospectralReport {
    let n = a.len().max(b.len());
    for i in 0..n {
        let (x, y) = (a.get(i).copied(), b.get(i).copied());
        let same = match (x, y) {
            (Some((u, mu)), Some((v, mv))) => mu == mv && (u - v).abs() <= TAU_NORM * u.abs().max(v.abs()),
            _ => false,
        };
        if !same {
            return IsospectralReport {
                isospectral: false,
                clusters_compared: i,
                first_discrepancy: Some(Discrepancy { index: i, left: x, right: y }),
            };
        }
    }
    IsospectralReport { isospectral: true, clusters_compared: n, first_discrepancy: None }
}

/// Squared dual norm bound that contains roughly `count` dual vectors.
pub(crate) fn dual_bound_for_count(l: &Lattice, count: f64) -> f64 {
    let d = l.dim() as f64;
    // unit-ball volume π^{d/2} / Γ(d/2 + 1); dual covolume is 1 / vol(L)
    let ball = PI.powf(d / 2.0) / crate::specfun::gamma(d / 2.0 + 1.0).unwrap_or(1.0);
    (count / (ball * l.volume())).powf(2.0 / d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn rotation2(theta: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
    }

    /// Gauss elimination with partial pivoting, independent of nalgebra.
    fn inverse_by_elimination(m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = m.nrows();
        let mut a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..2 * n).map(|j| if j < n { m[(i, j)] } else if j - n == i { 1.0 } else { 0.0 }).collect())
            .collect();
        for col in 0..n {
            let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
            a.swap(col, piv);
            let p = a[col][col];
            for v in a[col].iter_mut() {
                *v /= p;
            }
            for row in 0..n {
                if row != col {
                    let f = a[row][col];
                    let pivot_row = a[col].clone();
                    for (v, pv) in a[row].iter_mut().zip(pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        DMatrix::from_fn(n, n, |i, j| a[i][j + n])
    }

    /// Brute-force norms over the integer box `[-B, B]^d`, where `B` bounds
    /// every coordinate through `|x_i| <= ‖G^{-1}‖_row_i · ‖v‖`.
    fn brute_force(l: &Lattice, bound: f64) -> BTreeMap<u64, usize> {
        let inv = l.generator().clone().try_inverse().unwrap();
        let d = l.dim();
        let radius = bound.sqrt();
        let b = (0..d)
            .map(|i| (inv.row(i).norm() * radius).floor() as i64)
            .max()
            .unwrap();
        let mut out = BTreeMap::new();
        let mut x = vec![-b; d];
        loop {
            let v = l.point(&x);
            let n: f64 = v.iter().map(|t| t * t).sum();
            if n <= bound * (1.0 + TAU_NORM) {
                *out.entry((n * 1e6).round() as u64).or_insert(0) += 1;
            }
            let mut i = 0;
            loop {
                if i == d {
                    return out;
                }
                x[i] += 1;
                if x[i] > b {
                    x[i] = -b;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    fn keyed(ns: &NormSpectrum) -> BTreeMap<u64, usize> {
        let mut out = BTreeMap::new();
        for &(n, m) in &ns.entries {
            *out.entry((n * 1e6).round() as u64).or_insert(0) += m;
        }
        out
    }

    #[test]
    fn validation() {
        assert!(matches!(
            Lattice::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0])),
            Err(Error::SingularLattice(_))
        ));
        assert!(Lattice::new(DMatrix::zeros(2, 3)).is_err());
        assert!(Lattice::new(DMatrix::from_row_slice(1, 1, &[f64::NAN])).is_err());
    }

    #[test]
    fn dual_of_integer_and_scalar() {
        let z3 = Lattice::integer(3).unwrap();
        assert!(z3.dual().unwrap().approx_eq(&z3, 1e-15));
        let r = Lattice::diagonal(&[2.5]).unwrap();
        assert_relative_eq!(r.dual().unwrap().generator()[(0, 0)], 0.4, epsilon = 1e-15);
    }

    #[test]
    fn schiemann_dual_against_elimination() {
        let gp = Lattice::schiemann(true);
        let dual = gp.dual().unwrap();
        let oracle = inverse_by_elimination(gp.generator()).transpose();
        for (a, b) in dual.generator().iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let id = gp.generator().transpose() * dual.generator();
        assert!((id - DMatrix::identity(4, 4)).abs().max() < 1e-12);
    }

    #[test]
    fn small_enumerations() {
        let z2 = Lattice::integer(2).unwrap();
        let ns = enumerate_by_norm(&z2, 2.0).unwrap();
        assert_eq!(ns.entries, vec![(0.0, 1), (1.0, 4), (2.0, 4)]);

        let r = 1.7;
        let line = Lattice::diagonal(&[r]).unwrap();
        let ns = enumerate_by_norm(&line, 4.0 * r * r).unwrap();
        assert_eq!(ns.entries.len(), 3);
        assert_eq!(ns.entries[0], (0.0, 1));
        assert_relative_eq!(ns.entries[1].0, r * r, max_relative = 1e-14);
        assert_eq!(ns.entries[1].1, 2);
        assert_relative_eq!(ns.entries[2].0, 4.0 * r * r, max_relative = 1e-14);
        assert_eq!(ns.entries[2].1, 2);
    }

    #[test]
    fn enumeration_cap() {
        let z3 = Lattice::integer(3).unwrap();
        assert!(matches!(enumerate_by_norm_with_cap(&z3, 100.0, 1000), Err(Error::ResourceLimit(_))));
        assert!(enumerate_by_norm(&z3, 0.0).is_err());
    }

    #[test]
    fn schiemann_duals_isospectral_to_30() {
        let a = enumerate_by_norm(&Lattice::schiemann(true).dual().unwrap(), 30.0).unwrap();
        let b = enumerate_by_norm(&Lattice::schiemann(false).dual().unwrap(), 30.0).unwrap();
        assert!(compare_entries(&a.entries, &b.entries).isospectral);
        assert!(a.entries.len() > 100);
    }

    #[test]
    fn torus_spectra() {
        let four_pi2 = 4.0 * PI * PI;
        let sp = torus_spectrum(&Lattice::integer(1).unwrap(), 16.5 * four_pi2).unwrap();
        let mults: Vec<usize> = sp.entries.iter().map(|e| e.1).collect();
        assert_eq!(mults, vec![1, 2, 2, 2, 2]);
        for (n, e) in sp.entries.iter().enumerate() {
            assert_relative_eq!(e.0, four_pi2 * (n * n) as f64, max_relative = 1e-14);
        }
        let sp = torus_spectrum(&Lattice::integer(2).unwrap(), 1.5 * four_pi2).unwrap();
        assert_relative_eq!(sp.entries[1].0, four_pi2, max_relative = 1e-14);
        assert_eq!(sp.entries[1].1, 4);

        let bound = 200.0;
        let p = torus_spectrum(&Lattice::schiemann(true), bound).unwrap();
        let m = torus_spectrum(&Lattice::schiemann(false), bound).unwrap();
        assert!(p.entries.len() > 11);
        for (x, y) in p.entries.iter().zip(&m.entries).take(11) {
            assert_eq!(x.1, y.1);
            assert_relative_eq!(x.0, y.0, max_relative = TAU_NORM);
        }
    }

    #[test]
    fn isospectral_reports() {
        let z2 = Lattice::integer(2).unwrap();
        assert!(is_isospectral(&z2, &z2, 200.0).unwrap().isospectral);
        let rot = Lattice::new(rotation2(PI / 6.0)).unwrap();
        assert!(is_isospectral(&z2, &rot, 500.0).unwrap().isospectral);
        let rect = Lattice::diagonal(&[1.0, 2.0]).unwrap();
        let rep = is_isospectral(&z2, &rect, 200.0).unwrap();
        assert!(!rep.isospectral);
        assert_eq!(rep.first_discrepancy.unwrap().index, 1);
        assert!(matches!(
            is_isospectral(&z2, &Lattice::integer(3).unwrap(), 10.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(is_isospectral(&Lattice::schiemann(true), &Lattice::schiemann(false), 30.0).unwrap().isospectral);
    }

    #[test]
    fn spec_and_text_round_trip() {
        let l = Lattice::schiemann(false);
        let back = Lattice::from_text(&l.to_text()).unwrap();
        assert!(back.approx_eq(&l, 1e-15));
        assert!(Lattice::from_spec("Zn:3").unwrap().approx_eq(&Lattice::integer(3).unwrap(), 0.0));
        assert!(Lattice::from_spec("diag:1,2").is_ok());
        assert!(Lattice::from_spec("nope").is_err());
        assert!(Lattice::from_text("2\n1 0\n0").is_err());
        assert!(Lattice::from_text("2\n1 0 3\n0 1").is_err());
    }

    fn well_conditioned(dim: usize) -> impl Strategy<Value = Lattice> {
        prop::collection::vec(-0.5f64..0.5, dim * dim).prop_map(move |v| {
            let m = DMatrix::identity(dim, dim) + DMatrix::from_row_slice(dim, dim, &v) * 0.8;
            Lattice::new(m).unwrap()
        })
    }

    fn any_lattice(max_dim: usize) -> impl Strategy<Value = Lattice> {
        (1..=max_dim).prop_flat_map(well_conditioned)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn dual_is_an_involution(l in any_lattice(4)) {
            let back = l.dual().unwrap().dual().unwrap();
            prop_assert!(back.approx_eq(&l, 1e-10));
            prop_assert!((l.volume() * l.dual().unwrap().volume() - 1.0).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn enumeration_matches_brute_force(l in any_lattice(3), bound in 0.5f64..20.0) {
            let ns = enumerate_by_norm(&l, bound).unwrap();
            prop_assert_eq!(keyed(&ns), brute_force(&l, bound));
            prop_assert_eq!(ns.entries[0], (0.0, 1));
            for e in &ns.entries[1..] {
                prop_assert_eq!(e.1 % 2, 0);
            }
            prop_assert!(ns.entries.windows(2).all(|w| w[0].0 < w[1].0));
        }
    }
}
