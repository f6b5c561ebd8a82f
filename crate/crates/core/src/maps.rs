//! Diffeomorphisms between model manifolds: rescalings of circles and maps of
//! flat tori induced by linear maps of the universal cover.

use crate::error::{Error, Result};
use crate::lattice::{format_square_matrix, parse_square_matrix, Lattice};
use crate::manifolds::FlatTorus;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// Integrality tolerance for `G_2^{-1} A G_1`.
pub const TAU_INT: f64 = 1e-6;

/// Numerators of the printed change of basis between the Schiemann tori;
/// the matrix is this divided by 5.
#[rustfmt::skip]
pub const PAPER_A_NUMERATORS: [[i64; 4]; 4] = [
    [-3, -2, -1, -3],
    [ 2, -2,  4, -3],
    [ 3, -3, -4,  3],
    [ 1,  4,  2, -4],
];

/// The printed matrix `(1/5) · PAPER_A_NUMERATORS`.
pub fn paper_a_printed() -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |i, j| PAPER_A_NUMERATORS[i][j] as f64 / 5.0)
}

/// `G_- G_+^{-1}`, computed from the built-in generators and checked against
/// the printed matrix within `1e-9`. It carries `Λ_+` onto `Λ_-`.
pub fn paper_a_matrix() -> Result<DMatrix<f64>> {
    let gp = Lattice::schiemann(true);
    let gm = Lattice::schiemann(false);
    let inv = gp.generator().clone().try_inverse().ok_or(Error::SingularLattice(0.0))?;
    let a = gm.generator() * inv;
    let dev = (&a - paper_a_printed()).amax();
    if dev > 1e-9 {
        return Err(Error::Invalid(format!(
            "computed change of basis differs from the printed matrix by {dev:e}"
        )));
    }
    Ok(a)
}

/// Parses `paper-A`, `I:<d>` or a matrix file in the lattice text format.
pub fn matrix_from_spec(spec: &str) -> Result<DMatrix<f64>> {
    if spec == "paper-A" {
        return paper_a_matrix();
    }
    if let Some(d) = spec.strip_prefix("I:") {
        let d: usize = d.trim().parse().map_err(|_| Error::Parse(format!("bad dimension in {spec:?}")))?;
        return Ok(DMatrix::identity(d, d));
    }
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{spec}: {e}")))?;
        return parse_square_matrix(&text);
    }
    Err(Error::Parse(format!("unknown matrix {spec:?} (not a built-in name or readable file)")))
}

pub fn matrix_to_text(m: &DMatrix<f64>) -> String {
    format_square_matrix(m)
}

/// Exact determinant of an integer matrix (fraction-free elimination).
pub fn integer_determinant(m: &DMatrix<i64>) -> i128 {
    let n = m.nrows();
    let mut a: Vec<i128> = (0..n * n).map(|k| m[(k / n, k % n)] as i128).collect();
    determinant_in_place(&mut a, n)
}

/// Bareiss elimination on a row-major `n × n` buffer, which it overwrites.
pub fn determinant_in_place(a: &mut [i128], n: usize) -> i128 {
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k * n + k] == 0 {
            match (k + 1..n).find(|&r| a[r * n + k] != 0) {
                Some(r) => {
                    for j in 0..n {
                        a.swap(k * n + j, r * n + j);
                    }
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
            }
        }
        prev = a[k * n + k];
    }
    if n == 0 {
        1
    } else {
        sign * a[n * n - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    /// Rounded `G_2^{-1} A G_1`, when every entry is within `TAU_INT` of an integer.
    pub integer_matrix: Option<DMatrix<i64>>,
    pub determinant: Option<i128>,
    /// Largest distance of an entry of `G_2^{-1} A G_1` from the nearest integer.
    pub max_deviation: f64,
}

/// Checks that `A` induces a diffeomorphism `R^d/Λ_1 → R^d/Λ_2`:
/// `G_2^{-1} A G_1 ∈ GL(d, Z)`.
pub fn check_admissible(a: &DMatrix<f64>, t1: &FlatTorus, t2: &FlatTorus) -> Result<Admissibility> {
    let d = t1.dim();
    if t2.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: t2.dim() });
    }
    if a.shape() != (d, d) {
        return Err(Error::DimensionMismatch { expected: d, got: a.nrows() });
    }
    // G_2^{-1} is the transpose of the dual generator
    let m = t2.dual().generator().transpose() * a * t1.lattice().generator();
    let max_deviation = m.iter().map(|x| (x - x.round()).abs()).fold(0.0, f64::max);
    if max_deviation > TAU_INT {
        return Ok(Admissibility { admissible: false, integer_matrix: None, determinant: None, max_deviation });
    }
    let im = m.map(|x| x.round() as i64);
    let det = integer_determinant(&im);
    Ok(Admissibility {
        admissible: det.abs() == 1,
        integer_matrix: Some(im),
        determinant: Some(det),
        max_deviation,
    })
}

/// The rescaling `θ ↦ θ` from the circle of radius `r_source` to that of
/// radius `r_target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleRescale {
    pub r_source: f64,
    pub r_target: f64,
}

impl CircleRescale {
    pub fn new(r_source: f64, r_target: f64) -> Result<Self> {
        if !(r_source > 0.0 && r_target > 0.0) || !r_source.is_finite() || !r_target.is_finite() {
            return Err(Error::Invalid("radii must be positive".into()));
        }
        Ok(Self { r_source, r_target })
    }

    pub fn jacobian(&self) -> f64 {
        self.r_target / self.r_source
    }

    pub fn compose(&self, first: &CircleRescale) -> Result<Self> {
        if (first.r_target - self.r_source).abs() > 1e-12 * self.r_source {
            return Err(Error::Invalid(format!(
                "cannot compose: first map ends at radius {}, second starts at {}",
                first.r_target, self.r_source
            )));
        }
        Self::new(first.r_source, self.r_target)
    }
}

/// A torus map induced by `A` with `A Λ_1 = Λ_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusLinearMap {
    matrix: DMatrix<f64>,
    source: FlatTorus,
    target: FlatTorus,
    integer_matrix: DMatrix<i64>,
}

impl TorusLinearMap {
    pub fn new(matrix: DMatrix<f64>, source: FlatTorus, target: FlatTorus) -> Result<Self> {
        let adm = check_admissible(&matrix, &source, &target)?;
        if !adm.admissible {
            return Err(Error::Admissibility(match adm.determinant {
                Some(det) => format!("G_2^-1 A G_1 has determinant {det}"),
                None => format!("G_2^-1 A G_1 is {:.3e} away from an integer matrix", adm.max_deviation),
            }));
        }
        Ok(Self { matrix, source, target, integer_matrix: adm.integer_matrix.expect("admissible") })
    }

    /// `A = G_2 M G_1^{-1}` for an integer matrix `M` of determinant ±1.
    pub fn from_integer(m: &DMatrix<i64>, source: FlatTorus, target: FlatTorus) -> Result<Self> {
        let ginv = source.dual().generator().transpose();
        let a = target.lattice().generator() * m.map(|x| x as f64) * ginv;
        Self::new(a, source, target)
    }

    /// The change of basis `G_2 G_1^{-1}`.
    pub fn change_of_basis(source: FlatTorus, target: FlatTorus) -> Result<Self> {
        let d = source.dim();
        Self::from_integer(&DMatrix::identity(d, d), source, target)
    }

    /// `A = G_- G_+^{-1}` from the `G_+` torus to the `G_-` torus.
    pub fn paper() -> Result<Self> {
        Self::new(
            paper_a_matrix()?,
            FlatTorus::new(Lattice::schiemann(true))?,
            FlatTorus::new(Lattice::schiemann(false))?,
        )
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn source(&self) -> &FlatTorus {
        &self.source
    }

    pub fn target(&self) -> &FlatTorus {
        &self.target
    }

    /// `G_2^{-1} A G_1`.
    pub fn integer_matrix(&self) -> &DMatrix<i64> {
        &self.integer_matrix
    }

    pub fn jacobian(&self) -> f64 {
        self.matrix.determinant().abs()
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Admissibility("map is not invertible".into()))?;
        Self::new(inv, self.target.clone(), self.source.clone())
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &TorusLinearMap) -> Result<Self> {
        if !first.target.lattice().approx_eq(self.source.lattice(), 1e-12) {
            return Err(Error::Invalid("cannot compose: target and source tori differ".into()));
        }
        Self::new(&self.matrix * &first.matrix, first.source.clone(), self.target.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldMap {
    Circle(CircleRescale),
    Torus(TorusLinearMap),
}

impl ManifoldMap {
    pub fn jacobian(&self) -> f64 {
        match self {
            Self::Circle(m) => m.jacobian(),
            Self::Torus(m) => m.jacobian(),
        }
    }

    /// `self ∘ first`; both maps must be of the same kind.
    pub fn compose(&self, first: &ManifoldMap) -> Result<Self> {
        match (self, first) {
            (Self::Circle(b), Self::Circle(a)) => Ok(Self::Circle(b.compose(a)?)),
            (Self::Torus(b), Self::Torus(a)) => Ok(Self::Torus(b.compose(a)?)),
            _ => Err(Error::Invalid("maps of different kinds do not compose".into())),
        }
    }
}

const POWER_SEEDS: [u64; 2] = [0x5eed_0001, 0x5eed_0002];
const POWER_MAX_ITER: usize = 100_000;
const POWER_TOL: f64 = 1e-12;

fn power_iteration(b: &DMatrix<f64>, seed: u64) -> Result<f64> {
    let n = b.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    v /= v.norm();
    let mut mu = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let w = b * &v;
        let next = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 {
            return Ok(0.0);
        }
        v = w / wn;
        if (next - mu).abs() <= POWER_TOL * next.abs() {
            return Ok(next);
        }
        mu = next;
    }
    Err(Error::Convergence(format!("power iteration did not settle in {POWER_MAX_ITER} steps")))
}

/// `‖A‖_2`, the square root of the largest eigenvalue of `A A^T`, by power
/// iteration from two fixed random starts.
pub fn spectral_norm(a: &DMatrix<f64>) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    let b = a * a.transpose();
    let mut best = 0.0f64;
    for seed in POWER_SEEDS {
        best = best.max(power_iteration(&b, seed)?);
    }
    Ok(best.max(0.0).sqrt())
}

/// Smallest and largest singular values of an invertible `A`.
pub fn singular_value_range(a: &DMatrix<f64>) -> Result<(f64, f64)> {
    let inv = a
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("matrix is singular".into()))?;
    Ok((1.0 / spectral_norm(&inv)?, spectral_norm(a)?))
}
