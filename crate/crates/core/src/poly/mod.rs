//! Characteristic polynomials, their roots, and where those roots sit in the
//! (M, θ) root plane.
//!
//! Coefficients are always stored in ascending power order: `coeffs[i]` is the
//! coefficient of λ^i.

mod eigen;

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub(crate) use eigen::{eigenvalues as matrix_eigenvalues, Square};

/// Default relative tolerance under which the leading coefficient counts as zero.
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-12;
/// Default absolute tolerance on σ for region classification.
pub const DEFAULT_BOUNDARY_TOLERANCE: f64 = 1e-9;

const NEWTON_POLISH_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("polynomial needs at least two coefficients (degree >= 1), got {0}")]
    TooShort(usize),
    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },
    #[error("leading coefficient {value:e} is zero within tolerance {tolerance:e}")]
    DegenerateLeadingCoefficient { value: f64, tolerance: f64 },
    #[error("QR iteration failed to converge on the companion matrix")]
    NoConvergence,
}

/// Real polynomial α₀ + α₁λ + … + αₙλⁿ with a nonzero leading coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients, using [`DEFAULT_ZERO_TOLERANCE`].
    pub fn new(coeffs: Vec<f64>) -> Result<Self, PolyError> {
        Self::with_tolerance(coeffs, DEFAULT_ZERO_TOLERANCE)
    }

    /// The leading coefficient is rejected when `|αₙ| <= tolerance · max|αᵢ|`.
    pub fn with_tolerance(coeffs: Vec<f64>, tolerance: f64) -> Result<Self, PolyError> {
        if coeffs.len() < 2 {
            return Err(PolyError::TooShort(coeffs.len()));
        }
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(PolyError::NonFinite { index });
        }
        let lead = *coeffs.last().unwrap();
        let scale = max_abs(&coeffs);
        if lead.abs() <= tolerance * scale || lead == 0.0 {
            return Err(PolyError::DegenerateLeadingCoefficient {
                value: lead,
                tolerance,
            });
        }
        Ok(Self { coeffs })
    }

    /// Expands c·Π(λ − rᵢ). Complex roots must come in conjugate pairs; the
    /// imaginary residue of the product is dropped.
    pub fn from_roots(roots: &[Complex64], leading: f64) -> Result<Self, PolyError> {
        let mut acc = vec![Complex64::new(leading, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, &c) in acc.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.degree()]
    }

    pub fn scaled(&self, c: f64) -> Result<Self, PolyError> {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Δ(λ) by Horner's scheme.
    pub fn evaluate(&self, lambda: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * lambda + a)
    }

    /// Δ(λ) and Δ'(λ) in one Horner pass.
    pub fn evaluate_with_derivative(&self, lambda: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let mut p = zero;
        let mut dp = zero;
        for &a in self.coeffs.iter().rev() {
            dp = dp * lambda + p;
            p = p * lambda + a;
        }
        (p, dp)
    }

    /// Σ|αᵢ||λ|ⁱ, the magnitude scale against which |Δ(λ)| is a rounding-level quantity.
    pub fn evaluation_scale(&self, lambda: Complex64) -> f64 {
        let m = lambda.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * m + a.abs())
    }

    /// Monic companion matrix in upper Hessenberg form: first row holds
    /// −(αₙ₋₁, …, α₀)/αₙ, ones on the subdiagonal.
    pub(crate) fn companion(&self) -> Square {
        let n = self.degree();
        let lead = self.leading();
        Square::from_fn(n, |i, j| {
            if i == 0 {
                -self.coeffs[n - 1 - j] / lead
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        })
    }

    /// All n roots, from the eigenvalues of the companion matrix followed by a
    /// few guarded Newton steps on Δ itself.
    ///
    /// Complex roots are emitted as exact conjugate pairs. The set is sorted by
    /// descending real part, then descending imaginary part.
    pub fn roots(&self) -> Result<RootSet, PolyError> {
        let raw = eigen::hessenberg_eigenvalues(self.companion())
            .map_err(|_| PolyError::NoConvergence)?;

        let mut roots = Vec::with_capacity(raw.len());
        for z in raw {
            if z.im < 0.0 {
                continue;
            }
            if z.im == 0.0 {
                let polished = self.polish(z);
                roots.push(Complex64::new(polished.re, 0.0));
            } else {
                let polished = self.polish(z);
                // a polished pair may collapse onto the real axis; keep it as a pair
                let im = polished.im.abs();
                roots.push(Complex64::new(polished.re, im));
                roots.push(Complex64::new(polished.re, -im));
            }
        }
        roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        Ok(RootSet(roots.into_iter().map(ComplexRoot::from).collect()))
    }

    fn polish(&self, mut z: Complex64) -> Complex64 {
        let mut best = self.evaluate(z).norm();
        for _ in 0..NEWTON_POLISH_STEPS {
            let (p, dp) = self.evaluate_with_derivative(z);
            if dp.norm() == 0.0 || p.norm() == 0.0 {
                break;
            }
            let candidate = z - p / dp;
            let value = self.evaluate(candidate).norm();
            if !(value < best) {
                break;
            }
            best = value;
            z = candidate;
        }
        z
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &a) in self.coeffs.iter().enumerate().rev() {
            if a == 0.0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if a < 0.0 { '-' } else { '+' })?;
            } else if a < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            match i {
                0 => write!(f, "{}", a.abs())?,
                1 => write!(f, "{}λ", a.abs())?,
                _ => write!(f, "{}λ^{}", a.abs(), i)?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, a| m.max(a.abs()))
}

/// A root σ + jω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexRoot {
    pub sigma: f64,
    pub omega: f64,
}

impl ComplexRoot {
    pub fn new(sigma: f64, omega: f64) -> Self {
        Self { sigma, omega }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.sigma, self.omega)
    }

    pub fn magnitude(self) -> f64 {
        self.sigma.hypot(self.omega)
    }

    /// Time constant −1/σ of the mode, if it decays.
    pub fn time_constant(self) -> Option<f64> {
        (self.sigma < 0.0).then(|| -1.0 / self.sigma)
    }
}

impl From<Complex64> for ComplexRoot {
    fn from(z: Complex64) -> Self {
        Self::new(z.re, z.im)
    }
}

impl From<ComplexRoot> for Complex64 {
    fn from(r: ComplexRoot) -> Self {
        r.to_complex()
    }
}

/// A root in (M, θ) form, θ in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarRoot {
    pub magnitude: f64,
    pub angle: f64,
}

impl PolarRoot {
    /// Canonicalizes the angle into (−π, π]; a negative magnitude flips the angle by π.
    pub fn new(magnitude: f64, angle: f64) -> Self {
        if magnitude < 0.0 {
            Self::new(-magnitude, angle + PI)
        } else {
            Self {
                magnitude,
                angle: canonical_angle(angle),
            }
        }
    }

    /// The origin has no defined angle; it is reported with θ = 0.
    pub fn is_degenerate(&self) -> bool {
        self.magnitude == 0.0
    }
}

/// Maps any angle into (−π, π].
pub fn canonical_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut a = theta % two_pi;
    if a <= -PI {
        a += two_pi;
    } else if a > PI {
        a -= two_pi;
    }
    a
}

pub fn to_polar(root: ComplexRoot) -> PolarRoot {
    if root.sigma == 0.0 && root.omega == 0.0 {
        return PolarRoot {
            magnitude: 0.0,
            angle: 0.0,
        };
    }
    let mut angle = root.omega.atan2(root.sigma);
    // atan2 returns −π for (negative, −0.0); the canonical range excludes it
    if angle == -PI {
        angle = PI;
    }
    PolarRoot {
        magnitude: root.magnitude(),
        angle,
    }
}

pub fn from_polar(p: PolarRoot) -> ComplexRoot {
    let (s, c) = p.angle.sin_cos();
    ComplexRoot::new(p.magnitude * c, p.magnitude * s)
}

/// Region of the root plane a root falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionClass {
    AsymptoticallyStable,
    Unstable,
    HarmonicBoundary,
    NonOscillatingDecay,
}

impl RegionClass {
    /// Both decaying classes count as stable.
    pub fn is_stable(self) -> bool {
        matches!(
            self,
            RegionClass::AsymptoticallyStable | RegionClass::NonOscillatingDecay
        )
    }
}

impl fmt::Display for RegionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegionClass::AsymptoticallyStable => "AsymptoticallyStable",
            RegionClass::Unstable => "Unstable",
            RegionClass::HarmonicBoundary => "HarmonicBoundary",
            RegionClass::NonOscillatingDecay => "NonOscillatingDecay",
        };
        f.write_str(s)
    }
}

/// Classifies a root with an absolute tolerance on both σ and ω.
///
/// A root at the origin (|σ| and |ω| both within tolerance) is marginal, not
/// decaying, and is reported as `Unstable`.
pub fn classify(root: ComplexRoot, tol: f64) -> RegionClass {
    let ComplexRoot { sigma, omega } = root;
    if sigma < -tol {
        if omega.abs() <= tol {
            RegionClass::NonOscillatingDecay
        } else {
            RegionClass::AsymptoticallyStable
        }
    } else if sigma > tol {
        RegionClass::Unstable
    } else if omega.abs() > tol {
        RegionClass::HarmonicBoundary
    } else {
        RegionClass::Unstable
    }
}

/// The n roots of a polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RootSet(pub Vec<ComplexRoot>);

impl RootSet {
    pub fn iter(&self) -> std::slice::Iter<'_, ComplexRoot> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_complex(&self) -> Vec<Complex64> {
        self.0.iter().map(|r| r.to_complex()).collect()
    }

    /// Largest root magnitude, zero for an empty set.
    pub fn max_magnitude(&self) -> f64 {
        self.0.iter().fold(0.0, |m, r| m.max(r.magnitude()))
    }
}

impl<'a> IntoIterator for &'a RootSet {
    type Item = &'a ComplexRoot;
    type IntoIter = std::slice::Iter<'a, ComplexRoot>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}
