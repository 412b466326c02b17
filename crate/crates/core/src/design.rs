//! Coefficient design for a steady oscillation at ω_k.
//!
//! A polynomial has the conjugate pair ±jω_k exactly when both the real and the
//! imaginary part of Δ(jω_k) vanish:
//!
//! ```text
//! Σ αᵢ ω_kⁱ cos(πi/2) = 0        Σ αᵢ ω_kⁱ sin(πi/2) = 0
//! ```
//!
//! Each requested decay magnitude σ_p adds the row Δ(−σ_p) = Σ αᵢ (−σ_p)ⁱ = 0.
//! Pinned coefficients fix the scale and spend the remaining freedom, so a
//! well-posed spec has exactly `n + 1 = 2 + decays + pinned` constraints.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{classify, to_polar, ComplexRoot, PolarRoot, PolyError, Polynomial, RegionClass};

/// Pivot ratio below which the assembled system is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Default tolerance for [`verify_design`].
pub const DEFAULT_VERIFY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("invalid design spec: {0}")]
    InvalidSpec(String),
    #[error("underconstrained: {constraints} constraints for {unknowns} coefficients")]
    Underconstrained { constraints: usize, unknowns: usize },
    #[error("overconstrained: {constraints} constraints for {unknowns} coefficients")]
    Overconstrained { constraints: usize, unknowns: usize },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("zero pivot for coefficient {index}")]
    ZeroPivot { index: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// What to design: order, oscillation frequency, real decay roots and pins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub order: usize,
    pub omega_k: f64,
    /// Magnitudes σ_p > 0; each places a root at −σ_p.
    #[serde(default)]
    pub decays: Vec<f64>,
    /// Coefficient index → fixed value.
    pub pinned: BTreeMap<usize, f64>,
}

impl DesignSpec {
    pub fn new(order: usize, omega_k: f64, decays: Vec<f64>, pinned: BTreeMap<usize, f64>) -> Self {
        Self {
            order,
            omega_k,
            decays,
            pinned,
        }
    }

    /// Checks the spec's own invariants, including the constraint count.
    pub fn validate(&self) -> Result<(), DesignError> {
        let n = self.order;
        if n < 2 {
            return Err(DesignError::InvalidSpec(format!("order must be >= 2, got {n}")));
        }
        if !(self.omega_k.is_finite() && self.omega_k > 0.0) {
            return Err(DesignError::InvalidSpec(format!(
                "omega_k must be finite and > 0, got {}",
                self.omega_k
            )));
        }
        if let Some(s) = self.decays.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(DesignError::InvalidSpec(format!(
                "decay magnitudes must be finite and > 0, got {s}"
            )));
        }
        if self.pinned.is_empty() {
            return Err(DesignError::InvalidSpec(
                "at least one coefficient must be pinned to fix the scale".into(),
            ));
        }
        for (&i, &v) in &self.pinned {
            if i > n {
                return Err(DesignError::InvalidSpec(format!(
                    "pinned index {i} exceeds order {n}"
                )));
            }
            if !v.is_finite() {
                return Err(DesignError::InvalidSpec(format!("pinned α{i} is not finite")));
            }
        }
        let constraints = 2 + self.decays.len() + self.pinned.len();
        let unknowns = n + 1;
        if constraints < unknowns {
            return Err(DesignError::Underconstrained {
                constraints,
                unknowns,
            });
        }
        if constraints > unknowns {
            return Err(DesignError::Overconstrained {
                constraints,
                unknowns,
            });
        }
        let mut sorted = self.decays.clone();
        sorted.sort_by(f64::total_cmp);
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(DesignError::SingularSystem(format!(
                "decay magnitude {} is repeated; repeated decay rows are linearly dependent",
                w[0]
            )));
        }
        Ok(())
    }
}

/// ω^i for i = 0..=n by repeated multiplication.
fn powers(base: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut p = 1.0;
    for _ in 0..=n {
        out.push(p);
        p *= base;
    }
    out
}

/// The real-part and imaginary-part rows of Δ(jω_k) = 0.
///
/// cos(πi/2) and sin(πi/2) are taken from `i mod 4`, so structural zeros are exact.
pub fn oscillation_rows(n: usize, omega_k: f64) -> (Vec<f64>, Vec<f64>) {
    let w = powers(omega_k, n);
    let cos_row = (0..=n)
        .map(|i| match i % 4 {
            0 => w[i],
            2 => -w[i],
            _ => 0.0,
        })
        .collect();
    let sin_row = (0..=n)
        .map(|i| match i % 4 {
            1 => w[i],
            3 => -w[i],
            _ => 0.0,
        })
        .collect();
    (cos_row, sin_row)
}

/// The row of Δ(−σ_p) = 0: entries (−σ_p)ⁱ.
pub fn decay_row(n: usize, sigma_p: f64) -> Vec<f64> {
    powers(sigma_p, n)
        .into_iter()
        .enumerate()
        .map(|(i, p)| if i % 2 == 0 { p } else { -p })
        .collect()
}

/// Solves the design system for the full coefficient vector.
///
/// Pinned coefficients are substituted exactly; the remaining unknowns are
/// found from the oscillation and decay rows. Rows are normalized by their
/// largest entry and columns equilibrated before a fully pivoted LU solve,
/// followed by one step of iterative refinement.
pub fn design(spec: &DesignSpec) -> Result<Polynomial, DesignError> {
    spec.validate()?;
    let n = spec.order;

    let (cos_row, sin_row) = oscillation_rows(n, spec.omega_k);
    let mut rows = vec![cos_row, sin_row];
    rows.extend(spec.decays.iter().map(|&s| decay_row(n, s)));

    let free: Vec<usize> = (0..=n).filter(|i| !spec.pinned.contains_key(i)).collect();
    let m = free.len();
    debug_assert_eq!(rows.len(), m);

    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (r, row) in rows.iter().enumerate() {
        let scale = row.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        for (c, &idx) in free.iter().enumerate() {
            a[(r, c)] = row[idx] / scale;
        }
        b[r] = -spec
            .pinned
            .iter()
            .map(|(&i, &v)| row[i] * v)
            .sum::<f64>()
            / scale;
    }

    let col_scale: Vec<f64> = (0..m)
        .map(|c| {
            let s = a.column(c).amax();
            if s == 0.0 {
                1.0
            } else {
                s
            }
        })
        .collect();
    for (c, s) in col_scale.iter().enumerate() {
        a.column_mut(c).scale_mut(1.0 / s);
    }

    let lu = a.clone().full_piv_lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..m).map(|i| u[(i, i)].abs()).collect();
    let largest = diag.iter().cloned().fold(0.0, f64::max);
    let smallest = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if m > 0 && !(smallest > RANK_TOLERANCE * largest) {
        return Err(DesignError::SingularSystem(format!(
            "pivot ratio {:.3e} is below the rank tolerance {RANK_TOLERANCE:e}",
            if largest > 0.0 { smallest / largest } else { 0.0 }
        )));
    }

    let mut x = lu
        .solve(&b)
        .ok_or_else(|| DesignError::SingularSystem("LU solve failed".into()))?;
    let residual = &b - &a * &x;
    if let Some(dx) = lu.solve(&residual) {
        x += dx;
    }

    let mut coeffs = vec![0.0; n + 1];
    for (&i, &v) in &spec.pinned {
        coeffs[i] = v;
    }
    for (c, &idx) in free.iter().enumerate() {
        coeffs[idx] = x[c] / col_scale[c];
    }
    Ok(Polynomial::new(coeffs)?)
}

/// Closed-form solve for one even-index and one odd-index coefficient, all
/// others known.
///
/// With `v` even, α_v only appears in the real-part row; with `g` odd, α_g only
/// appears in the imaginary-part row, so each is isolated directly.
pub fn solve_two_free(
    known: &BTreeMap<usize, f64>,
    n: usize,
    v: usize,
    g: usize,
    omega_k: f64,
) -> Result<(f64, f64), DesignError> {
    if !(omega_k.is_finite() && omega_k > 0.0) {
        return Err(DesignError::InvalidSpec(format!("omega_k must be > 0, got {omega_k}")));
    }
    if v > n || g > n || v == g {
        return Err(DesignError::InvalidSpec(format!(
            "free indices ({v}, {g}) must be distinct and <= {n}"
        )));
    }
    for i in (0..=n).filter(|&i| i != v && i != g) {
        if !known.contains_key(&i) {
            return Err(DesignError::InvalidSpec(format!("coefficient α{i} is not given")));
        }
    }
    let (cos_row, sin_row) = oscillation_rows(n, omega_k);
    let weight_v = cos_row[v];
    let weight_g = sin_row[g];
    if weight_v == 0.0 {
        return Err(DesignError::ZeroPivot { index: v });
    }
    if weight_g == 0.0 {
        return Err(DesignError::ZeroPivot { index: g });
    }
    let others = |row: &[f64], skip: usize| -> f64 {
        known
            .iter()
            .filter(|(&i, _)| i != skip && i != v && i != g && i <= n)
            .map(|(&i, &a)| row[i] * a)
            .sum()
    };
    let alpha_v = -others(&cos_row, v) / weight_v;
    let alpha_g = -others(&sin_row, g) / weight_g;
    Ok((alpha_v, alpha_g))
}

/// One root with its polar image and region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub sigma: f64,
    pub omega: f64,
    pub magnitude: f64,
    pub angle: f64,
    pub class: RegionClass,
}

impl RootReport {
    pub fn root(&self) -> ComplexRoot {
        ComplexRoot::new(self.sigma, self.omega)
    }
}

/// Outcome of checking a polynomial against the spec it was designed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub coefficients: Vec<f64>,
    pub roots: Vec<RootReport>,
    /// Real and imaginary parts of Δ(jω_k).
    pub oscillation_residual: [f64; 2],
    /// Δ(−σ_p) for each requested decay magnitude.
    pub decay_residuals: Vec<f64>,
    pub verdict: bool,
}

/// Checks residuals and root locations.
///
/// Residuals are judged relative to Σ|αᵢ||λ|ⁱ at the evaluation point, and σ
/// for classification relative to max(1, |λ|). The verdict requires exactly
/// one conjugate pair on the harmonic boundary at ±jω_k, every other root
/// strictly stable, and all residuals within `tol`.
pub fn verify_design(poly: &Polynomial, spec: &DesignSpec, tol: f64) -> Result<DesignReport, DesignError> {
    let roots = poly.roots()?;
    let root_reports: Vec<RootReport> = roots
        .iter()
        .map(|&r| {
            let PolarRoot { magnitude, angle } = to_polar(r);
            RootReport {
                sigma: r.sigma,
                omega: r.omega,
                magnitude,
                angle,
                class: classify(r, tol * magnitude.max(1.0)),
            }
        })
        .collect();

    let jw = Complex64::new(0.0, spec.omega_k);
    let osc = poly.evaluate(jw);
    let osc_ok = osc.norm() <= tol * poly.evaluation_scale(jw);

    let decay_residuals: Vec<f64> = spec
        .decays
        .iter()
        .map(|&s| poly.evaluate(Complex64::new(-s, 0.0)).re)
        .collect();
    let decays_ok = spec.decays.iter().zip(&decay_residuals).all(|(&s, r)| {
        r.abs() <= tol * poly.evaluation_scale(Complex64::new(-s, 0.0))
    });

    let boundary: Vec<&RootReport> = root_reports
        .iter()
        .filter(|r| r.class == RegionClass::HarmonicBoundary)
        .collect();
    let freq_tol = tol * spec.omega_k.max(1.0);
    let pair_ok = boundary.len() == 2
        && boundary.iter().any(|r| (r.omega - spec.omega_k).abs() <= freq_tol)
        && boundary.iter().any(|r| (r.omega + spec.omega_k).abs() <= freq_tol);
    let rest_stable = root_reports
        .iter()
        .filter(|r| r.class != RegionClass::HarmonicBoundary)
        .all(|r| r.class.is_stable());

    let verdict = poly.degree() == spec.order && osc_ok && decays_ok && pair_ok && rest_stable;
    Ok(DesignReport {
        coefficients: poly.coeffs().to_vec(),
        roots: root_reports,
        oscillation_residual: [osc.re, osc.im],
        decay_residuals,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pins(p: &[(usize, f64)]) -> BTreeMap<usize, f64> {
        p.iter().cloned().collect()
    }

    #[test]
    fn oscillation_rows_examples() {
        assert_eq!(
            oscillation_rows(4, 2.0),
            (vec![1.0, 0.0, -4.0, 0.0, 16.0], vec![0.0, 2.0, 0.0, -8.0, 0.0])
        );
        assert_eq!(oscillation_rows(2, 1.0), (vec![1.0, 0.0, -1.0], vec![0.0, 1.0, 0.0]));
        // i mod 4 sign pattern: cos → +,0,−,0,+,0 ; sin → 0,+,0,−,0,+
        assert_eq!(
            oscillation_rows(5, 1.0),
            (
                vec![1.0, 0.0, -1.0, 0.0, 1.0, 0.0],
                vec![0.0, 1.0, 0.0, -1.0, 0.0, 1.0]
            )
        );
    }

    #[test]
    fn oscillation_rows_match_trig_where_nonzero() {
        let (c, s) = oscillation_rows(9, 1.7);
        for i in 0..=9 {
            let t = std::f64::consts::FRAC_PI_2 * i as f64;
            let w = 1.7_f64.powi(i as i32);
            assert!((c[i] - w * t.cos()).abs() < 1e-12 * w);
            assert!((s[i] - w * t.sin()).abs() < 1e-12 * w);
        }
    }

    #[test]
    fn decay_row_examples() {
        assert_eq!(decay_row(4, 5.0), vec![1.0, -5.0, 25.0, -125.0, 625.0]);
        assert_eq!(decay_row(4, 10.0), vec![1.0, -10.0, 100.0, -1000.0, 10000.0]);
        let tiny = decay_row(4, 1e-300);
        assert_eq!(tiny[0], 1.0);
        assert!(tiny[1..].iter().all(|v| v.abs() < 1e-299));
    }

    #[test]
    fn design_pinned() {
        let spec = DesignSpec::new(4, 2.0, vec![], pins(&[(0, 1.0), (1, 0.5), (4, 1.0)]));
        let p = design(&spec).unwrap();
        let c = p.coeffs();
        assert_eq!(c[0], 1.0);
        assert_eq!(c[1], 0.5);
        assert_eq!(c[4], 1.0);
        assert!((c[2] - 4.25).abs() < 1e-12);
        assert!((c[3] - 0.125).abs() < 1e-12);
    }

    #[test]
    fn design_clean() {
        let spec = DesignSpec::new(4, 1.0, vec![5.0, 9.8], pins(&[(0, 1.0)]));
        let p = design(&spec).unwrap();
        let expect = [1.0, 0.3020, 1.0204, 0.3020, 0.0204];
        for (a, e) in p.coeffs().iter().zip(expect) {
            assert!((a - e).abs() < 5e-4, "{a} vs {e}");
        }
    }

    #[test]
    fn decay_design_matches_expansion() {
        // (λ²+4)(λ+5)(λ+10) = λ⁴ + 15λ³ + 54λ² + 60λ + 200, normalized by 200
        let spec = DesignSpec::new(4, 2.0, vec![5.0, 10.0], pins(&[(0, 1.0)]));
        let p = design(&spec).unwrap();
        for (a, e) in p.coeffs().iter().zip([1.0, 0.3, 0.27, 0.075, 0.005]) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn counting_and_validation_errors() {
        let under = DesignSpec::new(4, 2.0, vec![5.0], pins(&[(0, 1.0)]));
        assert!(matches!(design(&under), Err(DesignError::Underconstrained { .. })));
        let over = DesignSpec::new(4, 2.0, vec![5.0, 6.0], pins(&[(0, 1.0), (4, 1.0)]));
        assert!(matches!(design(&over), Err(DesignError::Overconstrained { .. })));
        let repeated = DesignSpec::new(4, 2.0, vec![5.0, 5.0], pins(&[(0, 1.0)]));
        assert!(matches!(design(&repeated), Err(DesignError::SingularSystem(_))));
        let zero_w = DesignSpec::new(4, 0.0, vec![5.0, 6.0], pins(&[(0, 1.0)]));
        assert!(matches!(design(&zero_w), Err(DesignError::InvalidSpec(_))));
        let no_pin = DesignSpec::new(2, 1.0, vec![1.0], pins(&[]));
        assert!(matches!(design(&no_pin), Err(DesignError::InvalidSpec(_))));
        let bad_index = DesignSpec::new(2, 1.0, vec![], pins(&[(3, 1.0)]));
        assert!(matches!(design(&bad_index), Err(DesignError::InvalidSpec(_))));
        let n1 = DesignSpec::new(1, 1.0, vec![], pins(&[(0, 1.0)]));
        assert!(matches!(design(&n1), Err(DesignError::InvalidSpec(_))));
    }

    #[test]
    fn structurally_singular_pins() {
        // ω = 1, n = 2, α₀ pinned: unknowns α₁, α₂ give cos row (0, −1) and
        // sin row (1, 0), which is regular
        let spec = DesignSpec::new(2, 1.0, vec![], pins(&[(0, 1.0)]));
        assert!(design(&spec).is_ok());
        let spec = DesignSpec::new(3, 1.0, vec![], pins(&[(0, 1.0), (2, 1.0)]));
        // n = 3 with α₀, α₂ pinned: α₁, α₃ only appear in the sin row → rank 1
        assert!(matches!(design(&spec), Err(DesignError::SingularSystem(_))));
    }

    #[test]
    fn solve_two_free_examples() {
        let known = pins(&[(0, 1.0), (1, 0.5), (4, 1.0)]);
        let (av, ag) = solve_two_free(&known, 4, 2, 3, 2.0).unwrap();
        assert!((av - 4.25).abs() < 1e-15 && (ag - 0.125).abs() < 1e-15);

        let (av, ag) = solve_two_free(&pins(&[(2, 1.0)]), 2, 0, 1, 3.0).unwrap();
        assert_eq!((av, ag), (9.0, 0.0));

        // 1 − α₂ + 2 = 0 and 1 − α₃ = 0
        let (av, ag) = solve_two_free(&pins(&[(0, 1.0), (1, 1.0), (4, 2.0)]), 4, 2, 3, 1.0).unwrap();
        assert_eq!((av, ag), (3.0, 1.0));
    }

    #[test]
    fn solve_two_free_agrees_with_design() {
        let known = pins(&[(0, 1.0), (1, 0.5), (4, 1.0)]);
        let (av, ag) = solve_two_free(&known, 4, 2, 3, 2.0).unwrap();
        let p = design(&DesignSpec::new(4, 2.0, vec![], known)).unwrap();
        assert!((p.coeffs()[2] - av).abs() < 1e-13);
        assert!((p.coeffs()[3] - ag).abs() < 1e-13);
    }

    #[test]
    fn solve_two_free_zero_pivot() {
        let known = pins(&[(0, 1.0), (2, 1.0), (4, 1.0)]);
        assert!(matches!(
            solve_two_free(&known, 4, 1, 3, 2.0),
            Err(DesignError::ZeroPivot { index: 1 })
        ));
        let known = pins(&[(0, 1.0), (1, 1.0), (3, 1.0)]);
        assert!(matches!(
            solve_two_free(&known, 4, 2, 4, 2.0),
            Err(DesignError::ZeroPivot { index: 4 })
        ));
        assert!(matches!(
            solve_two_free(&pins(&[(0, 1.0)]), 4, 2, 3, 2.0),
            Err(DesignError::InvalidSpec(_))
        ));
    }

    #[test]
    fn verify_pinned() {
        let spec = DesignSpec::new(4, 2.0, vec![], pins(&[(0, 1.0), (1, 0.5), (4, 1.0)]));
        let p = design(&spec).unwrap();
        let report = verify_design(&p, &spec, DEFAULT_VERIFY_TOLERANCE).unwrap();
        assert!(report.verdict);
        assert!(report.oscillation_residual.iter().all(|r| r.abs() < 1e-9));
        let classes: Vec<_> = report.roots.iter().map(|r| r.class).collect();
        assert_eq!(
            classes,
            vec![
                RegionClass::HarmonicBoundary,
                RegionClass::HarmonicBoundary,
                RegionClass::AsymptoticallyStable,
                RegionClass::AsymptoticallyStable
            ]
        );
    }

    #[test]
    fn verify_second_order() {
        let spec = DesignSpec::new(2, 1.0, vec![], pins(&[(2, 1.0)]));
        let p = Polynomial::new(vec![1.0, 0.0, 1.0]).unwrap();
        assert!(verify_design(&p, &spec, DEFAULT_VERIFY_TOLERANCE).unwrap().verdict);
        assert_eq!(design(&spec).unwrap().coeffs(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn verify_rejects_right_half_plane_root() {
        // (λ−1)(λ²+4) = λ³ − λ² + 4λ − 4
        let p = Polynomial::new(vec![-4.0, 4.0, -1.0, 1.0]).unwrap();
        let spec = DesignSpec::new(3, 2.0, vec![1.0], pins(&[(3, 1.0)]));
        let report = verify_design(&p, &spec, DEFAULT_VERIFY_TOLERANCE).unwrap();
        assert!(!report.verdict);
        assert!(report.roots.iter().any(|r| r.class == RegionClass::Unstable));
    }

    #[test]
    fn spec_json_schema() {
        let spec: DesignSpec = serde_json::from_str(
            r#"{"order": 4, "omega_k": 2, "pinned": {"0": 1, "1": 0.5, "4": 1}}"#,
        )
        .unwrap();
        assert_eq!(spec, DesignSpec::new(4, 2.0, vec![], pins(&[(0, 1.0), (1, 0.5), (4, 1.0)])));
        assert!(serde_json::from_str::<DesignSpec>(r#"{"order": 4, "omega_k": 2, "pinned": {}, "x": 1}"#).is_err());
    }
}
