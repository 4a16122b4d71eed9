//! Gaussian Keldysh response: retarded, advanced and Keldysh Green's
//! functions of a quadratic fluctuation form or of a real fluctuation
//! matrix, and the cavity spectra derived from them.
//!
//! Conventions: `G^R(ω) = [I₋(ω + iK) − H]⁻¹`, `G^K = −G^R D^K G^A` with
//! `D^K = 2i·diag(K)`. A fluctuation eigenvalue `ε` (time dependence
//! `e^{εt}`) appears as a pole of `G^R` at `ω = iε`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::bogoliubov::{minus_identity_diag, QuadraticForm};
use crate::error::{Error, Result};
use crate::idtc::{self, IdtcParams, IdtcState};
use crate::kpo::{self, KpoParams, KpoState};
use crate::numerics::{eigenvalues, ComplexMatrix, RealMatrix};
use crate::oscillator;
use crate::scalar::Scalar;
use crate::stability::STABILITY_TOL;

/// Threshold for calling a spectral feature a negative peak.
pub const TOL_PEAK: f64 = 1e-6;
/// Largest spectral weight allowed beyond the grid ends.
pub const TAIL_MASS_LIMIT: f64 = 1e-4;
/// Uniform core points of the adaptive grid.
pub const CORE_POINTS: usize = 4001;

#[derive(Debug, Clone, PartialEq)]
pub struct GreensSet<T = f64> {
    pub grid: Vec<T>,
    pub gr: Vec<ComplexMatrix<T>>,
    pub ga: Vec<ComplexMatrix<T>>,
    pub gk: Option<Vec<ComplexMatrix<T>>>,
    /// Grid points where the inverse Green's function is singular; the
    /// matrices stored there are NaN.
    pub pole: Vec<bool>,
}

impl<T: Scalar> GreensSet<T> {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `max ‖G^A − G^R†‖` over regular points.
    pub fn advanced_defect(&self) -> T {
        self.regular()
            .map(|i| (&self.ga[i] - &self.gr[i].adjoint()).max_abs())
            .fold(T::zero(), T::max)
    }

    /// `max ‖G^K + G^K†‖` over regular points.
    pub fn keldysh_defect(&self) -> T {
        match &self.gk {
            None => T::zero(),
            Some(gk) => self.regular().map(|i| (&gk[i] + &gk[i].adjoint()).max_abs()).fold(T::zero(), T::max),
        }
    }

    fn regular(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|i| !self.pole[*i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectraTable<T = f64> {
    pub grid: Vec<T>,
    /// Spectral function `−2 Im G^R₁₁`.
    pub a: Vec<T>,
    /// Power spectrum `i G^K₁₁`.
    pub c: Vec<T>,
    /// Fluorescence `(i/2)[G^K − G^R + G^A]₁₁`.
    pub s: Vec<T>,
}

fn check_grid<T: Scalar>(grid: &[T]) -> Result<()> {
    if grid.iter().any(|w| !w.is_finite()) {
        return Err(Error::Validation("frequency grid must be finite".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("frequency grid must be strictly increasing".into()));
    }
    Ok(())
}

fn nan_matrix<T: Scalar>(n: usize) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(n, n, |_, _| Complex::new(T::nan(), T::nan()))
}

/// Per-sector loss rates repeated over particle and hole blocks.
fn doubled<T: Scalar>(losses: &[T]) -> Vec<T> {
    losses.iter().chain(losses.iter()).copied().collect()
}

/// `D^K = 2i·diag(K, K)`.
pub fn keldysh_noise<T: Scalar>(losses: &[T]) -> ComplexMatrix<T> {
    let two = T::lit(2.0);
    let d: Vec<Complex<T>> = doubled(losses).into_iter().map(|k| Complex::new(T::zero(), two * k)).collect();
    ComplexMatrix::from_diagonal(&d)
}

/// `G^R(ω) = [I₋(ω + iK) − H]⁻¹` and `G^A = G^R†` on `grid`. Singular
/// points are flagged rather than failing the whole evaluation.
pub fn retarded_green<T: Scalar>(form: &QuadraticForm<T>, losses: &[T], grid: &[T]) -> Result<GreensSet<T>> {
    check_grid(grid)?;
    let n = form.modes();
    if losses.len() != n {
        return Err(Error::Dimension { expected: format!("{n} loss rates"), found: format!("{}", losses.len()) });
    }
    let sig = minus_identity_diag::<T>(n);
    let k = doubled(losses);
    let h = form.h();
    let points: Vec<Option<ComplexMatrix<T>>> = grid
        .par_iter()
        .map(|&w| {
            let mut m = h.scale(Complex::new(-T::one(), T::zero()));
            for i in 0..2 * n {
                m[(i, i)] = m[(i, i)] + Complex::new(sig[i] * w, sig[i] * k[i]);
            }
            m.inverse().ok().filter(|g| g.is_finite())
        })
        .collect();
    Ok(assemble(grid, points, 2 * n))
}

fn assemble<T: Scalar>(grid: &[T], points: Vec<Option<ComplexMatrix<T>>>, dim: usize) -> GreensSet<T> {
    let pole: Vec<bool> = points.iter().map(|g| g.is_none()).collect();
    let gr: Vec<ComplexMatrix<T>> = points.into_iter().map(|g| g.unwrap_or_else(|| nan_matrix(dim))).collect();
    let ga = gr.iter().map(|g| g.adjoint()).collect();
    GreensSet { grid: grid.to_vec(), gr, ga, gk: None, pole }
}

/// Adds `G^K = −G^R D^K G^A` at every grid point.
pub fn keldysh_green<T: Scalar>(set: &GreensSet<T>, dk: &ComplexMatrix<T>) -> Result<GreensSet<T>> {
    let dim = set.gr.first().map_or(dk.rows(), |g| g.rows());
    if dk.rows() != dim || dk.cols() != dim {
        return Err(Error::Validation(format!("noise matrix must be {dim}x{dim}, found {}x{}", dk.rows(), dk.cols())));
    }
    let gk = set
        .gr
        .par_iter()
        .zip(&set.ga)
        .map(|(gr, ga)| (&(gr * dk) * ga).scale(Complex::new(-T::one(), T::zero())))
        .collect();
    Ok(GreensSet { gk: Some(gk), ..set.clone() })
}

/// `A(ω) = −2 Im G^R₁₁(ω)`.
pub fn spectral_function<T: Scalar>(set: &GreensSet<T>) -> Vec<T> {
    set.gr.iter().map(|g| -T::lit(2.0) * g[(0, 0)].im).collect()
}

fn keldysh<T: Scalar>(set: &GreensSet<T>) -> Result<&Vec<ComplexMatrix<T>>> {
    set.gk.as_ref().ok_or_else(|| Error::Validation("Keldysh component missing".into()))
}

/// `C(ω) = i G^K₁₁(ω)`.
pub fn power_spectrum<T: Scalar>(set: &GreensSet<T>) -> Result<Vec<T>> {
    Ok(keldysh(set)?.iter().map(|g| -g[(0, 0)].im).collect())
}

/// `S(ω) = (i/2)[G^K − G^R + G^A]₁₁(ω)`.
pub fn fluorescence<T: Scalar>(set: &GreensSet<T>) -> Result<Vec<T>> {
    let gk = keldysh(set)?;
    let half_i = Complex::new(T::zero(), T::lit(0.5));
    Ok(gk
        .iter()
        .zip(&set.gr)
        .zip(&set.ga)
        .map(|((k, r), a)| (half_i * (k[(0, 0)] - r[(0, 0)] + a[(0, 0)])).re)
        .collect())
}

pub fn spectra<T: Scalar>(set: &GreensSet<T>) -> Result<SpectraTable<T>> {
    Ok(SpectraTable { grid: set.grid.clone(), a: spectral_function(set), c: power_spectrum(set)?, s: fluorescence(set)? })
}

/// Trapezoidal `∫ f dω / 2π` with the `1/ω²` tail beyond both grid ends
/// added analytically. Returns `(integral, tail mass)`.
pub fn integrate_with_tails<T: Scalar>(grid: &[T], f: &[T]) -> (T, T) {
    let half = T::lit(0.5);
    let mut sum = T::zero();
    for i in 1..grid.len() {
        let (a, b) = (f[i - 1], f[i]);
        if a.is_finite() && b.is_finite() {
            sum = sum + half * (a + b) * (grid[i] - grid[i - 1]);
        }
    }
    let tail = match (grid.first(), grid.last(), f.first(), f.last()) {
        (Some(&w0), Some(&w1), Some(&f0), Some(&f1)) => {
            let left = if w0 < T::zero() { f0 * w0.abs() } else { T::zero() };
            let right = if w1 > T::zero() { f1 * w1 } else { T::zero() };
            left + right
        }
        _ => T::zero(),
    };
    let two_pi = T::lit(2.0) * T::PI();
    ((sum + tail) / two_pi, tail.abs() / two_pi)
}

/// `⟨a†a⟩ = ½(∫ i G^K₁₁ dω/2π − 1)`. Fails when the weight left beyond the
/// grid exceeds [`TAIL_MASS_LIMIT`].
pub fn mode_occupation<T: Scalar>(set: &GreensSet<T>) -> Result<T> {
    let c = power_spectrum(set)?;
    let (total, tail) = integrate_with_tails(&set.grid, &c);
    if tail > T::lit(TAIL_MASS_LIMIT) {
        return Err(Error::Validation(format!("grid too narrow: tail weight {:e}", tail.as_f64())));
    }
    Ok(T::lit(0.5) * (total - T::one()))
}

/// `∫ A dω/2π`.
pub fn sum_rule<T: Scalar>(set: &GreensSet<T>) -> T {
    integrate_with_tails(&set.grid, &spectral_function(set)).0
}

/// Field-basis Green's functions from a real fluctuation matrix `M` over
/// quadratures. `pairs[k] = (re, im)` are the quadrature indices of the
/// reported field `δa_k = q_re + i q_im`, `losses[k]` its loss rate.
///
/// With the resolvent `R = (−iω − M)⁻¹` restricted to those quadratures and
/// `T` the quadrature-to-field map, `G^R = −i·T R T⁻¹·I₋`.
pub fn response_from_jacobian<T: Scalar>(
    m: &RealMatrix<T>,
    pairs: &[(usize, usize)],
    losses: &[T],
    grid: &[T],
) -> Result<GreensSet<T>> {
    check_grid(grid)?;
    if !m.is_square() {
        return Err(Error::Dimension { expected: "square matrix".into(), found: format!("{}x{}", m.rows(), m.cols()) });
    }
    if losses.len() != pairs.len() || pairs.iter().any(|(a, b)| *a >= m.rows() || *b >= m.rows()) {
        return Err(Error::Validation("quadrature pairs and losses do not match the matrix".into()));
    }
    let ev = eigenvalues(m)?;
    let worst = ev.iter().fold(T::neg_infinity(), |acc, e| acc.max(e.re));
    if !(worst < -T::lit(STABILITY_TOL)) {
        return Err(Error::Unstable { max_real_part: worst.as_f64() });
    }
    let n = pairs.len();
    let idx: Vec<usize> = pairs.iter().map(|p| p.0).chain(pairs.iter().map(|p| p.1)).collect();
    let (t, t_inv) = field_map::<T>(n);
    let sig = minus_identity_diag::<T>(n);
    let mc = m.to_complex();
    let dim = m.rows();
    let neg_i = Complex::new(T::zero(), -T::one());
    let points: Vec<Option<ComplexMatrix<T>>> = grid
        .par_iter()
        .map(|&w| {
            let mut a = mc.scale(Complex::new(-T::one(), T::zero()));
            for i in 0..dim {
                a[(i, i)] = a[(i, i)] + Complex::new(T::zero(), -w);
            }
            let r = a.inverse().ok()?;
            let block = ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| r[(idx[i], idx[j])]);
            let mut g = (&(&t * &block) * &t_inv).scale(neg_i);
            for j in 0..2 * n {
                for i in 0..2 * n {
                    g[(i, j)] = g[(i, j)] * Complex::new(sig[j], T::zero());
                }
            }
            Some(g).filter(|g| g.is_finite())
        })
        .collect();
    let set = assemble(grid, points, 2 * n);
    keldysh_green(&set, &keldysh_noise(losses))
}

/// `(δa, δa*) = T (q_re, q_im)` for `n` modes, and its inverse.
fn field_map<T: Scalar>(n: usize) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    let half = T::lit(0.5);
    let mut t = ComplexMatrix::zeros(2 * n, 2 * n);
    let mut ti = ComplexMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        t[(k, k)] = one;
        t[(k, n + k)] = i;
        t[(n + k, k)] = one;
        t[(n + k, n + k)] = -i;
        ti[(k, k)] = one * half;
        ti[(k, n + k)] = one * half;
        ti[(n + k, k)] = -i * half;
        ti[(n + k, n + k)] = i * half;
    }
    (t, ti)
}

/// A linearised system whose cavity response can be evaluated anywhere.
#[derive(Debug, Clone, PartialEq)]
pub enum ResponseSource<T = f64> {
    /// Quadratic fluctuation form with per-mode losses.
    Form { form: QuadraticForm<T>, losses: Vec<T> },
    /// Real quadrature fluctuation matrix with the reported field pairs.
    Jacobian { m: RealMatrix<T>, pairs: Vec<(usize, usize)>, losses: Vec<T> },
}

impl<T: Scalar> ResponseSource<T> {
    /// Damped oscillator `ω₀ a†a` with loss `κ`.
    pub fn oscillator(omega0: T, kappa: T) -> Self {
        Self::Form { form: oscillator::harmonic_form(omega0), losses: vec![kappa] }
    }

    pub fn kpo(p: &KpoParams<T>, s: &KpoState<T>) -> Self {
        let (form, losses) = kpo::keldysh_fluctuation_form(p, s);
        Self::Form { form, losses }
    }

    pub fn kpo_jacobian(p: &KpoParams<T>, s: &KpoState<T>) -> Result<Self> {
        Ok(Self::Jacobian { m: kpo::fluctuation_matrix(p, s)?, pairs: vec![(0, 1)], losses: vec![p.kappa] })
    }

    pub fn idtc_np(p: &IdtcParams<T>) -> Self {
        let (form, losses) = idtc::keldysh_fluctuation_form_np(p);
        Self::Form { form, losses }
    }

    /// Tangent-space fluctuation matrix of any IDTC steady state.
    pub fn idtc_jacobian(p: &IdtcParams<T>, s: &IdtcState<T>) -> Result<Self> {
        Ok(Self::Jacobian { m: idtc::reduced_fluctuation_matrix(p, s)?, pairs: vec![(0, 1)], losses: vec![p.kappa] })
    }

    /// Poles of `G^R` in the complex frequency plane.
    pub fn poles(&self) -> Result<Vec<Complex<T>>> {
        match self {
            Self::Form { form, losses } => {
                let n = form.modes();
                let sig = minus_identity_diag::<T>(n);
                let k = doubled(losses);
                let mut d = ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| form.h()[(i, j)] * Complex::new(sig[i], T::zero()));
                for i in 0..2 * n {
                    d[(i, i)] = d[(i, i)] - Complex::new(T::zero(), k[i]);
                }
                eigenvalues(&d)
            }
            Self::Jacobian { m, .. } => {
                let i = Complex::new(T::zero(), T::one());
                Ok(eigenvalues(m)?.into_iter().map(|e| i * e).collect())
            }
        }
    }

    /// All poles strictly in the lower half plane.
    pub fn is_stable(&self) -> Result<bool> {
        let worst = self.poles()?.iter().fold(T::neg_infinity(), |m, p| m.max(p.im));
        Ok(worst < -T::lit(STABILITY_TOL))
    }

    /// `G^R`, `G^A` and `G^K` on `grid`.
    pub fn evaluate(&self, grid: &[T]) -> Result<GreensSet<T>> {
        match self {
            Self::Form { form, losses } => keldysh_green(&retarded_green(form, losses, grid)?, &keldysh_noise(losses)),
            Self::Jacobian { m, pairs, losses } => response_from_jacobian(m, pairs, losses, grid),
        }
    }

    /// Uniform core of [`CORE_POINTS`] points over `±4Ω` (`Ω` the largest
    /// pole modulus), refined around every pole and extended geometrically
    /// to `±4·10⁴Ω`.
    pub fn adaptive_grid(&self) -> Result<Vec<T>> {
        let poles = self.poles()?;
        let omega = poles.iter().fold(T::lit(1e-3), |m, p| m.max(p.norm()));
        let w0 = T::lit(4.0) * omega;
        let mut grid = Vec::with_capacity(CORE_POINTS + 1000);
        let steps = T::lit((CORE_POINTS - 1) as f64);
        for i in 0..CORE_POINTS {
            grid.push(-w0 + T::lit(2.0) * w0 * T::lit(i as f64) / steps);
        }
        for p in &poles {
            let width = p.im.abs().max(T::lit(1e-6) * omega);
            for j in -100i32..=100 {
                let w = p.re + width * T::lit(0.1 * j as f64);
                if w.abs() < w0 {
                    grid.push(w);
                }
            }
        }
        let outer = 2000;
        let ratio = T::lit(1e4).powf(T::one() / T::lit(outer as f64));
        let mut w = w0;
        for _ in 0..outer {
            w = w * ratio;
            grid.push(w);
            grid.push(-w);
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let min_gap = T::epsilon() * T::lit(64.0) * w;
        grid.dedup_by(|b, a| (*b - *a).abs() <= min_gap);
        Ok(grid)
    }

    /// Spectra on the adaptive grid.
    pub fn spectra(&self) -> Result<SpectraTable<T>> {
        spectra(&self.evaluate(&self.adaptive_grid()?)?)
    }

    /// Cavity occupation from the power spectrum; unstable states fail.
    pub fn occupation(&self) -> Result<T> {
        self.require_stable()?;
        mode_occupation(&self.evaluate(&self.adaptive_grid()?)?)
    }

    /// `∫ A dω/2π` on the adaptive grid.
    pub fn sum_rule(&self) -> Result<T> {
        self.require_stable()?;
        Ok(sum_rule(&self.evaluate(&self.adaptive_grid()?)?))
    }

    /// `A` evaluated at the resonances `Re ω_p > 0` of the lower half plane.
    pub fn resonance_weights(&self) -> Result<Vec<(T, T)>> {
        let mut out = Vec::new();
        for p in self.poles()? {
            if p.re > T::zero() && p.im < T::zero() {
                let set = self.evaluate(&[p.re])?;
                out.push((p.re, spectral_function(&set)[0]));
            }
        }
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(out)
    }

    /// Some positive-frequency resonance carries negative spectral weight.
    pub fn inverted_resonance(&self) -> Result<bool> {
        Ok(self.resonance_weights()?.iter().any(|(_, a)| *a < -T::lit(TOL_PEAK)))
    }

    fn require_stable(&self) -> Result<()> {
        let worst = self.poles()?.iter().fold(T::neg_infinity(), |m, p| m.max(p.im));
        if worst < -T::lit(STABILITY_TOL) {
            Ok(())
        } else {
            Err(Error::Unstable { max_real_part: worst.as_f64() })
        }
    }
}

/// Exists `ω > 0` with `A(ω) < −TOL_PEAK`.
pub fn has_negative_weight_at_positive_frequency<T: Scalar>(grid: &[T], a: &[T]) -> bool {
    grid.iter().zip(a).any(|(w, v)| *w > T::zero() && *v < -T::lit(TOL_PEAK))
}

/// Largest-magnitude interior local extremum of `a` on `ω > 0`, as `(ω, A)`.
pub fn extremal_peak<T: Scalar>(grid: &[T], a: &[T]) -> Option<(T, T)> {
    let mut best: Option<(T, T)> = None;
    for i in 1..a.len().saturating_sub(1) {
        if grid[i] <= T::zero() || !a[i].is_finite() {
            continue;
        }
        let (l, c, r) = (a[i - 1], a[i], a[i + 1]);
        let extremum = (c >= l && c >= r) || (c <= l && c <= r);
        if extremum && best.map_or(true, |(_, v)| c.abs() > v.abs()) {
            best = Some((grid[i], c));
        }
    }
    best
}
