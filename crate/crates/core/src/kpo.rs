//! Kerr parametric oscillator.
//!
//! Rotating-frame mean-field flow for the cavity amplitude `α`:
//!
//! `dα/dt = i(Δα − U|α|²α − Gα*) − κα`
//!
//! Branch indices follow the usual numbering: `0` is the empty cavity,
//! `1, 2` carry `|α|² = (Δ − s)/U` and `3, 4` carry `|α|² = (Δ + s)/U` with
//! `s = √(|G|² − κ²)`; even branches are the negated partners.

use num_complex::Complex;
use num_traits::Zero;

use crate::bogoliubov::QuadraticForm;
use crate::error::{Error, Result};
use crate::numerics::{eig, newton_multistart, ring_seeds, roots_polynomial, solve_lyapunov, ComplexMatrix, RealMatrix};
use crate::stability::StabilityReport;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KpoParams<T = f64> {
    /// Half-pump detuning Δ.
    pub delta: T,
    /// Kerr nonlinearity U, nonzero.
    pub kerr: T,
    /// Complex two-photon pump G.
    pub pump: Complex<T>,
    /// Single-photon loss κ ≥ 0.
    pub kappa: T,
}

impl<T: Scalar> KpoParams<T> {
    pub fn new(delta: T, kerr: T, pump: Complex<T>, kappa: T) -> Result<Self> {
        let p = Self { delta, kerr, pump, kappa };
        p.validate()?;
        Ok(p)
    }

    /// Real-pump shorthand.
    pub fn real(delta: T, kerr: T, pump: T, kappa: T) -> Result<Self> {
        Self::new(delta, kerr, Complex::new(pump, T::zero()), kappa)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.delta, self.kerr, self.pump.re, self.pump.im, self.kappa].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Validation("KPO parameters must be finite".into()));
        }
        if self.kerr == T::zero() {
            return Err(Error::Validation("kerr must be nonzero".into()));
        }
        if self.kappa < T::zero() {
            return Err(Error::Validation("kappa must be non-negative".into()));
        }
        Ok(())
    }

    pub fn pump_abs(&self) -> T {
        self.pump.norm()
    }

    /// `(Δ, U, G) → (−Δ, −U, −G*)`; maps steady states by `α → α*`.
    pub fn mirrored(&self) -> Self {
        Self { delta: -self.delta, kerr: -self.kerr, pump: -self.pump.conj(), kappa: self.kappa }
    }

    fn sign_u(&self) -> T {
        self.kerr.signum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KpoLabel {
    /// Normal phase, `α = 0`.
    Np,
    /// Parametric phase state.
    Pps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KpoState<T = f64> {
    pub alpha: Complex<T>,
    pub label: KpoLabel,
    /// `0` for the normal phase, `1..=4` for the symmetry-broken branches.
    pub branch: u8,
}

impl<T: Scalar> KpoState<T> {
    pub fn normal() -> Self {
        Self { alpha: Complex::zero(), label: KpoLabel::Np, branch: 0 }
    }

    pub fn occupation(&self) -> T {
        self.alpha.norm_sqr()
    }

    /// ℤ₂ partner `−α` with the paired branch index.
    pub fn partner(&self) -> Self {
        let branch = match self.branch {
            0 => 0,
            b if b % 2 == 1 => b + 1,
            b => b - 1,
        };
        Self { alpha: -self.alpha, label: self.label, branch }
    }
}

/// `−Δ|α|² + (U/2)|α|⁴ + G_Re(α_Re² − α_Im²) + 2 G_Im α_Re α_Im`.
pub fn mf_energy<T: Scalar>(p: &KpoParams<T>, alpha: Complex<T>) -> T {
    let n = alpha.norm_sqr();
    let (ar, ai) = (alpha.re, alpha.im);
    -p.delta * n + p.kerr * T::lit(0.5) * n * n + p.pump.re * (ar * ar - ai * ai) + T::lit(2.0) * p.pump.im * ar * ai
}

/// Closed-system energy minima: the empty cavity if `sign(U)Δ < −|G|`
/// (or on the boundary), otherwise the degenerate symmetry-broken pair.
pub fn closed_ground_state<T: Scalar>(p: &KpoParams<T>) -> Vec<(KpoState<T>, T)> {
    let g = p.pump_abs();
    let su = p.sign_u();
    let n = (p.delta + su * g) / p.kerr;
    if su * p.delta < -g || !(n > T::zero()) {
        return vec![(KpoState::normal(), T::zero())];
    }
    // e^{2iθ} = −sign(U) G/|G|; any phase when G = 0.
    let theta = if g > T::zero() { (-p.pump * su).arg() * T::lit(0.5) } else { T::zero() };
    let alpha = Complex::from_polar(n.sqrt(), theta);
    let (b1, b2) = if su > T::zero() { (3, 4) } else { (1, 2) };
    let s = KpoState { alpha, label: KpoLabel::Pps, branch: b1 };
    let e = mf_energy(p, alpha);
    vec![(s, e), (KpoState { branch: b2, ..s.partner() }, e)]
}

/// Second-order excitation form around `s`: diagonal `−Δ + 2U|α|²`,
/// anomalous entry `G + Uα²`.
pub fn closed_excitation_form<T: Scalar>(p: &KpoParams<T>, s: &KpoState<T>) -> QuadraticForm<T> {
    let d = Complex::new(-p.delta + T::lit(2.0) * p.kerr * s.occupation(), T::zero());
    let b = p.pump + s.alpha * s.alpha * p.kerr;
    let h = ComplexMatrix::from_row_slice(2, 2, &[d, b, b.conj(), d]);
    QuadraticForm::new(h, mf_energy(p, s.alpha)).expect("excitation form is Hermitian by construction")
}

/// Right-hand side of the mean-field flow.
pub fn eom<T: Scalar>(p: &KpoParams<T>, alpha: Complex<T>) -> Complex<T> {
    let i = Complex::new(T::zero(), T::one());
    let n = alpha.norm_sqr();
    i * (alpha * p.delta - alpha * (p.kerr * n) - p.pump * alpha.conj()) - alpha * p.kappa
}

/// Jacobian of the flow over `(α_Re, α_Im)` at an arbitrary `α`:
/// `[[Im B − κ, −c − Re B], [c − Re B, −Im B − κ]]` with `B = G + Uα²`
/// and `c = Δ − 2U|α|²`.
pub fn jacobian<T: Scalar>(p: &KpoParams<T>, alpha: Complex<T>) -> RealMatrix<T> {
    let b = p.pump + alpha * alpha * p.kerr;
    let c = p.delta - T::lit(2.0) * p.kerr * alpha.norm_sqr();
    RealMatrix::from_row_slice(2, 2, &[b.im - p.kappa, -c - b.re, c - b.re, -b.im - p.kappa])
}

/// The matrix `E(α)` with `d/dt (α_Re, α_Im) = E(α)·(α_Re, α_Im)`.
///
/// It coincides with [`jacobian`] only at `α = 0`; elsewhere it lacks the
/// `±2U|α|²` off-diagonal terms of the linearization.
pub fn eom_matrix<T: Scalar>(p: &KpoParams<T>, alpha: Complex<T>) -> RealMatrix<T> {
    let (ar, ai) = (alpha.re, alpha.im);
    let u = p.kerr;
    let two = T::lit(2.0);
    RealMatrix::from_row_slice(
        2,
        2,
        &[
            two * u * ar * ai + p.pump.im - p.kappa,
            -p.delta + u * (-ar * ar + ai * ai) - p.pump.re,
            p.delta - u * (ar * ar - ai * ai) - p.pump.re,
            -two * u * ar * ai - p.pump.im - p.kappa,
        ],
    )
}

/// Coefficients (ascending) of the steady-state amplitude polynomial in
/// `n = |α|²`: `n (U²n² − 2UΔn + Δ² + κ² − |G|²)`.
pub fn amplitude_polynomial<T: Scalar>(p: &KpoParams<T>) -> [T; 4] {
    let u = p.kerr;
    [T::zero(), p.delta * p.delta + p.kappa * p.kappa - p.pump.norm_sqr(), -T::lit(2.0) * u * p.delta, u * u]
}

/// `s = √(|G|² − κ²)` when real.
fn pps_split<T: Scalar>(p: &KpoParams<T>) -> Option<T> {
    let d = p.pump.norm_sqr() - p.kappa * p.kappa;
    (d >= T::zero()).then(|| d.sqrt())
}

/// Closed-form steady states: the empty cavity plus every symmetry-broken
/// branch whose amplitude is positive.
pub fn open_steady_states<T: Scalar>(p: &KpoParams<T>) -> Vec<KpoState<T>> {
    let mut out = vec![KpoState::normal()];
    let Some(s) = pps_split(p) else { return out };
    if p.pump_abs() == T::zero() && p.kappa == T::zero() {
        // Closed, unpumped: the ring |α|² = Δ/U is degenerate; report α real.
        let n = p.delta / p.kerr;
        if n > T::zero() {
            let a = Complex::new(n.sqrt(), T::zero());
            out.push(KpoState { alpha: a, label: KpoLabel::Pps, branch: 3 });
            out.push(KpoState { alpha: -a, label: KpoLabel::Pps, branch: 4 });
        }
        return out;
    }
    let i = Complex::new(T::zero(), T::one());
    let branches: &[(u8, T)] = if s == T::zero() { &[(3, T::one())] } else { &[(1, -T::one()), (3, T::one())] };
    for &(b, sign) in branches {
        let n = (p.delta + sign * s) / p.kerr;
        if !(n > T::zero()) {
            continue;
        }
        // (Δ − U n + iκ) α = G α*  ⇒  e^{2iθ} = G / (−sign·s + iκ).
        let denom = i * p.kappa - Complex::new(sign * s, T::zero());
        let theta = (p.pump / denom).arg() * T::lit(0.5);
        let alpha = Complex::from_polar(n.sqrt(), theta);
        out.push(KpoState { alpha, label: KpoLabel::Pps, branch: b });
        out.push(KpoState { alpha: -alpha, label: KpoLabel::Pps, branch: b + 1 });
    }
    out
}

/// Phases from the displayed tangent formulas `tan θ₁ = (−G_Re + s)/(G_Im + κ)`
/// and `tan θ₃ = (−G_Re − s)/(G_Im + κ)`, folded into `(−π/2, π/2]`.
pub fn pps_phase_tangents<T: Scalar>(p: &KpoParams<T>) -> Option<(T, T)> {
    let s = pps_split(p)?;
    let den = p.pump.im + p.kappa;
    Some(((-p.pump.re + s) / den, (-p.pump.re - s) / den))
}

/// Steady states from damped-Newton multistart on the flow, without using
/// the closed forms. Seeds: rings at radii `0.1`, `1`, `√(Δ/U)` plus one
/// ring per positive root of the amplitude polynomial.
pub fn open_steady_states_numeric<T: Scalar>(p: &KpoParams<T>, tol: T) -> Vec<Complex<T>> {
    let mut seeds = ring_seeds((p.delta / p.kerr).sqrt());
    if let Ok(roots) = roots_polynomial(&amplitude_polynomial(p)) {
        for r in roots {
            if r.re > T::zero() && r.im.abs() <= T::lit(1e-8) * (T::one() + r.re) {
                let rad = r.re.sqrt();
                for k in 0..8 {
                    let phi = T::lit(0.05) + T::lit(k as f64) * T::FRAC_PI_4();
                    seeds.push(vec![rad * phi.cos(), rad * phi.sin()]);
                }
            }
        }
    }
    let res = newton_multistart(
        |x: &[T]| {
            let f = eom(p, Complex::new(x[0], x[1]));
            vec![f.re, f.im]
        },
        |x: &[T]| jacobian(p, Complex::new(x[0], x[1])),
        &seeds,
        tol,
    );
    res.states.into_iter().map(|x| Complex::new(x[0], x[1])).collect()
}

fn residual_scale<T: Scalar>(p: &KpoParams<T>, alpha: Complex<T>) -> T {
    let a = alpha.norm();
    T::one() + (p.delta.abs() + p.kerr.abs() * a * a + p.pump_abs() + p.kappa) * a
}

/// Steady-state residual `|dα/dt|`.
pub fn steady_residual<T: Scalar>(p: &KpoParams<T>, s: &KpoState<T>) -> T {
    eom(p, s.alpha).norm()
}

fn check_steady<T: Scalar>(p: &KpoParams<T>, s: &KpoState<T>) -> Result<()> {
    let r = steady_residual(p, s);
    if r > T::tol(1e-8) * residual_scale(p, s.alpha) {
        return Err(Error::Validation(format!("state is not stationary (residual {:e})", r.as_f64())));
    }
    Ok(())
}

/// Fluctuation matrix over `(δα_Re, δα_Im)` at a steady state.
pub fn fluctuation_matrix<T: Scalar>(p: &KpoParams<T>, s: &KpoState<T>) -> Result<RealMatrix<T>> {
    check_steady(p, s)?;
    Ok(jacobian(p, s.alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KpoEigenvalues<T = f64> {
    pub plus: Complex<T>,
    pub minus: Complex<T>,
    pub stable: bool,
    /// Both real and distinct with `κ > 0`.
    pub overdamped: bool,
}

/// `ε± = −κ ± √(−[Δ² − |G|² − 4UΔ|α|² − 4U α_Re α_Im G_Im
/// − 2U(α_Re² − α_Im²) G_Re + 3U²|α|⁴])`.
pub fn fluctuation_eigenvalues<T: Scalar>(p: &KpoParams<T>, s: &KpoState<T>) -> KpoEigenvalues<T> {
    let (ar, ai) = (s.alpha.re, s.alpha.im);
    let n = s.occupation();
    let u = p.kerr;
    let bracket = p.delta * p.delta - p.pump.norm_sqr() - T::lit(4.0) * u * p.delta * n
        - T::lit(4.0) * u * ar * ai * p.pump.im
        - T::lit(2.0) * u * (ar * ar - ai * ai) * p.pump.re
        + T::lit(3.0) * u * u * n * n;
    let root = Complex::new(-bracket, T::zero()).sqrt();
    let base = Complex::new(-p.kappa, T::zero());
    let plus = base + root;
    let minus = base - root;
    let tol = T::lit(crate::stability::STABILITY_TOL);
    KpoEigenvalues {
        plus,
        minus,
        stable: plus.re.max(minus.re) < -tol,
        overdamped: -bracket > T::zero() && p.kappa > T::zero(),
    }
}

/// Closed-form normal-phase quadrature variances, valid for `Δ² − |G|² + κ² > 0`.
pub fn np_variance_closed_form<T: Scalar>(p: &KpoParams<T>) -> Result<(T, T)> {
    let (d, gr, gi, k) = (p.delta, p.pump.re, p.pump.im, p.kappa);
    let den = d * d - gi * gi - gr * gr + k * k;
    if !(den > T::zero()) {
        return Err(Error::Unstable { max_real_part: (-k + (-den + k * k).max(T::zero()).sqrt()).as_f64() });
    }
    Ok(((d * d + k * (gi + k) + d * gr) / den, (d * d + k * (k - gi) - d * gr) / den))
}

/// Quadrature diffusion matrix `2κ I`.
pub fn diffusion_matrix<T: Scalar>(p: &KpoParams<T>) -> RealMatrix<T> {
    RealMatrix::identity(2).scale(T::lit(2.0) * p.kappa)
}

/// Stationary quadrature covariance from the Lyapunov equation.
pub fn covariance<T: Scalar>(p: &KpoParams<T>, s: &KpoState<T>) -> Result<RealMatrix<T>> {
    let m = fluctuation_matrix(p, s)?;
    solve_lyapunov(&m, &diffusion_matrix(p))
}

/// Eigenvalues of the fluctuation matrix with verdict and, when stable, the
/// covariance.
pub fn stability_report<T: Scalar>(p: &KpoParams<T>, s: &KpoState<T>) -> Result<StabilityReport<T>> {
    let m = fluctuation_matrix(p, s)?;
    let ev = fluctuation_eigenvalues(p, s);
    let values = eig(&m)?.values;
    let mut rep = StabilityReport::from_eigenvalues(values, vec![false; 2], ev.overdamped);
    if rep.stable {
        rep.covariance = solve_lyapunov(&m, &diffusion_matrix(p)).ok();
    }
    Ok(rep)
}

/// Quadratic fluctuation form and per-mode loss rates for the Gaussian
/// Keldysh action around `s`.
pub fn keldysh_fluctuation_form<T: Scalar>(p: &KpoParams<T>, s: &KpoState<T>) -> (QuadraticForm<T>, Vec<T>) {
    (closed_excitation_form(p, s), vec![p.kappa])
}

/// Closed-form normal-phase Green's functions `(G^R, G^K)` at frequency `ω`.
///
/// `G^K = −G^R D^K G^A` with `D^K = 2iκ I`, which makes `i G^K₁₁ ≥ 0`.
pub fn np_green_closed_form<T: Scalar>(p: &KpoParams<T>, omega: T) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    let (d, k, g) = (p.delta, p.kappa, p.pump);
    let g2 = g.norm_sqr();
    let i = Complex::new(T::zero(), T::one());
    let w = Complex::new(omega, T::zero());
    let re = |x: T| Complex::new(x, T::zero());
    let den = (w + i * k) * (w + i * k) - re(d * d) + re(g2);
    if den.norm() <= T::epsilon() * (T::one() + omega * omega + d * d + g2) {
        return Err(Error::Pole { omega: omega.as_f64() });
    }
    let gr = ComplexMatrix::from_row_slice(2, 2, &[w - re(d) + i * k, -g, -g.conj(), -w - re(d) - i * k]).scale(den.inv());
    let abs2 = den.norm_sqr();
    let pref = -i * (T::lit(2.0) * k / abs2);
    let two = re(T::lit(2.0));
    let dk = re(d) - i * k;
    let gk = ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            re((omega - d) * (omega - d) + g2 + k * k),
            two * g * dk,
            two * g.conj() * dk.conj(),
            re((omega + d) * (omega + d) + g2 + k * k),
        ],
    )
    .scale(pref);
    Ok((gr, gk))
}

/// Closed-system normal-phase frequencies `±√(Δ² − |G|²)`.
pub fn np_frequencies<T: Scalar>(p: &KpoParams<T>) -> (Complex<T>, Complex<T>) {
    let w = Complex::new(p.delta * p.delta - p.pump.norm_sqr(), T::zero()).sqrt();
    (w, -w)
}
