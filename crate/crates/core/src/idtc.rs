//! Interpolating Dicke–Tavis–Cummings model.
//!
//! A single cavity mode `a` couples to a collective spin through
//! `2λ_x S_x(a + a†) + 2λ_y iS_y(a − a†)`. Mean-field variables are rescaled
//! so that the spin lives on the sphere `X² + Y² + Z² = 1/4`, with the normal
//! phase at the south pole. With `α = u + iv` the flow reads
//!
//! ```text
//! du/dt = ω_c v − 2λ_y Y − κu
//! dv/dt = −ω_c u − 2λ_x X − κv
//! dX/dt = −ω_z Y − 4λ_y v Z
//! dY/dt = ω_z X − 4λ_x u Z
//! dZ/dt = 4λ_x u Y + 4λ_y v X
//! ```

use num_complex::Complex;
use num_traits::Zero;

use crate::bogoliubov::{diagonalize_excitations, ExcitationMode, ExcitationSpectrum, QuadraticForm};
use crate::error::{Error, Result};
use crate::numerics::{eig, newton_multistart, solve_lyapunov, ComplexMatrix, RealMatrix};
use crate::scalar::Scalar;
use crate::stability::StabilityReport;

/// Tolerance for tagging the radial zero mode of the 5×5 Jacobian.
pub const TOL_ZERO: f64 = 1e-9;
/// Residual bound for accepted steady states.
pub const STEADY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdtcParams<T = f64> {
    pub omega_c: T,
    pub omega_z: T,
    pub lambda_x: T,
    pub lambda_y: T,
    /// Cavity loss rate.
    pub kappa: T,
}

impl<T: Scalar> IdtcParams<T> {
    pub fn new(omega_c: T, omega_z: T, lambda_x: T, lambda_y: T, kappa: T) -> Result<Self> {
        let p = Self { omega_c, omega_z, lambda_x, lambda_y, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.omega_c, self.omega_z, self.lambda_x, self.lambda_y, self.kappa];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation("IDTC parameters must be finite".into()));
        }
        if self.omega_c <= T::zero() || self.omega_z <= T::zero() {
            return Err(Error::Validation("omega_c and omega_z must be positive".into()));
        }
        if self.lambda_x < T::zero() || self.lambda_y < T::zero() || self.kappa < T::zero() {
            return Err(Error::Validation("couplings and kappa must be non-negative".into()));
        }
        Ok(())
    }

    /// Copy with both couplings replaced.
    pub fn with_couplings(&self, lambda_x: T, lambda_y: T) -> Self {
        Self { lambda_x, lambda_y, ..*self }
    }

    fn scale(&self) -> T {
        T::one() + self.omega_c + self.omega_z + self.lambda_x + self.lambda_y + self.kappa
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IdtcLabel {
    /// `α = 0`, spin at the south pole.
    Np,
    /// Superradiant phase.
    Sp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdtcState<T = f64> {
    pub alpha: Complex<T>,
    pub x: T,
    pub y: T,
    pub z: T,
    pub label: IdtcLabel,
    /// `0` for the normal phase; superradiant pairs use `(1, 2)`, `(3, 4)`
    /// in order of increasing `|α|`.
    pub branch: u8,
}

impl<T: Scalar> IdtcState<T> {
    pub fn normal() -> Self {
        Self { alpha: Complex::zero(), x: T::zero(), y: T::zero(), z: T::lit(-0.5), label: IdtcLabel::Np, branch: 0 }
    }

    pub fn occupation(&self) -> T {
        self.alpha.norm_sqr()
    }

    /// `X² + Y² + Z² − 1/4`.
    pub fn spin_length_defect(&self) -> T {
        self.x * self.x + self.y * self.y + self.z * self.z - T::lit(0.25)
    }

    /// ℤ₂ image `(−α, −X, −Y, Z)`.
    pub fn partner(&self) -> Self {
        let branch = match self.branch {
            0 => 0,
            b if b % 2 == 1 => b + 1,
            b => b - 1,
        };
        Self { alpha: -self.alpha, x: -self.x, y: -self.y, branch, ..*self }
    }

    /// `(u, v, X, Y, Z)`.
    pub fn to_vec(&self) -> [T; 5] {
        [self.alpha.re, self.alpha.im, self.x, self.y, self.z]
    }

    fn from_slice(s: &[T], label: IdtcLabel, branch: u8) -> Self {
        Self { alpha: Complex::new(s[0], s[1]), x: s[2], y: s[3], z: s[4], label, branch }
    }
}

/// `λ_c = √(ω_c ω_z)/2`.
pub fn critical_coupling<T: Scalar>(p: &IdtcParams<T>) -> T {
    (p.omega_c * p.omega_z).sqrt() * T::lit(0.5)
}

/// Normal-phase instability threshold of the lossy Dicke line (`λ_y = 0`):
/// `λ*² = ω_z(ω_c² + κ²)/(4ω_c)`.
pub fn dissipative_threshold<T: Scalar>(p: &IdtcParams<T>) -> T {
    (p.omega_z * (p.omega_c * p.omega_c + p.kappa * p.kappa) / (T::lit(4.0) * p.omega_c)).sqrt()
}

/// Mean-field energy per spin `ω_c|α|² + ω_z Z + 4λ_x u X − 4λ_y v Y`.
pub fn mf_energy<T: Scalar>(p: &IdtcParams<T>, s: &IdtcState<T>) -> T {
    let four = T::lit(4.0);
    p.omega_c * s.alpha.norm_sqr() + p.omega_z * s.z + four * p.lambda_x * s.alpha.re * s.x
        - four * p.lambda_y * s.alpha.im * s.y
}

/// Closed-system energy minima with their energies. Below `λ_c` on both
/// couplings this is the normal phase; otherwise the pair polarised along
/// the stronger coupling, with `Z = −ω_cω_z/(8λ²)`. On the Tavis–Cummings
/// line the minima form a ring and the `X`-polarised pair is returned.
pub fn closed_ground_state<T: Scalar>(p: &IdtcParams<T>) -> Vec<(IdtcState<T>, T)> {
    let lc = critical_coupling(p);
    let along_x = p.lambda_x >= p.lambda_y;
    let lam = p.lambda_x.max(p.lambda_y);
    if lam <= lc {
        let np = IdtcState::normal();
        return vec![(np, mf_energy(p, &np))];
    }
    let z = -p.omega_c * p.omega_z / (T::lit(8.0) * lam * lam);
    let r = (T::lit(0.25) - z * z).max(T::zero()).sqrt();
    let two = T::lit(2.0);
    let s = if along_x {
        IdtcState { alpha: Complex::new(-two * lam * r / p.omega_c, T::zero()), x: r, y: T::zero(), z, label: IdtcLabel::Sp, branch: 1 }
    } else {
        IdtcState { alpha: Complex::new(T::zero(), two * lam * r / p.omega_c), x: T::zero(), y: r, z, label: IdtcLabel::Sp, branch: 1 }
    };
    let e = mf_energy(p, &s);
    vec![(s, e), (s.partner(), e)]
}

/// Normal-phase fluctuation form over `(a, b, a†, b†)`, `b` the
/// Holstein–Primakoff boson of the spin.
pub fn np_quadratic_form<T: Scalar>(p: &IdtcParams<T>) -> QuadraticForm<T> {
    let re = |x: T| Complex::new(x, T::zero());
    let (wc, wz) = (re(p.omega_c), re(p.omega_z));
    let s = re(p.lambda_x + p.lambda_y);
    let d = re(p.lambda_x - p.lambda_y);
    let o = Complex::zero();
    #[rustfmt::skip]
    let h = ComplexMatrix::from_row_slice(4, 4, &[
        wc, s, o, d,
        s, wz, d, o,
        o, d, wc, s,
        d, o, s, wz,
    ]);
    QuadraticForm::new(h, T::zero()).expect("real symmetric form")
}

/// Closed normal-phase frequencies `(soft, hard)` from the quartic
///
/// `ω⁴ − (ω_c² + ω_z² + 8λ_xλ_y)ω² + (ω_cω_z − 4λ_xλ_y)² − 4ω_cω_z(λ_x − λ_y)² = 0`,
///
/// principal square roots of the two `ω²` branches. An imaginary soft
/// frequency marks the unphysical normal phase.
pub fn np_frequencies<T: Scalar>(p: &IdtcParams<T>) -> (Complex<T>, Complex<T>) {
    let (wc, wz, lx, ly) = (p.omega_c, p.omega_z, p.lambda_x, p.lambda_y);
    let four = T::lit(4.0);
    let sum = wc * wc + wz * wz + T::lit(8.0) * lx * ly;
    let a = wc * wz - four * lx * ly;
    let b = lx - ly;
    let prod = a * a - four * wc * wz * b * b;
    let root = Complex::new(sum * sum - four * prod, T::zero()).sqrt();
    let half = T::lit(0.5);
    let s = Complex::new(sum, T::zero());
    (((s - root) * half).sqrt(), ((s + root) * half).sqrt())
}

/// Alternative closed expression
/// `ω² = ½(4(λ_x² + λ_y²) + ω_c² + ω_z² ∓ √(16(λ_x² − λ_y²)² + 8(λ_x² + λ_y²)(ω_c + ω_z)² + (ω_c² − ω_z²)²))`.
///
/// It agrees with [`np_frequencies`] on the Tavis–Cummings line and at
/// `λ_c`, but not elsewhere; the spectrum of [`np_quadratic_form`] follows
/// [`np_frequencies`].
pub fn np_frequencies_alt<T: Scalar>(p: &IdtcParams<T>) -> (Complex<T>, Complex<T>) {
    let (wc, wz) = (p.omega_c, p.omega_z);
    let (lx2, ly2) = (p.lambda_x * p.lambda_x, p.lambda_y * p.lambda_y);
    let sum = T::lit(4.0) * (lx2 + ly2) + wc * wc + wz * wz;
    let dl = lx2 - ly2;
    let ws = wc + wz;
    let dw = wc * wc - wz * wz;
    let disc = T::lit(16.0) * dl * dl + T::lit(8.0) * (lx2 + ly2) * ws * ws + dw * dw;
    let root = Complex::new(disc, T::zero()).sqrt();
    let s = Complex::new(sum, T::zero());
    let half = T::lit(0.5);
    (((s - root) * half).sqrt(), ((s + root) * half).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpExcitations<T = f64> {
    /// Closed-form soft frequency.
    pub soft: Complex<T>,
    /// Closed-form hard frequency.
    pub hard: Complex<T>,
    /// Spectrum of [`np_quadratic_form`].
    pub spectrum: ExcitationSpectrum<T>,
    /// Largest distance between `{±soft, ±hard}` and the spectrum.
    pub defect: T,
}

impl<T: Scalar> NpExcitations<T> {
    /// Mode at `+soft`.
    pub fn soft_mode(&self) -> &ExcitationMode<T> {
        self.nearest(self.soft)
    }

    /// Mode at `+hard`.
    pub fn hard_mode(&self) -> &ExcitationMode<T> {
        self.nearest(self.hard)
    }

    /// Soft frequency is real.
    pub fn physical(&self) -> bool {
        self.soft_mode().physical && self.hard_mode().physical
    }

    fn nearest(&self, w: Complex<T>) -> &ExcitationMode<T> {
        self.spectrum
            .modes
            .iter()
            .min_by(|a, b| (a.frequency - w).norm().partial_cmp(&(b.frequency - w).norm()).unwrap())
            .expect("four modes")
    }
}

/// Closed-system normal-phase excitations with the Bogoliubov cross-check.
pub fn closed_np_excitations<T: Scalar>(p: &IdtcParams<T>) -> Result<NpExcitations<T>> {
    let (soft, hard) = np_frequencies(p);
    let spectrum = diagonalize_excitations(&np_quadratic_form(p))?;
    let freqs = spectrum.frequencies();
    let mut defect = T::zero();
    for w in [soft, -soft, hard, -hard] {
        let d = freqs.iter().map(|f| (*f - w).norm()).fold(T::infinity(), T::min);
        defect = defect.max(d);
    }
    Ok(NpExcitations { soft, hard, spectrum, defect })
}

/// Time derivatives `(dα/dt, dX/dt, dY/dt, dZ/dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdtcRhs<T = f64> {
    pub d_alpha: Complex<T>,
    pub dx: T,
    pub dy: T,
    pub dz: T,
}

pub fn mean_field_rhs<T: Scalar>(p: &IdtcParams<T>, s: &IdtcState<T>) -> IdtcRhs<T> {
    let f = flow(p, &s.to_vec());
    IdtcRhs { d_alpha: Complex::new(f[0], f[1]), dx: f[2], dy: f[3], dz: f[4] }
}

fn flow<T: Scalar>(p: &IdtcParams<T>, s: &[T]) -> [T; 5] {
    let (u, v, x, y, z) = (s[0], s[1], s[2], s[3], s[4]);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let (wc, wz, lx, ly, k) = (p.omega_c, p.omega_z, p.lambda_x, p.lambda_y, p.kappa);
    [
        wc * v - two * ly * y - k * u,
        -wc * u - two * lx * x - k * v,
        -wz * y - four * ly * v * z,
        wz * x - four * lx * u * z,
        four * lx * u * y + four * ly * v * x,
    ]
}

/// Analytic Jacobian of the flow over `(u, v, X, Y, Z)`.
pub fn jacobian<T: Scalar>(p: &IdtcParams<T>, s: &[T]) -> RealMatrix<T> {
    let (u, v, x, y, z) = (s[0], s[1], s[2], s[3], s[4]);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let (wc, wz, lx, ly, k) = (p.omega_c, p.omega_z, p.lambda_x, p.lambda_y, p.kappa);
    let o = T::zero();
    #[rustfmt::skip]
    let m = RealMatrix::from_row_slice(5, 5, &[
        -k, wc, o, -two * ly, o,
        -wc, -k, -two * lx, o, o,
        o, -four * ly * z, o, -wz, -four * ly * v,
        -four * lx * z, o, wz, o, -four * lx * u,
        four * lx * y, four * ly * x, four * ly * v, four * lx * u, o,
    ]);
    m
}

/// `‖flow‖₂` together with the spin-length defect.
pub fn steady_residual<T: Scalar>(p: &IdtcParams<T>, s: &IdtcState<T>) -> T {
    let f = flow(p, &s.to_vec());
    let d = s.spin_length_defect();
    (f.iter().map(|x| *x * *x).sum::<T>() + d * d).sqrt()
}

/// Cavity amplitude enslaved to a spin configuration.
fn slaved_alpha<T: Scalar>(p: &IdtcParams<T>, x: T, y: T) -> Complex<T> {
    let two = T::lit(2.0);
    let num = Complex::new(two * p.lambda_y * y, two * p.lambda_x * x);
    -num / Complex::new(p.kappa, p.omega_c)
}

/// Seeds on the Bloch sphere with the cavity slaved to the spin.
fn sphere_seeds<T: Scalar>(p: &IdtcParams<T>) -> Vec<Vec<T>> {
    let half = T::lit(0.5);
    let mut seeds = Vec::new();
    for theta in [0.15, 0.5, 0.9, 1.3, 1.7, 2.1, 2.6, 3.0] {
        let th = T::lit(theta);
        for k in 0..8 {
            let phi = T::lit(0.1) + T::lit(k as f64) * T::FRAC_PI_4();
            let x = half * th.sin() * phi.cos();
            let y = half * th.sin() * phi.sin();
            let z = -half * th.cos();
            let a = slaved_alpha(p, x, y);
            seeds.push(vec![a.re, a.im, x, y, z]);
        }
    }
    seeds
}

/// Steady states: the normal phase first, then superradiant pairs found by
/// damped-Newton multistart on the flow plus the spin-length constraint.
///
/// Fixed points with `α = 0` other than the normal phase (the inverted pole)
/// are not reported.
pub fn open_steady_states<T: Scalar>(p: &IdtcParams<T>) -> Vec<IdtcState<T>> {
    let tol = T::tol(STEADY_TOL) * T::lit(0.1);
    let res = newton_multistart(
        |s: &[T]| {
            let mut f = flow(p, s).to_vec();
            f.push(s[2] * s[2] + s[3] * s[3] + s[4] * s[4] - T::lit(0.25));
            f
        },
        |s: &[T]| {
            let j = jacobian(p, s);
            let two = T::lit(2.0);
            RealMatrix::from_fn(6, 5, |i, c| {
                if i < 5 {
                    j[(i, c)]
                } else {
                    match c {
                        2..=4 => two * s[c],
                        _ => T::zero(),
                    }
                }
            })
        },
        &sphere_seeds(p),
        tol,
    );
    let merge = T::tol(1e-7) * p.scale();
    let mut sp: Vec<[T; 5]> = Vec::new();
    let mut push = |s: [T; 5]| {
        let close = |a: &[T; 5]| a.iter().zip(&s).map(|(x, y)| (*x - *y).abs()).fold(T::zero(), T::max) <= merge;
        if !sp.iter().any(close) {
            sp.push(s);
        }
    };
    for s in res.states {
        let amp = (s[0] * s[0] + s[1] * s[1]).sqrt();
        if amp <= merge {
            continue;
        }
        let v = [s[0], s[1], s[2], s[3], s[4]];
        push(v);
        push([-v[0], -v[1], -v[2], -v[3], v[4]]);
    }

    // Canonical representative of each pair: larger X, then larger Y.
    let mut reps: Vec<[T; 5]> = Vec::new();
    for s in &sp {
        let canonical = s[2] > merge || (s[2].abs() <= merge && s[3] > T::zero());
        if canonical {
            reps.push(*s);
        }
    }
    reps.sort_by(|a, b| {
        let na = a[0] * a[0] + a[1] * a[1];
        let nb = b[0] * b[0] + b[1] * b[1];
        na.partial_cmp(&nb).unwrap().then(b[2].partial_cmp(&a[2]).unwrap()).then(b[3].partial_cmp(&a[3]).unwrap())
    });

    let mut out = vec![IdtcState::normal()];
    for (k, r) in reps.iter().enumerate() {
        let branch = (2 * k + 1).min(u8::MAX as usize - 1) as u8;
        let s = IdtcState::from_slice(r, IdtcLabel::Sp, branch);
        out.push(s);
        out.push(s.partner());
    }
    out
}

fn check_steady<T: Scalar>(p: &IdtcParams<T>, s: &IdtcState<T>) -> Result<()> {
    if s.spin_length_defect().abs() > T::tol(1e-9) {
        return Err(Error::Validation("state is off the spin sphere".into()));
    }
    let r = steady_residual(p, s);
    if r > T::tol(1e-8) * p.scale() {
        return Err(Error::Validation(format!("state is not stationary (residual {:e})", r.as_f64())));
    }
    Ok(())
}

/// Jacobian at a validated steady state.
pub fn fluctuation_matrix<T: Scalar>(p: &IdtcParams<T>, s: &IdtcState<T>) -> Result<RealMatrix<T>> {
    check_steady(p, s)?;
    Ok(jacobian(p, &s.to_vec()))
}

/// Orthonormal 5×4 basis of the sphere's tangent space at `s`: the two
/// cavity quadratures and two spin directions orthogonal to `(X, Y, Z)`.
/// At the normal phase the spin directions are `X̂` and `Ŷ`.
pub fn tangent_basis<T: Scalar>(s: &IdtcState<T>) -> RealMatrix<T> {
    let len = (s.x * s.x + s.y * s.y + s.z * s.z).sqrt();
    let n = [s.x / len, s.y / len, s.z / len];
    let perp = (n[0] * n[0] + n[1] * n[1]).sqrt();
    let t1 = if perp > T::lit(1e-12) { [-n[1] / perp, n[0] / perp, T::zero()] } else { [T::one(), T::zero(), T::zero()] };
    let t2 = [t1[1] * n[2] - t1[2] * n[1], t1[2] * n[0] - t1[0] * n[2], t1[0] * n[1] - t1[1] * n[0]];
    let mut b = RealMatrix::zeros(5, 4);
    b[(0, 0)] = T::one();
    b[(1, 1)] = T::one();
    for i in 0..3 {
        b[(2 + i, 2)] = t1[i];
        b[(2 + i, 3)] = t2[i];
    }
    b
}

/// Fluctuation matrix restricted to the tangent space, over
/// `(δu, δv, δt₁, δt₂)`. The tangent space is invariant under the flow's
/// Jacobian, so its spectrum is that of the 5×5 matrix minus the radial zero.
pub fn reduced_fluctuation_matrix<T: Scalar>(p: &IdtcParams<T>, s: &IdtcState<T>) -> Result<RealMatrix<T>> {
    let j = fluctuation_matrix(p, s)?;
    let b = tangent_basis(s);
    Ok(&(&b.transpose() * &j) * &b)
}

/// Quadrature diffusion `diag(2κ, 2κ, 0, 0)` on the tangent coordinates.
pub fn diffusion_matrix<T: Scalar>(p: &IdtcParams<T>) -> RealMatrix<T> {
    let k2 = T::lit(2.0) * p.kappa;
    RealMatrix::from_diagonal(&[k2, k2, T::zero(), T::zero()])
}

/// Eigenvalues of the 5×5 fluctuation matrix with the radial zero mode
/// tagged, the verdict, and the tangent-space covariance when stable.
pub fn stability_report<T: Scalar>(p: &IdtcParams<T>, s: &IdtcState<T>) -> Result<StabilityReport<T>> {
    let j = fluctuation_matrix(p, s)?;
    let es = eig(&j)?;
    let len = (s.x * s.x + s.y * s.y + s.z * s.z).sqrt();
    let radial = [T::zero(), T::zero(), s.x / len, s.y / len, s.z / len];
    let zero_tol = T::tol(TOL_ZERO) * j.max_abs().max(T::one());
    let mut tag: Option<(usize, T)> = None;
    for (i, (val, vec)) in es.values.iter().zip(&es.vectors).enumerate() {
        if val.norm() > zero_tol {
            continue;
        }
        let overlap = vec.iter().zip(&radial).map(|(a, r)| *a * *r).fold(Complex::zero(), |acc, x| acc + x).norm();
        if tag.map_or(true, |(_, best)| overlap > best) {
            tag = Some((i, overlap));
        }
    }
    let mut constraint = vec![false; es.values.len()];
    if let Some((i, _)) = tag {
        constraint[i] = true;
    }
    let free: Vec<Complex<T>> = es.values.iter().zip(&constraint).filter(|(_, c)| !**c).map(|(v, _)| *v).collect();
    let tol = T::lit(crate::stability::STABILITY_TOL);
    let overdamped = p.kappa > T::zero() && free.iter().all(|v| v.im.abs() <= tol) && distinct(&free, tol);
    let mut rep = StabilityReport::from_eigenvalues(es.values, constraint, overdamped);
    if rep.stable {
        let r = reduced_fluctuation_matrix(p, s)?;
        rep.covariance = solve_lyapunov(&r, &diffusion_matrix(p)).ok();
    }
    Ok(rep)
}

fn distinct<T: Scalar>(v: &[Complex<T>], tol: T) -> bool {
    v.iter().enumerate().all(|(i, a)| v[i + 1..].iter().all(|b| (*a - *b).norm() > tol))
}

/// Normal-phase covariance over `(δu, δv, δX, δY)`.
pub fn np_covariance<T: Scalar>(p: &IdtcParams<T>) -> Result<RealMatrix<T>> {
    let r = reduced_fluctuation_matrix(p, &IdtcState::normal())?;
    solve_lyapunov(&r, &diffusion_matrix(p))
}

/// Closed-form normal-phase cavity retarded Green's function
///
/// `G^R = [2ω_z(λ_x² + λ_y²) − 4λ_xλ_yω + (ω² − ω_z²)(ω + ω_c + iκ)]
///      / [16λ_x²λ_y² − 8λ_xλ_yω(ω + iκ) − 4ω_cω_z(λ_x² + λ_y²) + (ω² − ω_z²)((ω + iκ)² − ω_c²)]`.
pub fn np_retarded_green_closed_form<T: Scalar>(p: &IdtcParams<T>, omega: T) -> Result<Complex<T>> {
    let (wc, wz, lx, ly, k) = (p.omega_c, p.omega_z, p.lambda_x, p.lambda_y, p.kappa);
    let re = |x: T| Complex::new(x, T::zero());
    let w = re(omega);
    let wk = Complex::new(omega, k);
    let l2 = lx * lx + ly * ly;
    let dz = re(omega * omega - wz * wz);
    let num = re(T::lit(2.0) * wz * l2 - T::lit(4.0) * lx * ly * omega) + dz * (wk + re(wc));
    let den = re(T::lit(16.0) * lx * lx * ly * ly) - w * wk * (T::lit(8.0) * lx * ly) - re(T::lit(4.0) * wc * wz * l2)
        + dz * (wk * wk - re(wc * wc));
    let scale = T::one() + omega.abs() + wc + wz + lx + ly + k;
    if den.norm() <= T::epsilon() * scale.powi(4) {
        return Err(Error::Pole { omega: omega.as_f64() });
    }
    Ok(num / den)
}

/// Normal-phase fluctuation form with per-mode losses `(κ, 0)`.
///
/// The matching Keldysh noise in `(a, b, a†, b†)` order is
/// `2i·diag(κ, 0, κ, 0)`.
pub fn keldysh_fluctuation_form_np<T: Scalar>(p: &IdtcParams<T>) -> (QuadraticForm<T>, Vec<T>) {
    (np_quadratic_form(p), vec![p.kappa, T::zero()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eigenvalues;

    fn params(lx: f64, ly: f64, kappa: f64) -> IdtcParams {
        IdtcParams::new(1.0, 1.0, lx, ly, kappa).unwrap()
    }

    #[test]
    fn critical_coupling_examples() {
        assert_eq!(critical_coupling(&params(0.0, 0.0, 0.0)), 0.5);
        assert_eq!(critical_coupling(&IdtcParams::<f64>::new(4.0, 1.0, 0.0, 0.0, 0.0).unwrap()), 1.0);
        let c = critical_coupling(&IdtcParams::<f64>::new(2.0, 3.0, 0.0, 0.0, 0.0).unwrap());
        assert!((c - 1.224744871391589).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(IdtcParams::<f64>::new(0.0, 1.0, 0.1, 0.1, 0.1).is_err());
        assert!(IdtcParams::<f64>::new(1.0, 1.0, -0.1, 0.1, 0.1).is_err());
        assert!(IdtcParams::<f64>::new(1.0, 1.0, 0.1, 0.1, f64::NAN).is_err());
    }

    #[test]
    fn energy_generates_flow() {
        // dα/dt = −i∂E/∂α* and dS/dt = ∇_S E × S at κ = 0.
        let p = IdtcParams::new(1.1, 0.8, 0.6, 0.3, 0.0).unwrap();
        let s = IdtcState { alpha: Complex::new(0.2, -0.3), x: 0.1, y: 0.2, z: -0.4, label: IdtcLabel::Sp, branch: 1 };
        let h = 1e-6;
        let grad = |k: usize| {
            let mut a = s.to_vec();
            let mut b = s.to_vec();
            a[k] += h;
            b[k] -= h;
            let st = |v: [f64; 5]| IdtcState { alpha: Complex::new(v[0], v[1]), x: v[2], y: v[3], z: v[4], ..s };
            (mf_energy(&p, &st(a)) - mf_energy(&p, &st(b))) / (2.0 * h)
        };
        let (eu, ev, ex, ey, ez) = (grad(0), grad(1), grad(2), grad(3), grad(4));
        let r = mean_field_rhs(&p, &s);
        assert!((r.d_alpha - Complex::new(0.5 * ev, -0.5 * eu)).norm() < 1e-8);
        assert!((r.dx - (ey * s.z - ez * s.y)).abs() < 1e-8);
        assert!((r.dy - (ez * s.x - ex * s.z)).abs() < 1e-8);
        assert!((r.dz - (ex * s.y - ey * s.x)).abs() < 1e-8);
    }

    #[test]
    fn closed_ground_states() {
        let below = closed_ground_state(&params(0.3, 0.2, 0.0));
        assert_eq!(below.len(), 1);
        assert_eq!(below[0].1, -0.5);
        for (lx, ly) in [(0.8, 0.2), (0.3, 0.9), (0.7, 0.7)] {
            let p = params(lx, ly, 0.0);
            let gs = closed_ground_state(&p);
            assert_eq!(gs.len(), 2);
            for (s, e) in &gs {
                assert!(steady_residual(&p, s) < 1e-12);
                assert!(*e < -0.5);
            }
            let lam = f64::max(lx, ly);
            assert!((gs[0].0.z + 1.0 / (8.0 * lam * lam)).abs() < 1e-14);
        }
    }

    #[test]
    fn decoupled_frequencies() {
        let e = closed_np_excitations(&params(0.0, 0.0, 0.0)).unwrap();
        assert!((e.soft - 1.0).norm() < 1e-12 && (e.hard - 1.0).norm() < 1e-12);
        assert!(e.defect < 1e-10);
    }

    #[test]
    fn tavis_cummings_frequencies() {
        let e = closed_np_excitations(&params(0.2, 0.2, 0.0)).unwrap();
        assert!((e.soft - 0.6).norm() < 1e-12 && (e.hard - 1.4).norm() < 1e-12);
        assert!(e.defect < 1e-10);
        let alt = np_frequencies_alt(&params(0.2, 0.2, 0.0));
        assert!((alt.0 - 0.6).norm() < 1e-12 && (alt.1 - 1.4).norm() < 1e-12);
    }

    #[test]
    fn dicke_line_frequencies() {
        // The quartic matches the dynamical matrix: √0.4 and √1.6.
        let p = params(0.3, 0.0, 0.0);
        let e = closed_np_excitations(&p).unwrap();
        assert!((e.soft.re - 0.4f64.sqrt()).abs() < 1e-12 && (e.hard.re - 1.6f64.sqrt()).abs() < 1e-12);
        assert!(e.defect < 1e-10);
        // The alternative expression evaluates differently off the TC line.
        let alt = np_frequencies_alt(&p);
        assert!((alt.0.re - 0.55910).abs() < 1e-5 && (alt.1.re - 1.43088).abs() < 1e-5);
    }

    #[test]
    fn closed_form_matches_bogoliubov_randomly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let p = IdtcParams::new(
                rng.gen_range(0.2..2.0),
                rng.gen_range(0.2..2.0),
                rng.gen_range(0.0..1.5),
                rng.gen_range(0.0..1.5),
                0.0,
            )
            .unwrap();
            let e = closed_np_excitations(&p).unwrap();
            assert!(e.defect < 1e-9, "defect {} at {:?}", e.defect, p);
        }
    }

    #[test]
    fn soft_mode_goes_imaginary_past_critical() {
        let e = closed_np_excitations(&params(0.6, 0.0, 0.0)).unwrap();
        assert!(e.soft.im.abs() > 1e-3);
        assert!(!e.soft_mode().physical);
        assert!(e.hard_mode().physical);
    }

    #[test]
    fn norm_swap_on_tavis_cummings_line() {
        let below = closed_np_excitations(&params(0.2, 0.2, 0.0)).unwrap();
        assert!(below.soft_mode().is_particle_like());
        assert!(below.hard_mode().is_particle_like());
        let above = closed_np_excitations(&params(0.7, 0.7, 0.0)).unwrap();
        assert!((above.soft.re - 0.4).abs() < 1e-12);
        assert!(above.soft_mode().is_hole_like());
        assert!(above.hard_mode().is_particle_like());
    }

    #[test]
    fn normal_phase_is_fixed_point() {
        let p = params(0.4, 0.1, 0.1);
        let r = mean_field_rhs(&p, &IdtcState::normal());
        assert_eq!(r, IdtcRhs { d_alpha: Complex::zero(), dx: 0.0, dy: 0.0, dz: 0.0 });
    }

    #[test]
    fn decoupled_cavity_decay() {
        let p = IdtcParams::new(1.3, 1.0, 0.0, 0.0, 0.2).unwrap();
        let s = IdtcState { alpha: Complex::new(0.1, 0.0), ..IdtcState::normal() };
        let r = mean_field_rhs(&p, &s);
        let want = Complex::new(-0.2, -1.3) * 0.1;
        assert!((r.d_alpha - want).norm() < 1e-15);
    }

    #[test]
    fn spin_length_is_conserved() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = IdtcParams::new(rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..0.5)).unwrap();
            let s: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = flow(&p, &s);
            let drift = 2.0 * (s[2] * f[2] + s[3] * f[3] + s[4] * f[4]);
            assert!(drift.abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = params(0.7, 0.2, 0.1);
        let s = [0.3, -0.2, 0.1, 0.25, -0.4];
        let j = jacobian(&p, &s);
        let h = 1e-6;
        for c in 0..5 {
            let mut a = s;
            let mut b = s;
            a[c] += h;
            b[c] -= h;
            let (fa, fb) = (flow(&p, &a), flow(&p, &b));
            for r in 0..5 {
                assert!(((fa[r] - fb[r]) / (2.0 * h) - j[(r, c)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn below_threshold_only_normal_phase() {
        let states = open_steady_states(&params(0.3, 0.0, 0.1));
        assert_eq!(states.len(), 1);
        assert_eq!(states[0].label, IdtcLabel::Np);
    }

    #[test]
    fn closed_tavis_cummings_below_critical() {
        let states = open_steady_states(&params(0.2, 0.2, 0.0));
        assert_eq!(states.len(), 1);
    }

    #[test]
    fn above_threshold_superradiant_pair() {
        let p = params(0.7, 0.0, 0.1);
        let states = open_steady_states(&p);
        let sp: Vec<_> = states.iter().filter(|s| s.label == IdtcLabel::Sp).collect();
        assert!(sp.len() >= 2 && sp.len() % 2 == 0);
        let mut stable_pairs = 0;
        for pair in sp.chunks(2) {
            assert!(pair[0].alpha.norm() > 1e-3);
            assert!((pair[0].partner().to_vec().iter().zip(pair[1].to_vec()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)) < 1e-12);
            for s in pair {
                assert!(steady_residual(&p, s) <= STEADY_TOL);
                assert!(s.spin_length_defect().abs() < 1e-9);
            }
            let r0 = stability_report(&p, &pair[0]).unwrap();
            let r1 = stability_report(&p, &pair[1]).unwrap();
            assert_eq!(r0.stable, r1.stable);
            assert!((r0.max_real_part - r1.max_real_part).abs() < 1e-9);
            if r0.stable {
                stable_pairs += 1;
            }
        }
        assert_eq!(stable_pairs, 1);
    }

    #[test]
    fn decoupled_normal_phase_spectrum() {
        let p = IdtcParams::new(1.0, 0.8, 0.0, 0.0, 0.1).unwrap();
        let j = fluctuation_matrix(&p, &IdtcState::normal()).unwrap();
        for c in 0..5 {
            assert_eq!(j[(4, c)], 0.0);
        }
        let rep = stability_report(&p, &IdtcState::normal()).unwrap();
        assert_eq!(rep.constraint.iter().filter(|c| **c).count(), 1);
        let free: Vec<_> = rep.eigenvalues.iter().zip(&rep.constraint).filter(|(_, c)| !**c).map(|(v, _)| *v).collect();
        let has = |w: Complex<f64>| free.iter().any(|v| (v - w).norm() < 1e-10);
        assert!(has(Complex::new(-0.1, 1.0)) && has(Complex::new(-0.1, -1.0)));
        assert!(has(Complex::new(0.0, 0.8)) && has(Complex::new(0.0, -0.8)));
        assert!(rep.marginal);
    }

    #[test]
    fn normal_phase_dissipative_threshold() {
        let p = params(0.6, 0.0, 0.1);
        assert!((dissipative_threshold(&p) - 0.2525f64.sqrt()).abs() < 1e-14);
        let rep = stability_report(&p, &IdtcState::normal()).unwrap();
        assert!(rep.max_real_part > 0.0 && !rep.stable);
        let rep = stability_report(&params(0.45, 0.0, 0.1), &IdtcState::normal()).unwrap();
        assert!(rep.stable && rep.covariance.is_some());
    }

    #[test]
    fn reduced_spectrum_drops_only_the_constraint() {
        let p = params(0.7, 0.0, 0.1);
        for s in open_steady_states(&p) {
            let rep = stability_report(&p, &s).unwrap();
            let reduced = eigenvalues(&reduced_fluctuation_matrix(&p, &s).unwrap()).unwrap();
            let free: Vec<_> = rep.eigenvalues.iter().zip(&rep.constraint).filter(|(_, c)| !**c).map(|(v, _)| *v).collect();
            assert_eq!(free.len(), 4);
            for r in &reduced {
                assert!(free.iter().any(|f| (f - r).norm() < 1e-8));
            }
        }
    }

    #[test]
    fn stale_state_rejected() {
        let p = params(0.7, 0.0, 0.1);
        let s = IdtcState { x: 0.3, z: -0.4, ..IdtcState::normal() };
        assert!(matches!(fluctuation_matrix(&p, &s), Err(Error::Validation(_))));
        let off = IdtcState { z: -0.6, ..IdtcState::normal() };
        assert!(fluctuation_matrix(&p, &off).is_err());
    }

    #[test]
    fn green_decoupled_limit() {
        let p = IdtcParams::new(1.2, 0.9, 0.0, 0.0, 0.1).unwrap();
        for w in [-1.5, 0.0, 0.7, 1.2, 2.0] {
            let g = np_retarded_green_closed_form(&p, w).unwrap();
            let want = Complex::new(w - 1.2, 0.1).inv();
            assert!((g - want).norm() < 1e-12);
        }
        let g = np_retarded_green_closed_form(&p, 1.2).unwrap();
        assert!((g - Complex::new(0.0, -10.0)).norm() < 1e-12);
        assert!((-2.0f64 * g.im - 20.0).abs() < 1e-12);
    }

    #[test]
    fn green_pole_is_reported() {
        let p = IdtcParams::new(1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        assert!(matches!(np_retarded_green_closed_form(&p, 1.0), Err(Error::Pole { .. })));
    }

    #[test]
    fn green_matches_matrix_inverse() {
        let p = params(0.3, 0.1, 0.1);
        let (form, losses) = keldysh_fluctuation_form_np(&p);
        assert_eq!(losses, vec![0.1, 0.0]);
        for k in 0..41 {
            let w = -2.0 + 0.1 * k as f64;
            let mut m = form.h().scale(Complex::new(-1.0, 0.0));
            let sig = [1.0, 1.0, -1.0, -1.0];
            let loss = [0.1, 0.0, 0.1, 0.0];
            for i in 0..4 {
                m[(i, i)] += Complex::new(sig[i] * w, sig[i] * loss[i]);
            }
            let g = m.inverse().unwrap();
            let closed = np_retarded_green_closed_form(&p, w).unwrap();
            assert!((g[(0, 0)] - closed).norm() < 1e-10 * (1.0 + closed.norm()));
        }
    }

    #[test]
    fn np_covariance_vacuum_when_decoupled() {
        let p = IdtcParams::new(1.0, 1.0, 0.0, 0.0, 0.2).unwrap();
        // Spin block has no loss and no restoring damping, so no stationary state.
        assert!(np_covariance(&p).is_err());
        let p = params(0.3, 0.1, 0.2);
        let k = np_covariance(&p).unwrap();
        assert!(k[(0, 0)] > 0.0 && k[(1, 1)] > 0.0);
        assert!((&k - &k.transpose()).max_abs() < 1e-12);
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let s = IdtcState { alpha: Complex::new(0.1, 0.2), x: 0.3, y: -0.2, z: -(0.25f64 - 0.13).sqrt(), label: IdtcLabel::Sp, branch: 1 };
        let b = tangent_basis(&s);
        let g = &b.transpose() * &b;
        assert!((&g - &RealMatrix::identity(4)).max_abs() < 1e-14);
        for c in 2..4 {
            let dot = b[(2, c)] * s.x + b[(3, c)] * s.y + b[(4, c)] * s.z;
            assert!(dot.abs() < 1e-14);
        }
        let np = tangent_basis(&IdtcState::<f64>::normal());
        assert_eq!((np[(2, 2)], np[(3, 3)]), (1.0, 1.0));
    }

    #[test]
    fn single_precision_pipeline() {
        let p = IdtcParams::<f32>::new(1.0, 1.0, 0.45, 0.0, 0.1).unwrap();
        let rep = stability_report(&p, &IdtcState::normal()).unwrap();
        assert!(rep.stable);
        let e = closed_np_excitations(&p.with_couplings(0.2, 0.2)).unwrap();
        assert!((e.soft.re - 0.6).abs() < 1e-5);
    }
}
