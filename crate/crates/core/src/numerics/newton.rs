//! Damped Newton root finding from many seeds.

use crate::error::Error;
use crate::numerics::matrix::RealMatrix;
use crate::scalar::Scalar;

/// Step budget per seed.
pub const MAX_NEWTON_STEPS: usize = 200;

/// Why a seed failed to produce a root.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedFailure {
    /// Step budget exhausted; carries the final residual norm.
    StepLimit(f64),
    /// Line search and Levenberg–Marquardt fallback both stalled.
    Stalled(f64),
    /// Residual or Jacobian became non-finite.
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultistartDiagnostics {
    pub seeds_tried: usize,
    pub converged_seeds: usize,
    /// Newton steps taken by each seed, in seed order.
    pub steps: Vec<usize>,
    /// `(seed index, reason)` for every seed that did not converge.
    pub failures: Vec<(usize, SeedFailure)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistartResult<T = f64> {
    /// Distinct roots in order of first discovery.
    pub states: Vec<Vec<T>>,
    pub diagnostics: MultistartDiagnostics,
}

fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum::<T>().sqrt()
}

/// Newton (square `J`) or Gauss–Newton (tall `J`) direction; `mu > 0` adds
/// Levenberg–Marquardt damping.
fn direction<T: Scalar>(j: &RealMatrix<T>, r: &[T], mu: T) -> Option<Vec<T>> {
    let rhs = RealMatrix::from_fn(r.len(), 1, |i, _| -r[i]);
    let step = if j.is_square() && mu == T::zero() {
        j.solve(&rhs).ok()?
    } else {
        let jt = j.transpose();
        let mut normal = &jt * j;
        let scale = normal.max_abs().max(T::one());
        for i in 0..normal.rows() {
            normal[(i, i)] = normal[(i, i)] + mu * scale;
        }
        normal.solve(&(&jt * &rhs)).ok()?
    };
    let v = step.column(0);
    v.iter().all(|x| x.is_finite()).then_some(v)
}

/// Runs damped Newton from every seed and returns the distinct roots.
///
/// A root is accepted when `‖F(x)‖₂ ≤ tol` within [`MAX_NEWTON_STEPS`]
/// steps; accepted roots are polished while the residual keeps dropping and
/// merged when closer than `10·tol`. Seeds that fail are reported in the
/// diagnostics rather than as an error.
pub fn newton_multistart<T, F, J>(residual: F, jacobian: J, seeds: &[Vec<T>], tol: T) -> MultistartResult<T>
where
    T: Scalar,
    F: Fn(&[T]) -> Vec<T>,
    J: Fn(&[T]) -> RealMatrix<T>,
{
    let mut diag = MultistartDiagnostics { seeds_tried: seeds.len(), ..Default::default() };
    let mut states: Vec<Vec<T>> = Vec::new();
    for (idx, seed) in seeds.iter().enumerate() {
        match solve_from(&residual, &jacobian, seed.clone(), tol) {
            Ok((x, steps)) => {
                diag.steps.push(steps);
                diag.converged_seeds += 1;
                if norm(&residual(&x)) > tol {
                    continue;
                }
                let dedup = T::lit(10.0) * tol;
                if !states.iter().any(|s| distance(s, &x) <= dedup) {
                    states.push(x);
                }
            }
            Err((reason, steps)) => {
                diag.steps.push(steps);
                diag.failures.push((idx, reason));
            }
        }
    }
    MultistartResult { states, diagnostics: diag }
}

fn solve_from<T, F, J>(residual: &F, jacobian: &J, mut x: Vec<T>, tol: T) -> Result<(Vec<T>, usize), (SeedFailure, usize)>
where
    T: Scalar,
    F: Fn(&[T]) -> Vec<T>,
    J: Fn(&[T]) -> RealMatrix<T>,
{
    let mut r = residual(&x);
    let mut rn = norm(&r);
    for step in 0..MAX_NEWTON_STEPS {
        if !rn.is_finite() {
            return Err((SeedFailure::NonFinite, step));
        }
        if rn <= tol {
            polish(residual, jacobian, &mut x, &mut rn);
            return Ok((x, step));
        }
        let jm = jacobian(&x);
        if !jm.is_finite() {
            return Err((SeedFailure::NonFinite, step));
        }
        match damped_step(residual, &jm, &x, &r, rn) {
            Some((nx, nr, nrn)) => {
                x = nx;
                r = nr;
                rn = nrn;
            }
            None => return Err((SeedFailure::Stalled(rn.as_f64()), step)),
        }
    }
    if rn <= tol {
        polish(residual, jacobian, &mut x, &mut rn);
        return Ok((x, MAX_NEWTON_STEPS));
    }
    Err((SeedFailure::StepLimit(rn.as_f64()), MAX_NEWTON_STEPS))
}

type Trial<T> = (Vec<T>, Vec<T>, T);

fn damped_step<T, F>(residual: &F, jm: &RealMatrix<T>, x: &[T], r: &[T], rn: T) -> Option<Trial<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> Vec<T>,
{
    let try_dir = |d: &[T]| -> Option<Trial<T>> {
        let mut t = T::one();
        let min_t = T::lit(1.0 / 1024.0);
        while t >= min_t {
            let nx: Vec<T> = x.iter().zip(d).map(|(a, b)| *a + t * *b).collect();
            let nr = residual(&nx);
            let nrn = norm(&nr);
            if nrn.is_finite() && nrn < (T::one() - T::lit(1e-4) * t) * rn {
                return Some((nx, nr, nrn));
            }
            t = t * T::lit(0.5);
        }
        None
    };
    if let Some(d) = direction(jm, r, T::zero()) {
        if let Some(out) = try_dir(&d) {
            return Some(out);
        }
    }
    let mut mu = T::lit(1e-6);
    while mu <= T::lit(1e6) {
        if let Some(d) = direction(jm, r, mu) {
            if let Some(out) = try_dir(&d) {
                return Some(out);
            }
        }
        mu = mu * T::lit(100.0);
    }
    None
}

fn polish<T, F, J>(residual: &F, jacobian: &J, x: &mut Vec<T>, rn: &mut T)
where
    T: Scalar,
    F: Fn(&[T]) -> Vec<T>,
    J: Fn(&[T]) -> RealMatrix<T>,
{
    for _ in 0..4 {
        let r = residual(x);
        let Some(d) = direction(&jacobian(x), &r, T::zero()) else { return };
        let nx: Vec<T> = x.iter().zip(&d).map(|(a, b)| *a + *b).collect();
        let nrn = norm(&residual(&nx));
        if nrn < *rn {
            *x = nx;
            *rn = nrn;
        } else {
            return;
        }
    }
}

/// Planar seeds: the origin plus 8 angles on each of the radii
/// `0.1`, `1` and `extra_radius` (skipped when not finite and positive).
pub fn ring_seeds<T: Scalar>(extra_radius: T) -> Vec<Vec<T>> {
    let mut radii = vec![T::lit(0.1), T::one()];
    if extra_radius.is_finite() && extra_radius > T::zero() && (extra_radius - T::one()).abs() > T::lit(1e-6) {
        radii.push(extra_radius);
    }
    let mut seeds = vec![vec![T::zero(), T::zero()]];
    for r in radii {
        for k in 0..8 {
            // Offset keeps seeds off the symmetry axes of the flows.
            let phi = T::lit(0.1) + T::lit(k as f64) * T::FRAC_PI_4();
            seeds.push(vec![r * phi.cos(), r * phi.sin()]);
        }
    }
    seeds
}

/// Convenience error for callers that need at least one root.
pub fn require_roots<T>(res: &MultistartResult<T>) -> Result<(), Error> {
    if res.states.is_empty() {
        Err(Error::NoConvergence {
            iterations: res.diagnostics.steps.iter().sum(),
            converged: 0,
            total: res.diagnostics.seeds_tried,
            partial: Vec::new(),
        })
    } else {
        Ok(())
    }
}
