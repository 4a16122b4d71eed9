//! Region classification, parameter sweeps and boundary bisection for both
//! models.
//!
//! Closed labels: `I` normal phase is the ground state, `II` normal phase
//! unphysical (complex excitation frequencies), `III` normal phase a
//! physical excited state. Open labels combine the stability verdicts with
//! the closed label at the same couplings:
//!
//! | NP stable | broken state stable | label |
//! |-----------|---------------------|-------|
//! | yes | yes | `III` |
//! | yes | no | `I`, `IIp`, `IIIp` by closed label |
//! | no | yes | `II` |
//! | no | no | `Unphys` |
//!
//! For labelling, a state counts as stable unless some eigenvalue has
//! `Re ε > STABILITY_TOL`, so marginal boundary samples take the label of
//! the stable side.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::idtc::{self, IdtcParams, IdtcState};
use crate::kpo::{self, KpoParams, KpoState};
use crate::scalar::Scalar;
use crate::stability::STABILITY_TOL;

/// Bisection tolerance in parameter units.
pub const BOUNDARY_TOL: f64 = 1e-6;
/// Largest accepted sweep.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionLabel {
    I,
    II,
    III,
    IIp,
    IIIp,
    Unphys,
}

impl RegionLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::I => "I",
            Self::II => "II",
            Self::III => "III",
            Self::IIp => "IIp",
            Self::IIIp => "IIIp",
            Self::Unphys => "UNPHYS",
        }
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "I" => Self::I,
            "II" => Self::II,
            "III" => Self::III,
            "IIp" => Self::IIp,
            "IIIp" => Self::IIIp,
            "UNPHYS" => Self::Unphys,
            _ => return Err(Error::Validation(format!("unknown region label {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Closed,
    Open,
}

/// Parameters of either model, addressable by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams<T = f64> {
    Kpo(KpoParams<T>),
    Idtc(IdtcParams<T>),
}

impl<T: Scalar> ModelParams<T> {
    /// Parameter names accepted by [`ModelParams::set`].
    pub fn names(&self) -> &'static [&'static str] {
        match self {
            Self::Kpo(_) => &["delta", "kerr", "g", "g_phase", "kappa"],
            Self::Idtc(_) => &["omega_c", "omega_z", "lambda_x", "lambda_y", "lambda", "kappa"],
        }
    }

    /// Returns a copy with `name` set to `value`. For the KPO `g` is the
    /// pump modulus (phase kept) and `g_phase` its argument; for the IDTC
    /// `lambda` sets both couplings.
    pub fn set(&self, name: &str, value: T) -> Result<Self> {
        let out = match *self {
            Self::Kpo(mut p) => {
                match name {
                    "delta" => p.delta = value,
                    "kerr" => p.kerr = value,
                    "kappa" => p.kappa = value,
                    "g" => {
                        let phase = if p.pump.norm() > T::zero() { p.pump.arg() } else { T::zero() };
                        p.pump = Complex::from_polar(value, phase);
                    }
                    "g_phase" => p.pump = Complex::from_polar(p.pump.norm(), value),
                    _ => return Err(unknown(name, self.names())),
                }
                p.validate()?;
                Self::Kpo(p)
            }
            Self::Idtc(mut p) => {
                match name {
                    "omega_c" => p.omega_c = value,
                    "omega_z" => p.omega_z = value,
                    "lambda_x" => p.lambda_x = value,
                    "lambda_y" => p.lambda_y = value,
                    "lambda" => {
                        p.lambda_x = value;
                        p.lambda_y = value;
                    }
                    "kappa" => p.kappa = value,
                    _ => return Err(unknown(name, self.names())),
                }
                p.validate()?;
                Self::Idtc(p)
            }
        };
        Ok(out)
    }

    pub fn get(&self, name: &str) -> Result<T> {
        match self {
            Self::Kpo(p) => match name {
                "delta" => Ok(p.delta),
                "kerr" => Ok(p.kerr),
                "kappa" => Ok(p.kappa),
                "g" => Ok(p.pump.norm()),
                "g_phase" => Ok(p.pump.arg()),
                _ => Err(unknown(name, self.names())),
            },
            Self::Idtc(p) => match name {
                "omega_c" => Ok(p.omega_c),
                "omega_z" => Ok(p.omega_z),
                "lambda_x" | "lambda" => Ok(p.lambda_x),
                "lambda_y" => Ok(p.lambda_y),
                "kappa" => Ok(p.kappa),
                _ => Err(unknown(name, self.names())),
            },
        }
    }
}

fn unknown(name: &str, names: &[&str]) -> Error {
    Error::Validation(format!("unknown parameter {name:?}; expected one of {}", names.join(", ")))
}

/// Closed-system label of the normal phase.
pub fn classify_closed<T: Scalar>(params: &ModelParams<T>) -> RegionLabel {
    match params {
        ModelParams::Kpo(p) => {
            let g = p.pump_abs();
            let sd = p.kerr.signum() * p.delta;
            if sd <= -g {
                RegionLabel::I
            } else if p.delta.abs() < g {
                RegionLabel::II
            } else {
                RegionLabel::III
            }
        }
        ModelParams::Idtc(p) => {
            let closed = IdtcParams { kappa: T::zero(), ..*p };
            match idtc::closed_np_excitations(&closed) {
                Ok(e) if e.physical() => {
                    let (soft, hard) = (e.soft_mode(), e.hard_mode());
                    if soft.zero_norm || hard.zero_norm {
                        RegionLabel::II
                    } else if soft.is_hole_like() || hard.is_hole_like() {
                        RegionLabel::III
                    } else {
                        RegionLabel::I
                    }
                }
                _ => RegionLabel::II,
            }
        }
    }
}

/// Whether the normal phase and any symmetry-broken steady state are
/// attractors (not linearly unstable).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attractors {
    pub normal_stable: bool,
    pub broken_stable: bool,
}

pub fn attractors<T: Scalar>(params: &ModelParams<T>) -> Attractors {
    match params {
        ModelParams::Kpo(p) => {
            let tol = T::lit(STABILITY_TOL);
            let mut out = Attractors { normal_stable: false, broken_stable: false };
            for s in kpo::open_steady_states(p) {
                let e = kpo::fluctuation_eigenvalues(p, &s);
                let stable = e.plus.re.max(e.minus.re) <= tol;
                match s.label {
                    kpo::KpoLabel::Np => out.normal_stable |= stable,
                    kpo::KpoLabel::Pps => out.broken_stable |= stable,
                }
            }
            out
        }
        ModelParams::Idtc(p) => {
            let stable = |s: &IdtcState<T>| idtc::stability_report(p, s).map(|r| r.stable || r.marginal).unwrap_or(false);
            let states = idtc::open_steady_states(p);
            Attractors {
                normal_stable: stable(&states[0]),
                broken_stable: states[1..].iter().any(stable),
            }
        }
    }
}

pub fn classify_point<T: Scalar>(params: &ModelParams<T>, mode: Mode) -> RegionLabel {
    let closed = classify_closed(params);
    if mode == Mode::Closed {
        return closed;
    }
    let a = attractors(params);
    match (a.normal_stable, a.broken_stable) {
        (true, true) => RegionLabel::III,
        (true, false) => match closed {
            RegionLabel::I => RegionLabel::I,
            RegionLabel::II => RegionLabel::IIp,
            _ => RegionLabel::IIIp,
        },
        (false, true) => RegionLabel::II,
        (false, false) => RegionLabel::Unphys,
    }
}

/// KPO normal-phase stability alone, without solving for broken states.
pub fn kpo_normal_stable<T: Scalar>(p: &KpoParams<T>) -> bool {
    kpo::fluctuation_eigenvalues(p, &KpoState::normal()).stable
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis<T = f64> {
    pub name: String,
    pub min: T,
    pub max: T,
    pub count: usize,
}

impl<T: Scalar> Axis<T> {
    pub fn new(name: &str, min: T, max: T, count: usize) -> Self {
        Self { name: name.to_string(), min, max, count }
    }

    pub fn value(&self, i: usize) -> T {
        if self.count <= 1 {
            return self.min;
        }
        self.min + (self.max - self.min) * T::lit(i as f64) / T::lit((self.count - 1) as f64)
    }

    pub fn values(&self) -> Vec<T> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

/// Point on a boundary between two labels, located along the `x` axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint<T = f64> {
    pub x: T,
    pub y: T,
    pub left: RegionLabel,
    pub right: RegionLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagramGrid<T = f64> {
    pub x: Axis<T>,
    pub y: Axis<T>,
    /// `labels[iy][ix]`.
    pub labels: Vec<Vec<RegionLabel>>,
    /// One polyline per `(left, right)` label pair, ordered by `y`.
    pub boundaries: Vec<Vec<BoundaryPoint<T>>>,
}

impl<T: Scalar> PhaseDiagramGrid<T> {
    pub fn distinct_labels(&self) -> Vec<RegionLabel> {
        let mut v: Vec<RegionLabel> = self.labels.iter().flatten().copied().collect();
        v.sort();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<T = f64> {
    pub base: ModelParams<T>,
    pub mode: Mode,
    pub x: Axis<T>,
    pub y: Axis<T>,
    /// Locate every label change along `x` by bisection.
    pub trace: bool,
}

/// Labels on the full grid. `threads = None` uses the global pool; the
/// result does not depend on the thread count.
pub fn sweep<T: Scalar>(spec: &SweepSpec<T>, threads: Option<usize>) -> Result<PhaseDiagramGrid<T>> {
    let (nx, ny) = (spec.x.count, spec.y.count);
    if nx == 0 || ny == 0 || nx.saturating_mul(ny) > MAX_GRID_POINTS {
        return Err(Error::Validation(format!("grid must have between 1 and {MAX_GRID_POINTS} points")));
    }
    // Validate names once up front.
    spec.base.set(&spec.x.name, spec.x.min)?;
    spec.base.set(&spec.y.name, spec.y.min)?;

    let run = || -> Result<PhaseDiagramGrid<T>> {
        let flat: Vec<Result<RegionLabel>> = (0..nx * ny)
            .into_par_iter()
            .map(|k| {
                let p = at(spec, spec.x.value(k % nx), spec.y.value(k / nx))?;
                Ok(classify_point(&p, spec.mode))
            })
            .collect();
        let mut labels = vec![Vec::with_capacity(nx); ny];
        for (k, l) in flat.into_iter().enumerate() {
            labels[k / nx].push(l?);
        }
        let boundaries = if spec.trace { trace_rows(spec, &labels)? } else { Vec::new() };
        Ok(PhaseDiagramGrid { x: spec.x.clone(), y: spec.y.clone(), labels, boundaries })
    };
    match threads {
        None => run(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?
            .install(run),
    }
}

fn at<T: Scalar>(spec: &SweepSpec<T>, x: T, y: T) -> Result<ModelParams<T>> {
    spec.base.set(&spec.x.name, x)?.set(&spec.y.name, y)
}

fn trace_rows<T: Scalar>(spec: &SweepSpec<T>, labels: &[Vec<RegionLabel>]) -> Result<Vec<Vec<BoundaryPoint<T>>>> {
    let jobs: Vec<(usize, usize)> = labels
        .iter()
        .enumerate()
        .flat_map(|(iy, row)| row.windows(2).enumerate().filter(|(_, w)| w[0] != w[1]).map(move |(ix, _)| (iy, ix)))
        .collect();
    let points: Vec<Result<BoundaryPoint<T>>> = jobs
        .par_iter()
        .map(|&(iy, ix)| {
            let y = spec.y.value(iy);
            let (a, b) = (spec.x.value(ix), spec.x.value(ix + 1));
            let f = |x: T| at(spec, x, y).map(|p| classify_point(&p, spec.mode));
            let (lo, hi) = bisect_label(a, b, T::lit(BOUNDARY_TOL), f)?;
            Ok(BoundaryPoint { x: (lo.0 + hi.0) * T::lit(0.5), y, left: lo.1, right: hi.1 })
        })
        .collect();
    let mut lines: Vec<Vec<BoundaryPoint<T>>> = Vec::new();
    for p in points {
        let p = p?;
        match lines.iter_mut().find(|l| l[0].left == p.left && l[0].right == p.right) {
            Some(l) => l.push(p),
            None => lines.push(vec![p]),
        }
    }
    Ok(lines)
}

/// Bisects `[a, b]` until the bracket is narrower than `tol`, keeping the
/// endpoint labels different. Returns `((x_lo, label_lo), (x_hi, label_hi))`.
pub fn bisect_label<T, L, F>(a: T, b: T, tol: T, f: F) -> Result<((T, L), (T, L))>
where
    T: Scalar,
    L: PartialEq + Copy,
    F: Fn(T) -> Result<L>,
{
    let (mut lo, mut hi) = (a, b);
    let (mut fl, fh) = (f(lo)?, f(hi)?);
    if fl == fh {
        return Err(Error::Bracketing(format!("both ends of [{}, {}] carry the same label", a, b)));
    }
    let mut fh = fh;
    let half = T::lit(0.5);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = (lo + hi) * half;
        let fm = f(mid)?;
        if fm == fl {
            lo = mid;
            fl = fm;
        } else {
            hi = mid;
            fh = fm;
        }
    }
    Ok(((lo, fl), (hi, fh)))
}

/// Segment in parameter space between two settings of the named parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<T = f64> {
    /// `(name, start, end)` for each varied parameter.
    pub params: Vec<(String, T, T)>,
}

impl<T: Scalar> Segment<T> {
    pub fn along(name: &str, start: T, end: T) -> Self {
        Self { params: vec![(name.to_string(), start, end)] }
    }

    fn point(&self, base: &ModelParams<T>, t: T) -> Result<ModelParams<T>> {
        let mut p = *base;
        for (name, a, b) in &self.params {
            p = p.set(name, *a + (*b - *a) * t)?;
        }
        Ok(p)
    }

    fn span(&self) -> T {
        self.params.iter().fold(T::zero(), |m, (_, a, b)| m.max((*b - *a).abs()))
    }
}

/// Crossing of a label boundary along a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing<T = f64> {
    /// Segment parameter in `[0, 1]`.
    pub t: T,
    /// Parameter values at the crossing.
    pub values: Vec<(String, T)>,
    pub left: RegionLabel,
    pub right: RegionLabel,
}

/// Locates the label change along every segment to [`BOUNDARY_TOL`] in
/// parameter units; the crossings form a polyline.
pub fn trace_boundary<T: Scalar>(base: &ModelParams<T>, mode: Mode, segments: &[Segment<T>]) -> Result<Vec<Crossing<T>>> {
    segments
        .iter()
        .map(|seg| {
            let span = seg.span().max(T::epsilon());
            let tol = T::tol(BOUNDARY_TOL) / span * T::lit(0.5);
            let f = |t: T| seg.point(base, t).map(|p| classify_point(&p, mode));
            let ((lo, left), (hi, right)) = bisect_label(T::zero(), T::one(), tol, f)?;
            let t = (lo + hi) * T::lit(0.5);
            let values = seg.params.iter().map(|(n, a, b)| (n.clone(), *a + (*b - *a) * t)).collect();
            Ok(Crossing { t, values, left, right })
        })
        .collect()
}
