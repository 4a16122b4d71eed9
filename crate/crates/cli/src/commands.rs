//! Command dispatch: one table per run.

use dpt_core::bogoliubov::{diagonalize_excitations, ExcitationSpectrum};
use dpt_core::idtc::{self, IdtcLabel, IdtcParams, IdtcState};
use dpt_core::kpo::{self, KpoLabel, KpoParams, KpoState};
use dpt_core::numerics::{solve_lyapunov, RealMatrix};
use dpt_core::oscillator;
use dpt_core::phasediag::{self, Axis, Segment, SweepSpec};
use dpt_core::response::{self, ResponseSource};
use dpt_core::stability::StabilityReport;
use dpt_core::Error;

use crate::config::{Command, Model, RunConfig};
use crate::output::{Cell, Report, Table};

type Result<T> = std::result::Result<T, Error>;

/// Tables produced by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub table: Table,
    pub boundaries: Option<Table>,
}

impl Output {
    fn table(table: Table) -> Self {
        Self { table, boundaries: None }
    }

    pub fn report(self, cfg: &RunConfig) -> Report {
        Report {
            model: cfg.model.as_str().to_string(),
            command: cfg.command.as_str().to_string(),
            params: cfg.params.clone(),
            table: self.table,
            boundaries: self.boundaries,
        }
    }
}

/// Runs `cfg`; `threads` caps sweep parallelism.
pub fn run(cfg: &RunConfig, threads: Option<usize>) -> Result<Output> {
    let unsupported = || Error::Validation(format!("command {} is not available for model {}", cfg.command.as_str(), cfg.model.as_str()));
    match (cfg.command, cfg.model) {
        (Command::GroundState, Model::Kpo) => Ok(Output::table(kpo_ground_state(&cfg.kpo()?))),
        (Command::GroundState, Model::Idtc) => Ok(Output::table(idtc_ground_state(&cfg.idtc()?))),
        (Command::SteadyStates, Model::Kpo) => kpo_steady_states(&cfg.kpo()?).map(Output::table),
        (Command::SteadyStates, Model::Idtc) => idtc_steady_states(&cfg.idtc()?).map(Output::table),
        (Command::Excitations, _) => excitations(cfg).map(Output::table),
        (Command::Stability, _) => stability(cfg).map(Output::table),
        (Command::Variance, _) => variance(cfg).map(Output::table),
        (Command::Response, _) => response_table(cfg).map(Output::table),
        (Command::Sweep, _) => sweep(cfg, threads),
        (Command::Boundary, _) => boundary(cfg).map(Output::table),
        (Command::GroundState | Command::SteadyStates, Model::Oscillator) => Err(unsupported()),
    }
}

fn missing_branch(branch: usize, available: impl Iterator<Item = u8>) -> Error {
    let list: Vec<String> = available.map(|b| b.to_string()).collect();
    Error::Validation(format!("branch {branch} does not exist here (available: {})", list.join(", ")))
}

fn kpo_state(p: &KpoParams<f64>, branch: usize) -> Result<KpoState<f64>> {
    let states = kpo::open_steady_states(p);
    states
        .iter()
        .find(|s| s.branch as usize == branch)
        .copied()
        .ok_or_else(|| missing_branch(branch, states.iter().map(|s| s.branch)))
}

fn idtc_state(p: &IdtcParams<f64>, branch: usize) -> Result<IdtcState<f64>> {
    if branch == 0 {
        return Ok(IdtcState::normal());
    }
    let states = idtc::open_steady_states(p);
    states
        .iter()
        .find(|s| s.branch as usize == branch)
        .copied()
        .ok_or_else(|| missing_branch(branch, states.iter().map(|s| s.branch)))
}

fn kpo_label(l: KpoLabel) -> &'static str {
    match l {
        KpoLabel::Np => "NP",
        KpoLabel::Pps => "PPS",
    }
}

fn idtc_label(l: IdtcLabel) -> &'static str {
    match l {
        IdtcLabel::Np => "NP",
        IdtcLabel::Sp => "SP",
    }
}

fn kpo_ground_state(p: &KpoParams<f64>) -> Table {
    let mut t = Table::new(&["branch", "label", "alpha_re", "alpha_im", "occupation", "energy"]);
    for (s, e) in kpo::closed_ground_state(p) {
        t.push(vec![s.branch.into(), kpo_label(s.label).into(), s.alpha.re.into(), s.alpha.im.into(), s.occupation().into(), e.into()]);
    }
    t
}

fn idtc_ground_state(p: &IdtcParams<f64>) -> Table {
    let mut t = Table::new(&["branch", "label", "alpha_re", "alpha_im", "x", "y", "z", "energy"]);
    for (s, e) in idtc::closed_ground_state(p) {
        t.push(vec![
            s.branch.into(),
            idtc_label(s.label).into(),
            s.alpha.re.into(),
            s.alpha.im.into(),
            s.x.into(),
            s.y.into(),
            s.z.into(),
            e.into(),
        ]);
    }
    t
}

fn verdict(rep: &StabilityReport<f64>) -> Vec<Cell> {
    vec![rep.max_real_part.into(), rep.stable.into(), rep.marginal.into(), rep.overdamped.into()]
}

fn kpo_steady_states(p: &KpoParams<f64>) -> Result<Table> {
    let mut t = Table::new(&[
        "branch", "label", "alpha_re", "alpha_im", "occupation", "max_real_part", "stable", "marginal", "overdamped",
    ]);
    for s in kpo::open_steady_states(p) {
        let rep = kpo::stability_report(p, &s)?;
        let mut row: Vec<Cell> = vec![s.branch.into(), kpo_label(s.label).into(), s.alpha.re.into(), s.alpha.im.into(), s.occupation().into()];
        row.extend(verdict(&rep));
        t.push(row);
    }
    Ok(t)
}

fn idtc_steady_states(p: &IdtcParams<f64>) -> Result<Table> {
    let mut t = Table::new(&[
        "branch", "label", "alpha_re", "alpha_im", "x", "y", "z", "max_real_part", "stable", "marginal", "overdamped",
    ]);
    for s in idtc::open_steady_states(p) {
        let rep = idtc::stability_report(p, &s)?;
        let mut row: Vec<Cell> =
            vec![s.branch.into(), idtc_label(s.label).into(), s.alpha.re.into(), s.alpha.im.into(), s.x.into(), s.y.into(), s.z.into()];
        row.extend(verdict(&rep));
        t.push(row);
    }
    Ok(t)
}

fn excitation_table(spec: &ExcitationSpectrum<f64>) -> Table {
    let mut t = Table::new(&["mode", "omega_re", "omega_im", "symplectic_norm", "physical", "zero_norm"]);
    for (i, m) in spec.modes.iter().enumerate() {
        t.push(vec![i.into(), m.frequency.re.into(), m.frequency.im.into(), m.symplectic_norm.into(), m.physical.into(), m.zero_norm.into()]);
    }
    t
}

fn excitations(cfg: &RunConfig) -> Result<Table> {
    match cfg.model {
        Model::Kpo => {
            let p = cfg.kpo()?;
            let s = kpo_state(&p, cfg.branch)?;
            Ok(excitation_table(&diagonalize_excitations(&kpo::closed_excitation_form(&p, &s))?))
        }
        Model::Idtc => {
            if cfg.branch != 0 {
                return Err(Error::Validation("IDTC excitations are available for the normal phase (branch 0) only".into()));
            }
            Ok(excitation_table(&idtc::closed_np_excitations(&cfg.idtc()?)?.spectrum))
        }
        Model::Oscillator => Ok(excitation_table(&diagonalize_excitations(&oscillator::harmonic_form(cfg.param("omega0")))?)),
    }
}

fn eigen_table(rep: &StabilityReport<f64>) -> Table {
    let mut t = Table::new(&["eig_re", "eig_im", "constraint", "stable", "marginal", "overdamped"]);
    for (e, c) in rep.eigenvalues.iter().zip(&rep.constraint) {
        t.push(vec![e.re.into(), e.im.into(), (*c).into(), rep.stable.into(), rep.marginal.into(), rep.overdamped.into()]);
    }
    t
}

fn stability(cfg: &RunConfig) -> Result<Table> {
    let rep = match cfg.model {
        Model::Kpo => {
            let p = cfg.kpo()?;
            kpo::stability_report(&p, &kpo_state(&p, cfg.branch)?)?
        }
        Model::Idtc => {
            let p = cfg.idtc()?;
            idtc::stability_report(&p, &idtc_state(&p, cfg.branch)?)?
        }
        Model::Oscillator => {
            let p = cfg.oscillator()?;
            let ev = oscillator::overdamped_eigenvalues(&p);
            StabilityReport::from_eigenvalues(vec![ev.plus, ev.minus], vec![false; 2], ev.overdamped)
        }
    };
    Ok(eigen_table(&rep))
}

fn matrix_table(m: &RealMatrix<f64>) -> Table {
    let mut t = Table::new(&["row", "col", "value"]);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            t.push(vec![i.into(), j.into(), m[(i, j)].into()]);
        }
    }
    t
}

fn variance(cfg: &RunConfig) -> Result<Table> {
    match cfg.model {
        Model::Kpo => {
            let p = cfg.kpo()?;
            let s = kpo_state(&p, cfg.branch)?;
            let rep = kpo::stability_report(&p, &s)?;
            let k = rep.covariance.ok_or(Error::Unstable { max_real_part: rep.max_real_part })?;
            let (vr, vi) = (k[(0, 0)], k[(1, 1)]);
            let mut t = Table::new(&["var_re", "var_im", "cov_re_im", "occupation"]);
            t.push(vec![vr.into(), vi.into(), k[(0, 1)].into(), ((vr + vi) / 4.0 - 0.5).into()]);
            Ok(t)
        }
        Model::Idtc => {
            let p = cfg.idtc()?;
            let k = if cfg.branch == 0 {
                idtc::np_covariance(&p)?
            } else {
                let rep = idtc::stability_report(&p, &idtc_state(&p, cfg.branch)?)?;
                rep.covariance.ok_or(Error::Unstable { max_real_part: rep.max_real_part })?
            };
            Ok(matrix_table(&k))
        }
        Model::Oscillator => {
            let p = cfg.oscillator()?;
            if !(p.kappa > 0.0 && p.omega0 > 0.0) {
                return Err(Error::Unstable { max_real_part: oscillator::overdamped_eigenvalues(&p).plus.re });
            }
            let k = solve_lyapunov(&oscillator::companion_matrix(&p), &oscillator::noise_matrix(&p))?;
            let mut t = Table::new(&["var_x", "var_p", "cov_xp"]);
            t.push(vec![k[(0, 0)].into(), k[(1, 1)].into(), k[(0, 1)].into()]);
            Ok(t)
        }
    }
}

fn response_source(cfg: &RunConfig) -> Result<ResponseSource<f64>> {
    match cfg.model {
        Model::Kpo => {
            let p = cfg.kpo()?;
            Ok(ResponseSource::kpo(&p, &kpo_state(&p, cfg.branch)?))
        }
        Model::Idtc => {
            let p = cfg.idtc()?;
            if cfg.branch == 0 {
                Ok(ResponseSource::idtc_np(&p))
            } else {
                ResponseSource::idtc_jacobian(&p, &idtc_state(&p, cfg.branch)?)
            }
        }
        Model::Oscillator => {
            let p = cfg.oscillator()?;
            Ok(ResponseSource::oscillator(p.omega0, p.kappa))
        }
    }
}

fn response_table(cfg: &RunConfig) -> Result<Table> {
    let src = response_source(cfg)?;
    if !src.is_stable()? {
        let worst = src.poles()?.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.im));
        return Err(Error::Unstable { max_real_part: worst });
    }
    let grid = match &cfg.grid {
        Some(g) => g.values(),
        None => src.adaptive_grid()?,
    };
    let sp = response::spectra(&src.evaluate(&grid)?)?;
    let mut t = Table::new(&["omega", "A", "C", "S"]);
    for i in 0..sp.grid.len() {
        t.push(vec![sp.grid[i].into(), sp.a[i].into(), sp.c[i].into(), sp.s[i].into()]);
    }
    let skipped = t.drop_non_finite();
    if skipped > 0 {
        eprintln!("note: skipped {skipped} grid point(s) on a pole");
    }
    Ok(t)
}

fn sweep(cfg: &RunConfig, threads: Option<usize>) -> Result<Output> {
    let spec = SweepSpec {
        base: cfg.model_params()?,
        mode: cfg.mode,
        x: Axis::new(&cfg.x.param, cfg.x.min, cfg.x.max, cfg.x.points),
        y: Axis::new(&cfg.y.param, cfg.y.min, cfg.y.max, cfg.y.points),
        trace: cfg.trace,
    };
    let grid = phasediag::sweep(&spec, threads)?;
    let mut t = Table::new(&[cfg.x.param.as_str(), cfg.y.param.as_str(), "label"]);
    for (iy, row) in grid.labels.iter().enumerate() {
        for (ix, l) in row.iter().enumerate() {
            t.push(vec![grid.x.value(ix).into(), grid.y.value(iy).into(), l.as_str().into()]);
        }
    }
    let boundaries = cfg.trace.then(|| {
        let mut b = Table::new(&["curve", cfg.x.param.as_str(), cfg.y.param.as_str(), "left", "right"]);
        for (c, line) in grid.boundaries.iter().enumerate() {
            for p in line {
                b.push(vec![c.into(), p.x.into(), p.y.into(), p.left.as_str().into(), p.right.as_str().into()]);
            }
        }
        b
    });
    Ok(Output { table: t, boundaries })
}

fn boundary(cfg: &RunConfig) -> Result<Table> {
    let base = cfg.model_params()?;
    let b = &cfg.boundary;
    let Some(cut) = &b.cut else {
        let seg = Segment::along(&b.param, b.start, b.end);
        let crossings = phasediag::trace_boundary(&base, cfg.mode, &[seg])?;
        let mut t = Table::new(&[b.param.as_str(), "left", "right"]);
        for c in crossings {
            t.push(vec![c.values[0].1.into(), c.left.as_str().into(), c.right.as_str().into()]);
        }
        return Ok(t);
    };
    let mut t = Table::new(&[cut.param.as_str(), b.param.as_str(), "left", "right"]);
    let axis = Axis::new(&cut.param, cut.min, cut.max, cut.points);
    let mut unbracketed = 0;
    for v in axis.values() {
        let seg = Segment { params: vec![(cut.param.clone(), v, v), (b.param.clone(), b.start, b.end)] };
        match phasediag::trace_boundary(&base, cfg.mode, &[seg]) {
            Ok(cs) => {
                for c in cs {
                    t.push(vec![v.into(), c.values[1].1.into(), c.left.as_str().into(), c.right.as_str().into()]);
                }
            }
            Err(Error::Bracketing(_)) => unbracketed += 1,
            Err(e) => return Err(e),
        }
    }
    if t.rows.is_empty() {
        return Err(Error::Bracketing(format!("no label change along {} on any cut value", b.param)));
    }
    if unbracketed > 0 {
        eprintln!("note: {unbracketed} cut value(s) without a label change were skipped");
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn run_text(text: &str) -> Result<Output> {
        run(&parse_config(text).unwrap(), Some(2))
    }

    #[test]
    fn kpo_steady_states_lists_five_with_flags() {
        let out = run_text("model = kpo\ncommand = steady-states\ndelta = 1\ng = 0.5\nkappa = 0.3").unwrap();
        assert_eq!(out.table.rows.len(), 5);
        let stable: Vec<bool> = out.table.column("stable").unwrap().iter().map(|c| matches!(c, Cell::Flag(true))).collect();
        // e-NP and the outer pair stable, inner pair unstable.
        assert_eq!(stable, vec![true, false, false, true, true]);
    }

    #[test]
    fn response_columns() {
        let text = "model = kpo\ncommand = response\ndelta = 1\ng = 0.5\nkappa = 0.3\nomega_min = -3\nomega_max = 3\nomega_points = 61";
        let out = run_text(text).unwrap();
        assert_eq!(out.table.columns, vec!["omega", "A", "C", "S"]);
        assert_eq!(out.table.rows.len(), 61);
    }

    #[test]
    fn unstable_response_is_numerical_failure() {
        let err = run_text("model = kpo\ncommand = response\ndelta = 0\ng = 0.5\nkappa = 0.3").unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }));
    }

    #[test]
    fn missing_branch_is_validation_error() {
        let err = run_text("model = kpo\ncommand = variance\ndelta = -1\ng = 0.5\nkappa = 0.3\nbranch = 3").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn oscillator_variance() {
        let out = run_text("model = oscillator\ncommand = variance\nomega0 = 2\nkappa = 0.5\nsigma = 0.3").unwrap();
        let vx = out.table.rows[0][0].as_f64().unwrap();
        let vp = out.table.rows[0][1].as_f64().unwrap();
        assert!((vx - 0.09 / (2.0 * 0.5 * 4.0)).abs() < 1e-12);
        assert!((vp - 0.09 / (2.0 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn idtc_excitations_at_tavis_cummings_point() {
        let out = run_text("model = idtc\ncommand = excitations\nlambda_x = 0.2\nlambda_y = 0.2").unwrap();
        let re: Vec<f64> = out.table.column("omega_re").unwrap().iter().map(|c| c.as_f64().unwrap()).collect();
        assert!(re.iter().any(|w| (w - 0.6).abs() < 1e-10), "{re:?}");
    }

    #[test]
    fn boundary_on_kpo_open_normal_instability() {
        let out = run_text("model = kpo\ncommand = boundary\nkappa = 0.4\nboundary_param = g\nboundary_start = 0.1\nboundary_end = 1").unwrap();
        let g = out.table.rows[0][0].as_f64().unwrap();
        assert!((g - 0.4).abs() < 1e-6, "{g}");
    }

    #[test]
    fn boundary_without_label_change_fails() {
        let err = run_text("model = kpo\ncommand = boundary\nkappa = 0.4\nboundary_start = 0\nboundary_end = 0.1\ndelta = -1").unwrap_err();
        assert!(matches!(err, Error::Bracketing(_)));
    }

    #[test]
    fn sweep_table_shape() {
        let out = run_text("model = kpo\ncommand = sweep\nkappa = 0.4\nx_points = 5\ny_points = 4\ntrace = true").unwrap();
        assert_eq!(out.table.columns, vec!["delta", "g", "label"]);
        assert_eq!(out.table.rows.len(), 20);
        assert!(out.boundaries.is_some());
    }

    #[test]
    fn oscillator_has_no_ground_state_command() {
        assert!(matches!(run_text("model = oscillator\ncommand = ground-state"), Err(Error::Validation(_))));
    }
}
