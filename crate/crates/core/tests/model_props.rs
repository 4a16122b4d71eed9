use dpt_core::bogoliubov::{diagonalize_excitations, dynamical_matrix, QuadraticForm};
use dpt_core::idtc::{self, IdtcLabel, IdtcParams, IdtcState};
use dpt_core::kpo::{self, KpoParams, KpoState};
use dpt_core::numerics::{eigenvalues, ComplexMatrix};
use dpt_core::phasediag::{self, classify_point, Axis, Mode, ModelParams, RegionLabel, Segment, SweepSpec};
use dpt_core::response::{self, ResponseSource};
use num_complex::Complex;
use proptest::prelude::*;

fn multiset_distance(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

fn kpo_params() -> impl Strategy<Value = KpoParams<f64>> {
    (-2.0f64..2.0, prop::bool::ANY, 0.0f64..1.0, 0.0f64..std::f64::consts::TAU, 0.0f64..0.5).prop_map(|(d, neg, g, phi, k)| {
        let u = if neg { -1.0 } else { 1.0 };
        KpoParams::new(d, u, Complex::from_polar(g, phi), k).unwrap()
    })
}

fn idtc_params() -> impl Strategy<Value = IdtcParams<f64>> {
    (0.5f64..1.5, 0.5f64..1.5, 0.0f64..1.2, 0.0f64..1.2, 0.02f64..0.4)
        .prop_map(|(wc, wz, lx, ly, k)| IdtcParams::new(wc, wz, lx, ly, k).unwrap())
}

/// Random bosonic form `[[A, B], [B*, A*]]` with `A` Hermitian, `B` symmetric.
fn bosonic_form(n: usize) -> impl Strategy<Value = QuadraticForm<f64>> {
    prop::collection::vec(-1.0f64..1.0, 4 * n * n).prop_map(move |v| {
        let c = |k: usize| Complex::new(v[2 * k], v[2 * k + 1]);
        let a = ComplexMatrix::from_fn(n, n, |i, j| {
            let (lo, hi) = (i.min(j), i.max(j));
            let z = c(lo * n + hi);
            if i == j {
                Complex::new(z.re + 1.0 + 2.5 * n as f64, 0.0)
            } else if i < j {
                z
            } else {
                z.conj()
            }
        });
        let b = ComplexMatrix::from_fn(n, n, |i, j| c(n * n + i.min(j) * n + i.max(j)) * 0.5);
        QuadraticForm::from_blocks(&a, &b, 0.0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bogoliubov_spectrum_is_particle_hole_symmetric(form in (1usize..=3).prop_flat_map(bosonic_form)) {
        let ev = eigenvalues(&dynamical_matrix(&form).unwrap()).unwrap();
        let mirrored: Vec<Complex<f64>> = ev.iter().map(|w| -w.conj()).collect();
        prop_assert!(multiset_distance(&ev, &mirrored) < 1e-8);
    }

    #[test]
    fn bogoliubov_positive_form_is_para_unitary(form in (1usize..=3).prop_flat_map(bosonic_form)) {
        let spec = diagonalize_excitations(&form).unwrap();
        // Diagonal dominance keeps the form positive definite.
        prop_assert!(spec.all_physical());
        let n = form.modes();
        let particles = spec.modes.iter().filter(|m| m.is_particle_like()).count();
        prop_assert_eq!(particles, n);
        let t = spec.transform.unwrap();
        prop_assert!(t.para_unitarity_defect() < 1e-8);
    }

    #[test]
    fn kpo_steady_states_solve_flow(p in kpo_params()) {
        let states = kpo::open_steady_states(&p);
        prop_assert!([1usize, 3, 5].contains(&states.len()));
        for s in &states {
            prop_assert!(kpo::steady_residual(&p, s) < 1e-10);
        }
    }

    #[test]
    fn kpo_partner_shares_spectrum(p in kpo_params()) {
        for s in kpo::open_steady_states(&p) {
            let a = kpo::fluctuation_eigenvalues(&p, &s);
            let b = kpo::fluctuation_eigenvalues(&p, &s.partner());
            prop_assert!((a.plus - b.plus).norm() < 1e-12 && (a.minus - b.minus).norm() < 1e-12);
            prop_assert_eq!(a.stable, b.stable);
        }
    }

    #[test]
    fn kpo_labels_depend_on_pump_modulus(p in kpo_params(), phi in 0.0f64..std::f64::consts::TAU) {
        let g = p.pump_abs();
        let real = KpoParams::new(p.delta, p.kerr, Complex::new(g, 0.0), p.kappa).unwrap();
        let rotated = KpoParams::new(p.delta, p.kerr, Complex::from_polar(g, phi), p.kappa).unwrap();
        for mode in [Mode::Closed, Mode::Open] {
            prop_assert_eq!(classify_point(&ModelParams::Kpo(real), mode), classify_point(&ModelParams::Kpo(rotated), mode));
        }
    }

    #[test]
    fn kpo_iip_normal_phase_is_overdamped(p in kpo_params()) {
        if classify_point(&ModelParams::Kpo(p), Mode::Open) == RegionLabel::IIp {
            let e = kpo::fluctuation_eigenvalues(&p, &KpoState::normal());
            prop_assert!(e.overdamped);
            prop_assert!(e.plus.im == 0.0 && e.plus.re != e.minus.re);
        }
    }

    #[test]
    fn kpo_open_labels_approach_closed(d in -2.0f64..2.0, g in 0.0f64..1.0, neg in prop::bool::ANY) {
        let u = if neg { -1.0 } else { 1.0 };
        prop_assume!((d.abs() - g).abs() > 1e-2);
        let p = KpoParams::new(d, u, Complex::new(g, 0.0), 1e-5).unwrap();
        let closed = classify_point(&ModelParams::Kpo(p), Mode::Closed);
        let open = classify_point(&ModelParams::Kpo(p), Mode::Open);
        prop_assert_eq!(open, closed, "open {} vs closed {} at d={} g={} u={}", open, closed, d, g, u);
    }

    #[test]
    fn idtc_open_labels_approach_closed_off_the_symmetric_line(wc in 0.5f64..1.5, wz in 0.5f64..1.5, lx in 0.0f64..1.5, ly in 0.0f64..1.5) {
        // On λx = λy the broken states form a ring and the NP sliver persists for every κ > 0.
        let lc = 0.5 * (wc * wz).sqrt();
        prop_assume!((lx - ly).abs() > 2e-2 && (lx.max(ly) - lc).abs() > 2e-2);
        let p = ModelParams::Idtc(IdtcParams::new(wc, wz, lx, ly, 1e-4).unwrap());
        prop_assert_eq!(classify_point(&p, Mode::Open), classify_point(&p, Mode::Closed));
    }

    #[test]
    fn kpo_pole_stability_duality(p in kpo_params()) {
        for s in kpo::open_steady_states(&p) {
            let rep = kpo::stability_report(&p, &s).unwrap();
            let src = ResponseSource::kpo(&p, &s);
            let i = Complex::new(0.0, 1.0);
            let expected: Vec<Complex<f64>> = rep.eigenvalues.iter().map(|e| i * e).collect();
            let poles = src.poles().unwrap();
            prop_assert!(multiset_distance(&poles, &expected) < 1e-8);
            prop_assert_eq!(src.is_stable().unwrap(), rep.stable);
        }
    }

    #[test]
    fn kpo_stable_spectra_are_non_negative(p in kpo_params()) {
        let grid: Vec<f64> = (0..401).map(|i| -4.0 + 0.02 * i as f64).collect();
        for s in kpo::open_steady_states(&p) {
            let src = ResponseSource::kpo(&p, &s);
            if !src.is_stable().unwrap() {
                continue;
            }
            let set = src.evaluate(&grid).unwrap();
            prop_assert!(set.advanced_defect() < 1e-10);
            let sp = response::spectra(&set).unwrap();
            for k in 0..grid.len() {
                prop_assert!(sp.c[k] >= -1e-10, "C = {} at {}", sp.c[k], grid[k]);
                prop_assert!(sp.s[k] >= -1e-10, "S = {} at {}", sp.s[k], grid[k]);
            }
        }
    }

    #[test]
    fn idtc_flow_conserves_spin_length(p in idtc_params(), u in -2.0f64..2.0, v in -2.0f64..2.0, th in 0.0f64..3.14, ph in 0.0f64..6.28) {
        let s = IdtcState {
            alpha: Complex::new(u, v),
            x: th.sin() * ph.cos(),
            y: th.sin() * ph.sin(),
            z: th.cos(),
            label: IdtcLabel::Sp,
            branch: 1,
        };
        let f = idtc::mean_field_rhs(&p, &s);
        prop_assert!((s.x * f.dx + s.y * f.dy + s.z * f.dz).abs() < 1e-12);
    }

    #[test]
    fn idtc_flow_is_z2_covariant(p in idtc_params(), u in -2.0f64..2.0, v in -2.0f64..2.0, th in 0.0f64..3.14, ph in 0.0f64..6.28) {
        let s = IdtcState {
            alpha: Complex::new(u, v),
            x: th.sin() * ph.cos(),
            y: th.sin() * ph.sin(),
            z: th.cos(),
            label: IdtcLabel::Sp,
            branch: 1,
        };
        let f = idtc::mean_field_rhs(&p, &s);
        let g = idtc::mean_field_rhs(&p, &s.partner());
        prop_assert!((f.d_alpha + g.d_alpha).norm() < 1e-12);
        prop_assert!((f.dx + g.dx).abs() < 1e-12 && (f.dy + g.dy).abs() < 1e-12);
        prop_assert!((f.dz - g.dz).abs() < 1e-12);
    }

    #[test]
    fn idtc_steady_states_come_in_pairs(p in idtc_params()) {
        let states = idtc::open_steady_states(&p);
        prop_assert_eq!(states[0].label, IdtcLabel::Np);
        prop_assert!(states.len() % 2 == 1);
        for s in &states {
            prop_assert!(idtc::steady_residual(&p, s) < 1e-8);
        }
        for pair in states[1..].chunks(2) {
            let partner = pair[0].partner();
            prop_assert!((partner.alpha - pair[1].alpha).norm() < 1e-7);
            prop_assert!((partner.x - pair[1].x).abs() < 1e-7 && (partner.y - pair[1].y).abs() < 1e-7);
            let a = idtc::stability_report(&p, &pair[0]).unwrap();
            let b = idtc::stability_report(&p, &pair[1]).unwrap();
            prop_assert_eq!(a.stable, b.stable);
            prop_assert!(multiset_distance(&a.eigenvalues, &b.eigenvalues) < 1e-6);
        }
    }

    #[test]
    fn idtc_pole_stability_duality(p in idtc_params()) {
        for s in idtc::open_steady_states(&p) {
            let rep = idtc::stability_report(&p, &s).unwrap();
            let physical: Vec<Complex<f64>> = rep
                .eigenvalues
                .iter()
                .zip(&rep.constraint)
                .filter(|(_, c)| !**c)
                .map(|(e, _)| Complex::new(0.0, 1.0) * e)
                .collect();
            let poles = ResponseSource::idtc_jacobian(&p, &s).unwrap().poles().unwrap();
            prop_assert!(multiset_distance(&poles, &physical) < 1e-8);
            if s.label == IdtcLabel::Np {
                let form_poles = ResponseSource::idtc_np(&p).poles().unwrap();
                prop_assert!(multiset_distance(&form_poles, &physical) < 1e-8);
            }
        }
    }

    #[test]
    fn kpo_normal_boundary_follows_instability_curve(d in -1.5f64..1.5, k in 0.2f64..0.5) {
        let gc = (d * d + k * k).sqrt();
        // Stay clear of the other label changes at |G| = |Δ| and |G| = κ.
        let half = (0.5 * (gc - d.abs().max(k))).min(0.05);
        let base = ModelParams::Kpo(KpoParams::real(d, 1.0, 0.0, k).unwrap());
        let seg = Segment::along("g", gc - half, gc + half);
        let c = phasediag::trace_boundary(&base, Mode::Open, &[seg]).unwrap();
        prop_assert!((c[0].values[0].1 - gc).abs() < 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sweep_independent_of_thread_count(k in 0.1f64..0.5, threads in 2usize..6) {
        let spec = SweepSpec {
            base: ModelParams::Kpo(KpoParams::real(0.0, 1.0, 0.0, k).unwrap()),
            mode: Mode::Open,
            x: Axis::new("delta", -2.0, 2.0, 23),
            y: Axis::new("g", 0.0, 2.0, 17),
            trace: true,
        };
        let a = phasediag::sweep(&spec, Some(1)).unwrap();
        let b = phasediag::sweep(&spec, Some(threads)).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn np_variance_continuous_through_overdamped_region() {
    let max_jump = |n: usize| {
        let vars: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let d = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                kpo::np_variance_closed_form(&KpoParams::real(d, 1.0, 0.3, 0.4).unwrap()).unwrap()
            })
            .collect();
        vars.windows(2).map(|w| (w[1].0 - w[0].0).abs().max((w[1].1 - w[0].1).abs())).fold(0.0, f64::max)
    };
    let coarse = max_jump(2001);
    let fine = max_jump(20001);
    // Jumps shrink with the step, so there is no discontinuity at the exceptional points.
    assert!(fine < 0.12 * coarse, "{coarse:e} -> {fine:e}");
    assert!(fine < 1e-3);
}
