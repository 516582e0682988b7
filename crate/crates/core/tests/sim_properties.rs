use std::f64::consts::PI;

use jmgt_core::modal::ModeEigensystem;
use jmgt_core::sim::{
    calb_norm, dt_max, duhamel_residual, functionals, make_initial, run, run_from, InitialFamily,
    InitialSpec, SimConfig, Simulator, Trajectory,
};
use jmgt_core::{BesovSpec, Grid, ModelParams, SpectralGrid, SpectralState, SumExponent};
use num_complex::Complex64;

fn nonlinear(tau: f64, beta: f64) -> ModelParams {
    ModelParams::new(tau, beta).unwrap().with_nonlinearity(2.0).unwrap()
}

fn band(amplitude: f64, seed: u64) -> InitialSpec {
    InitialSpec {
        family: InitialFamily::RandomBand { m_lo: 1.0, m_hi: 3.0 },
        amplitude,
        seed,
    }
}

fn diff_norm(a: &SpectralState, b: &SpectralState) -> f64 {
    let pairs = a.u.iter().zip(&b.u).chain(a.v.iter().zip(&b.v)).chain(a.w.iter().zip(&b.w));
    pairs.map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn every(traj: &Trajectory, stride: usize) -> Trajectory {
    Trajectory {
        times: traj.times.iter().step_by(stride).copied().collect(),
        states: traj.states.iter().step_by(stride).cloned().collect(),
    }
}

#[test]
fn linear_run_matches_mode_propagator() {
    let g = Grid::new(3, 32, 2.0 * PI).unwrap();
    let params = nonlinear(0.5, 1.0).linear();
    let dt = dt_max(&g, &params);
    let sim = Simulator::new(g, params, dt).unwrap();
    let s0 = make_initial(&band(0.5, 11), &sim.sg).unwrap().to_spectral(&sim.sg);
    let steps = 1000;
    let out = sim.advance(&s0, steps).unwrap();
    let t = steps as f64 * dt;
    let mut worst: f64 = 0.0;
    for (i, m) in sim.sg.modes().iter().enumerate() {
        if !m.kept {
            assert_eq!(out.u[i].norm() + out.v[i].norm() + out.w[i].norm(), 0.0);
            continue;
        }
        let x = [s0.u[i], s0.v[i], s0.w[i]];
        if x.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        let p = ModeEigensystem::for_params(m.k2, &params).unwrap().propagator(t).unwrap();
        let y = p.apply(&x);
        let scale = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let err = [out.u[i] - y[0], out.v[i] - y[1], out.w[i] - y[2]]
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(err / scale);
    }
    assert!(worst < 1e-9, "worst relative mode error {worst:e}");
}

#[test]
fn lawson_rk4_self_convergence_order() {
    let g = Grid::new(3, 16, 2.0 * PI).unwrap();
    let params = nonlinear(0.5, 1.0);
    let t_end = 0.4;
    let base = (t_end / dt_max(&g, &params)).ceil() as usize;
    let finals: Vec<SpectralState> = (0..4)
        .map(|lvl| {
            let n = base << lvl;
            let sim = Simulator::new(g, params, t_end / n as f64).unwrap();
            let s0 = make_initial(&band(0.3, 3), &sim.sg).unwrap().to_spectral(&sim.sg);
            sim.advance(&s0, n).unwrap()
        })
        .collect();
    let d: Vec<f64> = finals.windows(2).map(|w| diff_norm(&w[0], &w[1])).collect();
    let p1 = (d[0] / d[1]).log2();
    let p2 = (d[1] / d[2]).log2();
    assert!(p1 >= 3.7 && p2 >= 3.7, "orders {p1} {p2} from {d:?}");
}

#[test]
fn duhamel_residual_second_order_in_stride() {
    let g = Grid::new(3, 16, 2.0 * PI).unwrap();
    let sim = Simulator::new(g, nonlinear(0.5, 1.0), 0.005).unwrap();
    let s0 = make_initial(&band(1e-2, 3), &sim.sg).unwrap().to_spectral(&sim.sg);
    let traj = run_from(&sim, s0, 128, 1, false, true).unwrap().trajectory.unwrap();
    let res: Vec<f64> = [8, 4, 2, 1]
        .iter()
        .map(|&s| duhamel_residual(&sim, &every(&traj, s), Some(1), 0.5).unwrap().residual)
        .collect();
    for w in res.windows(2) {
        assert!(w[0] / w[1] >= 3.5, "residuals {res:?}");
    }
}

#[test]
fn duhamel_residual_linear_and_empty_block() {
    let g = Grid::new(3, 16, 2.0 * PI).unwrap();
    let sim = Simulator::new(g, nonlinear(0.5, 1.0).linear(), 0.01).unwrap();
    let s0 = make_initial(&band(0.2, 5), &sim.sg).unwrap().to_spectral(&sim.sg);
    let traj = run_from(&sim, s0, 50, 10, false, true).unwrap().trajectory.unwrap();
    let r = duhamel_residual(&sim, &traj, None, 1.0).unwrap();
    assert!(r.residual < 1e-9, "{r:?}");
    let empty = duhamel_residual(&sim, &traj, Some(6), 0.0).unwrap();
    assert_eq!(empty.residual, 0.0);
    assert_eq!(empty.lhs_norm, 0.0);
    let two = every(&traj, 5);
    assert!(duhamel_residual(&sim, &two, None, 0.0).unwrap().sparse);
}

#[test]
fn mean_mode_follows_zero_frequency_system() {
    let g = Grid::new(2, 16, 2.0 * PI).unwrap();
    let params = nonlinear(0.5, 1.0).linear();
    let sim = Simulator::new(g, params, 0.01).unwrap();
    let mut s0 = make_initial(&band(0.2, 9), &sim.sg).unwrap().to_spectral(&sim.sg);
    s0.u[0] = Complex64::new(0.3, 0.0);
    s0.v[0] = Complex64::new(-0.7, 0.0);
    s0.w[0] = Complex64::new(0.0, 0.0);
    let out = sim.advance(&s0, 500).unwrap();
    assert!((out.v[0] - s0.v[0]).norm() < 1e-12);
    // u drifts linearly with the constant mean velocity
    assert!((out.u[0].re - (0.3 - 0.7 * 5.0)).abs() < 1e-10);
}

#[test]
fn hermitian_symmetry_preserved() {
    let g = Grid::new(2, 16, 2.0 * PI).unwrap();
    let sim = Simulator::new(g, nonlinear(0.5, 1.0), 0.01).unwrap();
    let s0 = make_initial(&band(0.3, 1), &sim.sg).unwrap().to_spectral(&sim.sg);
    let out = sim.advance(&s0, 40).unwrap();
    for f in [&out.u, &out.v, &out.w] {
        assert!(sim.sg.hermitian_defect(f) < 1e-12);
    }
}

#[test]
fn linear_energy_does_not_grow() {
    let g = Grid::new(3, 16, 8.0 * PI).unwrap();
    let params = nonlinear(0.5, 1.0).linear();
    let cfg = SimConfig {
        grid: g,
        params,
        dt: dt_max(&g, &params),
        t_end: 20.0,
        initial: InitialSpec {
            family: InitialFamily::GaussianBump { width: PI },
            amplitude: 1.0,
            seed: 0,
        },
        report_stride: 5,
        track_besov: false,
        keep_snapshots: false,
    };
    let rec = run(&cfg).unwrap();
    for w in rec.reports.windows(2) {
        assert!(w[1].energy2 <= w[0].energy2 * (1.0 + 1e-12), "{} -> {}", w[0].energy2, w[1].energy2);
        assert!(w[1].cal_d2_cum >= w[0].cal_d2_cum);
    }
    assert!((rec.sup_energy_ratio - 1.0).abs() < 1e-12);
}

#[test]
fn unstable_parameters_grow_without_nonlinearity() {
    let g = Grid::new(2, 16, 2.0 * PI).unwrap();
    let params = nonlinear(1.5, 1.0).linear();
    let sim = Simulator::new(g, params, dt_max(&g, &params)).unwrap();
    let s0 = make_initial(&band(1e-3, 2), &sim.sg).unwrap().to_spectral(&sim.sg);
    let rec = run_from(&sim, s0, 4000, 400, false, false).unwrap();
    let e: Vec<f64> = rec.reports.iter().map(|r| r.energy2).collect();
    assert!(e.last().unwrap() > &(10.0 * e[0]), "{e:?}");
}

#[test]
fn sup_energy_scales_with_amplitude() {
    let g = Grid::new(3, 16, 2.0 * PI).unwrap();
    let params = nonlinear(0.5, 1.0);
    let sup = |eps: f64| {
        let cfg = SimConfig {
            grid: g,
            params,
            dt: dt_max(&g, &params),
            t_end: 2.0,
            initial: band(eps, 4),
            report_stride: 10,
            track_besov: false,
            keep_snapshots: false,
        };
        run(&cfg).unwrap().reports.last().unwrap().cal_e2.sqrt()
    };
    let r = sup(2e-4) / sup(1e-4);
    assert!((r - 2.0).abs() < 1e-3, "ratio {r}");
}

#[test]
fn initial_norm_is_homogeneous_in_amplitude() {
    let g = Grid::new(3, 16, 8.0 * PI).unwrap();
    let sg = SpectralGrid::new(g).unwrap();
    let params = nonlinear(0.5, 1.0);
    let norm = |eps: f64| {
        let spec = InitialSpec {
            family: InitialFamily::GaussianBump { width: PI },
            amplitude: eps,
            seed: 0,
        };
        let s = make_initial(&spec, &sg).unwrap().to_spectral(&sg);
        calb_norm(&s, &params, &sg, 1.5).unwrap()
    };
    let (a, b) = (norm(1e-3), norm(3e-3));
    assert!(a > 0.0);
    assert!((b / a - 3.0).abs() < 1e-12, "{a} {b}");
    assert_eq!(norm(0.0), 0.0);
}

#[test]
fn single_mode_occupies_one_block() {
    let g = Grid::new(3, 16, 2.0 * PI).unwrap();
    let sg = SpectralGrid::new(g).unwrap();
    let spec = InitialSpec {
        family: InitialFamily::SingleMode { mode: [3, 0, 0] },
        amplitude: 1.0,
        seed: 0,
    };
    let s = make_initial(&spec, &sg).unwrap().to_spectral(&sg);
    let k: Vec<f64> = sg.modes().iter().map(|m| m.k_abs()).collect();
    let ev = jmgt_core::lp::BesovEvaluator::covering(&k, true).unwrap();
    let samples = jmgt_core::lp::SpectralSamples::from_grid(&sg, &s.u);
    let norm = ev.norm_of(&samples, &BesovSpec::homogeneous(1.5, SumExponent::One)).unwrap();
    let peak = norm.blocks.iter().fold(0.0f64, |m, b| m.max(b.1));
    let occupied: Vec<i32> = norm.blocks.iter().filter(|b| b.1 > 1e-12 * peak).map(|b| b.0).collect();
    assert_eq!(occupied, vec![1]);
}

#[test]
fn zero_state_functionals_vanish() {
    let g = Grid::new(3, 8, 2.0 * PI).unwrap();
    let sg = SpectralGrid::new(g).unwrap();
    let f = functionals(&SpectralState::zeros(g.spectral_len()), &nonlinear(0.5, 1.0), &sg);
    assert!(f.energy_terms.iter().chain(&f.dissipation_terms).all(|&x| x == 0.0));
}

#[test]
fn fitted_constant_reported_and_finite() {
    let g = Grid::new(3, 16, 16.0 * PI).unwrap();
    let params = nonlinear(0.5, 1.0);
    let cfg = SimConfig {
        grid: g,
        params,
        dt: dt_max(&g, &params),
        t_end: 20.0,
        initial: InitialSpec {
            family: InitialFamily::GaussianBump { width: 2.0 * PI },
            amplitude: 1e-3,
            seed: 0,
        },
        report_stride: 10,
        track_besov: true,
        keep_snapshots: false,
    };
    let rec = run(&cfg).unwrap();
    let last = rec.reports.last().unwrap();
    assert!(last.fitted_c.is_finite() && last.fitted_c > 0.0);
    assert!(last.m0 > 0.0);
    assert_eq!(last.besov_terms.len(), 8);
    assert!(last.besov_terms.iter().all(|(_, v)| v.is_finite() && *v >= 0.0));
    assert!(rec.c_variation_last_half() < 0.1);
}
