use pif_core::evolve::{evolve, ProbeRecorder, StepperConfig};
use pif_core::greens::{dyson_check, greens_spectrum, impulse_response, resolvent_element, resolvent_spectrum, to_energy, EnergyGrid};
use pif_core::lattice::{build_chain, ChainModel, PotentialProfile};
use pif_core::signal::ProbeRecord;
use pif_core::wavefield::WaveField;
use pif_core::C64;
use pif_oracles as oracle;

fn free(n: usize, probe: usize) -> ChainModel {
    build_chain(n, probe, PotentialProfile::free()).unwrap()
}

fn narrow_barrier(outer: usize) -> ChainModel {
    let s = outer;
    build_chain(s + 201, s, PotentialProfile::free().with_segment(s + 100, s + 105, 0.2)).unwrap()
}

#[test]
fn impulse_spreads_as_bessel_functions() {
    let n = 161;
    let c = 80;
    let m = free(n, c);
    let dt = 1e-3;
    let cfg = StepperConfig::with_dt(dt);
    let mut worst: f64 = 0.0;
    let mut psi = WaveField::delta(n, c);
    for &t in &[2.0, 8.0, 20.0] {
        psi = evolve(&m, &psi, &cfg, None, t, &mut []).unwrap();
        for j in 0..n {
            let exact = oracle::free_chain_propagator(j as i32 - c as i32, t, 1.0);
            worst = worst.max((psi.amplitudes[j].norm_sqr() - exact.norm_sqr()).abs());
        }
    }
    assert!(worst < 1e-6, "worst density error {worst:e}");
}

#[test]
fn middle_of_three_sites_oscillates() {
    let m = free(3, 1);
    let dt = 5e-4;
    let rec = impulse_response(&m, 1, 20.0, dt).unwrap();
    let v = std::f64::consts::SQRT_2;
    for k in (0..rec.len()).step_by(1000) {
        let exact = oracle::two_site_greens(2.0, v, rec.time(k));
        assert!((rec.samples[k] - exact).norm() < 1e-5, "t = {}", rec.time(k));
    }
}

#[test]
fn impulse_response_matches_eigen_expansion() {
    let m = narrow_barrier(20);
    let sp = oracle::spectrum(m.site_energies(), &vec![-1.0; m.n_sites() - 1]);
    let rec = impulse_response(&m, 20, 30.0, 1e-3).unwrap();
    for k in (0..rec.len()).step_by(2500) {
        let exact = sp.greens_time(20, 20, rec.time(k));
        assert!((rec.samples[k] - exact).norm() < 1e-4, "t = {}", rec.time(k));
    }
}

#[test]
fn isolated_level_transform_is_a_geometric_sum() {
    let (a, e0, dt, eta) = (C64::new(0.3, -0.7), 1.3, 0.05, 0.02);
    let samples: Vec<C64> = (0..4000).map(|n| a * C64::from_polar(1.0, -e0 * n as f64 * dt)).collect();
    let rec = ProbeRecord { site: 0, t0: 0.0, dt, samples };
    let grid = EnergyGrid::uniform(0.5, 2.0, 61, eta).unwrap();
    let s = to_energy(&rec, &grid, 1.0).unwrap();
    for (i, v) in s.values.iter().enumerate() {
        let exact = oracle::damped_level_sum(a, e0, grid.energy(i), eta, dt, 4000);
        assert!((v - exact).norm() < 1e-9 * exact.norm().max(1.0), "i = {i}");
    }
}

#[test]
fn resolvent_matches_dense_inverse() {
    for m in [free(3, 1), free(50, 20), narrow_barrier(50)] {
        let off = vec![-1.0; m.n_sites() - 1];
        let z = C64::new(1.7, 0.03);
        let dense = oracle::dense_resolvent(m.site_energies(), &off, z);
        let n = m.n_sites();
        for &(i, j) in &[(0, 0), (1, n - 1), (n / 2, n / 3), (n - 1, n - 1)] {
            let g = resolvent_element(&m, i, j, z).unwrap();
            assert!((g - dense[(i, j)]).norm() < 1e-10 * dense[(i, j)].norm().max(1.0), "({i}, {j}) of {n}");
        }
    }
}

#[test]
fn dyson_residual_vanishes_on_small_and_barrier_chains() {
    let energies = [C64::new(0.3, 0.01), C64::new(1.0, 0.1), C64::new(2.0, 0.5), C64::new(3.7, 0.05), C64::new(-1.0, 1.0)];
    for (m, cut) in [(free(3, 1), 1), (free(50, 20), 24), (narrow_barrier(50), 50)] {
        for z in energies {
            let r = dyson_check(&m, cut, z).unwrap();
            assert!(r < 1e-10, "n = {} z = {z} residual {r:e}", m.n_sites());
        }
    }
}

#[test]
fn time_route_matches_resolvent_in_the_band() {
    let m = narrow_barrier(260);
    let (dt, eta) = (0.002, 0.1);
    let rec = impulse_response(&m, 260, 10.0 / eta, dt).unwrap();
    let grid = EnergyGrid::conjugate(dt, 1.0, rec.len(), 2, eta).unwrap();
    let g_time = greens_spectrum(&rec, &grid, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..grid.n_points {
        let e = grid.energy(i);
        if e > 0.2 && e < 3.8 {
            let direct = resolvent_element(&m, 260, 260, C64::new(e, eta)).unwrap();
            worst = worst.max((g_time.values[i] - direct).norm() / direct.norm());
        }
    }
    assert!(worst < 1e-3, "worst relative deviation {worst:e}");
}

#[test]
fn local_density_of_states_integrates_to_one() {
    let m = free(200, 100);
    let eta = 0.05;
    let grid = EnergyGrid::uniform(-60.0, 64.0, 24801, eta).unwrap();
    let g = resolvent_spectrum(&m, 100, &grid).unwrap();
    let w: f64 = g.values.iter().map(|v| v.im).sum::<f64>() * grid.spacing;
    let integral = -w / std::f64::consts::PI;
    assert!((integral - 1.0).abs() < 1e-3, "integral {integral}");
    assert!(g.values.iter().all(|v| v.im < 0.0));
}

#[test]
fn eigen_weights_sum_to_one() {
    let m = narrow_barrier(30);
    let sp = oracle::spectrum(m.site_energies(), &vec![-1.0; m.n_sites() - 1]);
    let total: f64 = sp.ldos_weights(30).iter().map(|w| w.1).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn source_response_is_linear() {
    let m = narrow_barrier(40);
    let cfg = StepperConfig { source_site: Some(40), ..StepperConfig::with_dt(0.02) };
    let drive = |scale: C64| -> ProbeRecord {
        let mut rec = ProbeRecorder::new(60, 0.02);
        let samples: Vec<C64> = (0..500).map(|k| scale * C64::from_polar((-(k as f64 - 250.0).powi(2) / 5000.0).exp(), 0.9 * k as f64 * 0.02)).collect();
        let sched = pif_core::InjectionSchedule { site: 40, t_start: 0.0, dt: 0.02, samples };
        evolve(&m, &WaveField::zeros(m.n_sites()), &cfg, Some(&sched), 10.0, &mut [&mut rec]).unwrap();
        rec.into_record()
    };
    let a = drive(C64::new(1.0, 0.0));
    let b = drive(C64::new(0.0, 2.5));
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert!((x * C64::new(0.0, 2.5) - y).norm() < 1e-12);
    }
}

#[test]
fn packet_moves_at_group_velocity() {
    let m = free(1200, 600);
    let k0 = 0.7;
    let p = pif_core::gaussian_packet(&m, 300.0, 20.0, k0).unwrap();
    let later = evolve(&m, &p, &StepperConfig::with_dt(0.02), None, 100.0, &mut []).unwrap();
    let c0 = pif_core::wavefield::centroid(&p, 0..1200);
    let c1 = pif_core::wavefield::centroid(&later, 0..1200);
    let v = (c1 - c0) / 100.0;
    assert!((v - 2.0 * k0.sin()).abs() < 1e-3 * 2.0, "v = {v}");
}
