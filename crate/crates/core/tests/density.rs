use proptest::prelude::*;
use spikeinit::fp::{evolve_density, fp_before_reset, FpGrid};
use spikeinit::sim::LifParams;
use spikeinit::theory::{siegert_rate, stationary_distribution_diffusion, threshold_integration_lif, DiffusionMoments, MembraneDensity, DEFAULT_GRID_SIZE};

fn gaussian(mean: f64, var: f64, lo: f64, hi: f64, n: usize) -> MembraneDensity {
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let values = grid.iter().map(|v| (-(v - mean) * (v - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()).collect();
    MembraneDensity::new(grid, values).unwrap()
}

// Error in mean and variance after evolving a Gaussian for 5 ms, against the
// exact Ornstein-Uhlenbeck moments.
fn ou_error(n_points: usize) -> f64 {
    let p = LifParams::standard(0.0, 5e-3);
    let m = DiffusionMoments::new(0.6, 0.3).unwrap();
    let (m0, v0) = (0.1, 0.01);
    let init = gaussian(m0, v0, -1.0, 2.0, 4001);
    let grid = FpGrid { v_min: -1.0, v_max: 2.0, n_points, dt_inner: 1e-5 };
    let (d, _) = evolve_density(&init, &m, &p, &grid, p.dt).unwrap();
    let decay = (-p.dt / p.tau).exp();
    let mean = m.mu + (m0 - m.mu) * decay;
    let var = m.membrane_variance() * (1.0 - decay * decay) + v0 * decay * decay;
    (d.mean() - mean).abs() + (d.variance() - var).abs()
}

#[test]
fn transient_solution_converges_to_the_exact_moments() {
    let coarse = ou_error(1024);
    let fine = ou_error(2048);
    assert!(fine < 2e-3, "{fine}");
    // First-order upwinding: doubling the grid should roughly halve the error.
    assert!(coarse / fine > 1.6, "{coarse} -> {fine}");
}

#[test]
fn threshold_integration_reproduces_the_closed_form_density() {
    let p = LifParams::standard(0.0, 1e-4);
    let m = DiffusionMoments::new(0.8, 0.05f64.sqrt()).unwrap();
    let (d, rate) = threshold_integration_lif(&p, &m, None, DEFAULT_GRID_SIZE).unwrap();
    assert!((rate - siegert_rate(&p, &m).unwrap()).abs() < 1e-3 * rate);
    let probe: Vec<f64> = (0..20).map(|i| -0.4 + 0.07 * i as f64).collect();
    let exact = stationary_distribution_diffusion(&p, &m, &probe).unwrap();
    for (k, &v) in probe.iter().enumerate() {
        assert!((d.at(v) - exact.values()[k]).abs() < 2e-3, "v={v}");
    }
}

#[test]
fn stationary_density_has_unit_mass() {
    let p = LifParams::standard(0.9, 1e-3);
    let m = DiffusionMoments::new(0.9, 0.2).unwrap();
    let (d, _) = threshold_integration_lif(&p, &m, None, DEFAULT_GRID_SIZE).unwrap();
    assert!((d.mass() - 1.0).abs() < 1e-6);
    assert!(d.values().iter().all(|&x| x >= 0.0));
}

#[test]
fn before_reset_density_leaks_above_threshold() {
    let p = LifParams::standard(0.9, 1e-3);
    let m = DiffusionMoments::new(0.9, 0.2).unwrap();
    let (d, rate) = threshold_integration_lif(&p, &m, None, DEFAULT_GRID_SIZE).unwrap();
    let grid = FpGrid::around(&p, &m, 0.01, 2048);
    let after = fp_before_reset(&d, &m, &p, &grid).unwrap();
    let above = after.mass_between(p.v_th, grid.v_max);
    // The mass pushed past threshold in one step is of the order rate * dt.
    assert!(above > 0.2 * rate * p.dt && above < 5.0 * rate * p.dt, "{above} vs {}", rate * p.dt);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_conserves_mass(mu in 0.2f64..1.2, sigma in 0.1f64..0.5, m0 in -0.2f64..0.9, ms in 0.1f64..5.0) {
        let p = LifParams::standard(0.0, ms * 1e-3);
        let m = DiffusionMoments::new(mu, sigma).unwrap();
        let init = gaussian(m0, 0.02, -1.5, 2.5, 2001);
        let grid = FpGrid { v_min: -1.5, v_max: 2.5, n_points: 1024, dt_inner: p.dt };
        let (d, report) = evolve_density(&init, &m, &p, &grid, p.dt).unwrap();
        prop_assert!((d.mass() - 1.0).abs() < 1e-6 + report.clipped_mass);
        prop_assert!(report.clipped_mass < 1e-9);
    }
}
