use proptest::prelude::*;
use spikeinit::correction::{Correction, RandomWalkCorrection, SpikeCorrection};
use spikeinit::sim::{poisson_spikes, run_network, step_population, LayerTopology, LifParams, PopulationConfig, RunOptions, SimState, SpikeTiming, WeightSpec};

#[test]
fn poisson_occupancy_over_a_million_bins() {
    // 1000 sources x 1000 bins at p = 0.02.
    let raster = poisson_spikes(20.0, 1000, 1000, 1e-3, 5).unwrap();
    let bins = 1e6f64;
    let p = 0.02;
    let count = raster.spike_count() as f64;
    let se = (bins * p * (1.0 - p)).sqrt();
    assert!((count - bins * p).abs() < 4.0 * se, "{count}");
}

#[test]
fn sparse_poisson_path_has_the_same_occupancy() {
    let raster = poisson_spikes(2.0, 1000, 1000, 1e-3, 6).unwrap();
    let expected = 1e6 * 0.002;
    let se = (1e6 * 0.002 * 0.998f64).sqrt();
    assert!((raster.spike_count() as f64 - expected).abs() < 4.0 * se);
}

#[test]
fn more_than_one_spike_per_bin_is_refused() {
    let err = poisson_spikes(2000.0, 10, 10, 1e-3, 1).unwrap_err();
    assert!(err.to_string().contains("at most one spike"));
}

#[test]
fn corrected_rate_exceeds_uncorrected_at_coarse_steps() {
    let base = PopulationConfig {
        params: LifParams::standard(0.8, 2e-3),
        n_neurons: 300,
        n_sources: 2000,
        input_rate: 50.0,
        weights: WeightSpec::two_point(0.01, 0.5),
        duration: 1.0,
        warmup: 0.1,
        correction: Correction::None,
        timing: SpikeTiming::IntervalStart,
    };
    let plain = base.estimate(2, 3).unwrap();
    let corrected = PopulationConfig { correction: Correction::RandomWalk, ..base }.estimate(2, 3).unwrap();
    assert!(corrected.mean > plain.mean + 1.0, "{} vs {}", corrected.mean, plain.mean);
    assert!(corrected.corrected_rate > 0.0);
}

fn small_layer(seed: u64, n_pre: usize, n_post: usize) -> LayerTopology {
    LayerTopology::realise(n_pre, n_post, &WeightSpec::two_point(0.05, 0.5), seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn neurons_either_spike_and_reset_or_stay_below_threshold(seed in 0u64..1000, i_ext in 0.0f64..1.2, v0 in -0.5f64..1.0) {
        let layer = small_layer(seed, 40, 25);
        let p = LifParams::standard(i_ext, 1e-3);
        let mut state = SimState::new(vec![v0; 25], seed);
        let input: Vec<u32> = (0..40).filter(|i| (i + seed as u32) % 3 == 0).collect();
        let corr = RandomWalkCorrection { w: 0.05, decay: Default::default() };
        let out = step_population(&mut state, &p, &layer, &input, Some(&corr as &dyn SpikeCorrection)).unwrap();
        for i in 0..25 {
            if out.spikes.binary_search(&(i as u32)).is_ok() {
                prop_assert_eq!(state.v[i], p.v_r);
            } else {
                prop_assert!(state.v[i] < p.v_th);
                prop_assert_eq!(state.v[i], out.pre_reset[i]);
            }
        }
    }

    #[test]
    fn crossing_probability_falls_as_the_barrier_rises(n_exc in 0u64..40, n_inh in 0u64..40, y in -3i64..40) {
        use spikeinit::correction::{rw_spike_probability, RwQuery};
        let lo = rw_spike_probability(&RwQuery { n_exc, n_inh, steps_needed: y });
        let hi = rw_spike_probability(&RwQuery { n_exc, n_inh, steps_needed: y + 1 });
        prop_assert!(hi <= lo + 1e-15);
        prop_assert!((0.0..=1.0).contains(&lo));
    }

    #[test]
    fn runs_are_reproducible_from_the_seed(seed in 0u64..10_000) {
        let layers = vec![small_layer(seed, 50, 30), small_layer(seed + 1, 30, 20)];
        let p = LifParams::standard(0.9, 1e-3);
        let input = poisson_spikes(40.0, 50, 100, 1e-3, seed).unwrap();
        let opts = RunOptions { seed, ..RunOptions::default() };
        let a = run_network(&layers, &p, &input, Correction::RandomWalk, &opts).unwrap();
        let b = run_network(&layers, &p, &input, Correction::RandomWalk, &opts).unwrap();
        for (x, y) in a.layers.iter().zip(&b.layers) {
            prop_assert_eq!(x.raster.to_dense(), y.raster.to_dense());
        }
    }

    #[test]
    fn reported_rate_matches_spike_count(seed in 0u64..10_000) {
        let layers = vec![small_layer(seed, 50, 30)];
        let p = LifParams::standard(0.9, 1e-3);
        let input = poisson_spikes(40.0, 50, 200, 1e-3, seed).unwrap();
        let run = run_network(&layers, &p, &input, Correction::None, &RunOptions { warmup_steps: 20, ..RunOptions::default() }).unwrap();
        let r = &run.layers[0];
        let expected = r.raster.spike_count() as f64 / (30.0 * 180.0 * 1e-3);
        prop_assert!((r.rate - expected).abs() < 1e-9);
    }
}
