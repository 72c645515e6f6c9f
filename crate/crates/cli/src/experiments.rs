use spikeinit::backprop::{backward_unrolled, forward_unrolled, gradient_variance_per_layer};
use spikeinit::fp::{fp_before_reset, FpGrid};
use spikeinit::init::{plan_network_init, solve_weight_sigma, kappa_for_gradient_flow, rate_operator, MonteCarloBudget, RateMode, Theta};
use spikeinit::math::stats::{mean, standard_error};
use spikeinit::rng::derive_seed;
use spikeinit::sim::{poisson_spikes, run_network, PopulationConfig, RunOptions};
use spikeinit::theory::{siegert_rate, threshold_integration_lif, DiffusionMoments, Histogram, DEFAULT_GRID_SIZE};
use spikeinit::Result;

use crate::config::{Experiment, Resolved};

/// One line of a plot, with optional error bars.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64, f64)>,
}

pub struct Figure {
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub log_y: bool,
    pub series: Vec<Series>,
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub figure: Option<Figure>,
}

// Shortest round-trip form, switching to exponent notation away from unit scale.
fn num(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e9) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

pub fn run(r: &Resolved) -> Result<Table> {
    match r.experiment {
        Experiment::CollapseSweep | Experiment::RwCorrect | Experiment::WienerCorrect | Experiment::PermutationCorrect => sweep(r),
        Experiment::Distributions => distributions(r),
        Experiment::MultilayerRates => multilayer(r),
        Experiment::GradientVariance => gradients(r),
        Experiment::RateSolver => rate_solver(r),
    }
}

fn population(r: &Resolved, dt_ms: f64) -> PopulationConfig {
    PopulationConfig {
        params: r.params_at(dt_ms),
        n_neurons: r.n_neurons,
        n_sources: r.n_sources,
        input_rate: r.input_rate,
        weights: r.weights.clone(),
        duration: r.duration,
        warmup: r.warmup,
        correction: r.correction,
        timing: r.timing,
    }
}

// Deep-network experiments use `n_sources` as the layer width.
fn theta(r: &Resolved, input_rate: f64) -> Theta {
    Theta {
        params: r.params_at(r.dt_ms[0]),
        input_rate,
        width: r.n_sources,
        weights: r.weights.clone(),
        method: r.method,
        correction: r.correction,
        mode: RateMode::Theory,
        monte_carlo: MonteCarloBudget { seed: r.seed, ..MonteCarloBudget::default() },
    }
}

fn sweep(r: &Resolved) -> Result<Table> {
    let theory = {
        let cfg = population(r, r.dt_ms[0]);
        let m = DiffusionMoments::from_population(&cfg.params, cfg.input_rate, cfg.n_sources, &cfg.weights)?;
        siegert_rate(&cfg.params, &m)?
    };
    let mut rows = Vec::new();
    let mut sim = Vec::new();
    let mut line = Vec::new();
    for &dt in &r.dt_ms {
        log::info!("{}: dt = {dt} ms", r.experiment);
        let est = population(r, dt).estimate(r.repeats, r.seed)?;
        rows.push(vec![num(dt), num(est.mean), num(est.se), num(est.corrected_rate), num(theory)]);
        sim.push((dt, est.mean, est.se));
        line.push((dt, theory, 0.0));
    }
    Ok(Table {
        header: vec!["dt_ms", "rate_hz", "rate_se", "from_correction_hz", "theory_hz"],
        rows,
        figure: Some(Figure {
            x_label: "step length (ms)",
            y_label: "rate (Hz)",
            log_y: false,
            series: vec![Series { name: format!("simulated ({})", r.correction), points: sim }, Series { name: "diffusion theory".into(), points: line }],
        }),
    })
}

fn distributions(r: &Resolved) -> Result<Table> {
    let th = theta(r, r.input_rate);
    let sigma_w = solve_weight_sigma(r.targets[0], &th)?.sigma_w;
    let m = th.moments(sigma_w)?;
    let p = th.params;
    let (stationary, rate) = threshold_integration_lif(&p, &m, None, DEFAULT_GRID_SIZE)?;
    let grid = FpGrid::around(&p, &m, r.surrogate.reach(), 2048);
    let before = fp_before_reset(&stationary, &m, &p, &grid)?;

    let cfg = PopulationConfig { weights: th.weights.with_scale(sigma_w)?, ..population(r, r.dt_ms[0]) };
    let run = cfg.run_once(r.seed, 0, RunOptions { record_membrane: true, ..RunOptions::default() })?;
    let trace = run.membrane.expect("membrane recording was requested");
    let hist = Histogram::from_samples(trace.values.iter(), grid.v_min, grid.v_max, 200);
    log::info!("sigma_w {sigma_w}, theory {rate} Hz, simulated {} Hz, L1 {}", run.rate, hist.l1_distance(&before));

    let mut rows = Vec::new();
    let (mut s1, mut s2, mut s3) = (Vec::new(), Vec::new(), Vec::new());
    for (c, h) in hist.centres().into_iter().zip(&hist.density) {
        let (a, b) = (stationary.at(c), before.at(c));
        rows.push(vec![num(c), num(a), num(b), num(*h)]);
        s1.push((c, a, 0.0));
        s2.push((c, b, 0.0));
        s3.push((c, *h, 0.0));
    }
    Ok(Table {
        header: vec!["v", "stationary", "before_reset", "simulated"],
        rows,
        figure: Some(Figure {
            x_label: "membrane potential",
            y_label: "density",
            log_y: false,
            series: vec![
                Series { name: "stationary".into(), points: s1 },
                Series { name: "before reset".into(), points: s2 },
                Series { name: "simulated".into(), points: s3 },
            ],
        }),
    })
}

fn multilayer(r: &Resolved) -> Result<Table> {
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for &target in &r.targets {
        let th = theta(r, target);
        let plan = plan_network_init(r.layers, &[target], &th, &r.surrogate)?;
        let steps = ((r.duration + r.warmup) / th.params.dt).round() as usize;
        let warm = (r.warmup / th.params.dt).round() as usize;
        let mut per_layer = vec![Vec::new(); r.layers];
        for rep in 0..r.repeats as u64 {
            log::info!("multilayer-rates: target {target} Hz, repeat {rep}");
            let seed = derive_seed(r.seed, &[target.to_bits(), rep]);
            let input = poisson_spikes(target, th.width, steps, th.params.dt, derive_seed(seed, &[2]))?;
            let run = run_network(&plan.blueprints(seed)?, &th.params, &input, r.correction, &RunOptions { warmup_steps: warm, seed, ..RunOptions::default() })?;
            for (l, rate) in run.rates().into_iter().enumerate() {
                per_layer[l].push(rate);
            }
        }
        let mut pts = Vec::new();
        for (l, rates) in per_layer.iter().enumerate() {
            let (m, se) = (mean(rates), standard_error(rates));
            rows.push(vec![num(target), (l + 1).to_string(), num(plan.layers[l].sigma_w), num(m), num(se)]);
            pts.push(((l + 1) as f64, m, se));
        }
        series.push(Series { name: format!("target {target} Hz"), points: pts });
    }
    Ok(Table {
        header: vec!["target_hz", "layer", "sigma_w", "rate_hz", "rate_se"],
        rows,
        figure: Some(Figure { x_label: "layer", y_label: "rate (Hz)", log_y: false, series }),
    })
}

fn gradients(r: &Resolved) -> Result<Table> {
    let target = r.targets[0];
    let th = theta(r, r.input_rate);
    let plan = plan_network_init(r.layers, &[target], &th, &r.surrogate)?;
    let p = th.params;
    let steps = ((r.duration + r.warmup) / p.dt).round() as usize;
    let warm = (r.warmup / p.dt).round() as usize;
    let mut plain = vec![Vec::new(); r.layers];
    let mut scaled = vec![Vec::new(); r.layers];
    for rep in 0..r.repeats as u64 {
        let seed = derive_seed(r.seed, &[rep]);
        let layers = plan.blueprints(seed)?;
        let input = poisson_spikes(r.input_rate, th.width, steps, p.dt, derive_seed(seed, &[2]))?;
        let run = forward_unrolled(&layers, &p, &input, r.correction, &RunOptions { warmup_steps: warm, seed, ..RunOptions::default() })?;
        let a = backward_unrolled(&run, &layers, &p, &[r.surrogate.with_kappa(1.0)], false)?;
        let b = backward_unrolled(&run, &layers, &p, &plan.surrogates(), false)?;
        for (l, (x, y)) in gradient_variance_per_layer(&a).into_iter().zip(gradient_variance_per_layer(&b)).enumerate() {
            plain[l].push(x);
            scaled[l].push(y);
        }
    }
    let a = p.alpha();
    let mut rows = Vec::new();
    let (mut s1, mut s2) = (Vec::new(), Vec::new());
    for l in 0..r.layers {
        let lp = &plan.layers[l];
        let gain = th.fan_in() * lp.sigma_w * lp.sigma_w * lp.integral / (1.0 - a * a);
        let (x, y) = (mean(&plain[l]), mean(&scaled[l]));
        rows.push(vec![l.to_string(), num(x), num(y), num(lp.kappa), num(gain)]);
        s1.push((l as f64, x, 0.0));
        s2.push((l as f64, y, 0.0));
    }
    Ok(Table {
        header: vec!["population", "var_unscaled", "var_scaled", "kappa", "predicted_gain"],
        rows,
        figure: Some(Figure {
            x_label: "population (0 = input)",
            y_label: "spike gradient variance",
            log_y: true,
            series: vec![Series { name: "kappa = 1".into(), points: s1 }, Series { name: "planned kappa".into(), points: s2 }],
        }),
    })
}

fn rate_solver(r: &Resolved) -> Result<Table> {
    if r.targets.is_empty() {
        let p = r.params_at(r.dt_ms[0]);
        let m = match (r.mu, r.sigma) {
            (Some(mu), Some(sigma)) => DiffusionMoments::new(mu, sigma)?,
            _ => DiffusionMoments::from_population(&p, r.input_rate, r.n_sources, &r.weights)?,
        };
        let th = Theta { params: p, ..theta(r, r.input_rate) };
        let rate = match (r.mu, r.sigma) {
            (Some(_), Some(_)) => siegert_rate(&p, &m)?,
            _ => rate_operator(r.weights.scale()?, &th)?,
        };
        return Ok(Table {
            header: vec!["mu", "sigma", "method", "rate_hz"],
            rows: vec![vec![num(m.mu), num(m.sigma), format!("{:?}", r.method).to_lowercase(), num(rate)]],
            figure: None,
        });
    }
    let th = theta(r, r.input_rate);
    let mut rows = Vec::new();
    for &target in &r.targets {
        let sol = solve_weight_sigma(target, &th)?;
        let kappa = kappa_for_gradient_flow(sol.sigma_w, &th, &r.surrogate).map(|k| num(k.kappa)).unwrap_or_else(|e| {
            log::warn!("no surrogate scale for {target} Hz: {e}");
            String::new()
        });
        rows.push(vec![num(target), num(sol.sigma_w), num(sol.rate), kappa]);
    }
    Ok(Table { header: vec!["target_hz", "sigma_w", "rate_hz", "kappa"], rows, figure: None })
}
