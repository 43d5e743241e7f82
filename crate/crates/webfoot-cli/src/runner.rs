//! Plan execution: run the configuration matrix (parallel across runs,
//! deterministic per run), compute per-trial and aggregate metrics, and emit
//! timeseries, summary and plot files.

use std::path::Path;

use rayon::prelude::*;

use webfoot::dynamics::{run_sim, SimLog};
use webfoot::metrics::{
    detect_tp1, detect_tp2, efficiency, impulse_difference, input_work, mean_curve, net_thrust,
    MeanCurve, PhaseCurve, Signal, Window,
};
use webfoot::TendonConfigId;

use crate::config::Resolved;
use crate::csvio;
use crate::svg;
use crate::HarnessError;

/// Metrics of one (configuration, trial) run.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub config: TendonConfigId,
    pub trial: u32,
    pub seed: u64,
    pub period_s: f64,
    pub f_net_n: f64,
    pub w_input_j: f64,
    pub eta_mech: f64,
    /// Trial-mean transition times over cycles where they exist.
    pub tp1_s: Option<f64>,
    pub tp2_s: Option<f64>,
    /// Per-cycle transition times (present cycles only).
    pub tp1_cycles: Vec<f64>,
    pub tp2_cycles: Vec<f64>,
    pub log: SimLog,
}

/// Per-configuration aggregate with 95% confidence half-widths. Trial-level
/// quantities aggregate over trials; transition times pool all cycles.
#[derive(Debug, Clone)]
pub struct ConfigAggregate {
    pub config: TendonConfigId,
    pub f_net_mean: f64,
    pub f_net_ci: f64,
    pub w_input_mean: f64,
    pub w_input_ci: f64,
    pub eta_mean: f64,
    pub eta_ci: f64,
    pub tp1_mean: Option<f64>,
    pub tp1_ci: Option<f64>,
    pub tp2_mean: Option<f64>,
    pub tp2_ci: Option<f64>,
    pub tp1_over_t_mean: Option<f64>,
    pub tp1_over_t_ci: Option<f64>,
    pub tp2_over_t_mean: Option<f64>,
    pub tp2_over_t_ci: Option<f64>,
}

/// Everything a plan run produces in memory.
#[derive(Debug)]
pub struct PlanOutcome {
    pub trials: Vec<TrialResult>,
    pub aggregates: Vec<ConfigAggregate>,
    pub thrust_curves: Vec<(TendonConfigId, MeanCurve)>,
    pub impulse_pairs: Vec<(TendonConfigId, TendonConfigId, PhaseCurve)>,
}

fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, 1.96 * (var / n as f64).sqrt())
}

fn opt_mean_ci(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        (None, None)
    } else {
        let (m, c) = mean_ci(xs);
        (Some(m), Some(c))
    }
}

/// Metrics of a finished run.
pub fn trial_metrics(
    log: SimLog,
    config: TendonConfigId,
    trial: u32,
    seed: u64,
    resolved: &Resolved,
) -> Result<TrialResult, HarnessError> {
    let cycles = log.header.cycles;
    let full = Window::cycles(&log, 0, cycles);
    let f_net = net_thrust(&log, &full)?;
    // Input work is reported per gait cycle, as is the efficiency.
    let w_in = input_work(&log, &full)? / cycles as f64;
    let eta = efficiency(f_net, w_in)?;
    let mut tp1_cycles = Vec::new();
    let mut tp2_cycles = Vec::new();
    for c in 0..cycles {
        if config.has_gst() {
            if let Some(tp1) = detect_tp1(&log, c, resolved.metrics.tp1_threshold_n)? {
                tp1_cycles.push(tp1);
            }
        }
        if let Some(tp2) = detect_tp2(
            &log,
            c,
            resolved.metrics.tp2_tolerance,
            resolved.metrics.tp2_spread_mm,
        )? {
            tp2_cycles.push(tp2);
        }
    }
    let tp1_s = (!tp1_cycles.is_empty())
        .then(|| tp1_cycles.iter().sum::<f64>() / tp1_cycles.len() as f64);
    let tp2_s = (!tp2_cycles.is_empty())
        .then(|| tp2_cycles.iter().sum::<f64>() / tp2_cycles.len() as f64);
    Ok(TrialResult {
        config,
        trial,
        seed,
        period_s: log.period(),
        f_net_n: f_net,
        w_input_j: w_in,
        eta_mech: eta,
        tp1_s,
        tp2_s,
        tp1_cycles,
        tp2_cycles,
        log,
    })
}

fn aggregate(config: TendonConfigId, trials: &[TrialResult]) -> ConfigAggregate {
    let of = |f: &dyn Fn(&TrialResult) -> f64| trials.iter().map(f).collect::<Vec<_>>();
    let (f_net_mean, f_net_ci) = mean_ci(&of(&|t| t.f_net_n));
    let (w_mean, w_ci) = mean_ci(&of(&|t| t.w_input_j));
    let (eta_mean, eta_ci) = mean_ci(&of(&|t| t.eta_mech));
    let period = trials.first().map(|t| t.period_s).unwrap_or(1.0);
    let tp1_all: Vec<f64> = trials.iter().flat_map(|t| t.tp1_cycles.iter().copied()).collect();
    let tp2_all: Vec<f64> = trials.iter().flat_map(|t| t.tp2_cycles.iter().copied()).collect();
    let (tp1_mean, tp1_ci) = opt_mean_ci(&tp1_all);
    let (tp2_mean, tp2_ci) = opt_mean_ci(&tp2_all);
    ConfigAggregate {
        config,
        f_net_mean,
        f_net_ci,
        w_input_mean: w_mean,
        w_input_ci: w_ci,
        eta_mean,
        eta_ci,
        tp1_mean,
        tp1_ci,
        tp2_mean,
        tp2_ci,
        tp1_over_t_mean: tp1_mean.map(|v| v / period),
        tp1_over_t_ci: tp1_ci.map(|v| v / period),
        tp2_over_t_mean: tp2_mean.map(|v| v / period),
        tp2_over_t_ci: tp2_ci.map(|v| v / period),
    }
}

/// Impulse-difference pairs of interest when both sides ran.
const IMPULSE_PAIRS: [(TendonConfigId, TendonConfigId); 5] = [
    (TendonConfigId::Gt2e, TendonConfigId::GtNe),
    (TendonConfigId::GtAe, TendonConfigId::Gt2e),
    (TendonConfigId::GtAe, TendonConfigId::GtNe),
    (TendonConfigId::GtAe, TendonConfigId::HtAe),
    (TendonConfigId::HtAe, TendonConfigId::NtAe),
];

/// Aggregate a finished trial set into per-config statistics and curves.
pub fn analyze(trials: Vec<TrialResult>, resolved: &Resolved) -> Result<PlanOutcome, HarnessError> {
    let mut aggregates = Vec::new();
    let mut thrust_curves = Vec::new();
    for &config in &resolved.plan.configs {
        let of_config: Vec<&TrialResult> = trials.iter().filter(|t| t.config == config).collect();
        if of_config.is_empty() {
            continue;
        }
        aggregates.push(aggregate(config, &of_config.iter().map(|t| (*t).clone()).collect::<Vec<_>>()));
        let logs: Vec<&SimLog> = of_config.iter().map(|t| &t.log).collect();
        let curve = mean_curve(&logs, Signal::Thrust, resolved.grid_bins, resolved.window_bins)?;
        thrust_curves.push((config, curve));
    }

    let mut impulse_pairs = Vec::new();
    for (a, b) in IMPULSE_PAIRS {
        let ca = thrust_curves.iter().find(|(c, _)| *c == a);
        let cb = thrust_curves.iter().find(|(c, _)| *c == b);
        if let (Some((_, ca)), Some((_, cb))) = (ca, cb) {
            impulse_pairs.push((a, b, impulse_difference(ca, cb)?));
        }
    }

    Ok(PlanOutcome {
        trials,
        aggregates,
        thrust_curves,
        impulse_pairs,
    })
}

/// Execute the whole plan. Runs execute in parallel across a bounded worker
/// pool; each run is deterministic, and outputs are assembled in plan order
/// so repeated executions are byte-identical.
pub fn run_plan(resolved: &Resolved, out_dir: &Path, jobs: usize) -> Result<PlanOutcome, HarnessError> {
    std::fs::create_dir_all(out_dir)?;
    let echo = resolved.echo();

    let mut specs = Vec::new();
    for &config in &resolved.plan.configs {
        for trial in 0..resolved.plan.trials {
            specs.push((config, trial));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Range {
            key: "--jobs".to_string(),
            msg: e.to_string(),
        })?;

    let results: Vec<Result<TrialResult, HarnessError>> = pool.install(|| {
        specs
            .par_iter()
            .map(|&(config, trial)| {
                let mut sim = resolved.sim.clone();
                sim.tendon_config = config;
                sim.seed = resolved.plan.seed_base.wrapping_add(trial as u64);
                let log = run_sim(&sim)?;
                if resolved.plan.emit_timeseries {
                    let path = out_dir.join(csvio::timeseries_filename(config, trial));
                    csvio::write_timeseries(&path, &log, trial, &echo)?;
                }
                trial_metrics(log, config, trial, sim.seed, resolved)
            })
            .collect()
    });

    let mut trials = Vec::with_capacity(results.len());
    for r in results {
        trials.push(r?);
    }

    let outcome = analyze(trials, resolved)?;

    if resolved.plan.emit_summary {
        csvio::write_summary(
            &out_dir.join("summary.csv"),
            &outcome.trials,
            &outcome.aggregates,
            &echo,
        )?;
    }
    if resolved.plan.emit_plots {
        svg::write_thrust_curves(&out_dir.join("thrust_mean.svg"), &outcome.thrust_curves)?;
        svg::write_impulse_curves(&out_dir.join("impulse_diff.svg"), &outcome.impulse_pairs)?;
    }
    Ok(outcome)
}

/// Recompute the summary from previously written timeseries files.
pub fn recompute_metrics(dir: &Path, out: &Path, resolved: &Resolved) -> Result<PlanOutcome, HarnessError> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("timeseries_") && n.ends_with(".csv"))
                .unwrap_or(false)
        })
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(HarnessError::MalformedTimeseries {
            path: dir.display().to_string(),
            msg: "no timeseries_*.csv files found".to_string(),
        });
    }

    let mut trials = Vec::new();
    for path in &entries {
        let (log, trial) = csvio::read_timeseries(path)?;
        let config = log.header.config_id;
        let seed = log.header.seed;
        trials.push(trial_metrics(log, config, trial, seed, resolved)?);
    }
    // Plan order: by configuration id order of the resolved plan, then trial.
    let order = |c: TendonConfigId| {
        resolved
            .plan
            .configs
            .iter()
            .position(|x| *x == c)
            .unwrap_or(usize::MAX)
    };
    trials.sort_by_key(|t| (order(t.config), t.trial));

    let mut plan_like = resolved.clone();
    plan_like.plan.configs = {
        let mut seen = Vec::new();
        for t in &trials {
            if !seen.contains(&t.config) {
                seen.push(t.config);
            }
        }
        seen
    };
    let outcome = analyze(trials, &plan_like)?;
    csvio::write_summary(out, &outcome.trials, &outcome.aggregates, &resolved.echo())?;
    Ok(outcome)
}
