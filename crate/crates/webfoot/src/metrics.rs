//! Evaluation quantities computed from simulation logs: net thrust, input
//! work, propulsive efficiency, the two phase-transition times, phase-folded
//! mean curves with confidence intervals, and impulse differences.
//!
//! Integrals are exact over the piecewise-linear interpolant of the sampled
//! channels; windows must span an integer number of gait cycles.

use crate::dynamics::{LogRecord, SimLog};
use crate::error::{Error, Result};
use crate::geometry::collinearity_residual;
use nalgebra::Vector2;

const J_PER_NMM: f64 = 1e-3;

/// Detection parameters with their documented defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    /// GST tension threshold for TP1, N.
    pub tp1_threshold_n: f64,
    /// Normalized collinearity residual tolerance for TP2.
    pub tp2_tolerance: f64,
    /// Minimum marker spread gate for TP2, mm.
    pub tp2_spread_mm: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            tp1_threshold_n: 0.05,
            tp2_tolerance: 1e-3,
            tp2_spread_mm: 10.0,
        }
    }
}

/// Per-gait-cycle metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleMetrics {
    /// Cycle-averaged thrust, N.
    pub f_net_n: f64,
    /// Rectified actuator work, J.
    pub w_input_j: f64,
    /// Propulsive efficiency surrogate, N/J.
    pub eta_mech: f64,
    /// Time from cycle start to first GST tension, s; absent without a GST
    /// or when tension never appears.
    pub tp1_s: Option<f64>,
    /// Time from cycle start to the fully open foot, s; absent when the foot
    /// never opens within the cycle.
    pub tp2_s: Option<f64>,
    /// Power-phase duration, s.
    pub power_phase_s: f64,
    /// Cycle impulse, N·s.
    pub impulse_ns: f64,
}

/// A metric window in log time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t_start: f64,
    pub t_end: f64,
}

impl Window {
    /// Window covering `n_cycles` cycles starting at `first_cycle`.
    pub fn cycles(log: &SimLog, first_cycle: u32, n_cycles: u32) -> Window {
        let t0 = log.header.t_first_sample;
        let period = log.period();
        Window {
            t_start: t0 + first_cycle as f64 * period,
            t_end: t0 + (first_cycle + n_cycles) as f64 * period,
        }
    }
}

fn check_cycle_aligned(log: &SimLog, w: &Window) -> Result<()> {
    let period = log.period();
    let span = w.t_end - w.t_start;
    let cycles = span / period;
    if (cycles - cycles.round()).abs() > 1e-6 || cycles.round() < 1.0 {
        return Err(Error::WindowNotCycleAligned {
            t_start: w.t_start,
            t_end: w.t_end,
            period,
        });
    }
    Ok(())
}

/// Integrate the piecewise-linear interpolant of `f(record)` over
/// `[t_a, t_b]`. The end may overrun the last sample by at most one sampling
/// interval (the final cycle has no closing sample); the effective end is
/// returned with the integral.
fn integrate_channel(
    log: &SimLog,
    t_a: f64,
    t_b: f64,
    f: &dyn Fn(&LogRecord) -> f64,
) -> Result<(f64, f64)> {
    let recs = &log.records;
    if recs.is_empty() {
        return Err(Error::EmptyInput { context: "integrate over empty log" });
    }
    let dt = 1.0 / log.header.log_rate_hz;
    let t0 = recs[0].t;
    let t_last = recs[recs.len() - 1].t;
    let t_b_eff = t_b.min(t_last);
    if t_a < t0 - 1e-9 || t_b > t_last + dt + 1e-9 || t_b_eff <= t_a {
        return Err(Error::WindowOutOfRange {
            t_start: t_a,
            t_end: t_b,
            log_start: t0,
            log_end: t_last,
        });
    }

    let value_at = |t: f64| -> f64 {
        let x = (t - t0) / dt;
        let i = (x.floor() as usize).min(recs.len() - 1);
        let j = (i + 1).min(recs.len() - 1);
        let frac = (x - i as f64).clamp(0.0, 1.0);
        let vi = f(&recs[i]);
        let vj = f(&recs[j]);
        vi + (vj - vi) * frac
    };

    let i_first = ((t_a - t0) / dt).ceil() as usize;
    let i_last = ((t_b_eff - t0) / dt).floor() as usize;
    let mut integral = 0.0;
    if i_first > i_last {
        // Both ends inside one sampling interval.
        integral += 0.5 * (value_at(t_a) + value_at(t_b_eff)) * (t_b_eff - t_a);
    } else {
        let t_first = t0 + i_first as f64 * dt;
        let t_last_node = t0 + i_last as f64 * dt;
        integral += 0.5 * (value_at(t_a) + f(&recs[i_first])) * (t_first - t_a);
        for i in i_first..i_last {
            integral += 0.5 * (f(&recs[i]) + f(&recs[i + 1])) * dt;
        }
        integral += 0.5 * (f(&recs[i_last]) + value_at(t_b_eff)) * (t_b_eff - t_last_node);
    }
    Ok((integral, t_b_eff))
}

/// Cycle-averaged thrust over an integer-cycle window, N.
pub fn net_thrust(log: &SimLog, window: &Window) -> Result<f64> {
    check_cycle_aligned(log, window)?;
    let (integral, t_end_eff) =
        integrate_channel(log, window.t_start, window.t_end, &|r| r.thrust_n)?;
    Ok(integral / (t_end_eff - window.t_start))
}

/// Rectified actuator work over an integer-cycle window, J: negative-power
/// intervals contribute nothing (no regeneration credit).
pub fn input_work(log: &SimLog, window: &Window) -> Result<f64> {
    check_cycle_aligned(log, window)?;
    let rectified = |r: &LogRecord| -> f64 {
        (r.tau_hip * r.qd[0]).max(0.0) + (r.tau_knee * r.qd[1]).max(0.0)
    };
    let (integral, _) = integrate_channel(log, window.t_start, window.t_end, &rectified)?;
    Ok(integral * J_PER_NMM)
}

/// Propulsive efficiency surrogate `eta_mech = F_net / W_input`, N/J.
pub fn efficiency(f_net_n: f64, w_input_j: f64) -> Result<f64> {
    if !(w_input_j > 0.0) {
        return Err(Error::ZeroInputWork { w_input: w_input_j });
    }
    Ok(f_net_n / w_input_j)
}

fn cycle_records(log: &SimLog, cycle: u32) -> Result<(usize, usize, f64)> {
    let period = log.period();
    let t0 = log.header.t_first_sample;
    let start = t0 + cycle as f64 * period;
    let end = start + period;
    let dt = 1.0 / log.header.log_rate_hz;
    let i0 = ((start - t0) / dt - 1e-9).ceil() as usize;
    let i1 = (((end - t0) / dt) - 1e-9).floor() as usize;
    if i0 >= log.records.len() {
        return Err(Error::WindowOutOfRange {
            t_start: start,
            t_end: end,
            log_start: t0,
            log_end: log.records.last().map(|r| r.t).unwrap_or(t0),
        });
    }
    Ok((i0, i1.min(log.records.len() - 1), start))
}

/// TP1: first upward crossing of the GST tension threshold within a cycle,
/// seconds from the cycle start (the power-phase onset). `None` when tension
/// never appears. Calling this for a configuration without a GST is an error.
pub fn detect_tp1(log: &SimLog, cycle: u32, threshold_n: f64) -> Result<Option<f64>> {
    if !log.header.config_id.has_gst() {
        return Err(Error::MissingGstChannel {
            config: log.header.config_id.to_string(),
        });
    }
    let (i0, i1, start) = cycle_records(log, cycle)?;
    for i in i0..=i1 {
        let above = log.records[i].gst_tension_n >= threshold_n;
        let prev_below = if i == 0 {
            true
        } else {
            log.records[i - 1].gst_tension_n < threshold_n
        };
        if above && prev_below {
            return Ok(Some(log.records[i].t - start));
        }
    }
    Ok(None)
}

fn marker_points(r: &LogRecord) -> [Vector2<f64>; 3] {
    [
        Vector2::new(r.markers[0][0], r.markers[0][1]),
        Vector2::new(r.markers[1][0], r.markers[1][1]),
        Vector2::new(r.markers[2][0], r.markers[2][1]),
    ]
}

/// TP2: first time within a cycle at which the three foot markers are
/// collinear (normalized cross-product residual below tolerance), seconds
/// from the cycle start. A minimum marker-spread gate rejects degenerate
/// marker clusters. `None` when the foot never fully opens in the cycle.
pub fn detect_tp2(
    log: &SimLog,
    cycle: u32,
    tolerance: f64,
    spread_gate_mm: f64,
) -> Result<Option<f64>> {
    let (i0, i1, start) = cycle_records(log, cycle)?;
    for i in i0..=i1 {
        let p = marker_points(&log.records[i]);
        let spread = (p[1] - p[0])
            .norm()
            .min((p[2] - p[0]).norm())
            .min((p[2] - p[1]).norm());
        if spread < spread_gate_mm {
            continue;
        }
        if collinearity_residual(&p) < tolerance {
            return Ok(Some(log.records[i].t - start));
        }
    }
    Ok(None)
}

/// All per-cycle metrics of one cycle.
pub fn cycle_metrics(log: &SimLog, cycle: u32, params: &MetricParams) -> Result<CycleMetrics> {
    let w = Window::cycles(log, cycle, 1);
    let f_net = net_thrust(log, &w)?;
    let w_in = input_work(log, &w)?;
    let eta = efficiency(f_net, w_in)?;
    let tp1 = if log.header.config_id.has_gst() {
        detect_tp1(log, cycle, params.tp1_threshold_n)?
    } else {
        None
    };
    let tp2 = detect_tp2(log, cycle, params.tp2_tolerance, params.tp2_spread_mm)?;
    let period = log.period();
    Ok(CycleMetrics {
        f_net_n: f_net,
        w_input_j: w_in,
        eta_mech: eta,
        tp1_s: tp1,
        tp2_s: tp2,
        power_phase_s: log.header.d_vir * period,
        impulse_ns: f_net * period,
    })
}

/// Loggable channels for phase-folded averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    Thrust,
    GstTension,
    ServoPower,
    FoldAngle,
}

impl Signal {
    fn get(&self, r: &LogRecord) -> f64 {
        match self {
            Signal::Thrust => r.thrust_n,
            Signal::GstTension => r.gst_tension_n,
            Signal::ServoPower => r.servo_power_w,
            Signal::FoldAngle => r.q[4],
        }
    }
}

/// Phase-gridded mean of a signal over many cycles with 95% confidence
/// half-widths and per-bin sample counts.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCurve {
    /// Gait period the phase grid covers, s.
    pub period_s: f64,
    /// Per-bin mean (after the moving-average window).
    pub mean: Vec<f64>,
    /// Per-bin 95% confidence half-width.
    pub ci95: Vec<f64>,
    /// Per-bin raw sample count.
    pub count: Vec<usize>,
}

impl MeanCurve {
    pub fn bins(&self) -> usize {
        self.mean.len()
    }
}

/// Phase-fold all cycles of all logs onto `bins`, smooth with a centered
/// circular moving average of `window_width` bins, and attach 95% CIs.
/// Window width 1 reproduces the raw bin means exactly.
pub fn mean_curve(
    logs: &[&SimLog],
    signal: Signal,
    bins: usize,
    window_width: usize,
) -> Result<MeanCurve> {
    if logs.is_empty() || logs.iter().all(|l| l.records.is_empty()) {
        return Err(Error::EmptyInput { context: "mean_curve over no samples" });
    }
    if bins == 0 {
        return Err(Error::InvalidConfig { what: "mean_curve needs at least one bin".into() });
    }
    let period = logs[0].period();
    for l in logs {
        if (l.period() - period).abs() > 1e-9 {
            return Err(Error::GridMismatch {
                left: bins,
                right: bins,
                left_period: period,
                right_period: l.period(),
            });
        }
    }

    let mut sum = vec![0.0f64; bins];
    let mut sum_sq = vec![0.0f64; bins];
    let mut count = vec![0usize; bins];
    for log in logs {
        let t0 = log.header.t_first_sample;
        for r in &log.records {
            let phase = ((r.t - t0) / period).rem_euclid(1.0);
            let b = ((phase * bins as f64) as usize).min(bins - 1);
            let v = signal.get(r);
            sum[b] += v;
            sum_sq[b] += v * v;
            count[b] += 1;
        }
    }
    let mut mean = vec![0.0f64; bins];
    let mut ci = vec![0.0f64; bins];
    for b in 0..bins {
        if count[b] == 0 {
            return Err(Error::EmptyInput { context: "empty phase bin; lower the grid resolution" });
        }
        let n = count[b] as f64;
        mean[b] = sum[b] / n;
        if count[b] > 1 {
            let var = ((sum_sq[b] - sum[b] * sum[b] / n) / (n - 1.0)).max(0.0);
            ci[b] = 1.96 * (var / n).sqrt();
        }
    }

    let w = window_width.max(1);
    let smooth = |v: &[f64]| -> Vec<f64> {
        if w == 1 {
            return v.to_vec();
        }
        let half = (w / 2) as isize;
        (0..bins as isize)
            .map(|i| {
                let mut acc = 0.0;
                let mut n = 0usize;
                for d in -half..=half {
                    let j = (i + d).rem_euclid(bins as isize) as usize;
                    acc += v[j];
                    n += 1;
                }
                acc / n as f64
            })
            .collect()
    };

    Ok(MeanCurve {
        period_s: period,
        mean: smooth(&mean),
        ci95: smooth(&ci),
        count,
    })
}

/// Running impulse over phase: a curve whose value at phase `p` is
/// the integral from cycle start to `p` of a thrust difference.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCurve {
    pub period_s: f64,
    pub values: Vec<f64>,
}

/// Running integral over phase of the mean-thrust difference `a - b`, N·s.
pub fn impulse_difference(a: &MeanCurve, b: &MeanCurve) -> Result<PhaseCurve> {
    if a.bins() != b.bins() || (a.period_s - b.period_s).abs() > 1e-9 {
        return Err(Error::GridMismatch {
            left: a.bins(),
            right: b.bins(),
            left_period: a.period_s,
            right_period: b.period_s,
        });
    }
    let dt = a.period_s / a.bins() as f64;
    let mut acc = 0.0;
    let values = (0..a.bins())
        .map(|i| {
            acc += (a.mean[i] - b.mean[i]) * dt;
            acc
        })
        .collect();
    Ok(PhaseCurve {
        period_s: a.period_s,
        values,
    })
}
