//! Timeseries and summary CSV emission and re-ingestion. Every file starts
//! with a `#`-prefixed provenance block carrying the artifact version and the
//! complete resolved configuration.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use webfoot::dynamics::{EnergySample, LogHeader, LogRecord, SimLog};
use webfoot::TendonConfigId;

use crate::runner::{ConfigAggregate, TrialResult};
use crate::HarnessError;

pub const ARTIFACT_VERSION: &str = concat!("webfoot v", env!("CARGO_PKG_VERSION"));

pub const TIMESERIES_COLUMNS: &str = "t,Theta,q0,q1,q2,q3,q4,qd0,qd1,qd2,qd3,qd4,tau_hip,tau_knee,gst_tension_N,thrust_N,fold_rad,marker1_x,marker1_y,marker2_x,marker2_y,marker3_x,marker3_y,servo_power_W";

pub const SUMMARY_COLUMNS: &str =
    "config,trial,F_net_N,W_input_J,eta_mech,TP1_s,TP2_s,TP1_over_T,TP2_over_T";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_provenance(
    w: &mut dyn Write,
    kind: &str,
    echo: &[(String, String)],
    extra: &[(&str, String)],
) -> std::io::Result<()> {
    writeln!(w, "# {ARTIFACT_VERSION} {kind}")?;
    for (k, v) in extra {
        writeln!(w, "# {k} = {v}")?;
    }
    for (k, v) in echo {
        writeln!(w, "# {k} = {v}")?;
    }
    Ok(())
}

pub fn timeseries_filename(config: TendonConfigId, trial: u32) -> String {
    format!("timeseries_{}_{trial}.csv", config.as_str())
}

/// Write one run's timeseries with its provenance header.
pub fn write_timeseries(
    path: &Path,
    log: &SimLog,
    trial: u32,
    echo: &[(String, String)],
) -> Result<(), HarnessError> {
    let mut buf = Vec::with_capacity(log.records.len() * 220);
    let h = &log.header;
    write_provenance(
        &mut buf,
        "timeseries",
        echo,
        &[
            ("run.config", h.config_id.to_string()),
            ("run.trial", trial.to_string()),
            ("run.seed", h.seed.to_string()),
            ("run.t_first_sample_s", h.t_first_sample.to_string()),
            ("run.power_phase", h.power_phase.to_string()),
            ("run.mtp_antagonism_samples", h.mtp_antagonism_samples.to_string()),
        ],
    )?;
    writeln!(buf, "{TIMESERIES_COLUMNS}")?;
    for r in &log.records {
        writeln!(
            buf,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.theta,
            r.q[0],
            r.q[1],
            r.q[2],
            r.q[3],
            r.q[4],
            r.qd[0],
            r.qd[1],
            r.qd[2],
            r.qd[3],
            r.qd[4],
            r.tau_hip,
            r.tau_knee,
            r.gst_tension_n,
            r.thrust_n,
            r.q[4],
            r.markers[0][0],
            r.markers[0][1],
            r.markers[1][0],
            r.markers[1][1],
            r.markers[2][0],
            r.markers[2][1],
            r.servo_power_w
        )?;
    }
    std::fs::write(path, buf)?;
    Ok(())
}

/// Re-ingest a timeseries CSV into a `SimLog` (energy trace not persisted).
pub fn read_timeseries(path: &Path) -> Result<(SimLog, u32), HarnessError> {
    let malformed = |msg: String| HarnessError::MalformedTimeseries {
        path: path.display().to_string(),
        msg,
    };
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut meta: BTreeMap<String, String> = BTreeMap::new();
    let mut records = Vec::new();
    let mut saw_columns = false;

    for line in reader.lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(eq) = rest.find('=') {
                meta.insert(rest[..eq].trim().to_string(), rest[eq + 1..].trim().to_string());
            }
            continue;
        }
        if !saw_columns {
            if line.trim() != TIMESERIES_COLUMNS {
                return Err(malformed(format!("unexpected column header: {line}")));
            }
            saw_columns = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| malformed(format!("bad numeric row: {e}")))?;
        if vals.len() != 24 {
            return Err(malformed(format!("expected 24 columns, got {}", vals.len())));
        }
        records.push(LogRecord {
            t: vals[0],
            theta: vals[1],
            q: [vals[2], vals[3], vals[4], vals[5], vals[6]],
            qd: [vals[7], vals[8], vals[9], vals[10], vals[11]],
            tau_hip: vals[12],
            tau_knee: vals[13],
            gst_tension_n: vals[14],
            thrust_n: vals[15],
            markers: [
                [vals[17], vals[18]],
                [vals[19], vals[20]],
                [vals[21], vals[22]],
            ],
            servo_power_w: vals[23],
        });
    }

    let get = |k: &str| -> Result<String, HarnessError> {
        meta.get(k)
            .cloned()
            .ok_or_else(|| malformed(format!("missing header field {k}")))
    };
    let parse_f = |k: &str| -> Result<f64, HarnessError> {
        get(k)?.parse::<f64>().map_err(|e| malformed(format!("{k}: {e}")))
    };
    let config_id: TendonConfigId = get("run.config")?
        .parse()
        .map_err(|e: webfoot::Error| malformed(e.to_string()))?;
    let trial: u32 = get("run.trial")?
        .parse()
        .map_err(|e| malformed(format!("run.trial: {e}")))?;

    let n = records.len();
    let log = SimLog {
        header: LogHeader {
            config_id,
            f_gait_hz: parse_f("gait.frequency_hz")?,
            d_vir: parse_f("gait.duty_virtual")?,
            t_first_sample: parse_f("run.t_first_sample_s")?,
            log_rate_hz: parse_f("sim.log_rate_hz")?,
            dt_s: parse_f("sim.dt_s")?,
            cycles: parse_f("sim.cycles")? as u32,
            warmup_cycles: parse_f("sim.warmup_cycles")? as u32,
            seed: get("run.seed")?
                .parse()
                .map_err(|e| malformed(format!("run.seed: {e}")))?,
            ic_noise_rad: parse_f("sim.ic_noise_rad")?,
            power_phase: "theta in [0,pi): power (backward sweep); [pi,2pi): recovery",
            mtp_antagonism_samples: parse_f("run.mtp_antagonism_samples")? as u32,
        },
        records,
        energy: vec![EnergySample::default(); n],
    };
    Ok((log, trial))
}

/// Write the summary CSV: one row per (configuration, trial), then `mean` and
/// `ci95` aggregate rows per configuration.
pub fn write_summary(
    path: &Path,
    trials: &[TrialResult],
    aggregates: &[ConfigAggregate],
    echo: &[(String, String)],
) -> Result<(), HarnessError> {
    let mut buf = Vec::new();
    write_provenance(&mut buf, "summary", echo, &[])?;
    writeln!(buf, "{SUMMARY_COLUMNS}")?;
    for agg in aggregates {
        for t in trials.iter().filter(|t| t.config == agg.config) {
            let period = t.period_s;
            writeln!(
                buf,
                "{},{},{},{},{},{},{},{},{}",
                t.config,
                t.trial,
                t.f_net_n,
                t.w_input_j,
                t.eta_mech,
                fmt_opt(t.tp1_s),
                fmt_opt(t.tp2_s),
                fmt_opt(t.tp1_s.map(|v| v / period)),
                fmt_opt(t.tp2_s.map(|v| v / period))
            )?;
        }
        writeln!(
            buf,
            "{},mean,{},{},{},{},{},{},{}",
            agg.config,
            agg.f_net_mean,
            agg.w_input_mean,
            agg.eta_mean,
            fmt_opt(agg.tp1_mean),
            fmt_opt(agg.tp2_mean),
            fmt_opt(agg.tp1_over_t_mean),
            fmt_opt(agg.tp2_over_t_mean)
        )?;
        writeln!(
            buf,
            "{},ci95,{},{},{},{},{},{},{}",
            agg.config,
            agg.f_net_ci,
            agg.w_input_ci,
            agg.eta_ci,
            fmt_opt(agg.tp1_ci),
            fmt_opt(agg.tp2_ci),
            fmt_opt(agg.tp1_over_t_ci),
            fmt_opt(agg.tp2_over_t_ci)
        )?;
    }
    std::fs::write(path, buf)?;
    Ok(())
}
