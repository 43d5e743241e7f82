//! Key-value experiment configuration: parsing, defaults, range checks and
//! the resolved-value echo written into every output header.
//!
//! Format: one `section.key = value` per line, `#` starts a comment, blank
//! lines are ignored. Unknown keys are rejected. An empty file resolves to
//! the full default plan: all six tendon configurations, 5 trials of 20
//! cycles each at 1.5 Hz.

use std::collections::BTreeMap;

use webfoot::geometry::{AnkleCoupling, FourBarCoupling};
use webfoot::tendon::ALL_CONFIGS;
use webfoot::{MetricParams, SimConfig, TendonConfigId};

use crate::HarnessError;

/// Batch plan: which configurations, how many trials, what to emit.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub configs: Vec<TendonConfigId>,
    pub trials: u32,
    pub seed_base: u64,
    pub emit_timeseries: bool,
    pub emit_summary: bool,
    pub emit_plots: bool,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            configs: ALL_CONFIGS.to_vec(),
            trials: 5,
            seed_base: 1,
            emit_timeseries: true,
            emit_summary: true,
            emit_plots: true,
        }
    }
}

/// Fully resolved configuration: the plan, the per-run simulation template,
/// metric parameters and the provenance echo.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub plan: ExperimentPlan,
    /// Template run configuration; the runner sets `tendon_config` and `seed`
    /// per run.
    pub sim: SimConfig,
    pub metrics: MetricParams,
    /// Phase grid resolution for mean curves.
    pub grid_bins: usize,
    /// Moving-average window width in bins.
    pub window_bins: usize,
}

/// Raw scalar settings prior to cross-field resolution.
#[derive(Debug, Clone)]
struct Raw {
    plan: ExperimentPlan,
    sim: SimConfig,
    metrics: MetricParams,
    grid_bins: usize,
    window_bins: usize,
    masses_kg: [f64; 6],
    fold_max_rad: f64,
    hinge_fraction: f64,
    central_cp_mm: f64,
    knee_ref_rad: f64,
    ankle_ref_rad: f64,
    ankle_mode: String,
    drive_damping: f64,
    mtp_damping: f64,
    ip_damping: f64,
    fold_damping: f64,
    mtp_min: f64,
    mtp_max: f64,
    ip_min: f64,
    ip_max: f64,
    gravity: bool,
}

impl Default for Raw {
    fn default() -> Self {
        let sim = SimConfig::default();
        Raw {
            plan: ExperimentPlan::default(),
            metrics: MetricParams::default(),
            grid_bins: 200,
            window_bins: 5,
            masses_kg: [0.012, 0.018, 0.008, 0.003, 0.004, 0.0015],
            fold_max_rad: sim.geom.foot.fold_max_rad,
            hinge_fraction: sim.geom.foot.hinge_fraction,
            central_cp_mm: sim.geom.foot.central_cp_mm,
            knee_ref_rad: sim.geom.reference.knee_rad,
            ankle_ref_rad: sim.geom.reference.ankle_rad,
            ankle_mode: "linear".to_string(),
            drive_damping: sim.body.joint_damping[0],
            mtp_damping: sim.body.joint_damping[2],
            ip_damping: sim.body.joint_damping[3],
            fold_damping: sim.body.joint_damping[4],
            mtp_min: sim.body.stop_lower[2],
            mtp_max: sim.body.stop_upper[2],
            ip_min: sim.body.stop_lower[3],
            ip_max: sim.body.stop_upper[3],
            gravity: sim.body.gravity_on,
            sim,
        }
    }
}

fn parse_err(line: usize, col: usize, msg: String) -> HarnessError {
    HarnessError::Parse { line, col, msg }
}

fn range_err(key: &str, msg: String) -> HarnessError {
    HarnessError::Range {
        key: key.to_string(),
        msg,
    }
}

/// Parse a configuration text into a fully resolved plan. Every default is
/// materialized; unknown keys, malformed values and range violations are
/// rejected.
pub fn parse_config(text: &str) -> Result<Resolved, HarnessError> {
    let mut raw = Raw::default();
    let mut seen = BTreeMap::new();

    for (idx, line_raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match line_raw.find('#') {
            Some(p) => &line_raw[..p],
            None => line_raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let eq = line.find('=').ok_or_else(|| {
            parse_err(line_no, line_raw.len(), "expected `key = value`".to_string())
        })?;
        let key = line[..eq].trim().to_string();
        let value_col = eq + 2;
        let value = line[eq + 1..].trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(parse_err(line_no, value_col, "empty key or value".to_string()));
        }
        if let Some(first) = seen.insert(key.clone(), line_no) {
            return Err(parse_err(
                line_no,
                1,
                format!("key {key} already set on line {first}"),
            ));
        }
        apply_key(&mut raw, &key, &value)
            .map_err(|e| match e {
                HarnessError::Range { key, msg } => HarnessError::Range { key, msg },
                HarnessError::Parse { msg, .. } => parse_err(line_no, value_col, msg),
                other => other,
            })?;
    }

    resolve(raw)
}

fn value_parse<T: std::str::FromStr>(value: &str, what: &str) -> Result<T, HarnessError> {
    value.parse::<T>().map_err(|_| HarnessError::Parse {
        line: 0,
        col: 0,
        msg: format!("cannot parse {value:?} as {what}"),
    })
}

fn apply_key(raw: &mut Raw, key: &str, value: &str) -> Result<(), HarnessError> {
    let f = || value_parse::<f64>(value, "a number");
    let b = || value_parse::<bool>(value, "a boolean (true/false)");
    match key {
        // Plan
        "plan.configs" => {
            let mut configs = Vec::new();
            for part in value.split(',') {
                configs.push(part.trim().parse::<TendonConfigId>().map_err(|e| {
                    HarnessError::Parse { line: 0, col: 0, msg: e.to_string() }
                })?);
            }
            if configs.is_empty() {
                return Err(range_err(key, "at least one configuration required".into()));
            }
            raw.plan.configs = configs;
        }
        "tendon.config" => {
            let id = value.parse::<TendonConfigId>().map_err(|e| HarnessError::Parse {
                line: 0,
                col: 0,
                msg: e.to_string(),
            })?;
            raw.plan.configs = vec![id];
        }
        "plan.trials" => {
            raw.plan.trials = value_parse(value, "an integer")?;
            if raw.plan.trials < 1 {
                return Err(range_err(key, "trials must be >= 1".into()));
            }
        }
        "plan.seed_base" => raw.plan.seed_base = value_parse(value, "an integer")?,
        "plan.emit_timeseries" => raw.plan.emit_timeseries = b()?,
        "plan.emit_summary" => raw.plan.emit_summary = b()?,
        "plan.emit_plots" => raw.plan.emit_plots = b()?,

        // Gait
        "gait.frequency_hz" => raw.sim.cpg.f_gait = f()?,
        "gait.amp_hip_rad" => raw.sim.cpg.a_hip = f()?,
        "gait.amp_knee_rad" => raw.sim.cpg.a_knee = f()?,
        "gait.offset_hip_rad" => raw.sim.cpg.o_hip = f()?,
        "gait.offset_knee_rad" => raw.sim.cpg.o_knee = f()?,
        "gait.phase_diff_rad" => raw.sim.cpg.phase_diff = f()?,
        "gait.duty_virtual" => raw.sim.cpg.d_vir = f()?,

        // Servo
        "servo.kp_nmm_per_rad" => raw.sim.servo.kp = f()?,
        "servo.kd_nmm_s_per_rad" => raw.sim.servo.kd = f()?,
        "servo.saturation_nmm" => raw.sim.servo.saturation = f()?,

        // Hydro
        "hydro.rho_kg_m3" => raw.sim.hydro.rho = f()?,
        "hydro.cd" => raw.sim.hydro.c_d = f()?,
        "hydro.cp_fraction" => raw.sim.hydro.cp_fraction = f()?,
        "hydro.strips" => {
            raw.sim.hydro.strips = value_parse(value, "an integer")?;
        }
        "hydro.femur_drag" => raw.sim.hydro.link_drag[0].enabled = b()?,
        "hydro.femur_area_mm2" => raw.sim.hydro.link_drag[0].area_mm2 = f()?,
        "hydro.shank_drag" => raw.sim.hydro.link_drag[1].enabled = b()?,
        "hydro.shank_area_mm2" => raw.sim.hydro.link_drag[1].area_mm2 = f()?,
        "hydro.tarsus_drag" => raw.sim.hydro.link_drag[2].enabled = b()?,
        "hydro.tarsus_area_mm2" => raw.sim.hydro.link_drag[2].area_mm2 = f()?,
        "hydro.toe_drag" => raw.sim.hydro.link_drag[3].enabled = b()?,
        "hydro.toe_area_mm2" => raw.sim.hydro.link_drag[3].area_mm2 = f()?,

        // Sim
        "sim.dt_s" => raw.sim.dt_s = f()?,
        "sim.cycles" => {
            raw.sim.cycles = value_parse(value, "an integer")?;
        }
        "sim.warmup_cycles" => {
            raw.sim.warmup_cycles = value_parse(value, "an integer")?;
        }
        "sim.log_rate_hz" => raw.sim.log_rate_hz = f()?,
        "sim.ic_noise_rad" => raw.sim.ic_noise_rad = f()?,
        "sim.gravity" => raw.gravity = b()?,

        // Geometry
        "geometry.l1_mm" => raw.sim.geom.l1 = f()?,
        "geometry.l2_mm" => raw.sim.geom.l2 = f()?,
        "geometry.l3_mm" => raw.sim.geom.l3 = f()?,
        "geometry.l4_mm" => raw.sim.geom.l4 = f()?,
        "geometry.l_foot_mm" => raw.sim.geom.l_foot = f()?,
        "geometry.l_rod_mm" => raw.sim.geom.l_rod = f()?,
        "geometry.l_c_mm" => raw.sim.geom.l_c = f()?,
        "geometry.l_r_mm" => raw.sim.geom.l_r = f()?,
        "geometry.r_g1_mm" => raw.sim.geom.r_g1 = f()?,
        "geometry.r_g2_p_mm" => raw.sim.geom.r_g2_p = f()?,
        "geometry.r_g2_d_mm" => raw.sim.geom.r_g2_d = f()?,
        "geometry.r_g3_mm" => raw.sim.geom.r_g3 = f()?,
        "geometry.r_g4_mm" => raw.sim.geom.r_g4 = f()?,
        "geometry.r_ext0_mm" => raw.sim.geom.r_ext0 = f()?,
        "geometry.r_e2_1_mm" => raw.sim.geom.r_e2_1 = f()?,
        "geometry.r_e2_2_mm" => raw.sim.geom.r_e2_2 = f()?,
        "geometry.r_g2_p_half_mm" => raw.sim.geom.r_g2_p_half = f()?,
        "geometry.fold_max_rad" => raw.fold_max_rad = f()?,
        "geometry.hinge_fraction" => raw.hinge_fraction = f()?,
        "geometry.central_cp_mm" => raw.central_cp_mm = f()?,
        "geometry.knee_ref_rad" => raw.knee_ref_rad = f()?,
        "geometry.ankle_ref_rad" => raw.ankle_ref_rad = f()?,
        "geometry.ankle_mode" => {
            if value != "linear" && value != "four-bar" {
                return Err(range_err(key, format!("{value:?} is not linear or four-bar")));
            }
            raw.ankle_mode = value.to_string();
        }

        // Body
        "body.mass_scale" => raw.sim.body.mass_scale = f()?,
        "body.mass_femur_kg" => raw.masses_kg[0] = f()?,
        "body.mass_shank_kg" => raw.masses_kg[1] = f()?,
        "body.mass_tarsus_kg" => raw.masses_kg[2] = f()?,
        "body.mass_toe_kg" => raw.masses_kg[3] = f()?,
        "body.mass_foot_central_kg" => raw.masses_kg[4] = f()?,
        "body.mass_foot_side_kg" => raw.masses_kg[5] = f()?,
        "body.drive_damping_nmm_s" => raw.drive_damping = f()?,
        "body.mtp_damping_nmm_s" => raw.mtp_damping = f()?,
        "body.ip_damping_nmm_s" => raw.ip_damping = f()?,
        "body.fold_damping_nmm_s" => raw.fold_damping = f()?,
        "body.stop_k_nmm_per_rad" => raw.sim.body.stop_k = f()?,
        "body.stop_c_nmm_s_per_rad" => raw.sim.body.stop_c = f()?,
        "body.mtp_min_rad" => raw.mtp_min = f()?,
        "body.mtp_max_rad" => raw.mtp_max = f()?,
        "body.ip_min_rad" => raw.ip_min = f()?,
        "body.ip_max_rad" => raw.ip_max = f()?,

        // Tendons
        "tendon.gst_k_n_mm" => raw.sim.tendon.gst_k = f()?,
        "tendon.gst_c_ns_mm" => raw.sim.tendon.gst_c = f()?,
        "tendon.gst_rest_mm" => raw.sim.tendon.gst_rest_mm = f()?,
        "tendon.ht_rest_mm" => raw.sim.tendon.ht_rest_mm = f()?,
        "tendon.ext_k_n_mm" => raw.sim.tendon.ext_k = f()?,
        "tendon.e2_k_n_mm" => raw.sim.tendon.e2_k = f()?,
        "tendon.e3_k_n_mm" => raw.sim.tendon.e3_k = f()?,
        "tendon.ext_c_ns_mm" => raw.sim.tendon.ext_c = f()?,
        "tendon.e1_rest_mm" => raw.sim.tendon.e1_rest_mm = f()?,
        "tendon.e2_rest_mm" => raw.sim.tendon.e2_rest_mm = f()?,
        "tendon.e3_rest_mm" => raw.sim.tendon.e3_rest_mm = f()?,
        "tendon.rope_k_factor" => raw.sim.tendon.rope_k_factor = f()?,
        "tendon.rope_engage_rad" => raw.sim.tendon.rope_engage_rad = f()?,
        "tendon.ls_k_nmm_rad" => raw.sim.tendon.fold_spring_k = f()?,
        "tendon.ls_c_nmm_s_rad" => raw.sim.tendon.fold_spring_c = f()?,

        // Metrics
        "metrics.tp1_threshold_n" => {
            raw.metrics.tp1_threshold_n = f()?;
            if !(raw.metrics.tp1_threshold_n > 0.0) {
                return Err(range_err(key, "TP1 threshold must be > 0".into()));
            }
        }
        "metrics.tp2_tolerance" => {
            raw.metrics.tp2_tolerance = f()?;
            if !(raw.metrics.tp2_tolerance > 0.0) {
                return Err(range_err(key, "TP2 tolerance must be > 0".into()));
            }
        }
        "metrics.tp2_spread_mm" => raw.metrics.tp2_spread_mm = f()?,
        "metrics.grid_bins" => {
            raw.grid_bins = value_parse(value, "an integer")?;
            if raw.grid_bins < 2 {
                return Err(range_err(key, "grid bins must be >= 2".into()));
            }
        }
        "metrics.window_bins" => {
            raw.window_bins = value_parse(value, "an integer")?;
            if raw.window_bins < 1 {
                return Err(range_err(key, "window width must be >= 1".into()));
            }
        }

        _ => {
            return Err(HarnessError::UnknownKey { key: key.to_string() });
        }
    }
    Ok(())
}

fn resolve(raw: Raw) -> Result<Resolved, HarnessError> {
    let mut sim = raw.sim;
    sim.body.gravity_on = raw.gravity;
    sim.geom.foot.side_mm = sim.geom.l_foot;
    sim.geom.foot.fold_max_rad = raw.fold_max_rad;
    sim.geom.foot.hinge_fraction = raw.hinge_fraction;
    sim.geom.foot.central_cp_mm = raw.central_cp_mm;
    sim.geom.reference.knee_rad = raw.knee_ref_rad;
    sim.geom.reference.ankle_rad = raw.ankle_ref_rad;
    sim.geom.ankle_coupling = match raw.ankle_mode.as_str() {
        "four-bar" => AnkleCoupling::FourBar(
            FourBarCoupling::from_geometry(&sim.geom).map_err(|e| HarnessError::Range {
                key: "geometry.ankle_mode".to_string(),
                msg: format!("four-bar mounting failed: {e}"),
            })?,
        ),
        _ => AnkleCoupling::Linear,
    };

    // Link bodies follow the resolved masses and lengths.
    let lens = [
        sim.geom.l1,
        sim.geom.l2,
        sim.geom.l3,
        sim.geom.l4,
        sim.geom.foot.hinge_mm(),
        sim.geom.foot.side_blade_mm(),
    ];
    for i in 0..6 {
        if !(raw.masses_kg[i] > 0.0) {
            return Err(HarnessError::Range {
                key: "body.mass".to_string(),
                msg: format!("link {i} mass {} must be > 0", raw.masses_kg[i]),
            });
        }
        sim.body.links[i] = webfoot::dynamics::LinkBody {
            mass_kg: raw.masses_kg[i],
            com_fraction: 0.5,
            inertia_kgmm2: raw.masses_kg[i] * lens[i] * lens[i] / 12.0,
        };
    }
    sim.body.joint_damping = [
        raw.drive_damping,
        raw.drive_damping,
        raw.mtp_damping,
        raw.ip_damping,
        raw.fold_damping,
    ];
    sim.body.stop_lower[2] = raw.mtp_min;
    sim.body.stop_upper[2] = raw.mtp_max;
    sim.body.stop_lower[3] = raw.ip_min;
    sim.body.stop_upper[3] = raw.ip_max;
    sim.body.stop_lower[4] = 0.0;
    sim.body.stop_upper[4] = raw.fold_max_rad;

    sim.validate().map_err(|e| HarnessError::Range {
        key: "config".to_string(),
        msg: e.to_string(),
    })?;

    if raw.metrics.tp2_spread_mm < 0.0 {
        return Err(range_err("metrics.tp2_spread_mm", "must be >= 0".into()));
    }

    Ok(Resolved {
        plan: raw.plan,
        sim,
        metrics: raw.metrics,
        grid_bins: raw.grid_bins,
        window_bins: raw.window_bins,
    })
}

impl Resolved {
    /// Every resolved key-value pair, in canonical order, for output headers.
    pub fn echo(&self) -> Vec<(String, String)> {
        let p = &self.plan;
        let s = &self.sim;
        let m = &self.metrics;
        let configs = p
            .configs
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let ankle_mode = match s.geom.ankle_coupling {
            AnkleCoupling::Linear => "linear",
            AnkleCoupling::FourBar(_) => "four-bar",
        };
        let mut out: Vec<(String, String)> = Vec::new();
        let mut kv = |k: &str, v: String| out.push((k.to_string(), v));
        kv("plan.configs", configs);
        kv("plan.trials", p.trials.to_string());
        kv("plan.seed_base", p.seed_base.to_string());
        kv("plan.emit_timeseries", p.emit_timeseries.to_string());
        kv("plan.emit_summary", p.emit_summary.to_string());
        kv("plan.emit_plots", p.emit_plots.to_string());
        kv("gait.frequency_hz", s.cpg.f_gait.to_string());
        kv("gait.amp_hip_rad", s.cpg.a_hip.to_string());
        kv("gait.amp_knee_rad", s.cpg.a_knee.to_string());
        kv("gait.offset_hip_rad", s.cpg.o_hip.to_string());
        kv("gait.offset_knee_rad", s.cpg.o_knee.to_string());
        kv("gait.phase_diff_rad", s.cpg.phase_diff.to_string());
        kv("gait.duty_virtual", s.cpg.d_vir.to_string());
        kv("servo.kp_nmm_per_rad", s.servo.kp.to_string());
        kv("servo.kd_nmm_s_per_rad", s.servo.kd.to_string());
        kv("servo.saturation_nmm", s.servo.saturation.to_string());
        kv("hydro.rho_kg_m3", s.hydro.rho.to_string());
        kv("hydro.cd", s.hydro.c_d.to_string());
        kv("hydro.cp_fraction", s.hydro.cp_fraction.to_string());
        kv("hydro.strips", s.hydro.strips.to_string());
        kv("hydro.femur_drag", s.hydro.link_drag[0].enabled.to_string());
        kv("hydro.femur_area_mm2", s.hydro.link_drag[0].area_mm2.to_string());
        kv("hydro.shank_drag", s.hydro.link_drag[1].enabled.to_string());
        kv("hydro.shank_area_mm2", s.hydro.link_drag[1].area_mm2.to_string());
        kv("hydro.tarsus_drag", s.hydro.link_drag[2].enabled.to_string());
        kv("hydro.tarsus_area_mm2", s.hydro.link_drag[2].area_mm2.to_string());
        kv("hydro.toe_drag", s.hydro.link_drag[3].enabled.to_string());
        kv("hydro.toe_area_mm2", s.hydro.link_drag[3].area_mm2.to_string());
        kv("sim.dt_s", s.dt_s.to_string());
        kv("sim.cycles", s.cycles.to_string());
        kv("sim.warmup_cycles", s.warmup_cycles.to_string());
        kv("sim.log_rate_hz", s.log_rate_hz.to_string());
        kv("sim.ic_noise_rad", s.ic_noise_rad.to_string());
        kv("sim.gravity", s.body.gravity_on.to_string());
        kv("geometry.l1_mm", s.geom.l1.to_string());
        kv("geometry.l2_mm", s.geom.l2.to_string());
        kv("geometry.l3_mm", s.geom.l3.to_string());
        kv("geometry.l4_mm", s.geom.l4.to_string());
        kv("geometry.l_foot_mm", s.geom.l_foot.to_string());
        kv("geometry.l_rod_mm", s.geom.l_rod.to_string());
        kv("geometry.l_c_mm", s.geom.l_c.to_string());
        kv("geometry.l_r_mm", s.geom.l_r.to_string());
        kv("geometry.r_g1_mm", s.geom.r_g1.to_string());
        kv("geometry.r_g2_p_mm", s.geom.r_g2_p.to_string());
        kv("geometry.r_g2_d_mm", s.geom.r_g2_d.to_string());
        kv("geometry.r_g3_mm", s.geom.r_g3.to_string());
        kv("geometry.r_g4_mm", s.geom.r_g4.to_string());
        kv("geometry.r_ext0_mm", s.geom.r_ext0.to_string());
        kv("geometry.r_e2_1_mm", s.geom.r_e2_1.to_string());
        kv("geometry.r_e2_2_mm", s.geom.r_e2_2.to_string());
        kv("geometry.r_g2_p_half_mm", s.geom.r_g2_p_half.to_string());
        kv("geometry.fold_max_rad", s.geom.foot.fold_max_rad.to_string());
        kv("geometry.hinge_fraction", s.geom.foot.hinge_fraction.to_string());
        kv("geometry.central_cp_mm", s.geom.foot.central_cp_mm.to_string());
        kv("geometry.knee_ref_rad", s.geom.reference.knee_rad.to_string());
        kv("geometry.ankle_ref_rad", s.geom.reference.ankle_rad.to_string());
        kv("geometry.ankle_mode", ankle_mode.to_string());
        kv("body.mass_scale", s.body.mass_scale.to_string());
        kv("body.mass_femur_kg", s.body.links[0].mass_kg.to_string());
        kv("body.mass_shank_kg", s.body.links[1].mass_kg.to_string());
        kv("body.mass_tarsus_kg", s.body.links[2].mass_kg.to_string());
        kv("body.mass_toe_kg", s.body.links[3].mass_kg.to_string());
        kv("body.mass_foot_central_kg", s.body.links[4].mass_kg.to_string());
        kv("body.mass_foot_side_kg", s.body.links[5].mass_kg.to_string());
        kv("body.drive_damping_nmm_s", s.body.joint_damping[0].to_string());
        kv("body.mtp_damping_nmm_s", s.body.joint_damping[2].to_string());
        kv("body.ip_damping_nmm_s", s.body.joint_damping[3].to_string());
        kv("body.fold_damping_nmm_s", s.body.joint_damping[4].to_string());
        kv("body.stop_k_nmm_per_rad", s.body.stop_k.to_string());
        kv("body.stop_c_nmm_s_per_rad", s.body.stop_c.to_string());
        kv("body.mtp_min_rad", s.body.stop_lower[2].to_string());
        kv("body.mtp_max_rad", s.body.stop_upper[2].to_string());
        kv("body.ip_min_rad", s.body.stop_lower[3].to_string());
        kv("body.ip_max_rad", s.body.stop_upper[3].to_string());
        kv("tendon.gst_k_n_mm", s.tendon.gst_k.to_string());
        kv("tendon.gst_c_ns_mm", s.tendon.gst_c.to_string());
        kv("tendon.gst_rest_mm", s.tendon.gst_rest_mm.to_string());
        kv("tendon.ht_rest_mm", s.tendon.ht_rest_mm.to_string());
        kv("tendon.ext_k_n_mm", s.tendon.ext_k.to_string());
        kv("tendon.e2_k_n_mm", s.tendon.e2_k.to_string());
        kv("tendon.e3_k_n_mm", s.tendon.e3_k.to_string());
        kv("tendon.ext_c_ns_mm", s.tendon.ext_c.to_string());
        kv("tendon.e1_rest_mm", s.tendon.e1_rest_mm.to_string());
        kv("tendon.e2_rest_mm", s.tendon.e2_rest_mm.to_string());
        kv("tendon.e3_rest_mm", s.tendon.e3_rest_mm.to_string());
        kv("tendon.rope_k_factor", s.tendon.rope_k_factor.to_string());
        kv("tendon.rope_engage_rad", s.tendon.rope_engage_rad.to_string());
        kv("tendon.ls_k_nmm_rad", s.tendon.fold_spring_k.to_string());
        kv("tendon.ls_c_nmm_s_rad", s.tendon.fold_spring_c.to_string());
        kv("metrics.tp1_threshold_n", m.tp1_threshold_n.to_string());
        kv("metrics.tp2_tolerance", m.tp2_tolerance.to_string());
        kv("metrics.tp2_spread_mm", m.tp2_spread_mm.to_string());
        kv("metrics.grid_bins", self.grid_bins.to_string());
        kv("metrics.window_bins", self.window_bins.to_string());
        out
    }
}
