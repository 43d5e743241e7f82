//! Articulated dynamics of the planar chain: mass matrix assembly, penalty
//! hard stops, the semi-implicit fixed-step integrator, and the simulation
//! driver producing time-ordered logs.
//!
//! Internal unit system: lengths mm, masses kg, torques N·mm, energies N·mm
//! (millijoule). A joint-space inertia of 1 kg·mm^2 equals 1e-3 N·mm·s^2, so
//! the assembled mass matrix is scaled once by [`KGMM2_PER_NMM_S2`].

use nalgebra::{Cholesky, SMatrix, Vector2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cpg::{joint_targets, servo_torque, theta_at, CpgParams, ServoGains};
use crate::error::{Error, Result};
use crate::geometry::{
    forward_kinematics, link_dir, link_normal, Frames, LegGeometry, LegState, Link, QVec, LINKS,
    NQ,
};
use crate::hydro::{leg_drag, HydroParams};
use crate::tendon::{build_network_with, TendonConfigId, TendonNetwork, TendonParams};

pub const KGMM2_PER_NMM_S2: f64 = 1000.0;
const GRAVITY_M_S2: f64 = 9.81;

pub type MassMatrix = SMatrix<f64, NQ, NQ>;

/// Inertial properties of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBody {
    /// Mass, kg.
    pub mass_kg: f64,
    /// Centroid position as a fraction of the link length from the proximal
    /// joint.
    pub com_fraction: f64,
    /// Rotational inertia about the centroid, kg·mm^2.
    pub inertia_kgmm2: f64,
}

impl LinkBody {
    fn rod(mass_kg: f64, len_mm: f64) -> Self {
        LinkBody {
            mass_kg,
            com_fraction: 0.5,
            inertia_kgmm2: mass_kg * len_mm * len_mm / 12.0,
        }
    }
}

/// Per-link inertia, joint damping, hard-stop bounds and penalty parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyParams {
    /// Link bodies in [`LINKS`] order.
    pub links: [LinkBody; 6],
    /// Uniform scale applied to all masses and inertias.
    pub mass_scale: f64,
    /// Viscous damping per coordinate, N·mm·s/rad. The actuated joints are
    /// damped by the servo derivative gain instead.
    pub joint_damping: [f64; NQ],
    /// Hard-stop bounds per coordinate, rad.
    pub stop_lower: [f64; NQ],
    pub stop_upper: [f64; NQ],
    /// Stop penalty stiffness, N·mm/rad.
    pub stop_k: f64,
    /// Stop penalty damping, N·mm·s/rad.
    pub stop_c: f64,
    /// Gravity plus buoyancy toggle; the printed leg is near neutrally
    /// buoyant so the default is off.
    pub gravity_on: bool,
}

impl Default for BodyParams {
    fn default() -> Self {
        let g = LegGeometry::default();
        BodyParams {
            links: [
                LinkBody::rod(0.012, g.l1),
                LinkBody::rod(0.018, g.l2),
                LinkBody::rod(0.008, g.l3),
                LinkBody::rod(0.003, g.l4),
                LinkBody::rod(0.004, g.foot.hinge_mm()),
                LinkBody::rod(0.0015, g.foot.side_blade_mm()),
            ],
            mass_scale: 1.0,
            // Hip and knee carry the belt-drive and gearbox losses of their
            // motors; the wet cloth hinges dissipate at the fold and IP.
            joint_damping: [1000.0, 1000.0, 0.5, 1.0, 3.4],
            // The water load during the power stroke drives the MTP and IP
            // negative; the IP's -10 degree bound is the structural
            // extension limit it presses against. The MTP works in a narrow
            // band; recovery compliance lives in the deep IP curl of the
            // cloth hinge and in the fold.
            stop_lower: [-2.0, -2.0, -0.1, -(10f64.to_radians()), 0.0],
            stop_upper: [2.0, 2.0, 0.05, 1.7, 0.35],
            stop_k: 2.0e4,
            stop_c: 20.0,
            gravity_on: false,
        }
    }
}

impl BodyParams {
    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.links.iter().enumerate() {
            if l.mass_kg < 0.0 || l.inertia_kgmm2 < 0.0 {
                return Err(Error::InvalidConfig {
                    what: format!("link {i} mass/inertia must be >= 0"),
                });
            }
        }
        if !(self.mass_scale > 0.0) {
            return Err(Error::InvalidConfig {
                what: format!("mass scale {} must be > 0", self.mass_scale),
            });
        }
        for k in 0..NQ {
            if self.joint_damping[k] < 0.0 {
                return Err(Error::InvalidConfig {
                    what: format!("joint damping [{k}] must be >= 0"),
                });
            }
            if self.stop_lower[k] >= self.stop_upper[k] {
                return Err(Error::InvalidConfig {
                    what: format!(
                        "stop bounds [{k}]: lower {} must be < upper {}",
                        self.stop_lower[k], self.stop_upper[k]
                    ),
                });
            }
        }
        if self.stop_k < 0.0 || self.stop_c < 0.0 {
            return Err(Error::InvalidConfig {
                what: "stop stiffness/damping must be >= 0".into(),
            });
        }
        Ok(())
    }
}

/// Penalty torque of a joint hard stop, N·mm. Zero inside the bounds; outside
/// it pushes back into the feasible set and its damping term never pulls
/// inward.
pub fn hard_stop_torque(angle: f64, rate: f64, lower: f64, upper: f64, k: f64, c: f64) -> f64 {
    if angle < lower {
        (k * (lower - angle) - c * rate).max(0.0)
    } else if angle > upper {
        -(k * (angle - upper) + c * rate).max(0.0)
    } else {
        0.0
    }
}

fn stop_penetration_energy(angle: f64, lower: f64, upper: f64, k: f64) -> f64 {
    if angle < lower {
        0.5 * k * (lower - angle).powi(2)
    } else if angle > upper {
        0.5 * k * (angle - upper).powi(2)
    } else {
        0.0
    }
}

fn link_len(link: Link, geom: &LegGeometry) -> f64 {
    match link {
        Link::Femur => geom.l1,
        Link::Shank => geom.l2,
        Link::Tarsus => geom.l3,
        Link::Toe => geom.l4,
        Link::FootCentral => geom.foot.hinge_mm(),
        Link::FootSide => geom.foot.side_blade_mm(),
    }
}

/// Joint-space mass matrix, N·mm·s^2/rad.
pub fn mass_matrix(frames: &Frames, geom: &LegGeometry, body: &BodyParams) -> MassMatrix {
    let mut m = MassMatrix::zeros();
    for link in LINKS {
        let i = link.index();
        let lb = &body.links[i];
        let mass = lb.mass_kg * body.mass_scale;
        let inertia = lb.inertia_kgmm2 * body.mass_scale;
        if mass == 0.0 && inertia == 0.0 {
            continue;
        }
        let com = lb.com_fraction * link_len(link, geom);
        let jv = frames.point_jacobian(link, com);
        let w = frames.link_w[i];
        m += (jv.transpose() * jv) * mass + w * w.transpose() * inertia;
    }
    m / KGMM2_PER_NMM_S2
}

/// Velocity bias (Coriolis/centrifugal) generalized forces, N·mm, such that
/// `M qdd = Q - bias`.
pub fn bias_forces(frames: &Frames, state: &LegState, geom: &LegGeometry, body: &BodyParams) -> QVec {
    // Chain the "acceleration at qdd = 0" of link origins.
    let mut origin_acc = [Vector2::zeros(); 6];
    let seg_len = [
        geom.l1,
        geom.l2,
        geom.l3,
        geom.l4,
        geom.foot.hinge_mm(),
    ];
    let qd1_sq = state.qd[1] * state.qd[1];
    let mut rate = [0.0f64; 6];
    for link in LINKS {
        let i = link.index();
        rate[i] = frames.link_w[i].dot(&state.qd);
    }
    for i in 1..6 {
        let phi = frames.link_angle[i - 1];
        let ang_bias = frames.link_w_dot_qd_coeff[i - 1] * qd1_sq;
        origin_acc[i] = origin_acc[i - 1]
            + (-link_dir(phi) * rate[i - 1] * rate[i - 1] + link_normal(phi) * ang_bias)
                * seg_len[i - 1];
    }

    let mut bias = QVec::zeros();
    for link in LINKS {
        let i = link.index();
        let lb = &body.links[i];
        let mass = lb.mass_kg * body.mass_scale;
        let inertia = lb.inertia_kgmm2 * body.mass_scale;
        if mass == 0.0 && inertia == 0.0 {
            continue;
        }
        let com = lb.com_fraction * link_len(link, geom);
        let phi = frames.link_angle[i];
        let ang_bias = frames.link_w_dot_qd_coeff[i] * qd1_sq;
        let com_acc =
            origin_acc[i] + (-link_dir(phi) * rate[i] * rate[i] + link_normal(phi) * ang_bias) * com;
        let jv = frames.point_jacobian(link, com);
        bias += (jv.transpose() * com_acc) * mass + frames.link_w[i] * (inertia * ang_bias);
    }
    bias / KGMM2_PER_NMM_S2
}

/// Gravity generalized forces (with the toggle applied), N·mm.
pub fn gravity_forces(frames: &Frames, geom: &LegGeometry, body: &BodyParams) -> QVec {
    let mut g = QVec::zeros();
    if !body.gravity_on {
        return g;
    }
    for link in LINKS {
        let i = link.index();
        let mass = body.links[i].mass_kg * body.mass_scale;
        if mass == 0.0 {
            continue;
        }
        let com = body.links[i].com_fraction * link_len(link, geom);
        let jv = frames.point_jacobian(link, com);
        // Weight acts along -y; N * mm lever.
        g -= jv.row(1).transpose() * (mass * GRAVITY_M_S2);
    }
    g
}

fn gravity_energy(frames: &Frames, geom: &LegGeometry, body: &BodyParams) -> f64 {
    if !body.gravity_on {
        return 0.0;
    }
    LINKS
        .iter()
        .map(|link| {
            let i = link.index();
            let com = body.links[i].com_fraction * link_len(*link, geom);
            let y = frames.point(*link, com).y;
            body.links[i].mass_kg * body.mass_scale * GRAVITY_M_S2 * y
        })
        .sum()
}

/// Solve `M qdd = Q - bias` for the generalized accelerations, rad/s^2.
pub fn assemble_accelerations(
    state: &LegState,
    geom: &LegGeometry,
    body: &BodyParams,
    total_torque_nmm: &QVec,
) -> Result<QVec> {
    let frames = forward_kinematics(state, geom)?;
    let m = mass_matrix(&frames, geom, body);
    let bias = bias_forces(&frames, state, geom, body);
    let chol = Cholesky::new(m).ok_or(Error::MassMatrixNotPd)?;
    Ok(chol.solve(&(total_torque_nmm - bias)))
}

/// Kinetic energy, N·mm.
pub fn kinetic_energy(frames: &Frames, state: &LegState, geom: &LegGeometry, body: &BodyParams) -> f64 {
    let m = mass_matrix(frames, geom, body);
    0.5 * state.qd.dot(&(m * state.qd))
}

/// Full simulation configuration: one run of one tendon configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub geom: LegGeometry,
    pub body: BodyParams,
    pub cpg: CpgParams,
    pub servo: ServoGains,
    pub hydro: HydroParams,
    pub tendon: TendonParams,
    pub tendon_config: TendonConfigId,
    /// Integration step, s.
    pub dt_s: f64,
    /// Logged gait cycles after the warm-up.
    pub cycles: u32,
    /// Warm-up cycles discarded before logging.
    pub warmup_cycles: u32,
    /// Log decimation rate, Hz.
    pub log_rate_hz: f64,
    /// Seed for the initial-condition perturbation.
    pub seed: u64,
    /// Magnitude of the uniform perturbation of passive-joint initial
    /// angles, rad.
    pub ic_noise_rad: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            geom: LegGeometry::default(),
            body: BodyParams::default(),
            cpg: CpgParams::default(),
            servo: ServoGains::default(),
            hydro: HydroParams::default(),
            tendon: TendonParams::default(),
            tendon_config: TendonConfigId::GtAe,
            dt_s: 1e-4,
            cycles: 20,
            warmup_cycles: 2,
            log_rate_hz: 800.0,
            seed: 0,
            ic_noise_rad: 0.01,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.geom.validate()?;
        self.body.validate()?;
        self.cpg.validate()?;
        self.servo.validate()?;
        self.hydro.validate()?;
        self.tendon.validate()?;
        if !(self.dt_s > 0.0) {
            return Err(Error::InvalidConfig {
                what: format!("dt {} must be > 0", self.dt_s),
            });
        }
        if self.cycles < 1 {
            return Err(Error::InvalidConfig {
                what: "cycle count must be >= 1".into(),
            });
        }
        if !(self.log_rate_hz > 0.0) || self.log_rate_hz > 1.0 / self.dt_s + 1e-9 {
            return Err(Error::InvalidConfig {
                what: format!(
                    "log rate {} Hz must be in (0, 1/dt = {}]",
                    self.log_rate_hz,
                    1.0 / self.dt_s
                ),
            });
        }
        if self.ic_noise_rad < 0.0 {
            return Err(Error::InvalidConfig {
                what: format!("ic noise {} must be >= 0", self.ic_noise_rad),
            });
        }
        if (self.body.stop_upper[4] - self.geom.foot.fold_max_rad).abs() > 1e-12 {
            return Err(Error::InvalidConfig {
                what: format!(
                    "fold stop upper {} must equal fold_max {}",
                    self.body.stop_upper[4], self.geom.foot.fold_max_rad
                ),
            });
        }
        Ok(())
    }
}

/// One logged sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    /// Scheduled sample time, s (state sampled at the nearest step).
    pub t: f64,
    /// Warped oscillator phase, rad in [0, 2pi).
    pub theta: f64,
    pub q: [f64; NQ],
    pub qd: [f64; NQ],
    /// Actuator torques, N·mm.
    pub tau_hip: f64,
    pub tau_knee: f64,
    /// GST tension, N (zero when the configuration has no GST).
    pub gst_tension_n: f64,
    /// Simulated thrust-sensor reading, N.
    pub thrust_n: f64,
    /// Foot marker world positions, mm.
    pub markers: [[f64; 2]; 3],
    /// Signed actuator mechanical power, W.
    pub servo_power_w: f64,
}

/// Cumulative energy bookkeeping sampled with each record, N·mm. Work terms
/// are works done on the mechanism by each source since t = 0.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergySample {
    pub kinetic: f64,
    pub elastic_tendon: f64,
    pub elastic_stop: f64,
    pub gravity_potential: f64,
    pub work_servo: f64,
    pub work_tendon: f64,
    pub work_drag: f64,
    pub work_damping: f64,
    pub work_stop: f64,
    pub work_gravity: f64,
}

/// Run header: resolved facts a metrics pass needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LogHeader {
    pub config_id: TendonConfigId,
    pub f_gait_hz: f64,
    pub d_vir: f64,
    /// First scheduled sample time, s; a cycle boundary.
    pub t_first_sample: f64,
    pub log_rate_hz: f64,
    pub dt_s: f64,
    pub cycles: u32,
    pub warmup_cycles: u32,
    pub seed: u64,
    pub ic_noise_rad: f64,
    /// Power-phase mapping recorded for downstream analysis.
    pub power_phase: &'static str,
    /// Sampled states where the GST and an extensor opposed each other at
    /// the MTP with both taut (parameterization warning).
    pub mtp_antagonism_samples: u32,
}

/// Time-ordered simulation log at a constant sampling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub header: LogHeader,
    pub records: Vec<LogRecord>,
    pub energy: Vec<EnergySample>,
}

impl SimLog {
    /// Gait period, s.
    pub fn period(&self) -> f64 {
        1.0 / self.header.f_gait_hz
    }
}

struct ForceEval {
    frames: Frames,
    tau_servo: QVec,
    tau_tendon: QVec,
    tau_drag: QVec,
    tau_stop_elastic: QVec,
    tau_gravity: QVec,
    /// Diagonal velocity-proportional damping from joint friction, N·mm·s/rad.
    damp_joint: QVec,
    /// Diagonal stop damping, active while penetrating, N·mm·s/rad.
    damp_stop: QVec,
    gst_tension_n: f64,
    thrust_n: f64,
    elastic_tendon: f64,
    tau_hip: f64,
    tau_knee: f64,
    antagonism: bool,
}

struct StepWork {
    servo: f64,
    tendon: f64,
    drag: f64,
    damping: f64,
    stop: f64,
    gravity: f64,
}

fn eval_forces(
    state: &LegState,
    cfg: &SimConfig,
    net: &TendonNetwork,
) -> Result<ForceEval> {
    let frames = forward_kinematics(state, &cfg.geom)?;

    let (hip_ref, knee_ref) = joint_targets(state.t, &cfg.cpg);
    let tau_hip = servo_torque(hip_ref, state.q[0], state.qd[0], &cfg.servo);
    let tau_knee = servo_torque(knee_ref, state.q[1], state.qd[1], &cfg.servo);
    let mut tau_servo = QVec::zeros();
    tau_servo[0] = tau_hip;
    tau_servo[1] = tau_knee;

    let tendon = net.evaluate(state, &cfg.geom)?;
    let drag = leg_drag(state, &frames, &cfg.geom, &cfg.hydro);

    // Stop damping is stiff on the light distal joints; its elastic part is
    // applied explicitly, the damping part implicitly in the velocity solve.
    let mut tau_stop_elastic = QVec::zeros();
    let mut damp_joint = QVec::zeros();
    let mut damp_stop = QVec::zeros();
    for k in 0..NQ {
        damp_joint[k] = cfg.body.joint_damping[k];
        let (lo, hi) = (cfg.body.stop_lower[k], cfg.body.stop_upper[k]);
        tau_stop_elastic[k] = hard_stop_torque(state.q[k], 0.0, lo, hi, cfg.body.stop_k, 0.0);
        if state.q[k] < lo || state.q[k] > hi {
            damp_stop[k] = cfg.body.stop_c;
        }
    }

    let tau_gravity = gravity_forces(&frames, &cfg.geom, &cfg.body);
    // Warn only when meaningful forces oppose; detection-level tensions on a
    // just-engaged tendon are not antagonism.
    let antagonism = net.mtp_antagonism(state, &cfg.geom, 0.5)?;

    Ok(ForceEval {
        frames,
        tau_servo,
        tau_tendon: tendon.generalized,
        tau_drag: drag.generalized,
        tau_stop_elastic,
        tau_gravity,
        damp_joint,
        damp_stop,
        gst_tension_n: tendon.gst_tension_n.unwrap_or(0.0),
        thrust_n: drag.thrust_n,
        elastic_tendon: tendon.elastic_energy_nmm,
        tau_hip,
        tau_knee,
        antagonism,
    })
}

/// One semi-implicit Euler step at fixed dt. Deterministic; identical inputs
/// produce bit-identical outputs.
pub fn step(state: &LegState, cfg: &SimConfig, net: &TendonNetwork) -> Result<LegState> {
    let forces = eval_forces(state, cfg, net)?;
    let (next, _) = integrate(state, &forces, cfg)?;
    Ok(next)
}

/// Semi-implicit velocity update with the diagonal damping terms treated
/// implicitly: `(M + dt D) v' = M v + dt (Q - bias)`, then `q' = q + v' dt`.
fn integrate(state: &LegState, f: &ForceEval, cfg: &SimConfig) -> Result<(LegState, StepWork)> {
    let explicit =
        f.tau_servo + f.tau_tendon + f.tau_drag + f.tau_stop_elastic + f.tau_gravity;
    let m = mass_matrix(&f.frames, &cfg.geom, &cfg.body);
    let bias = bias_forces(&f.frames, state, &cfg.geom, &cfg.body);
    let mut lhs = m;
    for k in 0..NQ {
        lhs[(k, k)] += cfg.dt_s * (f.damp_joint[k] + f.damp_stop[k]);
    }
    let chol = Cholesky::new(lhs).ok_or(Error::MassMatrixNotPd)?;
    let qd_new = chol.solve(&(m * state.qd + (explicit - bias) * cfg.dt_s));

    let q_new = state.q + qd_new * cfg.dt_s;
    let next = LegState {
        q: q_new,
        qd: qd_new,
        t: state.t + cfg.dt_s,
    };
    if !next.is_finite() {
        return Err(Error::NonFiniteState { t: state.t });
    }

    // Work done on the mechanism by each source over the step; consistent
    // with the discrete position update q' - q = v' dt.
    let dqs = qd_new * cfg.dt_s;
    let work = StepWork {
        servo: f.tau_servo.dot(&dqs),
        tendon: f.tau_tendon.dot(&dqs),
        drag: f.tau_drag.dot(&dqs),
        damping: -(0..NQ).map(|k| f.damp_joint[k] * qd_new[k] * dqs[k]).sum::<f64>(),
        stop: f.tau_stop_elastic.dot(&dqs)
            - (0..NQ).map(|k| f.damp_stop[k] * qd_new[k] * dqs[k]).sum::<f64>(),
        gravity: f.tau_gravity.dot(&dqs),
    };
    Ok((next, work))
}

/// Run a configured simulation: warm up, then log `cycles` gait cycles at the
/// decimation rate. Passive-joint initial angles are perturbed by seeded
/// uniform noise to emulate trial variation.
pub fn run_sim(cfg: &SimConfig) -> Result<SimLog> {
    cfg.validate()?;
    let net = build_network_with(cfg.tendon_config, &cfg.geom, &cfg.tendon);

    let period = cfg.cpg.period();
    let t_first = cfg.warmup_cycles as f64 * period;
    let t_end = t_first + cfg.cycles as f64 * period;
    let n_steps = (t_end / cfg.dt_s - 1e-9).ceil() as u64;
    // Samples at t_first + k/rate, k = 0..=floor(span * rate).
    let n_samples = ((cfg.cycles as f64 * period) * cfg.log_rate_hz + 1e-9).floor() as u64 + 1;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (hip0, knee0) = joint_targets(0.0, &cfg.cpg);
    // Foot tucked and folded, as at the end of a recovery stroke.
    let ip0 = (0.5 * (cfg.body.stop_lower[3] + cfg.body.stop_upper[3])).max(0.0);
    let mut q0 = [hip0, knee0, 0.0, ip0, cfg.geom.foot.fold_max_rad];
    for k in 2..NQ {
        let noise = if cfg.ic_noise_rad > 0.0 {
            rng.random_range(-cfg.ic_noise_rad..=cfg.ic_noise_rad)
        } else {
            0.0
        };
        q0[k] = (q0[k] + noise).clamp(cfg.body.stop_lower[k], cfg.body.stop_upper[k]);
    }
    let mut state = LegState::new(q0, [0.0; NQ], 0.0);

    let mut records = Vec::with_capacity(n_samples as usize);
    let mut energy = Vec::with_capacity(n_samples as usize);
    let mut next_sample: u64 = 0;
    let mut works = EnergySample::default();
    let mut antagonism_count: u32 = 0;

    let mut emit = |state: &LegState,
                    f: &ForceEval,
                    works: &EnergySample,
                    k: u64,
                    antagonism_count: &mut u32,
                    cfg: &SimConfig| {
        let t_sched = t_first + k as f64 / cfg.log_rate_hz;
        if f.antagonism {
            *antagonism_count += 1;
        }
        records.push(LogRecord {
            t: t_sched,
            theta: theta_at(t_sched, &cfg.cpg),
            q: [state.q[0], state.q[1], state.q[2], state.q[3], state.q[4]],
            qd: [state.qd[0], state.qd[1], state.qd[2], state.qd[3], state.qd[4]],
            tau_hip: f.tau_hip,
            tau_knee: f.tau_knee,
            gst_tension_n: f.gst_tension_n,
            thrust_n: f.thrust_n,
            markers: [
                [f.frames.markers[0].x, f.frames.markers[0].y],
                [f.frames.markers[1].x, f.frames.markers[1].y],
                [f.frames.markers[2].x, f.frames.markers[2].y],
            ],
            servo_power_w: (f.tau_hip * state.qd[0] + f.tau_knee * state.qd[1])
                / KGMM2_PER_NMM_S2,
        });
        let mut e = *works;
        e.kinetic = kinetic_energy(&f.frames, state, &cfg.geom, &cfg.body);
        e.elastic_tendon = f.elastic_tendon;
        e.elastic_stop = (0..NQ)
            .map(|k| {
                stop_penetration_energy(
                    state.q[k],
                    cfg.body.stop_lower[k],
                    cfg.body.stop_upper[k],
                    cfg.body.stop_k,
                )
            })
            .sum();
        e.gravity_potential = gravity_energy(&f.frames, &cfg.geom, &cfg.body);
        energy.push(e);
    };

    for _ in 0..n_steps {
        let forces = eval_forces(&state, cfg, &net)
            .map_err(|e| wrap_nonfinite(e, state.t))?;
        while next_sample < n_samples
            && t_first + next_sample as f64 / cfg.log_rate_hz <= state.t + 0.5 * cfg.dt_s
        {
            emit(&state, &forces, &works, next_sample, &mut antagonism_count, cfg);
            next_sample += 1;
        }
        let (next, work) = integrate(&state, &forces, cfg)?;
        works.work_servo += work.servo;
        works.work_tendon += work.tendon;
        works.work_drag += work.drag;
        works.work_damping += work.damping;
        works.work_stop += work.stop;
        works.work_gravity += work.gravity;
        state = next;
    }
    // Trailing samples within half a step of the end.
    if next_sample < n_samples {
        let forces = eval_forces(&state, cfg, &net)
            .map_err(|e| wrap_nonfinite(e, state.t))?;
        while next_sample < n_samples
            && t_first + next_sample as f64 / cfg.log_rate_hz <= state.t + 0.5 * cfg.dt_s
        {
            emit(&state, &forces, &works, next_sample, &mut antagonism_count, cfg);
            next_sample += 1;
        }
    }

    Ok(SimLog {
        header: LogHeader {
            config_id: cfg.tendon_config,
            f_gait_hz: cfg.cpg.f_gait,
            d_vir: cfg.cpg.d_vir,
            t_first_sample: t_first,
            log_rate_hz: cfg.log_rate_hz,
            dt_s: cfg.dt_s,
            cycles: cfg.cycles,
            warmup_cycles: cfg.warmup_cycles,
            seed: cfg.seed,
            ic_noise_rad: cfg.ic_noise_rad,
            power_phase: "theta in [0,pi): power (backward sweep); [pi,2pi): recovery",
            mtp_antagonism_samples: antagonism_count,
        },
        records,
        energy,
    })
}

fn wrap_nonfinite(e: Error, t: f64) -> Error {
    match e {
        Error::FoldOutOfRange { .. } => Error::NonFiniteState { t },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quiet_config() -> SimConfig {
        // Everything off: no drag, no tendons, no damping, wide stops.
        let mut cfg = SimConfig::default();
        cfg.hydro.rho = 1e-12;
        cfg.hydro.link_drag = [super::super::hydro::LinkDrag { enabled: false, area_mm2: 0.0 }; 4];
        cfg.tendon_config = TendonConfigId::NtLs;
        cfg.tendon.fold_spring_k = 0.0;
        cfg.tendon.fold_spring_c = 0.0;
        cfg.servo.kp = 0.0;
        cfg.servo.kd = 0.0;
        cfg.body.joint_damping = [0.0; NQ];
        cfg.body.stop_lower = [-10.0, -10.0, -10.0, -10.0, -10.0];
        cfg.body.stop_upper = [10.0, 10.0, 10.0, 10.0, cfg.geom.foot.fold_max_rad.max(10.0)];
        cfg.geom.foot.fold_max_rad = 10.0;
        cfg.body.stop_upper[4] = 10.0;
        cfg.ic_noise_rad = 0.0;
        cfg
    }

    #[test]
    fn hard_stop_examples() {
        assert_eq!(hard_stop_torque(0.1, 3.0, -0.5, 0.5, 1e5, 50.0), 0.0);
        // Penetration below the lower bound restores positively.
        assert_relative_eq!(hard_stop_torque(-0.51, 0.0, -0.5, 0.5, 1e5, 0.0), 1000.0, epsilon = 1e-8);
        // Above the upper bound restores negatively.
        assert_relative_eq!(hard_stop_torque(0.51, 0.0, -0.5, 0.5, 1e5, 0.0), -1000.0, epsilon = 1e-8);
        // Damping never pulls inward.
        assert_eq!(hard_stop_torque(-0.51, 100.0, -0.5, 0.5, 1e5, 50.0), 0.0);
    }

    #[test]
    fn hard_stop_static_balance() {
        // Constant external torque tau against the stop penetrates tau/k.
        let k = 5.0e4;
        let tau_ext = 120.0;
        let pen = tau_ext / k;
        let restoring = hard_stop_torque(0.5 + pen, 0.0, -0.5, 0.5, k, 0.0);
        assert_relative_eq!(restoring, -tau_ext, epsilon = 1e-9);
    }

    #[test]
    fn zero_everything_zero_acceleration() {
        let cfg = quiet_config();
        let st = LegState::new([0.2, -0.4, 0.1, 0.0, 0.3], [0.0; NQ], 0.0);
        let qdd = assemble_accelerations(&st, &cfg.geom, &cfg.body, &QVec::zeros()).unwrap();
        assert!(qdd.norm() < 1e-12, "qdd = {qdd:?}");
    }

    #[test]
    fn massless_chain_rejected() {
        let mut cfg = quiet_config();
        for l in cfg.body.links.iter_mut() {
            l.mass_kg = 0.0;
            l.inertia_kgmm2 = 0.0;
        }
        let st = LegState::new([0.0, -0.3, 0.0, 0.0, 0.0], [0.0; NQ], 0.0);
        match assemble_accelerations(&st, &cfg.geom, &cfg.body, &QVec::zeros()) {
            Err(Error::MassMatrixNotPd) => {}
            other => panic!("expected MassMatrixNotPd, got {other:?}"),
        }
    }

    #[test]
    fn pendulum_reduction_matches_analytic() {
        // Mass concentrated on the femur; everything else negligible. The hip
        // coordinate obeys the analytic pendulum equation under gravity.
        let mut cfg = quiet_config();
        cfg.body.gravity_on = true;
        let eps = 1e-9;
        for (i, l) in cfg.body.links.iter_mut().enumerate() {
            if i == 0 {
                l.mass_kg = 0.05;
                l.com_fraction = 0.5;
                l.inertia_kgmm2 = 0.05 * 79.0 * 79.0 / 12.0;
            } else {
                l.mass_kg = eps;
                l.inertia_kgmm2 = eps;
            }
        }
        let q_hip = 0.37;
        let st = LegState::new([q_hip, cfg.geom.reference.knee_rad, 0.0, 0.0, 0.0], [0.0; NQ], 0.0);
        let frames = forward_kinematics(&st, &cfg.geom).unwrap();
        let tau_g = gravity_forces(&frames, &cfg.geom, &cfg.body);
        let qdd = assemble_accelerations(&st, &cfg.geom, &cfg.body, &tau_g).unwrap();

        let m = 0.05;
        let rho = 0.5 * 79.0;
        let inertia = m * 79.0 * 79.0 / 12.0 + m * rho * rho; // kg·mm^2
        let expected = -KGMM2_PER_NMM_S2 * m * GRAVITY_M_S2 * rho * q_hip.sin() / inertia;
        assert_relative_eq!(qdd[0], expected, max_relative = 1e-4);
    }

    #[test]
    fn power_balance_identity() {
        // d(KE)/dt = qd . (Q - bias) + 1/2 qd . Mdot qd requires
        // qd . bias = 1/2 qd . Mdot qd: check bias against a finite
        // difference of the mass matrix along the trajectory.
        let cfg = SimConfig::default();
        let st = LegState::new(
            [0.21, -0.37, 0.12, -0.08, 0.5],
            [1.3, -0.8, 2.1, 0.9, -1.7],
            0.0,
        );
        let frames = forward_kinematics(&st, &cfg.geom).unwrap();
        let bias = bias_forces(&frames, &st, &cfg.geom, &cfg.body);

        let h = 1e-7;
        let mut fwd = st;
        fwd.q += st.qd * h;
        let mut bwd = st;
        bwd.q -= st.qd * h;
        let mf = mass_matrix(&forward_kinematics(&fwd, &cfg.geom).unwrap(), &cfg.geom, &cfg.body);
        let mb = mass_matrix(&forward_kinematics(&bwd, &cfg.geom).unwrap(), &cfg.geom, &cfg.body);
        let mdot = (mf - mb) / (2.0 * h);

        let lhs = st.qd.dot(&bias);
        let rhs = 0.5 * st.qd.dot(&(mdot * st.qd));
        assert_relative_eq!(lhs, rhs, max_relative = 1e-6);
    }

    #[test]
    fn free_drift_and_rest() {
        let cfg = quiet_config();
        let net = build_network_with(cfg.tendon_config, &cfg.geom, &cfg.tendon);
        // At rest nothing moves but time.
        let st = LegState::new([0.1, -0.2, 0.05, 0.0, 0.4], [0.0; NQ], 0.0);
        let next = step(&st, &cfg, &net).unwrap();
        assert_eq!(next.q, st.q);
        assert_eq!(next.qd, st.qd);
        assert_relative_eq!(next.t, st.t + cfg.dt_s);
        // Uniform velocity drifts positions by v dt.
        let v = [0.4, -0.3, 0.2, 0.1, -0.05];
        let st2 = LegState::new([0.0, -0.3, 0.0, 0.0, 1.0], v, 0.0);
        let next2 = step(&st2, &cfg, &net).unwrap();
        for k in 0..NQ {
            // Velocity-dependent bias is present, so allow the O(dt^2) term.
            assert_relative_eq!(next2.q[k], st2.q[k] + v[k] * cfg.dt_s, epsilon = 1e-6);
        }
    }

    #[test]
    fn log_length_matches_rate() {
        let mut cfg = SimConfig::default();
        cfg.cycles = 1;
        cfg.warmup_cycles = 0;
        let log = run_sim(&cfg).unwrap();
        let expected = (800.0 / 1.5) as usize; // 533
        let n = log.records.len();
        assert!(
            (n as i64 - expected as i64).abs() <= 1,
            "log length {n}, expected about {expected}"
        );
        // Strictly increasing, constant interval.
        for w in log.records.windows(2) {
            assert!(w[1].t > w[0].t);
            assert_relative_eq!(w[1].t - w[0].t, 1.0 / 800.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn identical_seeds_bit_identical() {
        let mut cfg = SimConfig::default();
        cfg.cycles = 2;
        cfg.warmup_cycles = 1;
        cfg.seed = 7;
        let a = run_sim(&cfg).unwrap();
        let b = run_sim(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let mut cfg = SimConfig::default();
        cfg.cycles = 1;
        cfg.warmup_cycles = 0;
        cfg.seed = 1;
        let a = run_sim(&cfg).unwrap();
        cfg.seed = 2;
        let b = run_sim(&cfg).unwrap();
        assert_ne!(a.records, b.records);
    }

    #[test]
    fn settles_to_static_equilibrium_without_drag() {
        // Servos hold a fixed pose, drag off: all joint rates die out.
        let mut cfg = SimConfig::default();
        cfg.hydro.rho = 1e-12;
        cfg.hydro.link_drag = [super::super::hydro::LinkDrag { enabled: false, area_mm2: 0.0 }; 4];
        cfg.cpg.a_hip = 0.0;
        cfg.cpg.a_knee = 0.0;
        cfg.cycles = 7; // ~4.7 s
        cfg.warmup_cycles = 0;
        cfg.ic_noise_rad = 0.0;
        let log = run_sim(&cfg).unwrap();
        let last = log.records.last().unwrap();
        let max_rate = last.qd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max_rate < 1e-6, "max |qdot| = {max_rate}");
    }

    /// The default parameterization never pits the GST against the extensors
    /// at the MTP; violations would be counted into the header as warnings.
    #[test]
    fn no_mtp_antagonism_on_default_runs() {
        for id in [TendonConfigId::GtAe, TendonConfigId::Gt2e, TendonConfigId::HtAe] {
            let mut cfg = SimConfig::default();
            cfg.tendon_config = id;
            cfg.cycles = 3;
            let log = run_sim(&cfg).unwrap();
            assert_eq!(
                log.header.mtp_antagonism_samples, 0,
                "antagonism warnings for {id}"
            );
        }
    }

    #[test]
    fn no_persistent_stop_penetration() {
        let mut cfg = SimConfig::default();
        cfg.cycles = 3;
        cfg.warmup_cycles = 1;
        let log = run_sim(&cfg).unwrap();
        let slack = cfg.servo.saturation / cfg.body.stop_k; // tau_max / k_stop
        for r in &log.records {
            for k in 0..NQ {
                assert!(
                    r.q[k] > cfg.body.stop_lower[k] - slack - 1e-9
                        && r.q[k] < cfg.body.stop_upper[k] + slack + 1e-9,
                    "coordinate {k} = {} outside stops by more than {slack}",
                    r.q[k]
                );
            }
        }
    }
}
