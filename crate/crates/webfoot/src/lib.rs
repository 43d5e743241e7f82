//! Deterministic planar simulator of a bird-inspired, tendon-coupled robotic
//! swimming leg with a self-folding webbed foot.
//!
//! The leg is a five-joint sagittal chain (hip, knee, coupled ankle, MTP, IP)
//! plus a one-degree-of-freedom folding foot. Hip and knee track a central
//! pattern generator through stiff PD servos; the remaining joints are
//! passive, shaped by tendon networks routed over joint pulleys, quasi-steady
//! water drag on the foot panels, hard stops and viscous damping. Six tendon
//! configurations (GT-AE, GT-2E, GT-NE, HT-AE, NT-AE, NT-LS) can be paddled
//! and compared on net thrust, input work, propulsive efficiency and the two
//! phase-transition times of the recovery-to-power transition.

pub mod cpg;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod hydro;
pub mod metrics;
pub mod tendon;

pub use error::{Error, Result};

pub use cpg::{joint_targets, phase_warp, servo_torque, CpgParams, ServoGains};
pub use dynamics::{
    assemble_accelerations, hard_stop_torque, run_sim, step, BodyParams, LogRecord, SimConfig,
    SimLog,
};
pub use geometry::{
    ankle_from_knee, collinearity_residual, foot_effective_geometry, forward_kinematics,
    AnkleCoupling, FootShape, FourBarCoupling, Frames, LegGeometry, LegState, ReferencePose,
};
pub use hydro::{body_thrust, leg_drag, panel_drag, HydroParams};
pub use metrics::{
    cycle_metrics, detect_tp1, detect_tp2, efficiency, impulse_difference, input_work, mean_curve,
    net_thrust, CycleMetrics, MeanCurve, MetricParams, Signal, Window,
};
pub use tendon::{
    build_network, build_network_with, coupling_ratio, excursion, tension, TendonConfigId,
    TendonNetwork, TendonParams, TendonRoute, ALL_CONFIGS,
};
