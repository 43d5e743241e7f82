//! Unilateral elastic tendons routed over joint pulleys: the global spring
//! tendon (GST), the extensor set, the rigid-rope IP limit and the local
//! fold spring of the conventional passive paddle.
//!
//! A route's excursion is the pulley-weighted sum of joint rotations from the
//! reference pose minus its rest offset; positive excursion stretches the
//! tendon. A taut tendon applies `-tension * d(excursion)/dq` to the
//! generalized coordinates, so winding signs encode which side of each joint
//! the tendon crosses.
//!
//! Working directions during the power stroke: knee and ankle rotate
//! positive, the water load drives the MTP and IP negative (their extension
//! side, where the IP has its hard limit) and presses the fold open toward
//! zero. The GST charges from knee/ankle extension and catches the loaded IP;
//! the extensors are transmissions driving each distal joint toward its
//! power direction when the ankle extends.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{Joint, LegGeometry, LegState, QVec};

/// The six tendon configurations under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TendonConfigId {
    /// Full global spring tendon, all extensor tendons.
    GtAe,
    /// Full global spring tendon, extensors digit 1 and 2 only.
    Gt2e,
    /// Full global spring tendon, no extensors.
    GtNe,
    /// Half (ankle-anchored) global spring tendon, all extensors.
    HtAe,
    /// No global tendon, all extensors, rigid rope limiting the IP.
    NtAe,
    /// No tendons at all; local spring at the fold joint.
    NtLs,
}

pub const ALL_CONFIGS: [TendonConfigId; 6] = [
    TendonConfigId::GtAe,
    TendonConfigId::Gt2e,
    TendonConfigId::GtNe,
    TendonConfigId::HtAe,
    TendonConfigId::NtAe,
    TendonConfigId::NtLs,
];

impl TendonConfigId {
    pub fn as_str(&self) -> &'static str {
        match self {
            TendonConfigId::GtAe => "GT-AE",
            TendonConfigId::Gt2e => "GT-2E",
            TendonConfigId::GtNe => "GT-NE",
            TendonConfigId::HtAe => "HT-AE",
            TendonConfigId::NtAe => "NT-AE",
            TendonConfigId::NtLs => "NT-LS",
        }
    }

    /// Whether the configuration carries a global spring tendon (TP1 is only
    /// defined for these).
    pub fn has_gst(&self) -> bool {
        matches!(
            self,
            TendonConfigId::GtAe | TendonConfigId::Gt2e | TendonConfigId::GtNe | TendonConfigId::HtAe
        )
    }
}

impl fmt::Display for TendonConfigId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TendonConfigId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_CONFIGS
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig {
                what: format!(
                    "unknown tendon configuration {s:?}; valid: GT-AE, GT-2E, GT-NE, HT-AE, NT-AE, NT-LS"
                ),
            })
    }
}

/// One pulley crossing of a route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrap {
    pub joint: Joint,
    /// Pulley radius, mm.
    pub radius_mm: f64,
    /// Winding sign: +1 if positive joint rotation stretches the tendon.
    pub sign: f64,
}

/// An elastic tendon route over a sequence of pulleys.
#[derive(Debug, Clone, PartialEq)]
pub struct TendonRoute {
    pub name: &'static str,
    pub wraps: Vec<Wrap>,
    /// Rest excursion offset, mm: the excursion at which tension starts.
    pub rest_offset_mm: f64,
    /// Stiffness, N/mm.
    pub k: f64,
    /// Damping, N·s/mm.
    pub c: f64,
    /// Tension-only if true.
    pub unilateral: bool,
}

/// Spring and routing parameters not fixed by the design table; all
/// configurable.
#[derive(Debug, Clone, PartialEq)]
pub struct TendonParams {
    /// GST stiffness, N/mm.
    pub gst_k: f64,
    /// GST damping, N·s/mm.
    pub gst_c: f64,
    /// GST rest excursion offset, mm.
    pub gst_rest_mm: f64,
    /// E1 (ankle-to-MTP) stiffness, N/mm. E1 is long-excursion and
    /// pretensioned, so it stays soft.
    pub ext_k: f64,
    /// E2 (MTP-to-IP) stiffness, N/mm.
    pub e2_k: f64,
    /// E3 (digit tendon) stiffness, N/mm.
    pub e3_k: f64,
    /// Extensor damping, N·s/mm.
    pub ext_c: f64,
    /// Rest excursion offset of the ankle-anchored (half) GST, mm.
    pub ht_rest_mm: f64,
    /// Rest offsets of the three extensors, mm.
    pub e1_rest_mm: f64,
    pub e2_rest_mm: f64,
    pub e3_rest_mm: f64,
    /// Rigid-rope stiffness as a multiple of the GST stiffness.
    pub rope_k_factor: f64,
    /// IP extension angle at which the rope goes taut, rad.
    pub rope_engage_rad: f64,
    /// Local fold spring stiffness (NT-LS), N·mm/rad; bilateral about open.
    pub fold_spring_k: f64,
    /// Local fold spring damping, N·mm·s/rad.
    pub fold_spring_c: f64,
}

impl Default for TendonParams {
    fn default() -> Self {
        TendonParams {
            // Soft long-travel spring, pre-stretched at the reference pose:
            // its tension onset tracks the foot-loading event rather than the
            // leg sweep alone, and it discharges into the leg flexion at the
            // start of recovery.
            gst_k: 0.02,
            gst_c: 0.005,
            gst_rest_mm: -28.0,
            ht_rest_mm: -17.5,
            ext_k: 0.25,
            e2_k: 40.0,
            e3_k: 20.0,
            ext_c: 0.01,
            // E1 is pretensioned; E2 and E3 are slack through mid-recovery
            // and engage near the deep tuck, so the chain snaps the foot
            // open across the phase transition and releases afterwards.
            e1_rest_mm: 2.0,
            e2_rest_mm: 1.4,
            e3_rest_mm: -0.5,
            rope_k_factor: 100.0,
            rope_engage_rad: 0.14,
            fold_spring_k: 1.6,
            fold_spring_c: 1.5,
        }
    }
}

impl TendonParams {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("gst_k", self.gst_k),
            ("gst_c", self.gst_c),
            ("ext_k", self.ext_k),
            ("e2_k", self.e2_k),
            ("e3_k", self.e3_k),
            ("ext_c", self.ext_c),
            ("rope_k_factor", self.rope_k_factor),
            ("fold_spring_k", self.fold_spring_k),
            ("fold_spring_c", self.fold_spring_c),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) {
                return Err(Error::InvalidConfig {
                    what: format!("tendon {name} = {v} must be >= 0"),
                });
            }
        }
        Ok(())
    }
}

/// Bilateral rotational spring at the fold joint (conventional passive
/// paddle).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldSpring {
    /// Stiffness, N·mm/rad, centered on the open foot.
    pub k: f64,
    /// Damping, N·mm·s/rad.
    pub c: f64,
}

/// The tendon routes of one configuration plus the optional local fold
/// spring. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TendonNetwork {
    pub config: TendonConfigId,
    pub routes: Vec<TendonRoute>,
    pub fold_spring: Option<FoldSpring>,
}

/// Reference angle a route excursion is measured from, per joint.
pub fn reference_angle(joint: Joint, geom: &LegGeometry) -> f64 {
    match joint {
        Joint::Knee => geom.reference.knee_rad,
        Joint::Ankle => geom.reference.ankle_rad,
        _ => 0.0,
    }
}

fn gst_route(geom: &LegGeometry, p: &TendonParams) -> TendonRoute {
    TendonRoute {
        name: "gst",
        wraps: vec![
            Wrap { joint: Joint::Knee, radius_mm: geom.r_g1, sign: 1.0 },
            Wrap { joint: Joint::Ankle, radius_mm: geom.r_g2_p, sign: 1.0 },
            Wrap { joint: Joint::Ankle, radius_mm: geom.r_g2_d, sign: 1.0 },
            // Crosses the MTP on the extensor side: its torque there agrees
            // with the extensor set (no antagonism at the MTP).
            Wrap { joint: Joint::Mtp, radius_mm: geom.r_g3, sign: 1.0 },
            // Catches the loaded IP against overextension.
            Wrap { joint: Joint::Ip, radius_mm: geom.r_g4, sign: -1.0 },
        ],
        rest_offset_mm: p.gst_rest_mm,
        k: p.gst_k,
        c: p.gst_c,
        unilateral: true,
    }
}

fn half_gst_route(geom: &LegGeometry, p: &TendonParams) -> TendonRoute {
    TendonRoute {
        name: "gst",
        wraps: vec![
            Wrap { joint: Joint::Ankle, radius_mm: geom.r_g2_p_half, sign: 1.0 },
            Wrap { joint: Joint::Mtp, radius_mm: geom.r_g3, sign: 1.0 },
            Wrap { joint: Joint::Ip, radius_mm: geom.r_g4, sign: -1.0 },
        ],
        rest_offset_mm: p.ht_rest_mm,
        k: p.gst_k,
        c: p.gst_c,
        unilateral: true,
    }
}

fn extensor_routes(geom: &LegGeometry, p: &TendonParams, with_digit: bool) -> Vec<TendonRoute> {
    let mut routes = vec![
        TendonRoute {
            name: "e1",
            wraps: vec![
                Wrap { joint: Joint::Ankle, radius_mm: geom.r_ext0, sign: 1.0 },
                Wrap { joint: Joint::Mtp, radius_mm: geom.r_e2_1, sign: 1.0 },
            ],
            rest_offset_mm: p.e1_rest_mm,
            k: p.ext_k,
            c: p.ext_c,
            unilateral: true,
        },
        TendonRoute {
            name: "e2",
            wraps: vec![
                Wrap { joint: Joint::Mtp, radius_mm: geom.r_e2_1, sign: -1.0 },
                Wrap { joint: Joint::Ip, radius_mm: geom.r_e2_2, sign: 1.0 },
            ],
            rest_offset_mm: p.e2_rest_mm,
            k: p.e2_k,
            c: p.ext_c,
            unilateral: true,
        },
    ];
    if with_digit {
        routes.push(TendonRoute {
            name: "e3",
            wraps: vec![
                Wrap { joint: Joint::Ip, radius_mm: geom.r_e2_2, sign: -1.0 },
                Wrap { joint: Joint::Fold, radius_mm: geom.r_e2_2, sign: 1.0 },
            ],
            rest_offset_mm: p.e3_rest_mm,
            k: p.e3_k,
            c: p.ext_c,
            unilateral: true,
        });
    }
    routes
}

fn rope_route(geom: &LegGeometry, p: &TendonParams) -> TendonRoute {
    TendonRoute {
        name: "ip_rope",
        wraps: vec![Wrap { joint: Joint::Ip, radius_mm: geom.r_g4, sign: -1.0 }],
        rest_offset_mm: geom.r_g4 * p.rope_engage_rad,
        k: p.rope_k_factor * p.gst_k,
        c: p.gst_c,
        unilateral: true,
    }
}

/// Instantiate the route set of a configuration with default spring
/// parameters.
pub fn build_network(id: TendonConfigId, geom: &LegGeometry) -> TendonNetwork {
    build_network_with(id, geom, &TendonParams::default())
}

/// Instantiate the route set of a configuration. Deterministic: the same id
/// and geometry produce an identical network.
pub fn build_network_with(
    id: TendonConfigId,
    geom: &LegGeometry,
    params: &TendonParams,
) -> TendonNetwork {
    let mut routes = Vec::new();
    let mut fold_spring = None;
    match id {
        TendonConfigId::GtAe => {
            routes.push(gst_route(geom, params));
            routes.extend(extensor_routes(geom, params, true));
        }
        TendonConfigId::Gt2e => {
            routes.push(gst_route(geom, params));
            routes.extend(extensor_routes(geom, params, false));
        }
        TendonConfigId::GtNe => {
            routes.push(gst_route(geom, params));
        }
        TendonConfigId::HtAe => {
            routes.push(half_gst_route(geom, params));
            routes.extend(extensor_routes(geom, params, true));
        }
        TendonConfigId::NtAe => {
            routes.extend(extensor_routes(geom, params, true));
            routes.push(rope_route(geom, params));
        }
        TendonConfigId::NtLs => {
            fold_spring = Some(FoldSpring {
                k: params.fold_spring_k,
                c: params.fold_spring_c,
            });
        }
    }
    TendonNetwork {
        config: id,
        routes,
        fold_spring,
    }
}

/// Excursion of a route at a state: pulley-weighted joint rotations from the
/// reference pose, minus the rest offset. Positive stretches the tendon. mm.
pub fn excursion(route: &TendonRoute, state: &LegState, geom: &LegGeometry) -> Result<f64> {
    let mut e = -route.rest_offset_mm;
    for w in &route.wraps {
        let theta = state.joint_angle(w.joint, geom)?;
        e += w.sign * w.radius_mm * (theta - reference_angle(w.joint, geom));
    }
    Ok(e)
}

/// Gradient of a route's excursion w.r.t. the generalized coordinates, mm/rad.
pub fn excursion_gradient(route: &TendonRoute, state: &LegState, geom: &LegGeometry) -> Result<QVec> {
    let mut g = QVec::zeros();
    for w in &route.wraps {
        g += state.joint_angle_grad(w.joint, geom)? * (w.sign * w.radius_mm);
    }
    Ok(g)
}

/// Excursion rate, mm/s.
pub fn excursion_rate(route: &TendonRoute, state: &LegState, geom: &LegGeometry) -> Result<f64> {
    Ok(excursion_gradient(route, state, geom)?.dot(&state.qd))
}

/// Series-elastic tension law, N. Unilateral routes never push, and their
/// damping term cannot create tension while slack.
pub fn tension(route: &TendonRoute, excursion_mm: f64, rate_mm_s: f64) -> f64 {
    let raw = route.k * excursion_mm + route.c * rate_mm_s;
    if route.unilateral {
        if excursion_mm <= 0.0 {
            0.0
        } else {
            raw.max(0.0)
        }
    } else {
        raw
    }
}

/// Angular transmission ratio from the ankle to `driven` implied by the
/// pulley radii: `n = r_ankle / r_driven`.
pub fn coupling_ratio(route: &TendonRoute, driven: Joint) -> Result<f64> {
    let sum_radius = |j: Joint| -> f64 {
        route
            .wraps
            .iter()
            .filter(|w| w.joint == j)
            .map(|w| w.radius_mm)
            .sum()
    };
    let r_ankle = sum_radius(Joint::Ankle);
    if r_ankle == 0.0 {
        return Err(Error::JointNotOnRoute { joint: Joint::Ankle.name() });
    }
    let r_driven = sum_radius(driven);
    if r_driven == 0.0 {
        return Err(Error::JointNotOnRoute { joint: driven.name() });
    }
    Ok(r_ankle / r_driven)
}

/// Per-route evaluation at a state.
#[derive(Debug, Clone, Copy)]
pub struct RouteLoad {
    pub excursion_mm: f64,
    pub rate_mm_s: f64,
    pub tension_n: f64,
}

/// Full network evaluation: per-route loads, the generalized torque vector
/// and the GST tension channel.
#[derive(Debug, Clone)]
pub struct NetworkLoads {
    pub routes: Vec<RouteLoad>,
    /// Generalized torques from all routes and the fold spring, N·mm.
    pub generalized: QVec,
    /// GST tension if the configuration has one, N.
    pub gst_tension_n: Option<f64>,
    /// Elastic energy stored in routes and fold spring, N·mm.
    pub elastic_energy_nmm: f64,
}

impl TendonNetwork {
    /// Generalized torques from the routes alone, N·mm:
    /// `tau = -sum tension * d(excursion)/dq`.
    pub fn joint_torques(&self, state: &LegState, geom: &LegGeometry) -> Result<QVec> {
        let mut tau = QVec::zeros();
        for route in &self.routes {
            let e = excursion(route, state, geom)?;
            let grad = excursion_gradient(route, state, geom)?;
            let t = tension(route, e, grad.dot(&state.qd));
            tau -= grad * t;
        }
        Ok(tau)
    }

    /// Torque of the local fold spring (zero when absent), N·mm.
    pub fn fold_spring_torque(&self, state: &LegState) -> f64 {
        match &self.fold_spring {
            Some(s) => -s.k * state.q[4] - s.c * state.qd[4],
            None => 0.0,
        }
    }

    /// Evaluate everything the integrator and the log need at one state.
    pub fn evaluate(&self, state: &LegState, geom: &LegGeometry) -> Result<NetworkLoads> {
        let mut loads = Vec::with_capacity(self.routes.len());
        let mut tau = QVec::zeros();
        let mut gst: Option<f64> = None;
        let mut pe = 0.0;
        for route in &self.routes {
            let e = excursion(route, state, geom)?;
            let grad = excursion_gradient(route, state, geom)?;
            let rate = grad.dot(&state.qd);
            let t = tension(route, e, rate);
            tau -= grad * t;
            pe += 0.5 * route.k * e.max(0.0).powi(2);
            if route.name == "gst" {
                gst = Some(t);
            }
            loads.push(RouteLoad {
                excursion_mm: e,
                rate_mm_s: rate,
                tension_n: t,
            });
        }
        if let Some(s) = &self.fold_spring {
            tau[4] += -s.k * state.q[4] - s.c * state.qd[4];
            pe += 0.5 * s.k * state.q[4] * state.q[4];
        }
        Ok(NetworkLoads {
            routes: loads,
            generalized: tau,
            gst_tension_n: gst,
            elastic_energy_nmm: pe,
        })
    }

    /// True when the GST and the extensor drive torque the MTP in opposite
    /// directions with both tensions above `threshold_n`. An extensor's
    /// proximal reaction (where the MTP is the route's driving end) loads the
    /// structure, not the antagonist, and is not counted. Logged as a
    /// parameterization warning by the runner, never an error.
    pub fn mtp_antagonism(&self, state: &LegState, geom: &LegGeometry, threshold_n: f64) -> Result<bool> {
        let mut gst_dir = 0.0;
        let mut ext_dir = 0.0;
        for route in &self.routes {
            let e = excursion(route, state, geom)?;
            let grad = excursion_gradient(route, state, geom)?;
            let t = tension(route, e, grad.dot(&state.qd));
            if t <= threshold_n {
                continue;
            }
            if route.name == "gst" {
                gst_dir = route
                    .wraps
                    .iter()
                    .filter(|w| w.joint == Joint::Mtp)
                    .map(|w| -w.sign * w.radius_mm * t)
                    .sum();
            } else if route.name.starts_with('e') {
                // Driven end only: the route's last wrap.
                if let Some(last) = route.wraps.last() {
                    if last.joint == Joint::Mtp {
                        ext_dir += -last.sign * last.radius_mm * t;
                    }
                }
            }
        }
        Ok(gst_dir * ext_dir < 0.0)
    }
}
