//! Quasi-steady drag on the webbed-foot panels and optional leg-link strips,
//! mapped to generalized forces through the chain Jacobian.
//!
//! Each wetted panel feels `F = -1/2 rho C_d A v_n |v_n| n` at its center
//! (optionally strip-integrated along its span); the horizontal resultant is
//! the simulated thrust-sensor signal, forward positive.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::geometry::{link_normal, Frames, LegGeometry, LegState, Link, QVec};

const MM_PER_M: f64 = 1000.0;
const MM2_PER_M2: f64 = 1e6;

/// Per-link strip drag switch and reference area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkDrag {
    pub enabled: bool,
    /// Reference area of the submerged strip, mm^2.
    pub area_mm2: f64,
}

/// Fluid and wetted-surface parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroParams {
    /// Fluid density, kg/m^3.
    pub rho: f64,
    /// Drag coefficient of a plate normal to the flow.
    pub c_d: f64,
    /// Center-of-pressure offset from the panel centroid as a fraction of the
    /// panel span.
    pub cp_fraction: f64,
    /// Strips per panel; 1 applies the whole panel at its centroid.
    pub strips: usize,
    /// Link strips: femur, shank, tarsus, toe. The water line sits at the
    /// knee, so the femur and shank default to dry.
    pub link_drag: [LinkDrag; 4],
}

impl Default for HydroParams {
    fn default() -> Self {
        HydroParams {
            rho: 1000.0,
            c_d: 1.28,
            cp_fraction: 0.0,
            strips: 1,
            // The tank is filled to the knee joint: the shank and everything
            // distal of it are wetted, the femur stays dry.
            link_drag: [
                LinkDrag { enabled: false, area_mm2: 0.0 },
                LinkDrag { enabled: true, area_mm2: 1000.0 },
                LinkDrag { enabled: true, area_mm2: 700.0 },
                LinkDrag { enabled: true, area_mm2: 240.0 },
            ],
        }
    }
}

impl HydroParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::InvalidConfig {
                what: format!("fluid density {} must be > 0", self.rho),
            });
        }
        if !(self.c_d > 0.0) {
            return Err(Error::InvalidConfig {
                what: format!("drag coefficient {} must be > 0", self.c_d),
            });
        }
        if self.strips == 0 {
            return Err(Error::InvalidConfig {
                what: "strip count must be >= 1".into(),
            });
        }
        for ld in &self.link_drag {
            if ld.area_mm2 < 0.0 {
                return Err(Error::InvalidConfig {
                    what: format!("link drag area {} must be >= 0", ld.area_mm2),
                });
            }
        }
        Ok(())
    }
}

/// Quasi-steady normal-plate drag force on one panel, N.
///
/// `velocity` in m/s, `normal` a unit vector, `area` in mm^2. Returns the
/// force; the caller knows the application point.
pub fn panel_drag(velocity: Vector2<f64>, normal: Vector2<f64>, area_mm2: f64, params: &HydroParams) -> Vector2<f64> {
    let v_n = velocity.dot(&normal);
    normal * (-0.5 * params.rho * params.c_d * (area_mm2 / MM2_PER_M2) * v_n * v_n.abs())
}

/// One applied drag force, for oracles and inspection.
#[derive(Debug, Clone, Copy)]
pub struct AppliedDrag {
    pub link: Link,
    /// Application point offset along the link, mm.
    pub along_mm: f64,
    /// Application point, mm.
    pub point: Vector2<f64>,
    /// Force, N.
    pub force: Vector2<f64>,
}

/// Generalized drag forces plus the thrust-sensor resultant.
#[derive(Debug, Clone)]
pub struct DragLoads {
    /// Generalized forces, N·mm per coordinate.
    pub generalized: QVec,
    /// Horizontal resultant on the body, N; forward positive.
    pub thrust_n: f64,
    pub applied: Vec<AppliedDrag>,
}

struct Span {
    link: Link,
    start_mm: f64,
    len_mm: f64,
    area_mm2: f64,
}

fn wetted_spans(frames: &Frames, geom: &LegGeometry, params: &HydroParams) -> Vec<Span> {
    let mut spans = Vec::with_capacity(6);
    let link_len = [geom.l1, geom.l2, geom.l3, geom.l4];
    let links = [Link::Femur, Link::Shank, Link::Tarsus, Link::Toe];
    for i in 0..4 {
        let ld = params.link_drag[i];
        if ld.enabled && ld.area_mm2 > 0.0 {
            spans.push(Span {
                link: links[i],
                start_mm: 0.0,
                len_mm: link_len[i],
                area_mm2: ld.area_mm2,
            });
        }
    }
    // Foot panels carry their fold-dependent effective area. The central
    // panel straddles the IP joint; its pressure center defines a short
    // span so strip refinement stays near the axis.
    let central_cp = geom.foot.central_cp_mm;
    let side_len = geom.foot.side_blade_mm();
    spans.push(Span {
        link: Link::FootCentral,
        start_mm: 0.0,
        len_mm: 2.0 * central_cp,
        area_mm2: frames.foot_panels[0].area_mm2,
    });
    spans.push(Span {
        link: Link::FootSide,
        start_mm: 0.0,
        len_mm: side_len,
        area_mm2: frames.foot_panels[1].area_mm2,
    });
    spans
}

/// Drag over all wetted panels, as generalized forces (virtual work through
/// the point Jacobians) and the horizontal thrust resultant.
pub fn leg_drag(state: &LegState, frames: &Frames, geom: &LegGeometry, params: &HydroParams) -> DragLoads {
    let mut generalized = QVec::zeros();
    let mut thrust = 0.0;
    let mut applied = Vec::new();

    let n_strips = params.strips.max(1);
    for span in wetted_spans(frames, geom, params) {
        if span.area_mm2 <= 0.0 {
            continue;
        }
        let normal = link_normal(frames.link_angle[span.link.index()]);
        let strip_len = span.len_mm / n_strips as f64;
        let strip_area = span.area_mm2 / n_strips as f64;
        for i in 0..n_strips {
            let along =
                span.start_mm + (i as f64 + 0.5) * strip_len + params.cp_fraction * strip_len;
            let v = frames.point_velocity(span.link, along, &state.qd) / MM_PER_M;
            let force = panel_drag(v, normal, strip_area, params);
            let jac = frames.point_jacobian(span.link, along);
            generalized += jac.transpose() * force;
            thrust += force.x;
            applied.push(AppliedDrag {
                link: span.link,
                along_mm: along,
                point: frames.point(span.link, along),
                force,
            });
        }
    }

    DragLoads {
        generalized,
        thrust_n: thrust,
        applied,
    }
}

/// Simulated one-axis thrust sensor: horizontal component of the total
/// hydrodynamic reaction carried to the body, forward positive.
pub fn body_thrust(state: &LegState, frames: &Frames, geom: &LegGeometry, params: &HydroParams) -> f64 {
    leg_drag(state, frames, geom, params).thrust_n
}
