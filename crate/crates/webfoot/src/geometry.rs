//! Planar kinematic chain of the leg: link lengths and pulley radii, the
//! knee-coupled ankle, and the folding webbed foot with its marker points.
//!
//! Conventions: the sagittal plane is x (forward, direction of thrust) and
//! y (up). The hip is pinned at the origin. A link with absolute angle
//! `phi` (measured from straight down) points along
//! `d(phi) = (-sin phi, -cos phi)`, so positive joint angles sweep the
//! distal chain backward: the gait's power half drives the working joints
//! positive and the foot paddles toward -x. All lengths are in mm, angles
//! in rad.

use nalgebra::{SMatrix, SVector, Vector2};

use crate::error::{Error, Result};

/// Linearized ankle/knee transmission ratio.
pub const ANKLE_KNEE_RATIO: f64 = 4.0;

/// Hard-stop penetration allowance accepted by geometry contracts (rad).
pub const PENETRATION_TOL: f64 = 0.05;

/// Number of generalized coordinates: [hip, knee, mtp, ip, fold].
pub const NQ: usize = 5;

pub type QVec = SVector<f64, NQ>;
pub type Jac2 = SMatrix<f64, 2, NQ>;

/// Direction of a link with absolute angle `phi` (from straight down,
/// positive toward -x).
#[inline]
pub fn link_dir(phi: f64) -> Vector2<f64> {
    Vector2::new(-phi.sin(), -phi.cos())
}

/// In-plane normal of a link: `d/dphi` of [`link_dir`], so that a panel's
/// local `(along, normal)` frame composes as `d(phi + a) = cos(a) d + sin(a) n`.
#[inline]
pub fn link_normal(phi: f64) -> Vector2<f64> {
    Vector2::new(-phi.cos(), phi.sin())
}

/// Joints of the chain. The ankle is kinematically coupled to the knee and is
/// not a generalized coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Joint {
    Hip,
    Knee,
    Ankle,
    Mtp,
    Ip,
    Fold,
}

impl Joint {
    pub fn name(&self) -> &'static str {
        match self {
            Joint::Hip => "hip",
            Joint::Knee => "knee",
            Joint::Ankle => "ankle",
            Joint::Mtp => "mtp",
            Joint::Ip => "ip",
            Joint::Fold => "fold",
        }
    }
}

/// Rigid links of the chain, proximal to distal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Femur,
    Shank,
    Tarsus,
    Toe,
    FootCentral,
    FootSide,
}

pub const LINKS: [Link; 6] = [
    Link::Femur,
    Link::Shank,
    Link::Tarsus,
    Link::Toe,
    Link::FootCentral,
    Link::FootSide,
];

impl Link {
    pub fn index(&self) -> usize {
        match self {
            Link::Femur => 0,
            Link::Shank => 1,
            Link::Tarsus => 2,
            Link::Toe => 3,
            Link::FootCentral => 4,
            Link::FootSide => 5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Link::Femur => "femur",
            Link::Shank => "shank",
            Link::Tarsus => "tarsus",
            Link::Toe => "toe",
            Link::FootCentral => "foot_central",
            Link::FootSide => "foot_side",
        }
    }
}

/// Folding webbed foot: an equilateral triangle blade split into a central
/// panel and a pair of side panels collapsed onto one fold coordinate.
///
/// The planar blade runs from the IP joint along the triangle height. The
/// side panels hinge at `hinge_fraction` of the blade; fold angle 0 is flat
/// open (hard stop), `fold_max_rad` fully folded. One marker sits on the
/// central panel and two on the folded blade so that the three are collinear
/// exactly when the foot is flat.
#[derive(Debug, Clone, PartialEq)]
pub struct FootShape {
    /// Side length of the open triangle in mm.
    pub side_mm: f64,
    /// Fold hard-stop range upper bound in rad.
    pub fold_max_rad: f64,
    /// Fold line position as a fraction of the blade length.
    pub hinge_fraction: f64,
    /// Center-of-pressure offset of the central panel from the IP joint,
    /// mm. The proximal web panel straddles the toe joint, so its net
    /// pressure center sits just distal of the axis.
    pub central_cp_mm: f64,
    /// Marker positions: fraction of central span for the first, fractions of
    /// the side span for the other two.
    pub marker_fractions: [f64; 3],
}

impl FootShape {
    pub fn for_side(side_mm: f64) -> Self {
        FootShape {
            side_mm,
            fold_max_rad: 0.35,
            hinge_fraction: 0.35,
            central_cp_mm: 4.0,
            marker_fractions: [0.5, 0.25, 0.75],
        }
    }

    /// Blade length: height of the equilateral triangle, in mm.
    pub fn blade_len_mm(&self) -> f64 {
        self.side_mm * 3f64.sqrt() / 2.0
    }

    /// Hinge position along the blade from the IP end, in mm.
    pub fn hinge_mm(&self) -> f64 {
        self.blade_len_mm() * self.hinge_fraction
    }

    /// Length of the folded (side-panel) blade segment, in mm.
    pub fn side_blade_mm(&self) -> f64 {
        self.blade_len_mm() * (1.0 - self.hinge_fraction)
    }

    /// Open area of the full triangle, in mm^2.
    pub fn open_area_mm2(&self) -> f64 {
        3f64.sqrt() / 4.0 * self.side_mm * self.side_mm
    }

    /// Area of the central panel (one third of the open triangle), in mm^2.
    pub fn central_area_mm2(&self) -> f64 {
        self.open_area_mm2() / 3.0
    }
}

impl Default for FootShape {
    fn default() -> Self {
        FootShape::for_side(75.0)
    }
}

/// One drag panel in foot-local coordinates (x along the blade from the IP
/// joint, y the blade normal).
#[derive(Debug, Clone, Copy)]
pub struct PanelLocal {
    /// Effective drag reference area in mm^2.
    pub area_mm2: f64,
    /// Panel center in blade-local coordinates, mm.
    pub center: Vector2<f64>,
    /// Unit normal in blade-local coordinates.
    pub normal: Vector2<f64>,
    /// Angle of the panel surface relative to the blade axis (0 or -fold).
    pub angle_local: f64,
    /// Center position measured along the panel's own surface from its
    /// proximal end, mm. Used to place the panel on its carrying link.
    pub along_mm: f64,
    /// Which link carries the panel.
    pub link: Link,
}

/// Effective drag geometry of the foot at a given fold angle.
#[derive(Debug, Clone)]
pub struct FootPanels {
    pub total_area_mm2: f64,
    pub central: PanelLocal,
    pub side: PanelLocal,
}

/// Effective drag area and panel normals of the foot at `fold_angle`.
///
/// Area is monotone non-increasing in the fold angle: the open foot exposes
/// the full triangle, the fully folded foot only the central panel. Side
/// panel normals rotate with the fold. Fold angles outside the hard-stop
/// range by more than the penetration allowance are contract violations.
pub fn foot_effective_geometry(fold_angle: f64, shape: &FootShape) -> Result<FootPanels> {
    if fold_angle < -PENETRATION_TOL || fold_angle > shape.fold_max_rad + PENETRATION_TOL {
        return Err(Error::FoldOutOfRange {
            fold_rad: fold_angle,
            fold_max_rad: shape.fold_max_rad,
        });
    }
    let fold = fold_angle.clamp(0.0, shape.fold_max_rad);
    let open = shape.open_area_mm2();
    let central_area = shape.central_area_mm2();
    // Side pair folds out of the sweep: projection and mutual shadowing of
    // the collapsed panels drive the effective area to zero at the folded
    // stop, quadratically so a deeply folded foot is nearly force-free.
    let side_area = (open - central_area)
        * (std::f64::consts::FRAC_PI_2 * fold / shape.fold_max_rad)
            .cos()
            .powi(4);

    let hinge = shape.hinge_mm();
    let central_cp = shape.central_cp_mm;
    let side_len = shape.side_blade_mm();
    // Blade-local frame: a positive fold rotates the side blade by +fold, so
    // the tip trails the forward (recovery) sweep and the stop at zero takes
    // the power-stroke load.
    let u_side = Vector2::new(fold.cos(), fold.sin());
    let n_side = Vector2::new(-fold.sin(), fold.cos());

    Ok(FootPanels {
        total_area_mm2: central_area + side_area,
        central: PanelLocal {
            area_mm2: central_area,
            center: Vector2::new(central_cp, 0.0),
            normal: Vector2::new(0.0, 1.0),
            angle_local: 0.0,
            along_mm: central_cp,
            link: Link::FootCentral,
        },
        side: PanelLocal {
            area_mm2: side_area,
            center: Vector2::new(hinge, 0.0) + u_side * (side_len / 2.0),
            normal: n_side,
            angle_local: fold,
            along_mm: side_len / 2.0,
            link: Link::FootSide,
        },
    })
}

/// Reference pose of the coupled joints: the mid-stroke gait pose. Tendon
/// excursions and the ankle coupling are measured from here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePose {
    pub knee_rad: f64,
    pub ankle_rad: f64,
}

impl Default for ReferencePose {
    fn default() -> Self {
        ReferencePose {
            knee_rad: -0.3,
            ankle_rad: 0.3,
        }
    }
}

/// Ankle/knee coupling mode. The linear mode applies the fixed transmission
/// ratio; the four-bar mode solves the exact linkage closure.
#[derive(Debug, Clone, PartialEq)]
pub enum AnkleCoupling {
    Linear,
    FourBar(FourBarCoupling),
}

impl Default for AnkleCoupling {
    fn default() -> Self {
        AnkleCoupling::Linear
    }
}

/// Four-bar drive from the knee to the ankle.
///
/// Assumed side assignment: the crank (length `l_r`) is keyed to the femur at
/// the knee axis, the coupler rod (`l_rod`) connects it to a rocker (length
/// `l_c`) keyed to the tarsus at the ankle axis, and the shank (`l2`) is the
/// frame. Mounting angles are solved at construction so that the closure
/// holds at the reference pose with transmission ratio exactly
/// [`ANKLE_KNEE_RATIO`].
#[derive(Debug, Clone, PartialEq)]
pub struct FourBarCoupling {
    crank_mm: f64,
    rocker_mm: f64,
    coupler_mm: f64,
    frame_mm: f64,
    crank_base_rad: f64,
    rocker_base_rad: f64,
    branch: f64,
    reference: ReferencePose,
}

impl FourBarCoupling {
    /// Solve the mounting so the linkage closes at the reference pose with
    /// ratio [`ANKLE_KNEE_RATIO`].
    pub fn from_geometry(geom: &LegGeometry) -> Result<Self> {
        let crank = geom.l_r;
        let rocker = geom.l_c;
        let coupler = geom.l_rod;
        let frame = geom.l2;
        let reference = geom.reference;

        let closure = |alpha: f64, beta: f64| -> f64 {
            let c = Vector2::new(crank * alpha.cos(), crank * alpha.sin());
            let r = Vector2::new(frame + rocker * beta.cos(), rocker * beta.sin());
            (r - c).norm() - coupler
        };
        let ratio = |alpha: f64, beta: f64| -> f64 {
            let c = Vector2::new(crank * alpha.cos(), crank * alpha.sin());
            let r = Vector2::new(frame + rocker * beta.cos(), rocker * beta.sin());
            let d = r - c;
            let c_t = Vector2::new(-crank * alpha.sin(), crank * alpha.cos());
            let r_t = Vector2::new(-rocker * beta.sin(), rocker * beta.cos());
            (d.dot(&c_t)) / (d.dot(&r_t))
        };

        // Grid seed, then Newton on (closure, ratio - target).
        let mut best: Option<(f64, f64, f64)> = None;
        let n = 96;
        for i in 0..n {
            let alpha = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            for j in 0..n {
                let beta = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                let f1 = closure(alpha, beta);
                if f1.abs() > 0.15 * coupler {
                    continue;
                }
                let f2 = ratio(alpha, beta) - ANKLE_KNEE_RATIO;
                let score = f1.abs() / coupler + 0.5 * f2.abs();
                if best.map_or(true, |(s, _, _)| score < s) {
                    best = Some((score, alpha, beta));
                }
            }
        }
        let (_, mut alpha, mut beta) = best.ok_or(Error::NoClosure {
            knee_rad: reference.knee_rad,
        })?;

        for _ in 0..200 {
            let f1 = closure(alpha, beta);
            let f2 = ratio(alpha, beta) - ANKLE_KNEE_RATIO;
            if f1.abs() < 1e-12 * coupler && f2.abs() < 1e-12 {
                break;
            }
            let h = 1e-7;
            let j11 = (closure(alpha + h, beta) - closure(alpha - h, beta)) / (2.0 * h);
            let j12 = (closure(alpha, beta + h) - closure(alpha, beta - h)) / (2.0 * h);
            let j21 = (ratio(alpha + h, beta) - ratio(alpha - h, beta)) / (2.0 * h);
            let j22 = (ratio(alpha, beta + h) - ratio(alpha, beta - h)) / (2.0 * h);
            let det = j11 * j22 - j12 * j21;
            if det.abs() < 1e-14 {
                break;
            }
            alpha -= (f1 * j22 - f2 * j12) / det;
            beta -= (j11 * f2 - j21 * f1) / det;
        }

        if closure(alpha, beta).abs() > 1e-9 * coupler
            || (ratio(alpha, beta) - ANKLE_KNEE_RATIO).abs() > 1e-9
        {
            return Err(Error::NoClosure {
                knee_rad: reference.knee_rad,
            });
        }

        // Branch sign of the rocker-tip triangle, for continuation.
        let c = Vector2::new(crank * alpha.cos(), crank * alpha.sin());
        let base = Vector2::new(frame, 0.0);
        let r = base + Vector2::new(rocker * beta.cos(), rocker * beta.sin());
        let dc = c - base;
        let dr = r - base;
        let branch = (dc.x * dr.y - dc.y * dr.x).signum();

        Ok(FourBarCoupling {
            crank_mm: crank,
            rocker_mm: rocker,
            coupler_mm: coupler,
            frame_mm: frame,
            crank_base_rad: alpha,
            rocker_base_rad: beta,
            branch,
            reference,
        })
    }

    /// Rocker angle for a crank angle, by circle intersection.
    fn solve_beta(&self, alpha: f64) -> Result<f64> {
        let c = Vector2::new(self.crank_mm * alpha.cos(), self.crank_mm * alpha.sin());
        let base = Vector2::new(self.frame_mm, 0.0);
        let dc = c - base;
        let d = dc.norm();
        let cos_gamma =
            (self.rocker_mm * self.rocker_mm + d * d - self.coupler_mm * self.coupler_mm)
                / (2.0 * self.rocker_mm * d);
        if !(-1.0..=1.0).contains(&cos_gamma) {
            return Err(Error::NoClosure { knee_rad: f64::NAN });
        }
        let gamma = cos_gamma.acos();
        let base_angle = dc.y.atan2(dc.x);
        Ok(base_angle + self.branch * gamma)
    }

    pub fn ankle(&self, theta_knee: f64) -> Result<f64> {
        let alpha = self.crank_base_rad + (theta_knee - self.reference.knee_rad);
        let beta = self.solve_beta(alpha).map_err(|_| Error::NoClosure {
            knee_rad: theta_knee,
        })?;
        Ok(self.reference.ankle_rad + (beta - self.rocker_base_rad))
    }

    /// Ankle angle with first and second derivatives w.r.t. the knee angle.
    pub fn ankle_derivatives(&self, theta_knee: f64) -> Result<(f64, f64, f64)> {
        let a = self.ankle(theta_knee)?;
        let h = 1e-6;
        let ap = self.ankle(theta_knee + h)?;
        let am = self.ankle(theta_knee - h)?;
        let d1 = (ap - am) / (2.0 * h);
        let d2 = (ap - 2.0 * a + am) / (h * h);
        Ok((a, d1, d2))
    }
}

/// Mechanical constants of the leg: link lengths, pulley radii, foot shape,
/// reference pose and ankle coupling mode. The single source of geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct LegGeometry {
    /// Femur length, mm.
    pub l1: f64,
    /// Shank length, mm.
    pub l2: f64,
    /// Tarsus length, mm.
    pub l3: f64,
    /// Toe segment length, mm.
    pub l4: f64,
    /// Webbed-foot triangle side, mm.
    pub l_foot: f64,
    /// Four-bar coupler rod length, mm.
    pub l_rod: f64,
    /// Four-bar rocker length at the ankle, mm.
    pub l_c: f64,
    /// Four-bar crank length at the knee, mm.
    pub l_r: f64,
    /// GST pulley radius at the knee, mm.
    pub r_g1: f64,
    /// GST proximal pulley radius at the ankle, mm.
    pub r_g2_p: f64,
    /// GST distal pulley radius at the ankle, mm.
    pub r_g2_d: f64,
    /// GST pulley radius at the MTP, mm.
    pub r_g3: f64,
    /// GST pulley radius at the IP, mm.
    pub r_g4: f64,
    /// Extensor E1 pulley radius at the ankle, mm.
    pub r_ext0: f64,
    /// Extensor pulley radius at the MTP, mm.
    pub r_e2_1: f64,
    /// Extensor pulley radius at the IP / fold, mm.
    pub r_e2_2: f64,
    /// Recalculated ankle pulley radius for the half-tendon variant, mm.
    pub r_g2_p_half: f64,
    /// Foot blade shape and fold range.
    pub foot: FootShape,
    /// Reference (mid-stroke) pose.
    pub reference: ReferencePose,
    /// Ankle coupling mode.
    pub ankle_coupling: AnkleCoupling,
}

impl Default for LegGeometry {
    fn default() -> Self {
        LegGeometry {
            l1: 79.0,
            l2: 120.0,
            l3: 70.0,
            l4: 30.0,
            l_foot: 75.0,
            l_rod: 112.0,
            l_c: 11.0,
            l_r: 40.0,
            r_g1: 7.5,
            r_g2_p: 20.0,
            r_g2_d: 10.0,
            r_g3: 10.0,
            r_g4: 5.0,
            r_ext0: 12.5,
            r_e2_1: 8.0,
            r_e2_2: 3.0,
            r_g2_p_half: 20.0,
            foot: FootShape::default(),
            reference: ReferencePose::default(),
            ankle_coupling: AnkleCoupling::default(),
        }
    }
}

impl LegGeometry {
    /// All lengths and radii strictly positive.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("l1", self.l1),
            ("l2", self.l2),
            ("l3", self.l3),
            ("l4", self.l4),
            ("l_foot", self.l_foot),
            ("l_rod", self.l_rod),
            ("l_c", self.l_c),
            ("l_r", self.l_r),
            ("r_g1", self.r_g1),
            ("r_g2_p", self.r_g2_p),
            ("r_g2_d", self.r_g2_d),
            ("r_g3", self.r_g3),
            ("r_g4", self.r_g4),
            ("r_ext0", self.r_ext0),
            ("r_e2_1", self.r_e2_1),
            ("r_e2_2", self.r_e2_2),
            ("r_g2_p_half", self.r_g2_p_half),
            ("foot side", self.foot.side_mm),
        ];
        for (name, v) in fields {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig {
                    what: format!("geometry {name} = {v} must be > 0"),
                });
            }
        }
        if !(self.foot.fold_max_rad > 0.0 && self.foot.fold_max_rad < std::f64::consts::PI) {
            return Err(Error::InvalidConfig {
                what: format!("fold_max {} must be in (0, pi)", self.foot.fold_max_rad),
            });
        }
        Ok(())
    }

    /// Ankle angle with derivatives w.r.t. the knee coordinate.
    pub fn ankle_state(&self, theta_knee: f64) -> Result<(f64, f64, f64)> {
        match &self.ankle_coupling {
            AnkleCoupling::Linear => Ok((
                self.reference.ankle_rad
                    + ANKLE_KNEE_RATIO * (theta_knee - self.reference.knee_rad),
                ANKLE_KNEE_RATIO,
                0.0,
            )),
            AnkleCoupling::FourBar(fb) => fb.ankle_derivatives(theta_knee),
        }
    }
}

/// Ankle angle for a knee angle under the configured coupling mode.
pub fn ankle_from_knee(theta_knee: f64, geom: &LegGeometry) -> Result<f64> {
    geom.ankle_state(theta_knee).map(|(a, _, _)| a)
}

/// Generalized state: coordinates `[hip, knee, mtp, ip, fold]`, their rates,
/// and time. The ankle angle is dependent, not a state coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegState {
    /// Joint angles in rad.
    pub q: QVec,
    /// Joint angular velocities in rad/s.
    pub qd: QVec,
    /// Time in s.
    pub t: f64,
}

impl LegState {
    pub fn new(q: [f64; NQ], qd: [f64; NQ], t: f64) -> Self {
        LegState {
            q: QVec::from_column_slice(&q),
            qd: QVec::from_column_slice(&qd),
            t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().all(|v| v.is_finite())
            && self.qd.iter().all(|v| v.is_finite())
            && self.t.is_finite()
    }

    /// Angle of a joint, resolving the dependent ankle.
    pub fn joint_angle(&self, joint: Joint, geom: &LegGeometry) -> Result<f64> {
        Ok(match joint {
            Joint::Hip => self.q[0],
            Joint::Knee => self.q[1],
            Joint::Ankle => geom.ankle_state(self.q[1])?.0,
            Joint::Mtp => self.q[2],
            Joint::Ip => self.q[3],
            Joint::Fold => self.q[4],
        })
    }

    /// Gradient of a joint angle w.r.t. the generalized coordinates.
    pub fn joint_angle_grad(&self, joint: Joint, geom: &LegGeometry) -> Result<QVec> {
        let mut g = QVec::zeros();
        match joint {
            Joint::Hip => g[0] = 1.0,
            Joint::Knee => g[1] = 1.0,
            Joint::Ankle => g[1] = geom.ankle_state(self.q[1])?.1,
            Joint::Mtp => g[2] = 1.0,
            Joint::Ip => g[3] = 1.0,
            Joint::Fold => g[4] = 1.0,
        }
        Ok(g)
    }
}

/// World-frame drag panel.
#[derive(Debug, Clone, Copy)]
pub struct WorldPanel {
    pub link: Link,
    /// Center position, mm.
    pub center: Vector2<f64>,
    /// Unit normal.
    pub normal: Vector2<f64>,
    /// Effective area, mm^2.
    pub area_mm2: f64,
    /// Center offset along the carrying link from its proximal origin, mm.
    pub along_mm: f64,
}

/// Named joint origins of the assembled chain, mm.
#[derive(Debug, Clone, Copy)]
pub struct JointPoints {
    pub hip: Vector2<f64>,
    pub knee: Vector2<f64>,
    pub ankle: Vector2<f64>,
    pub mtp: Vector2<f64>,
    pub ip: Vector2<f64>,
    pub hinge: Vector2<f64>,
    pub tip: Vector2<f64>,
}

/// Assembled frames of the chain with the partial derivatives needed for
/// velocities, generalized forces and the mass matrix.
#[derive(Debug, Clone)]
pub struct Frames {
    /// Absolute link angles, indexed by [`Link::index`].
    pub link_angle: [f64; 6],
    /// `d(angle)/dq` per link.
    pub link_w: [QVec; 6],
    /// `d/dt (link_w) * qd` contribution per link (nonzero only through the
    /// four-bar second derivative).
    pub link_w_dot_qd_coeff: [f64; 6],
    /// Proximal origin of each link, mm.
    pub link_origin: [Vector2<f64>; 6],
    /// `d(origin)/dq` per link.
    pub link_d_origin: [Jac2; 6],
    pub joints: JointPoints,
    /// Foot marker world positions, mm.
    pub markers: [Vector2<f64>; 3],
    /// Foot drag panels in world coordinates.
    pub foot_panels: [WorldPanel; 2],
    /// Fold angle clamped into the hard-stop range, rad.
    pub fold_clamped: f64,
    /// Ankle coupling derivative at this state.
    pub ankle_d1: f64,
    /// Ankle coupling second derivative at this state.
    pub ankle_d2: f64,
}

/// Assemble world frames for a state. Total over finite states; the fold
/// angle is clamped into its range for panel-area purposes.
pub fn forward_kinematics(state: &LegState, geom: &LegGeometry) -> Result<Frames> {
    let (ankle, a1, a2) = geom.ankle_state(state.q[1])?;
    let q = &state.q;

    // Absolute angles.
    let phi_femur = q[0];
    let phi_shank = q[0] + q[1];
    let phi_tarsus = phi_shank + ankle;
    let phi_toe = phi_tarsus + q[2];
    let phi_footc = phi_toe + q[3];
    let phi_foots = phi_footc + q[4];
    let link_angle = [phi_femur, phi_shank, phi_tarsus, phi_toe, phi_footc, phi_foots];

    // d(angle)/dq rows.
    let mut link_w = [QVec::zeros(); 6];
    link_w[0][0] = 1.0;
    link_w[1][0] = 1.0;
    link_w[1][1] = 1.0;
    link_w[2][0] = 1.0;
    link_w[2][1] = 1.0 + a1;
    link_w[3] = link_w[2];
    link_w[3][2] = 1.0;
    link_w[4] = link_w[3];
    link_w[4][3] = 1.0;
    link_w[5] = link_w[4];
    link_w[5][4] = 1.0;

    // Velocity-independent coefficient of qd[1]^2 in d/dt(w)·qd.
    let w_dot = [0.0, 0.0, a2, a2, a2, a2];

    // Chain the origins with their Jacobians.
    let fold = state.q[4].clamp(0.0, geom.foot.fold_max_rad);
    let hinge_mm = geom.foot.hinge_mm();
    let seg_len = [geom.l1, geom.l2, geom.l3, geom.l4, hinge_mm];

    let mut origin = [Vector2::zeros(); 6];
    let mut d_origin = [Jac2::zeros(); 6];
    for i in 1..6 {
        let dir = link_dir(link_angle[i - 1]);
        let ddir = link_normal(link_angle[i - 1]);
        origin[i] = origin[i - 1] + dir * seg_len[i - 1];
        d_origin[i] = d_origin[i - 1] + ddir * seg_len[i - 1] * link_w[i - 1].transpose();
    }

    let tip = origin[5] + link_dir(phi_foots) * geom.foot.side_blade_mm();
    let joints = JointPoints {
        hip: origin[0],
        knee: origin[1],
        ankle: origin[2],
        mtp: origin[3],
        ip: origin[4],
        hinge: origin[5],
        tip,
    };

    // Markers: one on the central panel axis, two on the folded blade.
    let f = &geom.foot;
    let m1 = origin[4] + link_dir(phi_footc) * (f.marker_fractions[0] * hinge_mm);
    let m2 = origin[5] + link_dir(phi_foots) * (f.marker_fractions[1] * f.side_blade_mm());
    let m3 = origin[5] + link_dir(phi_foots) * (f.marker_fractions[2] * f.side_blade_mm());

    // World panels from the blade-local effective geometry.
    let panels = foot_effective_geometry(fold, f)?;
    let to_world = |p: &PanelLocal| -> WorldPanel {
        let (phi, orig) = match p.link {
            Link::FootCentral => (phi_footc, origin[4]),
            _ => (phi_foots, origin[5]),
        };
        WorldPanel {
            link: p.link,
            center: orig + link_dir(phi) * p.along_mm,
            normal: link_normal(phi),
            area_mm2: p.area_mm2,
            along_mm: p.along_mm,
        }
    };

    Ok(Frames {
        link_angle,
        link_w,
        link_w_dot_qd_coeff: w_dot,
        link_origin: origin,
        link_d_origin: d_origin,
        joints,
        markers: [m1, m2, m3],
        foot_panels: [to_world(&panels.central), to_world(&panels.side)],
        fold_clamped: fold,
        ankle_d1: a1,
        ankle_d2: a2,
    })
}

impl Frames {
    /// Position of a point on a link at `along_mm` from its proximal origin.
    pub fn point(&self, link: Link, along_mm: f64) -> Vector2<f64> {
        let i = link.index();
        self.link_origin[i] + link_dir(self.link_angle[i]) * along_mm
    }

    /// Jacobian `dp/dq` (2x5, mm/rad) of such a point.
    pub fn point_jacobian(&self, link: Link, along_mm: f64) -> Jac2 {
        let i = link.index();
        self.link_d_origin[i]
            + link_normal(self.link_angle[i]) * along_mm * self.link_w[i].transpose()
    }

    /// Velocity of such a point, mm/s.
    pub fn point_velocity(&self, link: Link, along_mm: f64, qd: &QVec) -> Vector2<f64> {
        self.point_jacobian(link, along_mm) * qd
    }

    /// Absolute angular rate of a link, rad/s.
    pub fn link_rate(&self, link: Link, qd: &QVec) -> f64 {
        self.link_w[link.index()].dot(qd)
    }
}

/// Normalized collinearity residual of three points: `|sin|` of the angle
/// between the two chords. Zero iff collinear.
pub fn collinearity_residual(p: &[Vector2<f64>; 3]) -> f64 {
    let a = p[1] - p[0];
    let b = p[2] - p[0];
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (a.x * b.y - a.y * b.x).abs() / denom
}
