//! Complementarity-free contact resolution.
//!
//! Each contact is expanded into linear facets of the polyhedral dual friction
//! cone. A facet row is `J̃ = Jₙ − μˢ·(d⁽ʲ⁾)ᵀJₛ` for a channel
//! `s ∈ {tangential, torsional, rolling}` and a unit direction `d⁽ʲ⁾` of a
//! symmetric set. Every facet gets a closed-form impulse
//!
//! ```text
//! λ = max(0, −K·(J̃·v_smooth·dt + φ) − D·J̃·v_smooth)
//! ```
//!
//! with `K = k_user·M(φ)/dt` and `D = d_user·M(φ)/dt`, and the impulses are
//! mapped back through `J̃ᵀ`. Facets never interact, so the solve is a single
//! pass whose cost is linear in the number of facets.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::collision::Contact;
use crate::error::CoreError;
use crate::math::{Mat3, Vec3};
use crate::scene::ImpedanceConfig;

/// Friction channel of a facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    Tangential,
    Torsional,
    Rolling,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Tangential, Channel::Torsional, Channel::Rolling];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Unit directions of the symmetric facet set for `channel`, in tangent-frame coordinates.
///
/// Two-dimensional channels use `n` equally spaced angles; torsion is one-dimensional
/// and always yields `{+1, −1}` (second coordinate zero).
pub fn facet_directions(channel: Channel, n: usize) -> Result<Vec<[f64; 2]>, CoreError> {
    match channel {
        Channel::Torsional => Ok(alloc::vec![[1.0, 0.0], [-1.0, 0.0]]),
        Channel::Tangential | Channel::Rolling => {
            if n < 2 || n % 2 != 0 {
                return Err(CoreError::Config(alloc::format!("{channel:?} facet count must be even and >= 2, got {n}")));
            }
            Ok((0..n)
                .map(|j| {
                    let ang = 2.0 * PI * j as f64 / n as f64;
                    // Snap the quadrant points so symmetric sets cancel exactly.
                    [snap(libm::cos(ang)), snap(libm::sin(ang))]
                })
                .collect())
        }
    }
}

fn snap(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else if (x.abs() - 1.0).abs() < 1e-15 {
        x.signum()
    } else {
        x
    }
}

/// Gap-scaling shape function: `m·(x/m)^p` below the midpoint, `1 − (1−m)·((1−x)/(1−m))^p` above.
///
/// `x` must already be clamped to `[0, 1]`.
pub fn scaling_gamma(x: f64, m: f64, p: f64) -> f64 {
    if x < m {
        m * libm::pow(x / m, p)
    } else {
        1.0 - (1.0 - m) * libm::pow((1.0 - x) / (1.0 - m), p)
    }
}

/// Gap-dependent impedance ratio `r(|φ|) ∈ [r_min, r_max]`.
pub fn scaling_r(phi: f64, cfg: &ImpedanceConfig) -> f64 {
    let x = (phi.abs() / cfg.width).clamp(0.0, 1.0);
    cfg.r_min + (cfg.r_max - cfg.r_min) * scaling_gamma(x, cfg.midpoint, cfg.power)
}

/// `trace(J M⁻¹ Jᵀ)` of the 3-row linear point Jacobian `J = [I, −skew(r)]` of one body.
pub fn point_inverse_inertia_trace(inv_mass: f64, inv_inertia_world: &Mat3, r: Vec3) -> f64 {
    3.0 * inv_mass + r.norm_squared() * inv_inertia_world.trace() - r.dot(inv_inertia_world.mul_vec(r))
}

/// Constraint-space impedance `M(φ) = r/(1−r) / (tr_a + tr_b)`.
pub fn constraint_impedance(r: f64, trace_a: f64, trace_b: f64) -> Result<f64, CoreError> {
    let tr = trace_a + trace_b;
    if !(tr > 0.0) {
        return Err(CoreError::Internal("contact between two static bodies"));
    }
    Ok(r / (1.0 - r) / tr)
}

/// Per-contact stiffness and damping shared by all of that contact's facets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceGains {
    pub stiffness: f64,
    pub damping: f64,
    pub m_phi: f64,
}

impl ImpedanceGains {
    pub fn new(cfg: &ImpedanceConfig, m_phi: f64, dt: f64) -> Self {
        ImpedanceGains { stiffness: cfg.k_user * m_phi / dt, damping: cfg.d_user * m_phi / dt, m_phi }
    }
}

/// Closed-form facet impulse from the facet velocity `s = J̃·v_smooth` and gap `φ̃`.
#[inline]
pub fn impulse_from_violation(s: f64, phi: f64, gains: &ImpedanceGains, dt: f64) -> f64 {
    let lambda = -gains.stiffness * (s * dt + phi) - gains.damping * s;
    if lambda > 0.0 {
        lambda
    } else {
        0.0
    }
}

/// Jacobian blocks of one contact.
///
/// Rows are expressed as `(linear, angular_a, angular_b)`: the relative quantity
/// is `linear·(v_b − v_a) + angular_b·ω_b + angular_a·ω_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactJacobian {
    pub normal: Vec3,
    pub tangent1: Vec3,
    pub tangent2: Vec3,
    /// Contact point relative to body A's centre of mass.
    pub r_a: Vec3,
    /// Contact point relative to body B's centre of mass.
    pub r_b: Vec3,
}

/// One row over the two incident bodies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianRow {
    pub linear: Vec3,
    pub angular_a: Vec3,
    pub angular_b: Vec3,
}

impl JacobianRow {
    #[inline]
    pub fn apply(&self, va: Vec3, wa: Vec3, vb: Vec3, wb: Vec3) -> f64 {
        self.linear.dot(vb - va) + self.angular_a.dot(wa) + self.angular_b.dot(wb)
    }
}

impl ContactJacobian {
    pub fn new(contact: &Contact, com_a: Vec3, com_b: Vec3) -> Self {
        ContactJacobian {
            normal: contact.normal,
            tangent1: contact.tangent1,
            tangent2: contact.tangent2,
            r_a: contact.point - com_a,
            r_b: contact.point - com_b,
        }
    }

    /// Row measuring the relative point velocity along `dir`.
    pub fn linear_row(&self, dir: Vec3) -> JacobianRow {
        JacobianRow { linear: dir, angular_a: -self.r_a.cross(dir), angular_b: self.r_b.cross(dir) }
    }

    /// Row measuring the relative angular velocity along `dir`.
    pub fn angular_row(&self, dir: Vec3) -> JacobianRow {
        JacobianRow { linear: Vec3::ZERO, angular_a: -dir, angular_b: dir }
    }

    /// `(v_c, ω_c)` in contact-frame coordinates `(n, t1, t2)`.
    pub fn contact_velocity(&self, va: Vec3, wa: Vec3, vb: Vec3, wb: Vec3) -> (Vec3, Vec3) {
        let lin = |d: Vec3| self.linear_row(d).apply(va, wa, vb, wb);
        let ang = |d: Vec3| self.angular_row(d).apply(va, wa, vb, wb);
        (
            Vec3::new(lin(self.normal), lin(self.tangent1), lin(self.tangent2)),
            Vec3::new(ang(self.normal), ang(self.tangent1), ang(self.tangent2)),
        )
    }

    /// Facet row `Jₙ − μ·(d ⋅ Jₛ)` for channel `s` and 2D direction `d`.
    pub fn facet_row(&self, channel: Channel, mu: f64, d: [f64; 2]) -> JacobianRow {
        let n = self.normal;
        match channel {
            Channel::Tangential => {
                let u = n - (self.tangent1 * d[0] + self.tangent2 * d[1]) * mu;
                self.linear_row(u)
            }
            Channel::Torsional => {
                let mut row = self.linear_row(n);
                let a = n * (-mu * d[0]);
                row.angular_a -= a;
                row.angular_b += a;
                row
            }
            Channel::Rolling => {
                let mut row = self.linear_row(n);
                let a = (self.tangent1 * d[0] + self.tangent2 * d[1]) * (-mu);
                row.angular_a -= a;
                row.angular_b += a;
                row
            }
        }
    }
}

/// One linearized face of a contact's dual cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualConeFacet {
    pub contact: usize,
    pub channel: Channel,
    pub dir_index: usize,
    /// Unit direction in tangent-frame coordinates (torsion: `[±1, 0]`).
    pub dir: [f64; 2],
    pub row: JacobianRow,
    pub phi: f64,
}

/// Direction sets for the three channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetLayout {
    pub tangential: Vec<[f64; 2]>,
    pub torsional: Vec<[f64; 2]>,
    pub rolling: Vec<[f64; 2]>,
}

impl FacetLayout {
    pub fn new(n_facets_t: usize, n_facets_rol: usize) -> Result<Self, CoreError> {
        if n_facets_t < 4 {
            return Err(CoreError::Config(alloc::format!("tangential facet count must be >= 4, got {n_facets_t}")));
        }
        Ok(FacetLayout {
            tangential: facet_directions(Channel::Tangential, n_facets_t)?,
            torsional: facet_directions(Channel::Torsional, 2)?,
            rolling: facet_directions(Channel::Rolling, n_facets_rol)?,
        })
    }

    pub fn directions(&self, channel: Channel) -> &[[f64; 2]] {
        match channel {
            Channel::Tangential => &self.tangential,
            Channel::Torsional => &self.torsional,
            Channel::Rolling => &self.rolling,
        }
    }
}

impl Default for FacetLayout {
    fn default() -> Self {
        FacetLayout::new(4, 4).expect("default facet counts are valid")
    }
}

fn channel_mu(contact: &Contact, channel: Channel) -> f64 {
    match channel {
        Channel::Tangential => contact.friction.mu_t,
        Channel::Torsional => contact.friction.mu_tor,
        Channel::Rolling => contact.friction.mu_rol,
    }
}

/// Appends the facets of one contact, ordered by channel then direction index.
///
/// A channel with zero friction collapses to a single normal-only facet, since
/// all of its directional rows would coincide.
pub fn build_facets(index: usize, contact: &Contact, jac: &ContactJacobian, layout: &FacetLayout, out: &mut Vec<DualConeFacet>) {
    for channel in Channel::ALL {
        let mu = channel_mu(contact, channel);
        let dirs = layout.directions(channel);
        let count = if mu == 0.0 { 1 } else { dirs.len() };
        for (j, &d) in dirs.iter().enumerate().take(count) {
            out.push(DualConeFacet {
                contact: index,
                channel,
                dir_index: j,
                dir: d,
                row: jac.facet_row(channel, mu, d),
                phi: contact.phi,
            });
        }
    }
}

/// Impulse for one facet given the smooth-predicted velocities of its two bodies.
pub fn facet_impulse(facet: &DualConeFacet, va: Vec3, wa: Vec3, vb: Vec3, wb: Vec3, gains: &ImpedanceGains, dt: f64) -> f64 {
    let s = facet.row.apply(va, wa, vb, wb);
    impulse_from_violation(s, facet.phi, gains, dt)
}

/// Per-body generalized impulse `p = Σ J̃ᵀλ`, linear and angular parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeneralizedImpulse {
    pub linear: Vec3,
    pub angular: Vec3,
}

/// Accumulates `J̃ᵀλ` into `out` (indexed by body) in facet order.
///
/// `bodies_of(contact)` returns `(body_a, body_b)`; entries for static bodies are
/// written but never read back.
pub fn accumulate_impulses(
    facets: &[DualConeFacet],
    lambdas: &[f64],
    contacts: &[Contact],
    out: &mut [GeneralizedImpulse],
) {
    for p in out.iter_mut() {
        *p = GeneralizedImpulse::default();
    }
    for (f, &lambda) in facets.iter().zip(lambdas) {
        if lambda == 0.0 {
            continue;
        }
        let c = &contacts[f.contact];
        let pa = &mut out[c.body_a];
        pa.linear -= f.row.linear * lambda;
        pa.angular += f.row.angular_a * lambda;
        let pb = &mut out[c.body_b];
        pb.linear += f.row.linear * lambda;
        pb.angular += f.row.angular_b * lambda;
    }
}

/// `v⁺ = v_smooth + M⁻¹·p·dt` for one body.
#[inline]
pub fn velocity_correction(
    v_smooth: Vec3,
    w_smooth: Vec3,
    p: &GeneralizedImpulse,
    inv_mass: f64,
    inv_inertia_world: &Mat3,
    dt: f64,
) -> (Vec3, Vec3) {
    (v_smooth + p.linear * (inv_mass * dt), w_smooth + inv_inertia_world.mul_vec(p.angular) * dt)
}

/// One-step velocity prediction under non-contact forces for a single free body.
///
/// Gravity enters as an external acceleration; the gyroscopic term `ω × I_w ω` is the bias force.
#[allow(clippy::too_many_arguments)]
pub fn smooth_predict(
    v: Vec3,
    w: Vec3,
    force: Vec3,
    torque: Vec3,
    gravity: Vec3,
    inv_mass: f64,
    inertia_world: &Mat3,
    inv_inertia_world: &Mat3,
    dt: f64,
) -> Result<(Vec3, Vec3), CoreError> {
    let v_new = v + (force * inv_mass + gravity) * dt;
    let bias = w.cross(inertia_world.mul_vec(w));
    let w_new = w + inv_inertia_world.mul_vec(torque - bias) * dt;
    if v_new.is_finite() && w_new.is_finite() {
        Ok((v_new, w_new))
    } else {
        Err(CoreError::NonFiniteState { body: usize::MAX })
    }
}

/// Contact wrench reassembled from facet impulses (step-averaged, contact frame).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContactWrench {
    /// Total normal component over all channels.
    pub lambda_n: f64,
    /// Normal component contributed by each channel (tangential, torsional, rolling).
    pub lambda_n_channel: [f64; 3],
    /// Tangential force in `(t1, t2)`.
    pub lambda_t: [f64; 2],
    /// Torsional moment about the normal.
    pub m_tor: f64,
    /// Rolling moment in `(t1, t2)`.
    pub m_rol: [f64; 2],
    pub mu: [f64; 3],
}

impl ContactWrench {
    pub fn tangential_norm(&self) -> f64 {
        libm::hypot(self.lambda_t[0], self.lambda_t[1])
    }

    pub fn rolling_norm(&self) -> f64 {
        libm::hypot(self.m_rol[0], self.m_rol[1])
    }

    /// Smallest slack of the three cone inequalities against the aggregate normal force.
    pub fn cone_slack(&self) -> f64 {
        let [mt, mtor, mrol] = self.mu;
        (mt * self.lambda_n - self.tangential_norm())
            .min(mtor * self.lambda_n - self.m_tor.abs())
            .min(mrol * self.lambda_n - self.rolling_norm())
    }

    /// Smallest slack of each channel's inequality against that channel's own normal part.
    pub fn channel_cone_slack(&self) -> f64 {
        let [mt, mtor, mrol] = self.mu;
        let [nt, ntor, nrol] = self.lambda_n_channel;
        (mt * nt - self.tangential_norm())
            .min(mtor * ntor - self.m_tor.abs())
            .min(mrol * nrol - self.rolling_norm())
    }
}

/// Maps the facet impulses of one contact back to normal force and friction wrench.
///
/// Per channel the normal part is `Σⱼ λ⁽ʲ⁾` and the frictional part `−μˢ·Σⱼ λ⁽ʲ⁾·d⁽ʲ⁾`.
pub fn reconstruct_wrench(contact: &Contact, facets: &[DualConeFacet], lambdas: &[f64]) -> ContactWrench {
    let mut w = ContactWrench {
        mu: [contact.friction.mu_t, contact.friction.mu_tor, contact.friction.mu_rol],
        ..Default::default()
    };
    let mut dir_sum = [[0.0f64; 2]; 3];
    for (f, &l) in facets.iter().zip(lambdas) {
        let c = f.channel.index();
        w.lambda_n_channel[c] += l;
        dir_sum[c][0] += l * f.dir[0];
        dir_sum[c][1] += l * f.dir[1];
    }
    w.lambda_n = w.lambda_n_channel.iter().sum();
    let [mt, mtor, mrol] = w.mu;
    w.lambda_t = [-mt * dir_sum[0][0], -mt * dir_sum[0][1]];
    w.m_tor = -mtor * dir_sum[1][0];
    w.m_rol = [-mrol * dir_sum[2][0], -mrol * dir_sum[2][1]];
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ContactMode {
    Separation,
    Sticking,
    Sliding,
    TorsionSlip,
    RollSlip,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTolerances {
    /// Normal force below which the contact counts as separated.
    pub separation: f64,
    /// Relative distance to the cone boundary treated as slipping.
    pub boundary: f64,
}

impl Default for ModeTolerances {
    fn default() -> Self {
        ModeTolerances { separation: 1e-9, boundary: 0.1 }
    }
}

/// Classifies a contact by how close each channel's friction is to its cone boundary.
///
/// Each channel is compared against its own normal part, since that is the
/// quantity its facets bound.
pub fn diagnose_contact_mode(w: &ContactWrench, tol: &ModeTolerances) -> ContactMode {
    if w.lambda_n < tol.separation {
        return ContactMode::Separation;
    }
    let [mt, mtor, mrol] = w.mu;
    let [nt, ntor, nrol] = w.lambda_n_channel;
    let at_boundary = |mag: f64, mu: f64, n: f64| mu > 0.0 && n > 0.0 && mag > (1.0 - tol.boundary) * mu * n;
    if at_boundary(w.tangential_norm(), mt, nt) {
        ContactMode::Sliding
    } else if at_boundary(w.m_tor.abs(), mtor, ntor) {
        ContactMode::TorsionSlip
    } else if at_boundary(w.rolling_norm(), mrol, nrol) {
        ContactMode::RollSlip
    } else {
        ContactMode::Sticking
    }
}
