//! Point-cloud discretization of a bounded domain with a zero-Dirichlet
//! exterior collar.
//!
//! Nodes are placed on a uniform coordinate lattice of spacing `h`, anchored
//! at the lower corner of the padded bounding box of the domain. Each lattice
//! point is classified as interior (strictly inside the domain), collar
//! (outside, within `collar_width` of the boundary), or discarded. Collar
//! nodes carry the nonlocal boundary condition `u = 0` outside the domain;
//! kernel interactions beyond the collar are truncated, which is the dominant
//! discretization bias and is controlled through `collar_width`.
//!
//! Every node gets the same Haar cell volume `h^{2N+1}`.

use crate::heisenberg::{distance, GroupPoint};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("domain has empty interior at spacing h={0}")]
    EmptyInterior(f64),
    #[error("node budget exceeded: {actual} nodes, budget {budget}")]
    NodeBudgetExceeded { actual: usize, budget: usize },
    #[error("spacing must be positive, got {0}")]
    NonPositiveSpacing(f64),
    #[error("collar width must be positive, got {0}")]
    NonPositiveCollar(f64),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("no interior nodes at margin {0}")]
    EmptyMargin(f64),
    #[error("inconsistent mesh data: {0}")]
    Inconsistent(String),
}

/// Shape of the computational domain.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    /// Korányi metric ball of the given radius around a center point.
    KoranyiBall { radius: f64, center: GroupPoint },
    /// Axis-aligned box in exponential coordinates; bounds are ordered
    /// `x_1..x_N, y_1..y_N, t`.
    CoordinateBox { bounds: Vec<(f64, f64)> },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<(), MeshError> {
        match self {
            DomainSpec::KoranyiBall { radius, center } => {
                if !(*radius > 0.0) {
                    return Err(MeshError::InvalidDomain(format!(
                        "ball radius must be positive, got {radius}"
                    )));
                }
                if !center.is_finite() {
                    return Err(MeshError::InvalidDomain("ball center not finite".into()));
                }
                Ok(())
            }
            DomainSpec::CoordinateBox { bounds } => {
                if bounds.is_empty() || bounds.len() % 2 == 0 {
                    return Err(MeshError::InvalidDomain(format!(
                        "box needs 2N+1 axis bounds, got {}",
                        bounds.len()
                    )));
                }
                for (lo, hi) in bounds {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(MeshError::InvalidDomain(format!(
                            "empty or invalid axis bounds [{lo}, {hi}]"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::KoranyiBall { center, .. } => center.dim(),
            DomainSpec::CoordinateBox { bounds } => (bounds.len() - 1) / 2,
        }
    }

    fn coords(p: &GroupPoint) -> Vec<f64> {
        let mut c = Vec::with_capacity(2 * p.dim() + 1);
        c.extend_from_slice(&p.x);
        c.extend_from_slice(&p.y);
        c.push(p.t);
        c
    }

    fn point_from_coords(c: &[f64], n: usize) -> GroupPoint {
        GroupPoint {
            x: c[..n].to_vec(),
            y: c[n..2 * n].to_vec(),
            t: c[2 * n],
        }
    }

    /// True when the point lies strictly inside the domain.
    pub fn is_inside(&self, p: &GroupPoint) -> bool {
        match self {
            DomainSpec::KoranyiBall { radius, center } => {
                distance(p, center).expect("dimensions fixed by spec") < *radius
            }
            DomainSpec::CoordinateBox { bounds } => {
                let c = Self::coords(p);
                c.iter().zip(bounds).all(|(v, (lo, hi))| lo < v && v < hi)
            }
        }
    }

    /// Distance from an interior point to the boundary: the Korányi radial
    /// gap for balls, the coordinate (Euclidean) gap for boxes.
    pub fn boundary_distance(&self, p: &GroupPoint) -> f64 {
        match self {
            DomainSpec::KoranyiBall { radius, center } => {
                radius - distance(p, center).expect("dimensions fixed by spec")
            }
            DomainSpec::CoordinateBox { bounds } => {
                let c = Self::coords(p);
                c.iter()
                    .zip(bounds)
                    .map(|(v, (lo, hi))| (v - lo).min(hi - v))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Distance from an exterior point to the domain; zero inside or on the
    /// boundary.
    pub fn exterior_distance(&self, p: &GroupPoint) -> f64 {
        match self {
            DomainSpec::KoranyiBall { radius, center } => {
                (distance(p, center).expect("dimensions fixed by spec") - radius).max(0.0)
            }
            DomainSpec::CoordinateBox { bounds } => {
                let c = Self::coords(p);
                c.iter()
                    .zip(bounds)
                    .map(|(v, (lo, hi))| (lo - v).max(v - hi).max(0.0).powi(2))
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }

    /// Per-axis coordinate ranges that contain the domain plus its collar.
    fn padded_ranges(&self, collar_width: f64) -> Vec<(f64, f64)> {
        match self {
            DomainSpec::KoranyiBall { radius, center } => {
                let n = center.dim();
                let r = radius + collar_width;
                let mut ranges = Vec::with_capacity(2 * n + 1);
                for v in center.x.iter().chain(&center.y) {
                    ranges.push((v - r, v + r));
                }
                // |t - t0| <= r^2 + 2 r (|x0| + |y0|) over the padded ball
                let x0: f64 = center.x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let y0: f64 = center.y.iter().map(|v| v * v).sum::<f64>().sqrt();
                let m = r * r + 2.0 * r * (x0 + y0);
                ranges.push((center.t - m, center.t + m));
                ranges
            }
            DomainSpec::CoordinateBox { bounds } => bounds
                .iter()
                .map(|(lo, hi)| (lo - collar_width, hi + collar_width))
                .collect(),
        }
    }

    /// Per-axis lattice anchor: the lower corner of the domain itself, not
    /// of the padded range. Tying the phase to the domain keeps the
    /// boundary's position within the lattice independent of the collar
    /// width and aligned across spacings that divide the domain size,
    /// which would otherwise dominate the refinement error.
    fn lattice_anchor(&self) -> Vec<f64> {
        match self {
            DomainSpec::KoranyiBall { radius, center } => {
                let n = center.dim();
                let mut anchor = Vec::with_capacity(2 * n + 1);
                for v in center.x.iter().chain(&center.y) {
                    anchor.push(v - radius);
                }
                let x0: f64 = center.x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let y0: f64 = center.y.iter().map(|v| v * v).sum::<f64>().sqrt();
                anchor.push(center.t - (radius * radius + 2.0 * radius * (x0 + y0)));
                anchor
            }
            DomainSpec::CoordinateBox { bounds } => bounds.iter().map(|(lo, _)| *lo).collect(),
        }
    }

    /// Center of the domain, used for radial profiles.
    pub fn center(&self) -> GroupPoint {
        match self {
            DomainSpec::KoranyiBall { center, .. } => center.clone(),
            DomainSpec::CoordinateBox { bounds } => {
                let c: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
                Self::point_from_coords(&c, self.dim())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Interior,
    Collar,
}

/// Node cloud with roles, Haar cell volumes, and the generating spec.
/// Interior nodes occupy the leading block of the node list, the collar
/// block follows.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<GroupPoint>,
    roles: Vec<NodeRole>,
    volumes: Vec<f64>,
    spacing: f64,
    collar_width: f64,
    spec: DomainSpec,
    interior: Vec<usize>,
}

/// Build the lattice mesh for a domain spec.
///
/// The lattice is anchored at the lower corner of the padded bounding box,
/// so refining `h -> h/2` keeps every existing node.
pub fn build_mesh(
    spec: &DomainSpec,
    h: f64,
    collar_width: f64,
    max_nodes: usize,
) -> Result<Mesh, MeshError> {
    spec.validate()?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(MeshError::NonPositiveSpacing(h));
    }
    if !(collar_width > 0.0) || !collar_width.is_finite() {
        return Err(MeshError::NonPositiveCollar(collar_width));
    }
    let n = spec.dim();
    let ranges = spec.padded_ranges(collar_width);
    let anchor = spec.lattice_anchor();
    // lattice points anchor + k h with k covering the padded range
    let k_min: Vec<i64> = ranges
        .iter()
        .zip(&anchor)
        .map(|((lo, _), a)| ((lo - a) / h).ceil() as i64)
        .collect();
    let counts: Vec<usize> = ranges
        .iter()
        .zip(&anchor)
        .zip(&k_min)
        .map(|(((_, hi), a), lo_k)| (((hi - a) / h).floor() as i64 - lo_k).max(0) as usize + 1)
        .collect();
    let candidates: usize = counts.iter().product();
    if candidates > max_nodes.saturating_mul(64) {
        return Err(MeshError::NodeBudgetExceeded {
            actual: candidates,
            budget: max_nodes,
        });
    }

    let dims = 2 * n + 1;
    let volume = h.powi(dims as i32);
    // interior nodes first, collar block behind; both in lattice order
    let mut interior_nodes = Vec::new();
    let mut collar_nodes = Vec::new();
    let mut index = vec![0usize; dims];
    let mut coords = vec![0.0f64; dims];
    'outer: loop {
        for k in 0..dims {
            coords[k] = anchor[k] + (k_min[k] + index[k] as i64) as f64 * h;
        }
        let p = DomainSpec::point_from_coords(&coords, n);
        if spec.is_inside(&p) {
            interior_nodes.push(p);
        } else if spec.exterior_distance(&p) <= collar_width {
            collar_nodes.push(p);
        }
        // odometer increment, last axis fastest
        for k in (0..dims).rev() {
            index[k] += 1;
            if index[k] < counts[k] {
                continue 'outer;
            }
            index[k] = 0;
            if k == 0 {
                break 'outer;
            }
        }
    }

    let total = interior_nodes.len() + collar_nodes.len();
    if total > max_nodes {
        return Err(MeshError::NodeBudgetExceeded {
            actual: total,
            budget: max_nodes,
        });
    }
    if interior_nodes.is_empty() {
        return Err(MeshError::EmptyInterior(h));
    }
    let mut roles = vec![NodeRole::Interior; interior_nodes.len()];
    roles.extend(vec![NodeRole::Collar; collar_nodes.len()]);
    let interior: Vec<usize> = (0..interior_nodes.len()).collect();
    let mut nodes = interior_nodes;
    nodes.append(&mut collar_nodes);
    let volumes = vec![volume; nodes.len()];
    Ok(Mesh {
        nodes,
        roles,
        volumes,
        spacing: h,
        collar_width,
        spec: spec.clone(),
        interior,
    })
}

impl Mesh {
    /// Assemble a mesh from explicit parts, validating the invariants.
    /// Mostly useful for small hand-built instances in tests.
    pub fn from_parts(
        nodes: Vec<GroupPoint>,
        roles: Vec<NodeRole>,
        spacing: f64,
        collar_width: f64,
        spec: DomainSpec,
    ) -> Result<Mesh, MeshError> {
        spec.validate()?;
        if nodes.len() != roles.len() {
            return Err(MeshError::Inconsistent(format!(
                "{} nodes but {} roles",
                nodes.len(),
                roles.len()
            )));
        }
        if !(spacing > 0.0) {
            return Err(MeshError::NonPositiveSpacing(spacing));
        }
        if !(collar_width > 0.0) {
            return Err(MeshError::NonPositiveCollar(collar_width));
        }
        for (i, a) in nodes.iter().enumerate() {
            for b in nodes.iter().skip(i + 1) {
                if a == b {
                    return Err(MeshError::Inconsistent(format!(
                        "coincident node positions at {a:?}"
                    )));
                }
            }
        }
        if roles
            .windows(2)
            .any(|w| w[0] == NodeRole::Collar && w[1] == NodeRole::Interior)
        {
            return Err(MeshError::Inconsistent(
                "interior nodes must precede collar nodes".into(),
            ));
        }
        let interior: Vec<usize> = roles
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == NodeRole::Interior)
            .map(|(i, _)| i)
            .collect();
        if interior.is_empty() {
            return Err(MeshError::EmptyInterior(spacing));
        }
        let dims = 2 * spec.dim() + 1;
        let volumes = vec![spacing.powi(dims as i32); nodes.len()];
        Ok(Mesh {
            nodes,
            roles,
            volumes,
            spacing,
            collar_width,
            spec,
            interior,
        })
    }

    pub fn nodes(&self) -> &[GroupPoint] {
        &self.nodes
    }

    pub fn roles(&self) -> &[NodeRole] {
        &self.roles
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn collar_width(&self) -> f64 {
        self.collar_width
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    /// Indices of interior nodes, in node order.
    pub fn interior_indices(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    pub fn collar_count(&self) -> usize {
        self.nodes.len() - self.interior.len()
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.roles[i] == NodeRole::Interior
    }

    /// Sum of interior cell volumes (the discrete domain measure).
    pub fn interior_volume(&self) -> f64 {
        self.interior.iter().map(|&i| self.volumes[i]).sum()
    }

    /// Interior nodes at boundary distance at least `margin` (the discrete
    /// stand-in for a compact subset of the domain).
    pub fn interior_subset(&self, margin: f64) -> Result<Vec<usize>, MeshError> {
        if !(margin > 0.0) {
            return Err(MeshError::InvalidDomain(format!(
                "margin must be positive, got {margin}"
            )));
        }
        let out: Vec<usize> = self
            .interior
            .iter()
            .copied()
            .filter(|&i| self.spec.boundary_distance(&self.nodes[i]) >= margin)
            .collect();
        if out.is_empty() {
            return Err(MeshError::EmptyMargin(margin));
        }
        Ok(out)
    }

    /// Interior nodes within distance `eps` of the boundary. May be empty;
    /// its complement within the interior is the `margin >= eps` core.
    pub fn boundary_strip(&self, eps: f64) -> Result<Vec<usize>, MeshError> {
        if !(eps > 0.0) {
            return Err(MeshError::InvalidDomain(format!(
                "strip width must be positive, got {eps}"
            )));
        }
        Ok(self
            .interior
            .iter()
            .copied()
            .filter(|&i| self.spec.boundary_distance(&self.nodes[i]) < eps)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn unit_box() -> DomainSpec {
        DomainSpec::CoordinateBox {
            bounds: vec![(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
        }
    }

    #[test]
    fn ball_too_coarse_has_empty_interior() {
        let spec = DomainSpec::KoranyiBall {
            radius: 1.0,
            center: GroupPoint::origin(1),
        };
        let err = build_mesh(&spec, 3.0, 1.0, 100_000).unwrap_err();
        assert!(matches!(err, MeshError::EmptyInterior(_)));
    }

    #[test]
    fn coarse_box_has_single_interior_node() {
        let mesh = build_mesh(&unit_box(), 1.0, 1.0, 100_000).unwrap();
        assert_eq!(mesh.interior_count(), 1);
        let i = mesh.interior_indices()[0];
        let node = &mesh.nodes()[i];
        assert!(node.x[0].abs() < 1e-12 && node.y[0].abs() < 1e-12 && node.t.abs() < 1e-12);
        // lattice points at {-1,0,1} land exactly on the boundary -> collar
        let on_face = mesh
            .nodes()
            .iter()
            .zip(mesh.roles())
            .filter(|(p, _)| {
                (p.x[0].abs() - 1.0).abs() < 1e-12
                    && p.y[0].abs() <= 1.0 + 1e-12
                    && p.t.abs() <= 1.0 + 1e-12
            })
            .all(|(_, r)| *r == NodeRole::Collar);
        assert!(on_face);
    }

    // 1D replica of the lattice rule: points -1 + k*h covering the padded
    // range, counted strictly inside (-1, 1)
    fn interior_count_1d(h: f64, cw: f64) -> usize {
        let mut k = (-cw / h).ceil() as i64;
        let mut count = 0usize;
        loop {
            let v = -1.0 + k as f64 * h;
            if v > 1.0 + cw {
                break;
            }
            if v > -1.0 && v < 1.0 {
                count += 1;
            }
            k += 1;
        }
        count
    }

    #[test]
    fn interior_volume_riemann_trend() {
        // the interior cell volumes form a Riemann sum for the box volume;
        // the deficit is one half-cell shell per face and must shrink with h
        let spec = unit_box();
        let mut errs = Vec::new();
        for h in [0.4, 0.2, 0.1, 0.05] {
            let mesh = build_mesh(&spec, h, 0.5, 2_000_000).unwrap();
            let vol = mesh.interior_volume();
            let per_axis = interior_count_1d(h, 0.5);
            assert_eq!(mesh.interior_count(), per_axis.pow(3));
            let expect = (per_axis as f64 * h).powi(3);
            assert!(
                (vol - expect).abs() < 1e-9,
                "h={h}: vol={vol} expect={expect}"
            );
            let err = (8.0 - vol).abs() / 8.0;
            // the deficit is at most one h-shell per face
            assert!(err <= 1.0 - (1.0 - h).powi(3) + 1e-12, "h={h}: err={err}");
            errs.push(err);
        }
        // at h = side/20 = 0.1 the shell deficit is still about 14 percent
        // in three dimensions (5 percent per axis)
        assert!((errs[2] - (1.0 - 0.857375)).abs() < 1e-9, "{errs:?}");
        // well below 5 percent once h is a few times smaller
        let fine = build_mesh(&spec, 0.025, 0.2, 2_000_000).unwrap();
        assert!((8.0 - fine.interior_volume()).abs() / 8.0 < 0.05);
    }

    #[test]
    fn refinement_does_not_lose_interior_nodes() {
        let spec = unit_box();
        let mut prev = 0usize;
        for h in [0.8, 0.4, 0.2] {
            let mesh = build_mesh(&spec, h, 0.5, 2_000_000).unwrap();
            assert!(mesh.interior_count() >= prev);
            prev = mesh.interior_count();
        }
    }

    #[test]
    fn roles_partition_nodes() {
        let mesh = build_mesh(&unit_box(), 0.5, 1.0, 100_000).unwrap();
        let n_int = mesh
            .roles()
            .iter()
            .filter(|r| **r == NodeRole::Interior)
            .count();
        assert_eq!(n_int, mesh.interior_count());
        assert_eq!(mesh.node_count(), n_int + mesh.collar_count());
        assert!(mesh
            .volumes()
            .iter()
            .all(|v| (*v - 0.5f64.powi(3)).abs() < 1e-15));
    }

    #[test]
    fn interior_subset_examples() {
        let mesh = build_mesh(&unit_box(), 0.5, 1.0, 100_000).unwrap();
        // margin -> 0+ keeps all interior nodes
        let all = mesh.interior_subset(1e-9).unwrap();
        assert_eq!(all.len(), mesh.interior_count());
        assert_eq!(all.len(), 27); // {0, ±0.5}^3
                                   // margin 0.6 keeps only the origin-centered core
        let core = mesh.interior_subset(0.6).unwrap();
        assert_eq!(core.len(), 1);
        let p = &mesh.nodes()[core[0]];
        assert!(p.x[0].abs() < 1e-12 && p.y[0].abs() < 1e-12 && p.t.abs() < 1e-12);
        // margin beyond the domain diameter is an error
        assert!(matches!(
            mesh.interior_subset(10.0),
            Err(MeshError::EmptyMargin(_))
        ));
    }

    #[test]
    fn boundary_strip_examples() {
        let mesh = build_mesh(&unit_box(), 0.5, 1.0, 100_000).unwrap();
        // all interior nodes sit at distance >= 0.5 from the boundary
        assert!(mesh.boundary_strip(0.3).unwrap().is_empty());
        let all = mesh.boundary_strip(10.0).unwrap();
        assert_eq!(all.len(), mesh.interior_count());
        // strip and core partition the interior
        let strip = mesh.boundary_strip(0.6).unwrap();
        let core = mesh.interior_subset(0.6).unwrap();
        assert_eq!(strip.len() + core.len(), mesh.interior_count());
    }

    #[test]
    fn budget_and_argument_validation() {
        assert!(matches!(
            build_mesh(&unit_box(), 0.1, 1.0, 10),
            Err(MeshError::NodeBudgetExceeded { .. })
        ));
        assert!(matches!(
            build_mesh(&unit_box(), -0.5, 1.0, 100),
            Err(MeshError::NonPositiveSpacing(_))
        ));
        assert!(matches!(
            build_mesh(&unit_box(), 0.5, 0.0, 100),
            Err(MeshError::NonPositiveCollar(_))
        ));
        let bad = DomainSpec::CoordinateBox {
            bounds: vec![(1.0, -1.0), (-1.0, 1.0), (-1.0, 1.0)],
        };
        assert!(matches!(
            build_mesh(&bad, 0.5, 1.0, 100),
            Err(MeshError::InvalidDomain(_))
        ));
    }

    #[test]
    fn ball_mesh_roles_are_consistent() {
        let spec = DomainSpec::KoranyiBall {
            radius: 1.0,
            center: GroupPoint::origin(1),
        };
        let mesh = build_mesh(&spec, 0.25, 0.75, 200_000).unwrap();
        assert!(mesh.interior_count() > 0);
        for (i, p) in mesh.nodes().iter().enumerate() {
            let d = distance(p, &GroupPoint::origin(1)).unwrap();
            match mesh.roles()[i] {
                NodeRole::Interior => assert!(d < 1.0),
                NodeRole::Collar => assert!((1.0..=1.75 + 1e-12).contains(&d)),
            }
        }
    }
}
