//! Exact DoF region of the two-user MIMO interference channel with
//! isotropic fading and no CSIT.
//!
//! The region is a polygon in the (d1, d2) quadrant cut out by the two
//! single-user bounds and one weighted trade-off constraint. Depending on
//! the antenna counts the trade-off constraint collapses to a sum bound
//! (case A), a single triangle face (case B), or a trapezoid face with
//! slope μ after L interference-free dimensions are granted to user 2
//! (case C). The earlier outer bound, which is strictly looser exactly in
//! case C, is kept alongside for comparison.
//!
//! Computation is exact rational-in-spirit arithmetic on small integers;
//! coherence time plays no role here by construction.

use std::fmt;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

/// Membership tolerance for region queries (absolute; DoF values are
/// small integers and halves).
pub const TAU_MEMBERSHIP: f64 = 1e-9;

/// Errors from region construction and queries.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionError {
    /// Antenna counts must all be at least 1.
    BadAntennaCount { m1: usize, n1: usize, m2: usize, n2: usize },
    /// The trade-off slope μ is defined only in case C.
    NotCaseC { case: CaseLabel },
}

impl fmt::Display for RegionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionError::BadAntennaCount { m1, n1, m2, n2 } => {
                write!(f, "antenna counts must be >= 1, got ({m1},{n1},{m2},{n2})")
            }
            RegionError::NotCaseC { case } => {
                write!(f, "trade-off slope is defined only in case C, got case {case:?}")
            }
        }
    }
}

impl std::error::Error for RegionError {}

/// Antenna counts (M1, N1, M2, N2): transmitter t has M_t antennas,
/// receiver r has N_r antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AntennaConfig {
    pub m1: usize,
    pub n1: usize,
    pub m2: usize,
    pub n2: usize,
}

impl AntennaConfig {
    pub fn new(m1: usize, n1: usize, m2: usize, n2: usize) -> Result<Self, RegionError> {
        if m1 == 0 || n1 == 0 || m2 == 0 || n2 == 0 {
            return Err(RegionError::BadAntennaCount { m1, n1, m2, n2 });
        }
        Ok(AntennaConfig { m1, n1, m2, n2 })
    }

    /// Swap the two user roles.
    pub fn swapped(&self) -> AntennaConfig {
        AntennaConfig {
            m1: self.m2,
            n1: self.n2,
            m2: self.m1,
            n2: self.n1,
        }
    }
}

/// Case of the region geometry (after normalizing so N1 ≤ N2):
/// A: M2 ≤ N1, B: M2 > N1 and M1 ≥ N1, C: M2 > N1 > M1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    A,
    B,
    C,
}

/// A degree-of-freedom pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofPair {
    pub d1: f64,
    pub d2: f64,
}

impl DofPair {
    pub fn new(d1: f64, d2: f64) -> Self {
        DofPair { d1, d2 }
    }
}

impl Serialize for DofPair {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(2))?;
        seq.serialize_element(&self.d1)?;
        seq.serialize_element(&self.d2)?;
        seq.end()
    }
}

/// The constraint a1·d1 + a2·d2 ≤ b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfPlane {
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
}

impl HalfPlane {
    pub fn new(a1: f64, a2: f64, b: f64) -> Self {
        assert!(a1 != 0.0 || a2 != 0.0, "degenerate half-plane");
        HalfPlane { a1, a2, b }
    }

    /// True if the point satisfies the constraint within `tol`.
    pub fn admits(&self, p: &DofPair, tol: f64) -> bool {
        self.a1 * p.d1 + self.a2 * p.d2 <= self.b + tol
    }
}

/// A DoF region: half-plane description plus the vertex polygon, with the
/// case label, the guaranteed interference-free DoF L of user 2, and (in
/// case C) the trade-off slope μ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofRegion {
    pub config: AntennaConfig,
    /// True when the N1 ≤ N2 normalization swapped the user roles.
    pub swapped: bool,
    #[serde(rename = "case")]
    pub case_label: CaseLabel,
    #[serde(rename = "L")]
    pub l_value: usize,
    #[serde(rename = "mu")]
    pub tradeoff_slope: Option<f64>,
    pub halfplanes: Vec<HalfPlane>,
    /// Extreme points, counterclockwise, starting from the origin.
    pub vertices: Vec<DofPair>,
}

impl DofRegion {
    /// True iff the pair satisfies every half-plane within `TAU_MEMBERSHIP`.
    pub fn contains(&self, p: &DofPair) -> bool {
        p.d1 >= -TAU_MEMBERSHIP
            && p.d2 >= -TAU_MEMBERSHIP
            && self.halfplanes.iter().all(|h| h.admits(p, TAU_MEMBERSHIP))
    }

    /// True iff every vertex of `other` lies inside `self` (convexity makes
    /// this a full containment check).
    pub fn contains_region(&self, other: &DofRegion) -> bool {
        other.vertices.iter().all(|v| self.contains(v))
    }

    /// Compare vertex sets as sets, within `tol` per coordinate.
    pub fn same_vertex_set(&self, other: &DofRegion, tol: f64) -> bool {
        if self.vertices.len() != other.vertices.len() {
            return false;
        }
        self.vertices.iter().all(|v| {
            other
                .vertices
                .iter()
                .any(|w| (v.d1 - w.d1).abs() <= tol && (v.d2 - w.d2).abs() <= tol)
        })
    }
}

/// Classify the region geometry; swaps user roles first when N1 > N2.
pub fn classify_case(cfg: &AntennaConfig) -> (CaseLabel, bool) {
    let swapped = cfg.n1 > cfg.n2;
    let c = if swapped { cfg.swapped() } else { *cfg };
    let label = if c.m2 <= c.n1 {
        CaseLabel::A
    } else if c.m1 >= c.n1 {
        CaseLabel::B
    } else {
        CaseLabel::C
    };
    (label, swapped)
}

fn l_of(c: &AntennaConfig) -> usize {
    (c.m1 + c.m2).min(c.n1) - c.m1.min(c.n1)
}

/// The weighted trade-off constraint in normalized coordinates:
/// d1 + ρ·(d2 − L) ≤ min(M1, N1), with ρ = 0/0 read as 1.
fn tradeoff_halfplane(c: &AntennaConfig) -> (HalfPlane, f64, usize) {
    let l = l_of(c);
    let single1 = c.m1.min(c.n1) as f64;
    let num = c.m2.min(c.n1) as f64 - l as f64;
    let den = c.m2.min(c.n2) as f64 - l as f64;
    // 0/0 convention: when min(M2,N2) == L the numerator vanishes too and
    // the constraint reads d1 + (d2 − L) ≤ min(M1, N1)
    let rho = if den == 0.0 { 1.0 } else { num / den };
    (
        HalfPlane::new(1.0, rho, single1 + rho * l as f64),
        rho,
        l,
    )
}

fn mirror_halfplane(h: &HalfPlane) -> HalfPlane {
    HalfPlane {
        a1: h.a2,
        a2: h.a1,
        b: h.b,
    }
}

/// Enumerate the extreme points of the half-plane intersection within the
/// nonnegative quadrant: brute-force pairwise intersection, feasibility
/// filtering, and deduplication (≤ 5 constraints, no LP needed).
fn enumerate_vertices(halfplanes: &[HalfPlane]) -> Vec<DofPair> {
    let mut all = halfplanes.to_vec();
    all.push(HalfPlane::new(-1.0, 0.0, 0.0));
    all.push(HalfPlane::new(0.0, -1.0, 0.0));

    let mut verts: Vec<DofPair> = Vec::new();
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            let (hi, hj) = (&all[i], &all[j]);
            let det = hi.a1 * hj.a2 - hj.a1 * hi.a2;
            if det.abs() < 1e-12 {
                continue;
            }
            let d1 = (hi.b * hj.a2 - hj.b * hi.a2) / det;
            let d2 = (hi.a1 * hj.b - hj.a1 * hi.b) / det;
            // normalize -0.0 so serialized vertices read cleanly
            let p = DofPair::new(d1 + 0.0, d2 + 0.0);
            if all.iter().all(|h| h.admits(&p, TAU_MEMBERSHIP)) {
                verts.push(p);
            }
        }
    }

    // lexicographic dedup at 1e-9
    verts.sort_by(|a, b| {
        a.d1.partial_cmp(&b.d1)
            .unwrap()
            .then(a.d2.partial_cmp(&b.d2).unwrap())
    });
    verts.dedup_by(|a, b| (a.d1 - b.d1).abs() <= 1e-9 && (a.d2 - b.d2).abs() <= 1e-9);

    // counterclockwise order around the centroid, starting at the
    // lexicographically smallest vertex (the origin for these regions)
    let n = verts.len() as f64;
    let cx = verts.iter().map(|p| p.d1).sum::<f64>() / n;
    let cy = verts.iter().map(|p| p.d2).sum::<f64>() / n;
    verts.sort_by(|a, b| {
        let ta = (a.d2 - cy).atan2(a.d1 - cx);
        let tb = (b.d2 - cy).atan2(b.d1 - cx);
        ta.partial_cmp(&tb).unwrap()
    });
    let start = (0..verts.len())
        .min_by(|&i, &j| {
            verts[i]
                .d1
                .partial_cmp(&verts[j].d1)
                .unwrap()
                .then(verts[i].d2.partial_cmp(&verts[j].d2).unwrap())
        })
        .unwrap_or(0);
    verts.rotate_left(start);
    verts
}

fn assemble_region(
    cfg: &AntennaConfig,
    swapped: bool,
    case_label: CaseLabel,
    l_value: usize,
    mu: Option<f64>,
    normalized_halfplanes: Vec<HalfPlane>,
) -> DofRegion {
    let halfplanes: Vec<HalfPlane> = if swapped {
        normalized_halfplanes.iter().map(mirror_halfplane).collect()
    } else {
        normalized_halfplanes
    };
    let vertices = enumerate_vertices(&halfplanes);
    DofRegion {
        config: *cfg,
        swapped,
        case_label,
        l_value,
        tradeoff_slope: mu,
        halfplanes,
        vertices,
    }
}

/// The exact DoF region for the given antenna counts.
pub fn compute_region(cfg: &AntennaConfig) -> DofRegion {
    let (case_label, swapped) = classify_case(cfg);
    let norm = if swapped { cfg.swapped() } else { *cfg };
    let (tradeoff, rho, l) = tradeoff_halfplane(&norm);
    let halfplanes = vec![
        HalfPlane::new(1.0, 0.0, norm.m1.min(norm.n1) as f64),
        HalfPlane::new(0.0, 1.0, norm.m2.min(norm.n2) as f64),
        tradeoff,
    ];
    let mu = if case_label == CaseLabel::C { Some(rho) } else { None };
    assemble_region(cfg, swapped, case_label, l, mu, halfplanes)
}

/// The earlier outer bound: single-user bounds plus
/// d1 + [min(M2,N1)/min(M2,N2)]·d2 ≤ min(M1+M2, N1) in normalized
/// coordinates. Coincides with the exact region in cases A and B; strictly
/// looser in case C.
pub fn previous_outer_bound(cfg: &AntennaConfig) -> DofRegion {
    let (case_label, swapped) = classify_case(cfg);
    let norm = if swapped { cfg.swapped() } else { *cfg };
    let ratio = norm.m2.min(norm.n1) as f64 / norm.m2.min(norm.n2) as f64;
    let halfplanes = vec![
        HalfPlane::new(1.0, 0.0, norm.m1.min(norm.n1) as f64),
        HalfPlane::new(0.0, 1.0, norm.m2.min(norm.n2) as f64),
        HalfPlane::new(1.0, ratio, (norm.m1 + norm.m2).min(norm.n1) as f64),
    ];
    assemble_region(cfg, swapped, case_label, l_of(&norm), None, halfplanes)
}

/// The case-C trade-off slope μ = M1 / (min(M2,N2) − L) after
/// normalization; errors outside case C.
pub fn tradeoff_slope(cfg: &AntennaConfig) -> Result<f64, RegionError> {
    let (case_label, swapped) = classify_case(cfg);
    if case_label != CaseLabel::C {
        return Err(RegionError::NotCaseC { case: case_label });
    }
    let norm = if swapped { cfg.swapped() } else { *cfg };
    let l = l_of(&norm);
    Ok(norm.m1 as f64 / (norm.m2.min(norm.n2) as f64 - l as f64))
}
