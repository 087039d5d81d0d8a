//! Moment images of the toric endpoints (ell_12, ell_34) and
//! (ell_12, ell_45): predicted Delzant vertices, sampled images, hulls.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::geom::{sample_batch, TheoremHypotheses};
use crate::hamiltonians::family_h;

pub type Point2 = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelzantVertices {
    /// Corners of the (ell_12, ell_34) image.
    pub ell34: [Point2; 5],
    /// Corners of the (ell_12, ell_45) image.
    pub ell45: [Point2; 5],
}

/// The five predicted corners of each toric image.
pub fn delzant_vertices(h: &TheoremHypotheses) -> DelzantVertices {
    let [_, _, r3, r4, r5] = h.r();
    let (lo, hi, j) = (h.j_min, h.j_max, h.j);
    DelzantVertices {
        ell34: [(lo, r3 - r4), (hi, r3 - r4), (hi, r3 + r4), (j, r3 + r4), (lo, r5 + lo)],
        ell45: [(lo, r4 + r5), (hi, r4 + r5), (hi, r5 - r4), (j, r5 - r4), (lo, r3 - lo)],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentImageSample {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub ell34: f64,
    pub ell45: f64,
}

/// Evaluates (J, H_t, ell_34, ell_45) on a low-discrepancy batch of
/// configurations.
pub fn sample_moment_image(h: &TheoremHypotheses, count: usize, t: f64, seed: u64) -> Result<Vec<MomentImageSample>> {
    let batch = sample_batch(h.lengths(), count, seed)?;
    Ok(crate::parallel::install(|| {
        batch
            .par_iter()
            .map(|c| MomentImageSample {
                j: (c.edge(0) + c.edge(1)).norm(),
                h: family_h(c, t),
                ell34: (c.edge(2) + c.edge(3)).norm(),
                ell45: (c.edge(3) + c.edge(4)).norm(),
            })
            .collect()
    }))
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull in counter-clockwise order (monotone chain), without
/// collinear points.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut p: Vec<Point2> = points.iter().copied().filter(|q| q.0.is_finite() && q.1.is_finite()).collect();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

fn signed_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.0 * b.1 - a.1 * b.0
        })
        .sum::<f64>()
        * 0.5
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p.0 - a.0 - s * dx).powi(2) + (p.1 - a.1 - s * dy).powi(2)).sqrt()
}

/// Whether `p` lies in the convex polygon (either orientation) enlarged
/// by `slack`.
pub fn point_in_convex_polygon(poly: &[Point2], p: Point2, slack: f64) -> bool {
    let n = poly.len();
    let orient = signed_area(poly).signum();
    let inside = (0..n).all(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        orient * cross(a, b, p) >= 0.0
    });
    inside
        || (0..n)
            .map(|i| segment_distance(p, poly[i], poly[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
            <= slack
}

/// Distance from `p` to the convex polygon region (zero inside).
pub fn distance_to_convex_polygon(poly: &[Point2], p: Point2) -> f64 {
    match poly.len() {
        0 => f64::INFINITY,
        1 => ((p.0 - poly[0].0).powi(2) + (p.1 - poly[0].1).powi(2)).sqrt(),
        _ if point_in_convex_polygon(poly, p, 0.0) => 0.0,
        n => (0..n)
            .map(|i| segment_distance(p, poly[i], poly[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolygonCheck {
    pub outside: usize,
    /// Largest distance from a predicted vertex to the sample hull.
    pub max_vertex_distance: f64,
    pub vertex_distances: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentImageReport {
    pub samples: usize,
    pub ell34: PolygonCheck,
    pub ell45: PolygonCheck,
}

fn check_polygon(vertices: &[Point2; 5], points: &[Point2], slack: f64) -> PolygonCheck {
    let outside = points.iter().filter(|p| !point_in_convex_polygon(vertices, **p, slack)).count();
    let hull = convex_hull(points);
    let vertex_distances = vertices.map(|v| distance_to_convex_polygon(&hull, v));
    PolygonCheck {
        outside,
        max_vertex_distance: vertex_distances.iter().cloned().fold(0.0, f64::max),
        vertex_distances,
    }
}

/// Containment of the samples in both predicted polygons and closeness of
/// the sample hulls to the predicted corners.
pub fn check_moment_image(h: &TheoremHypotheses, samples: &[MomentImageSample], slack: f64) -> MomentImageReport {
    let v = delzant_vertices(h);
    let p34: Vec<Point2> = samples.iter().map(|s| (s.j, s.ell34)).collect();
    let p45: Vec<Point2> = samples.iter().map(|s| (s.j, s.ell45)).collect();
    MomentImageReport {
        samples: samples.len(),
        ell34: check_polygon(&v.ell34, &p34, slack),
        ell45: check_polygon(&v.ell45, &p45, slack),
    }
}
