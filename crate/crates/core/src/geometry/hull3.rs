//! Incremental convex hull in three dimensions.

use std::collections::HashSet;

use super::body::{bbox_diameter, cross3, dot3, normalize3};
use super::GeometryError;

fn pt(points: &[f64], i: usize) -> [f64; 3] {
    [points[3 * i], points[3 * i + 1], points[3 * i + 2]]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Returns `(extreme vertices, unit facet normals, facet offsets)`, all flat.
/// Coplanar triangles are merged into a single facet.
pub(crate) fn hull3d(points: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), GeometryError> {
    let n = points.len() / 3;
    if points.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::Malformed("non-finite coordinate".into()));
    }
    if n < 4 {
        return Err(GeometryError::DegenerateBody("fewer than four points".into()));
    }
    let diam = bbox_diameter(3, points);
    let tol = 1e-12 * diam.max(1e-300);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (pt(points, a), pt(points, b));
        pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1])).then(pa[2].total_cmp(&pb[2]))
    });
    let i0 = order[0];
    let p0 = pt(points, i0);
    let far = |f: &dyn Fn([f64; 3]) -> f64| {
        order.iter().copied().max_by(|&a, &b| f(pt(points, a)).total_cmp(&f(pt(points, b)))).unwrap()
    };
    let i1 = far(&|p| dot3(sub(p, p0), sub(p, p0)));
    let d01 = sub(pt(points, i1), p0);
    let i2 = far(&|p| {
        let c = cross3(d01, sub(p, p0));
        dot3(c, c)
    });
    let nrm = cross3(d01, sub(pt(points, i2), p0));
    if dot3(nrm, nrm).sqrt() <= tol * diam {
        return Err(GeometryError::DegenerateBody("points are collinear".into()));
    }
    let nrm = normalize3(nrm);
    let i3 = far(&|p| dot3(nrm, sub(p, p0)).abs());
    if dot3(nrm, sub(pt(points, i3), p0)).abs() <= tol {
        return Err(GeometryError::DegenerateBody("points are coplanar".into()));
    }

    let inner = {
        let s = [i0, i1, i2, i3].iter().map(|&i| pt(points, i)).fold([0.0; 3], |a, p| [a[0] + p[0], a[1] + p[1], a[2] + p[2]]);
        [s[0] / 4.0, s[1] / 4.0, s[2] / 4.0]
    };
    let orient = |f: [usize; 3]| -> [usize; 3] {
        let (a, b, c) = (pt(points, f[0]), pt(points, f[1]), pt(points, f[2]));
        let nn = cross3(sub(b, a), sub(c, a));
        if dot3(nn, sub(inner, a)) > 0.0 {
            [f[0], f[2], f[1]]
        } else {
            f
        }
    };
    let mut faces: Vec<[usize; 3]> =
        vec![orient([i0, i1, i2]), orient([i0, i1, i3]), orient([i0, i2, i3]), orient([i1, i2, i3])];
    let plane = |f: &[usize; 3]| -> ([f64; 3], f64) {
        let (a, b, c) = (pt(points, f[0]), pt(points, f[1]), pt(points, f[2]));
        let nn = normalize3(cross3(sub(b, a), sub(c, a)));
        (nn, dot3(nn, a))
    };

    for &p in &order {
        if [i0, i1, i2, i3].contains(&p) {
            continue;
        }
        let q = pt(points, p);
        let visible: Vec<bool> = faces
            .iter()
            .map(|f| {
                let (nn, off) = plane(f);
                dot3(nn, q) - off > tol
            })
            .collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
            for k in 0..3 {
                edges.insert((f[k], f[(k + 1) % 3]));
            }
        }
        let horizon: Vec<(usize, usize)> =
            edges.iter().copied().filter(|&(a, b)| !edges.contains(&(b, a))).collect();
        let mut next: Vec<[usize; 3]> =
            faces.iter().zip(&visible).filter(|(_, &v)| !v).map(|(f, _)| *f).collect();
        for (a, b) in horizon {
            next.push([a, b, p]);
        }
        faces = next;
    }

    // Merge coplanar triangles into facets.
    let mut normals: Vec<f64> = Vec::new();
    let mut offsets: Vec<f64> = Vec::new();
    let mut used: Vec<usize> = Vec::new();
    for f in &faces {
        let (nn, off) = plane(f);
        let dup = offsets.iter().enumerate().any(|(k, &o)| {
            let m = [normals[3 * k], normals[3 * k + 1], normals[3 * k + 2]];
            dot3(m, nn) > 1.0 - 1e-10 && (o - off).abs() <= 1e3 * tol
        });
        if !dup {
            normals.extend_from_slice(&nn);
            offsets.push(off);
        }
        used.extend_from_slice(f);
    }
    used.sort_unstable();
    used.dedup();
    // Keep only extreme vertices: a vertex must lie on at least three
    // non-parallel facets.
    let verts: Vec<f64> = used
        .into_iter()
        .filter(|&i| {
            let x = pt(points, i);
            let on: Vec<[f64; 3]> = (0..offsets.len())
                .filter(|&k| (dot3([normals[3 * k], normals[3 * k + 1], normals[3 * k + 2]], x) - offsets[k]).abs() <= 1e3 * tol)
                .map(|k| [normals[3 * k], normals[3 * k + 1], normals[3 * k + 2]])
                .collect();
            on.iter().enumerate().any(|(a, na)| {
                on.iter().enumerate().any(|(b, nb)| {
                    b > a && on.iter().skip(b + 1).any(|nc| dot3(cross3(*na, *nb), *nc).abs() > 1e-9)
                })
            })
        })
        .flat_map(|i| pt(points, i))
        .collect();
    Ok((verts, normals, offsets))
}
