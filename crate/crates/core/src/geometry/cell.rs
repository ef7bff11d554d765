//! Convex polygons in slope space cut out by half-planes.
//!
//! The subdifferential of a piecewise-linear convex function at a node `x_i`
//! is `{g : g·(x_j − x_i) <= u_j − u_i for all j}`. Each edge of the clipped
//! polygon remembers which constraint produced it, which is what the Newton
//! solver needs for the Jacobian of cell areas.

/// Label of the bounding box edges.
pub const BOX: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Counter-clockwise vertices.
    pub verts: Vec<[f64; 2]>,
    /// `labels[k]` is the constraint owning the edge `verts[k] → verts[k+1]`.
    pub labels: Vec<u32>,
}

impl Cell {
    pub fn boxed(center: [f64; 2], half: f64) -> Self {
        let [cx, cy] = center;
        Self {
            verts: vec![[cx - half, cy - half], [cx + half, cy - half], [cx + half, cy + half], [cx - half, cy + half]],
            labels: vec![BOX; 4],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.verts.len() < 3
    }

    /// True when no bounding-box edge survived.
    pub fn is_bounded(&self) -> bool {
        !self.is_empty() && self.labels.iter().all(|&l| l != BOX)
    }

    /// Keep `{g : n·g <= rhs}`.
    pub fn clip(&mut self, n: [f64; 2], rhs: f64, label: u32) {
        let m = self.verts.len();
        if m < 3 {
            return;
        }
        let mut scale = rhs.abs();
        let s: Vec<f64> = self
            .verts
            .iter()
            .map(|v| {
                let d = n[0] * v[0] + n[1] * v[1];
                scale = scale.max(d.abs());
                d - rhs
            })
            .collect();
        let eps = 1e-13 * scale;
        if s.iter().all(|&x| x <= eps) {
            return;
        }
        if s.iter().all(|&x| x >= -eps) {
            self.verts.clear();
            self.labels.clear();
            return;
        }
        let mut verts = Vec::with_capacity(m + 1);
        let mut labels = Vec::with_capacity(m + 1);
        for k in 0..m {
            let k1 = (k + 1) % m;
            let (sc, sn) = (s[k], s[k1]);
            let (inc, inn) = (sc <= eps, sn <= eps);
            if inc {
                verts.push(self.verts[k]);
                labels.push(self.labels[k]);
            }
            if inc != inn {
                let (a, b) = (self.verts[k], self.verts[k1]);
                let t = (sc / (sc - sn)).clamp(0.0, 1.0);
                let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                verts.push(p);
                labels.push(if inc { label } else { self.labels[k] });
            }
        }
        // Collapse near-duplicate consecutive vertices; the surviving vertex
        // keeps the label of the edge that leaves it.
        let tol = 1e-14 * scale.max(1e-300) / (n[0].abs() + n[1].abs()).max(1e-300);
        let mut out_v: Vec<[f64; 2]> = Vec::with_capacity(verts.len());
        let mut out_l: Vec<u32> = Vec::with_capacity(verts.len());
        for (v, l) in verts.into_iter().zip(labels) {
            if let Some(last) = out_v.last() {
                if (last[0] - v[0]).abs() <= tol && (last[1] - v[1]).abs() <= tol {
                    out_v.pop();
                    out_l.pop();
                }
            }
            out_v.push(v);
            out_l.push(l);
        }
        while out_v.len() > 1 {
            let (f, l) = (out_v[0], out_v[out_v.len() - 1]);
            if (f[0] - l[0]).abs() <= tol && (f[1] - l[1]).abs() <= tol {
                out_v.pop();
                out_l.pop();
            } else {
                break;
            }
        }
        self.verts = out_v;
        self.labels = out_l;
        if self.verts.len() < 3 || self.area() <= 0.0 {
            self.verts.clear();
            self.labels.clear();
        }
    }

    pub fn area(&self) -> f64 {
        if self.verts.len() < 3 {
            return 0.0;
        }
        super::body::polygon_area(&self.verts)
    }

    pub fn centroid(&self) -> [f64; 2] {
        let m = self.verts.len();
        let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
        let o = self.verts[0];
        for k in 1..m.saturating_sub(1) {
            let (p, q) = (self.verts[k], self.verts[k + 1]);
            let w = 0.5 * ((p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0]));
            cx += w * (o[0] + p[0] + q[0]) / 3.0;
            cy += w * (o[1] + p[1] + q[1]) / 3.0;
            a += w;
        }
        if a > 0.0 {
            [cx / a, cy / a]
        } else {
            let s = self.verts.iter().fold([0.0, 0.0], |s, v| [s[0] + v[0], s[1] + v[1]]);
            [s[0] / m.max(1) as f64, s[1] / m.max(1) as f64]
        }
    }

    /// Length of the edge `k`.
    pub fn edge_length(&self, k: usize) -> f64 {
        let (a, b) = (self.verts[k], self.verts[(k + 1) % self.verts.len()]);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }
}

/// Intersection of a convex polygon with a half-plane `n·x <= rhs`, plain
/// geometry without labels.
pub fn clip_polygon(poly: &[[f64; 2]], n: [f64; 2], rhs: f64) -> Vec<[f64; 2]> {
    let mut c = Cell { verts: poly.to_vec(), labels: vec![0; poly.len()] };
    c.clip(n, rhs, 0);
    c.verts
}
