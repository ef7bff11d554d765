//! Normalization of convex bodies by the maximal inscribed ellipsoid.
//!
//! The ellipsoid `E = {B u + d : |u| <= 1}` with `B` symmetric positive
//! definite maximizes `log det B` subject to `‖B a_k‖ + a_k·d <= c_k` for every
//! facet `(a_k, c_k)`. We follow the central path of the log-barrier with
//! Newton steps; the inner ellipsoid stays strictly feasible throughout, so
//! `B(0,1) ⊆ T(body)` holds by construction and the outer inclusion improves
//! with the barrier parameter.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{AffineMap, ConvexBody, GeometryError};

/// Options for the barrier iteration.
#[derive(Debug, Clone, Copy)]
pub struct JohnOptions {
    /// Final barrier weight on `log det B`; the duality gap is `facets / weight`.
    pub final_weight: f64,
    pub max_newton: usize,
}

impl Default for JohnOptions {
    fn default() -> Self {
        Self { final_weight: 1e12, max_newton: 400 }
    }
}

/// Maximal inscribed ellipsoid as `(B, d)`.
pub fn max_inscribed_ellipsoid(
    body: &ConvexBody,
    opts: JohnOptions,
) -> Result<(DMatrix<f64>, DVector<f64>), GeometryError> {
    let n = body.dim();
    // Work in a frame where the body has unit size.
    let c0 = DVector::from_vec(body.centroid_of_vertices());
    let scale = body.max_distance_from(c0.as_slice());
    if !(scale > 0.0) {
        return Err(GeometryError::DegenerateBody("zero extent".into()));
    }
    let facets: Vec<(DVector<f64>, f64)> = body
        .facets()
        .map(|(a, c)| {
            let a = DVector::from_column_slice(a);
            let c = (c - a.dot(&c0)) / scale;
            (a, c)
        })
        .collect();
    let depth0 = facets.iter().map(|(_, c)| *c).fold(f64::INFINITY, f64::min);
    if !(depth0 > 1e-12) {
        return Err(GeometryError::DegenerateBody("empty interior".into()));
    }

    let basis: Vec<DMatrix<f64>> = {
        let mut v = Vec::new();
        for i in 0..n {
            for j in i..n {
                let mut e = DMatrix::zeros(n, n);
                e[(i, j)] = 1.0;
                e[(j, i)] = 1.0;
                v.push(e);
            }
        }
        v
    };
    let ms = basis.len();
    let nv = ms + n;
    // `E_m a` for every facet normal, fixed through the iteration.
    let em_all: Vec<Vec<DVector<f64>>> = facets.iter().map(|(a, _)| basis.iter().map(|e| e * a).collect()).collect();
    let assemble = |x: &DVector<f64>| -> (DMatrix<f64>, DVector<f64>) {
        let mut b = DMatrix::zeros(n, n);
        for (m, e) in basis.iter().enumerate() {
            b += e * x[m];
        }
        (b, x.rows(ms, n).into_owned())
    };
    let objective = |x: &DVector<f64>, w: f64| -> Option<f64> {
        let (b, d) = assemble(x);
        let chol = b.clone().cholesky()?;
        let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let mut f = -w * logdet;
        for (a, c) in &facets {
            let g = c - a.dot(&d) - (&b * a).norm();
            if !(g > 0.0) {
                return None;
            }
            f -= g.ln();
        }
        Some(f)
    };

    let mut x = DVector::zeros(nv);
    for i in 0..n {
        // Diagonal entries of the basis sit at positions where i == j.
        let m = (0..i).map(|r| n - r).sum::<usize>();
        x[m] = 0.5 * depth0;
    }
    let mut w = 1.0;
    let mut newton_steps = 0;
    loop {
        loop {
            let (b, d) = assemble(&x);
            let binv = b.clone().try_inverse().ok_or_else(|| GeometryError::DegenerateBody("singular ellipsoid".into()))?;
            let mut grad = DVector::zeros(nv);
            let mut hess = DMatrix::zeros(nv, nv);
            let be: Vec<DMatrix<f64>> = basis.iter().map(|e| &binv * e).collect();
            for m in 0..ms {
                grad[m] -= w * be[m].trace();
                for l in 0..ms {
                    hess[(m, l)] += w * (&be[m] * &be[l]).trace();
                }
            }
            let mut dg = DVector::zeros(nv);
            for ((a, c), em) in facets.iter().zip(&em_all) {
                let y = &b * a;
                let ny = y.norm();
                let g = c - a.dot(&d) - ny;
                let yh = &y / ny;
                for m in 0..ms {
                    dg[m] = -yh.dot(&em[m]);
                }
                for k in 0..n {
                    dg[ms + k] = -a[k];
                }
                grad.axpy(-1.0 / g, &dg, 1.0);
                hess.ger(1.0 / (g * g), &dg, &dg, 1.0);
                for m in 0..ms {
                    let ym = yh.dot(&em[m]);
                    for l in 0..ms {
                        let proj = em[m].dot(&em[l]) - ym * yh.dot(&em[l]);
                        hess[(m, l)] += proj / (ny * g);
                    }
                }
            }
            let step = match hess.clone().cholesky() {
                Some(ch) => -ch.solve(&grad),
                None => -&grad,
            };
            let dec = -grad.dot(&step);
            if dec < 1e-20 {
                break;
            }
            // Inside the quadratic region a feasible full step is taken
            // without comparing objective values, which lose resolution at
            // large weights.
            if dec < 0.25 {
                let trial = &x + &step;
                if objective(&trial, w).is_some() {
                    x = trial;
                    newton_steps += 1;
                    if dec < 1e-12 || newton_steps > opts.max_newton {
                        break;
                    }
                    continue;
                }
            }
            let f0 = objective(&x, w).expect("iterate is feasible");
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial = &x + &step * alpha;
                if let Some(f1) = objective(&trial, w) {
                    if f1 <= f0 - 0.25 * alpha * dec {
                        x = trial;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            newton_steps += 1;
            if !accepted || dec < 1e-14 || newton_steps > opts.max_newton {
                break;
            }
        }
        if w >= opts.final_weight {
            break;
        }
        w = (w * 20.0).min(opts.final_weight);
    }

    let (b, d) = assemble(&x);
    let eig = SymmetricEigen::new(b.clone());
    let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo > 0.0) || hi / lo > 1e12 {
        return Err(GeometryError::DegenerateBody(format!("inscribed ellipsoid axis ratio {}", hi / lo)));
    }
    Ok((b * scale, c0 + d * scale))
}

/// Affine map `T` with `B(0,1) ⊆ T(body) ⊆ B(0,n)`: the inverse of the
/// parametrization of the maximal inscribed ellipsoid.
pub fn john_normalize(body: &ConvexBody) -> Result<AffineMap, GeometryError> {
    let (b, d) = max_inscribed_ellipsoid(body, JohnOptions::default())?;
    let binv = b.try_inverse().ok_or_else(|| GeometryError::DegenerateBody("singular ellipsoid".into()))?;
    let t = -(&binv * d);
    AffineMap::new(binv, t)
}

/// Radii `(r_in, r_out)` of `T(body)` about the origin: the facet distance
/// and the largest vertex norm.
pub fn normalization_radii(body: &ConvexBody, t: &AffineMap) -> (f64, f64) {
    let img = body.map(t);
    let zero = vec![0.0; body.dim()];
    (img.depth(&zero), img.max_distance_from(&zero))
}

/// Volume of the unit ball in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 / 3.0 * std::f64::consts::PI,
        _ => {
            let n = n as f64;
            std::f64::consts::PI.powf(n / 2.0) / gamma_half_int(n / 2.0 + 1.0)
        }
    }
}

fn gamma_half_int(x: f64) -> f64 {
    // x is an integer or half-integer here.
    if (x - 0.5).abs() < 1e-12 {
        return std::f64::consts::PI.sqrt();
    }
    if (x - 1.0).abs() < 1e-12 {
        return 1.0;
    }
    (x - 1.0) * gamma_half_int(x - 1.0)
}
