//! Symmetric 2×2 matrices stored as `[a, b, c]` for `[[a, b], [b, c]]`.

pub type Sym2 = [f64; 3];

/// Eigenvalues in ascending order.
pub fn eigenvalues(m: Sym2) -> [f64; 2] {
    let mean = 0.5 * (m[0] + m[2]);
    let r = (0.5 * (m[0] - m[2])).hypot(m[1]);
    [mean - r, mean + r]
}

/// Unit eigenvector for the larger eigenvalue.
fn top_vector(m: Sym2) -> [f64; 2] {
    let [_, hi] = eigenvalues(m);
    // (A - hi I) v = 0: rows (a - hi, b), (b, c - hi).
    let v1 = [m[1], hi - m[0]];
    let v2 = [hi - m[2], m[1]];
    let v = if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) { v1 } else { v2 };
    let n = v[0].hypot(v[1]);
    if n == 0.0 {
        [1.0, 0.0]
    } else {
        [v[0] / n, v[1] / n]
    }
}

/// Projection onto the positive semidefinite cone (eigenvalues clamped at 0).
pub fn psd_projection(m: Sym2) -> Sym2 {
    let [lo, hi] = eigenvalues(m);
    if lo >= 0.0 {
        return m;
    }
    if hi <= 0.0 {
        return [0.0; 3];
    }
    let v = top_vector(m);
    [hi * v[0] * v[0], hi * v[0] * v[1], hi * v[1] * v[1]]
}

/// `Pᵀ M P` for a general 2×2 matrix `P` given row-major.
pub fn congruence(m: Sym2, p: [[f64; 2]; 2]) -> Sym2 {
    // (Pᵀ M P)_{kl} = Σ_{ij} P_{ik} M_{ij} P_{jl}
    let mm = [[m[0], m[1]], [m[1], m[2]]];
    let mut out = [[0.0; 2]; 2];
    for k in 0..2 {
        for l in 0..2 {
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += p[i][k] * mm[i][j] * p[j][l];
                }
            }
            out[k][l] = s;
        }
    }
    [out[0][0], 0.5 * (out[0][1] + out[1][0]), out[1][1]]
}

/// Operator norm of a symmetric matrix.
pub fn norm(m: Sym2) -> f64 {
    let [lo, hi] = eigenvalues(m);
    lo.abs().max(hi.abs())
}
