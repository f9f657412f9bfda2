use super::{Bc, Field};

/// Normalized quartic-bump weights `(1 − r²/θ²)²` on `r < θ`, as
/// `(di, dj, w)` offsets. The centre cell is always included.
pub fn mollifier_weights(hx: f64, hy: f64, theta: f64) -> Vec<(isize, isize, f64)> {
    let rx = (theta / hx).floor() as isize;
    let ry = (theta / hy).floor() as isize;
    let mut w = Vec::new();
    for dj in -ry..=ry {
        for di in -rx..=rx {
            let r2 = (di as f64 * hx).powi(2) + (dj as f64 * hy).powi(2);
            let s = 1.0 - r2 / (theta * theta);
            if s > 0.0 {
                w.push((di, dj, s * s));
            }
        }
    }
    let total: f64 = w.iter().map(|t| t.2).sum();
    for t in &mut w {
        t.2 /= total;
    }
    w
}

/// Discrete convolution with the bump of radius `theta`, zero outside Ω.
pub fn mollify<const N: usize>(f: &Field<N>, theta: f64) -> Field<N> {
    let g = *f.grid();
    let w = mollifier_weights(g.hx, g.hy, theta);
    let mut out = Field::zeros(g, f.bc());
    for (i, j) in g.cells() {
        let mut acc = [0.0; N];
        for &(di, dj, wt) in &w {
            let (ii, jj) = (i as isize + di, j as isize + dj);
            if ii < 0 || jj < 0 || ii >= g.nx as isize || jj >= g.ny as isize {
                continue;
            }
            let v = f.get(ii as usize, jj as usize);
            for k in 0..N {
                acc[k] += wt * v[k];
            }
        }
        out.set(i, j, acc);
    }
    out
}

/// Mollified initial datum: convolution plus the positivity shift.
///
/// Scalars (density, number density) gain `+θ`, tensors `+θI`, velocities
/// are only smoothed.
pub fn mollify_initial<const N: usize>(f: &Field<N>, theta: f64) -> Field<N> {
    let mut out = mollify(f, theta);
    let shift: [f64; N] = match (N, f.bc()) {
        (1, Bc::ScalarNeumann) => std::array::from_fn(|_| theta),
        (3, _) => std::array::from_fn(|k| if k == 1 { 0.0 } else { theta }),
        _ => [0.0; N],
    };
    for v in out.data_mut() {
        for k in 0..N {
            v[k] += shift[k];
        }
    }
    out
}
