use super::{Bc, Field, ScalarField2D, SymTensorField2D, VectorField2D};
use crate::error::{Error, Result};
use crate::symcalc::Mat2;

/// Centred gradient. The output tag is the dual parity of the input.
pub fn gradient(f: &ScalarField2D) -> VectorField2D {
    let g = *f.grid();
    let (rx, ry) = (0.5 / g.hx, 0.5 / g.hy);
    let mut out = Field::zeros(g, f.bc().dual());
    for (i, j) in g.cells() {
        let (ii, jj) = (i as isize, j as isize);
        let dx = (f.ghost(ii + 1, jj)[0] - f.ghost(ii - 1, jj)[0]) * rx;
        let dy = (f.ghost(ii, jj + 1)[0] - f.ghost(ii, jj - 1)[0]) * ry;
        out.set(i, j, [dx, dy]);
    }
    out
}

/// Centred divergence. Integrates to zero for odd (no-slip) input.
pub fn divergence(v: &VectorField2D) -> ScalarField2D {
    let g = *v.grid();
    let (rx, ry) = (0.5 / g.hx, 0.5 / g.hy);
    let mut out = Field::zeros(g, v.bc().dual());
    for (i, j) in g.cells() {
        let (ii, jj) = (i as isize, j as isize);
        let d = (v.ghost(ii + 1, jj)[0] - v.ghost(ii - 1, jj)[0]) * rx
            + (v.ghost(ii, jj + 1)[1] - v.ghost(ii, jj - 1)[1]) * ry;
        out.set(i, j, [d]);
    }
    out
}

/// Row-wise centred divergence `(∂ₓTₓₓ + ∂ᵧTₓᵧ, ∂ₓTₓᵧ + ∂ᵧTᵧᵧ)`.
pub fn tensor_divergence(t: &SymTensorField2D) -> VectorField2D {
    let g = *t.grid();
    let (rx, ry) = (0.5 / g.hx, 0.5 / g.hy);
    let mut out = Field::zeros(g, t.bc().dual());
    for (i, j) in g.cells() {
        let (ii, jj) = (i as isize, j as isize);
        let (e, w) = (t.ghost(ii + 1, jj), t.ghost(ii - 1, jj));
        let (n, s) = (t.ghost(ii, jj + 1), t.ghost(ii, jj - 1));
        out.set(
            i,
            j,
            [
                (e[0] - w[0]) * rx + (n[1] - s[1]) * ry,
                (e[1] - w[1]) * rx + (n[2] - s[2]) * ry,
            ],
        );
    }
    out
}

/// Centred velocity gradient per cell, `(∇u)_{ab} = ∂_b u_a`.
pub fn velocity_gradient(u: &VectorField2D) -> Vec<Mat2> {
    let g = *u.grid();
    let (rx, ry) = (0.5 / g.hx, 0.5 / g.hy);
    let mut out = Vec::with_capacity(g.len());
    for (i, j) in g.cells() {
        let (ii, jj) = (i as isize, j as isize);
        let (e, w) = (u.ghost(ii + 1, jj), u.ghost(ii - 1, jj));
        let (n, s) = (u.ghost(ii, jj + 1), u.ghost(ii, jj - 1));
        out.push(Mat2([
            [(e[0] - w[0]) * rx, (n[0] - s[0]) * ry],
            [(e[1] - w[1]) * rx, (n[1] - s[1]) * ry],
        ]));
    }
    out
}

fn check_laplacian_tag<const N: usize>(bc: Bc) -> Result<()> {
    let ok = match N {
        1 | 2 => matches!(bc, Bc::ScalarNeumann | Bc::VelocityDirichlet),
        3 => bc == Bc::TensorNeumann,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::TagMismatch(format!(
            "laplacian of a {N}-component field with tag {bc:?}"
        )))
    }
}

/// Five-point Laplacian with the field's ghost rule.
pub fn laplacian<const N: usize>(f: &Field<N>) -> Result<Field<N>> {
    check_laplacian_tag::<N>(f.bc())?;
    let g = *f.grid();
    let (rx, ry) = (1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy));
    let mut out = Field::zeros(g, f.bc());
    for (i, j) in g.cells() {
        let (ii, jj) = (i as isize, j as isize);
        let c = f.get(i, j);
        let (e, w) = (f.ghost(ii + 1, jj), f.ghost(ii - 1, jj));
        let (n, s) = (f.ghost(ii, jj + 1), f.ghost(ii, jj - 1));
        let v = std::array::from_fn(|k| {
            (e[k] - 2.0 * c[k] + w[k]) * rx + (n[k] - 2.0 * c[k] + s[k]) * ry
        });
        out.set(i, j, v);
    }
    Ok(out)
}

/// `Σ_faces |Δf / h|² · hx·hy`, the exact discrete Dirichlet form of [`laplacian`]:
/// `−Σ f · Δ_h f · hx·hy` equals this value for either ghost rule.
pub fn face_gradient_sq<const N: usize>(f: &Field<N>) -> f64 {
    let g = *f.grid();
    let (rx, ry) = (1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy));
    let odd = f.bc().parity() < 0.0;
    let sq = |a: [f64; N], b: [f64; N]| -> f64 { (0..N).map(|k| (a[k] - b[k]).powi(2)).sum() };
    let mut sum = 0.0;
    for (i, j) in g.cells() {
        let c = f.get(i, j);
        if i + 1 < g.nx {
            sum += sq(f.get(i + 1, j), c) * rx;
        }
        if j + 1 < g.ny {
            sum += sq(f.get(i, j + 1), c) * ry;
        }
        if odd {
            // wall faces: jump 2f over one spacing, half weight
            let walls_x = (i == 0) as u8 + (i + 1 == g.nx) as u8;
            let walls_y = (j == 0) as u8 + (j + 1 == g.ny) as u8;
            let c2: f64 = c.iter().map(|v| 4.0 * v * v).sum();
            sum += 0.5 * c2 * (walls_x as f64 * rx + walls_y as f64 * ry);
        }
    }
    sum * g.cell_area()
}

/// Conservative first-order upwind `div(u f)`, componentwise.
///
/// Face velocities are neighbour averages; the normal velocity on walls is
/// zero, so every flux telescopes and the result integrates to zero.
pub fn advect<const N: usize>(u: &VectorField2D, f: &Field<N>) -> Field<N> {
    let g = *f.grid();
    let (nx, ny) = (g.nx, g.ny);
    let mut out = Field::zeros(g, f.bc());
    let upwind = |vel: f64, l: [f64; N], r: [f64; N]| -> [f64; N] {
        let src = if vel > 0.0 { l } else { r };
        src.map(|c| vel * c)
    };
    let (rx, ry) = (1.0 / g.hx, 1.0 / g.hy);
    let data = out.data_mut();
    for j in 0..ny {
        for i in 0..nx - 1 {
            let (a, b) = (g.idx(i, j), g.idx(i + 1, j));
            let vel = 0.5 * (u.data()[a][0] + u.data()[b][0]);
            let flux = upwind(vel, f.data()[a], f.data()[b]);
            for k in 0..N {
                data[a][k] += flux[k] * rx;
                data[b][k] -= flux[k] * rx;
            }
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            let (a, b) = (g.idx(i, j), g.idx(i, j + 1));
            let vel = 0.5 * (u.data()[a][1] + u.data()[b][1]);
            let flux = upwind(vel, f.data()[a], f.data()[b]);
            for k in 0..N {
                data[a][k] += flux[k] * ry;
                data[b][k] -= flux[k] * ry;
            }
        }
    }
    out
}

pub fn advect_scalar(u: &VectorField2D, f: &ScalarField2D) -> ScalarField2D {
    advect(u, f)
}

/// `Div(u T)` with `Div(uT)_{κι} = div(u T_{κι})`.
pub fn advect_tensor(u: &VectorField2D, t: &SymTensorField2D) -> SymTensorField2D {
    advect(u, t)
}

/// Midpoint rule `Σ f · hx · hy`.
pub fn integrate_cells(f: &ScalarField2D) -> f64 {
    let s: f64 = f.values().sum();
    s * f.grid().cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use crate::symcalc::SymMat2;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid2D {
        Grid2D::new(n, n, 1.0, 1.0).unwrap()
    }

    fn interior_max(f: &VectorField2D, target: impl Fn(f64, f64) -> [f64; 2]) -> f64 {
        let g = *f.grid();
        let mut worst: f64 = 0.0;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let t = target(g.x(i), g.y(j));
                let v = f.get(i, j);
                worst = worst.max((v[0] - t[0]).abs()).max((v[1] - t[1]).abs());
            }
        }
        worst
    }

    #[test]
    fn gradient_of_constant_and_linear() {
        let g = grid(16);
        let c = ScalarField2D::scalar(g, |_, _| 3.5);
        assert_eq!(gradient(&c).max_abs(), 0.0);
        let lin = ScalarField2D::scalar(g, |x, _| x);
        assert!(interior_max(&gradient(&lin), |_, _| [1.0, 0.0]) < 1e-13);
    }

    #[test]
    fn gradient_second_order() {
        let err = |n| {
            let f = ScalarField2D::scalar(grid(n), |x, y| x * x + y * y + (x * y).sin());
            interior_max(&gradient(&f), |x, y| {
                [2.0 * x + y * (x * y).cos(), 2.0 * y + x * (x * y).cos()]
            })
        };
        let ratio = err(32) / err(64);
        assert!(ratio > 3.6, "ratio {ratio}");
    }

    #[test]
    fn divergence_examples() {
        let g = grid(12);
        let v = VectorField2D::velocity(g, |x, y| [x, y]);
        let d = divergence(&v);
        for j in 1..11 {
            for i in 1..11 {
                assert!((d.at(i, j) - 2.0).abs() < 1e-12);
            }
        }
        let t = SymTensorField2D::uniform(g, SymMat2::IDENTITY);
        assert_eq!(tensor_divergence(&t).max_abs(), 0.0);
    }

    #[test]
    fn adjoint_with_parity_pairing() {
        let g = Grid2D::new(9, 7, 1.3, 0.8).unwrap();
        let f = ScalarField2D::scalar(g, |x, y| (3.0 * x).cos() + x * y * y);
        let v = VectorField2D::velocity(g, |x, y| [(x * 5.0).sin() * y, x - y * y]);
        let lhs = g.integrate(|i, j| divergence(&v).at(i, j) * f.at(i, j));
        let gf = gradient(&f);
        let rhs = -g.integrate(|i, j| {
            let (a, b) = (v.get(i, j), gf.get(i, j));
            a[0] * b[0] + a[1] * b[1]
        });
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        assert!(integrate_cells(&divergence(&v)).abs() < 1e-13);
    }

    #[test]
    fn laplacian_eigenfunction_and_conservation() {
        let err = |n: usize| {
            let f = ScalarField2D::scalar(grid(n), |x, _| (PI * x).cos());
            let l = laplacian(&f).unwrap();
            let g = *f.grid();
            g.cells()
                .map(|(i, j)| (l.at(i, j) + PI * PI * f.at(i, j)).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e1 < 1e-2 && e1 / e2 > 3.8, "{e1} {e2}");

        let f = ScalarField2D::scalar(grid(10), |x, y| (x * 7.0).sin() * y + x * x);
        let l = laplacian(&f).unwrap();
        assert!(integrate_cells(&l).abs() < 1e-12 * f.max_abs().max(1.0) * 100.0);
    }

    #[test]
    fn laplacian_rejects_bad_tags() {
        let g = grid(4);
        let t = Field::<3>::zeros(g, Bc::ScalarNeumann);
        assert!(matches!(laplacian(&t), Err(Error::TagMismatch(_))));
        let s = Field::<1>::zeros(g, Bc::TensorNeumann);
        assert!(laplacian(&s).is_err());
    }

    #[test]
    fn dirichlet_form_matches_laplacian() {
        let g = Grid2D::new(7, 6, 1.0, 0.7).unwrap();
        let f = ScalarField2D::scalar(g, |x, y| (4.0 * x).sin() + y * y);
        let l = laplacian(&f).unwrap();
        let lhs = -g.integrate(|i, j| f.at(i, j) * l.at(i, j));
        assert!((lhs - face_gradient_sq(&f)).abs() < 1e-10 * lhs.abs());

        let u = VectorField2D::velocity(g, |x, y| [x * y, (x - y).cos()]);
        let l = laplacian(&u).unwrap();
        let lhs = -g.integrate(|i, j| {
            let (a, b) = (u.get(i, j), l.get(i, j));
            a[0] * b[0] + a[1] * b[1]
        });
        assert!((lhs - face_gradient_sq(&u)).abs() < 1e-10 * lhs.abs());
    }

    #[test]
    fn advect_examples() {
        let g = grid(12);
        let t = SymTensorField2D::uniform(g, SymMat2::new(2.0, 0.5, 1.0));
        assert_eq!(advect_tensor(&VectorField2D::zeros(g, Bc::VelocityDirichlet), &t).max_abs(), 0.0);
        let u = VectorField2D::velocity(g, |x, _| [x, 0.0]);
        let d = advect_tensor(&u, &t);
        for j in 0..12 {
            for i in 1..11 {
                let v = d.get(i, j);
                assert!((v[0] - 2.0).abs() < 1e-12 && (v[1] - 0.5).abs() < 1e-12);
            }
        }
        let u = VectorField2D::velocity(g, |x, y| [(PI * x).sin() * y, x * x - 0.3]);
        let rho = ScalarField2D::scalar(g, |x, y| 1.0 + x * y);
        assert!(integrate_cells(&advect_scalar(&u, &rho)).abs() < 1e-14);
    }

    #[test]
    fn advect_first_order() {
        let err = |n: usize| {
            let g = grid(n);
            let u = VectorField2D::velocity(g, |x, y| [(PI * x).sin() * (PI * y).sin(), 0.0]);
            let f = ScalarField2D::scalar(g, |x, _| 1.0 + x);
            let d = advect_scalar(&u, &f);
            let exact = |x: f64, y: f64| {
                let s = (PI * y).sin();
                PI * (PI * x).cos() * s * (1.0 + x) + (PI * x).sin() * s
            };
            let mut e: f64 = 0.0;
            for (i, j) in g.cells() {
                if i > 0 && i + 1 < n {
                    e = e.max((d.at(i, j) - exact(g.x(i), g.y(j))).abs());
                }
            }
            e
        };
        let r = err(32) / err(64);
        assert!(r > 1.7, "ratio {r}");
    }
}
