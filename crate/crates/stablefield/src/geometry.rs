//! Polytope geometry of a quotient action: the projected unit-box set
//! `Delta = { y in R^p : exists lambda, ||U y + V lambda||_inf <= 1 }`,
//! its fibers `Q_y`, the fiber volume `V(y)`, and `int_Delta V(y)^alpha dy`.
//!
//! `Delta` is closed (all inequalities are `<=`). The fiber dimension is
//! `d - p`; exact evaluation is available for `d - p <= 2` and
//! `Leb(Delta)` is exact for `p <= 2`. Higher dimensions fall back to
//! midpoint-grid quadrature with a reported error bound.
//!
//! Note on naming: the fiber volume is a `(d-p)`-dimensional measure; that
//! dimension is called `fiber_dim` here and is unrelated to the
//! neighborhood radius `q` of the point-process layer.

use crate::error::{Error, Result};
use crate::lattice::GroupStructure;

/// Result of a geometric quadrature; `exact` marks closed-form paths
/// (interval length, polygon area), where `error_bound` only accounts for
/// floating-point evaluation.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_bound: f64,
    pub exact: bool,
}

/// Geometry attached to a [`GroupStructure`].
#[derive(Debug, Clone)]
pub struct ActionGeometry {
    d: usize,
    p: usize,
    u: Vec<Vec<f64>>, // d x p
    v: Vec<Vec<f64>>, // d x (d-p)
    /// Halfspace description of Delta after Fourier-Motzkin elimination:
    /// integer rows `a . y <= b`.
    delta_rows: Vec<(Vec<i128>, i128)>,
    /// Bounding box half-width per free axis.
    box_bound: Vec<f64>,
    /// Midpoint-grid resolution per axis for the non-exact fallback.
    pub quadrature_grid: usize,
}

impl ActionGeometry {
    pub fn new(structure: &GroupStructure) -> Result<Self> {
        let d = structure.dim();
        let p = structure.free_rank();
        let um = structure.basis_u();
        let vm = structure.basis_v();
        let u: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..p).map(|j| um.get(i, j) as f64).collect())
            .collect();
        let v: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d - p).map(|j| vm.get(i, j) as f64).collect())
            .collect();

        // 2d inequalities +-(U y + V lambda)_i <= 1 over (y, lambda).
        let mut rows: Vec<(Vec<i128>, i128)> = Vec::with_capacity(2 * d);
        for i in 0..d {
            let mut coef: Vec<i128> = Vec::with_capacity(d);
            for j in 0..p {
                coef.push(um.get(i, j) as i128);
            }
            for j in 0..d - p {
                coef.push(vm.get(i, j) as i128);
            }
            rows.push((coef.clone(), 1));
            rows.push((coef.iter().map(|&c| -c).collect(), 1));
        }
        // Eliminate the lambda variables (positions p..d).
        for var in (p..d).rev() {
            rows = fm_eliminate(rows, var)?;
        }
        let delta_rows: Vec<(Vec<i128>, i128)> = rows
            .into_iter()
            .map(|(c, b)| (c[..p].to_vec(), b))
            .collect();

        let box_bound = delta_box_bound(&delta_rows, p);
        Ok(ActionGeometry {
            d,
            p,
            u,
            v,
            delta_rows,
            box_bound,
            quadrature_grid: 2048,
        })
    }

    pub fn fiber_dim(&self) -> usize {
        self.d - self.p
    }

    pub fn free_rank(&self) -> usize {
        self.p
    }

    /// Exact evaluation available for the fiber volume and `Leb(Delta)`.
    pub fn exact_dims(&self) -> bool {
        self.fiber_dim() <= 2 && self.p <= 2
    }

    /// Membership in `Delta` via the eliminated inequality description.
    pub fn delta_contains(&self, y: &[f64]) -> bool {
        assert_eq!(y.len(), self.p);
        self.delta_rows.iter().all(|(a, b)| {
            let dot: f64 = a.iter().zip(y).map(|(&c, &yi)| c as f64 * yi).sum();
            dot <= *b as f64 + 1e-9 * (1.0 + (*b as f64).abs())
        })
    }

    /// Bounding box of `Delta` (componentwise `[-w_i, w_i]`).
    pub fn bounding_box(&self) -> &[f64] {
        &self.box_bound
    }

    /// `(d-p)`-dimensional volume of the fiber
    /// `Q_y = { lambda : ||U y + V lambda||_inf <= 1 }`; zero off `Delta`.
    pub fn q_volume(&self, y: &[f64]) -> f64 {
        assert_eq!(y.len(), self.p);
        let uy: Vec<f64> = (0..self.d)
            .map(|i| (0..self.p).map(|j| self.u[i][j] * y[j]).sum())
            .collect();
        match self.fiber_dim() {
            0 => {
                if uy.iter().all(|&t| t.abs() <= 1.0 + 1e-12) {
                    1.0
                } else {
                    0.0
                }
            }
            1 => {
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for i in 0..self.d {
                    let a = self.v[i][0];
                    // -1 <= uy_i + a*lambda <= 1
                    if a > 0.0 {
                        lo = lo.max((-1.0 - uy[i]) / a);
                        hi = hi.min((1.0 - uy[i]) / a);
                    } else if a < 0.0 {
                        lo = lo.max((1.0 - uy[i]) / a);
                        hi = hi.min((-1.0 - uy[i]) / a);
                    } else if uy[i].abs() > 1.0 + 1e-12 {
                        return 0.0;
                    }
                }
                (hi - lo).max(0.0)
            }
            2 => {
                let halfplanes: Vec<(f64, f64, f64)> = (0..self.d)
                    .flat_map(|i| {
                        let (a0, a1) = (self.v[i][0], self.v[i][1]);
                        [
                            (a0, a1, 1.0 - uy[i]),   //  v.lambda <= 1 - uy
                            (-a0, -a1, 1.0 + uy[i]), // -v.lambda <= 1 + uy
                        ]
                    })
                    .collect();
                let reach = 1.0 + uy.iter().fold(0.0f64, |m, &t| m.max(t.abs()));
                let lb = self.lambda_bound(reach);
                polygon_area(&halfplanes, (lb[0] + 1.0, lb[1] + 1.0))
            }
            r => self.q_volume_grid(&uy, r).0,
        }
    }

    /// Midpoint-grid fiber volume for fiber dimension `>= 3`; returns
    /// `(estimate, error bound)`. The bound counts mixed cells, which is
    /// valid because `Q_y` is convex.
    fn q_volume_grid(&self, uy: &[f64], r: usize) -> (f64, f64) {
        let reach = 1.0 + uy.iter().fold(0.0f64, |m, &t| m.max(t.abs()));
        let bound = self.lambda_bound(reach);
        let grid = self.quadrature_grid.min(64);
        let mut cell = 1.0;
        for b in &bound {
            cell *= 2.0 * b / grid as f64;
        }
        let feasible = |lambda: &[f64]| -> bool {
            (0..self.d).all(|i| {
                let vl: f64 = (0..r).map(|j| self.v[i][j] * lambda[j]).sum();
                (uy[i] + vl).abs() <= 1.0
            })
        };
        let mut inside = 0u64;
        let mut boundary = 0u64;
        let mut idx = vec![0usize; r];
        let mut lambda = vec![0.0; r];
        'outer: loop {
            for j in 0..r {
                lambda[j] = -bound[j] + (idx[j] as f64 + 0.5) * 2.0 * bound[j] / grid as f64;
            }
            if feasible(&lambda) {
                inside += 1;
            }
            let corners = 1usize << r;
            let mut corners_inside = 0;
            for c in 0..corners {
                let mut corner = lambda.clone();
                for (j, item) in corner.iter_mut().enumerate() {
                    let off = if c >> j & 1 == 1 { 0.5 } else { -0.5 };
                    *item += off * 2.0 * bound[j] / grid as f64;
                }
                if feasible(&corner) {
                    corners_inside += 1;
                }
            }
            if corners_inside != 0 && corners_inside != corners {
                boundary += 1;
            }
            let mut j = 0;
            loop {
                if j == r {
                    break 'outer;
                }
                idx[j] += 1;
                if idx[j] < grid {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
        (inside as f64 * cell, boundary as f64 * cell)
    }

    fn lambda_bound(&self, reach: f64) -> Vec<f64> {
        let r = self.fiber_dim();
        let mut g = vec![vec![0.0; r]; r];
        for (a, row) in g.iter_mut().enumerate() {
            for (b, entry) in row.iter_mut().enumerate() {
                *entry = (0..self.d).map(|i| self.v[i][a] * self.v[i][b]).sum();
            }
        }
        let ginv = invert_small(&g);
        (0..r)
            .map(|j| {
                let row_l1: f64 = (0..self.d)
                    .map(|i| {
                        (0..r)
                            .map(|k| ginv[j][k] * self.v[i][k])
                            .sum::<f64>()
                            .abs()
                    })
                    .sum();
                reach * row_l1 + 1e-9
            })
            .collect()
    }

    /// Lebesgue measure of `Delta` in `R^p`.
    pub fn leb_delta(&self) -> Result<QuadResult> {
        match self.p {
            0 => Err(Error::Unsupported("Delta needs free rank p >= 1".into())),
            1 => {
                let (lo, hi) = self.delta_interval()?;
                Ok(QuadResult {
                    value: (hi - lo).max(0.0),
                    error_bound: 1e-12 * (1.0 + hi.abs() + lo.abs()),
                    exact: true,
                })
            }
            2 => {
                let halfplanes: Vec<(f64, f64, f64)> = self
                    .delta_rows
                    .iter()
                    .map(|(a, b)| (a[0] as f64, a[1] as f64, *b as f64))
                    .collect();
                let area = polygon_area(
                    &halfplanes,
                    (self.box_bound[0] + 1.0, self.box_bound[1] + 1.0),
                );
                Ok(QuadResult {
                    value: area,
                    error_bound: 1e-10 * (1.0 + area),
                    exact: true,
                })
            }
            _ => Ok(self.leb_delta_grid()),
        }
    }

    fn delta_interval(&self) -> Result<(f64, f64)> {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (a, b) in &self.delta_rows {
            let a0 = a[0] as f64;
            let bf = *b as f64;
            if a0 > 0.0 {
                hi = hi.min(bf / a0);
            } else if a0 < 0.0 {
                lo = lo.max(bf / a0);
            } else if bf < 0.0 {
                return Ok((0.0, 0.0));
            }
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Unsupported("Delta is unbounded".into()));
        }
        Ok((lo, hi))
    }

    fn leb_delta_grid(&self) -> QuadResult {
        let grid = self.quadrature_grid.min(128);
        let mut cell = 1.0;
        for &w in &self.box_bound {
            cell *= 2.0 * w / grid as f64;
        }
        let mut inside = 0u64;
        let mut idx = vec![0usize; self.p];
        let mut y = vec![0.0; self.p];
        'outer: loop {
            for j in 0..self.p {
                y[j] =
                    -self.box_bound[j] + (idx[j] as f64 + 0.5) * 2.0 * self.box_bound[j] / grid as f64;
            }
            if self.delta_contains(&y) {
                inside += 1;
            }
            let mut j = 0;
            loop {
                if j == self.p {
                    break 'outer;
                }
                idx[j] += 1;
                if idx[j] < grid {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
        let value = inside as f64 * cell;
        QuadResult {
            value,
            error_bound: (value / grid as f64) * 2.0 * self.p as f64 + cell,
            exact: false,
        }
    }

    /// `int_Delta V(y)^alpha dy`. Requires a genuine fiber (`p < d`).
    pub fn integral_v_alpha(&self, alpha: f64) -> Result<QuadResult> {
        if self.fiber_dim() == 0 {
            return Err(Error::Unsupported(
                "conservative volume factor requires p < d".into(),
            ));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::Domain("alpha must lie in (0,2)".into()));
        }
        match self.p {
            1 => {
                let (lo, hi) = self.delta_interval()?;
                let mut f = |y: f64| self.q_volume(&[y]).powf(alpha);
                let (value, err) = crate::numeric::adaptive_simpson(&mut f, lo, hi, 1e-10, 48);
                Ok(QuadResult {
                    value,
                    error_bound: err,
                    exact: false,
                })
            }
            2 => {
                let w0 = self.box_bound[0];
                let mut err_inner_max: f64 = 0.0;
                let mut outer = |y0: f64| {
                    let (lo, hi) = self.section_interval(y0);
                    if hi <= lo {
                        return 0.0;
                    }
                    let mut f = |y1: f64| self.q_volume(&[y0, y1]).powf(alpha);
                    let (v, e) = crate::numeric::adaptive_simpson(&mut f, lo, hi, 1e-11, 40);
                    err_inner_max = err_inner_max.max(e);
                    v
                };
                let (value, err) = crate::numeric::adaptive_simpson(&mut outer, -w0, w0, 1e-9, 40);
                let bound = err + err_inner_max * 2.0 * w0;
                Ok(QuadResult {
                    value,
                    error_bound: bound,
                    exact: false,
                })
            }
            _ => {
                let grid = self.quadrature_grid.min(96);
                let mut cell = 1.0;
                for &w in &self.box_bound {
                    cell *= 2.0 * w / grid as f64;
                }
                let mut acc = 0.0;
                let mut idx = vec![0usize; self.p];
                let mut y = vec![0.0; self.p];
                'outer: loop {
                    for j in 0..self.p {
                        y[j] = -self.box_bound[j]
                            + (idx[j] as f64 + 0.5) * 2.0 * self.box_bound[j] / grid as f64;
                    }
                    acc += self.q_volume(&y).powf(alpha);
                    let mut j = 0;
                    loop {
                        if j == self.p {
                            break 'outer;
                        }
                        idx[j] += 1;
                        if idx[j] < grid {
                            break;
                        }
                        idx[j] = 0;
                        j += 1;
                    }
                }
                let value = acc * cell;
                Ok(QuadResult {
                    value,
                    error_bound: value / grid as f64 * 4.0 * self.p as f64 + cell,
                    exact: false,
                })
            }
        }
    }

    /// For `p = 2`: the `y1`-interval of the Delta section at fixed `y0`.
    fn section_interval(&self, y0: f64) -> (f64, f64) {
        let (mut lo, mut hi) = (-self.box_bound[1], self.box_bound[1]);
        for (a, b) in &self.delta_rows {
            let a0 = a[0] as f64;
            let a1 = a[1] as f64;
            let rhs = *b as f64 - a0 * y0;
            if a1 > 0.0 {
                hi = hi.min(rhs / a1);
            } else if a1 < 0.0 {
                lo = lo.max(rhs / a1);
            } else if rhs < 0.0 {
                return (0.0, 0.0);
            }
        }
        (lo, hi)
    }
}

/// One Fourier-Motzkin elimination step over integer inequality rows
/// `coef . x <= b`, removing variable `var`.
fn fm_eliminate(rows: Vec<(Vec<i128>, i128)>, var: usize) -> Result<Vec<(Vec<i128>, i128)>> {
    let cap = || Error::Capacity("overflow in Fourier-Motzkin elimination".into());
    let mut zero = Vec::new();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for row in rows {
        match row.0[var].signum() {
            0 => zero.push(row),
            1 => pos.push(row),
            _ => neg.push(row),
        }
    }
    let mut out = zero;
    for (cp, bp) in &pos {
        for (cn, bn) in &neg {
            let ap = cp[var];
            let an = -cn[var]; // > 0
            let mut coef = Vec::with_capacity(cp.len());
            for (x, y) in cp.iter().zip(cn) {
                let t = an
                    .checked_mul(*x)
                    .and_then(|l| ap.checked_mul(*y).map(|r| (l, r)))
                    .and_then(|(l, r)| l.checked_add(r))
                    .ok_or_else(cap)?;
                coef.push(t);
            }
            let b = an
                .checked_mul(*bp)
                .and_then(|l| ap.checked_mul(*bn).map(|r| (l, r)))
                .and_then(|(l, r)| l.checked_add(r))
                .ok_or_else(cap)?;
            debug_assert_eq!(coef[var], 0);
            let mut g = b.abs();
            for &c in &coef {
                g = gcd(g, c.abs());
            }
            if g > 1 {
                for c in &mut coef {
                    *c /= g;
                }
                out.push((coef, b / g));
            } else {
                out.push((coef, b));
            }
        }
    }
    Ok(out)
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn delta_box_bound(rows: &[(Vec<i128>, i128)], p: usize) -> Vec<f64> {
    // Delta is compact; scan single-variable rows first, then fall back to
    // a conservative global bound.
    let mut bound = vec![f64::INFINITY; p];
    for (axis, w) in bound.iter_mut().enumerate() {
        let mut hi = f64::INFINITY;
        for (a, b) in rows {
            if a[axis] != 0 && a.iter().enumerate().all(|(j, &c)| j == axis || c == 0) {
                hi = hi.min((*b as f64 / a[axis] as f64).abs());
            }
        }
        *w = hi;
    }
    if bound.iter().any(|w| !w.is_finite()) {
        let mut global: f64 = 0.0;
        for (a, b) in rows {
            let amax = a.iter().map(|&c| c.abs()).max().unwrap_or(0);
            if amax > 0 {
                global = global.max((*b as f64 / amax as f64).abs());
            }
        }
        for w in &mut bound {
            if !w.is_finite() {
                *w = global.max(1.0) * p as f64;
            }
        }
    }
    bound
}

/// Inverse of a small symmetric positive-definite matrix (Gauss-Jordan).
fn invert_small(g: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = g.len();
    let mut a: Vec<Vec<f64>> = g.to_vec();
    let mut inv = vec![vec![0.0; n]; n];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for k in 0..n {
        let piv = a[k][k];
        for j in 0..n {
            a[k][j] /= piv;
            inv[k][j] /= piv;
        }
        for i in 0..n {
            if i != k {
                let f = a[i][k];
                for j in 0..n {
                    a[i][j] -= f * a[k][j];
                    inv[i][j] -= f * inv[k][j];
                }
            }
        }
    }
    inv
}

/// Area of the polygon `{ x : a0 x0 + a1 x1 <= b }` for all given
/// halfplanes, clipped from the given initial box.
fn polygon_area(halfplanes: &[(f64, f64, f64)], half_width: (f64, f64)) -> f64 {
    let (m0, m1) = half_width;
    let mut poly = vec![(-m0, -m1), (m0, -m1), (m0, m1), (-m0, m1)];
    for &(a0, a1, b) in halfplanes {
        if a0 == 0.0 && a1 == 0.0 {
            if b < 0.0 {
                return 0.0;
            }
            continue;
        }
        poly = clip(&poly, a0, a1, b);
        if poly.is_empty() {
            return 0.0;
        }
    }
    let mut area = 0.0;
    for i in 0..poly.len() {
        let (x0, y0) = poly[i];
        let (x1, y1) = poly[(i + 1) % poly.len()];
        area += x0 * y1 - x1 * y0;
    }
    area.abs() / 2.0
}

fn clip(poly: &[(f64, f64)], a0: f64, a1: f64, b: f64) -> Vec<(f64, f64)> {
    let inside = |p: (f64, f64)| a0 * p.0 + a1 * p.1 <= b + 1e-12;
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let cur = poly[i];
        let nxt = poly[(i + 1) % poly.len()];
        let (ic, inx) = (inside(cur), inside(nxt));
        if ic {
            out.push(cur);
        }
        if ic != inx {
            let fc = a0 * cur.0 + a1 * cur.1 - b;
            let fn_ = a0 * nxt.0 + a1 * nxt.1 - b;
            let t = fc / (fc - fn_);
            out.push((cur.0 + t * (nxt.0 - cur.0), cur.1 + t * (nxt.1 - cur.1)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{analyze_action, IntMatrix};

    fn example41_geom() -> ActionGeometry {
        let b = IntMatrix::from_cols(2, &[vec![1, 1]]).unwrap();
        ActionGeometry::new(&analyze_action(&b).unwrap()).unwrap()
    }

    #[test]
    fn example41_delta() {
        let g = example41_geom();
        assert!(g.delta_contains(&[0.0]));
        assert!(g.delta_contains(&[2.0]));
        assert!(!g.delta_contains(&[2.5]));
        assert!(g.delta_contains(&[-1.5]));
        assert_eq!(g.leb_delta().unwrap().value, 4.0);
    }

    #[test]
    fn example41_fiber_volume() {
        let g = example41_geom();
        assert!((g.q_volume(&[0.0]) - 2.0).abs() < 1e-12);
        assert!((g.q_volume(&[1.0]) - 1.0).abs() < 1e-12);
        assert!(g.q_volume(&[2.0]).abs() < 1e-12);
        assert!(g.q_volume(&[-2.0]).abs() < 1e-12);
        assert!((g.q_volume(&[-1.5]) - 0.5).abs() < 1e-12);
        assert!(g.q_volume(&[2.5]) == 0.0);
    }

    #[test]
    fn example41_integral() {
        let g = example41_geom();
        for (alpha, expect) in [
            (1.0, 4.0),
            (0.5, 2.0 * 2.0f64.powf(1.5) / 1.5),
            (1.5, 2.0 * 2.0f64.powf(2.5) / 2.5),
        ] {
            let r = g.integral_v_alpha(alpha).unwrap();
            assert!(
                (r.value - expect).abs() / expect < 1e-6,
                "alpha={alpha}: got {}, want {expect}",
                r.value
            );
        }
        // alpha -> 0 recovers Leb(Delta)
        let r = g.integral_v_alpha(1e-4).unwrap();
        assert!((r.value - 4.0).abs() < 1e-3);
    }

    #[test]
    fn torsion_structure_geometry() {
        let b = IntMatrix::from_cols(2, &[vec![2, 0]]).unwrap();
        let s = analyze_action(&b).unwrap();
        let g = ActionGeometry::new(&s).unwrap();
        // U = (0,1)^T, V = (2,0)^T: Delta = [-1,1], V(y) = 1 on Delta
        assert_eq!(g.leb_delta().unwrap().value, 2.0);
        assert!((g.q_volume(&[0.3]) - 1.0).abs() < 1e-12);
        // cross-check Leb by grid quadrature
        let grid = 10_000;
        let w = g.bounding_box()[0];
        let mut inside = 0u64;
        for i in 0..grid {
            let y = -w + (i as f64 + 0.5) * 2.0 * w / grid as f64;
            if g.delta_contains(&[y]) {
                inside += 1;
            }
        }
        let est = inside as f64 * 2.0 * w / grid as f64;
        assert!((est - 2.0).abs() < 1e-3, "grid estimate {est}");
    }

    #[test]
    fn trivial_kernel_geometry() {
        let s = analyze_action(&IntMatrix::zeros(2, 0)).unwrap();
        let g = ActionGeometry::new(&s).unwrap();
        assert_eq!(g.leb_delta().unwrap().value, 4.0); // 2^d
        assert!(g.delta_contains(&[1.0, -1.0]));
        assert!(!g.delta_contains(&[1.0, 1.2]));
        assert!(g.integral_v_alpha(1.0).is_err());
    }

    #[test]
    fn convexity_probe() {
        let g = example41_geom();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut found = 0;
        while found < 1000 {
            let y1 = 4.0 * next() - 2.0;
            let y2 = 4.0 * next() - 2.0;
            let theta = next();
            if g.delta_contains(&[y1]) && g.delta_contains(&[y2]) {
                found += 1;
                let mix = theta * y1 + (1.0 - theta) * y2;
                assert!(g.delta_contains(&[mix]));
            }
        }
    }

    #[test]
    fn contains_iff_positive_volume_off_boundary() {
        let g = example41_geom();
        for i in 0..400 {
            let y = -2.5 + i as f64 * 0.0125;
            let margin = 1e-9;
            if (y.abs() - 2.0).abs() < margin {
                continue;
            }
            let inside = g.delta_contains(&[y]);
            let vol = g.q_volume(&[y]);
            if y.abs() < 2.0 - margin {
                assert!(inside && vol > 0.0, "y = {y}");
            }
            if y.abs() > 2.0 + margin {
                assert!(!inside && vol == 0.0, "y = {y}");
            }
        }
    }

    #[test]
    fn fiber_volume_lipschitz_probe() {
        let g = example41_geom();
        let mut max_ratio: f64 = 0.0;
        let step = 1e-4;
        let mut y = -2.2;
        while y < 2.2 {
            let dv = (g.q_volume(&[y + step]) - g.q_volume(&[y])).abs();
            max_ratio = max_ratio.max(dv / step);
            y += 0.013;
        }
        assert!(max_ratio < 1.5 + 1e-6, "fitted Lipschitz {max_ratio}");
    }
}
