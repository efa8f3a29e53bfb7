//! Closed-form large-deviation limits and the numerical evaluation of the
//! point-process limit functionals.
//!
//! All scalar limits are finite sums over the mixing space and the kernel
//! support, exact up to floating point; the functional path integrates a
//! bounded test functional against the limit measure with the heavy-tail
//! substitution `x = x0 r^{-1/alpha}` reducing the mark integral to a
//! finite interval.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldKernel, StableFieldSpec};
use crate::geometry::ActionGeometry;
use crate::lattice::HElement;
use crate::numeric::adaptive_simpson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Quadrature,
}

/// An analytic limit with its evaluation method; quadrature values carry
/// an explicit error bound, closed forms report zero.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LimitValue {
    pub value: f64,
    pub method: Method,
    pub error_bound: f64,
}

impl LimitValue {
    fn closed(value: f64) -> Self {
        LimitValue {
            value,
            method: Method::ClosedForm,
            error_bound: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Side {
    Upper,
    TwoSided,
}

// ---------------------------------------------------------------------
// per-mixing-atom kernel summaries
// ---------------------------------------------------------------------

struct KernelStats {
    /// positive parts, descending
    pos: Vec<f64>,
    /// negative parts (as positives), descending
    neg: Vec<f64>,
    /// absolute values, descending
    abs: Vec<f64>,
    /// plain kernel sum over the site variable
    sum: f64,
}

fn kernel_stats(spec: &StableFieldSpec) -> Vec<KernelStats> {
    let nv = spec.mixing.len();
    let mut per_v: Vec<Vec<f64>> = vec![Vec::new(); nv];
    match &spec.kernel {
        FieldKernel::Dissipative { entries, .. } => {
            for e in entries {
                per_v[e.v].push(e.value);
            }
        }
        FieldKernel::Conservative { entries, .. } => {
            for e in entries {
                per_v[e.v].push(e.value);
            }
        }
    }
    per_v
        .into_iter()
        .map(|vals| {
            let mut pos: Vec<f64> = vals.iter().map(|&x| x.max(0.0)).filter(|&x| x > 0.0).collect();
            let mut neg: Vec<f64> = vals
                .iter()
                .map(|&x| (-x).max(0.0))
                .filter(|&x| x > 0.0)
                .collect();
            let mut abs: Vec<f64> = vals.iter().map(|&x| x.abs()).filter(|&x| x > 0.0).collect();
            pos.sort_by(|a, b| b.partial_cmp(a).unwrap());
            neg.sort_by(|a, b| b.partial_cmp(a).unwrap());
            abs.sort_by(|a, b| b.partial_cmp(a).unwrap());
            KernelStats {
                pos,
                neg,
                abs,
                sum: vals.iter().sum(),
            }
        })
        .collect()
}

fn order_stat(list: &[f64], i: usize) -> f64 {
    list.get(i).copied().unwrap_or(0.0)
}

// ---------------------------------------------------------------------
// closed-form corollary limits
// ---------------------------------------------------------------------

/// Joint order-statistics limit: the scaled-probability limit of
/// `{X_{1:n} > gamma_n y_1, ..., X_{m:n} > gamma_n y_m}`,
/// `2^d int_W min_i (f_i^+ / y_i)^alpha + min_i (f_i^- / y_i)^alpha dnu`.
/// Two-sided replaces the signed order statistics by those of `|f|` with
/// a factor 2. Order statistics beyond the kernel support are zero.
pub fn order_stats_limit(spec: &StableFieldSpec, y: &[f64], side: Side) -> Result<LimitValue> {
    require_dissipative(spec)?;
    if y.is_empty() || y.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("thresholds must be positive".into()));
    }
    let alpha = spec.alpha;
    let stats = kernel_stats(spec);
    let mut total = 0.0;
    for (v, st) in stats.iter().enumerate() {
        let w = spec.mixing[v].weight;
        let min_term = |list: &[f64]| {
            y.iter()
                .enumerate()
                .map(|(i, &yi)| (order_stat(list, i) / yi).powf(alpha))
                .fold(f64::INFINITY, f64::min)
        };
        total += w * match side {
            Side::Upper => min_term(&st.pos) + min_term(&st.neg),
            Side::TwoSided => 2.0 * min_term(&st.abs),
        };
    }
    Ok(LimitValue::closed(
        2f64.powi(spec.dim() as i32) * total,
    ))
}

/// First-passage limit of `tau^a_n <= lambda n` in the dissipative case:
/// `(2 lambda)^d a^{-alpha} int_W (sup f^+)^alpha + (sup f^-)^alpha dnu`.
pub fn passage_limit_dissipative(
    spec: &StableFieldSpec,
    a: f64,
    lambda: f64,
    side: Side,
) -> Result<LimitValue> {
    require_dissipative(spec)?;
    check_passage_args(a, lambda)?;
    let alpha = spec.alpha;
    let sup_mass = sup_mass(spec, side);
    Ok(LimitValue::closed(
        (2.0 * lambda).powi(spec.dim() as i32) * a.powf(-alpha) * sup_mass,
    ))
}

/// Maximum-exceedance limit in the conservative case:
/// `l Leb(Delta) y^{-alpha} int_W (sup_H h^+)^alpha + (sup_H h^-)^alpha dnu`.
pub fn max_limit_conservative(
    spec: &StableFieldSpec,
    geom: &ActionGeometry,
    y: f64,
    side: Side,
) -> Result<LimitValue> {
    let l = require_conservative(spec, geom)?;
    if !(y > 0.0) {
        return Err(Error::Domain("threshold must be positive".into()));
    }
    let alpha = spec.alpha;
    let leb = geom.leb_delta()?;
    let factor = l * y.powf(-alpha) * sup_mass(spec, side);
    Ok(LimitValue {
        value: leb.value * factor,
        method: if leb.exact {
            Method::ClosedForm
        } else {
            Method::Quadrature
        },
        error_bound: leb.error_bound * factor,
    })
}

/// First-passage limit in the conservative case:
/// `lambda^p a^{-alpha} l Leb(Delta) int_W (sup h^+)^alpha + (sup h^-)^alpha dnu`.
pub fn passage_limit_conservative(
    spec: &StableFieldSpec,
    geom: &ActionGeometry,
    a: f64,
    lambda: f64,
    side: Side,
) -> Result<LimitValue> {
    let l = require_conservative(spec, geom)?;
    check_passage_args(a, lambda)?;
    let alpha = spec.alpha;
    let p = geom.free_rank() as i32;
    let leb = geom.leb_delta()?;
    let factor = lambda.powi(p) * a.powf(-alpha) * l * sup_mass(spec, side);
    Ok(LimitValue {
        value: leb.value * factor,
        method: if leb.exact {
            Method::ClosedForm
        } else {
            Method::Quadrature
        },
        error_bound: leb.error_bound * factor,
    })
}

fn sup_mass(spec: &StableFieldSpec, side: Side) -> f64 {
    let alpha = spec.alpha;
    kernel_stats(spec)
        .iter()
        .enumerate()
        .map(|(v, st)| {
            let w = spec.mixing[v].weight;
            w * match side {
                Side::Upper => {
                    order_stat(&st.pos, 0).powf(alpha) + order_stat(&st.neg, 0).powf(alpha)
                }
                Side::TwoSided => 2.0 * order_stat(&st.abs, 0).powf(alpha),
            }
        })
        .sum()
}

/// Partial-sum constant in the dissipative case (the alpha-th root of the
/// displayed mass): `C_f^alpha = 2^d int_W ((sum_u f)^+)^alpha +
/// ((sum_u f)^-)^alpha dnu`. Cancellation (`sum f = 0`) gives zero.
pub fn c_f(spec: &StableFieldSpec) -> Result<LimitValue> {
    let mass = c_f_alpha_mass(spec)?;
    Ok(LimitValue::closed(mass.powf(1.0 / spec.alpha)))
}

/// The displayed mass `C_f^alpha` itself.
pub fn c_f_alpha_mass(spec: &StableFieldSpec) -> Result<f64> {
    require_dissipative(spec)?;
    let alpha = spec.alpha;
    let mass: f64 = kernel_stats(spec)
        .iter()
        .enumerate()
        .map(|(v, st)| {
            spec.mixing[v].weight
                * (st.sum.max(0.0).powf(alpha) + (-st.sum).max(0.0).powf(alpha))
        })
        .sum();
    Ok(2f64.powi(spec.dim() as i32) * mass)
}

/// Partial-sum constant in the conservative case:
/// `C^alpha = l (int_Delta V^alpha) int_W ((sum_H h)^+)^alpha +
/// ((sum_H h)^-)^alpha dnu`; returns the alpha-th root.
pub fn c_lvh(spec: &StableFieldSpec, geom: &ActionGeometry) -> Result<LimitValue> {
    let (mass, err) = c_lvh_alpha_mass(spec, geom)?;
    let alpha = spec.alpha;
    let value = mass.powf(1.0 / alpha);
    let bound = if mass > 0.0 {
        value * err / (alpha * mass)
    } else {
        0.0
    };
    Ok(LimitValue {
        value,
        method: Method::Quadrature,
        error_bound: bound,
    })
}

/// The displayed mass `C_{l,V,h}^alpha` with its quadrature error bound.
pub fn c_lvh_alpha_mass(spec: &StableFieldSpec, geom: &ActionGeometry) -> Result<(f64, f64)> {
    let l = require_conservative(spec, geom)?;
    let alpha = spec.alpha;
    let vint = geom.integral_v_alpha(alpha)?;
    let kernel_mass: f64 = kernel_stats(spec)
        .iter()
        .enumerate()
        .map(|(v, st)| {
            spec.mixing[v].weight
                * (st.sum.max(0.0).powf(alpha) + (-st.sum).max(0.0).powf(alpha))
        })
        .sum();
    Ok((l * vint.value * kernel_mass, l * vint.error_bound * kernel_mass))
}

/// Partial-sum exceedance limit `C^alpha y^{-alpha}` (doubled two-sided),
/// for either regime.
pub fn sum_limit(
    spec: &StableFieldSpec,
    geom: Option<&ActionGeometry>,
    y: f64,
    side: Side,
) -> Result<LimitValue> {
    if !(y > 0.0) {
        return Err(Error::Domain("threshold must be positive".into()));
    }
    let alpha = spec.alpha;
    let mult = match side {
        Side::Upper => 1.0,
        Side::TwoSided => 2.0,
    };
    match spec.regime() {
        crate::field::Regime::Dissipative => {
            let mass = c_f_alpha_mass(spec)?;
            Ok(LimitValue::closed(mult * mass * y.powf(-alpha)))
        }
        crate::field::Regime::Conservative => {
            let geom = geom.ok_or_else(|| {
                Error::Domain("conservative sum limit needs the action geometry".into())
            })?;
            let (mass, err) = c_lvh_alpha_mass(spec, geom)?;
            Ok(LimitValue {
                value: mult * mass * y.powf(-alpha),
                method: Method::Quadrature,
                error_bound: mult * err * y.powf(-alpha),
            })
        }
    }
}

fn require_dissipative(spec: &StableFieldSpec) -> Result<()> {
    match spec.kernel {
        FieldKernel::Dissipative { .. } => Ok(()),
        _ => Err(Error::Domain(
            "this limit applies to dissipative (mixed moving average) specs".into(),
        )),
    }
}

fn require_conservative(spec: &StableFieldSpec, geom: &ActionGeometry) -> Result<f64> {
    match &spec.kernel {
        FieldKernel::Conservative { structure, .. } => {
            if geom.fiber_dim() == 0 {
                return Err(Error::Unsupported(
                    "conservative limits require p < d".into(),
                ));
            }
            Ok(structure.torsion_order() as f64)
        }
        _ => Err(Error::Domain(
            "this limit applies to conservative specs".into(),
        )),
    }
}

fn check_passage_args(a: f64, lambda: f64) -> Result<()> {
    if !(a > 0.0) {
        return Err(Error::Domain("passage threshold a must be positive".into()));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain("lambda must lie in (0, 1]".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// test-function pairs and the limit functional
// ---------------------------------------------------------------------

/// Shape of a ramp test function on the neighborhood vector
/// `y in [-inf, inf]^{[-q 1_d, q 1_d]}`.
///
/// Each shape is a piecewise-linear radial ramp in a scalar statistic of
/// the vector: zero below `inner`, the full height above `outer`. The
/// inner radius keeps the function away from the null vector, which makes
/// the functional integrable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "camelCase")]
pub enum BumpShape {
    /// statistic `max_w |y_w|`
    SupNorm,
    /// statistic `max(y_w, 0)` at one neighborhood offset
    CoordUpper { offset: Vec<i64> },
    /// statistic `|y_w|` at one neighborhood offset
    CoordAbs { offset: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    #[serde(flatten)]
    pub shape: BumpShape,
    pub inner: f64,
    pub outer: f64,
    pub height: f64,
}

impl BumpSpec {
    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.inner > 0.0) {
            return Err(Error::config(path, "inner radius must be positive"));
        }
        if !(self.outer > self.inner) {
            return Err(Error::config(path, "outer radius must exceed inner"));
        }
        if !(self.height > 0.0) {
            return Err(Error::config(path, "height must be positive"));
        }
        Ok(())
    }

    pub fn lipschitz(&self) -> f64 {
        self.height / (self.outer - self.inner)
    }

    fn ramp(&self, r: f64) -> f64 {
        if r <= self.inner {
            0.0
        } else if r >= self.outer {
            self.height
        } else {
            self.height * (r - self.inner) / (self.outer - self.inner)
        }
    }

    /// Evaluation on a neighborhood vector laid out in lexicographic
    /// offset order for radius `q` in dimension `d`.
    pub fn eval(&self, vector: &[f64], q: usize, d: usize) -> f64 {
        let r = match &self.shape {
            BumpShape::SupNorm => vector.iter().fold(0.0f64, |m, &x| m.max(x.abs())),
            BumpShape::CoordUpper { offset } => vector[offset_index(offset, q, d)].max(0.0),
            BumpShape::CoordAbs { offset } => vector[offset_index(offset, q, d)].abs(),
        };
        self.ramp(r)
    }
}

/// Lexicographic index of offset `w in [-q 1_d, q 1_d]`.
pub fn offset_index(w: &[i64], q: usize, d: usize) -> usize {
    debug_assert_eq!(w.len(), d);
    let side = 2 * q + 1;
    let mut idx = 0usize;
    for &c in w {
        debug_assert!(c.unsigned_abs() as usize <= q);
        idx = idx * side + (c + q as i64) as usize;
    }
    idx
}

/// The pair `(g_1, g_2, eps_1, eps_2)` entering the product functional
/// `F(xi) = (1 - e^{-(xi(g1)-eps1)_+})(1 - e^{-(xi(g2)-eps2)_+})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionPair {
    pub g1: BumpSpec,
    pub g2: BumpSpec,
    pub eps1: f64,
    pub eps2: f64,
}

impl TestFunctionPair {
    pub fn validate(&self, path: &str) -> Result<()> {
        self.g1.validate(&format!("{path}.g1"))?;
        self.g2.validate(&format!("{path}.g2"))?;
        if !(self.eps1 > 0.0 && self.eps2 > 0.0) {
            return Err(Error::config(path, "eps thresholds must be positive"));
        }
        Ok(())
    }

    /// `F` applied to the two counting sums.
    pub fn f_of(&self, xi_g1: f64, xi_g2: f64) -> f64 {
        (1.0 - (-(xi_g1 - self.eps1).max(0.0)).exp()) * (1.0 - (-(xi_g2 - self.eps2).max(0.0)).exp())
    }
}

/// Limit functional together with the analytic tail-mass certificate
/// (available in the dissipative case).
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalLimit {
    pub value: LimitValue,
    /// Upper bound `2^{d+1} C eta^{-alpha} (2q+1)^d ||f||_alpha^alpha` on
    /// the functional, from the vanishing radius `eta` of the pair.
    pub certificate: Option<f64>,
}

/// Per-sign slope lists for one bump: the cluster sum
/// `S(x) = sum ramp(|x| * slope)` over the applicable slopes.
struct SlopeList {
    /// slopes active for positive marks
    pos: Vec<f64>,
    /// slopes active for negative marks
    neg: Vec<f64>,
}

impl SlopeList {
    fn max_slope(&self) -> f64 {
        self.pos
            .iter()
            .chain(self.neg.iter())
            .fold(0.0f64, |m, &s| m.max(s))
    }

    fn sum(&self, bump: &BumpSpec, x_abs: f64, positive_mark: bool) -> f64 {
        let list = if positive_mark { &self.pos } else { &self.neg };
        list.iter().map(|&s| bump.ramp(x_abs * s)).sum()
    }
}

fn slope_list(spec: &StableFieldSpec, v: usize, bump: &BumpSpec) -> Result<SlopeList> {
    let q = spec.q;
    let d = spec.dim();
    match (&spec.kernel, &bump.shape) {
        (FieldKernel::Dissipative { entries, .. }, BumpShape::SupNorm) => {
            // M(v, u) = max_{|w| <= q} |f(v, u - w)|: group by shifted site
            let mut m: HashMap<Vec<i64>, f64> = HashMap::new();
            for e in entries.iter().filter(|e| e.v == v && e.value != 0.0) {
                for w in offsets(q, d) {
                    let u: Vec<i64> = e.at.iter().zip(&w).map(|(&a, &b)| a + b).collect();
                    let slot = m.entry(u).or_insert(0.0);
                    *slot = slot.max(e.value.abs());
                }
            }
            let slopes: Vec<f64> = m.into_values().collect();
            Ok(SlopeList {
                pos: slopes.clone(),
                neg: slopes,
            })
        }
        (FieldKernel::Dissipative { entries, .. }, BumpShape::CoordUpper { .. }) => {
            // translation drops the offset: sum over u of ramp((x f(v,u))^+)
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for e in entries.iter().filter(|e| e.v == v && e.value != 0.0) {
                if e.value > 0.0 {
                    pos.push(e.value);
                } else {
                    neg.push(-e.value);
                }
            }
            Ok(SlopeList { pos, neg })
        }
        (FieldKernel::Dissipative { entries, .. }, BumpShape::CoordAbs { .. }) => {
            let slopes: Vec<f64> = entries
                .iter()
                .filter(|e| e.v == v && e.value != 0.0)
                .map(|e| e.value.abs())
                .collect();
            Ok(SlopeList {
                pos: slopes.clone(),
                neg: slopes,
            })
        }
        (FieldKernel::Conservative { structure, entries }, shape) => {
            match shape {
                BumpShape::SupNorm => {
                    let mut shifts: Vec<HElement> = Vec::new();
                    for w in offsets(q, d) {
                        let s = structure.project(&w)?;
                        if !shifts.contains(&s) {
                            shifts.push(s);
                        }
                    }
                    let mut m: HashMap<HElement, f64> = HashMap::new();
                    for e in entries.iter().filter(|e| e.v == v && e.value != 0.0) {
                        for sh in &shifts {
                            let u = structure.add(&e.at, sh)?;
                            let slot = m.entry(u).or_insert(0.0);
                            *slot = slot.max(e.value.abs());
                        }
                    }
                    let slopes: Vec<f64> = m.into_values().collect();
                    Ok(SlopeList {
                        pos: slopes.clone(),
                        neg: slopes,
                    })
                }
                BumpShape::CoordUpper { .. } => {
                    let mut pos = Vec::new();
                    let mut neg = Vec::new();
                    for e in entries.iter().filter(|e| e.v == v && e.value != 0.0) {
                        if e.value > 0.0 {
                            pos.push(e.value);
                        } else {
                            neg.push(-e.value);
                        }
                    }
                    Ok(SlopeList { pos, neg })
                }
                BumpShape::CoordAbs { .. } => {
                    let slopes: Vec<f64> = entries
                        .iter()
                        .filter(|e| e.v == v && e.value != 0.0)
                        .map(|e| e.value.abs())
                        .collect();
                    Ok(SlopeList {
                        pos: slopes.clone(),
                        neg: slopes,
                    })
                }
            }
        }
    }
}

/// All neighborhood offsets `w in [-q 1_d, q 1_d]` in lexicographic
/// order (the layout used by neighborhood vectors).
pub fn offsets(q: usize, d: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut w = vec![-(q as i64); d];
    loop {
        out.push(w.clone());
        let mut axis = d;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            w[axis] += 1;
            if w[axis] <= q as i64 {
                break;
            }
            w[axis] = -(q as i64);
        }
    }
}

/// Evaluates the limit measure applied to `F`: the dissipative point
/// cluster measure, or the fiber-volume-weighted conservative measure
/// when `geom` is supplied for a conservative spec.
pub fn limit_functional(
    spec: &StableFieldSpec,
    geom: Option<&ActionGeometry>,
    pair: &TestFunctionPair,
) -> Result<FunctionalLimit> {
    pair.validate("pair")?;
    let alpha = spec.alpha;
    let d = spec.dim();

    // certificate from the vanishing radius
    let eta = pair.g1.inner.min(pair.g2.inner);
    let height = pair.g1.height.max(pair.g2.height);
    let certificate = match spec.regime() {
        crate::field::Regime::Dissipative => Some(functional_certificate(
            spec,
            height,
            eta,
        )),
        crate::field::Regime::Conservative => None,
    };

    let mut total = 0.0;
    let mut err_total = 0.0;
    match spec.regime() {
        crate::field::Regime::Dissipative => {
            for v in 0..spec.mixing.len() {
                let s1 = slope_list(spec, v, &pair.g1)?;
                let s2 = slope_list(spec, v, &pair.g2)?;
                let x0 = activation(&s1, &s2, pair);
                if x0 == f64::INFINITY {
                    continue;
                }
                let mut g = |r: f64| {
                    let x = x0 * r.powf(-1.0 / alpha);
                    let fp = pair.f_of(s1.sum(&pair.g1, x, true), s2.sum(&pair.g2, x, true));
                    let fm = pair.f_of(s1.sum(&pair.g1, x, false), s2.sum(&pair.g2, x, false));
                    fp + fm
                };
                let (ival, ierr) = adaptive_simpson(&mut g, 0.0, 1.0, 1e-10, 40);
                let w = spec.mixing[v].weight;
                total += w * x0.powf(-alpha) * ival;
                err_total += w * x0.powf(-alpha) * ierr;
            }
            total *= 2f64.powi(d as i32);
            err_total *= 2f64.powi(d as i32);
        }
        crate::field::Regime::Conservative => {
            let geom = geom.ok_or_else(|| {
                Error::Domain("conservative functional needs the action geometry".into())
            })?;
            if geom.free_rank() != 1 {
                return Err(Error::Unsupported(
                    "conservative functional quadrature implemented for p = 1".into(),
                ));
            }
            let l = require_conservative(spec, geom)?;
            let bounds = geom.bounding_box().to_vec();
            for v in 0..spec.mixing.len() {
                let s1 = slope_list(spec, v, &pair.g1)?;
                let s2 = slope_list(spec, v, &pair.g2)?;
                let x0 = activation(&s1, &s2, pair);
                if x0 == f64::INFINITY {
                    continue;
                }
                let mut inner_err = 0.0f64;
                let mut outer = |y: f64| {
                    let vol = geom.q_volume(&[y]);
                    if vol <= 0.0 {
                        return 0.0;
                    }
                    let mut g = |r: f64| {
                        let x = x0 * r.powf(-1.0 / alpha);
                        let fp = pair.f_of(
                            vol * s1.sum(&pair.g1, x, true),
                            vol * s2.sum(&pair.g2, x, true),
                        );
                        let fm = pair.f_of(
                            vol * s1.sum(&pair.g1, x, false),
                            vol * s2.sum(&pair.g2, x, false),
                        );
                        fp + fm
                    };
                    let (ival, ierr) = adaptive_simpson(&mut g, 0.0, 1.0, 1e-10, 36);
                    inner_err = inner_err.max(ierr);
                    x0.powf(-alpha) * ival
                };
                let (yval, yerr) = adaptive_simpson(&mut outer, -bounds[0], bounds[0], 1e-9, 36);
                let w = spec.mixing[v].weight;
                total += l * w * yval;
                err_total += l * w * (yerr + inner_err * 2.0 * bounds[0]);
            }
        }
    }
    Ok(FunctionalLimit {
        value: LimitValue {
            value: total,
            method: Method::Quadrature,
            error_bound: err_total,
        },
        certificate,
    })
}

/// The closed-form tail-mass certificate
/// `2^{d+1} C eta^{-alpha} (2q+1)^d ||f||_alpha^alpha`.
pub fn functional_certificate(spec: &StableFieldSpec, height: f64, eta: f64) -> f64 {
    let d = spec.dim() as i32;
    let q = spec.q as u32;
    2f64.powi(d + 1)
        * height
        * eta.powf(-spec.alpha)
        * ((2 * q + 1) as f64).powi(d)
        * spec.kernel_alpha_mass()
}

/// Smallest `|x|` below which both counting sums vanish; `F` is zero
/// there, so the mark integral starts at this activation point.
fn activation(s1: &SlopeList, s2: &SlopeList, pair: &TestFunctionPair) -> f64 {
    let a1 = pair.g1.inner / s1.max_slope();
    let a2 = pair.g2.inner / s2.max_slope();
    // F is a product: both factors must activate
    let x0 = a1.max(a2);
    if x0.is_finite() {
        x0
    } else {
        f64::INFINITY
    }
}
