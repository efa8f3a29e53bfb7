use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{FieldSampler, Regime, RngStream, StableFieldSpec};
use crate::geometry::ActionGeometry;
use crate::harness::{pairwise_sum, EstimateRecord, EventKind, EventSpec, ExperimentConfig};
use crate::lattice::HElement;
use crate::limits::{
    limit_functional, max_limit_conservative, order_stats_limit, passage_limit_conservative,
    passage_limit_dissipative, sum_limit, LimitValue, Side, TestFunctionPair,
};

/// Stream-space layout: schedule slots are separated so replicate streams
/// never collide across `n` or across estimator paths.
const SLOT_STRIDE: u64 = 1 << 40;
const FUNCTIONAL_BASE: u64 = 1 << 61;

pub(crate) fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))
}

/// Runs the experiment: for each window radius, `R` independent fields,
/// the event indicator, and the scaled estimate against the analytic
/// limit. Deterministic for a fixed `(seed, config)` at any parallelism.
pub fn run_ldp_experiment(cfg: &ExperimentConfig) -> Result<Vec<EstimateRecord>> {
    cfg.validate()?;
    if matches!(cfg.event.kind, EventKind::Functional { .. }) {
        return empirical_point_functional(cfg);
    }
    let spec = &cfg.spec;
    let geom = match spec.structure() {
        Some(s) => Some(ActionGeometry::new(s)?),
        None => None,
    };
    let limit = event_limit(spec, geom.as_ref(), &cfg.event)?;
    let pool = build_pool(cfg.parallelism)?;
    let eff = spec.effective_dim() as f64;
    let label = cfg.event.label();

    let mut records = Vec::with_capacity(cfg.n_schedule.len());
    for (slot, &n) in cfg.n_schedule.iter().enumerate() {
        let sampler = FieldSampler::new(spec, n)?;
        let scaling = cfg.scaling(n);
        let eval = EventEval::build(spec, &sampler, &cfg.event, n, scaling)?;
        let base = slot as u64 * SLOT_STRIDE;
        let seed = cfg.seed;
        let hits: u64 = pool.install(|| {
            (0..cfg.replicates)
                .into_par_iter()
                .map_init(
                    || sampler.scratch(),
                    |scratch, r| {
                        sampler.sample_into(RngStream::new(seed, base + r), scratch);
                        eval.hit(&scratch.values) as u64
                    },
                )
                .sum()
        });
        let r = cfg.replicates as f64;
        let p_hat = hits as f64 / r;
        let se = (p_hat * (1.0 - p_hat) / r).sqrt();
        let scale_factor = scaling.powf(spec.alpha) / (n as f64).powf(eff);
        records.push(EstimateRecord::finish(
            spec.regime(),
            label.clone(),
            n,
            scaling,
            cfg.replicates,
            p_hat,
            se,
            scale_factor,
            limit,
        ));
    }
    Ok(records)
}

fn event_limit(
    spec: &StableFieldSpec,
    geom: Option<&ActionGeometry>,
    event: &EventSpec,
) -> Result<Option<LimitValue>> {
    let need_geom = || {
        geom.ok_or_else(|| Error::Domain("conservative event needs the action geometry".into()))
    };
    let side = event.side;
    Ok(match (&event.kind, spec.regime()) {
        (EventKind::OrderStats { y }, Regime::Dissipative) => {
            Some(order_stats_limit(spec, y, side)?)
        }
        (EventKind::OrderStats { .. }, Regime::Conservative) => None, // rejected in validate
        (EventKind::Passage { a, lambda }, Regime::Dissipative) => {
            Some(passage_limit_dissipative(spec, *a, *lambda, side)?)
        }
        (EventKind::Passage { a, lambda }, Regime::Conservative) => Some(
            passage_limit_conservative(spec, need_geom()?, *a, *lambda, side)?,
        ),
        (EventKind::MaxExceed { y }, Regime::Dissipative) => {
            Some(order_stats_limit(spec, &[*y], side)?)
        }
        (EventKind::MaxExceed { y }, Regime::Conservative) => {
            Some(max_limit_conservative(spec, need_geom()?, *y, side)?)
        }
        (EventKind::SumExceed { y }, Regime::Dissipative) => Some(sum_limit(spec, None, *y, side)?),
        (EventKind::SumExceed { y }, Regime::Conservative) => {
            Some(sum_limit(spec, geom, *y, side)?)
        }
        (EventKind::Functional { .. }, _) => None,
    })
}

/// Prepared per-window event evaluator over the sampler's value buffer.
enum EventEval {
    /// joint order-statistics exceedance (descending thresholds)
    TopM {
        thresholds: Vec<f64>,
        two_sided: bool,
    },
    /// maximum over a subset (None = all values) above a threshold
    MaxOver {
        indices: Option<Vec<u32>>,
        threshold: f64,
        two_sided: bool,
    },
    /// weighted sum (None = plain sum) above a threshold
    Sum {
        weights: Option<Vec<f64>>,
        threshold: f64,
        two_sided: bool,
    },
}

impl EventEval {
    fn build(
        spec: &StableFieldSpec,
        sampler: &FieldSampler,
        event: &EventSpec,
        n: i64,
        scaling: f64,
    ) -> Result<Self> {
        let two_sided = event.side == Side::TwoSided;
        match &event.kind {
            EventKind::OrderStats { y } => Ok(EventEval::TopM {
                thresholds: y.iter().map(|&v| v * scaling).collect(),
                two_sided,
            }),
            EventKind::MaxExceed { y } => Ok(EventEval::MaxOver {
                indices: None,
                threshold: y * scaling,
                two_sided,
            }),
            EventKind::Passage { a, lambda } => {
                let m = ((lambda * n as f64).floor() as i64).clamp(0, n);
                let indices = match spec.regime() {
                    Regime::Dissipative => {
                        if m == n {
                            None
                        } else {
                            Some(lattice_subbox_indices(spec.dim(), n, m))
                        }
                    }
                    Regime::Conservative => {
                        let norms = sampler.value_norms().expect("conservative sampler");
                        if m == n {
                            None
                        } else {
                            Some(
                                norms
                                    .iter()
                                    .enumerate()
                                    .filter(|(_, &nm)| nm <= m)
                                    .map(|(i, _)| i as u32)
                                    .collect(),
                            )
                        }
                    }
                };
                Ok(EventEval::MaxOver {
                    indices,
                    threshold: a * scaling,
                    two_sided,
                })
            }
            EventKind::SumExceed { y } => match spec.regime() {
                Regime::Dissipative => Ok(EventEval::Sum {
                    weights: None,
                    threshold: y * scaling,
                    two_sided,
                }),
                Regime::Conservative => {
                    let structure = spec.structure().expect("conservative spec");
                    let sites = sampler.value_sites().expect("conservative sampler");
                    let weights: Vec<f64> = sites
                        .iter()
                        .map(|s| structure.count_coset_points(s, n).map(|c| c as f64))
                        .collect::<Result<_>>()?;
                    let codim = (structure.dim() - structure.free_rank()) as i32;
                    // event: n^{p-d} beta_n^{-1} S_n > y
                    let threshold = y * scaling * (n as f64).powi(codim);
                    Ok(EventEval::Sum {
                        weights: Some(weights),
                        threshold,
                        two_sided,
                    })
                }
            },
            EventKind::Functional { .. } => {
                Err(Error::Domain("functional events use the functional path".into()))
            }
        }
    }

    #[inline]
    fn hit(&self, values: &[f64]) -> bool {
        match self {
            EventEval::TopM {
                thresholds,
                two_sided,
            } => {
                let m = thresholds.len();
                let mut top = vec![f64::NEG_INFINITY; m];
                for &v in values {
                    let x = if *two_sided { v.abs() } else { v };
                    if x > top[m - 1] {
                        // insertion into the small descending buffer
                        let mut i = m - 1;
                        top[i] = x;
                        while i > 0 && top[i] > top[i - 1] {
                            top.swap(i, i - 1);
                            i -= 1;
                        }
                    }
                }
                top.iter().zip(thresholds).all(|(&t, &thr)| t > thr)
            }
            EventEval::MaxOver {
                indices,
                threshold,
                two_sided,
            } => {
                let max = match indices {
                    None => fold_max(values.iter().copied(), *two_sided),
                    Some(idx) => {
                        fold_max(idx.iter().map(|&i| values[i as usize]), *two_sided)
                    }
                };
                max > *threshold
            }
            EventEval::Sum {
                weights,
                threshold,
                two_sided,
            } => {
                let sum = match weights {
                    None => values.iter().sum::<f64>(),
                    Some(w) => values.iter().zip(w).map(|(&v, &m)| v * m).sum(),
                };
                let stat = if *two_sided { sum.abs() } else { sum };
                stat > *threshold
            }
        }
    }
}

fn fold_max(vals: impl Iterator<Item = f64>, two_sided: bool) -> f64 {
    vals.fold(f64::NEG_INFINITY, |m, v| {
        m.max(if two_sided { v.abs() } else { v })
    })
}

/// Flat indices (in the lex layout of `[-n 1_d, n 1_d]`) of the sub-cube
/// `[-m 1_d, m 1_d]`.
fn lattice_subbox_indices(d: usize, n: i64, m: i64) -> Vec<u32> {
    let side = (2 * n + 1) as usize;
    let mut out = Vec::new();
    let mut t = vec![-m; d];
    loop {
        let mut idx = 0usize;
        for &c in &t {
            idx = idx * side + (c + n) as usize;
        }
        out.push(idx as u32);
        let mut axis = d;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            t[axis] += 1;
            if t[axis] <= m {
                break;
            }
            t[axis] = -m;
        }
    }
}

/// Estimates the scaled expectation of the point-process functional
/// `F(N^q_n)` (dissipative) or `F(Lambda^q_n)` (conservative, with its
/// `n^{p-d}` mass normalization), and compares it to the limit-measure
/// functional.
pub fn empirical_point_functional(cfg: &ExperimentConfig) -> Result<Vec<EstimateRecord>> {
    cfg.validate()?;
    let EventKind::Functional { pair } = &cfg.event.kind else {
        return Err(Error::Domain(
            "empirical_point_functional needs a functional event".into(),
        ));
    };
    let spec = &cfg.spec;
    let geom = match spec.structure() {
        Some(s) => Some(ActionGeometry::new(s)?),
        None => None,
    };
    let limit = limit_functional(spec, geom.as_ref(), pair)?;
    let pool = build_pool(cfg.parallelism)?;
    let eff = spec.effective_dim() as f64;
    let label = cfg.event.label();

    let mut records = Vec::with_capacity(cfg.n_schedule.len());
    for (slot, &n) in cfg.n_schedule.iter().enumerate() {
        let scaling = cfg.scaling(n);
        let ctx = FunctionalCtx::build(spec, pair.clone(), n, scaling)?;
        let base = FUNCTIONAL_BASE + slot as u64 * SLOT_STRIDE;
        let seed = cfg.seed;
        let fvals: Vec<f64> = pool.install(|| {
            (0..cfg.replicates)
                .into_par_iter()
                .map_init(
                    || ctx.sampler.scratch(),
                    |scratch, r| {
                        ctx.sampler
                            .sample_into(RngStream::new(seed, base + r), scratch);
                        ctx.eval(&scratch.values)
                    },
                )
                .collect()
        });
        let r = cfg.replicates as f64;
        let mean = pairwise_sum(&fvals) / r;
        let centered: Vec<f64> = fvals.iter().map(|&x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&centered) / (r - 1.0).max(1.0);
        let se = (var / r).sqrt();
        let scale_factor = scaling.powf(spec.alpha) / (n as f64).powf(eff);
        records.push(EstimateRecord::finish(
            spec.regime(),
            label.clone(),
            n,
            scaling,
            cfg.replicates,
            mean,
            se,
            scale_factor,
            Some(limit.value),
        ));
    }
    Ok(records)
}

/// Per-window machinery of the empirical functional: neighborhood
/// vectors are assembled from precomputed flat indices.
struct FunctionalCtx {
    sampler: FieldSampler,
    pair: TestFunctionPair,
    q: usize,
    d: usize,
    inv_scaling: f64,
    kind: FunctionalKind,
}

enum FunctionalKind {
    Lattice {
        n: i64,
        value_radius: i64,
        offset_shifts: Vec<isize>,
    },
    Sites {
        /// per window site: multiplicity and the value indices of its
        /// neighborhood vector
        mult: Vec<f64>,
        vector_indices: Vec<u32>,
        n_offsets: usize,
        mass_norm: f64,
    },
}

impl FunctionalCtx {
    fn build(spec: &StableFieldSpec, pair: TestFunctionPair, n: i64, scaling: f64) -> Result<Self> {
        let q = spec.q;
        let d = spec.dim();
        let value_radius = n + q as i64;
        let sampler = FieldSampler::new(spec, value_radius)?;
        let kind = match spec.structure() {
            None => {
                let side = (2 * value_radius + 1) as usize;
                let mut strides = vec![1usize; d];
                for i in (0..d.saturating_sub(1)).rev() {
                    strides[i] = strides[i + 1] * side;
                }
                let offset_shifts = crate::limits::offsets(q, d)
                    .iter()
                    .map(|w| {
                        -w.iter()
                            .zip(&strides)
                            .map(|(&c, &s)| c as isize * s as isize)
                            .sum::<isize>()
                    })
                    .collect();
                FunctionalKind::Lattice {
                    n,
                    value_radius,
                    offset_shifts,
                }
            }
            Some(structure) => {
                let sites = sampler.value_sites().expect("conservative sampler");
                let index: std::collections::HashMap<&HElement, usize> =
                    sites.iter().enumerate().map(|(i, s)| (s, i)).collect();
                let window: Vec<usize> = sampler
                    .value_norms()
                    .expect("conservative sampler")
                    .iter()
                    .enumerate()
                    .filter(|(_, &nm)| nm <= n)
                    .map(|(i, _)| i)
                    .collect();
                let shifts: Vec<HElement> = crate::limits::offsets(q, d)
                    .iter()
                    .map(|w| structure.project(w))
                    .collect::<Result<_>>()?;
                let mut mult = Vec::with_capacity(window.len());
                let mut vector_indices = Vec::with_capacity(window.len() * shifts.len());
                for &i in &window {
                    let s = &sites[i];
                    mult.push(structure.count_coset_points(s, n)? as f64);
                    for sh in &shifts {
                        // X_{t-w} = X at pi(t) - pi(w)
                        let at = structure.sub(s, sh)?;
                        vector_indices.push(index[&at] as u32);
                    }
                }
                let codim = (structure.dim() - structure.free_rank()) as i32;
                FunctionalKind::Sites {
                    mult,
                    vector_indices,
                    n_offsets: shifts.len(),
                    mass_norm: (n as f64).powi(-codim),
                }
            }
        };
        Ok(FunctionalCtx {
            sampler,
            pair,
            q,
            d,
            inv_scaling: 1.0 / scaling,
            kind,
        })
    }

    fn eval(&self, values: &[f64]) -> f64 {
        let n_off = (2 * self.q + 1).pow(self.d as u32);
        let mut vec_buf = vec![0.0f64; n_off];
        let (mut xi1, mut xi2) = (0.0f64, 0.0f64);
        match &self.kind {
            FunctionalKind::Lattice {
                n,
                value_radius,
                offset_shifts,
            } => {
                let n = *n;
                let value_radius = *value_radius;
                let side = (2 * value_radius + 1) as usize;
                let mut t = vec![-n; self.d];
                loop {
                    let mut base = 0usize;
                    for &c in &t {
                        base = base * side + (c + value_radius) as usize;
                    }
                    for (k, &off) in offset_shifts.iter().enumerate() {
                        vec_buf[k] = values[(base as isize + off) as usize] * self.inv_scaling;
                    }
                    xi1 += self.pair.g1.eval(&vec_buf, self.q, self.d);
                    xi2 += self.pair.g2.eval(&vec_buf, self.q, self.d);
                    let mut axis = self.d;
                    let mut done = false;
                    loop {
                        if axis == 0 {
                            done = true;
                            break;
                        }
                        axis -= 1;
                        t[axis] += 1;
                        if t[axis] <= n {
                            break;
                        }
                        t[axis] = -n;
                    }
                    if done {
                        break;
                    }
                }
            }
            FunctionalKind::Sites {
                mult,
                vector_indices,
                n_offsets,
                mass_norm,
            } => {
                for (i, &m) in mult.iter().enumerate() {
                    for k in 0..*n_offsets {
                        vec_buf[k] = values[vector_indices[i * n_offsets + k] as usize]
                            * self.inv_scaling;
                    }
                    xi1 += m * self.pair.g1.eval(&vec_buf, self.q, self.d);
                    xi2 += m * self.pair.g2.eval(&vec_buf, self.q, self.d);
                }
                xi1 *= mass_norm;
                xi2 *= mass_norm;
            }
        }
        self.pair.f_of(xi1, xi2)
    }
}
