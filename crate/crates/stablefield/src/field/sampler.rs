use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::spec::{FieldKernel, StableFieldSpec};
use crate::field::stable::{sample_standard_sas, unit_site_scale};
use crate::field::RngStream;
use crate::lattice::{GroupStructure, HElement};

/// How the series sampler treats Poisson points below the threshold:
/// drop them, or add an independent variance-matched Gaussian per site
/// (small-jump compensation, valid for every `alpha` in `(0,2)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallJumpMode {
    Discard,
    Gaussian,
}

/// Truncation diagnostics of one series-sampler run.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationReport {
    pub eps: f64,
    pub mode: SmallJumpMode,
    /// Mean of the Poisson big-jump count, `2 eps^{-alpha} * total mass`.
    pub expected_points: f64,
    pub actual_points: u64,
    /// Standard deviation of the discarded small-jump contribution to the
    /// value at the origin (compensated in `Gaussian` mode).
    pub discarded_sd_at_origin: f64,
}

/// One materialized realization on the cube `[-n 1_d, n 1_d]`, values in
/// lexicographic order of `t`.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub d: usize,
    pub n: i64,
    pub values: Vec<f64>,
    pub stream: RngStream,
    pub saturated: u32,
}

impl FieldSample {
    pub fn value_at(&self, t: &[i64]) -> f64 {
        let side = 2 * self.n + 1;
        let mut idx = 0usize;
        for &c in t {
            debug_assert!(c.abs() <= self.n);
            idx = idx * side as usize + (c + self.n) as usize;
        }
        self.values[idx]
    }
}

/// Reusable per-replicate buffers.
#[derive(Debug, Clone)]
pub struct Scratch {
    atoms: Vec<f64>,
    pub values: Vec<f64>,
    pub saturated: u32,
}

enum Topology {
    /// Dissipative: values on the cube `[-R 1_d, R 1_d]`, atoms on the
    /// enlarged cube `[-(R+T) 1_d, (R+T) 1_d]`.
    Lattice {
        d: usize,
        value_radius: i64,
        atom_radius: i64,
        atom_strides: Vec<usize>,
        n_positions: usize,
        /// per kernel entry: (v, flat atom offset of the shift, value)
        entries: Vec<(usize, isize, f64)>,
        n_values: usize,
    },
    /// Conservative: values indexed by `H_R`, atoms by `H_{R+T}`.
    Sites {
        structure: GroupStructure,
        value_sites: Vec<HElement>,
        value_norms: Vec<i64>,
        n_positions: usize,
        /// flattened `value_site x entry -> atom index`
        table: Vec<u32>,
        entry_values: Vec<(usize, f64)>, // (v, kernel value) per entry
    },
}

/// Sampler context for one field spec and one value radius; immutable and
/// safe to share across replicate workers.
pub struct FieldSampler {
    alpha: f64,
    n_mix: usize,
    /// SaS scale of the site sum per mixing atom: `(2 nu_v / C_alpha)^{1/alpha}`.
    site_sd: Vec<f64>,
    weights: Vec<f64>,
    total_weight: f64,
    topology: Topology,
}

impl FieldSampler {
    /// Builds the sampler; `value_radius` is the radius of the region
    /// where field values are needed (window radius plus neighborhood
    /// radius for point-process vectors).
    pub fn new(spec: &StableFieldSpec, value_radius: i64) -> Result<Self> {
        if value_radius < 0 {
            return Err(Error::Domain("value radius must be >= 0".into()));
        }
        if spec.dim() == 0 {
            return Err(Error::Domain("field dimension must be >= 1".into()));
        }
        let alpha = spec.alpha;
        let unit = unit_site_scale(alpha)?;
        let site_sd: Vec<f64> = spec
            .mixing
            .iter()
            .map(|a| unit * a.weight.powf(1.0 / alpha))
            .collect();
        let weights: Vec<f64> = spec.mixing.iter().map(|a| a.weight).collect();
        let total_weight: f64 = weights.iter().sum();
        let t_radius = spec.support_radius()?;

        let topology = match &spec.kernel {
            FieldKernel::Dissipative { d, entries } => {
                let d = *d;
                let atom_radius = value_radius + t_radius;
                let side = (2 * atom_radius + 1) as usize;
                let mut strides = vec![1usize; d];
                for i in (0..d.saturating_sub(1)).rev() {
                    strides[i] = strides[i + 1] * side;
                }
                let n_positions = side.pow(d as u32).max(1);
                let flat_entries = entries
                    .iter()
                    .map(|e| {
                        let off: isize = e
                            .at
                            .iter()
                            .zip(&strides)
                            .map(|(&w, &s)| w as isize * s as isize)
                            .sum();
                        (e.v, off, e.value)
                    })
                    .collect();
                let value_side = (2 * value_radius + 1) as usize;
                Topology::Lattice {
                    d,
                    value_radius,
                    atom_radius,
                    atom_strides: strides,
                    n_positions,
                    entries: flat_entries,
                    n_values: value_side.pow(d as u32).max(1),
                }
            }
            FieldKernel::Conservative { structure, entries } => {
                let value_sites = structure.enumerate_hn(value_radius)?;
                let atom_sites = structure.enumerate_hn(value_radius + t_radius)?;
                let atom_index: HashMap<&HElement, usize> =
                    atom_sites.iter().enumerate().map(|(i, s)| (s, i)).collect();
                let value_norms = value_sites
                    .iter()
                    .map(|s| structure.norm(s))
                    .collect::<Result<Vec<_>>>()?;
                let mut table = Vec::with_capacity(value_sites.len() * entries.len());
                for s in &value_sites {
                    for e in entries {
                        // atom at u with h(v, u + s) = value  =>  u = at - s
                        let u = structure.sub(&e.at, s)?;
                        let idx = *atom_index.get(&u).expect("atom grid covers kernel reach");
                        table.push(idx as u32);
                    }
                }
                Topology::Sites {
                    structure: structure.clone(),
                    value_sites,
                    value_norms,
                    n_positions: atom_sites.len(),
                    table,
                    entry_values: entries.iter().map(|e| (e.v, e.value)).collect(),
                }
            }
        };

        Ok(FieldSampler {
            alpha,
            n_mix: spec.mixing.len(),
            site_sd,
            weights,
            total_weight,
            topology,
        })
    }

    fn n_positions(&self) -> usize {
        match &self.topology {
            Topology::Lattice { n_positions, .. } => *n_positions,
            Topology::Sites { n_positions, .. } => *n_positions,
        }
    }

    fn n_values(&self) -> usize {
        match &self.topology {
            Topology::Lattice { n_values, .. } => *n_values,
            Topology::Sites { value_sites, .. } => value_sites.len(),
        }
    }

    /// Conservative value sites (`H_R`), in the sampler's value order.
    pub fn value_sites(&self) -> Option<&[HElement]> {
        match &self.topology {
            Topology::Sites { value_sites, .. } => Some(value_sites),
            _ => None,
        }
    }

    /// Quotient norms of the value sites.
    pub fn value_norms(&self) -> Option<&[i64]> {
        match &self.topology {
            Topology::Sites { value_norms, .. } => Some(value_norms),
            _ => None,
        }
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            atoms: vec![0.0; self.n_mix * self.n_positions()],
            values: vec![0.0; self.n_values()],
            saturated: 0,
        }
    }

    /// Exact sampler: independent SaS site atoms, then the kernel sum.
    /// Exact in law because the control measure is discrete.
    pub fn sample_into(&self, stream: RngStream, scratch: &mut Scratch) {
        let mut rng = stream.rng();
        scratch.saturated = 0;
        let p = self.n_positions();
        for v in 0..self.n_mix {
            let sd = self.site_sd[v];
            for pos in 0..p {
                let (x, sat) = sample_standard_sas(self.alpha, &mut rng);
                scratch.atoms[v * p + pos] = sd * x;
                scratch.saturated += sat as u32;
            }
        }
        self.assemble(scratch);
    }

    /// Series sampler: Poisson points with `|j| > eps` over the finite
    /// site range, summed directly; small jumps handled per `mode`.
    pub fn sample_series_into(
        &self,
        eps: f64,
        mode: SmallJumpMode,
        stream: RngStream,
        scratch: &mut Scratch,
    ) -> Result<TruncationReport> {
        if !(eps > 0.0) {
            return Err(Error::Domain("series threshold eps must be positive".into()));
        }
        let mut rng = stream.rng();
        scratch.saturated = 0;
        scratch.atoms.fill(0.0);
        let p = self.n_positions();
        let mean = 2.0 * eps.powf(-self.alpha) * self.total_weight * p as f64;
        let count = if mean > 0.0 {
            Poisson::new(mean)
                .map_err(|e| Error::Domain(format!("bad Poisson mean: {e}")))?
                .sample(&mut rng) as u64
        } else {
            0
        };
        for _ in 0..count {
            // mixing atom by weight, position uniform
            let mut pick = rng.random::<f64>() * self.total_weight;
            let mut v = 0usize;
            for (i, w) in self.weights.iter().enumerate() {
                v = i;
                if pick < *w {
                    break;
                }
                pick -= w;
            }
            let pos = rng.random_range(0..p);
            let mag = eps * rng.random::<f64>().max(1e-300).powf(-1.0 / self.alpha);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let j = sign * if mag.is_finite() { mag } else { 1e300 };
            scratch.atoms[v * p + pos] += j;
        }
        // variance of the discarded part per unit weight
        let var_unit = 2.0 * self.alpha / (2.0 - self.alpha) * eps.powf(2.0 - self.alpha);
        if mode == SmallJumpMode::Gaussian {
            for v in 0..self.n_mix {
                let sd = (self.weights[v] * var_unit).sqrt();
                for pos in 0..p {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    scratch.atoms[v * p + pos] += sd * g;
                }
            }
        }
        self.assemble(scratch);
        let discarded_var: f64 = match &self.topology {
            Topology::Lattice { entries, .. } => entries
                .iter()
                .map(|&(v, _, val)| val * val * self.weights[v] * var_unit)
                .sum(),
            Topology::Sites { entry_values, .. } => entry_values
                .iter()
                .map(|&(v, val)| val * val * self.weights[v] * var_unit)
                .sum(),
        };
        Ok(TruncationReport {
            eps,
            mode,
            expected_points: mean,
            actual_points: count,
            discarded_sd_at_origin: discarded_var.sqrt(),
        })
    }

    fn assemble(&self, scratch: &mut Scratch) {
        let p = self.n_positions();
        match &self.topology {
            Topology::Lattice {
                d,
                value_radius,
                atom_radius,
                atom_strides,
                entries,
                n_values,
                ..
            } => {
                let d = *d;
                let mut t = vec![-*value_radius; d];
                for slot in 0..*n_values {
                    let base: usize = t
                        .iter()
                        .zip(atom_strides)
                        .map(|(&c, &s)| (c + atom_radius) as usize * s)
                        .sum();
                    let mut acc = 0.0;
                    for &(v, off, val) in entries {
                        let idx = (base as isize + off) as usize;
                        acc += val * scratch.atoms[v * p + idx];
                    }
                    scratch.values[slot] = acc;
                    // lex odometer over [-R, R]^d
                    for axis in (0..d).rev() {
                        t[axis] += 1;
                        if t[axis] <= *value_radius {
                            break;
                        }
                        t[axis] = -*value_radius;
                    }
                }
            }
            Topology::Sites {
                value_sites,
                table,
                entry_values,
                ..
            } => {
                let ne = entry_values.len();
                for i in 0..value_sites.len() {
                    let mut acc = 0.0;
                    for (e, &(v, val)) in entry_values.iter().enumerate() {
                        let idx = table[i * ne + e] as usize;
                        acc += val * scratch.atoms[v * p + idx];
                    }
                    scratch.values[i] = acc;
                }
            }
        }
    }

    /// Materializes one exact draw on the cube `[-n 1_d, n 1_d]`; the
    /// conservative field is lifted through the projection, so it is
    /// `K`-periodic by construction.
    pub fn materialize(&self, stream: RngStream, n: i64) -> Result<FieldSample> {
        let mut scratch = self.scratch();
        self.sample_into(stream, &mut scratch);
        self.materialize_values(&scratch, stream, n)
    }

    pub(crate) fn materialize_values(
        &self,
        scratch: &Scratch,
        stream: RngStream,
        n: i64,
    ) -> Result<FieldSample> {
        match &self.topology {
            Topology::Lattice {
                d,
                value_radius,
                ..
            } => {
                if n > *value_radius {
                    return Err(Error::Domain("window exceeds sampled radius".into()));
                }
                let d = *d;
                let side = (2 * n + 1) as usize;
                let mut values = Vec::with_capacity(side.pow(d as u32));
                let mut t = vec![-n; d];
                loop {
                    values.push(lattice_value(scratch, *value_radius, d, &t));
                    let mut axis = d;
                    loop {
                        if axis == 0 {
                            return Ok(FieldSample {
                                d,
                                n,
                                values,
                                stream,
                                saturated: scratch.saturated,
                            });
                        }
                        axis -= 1;
                        t[axis] += 1;
                        if t[axis] <= n {
                            break;
                        }
                        t[axis] = -n;
                    }
                }
            }
            Topology::Sites {
                structure,
                value_sites,
                ..
            } => {
                let d = structure.dim();
                let index: HashMap<&HElement, usize> =
                    value_sites.iter().enumerate().map(|(i, s)| (s, i)).collect();
                let side = (2 * n + 1) as usize;
                let mut values = Vec::with_capacity(side.pow(d as u32));
                let mut t = vec![-n; d];
                loop {
                    let s = structure.project(&t)?;
                    let i = *index
                        .get(&s)
                        .ok_or_else(|| Error::Domain("window exceeds sampled radius".into()))?;
                    values.push(scratch.values[i]);
                    let mut axis = d;
                    loop {
                        if axis == 0 {
                            return Ok(FieldSample {
                                d,
                                n,
                                values,
                                stream,
                                saturated: scratch.saturated,
                            });
                        }
                        axis -= 1;
                        t[axis] += 1;
                        if t[axis] <= n {
                            break;
                        }
                        t[axis] = -n;
                    }
                }
            }
        }
    }
}

fn lattice_value(scratch: &Scratch, value_radius: i64, d: usize, t: &[i64]) -> f64 {
    let side = (2 * value_radius + 1) as usize;
    let mut idx = 0usize;
    for axis in 0..d {
        idx = idx * side + (t[axis] + value_radius) as usize;
    }
    scratch.values[idx]
}

/// Convenience wrapper matching the one-shot sampling interface.
pub fn sample_field_exact(
    spec: &StableFieldSpec,
    n: i64,
    stream: RngStream,
) -> Result<FieldSample> {
    FieldSampler::new(spec, n)?.materialize(stream, n)
}

/// One-shot series sampler; see [`FieldSampler::sample_series_into`].
pub fn sample_field_series(
    spec: &StableFieldSpec,
    n: i64,
    eps: f64,
    mode: SmallJumpMode,
    stream: RngStream,
) -> Result<(FieldSample, TruncationReport)> {
    let sampler = FieldSampler::new(spec, n)?;
    let mut scratch = sampler.scratch();
    let report = sampler.sample_series_into(eps, mode, stream, &mut scratch)?;
    let sample = sampler.materialize_values(&scratch, stream, n)?;
    Ok((sample, report))
}

