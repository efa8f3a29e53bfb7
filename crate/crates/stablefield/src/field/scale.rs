use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::field::spec::{FieldKernel, StableFieldSpec};
use crate::field::stable::unit_site_scale;
use crate::lattice::HElement;

/// Exact SaS scale of the linear functional `sum_t c_t X_t` for a
/// dissipative field:
/// `(2/C_alpha)^{1/alpha} (sum_{v,u} nu_v |sum_t c_t f(v, u-t)|^alpha)^{1/alpha}`.
///
/// This is the ground-truth oracle for scale-equivalence diagnostics; the
/// site factor matches the sampler (full symmetric mark intensity).
pub fn exact_scale_dissipative(
    spec: &StableFieldSpec,
    coeffs: &[(Vec<i64>, f64)],
) -> Result<f64> {
    let FieldKernel::Dissipative { d, entries } = &spec.kernel else {
        return Err(Error::Domain(
            "dissipative scale oracle needs a dissipative spec".into(),
        ));
    };
    let mut g: HashMap<(usize, Vec<i64>), f64> = HashMap::new();
    for (t, c) in coeffs {
        if t.len() != *d {
            return Err(Error::Domain("coefficient site dimension mismatch".into()));
        }
        if *c == 0.0 {
            continue;
        }
        for e in entries {
            // u - t = w  =>  u = t + w
            let u: Vec<i64> = t.iter().zip(&e.at).map(|(&a, &b)| a + b).collect();
            *g.entry((e.v, u)).or_insert(0.0) += c * e.value;
        }
    }
    accumulate(spec, g.into_iter().map(|((v, _), x)| (v, x)))
}

/// Conservative analog over `H`, with arbitrary coefficients on sites of
/// `H` (window sums fold the coset counts `m(s,n)` into the
/// coefficients).
pub fn exact_scale_conservative(
    spec: &StableFieldSpec,
    coeffs: &[(HElement, f64)],
) -> Result<f64> {
    let FieldKernel::Conservative { structure, entries } = &spec.kernel else {
        return Err(Error::Domain(
            "conservative scale oracle needs a conservative spec".into(),
        ));
    };
    let mut g: HashMap<(usize, HElement), f64> = HashMap::new();
    for (s, c) in coeffs {
        if *c == 0.0 {
            continue;
        }
        for e in entries {
            // X_s collects the atom at u with u + s = at
            let u = structure.sub(&e.at, s)?;
            *g.entry((e.v, u)).or_insert(0.0) += c * e.value;
        }
    }
    accumulate(spec, g.into_iter().map(|((v, _), x)| (v, x)))
}

/// Marginal scale of a single field value (`c = 1` at the origin).
pub fn marginal_scale(spec: &StableFieldSpec) -> Result<f64> {
    match &spec.kernel {
        FieldKernel::Dissipative { d, .. } => {
            exact_scale_dissipative(spec, &[(vec![0; *d], 1.0)])
        }
        FieldKernel::Conservative { structure, .. } => {
            let id = HElement::identity(structure.free_rank());
            exact_scale_conservative(spec, &[(id, 1.0)])
        }
    }
}

fn accumulate(spec: &StableFieldSpec, terms: impl Iterator<Item = (usize, f64)>) -> Result<f64> {
    let alpha = spec.alpha;
    let mut mass = 0.0;
    for (v, x) in terms {
        mass += spec.mixing[v].weight * x.abs().powf(alpha);
    }
    Ok(unit_site_scale(alpha)? * mass.powf(1.0 / alpha))
}
