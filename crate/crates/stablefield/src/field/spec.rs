use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{GroupStructure, HElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Dissipative,
    Conservative,
}

/// One atom of the finite weighted mixing space `W`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixingAtom {
    pub label: String,
    pub weight: f64,
}

/// Kernel entry at mixing atom index `v` and site `at`.
#[derive(Debug, Clone)]
pub struct KernelEntry<Ix> {
    pub v: usize,
    pub at: Ix,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub enum FieldKernel {
    /// `f(v, u)` on `W x Z^d`, finitely supported.
    Dissipative {
        d: usize,
        entries: Vec<KernelEntry<Vec<i64>>>,
    },
    /// `h(v, s)` on `W x H`, finitely supported, together with the group
    /// structure of the underlying action.
    Conservative {
        structure: GroupStructure,
        entries: Vec<KernelEntry<HElement>>,
    },
}

/// Full specification of a stationary SaS field at desk scale: stability
/// index, finite mixing space, kernel table, and the neighborhood radius
/// `q` used by point-process vectors.
#[derive(Debug, Clone)]
pub struct StableFieldSpec {
    pub alpha: f64,
    pub mixing: Vec<MixingAtom>,
    pub kernel: FieldKernel,
    pub q: usize,
}

impl StableFieldSpec {
    pub fn regime(&self) -> Regime {
        match self.kernel {
            FieldKernel::Dissipative { .. } => Regime::Dissipative,
            FieldKernel::Conservative { .. } => Regime::Conservative,
        }
    }

    /// Ambient lattice dimension `d`.
    pub fn dim(&self) -> usize {
        match &self.kernel {
            FieldKernel::Dissipative { d, .. } => *d,
            FieldKernel::Conservative { structure, .. } => structure.dim(),
        }
    }

    /// Effective dimension: `d` in the dissipative case, the free rank
    /// `p` in the conservative case.
    pub fn effective_dim(&self) -> usize {
        match &self.kernel {
            FieldKernel::Dissipative { d, .. } => *d,
            FieldKernel::Conservative { structure, .. } => structure.free_rank(),
        }
    }

    pub fn structure(&self) -> Option<&GroupStructure> {
        match &self.kernel {
            FieldKernel::Dissipative { .. } => None,
            FieldKernel::Conservative { structure, .. } => Some(structure),
        }
    }

    /// Kernel support radius `T`: sup norm for dissipative kernels, the
    /// quotient norm `N` for conservative ones.
    pub fn support_radius(&self) -> Result<i64> {
        match &self.kernel {
            FieldKernel::Dissipative { entries, .. } => Ok(entries
                .iter()
                .map(|e| e.at.iter().map(|&x| x.abs()).max().unwrap_or(0))
                .max()
                .unwrap_or(0)),
            FieldKernel::Conservative { structure, entries } => {
                let mut t = 0;
                for e in entries {
                    t = t.max(structure.norm(&e.at)?);
                }
                Ok(t)
            }
        }
    }

    /// `||f||_alpha^alpha = sum_v nu_v sum_u |f(v,u)|^alpha`.
    pub fn kernel_alpha_mass(&self) -> f64 {
        let alpha = self.alpha;
        let weight = |v: usize| self.mixing[v].weight;
        match &self.kernel {
            FieldKernel::Dissipative { entries, .. } => entries
                .iter()
                .map(|e| weight(e.v) * e.value.abs().powf(alpha))
                .sum(),
            FieldKernel::Conservative { entries, .. } => entries
                .iter()
                .map(|e| weight(e.v) * e.value.abs().powf(alpha))
                .sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::config("field.alpha", "alpha must lie in (0,2)"));
        }
        if self.mixing.is_empty() {
            return Err(Error::config("field.mixing", "mixing space must be nonempty"));
        }
        for (i, a) in self.mixing.iter().enumerate() {
            if !(a.weight > 0.0) || !a.weight.is_finite() {
                return Err(Error::config(
                    format!("field.mixing[{i}].weight"),
                    "weights must be positive and finite",
                ));
            }
        }
        let mut labels: Vec<&str> = self.mixing.iter().map(|a| a.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.mixing.len() {
            return Err(Error::config("field.mixing", "labels must be unique"));
        }
        let (count, nonzero) = match &self.kernel {
            FieldKernel::Dissipative { d, entries } => {
                for (i, e) in entries.iter().enumerate() {
                    if e.at.len() != *d {
                        return Err(Error::config(
                            format!("field.kernel[{i}].u"),
                            format!("site must have dimension {d}"),
                        ));
                    }
                    if e.v >= self.mixing.len() {
                        return Err(Error::config(
                            format!("field.kernel[{i}].v"),
                            "unknown mixing label",
                        ));
                    }
                    if !e.value.is_finite() {
                        return Err(Error::config(
                            format!("field.kernel[{i}].value"),
                            "kernel values must be finite",
                        ));
                    }
                }
                (entries.len(), entries.iter().any(|e| e.value != 0.0))
            }
            FieldKernel::Conservative { structure, entries } => {
                for (i, e) in entries.iter().enumerate() {
                    if e.v >= self.mixing.len() {
                        return Err(Error::config(
                            format!("field.kernel[{i}].v"),
                            "unknown mixing label",
                        ));
                    }
                    if e.at.free.len() != structure.free_rank()
                        || e.at.coset == 0
                        || e.at.coset > structure.torsion_order() as usize
                    {
                        return Err(Error::config(
                            format!("field.kernel[{i}]"),
                            "H element does not match group structure",
                        ));
                    }
                    if !e.value.is_finite() {
                        return Err(Error::config(
                            format!("field.kernel[{i}].value"),
                            "kernel values must be finite",
                        ));
                    }
                }
                (entries.len(), entries.iter().any(|e| e.value != 0.0))
            }
        };
        if count == 0 || !nonzero {
            // the full-support condition of the theory is only enforceable
            // up to this nonzero check; see the crate docs
            return Err(Error::config(
                "field.kernel",
                "kernel must not be identically zero",
            ));
        }
        if let FieldKernel::Conservative { structure, .. } = &self.kernel {
            if structure.free_rank() == 0 || structure.free_rank() >= structure.dim() {
                return Err(Error::config(
                    "action",
                    "conservative fields need 1 <= p < d",
                ));
            }
        }
        Ok(())
    }
}
