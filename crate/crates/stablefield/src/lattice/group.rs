use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::matrix::linf;
use crate::lattice::{smith_normal_form, IntMatrix};

fn cap(op: &str) -> Error {
    Error::Capacity(format!("integer overflow in {op}"))
}

/// Element of the index group `H`, stored as a coset index (1-based) and
/// free coordinates `z in Z^p`; it embeds into `Z^d` as `x_k + U z`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HElement {
    pub coset: usize,
    pub free: Vec<i64>,
}

impl HElement {
    pub fn identity(p: usize) -> Self {
        HElement {
            coset: 1,
            free: vec![0; p],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.coset == 1 && self.free.iter().all(|&z| z == 0)
    }
}

/// Algebraic decomposition of a translation-quotient `Z^d` action.
///
/// `U` spans a free complement `F`, `V` spans the kernel `K`, and the
/// coset representatives enumerate `Z^d/(F+K)` (identity first, each the
/// sup-norm-smallest nonnegative vector of its coset with lexicographic
/// tie-break). `U` itself is convention-dependent: any valid complement
/// changes `Delta` and `V(y)` but not the basis-invariant limit constants.
#[derive(Debug, Clone)]
pub struct GroupStructure {
    d: usize,
    p: usize,
    l: i64,
    u: IntMatrix,
    v: IntMatrix,
    coset_reps: Vec<Vec<i64>>,
    // caches derived from the data above
    embed: IntMatrix,     // [U | V], d x d
    embed_det: i64,       // |det| = l
    embed_adj: IntMatrix, // adjugate of [U | V]
    fp_left: IntMatrix,   // left transform of SNF([U | V])
    fp_diag: Vec<i64>,
    rep_lookup: HashMap<Vec<i64>, usize>,
    // enumeration bounds: lambda recovery |lambda_j| <= gram_bound[j] * ||V lambda||_inf
    gram_num: Vec<i64>, // row sums of |adj(V^T V) V^T|
    gram_den: i64,      // det(V^T V) > 0 (1 when V has no columns)
    z_num: Vec<i64>,    // row sums of |adj([U|V])| restricted to first p rows
}

impl GroupStructure {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn free_rank(&self) -> usize {
        self.p
    }

    pub fn torsion_order(&self) -> i64 {
        self.l
    }

    pub fn basis_u(&self) -> &IntMatrix {
        &self.u
    }

    pub fn basis_v(&self) -> &IntMatrix {
        &self.v
    }

    pub fn coset_reps(&self) -> &[Vec<i64>] {
        &self.coset_reps
    }

    /// Builds the structure from its defining data, re-deriving caches and
    /// validating the invariants.
    pub fn from_parts(u: IntMatrix, v: IntMatrix, coset_reps: Vec<Vec<i64>>) -> Result<Self> {
        let d = u.rows();
        let p = u.cols();
        if v.rows() != d || p + v.cols() != d {
            return Err(Error::InvalidAction(
                "U and V shapes do not decompose Z^d".into(),
            ));
        }
        let embed = u.hconcat(&v)?;
        let det = embed.det()?;
        if det == 0 {
            return Err(Error::InvalidAction(
                "columns of U and V are rationally dependent".into(),
            ));
        }
        let l = det.abs();
        if coset_reps.len() != l as usize {
            return Err(Error::InvalidAction(format!(
                "expected {l} coset representatives, got {}",
                coset_reps.len()
            )));
        }
        let embed_adj = embed.adjugate()?;
        let snf = smith_normal_form(&embed)?;
        let fp_diag = snf.diag.clone();
        let fp_left = snf.left;

        let mut g = GroupStructure {
            d,
            p,
            l,
            u,
            v,
            coset_reps,
            embed,
            embed_det: det,
            embed_adj,
            fp_left,
            fp_diag,
            rep_lookup: HashMap::new(),
            gram_num: Vec::new(),
            gram_den: 1,
            z_num: Vec::new(),
        };
        g.build_bounds()?;
        g.build_rep_lookup()?;
        Ok(g)
    }

    fn build_bounds(&mut self) -> Result<()> {
        let r = self.d - self.p;
        if r > 0 {
            // Gram matrix G = V^T V; lambda = adj(G) V^T (V lambda) / det(G).
            let vt = transpose(&self.v);
            let gram = vt.checked_mul(&self.v)?;
            let det = gram.det()?;
            debug_assert!(det > 0);
            let adj = gram.adjugate()?;
            let m = adj.checked_mul(&vt)?;
            self.gram_num = (0..r)
                .map(|i| (0..self.d).map(|j| m.get(i, j).abs()).sum())
                .collect();
            self.gram_den = det;
        }
        // z-part of [U|V]^{-1} w: |z_i| <= rowsum(|adj|_i) * ||w||_inf / |det|
        self.z_num = (0..self.p)
            .map(|i| (0..self.d).map(|j| self.embed_adj.get(i, j).abs()).sum())
            .collect();
        Ok(())
    }

    fn build_rep_lookup(&mut self) -> Result<()> {
        let mut lookup = HashMap::new();
        for (k, rep) in self.coset_reps.iter().enumerate() {
            let fp = self.fingerprint(rep)?;
            if lookup.insert(fp, k).is_some() {
                return Err(Error::InvalidAction(
                    "coset representatives are not pairwise distinct".into(),
                ));
            }
        }
        let id_fp = self.fingerprint(&vec![0; self.d])?;
        if lookup.get(&id_fp) != Some(&0) {
            return Err(Error::InvalidAction(
                "identity coset must be listed first".into(),
            ));
        }
        self.rep_lookup = lookup;
        Ok(())
    }

    /// Residue of `t` modulo the full-rank lattice `F + K`; equal
    /// fingerprints mean equal cosets.
    fn fingerprint(&self, t: &[i64]) -> Result<Vec<i64>> {
        let w = self.fp_left.checked_mul_vec(t)?;
        Ok(w.iter()
            .zip(&self.fp_diag)
            .map(|(&x, &m)| x.rem_euclid(m))
            .collect())
    }

    /// Lattice embedding `x_k + U z` of an element of `H`.
    pub fn embed(&self, s: &HElement) -> Result<Vec<i64>> {
        if s.coset == 0 || s.coset > self.l as usize || s.free.len() != self.p {
            return Err(Error::Domain("H element does not match structure".into()));
        }
        let uz = self.u.checked_mul_vec(&s.free)?;
        self.coset_reps[s.coset - 1]
            .iter()
            .zip(&uz)
            .map(|(&a, &b)| a.checked_add(b).ok_or_else(|| cap("embed")))
            .collect()
    }

    /// Projection `pi: Z^d -> H`; the unique `s` with `t - embed(s) in K`.
    pub fn project(&self, t: &[i64]) -> Result<HElement> {
        if t.len() != self.d {
            return Err(Error::Domain("point dimension mismatch".into()));
        }
        let fp = self.fingerprint(t)?;
        let k = *self
            .rep_lookup
            .get(&fp)
            .expect("coset representatives cover Z^d/(F+K)");
        let rep = &self.coset_reps[k];
        let rhs: Vec<i64> = t
            .iter()
            .zip(rep)
            .map(|(&a, &b)| a.checked_sub(b).ok_or_else(|| cap("project")))
            .collect::<Result<_>>()?;
        let sol = self
            .embed
            .solve_integer(&rhs)?
            .expect("t - x_k lies in F + K by construction");
        Ok(HElement {
            coset: k + 1,
            free: sol[..self.p].to_vec(),
        })
    }

    /// Group law of `(H, +)` modulo `K`.
    pub fn add(&self, a: &HElement, b: &HElement) -> Result<HElement> {
        let ea = self.embed(a)?;
        let eb = self.embed(b)?;
        let sum: Vec<i64> = ea
            .iter()
            .zip(&eb)
            .map(|(&x, &y)| x.checked_add(y).ok_or_else(|| cap("h_add")))
            .collect::<Result<_>>()?;
        self.project(&sum)
    }

    pub fn inv(&self, a: &HElement) -> Result<HElement> {
        let ea = self.embed(a)?;
        let neg: Vec<i64> = ea
            .iter()
            .map(|&x| x.checked_neg().ok_or_else(|| cap("h_inv")))
            .collect::<Result<_>>()?;
        self.project(&neg)
    }

    /// `a - b` in `(H, +)`.
    pub fn sub(&self, a: &HElement, b: &HElement) -> Result<HElement> {
        self.add(a, &self.inv(b)?)
    }

    /// Quotient norm `N(s) = min { ||embed(s) + v||_inf : v in K }`.
    ///
    /// The enumeration radius `||embed(s)||_inf` is always admissible
    /// because `v = 0` is a candidate.
    pub fn norm(&self, s: &HElement) -> Result<i64> {
        let w = self.embed(s)?;
        Ok(self.norm_of_embedding(&w))
    }

    fn norm_of_embedding(&self, w: &[i64]) -> i64 {
        let r0 = linf(w);
        if r0 == 0 || self.d == self.p {
            return r0;
        }
        let mut best = r0;
        self.for_each_lambda(2 * r0, |vl| {
            let cand = w
                .iter()
                .zip(vl)
                .map(|(&a, &b)| (a + b).abs())
                .max()
                .unwrap();
            if cand < best {
                best = cand;
            }
        });
        best
    }

    /// Visits `V * lambda` for every integer `lambda` with
    /// `||V lambda||_inf <= radius` (a superset box is scanned; the bound
    /// comes from the Gram pseudo-inverse).
    fn for_each_lambda(&self, radius: i64, mut visit: impl FnMut(&[i64])) {
        let r = self.d - self.p;
        debug_assert!(r > 0);
        let bounds: Vec<i64> = self
            .gram_num
            .iter()
            .map(|&num| (num as i128 * radius as i128 / self.gram_den as i128) as i64)
            .collect();
        let mut lambda = vec![0i64; r];
        // iterative odometer over the box
        let mut idx: Vec<i64> = bounds.iter().map(|&b| -b).collect();
        loop {
            lambda.copy_from_slice(&idx);
            let vl = self
                .v
                .checked_mul_vec(&lambda)
                .expect("lambda box stays in range");
            visit(&vl);
            // increment odometer
            let mut i = 0;
            loop {
                if i == r {
                    return;
                }
                idx[i] += 1;
                if idx[i] <= bounds[i] {
                    break;
                }
                idx[i] = -bounds[i];
                i += 1;
            }
        }
    }

    /// The ball `H_n = { s in H : N(s) <= n }`, ordered by coset index and
    /// lexicographic free coordinates; monotone in `n` by inclusion.
    pub fn enumerate_hn(&self, n: i64) -> Result<Vec<HElement>> {
        if n < 0 {
            return Err(Error::Domain("H_n requires n >= 0".into()));
        }
        let mut out = Vec::new();
        for k in 0..self.l as usize {
            let rep = &self.coset_reps[k];
            let reach = n
                .checked_add(linf(rep))
                .ok_or_else(|| cap("enumerate_hn"))?;
            let zb: Vec<i64> = self
                .z_num
                .iter()
                .map(|&num| (num as i128 * reach as i128 / self.embed_det.abs() as i128) as i64)
                .collect();
            let mut z = vec![0i64; self.p];
            self.scan_free_box(&zb, 0, &mut z, k, n, &mut out)?;
        }
        Ok(out)
    }

    fn scan_free_box(
        &self,
        zb: &[i64],
        axis: usize,
        z: &mut Vec<i64>,
        k: usize,
        n: i64,
        out: &mut Vec<HElement>,
    ) -> Result<()> {
        if axis == self.p {
            let s = HElement {
                coset: k + 1,
                free: z.clone(),
            };
            if self.norm(&s)? <= n {
                out.push(s);
            }
            return Ok(());
        }
        for x in -zb[axis]..=zb[axis] {
            z[axis] = x;
            self.scan_free_box(zb, axis + 1, z, k, n, out)?;
        }
        z[axis] = 0;
        Ok(())
    }

    /// `m(s, n) = |[-n 1_d, n 1_d] \cap (embed(s) + K)|` by exact
    /// enumeration.
    pub fn count_coset_points(&self, s: &HElement, n: i64) -> Result<i64> {
        if n < 0 {
            return Err(Error::Domain("m(s, n) requires n >= 0".into()));
        }
        let w = self.embed(s)?;
        if self.d == self.p {
            return Ok((linf(&w) <= n) as i64);
        }
        let radius = n.checked_add(linf(&w)).ok_or_else(|| cap("m(s,n)"))?;
        let mut count = 0i64;
        self.for_each_lambda(radius, |vl| {
            let inside = w.iter().zip(vl).all(|(&a, &b)| (a + b).abs() <= n);
            if inside {
                count += 1;
            }
        });
        Ok(count)
    }
}

fn transpose(m: &IntMatrix) -> IntMatrix {
    let mut t = IntMatrix::zeros(m.cols(), m.rows());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            t.set(j, i, m.get(i, j));
        }
    }
    t
}

/// Serialized form mirrors the JSON interface:
/// `{"d":2,"p":1,"l":1,"U":[[1],[0]],"V":[[1],[1]],"cosetReps":[[0,0]]}`.
#[derive(Serialize, Deserialize)]
struct GroupStructureRepr {
    d: usize,
    p: usize,
    l: i64,
    #[serde(rename = "U")]
    u: IntMatrix,
    #[serde(rename = "V")]
    v: IntMatrix,
    #[serde(rename = "cosetReps")]
    coset_reps: Vec<Vec<i64>>,
}

impl Serialize for GroupStructure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GroupStructureRepr {
            d: self.d,
            p: self.p,
            l: self.l,
            u: self.u.clone(),
            v: self.v.clone(),
            coset_reps: self.coset_reps.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupStructure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = GroupStructureRepr::deserialize(d)?;
        let g = GroupStructure::from_parts(repr.u, repr.v, repr.coset_reps)
            .map_err(serde::de::Error::custom)?;
        if g.p != repr.p || g.l != repr.l || g.d != repr.d {
            return Err(serde::de::Error::custom(
                "inconsistent group structure header",
            ));
        }
        Ok(g)
    }
}

/// Decomposes the action with kernel spanned by the columns of
/// `kernel_basis` (a `d x r` matrix, `0 <= r < d`).
///
/// The free complement `U` follows a fixed convention: the first (in
/// lexicographic subset order) set of standard basis vectors that spans a
/// valid complement; if none exists, the complement read off the Smith
/// decomposition with columns reduced to minimal representatives mod `K`.
pub fn analyze_action(kernel_basis: &IntMatrix) -> Result<GroupStructure> {
    let d = kernel_basis.rows();
    let r = kernel_basis.cols();
    if d == 0 {
        return Err(Error::InvalidAction("ambient dimension is zero".into()));
    }
    if r >= d {
        return Err(Error::InvalidAction(format!(
            "kernel rank {r} leaves no free part (need p = d - r >= 1)"
        )));
    }
    let snf = smith_normal_form(kernel_basis)?;
    if snf.rank() != r {
        return Err(Error::InvalidAction(
            "kernel basis columns are rationally dependent".into(),
        ));
    }
    let p = d - r;
    let mut l: i64 = 1;
    for &di in snf.diag.iter() {
        l = l.checked_mul(di).ok_or_else(|| cap("torsion order"))?;
    }

    let u = choose_complement(kernel_basis, d, p, l, &snf)?;
    let coset_reps = enumerate_coset_reps(&u, kernel_basis, d, l)?;
    GroupStructure::from_parts(u, kernel_basis.clone(), coset_reps)
}

fn choose_complement(
    basis: &IntMatrix,
    d: usize,
    p: usize,
    l: i64,
    snf: &crate::lattice::SmithDecomposition,
) -> Result<IntMatrix> {
    // Standard basis subsets in lexicographic order.
    let mut subset: Vec<usize> = (0..p).collect();
    loop {
        let cols: Vec<Vec<i64>> = subset
            .iter()
            .map(|&i| {
                let mut e = vec![0i64; d];
                e[i] = 1;
                e
            })
            .collect();
        let u = IntMatrix::from_cols(d, &cols)?;
        let e = u.hconcat(basis)?;
        if e.det()?.abs() == l {
            return Ok(u);
        }
        // next lexicographic subset of {0..d-1}
        let mut i = p;
        loop {
            if i == 0 {
                // exhausted; fall back to the Smith-derived complement
                return snf_complement(basis, d, p, snf);
            }
            i -= 1;
            if subset[i] != i + d - p {
                subset[i] += 1;
                for j in i + 1..p {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn snf_complement(
    basis: &IntMatrix,
    d: usize,
    p: usize,
    snf: &crate::lattice::SmithDecomposition,
) -> Result<IntMatrix> {
    // In w = P t coordinates the kernel lattice is spanned by the diagonal
    // columns, so a free complement pulls back the last p unit vectors.
    let pinv = {
        let det = snf.left.det()?; // +-1
        let adj = snf.left.adjugate()?;
        let mut m = adj;
        if det < 0 {
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    m.set(i, j, -m.get(i, j));
                }
            }
        }
        m
    };
    let mut cols = Vec::with_capacity(p);
    for j in d - p..d {
        cols.push(reduce_mod_kernel(pinv.col(j), basis)?);
    }
    IntMatrix::from_cols(d, &cols)
}

/// Minimal representative of `c + span_Z(basis)` under the sup norm, with
/// lexicographic tie-break and the first nonzero entry positive.
fn reduce_mod_kernel(c: Vec<i64>, basis: &IntMatrix) -> Result<Vec<i64>> {
    let r = basis.cols();
    if r == 0 {
        return Ok(normalize_sign(c));
    }
    let d = basis.rows();
    let vt = transpose(basis);
    let gram = vt.checked_mul(basis)?;
    let det = gram.det()?;
    let adj = gram.adjugate()?;
    let m = adj.checked_mul(&vt)?;
    let radius = 2 * linf(&c);
    let bounds: Vec<i64> = (0..r)
        .map(|i| {
            let num: i64 = (0..d).map(|j| m.get(i, j).abs()).sum();
            (num as i128 * radius as i128 / det as i128) as i64
        })
        .collect();
    let mut best = normalize_sign(c.clone());
    let mut idx: Vec<i64> = bounds.iter().map(|&b| -b).collect();
    loop {
        let vl = basis.checked_mul_vec(&idx)?;
        let cand: Vec<i64> = c.iter().zip(&vl).map(|(&a, &b)| a + b).collect();
        let cand = normalize_sign(cand);
        if (linf(&cand), &cand) < (linf(&best), &best) {
            best = cand;
        }
        let mut i = 0;
        loop {
            if i == r {
                return Ok(best);
            }
            idx[i] += 1;
            if idx[i] <= bounds[i] {
                break;
            }
            idx[i] = -bounds[i];
            i += 1;
        }
    }
}

fn normalize_sign(mut v: Vec<i64>) -> Vec<i64> {
    if let Some(first) = v.iter().find(|&&x| x != 0) {
        if *first < 0 {
            for x in &mut v {
                *x = -*x;
            }
        }
    }
    v
}

fn enumerate_coset_reps(
    u: &IntMatrix,
    v: &IntMatrix,
    d: usize,
    l: i64,
) -> Result<Vec<Vec<i64>>> {
    let embed = u.hconcat(v)?;
    let snf = smith_normal_form(&embed)?;
    let fingerprint = |t: &[i64]| -> Result<Vec<i64>> {
        let w = snf.left.checked_mul_vec(t)?;
        Ok(w.iter()
            .zip(&snf.diag)
            .map(|(&x, &m)| x.rem_euclid(m))
            .collect())
    };

    let mut reps: Vec<Vec<i64>> = Vec::with_capacity(l as usize);
    let mut seen: HashMap<Vec<i64>, ()> = HashMap::new();
    let mut shell: i64 = 0;
    // Nonnegative shells by sup norm; within a shell, lexicographic order.
    while (reps.len() as i64) < l {
        if shell > 4 * l.max(1) + 16 {
            return Err(Error::Capacity(
                "coset representative search exceeded its bound".into(),
            ));
        }
        let mut t = vec![0i64; d];
        scan_shell(&mut t, 0, shell, false, &mut |t| {
            if (reps.len() as i64) >= l {
                return Ok(());
            }
            let fp = fingerprint(t)?;
            if seen.insert(fp, ()).is_none() {
                reps.push(t.to_vec());
            }
            Ok(())
        })?;
        shell += 1;
    }
    Ok(reps)
}

/// Visits nonnegative vectors with `max coordinate == shell` in
/// lexicographic order.
fn scan_shell(
    t: &mut Vec<i64>,
    axis: usize,
    shell: i64,
    hit: bool,
    visit: &mut impl FnMut(&[i64]) -> Result<()>,
) -> Result<()> {
    if axis == t.len() {
        if hit || shell == 0 {
            visit(t)?;
        }
        return Ok(());
    }
    for x in 0..=shell {
        t[axis] = x;
        scan_shell(t, axis + 1, shell, hit || x == shell, visit)?;
    }
    t[axis] = 0;
    Ok(())
}
