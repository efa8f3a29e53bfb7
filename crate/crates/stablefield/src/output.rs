//! Output artifacts: CSV tables and JSON summaries, written atomically
//! (temp file + rename) with the config hash stamped in a comment line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::Result;
use crate::field::FieldSample;
use crate::harness::{EstimateRecord, SigmaRecord, WeakReport};

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Atomic write: the file appears complete or not at all.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tag = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp: PathBuf = path.with_extension(format!("tmp.{}.{}", std::process::id(), tag));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x}")
    }
}

fn regime_name(r: crate::field::Regime) -> &'static str {
    match r {
        crate::field::Regime::Dissipative => "dissipative",
        crate::field::Regime::Conservative => "conservative",
    }
}

/// Estimate records as CSV with the fixed column order
/// `regime,event,n,scaling,replicates,p_hat,se,scaled,limit,ratio`.
pub fn records_csv(records: &[EstimateRecord], config_hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# config {config_hash}");
    let _ = writeln!(s, "regime,event,n,scaling,replicates,p_hat,se,scaled,limit,ratio");
    for r in records {
        let limit = r.limit.map(|l| fmt_f64(l.value)).unwrap_or_else(|| "nan".into());
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            regime_name(r.regime),
            r.event,
            r.n,
            fmt_f64(r.scaling),
            r.replicates,
            fmt_f64(r.p_hat),
            fmt_f64(r.se),
            fmt_f64(r.scaled),
            limit,
            fmt_f64(r.ratio),
        );
    }
    s
}

/// Experiment summary as JSON: records plus fitted exponent and optional
/// diagnostics.
pub fn summary_json(
    records: &[EstimateRecord],
    fitted_exponent: Option<f64>,
    sigma: &[SigmaRecord],
    weak: &[WeakReport],
    config_hash: &str,
) -> Result<String> {
    let value = serde_json::json!({
        "config": config_hash,
        "records": records,
        "fittedTailExponent": fitted_exponent,
        "sigmaEquivalence": sigma,
        "weakConvergence": weak,
    });
    Ok(serde_json::to_string_pretty(&value)?)
}

/// Field sample dump: one row per lattice point, `t` coordinates then the
/// value.
pub fn field_csv(sample: &FieldSample, config_hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# config {config_hash}");
    let mut header: Vec<String> = (0..sample.d).map(|i| format!("t{i}")).collect();
    header.push("value".into());
    let _ = writeln!(s, "{}", header.join(","));
    let mut t = vec![-sample.n; sample.d];
    let mut idx = 0usize;
    loop {
        let coords: Vec<String> = t.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(s, "{},{}", coords.join(","), fmt_f64(sample.values[idx]));
        idx += 1;
        let mut axis = sample.d;
        loop {
            if axis == 0 {
                return s;
            }
            axis -= 1;
            t[axis] += 1;
            if t[axis] <= sample.n {
                break;
            }
            t[axis] = -sample.n;
        }
    }
}

/// Geometry table: `Leb(Delta)`, a `(y, V(y))` grid, and the volume
/// integral, as CSV sections.
pub fn geometry_csv(
    leb: (f64, f64),
    table: &[(Vec<f64>, f64)],
    integral: Option<(f64, f64, f64)>,
    config_hash: &str,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# config {config_hash}");
    let _ = writeln!(s, "quantity,value,error_bound");
    let _ = writeln!(s, "leb_delta,{},{}", fmt_f64(leb.0), fmt_f64(leb.1));
    if let Some((alpha, v, e)) = integral {
        let _ = writeln!(
            s,
            "integral_v_alpha(alpha={}),{},{}",
            fmt_f64(alpha),
            fmt_f64(v),
            fmt_f64(e)
        );
    }
    let _ = writeln!(s, "y,fiber_volume");
    for (y, vol) in table {
        let ys: Vec<String> = y.iter().map(|c| fmt_f64(*c)).collect();
        let _ = writeln!(s, "{},{}", ys.join(";"), fmt_f64(*vol));
    }
    s
}

/// Human-readable merged table for the `report` subcommand.
pub fn report_table(
    records: &[EstimateRecord],
    fitted_exponent: Option<f64>,
    sigma: &[SigmaRecord],
    weak: &[WeakReport],
) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<14} {:>6} {:>12} {:>12} {:>12} {:>12} {:>10}",
        "event", "n", "p_hat", "scaled", "limit", "ratio", "se"
    );
    for r in records {
        let limit = r.limit.map(|l| fmt_f64(l.value)).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:<14} {:>6} {:>12} {:>12} {:>12} {:>12} {:>10}",
            truncate(&r.event, 14),
            r.n,
            short(r.p_hat),
            short(r.scaled),
            limit,
            short(r.ratio),
            short(r.se),
        );
    }
    if let Some(a) = fitted_exponent {
        let _ = writeln!(s, "fitted tail exponent: {}", short(a));
    }
    for rec in sigma {
        let _ = writeln!(
            s,
            "sigma n={:<6} normalized={} implied={} display={} ratio={}",
            rec.n,
            short(rec.normalized),
            short(rec.implied_coeff),
            short(rec.display_coeff),
            short(rec.ratio),
        );
    }
    for w in weak {
        let _ = writeln!(
            s,
            "weak-convergence n={} R={} frechet_coeff={} ks={}",
            w.n,
            w.replicates,
            short(w.frechet_coeff),
            short(w.ks),
        );
    }
    s
}

fn truncate(s: &str, n: usize) -> String {
    if s.len() <= n {
        s.to_string()
    } else {
        format!("{}..", &s[..n - 2])
    }
}

fn short(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        "inf".into()
    } else if x == 0.0 {
        "0".into()
    } else if x.abs() >= 0.001 && x.abs() < 1e6 {
        format!("{x:.6}")
    } else {
        format!("{x:.4e}")
    }
}
