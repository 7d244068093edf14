//! CSV rendering of solver, certificate, norm and Monte-Carlo results.
//!
//! Tables are rendered to memory first; [`write_tables`] only touches the
//! file system once every table of a command exists.

use std::fs;
use std::path::Path;

use crate::analysis::{McReport, NormReport, TailDecay};
use crate::combinatorics::{catalan, factorial_ratio_bound};
use crate::error::{Error, Result};
use crate::multiindex::{enumerate, Truncation};
use crate::propagator::{BoundCertificate, SolveReport};

/// A rendered CSV file.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn render(name: &str, meta: &[(String, String)], header: &[&str], rows: Vec<Vec<String>>) -> Result<Table> {
    let mut bytes = Vec::new();
    for (k, v) in meta {
        bytes.extend_from_slice(format!("# {k}={v}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(bytes);
    let csv_err = |e: csv::Error| Error::Numeric(format!("csv: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Numeric(format!("csv: {e}")))?;
    Ok(Table {
        name: name.to_string(),
        bytes,
    })
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

/// Output nodes kept by a stride; the final node is always kept.
pub fn strided_nodes(nodes: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut out: Vec<usize> = (0..nodes).step_by(stride).collect();
    if nodes > 0 && out.last() != Some(&(nodes - 1)) {
        out.push(nodes - 1);
    }
    out
}

/// `alpha,node,time,x,value` for every coefficient on the kept nodes.
pub fn trajectory_table(report: &SolveReport, stride: usize) -> Result<Table> {
    let traj = &report.trajectory;
    let basis = report.basis();
    let nodes = strided_nodes(traj.times.len(), stride);
    let mut rows = Vec::new();
    for (i, alpha) in basis.indices().iter().enumerate() {
        let label = alpha.to_string();
        for &n in &nodes {
            for (x, v) in traj.fields[n].coeff(i).iter().enumerate() {
                rows.push(vec![
                    label.clone(),
                    n.to_string(),
                    fmt_f64(traj.times[n]),
                    x.to_string(),
                    fmt_f64(*v),
                ]);
            }
        }
    }
    let t = basis.truncation();
    let meta = vec![
        kv("K", t.dimension()),
        kv("P", t.max_order()),
        kv("nodes", traj.times.len()),
        kv("stride", stride.max(1)),
    ];
    render("trajectory.csv", &meta, &["alpha", "node", "time", "x", "value"], rows)
}

/// `alpha,L_alpha,envelope,holds` with the envelope constants as metadata.
pub fn bounds_table(name: &str, cert: &BoundCertificate) -> Result<Table> {
    let mut meta = Vec::new();
    match (&cert.constants, &cert.fit_failure) {
        (Some(c), _) => {
            meta.extend([
                kv("degree", c.degree),
                kv("m", fmt_f64(c.m)),
                kv("w", fmt_f64(c.w)),
                kv("w_shifted", fmt_f64(c.w_shifted)),
                kv("level0_sup", fmt_f64(c.level0_sup)),
                kv("lambda_sup", fmt_f64(c.lambda_sup)),
                kv("quadratic_sup", fmt_f64(c.quadratic_sup)),
                kv("w_n", fmt_f64(c.w_n)),
                kv("m_n", fmt_f64(c.m_n)),
                kv("kappa", fmt_f64(c.kappa)),
                kv("K", fmt_f64(c.k)),
                kv("p", fmt_f64(c.p)),
                kv("c", fmt_f64(c.c)),
                kv("s", c.s),
                kv("q", fmt_f64(c.q)),
            ]);
            if c.degree == 3 {
                meta.extend([kv("a1", fmt_f64(c.a1)), kv("a2", fmt_f64(c.a2))]);
            }
        }
        (None, Some(reason)) => meta.push(kv("fit_failure", reason)),
        (None, None) => {}
    }
    meta.push(kv("holds", cert.holds()));
    let rows = cert
        .entries
        .iter()
        .map(|e| {
            vec![
                e.alpha.to_string(),
                fmt_f64(e.l_alpha),
                fmt_opt(e.envelope),
                e.status.as_str().to_string(),
            ]
        })
        .collect();
    render(name, &meta, &["alpha", "L_alpha", "envelope", "holds"], rows)
}

/// Per-level partial sums of a weighted norm.
pub fn norm_table(report: &NormReport, tail: &TailDecay) -> Result<Table> {
    let meta = vec![
        kv("rho", fmt_f64(report.rho)),
        kv("q", fmt_f64(report.q)),
        kv("value", fmt_f64(report.value)),
        kv("decaying", tail.decaying),
    ];
    let rows = report
        .level_sums
        .iter()
        .enumerate()
        .map(|(l, s)| {
            let ratio = if l == 0 { None } else { tail.ratios[l - 1] };
            vec![l.to_string(), fmt_f64(*s), fmt_opt(ratio)]
        })
        .collect();
    render("norms.csv", &meta, &["level", "level_sum", "ratio"], rows)
}

/// Componentwise Monte-Carlo moments against the chaos references.
pub fn mc_table(report: &McReport) -> Result<Table> {
    let (zm, zv) = report.max_z();
    let meta = vec![
        kv("seed", report.seed),
        kv("draws", report.draws),
        kv("max_z_mean", fmt_f64(zm)),
        kv("max_z_variance", fmt_f64(zv)),
    ];
    let rows = (0..report.mean.len())
        .map(|x| {
            vec![
                x.to_string(),
                fmt_f64(report.mean[x]),
                fmt_f64(report.se_mean[x]),
                fmt_f64(report.reference_mean[x]),
                fmt_f64(report.variance[x]),
                fmt_f64(report.se_variance[x]),
                fmt_f64(report.reference_variance[x]),
            ]
        })
        .collect();
    render(
        "monte_carlo.csv",
        &meta,
        &["x", "mean", "se_mean", "reference_mean", "variance", "se_variance", "reference_variance"],
        rows,
    )
}

/// `n,catalan,four_pow_n,holds` for `n ≤ max`.
pub fn catalan_table(max: u32) -> Result<Table> {
    let rows = (0..=max)
        .map(|n| {
            let c = catalan(n);
            let bound = num_bigint::BigUint::from(4u32).pow(n);
            vec![n.to_string(), c.to_string(), bound.to_string(), (c <= bound).to_string()]
        })
        .collect();
    render("catalan.csv", &[], &["n", "catalan", "four_pow_n", "holds"], rows)
}

/// `|α|!/α! ≤ (2ℕ)^{2α}` over a truncation.
pub fn factorial_bound_table(t: Truncation) -> Result<Table> {
    let rows = enumerate(t)
        .iter()
        .map(|a| {
            let b = factorial_ratio_bound(a);
            vec![a.to_string(), fmt_f64(b.ratio), fmt_f64(b.bound), b.holds.to_string()]
        })
        .collect();
    let meta = vec![kv("K", t.dimension()), kv("P", t.max_order())];
    render("factorial_bound.csv", &meta, &["alpha", "ratio", "bound", "holds"], rows)
}

/// Writes all tables into `dir`, each through a temporary file and a rename.
pub fn write_tables(dir: &Path, tables: &[Table]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(tables.len());
    for t in tables {
        let tmp = dir.join(format!(".{}.tmp", t.name));
        if let Err(e) = fs::write(&tmp, &t.bytes) {
            for (p, _) in &staged {
                let _ = fs::remove_file(p);
            }
            return Err(e.into());
        }
        staged.push((tmp, dir.join(&t.name)));
    }
    for (tmp, dest) in staged {
        fs::rename(tmp, dest)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn strides_keep_the_last_node() {
        assert_eq!(strided_nodes(11, 5), vec![0, 5, 10]);
        assert_eq!(strided_nodes(12, 5), vec![0, 5, 10, 11]);
        assert_eq!(strided_nodes(3, 0), vec![0, 1, 2]);
    }

    #[test]
    fn metadata_precedes_the_header() {
        let t = catalan_table(3).unwrap();
        let text = String::from_utf8(t.bytes).unwrap();
        assert!(text.starts_with("n,catalan,four_pow_n,holds\n0,1,1,true\n"));
        let t = factorial_bound_table(Truncation::new(1, 1).unwrap()).unwrap();
        let text = String::from_utf8(t.bytes).unwrap();
        assert!(text.starts_with("# K=1\n# P=1\nalpha,ratio,bound,holds\n"));
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        assert_eq!(r.records().count(), 2);
    }

    #[test]
    fn tables_are_written_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let t = catalan_table(2).unwrap();
        write_tables(dir.path(), std::slice::from_ref(&t)).unwrap();
        assert_eq!(fs::read(dir.path().join("catalan.csv")).unwrap(), t.bytes);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
