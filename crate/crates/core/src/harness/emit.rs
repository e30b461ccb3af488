//! Artifact emission: trajectory CSV and stable JSON.
//!
//! CSV floats carry 17 significant decimal digits (lossless for binary64),
//! lines end in LF, and a comment block records the config hash, seed and
//! library version, so identical runs emit byte-identical files.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::optimizers::Trajectory;

#[derive(Debug, Clone)]
pub struct EmitMeta {
    pub config_hash: String,
    pub seed: u64,
}

/// 17-significant-digit decimal rendering (round-trips any f64 exactly).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write the trajectory CSV. Columns depend on what the run recorded:
/// `t, x[..], y[..], grad_x_norm, grad_y_norm, grad_f_sq, grad_phi_norm?,
/// moreau_grad_norm?, r_t?`.
pub fn emit_trajectory_csv(traj: &Trajectory, meta: &EmitMeta, path: &Path) -> std::io::Result<()> {
    let mut out = Vec::new();
    writeln!(out, "# config_hash: {}", meta.config_hash)?;
    writeln!(out, "# seed: {}", meta.seed)?;
    writeln!(out, "# version: {}", super::LIB_VERSION)?;
    let n_points = traj.points.len();
    let (dim_x, dim_y) = traj
        .points
        .first()
        .map(|p| (p.x.len(), p.y.len()))
        .unwrap_or((0, 0));

    let mut header: Vec<String> = vec!["t".into()];
    for i in 0..dim_x {
        header.push(format!("x[{i}]"));
    }
    for j in 0..dim_y {
        header.push(format!("y[{j}]"));
    }
    let have_grads = traj.sample_grads.len() == n_points && n_points > 0;
    if have_grads {
        header.push("grad_x_norm".into());
        header.push("grad_y_norm".into());
    }
    let have_gfsq = traj.grad_f_sq.len() == traj.measure.len();
    if have_gfsq {
        header.push("grad_f_sq".into());
    }
    let have_gphi = traj.grad_phi.len() == traj.measure.len();
    if have_gphi {
        header.push("grad_phi_norm".into());
    }
    let have_moreau = !traj.moreau_grad.is_empty();
    if have_moreau {
        header.push("moreau_grad_norm".into());
    }
    let have_r = traj.potentials.len() == traj.measure.len();
    if have_r {
        header.push("r_t".into());
    }
    writeln!(out, "{}", header.join(","))?;

    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut moreau_iter = traj.moreau_grad.iter().peekable();
    for t in 0..traj.measure.len() {
        let mut row: Vec<String> = vec![t.to_string()];
        if t < n_points {
            for v in traj.points[t].x.iter().chain(traj.points[t].y.iter()) {
                row.push(fmt_f64(*v));
            }
        } else if n_points > 0 {
            for _ in 0..dim_x + dim_y {
                row.push(String::new());
            }
        }
        if have_grads {
            row.push(fmt_f64(norm(&traj.sample_grads[t].gx)));
            row.push(fmt_f64(norm(&traj.sample_grads[t].gy)));
        }
        if have_gfsq {
            row.push(fmt_f64(traj.grad_f_sq[t]));
        }
        if have_gphi {
            row.push(fmt_f64(traj.grad_phi[t]));
        }
        if have_moreau {
            if let Some((mt, mv)) = moreau_iter.peek() {
                if *mt == t as u64 {
                    row.push(fmt_f64(*mv));
                    moreau_iter.next();
                } else {
                    row.push(String::new());
                }
            } else {
                row.push(String::new());
            }
        }
        if have_r {
            row.push(fmt_f64(traj.potentials[t]));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    std::fs::write(path, out)
}

/// Serialize any result as pretty JSON with a trailing newline. Struct
/// field order is fixed, so identical inputs emit identical bytes.
pub fn emit_json<T: Serialize>(value: &T, path: &Path) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    text.push('\n');
    std::fs::write(path, text)
}
