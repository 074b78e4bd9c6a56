//! Deterministic CSV writers. Every file starts with the schema comment
//! line; floats are written in shortest round-trip form, so identical
//! configs produce byte-identical files.

use std::io::Write;
use std::path::Path;

pub const SCHEMA_LINE: &str = concat!(
    "# shearflow-damping-lab v",
    env!("CARGO_PKG_VERSION"),
    " schema=1"
);

pub const SPECTRUM_HEADER: &str = "run_id,L,alpha,N,Y,lambda0,c0,n_outside,max_excursion,pass";
pub const MOURRE_HEADER: &str =
    "run_id,window_lo,window_hi,theta_I,projected_min,pass,width_at_pass";
pub const DAMPING_HEADER: &str = "run_id,k,exponent,prefactor,residual,t_min,t_max,pass";
pub const ENHANCED_HEADER: &str = "run_id,nu,T_half,beta,c0_fit,residual,pass";
pub const TRAJECTORY_HEADER: &str =
    "t,norm_psi,norm_weighted_k1,norm_weighted_k2,norm_v1,norm_v2,N_of_t";

pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{SCHEMA_LINE}")?;
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()
}
