//! Run configuration: flat key=value files with command-line overrides
//! (flags win). Every field is validated before any compute starts; a
//! validation failure exits with code 2 and names the offending key.

use std::fmt;
use std::path::{Path, PathBuf};

use shearflow_core::profiles::{
    make_algebraic_profile, make_tanh_profile, parse_table_profile, ShearProfile,
};

#[derive(Debug)]
pub struct ConfigError {
    pub key: &'static str,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Tanh,
    Algebraic,
    Table,
}

/// Fully validated run configuration. All runs are deterministic: no seeds,
/// no wall-clock in any output contract.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub profile: ProfileKind,
    pub l: f64,
    pub k_order: u32,
    pub table_path: Option<PathBuf>,
    pub alpha: i32,
    pub nu_list: Vec<f64>,
    pub n: usize,
    pub y_half: f64,
    pub window: (f64, f64),
    pub delta_g: f64,
    pub k_list: Vec<u32>,
    pub data_width: f64,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub out: PathBuf,
    /// sweep axes; singletons unless running a sweep
    pub l_list: Vec<f64>,
    pub alpha_list: Vec<i32>,
    pub sweep_cap: usize,
    /// whether Y was given explicitly (sweeps re-derive the default per L)
    pub y_explicit: bool,
}

/// Raw (pre-validation) key-value configuration.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub profile: Option<String>,
    pub l: Option<f64>,
    pub k_order: Option<u32>,
    pub table_path: Option<PathBuf>,
    pub alpha: Option<i32>,
    pub nu: Option<String>,
    pub n: Option<usize>,
    pub y_half: Option<f64>,
    pub window: Option<String>,
    pub delta_g: Option<f64>,
    pub k_list: Option<String>,
    pub data_width: Option<f64>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub out: Option<PathBuf>,
    pub l_list: Option<String>,
    pub alpha_list: Option<String>,
    pub sweep_cap: Option<usize>,
}

impl RawConfig {
    /// Fill unset fields from another raw config (used as: flags.merged_over(file)).
    pub fn merged_over(mut self, base: RawConfig) -> RawConfig {
        macro_rules! take {
            ($f:ident) => {
                if self.$f.is_none() {
                    self.$f = base.$f;
                }
            };
        }
        take!(profile);
        take!(l);
        take!(k_order);
        take!(table_path);
        take!(alpha);
        take!(nu);
        take!(n);
        take!(y_half);
        take!(window);
        take!(delta_g);
        take!(k_list);
        take!(data_width);
        take!(dt);
        take!(t_max);
        take!(out);
        take!(l_list);
        take!(alpha_list);
        take!(sweep_cap);
        self
    }
}

/// Parse the flat `key = value` file format. Unknown keys are rejected.
pub fn parse_config_file(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| err("config", format!("cannot read {}: {e}", path.display())))?;
    let mut raw = RawConfig::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("config", format!("line {}: expected key=value", lineno + 1)))?;
        let key = key.trim();
        let value = value.trim().to_string();
        macro_rules! parse_to {
            ($field:ident, $key:literal) => {
                raw.$field = Some(value.parse().map_err(|_| {
                    err($key, format!("cannot parse `{value}`"))
                })?)
            };
        }
        match key {
            "profile" => raw.profile = Some(value),
            "L" | "l" => parse_to!(l, "L"),
            "k" => parse_to!(k_order, "k"),
            "table" => raw.table_path = Some(PathBuf::from(value)),
            "alpha" => parse_to!(alpha, "alpha"),
            "nu" => raw.nu = Some(value),
            "N" | "n" => parse_to!(n, "N"),
            "Y" | "y" => parse_to!(y_half, "Y"),
            "window" => raw.window = Some(value),
            "delta_g" => parse_to!(delta_g, "delta_g"),
            "k_list" => raw.k_list = Some(value),
            "data_width" => parse_to!(data_width, "data_width"),
            "dt" => parse_to!(dt, "dt"),
            "tmax" => parse_to!(t_max, "tmax"),
            "out" => raw.out = Some(PathBuf::from(value)),
            "L_list" => raw.l_list = Some(value),
            "alpha_list" => raw.alpha_list = Some(value),
            "sweep_cap" => parse_to!(sweep_cap, "sweep_cap"),
            other => {
                return Err(err(
                    "config",
                    format!("unknown key `{other}` on line {}", lineno + 1),
                ))
            }
        }
    }
    Ok(raw)
}

fn parse_list<T: std::str::FromStr>(s: &str, key: &'static str) -> Result<Vec<T>, ConfigError> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<T>()
                .map_err(|_| err(key, format!("cannot parse list entry `{}`", tok.trim())))
        })
        .collect()
}

impl RawConfig {
    pub fn validate(self) -> Result<RunConfig, ConfigError> {
        let profile = match self.profile.as_deref().unwrap_or("tanh") {
            "tanh" => ProfileKind::Tanh,
            "algebraic" => ProfileKind::Algebraic,
            "table" => ProfileKind::Table,
            other => {
                return Err(err(
                    "profile",
                    format!("expected tanh|algebraic|table, got `{other}`"),
                ))
            }
        };
        let l = self.l.unwrap_or(2.0);
        if !(l.is_finite() && l > 0.0) {
            return Err(err("L", format!("stretching length must be positive, got {l}")));
        }
        let k_order = self.k_order.unwrap_or(2);
        if profile == ProfileKind::Algebraic && k_order < 2 {
            return Err(err("k", format!("algebraic decay order must be >= 2, got {k_order}")));
        }
        if profile == ProfileKind::Table && self.table_path.is_none() {
            return Err(err("table", "table profile requires a table file path"));
        }
        let alpha = self.alpha.unwrap_or(1);
        if alpha == 0 {
            return Err(err(
                "alpha",
                "alpha = 0 is the no-mixing degenerate mode (the vorticity equation reduces to d/dt omega = 0)",
            ));
        }
        let nu_list: Vec<f64> = match &self.nu {
            None => vec![1e-3],
            Some(s) => parse_list(s, "nu")?,
        };
        for &nu in &nu_list {
            if !(0.0..=1.0).contains(&nu) || !nu.is_finite() {
                return Err(err("nu", format!("viscosity must lie in [0, 1], got {nu}")));
            }
        }
        let n = self.n.unwrap_or(2048);
        if n < 8 {
            return Err(err("N", format!("need at least 8 interior nodes, got {n}")));
        }
        let y_explicit = self.y_half.is_some();
        let y_half = self.y_half.unwrap_or(40.0 * l.max(1.0));
        if !(y_half.is_finite() && y_half > 0.0) {
            return Err(err("Y", format!("half-width must be positive, got {y_half}")));
        }
        let window = match &self.window {
            None => (-0.4, 0.4),
            Some(s) => {
                let parts: Vec<f64> = parse_list(s, "window")?;
                if parts.len() != 2 || parts[0] >= parts[1] {
                    return Err(err("window", format!("expected `lo,hi` with lo < hi, got `{s}`")));
                }
                (parts[0], parts[1])
            }
        };
        let delta_g = self.delta_g.unwrap_or(0.1 * (window.1 - window.0));
        if !(delta_g.is_finite() && delta_g > 0.0) {
            return Err(err("delta_g", format!("transition width must be positive, got {delta_g}")));
        }
        let k_list: Vec<u32> = match &self.k_list {
            None => vec![1, 2],
            Some(s) => parse_list(s, "k_list")?,
        };
        if k_list.is_empty() {
            return Err(err("k_list", "need at least one weight order"));
        }
        let data_width = self.data_width.unwrap_or(0.75);
        if !(data_width.is_finite() && data_width > 0.0) {
            return Err(err("data_width", format!("must be positive, got {data_width}")));
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(err("dt", format!("step size must be positive, got {dt}")));
            }
        }
        if let Some(t) = self.t_max {
            if !(t.is_finite() && t > 0.0) {
                return Err(err("tmax", format!("must be positive, got {t}")));
            }
        }
        let l_list = match &self.l_list {
            None => vec![l],
            Some(s) => parse_list(s, "L_list")?,
        };
        for &lv in &l_list {
            if !(lv.is_finite() && lv > 0.0) {
                return Err(err("L_list", format!("stretching length must be positive, got {lv}")));
            }
        }
        let alpha_list = match &self.alpha_list {
            None => vec![alpha],
            Some(s) => parse_list(s, "alpha_list")?,
        };
        for &a in &alpha_list {
            if a == 0 {
                return Err(err("alpha_list", "alpha = 0 is the no-mixing degenerate mode"));
            }
        }
        let sweep_cap = self.sweep_cap.unwrap_or(256);
        let tuples = l_list.len() * alpha_list.len() * nu_list.len();
        if tuples > sweep_cap {
            return Err(err(
                "sweep_cap",
                format!("sweep would run {tuples} tuples, cap is {sweep_cap}"),
            ));
        }
        Ok(RunConfig {
            profile,
            l,
            k_order,
            table_path: self.table_path,
            alpha,
            nu_list,
            n,
            y_half,
            window,
            delta_g,
            k_list,
            data_width,
            dt: self.dt,
            t_max: self.t_max,
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
            l_list,
            alpha_list,
            sweep_cap,
            y_explicit,
        })
    }
}

impl RunConfig {
    pub fn build_profile(&self) -> Result<ShearProfile, shearflow_core::CoreError> {
        match self.profile {
            ProfileKind::Tanh => make_tanh_profile(self.l),
            ProfileKind::Algebraic => make_algebraic_profile(self.l, self.k_order),
            ProfileKind::Table => {
                let path = self.table_path.as_ref().expect("validated");
                let text = std::fs::read_to_string(path).map_err(|e| {
                    shearflow_core::CoreError::TableFormat(format!(
                        "cannot read {}: {e}",
                        path.display()
                    ))
                })?;
                parse_table_profile(&text)
            }
        }
    }

    /// Canonical string used for hashing and reproducibility reporting.
    pub fn canonical(&self, subcommand: &str) -> String {
        let profile = match self.profile {
            ProfileKind::Tanh => "tanh",
            ProfileKind::Algebraic => "algebraic",
            ProfileKind::Table => "table",
        };
        format!(
            "cmd={subcommand};profile={profile};L={};k={};table={};alpha={};nu={:?};N={};Y={};\
             window={:?};delta_g={};k_list={:?};data_width={};dt={:?};tmax={:?}",
            self.l,
            self.k_order,
            self.table_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            self.alpha,
            self.nu_list,
            self.n,
            self.y_half,
            self.window,
            self.delta_g,
            self.k_list,
            self.data_width,
            self.dt,
            self.t_max,
        )
    }

    /// FNV-1a hash of the canonical config: the run id.
    pub fn run_id(&self, subcommand: &str) -> String {
        let mut hash: u64 = 0xcbf29ce484222325;
        for b in self.canonical(subcommand).bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
        format!("{hash:016x}")
    }
}
