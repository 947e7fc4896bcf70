use std::fs;
use std::path::{Path, PathBuf};

use crate::env::{BsPlacement, EnvConfig};
use crate::error::{Error, Result};
use crate::training::Scheme;
use crate::txsim::{LogBase, RzfMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TSlots {
    /// `T = 2M`.
    TwiceM,
    Fixed(usize),
}

impl TSlots {
    pub fn resolve(self, m: usize) -> usize {
        match self {
            TSlots::TwiceM => 2 * m,
            TSlots::Fixed(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Paper,
    Desk,
}

impl Preset {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::config(format!("unknown preset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    /// Strictly increasing thresholds, dB.
    pub delta_sweep_db: Vec<f64>,
    /// Thresholds are relative to the largest beam gain of each drop.
    pub delta_relative_to_max: bool,
    pub schemes: Vec<Scheme>,
    pub n_drops: usize,
    pub n_fading_blocks: usize,
    pub rho_tr_db: f64,
    pub p_tx_dbm: f64,
    pub sigma2_dbm: f64,
    pub t_slots: TSlots,
    pub log_base: LogBase,
    pub rzf_mode: RzfMode,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    /// Also write one geometry file per drop under `drops/`.
    pub write_drops: bool,
}

fn linspace_db(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

impl ExperimentConfig {
    /// Full-scale settings: 0.5 km², 100 users, 50 scatterers, M = 400,
    /// T = 2M, σ² = −94 dBm, P_Tx = 30 dBm, ρ_tr = 30 dB, absolute δ from
    /// −50 to −20 dB.
    pub fn paper() -> Self {
        Self {
            env: EnvConfig::default(),
            delta_sweep_db: linspace_db(-50.0, 2.0, -20.0),
            delta_relative_to_max: false,
            schemes: vec![Scheme::Orthogonal, Scheme::Graph],
            n_drops: 50,
            n_fading_blocks: 20,
            rho_tr_db: 30.0,
            p_tx_dbm: 30.0,
            sigma2_dbm: -94.0,
            t_slots: TSlots::TwiceM,
            log_base: LogBase::Two,
            rzf_mode: RzfMode::Regularized,
            output_dir: PathBuf::from("out"),
            master_seed: 1,
            write_drops: false,
        }
    }

    /// Desk-scale settings: M = 64, 20 users, 10 scatterers, T = 128, with
    /// thresholds relative to each drop's strongest beam.
    pub fn desk() -> Self {
        Self {
            env: EnvConfig {
                n_ms: 20,
                n_s: 10,
                m_antennas: 64,
                ..EnvConfig::default()
            },
            delta_sweep_db: linspace_db(-140.0, 5.0, -20.0),
            delta_relative_to_max: true,
            n_drops: 20,
            n_fading_blocks: 10,
            ..Self::paper()
        }
    }

    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Paper => Self::paper(),
            Preset::Desk => Self::desk(),
        }
    }

    pub fn m(&self) -> usize {
        self.env.m_antennas
    }

    pub fn t_slots(&self) -> usize {
        self.t_slots.resolve(self.m())
    }

    pub fn sigma2(&self) -> f64 {
        dbm_to_watts(self.sigma2_dbm)
    }

    pub fn p_tx(&self) -> f64 {
        dbm_to_watts(self.p_tx_dbm)
    }

    /// `P_tr = ρ_tr σ²`.
    pub fn p_tr(&self) -> f64 {
        10f64.powf(self.rho_tr_db / 10.0) * self.sigma2()
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if self.delta_sweep_db.is_empty() {
            return Err(Error::config("delta sweep is empty"));
        }
        if self.delta_sweep_db.iter().any(|d| d.is_nan()) {
            return Err(Error::config("delta sweep contains NaN"));
        }
        if self.delta_sweep_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("delta sweep must be strictly increasing"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("no schemes selected"));
        }
        if self.n_drops < 1 {
            return Err(Error::config("n_drops must be at least 1"));
        }
        if self.n_fading_blocks < 1 {
            return Err(Error::config("n_fading_blocks must be at least 1"));
        }
        if self.t_slots() <= self.m() {
            return Err(Error::config(format!(
                "T = {} must exceed M = {} so orthogonal training leaves data slots",
                self.t_slots(),
                self.m()
            )));
        }
        for (name, v) in [
            ("rho_tr_db", self.rho_tr_db),
            ("p_tx_dbm", self.p_tx_dbm),
            ("sigma2_dbm", self.sigma2_dbm),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::config(format!("`{key}`: cannot parse `{v}`")))
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(Error::config(format!("`{key}`: expected true/false, got `{v}`"))),
            }
        }
        match key {
            "area_side" => self.env.area_side = num(key, value)?,
            "n_ms" => self.env.n_ms = num(key, value)?,
            "n_s" => self.env.n_s = num(key, value)?,
            "epsilon" => self.env.epsilon = num(key, value)?,
            "gamma" => self.env.gamma = num(key, value)?,
            "beta" => self.env.beta = num(key, value)?,
            "m_antennas" => self.env.m_antennas = num(key, value)?,
            "p_ref" => self.env.p_ref = num(key, value)?,
            "bs_placement" => self.env.bs_placement = BsPlacement::parse(value)?,
            "delta_sweep_db" => self.delta_sweep_db = parse_delta_list(value)?,
            "delta_relative_to_max" => self.delta_relative_to_max = flag(key, value)?,
            "schemes" => self.schemes = parse_schemes(value)?,
            "n_drops" => self.n_drops = num(key, value)?,
            "n_fading_blocks" => self.n_fading_blocks = num(key, value)?,
            "rho_tr_db" => self.rho_tr_db = num(key, value)?,
            "p_tx_dbm" => self.p_tx_dbm = num(key, value)?,
            "sigma2_dbm" => self.sigma2_dbm = num(key, value)?,
            "t_slots" => {
                self.t_slots = match value {
                    "2M" | "2m" => TSlots::TwiceM,
                    v => TSlots::Fixed(num(key, v)?),
                }
            }
            "log_base" => self.log_base = LogBase::parse(value)?,
            "rzf_no_inverse" => {
                self.rzf_mode = if flag(key, value)? {
                    RzfMode::NoInverse
                } else {
                    RzfMode::Regularized
                }
            }
            "output_dir" => self.output_dir = PathBuf::from(value),
            "master_seed" => self.master_seed = num(key, value)?,
            "write_drops" => self.write_drops = flag(key, value)?,
            other => return Err(Error::config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses a flat `key = value` file on top of `base`. A `preset` key,
    /// if present, replaces `base` before the other keys apply.
    pub fn from_kv_text(text: &str, base: Preset) -> Result<Self> {
        let entries = parse_kv(text)?;
        let preset = match entries.iter().find(|(_, k, _)| k == "preset") {
            Some((_, _, v)) => Preset::parse(v)?,
            None => base,
        };
        let mut cfg = Self::preset(preset);
        for (line, k, v) in entries.iter().filter(|(_, k, _)| k != "preset") {
            cfg.set(k, v).map_err(|e| match e {
                Error::Config(msg) => Error::Parse { line: *line, msg },
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path, base: Preset) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv_text(&text, base)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

fn parse_kv(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            });
        };
        out.push((idx + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Comma-separated values, or `start:step:stop` inclusive.
pub fn parse_delta_list(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::config(format!("cannot parse delta list `{s}`"));
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        if v[1].is_nan() || v[1] <= 0.0 || v[2] < v[0] {
            return Err(bad());
        }
        return Ok(linspace_db(v[0], v[1], v[2]));
    }
    s.split(',')
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|_| bad()))
        .collect()
}

pub fn parse_schemes(s: &str) -> Result<Vec<Scheme>> {
    if s == "both" {
        return Ok(vec![Scheme::Orthogonal, Scheme::Graph]);
    }
    let mut v = s
        .split(',')
        .map(|p| Scheme::parse(p.trim()))
        .collect::<Result<Vec<_>>>()?;
    v.sort();
    v.dedup();
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_preset_values() {
        let c = ExperimentConfig::paper();
        assert_eq!(c.env.n_ms, 100);
        assert_eq!(c.env.n_s, 50);
        assert_eq!(c.m(), 400);
        assert_eq!(c.t_slots(), 800);
        assert_eq!(c.env.gamma, 2.5);
        assert_eq!(c.env.beta, 0.7);
        assert!((c.env.area_side * c.env.area_side - 0.5e6).abs() < 1e-6);
        assert_eq!(c.rho_tr_db, 30.0);
        assert_eq!(c.p_tx_dbm, 30.0);
        assert_eq!(c.sigma2_dbm, -94.0);
        assert_eq!(c.delta_sweep_db.first(), Some(&-50.0));
        assert_eq!(c.delta_sweep_db.last(), Some(&-20.0));
        c.validate().unwrap();
    }

    #[test]
    fn desk_preset_values() {
        let c = ExperimentConfig::desk();
        assert_eq!((c.m(), c.env.n_ms, c.env.n_s, c.t_slots()), (64, 20, 10, 128));
        assert_eq!((c.n_drops, c.n_fading_blocks), (20, 10));
        c.validate().unwrap();
    }

    #[test]
    fn training_power_from_snr() {
        // ρ_tr = 30 dB at σ² = −94 dBm gives P_tr = −64 dBm
        let c = ExperimentConfig::paper();
        assert!((c.p_tr() / dbm_to_watts(-64.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kv_file_overrides_preset() {
        let text = "# comment\npreset = desk\nn_drops = 3  # trailing\nschemes = graph\ndelta_sweep_db = -40:10:-20\nt_slots = 200\n";
        let c = ExperimentConfig::from_kv_text(text, Preset::Paper).unwrap();
        assert_eq!(c.m(), 64);
        assert_eq!(c.n_drops, 3);
        assert_eq!(c.schemes, vec![Scheme::Graph]);
        assert_eq!(c.delta_sweep_db, vec![-40.0, -30.0, -20.0]);
        assert_eq!(c.t_slots(), 200);
    }

    #[test]
    fn kv_errors_carry_line_numbers() {
        let err = ExperimentConfig::from_kv_text("n_drops = 2\nbogus = 1\n", Preset::Desk).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = ExperimentConfig::from_kv_text("just words\n", Preset::Desk).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn validation_rejects_bad_sweeps() {
        let mut c = ExperimentConfig::desk();
        c.delta_sweep_db.clear();
        assert!(c.validate().is_err());
        c.delta_sweep_db = vec![-10.0, -20.0];
        assert!(c.validate().is_err());
        c.delta_sweep_db = vec![-10.0];
        c.schemes.clear();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::desk();
        c.t_slots = TSlots::Fixed(64);
        assert!(c.validate().is_err());
    }

    #[test]
    fn delta_list_forms() {
        assert_eq!(parse_delta_list("-30, -20,-10").unwrap(), vec![-30.0, -20.0, -10.0]);
        assert_eq!(parse_delta_list("-30:5:-20").unwrap(), vec![-30.0, -25.0, -20.0]);
        assert!(parse_delta_list("x").is_err());
        assert!(parse_delta_list("-20:0:-10").is_err());
    }
}
