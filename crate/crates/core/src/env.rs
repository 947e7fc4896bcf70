//! Random single-bounce scattering geometry and the resulting per-user
//! channel statistics.
//!
//! Users and scatterers are dropped uniformly in a square. The base station
//! carries a half-wavelength ULA. Every user sees one single-bounce path per
//! scatterer plus the direct path, so `n_s + 1` paths in total.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{cis, trace_re, CMat, CVec, ZERO};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Point = [f64; 2];

/// Where the array sits on the deployment square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsPlacement {
    /// Midpoint of the bottom edge, broadside pointing into the square.
    EdgeMidpoint,
    /// Bottom-left corner, broadside along the diagonal.
    Corner,
}

impl BsPlacement {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "edge" | "edge_midpoint" => Ok(Self::EdgeMidpoint),
            "corner" => Ok(Self::Corner),
            other => Err(Error::config(format!("unknown bs_placement `{other}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::EdgeMidpoint => "edge",
            Self::Corner => "corner",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    /// Side of the square deployment region, meters.
    pub area_side: f64,
    pub n_ms: usize,
    pub n_s: usize,
    /// Break-point distance of the path-loss law, meters.
    pub epsilon: f64,
    /// Path-loss exponent.
    pub gamma: f64,
    /// Reflector attenuation in (0, 1].
    pub beta: f64,
    pub m_antennas: usize,
    /// Power reference folded into every path gain. Kept at 1 so that
    /// transmit powers are applied only by the training and data stages.
    pub p_ref: f64,
    pub bs_placement: BsPlacement,
}

impl Default for EnvConfig {
    /// 0.5 km² square, 100 users, 50 scatterers, 400 antennas.
    fn default() -> Self {
        Self {
            area_side: 0.5e6f64.sqrt(),
            n_ms: 100,
            n_s: 50,
            epsilon: 10.0,
            gamma: 2.5,
            beta: 0.7,
            m_antennas: 400,
            p_ref: 1.0,
            bs_placement: BsPlacement::EdgeMidpoint,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::config(m.to_string()));
        if self.n_ms < 1 {
            return fail("n_ms must be at least 1");
        }
        if self.m_antennas < 2 {
            return fail("m_antennas must be at least 2");
        }
        if !(self.area_side > 0.0 && self.area_side.is_finite()) {
            return fail("area_side must be positive");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return fail("epsilon must be positive");
        }
        if self.gamma.is_nan() || self.gamma <= 0.0 {
            return fail("gamma must be positive");
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return fail("beta must lie in (0, 1]");
        }
        if !(self.p_ref > 0.0 && self.p_ref.is_finite()) {
            return fail("p_ref must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub area_side: f64,
    pub bs_placement: BsPlacement,
    pub bs_position: Point,
    pub ms_positions: Vec<Point>,
    pub scatterer_positions: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    /// Linear amplitude |α|.
    pub gain_mag: f64,
    /// Angle of departure from broadside, radians in [-π/2, π/2).
    pub aod: f64,
    /// Propagation delay, seconds.
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub user_index: usize,
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain_mag * p.gain_mag).sum()
    }
}

/// Channel covariance `R = Σ |α|² a(θ) a(θ)^H` of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance(pub CMat);

impl Covariance {
    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.0)
    }
}

/// One fading-block channel vector in the antenna domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization(pub CVec);

impl ChannelRealization {
    pub fn vector(&self) -> &CVec {
        &self.0
    }
}

pub fn generate_environment<R: Rng + ?Sized>(cfg: &EnvConfig, rng: &mut R) -> Environment {
    debug_assert!(cfg.validate().is_ok());
    let side = cfg.area_side;
    let draw = |rng: &mut R| -> Point { [rng.random::<f64>() * side, rng.random::<f64>() * side] };
    let ms_positions = (0..cfg.n_ms).map(|_| draw(rng)).collect();
    let scatterer_positions = (0..cfg.n_s).map(|_| draw(rng)).collect();
    let bs_position = match cfg.bs_placement {
        BsPlacement::EdgeMidpoint => [side / 2.0, 0.0],
        BsPlacement::Corner => [0.0, 0.0],
    };
    Environment {
        area_side: side,
        bs_placement: cfg.bs_placement,
        bs_position,
        ms_positions,
        scatterer_positions,
    }
}

/// `L(d) = (1 + d/ε)^γ`.
pub fn path_loss(d: f64, epsilon: f64, gamma: f64) -> Result<f64> {
    if d < 0.0 || d.is_nan() {
        return Err(Error::arg(format!("distance must be non-negative, got {d}")));
    }
    Ok((1.0 + d / epsilon).powf(gamma))
}

fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn wrap_half_plane(theta: f64) -> f64 {
    // sin is the only thing the ULA sees; π/2 and -π/2 give identical
    // steering vectors at half-wavelength spacing.
    if theta >= FRAC_PI_2 {
        theta - PI
    } else {
        theta
    }
}

impl Environment {
    /// AoD of the ray from the array towards `p`, relative to broadside.
    pub fn departure_angle(&self, p: Point) -> f64 {
        let dx = p[0] - self.bs_position[0];
        let dy = p[1] - self.bs_position[1];
        let theta = match self.bs_placement {
            BsPlacement::EdgeMidpoint => dx.atan2(dy),
            BsPlacement::Corner => dx.atan2(dy) - FRAC_PI_4,
        };
        wrap_half_plane(theta)
    }

    pub fn n_ms(&self) -> usize {
        self.ms_positions.len()
    }

    /// Plain-text drop file: `BS`, `MS` and `SCATTERER` sections with one
    /// `x y` pair per line.
    pub fn to_drop_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# area_side {} placement {}", self.area_side, self.bs_placement.as_str());
        let _ = writeln!(out, "BS");
        let _ = writeln!(out, "{} {}", self.bs_position[0], self.bs_position[1]);
        let _ = writeln!(out, "MS");
        for p in &self.ms_positions {
            let _ = writeln!(out, "{} {}", p[0], p[1]);
        }
        let _ = writeln!(out, "SCATTERER");
        for p in &self.scatterer_positions {
            let _ = writeln!(out, "{} {}", p[0], p[1]);
        }
        out
    }

    pub fn from_drop_text(text: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Bs,
            Ms,
            Scatterer,
        }
        let mut section = Section::None;
        let mut area_side = None;
        let mut placement = BsPlacement::EdgeMidpoint;
        let mut bs = None;
        let mut ms = Vec::new();
        let mut sc = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                let toks: Vec<&str> = comment.split_whitespace().collect();
                if let ["area_side", v, "placement", p] = toks.as_slice() {
                    area_side = Some(v.parse::<f64>().map_err(|e| Error::Parse {
                        line: line_no,
                        msg: e.to_string(),
                    })?);
                    placement = BsPlacement::parse(p)?;
                }
                continue;
            }
            match line {
                "" => continue,
                "BS" => section = Section::Bs,
                "MS" => section = Section::Ms,
                "SCATTERER" => section = Section::Scatterer,
                _ => {
                    let nums: Vec<f64> = line
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e: std::num::ParseFloatError| Error::Parse {
                            line: line_no,
                            msg: e.to_string(),
                        })?;
                    let [x, y] = nums[..] else {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "expected two coordinates".into(),
                        });
                    };
                    match section {
                        Section::None => {
                            return Err(Error::Parse {
                                line: line_no,
                                msg: "coordinates before any section header".into(),
                            })
                        }
                        Section::Bs if bs.is_some() => {
                            return Err(Error::Parse {
                                line: line_no,
                                msg: "more than one BS position".into(),
                            })
                        }
                        Section::Bs => bs = Some([x, y]),
                        Section::Ms => ms.push([x, y]),
                        Section::Scatterer => sc.push([x, y]),
                    }
                }
            }
        }
        let bs_position = bs.ok_or(Error::Parse {
            line: 0,
            msg: "missing BS section".into(),
        })?;
        let area_side = area_side.unwrap_or_else(|| {
            ms.iter()
                .chain(sc.iter())
                .chain(std::iter::once(&bs_position))
                .flat_map(|p| p.iter().copied())
                .fold(0.0, f64::max)
        });
        Ok(Environment {
            area_side,
            bs_placement: placement,
            bs_position,
            ms_positions: ms,
            scatterer_positions: sc,
        })
    }
}

/// Single-bounce paths (one per scatterer) followed by the direct path.
pub fn derive_paths(env: &Environment, k: usize, cfg: &EnvConfig) -> Result<PathSet> {
    let ms = *env
        .ms_positions
        .get(k)
        .ok_or_else(|| Error::arg(format!("user index {k} out of range")))?;
    let loss = |d: f64| path_loss(d, cfg.epsilon, cfg.gamma);
    let mut paths = Vec::with_capacity(env.scatterer_positions.len() + 1);
    for &sc in &env.scatterer_positions {
        let d_p = distance(env.bs_position, sc);
        let d_pk = distance(sc, ms);
        paths.push(Path {
            gain_mag: (cfg.p_ref / (cfg.beta * loss(d_p)? * loss(d_pk)?)).sqrt(),
            aod: env.departure_angle(sc),
            delay: (d_p + d_pk) / SPEED_OF_LIGHT,
        });
    }
    let d_k = distance(env.bs_position, ms);
    paths.push(Path {
        gain_mag: (cfg.p_ref / loss(d_k)?).sqrt(),
        aod: env.departure_angle(ms),
        delay: d_k / SPEED_OF_LIGHT,
    });
    Ok(PathSet { user_index: k, paths })
}

/// Half-wavelength ULA response, entry `i` is `exp(jπ i sinθ)`.
pub fn steering_vector(theta: f64, m: usize) -> CVec {
    let s = PI * theta.sin();
    CVec::from_iterator(m, (0..m).map(|i| cis(s * i as f64)))
}

pub fn covariance(paths: &PathSet, m: usize) -> Covariance {
    let mut r = CMat::from_element(m, m, ZERO);
    for p in &paths.paths {
        let a = steering_vector(p.aod, m);
        r.gerc((p.gain_mag * p.gain_mag).into(), &a, &a, 1.0.into());
    }
    Covariance(r)
}

/// Draws the per-path phases of one fading block.
pub fn draw_path_phases<R: Rng + ?Sized>(n_paths: usize, rng: &mut R) -> Vec<f64> {
    (0..n_paths).map(|_| rng.random::<f64>() * 2.0 * PI).collect()
}

/// `h = Σ |α| e^{jφ} a(θ)` with one uniform phase per path per block.
pub fn realize_channel<R: Rng + ?Sized>(paths: &PathSet, m: usize, rng: &mut R) -> ChannelRealization {
    let phases = draw_path_phases(paths.paths.len(), rng);
    let mut h = CVec::from_element(m, ZERO);
    for (p, &phi) in paths.paths.iter().zip(&phases) {
        h.axpy(cis(phi) * p.gain_mag, &steering_vector(p.aod, m), 1.0.into());
    }
    ChannelRealization(h)
}
