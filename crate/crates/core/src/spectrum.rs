//! DFT prebeamforming codebook, per-user beam-gain spectra and the
//! thresholded dominant beam sets.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use rand::Rng;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::env::{draw_path_phases, steering_vector, Covariance, PathSet};
use crate::error::{Error, Result};
use crate::linalg::{cis, CMat, CVec, ZERO};

/// Unitary `M`-point DFT codebook. Column `i` is
/// `b_i[n] = exp(j 2π n i / M) / √M`, i.e. the ULA steering vector towards
/// `sin θ = 2i/M` (wrapped into [-1, 1)), normalized.
#[derive(Clone)]
pub struct DftCodebook {
    matrix: CMat,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for DftCodebook {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DftCodebook").field("m", &self.m()).finish()
    }
}

pub fn dft_codebook(m: usize) -> DftCodebook {
    assert!(m >= 1, "codebook size must be positive");
    let scale = 1.0 / (m as f64).sqrt();
    let matrix = CMat::from_fn(m, m, |n, i| {
        // reduce n*i mod m first so the phase stays exact for large m
        let k = (n * i) % m;
        cis(2.0 * std::f64::consts::PI * k as f64 / m as f64) * scale
    });
    let fft = FftPlanner::new().plan_fft_forward(m);
    DftCodebook { matrix, fft }
}

impl DftCodebook {
    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn beam(&self, i: usize) -> CVec {
        self.matrix.column(i).into_owned()
    }

    /// `sin θ` at which beam `i` peaks.
    pub fn pointing_sin(&self, i: usize) -> f64 {
        let s = 2.0 * i as f64 / self.m() as f64;
        if s >= 1.0 {
            s - 2.0
        } else {
            s
        }
    }

    /// `F^H v`, evaluated with an FFT.
    pub fn to_beam_domain(&self, v: &CVec) -> CVec {
        assert_eq!(v.len(), self.m());
        let mut buf: Vec<_> = v.iter().copied().collect();
        self.fft.process(&mut buf);
        let scale = 1.0 / (self.m() as f64).sqrt();
        CVec::from_iterator(self.m(), buf.into_iter().map(|z| z * scale))
    }

    /// `F v`, mapping beam-domain coefficients back to antennas.
    pub fn to_antenna_domain(&self, v: &CVec) -> CVec {
        &self.matrix * v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamGains {
    pub user_index: usize,
    /// `λ(i) = |b_i^H R b_i|²`.
    pub gains: Vec<f64>,
}

impl BeamGains {
    pub fn max(&self) -> f64 {
        self.gains.iter().copied().fold(0.0, f64::max)
    }

    /// Gains divided by `reference`, used for thresholds relative to the
    /// strongest beam of a drop.
    pub fn normalized(&self, reference: f64) -> BeamGains {
        BeamGains {
            user_index: self.user_index,
            gains: self.gains.iter().map(|g| g / reference).collect(),
        }
    }
}

pub fn beam_gains(r: &Covariance, f: &DftCodebook, user_index: usize) -> Result<BeamGains> {
    if r.dim() != f.m() {
        return Err(Error::Dimension {
            expected: f.m(),
            actual: r.dim(),
        });
    }
    let rf = r.matrix() * f.matrix();
    let gains = (0..f.m())
        .map(|i| f.matrix().column(i).dotc(&rf.column(i)).norm_sqr())
        .collect();
    Ok(BeamGains { user_index, gains })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominantSupport {
    pub user_index: usize,
    pub mask: Vec<bool>,
    /// Ascending beam indices with `mask[i]`.
    pub beams: Vec<usize>,
}

impl DominantSupport {
    pub fn from_beams(user_index: usize, beams: &[usize], m: usize) -> Result<Self> {
        let mut mask = vec![false; m];
        for &b in beams {
            if b >= m {
                return Err(Error::arg(format!("beam {b} out of range for M = {m}")));
            }
            mask[b] = true;
        }
        Ok(Self::from_mask(user_index, mask))
    }

    pub fn from_mask(user_index: usize, mask: Vec<bool>) -> Self {
        let beams = mask.iter().enumerate().filter(|(_, &g)| g).map(|(i, _)| i).collect();
        Self {
            user_index,
            mask,
            beams,
        }
    }

    pub fn m(&self) -> usize {
        self.mask.len()
    }

    /// `M_k`.
    pub fn m_k(&self) -> usize {
        self.beams.len()
    }

    /// A user that detects no beam cannot be trained this drop.
    pub fn is_trainable(&self) -> bool {
        !self.beams.is_empty()
    }

    pub fn contains(&self, beam: usize) -> bool {
        self.mask.get(beam).copied().unwrap_or(false)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Beams whose gain reaches `10^(δ/10)`. `δ = -∞` selects everything.
pub fn dominant_support(g: &BeamGains, delta_db: f64) -> DominantSupport {
    let threshold = db_to_linear(delta_db);
    DominantSupport::from_mask(g.user_index, g.gains.iter().map(|&l| l >= threshold).collect())
}

/// Low-rank beam-domain view of one user's channel.
///
/// Column `p` of `factor` is `|α_p| F^H a(θ_p)`, so the beam-domain
/// covariance is `F^H R F = U U^H` and a fading block is `U e^{jφ}`. Every
/// quantity the simulator needs per block is a cheap product with `U`, which
/// keeps `M = 400` runs tractable.
#[derive(Debug, Clone)]
pub struct BeamDomainChannel {
    pub user_index: usize,
    factor: CMat,
}

impl BeamDomainChannel {
    pub fn from_paths(paths: &PathSet, f: &DftCodebook) -> Self {
        let m = f.m();
        let mut factor = CMat::from_element(m, paths.paths.len(), ZERO);
        for (p, path) in paths.paths.iter().enumerate() {
            let col = f.to_beam_domain(&steering_vector(path.aod, m)) * Complex64::from(path.gain_mag);
            factor.set_column(p, &col);
        }
        Self {
            user_index: paths.user_index,
            factor,
        }
    }

    pub fn factor(&self) -> &CMat {
        &self.factor
    }

    pub fn m(&self) -> usize {
        self.factor.nrows()
    }

    pub fn n_paths(&self) -> usize {
        self.factor.ncols()
    }

    /// `b_i^H R b_i` for every beam.
    pub fn beam_powers(&self) -> Vec<f64> {
        self.factor.row_iter().map(|row| row.norm_squared()).collect()
    }

    pub fn beam_gains(&self) -> BeamGains {
        BeamGains {
            user_index: self.user_index,
            gains: self.beam_powers().into_iter().map(|q| q * q).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.factor.norm_squared()
    }

    /// `F^H R F`, dense.
    pub fn effective_covariance(&self) -> CMat {
        &self.factor * self.factor.adjoint()
    }

    pub fn realize(&self, phases: &[f64]) -> CVec {
        assert_eq!(phases.len(), self.n_paths());
        let z = CVec::from_iterator(phases.len(), phases.iter().map(|&p| cis(p)));
        &self.factor * z
    }

    /// Effective channel `F^H h` for one block. Consumes the generator
    /// exactly like [`crate::env::realize_channel`].
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        self.realize(&draw_path_phases(self.n_paths(), rng))
    }
}

/// Debug dump, one row per (user, beam): `user,beam,lambda,g`.
pub fn write_spectrum_csv<W: Write>(
    mut w: W,
    gains: &[BeamGains],
    supports: &[DominantSupport],
) -> io::Result<()> {
    writeln!(w, "user,beam,lambda,g")?;
    for (g, s) in gains.iter().zip(supports) {
        for (i, l) in g.gains.iter().enumerate() {
            writeln!(w, "{},{},{:.8e},{}", g.user_index, i, l, u8::from(s.contains(i)))?;
        }
    }
    Ok(())
}
