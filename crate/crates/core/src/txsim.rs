//! RZF precoding from the fed-back effective-channel estimates, per-user
//! SINR and the overhead-aware achievable rate.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{solve_hpd, CMat, CVec};
use crate::spectrum::DftCodebook;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    Two,
    E,
}

impl LogBase {
    pub fn log1p(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.ln_1p() / std::f64::consts::LN_2,
            LogBase::E => x.ln_1p(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "2" => Ok(LogBase::Two),
            "e" => Ok(LogBase::E),
            other => Err(Error::config(format!("log_base must be `2` or `e`, got `{other}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LogBase::Two => "2",
            LogBase::E => "e",
        }
    }
}

/// How `K` is formed from `Ĥ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RzfMode {
    /// `K = (Ĥ Ĥ^H + σ² I)^{-1}`.
    Regularized,
    /// `K = Ĥ Ĥ^H + σ² I`, kept for sensitivity runs.
    NoInverse,
}

/// `P = η K Ĥ`.
///
/// Only `K Ĥ` is stored. In the regularized mode it is evaluated as
/// `Ĥ (Ĥ^H Ĥ + σ² I_N)^{-1}`, an `N × N` solve instead of `M × M`.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    h_hat: CMat,
    k_h_hat: CMat,
    eta: f64,
    mode: RzfMode,
}

pub fn rzf_precoder(h_hats: &[CVec], sigma2: f64, mode: RzfMode) -> Result<PrecoderSet> {
    let n = h_hats.len();
    if n == 0 {
        return Err(Error::arg("precoder needs at least one user"));
    }
    let m = h_hats[0].len();
    if let Some(bad) = h_hats.iter().find(|h| h.len() != m) {
        return Err(Error::Dimension {
            expected: m,
            actual: bad.len(),
        });
    }
    let h_hat = CMat::from_columns(h_hats);
    if h_hat.iter().all(|z| *z == Complex64::from(0.0)) {
        return Err(if sigma2 == 0.0 {
            Error::Singular("all-zero channel estimates with zero regularization")
        } else {
            Error::arg("all channel estimates are zero")
        });
    }
    let mut gram = h_hat.adjoint() * &h_hat;
    for i in 0..n {
        gram[(i, i)] += sigma2;
    }
    let k_h_hat = match mode {
        RzfMode::Regularized => solve_hpd(&gram, &h_hat.adjoint())?.adjoint(),
        RzfMode::NoInverse => &h_hat * gram,
    };
    let power = k_h_hat.norm_squared();
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::Singular("precoder has no usable power"));
    }
    let eta = (n as f64 / power).sqrt();
    Ok(PrecoderSet {
        h_hat,
        k_h_hat,
        eta,
        mode,
    })
}

impl PrecoderSet {
    pub fn n_users(&self) -> usize {
        self.h_hat.ncols()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn h_hat(&self) -> &CMat {
        &self.h_hat
    }

    /// `K Ĥ`, column `k` is `K ĥ_k`.
    pub fn k_h_hat(&self) -> &CMat {
        &self.k_h_hat
    }

    /// Columns `p_k = η K ĥ_k`.
    pub fn precoders(&self) -> CMat {
        &self.k_h_hat * Complex64::from(self.eta)
    }

    /// Dense `M × M` `K`.
    pub fn k_matrix(&self, sigma2: f64) -> Result<CMat> {
        let m = self.h_hat.nrows();
        let mut k = &self.h_hat * self.h_hat.adjoint();
        for i in 0..m {
            k[(i, i)] += sigma2;
        }
        match self.mode {
            RzfMode::NoInverse => Ok(k),
            RzfMode::Regularized => k.try_inverse().ok_or(Error::Singular("K is not invertible")),
        }
    }

    /// `η² tr{Ĥ^H K^H F^H F K Ĥ}`; equals `N` by construction.
    pub fn normalization(&self, f: &DftCodebook) -> f64 {
        let fk = f.matrix() * &self.k_h_hat;
        self.eta * self.eta * fk.norm_squared()
    }
}

/// Per-user SINR of one fading block.
///
/// `effective[k]` is `F^H h_k` for the realized channel, `h_hats[k]` the
/// embedded estimate the precoder was built from. The estimation-error term
/// uses `ê_k = F^H h_k − ĥ_k`; the interference term uses the true channel.
pub fn sinr(
    effective: &[CVec],
    h_hats: &[CVec],
    precoder: &PrecoderSet,
    p_data: f64,
    sigma2: f64,
) -> Result<Vec<f64>> {
    let n = precoder.n_users();
    if effective.len() != n || h_hats.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: effective.len().min(h_hats.len()),
        });
    }
    let kh = precoder.k_h_hat();
    let scale = p_data / n as f64 * precoder.eta * precoder.eta;
    let eff = CMat::from_columns(effective);
    // cross[(k, k')] = (F^H h_k)^H K ĥ_k'
    let cross = eff.adjoint() * kh;
    let out = (0..n)
        .map(|k| {
            let signal = h_hats[k].dotc(&kh.column(k)).norm_sqr();
            let err_vec = &effective[k] - &h_hats[k];
            let error = err_vec.dotc(&kh.column(k)).norm_sqr();
            let interference: f64 = (0..n).filter(|&j| j != k).map(|j| cross[(k, j)].norm_sqr()).sum();
            let num = scale * signal;
            if num == 0.0 {
                0.0
            } else {
                num / (sigma2 + scale * (error + interference))
            }
        })
        .collect();
    Ok(out)
}

/// `(1 − b'/T) log(1 + SINR)`.
pub fn rate(sinr: f64, b_prime: usize, t_slots: usize, base: LogBase) -> Result<f64> {
    if b_prime > t_slots {
        return Err(Error::arg(format!("b' = {b_prime} exceeds T = {t_slots}")));
    }
    if sinr < 0.0 || sinr.is_nan() {
        return Err(Error::arg(format!("SINR must be non-negative, got {sinr}")));
    }
    let prelog = 1.0 - b_prime as f64 / t_slots as f64;
    Ok(prelog * base.log1p(sinr))
}

/// `P = (T − M)/(T − b') · P_Tx`: the data power that keeps the block
/// energy equal to the orthogonal baseline.
pub fn scale_power(p_tx: f64, t_slots: usize, m: usize, b_prime: usize) -> Result<f64> {
    if b_prime >= t_slots {
        return Err(Error::arg(format!(
            "b' = {b_prime} leaves no data slots in T = {t_slots}"
        )));
    }
    if m > t_slots {
        return Err(Error::arg(format!("M = {m} exceeds T = {t_slots}")));
    }
    Ok((t_slots - m) as f64 / (t_slots - b_prime) as f64 * p_tx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub sinr: Vec<f64>,
    pub rate: Vec<f64>,
    pub sum_rate: f64,
    pub b_prime: usize,
    pub p_data: f64,
    pub t_slots: usize,
}

impl RateReport {
    pub fn new(sinr: Vec<f64>, b_prime: usize, t_slots: usize, p_data: f64, base: LogBase) -> Result<Self> {
        let rate = sinr
            .iter()
            .map(|&s| rate(s, b_prime, t_slots, base))
            .collect::<Result<Vec<_>>>()?;
        let sum_rate = rate.iter().sum();
        Ok(Self {
            sinr,
            rate,
            sum_rate,
            b_prime,
            p_data,
            t_slots,
        })
    }
}
