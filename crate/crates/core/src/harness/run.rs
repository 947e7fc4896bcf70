use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::env::{derive_paths, generate_environment, Environment};
use crate::error::{Error, Result};
use crate::graph::{greedy_color, ConflictGraph};
use crate::harness::config::ExperimentConfig;
use crate::harness::output::emit_csv;
use crate::linalg::{complex_normal, CVec};
use crate::rng::substream;
use crate::spectrum::{dft_codebook, dominant_support, BeamDomainChannel, DftCodebook, DominantSupport};
use crate::training::{embed_estimate, observe, Scheme, TrainingPlan, UserEstimator};
use crate::txsim::{rate, rzf_precoder, scale_power, sinr};

const TAG_GEOMETRY: u64 = 0;
const TAG_BLOCK: u64 = 1;

/// Per-user outcome of one (drop, δ, scheme) cell, averaged over the
/// drop's fading blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRecord {
    pub drop_id: usize,
    pub user: usize,
    pub trainable: bool,
    pub m_k: usize,
    pub j_analytic: f64,
    pub j_empirical: f64,
    pub tr_r_prime: f64,
    /// Mean linear SINR over blocks.
    pub sinr: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropCell {
    pub scheme: Scheme,
    pub delta_db: f64,
    pub b_prime: usize,
    pub overhead: f64,
    pub mean_beams: f64,
    pub untrainable: usize,
    pub p_data: f64,
    /// Mean over users of `‖F^H h − ĥ‖²` (all users, all blocks).
    pub eff_mse: f64,
    /// Closed form of the same quantity: `J_k + tr R − tr R'_k`.
    pub eff_mse_analytic: f64,
    /// Mean over blocks of the sum of user rates.
    pub sum_rate: f64,
    pub users: Vec<UserRecord>,
}

impl DropCell {
    fn trainable(&self) -> impl Iterator<Item = &UserRecord> {
        self.users.iter().filter(|u| u.trainable)
    }

    pub fn mean_j_analytic(&self) -> Option<f64> {
        mean_of(self.trainable().map(|u| u.j_analytic))
    }

    pub fn mean_j_empirical(&self) -> Option<f64> {
        mean_of(self.trainable().map(|u| u.j_empirical))
    }

    pub fn mean_tr_r_prime(&self) -> Option<f64> {
        mean_of(self.trainable().map(|u| u.tr_r_prime))
    }
}

fn mean_of(it: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropOutcome {
    pub drop_id: usize,
    /// Indexed `[delta_index * n_schemes + scheme_index]`.
    pub cells: Vec<DropCell>,
}

pub const QUANTILES: [f64; 5] = [0.10, 0.25, 0.50, 0.75, 0.90];

/// Aggregate over all drops of one (δ, scheme) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub scheme: Scheme,
    pub delta_db: f64,
    pub mean_b_prime: f64,
    pub mean_overhead: f64,
    pub mean_beams: f64,
    pub untrainable_users: usize,
    /// `n_drops × n_fading_blocks`.
    pub samples: usize,
    pub j_analytic: f64,
    pub j_empirical: f64,
    pub j_empirical_ci95: f64,
    pub tr_r_prime: f64,
    pub eff_mse: f64,
    pub eff_mse_ci95: f64,
    pub eff_mse_analytic: f64,
    pub sum_rate: f64,
    pub sum_rate_ci95: f64,
    pub mean_p_data: f64,
    pub rate_quantiles: [f64; 5],
    pub rate_quantile_se: [f64; 5],
    /// Per-user rates of trainable users pooled over drops, ascending,
    /// tagged with (drop, user).
    pub pooled_rates: Vec<(f64, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub m: usize,
    pub n_ms: usize,
    pub n_drops: usize,
    pub n_fading_blocks: usize,
    pub deltas: Vec<f64>,
    pub schemes: Vec<Scheme>,
    /// Indexed like [`DropOutcome::cells`].
    pub cells: Vec<SweepCell>,
    pub drops: Vec<DropOutcome>,
}

impl SweepResult {
    fn scheme_index(&self, scheme: Scheme) -> Option<usize> {
        self.schemes.iter().position(|&s| s == scheme)
    }

    pub fn cell(&self, scheme: Scheme, delta_index: usize) -> Option<&SweepCell> {
        let s = self.scheme_index(scheme)?;
        self.cells.get(delta_index * self.schemes.len() + s)
    }

    /// Cells of one scheme in sweep order.
    pub fn series(&self, scheme: Scheme) -> Vec<&SweepCell> {
        (0..self.deltas.len()).filter_map(|d| self.cell(scheme, d)).collect()
    }

    /// Sweep index with the largest mean sum-rate (first on ties).
    pub fn best_delta_index(&self, scheme: Scheme) -> Option<usize> {
        let series = self.series(scheme);
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in series.iter().enumerate() {
            if best.map_or(true, |(_, v)| c.sum_rate > v) {
                best = Some((i, c.sum_rate));
            }
        }
        best.map(|(i, _)| i)
    }
}

struct CellSetup {
    plan: TrainingPlan,
    supports: Vec<DominantSupport>,
    estimators: Vec<Option<UserEstimator>>,
    p_data: f64,
}

#[derive(Default, Clone)]
struct UserAcc {
    j_emp: f64,
    eff_err: f64,
    sinr: f64,
    rate: f64,
}

/// Geometry of drop `drop_id`.
pub fn drop_environment(cfg: &ExperimentConfig, drop_id: usize) -> Environment {
    let mut rng = substream(cfg.master_seed, &[drop_id as u64, TAG_GEOMETRY]);
    generate_environment(&cfg.env, &mut rng)
}

/// Runs one drop through every (δ, scheme) cell.
///
/// Channel phases and noise are drawn once per fading block and shared by
/// all cells, so threshold and scheme comparisons use common random
/// numbers. The noise sample on beam `b` of user `k` is the same whichever
/// slot `b` is trained in.
pub fn simulate_drop(cfg: &ExperimentConfig, f: &DftCodebook, drop_id: usize) -> Result<DropOutcome> {
    let m = cfg.m();
    let n_ms = cfg.env.n_ms;
    let t_slots = cfg.t_slots();
    let p_tr = cfg.p_tr();
    let sigma2 = cfg.sigma2();

    let env = drop_environment(cfg, drop_id);
    let channels = (0..n_ms)
        .map(|k| Ok(BeamDomainChannel::from_paths(&derive_paths(&env, k, &cfg.env)?, f)))
        .collect::<Result<Vec<_>>>()?;
    let traces: Vec<f64> = channels.iter().map(|c| c.trace()).collect();
    let mut gains: Vec<_> = channels.iter().map(|c| c.beam_gains()).collect();
    if cfg.delta_relative_to_max {
        let reference = gains.iter().map(|g| g.max()).fold(0.0, f64::max);
        if reference > 0.0 {
            gains = gains.iter().map(|g| g.normalized(reference)).collect();
        }
    }

    let mut setups = Vec::with_capacity(cfg.delta_sweep_db.len() * cfg.schemes.len());
    for &delta in &cfg.delta_sweep_db {
        let supports: Vec<DominantSupport> = gains.iter().map(|g| dominant_support(g, delta)).collect();
        let graph = ConflictGraph::from_supports(&supports, m)?;
        let coloring = greedy_color(&graph);
        for &scheme in &cfg.schemes {
            let plan = match scheme {
                Scheme::Orthogonal => TrainingPlan::orthogonal(&supports, m),
                Scheme::Graph => TrainingPlan::graph(&graph, &coloring, &supports)?,
            };
            let estimators = plan
                .users
                .iter()
                .map(|u| {
                    u.is_trainable()
                        .then(|| UserEstimator::new(&channels[u.user_index], u, p_tr, sigma2))
                        .transpose()
                })
                .collect::<Result<Vec<_>>>()?;
            let p_data = scale_power(cfg.p_tx(), t_slots, m, plan.b_prime)?;
            setups.push(CellSetup {
                plan,
                supports: supports.clone(),
                estimators,
                p_data,
            });
        }
    }

    let mut acc = vec![vec![UserAcc::default(); n_ms]; setups.len()];
    let mut sum_rates = vec![0.0; setups.len()];
    for block in 0..cfg.n_fading_blocks {
        let mut rng = substream(cfg.master_seed, &[drop_id as u64, TAG_BLOCK, block as u64]);
        let effective: Vec<CVec> = channels.iter().map(|c| c.draw(&mut rng)).collect();
        let noise: Vec<Vec<_>> = (0..n_ms)
            .map(|_| (0..m).map(|_| complex_normal(&mut rng)).collect())
            .collect();
        for (ci, setup) in setups.iter().enumerate() {
            sum_rates[ci] += evaluate_block(cfg, setup, &effective, &noise, &mut acc[ci])?;
        }
    }

    let blocks = cfg.n_fading_blocks as f64;
    let cells = setups
        .iter()
        .zip(acc)
        .zip(sum_rates)
        .enumerate()
        .map(|(ci, ((setup, acc), sum_rate))| {
            let delta_db = cfg.delta_sweep_db[ci / cfg.schemes.len()];
            let users: Vec<UserRecord> = (0..n_ms)
                .map(|k| {
                    let (j_analytic, tr_r_prime) = setup.estimators[k]
                        .as_ref()
                        .map_or((0.0, 0.0), |e| (e.mse().j, e.mse().tr_r_prime));
                    UserRecord {
                        drop_id,
                        user: k,
                        trainable: setup.estimators[k].is_some(),
                        m_k: setup.supports[k].m_k(),
                        j_analytic,
                        j_empirical: acc[k].j_emp / blocks,
                        tr_r_prime,
                        sinr: acc[k].sinr / blocks,
                        rate: acc[k].rate / blocks,
                    }
                })
                .collect();
            let eff_mse = acc.iter().map(|a| a.eff_err / blocks).sum::<f64>() / n_ms as f64;
            let eff_mse_analytic = users
                .iter()
                .zip(&traces)
                .map(|(u, tr)| u.j_analytic + tr - u.tr_r_prime)
                .sum::<f64>()
                / n_ms as f64;
            DropCell {
                scheme: setup.plan.scheme,
                delta_db,
                b_prime: setup.plan.b_prime,
                overhead: setup.plan.b_prime as f64 / m as f64,
                mean_beams: users.iter().map(|u| u.m_k as f64).sum::<f64>() / n_ms as f64,
                untrainable: users.iter().filter(|u| !u.trainable).count(),
                p_data: setup.p_data,
                eff_mse,
                eff_mse_analytic,
                sum_rate: sum_rate / blocks,
                users,
            }
        })
        .collect();
    Ok(DropOutcome { drop_id, cells })
}

/// One fading block for one cell; returns the block's sum rate.
fn evaluate_block(
    cfg: &ExperimentConfig,
    setup: &CellSetup,
    effective: &[CVec],
    noise: &[Vec<num_complex::Complex64>],
    acc: &mut [UserAcc],
) -> Result<f64> {
    let m = cfg.m();
    let p_tr = cfg.p_tr();
    let sigma2 = cfg.sigma2();
    let mut served = Vec::new();
    let mut h_hats = Vec::new();
    for (k, user) in setup.plan.users.iter().enumerate() {
        let Some(est) = &setup.estimators[k] else {
            acc[k].eff_err += effective[k].norm_squared();
            continue;
        };
        let unit: Vec<_> = user.beams.iter().map(|&b| noise[k][b]).collect();
        let obs = observe(&effective[k], user, p_tr, sigma2, &unit);
        let h_meas = est.estimate(&obs);
        acc[k].j_emp += user
            .beams
            .iter()
            .zip(h_meas.iter())
            .map(|(&b, e)| (effective[k][b] - e).norm_sqr())
            .sum::<f64>();
        let h_hat = embed_estimate(&h_meas, &setup.supports[k], m)?;
        acc[k].eff_err += (&effective[k] - &h_hat).norm_squared();
        served.push(k);
        h_hats.push(h_hat);
    }
    if served.is_empty() {
        return Ok(0.0);
    }
    let precoder = match rzf_precoder(&h_hats, sigma2, cfg.rzf_mode) {
        Ok(p) => p,
        Err(Error::Argument(_)) | Err(Error::Singular(_)) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let eff_served: Vec<CVec> = served.iter().map(|&k| effective[k].clone()).collect();
    let s = sinr(&eff_served, &h_hats, &precoder, setup.p_data, sigma2)?;
    let mut total = 0.0;
    for (&k, &sk) in served.iter().zip(&s) {
        let r = rate(sk, setup.plan.b_prime, cfg.t_slots(), cfg.log_base)?;
        acc[k].sinr += sk;
        acc[k].rate += r;
        total += r;
    }
    Ok(total)
}

/// Mean and 95% normal confidence half-width.
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Distribution-free standard error of the `p`-quantile: half the spread of
/// the order statistics one binomial standard deviation either side.
pub fn quantile_se_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n < 2 {
        return 0.0;
    }
    let center = n as f64 * p;
    let spread = (n as f64 * p * (1.0 - p)).sqrt();
    let lo = ((center - spread).floor().max(0.0) as usize).min(n - 1);
    let hi = ((center + spread).ceil() as usize).min(n - 1);
    (sorted[hi] - sorted[lo]) / 2.0
}

/// Drops may arrive in any order; they are reduced in `drop_id` order so
/// the floating-point sums do not depend on scheduling.
pub fn aggregate(cfg: &ExperimentConfig, mut drops: Vec<DropOutcome>) -> SweepResult {
    drops.sort_by_key(|d| d.drop_id);
    let n_cells = cfg.delta_sweep_db.len() * cfg.schemes.len();
    let cells = (0..n_cells)
        .map(|ci| {
            let per_drop: Vec<&DropCell> = drops.iter().map(|d| &d.cells[ci]).collect();
            let first = per_drop[0];
            let collect = |f: &dyn Fn(&DropCell) -> Option<f64>| -> Vec<f64> {
                per_drop.iter().filter_map(|c| f(c)).collect()
            };
            let (j_analytic, _) = mean_ci95(&collect(&|c| c.mean_j_analytic()));
            let (j_empirical, j_empirical_ci95) = mean_ci95(&collect(&|c| c.mean_j_empirical()));
            let (tr_r_prime, _) = mean_ci95(&collect(&|c| c.mean_tr_r_prime()));
            let (eff_mse, eff_mse_ci95) = mean_ci95(&collect(&|c| Some(c.eff_mse)));
            let (eff_mse_analytic, _) = mean_ci95(&collect(&|c| Some(c.eff_mse_analytic)));
            let (sum_rate, sum_rate_ci95) = mean_ci95(&collect(&|c| Some(c.sum_rate)));
            let mut pooled: Vec<(f64, usize, usize)> = per_drop
                .iter()
                .flat_map(|c| c.trainable().map(|u| (u.rate, u.drop_id, u.user)))
                .collect();
            pooled.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let sorted: Vec<f64> = pooled.iter().map(|p| p.0).collect();
            SweepCell {
                scheme: first.scheme,
                delta_db: first.delta_db,
                mean_b_prime: mean_ci95(&collect(&|c| Some(c.b_prime as f64))).0,
                mean_overhead: mean_ci95(&collect(&|c| Some(c.overhead))).0,
                mean_beams: mean_ci95(&collect(&|c| Some(c.mean_beams))).0,
                untrainable_users: per_drop.iter().map(|c| c.untrainable).sum(),
                samples: cfg.n_drops * cfg.n_fading_blocks,
                j_analytic,
                j_empirical,
                j_empirical_ci95,
                tr_r_prime,
                eff_mse,
                eff_mse_ci95,
                eff_mse_analytic,
                sum_rate,
                sum_rate_ci95,
                mean_p_data: mean_ci95(&collect(&|c| Some(c.p_data))).0,
                rate_quantiles: QUANTILES.map(|p| quantile_sorted(&sorted, p)),
                rate_quantile_se: QUANTILES.map(|p| quantile_se_sorted(&sorted, p)),
                pooled_rates: pooled,
            }
        })
        .collect();
    SweepResult {
        m: cfg.m(),
        n_ms: cfg.env.n_ms,
        n_drops: cfg.n_drops,
        n_fading_blocks: cfg.n_fading_blocks,
        deltas: cfg.delta_sweep_db.clone(),
        schemes: cfg.schemes.clone(),
        cells,
        drops,
    }
}

/// Runs every drop (in parallel) and aggregates; writes nothing.
pub fn simulate(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let f = dft_codebook(cfg.m());
    let drops = (0..cfg.n_drops)
        .into_par_iter()
        .map(|d| simulate_drop(cfg, &f, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(cfg, drops))
}

fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))?;
    Ok(())
}

/// Validates the config, checks the output directory is writable, runs the
/// sweep and writes the CSV set (plus drop geometry files when enabled).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    prepare_output_dir(&cfg.output_dir)?;
    let result = simulate(cfg)?;
    emit_csv(&result, &cfg.output_dir)?;
    if cfg.write_drops {
        let dir = cfg.output_dir.join("drops");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for d in 0..cfg.n_drops {
            let path = dir.join(format!("drop_{d:04}.txt"));
            fs::write(&path, drop_environment(cfg, d).to_drop_text()).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(result)
}
