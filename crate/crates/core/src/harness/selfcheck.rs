//! Quick invariant checks behind `--validate`.

use rand::Rng;

use crate::env::{covariance, derive_paths, EnvConfig};
use crate::error::Result;
use crate::graph::{greedy_color, overhead_reduction, validate_coloring, ConflictGraph};
use crate::harness::config::ExperimentConfig;
use crate::harness::run::drop_environment;
use crate::linalg::{hermitian_defect, hermitian_eigenvalues, CMat, CVec};
use crate::rng::substream;
use crate::spectrum::{beam_gains, dft_codebook, dominant_support, BeamDomainChannel, DominantSupport};
use crate::training::{analytic_mse, empirical_mse, TrainingPlan, UserEstimator};
use crate::txsim::{rzf_precoder, RzfMode};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

/// The three-user, six-beam example: supports {1,2,3}, {1,3,5}, {2,4,6}
/// (0-based here).
pub fn worked_example_supports() -> Vec<DominantSupport> {
    [[0, 1, 2], [0, 2, 4], [1, 3, 5]]
        .iter()
        .enumerate()
        .map(|(k, b)| DominantSupport::from_beams(k, b, 6).expect("static example"))
        .collect()
}

pub fn self_check(cfg: &ExperimentConfig) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();

    let supports = worked_example_supports();
    let g = ConflictGraph::from_supports(&supports, 6)?;
    let c = greedy_color(&g);
    let edges = g.edges().len();
    out.push(check(
        "worked example coloring",
        edges == 8 && c.m_tr() == 3 && overhead_reduction(&c, 6) == 0.5,
        format!("edges={edges} M_tr={} ratio={}", c.m_tr(), overhead_reduction(&c, 6)),
    ));

    let mut rng = substream(cfg.master_seed, &[u64::MAX, 1]);
    let mut improper = 0;
    for _ in 0..200 {
        let sups: Vec<_> = (0..10)
            .map(|k| {
                let mask = (0..32).map(|_| rng.random::<f64>() < 0.15).collect();
                DominantSupport::from_mask(k, mask)
            })
            .collect();
        let g = ConflictGraph::from_supports(&sups, 32)?;
        let c = greedy_color(&g);
        if !validate_coloring(&g, &c)?.is_proper() || c.m_tr() > g.max_degree() + 1 {
            improper += 1;
        }
    }
    out.push(check("greedy coloring proper", improper == 0, format!("{improper}/200 failures")));

    let m = cfg.m();
    let f = dft_codebook(m);
    let defect = (f.matrix().adjoint() * f.matrix() - CMat::identity(m, m))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    out.push(check("DFT unitarity", defect <= 1e-10, format!("max |F^H F - I| = {defect:.2e}")));

    let env = drop_environment(cfg, 0);
    let mut worst_trace = 0.0f64;
    let mut worst_eig = 0.0f64;
    let mut worst_herm = 0.0f64;
    for k in 0..cfg.env.n_ms.min(3) {
        let paths = derive_paths(&env, k, &cfg.env)?;
        let r = covariance(&paths, m);
        let tr = r.trace();
        let expect = m as f64 * paths.total_power();
        worst_trace = worst_trace.max((tr - expect).abs() / expect);
        worst_herm = worst_herm.max(hermitian_defect(r.matrix()) / r.matrix().norm());
        let min_eig = hermitian_eigenvalues(r.matrix())[0];
        worst_eig = worst_eig.max(-min_eig / tr);
    }
    out.push(check(
        "covariance Hermitian/PSD/trace",
        worst_trace <= 1e-9 && worst_herm <= 1e-12 && worst_eig <= 1e-10,
        format!("trace rel err {worst_trace:.2e}, hermitian {worst_herm:.2e}, min eig/tr {:.2e}", -worst_eig),
    ));

    // small instance for the estimation/precoding identities
    let small = EnvConfig {
        n_ms: 4,
        n_s: 6,
        m_antennas: 16,
        ..cfg.env.clone()
    };
    let mut rng = substream(cfg.master_seed, &[u64::MAX, 2]);
    let env = crate::env::generate_environment(&small, &mut rng);
    let f16 = dft_codebook(16);
    let p_tr = cfg.p_tr();
    let sigma2 = cfg.sigma2();
    let mut route_gap = 0.0f64;
    let mut mc_gap = 0.0f64;
    let mut hats: Vec<CVec> = Vec::new();
    for k in 0..small.n_ms {
        let paths = derive_paths(&env, k, &small)?;
        let r = covariance(&paths, 16);
        let ch = BeamDomainChannel::from_paths(&paths, &f16);
        let dense = beam_gains(&r, &f16, k)?;
        let low = ch.beam_gains();
        for (a, b) in dense.gains.iter().zip(&low.gains) {
            route_gap = route_gap.max((a - b).abs() / dense.max());
        }
        let support = dominant_support(&low.normalized(low.max()), -30.0);
        let plan = TrainingPlan::orthogonal(std::slice::from_ref(&support), 16);
        let est = UserEstimator::new(&ch, &plan.users[0], p_tr, sigma2)?;
        let dense_mse = analytic_mse(&r, &plan, 0, &f16, p_tr, sigma2)?;
        route_gap = route_gap.max((dense_mse.j - est.mse().j).abs() / dense_mse.tr_r_prime);
        let emp = empirical_mse(&ch, &plan.users[0], &est, p_tr, sigma2, 20_000, &mut rng);
        mc_gap = mc_gap.max((emp - est.mse().j).abs() / est.mse().j);
        hats.push(ch.draw(&mut rng));
    }
    out.push(check(
        "dense vs low-rank routes",
        route_gap <= 1e-9,
        format!("max relative gap {route_gap:.2e}"),
    ));
    out.push(check(
        "analytic vs Monte Carlo MSE",
        mc_gap <= 0.03,
        format!("max relative gap {mc_gap:.3}"),
    ));

    let pre = rzf_precoder(&hats, sigma2, RzfMode::Regularized)?;
    let norm = pre.normalization(&f16);
    let n = hats.len() as f64;
    out.push(check(
        "RZF power normalization",
        ((norm - n) / n).abs() <= 1e-9,
        format!("eta^2 tr(...) = {norm:.12} vs N = {n}"),
    ));

    Ok(out)
}
