//! Downlink beam training: pilot plans derived from the coloring,
//! contaminated observations, MMSE estimation and its closed-form MSE.
//!
//! Orientation used throughout: `B_k` is `M × M_k` (dominant beams as
//! columns), `C_k` is `M_k × M`, and the composite `X_k = B_k + F C_k^T`
//! satisfies `X_k^H h = B_k^H h + C_k F^H h`.

use num_complex::Complex64;
use rand::Rng;

use crate::env::{ChannelRealization, Covariance};
use crate::error::{Error, Result};
use crate::graph::{validate_coloring, Coloring, ConflictGraph};
use crate::linalg::{complex_normal, solve_hpd, trace_re, CMat, CVec, ZERO};
use crate::spectrum::{BeamDomainChannel, DftCodebook, DominantSupport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// One dedicated slot per beam, `b' = M`.
    Orthogonal,
    /// Slots from the conflict-graph coloring, `b' = M_tr`.
    Graph,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Orthogonal => "orthogonal",
            Scheme::Graph => "graph",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "orthogonal" | "orth" => Ok(Scheme::Orthogonal),
            "graph" => Ok(Scheme::Graph),
            other => Err(Error::config(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserTraining {
    pub user_index: usize,
    /// Dominant beams `b_1(k) .. b_{M_k}(k)`, ascending.
    pub beams: Vec<usize>,
    /// `S^k_i`: the other beams sharing the slot of `beams[i]`.
    pub contamination: Vec<Vec<usize>>,
}

impl UserTraining {
    pub fn m_k(&self) -> usize {
        self.beams.len()
    }

    pub fn is_trainable(&self) -> bool {
        !self.beams.is_empty()
    }

    /// `B_k`, `M × M_k`.
    pub fn beam_selection(&self, f: &DftCodebook) -> CMat {
        CMat::from_fn(f.m(), self.m_k(), |n, i| f.matrix()[(n, self.beams[i])])
    }

    /// `C_k`, `M_k × M` with ones at `(i, m)` for `m ∈ S^k_i`.
    pub fn contamination_matrix(&self, m: usize) -> CMat {
        let mut c = CMat::from_element(self.m_k(), m, ZERO);
        for (i, set) in self.contamination.iter().enumerate() {
            for &b in set {
                c[(i, b)] = Complex64::new(1.0, 0.0);
            }
        }
        c
    }

    /// `X_k = B_k + F C_k^T`.
    pub fn composite(&self, f: &DftCodebook) -> CMat {
        let mut x = self.beam_selection(f);
        for (i, set) in self.contamination.iter().enumerate() {
            let mut col = x.column_mut(i);
            for &b in set {
                col += f.matrix().column(b);
            }
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPlan {
    pub scheme: Scheme,
    pub m: usize,
    /// Training slots consumed per coherence block.
    pub b_prime: usize,
    pub users: Vec<UserTraining>,
}

impl TrainingPlan {
    pub fn orthogonal(supports: &[DominantSupport], m: usize) -> Self {
        let users = supports
            .iter()
            .map(|s| UserTraining {
                user_index: s.user_index,
                beams: s.beams.clone(),
                contamination: vec![Vec::new(); s.m_k()],
            })
            .collect();
        Self {
            scheme: Scheme::Orthogonal,
            m,
            b_prime: m,
            users,
        }
    }

    pub fn graph(g: &ConflictGraph, coloring: &Coloring, supports: &[DominantSupport]) -> Result<Self> {
        let check = validate_coloring(g, coloring)?;
        if !check.is_proper() {
            return Err(Error::ImproperColoring(check.violations));
        }
        let mut users = Vec::with_capacity(supports.len());
        for s in supports {
            let mut contamination = Vec::with_capacity(s.m_k());
            for &b in &s.beams {
                if !g.is_vertex(b) {
                    return Err(Error::arg(format!(
                        "beam {b} of user {} is not a graph vertex",
                        s.user_index
                    )));
                }
                contamination.push(coloring.same_color(b));
            }
            users.push(UserTraining {
                user_index: s.user_index,
                beams: s.beams.clone(),
                contamination,
            });
        }
        Ok(Self {
            scheme: Scheme::Graph,
            m: g.m(),
            b_prime: coloring.m_tr(),
            users,
        })
    }

    /// Drops every contamination set and charges the full `M` slots. The
    /// result must evaluate identically to the orthogonal plan.
    pub fn without_contamination(mut self) -> Self {
        for u in &mut self.users {
            for s in &mut u.contamination {
                s.clear();
            }
        }
        self.b_prime = self.m;
        self
    }

    pub fn user(&self, k: usize) -> Result<&UserTraining> {
        self.users
            .get(k)
            .ok_or_else(|| Error::arg(format!("user {k} not in plan")))
    }
}

pub fn build_training_plan(
    g: &ConflictGraph,
    coloring: &Coloring,
    supports: &[DominantSupport],
    scheme: Scheme,
) -> Result<TrainingPlan> {
    match scheme {
        Scheme::Orthogonal => Ok(TrainingPlan::orthogonal(supports, g.m())),
        Scheme::Graph => TrainingPlan::graph(g, coloring, supports),
    }
}

/// `h̃'_k`, the `M_k` pilot observations of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation(pub CVec);

/// Forms `√P_tr (B^H h + C F^H h) + σ n` from the effective channel
/// `F^H h` and unit-variance noise samples `n` (one per observed beam).
pub fn observe(
    effective: &CVec,
    user: &UserTraining,
    p_tr: f64,
    sigma2: f64,
    unit_noise: &[Complex64],
) -> PilotObservation {
    assert_eq!(unit_noise.len(), user.m_k());
    let amp = p_tr.sqrt();
    let sigma = sigma2.sqrt();
    let obs = user
        .beams
        .iter()
        .zip(&user.contamination)
        .zip(unit_noise)
        .map(|((&b, set), &n)| {
            let leak: Complex64 = set.iter().map(|&m| effective[m]).sum();
            (effective[b] + leak) * amp + n * sigma
        });
    PilotObservation(CVec::from_iterator(user.m_k(), obs))
}

pub fn simulate_pilots<R: Rng + ?Sized>(
    h_true: &ChannelRealization,
    plan: &TrainingPlan,
    k: usize,
    f: &DftCodebook,
    p_tr: f64,
    sigma2: f64,
    rng: &mut R,
) -> Result<PilotObservation> {
    let user = plan.user(k)?;
    if h_true.vector().len() != f.m() {
        return Err(Error::Dimension {
            expected: f.m(),
            actual: h_true.vector().len(),
        });
    }
    let effective = f.to_beam_domain(h_true.vector());
    let noise: Vec<_> = (0..user.m_k()).map(|_| complex_normal(rng)).collect();
    Ok(observe(&effective, user, p_tr, sigma2, &noise))
}

/// Dense MMSE filter `W_k` together with the composite `X_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MmseFilter {
    pub w: CMat,
    pub x: CMat,
}

pub fn mmse_filter(
    r: &Covariance,
    plan: &TrainingPlan,
    k: usize,
    f: &DftCodebook,
    p_tr: f64,
    sigma2: f64,
) -> Result<MmseFilter> {
    let user = plan.user(k)?;
    if r.dim() != f.m() {
        return Err(Error::Dimension {
            expected: f.m(),
            actual: r.dim(),
        });
    }
    let b = user.beam_selection(f);
    let x = user.composite(f);
    let m_k = user.m_k();
    if p_tr == 0.0 {
        return Ok(MmseFilter {
            w: CMat::from_element(m_k, m_k, ZERO),
            x,
        });
    }
    let rx = r.matrix() * &x;
    let cross = b.adjoint() * &rx * Complex64::from(p_tr.sqrt());
    let gram = inner_covariance(&x, &rx, p_tr, sigma2);
    // W = cross · gram⁻¹  ⇔  gram · W^H = cross^H (gram is Hermitian)
    let w = solve_hpd(&gram, &cross.adjoint())?.adjoint();
    Ok(MmseFilter { w, x })
}

fn inner_covariance(x: &CMat, rx: &CMat, p_tr: f64, sigma2: f64) -> CMat {
    let mut g = x.adjoint() * rx * Complex64::from(p_tr);
    for i in 0..g.nrows() {
        g[(i, i)] += sigma2;
    }
    g
}

pub fn estimate(obs: &PilotObservation, w: &MmseFilter) -> Result<CVec> {
    if obs.0.len() != w.w.ncols() {
        return Err(Error::Dimension {
            expected: w.w.ncols(),
            actual: obs.0.len(),
        });
    }
    Ok(&w.w * &obs.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseBreakdown {
    /// `J_k = tr(R'_k − R̂'_k)`.
    pub j: f64,
    pub tr_r_prime: f64,
    pub tr_r_hat: f64,
}

/// Closed-form MSE of the measured-channel estimate, dense evaluation.
pub fn analytic_mse(
    r: &Covariance,
    plan: &TrainingPlan,
    k: usize,
    f: &DftCodebook,
    p_tr: f64,
    sigma2: f64,
) -> Result<MseBreakdown> {
    let user = plan.user(k)?;
    let filt = mmse_filter(r, plan, k, f, p_tr, sigma2)?;
    let b = user.beam_selection(f);
    let r_prime = b.adjoint() * r.matrix() * &b;
    let rx = r.matrix() * &filt.x;
    let gram = inner_covariance(&filt.x, &rx, p_tr, sigma2);
    let r_hat = &filt.w * gram * filt.w.adjoint();
    let tr_r_prime = trace_re(&r_prime);
    let tr_r_hat = trace_re(&r_hat);
    Ok(MseBreakdown {
        j: (tr_r_prime - tr_r_hat).max(0.0),
        tr_r_prime,
        tr_r_hat,
    })
}

/// MMSE estimator built from the low-rank beam-domain factor `U`
/// (`F^H R F = U U^H`).
///
/// With `V` the rows of `U` summed over each slot's beams and
/// `Q = V^H V`, the filter is `W = U_B (sI + Q)^{-1} V^H / √P_tr` where
/// `s = σ²/P_tr`. Only `P × P` systems are solved (`P` = number of paths),
/// independent of `M_k`.
#[derive(Debug, Clone)]
pub struct UserEstimator {
    user_index: usize,
    beams: Vec<usize>,
    u_b: CMat,
    /// `(sI + Q)^{-1} V^H / √P_tr`, `P × M_k`. `None` when `P_tr = 0`.
    z: Option<CMat>,
    mse: MseBreakdown,
}

impl UserEstimator {
    pub fn new(ch: &BeamDomainChannel, user: &UserTraining, p_tr: f64, sigma2: f64) -> Result<Self> {
        let u = ch.factor();
        let m_k = user.m_k();
        let n_p = u.ncols();
        let u_b = CMat::from_fn(m_k, n_p, |i, p| u[(user.beams[i], p)]);
        let tr_r_prime = u_b.norm_squared();
        if p_tr == 0.0 || m_k == 0 {
            return Ok(Self {
                user_index: user.user_index,
                beams: user.beams.clone(),
                u_b,
                z: None,
                mse: MseBreakdown {
                    j: tr_r_prime,
                    tr_r_prime,
                    tr_r_hat: 0.0,
                },
            });
        }
        let mut v = u_b.clone();
        for (i, set) in user.contamination.iter().enumerate() {
            let mut row = v.row_mut(i);
            for &b in set {
                row += u.row(b);
            }
        }
        let q = v.adjoint() * &v;
        let mut reg = q.clone();
        let s = sigma2 / p_tr;
        for i in 0..n_p {
            reg[(i, i)] += s;
        }
        let mut z = solve_hpd(&reg, &v.adjoint())?;
        z /= Complex64::from(p_tr.sqrt());
        // tr R̂' = tr((sI + Q)^{-1} Q U_B^H U_B)
        let t = solve_hpd(&reg, &q)?;
        let tr_r_hat = (t * (u_b.adjoint() * &u_b)).trace().re;
        Ok(Self {
            user_index: user.user_index,
            beams: user.beams.clone(),
            u_b,
            z: Some(z),
            mse: MseBreakdown {
                j: (tr_r_prime - tr_r_hat).max(0.0),
                tr_r_prime,
                tr_r_hat,
            },
        })
    }

    pub fn user_index(&self) -> usize {
        self.user_index
    }

    pub fn beams(&self) -> &[usize] {
        &self.beams
    }

    pub fn mse(&self) -> MseBreakdown {
        self.mse
    }

    /// `ĥ'_k = W_k h̃'_k`.
    pub fn estimate(&self, obs: &PilotObservation) -> CVec {
        match &self.z {
            None => CVec::from_element(self.beams.len(), ZERO),
            Some(z) => &self.u_b * (z * &obs.0),
        }
    }

    /// Dense `W_k`, for cross-checks.
    pub fn filter_matrix(&self) -> CMat {
        match &self.z {
            None => CMat::from_element(self.beams.len(), self.beams.len(), ZERO),
            Some(z) => &self.u_b * z,
        }
    }
}

/// Monte Carlo mean of `‖h' − ĥ'‖²` over `n` independent fading blocks and
/// noise draws.
pub fn empirical_mse<R: Rng + ?Sized>(
    ch: &BeamDomainChannel,
    user: &UserTraining,
    est: &UserEstimator,
    p_tr: f64,
    sigma2: f64,
    n: usize,
    rng: &mut R,
) -> f64 {
    let mut acc = 0.0;
    let mut noise = vec![ZERO; user.m_k()];
    for _ in 0..n {
        let eff = ch.draw(rng);
        noise.iter_mut().for_each(|z| *z = complex_normal(rng));
        let obs = observe(&eff, user, p_tr, sigma2, &noise);
        let h_hat = est.estimate(&obs);
        acc += user
            .beams
            .iter()
            .zip(h_hat.iter())
            .map(|(&b, e)| (eff[b] - e).norm_sqr())
            .sum::<f64>();
    }
    acc / n as f64
}

/// Places the measured-channel estimate at the user's beam positions of an
/// `M`-dimensional effective channel; zeros elsewhere.
pub fn embed_estimate(h_meas: &CVec, support: &DominantSupport, m: usize) -> Result<CVec> {
    if support.m() != m {
        return Err(Error::Dimension {
            expected: m,
            actual: support.m(),
        });
    }
    if h_meas.len() != support.m_k() {
        return Err(Error::Dimension {
            expected: support.m_k(),
            actual: h_meas.len(),
        });
    }
    let mut out = CVec::from_element(m, ZERO);
    for (&b, &v) in support.beams.iter().zip(h_meas.iter()) {
        out[b] = v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{covariance, Path, PathSet};
    use crate::graph::greedy_color;
    use crate::rng::seeded;
    use crate::spectrum::dft_codebook;
    use proptest::prelude::*;
    use rand::Rng;

    fn example() -> (ConflictGraph, Coloring, Vec<DominantSupport>) {
        let sups: Vec<_> = [[0, 1, 2], [0, 2, 4], [1, 3, 5]]
            .iter()
            .enumerate()
            .map(|(k, b)| DominantSupport::from_beams(k, b, 6).unwrap())
            .collect();
        let g = ConflictGraph::from_supports(&sups, 6).unwrap();
        let c = greedy_color(&g);
        (g, c, sups)
    }

    fn random_paths(n: usize, seed: u64) -> PathSet {
        let mut rng = seeded(seed);
        PathSet {
            user_index: 0,
            paths: (0..n)
                .map(|_| Path {
                    gain_mag: 0.1 + rng.random::<f64>(),
                    aod: (rng.random::<f64>() - 0.5) * 3.0,
                    delay: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn orthogonal_plan_has_no_contamination() {
        let (_, _, sups) = example();
        let plan = TrainingPlan::orthogonal(&sups, 6);
        assert_eq!(plan.b_prime, 6);
        for u in &plan.users {
            assert!(u.contamination_matrix(6).iter().all(|z| *z == ZERO));
        }
    }

    #[test]
    fn worked_example_contamination_sets() {
        let (g, c, sups) = example();
        let plan = build_training_plan(&g, &c, &sups, Scheme::Graph).unwrap();
        assert_eq!(plan.b_prime, 3);
        assert_eq!(plan.users[0].contamination, vec![vec![3], vec![4], vec![5]]);
        let cm = plan.users[0].contamination_matrix(6);
        assert_eq!(cm[(0, 3)], Complex64::new(1.0, 0.0));
        assert_eq!(cm.iter().filter(|z| **z != ZERO).count(), 3);
    }

    #[test]
    fn improper_coloring_is_rejected() {
        let (g, _, sups) = example();
        let bad = Coloring::from_colors(vec![Some(1); 6]).unwrap();
        assert!(matches!(TrainingPlan::graph(&g, &bad, &sups), Err(Error::ImproperColoring(_))));
    }

    #[test]
    fn single_beam_contamination() {
        let sups = vec![
            DominantSupport::from_beams(0, &[0], 4).unwrap(),
            DominantSupport::from_beams(1, &[2], 4).unwrap(),
        ];
        let g = ConflictGraph::from_supports(&sups, 4).unwrap();
        let c = greedy_color(&g);
        let plan = TrainingPlan::graph(&g, &c, &sups).unwrap();
        assert_eq!(plan.b_prime, 1);
        assert_eq!(plan.users[0].contamination, vec![vec![2]]);
        assert_eq!(plan.users[1].contamination, vec![vec![0]]);
    }

    #[test]
    fn noiseless_observation_is_composite_projection() {
        let (g, c, sups) = example();
        let plan = TrainingPlan::graph(&g, &c, &sups).unwrap();
        let f = dft_codebook(6);
        let mut rng = seeded(2);
        let h = CVec::from_fn(6, |_, _| complex_normal(&mut rng));
        let eff = f.to_beam_domain(&h);
        for u in &plan.users {
            let obs = observe(&eff, u, 4.0, 1.0, &vec![ZERO; u.m_k()]);
            let expect = u.composite(&f).adjoint() * &h * Complex64::from(2.0);
            assert!((obs.0 - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_covariance_filters() {
        let m = 4;
        let f = dft_codebook(m);
        let r = Covariance(CMat::identity(m, m));
        let sups = vec![DominantSupport::from_beams(0, &[0, 2, 3], m).unwrap()];
        let plan = TrainingPlan::orthogonal(&sups, m);
        let p = 4.0;
        let w = mmse_filter(&r, &plan, 0, &f, p, 1e-12).unwrap();
        let ideal = CMat::identity(3, 3) / Complex64::from(p.sqrt());
        assert!((w.w - ideal).norm() < 1e-9);

        // scalar Wiener case
        let sups = vec![DominantSupport::from_beams(0, &[1], m).unwrap()];
        let plan = TrainingPlan::orthogonal(&sups, m);
        let (p, s2) = (2.0, 0.5);
        let w = mmse_filter(&r, &plan, 0, &f, p, s2).unwrap();
        assert!((w.w[(0, 0)].re - p.sqrt() / (p + s2)).abs() < 1e-12);
        let mse = analytic_mse(&r, &plan, 0, &f, p, s2).unwrap();
        assert!((mse.j - s2 / (p + s2)).abs() < 1e-12);
        assert!((mse.tr_r_prime - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_training_power() {
        let m = 8;
        let f = dft_codebook(m);
        let ps = random_paths(3, 1);
        let r = covariance(&ps, m);
        let sups = vec![DominantSupport::from_beams(0, &[1, 5], m).unwrap()];
        let plan = TrainingPlan::orthogonal(&sups, m);
        let filt = mmse_filter(&r, &plan, 0, &f, 0.0, 1.0).unwrap();
        assert!(filt.w.iter().all(|z| *z == ZERO));
        let mse = analytic_mse(&r, &plan, 0, &f, 0.0, 1.0).unwrap();
        assert_eq!(mse.j, mse.tr_r_prime);
        let ch = BeamDomainChannel::from_paths(&ps, &f);
        let est = UserEstimator::new(&ch, &plan.users[0], 0.0, 1.0).unwrap();
        assert_eq!(est.mse().j, est.mse().tr_r_prime);
        assert!(est.estimate(&PilotObservation(CVec::from_element(2, ONE))).iter().all(|z| *z == ZERO));
    }

    const ONE: Complex64 = Complex64::new(1.0, 0.0);

    #[test]
    fn embed_places_entries() {
        let s = DominantSupport::from_beams(0, &[1, 3], 5).unwrap();
        let v = CVec::from_vec(vec![ONE, Complex64::new(0.0, 2.0)]);
        let e = embed_estimate(&v, &s, 5).unwrap();
        assert_eq!(e[1], ONE);
        assert_eq!(e[3], Complex64::new(0.0, 2.0));
        assert_eq!(e[0] + e[2] + e[4], ZERO);
        assert!(embed_estimate(&v, &s, 6).is_err());
        assert!(embed_estimate(&CVec::from_element(3, ONE), &s, 5).is_err());
        let empty = DominantSupport::from_mask(0, vec![false; 4]);
        assert_eq!(embed_estimate(&CVec::zeros(0), &empty, 4).unwrap(), CVec::zeros(4));
    }

    #[test]
    fn dense_and_low_rank_estimators_agree() {
        let (g, c, sups) = example();
        let f = dft_codebook(6);
        for scheme in [Scheme::Orthogonal, Scheme::Graph] {
            let plan = build_training_plan(&g, &c, &sups, scheme).unwrap();
            for k in 0..3 {
                let ps = random_paths(2 + k, 10 + k as u64);
                let r = covariance(&ps, 6);
                let ch = BeamDomainChannel::from_paths(&ps, &f);
                let (p, s2) = (3.0, 0.2);
                let dense = mmse_filter(&r, &plan, k, &f, p, s2).unwrap();
                let low = UserEstimator::new(&ch, &plan.users[k], p, s2).unwrap();
                let scale = dense.w.norm();
                assert!((&dense.w - low.filter_matrix()).norm() <= 1e-9 * scale);
                let a = analytic_mse(&r, &plan, k, &f, p, s2).unwrap();
                assert!((a.j - low.mse().j).abs() <= 1e-9 * a.tr_r_prime);
                assert!((a.tr_r_prime - low.mse().tr_r_prime).abs() <= 1e-9 * a.tr_r_prime);
            }
        }
    }

    #[test]
    fn removing_contamination_matches_orthogonal_exactly() {
        let (g, c, sups) = example();
        let f = dft_codebook(6);
        let graph = TrainingPlan::graph(&g, &c, &sups).unwrap().without_contamination();
        let orth = TrainingPlan::orthogonal(&sups, 6);
        assert_eq!(graph.b_prime, orth.b_prime);
        let ps = random_paths(4, 3);
        let ch = BeamDomainChannel::from_paths(&ps, &f);
        for k in 0..3 {
            let a = UserEstimator::new(&ch, &graph.users[k], 2.0, 0.1).unwrap();
            let b = UserEstimator::new(&ch, &orth.users[k], 2.0, 0.1).unwrap();
            assert_eq!(a.filter_matrix(), b.filter_matrix());
            assert_eq!(a.mse(), b.mse());
        }
    }

    #[test]
    fn simulate_pilots_checks_dimensions() {
        let (_, _, sups) = example();
        let plan = TrainingPlan::orthogonal(&sups, 6);
        let f = dft_codebook(6);
        let h = ChannelRealization(CVec::zeros(5));
        assert!(simulate_pilots(&h, &plan, 0, &f, 1.0, 1.0, &mut seeded(1)).is_err());
        let h = ChannelRealization(CVec::zeros(6));
        assert!(simulate_pilots(&h, &plan, 7, &f, 1.0, 1.0, &mut seeded(1)).is_err());
        let obs = simulate_pilots(&h, &plan, 0, &f, 1.0, 1.0, &mut seeded(1)).unwrap();
        let filt = mmse_filter(&Covariance(CMat::identity(6, 6)), &plan, 0, &f, 1.0, 1.0).unwrap();
        assert_eq!(estimate(&obs, &filt).unwrap().len(), 3);
        assert!(estimate(&PilotObservation(CVec::zeros(2)), &filt).is_err());
    }

    #[test]
    fn empirical_mse_tracks_analytic() {
        let (g, c, sups) = example();
        let f = dft_codebook(6);
        let plan = TrainingPlan::graph(&g, &c, &sups).unwrap();
        let ps = random_paths(5, 21);
        let ch = BeamDomainChannel::from_paths(&ps, &f);
        let est = UserEstimator::new(&ch, &plan.users[1], 1.0, 0.3).unwrap();
        let emp = empirical_mse(&ch, &plan.users[1], &est, 1.0, 0.3, 40_000, &mut seeded(5));
        assert!((emp - est.mse().j).abs() <= 0.03 * est.mse().j, "{emp} vs {}", est.mse().j);
    }

    proptest! {
        #[test]
        fn mse_is_bounded_by_measured_power(
            seed in 0u64..1000,
            n_paths in 1usize..6,
            p_db in -20.0f64..40.0,
        ) {
            let (g, c, sups) = example();
            let f = dft_codebook(6);
            let ps = random_paths(n_paths, seed);
            let ch = BeamDomainChannel::from_paths(&ps, &f);
            let p = 10f64.powf(p_db / 10.0);
            for scheme in [Scheme::Orthogonal, Scheme::Graph] {
                let plan = build_training_plan(&g, &c, &sups, scheme).unwrap();
                for u in &plan.users {
                    let mse = UserEstimator::new(&ch, u, p, 1.0).unwrap().mse();
                    prop_assert!(mse.j >= 0.0);
                    prop_assert!(mse.j <= mse.tr_r_prime * (1.0 + 1e-12));
                }
            }
        }
    }
}
