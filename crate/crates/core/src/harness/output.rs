//! CSV tables written by a sweep. Every file starts with a header row;
//! floating-point metrics carry 9 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::run::SweepResult;
use crate::spectrum::linear_to_db;

pub const FILES: [&str; 7] = [
    "overhead.csv",
    "mse_measured.csv",
    "mse_effective.csv",
    "rates.csv",
    "rate_cdf.csv",
    "users_mse.csv",
    "users_rate.csv",
];

fn g9(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else {
        format!("{x}")
    }
}

/// Renders every table as `(file name, contents)`.
pub fn render_csv(result: &SweepResult) -> Vec<(&'static str, String)> {
    let mut overhead = String::from(
        "scheme,delta_db,mean_b_prime,mean_overhead_ratio,mean_beams_per_user,untrainable_users,samples\n",
    );
    let mut mse_measured =
        String::from("scheme,delta_db,j_analytic,j_empirical,j_empirical_ci95,tr_r_prime,samples\n");
    let mut mse_effective =
        String::from("scheme,delta_db,mse_effective,mse_effective_ci95,mse_effective_analytic,samples\n");
    let mut rates = String::from(
        "scheme,delta_db,mean_sum_rate,sum_rate_ci95,mean_p_data,rate_q10,rate_q25,rate_q50,rate_q75,rate_q90,samples\n",
    );
    let mut cdf = String::from("record,scheme,delta_db,drop_id,user,rate,cdf\n");
    let mut users_mse = String::from("drop_id,user,scheme,delta_db,j_analytic,j_empirical,tr_r_prime\n");
    let mut users_rate = String::from("drop_id,user,scheme,delta_db,sinr_db,rate,b_prime\n");

    for scheme in &result.schemes {
        for c in result.series(*scheme) {
            let s = scheme.as_str();
            let d = c.delta_db;
            let _ = writeln!(
                overhead,
                "{s},{d},{},{},{},{},{}",
                g9(c.mean_b_prime),
                g9(c.mean_overhead),
                g9(c.mean_beams),
                c.untrainable_users,
                c.samples
            );
            let _ = writeln!(
                mse_measured,
                "{s},{d},{},{},{},{},{}",
                g9(c.j_analytic),
                g9(c.j_empirical),
                g9(c.j_empirical_ci95),
                g9(c.tr_r_prime),
                c.samples
            );
            let _ = writeln!(
                mse_effective,
                "{s},{d},{},{},{},{}",
                g9(c.eff_mse),
                g9(c.eff_mse_ci95),
                g9(c.eff_mse_analytic),
                c.samples
            );
            let q = c.rate_quantiles.map(g9);
            let _ = writeln!(
                rates,
                "{s},{d},{},{},{},{},{},{},{},{},{}",
                g9(c.sum_rate),
                g9(c.sum_rate_ci95),
                g9(c.mean_p_data),
                q[0],
                q[1],
                q[2],
                q[3],
                q[4],
                c.samples
            );
        }
        if let Some(best) = result.best_delta_index(*scheme).and_then(|i| result.cell(*scheme, i)) {
            let s = scheme.as_str();
            let n = best.pooled_rates.len();
            let mean = best.pooled_rates.iter().map(|r| r.0).sum::<f64>() / n.max(1) as f64;
            let _ = writeln!(cdf, "optimum,{s},{},,,{},", best.delta_db, g9(mean));
            for (i, (r, drop_id, user)) in best.pooled_rates.iter().enumerate() {
                let _ = writeln!(
                    cdf,
                    "user,{s},{},{drop_id},{user},{},{}",
                    best.delta_db,
                    g9(*r),
                    g9((i + 1) as f64 / n as f64)
                );
            }
        }
    }

    for drop in &result.drops {
        for cell in &drop.cells {
            for u in &cell.users {
                let s = cell.scheme.as_str();
                let d = cell.delta_db;
                let _ = writeln!(
                    users_mse,
                    "{},{},{s},{d},{},{},{}",
                    u.drop_id,
                    u.user,
                    g9(u.j_analytic),
                    g9(u.j_empirical),
                    g9(u.tr_r_prime)
                );
                let sinr_db = if u.trainable { linear_to_db(u.sinr) } else { f64::NEG_INFINITY };
                let _ = writeln!(
                    users_rate,
                    "{},{},{s},{d},{},{},{}",
                    u.drop_id,
                    u.user,
                    g9(sinr_db),
                    g9(u.rate),
                    cell.b_prime
                );
            }
        }
    }

    vec![
        ("overhead.csv", overhead),
        ("mse_measured.csv", mse_measured),
        ("mse_effective.csv", mse_effective),
        ("rates.csv", rates),
        ("rate_cdf.csv", cdf),
        ("users_mse.csv", users_mse),
        ("users_rate.csv", users_rate),
    ]
}

pub fn emit_csv(result: &SweepResult, dir: &Path) -> Result<()> {
    for (name, body) in render_csv(result) {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
