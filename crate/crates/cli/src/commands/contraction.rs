use fqdyn::margulis::{check_linear_growth, check_restricted_decay, fit_weights, ls_slope, MargulisParams};
use fqdyn::measure::{basis_wedge, contraction_integral_sl, contraction_integral_u, MeasureResult};
use fqdyn::seed::derive_seed;
use fqdyn::PolyLattice;

use super::parse_lattice;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{num, Report};

/// Exact ∫ ‖g_t u_s e_2‖^{-1} ds for m = n = 1: |s| = q^{-k} has mass
/// (1 - 1/q) q^{-k} and the norm is max(q^{t-k}, q^{-t}).
pub fn level_set_integral(q: usize, t: u32) -> f64 {
    let q = q as f64;
    let t = t as i32;
    let mut acc = q.powi(-2 * t) * q.powi(t);
    for k in 0..2 * t {
        acc += (1.0 - 1.0 / q) * q.powi(-k) * q.powi(k - t);
    }
    acc
}

fn index_list(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|x| x.trim().parse().map_err(|_| CliError::Usage(format!("bad index list `{text}`"))))
        .collect()
}

pub fn contraction(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let target = cfg.string("target", "u");
    match target.as_str() {
        "u" | "sl" => integral(cfg, rep, target == "sl"),
        "linear-growth" => single_height(cfg, rep),
        "fit" => weights(cfg, rep),
        "restricted" => restricted(cfg, rep),
        other => Err(CliError::Usage(format!("unknown contraction target `{other}` (u, sl, linear-growth, fit, restricted)"))),
    }
}

fn integral(cfg: &RunConfig, rep: &mut Report, sl: bool) -> Result<(), CliError> {
    let f = cfg.field()?;
    let q = f.q();
    let m = cfg.usize("m", 1)?;
    let n = cfg.usize("n", 1)?;
    let d = m + n;
    let i = cfg.usize("i", 1)?;
    if i == 0 || i >= d {
        return Err(CliError::Usage(format!("i must lie in 1..{d}")));
    }
    let default_v: Vec<String> = (d - i + 1..=d).map(|j| j.to_string()).collect();
    let v_idx = index_list(&cfg.string("v", &default_v.join(",")))?;
    let t_max = cfg.u32("t_max", 6)?;
    let trials = cfg.u64("trials", 10_000)?;
    let seed = cfg.u64("seed", 1)?;
    let v = basis_wedge(f, d, &v_idx)?;
    let mn = (m * n) as f64;
    rep.set_columns(&["t", "value", "std_error", "log_q_value", "oracle"]);
    if trials == 0 {
        rep.vacuous("integral_slope", "0 trials");
        return Ok(());
    }
    let t_min = if sl { 0 } else { 1 };
    let oracle_applies = !sl && m == 1 && n == 1 && v_idx == [2];
    let lq = (q as f64).ln();
    let mut pts = Vec::new();
    let mut rows: Vec<(u32, MeasureResult)> = Vec::new();
    for t in t_min..=t_max {
        let seed_t = derive_seed(seed, t as u64);
        let r = if sl {
            contraction_integral_sl(f, m, n, t, &v, trials, seed_t)?
        } else {
            contraction_integral_u(f, m, n, t, &v, trials, seed_t)?
        };
        let oracle = if oracle_applies { level_set_integral(q, t).to_string() } else { String::new() };
        rep.row(vec![t.to_string(), r.value.to_string(), r.std_error().to_string(), (r.value.ln() / lq).to_string(), oracle]);
        pts.push((t as f64, r.value.ln() / lq));
        rows.push((t, r));
    }
    let name = if sl { "sl_integral" } else { "u_integral" };
    let fit: Vec<&(f64, f64)> = pts.iter().filter(|p| p.0 >= 1.0).collect();
    if fit.len() >= 2 {
        let slope = ls_slope(&fit.iter().map(|p| p.0).collect::<Vec<_>>(), &fit.iter().map(|p| p.1).collect::<Vec<_>>());
        let tol = if sl { 0.4 } else { 0.3 };
        rep.check(format!("{name}_slope"), num(slope), num(-mn), (slope + mn).abs() <= tol);
        rep.fitted(format!("{name}_slope"), num(slope));
    } else {
        rep.vacuous(format!("{name}_slope"), "fewer than two t values");
    }
    if oracle_applies {
        if let Some((_, r)) = rows.iter().find(|(t, _)| *t == 1) {
            let exact = level_set_integral(q, 1);
            let dev = (r.value - exact).abs();
            rep.check("u_integral_t1_level_set", num(r.value), num(exact), dev <= 3.0 * r.std_error());
        }
        let ts: Vec<f64> = (1..=t_max).map(f64::from).collect();
        let ys: Vec<f64> = (1..=t_max).map(|t| level_set_integral(q, t).ln() / lq).collect();
        if ts.len() >= 2 {
            rep.fitted("u_integral_oracle_slope", num(ls_slope(&ts, &ys)));
        }
    }
    rep.plot(name, pts);
    Ok(())
}

fn lattice(cfg: &RunConfig, d: usize, default: &str) -> Result<PolyLattice, CliError> {
    let f = cfg.field()?;
    parse_lattice(f, d, &cfg.string("lattice", default))
}

fn single_height(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let m = cfg.usize("m", 1)?;
    let n = cfg.usize("n", 1)?;
    let i = cfg.usize("i", 1)?;
    let t_max = cfg.u32("t_max", 6)?;
    let trials = cfg.u64("trials", 4_000)?;
    let seed = cfg.u64("seed", 1)?;
    let x = lattice(cfg, m + n, "cusp:8")?;
    rep.set_columns(&["t", "lhs", "std_error", "term1", "term2", "fitted_c"]);
    if trials == 0 || t_max == 0 {
        rep.vacuous("linear_growth", "0 trials");
        return Ok(());
    }
    let mut cs = Vec::new();
    for t in 1..=t_max {
        let r = check_linear_growth(&x, m, n, i, t, trials, seed)?;
        rep.row(vec![
            t.to_string(),
            r.lhs.mean.to_string(),
            r.lhs.std_error.to_string(),
            r.term1.to_string(),
            r.term2.to_string(),
            r.fitted_c.to_string(),
        ]);
        rep.fitted(format!("c_t{t}"), num(r.fitted_c));
        cs.push(r.fitted_c);
    }
    rep.plot("linear_growth_fitted_c", cs.iter().enumerate().map(|(k, &c)| ((k + 1) as f64, c)).collect());
    let c1 = cs[0];
    if c1 == 0.0 {
        rep.note("fitted c is 0 at t = 1: the second term dominates for this lattice");
        rep.vacuous("linear_growth", "c(1) = 0");
        return Ok(());
    }
    let worst = cs.iter().enumerate().map(|(k, &c)| c / (k + 1) as f64).fold(0.0, f64::max);
    rep.check("linear_growth", num(worst), num(1.5 * c1), worst <= 1.5 * c1);
    Ok(())
}

fn weights(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let f = cfg.field()?;
    let m = cfg.usize("m", 1)?;
    let n = cfg.usize("n", 1)?;
    let t = cfg.u32("t", 3)?;
    let cusp = cfg.i64("cusp", 12)?;
    let trials = cfg.u64("trials", 400)?;
    let seed = cfg.u64("seed", 1)?;
    let max_k = cfg.f64("max_k", 1e6)?;
    let d = m + n;
    let samples = (0..=cusp).map(|k| parse_lattice(f, d, &format!("cusp:{k}"))).collect::<Result<Vec<_>, _>>()?;
    rep.set_columns(&["index", "log_q_omega", "beta"]);
    if trials == 0 {
        rep.vacuous("weight_fit", "0 trials");
        return Ok(());
    }
    let fit = fit_weights(m, n, t, &samples, trials, seed, max_k)?;
    for (k, (w, b)) in fit.log_omegas.iter().zip(&fit.params.betas).enumerate() {
        rep.row(vec![k.to_string(), w.to_string(), b.to_string()]);
    }
    rep.fitted("k", num(fit.k));
    rep.fitted("threshold", num(fit.params.threshold));
    rep.fitted("log_q_omegas", serde_json::json!(fit.log_omegas));
    if fit.vacuous {
        rep.vacuous("weight_fit", "no sample above the threshold");
    } else {
        rep.check("weight_fit", num(fit.k), num(max_k), fit.k <= max_k);
    }
    Ok(())
}

fn restricted(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let m = cfg.usize("m", 1)?;
    let n = cfg.usize("n", 1)?;
    let t = cfg.u32("t", 2)?;
    let big_m = cfg.f64("big_m", 128.0)?;
    let steps = cfg.usize("steps", 4)?;
    let trials = cfg.u64("trials", 20_000)?;
    let seed = cfg.u64("seed", 1)?;
    let x = lattice(cfg, m + n, "cusp:8")?;
    let params = MargulisParams::new(m, n, t)?;
    rep.set_columns(&["steps", "integral", "std_error", "survivors"]);
    if trials == 0 || steps < 2 {
        rep.vacuous("restricted_integral_slope", "0 trials or fewer than two steps");
        return Ok(());
    }
    let r = check_restricted_decay(&x, &params, big_m, steps, trials, seed)?;
    let lq = (x.field().q() as f64).ln();
    for row in &r.rows {
        rep.row(vec![
            row.n_steps.to_string(),
            row.integral.mean.to_string(),
            row.integral.std_error.to_string(),
            row.survivors.to_string(),
        ]);
    }
    rep.plot("restricted_integral", r.rows.iter().map(|row| (row.n_steps as f64, row.integral.mean.ln() / lq)).collect());
    rep.fitted("slope", num(r.slope));
    if r.vacuous {
        rep.vacuous("restricted_integral_slope", "integral vanished");
    } else {
        rep.check("restricted_integral_slope", num(r.slope), num(r.target), r.pass);
    }
    Ok(())
}
