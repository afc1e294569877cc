use fqdyn::dynamics::{box_dimension_estimate, covering_measure, escape_count, measure_z};
use fqdyn::margulis::MargulisParams;
use fqdyn::measure::{rat_f64, DEFAULT_CAP};
use fqdyn::PolyLattice;

use super::{parse_lattice, rat_cells};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{num, Report};

struct Setup {
    x: PolyLattice,
    params: MargulisParams,
    big_m: f64,
    steps: usize,
    cap: u128,
}

fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let f = cfg.field()?;
    let m = cfg.usize("m", 1)?;
    let n = cfg.usize("n", 1)?;
    let t = cfg.u32("t", 1)?;
    let steps = cfg.usize("steps", 4)?;
    let big_m = cfg.f64("big_m", 3.0)?;
    let cap = cfg.cap(DEFAULT_CAP)?;
    if t == 0 || steps == 0 {
        return Err(CliError::Usage("t and steps must be positive".into()));
    }
    let x = parse_lattice(f, m + n, &cfg.string("lattice", "standard"))?;
    Ok(Setup { x, params: MargulisParams::new(m, n, t)?, big_m, steps, cap })
}

pub fn covering(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let st = setup(cfg)?;
    let delta = cfg.f64("delta", 1.0)?;
    let trials = cfg.u64("trials", 2_000)?;
    let seed = cfg.u64("seed", 1)?;
    if !(0.0..=1.0).contains(&delta) {
        return Err(CliError::Usage("delta must lie in [0, 1]".into()));
    }
    let q = st.x.field().q();
    let lq = (q as f64).ln();
    rep.set_columns(&["steps", "radius_exp", "count", "measure_num", "measure_den", "measure"]);
    let p = &st.params;
    let mut measures = Vec::new();
    let mut pts = Vec::new();
    for nn in 1..=st.steps {
        let count = escape_count(&st.x, p, st.big_m, nn, delta, st.cap)?;
        let mu = covering_measure(count, q, p, nn);
        let radius_exp = ((p.m + p.n) as u64 * p.t as u64 * nn as u64) as f64;
        let [a, b] = rat_cells(&mu);
        rep.row(vec![nn.to_string(), radius_exp.to_string(), count.to_string(), a, b, rat_f64(&mu).to_string()]);
        if count > 0 {
            pts.push((radius_exp, (count as f64).ln() / lq));
        }
        measures.push(mu);
    }
    rep.plot("covering_count", pts);
    let last = measures.last().expect("steps >= 1");
    rep.fitted("measure", num(rat_f64(last)));
    if delta == 1.0 {
        // Z_x(M, N, t) shrinks as N grows
        let ok = measures.windows(2).all(|w| w[1] <= w[0]);
        rep.check("measure_nonincreasing", serde_json::Value::Bool(ok), serde_json::Value::Bool(true), ok);
        if trials > 0 {
            let mc = measure_z(&st.x, p, st.big_m, st.steps, trials, seed)?;
            let exact = rat_f64(last);
            let tol = 4.0 * mc.std_error().max((exact * (1.0 - exact) / trials as f64).sqrt()) + 1e-12;
            rep.fitted("measure_monte_carlo", num(mc.value));
            rep.check("monte_carlo_agrees", num(mc.value), num(exact), (mc.value - exact).abs() <= tol);
        } else {
            rep.vacuous("monte_carlo_agrees", "0 trials");
        }
    }
    Ok(())
}

pub fn dim_estimate(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let st = setup(cfg)?;
    let mut deltas = cfg.f64_list("deltas", "0,0.5,1")?;
    let slack = cfg.f64("slack", 0.35)?;
    if deltas.iter().any(|d| !(0.0..=1.0).contains(d)) {
        return Err(CliError::Usage("deltas must lie in [0, 1]".into()));
    }
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    rep.set_columns(&["delta", "steps", "radius_exp", "count", "slope", "target"]);
    let ns: Vec<usize> = (1..=st.steps).collect();
    let mut by_delta = Vec::new();
    for &delta in &deltas {
        let rows = box_dimension_estimate(&st.x, &st.params, st.big_m, delta, &ns, st.cap)?;
        for r in &rows {
            rep.row(vec![
                delta.to_string(),
                r.n_steps.to_string(),
                r.radius_exp.to_string(),
                r.count.to_string(),
                r.slope.to_string(),
                r.target.to_string(),
            ]);
        }
        let target = rows[0].target;
        let worst = rows.iter().map(|r| r.slope).fold(f64::NEG_INFINITY, f64::max);
        rep.check(format!("box_slope_delta_{delta}"), num(worst), num(target + slack), worst <= target + slack);
        rep.fitted(format!("target_delta_{delta}"), num(target));
        rep.fitted(format!("slope_delta_{delta}"), num(rows.last().expect("steps >= 1").slope));
        rep.plot(format!("box_slope_delta_{delta}"), rows.iter().map(|r| (r.n_steps as f64, r.slope)).collect());
        by_delta.push(rows);
    }
    // at each N the slope must not grow with δ
    let mut bad = Vec::new();
    for k in 0..ns.len() {
        for w in by_delta.windows(2) {
            if w[1][k].slope > w[0][k].slope + 1e-12 {
                bad.push(ns[k]);
            }
        }
    }
    if deltas.len() >= 2 {
        let ok = bad.is_empty();
        rep.check("slope_nonincreasing_in_delta", bad.len().into(), 0.into(), ok);
        if !ok {
            rep.note(format!("slope grows with delta at steps {bad:?}"));
        }
    }
    Ok(())
}
