use fqdyn::dynamics::{dani_scan as scan, dani_verdict, divergence_verdict, escape_fraction, trajectory as orbit, FlowSpec, Verdict};
use fqdyn::margulis::MargulisParams;
use fqdyn::Poly;
use serde_json::{json, Value};

use super::{parse_lattice, parse_s};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{num, Report};

fn coeffs(p: &[Poly]) -> Value {
    json!(p.iter().map(|x| x.coeffs().to_vec()).collect::<Vec<_>>())
}

fn coeff_cell(p: &[Poly]) -> String {
    p.iter()
        .map(|x| x.coeffs().iter().map(u8::to_string).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join(" | ")
}

pub fn trajectory(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let f = cfg.field()?;
    let qf = f.q() as f64;
    let m = cfg.usize("m", 1)?;
    let n = cfg.usize("n", 1)?;
    let t = cfg.i64("t", 1)?;
    let steps = cfg.usize("steps", 20)?;
    let spec = FlowSpec::new(m, n, t)?;
    let need = spec.block_depth() * steps as i64;
    let precision = cfg.i64("precision", need + 16)?;
    let s = parse_s(f, m, n, &cfg.string("s", "0"), precision)?;
    let x = parse_lattice(f, m + n, &cfg.string("lattice", "standard"))?;
    let big_m = cfg.f64("big_m", qf.powi(10))?;
    let m_div = cfg.f64("m_div", qf.powi(10))?;
    let params = MargulisParams::new(m, n, t.try_into().map_err(|_| CliError::Usage("t must be positive".into()))?)?;
    let d = m + n;
    let mut cols = vec!["step".to_string()];
    cols.extend((1..d).map(|k| format!("log_q_alpha_{k}")));
    cols.extend(["alpha_tilde".to_string(), "in_compact".to_string()]);
    rep.columns = cols;

    let rec = orbit(&x, &s, &spec, steps, &params, big_m)?;
    for st in &rec.steps {
        let mut row = vec![st.step.to_string()];
        row.extend(st.alpha_exps[1..d].iter().map(i64::to_string));
        row.extend([st.alpha_tilde.to_string(), st.in_compact.to_string()]);
        rep.row(row);
    }
    let lq = qf.ln();
    rep.plot("alpha_tilde", rec.steps.iter().map(|s| (s.step as f64, s.alpha_tilde.ln() / lq)).collect());
    rep.plot("log_q_alpha_1", rec.steps.iter().map(|s| (s.step as f64, s.alpha_exps[1] as f64)).collect());
    let verdict = divergence_verdict(&rec, m_div);
    let (_, frac) = escape_fraction(&rec, 1.0);
    rep.fitted("escape_fraction", num(frac));
    rep.fitted("max_alpha_tilde", num(rec.alpha_tildes().into_iter().fold(0.0, f64::max)));
    let name = match verdict {
        Verdict::Divergent => "divergent",
        Verdict::Bounded => "bounded",
        Verdict::Borderline => "borderline",
    };
    match cfg.opt_string("expect") {
        Some(e) if ["divergent", "bounded", "borderline"].contains(&e.as_str()) => {
            rep.check("divergence_verdict", Value::String(name.into()), Value::String(e.clone()), e == name);
        }
        Some(e) => return Err(CliError::Usage(format!("expect must be divergent, bounded or borderline, got `{e}`"))),
        None => rep.note(format!("verdict: {name}")),
    }
    Ok(())
}

pub fn dani_scan(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let f = cfg.field()?;
    let m = cfg.usize("m", 1)?;
    let n = cfg.usize("n", 1)?;
    let precision = cfg.i64("precision", 64)?;
    let s = parse_s(f, m, n, &cfg.string("s", "0"), precision)?;
    let eps_exp = cfg.i64("eps_exp", -2)?;
    let t_max = cfg.u32("t_max", 10)?;
    let cap = cfg.cap(1 << 16)?;
    rep.set_columns(&["tau", "q_vec", "p", "defect_exp", "defect_is_bound", "passes"]);
    let ws = scan(&s, eps_exp, t_max, cap)?;
    let mut table = Vec::new();
    for w in &ws {
        let defect = w.defect_exp.map_or_else(|| "-inf".to_string(), |e| e.to_string());
        rep.row(vec![
            w.t_exp.to_string(),
            coeff_cell(&w.q_vec),
            coeff_cell(&w.p),
            defect,
            w.defect_is_bound.to_string(),
            w.passes.to_string(),
        ]);
        table.push(json!({
            "tau": w.t_exp,
            "q_vec": coeffs(&w.q_vec),
            "p": coeffs(&w.p),
            "defect_exp": w.defect_exp,
            "defect_is_bound": w.defect_is_bound,
            "passes": w.passes,
        }));
    }
    rep.tables.insert("dani".into(), Value::Array(table));
    rep.plot("defect", ws.iter().filter_map(|w| w.defect_exp.map(|e| (w.t_exp as f64, e as f64))).collect());
    let singular = dani_verdict(&ws);
    let name = if singular { "singular" } else { "nonsingular" };
    rep.fitted("passing_scales", ws.iter().filter(|w| w.passes).count().into());
    match cfg.opt_string("expect") {
        Some(e) if e == "singular" || e == "nonsingular" => {
            rep.check("dani_classification", Value::String(name.into()), Value::String(e.clone()), e == name);
        }
        Some(e) => return Err(CliError::Usage(format!("expect must be singular or nonsingular, got `{e}`"))),
        None => rep.note(format!("classification: {name}")),
    }
    Ok(())
}
