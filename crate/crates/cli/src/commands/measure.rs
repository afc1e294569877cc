use fqdyn::laurent::q_pow;
use fqdyn::measure::{
    max_feasible_depth, neg_moment, rat_f64, step0_product, truncated_neg_moment, verify_bound_d, verify_bound_e,
    QuotientMatrixSpace, ValuationEvent, ValuationHistogram, DEFAULT_CAP,
};
use num_rational::{BigRational, Rational64};
use num_traits::One;

use super::rat_cells;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{num, Report};

struct Row<'a> {
    check: &'a str,
    d: usize,
    i: usize,
    level: String,
    value: &'a BigRational,
    bound: Option<&'a BigRational>,
    pass: bool,
}

fn push(rep: &mut Report, r: Row) {
    let [vn, vd] = rat_cells(r.value);
    let (bound, ratio) = match r.bound {
        Some(b) if !num_traits::Zero::is_zero(b) => (rat_f64(b).to_string(), (rat_f64(r.value) / rat_f64(b)).to_string()),
        Some(b) => (rat_f64(b).to_string(), String::new()),
        None => (String::new(), String::new()),
    };
    rep.row(vec![
        r.check.into(),
        r.d.to_string(),
        r.i.to_string(),
        r.level,
        "exact".into(),
        vn,
        vd,
        rat_f64(r.value).to_string(),
        bound,
        ratio,
        r.pass.to_string(),
    ]);
}

/// All profiles in {0..=max}^len.
fn profiles(len: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|p| (0..=max).map(move |x| [p.clone(), vec![x]].concat())).collect();
    }
    out
}

pub fn verify_measure(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let f = cfg.field()?;
    let q = f.q();
    let d_max = cfg.usize("d_max", 3)?;
    let ell_max = cfg.u32("ell_max", 3)?;
    let cap = cfg.cap(DEFAULT_CAP)?;
    let profile_max = cfg.u32("profile_max", 2)?;
    let tail_depth = cfg.u32("tail_depth", 20)?;
    let beta: Rational64 = cfg.string("beta", "1").parse().map_err(|_| CliError::Usage("beta must be a rational a/b".into()))?;
    let kappa_max = cfg.u32("kappa_max", 6)?;
    if !(1..=8).contains(&d_max) || ell_max == 0 || kappa_max == 0 {
        return Err(CliError::Usage("need 1 <= d_max <= 8, ell_max >= 1 and kappa_max >= 1".into()));
    }
    rep.set_columns(&["check", "d", "i", "level", "method", "value_num", "value_den", "value", "bound", "ratio", "pass"]);

    // volumes of the balls π^ℓ O^d
    let mut bad = 0;
    for d in 1..=d_max {
        let h = ValuationHistogram::compute(&QuotientMatrixSpace::new(f, d, 1, ell_max)?.with_cap(cap))?;
        for ell in 1..=ell_max {
            let m = h.measure(&ValuationEvent::E(ell))?;
            let expect = q_pow(q, -(ell as i64) * d as i64);
            let pass = m == expect;
            bad += usize::from(!pass);
            push(rep, Row { check: "ball_volume", d, i: 1, level: ell.to_string(), value: &m, bound: Some(&expect), pass });
        }
    }
    rep.check("ball_volume_mismatches", bad.into(), 0.into(), bad == 0);

    if d_max >= 2 {
        // complement of GL_2(F_q) in M_2(F_q)
        let h = ValuationHistogram::compute(&QuotientMatrixSpace::new(f, 2, 2, 1)?.with_cap(cap))?;
        let m = h.measure(&ValuationEvent::E(1))?;
        let qq = BigRational::from_integer((q as i64).into());
        let gl = (&qq * &qq - BigRational::one()) * (&qq * &qq - &qq) / qq.pow(4);
        let expect = BigRational::one() - gl;
        let pass = m == expect;
        push(rep, Row { check: "singular_mod_pi", d: 2, i: 2, level: "1".into(), value: &m, bound: Some(&expect), pass });
        rep.check("singular_mod_pi_2x2", num(rat_f64(&m)), num(rat_f64(&expect)), pass);
    }

    let mut bad = 0;
    for d in 1..=d_max {
        let ps = profiles(d, profile_max);
        let r = verify_bound_d(f, d, 1, &ps, cap)?;
        for row in &r.rows {
            let expect = step0_product(q, &row.profile);
            let pass = row.measure == expect;
            bad += usize::from(!pass);
            let level = row.profile.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
            push(rep, Row { check: "step0_product", d, i: 1, level, value: &row.measure, bound: Some(&expect), pass });
        }
        rep.fitted(format!("d_bound_c_d{d}_i1"), num(rat_f64(&r.fitted_c)));
    }
    rep.check("step0_product_mismatches", bad.into(), 0.into(), bad == 0);

    for d in 2..=d_max {
        for i in 1..=d {
            let depth = ell_max.min(max_feasible_depth(q, d, i, cap));
            if depth == 0 {
                return Err(CliError::Infeasible(format!("E bound for d={d} i={i}: no depth fits the cap {cap}")));
            }
            if depth < ell_max {
                rep.note(format!("E bound d={d} i={i} stops at level {depth} (cap {cap})"));
            }
            let r = verify_bound_e(f, d, i, depth, cap)?;
            let bound = &r.rows[0].ratio * BigRational::from_integer(4.into());
            for row in &r.rows {
                let pass = row.ratio <= bound;
                push(rep, Row { check: "e_bound_ratio", d, i, level: row.ell.to_string(), value: &row.ratio, bound: Some(&bound), pass });
            }
            let name = format!("d{d}_i{i}");
            rep.check(format!("e_bound_{name}"), num(rat_f64(&r.sup)), num(rat_f64(&bound)), r.sup <= bound);
            rep.fitted(format!("c2_{name}"), num(rat_f64(&r.sup)));
            let lq = (q as f64).ln();
            rep.plot(format!("e_bound_{name}"), r.rows.iter().map(|x| (x.ell as f64, rat_f64(&x.measure).ln() / lq)).collect());
        }
    }

    if d_max >= 2 {
        let m = neg_moment(f, 2, 1, beta, tail_depth, cap)?;
        let qf = q as f64;
        let b = *beta.numer() as f64 / *beta.denom() as f64;
        if m.divergent {
            rep.note(format!("negative moment of order {beta} diverges for d=2, i=1"));
            rep.check("neg_moment_d2_i1", serde_json::Value::String("divergent".into()), num(f64::INFINITY), true);
        } else {
            // level ℓ has mass (1 - q^{-d}) q^{-ℓd}
            let closed = (1.0 - qf.powi(-2)) / (1.0 - qf.powf(b - 2.0));
            let upper = m.upper.unwrap_or(f64::INFINITY);
            let width = upper - m.lower;
            let pass = m.lower <= closed && closed <= upper && width < 1e-3;
            if let Some((lo, hi)) = &m.exact {
                rep.row(vec![
                    "neg_moment_lower".into(), "2".into(), "1".into(), tail_depth.to_string(), "exact".into(),
                    lo.numer().to_string(), lo.denom().to_string(), rat_f64(lo).to_string(), closed.to_string(), String::new(), pass.to_string(),
                ]);
                if let Some(hi) = hi {
                    rep.row(vec![
                        "neg_moment_upper".into(), "2".into(), "1".into(), tail_depth.to_string(), "exact".into(),
                        hi.numer().to_string(), hi.denom().to_string(), rat_f64(hi).to_string(), closed.to_string(), String::new(), pass.to_string(),
                    ]);
                }
            }
            rep.check("neg_moment_d2_i1_width", num(width), num(1e-3), pass);
            rep.fitted("neg_moment_d2_i1_lower", num(m.lower));
            rep.fitted("neg_moment_d2_i1_upper", num(upper));
            rep.plot("neg_moment_partial_sums", m.partial_sums.iter().enumerate().map(|(l, &s)| (l as f64, s)).collect());
        }

        for (d, i) in [(2usize, 1usize), (2, 2)] {
            let top = kappa_max.min(max_feasible_depth(q, d, i, cap));
            if top < kappa_max {
                rep.note(format!("truncated moment d={d} i={i} stops at kappa {top} (cap {cap})"));
            }
            let mut worst = 0.0f64;
            let mut c2 = 0.0;
            let mut pts = Vec::new();
            for kappa in 1..=top {
                let tm = truncated_neg_moment(f, d, i, kappa, cap)?;
                let bound = &tm.bound * BigRational::new(3.into(), 2.into());
                let pass = tm.value <= bound;
                push(rep, Row { check: "truncated_moment", d, i, level: kappa.to_string(), value: &tm.value, bound: Some(&bound), pass });
                worst = worst.max(rat_f64(&tm.value) / rat_f64(&tm.bound));
                c2 = rat_f64(&tm.c2);
                pts.push((kappa as f64, rat_f64(&tm.value) / kappa as f64));
            }
            if top == 0 {
                rep.vacuous(format!("truncated_moment_d{d}_i{i}"), "no feasible kappa");
                continue;
            }
            // value / (C_2 κ) <= 3/2
            rep.check(format!("truncated_moment_d{d}_i{i}"), num(worst), num(1.5), worst <= 1.5);
            rep.fitted(format!("truncated_moment_c2_d{d}_i{i}"), num(c2));
            rep.plot(format!("truncated_moment_d{d}_i{i}"), pts);
        }
    }
    Ok(())
}
