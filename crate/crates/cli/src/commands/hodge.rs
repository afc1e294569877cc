use fqdyn::dynamics::{duality_flow_check, FlowSpec};
use fqdyn::exterior::subsets;
use fqdyn::measure::{monte_carlo, sample_truncated_block};
use fqdyn::seed::derive_seed;
use fqdyn::{pu_factor, Field, KMatrix, Laurent, SubsetIndex, WedgeVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::Report;
use crate::sample::{elementary_sl, random_wedge, same, same_wedge};

fn signed(negative: bool, x: Laurent) -> Laurent {
    if negative {
        x.neg()
    } else {
        x
    }
}

/// Number of failing trials of `f` out of `trials`.
fn failures<F>(trials: u64, seed: u64, f: F) -> Result<u64, CliError>
where
    F: Fn(&mut ChaCha8Rng) -> fqdyn::Result<bool> + Sync,
{
    Ok(monte_carlo(trials, seed, |r| f(r))?.into_iter().filter(|ok| !ok).count() as u64)
}

fn pick_degree(d_max: usize, r: &mut impl Rng) -> (usize, usize) {
    let d = r.random_range(2..=d_max);
    (d, r.random_range(1..d))
}

/// Minors of g against complementary minors of ᵗg^{-1}, with the Hodge signs.
fn jacobi_holds(g: &KMatrix) -> fqdyn::Result<bool> {
    let d = g.rows();
    let gi_t = g.inverse()?.transpose();
    for i in 1..d {
        for jm in subsets(d, i) {
            for im in subsets(d, i) {
                let (jj, ii) = (SubsetIndex::from_mask(d, jm), SubsetIndex::from_mask(d, im));
                let lhs = g.minor(&jj, &ii)?;
                let rhs = gi_t.minor(&jj.complement(), &ii.complement())?;
                if !same(&lhs, &signed(ii.hodge_sign_negative() != jj.hodge_sign_negative(), rhs)) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// *(A e_1) against A(*e_1) for A = [[1, 1], [0, 1]]; they must differ.
fn counterexample(f: Field) -> fqdyn::Result<bool> {
    let (one, zero) = (Laurent::one(f), Laurent::zero(f));
    let a = KMatrix::new(f, 2, 2, vec![one.clone(), one.clone(), zero, one])?;
    let e1 = WedgeVector::basis(f, &SubsetIndex::new(2, vec![1])?);
    Ok(e1.apply(&a)?.hodge() != e1.hodge().apply(&a)?)
}

pub fn verify_hodge(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let f = cfg.field()?;
    let d_max = cfg.usize("d_max", 4)?;
    let trials = cfg.u64("trials", 10_000)?;
    let jacobi_trials = cfg.u64("jacobi_trials", 1_000)?;
    let seed = cfg.u64("seed", 1)?;
    if !(2..=6).contains(&d_max) {
        return Err(CliError::Usage("d_max must lie in 2..=6".into()));
    }
    rep.set_columns(&["check", "instances", "failures", "pass"]);
    let record = |rep: &mut Report, name: &str, n: u64, bad: u64| {
        rep.row(vec![name.into(), n.to_string(), bad.to_string(), (bad == 0).to_string()]);
        if n == 0 {
            rep.vacuous(name, "0 instances");
        } else {
            rep.check(name, bad.into(), 0.into(), bad == 0);
        }
    };

    let bad = failures(trials, derive_seed(seed, 0), |r| {
        let (d, i) = pick_degree(d_max, r);
        let v = random_wedge(f, d, i, r);
        Ok(v.hodge().sup_norm()? == v.sup_norm()?)
    })?;
    record(rep, "hodge_norm", trials, bad);

    let bad = failures(trials, derive_seed(seed, 1), |r| {
        let (d, i) = pick_degree(d_max, r);
        let v = random_wedge(f, d, i, r);
        let g = elementary_sl(f, d, 2 * d, -1, 1, r);
        let lhs = v.apply(&g)?.hodge();
        let rhs = v.hodge().apply(&g.inverse()?.transpose())?;
        Ok(same_wedge(&lhs, &rhs))
    })?;
    record(rep, "hodge_contragredient", trials, bad);

    let bad = failures(trials, derive_seed(seed, 2), |r| {
        let (d, i) = pick_degree(d_max, r);
        let v = random_wedge(f, d, i, r);
        let sign = signed((i * (d - i)) % 2 == 1, Laurent::one(f));
        Ok(same_wedge(&v.hodge().hodge(), &v.scale(&sign)?))
    })?;
    record(rep, "double_dual", trials, bad);

    let bad = failures(jacobi_trials, derive_seed(seed, 3), |r| jacobi_holds(&elementary_sl(f, 4, 8, 0, 2, r)))?;
    record(rep, "jacobi_sl4", jacobi_trials, bad);

    let differs = counterexample(f)?;
    rep.row(vec!["hodge_counterexample".into(), "1".into(), u64::from(!differs).to_string(), differs.to_string()]);
    rep.check("hodge_counterexample", serde_json::Value::Bool(differs), serde_json::Value::Bool(true), differs);

    let bad = failures(trials, derive_seed(seed, 4), |r| {
        // x ≡ I mod π with det 1
        let x = elementary_sl(f, 3, 6, 1, 3, r);
        let (p, u) = pu_factor(&x, 2, 1)?;
        Ok(p.mul(&u)?.entries().iter().zip(x.entries()).all(|(a, b)| same(a, b)))
    })?;
    record(rep, "pu_factor", trials, bad);

    let spec = FlowSpec::new(2, 1, 1)?;
    let bad = failures(trials, derive_seed(seed, 5), |r| {
        let i = r.random_range(1..3);
        let w = random_wedge(f, 3, i, r);
        let s = sample_truncated_block(f, 1, 2, 4, r);
        duality_flow_check(&w, &s, &spec)
    })?;
    record(rep, "duality_flow", trials, bad);
    Ok(())
}
