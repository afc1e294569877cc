mod covering;
mod dani;
mod hodge;
mod measure;
mod contraction;

use fqdyn::contfrac::periodic_cf;
use fqdyn::{lift_rational, Field, KMatrix, Laurent, Poly, PolyLattice};
use num_rational::BigRational;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::Report;

pub use contraction::contraction;
pub use covering::{covering, dim_estimate};
pub use dani::{dani_scan, trajectory};
pub use hodge::verify_hodge;
pub use measure::verify_measure;

/// Lattice from `standard`, `cusp:K` (diag(π^{-K}, 1, ..., 1, π^K)) or
/// `diag:e_1,...,e_d` (π exponents summing to zero).
pub fn parse_lattice(f: Field, d: usize, text: &str) -> Result<PolyLattice, CliError> {
    let bad = || CliError::Usage(format!("bad lattice `{text}`"));
    let exps: Vec<i64> = match text.split_once(':') {
        None if text == "standard" => vec![0; d],
        Some(("cusp", k)) => {
            let k: i64 = k.trim().parse().map_err(|_| bad())?;
            let mut e = vec![0; d];
            e[0] = -k;
            e[d - 1] += k;
            e
        }
        Some(("diag", list)) => list.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?,
        _ => return Err(bad()),
    };
    if exps.len() != d || exps.iter().sum::<i64>() != 0 {
        return Err(CliError::Usage(format!("lattice `{text}` needs {d} exponents summing to zero")));
    }
    Ok(PolyLattice::new(KMatrix::diag_pi(f, &exps))?)
}

fn parse_poly(f: Field, text: &str) -> Result<Poly, CliError> {
    let text = text.trim();
    let text = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')).unwrap_or(text);
    Ok(Poly::from_laurent(&Laurent::parse(f, text)?)?)
}

/// One entry of s: a Laurent expression, a rational `A/B` of polynomials
/// in T, or a periodic continued fraction `cf(a_0 | p_1, p_2, ...)`.
pub fn parse_entry(f: Field, text: &str, precision: i64) -> Result<Laurent, CliError> {
    let text = text.trim();
    if let Some(body) = text.strip_prefix("cf(").and_then(|b| b.strip_suffix(')')) {
        let (a0, period) = body.split_once('|').ok_or_else(|| CliError::Usage(format!("bad continued fraction `{text}`")))?;
        let period = period.split(',').map(|p| parse_poly(f, p)).collect::<Result<Vec<_>, _>>()?;
        return Ok(periodic_cf(&parse_poly(f, a0)?, &period, precision)?);
    }
    if let Some((a, b)) = text.split_once('/') {
        return Ok(lift_rational(&parse_poly(f, a)?, &parse_poly(f, b)?, precision)?);
    }
    Ok(Laurent::parse(f, text)?)
}

/// m×n matrix from `;`-separated entries in row-major order.
pub fn parse_s(f: Field, m: usize, n: usize, text: &str, precision: i64) -> Result<KMatrix, CliError> {
    let entries = text.split(';').map(|e| parse_entry(f, e, precision)).collect::<Result<Vec<_>, _>>()?;
    if entries.len() != m * n {
        return Err(CliError::Usage(format!("s needs {} entries, got {}", m * n, entries.len())));
    }
    Ok(KMatrix::new(f, m, n, entries)?)
}

pub fn rat_cells(r: &BigRational) -> [String; 2] {
    [r.numer().to_string(), r.denom().to_string()]
}

pub fn dispatch(command: &str, cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    match command {
        "verify-measure" => verify_measure(cfg, rep),
        "verify-hodge" => verify_hodge(cfg, rep),
        "contraction" => contraction(cfg, rep),
        "trajectory" => trajectory(cfg, rep),
        "dani-scan" => dani_scan(cfg, rep),
        "covering" => covering(cfg, rep),
        "dim-estimate" => dim_estimate(cfg, rep),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries() {
        let f = Field::prime(2).unwrap();
        let x = parse_entry(f, "1/(T+1)", 20).unwrap();
        // 1/(T+1) = π + π^2 + ... in characteristic 2
        assert_eq!(x.coeff(1), 1);
        assert_eq!(x.coeff(5), 1);
        assert_eq!(x.precision(), Some(20));
        assert_eq!(parse_entry(f, "1/T+1", 20).unwrap(), x);
        let g = parse_entry(f, "cf(T | T)", 30).unwrap();
        assert_eq!(g.coeff(-1), 1);
        assert_eq!(parse_entry(f, "T^-2", 10).unwrap(), Laurent::pi_pow(f, 2));
        let s = parse_s(f, 1, 2, "0; π", 10).unwrap();
        assert_eq!(s.cols(), 2);
        assert!(parse_s(f, 1, 1, "0;0", 10).is_err());
    }

    #[test]
    fn lattices() {
        let f = Field::prime(2).unwrap();
        let x = parse_lattice(f, 2, "cusp:3").unwrap();
        assert_eq!(x.alpha_exponents().unwrap()[1], 3);
        assert!(parse_lattice(f, 3, "diag:1,1,1").is_err());
        assert!(parse_lattice(f, 2, "round").is_err());
        assert_eq!(parse_lattice(f, 3, "standard").unwrap().alpha_exponents().unwrap(), vec![0, 0, 0, 0]);
    }
}
