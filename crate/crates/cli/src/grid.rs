//! Parsers for the small value languages used on the command line.

use std::collections::BTreeMap;

use otconc::{Distribution, Point, RadialCost};

use crate::error::{usage, CliResult};

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<T> {
    s.trim()
        .parse()
        .map_err(|_| usage(format!("{what}: cannot parse '{s}'")))
}

/// "a", "a:b" or "a:b:s" segments joined by commas; result is sorted and deduplicated.
pub fn parse_n_grid(text: &str) -> CliResult<Vec<usize>> {
    let mut out = Vec::new();
    for seg in text.split(',') {
        let parts: Vec<&str> = seg.split(':').collect();
        match parts.as_slice() {
            [a] => out.push(parse_num(a, "N grid")?),
            [a, b] | [a, b, _] => {
                let (lo, hi): (usize, usize) = (parse_num(a, "N grid")?, parse_num(b, "N grid")?);
                let step: usize = if parts.len() == 3 {
                    parse_num(parts[2], "N grid")?
                } else {
                    1
                };
                if step == 0 || lo > hi {
                    return Err(usage(format!("N grid: bad range '{seg}'")));
                }
                out.extend((lo..=hi).step_by(step));
            }
            _ => return Err(usage(format!("N grid: bad segment '{seg}'"))),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Real values, with "lo:hi:step" ranges; range points are rounded to 12
/// decimals so 0.1 steps land on the decimal values.
pub fn parse_x_grid(text: &str) -> CliResult<Vec<f64>> {
    let snap = |v: f64| {
        format!("{v:.12}")
            .parse::<f64>()
            .expect("formatted float parses")
    };
    let mut out: Vec<f64> = Vec::new();
    for seg in text.split(',') {
        let parts: Vec<&str> = seg.split(':').collect();
        match parts.as_slice() {
            [a] => out.push(parse_num(a, "x grid")?),
            [a, b, s] => {
                let (lo, hi, step): (f64, f64, f64) = (
                    parse_num(a, "x grid")?,
                    parse_num(b, "x grid")?,
                    parse_num(s, "x grid")?,
                );
                if !(step > 0.0) || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(usage(format!("x grid: bad range '{seg}'")));
                }
                let count = ((hi - lo) / step + 1e-9).floor() as usize;
                out.extend((0..=count).map(|i| snap(lo + i as f64 * step)));
            }
            _ => {
                return Err(usage(format!(
                    "x grid: '{seg}' must be a value or lo:hi:step"
                )))
            }
        }
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(usage("x grid values must be finite"));
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// `k=v` pairs separated by commas or semicolons.
fn parse_params(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for pair in text
        .split([',', ';'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
    {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| usage(format!("params: expected k=v, got '{pair}'")))?;
        if map
            .insert(k.trim().to_string(), v.trim().to_string())
            .is_some()
        {
            return Err(usage(format!("params: '{k}' given twice")));
        }
    }
    Ok(map)
}

struct Params(BTreeMap<String, String>);

impl Params {
    fn take<T: std::str::FromStr>(&mut self, key: &str, default: Option<T>) -> CliResult<T> {
        match self.0.remove(key) {
            Some(v) => parse_num(&v, key),
            None => default.ok_or_else(|| usage(format!("params: missing '{key}'"))),
        }
    }

    fn finish(self, dist: &str) -> CliResult<()> {
        match self.0.keys().next() {
            Some(k) => Err(usage(format!("params: '{k}' does not apply to {dist}"))),
            None => Ok(()),
        }
    }
}

pub const DIST_NAMES: &str = "gaussian, geometric, poisson, weibull, uniform-ball, point-mass";

pub fn parse_dist(name: &str, params: &str) -> CliResult<Distribution> {
    let mut ps = Params(parse_params(params)?);
    let dist = match name {
        "gaussian" => Distribution::gaussian(ps.take("sigma", Some(1.0))?, ps.take("d", Some(1))?)?,
        "geometric" => Distribution::geometric(ps.take("q", None)?)?,
        "poisson" => Distribution::poisson(ps.take("lambda", None)?)?,
        "weibull" => Distribution::weibull(ps.take("c", None)?)?,
        "uniform-ball" => {
            Distribution::uniform_ball(ps.take("R", Some(1.0))?, ps.take("d", Some(1))?)?
        }
        "point-mass" => {
            let at: String = ps.take("x", Some("0".to_string()))?;
            let coords = at
                .split(':')
                .map(|c| parse_num(c, "x"))
                .collect::<CliResult<Vec<f64>>>()?;
            Distribution::point_mass(Point::new(coords)?)
        }
        _ => {
            return Err(usage(format!(
                "unknown distribution '{name}'; expected one of {DIST_NAMES}"
            )))
        }
    };
    ps.finish(name)?;
    Ok(dist)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum CostKind {
    Power,
    Exp,
}

pub fn parse_cost(kind: CostKind, p: f64, a: Option<f64>) -> CliResult<RadialCost> {
    Ok(match (kind, a) {
        (CostKind::Power, None) => RadialCost::power(p)?,
        (CostKind::Power, Some(_)) => return Err(usage("--a only applies to --cost exp")),
        (CostKind::Exp, Some(a)) => RadialCost::exponential(p, a)?,
        (CostKind::Exp, None) => return Err(usage("--cost exp needs --a")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_grids() {
        assert_eq!(parse_n_grid("1:5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_n_grid("10:30:10,1,20").unwrap(), vec![1, 10, 20, 30]);
        assert!(parse_n_grid("5:1").is_err());
        assert!(parse_n_grid("1:4:0").is_err());
        assert!(parse_n_grid("x").is_err());
    }

    #[test]
    fn x_grids_snap_to_decimals() {
        let xs = parse_x_grid("0.2:1.0:0.1").unwrap();
        assert_eq!(xs.len(), 9);
        assert_eq!(xs[1], 0.3);
        assert_eq!(xs[8], 1.0);
        assert!(parse_x_grid("0:1").is_err());
    }

    #[test]
    fn distributions() {
        assert_eq!(
            parse_dist("gaussian", "").unwrap(),
            Distribution::gaussian(1.0, 1).unwrap()
        );
        assert_eq!(
            parse_dist("gaussian", "sigma=2,d=3").unwrap(),
            Distribution::gaussian(2.0, 3).unwrap()
        );
        assert_eq!(
            parse_dist("point-mass", "x=0.5:-2").unwrap(),
            Distribution::point_mass(Point::new(vec![0.5, -2.0]).unwrap())
        );
        assert!(parse_dist("gaussian", "lambda=1").is_err());
        assert!(parse_dist("poisson", "").is_err());
        assert!(parse_dist("cauchy", "").is_err());
    }
}
