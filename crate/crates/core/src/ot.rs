//! Exact discrete optimal transport: the one-dimensional monotone coupling,
//! a transportation network simplex, a permutation brute force, and the
//! quantile integral between a continuous law on the line and a discrete one.

use itertools::Itertools;

use crate::costs::RadialCost;
use crate::error::{invalid, Error, Result};
use crate::measures::{distance, guarded, DiscreteMeasure, Distribution, Radial};
use crate::numeric::{integrate, integrate_lower, integrate_upper, sum_series, Series};

/// Largest combined atom count accepted by [`exact_ot`].
pub const MAX_ATOMS: usize = 4096;
/// Largest instance accepted by [`brute_force_ot`].
pub const MAX_BRUTE_FORCE: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Monotone,
    ExactLp,
    BruteForce,
}

/// A transport plan as `(source atom, target atom, mass)` triples with positive mass.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Coupling {
    pub entries: Vec<(usize, usize, f64)>,
}

impl Coupling {
    /// Largest deviation of the plan's marginals from the weights of `mu` and `nu`.
    pub fn marginal_error(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let mut rows = vec![0.0; mu.len()];
        let mut cols = vec![0.0; nu.len()];
        for &(i, j, m) in &self.entries {
            rows[i] += m;
            cols[j] += m;
        }
        let r = rows.iter().zip(mu.weights()).map(|(a, b)| (a - b).abs());
        let c = cols.iter().zip(nu.weights()).map(|(a, b)| (a - b).abs());
        r.chain(c).fold(0.0, f64::max)
    }

    /// Σ mass·f(|x_i − y_j|).
    pub fn cost(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &RadialCost) -> f64 {
        self.entries.iter().map(|&(i, j, m)| m * cost.eval(distance(mu.atom(i), nu.atom(j)))).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OtResult {
    pub cost: f64,
    pub coupling: Coupling,
    pub method: Method,
}

fn check_dims(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    Ok(())
}

/// North-west-corner coupling of the sorted atoms of two measures on the line.
/// Optimal for convex costs.
pub fn monotone_cost_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &RadialCost) -> Result<OtResult> {
    if mu.dim() != 1 || nu.dim() != 1 {
        return Err(Error::NotOneDimensional);
    }
    if !cost.is_convex() {
        return Err(Error::NonConvexCost);
    }
    let (a, b) = (mu.weights(), nu.weights());
    let mut entries = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0], b[0]);
    let mut total = 0.0;
    loop {
        let m = ra.min(rb);
        if m > 0.0 {
            entries.push((i, j, m));
            total += m * cost.eval((mu.atom(i)[0] - nu.atom(j)[0]).abs());
        }
        ra -= m;
        rb -= m;
        if i + 1 == a.len() && j + 1 == b.len() {
            break;
        }
        if (ra <= rb && i + 1 < a.len()) || j + 1 == b.len() {
            i += 1;
            ra += a[i];
        } else {
            j += 1;
            rb += b[j];
        }
    }
    Ok(OtResult { cost: total, coupling: Coupling { entries }, method: Method::Monotone })
}

/// Minimum over all N! assignments; equal atom counts N ≤ 7 with uniform weights.
pub fn brute_force_ot(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &RadialCost) -> Result<OtResult> {
    check_dims(mu, nu)?;
    let n = mu.len();
    let uniform = |m: &DiscreteMeasure| m.weights().iter().all(|w| (w * n as f64 - 1.0).abs() <= 1e-12);
    if n != nu.len() || n > MAX_BRUTE_FORCE || !uniform(mu) || !uniform(nu) {
        return Err(Error::UnsupportedShape(format!(
            "brute force needs equal counts N <= {MAX_BRUTE_FORCE} with uniform weights, got {} and {}",
            n,
            nu.len()
        )));
    }
    let c: Vec<f64> =
        (0..n).cartesian_product(0..n).map(|(i, j)| cost.eval(distance(mu.atom(i), nu.atom(j)))).collect();
    let (best, perm) = (0..n)
        .permutations(n)
        .map(|perm| {
            let s: f64 = perm.iter().enumerate().map(|(i, &j)| c[i * n + j]).sum();
            (s, perm)
        })
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .expect("at least one permutation");
    let w = 1.0 / n as f64;
    let entries = perm.into_iter().enumerate().map(|(i, j)| (i, j, w)).collect();
    Ok(OtResult { cost: best * w, coupling: Coupling { entries }, method: Method::BruteForce })
}

/// Exact optimal cost of the finite transport problem, by network simplex
/// with optimality certified through the recovered dual potentials.
pub fn exact_ot(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &RadialCost) -> Result<OtResult> {
    check_dims(mu, nu)?;
    let (n, m) = (mu.len(), nu.len());
    if n + m > MAX_ATOMS {
        return Err(Error::SizeLimit { atoms: n + m, limit: MAX_ATOMS });
    }
    let raw: Vec<f64> =
        (0..n).cartesian_product(0..m).map(|(i, j)| cost.eval(distance(mu.atom(i), nu.atom(j)))).collect();
    let max_finite = raw.iter().copied().filter(|c| c.is_finite()).fold(0.0, f64::max);
    let has_inf = raw.iter().any(|c| !c.is_finite());
    // Overflowed edges become a finite price that no optimal plan can afford.
    let min_weight = mu.weights().iter().chain(nu.weights()).copied().fold(1.0, f64::min);
    let sentinel = max_finite.max(1.0) * 1e6 / min_weight;
    let c: Vec<f64> = raw.iter().map(|&v| if v.is_finite() { v } else { sentinel }).collect();

    let flows = match simplex(mu.weights(), nu.weights(), &c) {
        Ok(f) => f,
        Err(_) => {
            let scale = c.iter().copied().fold(0.0, f64::max);
            if scale <= 0.0 {
                return Err(Error::SolverFailure("degenerate cost matrix".into()));
            }
            let scaled: Vec<f64> = c.iter().map(|v| v / scale).collect();
            simplex(mu.weights(), nu.weights(), &scaled).map_err(|e| {
                Error::SolverFailure(format!("{e} (cost range [0, {scale:e}], {n}x{m} atoms)"))
            })?
        }
    };
    let mut entries = Vec::with_capacity(n + m);
    let mut total = 0.0;
    for (i, j, f) in flows {
        if f > 0.0 {
            if has_inf && !raw[i * m + j].is_finite() && f > 1e-12 {
                return Err(Error::InfCost);
            }
            entries.push((i, j, f));
            total += f * raw[i * m + j];
        }
    }
    Ok(OtResult { cost: total, coupling: Coupling { entries }, method: Method::ExactLp })
}

/// Transportation simplex on a spanning-tree basis. Returns the basic cells
/// with their flows.
fn simplex(a: &[f64], b: &[f64], c: &[f64]) -> std::result::Result<Vec<(usize, usize, f64)>, String> {
    let (n, m) = (a.len(), b.len());
    let nodes = n + m;
    let scale = c.iter().copied().fold(1.0, f64::max);
    let price_tol = 1e-12 * scale;
    let certify_tol = 1e-9 * scale;

    // north-west-corner start: n + m − 1 cells forming a staircase tree
    let mut cells: Vec<(usize, usize)> = Vec::with_capacity(nodes - 1);
    let mut flow: Vec<f64> = Vec::with_capacity(nodes - 1);
    {
        let (mut ra, mut rb) = (a[0], b[0]);
        let (mut i, mut j) = (0, 0);
        loop {
            let x = ra.min(rb).max(0.0);
            cells.push((i, j));
            flow.push(x);
            ra -= x;
            rb -= x;
            if i + 1 == n && j + 1 == m {
                break;
            }
            if (ra <= rb && i + 1 < n) || j + 1 == m {
                i += 1;
                ra += a[i];
            } else {
                j += 1;
                rb += b[j];
            }
        }
    }

    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
    let mut parent = vec![usize::MAX; nodes];
    let mut parent_cell = vec![usize::MAX; nodes];
    let mut depth = vec![0usize; nodes];
    let mut pot = vec![0.0; nodes];
    let mut stack = Vec::with_capacity(nodes);
    let max_iter = 50 * n * m + 10_000;
    let mut degenerate_run = 0usize;

    for _ in 0..max_iter {
        // potentials u_i + v_j = c_ij along the tree, rooted at source 0
        adj.iter_mut().for_each(Vec::clear);
        for (k, &(i, j)) in cells.iter().enumerate() {
            adj[i].push((n + j, k));
            adj[n + j].push((i, k));
        }
        parent.fill(usize::MAX);
        parent[0] = 0;
        depth[0] = 0;
        pot[0] = 0.0;
        stack.clear();
        stack.push(0);
        let mut seen = 1;
        while let Some(u) = stack.pop() {
            for &(v, k) in &adj[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    parent_cell[v] = k;
                    depth[v] = depth[u] + 1;
                    let (i, j) = cells[k];
                    pot[v] = c[i * m + j] - pot[u];
                    stack.push(v);
                    seen += 1;
                }
            }
        }
        if seen != nodes {
            return Err("basis is not a spanning tree".into());
        }

        // pricing: Dantzig, or Bland's rule after a run of degenerate pivots
        let bland = degenerate_run >= 50;
        let mut entering = None;
        let mut best = -price_tol;
        'price: for i in 0..n {
            let row = &c[i * m..(i + 1) * m];
            for (j, &cij) in row.iter().enumerate() {
                let rc = cij - pot[i] - pot[n + j];
                if rc < best {
                    entering = Some((i, j));
                    if bland {
                        break 'price;
                    }
                    best = rc;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            let worst = (0..n)
                .flat_map(|i| (0..m).map(move |j| (i, j)))
                .map(|(i, j)| c[i * m + j] - pot[i] - pot[n + j])
                .fold(0.0, f64::min);
            if worst < -certify_tol {
                return Err(format!("reduced cost {worst:e} below tolerance"));
            }
            return Ok(cells.iter().zip(&flow).map(|(&(i, j), &f)| (i, j, f)).collect());
        };

        // cycle: entering cell, then the tree path from sink ej back to source ei
        let (mut u, mut v) = (n + ej, ei);
        let mut up_from_sink = Vec::new();
        let mut up_from_source = Vec::new();
        while depth[u] > depth[v] {
            up_from_sink.push(parent_cell[u]);
            u = parent[u];
        }
        while depth[v] > depth[u] {
            up_from_source.push(parent_cell[v]);
            v = parent[v];
        }
        while u != v {
            up_from_sink.push(parent_cell[u]);
            u = parent[u];
            up_from_source.push(parent_cell[v]);
            v = parent[v];
        }
        let path: Vec<usize> = up_from_sink.into_iter().chain(up_from_source.into_iter().rev()).collect();

        // path cells alternate −, +, −, ... starting at the sink
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for &k in path.iter().step_by(2) {
            let better = flow[k] < theta
                || (flow[k] == theta && bland && cell_index(cells[k], m) < cell_index(cells[leaving], m));
            if better {
                theta = flow[k];
                leaving = k;
            }
        }
        for (step, &k) in path.iter().enumerate() {
            if step % 2 == 0 {
                flow[k] -= theta;
            } else {
                flow[k] += theta;
            }
        }
        degenerate_run = if theta > 0.0 { 0 } else { degenerate_run + 1 };
        cells[leaving] = (ei, ej);
        flow[leaving] = theta;
    }
    Err(format!("no convergence within {max_iter} pivots"))
}

fn cell_index((i, j): (usize, usize), m: usize) -> usize {
    i * m + j
}

/// ∫₀¹ f(|Q_μ(u) − Q_ν(u)|) du for a law μ on the line and a discrete ν,
/// which is D_f(μ, ν) for convex f. `tol` is an absolute tolerance.
pub fn quantile_cost_semicontinuous(
    dist: &Distribution,
    nu: &DiscreteMeasure,
    cost: &RadialCost,
    tol: f64,
) -> Result<f64> {
    if dist.dim() != 1 || nu.dim() != 1 {
        return Err(Error::NotOneDimensional);
    }
    if !cost.is_convex() {
        return Err(Error::NonConvexCost);
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if let RadialCost::Exponential { p, a } = cost {
        if !dist.exp_moment_finite(*a, *p) {
            return Err(Error::Divergent(format!("{} cost has no finite mean under {}", cost.name(), dist.name())));
        }
    }
    let value = if let Some(atoms) = dist.atoms_1d() {
        atomic_quantile_cost(atoms, nu, cost)?
    } else {
        continuous_quantile_cost(dist, nu, cost, tol)?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Divergent(format!("{} cost against {}", cost.name(), dist.name())))
    }
}

fn continuous_quantile_cost(dist: &Distribution, nu: &DiscreteMeasure, cost: &RadialCost, tol: f64) -> Result<f64> {
    let n = nu.len();
    let seg_tol = tol / n as f64;
    let scale = dist.scale();
    let mut total = 0.0;
    let mut cum = 0.0;
    let mut lo = dist.quantile(0.0)?;
    for (k, (y, w)) in nu.atoms().enumerate() {
        let y = y[0];
        cum += w;
        let hi = if k + 1 == n { dist.quantile(1.0)? } else { dist.quantile(cum.min(1.0))? };
        if hi > lo {
            let f = |x: f64| guarded(cost.eval((x - y).abs()), dist.pdf(x).unwrap_or(0.0));
            let cut = y.clamp(lo, hi);
            total += piece(&f, lo, cut, scale, 0.5 * seg_tol) + piece(&f, cut, hi, scale, 0.5 * seg_tol);
        }
        lo = hi.max(lo);
    }
    Ok(total)
}

/// ∫_lo^hi with either end possibly infinite.
fn piece(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, scale: f64, tol: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => integrate(f, lo, hi, tol),
        (true, false) => integrate_upper(f, lo, scale, tol),
        (false, true) => integrate_lower(f, hi, scale, tol),
        (false, false) => integrate_lower(f, 0.0, scale, 0.5 * tol) + integrate_upper(f, 0.0, scale, 0.5 * tol),
    }
}

/// Exact mass merge of an atomic law (ascending atoms) with ν; whatever the
/// law puts beyond the point where ν is exhausted goes to ν's last atom,
/// summed as a series.
fn atomic_quantile_cost(
    mut atoms: Box<dyn Iterator<Item = (f64, f64)> + '_>,
    nu: &DiscreteMeasure,
    cost: &RadialCost,
) -> Result<f64> {
    let n = nu.len();
    let mut total = 0.0;
    let mut current = atoms.next();
    let mut left = current.map_or(0.0, |a| a.1);
    let mut used = 0.0;
    for (k, (y, w)) in nu.atoms().enumerate() {
        let y = y[0];
        if k + 1 == n {
            // the remainder of the law, starting with what is left of the current atom
            let Some((x, _)) = current else { break };
            total += left * cost.eval((x - y).abs());
            let tail = sum_series(
                |_| match atoms.next() {
                    Some((x, mass)) => guarded(cost.eval((x - y).abs()), mass),
                    None => 0.0,
                },
                1e-15,
                2,
                10_000_000,
            );
            match tail {
                Series::Converged(s) => total += s,
                Series::Divergent => {
                    return Err(Error::Divergent(format!("{} cost series", cost.name())));
                }
            }
            break;
        }
        let mut need = w;
        while need > 0.0 {
            let Some((x, _)) = current else { break };
            let m = need.min(left);
            total += guarded(cost.eval((x - y).abs()), m);
            need -= m;
            left -= m;
            used += m;
            if left <= 0.0 {
                current = atoms.next();
                match current {
                    // an underflowed tail of the law: nothing more to move
                    Some((_, mass)) if mass == 0.0 && used >= 1.0 - 1e-12 => {
                        current = None;
                        break;
                    }
                    Some((_, mass)) => left = mass,
                    None => break,
                }
            }
        }
    }
    Ok(total)
}
