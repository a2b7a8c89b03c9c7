//! Empirical welfare maximization over quadrant and linear-index rules.
//!
//! All solvers maximize `Q(pi) = (1/n) sum_i (2 pi(X_i) - 1) Gamma_i`, which
//! is equivalent to maximizing the sum of scores over treated units. Fast
//! sweeps rank candidate rules by that running sum; the best few candidates
//! (everything within a rounding tolerance of the top) are then re-evaluated
//! from scratch with [`empirical_objective`] on the rule's realized
//! assignment, so the reported objective is always exactly that of the
//! returned policy.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{empirical_objective, evaluate_policy, ObservationTable, Policy, PolicyClassSpec, PolicyKind, Side, Term};
use crate::numfmt;
use crate::seeding::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ExhaustiveQuadrant,
    HyperplaneEnumeration,
    LocalSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub policy: Policy,
    #[serde(with = "numfmt::float")]
    pub objective: f64,
    pub method: SolveMethod,
    pub exact: bool,
    /// Number of re-evaluated candidates attaining the optimum.
    pub ties: usize,
    #[serde(skip)]
    pub assignment: Vec<u8>,
}

impl SolveResult {
    pub fn treated_share(&self) -> f64 {
        self.assignment.iter().map(|&a| a as usize).sum::<usize>() as f64 / self.assignment.len() as f64
    }
}

/// Options for linear-index rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearOptions {
    /// Local-search restarts when enumeration is not used.
    pub restarts: usize,
    pub seed: u64,
    /// Largest sample for which two-feature rules are enumerated exactly.
    pub max_exact_n: usize,
    /// Use local search even when enumeration is available.
    pub force_local: bool,
}

impl Default for LinearOptions {
    fn default() -> Self {
        LinearOptions { restarts: 8, seed: 0, max_exact_n: 1500, force_local: false }
    }
}

/// Maximum number of near-optimal candidates re-evaluated exactly.
const REFINE_CAP: usize = 64;

fn check_inputs(gamma: &[f64], table: &ObservationTable, spec: &PolicyClassSpec) -> Result<()> {
    if gamma.is_empty() {
        return Err(Error::Invalid("cannot optimize over an empty sample".into()));
    }
    if gamma.len() != table.n() {
        return Err(Error::Invalid(format!("{} scores for {} rows", gamma.len(), table.n())));
    }
    if let Some(i) = gamma.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numerical(format!("score of unit {i} is not finite")));
    }
    spec.validate(table.k_x())
}

fn tolerance(gamma: &[f64]) -> f64 {
    1e-10 * gamma.iter().map(|g| g.abs()).sum::<f64>()
}

/// A candidate rule with its fast treated-sum estimate.
struct Candidate {
    fast: f64,
    policy: Policy,
}

/// Candidates arrive in tie-break priority order; keeps those within `tol`
/// of the running best.
struct NearTop {
    tol: f64,
    best: f64,
    items: Vec<Candidate>,
}

impl NearTop {
    fn new(tol: f64) -> Self {
        NearTop { tol, best: f64::NEG_INFINITY, items: Vec::new() }
    }

    fn offer(&mut self, fast: f64, make: impl FnOnce() -> Policy) {
        if fast < self.best - self.tol {
            return;
        }
        if fast > self.best {
            self.best = fast;
            let floor = fast - self.tol;
            self.items.retain(|c| c.fast >= floor);
        } else if self.items.len() >= REFINE_CAP {
            return;
        }
        self.items.push(Candidate { fast, policy: make() });
        if self.items.len() > REFINE_CAP {
            let worst = (0..self.items.len())
                .min_by(|&a, &b| self.items[a].fast.total_cmp(&self.items[b].fast).then(b.cmp(&a)))
                .unwrap();
            self.items.remove(worst);
        }
    }

    fn merge(mut self, other: NearTop) -> NearTop {
        for c in other.items {
            let Candidate { fast, policy } = c;
            self.offer(fast, || policy);
        }
        self
    }
}

/// Re-evaluates candidates exactly and picks the first best in priority order.
fn refine(top: NearTop, gamma: &[f64], table: &ObservationTable, method: SolveMethod, exact: bool) -> Result<SolveResult> {
    let mut best: Option<(f64, Policy, Vec<u8>)> = None;
    let mut ties = 0;
    for c in top.items {
        let a = evaluate_policy(&c.policy, table)?;
        let obj = empirical_objective(gamma, &a)?;
        match &best {
            Some((b, _, _)) if obj < *b => {}
            Some((b, _, _)) if obj == *b => ties += 1,
            _ => {
                best = Some((obj, c.policy, a));
                ties = 1;
            }
        }
    }
    let (objective, policy, assignment) =
        best.ok_or_else(|| Error::Numerical("optimizer produced no candidate rule".into()))?;
    let result = SolveResult { policy, objective, method, exact, ties, assignment };
    debug_assert!(verify_solution(&result, gamma, table));
    Ok(result)
}

/// Recomputes the objective of `result.policy` and compares it exactly.
pub fn verify_solution(result: &SolveResult, gamma: &[f64], table: &ObservationTable) -> bool {
    let Ok(a) = evaluate_policy(&result.policy, table) else { return false };
    match empirical_objective(gamma, &a) {
        Ok(obj) => obj == result.objective && (result.assignment.is_empty() || a == result.assignment),
        Err(_) => false,
    }
}

/// Dispatches on the class kind.
pub fn solve(gamma: &[f64], table: &ObservationTable, spec: &PolicyClassSpec, linear: &LinearOptions) -> Result<SolveResult> {
    match spec.kind {
        PolicyKind::Quadrant => solve_quadrant(gamma, table, spec),
        PolicyKind::Linear => solve_linear_with(gamma, table, spec, linear),
    }
}

/// Segment tree over ranks of the second coordinate answering
/// "largest prefix sum" with the first and last maximizing prefix ends.
struct PrefixTree {
    size: usize,
    sum: Vec<f64>,
    best: Vec<f64>,
    first: Vec<usize>,
    last: Vec<usize>,
}

impl PrefixTree {
    fn new(len: usize) -> Self {
        let size = len.next_power_of_two().max(1);
        let mut t = PrefixTree {
            size,
            sum: vec![0.0; 2 * size],
            best: vec![f64::NEG_INFINITY; 2 * size],
            first: vec![0; 2 * size],
            last: vec![0; 2 * size],
        };
        for r in 0..len {
            t.best[size + r] = 0.0;
            t.first[size + r] = r;
            t.last[size + r] = r;
        }
        for v in (1..size).rev() {
            t.pull(v);
        }
        t
    }

    fn pull(&mut self, v: usize) {
        let (l, r) = (2 * v, 2 * v + 1);
        self.sum[v] = self.sum[l] + self.sum[r];
        let right = self.sum[l] + self.best[r];
        if self.best[l] > right {
            self.best[v] = self.best[l];
            self.first[v] = self.first[l];
            self.last[v] = self.last[l];
        } else if right > self.best[l] {
            self.best[v] = right;
            self.first[v] = self.first[r];
            self.last[v] = self.last[r];
        } else {
            self.best[v] = self.best[l];
            self.first[v] = self.first[l];
            self.last[v] = self.last[r];
        }
    }

    fn add(&mut self, rank: usize, g: f64) {
        let mut v = self.size + rank;
        self.sum[v] += g;
        self.best[v] = self.sum[v];
        v /= 2;
        while v >= 1 {
            self.pull(v);
            v /= 2;
        }
    }
}

fn unique_sorted(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(f64::total_cmp);
    u.dedup();
    u
}

/// Threshold for "first `j` of the unique values" (`j` in `0..=len`).
fn cut(values: &[f64], j: usize) -> f64 {
    if j == 0 {
        f64::NEG_INFINITY
    } else if j == values.len() {
        f64::INFINITY
    } else {
        0.5 * (values[j - 1] + values[j])
    }
}

/// Exact maximization over quadrant rules on two features.
///
/// Thresholds range over midpoints between consecutive distinct feature
/// values plus `-inf`/`+inf`, for all four orientations. Among equal
/// objectives the rule that is smallest in (orientation, threshold 1,
/// threshold 2) order wins, with orientations ordered
/// `(le, le) < (le, gt) < (gt, le) < (gt, gt)`.
pub fn solve_quadrant(gamma: &[f64], table: &ObservationTable, spec: &PolicyClassSpec) -> Result<SolveResult> {
    check_inputs(gamma, table, spec)?;
    if spec.kind != PolicyKind::Quadrant {
        return Err(Error::Invalid("solve_quadrant needs a quadrant class".into()));
    }
    let features = [spec.features[0], spec.features[1]];
    let cols = [table.column(features[0]), table.column(features[1])];
    let orientations = [
        [Side::AtMost, Side::AtMost],
        [Side::AtMost, Side::Above],
        [Side::Above, Side::AtMost],
        [Side::Above, Side::Above],
    ];
    let tol = tolerance(gamma);
    let mut cands: Vec<(usize, f64, f64, f64)> = Vec::new();
    for (o, orient) in orientations.iter().enumerate() {
        // reflect so that both comparisons read "<=" in working coordinates
        let flip = |s: Side, v: f64| if s == Side::AtMost { v } else { -v };
        let u: Vec<f64> = cols[0].iter().map(|&v| flip(orient[0], v)).collect();
        let v: Vec<f64> = cols[1].iter().map(|&x| flip(orient[1], x)).collect();
        let uu = unique_sorted(&u);
        let vv = unique_sorted(&v);
        let vrank: Vec<usize> = v.iter().map(|x| vv.partition_point(|w| w < x)).collect();
        let mut by_u: Vec<usize> = (0..u.len()).collect();
        by_u.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
        let mut tree = PrefixTree::new(vv.len());
        let mut next = 0;
        let back = |s: Side, t: f64| if s == Side::AtMost { t } else { -t };
        for j in 0..=uu.len() {
            if j > 0 {
                while next < by_u.len() && u[by_u[next]] <= uu[j - 1] {
                    tree.add(vrank[by_u[next]], gamma[by_u[next]]);
                    next += 1;
                }
            }
            // prefix length L: 0 means t2 = -inf in working coordinates
            let best = tree.best[1];
            let prefer_short = orient[1] == Side::AtMost;
            let (value, len) = if prefer_short {
                if 0.0 >= best { (0.0, 0) } else { (best, tree.first[1] + 1) }
            } else if best >= 0.0 {
                (best, tree.last[1] + 1)
            } else {
                (0.0, 0)
            };
            let t1 = back(orient[0], cut(&uu, j));
            let t2 = back(orient[1], cut(&vv, len));
            cands.push((o, t1, t2, value));
        }
    }
    let top_value = cands.iter().map(|c| c.3).fold(f64::NEG_INFINITY, f64::max);
    let mut near: Vec<&(usize, f64, f64, f64)> = cands.iter().filter(|c| c.3 >= top_value - tol).collect();
    near.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    near.truncate(REFINE_CAP);
    let mut top = NearTop::new(f64::INFINITY);
    top.items = near
        .into_iter()
        .map(|&(o, t1, t2, value)| Candidate { fast: value, policy: Policy::quadrant(features, [t1, t2], orientations[o]) })
        .collect();
    refine(top, gamma, table, SolveMethod::ExhaustiveQuadrant, true)
}

/// Maximization over linear-index rules `beta . (1, f(x)) >= 0`.
pub fn solve_linear(gamma: &[f64], table: &ObservationTable, spec: &PolicyClassSpec, restarts: usize, seed: u64) -> Result<SolveResult> {
    solve_linear_with(gamma, table, spec, &LinearOptions { restarts, seed, ..LinearOptions::default() })
}

/// [`solve_linear`] with all options.
///
/// One or two effective features are solved exactly by enumeration (two
/// features only up to `max_exact_n` rows); otherwise the best of
/// `restarts` coordinate local searches is returned with `exact = false`.
pub fn solve_linear_with(gamma: &[f64], table: &ObservationTable, spec: &PolicyClassSpec, opts: &LinearOptions) -> Result<SolveResult> {
    check_inputs(gamma, table, spec)?;
    if spec.kind != PolicyKind::Linear {
        return Err(Error::Invalid("solve_linear needs a linear class".into()));
    }
    let terms = spec.terms();
    let feats: Vec<Vec<f64>> = terms
        .iter()
        .map(|t| (0..table.n()).map(|i| t.eval(table.row(i))).collect())
        .collect();
    if let Some((j, _)) = feats.iter().enumerate().find(|(_, f)| f.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numerical(format!("expanded feature {j} is not finite")));
    }
    match terms.len() {
        1 if !opts.force_local => linear_1d(gamma, table, &terms, &feats[0]),
        2 if !opts.force_local && table.n() <= opts.max_exact_n => linear_2d(gamma, table, &terms, &feats),
        _ => local_search(gamma, table, &terms, &feats, opts),
    }
}

fn sentinel(terms: &[Term], sign: f64) -> Policy {
    let mut beta = vec![0.0; terms.len() + 1];
    beta[0] = sign;
    Policy::Linear { terms: terms.to_vec(), beta }
}

fn with_coef(terms: &[Term], idx: usize, b0: f64, b: f64) -> Policy {
    let mut beta = vec![0.0; terms.len() + 1];
    beta[0] = b0;
    beta[idx + 1] = b;
    Policy::Linear { terms: terms.to_vec(), beta }
}

/// Offers every threshold rule on one feature. Priority: cut position
/// ascending, "treat above" before "treat below".
fn offer_thresholds(top: &mut NearTop, gamma: &[f64], terms: &[Term], idx: usize, f: &[f64], total: f64) {
    let vals = unique_sorted(f);
    let mut group = vec![0.0; vals.len()];
    for (i, v) in f.iter().enumerate() {
        group[vals.partition_point(|w| w < v)] += gamma[i];
    }
    let mut prefix = 0.0;
    for j in 1..vals.len() {
        prefix += group[j - 1];
        let t = 0.5 * (vals[j - 1] + vals[j]);
        top.offer(total - prefix, || with_coef(terms, idx, -t, 1.0));
        top.offer(prefix, || with_coef(terms, idx, t, -1.0));
    }
}

fn linear_1d(gamma: &[f64], table: &ObservationTable, terms: &[Term], f: &[f64]) -> Result<SolveResult> {
    let total: f64 = gamma.iter().sum();
    let mut top = NearTop::new(tolerance(gamma));
    top.offer(0.0, || sentinel(terms, -1.0));
    top.offer(total, || sentinel(terms, 1.0));
    offer_thresholds(&mut top, gamma, terms, 0, f, total);
    refine(top, gamma, table, SolveMethod::HyperplaneEnumeration, true)
}

/// Exact two-feature enumeration over lines through pairs of distinct points.
///
/// For each line, points strictly on either side are fixed by the
/// orientation and the points on the line can be assigned as none, all, a
/// prefix or a suffix along the line; each option is realized by a small
/// translation or rotation of the line.
fn linear_2d(gamma: &[f64], table: &ObservationTable, terms: &[Term], feats: &[Vec<f64>]) -> Result<SolveResult> {
    let n = gamma.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| feats[0][a].total_cmp(&feats[0][b]).then(feats[1][a].total_cmp(&feats[1][b])));
    let mut pts: Vec<[f64; 2]> = Vec::new();
    let mut g: Vec<f64> = Vec::new();
    for &i in &idx {
        let p = [feats[0][i], feats[1][i]];
        if pts.last() == Some(&p) {
            *g.last_mut().unwrap() += gamma[i];
        } else {
            pts.push(p);
            g.push(gamma[i]);
        }
    }
    let total: f64 = gamma.iter().sum();
    let tol = tolerance(gamma);
    let mut top = NearTop::new(tol);
    top.offer(0.0, || sentinel(terms, -1.0));
    top.offer(total, || sentinel(terms, 1.0));
    offer_thresholds(&mut top, gamma, terms, 0, &feats[0], total);
    offer_thresholds(&mut top, gamma, terms, 1, &feats[1], total);

    let m = pts.len();
    let per_a: Vec<NearTop> = (0..m)
        .into_par_iter()
        .map(|a| {
            let mut local = NearTop::new(tol);
            let mut on: Vec<(f64, usize)> = Vec::new();
            let mut s = vec![0.0; m];
            for b in a + 1..m {
                let u = [pts[b][0] - pts[a][0], pts[b][1] - pts[a][1]];
                let w = [-u[1], u[0]];
                let (mut pos, mut neg) = (0.0, 0.0);
                on.clear();
                for k in 0..m {
                    let dx = [pts[k][0] - pts[a][0], pts[k][1] - pts[a][1]];
                    let sk = w[0] * dx[0] + w[1] * dx[1];
                    s[k] = sk;
                    if sk > 0.0 {
                        pos += g[k];
                    } else if sk < 0.0 {
                        neg += g[k];
                    } else {
                        on.push((u[0] * dx[0] + u[1] * dx[1], k));
                    }
                }
                on.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                let on_sum: f64 = on.iter().map(|&(_, k)| g[k]).sum();
                let geom = LineGeom { a, b, u, w };
                for (sigma, base) in [(1.0, pos), (-1.0, neg)] {
                    let mk = |opt: OnLine| geom.realize(terms, &pts, &s, &on, sigma, opt);
                    local.offer(base, || mk(OnLine::None));
                    local.offer(base + on_sum, || mk(OnLine::All));
                    let mut c = 0.0;
                    for j in 1..on.len() {
                        c += g[on[j - 1].1];
                        local.offer(base + c, || mk(OnLine::Prefix(j)));
                        local.offer(base + on_sum - c, || mk(OnLine::Suffix(j)));
                    }
                }
            }
            local
        })
        .collect();
    for t in per_a {
        top = top.merge(t);
    }
    refine(top, gamma, table, SolveMethod::HyperplaneEnumeration, true)
}

#[derive(Clone, Copy)]
enum OnLine {
    None,
    All,
    /// The first `j` on-line points (ordered along the line) are treated.
    Prefix(usize),
    Suffix(usize),
}

struct LineGeom {
    a: usize,
    #[allow(dead_code)]
    b: usize,
    u: [f64; 2],
    w: [f64; 2],
}

impl LineGeom {
    fn realize(&self, terms: &[Term], pts: &[[f64; 2]], s: &[f64], on: &[(f64, usize)], sigma: f64, opt: OnLine) -> Policy {
        let pa = pts[self.a];
        let mut beta = [
            -sigma * (self.w[0] * pa[0] + self.w[1] * pa[1]),
            sigma * self.w[0],
            sigma * self.w[1],
        ];
        let margin = s.iter().filter(|v| **v != 0.0).fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
        let scale = (self.w[0].abs() + self.w[1].abs()).max(f64::MIN_POSITIVE);
        let margin = if margin.is_finite() { margin } else { scale };
        match opt {
            OnLine::None | OnLine::All => {
                let eps = 0.5 * margin;
                beta[0] += if matches!(opt, OnLine::All) { eps } else { -eps };
            }
            OnLine::Prefix(j) | OnLine::Suffix(j) => {
                // rotate about a point between on-line groups j-1 and j
                let tq = 0.5 * (on[j - 1].0 + on[j].0);
                let uu = self.u[0] * self.u[0] + self.u[1] * self.u[1];
                let q = [pa[0] + tq / uu * self.u[0], pa[1] + tq / uu * self.u[1]];
                let reach = pts
                    .iter()
                    .map(|p| (self.u[0] * (p[0] - q[0]) + self.u[1] * (p[1] - q[1])).abs())
                    .fold(1.0f64, f64::max);
                let eps = 0.5 * margin / reach;
                // +eps * u.(x - q) favours points further along the line
                let dir = if matches!(opt, OnLine::Prefix(_)) { -eps } else { eps };
                beta[0] -= dir * (self.u[0] * q[0] + self.u[1] * q[1]);
                beta[1] += dir * self.u[0];
                beta[2] += dir * self.u[1];
            }
        }
        Policy::Linear { terms: terms.to_vec(), beta: beta.to_vec() }
    }
}

fn local_search(gamma: &[f64], table: &ObservationTable, terms: &[Term], feats: &[Vec<f64>], opts: &LinearOptions) -> Result<SolveResult> {
    let n = gamma.len();
    let d = feats.len();
    let mean: Vec<f64> = feats.iter().map(|f| f.iter().sum::<f64>() / n as f64).collect();
    let sd: Vec<f64> = feats
        .iter()
        .zip(&mean)
        .map(|(f, m)| {
            let v = f.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
            if v > 0.0 { v.sqrt() } else { 1.0 }
        })
        .collect();
    let zf: Vec<Vec<f64>> = feats
        .iter()
        .enumerate()
        .map(|(j, f)| f.iter().map(|x| (x - mean[j]) / sd[j]).collect())
        .collect();
    let value = |beta: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            let mut v = beta[0];
            for j in 0..d {
                v += beta[j + 1] * zf[j][i];
            }
            if v >= 0.0 {
                s += gamma[i];
            }
        }
        s
    };
    let normalize = |b: &mut Vec<f64>| {
        let norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            b.iter_mut().for_each(|x| *x /= norm);
        }
    };
    let restarts = opts.restarts.max(1);
    let runs: Vec<(f64, Vec<f64>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeding::rng(opts.seed, &[stream::LOCAL_SEARCH, r as u64]);
            let mut beta: Vec<f64> = (0..=d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            normalize(&mut beta);
            let mut cur = value(&beta);
            let mut step = 0.5;
            let mut evals = 0usize;
            while step > 1e-4 && evals < 20_000 {
                let mut improved = false;
                for j in 0..=d {
                    for sgn in [1.0, -1.0] {
                        let mut cand = beta.clone();
                        cand[j] += sgn * step;
                        normalize(&mut cand);
                        if cand.iter().all(|x| *x == 0.0) {
                            continue;
                        }
                        evals += 1;
                        let v = value(&cand);
                        if v > cur {
                            cur = v;
                            beta = cand;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            (cur, beta)
        })
        .collect();
    let mut top = NearTop::new(f64::INFINITY);
    let total: f64 = gamma.iter().sum();
    top.offer(0.0, || sentinel(terms, -1.0));
    top.offer(total, || sentinel(terms, 1.0));
    for (v, beta) in runs {
        // map back to raw features: beta_j / sd_j, intercept shifted by the means
        let mut raw = vec![beta[0]; d + 1];
        for j in 0..d {
            raw[j + 1] = beta[j + 1] / sd[j];
            raw[0] -= beta[j + 1] * mean[j] / sd[j];
        }
        if raw.iter().all(|x| *x == 0.0) {
            continue;
        }
        top.offer(v, || Policy::Linear { terms: terms.to_vec(), beta: raw });
    }
    refine(top, gamma, table, SolveMethod::LocalSearch, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PolicyClassSpec;

    fn table2(pts: &[(f64, f64)]) -> ObservationTable {
        let x: Vec<f64> = pts.iter().flat_map(|&(a, b)| [a, b]).collect();
        ObservationTable::covariates_only(x, 2).unwrap()
    }

    #[test]
    fn xor_quadrant_optimum() {
        let t = table2(&[(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (2.0, 2.0)]);
        let g = [1.0, -1.0, -1.0, 1.0];
        let r = solve_quadrant(&g, &t, &PolicyClassSpec::quadrant(0, 1)).unwrap();
        assert_eq!(r.objective, 0.5);
        assert!(verify_solution(&r, &g, &t));
        assert!(r.ties >= 1);
    }

    #[test]
    fn positive_scores_treat_everyone() {
        let t = table2(&[(0.3, 1.0), (1.0, 0.2), (2.0, 5.0)]);
        let g = [0.5, 1.0, 2.0];
        let r = solve_quadrant(&g, &t, &PolicyClassSpec::quadrant(0, 1)).unwrap();
        assert_eq!(r.assignment, vec![1, 1, 1]);
        assert_eq!(r.objective, 3.5 / 3.0);
        let r = solve_linear(&g, &t, &PolicyClassSpec::linear(vec![0, 1]), 4, 0).unwrap();
        assert_eq!(r.assignment, vec![1, 1, 1]);
    }

    #[test]
    fn negative_scores_never_treat() {
        let t = table2(&[(0.3, 1.0), (1.0, 0.2), (2.0, 5.0)]);
        let g = [-0.5, -1.0, -2.0];
        let r = solve_linear(&g, &t, &PolicyClassSpec::linear(vec![0, 1]), 4, 0).unwrap();
        assert_eq!(r.policy, Policy::treat_none(2));
        assert_eq!(r.objective, 3.5 / 3.0);
    }

    #[test]
    fn one_dimensional_threshold() {
        let t = ObservationTable::covariates_only(vec![1.0, 2.0, 3.0, 4.0], 1).unwrap();
        let g = [1.0, 1.0, -1.0, -1.0];
        let r = solve_linear(&g, &t, &PolicyClassSpec::linear(vec![0]), 1, 0).unwrap();
        assert_eq!(r.assignment, vec![1, 1, 0, 0]);
        assert_eq!(r.objective, 1.0);
        assert!(r.exact);
    }

    #[test]
    fn tampered_objective_fails_verification() {
        let t = table2(&[(1.0, 1.0), (2.0, 2.0)]);
        let g = [1.0, -1.0];
        let mut r = solve_quadrant(&g, &t, &PolicyClassSpec::quadrant(0, 1)).unwrap();
        assert!(verify_solution(&r, &g, &t));
        r.objective += 1e-12;
        assert!(!verify_solution(&r, &g, &t));
    }

    #[test]
    fn collinear_points_enumerated() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 2.0 * i as f64)).collect();
        let t = table2(&pts);
        let g = [-1.0, 2.0, 3.0, -1.0, 1.0, -4.0];
        let r = solve_linear(&g, &t, &PolicyClassSpec::linear(vec![0, 1]), 1, 0).unwrap();
        // best interval-free cut along the line: treat a prefix or suffix
        let mut best = f64::NEG_INFINITY;
        for j in 0..=6 {
            let pre: Vec<u8> = (0..6).map(|i| (i < j) as u8).collect();
            let suf: Vec<u8> = pre.iter().map(|a| 1 - a).collect();
            best = best.max(empirical_objective(&g, &pre).unwrap()).max(empirical_objective(&g, &suf).unwrap());
        }
        assert_eq!(r.objective, best);
    }

    #[test]
    fn duplicate_points_share_assignment() {
        let t = table2(&[(0.0, 0.0), (0.0, 0.0), (1.0, 1.0), (1.0, 0.0)]);
        let g = [1.0, -3.0, 1.0, 1.0];
        let r = solve_linear(&g, &t, &PolicyClassSpec::linear(vec![0, 1]), 1, 0).unwrap();
        assert_eq!(r.assignment[0], r.assignment[1]);
        assert_eq!(r.assignment, vec![0, 0, 1, 1]);
    }

    #[test]
    fn local_search_is_deterministic_and_flagged() {
        let pts: Vec<(f64, f64)> = (0..50).map(|i| ((i * 7 % 13) as f64, (i * 5 % 11) as f64)).collect();
        let t = table2(&pts);
        let g: Vec<f64> = (0..50).map(|i| ((i * 3 % 7) as f64) - 3.0).collect();
        let opts = LinearOptions { force_local: true, restarts: 4, seed: 2, ..Default::default() };
        let a = solve_linear_with(&g, &t, &PolicyClassSpec::linear(vec![0, 1]), &opts).unwrap();
        let b = solve_linear_with(&g, &t, &PolicyClassSpec::linear(vec![0, 1]), &opts).unwrap();
        assert_eq!(a, b);
        assert!(!a.exact);
        assert_eq!(a.method, SolveMethod::LocalSearch);
        let exact = solve_linear(&g, &t, &PolicyClassSpec::linear(vec![0, 1]), 1, 0).unwrap();
        assert!(exact.objective >= a.objective);
    }
}
