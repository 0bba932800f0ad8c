//! Best-first branch-and-bound over binary variables.
//!
//! Children are re-solved from their parent's optimal tableau with a dual
//! simplex when that tableau is still cached, otherwise from the root's.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use super::simplex::{solve_keeping_basis, Outcome, WarmStart};
use super::{LpError, LpModel, LpSolution, LpStatus, Sense, SimplexOptions, VarKind};

/// Node tableaus kept for warm starts; older ones fall back to the root.
const CACHED_TABLEAUS: usize = 16;

#[derive(Clone, Copy, Debug)]
pub struct MilpOptions {
    /// Relaxations solved before the search stops.
    pub node_limit: usize,
    /// A binary within this distance of 0 or 1 counts as integral.
    pub integrality_tol: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub simplex: SimplexOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            node_limit: 1_000_000,
            integrality_tol: 1e-6,
            abs_gap: 1e-9,
            rel_gap: 1e-9,
            simplex: SimplexOptions::default(),
        }
    }
}

pub fn solve_milp(model: &LpModel) -> Result<LpSolution, LpError> {
    solve_milp_with(model, &MilpOptions::default())
}

/// Solves a model with binary variables; without binaries this is a plain LP solve.
/// Fails with `NodeLimitExceeded` unless optimality is proven within the node limit.
pub fn solve_milp_with(model: &LpModel, opts: &MilpOptions) -> Result<LpSolution, LpError> {
    let report = solve_milp_report(model, opts, None)?;
    if !report.proven {
        return Err(LpError::NodeLimitExceeded(opts.node_limit));
    }
    Ok(report.solution)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpReport {
    /// Best integral point found, or the reason there is none.
    pub solution: LpSolution,
    /// Proven bound on the optimum (below it when minimising, above when maximising).
    pub best_bound: f64,
    /// Relaxations solved.
    pub nodes: usize,
    /// False when the node limit ended the search before the gap closed.
    pub proven: bool,
}

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    fixings: Vec<(usize, f64)>,
    values: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Max-heap order: lowest bound first, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    model: &'a LpModel,
    opts: &'a MilpOptions,
    base: Vec<(f64, f64)>,
    binaries: Vec<usize>,
    /// +1 for minimisation, -1 for maximisation; all comparisons are on `sign * objective`.
    sign: f64,
    solved: usize,
    incumbent: Option<(f64, Vec<f64>)>,
    root: Option<WarmStart>,
}

type Relaxed = (Outcome, Option<WarmStart>);

impl Search<'_> {
    /// Solves the relaxation with `fixings`, starting from `parent` (which may
    /// already hold a prefix of them) or else the root tableau.
    fn relax(
        &mut self,
        fixings: &[(usize, f64)],
        parent: Option<&WarmStart>,
    ) -> Result<Relaxed, LpError> {
        self.solved += 1;
        if self.solved > self.opts.node_limit {
            return Err(LpError::NodeLimitExceeded(self.opts.node_limit));
        }
        let mut bounds = self.base.clone();
        for &(j, v) in fixings {
            bounds[j] = (v, v);
        }
        match parent.or(self.root.as_ref()) {
            Some(warm) => warm.resolve(self.model, &bounds, fixings),
            None => {
                let (outcome, warm) = solve_keeping_basis(self.model, &bounds, &self.opts.simplex)?;
                self.root = warm.clone();
                Ok((outcome, warm))
            }
        }
    }

    fn key(&self, values: &[f64]) -> f64 {
        self.sign * self.model.evaluate_objective(values)
    }

    fn prunable(&self, bound: f64) -> bool {
        match &self.incumbent {
            None => false,
            Some((best, _)) => {
                let gap = self.opts.abs_gap.max(self.opts.rel_gap * best.abs());
                bound >= best - gap
            }
        }
    }

    /// Most fractional binary, lowest index on ties.
    fn branch_var(&self, values: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &j in &self.binaries {
            let frac = (values[j] - values[j].round()).abs();
            if frac > self.opts.integrality_tol && best.is_none_or(|(_, f)| frac > f) {
                best = Some((j, frac));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Repeatedly fixes the largest fractional binary to 1 until the
    /// relaxation turns integral or infeasible.
    fn dive(&mut self, mut values: Vec<f64>, mut warm: Option<WarmStart>) -> Result<(), LpError> {
        let mut fixings: Vec<(usize, f64)> = Vec::new();
        loop {
            let tol = self.opts.integrality_tol;
            let pick = self
                .binaries
                .iter()
                .copied()
                .filter(|&j| (values[j] - values[j].round()).abs() > tol)
                .fold(None, |best: Option<usize>, j| match best {
                    Some(b) if values[b] >= values[j] => Some(b),
                    _ => Some(j),
                });
            let Some(j) = pick else {
                return self.accept_integral(&values, warm.as_ref());
            };
            fixings.push((j, 1.0));
            match self.relax(&fixings, warm.as_ref())? {
                (Outcome::Optimal(v), next) if !self.prunable(self.key(&v)) => {
                    values = v;
                    warm = next;
                }
                _ => return Ok(()),
            }
        }
    }

    /// Rounds and fixes every binary, re-solves the continuous rest and
    /// offers the result as an incumbent.
    fn accept_integral(
        &mut self,
        values: &[f64],
        parent: Option<&WarmStart>,
    ) -> Result<(), LpError> {
        let fixings: Vec<(usize, f64)> = self
            .binaries
            .iter()
            .map(|&j| (j, values[j].round().clamp(0.0, 1.0)))
            .collect();
        if let (Outcome::Optimal(exact), _) = self.relax(&fixings, parent)? {
            let obj = self.key(&exact);
            if self.incumbent.as_ref().is_none_or(|(best, _)| obj < *best) {
                self.incumbent = Some((obj, exact));
            }
        }
        Ok(())
    }
}

/// `Ok(None)` when the node budget ran out.
fn within_budget<T>(r: Result<T, LpError>) -> Result<Option<T>, LpError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(LpError::NodeLimitExceeded(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Branch-and-bound that returns its best incumbent when the node limit is
/// reached instead of failing; `NodeLimitExceeded` only when there is none.
///
/// `start`, indexed like the model's variables, seeds the incumbent: its
/// binaries are rounded and fixed and the continuous part is re-optimised.
pub fn solve_milp_report(
    model: &LpModel,
    opts: &MilpOptions,
    start: Option<&[f64]>,
) -> Result<MilpReport, LpError> {
    let base: Vec<(f64, f64)> = model
        .variables()
        .iter()
        .map(|v| (v.lower, v.upper))
        .collect();
    let binaries: Vec<usize> = (0..model.num_vars())
        .filter(|&j| model.variables()[j].kind == VarKind::Binary)
        .collect();
    let sign = match model.objective().sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut search = Search {
        model,
        opts,
        base,
        binaries,
        sign,
        solved: 0,
        incumbent: None,
        root: None,
    };
    let settled = |status: LpStatus, nodes: usize| MilpReport {
        solution: LpSolution::without_point(status),
        best_bound: f64::NAN,
        nodes,
        proven: true,
    };

    let (root, root_warm) = match search.relax(&[], None)? {
        (Outcome::Optimal(values), warm) => (values, warm),
        (Outcome::Infeasible, _) => return Ok(settled(LpStatus::Infeasible, 1)),
        (Outcome::Unbounded, _) => return Ok(settled(LpStatus::Unbounded, 1)),
    };
    if search.binaries.is_empty() {
        let bound = model.evaluate_objective(&root);
        return Ok(MilpReport {
            solution: LpSolution::optimal(model, root),
            best_bound: bound,
            nodes: 1,
            proven: true,
        });
    }

    let mut heap = BinaryHeap::new();
    let mut cache: BTreeMap<usize, WarmStart> = BTreeMap::new();
    let mut seq = 0usize;
    // smallest bound of any node left unexplored by the node limit
    let mut open_bound: Option<f64> = None;
    let root_bound = search.key(&root);
    let mut seeded = true;
    if let Some(start) = start {
        assert_eq!(
            start.len(),
            model.num_vars(),
            "start point covers every variable"
        );
        seeded = within_budget(search.accept_integral(start, None))?.is_some();
    }
    if !seeded {
        open_bound = Some(root_bound);
    } else if search.branch_var(&root).is_none() {
        if within_budget(search.accept_integral(&root, None))?.is_none() {
            open_bound = Some(root_bound);
        }
    } else {
        if within_budget(search.dive(root.clone(), root_warm))?.is_none() {
            open_bound = Some(root_bound);
        }
        heap.push(Node {
            bound: root_bound,
            depth: 0,
            seq,
            fixings: Vec::new(),
            values: root,
        });
    }

    'search: while open_bound.is_none() {
        let Some(node) = heap.pop() else { break };
        let parent = cache.remove(&node.seq);
        if search.prunable(node.bound) {
            // best-first: every remaining node is at least as bad
            break;
        }
        let j = search
            .branch_var(&node.values)
            .expect("queued nodes are fractional");
        for v in [0.0, 1.0] {
            let mut fixings = node.fixings.clone();
            fixings.push((j, v));
            let Some((outcome, warm)) = within_budget(search.relax(&fixings, parent.as_ref()))?
            else {
                open_bound = Some(node.bound);
                break 'search;
            };
            let Outcome::Optimal(values) = outcome else {
                // a bounded root cannot have unbounded children; infeasible children are dropped
                continue;
            };
            let bound = search.key(&values);
            if search.prunable(bound) {
                continue;
            }
            if search.branch_var(&values).is_none() {
                if within_budget(search.accept_integral(&values, warm.as_ref()))?.is_none() {
                    open_bound = Some(node.bound);
                    break 'search;
                }
            } else {
                seq += 1;
                if let Some(w) = warm {
                    cache.insert(seq, w);
                    if cache.len() > CACHED_TABLEAUS {
                        cache.pop_first();
                    }
                }
                heap.push(Node {
                    bound,
                    depth: node.depth + 1,
                    seq,
                    fixings,
                    values,
                });
            }
        }
    }

    let nodes = search.solved.min(opts.node_limit);
    let Some((best, values)) = search.incumbent else {
        return match open_bound {
            Some(_) => Err(LpError::NodeLimitExceeded(opts.node_limit)),
            None => Ok(settled(LpStatus::Infeasible, nodes)),
        };
    };
    let bound = match open_bound {
        Some(b) => heap.peek().map_or(b, |n| n.bound.min(b)).min(best),
        None => best,
    };
    Ok(MilpReport {
        solution: LpSolution::optimal(model, values),
        best_bound: sign * bound,
        nodes,
        proven: open_bound.is_none(),
    })
}
