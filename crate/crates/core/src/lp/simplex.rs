//! Dense two-phase primal simplex with implicit variable bounds.
//!
//! The model is converted to `min c'x, Ax = b, 0 <= x <= u, b >= 0` by
//! shifting finite lower bounds to zero, negating variables with only an
//! upper bound, splitting free variables and adding slack, surplus and
//! artificial columns. Upper bounds are handled by complementing columns
//! (`x = u - x'`) so every nonbasic column always sits at zero.
//!
//! Pricing is Dantzig's rule; after a run of degenerate pivots the solver
//! switches to Bland's rule until the next nondegenerate step.

use super::{LpError, LpModel, LpSolution, LpStatus, Relation, Sense};

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    /// Largest constraint or bound violation accepted in a returned solution.
    pub feasibility_tol: f64,
    /// Reduced costs above `-optimality_tol` are treated as non-improving.
    pub optimality_tol: f64,
    /// Tableau entries smaller than this never become pivots.
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_switch: usize,
    /// Pivot cap; `None` picks one from the problem size.
    pub max_iterations: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feasibility_tol: 1e-6,
            optimality_tol: 1e-9,
            pivot_tol: 1e-10,
            degenerate_switch: 50,
            max_iterations: None,
        }
    }
}

/// Solves a continuous LP. Models with binary variables are rejected.
pub fn solve_lp(model: &LpModel) -> Result<LpSolution, LpError> {
    solve_lp_with(model, &SimplexOptions::default())
}

pub fn solve_lp_with(model: &LpModel, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
    let binaries = model.num_binaries();
    if binaries > 0 {
        return Err(LpError::HasBinaries(binaries));
    }
    let bounds: Vec<(f64, f64)> = model
        .variables()
        .iter()
        .map(|v| (v.lower, v.upper))
        .collect();
    Ok(match solve_with_bounds(model, &bounds, opts)? {
        Outcome::Optimal(values) => LpSolution::optimal(model, values),
        Outcome::Infeasible => LpSolution::without_point(LpStatus::Infeasible),
        Outcome::Unbounded => LpSolution::without_point(LpStatus::Unbounded),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Outcome {
    Optimal(Vec<f64>),
    Infeasible,
    Unbounded,
}

/// How a model variable maps onto standard-form columns.
#[derive(Clone, Copy, Debug)]
enum ColMap {
    Fixed(f64),
    /// x = lower + col
    Shift {
        col: usize,
        lower: f64,
    },
    /// x = upper - col
    Neg {
        col: usize,
        upper: f64,
    },
    /// x = pos - neg
    Free {
        pos: usize,
        neg: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// Converts `model` under `bounds` to a starting tableau, or settles it outright.
fn prepare(
    model: &LpModel,
    bounds: &[(f64, f64)],
    opts: &SimplexOptions,
) -> Result<Prepared, LpError> {
    assert_eq!(bounds.len(), model.num_vars());

    let mut maps = Vec::with_capacity(bounds.len());
    let mut ub: Vec<f64> = Vec::new();
    for &(lo, hi) in bounds {
        if lo > hi {
            return Ok(Prepared::Done(Outcome::Infeasible));
        }
        let map = if lo == hi {
            ColMap::Fixed(lo)
        } else if lo.is_finite() {
            ub.push(hi - lo);
            ColMap::Shift {
                col: ub.len() - 1,
                lower: lo,
            }
        } else if hi.is_finite() {
            ub.push(f64::INFINITY);
            ColMap::Neg {
                col: ub.len() - 1,
                upper: hi,
            }
        } else {
            ub.push(f64::INFINITY);
            ub.push(f64::INFINITY);
            ColMap::Free {
                pos: ub.len() - 2,
                neg: ub.len() - 1,
            }
        };
        maps.push(map);
    }
    let n_struct = ub.len();

    // scatter a term list into structural coefficients plus a constant
    let mut scratch = vec![0.0; n_struct];
    let mut touched: Vec<usize> = Vec::new();
    let mut expand = |terms: &[(super::VarId, f64)], scale: f64| -> (Vec<(usize, f64)>, f64) {
        let mut constant = 0.0;
        let add = |col: usize, c: f64, scratch: &mut Vec<f64>, touched: &mut Vec<usize>| {
            if scratch[col] == 0.0 {
                touched.push(col);
            }
            scratch[col] += c;
            if scratch[col] == 0.0 {
                // keep it listed; zero entries are filtered below
                scratch[col] = -0.0;
            }
        };
        for &(v, c) in terms {
            let c = c * scale;
            match maps[v.0] {
                ColMap::Fixed(x) => constant += c * x,
                ColMap::Shift { col, lower } => {
                    add(col, c, &mut scratch, &mut touched);
                    constant += c * lower;
                }
                ColMap::Neg { col, upper } => {
                    add(col, -c, &mut scratch, &mut touched);
                    constant += c * upper;
                }
                ColMap::Free { pos, neg } => {
                    add(pos, c, &mut scratch, &mut touched);
                    add(neg, -c, &mut scratch, &mut touched);
                }
            }
        }
        touched.sort_unstable();
        let coeffs = touched
            .drain(..)
            .filter_map(|col| {
                let c = std::mem::replace(&mut scratch[col], 0.0);
                (c != 0.0).then_some((col, c))
            })
            .collect();
        (coeffs, constant)
    };

    let sense = match model.objective().sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let (obj, _) = expand(&model.objective().terms, sense);
    let mut struct_cost = vec![0.0; n_struct];
    for (col, c) in obj {
        struct_cost[col] = c;
    }

    struct Row {
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    }
    let mut rows: Vec<Row> = Vec::with_capacity(model.constraints().len());
    let mut bmax: f64 = 0.0;
    for c in model.constraints() {
        let (mut coeffs, constant) = expand(&c.terms, 1.0);
        let mut rhs = c.rhs - constant;
        let mut relation = c.relation;
        if coeffs.is_empty() {
            let ok = match relation {
                Relation::Le => rhs >= -opts.feasibility_tol,
                Relation::Ge => rhs <= opts.feasibility_tol,
                Relation::Eq => rhs.abs() <= opts.feasibility_tol,
            };
            if !ok {
                return Ok(Prepared::Done(Outcome::Infeasible));
            }
            continue;
        }
        if rhs < 0.0 {
            rhs = -rhs;
            coeffs.iter_mut().for_each(|(_, a)| *a = -*a);
            relation = match relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        bmax = bmax.max(rhs);
        rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.relation != Relation::Le).count();
    let ncols = n_struct + n_slack + n_art;

    let mut kind = vec![ColKind::Structural; n_struct];
    kind.extend(std::iter::repeat_n(ColKind::Slack, n_slack));
    kind.extend(std::iter::repeat_n(ColKind::Artificial, n_art));
    ub.extend(std::iter::repeat_n(f64::INFINITY, n_slack + n_art));
    let mut cost = struct_cost;
    cost.resize(ncols, 0.0);

    let mut a = vec![vec![0.0; ncols]; m];
    let mut beta = vec![0.0; m];
    let mut basis = vec![0usize; m];
    let (mut next_slack, mut next_art) = (n_struct, n_struct + n_slack);
    for (i, row) in rows.iter().enumerate() {
        for &(col, c) in &row.coeffs {
            a[i][col] = c;
        }
        beta[i] = row.rhs;
        match row.relation {
            Relation::Le => {
                a[i][next_slack] = 1.0;
                basis[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                a[i][next_slack] = -1.0;
                next_slack += 1;
                a[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                a[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
        }
    }

    let max_iter = opts.max_iterations.unwrap_or(20_000 + 50 * (m + ncols));
    let mut tab = Tableau {
        a,
        beta,
        basis,
        in_basis: vec![false; ncols],
        cap: ub.clone(),
        ub,
        flipped: vec![false; ncols],
        dead: vec![false; ncols],
        kind,
        cost,
        d: vec![0.0; ncols],
        z: 0.0,
        bmax,
        opts: *opts,
        iterations: 0,
        max_iter,
    };
    for &b in &tab.basis {
        tab.in_basis[b] = true;
    }
    Ok(Prepared::Ready(tab, maps))
}

enum Prepared {
    Done(Outcome),
    Ready(Tableau, Vec<ColMap>),
}

/// Solves the relaxation of `model` with per-variable `bounds` overriding the
/// model's own (binary kinds are ignored).
pub(crate) fn solve_with_bounds(
    model: &LpModel,
    bounds: &[(f64, f64)],
    opts: &SimplexOptions,
) -> Result<Outcome, LpError> {
    Ok(solve_keeping_basis(model, bounds, opts)?.0)
}

/// Like [`solve_with_bounds`], also returning the optimal tableau for
/// re-solving with variables fixed.
pub(crate) fn solve_keeping_basis(
    model: &LpModel,
    bounds: &[(f64, f64)],
    opts: &SimplexOptions,
) -> Result<(Outcome, Option<WarmStart>), LpError> {
    let (mut tab, maps) = match prepare(model, bounds, opts)? {
        Prepared::Done(outcome) => return Ok((outcome, None)),
        Prepared::Ready(tab, maps) => (tab, maps),
    };
    if tab.kind.contains(&ColKind::Artificial) {
        tab.phase_one_objective();
        match tab.run()? {
            Phase::Optimal => {}
            Phase::Unbounded => {
                return Err(LpError::NumericalFailure(
                    "phase one reported unbounded".into(),
                ))
            }
        }
        if tab.beta_of_artificials() > 1e-7 * (1.0 + tab.bmax) {
            return Ok((Outcome::Infeasible, None));
        }
        tab.drive_out_artificials();
    }
    tab.phase_two_objective();
    if let Phase::Unbounded = tab.run()? {
        return Ok((Outcome::Unbounded, None));
    }
    let values = checked_values(&tab, &maps, model, bounds)?;
    Ok((Outcome::Optimal(values), Some(WarmStart { tab, maps })))
}

fn checked_values(
    tab: &Tableau,
    maps: &[ColMap],
    model: &LpModel,
    bounds: &[(f64, f64)],
) -> Result<Vec<f64>, LpError> {
    let std_values = tab.column_values();
    // variables pinned by `bounds` report their exact value
    let values: Vec<f64> = maps
        .iter()
        .zip(bounds)
        .map(|(map, &(lo, hi))| match *map {
            _ if lo == hi => lo,
            ColMap::Fixed(x) => x,
            ColMap::Shift { col, lower } => lower + std_values[col],
            ColMap::Neg { col, upper } => upper - std_values[col],
            ColMap::Free { pos, neg } => std_values[pos] - std_values[neg],
        })
        .collect();
    let violation = max_violation(model, bounds, &values);
    if violation > tab.opts.feasibility_tol {
        return Err(LpError::NumericalFailure(format!(
            "solution violates constraints by {violation:.3e} after {} pivots",
            tab.iterations
        )));
    }
    Ok(values)
}

/// An optimal tableau that nodes of a branch-and-bound search re-solve from.
#[derive(Clone)]
pub(crate) struct WarmStart {
    tab: Tableau,
    maps: Vec<ColMap>,
}

impl WarmStart {
    /// Re-solves with each `(var, value)` in `fixings` pinned on top of
    /// whatever this tableau already fixes. `bounds` are the base bounds with
    /// every fixing applied; they drive the final feasibility check and the
    /// cold fallback. The returned tableau is the new optimum, when there is one.
    pub(crate) fn resolve(
        &self,
        model: &LpModel,
        bounds: &[(f64, f64)],
        fixings: &[(usize, f64)],
    ) -> Result<(Outcome, Option<WarmStart>), LpError> {
        match self.try_resolve(model, bounds, fixings) {
            Ok(Some(done)) => Ok(done),
            Ok(None) | Err(_) => solve_keeping_basis(model, bounds, &self.tab.opts),
        }
    }

    /// `None` when a fixing cannot be expressed on this tableau.
    fn try_resolve(
        &self,
        model: &LpModel,
        bounds: &[(f64, f64)],
        fixings: &[(usize, f64)],
    ) -> Result<Option<(Outcome, Option<WarmStart>)>, LpError> {
        let infeasible = Ok(Some((Outcome::Infeasible, None)));
        let mut tab = self.tab.clone();
        tab.iterations = 0;
        for &(j, v) in fixings {
            match self.maps[j] {
                ColMap::Fixed(x) if x == v => {}
                ColMap::Fixed(_) => return infeasible,
                ColMap::Shift { col, lower } => {
                    let t = v - lower;
                    if t < 0.0 || t > tab.ub[col] {
                        return infeasible;
                    }
                    if tab.cap[col] == 0.0 && tab.dead[col] {
                        // fixed earlier on this tableau
                        let current = if tab.flipped[col] { tab.ub[col] } else { 0.0 };
                        if current != t {
                            return infeasible;
                        }
                        continue;
                    }
                    if !tab.fix_column(col, t) {
                        return Ok(None);
                    }
                }
                _ => return Ok(None),
            }
        }
        if !tab.dual_run()? {
            return infeasible;
        }
        if let Phase::Unbounded = tab.run()? {
            return Ok(None);
        }
        let values = checked_values(&tab, &self.maps, model, bounds)?;
        Ok(Some((
            Outcome::Optimal(values),
            Some(WarmStart {
                tab,
                maps: self.maps.clone(),
            }),
        )))
    }
}

fn max_violation(model: &LpModel, bounds: &[(f64, f64)], values: &[f64]) -> f64 {
    let rows = model
        .constraints()
        .iter()
        .map(|c| c.violation(values))
        .fold(0.0, f64::max);
    bounds
        .iter()
        .zip(values)
        .map(|(&(lo, hi), &x)| (lo - x).max(x - hi).max(0.0))
        .fold(rows, f64::max)
}

enum Phase {
    Optimal,
    Unbounded,
}

enum Step {
    Pivot { row: usize, ratio: f64 },
    Flip { ratio: f64 },
    Unbounded,
}

#[derive(Clone)]
struct Tableau {
    a: Vec<Vec<f64>>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    /// Width of each column's range, fixed at construction; complementing maps `x` to `ub - x`.
    ub: Vec<f64>,
    /// Current upper limit in the column's own coordinates: `ub`, or 0 once fixed.
    cap: Vec<f64>,
    flipped: Vec<bool>,
    dead: Vec<bool>,
    kind: Vec<ColKind>,
    /// Phase-two costs in current (possibly complemented) coordinates.
    cost: Vec<f64>,
    /// Reduced costs of the active phase.
    d: Vec<f64>,
    z: f64,
    bmax: f64,
    opts: SimplexOptions,
    iterations: usize,
    max_iter: usize,
}

impl Tableau {
    fn ncols(&self) -> usize {
        self.ub.len()
    }

    fn phase_one_objective(&mut self) {
        let n = self.ncols();
        self.d = (0..n)
            .map(|k| {
                if self.kind[k] == ColKind::Artificial {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        self.z = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            if self.kind[b] == ColKind::Artificial {
                for (dk, &aik) in self.d.iter_mut().zip(&self.a[i]) {
                    *dk -= aik;
                }
                self.z += self.beta[i];
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn phase_two_objective(&mut self) {
        self.d = self.cost.clone();
        self.z = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b];
            if cb != 0.0 {
                for (dk, &aik) in self.d.iter_mut().zip(&self.a[i]) {
                    *dk -= cb * aik;
                }
                self.z += cb * self.beta[i];
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn beta_of_artificials(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.beta)
            .filter(|(&b, _)| self.kind[b] == ColKind::Artificial)
            .map(|(_, &v)| v.abs())
            .sum()
    }

    fn price(&self, bland: bool) -> Option<usize> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<usize> = None;
        for k in 0..self.ncols() {
            if self.in_basis[k] || self.dead[k] || self.d[k] >= -tol {
                continue;
            }
            if bland {
                return Some(k);
            }
            if best.is_none_or(|b| self.d[k] < self.d[b]) {
                best = Some(k);
            }
        }
        best
    }

    fn ratio_test(&self, j: usize, bland: bool) -> Step {
        let tol = self.opts.pivot_tol;
        let ratio_of = |i: usize| -> Option<f64> {
            let a = self.a[i][j];
            if a > tol {
                Some(self.beta[i].max(0.0) / a)
            } else if a < -tol {
                let u = self.cap[self.basis[i]];
                u.is_finite().then(|| (u - self.beta[i]).max(0.0) / -a)
            } else {
                None
            }
        };
        let mut t_min = f64::INFINITY;
        for i in 0..self.a.len() {
            if let Some(r) = ratio_of(i) {
                t_min = t_min.min(r);
            }
        }
        let bound = self.cap[j];
        if bound <= t_min {
            return if bound.is_finite() {
                Step::Flip { ratio: bound }
            } else {
                Step::Unbounded
            };
        }
        let slack = 1e-12 * (1.0 + t_min);
        let mut chosen: Option<usize> = None;
        for i in 0..self.a.len() {
            let Some(r) = ratio_of(i) else { continue };
            if r > t_min + slack {
                continue;
            }
            chosen = Some(match chosen {
                None => i,
                Some(c) if bland => {
                    if self.basis[i] < self.basis[c] {
                        i
                    } else {
                        c
                    }
                }
                Some(c) => {
                    if self.a[i][j].abs() > self.a[c][j].abs() {
                        i
                    } else {
                        c
                    }
                }
            });
        }
        Step::Pivot {
            row: chosen.expect("finite minimum ratio has a row"),
            ratio: t_min,
        }
    }

    /// Replaces nonbasic column `j` by its complement `u_j - x_j`.
    fn flip_nonbasic(&mut self, j: usize) {
        let u = self.ub[j];
        for (row, b) in self.a.iter_mut().zip(self.beta.iter_mut()) {
            let aij = row[j];
            if aij != 0.0 {
                *b -= aij * u;
                row[j] = -aij;
            }
        }
        self.z += self.d[j] * u;
        self.d[j] = -self.d[j];
        self.cost[j] = -self.cost[j];
        self.flipped[j] = !self.flipped[j];
    }

    /// Replaces the basic variable of `row` by its complement.
    fn complement_basic(&mut self, row: usize) {
        let j = self.basis[row];
        let u = self.ub[j];
        for (k, a) in self.a[row].iter_mut().enumerate() {
            if k != j {
                *a = -*a;
            }
        }
        self.beta[row] = u - self.beta[row];
        self.cost[j] = -self.cost[j];
        self.flipped[j] = !self.flipped[j];
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let mut prow = std::mem::take(&mut self.a[r]);
        let inv = 1.0 / prow[j];
        for x in prow.iter_mut() {
            *x *= inv;
        }
        prow[j] = 1.0;
        self.beta[r] *= inv;
        let nz: Vec<usize> = (0..prow.len())
            .filter(|&k| prow[k] != 0.0 && !self.dead[k])
            .collect();

        let beta_r = self.beta[r];
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f == 0.0 {
                continue;
            }
            for &k in &nz {
                let v = row[k] - f * prow[k];
                row[k] = if v.abs() < 1e-14 { 0.0 } else { v };
            }
            row[j] = 0.0;
            let b = self.beta[i] - f * beta_r;
            self.beta[i] = if b < 0.0 && b > -1e-9 { 0.0 } else { b };
        }
        let f = self.d[j];
        if f != 0.0 {
            for &k in &nz {
                self.d[k] -= f * prow[k];
            }
            self.d[j] = 0.0;
            self.z += f * beta_r;
        }
        self.a[r] = prow;

        self.in_basis[self.basis[r]] = false;
        self.basis[r] = j;
        self.in_basis[j] = true;
    }

    fn run(&mut self) -> Result<Phase, LpError> {
        let mut degenerate_run = 0usize;
        loop {
            self.iterations += 1;
            if self.iterations > self.max_iter {
                return Err(LpError::NumericalFailure(format!(
                    "no convergence after {} pivots",
                    self.max_iter
                )));
            }
            let bland = degenerate_run >= self.opts.degenerate_switch;
            let Some(j) = self.price(bland) else {
                return Ok(Phase::Optimal);
            };
            let ratio = match self.ratio_test(j, bland) {
                Step::Unbounded => return Ok(Phase::Unbounded),
                Step::Flip { ratio } => {
                    self.flip_nonbasic(j);
                    ratio
                }
                Step::Pivot { row, ratio } => {
                    // a fixed basic column leaves at 0 either way
                    if self.a[row][j] < 0.0 && self.cap[self.basis[row]] > 0.0 {
                        self.complement_basic(row);
                    }
                    self.pivot(row, j);
                    ratio
                }
            };
            if ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
        }
    }

    /// Pins column `c` at `t` (in uncomplemented coordinates, `t` either 0
    /// or `ub`) and keeps it from entering again. Returns false for values
    /// strictly inside the range, which this tableau cannot express.
    fn fix_column(&mut self, c: usize, t: f64) -> bool {
        let target = if self.flipped[c] { self.ub[c] - t } else { t };
        let at_upper = target == self.ub[c] && target != 0.0;
        if target != 0.0 && !at_upper {
            return false;
        }
        if at_upper {
            if self.in_basis[c] {
                let r = self
                    .basis
                    .iter()
                    .position(|&b| b == c)
                    .expect("basic column has a row");
                self.complement_basic(r);
            } else {
                self.flip_nonbasic(c);
            }
        }
        self.cap[c] = 0.0;
        self.dead[c] = true;
        true
    }

    /// Dual simplex from a dual feasible basis. Returns false when the
    /// primal problem is infeasible.
    fn dual_run(&mut self) -> Result<bool, LpError> {
        let tol = self.opts.pivot_tol;
        let feas = 1e-9 * (1.0 + self.bmax);
        loop {
            self.iterations += 1;
            if self.iterations > self.max_iter {
                return Err(LpError::NumericalFailure(format!(
                    "dual simplex stalled after {} pivots",
                    self.max_iter
                )));
            }
            let mut leave: Option<(usize, f64)> = None;
            for (i, (&b, &v)) in self.basis.iter().zip(&self.beta).enumerate() {
                let infeasibility = (-v).max(v - self.cap[b]);
                if infeasibility > feas && leave.is_none_or(|(_, w)| infeasibility > w) {
                    leave = Some((i, infeasibility));
                }
            }
            let Some((r, _)) = leave else {
                return Ok(true);
            };
            let b = self.basis[r];
            if self.beta[r] > self.cap[b] && self.cap[b] > 0.0 {
                self.complement_basic(r);
            }
            // below zero: raise it with a negative entry; above a zero cap: lower it with a positive one
            let below = self.beta[r] < 0.0;
            let mut enter: Option<(usize, f64)> = None;
            for k in 0..self.ncols() {
                if self.in_basis[k] || self.dead[k] {
                    continue;
                }
                let a = self.a[r][k];
                if (below && a < -tol) || (!below && a > tol) {
                    let ratio = self.d[k].max(0.0) / a.abs();
                    let better = match enter {
                        None => true,
                        Some((e, best)) => {
                            ratio < best - 1e-12
                                || (ratio <= best + 1e-12 && a.abs() > self.a[r][e].abs())
                        }
                    };
                    if better {
                        enter = Some((k, ratio));
                    }
                }
            }
            let Some((k, _)) = enter else {
                return Ok(false);
            };
            self.pivot(r, k);
        }
    }

    /// Pivots zero-level artificials out of the basis; rows where that is
    /// impossible are linearly dependent and get dropped.
    fn drive_out_artificials(&mut self) {
        let mut r = 0;
        while r < self.a.len() {
            if self.kind[self.basis[r]] != ColKind::Artificial {
                r += 1;
                continue;
            }
            let entering = (0..self.ncols())
                .filter(|&k| self.kind[k] != ColKind::Artificial && !self.in_basis[k])
                .filter(|&k| self.a[r][k].abs() > 1e-7)
                .max_by(|&x, &y| self.a[r][x].abs().total_cmp(&self.a[r][y].abs()));
            match entering {
                Some(k) => {
                    self.beta[r] = 0.0;
                    self.pivot(r, k);
                    r += 1;
                }
                None => {
                    let b = self.basis[r];
                    self.in_basis[b] = false;
                    self.a.swap_remove(r);
                    self.beta.swap_remove(r);
                    self.basis.swap_remove(r);
                }
            }
        }
        for k in 0..self.ncols() {
            if self.kind[k] == ColKind::Artificial {
                self.dead[k] = true;
            }
        }
    }

    /// Values of every standard-form column in original (uncomplemented) coordinates.
    fn column_values(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.ncols()];
        for (i, &b) in self.basis.iter().enumerate() {
            x[b] = self.beta[i].max(0.0);
        }
        for k in 0..x.len() {
            if self.flipped[k] {
                x[k] = self.ub[k] - x[k];
            }
        }
        x
    }
}
