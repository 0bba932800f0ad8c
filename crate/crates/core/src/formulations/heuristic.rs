//! Single-path starting points for branch-and-bound.
//!
//! A choice gives each demand one candidate path. Local search moves one
//! demand at a time while the choice's score strictly improves; random
//! kicks then restart it from perturbed copies of the best choice found.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{pla_delay, CandidatePathSet, ObjectiveKind};
use crate::lp::LpModel;
use crate::topology::Topology;
use crate::traffic::TrafficMatrix;

/// Full passes over the demands before local search gives up.
const MAX_PASSES: usize = 64;

/// Perturbed restarts after the first local optimum.
const KICKS: usize = 200;

/// Compared lexicographically; smaller is better. The first entry is the
/// objective itself, the rest break its plateaus.
type Score = Vec<f64>;

fn score(objective: ObjectiveKind, topo: &Topology, load: &[f64], cost: f64) -> Score {
    let util = || load.iter().zip(topo.links()).map(|(y, l)| y / l.capacity);
    match objective {
        // minimax: the whole utilization profile, most loaded link first
        ObjectiveKind::Lb => {
            let mut u: Vec<f64> = util().collect();
            u.sort_by(|a, b| b.total_cmp(a));
            u
        }
        ObjectiveKind::Ad => vec![util().map(pla_delay).sum(), util().map(|u| u * u).sum()],
        ObjectiveKind::Mcr => {
            let overload = load
                .iter()
                .zip(topo.links())
                .map(|(y, l)| (y - l.capacity).max(0.0))
                .sum();
            vec![overload, cost]
        }
    }
}

fn better(a: &[f64], b: &[f64]) -> bool {
    for (&x, &y) in a.iter().zip(b) {
        let tol = 1e-12 * (1.0 + x.abs().max(y.abs()));
        if x < y - tol {
            return true;
        }
        if x > y + tol {
            return false;
        }
    }
    false
}

struct Local<'a> {
    objective: ObjectiveKind,
    paths: &'a CandidatePathSet,
    tm: &'a TrafficMatrix,
    topo: &'a Topology,
}

impl Local<'_> {
    fn shift(&self, load: &mut [f64], cost: &mut f64, d: usize, p: usize, sign: f64) {
        let h = sign * self.tm.demands()[d].volume;
        let path = &self.paths.paths(d)[p];
        for &l in &path.links {
            load[l] += h;
        }
        *cost += h * path.total_weight;
    }

    fn evaluate(&self, choice: &[usize]) -> (Vec<f64>, f64) {
        let mut load = vec![0.0; self.topo.links().len()];
        let mut cost = 0.0;
        for (d, &p) in choice.iter().enumerate() {
            self.shift(&mut load, &mut cost, d, p, 1.0);
        }
        (load, cost)
    }

    /// Demands with a real choice to make, largest first.
    fn movable(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.tm.len())
            .filter(|&d| self.tm.demands()[d].volume > 0.0 && self.paths.paths(d).len() > 1)
            .collect();
        order.sort_by(|&a, &b| {
            self.tm.demands()[b]
                .volume
                .total_cmp(&self.tm.demands()[a].volume)
                .then(a.cmp(&b))
        });
        order
    }

    fn improve(&self, mut choice: Vec<usize>, order: &[usize]) -> (Vec<usize>, Score) {
        let (mut load, mut cost) = self.evaluate(&choice);
        let mut current = score(self.objective, self.topo, &load, cost);
        for _ in 0..MAX_PASSES {
            let mut moved = false;
            for &d in order {
                let from = choice[d];
                self.shift(&mut load, &mut cost, d, from, -1.0);
                let mut best: Option<(usize, Score)> = None;
                for p in (0..self.paths.paths(d).len()).filter(|&p| p != from) {
                    self.shift(&mut load, &mut cost, d, p, 1.0);
                    let s = score(self.objective, self.topo, &load, cost);
                    let incumbent = best.as_ref().map_or(&current, |(_, b)| b);
                    if better(&s, incumbent) {
                        best = Some((p, s));
                    }
                    self.shift(&mut load, &mut cost, d, p, -1.0);
                }
                match best {
                    Some((p, s)) => {
                        self.shift(&mut load, &mut cost, d, p, 1.0);
                        choice[d] = p;
                        current = s;
                        moved = true;
                    }
                    None => self.shift(&mut load, &mut cost, d, from, 1.0),
                }
            }
            if !moved {
                break;
            }
        }
        (choice, current)
    }

    /// Iterated local search: reroutes a few random demands of the best
    /// choice, re-optimizes, and keeps the result when it is better.
    fn search(&self, starts: Vec<Vec<usize>>) -> Vec<usize> {
        let order = self.movable();
        let mut best: Option<(Vec<usize>, Score)> = None;
        for start in starts {
            let (choice, s) = self.improve(start, &order);
            if best.as_ref().is_none_or(|(_, b)| better(&s, b)) {
                best = Some((choice, s));
            }
        }
        let (mut best_choice, mut best_score) = best.expect("at least one start");
        if order.is_empty() {
            return best_choice;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(order.len() as u64);
        for _ in 0..KICKS {
            let mut kicked = best_choice.clone();
            for _ in 0..rng.random_range(2..=4) {
                let d = order[rng.random_range(0..order.len())];
                kicked[d] = rng.random_range(0..self.paths.paths(d).len());
            }
            let (choice, s) = self.improve(kicked, &order);
            if better(&s, &best_score) {
                best_choice = choice;
                best_score = s;
            }
        }
        best_choice
    }
}

/// One path index per demand for single-path routing, found by local search
/// from the shortest paths and, when given, from the path carrying most of
/// each demand in `flows` (indexed like [`super::FlowAllocation::flows`]).
pub fn single_path_choice(
    objective: ObjectiveKind,
    paths: &CandidatePathSet,
    tm: &TrafficMatrix,
    topo: &Topology,
    flows: Option<&[Vec<f64>]>,
) -> Vec<usize> {
    let local = Local {
        objective,
        paths,
        tm,
        topo,
    };
    let mut starts = vec![vec![0; tm.len()]];
    if let Some(flows) = flows {
        starts.push(
            flows
                .iter()
                .map(|xs| {
                    (0..xs.len())
                        .max_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(b.cmp(&a)))
                        .unwrap_or(0)
                })
                .collect(),
        );
    }
    local.search(starts)
}

/// A point of `model` (built by [`super::apply_single_path`]) whose binaries
/// encode `choice`; continuous values are left at zero.
pub fn single_path_start(model: &LpModel, choice: &[usize]) -> Vec<f64> {
    let mut values = vec![0.0; model.num_vars()];
    for (d, &p) in choice.iter().enumerate() {
        if let Some(u) = model.var_id(&format!("u_{d}_{}", p + 1)) {
            values[u.0] = 1.0;
        }
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::{apply_single_path, build_candidate_paths, build_model};
    use crate::lp::{solve_milp_report, MilpOptions};
    use crate::topology::{assign_capacities, assign_weights, generate_topology, WeightSetting};
    use crate::traffic::{gravity_tm, scale_to_max_utilization};
    use proptest::prelude::*;

    fn configured(n: usize, pairs: usize, seed: u64) -> (Topology, TrafficMatrix) {
        let t = generate_topology(n, pairs, seed, 10_000).unwrap();
        let t = assign_weights(
            &assign_capacities(&t, &[30.0, 35.0, 40.0]).unwrap(),
            WeightSetting::InvCap,
        );
        let tm = scale_to_max_utilization(&gravity_tm(&t, seed), &t, 0.6).unwrap();
        (t, tm)
    }

    #[test]
    fn single_path_lb_never_worse_than_shortest_paths() {
        for seed in 0..5 {
            let (t, tm) = configured(6, 9, seed);
            let cps = build_candidate_paths(&t, &tm, 3).unwrap();
            let local = Local {
                objective: ObjectiveKind::Lb,
                paths: &cps,
                tm: &tm,
                topo: &t,
            };
            let choice = single_path_choice(ObjectiveKind::Lb, &cps, &tm, &t, None);
            let (load, _) = local.evaluate(&choice);
            let (sp, _) = local.evaluate(&vec![0; tm.len()]);
            let s = score(ObjectiveKind::Lb, &t, &load, 0.0);
            // shortest paths scale to the target load by construction
            assert!(s[0] <= score(ObjectiveKind::Lb, &t, &sp, 0.0)[0] + 1e-12);
            assert!(s[0] <= 0.6 + 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn start_is_a_feasible_incumbent(seed in any::<u64>(), obj in 0usize..3) {
            let objective = [ObjectiveKind::Mcr, ObjectiveKind::Lb, ObjectiveKind::Ad][obj];
            let (t, tm) = configured(5, 7, seed);
            let cps = build_candidate_paths(&t, &tm, 2).unwrap();
            let milp = apply_single_path(&build_model(objective, &cps, &tm, &t), &cps, &tm);
            let choice = single_path_choice(objective, &cps, &tm, &t, None);
            let start = single_path_start(&milp, &choice);
            let seeded = MilpOptions { node_limit: 2, ..Default::default() };
            // a start that fits capacity is always adopted before the first branch
            let (load, _) = Local { objective, paths: &cps, tm: &tm, topo: &t }.evaluate(&choice);
            let fits = load.iter().zip(t.links()).all(|(y, l)| *y <= l.capacity * (1.0 + 1e-9));
            if fits {
                let r = solve_milp_report(&milp, &seeded, Some(&start)).unwrap();
                prop_assert!(r.solution.is_optimal());
                let exact = solve_milp_report(&milp, &MilpOptions::default(), None).unwrap();
                prop_assert!(r.solution.objective_value >= exact.solution.objective_value - 1e-7);
            }
        }
    }
}
