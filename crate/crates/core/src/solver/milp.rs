//! Branch and bound over binary columns.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use log::debug;

use super::simplex::{solve_lp_with_basis, Basis};
use super::{LpProblem, LpSolution, LpStatus, MilpProblem};
use crate::error::{Error, Result};
use crate::linalg::Vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpOptions {
    /// Absolute optimality gap.
    pub gap: f64,
    /// Integrality tolerance on binaries.
    pub int_tol: f64,
    /// Nodes explored depth-first before switching to best-bound order.
    pub depth_first_nodes: usize,
    /// Hard cap on explored nodes.
    pub node_limit: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            gap: 1e-6,
            int_tol: 1e-6,
            depth_first_nodes: 10_000,
            node_limit: 2_000_000,
        }
    }
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    bound: f64,
    basis: Option<Basis>,
}

struct ByBound(Node);

impl PartialEq for ByBound {
    fn eq(&self, o: &Self) -> bool {
        self.0.bound == o.0.bound
    }
}
impl Eq for ByBound {}
impl PartialOrd for ByBound {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for ByBound {
    fn cmp(&self, o: &Self) -> Ordering {
        // min-heap on the bound
        o.0.bound.partial_cmp(&self.0.bound).unwrap_or(Ordering::Equal)
    }
}

/// Problem-specific branching rule.
pub trait Brancher {
    /// Children of a node with fractional relaxation `x`, as lists of `(column, value)`
    /// fixings of binary columns in exploration order. The children must cover every
    /// optimal completion of the node. `lower`/`upper` are the node's column bounds.
    /// `None` falls back to most-fractional branching.
    fn branch(&self, x: &Vector, lower: &Vector, upper: &Vector) -> Option<Vec<Vec<(usize, f64)>>>;
}

pub fn solve_milp(p: &MilpProblem) -> Result<LpSolution> {
    solve_milp_with(p, &MilpOptions::default())
}

pub fn solve_milp_with(p: &MilpProblem, opt: &MilpOptions) -> Result<LpSolution> {
    branch_and_bound(p, opt, None)
}

pub fn solve_milp_branching(p: &MilpProblem, opt: &MilpOptions, brancher: &dyn Brancher) -> Result<LpSolution> {
    branch_and_bound(p, opt, Some(brancher))
}

fn branch_and_bound(p: &MilpProblem, opt: &MilpOptions, brancher: Option<&dyn Brancher>) -> Result<LpSolution> {
    let slot: HashMap<usize, usize> = p.binaries.iter().enumerate().map(|(k, &j)| (j, k)).collect();
    let mut lp: LpProblem = p.lp.clone();
    for &j in &p.binaries {
        lp.col_lower[j] = lp.col_lower[j].max(0.0).ceil();
        lp.col_upper[j] = lp.col_upper[j].min(1.0).floor();
        if lp.col_lower[j] > lp.col_upper[j] {
            return Ok(LpSolution::infeasible());
        }
    }
    let root = Node {
        lower: p.binaries.iter().map(|&j| lp.col_lower[j]).collect(),
        upper: p.binaries.iter().map(|&j| lp.col_upper[j]).collect(),
        bound: f64::NEG_INFINITY,
        basis: None,
    };
    let mut stack = vec![root];
    let mut heap: BinaryHeap<ByBound> = BinaryHeap::new();
    let mut incumbent: Option<LpSolution> = None;
    let mut best = f64::INFINITY;
    let mut explored = 0usize;
    let mut saw_unbounded = false;

    loop {
        let node = if explored < opt.depth_first_nodes {
            match stack.pop() {
                Some(n) => n,
                None => break,
            }
        } else {
            heap.extend(stack.drain(..).map(|mut n| {
                n.basis = n.basis.map(Basis::without_inverse);
                ByBound(n)
            }));
            match heap.pop() {
                Some(n) => n.0,
                None => break,
            }
        };
        if node.bound >= best - opt.gap {
            continue;
        }
        explored += 1;
        if explored > opt.node_limit {
            return Err(Error::IterationLimit(opt.node_limit));
        }
        for (k, &j) in p.binaries.iter().enumerate() {
            lp.col_lower[j] = node.lower[k];
            lp.col_upper[j] = node.upper[k];
        }
        let (sol, basis) = solve_lp_with_basis(&lp, node.basis.as_ref())?;
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                saw_unbounded = true;
                continue;
            }
            LpStatus::Optimal => {}
        }
        if sol.objective_value >= best - opt.gap {
            continue;
        }
        let x = sol.x.as_ref().expect("optimal carries x");
        let mut branch: Option<(usize, f64)> = None;
        for (k, &j) in p.binaries.iter().enumerate() {
            let frac = (x[j] - x[j].round()).abs();
            if frac > opt.int_tol && branch.map_or(true, |(_, f)| frac > f + 1e-12) {
                branch = Some((k, frac));
            }
        }
        match branch {
            None => {
                let mut s = sol.clone();
                if let Some(xs) = s.x.as_mut() {
                    for &j in &p.binaries {
                        xs[j] = xs[j].round();
                    }
                }
                best = sol.objective_value;
                debug!("milp incumbent {best:.9} after {explored} nodes");
                incumbent = Some(s);
            }
            Some((k, _)) => {
                if let Some(children) = brancher.and_then(|b| b.branch(x, &lp.col_lower, &lp.col_upper)) {
                    // pushed in reverse so the first child is explored first
                    for fix in children.into_iter().rev() {
                        let mut child = Node {
                            lower: node.lower.clone(),
                            upper: node.upper.clone(),
                            bound: sol.objective_value,
                            basis: Some(basis.clone()),
                        };
                        let mut consistent = true;
                        for (j, v) in fix {
                            let Some(&k) = slot.get(&j) else {
                                return Err(Error::InvalidArgument(format!("branching fixes non-binary column {j}")));
                            };
                            consistent &= child.lower[k] <= v && v <= child.upper[k];
                            child.lower[k] = v;
                            child.upper[k] = v;
                        }
                        if consistent {
                            stack.push(child);
                        }
                    }
                    continue;
                }
                let j = p.binaries[k];
                let up_first = x[j] >= 0.5;
                let mut down = Node {
                    lower: node.lower.clone(),
                    upper: node.upper.clone(),
                    bound: sol.objective_value,
                    basis: Some(basis.clone()),
                };
                down.upper[k] = 0.0;
                let mut up = Node {
                    lower: node.lower,
                    upper: node.upper,
                    bound: sol.objective_value,
                    basis: Some(basis),
                };
                up.lower[k] = 1.0;
                // the child pushed last is explored first
                if up_first {
                    stack.push(down);
                    stack.push(up);
                } else {
                    stack.push(up);
                    stack.push(down);
                }
            }
        }
    }
    debug!("milp finished after {explored} nodes");
    match incumbent {
        Some(s) => Ok(s),
        None if saw_unbounded => Ok(LpSolution::unbounded()),
        None => Ok(LpSolution::infeasible()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::LpBuilder;

    #[test]
    fn knapsack_toy() {
        // min -x1 - x2 s.t. x1 + x2 ≤ 1.5, binaries  ->  -1
        let mut b = LpBuilder::new();
        let x1 = b.add_var(0.0, 1.0, -1.0);
        let x2 = b.add_var(0.0, 1.0, -1.0);
        b.add_row(vec![(x1, 1.0), (x2, 1.0)], f64::NEG_INFINITY, 1.5);
        let p = MilpProblem::new(b.build().unwrap(), vec![x1, x2]).unwrap();
        let s = solve_milp(&p).unwrap();
        assert!((s.objective_value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_knapsack_matches_enumeration() {
        let w = [3.0, 4.0, 5.0, 6.0, 2.0];
        let v = [4.0, 5.0, 6.0, 8.0, 3.0];
        let cap = 11.0;
        let mut b = LpBuilder::new();
        let xs: Vec<usize> = v.iter().map(|&vi| b.add_var(0.0, 1.0, -vi)).collect();
        b.add_row(xs.iter().zip(w).map(|(&j, wj)| (j, wj)).collect(), f64::NEG_INFINITY, cap);
        let p = MilpProblem::new(b.build().unwrap(), xs).unwrap();
        let s = solve_milp(&p).unwrap();
        let mut brute = 0.0_f64;
        for mask in 0u32..32 {
            let (mut tw, mut tv) = (0.0, 0.0);
            for i in 0..5 {
                if mask & (1 << i) != 0 {
                    tw += w[i];
                    tv += v[i];
                }
            }
            if tw <= cap {
                brute = brute.max(tv);
            }
        }
        assert!((s.objective_value + brute).abs() < 1e-9);
    }

    #[test]
    fn infeasible_integer_program() {
        let mut b = LpBuilder::new();
        let x = b.add_var(0.0, 1.0, 0.0);
        b.add_eq(vec![(x, 2.0)], 1.0);
        let p = MilpProblem::new(b.build().unwrap(), vec![x]).unwrap();
        assert_eq!(solve_milp(&p).unwrap().status, LpStatus::Infeasible);
    }
}
