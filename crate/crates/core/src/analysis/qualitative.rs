//! Graph-based precomputation of probability-0 and probability-1 states.

use std::collections::VecDeque;

/// States whose reach-avoid probability is 0 or 1 on a fixed graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QualitativeSets {
    pub s_zero: Vec<bool>,
    pub s_one: Vec<bool>,
}

pub fn predecessors(graph: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut pre = vec![Vec::new(); graph.len()];
    for (s, succ) in graph.iter().enumerate() {
        for &t in succ {
            if pre[t].last() != Some(&s) {
                pre[t].push(s);
            }
        }
    }
    pre
}

/// Backward closure of `start` through states accepted by `through`.
pub fn backward_closure(pre: &[Vec<usize>], start: &[bool], through: impl Fn(usize) -> bool) -> Vec<bool> {
    let mut seen = start.to_vec();
    let mut queue: VecDeque<usize> = (0..start.len()).filter(|&s| start[s]).collect();
    while let Some(t) = queue.pop_front() {
        for &s in &pre[t] {
            if !seen[s] && through(s) {
                seen[s] = true;
                queue.push_back(s);
            }
        }
    }
    seen
}

/// Forward reachability from `from` that does not expand states in `stop`.
pub fn forward_reach(graph: &[Vec<usize>], from: usize, stop: &[bool]) -> Vec<bool> {
    let mut seen = vec![false; graph.len()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(s) = queue.pop_front() {
        if stop[s] {
            continue;
        }
        for &t in &graph[s] {
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    seen
}

/// Qualitative sets for `¬bad U goal`; goal takes precedence over bad.
pub fn qualitative(graph: &[Vec<usize>], goal: &[bool], bad: &[bool]) -> QualitativeSets {
    let pre = predecessors(graph);
    let can_reach = backward_closure(&pre, goal, |s| !bad[s] && !goal[s]);
    let s_zero: Vec<bool> = can_reach.iter().map(|r| !r).collect();
    let may_fail = backward_closure(&pre, &s_zero, |s| !goal[s]);
    let s_one = may_fail.iter().map(|f| !f).collect();
    QualitativeSets { s_zero, s_one }
}
