//! Strongly connected components (iterative Tarjan) and a deterministic
//! topological schedule of the condensation.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

const UNVISITED: usize = usize::MAX;

/// Components of the graph given as adjacency lists over `0..n`. Each
/// component is sorted; components come out in reverse topological order
/// of the condensation (a component is emitted after everything it reaches).
pub fn tarjan_scc(n: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut comps = Vec::new();
    // (node, next edge to explore)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, 0));

        while let Some(&(v, ei)) = call.last() {
            if ei < adj[v].len() {
                call.last_mut().unwrap().1 += 1;
                let w = adj[v][ei];
                if index[w] == UNVISITED {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    comps
}

/// Orders components so that for every edge `u -> v` crossing components,
/// `v`'s component comes first. Among ready components the one with the
/// smallest member index wins, so callers that number nodes in sorted name
/// order get a name-ordered tie-break.
pub fn schedule(comps: &[Vec<usize>], comp_of: &[usize], adj: &[Vec<usize>]) -> Vec<usize> {
    let k = comps.len();
    let mut deps: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    let mut dependents: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    for (u, targets) in adj.iter().enumerate() {
        for &v in targets {
            let (cu, cv) = (comp_of[u], comp_of[v]);
            if cu != cv {
                deps[cu].insert(cv);
                dependents[cv].insert(cu);
            }
        }
    }
    let mut pending: Vec<usize> = deps.iter().map(BTreeSet::len).collect();
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..k)
        .filter(|&c| pending[c] == 0)
        .map(|c| Reverse((comps[c][0], c)))
        .collect();
    let mut order = Vec::with_capacity(k);
    while let Some(Reverse((_, c))) = ready.pop() {
        order.push(c);
        for &d in &dependents[c] {
            pending[d] -= 1;
            if pending[d] == 0 {
                ready.push(Reverse((comps[d][0], d)));
            }
        }
    }
    debug_assert_eq!(order.len(), k, "condensation must be acyclic");
    order
}
