//! Neighborhood and path results checked against all-pairs distances.

use relgraph::query::{neighbor_at, neighbor_within, path, NeighborOptions};
use relgraph::{Direction, EdgeTypeId, InstanceRef, InstanceSet, PathResult};

use super::{floyd_warshall, node_id, RandomGraph, INF};

fn at(rg: &RandomGraph, i: usize) -> InstanceRef {
    rg.graph.find(rg.graph.schema().node_type("v").unwrap(), &node_id(i)).unwrap()
}

fn indices(set: &InstanceSet) -> Vec<usize> {
    let mut v: Vec<usize> = set.members().iter().map(|r| r.index as usize).collect();
    v.sort();
    v
}

/// First disagreement between the engine and the oracle, if any.
pub fn fw_mismatch(rg: &RandomGraph, types: &[usize], forward_only: bool) -> Option<String> {
    let g = &rg.graph;
    let edges: Vec<EdgeTypeId> = types.iter().map(|e| g.schema().edge_type(&format!("e{e}")).unwrap()).collect();
    let opts = NeighborOptions { edges: Some(edges), forward_only };
    let d = floyd_warshall(&rg.adj, types, forward_only);
    for x in 0..rg.n {
        for k in 0..4 {
            let got = indices(&neighbor_at(g, at(rg, x), k, &opts).unwrap());
            let want: Vec<usize> = (0..rg.n).filter(|&y| d[x][y] == k).collect();
            if got != want {
                return Some(format!("neighborAt({k}) from {x}: {got:?} != {want:?}"));
            }
            let got = indices(&neighbor_within(g, at(rg, x), k, &opts).unwrap());
            let want: Vec<usize> = (0..rg.n).filter(|&y| d[x][y] >= 1 && d[x][y] <= k).collect();
            if got != want {
                return Some(format!("neighborWithin({k}) from {x}: {got:?} != {want:?}"));
            }
        }
        for y in 0..rg.n {
            let bound = [None, Some(2)][(x + y) % 2];
            let reachable = d[x][y] < INF && bound.is_none_or(|b| d[x][y] <= b);
            match path(g, at(rg, x), at(rg, y), bound, &opts).unwrap() {
                PathResult::Found(steps) => {
                    if !reachable || steps.len() != d[x][y] {
                        return Some(format!("path {x}->{y}: {} steps, distance {}", steps.len(), d[x][y]));
                    }
                    let mut cur = at(rg, x);
                    for s in &steps {
                        if s.from != cur || (forward_only && s.direction == Direction::Reverse) {
                            return Some(format!("path {x}->{y}: broken step {s:?}"));
                        }
                        let (a, b) = match s.direction {
                            Direction::Forward => (s.from, s.to),
                            Direction::Reverse => (s.to, s.from),
                        };
                        let e = g.schema().edge(s.edge).name[1..].parse::<usize>().unwrap();
                        if !types.contains(&e) || !rg.adj[e][a.index as usize][b.index as usize] {
                            return Some(format!("path {x}->{y}: step over a missing edge"));
                        }
                        cur = s.to;
                    }
                    if cur != at(rg, y) {
                        return Some(format!("path {x}->{y}: ends elsewhere"));
                    }
                }
                PathResult::NotFound => {
                    if reachable {
                        return Some(format!("path {x}->{y}: not found at distance {}", d[x][y]));
                    }
                }
            }
        }
    }
    None
}
