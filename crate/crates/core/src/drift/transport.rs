//! Exact transportation problem with real-valued masses.
//!
//! Successive shortest paths on the dense bipartite residual graph, with
//! Johnson potentials so Dijkstra sees non-negative reduced costs. Used when
//! the two clouds differ in size or carry non-uniform weights.

const MASS_EPS: f64 = 1e-14;

/// Minimum total cost of moving `supply` onto `demand` under `cost`
/// (row-major, `supply.len() x demand.len()`). Both masses must sum to the
/// same total.
pub fn min_cost(cost: &[f64], supply: &[f64], demand: &[f64]) -> f64 {
    let (n, m) = (supply.len(), demand.len());
    assert_eq!(cost.len(), n * m, "cost matrix shape");
    let mut supply = supply.to_vec();
    let mut demand = demand.to_vec();
    let mut flow = vec![0.0f64; n * m];
    // Nodes: 0..n sources, n..n+m sinks.
    let mut potential = vec![0.0f64; n + m];
    let mut dist = vec![0.0f64; n + m];
    let mut prev = vec![usize::MAX; n + m];
    let mut done = vec![false; n + m];

    // Each augmentation empties a source, fills a sink, or cancels a reverse
    // edge; the cap only guards against pathological float cycling.
    let max_iters = 4 * (n + m) * (n + m) + 16;
    for _ in 0..max_iters {
        if !supply.iter().any(|&s| s > MASS_EPS) || !demand.iter().any(|&d| d > MASS_EPS) {
            break;
        }
        for k in 0..n + m {
            dist[k] = f64::INFINITY;
            prev[k] = usize::MAX;
            done[k] = false;
        }
        for i in 0..n {
            if supply[i] > MASS_EPS {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for k in 0..n + m {
                if !done[k] && dist[k] < best_d {
                    best_d = dist[k];
                    best = k;
                }
            }
            if best == usize::MAX {
                break;
            }
            done[best] = true;
            if best < n {
                let i = best;
                for j in 0..m {
                    let node = n + j;
                    if done[node] {
                        continue;
                    }
                    let rc = (cost[i * m + j] + potential[i] - potential[node]).max(0.0);
                    if best_d + rc < dist[node] {
                        dist[node] = best_d + rc;
                        prev[node] = i;
                    }
                }
            } else {
                let j = best - n;
                for i in 0..n {
                    if done[i] || flow[i * m + j] <= MASS_EPS {
                        continue;
                    }
                    let rc = (-cost[i * m + j] + potential[best] - potential[i]).max(0.0);
                    if best_d + rc < dist[i] {
                        dist[i] = best_d + rc;
                        prev[i] = best;
                    }
                }
            }
        }
        // Cheapest reachable sink with remaining demand.
        let target = (0..m)
            .filter(|&j| demand[j] > MASS_EPS && dist[n + j].is_finite())
            .min_by(|&a, &b| dist[n + a].total_cmp(&dist[n + b]));
        let Some(tj) = target else { break };
        let reach = dist[n + tj];
        for k in 0..n + m {
            potential[k] += dist[k].min(reach);
        }
        // Walk back to find the bottleneck.
        let mut amount = demand[tj];
        let mut node = n + tj;
        while prev[node] != usize::MAX {
            let p = prev[node];
            if node < n {
                // reverse edge sink p -> source node
                amount = amount.min(flow[node * m + (p - n)]);
            }
            node = p;
        }
        amount = amount.min(supply[node]);
        let source = node;
        let mut node = n + tj;
        while prev[node] != usize::MAX {
            let p = prev[node];
            if node >= n {
                flow[p * m + (node - n)] += amount;
            } else {
                flow[node * m + (p - n)] -= amount;
            }
            node = p;
        }
        supply[source] -= amount;
        demand[tj] -= amount;
    }
    flow.iter().zip(cost).map(|(f, c)| f.max(0.0) * c).sum()
}
