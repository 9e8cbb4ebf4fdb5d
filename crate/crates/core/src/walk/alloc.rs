// SPDX-License-Identifier: Apache-2.0

use std::cmp::Ordering;

use crate::graph::{BipartiteGraph, NodeId};

use super::{WalkError, WeightedQuery};

/// Multiplier applied to the degree when `ln(deg) >= C` would make the scaling factor
/// non-positive.
pub const DEGENERATE_SCALE: f64 = 1e-6;

/// Degree scaling factor `deg * (C - ln deg)` with the natural log, where `C` is the
/// largest pin degree. Sub-linear in `deg` while `ln deg < C - 1`.
pub fn scaling_factor(deg: u64, max_pin_degree: u64) -> Result<f64, WalkError> {
    if deg == 0 {
        return Err(WalkError::InvalidDegree);
    }
    let d = deg as f64;
    let c = max_pin_degree as f64;
    let ln = d.ln();
    if ln >= c {
        return Ok(d * DEGENERATE_SCALE);
    }
    Ok(d * (c - ln))
}

/// Splits `total` steps across the query pins in proportion to `w_q * s_q`.
///
/// Weights are normalised first. Each pin gets the floor of its share; the leftover steps
/// go one each to pins in descending `w_q * s_q` order (ties by pin ID). When
/// `total >= |Q|` every pin ends with at least one step, taking it from the largest
/// allocation if needed. The result is in query order and always sums to `total`.
pub fn allocate_steps(g: &BipartiteGraph, query: &WeightedQuery, total: u64) -> Result<Vec<(NodeId, u64)>, WalkError> {
    let entries = query.entries();
    let c = g.max_pin_degree();
    let mut priority = Vec::with_capacity(entries.len());
    for &(q, w) in entries {
        if !g.is_pin(q) {
            return Err(WalkError::InvalidQueryPin(q));
        }
        let deg = g.degree_unchecked(q);
        if deg == 0 {
            return Err(WalkError::InvalidQueryPin(q));
        }
        priority.push(w * scaling_factor(deg, c)?);
    }
    let weight_sum: f64 = entries.iter().map(|e| e.1).sum();
    for p in &mut priority {
        *p /= weight_sum;
    }
    let norm: f64 = priority.iter().sum();

    let mut steps: Vec<u64> = priority
        .iter()
        .map(|&p| ((total as f64) * p / norm).floor() as u64)
        .collect();
    // Float error can push the floor sum a hair over the budget.
    while steps.iter().sum::<u64>() > total {
        let i = argmax(&steps, &priority, entries);
        steps[i] -= 1;
    }

    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| {
        priority[b]
            .partial_cmp(&priority[a])
            .unwrap_or(Ordering::Equal)
            .then(entries[a].0.cmp(&entries[b].0))
    });

    let mut remainder = total - steps.iter().sum::<u64>();
    for &i in order.iter().cycle() {
        if remainder == 0 {
            break;
        }
        steps[i] += 1;
        remainder -= 1;
    }

    // Every pin gets a step when the budget allows; otherwise the highest-priority ones do.
    let guaranteed = (total as usize).min(entries.len());
    for &i in order[..guaranteed].iter().rev() {
        if steps[i] == 0 {
            let donor = argmax(&steps, &priority, entries);
            steps[donor] -= 1;
            steps[i] = 1;
        }
    }

    Ok(entries.iter().map(|e| e.0).zip(steps).collect())
}

/// Index with the most steps; ties go to the lower priority, then the higher pin ID, so
/// the most important pins are the last to give steps up.
fn argmax(steps: &[u64], priority: &[f64], entries: &[(NodeId, f64)]) -> usize {
    (0..steps.len())
        .max_by(|&a, &b| {
            steps[a]
                .cmp(&steps[b])
                .then(priority[b].partial_cmp(&priority[a]).unwrap_or(Ordering::Equal))
                .then(entries[a].0.cmp(&entries[b].0))
        })
        .expect("non-empty query")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, UserFeatures};

    /// Pins with the given degrees on a shared board pool; board `b` holds every pin
    /// whose degree exceeds `b`.
    fn graph_with_degrees(degrees: &[u32]) -> BipartiteGraph {
        let boards = *degrees.iter().max().unwrap();
        let mut b = GraphBuilder::new(degrees.len() as u32, boards);
        for (p, &d) in degrees.iter().enumerate() {
            for board in 0..d {
                b.add_edge(p as u32, board);
            }
        }
        b.build()
    }

    fn query(pins: &[(u32, f64)]) -> WeightedQuery {
        WeightedQuery::new(
            pins.iter().map(|&(p, w)| (NodeId(p), w)).collect(),
            UserFeatures::none(),
        )
        .unwrap()
    }

    #[test]
    fn scaling_factor_values() {
        assert_eq!(scaling_factor(1, 100).unwrap(), 100.0);
        assert_eq!(scaling_factor(1, 37).unwrap(), 37.0);
        assert!((scaling_factor(4, 100).unwrap() - 394.4548).abs() < 1e-3);
        assert!(scaling_factor(8, 100).unwrap() > scaling_factor(4, 100).unwrap());
        assert!(matches!(scaling_factor(0, 100), Err(WalkError::InvalidDegree)));
        // ln 3 > 1 = C: clamped.
        assert_eq!(scaling_factor(3, 1).unwrap(), 3.0 * DEGENERATE_SCALE);
    }

    #[test]
    fn equal_pins_split_evenly() {
        let g = graph_with_degrees(&[3, 3]);
        let a = allocate_steps(&g, &query(&[(0, 1.0), (1, 1.0)]), 1000).unwrap();
        assert_eq!(a, vec![(NodeId(0), 500), (NodeId(1), 500)]);
    }

    #[test]
    fn degree_one_and_four_with_c_100() {
        // Pin 2 exists only to set C = 100.
        let g = graph_with_degrees(&[1, 4, 100]);
        assert_eq!(g.max_pin_degree(), 100);
        let a = allocate_steps(&g, &query(&[(0, 1.0), (1, 1.0)]), 1000).unwrap();
        assert_eq!(a, vec![(NodeId(0), 202), (NodeId(1), 798)]);
    }

    #[test]
    fn single_pin_gets_everything() {
        let g = graph_with_degrees(&[5, 2]);
        let a = allocate_steps(&g, &query(&[(1, 0.3)]), 777).unwrap();
        assert_eq!(a, vec![(NodeId(1), 777)]);
    }

    #[test]
    fn weight_scale_does_not_matter() {
        let g = graph_with_degrees(&[1, 4, 9, 20]);
        let a = allocate_steps(&g, &query(&[(0, 1.0), (1, 2.0), (2, 3.0)]), 10_001).unwrap();
        let b = allocate_steps(&g, &query(&[(0, 10.0), (1, 20.0), (2, 30.0)]), 10_001).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tiny_weights_still_get_a_step() {
        let g = graph_with_degrees(&[1, 50]);
        let a = allocate_steps(&g, &query(&[(0, 1e-9), (1, 1.0)]), 100).unwrap();
        assert_eq!(a[0].1, 1);
        assert_eq!(a[0].1 + a[1].1, 100);
    }

    #[test]
    fn budget_smaller_than_query() {
        let g = graph_with_degrees(&[2, 2, 2]);
        let a = allocate_steps(&g, &query(&[(0, 1.0), (1, 3.0), (2, 2.0)]), 2).unwrap();
        assert_eq!(a, vec![(NodeId(0), 0), (NodeId(1), 1), (NodeId(2), 1)]);
    }

    #[test]
    fn isolated_query_pin_rejected() {
        let mut b = GraphBuilder::new(2, 1);
        b.add_edge(0, 0);
        let g = b.build();
        assert!(matches!(
            allocate_steps(&g, &query(&[(1, 1.0)]), 10),
            Err(WalkError::InvalidQueryPin(NodeId(1)))
        ));
        assert!(matches!(
            allocate_steps(&g, &query(&[(2, 1.0)]), 10),
            Err(WalkError::InvalidQueryPin(NodeId(2)))
        ));
    }
}
