//! Small worked-example networks used by tests and the browser demo.

use crate::backbone::Attributes;
use crate::netgraph::{build_udg, neighbor_tables, NodeId, UdgSnapshot};

/// A hand-checkable ten-node network (R = 250 m).
///
/// Its structure pins down the whole construction pipeline: node 2's
/// strict 2-hop set is {4, 5, 8, 9}, the greedy relay picks are
/// MPR(1) = {2}, MPR(2) = {10}, MPR(9) = {7}, MPR(10) = {9}, and the
/// resulting backbone is exactly {2, 7, 9, 10} with no pruning.
pub fn ten_node_example() -> (UdgSnapshot, Attributes) {
    let g = ten_node_graph();
    let tables = neighbor_tables(&g);
    let energy: &[(NodeId, f64)] = &[
        (1, 8.0),
        (2, 11.0),
        (3, 7.0),
        (4, 5.0),
        (5, 4.5),
        (6, 6.0),
        (7, 10.0),
        (8, 4.0),
        (9, 12.0),
        (10, 9.0),
    ];
    let attrs = Attributes::build(&tables, |id| {
        let e = energy.iter().find(|&&(n, _)| n == id).unwrap().1;
        (e, 0.0)
    });
    (g, attrs)
}

/// Positions only, for callers that bring their own attributes.
pub fn ten_node_graph() -> UdgSnapshot {
    build_udg(
        &[
            (1, 162.2, 315.8),
            (2, 334.2, 162.7),
            (3, 207.8, 50.0),
            (4, 202.9, 400.3),
            (5, 50.0, 312.5),
            (6, 396.5, 181.7),
            (7, 201.2, 88.9),
            (8, 138.1, 393.4),
            (9, 75.3, 238.3),
            (10, 277.3, 347.9),
        ],
        250.0,
    )
    .expect("fixture coordinates are valid")
}
