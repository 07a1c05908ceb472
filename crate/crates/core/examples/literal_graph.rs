//! Literal co-occurrence graph of a factorization instance: size,
//! diameter, distance histogram and one shortest path.

use memflow::{build_multiplier, encode_cnf, graph_distance, literal_graph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (n, pw, qw) in [(15, 2, 3), (143, 4, 4), (481, 4, 6), (497503, 9, 10)] {
        let cs = encode_cnf(&build_multiplier(pw, qw)?, n)?;
        let g = literal_graph(&cs);
        let hist: Vec<usize> = g.pairs_by_distance().iter().skip(1).map(Vec::len).collect();
        println!("n={n:<7} vertices={:<4} diameter={:<3} pairs by distance {:?}", g.len(), g.diameter(), hist);
    }

    let cs = encode_cnf(&build_multiplier(4, 6)?, 481)?;
    let g = literal_graph(&cs);
    // Endpoints of one longest shortest path.
    let (a, b) = g.pairs_by_distance()[g.diameter()][0];
    let d = graph_distance(&g, a, b)?;
    let path = g.shortest_path(a, b)?.unwrap_or_default();
    let names: Vec<&str> = path.iter().map(|&v| cs.node_map[v].as_str()).collect();
    println!("dist({}, {}) = {d:?} via {}", cs.node_map[a], cs.node_map[b], names.join(" - "));
    Ok(())
}
