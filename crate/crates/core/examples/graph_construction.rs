//! Builds a small directed sensor graph and prints its weighted adjacency
//! alongside both propagation normalisations.

use stgt::graph::{build_graph, normalize_adjacency, weight_fn, Normalization, Segment, Station};

fn main() -> stgt::Result<()> {
    let stations: Vec<Station> = ["717490", "717492", "717493", "717495"]
        .iter()
        .enumerate()
        .map(|(i, id)| Station { station_id: id.to_string(), latitude: 34.05 + 0.01 * i as f64, longitude: -118.25 })
        .collect();
    let seg = |a: &str, b: &str, d: f64| Segment { from_id: a.into(), to_id: b.into(), distance_km: d };
    // a one-way freeway stretch with a two-way connector at the end
    let segments = vec![
        seg("717490", "717492", 0.8),
        seg("717492", "717493", 1.6),
        seg("717493", "717495", 0.4),
        seg("717495", "717493", 0.4),
    ];
    let graph = build_graph(&stations, &segments, 0.1)?;

    println!("w(d) = exp(-0.1 d): d=0.4 -> {:.4}, d=1.6 -> {:.4}", weight_fn(0.4, 0.1)?, weight_fn(1.6, 0.1)?);
    println!("node order: {:?}", graph.node_ids());
    print_matrix("adjacency", graph.adjacency());
    print_matrix("sym  D^-1/2 (W+I) D^-1/2", &normalize_adjacency(&graph, Normalization::Sym));
    print_matrix("row  D^-1 (W+I)", &normalize_adjacency(&graph, Normalization::Row));
    Ok(())
}

fn print_matrix(title: &str, m: &stgt::Tensor) {
    println!("{title}:");
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:7.4}")).collect();
        println!("  [{}]", row.join(" "));
    }
}
