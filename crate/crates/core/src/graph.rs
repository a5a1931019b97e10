//! Sensor graph construction: stations become nodes, directly connected
//! station pairs become directed edges weighted by `exp(-omega * d)`.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DEFAULT_OMEGA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub station_id: String,
    pub latitude: f64,
    pub longitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub from_id: String,
    pub to_id: String,
    pub distance_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub distance_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `D^-1/2 (W + I) D^-1/2`
    #[default]
    Sym,
    /// `D^-1 (W + I)`
    Row,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sym" => Ok(Self::Sym),
            "row" => Ok(Self::Row),
            other => Err(Error::config(format!("unknown normalization '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorGraph {
    node_ids: Vec<String>,
    edges: Vec<Edge>,
    adjacency: Tensor,
    omega: f64,
}

/// `exp(-omega * d)` for a road distance `d` in kilometres.
pub fn weight_fn(distance_km: f64, omega: f64) -> Result<f64> {
    if !(distance_km >= 0.0) || !distance_km.is_finite() {
        return Err(Error::invalid(format!("distance {distance_km} must be >= 0")));
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::invalid(format!("omega {omega} must be > 0")));
    }
    Ok((-omega * distance_km).exp())
}

/// Orders station ids numerically when both parse as integers, otherwise
/// lexicographically.
fn station_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}

pub fn build_graph(stations: &[Station], segments: &[Segment], omega: f64) -> Result<SensorGraph> {
    if !(omega > 0.0) {
        return Err(Error::invalid(format!("omega {omega} must be > 0")));
    }
    let mut node_ids: Vec<String> = stations.iter().map(|s| s.station_id.clone()).collect();
    node_ids.sort_by(|a, b| station_order(a, b));
    if let Some(dup) = node_ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::data(format!("duplicate station id '{}'", dup[0])));
    }
    let index: HashMap<&str, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(segments.len());
    for seg in segments {
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::data(format!("segment references unknown station '{id}'")))
        };
        let from = lookup(&seg.from_id)?;
        let to = lookup(&seg.to_id)?;
        if !(seg.distance_km > 0.0) || !seg.distance_km.is_finite() {
            return Err(Error::data(format!(
                "segment {} -> {} has non-positive distance {}",
                seg.from_id, seg.to_id, seg.distance_km
            )));
        }
        if from == to {
            return Err(Error::data(format!("segment {} loops onto itself", seg.from_id)));
        }
        if !seen.insert((from, to)) {
            return Err(Error::data(format!(
                "duplicate segment {} -> {}",
                seg.from_id, seg.to_id
            )));
        }
        edges.push(Edge {
            from,
            to,
            distance_km: seg.distance_km,
        });
    }
    SensorGraph::from_parts(node_ids, edges, omega)
}

impl SensorGraph {
    /// Assembles a graph from already-indexed edges.
    pub fn from_parts(node_ids: Vec<String>, edges: Vec<Edge>, omega: f64) -> Result<Self> {
        let n = node_ids.len();
        if n == 0 {
            return Err(Error::data("graph has no stations"));
        }
        let mut adjacency = Tensor::zeros(&[n, n]);
        for e in &edges {
            if e.from >= n || e.to >= n {
                return Err(Error::data(format!("edge {e:?} out of range")));
            }
            adjacency.set(e.from, e.to, weight_fn(e.distance_km, omega)?);
        }
        Ok(Self {
            node_ids,
            edges,
            adjacency,
            omega,
        })
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn adjacency(&self) -> &Tensor {
        &self.adjacency
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == id)
    }

    /// For each node `i`, the sources `j` of edges `j -> i`, plus `i` itself,
    /// in ascending index order.
    pub fn in_neighborhoods(&self) -> Vec<Vec<usize>> {
        let n = self.num_nodes();
        let mut nbrs: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for e in &self.edges {
            nbrs[e.to].push(e.from);
        }
        for list in &mut nbrs {
            list.sort_unstable();
            list.dedup();
        }
        nbrs
    }

    /// Subgraph over the given stations, in the given order. Edges touching a
    /// dropped station are removed.
    pub fn restrict(&self, keep: &[String]) -> Result<Self> {
        let mut remap = HashMap::new();
        for (new, id) in keep.iter().enumerate() {
            let old = self
                .index_of(id)
                .ok_or_else(|| Error::data(format!("station '{id}' is not in the graph")))?;
            remap.insert(old, new);
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|e| {
                Some(Edge {
                    from: *remap.get(&e.from)?,
                    to: *remap.get(&e.to)?,
                    distance_km: e.distance_km,
                })
            })
            .collect();
        Self::from_parts(keep.to_vec(), edges, self.omega)
    }

    /// Station and segment tables that rebuild this graph.
    pub fn to_tables(&self) -> (Vec<Station>, Vec<Segment>) {
        let stations = self
            .node_ids
            .iter()
            .map(|id| Station {
                station_id: id.clone(),
                latitude: 0.0,
                longitude: 0.0,
            })
            .collect();
        let segments = self
            .edges
            .iter()
            .map(|e| Segment {
                from_id: self.node_ids[e.from].clone(),
                to_id: self.node_ids[e.to].clone(),
                distance_km: e.distance_km,
            })
            .collect();
        (stations, segments)
    }
}

/// Propagation matrix for graph convolution, with self-loops added.
pub fn normalize_adjacency(g: &SensorGraph, scheme: Normalization) -> Tensor {
    let n = g.num_nodes();
    let mut a = g.adjacency.clone();
    for i in 0..n {
        a.set(i, i, a.at(i, i) + 1.0);
    }
    let degree: Vec<f64> = (0..n).map(|i| a.row(i).iter().sum()).collect();
    for i in 0..n {
        for j in 0..n {
            let v = a.at(i, j);
            if v == 0.0 {
                continue;
            }
            let scaled = match scheme {
                Normalization::Row => v / degree[i],
                Normalization::Sym => v / (degree[i].sqrt() * degree[j].sqrt()),
            };
            a.set(i, j, scaled);
        }
    }
    a
}

pub fn read_stations(path: &Path) -> Result<Vec<Station>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| with_path(e, path))?;
    check_header(rdr.headers()?, &["station_id", "latitude", "longitude"], path)?;
    rdr.deserialize()
        .map(|r| r.map_err(|e| with_path(e, path)))
        .collect()
}

pub fn read_segments(path: &Path) -> Result<Vec<Segment>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| with_path(e, path))?;
    check_header(rdr.headers()?, &["from_id", "to_id", "distance_km"], path)?;
    rdr.deserialize()
        .map(|r| r.map_err(|e| with_path(e, path)))
        .collect()
}

pub fn write_stations(path: &Path, stations: &[Station]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| with_path(e, path))?;
    for s in stations {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_segments(path: &Path, segments: &[Segment]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| with_path(e, path))?;
    w.write_record(["from_id", "to_id", "distance_km"])?;
    for s in segments {
        w.serialize((&s.from_id, &s.to_id, s.distance_km))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_graph(stations: &Path, segments: &Path, omega: f64) -> Result<SensorGraph> {
    build_graph(&read_stations(stations)?, &read_segments(segments)?, omega)
}

fn check_header(found: &csv::StringRecord, expected: &[&str], path: &Path) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::data(format!(
            "{}: expected header {}, found {}",
            path.display(),
            expected.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn with_path(e: csv::Error, path: &Path) -> Error {
    Error::data(format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn station(id: &str) -> Station {
        Station {
            station_id: id.into(),
            latitude: 0.0,
            longitude: 0.0,
        }
    }

    fn segment(a: &str, b: &str, d: f64) -> Segment {
        Segment {
            from_id: a.into(),
            to_id: b.into(),
            distance_km: d,
        }
    }

    #[test]
    fn weight_fn_values() {
        assert_eq!(weight_fn(0.0, 1.0).unwrap(), 1.0);
        assert!((weight_fn(2.0, 0.5).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!((weight_fn(10.0, 1.0).unwrap() - 4.539_992_976_248_485e-5).abs() < 1e-18);
        assert!(weight_fn(-1.0, 1.0).is_err());
        assert!(weight_fn(1.0, 0.0).is_err());
    }

    #[test]
    fn two_station_graph() {
        let g = build_graph(&[station("a"), station("b")], &[segment("a", "b", 0.001)], 1.0).unwrap();
        let adj = g.adjacency();
        assert_eq!(adj.at(0, 0), 0.0);
        assert_eq!(adj.at(1, 0), 0.0);
        assert_eq!(adj.at(1, 1), 0.0);
        assert!((adj.at(0, 1) - (-0.001f64).exp()).abs() < 1e-15);
        assert!((adj.at(0, 1) - 0.999).abs() < 1e-3);
    }

    #[test]
    fn line_has_no_shortcut() {
        let g = build_graph(
            &[station("i"), station("j"), station("k")],
            &[segment("i", "j", 1.0), segment("j", "k", 1.0)],
            DEFAULT_OMEGA,
        )
        .unwrap();
        assert_eq!(g.adjacency().count_nonzero(), 2);
        assert_eq!(g.adjacency().at(0, 2), 0.0);
    }

    #[test]
    fn empty_segments_give_zero_adjacency() {
        let g = build_graph(&[station("a"), station("b")], &[], 1.0).unwrap();
        assert_eq!(g.adjacency().count_nonzero(), 0);
    }

    #[test]
    fn node_order_is_sorted() {
        let g = build_graph(&[station("10"), station("9"), station("100")], &[], 1.0).unwrap();
        assert_eq!(g.node_ids(), &["9", "10", "100"]);
        let g = build_graph(&[station("b"), station("a")], &[], 1.0).unwrap();
        assert_eq!(g.node_ids(), &["a", "b"]);
    }

    #[test]
    fn construction_errors() {
        let st = [station("a"), station("b")];
        assert!(build_graph(&st, &[segment("a", "z", 1.0)], 1.0).is_err());
        assert!(build_graph(&st, &[segment("a", "b", 0.0)], 1.0).is_err());
        assert!(build_graph(&st, &[segment("a", "b", -2.0)], 1.0).is_err());
        assert!(build_graph(&[station("a"), station("a")], &[], 1.0).is_err());
        assert!(build_graph(&st, &[], 0.0).is_err());
    }

    #[test]
    fn normalization_schemes() {
        let g = build_graph(&[station("a"), station("b")], &[], 1.0).unwrap();
        assert_eq!(normalize_adjacency(&g, Normalization::Row), Tensor::eye(2));

        // w = 1 both ways needs d = 0, which segments reject; build directly.
        let edges = vec![
            Edge { from: 0, to: 1, distance_km: 0.0 },
            Edge { from: 1, to: 0, distance_km: 0.0 },
        ];
        let g = SensorGraph::from_parts(vec!["a".into(), "b".into()], edges, 1.0).unwrap();
        for scheme in [Normalization::Row, Normalization::Sym] {
            let p = normalize_adjacency(&g, scheme);
            assert!(p.data().iter().all(|&v| (v - 0.5).abs() < 1e-15), "{scheme:?}");
        }
    }

    #[test]
    fn row_normalized_rows_sum_to_one() {
        let g = build_graph(
            &[station("a"), station("b"), station("c")],
            &[segment("a", "b", 1.0), segment("a", "c", 3.0), segment("c", "b", 0.5)],
            0.3,
        )
        .unwrap();
        let p = normalize_adjacency(&g, Normalization::Row);
        for i in 0..3 {
            assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn restrict_drops_incident_edges() {
        let g = build_graph(
            &[station("a"), station("b"), station("c")],
            &[segment("a", "b", 1.0), segment("b", "c", 1.0)],
            1.0,
        )
        .unwrap();
        let sub = g.restrict(&["a".into(), "c".into()]).unwrap();
        assert_eq!(sub.num_nodes(), 2);
        assert!(sub.edges().is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let st = vec![station("a"), station("b")];
        let seg = vec![segment("a", "b", 1.25), segment("b", "a", 0.5)];
        write_stations(&dir.path().join("stations.csv"), &st).unwrap();
        write_segments(&dir.path().join("segments.csv"), &seg).unwrap();
        let text = std::fs::read_to_string(dir.path().join("segments.csv")).unwrap();
        assert!(text.starts_with("from_id,to_id,distance_km\n"));
        let g = load_graph(
            &dir.path().join("stations.csv"),
            &dir.path().join("segments.csv"),
            1.0,
        )
        .unwrap();
        assert_eq!(g.edges().len(), 2);
        assert_eq!(read_segments(&dir.path().join("segments.csv")).unwrap(), seg);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn weight_is_strictly_decreasing(d1 in 0.0f64..50.0, gap in 1e-6f64..10.0, omega in 0.01f64..2.0) {
                prop_assert!(weight_fn(d1, omega).unwrap() > weight_fn(d1 + gap, omega).unwrap());
            }

            #[test]
            fn weights_in_unit_interval(d in 1e-9f64..100.0, omega in 1e-3f64..5.0) {
                let w = weight_fn(d, omega).unwrap();
                prop_assert!(w > 0.0 && w <= 1.0);
            }
        }
    }
}
