//! Map graphs for map-based movement.
//!
//! File format, whitespace-delimited, `#` starts a comment:
//!
//! ```text
//! V <id> <x> <y>          # vertex, coordinates in meters
//! E <id1> <id2>           # undirected edge, length is the Euclidean distance
//! POI <group> <id> <w>    # vertex in a point-of-interest group, relative weight
//! ```

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::path::Path;

use thiserror::Error;

use super::Point;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("map has no vertices")]
    Empty,
    #[error("map is not connected: vertex {0} unreachable")]
    Disconnected(String),
    #[error("edge {0}-{1} has zero length")]
    ZeroLength(String, String),
    #[error("POI group {0} has no positive weight")]
    EmptyGroup(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct PoiGroup {
    pub name: String,
    /// Vertex index and normalized selection probability.
    pub members: Vec<(usize, f64)>,
}

impl PoiGroup {
    /// Picks a member given a uniform draw in [0, 1).
    pub fn pick(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for &(v, p) in &self.members {
            acc += p;
            if u < acc {
                return v;
            }
        }
        self.members.last().expect("groups are non-empty").0
    }
}

#[derive(Debug, Clone)]
pub struct MapGraph {
    ids: Vec<String>,
    coords: Vec<Point>,
    adjacency: Vec<Vec<(usize, f64)>>,
    poi_groups: Vec<PoiGroup>,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MapGraph {
    pub fn parse(text: &str) -> Result<MapGraph, MapError> {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut ids = Vec::new();
        let mut coords = Vec::new();
        let mut edges = Vec::new();
        let mut pois: BTreeMap<String, Vec<(String, f64, usize)>> = BTreeMap::new();

        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = content.split_whitespace().collect();
            let err = |msg: String| MapError::Parse { line, msg };
            let num = |s: &str| -> Result<f64, MapError> {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("bad number {s:?}")))
            };
            match toks.as_slice() {
                [] => {}
                ["V", id, x, y] => {
                    if index.contains_key(*id) {
                        return Err(err(format!("duplicate vertex {id}")));
                    }
                    index.insert(id.to_string(), ids.len());
                    ids.push(id.to_string());
                    coords.push(Point::new(num(x)?, num(y)?));
                }
                ["E", a, b] => edges.push((a.to_string(), b.to_string(), line)),
                ["POI", group, id, w] => {
                    let w = num(w)?;
                    if w < 0.0 {
                        return Err(err(format!("negative weight {w}")));
                    }
                    pois.entry(group.to_string())
                        .or_default()
                        .push((id.to_string(), w, line));
                }
                _ => return Err(err(format!("unrecognized line {:?}", raw.trim()))),
            }
        }

        let lookup = |id: &str, line: usize| {
            index.get(id).copied().ok_or_else(|| MapError::Parse {
                line,
                msg: format!("unknown vertex {id}"),
            })
        };
        let mut adjacency = vec![Vec::new(); ids.len()];
        for (a, b, line) in edges {
            let (ia, ib) = (lookup(&a, line)?, lookup(&b, line)?);
            let len = coords[ia].distance(coords[ib]);
            if len <= 0.0 {
                return Err(MapError::ZeroLength(a, b));
            }
            if !adjacency[ia].iter().any(|&(v, _)| v == ib) {
                adjacency[ia].push((ib, len));
                adjacency[ib].push((ia, len));
            }
        }
        let mut poi_groups = Vec::new();
        for (name, members) in pois {
            let total: f64 = members.iter().map(|m| m.1).sum();
            if total <= 0.0 {
                return Err(MapError::EmptyGroup(name));
            }
            let members = members
                .into_iter()
                .filter(|m| m.1 > 0.0)
                .map(|(id, w, line)| Ok((lookup(&id, line)?, w / total)))
                .collect::<Result<Vec<_>, MapError>>()?;
            poi_groups.push(PoiGroup { name, members });
        }

        let map = MapGraph {
            ids,
            coords,
            adjacency,
            poi_groups,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<MapGraph, MapError> {
        let text = std::fs::read_to_string(path).map_err(|source| MapError::Io {
            path: path.display().to_string(),
            source,
        })?;
        MapGraph::parse(&text)
    }

    fn validate(&self) -> Result<(), MapError> {
        if self.ids.is_empty() {
            return Err(MapError::Empty);
        }
        let mut seen = vec![false; self.ids.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(v) => Err(MapError::Disconnected(self.ids[v].clone())),
            None => Ok(()),
        }
    }

    /// Square grid of `cells × cells` blocks with `spacing` meters per block,
    /// i.e. `(cells + 1)²` vertices. Four POI groups (`nw`, `ne`, `sw`, `se`)
    /// cover the 2×2-block neighbourhood of each corner, the corner vertex
    /// weighted double.
    pub fn grid(cells: usize, spacing: f64) -> MapGraph {
        let side = cells + 1;
        let mut text = String::new();
        for r in 0..side {
            for c in 0..side {
                text.push_str(&format!(
                    "V {r}_{c} {} {}\n",
                    c as f64 * spacing,
                    r as f64 * spacing
                ));
            }
        }
        for r in 0..side {
            for c in 0..side {
                if c + 1 < side {
                    text.push_str(&format!("E {r}_{c} {r}_{}\n", c + 1));
                }
                if r + 1 < side {
                    text.push_str(&format!("E {r}_{c} {}_{c}\n", r + 1));
                }
            }
        }
        // One meeting point per quadrant, set in from each corner.
        let inset = (cells * 3) / 10;
        let far = cells - inset;
        let corners = [
            ("sw", inset, inset),
            ("se", inset, far),
            ("nw", far, inset),
            ("ne", far, far),
        ];
        for (group, r, c) in corners {
            text.push_str(&format!("POI {group} {r}_{c} 1\n"));
        }
        MapGraph::parse(&text).expect("generated grid is valid")
    }

    /// The bundled synthetic map: 10×10 blocks of 450 m spanning 4.5 km.
    pub fn default_grid() -> MapGraph {
        MapGraph::grid(10, 450.0)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }

    pub fn position(&self, v: usize) -> Point {
        self.coords[v]
    }

    pub fn neighbours(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn poi_groups(&self) -> &[PoiGroup] {
        &self.poi_groups
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, adj)| {
            adj.iter()
                .filter(move |&&(b, _)| a < b)
                .map(move |&(b, len)| (a, b, len))
        })
    }

    /// Shortest path from `from` to `to` as a vertex sequence including both
    /// endpoints, with its length. `None` if unreachable.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<(Vec<usize>, f64)> {
        let n = self.ids.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[from] = 0.0;
        heap.push(HeapItem {
            dist: 0.0,
            vertex: from,
        });
        while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
            if v == to {
                break;
            }
            if d > dist[v] {
                continue;
            }
            for &(w, len) in &self.adjacency[v] {
                let nd = d + len;
                if nd < dist[w] {
                    dist[w] = nd;
                    prev[w] = v;
                    heap.push(HeapItem {
                        dist: nd,
                        vertex: w,
                    });
                }
            }
        }
        if !dist[to].is_finite() {
            return None;
        }
        let mut path = vec![to];
        let mut v = to;
        while v != from {
            v = prev[v];
            path.push(v);
        }
        path.reverse();
        Some((path, dist[to]))
    }

    /// Distance from `p` to the nearest edge segment.
    pub fn distance_to_network(&self, p: Point) -> f64 {
        self.edges()
            .map(|(a, b, _)| p.distance_to_segment(self.coords[a], self.coords[b]))
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// All-pairs shortest path lengths by Floyd–Warshall.
    fn floyd(map: &MapGraph) -> Vec<Vec<f64>> {
        let n = map.len();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (v, row) in d.iter_mut().enumerate() {
            row[v] = 0.0;
            for &(w, len) in map.neighbours(v) {
                row[w] = len;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        d
    }

    #[test]
    fn parses_vertices_edges_and_pois() {
        let map = MapGraph::parse(
            "# tiny\nV a 0 0\nV b 3 4\nV c 3 0  # trailing\nE a b\nE b c\nPOI g a 1\nPOI g c 3\n",
        )
        .unwrap();
        assert_eq!(map.len(), 3);
        assert_eq!(map.neighbours(0), &[(1, 5.0)]);
        let g = &map.poi_groups()[0];
        assert_eq!(g.members, vec![(0, 0.25), (2, 0.75)]);
        assert_eq!(g.pick(0.1), 0);
        assert_eq!(g.pick(0.3), 2);
    }

    #[test]
    fn rejects_malformed_maps() {
        assert!(matches!(
            MapGraph::parse("V a 0 0\nV b 1 0\n"),
            Err(MapError::Disconnected(_))
        ));
        assert!(matches!(MapGraph::parse(""), Err(MapError::Empty)));
        assert!(matches!(
            MapGraph::parse("V a 0 0\nV b 0 0\nE a b\n"),
            Err(MapError::ZeroLength(..))
        ));
        assert!(matches!(
            MapGraph::parse("V a 0 0\nE a zz\n"),
            Err(MapError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            MapGraph::parse("V a x 0\n"),
            Err(MapError::Parse { line: 1, .. })
        ));
        assert!(MapGraph::parse("V a 0 0\nQ a\n").is_err());
        assert!(matches!(
            MapGraph::parse("V a 0 0\nPOI g a 0\n"),
            Err(MapError::EmptyGroup(_))
        ));
    }

    #[test]
    fn default_grid_spans_four_and_a_half_km() {
        let map = MapGraph::default_grid();
        assert_eq!(map.len(), 121);
        assert_eq!(map.edges().count(), 2 * 11 * 10);
        let far = map.vertex_index("10_10").unwrap();
        assert_eq!(map.position(far), Point::new(4500.0, 4500.0));
        assert_eq!(map.poi_groups().len(), 4);
        for g in map.poi_groups() {
            let total: f64 = g.members.iter().map(|m| m.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert_eq!(g.members.len(), 1);
        }
    }

    #[test]
    fn corner_to_corner_matches_manhattan_and_floyd() {
        let map = MapGraph::grid(4, 100.0);
        let a = map.vertex_index("0_0").unwrap();
        let c = map.vertex_index("4_4").unwrap();
        let (path, len) = map.shortest_path(a, c).unwrap();
        assert_eq!(len, 800.0);
        assert_eq!(path.len(), 9);
        assert_eq!(path[0], a);
        assert_eq!(*path.last().unwrap(), c);
        let oracle = floyd(&map);
        assert_eq!(oracle[a][c], 800.0);
    }

    #[test]
    fn dijkstra_agrees_with_floyd_on_irregular_map() {
        let text = "V a 0 0\nV b 10 0\nV c 10 10\nV d 0 10\nV e 5 5\nV f 20 5\n\
                    E a b\nE b c\nE c d\nE d a\nE a e\nE e c\nE b f\nE f c\n";
        let map = MapGraph::parse(text).unwrap();
        let oracle = floyd(&map);
        for (i, row) in oracle.iter().enumerate() {
            for (j, &expected) in row.iter().enumerate() {
                let (path, len) = map.shortest_path(i, j).unwrap();
                assert!((len - expected).abs() < 1e-9);
                let walked: f64 = path
                    .windows(2)
                    .map(|w| map.position(w[0]).distance(map.position(w[1])))
                    .sum();
                assert!((walked - len).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn same_vertex_path_is_trivial() {
        let map = MapGraph::grid(2, 10.0);
        assert_eq!(map.shortest_path(3, 3), Some((vec![3], 0.0)));
    }
}
