//! Clustered structured cyclic overlay topology (SCOT).
//!
//! A SCOT is the Cartesian product of an acyclic factor and a complete
//! factor. Every copy of the acyclic factor is a *cluster*, every copy of the
//! complete factor is a *region*. Brokers are named `B(x, i)` with `x` a
//! vertex of the acyclic factor and `i` a cluster index.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{GraphError, TopologyError};
use crate::graph::{Graph, GraphSpec, VertexLabel};

/// Broker `B(x, i)`: `region` indexes the acyclic-factor vertex `x` and
/// `cluster` is the cluster index `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BrokerId {
    pub region: u32,
    pub cluster: u32,
}

impl BrokerId {
    pub fn new(region: usize, cluster: usize) -> Self {
        BrokerId {
            region: region as u32,
            cluster: cluster as u32,
        }
    }

    pub fn cluster(self) -> usize {
        self.cluster as usize
    }

    pub fn region(self) -> usize {
        self.region as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkKind {
    /// Intra-cluster overlay link.
    Acol,
    /// Inter-cluster overlay link.
    Icol,
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkKind::Acol => "aCOL",
            LinkKind::Icol => "iCOL",
        })
    }
}

/// Directed view `l<source, destination>` of an overlay edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkRef {
    pub source: BrokerId,
    pub destination: BrokerId,
    pub kind: LinkKind,
}

impl LinkRef {
    pub fn reversed(self) -> LinkRef {
        LinkRef {
            source: self.destination,
            destination: self.source,
            kind: self.kind,
        }
    }
}

/// Dense index of a directed link inside a topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BrokerKind {
    /// At most one primary neighbour.
    Edge,
    /// At least two primary neighbours.
    Inner,
}

impl fmt::Display for BrokerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BrokerKind::Edge => "edge",
            BrokerKind::Inner => "inner",
        })
    }
}

/// How connectivity-factor labels are turned into cluster indexes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexMode {
    /// Relabel to `0..k` in natural sorted order.
    #[default]
    Relabel,
    /// Labels must already be exactly the integers `0..k`.
    Strict,
}

#[derive(Debug, Clone)]
pub struct ScotTopology {
    af: Graph,
    cf: Graph,
    /// cf vertex index for each cluster index
    cluster_vertex: Vec<usize>,
    /// cluster index for each cf vertex index
    vertex_cluster: Vec<usize>,
    af_diameter: u32,
    links: Vec<LinkRef>,
    link_ids: HashMap<(BrokerId, BrokerId), LinkId>,
}

impl ScotTopology {
    /// Builds and validates a SCOT, relabelling cf vertices to cluster indexes.
    pub fn build(af: Graph, cf: Graph) -> Result<Self, TopologyError> {
        Self::build_with(af, cf, IndexMode::Relabel)
    }

    pub fn build_with(af: Graph, cf: Graph, mode: IndexMode) -> Result<Self, TopologyError> {
        if af.is_empty() || cf.is_empty() {
            return Err(GraphError::EmptyOperand.into());
        }
        if af.labels().iter().chain(cf.labels()).any(VertexLabel::is_pair) {
            return Err(GraphError::NestedProduct.into());
        }
        if !af.is_acyclic() {
            return Err(TopologyError::AcyclicPropertyViolation);
        }
        let af_diameter = af
            .diameter()
            .map_err(|e| TopologyError::DisconnectedAcyclicFactor(e.to_string()))?;
        if !cf.is_complete() {
            return Err(TopologyError::ConnectivityPropertyViolation);
        }

        let k = cf.order();
        let mut cluster_vertex: Vec<usize> = (0..k).collect();
        cluster_vertex.sort_by(|&a, &b| cf.label(a).cmp(cf.label(b)));
        if mode == IndexMode::Strict {
            for (i, &v) in cluster_vertex.iter().enumerate() {
                let label = cf.label(v);
                if label.as_atom() != Some(i.to_string().as_str()) {
                    return Err(TopologyError::IndexPropertyViolation {
                        expected: k,
                        found: label.to_string(),
                    });
                }
            }
        }
        let mut vertex_cluster = vec![0; k];
        for (i, &v) in cluster_vertex.iter().enumerate() {
            vertex_cluster[v] = i;
        }

        let mut links = Vec::with_capacity(2 * (af.size() * k + af.order() * cf.size()));
        for x in 0..af.order() {
            for c in 0..k {
                let b = BrokerId::new(x, c);
                for &y in af.neighbours(x) {
                    links.push(LinkRef {
                        source: b,
                        destination: BrokerId::new(y, c),
                        kind: LinkKind::Acol,
                    });
                }
                for d in (0..k).filter(|&d| d != c) {
                    links.push(LinkRef {
                        source: b,
                        destination: BrokerId::new(x, d),
                        kind: LinkKind::Icol,
                    });
                }
            }
        }
        links.sort();
        let link_ids = links
            .iter()
            .enumerate()
            .map(|(i, l)| ((l.source, l.destination), LinkId(i as u32)))
            .collect();

        Ok(ScotTopology {
            af,
            cf,
            cluster_vertex,
            vertex_cluster,
            af_diameter,
            links,
            link_ids,
        })
    }

    pub fn acyclic_factor(&self) -> &Graph {
        &self.af
    }

    pub fn connectivity_factor(&self) -> &Graph {
        &self.cf
    }

    pub fn cluster_count(&self) -> usize {
        self.cf.order()
    }

    pub fn region_count(&self) -> usize {
        self.af.order()
    }

    pub fn broker_count(&self) -> usize {
        self.af.order() * self.cf.order()
    }

    pub fn af_diameter(&self) -> u32 {
        self.af_diameter
    }

    /// Undirected aCOL count, ‖G_af‖·|G_cf|.
    pub fn acol_count(&self) -> usize {
        self.af.size() * self.cf.order()
    }

    /// Undirected iCOL count, |G_af|·‖G_cf‖.
    pub fn icol_count(&self) -> usize {
        self.af.order() * self.cf.size()
    }

    /// Undirected overlay edge count.
    pub fn overlay_edge_count(&self) -> usize {
        self.acol_count() + self.icol_count()
    }

    /// All brokers ordered by (region, cluster).
    pub fn brokers(&self) -> impl Iterator<Item = BrokerId> + '_ {
        let k = self.cluster_count();
        (0..self.region_count()).flat_map(move |x| (0..k).map(move |c| BrokerId::new(x, c)))
    }

    /// Dense index of a broker in `brokers()` order.
    pub fn broker_index(&self, b: BrokerId) -> usize {
        b.region() * self.cluster_count() + b.cluster()
    }

    pub fn contains(&self, b: BrokerId) -> bool {
        b.region() < self.region_count() && b.cluster() < self.cluster_count()
    }

    fn check(&self, b: BrokerId) -> Result<(), TopologyError> {
        if self.contains(b) {
            Ok(())
        } else {
            Err(TopologyError::UnknownBroker(format!("B({},{})", b.region, b.cluster)))
        }
    }

    pub fn cluster_of(&self, b: BrokerId) -> Result<usize, TopologyError> {
        self.check(b)?;
        Ok(b.cluster())
    }

    pub fn region_of(&self, b: BrokerId) -> Result<&VertexLabel, TopologyError> {
        self.check(b)?;
        Ok(self.af.label(b.region()))
    }

    /// Same-cluster neighbours, reached over aCOLs.
    pub fn primary_neighbours(&self, b: BrokerId) -> Result<Vec<BrokerId>, TopologyError> {
        self.check(b)?;
        Ok(self
            .af
            .neighbours(b.region())
            .iter()
            .map(|&y| BrokerId::new(y, b.cluster()))
            .collect())
    }

    /// Same-region neighbours, reached over iCOLs.
    pub fn secondary_neighbours(&self, b: BrokerId) -> Result<Vec<BrokerId>, TopologyError> {
        self.check(b)?;
        Ok((0..self.cluster_count())
            .filter(|&c| c != b.cluster())
            .map(|c| BrokerId::new(b.region(), c))
            .collect())
    }

    /// All direct neighbours in `BrokerId` order.
    pub fn neighbours(&self, b: BrokerId) -> Result<Vec<BrokerId>, TopologyError> {
        let mut all = self.primary_neighbours(b)?;
        all.extend(self.secondary_neighbours(b)?);
        all.sort();
        Ok(all)
    }

    pub fn classify_broker(&self, b: BrokerId) -> Result<BrokerKind, TopologyError> {
        self.check(b)?;
        Ok(if self.af.degree(b.region()) <= 1 {
            BrokerKind::Edge
        } else {
            BrokerKind::Inner
        })
    }

    /// The unique iCOL leaving `b` toward cluster `c`.
    pub fn icol_toward(&self, b: BrokerId, c: usize) -> Result<LinkRef, TopologyError> {
        self.check(b)?;
        if c >= self.cluster_count() {
            return Err(TopologyError::ClusterOutOfRange {
                index: c,
                count: self.cluster_count(),
            });
        }
        if c == b.cluster() {
            return Err(TopologyError::OwnCluster {
                broker: self.broker_label(b),
                cluster: c,
            });
        }
        Ok(LinkRef {
            source: b,
            destination: BrokerId::new(b.region(), c),
            kind: LinkKind::Icol,
        })
    }

    /// All directed links sorted by (source, destination).
    pub fn links(&self) -> &[LinkRef] {
        &self.links
    }

    pub fn link_id(&self, source: BrokerId, destination: BrokerId) -> Option<LinkId> {
        self.link_ids.get(&(source, destination)).copied()
    }

    pub fn link(&self, source: BrokerId, destination: BrokerId) -> Result<LinkRef, TopologyError> {
        self.link_id(source, destination)
            .map(|id| self.links[id.0 as usize])
            .ok_or_else(|| TopologyError::NotAdjacent(self.broker_label(source), self.broker_label(destination)))
    }

    pub fn link_by_id(&self, id: LinkId) -> LinkRef {
        self.links[id.0 as usize]
    }

    /// Cluster index assigned to a connectivity-factor label.
    pub fn cluster_for_label(&self, label: &str) -> Option<usize> {
        self.cf
            .index_of(&VertexLabel::atom(label))
            .map(|v| self.vertex_cluster[v])
    }

    /// The original connectivity-factor label of cluster `c`.
    pub fn cluster_label(&self, c: usize) -> &VertexLabel {
        self.cf.label(self.cluster_vertex[c])
    }

    /// `(x,i)` with the af label and cluster index.
    pub fn broker_label(&self, b: BrokerId) -> String {
        match self.af.labels().get(b.region()) {
            Some(l) => format!("({l},{})", b.cluster),
            None => format!("(?{},{})", b.region, b.cluster),
        }
    }

    pub fn link_label(&self, l: LinkRef) -> String {
        format!("{}->{}", self.broker_label(l.source), self.broker_label(l.destination))
    }

    /// Parses `a,0`, `(a,0)` or `a 0` into a broker. The second part is a
    /// cluster index.
    pub fn parse_broker(&self, text: &str) -> Result<BrokerId, TopologyError> {
        let trimmed = text.trim().trim_start_matches('(').trim_end_matches(')');
        let (region, cluster) = trimmed
            .rsplit_once(',')
            .or_else(|| trimmed.rsplit_once(' '))
            .ok_or_else(|| TopologyError::UnknownBroker(text.to_string()))?;
        let x = self
            .af
            .index_of(&VertexLabel::atom(region.trim()))
            .ok_or_else(|| TopologyError::UnknownBroker(text.to_string()))?;
        let c: usize = cluster
            .trim()
            .parse()
            .map_err(|_| TopologyError::UnknownBroker(text.to_string()))?;
        let b = BrokerId::new(x, c);
        self.check(b)
            .map_err(|_| TopologyError::UnknownBroker(text.to_string()))?;
        Ok(b)
    }

    /// The product graph of the two factors, built independently of the link
    /// table.
    pub fn product_graph(&self) -> Graph {
        self.af
            .cartesian_product(&self.cf)
            .expect("factors validated at build time")
    }

    pub fn summary(&self) -> String {
        format!(
            "{} brokers, {} links, {} clusters, {} regions",
            self.broker_count(),
            self.overlay_edge_count(),
            self.cluster_count(),
            self.region_count()
        )
    }

    /// Text listing of brokers, undirected links and counts.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str("# brokers\n");
        for b in self.brokers() {
            let kind = self.classify_broker(b).expect("valid broker");
            let _ = writeln!(
                out,
                "{} cluster={} region={} kind={}",
                self.broker_label(b),
                b.cluster,
                self.af.label(b.region()),
                kind
            );
        }
        out.push_str("# links\n");
        for l in self.links.iter().filter(|l| l.source < l.destination) {
            let _ = writeln!(
                out,
                "{} -- {} {}",
                self.broker_label(l.source),
                self.broker_label(l.destination),
                l.kind
            );
        }
        let inner = self
            .brokers()
            .filter(|&b| self.classify_broker(b) == Ok(BrokerKind::Inner))
            .count();
        out.push_str("# summary\n");
        let _ = writeln!(out, "{}", self.summary());
        let _ = writeln!(
            out,
            "acols={} icols={} inner_brokers={} edge_brokers={} af_diameter={}",
            self.acol_count(),
            self.icol_count(),
            inner,
            self.broker_count() - inner,
            self.af_diameter
        );
        out
    }
}

/// Serializable topology description: the two factors plus index handling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub af: GraphSpec,
    pub cf: GraphSpec,
    #[serde(default)]
    pub index_mode: IndexMode,
}

impl TopologySpec {
    pub fn build(&self) -> Result<ScotTopology, TopologyError> {
        ScotTopology::build_with(self.af.build()?, self.cf.build()?, self.index_mode)
    }
}

/// Acyclic factor of the two-cluster-row examples: the H-graph on `a..f`.
pub fn h_graph_spec() -> GraphSpec {
    GraphSpec::Tree(
        [("a", "b"), ("b", "c"), ("d", "e"), ("e", "f"), ("b", "e")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
    )
}

/// The 15-vertex evaluation tree (five inner vertices `vi..x`).
pub fn evaluation_tree_spec() -> GraphSpec {
    GraphSpec::Tree(
        [
            ("i", "vi"),
            ("vi", "vii"),
            ("vii", "viii"),
            ("ix", "x"),
            ("vii", "xii"),
            ("vi", "xi"),
            ("viii", "xiii"),
            ("viii", "ix"),
            ("ix", "xiv"),
            ("x", "xv"),
            ("ii", "vii"),
            ("iii", "viii"),
            ("iv", "ix"),
            ("v", "x"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect(),
    )
}

/// H-graph □ triangle (18 brokers).
pub fn h_graph_topology() -> TopologySpec {
    TopologySpec {
        af: h_graph_spec(),
        cf: GraphSpec::Complete(3),
        index_mode: IndexMode::Strict,
    }
}

/// 15-vertex tree □ K5 (75 brokers).
pub fn evaluation_topology() -> TopologySpec {
    TopologySpec {
        af: evaluation_tree_spec(),
        cf: GraphSpec::Complete(5),
        index_mode: IndexMode::Strict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_complete, make_path, make_star};

    fn fig3() -> ScotTopology {
        h_graph_topology().build().unwrap()
    }

    fn b(t: &ScotTopology, s: &str) -> BrokerId {
        t.parse_broker(s).unwrap()
    }

    #[test]
    fn h_graph_counts() {
        let t = fig3();
        assert_eq!(t.broker_count(), 18);
        assert_eq!(t.cluster_count(), 3);
        assert_eq!(t.region_count(), 6);
        assert_eq!(t.acol_count(), 15);
        assert_eq!(t.icol_count(), 18);
        assert_eq!(t.overlay_edge_count(), 33);
        assert_eq!(t.links().len(), 66);
        assert_eq!(t.summary(), "18 brokers, 33 links, 3 clusters, 6 regions");
    }

    #[test]
    fn evaluation_counts() {
        let t = evaluation_topology().build().unwrap();
        assert_eq!(t.broker_count(), 75);
        assert_eq!(t.cluster_count(), 5);
        assert_eq!(t.region_count(), 15);
        // 14 af edges x 5 clusters, 15 regions x 10 cf edges
        assert_eq!(t.acol_count(), 70);
        assert_eq!(t.icol_count(), 150);
        let inner = t
            .brokers()
            .filter(|&x| t.classify_broker(x).unwrap() == BrokerKind::Inner)
            .count();
        assert_eq!(inner, 25);
        for name in ["vi", "vii", "viii", "ix", "x"] {
            for c in 0..5 {
                let id = b(&t, &format!("{name},{c}"));
                assert_eq!(t.classify_broker(id).unwrap(), BrokerKind::Inner);
            }
        }
    }

    #[test]
    fn cluster_and_region_projection() {
        let t = fig3();
        let b0 = b(&t, "b,0");
        assert_eq!(t.cluster_of(b0).unwrap(), 0);
        assert_eq!(t.region_of(b0).unwrap(), &VertexLabel::atom("b"));
        assert_eq!(t.cluster_of(b(&t, "a,2")).unwrap(), 2);
        assert!(t.cluster_of(BrokerId::new(9, 0)).is_err());
    }

    #[test]
    fn neighbours_of_b0() {
        let t = fig3();
        let b0 = b(&t, "(b,0)");
        let prim = t.primary_neighbours(b0).unwrap();
        let sec = t.secondary_neighbours(b0).unwrap();
        assert_eq!(prim, vec![b(&t, "a,0"), b(&t, "c,0"), b(&t, "e,0")]);
        assert_eq!(sec, vec![b(&t, "b,1"), b(&t, "b,2")]);
    }

    #[test]
    fn path2_times_k3_primary() {
        let t = ScotTopology::build(make_path(2).unwrap(), make_complete(3).unwrap()).unwrap();
        let b00 = BrokerId::new(0, 0);
        assert_eq!(t.primary_neighbours(b00).unwrap(), vec![BrokerId::new(1, 0)]);
        assert_eq!(t.secondary_neighbours(b00).unwrap().len(), 2);
    }

    #[test]
    fn icol_toward_examples() {
        let t = ScotTopology::build(make_path(3).unwrap(), make_complete(3).unwrap()).unwrap();
        // af path labels 0-1-2 stand in for a-b-c
        let b2 = BrokerId::new(1, 2);
        let l = t.icol_toward(b2, 0).unwrap();
        assert_eq!(l.destination, BrokerId::new(1, 0));
        assert_eq!(l.kind, LinkKind::Icol);
        assert!(t.icol_toward(b2, 2).is_err());
        assert!(t.icol_toward(b2, 3).is_err());
        for x in t.brokers() {
            let n = (0..3).filter(|&c| t.icol_toward(x, c).is_ok()).count();
            assert_eq!(n, 2);
        }
    }

    #[test]
    fn property_violations() {
        let cyc = make_complete(3).unwrap();
        assert_eq!(
            ScotTopology::build(cyc.clone(), cyc.clone()).unwrap_err(),
            TopologyError::AcyclicPropertyViolation
        );
        assert_eq!(
            ScotTopology::build(make_path(3).unwrap(), make_path(3).unwrap()).unwrap_err(),
            TopologyError::ConnectivityPropertyViolation
        );
        let forest = Graph::new(["p", "q"].map(VertexLabel::atom), []).unwrap();
        assert!(matches!(
            ScotTopology::build(forest, make_complete(2).unwrap()),
            Err(TopologyError::DisconnectedAcyclicFactor(_))
        ));
    }

    #[test]
    fn index_property_strict_and_relabel() {
        let k = Graph::new(
            ["x", "y"].map(VertexLabel::atom),
            [(VertexLabel::atom("x"), VertexLabel::atom("y"))],
        )
        .unwrap();
        assert!(matches!(
            ScotTopology::build_with(make_star(3).unwrap(), k.clone(), IndexMode::Strict),
            Err(TopologyError::IndexPropertyViolation { .. })
        ));
        let t = ScotTopology::build(make_star(3).unwrap(), k).unwrap();
        assert_eq!(t.cluster_for_label("x"), Some(0));
        assert_eq!(t.cluster_for_label("y"), Some(1));
        assert_eq!(t.cluster_label(1), &VertexLabel::atom("y"));
    }

    #[test]
    fn links_match_product_graph() {
        let t = fig3();
        let p = t.product_graph();
        assert_eq!(p.size() * 2, t.links().len());
        for l in t.links() {
            let u = p
                .index_of(&VertexLabel::Pair(
                    t.af.label(l.source.region()).to_string(),
                    t.cluster_label(l.source.cluster()).to_string(),
                ))
                .unwrap();
            let v = p
                .index_of(&VertexLabel::Pair(
                    t.af.label(l.destination.region()).to_string(),
                    t.cluster_label(l.destination.cluster()).to_string(),
                ))
                .unwrap();
            assert!(p.adjacent(u, v));
            let same_cluster = l.source.cluster == l.destination.cluster;
            assert_eq!(same_cluster, l.kind == LinkKind::Acol);
        }
    }

    #[test]
    fn dump_lists_everything() {
        let t = fig3();
        let d = t.dump();
        assert!(d.contains("(b,0) cluster=0 region=b kind=inner"));
        assert!(d.contains("(a,0) -- (b,0) aCOL"));
        assert!(d.contains("(a,0) -- (a,1) iCOL"));
        assert!(d.contains("18 brokers, 33 links, 3 clusters, 6 regions"));
        assert_eq!(d.lines().filter(|l| l.ends_with("COL")).count(), 33);
    }
}
