//! Concept-pair co-occurrence counts over rule left-hand sides, with greedy
//! primary clustering and the residual inter-cluster links.

use std::collections::HashMap;

use serde::Serialize;

use crate::ast::{ConceptId, Scene};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyGrid {
    /// First-appearance order over rule left-hand sides.
    pub concepts: Vec<ConceptId>,
    /// Symmetric, zero diagonal.
    pub counts: Vec<Vec<u32>>,
}

/// A cross-cluster pair and its count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Link {
    pub a: ConceptId,
    pub b: ConceptId,
    pub count: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Clustering {
    pub clusters: Vec<Vec<ConceptId>>,
    pub secondary_links: Vec<Link>,
}

/// Count every unordered pair of distinct concepts among each rule's outputs
/// and chain elements. Self-loop rules add their concept but no pairs.
pub fn build_grid(scene: &Scene) -> FrequencyGrid {
    let mut concepts: Vec<ConceptId> = Vec::new();
    let mut index: HashMap<ConceptId, usize> = HashMap::new();
    let lhs: Vec<Vec<usize>> = scene
        .rules
        .iter()
        .map(|rule| {
            rule.lhs_concepts()
                .into_iter()
                .map(|c| {
                    *index.entry(c.clone()).or_insert_with(|| {
                        concepts.push(c);
                        concepts.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    let n = concepts.len();
    let mut counts = vec![vec![0u32; n]; n];
    for members in &lhs {
        for (k, &i) in members.iter().enumerate() {
            for &j in &members[k + 1..] {
                counts[i][j] += 1;
                counts[j][i] += 1;
            }
        }
    }
    FrequencyGrid { concepts, counts }
}

impl FrequencyGrid {
    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn index_of(&self, c: &ConceptId) -> Option<usize> {
        self.concepts.iter().position(|x| x == c)
    }

    /// Count for a pair by name; zero when either is absent.
    pub fn count(&self, a: &str, b: &str) -> u32 {
        match (
            self.index_of(&ConceptId::new(a)),
            self.index_of(&ConceptId::new(b)),
        ) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }

    /// Sum of a concept's row.
    pub fn strength(&self, i: usize) -> u32 {
        self.counts[i].iter().sum()
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().flatten().sum()
    }

    /// CSV with a header row of names, one row per concept, and an empty
    /// cell on the diagonal.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.concepts {
            out.push(',');
            out.push_str(c.as_str());
        }
        out.push('\n');
        for (i, c) in self.concepts.iter().enumerate() {
            out.push_str(c.as_str());
            for j in 0..self.len() {
                out.push(',');
                if i != j {
                    out.push_str(&self.counts[i][j].to_string());
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, clustering: &Clustering) -> serde_json::Value {
        #[derive(Serialize)]
        struct Report<'a> {
            format_version: u32,
            concepts: &'a [ConceptId],
            counts: &'a [Vec<u32>],
            clusters: &'a [Vec<ConceptId>],
            secondary_links: &'a [Link],
        }
        serde_json::to_value(Report {
            format_version: 1,
            concepts: &self.concepts,
            counts: &self.counts,
            clusters: &clustering.clusters,
            secondary_links: &clustering.secondary_links,
        })
        .expect("grid report serializes")
    }
}

/// Greedy partition by strongest counts.
///
/// 1. Mutual-best pairs seed clusters, strongest first. Pairs of equal count
///    that compete for a concept are ordered by their combined count to
///    third parties (smaller wins), then by name.
/// 2. Seeded clusters are closed. An unclustered `X` joins the cluster of
///    `Y` (or pairs up with an unclustered `Y`) when `count(X, Y)` is `X`'s
///    best over concepts outside the seeds and is at least `Y`'s best over
///    its own cluster and the unclustered concepts. The strongest such
///    attachment is applied first; ties break by name.
/// 3. Whatever is left becomes a singleton.
pub fn primary_clusters(grid: &FrequencyGrid) -> Clustering {
    let n = grid.len();
    let c = &grid.counts;
    let name = |i: usize| grid.concepts[i].as_str();
    let best: Vec<u32> = (0..n)
        .map(|i| c[i].iter().copied().max().unwrap_or(0))
        .collect();

    let mut cluster_of: Vec<Option<usize>> = vec![None; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();

    let mut seeds = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let k = c[i][j];
            if k > 0 && k == best[i] && k == best[j] {
                let mass = grid.strength(i) + grid.strength(j) - 2 * k;
                let (a, b) = if name(i) <= name(j) { (i, j) } else { (j, i) };
                seeds.push((k, mass, a, b));
            }
        }
    }
    seeds.sort_by(|x, y| {
        y.0.cmp(&x.0)
            .then(x.1.cmp(&y.1))
            .then_with(|| name(x.2).cmp(name(y.2)))
            .then_with(|| name(x.3).cmp(name(y.3)))
    });
    for (_, _, a, b) in seeds {
        if cluster_of[a].is_none() && cluster_of[b].is_none() {
            cluster_of[a] = Some(clusters.len());
            cluster_of[b] = Some(clusters.len());
            clusters.push(vec![a, b]);
        }
    }
    let seeded: Vec<bool> = cluster_of.iter().map(Option::is_some).collect();

    loop {
        let mut choice: Option<(u32, usize, usize)> = None;
        for x in (0..n).filter(|&x| cluster_of[x].is_none()) {
            let partners: Vec<usize> = (0..n)
                .filter(|&y| y != x && !seeded[y] && c[x][y] > 0)
                .collect();
            let Some(best_x) = partners.iter().map(|&y| c[x][y]).max() else {
                continue;
            };
            for &y in partners.iter().filter(|&&y| c[x][y] == best_x) {
                let gate = (0..n)
                    .filter(|&z| {
                        z != y
                            && (cluster_of[z].is_none()
                                || (cluster_of[y].is_some() && cluster_of[z] == cluster_of[y]))
                    })
                    .map(|z| c[y][z])
                    .max()
                    .unwrap_or(0);
                if best_x < gate {
                    continue;
                }
                let better = match choice {
                    None => true,
                    Some((k, cx, cy)) => {
                        best_x > k || (best_x == k && (name(x), name(y)) < (name(cx), name(cy)))
                    }
                };
                if better {
                    choice = Some((best_x, x, y));
                }
            }
        }
        let Some((_, x, y)) = choice else { break };
        match cluster_of[y] {
            Some(id) => {
                cluster_of[x] = Some(id);
                clusters[id].push(x);
            }
            None => {
                cluster_of[x] = Some(clusters.len());
                cluster_of[y] = Some(clusters.len());
                clusters.push(vec![x, y]);
            }
        }
    }

    for (i, slot) in cluster_of.iter_mut().enumerate() {
        if slot.is_none() {
            *slot = Some(clusters.len());
            clusters.push(vec![i]);
        }
    }
    for members in &mut clusters {
        members.sort_unstable();
    }
    clusters.sort_by_key(|m| m[0]);
    Clustering {
        clusters: clusters
            .into_iter()
            .map(|m| m.into_iter().map(|i| grid.concepts[i].clone()).collect())
            .collect(),
        secondary_links: Vec::new(),
    }
}

/// Every nonzero pair whose ends lie in different clusters, strongest first,
/// then by name.
pub fn secondary_links(grid: &FrequencyGrid, clustering: &Clustering) -> Vec<Link> {
    let mut cluster_of = HashMap::new();
    for (id, members) in clustering.clusters.iter().enumerate() {
        for m in members {
            cluster_of.insert(m, id);
        }
    }
    let mut links = Vec::new();
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let (a, b) = (&grid.concepts[i], &grid.concepts[j]);
            let count = grid.counts[i][j];
            if count > 0 && cluster_of.get(a) != cluster_of.get(b) {
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                links.push(Link {
                    a: a.clone(),
                    b: b.clone(),
                    count,
                });
            }
        }
    }
    links.sort_by(|x, y| {
        y.count
            .cmp(&x.count)
            .then_with(|| x.a.cmp(&y.a))
            .then_with(|| x.b.cmp(&y.b))
    });
    links
}

/// Primary clusters plus their secondary links.
pub fn cluster(grid: &FrequencyGrid) -> Clustering {
    let mut clustering = primary_clusters(grid);
    clustering.secondary_links = secondary_links(grid, &clustering);
    clustering
}
