//! Joint graph-and-focus state with incremental bookkeeping.
//!
//! `DynamicState` holds a simple undirected graph together with an assignment
//! of every vertex to exactly one focus, and maintains, under edge toggles
//! and vertex migrations, all the aggregates the simulator's rate
//! calculations need: per-focus membership, per-focus internal edge counts,
//! the total same-focus pair count, and the total number of pairs at risk of
//! tie formation. All updates are O(degree) or better; none rescan the graph.
//!
//! Vertex ids are 0-based contiguous integers. Focus ids are 0-based in this
//! API; text formats (see [`read_state_file`]) use 1-based focus ids.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{canonical, pair_count, SimpleGraph};

/// How to assign initial foci.
pub enum FocusRule<'a> {
    /// Each vertex independently uniform over the foci.
    UniformIid,
    /// Explicit 0-based assignment vector of length `n_vertices`.
    Explicit(&'a [u32]),
}

#[derive(Debug, Clone)]
pub struct DynamicState {
    n_vertices: usize,
    n_foci: usize,
    /// Current edges, canonical pairs, unordered for O(1) swap-removal.
    edges: Vec<(u32, u32)>,
    /// Canonical pair -> index into `edges`. Doubles as the adjacency test.
    edge_index: HashMap<(u32, u32), u32>,
    /// Unsorted neighbor lists.
    neighbors: Vec<Vec<u32>>,
    /// Focus of each vertex (0-based).
    focus_of: Vec<u32>,
    /// Vertices currently in each focus, unordered.
    members: Vec<Vec<u32>>,
    /// Position of each vertex within `members[focus_of[v]]`.
    member_pos: Vec<u32>,
    /// Edge count internal to each focus (e_k).
    internal_edges: Vec<u64>,
    /// Sum over foci of C(n_k, 2).
    same_focus_pairs: u64,
    /// Sum over foci of e_k.
    internal_total: u64,
}

impl DynamicState {
    /// Construct a state from an initial focus assignment and edge set.
    ///
    /// The edge list is validated (no self-loops, duplicates, or
    /// out-of-range ids) and all derived counters are built consistently.
    pub fn new(
        n_vertices: usize,
        n_foci: usize,
        focus_rule: FocusRule,
        initial_edges: &[(u32, u32)],
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::domain("n_vertices must be at least 1"));
        }
        if n_foci == 0 {
            return Err(Error::domain("n_foci must be at least 1"));
        }
        let graph = SimpleGraph::new(n_vertices, initial_edges.iter().copied())?;

        let focus_of: Vec<u32> = match focus_rule {
            FocusRule::UniformIid => (0..n_vertices)
                .map(|_| rng.random_range(0..n_foci) as u32)
                .collect(),
            FocusRule::Explicit(foci) => {
                if foci.len() != n_vertices {
                    return Err(Error::domain(format!(
                        "focus vector has {} entries, expected {}",
                        foci.len(),
                        n_vertices
                    )));
                }
                if let Some(&bad) = foci.iter().find(|&&k| k as usize >= n_foci) {
                    return Err(Error::domain(format!(
                        "focus id {bad} out of range for {n_foci} foci"
                    )));
                }
                foci.to_vec()
            }
        };

        let mut state = DynamicState {
            n_vertices,
            n_foci,
            edges: Vec::new(),
            edge_index: HashMap::new(),
            neighbors: vec![Vec::new(); n_vertices],
            focus_of,
            members: vec![Vec::new(); n_foci],
            member_pos: vec![0; n_vertices],
            internal_edges: vec![0; n_foci],
            same_focus_pairs: 0,
            internal_total: 0,
        };
        for (v, &k) in state.focus_of.iter().enumerate() {
            state.member_pos[v] = state.members[k as usize].len() as u32;
            state.members[k as usize].push(v as u32);
        }
        state.same_focus_pairs = state
            .members
            .iter()
            .map(|m| pair_count(m.len() as u64))
            .sum();
        for &(u, v) in graph.edges() {
            state.toggle_edge(u, v, true);
        }
        Ok(state)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_foci(&self) -> usize {
        self.n_foci
    }

    pub fn total_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.edge_index.contains_key(&canonical(u, v))
    }

    pub fn degree(&self, v: u32) -> usize {
        self.neighbors[v as usize].len()
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.neighbors[v as usize]
    }

    pub fn focus_of(&self, v: u32) -> u32 {
        self.focus_of[v as usize]
    }

    pub fn focus_assignment(&self) -> &[u32] {
        &self.focus_of
    }

    pub fn focus_members(&self, k: u32) -> &[u32] {
        &self.members[k as usize]
    }

    pub fn focus_size(&self, k: u32) -> usize {
        self.members[k as usize].len()
    }

    /// Internal edge count e_k of focus `k`.
    pub fn internal_edges(&self, k: u32) -> u64 {
        self.internal_edges[k as usize]
    }

    /// Non-adjacent same-focus pairs within focus `k`: C(n_k, 2) - e_k.
    pub fn at_risk_pairs(&self, k: u32) -> u64 {
        pair_count(self.members[k as usize].len() as u64) - self.internal_edges[k as usize]
    }

    /// Total pairs at risk of tie formation across all foci.
    pub fn at_risk_total(&self) -> u64 {
        self.same_focus_pairs - self.internal_total
    }

    /// Add (`present = true`) or remove (`present = false`) the edge {u, v}.
    ///
    /// Violating the precondition (adding an existing edge, removing a
    /// missing one, or u == v) is a programming error and panics.
    pub fn toggle_edge(&mut self, u: u32, v: u32, present: bool) {
        assert_ne!(u, v, "toggle_edge on a self-loop");
        let key = canonical(u, v);
        if present {
            let pos = self.edges.len() as u32;
            let prev = self.edge_index.insert(key, pos);
            assert!(prev.is_none(), "toggle_edge: edge {key:?} already present");
            self.edges.push(key);
            self.neighbors[u as usize].push(v);
            self.neighbors[v as usize].push(u);
            let (ku, kv) = (self.focus_of[u as usize], self.focus_of[v as usize]);
            if ku == kv {
                self.internal_edges[ku as usize] += 1;
                self.internal_total += 1;
            }
        } else {
            let pos = self
                .edge_index
                .remove(&key)
                .unwrap_or_else(|| panic!("toggle_edge: edge {key:?} not present"));
            self.edges.swap_remove(pos as usize);
            if (pos as usize) < self.edges.len() {
                let moved = self.edges[pos as usize];
                self.edge_index.insert(moved, pos);
            }
            Self::drop_neighbor(&mut self.neighbors[u as usize], v);
            Self::drop_neighbor(&mut self.neighbors[v as usize], u);
            let (ku, kv) = (self.focus_of[u as usize], self.focus_of[v as usize]);
            if ku == kv {
                self.internal_edges[ku as usize] -= 1;
                self.internal_total -= 1;
            }
        }
    }

    fn drop_neighbor(list: &mut Vec<u32>, w: u32) {
        let i = list
            .iter()
            .position(|&x| x == w)
            .expect("neighbor list out of sync");
        list.swap_remove(i);
    }

    /// Move vertex `v` to focus `dest`. Moving to the current focus is a
    /// no-op. Panics if `dest` is out of range.
    pub fn migrate(&mut self, v: u32, dest: u32) {
        assert!((dest as usize) < self.n_foci, "focus {dest} out of range");
        let src = self.focus_of[v as usize];
        if src == dest {
            return;
        }

        // Take v out of its source focus, swap-filling its slot.
        let src_members = &mut self.members[src as usize];
        let pos = self.member_pos[v as usize] as usize;
        src_members.swap_remove(pos);
        if pos < src_members.len() {
            let moved = src_members[pos];
            self.member_pos[moved as usize] = pos as u32;
        }
        self.same_focus_pairs -= src_members.len() as u64;

        // Edges from v to remaining source members stop being internal;
        // edges into the destination become internal.
        for i in 0..self.neighbors[v as usize].len() {
            let w = self.neighbors[v as usize][i];
            let kw = self.focus_of[w as usize];
            if kw == src {
                self.internal_edges[src as usize] -= 1;
                self.internal_total -= 1;
            } else if kw == dest {
                self.internal_edges[dest as usize] += 1;
                self.internal_total += 1;
            }
        }

        let dest_members = &mut self.members[dest as usize];
        self.same_focus_pairs += dest_members.len() as u64;
        self.member_pos[v as usize] = dest_members.len() as u32;
        dest_members.push(v);
        self.focus_of[v as usize] = dest;
    }

    /// Draw a uniformly distributed non-adjacent same-focus pair, or `None`
    /// if no pair is at risk.
    ///
    /// The focus is chosen with probability proportional to its at-risk pair
    /// count; within the focus, rejection sampling draws uniform member
    /// pairs until a non-adjacent one appears. When the within-focus density
    /// exceeds 3/4 the expected number of rejections is no longer O(1), so
    /// the non-adjacent pairs are enumerated explicitly instead.
    pub fn sample_at_risk_pair(&self, rng: &mut impl Rng) -> Option<(u32, u32)> {
        let total = self.at_risk_total();
        if total == 0 {
            return None;
        }
        let mut target = rng.random_range(0..total);
        let mut chosen = None;
        for k in 0..self.n_foci {
            let w = self.at_risk_pairs(k as u32);
            if target < w {
                chosen = Some(k);
                break;
            }
            target -= w;
        }
        let k = chosen.expect("at-risk totals out of sync");

        let members = &self.members[k];
        let n_k = members.len() as u64;
        let pairs = pair_count(n_k);
        let e_k = self.internal_edges[k];
        if 4 * e_k > 3 * pairs {
            // Dense focus: enumerate the at-risk pairs and pick one.
            let at_risk = pairs - e_k;
            let mut idx = rng.random_range(0..at_risk);
            for (i, &u) in members.iter().enumerate() {
                for &v in &members[i + 1..] {
                    if !self.has_edge(u, v) {
                        if idx == 0 {
                            return Some(canonical(u, v));
                        }
                        idx -= 1;
                    }
                }
            }
            unreachable!("at-risk enumeration out of sync");
        }
        loop {
            let i = rng.random_range(0..members.len());
            let j = rng.random_range(0..members.len());
            if i == j {
                continue;
            }
            let (u, v) = (members[i], members[j]);
            if !self.has_edge(u, v) {
                return Some(canonical(u, v));
            }
        }
    }

    /// Draw a uniform existing edge, or `None` if the graph is empty.
    pub fn sample_uniform_edge(&self, rng: &mut impl Rng) -> Option<(u32, u32)> {
        if self.edges.is_empty() {
            return None;
        }
        Some(self.edges[rng.random_range(0..self.edges.len())])
    }

    /// Snapshot of the current graph.
    pub fn to_graph(&self) -> SimpleGraph {
        SimpleGraph::from_canonical_edges(self.n_vertices, self.edges.clone())
    }

    /// Recompute every maintained counter from the raw edge list and focus
    /// assignment, and compare with the incremental values. Used by tests
    /// and available as a consistency diagnostic.
    pub fn check_consistency(&self) -> Result<()> {
        let mut sizes = vec![0u64; self.n_foci];
        for &k in &self.focus_of {
            sizes[k as usize] += 1;
        }
        let mut internal = vec![0u64; self.n_foci];
        for &(u, v) in &self.edges {
            if u >= v || v as usize >= self.n_vertices {
                return Err(Error::domain(format!("malformed edge ({u}, {v})")));
            }
            let (ku, kv) = (self.focus_of[u as usize], self.focus_of[v as usize]);
            if ku == kv {
                internal[ku as usize] += 1;
            }
        }
        for k in 0..self.n_foci {
            if sizes[k] != self.members[k].len() as u64 {
                return Err(Error::domain(format!("focus {k} size out of sync")));
            }
            if internal[k] != self.internal_edges[k] {
                return Err(Error::domain(format!(
                    "focus {k} internal edges out of sync: recount {} vs {}",
                    internal[k], self.internal_edges[k]
                )));
            }
            if internal[k] > pair_count(sizes[k]) {
                return Err(Error::domain(format!("focus {k} has e_k > C(n_k, 2)")));
            }
        }
        let pairs: u64 = sizes.iter().map(|&n| pair_count(n)).sum();
        if pairs != self.same_focus_pairs {
            return Err(Error::domain("same-focus pair total out of sync"));
        }
        let int_total: u64 = internal.iter().sum();
        if int_total != self.internal_total {
            return Err(Error::domain("internal edge total out of sync"));
        }
        if self.edge_index.len() != self.edges.len() {
            return Err(Error::domain("edge index out of sync"));
        }
        let degree_sum: usize = self.neighbors.iter().map(|l| l.len()).sum();
        if degree_sum != 2 * self.edges.len() {
            return Err(Error::domain("neighbor lists out of sync"));
        }
        for (v, &pos) in self.member_pos.iter().enumerate() {
            let k = self.focus_of[v] as usize;
            if self.members[k].get(pos as usize) != Some(&(v as u32)) {
                return Err(Error::domain(format!("member position of {v} out of sync")));
            }
        }
        Ok(())
    }
}

/// Read a state file: optional `foci k1 k2 ... kN` line (1-based focus ids)
/// followed by one `u v` edge per line (0-based vertex ids). Blank lines and
/// lines starting with `#` are skipped.
///
/// Returns the focus vector converted to 0-based ids, if present.
pub fn read_state_file(path: &Path) -> Result<(Option<Vec<u32>>, Vec<(u32, u32)>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut foci = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            msg,
        };
        if let Some(rest) = line.strip_prefix("foci") {
            if foci.is_some() {
                return Err(parse_err("duplicate foci line".into()));
            }
            let mut out = Vec::new();
            for tok in rest.split_whitespace() {
                let k: u32 = tok
                    .parse()
                    .map_err(|_| parse_err(format!("bad focus id `{tok}`")))?;
                if k == 0 {
                    return Err(parse_err("focus ids are 1-based; found 0".into()));
                }
                out.push(k - 1);
            }
            foci = Some(out);
            continue;
        }
        let mut it = line.split_whitespace();
        let (a, b) = (it.next(), it.next());
        if it.next().is_some() {
            return Err(parse_err("expected `u v`".into()));
        }
        match (a, b) {
            (Some(a), Some(b)) => {
                let u: u32 = a
                    .parse()
                    .map_err(|_| parse_err(format!("bad vertex id `{a}`")))?;
                let v: u32 = b
                    .parse()
                    .map_err(|_| parse_err(format!("bad vertex id `{b}`")))?;
                edges.push((u, v));
            }
            _ => return Err(parse_err("expected `u v`".into())),
        }
    }
    Ok((foci, edges))
}

/// Write a state file in the format accepted by [`read_state_file`].
pub fn write_state_file(path: &Path, foci: Option<&[u32]>, edges: &[(u32, u32)]) -> Result<()> {
    let mut out = String::new();
    if let Some(foci) = foci {
        out.push_str("foci");
        for &k in foci {
            let _ = write!(out, " {}", k + 1);
        }
        out.push('\n');
    }
    for &(u, v) in edges {
        let _ = writeln!(out, "{u} {v}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
