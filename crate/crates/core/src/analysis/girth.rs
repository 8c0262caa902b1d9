//! Shortest-cycle search on the Tanner graph of a sparse binary matrix.
//!
//! Vertices are the matrix columns and rows, edges its 1-entries. The graph
//! is bipartite, so all cycles have even length and the shortest possible is
//! 4. Girth is found by breadth-first search from start columns: a non-tree
//! edge met at depths `(d, d')` closes a walk of length `d + d' + 1` through
//! the root, and the minimum over all roots and closures is exact.
//!
//! Search is two-phase so that parallel and sequential runs agree bit for
//! bit: phase one computes the girth value (a shared best bound only prunes,
//! it never changes the minimum), phase two re-scans for cycles of exactly
//! that length and keeps the canonically smallest witness.

use super::AnalysisError;
use crate::convcodes::{materialize, ConstructionSpec, ConvError};
use crate::gf2sparse::SparseBinaryMatrix;
use crate::par::map_reduce_with;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};

/// Which columns cycle searches start from. Restricting to the first period
/// of block columns of a periodic band loses nothing: shifting a cycle left
/// by whole periods keeps it inside the window and preserves its length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StartRegion {
    All,
    Cols(Range<usize>),
}

impl StartRegion {
    pub(super) fn roots(&self, n_cols: usize) -> Range<usize> {
        match self {
            StartRegion::All => 0..n_cols,
            StartRegion::Cols(r) => r.start.min(n_cols)..r.end.min(n_cols),
        }
    }

    pub(super) fn contains(&self, col: usize) -> bool {
        match self {
            StartRegion::All => true,
            StartRegion::Cols(r) => r.contains(&col),
        }
    }
}

/// Outcome of a girth search. `girth == None` means the window holds no
/// cycle at all. The witness is one shortest cycle as matrix positions in
/// cyclic order, starting at its smallest `(row, col)` entry and oriented so
/// the second entry shares that entry's row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GirthReport {
    pub girth: Option<usize>,
    pub window_s: Option<usize>,
    pub stabilized: bool,
    pub witness: Option<Vec<(usize, usize)>>,
}

/// Column-major and row-major adjacency with a shared vertex id space:
/// columns are `0..n_cols`, rows are `n_cols..n_cols+n_rows`.
struct TannerGraph<'a> {
    h: &'a SparseBinaryMatrix,
    col_adj: Vec<Vec<u32>>,
    n_cols: u32,
}

impl<'a> TannerGraph<'a> {
    fn new(h: &'a SparseBinaryMatrix) -> Self {
        let n_cols = h.n_cols() as u32;
        let mut col_adj = vec![Vec::new(); h.n_cols()];
        for (r, c) in h.iter_ones() {
            col_adj[c].push(n_cols + r as u32);
        }
        TannerGraph { h, col_adj, n_cols }
    }

    fn n_vertices(&self) -> usize {
        self.h.n_cols() + self.h.n_rows()
    }

    fn neighbors(&self, v: u32) -> &[u32] {
        if v < self.n_cols {
            &self.col_adj[v as usize]
        } else {
            self.h.row((v - self.n_cols) as usize)
        }
    }
}

const NO_VERTEX: u32 = u32::MAX;

/// Reusable BFS scratch; `mark` carries an epoch stamp so per-root resets
/// are O(1).
struct BfsScratch {
    dist: Vec<u32>,
    parent: Vec<u32>,
    mark: Vec<u32>,
    epoch: u32,
    queue: VecDeque<u32>,
}

impl BfsScratch {
    fn new(n: usize) -> Self {
        BfsScratch {
            dist: vec![0; n],
            parent: vec![NO_VERTEX; n],
            mark: vec![0; n],
            epoch: 0,
            queue: VecDeque::new(),
        }
    }

    fn begin(&mut self, root: u32) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.mark.fill(0);
            self.epoch = 1;
        }
        self.queue.clear();
        self.visit(root, 0, NO_VERTEX);
    }

    fn visit(&mut self, v: u32, d: u32, parent: u32) {
        self.mark[v as usize] = self.epoch;
        self.dist[v as usize] = d;
        self.parent[v as usize] = parent;
        self.queue.push_back(v);
    }

    fn seen(&self, v: u32) -> bool {
        self.mark[v as usize] == self.epoch
    }
}

/// Phase one: the shortest closure value reachable from `root`, or
/// `usize::MAX` if nothing beats `bound`. Expanding a vertex at depth `d`
/// can only close walks of length ≥ 2d, so the queue is abandoned once
/// `2d >= bound`; that never hides a value smaller than `bound`.
fn min_closure_from(g: &TannerGraph, scr: &mut BfsScratch, root: u32, bound: usize) -> usize {
    let mut best = bound;
    if best <= 4 {
        return usize::MAX;
    }
    scr.begin(root);
    while let Some(u) = scr.queue.pop_front() {
        let du = scr.dist[u as usize];
        if 2 * du as usize >= best {
            break;
        }
        let pu = scr.parent[u as usize];
        for &w in g.neighbors(u) {
            if w == pu {
                continue;
            }
            if scr.seen(w) {
                let val = (du + scr.dist[w as usize] + 1) as usize;
                if val < best {
                    best = val;
                }
            } else {
                scr.visit(w, du + 1, u);
            }
        }
    }
    if best < bound {
        best
    } else {
        usize::MAX
    }
}

/// Phase two: all closures of value exactly `girth` visible from `root`,
/// reduced to the canonically smallest witness.
fn best_witness_from(
    g: &TannerGraph,
    scr: &mut BfsScratch,
    root: u32,
    girth: usize,
) -> Option<Vec<(usize, usize)>> {
    scr.begin(root);
    let mut best: Option<Vec<(usize, usize)>> = None;
    while let Some(u) = scr.queue.pop_front() {
        let du = scr.dist[u as usize];
        if 2 * du as usize >= girth {
            break;
        }
        let pu = scr.parent[u as usize];
        for &w in g.neighbors(u) {
            if w == pu {
                continue;
            }
            if !scr.seen(w) {
                scr.visit(w, du + 1, u);
            } else if (du + scr.dist[w as usize] + 1) as usize == girth {
                if let Some(cand) = extract_cycle(g, scr, root, u, w) {
                    if best.as_ref().is_none_or(|b| cand < *b) {
                        best = Some(cand);
                    }
                }
            }
        }
    }
    best
}

/// Join the BFS tree paths of the closure edge `(u, w)` into a cycle. The
/// paths must only meet at the root; a deeper meeting point would exhibit a
/// cycle shorter than the girth, so it cannot occur for exact-girth closures.
fn extract_cycle(
    g: &TannerGraph,
    scr: &BfsScratch,
    root: u32,
    u: u32,
    w: u32,
) -> Option<Vec<(usize, usize)>> {
    let chain = |mut v: u32| {
        let mut path = vec![v];
        while v != root {
            v = scr.parent[v as usize];
            path.push(v);
        }
        path
    };
    let path_u = chain(u);
    let path_w = chain(w);
    for x in &path_u[..path_u.len() - 1] {
        if path_w[..path_w.len() - 1].contains(x) {
            return None;
        }
    }
    let mut verts: Vec<u32> = path_u.into_iter().rev().collect();
    verts.extend_from_slice(&path_w[..path_w.len() - 1]);
    let l = verts.len();
    let mut pos = Vec::with_capacity(l);
    for i in 0..l {
        let (a, b) = (verts[i], verts[(i + 1) % l]);
        pos.push(if a < g.n_cols {
            ((b - g.n_cols) as usize, a as usize)
        } else {
            ((a - g.n_cols) as usize, b as usize)
        });
    }
    Some(canonical_rotation(pos))
}

/// Rotate/reflect a cyclic position list to its canonical form: start at the
/// smallest `(row, col)` entry, oriented so the next entry shares its row.
pub(super) fn canonical_rotation(pos: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    let l = pos.len();
    let i = (0..l).min_by_key(|&j| pos[j]).expect("nonempty cycle");
    let forward = pos[(i + 1) % l].0 == pos[i].0;
    (0..l)
        .map(|j| {
            if forward {
                pos[(i + j) % l]
            } else {
                pos[(i + l - j) % l]
            }
        })
        .collect()
}

/// Shortest cycle through any column of `region` (for `StartRegion::All`,
/// the exact girth of the matrix).
pub fn girth(h: &SparseBinaryMatrix, region: &StartRegion) -> GirthReport {
    let g = TannerGraph::new(h);
    let roots = region.roots(h.n_cols());
    let n_roots = roots.len();
    let shared_best = AtomicUsize::new(usize::MAX);
    let value = map_reduce_with(
        n_roots,
        || BfsScratch::new(g.n_vertices()),
        |scr, i| {
            let bound = shared_best.load(Ordering::Relaxed);
            let local = min_closure_from(&g, scr, (roots.start + i) as u32, bound);
            if local != usize::MAX {
                shared_best.fetch_min(local, Ordering::Relaxed);
            }
            local
        },
        usize::MAX,
        |a, b| a.min(b),
    );
    if value == usize::MAX {
        return GirthReport {
            girth: None,
            window_s: None,
            stabilized: false,
            witness: None,
        };
    }
    let witness = map_reduce_with(
        n_roots,
        || BfsScratch::new(g.n_vertices()),
        |scr, i| best_witness_from(&g, scr, (roots.start + i) as u32, value),
        None,
        |a, b| match (a, b) {
            (Some(x), Some(y)) => Some(if x <= y { x } else { y }),
            (x, None) => x,
            (None, y) => y,
        },
    );
    GirthReport {
        girth: Some(value),
        window_s: None,
        stabilized: false,
        witness,
    }
}

/// True iff `pos` lists the 1-positions of a simple alternating cycle of the
/// matrix, in cyclic order (any rotation or direction).
pub fn validate_cycle(h: &SparseBinaryMatrix, pos: &[(usize, usize)]) -> bool {
    let l = pos.len();
    if l < 4 || !l.is_multiple_of(2) {
        return false;
    }
    for &(r, c) in pos {
        if r >= h.n_rows() || c >= h.n_cols() || !h.get(r, c) {
            return false;
        }
    }
    let mut sorted = pos.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return false;
    }
    // Each row and each column must carry exactly two of the positions.
    let mut rows: Vec<usize> = pos.iter().map(|&(r, _)| r).collect();
    let mut cols: Vec<usize> = pos.iter().map(|&(_, c)| c).collect();
    rows.sort_unstable();
    cols.sort_unstable();
    let paired =
        |v: &[usize]| v.chunks(2).all(|ch| ch[0] == ch[1]) && v.windows(3).all(|w| w[0] != w[2]);
    if !paired(&rows) || !paired(&cols) {
        return false;
    }
    // Consecutive positions alternate between sharing a row and a column.
    let share_row = pos[0].0 == pos[1].0;
    (0..l).all(|i| {
        let (a, b) = (pos[i], pos[(i + 1) % l]);
        if (i % 2 == 0) == share_row {
            a.0 == b.0 && a.1 != b.1
        } else {
            a.1 == b.1 && a.0 != b.0
        }
    })
}

/// Girth of a family's band, found by growing windows until the value is
/// unchanged across two consecutive increments. Windows start at
/// `s = 6(mu+1)` (a cycle of length ≤ 12 spans at most `6 mu + 1` block
/// columns) and grow by the period; the start region is the first period of
/// block columns.
pub fn girth_stabilized(spec: ConstructionSpec) -> Result<GirthReport, AnalysisError> {
    let family = spec.build()?;
    let step = family.period();
    let mut s = 6 * (family.mu() + 1);
    let mut last: Option<GirthReport> = None;
    let mut streak = 0usize;
    loop {
        let w = match materialize(&family, s) {
            Ok(w) => w,
            Err(ConvError::WindowTooLarge { .. }) => {
                return Err(AnalysisError::CapBeforeStabilization {
                    window_s: s,
                    last_girth: last.and_then(|r| r.girth),
                })
            }
            Err(e) => return Err(e.into()),
        };
        let mut rep = girth(&w.matrix, &StartRegion::Cols(w.first_period_cols()));
        rep.window_s = Some(s);
        if last.as_ref().is_some_and(|p| p.girth == rep.girth) {
            streak += 1;
        } else {
            streak = 0;
        }
        last = Some(rep);
        if streak >= 2 {
            let mut rep = last.expect("just set");
            rep.stabilized = true;
            return Ok(rep);
        }
        s += step;
    }
}
