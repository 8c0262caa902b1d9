//! An LDPC block-code family built from the halving Latin square of odd
//! order `2m+1`, together with the four lifting steps that remove every
//! 6-cycle from its incidence matrix.
//!
//! The base matrix is the point-block incidence of a one-configuration: rows
//! are points `(x, a)` with `x` in `1..=2m+1` and `a` in `{1,2,3}`, columns
//! are the triples `{(i,a), (j,a), (L(i,j), a+1 mod 3)}`. Arranged in 3×3
//! cells it is built from `I`, `P^2`, and `0` only; the block columns group
//! into `M_1..M_m`, one `P^2` per block row in each group. Every block-level
//! 6-cycle falls into one of four classes (by how many `P^2` cells it meets
//! and where), and each lifting step kills one class by substituting
//! permutation powers whose alternating exponent sum cannot vanish.

use crate::gf2sparse::{BlockLayout, Gf2Error, PermutationPower, SparseBinaryMatrix};
use crate::latin::label;
use crate::par::map_reduce_with;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BlockError {
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("lift step {step} cannot follow stage {stage}")]
    StepOutOfOrder { stage: Stage, step: usize },
    #[error("block column {column} does not fit the group arrangement: {reason}")]
    ArrangementInconsistency { column: usize, reason: String },
    #[error("classification needs 3x3 or 5x5 cells, not stage {0}")]
    StageUnsupported(Stage),
    #[error("block-level 6-cycle with {p2_count} shift cells survives the exponent test; the construction is broken")]
    Unclassifiable { p2_count: usize },
    #[error(transparent)]
    Matrix(#[from] Gf2Error),
}

/// `L(i, j) = (i + j)/2 mod (2m+1)` as a full table, 1-based labels with
/// residue 0 written as `2m+1`. Division by 2 is multiplication by `m+1`.
pub fn halving_latin_square(m: usize) -> Result<Vec<Vec<usize>>, BlockError> {
    if m == 0 {
        return Err(BlockError::BadParameter("m must be at least 1".into()));
    }
    let q = 2 * m + 1;
    Ok((1..=q)
        .map(|i| (1..=q).map(|j| halving_label(m, i, j)).collect())
        .collect())
}

/// One entry of the halving square.
pub fn halving_label(m: usize, i: usize, j: usize) -> usize {
    let q = 2 * m + 1;
    label(q, (i + j) * (m + 1))
}

/// Alternating exponent sum of six permutation powers arranged in a block
/// hexagon. The hexagon holds a closed path of length 6 exactly when the sum
/// vanishes mod the permutation order `d`; returns `(residue, has_cycle)`.
pub fn fan_sum(exponents: &[i64; 6], d: i64) -> (i64, bool) {
    assert!(d >= 1, "permutation order must be positive");
    let signed: i64 = exponents
        .iter()
        .enumerate()
        .map(|(k, &e)| if k % 2 == 0 { e } else { -e })
        .sum();
    let residue = signed.rem_euclid(d);
    (residue, residue == 0)
}

/// Points `{1..2m+1} x {1,2,3}` and the 3-element blocks built from the
/// halving square; any two points share at most one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneConfiguration {
    pub m: usize,
    /// Blocks in column order: groups `M_1..M_m` first, anchors `1..=2m+1`
    /// within a group, the three `a` values within an anchor.
    pub blocks: Vec<[(usize, usize); 3]>,
}

impl OneConfiguration {
    pub fn new(m: usize) -> Result<Self, BlockError> {
        let columns = annotate_columns(m)?;
        let mut blocks = Vec::with_capacity(3 * columns.len());
        for col in &columns {
            for a in 1..=3usize {
                blocks.push([(col.i, a), (col.j, a), (col.p2_row, a % 3 + 1)]);
            }
        }
        Ok(OneConfiguration { m, blocks })
    }

    pub fn order(&self) -> usize {
        2 * self.m + 1
    }

    pub fn n_points(&self) -> usize {
        3 * self.order()
    }

    /// Row index of point `(x, a)`.
    pub fn point_row(&self, x: usize, a: usize) -> usize {
        3 * (x - 1) + (a - 1)
    }

    /// Point-block incidence: rows are points, columns are blocks.
    pub fn incidence(&self) -> SparseBinaryMatrix {
        let triples = self
            .blocks
            .iter()
            .enumerate()
            .flat_map(|(b, block)| block.iter().map(move |&(x, a)| (3 * (x - 1) + (a - 1), b)))
            .collect::<Vec<_>>();
        SparseBinaryMatrix::from_triples(self.n_points(), self.blocks.len(), triples)
            .expect("blocks hold three distinct in-range points")
    }

    /// Every pair of points appears together in at most one block.
    pub fn pairs_appear_at_most_once(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        for block in &self.blocks {
            for s in 0..3 {
                for t in s + 1..3 {
                    let (mut u, mut v) = (block[s], block[t]);
                    if u > v {
                        std::mem::swap(&mut u, &mut v);
                    }
                    if !seen.insert((u, v)) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Construction stage of a [`BlockCode`] matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Base,
    Step1,
    Step2,
    Step3,
    Step4,
}

impl Stage {
    fn next_step(self) -> Option<usize> {
        match self {
            Stage::Base => Some(1),
            Stage::Step1 => Some(2),
            Stage::Step2 => Some(3),
            Stage::Step3 => Some(4),
            Stage::Step4 => None,
        }
    }

    fn after(step: usize) -> Stage {
        match step {
            1 => Stage::Step1,
            2 => Stage::Step2,
            3 => Stage::Step3,
            _ => Stage::Step4,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Base => "base",
            Stage::Step1 => "step1",
            Stage::Step2 => "step2",
            Stage::Step3 => "step3",
            Stage::Step4 => "step4",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Stage {
    type Err = BlockError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base" => Ok(Stage::Base),
            "step1" => Ok(Stage::Step1),
            "step2" => Ok(Stage::Step2),
            "step3" => Ok(Stage::Step3),
            "step4" | "final" => Ok(Stage::Step4),
            other => Err(BlockError::BadParameter(format!(
                "unknown stage '{other}' (base, step1..step4, final)"
            ))),
        }
    }
}

/// Where a block column's three nonzero cells sit, in 1-based block-row
/// labels. `i < j` carry the two identity cells, `p2_row = L(i, j)` the
/// shifted cell; `anchor` and `ell` place the column inside its group
/// (`M_ell`, identities at `anchor` and `anchor + 2*ell`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockColumn {
    pub ell: usize,
    pub anchor: usize,
    pub i: usize,
    pub j: usize,
    pub p2_row: usize,
}

/// A stage of the construction: the matrix, its cell partition, and the
/// per-block-column annotations every later step keys its substitutions on.
#[derive(Clone, Debug)]
pub struct BlockCode {
    pub m: usize,
    pub stage: Stage,
    pub matrix: SparseBinaryMatrix,
    pub layout: BlockLayout,
    columns: Vec<BlockColumn>,
}

impl BlockCode {
    pub fn columns(&self) -> &[BlockColumn] {
        &self.columns
    }
}

/// Sidecar metadata written next to exported stage matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSidecar {
    pub m: usize,
    pub stage: Stage,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl BlockSidecar {
    pub fn of(code: &BlockCode) -> Self {
        BlockSidecar {
            m: code.m,
            stage: code.stage,
            n_rows: code.matrix.n_rows(),
            n_cols: code.matrix.n_cols(),
        }
    }
}

fn annotate_columns(m: usize) -> Result<Vec<BlockColumn>, BlockError> {
    if m == 0 {
        return Err(BlockError::BadParameter("m must be at least 1".into()));
    }
    let q = 2 * m + 1;
    let mut out = Vec::with_capacity(m * q);
    for ell in 1..=m {
        for anchor in 1..=q {
            let other = label(q, anchor + 2 * ell);
            let (i, j) = (anchor.min(other), anchor.max(other));
            let p2_row = label(q, anchor + ell);
            debug_assert_eq!(p2_row, halving_label(m, i, j));
            debug_assert!(i != j && p2_row != i && p2_row != j);
            out.push(BlockColumn {
                ell,
                anchor,
                i,
                j,
                p2_row,
            });
        }
    }
    Ok(out)
}

/// Scalar matrix with `cell x cell` cells: identities at block rows `i` and
/// `j` of each annotated column, the square of the cyclic shift at `p2_row`.
fn emit_cells(columns: &[BlockColumn], q: usize, cell: usize) -> SparseBinaryMatrix {
    let mut triples = Vec::with_capacity(3 * cell * columns.len());
    for (b, col) in columns.iter().enumerate() {
        for a in 0..cell {
            triples.push((cell * (col.i - 1) + a, cell * b + a));
            triples.push((cell * (col.j - 1) + a, cell * b + a));
            // P^2 has its 1 for column a in row a - 2 (mod cell).
            triples.push((
                cell * (col.p2_row - 1) + (a + cell - 2) % cell,
                cell * b + a,
            ));
        }
    }
    SparseBinaryMatrix::from_triples(cell * q, cell * columns.len(), triples)
        .expect("cell supports are distinct")
}

/// The incidence matrix of the order-`2m+1` one-configuration, columns in
/// group order. Column weight 3, free of 4-cycles.
pub fn build_base(m: usize) -> Result<BlockCode, BlockError> {
    let columns = annotate_columns(m)?;
    let q = 2 * m + 1;
    let matrix = emit_cells(&columns, q, 3);
    let layout = BlockLayout::new(matrix.n_rows(), matrix.n_cols(), 3)?;
    Ok(BlockCode {
        m,
        stage: Stage::Base,
        matrix,
        layout,
        columns,
    })
}

/// Cell content at base/step-1 granularity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Zero,
    Ident,
    PSquared,
}

/// Read the groups `M_1..M_m` off the matrix itself: returns
/// `grid[group][block_row][position]` of cell kinds and verifies that each
/// block column sits where its identity rows say it must (identities at
/// `anchor` and `anchor + 2*ell`, shift cell at `anchor + ell`, one shift
/// cell per block row per group).
pub fn group_into_m(code: &BlockCode) -> Result<Vec<Vec<Vec<CellKind>>>, BlockError> {
    if !matches!(code.stage, Stage::Base | Stage::Step1) {
        return Err(BlockError::StageUnsupported(code.stage));
    }
    let cell = code.layout.block_size;
    let q = code.layout.block_rows;
    let m = code.m;
    let n_block_cols = code.layout.block_cols;
    // Collect each cell's local pattern.
    let mut cells: Vec<Vec<Vec<(usize, usize)>>> = vec![vec![Vec::new(); n_block_cols]; q];
    for (r, c) in code.matrix.iter_ones() {
        cells[r / cell][c / cell].push((r % cell, c % cell));
    }
    let kind_of = |pat: &[(usize, usize)], b: usize| -> Result<CellKind, BlockError> {
        if pat.is_empty() {
            return Ok(CellKind::Zero);
        }
        if pat.len() == cell && pat.iter().all(|&(lr, lc)| lr == lc) {
            return Ok(CellKind::Ident);
        }
        if pat.len() == cell && pat.iter().all(|&(lr, lc)| lc == (lr + 2) % cell) {
            return Ok(CellKind::PSquared);
        }
        Err(BlockError::ArrangementInconsistency {
            column: b,
            reason: "cell is neither zero, identity, nor squared shift".into(),
        })
    };
    let mut grid = vec![vec![vec![CellKind::Zero; q]; q]; m];
    for b in 0..n_block_cols {
        let (mut idents, mut p2s) = (Vec::new(), Vec::new());
        for (x, row) in cells.iter().enumerate() {
            match kind_of(&row[b], b)? {
                CellKind::Zero => {}
                CellKind::Ident => idents.push(x + 1),
                CellKind::PSquared => p2s.push(x + 1),
            }
        }
        let (&[x1, x2], &[y]) = (&idents[..], &p2s[..]) else {
            return Err(BlockError::ArrangementInconsistency {
                column: b,
                reason: format!(
                    "{} identity and {} shift cells instead of 2 + 1",
                    idents.len(),
                    p2s.len()
                ),
            });
        };
        // Exactly one of the two cyclic differences is even (q is odd).
        let fwd = (x2 + q - x1) % q;
        let (anchor, ell) = if fwd.is_multiple_of(2) {
            (x1, fwd / 2)
        } else {
            (x2, (q - fwd) / 2)
        };
        if label(q, anchor + ell) != y {
            return Err(BlockError::ArrangementInconsistency {
                column: b,
                reason: format!(
                    "shift cell in block row {y}, group rules place it at {}",
                    label(q, anchor + ell)
                ),
            });
        }
        if b != (ell - 1) * q + (anchor - 1) {
            return Err(BlockError::ArrangementInconsistency {
                column: b,
                reason: format!("column belongs at group {ell}, position {anchor}"),
            });
        }
        for x in 0..q {
            grid[ell - 1][x][anchor - 1] = kind_of(&cells[x][b], b)?;
        }
    }
    // One shift cell per block row per group.
    for (g, rows) in grid.iter().enumerate() {
        for (x, row) in rows.iter().enumerate() {
            let p2 = row.iter().filter(|k| **k == CellKind::PSquared).count();
            if p2 != 1 {
                return Err(BlockError::ArrangementInconsistency {
                    column: g * q + x,
                    reason: format!(
                        "group {} block row {} holds {} shift cells",
                        g + 1,
                        x + 1,
                        p2
                    ),
                });
            }
        }
    }
    Ok(grid)
}

/// Which of its block column's three cells a 1 sits in.
enum Role {
    /// Identity cell in the smaller-labelled block row `i`.
    Upper,
    /// Identity cell in the larger-labelled block row `j`.
    Lower,
    /// The `P^2` cell at `L(i, j)`.
    Shifted,
}

fn role_of(code: &BlockCode, r: usize, c: usize) -> Result<(Role, &BlockColumn), BlockError> {
    let cell = code.layout.block_size;
    let x = r / cell + 1;
    let b = c / cell;
    let col = &code.columns[b];
    let role = if x == col.i {
        Role::Upper
    } else if x == col.j {
        Role::Lower
    } else if x == col.p2_row {
        Role::Shifted
    } else {
        return Err(BlockError::ArrangementInconsistency {
            column: b,
            reason: format!("a 1 in block row {x} outside the column's three cells"),
        });
    };
    Ok((role, col))
}

/// Apply one lifting step. Steps run in order 1→4; each substitutes by the
/// role the 1 plays in the original cell structure:
/// 1. rebuild every cell at size 5 (identities stay identities, the shift
///    cell keeps exponent 2),
/// 2. identity 1s → `I_{2m+1}`, shift-cell 1s in block row `x` → `P^x`,
/// 3. identity 1s → `I_m`, shift-cell 1s in group `M_l` → `P^l`,
/// 4. shift-cell 1s → `I_5`, the identity at block row `i` → `P`, the one
///    at block row `j` → `P^2` (order 5).
pub fn lift_step(code: &BlockCode, step: usize) -> Result<BlockCode, BlockError> {
    if code.stage.next_step() != Some(step) {
        return Err(BlockError::StepOutOfOrder {
            stage: code.stage,
            step,
        });
    }
    let q = 2 * code.m + 1;
    let m = code.m;
    if step == 1 {
        let matrix = emit_cells(&code.columns, q, 5);
        return Ok(BlockCode {
            m,
            stage: Stage::Step1,
            matrix,
            layout: BlockLayout::new(5 * q, 5 * q * m, 5)?,
            columns: code.columns.clone(),
        });
    }
    let order = match step {
        2 => q,
        3 => m,
        4 => 5,
        other => {
            return Err(BlockError::BadParameter(format!(
                "no lift step {other}; steps are 1..=4"
            )))
        }
    };
    let powers: Vec<SparseBinaryMatrix> = (0..order)
        .map(|e| PermutationPower::new(order, e).to_matrix())
        .collect();
    let mut bad: Option<BlockError> = None;
    let matrix = code.matrix.kronecker_expand(order, order, |r, c| {
        let (role, col) = match role_of(code, r, c) {
            Ok(v) => v,
            Err(e) => {
                bad.get_or_insert(e);
                return None;
            }
        };
        let e = match (step, role) {
            (2, Role::Shifted) => col.p2_row % q,
            (3, Role::Shifted) => col.ell % m,
            (4, Role::Shifted) => 0,
            (4, Role::Upper) => 1,
            (4, Role::Lower) => 2,
            _ => 0,
        };
        Some(&powers[e])
    })?;
    if let Some(e) = bad {
        return Err(e);
    }
    Ok(BlockCode {
        m,
        stage: Stage::after(step),
        matrix,
        layout: BlockLayout::new(
            code.layout.block_size * order * q,
            code.layout.block_size * order * q * m,
            code.layout.block_size * order,
        )?,
        columns: code.columns.clone(),
    })
}

/// Base matrix taken through all four steps: size
/// `25m(2m+1)^2 x 25m^2(2m+1)^2`, girth at least 8 for `m >= 2`.
pub fn build_full(m: usize) -> Result<BlockCode, BlockError> {
    let mut code = build_base(m)?;
    for step in 1..=4 {
        code = lift_step(&code, step)?;
    }
    Ok(code)
}

/// Counts of surviving block-level 6-cycles by class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SixCycleCensus {
    /// Identity cells only.
    pub class_a: u64,
    /// Two shift cells in the same block row.
    pub class_b: u64,
    /// Two shift cells in different block rows.
    pub class_c: u64,
    /// Three shift cells.
    pub class_d: u64,
}

impl SixCycleCensus {
    pub fn total(&self) -> u64 {
        self.class_a + self.class_b + self.class_c + self.class_d
    }

    fn add(mut self, other: SixCycleCensus) -> SixCycleCensus {
        self.class_a += other.class_a;
        self.class_b += other.class_b;
        self.class_c += other.class_c;
        self.class_d += other.class_d;
        self
    }
}

/// Classify the block hexagons that actually close into 6-cycles at the
/// current cell size (3 for the base, 5 after step 1). Each surviving
/// hexagon holds exactly `cell` scalar 6-cycles, so
/// `total * cell == count_cycles(matrix, 6)`.
pub fn classify_six_cycles(code: &BlockCode) -> Result<SixCycleCensus, BlockError> {
    let d = match code.stage {
        Stage::Base => 3i64,
        Stage::Step1 => 5,
        other => return Err(BlockError::StageUnsupported(other)),
    };
    // support[b] = the three (block_row, exponent) cells of block column b.
    let support: Vec<[(usize, i64); 3]> = code
        .columns
        .iter()
        .map(|col| [(col.i, 0), (col.j, 0), (col.p2_row, 2)])
        .collect();
    let shared = |x: usize, y: usize| -> Vec<(usize, i64, i64)> {
        let mut out = Vec::new();
        for &(rx, ex) in &support[x] {
            for &(ry, ey) in &support[y] {
                if rx == ry {
                    out.push((rx, ex, ey));
                }
            }
        }
        out
    };
    let n = support.len();
    let census = map_reduce_with(
        n,
        || (),
        |_, x| {
            let mut local = SixCycleCensus::default();
            let mut err: Option<BlockError> = None;
            for y in x + 1..n {
                let sxy = shared(x, y);
                if sxy.is_empty() {
                    continue;
                }
                for z in y + 1..n {
                    for &(u, eux, euy) in &sxy {
                        for &(v, evy, evz) in &shared(y, z) {
                            if v == u {
                                continue;
                            }
                            for &(w, ewz, ewx) in &shared(z, x) {
                                if w == u || w == v {
                                    continue;
                                }
                                let (_, closes) = fan_sum(&[eux, euy, evy, evz, ewz, ewx], d);
                                if !closes {
                                    continue;
                                }
                                let p2_rows: Vec<usize> =
                                    [(u, eux), (u, euy), (v, evy), (v, evz), (w, ewz), (w, ewx)]
                                        .iter()
                                        .filter(|&&(_, e)| e != 0)
                                        .map(|&(row, _)| row)
                                        .collect();
                                match p2_rows.len() {
                                    0 => local.class_a += 1,
                                    2 if p2_rows[0] == p2_rows[1] => local.class_b += 1,
                                    2 => local.class_c += 1,
                                    3 => local.class_d += 1,
                                    k => {
                                        err.get_or_insert(BlockError::Unclassifiable {
                                            p2_count: k,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
            match err {
                None => Ok(local),
                Some(e) => Err(e),
            }
        },
        Ok(SixCycleCensus::default()),
        |a, b| match (a, b) {
            (Ok(x), Ok(y)) => Ok(x.add(y)),
            (Err(e), _) | (_, Err(e)) => Err(e),
        },
    );
    census
}
