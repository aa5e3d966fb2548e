//! Planar geometry for the simulation window.
//!
//! Provides:
//! - `Vec2` points and squared/torus distances,
//! - circle-circle intersection ("lens") areas with degenerate-case clamps,
//! - `UniformGrid`, a bucketed spatial index over the square window used for
//!   nearest-weighted-point queries and fixed-radius neighbor scans.
//!
//! The simulation window is the square [-R, R]^2. With wrapped boundary the
//! square is treated as a flat torus, which removes edge effects for
//! stationary-statistics experiments.

// ======================================================================
// Points and distances
// ======================================================================

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Euclidean squared distance.
    pub fn dist2(&self, other: &Vec2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Euclidean distance.
    pub fn dist(&self, other: &Vec2) -> f64 {
        self.dist2(other).sqrt()
    }

    /// Squared distance on the flat torus of side `2 * half_side` (each
    /// coordinate difference wraps to the shorter way around).
    pub fn torus_dist2(&self, other: &Vec2, half_side: f64) -> f64 {
        let side = 2.0 * half_side;
        let mut dx = (self.x - other.x).abs();
        let mut dy = (self.y - other.y).abs();
        if dx > half_side {
            dx = side - dx;
        }
        if dy > half_side {
            dy = side - dy;
        }
        dx * dx + dy * dy
    }
}

/// Boundary handling for the square window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Plain square: distances are Euclidean, points near the edge see a
    /// truncated neighborhood.
    Open,
    /// Flat torus: opposite edges are identified, every point sees a full
    /// (wrapped) neighborhood.
    Wrapped,
}

// ======================================================================
// Circle-circle intersection
// ======================================================================

/// Area of the intersection of two disks with radii `r1`, `r2` whose centers
/// are `d` apart. Handles disjoint and nested configurations exactly.
pub fn lens_area(r1: f64, r2: f64, d: f64) -> f64 {
    debug_assert!(r1 >= 0.0 && r2 >= 0.0 && d >= 0.0);
    if r1 == 0.0 || r2 == 0.0 || d >= r1 + r2 {
        return 0.0;
    }
    let rmin = r1.min(r2);
    if d <= (r1 - r2).abs() {
        return std::f64::consts::PI * rmin * rmin;
    }
    // circular-segment decomposition; clamp the cosines against roundoff
    let d2 = d * d;
    let c1 = ((d2 + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0);
    let c2 = ((d2 + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0);
    let t1 = r1 * r1 * c1.acos();
    let t2 = r2 * r2 * c2.acos();
    let under = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
    t1 + t2 - 0.5 * under.max(0.0).sqrt()
}

/// Area of the part of the disk with radius `r1` not covered by the disk
/// with radius `r2` at center distance `d`.
pub fn disk_minus_lens_area(r1: f64, r2: f64, d: f64) -> f64 {
    (std::f64::consts::PI * r1 * r1 - lens_area(r1, r2, d)).max(0.0)
}

// ======================================================================
// Uniform grid spatial index
// ======================================================================

/// One indexed entry: position, a per-entry scalar key, and identity.
///
/// The key is interpreted by the caller (association stores the squared
/// weight scale, contention queries ignore it). Packing position, key, and
/// identity together keeps neighbor scans on one cache line per entry.
#[derive(Debug, Clone, Copy)]
pub struct GridEntry {
    pub x: f64,
    pub y: f64,
    /// Caller-defined scalar carried with the entry.
    pub key: f64,
    /// Index into the caller's point array.
    pub idx: u32,
    /// Caller-defined small tag (tier index).
    pub tag: u32,
}

/// Bucketed uniform grid over the square [-half_side, half_side]^2.
///
/// Cells are laid out row-major; entries are stored contiguously per cell
/// (CSR layout) so scans touch memory linearly.
#[derive(Debug, Clone)]
pub struct UniformGrid {
    half_side: f64,
    cell: f64,
    n_cells: usize,
    /// CSR offsets, length n_cells^2 + 1.
    starts: Vec<u32>,
    entries: Vec<GridEntry>,
    boundary: Boundary,
}

impl UniformGrid {
    /// Build a grid over [-half_side, half_side]^2 holding `entries`.
    /// `target_per_cell` sets the expected bucket occupancy (2-4 is good).
    pub fn build(
        half_side: f64,
        boundary: Boundary,
        entries: Vec<GridEntry>,
        target_per_cell: f64,
    ) -> Self {
        let side = 2.0 * half_side;
        let n = entries.len().max(1) as f64;
        let mut n_cells = ((n / target_per_cell).sqrt().ceil() as usize).max(1);
        // cap the cell table so tiny populations in huge windows stay cheap
        n_cells = n_cells.min(2048);
        let cell = side / n_cells as f64;

        let cell_of = |x: f64, y: f64| -> usize {
            let cx = (((x + half_side) / cell) as usize).min(n_cells - 1);
            let cy = (((y + half_side) / cell) as usize).min(n_cells - 1);
            cy * n_cells + cx
        };

        // counting sort into CSR
        let mut counts = vec![0u32; n_cells * n_cells + 1];
        for e in &entries {
            counts[cell_of(e.x, e.y) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut sorted = vec![
            GridEntry { x: 0.0, y: 0.0, key: 0.0, idx: 0, tag: 0 };
            entries.len()
        ];
        let mut cursor = counts.clone();
        for e in entries {
            let c = cell_of(e.x, e.y);
            sorted[cursor[c] as usize] = e;
            cursor[c] += 1;
        }

        UniformGrid {
            half_side,
            cell,
            n_cells,
            starts: counts,
            entries: sorted,
            boundary,
        }
    }

    pub fn half_side(&self) -> f64 {
        self.half_side
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Number of indexed entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    fn cell_index(&self, cx: isize, cy: isize) -> Option<usize> {
        let n = self.n_cells as isize;
        match self.boundary {
            Boundary::Open => {
                if cx < 0 || cy < 0 || cx >= n || cy >= n {
                    None
                } else {
                    Some((cy * n + cx) as usize)
                }
            }
            Boundary::Wrapped => {
                let cx = cx.rem_euclid(n);
                let cy = cy.rem_euclid(n);
                Some((cy * n + cx) as usize)
            }
        }
    }

    #[inline]
    fn dist2(&self, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
        match self.boundary {
            Boundary::Open => {
                let dx = ax - bx;
                let dy = ay - by;
                dx * dx + dy * dy
            }
            Boundary::Wrapped => Vec2::new(ax, ay)
                .torus_dist2(&Vec2::new(bx, by), self.half_side),
        }
    }

    /// Visit every entry within distance `radius` of `p`, calling
    /// `visit(entry, dist2)`. Entries are visited at most once.
    pub fn for_each_within<F: FnMut(&GridEntry, f64)>(
        &self,
        p: Vec2,
        radius: f64,
        mut visit: F,
    ) {
        if self.entries.is_empty() {
            return;
        }
        let r2 = radius * radius;
        let span = (radius / self.cell).ceil() as isize + 1;
        let ccx = ((p.x + self.half_side) / self.cell).floor() as isize;
        let ccy = ((p.y + self.half_side) / self.cell).floor() as isize;
        let n = self.n_cells as isize;
        // on a wrapped grid never scan more cells than exist
        let span = if self.boundary == Boundary::Wrapped {
            span.min(n / 2 + 1)
        } else {
            span
        };
        let mut seen_wrap = std::collections::HashSet::new();
        for dy in -span..=span {
            for dx in -span..=span {
                let Some(c) = self.cell_index(ccx + dx, ccy + dy) else {
                    continue;
                };
                if self.boundary == Boundary::Wrapped && !seen_wrap.insert(c) {
                    continue;
                }
                let s = self.starts[c] as usize;
                let e = self.starts[c + 1] as usize;
                for entry in &self.entries[s..e] {
                    let d2 = self.dist2(p.x, p.y, entry.x, entry.y);
                    if d2 <= r2 {
                        visit(entry, d2);
                    }
                }
            }
        }
    }

    /// Find the entry minimizing `dist2 / entry.key` (weighted nearest) among
    /// entries accepted by `eligible(tag)`. Returns `(entry, weighted_dist2)`.
    ///
    /// `max_key` must be an upper bound on `entry.key` over eligible entries;
    /// it turns a weighted-distance bound into a plain distance bound so ring
    /// expansion can stop early. Exact for both boundary modes.
    pub fn weighted_nearest<E: Fn(u32) -> bool>(
        &self,
        p: Vec2,
        max_key: f64,
        eligible: E,
    ) -> Option<(GridEntry, f64)> {
        self.weighted_nearest_by(p, max_key, |entry| entry.key, eligible)
    }

    /// [`weighted_nearest`](Self::weighted_nearest) with the divisor computed
    /// by `key_of(entry)` instead of read from the stored key, for searches
    /// whose weights depend on the querying point (for example per-link
    /// shadowing draws). `max_key` must bound `key_of` over eligible entries;
    /// entries where `key_of` is nonpositive are skipped.
    pub fn weighted_nearest_by<K, E>(
        &self,
        p: Vec2,
        max_key: f64,
        key_of: K,
        eligible: E,
    ) -> Option<(GridEntry, f64)>
    where
        K: Fn(&GridEntry) -> f64,
        E: Fn(u32) -> bool,
    {
        if self.entries.is_empty() || max_key <= 0.0 {
            return None;
        }
        let n = self.n_cells as isize;
        let ccx = ((p.x + self.half_side) / self.cell).floor() as isize;
        let ccy = ((p.y + self.half_side) / self.cell).floor() as isize;

        let mut best: Option<(GridEntry, f64)> = None;
        let mut seen_wrap = std::collections::HashSet::new();
        let max_ring = match self.boundary {
            Boundary::Open => 2 * n, // generous; all cells reached well before
            Boundary::Wrapped => n / 2 + 1,
        };

        for ring in 0..=max_ring {
            // entries in ring r are at least (r-1) * cell away
            if let Some((_, wd2)) = best {
                let min_d = (ring - 1).max(0) as f64 * self.cell;
                // weighted_dist2 >= d2 / max_key
                if min_d * min_d / max_key > wd2 {
                    break;
                }
            }
            let mut any_cell = false;
            let scan = |cx: isize, cy: isize,
                            grid: &UniformGrid,
                            best: &mut Option<(GridEntry, f64)>,
                            seen: &mut std::collections::HashSet<usize>| {
                let Some(c) = grid.cell_index(cx, cy) else {
                    return false;
                };
                if grid.boundary == Boundary::Wrapped && !seen.insert(c) {
                    return false;
                }
                let s = grid.starts[c] as usize;
                let e = grid.starts[c + 1] as usize;
                for entry in &grid.entries[s..e] {
                    if !eligible(entry.tag) {
                        continue;
                    }
                    let key = key_of(entry);
                    if key <= 0.0 {
                        continue;
                    }
                    let d2 = grid.dist2(p.x, p.y, entry.x, entry.y);
                    let wd2 = d2 / key;
                    match best {
                        Some((be, bwd2)) => {
                            if wd2 < *bwd2
                                || (wd2 == *bwd2
                                    && (entry.tag, entry.idx) < (be.tag, be.idx))
                            {
                                *best = Some((*entry, wd2));
                            }
                        }
                        None => *best = Some((*entry, wd2)),
                    }
                }
                true
            };
            if ring == 0 {
                any_cell |= scan(ccx, ccy, self, &mut best, &mut seen_wrap);
            } else {
                for dx in -ring..=ring {
                    any_cell |= scan(ccx + dx, ccy - ring, self, &mut best, &mut seen_wrap);
                    any_cell |= scan(ccx + dx, ccy + ring, self, &mut best, &mut seen_wrap);
                }
                for dy in (-ring + 1)..ring {
                    any_cell |= scan(ccx - ring, ccy + dy, self, &mut best, &mut seen_wrap);
                    any_cell |= scan(ccx + ring, ccy + dy, self, &mut best, &mut seen_wrap);
                }
            }
            if !any_cell && best.is_some() && self.boundary == Boundary::Open && ring > n {
                break;
            }
        }
        best
    }
}

// ======================================================================
// Tests
// ======================================================================
