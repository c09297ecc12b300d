//! Exact combinatorial ground truth.
//!
//! Everything here is integer-exact: dimer matchings of a rectangular grid
//! with a set of removed sites (monomers) are counted by a broken-profile
//! transfer sweep, enumerated explicitly, and superpositions of two matchings
//! are classified by walking their alternating paths. No floating arithmetic
//! enters this module.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::{Error, Result};

/// Largest value the shorter grid side may take in the transfer sweep.
pub const DP_MIN_SIDE_LIMIT: u32 = 24;

/// Default cap on explicitly enumerated matchings and on classified pairs.
pub const DEFAULT_ENUM_CAP: usize = 1_000_000;

/// Grid site, 1-based: `m` counts columns (horizontal), `n` counts rows
/// (vertical). Ordering is column-major: (1,1) < (1,2) < (2,1).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Site {
    pub m: u32,
    pub n: u32,
}

impl Site {
    pub fn new(m: u32, n: u32) -> Self {
        Site { m, n }
    }
}

impl std::fmt::Display for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.m, self.n)
    }
}

/// Rectangular grid extent: `width` columns by `height` rows.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct GridSpec {
    pub width: u32,
    pub height: u32,
}

impl GridSpec {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain("grid dimensions must be positive".into()));
        }
        Ok(GridSpec { width, height })
    }

    pub fn contains(&self, s: Site) -> bool {
        (1..=self.width).contains(&s.m) && (1..=self.height).contains(&s.n)
    }

    pub fn n_sites(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Column-major index; ascending index equals ascending site order.
    fn idx(&self, s: Site) -> usize {
        (s.m as usize - 1) * self.height as usize + (s.n as usize - 1)
    }

    fn site_at(&self, idx: usize) -> Site {
        Site::new(
            (idx / self.height as usize) as u32 + 1,
            (idx % self.height as usize) as u32 + 1,
        )
    }
}

/// Ordered set of distinct sites removed from the grid before matching.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct MonomerSet {
    sites: Vec<Site>,
}

impl MonomerSet {
    pub fn empty() -> Self {
        MonomerSet { sites: Vec::new() }
    }

    pub fn new(mut sites: Vec<Site>) -> Result<Self> {
        sites.sort();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("duplicate monomer site".into()));
        }
        Ok(MonomerSet { sites })
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, s: Site) -> bool {
        self.sites.binary_search(&s).is_ok()
    }

    fn check_in_bounds(&self, grid: &GridSpec) -> Result<()> {
        for &s in &self.sites {
            if !grid.contains(s) {
                return Err(Error::Domain(format!("monomer {s} outside grid")));
            }
        }
        Ok(())
    }
}

/// Undirected grid bond; endpoints stored with `a < b`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Edge {
    pub a: Site,
    pub b: Site,
}

impl Edge {
    pub fn new(x: Site, y: Site) -> Self {
        if x <= y {
            Edge { a: x, b: y }
        } else {
            Edge { a: y, b: x }
        }
    }

    fn is_grid_bond(&self) -> bool {
        let dm = self.a.m.abs_diff(self.b.m);
        let dn = self.a.n.abs_diff(self.b.n);
        dm + dn == 1
    }
}

/// A dimer cover as a sorted edge list.
pub type Matching = Vec<Edge>;

/// The two ways the two open paths can pair the four corner monomers.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Connectivity {
    /// Paths run vertically: (1,1)-(1,N) and (M,1)-(M,N).
    TypeI,
    /// Paths hook up sideways: (1,1)-(M,1) and (1,N)-(M,N).
    TypeII,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Classification {
    pub connectivity: Connectivity,
    /// Closed alternating cycles of length >= 4. Doubled bonds do not count.
    pub loops: u32,
}

/// Superposition of two dimer covers with complementary monomer sets.
#[derive(Clone, Debug)]
pub struct DoubleDimerConfig {
    pub grid: GridSpec,
    pub match_a: Matching,
    pub match_b: Matching,
    pub monomers_a: MonomerSet,
    pub monomers_b: MonomerSet,
}

/// Tally of an exhaustive classification of all matching pairs.
#[derive(Clone, Debug)]
pub struct ConnectivityReport {
    pub n_total: BigUint,
    pub n_type_i: BigUint,
    pub n_type_ii: BigUint,
    /// loop count -> number of pairs with that many loops
    pub loop_histogram: BTreeMap<u32, BigUint>,
    /// Sum over pairs of 2^(extra weight): 4*n_I + 2*n_II.
    pub z_dd_weighted: BigRational,
    /// Plain pair fraction n_II / n_total.
    pub p_raw: BigRational,
    /// Hook-up probability (n_total - n_I) / (n_total + n_I); equals
    /// 2*n_II / z_dd_weighted.
    pub p_hookup: BigRational,
}

/// Corner monomer sets of the hook-up problem: bottom pair for side A,
/// top pair for side B.
pub fn hookup_monomers(grid: &GridSpec) -> Result<(MonomerSet, MonomerSet)> {
    let (w, h) = (grid.width, grid.height);
    if w < 2 || w % 2 != 0 || h < 3 || h % 2 != 1 {
        return Err(Error::Domain(format!(
            "hook-up geometry needs even width >= 2 and odd height >= 3, got {w}x{h}"
        )));
    }
    let bottom = MonomerSet::new(vec![Site::new(1, 1), Site::new(w, 1)])?;
    let top = MonomerSet::new(vec![Site::new(1, h), Site::new(w, h)])?;
    Ok((bottom, top))
}

/// Counts perfect matchings of the grid minus the monomer sites by a
/// broken-profile sweep along the longer axis.
pub fn count_matchings(grid: &GridSpec, monomers: &MonomerSet) -> Result<BigUint> {
    monomers.check_in_bounds(grid)?;
    let min_side = grid.width.min(grid.height);
    if min_side > DP_MIN_SIDE_LIMIT {
        return Err(Error::DimensionTooLarge {
            min_side,
            limit: DP_MIN_SIDE_LIMIT,
        });
    }
    let transpose = grid.width < grid.height;
    let (cols, rows) = if transpose {
        (grid.height as usize, grid.width as usize)
    } else {
        (grid.width as usize, grid.height as usize)
    };
    let mut removed = vec![false; cols * rows];
    for &s in monomers.sites() {
        let (c, r) = if transpose {
            (s.n as usize - 1, s.m as usize - 1)
        } else {
            (s.m as usize - 1, s.n as usize - 1)
        };
        removed[c * rows + r] = true;
    }

    // Mask bit r, while cell (c, r) is being processed: bits >= r say the
    // corresponding cell of column c is already covered from the left or from
    // below; bits < r say the cell of column c+1 is covered from the left.
    let mut dp: HashMap<u32, BigUint> = HashMap::new();
    dp.insert(0, BigUint::one());
    for c in 0..cols {
        for r in 0..rows {
            let bit = 1u32 << r;
            let mut next: HashMap<u32, BigUint> = HashMap::with_capacity(dp.len() * 2);
            let mut bump = |mask: u32, cnt: &BigUint| {
                next.entry(mask)
                    .and_modify(|v| *v += cnt)
                    .or_insert_with(|| cnt.clone());
            };
            for (&mask, cnt) in &dp {
                if removed[c * rows + r] {
                    if mask & bit == 0 {
                        bump(mask, cnt);
                    }
                    continue;
                }
                if mask & bit != 0 {
                    bump(mask & !bit, cnt);
                    continue;
                }
                if c + 1 < cols && !removed[(c + 1) * rows + r] {
                    bump(mask | bit, cnt);
                }
                if r + 1 < rows && mask & (bit << 1) == 0 && !removed[c * rows + r + 1] {
                    bump(mask | (bit << 1), cnt);
                }
            }
            dp = next;
        }
    }
    Ok(dp.remove(&0).unwrap_or_else(BigUint::zero))
}

fn backtrack<F: FnMut(&[Edge]) -> Result<()>>(
    grid: &GridSpec,
    free: &mut [bool],
    stack: &mut Vec<Edge>,
    emit: &mut F,
) -> Result<()> {
    let first = match free.iter().position(|&f| f) {
        Some(i) => i,
        None => return emit(stack),
    };
    let v = grid.site_at(first);
    // Partner candidates above and to the right, in site order; smaller
    // neighbors are always covered already because `first` is minimal.
    let up = Site::new(v.m, v.n + 1);
    let right = Site::new(v.m + 1, v.n);
    free[first] = false;
    for w in [up, right] {
        if !grid.contains(w) {
            continue;
        }
        let wi = grid.idx(w);
        if !free[wi] {
            continue;
        }
        free[wi] = false;
        stack.push(Edge::new(v, w));
        backtrack(grid, free, stack, emit)?;
        stack.pop();
        free[wi] = true;
    }
    free[first] = true;
    Ok(())
}

fn free_cells(grid: &GridSpec, monomers: &MonomerSet) -> Result<Vec<bool>> {
    monomers.check_in_bounds(grid)?;
    let mut free = vec![true; grid.n_sites()];
    for &s in monomers.sites() {
        free[grid.idx(s)] = false;
    }
    Ok(free)
}

/// Counts matchings by exhaustive backtracking. Independent of the transfer
/// sweep; intended as a cross-check oracle.
pub fn count_matchings_backtracking(grid: &GridSpec, monomers: &MonomerSet) -> Result<BigUint> {
    let mut free = free_cells(grid, monomers)?;
    let mut count = BigUint::zero();
    let mut stack = Vec::new();
    backtrack(grid, &mut free, &mut stack, &mut |_| {
        count += 1u32;
        Ok(())
    })?;
    Ok(count)
}

/// Enumerates all matchings in ascending lexicographic order of their sorted
/// edge lists, up to `cap`.
pub fn enumerate_matchings_capped(
    grid: &GridSpec,
    monomers: &MonomerSet,
    cap: usize,
) -> Result<Vec<Matching>> {
    let mut free = free_cells(grid, monomers)?;
    let mut out: Vec<Matching> = Vec::new();
    let mut stack = Vec::new();
    backtrack(grid, &mut free, &mut stack, &mut |edges| {
        if out.len() >= cap {
            return Err(Error::EnumerationCapExceeded { cap });
        }
        out.push(edges.to_vec());
        Ok(())
    })?;
    Ok(out)
}

pub fn enumerate_matchings(grid: &GridSpec, monomers: &MonomerSet) -> Result<Vec<Matching>> {
    enumerate_matchings_capped(grid, monomers, DEFAULT_ENUM_CAP)
}

/// Per-site partner table for one matching; `None` marks a monomer.
fn partner_table(
    grid: &GridSpec,
    matching: &Matching,
    monomers: &MonomerSet,
    label: &str,
) -> Result<Vec<Option<u32>>> {
    let mut partners: Vec<Option<u32>> = vec![None; grid.n_sites()];
    for e in matching {
        if !grid.contains(e.a) || !grid.contains(e.b) {
            return Err(Error::MalformedSuperposition(format!(
                "matching {label}: bond {}-{} leaves the grid",
                e.a, e.b
            )));
        }
        if !e.is_grid_bond() {
            return Err(Error::MalformedSuperposition(format!(
                "matching {label}: {}-{} is not a nearest-neighbor bond",
                e.a, e.b
            )));
        }
        for (s, t) in [(e.a, e.b), (e.b, e.a)] {
            let i = grid.idx(s);
            if partners[i].is_some() {
                return Err(Error::MalformedSuperposition(format!(
                    "matching {label}: site {s} covered twice"
                )));
            }
            partners[i] = Some(grid.idx(t) as u32);
        }
    }
    for i in 0..grid.n_sites() {
        let s = grid.site_at(i);
        match (partners[i].is_some(), monomers.contains(s)) {
            (true, true) => {
                return Err(Error::MalformedSuperposition(format!(
                    "matching {label}: monomer site {s} is covered"
                )))
            }
            (false, false) => {
                return Err(Error::MalformedSuperposition(format!(
                    "matching {label}: site {s} left uncovered"
                )))
            }
            _ => {}
        }
    }
    Ok(partners)
}

/// Walks the alternating path that starts at `start` (covered only by the
/// `start_in_b` side), marking sites visited; returns the terminal site index.
fn walk_path(
    pa: &[Option<u32>],
    pb: &[Option<u32>],
    start: usize,
    start_in_b: bool,
    visited: &mut [bool],
) -> usize {
    let mut in_b = start_in_b;
    let mut cur = start;
    visited[cur] = true;
    loop {
        let table = if in_b { pb } else { pa };
        let next = match table[cur] {
            Some(x) => x as usize,
            None => return cur,
        };
        visited[next] = true;
        cur = next;
        in_b = !in_b;
    }
}

fn classify_tables(
    grid: &GridSpec,
    pa: &[Option<u32>],
    pb: &[Option<u32>],
) -> Result<Classification> {
    let c11 = grid.idx(Site::new(1, 1));
    let cm1 = grid.idx(Site::new(grid.width, 1));
    let c1n = grid.idx(Site::new(1, grid.height));
    let cmn = grid.idx(Site::new(grid.width, grid.height));

    let mut visited = vec![false; grid.n_sites()];
    // (1,1) misses side A, so its path leaves through B.
    let end = walk_path(pa, pb, c11, true, &mut visited);
    let connectivity = if end == c1n {
        Connectivity::TypeI
    } else if end == cm1 {
        Connectivity::TypeII
    } else {
        return Err(Error::MalformedSuperposition(format!(
            "path from (1,1) terminates at {}, which pairs corners diagonally",
            grid.site_at(end)
        )));
    };
    // Second path covers the remaining two corners.
    match connectivity {
        Connectivity::TypeI => {
            let end2 = walk_path(pa, pb, cm1, true, &mut visited);
            if end2 != cmn {
                return Err(Error::MalformedSuperposition(
                    "second path does not close the corner pairing".into(),
                ));
            }
        }
        Connectivity::TypeII => {
            let end2 = walk_path(pa, pb, c1n, false, &mut visited);
            if end2 != cmn {
                return Err(Error::MalformedSuperposition(
                    "second path does not close the corner pairing".into(),
                ));
            }
        }
    }

    let mut loops = 0u32;
    for i in 0..grid.n_sites() {
        if visited[i] {
            continue;
        }
        if pa[i] == pb[i] {
            // doubled bond: a two-site component, not a loop
            let j = pa[i].expect("non-monomer site") as usize;
            visited[i] = true;
            visited[j] = true;
            continue;
        }
        // alternating cycle through i
        let mut cur = i;
        let mut in_b = false;
        loop {
            visited[cur] = true;
            let table = if in_b { pb } else { pa };
            cur = table[cur].expect("cycle sites are fully covered") as usize;
            in_b = !in_b;
            if cur == i {
                break;
            }
        }
        loops += 1;
    }
    Ok(Classification { connectivity, loops })
}

/// Classifies one superposition: corner pairing type plus loop count.
pub fn classify(cfg: &DoubleDimerConfig) -> Result<Classification> {
    let (bottom, top) = hookup_monomers(&cfg.grid)?;
    if cfg.monomers_a != bottom || cfg.monomers_b != top {
        return Err(Error::MalformedSuperposition(
            "monomer sets are not the four corner monomers (bottom pair on A, top pair on B)"
                .into(),
        ));
    }
    let pa = partner_table(&cfg.grid, &cfg.match_a, &cfg.monomers_a, "A")?;
    let pb = partner_table(&cfg.grid, &cfg.match_b, &cfg.monomers_b, "B")?;
    classify_tables(&cfg.grid, &pa, &pb)
}

/// Enumerates both matching families and classifies every pair.
pub fn exhaustive_hookup_capped(grid: &GridSpec, cap: usize) -> Result<ConnectivityReport> {
    let (bottom, top) = hookup_monomers(grid)?;
    let list_a = enumerate_matchings_capped(grid, &bottom, cap)?;
    let list_b = enumerate_matchings_capped(grid, &top, cap)?;
    if list_a.len().saturating_mul(list_b.len()) > cap {
        return Err(Error::EnumerationCapExceeded { cap });
    }
    let tables_a: Vec<Vec<Option<u32>>> = list_a
        .iter()
        .map(|m| partner_table(grid, m, &bottom, "A"))
        .collect::<Result<_>>()?;
    let tables_b: Vec<Vec<Option<u32>>> = list_b
        .iter()
        .map(|m| partner_table(grid, m, &top, "B"))
        .collect::<Result<_>>()?;

    let mut n_type_i = BigUint::zero();
    let mut n_type_ii = BigUint::zero();
    let mut loop_histogram: BTreeMap<u32, BigUint> = BTreeMap::new();
    for pa in &tables_a {
        for pb in &tables_b {
            let cls = classify_tables(grid, pa, pb)?;
            match cls.connectivity {
                Connectivity::TypeI => n_type_i += 1u32,
                Connectivity::TypeII => n_type_ii += 1u32,
            }
            *loop_histogram.entry(cls.loops).or_insert_with(BigUint::zero) += 1u32;
        }
    }
    let n_total = BigUint::from(list_a.len()) * BigUint::from(list_b.len());
    assert_eq!(
        &n_type_i + &n_type_ii,
        n_total,
        "every pair must classify as exactly one type"
    );

    let big = |u: &BigUint| BigRational::from_integer(u.clone().into());
    let z_dd_weighted = big(&n_type_i) * BigRational::from_integer(4.into())
        + big(&n_type_ii) * BigRational::from_integer(2.into());
    let p_raw = big(&n_type_ii) / big(&n_total);
    let p_hookup = (big(&n_total) - big(&n_type_i)) / (big(&n_total) + big(&n_type_i));
    // same identity that makes the weighted and unweighted forms agree
    assert_eq!(
        BigRational::from_integer(2.into()) * big(&n_type_ii) / z_dd_weighted.clone(),
        p_hookup,
        "weighted hook-up fraction must match the counting form"
    );
    Ok(ConnectivityReport {
        n_total,
        n_type_i,
        n_type_ii,
        loop_histogram,
        z_dd_weighted,
        p_raw,
        p_hookup,
    })
}

pub fn exhaustive_hookup(grid: &GridSpec) -> Result<ConnectivityReport> {
    exhaustive_hookup_capped(grid, DEFAULT_ENUM_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn grid(w: u32, h: u32) -> GridSpec {
        GridSpec::new(w, h).unwrap()
    }

    fn count(w: u32, h: u32, monomers: &[(u32, u32)]) -> BigUint {
        let ms = MonomerSet::new(monomers.iter().map(|&(m, n)| Site::new(m, n)).collect())
            .unwrap();
        count_matchings(&grid(w, h), &ms).unwrap()
    }

    #[test]
    fn small_full_grids() {
        assert_eq!(count(2, 1, &[]), BigUint::from(1u32));
        assert_eq!(count(1, 1, &[]), BigUint::from(0u32));
        assert_eq!(count(2, 2, &[]), BigUint::from(2u32));
        assert_eq!(count(2, 3, &[]), BigUint::from(3u32));
        assert_eq!(count(3, 3, &[]), BigUint::from(0u32));
        assert_eq!(count(4, 4, &[]), BigUint::from(36u32));
    }

    #[test]
    fn eight_by_eight_reference_count() {
        assert_eq!(count(8, 8, &[]), BigUint::from(12_988_816u32));
    }

    #[test]
    fn eight_by_eight_backtracking_agrees() {
        let g = grid(8, 8);
        let bt = count_matchings_backtracking(&g, &MonomerSet::empty()).unwrap();
        assert_eq!(bt, BigUint::from(12_988_816u32));
    }

    #[test]
    fn corner_monomer_counts_on_2x3() {
        assert_eq!(count(2, 3, &[(1, 1), (2, 1)]), BigUint::from(2u32));
        assert_eq!(count(2, 3, &[(1, 1), (2, 3)]), BigUint::from(1u32));
    }

    #[test]
    fn transpose_invariance() {
        for (w, h) in [(2u32, 5u32), (3, 4), (4, 7), (5, 6)] {
            assert_eq!(count(w, h, &[]), count(h, w, &[]));
        }
        // tall grid forces the transposed sweep
        assert_eq!(count(3, 20, &[]), count(20, 3, &[]));
    }

    #[test]
    fn dimension_limit_enforced() {
        let err = count_matchings(&grid(25, 25), &MonomerSet::empty()).unwrap_err();
        match err {
            Error::DimensionTooLarge { min_side, limit } => {
                assert_eq!(min_side, 25);
                assert_eq!(limit, DP_MIN_SIDE_LIMIT);
            }
            other => panic!("unexpected error {other:?}"),
        }
        // a thin grid of the same length is fine
        assert_eq!(count(25, 2, &[]), count(2, 25, &[]));
    }

    #[test]
    fn enumeration_matches_count_and_is_sorted() {
        for (w, h) in [(2u32, 2u32), (2, 3), (3, 4), (4, 4), (2, 5)] {
            let g = grid(w, h);
            let list = enumerate_matchings(&g, &MonomerSet::empty()).unwrap();
            let n = count_matchings(&g, &MonomerSet::empty()).unwrap();
            assert_eq!(BigUint::from(list.len()), n);
            let mut sorted = list.clone();
            sorted.sort();
            assert_eq!(list, sorted, "enumeration must be lexicographic");
            sorted.dedup();
            assert_eq!(list.len(), sorted.len(), "no duplicates");
            for m in &list {
                assert_eq!(m.len() * 2, g.n_sites());
            }
        }
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let err = enumerate_matchings_capped(&grid(6, 6), &MonomerSet::empty(), 10).unwrap_err();
        match err {
            Error::EnumerationCapExceeded { cap } => assert_eq!(cap, 10),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn monomer_swap_symmetry() {
        for w in [2u32, 4, 6] {
            for h in [3u32, 5] {
                for n1 in 1..=h {
                    for n2 in 1..=h {
                        let a = count(w, h, &[(1, n1), (w, n2)]);
                        let b = count(w, h, &[(1, n2), (w, n1)]);
                        assert_eq!(a, b, "swap failed at {w}x{h} ({n1},{n2})");
                    }
                }
            }
        }
    }

    #[test]
    fn same_color_monomers_count_zero() {
        for w in [2u32, 4] {
            for h in [3u32, 4] {
                for i in 0..grid(w, h).n_sites() {
                    for j in (i + 1)..grid(w, h).n_sites() {
                        let g = grid(w, h);
                        let (s, t) = (g.site_at(i), g.site_at(j));
                        if (s.m + s.n) % 2 == (t.m + t.n) % 2 {
                            assert_eq!(
                                count(w, h, &[(s.m, s.n), (t.m, t.n)]),
                                BigUint::zero(),
                                "same-color pair {s},{t} on {w}x{h}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn reflection_symmetry() {
        let g = grid(4, 5);
        for i in 0..g.n_sites() {
            for j in (i + 1)..g.n_sites() {
                let (s, t) = (g.site_at(i), g.site_at(j));
                let base = count(4, 5, &[(s.m, s.n), (t.m, t.n)]);
                let hm = count(4, 5, &[(5 - s.m, s.n), (5 - t.m, t.n)]);
                let vm = count(4, 5, &[(s.m, 6 - s.n), (t.m, 6 - t.n)]);
                assert_eq!(base, hm, "horizontal mirror at {s},{t}");
                assert_eq!(base, vm, "vertical mirror at {s},{t}");
            }
        }
    }

    fn vertical_pair_matching(cells: &[(u32, u32)]) -> Matching {
        // pairs cells vertically in the order given: (m,n) with (m,n+1)
        cells
            .chunks(2)
            .map(|c| Edge::new(Site::new(c[0].0, c[0].1), Site::new(c[1].0, c[1].1)))
            .collect()
    }

    #[test]
    fn classify_vertical_dominoes_is_type_i() {
        // A misses the bottom corners and fills with vertical dominoes,
        // B misses the top corners and fills with vertical dominoes.
        let g = grid(2, 3);
        let a = vertical_pair_matching(&[(1, 2), (1, 3), (2, 2), (2, 3)]);
        let b = vertical_pair_matching(&[(1, 1), (1, 2), (2, 1), (2, 2)]);
        let (bottom, top) = hookup_monomers(&g).unwrap();
        let cls = classify(&DoubleDimerConfig {
            grid: g,
            match_a: a,
            match_b: b,
            monomers_a: bottom,
            monomers_b: top,
        })
        .unwrap();
        assert_eq!(cls.connectivity, Connectivity::TypeI);
        assert_eq!(cls.loops, 0);
    }

    #[test]
    fn classify_horizontal_dominoes_is_type_ii_with_doubled_bond() {
        let g = grid(2, 3);
        let a: Matching = vec![
            Edge::new(Site::new(1, 2), Site::new(2, 2)),
            Edge::new(Site::new(1, 3), Site::new(2, 3)),
        ];
        let b: Matching = vec![
            Edge::new(Site::new(1, 1), Site::new(2, 1)),
            Edge::new(Site::new(1, 2), Site::new(2, 2)),
        ];
        let (bottom, top) = hookup_monomers(&g).unwrap();
        let cls = classify(&DoubleDimerConfig {
            grid: g,
            match_a: a,
            match_b: b,
            monomers_a: bottom,
            monomers_b: top,
        })
        .unwrap();
        assert_eq!(cls.connectivity, Connectivity::TypeII);
        assert_eq!(cls.loops, 0, "a doubled bond is not a loop");
    }

    #[test]
    fn classify_rejects_malformed_input() {
        let g = grid(2, 3);
        let (bottom, top) = hookup_monomers(&g).unwrap();
        // covers a monomer site
        let bad = DoubleDimerConfig {
            grid: g,
            match_a: vertical_pair_matching(&[(1, 1), (1, 2), (2, 2), (2, 3)]),
            match_b: vertical_pair_matching(&[(1, 1), (1, 2), (2, 1), (2, 2)]),
            monomers_a: bottom.clone(),
            monomers_b: top.clone(),
        };
        assert!(matches!(
            classify(&bad),
            Err(Error::MalformedSuperposition(_))
        ));
        // leaves a site uncovered
        let short = DoubleDimerConfig {
            grid: g,
            match_a: vertical_pair_matching(&[(1, 2), (1, 3)]),
            match_b: vertical_pair_matching(&[(1, 1), (1, 2), (2, 1), (2, 2)]),
            monomers_a: bottom.clone(),
            monomers_b: top.clone(),
        };
        assert!(matches!(
            classify(&short),
            Err(Error::MalformedSuperposition(_))
        ));
        // non-adjacent bond
        let skew = DoubleDimerConfig {
            grid: g,
            match_a: vec![
                Edge::new(Site::new(1, 2), Site::new(2, 3)),
                Edge::new(Site::new(2, 2), Site::new(1, 3)),
            ],
            match_b: vertical_pair_matching(&[(1, 1), (1, 2), (2, 1), (2, 2)]),
            monomers_a: bottom,
            monomers_b: top,
        };
        assert!(matches!(
            classify(&skew),
            Err(Error::MalformedSuperposition(_))
        ));
    }

    #[test]
    fn exhaustive_2x3_report() {
        let rep = exhaustive_hookup(&grid(2, 3)).unwrap();
        assert_eq!(rep.n_total, BigUint::from(4u32));
        assert_eq!(rep.n_type_i, BigUint::from(1u32));
        assert_eq!(rep.n_type_ii, BigUint::from(3u32));
        assert_eq!(rep.loop_histogram.len(), 1);
        assert_eq!(rep.loop_histogram[&0], BigUint::from(4u32));
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(rep.z_dd_weighted, r(10, 1));
        assert_eq!(rep.p_raw, r(3, 4));
        assert_eq!(rep.p_hookup, r(3, 5));
    }

    #[test]
    fn exhaustive_counts_match_direct_counts() {
        for (w, h) in [(2u32, 3u32), (2, 5), (4, 3)] {
            let g = grid(w, h);
            let rep = exhaustive_hookup(&g).unwrap();
            let q11 = count(w, h, &[(1, 1), (w, 1)]);
            let q1n = count(w, h, &[(1, 1), (w, h)]);
            assert_eq!(rep.n_total, &q11 * &q11);
            assert_eq!(rep.n_type_i, &q1n * &q1n);
        }
    }

    #[test]
    fn loop_histogram_totals_match() {
        let rep = exhaustive_hookup(&grid(4, 3)).unwrap();
        let total: BigUint = rep.loop_histogram.values().cloned().sum();
        assert_eq!(total, rep.n_total);
        // at least one pair on 4x3 contains a genuine loop
        let looped: u64 = rep
            .loop_histogram
            .iter()
            .filter(|(l, _)| **l > 0)
            .map(|(_, c)| c.to_u64().unwrap())
            .sum();
        assert!(looped > 0, "expected loops on 4x3: {:?}", rep.loop_histogram);
    }

    #[test]
    fn hookup_geometry_validation() {
        assert!(matches!(
            exhaustive_hookup(&grid(3, 3)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            exhaustive_hookup(&grid(2, 4)),
            Err(Error::Domain(_))
        ));
    }
}
