//! Square-lattice random-cluster disk: Swendsen-Wang sampling and loop
//! tracing on the medial lattice.
//!
//! Sites live at integer points (i, j) with |(i, j)| <= R. A bond
//! configuration assigns open/closed to nearest-neighbor bonds whose both
//! endpoints lie in the disk; everything else is closed. Loops are the
//! boundaries between open clusters and dual clusters, drawn on the medial
//! lattice: around each bond midpoint the two medial arcs either hug the two
//! endpoints (closed bond) or the two adjacent faces (open bond). Every arc
//! has exactly two ports, one per (face, endpoint) pair at its bond, and each
//! port is shared with exactly one other bond, so arcs chain into disjoint
//! cycles covering the medial edge set exactly once.
//!
//! Polygon coordinates are scaled by 4: site (i, j) sits at (4i, 4j), a
//! closed bond's arcs get corners displaced one unit toward each endpoint,
//! an open bond's arcs one unit into each face. Site rows y = 4j are touched
//! only by corners of site-hugging arcs of horizontal bonds, whose two
//! polygon neighbors always step one up and one down: scanline parity over
//! site centers is exact, with no ties against site abscissas (corners have
//! odd x).

use rand::Rng;

use crate::loops::Loop;

/// Row-indexed storage for sites with i^2 + j^2 <= R^2.
#[derive(Debug, Clone)]
pub struct FkDisk {
    pub radius: u32,
    j_min: i32,
    rows: Vec<(i32, i32, usize)>,
    n_sites: usize,
}

fn isqrt(v: i64) -> i64 {
    if v < 0 {
        return -1;
    }
    let mut x = (v as f64).sqrt() as i64;
    while x * x > v {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= v {
        x += 1;
    }
    x
}

impl FkDisk {
    pub fn new(radius: u32) -> Self {
        let rr = i64::from(radius) * i64::from(radius);
        let j_max = i64::from(radius) as i32;
        let mut rows = Vec::with_capacity((2 * j_max + 1) as usize);
        let mut offset = 0usize;
        for j in -j_max..=j_max {
            let m = isqrt(rr - i64::from(j) * i64::from(j)) as i32;
            rows.push((-m, m, offset));
            offset += (2 * m + 1) as usize;
        }
        FkDisk {
            radius,
            j_min: -j_max,
            rows,
            n_sites: offset,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn contains(&self, i: i32, j: i32) -> bool {
        let rr = i64::from(self.radius) * i64::from(self.radius);
        i64::from(i) * i64::from(i) + i64::from(j) * i64::from(j) <= rr
    }

    pub fn index(&self, i: i32, j: i32) -> Option<usize> {
        let row = usize::try_from(j - self.j_min).ok()?;
        let &(i_lo, i_hi, offset) = self.rows.get(row)?;
        if i < i_lo || i > i_hi {
            return None;
        }
        self.contains(i, j).then(|| offset + (i - i_lo) as usize)
    }

    pub fn iter_sites(&self) -> impl Iterator<Item = (i32, i32, usize)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(row, &(i_lo, i_hi, offset))| {
            let j = self.j_min + row as i32;
            (i_lo..=i_hi).map(move |i| (i, j, offset + (i - i_lo) as usize))
        })
    }

    pub fn row_range(&self) -> (i32, i32) {
        (self.j_min, self.j_min + self.rows.len() as i32 - 1)
    }

    pub fn row_span(&self, j: i32) -> Option<(i32, i32, usize)> {
        let row = usize::try_from(j - self.j_min).ok()?;
        self.rows.get(row).copied()
    }
}

/// Bond configuration on the disk. `horiz[s]` is the bond from site s to its
/// east neighbor, `vert[s]` to its north neighbor; bonds with an endpoint
/// outside the disk are absent and read as closed.
#[derive(Debug, Clone)]
pub struct FkStates {
    pub disk: FkDisk,
    pub horiz: Vec<bool>,
    pub vert: Vec<bool>,
}

impl FkStates {
    #[inline]
    pub fn bond_open(&self, i: i32, j: i32, horizontal: bool) -> bool {
        let Some(s) = self.disk.index(i, j) else { return false };
        let other_in = if horizontal {
            self.disk.contains(i + 1, j)
        } else {
            self.disk.contains(i, j + 1)
        };
        other_in && if horizontal { self.horiz[s] } else { self.vert[s] }
    }

    pub fn open_bond_count(&self) -> u64 {
        let mut n = 0u64;
        for (i, j, s) in self.disk.iter_sites() {
            if self.horiz[s] && self.disk.contains(i + 1, j) {
                n += 1;
            }
            if self.vert[s] && self.disk.contains(i, j + 1) {
                n += 1;
            }
        }
        n
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Deterministic orientation keeps runs reproducible.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// One Swendsen-Wang update cycle: resample bonds given spins, then recolor
/// clusters uniformly. Returns the open bond count after the bond half-step.
fn sw_sweep(
    disk: &FkDisk,
    spins: &mut [u8],
    horiz: &mut [bool],
    vert: &mut [bool],
    q: u32,
    p: f64,
    rng: &mut impl Rng,
) -> u64 {
    let mut open = 0u64;
    let mut uf = UnionFind::new(spins.len());
    for (i, j, s) in disk.iter_sites() {
        let east = disk.index(i + 1, j);
        horiz[s] = match east {
            Some(t) if spins[s] == spins[t] && rng.random::<f64>() < p => {
                uf.union(s as u32, t as u32);
                true
            }
            _ => false,
        };
        open += u64::from(horiz[s]);
        let north = disk.index(i, j + 1);
        vert[s] = match north {
            Some(t) if spins[s] == spins[t] && rng.random::<f64>() < p => {
                uf.union(s as u32, t as u32);
                true
            }
            _ => false,
        };
        open += u64::from(vert[s]);
    }
    let mut color = vec![u8::MAX; spins.len()];
    for s in 0..spins.len() {
        let root = uf.find(s as u32) as usize;
        if color[root] == u8::MAX {
            color[root] = rng.random_range(0..q) as u8;
        }
        spins[s] = color[root];
    }
    open
}

/// Swendsen-Wang chain for the q-state random-cluster model at bond density
/// p, run for `sweeps` full updates from a random-spin start. Returns the
/// final bond configuration and the per-sweep open-bond series.
pub fn swendsen_wang(
    radius: u32,
    q: u32,
    p: f64,
    sweeps: u32,
    rng: &mut impl Rng,
) -> (FkStates, Vec<f64>) {
    let disk = FkDisk::new(radius);
    let mut spins: Vec<u8> = (0..disk.n_sites()).map(|_| rng.random_range(0..q) as u8).collect();
    let mut horiz = vec![false; disk.n_sites()];
    let mut vert = vec![false; disk.n_sites()];
    let mut energy = Vec::with_capacity(sweeps as usize);
    for _ in 0..sweeps {
        let open = sw_sweep(&disk, &mut spins, &mut horiz, &mut vert, q, p, rng);
        energy.push(open as f64);
    }
    (FkStates { disk, horiz, vert }, energy)
}

/// Self-dual bond density of the q-state random-cluster model.
pub fn critical_density(q: f64) -> f64 {
    q.sqrt() / (1.0 + q.sqrt())
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Bond {
    i: i32,
    j: i32,
    horizontal: bool,
}

/// The other bond meeting `bond` at the given (face, endpoint) port, together
/// with the port's representation local to that bond. `face_up` means the
/// upper face for horizontal bonds and the right face for vertical ones;
/// `site_b` selects the east/north endpoint.
fn mate(bond: Bond, face_up: bool, site_b: bool) -> (Bond, bool, bool) {
    let Bond { i, j, horizontal } = bond;
    // The shared face sits on the !site_b side of the mate and the shared
    // site on its !face_up end; the relabeling is the same in both parities.
    let (bi, bj) = if horizontal {
        match (face_up, site_b) {
            (true, false) => (i, j),
            (true, true) => (i + 1, j),
            (false, false) => (i, j - 1),
            (false, true) => (i + 1, j - 1),
        }
    } else {
        match (face_up, site_b) {
            (true, false) => (i, j),
            (true, true) => (i, j + 1),
            (false, false) => (i - 1, j),
            (false, true) => (i - 1, j + 1),
        }
    };
    (Bond { i: bi, j: bj, horizontal: !horizontal }, !site_b, !face_up)
}

/// Corner vertex of the arc at `bond` on the given side: for closed bonds the
/// side is an endpoint, for open bonds a face.
fn arc_corner(bond: Bond, open: bool, side_b: bool) -> [i32; 2] {
    let Bond { i, j, horizontal } = bond;
    match (horizontal, open, side_b) {
        (true, false, false) => [4 * i + 1, 4 * j],
        (true, false, true) => [4 * i + 3, 4 * j],
        (true, true, false) => [4 * i + 2, 4 * j - 1],
        (true, true, true) => [4 * i + 2, 4 * j + 1],
        (false, false, false) => [4 * i, 4 * j + 1],
        (false, false, true) => [4 * i, 4 * j + 3],
        (false, true, false) => [4 * i - 1, 4 * j + 2],
        (false, true, true) => [4 * i + 1, 4 * j + 2],
    }
}

/// Result of tracing an FK configuration: loops that touch the disk, the
/// number of discarded exterior micro-loops, and the total arc count.
pub struct FkTrace {
    pub loops: Vec<Loop>,
    pub dropped: u64,
    pub arcs: u64,
}

/// Trace all medial loops reachable from bonds with an endpoint in the disk.
/// Loops whose every arc hugs an out-of-disk site are dual micro-diamonds in
/// the closed exterior; they are dropped and only counted.
pub fn trace_fk_interfaces(states: &FkStates) -> FkTrace {
    let pad = FkDisk::new(states.disk.radius + 2);
    // Four arc-visited bits per pad site: (horizontal, side_b).
    let mut visited = vec![false; pad.n_sites() * 4];
    let arc_bit = |pad: &FkDisk, b: Bond, side_b: bool| -> usize {
        let s = pad.index(b.i, b.j).expect("traced bonds stay inside pad");
        s * 4 + usize::from(b.horizontal) * 2 + usize::from(side_b)
    };

    let mut loops = Vec::new();
    let (mut dropped, mut arcs) = (0u64, 0u64);

    let mut seeds: Vec<(Bond, bool)> = Vec::new();
    for (i, j, _) in states.disk.iter_sites() {
        for horizontal in [true, false] {
            // Bonds owned by an in-disk site, plus the west/south bonds owned
            // by out-of-disk neighbors, cover all bonds with an in-disk
            // endpoint.
            let own = Bond { i, j, horizontal };
            seeds.push((own, false));
            seeds.push((own, true));
            let back = if horizontal {
                Bond { i: i - 1, j, horizontal }
            } else {
                Bond { i, j: j - 1, horizontal }
            };
            if states.disk.index(back.i, back.j).is_none() {
                seeds.push((back, false));
                seeds.push((back, true));
            }
        }
    }

    for &(seed_bond, seed_side) in &seeds {
        if visited[arc_bit(&pad, seed_bond, seed_side)] {
            continue;
        }
        let seed_open = states.bond_open(seed_bond.i, seed_bond.j, seed_bond.horizontal);
        // Start by entering the seed arc at one of its ports: for a closed
        // bond the arc hugs endpoint `seed_side`, reachable from either face;
        // for an open bond it hugs face `seed_side`.
        let (mut bond, mut open, mut port_face, mut port_site) = if seed_open {
            (seed_bond, true, seed_side, false)
        } else {
            (seed_bond, false, true, seed_side)
        };
        let start = (bond, port_face, port_site);
        let mut verts: Vec<[i32; 2]> = Vec::new();
        let mut keeps = false;
        loop {
            // The arc at `bond` entered through port (port_face, port_site).
            let side = if open { port_face } else { port_site };
            let bit = arc_bit(&pad, bond, side);
            debug_assert!(!visited[bit]);
            visited[bit] = true;
            arcs += 1;
            verts.push(arc_corner(bond, open, side));
            if open {
                keeps = true;
            } else {
                let (si, sj) = if side {
                    if bond.horizontal {
                        (bond.i + 1, bond.j)
                    } else {
                        (bond.i, bond.j + 1)
                    }
                } else {
                    (bond.i, bond.j)
                };
                if states.disk.contains(si, sj) {
                    keeps = true;
                }
            }
            // Leave through the arc's other port.
            let (exit_face, exit_site) = if open {
                (port_face, !port_site)
            } else {
                (!port_face, port_site)
            };
            let (next, nf, ns) = mate(bond, exit_face, exit_site);
            bond = next;
            open = states.bond_open(bond.i, bond.j, bond.horizontal);
            port_face = nf;
            port_site = ns;
            if (bond, port_face, port_site) == start {
                break;
            }
        }
        if keeps {
            loops.push(Loop { vertices: verts });
        } else {
            dropped += 1;
        }
    }
    FkTrace { loops, dropped, arcs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;

    fn empty_states(radius: u32) -> FkStates {
        let disk = FkDisk::new(radius);
        let n = disk.n_sites();
        FkStates {
            disk,
            horiz: vec![false; n],
            vert: vec![false; n],
        }
    }

    #[test]
    fn all_closed_gives_one_diamond_per_site() {
        let states = empty_states(4);
        let n = states.disk.n_sites();
        let trace = trace_fk_interfaces(&states);
        assert_eq!(trace.loops.len(), n);
        assert!(trace.loops.iter().all(|l| l.vertices.len() == 4));
    }

    #[test]
    fn single_open_bond_merges_two_diamonds() {
        let mut states = empty_states(4);
        let s = states.disk.index(0, 0).unwrap();
        states.horiz[s] = true;
        let n = states.disk.n_sites();
        let trace = trace_fk_interfaces(&states);
        // Two site diamonds fuse into one 8-arc loop around the pair.
        assert_eq!(trace.loops.len(), n - 1);
        let mut lens: Vec<usize> = trace.loops.iter().map(|l| l.vertices.len()).collect();
        lens.sort_unstable();
        assert_eq!(lens[lens.len() - 1], 8);
        assert!(lens[..lens.len() - 1].iter().all(|&l| l == 4));
    }

    #[test]
    fn fully_open_disk_yields_face_loops_plus_boundary() {
        let disk = FkDisk::new(3);
        let n = disk.n_sites();
        let mut states = FkStates {
            disk,
            horiz: vec![false; n],
            vert: vec![false; n],
        };
        let mut faces = 0;
        for (i, j, s) in states.disk.iter_sites() {
            if states.disk.contains(i + 1, j) {
                states.horiz[s] = true;
            }
            if states.disk.contains(i, j + 1) {
                states.vert[s] = true;
            }
            // A unit face is internal when all four of its corners are sites.
            if states.disk.contains(i + 1, j)
                && states.disk.contains(i, j + 1)
                && states.disk.contains(i + 1, j + 1)
            {
                faces += 1;
            }
        }
        let trace = trace_fk_interfaces(&states);
        assert_eq!(trace.loops.len(), faces + 1);
    }

    #[test]
    fn arc_count_balances_bond_count() {
        let mut rng = rng_from_seed(5);
        let (states, _) = swendsen_wang(6, 2, critical_density(2.0), 16, &mut rng);
        let trace = trace_fk_interfaces(&states);
        let total: u64 = trace.loops.iter().map(|l| l.vertices.len() as u64).sum();
        // Every arc of every traced bond shows up in exactly one loop and the
        // kept/dropped split preserves the total.
        assert_eq!(trace.arcs, total + 4 * trace.dropped);
        // Bonds with an in-disk endpoint each contribute exactly two arcs,
        // and traced halo diamonds only add more.
        let mut in_disk_bonds = 0u64;
        let pad = FkDisk::new(states.disk.radius + 2);
        for (i, j, _) in pad.iter_sites() {
            for horizontal in [true, false] {
                let (oi, oj) = if horizontal { (i + 1, j) } else { (i, j + 1) };
                if states.disk.contains(i, j) || states.disk.contains(oi, oj) {
                    in_disk_bonds += 1;
                }
            }
        }
        assert!(trace.arcs >= 2 * in_disk_bonds);
    }

    #[test]
    fn sweep_series_is_deterministic() {
        let mut a = rng_from_seed(9);
        let mut b = rng_from_seed(9);
        let (sa, ea) = swendsen_wang(5, 2, critical_density(2.0), 8, &mut a);
        let (sb, eb) = swendsen_wang(5, 2, critical_density(2.0), 8, &mut b);
        assert_eq!(ea, eb);
        assert_eq!(sa.horiz, sb.horiz);
        assert_eq!(sa.vert, sb.vert);
    }

    #[test]
    fn percolation_limit_has_independent_bonds() {
        // q = 1: after one sweep every eligible bond is open independently
        // with probability p.
        let mut rng = rng_from_seed(3);
        let (states, _) = swendsen_wang(24, 1, 0.37, 1, &mut rng);
        let mut eligible = 0u64;
        for (i, j, _) in states.disk.iter_sites() {
            eligible += u64::from(states.disk.contains(i + 1, j));
            eligible += u64::from(states.disk.contains(i, j + 1));
        }
        let open = states.open_bond_count();
        let frac = open as f64 / eligible as f64;
        assert!((frac - 0.37).abs() < 0.02, "open fraction {frac}");
    }
}
