//! Integer wave vectors, the truncated ball lattice `|k| <= N` and the
//! half-space bookkeeping used to store real fields.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice wave vector `(kx, ky, kz)` in units of the fundamental wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveVector {
    pub kx: i32,
    pub ky: i32,
    pub kz: i32,
}

impl WaveVector {
    pub const ZERO: WaveVector = WaveVector { kx: 0, ky: 0, kz: 0 };

    pub const fn new(kx: i32, ky: i32, kz: i32) -> Self {
        WaveVector { kx, ky, kz }
    }

    /// Checked constructor rejecting the mean mode.
    pub fn nonzero(kx: i32, ky: i32, kz: i32) -> Result<Self> {
        let k = WaveVector::new(kx, ky, kz);
        if k.is_zero() {
            return Err(Error::Domain("the mean mode k = 0 is excluded".into()));
        }
        Ok(k)
    }

    pub fn is_zero(self) -> bool {
        self.kx == 0 && self.ky == 0 && self.kz == 0
    }

    pub fn norm_sq(self) -> i64 {
        let (x, y, z) = (self.kx as i64, self.ky as i64, self.kz as i64);
        x * x + y * y + z * z
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// Squared norm of the horizontal part `(kx, ky, 0)`.
    pub fn horizontal_norm_sq(self) -> i64 {
        let (x, y) = (self.kx as i64, self.ky as i64);
        x * x + y * y
    }

    pub fn to_f64(self) -> [f64; 3] {
        [self.kx as f64, self.ky as f64, self.kz as f64]
    }

    pub fn dot(self, v: [f64; 3]) -> f64 {
        self.kx as f64 * v[0] + self.ky as f64 * v[1] + self.kz as f64 * v[2]
    }

    /// Membership in the half-space `{n>0} ∪ {n=0, m>0} ∪ {n=m=0, l>0}`
    /// with `k = (l, m, n)`.
    pub fn in_half_space(self) -> bool {
        self.kz > 0 || (self.kz == 0 && self.ky > 0) || (self.kz == 0 && self.ky == 0 && self.kx > 0)
    }
}

impl fmt::Display for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.kx, self.ky, self.kz)
    }
}

impl Add for WaveVector {
    type Output = WaveVector;
    fn add(self, o: WaveVector) -> WaveVector {
        WaveVector::new(self.kx + o.kx, self.ky + o.ky, self.kz + o.kz)
    }
}

impl Sub for WaveVector {
    type Output = WaveVector;
    fn sub(self, o: WaveVector) -> WaveVector {
        WaveVector::new(self.kx - o.kx, self.ky - o.ky, self.kz - o.kz)
    }
}

impl Neg for WaveVector {
    type Output = WaveVector;
    fn neg(self) -> WaveVector {
        WaveVector::new(-self.kx, -self.ky, -self.kz)
    }
}

/// The truncated lattice of nonzero modes with `|k| <= radius`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    radius: u32,
}

impl Lattice {
    pub fn new(radius: u32) -> Result<Self> {
        if radius == 0 {
            return Err(Error::InvalidParameter("lattice radius must be positive".into()));
        }
        Ok(Lattice { radius })
    }

    pub fn radius(self) -> u32 {
        self.radius
    }

    pub fn radius_sq(self) -> i64 {
        (self.radius as i64).pow(2)
    }

    pub fn contains(self, k: WaveVector) -> bool {
        !k.is_zero() && k.norm_sq() <= self.radius_sq()
    }

    /// Half-space modes in the canonical order: `kz` outermost, then `ky`, then `kx`.
    pub fn half_space_modes(self) -> impl Iterator<Item = WaveVector> {
        self.half_space_modes_in(1, self.radius_sq())
    }

    /// Half-space modes with `lo_sq <= |k|^2 <= hi_sq`, in canonical order.
    pub fn half_space_modes_in(self, lo_sq: i64, hi_sq: i64) -> impl Iterator<Item = WaveVector> {
        let r = self.radius as i32;
        let hi_sq = hi_sq.min(self.radius_sq());
        let lo_sq = lo_sq.max(1);
        (0..=r).flat_map(move |kz| {
            (-r..=r).flat_map(move |ky| {
                (-r..=r).filter_map(move |kx| {
                    let k = WaveVector::new(kx, ky, kz);
                    let n2 = k.norm_sq();
                    (k.in_half_space() && n2 >= lo_sq && n2 <= hi_sq).then_some(k)
                })
            })
        })
    }

    /// Half-space modes of the shell `lo <= |k| < hi` (a `hi` of infinity is allowed).
    pub fn shell_half_modes(self, lo: f64, hi: f64) -> impl Iterator<Item = WaveVector> {
        let bounds = ShellBounds::new(lo, hi);
        let (lo_sq, hi_sq) = bounds.integer_range(self.radius_sq());
        self.half_space_modes_in(lo_sq, hi_sq)
            .filter(move |k| bounds.contains_norm_sq(k.norm_sq()))
    }

    /// Number of modes in the full (both half-spaces) lattice.
    pub fn full_mode_count(self) -> usize {
        2 * self.half_space_modes().count()
    }

    /// Dyad lower edges `kappa = 1, 2, 4, ...` with `2 kappa <= radius`.
    pub fn dyads(self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut kappa = 1u32;
        while 2 * kappa <= self.radius {
            out.push(kappa as f64);
            kappa *= 2;
        }
        out
    }
}

/// A shell `lo <= |k| < hi` compared on squared norms.
///
/// Integer squared norms are exact in `f64`, and dyad edges are powers of two,
/// so the comparison is exact for every shell used by the dyadic machinery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellBounds {
    pub lo: f64,
    pub hi: f64,
}

impl ShellBounds {
    pub fn new(lo: f64, hi: f64) -> Self {
        ShellBounds { lo, hi }
    }

    pub fn dyad(kappa: f64) -> Self {
        ShellBounds { lo: kappa, hi: 2.0 * kappa }
    }

    pub fn contains_norm_sq(&self, n2: i64) -> bool {
        let n2 = n2 as f64;
        n2 >= self.lo * self.lo && (self.hi.is_infinite() || n2 < self.hi * self.hi)
    }

    pub fn contains(&self, k: WaveVector) -> bool {
        self.contains_norm_sq(k.norm_sq())
    }

    /// Conservative integer range of squared norms, clipped to `max_sq`.
    fn integer_range(&self, max_sq: i64) -> (i64, i64) {
        let lo = if self.lo <= 0.0 { 1 } else { (self.lo * self.lo).floor() as i64 };
        let hi = if self.hi.is_infinite() || self.hi * self.hi >= max_sq as f64 {
            max_sq
        } else {
            (self.hi * self.hi).ceil() as i64
        };
        (lo.max(1), hi)
    }
}

/// Where a full-lattice mode is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Stored directly at this half-space index.
    Direct(usize),
    /// The conjugate of the coefficient stored at this half-space index.
    Conjugate(usize),
}

/// Dense index over the half-space modes of a lattice, shared by every field on it.
#[derive(Debug)]
pub struct ModeTable {
    lattice: Lattice,
    modes: Vec<WaveVector>,
    // (2N+1)^3 cube; +i+1 for direct slot i, -(i+1) for conjugate slot, 0 outside
    lookup: Vec<i32>,
}

impl ModeTable {
    pub fn new(lattice: Lattice) -> Arc<Self> {
        let modes: Vec<WaveVector> = lattice.half_space_modes().collect();
        let side = 2 * lattice.radius() as usize + 1;
        let mut lookup = vec![0i32; side * side * side];
        let r = lattice.radius() as i32;
        let cube = |k: WaveVector| -> usize {
            (((k.kz + r) as usize * side) + (k.ky + r) as usize) * side + (k.kx + r) as usize
        };
        for (i, &k) in modes.iter().enumerate() {
            lookup[cube(k)] = i as i32 + 1;
            lookup[cube(-k)] = -(i as i32 + 1);
        }
        Arc::new(ModeTable { lattice, modes, lookup })
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn radius(&self) -> u32 {
        self.lattice.radius()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[WaveVector] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> WaveVector {
        self.modes[i]
    }

    pub fn slot(&self, k: WaveVector) -> Option<Slot> {
        let r = self.lattice.radius() as i32;
        if k.kx.abs() > r || k.ky.abs() > r || k.kz.abs() > r {
            return None;
        }
        let side = 2 * r as usize + 1;
        let idx = (((k.kz + r) as usize * side) + (k.ky + r) as usize) * side + (k.kx + r) as usize;
        match self.lookup[idx] {
            0 => None,
            v if v > 0 => Some(Slot::Direct(v as usize - 1)),
            v => Some(Slot::Conjugate((-v) as usize - 1)),
        }
    }

    /// Index of a half-space mode.
    pub fn index_of(&self, k: WaveVector) -> Option<usize> {
        match self.slot(k) {
            Some(Slot::Direct(i)) => Some(i),
            _ => None,
        }
    }

    pub fn same_lattice(&self, other: &ModeTable) -> bool {
        self.lattice == other.lattice
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_space_partitions_nonzero_modes() {
        let lat = Lattice::new(5).unwrap();
        let r = 5;
        for kz in -r..=r {
            for ky in -r..=r {
                for kx in -r..=r {
                    let k = WaveVector::new(kx, ky, kz);
                    if k.is_zero() {
                        assert!(!k.in_half_space() && !(-k).in_half_space());
                        continue;
                    }
                    assert!(k.in_half_space() ^ (-k).in_half_space(), "{k}");
                }
            }
        }
        let table = ModeTable::new(lat);
        assert_eq!(2 * table.len(), lat.full_mode_count());
    }

    #[test]
    fn small_ball_counts() {
        // |k|^2 in {1,2,3}: multiplicities 6, 12, 8
        let lat = Lattice::new(2).unwrap();
        let shell: Vec<_> = lat.shell_half_modes(1.0, 2.0).collect();
        assert_eq!(shell.len(), 13);
        assert!(shell.iter().all(|k| (1..=3).contains(&k.norm_sq())));
    }

    #[test]
    fn slots_resolve_conjugates() {
        let table = ModeTable::new(Lattice::new(3).unwrap());
        let k = WaveVector::new(1, -2, 1);
        let i = table.index_of(k).unwrap();
        assert_eq!(table.slot(-k), Some(Slot::Conjugate(i)));
        assert_eq!(table.slot(WaveVector::ZERO), None);
        assert_eq!(table.slot(WaveVector::new(3, 3, 0)), None);
    }

    #[test]
    fn dyads_fit_inside_radius() {
        assert_eq!(Lattice::new(16).unwrap().dyads(), vec![1.0, 2.0, 4.0, 8.0]);
        assert!(Lattice::new(1).unwrap().dyads().is_empty());
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(WaveVector::nonzero(0, 0, 0).is_err());
        assert!(Lattice::new(0).is_err());
    }
}
