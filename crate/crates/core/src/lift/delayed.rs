use std::collections::BTreeMap;

use super::linear::RoughLift3;
use crate::error::{Error, Result};
use crate::increments::{Grid, Path1};
use crate::tensor::{add_matrix_vector, add_outer, add_vector_matrix, cell_area, cell_volume};

/// Checks that a shifted point index lies on the grid.
fn point(grid: &Grid, p: i64) -> Result<usize> {
    if p < 0 || p > grid.n() as i64 {
        return Err(Error::OutOfRange {
            index: p,
            lo: 0,
            hi: grid.n() as i64,
        });
    }
    Ok(p as usize)
}

fn shifted_dx(x: &Path1, shift: i64, s: i64, t: i64, out: &mut [f64]) -> Result<()> {
    let (a, b) = (point(x.grid(), s - shift)?, point(x.grid(), t - shift)?);
    x.increment_into(a, b, out);
    Ok(())
}

/// Cells `c` for which every listed shift `c - k` is still a cell of the grid.
fn valid_cells(n: usize, shifts: &[i64]) -> (i64, i64) {
    let lo = shifts.iter().fold(0_i64, |m, &k| m.max(k));
    let hi = shifts.iter().fold(n as i64, |m, &k| m.min(n as i64 + k));
    (lo, hi)
}

/// Per-cell values of `𝐱²(v, 0)` for one delay `v = k h`:
/// `cell(c) = ½ δx_{cell c-k} ⊗ δx_{cell c}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaFamily {
    shift: i64,
    dim: usize,
    lo: i64,
    cells: Vec<f64>,
}

impl AreaFamily {
    pub fn shift(&self) -> i64 {
        self.shift
    }

    /// Cells `lo..hi` for which the family is defined.
    pub fn range(&self) -> (i64, i64) {
        (self.lo, self.lo + (self.cells.len() / (self.dim * self.dim)) as i64)
    }

    pub fn cell(&self, c: i64) -> Result<&[f64]> {
        let (lo, hi) = self.range();
        if c < lo || c >= hi {
            return Err(Error::OutOfRange { index: c, lo, hi: hi - 1 });
        }
        let w = self.dim * self.dim;
        let at = (c - lo) as usize * w;
        Ok(&self.cells[at..at + w])
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }
}

/// Per-cell values of `𝐱³(v1, v2)` for `v1 = k1 h`, `v2 = k2 h`:
/// `cell(c) = (1/6) δx_{cell c-k1-k2} ⊗ δx_{cell c-k2} ⊗ δx_{cell c}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeFamily {
    shifts: (i64, i64),
    dim: usize,
    lo: i64,
    cells: Vec<f64>,
}

impl VolumeFamily {
    pub fn shifts(&self) -> (i64, i64) {
        self.shifts
    }

    pub fn range(&self) -> (i64, i64) {
        (self.lo, self.lo + (self.cells.len() / self.dim.pow(3)) as i64)
    }

    pub fn cell(&self, c: i64) -> Result<&[f64]> {
        let (lo, hi) = self.range();
        if c < lo || c >= hi {
            return Err(Error::OutOfRange { index: c, lo, hi: hi - 1 });
        }
        let w = self.dim.pow(3);
        let at = (c - lo) as usize * w;
        Ok(&self.cells[at..at + w])
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }
}

fn area_family_cells(x: &Path1, k: i64) -> Result<AreaFamily> {
    let (n, d) = (x.grid().n(), x.dim());
    let (lo, hi) = valid_cells(n, &[0, k]);
    if lo >= hi {
        return Err(Error::OutOfRange { index: k, lo: -(n as i64) + 1, hi: n as i64 - 1 });
    }
    let mut cells = vec![0.0; (hi - lo) as usize * d * d];
    let (mut a, mut b) = (vec![0.0; d], vec![0.0; d]);
    for (slot, c) in (lo..hi).enumerate() {
        shifted_dx(x, k, c, c + 1, &mut a)?;
        shifted_dx(x, 0, c, c + 1, &mut b)?;
        cell_area(&a, &b, &mut cells[slot * d * d..(slot + 1) * d * d]);
    }
    Ok(AreaFamily { shift: k, dim: d, lo, cells })
}

fn volume_family_cells(x: &Path1, k1: i64, k2: i64) -> Result<VolumeFamily> {
    if k1 + k2 < 0 {
        return Err(Error::InadmissiblePair { v1: k1, v2: k2 });
    }
    let (n, d) = (x.grid().n(), x.dim());
    let (lo, hi) = valid_cells(n, &[0, k2, k1 + k2]);
    if lo >= hi {
        return Err(Error::OutOfRange { index: k1 + k2, lo: 0, hi: n as i64 - 1 });
    }
    let w = d * d * d;
    let mut cells = vec![0.0; (hi - lo) as usize * w];
    let (mut a, mut b, mut e) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for (slot, c) in (lo..hi).enumerate() {
        shifted_dx(x, k1 + k2, c, c + 1, &mut a)?;
        shifted_dx(x, k2, c, c + 1, &mut b)?;
        shifted_dx(x, 0, c, c + 1, &mut e)?;
        cell_volume(&a, &b, &e, &mut cells[slot * w..(slot + 1) * w]);
    }
    Ok(VolumeFamily { shifts: (k1, k2), dim: d, lo, cells })
}

/// Delayed area family `A(v)` of the linear interpolant of `x`; `v` may be negative.
pub fn delayed_area(x: &Path1, v: f64) -> Result<AreaFamily> {
    area_family_cells(x, x.grid().cells_in(v)?)
}

/// Doubly delayed volume family `V(v1, v2)` of the linear interpolant of `x`; requires `v1 + v2 ≥ 0`.
pub fn delayed_volume(x: &Path1, v1: f64, v2: f64) -> Result<VolumeFamily> {
    let g = x.grid();
    volume_family_cells(x, g.cells_in(v1)?, g.cells_in(v2)?)
}

/// All delayed areas and volumes needed by the delay solver, for delays
/// `0 = r_0 < r_1 < … < r_q` on a grid that contains the time origin.
///
/// Areas are kept for every difference `r_j - r_i` (with `v2 = 0`; other `v2` are
/// reached by shifting). Volumes are kept for the pairs `(r_j, r_i)`, `1 ≤ i, j ≤ q`,
/// and `(r_j - r_i, r_i)`, `0 ≤ i, j ≤ q`: `2q² + 2q + 1` families in total.
#[derive(Debug, Clone)]
pub struct DelayedLift {
    x: Path1,
    origin: usize,
    delays: Vec<i64>,
    areas: BTreeMap<i64, AreaFamily>,
    volumes: BTreeMap<(i64, i64), VolumeFamily>,
}

impl DelayedLift {
    /// `delays` are in time units; `0` is added if absent. The grid must contain
    /// `t = 0` and reach back at least to `-r_q`.
    pub fn new(x: Path1, delays: &[f64]) -> Result<Self> {
        let grid = *x.grid();
        let origin = grid
            .index_of(0.0)
            .ok_or_else(|| Error::InvalidGrid("the time origin is not a grid point".into()))?;
        let mut cells = vec![0_i64];
        for &r in delays {
            let k = grid.cells_in(r)?;
            if k < 0 {
                return Err(Error::InvalidArgument(format!("negative delay {r}")));
            }
            if k > 0 {
                cells.push(k);
            }
        }
        if cells.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("delays must be strictly increasing".into()));
        }
        let rq = *cells.last().expect("contains zero");
        if (origin as i64) < rq {
            return Err(Error::OutOfRange {
                index: -rq,
                lo: -(origin as i64),
                hi: (grid.n() - origin) as i64,
            });
        }
        if origin >= grid.n() {
            return Err(Error::InvalidGrid("no cells after the time origin".into()));
        }

        let mut area_keys = Vec::new();
        for &a in &cells {
            for &b in &cells {
                area_keys.push(a - b);
            }
        }
        let mut volume_keys = Vec::new();
        for &k1 in &cells[1..] {
            for &k2 in &cells[1..] {
                volume_keys.push((k1, k2));
            }
        }
        for &ri in &cells {
            for &rj in &cells {
                volume_keys.push((rj - ri, ri));
            }
        }
        Self::assemble(x, origin, cells, &area_keys, &volume_keys)
    }

    /// A lift holding exactly the requested families (in cells), plus the area
    /// families that the volume spans consume. The delay set is `{0}`.
    pub fn with_families(x: Path1, area_shifts: &[i64], volume_pairs: &[(i64, i64)]) -> Result<Self> {
        let origin = x
            .grid()
            .index_of(0.0)
            .ok_or_else(|| Error::InvalidGrid("the time origin is not a grid point".into()))?;
        let mut area_keys = area_shifts.to_vec();
        for &(k1, k2) in volume_pairs {
            area_keys.extend([k1, k2]);
        }
        Self::assemble(x, origin, vec![0], &area_keys, volume_pairs)
    }

    fn assemble(
        x: Path1,
        origin: usize,
        delays: Vec<i64>,
        area_keys: &[i64],
        volume_keys: &[(i64, i64)],
    ) -> Result<Self> {
        let mut areas = BTreeMap::new();
        for &k in area_keys {
            if let std::collections::btree_map::Entry::Vacant(e) = areas.entry(k) {
                e.insert(area_family_cells(&x, k)?);
            }
        }
        let mut volumes = BTreeMap::new();
        for &key in volume_keys {
            if let std::collections::btree_map::Entry::Vacant(e) = volumes.entry(key) {
                e.insert(volume_family_cells(&x, key.0, key.1)?);
            }
        }
        Ok(Self {
            x,
            origin,
            delays,
            areas,
            volumes,
        })
    }

    pub fn x(&self) -> &Path1 {
        &self.x
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// Index of the grid point `t = 0`.
    pub fn origin(&self) -> usize {
        self.origin
    }

    /// Delays in cells, `r_0 = 0` first.
    pub fn delays(&self) -> &[i64] {
        &self.delays
    }

    pub fn area_shifts(&self) -> impl Iterator<Item = i64> + '_ {
        self.areas.keys().copied()
    }

    pub fn volume_pairs(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.volumes.keys().copied()
    }

    pub fn area_family(&self, k: i64) -> Result<&AreaFamily> {
        self.areas
            .get(&k)
            .ok_or(Error::MissingLiftFamily { v1: k, v2: 0 })
    }

    pub fn volume_family(&self, k1: i64, k2: i64) -> Result<&VolumeFamily> {
        self.volumes
            .get(&(k1, k2))
            .ok_or(Error::MissingLiftFamily { v1: k1, v2: k2 })
    }

    /// `x_{t-k} - x_{s-k}` for global point indices `s`, `t`.
    pub fn shifted_increment(&self, k: i64, s: usize, t: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        shifted_dx(&self.x, k, s as i64, t as i64, &mut out)?;
        Ok(out)
    }

    /// `𝐱²_{st}(v1, v2)` with `v1 = k1 h`, `v2 = k2 h`, from the stored `A(v1)` shifted by `v2`.
    pub fn area_span(&self, k1: i64, k2: i64, s: usize, t: usize) -> Result<Vec<f64>> {
        let w = self.dim().pow(2);
        let (spans, err) = self.area_fold(k1, k2, s, t)?;
        match err {
            Some(e) => Err(e),
            None => Ok(spans[(t - s) * w..].to_vec()),
        }
    }

    /// `𝐱²_{st}(v1, v2)` for `t = s, s+1, …` as far as the families and the grid allow,
    /// flattened with stride `d²` (the first entry is the empty span).
    pub fn area_spans_from(&self, k1: i64, k2: i64, s: usize) -> Result<Vec<f64>> {
        Ok(self.area_fold(k1, k2, s, self.grid().n())?.0)
    }

    fn area_fold(&self, k1: i64, k2: i64, s: usize, t: usize) -> Result<(Vec<f64>, Option<Error>)> {
        let fam = self.area_family(k1)?;
        let d = self.dim();
        let mut acc = vec![0.0; d * d];
        let mut out = acc.clone();
        let mut left = vec![0.0; d];
        let mut cell_dx = vec![0.0; d];
        for c in s as i64..t as i64 {
            let step = (|| -> Result<()> {
                // left = (δx(v1 + v2))_{s, c}
                shifted_dx(&self.x, k1 + k2, s as i64, c, &mut left)?;
                shifted_dx(&self.x, k2, c, c + 1, &mut cell_dx)?;
                for (a, v) in acc.iter_mut().zip(fam.cell(c - k2)?) {
                    *a += v;
                }
                add_outer(&mut acc, &left, &cell_dx);
                Ok(())
            })();
            if let Err(e) = step {
                return Ok((out, Some(e)));
            }
            out.extend_from_slice(&acc);
        }
        Ok((out, None))
    }

    /// `𝐱³_{st}(v1, v2)` from the stored volume cells, `A(v1)` spans and `A(v2)` cells.
    pub fn volume_span(&self, k1: i64, k2: i64, s: usize, t: usize) -> Result<Vec<f64>> {
        let w = self.dim().pow(3);
        let (spans, err) = self.volume_fold(k1, k2, s, t)?;
        match err {
            Some(e) => Err(e),
            None => Ok(spans[(t - s) * w..].to_vec()),
        }
    }

    /// Volume analogue of [`DelayedLift::area_spans_from`] (stride `d³`).
    pub fn volume_spans_from(&self, k1: i64, k2: i64, s: usize) -> Result<Vec<f64>> {
        Ok(self.volume_fold(k1, k2, s, self.grid().n())?.0)
    }

    fn volume_fold(&self, k1: i64, k2: i64, s: usize, t: usize) -> Result<(Vec<f64>, Option<Error>)> {
        let fam = self.volume_family(k1, k2)?;
        let outer = self.area_family(k1)?;
        let inner = self.area_family(k2)?;
        let d = self.dim();
        let mut acc = vec![0.0; d * d * d];
        let mut out = acc.clone();
        let mut area = vec![0.0; d * d];
        let mut left = vec![0.0; d];
        let mut cell_dx = vec![0.0; d];
        let mut shifted = vec![0.0; d];
        for c in s as i64..t as i64 {
            let step = (|| -> Result<()> {
                shifted_dx(&self.x, k1 + k2, s as i64, c, &mut left)?;
                shifted_dx(&self.x, 0, c, c + 1, &mut cell_dx)?;
                shifted_dx(&self.x, k2, c, c + 1, &mut shifted)?;
                let (vc, ac, ic) = (fam.cell(c)?, outer.cell(c - k2)?, inner.cell(c)?);
                for (a, v) in acc.iter_mut().zip(vc) {
                    *a += v;
                }
                // 𝐱²_{s,c}(v1, v2) ⊗ δx_{c,c+1} + δx(v1+v2)_{s,c} ⊗ 𝐱²_{c,c+1}(v2, 0)
                add_matrix_vector(&mut acc, &area, &cell_dx);
                add_vector_matrix(&mut acc, &left, ic);
                // advance the area span to c + 1
                for (a, v) in area.iter_mut().zip(ac) {
                    *a += v;
                }
                add_outer(&mut area, &left, &shifted);
                Ok(())
            })();
            if let Err(e) = step {
                return Ok((out, Some(e)));
            }
            out.extend_from_slice(&acc);
        }
        Ok((out, None))
    }

    /// The same families on the grid coarsened by `factor`: each coarse cell holds the
    /// fine span it covers. The origin and every stored shift must be multiples of `factor`.
    pub fn coarsen(&self, factor: usize) -> Result<DelayedLift> {
        let f = factor as i64;
        let divisible = |k: i64| k % f == 0;
        if factor == 0
            || !self.origin.is_multiple_of(factor)
            || !self.areas.keys().all(|&k| divisible(k))
            || !self.volumes.keys().all(|&(a, b)| divisible(a) && divisible(b))
        {
            return Err(Error::InvalidArgument(format!(
                "origin and delays are not multiples of {factor} cells"
            )));
        }
        let x = self.x.coarsen(factor)?;
        let (n, d) = (x.grid().n(), x.dim());
        let mut areas = BTreeMap::new();
        for &k in self.areas.keys() {
            let (lo, hi) = valid_cells(n, &[0, k / f]);
            let mut cells = Vec::with_capacity((hi - lo).max(0) as usize * d * d);
            for c in lo..hi {
                let s = (c * f) as usize;
                cells.extend(self.area_span(k, 0, s, s + factor)?);
            }
            areas.insert(k / f, AreaFamily { shift: k / f, dim: d, lo, cells });
        }
        let mut volumes = BTreeMap::new();
        for &(k1, k2) in self.volumes.keys() {
            let (lo, hi) = valid_cells(n, &[0, k2 / f, (k1 + k2) / f]);
            let mut cells = Vec::with_capacity((hi - lo).max(0) as usize * d * d * d);
            for c in lo..hi {
                let s = (c * f) as usize;
                cells.extend(self.volume_span(k1, k2, s, s + factor)?);
            }
            volumes.insert((k1 / f, k2 / f), VolumeFamily { shifts: (k1 / f, k2 / f), dim: d, lo, cells });
        }
        Ok(DelayedLift {
            x,
            origin: self.origin / factor,
            delays: self.delays.iter().map(|k| k / f).collect(),
            areas,
            volumes,
        })
    }

    /// The undelayed lift on `[0, T]`, built from the stored `A(0)` and `V(0, 0)` cells.
    pub fn base_lift(&self) -> Result<RoughLift3> {
        let o = self.origin;
        let cells = self.grid().n() - o;
        let x = self.x.restrict(o, cells)?;
        let d = self.dim();
        let a = self.area_family(0)?;
        let v = self.volume_family(0, 0)?;
        let area = a.cells()[o * d * d..].to_vec();
        let volume = v.cells()[o * d * d * d..].to_vec();
        RoughLift3::from_cells(x, area, volume)
    }
}
