//! Residual audit of the algebraic relations satisfied by a lift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::delayed::DelayedLift;
use super::linear::RoughLift3;
use crate::tensor::{add_matrix_vector, add_outer, add_vector_matrix};

/// Above this many checks per identity the audit switches to random sampling.
pub const EXHAUSTIVE_LIMIT: usize = 1_000_000;
/// Number of sampled checks per identity when enumeration is too expensive.
pub const SAMPLE_SIZE: usize = 10_000;
/// Number of distinct span starts used in sampled mode.
const SAMPLED_STARTS: usize = 64;
const AUDIT_SEED: u64 = 0x5eed_a0d1;

/// One audited identity on one family.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub identity: String,
    pub family: String,
    /// Largest absolute entrywise residual.
    pub residual: f64,
    /// Largest absolute entry among the terms of the identity.
    pub scale: f64,
    pub checks: usize,
    pub exhaustive: bool,
}

impl AuditRow {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
}

impl AuditReport {
    pub fn max_relative(&self) -> f64 {
        self.rows.iter().fold(0.0_f64, |m, r| m.max(r.relative()))
    }

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().fold(0.0_f64, |m, r| m.max(r.residual))
    }

    pub fn row(&self, identity: &str, family: &str) -> Option<&AuditRow> {
        self.rows
            .iter()
            .find(|r| r.identity == identity && r.family == family)
    }
}

struct Acc {
    residual: f64,
    scale: f64,
    checks: usize,
}

impl Acc {
    fn new() -> Self {
        Self {
            residual: 0.0,
            scale: 0.0,
            checks: 0,
        }
    }

    /// Records `lhs - rhs` entrywise.
    fn record(&mut self, lhs: &[f64], rhs: &[f64]) {
        for (a, b) in lhs.iter().zip(rhs) {
            self.residual = self.residual.max((a - b).abs());
            self.scale = self.scale.max(a.abs()).max(b.abs());
        }
        self.checks += 1;
    }

    fn row(self, identity: &str, family: String, exhaustive: bool) -> AuditRow {
        AuditRow {
            identity: identity.into(),
            family,
            residual: self.residual,
            scale: self.scale,
            checks: self.checks,
            exhaustive,
        }
    }
}

/// Spans `(s, t)` for every `t ≥ s` and every `s` in a set of starts.
struct SpanTable {
    width: usize,
    rows: Vec<Option<Vec<f64>>>,
}

impl SpanTable {
    fn build(points: usize, starts: &[usize], width: usize, mut f: impl FnMut(usize) -> Vec<f64>) -> Self {
        let mut rows = vec![None; points];
        for &s in starts {
            rows[s] = Some(f(s));
        }
        Self { width, rows }
    }

    fn get(&self, s: usize, t: usize) -> Option<&[f64]> {
        let row = self.rows.get(s)?.as_ref()?;
        let at = (t - s) * self.width;
        row.get(at..at + self.width)
    }
}

/// Which spans to check: all of them, or a seeded random sample.
struct Plan {
    lo: usize,
    hi: usize,
    starts: Vec<usize>,
    exhaustive: bool,
}

impl Plan {
    fn new(lo: usize, hi: usize, rng: &mut ChaCha8Rng) -> Self {
        let len = hi - lo + 1;
        let triples = len * (len - 1) * len.saturating_sub(2) / 6;
        if triples <= EXHAUSTIVE_LIMIT {
            return Self {
                lo,
                hi,
                starts: (lo..=hi).collect(),
                exhaustive: true,
            };
        }
        let mut starts: Vec<usize> = (0..SAMPLED_STARTS).map(|_| rng.random_range(lo..hi)).collect();
        starts.sort_unstable();
        starts.dedup();
        Self {
            lo,
            hi,
            starts,
            exhaustive: false,
        }
    }

    fn triples(&self, rng: &mut ChaCha8Rng, mut f: impl FnMut(usize, usize, usize)) {
        if self.exhaustive {
            for s in self.lo..=self.hi {
                for u in s + 1..=self.hi {
                    for t in u + 1..=self.hi {
                        f(s, u, t);
                    }
                }
            }
            return;
        }
        let m = self.starts.len();
        for _ in 0..SAMPLE_SIZE {
            let a = rng.random_range(0..m);
            let b = rng.random_range(0..m);
            let (s, u) = (self.starts[a.min(b)], self.starts[a.max(b)]);
            if s == u || u >= self.hi {
                continue;
            }
            let t = rng.random_range(u + 1..=self.hi);
            f(s, u, t);
        }
    }

    fn pairs(&self, rng: &mut ChaCha8Rng, mut f: impl FnMut(usize, usize)) {
        if self.exhaustive {
            for s in self.lo..=self.hi {
                for t in s + 1..=self.hi {
                    f(s, t);
                }
            }
            return;
        }
        for _ in 0..SAMPLE_SIZE {
            let s = self.starts[rng.random_range(0..self.starts.len())];
            let t = rng.random_range(s + 1..=self.hi);
            f(s, t);
        }
    }
}

/// Audits the Chen relations at levels 2 and 3 and the geometric symmetry of a lift.
///
/// Spans are obtained from the block tree, so an inconsistent cell shows up as a
/// Chen residual.
pub fn verify_lift(lift: &RoughLift3) -> AuditReport {
    let (n, d) = (lift.n(), lift.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(AUDIT_SEED);
    let plan = Plan::new(0, n, &mut rng);
    let (w1, w2, w3) = (d, d * d, d * d * d);
    let mut dx = SpanTable { width: w1, rows: vec![None; n + 1] };
    let mut area = SpanTable { width: w2, rows: vec![None; n + 1] };
    let mut volume = SpanTable { width: w3, rows: vec![None; n + 1] };
    for &s in &plan.starts {
        let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
        for t in s..=n {
            let span = lift.span(s, t);
            a.extend_from_slice(&span.dx);
            b.extend_from_slice(&span.area);
            c.extend_from_slice(&span.volume);
        }
        dx.rows[s] = Some(a);
        area.rows[s] = Some(b);
        volume.rows[s] = Some(c);
    }
    let point_dx = |s: usize, t: usize| lift.x().increment(s, t);

    let mut chen2 = Acc::new();
    let mut chen3 = Acc::new();
    let mut lhs2 = vec![0.0; w2];
    let mut rhs2 = vec![0.0; w2];
    let mut lhs3 = vec![0.0; w3];
    let mut rhs3 = vec![0.0; w3];
    plan.triples(&mut rng, |s, u, t| {
        let (Some(a_st), Some(a_su), Some(a_ut)) = (area.get(s, t), area.get(s, u), area.get(u, t)) else {
            return;
        };
        let (dx_su, dx_ut) = (point_dx(s, u), point_dx(u, t));
        for k in 0..w2 {
            lhs2[k] = a_st[k] - a_su[k] - a_ut[k];
        }
        rhs2.iter_mut().for_each(|v| *v = 0.0);
        add_outer(&mut rhs2, &dx_su, &dx_ut);
        chen2.record(&lhs2, &rhs2);

        let (v_st, v_su, v_ut) = (
            volume.get(s, t).expect("same starts"),
            volume.get(s, u).expect("same starts"),
            volume.get(u, t).expect("same starts"),
        );
        for k in 0..w3 {
            lhs3[k] = v_st[k] - v_su[k] - v_ut[k];
        }
        rhs3.iter_mut().for_each(|v| *v = 0.0);
        add_matrix_vector(&mut rhs3, a_su, &dx_ut);
        add_vector_matrix(&mut rhs3, &dx_su, a_ut);
        chen3.record(&lhs3, &rhs3);
    });

    let mut geometric = Acc::new();
    plan.pairs(&mut rng, |s, t| {
        let (Some(a), Some(x)) = (area.get(s, t), dx.get(s, t)) else {
            return;
        };
        geometric.record(&symmetric_part(a, d), &half_square(x));
    });

    let ex = plan.exhaustive;
    AuditReport {
        rows: vec![
            chen2.row("chen-area", "base".into(), ex),
            chen3.row("chen-volume", "base".into(), ex),
            geometric.row("geometric", "base".into(), ex),
        ],
    }
}

fn symmetric_part(a: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = 0.5 * (a[i * d + j] + a[j * d + i]);
        }
    }
    out
}

fn half_square(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = 0.5 * x[i] * x[j];
        }
    }
    out
}

fn family_name(k1: i64, k2: i64) -> String {
    format!("v1={k1}h v2={k2}h")
}

/// Audits the delayed relations of a [`DelayedLift`] over `[0, T]`:
///
/// * delayed Chen for `𝐱²(v1, v2)`, `v1` in the difference set, `v2` a delay;
/// * delayed Chen for every stored volume family;
/// * the shift identity `𝐱²_{st}(v', v) = 𝐱²_{s-v,t-v}(v', 0)`, both sides compared
///   against a direct double sum over the interpolant;
/// * the product identity `δx(v) ⊗ δx(v') = 𝐱²(v - v', v') + (𝐱²(v' - v, v))*`
///   for all pairs in the difference set whose differences are stored;
/// * geometric symmetry of the undelayed area.
pub fn verify_delayed(lift: &DelayedLift) -> AuditReport {
    let (n, d) = (lift.grid().n(), lift.dim());
    let (w2, w3) = (d * d, d * d * d);
    let o = lift.origin();
    let mut rng = ChaCha8Rng::seed_from_u64(AUDIT_SEED);
    let plan = Plan::new(o, n, &mut rng);
    let x = lift.x();
    let sdx = |k: i64, s: usize, t: usize| lift.shifted_increment(k, s, t).ok();
    let area_table = |k1: i64, k2: i64| {
        SpanTable::build(n + 1, &plan.starts, w2, |s| {
            lift.area_spans_from(k1, k2, s).unwrap_or_default()
        })
    };
    let shifts: Vec<i64> = lift.area_shifts().collect();
    let delays = lift.delays().to_vec();
    let mut rows = Vec::new();

    for &k1 in &shifts {
        for &k2 in &delays {
            let table = area_table(k1, k2);
            let mut acc = Acc::new();
            let mut rhs = vec![0.0; w2];
            let mut lhs = vec![0.0; w2];
            plan.triples(&mut rng, |s, u, t| {
                let (Some(st), Some(su), Some(ut)) = (table.get(s, t), table.get(s, u), table.get(u, t)) else {
                    return;
                };
                let (Some(a), Some(b)) = (sdx(k1 + k2, s, u), sdx(k2, u, t)) else {
                    return;
                };
                for k in 0..w2 {
                    lhs[k] = st[k] - su[k] - ut[k];
                }
                rhs.iter_mut().for_each(|v| *v = 0.0);
                add_outer(&mut rhs, &a, &b);
                acc.record(&lhs, &rhs);
            });
            rows.push(acc.row("delayed-chen-area", family_name(k1, k2), plan.exhaustive));
        }
    }

    for (k1, k2) in lift.volume_pairs().collect::<Vec<_>>() {
        let areas = area_table(k1, k2);
        let inner = area_table(k2, 0);
        let volumes = SpanTable::build(n + 1, &plan.starts, w3, |s| {
            lift.volume_spans_from(k1, k2, s).unwrap_or_default()
        });
        let mut acc = Acc::new();
        let mut lhs = vec![0.0; w3];
        let mut rhs = vec![0.0; w3];
        plan.triples(&mut rng, |s, u, t| {
            let (Some(st), Some(su), Some(ut)) = (volumes.get(s, t), volumes.get(s, u), volumes.get(u, t)) else {
                return;
            };
            let (Some(a_su), Some(i_ut)) = (areas.get(s, u), inner.get(u, t)) else {
                return;
            };
            let (Some(dx_ut), Some(dxs_su)) = (sdx(0, u, t), sdx(k1 + k2, s, u)) else {
                return;
            };
            for k in 0..w3 {
                lhs[k] = st[k] - su[k] - ut[k];
            }
            rhs.iter_mut().for_each(|v| *v = 0.0);
            add_matrix_vector(&mut rhs, a_su, &dx_ut);
            add_vector_matrix(&mut rhs, &dxs_su, i_ut);
            acc.record(&lhs, &rhs);
        });
        rows.push(acc.row("delayed-chen-volume", family_name(k1, k2), plan.exhaustive));
    }

    // shift identity against a direct double sum over cells
    for &k1 in &shifts {
        for &k2 in &delays[1..] {
            let shifted = area_table(k1, k2);
            let mut acc = Acc::new();
            plan.pairs(&mut rng, |s, t| {
                let Some(lhs) = shifted.get(s, t) else {
                    return;
                };
                let (Some(s0), Some(t0)) = (s.checked_sub(k2 as usize), t.checked_sub(k2 as usize)) else {
                    return;
                };
                let Ok(unshifted) = lift.area_span(k1, 0, s0, t0) else {
                    return;
                };
                let Some(direct) = direct_area(x, k1 + k2, k2, s, t) else {
                    return;
                };
                acc.record(lhs, &direct);
                acc.record(&unshifted, &direct);
            });
            rows.push(acc.row("shift", family_name(k1, k2), plan.exhaustive));
        }
    }

    for &v in &shifts {
        for &vp in &shifts {
            if lift.area_family(v - vp).is_err() || lift.area_family(vp - v).is_err() {
                continue;
            }
            let left = area_table(v - vp, vp);
            let right = area_table(vp - v, v);
            let mut acc = Acc::new();
            let mut lhs = vec![0.0; w2];
            plan.pairs(&mut rng, |s, t| {
                let (Some(a), Some(b)) = (sdx(v, s, t), sdx(vp, s, t)) else {
                    return;
                };
                let (Some(l), Some(r)) = (left.get(s, t), right.get(s, t)) else {
                    return;
                };
                lhs.iter_mut().for_each(|e| *e = 0.0);
                add_outer(&mut lhs, &a, &b);
                let mut rhs = l.to_vec();
                for i in 0..d {
                    for j in 0..d {
                        rhs[i * d + j] += r[j * d + i];
                    }
                }
                acc.record(&lhs, &rhs);
            });
            rows.push(acc.row("product", format!("v={v}h v'={vp}h"), plan.exhaustive));
        }
    }

    let base = area_table(0, 0);
    let mut geometric = Acc::new();
    plan.pairs(&mut rng, |s, t| {
        let (Some(a), Some(x)) = (base.get(s, t), sdx(0, s, t)) else {
            return;
        };
        geometric.record(&symmetric_part(a, d), &half_square(&x));
    });
    rows.push(geometric.row("geometric", family_name(0, 0), plan.exhaustive));

    AuditReport { rows }
}

/// `∫_s^t (x_{w-a} - x_{s-a}) ⊗ d x_{w-b}` for the linear interpolant, summed cell by cell
/// directly from the point values.
fn direct_area(x: &crate::increments::Path1, a: i64, b: i64, s: usize, t: usize) -> Option<Vec<f64>> {
    let d = x.dim();
    let last = x.grid().n() as i64;
    let at = |p: i64| (0..=last).contains(&p).then(|| x.at(p as usize));
    let base = at(s as i64 - a)?;
    let mut out = vec![0.0; d * d];
    for c in s as i64..t as i64 {
        let (p0, p1) = (at(c - a)?, at(c + 1 - a)?);
        let (q0, q1) = (at(c - b)?, at(c + 1 - b)?);
        for i in 0..d {
            // average of the shifted driver over the cell, relative to its start value
            let mid = 0.5 * (p0[i] + p1[i]) - base[i];
            for j in 0..d {
                out[i * d + j] += mid * (q1[j] - q0[j]);
            }
        }
    }
    Some(out)
}
