//! Tables of γ(M), their audit, and the on-disk cache.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{eval_f, gamma, gamma0_direct, gamma_from_f};
use crate::error::{Error, Result};
use crate::precision::{PrecCtx, Real};

/// First line of a cache file.
pub const CACHE_VERSION: &str = "# xi-jensen gamma table v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// From the F-integral formula.
    Integral,
    /// From ζ(1/2) and Γ(1/4) (index 0 only), or inserted by hand.
    Direct,
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub value: Real,
    pub bits_used: u32,
    pub provenance: Provenance,
}

/// Map `M -> γ(M)` with the precision each value was computed at.
#[derive(Clone, Debug, Default)]
pub struct GammaTable {
    entries: BTreeMap<u64, Entry>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    #[serde(rename = "M")]
    m: u64,
    midpoint: String,
    radius: String,
    bits_used: u32,
    provenance: Provenance,
}

/// Outcome of the positivity, log-concavity and decay checks.
#[derive(Clone, Debug, Default, Serialize)]
pub struct AuditReport {
    pub entries: usize,
    pub max_index: Option<u64>,
    pub not_positive: Vec<u64>,
    /// `M` where `γ(M−1)² − γ(M−2)γ(M) ≥ 0` could not be certified.
    pub not_log_concave: Vec<u64>,
    /// `M ≥ 1` where `γ(M+1) < γ(M)` could not be certified.
    pub not_decreasing: Vec<u64>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.not_positive.is_empty() && self.not_log_concave.is_empty() && self.not_decreasing.is_empty()
    }
}

impl GammaTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `γ(m)`; the value must certify positive.
    pub fn insert(&mut self, m: u64, value: Real, bits_used: u32, provenance: Provenance) -> Result<()> {
        if !value.is_positive() {
            return Err(Error::SignUncertified { m, bits: bits_used });
        }
        self.entries.insert(
            m,
            Entry {
                value,
                bits_used,
                provenance,
            },
        );
        Ok(())
    }

    pub fn get(&self, m: u64) -> Option<&Entry> {
        self.entries.get(&m)
    }

    pub fn value(&self, m: u64) -> Result<&Real> {
        self.entries
            .get(&m)
            .map(|e| &e.value)
            .ok_or(Error::MissingCoefficient(m))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<u64> {
        self.entries.keys().next_back().copied()
    }

    pub fn indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &Entry)> {
        self.entries.iter().map(|(&m, e)| (m, e))
    }

    /// True if every index in `lo..=hi` is present.
    pub fn covers(&self, lo: u64, hi: u64) -> bool {
        (lo..=hi).all(|m| self.entries.contains_key(&m))
    }

    /// Smallest working precision among the stored entries in `lo..=hi`.
    pub fn min_bits(&self, lo: u64, hi: u64) -> Option<u32> {
        self.entries.range(lo..=hi).map(|(_, e)| e.bits_used).min()
    }

    /// Computes every missing index in `indices` at `ctx`, in parallel.
    /// Index 0 uses [`gamma0_direct`]; all others the integral formula, with
    /// each F value shared between neighbouring indices.
    pub fn fill<I: IntoIterator<Item = u64>>(&mut self, indices: I, ctx: &PrecCtx) -> Result<usize> {
        let todo: BTreeSet<u64> = indices
            .into_iter()
            .filter(|m| !self.entries.contains_key(m))
            .collect();
        let zs: BTreeSet<u64> = todo
            .iter()
            .filter(|&&m| m > 0)
            .flat_map(|&m| [2 * m - 2, 2 * m])
            .collect();
        let fs: HashMap<u64, Real> = zs
            .into_par_iter()
            .map(|z| eval_f(z as f64, ctx).map(|v| (z, v)))
            .collect::<Result<_>>()?;
        let computed: Vec<(u64, Real, Provenance)> = todo
            .par_iter()
            .map(|&m| {
                if m == 0 {
                    return Ok((m, gamma0_direct(ctx)?, Provenance::Direct));
                }
                let v = gamma_from_f(m, &fs[&(2 * m - 2)], &fs[&(2 * m)], ctx.bits());
                let v = if v.is_positive() { v } else { gamma(m, ctx)? };
                Ok((m, v, Provenance::Integral))
            })
            .collect::<Result<_>>()?;
        let n = computed.len();
        for (m, v, p) in computed {
            self.insert(m, v, ctx.bits(), p)?;
        }
        Ok(n)
    }

    pub fn audit(&self) -> AuditReport {
        let mut r = AuditReport {
            entries: self.len(),
            max_index: self.max_index(),
            ..Default::default()
        };
        for (&m, e) in &self.entries {
            if !e.value.is_positive() {
                r.not_positive.push(m);
            }
            if m >= 2 {
                if let (Some(a), Some(b)) = (self.get(m - 2), self.get(m - 1)) {
                    let gap = &b.value.sqr() - &(&a.value * &e.value);
                    if !gap.is_nonnegative() {
                        r.not_log_concave.push(m);
                    }
                }
            }
            if m >= 1 {
                if let Some(next) = self.get(m + 1) {
                    if !(&e.value - &next.value).is_positive() {
                        r.not_decreasing.push(m);
                    }
                }
            }
        }
        r
    }

    /// Writes the cache file: a version line, then one CSV record per index.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{CACHE_VERSION}")?;
        let mut w = csv::Writer::from_writer(out);
        for (&m, e) in &self.entries {
            let (midpoint, radius) = e.value.to_decimal_strings();
            w.serialize(Record {
                m,
                midpoint,
                radius,
                bits_used: e.bits_used,
                provenance: e.provenance,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let mut input = BufReader::new(input);
        let mut first = String::new();
        std::io::BufRead::read_line(&mut input, &mut first)?;
        if first.trim_end() != CACHE_VERSION {
            return Err(Error::Cache(format!(
                "unsupported header {:?}, expected {CACHE_VERSION:?}",
                first.trim_end()
            )));
        }
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let mut table = GammaTable::new();
        for rec in rdr.deserialize() {
            let rec: Record = rec?;
            let value = Real::from_decimal_strs(&rec.midpoint, &rec.radius, rec.bits_used.max(64))
                .ok_or_else(|| Error::Cache(format!("bad number in record for M = {}", rec.m)))?;
            table
                .insert(rec.m, value, rec.bits_used, rec.provenance)
                .map_err(|_| Error::Cache(format!("entry M = {} is not positive", rec.m)))?;
        }
        Ok(table)
    }
}

fn compute_entry(m: u64, ctx: &PrecCtx) -> Result<(Real, Provenance)> {
    if m == 0 {
        Ok((gamma0_direct(ctx)?, Provenance::Direct))
    } else {
        Ok((gamma(m, ctx)?, Provenance::Integral))
    }
}

/// A source of γ(M) enclosures at a requested working precision.
pub trait CoefficientSource: Sync {
    /// γ(m), ideally accurate to about `bits` bits. Sources that cannot
    /// refine return what they have.
    fn coefficient(&self, m: u64, bits: u32) -> Result<Real>;
}

impl CoefficientSource for GammaTable {
    fn coefficient(&self, m: u64, _bits: u32) -> Result<Real> {
        self.value(m).cloned()
    }
}

/// Computes γ(M) on demand, keeping results in a shared table.
#[derive(Debug)]
pub struct XiCoefficients {
    table: RwLock<GammaTable>,
    ctx: PrecCtx,
}

impl XiCoefficients {
    /// `ctx` sets the precision of fresh entries when callers ask for less,
    /// and the ceiling for what they may ask.
    pub fn new(ctx: PrecCtx) -> Self {
        Self::with_table(GammaTable::new(), ctx)
    }

    pub fn with_table(table: GammaTable, ctx: PrecCtx) -> Self {
        XiCoefficients {
            table: RwLock::new(table),
            ctx,
        }
    }

    pub fn ctx(&self) -> &PrecCtx {
        &self.ctx
    }

    /// Fills `indices` at the default precision.
    pub fn prefetch<I: IntoIterator<Item = u64>>(&self, indices: I) -> Result<usize> {
        let todo: Vec<u64> = {
            let t = self.table.read().unwrap();
            indices.into_iter().filter(|&m| t.get(m).is_none()).collect()
        };
        let mut fresh = GammaTable::new();
        let n = fresh.fill(todo, &self.ctx)?;
        let mut t = self.table.write().unwrap();
        for (m, e) in fresh.entries {
            t.entries.entry(m).or_insert(e);
        }
        Ok(n)
    }

    pub fn snapshot(&self) -> GammaTable {
        self.table.read().unwrap().clone()
    }

    pub fn into_table(self) -> GammaTable {
        self.table.into_inner().unwrap()
    }
}

impl CoefficientSource for XiCoefficients {
    fn coefficient(&self, m: u64, bits: u32) -> Result<Real> {
        if let Some(e) = self.table.read().unwrap().get(m) {
            if e.bits_used >= bits {
                return Ok(e.value.clone());
            }
        }
        if bits > self.ctx.max_bits() {
            return Err(Error::exhausted(self.ctx.max_bits(), format!("gamma({m})")));
        }
        let ctx = self.ctx.at_bits(bits.max(self.ctx.bits()));
        let (value, prov) = compute_entry(m, &ctx)?;
        let mut t = self.table.write().unwrap();
        let better = t.get(m).map_or(true, |e| e.bits_used < ctx.bits());
        if better {
            t.insert(m, value.clone(), ctx.bits(), prov)?;
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Float;

    fn synthetic(vals: &[f64]) -> GammaTable {
        let mut t = GammaTable::new();
        for (m, &v) in vals.iter().enumerate() {
            t.insert(m as u64, Real::from_f64(v, 128), 128, Provenance::Direct).unwrap();
        }
        t
    }

    #[test]
    fn rejects_nonpositive_entries() {
        let mut t = GammaTable::new();
        assert!(t.insert(3, Real::from_i64(-1, 64), 64, Provenance::Direct).is_err());
        let straddle = Real::with_radius(Float::with_val(64, 1e-3), &Float::with_val(64, 1.0));
        assert!(t.insert(3, straddle, 64, Provenance::Direct).is_err());
    }

    #[test]
    fn audit_flags_convexity_and_growth() {
        let good = synthetic(&[1.0, 0.5, 0.2, 0.05]);
        assert!(good.audit().passed());
        let bad = synthetic(&[1.0, 0.1, 0.5]);
        let a = bad.audit();
        assert_eq!(a.not_log_concave, vec![2]);
        assert_eq!(a.not_decreasing, vec![1]);
    }

    #[test]
    fn cache_round_trip_is_exact() {
        let mut t = GammaTable::new();
        let x = Real::pi(200).div_i64(3);
        t.insert(7, x.clone(), 200, Provenance::Integral).unwrap();
        t.insert(0, Real::one(200).div_i64(7), 200, Provenance::Direct).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let back = GammaTable::read_from(&buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        let e = back.get(7).unwrap();
        assert_eq!(e.value.mid(), x.mid());
        assert!(e.value.contains(&x));
        assert_eq!(e.provenance, Provenance::Integral);
        assert_eq!(back.get(0).unwrap().bits_used, 200);
    }

    #[test]
    fn cache_rejects_unknown_version() {
        let data = b"# something else\nM,midpoint,radius,bits_used,provenance\n";
        assert!(matches!(GammaTable::read_from(&data[..]), Err(Error::Cache(_))));
    }

    #[test]
    fn fixed_table_reports_missing_index() {
        let t = synthetic(&[1.0, 0.5]);
        assert!(matches!(t.coefficient(5, 64), Err(Error::MissingCoefficient(5))));
    }
}
