use std::collections::BTreeSet;
use std::path::Path;

use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;
use xi_jensen::asymptotics::{self, fit_gm, pi_value, predict_adk, ymk, AsymReport};
use xi_jensen::hyperbolicity::{certify_hyperbolic, turan_holds, turan_threshold, HyperbolicityStatus, TuranStatus};
use xi_jensen::jensen::a_coeffs;
use xi_jensen::xi_taylor::GammaTable;
use xi_jensen::{Error, PrecCtx, Real, Result};

use crate::output::Report;

const DIGITS: usize = 25;

fn s(x: &Real) -> String {
    x.to_sci_string(DIGITS)
}

fn rad(x: &Real) -> String {
    if x.is_finite() {
        x.rad().to_string_radix(10, Some(6))
    } else {
        "inf".into()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Lemma23,
    Lemma41,
    Thm21,
    Thm22,
    Turan,
    Hyperbolic,
}

/// Loads the cache (if present), computes any missing indices and writes it back.
pub fn prepare_table(path: &Path, needed: &BTreeSet<u64>, ctx: &PrecCtx) -> Result<GammaTable> {
    let mut table = if path.exists() { GammaTable::load(path)? } else { GammaTable::new() };
    let missing: Vec<u64> = needed.iter().copied().filter(|m| table.get(*m).is_none()).collect();
    if !missing.is_empty() {
        eprintln!("computing {} coefficient(s) at {} bits", missing.len(), ctx.bits());
        table.fill(missing, ctx)?;
        table.save(path)?;
    }
    Ok(table)
}

#[derive(Serialize)]
pub struct AuditRow {
    pub entries: usize,
    pub max_index: String,
    pub not_positive: String,
    pub not_log_concave: String,
    pub not_decreasing: String,
}

fn join(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
}

pub fn gamma_table(path: &Path, m_max: u64, ctx: &PrecCtx) -> Result<Report<AuditRow>> {
    let table = prepare_table(path, &(0..=m_max).collect(), ctx)?;
    let audit = table.audit();
    let mut rep = Report::new(format!("gamma-table --m-max {m_max}"));
    if !audit.passed() {
        rep.failures.push(format!(
            "audit: not positive [{}], not log-concave [{}]",
            join(&audit.not_positive),
            join(&audit.not_log_concave)
        ));
    }
    rep.records.push(AuditRow {
        entries: audit.entries,
        max_index: audit.max_index.map(|m| m.to_string()).unwrap_or_default(),
        not_positive: join(&audit.not_positive),
        not_log_concave: join(&audit.not_log_concave),
        not_decreasing: join(&audit.not_decreasing),
    });
    Ok(rep)
}

/// Parameters of `verify`.
pub struct VerifyParams {
    pub d: Vec<u64>,
    pub n: Vec<u64>,
    pub m_values: Vec<u64>,
    pub fit_order: usize,
}

#[derive(Serialize)]
pub struct Lemma23Row {
    pub d: u64,
    pub n: u64,
    pub a0: String,
    pub a1: String,
    pub a1_radius: String,
    pub a2_plus_d_d_minus_1: String,
    pub a2_radius: String,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct ExactRow {
    pub check: String,
    pub k: u32,
    pub i: u32,
    pub value: String,
    pub expected: String,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct AsymRow {
    pub quantity: String,
    #[serde(rename = "M")]
    pub m: Option<u64>,
    pub d: Option<usize>,
    pub k: Option<usize>,
    pub n: Option<u64>,
    pub observed: String,
    pub predicted: String,
    pub ratio: String,
    pub expected_error_power: u32,
    pub notes: String,
}

impl From<&AsymReport> for AsymRow {
    fn from(r: &AsymReport) -> Self {
        AsymRow {
            quantity: r.quantity.clone(),
            m: r.m,
            d: r.d,
            k: r.k,
            n: r.n,
            observed: s(&r.observed),
            predicted: s(&r.predicted),
            ratio: s(&r.ratio),
            expected_error_power: r.expected_error_power,
            notes: r.notes.join("; "),
        }
    }
}

#[derive(Serialize)]
pub struct CellRow {
    pub d: u64,
    pub n: u64,
    pub turan_lhs: String,
    pub turan: String,
    pub hyperbolicity: String,
    pub real_root_count: usize,
    pub bits_used: u32,
}

/// Output of a suite; every variant holds a report over its own record type.
pub enum SuiteReport {
    Lemma23(Report<Lemma23Row>),
    Exact(Report<ExactRow>),
    Asym(Report<AsymRow>),
    Cells(Report<CellRow>),
}

fn range_union(cells: impl Iterator<Item = (u64, u64)>) -> BTreeSet<u64> {
    cells.flat_map(|(lo, hi)| lo..=hi).collect()
}

fn grid(p: &VerifyParams) -> Vec<(u64, u64)> {
    p.d.iter().flat_map(|&d| p.n.iter().map(move |&n| (d, n))).collect()
}

pub fn verify(suite: Suite, p: &VerifyParams, cache: &Path, ctx: &PrecCtx) -> Result<SuiteReport> {
    let name = format!("verify {}", suite.to_possible_value().unwrap().get_name());
    match suite {
        Suite::Lemma41 => Ok(SuiteReport::Exact(lemma41(name))),
        Suite::Lemma23 => {
            if p.d.contains(&0) {
                return Err(Error::Domain("lemma23 needs d >= 1".into()));
            }
            let cells = grid(p);
            let table = prepare_table(cache, &range_union(cells.iter().map(|&(d, n)| (n, n + d))), ctx)?;
            Ok(SuiteReport::Lemma23(lemma23(name, &cells, &table, ctx)?))
        }
        Suite::Thm21 => {
            let fo = p.fit_order as u64;
            let table = prepare_table(cache, &range_union(p.m_values.iter().map(|&m| (m.saturating_sub(2 * fo), m))), ctx)?;
            Ok(SuiteReport::Asym(thm21(name, p, &table, ctx)?))
        }
        Suite::Thm22 => {
            let fo = p.fit_order as u64;
            let cells = grid(p);
            let needed = range_union(cells.iter().flat_map(|&(d, n)| [(n, n + d), ((n + d).saturating_sub(2 * fo), n + d)]));
            let table = prepare_table(cache, &needed, ctx)?;
            Ok(SuiteReport::Asym(thm22(name, p, &table, ctx)?))
        }
        Suite::Turan | Suite::Hyperbolic => {
            let cells = grid(p);
            if suite == Suite::Turan && p.d.iter().any(|&d| d < 3) {
                return Err(Error::Domain("the turan suite needs d >= 3".into()));
            }
            if p.d.contains(&0) {
                return Err(Error::Domain("hyperbolicity needs d >= 1".into()));
            }
            let table = prepare_table(cache, &range_union(cells.iter().map(|&(d, n)| (n, n + d))), ctx)?;
            Ok(SuiteReport::Cells(cell_scan(name, suite == Suite::Turan, &cells, &table, ctx)?))
        }
    }
}

fn lemma23(name: String, cells: &[(u64, u64)], table: &GammaTable, ctx: &PrecCtx) -> Result<Report<Lemma23Row>> {
    let tol = Real::from_f64(1e-20, 64);
    let rows: Vec<Lemma23Row> = cells
        .par_iter()
        .map(|&(d, n)| {
            let nc = a_coeffs(d as usize, n, table, ctx)?;
            let prec = nc.prec();
            let a2 = if d >= 2 {
                &nc.a[2] + &Real::from_u64(d * (d - 1), prec)
            } else {
                Real::zero(prec)
            };
            let small = |x: &Real| x.contains_zero() && x.rad() <= tol.mid();
            let pass = nc.a[0].is_exact() && nc.a[0].contains_f64(1.0) && small(&nc.a[1]) && small(&a2);
            Ok(Lemma23Row {
                d,
                n,
                a0: s(&nc.a[0]),
                a1: s(&nc.a[1]),
                a1_radius: rad(&nc.a[1]),
                a2_plus_d_d_minus_1: s(&a2),
                a2_radius: rad(&a2),
                pass,
            })
        })
        .collect::<Result<_>>()?;
    let mut rep = Report::new(name);
    for r in &rows {
        if !r.pass {
            rep.failures.push(format!("d={} n={}", r.d, r.n));
        }
    }
    rep.records = rows;
    Ok(rep)
}

/// Closed forms for `y_{k+i,k}`, `i = 0..=3`, as `k!·C(k+i, i+1)·P_i(k)`.
fn y_closed_form(i: u32, k: u32) -> xi_jensen::rug::Rational {
    use xi_jensen::rug::{Integer, Rational};
    let f = Integer::from(Integer::factorial(k));
    let b = |n: u32, r: u32| Integer::from(Integer::binomial_u(n, r));
    let kq = Rational::from(k);
    match i {
        0 => Rational::from(f),
        1 => Rational::from(f * b(k + 1, 2)),
        2 => Rational::from(f * b(k + 2, 3)) * (kq * 3u32 + 1u32) / 4u32,
        3 => Rational::from(f * b(k + 3, 4)) * (Rational::from(k * k + k)) / 2u32,
        _ => unreachable!(),
    }
}

fn lemma41(name: String) -> Report<ExactRow> {
    use xi_jensen::rug::{Integer, Rational};
    let mut rep = Report::new(name);
    for k in 1..=30u32 {
        for i in 0..=3u32 {
            let v = Rational::from(ymk(k + i, k));
            let e = y_closed_form(i, k);
            rep.records.push(ExactRow {
                check: "y_closed_form".into(),
                k,
                i,
                pass: v == e,
                value: v.to_string(),
                expected: e.to_string(),
            });
        }
        let v = ymk(k.saturating_sub(1), k);
        rep.records.push(ExactRow {
            check: "y_below_diagonal".into(),
            k,
            i: 0,
            pass: v == 0,
            value: v.to_string(),
            expected: "0".into(),
        });
    }
    for i in 1..=10u32 {
        for k in 1..=30u32 {
            let p = pi_value(i, k);
            let bound = Integer::from(Integer::u_pow_u(k, i - 1));
            let pass = if k == 1 { p == 1 } else { p <= bound };
            rep.records.push(ExactRow {
                check: if k == 1 { "P_i(1)=1".into() } else { "P_i(k)<=k^(i-1)".into() },
                k,
                i,
                pass,
                value: p.to_string(),
                expected: if k == 1 { "1".into() } else { format!("<= {bound}") },
            });
        }
    }
    for r in &rep.records {
        if !r.pass {
            rep.failures.push(format!("{} k={} i={}", r.check, r.k, r.i));
        }
    }
    rep
}

fn limit_g(m: usize) -> f64 {
    2f64.powi(m as i32 - 1) / (m * (m - 1)) as f64
}

fn thm21(name: String, p: &VerifyParams, table: &GammaTable, ctx: &PrecCtx) -> Result<Report<AsymRow>> {
    let mut rep = Report::new(name);
    let mut ms = p.m_values.clone();
    ms.sort_unstable();
    let ests = ms
        .par_iter()
        .map(|&m| fit_gm(m, p.fit_order, table, ctx))
        .collect::<Result<Vec<_>>>()?;
    let mut g2_ratios = Vec::new();
    for est in &ests {
        let m = est.m;
        let prec = est.delta.prec();
        let scaled = &est.delta * &Real::from_u64(2 * m, prec).sqrt();
        let mut r = AsymReport::new("Delta*sqrt(2M)", scaled, Real::one(prec), 2);
        r.m = Some(m);
        if m >= 1000 && (r.observed.to_f64() - 1.0).abs() > 0.05 {
            rep.failures.push(format!("Delta*sqrt(2M) at M={m}"));
        }
        rep.records.push(AsymRow::from(&r));
        for i in 2..=est.m_max.min(4) {
            let lim = limit_g(i);
            let mut r = AsymReport::new(&format!("G_{i}"), est.gm(i)?.clone(), Real::from_f64(lim, prec), 2);
            r.m = Some(m);
            let tol = match i {
                2 => Some(0.02),
                3 => Some(0.05),
                _ => None,
            };
            if let Some(tol) = tol {
                if m >= 2000 && r.deviation() > tol {
                    rep.failures.push(format!("G_{i} at M={m} deviates by {:.4}", r.deviation()));
                }
            }
            rep.records.push(AsymRow::from(&r));
        }
        if est.m_max >= 3 {
            let r = asymptotics::check_g2_relation(est)?;
            g2_ratios.push(r.ratio.to_f64());
            rep.records.push(AsymRow::from(&r));
        }
        rep.summary.push((format!("fit_residual_M{m}"), format!("{:e}", est.fit_residual.to_f64())));
    }
    if ests.len() >= 2 {
        for i in 2..=p.fit_order.min(4) {
            let dev = |e: &asymptotics::GmEstimate| (e.gm(i).unwrap().to_f64() - limit_g(i)).abs();
            let (first, last) = (ests.first().unwrap(), ests.last().unwrap());
            if dev(last) >= dev(first) {
                rep.failures.push(format!("G_{i} does not approach its limit between M={} and M={}", first.m, last.m));
            }
        }
    }
    if g2_ratios.len() >= 2 {
        let abs: Vec<f64> = g2_ratios.iter().map(|x| x.abs()).collect();
        let spread = abs.iter().cloned().fold(0.0, f64::max) / abs.iter().cloned().fold(f64::INFINITY, f64::min);
        let same_sign = g2_ratios.iter().all(|x| x.signum() == g2_ratios[0].signum());
        rep.summary.push(("G2_relation_spread".into(), format!("{spread:.4}")));
        if !same_sign || spread > 4.0 {
            rep.failures.push(format!("G2 relation scaled by Delta^4 varies by a factor {spread:.3}"));
        }
    }
    Ok(rep)
}

fn thm22(name: String, p: &VerifyParams, table: &GammaTable, ctx: &PrecCtx) -> Result<Report<AsymRow>> {
    let mut rep = Report::new(name);
    let mut ns = p.n.clone();
    ns.sort_unstable();
    for &d in &p.d {
        let d = d as usize;
        if d < 3 {
            return Err(Error::Domain("thm22 needs d >= 3".into()));
        }
        let reports = ns
            .par_iter()
            .map(|&n| {
                let est = fit_gm(n + d as u64, p.fit_order, table, ctx)?;
                (3..=d).map(|k| predict_adk(d, k, n, &est, table, ctx)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for k in 3..=d {
            let devs: Vec<f64> = reports.iter().map(|rs| rs[k - 3].deviation()).collect();
            if devs.windows(2).any(|w| w[1] >= w[0]) {
                rep.failures.push(format!("d={d} k={k}: |ratio-1| not decreasing in n"));
            }
            if devs.last().is_some_and(|&x| x > 0.1) {
                rep.failures.push(format!("d={d} k={k}: |ratio-1| = {:.4} at the largest n", devs.last().unwrap()));
            }
        }
        for rs in &reports {
            rep.records.extend(rs.iter().map(AsymRow::from));
        }
    }
    Ok(rep)
}

fn cell_scan(name: String, turan: bool, cells: &[(u64, u64)], table: &GammaTable, ctx: &PrecCtx) -> Result<Report<CellRow>> {
    let rows: Vec<CellRow> = cells
        .par_iter()
        .map(|&(d, n)| {
            let v = certify_hyperbolic(d as usize, n, table, ctx)?;
            let (lhs, status) = if turan {
                let t = turan_holds(d as usize, n, table, ctx)?;
                (s(&t.lhs), format!("{:?}", t.holds))
            } else {
                (String::new(), String::new())
            };
            Ok(CellRow {
                d,
                n,
                turan_lhs: lhs,
                turan: status,
                hyperbolicity: format!("{:?}", v.status),
                real_root_count: v.real_root_count,
                bits_used: v.bits_used,
            })
        })
        .collect::<Result<_>>()?;
    let mut rep = Report::new(name);
    for r in &rows {
        let hyp = r.hyperbolicity == format!("{:?}", HyperbolicityStatus::Hyperbolic);
        if turan {
            if r.turan == format!("{:?}", TuranStatus::Holds) && !hyp {
                rep.failures.push(format!("d={} n={}: criterion holds but not certified hyperbolic", r.d, r.n));
            }
        } else if !hyp {
            rep.failures.push(format!("d={} n={}: {}", r.d, r.n, r.hyperbolicity));
        }
    }
    if turan {
        let holds = rows.iter().filter(|r| r.turan == "Holds").count();
        rep.summary.push(("cells_where_criterion_holds".into(), holds.to_string()));
    }
    rep.records = rows;
    Ok(rep)
}

#[derive(Serialize)]
pub struct ThresholdRow {
    pub d: u64,
    pub threshold: String,
}

/// Least-squares slope of `log(N + 1)` against `d`; thresholds of 0 are common
/// at small `d`, hence the shift.
pub fn log_slope(points: &[(u64, u64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(d, n)| (d as f64, (n as f64 + 1.0).ln())).collect();
    if pts.len() < 4 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

pub fn threshold_scan(d: &[u64], n_max: u64, cache: &Path, ctx: &PrecCtx) -> Result<Report<ThresholdRow>> {
    if d.iter().any(|&x| x < 3) {
        return Err(Error::Domain("threshold scan needs d >= 3".into()));
    }
    let d_max = *d.iter().max().unwrap();
    let table = prepare_table(cache, &(0..=n_max + d_max).collect(), ctx)?;
    let found = d
        .par_iter()
        .map(|&dd| turan_threshold(dd as usize, n_max, &table, ctx).map(|t| (dd, t)))
        .collect::<Result<Vec<_>>>()?;
    let mut rep = Report::new(format!("threshold-scan --n-max {n_max}"));
    let mut pts = Vec::new();
    for (dd, t) in found {
        if let Some(n) = t {
            pts.push((dd, n));
        }
        rep.records.push(ThresholdRow {
            d: dd,
            threshold: t.map(|n| n.to_string()).unwrap_or_else(|| "absent".into()),
        });
    }
    if let Some(sl) = log_slope(&pts) {
        rep.summary.push(("slope_log_threshold_plus_1_vs_d".into(), format!("{sl:.6}")));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma41_passes() {
        let rep = lemma41("t".into());
        assert!(rep.passed(), "{:?}", rep.failures);
    }

    #[test]
    fn slope_of_exponential() {
        let pts: Vec<(u64, u64)> = (3..8).map(|d| (d, (1u64 << d) - 1)).collect();
        assert!((log_slope(&pts).unwrap() - 2f64.ln()).abs() < 1e-9);
        assert!(log_slope(&pts[..3]).is_none());
    }
}
