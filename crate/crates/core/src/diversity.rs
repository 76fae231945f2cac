//! Entropy diversity (Theil, related and unrelated variety) and the Hoover
//! specialisation index over regional employment.
//!
//! All logarithms are natural. Zero shares contribute nothing (p ln p -> 0).

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SHARE_TOL: f64 = 1e-9;

/// Employment shares of one region-year, keyed by two-digit industry, with the
/// one-digit parent of every industry.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareVector {
    shares: BTreeMap<String, f64>,
    parents: BTreeMap<String, String>,
}

impl ShareVector {
    /// Validates explicit shares: non-negative, summing to one. Zero shares
    /// are dropped.
    pub fn new(shares: BTreeMap<String, f64>, parents: BTreeMap<String, String>) -> Result<Self> {
        if let Some((code, p)) = shares.iter().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidShares(format!("share of `{code}` is {p}")));
        }
        let total: f64 = shares.values().sum();
        if !shares.is_empty() && (total - 1.0).abs() > SHARE_TOL {
            return Err(Error::InvalidShares(format!("shares sum to {total}")));
        }
        let shares = shares.into_iter().filter(|(_, p)| *p > 0.0).collect();
        Ok(Self { shares, parents })
    }

    /// Normalises raw employment counts into shares.
    pub fn from_employment(
        employment: &BTreeMap<String, f64>,
        parents: BTreeMap<String, String>,
    ) -> Result<Self> {
        if let Some((code, e)) = employment
            .iter()
            .find(|(_, e)| !(e.is_finite() && **e >= 0.0))
        {
            return Err(Error::InvalidShares(format!(
                "employment of `{code}` is {e}"
            )));
        }
        let total: f64 = employment.values().sum();
        if employment.is_empty() {
            return Err(Error::EmptyShares);
        }
        if total <= 0.0 {
            return Err(Error::ZeroEmployment("regional"));
        }
        let shares = employment
            .iter()
            .filter(|(_, e)| **e > 0.0)
            .map(|(k, e)| (k.clone(), e / total))
            .collect();
        Ok(Self { shares, parents })
    }

    pub fn shares(&self) -> &BTreeMap<String, f64> {
        &self.shares
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    /// One-digit sector shares P_g.
    fn group_shares(&self) -> Result<BTreeMap<&str, Vec<f64>>> {
        let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (code, &p) in &self.shares {
            let parent = self
                .parents
                .get(code)
                .ok_or_else(|| Error::UnmappedIndustry(code.clone()))?;
            groups.entry(parent.as_str()).or_default().push(p);
        }
        Ok(groups)
    }
}

fn entropy<I: IntoIterator<Item = f64>>(probabilities: I) -> f64 {
    probabilities
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// Theil entropy of the industry shares, in [0, ln n].
pub fn theil_index(shares: &ShareVector) -> Result<f64> {
    if shares.is_empty() {
        return Err(Error::EmptyShares);
    }
    Ok(entropy(shares.shares.values().copied()))
}

/// Entropy of the one-digit sector shares.
pub fn unrelated_variety(shares: &ShareVector) -> Result<f64> {
    if shares.is_empty() {
        return Err(Error::EmptyShares);
    }
    let groups = shares.group_shares()?;
    Ok(entropy(groups.values().map(|g| g.iter().sum::<f64>())))
}

/// Share-weighted within-sector entropy.
pub fn related_variety(shares: &ShareVector) -> Result<f64> {
    if shares.is_empty() {
        return Err(Error::EmptyShares);
    }
    let groups = shares.group_shares()?;
    Ok(groups
        .values()
        .map(|members| {
            let total: f64 = members.iter().sum();
            if total > 0.0 {
                total * entropy(members.iter().map(|p| p / total))
            } else {
                0.0
            }
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarietyResult {
    pub theil: f64,
    pub related: f64,
    pub unrelated: f64,
}

pub fn variety(shares: &ShareVector) -> Result<VarietyResult> {
    Ok(VarietyResult {
        theil: theil_index(shares)?,
        related: related_variety(shares)?,
        unrelated: unrelated_variety(shares)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HooverResult {
    /// Half the L1 distance between the share vectors, in [0, 1].
    pub value: f64,
}

impl HooverResult {
    /// Percentage-point display form.
    pub fn display(&self) -> f64 {
        self.value * 100.0
    }
}

/// Hoover specialisation index. Industries absent on one side count as zero.
pub fn hoover_index(
    regional: &BTreeMap<String, f64>,
    national: &BTreeMap<String, f64>,
) -> Result<HooverResult> {
    let region_total: f64 = regional.values().sum();
    let nation_total: f64 = national.values().sum();
    if region_total.is_nan() || region_total <= 0.0 {
        return Err(Error::ZeroEmployment("regional"));
    }
    if nation_total.is_nan() || nation_total <= 0.0 {
        return Err(Error::ZeroEmployment("national"));
    }
    let codes: BTreeSet<&String> = regional.keys().chain(national.keys()).collect();
    let distance: f64 = codes
        .into_iter()
        .map(|code| {
            let r = regional.get(code).copied().unwrap_or(0.0) / region_total;
            let n = national.get(code).copied().unwrap_or(0.0) / nation_total;
            (r - n).abs()
        })
        .sum();
    Ok(HooverResult {
        value: (0.5 * distance).clamp(0.0, 1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmploymentRecord {
    pub region: String,
    pub year: i32,
    pub industry: String,
    pub parent: String,
    pub employment: f64,
}

/// Region x year x two-digit industry employment with the one-digit hierarchy.
#[derive(Debug, Clone, Default)]
pub struct EmploymentTable {
    records: Vec<EmploymentRecord>,
    parents: BTreeMap<String, String>,
}

impl EmploymentTable {
    pub fn new(records: Vec<EmploymentRecord>) -> Result<Self> {
        let mut parents: BTreeMap<String, String> = BTreeMap::new();
        for (i, rec) in records.iter().enumerate() {
            let line = i as u64 + 2;
            if !(rec.employment.is_finite() && rec.employment >= 0.0) {
                return Err(Error::Parse {
                    line,
                    message: format!("employment must be non-negative, got {}", rec.employment),
                });
            }
            match parents.get(&rec.industry) {
                Some(p) if p != &rec.parent => {
                    return Err(Error::Parse {
                        line,
                        message: format!(
                            "industry `{}` mapped to both `{p}` and `{}`",
                            rec.industry, rec.parent
                        ),
                    })
                }
                Some(_) => {}
                None => {
                    parents.insert(rec.industry.clone(), rec.parent.clone());
                }
            }
        }
        Ok(Self { records, parents })
    }

    /// Reads `region,year,industry,parent,employment`.
    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(source);
        let expected = ["region", "year", "industry", "parent", "employment"];
        let header = reader.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse {
                line: 1,
                message: format!("header must be `{}`", expected.join(",")),
            });
        }
        let mut records = Vec::new();
        for row in reader.deserialize::<EmploymentRecord>() {
            records.push(row.map_err(|e| Error::Parse {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?);
        }
        Self::new(records)
    }

    pub fn records(&self) -> &[EmploymentRecord] {
        &self.records
    }

    pub fn parents(&self) -> &BTreeMap<String, String> {
        &self.parents
    }
}

/// Which industries enter the Hoover comparison.
#[derive(Debug, Clone, Default)]
pub struct HooverFilter {
    /// Keep only industries under these one-digit parents (empty = all).
    pub parents: BTreeSet<String>,
}

impl HooverFilter {
    fn keeps(&self, parent: &str) -> bool {
        self.parents.is_empty() || self.parents.contains(parent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexRow {
    pub region: String,
    pub year: i32,
    pub theil: f64,
    pub related: f64,
    pub unrelated: f64,
    pub hoover: f64,
}

/// Per region-year Theil, related and unrelated variety over all industries
/// and Hoover (in [0, 1]) against the national total of the filtered industries.
pub fn compute_indices(table: &EmploymentTable, filter: &HooverFilter) -> Result<Vec<IndexRow>> {
    type Cell = BTreeMap<String, f64>;
    let mut cells: BTreeMap<(i32, String), Cell> = BTreeMap::new();
    let mut region_order: Vec<String> = Vec::new();
    for rec in table.records() {
        if !region_order.contains(&rec.region) {
            region_order.push(rec.region.clone());
        }
        *cells
            .entry((rec.year, rec.region.clone()))
            .or_default()
            .entry(rec.industry.clone())
            .or_default() += rec.employment;
    }

    let keep = |code: &String| filter.keeps(&table.parents()[code]);
    let mut national: BTreeMap<i32, Cell> = BTreeMap::new();
    for ((year, _), cell) in &cells {
        let nat = national.entry(*year).or_default();
        for (code, e) in cell.iter().filter(|(c, _)| keep(c)) {
            *nat.entry(code.clone()).or_default() += e;
        }
    }

    let mut rows = Vec::with_capacity(cells.len());
    for region in &region_order {
        for (year, nat) in &national {
            let Some(cell) = cells.get(&(*year, region.clone())) else {
                continue;
            };
            let shares = ShareVector::from_employment(cell, table.parents().clone())?;
            let v = variety(&shares)?;
            let filtered: Cell = cell
                .iter()
                .filter(|(c, _)| keep(c))
                .map(|(c, e)| (c.clone(), *e))
                .collect();
            let hoover = hoover_index(&filtered, nat)?;
            rows.push(IndexRow {
                region: region.clone(),
                year: *year,
                theil: v.theil,
                related: v.related,
                unrelated: v.unrelated,
                hoover: hoover.value,
            });
        }
    }
    Ok(rows)
}

/// Writes `region,year,theil,related,unrelated,hoover`, Hoover multiplied by
/// `hoover_scale`.
pub fn write_indices_csv<W: Write>(
    rows: &[IndexRow],
    sink: W,
    precision: usize,
    hoover_scale: f64,
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["region", "year", "theil", "related", "unrelated", "hoover"])?;
    for r in rows {
        writer.write_record([
            r.region.clone(),
            r.year.to_string(),
            format!("{:.*}", precision, r.theil),
            format!("{:.*}", precision, r.related),
            format!("{:.*}", precision, r.unrelated),
            format!("{:.*}", precision, r.hoover * hoover_scale),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(items: &[(&str, &str, f64)]) -> ShareVector {
        let shares = items.iter().map(|(c, _, p)| (c.to_string(), *p)).collect();
        let parents = items
            .iter()
            .map(|(c, g, _)| (c.to_string(), g.to_string()))
            .collect();
        ShareVector::new(shares, parents).unwrap()
    }

    fn map(items: &[(&str, f64)]) -> BTreeMap<String, f64> {
        items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    // brute-force oracle: sum of p * log2(1/p) rescaled to nats
    fn entropy_oracle(ps: &[f64]) -> f64 {
        let mut total = 0.0;
        for &p in ps {
            if p > 0.0 {
                total += p * (1.0 / p).log2();
            }
        }
        total * std::f64::consts::LN_2
    }

    #[test]
    fn theil_endpoints() {
        assert_eq!(theil_index(&sv(&[("10", "C", 1.0)])).unwrap(), 0.0);
        for n in 2..12 {
            let items: Vec<(String, f64)> = (0..n)
                .map(|i| (format!("{i:02}"), 1.0 / n as f64))
                .collect();
            let shares = items.iter().cloned().collect();
            let parents = items.iter().map(|(c, _)| (c.clone(), "C".into())).collect();
            let t = theil_index(&ShareVector::new(shares, parents).unwrap()).unwrap();
            assert!((t - (n as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn theil_toy_shares() {
        let t = theil_index(&sv(&[("a", "G", 0.5), ("b", "G", 0.25), ("c", "G", 0.25)])).unwrap();
        let hand = 0.5 * 2f64.ln() + 2.0 * 0.25 * 4f64.ln();
        assert!((t - hand).abs() < 1e-12);
        assert!((t - entropy_oracle(&[0.5, 0.25, 0.25])).abs() < 1e-12);
        assert!((t - 1.0397).abs() < 1e-4);
    }

    #[test]
    fn variety_toy_table() {
        let s = sv(&[
            ("11", "1", 0.4),
            ("12", "1", 0.1),
            ("21", "2", 0.3),
            ("22", "2", 0.2),
        ]);
        let uv = unrelated_variety(&s).unwrap();
        assert!((uv - 2f64.ln()).abs() < 1e-12);
        let h1 = entropy_oracle(&[0.8, 0.2]);
        let h2 = entropy_oracle(&[0.6, 0.4]);
        let rv = related_variety(&s).unwrap();
        assert!((rv - (0.5 * h1 + 0.5 * h2)).abs() < 1e-12);
        assert!((rv - 0.5866).abs() < 5e-4);
    }

    #[test]
    fn degenerate_groupings() {
        let single_parent = sv(&[("a", "G", 0.3), ("b", "G", 0.7)]);
        assert_eq!(unrelated_variety(&single_parent).unwrap(), 0.0);
        let singletons = sv(&[("a", "1", 0.3), ("b", "2", 0.7)]);
        assert_eq!(related_variety(&singletons).unwrap(), 0.0);
        let halves = sv(&[("a", "1", 0.5), ("b", "2", 0.5)]);
        assert!((unrelated_variety(&halves).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let empty = ShareVector::new(BTreeMap::new(), BTreeMap::new()).unwrap();
        assert!(matches!(theil_index(&empty), Err(Error::EmptyShares)));
        let unmapped = ShareVector::new(
            map(&[("a", 0.5), ("b", 0.5)]),
            BTreeMap::from([("a".into(), "1".into())]),
        )
        .unwrap();
        match unrelated_variety(&unmapped) {
            Err(Error::UnmappedIndustry(code)) => assert_eq!(code, "b"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(ShareVector::new(map(&[("a", 0.5)]), BTreeMap::new()).is_err());
        assert!(ShareVector::new(map(&[("a", 1.5), ("b", -0.5)]), BTreeMap::new()).is_err());
    }

    #[test]
    fn zero_share_industries_are_ignored() {
        let with_zero = sv(&[("a", "1", 0.6), ("b", "1", 0.0), ("c", "2", 0.4)]);
        let without = sv(&[("a", "1", 0.6), ("c", "2", 0.4)]);
        assert_eq!(variety(&with_zero).unwrap(), variety(&without).unwrap());
    }

    #[test]
    fn hoover_cases() {
        let same = hoover_index(
            &map(&[("a", 7.0), ("b", 3.0)]),
            &map(&[("a", 70.0), ("b", 30.0)]),
        )
        .unwrap();
        assert!(same.value.abs() < 1e-15);
        let opposite = hoover_index(&map(&[("A", 5.0)]), &map(&[("B", 9.0)])).unwrap();
        assert_eq!(opposite.value, 1.0);
        let toy = hoover_index(
            &map(&[("a", 0.7), ("b", 0.3)]),
            &map(&[("a", 0.5), ("b", 0.5)]),
        )
        .unwrap();
        assert!((toy.value - 0.2).abs() < 1e-12);
        assert!((toy.display() - 20.0).abs() < 1e-10);
        assert!(matches!(
            hoover_index(&map(&[("a", 0.0)]), &map(&[("a", 1.0)])),
            Err(Error::ZeroEmployment("regional"))
        ));
        assert!(matches!(
            hoover_index(&map(&[("a", 1.0)]), &BTreeMap::new()),
            Err(Error::ZeroEmployment("national"))
        ));
    }

    #[test]
    fn table_rejects_conflicting_parent() {
        let rec = |ind: &str, parent: &str| EmploymentRecord {
            region: "R".into(),
            year: 2002,
            industry: ind.into(),
            parent: parent.into(),
            employment: 1.0,
        };
        assert!(EmploymentTable::new(vec![rec("10", "C"), rec("10", "D")]).is_err());
        let neg = EmploymentRecord {
            employment: -1.0,
            ..rec("10", "C")
        };
        assert!(EmploymentTable::new(vec![neg]).is_err());
    }

    #[test]
    fn indices_over_toy_table() {
        let src = "region,year,industry,parent,employment
A,2002,10,C,10
A,2002,11,C,10
A,2002,45,F,20
A,2003,10,C,5
A,2003,11,C,5
A,2003,45,F,5
B,2002,10,C,40
B,2002,45,F,0
B,2003,10,C,30
B,2003,11,C,10
B,2003,45,F,0
";
        let table = EmploymentTable::read_csv(src.as_bytes()).unwrap();
        let rows = compute_indices(&table, &HooverFilter::default()).unwrap();
        assert_eq!(rows.len(), 4);
        // B in 2002 is a single-industry region
        let b02 = rows
            .iter()
            .find(|r| r.region == "B" && r.year == 2002)
            .unwrap();
        assert_eq!(b02.theil, 0.0);
        // 2002 national: 10 -> 50, 11 -> 10, 45 -> 20 (total 80)
        let a02 = rows
            .iter()
            .find(|r| r.region == "A" && r.year == 2002)
            .unwrap();
        let expect = 0.5
            * ((0.25f64 - 50.0 / 80.0).abs()
                + (0.25f64 - 10.0 / 80.0).abs()
                + (0.5f64 - 20.0 / 80.0).abs());
        assert!((a02.hoover - expect).abs() < 1e-12);
        for r in &rows {
            assert!((r.theil - r.related - r.unrelated).abs() < 1e-12);
        }

        let manufacturing = HooverFilter {
            parents: BTreeSet::from(["C".to_string()]),
        };
        let rows = compute_indices(&table, &manufacturing).unwrap();
        let a02 = rows
            .iter()
            .find(|r| r.region == "A" && r.year == 2002)
            .unwrap();
        let expect = 0.5 * ((0.5f64 - 50.0 / 60.0).abs() + (0.5f64 - 10.0 / 60.0).abs());
        assert!((a02.hoover - expect).abs() < 1e-12);
    }

    fn share_vector_strategy() -> impl Strategy<Value = ShareVector> {
        proptest::collection::vec((0.0f64..10.0, 0usize..4), 1..25).prop_filter_map(
            "positive mass",
            |raw| {
                let total: f64 = raw.iter().map(|(w, _)| w).sum();
                if total <= 0.0 {
                    return None;
                }
                let employment: BTreeMap<String, f64> = raw
                    .iter()
                    .enumerate()
                    .map(|(i, (w, _))| (format!("{i:02}"), *w))
                    .collect();
                let parents = raw
                    .iter()
                    .enumerate()
                    .map(|(i, (_, g))| (format!("{i:02}"), format!("G{g}")))
                    .collect();
                ShareVector::from_employment(&employment, parents).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn decomposition_identity(s in share_vector_strategy()) {
            let v = variety(&s).unwrap();
            prop_assert!((v.theil - v.related - v.unrelated).abs() <= 1e-9);
            prop_assert!(v.related >= -1e-15 && v.unrelated >= -1e-15);
            prop_assert!(v.theil <= (s.len() as f64).ln() + 1e-12);
        }

        #[test]
        fn hoover_bounds_and_invariances(
            raw in proptest::collection::vec((0.0f64..100.0, 0.01f64..100.0), 2..15),
            scale in 0.01f64..1000.0,
        ) {
            let regional: BTreeMap<String, f64> = raw.iter().enumerate().map(|(i, (r, _))| (format!("{i}"), *r)).collect();
            let national: BTreeMap<String, f64> = raw.iter().enumerate().map(|(i, (_, n))| (format!("{i}"), *n)).collect();
            prop_assume!(regional.values().sum::<f64>() > 0.0);
            let h = hoover_index(&regional, &national).unwrap().value;
            prop_assert!((0.0..=1.0).contains(&h));
            let scaled: BTreeMap<String, f64> = regional.iter().map(|(k, v)| (k.clone(), v * scale)).collect();
            prop_assert!((hoover_index(&scaled, &national).unwrap().value - h).abs() < 1e-12);
            let relabel = |m: &BTreeMap<String, f64>| m.iter().map(|(k, v)| (format!("x{k}"), *v)).collect::<BTreeMap<_, _>>();
            prop_assert!((hoover_index(&relabel(&regional), &relabel(&national)).unwrap().value - h).abs() < 1e-12);
        }
    }
}
