//! Finite probability tables keyed by integer outcomes.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::io::Write;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Outcome keys: a single count (degree) or a `(W, B)` pair.
pub trait OutcomeKey: Ord + Copy + Debug {
    fn render(&self) -> String;
    fn csv_header() -> &'static [&'static str];
    fn csv_fields(&self) -> Vec<String>;
}

impl OutcomeKey for u64 {
    fn render(&self) -> String {
        self.to_string()
    }
    fn csv_header() -> &'static [&'static str] {
        &["d"]
    }
    fn csv_fields(&self) -> Vec<String> {
        vec![self.to_string()]
    }
}

impl OutcomeKey for (u64, u64) {
    fn render(&self) -> String {
        format!("{},{}", self.0, self.1)
    }
    fn csv_header() -> &'static [&'static str] {
        &["w", "b"]
    }
    fn csv_fields(&self) -> Vec<String> {
        vec![self.0.to_string(), self.1.to_string()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistTable<K, T> {
    entries: BTreeMap<K, T>,
}

/// Joint law of `(W, B)`.
pub type PairTable<T> = DistTable<(u64, u64), T>;
/// Law of a single count, e.g. a node degree.
pub type CountTable<T> = DistTable<u64, T>;

impl<K: OutcomeKey, T: Scalar> Default for DistTable<K, T> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }
}

impl<K: OutcomeKey, T: Scalar> DistTable<K, T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn point(k: K) -> Self {
        let mut t = Self::new();
        t.add(k, T::one());
        t
    }

    /// Adds mass to an outcome; zero masses are not stored.
    pub fn add(&mut self, k: K, p: T) {
        if p.is_zero() {
            return;
        }
        let slot = self.entries.entry(k).or_insert_with(T::zero);
        *slot = slot.clone() + p;
    }

    pub fn get(&self, k: &K) -> T {
        self.entries.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &T)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = &K> {
        self.entries.keys()
    }

    pub fn total(&self) -> T {
        self.entries
            .values()
            .fold(T::zero(), |acc, p| acc + p.clone())
    }

    /// `E[f(X)]`.
    pub fn expect(&self, f: impl Fn(&K) -> T) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, (k, p)| acc + f(k) * p.clone())
    }

    /// Checks the table is a probability law: masses in `[0, 1]` and a total
    /// of exactly one (or within `1e-9` for floating scalars).
    pub fn validate(&self) -> Result<()> {
        for (k, p) in &self.entries {
            if *p < T::zero() || *p > T::one() {
                return Err(Error::InconsistentState(format!(
                    "mass {} at outcome {} outside [0,1]",
                    p.render(),
                    k.render()
                )));
            }
        }
        let total = self.total();
        let ok = if T::EXACT {
            total == T::one()
        } else {
            (total.as_f64() - 1.0).abs() < 1e-9
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InconsistentState(format!(
                "total mass {} differs from 1",
                total.render()
            )))
        }
    }

    pub fn map_keys<K2: OutcomeKey>(&self, f: impl Fn(&K) -> K2) -> DistTable<K2, T> {
        let mut out = DistTable::new();
        for (k, p) in &self.entries {
            out.add(f(k), p.clone());
        }
        out
    }

    pub fn convert<U: Scalar>(&self, f: impl Fn(&T) -> U) -> DistTable<K, U> {
        DistTable {
            entries: self.entries.iter().map(|(k, p)| (*k, f(p))).collect(),
        }
    }

    pub fn to_f64(&self) -> DistTable<K, f64> {
        self.convert(|p| p.as_f64())
    }

    /// JSON rows `{"outcome": "w,b", "p": "num/den"}`.
    pub fn to_json_rows(&self) -> Value {
        Value::Array(
            self.entries
                .iter()
                .map(|(k, p)| json!({ "outcome": k.render(), "p": p.render() }))
                .collect(),
        )
    }

    /// CSV with the outcome columns followed by `p_exact,p_decimal`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = K::csv_header().to_vec();
        header.extend(["p_exact", "p_decimal"]);
        w.write_record(&header)?;
        for (k, p) in &self.entries {
            let mut row = k.csv_fields();
            row.push(p.render());
            row.push(crate::scalar::decimal12(p.as_f64()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl<K: OutcomeKey, T: Scalar> FromIterator<(K, T)> for DistTable<K, T> {
    fn from_iter<I: IntoIterator<Item = (K, T)>>(iter: I) -> Self {
        let mut t = Self::new();
        for (k, p) in iter {
            t.add(k, p);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::ratio(n, d)
    }

    #[test]
    fn add_merges_and_skips_zero() {
        let mut t: PairTable<BigRational> = DistTable::new();
        t.add((2, 0), q(1, 3));
        t.add((2, 0), q(1, 3));
        t.add((1, 4), q(1, 3));
        t.add((9, 9), q(0, 1));
        assert_eq!(t.len(), 2);
        assert_eq!(t.get(&(2, 0)), q(2, 3));
        assert!(t.validate().is_ok());
    }

    #[test]
    fn validate_rejects_deficient_mass() {
        let t: CountTable<BigRational> = [(1, q(1, 2))].into_iter().collect();
        assert!(t.validate().is_err());
    }

    #[test]
    fn json_and_csv_rows() {
        let t: PairTable<BigRational> =
            [((2, 0), q(2, 3)), ((1, 4), q(1, 3))].into_iter().collect();
        let rows = t.to_json_rows();
        assert_eq!(rows[0]["outcome"], "1,4");
        assert_eq!(rows[0]["p"], "1/3");
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "w,b,p_exact,p_decimal\n1,4,1/3,0.333333333333\n2,0,2/3,0.666666666667\n"
        );
    }
}
