//! Fixed-dimension embedding of declarations for drift scoring.
//!
//! The first few dimensions hold `ln(1 + x)` of the numeric fields (fob value,
//! gross weight, quantity). Every categorical token adds `+1` or `-1` to one
//! of the remaining dimensions, both chosen by a salted hash of the field and
//! token. The raw vector is then standardized with per-dimension statistics
//! fitted on a reference set.

use crate::error::{Error, Result};
use crate::rng::stable_hash;
use crate::types::Declaration;

const NUMERIC_FIELDS: usize = 3;
const CATEGORICAL_FIELDS: [&str; 4] = ["tariff_code", "importer_id", "declarant_id", "office_id"];

#[derive(Debug, Clone, PartialEq)]
pub struct Embedder {
    dim: usize,
    hash_salt: u64,
    mean: Vec<f64>,
    stddev: Vec<f64>,
}

impl Embedder {
    /// Fits the standardizer on `reference`.
    pub fn fit(reference: &[Declaration], dim: usize, salt: u64) -> Result<Self> {
        if reference.is_empty() {
            return Err(Error::EmptyReference);
        }
        if dim < 2 {
            return Err(Error::config("embed_dim", "must be at least 2"));
        }
        let mut e = Embedder {
            dim,
            hash_salt: salt,
            mean: vec![0.0; dim],
            stddev: vec![1.0; dim],
        };
        let raws: Vec<Vec<f64>> = reference.iter().map(|d| e.raw(d)).collect();
        let n = raws.len() as f64;
        for j in 0..dim {
            let mean = raws.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = raws.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            e.mean[j] = mean;
            e.stddev[j] = if sd > 1e-12 { sd } else { 1.0 };
        }
        Ok(e)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimensions reserved for the numeric fields.
    pub fn numeric_dims(&self) -> usize {
        NUMERIC_FIELDS.min(self.dim - 1)
    }

    /// The dimension a numeric field (0 = fob, 1 = weight, 2 = quantity) writes to.
    pub fn numeric_dim_of(&self, field: usize) -> usize {
        field % self.numeric_dims()
    }

    /// The hashed dimension and sign a categorical token writes to.
    pub fn categorical_slot(&self, field: &str, token: &str) -> (usize, f64) {
        let h = stable_hash(self.hash_salt, field, token);
        let buckets = (self.dim - self.numeric_dims()) as u64;
        let dim = self.numeric_dims() + (h % buckets) as usize;
        let sign = if (h >> 63) == 0 { 1.0 } else { -1.0 };
        (dim, sign)
    }

    fn raw(&self, d: &Declaration) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        let numeric = [d.fob_value, d.gross_weight, f64::from(d.quantity)];
        for (i, x) in numeric.iter().enumerate() {
            v[self.numeric_dim_of(i)] += x.ln_1p();
        }
        let tokens = [
            &d.tariff_code,
            &d.importer_id,
            &d.declarant_id,
            &d.office_id,
        ];
        for (field, token) in CATEGORICAL_FIELDS.iter().zip(tokens) {
            let (j, sign) = self.categorical_slot(field, token);
            v[j] += sign;
        }
        v
    }

    /// Standardized embedding of one declaration.
    pub fn encode(&self, d: &Declaration) -> Vec<f64> {
        let mut v = self.raw(d);
        for ((x, m), s) in v.iter_mut().zip(&self.mean).zip(&self.stddev) {
            *x = (*x - m) / s;
        }
        v
    }

    pub fn encode_all(&self, ds: &[Declaration]) -> Vec<Vec<f64>> {
        ds.iter().map(|d| self.encode(d)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::test_support::decl;
    use crate::types::{DeclarationFields, InspectionOutcome};

    fn varied(n: u64) -> Vec<Declaration> {
        (0..n)
            .map(|i| {
                Declaration::new(
                    DeclarationFields {
                        id: i,
                        week: 0,
                        fob_value: 10.0 + (i * 37 % 101) as f64,
                        gross_weight: 1.0 + (i * 13 % 17) as f64,
                        quantity: 1 + (i % 5) as u32,
                        tariff_code: format!("T{}", i % 9),
                        importer_id: format!("I{}", i % 23),
                        declarant_id: format!("D{}", i % 4),
                        office_id: "O1".into(),
                    },
                    InspectionOutcome::LICIT,
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn standardizes_its_reference() {
        let ds = varied(300);
        let e = Embedder::fit(&ds, 16, 3).unwrap();
        let vs = e.encode_all(&ds);
        for j in 0..16 {
            let col: Vec<f64> = vs.iter().map(|v| v[j]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-9, "dim {j} mean {mean}");
            // Constant dimensions stay at zero with unit scale.
            if e.stddev[j] != 1.0 || var > 0.0 {
                assert!((var.sqrt() - 1.0).abs() < 1e-9, "dim {j} sd {}", var.sqrt());
            }
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let ds = varied(50);
        assert_eq!(
            Embedder::fit(&ds, 16, 5).unwrap(),
            Embedder::fit(&ds, 16, 5).unwrap()
        );
    }

    #[test]
    fn constant_column_gets_unit_scale() {
        let ds: Vec<_> = (0..20)
            .map(|i| decl(i, 0, 50.0, InspectionOutcome::LICIT))
            .collect();
        let e = Embedder::fit(&ds, 16, 1).unwrap();
        // fob and weight are constant in this set.
        assert_eq!(e.stddev[0], 1.0);
        assert_eq!(e.stddev[1], 1.0);
        assert!(e.encode(&ds[0]).iter().all(|x| x.is_finite()));
    }

    #[test]
    fn empty_reference_is_rejected() {
        assert!(matches!(
            Embedder::fit(&[], 16, 0),
            Err(Error::EmptyReference)
        ));
    }

    #[test]
    fn importer_change_touches_only_hashed_dims() {
        let ds = varied(100);
        let e = Embedder::fit(&ds, 16, 11).unwrap();
        let a = ds[3].clone();
        let mut b = a.clone();
        b.importer_id = "never-seen".into();
        let (va, vb) = (e.encode(&a), e.encode(&b));
        let (old_dim, _) = e.categorical_slot("importer_id", &a.importer_id);
        let (new_dim, _) = e.categorical_slot("importer_id", &b.importer_id);
        for j in 0..16 {
            if va[j] != vb[j] {
                assert!(j >= e.numeric_dims(), "numeric dim {j} changed");
                assert!(j == old_dim || j == new_dim, "unrelated dim {j} changed");
            }
        }
    }

    #[test]
    fn doubling_fob_touches_only_fob_dim() {
        let ds = varied(100);
        let e = Embedder::fit(&ds, 16, 11).unwrap();
        let a = ds[5].clone();
        let mut b = a.clone();
        b.fob_value *= 2.0;
        let (va, vb) = (e.encode(&a), e.encode(&b));
        let changed: Vec<usize> = (0..16).filter(|&j| va[j] != vb[j]).collect();
        assert_eq!(changed, vec![e.numeric_dim_of(0)]);
    }

    #[test]
    fn tiny_dimensions_still_encode() {
        let ds = varied(30);
        for dim in 2..5 {
            let e = Embedder::fit(&ds, dim, 0).unwrap();
            assert!(e.encode(&ds[0]).iter().all(|x| x.is_finite()));
            assert_eq!(e.encode(&ds[0]).len(), dim);
        }
    }
}
