//! Trapezoidal fuzzy sets, membership combination, alpha filtering and
//! propagation of uncertain rows between consecutive operators.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::table::{FeatureTable, RowKey};

/// Trapezoid with support `[a, d]` and core `[b, c]`.
///
/// `a == b` (or `c == d`) is a closed step: membership is 1 from `b` on.
/// Infinite edges make the open side evaluate as 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trapezoid<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Real> Trapezoid<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        if [a, b, c, d].iter().any(|v| v.is_nan()) || !(a <= b && b <= c && c <= d) {
            return invalid(format!("trapezoid requires a <= b <= c <= d, got ({a}, {b}, {c}, {d})"));
        }
        Ok(Self { a, b, c, d })
    }

    /// Membership in `[0, 1]`; NaN maps to 0.
    pub fn eval(&self, x: T) -> T {
        self.eval_checked(x).0
    }

    /// Membership plus a flag raised when `x` was NaN.
    pub fn eval_checked(&self, x: T) -> (T, bool) {
        if x.is_nan() {
            return (T::zero(), true);
        }
        let one = T::one();
        let rise = if self.a == T::neg_infinity() || x >= self.b {
            one
        } else if x < self.a {
            T::zero()
        } else {
            (x - self.a) / (self.b - self.a)
        };
        let fall = if self.d == T::infinity() || x <= self.c {
            one
        } else if x > self.d {
            T::zero()
        } else {
            (self.d - x) / (self.d - self.c)
        };
        (rise.min(one).min(fall).max(T::zero()), false)
    }
}

/// How per-feature memberships fold into one degree.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Combine {
    Product,
    #[default]
    Min,
}

impl std::str::FromStr for Combine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "product" | "prod" => Ok(Self::Product),
            "min" | "minimum" => Ok(Self::Min),
            _ => invalid(format!("unknown combination mode {s:?}")),
        }
    }
}

/// Folds memberships; an empty list yields 1.
pub fn combine<T: Real>(values: &[T], mode: Combine) -> Result<T> {
    if let Some(v) = values.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
        return invalid(format!("membership {v} outside [0, 1]"));
    }
    Ok(match mode {
        Combine::Product => values.iter().fold(T::one(), |acc, &v| acc * v),
        Combine::Min => values.iter().fold(T::one(), |acc, &v| acc.min(v)),
    })
}

/// One FSMD term: a set of feature memberships folded into `fsmd_<name>`.
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzySpec {
    pub name: String,
    pub features: Vec<(String, Trapezoid<f64>)>,
    pub combine: Combine,
}

impl FuzzySpec {
    pub fn new(name: impl Into<String>, combine: Combine) -> Self {
        Self { name: name.into(), features: Vec::new(), combine }
    }

    pub fn with(mut self, feature: impl Into<String>, set: Trapezoid<f64>) -> Self {
        self.features.push((feature.into(), set));
        self
    }

    pub fn column(&self) -> String {
        format!("fsmd_{}", self.name)
    }

    /// Trapezoid attached to `feature`, if any.
    pub fn set_for(&self, feature: &str) -> Option<&Trapezoid<f64>> {
        self.features.iter().find(|(f, _)| f == feature).map(|(_, s)| s)
    }
}

/// Rows whose feature value was NaN, reported by [`augment_table`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub nan_inputs: Vec<(u64, String)>,
}

/// Appends one `fsmd_<name>` column per spec. Missing feature columns are a contract error.
pub fn augment_table(table: &mut FeatureTable, specs: &[FuzzySpec]) -> Result<Diagnostics> {
    let mut diag = Diagnostics::default();
    for spec in specs {
        let cols: Vec<usize> = spec.features.iter().map(|(f, _)| table.require_column(f)).collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(table.len());
        let mut mu = Vec::with_capacity(cols.len());
        for r in 0..table.len() {
            mu.clear();
            for ((name, set), &c) in spec.features.iter().zip(&cols) {
                let (m, nan) = set.eval_checked(table.row(r)[c]);
                if nan {
                    diag.nan_inputs.push((table.ids()[r], name.clone()));
                }
                mu.push(m);
            }
            out.push(combine(&mu, spec.combine)?);
        }
        table.set_column(&spec.column(), &out)?;
    }
    Ok(diag)
}

/// Keeps rows with `fsmd_<term> >= alpha` for every given term.
pub fn alpha_filter(table: &FeatureTable, alphas: &[(String, f64)]) -> Result<FeatureTable> {
    let cols: Vec<(usize, f64)> =
        alphas.iter().map(|(t, a)| Ok((table.require_column(&format!("fsmd_{t}"))?, *a))).collect::<Result<_>>()?;
    let keep: Vec<usize> = (0..table.len()).filter(|&r| cols.iter().all(|&(c, a)| table.row(r)[c] >= a)).collect();
    Ok(table.select(&keep))
}

/// Result of one propagation step: the filtered output of the current
/// operator plus predecessor rows whose successors are uncertain.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationState {
    pub filtered: FeatureTable,
    pub carried: FeatureTable,
}

impl PropagationState {
    /// Provenance keys of the union; the two parts never share a key.
    pub fn omega_keys(&self) -> BTreeSet<RowKey> {
        let mut keys: BTreeSet<RowKey> = (0..self.filtered.len()).map(|r| self.filtered.key(r)).collect();
        keys.extend((0..self.carried.len()).map(|r| self.carried.key(r)));
        keys
    }

    pub fn omega_len(&self) -> usize {
        self.filtered.len() + self.carried.len()
    }
}

/// Carries a predecessor row forward when its successor row in `filtered`
/// has `alpha <= fsmd_<term> < beta` for every term. `successor_column` in
/// `predecessor` holds the id of the successor row each predecessor row fed
/// (NaN when it fed none). `beta == alpha` carries nothing.
pub fn propagate(
    filtered: &FeatureTable,
    predecessor: &FeatureTable,
    successor_column: &str,
    bounds: &[(String, f64, f64)],
) -> Result<PropagationState> {
    if filtered.operator() == predecessor.operator() {
        return Err(Error::Contract("successor and predecessor share an operator index".into()));
    }
    let link = predecessor.require_column(successor_column)?;
    let cols: Vec<(usize, f64, f64)> = bounds
        .iter()
        .map(|(t, a, b)| Ok((filtered.require_column(&format!("fsmd_{t}"))?, *a, *b)))
        .collect::<Result<_>>()?;
    let uncertain: BTreeMap<u64, bool> = (0..filtered.len())
        .map(|r| {
            let row = filtered.row(r);
            (filtered.ids()[r], cols.iter().all(|&(c, a, b)| row[c] >= a && row[c] < b))
        })
        .collect();
    let carry: Vec<usize> = (0..predecessor.len())
        .filter(|&r| {
            let s = predecessor.row(r)[link];
            s.is_finite() && s >= 0.0 && uncertain.get(&(s as u64)).copied().unwrap_or(false)
        })
        .collect();
    Ok(PropagationState { filtered: filtered.clone(), carried: predecessor.select(&carry) })
}
