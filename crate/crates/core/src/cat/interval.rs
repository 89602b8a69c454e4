use serde::{Deserialize, Serialize};

use super::CatError;

/// Whether a state variable takes integral or continuous values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Integer,
    Real,
}

/// Name, kind and global range of one state variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VarKind,
    pub lo: f64,
    pub hi: f64,
}

impl VariableSpec {
    pub fn integer(name: impl Into<String>, lo: i64, hi: i64) -> Self {
        Self {
            name: name.into(),
            kind: VarKind::Integer,
            lo: lo as f64,
            hi: hi as f64,
        }
    }

    pub fn real(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            kind: VarKind::Real,
            lo,
            hi,
        }
    }

    pub fn validate(&self) -> Result<(), CatError> {
        let bad = |reason: &str| CatError::InvalidSpec {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(bad("bounds must be finite"));
        }
        match self.kind {
            VarKind::Integer => {
                if self.lo.fract() != 0.0 || self.hi.fract() != 0.0 {
                    return Err(bad("integer bounds must be integral"));
                }
                if self.lo > self.hi {
                    return Err(bad("lo > hi"));
                }
            }
            VarKind::Real => {
                if self.lo >= self.hi {
                    return Err(bad("real range must satisfy lo < hi"));
                }
            }
        }
        Ok(())
    }

    /// Full-range interval for this variable.
    pub fn full_interval(&self) -> Interval {
        Interval {
            kind: self.kind,
            lo: self.lo,
            hi: self.hi,
        }
    }

    /// True if `v` lies inside the global range.
    pub fn admits(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi && (self.kind == VarKind::Real || v.fract() == 0.0)
    }

    /// Number of distinct values for integer variables.
    pub fn cardinality(&self) -> Option<u64> {
        match self.kind {
            VarKind::Integer => Some((self.hi - self.lo) as u64 + 1),
            VarKind::Real => None,
        }
    }
}

/// One variable's value range inside an abstraction.
///
/// Integer intervals are closed `[lo, hi]`. Real intervals are half-open
/// `[lo, hi)`, except that an interval ending at the variable's global upper
/// bound also contains that bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub kind: VarKind,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn integer(lo: i64, hi: i64) -> Self {
        Self {
            kind: VarKind::Integer,
            lo: lo as f64,
            hi: hi as f64,
        }
    }

    pub fn real(lo: f64, hi: f64) -> Self {
        Self {
            kind: VarKind::Real,
            lo,
            hi,
        }
    }

    /// Integer: number of values. Real: length.
    pub fn width(&self) -> f64 {
        match self.kind {
            VarKind::Integer => self.hi - self.lo + 1.0,
            VarKind::Real => self.hi - self.lo,
        }
    }

    pub fn is_well_formed(&self) -> bool {
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return false;
        }
        match self.kind {
            VarKind::Integer => self.lo.fract() == 0.0 && self.hi.fract() == 0.0 && self.lo <= self.hi,
            VarKind::Real => self.lo < self.hi,
        }
    }

    /// Membership test. `global_hi` is the variable's global upper bound,
    /// which closes real intervals that reach it.
    pub fn contains(&self, v: f64, global_hi: f64) -> bool {
        match self.kind {
            VarKind::Integer => v >= self.lo && v <= self.hi,
            VarKind::Real => v >= self.lo && (v < self.hi || (v == self.hi && self.hi == global_hi)),
        }
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        self.kind == other.kind && self.lo >= other.lo && self.hi <= other.hi
    }

    pub fn overlaps(&self, other: &Interval, global_hi: f64) -> bool {
        match self.kind {
            VarKind::Integer => self.lo <= other.hi && other.lo <= self.hi,
            VarKind::Real => {
                let lo = self.lo.max(other.lo);
                let hi = self.hi.min(other.hi);
                lo < hi || (lo == hi && lo == global_hi && self.contains(lo, global_hi) && other.contains(lo, global_hi))
            }
        }
    }

    pub fn can_split(&self, f: usize, min_real_width: f64) -> bool {
        if f < 2 {
            return false;
        }
        match self.kind {
            VarKind::Integer => self.width() >= f as f64,
            VarKind::Real => self.width() >= f as f64 * min_real_width,
        }
    }

    /// Splits into `f` contiguous parts whose concatenation is `self`.
    ///
    /// Integer parts differ in width by at most one, wider parts first, so
    /// `[1,4]` gives `[1,2],[3,4]` and `[1,5]` gives `[1,3],[4,5]`. Real parts
    /// have equal width.
    pub fn split(&self, f: usize, min_real_width: f64) -> Result<Vec<Interval>, CatError> {
        if f < 2 {
            return Err(CatError::InvalidFactor(f));
        }
        if !self.can_split(f, min_real_width) {
            return Err(CatError::Unsplittable {
                lo: self.lo,
                hi: self.hi,
                f,
            });
        }
        let parts = match self.kind {
            VarKind::Integer => {
                let lo = self.lo as i64;
                let width = self.width() as i64;
                let f = f as i64;
                let base = width / f;
                let extra = width % f;
                let mut start = lo;
                (0..f)
                    .map(|x| {
                        let w = base + i64::from(x < extra);
                        let part = Interval::integer(start, start + w - 1);
                        start += w;
                        part
                    })
                    .collect()
            }
            VarKind::Real => {
                let step = self.width() / f as f64;
                (0..f)
                    .map(|x| {
                        let lo = if x == 0 { self.lo } else { self.lo + x as f64 * step };
                        let hi = if x + 1 == f { self.hi } else { self.lo + (x + 1) as f64 * step };
                        Interval::real(lo, hi)
                    })
                    .collect()
            }
        };
        Ok(parts)
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            VarKind::Integer => write!(out, "[{},{}]", self.lo, self.hi),
            VarKind::Real => write!(out, "[{},{})", self.lo, self.hi),
        }
    }
}
