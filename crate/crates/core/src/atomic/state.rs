use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::AtomicError;

/// An integer or half-integer, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(value: i32) -> Self {
        HalfInt(2 * value)
    }

    /// Returns `None` unless `value` is within 1e-9 of a multiple of 1/2.
    pub fn from_f64(value: f64) -> Option<Self> {
        let twice = (2.0 * value).round();
        if (2.0 * value - twice).abs() > 1e-9 || twice.abs() > i32::MAX as f64 {
            return None;
        }
        Some(HalfInt(twice as i32))
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub const fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }
}

impl std::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for HalfInt {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: i32 = num.trim().parse().map_err(|_| format!("bad half-integer '{s}'"))?;
            match den.trim() {
                "2" => Ok(HalfInt(num)),
                "1" => Ok(HalfInt(2 * num)),
                _ => Err(format!("bad half-integer '{s}'")),
            }
        } else {
            let v: f64 = s.parse().map_err(|_| format!("bad half-integer '{s}'"))?;
            HalfInt::from_f64(v).ok_or_else(|| format!("'{s}' is not a multiple of 1/2"))
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(deserializer)?;
        HalfInt::from_f64(v).ok_or_else(|| serde::de::Error::custom(format!("{v} is not a multiple of 1/2")))
    }
}

/// One fine-structure Stark component |n, l, j, mj⟩ of a single-valence atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RydbergState {
    pub n: u32,
    pub l: u32,
    pub j: HalfInt,
    pub mj: HalfInt,
}

impl RydbergState {
    pub fn new(n: u32, l: u32, j: HalfInt, mj: HalfInt) -> Result<Self, AtomicError> {
        let state = RydbergState { n, l, j, mj };
        state.validate()?;
        Ok(state)
    }

    /// Convenience constructor from floating-point j and mj.
    pub fn from_f64(n: u32, l: u32, j: f64, mj: f64) -> Result<Self, AtomicError> {
        let bad = || AtomicError::InvalidState(format!("j = {j}, mj = {mj} must be half-integers"));
        let j = HalfInt::from_f64(j).ok_or_else(bad)?;
        let mj = HalfInt::from_f64(mj).ok_or_else(bad)?;
        Self::new(n, l, j, mj)
    }

    fn validate(&self) -> Result<(), AtomicError> {
        let invalid = |msg: String| Err(AtomicError::InvalidState(msg));
        if self.n == 0 {
            return invalid("n must be positive".into());
        }
        if self.l >= self.n {
            return invalid(format!("l = {} must be below n = {}", self.l, self.n));
        }
        let twice_l = 2 * self.l as i32;
        let tj = self.j.twice();
        if tj != twice_l + 1 && tj != twice_l - 1 {
            return invalid(format!("j = {} is not l ± 1/2 for l = {}", self.j, self.l));
        }
        if self.mj.is_integer() || self.mj.twice().abs() > tj {
            return invalid(format!("mj = {} not allowed for j = {}", self.mj, self.j));
        }
        Ok(())
    }

    /// Same level with a different magnetic quantum number.
    pub fn with_mj(self, mj: HalfInt) -> Result<Self, AtomicError> {
        Self::new(self.n, self.l, self.j, mj)
    }

    pub fn abs_mj(self) -> HalfInt {
        self.mj.abs()
    }

    /// Spectroscopic label such as `23s1/2`.
    pub fn term(&self) -> String {
        format!("{}{}{}", self.n, orbital_letter(self.l), self.j)
    }
}

impl fmt::Display for RydbergState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mj={}", self.term(), self.mj)
    }
}

#[derive(Deserialize)]
struct RawState {
    n: u32,
    l: u32,
    j: HalfInt,
    mj: HalfInt,
}

impl<'de> Deserialize<'de> for RydbergState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawState::deserialize(deserializer)?;
        RydbergState::new(raw.n, raw.l, raw.j, raw.mj).map_err(serde::de::Error::custom)
    }
}

pub fn orbital_letter(l: u32) -> char {
    const LETTERS: &[u8] = b"spdfghiklmnoqrtuv";
    LETTERS.get(l as usize).map(|&c| c as char).unwrap_or('?')
}
