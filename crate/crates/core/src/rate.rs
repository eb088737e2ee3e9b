//! Exact rational rates (violating records over processed records).

use rust_decimal::Decimal;
use std::cmp::Ordering;
use std::fmt;

/// Largest number of decimal places accepted in a percentage limit.
pub const MAX_LIMIT_SCALE: u32 = 10;

/// A non-negative fraction `num / den`. A zero denominator denotes the
/// empty-dataset rate and compares equal to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rate {
    num: u128,
    den: u128,
}

impl Rate {
    pub const ZERO: Rate = Rate { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Self {
        if den == 0 {
            Rate::ZERO
        } else {
            Rate {
                num: num as u128,
                den: den as u128,
            }
        }
    }

    /// `1.15` (percent) becomes `115 / 10000`. Scales above
    /// [`MAX_LIMIT_SCALE`] are rounded to that many places.
    pub fn from_percent(percent: Decimal) -> Self {
        let p = if percent.scale() > MAX_LIMIT_SCALE {
            percent.round_dp(MAX_LIMIT_SCALE)
        } else {
            percent
        };
        let mantissa = p.mantissa().unsigned_abs();
        Rate {
            num: mantissa,
            den: 100 * 10u128.pow(p.scale()),
        }
    }

    pub fn numerator(&self) -> u128 {
        self.num
    }

    pub fn denominator(&self) -> u128 {
        self.den
    }

    /// Decimal expansion rounded half-up to `places` digits.
    pub fn to_decimal_string(&self, places: u32) -> String {
        let scale = 10u128.pow(places);
        let scaled = (self.num * scale * 2 + self.den) / (self.den * 2);
        let int = scaled / scale;
        let frac = scaled % scale;
        if places == 0 {
            int.to_string()
        } else {
            format!("{int}.{frac:0width$}", width = places as usize)
        }
    }

    /// Percentage with `sig` significant digits (at least three decimals for
    /// zero), e.g. `5.163%`, `0.002519%`, `100.0%`.
    pub fn percent_sig(&self, sig: u32) -> String {
        let num = self.num * 100;
        if num == 0 {
            return format!("{}%", Rate::ZERO.to_decimal_string(sig.saturating_sub(1)));
        }
        // integer digits of the percentage, or leading zeros after the point
        let mut magnitude: i32 = 0;
        let mut q = num / self.den;
        if q > 0 {
            while q >= 10 {
                q /= 10;
                magnitude += 1;
            }
        } else {
            let mut n = num * 10;
            magnitude = -1;
            while n < self.den {
                n *= 10;
                magnitude -= 1;
            }
        }
        let places = (sig as i32 - 1 - magnitude).max(0) as u32;
        let pct = Rate { num, den: self.den };
        let s = pct.to_decimal_string(places);
        // rounding may carry into a new digit (9.9996 -> 10.000)
        let digits = s.chars().filter(char::is_ascii_digit).collect::<String>();
        let significant = digits.trim_start_matches('0').len() as u32;
        if significant > sig && places > 0 {
            format!("{}%", pct.to_decimal_string(places - 1))
        } else {
            format!("{s}%")
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Ord for Rate {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

impl PartialOrd for Rate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}
