use std::fmt;

/// A fixed-width bit string, written most significant bit first.
///
/// Position `i` (counting from the left, 0-based) is bit `width - 1 - i` of
/// the integer value, so `"10"` has value 2. Widths up to 128 are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitConfig {
    width: u32,
    value: u128,
}

pub const MAX_WIDTH: u32 = 128;

impl BitConfig {
    pub fn zero(width: u32) -> Self {
        assert!(width <= MAX_WIDTH, "width {width} exceeds {MAX_WIDTH}");
        BitConfig { width, value: 0 }
    }

    pub fn from_value(value: u128, width: u32) -> Result<Self, String> {
        if width > MAX_WIDTH {
            return Err(format!("width {width} exceeds {MAX_WIDTH}"));
        }
        if width < MAX_WIDTH && value >> width != 0 {
            return Err(format!("value {value} does not fit in {width} bits"));
        }
        Ok(BitConfig { width, value })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let t = text.trim();
        if t.is_empty() || t.len() > MAX_WIDTH as usize || !t.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(format!("{t:?} is not a bit string"));
        }
        let value = u128::from_str_radix(t, 2).map_err(|e| e.to_string())?;
        Ok(BitConfig { width: t.len() as u32, value })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn value(&self) -> u128 {
        self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    /// Bit at position `i` from the left.
    pub fn get(&self, i: u32) -> bool {
        assert!(i < self.width, "position {i} out of range for width {}", self.width);
        (self.value >> (self.width - 1 - i)) & 1 == 1
    }

    pub fn with(mut self, i: u32, bit: bool) -> Self {
        assert!(i < self.width, "position {i} out of range for width {}", self.width);
        let mask = 1u128 << (self.width - 1 - i);
        if bit {
            self.value |= mask;
        } else {
            self.value &= !mask;
        }
        self
    }

    pub fn count_ones(&self) -> u32 {
        self.value.count_ones()
    }

    /// `self` followed by `low`.
    pub fn concat(&self, low: &BitConfig) -> Result<BitConfig, String> {
        let width = self.width + low.width;
        if width > MAX_WIDTH {
            return Err(format!("width {width} exceeds {MAX_WIDTH}"));
        }
        let high = if low.width == MAX_WIDTH { 0 } else { self.value << low.width };
        Ok(BitConfig { width, value: high | low.value })
    }

    /// Splits into the leftmost `high_width` bits and the rest.
    pub fn split(&self, high_width: u32) -> (BitConfig, BitConfig) {
        assert!(high_width <= self.width);
        let low_width = self.width - high_width;
        let low_mask = if low_width == MAX_WIDTH { u128::MAX } else { (1u128 << low_width) - 1 };
        let high = if low_width == MAX_WIDTH { 0 } else { self.value >> low_width };
        (
            BitConfig { width: high_width, value: high },
            BitConfig { width: low_width, value: self.value & low_mask },
        )
    }

    /// All configurations of the given width in increasing order (`width <= 64`).
    pub fn all(width: u32) -> impl Iterator<Item = BitConfig> {
        assert!(width <= 64, "cannot enumerate {width}-bit configurations");
        (0..1u128 << width).map(move |value| BitConfig { width, value })
    }
}

impl fmt::Display for BitConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.width {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn msb_first_text() {
        let x = BitConfig::parse("10").unwrap();
        assert_eq!(x.value(), 2);
        assert!(x.get(0) && !x.get(1));
        assert_eq!(x.with(1, true).to_string(), "11");
        assert!(BitConfig::parse("012").is_err());
        assert!(BitConfig::from_value(4, 2).is_err());
    }

    proptest! {
        #[test]
        fn concat_split_round_trip(a in 0u128..1 << 10, b in 0u128..1 << 7) {
            let hi = BitConfig::from_value(a, 10).unwrap();
            let lo = BitConfig::from_value(b, 7).unwrap();
            let joined = hi.concat(&lo).unwrap();
            prop_assert_eq!(joined.to_string(), format!("{hi}{lo}"));
            prop_assert_eq!(joined.split(10), (hi, lo));
            prop_assert_eq!(BitConfig::parse(&joined.to_string()).unwrap(), joined);
        }
    }
}
