use core::fmt;

// Fixed point with the least significant bit worth 2^-1074 (the smallest
// subnormal). Finite doubles occupy bits 0..2098; the top limb is headroom
// for 2^64 additions of the largest double.
const LIMBS: usize = 34;
const FRAC_MASK: u64 = (1 << 52) - 1;

/// Exact sum of non-negative doubles.
///
/// Additions are carried out in a wide fixed-point integer, so the result is
/// independent of the order values are added in and of how they are grouped
/// into partial sums. [`ExactSum::value`] rounds once, to nearest-even.
///
/// Per-worker distortions are kept as `ExactSum`s so that the master's total
/// is bit-identical whatever the worker count.
#[derive(Clone, PartialEq, Eq)]
pub struct ExactSum {
    limbs: [u64; LIMBS],
    overflow: bool,
}

impl Default for ExactSum {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactSum {
    /// The empty sum.
    pub const fn new() -> Self {
        Self {
            limbs: [0; LIMBS],
            overflow: false,
        }
    }

    /// Adds `x`, which must be non-negative and not NaN. `+inf` saturates.
    #[inline]
    pub fn add(&mut self, x: f64) {
        debug_assert!(x >= 0.0, "ExactSum only accepts non-negative values");
        if x.is_infinite() {
            self.overflow = true;
            return;
        }
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as usize;
        let frac = bits & FRAC_MASK;
        let (mant, shift) = if exp == 0 {
            (frac, 0)
        } else {
            (frac | (1 << 52), exp - 1)
        };
        if mant == 0 {
            return;
        }
        let (limb, off) = (shift / 64, shift % 64);
        self.add_at(limb, mant << off);
        if off > 11 {
            self.add_at(limb + 1, mant >> (64 - off));
        }
    }

    #[inline]
    fn add_at(&mut self, mut i: usize, v: u64) {
        let (s, mut carry) = self.limbs[i].overflowing_add(v);
        self.limbs[i] = s;
        while carry {
            i += 1;
            if i == LIMBS {
                self.overflow = true;
                return;
            }
            let (s, c) = self.limbs[i].overflowing_add(1);
            self.limbs[i] = s;
            carry = c;
        }
    }

    /// Adds another partial sum.
    pub fn merge(&mut self, other: &ExactSum) {
        self.overflow |= other.overflow;
        let mut carry = false;
        for (a, b) in self.limbs.iter_mut().zip(other.limbs.iter()) {
            let (s1, c1) = a.overflowing_add(*b);
            let (s2, c2) = s1.overflowing_add(carry as u64);
            *a = s2;
            carry = c1 | c2;
        }
        self.overflow |= carry;
    }

    /// True if nothing non-zero has been added.
    pub fn is_zero(&self) -> bool {
        !self.overflow && self.limbs.iter().all(|&l| l == 0)
    }

    /// The sum rounded to the nearest double (ties to even); `+inf` when the
    /// exact sum exceeds the double range.
    pub fn value(&self) -> f64 {
        if self.overflow {
            return f64::INFINITY;
        }
        let Some(top) = self.limbs.iter().rposition(|&l| l != 0) else {
            return 0.0;
        };
        let len = top * 64 + (64 - self.limbs[top].leading_zeros() as usize);
        if len <= 53 {
            // Exact: below 2^-1021 every multiple of 2^-1074 is representable.
            return self.limbs[0] as f64 * f64::from_bits(1);
        }
        let mut mant = self.bits_at(len - 53) & ((1 << 53) - 1);
        let round = self.bits_at(len - 54) & 1 == 1;
        let sticky = self.any_below(len - 54);
        let mut len = len;
        if round && (sticky || mant & 1 == 1) {
            mant += 1;
            if mant == 1 << 53 {
                mant >>= 1;
                len += 1;
            }
        }
        let biased = len - 52;
        if biased >= 0x7ff {
            return f64::INFINITY;
        }
        f64::from_bits(((biased as u64) << 52) | (mant & FRAC_MASK))
    }

    // 64 bits starting at bit `pos`.
    fn bits_at(&self, pos: usize) -> u64 {
        let (i, off) = (pos / 64, pos % 64);
        let mut v = self.limbs[i] >> off;
        if off != 0 && i + 1 < LIMBS {
            v |= self.limbs[i + 1] << (64 - off);
        }
        v
    }

    fn any_below(&self, pos: usize) -> bool {
        let (i, off) = (pos / 64, pos % 64);
        self.limbs[..i].iter().any(|&l| l != 0) || (off != 0 && self.limbs[i] & ((1u64 << off) - 1) != 0)
    }
}

impl fmt::Debug for ExactSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("ExactSum").field(&self.value()).finish()
    }
}

impl Extend<f64> for ExactSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = ExactSum::new();
        s.extend(iter);
        s
    }
}

impl<'a> FromIterator<&'a ExactSum> for ExactSum {
    fn from_iter<I: IntoIterator<Item = &'a ExactSum>>(iter: I) -> Self {
        let mut s = ExactSum::new();
        for part in iter {
            s.merge(part);
        }
        s
    }
}
