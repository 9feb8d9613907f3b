//! Bit, integer and Gray-code fields encoded in element order.
//!
//! A field of width `w` occupies `w * S::BIT_SPAN` view positions starting at
//! its offset, most significant bit first. Reading costs one comparison per
//! bit and never moves an element; writing costs at most one swap per changed
//! bit. Gray fields store the reflected Gray code of their value, so stepping
//! the value by one flips exactly one encoded bit.

use crate::error::{PqError, Result};
use crate::slots::Slots;

/// Position of the most significant bit of `n` (so `msb(1) == 0`).
///
/// Faults on `n == 0`, which has no set bit.
#[inline]
pub fn msb(n: usize) -> usize {
    assert!(n > 0, "msb of zero");
    usize::BITS as usize - 1 - n.leading_zeros() as usize
}

/// Plain binary integer field, MSB first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntField {
    pub offset: usize,
    pub width: usize,
}

impl IntField {
    pub fn new(offset: usize, width: usize) -> Self {
        IntField { offset, width }
    }

    /// Positions the field spans in view `S`.
    pub fn span<S: Slots>(&self) -> usize {
        self.width * S::BIT_SPAN
    }

    fn bit_pos<S: Slots>(&self, i: usize) -> usize {
        self.offset + i * S::BIT_SPAN
    }

    /// Decode; `width` comparisons, zero moves.
    pub fn read<S: Slots>(&self, v: &mut S) -> u64 {
        let mut val = 0u64;
        for i in 0..self.width {
            val = (val << 1) | u64::from(v.read_bit(self.bit_pos::<S>(i)));
        }
        val
    }

    /// Encode; at most one swap per changed bit.
    pub fn write<S: Slots>(&self, v: &mut S, val: u64) -> Result<()> {
        if self.width < 64 && val >> self.width != 0 {
            return Err(PqError::RangeFault { width: self.width });
        }
        for i in 0..self.width {
            let b = (val >> (self.width - 1 - i)) & 1 == 1;
            v.write_bit(self.bit_pos::<S>(i), b);
        }
        Ok(())
    }
}

/// Reflected-Gray-coded counter field, MSB first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrayField {
    pub offset: usize,
    pub width: usize,
}

fn to_gray(v: u64) -> u64 {
    v ^ (v >> 1)
}

impl GrayField {
    pub fn new(offset: usize, width: usize) -> Self {
        GrayField { offset, width }
    }

    pub fn span<S: Slots>(&self) -> usize {
        self.width * S::BIT_SPAN
    }

    fn bit_pos<S: Slots>(&self, i: usize) -> usize {
        self.offset + i * S::BIT_SPAN
    }

    fn read_code<S: Slots>(&self, v: &mut S) -> u64 {
        let mut code = 0u64;
        for i in 0..self.width {
            code = (code << 1) | u64::from(v.read_bit(self.bit_pos::<S>(i)));
        }
        code
    }

    /// Decode the stored Gray code to its binary value.
    pub fn read<S: Slots>(&self, v: &mut S) -> u64 {
        let mut code = self.read_code(v);
        let mut mask = code >> 1;
        while mask != 0 {
            code ^= mask;
            mask >>= 1;
        }
        code
    }

    /// Encode an absolute value (used at rebuild time; normal updates step).
    pub fn write<S: Slots>(&self, v: &mut S, val: u64) -> Result<()> {
        if self.width < 64 && val >> self.width != 0 {
            return Err(PqError::RangeFault { width: self.width });
        }
        let code = to_gray(val);
        for i in 0..self.width {
            let b = (code >> (self.width - 1 - i)) & 1 == 1;
            v.write_bit(self.bit_pos::<S>(i), b);
        }
        Ok(())
    }

    /// Step the value by +1, flipping exactly one stored bit.
    pub fn increment<S: Slots>(&self, v: &mut S) -> Result<u64> {
        let val = self.read(v);
        if self.width < 64 && val + 1 >= 1u64 << self.width {
            return Err(PqError::RangeFault { width: self.width });
        }
        self.flip_step(v, val, val + 1);
        Ok(val + 1)
    }

    /// Step the value by -1, flipping exactly one stored bit.
    pub fn decrement<S: Slots>(&self, v: &mut S) -> Result<u64> {
        let val = self.read(v);
        if val == 0 {
            return Err(PqError::RangeFault { width: self.width });
        }
        self.flip_step(v, val, val - 1);
        Ok(val - 1)
    }

    fn flip_step<S: Slots>(&self, v: &mut S, from: u64, to: u64) {
        let diff = to_gray(from) ^ to_gray(to);
        debug_assert_eq!(diff.count_ones(), 1);
        let bit = 63 - diff.leading_zeros() as usize;
        let i = self.width - 1 - bit;
        let p = self.bit_pos::<S>(i);
        let cur = v.read_bit(p);
        v.write_bit(p, !cur);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::ImplicitArray;
    use crate::slots::UnitView;
    use proptest::prelude::*;

    fn fresh(width: usize) -> ImplicitArray<u64> {
        // Each bit pair starts as (2i+2, 2i+1) = bit 0.
        let mut v = Vec::new();
        for i in 0..width as u64 {
            v.push(2 * i + 2);
            v.push(2 * i + 1);
        }
        ImplicitArray::from_elements(v)
    }

    #[test]
    fn msb_basics() {
        assert_eq!(msb(1), 0);
        assert_eq!(msb(5), 2);
        for k in 0..=62 {
            assert_eq!(msb(1usize << k), k);
            // Oracle: repeated halving.
            let mut n = 1usize << k;
            let mut c = 0;
            while n > 1 {
                n >>= 1;
                c += 1;
            }
            assert_eq!(msb(1usize << k), c);
        }
    }

    #[test]
    #[should_panic]
    fn msb_zero_faults() {
        msb(0);
    }

    #[test]
    fn int_field_examples() {
        let mut arr = fresh(4);
        let f = IntField::new(1, 4);
        let mut v = UnitView::new(&mut arr);
        f.write(&mut v, 0b0101).unwrap();
        assert_eq!(f.read(&mut v), 5);
        f.write(&mut v, 0).unwrap();
        assert_eq!(f.read(&mut v), 0);
    }

    #[test]
    fn int_field_roundtrips_exhaustive_w6() {
        let mut arr = fresh(6);
        let f = IntField::new(1, 6);
        let mut v = UnitView::new(&mut arr);
        for val in 0..(1u64 << 6) {
            f.write(&mut v, val).unwrap();
            assert_eq!(f.read(&mut v), val);
        }
    }

    #[test]
    fn int_field_range_fault() {
        let mut arr = fresh(3);
        let f = IntField::new(1, 3);
        let mut v = UnitView::new(&mut arr);
        assert_eq!(f.write(&mut v, 8), Err(PqError::RangeFault { width: 3 }));
    }

    #[test]
    fn gray_value_5_reads_back() {
        // g(5) = 7 = 111
        let mut arr = fresh(3);
        let f = GrayField::new(1, 3);
        let mut v = UnitView::new(&mut arr);
        f.write(&mut v, 5).unwrap();
        assert_eq!(f.read_code(&mut v), 0b111);
        assert_eq!(f.read(&mut v), 5);
    }

    #[test]
    fn gray_increment_flips_exactly_one_bit() {
        let w = 10;
        let mut arr = fresh(w);
        let f = GrayField::new(1, w);
        let mut v = UnitView::new(&mut arr);
        f.write(&mut v, 0).unwrap();
        let mut prev = f.read_code(&mut v);
        for expect in 1..(1u64 << w) {
            let before = v.arr.counters().moves;
            assert_eq!(f.increment(&mut v).unwrap(), expect);
            assert!(v.arr.counters().moves - before <= 2);
            let code = f.read_code(&mut v);
            assert_eq!((code ^ prev).count_ones(), 1);
            prev = code;
        }
        assert!(f.increment(&mut v).is_err());
    }

    #[test]
    fn gray_decrement_mirrors_increment() {
        let mut arr = fresh(5);
        let f = GrayField::new(1, 5);
        let mut v = UnitView::new(&mut arr);
        f.write(&mut v, 17).unwrap();
        assert_eq!(f.decrement(&mut v).unwrap(), 16);
        assert_eq!(f.increment(&mut v).unwrap(), 17);
        f.write(&mut v, 0).unwrap();
        assert!(f.decrement(&mut v).is_err());
    }

    proptest! {
        #[test]
        fn gray_roundtrip(val in 0u64..4096) {
            let mut arr = fresh(12);
            let f = GrayField::new(1, 12);
            let mut v = UnitView::new(&mut arr);
            f.write(&mut v, val).unwrap();
            prop_assert_eq!(f.read(&mut v), val);
        }

        #[test]
        fn int_write_is_move_bounded(a in 0u64..256, b in 0u64..256) {
            let mut arr = fresh(8);
            let f = IntField::new(1, 8);
            let mut v = UnitView::new(&mut arr);
            f.write(&mut v, a).unwrap();
            let before = v.arr.counters().moves;
            f.write(&mut v, b).unwrap();
            let changed = (a ^ b).count_ones() as u64;
            prop_assert_eq!(v.arr.counters().moves - before, 2 * changed);
        }
    }
}
