// SPDX-License-Identifier: Apache-2.0

use crate::graph::NodeId;

use super::WalkError;

/// Fibonacci hashing multiplier.
pub const FIB64: u64 = 0x9E37_79B9_7F4A_7C15;

const EMPTY: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Slot {
    key: u32,
    value: u32,
}

/// Fixed-capacity open-addressing map from pin ID to visit count.
///
/// Capacity is a power of two and never grows; inserts that would push the load factor
/// above one half fail with [`WalkError::CounterFull`]. Probing is linear from the
/// multiplicative hash `(key * FIB64) >> (64 - log2(capacity))`.
#[derive(Debug, Clone)]
pub struct VisitCounter {
    slots: Vec<Slot>,
    shift: u32,
    len: usize,
}

impl VisitCounter {
    /// Counter with `capacity` slots, rounded up to a power of two (minimum 2).
    pub fn with_capacity(capacity: usize) -> Self {
        let capacity = capacity.max(2).next_power_of_two();
        VisitCounter {
            slots: vec![Slot { key: EMPTY, value: 0 }; capacity],
            shift: 64 - capacity.trailing_zeros(),
            len: 0,
        }
    }

    /// Counter able to hold `max_keys` distinct keys at load factor ≤ 0.5.
    pub fn for_keys(max_keys: u64) -> Self {
        Self::with_capacity((max_keys.max(1) as usize).saturating_mul(2))
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    /// Number of distinct keys.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Home slot of `key`.
    #[inline]
    pub fn home_slot(&self, key: NodeId) -> usize {
        ((key.0 as u64).wrapping_mul(FIB64) >> self.shift) as usize
    }

    /// Adds one visit to `key` and returns its new count.
    #[inline]
    pub fn increment(&mut self, key: NodeId) -> Result<u32, WalkError> {
        debug_assert_ne!(key.0, EMPTY);
        let capacity = self.slots.len();
        let mask = capacity - 1;
        let mut i = self.home_slot(key);
        loop {
            let slot = &mut self.slots[i];
            if slot.key == key.0 {
                slot.value += 1;
                return Ok(slot.value);
            }
            if slot.key == EMPTY {
                if (self.len + 1) * 2 > capacity {
                    return Err(WalkError::CounterFull { capacity });
                }
                slot.key = key.0;
                slot.value = 1;
                self.len += 1;
                return Ok(1);
            }
            i = (i + 1) & mask;
        }
    }

    /// Visit count of `key`, zero if never incremented.
    pub fn get(&self, key: NodeId) -> u32 {
        let mask = self.slots.len() - 1;
        let mut i = self.home_slot(key);
        loop {
            let slot = &self.slots[i];
            if slot.key == key.0 {
                return slot.value;
            }
            if slot.key == EMPTY {
                return 0;
            }
            i = (i + 1) & mask;
        }
    }

    /// Occupied `(key, count)` pairs in slot order.
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, u32)> + '_ {
        self.slots
            .iter()
            .filter(|s| s.key != EMPTY)
            .map(|s| (NodeId(s.key), s.value))
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.iter().map(|(_, v)| v as u64).sum()
    }
}
