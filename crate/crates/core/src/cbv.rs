use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ContentError;

/// Fixed-width row of cluster bits. Bit `i` names cluster `i`; the textual
/// form prints the highest index first, so bit 0 is the rightmost character.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClusterBitVector {
    width: usize,
    words: Vec<u64>,
}

impl ClusterBitVector {
    pub fn new(width: usize) -> Self {
        ClusterBitVector {
            width,
            words: vec![0; width.div_ceil(64)],
        }
    }

    /// Vector with only bit `index` set.
    pub fn single(width: usize, index: usize) -> Result<Self, ContentError> {
        let mut v = Self::new(width);
        v.set_bit(index)?;
        Ok(v)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn check(&self, index: usize) -> Result<(), ContentError> {
        if index < self.width {
            Ok(())
        } else {
            Err(ContentError::BitOutOfRange {
                index,
                width: self.width,
            })
        }
    }

    pub fn set_bit(&mut self, index: usize) -> Result<(), ContentError> {
        self.check(index)?;
        self.words[index / 64] |= 1 << (index % 64);
        Ok(())
    }

    pub fn clear_bit(&mut self, index: usize) -> Result<(), ContentError> {
        self.check(index)?;
        self.words[index / 64] &= !(1 << (index % 64));
        Ok(())
    }

    /// Out-of-range indexes read as unset.
    pub fn get(&self, index: usize) -> bool {
        index < self.width && self.words[index / 64] & (1 << (index % 64)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Set indexes in ascending order.
    pub fn set_indexes(&self) -> Vec<usize> {
        (0..self.width).filter(|&i| self.get(i)).collect()
    }

    /// Parses the right-to-left textual form, e.g. `"011"`.
    pub fn parse(text: &str) -> Result<Self, ContentError> {
        let width = text.len();
        let mut v = Self::new(width);
        for (pos, ch) in text.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => v.set_bit(width - 1 - pos)?,
                _ => {
                    return Err(ContentError::Syntax {
                        text: text.to_string(),
                        reason: "cluster bit vectors contain only 0 and 1".into(),
                    })
                }
            }
        }
        Ok(v)
    }
}

impl fmt::Display for ClusterBitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.width).rev() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}
