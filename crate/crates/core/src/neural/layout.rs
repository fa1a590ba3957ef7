use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named parameter block of `rows × cols` values, stored row-major in the
/// flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Ordered blocks with their offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub blocks: Vec<Block>,
    pub offsets: Vec<usize>,
    pub total: usize,
}

impl Layout {
    pub fn new(blocks: Vec<Block>) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut total = 0;
        for b in &blocks {
            offsets.push(total);
            total += b.len();
        }
        Self {
            blocks,
            offsets,
            total,
        }
    }

    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k] + self.blocks[k].len()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.blocks
            .iter()
            .position(|b| b.name == name)
            .ok_or_else(|| Error::Contract(format!("no parameter block named {name}")))
    }
}

/// Adds a dense layer `out × inp` plus bias to a block list.
pub(crate) fn dense_blocks(blocks: &mut Vec<Block>, prefix: &str, inp: usize, out: usize) {
    blocks.push(Block {
        name: format!("{prefix}.w"),
        rows: out,
        cols: inp,
    });
    blocks.push(Block {
        name: format!("{prefix}.b"),
        rows: out,
        cols: 1,
    });
}
