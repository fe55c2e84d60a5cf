use alloc::vec::Vec;

use crate::control::ReceiverId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backlog {
    Infinite,
    Blocks(u64),
}

/// One packet handed out by [`BlockSource`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPacket {
    pub receiver: ReceiverId,
    pub block_id: u64,
    pub index: u32,
}

/// Sequential block sender: all packets of a block go out before the next
/// block starts, and consecutive blocks rotate over the receivers.
#[derive(Debug, Clone)]
pub struct BlockSource {
    block_size: u32,
    receivers: Vec<ReceiverId>,
    next_receiver: usize,
    next_block_id: u64,
    current: Option<OpenBlock>,
    backlog: Backlog,
}

#[derive(Debug, Clone, Copy)]
struct OpenBlock {
    id: u64,
    receiver: ReceiverId,
    sent: u32,
}

impl BlockSource {
    /// Panics if `block_size` is zero or there are no receivers.
    pub fn new(block_size: u32, receivers: Vec<ReceiverId>, backlog: Backlog) -> Self {
        assert!(block_size > 0, "block size must be positive");
        assert!(!receivers.is_empty(), "block source needs a receiver");
        Self { block_size, receivers, next_receiver: 0, next_block_id: 0, current: None, backlog }
    }

    pub fn block_size(&self) -> u32 {
        self.block_size
    }

    /// Blocks not yet started, `None` for an infinite backlog.
    pub fn remaining_blocks(&self) -> Option<u64> {
        match self.backlog {
            Backlog::Infinite => None,
            Backlog::Blocks(n) => Some(n),
        }
    }

    fn open_block(&mut self) -> Option<OpenBlock> {
        if let Backlog::Blocks(n) = &mut self.backlog {
            if *n == 0 {
                return None;
            }
            *n -= 1;
        }
        let block = OpenBlock {
            id: self.next_block_id,
            receiver: self.receivers[self.next_receiver],
            sent: 0,
        };
        self.next_block_id += 1;
        self.next_receiver = (self.next_receiver + 1) % self.receivers.len();
        Some(block)
    }

    /// Up to `quota` packets continuing the current block.
    pub fn next_packets(&mut self, quota: u64) -> Vec<BlockPacket> {
        let mut out = Vec::with_capacity(quota as usize);
        while (out.len() as u64) < quota {
            let mut block = match self.current.take() {
                Some(b) => b,
                None => match self.open_block() {
                    Some(b) => b,
                    None => break,
                },
            };
            let room = (quota - out.len() as u64).min(u64::from(self.block_size - block.sent)) as u32;
            for _ in 0..room {
                out.push(BlockPacket { receiver: block.receiver, block_id: block.id, index: block.sent });
                block.sent += 1;
            }
            if block.sent < self.block_size {
                self.current = Some(block);
            }
        }
        out
    }
}
