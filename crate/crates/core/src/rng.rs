//! Keyed random streams.
//!
//! Every random draw in a run is addressed by `(seed, party, round,
//! purpose)`. The tuple is packed into a ChaCha key, so each message's
//! randomness can be regenerated in isolation and distinct tuples give
//! independent streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a draw is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// Worker compression of the gradient at `y`.
    DualY,
    /// Worker compression of the gradient at `z`.
    DualZ,
    /// Single worker message per round (EF21-P + DIANA).
    Dual,
    /// Server compression of the model correction.
    Primal,
    /// Server coin flip.
    Coin,
    /// Anything else (problem generation, tests).
    Aux(u32),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::DualY => 1,
            Purpose::DualZ => 2,
            Purpose::Dual => 3,
            Purpose::Primal => 4,
            Purpose::Coin => 5,
            Purpose::Aux(k) => 0x100 | u64::from(k),
        }
    }
}

/// Who draws. The server uses a dedicated id outside the worker range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Party {
    Worker(usize),
    Server,
}

impl Party {
    fn id(self) -> u64 {
        match self {
            Party::Worker(i) => i as u64,
            Party::Server => u64::MAX,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for one `(party, round, purpose)` label.
    pub fn draw(&self, party: Party, round: u64, purpose: Purpose) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&party.id().to_le_bytes());
        key[16..24].copy_from_slice(&round.to_le_bytes());
        key[24..32].copy_from_slice(&purpose.tag().to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_label_same_draws() {
        let s = RngStream::new(7);
        let a: Vec<u64> = (0..8)
            .map({
                let mut r = s.draw(Party::Worker(3), 11, Purpose::DualY);
                move |_| r.random()
            })
            .collect();
        let mut r = s.draw(Party::Worker(3), 11, Purpose::DualY);
        let b: Vec<u64> = (0..8).map(|_| r.random()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn labels_are_distinct() {
        let s = RngStream::new(7);
        let first = |p, t, q| s.draw(p, t, q).random::<u64>();
        let base = first(Party::Worker(0), 0, Purpose::DualY);
        assert_ne!(base, first(Party::Worker(1), 0, Purpose::DualY));
        assert_ne!(base, first(Party::Worker(0), 1, Purpose::DualY));
        assert_ne!(base, first(Party::Worker(0), 0, Purpose::DualZ));
        assert_ne!(base, first(Party::Server, 0, Purpose::DualY));
        assert_ne!(base, RngStream::new(8).draw(Party::Worker(0), 0, Purpose::DualY).random::<u64>());
    }
}
