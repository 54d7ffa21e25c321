//! Discrete size ladders ("granules"). Every tunable size lives on one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly ascending, nonempty list of permitted sizes in MB.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Ladder(Vec<u32>);

impl Ladder {
    pub fn new(rungs: Vec<u32>) -> Result<Self> {
        if rungs.is_empty() {
            return Err(Error::config("ladder must not be empty"));
        }
        if rungs[0] == 0 {
            return Err(Error::config("ladder rungs must be positive"));
        }
        if rungs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(format!(
                "ladder must be strictly ascending: {rungs:?}"
            )));
        }
        Ok(Ladder(rungs))
    }

    pub fn rungs(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bottom(&self) -> u32 {
        self.0[0]
    }

    pub fn top(&self) -> u32 {
        self.0[self.0.len() - 1]
    }

    pub fn contains(&self, size: u32) -> bool {
        self.index_of(size).is_some()
    }

    pub fn index_of(&self, size: u32) -> Option<usize> {
        self.0.binary_search(&size).ok()
    }

    /// Index of `size`, or a ladder-violation error.
    pub fn require(&self, size: u32) -> Result<usize> {
        self.index_of(size).ok_or_else(|| Error::LadderViolation {
            size,
            ladder: self.0.clone(),
        })
    }

    pub fn rung(&self, index: usize) -> u32 {
        self.0[index]
    }

    /// Smallest rung `>= value`; values above the top clamp to the top rung.
    pub fn round_up(&self, value: f64) -> u32 {
        self.0
            .iter()
            .copied()
            .find(|&r| f64::from(r) >= value)
            .unwrap_or_else(|| self.top())
    }

    pub fn next_up(&self, size: u32) -> Option<u32> {
        let i = self.index_of(size)?;
        self.0.get(i + 1).copied()
    }

    pub fn next_down(&self, size: u32) -> Option<u32> {
        let i = self.index_of(size)?;
        i.checked_sub(1).map(|j| self.0[j])
    }
}

impl TryFrom<Vec<u32>> for Ladder {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        Ladder::new(v)
    }
}

impl From<Ladder> for Vec<u32> {
    fn from(l: Ladder) -> Self {
        l.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn buffer() -> Ladder {
        Ladder::new(vec![4, 8, 16, 32, 64, 128, 256]).unwrap()
    }

    #[test]
    fn rejects_bad_ladders() {
        assert!(Ladder::new(vec![]).is_err());
        assert!(Ladder::new(vec![4, 4]).is_err());
        assert!(Ladder::new(vec![8, 4]).is_err());
        assert!(Ladder::new(vec![0, 4]).is_err());
    }

    #[test]
    fn round_up_picks_next_rung() {
        let l = buffer();
        assert_eq!(l.round_up(9.3), 16);
        assert_eq!(l.round_up(8.0), 8);
        assert_eq!(l.round_up(-3.0), 4);
        assert_eq!(l.round_up(1e6), 256);
        assert_eq!(l.round_up(256.0), 256);
    }

    #[test]
    fn neighbours() {
        let l = buffer();
        assert_eq!(l.next_up(8), Some(16));
        assert_eq!(l.next_up(256), None);
        assert_eq!(l.next_down(4), None);
        assert_eq!(l.next_down(16), Some(8));
        assert_eq!(l.next_up(9), None);
        assert!(matches!(
            l.require(9),
            Err(Error::LadderViolation { size: 9, .. })
        ));
    }

    #[test]
    fn deserialize_validates() {
        assert!(serde_json::from_str::<Ladder>("[4, 8]").is_ok());
        assert!(serde_json::from_str::<Ladder>("[8, 4]").is_err());
    }
}
