use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Ident, Result};

/// A training contributor. Ids share one record namespace with [`TaskId`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct PlayerId(pub u32);

/// An evaluation task. The proxy task of player `p` is `TaskId(p.0)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct TaskId(pub u32);

impl PlayerId {
    pub fn proxy_task(self) -> TaskId {
        TaskId(self.0)
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of players kept in ascending id order, so each coalition has
/// exactly one serialized form.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coalition(Vec<PlayerId>);

impl Coalition {
    pub fn empty() -> Self {
        Coalition(Vec::new())
    }

    /// Builds a coalition, rejecting duplicate members.
    pub fn new(members: impl IntoIterator<Item = PlayerId>) -> Result<Self> {
        let mut v: Vec<PlayerId> = members.into_iter().collect();
        v.sort_unstable();
        if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateMember(w[0]));
        }
        Ok(Coalition(v))
    }

    /// Like [`Coalition::new`] but also checks every member belongs to `universe`.
    pub fn within(
        members: impl IntoIterator<Item = PlayerId>,
        universe: &BTreeSet<PlayerId>,
    ) -> Result<Self> {
        let c = Self::new(members)?;
        if let Some(p) = c.0.iter().find(|p| !universe.contains(p)) {
            return Err(Error::NotFound(Ident::Player(*p)));
        }
        Ok(c)
    }

    pub fn members(&self) -> &[PlayerId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, p: PlayerId) -> bool {
        self.0.binary_search(&p).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = PlayerId> + Clone + '_ {
        self.0.iter().copied()
    }

    /// Members selected by the bits of `mask` (bit `i` picks the `i`-th member).
    pub fn subset(&self, mask: u64) -> Coalition {
        Coalition(
            self.0
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| *p)
                .collect(),
        )
    }

    pub fn with(&self, p: PlayerId) -> Coalition {
        match self.0.binary_search(&p) {
            Ok(_) => self.clone(),
            Err(i) => {
                let mut v = self.0.clone();
                v.insert(i, p);
                Coalition(v)
            }
        }
    }

    pub fn without(&self, p: PlayerId) -> Coalition {
        Coalition(self.0.iter().copied().filter(|q| *q != p).collect())
    }

    pub fn to_set(&self) -> BTreeSet<PlayerId> {
        self.0.iter().copied().collect()
    }

    /// Size of the symmetric difference with `other`.
    pub fn symmetric_difference_len(&self, other: &Coalition) -> usize {
        let a = self.to_set();
        let b = other.to_set();
        a.symmetric_difference(&b).count()
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", p.0)?;
        }
        f.write_str("}")
    }
}

impl<'a> IntoIterator for &'a Coalition {
    type Item = &'a PlayerId;
    type IntoIter = core::slice::Iter<'a, PlayerId>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn p(i: u32) -> PlayerId {
        PlayerId(i)
    }

    #[test]
    fn canonical_order_and_display() {
        let c = Coalition::new([p(5), p(1), p(3)]).unwrap();
        assert_eq!(c.members(), &[p(1), p(3), p(5)]);
        assert_eq!(c.to_string(), "{1,3,5}");
        assert_eq!(c, Coalition::new([p(3), p(5), p(1)]).unwrap());
    }

    #[test]
    fn duplicates_rejected() {
        assert_eq!(
            Coalition::new([p(2), p(2)]),
            Err(Error::DuplicateMember(p(2)))
        );
    }

    #[test]
    fn universe_check() {
        let u: BTreeSet<_> = [p(1), p(2)].into_iter().collect();
        assert!(Coalition::within([p(1)], &u).is_ok());
        assert_eq!(
            Coalition::within([p(1), p(9)], &u),
            Err(Error::NotFound(Ident::Player(p(9))))
        );
    }

    #[test]
    fn subset_with_without() {
        let c = Coalition::new([p(1), p(2), p(4)]).unwrap();
        assert_eq!(c.subset(0b101).members(), &[p(1), p(4)]);
        assert_eq!(c.with(p(3)).members(), &[p(1), p(2), p(3), p(4)]);
        assert_eq!(c.without(p(2)).members(), &[p(1), p(4)]);
        let d = Coalition::new([p(2), p(7)]).unwrap();
        assert_eq!(c.symmetric_difference_len(&d), 3);
    }
}
