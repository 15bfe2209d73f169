use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::combin::binomial_row;
use crate::error::{Error, Result};
use crate::estimators::{CoalitionGame, HARD_LIMIT};
use crate::ids::{Coalition, PlayerId};

/// Values of a local game after its support grows by one player, expressed
/// against the old values.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneCorrection {
    /// Value of the inserted player in the enlarged game.
    pub new_value: f64,
    /// Additive change of every old support member.
    pub deltas: BTreeMap<PlayerId, f64>,
    pub evaluations: u64,
}

/// Corrections when the support `old` becomes `old + {added}`.
///
/// With `n = |old|`, the inserted player gets
/// `1/(n+1) sum_{S in old} [v(S+z') - v(S)] / C(n, |S|)` and member `j`
/// changes by `1/(n+1) sum_{S in old - j} [m_j(S+z') - m_j(S)] / C(n, |S|+1)`
/// where `m_j(S) = v(S+j) - v(S)`.
pub fn monotone_correction<G: CoalitionGame + ?Sized>(
    game: &mut G,
    old: &Coalition,
    added: PlayerId,
) -> Result<MonotoneCorrection> {
    let n = old.len();
    if n >= HARD_LIMIT {
        return Err(Error::SupportTooLarge {
            size: n + 1,
            limit: HARD_LIMIT,
        });
    }
    if old.contains(added) {
        return Err(Error::DuplicateMember(added));
    }
    let full = 1u64 << n;
    let mut without = Vec::with_capacity(full as usize);
    let mut with = Vec::with_capacity(full as usize);
    for mask in 0..full {
        let s = old.subset(mask);
        without.push(game.value(&s)?);
        with.push(game.value(&s.with(added))?);
    }
    let row = binomial_row(n);
    let scale = 1.0 / (n as f64 + 1.0);
    let new_value = scale
        * (0..full)
            .map(|m| (with[m as usize] - without[m as usize]) / row[m.count_ones() as usize])
            .sum::<f64>();
    let deltas = old
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let bit = 1u64 << j;
            let d: f64 = (0..full)
                .filter(|m| m & bit == 0)
                .map(|m| {
                    let (a, b) = (m as usize, (m | bit) as usize);
                    let change = (with[b] - with[a]) - (without[b] - without[a]);
                    change / row[m.count_ones() as usize + 1]
                })
                .sum();
            (p, scale * d)
        })
        .collect();
    Ok(MonotoneCorrection {
        new_value,
        deltas,
        evaluations: 2 * full,
    })
}
