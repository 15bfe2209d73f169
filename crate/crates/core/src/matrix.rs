//! The maintained player-by-task Shapley matrix.
//!
//! Storage is dense and column-major. A cell holds `Some(value)` or `None`
//! for ABSENT; ABSENT is reserved for the self-valuation diagonal, the cell of
//! a proxy task's own player. Players outside a task's support hold an
//! explicit `0.0`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::data::Label;
use crate::error::{Error, Ident, Result};
use crate::ids::{PlayerId, TaskId};

/// How a column was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Provenance {
    ExactLocal,
    Mc,
    Interpolated,
    Reused,
}

/// Shapley values of one task. Players missing from `entries` are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueColumn {
    pub task: TaskId,
    pub entries: BTreeMap<PlayerId, f64>,
    pub provenance: Provenance,
}

impl ValueColumn {
    pub fn new(task: TaskId, provenance: Provenance) -> Self {
        ValueColumn {
            task,
            entries: BTreeMap::new(),
            provenance,
        }
    }

    pub fn get(&self, p: PlayerId) -> f64 {
        self.entries.get(&p).copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.entries.values().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Column {
    task: TaskId,
    values: Vec<Option<f64>>,
    anchor: bool,
    proxy_of: Option<PlayerId>,
    provenance: Provenance,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShapleyMatrix {
    players: Vec<PlayerId>,
    row_of: BTreeMap<PlayerId, usize>,
    columns: Vec<Column>,
    col_of: BTreeMap<TaskId, usize>,
    anchor_order: Vec<TaskId>,
    player_labels: BTreeMap<PlayerId, Label>,
    task_labels: BTreeMap<TaskId, Label>,
}

impl ShapleyMatrix {
    /// An `n x 0` matrix over `players` in the given order.
    pub fn new(players: impl IntoIterator<Item = PlayerId>) -> Result<Self> {
        let mut m = ShapleyMatrix::default();
        for p in players {
            m.append_row(p)?;
        }
        Ok(m)
    }

    pub fn players(&self) -> &[PlayerId] {
        &self.players
    }

    pub fn tasks(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.columns.iter().map(|c| c.task)
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.columns.len()
    }

    pub fn has_player(&self, p: PlayerId) -> bool {
        self.row_of.contains_key(&p)
    }

    pub fn has_task(&self, t: TaskId) -> bool {
        self.col_of.contains_key(&t)
    }

    pub fn row_index(&self, p: PlayerId) -> Result<usize> {
        self.row_of
            .get(&p)
            .copied()
            .ok_or(Error::NotFound(Ident::Player(p)))
    }

    fn col_index(&self, t: TaskId) -> Result<usize> {
        self.col_of
            .get(&t)
            .copied()
            .ok_or(Error::NotFound(Ident::Task(t)))
    }

    /// Stored value of `(p, t)`; `None` is the ABSENT diagonal.
    pub fn get(&self, p: PlayerId, t: TaskId) -> Result<Option<f64>> {
        let j = self.col_index(t)?;
        let i = self.row_index(p)?;
        Ok(self.columns[j].values[i])
    }

    /// Writes one cell. ABSENT cells stay ABSENT.
    pub fn set(&mut self, p: PlayerId, t: TaskId, value: f64) -> Result<()> {
        let j = self.col_index(t)?;
        let i = self.row_index(p)?;
        if !value.is_finite() {
            return Err(Error::InvalidConfig("matrix entries must be finite"));
        }
        let cell = &mut self.columns[j].values[i];
        if cell.is_some() {
            *cell = Some(value);
        }
        Ok(())
    }

    /// Column values in row order.
    pub fn column_values(&self, t: TaskId) -> Result<&[Option<f64>]> {
        Ok(&self.columns[self.col_index(t)?].values)
    }

    /// The column as a map over all non-ABSENT players.
    pub fn column(&self, t: TaskId) -> Result<ValueColumn> {
        let c = &self.columns[self.col_index(t)?];
        let entries = self
            .players
            .iter()
            .zip(&c.values)
            .filter_map(|(p, v)| v.map(|v| (*p, v)))
            .collect();
        Ok(ValueColumn {
            task: t,
            entries,
            provenance: c.provenance,
        })
    }

    pub fn provenance(&self, t: TaskId) -> Result<Provenance> {
        Ok(self.columns[self.col_index(t)?].provenance)
    }

    /// Overwrites column `col.task`: listed players get their value, all other
    /// non-ABSENT players get zero.
    pub fn set_column(&mut self, col: &ValueColumn) -> Result<()> {
        let j = self.col_index(col.task)?;
        check_finite(col)?;
        let c = &mut self.columns[j];
        for (i, p) in self.players.iter().enumerate() {
            if c.values[i].is_some() {
                c.values[i] = Some(col.get(*p));
            }
        }
        c.provenance = col.provenance;
        Ok(())
    }

    pub fn set_provenance(&mut self, t: TaskId, provenance: Provenance) -> Result<()> {
        let j = self.col_index(t)?;
        self.columns[j].provenance = provenance;
        Ok(())
    }

    /// Records that `t` is the proxy task of `player`. Only allowed when the
    /// player's cell is already ABSENT or the player has no row (deleted).
    pub fn set_proxy_of(&mut self, t: TaskId, player: PlayerId) -> Result<()> {
        let j = self.col_index(t)?;
        if let Some(&i) = self.row_of.get(&player) {
            if self.columns[j].values[i].is_some() {
                return Err(Error::InvalidConfig("proxy player cell is not ABSENT"));
            }
        }
        self.columns[j].proxy_of = Some(player);
        Ok(())
    }

    pub fn is_anchor(&self, t: TaskId) -> bool {
        self.col_of
            .get(&t)
            .is_some_and(|&j| self.columns[j].anchor)
    }

    pub fn anchor_order(&self) -> &[TaskId] {
        &self.anchor_order
    }

    /// The player whose proxy task `t` is, if any.
    pub fn proxy_of(&self, t: TaskId) -> Option<PlayerId> {
        self.col_of.get(&t).and_then(|&j| self.columns[j].proxy_of)
    }

    pub fn append_column(&mut self, col: &ValueColumn, as_anchor: bool) -> Result<()> {
        self.insert_column(col, as_anchor, None)
    }

    /// Appends the proxy column of `player`; its own cell becomes ABSENT.
    pub fn append_proxy_column(
        &mut self,
        col: &ValueColumn,
        as_anchor: bool,
        player: PlayerId,
    ) -> Result<()> {
        self.insert_column(col, as_anchor, Some(player))
    }

    fn insert_column(
        &mut self,
        col: &ValueColumn,
        as_anchor: bool,
        proxy_of: Option<PlayerId>,
    ) -> Result<()> {
        if self.col_of.contains_key(&col.task) {
            return Err(Error::AlreadyExists(Ident::Task(col.task)));
        }
        check_finite(col)?;
        let values = self
            .players
            .iter()
            .map(|p| {
                if Some(*p) == proxy_of {
                    None
                } else {
                    Some(col.get(*p))
                }
            })
            .collect();
        self.col_of.insert(col.task, self.columns.len());
        self.columns.push(Column {
            task: col.task,
            values,
            anchor: as_anchor,
            proxy_of,
            provenance: col.provenance,
        });
        if as_anchor {
            self.anchor_order.push(col.task);
        }
        Ok(())
    }

    /// Appends a row of zeros (ABSENT under the player's own proxy column).
    pub fn append_row(&mut self, p: PlayerId) -> Result<()> {
        if self.row_of.contains_key(&p) {
            return Err(Error::AlreadyExists(Ident::Player(p)));
        }
        self.row_of.insert(p, self.players.len());
        self.players.push(p);
        for c in &mut self.columns {
            c.values
                .push(if c.proxy_of == Some(p) { None } else { Some(0.0) });
        }
        Ok(())
    }

    pub fn remove_column(&mut self, t: TaskId) -> Result<()> {
        let j = self.col_index(t)?;
        self.columns.remove(j);
        self.anchor_order.retain(|a| *a != t);
        self.task_labels.remove(&t);
        self.col_of = self
            .columns
            .iter()
            .enumerate()
            .map(|(j, c)| (c.task, j))
            .collect();
        Ok(())
    }

    pub fn remove_row(&mut self, p: PlayerId) -> Result<()> {
        let i = self.row_index(p)?;
        self.players.remove(i);
        for c in &mut self.columns {
            c.values.remove(i);
        }
        self.player_labels.remove(&p);
        self.row_of = self
            .players
            .iter()
            .enumerate()
            .map(|(i, p)| (*p, i))
            .collect();
        Ok(())
    }

    /// Turns an existing column into an anchor, appended at the end of the order.
    pub fn promote_to_anchor(&mut self, t: TaskId) -> Result<()> {
        let j = self.col_index(t)?;
        if !self.columns[j].anchor {
            self.columns[j].anchor = true;
            self.anchor_order.push(t);
        }
        Ok(())
    }

    pub fn set_player_label(&mut self, p: PlayerId, label: Label) {
        self.player_labels.insert(p, label);
    }

    pub fn set_task_label(&mut self, t: TaskId, label: Label) {
        self.task_labels.insert(t, label);
    }

    pub fn player_label(&self, p: PlayerId) -> Option<Label> {
        self.player_labels.get(&p).copied()
    }

    pub fn task_label(&self, t: TaskId) -> Option<Label> {
        self.task_labels.get(&t).copied()
    }

    /// Rebuilds a matrix from raw parts, checking every structural invariant.
    /// `cells[j][i]` is the value of player `i` at task `j`.
    pub fn from_parts(
        players: Vec<PlayerId>,
        tasks: Vec<TaskId>,
        cells: Vec<Vec<Option<f64>>>,
        anchor_order: Vec<TaskId>,
    ) -> Result<Self> {
        let mut m = ShapleyMatrix::new(players.iter().copied())?;
        if cells.len() != tasks.len() {
            return Err(Error::InvalidConfig("column count mismatch"));
        }
        for (t, values) in tasks.iter().zip(cells) {
            if values.len() != players.len() {
                return Err(Error::InvalidConfig("row count mismatch"));
            }
            let absent: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_none()).collect();
            let proxy_of = match absent.as_slice() {
                [] => None,
                [i] if players[*i].0 == t.0 => Some(players[*i]),
                _ => return Err(Error::InvalidConfig("ABSENT cell off the proxy diagonal")),
            };
            if values.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig("matrix entries must be finite"));
            }
            if m.col_of.insert(*t, m.columns.len()).is_some() {
                return Err(Error::AlreadyExists(Ident::Task(*t)));
            }
            m.columns.push(Column {
                task: *t,
                values,
                anchor: false,
                proxy_of,
                provenance: Provenance::Reused,
            });
        }
        for a in &anchor_order {
            let j = m.col_index(*a)?;
            if m.columns[j].anchor {
                return Err(Error::InvalidConfig("duplicate task in anchor order"));
            }
            m.columns[j].anchor = true;
        }
        m.anchor_order = anchor_order;
        Ok(m)
    }

    /// Checks the structural invariants; used by tests and loaders.
    pub fn validate(&self) -> Result<()> {
        for c in &self.columns {
            for (p, v) in self.players.iter().zip(&c.values) {
                match v {
                    None if c.proxy_of != Some(*p) => {
                        return Err(Error::InvalidConfig("ABSENT cell off the proxy diagonal"))
                    }
                    Some(_) if c.proxy_of == Some(*p) => {
                        return Err(Error::InvalidConfig("proxy diagonal must be ABSENT"))
                    }
                    Some(x) if !x.is_finite() => {
                        return Err(Error::InvalidConfig("matrix entries must be finite"))
                    }
                    _ => {}
                }
            }
        }
        let flagged: Vec<TaskId> = self
            .columns
            .iter()
            .filter(|c| c.anchor)
            .map(|c| c.task)
            .collect();
        let mut order = self.anchor_order.clone();
        order.sort_unstable();
        let before = order.len();
        order.dedup();
        let mut flagged_sorted = flagged;
        flagged_sorted.sort_unstable();
        if order.len() != before || order != flagged_sorted {
            return Err(Error::InvalidConfig("anchor order out of sync with anchor flags"));
        }
        Ok(())
    }
}

fn check_finite(col: &ValueColumn) -> Result<()> {
    if col.entries.values().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidConfig("matrix entries must be finite"))
    }
}
