use core::fmt;

use crate::ids::{PlayerId, TaskId};

/// Identifier carried by lookup errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ident {
    Player(PlayerId),
    Task(TaskId),
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ident::Player(p) => write!(f, "player {}", p.0),
            Ident::Task(t) => write!(f, "task {}", t.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{0} not found")]
    NotFound(Ident),
    #[error("{0} already exists")]
    AlreadyExists(Ident),
    #[error("{0} was deleted earlier in this run and cannot be reused")]
    IdReused(Ident),
    #[error("duplicate coalition member {}", .0 .0)]
    DuplicateMember(PlayerId),
    #[error("support of size {size} exceeds the exact enumeration limit {limit}")]
    SupportTooLarge { size: usize, limit: usize },
    #[error("model structure has not been fitted")]
    NotFitted,
    #[error("profiles were computed over different player universes")]
    UniverseMismatch,
    #[error("decision paths come from different fitted trees")]
    TreeMismatch,
    #[error("profile kinds do not match")]
    KindMismatch,
    #[error("embedding has zero norm")]
    DegenerateEmbedding,
    #[error("columns have different key sets")]
    KeyMismatch,
    #[error("no label-compatible anchor for task {}", .0 .0)]
    NoCompatibleAnchor(TaskId),
    #[error("anchor budget {k} is invalid for {n} players")]
    InvalidBudget { k: usize, n: usize },
    #[error("{n} players exceed the exact limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("no graph attached to the game")]
    NoGraph,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
