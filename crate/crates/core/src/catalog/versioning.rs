use std::fmt;

use serde::{Deserialize, Serialize};

/// Flags describing how a model changed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChangeSet {
    #[serde(default)]
    pub hyperparameters_changed: bool,
    #[serde(default)]
    pub training_data_changed: bool,
    #[serde(default)]
    pub training_process_changed: bool,
    #[serde(default)]
    pub minor_refactor: bool,
    #[serde(default)]
    pub algorithm_changed: bool,
    #[serde(default)]
    pub architecture_changed: bool,
    #[serde(default)]
    pub problem_definition_changed: bool,
    #[serde(default)]
    pub domain_changed: bool,
}

impl ChangeSet {
    pub const FLAGS: [&'static str; 8] = [
        "hyperparameters_changed",
        "training_data_changed",
        "training_process_changed",
        "minor_refactor",
        "algorithm_changed",
        "architecture_changed",
        "problem_definition_changed",
        "domain_changed",
    ];

    /// Builds a change set from the low 8 bits, in `FLAGS` order.
    pub fn from_bits(bits: u8) -> ChangeSet {
        let b = |i: u8| bits & (1 << i) != 0;
        ChangeSet {
            hyperparameters_changed: b(0),
            training_data_changed: b(1),
            training_process_changed: b(2),
            minor_refactor: b(3),
            algorithm_changed: b(4),
            architecture_changed: b(5),
            problem_definition_changed: b(6),
            domain_changed: b(7),
        }
    }

    pub fn bits(&self) -> u8 {
        [
            self.hyperparameters_changed,
            self.training_data_changed,
            self.training_process_changed,
            self.minor_refactor,
            self.algorithm_changed,
            self.architecture_changed,
            self.problem_definition_changed,
            self.domain_changed,
        ]
        .iter()
        .enumerate()
        .fold(0, |acc, (i, f)| if *f { acc | (1 << i) } else { acc })
    }

    /// Sets the named flag; returns false for unknown names.
    pub fn set(&mut self, flag: &str) -> bool {
        match Self::FLAGS.iter().position(|f| *f == flag) {
            Some(i) => {
                *self = ChangeSet::from_bits(self.bits() | (1 << i));
                true
            }
            None => false,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.bits() == 0
    }

    pub fn has_model_level_change(&self) -> bool {
        self.algorithm_changed || self.architecture_changed || self.problem_definition_changed || self.domain_changed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChangeClass {
    NewVersion,
    NewModel,
}

impl fmt::Display for ChangeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChangeClass::NewVersion => "NewVersion",
            ChangeClass::NewModel => "NewModel",
        })
    }
}

/// Classification rule; `None` for an empty change set.
pub fn classify(change: &ChangeSet) -> Option<ChangeClass> {
    if change.is_empty() {
        None
    } else if change.has_model_level_change() {
        Some(ChangeClass::NewModel)
    } else {
        Some(ChangeClass::NewVersion)
    }
}
