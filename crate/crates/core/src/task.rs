use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Assistive task performed in a trial.
///
/// Only the five named variants belong to the study taxonomy. `Other` keeps
/// whatever a manifest contained so validation can report it instead of
/// failing at parse time.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Task {
    Cleaning,
    DoorOpening,
    DrawerOpening,
    Drinking,
    Feeding,
    Other(String),
}

impl Task {
    pub const ALL: [Task; 5] = [
        Task::Cleaning,
        Task::DoorOpening,
        Task::DrawerOpening,
        Task::Drinking,
        Task::Feeding,
    ];

    pub fn is_known(&self) -> bool {
        !matches!(self, Task::Other(_))
    }

    pub fn as_str(&self) -> &str {
        match self {
            Task::Cleaning => "Cleaning",
            Task::DoorOpening => "DoorOpening",
            Task::DrawerOpening => "DrawerOpening",
            Task::Drinking => "Drinking",
            Task::Feeding => "Feeding",
            Task::Other(s) => s,
        }
    }

    /// Human-readable name as used in tables ("Door Opening").
    pub fn display_name(&self) -> &str {
        match self {
            Task::DoorOpening => "Door Opening",
            Task::DrawerOpening => "Drawer Opening",
            other => other.as_str(),
        }
    }
}

impl From<String> for Task {
    fn from(s: String) -> Self {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, ' ' | '_' | '-'))
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "cleaning" => Task::Cleaning,
            "dooropening" => Task::DoorOpening,
            "draweropening" => Task::DrawerOpening,
            "drinking" => Task::Drinking,
            "feeding" => Task::Feeding,
            _ => Task::Other(s),
        }
    }
}

impl From<Task> for String {
    fn from(t: Task) -> Self {
        t.as_str().to_owned()
    }
}

impl FromStr for Task {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Task::from(s.to_owned()))
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_loose_spellings() {
        assert_eq!("Door Opening".parse::<Task>().unwrap(), Task::DoorOpening);
        assert_eq!("drawer_opening".parse::<Task>().unwrap(), Task::DrawerOpening);
        assert_eq!("FEEDING".parse::<Task>().unwrap(), Task::Feeding);
        assert_eq!(
            "Walking".parse::<Task>().unwrap(),
            Task::Other("Walking".into())
        );
    }

    #[test]
    fn serde_uses_canonical_names() {
        let json = serde_json::to_string(&Task::DoorOpening).unwrap();
        assert_eq!(json, "\"DoorOpening\"");
        let back: Task = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Task::DoorOpening);
    }
}
