//! Resource caps shared by the evaluators and the tree unfolder.

use thiserror::Error;

/// Limits guarding the exponential parts of the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Maximum number of tree-states in a structure handed to the evaluator.
    pub max_states: usize,
    /// Maximum order of any binder or state type.
    pub max_order: usize,
    /// Maximum number of arguments of any binder or state type.
    pub max_args: usize,
    /// Maximum prefix depth when unfolding trees.
    pub max_depth: usize,
    /// Maximum size of an enumerated semantic domain.
    pub max_domain: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_states: 4, max_order: 1, max_args: 2, max_depth: 20, max_domain: 1 << 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed caps `{0}`: expected comma-separated key=value with keys states, order, args, depth, domain")]
pub struct CapsParseError(pub String);

impl Caps {
    /// No structural limits; only the domain-size guard stays in place.
    pub fn unrestricted() -> Self {
        Caps {
            max_states: usize::MAX,
            max_order: usize::MAX,
            max_args: usize::MAX,
            max_depth: 40,
            max_domain: 1 << 22,
        }
    }

    /// Applies `states=..,order=..,depth=..` style overrides on top of `self`.
    pub fn with_overrides(mut self, list: &str) -> Result<Self, CapsParseError> {
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| CapsParseError(list.to_string()))?;
            let v: usize = v.trim().parse().map_err(|_| CapsParseError(list.to_string()))?;
            match k.trim() {
                "states" => self.max_states = v,
                "order" => self.max_order = v,
                "args" => self.max_args = v,
                "depth" => self.max_depth = v,
                "domain" => self.max_domain = v,
                _ => return Err(CapsParseError(list.to_string())),
            }
        }
        Ok(self)
    }

    /// Defaults overridden by the `APKA_CAPS` environment variable, if set.
    pub fn from_env() -> Result<Self, CapsParseError> {
        match std::env::var("APKA_CAPS") {
            Ok(s) => Caps::default().with_overrides(&s),
            Err(_) => Ok(Caps::default()),
        }
    }
}
