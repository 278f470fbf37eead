use std::fmt;
use std::str::FromStr;

/// The four score functions expressed as `g(W1·h + b, W2·t)` with diagonal or
/// identity relation operators.
///
/// | model    | W1       | b | W2 | g             | space |
/// |----------|----------|---|----|---------------|-------|
/// | TransE   | I        | r | I  | -‖q - k‖      | real  |
/// | DistMult | diag(r)  | 0 | I  | qᵀk           | real  |
/// | ComplEx  | diag(r)  | 0 | I  | Re(qᵀ conj k) | complex |
/// | RotatE   | diag(e^{iθ}) | 0 | I | -‖q - k‖  | complex |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    TransE,
    DistMult,
    ComplEx,
    RotatE,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Real,
    Complex,
}

/// Norm used by the distance-based similarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Norm {
    L1,
    #[default]
    L2,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::TransE,
        ModelKind::DistMult,
        ModelKind::ComplEx,
        ModelKind::RotatE,
    ];

    pub fn space(self) -> SpaceKind {
        match self {
            ModelKind::TransE | ModelKind::DistMult => SpaceKind::Real,
            ModelKind::ComplEx | ModelKind::RotatE => SpaceKind::Complex,
        }
    }

    /// True when `g` is a negated distance, so scores are never positive.
    pub fn is_distance(self) -> bool {
        matches!(self, ModelKind::TransE | ModelKind::RotatE)
    }

    /// Width of a realified entity row for complex dimension or real
    /// dimension `dim`.
    pub fn entity_width(self, dim: usize) -> usize {
        match self.space() {
            SpaceKind::Real => dim,
            SpaceKind::Complex => 2 * dim,
        }
    }

    /// Stored relation row width. RotatE stores one phase per dimension.
    pub fn relation_width(self, dim: usize) -> usize {
        match self {
            ModelKind::TransE | ModelKind::DistMult | ModelKind::RotatE => dim,
            ModelKind::ComplEx => 2 * dim,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ModelKind::TransE => 0,
            ModelKind::DistMult => 1,
            ModelKind::ComplEx => 2,
            ModelKind::RotatE => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TransE => "transe",
            ModelKind::DistMult => "distmult",
            ModelKind::ComplEx => "complex",
            ModelKind::RotatE => "rotate",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("unknown model '{s}' (expected transe, distmult, complex or rotate)")
            })
    }
}

impl SpaceKind {
    pub fn code(self) -> u8 {
        match self {
            SpaceKind::Real => 0,
            SpaceKind::Complex => 1,
        }
    }
}

impl Norm {
    pub fn name(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
        }
    }
}

impl FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            _ => Err(format!("unknown norm '{s}' (expected l1 or l2)")),
        }
    }
}
