//! Negative sampling: distance-aware pre-sampling and post-sampling weights.

pub mod presampler;
pub mod weights;

use std::fmt;
use std::str::FromStr;

pub use presampler::PreSampler;
pub use weights::{post_weights, selfadv_weights, softmax, PostWeighting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerMode {
    Uniform,
    SelfAdv,
    ReD,
}

impl SamplerMode {
    pub fn name(self) -> &'static str {
        match self {
            SamplerMode::Uniform => "uniform",
            SamplerMode::SelfAdv => "selfadv",
            SamplerMode::ReD => "red",
        }
    }
}

impl fmt::Display for SamplerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(SamplerMode::Uniform),
            "selfadv" | "self-adv" => Ok(SamplerMode::SelfAdv),
            "red" => Ok(SamplerMode::ReD),
            _ => Err(format!(
                "unknown sampler '{s}' (expected uniform, selfadv or red)"
            )),
        }
    }
}

/// Which score the post-sampling weights are computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PostWeightScore {
    #[default]
    Fg,
    Combined,
}

impl FromStr for PostWeightScore {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fg" => Ok(PostWeightScore::Fg),
            "f" | "combined" => Ok(PostWeightScore::Combined),
            _ => Err(format!(
                "unknown post-weight score '{s}' (expected fg or f)"
            )),
        }
    }
}

impl PostWeightScore {
    pub fn name(self) -> &'static str {
        match self {
            PostWeightScore::Fg => "fg",
            PostWeightScore::Combined => "f",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub mode: SamplerMode,
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub tau: f64,
    pub negatives: usize,
    /// Replace distance pre-sampling with uniform pre-sampling.
    pub no_pre: bool,
    /// Replace ReD post-weights with self-adversarial ones.
    pub no_post: bool,
    pub score: PostWeightScore,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            mode: SamplerMode::ReD,
            alpha0: 1.0,
            alpha1: 1.0,
            alpha2: 1.0,
            tau: 1.0,
            negatives: 64,
            no_pre: false,
            no_post: false,
            score: PostWeightScore::Fg,
        }
    }
}

impl SamplerConfig {
    /// Whether negatives are pre-sampled by graph distance.
    pub fn uses_distance_presampling(&self) -> bool {
        self.mode == SamplerMode::ReD && !self.no_pre
    }

    pub fn post_weighting(&self) -> PostWeighting {
        match self.mode {
            SamplerMode::Uniform => PostWeighting::Uniform,
            SamplerMode::SelfAdv => PostWeighting::SelfAdv {
                alpha1: self.alpha1,
            },
            SamplerMode::ReD if self.no_post => PostWeighting::SelfAdv {
                alpha1: self.alpha1,
            },
            SamplerMode::ReD => PostWeighting::ReD {
                alpha1: self.alpha1,
                alpha2: self.alpha2,
                tau: self.tau,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablations_map_to_component_choices() {
        let red = SamplerConfig::default();
        assert!(red.uses_distance_presampling());
        assert!(matches!(red.post_weighting(), PostWeighting::ReD { .. }));
        let no_pre = SamplerConfig {
            no_pre: true,
            ..red
        };
        assert!(!no_pre.uses_distance_presampling());
        assert!(matches!(no_pre.post_weighting(), PostWeighting::ReD { .. }));
        let no_post = SamplerConfig {
            no_post: true,
            ..red
        };
        assert!(no_post.uses_distance_presampling());
        assert!(matches!(
            no_post.post_weighting(),
            PostWeighting::SelfAdv { .. }
        ));
        let adv = SamplerConfig {
            mode: SamplerMode::SelfAdv,
            ..red
        };
        assert!(!adv.uses_distance_presampling());
    }
}
