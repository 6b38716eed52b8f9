//! Built-in scenarios. The JSON sources live in `presets/` and are embedded
//! at compile time.

use crate::config::ScenarioConfig;
use crate::CliError;

pub const PRESETS: [(&str, &str); 3] = [
    ("fig2-entropy", include_str!("../presets/fig2-entropy.json")),
    ("fig3-sx", include_str!("../presets/fig3-sx.json")),
    ("fig4-eightcat", include_str!("../presets/fig4-eightcat.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// The named preset, optionally with its environment seed replaced.
pub fn preset(name: &str, seed: Option<u64>) -> Result<ScenarioConfig, CliError> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::UnknownPreset(name.to_string()))?;
    let mut config = ScenarioConfig::from_json_str(text)?;
    if let Some(seed) = seed {
        config.environment.seed = seed;
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for name in names() {
            let c = preset(name, None).unwrap();
            assert_eq!(c.name.as_deref(), Some(name));
        }
        assert_eq!(preset("fig2-entropy", Some(9)).unwrap().environment.seed, 9);
        assert!(matches!(preset("nope", None), Err(CliError::UnknownPreset(_))));
    }
}
