//! Built-in scenarios shipped with the binary.

pub const PRESETS: &[(&str, &str)] = &[
    ("rwa-resonant", include_str!("../presets/rwa-resonant.toml")),
    (
        "beyond-rwa-lorentzian",
        include_str!("../presets/beyond-rwa-lorentzian.toml"),
    ),
    (
        "correlated-initial",
        include_str!("../presets/correlated-initial.toml"),
    ),
    ("asymptotic-limit", include_str!("../presets/asymptotic-limit.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn every_preset_validates() {
        for (name, text) in PRESETS {
            let cfg = parse_config(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let sc = cfg.resolve().unwrap();
            assert_eq!(sc.times.len(), cfg.run.samples + 1, "{name}");
        }
        assert!(preset("missing").is_none());
        assert_eq!(preset_names().len(), PRESETS.len());
    }
}
