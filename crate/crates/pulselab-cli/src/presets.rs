//! Built-in experiment presets, embedded from the JSON files in `presets/`.

pub const PRESETS: &[(&str, &str)] = &[
    ("fig4-simulate", include_str!("../presets/fig4-simulate.json")),
    ("fig4-spectrum", include_str!("../presets/fig4-spectrum.json")),
    ("fig4-cascade", include_str!("../presets/fig4-cascade.json")),
    ("fig7-simulate", include_str!("../presets/fig7-simulate.json")),
    ("fig8-scaling", include_str!("../presets/fig8-scaling.json")),
    ("fig10-pulse", include_str!("../presets/fig10-pulse.json")),
];

pub fn lookup(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}
