use crate::scenario::Scenario;

macro_rules! bundle {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../scenarios/", $name, ".json")))),*]
    };
}

/// `(name, json)` pairs compiled into the binary.
pub const SOURCES: &[(&str, &str)] = bundle![
    "french_fig1",
    "static_sia_family",
    "quasi_strong_rai_oscillation",
    "counterexample_eq21",
    "delay_2agent_oscillation",
    "gossip_silence_ring",
    "gossip_ring_checks",
    "hk_pure",
    "hk_truth_seekers",
    "altafini_balanced",
    "altafini_unbalanced",
    "solve_linear_nedic",
    "solve_linear_morse",
    "solve_linear_tempo",
    "substochastic_stability_grid",
];

pub fn names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(n, _)| *n)
}

pub fn get(name: &str) -> Option<Scenario> {
    SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Scenario::parse(text).expect("bundled scenarios are valid"))
}

pub fn catalog() -> Vec<Scenario> {
    SOURCES.iter().map(|(_, text)| Scenario::parse(text).expect("bundled scenarios are valid")).collect()
}
