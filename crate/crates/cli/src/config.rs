//! Config files are JSON, or TOML when the extension is `.toml`.

use crate::failure::{CliResult, Failure};
use serde::de::DeserializeOwned;
use std::path::Path;

pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    parse(&text, path)
}

pub fn parse<T: DeserializeOwned>(text: &str, path: &Path) -> CliResult<T> {
    let toml = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if toml {
        toml::from_str(text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    } else {
        serde_json::from_str(text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bap_core::generator::GeneratorConfig;
    use bap_core::simulator::{ScenarioConfig, SolverKind};

    #[test]
    fn toml_and_json_agree() {
        let t: GeneratorConfig =
            parse("total_orders = 500\nseed = 3\n", Path::new("g.toml")).unwrap();
        let j: GeneratorConfig =
            parse(r#"{"total_orders": 500, "seed": 3}"#, Path::new("g.json")).unwrap();
        assert_eq!(t, j);
        assert_eq!(t.n_recipes, 100);
    }

    #[test]
    fn scenario_overrides_parse() {
        let text = r#"
solver = "id_based"
days = [-12, -11, -10, -9]

[capacity_overrides]
"-10" = [1000, 5000]

[churn]
delete_fraction = 0.05
modify_fraction = 0.3
"#;
        let s: ScenarioConfig = parse(text, Path::new("s.toml")).unwrap();
        assert_eq!(s.solver, SolverKind::IdBased);
        assert_eq!(s.capacity_overrides[&-10], vec![1000, 5000]);
        s.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let e = parse::<ScenarioConfig>(r#"{"dayz": []}"#, Path::new("s.json")).unwrap_err();
        assert_eq!(e.kind.code(), 2);
    }
}
