//! Route library and scenario catalog files.
//!
//! A route library is `{"suite": name, "routes": [RouteDef]}`; a scenario
//! catalog is `{"suite": name, "episodes": [EpisodeDef]}`.

use std::path::Path;

use drivebench_core::catalog::{builtin, Catalog, EpisodeDef, RouteDef, BUILTIN_SUITES};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::fsutil::{read_json, to_json_pretty, write_atomic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteLibrary {
    pub suite: String,
    pub routes: Vec<RouteDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioCatalog {
    pub suite: String,
    pub episodes: Vec<EpisodeDef>,
}

pub fn split(catalog: &Catalog) -> (RouteLibrary, ScenarioCatalog) {
    (
        RouteLibrary { suite: catalog.name.clone(), routes: catalog.routes.clone() },
        ScenarioCatalog { suite: catalog.name.clone(), episodes: catalog.episodes.clone() },
    )
}

/// Resolves `routes` as a built-in suite name or a library path, and
/// `scenarios` as a catalog path. Without `scenarios`, `routes` must name a
/// built-in suite.
pub fn load_catalog(routes: &str, scenarios: Option<&str>) -> Result<Catalog> {
    let catalog = match (builtin(routes), scenarios) {
        (Some(c), None) => c,
        (_, Some(sc)) => {
            let lib: RouteLibrary = match builtin(routes) {
                Some(c) => split(&c).0,
                None => read_json(Path::new(routes))?,
            };
            let cat: ScenarioCatalog = read_json(Path::new(sc))?;
            Catalog { name: cat.suite, routes: lib.routes, episodes: cat.episodes }
        }
        (None, None) => {
            return Err(HarnessError::Config(format!(
                "'{routes}' is not a built-in suite ({}); pass a scenario catalog for a route library file",
                BUILTIN_SUITES.join(", ")
            )))
        }
    };
    catalog.validate()?;
    Ok(catalog)
}

/// Writes `routes/<suite>.json` and `scenarios/<suite>.json` under `root`.
pub fn export_catalog(catalog: &Catalog, root: &Path) -> Result<()> {
    let (lib, cat) = split(catalog);
    let file = format!("{}.json", catalog.name);
    write_atomic(&root.join("routes").join(&file), to_json_pretty(&lib).as_bytes())?;
    write_atomic(&root.join("scenarios").join(&file), to_json_pretty(&cat).as_bytes())
}
