//! The bundled warehouse fixture must equal what the generator produces.
//!
//! Run with `PALLETMAP_BLESS=1` to rewrite the files after changing the
//! generator.

use std::path::PathBuf;

use palletmap_core::synthetic::{fixture_files, FixtureVariant};

fn fixture_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/warehouse")
}

fn check(variant: FixtureVariant, name: &str) {
    let dir = fixture_root().join(name);
    let bless = std::env::var_os("PALLETMAP_BLESS").is_some();
    for file in fixture_files(variant).unwrap() {
        let path = dir.join(&file.path);
        if bless {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &file.contents).unwrap();
            continue;
        }
        let on_disk = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(on_disk, file.contents, "{} is stale; rerun with PALLETMAP_BLESS=1", path.display());
    }
}

#[test]
fn clean_fixture_is_current() {
    check(FixtureVariant::Clean, "clean");
}

#[test]
fn perturbed_fixture_is_current() {
    check(FixtureVariant::Perturbed, "perturbed");
}
