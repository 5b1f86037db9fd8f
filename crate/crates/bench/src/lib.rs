//! Fixtures shared by the benchmarks.

use std::collections::BTreeMap;

use mce_core::{make_surface, AmbientPoint, Submanifold};

/// A zoo surface with default parameters, centered at the origin.
pub fn fixture(name: &str) -> (Submanifold, AmbientPoint) {
    let entry = make_surface(name, &BTreeMap::new()).expect("zoo surface");
    let y0 = AmbientPoint::origin(entry.surface.ambient_dim());
    (entry.surface, y0)
}
