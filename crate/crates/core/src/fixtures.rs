//! Named fixtures. The JSON files under `fixtures/` are embedded here and
//! paired with the builders that produce the same objects.

use std::sync::Arc;

use crate::complex::{self, CellComplex, ComplexFile};
use crate::dynamics::{SystemFile, TorusSystem};
use crate::quotient::{self, MapFile, QuotientMap};
use crate::rational::Rotation;
use crate::spectral::{ROTATION_TOL, WARPED_TOL};

macro_rules! fixture {
    ($dir:literal, $name:literal) => {
        include_str!(concat!("../../../fixtures/", $dir, "/", $name, ".json"))
    };
}

pub struct ComplexFixture {
    pub name: &'static str,
    pub json: &'static str,
    pub build: fn() -> CellComplex,
}

pub struct MapFixture {
    pub name: &'static str,
    pub json: &'static str,
    pub domain: &'static str,
    pub codomain: &'static str,
    pub build: fn() -> QuotientMap,
}

/// A torus system with the model complex its bound is checked against.
pub struct SystemFixture {
    pub name: &'static str,
    pub json: &'static str,
    pub model: &'static str,
    pub kmax: usize,
    pub tol: f64,
    pub build: fn() -> TorusSystem,
}

fn c8() -> CellComplex {
    complex::cycle(8).unwrap()
}

pub const COMPLEXES: &[ComplexFixture] = &[
    ComplexFixture { name: "c4", json: fixture!("complexes", "c4"), build: || complex::cycle(4).unwrap() },
    ComplexFixture { name: "c8", json: fixture!("complexes", "c8"), build: c8 },
    ComplexFixture { name: "c8_arc_collapsed", json: fixture!("complexes", "c8_arc_collapsed"), build: || complex::cycle(7).unwrap() },
    ComplexFixture { name: "cube_surface", json: fixture!("complexes", "cube_surface"), build: complex::cube_surface },
    ComplexFixture { name: "torus_1_4", json: fixture!("complexes", "torus_1_4"), build: || complex::torus_grid(1, 4).unwrap() },
    ComplexFixture { name: "torus_1_8", json: fixture!("complexes", "torus_1_8"), build: || complex::torus_grid(1, 8).unwrap() },
    ComplexFixture { name: "torus_1_256", json: fixture!("complexes", "torus_1_256"), build: || complex::torus_grid(1, 256).unwrap() },
    ComplexFixture { name: "torus_2_4", json: fixture!("complexes", "torus_2_4"), build: || complex::torus_grid(2, 4).unwrap() },
    ComplexFixture { name: "torus_2_8", json: fixture!("complexes", "torus_2_8"), build: || complex::torus_grid(2, 8).unwrap() },
    ComplexFixture { name: "two_circles", json: fixture!("complexes", "two_circles"), build: || c8().disjoint_union(&c8()) },
    ComplexFixture { name: "wedge_3_4", json: fixture!("complexes", "wedge_3_4"), build: || complex::wedge_circles(3, 4).unwrap() },
];

pub const MAPS: &[MapFixture] = &[
    MapFixture {
        name: "arc_collapse_c8",
        json: fixture!("maps", "arc_collapse_c8"),
        domain: "c8",
        codomain: "c8_arc_collapsed",
        build: || quotient::collapse(Arc::new(c8()), &complex::VertexSet::new([0, 1])).unwrap(),
    },
    MapFixture {
        name: "doubling_c8",
        json: fixture!("maps", "doubling_c8"),
        domain: "c8",
        codomain: "c4",
        build: || quotient::cycle_cover(8, 4).unwrap(),
    },
];

fn golden() -> Rotation {
    Rotation::parse("0.6180339887").unwrap()
}

pub const SYSTEMS: &[SystemFixture] = &[
    SystemFixture {
        name: "doubling_circle",
        json: fixture!("systems", "doubling_circle"),
        model: "torus_1_8",
        kmax: 8,
        tol: ROTATION_TOL,
        build: || TorusSystem::doubling(256).unwrap(),
    },
    SystemFixture {
        name: "identity_t2",
        json: fixture!("systems", "identity_t2"),
        model: "torus_2_4",
        kmax: 3,
        tol: ROTATION_TOL,
        build: || TorusSystem::identity(2, 64).unwrap(),
    },
    SystemFixture {
        name: "rational_circle",
        json: fixture!("systems", "rational_circle"),
        model: "torus_1_8",
        kmax: 8,
        tol: ROTATION_TOL,
        build: || TorusSystem::rotation(vec![Rotation::parse("3/8").unwrap()], 64).unwrap(),
    },
    SystemFixture {
        name: "rotation_circle",
        json: fixture!("systems", "rotation_circle"),
        model: "torus_1_8",
        kmax: 8,
        tol: ROTATION_TOL,
        build: || TorusSystem::rotation(vec![golden()], 256).unwrap(),
    },
    SystemFixture {
        name: "rotation_t2",
        json: fixture!("systems", "rotation_t2"),
        model: "torus_2_4",
        kmax: 5,
        tol: ROTATION_TOL,
        build: || TorusSystem::rotation(vec![golden(), Rotation::parse("0.4142135624").unwrap()], 256).unwrap(),
    },
    SystemFixture {
        name: "warped_t2",
        json: fixture!("systems", "warped_t2"),
        model: "torus_2_4",
        kmax: 5,
        tol: WARPED_TOL,
        build: || TorusSystem::warped_product(golden(), 256).unwrap(),
    },
];

fn parse_complex(json: &str) -> CellComplex {
    let file: ComplexFile = serde_json::from_str(json).expect("embedded complex fixture parses");
    CellComplex::from_file(&file).expect("embedded complex fixture is valid")
}

/// The complex fixture `name`, parsed from its embedded JSON.
pub fn complex(name: &str) -> Option<CellComplex> {
    COMPLEXES.iter().find(|f| f.name == name).map(|f| parse_complex(f.json))
}

/// The map fixture `name`, with domain and codomain resolved by fixture name.
pub fn map(name: &str) -> Option<QuotientMap> {
    let f = MAPS.iter().find(|f| f.name == name)?;
    let file: MapFile = serde_json::from_str(f.json).expect("embedded map fixture parses");
    let domain = Arc::new(complex(f.domain)?);
    let codomain = Arc::new(complex(f.codomain)?);
    Some(QuotientMap::new(domain, codomain, file.assignment).expect("embedded map fixture is valid"))
}

pub fn system(name: &str) -> Option<TorusSystem> {
    let f = SYSTEMS.iter().find(|f| f.name == name)?;
    let file: SystemFile = serde_json::from_str(f.json).expect("embedded system fixture parses");
    Some(TorusSystem::from_file(&file).expect("embedded system fixture is valid"))
}

/// Same cells up to edge order and square orientation.
pub fn same_cells(a: &CellComplex, b: &CellComplex) -> bool {
    let mut ea = a.edges().to_vec();
    let mut eb = b.edges().to_vec();
    ea.sort_unstable();
    eb.sort_unstable();
    let mut sa: Vec<_> = a.squares().iter().map(quotient::square_key).collect();
    let mut sb: Vec<_> = b.squares().iter().map(quotient::square_key).collect();
    sa.sort_unstable();
    sb.sort_unstable();
    a.vertex_count() == b.vertex_count() && ea == eb && sa == sb
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_fixtures_match_builders() {
        for f in COMPLEXES {
            assert!(same_cells(&complex(f.name).unwrap(), &(f.build)()), "{}", f.name);
        }
        for f in MAPS {
            let (a, b) = (map(f.name).unwrap(), (f.build)());
            assert!(same_cells(a.domain(), b.domain()) && same_cells(a.codomain(), b.codomain()), "{}", f.name);
            assert_eq!(a.assignment(), b.assignment(), "{}", f.name);
            a.validate().unwrap();
        }
        for f in SYSTEMS {
            assert_eq!(system(f.name).unwrap(), (f.build)(), "{}", f.name);
            assert!(complex(f.model).is_some());
        }
    }
}
