//! Fixed-step gradient dynamics on periodic sequences: orbits of the composed map,
//! step-size scans, periodic orbits and the star-shaped attractor search.

mod map;
mod periodic;
mod scan;
mod star;

pub use map::{
    classify_eta, classify_orbit, compose_map, iterate_orbit, Classification, ClassifyOptions, GdMap, Orbit,
    OrbitStatus, DEFAULT_ORBIT_THRESHOLD,
};
pub use periodic::{
    check_interval_map, newton_periodic_orbit, orbit_stability, period3_search, Period3Point, PeriodicOrbit, Stability,
    INTERVAL_CHECK_POINTS,
};
pub use scan::{bifurcation_scan, CellGrid, EtaGrid, ScanConfig, ScanRow};
pub use star::{star_scan, StarScan, StarScanConfig};
