//! DC conductance matrix and bus connectivity under faults.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::Result;
use crate::model::{FaultSet, SystemSpec};

/// Laplacian conductance matrix of the DC network, in siemens.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcAdmittance {
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
    /// `true` for every line that is in service.
    pub in_service: Vec<bool>,
}

impl DcAdmittance {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Connected components over in-service lines, as a component id per bus.
    pub fn components(&self, spec: &SystemSpec) -> Vec<usize> {
        connected_components(
            spec.bus_count(),
            spec.lines.iter().enumerate().filter_map(|(i, l)| self.in_service[i].then_some((l.from, l.to))),
        )
    }
}

/// Builds the Laplacian conductance matrix with faulted lines removed.
///
/// The redundancy assignment decides which bus each vital or semi-vital load
/// draws from; it changes the load grouping per bus, not the matrix, so it is
/// not an input here.
pub fn build_admittance(spec: &SystemSpec, faults: &FaultSet) -> Result<DcAdmittance> {
    let faulted = faults.lines(spec)?;
    let n = spec.bus_count();
    let mut matrix = DMatrix::zeros(n, n);
    let mut in_service = vec![true; spec.lines.len()];
    for i in faulted {
        in_service[i] = false;
    }
    for (line, _) in spec.lines.iter().zip(&in_service).filter(|(_, &on)| on) {
        let g = line.conductance();
        matrix[(line.from, line.from)] += g;
        matrix[(line.to, line.to)] += g;
        matrix[(line.from, line.to)] -= g;
        matrix[(line.to, line.from)] -= g;
    }
    Ok(DcAdmittance { matrix, in_service })
}

/// Union-find over an edge list; component ids are the smallest bus index in
/// each component, so they are stable across edge orderings.
pub fn connected_components(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (a, b) in edges {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            parent[hi] = lo;
        }
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::FaultSet;

    fn assert_laplacian(adm: &DcAdmittance) {
        let n = adm.dim();
        for i in 0..n {
            let row: f64 = (0..n).map(|j| adm.get(i, j)).sum();
            assert!(row.abs() < 1e-9, "row {i} sums to {row}");
            for j in 0..n {
                assert_eq!(adm.get(i, j), adm.get(j, i));
            }
        }
    }

    #[test]
    fn intact_plant_is_laplacian() {
        let spec = fixtures::six_zone();
        let adm = build_admittance(&spec, &FaultSet::new()).unwrap();
        assert_laplacian(&adm);
        for i in 0..adm.dim() {
            let off: f64 = (0..adm.dim()).filter(|&j| j != i).map(|j| adm.get(i, j).abs()).sum();
            assert!(adm.get(i, i) >= off - 1e-9);
            assert!(adm.get(i, i) > 0.0);
        }
        let comps = adm.components(&spec);
        assert!(comps.iter().all(|&c| c == 0));
    }

    #[test]
    fn fault_zeroes_branch() {
        let spec = fixtures::six_zone();
        let intact = build_admittance(&spec, &FaultSet::new()).unwrap();
        let faults = FaultSet::parse("pb:1-2", &spec).unwrap();
        let adm = build_admittance(&spec, &faults).unwrap();
        assert_eq!(adm.get(0, 1), 0.0);
        assert_eq!(adm.get(1, 0), 0.0);
        let g = 1.0 / spec.lines[spec.line_between(0, 1).unwrap()].resistance;
        assert!((intact.get(0, 0) - adm.get(0, 0) - g).abs() < 1e-9);
        assert!((intact.get(1, 1) - adm.get(1, 1) - g).abs() < 1e-9);
        assert_laplacian(&adm);
    }

    #[test]
    fn unknown_line_is_rejected() {
        let spec = fixtures::six_zone();
        assert!(build_admittance(&spec, &FaultSet::from_pairs([(0, 2)])).is_err());
    }

    /// Brute-force reachability oracle: repeated relaxation over the line list.
    fn reachable(spec: &SystemSpec, faults: &FaultSet, from: usize) -> Vec<bool> {
        let faulted = faults.lines(spec).unwrap();
        let mut seen = vec![false; spec.bus_count()];
        seen[from] = true;
        loop {
            let mut changed = false;
            for (i, l) in spec.lines.iter().enumerate() {
                if faulted.contains(&i) {
                    continue;
                }
                if seen[l.from] != seen[l.to] {
                    seen[l.from] = true;
                    seen[l.to] = true;
                    changed = true;
                }
            }
            if !changed {
                return seen;
            }
        }
    }

    #[test]
    fn pb_cut_isolates_zone_one_segment() {
        let spec = fixtures::six_zone();
        // Cutting PB on both sides of bus 2 and 3 leaves PB2-PB3 floating.
        let faults = FaultSet::parse("pb:1-2,pb:3-4", &spec).unwrap();
        let adm = build_admittance(&spec, &faults).unwrap();
        let comps = adm.components(&spec);
        for a in 0..spec.bus_count() {
            let oracle = reachable(&spec, &faults, a);
            for b in 0..spec.bus_count() {
                assert_eq!(comps[a] == comps[b], oracle[b], "buses {a} {b}");
            }
        }
        assert_eq!(comps[1], comps[2]);
        assert_ne!(comps[1], comps[0]);
        assert_ne!(comps[2], comps[3]);
    }
}
