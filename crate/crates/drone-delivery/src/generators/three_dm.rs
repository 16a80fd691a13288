//! Delivery gadgets built from 3-dimensional matching inputs.
//!
//! The graph chains `n` selection gadgets between the package source and
//! target, one per element triple position; carrying the package through
//! selection gadget `i` along the triple-`j` lane corresponds to selecting
//! triple `j`. Every lane edge belongs to exactly one agent, so gadget
//! instances behave identically under node and edge handovers. For the
//! delivery-time family, all lane (inner) edges have length zero and the
//! approach (outer) edges share one length, so a perfect matching yields a
//! delivery in exactly that length; concatenating copies stretches the gap
//! between yes- and no-instances. For the energy family the outer edges of
//! the `3n` lane columns get lengths `2^(3n)`, `2^(3n-1)`, ..., `2`, making
//! a matching cost exactly `2^(3n+1) - 2`.

use super::{certify, GadgetError, GeneratedInstance};
use crate::instance::{AgentData, EdgeEntry, GraphData, Handover, Instance, InstanceData, PackageData, Point};
use crate::schedule::{Schedule, Trip};
use crate::Objective;

/// A 3-dimensional matching input: `n` elements per coordinate and a set of
/// triples, each `[x, y, z]` with 1-based element indices.
#[derive(Debug, Clone)]
pub struct ThreeDm {
    pub n: usize,
    pub triples: Vec<[usize; 3]>,
    /// Indices into `triples` forming a known perfect matching, if any.
    pub matching: Option<Vec<usize>>,
}

impl ThreeDm {
    pub fn new(n: usize, triples: Vec<[usize; 3]>) -> Result<ThreeDm, GadgetError> {
        if n == 0 {
            return Err(GadgetError::BadInput("n must be positive".into()));
        }
        if triples.is_empty() {
            return Err(GadgetError::BadInput("at least one triple is required".into()));
        }
        for (j, t) in triples.iter().enumerate() {
            if t.iter().any(|&q| q == 0 || q > n) {
                return Err(GadgetError::BadInput(format!("triple {j} has an index outside 1..={n}")));
            }
        }
        // Every element must appear in its coordinate somewhere, otherwise
        // its agent node would be isolated and the gadget graph disconnected.
        for coord in 0..3 {
            for q in 1..=n {
                if !triples.iter().any(|t| t[coord] == q) {
                    return Err(GadgetError::BadInput(format!(
                        "element {q} of coordinate {coord} appears in no triple"
                    )));
                }
            }
        }
        Ok(ThreeDm { n, triples, matching: None })
    }

    pub fn with_matching(mut self, matching: Vec<usize>) -> Result<ThreeDm, GadgetError> {
        self.check_matching(&matching)?;
        self.matching = Some(matching);
        Ok(self)
    }

    fn check_matching(&self, matching: &[usize]) -> Result<(), GadgetError> {
        if matching.len() != self.n {
            return Err(GadgetError::BadInput(format!("matching must pick {} triples", self.n)));
        }
        let mut seen = [vec![false; self.n + 1], vec![false; self.n + 1], vec![false; self.n + 1]];
        for &j in matching {
            let t = self
                .triples
                .get(j)
                .ok_or_else(|| GadgetError::BadInput(format!("matching references triple {j}")))?;
            for coord in 0..3 {
                if seen[coord][t[coord]] {
                    return Err(GadgetError::BadInput(format!("matching covers element {} twice", t[coord])));
                }
                seen[coord][t[coord]] = true;
            }
        }
        Ok(())
    }

    /// Exhaustive search for a perfect matching; intended for tiny inputs.
    pub fn find_matching(&self) -> Option<Vec<usize>> {
        fn extend(
            dm: &ThreeDm,
            x: usize,
            used: &mut [Vec<bool>; 2],
            picked: &mut Vec<usize>,
        ) -> bool {
            if x > dm.n {
                return true;
            }
            for (j, t) in dm.triples.iter().enumerate() {
                if t[0] == x && !used[0][t[1]] && !used[1][t[2]] {
                    used[0][t[1]] = true;
                    used[1][t[2]] = true;
                    picked.push(j);
                    if extend(dm, x + 1, used, picked) {
                        return true;
                    }
                    picked.pop();
                    used[0][t[1]] = false;
                    used[1][t[2]] = false;
                }
            }
            false
        }
        let mut used = [vec![false; self.n + 1], vec![false; self.n + 1]];
        let mut picked = Vec::new();
        // A perfect matching uses exactly one triple with each first
        // coordinate, so searching by first coordinate is exhaustive.
        extend(self, 1, &mut used, &mut picked).then_some(picked)
    }

    /// Like [`ThreeDm::find_matching`], but memoizes nothing and simply
    /// reports whether a matching exists.
    pub fn is_yes_instance(&self) -> bool {
        self.matching.is_some() || self.find_matching().is_some()
    }
}

struct Names {
    n: usize,
}

impl Names {
    fn s(&self, copy: usize, gadget: usize) -> String {
        // Selection chain nodes are global: the last node of a copy is the
        // first of the next.
        format!("s{}", copy * self.n + gadget)
    }
    fn lane(&self, copy: usize, gadget: usize, triple: usize, coord: usize) -> String {
        let c = ["x", "y", "z"][coord];
        format!("c{copy}.g{gadget}.{c}{triple}")
    }
    fn element(&self, copy: usize, coord: usize, q: usize) -> String {
        let c = ["x", "y", "z"][coord];
        format!("c{copy}.{c}{q}")
    }
    fn element_agent(&self, copy: usize, coord: usize, q: usize) -> String {
        let c = ["X", "Y", "Z"][coord];
        format!("c{copy}.{c}{q}")
    }
    fn selection_agent(&self, copy: usize, gadget: usize) -> String {
        format!("c{copy}.S{gadget}")
    }
}

/// Column lengths for the outer edges: uniform for the delivery-time family,
/// decreasing powers of two for the energy family.
enum OuterLengths {
    Uniform(f64),
    Powers { n: usize },
}

impl OuterLengths {
    fn get(&self, gadget: usize, coord: usize) -> f64 {
        match self {
            OuterLengths::Uniform(m) => *m,
            OuterLengths::Powers { n } => {
                let column = 3 * (gadget - 1) + coord + 1;
                (2.0f64).powi((3 * n + 1 - column) as i32)
            }
        }
    }
}

fn build(
    d: &ThreeDm,
    copies: usize,
    outer: &OuterLengths,
    inner_len: f64,
    objective: Objective,
) -> Result<GeneratedInstance, GadgetError> {
    let (n, m) = (d.n, d.triples.len());
    let names = Names { n };

    let mut nodes = Vec::new();
    for j in 0..=copies * n {
        nodes.push(format!("s{j}"));
    }
    let mut edges = Vec::new();
    let mut agents = Vec::new();
    for copy in 0..copies {
        for coord in 0..3 {
            for q in 1..=n {
                nodes.push(names.element(copy, coord, q));
            }
        }
        for gadget in 1..=n {
            for (j0, _) in d.triples.iter().enumerate() {
                for coord in 0..3 {
                    nodes.push(names.lane(copy, gadget, j0 + 1, coord));
                }
            }
        }
        for gadget in 1..=n {
            for (j0, triple) in d.triples.iter().enumerate() {
                let j = j0 + 1;
                let lane = |coord: usize| names.lane(copy, gadget, j, coord);
                let inner = |u: String, v: String| EdgeEntry { u, v, length: inner_len };
                edges.push(inner(names.s(copy, gadget - 1), lane(0)));
                edges.push(inner(lane(0), lane(1)));
                edges.push(inner(lane(1), lane(2)));
                edges.push(inner(lane(2), names.s(copy, gadget)));
                for (coord, &element) in triple.iter().enumerate() {
                    edges.push(EdgeEntry {
                        u: names.element(copy, coord, element),
                        v: lane(coord),
                        length: outer.get(gadget, coord),
                    });
                }
            }
        }
        // Element agents: one per element and coordinate, guarding the outer
        // edge into each lane of its triples plus the following lane edge.
        for coord in 0..3 {
            for q in 1..=n {
                let home = names.element(copy, coord, q);
                let mut a_nodes = vec![home.clone()];
                let mut a_edges = Vec::new();
                for gadget in 1..=n {
                    for (j0, triple) in d.triples.iter().enumerate() {
                        if triple[coord] != q {
                            continue;
                        }
                        let j = j0 + 1;
                        let here = names.lane(copy, gadget, j, coord);
                        let next = if coord < 2 {
                            names.lane(copy, gadget, j, coord + 1)
                        } else {
                            names.s(copy, gadget)
                        };
                        a_edges.push([home.clone(), here.clone()]);
                        a_edges.push([here.clone(), next.clone()]);
                        a_nodes.push(here);
                        a_nodes.push(next);
                    }
                }
                agents.push(AgentData {
                    id: names.element_agent(copy, coord, q),
                    p: home,
                    speed: 1.0,
                    rate: 1.0,
                    nodes: a_nodes,
                    edges: a_edges,
                });
            }
        }
        // Selection agents: one per gadget, guarding the entry edges.
        for gadget in 1..=n {
            let home = names.s(copy, gadget - 1);
            let mut a_nodes = vec![home.clone()];
            let mut a_edges = Vec::new();
            for j in 1..=m {
                let lane = names.lane(copy, gadget, j, 0);
                a_edges.push([home.clone(), lane.clone()]);
                a_nodes.push(lane);
            }
            agents.push(AgentData {
                id: names.selection_agent(copy, gadget),
                p: home,
                speed: 1.0,
                rate: 1.0,
                nodes: a_nodes,
                edges: a_edges,
            });
        }
    }

    let data = InstanceData {
        graph: GraphData { nodes, edges },
        package: PackageData { source: "s0".into(), target: format!("s{}", copies * n) },
        handover: Handover::Node,
        positions_fixed: true,
        agents,
    };
    let instance = Instance::from_data(data)?;
    debug_assert_eq!(instance.node_count(), (4 * n + 3 * m * n) * copies + 1);
    debug_assert_eq!(instance.agent_count(), 4 * n * copies);

    let matching = d.matching.clone().or_else(|| d.find_matching());
    let certificate = matching.map(|mut picked| {
        picked.sort_unstable();
        let mut trips = Vec::new();
        for copy in 0..copies {
            for gadget in 1..=n {
                let j0 = picked[gadget - 1];
                let j = j0 + 1;
                let triple = d.triples[j0];
                let node = |name: String| Point::Node(instance.node_id(&name).unwrap());
                let agent = |name: String| instance.agent_id(&name).unwrap();
                trips.push(Trip {
                    agent: agent(names.selection_agent(copy, gadget)),
                    start_time: 0.0,
                    empty_path: vec![],
                    carry_path: vec![node(names.s(copy, gadget - 1)), node(names.lane(copy, gadget, j, 0))],
                });
                for (coord, &element) in triple.iter().enumerate() {
                    let here = names.lane(copy, gadget, j, coord);
                    let next = if coord < 2 {
                        names.lane(copy, gadget, j, coord + 1)
                    } else {
                        names.s(copy, gadget)
                    };
                    trips.push(Trip {
                        agent: agent(names.element_agent(copy, coord, element)),
                        start_time: 0.0,
                        empty_path: vec![
                            node(names.element(copy, coord, triple[coord])),
                            node(here.clone()),
                        ],
                        carry_path: vec![node(here), node(next)],
                    });
                }
            }
        }
        certify(&instance, Schedule { trips }, objective)
    });

    Ok(GeneratedInstance { instance, certificate })
}

/// Delivery-time gadget: `copies` concatenated selection chains with outer
/// edges of length `outer_len` and inner edges of length `inner_len`
/// (zero in the canonical construction; a small positive value is accepted
/// for experiments that need positive lengths).
pub fn gen_3dm_ddt(
    d: &ThreeDm,
    copies: usize,
    outer_len: f64,
    inner_len: f64,
) -> Result<GeneratedInstance, GadgetError> {
    if copies == 0 {
        return Err(GadgetError::BadInput("at least one copy is required".into()));
    }
    if !(outer_len.is_finite() && outer_len > 0.0) || !(inner_len.is_finite() && inner_len >= 0.0) {
        return Err(GadgetError::BadInput("outer length must be positive, inner nonnegative".into()));
    }
    build(d, copies, &OuterLengths::Uniform(outer_len), inner_len, Objective::Time)
}

/// Energy gadget: a single chain whose outer-edge lengths decrease column by
/// column as powers of two; a perfect matching consumes exactly
/// `2^(3n+1) - 2`.
pub fn gen_3dm_ddc(d: &ThreeDm) -> Result<GeneratedInstance, GadgetError> {
    if d.n > 15 {
        return Err(GadgetError::BadInput("energy gadget requires n <= 15 for exact arithmetic".into()));
    }
    build(d, 1, &OuterLengths::Powers { n: d.n }, 0.0, Objective::Energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddt::solve_ddt_multi;
    use crate::oracle::{exact_multi_copy_paths, exact_single_copy, OracleGuard};
    use crate::schedule::check_feasible;
    use crate::CopyMode;
    use approx::assert_abs_diff_eq;

    fn yes_input() -> ThreeDm {
        ThreeDm::new(1, vec![[1, 1, 1]]).unwrap()
    }

    fn no_input() -> ThreeDm {
        // All elements appear, but no two triples are disjoint in every
        // coordinate.
        ThreeDm::new(2, vec![[1, 1, 1], [2, 2, 1], [1, 2, 2]]).unwrap()
    }

    #[test]
    fn matching_search_labels_inputs() {
        assert!(yes_input().is_yes_instance());
        assert!(!no_input().is_yes_instance());
        let yes2 = ThreeDm::new(2, vec![[1, 1, 1], [2, 2, 2], [1, 2, 2]]).unwrap();
        assert_eq!(yes2.find_matching(), Some(vec![0, 1]));
    }

    #[test]
    fn rejects_unreferenced_elements() {
        assert!(ThreeDm::new(2, vec![[1, 1, 1], [1, 1, 2]]).is_err());
    }

    #[test]
    fn smallest_gadget_has_the_closed_form_counts() {
        let g = gen_3dm_ddt(&yes_input(), 1, 1.0, 0.0).unwrap();
        // (4n + 3mn)q + 1 with n = m = q = 1.
        assert_eq!(g.instance.node_count(), 8);
        assert_eq!(g.instance.agent_count(), 4);
        let cert = g.certificate.expect("yes-instance has a certificate");
        assert_abs_diff_eq!(cert.value, 1.0);
    }

    #[test]
    fn ddt_certificate_achieves_the_outer_length_exactly() {
        let g = gen_3dm_ddt(&no_input(), 1, 1.0, 0.0).unwrap();
        assert!(g.certificate.is_none(), "no-instances have no certificate");
        let yes2 = ThreeDm::new(2, vec![[1, 1, 1], [2, 2, 2], [1, 2, 2]]).unwrap();
        for q in [1usize, 3] {
            let g = gen_3dm_ddt(&yes2, q, 2.5, 0.0).unwrap();
            let cert = g.certificate.expect("certificate");
            assert_eq!(cert.value, 2.5);
            assert!(check_feasible(&g.instance, &cert.schedule, CopyMode::Single).feasible);
            assert_eq!(g.instance.node_count(), (4 * 2 + 3 * 3 * 2) * q + 1);
            assert_eq!(g.instance.agent_count(), 8 * q);
        }
    }

    #[test]
    fn solver_reproduces_the_yes_value() {
        let g = gen_3dm_ddt(&yes_input(), 2, 1.0, 0.0).unwrap();
        assert_eq!(solve_ddt_multi(&g.instance).time, 1.0);
    }

    #[test]
    fn path_oracle_agrees_on_the_base_gadget() {
        let g = gen_3dm_ddt(&yes_input(), 1, 1.0, 0.0).unwrap();
        let r = exact_multi_copy_paths(&g.instance, crate::Objective::Time, OracleGuard::default()).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn ddc_certificate_consumes_two_to_the_3n_plus_1_minus_2() {
        let g = gen_3dm_ddc(&yes_input()).unwrap();
        let cert = g.certificate.expect("certificate");
        assert_eq!(cert.value, 14.0); // 2^4 - 2
        let yes2 = ThreeDm::new(2, vec![[1, 1, 1], [2, 2, 2], [1, 2, 2]]).unwrap();
        let g = gen_3dm_ddc(&yes2).unwrap();
        assert_eq!(g.certificate.unwrap().value, 126.0); // 2^7 - 2
    }

    #[test]
    fn tiny_no_instance_needs_strictly_more_energy() {
        let g = gen_3dm_ddc(&no_input()).unwrap();
        assert!(g.certificate.is_none());
        let guard = OracleGuard { max_nodes: 64, max_agents: 16 };
        let r = exact_single_copy(&g.instance, crate::Objective::Energy, guard).unwrap();
        assert!(r.value >= 128.0 - 1e-9, "no-instance energy {} < 2^(3n+1)", r.value);
    }

    #[test]
    fn positive_inner_length_option() {
        let g = gen_3dm_ddt(&yes_input(), 1, 1.0, 1e-3).unwrap();
        let cert = g.certificate.unwrap();
        assert!(cert.value > 1.0 && cert.value < 1.01);
    }
}
