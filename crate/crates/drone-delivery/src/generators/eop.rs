//! Path-instance gadgets built from even-odd partition inputs.
//!
//! Given `2n` positive integers, the gadget is a path
//! `s, b1..b_{2n}, z, z', c_{2n}..c1, y, u` in which each consecutive pair
//! `(x_{2i-1}, x_{2i})` owns one unit interval left of `z` and one
//! half-length interval right of `z'`, separated by long stretches covered
//! by unbounded-speed shuttle agents. The pair agents start at `z` with
//! speeds `1/(C + x_i / sum)`, so carrying the left interval takes
//! `C + x_i/sum` time units; a partition picking one element per pair with
//! equal sums balances the two sides and lets the timed courier crossing
//! `z -> z'` connect without waiting, for a delivery time of exactly
//! `S + 3Cn/2 + 7/4` (with `S` the start gap and `C = 3`).

use super::{certify, GadgetError};
use crate::instance::{AgentData, EdgeEntry, GraphData, Handover, Instance, InstanceData, PackageData, Point};
use crate::schedule::{Schedule, Trip};
use crate::Objective;

/// The constant pace offset of the pair agents.
pub const PACE: f64 = 3.0;

/// An even-odd partition input: `2n` positive integers; a partition picks
/// exactly one of `{x_{2i-1}, x_{2i}}` per pair for the first class, and is
/// balanced when the picked values sum to half the total.
#[derive(Debug, Clone)]
pub struct EopInput {
    pub values: Vec<u64>,
    /// `partition[i]` is true when the odd element `x_{2i-1}` of pair `i`
    /// goes to the first class.
    pub partition: Option<Vec<bool>>,
}

impl EopInput {
    pub fn new(values: Vec<u64>) -> Result<EopInput, GadgetError> {
        if values.is_empty() || !values.len().is_multiple_of(2) {
            return Err(GadgetError::BadInput("need a positive even number of values".into()));
        }
        if values.contains(&0) {
            return Err(GadgetError::BadInput("values must be positive".into()));
        }
        Ok(EopInput { values, partition: None })
    }

    pub fn pairs(&self) -> usize {
        self.values.len() / 2
    }

    pub fn sum(&self) -> u64 {
        self.values.iter().sum()
    }

    pub fn with_partition(mut self, partition: Vec<bool>) -> Result<EopInput, GadgetError> {
        if partition.len() != self.pairs() {
            return Err(GadgetError::BadInput(format!("partition must decide {} pairs", self.pairs())));
        }
        let total = self.sum();
        let picked: u64 = partition
            .iter()
            .enumerate()
            .map(|(i, &odd)| if odd { self.values[2 * i] } else { self.values[2 * i + 1] })
            .sum();
        if 2 * picked != total {
            return Err(GadgetError::BadInput(format!(
                "partition sums to {picked}, not half of {total}"
            )));
        }
        self.partition = Some(partition);
        Ok(self)
    }

    /// Exhaustive search over the `2^n` pair choices; intended for tiny
    /// inputs.
    pub fn find_partition(&self) -> Option<Vec<bool>> {
        let n = self.pairs();
        let total = self.sum();
        if !total.is_multiple_of(2) {
            return None;
        }
        (0..1u64 << n).find_map(|bits| {
            let picked: u64 = (0..n)
                .map(|i| if bits >> i & 1 == 1 { self.values[2 * i] } else { self.values[2 * i + 1] })
                .sum();
            (2 * picked == total).then(|| (0..n).map(|i| bits >> i & 1 == 1).collect())
        })
    }

    pub fn is_yes_instance(&self) -> bool {
        self.partition.is_some() || self.find_partition().is_some()
    }
}

/// Generated even-odd partition gadget with its geometry.
#[derive(Debug)]
pub struct EopGadget {
    pub instance: Instance,
    pub certificate: Option<super::GadgetCertificate>,
    /// Length of the long shuttle stretches.
    pub long_stretch: f64,
    /// Length of the edge from `s` to the first pair interval; every pair
    /// agent can reach either of its pickup points within this time.
    pub start_gap: f64,
    /// Delivery time achieved by a balanced partition.
    pub yes_time: f64,
}

pub fn gen_eop(e: &EopInput) -> Result<EopGadget, GadgetError> {
    let n = e.pairs();
    let nf = n as f64;
    let c = PACE;
    let sum = e.sum() as f64;
    let long = 3.0 * c * nf / 2.0 + 7.0 / 4.0 + 1.0;
    let pace = |x: u64| c + x as f64 / sum;
    let speed = |x: u64| 1.0 / pace(x);

    // The start gap must let the slower agent of each pair reach the left
    // endpoint of either of its intervals; the distant endpoint is the left
    // one, at (n+1-i)(long+1) from z.
    let start_gap = (1..=n)
        .map(|i| {
            let worst = pace(e.values[2 * i - 2]).max(pace(e.values[2 * i - 1]));
            (nf + 1.0 - i as f64) * (long + 1.0) * worst
        })
        .fold(0.0, f64::max);

    // Node positions left to right.
    let mut layout: Vec<(String, f64)> = vec![("s".into(), 0.0)];
    let mut pos = start_gap;
    for i in 1..=n {
        layout.push((format!("b{}", 2 * i - 1), pos));
        layout.push((format!("b{}", 2 * i), pos + 1.0));
        pos += 1.0 + long;
    }
    layout.push(("z".into(), pos));
    layout.push(("zp".into(), pos + 1.0));
    let z_pos = pos;
    pos += 1.0 + long;
    for i in (1..=n).rev() {
        layout.push((format!("c{}", 2 * i), pos));
        layout.push((format!("c{}", 2 * i - 1), pos + 0.5));
        pos += 0.5 + long;
    }
    layout.push(("y".into(), pos));
    let u_pos = z_pos + start_gap + c * nf + 0.5;
    if u_pos <= pos {
        return Err(GadgetError::BadInput("geometry degenerate: courier start not past the target".into()));
    }
    layout.push(("u".into(), u_pos));

    let index_of = |name: &str| layout.iter().position(|(n, _)| n == name).unwrap();
    let interval = |from: &str, to: &str| -> (Vec<String>, Vec<[String; 2]>) {
        let (a, b) = (index_of(from), index_of(to));
        let nodes: Vec<String> = layout[a..=b].iter().map(|(n, _)| n.clone()).collect();
        let edges = nodes.windows(2).map(|w| [w[0].clone(), w[1].clone()]).collect();
        (nodes, edges)
    };

    let nodes: Vec<String> = layout.iter().map(|(n, _)| n.clone()).collect();
    let edges: Vec<EdgeEntry> = layout
        .windows(2)
        .map(|w| EdgeEntry { u: w[0].0.clone(), v: w[1].0.clone(), length: w[1].1 - w[0].1 })
        .collect();

    let mut agents = Vec::new();
    let simple_agent = |id: String, p: &str, speed: f64, range: (Vec<String>, Vec<[String; 2]>)| AgentData {
        id,
        p: p.into(),
        speed,
        rate: 1.0,
        nodes: range.0,
        edges: range.1,
    };
    agents.push(simple_agent("h1".into(), "s", 1.0, interval("s", "b1")));
    agents.push(simple_agent("h2".into(), "u", 1.0, interval("z", "u")));
    for j in 1..=2 * n {
        let i = j.div_ceil(2);
        agents.push(simple_agent(
            format!("p{j}"),
            "z",
            speed(e.values[j - 1]),
            interval(&format!("b{}", 2 * i - 1), &format!("c{}", 2 * i - 1)),
        ));
    }
    for idx in 1..=2 * n + 1 {
        let (home, range) = if idx < n {
            (format!("b{}", 2 * idx), interval(&format!("b{}", 2 * idx), &format!("b{}", 2 * idx + 1)))
        } else if idx == n {
            (format!("b{}", 2 * n), interval(&format!("b{}", 2 * n), "z"))
        } else if idx == n + 1 {
            ("zp".to_string(), interval("zp", &format!("c{}", 2 * n)))
        } else if idx <= 2 * n {
            let r = 2 * n + 1 - idx;
            (format!("c{}", 2 * r + 1), interval(&format!("c{}", 2 * r + 1), &format!("c{}", 2 * r)))
        } else {
            ("c1".to_string(), interval("c1", "y"))
        };
        agents.push(simple_agent(format!("f{idx}"), &home, f64::INFINITY, range));
    }

    let data = InstanceData {
        graph: GraphData { nodes, edges },
        package: PackageData { source: "s".into(), target: "y".into() },
        handover: Handover::Node,
        positions_fixed: true,
        agents,
    };
    let instance = Instance::from_data(data)?;
    let yes_time = start_gap + 3.0 * c * nf / 2.0 + 7.0 / 4.0;

    let partition = e.partition.clone().or_else(|| e.find_partition());
    let certificate = partition.map(|classes| {
        let node = |name: &str| Point::Node(instance.node_id(name).unwrap());
        let agent = |name: &str| instance.agent_id(name).unwrap();
        let span = |from: &str, to: &str| -> Vec<Point> {
            let (a, b) = (index_of(from), index_of(to));
            if a <= b {
                layout[a..=b].iter().map(|(n, _)| node(n)).collect()
            } else {
                layout[b..=a].iter().rev().map(|(n, _)| node(n)).collect()
            }
        };
        let mut trips = Vec::new();
        let mut push = |agent_name: String, empty: Vec<Point>, carry: Vec<Point>| {
            trips.push(Trip { agent: agent(&agent_name), start_time: 0.0, empty_path: empty, carry_path: carry });
        };
        push("h1".into(), vec![], span("s", "b1"));
        for i in 1..=n {
            let left = if classes[i - 1] { 2 * i - 1 } else { 2 * i };
            push(
                format!("p{left}"),
                span("z", &format!("b{}", 2 * i - 1)),
                span(&format!("b{}", 2 * i - 1), &format!("b{}", 2 * i)),
            );
            if i < n {
                push(format!("f{i}"), vec![], span(&format!("b{}", 2 * i), &format!("b{}", 2 * i + 1)));
            } else {
                push(format!("f{n}"), vec![], span(&format!("b{}", 2 * n), "z"));
            }
        }
        push("h2".into(), span("u", "z"), span("z", "zp"));
        push(format!("f{}", n + 1), vec![], span("zp", &format!("c{}", 2 * n)));
        for i in (1..=n).rev() {
            let right = if classes[i - 1] { 2 * i } else { 2 * i - 1 };
            push(
                format!("p{right}"),
                span("z", &format!("c{}", 2 * i)),
                span(&format!("c{}", 2 * i), &format!("c{}", 2 * i - 1)),
            );
            if i > 1 {
                push(
                    format!("f{}", 2 * n + 2 - i),
                    vec![],
                    span(&format!("c{}", 2 * i - 1), &format!("c{}", 2 * i - 2)),
                );
            } else {
                push(format!("f{}", 2 * n + 1), vec![], span("c1", "y"));
            }
        }
        certify(&instance, Schedule { trips }, Objective::Time)
    });

    Ok(EopGadget { instance, certificate, long_stretch: long, start_gap, yes_time })
}
