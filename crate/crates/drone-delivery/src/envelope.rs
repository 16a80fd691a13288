//! Fastest relay of the package over a single edge when agents may hand it
//! over at interior points.
//!
//! For an edge of length `len` whose package arrives at the near endpoint at
//! time `t`, every agent that can traverse the edge has an earliest
//! edge-presence function `r(x) = min(near + x/v, far + (len - x)/v)` over
//! offsets `x` from the near endpoint, where `near`/`far` are its travel
//! times to the endpoints. Agents are processed in increasing speed order
//! and the earliest package arrival at each offset is maintained as a
//! piecewise-linear lower envelope; every envelope piece added by an agent is
//! a carry ray of slope `1/v` starting at a feasible pickup. Backtracking
//! through the per-agent envelopes yields the relay plan. The plan's carrier
//! speeds are strictly increasing and the work per edge is quadratic in the
//! number of eligible agents.

use crate::instance::AgentId;

/// One carrier's leg in a single-edge relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaySegment {
    pub agent: AgentId,
    /// Pickup offset from the near endpoint.
    pub from_offset: f64,
    /// Dropoff offset; segments tile `[0, len]` in increasing order.
    pub to_offset: f64,
    /// Time the carrier picks the package up (max of package arrival and the
    /// carrier's earliest presence at the pickup offset).
    pub pickup_time: f64,
    /// Whether the carrier reaches its pickup via the far endpoint.
    pub enters_via_far: bool,
}

/// Relay plan over one edge: ordered segments and the package arrival time
/// at the far endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePlan {
    pub arrival: f64,
    pub segments: Vec<RelaySegment>,
}

/// Inputs per eligible agent.
#[derive(Debug, Clone, Copy)]
pub struct RelayAgent {
    pub agent: AgentId,
    pub speed: f64,
    /// Travel time from the agent's start to the near endpoint.
    pub near_time: f64,
    /// Travel time from the agent's start to the far endpoint.
    pub far_time: f64,
}

impl RelayAgent {
    fn inv_speed(&self) -> f64 {
        if self.speed.is_infinite() {
            0.0
        } else {
            1.0 / self.speed
        }
    }

    /// Earliest time this agent can stand at offset `x`, ready to carry.
    fn presence(&self, x: f64, len: f64) -> f64 {
        let inv = self.inv_speed();
        f64::min(self.near_time + x * inv, self.far_time + (len - x) * inv)
    }

    fn enters_via_far(&self, x: f64, len: f64) -> bool {
        let inv = self.inv_speed();
        self.far_time + (len - x) * inv < self.near_time + x * inv
    }
}

/// A linear piece valid from `x0` to the start of the next piece.
#[derive(Debug, Clone, Copy)]
struct Lin {
    x0: f64,
    y0: f64,
    slope: f64,
    /// True when the piece was contributed by the level's own carry rays.
    own: bool,
}

impl Lin {
    fn at(&self, x: f64) -> f64 {
        self.y0 + self.slope * (x - self.x0)
    }
}

fn eval(pwl: &[Lin], x: f64) -> f64 {
    pwl[seg_index(pwl, x)].at(x)
}

fn seg_index(pwl: &[Lin], x: f64) -> usize {
    let mut idx = 0;
    for (i, seg) in pwl.iter().enumerate() {
        if seg.x0 <= x {
            idx = i;
        } else {
            break;
        }
    }
    idx
}

/// Pointwise min (or max) of two piecewise-linear functions on `[0, len]`,
/// splitting pieces at crossings. Ties go to `a`; differences below the
/// relative noise floor count as ties, so re-anchored parallel lines (equal
/// agent speeds) never produce phantom crossings.
fn merge(a: &[Lin], b: &[Lin], len: f64, take_max: bool) -> Vec<Lin> {
    let mut cuts: Vec<f64> = a.iter().map(|s| s.x0).chain(b.iter().map(|s| s.x0)).collect();
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    cuts.retain(|&x| x < len || x == 0.0);
    let mut out: Vec<Lin> = Vec::new();
    let mut push = |x0: f64, from: &Lin| {
        out.push(Lin { x0, y0: from.at(x0), slope: from.slope, own: from.own });
    };
    for (j, &lo) in cuts.iter().enumerate() {
        let hi = cuts.get(j + 1).copied().unwrap_or(len);
        let sa = a[seg_index(a, lo)];
        let sb = b[seg_index(b, lo)];
        let noise = 1e-12
            * sa.at(lo)
                .abs()
                .max(sb.at(lo).abs())
                .max(sa.at(hi).abs())
                .max(sb.at(hi).abs())
                .max(1.0);
        let flatten = |d: f64| if d.abs() <= noise { 0.0 } else { d };
        let d0 = flatten(sa.at(lo) - sb.at(lo));
        let d1 = flatten(sa.at(hi) - sb.at(hi));
        // Sign convention: pick `a` when d <= 0 for min, d >= 0 for max.
        let a_wins = |d: f64| if take_max { d >= 0.0 } else { d <= 0.0 };
        if a_wins(d0) == a_wins(d1) || lo == hi {
            push(lo, if a_wins(d0) { &sa } else { &sb });
        } else {
            let xc = lo + (hi - lo) * (d0 / (d0 - d1));
            let (first, second) = if a_wins(d0) { (&sa, &sb) } else { (&sb, &sa) };
            push(lo, first);
            if xc > lo && xc < hi {
                push(xc, second);
            } else {
                // Degenerate crossing at the boundary; second piece takes over.
                push(lo.max(xc.min(hi)), second);
            }
        }
    }
    out
}

/// Compute the fastest single-edge relay.
///
/// `len` may be zero (the plan degenerates to the best single pickup).
/// `agents` must be non-empty; entries need not be sorted.
pub fn solve_edge_relay(len: f64, available_at: f64, agents: &[RelayAgent]) -> EdgePlan {
    assert!(!agents.is_empty(), "relay requires at least one eligible agent");
    let mut order: Vec<RelayAgent> = agents.to_vec();
    order.sort_by(|a, b| {
        a.speed
            .partial_cmp(&b.speed)
            .unwrap()
            .then_with(|| a.agent.cmp(&b.agent))
    });

    if len == 0.0 {
        // No interior exists; the best agent picks up at the near endpoint.
        let best = order
            .iter()
            .map(|a| (f64::max(available_at, a.presence(0.0, len)), a))
            .min_by(|(ta, a), (tb, b)| ta.partial_cmp(tb).unwrap().then_with(|| a.agent.cmp(&b.agent)))
            .unwrap();
        return EdgePlan {
            arrival: best.0,
            segments: vec![RelaySegment {
                agent: best.1.agent,
                from_offset: 0.0,
                to_offset: 0.0,
                pickup_time: best.0,
                enters_via_far: best.1.enters_via_far(0.0, len),
            }],
        };
    }

    // Carry ray bookkeeping: where each envelope piece's carry started.
    #[derive(Debug, Clone, Copy)]
    struct CarryPiece {
        x0: f64,
        origin_x: f64,
        origin_t: f64,
    }
    struct Level {
        carry: Vec<CarryPiece>,
        env: Vec<Lin>,
    }

    let mut levels: Vec<Level> = Vec::with_capacity(order.len());
    let mut prev_env: Option<Vec<Lin>> = None;

    for ra in &order {
        let inv = ra.inv_speed();
        // r as a piecewise-linear function: near-entry line rising, far-entry
        // line falling, met at the crossing (if it lies inside the edge).
        let near_line = Lin { x0: 0.0, y0: ra.near_time, slope: inv, own: false };
        let far_line = Lin { x0: 0.0, y0: ra.far_time + len * inv, slope: -inv, own: false };
        let r_env = merge(&[near_line], &[far_line], len, false);

        // Pickup candidates: the near endpoint (package point) plus every
        // breakpoint of max(previous envelope, r).
        let r_at = |x: f64| f64::min(near_line.at(x), far_line.at(x));
        let mut origins: Vec<(f64, f64)> = vec![(0.0, f64::max(available_at, r_at(0.0)))];
        if let Some(prev) = &prev_env {
            let f = merge(prev, &r_env, len, true);
            for seg in &f {
                if seg.x0 > 0.0 {
                    origins.push((seg.x0, seg.y0));
                }
            }
        }

        // Lower envelope of same-slope carry rays: prefix minimum of
        // intercepts, keeping the earliest winning origin on ties.
        let mut carry: Vec<CarryPiece> = Vec::new();
        let mut env_pieces: Vec<Lin> = Vec::new();
        let mut best: Option<(f64, f64, f64)> = None; // (intercept, origin_x, origin_t)
        for &(x, fx) in &origins {
            let intercept = fx - x * inv;
            if best.map(|(c, _, _)| intercept < c).unwrap_or(true) {
                best = Some((intercept, x, fx));
                carry.push(CarryPiece { x0: x, origin_x: x, origin_t: fx });
                env_pieces.push(Lin { x0: x, y0: intercept + x * inv, slope: inv, own: true });
            }
        }

        // Ties between the previous envelope and the new carry rays fall to
        // the previous side, so plans never hand over without strict
        // improvement (this keeps carrier speeds strictly increasing).
        let env = match &prev_env {
            None => env_pieces,
            Some(prev) => {
                let below: Vec<Lin> = prev.iter().map(|s| Lin { own: false, ..*s }).collect();
                merge(&below, &env_pieces, len, false)
            }
        };
        levels.push(Level { carry, env: env.clone() });
        prev_env = Some(env);
    }

    let top = levels.len() - 1;
    let arrival = eval(&levels[top].env, len);

    // Backtrack through envelope ownership to recover the relay plan. The
    // piece covering the open interval left of `x` decides ownership, so a
    // crossing that lands exactly on `x` defers to the incumbent carrier.
    fn left_of<T>(items: &[T], x: f64, start: impl Fn(&T) -> f64) -> usize {
        let mut idx = 0;
        for (i, item) in items.iter().enumerate() {
            if start(item) < x {
                idx = i;
            } else {
                break;
            }
        }
        idx
    }
    let mut segments: Vec<RelaySegment> = Vec::new();
    let mut x = len;
    let mut lvl = top;
    while x > 0.0 {
        while lvl > 0 && !levels[lvl].env[left_of(&levels[lvl].env, x, |s| s.x0)].own {
            lvl -= 1;
        }
        let carry = &levels[lvl].carry;
        let piece = carry[left_of(carry, x, |p| p.x0)];
        if piece.origin_x >= x {
            // Cannot happen with exact arithmetic (a winning carry ray
            // strictly advances); if rounding manufactures it, the level
            // below holds an equal-value piece.
            debug_assert!(false, "carry segment failed to advance");
            if lvl == 0 {
                break;
            }
            lvl -= 1;
            continue;
        }
        let ra = &order[lvl];
        segments.push(RelaySegment {
            agent: ra.agent,
            from_offset: piece.origin_x,
            to_offset: x,
            pickup_time: piece.origin_t,
            enters_via_far: ra.enters_via_far(piece.origin_x, len),
        });
        x = piece.origin_x;
        if lvl == 0 {
            debug_assert!(x == 0.0);
            break;
        }
        lvl -= 1;
    }
    segments.reverse();

    // Collapse float-tie artifacts: a later carrier whose speed does not
    // strictly exceed its predecessor's gains nothing, so the predecessor
    // keeps the package over both spans.
    let speed_of = |agent: AgentId| order.iter().find(|a| a.agent == agent).unwrap().speed;
    let mut cleaned: Vec<RelaySegment> = Vec::new();
    for seg in segments {
        match cleaned.last_mut() {
            Some(prev) if speed_of(prev.agent) >= speed_of(seg.agent) => {
                debug_assert_eq!(speed_of(prev.agent), speed_of(seg.agent));
                prev.to_offset = seg.to_offset;
            }
            _ => cleaned.push(seg),
        }
    }
    debug_assert!(cleaned
        .windows(2)
        .all(|w| speed_of(w[0].agent) < speed_of(w[1].agent)));
    EdgePlan { arrival, segments: cleaned }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_agent_equals_direct_formula() {
        let agents = [RelayAgent { agent: 0, speed: 2.0, near_time: 1.5, far_time: 6.5 }];
        let plan = solve_edge_relay(10.0, 0.0, &agents);
        assert_abs_diff_eq!(plan.arrival, f64::max(0.0, 1.5) + 5.0);
        assert_eq!(plan.segments.len(), 1);
        assert_eq!(plan.segments[0].from_offset, 0.0);
        assert_eq!(plan.segments[0].to_offset, 10.0);
    }

    #[test]
    fn two_agent_handover_beats_both_solo_runs() {
        // Slow agent at the near end, fast agent reachable only via the far
        // end; the optimum hands over at offset 10/3 and arrives at 20/3.
        let agents = [
            RelayAgent { agent: 0, speed: 1.0, near_time: 0.0, far_time: 10.0 },
            RelayAgent { agent: 1, speed: 2.0, near_time: 5.0, far_time: 0.0 },
        ];
        let plan = solve_edge_relay(10.0, 0.0, &agents);
        assert_abs_diff_eq!(plan.arrival, 20.0 / 3.0, epsilon = 1e-12);
        assert_eq!(plan.segments.len(), 2);
        assert_abs_diff_eq!(plan.segments[0].to_offset, 10.0 / 3.0, epsilon = 1e-12);
        assert_eq!(plan.segments[0].agent, 0);
        assert_eq!(plan.segments[1].agent, 1);
        assert!(plan.segments[1].enters_via_far);
        assert_abs_diff_eq!(plan.segments[1].pickup_time, 10.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn far_side_only_agent_walks_around() {
        let agents = [RelayAgent { agent: 0, speed: 2.0, near_time: 5.0, far_time: 0.0 }];
        let plan = solve_edge_relay(10.0, 0.0, &agents);
        assert_abs_diff_eq!(plan.arrival, 10.0);
        assert_eq!(plan.segments.len(), 1);
        assert!(!plan.segments[0].enters_via_far, "ties resolve to the near entry");
    }

    #[test]
    fn zero_length_edge_degenerates_to_best_pickup() {
        let agents = [
            RelayAgent { agent: 0, speed: 1.0, near_time: 4.0, far_time: 4.0 },
            RelayAgent { agent: 1, speed: 1.0, near_time: 2.0, far_time: 9.0 },
        ];
        let plan = solve_edge_relay(0.0, 1.0, &agents);
        assert_abs_diff_eq!(plan.arrival, 2.0);
        assert_eq!(plan.segments[0].agent, 1);
    }

    #[test]
    fn waiting_package_shifts_pickup_times() {
        let agents = [
            RelayAgent { agent: 0, speed: 1.0, near_time: 0.0, far_time: 10.0 },
            RelayAgent { agent: 1, speed: 2.0, near_time: 4.0, far_time: 14.0 },
        ];
        // Package available late: the fast agent is already in position, so
        // a mid-edge handover no longer helps over carrying from the start.
        let plan = solve_edge_relay(10.0, 8.0, &agents);
        assert_abs_diff_eq!(plan.arrival, 13.0);
        assert_eq!(plan.segments.len(), 1);
        assert_eq!(plan.segments[0].agent, 1);
    }

    #[test]
    fn infinite_speed_carries_instantly() {
        let agents = [RelayAgent { agent: 0, speed: f64::INFINITY, near_time: 0.0, far_time: 0.0 }];
        let plan = solve_edge_relay(3.0, 2.0, &agents);
        assert_abs_diff_eq!(plan.arrival, 2.0);
    }

    #[test]
    fn equal_speeds_never_hand_over() {
        let agents = [
            RelayAgent { agent: 0, speed: 1.0, near_time: 0.0, far_time: 10.0 },
            RelayAgent { agent: 1, speed: 1.0, near_time: 0.0, far_time: 0.0 },
        ];
        let plan = solve_edge_relay(10.0, 0.0, &agents);
        assert_abs_diff_eq!(plan.arrival, 10.0);
        assert_eq!(plan.segments.len(), 1);
    }
}
