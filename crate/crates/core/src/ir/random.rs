//! Seeded generator of valid process models for property tests and benchmarks.
//!
//! Generated models are canonical: `next` only jumps to elements that precede
//! the branch in document order, and a gateway without join is always the last
//! element of its sequence. Canonical models survive the XML round trip
//! unchanged.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Branch, Element, EventKind, ProcessModel, TaskKind};

const MAX_DEPTH: usize = 3;

const VERBS: &[&str] = &[
    "Review", "Approve", "Send", "Prepare", "Check", "Archive", "Notify", "Register", "Ship",
    "Invoice", "Pack", "Verify", "Schedule", "Collect", "Update",
];
const NOUNS: &[&str] = &[
    "order", "invoice", "documents", "customer", "supplier", "payment", "contract", "goods",
    "request", "report", "claim", "shipment",
];
const CONDITIONS: &[&str] = &[
    "approved", "rejected", "amount above limit", "in stock", "out of stock", "complete",
    "incomplete", "urgent", "standard", "retry needed",
];

/// Builds a valid model of roughly `target_size` elements (at least start and
/// end). Identical seeds yield identical models.
pub fn random_process(seed: u64, target_size: usize) -> ProcessModel {
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
        counter: 0,
        placed: Vec::new(),
    };
    let budget = target_size.saturating_sub(2);
    let mut process = vec![Element::Event {
        kind: EventKind::Start,
        id: "start".into(),
        label: g.event_label("Process started"),
    }];
    let terminal_gateway = budget >= 4 && g.rng.random_bool(0.25);
    if terminal_gateway {
        let body = budget - 3;
        process.extend(g.body(body, 0));
        process.push(g.joinless_gateway(3, 0, true));
    } else {
        process.extend(g.body(budget, 0));
        let id = g.fresh("end");
        process.push(Element::Event {
            kind: EventKind::End,
            id,
            label: g.event_label("Process finished"),
        });
    }
    ProcessModel { process }
}

struct Generator {
    rng: ChaCha8Rng,
    counter: usize,
    /// Non-start ids in document order; legal `next` targets.
    placed: Vec<String>,
}

impl Generator {
    fn fresh(&mut self, prefix: &str) -> String {
        self.counter += 1;
        let id = format!("{prefix}_{}", self.counter);
        self.placed.push(id.clone());
        id
    }

    fn event_label(&mut self, text: &str) -> Option<String> {
        self.rng.random_bool(0.5).then(|| text.to_string())
    }

    fn task(&mut self) -> Element {
        let kind = *[TaskKind::Task, TaskKind::UserTask, TaskKind::ServiceTask]
            .choose(&mut self.rng)
            .unwrap();
        let label = format!(
            "{} {}",
            VERBS.choose(&mut self.rng).unwrap(),
            NOUNS.choose(&mut self.rng).unwrap()
        );
        Element::Task {
            kind,
            id: self.fresh("task"),
            label,
        }
    }

    fn condition(&mut self) -> String {
        let phrase = CONDITIONS.choose(&mut self.rng).unwrap();
        format!("{phrase} {}", self.counter)
    }

    fn gateway_label(&mut self) -> Option<String> {
        if self.rng.random_bool(0.7) {
            Some(format!("{}?", NOUNS.choose(&mut self.rng).unwrap()))
        } else {
            None
        }
    }

    /// Splits `total` into `parts` shares of at least `min` each.
    fn shares(&mut self, total: usize, parts: usize, min: usize) -> Vec<usize> {
        let mut shares = vec![min; parts];
        for _ in 0..total.saturating_sub(min * parts) {
            let i = self.rng.random_range(0..parts);
            shares[i] += 1;
        }
        shares
    }

    /// Elements that always fall through to their successor.
    fn body(&mut self, mut budget: usize, depth: usize) -> Vec<Element> {
        let mut seq = Vec::new();
        while budget > 0 {
            let roll: f64 = self.rng.random();
            if depth < MAX_DEPTH && budget >= 3 && roll < 0.4 {
                let size = self.rng.random_range(3..=budget.min(9));
                budget -= size;
                if roll < 0.25 {
                    seq.push(self.joined_gateway(size, depth));
                } else {
                    seq.push(self.parallel_gateway(size, depth));
                }
            } else {
                budget -= 1;
                seq.push(self.task());
            }
        }
        seq
    }

    fn joined_gateway(&mut self, size: usize, depth: usize) -> Element {
        let id = self.fresh("xor");
        let label = self.gateway_label();
        let count = if size >= 4 && self.rng.random_bool(0.3) { 3 } else { 2 };
        let shares = self.shares(size - 1, count, 0);
        let mut branches = Vec::with_capacity(count);
        for (i, share) in shares.into_iter().enumerate() {
            let condition = self.condition();
            // The first branch always reaches the join so it is never orphaned.
            let (path, next) = if i == 0 || self.rng.random_bool(0.5) {
                (self.body(share, depth + 1), None)
            } else {
                self.terminated(share, depth + 1)
            };
            branches.push(Branch {
                condition,
                path,
                next,
            });
        }
        Element::ExclusiveGateway {
            id,
            label,
            has_join: true,
            branches,
        }
    }

    fn parallel_gateway(&mut self, size: usize, depth: usize) -> Element {
        let id = self.fresh("and");
        let count = if size >= 4 && self.rng.random_bool(0.3) { 3 } else { 2 };
        let shares = self.shares(size - 1, count, 1);
        let branches = shares
            .into_iter()
            .map(|share| self.body(share, depth + 1))
            .collect();
        Element::ParallelGateway { id, branches }
    }

    /// A gateway without join whose branches all terminate. With `force_end`
    /// the first branch finishes in an end event.
    fn joinless_gateway(&mut self, size: usize, depth: usize, force_end: bool) -> Element {
        let id = self.fresh("xor");
        let label = self.gateway_label();
        let shares = self.shares(size.saturating_sub(1), 2, 0);
        let mut branches = Vec::with_capacity(2);
        for (i, share) in shares.into_iter().enumerate() {
            let condition = self.condition();
            let (path, next) = if i == 0 && force_end {
                let mut path = self.body(share.saturating_sub(1), depth + 1);
                path.push(self.end_event());
                (path, None)
            } else {
                self.terminated(share, depth + 1)
            };
            branches.push(Branch {
                condition,
                path,
                next,
            });
        }
        Element::ExclusiveGateway {
            id,
            label,
            has_join: false,
            branches,
        }
    }

    fn end_event(&mut self) -> Element {
        let id = self.fresh("end");
        Element::Event {
            kind: EventKind::End,
            id,
            label: self.event_label("Stopped"),
        }
    }

    /// A branch path that never falls through: it ends in an end event, a
    /// backward jump, or a nested gateway without join.
    fn terminated(&mut self, budget: usize, depth: usize) -> (Vec<Element>, Option<String>) {
        let roll: f64 = self.rng.random();
        if depth < MAX_DEPTH && budget >= 3 && roll < 0.2 {
            let inner = self.rng.random_range(3..=budget);
            let mut path = self.body(budget - inner, depth);
            path.push(self.joinless_gateway(inner, depth, false));
            (path, None)
        } else if roll < 0.6 {
            let mut path = self.body(budget.saturating_sub(1), depth);
            path.push(self.end_event());
            (path, None)
        } else {
            let path = self.body(budget, depth);
            let target = self.placed.choose(&mut self.rng).cloned();
            (path, target)
        }
    }
}
