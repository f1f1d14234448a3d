use std::borrow::Cow;
use std::collections::hash_map::Entry;
use std::collections::HashMap;

use super::{same_table, StateId, Transition, WeightedFst, EPSILON};
use crate::error::{Error, Result};

// Epsilon filter states. After the left machine moves alone on an epsilon
// output only it may keep doing so (or a real match happens); likewise for
// the right machine. Simultaneous epsilon moves are allowed from the neutral
// state only. This keeps exactly one product path per pair of paths.
const NEUTRAL: u8 = 0;
const LEFT_ALONE: u8 = 1;
const RIGHT_ALONE: u8 = 2;

type Key = (StateId, StateId, u8);

struct Builder {
    out: WeightedFst,
    ids: HashMap<Key, StateId>,
    queue: Vec<Key>,
}

impl Builder {
    fn state(&mut self, key: Key) -> StateId {
        match self.ids.entry(key) {
            Entry::Occupied(e) => *e.get(),
            Entry::Vacant(e) => {
                let id = self.out.add_state();
                e.insert(id);
                self.queue.push(key);
                id
            }
        }
    }
}

/// Composition `a ∘ b`: maps x to z with weight min over y of
/// `a(x, y) + b(y, z)`. The result is trimmed.
pub fn compose(a: &WeightedFst, b: &WeightedFst) -> Result<WeightedFst> {
    if !same_table(a.osyms(), b.isyms()) {
        return Err(Error::Contract(
            "left output symbols differ from right input symbols".into(),
        ));
    }
    let b: Cow<'_, WeightedFst> = if b.is_input_sorted() {
        Cow::Borrowed(b)
    } else {
        let mut sorted = b.clone();
        sorted.arcsort_input();
        Cow::Owned(sorted)
    };

    let mut builder = Builder {
        out: WeightedFst::new(a.isyms().clone(), b.osyms().clone()),
        ids: HashMap::new(),
        queue: Vec::new(),
    };
    let start_key = (a.start(), b.start(), NEUTRAL);
    builder.ids.insert(start_key, 0);
    builder.queue.push(start_key);

    while let Some(key @ (sa, sb, filter)) = builder.queue.pop() {
        let from = builder.ids[&key];
        if let (Some(fa), Some(fb)) = (a.final_weight(sa), b.final_weight(sb)) {
            builder.out.set_final(from, fa + fb);
        }
        let b_eps = b.arcs_with_input(sb, EPSILON);
        for arc1 in a.arcs(sa) {
            if arc1.olabel == EPSILON {
                if filter != RIGHT_ALONE {
                    let to = builder.state((arc1.nextstate, sb, LEFT_ALONE));
                    builder
                        .out
                        .add_arc(from, Transition::new(arc1.ilabel, EPSILON, arc1.weight, to));
                }
                if filter == NEUTRAL {
                    for arc2 in b_eps {
                        let to = builder.state((arc1.nextstate, arc2.nextstate, NEUTRAL));
                        builder.out.add_arc(
                            from,
                            Transition::new(arc1.ilabel, arc2.olabel, arc1.weight + arc2.weight, to),
                        );
                    }
                }
            } else {
                for arc2 in b.arcs_with_input(sb, arc1.olabel) {
                    let to = builder.state((arc1.nextstate, arc2.nextstate, NEUTRAL));
                    builder.out.add_arc(
                        from,
                        Transition::new(arc1.ilabel, arc2.olabel, arc1.weight + arc2.weight, to),
                    );
                }
            }
        }
        if filter != LEFT_ALONE {
            for arc2 in b_eps {
                let to = builder.state((sa, arc2.nextstate, RIGHT_ALONE));
                builder
                    .out
                    .add_arc(from, Transition::new(EPSILON, arc2.olabel, arc2.weight, to));
            }
        }
    }
    Ok(builder.out.connect())
}
