//! Line-oriented FST text format.
//!
//! Arc lines are `src<TAB>dst<TAB>in<TAB>out<TAB>weight` with symbol names;
//! final lines are `state<TAB>weight`. The first line names the start state.
//! A machine with an empty language serializes to the empty string.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::{StateId, SymbolTable, Transition, WeightedFst};
use crate::error::{Error, Result};

impl WeightedFst {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.is_empty_language() {
            return out;
        }
        let order = std::iter::once(self.start()).chain(self.states().filter(|&s| s != self.start()));
        for s in order {
            for arc in self.arcs(s) {
                let _ = writeln!(
                    out,
                    "{s}\t{}\t{}\t{}\t{}",
                    arc.nextstate,
                    self.isyms().symbol(arc.ilabel).unwrap_or("<?>"),
                    self.osyms().symbol(arc.olabel).unwrap_or("<?>"),
                    arc.weight
                );
            }
            if let Some(w) = self.final_weight(s) {
                let _ = writeln!(out, "{s}\t{w}");
            }
        }
        out
    }

    pub fn parse_text(
        text: &str,
        source: &str,
        isyms: Arc<SymbolTable>,
        osyms: Arc<SymbolTable>,
    ) -> Result<WeightedFst> {
        let mut fst = WeightedFst::new(isyms.clone(), osyms.clone());
        let mut start: Option<StateId> = None;
        let parse_state = |field: &str, line: usize| -> Result<StateId> {
            field
                .parse()
                .map_err(|_| Error::parse(source, line, format!("bad state id {field:?}")))
        };
        let parse_weight = |field: &str, line: usize| -> Result<f64> {
            field
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite())
                .ok_or_else(|| Error::parse(source, line, format!("bad weight {field:?}")))
        };
        let ensure = |fst: &mut WeightedFst, s: StateId| {
            while fst.num_states() <= s as usize {
                fst.add_state();
            }
        };
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let src = parse_state(fields[0], line_no)?;
            ensure(&mut fst, src);
            start.get_or_insert(src);
            match fields.len() {
                2 => {
                    let w = parse_weight(fields[1], line_no)?;
                    fst.set_final(src, w);
                }
                5 => {
                    let dst = parse_state(fields[1], line_no)?;
                    ensure(&mut fst, dst);
                    let label = |table: &SymbolTable, sym: &str| {
                        table
                            .find(sym)
                            .ok_or_else(|| Error::parse(source, line_no, format!("unknown symbol {sym:?}")))
                    };
                    let ilabel = label(&isyms, fields[2])?;
                    let olabel = label(&osyms, fields[3])?;
                    let w = parse_weight(fields[4], line_no)?;
                    fst.add_arc(src, Transition::new(ilabel, olabel, w, dst));
                }
                n => {
                    return Err(Error::parse(source, line_no, format!("expected 2 or 5 fields, got {n}")));
                }
            }
        }
        if let Some(s) = start {
            fst.set_start(s);
        }
        Ok(fst)
    }

    pub fn load_text(path: impl AsRef<Path>, isyms: Arc<SymbolTable>, osyms: Arc<SymbolTable>) -> Result<WeightedFst> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(&text, &path.display().to_string(), isyms, osyms)
    }
}
