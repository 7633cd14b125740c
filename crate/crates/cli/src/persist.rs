//! On-disk layout of a proximity stack: `S.tsv`, `P.tsv`, `H.tsv` triplet
//! files, `classes.tsv` with `i, j, network, class` rows, `vocab.tsv` and
//! `stack.json` holding the masking rule.

use std::fmt::Write as _;
use std::path::Path;

use nprox_core::proximity::{MaskingRule, Network, ProximityStack};
use nprox_core::textio::{self, write_atomic};
use nprox_core::Vocab;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct StackMeta {
    nodes: usize,
    masking: MaskingRule,
}

pub fn format_classes(stack: &ProximityStack) -> String {
    let mut out = String::new();
    for n in Network::ALL {
        let net = stack.network(n);
        for (i, j, _) in net.matrix.edges() {
            writeln!(out, "{i}\t{j}\t{n}\t{}", net.class_of(i, j).unwrap_or(0)).unwrap();
        }
    }
    out
}

pub fn write_stack(dir: &Path, stack: &ProximityStack, vocab: &Vocab) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    for n in Network::ALL {
        textio::write_triplets(&dir.join(format!("{n}.tsv")), &stack.network(n).matrix)?;
    }
    write_atomic(&dir.join("classes.tsv"), format_classes(stack).as_bytes())?;
    textio::write_vocab(&dir.join("vocab.tsv"), vocab)?;
    let meta = StackMeta {
        nodes: stack.dim(),
        masking: stack.masking,
    };
    write_atomic(
        &dir.join("stack.json"),
        serde_json::to_string_pretty(&meta).expect("meta serializes").as_bytes(),
    )?;
    Ok(())
}

/// Reloads a stack. Classes are recomputed from the weights and checked
/// against `classes.tsv`.
pub fn read_stack(dir: &Path) -> Result<(ProximityStack, Vocab), CliError> {
    let meta_path = dir.join("stack.json");
    let meta_text = std::fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: StackMeta = serde_json::from_str(&meta_text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", meta_path.display())))?;
    let vocab = textio::read_vocab(&dir.join("vocab.tsv"))?;
    if vocab.len() != meta.nodes {
        return Err(CliError::Validation(format!(
            "stack has {} nodes but vocab.tsv lists {}",
            meta.nodes,
            vocab.len()
        )));
    }
    let [s, p, h] = Network::ALL.map(|n| textio::read_triplets(&dir.join(format!("{n}.tsv")), meta.nodes));
    let stack = ProximityStack::from_matrices(s?, p?, h?, meta.masking);
    let classes_path = dir.join("classes.tsv");
    let stored = std::fs::read_to_string(&classes_path).map_err(io_err(&classes_path))?;
    if stored != format_classes(&stack) {
        return Err(CliError::Validation(format!(
            "{} does not match the classes recomputed from the weights",
            classes_path.display()
        )));
    }
    Ok((stack, vocab))
}
