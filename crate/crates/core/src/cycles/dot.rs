use std::fmt::Write as _;
use std::path::Path;

use super::{CycleHierarchy, CycleId};
use crate::simulate::format_real;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn cluster_label(h: &CycleHierarchy, id: CycleId) -> String {
    let c = h.cycle(id);
    format!(
        "Π_{id}: H_e={}, H_m={}, φ={}",
        format_real(c.exit_height),
        format_real(c.mixing_height),
        format_real(c.potential)
    )
}

fn write_cycle(out: &mut String, h: &CycleHierarchy, id: CycleId, as_cluster: bool, depth: usize) {
    let pad = "  ".repeat(depth);
    let c = h.cycle(id);
    if as_cluster {
        let _ = writeln!(out, "{pad}subgraph cluster_{id} {{");
        let _ = writeln!(out, "{pad}  label={};", quote(&cluster_label(h, id)));
        for &ch in &c.children {
            let nested = !h.cycle(ch).is_trivial();
            write_cycle(out, h, ch, nested, depth + 1);
        }
        if c.children.is_empty() {
            write_node(out, h, c.members[0], depth + 1);
        }
        let _ = writeln!(out, "{pad}}}");
    } else if c.is_trivial() {
        write_node(out, h, c.members[0], depth);
    } else {
        for &ch in &c.children {
            write_cycle(out, h, ch, !h.cycle(ch).is_trivial(), depth);
        }
    }
}

fn write_node(out: &mut String, h: &CycleHierarchy, x: usize, depth: usize) {
    let g = h.graph();
    let label = format!("{}\\nφ={}", g.names()[x], format_real(g.phi()[x]));
    let _ = writeln!(
        out,
        "{}s{x} [label={}];",
        "  ".repeat(depth),
        quote(&label).replace("\\\\n", "\\n")
    );
}

/// Level `k` of the hierarchy: every set of `E^k` (for `k >= 1`) is a
/// cluster containing its nested sub-cycles, and edges between sets carry
/// `V^k / V_*^k`. Output is canonical: sets appear by minimal member.
pub fn level_dot(h: &CycleHierarchy, k: usize) -> String {
    let level = &h.levels()[k];
    let mut out = String::new();
    let kernel = h.kernel().map_or(String::new(), |k| format!(" {k}"));
    let _ = writeln!(out, "digraph hierarchy {{");
    let _ = writeln!(out, "  compound=true;");
    let _ = writeln!(out, "  label={};", quote(&format!("E^{k}{kernel}")));
    for &id in &level.cycles {
        write_cycle(&mut out, h, id, k > 0, 1);
    }
    for (i, row) in level.costs.iter().enumerate() {
        let from = h.cycle(level.cycles[i]);
        for &(j, v) in row {
            let to = h.cycle(level.cycles[j]);
            let label = format!("{}/{}", format_real(v), format_real(v - level.exit[i]));
            let mut attrs = vec![format!("label={}", quote(&label))];
            if k > 0 {
                attrs.push(format!("ltail=cluster_{}", from.id));
                attrs.push(format!("lhead=cluster_{}", to.id));
            }
            let _ = writeln!(
                out,
                "  s{} -> s{} [{}];",
                from.min_member(),
                to.min_member(),
                attrs.join(", ")
            );
        }
    }
    out.push_str("}\n");
    out
}

/// The last nontrivial partition of the hierarchy, i.e. the level just
/// below the whole space (or the single state for a one-state chain).
pub fn to_dot(h: &CycleHierarchy) -> String {
    level_dot(h, h.depth().saturating_sub(1))
}

pub fn export_dot(h: &CycleHierarchy, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, to_dot(h))
}
