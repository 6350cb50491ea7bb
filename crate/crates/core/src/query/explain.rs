//! Indented text form of a physical plan. The first line names the format
//! version; bump it when the layout changes.

use super::plan::{Access, AccessOp, KeyBound, Node, PdMode, Plan, Pred};
use super::typeck::TExpr;

fn est(e: f64) -> String {
    if e >= 100.0 {
        format!("{e:.0}")
    } else {
        format!("{e:.2}")
    }
}

fn range(lo: &KeyBound, hi: &KeyBound, names: &[String]) -> String {
    match (lo, hi) {
        (KeyBound::Incl(a, _), KeyBound::Incl(b, _)) if a == b => format!("= {}", a.show(names)),
        (KeyBound::Unbounded, KeyBound::Unbounded) => "all".into(),
        (KeyBound::Unbounded, KeyBound::Incl(b, _)) => format!("<= {}", b.show(names)),
        (KeyBound::Unbounded, KeyBound::Excl(b, _)) => format!("< {}", b.show(names)),
        (KeyBound::Incl(a, _), KeyBound::Unbounded) => format!(">= {}", a.show(names)),
        (KeyBound::Excl(a, _), KeyBound::Unbounded) => format!("> {}", a.show(names)),
        (lo, hi) => {
            let l = match lo {
                KeyBound::Incl(a, _) => format!("[{}", a.show(names)),
                KeyBound::Excl(a, _) => format!("({}", a.show(names)),
                KeyBound::Unbounded => "(-inf".into(),
            };
            let h = match hi {
                KeyBound::Incl(b, _) => format!("{}]", b.show(names)),
                KeyBound::Excl(b, _) => format!("{})", b.show(names)),
                KeyBound::Unbounded => "+inf)".into(),
            };
            format!("in {l}, {h}")
        }
    }
}

pub fn pred_text(p: &Pred, names: &[String]) -> String {
    match p {
        Pred::Expr(e) => e.show(names),
        Pred::Class { var, class_id, subclasses } => {
            format!("class({}) {} #{class_id}", names[*var], if *subclasses { "under" } else { "is" })
        }
        Pred::Link { parent, child, attr, .. } => {
            let path = format!("{}.{attr}", names[*parent]);
            if names[*child] == path {
                format!("deref {path}")
            } else {
                format!("{} in {path}", names[*child])
            }
        }
    }
}

fn preds(ps: &[Pred], names: &[String]) -> String {
    ps.iter().map(|p| pred_text(p, names)).collect::<Vec<_>>().join(" and ")
}

pub fn op_name(op: &AccessOp) -> &'static str {
    match op {
        AccessOp::ExtentScan { .. } => "ExtentScan",
        AccessOp::Unnest { .. } => "Unnest",
        AccessOp::BtreeScan { .. } => "BtreeScan",
        AccessOp::MtScan { .. } => "MtScan",
        AccessOp::RtreeWindow { .. } => "RtreeWindow",
        AccessOp::PdScan { .. } => "PdScan",
        AccessOp::BlastProbe { .. } => "BlastProbe",
    }
}

fn access_line(a: &Access, names: &[String]) -> String {
    let body = match &a.op {
        AccessOp::ExtentScan { var, subclasses, .. } => {
            format!("ExtentScan {}{}", names[*var], if *subclasses { "" } else { " only" })
        }
        AccessOp::Unnest { var, parent, attr, .. } => format!("Unnest {} from {}.{attr}", names[*var], parent.show(names)),
        AccessOp::BtreeScan { var, index, lo, hi } => format!("BtreeScan {} via {index} [{}]", names[*var], range(lo, hi, names)),
        AccessOp::MtScan { var, index, class, lo, hi } => {
            format!("MtScan {} via {index} class {class} [{}]", names[*var], range(lo, hi, names))
        }
        AccessOp::RtreeWindow { var, index, window } => {
            format!("RtreeWindow {} via {index} [mbr({})]", names[*var], window.show(names))
        }
        AccessOp::PdScan { index, mode, binds } => {
            let bound: Vec<String> = binds.iter().map(|b| b.map_or("_".to_string(), |v| names[v].clone())).collect();
            let m = match mode {
                PdMode::Identity { pos, key } => format!("@{pos} = {}", key.show(names)),
                PdMode::Attr { lo, hi } => format!("key {}", range(lo, hi, names)),
            };
            format!("PdScan ({}) via {index} [{m}]", bound.join(", "))
        }
        AccessOp::BlastProbe { var, query, threshold, source, .. } => {
            let from = match source {
                Some((p, _)) => format!(" over {}", names[*p]),
                None => String::new(),
            };
            format!("BlastProbe {}{from} [{}.blast({threshold})]", names[*var], query.show(names))
        }
    };
    let checks = if a.checks.is_empty() { String::new() } else { format!(" check [{}]", preds(&a.checks, names)) };
    format!("{body}{checks} est={}", est(a.est))
}

fn join_name(inner: &Access) -> &'static str {
    match &inner.op {
        AccessOp::RtreeWindow { window, .. } if !window.vars().is_empty() => "SpatialJoin",
        AccessOp::BlastProbe { .. } => "BlastJoin",
        _ => "NestedLoopJoin",
    }
}

fn node(n: &Node, names: &[String], depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match n {
        Node::Leaf(a) => out.push_str(&format!("{pad}{}\n", access_line(a, names))),
        Node::Join { outer, inner, est: e } => {
            out.push_str(&format!("{pad}{} est={}\n", join_name(inner), est(*e)));
            node(outer, names, depth + 1, out);
            out.push_str(&format!("{pad}  {}\n", access_line(inner, names)));
        }
        Node::Filter { input, preds: ps, est: e } => {
            out.push_str(&format!("{pad}Filter [{}] est={}\n", preds(ps, names), est(*e)));
            node(input, names, depth + 1, out);
        }
    }
}

fn column(e: &TExpr, names: &[String]) -> String {
    let mut s = e.show(names);
    e.walk(&mut |x| {
        if let TExpr::Closest { index, .. } = x {
            match index {
                Some(ix) => s.push_str(&format!(" via RtreeClosest {ix}")),
                None => s.push_str(" via closest scan"),
            }
        }
    });
    s
}

pub const EXPLAIN_HEADER: &str = "plan v1";

pub fn explain(plan: &Plan) -> String {
    let names = plan.var_names();
    let mut out = format!("{EXPLAIN_HEADER}\n");
    let mut depth = 0;
    if plan.distinct {
        out.push_str("Distinct\n");
        depth = 1;
    }
    let cols: Vec<String> = plan.columns.iter().map(|(_, e)| column(e, &names)).collect();
    out.push_str(&format!("{}Project {}\n", "  ".repeat(depth), cols.join(", ")));
    node(&plan.root, &names, depth + 1, &mut out);
    out
}

/// Access operators in execution order, e.g. `BtreeScan>SpatialJoin>PdScan`.
pub fn summary(plan: &Plan) -> String {
    fn walk(n: &Node, out: &mut Vec<&'static str>) {
        match n {
            Node::Leaf(a) => out.push(op_name(&a.op)),
            Node::Join { outer, inner, .. } => {
                walk(outer, out);
                out.push(match join_name(inner) {
                    "NestedLoopJoin" => op_name(&inner.op),
                    j => j,
                });
            }
            Node::Filter { input, .. } => walk(input, out),
        }
    }
    let mut v = Vec::new();
    walk(&plan.root, &mut v);
    v.join(">")
}
