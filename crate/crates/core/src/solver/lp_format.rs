//! Writer for the LP text format (Minimize / Subject To / Bounds / Binaries / End).

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::milp::{MilpModel, Sense, VarKind};

const WRAP: usize = 200;

struct Lines {
    out: String,
    line: String,
}

impl Lines {
    fn new() -> Self {
        Self { out: String::new(), line: String::new() }
    }

    fn push(&mut self, token: &str) {
        if self.line.len() + token.len() + 1 > WRAP && !self.line.trim().is_empty() {
            self.out.push_str(self.line.trim_end());
            self.out.push('\n');
            self.line = String::from("   ");
        }
        self.line.push(' ');
        self.line.push_str(token);
    }

    fn end(&mut self) {
        if !self.line.trim().is_empty() {
            self.out.push_str(self.line.trim_end());
            self.out.push('\n');
        }
        self.line.clear();
    }
}

fn term(first: bool, coef: f64, name: &str) -> String {
    let sign = if coef < 0.0 { "-" } else { "+" };
    if first && coef >= 0.0 {
        format!("{} {}", coef, name)
    } else {
        format!("{} {} {}", sign, coef.abs(), name)
    }
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{}", v)
    }
}

/// Renders `model` in LP format with variables listed in lexicographic name order.
pub fn to_lp_string(model: &MilpModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\\ {}", model.name);
    if model.obj_constant != 0.0 {
        let _ = writeln!(s, "\\ objective constant {}", model.obj_constant);
    }
    s.push_str("Minimize\n");
    let mut obj: Vec<(&str, f64)> = model.objective.iter().map(|(&j, &c)| (model.vars[j].name.as_str(), c)).collect();
    obj.sort_by(|a, b| a.0.cmp(b.0));
    let mut l = Lines::new();
    l.push("obj:");
    for (k, (name, c)) in obj.iter().enumerate() {
        l.push(&term(k == 0, *c, name));
    }
    l.end();
    s.push_str(&l.out);

    s.push_str("Subject To\n");
    for (k, c) in model.constraints.iter().enumerate() {
        let mut terms: Vec<(&str, f64)> = c.coefs.iter().map(|&(j, a)| (model.vars[j].name.as_str(), a)).collect();
        terms.sort_by(|a, b| a.0.cmp(b.0));
        let mut l = Lines::new();
        l.push(&format!("{}:", model.row_name(k)));
        if terms.is_empty() {
            match model.vars.first() {
                Some(v) => l.push(&format!("0 {}", v.name)),
                None => continue,
            }
        }
        for (n, (name, a)) in terms.iter().enumerate() {
            l.push(&term(n == 0, *a, name));
        }
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        l.push(&format!("{} {}", sense, num(c.rhs)));
        l.end();
        s.push_str(&l.out);
    }

    let mut order: Vec<usize> = (0..model.vars.len()).collect();
    order.sort_by(|&a, &b| model.vars[a].name.cmp(&model.vars[b].name));
    s.push_str("Bounds\n");
    for &j in &order {
        let v = &model.vars[j];
        let line = if v.kind == VarKind::Binary && v.lb == 0.0 && v.ub == 1.0 {
            continue;
        } else if v.lb == v.ub {
            format!(" {} = {}", v.name, num(v.lb))
        } else if v.lb == f64::NEG_INFINITY && v.ub == f64::INFINITY {
            format!(" {} free", v.name)
        } else if v.ub == f64::INFINITY {
            format!(" {} >= {}", v.name, num(v.lb))
        } else {
            format!(" {} <= {} <= {}", num(v.lb), v.name, num(v.ub))
        };
        s.push_str(&line);
        s.push('\n');
    }
    s.push_str("Binaries\n");
    let mut l = Lines::new();
    for &j in &order {
        if model.vars[j].kind == VarKind::Binary {
            l.push(&model.vars[j].name);
        }
    }
    l.end();
    s.push_str(&l.out);
    s.push_str("End\n");
    s
}

pub fn write_lp<W: Write>(mut w: W, model: &MilpModel) -> std::io::Result<()> {
    w.write_all(to_lp_string(model).as_bytes())
}

pub fn export_lp(model: &MilpModel, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, to_lp_string(model))
}
