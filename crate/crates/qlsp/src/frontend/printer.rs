use std::fmt::Write;

use crate::gate_algebra::{Factor, Hint, Mat2, SqGate, C64};
use crate::ir::{Affine, GateContent, Instruction, LoopProgram, LoopRange, Op, QubitRef};

pub(crate) fn fmt_affine(var: &str, a: Affine) -> String {
    let lin = match a.k {
        0 => String::new(),
        1 => var.to_string(),
        -1 => format!("-{var}"),
        k => format!("{k}*{var}"),
    };
    match (lin.is_empty(), a.b) {
        (true, b) => b.to_string(),
        (false, 0) => lin,
        (false, b) if b > 0 => format!("{lin}+{b}"),
        (false, b) => format!("{lin}{b}"),
    }
}

fn fmt_complex(c: C64) -> String {
    if c.im == 0.0 && !c.im.is_sign_negative() {
        format!("{}", c.re)
    } else {
        format!("({},{})", c.re, c.im)
    }
}

pub(crate) fn fmt_matrix(m: &Mat2) -> String {
    let e = &m.0;
    format!("[{},{};{},{}]", fmt_complex(e[0][0]), fmt_complex(e[0][1]), fmt_complex(e[1][0]), fmt_complex(e[1][1]))
}

struct Printer<'a> {
    p: &'a LoopProgram,
    /// Known matrices that match no builtin and no declared gate element.
    extra: Vec<Mat2>,
}

impl Printer<'_> {
    fn known_name(&mut self, m: &Mat2) -> String {
        if let Some(n) = m.builtin_name() {
            return n.to_string();
        }
        for d in &self.p.gate_defs {
            if let GateContent::Known(ms) = &d.content {
                if let Some(idx) = ms.iter().position(|x| x == m) {
                    return format!("{}[{idx}]", d.name);
                }
            }
        }
        let id = match self.extra.iter().position(|x| x == m) {
            Some(id) => id,
            None => {
                self.extra.push(*m);
                self.extra.len() - 1
            }
        };
        format!("__k{id}")
    }

    fn qref(&self, var: &str, r: &QubitRef) -> String {
        format!("{}[{}]", self.p.qubit_arrays[r.array].name, fmt_affine(var, Affine::new(r.k, r.b)))
    }

    fn instr(&mut self, var: &str, ins: &Instruction, indent: &str, out: &mut String) {
        match &ins.op {
            Op::Cz { a, b, variant } => {
                // variants are written as their standard expansion
                let (zs, _) = crate::gate_algebra::variant_to_standard(*variant);
                for z in zs {
                    let r = if z == crate::gate_algebra::Operand::A { a } else { b };
                    let _ = writeln!(out, "{indent}Z {};", self.qref(var, r));
                }
                let _ = writeln!(out, "{indent}CZ {}, {};", self.qref(var, a), self.qref(var, b));
            }
            Op::Sq { gate, target } => {
                let factors = match gate {
                    SqGate::Known(m) => vec![Factor::Fixed(*m)],
                    SqGate::Symbolic { factors, .. } => factors.clone(),
                };
                for f in factors {
                    let g = match f {
                        Factor::Fixed(m) => self.known_name(&m),
                        Factor::Elem { def, index, .. } => {
                            format!("{}[{}]", self.p.gate_defs[def].name, fmt_affine(var, index))
                        }
                    };
                    let _ = writeln!(out, "{indent}{g} {};", self.qref(var, target));
                }
            }
        }
    }
}

/// Prints a program in the input language.
pub fn print_program(p: &LoopProgram) -> String {
    let mut pr = Printer { p, extra: Vec::new() };
    let var = p.loop_.iter_var.as_str();
    let mut body = String::new();
    for ins in &p.pre_body {
        pr.instr(var, ins, "", &mut body);
    }
    let (lo, hi) = match &p.loop_.range {
        LoopRange::Known { m, n } => (m.to_string(), n.to_string()),
        LoopRange::Unknown { a, b } => (a.clone(), b.clone()),
    };
    let _ = writeln!(body, "for {var} in {lo} to {hi} {{");
    for ins in &p.loop_.body {
        pr.instr(var, ins, "    ", &mut body);
    }
    let _ = writeln!(body, "}}");
    for ins in &p.post_body {
        pr.instr(var, ins, "", &mut body);
    }

    let mut out = String::new();
    for a in &p.qubit_arrays {
        let _ = writeln!(out, "qubit {}[{}];", a.name, a.len);
    }
    for d in &p.gate_defs {
        let content = match &d.content {
            GateContent::Symbolic(Hint::Diagonal) => "RZ".to_string(),
            GateContent::Symbolic(Hint::AntiDiagonal) => "RZ+".to_string(),
            GateContent::Symbolic(Hint::Unknown) => "Unknown".to_string(),
            GateContent::Known(ms) => format!("{{ {} }}", ms.iter().map(fmt_matrix).collect::<Vec<_>>().join(", ")),
        };
        let _ = writeln!(out, "defgate {}[{}] = {content};", d.name, d.len);
    }
    for (id, m) in pr.extra.iter().enumerate() {
        let _ = writeln!(out, "defgate __k{id}[1] = {{ {} }};", fmt_matrix(m));
    }
    if !p.symbols.is_empty() {
        let _ = writeln!(out, "symbolic {};", p.symbols.join(", "));
    }
    out.push_str(&body);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    #[test]
    fn affine_formatting() {
        assert_eq!(fmt_affine("i", Affine::new(1, 0)), "i");
        assert_eq!(fmt_affine("i", Affine::new(3, -3)), "3*i-3");
        assert_eq!(fmt_affine("i", Affine::new(-1, 2)), "-i+2");
        assert_eq!(fmt_affine("i", Affine::new(0, -4)), "-4");
    }

    #[test]
    fn round_trip() {
        let src = "qubit q[9]; qubit r[3]; defgate R[9] = RZ; defgate K[2] = { [(0,1),0;0,(0,-1)], [0.6,0.8;-0.8,0.6] };
                   symbolic m, n;
                   H r[0];
                   for i in m to n { R[2*i+1] q[i]; K[1] q[2*i-1]; CZ q[i], r[1]; T q[i]; }
                   K[0] r[2];";
        let p = parse(src).unwrap();
        let text = print_program(&p);
        assert_eq!(parse(&text).unwrap(), p, "{text}");
    }
}
