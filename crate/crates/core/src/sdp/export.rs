//! SDPA sparse text export.
//!
//! SDPA's dual form `max ⟨F_0, Y⟩ s.t. ⟨F_j, Y⟩ = c_j, Y ⪰ 0` matches the
//! primal here with `F_0 = −C`, `F_j = A_j`, `c_j = b_j`. Free scalars are
//! split as `z = z⁺ − z⁻` into one trailing diagonal block of size `2k`.
//! Numbers are written in Rust's shortest round-trip form, so the output is
//! exact and identical across runs.

use std::fmt::Write;

use super::SdpProblem;

pub fn write_sparse(p: &SdpProblem) -> String {
    let mut out = String::new();
    let k = p.num_free();
    let nblocks = p.blocks.len() + usize::from(k > 0);
    let _ = writeln!(out, "\"hcsos export: {} constraints\"", p.num_constraints());
    let _ = writeln!(out, "{}", p.num_constraints());
    let _ = writeln!(out, "{nblocks}");
    let mut sizes: Vec<String> = p.blocks.iter().map(|b| b.dim.to_string()).collect();
    if k > 0 {
        sizes.push(format!("-{}", 2 * k));
    }
    let _ = writeln!(out, "{}", sizes.join(" "));
    let rhs: Vec<String> = p
        .constraints
        .iter()
        .map(|c| format!("{:?}", c.rhs))
        .collect();
    let _ = writeln!(out, "{}", rhs.join(" "));

    let free_block = p.blocks.len() + 1;
    for e in &p.objective {
        if e.value != 0.0 {
            let _ = writeln!(
                out,
                "0 {} {} {} {:?}",
                e.block + 1,
                e.row + 1,
                e.col + 1,
                -e.value
            );
        }
    }
    for (v, &c) in p.free_cost.iter().enumerate() {
        if c != 0.0 {
            let _ = writeln!(out, "0 {free_block} {0} {0} {1:?}", 2 * v + 1, -c);
            let _ = writeln!(out, "0 {free_block} {0} {0} {1:?}", 2 * v + 2, c);
        }
    }
    for (j, con) in p.constraints.iter().enumerate() {
        for e in &con.entries {
            if e.value != 0.0 {
                let _ = writeln!(
                    out,
                    "{} {} {} {} {:?}",
                    j + 1,
                    e.block + 1,
                    e.row + 1,
                    e.col + 1,
                    e.value
                );
            }
        }
        for &(v, f) in &con.free {
            if f != 0.0 {
                let _ = writeln!(out, "{} {free_block} {1} {1} {2:?}", j + 1, 2 * v + 1, f);
                let _ = writeln!(out, "{} {free_block} {1} {1} {2:?}", j + 1, 2 * v + 2, -f);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::Constraint;
    use super::*;

    #[test]
    fn exact_layout() {
        let mut p = SdpProblem::new();
        let b = p.add_block("g", 2);
        p.add_objective_entry(b, 0, 0, 1.0);
        p.add_objective_entry(b, 1, 1, 1.0);
        let z = p.add_free(-1.0);
        p.add_constraint(Constraint::new(0.1).entry(b, 1, 0, 0.5).free_var(z, 1.0));
        let text = write_sparse(&p);
        let expected = "\"hcsos export: 1 constraints\"\n1\n2\n2 -2\n0.1\n\
            0 1 1 1 -1.0\n0 1 2 2 -1.0\n0 2 1 1 1.0\n0 2 2 2 -1.0\n\
            1 1 1 2 0.5\n1 2 1 1 1.0\n1 2 2 2 -1.0\n";
        assert_eq!(text, expected);
        assert_eq!(write_sparse(&p), text);
    }
}
