//! Native instance text format.
//!
//! ```text
//! TRSP 1
//! [META] <name> <K> <N> <tools> <parts> <skills> <repl_time> <central_open> <central_close> <rounding>
//! [NODES]
//! <id> <x> <y>                      (one per node, 0 = central depot)
//! [TASKS]
//! <id> <node> <service> <open> <close> <part demands> <tool flags> <skill flags>
//! [TECHS]
//! <id> <home node> <open> <close> <inventory> <tool flags> <skill flags>
//! ```
//!
//! Floats are printed with six decimals and coordinates are generated
//! pre-quantized to that grid, so write/read/write is byte-stable.

use crate::error::{Result, TrspError};
use crate::model::{DistanceRounding, Instance, ResourceCounts, Task, Technician};

const VERSION_LINE: &str = "TRSP 1";

fn push_flags(out: &mut String, flags: &[bool]) {
    for &f in flags {
        out.push_str(if f { " 1" } else { " 0" });
    }
}

/// Renders an instance; inverse of [`read_trsp`].
pub fn write_trsp(inst: &Instance) -> String {
    let mut s = String::new();
    s.push_str(VERSION_LINE);
    s.push('\n');
    let name: String =
        inst.name.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
    s.push_str(&format!(
        "[META] {} {} {} {} {} {} {:.6} {:.6} {:.6} {}\n",
        name,
        inst.n_techs(),
        inst.n_tasks(),
        inst.counts.tools,
        inst.counts.parts,
        inst.counts.skills,
        inst.replenishment_time,
        inst.central_tw.0,
        inst.central_tw.1,
        inst.rounding.tag(),
    ));
    s.push_str("[NODES]\n");
    for (i, (x, y)) in inst.coords.iter().enumerate() {
        s.push_str(&format!("{i} {x:.6} {y:.6}\n"));
    }
    s.push_str("[TASKS]\n");
    for t in &inst.tasks {
        s.push_str(&format!(
            "{} {} {:.6} {:.6} {:.6}",
            t.id, t.node, t.service_time, t.tw_open, t.tw_close
        ));
        for &d in &t.part_demand {
            s.push_str(&format!(" {d}"));
        }
        push_flags(&mut s, &t.tool_need);
        push_flags(&mut s, &t.skill_need);
        s.push('\n');
    }
    s.push_str("[TECHS]\n");
    for t in &inst.technicians {
        s.push_str(&format!(
            "{} {} {:.6} {:.6}",
            t.id, t.home_depot, t.depot_tw.0, t.depot_tw.1
        ));
        for &v in &t.part_inventory {
            s.push_str(&format!(" {v}"));
        }
        push_flags(&mut s, &t.tool_onboard);
        push_flags(&mut s, &t.skill_has);
        s.push('\n');
    }
    s
}

struct Cursor<'a> {
    fields: Vec<&'a str>,
    next: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(line_text: &'a str, line: usize) -> Self {
        Cursor { fields: line_text.split_whitespace().collect(), next: 0, line }
    }

    fn err(&self, msg: impl Into<String>) -> TrspError {
        TrspError::Parse { line: self.line, msg: msg.into() }
    }

    fn word(&mut self) -> Result<&'a str> {
        let f = self.fields.get(self.next).ok_or_else(|| self.err("line is too short"))?;
        self.next += 1;
        Ok(f)
    }

    fn num<T: std::str::FromStr>(&mut self) -> Result<T> {
        let w = self.word()?;
        w.parse().map_err(|_| self.err(format!("bad number: {w:?}")))
    }

    fn flags(&mut self, n: usize) -> Result<Vec<bool>> {
        (0..n)
            .map(|_| match self.word()? {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(self.err(format!("flag must be 0 or 1, got {other:?}"))),
            })
            .collect()
    }

    fn finish(&self) -> Result<()> {
        if self.next != self.fields.len() {
            return Err(self.err("trailing fields on line"));
        }
        Ok(())
    }
}

/// Parses the native format; errors carry 1-based line numbers.
pub fn read_trsp(text: &str) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (vline, version) =
        lines.next().ok_or(TrspError::Parse { line: 1, msg: "empty file".into() })?;
    if version != VERSION_LINE {
        if version.starts_with("TRSP") {
            return Err(TrspError::Version(version.to_string()));
        }
        return Err(TrspError::Parse { line: vline, msg: "missing TRSP header".into() });
    }

    let (mline, meta) =
        lines.next().ok_or(TrspError::Parse { line: vline, msg: "missing [META]".into() })?;
    let mut c = Cursor::new(meta, mline);
    if c.word()? != "[META]" {
        return Err(c.err("expected [META]"));
    }
    let name = c.word()?.to_string();
    let n_techs: usize = c.num()?;
    let n_tasks: usize = c.num()?;
    let counts = ResourceCounts { tools: c.num()?, parts: c.num()?, skills: c.num()? };
    let replenishment_time: f64 = c.num()?;
    let central_tw = (c.num()?, c.num()?);
    let rounding = DistanceRounding::from_tag(c.word()?)?;
    c.finish()?;

    let n_nodes = 1 + n_techs + n_tasks;
    let expect_header = |got: Option<(usize, &str)>, want: &str| -> Result<()> {
        match got {
            Some((_, l)) if l == want => Ok(()),
            Some((line, l)) => Err(TrspError::Parse {
                line,
                msg: format!("expected section {want}, found {l:?}"),
            }),
            None => Err(TrspError::Parse { line: 0, msg: format!("missing section {want}") }),
        }
    };

    expect_header(lines.next(), "[NODES]")?;
    let mut coords = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let (ln, l) = lines
            .next()
            .ok_or(TrspError::Parse { line: 0, msg: format!("missing node row {i}") })?;
        let mut c = Cursor::new(l, ln);
        let id: usize = c.num()?;
        if id != i {
            return Err(c.err(format!("node rows must be in order, expected id {i}")));
        }
        coords.push((c.num()?, c.num()?));
        c.finish()?;
    }

    expect_header(lines.next(), "[TASKS]")?;
    let mut tasks = Vec::with_capacity(n_tasks);
    for i in 0..n_tasks {
        let (ln, l) = lines
            .next()
            .ok_or(TrspError::Parse { line: 0, msg: format!("missing task row {i}") })?;
        let mut c = Cursor::new(l, ln);
        let id: usize = c.num()?;
        if id != i {
            return Err(c.err(format!("task rows must be in order, expected id {i}")));
        }
        let node: usize = c.num()?;
        if node != 1 + n_techs + i {
            return Err(c.err(format!("task {i} must sit at node {}", 1 + n_techs + i)));
        }
        let service_time: f64 = c.num()?;
        let tw_open: f64 = c.num()?;
        let tw_close: f64 = c.num()?;
        let part_demand: Vec<u32> =
            (0..counts.parts).map(|_| c.num()).collect::<Result<_>>()?;
        let tool_need = c.flags(counts.tools)?;
        let skill_need = c.flags(counts.skills)?;
        c.finish()?;
        tasks.push(Task { id, node, service_time, tw_open, tw_close, part_demand, tool_need, skill_need });
    }

    expect_header(lines.next(), "[TECHS]")?;
    let mut technicians = Vec::with_capacity(n_techs);
    for i in 0..n_techs {
        let (ln, l) = lines
            .next()
            .ok_or(TrspError::Parse { line: 0, msg: format!("missing technician row {i}") })?;
        let mut c = Cursor::new(l, ln);
        let id: usize = c.num()?;
        if id != i {
            return Err(c.err(format!("technician rows must be in order, expected id {i}")));
        }
        let home_depot: usize = c.num()?;
        if home_depot != 1 + i {
            return Err(c.err(format!("technician {i} must live at node {}", 1 + i)));
        }
        let depot_tw = (c.num()?, c.num()?);
        let part_inventory: Vec<u32> =
            (0..counts.parts).map(|_| c.num()).collect::<Result<_>>()?;
        let tool_onboard = c.flags(counts.tools)?;
        let skill_has = c.flags(counts.skills)?;
        c.finish()?;
        technicians.push(Technician { id, home_depot, part_inventory, tool_onboard, skill_has, depot_tw });
    }

    if let Some((line, l)) = lines.next() {
        return Err(TrspError::Parse { line, msg: format!("unexpected trailing line {l:?}") });
    }

    Instance::from_coords(
        name,
        tasks,
        technicians,
        replenishment_time,
        central_tw,
        coords,
        rounding,
        counts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::generator::{derive_trsp, GeneratorConfig};
    use crate::io::solomon::synth_solomon;

    fn sample() -> Instance {
        let base = synth_solomon("RC101", 20, 3).unwrap();
        derive_trsp(&base, &GeneratorConfig { seed: 8, ..GeneratorConfig::default() }).unwrap()
    }

    #[test]
    fn write_read_write_is_byte_stable() {
        let inst = sample();
        let text = write_trsp(&inst);
        let back = read_trsp(&text).unwrap();
        assert_eq!(inst, back);
        assert_eq!(text, write_trsp(&back));
    }

    #[test]
    fn version_mismatch_is_reported() {
        let text = write_trsp(&sample()).replace("TRSP 1", "TRSP 9");
        assert!(matches!(read_trsp(&text), Err(TrspError::Version(_))));
    }

    #[test]
    fn mangled_row_reports_its_line() {
        let mut lines: Vec<String> = write_trsp(&sample()).lines().map(String::from).collect();
        // Corrupt the first task row (after header, meta, nodes, [TASKS]).
        let tasks_at = lines.iter().position(|l| l == "[TASKS]").unwrap();
        lines[tasks_at + 1] = "0 nonsense".into();
        match read_trsp(&lines.join("\n")) {
            Err(TrspError::Parse { line, .. }) => assert_eq!(line, tasks_at + 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rounding_tag_roundtrips() {
        let base = synth_solomon("C201", 10, 1).unwrap();
        let cfg = GeneratorConfig {
            rounding: DistanceRounding::TruncateOneDecimal,
            ..GeneratorConfig::default()
        };
        let inst = derive_trsp(&base, &cfg).unwrap();
        let back = read_trsp(&write_trsp(&inst)).unwrap();
        assert_eq!(back.rounding, DistanceRounding::TruncateOneDecimal);
        assert_eq!(inst, back);
    }
}
