//! Solomon VRPTW file support: a parser for the classic text layout and a
//! seeded synthesizer producing layouts with the same structure (clustered
//! or random customers, short or long planning horizon) for environments
//! where the original benchmark files are not available. Synthesized
//! layouts are clearly not the published instances; they only share the
//! format and the class geometry.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TrspError};

/// One row of a Solomon file (depot or customer).
#[derive(Debug, Clone, PartialEq)]
pub struct SolomonNode {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub demand: f64,
    pub ready: f64,
    pub due: f64,
    pub service: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolomonInstance {
    pub name: String,
    pub depot: SolomonNode,
    pub customers: Vec<SolomonNode>,
}

/// The six Solomon geometry/horizon classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolomonClass {
    C1,
    C2,
    R1,
    R2,
    RC1,
    RC2,
}

impl SolomonClass {
    /// Class of an instance name such as `C101` or `rc208`.
    pub fn of(name: &str) -> Option<SolomonClass> {
        let up = name.to_ascii_uppercase();
        if up.starts_with("RC1") {
            Some(SolomonClass::RC1)
        } else if up.starts_with("RC2") {
            Some(SolomonClass::RC2)
        } else if up.starts_with("C1") {
            Some(SolomonClass::C1)
        } else if up.starts_with("C2") {
            Some(SolomonClass::C2)
        } else if up.starts_with("R1") {
            Some(SolomonClass::R1)
        } else if up.starts_with("R2") {
            Some(SolomonClass::R2)
        } else {
            None
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            SolomonClass::C1 => "C1",
            SolomonClass::C2 => "C2",
            SolomonClass::R1 => "R1",
            SolomonClass::R2 => "R2",
            SolomonClass::RC1 => "RC1",
            SolomonClass::RC2 => "RC2",
        }
    }

    /// (horizon, service time, min window width, max window width).
    fn shape(self) -> (f64, f64, f64, f64) {
        match self {
            SolomonClass::C1 => (1236.0, 90.0, 60.0, 180.0),
            SolomonClass::C2 => (3390.0, 90.0, 160.0, 360.0),
            SolomonClass::R1 => (230.0, 10.0, 10.0, 30.0),
            SolomonClass::R2 => (1000.0, 10.0, 60.0, 200.0),
            SolomonClass::RC1 => (240.0, 10.0, 30.0, 60.0),
            SolomonClass::RC2 => (960.0, 10.0, 120.0, 240.0),
        }
    }

    fn clustered_share(self) -> f64 {
        match self {
            SolomonClass::C1 | SolomonClass::C2 => 1.0,
            SolomonClass::R1 | SolomonClass::R2 => 0.0,
            SolomonClass::RC1 | SolomonClass::RC2 => 0.5,
        }
    }
}

fn parse_row(line: &str, line_no: usize) -> Result<SolomonNode> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 7 {
        return Err(TrspError::Parse {
            line: line_no,
            msg: format!("expected 7 fields, got {}", fields.len()),
        });
    }
    let mut vals = [0.0f64; 7];
    for (i, f) in fields.iter().enumerate() {
        vals[i] = f.parse().map_err(|_| TrspError::Parse {
            line: line_no,
            msg: format!("not a number: {f:?}"),
        })?;
    }
    Ok(SolomonNode {
        id: vals[0] as usize,
        x: vals[1],
        y: vals[2],
        demand: vals[3],
        ready: vals[4],
        due: vals[5],
        service: vals[6],
    })
}

/// Parses the classic Solomon layout: instance name on the first line, a
/// `CUSTOMER` section header, a column header, then one row per node with
/// the depot first.
pub fn parse_solomon(text: &str) -> Result<SolomonInstance> {
    let lines: Vec<&str> = text.lines().collect();
    let name = lines
        .iter()
        .find(|l| !l.trim().is_empty())
        .map(|l| l.trim().to_string())
        .ok_or(TrspError::Parse { line: 1, msg: "empty file".into() })?;

    let cust_header = lines
        .iter()
        .position(|l| l.trim().to_ascii_uppercase().starts_with("CUSTOMER"))
        .ok_or(TrspError::Parse { line: 1, msg: "missing CUSTOMER section".into() })?;

    let mut rows = Vec::new();
    for (idx, line) in lines.iter().enumerate().skip(cust_header + 1) {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        // The column header row is the only non-numeric line allowed here.
        if rows.is_empty() && t.to_ascii_uppercase().starts_with("CUST") {
            continue;
        }
        rows.push(parse_row(t, idx + 1)?);
    }
    if rows.len() < 2 {
        return Err(TrspError::Parse {
            line: lines.len(),
            msg: "need a depot row and at least one customer".into(),
        });
    }
    let depot = rows.remove(0);
    Ok(SolomonInstance { name, depot, customers: rows })
}

impl SolomonInstance {
    /// Renders the classic text layout; whole numbers only, so parsing the
    /// output reproduces the instance exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.name);
        s.push_str("\n\nVEHICLE\nNUMBER     CAPACITY\n  25         200\n\nCUSTOMER\n");
        s.push_str(
            "CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE TIME\n\n",
        );
        let mut row = |n: &SolomonNode| {
            s.push_str(&format!(
                "{:>5} {:>9} {:>9} {:>9} {:>11} {:>9} {:>13}\n",
                n.id, n.x, n.y, n.demand, n.ready, n.due, n.service
            ));
        };
        row(&self.depot);
        for c in &self.customers {
            row(c);
        }
        s
    }
}

/// Builds a seeded Solomon-style layout whose geometry and horizon follow
/// the class encoded in `name` (`C1xx`, `R2xx`, ...). All quantities are
/// whole numbers, matching the original file conventions.
pub fn synth_solomon(name: &str, n_customers: usize, seed: u64) -> Result<SolomonInstance> {
    let class = SolomonClass::of(name).ok_or_else(|| {
        TrspError::Config(format!("cannot infer a Solomon class from name {name:?}"))
    })?;
    if n_customers == 0 {
        return Err(TrspError::Config("need at least one customer".into()));
    }
    let (horizon, service, w_min, w_max) = class.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let depot = SolomonNode {
        id: 0,
        x: 40.0,
        y: 50.0,
        demand: 0.0,
        ready: 0.0,
        due: horizon,
        service: 0.0,
    };

    let n_clustered = (n_customers as f64 * class.clustered_share()).round() as usize;
    let n_centers = (n_clustered / 10).max(1);
    let centers: Vec<(f64, f64)> = (0..n_centers)
        .map(|_| (rng.gen_range(10.0..90.0), rng.gen_range(10.0..90.0)))
        .collect();

    let mut customers = Vec::with_capacity(n_customers);
    for i in 0..n_customers {
        let (x, y) = if i < n_clustered {
            let (cx, cy) = centers[i % n_centers];
            (
                (cx + rng.gen_range(-6.0..=6.0)).round().clamp(0.0, 100.0),
                (cy + rng.gen_range(-6.0..=6.0)).round().clamp(0.0, 100.0),
            )
        } else {
            (
                rng.gen_range(0.0..=100.0_f64).round(),
                rng.gen_range(0.0..=100.0_f64).round(),
            )
        };
        let dist = ((x - depot.x).powi(2) + (y - depot.y).powi(2)).sqrt();
        // Keep the window reachable from the depot and closable before the
        // horizon, including the trip back.
        let width = rng
            .gen_range(w_min..=w_max)
            .round()
            .min((horizon - service - 2.0 * dist.ceil()).floor())
            .max(1.0);
        let lo = dist.ceil();
        let hi = (horizon - service - width - dist).floor().max(lo);
        let ready = rng.gen_range(lo..=hi).round();
        customers.push(SolomonNode {
            id: i + 1,
            x,
            y,
            demand: rng.gen_range(1.0..=30.0_f64).round(),
            ready,
            due: ready + width,
            service,
        });
    }
    Ok(SolomonInstance { name: name.to_string(), depot, customers })
}
