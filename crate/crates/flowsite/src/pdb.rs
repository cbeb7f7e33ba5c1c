//! Fixed-column structure records: ATOM, HETATM and CONECT.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use flowsite_core::geom::{centroid, Vec3};
use flowsite_core::mol::{element, Atom, LigandAtom, LigandGraph, MolError, PocketBackbone, Protein, Residue, ResidueType};

/// Files with more than this fraction of unreadable coordinate records are
/// rejected outright.
pub const MAX_REJECTED_FRACTION: f64 = 0.10;

#[derive(Debug, thiserror::Error)]
pub enum PdbError {
    #[error("{rejected} of {total} coordinate records could not be parsed")]
    TooManyRejected { rejected: usize, total: usize },
    #[error("no complete residues")]
    NoResidues,
    #[error("no heavy ligand atoms")]
    NoLigandAtoms,
    #[error("CONECT references unknown atom serial {0}")]
    UnknownSerial(i64),
    #[error(transparent)]
    Mol(#[from] MolError),
}

/// One parsed coordinate record.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub hetero: bool,
    pub serial: i64,
    pub name: String,
    pub altloc: char,
    pub resname: String,
    pub chain: char,
    pub resseq: i32,
    pub icode: char,
    pub pos: Vec3,
    pub element: Option<u8>,
}

fn col(line: &str, start: usize, end: usize) -> &str {
    // Columns are 1-based and inclusive.
    let bytes = line.as_bytes();
    let s = (start - 1).min(bytes.len());
    let e = end.min(bytes.len());
    line.get(s..e).unwrap_or("")
}

fn col_char(line: &str, c: usize) -> char {
    col(line, c, c).chars().next().unwrap_or(' ')
}

fn parse_record(line: &str) -> Option<Record> {
    let hetero = line.starts_with("HETATM");
    let num = |s: usize, e: usize| col(line, s, e).trim().parse::<f64>().ok().filter(|v| v.is_finite());
    let pos = [num(31, 38)?, num(39, 46)?, num(47, 54)?];
    let name = col(line, 13, 16).trim().to_string();
    let sym = col(line, 77, 78).trim();
    let element = if sym.is_empty() {
        element::from_atom_name(col(line, 13, 16))
    } else {
        element::atomic_number(sym)
    };
    Some(Record {
        hetero,
        serial: col(line, 7, 11).trim().parse().unwrap_or(0),
        name,
        altloc: col_char(line, 17),
        resname: col(line, 18, 20).trim().to_string(),
        chain: col_char(line, 22),
        resseq: col(line, 23, 26).trim().parse().unwrap_or(0),
        icode: col_char(line, 27),
        pos,
        element,
    })
}

/// Coordinate records of one kind. Unreadable coordinates reject the record.
fn records(text: &str, hetero: bool) -> Result<Vec<Record>, PdbError> {
    let tag = if hetero { "HETATM" } else { "ATOM" };
    let mut out = Vec::new();
    let (mut total, mut rejected) = (0usize, 0usize);
    for line in text.lines() {
        if !line.starts_with(tag) {
            continue;
        }
        total += 1;
        match parse_record(line) {
            Some(r) => out.push(r),
            None => rejected += 1,
        }
    }
    if total > 0 && rejected as f64 > MAX_REJECTED_FRACTION * total as f64 {
        return Err(PdbError::TooManyRejected { rejected, total });
    }
    if rejected > 0 {
        log::warn!("skipped {rejected} unreadable coordinate records");
    }
    Ok(out)
}

#[derive(Default)]
struct Partial {
    kind: Option<ResidueType>,
    n: Option<Vec3>,
    ca: Option<Vec3>,
    c: Option<Vec3>,
    o: Option<Vec3>,
    side: Vec<Atom>,
}

/// A parsed protein and how many residues were dropped for missing
/// backbone atoms.
#[derive(Debug, Clone)]
pub struct ProteinParse {
    pub protein: Protein,
    pub missing: usize,
}

fn assemble(text: &str, side_chains: bool) -> Result<ProteinParse, PdbError> {
    let mut order: Vec<(char, i32, char)> = Vec::new();
    let mut parts: HashMap<(char, i32, char), Partial> = HashMap::new();
    for r in records(text, false)? {
        if r.altloc != ' ' && r.altloc != 'A' {
            continue;
        }
        let key = (r.chain, r.resseq, r.icode);
        let p = parts.entry(key).or_insert_with(|| {
            order.push(key);
            Partial::default()
        });
        p.kind.get_or_insert(ResidueType::from_three_letter(&r.resname).unwrap_or(ResidueType::Mask));
        let slot = match r.name.as_str() {
            "N" => &mut p.n,
            "CA" => &mut p.ca,
            "C" => &mut p.c,
            "O" => &mut p.o,
            _ => {
                let z = r.element.unwrap_or(0);
                if side_chains && z > 1 && r.name != "OXT" && !p.side.iter().any(|a| a.name == r.name) {
                    p.side.push(Atom { name: r.name, element: z, pos: r.pos });
                }
                continue;
            }
        };
        slot.get_or_insert(r.pos);
    }
    let mut residues = Vec::with_capacity(order.len());
    let mut missing = 0;
    for key in order {
        let p = parts.remove(&key).expect("key recorded");
        match (p.n, p.ca, p.c, p.o) {
            (Some(n), Some(ca), Some(c), Some(o)) => residues.push(Residue {
                kind: p.kind.unwrap_or(ResidueType::Mask),
                chain: key.0,
                seq: key.1,
                icode: key.2,
                n,
                ca,
                c,
                o,
                side_chain: p.side,
            }),
            _ => missing += 1,
        }
    }
    if missing > 0 {
        log::warn!("dropped {missing} residues with incomplete backbones");
    }
    if residues.is_empty() {
        return Err(PdbError::NoResidues);
    }
    Ok(ProteinParse {
        protein: Protein::new(residues),
        missing,
    })
}

/// All residues with their side-chain heavy atoms.
pub fn parse_protein(text: &str) -> Result<ProteinParse, PdbError> {
    assemble(text, true)
}

/// Backbone-only residues, centered on the mean Cα.
pub fn parse_backbone(text: &str) -> Result<(PocketBackbone, usize), PdbError> {
    let parsed = assemble(text, false)?;
    let ca: Vec<Vec3> = parsed.protein.residues.iter().map(|r| r.ca).collect();
    let center = centroid(&ca);
    Ok((PocketBackbone::new(parsed.protein.residues, center)?, parsed.missing))
}

fn conect(text: &str) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for line in text.lines().filter(|l| l.starts_with("CONECT")) {
        let fixed: Vec<i64> = [(7, 11), (12, 16), (17, 21), (22, 26), (27, 31)]
            .iter()
            .map(|&(s, e)| col(line, s, e).trim())
            .take_while(|s| !s.is_empty())
            .filter_map(|s| s.parse().ok())
            .collect();
        let serials = if fixed.len() >= 2 {
            fixed
        } else {
            line[6..].split_whitespace().filter_map(|s| s.parse().ok()).collect()
        };
        if let Some((&a, rest)) = serials.split_first() {
            for &b in rest {
                out.push((a, b));
            }
        }
    }
    out
}

/// Heavy HETATM atoms except waters. Bonds come from CONECT records when
/// any connect two ligand atoms, otherwise from covalent radii.
pub fn parse_ligand(text: &str) -> Result<LigandGraph, PdbError> {
    let recs: Vec<Record> = records(text, true)?
        .into_iter()
        .filter(|r| !matches!(r.resname.as_str(), "HOH" | "WAT" | "DOD"))
        .filter(|r| r.altloc == ' ' || r.altloc == 'A')
        .filter(|r| r.element.map_or(true, |z| z > 1))
        .collect();
    if recs.is_empty() {
        return Err(PdbError::NoLigandAtoms);
    }
    let atoms: Vec<LigandAtom> = recs
        .iter()
        .map(|r| LigandAtom::new(r.element.unwrap_or(0), r.name.clone()))
        .collect();
    let coords: Vec<Vec3> = recs.iter().map(|r| r.pos).collect();
    let index: HashMap<i64, usize> = recs.iter().enumerate().map(|(i, r)| (r.serial, i)).collect();
    let mut bonds = Vec::new();
    for (a, b) in conect(text) {
        // CONECT lines may mention atoms that were filtered (waters, H).
        if let (Some(&i), Some(&j)) = (index.get(&a), index.get(&b)) {
            if i != j {
                bonds.push((i.min(j), i.max(j)));
            }
        }
    }
    bonds.sort_unstable();
    bonds.dedup();
    if bonds.is_empty() {
        return Ok(LigandGraph::with_inferred_bonds(atoms, coords)?);
    }
    Ok(LigandGraph::new(atoms, &bonds, Some(coords))?)
}

fn atom_name_field(name: &str, z: u8) -> String {
    // Single-letter elements start in column 14 unless the name is full width.
    if name.len() < 4 && element::symbol(z).len() == 1 {
        format!(" {name:<3}")
    } else {
        format!("{name:<4}")
    }
}

#[allow(clippy::too_many_arguments)]
fn coord_line(out: &mut String, tag: &str, serial: usize, name: &str, z: u8, resname: &str, chain: char, resseq: i32, icode: char, p: Vec3) {
    let _ = writeln!(
        out,
        "{tag:<6}{serial:>5} {}{:1}{resname:>3} {chain}{resseq:>4}{icode}   {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}          {:>2}",
        atom_name_field(name, z),
        ' ',
        p[0],
        p[1],
        p[2],
        1.0,
        0.0,
        element::symbol(z).to_uppercase(),
    );
}

/// HETATM records for `coords` with the ligand's atoms and CONECT records
/// for its bonds.
pub fn write_ligand(ligand: &LigandGraph, coords: &[Vec3]) -> String {
    let mut out = String::new();
    for (i, (a, p)) in ligand.atoms().iter().zip(coords).enumerate() {
        coord_line(&mut out, "HETATM", i + 1, &a.name, a.element, "LIG", 'L', 1, ' ', *p);
    }
    let mut partners: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, j) in ligand.bonds() {
        partners.entry(i).or_default().push(j);
        partners.entry(j).or_default().push(i);
    }
    for (i, js) in partners {
        for chunk in js.chunks(4) {
            let _ = write!(out, "CONECT{:>5}", i + 1);
            for j in chunk {
                let _ = write!(out, "{:>5}", j + 1);
            }
            out.push('\n');
        }
    }
    out.push_str("END\n");
    out
}

/// ATOM records for every residue, backbone first.
pub fn write_protein(protein: &Protein) -> String {
    let mut out = String::new();
    let mut serial = 1;
    for r in &protein.residues {
        let res = r.kind.three_letter();
        for (name, p) in [("N", r.n), ("CA", r.ca), ("C", r.c), ("O", r.o)] {
            let z = element::from_atom_name(&format!(" {name:<3}")).unwrap_or(6);
            coord_line(&mut out, "ATOM", serial, name, z, res, r.chain, r.seq, r.icode, p);
            serial += 1;
        }
        for a in &r.side_chain {
            coord_line(&mut out, "ATOM", serial, &a.name, a.element, res, r.chain, r.seq, r.icode, a.pos);
            serial += 1;
        }
    }
    out.push_str("END\n");
    out
}
