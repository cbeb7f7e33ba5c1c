use alloc::string::String;
use alloc::vec::Vec;

use super::MolError;
use crate::geom::{self, Vec3};

/// Number of standard amino-acid types; the mask token has this index.
pub const NUM_RESIDUE_TYPES: usize = 20;

/// Amino-acid type in BLOSUM order, plus a mask token used during design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResidueType {
    Ala,
    Arg,
    Asn,
    Asp,
    Cys,
    Gln,
    Glu,
    Gly,
    His,
    Ile,
    Leu,
    Lys,
    Met,
    Phe,
    Pro,
    Ser,
    Thr,
    Trp,
    Tyr,
    Val,
    Mask,
}

const ONE: &[u8; 21] = b"ARNDCQEGHILKMFPSTWYVX";
const THREE: [&str; 21] = [
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU", "LYS", "MET",
    "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL", "UNK",
];

impl ResidueType {
    pub const ALL: [ResidueType; 20] = [
        Self::Ala,
        Self::Arg,
        Self::Asn,
        Self::Asp,
        Self::Cys,
        Self::Gln,
        Self::Glu,
        Self::Gly,
        Self::His,
        Self::Ile,
        Self::Leu,
        Self::Lys,
        Self::Met,
        Self::Phe,
        Self::Pro,
        Self::Ser,
        Self::Thr,
        Self::Trp,
        Self::Tyr,
        Self::Val,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            NUM_RESIDUE_TYPES => Some(Self::Mask),
            _ => Self::ALL.get(i).copied(),
        }
    }

    pub fn one_letter(self) -> char {
        ONE[self.index()] as char
    }

    pub fn three_letter(self) -> &'static str {
        THREE[self.index()]
    }

    pub fn from_one_letter(c: char) -> Option<Self> {
        let c = c.to_ascii_uppercase() as u8;
        ONE[..NUM_RESIDUE_TYPES]
            .iter()
            .position(|&x| x == c)
            .and_then(Self::from_index)
    }

    /// Three-letter code lookup; a few common modified residues map to
    /// their parent type.
    pub fn from_three_letter(code: &str) -> Option<Self> {
        let code = code.trim();
        let parent = match code {
            "MSE" => "MET",
            "HID" | "HIE" | "HIP" | "HSD" | "HSE" => "HIS",
            "CYX" => "CYS",
            "SEP" => "SER",
            "TPO" => "THR",
            other => other,
        };
        THREE[..NUM_RESIDUE_TYPES]
            .iter()
            .position(|x| x.eq_ignore_ascii_case(parent))
            .and_then(Self::from_index)
    }

    pub fn is_mask(self) -> bool {
        self == Self::Mask
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub name: String,
    pub element: u8,
    pub pos: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residue {
    pub kind: ResidueType,
    pub chain: char,
    pub seq: i32,
    pub icode: char,
    pub n: Vec3,
    pub ca: Vec3,
    pub c: Vec3,
    pub o: Vec3,
    /// Side-chain heavy atoms; empty when only the backbone is known.
    pub side_chain: Vec<Atom>,
}

/// Distance of the virtual side-chain atom from Cα, in Å.
pub const VIRTUAL_ATOM_OFFSET: f64 = 1.5;

impl Residue {
    pub fn backbone(&self) -> [Vec3; 4] {
        [self.n, self.ca, self.c, self.o]
    }

    pub fn heavy_atoms(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.backbone()
            .into_iter()
            .chain(self.side_chain.iter().map(|a| a.pos))
    }

    pub fn side_chain_atom(&self, name: &str) -> Option<Vec3> {
        self.side_chain.iter().find(|a| a.name == name).map(|a| a.pos)
    }

    fn named(&self, name: &str) -> Option<Vec3> {
        match name {
            "N" => Some(self.n),
            "CA" => Some(self.ca),
            "C" => Some(self.c),
            "O" => Some(self.o),
            other => self.side_chain_atom(other),
        }
    }

    /// Pseudo side-chain position placed opposite the N and C directions.
    pub fn virtual_atom(&self) -> Vec3 {
        let u = geom::normalized(geom::sub(self.n, self.ca));
        let v = geom::normalized(geom::sub(self.c, self.ca));
        let dir = geom::normalized(geom::scale(geom::add(u, v), -1.0));
        geom::add(self.ca, geom::scale(dir, VIRTUAL_ATOM_OFFSET))
    }

    /// Residue-id ordering key within a chain.
    pub fn key(&self) -> (i32, char) {
        (self.seq, self.icode)
    }
}

const CHI_ATOMS: [&[[&str; 4]]; 20] = [
    &[],
    &[
        ["N", "CA", "CB", "CG"],
        ["CA", "CB", "CG", "CD"],
        ["CB", "CG", "CD", "NE"],
        ["CG", "CD", "NE", "CZ"],
    ],
    &[["N", "CA", "CB", "CG"], ["CA", "CB", "CG", "OD1"]],
    &[["N", "CA", "CB", "CG"], ["CA", "CB", "CG", "OD1"]],
    &[["N", "CA", "CB", "SG"]],
    &[
        ["N", "CA", "CB", "CG"],
        ["CA", "CB", "CG", "CD"],
        ["CB", "CG", "CD", "OE1"],
    ],
    &[
        ["N", "CA", "CB", "CG"],
        ["CA", "CB", "CG", "CD"],
        ["CB", "CG", "CD", "OE1"],
    ],
    &[],
    &[["N", "CA", "CB", "CG"], ["CA", "CB", "CG", "ND1"]],
    &[["N", "CA", "CB", "CG1"], ["CA", "CB", "CG1", "CD1"]],
    &[["N", "CA", "CB", "CG"], ["CA", "CB", "CG", "CD1"]],
    &[
        ["N", "CA", "CB", "CG"],
        ["CA", "CB", "CG", "CD"],
        ["CB", "CG", "CD", "CE"],
        ["CG", "CD", "CE", "NZ"],
    ],
    &[
        ["N", "CA", "CB", "CG"],
        ["CA", "CB", "CG", "SD"],
        ["CB", "CG", "SD", "CE"],
    ],
    &[["N", "CA", "CB", "CG"], ["CA", "CB", "CG", "CD1"]],
    &[["N", "CA", "CB", "CG"], ["CA", "CB", "CG", "CD"]],
    &[["N", "CA", "CB", "OG"]],
    &[["N", "CA", "CB", "OG1"]],
    &[["N", "CA", "CB", "CG"], ["CA", "CB", "CG", "CD1"]],
    &[["N", "CA", "CB", "CG"], ["CA", "CB", "CG", "CD1"]],
    &[["N", "CA", "CB", "CG1"]],
];

/// Side-chain χ angles (radians); `None` where the type has no such angle
/// or an atom is missing.
pub fn chi_angles(residue: &Residue) -> [Option<f64>; 4] {
    let mut out = [None; 4];
    if residue.kind.is_mask() {
        return out;
    }
    for (slot, names) in out.iter_mut().zip(CHI_ATOMS[residue.kind.index()]) {
        let p: Option<[Vec3; 4]> = (|| {
            Some([
                residue.named(names[0])?,
                residue.named(names[1])?,
                residue.named(names[2])?,
                residue.named(names[3])?,
            ])
        })();
        *slot = p.map(|p| geom::dihedral(p[0], p[1], p[2], p[3]));
    }
    out
}

/// A full protein structure in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Protein {
    pub residues: Vec<Residue>,
}

impl Protein {
    pub fn new(residues: Vec<Residue>) -> Self {
        Self { residues }
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn sequence(&self) -> String {
        self.residues.iter().map(|r| r.kind.one_letter()).collect()
    }

    /// Ordinal position of each residue within its chain, in file order.
    pub fn chain_positions(&self) -> Vec<usize> {
        let mut counts: Vec<(char, usize)> = Vec::new();
        self.residues
            .iter()
            .map(|r| match counts.iter_mut().find(|(c, _)| *c == r.chain) {
                Some((_, k)) => {
                    *k += 1;
                    *k - 1
                }
                None => {
                    counts.push((r.chain, 1));
                    0
                }
            })
            .collect()
    }
}

/// Pocket residues with a pocket center.
#[derive(Debug, Clone, PartialEq)]
pub struct PocketBackbone {
    pub residues: Vec<Residue>,
    pub center: Vec3,
}

impl PocketBackbone {
    pub fn new(residues: Vec<Residue>, center: Vec3) -> Result<Self, MolError> {
        let p = Self { residues, center };
        p.validate()?;
        Ok(p)
    }

    /// Checks that residue ids increase within each chain.
    pub fn validate(&self) -> Result<(), MolError> {
        let mut last: Vec<(char, (i32, char))> = Vec::new();
        for r in &self.residues {
            match last.iter_mut().find(|(c, _)| *c == r.chain) {
                Some((_, k)) => {
                    if r.key() <= *k {
                        return Err(MolError::Unordered(r.chain));
                    }
                    *k = r.key();
                }
                None => last.push((r.chain, r.key())),
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn ca(&self) -> Vec<Vec3> {
        self.residues.iter().map(|r| r.ca).collect()
    }

    pub fn types(&self) -> Vec<ResidueType> {
        self.residues.iter().map(|r| r.kind).collect()
    }

    pub fn sequence(&self) -> String {
        self.residues.iter().map(|r| r.kind.one_letter()).collect()
    }
}
