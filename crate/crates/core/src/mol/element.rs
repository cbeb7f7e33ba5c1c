//! Element symbols and single-bond covalent radii (Å).

const SYMBOLS: [&str; 54] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe",
];

// Cordero et al. covalent radii, indexed by atomic number - 1.
const RADII: [f64; 54] = [
    0.31, 0.28, 1.28, 0.96, 0.84, 0.76, 0.71, 0.66, 0.57, 0.58, 1.66, 1.41, 1.21, 1.11, 1.07,
    1.05, 1.02, 1.06, 2.03, 1.76, 1.70, 1.60, 1.53, 1.39, 1.39, 1.32, 1.26, 1.24, 1.32, 1.22,
    1.22, 1.20, 1.19, 1.20, 1.20, 1.16, 2.20, 1.95, 1.90, 1.75, 1.64, 1.54, 1.47, 1.46, 1.42,
    1.39, 1.45, 1.44, 1.42, 1.39, 1.39, 1.38, 1.39, 1.40,
];

/// Radius used for elements outside the table.
pub const DEFAULT_RADIUS: f64 = 1.5;

/// Multiplier on the summed radii below which two atoms are bonded.
pub const BOND_TOLERANCE: f64 = 1.3;

/// Atomic number for a case-insensitive element symbol.
pub fn atomic_number(symbol: &str) -> Option<u8> {
    let s = symbol.trim();
    SYMBOLS
        .iter()
        .position(|e| e.eq_ignore_ascii_case(s))
        .map(|i| (i + 1) as u8)
}

pub fn symbol(z: u8) -> &'static str {
    SYMBOLS.get((z as usize).wrapping_sub(1)).copied().unwrap_or("X")
}

pub fn covalent_radius(z: u8) -> f64 {
    RADII
        .get((z as usize).wrapping_sub(1))
        .copied()
        .unwrap_or(DEFAULT_RADIUS)
}

/// Whether two atoms at distance `d` count as covalently bonded.
pub fn bonded(z1: u8, z2: u8, d: f64) -> bool {
    d < BOND_TOLERANCE * (covalent_radius(z1) + covalent_radius(z2))
}

/// Element guessed from a PDB atom name such as `" CA "` or `"CL1"`.
pub fn from_atom_name(name: &str) -> Option<u8> {
    let letters: alloc::string::String = name
        .trim()
        .chars()
        .take_while(|c| c.is_ascii_alphabetic())
        .collect();
    if letters.len() >= 2 {
        // Two-letter halogens and ions are written left-aligned; protein
        // atom names like CA/CB mean carbon.
        let two = &letters[..2];
        if matches!(two.to_ascii_uppercase().as_str(), "CL" | "BR" | "ZN" | "MG" | "FE" | "NA" | "MN" | "CU" | "CO" | "NI" | "CA" if name.starts_with(|c: char| c != ' '))
            && !matches!(letters.to_ascii_uppercase().as_str(), "CA" | "CB" | "CG" | "CD" | "CE" | "CZ" | "CH" | "NE" | "NZ" | "NH" | "ND" | "OG" | "OD" | "OE" | "OH" | "SG" | "SD")
        {
            return atomic_number(two);
        }
    }
    letters.get(..1).and_then(atomic_number)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup() {
        assert_eq!(atomic_number("C"), Some(6));
        assert_eq!(atomic_number("cl"), Some(17));
        assert_eq!(symbol(8), "O");
        assert_eq!(covalent_radius(6), 0.76);
        assert_eq!(covalent_radius(200), DEFAULT_RADIUS);
    }

    #[test]
    fn carbon_pair_rule() {
        // 1.3 * (0.76 + 0.76) = 1.976
        assert!(bonded(6, 6, 1.5));
        assert!(!bonded(6, 6, 2.0));
    }

    #[test]
    fn atom_names() {
        assert_eq!(from_atom_name(" CA "), Some(6));
        assert_eq!(from_atom_name("CA"), Some(6));
        assert_eq!(from_atom_name(" OD1"), Some(8));
        assert_eq!(from_atom_name("CL1 "), Some(17));
        assert_eq!(from_atom_name(" NZ "), Some(7));
    }
}
