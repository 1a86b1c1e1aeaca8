//! Formula fixtures shared by the parser tests and the acceptance run.

use ordnorm::formula::parse_formula;

use super::Rng;

pub const TOY_FORMULA: &str = "y1 + y2 + z1 + z2 ~ 0 + X1 + X2 + X3";

/// Malformed formulas with the byte offset their error must point at.
pub const MALFORMED: [(&str, usize); 20] = [
    ("", 0),
    ("~ x", 0),
    ("y1 + y2", 7),
    ("y ~", 3),
    ("y ~ x +", 7),
    ("y + ~ x", 4),
    ("y1 + y1 ~ x", 5),
    ("y ~ a + a", 8),
    ("y ~ x | 2", 8),
    ("y ~ x | w", 8),
    ("y ~ 1 + x", 6),
    ("y ~ x ~ z", 6),
    ("y ~ 2x", 4),
    ("y $ x", 2),
    ("y ~ x * z", 6),
    ("y ~ x z", 6),
    ("y ~ x | 1 | 1", 10),
    ("y ~ ~", 4),
    ("y ~ é", 4),
    ("y1 y2 ~ x", 3),
];

/// Number of malformed fixtures whose error is reported at the expected offset.
pub fn malformed_positioned() -> usize {
    MALFORMED
        .iter()
        .filter(|(text, offset)| matches!(parse_formula(text), Err(e) if e.offset == *offset && !e.message.is_empty()))
        .count()
}

const PIECES: [&str; 16] = [
    "y", "x1", "z.b", "_w", "0", "1", "2", "+", "~", "|", " ", "  ", "é", "$", "(", "\t",
];

const NAMES: [&str; 6] = ["y1", "y2", "z", "X1", "x.b", "_w"];

fn name_list(rng: &mut Rng, names: &[&str]) -> String {
    let count = 1 + rng.index(names.len());
    (0..count)
        .map(|_| names[rng.index(names.len())])
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Either token soup or a well-formed formula with one random edit.
pub fn random_formula(rng: &mut Rng) -> String {
    if rng.index(2) == 0 {
        let len = rng.index(16);
        return (0..len).map(|_| PIECES[rng.index(PIECES.len())]).collect();
    }
    let lhs = name_list(rng, &NAMES[..3]);
    let rhs = name_list(rng, &NAMES[3..]);
    let zero = if rng.index(2) == 0 { "0 + " } else { "" };
    let bar = if rng.index(4) == 0 { " | 1" } else { "" };
    let mut text = format!("{lhs} ~ {zero}{rhs}{bar}");
    if rng.index(3) > 0 {
        let cuts: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
        let at = cuts[rng.index(cuts.len())];
        let piece = PIECES[rng.index(PIECES.len())];
        if rng.index(2) == 0 {
            text.insert_str(at, piece);
        } else {
            let end = text[at..].chars().next().map_or(at, |c| at + c.len_utf8());
            text.replace_range(at..end, piece);
        }
    }
    text
}

fn squeeze(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Parses `trials` random strings; returns the number of (accepted, rejected) inputs.
/// Panics if an accepted formula does not round-trip or an error offset is out of range.
pub fn fuzz(trials: usize, seed: u64) -> (usize, usize) {
    let mut rng = Rng::new(seed);
    let (mut ok, mut rejected) = (0, 0);
    for _ in 0..trials {
        let text = random_formula(&mut rng);
        match parse_formula(&text) {
            Ok(spec) => {
                let rendered = spec.to_string();
                assert_eq!(parse_formula(&rendered).as_ref(), Ok(&spec), "{text:?}");
                assert_eq!(squeeze(&rendered), squeeze(&text), "{text:?}");
                ok += 1;
            }
            Err(e) => {
                assert!(
                    e.offset <= text.len() && text.is_char_boundary(e.offset),
                    "{text:?}: {e}"
                );
                rejected += 1;
            }
        }
    }
    (ok, rejected)
}
