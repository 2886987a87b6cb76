//! Image potential against frozen 50-digit values from
//! `tests/oracles/image_potential.py`.

use qrefl::potential::{shorthands, xi_coefficients};

const SHORTHANDS: [((f64, f64, f64), [f64; 5]); 3] = [
    ((0.3, 0.7, 0.5), [0.5175, 0.6425, -0.4625, 0.89022469073824277973, 0.70178344238090998153]),
    ((1.2, 0.05, 2.0), [0.4425, 2.4425, 0.4375, 2.2005681084665386925, 0.20615528128088302749]),
    ((4.0, 1.5, 12.0), [-17.75, 54.25, -22.25, 10.11187420807834219, 2.5]),
];

const XI: [((f64, f64, f64), [f64; 3]); 6] = [
    ((0.4, 0.2, 1.0), [41.417235092714668425, 53.101262776789385005, 69.628018920223457918]),
    ((0.0, 0.3, 1.0), [10.403543904039094902, 10.403543904039094902, 3.8452857862313887999]),
    ((0.9, 0.01, 2.0), [842.61178278655057827, 383.64196947943682634, 7.4086122878528155445]),
    ((2.5, 0.4, 1.0), [12.271678119723432632, 12.271845408551985576, 24.543094411043378264]),
    ((3.0, 7.0, 12.0), [1.7645437169177409079e-3, 1.9501149039291750638e-3, 2.4576322861399530852e-3]),
    ((0.05, 0.001, 5.0), [0.17097408776293015661, 0.17087156491591466139, 3.2899273428034338922e-8]),
];

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

#[test]
fn shorthands_match_reference() {
    for ((rho, z, d), want) in SHORTHANDS {
        let s = shorthands(rho, z, d);
        let got = [s.p, s.q_plus, s.q_minus, s.r_plus, s.r_minus];
        for (g, w) in got.iter().zip(want.iter()) {
            assert!(rel(*g, *w) < 1e-14, "({rho}, {z}, {d}): {g} vs {w}");
        }
    }
}

#[test]
fn xi_matches_reference_at_spec_point() {
    let ((rho, z, d), want) = XI[0];
    let x = xi_coefficients(rho, z, d).unwrap();
    for (g, w) in [x.rho, x.phi, x.z].iter().zip(want.iter()) {
        assert!(rel(*g, *w) < 1e-12, "{g} vs {w}");
    }
}

#[test]
fn xi_matches_reference_elsewhere() {
    for ((rho, z, d), want) in &XI[1..] {
        let x = xi_coefficients(*rho, *z, *d).unwrap();
        let scale = want.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        for (g, w) in [x.rho, x.phi, x.z].iter().zip(want.iter()) {
            // deep inside the hole next to the plate the bracketed terms cancel
            // against 1/z³, so only the error against the largest component is small
            if z / d < 1e-3 {
                assert!(((g - w) / scale).abs() < 1e-9, "({rho}, {z}, {d}): {g} vs {w}");
            } else {
                assert!(rel(*g, *w) < 1e-11, "({rho}, {z}, {d}): {g} vs {w}");
            }
        }
    }
}
