use std::io::Cursor;

use num_complex::Complex64;
use num_rational::BigRational;
use weylcalc::quant::{quantize_poly, HermiteOperator};
use weylcalc::{Registry, SymExpr};
use weylcalc_cli::formats::*;

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

#[test]
fn bare_symbol_file_is_one_dimensional() {
    let f = SymbolFile::parse("# oscillator\n1 + x^2 + xi^2\n").unwrap();
    assert_eq!(f.registry.dim(), 1);
    assert!(f.expr().unwrap().as_poly().is_some());
}

#[test]
fn symbol_file_with_header() {
    let f = SymbolFile::parse("dim 1\nbase a = 1 + x^2 + xi^2\nsymbol a^(1/2)\n").unwrap();
    assert_eq!(f.registry.bases().len(), 1);
    assert_eq!(f.text, "a^(1/2)");
    f.expr().unwrap();
}

#[test]
fn malformed_symbol_files_are_rejected() {
    assert!(SymbolFile::parse("").is_err());
    assert!(SymbolFile::parse("x\nxi\n").is_err());
    assert!(SymbolFile::parse("dim 1\nbase a = x\n").is_err());
    assert!(SymbolFile::parse("symbol x\nsymbol xi\n").is_err());
}

#[test]
fn lifting_registers_a_base() {
    let f = SymbolFile::parse("1 + x^2 + xi^2").unwrap();
    let e = f.lifted().unwrap();
    assert_eq!(e.registry().bases().len(), 1);
    let w = weylcalc::PhasePoint::d1(0.3, -1.2);
    assert!((e.evaluate(&w).unwrap() - f.expr().unwrap().evaluate(&w).unwrap()).norm() < 1e-14);
}

#[test]
fn value_parsers() {
    assert_eq!(parse_complex("0.5").unwrap(), Complex64::new(0.5, 0.0));
    assert_eq!(parse_complex(" 0.5 , -0.7").unwrap(), Complex64::new(0.5, -0.7));
    assert!(parse_complex("1,2,3").is_err());
    assert_eq!(parse_rational("1/2").unwrap(), rat(1, 2));
    assert_eq!(parse_rational("0.5").unwrap(), rat(1, 2));
    assert_eq!(parse_rational("0.1").unwrap(), rat(1, 10));
    assert_eq!(parse_rational("-3").unwrap(), rat(-3, 1));
    assert!(parse_rational("half").is_err());
    assert_eq!(parse_range("16:41").unwrap(), (16, 41));
    assert!(parse_range("16").is_err());
}

#[test]
fn points_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("grid.csv");
    std::fs::write(&p, "x,xi\n# comment\n1.5, -2\n0,0.25\n").unwrap();
    let pts = read_points(&p, 1).unwrap();
    assert_eq!(pts.len(), 2);
    assert_eq!((pts[0].x[0], pts[0].xi[0]), (1.5, -2.0));

    let q = dir.path().join("grid2.csv");
    std::fs::write(&q, "xi2,x1,x2,xi1\n4,1,2,3\n").unwrap();
    let pts = read_points(&q, 2).unwrap();
    assert_eq!((pts[0].x.clone(), pts[0].xi.clone()), (vec![1.0, 2.0], vec![3.0, 4.0]));

    std::fs::write(&q, "x,eta\n1,2\n").unwrap();
    assert!(read_points(&q, 1).is_err());
    std::fs::write(&q, "x,xi\n1,abc\n").unwrap();
    assert!(read_points(&q, 1).is_err());
}

#[test]
fn matrix_round_trip_is_bit_exact() {
    let s = SymExpr::parse(&Registry::plain(1), "x^2 + xi^2 + x*xi").unwrap();
    let op = quantize_poly(&s, 12, None).unwrap();
    let bytes = write_matrix(&op);
    assert_eq!(&bytes[..4], b"WCMX");
    assert_eq!(bytes.len(), 24 + 16 * 12 * 12);
    let back = read_matrix(Cursor::new(&bytes)).unwrap();
    assert_eq!(back.n_basis(), 12);
    assert_eq!(back.n_pad(), op.n_pad());
    assert_eq!(back.max_abs_diff(&op).unwrap(), 0.0);
    assert_eq!(write_matrix(&back), bytes);
}

#[test]
fn corrupt_matrices_are_rejected() {
    let op = HermiteOperator::identity(4);
    let good = write_matrix(&op);
    assert!(read_matrix(Cursor::new(&good[..good.len() - 1])).is_err());
    assert!(read_matrix(Cursor::new(&good[..10])).is_err());
    let mut bad = good.clone();
    bad[0] = b'X';
    assert!(read_matrix(Cursor::new(&bad)).is_err());
    let mut bad = good.clone();
    bad[4] = 9;
    assert!(read_matrix(Cursor::new(&bad)).is_err());
    // flip the imaginary part of entry (0, 1) so the Hermitian flag lies
    let mut bad = good;
    let off = 24 + 16 + 8;
    bad[off..off + 8].copy_from_slice(&1.0f64.to_le_bytes());
    assert!(read_matrix(Cursor::new(&bad)).is_err());
}

#[test]
fn matrix_csv_lists_every_entry() {
    let op = HermiteOperator::identity(3);
    let text = String::from_utf8(matrix_csv(&op).unwrap()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "row,col,re,im");
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[1], "0,0,1.0,0.0");
}

#[test]
fn number_formatting_round_trips() {
    for v in [0.0, 1.0, -2.5, 5.5217963219852675e-19, 1e300, std::f64::consts::PI] {
        assert_eq!(num(v).parse::<f64>().unwrap(), v);
    }
    assert!(num(5.5e-19).contains('e'));
}
