//! Oracle tests for presentation tables: the base table of the degree-d
//! model map, the right action fold, pre-/post-composition, basis changes,
//! consistency checking, and the table file format.

use biset_core::biset::{BisetTable, Entry};
use biset_core::mcg::{parse_mcg_word, Automorphism};
use biset_core::word::Word;

fn w(text: &str, rank: u32) -> Word {
    Word::parse(text, rank).unwrap()
}

fn entry(table: &BisetTable, i: u32, j: u32) -> (String, u32) {
    let e = table.entry(i, j);
    (e.coeff.to_string(), e.sheet)
}

#[test]
fn base_two_three_is_the_expected_table() {
    let t = BisetTable::base(2, 3).unwrap();
    assert_eq!(entry(&t, 1, 1), ("g1^-1*g2^-1".to_string(), 2));
    assert_eq!(entry(&t, 1, 2), ("g1".to_string(), 1));
    assert_eq!(entry(&t, 1, 3), ("g2".to_string(), 1));
    assert_eq!(entry(&t, 1, 4), ("g1^-1*g2^-1*g3^-1".to_string(), 2));
    assert_eq!(entry(&t, 2, 1), ("g3*g2*g1".to_string(), 1));
    assert_eq!(entry(&t, 2, 2), ("1".to_string(), 2));
    assert_eq!(entry(&t, 2, 3), ("1".to_string(), 2));
    assert_eq!(entry(&t, 2, 4), ("1".to_string(), 1));
}

#[test]
fn base_monodromy_and_default_entries() {
    let d = 4;
    let n = 5;
    let t = BisetTable::base(d, n).unwrap();
    // first column cycles the sheets 1 -> 2 -> ... -> d -> 1
    assert_eq!(t.column_permutation(1), vec![2, 3, 4, 1]);
    // middle columns do not move sheets at all
    for j in 2..=n {
        assert_eq!(t.column_permutation(j), vec![1, 2, 3, 4]);
    }
    // the last column is the inverse cycle
    assert_eq!(t.column_permutation(n + 1), vec![4, 1, 2, 3]);
    // rows past the first carry no coefficient in the middle columns
    for i in 2..=d {
        for j in 2..=n {
            let e = t.entry(i, j);
            assert!(e.coeff.is_empty());
            assert_eq!(e.sheet, i);
        }
    }
}

#[test]
fn base_rejects_degenerate_dimensions() {
    assert!(BisetTable::base(1, 3).is_err());
    assert!(BisetTable::base(0, 3).is_err());
    assert!(BisetTable::base(2, 1).is_err());
}

#[test]
fn base_tables_are_consistent_up_to_six() {
    for d in 2..=6 {
        for n in 2..=6 {
            let t = BisetTable::base(d, n).unwrap();
            let report = t.check_consistency();
            assert!(report.all_ok(), "base({d},{n})");
        }
    }
}

#[test]
fn raw_relator_fold_is_trivial_on_every_sheet() {
    // Folding ginf*g3*g2*g1 letter by letter through the table must come
    // back to the start with no coefficient; sheet 2 is the worked case.
    let t = BisetTable::base(2, 3).unwrap();
    let (coeff, sheet) = t.right_action(2, &[4, 3, 2, 1]).unwrap();
    assert!(coeff.is_empty());
    assert_eq!(sheet, 2);

    for d in 2..=4 {
        for n in 2..=4 {
            let t = BisetTable::base(d, n).unwrap();
            let mut relator: Vec<i32> = vec![(n + 1) as i32];
            relator.extend((1..=n as i32).rev());
            for i in 1..=d {
                let (coeff, sheet) = t.right_action(i, &relator).unwrap();
                assert!(coeff.is_empty(), "base({d},{n}) sheet {i}");
                assert_eq!(sheet, i);
            }
        }
    }
}

#[test]
fn acting_by_a_middle_generator_peels_off_its_predecessor() {
    for (d, n) in [(2u32, 3u32), (3, 4), (5, 6)] {
        let t = BisetTable::base(d, n).unwrap();
        let (coeff, sheet) = t.act_word(1, &w("g2", n)).unwrap();
        assert_eq!(coeff, w("g1", n));
        assert_eq!(sheet, 1);
    }
}

#[test]
fn acting_by_the_empty_word_does_nothing() {
    let t = BisetTable::base(3, 3).unwrap();
    for i in 1..=3 {
        let (coeff, sheet) = t.act_word(i, &Word::empty(3)).unwrap();
        assert!(coeff.is_empty());
        assert_eq!(sheet, i);
    }
}

#[test]
fn raw_word_then_its_inverse_returns_to_start() {
    // Concatenating the letters of w and of w^-1 exercises the
    // inverse-letter path of the fold; the result must be trivial.
    let t = BisetTable::base(3, 3).unwrap();
    for text in ["g1", "g2*g1", "g1^-1*g3*g2", "g3^2*g1^-1"] {
        let word = w(text, 3);
        let mut raw: Vec<i32> = word.letters().to_vec();
        raw.extend(word.inverse().letters());
        for i in 1..=3 {
            let (coeff, sheet) = t.right_action(i, &raw).unwrap();
            assert!(coeff.is_empty(), "{text} from sheet {i}");
            assert_eq!(sheet, i);
        }
    }
    // same with a raw sequence that uses the ginf column
    for i in 1..=3 {
        let (coeff, sheet) = t.right_action(i, &[4, 2, -2, -4]).unwrap();
        assert!(coeff.is_empty());
        assert_eq!(sheet, i);
    }
}

#[test]
fn precompose_rewrites_coefficients_and_keeps_sheets() {
    let n = 4;
    let t = BisetTable::base(3, n).unwrap();
    let psi = parse_mcg_word("t(2,inf)*t(2,4)*t(4,inf)", n).unwrap();
    let pre = t.precompose(psi.images()).unwrap();
    // frozen: the first entry picks up a conjugated coefficient
    assert_eq!(entry(&pre, 1, 1), ("g3*g2^-1*g3^-1*g1^-1*g3^-1".to_string(), 2));
    // which is (ginf*g4) conjugated by g1^-1*g3^-1
    let expected = w("(ginf*g4)^(g1^-1*g3^-1)", n);
    assert_eq!(pre.entry(1, 1).coeff, expected);
    // sheets never move under precompose
    for j in 1..=n + 1 {
        assert_eq!(pre.column_permutation(j), t.column_permutation(j));
    }
    assert!(pre.check_consistency().all_ok());
}

#[test]
fn precompose_by_identity_is_identity() {
    let t = BisetTable::base(3, 4).unwrap();
    let id = Automorphism::identity(4);
    assert_eq!(t.precompose(id.images()).unwrap(), t);
    assert_eq!(t.postcompose(id.images()).unwrap(), t);
}

#[test]
fn postcompose_rewrites_rows_through_the_table() {
    let n = 4;
    let t = BisetTable::base(3, n).unwrap();
    let phi = parse_mcg_word("t(1,inf)^(t(3,inf))", n).unwrap();
    let post = t.postcompose(phi.images()).unwrap();
    // frozen rows of the rewritten table
    assert_eq!(entry(&post, 1, 3), ("g1*g3*g2*g3^-1*g1^-1".to_string(), 1));
    assert_eq!(
        entry(&post, 3, 1),
        ("g4*g3*g2*g1*g3*g2*g3^-1*g1^-1*g3^-1".to_string(), 1)
    );
    // the first frozen row is g2 conjugated by g3^-1*g1^-1
    assert_eq!(post.entry(1, 3).coeff, w("g2^(g3^-1*g1^-1)", n));
    assert!(post.check_consistency().all_ok());
}

#[test]
fn composition_laws_for_pre_and_post() {
    let n = 3;
    let t = BisetTable::base(2, n).unwrap();
    for (ta, tb) in [("t(1,2)", "t(2,3)"), ("t(1,inf)", "t(1,3)"), ("t(2,inf)", "t(1,2)")] {
        let a = parse_mcg_word(ta, n).unwrap();
        let b = parse_mcg_word(tb, n).unwrap();
        let a_then_b = a.compose(&b).unwrap();
        let b_then_a = b.compose(&a).unwrap();
        // precompose stacks covariantly
        assert_eq!(
            t.precompose(a.images())
                .unwrap()
                .precompose(b.images())
                .unwrap(),
            t.precompose(a_then_b.images()).unwrap(),
            "pre {ta} {tb}"
        );
        // postcompose stacks contravariantly
        assert_eq!(
            t.postcompose(a.images())
                .unwrap()
                .postcompose(b.images())
                .unwrap(),
            t.postcompose(b_then_a.images()).unwrap(),
            "post {ta} {tb}"
        );
        // and the two kinds commute with each other
        assert_eq!(
            t.precompose(a.images())
                .unwrap()
                .postcompose(b.images())
                .unwrap(),
            t.postcompose(b.images())
                .unwrap()
                .precompose(a.images())
                .unwrap(),
            "mixed {ta} {tb}"
        );
    }
}

#[test]
fn change_basis_by_a_single_conjugator() {
    let n = 3;
    let t = BisetTable::base(2, n).unwrap();
    let g = vec![w("g1", n), Word::empty(n)];
    let c = t.change_basis(&[1, 2], &g).unwrap();
    // (1,2) had coefficient g1 with sheet 1: conjugating by g1 fixes it
    assert_eq!(entry(&c, 1, 2), ("g1".to_string(), 1));
    // (1,1) had coefficient ginf*g3 with sheet 2: left factor g1 survives
    assert_eq!(entry(&c, 1, 1), ("g2^-1".to_string(), 2));
    assert!(c.check_consistency().all_ok());
}

#[test]
fn change_basis_identity_and_composition() {
    let n = 3;
    let t = BisetTable::base(2, n).unwrap();
    let id_g = vec![Word::empty(n), Word::empty(n)];
    assert_eq!(t.change_basis(&[1, 2], &id_g).unwrap(), t);

    // two successive changes collapse to one with the composite data
    let sigma1 = [2u32, 1u32];
    let g1 = vec![w("g1", n), w("g3^-1", n)];
    let sigma2 = [2u32, 1u32];
    let g2 = vec![w("g2", n), Word::empty(n)];
    let step = t
        .change_basis(&sigma1, &g1)
        .unwrap()
        .change_basis(&sigma2, &g2)
        .unwrap();
    // z_i = g2_i * y_{sigma2(i)} and y_i = g1_i * x_{sigma1(i)}
    let sigma_comp: Vec<u32> = (0..2).map(|i| sigma1[(sigma2[i] - 1) as usize]).collect();
    let g_comp: Vec<Word> = (0..2)
        .map(|i| g2[i].mul(&g1[(sigma2[i] - 1) as usize]).unwrap())
        .collect();
    let direct = t.change_basis(&sigma_comp, &g_comp).unwrap();
    assert_eq!(step, direct);
}

#[test]
fn change_basis_rejects_bad_data() {
    let n = 3;
    let t = BisetTable::base(2, n).unwrap();
    let g = vec![Word::empty(n), Word::empty(n)];
    assert!(t.change_basis(&[1, 1], &g).is_err());
    assert!(t.change_basis(&[1], &g).is_err());
    assert!(t.change_basis(&[1, 3], &g).is_err());
    let short = vec![Word::empty(n)];
    assert!(t.change_basis(&[1, 2], &short).is_err());
}

#[test]
fn consistency_flags_a_corrupted_sheet() {
    let t = BisetTable::base(2, 3).unwrap();
    let mut entries: Vec<Entry> = t.entries().to_vec();
    // make column 2 send both sheets to sheet 2
    entries[1] = Entry { coeff: entries[1].coeff.clone(), sheet: 2 };
    let bad = BisetTable::new(2, 3, entries).unwrap();
    let report = bad.check_consistency();
    assert!(!report.all_ok());
    assert!(!report.column_is_permutation[1]);
    assert!(report.column_is_permutation[0]);
}

#[test]
fn consistency_flags_a_perturbed_coefficient() {
    let t = BisetTable::base(2, 3).unwrap();
    let mut entries: Vec<Entry> = t.entries().to_vec();
    entries[1] = Entry {
        coeff: entries[1].coeff.mul(&w("g1", 3)).unwrap(),
        sheet: entries[1].sheet,
    };
    let bad = BisetTable::new(2, 3, entries).unwrap();
    let report = bad.check_consistency();
    assert!(report.column_is_permutation.iter().all(|&b| b));
    assert!(report.relator_trivial.iter().any(|&b| !b));
    assert!(!report.all_ok());
}

#[test]
fn text_format_round_trips_bit_exactly() {
    for (d, n) in [(2u32, 3u32), (3, 4), (4, 2)] {
        let t = BisetTable::base(d, n).unwrap();
        let text = t.to_text();
        let back = BisetTable::parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_text(), text);
    }
}

#[test]
fn text_format_shape() {
    let t = BisetTable::base(2, 3).unwrap();
    let text = t.to_text();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("biset v1"));
    assert_eq!(lines.next(), Some("d 2"));
    assert_eq!(lines.next(), Some("n 3"));
    assert_eq!(lines.next(), Some("g1^-1*g2^-1 2"));
    assert_eq!(text.lines().count(), 3 + 8);
}

#[test]
fn parse_accepts_comments_and_rejects_malformed_input() {
    let ok = "# a comment\nbiset v1\nd 2\nn 2\n\ng1^-1 2\ng1 1\n1 2\ng2^-1*g1^-1 2\ng2*g1 1\n1 2\n";
    // not necessarily consistent, but well-formed
    assert!(BisetTable::parse(ok).is_ok());

    for bad in [
        "",
        "biset v2\nd 2\nn 2\n",
        "biset v1\nd 2\nn 2\ng1 1\n",
        "biset v1\nd 2\nn 2\ng1 1 extra\ng1 1\ng1 1\ng1 1\ng1 1\ng1 1\n",
        "biset v1\nd 2\nn 2\ng1 3\ng1 1\ng1 1\ng1 1\ng1 1\ng1 1\n",
        "biset v1\nd 0\nn 2\n",
    ] {
        assert!(BisetTable::parse(bad).is_err(), "{bad:?} should fail");
    }
}

#[test]
fn pretty_printer_lists_one_relation_per_cell() {
    let t = BisetTable::base(2, 3).unwrap();
    let pretty = t.pretty();
    assert!(pretty.contains("x_1 * g1 = g1^-1*g2^-1 * x_2"));
    assert!(pretty.contains("x_1 * g2 = g1 * x_1"));
    assert!(pretty.contains("x_2 * g2 = x_2"));
    assert!(pretty.contains("x_1 * ginf = g1^-1*g2^-1*g3^-1 * x_2"));
    assert_eq!(pretty.lines().count(), 8);
}

#[test]
fn acting_rejects_out_of_range_input() {
    let t = BisetTable::base(2, 3).unwrap();
    assert!(t.right_action(0, &[1]).is_err());
    assert!(t.right_action(3, &[1]).is_err());
    assert!(t.right_action(1, &[5]).is_err());
    assert!(t.right_action(1, &[0]).is_err());
    let foreign = Word::parse("g1", 4).unwrap();
    assert!(t.act_word(1, &foreign).is_err());
}
