//! Small published contingency tables used as fixtures and in examples.

use crate::table::ContingencyTable;

fn labelled(counts: Vec<Vec<u64>>, rows: &[&str], cols: &[&str]) -> ContingencyTable {
    ContingencyTable::with_labels(
        counts,
        rows.iter().map(|s| s.to_string()).collect(),
        cols.iter().map(|s| s.to_string()).collect(),
    )
    .expect("fixture tables are well formed")
}

/// Hellman's infant malocclusion data (feeding type by teeth condition), n = 42.
pub fn hellman() -> ContingencyTable {
    labelled(
        vec![vec![4, 16], vec![1, 21]],
        &["Breast-fed", "Bottle-fed"],
        &["Normal teeth", "Malocclusion"],
    )
}

/// 1970 US draft lottery: birth month by draft risk, n = 366.
pub fn draft_lottery() -> ContingencyTable {
    labelled(
        vec![
            vec![9, 12, 10],
            vec![7, 12, 10],
            vec![5, 10, 16],
            vec![8, 8, 14],
            vec![9, 7, 15],
            vec![11, 7, 12],
            vec![12, 7, 12],
            vec![13, 7, 11],
            vec![10, 15, 5],
            vec![9, 15, 7],
            vec![12, 12, 6],
            vec![17, 10, 4],
        ],
        &[
            "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
        ],
        &["High", "Med", "Low"],
    )
}

/// Accidents of 122 railway shunters in 1937-42 (rows) and 1943-47 (columns).
pub fn shunter() -> ContingencyTable {
    labelled(
        vec![
            vec![21, 18, 8, 2, 1, 0, 0],
            vec![13, 14, 10, 1, 4, 1, 0],
            vec![4, 5, 4, 2, 1, 0, 1],
            vec![2, 1, 3, 2, 0, 1, 0],
            vec![0, 0, 1, 1, 0, 0, 0],
            vec![0, 1, 0, 0, 0, 0, 0],
        ],
        &["0", "1", "2", "3", "4", "7"],
        &["0", "1", "2", "3", "4", "5", "6"],
    )
}

/// Published LP-smoothed accident probabilities (two decimals), same layout
/// as [`shunter`].
pub const SHUNTER_SMOOTHED: [[f64; 7]; 6] = [
    [0.19, 0.13, 0.06, 0.02, 0.01, 0.00, 0.00],
    [0.09, 0.10, 0.07, 0.03, 0.01, 0.01, 0.00],
    [0.03, 0.05, 0.04, 0.02, 0.01, 0.00, 0.00],
    [0.01, 0.02, 0.02, 0.01, 0.01, 0.00, 0.00],
    [0.00, 0.01, 0.01, 0.00, 0.00, 0.00, 0.00],
    [0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00],
];
