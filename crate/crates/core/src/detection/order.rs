use super::BoundingBox;

const DEFAULT_COLUMN_GAP_FACTOR: f64 = 1.5;

/// Reading order with the default column-gap factor of 1.5 median widths.
pub fn reading_order(boxes: &[BoundingBox]) -> Vec<usize> {
    reading_order_with(boxes, DEFAULT_COLUMN_GAP_FACTOR)
}

/// Returns box indices in reading order: columns right to left, each column
/// top to bottom.
///
/// Boxes are sorted by x-center; a new column starts wherever consecutive
/// x-centers differ by more than `gap_factor` times the median box width.
/// Ties keep input order.
pub fn reading_order_with(boxes: &[BoundingBox], gap_factor: f64) -> Vec<usize> {
    if boxes.is_empty() {
        return Vec::new();
    }
    let gap = gap_factor * median(boxes.iter().map(|b| b.w).collect());

    let mut by_x: Vec<usize> = (0..boxes.len()).collect();
    by_x.sort_by(|&a, &b| boxes[a].x_center().total_cmp(&boxes[b].x_center()).then(a.cmp(&b)));

    let mut columns: Vec<Vec<usize>> = vec![vec![by_x[0]]];
    for pair in by_x.windows(2) {
        if boxes[pair[1]].x_center() - boxes[pair[0]].x_center() > gap {
            columns.push(Vec::new());
        }
        columns.last_mut().expect("non-empty").push(pair[1]);
    }

    // Columns were built left to right by x-center, so reversing yields
    // descending column centers.
    columns.reverse();
    let mut order = Vec::with_capacity(boxes.len());
    for mut column in columns {
        column.sort_by(|&a, &b| boxes[a].y.total_cmp(&boxes[b].y).then(a.cmp(&b)));
        order.extend(column);
    }
    order
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}
