//! Minimal CSV building; every numeric cell uses the shortest round-trip representation.

pub struct Csv {
    out: String,
    cols: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        Csv { out, cols: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.cols);
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn nums(&mut self, cells: &[f64]) {
        self.row(&cells.iter().map(|v| num(*v)).collect::<Vec<_>>());
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}
