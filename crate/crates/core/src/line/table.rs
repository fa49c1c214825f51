use std::sync::Arc;

use num_bigint::BigUint;

use super::{BitConfig, LineError, LineInstance, LineKind, LineOracle, OracleError};

/// Widest instance that can be written out as a table.
pub const MAX_TABLE_WIDTH: u32 = 20;

/// Explicit successor, predecessor and potential for every configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    n: u32,
    rows: Vec<(u128, u128, BigUint)>,
}

impl TruthTable {
    /// Builds a table from closures over configuration values.
    pub fn from_fn(
        n: u32,
        mut f: impl FnMut(BitConfig) -> (BitConfig, BitConfig, BigUint),
    ) -> Result<Self, LineError> {
        if n == 0 || n > MAX_TABLE_WIDTH {
            return Err(LineError::TooWide { n, limit: MAX_TABLE_WIDTH });
        }
        let rows = BitConfig::all(n)
            .map(|x| {
                let (s, p, v) = f(x);
                (s.value(), p.value(), v)
            })
            .collect();
        Ok(TruthTable { n, rows })
    }

    /// Queries every configuration of `inst`.
    pub fn tabulate(inst: &LineInstance) -> Result<Self, LineError> {
        let n = inst.n();
        if n > MAX_TABLE_WIDTH {
            return Err(LineError::TooWide { n, limit: MAX_TABLE_WIDTH });
        }
        let mut rows = Vec::with_capacity(1 << n);
        for x in BitConfig::all(n) {
            rows.push((inst.s(x)?.value(), inst.p(x)?.value(), inst.v(x)?));
        }
        Ok(TruthTable { n, rows })
    }

    pub fn into_instance(self, kind: LineKind) -> LineInstance {
        LineInstance::new(kind, Arc::new(self))
    }

    /// Serialises `inst` as a table file.
    pub fn format(inst: &LineInstance) -> Result<String, LineError> {
        let table = TruthTable::tabulate(inst)?;
        let mut out = match inst.kind() {
            LineKind::Eopl { m } => format!("EOPL {} {m}\n", inst.n()),
            LineKind::Eoml => format!("EOML {}\n", inst.n()),
        };
        for (x, (s, p, v)) in BitConfig::all(table.n).zip(&table.rows) {
            let cfg = |value| BitConfig::from_value(value, table.n).expect("in range");
            out.push_str(&format!("{x} {} {} {v}\n", cfg(*s), cfg(*p)));
        }
        Ok(out)
    }

    /// Parses a table file. Configurations without a row are self-loops with
    /// potential 0.
    pub fn parse(text: &str) -> Result<LineInstance, LineError> {
        let err = |line: usize, message: String| LineError::Parse { line, message };
        let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
            let l = raw.split('#').next().unwrap_or("").trim();
            (!l.is_empty()).then_some((i + 1, l))
        });
        let (hline, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let num = |s: &str| s.parse::<u32>().map_err(|_| err(hline, format!("expected a number, found {s:?}")));
        let (kind, n) = match fields.as_slice() {
            ["EOPL", n, m] => (LineKind::Eopl { m: num(m)? }, num(n)?),
            ["EOML", n] => (LineKind::Eoml, num(n)?),
            _ => return Err(err(hline, format!("expected `EOPL n m` or `EOML n`, found {header:?}"))),
        };
        if n == 0 || n > MAX_TABLE_WIDTH {
            return Err(err(hline, format!("width {n} outside 1..={MAX_TABLE_WIDTH}")));
        }
        let mut rows: Vec<Option<(u128, u128, BigUint)>> = vec![None; 1 << n];
        let bound = LineInstance::new(kind, Arc::new(TruthTable { n, rows: vec![] })).potential_bound();
        for (line, row) in lines {
            let parts: Vec<&str> = row.split_whitespace().collect();
            let [x, s, p, v] = parts.as_slice() else {
                return Err(err(line, format!("expected `x S P V`, found {row:?}")));
            };
            let bits = |t: &str| -> Result<u128, LineError> {
                let b = BitConfig::parse(t).map_err(|m| err(line, m))?;
                if b.width() != n {
                    return Err(err(line, format!("{t} has width {}, expected {n}", b.width())));
                }
                Ok(b.value())
            };
            let x = bits(x)?;
            let value: BigUint = v.parse().map_err(|_| err(line, format!("bad potential {v:?}")))?;
            if value > bound {
                return Err(err(line, format!("potential {value} exceeds bound {bound}")));
            }
            let slot = &mut rows[x as usize];
            if slot.is_some() {
                return Err(err(line, "duplicate row".into()));
            }
            *slot = Some((bits(s)?, bits(p)?, value));
        }
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(x, r)| r.unwrap_or((x as u128, x as u128, BigUint::default())))
            .collect();
        Ok(TruthTable { n, rows }.into_instance(kind))
    }

    fn row(&self, x: BitConfig) -> &(u128, u128, BigUint) {
        &self.rows[x.value() as usize]
    }
}

impl LineOracle for TruthTable {
    fn width(&self) -> u32 {
        self.n
    }

    fn successor(&self, x: BitConfig) -> Result<BitConfig, OracleError> {
        Ok(BitConfig::from_value(self.row(x).0, self.n).expect("validated on construction"))
    }

    fn predecessor(&self, x: BitConfig) -> Result<BitConfig, OracleError> {
        Ok(BitConfig::from_value(self.row(x).1, self.n).expect("validated on construction"))
    }

    fn potential(&self, x: BitConfig) -> Result<BigUint, OracleError> {
        Ok(self.row(x).2.clone())
    }

    fn describe(&self) -> String {
        format!("truth table over {} bits", self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_parse_round_trip() {
        let text = "EOPL 2 2\n00 01 00 0\n01 10 00 1\n10 10 01 2\n11 11 11 0\n";
        let inst = TruthTable::parse(text).unwrap();
        assert_eq!(TruthTable::format(&inst).unwrap(), text);
        let sparse = TruthTable::parse("EOML 2\n# only the start\n00 01 00 1\n").unwrap();
        let again = TruthTable::parse(&TruthTable::format(&sparse).unwrap()).unwrap();
        assert_eq!(TruthTable::tabulate(&sparse).unwrap(), TruthTable::tabulate(&again).unwrap());
    }

    #[test]
    fn parse_errors_name_the_line() {
        for (text, line) in [
            ("EOPL 2\n", 1),
            ("EOPL 2 2\n00 01 00 0\n01 1 00 0\n", 3),
            ("EOPL 2 2\n00 01 00 4\n", 2),
            ("EOML 1\n0 1 0 1\n0 1 0 1\n", 3),
        ] {
            match TruthTable::parse(text) {
                Err(LineError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }
}
