//! Plain-text fleet fixtures.
//!
//! ```text
//! fedpg-fleet v1
//! agents <N>
//! states <S>
//! actions <A>
//! horizon <H>
//! gamma <x>
//! r_max <x>
//! agent 0
//! init <S values>
//! rewards            # then S lines of A values, row s
//! kernel             # then S*A lines of S values, row (s, a) at line s*A + a
//! agent 1
//! ...
//! ```
//!
//! Reals are written in decimal scientific notation with 17 significant
//! digits, which round-trips `f64` exactly.

use std::fmt::Write;
use std::str::FromStr;

use super::{Environment, TabularMdp};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &str = "fedpg-fleet v1";

pub(crate) fn sig17<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

fn push_row<T: Scalar>(out: &mut String, row: &[T]) {
    let line: Vec<String> = row.iter().map(|&x| sig17(x)).collect();
    out.push_str(&line.join(" "));
    out.push('\n');
}

pub fn write_fleet_fixture<T: Scalar>(fleet: &[TabularMdp<T>]) -> Result<String> {
    let first = fleet.first().ok_or_else(|| Error::Construction("cannot serialize an empty fleet".into()))?;
    let (s, a) = (first.n_states(), first.n_actions());
    let same_shape = fleet.iter().all(|m| {
        m.n_states() == s
            && m.n_actions() == a
            && m.horizon() == first.horizon()
            && m.gamma() == first.gamma()
            && m.r_max() == first.r_max()
    });
    if !same_shape {
        return Err(Error::Construction("fleet members disagree on sizes, horizon, gamma or r_max".into()));
    }
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "agents {}", fleet.len());
    let _ = writeln!(out, "states {s}");
    let _ = writeln!(out, "actions {a}");
    let _ = writeln!(out, "horizon {}", first.horizon());
    let _ = writeln!(out, "gamma {}", sig17(first.gamma()));
    let _ = writeln!(out, "r_max {}", sig17(first.r_max()));
    for (i, m) in fleet.iter().enumerate() {
        let _ = writeln!(out, "agent {i}");
        out.push_str("init ");
        push_row(&mut out, m.init_dist());
        out.push_str("rewards\n");
        for row in m.rewards().chunks(a) {
            push_row(&mut out, row);
        }
        out.push_str("kernel\n");
        for row in m.kernel().chunks(s) {
            push_row(&mut out, row);
        }
    }
    Ok(out)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        for (no, line) in self.inner.by_ref() {
            let line = line.trim();
            if !line.is_empty() && !line.starts_with('#') {
                return Ok((no + 1, line));
            }
        }
        Err(Error::Construction("fixture ended early".into()))
    }

    fn keyed<V: FromStr>(&mut self, key: &str) -> Result<V> {
        let (no, line) = self.next_line()?;
        let rest = line
            .strip_prefix(key)
            .map(str::trim)
            .ok_or_else(|| Error::Construction(format!("line {no}: expected `{key}`")))?;
        rest.parse().map_err(|_| Error::Construction(format!("line {no}: bad value for `{key}`")))
    }

    fn reals<T: Scalar>(&mut self, prefix: Option<&str>, count: usize) -> Result<Vec<T>> {
        let (no, mut line) = self.next_line()?;
        if let Some(p) = prefix {
            line = line.strip_prefix(p).ok_or_else(|| Error::Construction(format!("line {no}: expected `{p}`")))?;
        }
        let vals = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map(T::of).map_err(|_| Error::Construction(format!("line {no}: bad number `{tok}`")))
            })
            .collect::<Result<Vec<T>>>()?;
        if vals.len() != count {
            return Err(Error::Construction(format!("line {no}: expected {count} values, found {}", vals.len())));
        }
        Ok(vals)
    }

    fn header(&mut self, word: &str) -> Result<()> {
        let (no, line) = self.next_line()?;
        if line == word {
            Ok(())
        } else {
            Err(Error::Construction(format!("line {no}: expected `{word}`")))
        }
    }
}

pub fn parse_fleet_fixture<T: Scalar>(text: &str) -> Result<Vec<TabularMdp<T>>> {
    let mut lines = Lines { inner: text.lines().enumerate() };
    lines.header(MAGIC)?;
    let n: usize = lines.keyed("agents")?;
    let s: usize = lines.keyed("states")?;
    let a: usize = lines.keyed("actions")?;
    let horizon: usize = lines.keyed("horizon")?;
    let gamma: f64 = lines.keyed("gamma")?;
    let r_max: f64 = lines.keyed("r_max")?;
    (0..n)
        .map(|i| {
            let idx: usize = lines.keyed("agent")?;
            if idx != i {
                return Err(Error::Construction(format!("agent {idx} out of order, expected {i}")));
            }
            let init = lines.reals(Some("init"), s)?;
            lines.header("rewards")?;
            let mut rewards = Vec::with_capacity(s * a);
            for _ in 0..s {
                rewards.extend(lines.reals::<T>(None, a)?);
            }
            lines.header("kernel")?;
            let mut kernel = Vec::with_capacity(s * a * s);
            for _ in 0..s * a {
                kernel.extend(lines.reals::<T>(None, s)?);
            }
            TabularMdp::new(s, a, kernel, rewards, init, T::of(gamma), horizon, T::of(r_max))
        })
        .collect()
}
