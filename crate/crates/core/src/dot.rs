//! Small helpers for Graphviz output.

/// Double-quoted DOT string.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

pub const PALETTE: &[&str] = &[
    "red",
    "blue",
    "darkgreen",
    "orange",
    "purple",
    "brown",
    "magenta",
    "cyan4",
];

#[cfg(test)]
mod tests {
    #[test]
    fn escapes() {
        assert_eq!(super::quote(r#"a"b\c"#), r#""a\"b\\c""#);
    }
}
