/// Reverses Penn Treebank bracket escapes and strips backslashes.
///
/// `-LRB-`/`-LCB-` become `(`, `-RRB-`/`-RCB-` become `)`, and every `\`
/// is removed (`\/` -> `/`, `\*` -> `*`). Square-bracket escapes are left
/// alone. The mapping is idempotent.
pub fn normalize_ptb(token: &str) -> String {
    match token {
        "-LRB-" | "-LCB-" => "(".to_string(),
        "-RRB-" | "-RCB-" => ")".to_string(),
        t => t.replace('\\', ""),
    }
}

pub fn normalize_sentence<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(|t| normalize_ptb(t.as_ref()))
        .filter(|t| !t.is_empty())
        .collect()
}
