//! Context windows and their token streams.

/// Lines `line - window ..= line + window` (1-based), clipped to the file.
pub fn window_text(text: &str, line: usize, window: usize) -> String {
    let lines: Vec<&str> = text.lines().collect();
    if lines.is_empty() || line == 0 {
        return String::new();
    }
    let lo = line.saturating_sub(window).max(1);
    let hi = (line + window).min(lines.len());
    if lo > hi {
        return String::new();
    }
    lines[lo - 1..hi].join("\n")
}

const STRING_PREFIXES: [&str; 10] = ["r", "b", "f", "u", "rb", "br", "fr", "rf", "bf", "fb"];

/// Lowercase identifier and keyword tokens. Numbers become `<num>`, string
/// literals `<str>`; comments and punctuation are dropped. Identifiers made
/// of several words also contribute each word.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c == '"' || c == '\'' {
            i = skip_string(&chars, i);
            out.push("<str>".to_string());
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '.' || chars[i] == '_') {
                i += 1;
            }
            out.push("<num>".to_string());
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if i < chars.len()
                && (chars[i] == '"' || chars[i] == '\'')
                && STRING_PREFIXES.contains(&word.to_ascii_lowercase().as_str())
            {
                i = skip_string(&chars, i);
                out.push("<str>".to_string());
                continue;
            }
            push_identifier(&word, &mut out);
        } else {
            i += 1;
        }
    }
    out
}

fn skip_string(chars: &[char], start: usize) -> usize {
    let q = chars[start];
    let triple = chars.get(start + 1) == Some(&q) && chars.get(start + 2) == Some(&q);
    let mut i = start + if triple { 3 } else { 1 };
    while i < chars.len() {
        if chars[i] == '\\' {
            i += 2;
            continue;
        }
        if chars[i] == q {
            if !triple {
                return i + 1;
            }
            if chars.get(i + 1) == Some(&q) && chars.get(i + 2) == Some(&q) {
                return i + 3;
            }
        }
        if chars[i] == '\n' && !triple {
            return i;
        }
        i += 1;
    }
    chars.len()
}

fn push_identifier(word: &str, out: &mut Vec<String>) {
    out.push(word.to_lowercase());
    let parts = split_words(word);
    if parts.len() > 1 {
        out.extend(parts);
    }
}

/// Splits on underscores and lower-to-upper case changes.
pub fn split_words(word: &str) -> Vec<String> {
    let mut parts = Vec::new();
    for chunk in word.split('_').filter(|c| !c.is_empty()) {
        let cs: Vec<char> = chunk.chars().collect();
        let mut cur = String::new();
        for (j, &ch) in cs.iter().enumerate() {
            let boundary = j > 0
                && ch.is_uppercase()
                && (cs[j - 1].is_lowercase()
                    || cs[j - 1].is_ascii_digit()
                    || cs.get(j + 1).is_some_and(|n| n.is_lowercase()) && cs[j - 1].is_uppercase());
            if boundary && !cur.is_empty() {
                parts.push(std::mem::take(&mut cur).to_lowercase());
            }
            cur.push(ch);
        }
        if !cur.is_empty() {
            parts.push(cur.to_lowercase());
        }
    }
    parts
}
