//! Pulls the payload out of a model reply that may wrap it in prose or code
//! fences.

fn fenced(text: &str) -> Option<&str> {
    let start = text.find("```")?;
    let after = &text[start + 3..];
    let body_start = after.find('\n').map_or(0, |i| i + 1);
    let body = &after[body_start..];
    let end = body.find("```")?;
    Some(body[..end].trim())
}

fn span(text: &str, open: char, close: char) -> Option<&str> {
    let start = text.find(open)?;
    let end = text.rfind(close)?;
    (end > start).then(|| &text[start..=end])
}

/// The JSON object or array in `text`, whichever opens first.
pub fn json_payload(text: &str) -> &str {
    let text = fenced(text).unwrap_or(text).trim();
    let object = text.find('{');
    let array = text.find('[');
    let picked = match (object, array) {
        (Some(o), Some(a)) if a < o => span(text, '[', ']'),
        (Some(_), _) => span(text, '{', '}'),
        (None, Some(_)) => span(text, '[', ']'),
        (None, None) => None,
    };
    picked.unwrap_or(text)
}

/// The XML document in `text`, from the declaration or first tag to the last
/// closing bracket.
pub fn xml_payload(text: &str) -> &str {
    let text = fenced(text).unwrap_or(text).trim();
    let start = text.find("<?xml").or_else(|| text.find('<'));
    match (start, text.rfind('>')) {
        (Some(s), Some(e)) if e > s => &text[s..=e],
        _ => text,
    }
}
