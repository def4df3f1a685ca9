//! Prompt templates. Placeholders look like `{name}`.

pub const CLASSIFY: &str = include_str!("../prompts/classify.md");
pub const GENERATE_JSON: &str = include_str!("../prompts/generate_json.md");
pub const GENERATE_XML: &str = include_str!("../prompts/generate_xml.md");
pub const EDIT_JSON: &str = include_str!("../prompts/edit_json.md");
pub const EDIT_XML: &str = include_str!("../prompts/edit_xml.md");
pub const CONVERSATIONAL: &str = include_str!("../prompts/conversational.md");
pub const FEEDBACK: &str = include_str!("../prompts/feedback.md");

/// Substitutes each `{key}` once, in order, so values containing braces
/// (JSON, XML) are never re-scanned.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while let Some(open) = rest.find('{') {
        for (key, value) in values {
            let tag = format!("{{{key}}}");
            if rest[open..].starts_with(&tag) {
                out.push_str(&rest[..open]);
                out.push_str(value);
                rest = &rest[open + tag.len()..];
                continue 'scan;
            }
        }
        out.push_str(&rest[..=open]);
        rest = &rest[open + 1..];
    }
    out.push_str(rest);
    out.trim_end().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_replaces_only_named_tags() {
        let filled = fill("a {x} {\"k\": 1} {y}", &[("x", "{y}"), ("y", "2")]);
        assert_eq!(filled, "a {y} {\"k\": 1} 2");
    }

    #[test]
    fn templates_carry_their_placeholders() {
        assert!(CLASSIFY.contains("{has_model}"));
        assert!(EDIT_JSON.contains("{model}"));
        assert!(EDIT_XML.contains("{document}"));
        assert!(CONVERSATIONAL.contains("{context}"));
        assert!(FEEDBACK.contains("{issues}"));
        for name in ["delete_element", "redirect_branch", "add_element", "move_element", "update_element"] {
            assert!(EDIT_JSON.contains(name), "{name}");
        }
    }
}
