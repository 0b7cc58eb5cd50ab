//! Prompt fixtures for element classification and keyword lookup.

use super::ClassifyError;

pub const CLASSIFY_PROMPT: &str = include_str!("../../prompts/classify.txt");
pub const LOOKUP_TEMPLATE: &str = include_str!("../../prompts/lookup.txt");

pub fn render_classification_prompt() -> &'static str {
    CLASSIFY_PROMPT
}

/// Substitutes `${keyword}` and `${game}` in a single pass, so argument
/// text that happens to contain a placeholder is left alone.
pub fn render_lookup_prompt(keyword: &str, game: &str) -> Result<String, ClassifyError> {
    if keyword.trim().is_empty() {
        return Err(ClassifyError::EmptyArgument("keyword"));
    }
    if game.trim().is_empty() {
        return Err(ClassifyError::EmptyArgument("game"));
    }
    let mut out = String::with_capacity(LOOKUP_TEMPLATE.len() + keyword.len() + game.len());
    let mut rest = LOOKUP_TEMPLATE;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find('}') {
            Some(end) => {
                match &after[..end] {
                    "keyword" => out.push_str(keyword),
                    "game" => out.push_str(game),
                    other => {
                        out.push_str("${");
                        out.push_str(other);
                        out.push('}');
                    }
                }
                rest = &after[end + 1..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}
