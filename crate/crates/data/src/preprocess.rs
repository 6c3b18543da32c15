use serde::{Deserialize, Serialize};

/// Independent text-cleanup switches. The default profile is all-off: raw
/// text goes to the model tokenizers unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessOptions {
    pub lowercase: bool,
    pub strip_urls: bool,
    pub strip_user_mentions: bool,
    pub collapse_whitespace: bool,
}

impl PreprocessOptions {
    pub fn any_enabled(&self) -> bool {
        self.lowercase || self.strip_urls || self.strip_user_mentions || self.collapse_whitespace
    }
}

fn is_url(token: &str) -> bool {
    let t = token.to_ascii_lowercase();
    t.starts_with("http://") || t.starts_with("https://") || t.starts_with("www.")
}

fn is_mention(token: &str) -> bool {
    let mut chars = token.chars();
    matches!(chars.next(), Some('@'))
        && token.len() > 1
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Deterministic, idempotent cleanup. Token stripping operates on whitespace
/// tokens and rejoins with single spaces. If everything meaningful is removed
/// from a non-blank input, the single placeholder token `<empty>` is returned.
pub fn preprocess_text(raw: &str, opts: &PreprocessOptions) -> String {
    if !opts.any_enabled() {
        return raw.to_string();
    }

    let mut text = raw.to_string();
    if opts.lowercase {
        text = text.to_lowercase();
    }
    if opts.strip_urls || opts.strip_user_mentions {
        let kept: Vec<&str> = text
            .split_whitespace()
            .filter(|tok| !(opts.strip_urls && is_url(tok)))
            .filter(|tok| !(opts.strip_user_mentions && is_mention(tok)))
            .collect();
        text = kept.join(" ");
    }
    if opts.collapse_whitespace {
        text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    }
    if text.trim().is_empty() && !raw.trim().is_empty() {
        return "<empty>".to_string();
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn opts(
        lowercase: bool,
        strip_urls: bool,
        strip_user_mentions: bool,
        collapse_whitespace: bool,
    ) -> PreprocessOptions {
        PreprocessOptions {
            lowercase,
            strip_urls,
            strip_user_mentions,
            collapse_whitespace,
        }
    }

    #[test]
    fn strips_urls_and_lowercases() {
        let out = preprocess_text("Check https://x.co NOW", &opts(true, true, false, false));
        assert_eq!(out, "check now");
    }

    #[test]
    fn all_false_is_identity() {
        let s = "  Weird   SPACING @user https://a.b ";
        assert_eq!(preprocess_text(s, &PreprocessOptions::default()), s);
    }

    #[test]
    fn fully_removable_input_becomes_placeholder() {
        let out = preprocess_text("http://a.b", &opts(false, true, false, false));
        assert_eq!(out, "<empty>");
    }

    #[test]
    fn mentions_are_stripped() {
        let out = preprocess_text("ping @someone_42 thanks", &opts(false, false, true, false));
        assert_eq!(out, "ping thanks");
    }

    #[test]
    fn collapse_whitespace_only() {
        let out = preprocess_text("a \t b\n\nc", &opts(false, false, false, true));
        assert_eq!(out, "a b c");
    }

    proptest! {
        // f(f(x)) = f(x) across all option combinations.
        #[test]
        fn idempotent(raw in "\\PC{0,60}", mask in 0u8..16) {
            let o = opts(mask & 1 != 0, mask & 2 != 0, mask & 4 != 0, mask & 8 != 0);
            let once = preprocess_text(&raw, &o);
            let twice = preprocess_text(&once, &o);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn never_blank_for_meaningful_input(raw in "[a-zA-Z@ ]{1,40}", mask in 0u8..16) {
            let o = opts(mask & 1 != 0, mask & 2 != 0, mask & 4 != 0, mask & 8 != 0);
            prop_assume!(!raw.trim().is_empty());
            let out = preprocess_text(&raw, &o);
            prop_assert!(!out.trim().is_empty());
        }
    }
}
