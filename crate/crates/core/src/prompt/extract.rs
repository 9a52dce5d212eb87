use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no behavior tree found in response")]
pub struct NoTreeFound;

const FENCE: &str = "```";

/// Pulls the tree out of a model reply.
///
/// Returns the first balanced `<root>` element. A reply that is exactly that
/// element, modulo surrounding whitespace, is returned unchanged. A `<root>`
/// cut off before its closing tag (a generation that hit the token cap) is
/// returned up to the end of the reply so that the parser reports it.
pub fn extract_tree(response: &str) -> Result<String, NoTreeFound> {
    if let Some((start, end)) = find_root(response) {
        return Ok(match end {
            Some(end) if response.trim() == &response[start..end] => response.to_string(),
            Some(end) => response[start..end].to_string(),
            None => strip_trailing_fence(&response[start..]).to_string(),
        });
    }
    if let Some(block) = fenced_block(response) {
        if block.trim_start().starts_with('<') {
            return Ok(block.trim().to_string());
        }
    }
    let trimmed = response.trim();
    if trimmed.starts_with('<') {
        return Ok(trimmed.to_string());
    }
    Err(NoTreeFound)
}

fn strip_trailing_fence(text: &str) -> &str {
    let t = text.trim_end();
    t.strip_suffix(FENCE).unwrap_or(t).trim_end()
}

fn fenced_block(text: &str) -> Option<&str> {
    let open = text.find(FENCE)?;
    let rest = &text[open + FENCE.len()..];
    // Skip the info string (e.g. `xml`).
    let body_start = rest.find('\n')? + 1;
    let body = &rest[body_start..];
    Some(match body.find(FENCE) {
        Some(close) => &body[..close],
        None => body,
    })
}

/// Byte range of the first `<root` element; the end is `None` when the
/// element is never closed.
fn find_root(text: &str) -> Option<(usize, Option<usize>)> {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut start = None;
    let mut depth = 0usize;
    while let Some(off) = text[i..].find('<') {
        let at = i + off;
        let rest = &text[at..];
        let skip_to = |terminator: &str| rest.find(terminator).map(|p| at + p + terminator.len());
        if rest.starts_with("<!--") {
            let Some(next) = skip_to("-->") else {
                return start.map(|s| (s, None));
            };
            i = next;
            continue;
        }
        if rest.starts_with("<![CDATA[") {
            let Some(next) = skip_to("]]>") else {
                return start.map(|s| (s, None));
            };
            i = next;
            continue;
        }
        if rest.starts_with("<?") || rest.starts_with("<!") {
            let Some(next) = skip_to(">") else {
                return start.map(|s| (s, None));
            };
            i = next;
            continue;
        }
        let closing = rest.starts_with("</");
        let name_start = at + if closing { 2 } else { 1 };
        let name_len = text[name_start..]
            .find(|c: char| !(c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':')))
            .unwrap_or(text.len() - name_start);
        if name_len == 0 {
            i = at + 1;
            continue;
        }
        let name = &text[name_start..name_start + name_len];
        let Some(tag_end) = tag_end(bytes, name_start + name_len) else {
            return start.map(|s| (s, None));
        };
        let self_closing = !closing && bytes[tag_end - 2] == b'/';
        match start {
            None if !closing && name == "root" => {
                if self_closing {
                    return Some((at, Some(tag_end)));
                }
                start = Some(at);
                depth = 1;
            }
            None => {}
            Some(s) if closing => {
                depth -= 1;
                if depth == 0 {
                    return Some((s, Some(tag_end)));
                }
            }
            Some(_) if !self_closing => depth += 1,
            Some(_) => {}
        }
        i = tag_end;
    }
    start.map(|s| (s, None))
}

/// Index just past the `>` closing a tag, skipping quoted attribute values.
fn tag_end(bytes: &[u8], from: usize) -> Option<usize> {
    let mut quote = None;
    for (j, &b) in bytes.iter().enumerate().skip(from) {
        match (quote, b) {
            (None, b'"' | b'\'') => quote = Some(b),
            (Some(q), _) if b == q => quote = None,
            (None, b'>') => return Some(j + 1),
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenced_with_prose() {
        let reply = "Here is the tree:\n```xml\n<root BTCPP_format=\"4\">\n  <BehaviorTree ID=\"A\"><MoveTo goal=\"1,2\"/></BehaviorTree>\n</root>\n```\nHope this helps.";
        assert_eq!(
            extract_tree(reply).unwrap(),
            "<root BTCPP_format=\"4\">\n  <BehaviorTree ID=\"A\"><MoveTo goal=\"1,2\"/></BehaviorTree>\n</root>"
        );
    }

    #[test]
    fn pure_xml_is_identity() {
        let xml = "<root>\n    <BehaviorTree ID=\"A\">\n        <AlwaysSuccess/>\n    </BehaviorTree>\n</root>\n";
        assert_eq!(extract_tree(xml).unwrap(), xml);
    }

    #[test]
    fn refusal_has_no_tree() {
        assert_eq!(extract_tree("I cannot help with that."), Err(NoTreeFound));
    }

    #[test]
    fn first_of_several_trees() {
        let reply = "<root><BehaviorTree ID=\"A\"/></root>\nor\n<root><BehaviorTree ID=\"B\"/></root>";
        assert_eq!(extract_tree(reply).unwrap(), "<root><BehaviorTree ID=\"A\"/></root>");
    }

    #[test]
    fn tricky_content_is_skipped() {
        let reply = "<!-- <root> in a comment --><root><BehaviorTree ID=\"A\"><Say text=\"a > b </root>\"/><![CDATA[</root>]]></BehaviorTree></root> trailing";
        let got = extract_tree(reply).unwrap();
        assert!(got.starts_with("<root><BehaviorTree"));
        assert!(got.ends_with("</BehaviorTree></root>"));
    }

    #[test]
    fn truncated_reply_is_kept() {
        let reply = "```xml\n<root>\n  <BehaviorTree ID=\"A\">\n    <Sequence>\n      <MoveTo goal=\"1,";
        assert_eq!(
            extract_tree(reply).unwrap(),
            "<root>\n  <BehaviorTree ID=\"A\">\n    <Sequence>\n      <MoveTo goal=\"1,"
        );
    }

    #[test]
    fn fenced_fragment_without_root() {
        let reply = "```xml\n<BehaviorTree ID=\"A\"/>\n```";
        assert_eq!(extract_tree(reply).unwrap(), "<BehaviorTree ID=\"A\"/>");
    }
}
