use crate::semantic_space::{EntityId, OntologyTree, SemType};

fn category(tree: &OntologyTree, id: EntityId) -> String {
    tree.entity(id).path().concept().to_lowercase()
}

fn keyword(tree: &OntologyTree, id: EntityId, count: u32) -> String {
    let surface = tree.entity(id).canonical_surface();
    match count {
        1 => surface.to_string(),
        2 => format!("{surface} (twice)"),
        n => format!("{surface} ({n} times)"),
    }
}

fn distinct(t: &SemType, tree: &OntologyTree) -> Vec<(EntityId, u32)> {
    let mut ids: Vec<(EntityId, u32)> = t.iter().collect();
    ids.sort_by_key(|&(id, _)| tree.rank(id));
    ids
}

fn all_categories(tree: &OntologyTree) -> String {
    tree.concepts()
        .iter()
        .map(|c| c.name.to_lowercase())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Generation prompt. `previous` carries the rejected sentence and the
/// checker's feedback for a regeneration.
pub fn generate_prompt(target: &SemType, tree: &OntologyTree, previous: Option<(&str, &str)>) -> String {
    let ids = distinct(target, tree);
    let mut p = if ids.is_empty() {
        format!(
            "Write a sentence that contains no element of any of these categories: {}.",
            all_categories(tree)
        )
    } else {
        let words: Vec<String> = ids.iter().map(|&(id, n)| keyword(tree, id, n)).collect();
        let mut p = format!("Write a sentence containing the following keywords: {}.", words.join(", "));
        for (i, &(id, _)) in ids.iter().enumerate() {
            let surface = tree.entity(id).canonical_surface();
            let cat = category(tree, id);
            if i == 0 {
                p.push_str(&format!(
                    " In this case, {surface} is the element of {cat} category, and no other {cat}-like element should appear in the sentence."
                ));
            } else {
                p.push_str(&format!(
                    " {surface} is an element in {cat} category, no other {cat}-like element should appear in the sentence."
                ));
            }
        }
        p
    };
    if let Some((sentence, feedback)) = previous {
        p.push_str(&format!(
            "\nYour previous sentence was: {sentence}\nFeedback: {feedback}\nWrite a new sentence that fixes this."
        ));
    }
    p.push_str("\nReply with the sentence only, on one line.");
    p
}

/// Check prompt; the model must reply with the approval phrase or one hint.
pub fn check_prompt(sentence: &str, target: &SemType, tree: &OntologyTree) -> String {
    let ids = distinct(target, tree);
    let keywords = if ids.is_empty() {
        "none".to_string()
    } else {
        ids.iter()
            .map(|&(id, n)| format!("{} ({} category)", keyword(tree, id, n), category(tree, id)))
            .collect::<Vec<_>>()
            .join(", ")
    };
    format!(
        "Sentence: {sentence}\nRequired keywords: {keywords}\nCategories: {}.\n\
         The sentence must contain every required keyword and no other element of these categories.\n\
         If it does, reply exactly \"Good. No errors.\"\n\
         Otherwise reply with one hint such as: \"Children\" should not be in the sentence because it is an element in person category.",
        all_categories(tree)
    )
}

/// Extraction prompt; the reply format is one `path: count` line per entity.
pub fn extract_prompt(sentence: &str, tree: &OntologyTree) -> String {
    let mut p = format!(
        "Sentence: {sentence}\nList every element below that the sentence mentions.\n\
         Reply with one line per element in the form `path: count`, using the path exactly as written, \
         or the single word `none`. Do not add anything else.\nElements:\n"
    );
    for &id in tree.canonical_order() {
        let e = tree.entity(id);
        p.push_str(&format!("{} ({})\n", e.path(), e.surface_forms().join(" / ")));
    }
    p
}

/// `path: count` lines in canonical order, or `none`.
pub fn format_type_reply(t: &SemType, tree: &OntologyTree) -> String {
    if t.is_empty() {
        return "none".to_string();
    }
    distinct(t, tree)
        .into_iter()
        .map(|(id, n)| format!("{}: {n}", tree.entity(id).path()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses an extraction reply; `None` on any line that is not a known path
/// with a positive count.
pub fn parse_type_reply(reply: &str, tree: &OntologyTree) -> Option<SemType> {
    let lines: Vec<&str> = reply
        .lines()
        .map(|l| l.trim().trim_start_matches(['-', '*']).trim().trim_matches('`'))
        .filter(|l| !l.is_empty())
        .collect();
    if lines.len() == 1 && lines[0].trim_end_matches('.').eq_ignore_ascii_case("none") {
        return Some(SemType::new());
    }
    if lines.is_empty() {
        return None;
    }
    let mut t = SemType::new();
    for line in lines {
        let (path, count) = line.rsplit_once(':')?;
        let id = tree.lookup_path(path.trim())?;
        let n: u32 = count.trim().parse().ok()?;
        if n == 0 {
            return None;
        }
        t.add_entity(id, n);
    }
    Some(t)
}
