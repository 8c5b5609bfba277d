//! Shared test support: independent metric oracles and a scripted mock
//! chat endpoint.

#![allow(dead_code)]

use outline_eval::pipeline::{ChatRequest, Transport, TransportFailure};

pub mod oracle {
    //! Brute-force ROUGE and BLEU, written straight from the definitions
    //! and kept independent of the library implementation: plain string
    //! lists, linear scans instead of hash multisets, recursive LCS.

    /// All contiguous n-grams of a token list, as joined strings.
    fn gram_list(tokens: &[String], n: usize) -> Vec<String> {
        if tokens.len() < n {
            return Vec::new();
        }
        (0..=tokens.len() - n)
            .map(|i| tokens[i..i + n].join("\u{1}"))
            .collect()
    }

    fn count_of(grams: &[String], g: &str) -> usize {
        grams.iter().filter(|x| x.as_str() == g).count()
    }

    /// Clipped overlap by scanning distinct grams of `a`.
    fn clipped_overlap(a: &[String], b: &[String]) -> usize {
        let mut seen: Vec<&str> = Vec::new();
        let mut total = 0;
        for g in a {
            if seen.contains(&g.as_str()) {
                continue;
            }
            seen.push(g);
            total += count_of(a, g).min(count_of(b, g));
        }
        total
    }

    pub fn rouge_n_f1(hyp: &[String], reference: &[String], n: usize) -> f64 {
        let hg = gram_list(hyp, n);
        let rg = gram_list(reference, n);
        let overlap = clipped_overlap(&hg, &rg);
        let p = if hg.is_empty() { 0.0 } else { overlap as f64 / hg.len() as f64 };
        let r = if rg.is_empty() { 0.0 } else { overlap as f64 / rg.len() as f64 };
        if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) }
    }

    /// Plain recursive LCS with memoization.
    fn lcs(a: &[String], b: &[String], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if i == 0 || j == 0 {
            return 0;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if a[i - 1] == b[j - 1] {
            lcs(a, b, i - 1, j - 1, memo) + 1
        } else {
            lcs(a, b, i - 1, j, memo).max(lcs(a, b, i, j - 1, memo))
        };
        memo[i][j] = Some(v);
        v
    }

    pub fn rouge_l_f1(hyp: &[String], reference: &[String]) -> f64 {
        let mut memo = vec![vec![None; reference.len() + 1]; hyp.len() + 1];
        let l = lcs(hyp, reference, hyp.len(), reference.len(), &mut memo);
        let p = if hyp.is_empty() { 0.0 } else { l as f64 / hyp.len() as f64 };
        let r = if reference.is_empty() { 0.0 } else { l as f64 / reference.len() as f64 };
        if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) }
    }

    pub fn bleu(hyp: &[String], references: &[Vec<String>], max_n: usize) -> f64 {
        if hyp.is_empty() {
            return 0.0;
        }
        let mut product = 1.0f64;
        for n in 1..=max_n {
            let hg = gram_list(hyp, n);
            if hg.is_empty() {
                return 0.0;
            }
            let mut overlap = 0usize;
            let mut seen: Vec<&str> = Vec::new();
            for g in &hg {
                if seen.contains(&g.as_str()) {
                    continue;
                }
                seen.push(g);
                let max_ref = references
                    .iter()
                    .map(|r| count_of(&gram_list(r, n), g))
                    .max()
                    .unwrap_or(0);
                overlap += count_of(&hg, g).min(max_ref);
            }
            if overlap == 0 {
                return 0.0;
            }
            product *= (overlap as f64 / hg.len() as f64).powf(1.0 / max_n as f64);
        }
        let c = hyp.len() as f64;
        let r = references
            .iter()
            .map(|r| r.len())
            .min_by_key(|&len| ((len as f64 - c).abs() as usize, len))
            .unwrap() as f64;
        let bp = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
        bp * product
    }
}

/// Deterministic scripted endpoint: outline requests get a numbered list
/// seeded by the prompt, segment requests echo their bullet, all-in
/// requests weave every bullet into one text.
pub struct EchoMock;

pub fn completion_body(content: &str) -> String {
    serde_json::to_string(&serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}]
    }))
    .unwrap()
}

impl Transport for EchoMock {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportFailure> {
        let content = &request.messages[0].content;
        let body = if let Some(idx) = content.find("Opening: ") {
            let opening_line = content[idx + 9..].lines().next().unwrap_or("").trim();
            let tag: String = opening_line
                .chars()
                .filter(|c| c.is_alphanumeric())
                .take(12)
                .collect::<String>()
                .to_lowercase();
            if content.contains("outline of exactly") {
                let bullets: Vec<String> = (1..=3)
                    .map(|i| format!("{i}. Plot point {i} develops the {tag} affair."))
                    .collect();
                completion_body(&bullets.join("\n"))
            } else if let Some(b) = content.find("nothing beyond it: ") {
                let bullet = content[b + "nothing beyond it: ".len()..].trim();
                completion_body(&format!(
                    "Filler about {tag} continues here. {bullet} More filler closes the section."
                ))
            } else {
                completion_body(&format!(
                    "The {tag} story opens slowly. It builds through every planned turn. It ends where the outline pointed."
                ))
            }
        } else {
            completion_body("Fallback text.")
        };
        Ok(body)
    }
}
