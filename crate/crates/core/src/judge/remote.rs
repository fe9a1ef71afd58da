use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{JudgeBackend, JudgeError, JudgeOutput, JudgeRequest};
use crate::ses::{CheckReport, Indicator, VerificationVector};

/// Wire identifier of the prompt template.
pub const TEMPLATE_ID: &str = "qm-judge-v1";

/// Judge instruction with `{Query}`, `{Response}` and `{Verifier_Signal}` slots.
pub const PROMPT_TEMPLATE: &str = r#"Instruction for VRM Signal Integration and Scoring

System Instruction:
You are an expert AI evaluator assessing the reasoning process of a model. Your objective is to synthesize external
verifier signals with the original query and response to generate fine-grained, multidimensional soft scores and their
corresponding adaptive confidence weights.

Context:
Original Query: {Query}
Model Response: {Response}
External Verifier Output: {Verifier_Signal} (e.g., SymPy result, Execution Status)

Task:
Evaluate the response across three specific dimensions based on the query and the verifier signal.
For each dimension, assign a soft score (0-1) and a confidence weight (0-1).

Dimensions:
1. Mathematical Correctness (Corr): Is the calculation formally correct? Use the verifier signal as ground truth.
2. Physical Consistency (Phys): Does the reasoning follow quantum mechanics principles?
3. Instruction Following (Inst): Did the model follow constraints (e.g., format, method)?

Output Format JSON:
{
  "scores": { "Corr": float, "Phys": float, "Inst": float },
  "weights": { "Corr": float, "Phys": float, "Inst": float },
  "rationale": "Brief explanation..."
}
"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteJudgeConfig {
    pub endpoint: String,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    /// Name of the environment variable holding the bearer token.
    pub token_env: String,
}

impl Default for RemoteJudgeConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8700/v1/judge".into(),
            timeout_secs: 30,
            max_in_flight: 8,
            token_env: "QREWARD_JUDGE_TOKEN".into(),
        }
    }
}

/// Renders the verifier signal as one line per check that ran.
pub fn render_verifier_signal(v: &VerificationVector, reports: &[CheckReport]) -> String {
    let mut out = format!("v = (Corr {}, Phys {}, Inst {})", v.corr.value(), v.phys.value(), v.inst.value());
    for r in reports.iter().filter(|r| r.status != Indicator::Unavailable) {
        out.push_str(&format!("; {} {}: {}", r.check, if r.status == Indicator::Pass { "pass" } else { "FAIL" }, r.message));
    }
    out
}

pub fn render_prompt(request: &JudgeRequest<'_>) -> String {
    PROMPT_TEMPLATE
        .replace("{Query}", request.question)
        .replace("{Response}", request.answer)
        .replace("{Verifier_Signal}", &render_verifier_signal(request.verification, request.reports))
}

/// Counting semaphore bounding concurrent HTTP calls.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// HTTP judge. A malformed body is re-asked once before giving up.
#[derive(Debug)]
pub struct RemoteJudge {
    config: RemoteJudgeConfig,
    agent: ureq::Agent,
    gate: Gate,
}

impl RemoteJudge {
    pub fn new(config: RemoteJudgeConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        let gate = Gate {
            free: Mutex::new(config.max_in_flight.max(1)),
            cv: Condvar::new(),
        };
        Self { config, agent, gate }
    }

    fn body(request: &JudgeRequest<'_>) -> Value {
        json!({
            "question": request.question,
            "answer": request.answer,
            "verification": request.verification,
            "template": TEMPLATE_ID,
            "prompt": render_prompt(request),
        })
    }

    fn post_once(&self, body: &Value) -> Result<Value, JudgeError> {
        let _permit = self.gate.acquire();
        let mut req = self.agent.post(&self.config.endpoint);
        if let Ok(token) = std::env::var(&self.config.token_env) {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req.send_json(body).map_err(|e| JudgeError::Unavailable(e.to_string()))?;
        resp.body_mut()
            .read_json::<Value>()
            .map_err(|e| JudgeError::Unavailable(format!("malformed body: {e}")))
    }
}

/// Accepts a response only if it carries a complete numeric `scores` object.
pub fn parse_response(value: Value) -> Result<JudgeOutput, String> {
    if value.get("scores").is_none() {
        return Err("response has no `scores` object".into());
    }
    serde_json::from_value(value).map_err(|e| e.to_string())
}

impl JudgeBackend for RemoteJudge {
    fn name(&self) -> &str {
        "remote"
    }

    fn score(&self, request: &JudgeRequest<'_>) -> Result<JudgeOutput, JudgeError> {
        let body = Self::body(request);
        let mut last = String::new();
        for _ in 0..2 {
            match self.post_once(&body) {
                Ok(v) => match parse_response(v) {
                    Ok(out) => return Ok(out),
                    Err(e) => last = e,
                },
                Err(JudgeError::Unavailable(e)) if e.starts_with("malformed") => last = e,
                Err(e) => return Err(e),
            }
        }
        Err(JudgeError::Unavailable(last))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ses::PerDim;

    #[test]
    fn test_prompt_slots_filled() {
        let v = PerDim::new(Indicator::Pass, Indicator::Fail, Indicator::Unavailable);
        let req = JudgeRequest {
            question: "QQ",
            answer: "RR",
            reference: None,
            verification: &v,
            reports: &[],
        };
        let p = render_prompt(&req);
        assert!(p.contains("Original Query: QQ"));
        assert!(p.contains("Model Response: RR"));
        assert!(p.contains("External Verifier Output: v = (Corr 1, Phys -1, Inst 0)"));
        assert!(!p.contains("{Query}"));
        let body = RemoteJudge::body(&req);
        assert_eq!(body["template"], "qm-judge-v1");
        assert_eq!(body["verification"], json!({"Corr": 1, "Phys": -1, "Inst": 0}));
    }

    #[test]
    fn test_parse_response() {
        let ok = json!({"scores": {"Corr": 0.5, "Phys": 0.2, "Inst": 1.0}, "rationale": "x"});
        let out = parse_response(ok).unwrap();
        assert_eq!(out.scores, PerDim::new(0.5, 0.2, 1.0));
        assert!(out.weights.is_none());
        assert!(parse_response(json!({"weights": {}})).is_err());
        assert!(parse_response(json!({"scores": {"Corr": "high"}})).is_err());
    }

    #[test]
    fn test_unreachable_is_unavailable() {
        let judge = RemoteJudge::new(RemoteJudgeConfig {
            endpoint: "http://127.0.0.1:9/none".into(),
            timeout_secs: 2,
            ..Default::default()
        });
        let v = VerificationVector::unavailable();
        let req = JudgeRequest {
            question: "q",
            answer: "a",
            reference: None,
            verification: &v,
            reports: &[],
        };
        assert!(matches!(judge.score(&req), Err(JudgeError::Unavailable(_))));
    }
}
