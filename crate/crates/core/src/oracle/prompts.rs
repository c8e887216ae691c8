//! Prompt templates for the six request families.
//!
//! The wording follows the published prompts word for word; only the
//! paragraphs telling the model how to format code are rewritten to target
//! the classification language (see `docs/prompt-adaptation.md`).

use crate::dsl::{render_grammar_help, StubDecl};
use crate::retrieval::ExampleEntry;

use super::extract::render_code_block;
use super::{Attachment, ChatTurn};

const PREAMBLE: &str = "You are solving a Bongard-style problem where you will be given several examples of two hidden concepts, along with the rule for each of these examples. Your job is to write a Python program that will determine whether an input image is a positive or negative example of a concept. This program must generalize to images other than the examples I give you. These are the positive examples, which represent the concept {positive_concept}. ";

const UPLOADED_POSITIVES: &str =
    "I see you've uploaded the positive examples. Please upload the negative examples.";

const NEGATIVES_AND_STUBS: &str = "These are the negative examples, which represent the concept {negative_concept}\nPlease structure your program as a detection phase, where you first detect the necessary objects in the image, and then a classification phase, where you perform a series of operations to determine whether each image is a positive or negative example. The following method stubs are given to you as suggestions of methods you might want to implement for the detection phase: {stubs}";

const ASK_INSTRUCTIONS: &str = "Please provide instructions for the program I need to write.";

/// Code-format paragraph of the synthesis prompt, rewritten for the DSL.
const SYNTHESIS_FORMAT: &str = "Please write {n_programs} different programs in the classification language described below, each enclosed in Markdown backticks, that will determine whether an input image is an example of the positive concept {positive_concept}. Each program should define the entry point classify_image(image) that, given an input image, as well as any parameters that you needed to use in your program, will correctly output a POSITIVE or NEGATIVE classification. The language has no helper methods, so express the detection phase with its primitives.  Please also declare every parameter before the entry point in the format 'param <name> : float in (<low>, <high>)' or 'param <name> : int in (<low>, <high>)', giving its type and its range of values; declared parameters are tuned automatically.  Think a bit before you start writing code.\n\n{grammar}";

const ASK_EXAMPLE: &str = "Please provide an example of how to generate these programs.";

const STUBS: &str = "You are solving a Bongard-style problem where you must write a program that outputs 'POSITIVE' if an input image is an example of the positive concept {positive_concept} and 'NEGATIVE' otherwise.\nConsider the steps you must take to write this program.\nList 0-3 objects you will need to detect in the image. Please output as a comma-separated list in the format <objects>object1, object2, object3</objects>.\n\n\nExample: The positive concept is 'many squares' and the negative concept is 'few squares'.\n\nAnswer:\n<objects>square</objects>\n'''";

const STUB_DOC: &str = "def find_{object_name}(image: np.ndarray) -> np.ndarray:\n    \"\"\"\n    Returns the bounding boxes for all {obj}s in the image, if they exist, and None otherwise. The output array has the shape [N, 4] where N is the number of {obj}s in that image, and 4 corresponds to the bounding box format [x coordinate of upper left hand corner, \n    y coordinate of upper left hand corner, width of the box, height of the box].\n    \"\"\"";

const REPAIR_HEAD: &str = "You are an expert Python programmer. You wrote the following program: {program}\"\"\" ";

const REPAIR_EXCEPTION: &str =
    "When running the program, the following exception was encountered: {exception}";

const REPAIR_MISCOUNT: &str = "The program returned the wrong output on {wrong_positive} images that were positive examples of the concept {positive_concept} and {wrong_negative} images that were negative examples.";

/// Code-format paragraphs of the repair prompt, rewritten for the DSL.
const REPAIR_FORMAT: &str = "Please output a repaired version of this program enclosed in Markdown backticks.\nThe program must be written in the classification language described below; no libraries are available.\n\nPlease also declare every parameter before the entry point in the format 'param <name> : float in (<low>, <high>)' or 'param <name> : int in (<low>, <high>)', giving its type and its range of values. Think a bit about what went wrong with the original implementation before you start writing code.\n\n{grammar}";

const VERIFY_FIRST: &str = "You are solving a Bongard-style problem where you need to check whether an image corresponds to the rule {positive_concept}, which separates positive and negative images. The negative images adhere to the rule {negative_concept} instead.\n\nHere are {n_shot} positive examples. Please look at them and then await the negative examples, which I will give you after this message. Answer with only ok and nothing else.";

const OK: &str = "ok.";

const VERIFY_SECOND: &str = "Here are {n_shot} negative examples. These do not fulfill the rule {positive_concept}, but instead adhere to the rule {negative_concept}. Please look at them, and then, finally, I will give you a last image which you should classify as positive (adheres to the positive rule) or negative (does not adhere to the positive rule, but instead to the negative rule). Answer with only ok and nothing else.";

const VERIFY_LAST: &str = "Taking all prior information into consideration, given the following image, do you think it is positive, meaning it displays the concept '{positive_concept}'? Or is it negative and displays the concept '{negative_concept}'? First think about it, and then provide your answer in the following form:\nOutput enclosed in Markdown backticks either POSITIVE or NEGATIVE depending on your final decision. Do not produce any other output.";

const UPLOADED_NEGATIVES: &str = "I see you've uploaded the negative examples. Please provide instructions for solving the Bongard problem.";

const HYPOTHESES: &str = "Given these positive and negative images, please do the following:\n1. Someone has given you the following rules: {example_rules}. Consider how these rules apply to the positive and negative examples. Which examples do each of them work on? Which examples do they fail on?\n2. Output {n_sample} rules which predict when an image is positive. Please enclose each rule in <rule></rule>, e.g. <rule>contains red circle</rule>\"\"\"";

const BASELINE_FIRST: &str = "You are solving a Bongard-style problem where to solve the problem you need to infer a hidden rule that separates positive and negative images. Pay attention to abstract geometric properties.\nHere are {n_shot} positive examples. Please look at them and then await the negative examples, which I will give you after this message.";

const BASELINE_ACK: &str = "I see you've uploaded the positive examples. Please provide the negative examples for the Bongard problem, and I'll help you analyze the differences between the two groups in order to infer the hidden rule that separates positive and negative images.";

const BASELINE_SECOND: &str = "Here are {n_shot} negative examples.\n\n1. Analyze the positive examples (looking for what is common between them)\n2. Analyze the negative examples (looking for what is common between them)\n3. Compare negative and positive examples (looking for what is different between them)\n4. Output a rule which predicts when an image is positive or negative.";

/// Concept text used when a side has no stated rule.
pub const UNKNOWN_CONCEPT: &str = "unknown";
/// Stub slot text when no detectors were suggested.
pub const NO_STUBS: &str = "none";
/// Example-rule slot text when the curriculum is empty.
pub const NO_EXAMPLE_RULES: &str = "none";

fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in slots {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

/// Negative concept for a rule that only states the positive side.
pub fn negated(rule: &str) -> String {
    format!("not {rule}")
}

pub fn stub_doc(object_name: &str) -> String {
    fill(STUB_DOC, &[("object_name", object_name), ("obj", object_name)])
}

pub fn render_stubs(stubs: &[StubDecl]) -> String {
    if stubs.is_empty() {
        return NO_STUBS.to_string();
    }
    let docs: Vec<&str> = stubs.iter().map(|s| s.doc.as_str()).collect();
    format!("\n\n{}", docs.join("\n\n"))
}

pub fn render_example(example: Option<&ExampleEntry>) -> String {
    match example {
        Some(e) => format!(
            "Here is an example program for the rule '{}':\n\n{}",
            e.rule,
            render_code_block(e.program_source())
        ),
        None => "No example program is available.".to_string(),
    }
}

/// The two image-upload turns shared by synthesis and hypothesis prompts.
fn upload_turns(
    positive_concept: &str,
    negative_concept: &str,
    positives: &[Attachment],
    negatives: &[Attachment],
    stubs: &str,
) -> Vec<ChatTurn> {
    vec![
        ChatTurn::user(fill(PREAMBLE, &[("positive_concept", positive_concept)]), positives.to_vec()),
        ChatTurn::assistant(UPLOADED_POSITIVES),
        ChatTurn::user(
            fill(NEGATIVES_AND_STUBS, &[("negative_concept", negative_concept), ("stubs", stubs)]),
            negatives.to_vec(),
        ),
    ]
}

pub fn stubs_prompt(rule_pos: &str) -> Vec<ChatTurn> {
    vec![ChatTurn::user(fill(STUBS, &[("positive_concept", rule_pos)]), vec![])]
}

pub fn synthesis_prompt(
    rule_pos: &str,
    rule_neg: &str,
    positives: &[Attachment],
    negatives: &[Attachment],
    stubs: &[StubDecl],
    example: Option<&ExampleEntry>,
    n_programs: usize,
) -> Vec<ChatTurn> {
    let mut turns = upload_turns(rule_pos, rule_neg, positives, negatives, &render_stubs(stubs));
    turns.push(ChatTurn::assistant(ASK_INSTRUCTIONS));
    turns.push(ChatTurn::user(
        fill(
            SYNTHESIS_FORMAT,
            &[
                ("n_programs", &n_programs.to_string()),
                ("positive_concept", rule_pos),
                ("grammar", &render_grammar_help()),
            ],
        ),
        vec![],
    ));
    turns.push(ChatTurn::assistant(ASK_EXAMPLE));
    turns.push(ChatTurn::user(render_example(example), vec![]));
    turns
}

/// What went wrong with a program on its training examples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureReport {
    pub exception: Option<String>,
    pub wrong_positive: usize,
    pub wrong_negative: usize,
}

pub fn repair_prompt(source: &str, failure: &FailureReport, rule_pos: &str) -> Vec<ChatTurn> {
    let mut parts = vec![fill(REPAIR_HEAD, &[("program", source)])];
    if let Some(e) = &failure.exception {
        parts.push(fill(REPAIR_EXCEPTION, &[("exception", e)]));
    }
    parts.push(fill(
        REPAIR_MISCOUNT,
        &[
            ("wrong_positive", &failure.wrong_positive.to_string()),
            ("positive_concept", rule_pos),
            ("wrong_negative", &failure.wrong_negative.to_string()),
        ],
    ));
    parts.push(fill(REPAIR_FORMAT, &[("grammar", &render_grammar_help())]));
    vec![ChatTurn::user(parts.join("\n\n"), vec![])]
}

pub fn transduction_prompt(
    rule_pos: &str,
    rule_neg: &str,
    positives: &[Attachment],
    negatives: &[Attachment],
    test: &Attachment,
) -> Vec<ChatTurn> {
    let concepts = [("positive_concept", rule_pos), ("negative_concept", rule_neg)];
    let n_pos = positives.len().to_string();
    let n_neg = negatives.len().to_string();
    let mut first = concepts.to_vec();
    first.push(("n_shot", &n_pos));
    let mut second = concepts.to_vec();
    second.push(("n_shot", &n_neg));
    vec![
        ChatTurn::user(fill(VERIFY_FIRST, &first), positives.to_vec()),
        ChatTurn::assistant(OK),
        ChatTurn::user(fill(VERIFY_SECOND, &second), negatives.to_vec()),
        ChatTurn::assistant(OK),
        ChatTurn::user(fill(VERIFY_LAST, &concepts), vec![test.clone()]),
    ]
}

pub fn render_example_rules(rules: &[String]) -> String {
    if rules.is_empty() {
        return NO_EXAMPLE_RULES.to_string();
    }
    rules.iter().map(|r| format!("'{r}'")).collect::<Vec<_>>().join(", ")
}

pub fn hypothesis_prompt(
    positives: &[Attachment],
    negatives: &[Attachment],
    example_rules: &[String],
    n_sample: usize,
) -> Vec<ChatTurn> {
    let mut turns = upload_turns(UNKNOWN_CONCEPT, UNKNOWN_CONCEPT, positives, negatives, NO_STUBS);
    turns.push(ChatTurn::assistant(UPLOADED_NEGATIVES));
    turns.push(ChatTurn::user(
        fill(
            HYPOTHESES,
            &[("example_rules", &render_example_rules(example_rules)), ("n_sample", &n_sample.to_string())],
        ),
        vec![],
    ));
    turns
}

pub fn baseline_solution_prompt(positives: &[Attachment], negatives: &[Attachment]) -> Vec<ChatTurn> {
    vec![
        ChatTurn::user(fill(BASELINE_FIRST, &[("n_shot", &positives.len().to_string())]), positives.to_vec()),
        ChatTurn::assistant(BASELINE_ACK),
        ChatTurn::user(fill(BASELINE_SECOND, &[("n_shot", &negatives.len().to_string())]), negatives.to_vec()),
    ]
}
