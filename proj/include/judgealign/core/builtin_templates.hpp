#pragma once

// Built-in copies of the prompt templates shipped under share/templates/.
// A test keeps the two in sync.

#include <string_view>

namespace judgealign::builtin {

inline constexpr std::string_view judge_completion_yaml = R"tpl(system: |
  Please act as an impartial judge and evaluate the quality of the 
  responses provided by two AI assistants to the coding context 
  displayed below.

  You should choose the answer that fits the prefix AND suffix 
  contexts within the XML tags. Your evaluation should consider 
  factors such as relevance, accuracy, and style.

  Begin your evaluation by comparing the two responses and provide 
  a short explanation. Avoid any position biases and ensure that 
  the order in which the responses were presented does not 
  influence your decision. Do not allow the length of the 
  responses to influence your evaluation. Do not favor certain 
  names of the assistants. Be as objective as possible.

  After providing your explanation, output your final verdict by 
  strictly following this format within <answer> </answer> XML tags.

  Use the answer "[[A]]" if assistant A is better, "[[B]]" if 
  assistant B is better.

query: |
  <prefix>
  {prefix}
  </prefix>

  <suffix>
  {suffix}
  </suffix>

  <assistant_a_response>
  {answer_a}
  </assistant_a_response>

  <assistant_b_response>
  {answer_b}
  </assistant_b_response>
)tpl";

inline constexpr std::string_view judge_chat_yaml = R"tpl(system: |
  Please act as an impartial judge and evaluate the quality of 
  the responses provided by two AI assistants to a user prompt.

  The prompt appears below within the XML tag <prompt>, and 
  the two responses appear within tags labelled "Assistant A" 
  and "Assistant B".

  Your evaluation should consider factors such as relevance, 
  accuracy, and style. Begin by comparing the two responses 
  and provide a short explanation.
  Avoid any position biases and ensure the order of 
  presentation does not influence your decision. Do not allow 
  response length to influence your evaluation. Do not favor 
  certain assistant names. Be as objective as possible.

  After providing your explanation, output your final verdict 
  by strictly following this format within <answer> </answer> 
  XML tags.

  Use the answer "[[A]]" if assistant A is better, "[[B]]" if 
  assistant B is better.

query: |
  <prompt>
  {user_instruction}
  </prompt>

  <assistant_a_response>
  {answer_a}
  </assistant_a_response>

  <assistant_b_response>
  {answer_b}
  </assistant_b_response>
)tpl";

inline constexpr std::string_view judge_edit_yaml = R"tpl(system: |
  I am a machine learning scientist studying responses given by 
  LLM coding assistants. The models are tasked with editing user 
  code to follow user instructions.

  Please act as an impartial judge and evaluate the quality of 
  the responses provided by the two AI assistants. The responses 
  appear below within XML tags labelled "Assistant A" and 
  "Assistant B".

  Begin your evaluation by comparing the two responses and 
  provide a short explanation. Avoid any position biases and 
  ensure that the order in which the responses were presented 
  does not influence your decision. Do not allow the length of 
  the responses to influence your evaluation. Do not favor
  certain names of the assistants. Be as objective as possible.

  After providing your explanation, output your final verdict 
  by strictly following this format within <answer> </answer> 
  XML tags.

  Use the answer "[[A]]" if assistant A is better, "[[B]]" if 
  assistant B is better.

query: |
  This is the prefix of the coding file:
  {prefix}

  This is the suffix of the file:
  {suffix}

  This is the code selected by the user to rewrite:
  {code_to_edit}

  The user has given the instructions:
  {user_input}

  Below are the assistant-generated edits to the code:

  <assistant_a_response>
  {answer_a}
  </assistant_a_response>

  <assistant_b_response>
  {answer_b}
  </assistant_b_response>
)tpl";

inline constexpr std::string_view scorer_yaml = R"tpl(system: |
  You are an impartial evaluator comparing two responses to the same coding
  context. For each rubric axis listed below, decide which response sits
  higher on that axis according to its High and Low descriptions.

  Answer A if assistant A's response is higher on the axis, B if assistant
  B's response is higher, and TIE if both are equally high or equally low.
  Judge every axis independently. Avoid any position biases and do not let
  response length influence your decisions.

  Output one line per axis, in the order given, inside <scores> </scores>
  XML tags. Each line must have the form "<number>. <axis name>: <A|B|TIE>".
  Do not output anything else inside the tags.

query: |
  {context}

  <assistant_a_response>
  {answer_a}
  </assistant_a_response>

  <assistant_b_response>
  {answer_b}
  </assistant_b_response>

  Rubric axes:
  {axes}

  Respond with:
  <scores>
  {answer_lines}
  </scores>
)tpl";

inline constexpr std::string_view proposer_txt = R"tpl(You are a machine learning researcher analyzing two large language 
models (LLMs) by comparing how their responses differ to the same 
set of questions. Your goal is to identify unique, interpretable 
behavioral dimensions ("axes of variation") that capture subtle or 
surprising differences between the models.

Here are the questions and responses:
{combined_responses}

For each axis, describe what makes one model's responses higher 
and the other's lower on that dimension. Focus on differences 
that reveal deeper behavioral tendencies rather than surface 
traits.

Format your output as a bulleted list, with each axis on a new 
line starting with a dash (-) or asterisk (*). Each axis should 
follow this format:

- {axis}: High → {description of high end} | Low → {description 
    of low end}

Example:
- Self-consistency: High → Responses maintain consistent 
reasoning throughout | Low → Reasoning may shift or contradict 
earlier statements

Guidelines:
- Avoid obvious or generic dimensions such as "clarity," 
    "conciseness," or "formality."
- Look for behavioral nuances from reasoning patterns, goal 
    orientation, implicit assumptions, moral framing, creativity 
    style, uncertainty handling, or tone of confidence.
- Axes may mix abstract and domain-specific aspects.
- Each axis must be something a human could use to categorize 
    which model response is higher or lower.
- Do not add explanations, prefaces, or summaries.
- If no substantive differences exist, output only "No 
    differences found."
)tpl";

inline constexpr std::string_view aggregator_txt = R"tpl(The following are axes of variation for comparing two model outputs. 
Each axis includes a name and a description of what makes an output 
high or low on that dimension. Some axes may be redundant, misnamed, 
or overlap with others. Your task is to cluster and reduce these 
axes into a minimal set of parent axes that are as distinct and 
non-overlapping as possible, while preserving the specificity
and uniqueness of the original axes. Do not over-merge genuinely 
distinct properties.

For each parent axis you create:
- Ensure the high and low descriptions faithfully subsume the axes 
    they replace, while retaining distinctive properties rather 
    than over-generalizing.
- If an axis is truly unique or nuanced, keep it as its own parent 
    axis rather than forcing a merge.
- Parent axes must be mutually exclusive and enable a human to 
    reliably and uniquely categorize model outputs along each 
    dimension.
- If an axis is domain- or task-specific (e.g., coding), reflect 
    this specificity in the axis name.

Here are the axes of variation (each formatted as
{axis name}: High: {high description} Low: {low description}):

{differences}

Cluster and reduce these axes into a minimal, clear set of parent 
axes, retaining uniqueness where present. Each parent axis should 
include a name and a concise (<20 words) description that preserves 
any domain-specific or distinctive properties in the original.

Format your output as a bulleted list, one axis per line, using:

- {axis}: High → {description of high end} | Low → {description 
of low end}
)tpl";

inline constexpr std::string_view annotator_proposer_txt = R"tpl(You are a machine learning researcher analyzing annotator comments 
to surface unique, interpretable behavioral dimensions ("axes of 
variation") that capture what annotators notice when preferring one 
answer over another. Work only from the comments -- do not assume 
anything about the original questions or answers.

Here are the comments to analyze:
{comments}

For each axis, describe what makes a response higher versus lower 
on that dimension. Focus on differences that reveal deeper 
behavioral tendencies rather than surface traits.

Format your output as a bulleted list, with each axis on a new line 
starting with a dash (-) or asterisk (*). Each axis should follow 
this format:

- {axis}: High → {description of high end} | Low → {description 
of low end}

Guidelines:
- Derive axes only from the themes present in the comments (e.g., 
    syntax validity, conciseness, unnecessary extras, instruction 
    alignment).
- Look for interpretable, discriminative properties (reasoning 
    patterns, goal orientation, adherence to constraints) rather 
    than generic "good/bad."
- Keep axes human-usable; a reviewer should be able to place an 
    answer as higher or lower on the axis from the comment.
- Do not mention specific questions, models, or options -- focus 
    on underlying properties.
- If no substantive differences are present, output only "No 
    differences found."
)tpl";

}  // namespace judgealign::builtin
