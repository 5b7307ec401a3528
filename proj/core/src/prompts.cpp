#include "calibench/prompts.hpp"

#include "calibench/text.hpp"

namespace calibench {

std::string to_string(Frame f) {
  switch (f) {
    case Frame::Baseline: return "baseline";
    case Frame::YesFrame: return "yes-frame";
    case Frame::NoFrame: return "no-frame";
  }
  return "baseline";
}

std::optional<Frame> parse_frame(const std::string& name) {
  std::string key = text::lowercase(text::trim(name));
  if (key == "baseline") return Frame::Baseline;
  if (key == "yes-frame" || key == "yes_frame" || key == "yesframe") return Frame::YesFrame;
  if (key == "no-frame" || key == "no_frame" || key == "noframe") return Frame::NoFrame;
  return std::nullopt;
}

namespace {

const char* kBaselineTemplate =
    "Please answer the following yes/no question '[question]'. This question has only one "
    "correct answer. Follow these steps:\n"
    "\n"
    "1. Think through the question step-by-step, employing a human-like reasoning process.\n"
    "\n"
    "2. Pick the answer that you think is correct and begin with:\n"
    "- \"The answer to the question is yes. ... (reason)\"\n"
    "- \"The answer to the question is no. ... (reason)\"\n"
    "Even if you are unsure about the answer, pick the one that you think is more likely "
    "correct, and give your reasons.\n"
    "\n"
    "3. Explain your reasoning process in detail.\n"
    "\n"
    "4. List the key pieces of knowledge used in your reasoning, presented as declarative "
    "sentences and enumerated.\n"
    "\n"
    "5. After providing your answer, evaluate your response in three aspects:\n"
    "- What is your estimate of the probability (in percent) that your answer is correct?\n"
    "- What is your estimate of the probability (in percent) that the facts underlying your "
    "answer are correct?\n"
    "- What is your estimate of the probability (in percent) that the reasoning underlying "
    "your answer is correct?\n";

const char* kFrameTemplate =
    "Please consider the following yes/no question '[question]'. This question has only one "
    "correct answer. What is the probability, that the correct answer is '[framed]'? State "
    "your estimate in percent.\n";

const char* kRefinementTemplate =
    "Please formulate a question of the form \"Is it true that ...\", using the following "
    "structure: the subject is \"[subject]\", the object is \"[object_]\", and the predicate "
    "in short-hand notation is \"[predicate]\". Before generating the final question, please "
    "perform the following checks and adjustments:\n"
    "\n"
    "1. Predicate Validity Check: Examine whether the given predicate \"[predicate]\" makes "
    "grammatical sense in English. If it doesn't, please reformulate it to ensure it follows "
    "proper English syntax and conventions. For example, same_instance_of might be "
    "reformulated to \"is the same instance as\" or \"is identical to\".\n"
    "\n"
    "2. Sentence Completeness Check: Assess whether the current predicate is sufficient to "
    "generate a complete, coherent sentence. If not, extend it appropriately without "
    "altering its core meaning. For example, same_named_after could be extended to \"is "
    "named after the same person/thing as\".\n"
    "\n"
    "After making these adjustments, generate a grammatically correct and complete question "
    "that accurately represents the relationship between the subject and object using the "
    "(potentially modified) predicate. Your final output should be a single, well-formed "
    "question in the format \"Is it true that [subject] [predicate] [object]?\", where "
    "[predicate] has been checked and adjusted if necessary.\n";

}  // namespace

std::string build_prompt(const std::string& question_text, Frame frame) {
  if (frame == Frame::Baseline) {
    return text::replace_all(kBaselineTemplate, "[question]", question_text);
  }
  std::string out = text::replace_all(kFrameTemplate, "[question]", question_text);
  return text::replace_all(std::move(out), "[framed]",
                           frame == Frame::YesFrame ? "Yes" : "No");
}

std::string refinement_prompt(const std::string& subject, const std::string& object,
                              const std::string& predicate) {
  std::string out = kRefinementTemplate;
  out = text::replace_all(std::move(out), "[subject]", subject);
  out = text::replace_all(std::move(out), "[object_]", object);
  out = text::replace_all(std::move(out), "[predicate]", predicate);
  return out;
}

}  // namespace calibench
