#pragma once

#include <optional>
#include <string>

namespace calibench {

/// How the question is put to the model: the step-by-step yes/no protocol,
/// or a direct probability elicitation for one of the two answer framings.
enum class Frame { Baseline, YesFrame, NoFrame };

std::string to_string(Frame f);
std::optional<Frame> parse_frame(const std::string& name);

/// The two answer openings the baseline protocol instructs models to use.
inline constexpr const char* kYesOpening = "The answer to the question is yes.";
inline constexpr const char* kNoOpening = "The answer to the question is no.";

/// Renders the full prompt for a question under the given frame. The output
/// is deterministic: identical inputs yield identical bytes.
std::string build_prompt(const std::string& question_text, Frame frame);

/// The question-refinement instruction with the three placeholders filled
/// in. Substitution is literal; no escaping is applied.
std::string refinement_prompt(const std::string& subject, const std::string& object,
                              const std::string& predicate);

}  // namespace calibench
