#pragma once

#include <string_view>

// Markers shared by prompt builders and the scripted oracle that reads them.
namespace samalm::prompt_format {

inline constexpr std::string_view kFeedbackHeader = "Critic feedback on your previous proposals:";
inline constexpr std::string_view kPersonaPrefix = "persona:";
inline constexpr std::string_view kParametersPrefix = "parameters:";
inline constexpr std::string_view kRobotBlockPrefix = "### robot-";
inline constexpr std::string_view kPenaltyHeader = "Itemized penalties:";
inline constexpr std::string_view kTimePrefix = "time:";

}  // namespace samalm::prompt_format
