#pragma once

#include <string_view>

#include "samalm/critics.hpp"
#include "samalm/gateway.hpp"

namespace samalm::critics {

std::string_view local_checklist();
std::string_view global_checklist();

llm::Prompt build_critic_prompt(const CriticVerdict& verdict, std::string_view context_text,
                                std::string_view checklist, int nonce);

/// Asks the LLM critic to explain a deterministic verdict. The returned verdict
/// keeps the deterministic score and penalties; only `reasoning` comes from the
/// model. Gateway failures fall back to template reasoning.
CriticVerdict critique_with_llm(const CriticVerdict& verdict, std::string_view context_text,
                                std::string_view checklist, llm::Gateway* gateway, int nonce = 0);

}  // namespace samalm::critics
