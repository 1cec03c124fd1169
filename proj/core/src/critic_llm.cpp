#include "samalm/critic_llm.hpp"

#include <fmt/format.h>

#include "samalm/checklist_assets.hpp"
#include "samalm/prompt_format.hpp"
#include "samalm/world_model.hpp"

namespace samalm::critics {

std::string_view local_checklist() { return assets::kLocalChecklist; }
std::string_view global_checklist() { return assets::kGlobalChecklist; }

llm::Prompt build_critic_prompt(const CriticVerdict& verdict, std::string_view context_text,
                                std::string_view checklist, int nonce) {
  llm::Prompt p;
  p.tag = verdict.scope.global ? llm::PromptTag{llm::PromptKind::GlobalCritic, -1}
                               : llm::PromptTag{llm::PromptKind::LocalCritic, verdict.scope.robot_id};
  p.nonce = nonce;
  p.system = std::string(checklist);
  p.user = fmt::format("Context:\n{}\n{}\n{}Rule-engine score: {}\nExplain the verdict for the actor.",
                       context_text, prompt_format::kPenaltyHeader,
                       verdict.penalties.empty() ? std::string("- none\n") : render_penalty_lines(verdict.penalties),
                       wm::format_number(verdict.score));
  return p;
}

CriticVerdict critique_with_llm(const CriticVerdict& verdict, std::string_view context_text,
                                std::string_view checklist, llm::Gateway* gateway, int nonce) {
  CriticVerdict out = verdict;
  out.reasoning = template_reasoning(verdict.scope, verdict.penalties);
  if (gateway == nullptr) return out;
  try {
    const llm::Completion c = gateway->complete(build_critic_prompt(verdict, context_text, checklist, nonce));
    out.reasoning = c.text;
  } catch (const llm::GatewayError&) {
    // Score authority stays with the rule engine; keep the template text.
  }
  return out;
}

}  // namespace samalm::critics
