#pragma once

#include <vector>

#include "acdc/condition.hpp"

namespace acdc {

// How an attribute of the latest record is reconciled with its history.
//   carry_forward_first_defined: the first value ever defined wins, even over
//     a locally present value (persistent attributes: character, background).
//   carry_forward_latest: the most recent defined value wins.
//   local_only: a locally present value is kept; an absent one is filled from
//     the most recent defined value (transient attributes: motion).
enum class RefinePolicy { carry_forward_first_defined, carry_forward_latest, local_only };

struct RefinerRules {
    RefinePolicy character = RefinePolicy::carry_forward_first_defined;
    RefinePolicy background = RefinePolicy::carry_forward_first_defined;
    RefinePolicy motion = RefinePolicy::local_only;
};

// Refined condition for the last entry of history. Throws on empty history.
ConditionRecord refine(const std::vector<ConditionRecord>& history,
                       const RefinerRules& rules = {});

// Causal one-shot refinement: element i equals refine(history[0..i]).
std::vector<ConditionRecord> refine_all(const std::vector<ConditionRecord>& history,
                                        const RefinerRules& rules = {});

}  // namespace acdc
