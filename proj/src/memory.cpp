#include "acdc/memory.hpp"

#include <stdexcept>

namespace acdc {

namespace {

std::optional<int> refine_attr(const std::vector<ConditionRecord>& history,
                               std::optional<int> ConditionRecord::*attr, RefinePolicy policy) {
    const std::optional<int>& local = history.back().*attr;
    switch (policy) {
        case RefinePolicy::carry_forward_first_defined:
            for (const auto& rec : history)
                if ((rec.*attr).has_value()) return rec.*attr;
            return local;
        case RefinePolicy::carry_forward_latest:
            for (auto it = history.rbegin(); it != history.rend(); ++it)
                if (((*it).*attr).has_value()) return (*it).*attr;
            return local;
        case RefinePolicy::local_only:
            if (local.has_value()) return local;
            for (auto it = history.rbegin(); it != history.rend(); ++it)
                if (((*it).*attr).has_value()) return (*it).*attr;
            return local;
    }
    return local;
}

}  // namespace

ConditionRecord refine(const std::vector<ConditionRecord>& history, const RefinerRules& rules) {
    if (history.empty()) throw std::invalid_argument("refine: empty history");
    ConditionRecord out;
    out.character = refine_attr(history, &ConditionRecord::character, rules.character);
    out.background = refine_attr(history, &ConditionRecord::background, rules.background);
    out.motion = refine_attr(history, &ConditionRecord::motion, rules.motion);
    return out;
}

std::vector<ConditionRecord> refine_all(const std::vector<ConditionRecord>& history,
                                        const RefinerRules& rules) {
    if (history.empty()) throw std::invalid_argument("refine_all: empty history");
    std::vector<ConditionRecord> out;
    out.reserve(history.size());
    std::vector<ConditionRecord> prefix;
    prefix.reserve(history.size());
    for (const auto& rec : history) {
        prefix.push_back(rec);
        out.push_back(refine(prefix, rules));
    }
    return out;
}

}  // namespace acdc
