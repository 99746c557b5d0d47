#ifndef HAS_CATALOG_HPP
#define HAS_CATALOG_HPP

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "has/aspm.hpp"
#include "has/json_io.hpp"
#include "has/validation.hpp"

namespace has::apm {

// The standardized action vocabulary: every action names the skill that
// realizes it and the parameter names an instance must bind.
struct ActionEntry {
    std::string id;
    std::string skill;
    std::vector<std::string> parameters;
};

struct ActionCatalog {
    std::string id;
    std::vector<ActionEntry> entries;

    const ActionEntry* find(const std::string& action_id) const {
        for (const auto& e : entries)
            if (e.id == action_id) return &e;
        return nullptr;
    }
};

inline ActionCatalog parse_catalog(const io::json& j) {
    io::expect_kind(j, "catalog", "catalog");
    ActionCatalog c;
    c.id = io::str_field(j, "id", "catalog");
    for (const auto& ej : io::array_field(j, "actions", "catalog")) {
        ActionEntry e;
        e.id = io::str_field(ej, "id", "catalog action");
        e.skill = io::str_field(ej, "skill", e.id);
        if (ej.contains("parameters"))
            e.parameters = io::str_list(io::array_field(ej, "parameters", e.id), e.id);
        c.entries.push_back(std::move(e));
    }
    return c;
}

inline io::json catalog_to_json(const ActionCatalog& c) {
    io::json j;
    j["kind"] = "catalog";
    j["id"] = c.id;
    io::json as = io::json::array();
    for (const auto& e : c.entries) {
        io::json ej;
        ej["id"] = e.id;
        ej["skill"] = e.skill;
        if (!e.parameters.empty()) ej["parameters"] = e.parameters;
        as.push_back(ej);
    }
    j["actions"] = as;
    return j;
}

inline ValidationReport validate_catalog(const ActionCatalog& c) {
    ValidationReport r;
    std::set<std::string> ids;
    for (const auto& e : c.entries) {
        if (!ids.insert(e.id).second)
            r.error("DUPLICATE_ACTION_ID", e.id, "catalog action id appears more than once");
        if (e.skill.empty()) r.error("SKILL_EMPTY", e.id, "action must name a realizing skill");
    }
    return r;
}

}  // namespace has::apm

namespace has::aspm {

// Required actions whose realizing skill the platform lacks; empty means the
// process is deployable on this platform.
inline std::set<std::string> capability_gap(const std::set<std::string>& required,
                                            const PlatformModel& model,
                                            const apm::ActionCatalog& catalog) {
    auto skills = platform_skill_set(model);
    std::set<std::string> gap;
    for (const auto& action : required) {
        const apm::ActionEntry* e = catalog.find(action);
        if (!e)
            throw Error(ErrorCode::UnknownAction, "action '" + action + "' not in catalog");
        if (!skills.count(e->skill)) gap.insert(action);
    }
    return gap;
}

}  // namespace has::aspm

#endif
