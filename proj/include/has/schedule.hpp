#ifndef HAS_SCHEDULE_HPP
#define HAS_SCHEDULE_HPP

#include <algorithm>
#include <string>
#include <vector>

#include "has/json_io.hpp"
#include "has/time.hpp"

namespace has::lower {

struct ScheduledAction {
    std::string action_instance_id;
    std::string assembler_id;
    TimePoint start;
    TimePoint finish;
};

struct Schedule {
    std::vector<ScheduledAction> entries;  // kept in (start, assembler, action) order
    Duration makespan;
};

inline Duration makespan_of(const Schedule& s) {
    Duration m{};
    for (const auto& e : s.entries) m = std::max(m, e.finish);
    return m;
}

inline io::json schedule_to_json(const Schedule& s) {
    io::json j;
    io::json es = io::json::array();
    for (const auto& e : s.entries)
        es.push_back({{"action", e.action_instance_id},
                      {"assembler", e.assembler_id},
                      {"start", e.start.str()},
                      {"finish", e.finish.str()}});
    j["entries"] = es;
    j["makespan"] = s.makespan.str();
    return j;
}

inline Schedule parse_schedule(const io::json& j) {
    Schedule s;
    for (const auto& ej : io::array_field(j, "entries", "schedule")) {
        ScheduledAction e;
        e.action_instance_id = io::str_field(ej, "action", "schedule entry");
        e.assembler_id = io::str_field(ej, "assembler", e.action_instance_id);
        e.start = io::duration_field(ej, "start", e.action_instance_id);
        e.finish = io::duration_field(ej, "finish", e.action_instance_id);
        s.entries.push_back(std::move(e));
    }
    s.makespan = io::duration_field(j, "makespan", "schedule");
    return s;
}

}  // namespace has::lower

#endif
