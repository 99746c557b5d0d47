#ifndef HAS_ASPM_HPP
#define HAS_ASPM_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "has/json_io.hpp"
#include "has/time.hpp"
#include "has/validation.hpp"

namespace has::aspm {

enum class AssemblerKind { Human, Machine };
enum class PortDirection { Input, Output };
enum class ConnectorKind { Active, Passive };

struct Assembler {
    std::string id;
    AssemblerKind kind = AssemblerKind::Machine;
    std::set<std::string> skills;
};

struct Port {
    std::string id;
    PortDirection direction = PortDirection::Input;
};

struct AssemblySubSystem {
    std::string id;
    std::vector<AssemblySubSystem> children;
    std::vector<Port> ports;
    std::optional<Assembler> assembler;  // present iff leaf
};

struct PortRef {
    std::string subsystem;
    std::string port;
};

struct PlatformConnector {
    std::string id;
    ConnectorKind kind = ConnectorKind::Active;
    PortRef from;
    PortRef to;
    Duration transit_time;                 // Active only
    std::optional<std::int64_t> capacity;  // Passive only; nullopt = Unbounded
};

struct DurationTable {
    // (skill, assembler) -> duration
    std::map<std::pair<std::string, std::string>, Duration> entries;

    std::optional<Duration> lookup(const std::string& skill, const std::string& assembler) const {
        auto it = entries.find({skill, assembler});
        if (it == entries.end()) return std::nullopt;
        return it->second;
    }
};

struct PlatformModel {
    std::string id;
    std::vector<AssemblySubSystem> subsystems;
    std::vector<PlatformConnector> platform_connectors;
    DurationTable duration_table;
};

// ---------------------------------------------------------------------------
// Serialization (kind="aspm")

namespace detail {

inline AssemblySubSystem parse_subsystem(const io::json& j) {
    AssemblySubSystem s;
    s.id = io::str_field(j, "id", "subsystem");
    if (j.contains("children"))
        for (const auto& cj : io::array_field(j, "children", s.id))
            s.children.push_back(parse_subsystem(cj));
    if (j.contains("ports")) {
        for (const auto& pj : io::array_field(j, "ports", s.id)) {
            Port p;
            p.id = io::str_field(pj, "id", "port of " + s.id);
            std::string d = io::str_field(pj, "direction", p.id);
            if (d == "input")
                p.direction = PortDirection::Input;
            else if (d == "output")
                p.direction = PortDirection::Output;
            else
                throw Error(ErrorCode::MalformedModel,
                            "port '" + p.id + "': direction must be input or output");
            s.ports.push_back(std::move(p));
        }
    }
    if (j.contains("assembler")) {
        const io::json& aj = j["assembler"];
        Assembler a;
        a.id = io::str_field(aj, "id", "assembler");
        std::string k = io::str_field(aj, "kind", a.id);
        if (k == "human")
            a.kind = AssemblerKind::Human;
        else if (k == "machine")
            a.kind = AssemblerKind::Machine;
        else
            throw Error(ErrorCode::MalformedModel,
                        "assembler '" + a.id + "': kind must be human or machine");
        auto skills = io::str_list(io::array_field(aj, "skills", a.id), a.id);
        a.skills.insert(skills.begin(), skills.end());
        s.assembler = std::move(a);
    }
    return s;
}

inline io::json subsystem_to_json(const AssemblySubSystem& s) {
    io::json j;
    j["id"] = s.id;
    if (!s.children.empty()) {
        io::json cs = io::json::array();
        for (const auto& c : s.children) cs.push_back(subsystem_to_json(c));
        j["children"] = cs;
    }
    if (!s.ports.empty()) {
        io::json ps = io::json::array();
        for (const auto& p : s.ports)
            ps.push_back({{"id", p.id},
                          {"direction", p.direction == PortDirection::Input ? "input" : "output"}});
        j["ports"] = ps;
    }
    if (s.assembler) {
        io::json aj;
        aj["id"] = s.assembler->id;
        aj["kind"] = s.assembler->kind == AssemblerKind::Human ? "human" : "machine";
        aj["skills"] = std::vector<std::string>(s.assembler->skills.begin(),
                                                s.assembler->skills.end());
        j["assembler"] = aj;
    }
    return j;
}

inline PortRef parse_port_ref(const io::json& j, const std::string& ctx) {
    PortRef r;
    r.subsystem = io::str_field(j, "subsystem", ctx);
    r.port = io::str_field(j, "port", ctx);
    return r;
}

}  // namespace detail

inline PlatformModel parse(const io::json& j) {
    io::expect_kind(j, "aspm", "aspm");
    PlatformModel m;
    m.id = io::str_field(j, "id", "aspm");
    for (const auto& sj : io::array_field(j, "subsystems", "aspm"))
        m.subsystems.push_back(detail::parse_subsystem(sj));
    if (j.contains("connectors")) {
        for (const auto& cj : io::array_field(j, "connectors", "aspm")) {
            PlatformConnector c;
            c.id = io::str_field(cj, "id", "platform connector");
            std::string k = io::str_field(cj, "kind", c.id);
            if (k == "active") {
                c.kind = ConnectorKind::Active;
                c.transit_time = io::duration_field(cj, "transit_time", c.id);
            } else if (k == "passive") {
                c.kind = ConnectorKind::Passive;
                if (cj.contains("capacity")) {
                    if (!cj["capacity"].is_number_integer() ||
                        cj["capacity"].get<std::int64_t>() <= 0)
                        throw Error(ErrorCode::MalformedModel,
                                    "connector '" + c.id + "': capacity must be a positive integer");
                    c.capacity = cj["capacity"].get<std::int64_t>();
                }
            } else {
                throw Error(ErrorCode::MalformedModel,
                            "connector '" + c.id + "': kind must be active or passive");
            }
            c.from = detail::parse_port_ref(io::field(cj, "from", c.id), c.id);
            c.to = detail::parse_port_ref(io::field(cj, "to", c.id), c.id);
            m.platform_connectors.push_back(std::move(c));
        }
    }
    if (j.contains("durations")) {
        for (const auto& dj : io::array_field(j, "durations", "aspm")) {
            std::string skill = io::str_field(dj, "skill", "duration entry");
            std::string asm_id = io::str_field(dj, "assembler", "duration entry");
            Duration d = io::duration_field(dj, "duration", skill + "/" + asm_id);
            m.duration_table.entries[{skill, asm_id}] = d;
        }
    }
    return m;
}

inline io::json to_json(const PlatformModel& m) {
    io::json j;
    j["kind"] = "aspm";
    j["id"] = m.id;
    io::json subs = io::json::array();
    for (const auto& s : m.subsystems) subs.push_back(detail::subsystem_to_json(s));
    j["subsystems"] = subs;
    io::json conns = io::json::array();
    for (const auto& c : m.platform_connectors) {
        io::json cj;
        cj["id"] = c.id;
        cj["kind"] = c.kind == ConnectorKind::Active ? "active" : "passive";
        cj["from"] = {{"subsystem", c.from.subsystem}, {"port", c.from.port}};
        cj["to"] = {{"subsystem", c.to.subsystem}, {"port", c.to.port}};
        if (c.kind == ConnectorKind::Active) cj["transit_time"] = c.transit_time.str();
        if (c.capacity) cj["capacity"] = *c.capacity;
        conns.push_back(cj);
    }
    j["connectors"] = conns;
    io::json durs = io::json::array();
    for (const auto& [key, d] : m.duration_table.entries)
        durs.push_back({{"skill", key.first}, {"assembler", key.second}, {"duration", d.str()}});
    j["durations"] = durs;
    return j;
}

// ---------------------------------------------------------------------------
// Queries

namespace detail {

template <typename F>
void for_each_subsystem(const std::vector<AssemblySubSystem>& roots, F&& f) {
    auto walk = [&](auto&& self, const AssemblySubSystem& s) -> void {
        f(s);
        for (const auto& c : s.children) self(self, c);
    };
    for (const auto& s : roots) walk(walk, s);
}

}  // namespace detail

inline std::vector<const Assembler*> assemblers(const PlatformModel& m) {
    std::vector<const Assembler*> out;
    detail::for_each_subsystem(m.subsystems, [&](const AssemblySubSystem& s) {
        if (s.assembler) out.push_back(&*s.assembler);
    });
    std::sort(out.begin(), out.end(),
              [](const Assembler* a, const Assembler* b) { return a->id < b->id; });
    return out;
}

// assembler id -> enclosing leaf subsystem id
inline std::map<std::string, std::string> assembler_subsystems(const PlatformModel& m) {
    std::map<std::string, std::string> out;
    detail::for_each_subsystem(m.subsystems, [&](const AssemblySubSystem& s) {
        if (s.assembler) out[s.assembler->id] = s.id;
    });
    return out;
}

inline ValidationReport validate_aspm(const PlatformModel& m) {
    ValidationReport r;
    std::set<std::string> sub_ids;
    std::map<std::string, std::map<std::string, PortDirection>> ports;
    std::set<std::string> assembler_ids;
    int n_assemblers = 0;

    detail::for_each_subsystem(m.subsystems, [&](const AssemblySubSystem& s) {
        if (!sub_ids.insert(s.id).second)
            r.error("DUPLICATE_SUBSYSTEM_ID", s.id, "subsystem id appears more than once");
        std::set<std::string> pids;
        for (const auto& p : s.ports) {
            if (!pids.insert(p.id).second)
                r.error("DUPLICATE_PORT_ID", p.id, "within subsystem " + s.id);
            ports[s.id][p.id] = p.direction;
        }
        bool leaf = s.children.empty();
        if (leaf && !s.assembler)
            r.error("ASSEMBLER_PLACEMENT", s.id, "leaf subsystem must carry an assembler");
        if (!leaf && s.assembler)
            r.error("ASSEMBLER_PLACEMENT", s.id, "non-leaf subsystem may not carry an assembler");
        if (s.assembler) {
            ++n_assemblers;
            if (!assembler_ids.insert(s.assembler->id).second)
                r.error("DUPLICATE_ASSEMBLER_ID", s.assembler->id, "");
            if (s.assembler->skills.empty())
                r.error("SKILLS_EMPTY", s.assembler->id, "assembler must hold at least one skill");
            for (const auto& skill : s.assembler->skills) {
                auto d = m.duration_table.lookup(skill, s.assembler->id);
                if (!d)
                    r.error("DURATION_MISSING", s.assembler->id,
                            "no duration for skill '" + skill + "'");
                else if (!d->positive())
                    r.error("DURATION_NONPOSITIVE", s.assembler->id,
                            "duration for skill '" + skill + "' must be positive");
            }
        }
    });
    if (n_assemblers == 0)
        r.error("NO_ASSEMBLERS", m.id, "platform must have at least one assembler");

    for (const auto& c : m.platform_connectors) {
        auto check = [&](const PortRef& ref, PortDirection want, const char* side) {
            auto sit = ports.find(ref.subsystem);
            if (sit == ports.end() || !sit->second.count(ref.port)) {
                r.error("PORT_UNKNOWN", c.id,
                        std::string(side) + " port " + ref.subsystem + "." + ref.port +
                            " does not exist");
                return;
            }
            if (sit->second.at(ref.port) != want)
                r.error("PORT_DIRECTION", c.id,
                        std::string(side) + " port " + ref.subsystem + "." + ref.port +
                            " has the wrong direction");
        };
        check(c.from, PortDirection::Output, "from");
        check(c.to, PortDirection::Input, "to");
        if (c.kind == ConnectorKind::Active && c.transit_time < Duration{})
            r.error("TRANSIT_NEGATIVE", c.id, "transit_time must be non-negative");
    }
    return r;
}

inline std::set<std::string> platform_skill_set(const PlatformModel& m) {
    std::set<std::string> out;
    for (const Assembler* a : assemblers(m)) out.insert(a->skills.begin(), a->skills.end());
    return out;
}

}  // namespace has::aspm

#endif
