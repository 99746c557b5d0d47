#ifndef HAS_TEST_HELPERS_HPP
#define HAS_TEST_HELPERS_HPP

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "has/has.hpp"

namespace has::test {

inline std::string fixture_path(const std::string& name) {
    return std::string(HAS_FIXTURES) + "/" + name;
}

inline io::json load_fixture(const std::string& name) {
    return io::parse_text(io::read_file(fixture_path(name)), name);
}

inline psm::ProductStructuralModel sample() { return psm::parse(load_fixture("sample.json")); }
inline apm::ActionCatalog default_catalog() {
    return apm::parse_catalog(load_fixture("catalog.json"));
}
inline aspm::PlatformModel cell2() { return aspm::parse(load_fixture("cell2.json")); }

// ---------------------------------------------------------------------------
// Brute-force linear-extension oracle: filter all permutations.

inline std::vector<std::vector<std::string>> brute_force_linear_extensions(
    std::vector<std::string> members, const std::vector<std::pair<std::string, std::string>>& edges) {
    std::sort(members.begin(), members.end());
    std::vector<std::vector<std::string>> out;
    do {
        std::map<std::string, std::size_t> pos;
        for (std::size_t i = 0; i < members.size(); ++i) pos[members[i]] = i;
        bool ok = true;
        for (const auto& [b, a] : edges)
            if (pos.at(b) >= pos.at(a)) {
                ok = false;
                break;
            }
        if (ok) out.push_back(members);
    } while (std::next_permutation(members.begin(), members.end()));
    return out;
}

// ---------------------------------------------------------------------------
// In-memory model builders.

// A PI-APM with one root level of single-action activities and the given
// activity-level precedence. Action instance ids equal "<activity>.x".
inline apm::AssemblyProcessModel make_flat_apm(
    const std::vector<std::string>& activities,
    const std::vector<std::pair<std::string, std::string>>& edges,
    const std::map<std::string, std::string>& action_of) {
    apm::AssemblyProcessModel m;
    m.id = "mem:flat";
    m.stage = apm::Stage::PlatformIndependent;
    m.product_ref = "mem:psm";
    m.catalog_ref = "mem:catalog";
    m.root.id = "proc-root";
    m.root.dcl = 0;
    m.root.kind = apm::ProcessKind::PrimitiveChilds;
    for (const auto& a : activities) {
        apm::PrimitiveAssemblyActivity act;
        act.id = a;
        act.realizes_connector = "C-" + a;
        apm::Operation op;
        op.id = a + ".op";
        op.kind = apm::OperationKind::Assemble;
        op.actions.push_back({a + ".x", action_of.count(a) ? action_of.at(a) : "insert", {}});
        act.operations.push_back(std::move(op));
        m.root.activities.push_back(std::move(act));
    }
    for (const auto& [b, a] : edges) m.root.precedence.push_back({b, a});
    return m;
}

// A platform of n leaf stations under one cell, every station holding the
// given skills; stations are fully routed with the given transit time.
inline aspm::PlatformModel make_platform(
    const std::vector<std::pair<std::string, std::map<std::string, Duration>>>& stations,
    Duration transit = Duration{}) {
    aspm::PlatformModel m;
    m.id = "mem:platform";
    aspm::AssemblySubSystem cell;
    cell.id = "cell";
    for (const auto& [name, skills] : stations) {
        aspm::AssemblySubSystem st;
        st.id = "st-" + name;
        st.ports = {{"in", aspm::PortDirection::Input}, {"out", aspm::PortDirection::Output}};
        aspm::Assembler a;
        a.id = name;
        a.kind = aspm::AssemblerKind::Machine;
        for (const auto& [skill, d] : skills) {
            a.skills.insert(skill);
            m.duration_table.entries[{skill, name}] = d;
        }
        st.assembler = std::move(a);
        cell.children.push_back(std::move(st));
    }
    for (const auto& [a, sa] : stations)
        for (const auto& [b, sb] : stations) {
            if (a == b) continue;
            aspm::PlatformConnector c;
            c.id = "conv-" + a + "-" + b;
            c.kind = aspm::ConnectorKind::Active;
            c.from = {"st-" + a, "out"};
            c.to = {"st-" + b, "in"};
            c.transit_time = transit;
            m.platform_connectors.push_back(std::move(c));
        }
    m.subsystems.push_back(std::move(cell));
    return m;
}

// Catalog whose action ids equal their skills, no parameters.
inline apm::ActionCatalog make_catalog(const std::vector<std::string>& actions) {
    apm::ActionCatalog c;
    c.id = "mem:catalog";
    for (const auto& a : actions) c.entries.push_back({a, a, {}});
    return c;
}

// ---------------------------------------------------------------------------
// Schedule legality: precedence, per-assembler non-overlap, skill coverage,
// duration consistency. Checks straight from the Schedule invariants.

inline bool schedule_legal(const lower::Schedule& s, const apm::AssemblyProcessModel& m,
                           const aspm::PlatformModel& platform, const apm::ActionCatalog& catalog,
                           std::string* why = nullptr) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    auto graph = apm::flatten_to_action_graph(m);
    std::map<std::string, const lower::ScheduledAction*> by_action;
    for (const auto& e : s.entries) {
        if (by_action.count(e.action_instance_id))
            return fail("action scheduled twice: " + e.action_instance_id);
        by_action[e.action_instance_id] = &e;
    }
    if (by_action.size() != graph.nodes.size()) return fail("schedule does not cover all actions");

    std::map<std::string, const aspm::Assembler*> assemblers;
    for (const aspm::Assembler* a : aspm::assemblers(platform)) assemblers[a->id] = a;

    for (const auto& n : graph.nodes) {
        auto it = by_action.find(n.id);
        if (it == by_action.end()) return fail("missing action: " + n.id);
        const auto& e = *it->second;
        const apm::ActionEntry* entry = catalog.find(n.action);
        if (!entry) return fail("unknown action " + n.action);
        auto ait = assemblers.find(e.assembler_id);
        if (ait == assemblers.end()) return fail("unknown assembler " + e.assembler_id);
        if (!ait->second->skills.count(entry->skill))
            return fail(e.assembler_id + " lacks skill " + entry->skill);
        auto d = platform.duration_table.lookup(entry->skill, e.assembler_id);
        if (!d || e.finish - e.start != *d)
            return fail("duration mismatch for " + n.id);
    }
    for (const auto& e : graph.edges) {
        if (by_action.at(e.from)->finish > by_action.at(e.to)->start)
            return fail("precedence violated: " + e.from + " -> " + e.to);
    }
    std::map<std::string, std::vector<const lower::ScheduledAction*>> per_asm;
    for (const auto& e : s.entries) per_asm[e.assembler_id].push_back(&e);
    for (auto& [id, es] : per_asm) {
        std::sort(es.begin(), es.end(),
                  [](const auto* a, const auto* b) { return a->start < b->start; });
        for (std::size_t i = 1; i < es.size(); ++i)
            if (es[i - 1]->finish > es[i]->start) return fail("overlap on " + id);
    }
    if (s.makespan != lower::makespan_of(s)) return fail("stored makespan wrong");
    return true;
}

// ---------------------------------------------------------------------------
// Independent brute-force scheduler: exhaustive over dispatch orders and
// assignments, earliest-start timing computed from scratch. No pruning.

inline Duration brute_force_makespan(const apm::AssemblyProcessModel& m,
                                     const aspm::PlatformModel& platform,
                                     const apm::ActionCatalog& catalog) {
    auto graph = apm::flatten_to_action_graph(m);
    std::size_t n = graph.nodes.size();
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < n; ++i) pos[graph.nodes[i].id] = i;
    std::vector<std::vector<std::pair<std::size_t, bool>>> preds(n);
    for (const auto& e : graph.edges) preds[pos[e.to]].push_back({pos[e.from], e.intra_operation});

    auto machines = aspm::assemblers(platform);
    auto subs = aspm::assembler_subsystems(platform);
    lower::Router router(platform);
    std::vector<std::string> skills(n);
    for (std::size_t i = 0; i < n; ++i) skills[i] = catalog.find(graph.nodes[i].action)->skill;

    Duration best = Duration::from_micro(INT64_MAX);
    std::vector<bool> placed(n, false);
    std::vector<std::size_t> mach(n);
    std::vector<Duration> fin(n);
    std::map<std::string, Duration> free;

    auto rec = [&](auto&& self, std::size_t count, Duration makespan) -> void {
        if (count == n) {
            best = std::min(best, makespan);
            return;
        }
        for (std::size_t t = 0; t < n; ++t) {
            if (placed[t]) continue;
            bool ready = true;
            for (const auto& [u, intra] : preds[t])
                if (!placed[u]) ready = false;
            if (!ready) continue;
            for (std::size_t mi = 0; mi < machines.size(); ++mi) {
                auto d = platform.duration_table.lookup(skills[t], machines[mi]->id);
                if (!d || !machines[mi]->skills.count(skills[t])) continue;
                Duration start = free[machines[mi]->id];
                bool routable = true;
                for (const auto& [u, intra] : preds[t]) {
                    Duration ready_at = fin[u];
                    if (intra && mach[u] != mi) {
                        auto r = router.route(subs.at(machines[mach[u]]->id),
                                              subs.at(machines[mi]->id));
                        if (!r) {
                            routable = false;
                            break;
                        }
                        ready_at = ready_at + r->transit;
                    }
                    start = std::max(start, ready_at);
                }
                if (!routable) continue;
                Duration end = start + *d;
                auto save_free = free[machines[mi]->id];
                placed[t] = true;
                mach[t] = mi;
                fin[t] = end;
                free[machines[mi]->id] = end;
                self(self, count + 1, std::max(makespan, end));
                placed[t] = false;
                free[machines[mi]->id] = save_free;
            }
        }
    };
    rec(rec, 0, Duration{});
    return best;
}

// ---------------------------------------------------------------------------
// Random instance generation.

inline std::vector<std::pair<std::string, std::string>> random_dag(
    const std::vector<std::string>& nodes, double edge_prob, std::mt19937& rng) {
    std::bernoulli_distribution flip(edge_prob);
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = i + 1; j < nodes.size(); ++j)
            if (flip(rng)) edges.push_back({nodes[i], nodes[j]});
    return edges;
}

struct RandomInstance {
    apm::AssemblyProcessModel apm;
    aspm::PlatformModel platform;
    apm::ActionCatalog catalog;
};

// Feasible scheduling instance: every action's skill is held by at least one
// station; stations are fully routed with zero transit.
inline RandomInstance random_instance(std::size_t n_actions, std::size_t n_machines,
                                      std::mt19937& rng) {
    std::vector<std::string> skills = {"sa", "sb", "sc"};
    std::uniform_int_distribution<int> skill_pick(0, static_cast<int>(skills.size()) - 1);
    std::uniform_int_distribution<int> dur_pick(1, 5);

    std::vector<std::string> acts;
    for (std::size_t i = 0; i < n_actions; ++i) acts.push_back("a" + std::to_string(i));
    auto edges = random_dag(acts, 0.3, rng);

    std::map<std::string, std::string> action_of;
    std::set<std::string> used_skills;
    for (const auto& a : acts) {
        std::string s = skills[skill_pick(rng)];
        action_of[a] = s;
        used_skills.insert(s);
    }

    std::vector<std::pair<std::string, std::map<std::string, Duration>>> stations;
    for (std::size_t i = 0; i < n_machines; ++i) {
        std::map<std::string, Duration> held;
        for (const auto& s : skills)
            if (std::bernoulli_distribution(0.7)(rng))
                held[s] = Duration::from_units(dur_pick(rng));
        if (held.empty()) held[skills[0]] = Duration::from_units(dur_pick(rng));
        stations.push_back({"m" + std::to_string(i), std::move(held)});
    }
    // guarantee coverage of every used skill
    for (const auto& s : used_skills) {
        bool covered = false;
        for (const auto& [id, held] : stations)
            if (held.count(s)) covered = true;
        if (!covered) stations[0].second[s] = Duration::from_units(dur_pick(rng));
    }

    RandomInstance inst{make_flat_apm(acts, edges, action_of), make_platform(stations),
                        make_catalog(skills)};
    return inst;
}

}  // namespace has::test

#endif
