#ifndef HAS_LOWER_HPP
#define HAS_LOWER_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "has/apm.hpp"
#include "has/aspm.hpp"
#include "has/catalog.hpp"
#include "has/schedule.hpp"

namespace has::lower {

enum class Strategy { ListHeuristic, Exact };

struct LoweringPolicy {
    Strategy strategy = Strategy::ListHeuristic;
};

inline constexpr std::size_t kExactMaxActions = 12;
inline constexpr std::size_t kExactMaxAssemblers = 3;

struct Feasibility {
    bool feasible = false;
    std::set<std::string> gap;  // actions whose realizing skill is missing
};

inline Feasibility check_feasibility(const apm::AssemblyProcessModel& m,
                                     const aspm::PlatformModel& platform,
                                     const apm::ActionCatalog& catalog) {
    Feasibility f;
    f.gap = aspm::capability_gap(apm::required_actions(m), platform, catalog);
    f.feasible = f.gap.empty();
    return f;
}

// ---------------------------------------------------------------------------
// Material routing between leaf subsystems.

struct Route {
    Duration transit;
    std::vector<std::string> connector_ids;  // in traversal order
};

class Router {
public:
    explicit Router(const aspm::PlatformModel& platform) {
        for (const auto& c : platform.platform_connectors) {
            Duration w = c.kind == aspm::ConnectorKind::Active ? c.transit_time : Duration{};
            edges_[c.from.subsystem].push_back({c.to.subsystem, w, c.id});
        }
    }

    // Cheapest-transit route, deterministic under ties (smaller connector id
    // chains win). A subsystem routes to itself with zero transit.
    std::optional<Route> route(const std::string& from, const std::string& to) const {
        if (from == to) return Route{};
        auto key = std::make_pair(from, to);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        // dist + the connector chain; chains double as the tie-break.
        std::map<std::string, std::pair<Duration, std::vector<std::string>>> best;
        best[from] = {Duration{}, {}};
        using Item = std::tuple<Duration, std::vector<std::string>, std::string>;
        auto cmp = [](const Item& a, const Item& b) { return a > b; };
        std::priority_queue<Item, std::vector<Item>, decltype(cmp)> pq(cmp);
        pq.push({Duration{}, {}, from});
        while (!pq.empty()) {
            auto [d, chain, node] = pq.top();
            pq.pop();
            auto bit = best.find(node);
            if (bit != best.end() && (d > bit->second.first ||
                                      (d == bit->second.first && chain > bit->second.second)))
                continue;
            auto eit = edges_.find(node);
            if (eit == edges_.end()) continue;
            for (const auto& e : eit->second) {
                Duration nd = d + e.weight;
                auto nchain = chain;
                nchain.push_back(e.connector);
                auto n = best.find(e.target);
                if (n == best.end() || nd < n->second.first ||
                    (nd == n->second.first && nchain < n->second.second)) {
                    best[e.target] = {nd, nchain};
                    pq.push({nd, nchain, e.target});
                }
            }
        }
        std::optional<Route> res;
        auto bit = best.find(to);
        if (bit != best.end()) res = Route{bit->second.first, bit->second.second};
        cache_[key] = res;
        return res;
    }

private:
    struct Edge {
        std::string target;
        Duration weight;
        std::string connector;
    };
    std::map<std::string, std::vector<Edge>> edges_;
    mutable std::map<std::pair<std::string, std::string>, std::optional<Route>> cache_;
};

// ---------------------------------------------------------------------------
// Scheduling problem extracted from the models.

namespace detail {

struct Task {
    std::string id;
    std::string skill;
    std::string operation_id;
    std::vector<std::pair<std::size_t, bool>> preds;  // (task index, intra-op edge)
    std::vector<std::size_t> succs;
};

struct Machine {
    std::string id;
    std::string subsystem;
};

struct Problem {
    std::vector<Task> tasks;        // topological order, ids unique
    std::vector<Machine> machines;  // sorted by id
    std::map<std::pair<std::string, std::string>, Duration> durations;  // (skill, machine)
    Router router;

    std::optional<Duration> duration(std::size_t task, std::size_t machine) const {
        auto it = durations.find({tasks[task].skill, machines[machine].id});
        if (it == durations.end()) return std::nullopt;
        return it->second;
    }

    // Handoff delay when an intra-operation predecessor ran elsewhere.
    Duration handoff(std::size_t pred_machine, std::size_t machine, bool intra_op,
                     const std::string& task_id) const {
        if (!intra_op || pred_machine == machine) return Duration{};
        auto r = router.route(machines[pred_machine].subsystem, machines[machine].subsystem);
        if (!r)
            throw Error(ErrorCode::NoRoute,
                        "no platform route to hand '" + task_id + "' from " +
                            machines[pred_machine].id + " to " + machines[machine].id);
        return r->transit;
    }
};

inline Problem build_problem(const apm::AssemblyProcessModel& m,
                             const aspm::PlatformModel& platform,
                             const apm::ActionCatalog& catalog) {
    auto graph = apm::flatten_to_action_graph(m);
    Problem prob{{}, {}, platform.duration_table.entries, Router(platform)};

    // Tasks are kept in a canonical topological order (lexicographic Kahn).
    std::vector<std::string> ids;
    std::vector<apm::PrecedenceConstraint> plain_edges;
    for (const auto& n : graph.nodes) ids.push_back(n.id);
    for (const auto& e : graph.edges) plain_edges.push_back({e.from, e.to});
    auto order = apm::detail::topo_order(ids, plain_edges);
    if (!order)
        throw Error(ErrorCode::ConstraintCycle, "flattened action graph is cyclic");

    std::map<std::string, const apm::FlatAction*> by_id;
    for (const auto& n : graph.nodes) by_id[n.id] = &n;
    std::map<std::string, std::size_t> pos;
    for (const auto& id : *order) {
        const apm::FlatAction& n = *by_id.at(id);
        const apm::ActionEntry* e = catalog.find(n.action);
        if (!e) throw Error(ErrorCode::UnknownAction, "action '" + n.action + "' not in catalog");
        pos[n.id] = prob.tasks.size();
        prob.tasks.push_back({n.id, e->skill, n.operation_id, {}, {}});
    }
    for (const auto& e : graph.edges) {
        std::size_t u = pos.at(e.from), v = pos.at(e.to);
        prob.tasks[v].preds.push_back({u, e.intra_operation});
        prob.tasks[u].succs.push_back(v);
    }

    auto subs = aspm::assembler_subsystems(platform);
    for (const aspm::Assembler* a : aspm::assemblers(platform))
        prob.machines.push_back({a->id, subs.at(a->id)});
    return prob;
}

// Machines able to perform the task (they hold the skill, so a duration
// entry exists), in id order.
inline std::vector<std::size_t> capable(const Problem& p, std::size_t task) {
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < p.machines.size(); ++m)
        if (p.duration(task, m)) out.push_back(m);
    return out;
}

struct PartialSchedule {
    std::vector<std::size_t> machine_of;
    std::vector<TimePoint> start, finish;
    std::vector<bool> placed;
    std::vector<TimePoint> free;
    Duration makespan;

    explicit PartialSchedule(const Problem& p)
        : machine_of(p.tasks.size()),
          start(p.tasks.size()),
          finish(p.tasks.size()),
          placed(p.tasks.size(), false),
          free(p.machines.size()) {}

    TimePoint earliest_start(const Problem& p, std::size_t task, std::size_t machine) const {
        TimePoint t = free[machine];
        for (const auto& [u, intra] : p.tasks[task].preds) {
            TimePoint ready =
                finish[u] + p.handoff(machine_of[u], machine, intra, p.tasks[task].id);
            t = std::max(t, ready);
        }
        return t;
    }

    void place(const Problem& p, std::size_t task, std::size_t machine) {
        TimePoint s = earliest_start(p, task, machine);
        start[task] = s;
        finish[task] = s + *p.duration(task, machine);
        machine_of[task] = machine;
        placed[task] = true;
        free[machine] = finish[task];
        makespan = std::max(makespan, finish[task]);
    }
};

inline Schedule to_schedule(const Problem& p, const PartialSchedule& ps) {
    Schedule s;
    for (std::size_t i = 0; i < p.tasks.size(); ++i)
        s.entries.push_back(
            {p.tasks[i].id, p.machines[ps.machine_of[i]].id, ps.start[i], ps.finish[i]});
    std::sort(s.entries.begin(), s.entries.end(), [](const auto& a, const auto& b) {
        return std::tie(a.start, a.assembler_id, a.action_instance_id) <
               std::tie(b.start, b.assembler_id, b.action_instance_id);
    });
    s.makespan = makespan_of(s);
    return s;
}

// List scheduling: among ready actions take the longest duration first (on
// its candidate machine); ties fall to the lexicographically smaller
// assembler id during machine choice and action id during action choice.
inline Schedule list_schedule(const Problem& p) {
    PartialSchedule ps(p);
    std::size_t remaining = p.tasks.size();
    while (remaining > 0) {
        std::optional<std::size_t> best_task, best_machine;
        Duration best_dur{};
        for (std::size_t t = 0; t < p.tasks.size(); ++t) {
            if (ps.placed[t]) continue;
            bool ready = std::all_of(p.tasks[t].preds.begin(), p.tasks[t].preds.end(),
                                     [&](const auto& pr) { return ps.placed[pr.first]; });
            if (!ready) continue;
            std::optional<std::size_t> cand;
            TimePoint cand_est;
            for (std::size_t m : capable(p, t)) {
                TimePoint est = ps.earliest_start(p, t, m);
                if (!cand || est < cand_est ||
                    (est == cand_est && p.machines[m].id < p.machines[*cand].id)) {
                    cand = m;
                    cand_est = est;
                }
            }
            if (!cand)
                throw Error(ErrorCode::Infeasible,
                            "no capable assembler for action '" + p.tasks[t].id + "'");
            Duration d = *p.duration(t, *cand);
            if (!best_task || d > best_dur ||
                (d == best_dur && p.tasks[t].id < p.tasks[*best_task].id)) {
                best_task = t;
                best_machine = cand;
                best_dur = d;
            }
        }
        ps.place(p, *best_task, *best_machine);
        --remaining;
    }
    return to_schedule(p, ps);
}

// Branch and bound over (ready action, machine) choices; every chosen action
// starts as early as its machine and predecessors allow, so the search space
// covers an optimal schedule for the makespan objective.
struct ExactSolver {
    const Problem& p;
    std::vector<Duration> tail;  // critical-path tail with min durations
    Duration best_makespan = Duration::from_micro(std::numeric_limits<std::int64_t>::max());
    std::optional<PartialSchedule> best;

    explicit ExactSolver(const Problem& prob) : p(prob), tail(prob.tasks.size()) {
        // tasks are in topological order; walk backwards
        for (std::size_t i = p.tasks.size(); i-- > 0;) {
            Duration dmin{};
            bool first = true;
            for (std::size_t m : capable(p, i)) {
                Duration d = *p.duration(i, m);
                if (first || d < dmin) dmin = d;
                first = false;
            }
            Duration t = dmin;
            for (std::size_t s : p.tasks[i].succs) t = std::max(t, dmin + tail[s]);
            tail[i] = t;
        }
    }

    Duration bound(const PartialSchedule& ps) const {
        Duration b = ps.makespan;
        for (std::size_t t = 0; t < p.tasks.size(); ++t) {
            if (ps.placed[t]) continue;
            TimePoint ready{};
            for (const auto& [u, intra] : p.tasks[t].preds)
                if (ps.placed[u]) ready = std::max(ready, ps.finish[u]);
            b = std::max(b, ready + tail[t]);
        }
        return b;
    }

    void dfs(PartialSchedule& ps, std::size_t placed_count) {
        if (placed_count == p.tasks.size()) {
            if (ps.makespan < best_makespan) {
                best_makespan = ps.makespan;
                best = ps;
            }
            return;
        }
        if (bound(ps) >= best_makespan) return;
        for (std::size_t t = 0; t < p.tasks.size(); ++t) {
            if (ps.placed[t]) continue;
            bool ready = std::all_of(p.tasks[t].preds.begin(), p.tasks[t].preds.end(),
                                     [&](const auto& pr) { return ps.placed[pr.first]; });
            if (!ready) continue;
            for (std::size_t m : capable(p, t)) {
                PartialSchedule next = ps;
                next.place(p, t, m);
                if (next.makespan >= best_makespan) continue;
                dfs(next, placed_count + 1);
            }
        }
    }
};

inline Schedule exact_schedule_impl(const Problem& p) {
    if (p.tasks.size() > kExactMaxActions || p.machines.size() > kExactMaxAssemblers)
        throw Error(ErrorCode::ExactLimit,
                    "exact scheduling caps at " + std::to_string(kExactMaxActions) +
                        " actions and " + std::to_string(kExactMaxAssemblers) + " assemblers");
    for (std::size_t t = 0; t < p.tasks.size(); ++t)
        if (capable(p, t).empty())
            throw Error(ErrorCode::Infeasible,
                        "no capable assembler for action '" + p.tasks[t].id + "'");
    ExactSolver solver(p);
    PartialSchedule ps(p);
    solver.dfs(ps, 0);
    if (!solver.best && !p.tasks.empty())
        throw Error(ErrorCode::Infeasible, "no feasible schedule found");
    return solver.best ? to_schedule(p, *solver.best) : Schedule{};
}

}  // namespace detail

inline Schedule exact_schedule(const apm::AssemblyProcessModel& m,
                               const aspm::PlatformModel& platform,
                               const apm::ActionCatalog& catalog) {
    return detail::exact_schedule_impl(detail::build_problem(m, platform, catalog));
}

inline apm::AssemblyProcessModel lower_apm(const apm::AssemblyProcessModel& m,
                                           const aspm::PlatformModel& platform,
                                           const apm::ActionCatalog& catalog,
                                           const LoweringPolicy& policy) {
    auto feas = check_feasibility(m, platform, catalog);
    if (!feas.feasible) {
        std::string gap;
        for (const auto& a : feas.gap) gap += (gap.empty() ? "" : ", ") + a;
        throw Error(ErrorCode::Infeasible, "platform lacks skills for: " + gap);
    }
    auto problem = detail::build_problem(m, platform, catalog);
    Schedule sched = policy.strategy == Strategy::Exact ? detail::exact_schedule_impl(problem)
                                                        : detail::list_schedule(problem);

    apm::AssemblyProcessModel out = m;
    out.id = m.id + "/ps";
    out.stage = apm::Stage::PlatformSpecific;
    out.platform_binding = apm::PlatformBinding{platform.id, std::move(sched)};
    return out;
}

inline Duration makespan(const Schedule& s) { return makespan_of(s); }

}  // namespace has::lower

#endif
