#ifndef HAS_SIM_HPP
#define HAS_SIM_HPP

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "has/apm.hpp"
#include "has/aspm.hpp"
#include "has/lower.hpp"

namespace has::sim {

struct SimConfig {
    std::int64_t quantity = 1;
    Duration inter_unit_release;  // 0 = release every unit immediately
};

struct SimReport {
    Duration total_makespan;
    Duration per_unit_makespan;
    std::int64_t quantity = 1;
    std::map<std::string, Duration> busy;             // assembler -> busy time
    std::map<std::string, std::int64_t> buffer_peak;  // passive connector -> peak occupancy
    std::map<std::string, Duration> blocked;          // passive connector -> blocking time added
    bool capacity_exceeded = false;

    double utilization(const std::string& assembler) const {
        auto it = busy.find(assembler);
        if (it == busy.end() || total_makespan.is_zero()) return 0.0;
        return static_cast<double>(it->second.micro()) /
               static_cast<double>(total_makespan.micro());
    }

    // Fixed six-decimal rendering keeps report bytes deterministic.
    std::string utilization_str(const std::string& assembler) const {
        auto it = busy.find(assembler);
        std::int64_t num = it == busy.end() ? 0 : it->second.micro();
        std::int64_t den = total_makespan.micro();
        std::int64_t scaled = den == 0 ? 0 : (num * 1000000 + den / 2) / den;
        std::ostringstream ss;
        ss << scaled / 1000000 << "." << std::setw(6) << std::setfill('0') << scaled % 1000000;
        return ss.str();
    }
};

// ---------------------------------------------------------------------------

namespace detail {

struct BufferLedger {
    struct Interval {
        Duration arrival;
        Duration departure;
    };
    std::map<std::string, std::vector<Interval>> intervals;

    std::int64_t occupancy_at(const std::string& conn, Duration t) const {
        auto it = intervals.find(conn);
        if (it == intervals.end()) return 0;
        std::int64_t n = 0;
        for (const auto& iv : it->second)
            if (iv.arrival <= t && t < iv.departure) ++n;
        return n;
    }

    // Earliest time >= t when the connector has a free slot.
    Duration admit_time(const std::string& conn, Duration t, std::int64_t capacity) const {
        for (;;) {
            if (occupancy_at(conn, t) < capacity) return t;
            Duration next = t;
            bool found = false;
            auto it = intervals.find(conn);
            for (const auto& iv : it->second) {
                if (iv.arrival <= t && t < iv.departure && (!found || iv.departure < next)) {
                    next = iv.departure;
                    found = true;
                }
            }
            if (!found) return t;
            t = next;
        }
    }

    std::int64_t peak(const std::string& conn) const {
        auto it = intervals.find(conn);
        if (it == intervals.end()) return 0;
        std::int64_t best = 0;
        for (const auto& iv : it->second)
            best = std::max(best, occupancy_at(conn, iv.arrival));
        return best;
    }
};

}  // namespace detail

// Event-driven replay of the embedded schedule. The unit-1 schedule acts as
// the dispatch template: each assembler works through its entries in schedule
// order, unit after unit, with per-unit precedence respected.
inline SimReport simulate(const apm::AssemblyProcessModel& ps_apm,
                          const aspm::PlatformModel& platform, const SimConfig& config) {
    if (ps_apm.stage != apm::Stage::PlatformSpecific || !ps_apm.platform_binding)
        throw Error(ErrorCode::BindingMismatch, "model is not a platform-specific APM");
    if (ps_apm.platform_binding->platform_ref != platform.id)
        throw Error(ErrorCode::BindingMismatch,
                    "model is bound to platform '" + ps_apm.platform_binding->platform_ref +
                        "', not '" + platform.id + "'");
    if (config.quantity < 1)
        throw Error(ErrorCode::MalformedModel, "quantity must be at least 1");

    const lower::Schedule& sched = ps_apm.platform_binding->schedule;
    auto graph = apm::flatten_to_action_graph(ps_apm);

    std::map<std::string, std::size_t> idx;  // action id -> schedule entry index
    for (std::size_t i = 0; i < sched.entries.size(); ++i)
        idx[sched.entries[i].action_instance_id] = i;
    std::map<std::string, std::vector<std::pair<std::string, bool>>> preds;
    for (const auto& e : graph.edges) preds[e.to].push_back({e.from, e.intra_operation});

    lower::Router router(platform);
    auto subs = aspm::assembler_subsystems(platform);
    std::map<std::string, const aspm::PlatformConnector*> passive;
    for (const auto& c : platform.platform_connectors)
        if (c.kind == aspm::ConnectorKind::Passive) passive[c.id] = &c;

    SimReport rep;
    rep.quantity = config.quantity;
    rep.per_unit_makespan = sched.makespan;

    detail::BufferLedger buffers;
    std::map<std::string, Duration> avail;  // assembler -> free time
    std::vector<std::map<std::string, Duration>> finish(config.quantity);

    for (std::int64_t u = 0; u < config.quantity; ++u) {
        Duration release = config.inter_unit_release.scaled(u, 1);
        for (const auto& e : sched.entries) {
            Duration start = std::max(avail[e.assembler_id], release);
            std::vector<std::pair<std::string, Duration>> staged;  // (connector, arrival)
            for (const auto& [pid, intra] : preds[e.action_instance_id]) {
                auto pit = idx.find(pid);
                if (pit == idx.end())
                    throw Error(ErrorCode::BindingMismatch,
                                "schedule does not cover action '" + pid + "'");
                const auto& pe = sched.entries[pit->second];
                Duration ready = finish[u].at(pid);
                if (intra && pe.assembler_id != e.assembler_id) {
                    auto route = router.route(subs.at(pe.assembler_id), subs.at(e.assembler_id));
                    if (!route)
                        throw Error(ErrorCode::NoRoute,
                                    "no route for handoff into '" + e.action_instance_id + "'");
                    Duration arrival = ready;
                    for (const auto& cid : route->connector_ids) {
                        auto bit = passive.find(cid);
                        if (bit == passive.end()) continue;
                        if (bit->second->capacity) {
                            Duration admitted =
                                buffers.admit_time(cid, arrival, *bit->second->capacity);
                            if (admitted > arrival) {
                                rep.capacity_exceeded = true;
                                rep.blocked[cid] = rep.blocked[cid] + (admitted - arrival);
                                arrival = admitted;
                            }
                        }
                        staged.push_back({cid, arrival});
                    }
                    ready = arrival + route->transit;
                }
                start = std::max(start, ready);
            }
            Duration dur = e.finish - e.start;
            Duration fin = start + dur;
            finish[u][e.action_instance_id] = fin;
            avail[e.assembler_id] = fin;
            rep.busy[e.assembler_id] = rep.busy[e.assembler_id] + dur;
            rep.total_makespan = std::max(rep.total_makespan, fin);
            for (const auto& [cid, arrival] : staged)
                buffers.intervals[cid].push_back({arrival, start});
        }
    }
    for (const auto& [cid, c] : passive) rep.buffer_peak[cid] = buffers.peak(cid);
    return rep;
}

// ---------------------------------------------------------------------------

struct RankedScenario {
    std::string label;
    const SimReport* report;
};

inline std::vector<RankedScenario> compare_scenarios(
    const std::vector<std::pair<std::string, SimReport>>& reports) {
    if (reports.empty())
        throw Error(ErrorCode::MalformedModel, "at least one report is required");
    std::vector<RankedScenario> out;
    for (const auto& [label, r] : reports) out.push_back({label, &r});
    auto mean_util = [](const SimReport& r) {
        if (r.busy.empty()) return 0.0;
        double sum = 0;
        for (const auto& [id, b] : r.busy) sum += r.utilization(id);
        return sum / static_cast<double>(r.busy.size());
    };
    std::stable_sort(out.begin(), out.end(), [&](const RankedScenario& a, const RankedScenario& b) {
        if (a.report->total_makespan != b.report->total_makespan)
            return a.report->total_makespan < b.report->total_makespan;
        double ua = mean_util(*a.report), ub = mean_util(*b.report);
        if (ua != ub) return ua > ub;
        return a.label < b.label;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Report serialization (kind="sim-report")

inline io::json report_to_json(const SimReport& r) {
    io::json j;
    j["kind"] = "sim-report";
    j["quantity"] = r.quantity;
    j["total_makespan"] = r.total_makespan.str();
    j["per_unit_makespan"] = r.per_unit_makespan.str();
    io::json util = io::json::object();
    for (const auto& [id, b] : r.busy) {
        util[id] = {{"busy", b.str()}, {"utilization", r.utilization_str(id)}};
    }
    j["utilization"] = util;
    io::json peaks = io::json::object();
    for (const auto& [cid, n] : r.buffer_peak) peaks[cid] = n;
    j["passive_buffer_peak"] = peaks;
    if (r.capacity_exceeded) {
        io::json blocked = io::json::object();
        for (const auto& [cid, d] : r.blocked) blocked[cid] = d.str();
        j["capacity_exceeded"] = true;
        j["blocked_time"] = blocked;
    }
    return j;
}

inline std::string report_table(const SimReport& r) {
    std::ostringstream ss;
    ss << "total makespan    " << r.total_makespan.str() << "\n";
    ss << "per-unit makespan " << r.per_unit_makespan.str() << "\n";
    ss << "quantity          " << r.quantity << "\n";
    for (const auto& [id, b] : r.busy)
        ss << "assembler " << std::left << std::setw(16) << id << " busy " << std::setw(10)
           << b.str() << " utilization " << r.utilization_str(id) << "\n";
    for (const auto& [cid, n] : r.buffer_peak)
        ss << "buffer    " << std::left << std::setw(16) << cid << " peak " << n << "\n";
    return ss.str();
}

}  // namespace has::sim

#endif
