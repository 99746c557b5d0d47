#ifndef HAS_APM_HPP
#define HAS_APM_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "has/catalog.hpp"
#include "has/json_io.hpp"
#include "has/psm.hpp"
#include "has/schedule.hpp"
#include "has/validation.hpp"

namespace has::apm {

enum class Stage { PlatformIndependent, PlatformSpecific };
enum class ProcessKind { PrimitiveChilds, CompositeChild };
enum class OperationKind { Assemble, Move, Handle, Feed, Inspect, Other };

struct PrecedenceConstraint {
    std::string before;
    std::string after;
};

struct ActionInstance {
    std::string id;
    std::string action;  // catalog entry id
    std::map<std::string, std::string> bindings;
};

struct Operation {
    std::string id;
    OperationKind kind = OperationKind::Other;
    std::vector<ActionInstance> actions;
    std::vector<PrecedenceConstraint> precedence;  // over actions
};

// Either a nest of sub-activities or a leaf holding operations, never both.
struct PrimitiveAssemblyActivity {
    std::string id;
    std::string realizes_connector;
    std::vector<PrimitiveAssemblyActivity> sub_activities;
    std::vector<Operation> operations;
    std::vector<PrecedenceConstraint> precedence;  // over sub-activities or operations
};

struct CompositionLevelAssemblyProcess {
    std::string id;
    int dcl = 0;
    ProcessKind kind = ProcessKind::PrimitiveChilds;
    std::vector<CompositionLevelAssemblyProcess> child_processes;
    std::vector<PrimitiveAssemblyActivity> activities;
    std::vector<PrecedenceConstraint> precedence;  // over child processes and activities
};

struct PlatformBinding {
    std::string platform_ref;
    lower::Schedule schedule;
};

struct AssemblyProcessModel {
    std::string id;
    Stage stage = Stage::PlatformIndependent;
    std::string product_ref;
    std::string catalog_ref;
    CompositionLevelAssemblyProcess root;
    std::optional<PlatformBinding> platform_binding;
};

// ---------------------------------------------------------------------------
// Serialization (kind="apm-pi" / "apm-ps")

namespace detail {

inline const char* op_kind_name(OperationKind k) {
    switch (k) {
        case OperationKind::Assemble: return "assemble";
        case OperationKind::Move: return "move";
        case OperationKind::Handle: return "handle";
        case OperationKind::Feed: return "feed";
        case OperationKind::Inspect: return "inspect";
        case OperationKind::Other: return "other";
    }
    return "other";
}

inline OperationKind parse_op_kind(const std::string& s, const std::string& ctx) {
    if (s == "assemble") return OperationKind::Assemble;
    if (s == "move") return OperationKind::Move;
    if (s == "handle") return OperationKind::Handle;
    if (s == "feed") return OperationKind::Feed;
    if (s == "inspect") return OperationKind::Inspect;
    if (s == "other") return OperationKind::Other;
    throw Error(ErrorCode::MalformedModel, ctx + ": unknown operation kind '" + s + "'");
}

inline std::vector<PrecedenceConstraint> parse_precedence(const io::json& j,
                                                          const std::string& ctx) {
    std::vector<PrecedenceConstraint> out;
    if (!j.contains("precedence")) return out;
    for (const auto& ej : io::array_field(j, "precedence", ctx)) {
        PrecedenceConstraint p;
        p.before = io::str_field(ej, "before", ctx);
        p.after = io::str_field(ej, "after", ctx);
        out.push_back(std::move(p));
    }
    return out;
}

inline io::json precedence_to_json(const std::vector<PrecedenceConstraint>& ps) {
    io::json out = io::json::array();
    for (const auto& p : ps) out.push_back({{"before", p.before}, {"after", p.after}});
    return out;
}

inline Operation parse_operation(const io::json& j) {
    Operation op;
    op.id = io::str_field(j, "id", "operation");
    op.kind = parse_op_kind(io::str_field(j, "op_kind", op.id), op.id);
    for (const auto& aj : io::array_field(j, "actions", op.id)) {
        ActionInstance a;
        a.id = io::str_field(aj, "id", "action instance");
        a.action = io::str_field(aj, "action", a.id);
        if (aj.contains("params")) {
            const io::json& pj = aj["params"];
            if (!pj.is_object())
                throw Error(ErrorCode::MalformedModel, a.id + ": params must be an object");
            for (const auto& [k, v] : pj.items()) {
                if (!v.is_string())
                    throw Error(ErrorCode::MalformedModel, a.id + ": param values must be strings");
                a.bindings[k] = v.get<std::string>();
            }
        }
        op.actions.push_back(std::move(a));
    }
    op.precedence = parse_precedence(j, op.id);
    return op;
}

inline io::json operation_to_json(const Operation& op) {
    io::json j;
    j["id"] = op.id;
    j["op_kind"] = op_kind_name(op.kind);
    io::json as = io::json::array();
    for (const auto& a : op.actions) {
        io::json aj;
        aj["id"] = a.id;
        aj["action"] = a.action;
        if (!a.bindings.empty()) {
            io::json pj = io::json::object();
            for (const auto& [k, v] : a.bindings) pj[k] = v;
            aj["params"] = pj;
        }
        as.push_back(aj);
    }
    j["actions"] = as;
    if (!op.precedence.empty()) j["precedence"] = precedence_to_json(op.precedence);
    return j;
}

inline PrimitiveAssemblyActivity parse_activity(const io::json& j) {
    PrimitiveAssemblyActivity a;
    a.id = io::str_field(j, "id", "activity");
    a.realizes_connector = io::str_or(j, "connector", "");
    if (j.contains("sub_activities"))
        for (const auto& sj : io::array_field(j, "sub_activities", a.id))
            a.sub_activities.push_back(parse_activity(sj));
    if (j.contains("operations"))
        for (const auto& oj : io::array_field(j, "operations", a.id))
            a.operations.push_back(parse_operation(oj));
    a.precedence = parse_precedence(j, a.id);
    return a;
}

inline io::json activity_to_json(const PrimitiveAssemblyActivity& a) {
    io::json j;
    j["id"] = a.id;
    if (!a.realizes_connector.empty()) j["connector"] = a.realizes_connector;
    if (!a.sub_activities.empty()) {
        io::json ss = io::json::array();
        for (const auto& s : a.sub_activities) ss.push_back(activity_to_json(s));
        j["sub_activities"] = ss;
    }
    if (!a.operations.empty()) {
        io::json os = io::json::array();
        for (const auto& o : a.operations) os.push_back(operation_to_json(o));
        j["operations"] = os;
    }
    if (!a.precedence.empty()) j["precedence"] = precedence_to_json(a.precedence);
    return j;
}

inline CompositionLevelAssemblyProcess parse_process(const io::json& j) {
    CompositionLevelAssemblyProcess p;
    p.id = io::str_field(j, "id", "process");
    const io::json& dj = io::field(j, "dcl", p.id);
    if (!dj.is_number_integer() || dj.get<int>() < 0)
        throw Error(ErrorCode::MalformedModel, p.id + ": dcl must be a non-negative integer");
    p.dcl = dj.get<int>();
    std::string k = io::str_field(j, "process_kind", p.id);
    if (k == "primitive-childs")
        p.kind = ProcessKind::PrimitiveChilds;
    else if (k == "composite-child")
        p.kind = ProcessKind::CompositeChild;
    else
        throw Error(ErrorCode::MalformedModel, p.id + ": unknown process_kind '" + k + "'");
    if (j.contains("child_processes"))
        for (const auto& cj : io::array_field(j, "child_processes", p.id))
            p.child_processes.push_back(parse_process(cj));
    if (j.contains("activities"))
        for (const auto& aj : io::array_field(j, "activities", p.id))
            p.activities.push_back(parse_activity(aj));
    p.precedence = parse_precedence(j, p.id);
    return p;
}

inline io::json process_to_json(const CompositionLevelAssemblyProcess& p) {
    io::json j;
    j["id"] = p.id;
    j["dcl"] = p.dcl;
    j["process_kind"] =
        p.kind == ProcessKind::PrimitiveChilds ? "primitive-childs" : "composite-child";
    if (!p.child_processes.empty()) {
        io::json cs = io::json::array();
        for (const auto& c : p.child_processes) cs.push_back(process_to_json(c));
        j["child_processes"] = cs;
    }
    if (!p.activities.empty()) {
        io::json as = io::json::array();
        for (const auto& a : p.activities) as.push_back(activity_to_json(a));
        j["activities"] = as;
    }
    if (!p.precedence.empty()) j["precedence"] = precedence_to_json(p.precedence);
    return j;
}

}  // namespace detail

inline AssemblyProcessModel parse(const io::json& j) {
    std::string kind = io::str_or(j, "kind", "");
    AssemblyProcessModel m;
    if (kind == "apm-pi")
        m.stage = Stage::PlatformIndependent;
    else if (kind == "apm-ps")
        m.stage = Stage::PlatformSpecific;
    else
        throw Error(ErrorCode::MalformedModel, "apm: expected kind apm-pi or apm-ps");
    m.id = io::str_field(j, "id", "apm");
    m.product_ref = io::str_field(j, "product_ref", "apm");
    m.catalog_ref = io::str_field(j, "catalog_ref", "apm");
    m.root = detail::parse_process(io::field(j, "root", "apm"));
    if (j.contains("platform_binding")) {
        const io::json& bj = j["platform_binding"];
        PlatformBinding b;
        b.platform_ref = io::str_field(bj, "platform_ref", "platform_binding");
        b.schedule = lower::parse_schedule(io::field(bj, "schedule", "platform_binding"));
        m.platform_binding = std::move(b);
    }
    return m;
}

inline io::json to_json(const AssemblyProcessModel& m) {
    io::json j;
    j["kind"] = m.stage == Stage::PlatformIndependent ? "apm-pi" : "apm-ps";
    j["id"] = m.id;
    j["product_ref"] = m.product_ref;
    j["catalog_ref"] = m.catalog_ref;
    j["root"] = detail::process_to_json(m.root);
    if (m.platform_binding) {
        io::json bj;
        bj["platform_ref"] = m.platform_binding->platform_ref;
        bj["schedule"] = lower::schedule_to_json(m.platform_binding->schedule);
        j["platform_binding"] = bj;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Flattened action graph

struct FlatAction {
    std::string id;
    std::string action;        // catalog entry id
    std::string operation_id;  // owning operation
};

struct FlatEdge {
    std::string from;
    std::string to;
    bool intra_operation = false;  // edge stated inside a single operation
};

struct ActionGraph {
    std::vector<FlatAction> nodes;  // in document order
    std::vector<FlatEdge> edges;

    std::map<std::string, std::vector<std::string>> successors() const {
        std::map<std::string, std::vector<std::string>> out;
        for (const auto& n : nodes) out[n.id];
        for (const auto& e : edges) out[e.from].push_back(e.to);
        return out;
    }
    std::map<std::string, std::vector<std::string>> predecessors() const {
        std::map<std::string, std::vector<std::string>> out;
        for (const auto& n : nodes) out[n.id];
        for (const auto& e : edges) out[e.to].push_back(e.from);
        return out;
    }
};

namespace detail {

// Kahn topological sort over string member ids; lexicographic among ready
// members so the order is canonical. Returns nullopt on a cycle.
inline std::optional<std::vector<std::string>> topo_order(
    const std::vector<std::string>& members, const std::vector<PrecedenceConstraint>& edges) {
    std::map<std::string, int> indeg;
    std::map<std::string, std::vector<std::string>> succ;
    for (const auto& m : members) indeg[m] = 0;
    for (const auto& e : edges) {
        if (!indeg.count(e.before) || !indeg.count(e.after)) continue;
        succ[e.before].push_back(e.after);
        indeg[e.after]++;
    }
    std::set<std::string> ready;
    for (const auto& [m, d] : indeg)
        if (d == 0) ready.insert(m);
    std::vector<std::string> order;
    while (!ready.empty()) {
        std::string m = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(m);
        for (const auto& s : succ[m])
            if (--indeg[s] == 0) ready.insert(s);
    }
    if (order.size() != members.size()) return std::nullopt;
    return order;
}

struct SubGraph {
    std::vector<FlatAction> nodes;
    std::vector<FlatEdge> edges;
    std::vector<std::string> sources;  // no incoming edge within this subgraph
    std::vector<std::string> sinks;    // no outgoing edge within this subgraph
};

inline void finish_boundaries(SubGraph& g) {
    std::set<std::string> has_in, has_out;
    for (const auto& e : g.edges) {
        has_in.insert(e.to);
        has_out.insert(e.from);
    }
    for (const auto& n : g.nodes) {
        if (!has_in.count(n.id)) g.sources.push_back(n.id);
        if (!has_out.count(n.id)) g.sinks.push_back(n.id);
    }
}

// Compose member subgraphs under the member-level precedence: every sink of
// the 'before' member fans out to every source of the 'after' member.
inline SubGraph compose(std::map<std::string, SubGraph> members,
                        const std::vector<std::string>& member_order,
                        const std::vector<PrecedenceConstraint>& precedence) {
    SubGraph out;
    for (const auto& id : member_order) {
        auto& m = members.at(id);
        out.nodes.insert(out.nodes.end(), m.nodes.begin(), m.nodes.end());
        out.edges.insert(out.edges.end(), m.edges.begin(), m.edges.end());
    }
    for (const auto& p : precedence) {
        auto bi = members.find(p.before);
        auto ai = members.find(p.after);
        if (bi == members.end() || ai == members.end()) continue;
        for (const auto& s : bi->second.sinks)
            for (const auto& t : ai->second.sources)
                out.edges.push_back({s, t, false});
    }
    finish_boundaries(out);
    return out;
}

inline SubGraph flatten_operation(const Operation& op) {
    SubGraph g;
    for (const auto& a : op.actions) g.nodes.push_back({a.id, a.action, op.id});
    std::set<std::string> ids;
    for (const auto& a : op.actions) ids.insert(a.id);
    for (const auto& p : op.precedence)
        if (ids.count(p.before) && ids.count(p.after))
            g.edges.push_back({p.before, p.after, true});
    finish_boundaries(g);
    return g;
}

inline SubGraph flatten_activity(const PrimitiveAssemblyActivity& a) {
    std::map<std::string, SubGraph> members;
    std::vector<std::string> order;
    if (!a.operations.empty()) {
        for (const auto& op : a.operations) {
            members[op.id] = flatten_operation(op);
            order.push_back(op.id);
        }
    } else {
        for (const auto& s : a.sub_activities) {
            members[s.id] = flatten_activity(s);
            order.push_back(s.id);
        }
    }
    return compose(std::move(members), order, a.precedence);
}

inline SubGraph flatten_process(const CompositionLevelAssemblyProcess& p) {
    std::map<std::string, SubGraph> members;
    std::vector<std::string> order;
    for (const auto& c : p.child_processes) {
        members[c.id] = flatten_process(c);
        order.push_back(c.id);
    }
    for (const auto& a : p.activities) {
        members[a.id] = flatten_activity(a);
        order.push_back(a.id);
    }
    return compose(std::move(members), order, p.precedence);
}

}  // namespace detail

inline ActionGraph flatten_to_action_graph(const AssemblyProcessModel& m) {
    auto g = detail::flatten_process(m.root);
    ActionGraph out;
    out.nodes = std::move(g.nodes);
    out.edges = std::move(g.edges);
    return out;
}

inline std::set<std::string> required_actions(const AssemblyProcessModel& m) {
    std::set<std::string> out;
    for (const auto& n : flatten_to_action_graph(m).nodes) out.insert(n.action);
    return out;
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

struct ApmChecker {
    const psm::ProductStructuralModel& psm_model;
    const ActionCatalog& catalog;
    ValidationReport& r;
    std::set<std::string> connector_ids;
    std::set<std::string> instance_ids;

    void check_precedence(const std::string& owner, const std::vector<std::string>& members,
                          const std::vector<PrecedenceConstraint>& edges) {
        std::set<std::string> ms(members.begin(), members.end());
        for (const auto& e : edges) {
            if (e.before == e.after)
                r.error("PRECEDENCE_SELF", owner, "edge " + e.before + " -> itself");
            if (!ms.count(e.before))
                r.error("PRECEDENCE_UNKNOWN_MEMBER", owner, "'" + e.before + "' not a member");
            if (!ms.count(e.after))
                r.error("PRECEDENCE_UNKNOWN_MEMBER", owner, "'" + e.after + "' not a member");
        }
        if (!topo_order(members, edges))
            r.error("PRECEDENCE_CYCLE", owner, "precedence constraints form a cycle");
    }

    void check_operation(const Operation& op) {
        if (op.actions.empty()) {
            r.error("ACTIONS_EMPTY", op.id, "operation must contain at least one action");
            return;
        }
        std::vector<std::string> members;
        for (const auto& a : op.actions) {
            members.push_back(a.id);
            if (!instance_ids.insert(a.id).second)
                r.error("DUPLICATE_ACTION_INSTANCE", a.id,
                        "action instance id appears more than once");
            const ActionEntry* e = catalog.find(a.action);
            if (!e) {
                r.error("UNKNOWN_ACTION", a.id, "action '" + a.action + "' not in catalog");
                continue;
            }
            std::set<std::string> want(e->parameters.begin(), e->parameters.end());
            std::set<std::string> got;
            for (const auto& [k, v] : a.bindings) got.insert(k);
            if (want != got)
                r.error("PARAM_MISMATCH", a.id,
                        "bindings do not match the signature of '" + a.action + "'");
        }
        check_precedence(op.id, members, op.precedence);
    }

    void check_activity(const PrimitiveAssemblyActivity& a, bool top_level) {
        bool has_subs = !a.sub_activities.empty();
        bool has_ops = !a.operations.empty();
        if (has_subs == has_ops) {
            r.error("ACTIVITY_SHAPE", a.id,
                    "exactly one of sub_activities / operations must be non-empty");
            return;
        }
        if (top_level && !connector_ids.count(a.realizes_connector))
            r.error("DANGLING_CONNECTOR", a.id,
                    "connector '" + a.realizes_connector + "' not in the product model");
        std::vector<std::string> members;
        if (has_subs) {
            for (const auto& s : a.sub_activities) {
                members.push_back(s.id);
                check_activity(s, false);
            }
        } else {
            for (const auto& op : a.operations) {
                members.push_back(op.id);
                check_operation(op);
            }
        }
        check_precedence(a.id, members, a.precedence);
    }

    void check_process(const CompositionLevelAssemblyProcess& p, int expected_dcl) {
        if (p.dcl != expected_dcl)
            r.error("DCL_MISMATCH", p.id,
                    "expected dcl " + std::to_string(expected_dcl) + ", found " +
                        std::to_string(p.dcl));
        ProcessKind derived =
            p.child_processes.empty() ? ProcessKind::PrimitiveChilds : ProcessKind::CompositeChild;
        if (p.kind != derived)
            r.error("PROCESS_KIND", p.id, "process_kind disagrees with child_processes");
        std::vector<std::string> members;
        for (const auto& c : p.child_processes) {
            members.push_back(c.id);
            check_process(c, expected_dcl + 1);
        }
        for (const auto& a : p.activities) {
            members.push_back(a.id);
            check_activity(a, true);
        }
        check_precedence(p.id, members, p.precedence);
    }
};

}  // namespace detail

inline ValidationReport validate_apm(const AssemblyProcessModel& m,
                                     const psm::ProductStructuralModel& psm_model,
                                     const ActionCatalog& catalog) {
    ValidationReport r;
    bool bound = m.platform_binding.has_value();
    if ((m.stage == Stage::PlatformSpecific) != bound)
        r.error("STAGE_BINDING", m.id, "stage and platform_binding presence disagree");
    if (m.product_ref != psm_model.id)
        r.error("PRODUCT_REF_MISMATCH", m.id,
                "product_ref '" + m.product_ref + "' does not match PSM '" + psm_model.id + "'");

    detail::ApmChecker checker{psm_model, catalog, r, {}, {}};
    for (const auto& c : psm_model.connectors) checker.connector_ids.insert(c.id);
    checker.check_process(m.root, 0);

    // The flattened graph must stay acyclic even after cross-level induction.
    if (r.conformant()) {
        auto g = flatten_to_action_graph(m);
        std::vector<std::string> ids;
        std::vector<PrecedenceConstraint> edges;
        for (const auto& n : g.nodes) ids.push_back(n.id);
        for (const auto& e : g.edges) edges.push_back({e.from, e.to});
        if (!detail::topo_order(ids, edges))
            r.error("PRECEDENCE_CYCLE", m.id, "flattened action graph is cyclic");
    }
    return r;
}

}  // namespace has::apm

#endif
