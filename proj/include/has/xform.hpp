#ifndef HAS_XFORM_HPP
#define HAS_XFORM_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "has/apm.hpp"
#include "has/catalog.hpp"
#include "has/json_io.hpp"
#include "has/psm.hpp"

namespace has::xform {

struct BomLine {
    std::string part;
    std::string parent;  // empty = root
    std::int64_t quantity = 1;
    std::string description;
};

struct BillOfMaterials {
    std::vector<BomLine> lines;
};

struct ConstraintEdge {
    std::string before;
    std::string after;
    std::string rationale;
};

struct ConstraintSet {
    std::vector<ConstraintEdge> edges;
};

struct SequenceEnumeration {
    std::vector<std::vector<std::string>> sequences;
    std::int64_t count = 0;
    bool truncated = false;
};

// ---------------------------------------------------------------------------
// File formats

inline BillOfMaterials parse_bom(const io::json& j) {
    io::expect_kind(j, "bom", "bom");
    BillOfMaterials b;
    for (const auto& lj : io::array_field(j, "lines", "bom")) {
        BomLine l;
        l.part = io::str_field(lj, "part", "bom line");
        l.parent = io::str_or(lj, "parent", "");
        if (l.parent == "Root") l.parent.clear();
        if (lj.contains("quantity")) {
            if (!lj["quantity"].is_number_integer() || lj["quantity"].get<std::int64_t>() < 1)
                throw Error(ErrorCode::MalformedModel,
                            "bom line '" + l.part + "': quantity must be a positive integer");
            l.quantity = lj["quantity"].get<std::int64_t>();
        }
        l.description = io::str_or(lj, "description", "");
        b.lines.push_back(std::move(l));
    }
    return b;
}

inline ConstraintSet parse_constraints(const io::json& j) {
    io::expect_kind(j, "constraints", "constraints");
    ConstraintSet cs;
    for (const auto& ej : io::array_field(j, "edges", "constraints")) {
        ConstraintEdge e;
        e.before = io::str_field(ej, "before", "constraint edge");
        e.after = io::str_field(ej, "after", "constraint edge");
        e.rationale = io::str_or(ej, "rationale", "");
        cs.edges.push_back(std::move(e));
    }
    return cs;
}

// Liaison supplements for BOM import: per-part liaisons plus connectors, in
// the PSM connector schema.
struct LiaisonSupplement {
    std::map<std::string, std::vector<psm::Liaison>> part_liaisons;
    std::vector<psm::Connector> connectors;
};

inline LiaisonSupplement parse_liaisons(const io::json& j) {
    io::expect_kind(j, "liaisons", "liaisons");
    LiaisonSupplement s;
    if (j.contains("parts")) {
        for (const auto& pj : io::array_field(j, "parts", "liaisons")) {
            std::string part = io::str_field(pj, "part", "liaison part");
            for (const auto& lj : io::array_field(pj, "liaisons", part)) {
                psm::Liaison l;
                l.id = io::str_field(lj, "id", part);
                l.geometry_note = io::str_or(lj, "geometry_note", "");
                s.part_liaisons[part].push_back(std::move(l));
            }
        }
    }
    if (j.contains("connectors")) {
        for (const auto& cj : io::array_field(j, "connectors", "liaisons")) {
            psm::Connector c;
            c.id = io::str_field(cj, "id", "connector");
            for (const auto& ej : io::array_field(cj, "endpoints", c.id)) {
                psm::Endpoint e;
                e.part = io::str_field(ej, "part", c.id);
                e.liaison = io::str_field(ej, "liaison", c.id);
                c.endpoints.push_back(std::move(e));
            }
            s.connectors.push_back(std::move(c));
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// BOM -> PSM

struct BomImportResult {
    psm::ProductStructuralModel model;
    ValidationReport warnings;
};

inline BomImportResult import_bom(const BillOfMaterials& bom,
                                  const std::optional<LiaisonSupplement>& liaisons,
                                  const std::string& model_id = "bom-import",
                                  const std::string& product_name = "imported-product") {
    std::map<std::string, const BomLine*> by_part;
    std::map<std::string, std::vector<const BomLine*>> children;
    for (const auto& l : bom.lines) {
        if (by_part.count(l.part))
            throw Error(ErrorCode::MalformedModel, "bom part '" + l.part + "' listed twice");
        by_part[l.part] = &l;
    }
    for (const auto& l : bom.lines) {
        if (!l.parent.empty() && !by_part.count(l.parent))
            throw Error(ErrorCode::MalformedModel,
                        "bom part '" + l.part + "' references unknown parent '" + l.parent + "'");
        children[l.parent].push_back(&l);
    }

    // Parent chains must terminate at the root.
    for (const auto& l : bom.lines) {
        std::set<std::string> seen{l.part};
        std::string cur = l.parent;
        while (!cur.empty()) {
            if (!seen.insert(cur).second)
                throw Error(ErrorCode::BomCycle, "parent references form a cycle at '" + cur + "'");
            cur = by_part.at(cur)->parent;
        }
    }

    auto build = [&](auto&& self, const BomLine& line) -> std::vector<psm::SubAssembly> {
        bool internal = children.count(line.part) && !children.at(line.part).empty();
        if (internal && line.quantity != 1)
            throw Error(ErrorCode::MalformedModel,
                        "bom part '" + line.part + "': quantity > 1 only allowed on leaf lines");
        std::vector<psm::SubAssembly> out;
        for (std::int64_t q = 1; q <= line.quantity; ++q) {
            psm::SubAssembly p;
            p.id = line.quantity == 1 ? line.part : line.part + "-" + std::to_string(q);
            if (internal)
                for (const BomLine* c : children.at(line.part))
                    for (auto& sub : self(self, *c)) p.children.push_back(std::move(sub));
            if (liaisons) {
                auto it = liaisons->part_liaisons.find(p.id);
                if (it != liaisons->part_liaisons.end()) p.liaisons = it->second;
            }
            out.push_back(std::move(p));
        }
        return out;
    };

    BomImportResult res;
    res.model.id = model_id;
    res.model.product_name = product_name;
    for (const BomLine* l : children[""])
        for (auto& p : build(build, *l)) res.model.root_children.push_back(std::move(p));
    if (liaisons) {
        res.model.connectors = liaisons->connectors;
    } else {
        res.warnings.warn("LIAISONS_MISSING", res.model.id,
                          "BOM carries no liaison information; connectors are empty");
    }
    return res;
}

// ---------------------------------------------------------------------------
// PSM -> PI-APM

namespace detail {

inline std::string activity_id(const std::string& connector) { return "act-" + connector; }
inline std::string process_id(const std::string& part) {
    return part.empty() ? "proc-root" : "proc-" + part;
}

// Fill a catalog signature with deterministic bindings.
inline std::map<std::string, std::string> bind_params(const apm::ActionEntry& entry,
                                                      const std::map<std::string, std::string>& env,
                                                      const std::string& fallback) {
    std::map<std::string, std::string> out;
    for (const auto& name : entry.parameters) {
        auto it = env.find(name);
        out[name] = it != env.end() ? it->second : fallback;
    }
    return out;
}

struct PiGenerator {
    const psm::ProductStructuralModel& model;
    const apm::ActionCatalog& catalog;
    std::map<std::string, std::vector<const psm::Connector*>> connectors_by_parent;
    std::vector<ConstraintEdge> extra;
    std::vector<bool> extra_used;

    const apm::ActionEntry& entry(const std::string& id) const {
        const apm::ActionEntry* e = catalog.find(id);
        if (!e)
            throw Error(ErrorCode::UnknownAction,
                        "default action '" + id + "' missing from catalog");
        return *e;
    }

    apm::PrimitiveAssemblyActivity make_activity(const psm::Connector& c) const {
        apm::PrimitiveAssemblyActivity act;
        act.id = activity_id(c.id);
        act.realizes_connector = c.id;

        std::string join_id = act.id + ".join";
        for (const auto& ep : c.endpoints) {
            apm::Operation feed;
            feed.id = act.id + ".feed-" + ep.part;
            feed.kind = apm::OperationKind::Feed;
            std::map<std::string, std::string> env{{"part", ep.part},
                                                   {"liaison", ep.liaison},
                                                   {"connector", c.id}};
            apm::ActionInstance pick{feed.id + ".pick", "pick",
                                     bind_params(entry("pick"), env, c.id)};
            apm::ActionInstance place{feed.id + ".place", "place",
                                      bind_params(entry("place"), env, c.id)};
            feed.actions = {pick, place};
            feed.precedence = {{pick.id, place.id}};
            act.operations.push_back(std::move(feed));
            act.precedence.push_back({act.operations.back().id, join_id});
        }

        apm::Operation join;
        join.id = join_id;
        join.kind = apm::OperationKind::Assemble;
        const auto& first = c.endpoints.front();
        for (std::size_t k = 1; k < c.endpoints.size(); ++k) {
            const auto& ep = c.endpoints[k];
            std::map<std::string, std::string> env{{"part", ep.part},
                                                   {"liaison", ep.liaison},
                                                   {"liaison_a", first.liaison},
                                                   {"liaison_b", ep.liaison},
                                                   {"connector", c.id}};
            join.actions.push_back({join.id + "." + std::to_string(k), "insert",
                                    bind_params(entry("insert"), env, c.id)});
        }
        act.operations.push_back(std::move(join));
        return act;
    }

    apm::CompositionLevelAssemblyProcess make_process(const std::string& parent_part,
                                                      const std::vector<psm::SubAssembly>& parts,
                                                      int dcl) {
        apm::CompositionLevelAssemblyProcess proc;
        proc.id = process_id(parent_part);
        proc.dcl = dcl;

        std::vector<const psm::Connector*> level;
        auto it = connectors_by_parent.find(parent_part);
        if (it != connectors_by_parent.end()) level = it->second;
        std::sort(level.begin(), level.end(),
                  [](const psm::Connector* a, const psm::Connector* b) { return a->id < b->id; });

        std::map<std::string, std::set<std::string>> touching;  // part -> activity ids
        for (const psm::Connector* c : level) {
            proc.activities.push_back(make_activity(*c));
            for (const auto& ep : c->endpoints) touching[ep.part].insert(activity_id(c->id));
        }

        std::set<std::string> members;
        for (const auto& a : proc.activities) members.insert(a.id);
        for (const auto& part : parts) {
            if (part.primitive()) continue;
            proc.child_processes.push_back(make_process(part.id, part.children, dcl + 1));
            members.insert(proc.child_processes.back().id);
            // A sub-assembly is completed before any joint touching it.
            for (const auto& act : touching[part.id])
                proc.precedence.push_back({process_id(part.id), act});
        }
        proc.kind = proc.child_processes.empty() ? apm::ProcessKind::PrimitiveChilds
                                                 : apm::ProcessKind::CompositeChild;

        for (std::size_t i = 0; i < extra.size(); ++i) {
            if (members.count(extra[i].before) && members.count(extra[i].after)) {
                proc.precedence.push_back({extra[i].before, extra[i].after});
                extra_used[i] = true;
            }
        }

        std::vector<std::string> member_list(members.begin(), members.end());
        if (!apm::detail::topo_order(member_list, proc.precedence))
            throw Error(ErrorCode::ConstraintCycle,
                        "merged precedence at level '" + proc.id + "' is cyclic");
        return proc;
    }
};

}  // namespace detail

inline apm::AssemblyProcessModel generate_pi_apm(const psm::ProductStructuralModel& model,
                                                 const ConstraintSet& extra,
                                                 const apm::ActionCatalog& catalog) {
    if (psm::has_variant_annotations(model))
        throw Error(ErrorCode::UnresolvedVariant,
                    "model still carries variant annotations; resolve a variant first");
    auto report = psm::validate_psm(model);
    if (!report.conformant())
        throw Error(ErrorCode::ValidationFailed, "product model is not conformant");

    detail::PiGenerator gen{model, catalog, {}, extra.edges,
                            std::vector<bool>(extra.edges.size(), false)};
    auto ix = psm::detail::index_parts(model);
    for (const auto& c : model.connectors) {
        const auto& e = ix.by_id.at(c.endpoints.front().part);
        gen.connectors_by_parent[e.parent].push_back(&c);
    }

    apm::AssemblyProcessModel out;
    out.id = model.id + "/pi";
    out.stage = apm::Stage::PlatformIndependent;
    out.product_ref = model.id;
    out.catalog_ref = catalog.id;
    out.root = gen.make_process("", model.root_children, 0);

    for (std::size_t i = 0; i < gen.extra.size(); ++i)
        if (!gen.extra_used[i])
            throw Error(ErrorCode::MalformedModel,
                        "constraint edge " + gen.extra[i].before + " -> " + gen.extra[i].after +
                            " does not match two activities of one level");
    return out;
}

// ---------------------------------------------------------------------------
// Sequence enumeration

namespace detail {

inline const apm::CompositionLevelAssemblyProcess* find_level(
    const apm::CompositionLevelAssemblyProcess& p, const std::string& id) {
    if (p.id == id) return &p;
    for (const auto& c : p.child_processes)
        if (const auto* f = find_level(c, id)) return f;
    return nullptr;
}

struct LevelDag {
    std::vector<std::string> members;  // sorted
    std::map<std::string, std::set<std::string>> succ;
    std::map<std::string, int> indeg;
};

inline LevelDag level_dag(const apm::CompositionLevelAssemblyProcess& level) {
    LevelDag d;
    for (const auto& c : level.child_processes) d.members.push_back(c.id);
    for (const auto& a : level.activities) d.members.push_back(a.id);
    std::sort(d.members.begin(), d.members.end());
    for (const auto& m : d.members) d.indeg[m] = 0;
    for (const auto& e : level.precedence)
        if (d.succ[e.before].insert(e.after).second) d.indeg[e.after]++;
    return d;
}

inline void enumerate_rec(LevelDag& d, std::vector<std::string>& prefix,
                          SequenceEnumeration& out, std::int64_t limit) {
    if (out.truncated) return;
    if (prefix.size() == d.members.size()) {
        if (out.count == limit) {
            out.truncated = true;
            return;
        }
        out.sequences.push_back(prefix);
        out.count++;
        return;
    }
    // Members are pre-sorted, so ready candidates come out lexicographically.
    for (const auto& m : d.members) {
        if (d.indeg[m] != 0) continue;
        d.indeg[m] = -1;  // taken
        for (const auto& s : d.succ[m]) d.indeg[s]--;
        prefix.push_back(m);
        enumerate_rec(d, prefix, out, limit);
        prefix.pop_back();
        for (const auto& s : d.succ[m]) d.indeg[s]++;
        d.indeg[m] = 0;
        if (out.truncated) return;
    }
}

}  // namespace detail

// All linear extensions of the level's precedence DAG in lexicographic order,
// truncated after `limit` sequences.
inline SequenceEnumeration enumerate_sequences(const apm::AssemblyProcessModel& m,
                                               const std::string& level_id, std::int64_t limit) {
    const auto* level = detail::find_level(m.root, level_id);
    if (!level)
        throw Error(ErrorCode::NotFound, "no process level with id '" + level_id + "'");
    auto d = detail::level_dag(*level);
    SequenceEnumeration out;
    std::vector<std::string> prefix;
    detail::enumerate_rec(d, prefix, out, limit);
    return out;
}

inline std::int64_t count_sequences(const apm::AssemblyProcessModel& m,
                                    const std::string& level_id) {
    const auto* level = detail::find_level(m.root, level_id);
    if (!level)
        throw Error(ErrorCode::NotFound, "no process level with id '" + level_id + "'");
    auto d = detail::level_dag(*level);
    std::size_t n = d.members.size();
    if (n > 16)
        throw Error(ErrorCode::LevelTooLarge,
                    "level has " + std::to_string(n) + " members; exact counting caps at 16");

    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < n; ++i) pos[d.members[i]] = i;
    std::vector<std::uint32_t> preds(n, 0);
    for (const auto& [from, tos] : d.succ)
        for (const auto& to : tos) preds[pos[to]] |= 1u << pos[from];

    // Count linear extensions by memoized backtracking over placed-sets.
    std::vector<std::int64_t> memo(std::size_t{1} << n, -1);
    auto count = [&](auto&& self, std::uint32_t placed) -> std::int64_t {
        if (placed == (n == 32 ? ~0u : (1u << n) - 1)) return 1;
        std::int64_t& c = memo[placed];
        if (c >= 0) return c;
        c = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (placed & (1u << i)) continue;
            if ((preds[i] & placed) != preds[i]) continue;
            c += self(self, placed | (1u << i));
        }
        return c;
    };
    return n == 0 ? 1 : count(count, 0);
}

}  // namespace has::xform

#endif
