#ifndef HAS_PSM_HPP
#define HAS_PSM_HPP

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "has/json_io.hpp"
#include "has/validation.hpp"

namespace has::psm {

struct Liaison {
    std::string id;
    std::string geometry_note;  // informational only
};

// Primitive iff children is empty. The decomposition level is always derived
// from the tree; files carrying an authored "dcl" are rejected at parse time.
struct SubAssembly {
    std::string id;
    std::vector<SubAssembly> children;
    std::vector<Liaison> liaisons;
    std::set<std::string> variant_membership;  // empty = kept in every variant

    bool primitive() const { return children.empty(); }
};

struct Endpoint {
    std::string part;
    std::string liaison;
};

struct Connector {
    std::string id;
    std::vector<Endpoint> endpoints;
    std::set<std::string> variant_membership;
};

struct ProductStructuralModel {
    std::string id;
    std::string product_name;
    std::vector<SubAssembly> root_children;
    std::vector<Connector> connectors;
    std::vector<std::string> variants;
};

// ---------------------------------------------------------------------------
// Serialization (kind="psm")

namespace detail {

inline SubAssembly parse_part(const io::json& j) {
    SubAssembly p;
    p.id = io::str_field(j, "id", "part");
    if (j.contains("dcl"))
        throw Error(ErrorCode::MalformedModel,
                    "part '" + p.id + "': dcl is derived and may not be authored");
    if (j.contains("liaisons")) {
        for (const auto& lj : io::array_field(j, "liaisons", p.id)) {
            Liaison l;
            l.id = io::str_field(lj, "id", "liaison of " + p.id);
            l.geometry_note = io::str_or(lj, "geometry_note", "");
            p.liaisons.push_back(std::move(l));
        }
    }
    if (j.contains("children")) {
        for (const auto& cj : io::array_field(j, "children", p.id))
            p.children.push_back(parse_part(cj));
    }
    if (j.contains("variants")) {
        auto tags = io::str_list(io::array_field(j, "variants", p.id), p.id);
        p.variant_membership.insert(tags.begin(), tags.end());
    }
    return p;
}

inline io::json part_to_json(const SubAssembly& p) {
    io::json j;
    j["id"] = p.id;
    if (!p.liaisons.empty()) {
        io::json ls = io::json::array();
        for (const auto& l : p.liaisons) {
            io::json lj;
            lj["id"] = l.id;
            if (!l.geometry_note.empty()) lj["geometry_note"] = l.geometry_note;
            ls.push_back(lj);
        }
        j["liaisons"] = ls;
    }
    if (!p.children.empty()) {
        io::json cs = io::json::array();
        for (const auto& c : p.children) cs.push_back(part_to_json(c));
        j["children"] = cs;
    }
    if (!p.variant_membership.empty())
        j["variants"] = std::vector<std::string>(p.variant_membership.begin(),
                                                 p.variant_membership.end());
    return j;
}

}  // namespace detail

inline ProductStructuralModel parse(const io::json& j) {
    io::expect_kind(j, "psm", "psm");
    ProductStructuralModel m;
    m.id = io::str_field(j, "id", "psm");
    m.product_name = io::str_field(j, "product_name", "psm");
    for (const auto& pj : io::array_field(j, "parts", "psm"))
        m.root_children.push_back(detail::parse_part(pj));
    if (j.contains("connectors")) {
        for (const auto& cj : io::array_field(j, "connectors", "psm")) {
            Connector c;
            c.id = io::str_field(cj, "id", "connector");
            for (const auto& ej : io::array_field(cj, "endpoints", c.id)) {
                Endpoint e;
                e.part = io::str_field(ej, "part", c.id);
                e.liaison = io::str_field(ej, "liaison", c.id);
                c.endpoints.push_back(std::move(e));
            }
            if (cj.contains("variants")) {
                auto tags = io::str_list(io::array_field(cj, "variants", c.id), c.id);
                c.variant_membership.insert(tags.begin(), tags.end());
            }
            m.connectors.push_back(std::move(c));
        }
    }
    if (j.contains("variants"))
        m.variants = io::str_list(io::array_field(j, "variants", "psm"), "psm");
    return m;
}

inline io::json to_json(const ProductStructuralModel& m) {
    io::json j;
    j["kind"] = "psm";
    j["id"] = m.id;
    j["product_name"] = m.product_name;
    io::json parts = io::json::array();
    for (const auto& p : m.root_children) parts.push_back(detail::part_to_json(p));
    j["parts"] = parts;
    io::json conns = io::json::array();
    for (const auto& c : m.connectors) {
        io::json cj;
        cj["id"] = c.id;
        io::json eps = io::json::array();
        for (const auto& e : c.endpoints) eps.push_back({{"part", e.part}, {"liaison", e.liaison}});
        cj["endpoints"] = eps;
        if (!c.variant_membership.empty())
            cj["variants"] = std::vector<std::string>(c.variant_membership.begin(),
                                                      c.variant_membership.end());
        conns.push_back(cj);
    }
    j["connectors"] = conns;
    j["variants"] = m.variants;
    return j;
}

// ---------------------------------------------------------------------------
// Queries shared by validation and the transforms.

namespace detail {

struct PartIndex {
    // id -> (node, parent id or "" for root level, dcl)
    struct Entry {
        const SubAssembly* node;
        std::string parent;
        int dcl;
    };
    std::map<std::string, Entry> by_id;
    std::vector<std::string> duplicates;

    void walk(const SubAssembly& p, const std::string& parent, int dcl) {
        if (!by_id.emplace(p.id, Entry{&p, parent, dcl}).second)
            duplicates.push_back(p.id);
        for (const auto& c : p.children) walk(c, p.id, dcl + 1);
    }
};

inline PartIndex index_parts(const ProductStructuralModel& m) {
    PartIndex ix;
    for (const auto& p : m.root_children) ix.walk(p, "", 0);
    return ix;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operations

inline ValidationReport validate_psm(const ProductStructuralModel& m) {
    ValidationReport r;
    auto ix = detail::index_parts(m);
    for (const auto& id : ix.duplicates)
        r.error("DUPLICATE_PART_ID", id, "part id appears more than once");

    std::set<std::string> declared(m.variants.begin(), m.variants.end());
    if (declared.size() != m.variants.size())
        r.error("VARIANT_DUPLICATE", m.id, "duplicate variant names");

    for (const auto& [id, e] : ix.by_id) {
        const SubAssembly& p = *e.node;
        if (p.children.size() == 1)
            r.error("COMPOSITE_DEGENERATE", id, "composite part with a single child");
        std::set<std::string> lids;
        for (const auto& l : p.liaisons)
            if (!lids.insert(l.id).second)
                r.error("DUPLICATE_LIAISON_ID", l.id, "within part " + id);
        for (const auto& v : p.variant_membership)
            if (!declared.count(v))
                r.error("VARIANT_UNDECLARED", id, "variant '" + v + "' not declared");
    }

    std::set<std::string> cids;
    std::map<std::string, int> liaison_use;  // "part/liaison" -> connector count
    for (const auto& c : m.connectors) {
        if (!cids.insert(c.id).second)
            r.error("DUPLICATE_CONNECTOR_ID", c.id, "connector id appears more than once");
        if (c.endpoints.size() < 2)
            r.error("CONNECTOR_ARITY", c.id, "connector must join at least 2 sub-assemblies");
        std::set<std::string> parts;
        std::string parent;
        bool first = true, parent_ok = true;
        for (const auto& ep : c.endpoints) {
            auto it = ix.by_id.find(ep.part);
            if (it == ix.by_id.end()) {
                r.error("UNKNOWN_PART", c.id, "endpoint part '" + ep.part + "' not in model");
                parent_ok = false;
                continue;
            }
            parts.insert(ep.part);
            const auto& node = *it->second.node;
            bool owns = std::any_of(node.liaisons.begin(), node.liaisons.end(),
                                    [&](const Liaison& l) { return l.id == ep.liaison; });
            if (!owns)
                r.error("LIAISON_OWNERSHIP", c.id,
                        "liaison '" + ep.liaison + "' does not belong to part '" + ep.part + "'");
            else
                liaison_use[ep.part + "/" + ep.liaison]++;
            if (first) {
                parent = it->second.parent;
                first = false;
            } else if (it->second.parent != parent) {
                parent_ok = false;
            }
        }
        if (parts.size() != c.endpoints.size())
            r.error("CONNECTOR_ENDPOINTS_DISTINCT", c.id,
                    "endpoints must reference distinct sub-assemblies");
        if (!parent_ok)
            r.error("CONNECTOR_LEVEL", c.id,
                    "endpoint parts must be siblings under the same parent");
        for (const auto& v : c.variant_membership)
            if (!declared.count(v))
                r.error("VARIANT_UNDECLARED", c.id, "variant '" + v + "' not declared");
    }
    for (const auto& [key, n] : liaison_use)
        if (n > 1) r.warn("LIAISON_SHARED", key, "liaison used by multiple connectors");
    return r;
}

// Keep-if-untagged, keep-if-member; dropped parts take their connectors with
// them. The result is concrete: all memberships are stripped.
inline ProductStructuralModel resolve_variant(const ProductStructuralModel& m,
                                              const std::string& variant) {
    if (std::find(m.variants.begin(), m.variants.end(), variant) == m.variants.end())
        throw Error(ErrorCode::UnknownVariant, "variant '" + variant + "' not declared");

    std::set<std::string> dropped;
    auto filter = [&](auto&& self, const SubAssembly& p) -> std::vector<SubAssembly> {
        std::vector<SubAssembly> kept;
        if (!p.variant_membership.empty() && !p.variant_membership.count(variant)) {
            dropped.insert(p.id);
            auto mark = [&](auto&& mm, const SubAssembly& q) -> void {
                dropped.insert(q.id);
                for (const auto& c : q.children) mm(mm, c);
            };
            mark(mark, p);
            return kept;
        }
        SubAssembly out = p;
        out.variant_membership.clear();
        out.children.clear();
        for (const auto& c : p.children)
            for (auto& k : self(self, c)) out.children.push_back(std::move(k));
        kept.push_back(std::move(out));
        return kept;
    };

    ProductStructuralModel out;
    out.id = m.id;
    out.product_name = m.product_name;
    out.variants = m.variants;
    for (const auto& p : m.root_children)
        for (auto& k : filter(filter, p)) out.root_children.push_back(std::move(k));
    for (const auto& c : m.connectors) {
        if (!c.variant_membership.empty() && !c.variant_membership.count(variant)) continue;
        bool refs_dropped = std::any_of(c.endpoints.begin(), c.endpoints.end(),
                                        [&](const Endpoint& e) { return dropped.count(e.part); });
        if (refs_dropped) continue;
        Connector kept = c;
        kept.variant_membership.clear();
        out.connectors.push_back(std::move(kept));
    }

    auto report = validate_psm(out);
    if (!report.conformant()) {
        std::string first;
        if (!report.violations().empty())
            first = report.violations().front().rule + " [" +
                    report.violations().front().element + "]";
        throw Error(ErrorCode::InvalidResult,
                    "variant '" + variant + "' yields non-conformant model: " + first);
    }
    return out;
}

inline std::map<std::string, int> decomposition_levels(const ProductStructuralModel& m) {
    auto ix = detail::index_parts(m);
    std::map<std::string, int> out;
    for (const auto& [id, e] : ix.by_id) out[id] = e.dcl;
    return out;
}

// Connectors whose endpoint parts sit at the given level, in id order.
inline std::vector<Connector> liaison_pairs_at_level(const ProductStructuralModel& m, int dcl) {
    auto ix = detail::index_parts(m);
    std::vector<Connector> out;
    for (const auto& c : m.connectors) {
        if (c.endpoints.empty()) continue;
        auto it = ix.by_id.find(c.endpoints.front().part);
        if (it != ix.by_id.end() && it->second.dcl == dcl) out.push_back(c);
    }
    std::sort(out.begin(), out.end(),
              [](const Connector& a, const Connector& b) { return a.id < b.id; });
    return out;
}

// True when the model still carries variant annotations on parts or
// connectors; such models may not enter PI-APM generation.
inline bool has_variant_annotations(const ProductStructuralModel& m) {
    bool found = false;
    auto walk = [&](auto&& self, const SubAssembly& p) -> void {
        if (!p.variant_membership.empty()) found = true;
        for (const auto& c : p.children) self(self, c);
    };
    for (const auto& p : m.root_children) walk(walk, p);
    for (const auto& c : m.connectors)
        if (!c.variant_membership.empty()) found = true;
    return found;
}

}  // namespace has::psm

#endif
