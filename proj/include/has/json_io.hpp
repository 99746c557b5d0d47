#ifndef HAS_JSON_IO_HPP
#define HAS_JSON_IO_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "has/errors.hpp"
#include "has/time.hpp"

namespace has::io {

using json = nlohmann::json;

inline json parse_text(const std::string& text, const std::string& origin) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw Error(ErrorCode::MalformedModel, origin + ": not well-formed JSON");
    if (!j.is_object())
        throw Error(ErrorCode::MalformedModel, origin + ": top level must be an object");
    return j;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << content;
}

// Canonical text form used everywhere a model is serialized: nlohmann keeps
// object keys sorted, so this is byte-deterministic for equal documents.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline const json& field(const json& j, const std::string& key, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end())
        throw Error(ErrorCode::MalformedModel, ctx + ": missing field '" + key + "'");
    return *it;
}

inline std::string str_field(const json& j, const std::string& key, const std::string& ctx) {
    const json& v = field(j, key, ctx);
    if (!v.is_string())
        throw Error(ErrorCode::MalformedModel, ctx + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

inline std::string str_or(const json& j, const std::string& key, const std::string& def) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return def;
    return it->get<std::string>();
}

inline const json& array_field(const json& j, const std::string& key, const std::string& ctx) {
    const json& v = field(j, key, ctx);
    if (!v.is_array())
        throw Error(ErrorCode::MalformedModel, ctx + ": field '" + key + "' must be an array");
    return v;
}

inline std::vector<std::string> str_list(const json& v, const std::string& ctx) {
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string())
            throw Error(ErrorCode::MalformedModel, ctx + ": expected string list");
        out.push_back(e.get<std::string>());
    }
    return out;
}

// Durations are decimal strings; bare integers are accepted for convenience.
inline Duration duration_field(const json& j, const std::string& key, const std::string& ctx) {
    const json& v = field(j, key, ctx);
    if (v.is_string()) return Duration::parse(v.get<std::string>());
    if (v.is_number_integer()) return Duration::from_units(v.get<std::int64_t>());
    throw Error(ErrorCode::MalformedModel,
                ctx + ": field '" + key + "' must be a decimal string");
}

inline void expect_kind(const json& j, const std::string& kind, const std::string& ctx) {
    if (str_or(j, "kind", "") != kind)
        throw Error(ErrorCode::MalformedModel, ctx + ": expected kind=\"" + kind + "\"");
}

}  // namespace has::io

#endif
