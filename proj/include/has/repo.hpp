#ifndef HAS_REPO_HPP
#define HAS_REPO_HPP

#include <openssl/evp.h>

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "has/apm.hpp"
#include "has/aspm.hpp"
#include "has/catalog.hpp"
#include "has/json_io.hpp"
#include "has/lower.hpp"
#include "has/psm.hpp"
#include "has/sim.hpp"
#include "has/xform.hpp"

namespace has::repo {

inline const std::set<std::string>& known_kinds() {
    static const std::set<std::string> kinds{"psm",  "aspm",        "apm-pi",
                                            "apm-ps", "bom",       "constraints",
                                            "catalog", "job",      "sim-report"};
    return kinds;
}

// has://<repo>/<kind>/<name>@<version>
struct ModelUri {
    std::string repo_name;
    std::string kind;
    std::string name;
    std::int64_t version = 1;

    std::string render() const {
        return "has://" + repo_name + "/" + kind + "/" + name + "@" + std::to_string(version);
    }

    static ModelUri parse(const std::string& text) {
        auto fail = [&](const std::string& why) -> ModelUri {
            throw Error(ErrorCode::MalformedUri, "'" + text + "': " + why);
        };
        const std::string prefix = "has://";
        if (text.rfind(prefix, 0) != 0) return fail("must start with has://");
        std::string rest = text.substr(prefix.size());
        auto s1 = rest.find('/');
        if (s1 == std::string::npos) return fail("missing kind segment");
        auto s2 = rest.find('/', s1 + 1);
        if (s2 == std::string::npos) return fail("missing name segment");
        auto at = rest.rfind('@');
        if (at == std::string::npos || at < s2) return fail("missing @version");
        ModelUri u;
        u.repo_name = rest.substr(0, s1);
        u.kind = rest.substr(s1 + 1, s2 - s1 - 1);
        u.name = rest.substr(s2 + 1, at - s2 - 1);
        std::string ver = rest.substr(at + 1);
        if (u.repo_name.empty() || u.name.empty()) return fail("empty segment");
        if (!known_kinds().count(u.kind)) return fail("unknown kind '" + u.kind + "'");
        if (ver.empty() || ver.find_first_not_of("0123456789") != std::string::npos)
            return fail("version must be a positive integer");
        u.version = std::stoll(ver);
        if (u.version < 1) return fail("version must be a positive integer");
        return u;
    }
};

struct AssemblyJob {
    std::string id;
    std::string product_ref;
    std::optional<std::string> variant;
    std::int64_t quantity = 1;
    std::map<std::string, std::string> quality_params;
    std::string pi_apm_ref;
};

inline AssemblyJob parse_job(const io::json& j) {
    io::expect_kind(j, "job", "job");
    AssemblyJob job;
    job.id = io::str_field(j, "id", "job");
    job.product_ref = io::str_field(j, "product_ref", "job");
    if (j.contains("variant")) job.variant = io::str_field(j, "variant", "job");
    if (j.contains("quantity")) {
        if (!j["quantity"].is_number_integer() || j["quantity"].get<std::int64_t>() < 1)
            throw Error(ErrorCode::MalformedModel, "job: quantity must be a positive integer");
        job.quantity = j["quantity"].get<std::int64_t>();
    }
    if (j.contains("quality_params")) {
        for (const auto& [k, v] : j["quality_params"].items()) {
            if (!v.is_string())
                throw Error(ErrorCode::MalformedModel, "job: quality_params values must be strings");
            job.quality_params[k] = v.get<std::string>();
        }
    }
    job.pi_apm_ref = io::str_field(j, "pi_apm_ref", "job");
    return job;
}

inline io::json job_to_json(const AssemblyJob& job) {
    io::json j;
    j["kind"] = "job";
    j["id"] = job.id;
    j["product_ref"] = job.product_ref;
    if (job.variant) j["variant"] = *job.variant;
    j["quantity"] = job.quantity;
    if (!job.quality_params.empty()) {
        io::json q = io::json::object();
        for (const auto& [k, v] : job.quality_params) q[k] = v;
        j["quality_params"] = q;
    }
    j["pi_apm_ref"] = job.pi_apm_ref;
    return j;
}

// ---------------------------------------------------------------------------

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::IoError, "digest computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

struct RepoEntry {
    ModelUri uri;
    std::string content_digest;
};

// Directory-backed, content-immutable store. New content for an existing
// (kind, name) lands under the next version; writes are serialized by the
// caller per the single-writer contract.
class Repository {
public:
    explicit Repository(std::filesystem::path root, std::string name = "main")
        : root_(std::move(root)), name_(std::move(name)) {}

    const std::string& name() const { return name_; }
    const std::filesystem::path& root() const { return root_; }

    ModelUri store(const std::string& content, const std::string& entry_name) {
        io::json j = io::parse_text(content, "document");
        std::string kind = io::str_or(j, "kind", "");
        if (!known_kinds().count(kind))
            throw Error(ErrorCode::ValidationFailed, "unknown or missing document kind");
        validate_for_store(j, kind);

        ModelUri uri{name_, kind, entry_name, next_version(kind, entry_name)};
        auto dir = root_ / kind / entry_name;
        std::filesystem::create_directories(dir);
        auto path = dir / (std::to_string(uri.version) + ".json");
        io::write_file(path.string(), content);

        io::json meta;
        meta["digest_algorithm"] = "sha256";
        meta["digest"] = sha256_hex(content);
        meta["stored_at"] = timestamp();
        io::write_file((dir / (std::to_string(uri.version) + ".meta.json")).string(),
                       io::dump(meta));
        return uri;
    }

    std::string resolve(const ModelUri& uri) const {
        if (uri.repo_name != name_)
            throw Error(ErrorCode::NotFound, uri.render() + ": repository is '" + name_ + "'");
        auto path = root_ / uri.kind / uri.name / (std::to_string(uri.version) + ".json");
        if (!std::filesystem::exists(path))
            throw Error(ErrorCode::NotFound, uri.render());
        return io::read_file(path.string());
    }

    std::string resolve(const std::string& uri_text) const {
        return resolve(ModelUri::parse(uri_text));
    }

    std::string digest_of(const ModelUri& uri) const {
        auto path = root_ / uri.kind / uri.name / (std::to_string(uri.version) + ".meta.json");
        if (!std::filesystem::exists(path)) throw Error(ErrorCode::NotFound, uri.render());
        io::json meta = io::parse_text(io::read_file(path.string()), "meta");
        return io::str_field(meta, "digest", "meta");
    }

    std::vector<RepoEntry> list() const {
        std::vector<RepoEntry> out;
        if (!std::filesystem::exists(root_)) return out;
        for (const auto& kind : known_kinds()) {
            auto kdir = root_ / kind;
            if (!std::filesystem::exists(kdir)) continue;
            std::vector<std::string> names;
            for (const auto& e : std::filesystem::directory_iterator(kdir))
                if (e.is_directory()) names.push_back(e.path().filename().string());
            std::sort(names.begin(), names.end());
            for (const auto& n : names) {
                std::int64_t vmax = latest_version(kind, n);
                for (std::int64_t v = 1; v <= vmax; ++v) {
                    ModelUri u{name_, kind, n, v};
                    out.push_back({u, digest_of(u)});
                }
            }
        }
        return out;
    }

    std::int64_t latest_version(const std::string& kind, const std::string& entry_name) const {
        auto dir = root_ / kind / entry_name;
        std::int64_t best = 0;
        if (!std::filesystem::exists(dir)) return 0;
        for (const auto& e : std::filesystem::directory_iterator(dir)) {
            auto fn = e.path().filename().string();
            if (fn.size() > 5 && fn.substr(fn.size() - 5) == ".json" &&
                fn.find(".meta.") == std::string::npos) {
                std::string ver = fn.substr(0, fn.size() - 5);
                if (ver.find_first_not_of("0123456789") == std::string::npos && !ver.empty())
                    best = std::max<std::int64_t>(best, std::stoll(ver));
            }
        }
        return best;
    }

private:
    std::int64_t next_version(const std::string& kind, const std::string& entry_name) const {
        return latest_version(kind, entry_name) + 1;
    }

    static std::string timestamp() {
        std::time_t t = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        return buf;
    }

    void validate_for_store(const io::json& j, const std::string& kind) {
        auto gate = [&](const ValidationReport& r) {
            if (!r.conformant()) {
                std::string first;
                if (!r.violations().empty())
                    first = r.violations().front().rule + " [" +
                            r.violations().front().element + "]";
                throw Error(ErrorCode::ValidationFailed, "document not conformant: " + first);
            }
        };
        if (kind == "psm") {
            gate(psm::validate_psm(psm::parse(j)));
        } else if (kind == "aspm") {
            gate(aspm::validate_aspm(aspm::parse(j)));
        } else if (kind == "catalog") {
            gate(apm::validate_catalog(apm::parse_catalog(j)));
        } else if (kind == "apm-pi" || kind == "apm-ps") {
            auto m = apm::parse(j);
            auto p = psm::parse(io::parse_text(resolve(m.product_ref), m.product_ref));
            auto c = apm::parse_catalog(io::parse_text(resolve(m.catalog_ref), m.catalog_ref));
            gate(apm::validate_apm(m, p, c));
        } else if (kind == "bom") {
            xform::parse_bom(j);
        } else if (kind == "constraints") {
            xform::parse_constraints(j);
        } else if (kind == "job") {
            auto job = parse_job(j);
            resolve(job.product_ref);
            resolve(job.pi_apm_ref);
        }
        // sim-report: kind discriminator is enough
    }

    std::filesystem::path root_;
    std::string name_;
};

inline std::filesystem::path default_repo_root() {
    if (const char* env = std::getenv("HAS_REPO")) return env;
    return ".hasrepo";
}

// ---------------------------------------------------------------------------
// Job execution: resolve -> variant -> validate -> feasibility -> lower ->
// simulate -> store. Any stage error is rethrown with the stage named.

struct JobRunResult {
    ModelUri ps_apm;
    ModelUri report;
    Duration makespan;
};

inline JobRunResult run_job(Repository& repo, const AssemblyJob& job,
                            const std::string& output_name, const std::string& platform_ref,
                            const lower::LoweringPolicy& policy) {
    auto stage = [](const std::string& name, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            throw Error(e.code(), "at stage " + name + ": " + e.message());
        }
    };

    auto pi = stage("resolve", [&] {
        return apm::parse(io::parse_text(repo.resolve(job.pi_apm_ref), job.pi_apm_ref));
    });
    auto product = stage("resolve", [&] {
        return psm::parse(io::parse_text(repo.resolve(job.product_ref), job.product_ref));
    });
    auto platform = stage("resolve", [&] {
        return aspm::parse(io::parse_text(repo.resolve(platform_ref), platform_ref));
    });
    auto catalog = stage("resolve", [&] {
        return apm::parse_catalog(io::parse_text(repo.resolve(pi.catalog_ref), pi.catalog_ref));
    });

    if (job.variant)
        product = stage("variant", [&] { return psm::resolve_variant(product, *job.variant); });

    stage("validate", [&] {
        auto r = apm::validate_apm(pi, product, catalog);
        if (!r.conformant())
            throw Error(ErrorCode::ValidationFailed, "PI-APM not conformant for this product");
        return 0;
    });

    stage("check_feasibility", [&] {
        auto f = lower::check_feasibility(pi, platform, catalog);
        if (!f.feasible) {
            std::string gap;
            for (const auto& a : f.gap) gap += (gap.empty() ? "" : ", ") + a;
            throw Error(ErrorCode::Infeasible, "capability gap: {" + gap + "}");
        }
        return 0;
    });

    auto ps = stage("lower", [&] { return lower::lower_apm(pi, platform, catalog, policy); });
    auto rep = stage("simulate", [&] {
        return sim::simulate(ps, platform, sim::SimConfig{job.quantity, Duration{}});
    });

    JobRunResult res;
    res.makespan = ps.platform_binding->schedule.makespan;
    res.ps_apm = stage("store", [&] {
        return repo.store(io::dump(apm::to_json(ps)), output_name);
    });
    res.report = stage("store", [&] {
        return repo.store(io::dump(sim::report_to_json(rep)), output_name);
    });
    return res;
}

}  // namespace has::repo

#endif
