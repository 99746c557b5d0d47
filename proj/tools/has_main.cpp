// has — engineering-tool CLI for product, platform and assembly process
// models: validation, BOM import, PI-APM generation, sequence enumeration,
// lowering to a scheduled PS-APM, simulation, and the model repository.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "has/has.hpp"

namespace {

using namespace has;

int exit_code_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::MalformedModel:
        case ErrorCode::ValidationFailed:
        case ErrorCode::InvalidResult:
            return 1;
        case ErrorCode::Infeasible:
        case ErrorCode::ConstraintCycle:
        case ErrorCode::BomCycle:
        case ErrorCode::UnresolvedVariant:
        case ErrorCode::ExactLimit:
        case ErrorCode::LevelTooLarge:
        case ErrorCode::NoRoute:
        case ErrorCode::UnknownAction:
        case ErrorCode::UnknownVariant:
        case ErrorCode::BindingMismatch:
        case ErrorCode::CapacityExceeded:
            return 2;
        case ErrorCode::IoError:
        case ErrorCode::NotFound:
        case ErrorCode::MalformedUri:
            return 3;
        case ErrorCode::Usage:
            return 4;
    }
    return 1;
}

io::json load(const std::string& path) {
    return io::parse_text(io::read_file(path), path);
}

repo::Repository open_repo(const std::string& flag) {
    std::filesystem::path root =
        flag.empty() ? repo::default_repo_root() : std::filesystem::path(flag);
    return repo::Repository(root);
}

lower::LoweringPolicy policy_from(const std::string& name) {
    lower::LoweringPolicy p;
    if (name == "exact")
        p.strategy = lower::Strategy::Exact;
    else if (name == "list" || name.empty())
        p.strategy = lower::Strategy::ListHeuristic;
    else
        throw Error(ErrorCode::Usage, "policy must be 'list' or 'exact'");
    return p;
}

int run_validate(const std::string& file, const std::string& psm_file,
                 const std::string& catalog_file, const std::string& repo_flag) {
    io::json j = load(file);
    std::string kind = io::str_or(j, "kind", "");
    ValidationReport report;
    if (kind == "psm") {
        report = psm::validate_psm(psm::parse(j));
    } else if (kind == "aspm") {
        report = aspm::validate_aspm(aspm::parse(j));
    } else if (kind == "catalog") {
        report = apm::validate_catalog(apm::parse_catalog(j));
    } else if (kind == "apm-pi" || kind == "apm-ps") {
        auto m = apm::parse(j);
        psm::ProductStructuralModel product;
        apm::ActionCatalog catalog;
        if (!psm_file.empty() && !catalog_file.empty()) {
            product = psm::parse(load(psm_file));
            catalog = apm::parse_catalog(load(catalog_file));
        } else {
            auto r = open_repo(repo_flag);
            product = psm::parse(io::parse_text(r.resolve(m.product_ref), m.product_ref));
            catalog =
                apm::parse_catalog(io::parse_text(r.resolve(m.catalog_ref), m.catalog_ref));
        }
        report = apm::validate_apm(m, product, catalog);
    } else if (kind == "bom") {
        xform::parse_bom(j);
    } else if (kind == "constraints") {
        xform::parse_constraints(j);
    } else if (kind == "job") {
        repo::parse_job(j);
    } else if (kind == "liaisons") {
        xform::parse_liaisons(j);
    } else if (kind == "sim-report") {
        // kind discriminator is the whole contract
    } else {
        throw Error(ErrorCode::MalformedModel, file + ": unknown kind '" + kind + "'");
    }
    std::cout << report;
    if (report.conformant()) {
        std::cout << "conformant\n";
        return 0;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HAS engineering tool"};
    app.require_subcommand(1);
    std::string repo_flag;
    app.add_option("--repo", repo_flag, "repository root (default $HAS_REPO or .hasrepo)");

    // validate
    std::string v_file, v_psm, v_catalog;
    auto* validate = app.add_subcommand("validate", "validate a model file");
    validate->add_option("file", v_file)->required();
    validate->add_option("--psm", v_psm, "product model (for APM files)");
    validate->add_option("--catalog", v_catalog, "action catalog (for APM files)");

    // import-bom
    std::string ib_bom, ib_liaisons, ib_out, ib_id, ib_name;
    auto* import_bom = app.add_subcommand("import-bom", "transform a BOM into a product model");
    import_bom->add_option("--bom", ib_bom)->required();
    import_bom->add_option("--liaisons", ib_liaisons);
    import_bom->add_option("-o,--out", ib_out)->required();
    import_bom->add_option("--id", ib_id, "model id for the result");
    import_bom->add_option("--product-name", ib_name);

    // gen-pi
    std::string gp_psm, gp_constraints, gp_catalog, gp_out, gp_variant;
    auto* gen_pi = app.add_subcommand("gen-pi", "generate the platform-independent APM");
    gen_pi->add_option("--psm", gp_psm)->required();
    gen_pi->add_option("--constraints", gp_constraints);
    gen_pi->add_option("--catalog", gp_catalog)->required();
    gen_pi->add_option("--variant", gp_variant, "resolve this variant first");
    gen_pi->add_option("-o,--out", gp_out)->required();

    // enumerate
    std::string en_apm, en_level;
    std::int64_t en_limit = 1000;
    bool en_count_only = false;
    auto* enumerate = app.add_subcommand("enumerate", "enumerate assembly sequences of a level");
    enumerate->add_option("--apm", en_apm)->required();
    enumerate->add_option("--level", en_level)->required();
    enumerate->add_option("--limit", en_limit);
    enumerate->add_flag("--count-only", en_count_only);

    // lower
    std::string lo_apm, lo_platform, lo_catalog, lo_policy = "list", lo_out;
    auto* lower_cmd = app.add_subcommand("lower", "refine a PI-APM into a scheduled PS-APM");
    lower_cmd->add_option("--apm", lo_apm)->required();
    lower_cmd->add_option("--platform", lo_platform)->required();
    lower_cmd->add_option("--catalog", lo_catalog)->required();
    lower_cmd->add_option("--policy", lo_policy, "list or exact");
    lower_cmd->add_option("-o,--out", lo_out)->required();

    // simulate
    std::string si_apm, si_platform, si_report;
    std::int64_t si_quantity = 1;
    bool si_table = false;
    auto* simulate = app.add_subcommand("simulate", "evaluate a PS-APM on its platform");
    simulate->add_option("--apm-ps", si_apm)->required();
    simulate->add_option("--platform", si_platform)->required();
    simulate->add_option("--quantity", si_quantity);
    simulate->add_option("--report", si_report, "write the JSON report here");
    simulate->add_flag("--table", si_table, "print an aligned table instead of JSON");

    // compare
    std::vector<std::string> cp_reports;
    auto* compare = app.add_subcommand("compare", "rank simulation reports");
    compare->add_option("reports", cp_reports)->required()->expected(-1);

    // repo
    auto* repo_cmd = app.add_subcommand("repo", "model repository");
    std::string rs_file, rs_name;
    auto* repo_store = repo_cmd->add_subcommand("store", "store a model file");
    repo_store->add_option("file", rs_file)->required();
    repo_store->add_option("--name", rs_name, "entry name (default: file stem)");
    std::string rr_uri;
    auto* repo_resolve = repo_cmd->add_subcommand("resolve", "print stored bytes");
    repo_resolve->add_option("uri", rr_uri)->required();
    repo_cmd->add_subcommand("list", "list stored entries");
    repo_cmd->require_subcommand(1);

    // job
    auto* job_cmd = app.add_subcommand("job", "assembly jobs");
    std::string ja_file, ja_name;
    auto* job_add = job_cmd->add_subcommand("add", "store a job file");
    job_add->add_option("file", ja_file)->required();
    job_add->add_option("--name", ja_name);
    std::string jr_job, jr_platform, jr_policy = "list", jr_name;
    auto* job_run = job_cmd->add_subcommand("run", "execute a stored job");
    job_run->add_option("--job", jr_job, "job URI")->required();
    job_run->add_option("--platform", jr_platform, "platform URI")->required();
    job_run->add_option("--policy", jr_policy);
    job_run->add_option("--name", jr_name, "output entry name (default: job name)");
    job_cmd->require_subcommand(1);

    // deploy
    std::string dp_apm, dp_platform, dp_catalog, dp_out;
    auto* deploy = app.add_subcommand("deploy", "emit a self-contained deployment bundle");
    deploy->add_option("--apm-ps", dp_apm)->required();
    deploy->add_option("--platform", dp_platform)->required();
    deploy->add_option("--catalog", dp_catalog)->required();
    deploy->add_option("-o,--out", dp_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 4;
    }

    try {
        if (*validate) return run_validate(v_file, v_psm, v_catalog, repo_flag);

        if (*import_bom) {
            auto bom = xform::parse_bom(load(ib_bom));
            std::optional<xform::LiaisonSupplement> liaisons;
            if (!ib_liaisons.empty()) liaisons = xform::parse_liaisons(load(ib_liaisons));
            std::string id = ib_id.empty() ? "bom-import" : ib_id;
            std::string name = ib_name.empty() ? "imported-product" : ib_name;
            auto res = xform::import_bom(bom, liaisons, id, name);
            std::cerr << res.warnings;
            io::write_file(ib_out, io::dump(psm::to_json(res.model)));
            std::cout << ib_out << "\n";
            return 0;
        }

        if (*gen_pi) {
            auto product = psm::parse(load(gp_psm));
            if (!gp_variant.empty()) product = psm::resolve_variant(product, gp_variant);
            xform::ConstraintSet cs;
            if (!gp_constraints.empty()) cs = xform::parse_constraints(load(gp_constraints));
            auto catalog = apm::parse_catalog(load(gp_catalog));
            auto pi = xform::generate_pi_apm(product, cs, catalog);
            io::write_file(gp_out, io::dump(apm::to_json(pi)));
            std::cout << gp_out << "\n";
            return 0;
        }

        if (*enumerate) {
            auto m = apm::parse(load(en_apm));
            if (en_count_only) {
                std::cout << xform::count_sequences(m, en_level) << "\n";
                return 0;
            }
            auto seqs = xform::enumerate_sequences(m, en_level, en_limit);
            for (const auto& s : seqs.sequences) {
                for (std::size_t i = 0; i < s.size(); ++i)
                    std::cout << (i ? " " : "") << s[i];
                std::cout << "\n";
            }
            std::cout << "count " << seqs.count << (seqs.truncated ? " (truncated)" : "") << "\n";
            return 0;
        }

        if (*lower_cmd) {
            auto m = apm::parse(load(lo_apm));
            auto platform = aspm::parse(load(lo_platform));
            auto catalog = apm::parse_catalog(load(lo_catalog));
            auto ps = lower::lower_apm(m, platform, catalog, policy_from(lo_policy));
            io::write_file(lo_out, io::dump(apm::to_json(ps)));
            std::cout << "makespan " << ps.platform_binding->schedule.makespan.str() << "\n";
            return 0;
        }

        if (*simulate) {
            auto m = apm::parse(load(si_apm));
            auto platform = aspm::parse(load(si_platform));
            auto rep = sim::simulate(m, platform, sim::SimConfig{si_quantity, Duration{}});
            if (!si_report.empty()) io::write_file(si_report, io::dump(sim::report_to_json(rep)));
            if (si_table)
                std::cout << sim::report_table(rep);
            else
                std::cout << io::dump(sim::report_to_json(rep));
            return 0;
        }

        if (*compare) {
            std::vector<std::pair<std::string, sim::SimReport>> reports;
            for (const auto& path : cp_reports) {
                io::json j = load(path);
                io::expect_kind(j, "sim-report", path);
                sim::SimReport r;
                r.total_makespan = io::duration_field(j, "total_makespan", path);
                r.per_unit_makespan = io::duration_field(j, "per_unit_makespan", path);
                for (const auto& [id, u] : io::field(j, "utilization", path).items())
                    r.busy[id] = io::duration_field(u, "busy", path);
                reports.push_back({path, r});
            }
            auto ranking = sim::compare_scenarios(reports);
            int rank = 1;
            for (const auto& r : ranking)
                std::cout << rank++ << "  " << r.report->total_makespan.str() << "  " << r.label
                          << "\n";
            return 0;
        }

        if (*repo_store) {
            auto r = open_repo(repo_flag);
            std::string name =
                rs_name.empty() ? std::filesystem::path(rs_file).stem().string() : rs_name;
            auto uri = r.store(io::read_file(rs_file), name);
            std::cout << uri.render() << "\n";
            return 0;
        }
        if (*repo_resolve) {
            auto r = open_repo(repo_flag);
            std::cout << r.resolve(rr_uri);
            return 0;
        }
        if (*repo_cmd) {  // list
            auto r = open_repo(repo_flag);
            for (const auto& e : r.list())
                std::cout << e.uri.render() << "  sha256:" << e.content_digest << "\n";
            return 0;
        }

        if (*job_add) {
            auto r = open_repo(repo_flag);
            std::string name =
                ja_name.empty() ? std::filesystem::path(ja_file).stem().string() : ja_name;
            auto uri = r.store(io::read_file(ja_file), name);
            std::cout << uri.render() << "\n";
            return 0;
        }
        if (*job_run) {
            auto r = open_repo(repo_flag);
            auto job_uri = repo::ModelUri::parse(jr_job);
            auto job = repo::parse_job(io::parse_text(r.resolve(job_uri), jr_job));
            std::string name = jr_name.empty() ? job_uri.name : jr_name;
            auto res = repo::run_job(r, job, name, jr_platform, policy_from(jr_policy));
            std::cout << res.ps_apm.render() << "\n" << res.report.render() << "\n";
            return 0;
        }

        if (*deploy) {
            auto m = apm::parse(load(dp_apm));
            auto platform = aspm::parse(load(dp_platform));
            auto catalog = apm::parse_catalog(load(dp_catalog));
            if (m.stage != apm::Stage::PlatformSpecific)
                throw Error(ErrorCode::ValidationFailed, "deploy expects a PS-APM");
            // bundle = PS-APM + platform snapshot + the catalog subset in use
            auto used = apm::required_actions(m);
            apm::ActionCatalog subset;
            subset.id = catalog.id;
            for (const auto& e : catalog.entries)
                if (used.count(e.id)) subset.entries.push_back(e);
            std::filesystem::create_directories(dp_out);
            auto dir = std::filesystem::path(dp_out);
            io::write_file((dir / "apm-ps.json").string(), io::dump(apm::to_json(m)));
            io::write_file((dir / "platform.json").string(), io::dump(aspm::to_json(platform)));
            io::write_file((dir / "catalog.json").string(),
                           io::dump(apm::catalog_to_json(subset)));
            std::cout << dp_out << "\n";
            return 0;
        }

        throw Error(ErrorCode::Usage, "no subcommand");
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
