#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kgl/experiment.hpp"

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> jobs;
    bool check_only = false;
};

// defaults < config file < command line
kgl::ExperimentConfig resolve(const std::string& id, const kgl::ConfigFile* file, const kgl::ParamList& section,
                              const std::map<std::string, std::string>& flags, const Globals& g) {
    auto c = kgl::ExperimentConfig::defaults(id);
    if (file) {
        if (auto it = file->globals.find("seed"); it != file->globals.end()) c.seed = std::stoull(it->second);
        if (auto it = file->globals.find("out"); it != file->globals.end()) c.out_dir = it->second;
        if (auto it = file->globals.find("jobs"); it != file->globals.end()) c.jobs = static_cast<unsigned>(std::stoul(it->second));
    }
    for (const auto& [k, v] : section) c.set(k, v);
    for (const auto& [k, v] : flags) c.set(k, v);
    if (g.seed) c.seed = *g.seed;
    if (g.out) c.out_dir = *g.out;
    c.jobs = kgl::resolve_jobs(g.jobs ? *g.jobs : c.jobs);
    return c;
}

int execute(const kgl::ExperimentConfig& c, bool check_only) {
    if (check_only) {
        std::cout << kgl::config_json(c).dump(2) << '\n';
        return 0;
    }
    auto rep = kgl::run(c);
    kgl::write_outputs(rep);
    for (const auto& ch : rep.checks) std::cout << (ch.passed ? "PASS " : "FAIL ") << c.experiment << ' ' << ch.id << '\n';
    std::cout << c.experiment << ": " << (rep.passed() ? "all checks passed" : "checks failed") << " (" << rep.wall_clock
              << " s)\n";
    return rep.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gevrey smoothing experiments for the toy and linearized kinetic models"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "configuration file (key = value, [experiment] sections)");
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--jobs", g.jobs, "worker threads (default: KGL_JOBS or 1)");
    app.add_flag("--check-only", g.check_only, "validate and echo the resolved configuration");

    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [id, params] : kgl::experiment_catalog()) {
        auto* sub = app.add_subcommand(id, "run the " + id + " experiment");
        for (const auto& [key, def] : params) sub->add_option("--" + key, values[id][key], "default " + def);
        subs[id] = sub;
    }
    auto* run_all = app.add_subcommand("run", "run every experiment section of --config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        std::optional<kgl::ConfigFile> file;
        if (!g.config_path.empty()) file = kgl::load_config(g.config_path);
        std::vector<kgl::ExperimentConfig> plan;
        if (run_all->parsed()) {
            if (!file) throw kgl::ConfigError("'run' needs --config");
            for (const auto& [id, section] : file->sections) plan.push_back(resolve(id, &*file, section, {}, g));
            if (plan.empty()) throw kgl::ConfigError("config file has no experiment sections");
        } else {
            for (const auto& [id, sub] : subs) {
                if (!sub->parsed()) continue;
                std::map<std::string, std::string> flags;
                for (const auto& [key, def] : kgl::experiment_params(id))
                    if (sub->count("--" + key)) flags[key] = values[id][key];
                kgl::ParamList section;
                if (file)
                    for (const auto& [sid, sp] : file->sections)
                        if (sid == id) section.insert(section.end(), sp.begin(), sp.end());
                plan.push_back(resolve(id, file ? &*file : nullptr, section, flags, g));
            }
        }
        int status = 0;
        for (const auto& c : plan) status = std::max(status, execute(c, g.check_only));
        return status;
    } catch (const kgl::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "aborted: " << e.what() << '\n';
        return 3;
    }
}
