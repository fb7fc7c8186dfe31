#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "kgl/experiment.hpp"

using namespace kgl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("kgl_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int kgl_exit(const std::string& args) {
    const int rc = std::system((std::string(KGL_CLI) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, ParsesSectionsAndGlobals) {
    std::istringstream in("seed = 7  # comment\nout = results\n\n[picard]\neps = 0.2\n[sharpness]\nj-max = 30\n");
    const auto cfg = parse_config(in);
    EXPECT_EQ(cfg.globals.at("seed"), "7");
    ASSERT_EQ(cfg.sections.size(), 2u);
    EXPECT_EQ(cfg.sections[0].first, "picard");
    EXPECT_EQ(cfg.sections[0].second.at(0).second, "0.2");
    auto c = ExperimentConfig::defaults("sharpness");
    c.set("j-max", "30");
    EXPECT_EQ(c.integer("j-max"), 30);
}

TEST(Config, UnknownKeysAreNamed) {
    std::istringstream a("[picard]\nepsilon = 0.2\n");
    try {
        parse_config(a);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("epsilon"), std::string::npos);
    }
    std::istringstream b("colour = red\n");
    EXPECT_THROW(parse_config(b), ConfigError);
    std::istringstream c("[nonsense]\n");
    EXPECT_THROW(parse_config(c), ConfigError);
    auto cfg = ExperimentConfig::defaults("picard");
    cfg.set("x-axis", "maybe");
    EXPECT_THROW(cfg.flag("x-axis"), ConfigError);
}

TEST(Config, RationalParsing) {
    EXPECT_EQ(parse_rational("5/3"), Rational(5, 3));
    EXPECT_EQ(parse_rational("-2"), Rational(-2));
    EXPECT_EQ(parse_rational("0.75"), Rational(3, 4));
    EXPECT_EQ(parse_rational("-0.5"), Rational(-1, 2));
    EXPECT_EQ(parse_rational("10.05"), Rational(201, 20));
    EXPECT_THROW(parse_rational("x"), ConfigError);
    EXPECT_THROW(parse_rational("1.2.3"), ConfigError);
}

TEST(Run, SameSeedSameMetrics) {
    for (const std::string id : {"sharpness", "picard", "vector-fields"}) {
        auto c = ExperimentConfig::defaults(id);
        c.seed = 11;
        if (id == "vector-fields") c.set("conv-kmax", "200");
        const auto a = run(c), b = run(c);
        EXPECT_EQ(to_json(a)["metrics"].dump(), to_json(b)["metrics"].dump()) << id;
        EXPECT_EQ(to_json(a)["checks"].dump(), to_json(b)["checks"].dump()) << id;
        EXPECT_TRUE(a.passed()) << id;
    }
}

TEST(Run, ReportShape) {
    auto c = ExperimentConfig::defaults("sharpness");
    c.out_dir = scratch("shape").string();
    auto rep = run(c);
    write_outputs(rep);
    write_outputs(rep);
    const auto j = nlohmann::ordered_json::parse(slurp(fs::path(c.out_dir) / "sharpness" / "report.json"));
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"config", "checks", "metrics", "reports", "artifacts", "wall_clock_seconds", "passed"}));
    EXPECT_EQ(j["config"]["experiment"], "sharpness");
    std::ifstream log(fs::path(c.out_dir) / "reports.jsonl");
    int lines = 0;
    for (std::string line; std::getline(log, line);) ++lines;
    EXPECT_EQ(lines, 2);
    fs::remove_all(c.out_dir);
}

TEST(PlotData, TidyColumns) {
    auto c = ExperimentConfig::defaults("picard");
    const auto rep = run(c);
    const auto dir = scratch("plot");
    const auto path = emit_plot_data(rep, "picard_ratios", dir);
    std::ifstream in(path);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "n,diff_norm,ratio");
    EXPECT_EQ(first.substr(0, 2), "1,");
    EXPECT_THROW(emit_plot_data(rep, "gevrey_fit", dir), std::invalid_argument);
    const auto sharp = run(ExperimentConfig::defaults("sharpness"));
    for (const std::string kind : {"gevrey_fit", "block_heatmap"}) {
        std::ifstream t(emit_plot_data(sharp, kind, dir));
        std::getline(t, header);
        EXPECT_EQ(header, kind == "gevrey_fit" ? "j,E_j,fitted_line" : "j,k,log_magnitude");
    }
    fs::remove_all(dir);
}

TEST(Binary, ExitCodes) {
    const auto dir = scratch("bin");
    const auto out = " --out " + dir.string();
    EXPECT_EQ(kgl_exit("sharpness" + out), 0);
    EXPECT_EQ(kgl_exit("sharpness --no-such-flag 1" + out), 2);
    EXPECT_EQ(kgl_exit("sharpness --s 0.9 --gamma 1" + out), 2);
    EXPECT_EQ(kgl_exit("picard --steps 0" + out), 2);
    const auto cfg = dir / "bad.cfg";
    std::ofstream(cfg) << "[sharpness]\nwidth = 3\n";
    EXPECT_EQ(kgl_exit("--config " + cfg.string() + " sharpness" + out), 2);
    const auto good = dir / "good.cfg";
    std::ofstream(good) << "seed = 3\n[sharpness]\nj-max = 30\n[vector-fields]\nconv-kmax = 100\n";
    const auto dry = scratch("dry");
    EXPECT_EQ(kgl_exit("--config " + good.string() + " --check-only run --out " + dry.string()), 0);
    EXPECT_TRUE(fs::is_empty(dry));
    fs::remove_all(dry);
    EXPECT_EQ(kgl_exit("--config " + good.string() + " run" + out), 0);
    EXPECT_TRUE(fs::exists(dir / "vector-fields" / "ledger.csv"));
    const auto first = slurp(dir / "sharpness" / "sharpness.csv");
    EXPECT_EQ(kgl_exit("--config " + good.string() + " run" + out), 0);
    EXPECT_EQ(slurp(dir / "sharpness" / "sharpness.csv"), first);
    fs::remove_all(dir);
}
