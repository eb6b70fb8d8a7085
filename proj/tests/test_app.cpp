#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "aquaplan/app.hpp"
#include "aquaplan/config.hpp"
#include "aquaplan/io/csv.hpp"

using namespace aquaplan;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag)
{
    static std::mt19937_64 rng(std::random_device{}());
    auto p = fs::temp_directory_path() / ("aquaplan_test_" + tag + "_" + std::to_string(rng()));
    fs::create_directories(p);
    return p;
}

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = app::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "run.json")); }

std::map<std::string, std::string> outputs(const fs::path& dir)
{
    std::map<std::string, std::string> m;
    const auto man = manifest(dir);
    for (const auto& o : man.at("outputs"))
        m[o.at("role").get<std::string>()] = slurp(dir / o.at("file").get<std::string>());
    return m;
}

std::vector<std::string> data_lines(const std::string& text)
{
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        if (!l.empty() && l[0] != '#')
            lines.push_back(l);
    return lines;
}

} // namespace

TEST(Csv, NineSignificantDigits)
{
    EXPECT_EQ(io::format_real(1.0), "1");
    EXPECT_EQ(io::format_real(0.398816112623344), "0.398816113");
    EXPECT_EQ(io::format_real(-0.0), "0");
    EXPECT_EQ(io::format_real(NAN), "nan");
    EXPECT_EQ(io::Cell(std::string("a,b")).text(), "\"a,b\"");
    EXPECT_EQ(io::Cell(true).text(), "1");
    EXPECT_EQ(io::Cell(std::size_t{42}).text(), "42");
}

TEST(Config, DefaultsAndTypes)
{
    config::RunConfig c;
    EXPECT_EQ(c.real("aoi.mu"), 1.0);
    EXPECT_EQ(c.real("aoi.lambda"), 0.8);
    EXPECT_EQ(c.count("sensing.k"), 2u);
    EXPECT_EQ(c.real("sensing.gamma_wake"), 0.9);
    EXPECT_EQ(c.real("sensing.delta"), 0.6);
    EXPECT_EQ(c.real("sensing.boundary_m"), 5.0);
    EXPECT_EQ(c.count("optimizer.n_init"), 10u);
    EXPECT_EQ(c.count("optimizer.batch"), 100u);
    EXPECT_EQ(c.count("optimizer.iters"), 40u);
    EXPECT_EQ(c.count("simkit.aoi_departures"), 100000u);
    EXPECT_FALSE(c.flag("optimizer.drift"));
    EXPECT_EQ(c.list("simkit.strategies"), (std::vector<std::string>{"optimized", "random", "fixed"}));
    EXPECT_THROW(c.set("aoi.nope", "1"), config::UsageError);
    c.set("aoi.mu", "abc");
    EXPECT_THROW(c.real("aoi.mu"), config::UsageError);
    c.set("optimizer.iters", "1e2");
    EXPECT_EQ(c.count("optimizer.iters"), 100u);
    c.set("optimizer.iters", "2.5");
    EXPECT_THROW(c.count("optimizer.iters"), config::UsageError);
}

TEST(Config, IniAndJsonRoundTrip)
{
    const auto dir = fresh_dir("ini");
    {
        std::ofstream f(dir / "a.ini");
        f << "[aoi]\nlambda = 0.5\nM = 3\n\n[optimizer]\niters = 7\n";
    }
    config::RunConfig c;
    c.load_ini((dir / "a.ini").string());
    EXPECT_EQ(c.text("aoi.lambda"), "0.5");
    EXPECT_EQ(c.count("optimizer.iters"), 7u);
    const auto back = config::RunConfig::from_json(c.to_json());
    EXPECT_EQ(back.values(), c.values());
    {
        std::ofstream f(dir / "b.ini");
        f << "[aoi]\nbogus = 1\n";
    }
    EXPECT_THROW(c.load_ini((dir / "b.ini").string()), config::UsageError);
    {
        std::ofstream f(dir / "c.ini");
        f << "[aoi\nlambda=1\n";
    }
    EXPECT_THROW(c.load_ini((dir / "c.ini").string()), config::UsageError);
    fs::remove_all(dir);
}

TEST(Cli, AoiPrintsClosedForm)
{
    const auto dir = fresh_dir("aoi");
    auto r = invoke({"aoi", "--lambda", "0.8", "--mu", "1", "--M", "0", "--outdir", dir.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "1\n");
    r = invoke({"aoi", "--outdir", dir.string()});
    EXPECT_EQ(r.out, "0.398816113\n");
    const auto m = manifest(dir);
    EXPECT_EQ(m.at("command"), "aoi");
    EXPECT_EQ(m.at("seed"), 1);
    EXPECT_EQ(m.at("artifact_version"), app::kVersion);
    fs::remove_all(dir);
}

TEST(Cli, ExitCodes)
{
    const auto dir = fresh_dir("exit");
    auto r = invoke({"aoi", "--lambda", "1.2", "--mu", "1", "--outdir", dir.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("unstable"), std::string::npos);
    EXPECT_EQ(invoke({"aoi", "--bogus"}).code, 2);
    EXPECT_EQ(invoke({"frobnicate"}).code, 2);
    EXPECT_EQ(invoke({}).code, 2);
    EXPECT_EQ(invoke({"rate", "--surrogate", "svm"}).code, 2);
    EXPECT_EQ(invoke({"aoi", "--lambda", "fast", "--outdir", dir.string()}).code, 2);
    EXPECT_EQ(invoke({"aoi", "--set", "aoi.nothing=1", "--outdir", dir.string()}).code, 2);
    EXPECT_EQ(invoke({"aoi", "--config", (dir / "missing.ini").string()}).code, 2);
    EXPECT_EQ(invoke({"sense", "--gamma-wake", "0.95", "--set", "sensing.gamma_cap=0.9", "--outdir", dir.string()}).code,
              1);
    EXPECT_EQ(invoke({"--help"}).code, 0);
    fs::remove_all(dir);
}

TEST(Cli, RateDefaultsGiveFiftyEvaluations)
{
    const auto dir = fresh_dir("rate");
    const auto r = invoke({"rate", "--outdir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto out = outputs(dir);
    const auto trace = data_lines(out.at(""));
    ASSERT_EQ(trace.size(), 51u); // header + 10 initial + 40 iterations
    EXPECT_EQ(trace.front(), "evaluation,iteration,lambda,observed,best,threshold,predicted,reevaluation");
    EXPECT_EQ(data_lines(out.at("thresholds")).size(), 41u);
    EXPECT_EQ(data_lines(out.at("log")).size(), 51u);
    EXPECT_NE(out.at("").find("# aoi.lambda=0.8\n"), std::string::npos);
    EXPECT_NE(out.at("").find("# command=rate\n"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Cli, PrecedenceFlagsOverConfigOverDefaults)
{
    const auto dir = fresh_dir("prec");
    {
        std::ofstream f(dir / "cfg.ini");
        f << "[aoi]\nlambda = 0.5\nM = 2\n";
    }
    const auto r = invoke({"aoi", "--config", (dir / "cfg.ini").string(), "--M", "5", "--outdir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, io::format_real(aoi::aoi_violation({0.5, 1.0, 5.0})) + "\n");
    const auto cfg = manifest(dir).at("config");
    EXPECT_EQ(cfg.at("aoi").at("lambda"), "0.5");
    EXPECT_EQ(cfg.at("aoi").at("M"), "5");
    fs::remove_all(dir);
}

TEST(Cli, EnvironmentOutdir)
{
    const auto dir = fresh_dir("env");
    ::setenv("AQUAPLAN_OUTDIR", dir.string().c_str(), 1);
    const auto r = invoke({"channel"});
    ::unsetenv("AQUAPLAN_OUTDIR");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "run.json"));
    EXPECT_EQ(manifest(dir).at("command"), "channel");
    fs::remove_all(dir);
}

TEST(Cli, ManifestReproducesOutputs)
{
    for (const std::vector<std::string>& cmd :
         {std::vector<std::string>{"channel", "--freq-khz", "20"}, {"sense", "--gamma-wake", "0.7"},
          {"aoi", "--M", "3"}, {"rate", "--iters", "5", "--seed", "4"}, {"place", "--iters", "5"},
          {"simulate", "--set", "simkit.horizon=200", "--iters", "3"},
          {"simulate", "--mode", "aoi", "--set", "simkit.aoi_departures=5000"}}) {
        const auto a = fresh_dir("ma");
        const auto b = fresh_dir("mb");
        auto args = cmd;
        args.insert(args.end(), {"--outdir", a.string()});
        auto r = invoke(args);
        ASSERT_EQ(r.code, 0) << cmd.front() << ": " << r.err;
        r = invoke({"--from-manifest", (a / "run.json").string(), "--outdir", b.string(), "--threads", "3"});
        ASSERT_EQ(r.code, 0) << cmd.front() << ": " << r.err;
        const auto oa = outputs(a);
        const auto ob = outputs(b);
        ASSERT_EQ(oa.size(), ob.size());
        for (const auto& [role, text] : oa)
            EXPECT_EQ(text, ob.at(role)) << cmd.front() << " role '" << role << "'";
        fs::remove_all(a);
        fs::remove_all(b);
    }
}

TEST(Cli, ManifestCommandMismatchIsUsageError)
{
    const auto a = fresh_dir("mm");
    ASSERT_EQ(invoke({"aoi", "--outdir", a.string()}).code, 0);
    EXPECT_EQ(invoke({"rate", "--from-manifest", (a / "run.json").string(), "--outdir", a.string()}).code, 2);
    fs::remove_all(a);
}

TEST(Cli, SimulateSingleStrategy)
{
    const auto dir = fresh_dir("sim");
    const auto r = invoke({"simulate", "--strategies", "fixed", "--set", "simkit.horizon=100", "--outdir",
                           dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("mean_delay_fixed"), std::string::npos);
    EXPECT_EQ(r.out.find("mean_delay_random"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Cli, SimulateSkipsFailedPlacement)
{
    const auto dir = fresh_dir("skip");
    const auto r = invoke({"simulate", "--gamma-wake", "0.95", "--set", "sensing.gamma_cap=0.9", "--set",
                           "simkit.horizon=100", "--outdir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("optimized placement failed"), std::string::npos);
    EXPECT_NE(r.out.find("mean_delay_fixed"), std::string::npos);
    fs::remove_all(dir);
}
