#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aquaplan/acquisition.hpp"
#include "aquaplan/aoi.hpp"
#include "aquaplan/channel.hpp"
#include "aquaplan/config.hpp"
#include "aquaplan/errors.hpp"
#include "aquaplan/io/csv.hpp"
#include "aquaplan/optimizer.hpp"
#include "aquaplan/sensing.hpp"
#include "aquaplan/simkit/delay.hpp"
#include "aquaplan/simkit/mm1.hpp"

#ifndef AQUAPLAN_VERSION
#define AQUAPLAN_VERSION "0.0.0"
#endif

namespace aquaplan::app {

inline constexpr const char* kVersion = AQUAPLAN_VERSION;

enum ExitCode : int { ok = 0, domain_error = 1, usage_error = 2 };

using config::RunConfig;
using config::UsageError;
using io::Cell;
using io::CsvWriter;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config to module parameters

inline sensing::ChannelContext channel_of(const RunConfig& c)
{
    sensing::ChannelContext ch;
    ch.params = {c.real("channel.a0_db"), c.real("channel.zeta"), c.real("channel.freq_khz")};
    ch.scale = channel::parse_scale(c.text("channel.scale"));
    ch.params.validate();
    return ch;
}

inline sensing::WakeupParams wakeup_of(const RunConfig& c)
{
    sensing::WakeupParams w{c.real("sensing.gamma_wake"), c.real("sensing.gamma_cap"), c.real("sensing.delta")};
    w.validate();
    return w;
}

inline aoi::QueueParams queue_of(const RunConfig& c)
{
    return {c.real("aoi.lambda"), c.real("aoi.mu"), c.real("aoi.M")};
}

inline aoi::DetectionContext detection_of(const RunConfig& c)
{
    aoi::DetectionContext d;
    d.k = static_cast<unsigned>(c.count("aoi.detect_k"));
    d.distance_m = c.real("aoi.detect_distance_m");
    d.boundary_m = c.real("sensing.boundary_m");
    d.decay = c.real("sensing.delta");
    d.channel = channel_of(c);
    return d;
}

inline optimizer::BoConfig bo_of(const RunConfig& c)
{
    optimizer::BoConfig b;
    b.n_init = c.count("optimizer.n_init");
    b.batch = c.count("optimizer.batch");
    b.iters = c.count("optimizer.iters");
    b.seed = c.count("cli.seed");
    b.surrogate = optimizer::parse_surrogate(c.text("surrogate.kind"));
    b.acquisition = optimizer::parse_acquisition(c.text("acquisition.kind"));
    b.omega = c.real("acquisition.omega");
    b.gate_ratio = c.real("acquisition.gate_ratio");
    b.noise_ratio = c.real("surrogate.noise_ratio");
    b.mlp_epochs = c.count("surrogate.mlp_epochs");
    b.drift = c.flag("optimizer.drift");
    b.drift_period = c.count("optimizer.drift_period");
    b.drift_tolerance = c.real("optimizer.drift_tolerance");
    b.bounds = {{c.real("optimizer.lambda_min"), c.real("optimizer.lambda_max"), false}};
    return b;
}

inline optimizer::PlacementField field_of(const RunConfig& c)
{
    optimizer::PlacementField f;
    f.wakeup = wakeup_of(c);
    f.channel = channel_of(c);
    f.boundary_m = c.real("sensing.boundary_m");
    f.efficiency = c.real("sensing.efficiency");
    f.k_min = c.count("optimizer.k_min");
    f.k_max = c.count("optimizer.k_max");
    f.spacing_min = c.real("optimizer.spacing_min");
    f.spacing_max = c.real("optimizer.spacing_max");
    return f;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n)
{
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

// ---------------------------------------------------------------------------
// Run bookkeeping: output naming, config echo, manifest

struct Output {
    std::string role; ///< "" for the primary file
    std::string file; ///< name inside the output directory
};

class Run {
public:
    Run(std::string command, RunConfig cfg, fs::path outdir, unsigned threads, std::ostream& out)
        : command_(std::move(command)), cfg_(std::move(cfg)), outdir_(std::move(outdir)), threads_(threads), out_(out)
    {
        std::error_code ec;
        fs::create_directories(outdir_, ec);
        if (ec || !fs::is_directory(outdir_))
            throw UsageError("cannot create output directory '" + outdir_.string() + "'");
        stamp_ = unique_stamp();
    }

    const RunConfig& cfg() const { return cfg_; }
    unsigned threads() const { return threads_; }
    std::ostream& out() { return out_; }
    const std::string& command() const { return command_; }
    const std::vector<Output>& outputs() const { return outputs_; }

    /// Opens `<command>_<stamp>[_<role>].csv` with the config echo on top.
    CsvWriter csv(const std::string& role, const std::vector<std::string>& columns)
    {
        const std::string name = command_ + "_" + stamp_ + (role.empty() ? "" : "_" + role) + ".csv";
        outputs_.push_back({role, name});
        return CsvWriter((outdir_ / name).string(), echo(), columns);
    }

    /// Header comment lines: version, command, then every resolved key.
    std::vector<std::string> echo() const
    {
        std::vector<std::string> lines{std::string("aquaplan ") + kVersion, "command=" + command_};
        for (const auto& [k, v] : cfg_.values())
            lines.push_back(k + "=" + v);
        return lines;
    }

    nlohmann::json manifest() const
    {
        nlohmann::json outs = nlohmann::json::array();
        for (const auto& o : outputs_)
            outs.push_back({{"role", o.role}, {"file", o.file}});
        return {{"format", "aquaplan.run"},
                {"version", 1},
                {"artifact_version", kVersion},
                {"command", command_},
                {"seed", cfg_.count("cli.seed")},
                {"config", cfg_.to_json()},
                {"outputs", outs}};
    }

    /// `run.json` describes the latest run in the directory; `<command>_<stamp>.run.json` keeps this one.
    void write_manifest() const
    {
        const auto text = manifest().dump(2) + "\n";
        for (const auto& name : {std::string("run.json"), command_ + "_" + stamp_ + ".run.json"}) {
            const auto path = outdir_ / name;
            std::ofstream f(path, std::ios::binary | std::ios::trunc);
            f << text;
            if (!f)
                throw Error("failed writing '" + path.string() + "'");
        }
    }

private:
    std::string unique_stamp() const
    {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
        std::string stamp = buf;
        for (int n = 2; fs::exists(outdir_ / (command_ + "_" + stamp + ".csv")); ++n)
            stamp = std::string(buf) + "-" + std::to_string(n);
        return stamp;
    }

    std::string command_;
    RunConfig cfg_;
    fs::path outdir_;
    unsigned threads_;
    std::ostream& out_;
    std::string stamp_;
    std::vector<Output> outputs_;
};

// ---------------------------------------------------------------------------
// Subcommands

inline void write_trace(Run& run, const optimizer::BoTrace& tr, const std::vector<std::string>& input_names)
{
    std::vector<std::string> cols{"evaluation", "iteration"};
    cols.insert(cols.end(), input_names.begin(), input_names.end());
    cols.insert(cols.end(), {"observed", "best", "threshold", "predicted", "reevaluation"});
    auto csv = run.csv("", cols);
    for (std::size_t i = 0; i < tr.records.size(); ++i) {
        const auto& r = tr.records[i];
        std::vector<Cell> row{i, r.iteration};
        for (double v : r.input)
            row.emplace_back(v);
        row.insert(row.end(), {r.observed, r.best, r.threshold, r.predicted, r.reevaluation});
        csv.row(row);
    }
    csv.close();

    auto th = run.csv("thresholds", {"iteration", "threshold", "discrepancy", "recalibrated"});
    for (const auto& t : tr.thresholds)
        th.row({t.iteration, t.threshold, t.discrepancy, t.recalibrated});
    th.close();
}

inline int cmd_channel(Run& run)
{
    const auto& c = run.cfg();
    const auto ch = channel_of(c);
    const double max_d = c.real("channel.max_distance_m");
    const auto n = c.count("channel.points");
    detail::require(max_d >= 1.0, "channel: max_distance_m must be >= 1");
    detail::require(n >= 1, "channel: points must be >= 1");
    const double alpha = channel::thorp_absorption(ch.params.freq_khz);

    auto csv = run.csv("", {"distance_m", "freq_khz", "absorption_db_per_km", "attenuation_db", "attenuation",
                            "scale"});
    for (double d : linspace(max_d / static_cast<double>(n), max_d, n))
        csv.row({d, ch.params.freq_khz, alpha, channel::attenuation_db(ch.params, d),
                 channel::attenuation(ch.params, d, ch.scale), channel::to_string(ch.scale)});
    csv.close();
    run.out() << "absorption_db_per_km " << io::format_real(alpha) << '\n';
    return ok;
}

inline int cmd_sense(Run& run)
{
    const auto& c = run.cfg();
    const auto ch = channel_of(c);
    const auto wake = wakeup_of(c);
    wake.check_constraint();
    const double boundary = c.real("sensing.boundary_m");
    const double eff = c.real("sensing.efficiency");
    sensing::P1Options p1{c.count("sensing.k_min"), c.count("sensing.k_max"), boundary, eff, run.threads()};
    const sensing::UniformSpacing spacing{c.real("sensing.d_min"), c.real("sensing.d_max")};

    const auto configured =
        sensing::SensorLayout::stepped(c.count("sensing.k"), c.real("sensing.spacing_m"), boundary, eff);
    const double e_configured = sensing::wakeup_expectation(configured, wake, ch);
    const auto best = sensing::solve_p1(p1, spacing, wake, ch);

    // E(X) over (gamma_wake, K) for every gamma up to the ceiling.
    std::vector<double> gammas;
    for (int i = 1; i <= 10; ++i)
        if (i / 10.0 <= wake.gamma_cap + 1e-12)
            gammas.push_back(i / 10.0);
    auto surface = run.csv("", {"gamma_wake", "count", "expectation"});
    auto table = run.csv("p1", {"gamma_wake", "optimal_count", "expectation", "distances_m"});
    for (double g : gammas) {
        auto w = wake;
        w.gamma_wake = g;
        const auto layouts = parallel_map(p1.k_max - p1.k_min + 1, run.threads(), [&](std::size_t i) {
            return sensing::wakeup_expectation(sensing::layout_for(p1.k_min + i, spacing, boundary, eff), w, ch);
        });
        for (std::size_t i = 0; i < layouts.size(); ++i)
            surface.row({g, p1.k_min + i, layouts[i]});
        const auto r = sensing::solve_p1(p1, spacing, w, ch);
        std::string ds;
        for (double d : r.layout.distances_m)
            ds += (ds.empty() ? "" : ";") + io::format_real(d);
        table.row({g, r.count, r.expectation, ds});
    }
    surface.close();
    table.close();
    run.out() << "expectation " << io::format_real(e_configured) << '\n'
              << "p1_count " << best.count << '\n'
              << "p1_expectation " << io::format_real(best.expectation) << '\n';
    return ok;
}

inline int cmd_aoi(Run& run)
{
    const auto& c = run.cfg();
    const auto q = queue_of(c);
    const double violation = aoi::aoi_violation(q);
    const auto ctx = detection_of(c);
    const auto n = c.count("aoi.points");

    auto csv = run.csv("", {"kind", "lambda", "mu", "threshold_m", "violation", "status", "pr_detect", "r"});
    auto row = [&](const char* kind, double lambda) {
        auto qi = q;
        qi.lambda = lambda;
        const double a = aoi::aoi_violation(qi);
        const double s = aoi::status_probability(lambda, a);
        const double pr = ctx.probability();
        csv.row({kind, lambda, q.mu, q.threshold_m, a, s, pr, s * pr});
    };
    row("point", q.lambda);
    for (double f : linspace(0.01, 0.99, n)) {
        const double lambda = f * q.mu;
        if (std::abs(lambda - q.mu) > aoi::kSingularityGuard)
            row("sweep", lambda);
    }
    csv.close();
    run.out() << io::format_real(violation) << '\n';
    return ok;
}

inline int cmd_place(Run& run)
{
    const auto& c = run.cfg();
    const auto field = field_of(c);
    auto bo = bo_of(c);
    const auto tr = optimizer::optimize_placement(field, bo);
    write_trace(run, tr, {"k", "spacing_m"});
    if (tr.aborted)
        throw Error("placement aborted: " + tr.error);

    // Acquisition surface from a surrogate refitted on every evaluation.
    bo.bounds = field.bounds();
    std::vector<surrogate::Point> xs;
    std::vector<double> ys;
    for (const auto& r : tr.records) {
        xs.push_back(optimizer::normalize(bo.bounds, r.input));
        ys.push_back(-r.observed);
    }
    const auto predict = optimizer::make_fitter(bo)(xs, ys, bo.iters + 1);
    const double c_min = -tr.next_threshold;
    const auto m = c.count("optimizer.mesh");
    detail::require(m >= 2, "place: mesh must be >= 2");
    auto mesh = run.csv("mesh", {"k", "spacing_m", "mean", "stddev", "acquisition"});
    for (double k : linspace(static_cast<double>(field.k_min), static_cast<double>(field.k_max), m)) {
        for (double d : linspace(field.spacing_min, field.spacing_max, m)) {
            const auto p = predict(optimizer::normalize(bo.bounds, {k, d}));
            mesh.row({k, d, -p.mean, p.stddev(), acquisition::ei(p.mean, p.stddev(), c_min)});
        }
    }
    mesh.close();

    const auto g = c.count("optimizer.grid");
    detail::require(g >= 2, "place: grid must be >= 2");
    auto grid = run.csv("grid", {"k", "spacing_m", "expectation"});
    double grid_best = -1.0;
    std::vector<std::size_t> ks;
    for (double k : linspace(static_cast<double>(field.k_min), static_cast<double>(field.k_max), g)) {
        const auto ki = static_cast<std::size_t>(std::llround(k));
        if (ks.empty() || ks.back() != ki)
            ks.push_back(ki);
    }
    for (std::size_t k : ks) {
        for (double d : linspace(field.spacing_min, field.spacing_max, g)) {
            const double e = field.expectation(k, d);
            grid_best = std::max(grid_best, e);
            grid.row({k, d, e});
        }
    }
    grid.close();

    run.out() << "best_k " << io::format_real(tr.best_input[0]) << '\n'
              << "best_spacing_m " << io::format_real(tr.best_input[1]) << '\n'
              << "best_expectation " << io::format_real(tr.best_value) << '\n'
              << "grid_expectation " << io::format_real(grid_best) << '\n';
    return ok;
}

inline int cmd_rate(Run& run)
{
    const auto& c = run.cfg();
    const auto q = queue_of(c);
    const auto ctx = detection_of(c);
    const auto bo = bo_of(c);
    aoi::ChuSpace space;
    const auto tr = optimizer::optimize_rate(
        [&](double lambda) { return aoi::semantic_objective(lambda, q, ctx, &space); }, q.mu, bo);
    write_trace(run, tr, {"lambda"});

    auto log = run.csv("log", {"sequence", "configuration", "lambda", "mu", "threshold_m", "violation", "status",
                               "pr_detect", "r"});
    for (const auto& e : space.log())
        log.row({e.sequence, e.configuration, e.lambda, e.mu, e.threshold_m, e.violation, e.status, e.pr_detect,
                 e.r});
    log.close();
    if (tr.aborted)
        throw Error("rate optimisation aborted: " + tr.error);
    run.out() << "best_lambda " << io::format_real(tr.best_input[0]) << '\n'
              << "best_r " << io::format_real(tr.best_value) << '\n';
    return ok;
}

inline int cmd_compare(Run& run)
{
    const auto& c = run.cfg();
    const auto q = queue_of(c);
    const auto ctx = detection_of(c);
    const auto base = bo_of(c);
    const auto n = c.count("optimizer.compare_seeds");
    std::vector<std::uint64_t> seeds(n);
    std::iota(seeds.begin(), seeds.end(), base.seed);
    const auto cmp = optimizer::compare_acquisitions(
        [&](double lambda) { return aoi::semantic_objective(lambda, q, ctx); }, q.mu, base, seeds, run.threads());

    auto rows = run.csv("", {"seed", "method", "iterations_to_1pct", "final_best", "best_lambda", "evaluations"});
    for (const auto& r : cmp.rows)
        rows.row({r.seed, r.method, r.iterations_to_threshold, r.final_best, r.best_input[0], r.evaluations});
    rows.close();

    auto traces = run.csv("traces", {"method", "seed", "evaluation", "iteration", "lambda", "observed", "best"});
    auto conv = run.csv("convergence", {"method", "evaluation", "iteration", "mean_best", "median_best", "min_best",
                                        "max_best"});
    for (std::size_t m = 0; m < cmp.methods.size(); ++m) {
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const auto& tr = cmp.traces[s][m];
            for (std::size_t i = 0; i < tr.records.size(); ++i) {
                const auto& r = tr.records[i];
                traces.row({cmp.methods[m], seeds[s], i, r.iteration, r.input[0], r.observed, r.best});
            }
        }
        const std::size_t len = cmp.traces.front()[m].records.size();
        for (std::size_t i = 0; i < len; ++i) {
            std::vector<double> b;
            for (std::size_t s = 0; s < seeds.size(); ++s)
                b.push_back(cmp.traces[s][m].records.at(i).best);
            std::sort(b.begin(), b.end());
            const double mean = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
            const double median =
                b.size() % 2 ? b[b.size() / 2] : 0.5 * (b[b.size() / 2 - 1] + b[b.size() / 2]);
            conv.row({cmp.methods[m], i, cmp.traces.front()[m].records[i].iteration, mean, median, b.front(),
                      b.back()});
        }
    }
    traces.close();
    conv.close();

    for (const auto& method : cmp.methods) {
        std::vector<double> its;
        for (const auto& r : cmp.rows)
            if (r.method == method)
                its.push_back(static_cast<double>(r.iterations_to_threshold));
        std::sort(its.begin(), its.end());
        const double median =
            its.size() % 2 ? its[its.size() / 2] : 0.5 * (its[its.size() / 2 - 1] + its[its.size() / 2]);
        run.out() << "median_iterations_" << method << ' ' << io::format_real(median) << '\n';
    }
    return ok;
}

inline int cmd_simulate_aoi(Run& run)
{
    const auto& c = run.cfg();
    const auto q = queue_of(c);
    simkit::AoiOptions o;
    o.seed = c.count("cli.seed");
    o.horizon = simkit::horizon_for_departures(q.lambda, c.real("simkit.aoi_departures"), o.warmup_fraction);
    o.max_path_points = c.count("simkit.path_points");
    const auto s = simkit::simulate_mm1_aoi(q, o);
    const double closed = aoi::aoi_violation(q);

    auto csv = run.csv("", {"lambda", "mu", "threshold_m", "departures", "violation_fraction", "ci_halfwidth",
                            "closed_form", "mean_age", "mean_system_time"});
    csv.row({q.lambda, q.mu, q.threshold_m, s.departures, s.violation_fraction, s.ci_halfwidth, closed, s.mean_age,
             s.mean_system_time});
    csv.close();
    auto path = run.csv("path", {"time", "age"});
    for (const auto& p : s.path)
        path.row({p.time, p.age});
    path.close();
    run.out() << "violation_fraction " << io::format_real(s.violation_fraction) << '\n'
              << "closed_form " << io::format_real(closed) << '\n';
    return ok;
}

inline int cmd_simulate_delay(Run& run, std::ostream& err)
{
    const auto& c = run.cfg();
    simkit::ScenarioConfig sc;
    sc.subnets = c.count("simkit.subnets");
    sc.nodes_per_subnet = c.count("simkit.nodes_per_subnet");
    sc.sound_speed_mps = c.real("simkit.sound_speed_mps");
    sc.sim_horizon = c.real("simkit.horizon");
    sc.seed = c.count("cli.seed");
    simkit::DelayOptions o;
    o.queue = queue_of(c);
    o.field = field_of(c);
    o.bo = bo_of(c);
    o.fixed_count = c.count("simkit.fixed_k");
    o.fixed_spacing_m = c.real("simkit.fixed_spacing_m");
    o.wake_period = c.real("simkit.wake_period");
    std::vector<simkit::Strategy> strategies;
    for (const auto& s : c.list("simkit.strategies"))
        strategies.push_back(simkit::parse_strategy(s));
    const auto results = simkit::simulate_delay_comparison(sc, strategies, o);

    auto series = run.csv("", {"strategy", "subnet", "update", "time", "propagation", "wake_wait", "queueing",
                               "delay"});
    auto summary = run.csv("summary", {"strategy", "ok", "samples", "mean_delay", "mean_propagation",
                                       "mean_wake_wait", "mean_queueing", "diagnostic"});
    auto layouts = run.csv("layouts", {"strategy", "subnet", "count", "nearest_m", "farthest_m"});
    bool any = false;
    for (const auto& r : results) {
        const auto name = simkit::to_string(r.strategy);
        double prop = 0.0, wait = 0.0, queue = 0.0;
        for (const auto& s : r.trace.samples) {
            series.row({name, s.subnet, s.update, s.time, s.propagation, s.wake_wait, s.queueing, s.delay()});
            prop += s.propagation;
            wait += s.wake_wait;
            queue += s.queueing;
        }
        const double n = std::max<double>(1.0, static_cast<double>(r.trace.samples.size()));
        summary.row({name, r.ok, r.trace.samples.size(), r.trace.mean_delay(), prop / n, wait / n, queue / n,
                     r.diagnostic});
        for (std::size_t s = 0; s < r.layouts.size(); ++s) {
            const auto& d = r.layouts[s].distances_m;
            layouts.row({name, s, d.size(), *std::min_element(d.begin(), d.end()),
                         *std::max_element(d.begin(), d.end())});
        }
        if (r.ok) {
            any = true;
            run.out() << "mean_delay_" << name << ' ' << io::format_real(r.trace.mean_delay()) << '\n';
        } else {
            err << "warning: " << r.diagnostic << '\n';
        }
    }
    series.close();
    summary.close();
    layouts.close();
    if (!any)
        throw Error("simulate: every strategy failed");
    return ok;
}

inline int cmd_simulate(Run& run, std::ostream& err)
{
    const auto& mode = run.cfg().text("simkit.mode");
    if (mode == "delay")
        return cmd_simulate_delay(run, err);
    if (mode == "aoi")
        return cmd_simulate_aoi(run);
    throw UsageError("simkit.mode must be 'delay' or 'aoi', got '" + mode + "'");
}

inline const std::vector<std::pair<std::string, std::string>>& commands()
{
    static const std::vector<std::pair<std::string, std::string>> c{
        {"channel", "Thorp absorption and Urick attenuation over distance"},
        {"sense", "wake-up expectation E(X) and the optimal active-sensor count"},
        {"aoi", "closed-form AoI violation probability and the semantic objective r"},
        {"place", "Bayesian optimisation of sensor count and spacing"},
        {"rate", "Bayesian optimisation of the update arrival rate"},
        {"compare", "EI vs AEI vs AEI with the MLP surrogate over several seeds"},
        {"simulate", "discrete-event delay comparison or Monte Carlo AoI"},
    };
    return c;
}

inline int dispatch(Run& run, std::ostream& err)
{
    const auto& cmd = run.command();
    if (cmd == "channel")
        return cmd_channel(run);
    if (cmd == "sense")
        return cmd_sense(run);
    if (cmd == "aoi")
        return cmd_aoi(run);
    if (cmd == "place")
        return cmd_place(run);
    if (cmd == "rate")
        return cmd_rate(run);
    if (cmd == "compare")
        return cmd_compare(run);
    if (cmd == "simulate")
        return cmd_simulate(run, err);
    throw UsageError("unknown command '" + cmd + "'");
}

// ---------------------------------------------------------------------------
// Entry point

/// Runs one CLI invocation; `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Semantics-aware sensor placement and update-rate optimisation for underwater IoT"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(0, 1);

    std::string config_path, outdir, manifest_path;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "INI config file, sections named after modules")->check(CLI::ExistingFile);
    app.add_option("--outdir", outdir, "output directory (default $AQUAPLAN_OUTDIR, then ./results)");
    app.add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
    app.add_option("--from-manifest", manifest_path, "re-run the command recorded in a run.json")
        ->check(CLI::ExistingFile);
    app.add_option("--set", sets, "override any key: section.key=value")->take_all();

    // Flag -> config key. Values stay as text so the echo reproduces them exactly.
    const std::vector<std::pair<std::string, std::string>> flag_keys{
        {"--seed", "cli.seed"},         {"--lambda", "aoi.lambda"},          {"--mu", "aoi.mu"},
        {"--M", "aoi.M"},               {"--gamma-wake", "sensing.gamma_wake"}, {"--delta", "sensing.delta"},
        {"--k", "sensing.k"},           {"--freq-khz", "channel.freq_khz"}, {"--zeta", "channel.zeta"},
        {"--iters", "optimizer.iters"}, {"--surrogate", "surrogate.kind"},  {"--acq", "acquisition.kind"},
        {"--mode", "simkit.mode"},      {"--strategies", "simkit.strategies"},
    };
    std::map<std::string, std::string> flag_values;
    for (const auto& [flag, key] : flag_keys) {
        auto* opt = app.add_option(flag, flag_values[key], std::string("sets ") + key);
        if (flag == "--surrogate")
            opt->check(CLI::IsMember({"gp", "mlp"}));
        if (flag == "--acq")
            opt->check(CLI::IsMember({"ei", "aei"}));
        if (flag == "--mode")
            opt->check(CLI::IsMember({"delay", "aoi"}));
    }
    for (const auto& [name, help] : commands())
        app.add_subcommand(name, help)->fallthrough();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return usage_error;
    }

    try {
        RunConfig cfg;
        std::string command;
        if (!manifest_path.empty()) {
            std::ifstream f(manifest_path);
            nlohmann::json m;
            try {
                m = nlohmann::json::parse(f);
            } catch (const nlohmann::json::exception& e) {
                throw UsageError("cannot parse manifest '" + manifest_path + "': " + e.what());
            }
            if (m.value("format", "") != "aquaplan.run" || !m.contains("command") || !m.contains("config"))
                throw UsageError("'" + manifest_path + "' is not an aquaplan run manifest");
            command = m.at("command").get<std::string>();
            cfg = RunConfig::from_json(m.at("config"));
        }
        const auto subs = app.get_subcommands();
        if (!subs.empty()) {
            if (!command.empty() && command != subs.front()->get_name())
                throw UsageError("manifest records '" + command + "' but '" + subs.front()->get_name() +
                                 "' was requested");
            command = subs.front()->get_name();
        }
        if (command.empty()) {
            err << "error: a command is required\n\n" << app.help();
            return usage_error;
        }
        if (!config_path.empty())
            cfg.load_ini(config_path);
        for (const auto& [flag, key] : flag_keys)
            if (app.count(flag) > 0)
                cfg.set(key, flag_values[key]);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw UsageError("--set expects section.key=value, got '" + s + "'");
            cfg.set(s.substr(0, eq), s.substr(eq + 1));
        }

        if (outdir.empty()) {
            const char* env = std::getenv("AQUAPLAN_OUTDIR");
            outdir = env && *env ? env : "results";
        }
        Run r(command, cfg, outdir, threads, out);
        int code = ok;
        try {
            code = dispatch(r, err);
        } catch (...) {
            if (!r.outputs().empty())
                r.write_manifest();
            throw;
        }
        r.write_manifest();
        return code;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return domain_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return domain_error;
    }
}

inline int run(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args);
}

} // namespace aquaplan::app
