#include "vamopt/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vamopt/channel.hpp"
#include "vamopt/core.hpp"
#include "vamopt/optimizer.hpp"
#include "vamopt/parallel.hpp"
#include "vamopt/rates.hpp"
#include "vamopt/rng.hpp"
#include "vamopt/simulator.hpp"

namespace vamopt {

namespace {

namespace fs = std::filesystem;

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot write " + path.string());
        row(header);
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
        if (!out_) throw IoError("write failed for " + path_.string());
    }

private:
    fs::path path_;
    std::ofstream out_;
};

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string omega_grid;
    std::optional<int> repetitions;
    std::optional<double> duration;
    int jobs = 1;
    bool event_log = false;
    std::string lambdas = "16,48,96";
    std::string stations = "8,16,32";
    double mc_duration = 200.0;
    int mc_replications = 10;
};

std::vector<double> parse_list(const std::string& text, const char* field) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(field, "cannot parse '" + item + "' as a number");
        }
    }
    if (out.empty()) throw ConfigError(field, "must list at least one value");
    return out;
}

Config effective_config(const Options& opt) {
    Config c = opt.config_path.empty() ? Config{} : load_config(opt.config_path);
    if (opt.seed) c.seed = *opt.seed;
    if (!opt.omega_grid.empty()) c.scenario.omega_grid = parse_list(opt.omega_grid, "omega_grid");
    if (opt.repetitions) c.scenario.repetitions = *opt.repetitions;
    if (opt.duration) c.scenario.duration = *opt.duration;
    c.validate();
    return c;
}

fs::path output_dir(const Options& opt) {
    fs::path dir = opt.out_dir;
    if (dir.empty()) {
        const char* env = std::getenv("VAMOPT_OUT_DIR");
        dir = env && *env ? env : "results";
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

void write_manifest(const fs::path& dir, const std::string& command, const Config& config, int jobs,
                    const std::vector<std::string>& outputs, double wall_seconds) {
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(config)));
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    nlohmann::ordered_json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["config_hash"] = hash;
    j["seed"] = config.seed;
    j["outputs"] = outputs;
    j["config"] = to_toml(config);
    // Everything that legitimately varies between identical runs lives here.
    j["run"] = {{"jobs", jobs}, {"finished_at", stamp}, {"wall_clock_seconds", wall_seconds}};
    std::ofstream out(dir / (command + ".manifest.json"), std::ios::binary);
    if (!out) throw IoError("cannot write manifest in " + dir.string());
    out << j.dump(2) << "\n";
}

std::vector<Population> populations_of(const Config& c) {
    if (!c.populations.empty()) return c.populations;
    return {c.scenario.population()};
}

Config with_pedestrians(Config c, int n_p) {
    c.scenario.n_p = n_p;
    return c;
}

std::vector<std::string> cmd_rates(const Config& c, const Options& opt, const fs::path& dir) {
    const RateCurve curve = analytic_rate_curve(c, opt.jobs);
    CsvWriter csv(dir / "rates.csv",
                  {"omega", "lambda_delta", "lambda_sigma", "lambda_theta", "lambda_total", "provenance"});
    for (const auto& p : curve.points) {
        csv.row({num(p.omega), num(p.lambda_position), num(p.lambda_speed), num(p.lambda_orientation),
                 num(p.lambda_total), p.speed_horizon_exhausted ? "analytic_speed_horizon_exhausted" : "analytic"});
    }
    return {"rates.csv"};
}

std::uint64_t omega_bits(double omega) {
    std::uint64_t bits;
    std::memcpy(&bits, &omega, sizeof bits);
    return bits;
}

std::vector<std::string> cmd_simulate(const Config& c, const Options& opt, const fs::path& dir) {
    const auto& grid = c.scenario.omega_grid;
    const std::size_t reps = static_cast<std::size_t>(c.scenario.repetitions);
    std::vector<EmpiricalRates> runs(grid.size() * reps);
    std::vector<std::vector<VamEvent>> logs(opt.event_log ? runs.size() : 0);
    std::vector<std::uint64_t> seeds(runs.size());
    for (std::size_t k = 0; k < runs.size(); ++k)
        seeds[k] = derive_seed(c.seed, {omega_bits(grid[k / reps]), k % reps});
    parallel_for(runs.size(), opt.jobs, [&](std::size_t k) {
        runs[k] = run_simulation(c, grid[k / reps], seeds[k], opt.event_log ? &logs[k] : nullptr);
    });
    CsvWriter csv(dir / "simulate.csv",
                  {"omega", "repetition", "seed", "lambda_delta", "lambda_sigma", "lambda_theta", "lambda_timer"});
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& r = runs[k];
        csv.row({num(r.omega), std::to_string(k % reps), std::to_string(seeds[k]), num(r.position), num(r.speed),
                 num(r.orientation), num(r.timer)});
    }
    std::vector<std::string> outputs{"simulate.csv"};
    if (opt.event_log) {
        CsvWriter ev(dir / "events.csv", {"omega", "repetition", "time", "pedestrian", "trigger"});
        for (std::size_t k = 0; k < logs.size(); ++k) {
            for (const auto& e : logs[k]) {
                ev.row({num(grid[k / reps]), std::to_string(k % reps), num(e.time), std::to_string(e.pedestrian),
                        to_string(e.trigger)});
            }
        }
        outputs.push_back("events.csv");
    }
    return outputs;
}

std::vector<std::string> cmd_validate(const Config& c, const Options& opt, const fs::path& dir, std::ostream& out) {
    const ValidationReport rep = validate_rates(c, opt.jobs);
    static const char* names[] = {"position", "speed", "orientation"};
    CsvWriter csv(dir / "validation.csv", {"omega", "trigger", "analytic", "empirical", "standard_error", "abs_error"});
    for (const auto& row : rep.rows) {
        for (std::size_t k = 0; k < 3; ++k) {
            csv.row({num(row.omega), names[k], num(row.analytic[k]), num(row.empirical[k]),
                     num(row.standard_error[k]), num(std::abs(row.analytic[k] - row.empirical[k]))});
        }
    }
    CsvWriter summary(dir / "validation_summary.csv", {"trigger", "p25", "p50", "p75", "p100"});
    const ClassErrors* classes[] = {&rep.position, &rep.speed, &rep.orientation};
    for (std::size_t k = 0; k < 3; ++k) {
        summary.row({names[k], num(classes[k]->p25), num(classes[k]->p50), num(classes[k]->p75), num(classes[k]->p100)});
        out << names[k] << " error percentiles 25/50/75/100: " << num(classes[k]->p25) << " " << num(classes[k]->p50)
            << " " << num(classes[k]->p75) << " " << num(classes[k]->p100) << "\n";
    }
    for (const auto& v : rep.conservatism_violations) out << "not conservative: " << v << "\n";
    return {"validation.csv", "validation_summary.csv"};
}

std::vector<std::string> cmd_pdr(const Config& c, const Options& opt, const fs::path& dir) {
    const auto lambdas = parse_list(opt.lambdas, "lambda-channel");
    const auto stations = parse_list(opt.stations, "stations");
    CsvWriter csv(dir / "pdr.csv", {"lambda_total_channel", "n", "tau", "pdr", "mc_pdr", "mc_ci"});
    for (double n_d : stations) {
        const int n = static_cast<int>(n_d);
        if (n < 1 || n != n_d) throw ConfigError("stations", "must be positive integers");
        for (double big_lambda : lambdas) {
            const FixedPoint fp = solve_fixed_point(big_lambda, n, c.channel);
            if (!fp.converged) throw NumericalError("channel fixed point did not converge");
            MonteCarloOptions mc;
            mc.duration = opt.mc_duration;
            mc.replications = opt.mc_replications;
            mc.seed = derive_seed(c.seed, {static_cast<std::uint64_t>(n), omega_bits(big_lambda)});
            mc.jobs = opt.jobs;
            const MonteCarloPdr sim = monte_carlo_pdr(big_lambda, n, c.channel, mc);
            csv.row({num(big_lambda), std::to_string(n), num(fp.tau), num(fp.pdr), num(sim.pdr), num(sim.half_width)});
        }
    }
    return {"pdr.csv"};
}

std::vector<std::string> cmd_channel_mc(const Config& c, const Options& opt, const fs::path& dir) {
    const auto lambdas = parse_list(opt.lambdas, "lambda-channel");
    const auto stations = parse_list(opt.stations, "stations");
    CsvWriter csv(dir / "channel_mc.csv",
                  {"lambda_total_channel", "n", "mc_pdr", "mc_ci", "attempts", "delivered", "dropped"});
    for (double n_d : stations) {
        const int n = static_cast<int>(n_d);
        if (n < 1 || n != n_d) throw ConfigError("stations", "must be positive integers");
        for (double big_lambda : lambdas) {
            MonteCarloOptions mc;
            mc.duration = opt.mc_duration;
            mc.replications = opt.mc_replications;
            mc.seed = derive_seed(c.seed, {static_cast<std::uint64_t>(n), omega_bits(big_lambda)});
            mc.jobs = opt.jobs;
            const MonteCarloPdr sim = monte_carlo_pdr(big_lambda, n, c.channel, mc);
            csv.row({num(big_lambda), std::to_string(n), num(sim.pdr), num(sim.half_width),
                     std::to_string(sim.attempts), std::to_string(sim.delivered), std::to_string(sim.dropped)});
        }
    }
    return {"channel_mc.csv"};
}

std::vector<std::string> cmd_pipg(const Config& c, const fs::path& dir) {
    const auto& s = c.scenario;
    CsvWriter csv(dir / "pipg.csv", {"n_p", "n_b", "n_c", "lambda", "pdr", "pipg"});
    for (const auto& pop : populations_of(c)) {
        const PipgCurve curve =
            pipg_curve(ChannelLoad::from(pop, s), c.channel, s.lambda_min_bound, s.lambda_max_bound, s.sweep_points);
        for (std::size_t i = 0; i < curve.lambda.size(); ++i) {
            csv.row({std::to_string(pop.n_p), std::to_string(pop.n_b), std::to_string(pop.n_c), num(curve.lambda[i]),
                     num(curve.pdr[i]), num(curve.pipg[i])});
        }
    }
    return {"pipg.csv"};
}

std::vector<std::string> cmd_optimize(const Config& c, const Options& opt, const fs::path& dir) {
    std::map<int, RateCurve> curves;
    CsvWriter csv(dir / "optimize.csv", {"n_p", "n_b", "n_c", "omega_star", "lambda_min", "pipg_at_star",
                                         "pipg_at_10hz", "local_minima"});
    for (const auto& pop : populations_of(c)) {
        auto it = curves.find(pop.n_p);
        if (it == curves.end()) it = curves.emplace(pop.n_p, analytic_rate_curve(with_pedestrians(c, pop.n_p), opt.jobs)).first;
        const OptimizationResult r = optimal_sampling(pop, it->second, c);
        csv.row({std::to_string(pop.n_p), std::to_string(pop.n_b), std::to_string(pop.n_c), num(r.omega_star),
                 num(r.lambda_min), num(r.pipg_at_star), num(r.pipg_at_10hz), std::to_string(r.local_minima)});
    }
    return {"optimize.csv"};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"VAM sampling-rate analysis for pedestrians", "vamopt"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;
    app.add_option("--config", opt.config_path, "TOML configuration file");
    app.add_option("--seed", opt.seed, "Base random seed");
    app.add_option("--out", opt.out_dir, "Output directory (default: $VAMOPT_OUT_DIR or ./results)");
    app.add_option("--omega-grid", opt.omega_grid, "Comma-separated sampling rates in Hz");
    app.add_option("--repetitions", opt.repetitions, "Simulation repetitions per sampling rate")->check(CLI::PositiveNumber);
    app.add_option("--duration", opt.duration, "Measured simulation time in seconds")->check(CLI::PositiveNumber);
    app.add_option("--jobs", opt.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

    auto* rates = app.add_subcommand("rates", "Analytic VAM rates per sampling rate");
    auto* simulate = app.add_subcommand("simulate", "Simulated VAM rates on the street scenario");
    simulate->add_flag("--event-log", opt.event_log, "Also write every generated VAM");
    auto* validate = app.add_subcommand("validate", "Analytic versus simulated rate errors");
    auto* pdr = app.add_subcommand("pdr", "Analytic and simulated packet delivery ratio");
    auto* channel_mc = app.add_subcommand("channel-mc", "Simulated packet delivery ratio only");
    for (auto* sub : {pdr, channel_mc}) {
        sub->add_option("--lambda-channel", opt.lambdas, "Comma-separated aggregate packet rates");
        sub->add_option("--stations", opt.stations, "Comma-separated station counts");
        sub->add_option("--mc-duration", opt.mc_duration, "Simulated seconds per replication")->check(CLI::PositiveNumber);
        sub->add_option("--mc-replications", opt.mc_replications, "Independent replications")->check(CLI::Range(2, 100000));
    }
    auto* pipg = app.add_subcommand("pipg", "Expected pedestrian inter-packet gap sweep");
    auto* optimize = app.add_subcommand("optimize", "Sampling rate that minimizes the pedestrian inter-packet gap");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitConfig;
    }

    try {
        const auto start = std::chrono::steady_clock::now();
        const Config config = effective_config(opt);
        const fs::path dir = output_dir(opt);
        std::string command;
        std::vector<std::string> outputs;
        if (rates->parsed()) {
            command = "rates";
            outputs = cmd_rates(config, opt, dir);
        } else if (simulate->parsed()) {
            command = "simulate";
            outputs = cmd_simulate(config, opt, dir);
        } else if (validate->parsed()) {
            command = "validate";
            outputs = cmd_validate(config, opt, dir, out);
        } else if (pdr->parsed()) {
            command = "pdr";
            outputs = cmd_pdr(config, opt, dir);
        } else if (channel_mc->parsed()) {
            command = "channel-mc";
            outputs = cmd_channel_mc(config, opt, dir);
        } else if (pipg->parsed()) {
            command = "pipg";
            outputs = cmd_pipg(config, dir);
        } else if (optimize->parsed()) {
            command = "optimize";
            outputs = cmd_optimize(config, opt, dir);
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_manifest(dir, command, config, resolve_jobs(opt.jobs), outputs, wall);
        for (const auto& o : outputs) out << "wrote " << (dir / o).string() << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << "\n";
        return kExitConfig;
    }
}

}  // namespace vamopt
