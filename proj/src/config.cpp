#include "vamopt/core.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

namespace vamopt {

namespace {

void require(bool ok, const char* field, const std::string& message) {
    if (!ok) throw ConfigError(field, message);
}

void require_finite_positive(double v, const char* field) {
    require(std::isfinite(v) && v > 0.0, field, "must be a finite positive number");
}

void require_finite_nonneg(double v, const char* field) {
    require(std::isfinite(v) && v >= 0.0, field, "must be a finite non-negative number");
}

std::string join(const std::string& prefix, std::string_view key) {
    return prefix.empty() ? std::string(key) : prefix + "." + std::string(key);
}

class TableReader {
public:
    TableReader(const toml::table& table, std::string prefix)
        : table_(table), prefix_(std::move(prefix)) {}

    void read(std::string_view key, double& out) {
        seen_.insert(std::string(key));
        const toml::node* node = table_.get(key);
        if (!node) return;
        if (auto v = node->value_exact<double>()) {
            out = *v;
        } else if (auto i = node->value_exact<int64_t>()) {
            out = static_cast<double>(*i);
        } else {
            throw ConfigError(join(prefix_, key), "expected a number");
        }
        require(std::isfinite(out), join(prefix_, key).c_str(), "must be finite");
    }

    void read(std::string_view key, std::optional<double>& out) {
        seen_.insert(std::string(key));
        if (!table_.get(key)) return;
        double v = 0.0;
        seen_.erase(std::string(key));
        read(key, v);
        out = v;
    }

    void read(std::string_view key, int& out) {
        seen_.insert(std::string(key));
        const toml::node* node = table_.get(key);
        if (!node) return;
        auto i = node->value_exact<int64_t>();
        if (!i) throw ConfigError(join(prefix_, key), "expected an integer");
        if (*i < std::numeric_limits<int>::min() || *i > std::numeric_limits<int>::max())
            throw ConfigError(join(prefix_, key), "integer out of range");
        out = static_cast<int>(*i);
    }

    void read(std::string_view key, std::uint64_t& out) {
        seen_.insert(std::string(key));
        const toml::node* node = table_.get(key);
        if (!node) return;
        auto i = node->value_exact<int64_t>();
        if (!i || *i < 0) throw ConfigError(join(prefix_, key), "expected a non-negative integer");
        out = static_cast<std::uint64_t>(*i);
    }

    void read(std::string_view key, std::vector<double>& out) {
        seen_.insert(std::string(key));
        const toml::node* node = table_.get(key);
        if (!node) return;
        const toml::array* arr = node->as_array();
        if (!arr) throw ConfigError(join(prefix_, key), "expected an array of numbers");
        out.clear();
        for (const auto& el : *arr) {
            if (auto v = el.value_exact<double>()) {
                out.push_back(*v);
            } else if (auto i = el.value_exact<int64_t>()) {
                out.push_back(static_cast<double>(*i));
            } else {
                throw ConfigError(join(prefix_, key), "expected an array of numbers");
            }
        }
    }

    void mark(std::string_view key) { seen_.insert(std::string(key)); }

    void reject_unknown() const {
        for (const auto& [k, v] : table_) {
            if (!seen_.count(std::string(k.str())))
                throw ConfigError(join(prefix_, k.str()), "unknown key");
        }
    }

private:
    const toml::table& table_;
    std::string prefix_;
    std::set<std::string> seen_;
};

const toml::table* sub_table(const toml::table& root, std::string_view key) {
    const toml::node* node = root.get(key);
    if (!node) return nullptr;
    const toml::table* t = node->as_table();
    if (!t) throw ConfigError(std::string(key), "expected a table");
    return t;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

}  // namespace

std::vector<double> default_omega_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 10; ++i) grid.push_back(i / 10.0);
    for (int i = 3; i <= 20; ++i) grid.push_back(i / 2.0);
    return grid;
}

void VamThresholds::validate() const {
    require_finite_positive(delta_position, "thresholds.delta_position");
    require_finite_nonneg(delta_speed, "thresholds.delta_speed");
    require_finite_nonneg(delta_orientation_deg, "thresholds.delta_orientation_deg");
    require(delta_orientation_deg <= 180.0, "thresholds.delta_orientation_deg",
            "must not exceed 180 degrees");
    require_finite_nonneg(t_gen_min, "thresholds.t_gen_min");
    require_finite_positive(t_gen_max, "thresholds.t_gen_max");
    require(t_gen_min <= t_gen_max, "thresholds.t_gen_min", "must not exceed thresholds.t_gen_max");
}

void GnmParams::validate() const {
    require_finite_positive(tau, "gnm.tau");
    require_finite_positive(v_desired, "gnm.v_desired");
    require_finite_positive(h, "gnm.h");
    require(h < tau, "gnm.h", "must be smaller than gnm.tau");
    require_finite_positive(w_bar, "gnm.w_bar");
    require_finite_positive(v_max, "gnm.v_max");
    require_finite_positive(p, "gnm.p");
    require_finite_positive(r_h, "gnm.r_h");
    require_finite_positive(kappa, "gnm.kappa");
    require_finite_positive(r_s, "gnm.r_s");
    require(std::isfinite(x0) && x0 > -1.0 && x0 < 1.0, "gnm.x0", "must lie in (-1, 1)");
    require_finite_positive(p_b, "gnm.p_b");
    require_finite_positive(r_b, "gnm.r_b");
    require(std::isfinite(eps_g) && eps_g > 0.0 && eps_g < 1.0, "gnm.eps_g", "must lie in (0, 1)");
}

void ChannelParams::validate() const {
    require(w0 >= 1, "channel.w0", "must be at least 1");
    require_finite_positive(slot_time, "channel.slot_time");
    require_finite_nonneg(aifs_delta, "channel.aifs_delta");
    require_finite_positive(frame_time, "channel.frame_time");
}

double ScenarioConfig::density() const {
    if (mu) return *mu;
    return static_cast<double>(n_p) / (2.0 * street_length * sidewalk_width);
}

void ScenarioConfig::validate() const {
    require(n_p >= 1, "n_p", "must be at least 1");
    require(n_b >= 0, "n_b", "must be non-negative");
    require(n_c >= 0, "n_c", "must be non-negative");
    require_finite_nonneg(lambda_b, "lambda_b");
    require_finite_nonneg(lambda_c, "lambda_c");
    require_finite_positive(street_length, "street_length");
    require_finite_positive(sidewalk_width, "sidewalk_width");
    require_finite_nonneg(road_width, "road_width");
    if (mu) require_finite_nonneg(*mu, "mu");
    require(!omega_grid.empty(), "omega_grid", "must not be empty");
    for (std::size_t i = 0; i < omega_grid.size(); ++i) {
        require(std::isfinite(omega_grid[i]) && omega_grid[i] > 0.0, "omega_grid",
                "entries must be finite and positive");
        if (i > 0)
            require(omega_grid[i] > omega_grid[i - 1], "omega_grid", "must be strictly increasing");
    }
    require_finite_positive(lambda_min_bound, "lambda_min_bound");
    require(std::isfinite(lambda_max_bound) && lambda_max_bound > lambda_min_bound,
            "lambda_max_bound", "must exceed lambda_min_bound");
    require(sweep_points >= 3, "sweep_points", "must be at least 3");
    require_finite_nonneg(d_min, "d_min");
    require(std::isfinite(d_max) && d_max > d_min, "d_max", "must exceed d_min");
    require(d_max <= sidewalk_width + 1e-12, "d_max", "must not exceed sidewalk_width");
    require_finite_nonneg(warmup, "warmup");
    require_finite_positive(duration, "duration");
    require(repetitions >= 1, "repetitions", "must be at least 1");
    require(speed_realizations >= 1, "speed_realizations", "must be at least 1");
    require_finite_positive(speed_horizon, "speed_horizon");
}

void Config::validate() const {
    thresholds.validate();
    gnm.validate();
    channel.validate();
    scenario.validate();
    if (thresholds.t_gen_min > 0.0) {
        require(scenario.omega_grid.back() <= 1.0 / thresholds.t_gen_min * (1.0 + 1e-12),
                "omega_grid", "sampling rates above 1/thresholds.t_gen_min are not supported");
    }
    for (const auto& pop : populations) {
        require(pop.n_p >= 1, "population.n_p", "must be at least 1");
        require(pop.n_b >= 0, "population.n_b", "must be non-negative");
        require(pop.n_c >= 0, "population.n_c", "must be non-negative");
    }
}

Config parse_config(std::string_view toml_text) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << e.description() << " at line " << e.source().begin.line;
        throw ConfigError("<toml>", msg.str());
    }

    Config c;
    TableReader top(root, "");
    auto& s = c.scenario;
    top.read("seed", c.seed);
    top.read("n_p", s.n_p);
    top.read("n_b", s.n_b);
    top.read("n_c", s.n_c);
    top.read("lambda_b", s.lambda_b);
    top.read("lambda_c", s.lambda_c);
    top.read("street_length", s.street_length);
    top.read("sidewalk_width", s.sidewalk_width);
    top.read("road_width", s.road_width);
    top.read("mu", s.mu);
    top.read("omega_grid", s.omega_grid);
    top.read("lambda_min_bound", s.lambda_min_bound);
    top.read("lambda_max_bound", s.lambda_max_bound);
    top.read("sweep_points", s.sweep_points);
    top.read("d_min", s.d_min);
    top.read("d_max", s.d_max);
    top.read("warmup", s.warmup);
    top.read("duration", s.duration);
    top.read("repetitions", s.repetitions);
    top.read("speed_realizations", s.speed_realizations);
    top.read("speed_horizon", s.speed_horizon);
    top.mark("thresholds");
    top.mark("gnm");
    top.mark("channel");
    top.mark("population");
    top.reject_unknown();

    if (const auto* t = sub_table(root, "thresholds")) {
        TableReader r(*t, "thresholds");
        auto& th = c.thresholds;
        r.read("delta_position", th.delta_position);
        r.read("delta_speed", th.delta_speed);
        r.read("delta_orientation_deg", th.delta_orientation_deg);
        r.read("t_gen_min", th.t_gen_min);
        r.read("t_gen_max", th.t_gen_max);
        r.reject_unknown();
    }
    if (const auto* t = sub_table(root, "gnm")) {
        TableReader r(*t, "gnm");
        auto& g = c.gnm;
        r.read("tau", g.tau);
        r.read("v_desired", g.v_desired);
        r.read("h", g.h);
        r.read("w_bar", g.w_bar);
        r.read("v_max", g.v_max);
        r.read("p", g.p);
        r.read("r_h", g.r_h);
        r.read("kappa", g.kappa);
        r.read("r_s", g.r_s);
        r.read("x0", g.x0);
        r.read("p_b", g.p_b);
        r.read("r_b", g.r_b);
        r.read("eps_g", g.eps_g);
        r.reject_unknown();
    }
    if (const auto* t = sub_table(root, "channel")) {
        TableReader r(*t, "channel");
        auto& ch = c.channel;
        r.read("w0", ch.w0);
        r.read("slot_time", ch.slot_time);
        r.read("aifs_delta", ch.aifs_delta);
        r.read("frame_time", ch.frame_time);
        r.reject_unknown();
    }
    if (const toml::node* node = root.get("population")) {
        const toml::array* arr = node->as_array();
        if (!arr) throw ConfigError("population", "expected an array of tables");
        for (const auto& el : *arr) {
            const toml::table* t = el.as_table();
            if (!t) throw ConfigError("population", "expected an array of tables");
            TableReader r(*t, "population");
            Population pop;
            r.read("n_p", pop.n_p);
            r.read("n_b", pop.n_b);
            r.read("n_c", pop.n_c);
            r.reject_unknown();
            c.populations.push_back(pop);
        }
    }
    c.validate();
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string to_toml(const Config& c) {
    std::ostringstream o;
    const auto& s = c.scenario;
    o << "seed = " << c.seed << "\n";
    o << "n_p = " << s.n_p << "\n";
    o << "n_b = " << s.n_b << "\n";
    o << "n_c = " << s.n_c << "\n";
    o << "lambda_b = " << fmt_double(s.lambda_b) << "\n";
    o << "lambda_c = " << fmt_double(s.lambda_c) << "\n";
    o << "street_length = " << fmt_double(s.street_length) << "\n";
    o << "sidewalk_width = " << fmt_double(s.sidewalk_width) << "\n";
    o << "road_width = " << fmt_double(s.road_width) << "\n";
    if (s.mu) o << "mu = " << fmt_double(*s.mu) << "\n";
    o << "omega_grid = [";
    for (std::size_t i = 0; i < s.omega_grid.size(); ++i)
        o << (i ? ", " : "") << fmt_double(s.omega_grid[i]);
    o << "]\n";
    o << "lambda_min_bound = " << fmt_double(s.lambda_min_bound) << "\n";
    o << "lambda_max_bound = " << fmt_double(s.lambda_max_bound) << "\n";
    o << "sweep_points = " << s.sweep_points << "\n";
    o << "d_min = " << fmt_double(s.d_min) << "\n";
    o << "d_max = " << fmt_double(s.d_max) << "\n";
    o << "warmup = " << fmt_double(s.warmup) << "\n";
    o << "duration = " << fmt_double(s.duration) << "\n";
    o << "repetitions = " << s.repetitions << "\n";
    o << "speed_realizations = " << s.speed_realizations << "\n";
    o << "speed_horizon = " << fmt_double(s.speed_horizon) << "\n";

    const auto& th = c.thresholds;
    o << "\n[thresholds]\n";
    o << "delta_position = " << fmt_double(th.delta_position) << "\n";
    o << "delta_speed = " << fmt_double(th.delta_speed) << "\n";
    o << "delta_orientation_deg = " << fmt_double(th.delta_orientation_deg) << "\n";
    o << "t_gen_min = " << fmt_double(th.t_gen_min) << "\n";
    o << "t_gen_max = " << fmt_double(th.t_gen_max) << "\n";

    const auto& g = c.gnm;
    o << "\n[gnm]\n";
    o << "tau = " << fmt_double(g.tau) << "\n";
    o << "v_desired = " << fmt_double(g.v_desired) << "\n";
    o << "h = " << fmt_double(g.h) << "\n";
    o << "w_bar = " << fmt_double(g.w_bar) << "\n";
    o << "v_max = " << fmt_double(g.v_max) << "\n";
    o << "p = " << fmt_double(g.p) << "\n";
    o << "r_h = " << fmt_double(g.r_h) << "\n";
    o << "kappa = " << fmt_double(g.kappa) << "\n";
    o << "r_s = " << fmt_double(g.r_s) << "\n";
    o << "x0 = " << fmt_double(g.x0) << "\n";
    o << "p_b = " << fmt_double(g.p_b) << "\n";
    o << "r_b = " << fmt_double(g.r_b) << "\n";
    o << "eps_g = " << fmt_double(g.eps_g) << "\n";

    const auto& ch = c.channel;
    o << "\n[channel]\n";
    o << "w0 = " << ch.w0 << "\n";
    o << "slot_time = " << fmt_double(ch.slot_time) << "\n";
    o << "aifs_delta = " << fmt_double(ch.aifs_delta) << "\n";
    o << "frame_time = " << fmt_double(ch.frame_time) << "\n";

    for (const auto& pop : c.populations) {
        o << "\n[[population]]\n";
        o << "n_p = " << pop.n_p << "\nn_b = " << pop.n_b << "\nn_c = " << pop.n_c << "\n";
    }
    return o.str();
}

std::uint64_t config_hash(const Config& config) {
    const std::string text = to_toml(config);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace vamopt
