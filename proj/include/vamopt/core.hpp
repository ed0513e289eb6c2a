#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vamopt {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr double kPi = 3.14159265358979323846;

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// VAM generation thresholds (metres, m/s, degrees, seconds).
struct VamThresholds {
    double delta_position = 4.0;
    double delta_speed = 0.5;
    double delta_orientation_deg = 4.0;
    double t_gen_min = 0.1;
    double t_gen_max = 5.0;

    void validate() const;
};

// Generalized centrifugal-force model parameters. Lengths in metres,
// times in seconds, kappa multiplies the relative angle in radians.
struct GnmParams {
    double tau = 0.5;
    double v_desired = 1.34;
    double h = 0.05;
    double w_bar = 1.34;
    double v_max = 1.389;

    double p = 3.59;
    double r_h = 0.7;
    double kappa = 0.6;
    double r_s = 0.03;
    double x0 = 0.3;

    double p_b = 20.1;
    double r_b = 0.25;

    double eps_g = 0.25;

    void validate() const;
};

// 802.11p broadcast channel, durations in seconds.
struct ChannelParams {
    int w0 = 15;
    double slot_time = 13e-6;
    double aifs_delta = 110e-6;
    double frame_time = 467.424e-6;

    double busy_time() const { return aifs_delta + frame_time; }
    void validate() const;
};

// {0.1, 0.2, ..., 1.0} followed by {1.5, 2.0, ..., 10.0} Hz.
std::vector<double> default_omega_grid();

struct Population {
    int n_p = 16;
    int n_b = 0;
    int n_c = 0;

    int stations() const { return n_p + n_b + n_c; }
    bool operator==(const Population&) const = default;
};

struct ScenarioConfig {
    int n_p = 16;
    int n_b = 0;
    int n_c = 0;
    double lambda_b = 1.0;
    double lambda_c = 3.0;

    double street_length = 2000.0;
    double sidewalk_width = 2.0;
    double road_width = 7.0;
    std::optional<double> mu;

    std::vector<double> omega_grid = default_omega_grid();
    double lambda_min_bound = 1e-3;
    double lambda_max_bound = 5.0;
    int sweep_points = 1000;

    double d_min = 0.2;
    double d_max = 2.0;

    double warmup = 100.0;
    double duration = 300.0;
    int repetitions = 5;
    int speed_realizations = 10000;
    double speed_horizon = 120.0;

    Population population() const { return {n_p, n_b, n_c}; }
    // Pedestrians per square metre of walkable area.
    double density() const;
    void validate() const;
};

struct Config {
    ScenarioConfig scenario;
    VamThresholds thresholds;
    GnmParams gnm;
    ChannelParams channel;
    std::vector<Population> populations;
    std::uint64_t seed = 1;

    void validate() const;
};

Config parse_config(std::string_view toml_text);
Config load_config(const std::filesystem::path& path);
std::string to_toml(const Config& config);
std::uint64_t config_hash(const Config& config);

}  // namespace vamopt
