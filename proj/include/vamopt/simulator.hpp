#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vamopt/core.hpp"
#include "vamopt/gnm.hpp"
#include "vamopt/rates.hpp"

namespace vamopt {

enum class TriggerClass { None = 0, Position = 1, Speed = 2, Orientation = 3, Timer = 4 };

const char* to_string(TriggerClass c);

struct Observation {
    Vec2 position;
    double speed = 0.0;
    double heading = 0.0;  // radians
    double time = 0.0;
};

// Classifies a sample against the last transmitted VAM. Position has priority
// over speed, speed over orientation and orientation over the timer.
TriggerClass vam_trigger_check(const Observation& now, const Observation& last, const VamThresholds& thresholds);

struct StreetGeometry {
    double length = 2000.0;
    double sidewalk_width = 2.0;
    double road_width = 7.0;

    // Lower y coordinate of sidewalk 0 or 1.
    double sidewalk_base(int sidewalk) const { return sidewalk == 0 ? 0.0 : sidewalk_width + road_width; }
};

struct VamEvent {
    double time = 0.0;
    int pedestrian = 0;
    TriggerClass trigger = TriggerClass::None;
};

struct SimPedestrian {
    PedestrianState state;
    int sidewalk = 0;
    int direction = 1;
    double next_sample = 0.0;
    Vec2 previous_sample;
    bool has_previous_sample = false;
    Observation last_vam;
    bool has_vam = false;
};

struct Simulation {
    StreetGeometry geometry;
    GnmParams gnm;
    VamThresholds thresholds;
    double omega = 10.0;
    double time = 0.0;
    double measure_start = 0.0;
    double measure_end = 0.0;
    std::vector<SimPedestrian> pedestrians;
    // counts[c] for the trigger classes inside the measurement window.
    std::array<std::uint64_t, 5> counts{};
    std::vector<VamEvent>* event_log = nullptr;
};

// Places n_p pedestrians on the two sidewalks, half of each sidewalk walking in
// each direction, with uniformly random longitudinal and lateral positions.
Simulation init_street(const Config& config, double omega, std::uint64_t seed);

// Advances every pedestrian by one Euler step and processes the samples that
// fall inside the step.
void step(Simulation& sim);

struct EmpiricalRates {
    double omega = 0.0;
    double position = 0.0;
    double speed = 0.0;
    double orientation = 0.0;
    double timer = 0.0;
    std::array<std::uint64_t, 5> counts{};
};

EmpiricalRates run_simulation(const Config& config, double omega, std::uint64_t seed,
                              std::vector<VamEvent>* event_log = nullptr);

// Linear-interpolation percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

struct ClassErrors {
    std::vector<double> errors;
    double p25 = 0.0, p50 = 0.0, p75 = 0.0, p100 = 0.0;
};

struct ValidationRow {
    double omega = 0.0;
    std::array<double, 3> analytic{};        // position, speed, orientation
    std::array<double, 3> empirical{};       // mean over repetitions
    std::array<double, 3> standard_error{};  // of the mean
};

struct ValidationReport {
    std::vector<ValidationRow> rows;
    ClassErrors position, speed, orientation;
    // Rows with omega above 0.1 Hz where some analytic rate falls more than two
    // standard errors below the empirical mean.
    std::vector<std::string> conservatism_violations;
};

// Compares analytic and simulated rates over the scenario omega grid.
ValidationReport validate_rates(const Config& config, int jobs = 1);

}  // namespace vamopt
