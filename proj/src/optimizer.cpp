#include "vamopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vamopt {

ChannelLoad ChannelLoad::from(const Population& population, const ScenarioConfig& scenario) {
    ChannelLoad load;
    load.n_p = population.n_p;
    load.stations = population.stations();
    load.background_rate = population.n_b * scenario.lambda_b + population.n_c * scenario.lambda_c;
    return load;
}

std::vector<double> log_grid(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2) throw std::invalid_argument("log_grid requires 0 < lo < hi");
    std::vector<double> g(static_cast<std::size_t>(points));
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (points - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

double pipg_pdr(const ChannelLoad& load, double lambda, const ChannelParams& channel,
                const FixedPointOptions& options) {
    if (!(lambda > 0.0)) throw std::invalid_argument("pIPG requires lambda > 0");
    if (load.n_p < 1 || load.stations < 1) throw std::invalid_argument("pIPG requires pedestrians");
    return expected_pdr(load.aggregate_rate(lambda), load.stations, channel, options);
}

double expected_pipg(const ChannelLoad& load, double lambda, const ChannelParams& channel,
                     const FixedPointOptions& options) {
    const double p = pipg_pdr(load, lambda, channel, options);
    if (!(p > 0.0)) return std::numeric_limits<double>::infinity();
    return 1.0 / (load.n_p * lambda * p);
}

PipgCurve pipg_curve(const ChannelLoad& load, const ChannelParams& channel, double lo, double hi, int points) {
    PipgCurve c;
    c.lambda = log_grid(lo, hi, points);
    for (double l : c.lambda) {
        const double p = pipg_pdr(load, l, channel);
        c.pdr.push_back(p);
        c.pipg.push_back(p > 0.0 ? 1.0 / (load.n_p * l * p) : std::numeric_limits<double>::infinity());
    }
    return c;
}

BrentResult brent_minimize(const std::function<double(double)>& f, double a, double b, double rel_tol,
                           int max_iterations) {
    if (!(b > a)) throw std::invalid_argument("brent_minimize requires a < b");
    const double lo0 = a, hi0 = b;
    const double golden = 0.3819660112501051;
    const double abs_tol = 1e-12;
    double x = a + golden * (b - a), w = x, v = x;
    double fx = f(x), fw = fx, fv = fx;
    double d = 0.0, e = 0.0;
    BrentResult res;
    for (int it = 1; it <= max_iterations; ++it) {
        res.iterations = it;
        const double m = 0.5 * (a + b);
        const double tol1 = rel_tol * std::abs(x) + abs_tol;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) {
            res.converged = true;
            break;
        }
        bool golden_step = true;
        if (std::abs(e) > tol1) {
            double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double e_prev = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = (m >= x) ? tol1 : -tol1;
                golden_step = false;
            }
        }
        if (golden_step) {
            e = (x >= m) ? a - x : b - x;
            d = golden * e;
        }
        const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0.0 ? tol1 : -tol1);
        const double fu = f(u);
        if (fu <= fx) {
            if (u >= x) a = x; else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    res.x = x;
    res.fx = fx;
    const double f_lo = f(lo0), f_hi = f(hi0);
    if (f_lo < res.fx) { res.x = lo0; res.fx = f_lo; }
    if (f_hi < res.fx) { res.x = hi0; res.fx = f_hi; }
    return res;
}

namespace {

std::vector<std::size_t> grid_extrema(const std::vector<double>& y, bool maxima) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        const bool is_max = y[i] > y[i - 1] && y[i] > y[i + 1];
        const bool is_min = y[i] < y[i - 1] && y[i] < y[i + 1];
        if (maxima ? is_max : is_min) idx.push_back(i);
    }
    return idx;
}

}  // namespace

Bracket bracket_interior_max(const ChannelLoad& load, const ChannelParams& channel, double lo, double hi,
                             int points) {
    const PipgCurve c = pipg_curve(load, channel, lo, hi, points);
    const auto maxima = grid_extrema(c.pipg, true);
    Bracket b;
    if (maxima.empty()) {
        b.left = lo;
        b.right = hi;
        b.peak = std::numeric_limits<double>::quiet_NaN();
        return b;
    }
    const std::size_t i = maxima.back();
    b.found = true;
    b.left = c.lambda[i - 1];
    b.right = c.lambda[i + 1];
    const auto refined = brent_minimize([&](double l) { return -expected_pipg(load, l, channel); }, b.left,
                                        b.right);
    b.peak = refined.x;
    return b;
}

GradientCheck pipg_gradient_check(const ChannelLoad& load, double lambda, const ChannelParams& channel,
                                  double rel_step) {
    FixedPointOptions precise;
    precise.tolerance = 1e-15;
    precise.max_iterations = 200000;
    const double hstep = rel_step * lambda;
    GradientCheck g;
    g.lambda = lambda;
    g.pdr = pipg_pdr(load, lambda, channel, precise);
    g.pipg = 1.0 / (load.n_p * lambda * g.pdr);
    const double p_hi = pipg_pdr(load, lambda + hstep, channel, precise);
    const double p_lo = pipg_pdr(load, lambda - hstep, channel, precise);
    g.dpdr = (p_hi - p_lo) / (2.0 * hstep);
    const double q_hi = 1.0 / (load.n_p * (lambda + hstep) * p_hi);
    const double q_lo = 1.0 / (load.n_p * (lambda - hstep) * p_lo);
    g.dpipg = (q_hi - q_lo) / (2.0 * hstep);
    g.balance = g.pdr + lambda * g.dpdr;
    g.relative_balance = std::abs(g.balance) / g.pdr;
    return g;
}

std::vector<Extremum> interior_extrema(const ChannelLoad& load, const ChannelParams& channel, double lo,
                                       double hi, int points) {
    const PipgCurve c = pipg_curve(load, channel, lo, hi, points);
    std::vector<Extremum> out;
    for (std::size_t i = 1; i + 1 < c.pipg.size(); ++i) {
        const bool is_max = c.pipg[i] > c.pipg[i - 1] && c.pipg[i] > c.pipg[i + 1];
        const bool is_min = c.pipg[i] < c.pipg[i - 1] && c.pipg[i] < c.pipg[i + 1];
        if (!is_max && !is_min) continue;
        const double sign = is_min ? 1.0 : -1.0;
        const auto refined = brent_minimize(
            [&](double l) { return sign * expected_pipg(load, l, channel); }, c.lambda[i - 1], c.lambda[i + 1]);
        Extremum e;
        e.kind = is_min ? ExtremumKind::Minimum : ExtremumKind::Maximum;
        e.lambda = refined.x;
        e.pipg = sign * refined.fx;
        e.check = pipg_gradient_check(load, e.lambda, channel);
        out.push_back(e);
    }
    return out;
}

OptimizationResult optimal_sampling(const Population& population, const RateCurve& rates, const Config& config) {
    if (rates.points.empty()) throw std::invalid_argument("optimal_sampling requires a rate curve");
    const auto& s = config.scenario;
    const ChannelLoad load = ChannelLoad::from(population, s);
    const auto pipg = [&](double l) { return expected_pipg(load, l, config.channel); };

    OptimizationResult res;
    res.population = population;
    res.bracket = bracket_interior_max(load, config.channel, s.lambda_min_bound, s.lambda_max_bound, s.sweep_points);
    if (res.bracket.found) {
        const auto left = brent_minimize(pipg, s.lambda_min_bound, res.bracket.peak);
        const auto right = brent_minimize(pipg, res.bracket.peak, s.lambda_max_bound);
        const auto& best = left.fx <= right.fx ? left : right;
        res.lambda_min = best.x;
        res.pipg_min = best.fx;
    } else {
        const auto only = brent_minimize(pipg, s.lambda_min_bound, s.lambda_max_bound);
        res.lambda_min = only.x;
        res.pipg_min = only.fx;
    }

    const PipgCurve sweep = pipg_curve(load, config.channel, s.lambda_min_bound, s.lambda_max_bound, s.sweep_points);
    res.local_minima = static_cast<int>(grid_extrema(sweep.pipg, false).size());

    std::size_t star = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rates.points.size(); ++i) {
        const double l = rates.points[i].lambda_total;
        res.grid_pipg.push_back(l > 0.0 ? pipg(l) : std::numeric_limits<double>::infinity());
        const double gap = std::abs(res.lambda_min - l);
        if (gap < best_gap || (gap == best_gap && res.grid_pipg[i] < res.grid_pipg[star])) {
            best_gap = gap;
            star = i;
        }
    }
    const auto grid_best = static_cast<std::size_t>(
        std::min_element(res.grid_pipg.begin(), res.grid_pipg.end()) - res.grid_pipg.begin());
    if (res.grid_pipg[grid_best] < res.grid_pipg[star] * (1.0 - 1e-12)) {
        star = grid_best;
        res.grid_polished = true;
    }
    res.omega_star = rates.points[star].omega;
    res.lambda_at_star = rates.points[star].lambda_total;
    res.pipg_at_star = res.grid_pipg[star];
    res.pipg_at_10hz = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < rates.points.size(); ++i) {
        if (std::abs(rates.points[i].omega - 10.0) < 1e-9) res.pipg_at_10hz = res.grid_pipg[i];
    }
    return res;
}

}  // namespace vamopt
