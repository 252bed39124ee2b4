#pragma once

#include "dpe/params.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpe {

// Per-parameter-set memo so observables that share a simulation (Monte Carlo
// mean and std, for example) run it once.
using EvalCache = std::map<std::string, double>;
using Observable = std::function<double(const ModelParams&, EvalCache&)>;

struct CalibrationTarget {
    std::string name;
    Observable observe;
    double target = 0.0;
    double tolerance = 0.05;  // relative acceptance band
    double weight = 1.0;
    std::string unit;  // display unit for the report
    double unit_scale = 1.0;
};

struct FreeParameter {
    std::string name;
    std::function<double(const ModelParams&)> get;
    std::function<void(ModelParams&, double)> set;
    double lo = 0.0;
    double hi = 0.0;
    bool log_scale = false;
};

struct CalibrationOptions {
    int max_evaluations = 4000;
    int restarts = 2;
    double simplex_tol = 1e-7;
    // Weighted error above which calibration is reported as diverged.
    double max_weighted_error = 25.0;
};

struct ReportRow {
    std::string name;
    std::string unit;
    double target = 0.0;
    double achieved = 0.0;
    double rel_error = 0.0;
    double tolerance = 0.0;
    double weight = 0.0;
    bool within = false;
};

struct CalibrationResult {
    ModelParams params;
    std::vector<ReportRow> report;
    double weighted_error = 0.0;
    int evaluations = 0;
};

class CalibrationDiverged : public std::runtime_error {
public:
    CalibrationDiverged(const std::string& what, CalibrationResult r)
        : std::runtime_error(what), result(std::move(r)) {}
    CalibrationResult result;
};

/// sum over targets of weight * ((achieved - target) / (target * tolerance))^2
double weighted_error(const std::vector<CalibrationTarget>& targets, const ModelParams& p);
std::vector<ReportRow> evaluate_targets(const std::vector<CalibrationTarget>& targets, const ModelParams& p);

/// Nelder-Mead over the free parameters. Log-scale parameters are searched in
/// log space; leaving [lo, hi] is penalized. Throws CalibrationDiverged when the
/// best weighted error exceeds opts.max_weighted_error.
CalibrationResult calibrate(const std::vector<CalibrationTarget>& targets, const ModelParams& initial,
                            const std::vector<FreeParameter>& free, const CalibrationOptions& opts = {});

/// READ, SET, Monte Carlo, pulse-width and SET-power endpoints used to build
/// the shipped configuration. Monte Carlo observables use `mc_n` samples with
/// a fixed seed so successive evaluations share random numbers.
std::vector<CalibrationTarget> reference_targets(std::size_t mc_n = 200, std::uint64_t mc_seed = 7);

/// Transistor vth/kp/lambda per role, memristor a_rate/v0, READ supply and the
/// shared variation magnitudes.
std::vector<FreeParameter> default_free_parameters();

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);

}  // namespace dpe
